use invdens::interval::Interval;
use invdens::scalar::Scalar;
use invdens::ExactRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod common;

use common::{arithmetic_violations, interior, q};

fn encloses<F: Scalar>(iv: Interval<F>, exact: &ExactRational) -> bool {
    q(iv.lo.as_f64()) <= *exact && *exact <= q(iv.hi.as_f64())
}

#[test]
fn arithmetic_contains_rational_result() {
    assert_eq!(arithmetic_violations(1, 100_000), 0);
}

#[test]
fn single_precision_arithmetic_contains_rational_result() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..20_000 {
        let a = rng.gen_range(-100.0f32..100.0);
        let b = rng.gen_range(-100.0f32..100.0);
        let (x, y) = (Interval::point(a), Interval::point(b));
        let (qa, qb) = (q(a as f64), q(b as f64));
        assert!(encloses(x + y, &(&qa + &qb)));
        assert!(encloses(x - y, &(&qa - &qb)));
        assert!(encloses(x * y, &(&qa * &qb)));
        if b != 0.0 {
            assert!(encloses(x.div(y).unwrap(), &(&qa / &qb)));
        }
    }
}

#[test]
fn transcendentals_contain_sampled_values() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20_000 {
        let lo = rng.gen_range(-20.0..20.0);
        let x = Interval::new(lo, lo + rng.gen_range(0.0..4.0));
        let t = interior(&mut rng, x);
        assert!(x.sin().contains(t.sin()), "sin {x} at {t}");
        assert!(x.cos().contains(t.cos()), "cos {x} at {t}");
        let p = Interval::new(x.lo.abs() + 1e-3, x.lo.abs() + 1e-3 + x.width());
        let s = interior(&mut rng, p);
        assert!(p.ln().unwrap().contains(s.ln()), "ln {p} at {s}");
    }
    assert_eq!(Interval::<f64>::new(1.0, 1.0).ln().unwrap(), Interval::zero());
    assert!(Interval::<f64>::new(0.0, 1.0).ln().is_err());
    let s = Interval::<f64>::new(1.0, 2.0).sin();
    assert_eq!(s.hi, 1.0);
}

#[test]
fn rational_enclosure_is_tight() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..10_000 {
        let n = rng.gen_range(-1_000_000i64..1_000_000);
        let d = rng.gen_range(1i64..1_000_000);
        let r = ExactRational::new(n, d);
        let iv: Interval<f64> = r.to_interval();
        assert!(encloses(iv, &r));
        assert!(iv.hi == iv.lo || iv.hi == iv.lo.next_up());
    }
}

mod common;

use common::load_map;
use invdens::interval::Interval;
use invdens::map::ly::{ly_coefficients_bv, ly_coefficients_lip};
use invdens::map::parse::parse_map;
use invdens::map::PiecewiseMap;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn assert_encloses(iv: Interval<f64>, x: f64, rel: f64, what: &str) {
    assert!(iv.lo <= x * (1.0 + 1e-15) && x <= iv.hi * (1.0 + 1e-15), "{what}: {iv} misses {x}");
    assert!(iv.width() <= rel * x.abs(), "{what}: {iv} too wide around {x}");
}

#[test]
fn studied_maps_round_trip() {
    for name in ["lanford", "quadratic_lorenz", "linear_17_5", "quadratic_17_5", "sine_perturbation", "tripling"] {
        let text = common::map_text(name);
        let spec = parse_map(&text).unwrap();
        let again = parse_map(&spec.to_string()).unwrap();
        assert_eq!(spec, again, "{name}");
        assert_eq!(spec.to_string(), again.to_string());
    }
}

#[test]
fn branch_counts_and_iterates() {
    assert_eq!(load_map("quadratic_lorenz").spec.branches.len(), 4);
    let lanford = load_map("lanford");
    assert_eq!(lanford.iterate(), 2);
    // T has two monotone pieces, T^2 four
    assert_eq!(lanford.base_pieces().len(), 2);
    assert_eq!(lanford.pieces().len(), 4);
    let m = load_map("linear_17_5");
    assert_eq!(m.pieces().len(), 4);
    assert!(load_map("sine_perturbation").is_circle());
}

#[test]
fn gaps_and_overlaps_are_rejected_with_location() {
    assert!(parse_map("poly [0,1/2] : 2x\npoly [3/4,1] : 4x - 3").is_err());
    assert!(parse_map("poly [0,3/4] : x\npoly [1/2,1] : 2x - 1").is_err());
    let e = parse_map("poly [0,1/2] : 2x\npoly [1/2,1] : 2x - ) ").unwrap_err();
    assert!(e.to_string().contains("line 2"), "{e}");
}

#[test]
fn analytic_lasota_yorke_coefficients() {
    // lambda = 1 / inf|T'|, B' = 2 / min piece + 2 sup|T''/T'^2|, B = B'/(1 - 2 lambda)
    let cases = [
        ("linear_17_5", 5.0 / 17.0, 17.0),
        ("quadratic_lorenz", 1.0 / 3.0, 8.0 + 8.0 / 9.0),
        ("quadratic_17_5", 1.0 / 3.0, 17.0 + 2.0 * (68.0 / 25.0) / 9.0),
        ("tripling", 1.0 / 3.0, 6.0),
    ];
    for (name, lambda, b_prime) in cases {
        let c = ly_coefficients_bv(&load_map(name)).unwrap();
        assert_encloses(c.lambda, lambda, 1e-12, name);
        assert_encloses(c.b_prime, b_prime, 1e-9, name);
        assert_encloses(c.b, b_prime / (1.0 - 2.0 * lambda), 1e-9, name);
        let quotient = c.b_prime.div(Interval::one() - c.lambda.scale(2.0)).unwrap();
        assert!(quotient.is_subset(&c.b) && c.b.is_subset(&quotient), "{name}: b is not the performed quotient");
    }
}

fn lanford(x: f64) -> f64 {
    let y = 2.0 * x + 0.5 * x * (1.0 - x);
    y - y.floor()
}

#[test]
fn lanford_second_iterate_coefficients() {
    let c = ly_coefficients_bv(&load_map("lanford")).unwrap();
    let n = 1_000_000;
    let mut inf = f64::INFINITY;
    for i in 0..=n {
        let x = i as f64 / n as f64;
        let d = (2.5 - lanford(x)) * (2.5 - x);
        inf = inf.min(d);
    }
    assert!(c.lambda.hi >= 1.0 / inf);
    assert!(c.lambda.lo <= 1.0 / inf * 1.01);
    // one-sided chain rule check against the first iterate
    let t = PiecewiseMap::<f64>::parse("poly [0,1] : 2x + (1/2)x(1-x) mod 1").unwrap();
    let one = t.inf_abs_derivative().lo;
    let two = load_map("lanford").inf_abs_derivative();
    assert!(two.lo <= two.hi);
    assert!(two.hi >= one * one);
    assert!(two.lo >= one * one * 0.99);
}

#[test]
fn sine_perturbation_lipschitz_coefficients() {
    let c = ly_coefficients_lip(&load_map("sine_perturbation")).unwrap();
    let pi = std::f64::consts::PI;
    assert_encloses(c.lambda, 1.0 / (4.0 - 0.08 * pi), 1e-9, "lambda");
    assert!(c.alpha.hi < 1.0);
}

#[test]
fn images_contain_sampled_points() {
    let map = load_map("lanford");
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..2_000 {
        let a: f64 = rng.gen();
        let x = Interval::new(a, (a + rng.gen::<f64>() * 0.05).min(1.0));
        let images = map.eval_on_interval(x).unwrap();
        for _ in 0..20 {
            let p = x.lo + rng.gen::<f64>() * (x.hi - x.lo);
            let y = lanford(lanford(p));
            // near a jump of mod 1 the sampled value may wrap to the other side
            let hit = images.iter().any(|(iv, _)| iv.lo - 1e-12 <= y && y <= iv.hi + 1e-12)
                || (y < 1e-9 && images.iter().any(|(iv, _)| iv.hi >= 1.0 - 1e-9))
                || (y > 1.0 - 1e-9 && images.iter().any(|(iv, _)| iv.lo <= 1e-9));
            assert!(hit, "T^2({p}) = {y} outside {images:?}");
        }
    }
}

fn rational() -> impl Strategy<Value = (i64, i64)> {
    (-40i64..40, 1i64..12)
}

fn fmt_q((n, d): (i64, i64)) -> String {
    if n < 0 { format!("(-{}/{d})", -n) } else { format!("({n}/{d})") }
}

proptest! {
    #[test]
    fn canonical_form_round_trips(
        cuts in proptest::collection::btree_set(1i64..60, 0..4),
        coeffs in proptest::collection::vec((rational(), rational(), rational()), 4),
        mods in proptest::collection::vec(any::<bool>(), 4),
        iterate in 1u32..4,
        circle in any::<bool>(),
    ) {
        let mut pts = vec![(0i64, 1i64)];
        pts.extend(cuts.iter().map(|&c| (c, 60)));
        pts.push((1, 1));
        let mut text = String::new();
        for (b, w) in pts.windows(2).enumerate() {
            let (c0, c1, c2) = coeffs[b];
            text.push_str(&format!(
                "poly [{}/{},{}/{}] : {} + {} x + {} x^2{}\n",
                w[0].0, w[0].1, w[1].0, w[1].1, fmt_q(c0), fmt_q(c1), fmt_q(c2),
                if mods[b] { " mod 1" } else { "" }
            ));
        }
        text.push_str(&format!("iterate {iterate}\n"));
        if circle {
            text.push_str("circle\n");
        }
        let spec = parse_map(&text);
        prop_assume!(spec.is_ok());
        let spec = spec.unwrap();
        let canon = spec.to_string();
        let again = parse_map(&canon).unwrap();
        prop_assert_eq!(&spec, &again);
        prop_assert_eq!(canon, again.to_string());
    }
}

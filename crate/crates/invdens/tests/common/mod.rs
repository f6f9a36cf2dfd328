//! Independent oracles shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::path::PathBuf;

use invdens::hat::{HatBasis, PeriodicLinear};
use invdens::interval::Interval;
use invdens::matrix::TransitionMatrix;
use invdens::scalar::Scalar;
use invdens::{ExactRational, PiecewiseMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Dense = Vec<Vec<ExactRational>>;

pub fn maps_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("maps")
}

pub fn map_text(name: &str) -> String {
    std::fs::read_to_string(maps_dir().join(format!("{name}.map"))).unwrap()
}

pub fn load_map(name: &str) -> PiecewiseMap<f64> {
    PiecewiseMap::parse(&map_text(name)).unwrap()
}

pub fn q(x: f64) -> ExactRational {
    ExactRational::from_float(x).unwrap()
}

pub fn r(n: i64, d: i64) -> ExactRational {
    ExactRational::new(n, d)
}

fn min_q(a: &ExactRational, b: &ExactRational) -> ExactRational {
    if a < b { a.clone() } else { b.clone() }
}

fn max_q(a: &ExactRational, b: &ExactRational) -> ExactRational {
    if a > b { a.clone() } else { b.clone() }
}

// ---------------------------------------------------------------- intervals

fn encloses<F: Scalar>(iv: Interval<F>, exact: &ExactRational) -> bool {
    q(iv.lo.as_f64()) <= *exact && *exact <= q(iv.hi.as_f64())
}

fn random_float(rng: &mut ChaCha8Rng) -> f64 {
    match rng.gen_range(0..4) {
        0 => rng.gen_range(-8i32..=8) as f64,
        1 => rng.gen_range(-1.0..1.0),
        _ => rng.gen_range(-1.0..1.0) * 2f64.powi(rng.gen_range(-40..=40)),
    }
}

fn random_interval(rng: &mut ChaCha8Rng) -> Interval<f64> {
    let a = random_float(rng);
    if rng.gen_bool(0.2) {
        return Interval::point(a);
    }
    let b = a + random_float(rng).abs();
    Interval::new(a, b.max(a))
}

pub fn interior(rng: &mut ChaCha8Rng, x: Interval<f64>) -> f64 {
    match rng.gen_range(0..3) {
        0 => x.lo,
        1 => x.hi,
        _ => (x.lo + rng.gen::<f64>() * (x.hi - x.lo)).clamp(x.lo, x.hi),
    }
}

/// Violations of `x op y ⊇ {a op b}` for random `a ∈ x`, `b ∈ y`, checked in exact rationals.
pub fn arithmetic_violations(seed: u64, trials: usize) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..trials {
        let (x, y) = (random_interval(&mut rng), random_interval(&mut rng));
        let (a, b) = (interior(&mut rng, x), interior(&mut rng, y));
        let (qa, qb) = (q(a), q(b));
        let ok = match rng.gen_range(0..5) {
            0 => encloses(x + y, &(&qa + &qb)),
            1 => encloses(x - y, &(&qa - &qb)),
            2 => encloses(x * y, &(&qa * &qb)),
            3 => match x.div(y) {
                Ok(v) => !qb.is_zero() && encloses(v, &(&qa / &qb)),
                Err(_) => y.contains_zero(),
            },
            _ => encloses(x.sqr(), &(&qa * &qa)) && encloses(x.powi(3), &qa.pow(3)) && encloses(x.abs(), &qa.abs()),
        };
        if !ok {
            bad += 1;
        }
    }
    bad
}

// ---------------------------------------------------------------- Ulam

/// Branch `x -> slope x + intercept` on `[lo, hi]` with values in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct AffinePiece {
    pub lo: ExactRational,
    pub hi: ExactRational,
    pub slope: ExactRational,
    pub intercept: ExactRational,
}

/// Pieces of `x -> (num/den) x mod 1`.
pub fn linear_mod_one(num: i64, den: i64) -> Vec<AffinePiece> {
    let slope = r(num, den);
    let n_pieces = (num + den - 1) / den;
    (0..n_pieces)
        .map(|n| AffinePiece {
            lo: r(n * den, num),
            hi: min_q(&r((n + 1) * den, num), &ExactRational::one()),
            slope: slope.clone(),
            intercept: ExactRational::from_int(-n),
        })
        .collect()
}

/// `P_ij = k |I_i ∩ T^{-1} I_j|` in exact arithmetic.
pub fn exact_ulam(pieces: &[AffinePiece], k: usize) -> Dense {
    let kk = k as i64;
    let mut p = vec![vec![ExactRational::zero(); k]; k];
    for (i, row) in p.iter_mut().enumerate() {
        let (ci, di) = (r(i as i64, kk), r(i as i64 + 1, kk));
        for piece in pieces {
            let lo = max_q(&ci, &piece.lo);
            let hi = min_q(&di, &piece.hi);
            if lo >= hi {
                continue;
            }
            for (j, e) in row.iter_mut().enumerate() {
                let (cj, dj) = (r(j as i64, kk), r(j as i64 + 1, kk));
                let a = &(&cj - &piece.intercept) / &piece.slope;
                let b = &(&dj - &piece.intercept) / &piece.slope;
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                let s = max_q(&lo, &a);
                let t = min_q(&hi, &b);
                if s < t {
                    *e = &*e + &(&(&t - &s) * &ExactRational::from_int(kk));
                }
            }
        }
    }
    p
}

pub fn to_dense(m: &TransitionMatrix<f64>) -> Dense {
    let mut d = vec![vec![ExactRational::zero(); m.k]; m.k];
    for (i, row) in d.iter_mut().enumerate() {
        for (c, v, _) in m.row(i) {
            row[c] = q(v);
        }
    }
    d
}

/// Row vector `x` with `x P = x`, `sum x = 1`, by exact Gaussian elimination.
pub fn exact_stationary(p: &Dense) -> Vec<ExactRational> {
    let n = p.len();
    // rows of (P^T - I), last equation replaced by the normalization
    let mut a: Dense = (0..n)
        .map(|i| {
            let mut row: Vec<ExactRational> = (0..n).map(|j| p[j][i].clone()).collect();
            row[i] = &row[i] - &ExactRational::one();
            row.push(ExactRational::zero());
            row
        })
        .collect();
    a[n - 1] = vec![ExactRational::one(); n + 1];
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("singular system");
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for v in a[col].iter_mut() {
            *v = &*v * &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                let pivot_row = a[col].clone();
                for (v, pv) in a[r].iter_mut().zip(&pivot_row) {
                    *v = &*v - &(&f * pv);
                }
            }
        }
    }
    a.into_iter().map(|row| row[n].clone()).collect()
}

pub fn mat_mul(a: &Dense, b: &Dense) -> Dense {
    let n = a.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| (0..n).fold(ExactRational::zero(), |s, l| if a[i][l].is_zero() { s } else { &s + &(&a[i][l] * &b[l][j]) }))
                .collect()
        })
        .collect()
}

/// `||P^t|_V||_1 = max_{i<j} ||(e_i - e_j) P^t||_1 / 2` on zero-sum row vectors.
pub fn zero_sum_norm(pt: &Dense) -> ExactRational {
    let n = pt.len();
    let mut best = ExactRational::zero();
    for i in 0..n {
        for j in i + 1..n {
            let s = (0..n).fold(ExactRational::zero(), |s, c| &s + &(&pt[i][c] - &pt[j][c]).abs());
            best = max_q(&best, &s);
        }
    }
    &best / &ExactRational::from_int(2)
}

/// Irreducible aperiodic row-stochastic matrix with entries in `(1/den) Z`, `den` a power of two.
pub fn random_dyadic_stochastic(rng: &mut ChaCha8Rng, n: usize, den: u32) -> Vec<Vec<(u32, f64, f64)>> {
    (0..n)
        .map(|i| {
            let mut support: Vec<usize> = (0..n).filter(|&j| j == i || j == (i + 1) % n || rng.gen_bool(0.4)).collect();
            support.sort_unstable();
            let mut count = vec![1u32; support.len()];
            for _ in 0..den - support.len() as u32 {
                let c = rng.gen_range(0..support.len());
                count[c] += 1;
            }
            support.iter().zip(&count).map(|(&j, &c)| (j as u32, c as f64 / den as f64, 0.0)).collect()
        })
        .collect()
}

pub fn row_sum_violations(m: &TransitionMatrix<f64>) -> usize {
    (0..m.k).filter(|&i| (m.row_sum(i) - 1.0).abs() > f64::EPSILON).count()
}

// ---------------------------------------------------------------- hats

fn random_periodic_linear(rng: &mut ChaCha8Rng) -> PeriodicLinear<f64> {
    let n = rng.gen_range(1..24);
    let mut xs: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let scale = 10f64.powi(rng.gen_range(-2..3));
    let ys = xs.iter().map(|_| rng.gen_range(-1.0..1.0) * scale).collect();
    PeriodicLinear::new(xs, ys)
}

/// Value at `x` of the hat expansion with coefficients `c`, evaluated directly.
pub fn hat_value(c: &[f64], x: f64) -> f64 {
    let k = c.len();
    let u = (x - x.floor()) * k as f64;
    let i = (u.floor() as usize).min(k - 1);
    let t = u - i as f64;
    (1.0 - t) * c[i] + t * c[(i + 1) % k]
}

#[derive(Debug, Default, PartialEq)]
pub struct HatViolations {
    pub partition: usize,
    pub lipschitz: usize,
    pub sup_norm: usize,
    pub accuracy: usize,
}

impl HatViolations {
    pub fn total(&self) -> usize {
        self.partition + self.lipschitz + self.sup_norm + self.accuracy
    }
}

/// Partition of unity at `points` random points and the three projection properties on `functions` random inputs.
pub fn hat_property_violations(seed: u64, points: usize, functions: usize) -> HatViolations {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = HatViolations::default();
    for _ in 0..points {
        let basis = HatBasis::new(rng.gen_range(2..200));
        let x: f64 = rng.gen();
        let s = (0..basis.k).fold(0.0, |a, i| a + basis.phi(i, x));
        if (s - 1.0).abs() > 2.0 * f64::EPSILON {
            v.partition += 1;
        }
    }
    for _ in 0..functions {
        let k = rng.gen_range(4..96);
        let basis = HatBasis::new(k);
        let f = random_periodic_linear(&mut rng);
        let c = basis.project(&f);
        let (lip, sup) = (f.lipschitz(), f.sup_norm());
        let tol = 1e-12 * (1.0 + sup + lip);
        let lip_pf = (0..k).fold(0.0f64, |a, i| a.max((c[(i + 1) % k] - c[i]).abs() * k as f64));
        if lip_pf > lip + tol {
            v.lipschitz += 1;
        }
        if c.iter().any(|x| x.abs() > sup + tol) {
            v.sup_norm += 1;
        }
        // both functions are linear between consecutive points of the union below
        let mut pts: Vec<f64> = (0..k).map(|i| i as f64 / k as f64).collect();
        pts.extend((0..k).map(|i| (i as f64 + 0.5) / k as f64));
        pts.extend((0..200).map(|_| rng.gen::<f64>()));
        let err = pts.iter().fold(0.0f64, |a, &x| a.max((hat_value(&c, x) - f.eval(x)).abs()));
        if err > lip / k as f64 + tol {
            v.accuracy += 1;
        }
    }
    v
}

fn wrap_hat(j: usize, k: usize, y: &ExactRational) -> ExactRational {
    // phi_j(y) = max(0, 1 - dist(k y, j + kZ))
    let kk = ExactRational::from_int(k as i64);
    let u = &(y * &kk) - &ExactRational::from_int(j as i64);
    let m = &u / &kk;
    let shift = &(&m + &r(1, 2)).floor();
    let u = &u - &(&ExactRational::from_bigint(shift.clone()) * &kk);
    let d = &ExactRational::one() - &u.abs();
    max_q(&d, &ExactRational::zero())
}

/// `c_ij = k ∫ phi_i(x) phi_j(m x mod 1) dx` for an integer slope `m`.
pub fn exact_hat_matrix(m: i64, k: usize) -> Dense {
    let kk = k as i64;
    let mut c = vec![vec![ExactRational::zero(); k]; k];
    for (i, row) in c.iter_mut().enumerate() {
        let (lo, hi) = (r(i as i64 - 1, kk), r(i as i64 + 1, kk));
        // breakpoints: nodes of phi_i and preimages of the nodes under m x
        let mut cuts: Vec<ExactRational> = vec![lo.clone(), r(i as i64, kk), hi.clone()];
        let first = (&(&lo * &ExactRational::from_int(m * kk))).floor();
        let last = (&(&hi * &ExactRational::from_int(m * kk))).ceil();
        let mut n = first;
        while n <= last {
            let x = &ExactRational::from_bigint(n.clone()) / &ExactRational::from_int(m * kk);
            if x > lo && x < hi {
                cuts.push(x);
            }
            n += 1;
        }
        cuts.sort();
        cuts.dedup();
        let phi_i = |x: &ExactRational| wrap_hat(i, k, x);
        for (j, e) in row.iter_mut().enumerate() {
            let g = |x: &ExactRational| &phi_i(x) * &wrap_hat(j, k, &(&ExactRational::from_int(m) * x));
            let mut acc = ExactRational::zero();
            for w in cuts.windows(2) {
                let mid = &(&w[0] + &w[1]) / &ExactRational::from_int(2);
                // Simpson is exact on products of two linear pieces
                let simpson = &(&(&g(&w[0]) + &(&ExactRational::from_int(4) * &g(&mid))) + &g(&w[1])) / &ExactRational::from_int(6);
                acc = &acc + &(&(&w[1] - &w[0]) * &simpson);
            }
            *e = &acc * &ExactRational::from_int(kk);
        }
    }
    c
}

// ---------------------------------------------------------------- Lyapunov

/// `∫ log|T'| v` by the midpoint rule on `n` points with compensated summation.
pub fn midpoint_integral(n: usize, f: impl Fn(f64) -> f64) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for i in 0..n {
        let y = f((i as f64 + 0.5) / n as f64);
        let t = sum + y;
        comp += if sum.abs() >= y.abs() { (sum - t) + y } else { (y - t) + sum };
        sum = t;
    }
    (sum + comp) / n as f64
}

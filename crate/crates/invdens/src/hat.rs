//! Piecewise linear hat basis on the circle and the linearized transfer operator.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::interval::Interval;
use crate::map::{MapError, PiecewiseMap};
use crate::matrix::{markovize, MatrixError, NormKind, TransitionMatrix};
use crate::rational::ExactRational;
use crate::scalar::Scalar;

/// Hats centred at the nodes `a_i = i/k` of the circle `R/Z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HatBasis {
    pub k: usize,
}

impl HatBasis {
    pub fn new(k: usize) -> Self {
        assert!(k >= 2, "a hat basis needs at least two nodes");
        HatBasis { k }
    }

    pub fn node<F: Scalar>(&self, i: usize) -> F {
        F::from_usize(i % self.k).unwrap() / F::from_usize(self.k).unwrap()
    }

    /// `phi_i(x)`, supported on `[a_{i-1}, a_{i+1}]`.
    pub fn phi<F: Scalar>(&self, i: usize, x: F) -> F {
        let k = F::from_usize(self.k).unwrap();
        let u = x * k - F::from_usize(i % self.k).unwrap();
        let u = u - (u / k).round() * k;
        (F::one() - u.abs()).max(F::zero())
    }

    /// The two hats that may be nonzero at `x`, with their weights.
    pub fn weights<F: Scalar>(&self, x: F) -> [(usize, F); 2] {
        let k = F::from_usize(self.k).unwrap();
        let u = (x - x.floor()) * k;
        let i = u.floor();
        let t = u - i;
        let i = i.to_usize().unwrap() % self.k;
        [(i, F::one() - t), ((i + 1) % self.k, t)]
    }

    /// `sum_i c_i phi_i(x)`.
    pub fn eval<F: Scalar>(&self, coeffs: &[F], x: F) -> F {
        self.weights(x).iter().fold(F::zero(), |a, &(i, w)| a + coeffs[i] * w)
    }

    /// Coefficients `c_j = int f phi_j / int phi_j` of a periodic piecewise linear `f`.
    pub fn project<F: Scalar>(&self, f: &PeriodicLinear<F>) -> Vec<F> {
        let k = F::from_usize(self.k).unwrap();
        (0..self.k)
            .map(|j| {
                let a = F::from_usize(j).unwrap() / k;
                let h = F::one() / k;
                let mut cuts = vec![a - h, a, a + h];
                cuts.extend(f.breakpoints_in(a - h, a + h));
                cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
                let mut acc = F::zero();
                for w in cuts.windows(2) {
                    let (x0, x1) = (w[0], w[1]);
                    if x1 <= x0 {
                        continue;
                    }
                    let xm = (x0 + x1) / F::lit(2.0);
                    let g = |x: F| f.eval(x) * self.phi(j, x);
                    // exact for products of two linear functions
                    acc = acc + (x1 - x0) * (g(x0) + F::lit(4.0) * g(xm) + g(x1)) / F::lit(6.0);
                }
                acc * k
            })
            .collect()
    }
}

/// Periodic piecewise linear function through `(x_i, y_i)`, `0 <= x_0 < ... < x_n < 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicLinear<F> {
    xs: Vec<F>,
    ys: Vec<F>,
}

impl<F: Scalar> PeriodicLinear<F> {
    pub fn new(xs: Vec<F>, ys: Vec<F>) -> Self {
        assert_eq!(xs.len(), ys.len());
        assert!(!xs.is_empty());
        assert!(xs.windows(2).all(|w| w[0] < w[1]));
        assert!(xs[0] >= F::zero() && *xs.last().unwrap() < F::one());
        PeriodicLinear { xs, ys }
    }

    pub fn eval(&self, x: F) -> F {
        let x = x - x.floor();
        let n = self.xs.len();
        let i = self.xs.partition_point(|&b| b <= x);
        let (x0, y0, x1, y1) = if i == 0 {
            (self.xs[n - 1] - F::one(), self.ys[n - 1], self.xs[0], self.ys[0])
        } else if i == n {
            (self.xs[n - 1], self.ys[n - 1], self.xs[0] + F::one(), self.ys[0])
        } else {
            (self.xs[i - 1], self.ys[i - 1], self.xs[i], self.ys[i])
        };
        if x1 == x0 {
            return y0;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    /// Breakpoints in `(lo, hi)`, unwrapped to that window.
    fn breakpoints_in(&self, lo: F, hi: F) -> Vec<F> {
        let mut out = Vec::new();
        let start = lo.floor().to_i64().unwrap();
        let end = hi.floor().to_i64().unwrap();
        for n in start..=end {
            let s = F::from_i64(n).unwrap();
            out.extend(self.xs.iter().map(|&x| x + s).filter(|&x| x > lo && x < hi));
        }
        out
    }

    pub fn sup_norm(&self) -> F {
        self.ys.iter().fold(F::zero(), |a, &y| a.max(y.abs()))
    }

    pub fn lipschitz(&self) -> F {
        let n = self.xs.len();
        (0..n).fold(F::zero(), |a, i| {
            let (x1, y1) = if i + 1 < n { (self.xs[i + 1], self.ys[i + 1]) } else { (self.xs[0] + F::one(), self.ys[0]) };
            let dx = x1 - self.xs[i];
            if dx > F::zero() {
                a.max((y1 - self.ys[i]).abs() / dx)
            } else {
                a
            }
        })
    }
}

/// Linearized operator on hat coefficients together with the linearization error.
#[derive(Clone, Debug)]
pub struct LinfMatrix<F> {
    /// Row `i` holds the coefficients of the pushed forward hat `phi_i`; coefficient vectors evolve by the transpose.
    pub matrix: TransitionMatrix<F>,
    /// `4 sup|T''/(T')^2| / k^2`.
    pub lin_err: F,
}

#[derive(Debug, thiserror::Error)]
pub enum HatError {
    #[error("the L-infinity discretization needs a circle map")]
    NotCircle,
    #[error("the derivative enclosure touches zero at node {0}")]
    DerivativeTouchesZero(usize),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

fn cube_plus<F: Scalar>(x: Interval<F>) -> Interval<F> {
    let c = Interval::new(x.lo.max(F::zero()), x.hi.max(F::zero()));
    c.powi(3)
}

/// `(1/s^2) (B_s * B_s * B_1 * B_1)(d)` for centred unit-height boxes `B_w` of width `w`.
pub fn hat_coefficient<F: Scalar>(d: Interval<F>, s: Interval<F>) -> Interval<F> {
    let w = |u: i32| if u == 0 { -2 } else { 1 };
    let mut acc = Interval::zero();
    for u in -1..=1 {
        for v in -1..=1 {
            let arg = d + s.scale(F::from_i32(u).unwrap()) + Interval::from_int(v as i64);
            acc = acc + cube_plus(arg).scale(F::from_i32(w(u) * w(v)).unwrap());
        }
    }
    let r = acc.div(s.sqr() * Interval::from_int(6)).expect("positive slope");
    Interval::new(r.lo.max(F::zero()), r.hi.max(F::zero()))
}

fn linearized_row<F: Scalar>(map: &PiecewiseMap<F>, k: usize, i: usize) -> Result<Vec<(u32, F, F)>, HatError> {
    let a = ExactRational::new(i as i64, k as i64);
    let a_iv: Interval<F> = a.to_interval();
    let piece = map
        .pieces()
        .iter()
        .find(|p| p.dom_hull().intersect(a_iv).is_some())
        .ok_or(MapError::OutOfDomain(a.to_f64()))?;
    let s = piece.derivative(a_iv).abs();
    if s.lo <= F::zero() {
        return Err(HatError::DerivativeTouchesZero(i));
    }
    let kk = Interval::from_int(k as i64);
    let t = piece.value_at(&a) * kk;
    let tm = Interval::point(t.mid());
    // |d c / d d| <= 1/s
    let spread = Interval::point(t.rad()).div(Interval::point(s.lo)).unwrap().hi;
    let spread = Interval::new(-spread, spread);
    let reach = s.hi + F::one();
    let first = (t.lo - reach).floor().to_i64().unwrap();
    let last = (t.hi + reach).ceil().to_i64().unwrap();
    let mut acc: BTreeMap<usize, Interval<F>> = BTreeMap::new();
    for j in first..=last {
        let d = Interval::from_int(j) - tm;
        let c = hat_coefficient(d, s);
        if c.hi.is_zero() {
            continue;
        }
        let c = c + spread;
        let c = Interval::new(c.lo.max(F::zero()), c.hi);
        let e = acc.entry(j.rem_euclid(k as i64) as usize).or_insert_with(Interval::zero);
        *e = *e + c;
    }
    Ok(acc
        .into_iter()
        .map(|(c, v)| {
            let m = v.mid();
            let err = (Interval::point(v.hi) - Interval::point(m)).hi.max((Interval::point(m) - Interval::point(v.lo)).hi);
            (c as u32, m, err)
        })
        .collect())
}

/// Markovized linearized operator for the hat basis with `k` nodes.
pub fn assemble_linearized<F: Scalar>(map: &PiecewiseMap<F>, k: usize) -> Result<LinfMatrix<F>, HatError> {
    if !map.is_circle() {
        return Err(HatError::NotCircle);
    }
    let rows = (0..k).into_par_iter().map(|i| linearized_row(map, k, i)).collect::<Result<Vec<_>, _>>()?;
    let raw = TransitionMatrix::from_rows(k, rows, NormKind::Linf);
    let matrix = markovize(&raw)?;
    let d = map.distortion_sup().hi;
    let kk = Interval::from_int(k as i64);
    let lin_err = (Interval::point(d) * Interval::from_int(4)).div(kk.sqr()).unwrap().hi;
    Ok(LinfMatrix { matrix, lin_err })
}

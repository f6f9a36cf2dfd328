//! Certified enclosure of the fixed vector by contraction of the zero-sum subspace.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{NormKind, TransitionMatrix};
use crate::scalar::{add_up, mul_up, sub_up, Scalar};

pub const DEFAULT_J_MAX: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepConfig<F> {
    /// Target distance of the computed density to the fixed vector.
    pub eps_num: F,
    pub j_max: usize,
    /// Per-step growth of the distance between the computed and the true discretized operator powers.
    pub inflation: F,
    pub verbose: bool,
}

impl<F: Scalar> SweepConfig<F> {
    pub fn new(eps_num: F, inflation: F) -> Self {
        SweepConfig { eps_num, j_max: DEFAULT_J_MAX, inflation, verbose: false }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EnclosureError {
    #[error("matrix not observed to contract after {0} steps; the map may not be mixing")]
    NoContraction(usize),
    #[error("eps_num must be positive and finite, got {0}")]
    InvalidEpsNum(f64),
    #[error("the matrix needs at least two states")]
    TooSmall,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContractionCertificate<F> {
    pub n_eps: usize,
    pub n_true: usize,
    /// Entry `t - 1` bounds the norm of the `t`-th power on the zero-sum subspace.
    pub per_step_bounds: Vec<F>,
    pub l: usize,
}

impl<F: Scalar> ContractionCertificate<F> {
    pub fn bound_at(&self, t: usize) -> Option<F> {
        t.checked_sub(1).and_then(|i| self.per_step_bounds.get(i).copied())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnclosedDensity<F> {
    /// Density values: `k` times the cell probabilities for Ulam matrices, hat coefficients otherwise.
    pub values: Vec<F>,
    /// Bound on the distance of the exactly iterated start vector to the fixed vector, ledger included.
    pub diameter: F,
    pub l: usize,
    /// Rounding error of the density iteration itself.
    pub float_err: F,
    pub norm_kind: NormKind,
}

impl<F: Scalar> EnclosedDensity<F> {
    pub fn sup_norm(&self) -> F {
        self.values.iter().fold(F::zero(), |a, &v| a.max(v.abs()))
    }
}

/// `l k eps_mach`, the rounding bound for `l` sparse stochastic steps on vectors of unit mass.
pub fn float_ledger<F: Scalar>(l: usize, k: usize) -> F {
    mul_up(mul_up(F::from_usize(l).unwrap(), F::from_usize(k).unwrap()), F::EPS_MACH)
}

/// Bound on the operator norm on the zero-sum subspace at step `t` from the anchored trajectory norms.
pub fn zero_sum_operator_norm_bound<F: Scalar>(norms: &[F], t: usize, k: usize) -> F {
    add_up(norms.iter().fold(F::zero(), |a, &n| a.max(n)), float_ledger(t, k))
}

fn ledger<F: Scalar>(kind: NormKind, t: usize, k: usize, nnz: usize) -> F {
    match kind {
        NormKind::L1 => float_ledger(t, k),
        NormKind::Linf => mul_up(float_ledger(t, k), F::from_usize(nnz).unwrap()),
    }
}

fn l1_norm<F: Scalar>(x: &[F]) -> F {
    x.iter().fold(F::zero(), |a, &v| add_up(a, v.abs()))
}

/// Per-step record of one trajectory; the last entry is where it was stopped.
struct Trajectory<F> {
    bounds: Vec<F>,
    tail: F,
}

fn l1_trajectory<F: Scalar>(m: &TransitionMatrix<F>, j: usize, cfg: &SweepConfig<F>) -> Result<Trajectory<F>, EnclosureError> {
    let k = m.k;
    let mut x = vec![F::zero(); k];
    let mut y = vec![F::zero(); k];
    x[0] = F::one();
    x[j] = -F::one();
    let target = cfg.eps_num / F::lit(2.0);
    let mut bounds = Vec::new();
    for t in 1..=cfg.j_max {
        m.left_mul_into(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
        let n = l1_norm(&x);
        bounds.push(n);
        if add_up(n, float_ledger(t, k)) <= target {
            return Ok(Trajectory { bounds, tail: n });
        }
    }
    Err(EnclosureError::NoContraction(cfg.j_max))
}

// `mt` is the transpose, so that its left action skips the zeros of early steps
fn linf_trajectory<F: Scalar>(mt: &TransitionMatrix<F>, r: usize, cfg: &SweepConfig<F>) -> Result<(Trajectory<F>, F), EnclosureError> {
    let m = mt;
    let k = m.k;
    let kf = F::from_usize(k).unwrap();
    let mut x = vec![F::zero(); k];
    let mut y = vec![F::zero(); k];
    let mut sorted = vec![F::zero(); k];
    x[r] = F::one();
    let mut bounds = Vec::new();
    for t in 1..=cfg.j_max {
        mt.left_mul_into(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
        let (lo, hi) = x.iter().fold((F::infinity(), F::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
        let diam = sub_up(hi, lo);
        sorted.copy_from_slice(&x);
        let med = *sorted.select_nth_unstable_by(k / 2, |a, b| a.partial_cmp(b).unwrap()).1;
        // min over mu of sum |x_c - mu| is the dual norm on zero-sum vectors
        let dev = x.iter().fold(F::zero(), |a, &v| add_up(a, sub_up(v.max(med), v.min(med))));
        bounds.push(dev);
        let spread = mul_up(kf, diam);
        if add_up(spread, ledger(NormKind::Linf, t, k, m.nnz_max)) <= cfg.eps_num {
            return Ok((Trajectory { bounds, tail: mul_up(spread, F::lit(0.5)) }, spread));
        }
    }
    Err(EnclosureError::NoContraction(cfg.j_max))
}

fn first_below<F: Scalar>(bound: impl Fn(usize) -> F, j_max: usize, extra: impl Fn(usize) -> F) -> Option<usize> {
    (1..=j_max).find(|&t| add_up(extra(t), bound(t)) <= F::lit(0.5))
}

/// Contraction times and the enclosed density of a row-stochastic matrix.
///
/// `L1` matrices act on row vectors of cell probabilities and the
/// trajectories are `e_0 - e_j`. `Linf` matrices hold pushed forward hats
/// in their rows, coefficient vectors evolve by the transpose, and the
/// trajectories are the rows of its powers.
pub fn contraction_sweep<F: Scalar>(
    m: &TransitionMatrix<F>,
    cfg: &SweepConfig<F>,
) -> Result<(ContractionCertificate<F>, EnclosedDensity<F>), EnclosureError> {
    if !(cfg.eps_num > F::zero()) || !cfg.eps_num.is_finite() {
        return Err(EnclosureError::InvalidEpsNum(cfg.eps_num.as_f64()));
    }
    let k = m.k;
    if k < 2 {
        return Err(EnclosureError::TooSmall);
    }
    let kind = m.norm_kind;
    let (trajs, diameter) = match kind {
        NormKind::L1 => {
            let trajs = (1..k).into_par_iter().map(|j| l1_trajectory(m, j, cfg)).collect::<Result<Vec<_>, _>>()?;
            let l = trajs.iter().map(|t| t.bounds.len()).max().unwrap();
            let worst = trajs.iter().fold(F::zero(), |a, t| a.max(t.tail));
            (trajs, mul_up(F::lit(2.0), add_up(worst, float_ledger(l, k))))
        }
        NormKind::Linf => {
            let mt = m.transpose();
            let res = (0..k).into_par_iter().map(|r| linf_trajectory(&mt, r, cfg)).collect::<Result<Vec<_>, _>>()?;
            let l = res.iter().map(|t| t.0.bounds.len()).max().unwrap();
            let worst = res.iter().fold(F::zero(), |a, t| a.max(t.1));
            (res.into_iter().map(|t| t.0).collect::<Vec<_>>(), add_up(worst, ledger(kind, l, k, m.nnz_max)))
        }
    };
    let l = trajs.iter().map(|t| t.bounds.len()).max().unwrap();
    let bound = |t: usize| {
        let worst = trajs.iter().fold(F::zero(), |a, tr| a.max(tr.bounds.get(t - 1).copied().unwrap_or(tr.tail)));
        add_up(worst, ledger(kind, t, k, m.nnz_max))
    };
    let n_eps = first_below(&bound, cfg.j_max, |_| F::zero()).ok_or(EnclosureError::NoContraction(cfg.j_max))?;
    let n_true = first_below(&bound, cfg.j_max, |t| mul_up(F::from_usize(t).unwrap(), cfg.inflation))
        .ok_or(EnclosureError::NoContraction(cfg.j_max))?;
    let last = l.max(n_true);
    let per_step_bounds: Vec<F> = (1..=last).map(&bound).collect();
    if cfg.verbose {
        for (t, b) in per_step_bounds.iter().enumerate() {
            let raw = trajs.iter().fold(F::zero(), |a, tr| a.max(tr.bounds.get(t).copied().unwrap_or(tr.tail)));
            eprintln!("step {}: max_norm={:e} bound={:e}", t + 1, raw, b);
        }
    }
    let density = iterate_density(m, l, diameter);
    Ok((ContractionCertificate { n_eps, n_true, per_step_bounds, l }, density))
}

/// Iterates the uniform start vector `l` times.
fn iterate_density<F: Scalar>(m: &TransitionMatrix<F>, l: usize, diameter: F) -> EnclosedDensity<F> {
    let k = m.k;
    let kf = F::from_usize(k).unwrap();
    let start = match m.norm_kind {
        NormKind::L1 => F::one() / kf,
        NormKind::Linf => F::one(),
    };
    let mut x = vec![start; k];
    let mut y = vec![F::zero(); k];
    for _ in 0..l {
        m.left_mul_into(&x, &mut y);
        std::mem::swap(&mut x, &mut y);
    }
    let float_err = match m.norm_kind {
        NormKind::L1 => {
            for v in x.iter_mut() {
                *v = *v * kf;
            }
            float_ledger(l, k)
        }
        NormKind::Linf => {
            // each step: at most `c` terms per entry, amplified by the largest column sum `s`
            let sums = m.column_sums();
            let s = add_up(sums.iter().fold(F::zero(), |a, &v| a.max(v)), mul_up(kf, F::EPS_MACH));
            let mut count = vec![0usize; k];
            for i in 0..k {
                for (c, _, _) in m.row(i) {
                    count[c] += 1;
                }
            }
            let c = F::from_usize(*count.iter().max().unwrap()).unwrap();
            let vmax = x.iter().fold(F::one(), |a, &v| a.max(v.abs()));
            let mut amp = F::one();
            for _ in 0..l {
                amp = mul_up(amp, s.max(F::one()));
            }
            let per = mul_up(mul_up(c, F::EPS_MACH), mul_up(vmax, amp));
            mul_up(per, F::from_usize(l).unwrap())
        }
    };
    EnclosedDensity { values: x, diameter, l, float_err, norm_kind: m.norm_kind }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ledger_values() {
        assert_eq!(float_ledger::<f64>(0, 1 << 20), 0.0);
        let v = float_ledger::<f64>(10, 4096);
        assert!((v - 9.094947017729282e-12).abs() < 1e-24);
    }

    #[test]
    fn rank_one_matrix_contracts_at_once() {
        let third = 1.0f64 / 3.0;
        let row = vec![(0, third, 0.0), (1, third, 0.0), (2, 1.0 - 2.0 * third, 0.0)];
        let m = TransitionMatrix::from_rows(3, vec![row; 3], NormKind::L1);
        let (c, d) = contraction_sweep(&m, &SweepConfig::new(1e-4, 0.0)).unwrap();
        assert_eq!((c.l, c.n_eps, c.n_true), (1, 1, 1));
        for v in d.values {
            assert!((v - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn max_of_anchored_norms() {
        let b = zero_sum_operator_norm_bound(&[0.4f64, 0.6], 0, 10);
        assert_eq!(b, 0.6);
    }
}

//! Rigorous error assembly and the certified Lyapunov exponent.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enclosure::{ContractionCertificate, EnclosedDensity};
use crate::hat::LinfMatrix;
use crate::interval::Interval;
use crate::map::ly::{LyCoefficientsBv, LyCoefficientsLip};
use crate::map::PiecewiseMap;
use crate::matrix::{NormKind, TransitionMatrix};
use crate::scalar::{add_up, div_up, mul_up, sub_down, sub_up, Scalar};

#[derive(Debug, Error, PartialEq)]
pub enum CertifyError {
    #[error("expansion too weak: 2 lambda = {0} is not below 1")]
    ExpansionTooWeak(f64),
    #[error("alpha = {0} is not below 1")]
    AlphaTooLarge(f64),
    #[error("inputs come from different runs: {0}")]
    Mismatch(String),
    #[error("the derivative enclosure touches zero on cell {0}")]
    DerivativeTouchesZero(usize),
}

/// The three error sources; `numeric` already contains `float_ledger`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrComponents {
    pub discretization: f64,
    pub matrix: f64,
    pub numeric: f64,
    pub float_ledger: f64,
}

impl ErrComponents {
    pub fn total(&self) -> f64 {
        add_up(add_up(self.discretization, self.matrix), self.numeric)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapInterval {
    pub lo: f64,
    pub hi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub mode: NormKind,
    pub map_id: String,
    pub k: usize,
    pub nu: Option<f64>,
    pub eps: f64,
    pub eps_num: f64,
    pub nnz_max: usize,
    pub l: usize,
    pub n_eps: usize,
    pub n_true: usize,
    pub lambda: f64,
    pub b_prime: Option<f64>,
    pub b: f64,
    pub err_components: ErrComponents,
    pub eps_rig: f64,
    pub lyap: Option<LyapInterval>,
}

/// Inputs of the `L1` error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct L1Inputs {
    pub b: f64,
    pub k: usize,
    pub n_true: usize,
    pub n_eps: usize,
    pub nnz: usize,
    pub eps: f64,
    pub eps_num: f64,
    pub float_ledger: f64,
}

/// `2 N (2B/k) + 4 N_eps NNZ eps + eps_num + ledger`, rounded upward.
pub fn l1_error(x: &L1Inputs) -> ErrComponents {
    let n = x.n_true as f64;
    let k = x.k as f64;
    let discretization = mul_up(mul_up(2.0, n), div_up(mul_up(2.0, x.b), k));
    let matrix = mul_up(mul_up(mul_up(4.0, x.n_eps as f64), x.nnz as f64), x.eps);
    let numeric = add_up(x.eps_num, x.float_ledger);
    ErrComponents { discretization, matrix, numeric, float_ledger: x.float_ledger }
}

/// Inputs of the `Linf` error bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinfInputs {
    pub k: usize,
    pub n_true: usize,
    pub m: f64,
    pub d: f64,
    pub b_one: f64,
    pub alpha: f64,
    pub b: f64,
    pub eps: f64,
    pub sup_density: f64,
    pub eps_num: f64,
    pub float_ledger: f64,
}

/// `(2/k) N M ((4/k) D + 2(M+1) M (1 + B1/(1-alpha))) (B+1)
///  + 2 N M^2 (eps + 4D/k^2)(|v|_inf + eps_num) + eps_num + ledger`, rounded upward.
pub fn linf_error(x: &LinfInputs) -> Result<ErrComponents, CertifyError> {
    if x.alpha >= 1.0 {
        return Err(CertifyError::AlphaTooLarge(x.alpha));
    }
    let k = x.k as f64;
    let n = x.n_true as f64;
    let geo = add_up(1.0, div_up(x.b_one, sub_down(1.0, x.alpha)));
    let inner = add_up(div_up(mul_up(4.0, x.d), k), mul_up(mul_up(mul_up(2.0, add_up(x.m, 1.0)), x.m), geo));
    let discretization = mul_up(mul_up(mul_up(mul_up(div_up(2.0, k), n), x.m), inner), add_up(x.b, 1.0));
    let lin = div_up(mul_up(4.0, x.d), mul_up(k, k));
    let matrix = mul_up(
        mul_up(mul_up(mul_up(2.0, n), mul_up(x.m, x.m)), add_up(x.eps, lin)),
        add_up(x.sup_density, x.eps_num),
    );
    let numeric = add_up(x.eps_num, x.float_ledger);
    Ok(ErrComponents { discretization, matrix, numeric, float_ledger: x.float_ledger })
}

/// Run parameters recorded in the certificate.
#[derive(Clone, Debug, PartialEq)]
pub struct RunInfo {
    pub map_id: String,
    pub nu: Option<f64>,
    pub eps_num: f64,
}

fn check_run<F: Scalar>(
    k: usize,
    c: &ContractionCertificate<F>,
    d: &EnclosedDensity<F>,
    kind: NormKind,
) -> Result<(), CertifyError> {
    if d.values.len() != k || d.norm_kind != kind || c.l != d.l {
        return Err(CertifyError::Mismatch(format!(
            "k = {k}, density length {}, l = {} vs {}",
            d.values.len(),
            c.l,
            d.l
        )));
    }
    Ok(())
}

pub fn certify_l1<F: Scalar>(
    ly: &LyCoefficientsBv<F>,
    matrix: &TransitionMatrix<F>,
    contraction: &ContractionCertificate<F>,
    density: &EnclosedDensity<F>,
    run: &RunInfo,
) -> Result<Certificate, CertifyError> {
    let two_lambda = mul_up(2.0, ly.lambda.hi.as_f64());
    if two_lambda >= 1.0 {
        return Err(CertifyError::ExpansionTooWeak(two_lambda));
    }
    check_run(matrix.k, contraction, density, NormKind::L1)?;
    let err = l1_error(&L1Inputs {
        b: ly.b.hi.as_f64(),
        k: matrix.k,
        n_true: contraction.n_true,
        n_eps: contraction.n_eps,
        nnz: matrix.nnz_max,
        eps: matrix.eps.as_f64(),
        eps_num: run.eps_num,
        float_ledger: density.float_err.as_f64(),
    });
    Ok(Certificate {
        mode: NormKind::L1,
        map_id: run.map_id.clone(),
        k: matrix.k,
        nu: run.nu,
        eps: matrix.eps.as_f64(),
        eps_num: run.eps_num,
        nnz_max: matrix.nnz_max,
        l: contraction.l,
        n_eps: contraction.n_eps,
        n_true: contraction.n_true,
        lambda: ly.lambda.hi.as_f64(),
        b_prime: Some(ly.b_prime.hi.as_f64()),
        b: ly.b.hi.as_f64(),
        eps_rig: err.total(),
        err_components: err,
        lyap: None,
    })
}

pub fn certify_linf<F: Scalar>(
    ly: &LyCoefficientsLip<F>,
    matrix: &LinfMatrix<F>,
    contraction: &ContractionCertificate<F>,
    density: &EnclosedDensity<F>,
    run: &RunInfo,
) -> Result<Certificate, CertifyError> {
    let m = &matrix.matrix;
    check_run(m.k, contraction, density, NormKind::Linf)?;
    let err = linf_error(&LinfInputs {
        k: m.k,
        n_true: contraction.n_true,
        m: ly.m_sup.hi.as_f64(),
        d: ly.distortion_sup.hi.as_f64(),
        b_one: ly.b_one.hi.as_f64(),
        alpha: ly.alpha.hi.as_f64(),
        b: ly.b_var.hi.as_f64(),
        eps: m.eps.as_f64(),
        sup_density: density.sup_norm().as_f64(),
        eps_num: run.eps_num,
        float_ledger: density.float_err.as_f64(),
    })?;
    Ok(Certificate {
        mode: NormKind::Linf,
        map_id: run.map_id.clone(),
        k: m.k,
        nu: run.nu,
        eps: m.eps.as_f64(),
        eps_num: run.eps_num,
        nnz_max: m.nnz_max,
        l: contraction.l,
        n_eps: contraction.n_eps,
        n_true: contraction.n_true,
        lambda: ly.lambda.hi.as_f64(),
        b_prime: None,
        b: ly.b_var.hi.as_f64(),
        eps_rig: err.total(),
        err_components: err,
        lyap: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyapunovResult {
    pub estimate: f64,
    pub radius: f64,
    /// The exponent is that of `T^iterate`.
    pub iterate: u32,
    pub method_note: String,
}

impl LyapunovResult {
    pub fn interval(&self) -> LyapInterval {
        LyapInterval { lo: self.lo(), hi: self.hi() }
    }

    pub fn lo(&self) -> f64 {
        sub_down(self.estimate, self.radius)
    }

    pub fn hi(&self) -> f64 {
        add_up(self.estimate, self.radius)
    }
}

fn log_derivative_over<F: Scalar>(map: &PiecewiseMap<F>, x: Interval<F>, cell: usize) -> Result<Interval<F>, CertifyError> {
    let mut acc: Option<Interval<F>> = None;
    for (_, piece, clip) in map.pieces_meeting(x) {
        let d = piece.derivative(clip).abs();
        let l = d.ln().map_err(|_| CertifyError::DerivativeTouchesZero(cell))?;
        acc = Some(acc.map_or(l, |a| a.hull(l)));
    }
    acc.ok_or(CertifyError::DerivativeTouchesZero(cell))
}

/// Certified enclosure of `int log|T'| f` for the invariant density `f`.
///
/// Each cell (or hat support) contributes its density weight times the range
/// of `log|T'|` over it; the radius adds `sup|log|T'|| eps_rig`, which bounds
/// the effect of replacing `f` by the computed density in the `L1` norm.
pub fn lyapunov<F: Scalar>(map: &PiecewiseMap<F>, density: &EnclosedDensity<F>, eps_rig: f64) -> Result<LyapunovResult, CertifyError> {
    let k = density.values.len();
    let kk = Interval::<F>::from_int(k as i64);
    let cell_iv = |a: i64, b: i64| {
        let lo = Interval::<F>::from_int(a).div(kk).unwrap().lo;
        let hi = Interval::<F>::from_int(b).div(kk).unwrap().hi;
        Interval::new(lo.max(F::zero()), hi.min(F::one()))
    };
    let mut sum = Interval::<F>::zero();
    let mut sup = F::zero();
    for (i, &v) in density.values.iter().enumerate() {
        let i = i as i64;
        let range = match density.norm_kind {
            NormKind::L1 => log_derivative_over(map, cell_iv(i, i + 1), i as usize)?,
            NormKind::Linf => {
                // hat support [a_{i-1}, a_{i+1}] on the circle
                let right = log_derivative_over(map, cell_iv(i, i + 1), i as usize)?;
                let left = if i == 0 { cell_iv(k as i64 - 1, k as i64) } else { cell_iv(i - 1, i) };
                right.hull(log_derivative_over(map, left, i as usize)?)
            }
        };
        sup = sup.max(range.mag());
        sum = sum + range * Interval::point(v);
    }
    let integral = sum.div(kk).unwrap();
    let est = integral.mid().as_f64();
    let quad = sub_up(integral.hi.as_f64(), est).max(sub_up(est, integral.lo.as_f64()));
    let radius = add_up(quad, mul_up(sup.as_f64(), eps_rig));
    Ok(LyapunovResult {
        estimate: est,
        radius,
        iterate: map.iterate(),
        method_note: "cellwise interval range of log|T'| times density weight, plus sup|log|T'|| eps_rig".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vanishing_inputs_give_zero() {
        let e = l1_error(&L1Inputs { b: 0.0, k: 1024, n_true: 5, n_eps: 4, nnz: 7, eps: 0.0, eps_num: 0.0, float_ledger: 0.0 });
        assert_eq!(e.total(), 0.0);
    }

    #[test]
    fn synthetic_linf_value() {
        let e = linf_error(&LinfInputs {
            k: 100,
            n_true: 1,
            m: 1.0,
            d: 0.0,
            b_one: 0.0,
            alpha: 0.5,
            b: 0.0,
            eps: 0.0,
            sup_density: 1.0,
            eps_num: 0.0,
            float_ledger: 0.0,
        })
        .unwrap();
        assert!((e.total() - 0.08).abs() < 1e-15);
    }

    #[test]
    fn alpha_at_one_rejected() {
        let x = LinfInputs {
            k: 100,
            n_true: 1,
            m: 1.0,
            d: 0.0,
            b_one: 0.0,
            alpha: 1.0,
            b: 0.0,
            eps: 0.0,
            sup_density: 1.0,
            eps_num: 0.0,
            float_ledger: 0.0,
        };
        assert_eq!(linf_error(&x), Err(CertifyError::AlphaTooLarge(1.0)));
    }
}

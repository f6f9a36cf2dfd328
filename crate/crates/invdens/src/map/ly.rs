//! Lasota–Yorke coefficients for the bounded-variation and Lipschitz settings.

use serde::{Deserialize, Serialize};

use super::{MapError, PiecewiseMap};
use crate::interval::Interval;
use crate::scalar::Scalar;

/// Coefficients of `Var(Lf) <= 2 lambda Var(f) + B' |f|_1` and the a-priori bound `B`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyCoefficientsBv<F> {
    pub lambda: Interval<F>,
    pub b_prime: Interval<F>,
    pub b: Interval<F>,
    pub min_branch_len: Interval<F>,
    pub distortion_sup: Interval<F>,
}

/// Coefficients of the Lipschitz inequality for expanding circle maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LyCoefficientsLip<F> {
    pub lambda: Interval<F>,
    pub b_var: Interval<F>,
    pub m_sup: Interval<F>,
    pub k_iter: u32,
    pub alpha: Interval<F>,
    pub b_one: Interval<F>,
    pub distortion_sup: Interval<F>,
}

/// `lambda = 1/inf|T'|` with the upper end certified.
pub fn contraction_factor<F: Scalar>(map: &PiecewiseMap<F>) -> Result<Interval<F>, MapError> {
    let inf_d = map.inf_abs_derivative();
    if inf_d.lo <= F::zero() {
        return Err(MapError::DerivativeTouchesZero(0.0));
    }
    Ok(inf_d.recip().expect("positive"))
}

pub fn ly_coefficients_bv<F: Scalar>(map: &PiecewiseMap<F>) -> Result<LyCoefficientsBv<F>, MapError> {
    let lambda = contraction_factor(map)?;
    let two = Interval::point(F::lit(2.0));
    let two_lambda = two * lambda;
    if two_lambda.hi >= F::one() {
        return Err(MapError::ExpansionTooWeak {
            inf_derivative: map.inf_abs_derivative().lo.as_f64(),
            iterate: map.iterate(),
            needed: 2.0,
        });
    }
    let min_len = map.min_piece_len();
    let min_len = Interval::new(min_len.lo.max(F::zero()), min_len.hi);
    let dist = map.distortion_sup();
    let b_prime = two.div(min_len).map_err(|_| MapError::Unresolvable("piece of zero length".into()))? + two * dist;
    let b = b_prime.div(Interval::one() - two_lambda).expect("2 lambda < 1");
    Ok(LyCoefficientsBv { lambda, b_prime, b, min_branch_len: min_len, distortion_sup: dist })
}

pub fn ly_coefficients_lip<F: Scalar>(map: &PiecewiseMap<F>) -> Result<LyCoefficientsLip<F>, MapError> {
    let lambda = contraction_factor(map)?;
    if lambda.hi >= F::one() {
        return Err(MapError::ExpansionTooWeak {
            inf_derivative: map.inf_abs_derivative().lo.as_f64(),
            iterate: map.iterate(),
            needed: 1.0,
        });
    }
    let dist = map.distortion_sup();
    let dist_up = Interval::point(dist.hi);
    let lambda_up = Interval::point(lambda.hi);
    let b_var = dist.div(Interval::one() - lambda).expect("lambda < 1");
    let m_sup = b_var + Interval::one();
    let mut k_iter = 0;
    let mut alpha = Interval::zero();
    for k in 1..=64u32 {
        let a = Interval::point(m_sup.hi) * lambda_up.powi(k);
        if a.hi < F::one() {
            k_iter = k;
            alpha = a;
            break;
        }
    }
    if k_iter == 0 {
        return Err(MapError::NoContractingPower);
    }
    let l = Interval::from_int(map.pieces().len() as i64);
    let b_one = l * dist_up;
    Ok(LyCoefficientsLip { lambda, b_var, m_sup, k_iter, alpha, b_one, distortion_sup: dist })
}

/// Bound on `||(L - L_k) f||_inf` at the fixed point `f`, for hat discretizations with `k` nodes.
pub fn op_distance_bound<F: Scalar>(c: &LyCoefficientsLip<F>, k: usize) -> Result<F, MapError> {
    if c.alpha.hi >= F::one() {
        return Err(MapError::NoContractingPower);
    }
    let m = Interval::point(c.m_sup.hi);
    let b1 = Interval::point(c.b_one.hi);
    let sup_f = Interval::point(c.b_var.hi) + Interval::one();
    let geo = Interval::one() + b1.div(Interval::one() - Interval::point(c.alpha.hi)).unwrap();
    let lip_f = m * geo * sup_f;
    let two_over_k = Interval::point(F::lit(2.0)).div(Interval::from_int(k as i64)).unwrap();
    Ok((two_over_k * (Interval::one() + m) * lip_f).hi)
}

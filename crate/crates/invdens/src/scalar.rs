use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Binary floating point type usable as interval endpoint.
///
/// Directed rounding is emulated: every operation is performed in
/// round-to-nearest and the exact residual decides whether the result
/// has to be moved one ulp outward.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + LowerExp + Default + Send + Sync + 'static
{
    /// Machine epsilon of the format (2^-52 for binary64).
    const EPS_MACH: Self;
    /// Below this magnitude products and quotients may lose the exact residual.
    const TINY: Self;
    const NAME: &'static str;

    fn next_up(self) -> Self;
    fn next_down(self) -> Self;

    /// Largest representable value not above pi.
    fn pi_lo() -> Self;
    /// Smallest representable value not below pi.
    fn pi_hi() -> Self;

    /// Largest representable value `<= x`.
    fn down_from_f64(x: f64) -> Self;
    /// Smallest representable value `>= x`.
    fn up_from_f64(x: f64) -> Self;

    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap()
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap()
    }
}

impl Scalar for f64 {
    const EPS_MACH: f64 = f64::EPSILON;
    const TINY: f64 = 1.0e-290;
    const NAME: &'static str = "f64";

    fn next_up(self) -> f64 {
        f64::next_up(self)
    }
    fn next_down(self) -> f64 {
        f64::next_down(self)
    }
    fn pi_lo() -> f64 {
        std::f64::consts::PI
    }
    fn pi_hi() -> f64 {
        f64::next_up(std::f64::consts::PI)
    }
    fn down_from_f64(x: f64) -> f64 {
        x
    }
    fn up_from_f64(x: f64) -> f64 {
        x
    }
}

impl Scalar for f32 {
    const EPS_MACH: f32 = f32::EPSILON;
    const TINY: f32 = 1.0e-30;
    const NAME: &'static str = "f32";

    fn next_up(self) -> f32 {
        f32::next_up(self)
    }
    fn next_down(self) -> f32 {
        f32::next_down(self)
    }
    fn pi_lo() -> f32 {
        f32::next_down(std::f32::consts::PI)
    }
    fn pi_hi() -> f32 {
        std::f32::consts::PI
    }
    fn down_from_f64(x: f64) -> f32 {
        let r = x as f32;
        if (r as f64) > x {
            f32::next_down(r)
        } else {
            r
        }
    }
    fn up_from_f64(x: f64) -> f32 {
        let r = x as f32;
        if (r as f64) < x {
            f32::next_up(r)
        } else {
            r
        }
    }
}

fn two_sum<F: Scalar>(a: F, b: F) -> (F, F) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

fn finite_or<F: Scalar>(s: F, a: F, b: F) -> bool {
    s.is_finite() && a.is_finite() && b.is_finite()
}

pub(crate) fn add_up<F: Scalar>(a: F, b: F) -> F {
    let (s, e) = two_sum(a, b);
    if !finite_or(s, a, b) {
        return if s.is_nan() { F::infinity() } else { s };
    }
    if e > F::zero() {
        s.next_up()
    } else {
        s
    }
}

pub(crate) fn add_down<F: Scalar>(a: F, b: F) -> F {
    let (s, e) = two_sum(a, b);
    if !finite_or(s, a, b) {
        return if s.is_nan() { F::neg_infinity() } else { s };
    }
    if e < F::zero() {
        s.next_down()
    } else {
        s
    }
}

pub(crate) fn sub_up<F: Scalar>(a: F, b: F) -> F {
    add_up(a, -b)
}

pub(crate) fn sub_down<F: Scalar>(a: F, b: F) -> F {
    add_down(a, -b)
}

fn mul_residual<F: Scalar>(a: F, b: F) -> (F, Option<F>) {
    let p = a * b;
    if a.is_zero() || b.is_zero() {
        return (F::zero(), Some(F::zero()));
    }
    if !p.is_finite() || p.abs() < F::TINY {
        return (p, None);
    }
    (p, Some(a.mul_add(b, -p)))
}

pub(crate) fn mul_up<F: Scalar>(a: F, b: F) -> F {
    match mul_residual(a, b) {
        (p, Some(e)) => {
            if e > F::zero() {
                p.next_up()
            } else {
                p
            }
        }
        (p, None) if p.is_nan() => F::infinity(),
        (p, None) if p.is_infinite() => p,
        (p, None) => p.next_up(),
    }
}

pub(crate) fn mul_down<F: Scalar>(a: F, b: F) -> F {
    match mul_residual(a, b) {
        (p, Some(e)) => {
            if e < F::zero() {
                p.next_down()
            } else {
                p
            }
        }
        (p, None) if p.is_nan() => F::neg_infinity(),
        (p, None) if p.is_infinite() => p,
        (p, None) => p.next_down(),
    }
}

// sign of (a/b - q), or None when the residual is unreliable
fn div_residual<F: Scalar>(a: F, b: F) -> (F, Option<F>) {
    let q = a / b;
    if a.is_zero() {
        return (q, Some(F::zero()));
    }
    if !q.is_finite() || q.abs() < F::TINY || a.abs() < F::TINY || !b.is_finite() {
        return (q, None);
    }
    let r = (-q).mul_add(b, a);
    let s = if b > F::zero() { r } else { -r };
    (q, Some(s))
}

pub(crate) fn div_up<F: Scalar>(a: F, b: F) -> F {
    match div_residual(a, b) {
        (q, Some(s)) => {
            if s > F::zero() {
                q.next_up()
            } else {
                q
            }
        }
        (q, None) if q.is_nan() => F::infinity(),
        (q, None) if q.is_infinite() => q,
        (q, None) => q.next_up(),
    }
}

pub(crate) fn div_down<F: Scalar>(a: F, b: F) -> F {
    match div_residual(a, b) {
        (q, Some(s)) => {
            if s < F::zero() {
                q.next_down()
            } else {
                q
            }
        }
        (q, None) if q.is_nan() => F::neg_infinity(),
        (q, None) if q.is_infinite() => q,
        (q, None) => q.next_down(),
    }
}

/// Upward rounded sum of nonnegative terms in the given order.
pub fn sum_up<F: Scalar>(terms: &[F]) -> F {
    terms.iter().fold(F::zero(), |acc, &t| add_up(acc, t))
}

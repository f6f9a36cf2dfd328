use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::scalar::{self, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
pub enum IntervalError {
    #[error("division by an interval containing zero")]
    DivisionByZero,
    #[error("logarithm of an interval touching zero")]
    LogNonPositive,
    #[error("empty interval")]
    Empty,
}

/// Closed interval `[lo, hi]` with outward rounded arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval<F> {
    pub lo: F,
    pub hi: F,
}

impl<F: Scalar> Interval<F> {
    pub fn new(lo: F, hi: F) -> Self {
        assert!(lo <= hi, "invalid interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(x: F) -> Self {
        Interval { lo: x, hi: x }
    }

    pub fn zero() -> Self {
        Self::point(F::zero())
    }

    pub fn one() -> Self {
        Self::point(F::one())
    }

    pub fn unit() -> Self {
        Interval::new(F::zero(), F::one())
    }

    /// Tightest enclosure of an `f64` value.
    pub fn from_f64(x: f64) -> Self {
        Interval { lo: F::down_from_f64(x), hi: F::up_from_f64(x) }
    }

    pub fn from_int(n: i64) -> Self {
        Self::from_f64_pair(n as f64, n as f64, n)
    }

    fn from_f64_pair(lo: f64, hi: f64, n: i64) -> Self {
        let (mut l, mut h) = (F::down_from_f64(lo), F::up_from_f64(hi));
        // i64 -> f64 may round
        if (lo as i128) > n as i128 {
            l = F::down_from_f64(lo.next_down());
        }
        if (hi as i128) < n as i128 {
            h = F::up_from_f64(hi.next_up());
        }
        Interval { lo: l, hi: h }
    }

    pub fn pi() -> Self {
        Interval { lo: F::pi_lo(), hi: F::pi_hi() }
    }

    pub fn hull(self, other: Self) -> Self {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn intersect(self, other: Self) -> Option<Self> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        if lo <= hi {
            Some(Interval { lo, hi })
        } else {
            None
        }
    }

    pub fn contains(&self, x: F) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn contains_zero(&self) -> bool {
        self.lo <= F::zero() && F::zero() <= self.hi
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn mid(&self) -> F {
        if self.lo == self.hi {
            return self.lo;
        }
        let m = self.lo / F::lit(2.0) + self.hi / F::lit(2.0);
        m.max(self.lo).min(self.hi)
    }

    /// Upper bound of `hi - lo`.
    pub fn width(&self) -> F {
        scalar::sub_up(self.hi, self.lo)
    }

    /// Upper bound of the radius around `mid()`.
    pub fn rad(&self) -> F {
        let m = self.mid();
        scalar::sub_up(m, self.lo).max(scalar::sub_up(self.hi, m))
    }

    /// Largest absolute value.
    pub fn mag(&self) -> F {
        self.lo.abs().max(self.hi.abs())
    }

    /// Smallest absolute value.
    pub fn mig(&self) -> F {
        if self.contains_zero() {
            F::zero()
        } else {
            self.lo.abs().min(self.hi.abs())
        }
    }

    pub fn abs(self) -> Self {
        if self.lo >= F::zero() {
            self
        } else if self.hi <= F::zero() {
            -self
        } else {
            Interval { lo: F::zero(), hi: self.mag() }
        }
    }

    pub fn min(self, other: Self) -> Self {
        Interval { lo: self.lo.min(other.lo), hi: self.hi.min(other.hi) }
    }

    pub fn max(self, other: Self) -> Self {
        Interval { lo: self.lo.max(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn sqr(self) -> Self {
        let a = self.abs();
        Interval { lo: scalar::mul_down(a.lo, a.lo), hi: scalar::mul_up(a.hi, a.hi) }
    }

    pub fn powi(self, n: u32) -> Self {
        if n == 0 {
            return Self::one();
        }
        if n % 2 == 0 {
            return self.powi(n / 2).sqr();
        }
        // odd powers are monotone
        let ends = |x: F| {
            let a = Interval::point(x.abs());
            let p = (1..n).fold(a, |acc, _| acc * a);
            if x < F::zero() {
                -p
            } else {
                p
            }
        };
        Interval { lo: ends(self.lo).lo, hi: ends(self.hi).hi }
    }

    pub fn scale(self, c: F) -> Self {
        self * Interval::point(c)
    }

    pub fn div(self, rhs: Self) -> Result<Self, IntervalError> {
        if rhs.contains_zero() {
            return Err(IntervalError::DivisionByZero);
        }
        let cands_lo = [
            scalar::div_down(self.lo, rhs.lo),
            scalar::div_down(self.lo, rhs.hi),
            scalar::div_down(self.hi, rhs.lo),
            scalar::div_down(self.hi, rhs.hi),
        ];
        let cands_hi = [
            scalar::div_up(self.lo, rhs.lo),
            scalar::div_up(self.lo, rhs.hi),
            scalar::div_up(self.hi, rhs.lo),
            scalar::div_up(self.hi, rhs.hi),
        ];
        Ok(Interval {
            lo: cands_lo.iter().copied().fold(F::infinity(), F::min),
            hi: cands_hi.iter().copied().fold(F::neg_infinity(), F::max),
        })
    }

    pub fn recip(self) -> Result<Self, IntervalError> {
        Self::one().div(self)
    }

    pub fn ln(self) -> Result<Self, IntervalError> {
        if self.lo <= F::zero() {
            return Err(IntervalError::LogNonPositive);
        }
        Ok(Interval { lo: ln_down(self.lo), hi: ln_up(self.hi) })
    }

    pub fn sin(self) -> Self {
        let two_pi = Self::pi().scale(F::lit(2.0));
        if self.width() >= two_pi.lo {
            return Interval::new(-F::one(), F::one());
        }
        let half_pi = Self::pi().scale(F::lit(0.5));
        let mut lo = sin_down(self.lo).min(sin_down(self.hi));
        let mut hi = sin_up(self.lo).max(sin_up(self.hi));
        if may_contain_phase(self, half_pi, two_pi) {
            hi = F::one();
        }
        if may_contain_phase(self, -half_pi, two_pi) {
            lo = -F::one();
        }
        Interval { lo: lo.max(-F::one()), hi: hi.min(F::one()) }
    }

    pub fn cos(self) -> Self {
        let half_pi = Self::pi().scale(F::lit(0.5));
        (self + half_pi).sin()
    }
}

// whether self contains phase + 2 pi n for some integer n
fn may_contain_phase<F: Scalar>(x: Interval<F>, phase: Interval<F>, period: Interval<F>) -> bool {
    let a = (Interval::point(x.lo) - phase).div(period).unwrap();
    let b = (Interval::point(x.hi) - phase).div(period).unwrap();
    a.lo.ceil() <= b.hi.floor()
}

fn nudge_up<F: Scalar>(x: F, n: usize) -> F {
    (0..n).fold(x, |v, _| v.next_up())
}

fn nudge_down<F: Scalar>(x: F, n: usize) -> F {
    (0..n).fold(x, |v, _| v.next_down())
}

fn ln_up<F: Scalar>(x: F) -> F {
    if x == F::one() {
        return F::zero();
    }
    nudge_up(x.ln(), 2)
}

fn ln_down<F: Scalar>(x: F) -> F {
    if x == F::one() {
        return F::zero();
    }
    nudge_down(x.ln(), 2)
}

fn sin_up<F: Scalar>(x: F) -> F {
    if x.is_zero() {
        return F::zero();
    }
    nudge_up(x.sin(), 2).min(F::one())
}

fn sin_down<F: Scalar>(x: F) -> F {
    if x.is_zero() {
        return F::zero();
    }
    nudge_down(x.sin(), 2).max(-F::one())
}

impl<F: Scalar> Add for Interval<F> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Interval { lo: scalar::add_down(self.lo, rhs.lo), hi: scalar::add_up(self.hi, rhs.hi) }
    }
}

impl<F: Scalar> Sub for Interval<F> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Interval { lo: scalar::sub_down(self.lo, rhs.hi), hi: scalar::sub_up(self.hi, rhs.lo) }
    }
}

impl<F: Scalar> Neg for Interval<F> {
    type Output = Self;
    fn neg(self) -> Self {
        Interval { lo: -self.hi, hi: -self.lo }
    }
}

impl<F: Scalar> Mul for Interval<F> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b, c, d) = (self.lo, self.hi, rhs.lo, rhs.hi);
        let lo = [
            scalar::mul_down(a, c),
            scalar::mul_down(a, d),
            scalar::mul_down(b, c),
            scalar::mul_down(b, d),
        ]
        .into_iter()
        .fold(F::infinity(), F::min);
        let hi = [
            scalar::mul_up(a, c),
            scalar::mul_up(a, d),
            scalar::mul_up(b, c),
            scalar::mul_up(b, d),
        ]
        .into_iter()
        .fold(F::neg_infinity(), F::max);
        Interval { lo, hi }
    }
}

impl<F: Scalar> fmt::Display for Interval<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{:e}, {:e}]", self.lo, self.hi)
    }
}

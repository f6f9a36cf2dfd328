use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::Zero;

use super::poly::{horner, Poly};
use crate::interval::Interval;
use crate::rational::ExactRational;
use crate::scalar::Scalar;

/// `amp * sin(freq * pi * x)`
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Trig {
    pub amp: ExactRational,
    pub freq: ExactRational,
}

/// Polynomial plus an optional sine term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExprDef {
    pub poly: Poly,
    pub trig: Option<Trig>,
}

impl ExprDef {
    pub fn poly(poly: Poly) -> Self {
        ExprDef { poly, trig: None }
    }

    pub fn is_polynomial(&self) -> bool {
        self.trig.is_none()
    }

    /// Slope and intercept when the expression is an exact affine function.
    pub fn affine(&self) -> Option<(ExactRational, ExactRational)> {
        if self.trig.is_none() && self.poly.degree() <= 1 {
            Some((self.poly.coeff(1), self.poly.coeff(0)))
        } else {
            None
        }
    }

    /// Exact value at a rational point when one exists.
    pub fn eval_exact(&self, x: &ExactRational) -> Option<ExactRational> {
        let p = self.poly.eval(x);
        match &self.trig {
            None => Some(p),
            Some(t) => {
                let half_turns = &(&t.freq * x) * &ExactRational::from_int(2);
                if !half_turns.is_integer() {
                    return None;
                }
                // sin(n pi / 2)
                let n: BigInt = half_turns.floor();
                let r = n.mod_floor(&BigInt::from(4));
                let s = if r.is_zero() || r == BigInt::from(2) {
                    0
                } else if r == BigInt::from(1) {
                    1
                } else {
                    -1
                };
                Some(&p + &(&t.amp * &ExactRational::from_int(s)))
            }
        }
    }
}

impl fmt::Display for ExprDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.poly)?;
        if let Some(t) = &self.trig {
            let amp = if t.amp.is_integer() { t.amp.to_string() } else { format!("({})", t.amp) };
            let freq = if t.freq.is_integer() { t.freq.to_string() } else { format!("({})", t.freq) };
            write!(f, " + {amp} sin({freq} pi x)")?;
        }
        Ok(())
    }
}

/// Value, first and second derivative enclosures.
#[derive(Clone, Copy, Debug)]
pub struct Jet<F> {
    pub v: Interval<F>,
    pub d1: Interval<F>,
    pub d2: Interval<F>,
}

/// Expression with coefficient enclosures cached in the working precision.
#[derive(Clone, Debug)]
pub struct Expr<F> {
    pub def: ExprDef,
    p0: Vec<Interval<F>>,
    p1: Vec<Interval<F>>,
    p2: Vec<Interval<F>>,
    trig: Option<(Interval<F>, Interval<F>)>,
}

impl<F: Scalar> Expr<F> {
    pub fn new(def: ExprDef) -> Self {
        let d1 = def.poly.derivative();
        let d2 = d1.derivative();
        let trig = def.trig.as_ref().map(|t| (t.amp.to_interval(), t.freq.to_interval() * Interval::pi()));
        Expr { p0: def.poly.to_intervals(), p1: d1.to_intervals(), p2: d2.to_intervals(), trig, def }
    }

    pub fn value(&self, x: Interval<F>) -> Interval<F> {
        let mut v = horner(&self.p0, x);
        if let Some((a, w)) = self.trig {
            v = v + a * (w * x).sin();
        }
        v
    }

    pub fn derivative(&self, x: Interval<F>) -> Interval<F> {
        let mut d = horner(&self.p1, x);
        if let Some((a, w)) = self.trig {
            d = d + a * w * (w * x).cos();
        }
        d
    }

    pub fn jet(&self, x: Interval<F>) -> Jet<F> {
        let mut v = horner(&self.p0, x);
        let mut d1 = horner(&self.p1, x);
        let mut d2 = horner(&self.p2, x);
        if let Some((a, w)) = self.trig {
            let wx = w * x;
            let (s, c) = (wx.sin(), wx.cos());
            v = v + a * s;
            d1 = d1 + a * w * c;
            d2 = d2 - a * w.sqr() * s;
        }
        Jet { v, d1, d2 }
    }

    /// Enclosure of the value at a rational point, exact when possible.
    pub fn value_at(&self, x: &ExactRational) -> Interval<F> {
        match self.def.eval_exact(x) {
            Some(v) => v.to_interval(),
            None => self.value(x.to_interval()),
        }
    }
}

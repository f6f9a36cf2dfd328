use std::fmt;

use crate::interval::Interval;
use crate::rational::ExactRational;
use crate::scalar::Scalar;

/// Polynomial with exact rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Poly {
    coeffs: Vec<ExactRational>,
}

impl Poly {
    pub fn new(mut coeffs: Vec<ExactRational>) -> Self {
        while coeffs.last().map_or(false, |c| c.is_zero()) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn zero() -> Self {
        Poly { coeffs: Vec::new() }
    }

    pub fn constant(c: ExactRational) -> Self {
        Poly::new(vec![c])
    }

    pub fn x() -> Self {
        Poly::new(vec![ExactRational::zero(), ExactRational::one()])
    }

    pub fn coeffs(&self) -> &[ExactRational] {
        &self.coeffs
    }

    pub fn coeff(&self, i: usize) -> ExactRational {
        self.coeffs.get(i).cloned().unwrap_or_else(ExactRational::zero)
    }

    /// Degree, with the zero polynomial reported as 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.len() <= 1
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let n = self.coeffs.len().max(other.coeffs.len());
        Poly::new((0..n).map(|i| &self.coeff(i) + &other.coeff(i)).collect())
    }

    pub fn neg(&self) -> Poly {
        Poly::new(self.coeffs.iter().map(|c| -c).collect())
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut out = vec![ExactRational::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] = &out[i + j] + &(a * b);
            }
        }
        Poly::new(out)
    }

    pub fn scale(&self, c: &ExactRational) -> Poly {
        Poly::new(self.coeffs.iter().map(|a| a * c).collect())
    }

    pub fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(ExactRational::one()), |acc, _| acc.mul(self))
    }

    /// `self(inner(x))`.
    pub fn compose(&self, inner: &Poly) -> Poly {
        self.coeffs
            .iter()
            .rev()
            .fold(Poly::zero(), |acc, c| acc.mul(inner).add(&Poly::constant(c.clone())))
    }

    pub fn derivative(&self) -> Poly {
        Poly::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * &ExactRational::from_int(i as i64))
                .collect(),
        )
    }

    pub fn eval(&self, x: &ExactRational) -> ExactRational {
        self.coeffs.iter().rev().fold(ExactRational::zero(), |acc, c| &(&acc * x) + c)
    }

    pub fn to_intervals<F: Scalar>(&self) -> Vec<Interval<F>> {
        self.coeffs.iter().map(|c| c.to_interval()).collect()
    }
}

/// Horner evaluation with interval coefficients.
pub fn horner<F: Scalar>(coeffs: &[Interval<F>], x: Interval<F>) -> Interval<F> {
    coeffs.iter().rev().fold(Interval::zero(), |acc, &c| acc * x + c)
}

impl fmt::Display for Poly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let lit = if c.is_integer() { c.to_string() } else { format!("({c})") };
            match i {
                0 => write!(f, "{lit}")?,
                1 => write!(f, "{lit} x")?,
                _ => write!(f, "{lit} x^{i}")?,
            }
        }
        if first {
            write!(f, "0")?;
        }
        Ok(())
    }
}

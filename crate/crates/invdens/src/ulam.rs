//! Rigorous assembly of the Ulam matrix on the uniform partition of `[0, 1]`.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use thiserror::Error;

use crate::interval::Interval;
use crate::map::{Endpoint, MapError, Piece, PiecewiseMap};
use crate::matrix::{MatrixError, NormKind, TransitionMatrix};
use crate::rational::ExactRational;
use crate::scalar::Scalar;

/// Subdivision parameters.
///
/// A subcell whose image straddles a cell boundary is split into `m` parts
/// until its measure relative to the cell is at most `nu`; it is then
/// charged to the error of every column it may reach.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AssemblyConfig {
    pub nu: f64,
    pub m: u32,
    pub max_depth: u32,
}

impl AssemblyConfig {
    pub fn new(nu: f64) -> Self {
        let m = 16;
        AssemblyConfig { nu, m, max_depth: depth_for(nu, m) + 2 }
    }

    /// Default threshold `1e-6 / k`.
    pub fn for_k(k: usize) -> Self {
        AssemblyConfig::new(1e-6 / k as f64)
    }

    pub fn validate(&self) -> Result<(), AssemblyError> {
        if !(self.nu > 0.0) || !self.nu.is_finite() {
            return Err(AssemblyError::Config(format!("nu must be positive, got {}", self.nu)));
        }
        if self.m < 2 {
            return Err(AssemblyError::Config(format!("branching factor must be at least 2, got {}", self.m)));
        }
        Ok(())
    }
}

fn depth_for(nu: f64, m: u32) -> u32 {
    let mut d = 0;
    let mut w = 1.0;
    while w > nu && d < 64 {
        w /= m as f64;
        d += 1;
    }
    d
}

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("invalid assembly configuration: {0}")]
    Config(String),
    #[error("row {row}: depth {depth} reached before subcells shrank below nu = {nu:e}; nu is too small for the working precision")]
    DepthExceeded { row: usize, depth: u32, nu: f64 },
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

struct RowAcc<F> {
    k: usize,
    exact: BTreeMap<usize, ExactRational>,
    value: BTreeMap<usize, Interval<F>>,
    charge: BTreeMap<usize, F>,
}

impl<F: Scalar> RowAcc<F> {
    fn new(k: usize) -> Self {
        RowAcc { k, exact: BTreeMap::new(), value: BTreeMap::new(), charge: BTreeMap::new() }
    }

    fn add(&mut self, j: usize, v: Interval<F>) {
        let e = self.value.entry(j).or_insert_with(Interval::zero);
        *e = *e + v;
    }

    fn add_exact(&mut self, j: usize, v: ExactRational) {
        let e = self.exact.entry(j).or_insert_with(ExactRational::zero);
        *e = &*e + &v;
    }

    fn charge(&mut self, jr: (usize, usize), c: F) {
        for j in jr.0..=jr.1 {
            let e = self.charge.entry(j).or_insert_with(F::zero);
            *e = (Interval::point(*e) + Interval::point(c)).hi;
        }
    }

    fn columns(&self, y: Interval<F>) -> (usize, usize) {
        let kk = Interval::from_int(self.k as i64);
        let lo = (y * kk).lo.floor().to_i64().unwrap_or(0);
        let hi = (y * kk).hi.ceil().to_i64().unwrap_or(self.k as i64) - 1;
        let top = self.k as i64 - 1;
        let lo = lo.clamp(0, top) as usize;
        let hi = hi.clamp(0, top) as usize;
        (lo, hi.max(lo))
    }

    fn finish(mut self) -> (Vec<(u32, F, F)>, F) {
        for (j, q) in std::mem::take(&mut self.exact) {
            self.add(j, q.to_interval());
        }
        let mut cols: Vec<usize> = self.value.keys().chain(self.charge.keys()).copied().collect();
        cols.sort_unstable();
        cols.dedup();
        let mut row = Vec::with_capacity(cols.len());
        let mut eps = F::zero();
        for j in cols {
            let v = self.value.get(&j).copied().unwrap_or_else(Interval::zero);
            let c = self.charge.get(&j).copied().unwrap_or_else(F::zero);
            let hull = Interval::new(v.lo.max(F::zero()), (Interval::point(v.hi) + Interval::point(c)).hi);
            if hull.hi.is_zero() {
                continue;
            }
            let mid = hull.mid();
            let err = (Interval::point(hull.hi) - Interval::point(mid)).hi.max((Interval::point(mid) - Interval::point(hull.lo)).hi);
            eps = eps.max(err);
            row.push((j as u32, mid, err));
        }
        (row, eps)
    }
}

fn cell_exact(i: usize, k: usize) -> (ExactRational, ExactRational) {
    let kk = BigInt::from(k);
    (
        ExactRational(num_rational::BigRational::new(BigInt::from(i), kk.clone())),
        ExactRational(num_rational::BigRational::new(BigInt::from(i + 1), kk)),
    )
}

/// Contribution of an affine piece with exact endpoints, computed in rational arithmetic.
fn affine_exact<F: Scalar>(piece: &Piece<F>, i: usize, acc: &mut RowAcc<F>) -> bool {
    let (Some((a, c)), Some(plo), Some(phi)) = (piece.affine(), piece.lo.as_exact(), piece.hi.as_exact()) else {
        return false;
    };
    let (clo, chi) = cell_exact(i, acc.k);
    let x0 = if plo > &clo { plo.clone() } else { clo };
    let x1 = if phi < &chi { phi.clone() } else { chi };
    if x0 >= x1 {
        return true;
    }
    let y0 = &(a * &x0) + c;
    let y1 = &(a * &x1) + c;
    let (y0, y1) = if y0 <= y1 { (y0, y1) } else { (y1, y0) };
    let kq = ExactRational::from_int(acc.k as i64);
    let scale = &kq / &a.abs();
    let first = (&y0 * &kq).floor().max(BigInt::zero());
    let last = (&y1 * &kq).ceil().min(BigInt::from(acc.k));
    let mut j = first;
    while j < last {
        let lo = ExactRational::from_bigint(j.clone()) / kq.clone();
        let hi = ExactRational::from_bigint(&j + BigInt::one()) / kq.clone();
        let ov_lo = if lo > y0 { lo } else { y0.clone() };
        let ov_hi = if hi < y1 { hi } else { y1.clone() };
        if ov_hi > ov_lo {
            acc.add_exact(j.to_usize().unwrap(), &(&ov_hi - &ov_lo) * &scale);
        }
        j += 1;
    }
    true
}

enum Side {
    Inside,
    Clip(ExactRational),
    Uncertain,
}

fn side_lo<F: Scalar>(j_lo: F, j_lo_q: impl Fn() -> ExactRational, e: &Endpoint<F>) -> Side {
    if j_lo >= e.iv().hi {
        return Side::Inside;
    }
    match e.as_exact() {
        Some(q) if q >= &j_lo_q() => Side::Clip(q.clone()),
        Some(_) => Side::Inside,
        None => Side::Uncertain,
    }
}

fn side_hi<F: Scalar>(j_hi: F, j_hi_q: impl Fn() -> ExactRational, e: &Endpoint<F>) -> Side {
    if j_hi <= e.iv().lo {
        return Side::Inside;
    }
    match e.as_exact() {
        Some(q) if q <= &j_hi_q() => Side::Clip(q.clone()),
        Some(_) => Side::Inside,
        None => Side::Uncertain,
    }
}

fn ratio(num: i128, den: i128) -> ExactRational {
    ExactRational(num_rational::BigRational::new(BigInt::from(num), BigInt::from(den)))
}

/// Contribution of a general monotone piece by recursive subdivision of the cell.
fn subdivide<F: Scalar>(piece: &Piece<F>, i: usize, cfg: &AssemblyConfig, acc: &mut RowAcc<F>) -> Result<(), AssemblyError> {
    let k = acc.k as i128;
    let m = cfg.m as i128;
    let dom = piece.dom_hull();
    // (depth, index within the cell at that depth)
    let mut stack: Vec<(u32, i128)> = vec![(0, 0)];
    while let Some((d, n)) = stack.pop() {
        let md = m.pow(d);
        let den = k * md;
        let num = i as i128 * md + n;
        let den_iv = Interval::from_int(den as i64);
        let jl = Interval::from_int(num as i64).div(den_iv).unwrap();
        let jh = Interval::from_int((num + 1) as i64).div(den_iv).unwrap();
        let cell = Interval::new(jl.lo, jh.hi);
        if cell.hi <= dom.lo || cell.lo >= dom.hi {
            continue;
        }
        // measure relative to the row cell
        let rel = Interval::one().div(Interval::from_int(md as i64)).unwrap();
        let sl = side_lo(jl.hi, || ratio(num, den), &piece.lo);
        let sh = side_hi(jh.lo, || ratio(num + 1, den), &piece.hi);
        let (clip, mass) = match (&sl, &sh) {
            (Side::Uncertain, _) | (_, Side::Uncertain) => (cell.intersect(dom).unwrap_or(cell), None),
            (Side::Inside, Side::Inside) => (cell, Some(rel)),
            _ => {
                let a = if let Side::Clip(q) = &sl { q.clone() } else { ratio(num, den) };
                let b = if let Side::Clip(q) = &sh { q.clone() } else { ratio(num + 1, den) };
                if a >= b {
                    continue;
                }
                let clip = Interval::new(a.to_interval::<F>().lo, b.to_interval::<F>().hi);
                (clip, Some((&(&b - &a) * &ExactRational::from_int(acc.k as i64)).to_interval()))
            }
        };
        let y = piece.image(clip);
        let cols = acc.columns(y);
        if let (Some(mass), true) = (mass, cols.0 == cols.1) {
            acc.add(cols.0, mass);
            continue;
        }
        if rel.hi.as_f64() <= cfg.nu {
            acc.charge(cols, mass.unwrap_or(rel).hi);
            continue;
        }
        let width_ok = (jh.lo - jl.hi) > F::EPS_MACH * F::lit(4.0) * jh.hi.max(F::one() / F::from_i128(den).unwrap());
        if d >= cfg.max_depth || den.checked_mul(m).map_or(true, |v| v > i64::MAX as i128) || !width_ok {
            return Err(AssemblyError::DepthExceeded { row: i, depth: d, nu: cfg.nu });
        }
        for c in (0..m).rev() {
            stack.push((d + 1, n * m + c));
        }
    }
    Ok(())
}

/// Row `i` of the Ulam matrix as `(column, value, error)` triples and the largest entry error.
pub fn assemble_row<F: Scalar>(
    map: &PiecewiseMap<F>,
    k: usize,
    i: usize,
    cfg: &AssemblyConfig,
) -> Result<(Vec<(u32, F, F)>, F), AssemblyError> {
    let kk = Interval::from_int(k as i64);
    let cell = Interval::new(Interval::from_int(i as i64).div(kk).unwrap().lo, Interval::from_int(i as i64 + 1).div(kk).unwrap().hi);
    let mut acc = RowAcc::new(k);
    for (_, piece, _) in map.pieces_meeting(cell) {
        if !affine_exact(piece, i, &mut acc) {
            subdivide(piece, i, cfg, &mut acc)?;
        }
    }
    Ok(acc.finish())
}

/// Raw Ulam matrix with `k` cells; rows are assembled in parallel and merged in order.
pub fn assemble_ulam<F: Scalar>(map: &PiecewiseMap<F>, k: usize, cfg: &AssemblyConfig) -> Result<TransitionMatrix<F>, AssemblyError> {
    cfg.validate()?;
    let rows = (0..k)
        .into_par_iter()
        .map(|i| assemble_row(map, k, i, cfg).map(|(r, _)| r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(TransitionMatrix::from_rows(k, rows, NormKind::L1))
}

//! Piecewise monotone maps of the unit interval and their monotone pieces.
//!
//! A map is described by [`MapSpec`]. [`PiecewiseMap::build`] splits every
//! branch at the preimages of integers (for `mod 1` branches) and composes
//! the result `iterate` times, so that each [`Piece`] is a single monotone
//! branch of `T^p` with values in `[0, 1]`.

pub mod expr;
pub mod ly;
pub mod parse;
pub mod poly;

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_traits::ToPrimitive;

use crate::bounds;
use crate::interval::Interval;
use crate::rational::ExactRational;
use crate::scalar::Scalar;
pub use expr::{Expr, ExprDef, Jet, Trig};
pub use poly::Poly;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MapError {
    #[error("invalid branch domains: {0}")]
    InvalidDomain(String),
    #[error("branch {0} is not strictly monotone on its domain")]
    NotMonotone(usize),
    #[error("branch {0} takes values outside [0,1]; add `mod 1`")]
    RangeOutsideUnit(usize),
    #[error("cannot resolve breakpoint: {0}")]
    Unresolvable(String),
    #[error("inf |T'| = {inf_derivative:.6} is too small for iterate {iterate} (need > {needed}); raise --iterate")]
    ExpansionTooWeak { inf_derivative: f64, iterate: u32, needed: f64 },
    #[error("no power k <= 64 with M * lambda^k < 1")]
    NoContractingPower,
    #[error("derivative enclosure touches zero near x = {0}")]
    DerivativeTouchesZero(f64),
    #[error("point {0} is outside [0,1]")]
    OutOfDomain(f64),
    #[error("empty input interval")]
    EmptyInput,
}

/// One branch of the map as written in the description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Branch {
    pub lo: ExactRational,
    pub hi: ExactRational,
    pub expr: ExprDef,
    pub mod_one: bool,
}

/// Parsed map description.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MapSpec {
    pub branches: Vec<Branch>,
    pub iterate: u32,
    pub circle: bool,
}

impl MapSpec {
    pub fn validate(&self) -> Result<(), MapError> {
        if self.branches.is_empty() {
            return Err(MapError::InvalidDomain("no branches".into()));
        }
        if self.iterate == 0 {
            return Err(MapError::InvalidDomain("iterate must be positive".into()));
        }
        if !self.branches[0].lo.is_zero() {
            return Err(MapError::InvalidDomain(format!("first branch starts at {}", self.branches[0].lo)));
        }
        if self.branches.last().unwrap().hi != ExactRational::one() {
            return Err(MapError::InvalidDomain(format!(
                "last branch ends at {}",
                self.branches.last().unwrap().hi
            )));
        }
        for (i, b) in self.branches.iter().enumerate() {
            if b.lo >= b.hi {
                return Err(MapError::InvalidDomain(format!("branch {i} has empty domain [{}, {}]", b.lo, b.hi)));
            }
            if i > 0 && self.branches[i - 1].hi != b.lo {
                return Err(MapError::InvalidDomain(format!(
                    "gap or overlap between branch {} (ends {}) and branch {i} (starts {})",
                    i - 1,
                    self.branches[i - 1].hi,
                    b.lo
                )));
            }
        }
        Ok(())
    }
}

/// Domain or value endpoint: exact rational or an enclosure of an irrational point.
#[derive(Clone, Debug)]
pub enum Endpoint<F> {
    Exact(ExactRational, Interval<F>),
    Enclosed(Interval<F>),
}

impl<F: Scalar> Endpoint<F> {
    pub fn exact(q: ExactRational) -> Self {
        let iv = q.to_interval();
        Endpoint::Exact(q, iv)
    }

    pub fn iv(&self) -> Interval<F> {
        match self {
            Endpoint::Exact(_, iv) | Endpoint::Enclosed(iv) => *iv,
        }
    }

    pub fn as_exact(&self) -> Option<&ExactRational> {
        match self {
            Endpoint::Exact(q, _) => Some(q),
            Endpoint::Enclosed(_) => None,
        }
    }

    fn from_value(v: Option<ExactRational>, iv: Interval<F>) -> Self {
        match v {
            Some(q) => Endpoint::exact(q),
            None => Endpoint::Enclosed(iv),
        }
    }

    fn shifted(&self, n: &BigInt) -> Self {
        match self {
            Endpoint::Exact(q, _) => Endpoint::exact(q - &ExactRational::from_bigint(n.clone())),
            Endpoint::Enclosed(iv) => Endpoint::Enclosed(*iv - int_iv(n)),
        }
    }
}

impl<F: Scalar> fmt::Display for Endpoint<F> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Endpoint::Exact(q, _) => write!(f, "{q}"),
            Endpoint::Enclosed(iv) => write!(f, "{iv}"),
        }
    }
}

fn int_iv<F: Scalar>(n: &BigInt) -> Interval<F> {
    Interval::from_int(n.to_i64().expect("shift fits i64"))
}

/// Order of two endpoints, `None` when enclosures overlap.
pub fn cmp_endpoints<F: Scalar>(a: &Endpoint<F>, b: &Endpoint<F>) -> Option<Ordering> {
    if let (Some(x), Some(y)) = (a.as_exact(), b.as_exact()) {
        return Some(x.cmp(y));
    }
    let (x, y) = (a.iv(), b.iv());
    if x.hi < y.lo {
        Some(Ordering::Less)
    } else if x.lo > y.hi {
        Some(Ordering::Greater)
    } else {
        None
    }
}

#[derive(Clone, Debug)]
struct Stage<F> {
    expr: Expr<F>,
    shift: BigInt,
    shift_iv: Interval<F>,
}

impl<F: Scalar> Stage<F> {
    fn new(expr: Expr<F>, shift: BigInt) -> Self {
        let shift_iv = int_iv(&shift);
        Stage { expr, shift, shift_iv }
    }

    fn exact(&self, x: &ExactRational) -> Option<ExactRational> {
        self.expr.def.eval_exact(x).map(|v| &v - &ExactRational::from_bigint(self.shift.clone()))
    }

    fn as_poly(&self) -> Option<Poly> {
        self.expr
            .def
            .is_polynomial()
            .then(|| self.expr.def.poly.sub(&Poly::constant(ExactRational::from_bigint(self.shift.clone()))))
    }
}

/// A monotone branch of `T^p` on `[lo, hi]` with values in `[0, 1]`.
#[derive(Clone, Debug)]
pub struct Piece<F> {
    /// Branch of `T` containing the domain.
    pub branch: usize,
    pub lo: Endpoint<F>,
    pub hi: Endpoint<F>,
    pub increasing: bool,
    /// Values at `lo` and `hi`.
    pub val_lo: Endpoint<F>,
    pub val_hi: Endpoint<F>,
    stages: Vec<Stage<F>>,
    affine: Option<(ExactRational, ExactRational)>,
}

impl<F: Scalar> Piece<F> {
    fn new(
        branch: usize,
        lo: Endpoint<F>,
        hi: Endpoint<F>,
        increasing: bool,
        val_lo: Endpoint<F>,
        val_hi: Endpoint<F>,
        stages: Vec<Stage<F>>,
    ) -> Self {
        let affine = match stages.as_slice() {
            [s] => s.expr.def.affine().map(|(a, c)| (a, &c - &ExactRational::from_bigint(s.shift.clone()))),
            _ => None,
        };
        Piece { branch, lo, hi, increasing, val_lo, val_hi, stages, affine }
    }

    /// `(slope, intercept)` when the piece is `x -> a x + c` with rational `a`, `c`.
    pub fn affine(&self) -> Option<&(ExactRational, ExactRational)> {
        self.affine.as_ref()
    }

    pub fn is_polynomial(&self) -> bool {
        self.stages.iter().all(|s| s.expr.def.is_polynomial())
    }

    /// Symbolic form when the piece is a single polynomial.
    pub fn polynomial(&self) -> Option<Poly> {
        match self.stages.as_slice() {
            [s] => s.as_poly(),
            _ => None,
        }
    }

    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    pub fn dom_hull(&self) -> Interval<F> {
        Interval::new(self.lo.iv().lo, self.hi.iv().hi)
    }

    /// Points certainly inside the domain.
    pub fn dom_inner(&self) -> Option<Interval<F>> {
        let (a, b) = (self.lo.iv().hi, self.hi.iv().lo);
        (a <= b).then(|| Interval::new(a, b))
    }

    pub fn value(&self, x: Interval<F>) -> Interval<F> {
        self.stages.iter().fold(x, |v, s| s.expr.value(v) - s.shift_iv)
    }

    pub fn jet(&self, x: Interval<F>) -> Jet<F> {
        let mut j = Jet { v: x, d1: Interval::one(), d2: Interval::zero() };
        for s in &self.stages {
            let g = s.expr.jet(j.v);
            j = Jet { v: g.v - s.shift_iv, d1: g.d1 * j.d1, d2: g.d2 * j.d1.sqr() + g.d1 * j.d2 };
        }
        j
    }

    pub fn derivative(&self, x: Interval<F>) -> Interval<F> {
        if self.stages.len() == 1 {
            return self.stages[0].expr.derivative(x);
        }
        self.jet(x).d1
    }

    pub fn exact_value(&self, x: &ExactRational) -> Option<ExactRational> {
        let mut v = x.clone();
        for s in &self.stages {
            v = s.exact(&v)?;
        }
        Some(v)
    }

    pub fn value_at(&self, x: &ExactRational) -> Interval<F> {
        match self.exact_value(x) {
            Some(v) => v.to_interval(),
            None => self.value(x.to_interval()),
        }
    }

    /// Image of `x` under the monotone extension, before clipping.
    pub fn image_raw(&self, x: Interval<F>) -> Interval<F> {
        let a = self.value(Interval::point(x.lo));
        let b = self.value(Interval::point(x.hi));
        a.hull(b)
    }

    /// Enclosure of `T(x ∩ domain)`, valid whenever `x` lies in the domain hull.
    pub fn image(&self, x: Interval<F>) -> Interval<F> {
        let r = self.image_raw(x);
        Interval::new(r.lo.max(F::zero()).min(F::one()), r.hi.min(F::one()).max(F::zero()))
    }

    fn value_endpoint(&self, x: &Endpoint<F>) -> Endpoint<F> {
        match x {
            Endpoint::Exact(q, iv) => match self.exact_value(q) {
                Some(v) => Endpoint::exact(v),
                None => Endpoint::Enclosed(self.image_raw(*iv)),
            },
            Endpoint::Enclosed(iv) => Endpoint::Enclosed(self.image_raw(*iv)),
        }
    }

    fn range(&self) -> (&Endpoint<F>, &Endpoint<F>) {
        if self.increasing {
            (&self.val_lo, &self.val_hi)
        } else {
            (&self.val_hi, &self.val_lo)
        }
    }

    /// Preimage of the value `y` inside the domain.
    fn preimage(&self, y: &Endpoint<F>) -> Endpoint<F> {
        if let (Some(q), Some((a, c))) = (y.as_exact(), self.affine.as_ref()) {
            return Endpoint::exact(&(q - c) / a);
        }
        let enc = preimage_enclosure(self, y.iv());
        if let Some(q) = y.as_exact() {
            if let Some(r) = small_rational_near(enc.mid().as_f64(), 1 << 20) {
                if enc.contains(r.to_interval::<F>().mid()) && self.exact_value(&r).as_ref() == Some(q) {
                    return Endpoint::exact(r);
                }
            }
        }
        Endpoint::Enclosed(enc)
    }
}

/// Bracket `{x : f(x) = y}` for a monotone piece by two bisections.
fn preimage_enclosure<F: Scalar>(p: &Piece<F>, y: Interval<F>) -> Interval<F> {
    let dom = p.dom_hull();
    let f = |x: F| p.value(Interval::point(x));
    // below(x): x lies certainly left of the preimage
    let below = |v: Interval<F>| if p.increasing { v.hi < y.lo } else { v.lo > y.hi };
    let above = |v: Interval<F>| if p.increasing { v.lo > y.hi } else { v.hi < y.lo };
    let bisect = |mut good: F, mut bad: F, ok: &dyn Fn(Interval<F>) -> bool| {
        for _ in 0..200 {
            let m = good / F::lit(2.0) + bad / F::lit(2.0);
            if m == good || m == bad {
                break;
            }
            if ok(f(m)) {
                good = m;
            } else {
                bad = m;
            }
        }
        good
    };
    let lo = bisect(dom.lo, dom.hi, &below);
    let hi = bisect(dom.hi, dom.lo, &above);
    Interval::new(lo.min(hi), hi.max(lo))
}

/// Continued-fraction approximation with denominator at most `max_den`.
pub fn small_rational_near(x: f64, max_den: u64) -> Option<ExactRational> {
    if !x.is_finite() {
        return None;
    }
    let (mut h0, mut h1) = (0i128, 1i128);
    let (mut k0, mut k1) = (1i128, 0i128);
    let mut r = x;
    for _ in 0..40 {
        let a = r.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let h2 = ai * h1 + h0;
        let k2 = ai * k1 + k0;
        if k2 > max_den as i128 {
            break;
        }
        (h0, h1, k0, k1) = (h1, h2, k1, k2);
        let frac = r - a;
        if frac < 1e-12 {
            break;
        }
        r = 1.0 / frac;
    }
    (k1 > 0).then(|| ExactRational::new(h1 as i64, k1 as i64))
}

/// A piecewise monotone map together with the monotone pieces of `T^p`.
#[derive(Clone, Debug)]
pub struct PiecewiseMap<F> {
    pub spec: MapSpec,
    base: Vec<Piece<F>>,
    pieces: Vec<Piece<F>>,
}

impl<F: Scalar> PiecewiseMap<F> {
    pub fn build(spec: MapSpec) -> Result<Self, MapError> {
        spec.validate()?;
        let mut base = Vec::new();
        for (i, b) in spec.branches.iter().enumerate() {
            base.extend(split_branch(i, b)?);
        }
        let mut pieces = base.clone();
        for _ in 1..spec.iterate {
            let mut next = Vec::new();
            for p in &pieces {
                next.extend(compose(p, &base)?);
            }
            pieces = next;
        }
        Ok(PiecewiseMap { spec, base, pieces })
    }

    pub fn parse(text: &str) -> Result<Self, parse::ParseError> {
        let spec = parse::parse_map(text)?;
        PiecewiseMap::build(spec).map_err(parse::ParseError::Map)
    }

    pub fn iterate(&self) -> u32 {
        self.spec.iterate
    }

    pub fn is_circle(&self) -> bool {
        self.spec.circle
    }

    /// Monotone pieces of `T^p`, ordered by domain.
    pub fn pieces(&self) -> &[Piece<F>] {
        &self.pieces
    }

    /// Monotone pieces of `T` itself.
    pub fn base_pieces(&self) -> &[Piece<F>] {
        &self.base
    }

    /// Interior breakpoints of `T^p`.
    pub fn breakpoints(&self) -> Vec<Endpoint<F>> {
        self.pieces.iter().skip(1).map(|p| p.lo.clone()).collect()
    }

    /// Pieces whose domain hull meets `x`, with `x` clipped to that hull.
    pub fn pieces_meeting(&self, x: Interval<F>) -> impl Iterator<Item = (usize, &Piece<F>, Interval<F>)> + '_ {
        self.pieces.iter().enumerate().filter_map(move |(i, p)| {
            let clip = x.intersect(p.dom_hull())?;
            if clip.is_point() && !x.is_point() {
                return None;
            }
            Some((i, p, clip))
        })
    }

    /// Images of `x` under `T^p`, one per monotone piece met, tagged with the branch of `T`.
    pub fn eval_on_interval(&self, x: Interval<F>) -> Result<Vec<(Interval<F>, usize)>, MapError> {
        if x.lo.is_nan() || x.hi.is_nan() {
            return Err(MapError::EmptyInput);
        }
        if x.lo < F::zero() || x.hi > F::one() {
            return Err(MapError::OutOfDomain(if x.lo < F::zero() { x.lo.as_f64() } else { x.hi.as_f64() }));
        }
        Ok(self.pieces_meeting(x).map(|(_, p, clip)| (p.image(clip), p.branch)).collect())
    }

    /// Point evaluation of `T^p` for plotting; `None` on a breakpoint enclosure.
    pub fn eval_point(&self, x: F) -> Option<F> {
        let p = self.pieces.iter().find(|p| p.dom_inner().map_or(false, |d| d.contains(x)))?;
        Some(p.value(Interval::point(x)).mid())
    }

    /// Enclosure of `inf |(T^p)'|` as `[certified lower bound, sampled value]`.
    pub fn inf_abs_derivative(&self) -> Interval<F> {
        self.pieces
            .iter()
            .map(|p| bounds::inf(&|x| p.derivative(x).abs(), p.dom_hull()))
            .reduce(|a, b| a.min(b))
            .unwrap()
    }

    /// Enclosure of `sup |(T^p)'|` as `[sampled value, certified upper bound]`.
    pub fn sup_abs_derivative(&self) -> Interval<F> {
        self.pieces
            .iter()
            .map(|p| bounds::sup(&|x| p.derivative(x).abs(), p.dom_hull()))
            .reduce(|a, b| a.max(b))
            .unwrap()
    }

    /// Enclosure of `sup |T''/(T')^2|` over all pieces.
    pub fn distortion_sup(&self) -> Interval<F> {
        self.pieces
            .iter()
            .map(|p| distortion_on(p, p.dom_hull()))
            .reduce(|a, b| a.max(b))
            .unwrap()
    }

    /// Lower bound of the shortest monotone piece length.
    pub fn min_piece_len(&self) -> Interval<F> {
        self.pieces
            .iter()
            .map(|p| p.hi.iv() - p.lo.iv())
            .reduce(|a, b| a.min(b))
            .unwrap()
    }
}

fn distortion_on<F: Scalar>(p: &Piece<F>, dom: Interval<F>) -> Interval<F> {
    if p.affine.is_some() {
        return Interval::zero();
    }
    bounds::sup(
        &|x| {
            let j = p.jet(x);
            match j.d2.div(j.d1.sqr()) {
                Ok(r) => r.abs(),
                Err(_) => Interval::new(F::zero(), F::infinity()),
            }
        },
        dom,
    )
}

fn derivative_sign<F: Scalar>(e: &Expr<F>, dom: Interval<F>, depth: u32) -> Result<bool, F> {
    let d = e.derivative(dom);
    if d.lo > F::zero() {
        return Ok(true);
    }
    if d.hi < F::zero() {
        return Ok(false);
    }
    if depth == 0 {
        return Err(dom.mid());
    }
    let m = dom.mid();
    let a = derivative_sign(e, Interval::new(dom.lo, m), depth - 1)?;
    let b = derivative_sign(e, Interval::new(m, dom.hi), depth - 1)?;
    if a != b {
        return Err(m);
    }
    Ok(a)
}

fn split_branch<F: Scalar>(idx: usize, br: &Branch) -> Result<Vec<Piece<F>>, MapError> {
    let expr = Expr::<F>::new(br.expr.clone());
    let lo = Endpoint::exact(br.lo.clone());
    let hi = Endpoint::exact(br.hi.clone());
    let dom = Interval::new(lo.iv().lo, hi.iv().hi);
    let increasing = derivative_sign(&expr, dom, 40).map_err(|x| {
        if expr.derivative(Interval::point(x)).contains_zero() {
            MapError::NotMonotone(idx)
        } else {
            MapError::DerivativeTouchesZero(x.as_f64())
        }
    })?;
    let v_lo = Endpoint::from_value(br.expr.eval_exact(&br.lo), expr.value_at(&br.lo));
    let v_hi = Endpoint::from_value(br.expr.eval_exact(&br.hi), expr.value_at(&br.hi));
    let whole = Piece::new(idx, lo, hi, increasing, v_lo, v_hi, vec![Stage::new(expr, BigInt::from(0))]);
    let (vmin, vmax) = whole.range();
    let (vmin, vmax) = (vmin.clone(), vmax.clone());

    if !br.mod_one {
        let zero = Endpoint::exact(ExactRational::zero());
        let one = Endpoint::exact(ExactRational::one());
        let ok_lo = matches!(cmp_endpoints(&vmin, &zero), Some(Ordering::Greater | Ordering::Equal));
        let ok_hi = matches!(cmp_endpoints(&vmax, &one), Some(Ordering::Less | Ordering::Equal));
        if !(ok_lo && ok_hi) {
            return Err(MapError::RangeOutsideUnit(idx));
        }
        return Ok(vec![whole]);
    }

    // integer cut values strictly inside the range
    let first: BigInt = integer_floor(&vmin, idx)?;
    let last: BigInt = integer_ceil(&vmax, idx)?;
    let mut cuts: Vec<Endpoint<F>> = vec![vmin.clone()];
    let mut n: BigInt = first + 1;
    while n < last {
        cuts.push(Endpoint::exact(ExactRational::from_bigint(n.clone())));
        n += 1;
    }
    cuts.push(vmax.clone());

    let mut out = Vec::new();
    for w in 0..cuts.len() - 1 {
        let (ya, yb) = (&cuts[w], &cuts[w + 1]);
        if cmp_endpoints(ya, yb) != Some(Ordering::Less) {
            continue;
        }
        let shift = integer_floor(ya, idx)?;
        let xa = if w == 0 { whole_end_for(&whole, true) } else { whole.preimage(ya) };
        let xb = if w + 2 == cuts.len() { whole_end_for(&whole, false) } else { whole.preimage(yb) };
        let (dlo, dhi, vlo, vhi) = if increasing { (xa, xb, ya, yb) } else { (xb, xa, yb, ya) };
        let stage = Stage::new(Expr::new(br.expr.clone()), shift.clone());
        out.push(Piece::new(idx, dlo, dhi, increasing, vlo.shifted(&shift), vhi.shifted(&shift), vec![stage]));
    }
    if !increasing {
        out.reverse();
    }
    Ok(out)
}

// domain end where the value is minimal (`min = true`) or maximal
fn whole_end_for<F: Scalar>(p: &Piece<F>, min: bool) -> Endpoint<F> {
    if p.increasing == min {
        p.lo.clone()
    } else {
        p.hi.clone()
    }
}

fn integer_floor<F: Scalar>(v: &Endpoint<F>, idx: usize) -> Result<BigInt, MapError> {
    match v {
        Endpoint::Exact(q, _) => Ok(q.floor()),
        Endpoint::Enclosed(iv) => {
            let (a, b) = (iv.lo.floor(), iv.hi.floor());
            if a != b || iv.hi == b {
                return Err(MapError::Unresolvable(format!("branch {idx}: value {iv} may be an integer")));
            }
            Ok(BigInt::from(a.to_i64().unwrap()))
        }
    }
}

fn integer_ceil<F: Scalar>(v: &Endpoint<F>, idx: usize) -> Result<BigInt, MapError> {
    match v {
        Endpoint::Exact(q, _) => Ok(q.ceil()),
        Endpoint::Enclosed(_) => Ok(integer_floor(v, idx)? + 1),
    }
}

fn ordered<F: Scalar>(a: &Endpoint<F>, b: &Endpoint<F>) -> Result<Ordering, MapError> {
    cmp_endpoints(a, b).ok_or_else(|| MapError::Unresolvable(format!("cannot order {a} and {b}")))
}

/// Pieces of `q ∘ p` for every base piece `q`.
fn compose<F: Scalar>(p: &Piece<F>, base: &[Piece<F>]) -> Result<Vec<Piece<F>>, MapError> {
    let (rmin, rmax) = p.range();
    let mut out = Vec::new();
    for q in base {
        let lo_ord = ordered(rmin, &q.lo)?;
        let hi_ord = ordered(rmax, &q.hi)?;
        let lower = if lo_ord == Ordering::Less { q.lo.clone() } else { rmin.clone() };
        let upper = if hi_ord == Ordering::Greater { q.hi.clone() } else { rmax.clone() };
        match cmp_endpoints(&lower, &upper) {
            Some(Ordering::Less) => {}
            Some(_) => continue,
            None => return Err(MapError::Unresolvable(format!("degenerate piece between {lower} and {upper}"))),
        }
        let x_lower = if lo_ord != Ordering::Less { whole_end_for(p, true) } else { p.preimage(&lower) };
        let x_upper = if hi_ord != Ordering::Greater { whole_end_for(p, false) } else { p.preimage(&upper) };
        let q_lower = if lo_ord != Ordering::Greater { q.val_lo.clone() } else { q.value_endpoint(&lower) };
        let q_upper = if hi_ord != Ordering::Less { q.val_hi.clone() } else { q.value_endpoint(&upper) };
        let (dlo, dhi, vlo, vhi) = if p.increasing {
            (x_lower, x_upper, q_lower, q_upper)
        } else {
            (x_upper, x_lower, q_upper, q_lower)
        };
        let stages = match (p.polynomial(), q.polynomial()) {
            (Some(pp), Some(qp)) => vec![Stage::new(Expr::new(ExprDef::poly(qp.compose(&pp))), BigInt::from(0))],
            _ => p.stages.iter().chain(q.stages.iter()).cloned().collect(),
        };
        out.push(Piece::new(p.branch, dlo, dhi, p.increasing == q.increasing, vlo, vhi, stages));
    }
    if !p.increasing {
        out.reverse();
    }
    Ok(out)
}

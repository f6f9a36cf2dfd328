//! Rigorous global bounds of interval extensions by branch and bound.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::interval::Interval;
use crate::scalar::Scalar;

pub const REL_TOL: f64 = 0.01;
pub const MAX_DEPTH: u32 = 24;
const MAX_EVALS: usize = 400_000;
const SEED_SAMPLES: usize = 64;

struct Node<F> {
    ub: F,
    iv: Interval<F>,
    depth: u32,
}

impl<F: Scalar> PartialEq for Node<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<F: Scalar> Eq for Node<F> {}
impl<F: Scalar> PartialOrd for Node<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<F: Scalar> Ord for Node<F> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.ub.partial_cmp(&other.ub).unwrap_or(Ordering::Equal)
    }
}

fn upper<F: Scalar>(e: Interval<F>) -> F {
    if e.hi.is_nan() {
        F::infinity()
    } else {
        e.hi
    }
}

/// Returns `[s, u]` where `s` is attained at a sample point and `u >= sup f` over `dom`.
pub fn sup<F: Scalar>(f: &dyn Fn(Interval<F>) -> Interval<F>, dom: Interval<F>) -> Interval<F> {
    let mut best = F::neg_infinity();
    let n = SEED_SAMPLES;
    for i in 0..=n {
        let t = F::lit(i as f64 / n as f64);
        let x = (dom.lo + (dom.hi - dom.lo) * t).max(dom.lo).min(dom.hi);
        let v = f(Interval::point(x)).lo;
        if v > best {
            best = v;
        }
    }
    let mut heap = BinaryHeap::new();
    heap.push(Node { ub: upper(f(dom)), iv: dom, depth: 0 });
    let mut aside = F::neg_infinity();
    let mut evals = 0usize;
    let tol = F::lit(REL_TOL);
    while let Some(node) = heap.pop() {
        let slack = tol * best.abs().max(F::lit(1e-300));
        if node.ub <= best + slack {
            let u = node.ub.max(aside);
            return Interval::new(best.min(u), u);
        }
        if node.depth >= MAX_DEPTH || evals >= MAX_EVALS || node.iv.is_point() {
            aside = aside.max(node.ub);
            continue;
        }
        let m = node.iv.mid();
        let v = f(Interval::point(m)).lo;
        if v > best {
            best = v;
        }
        for half in [Interval::new(node.iv.lo, m), Interval::new(m, node.iv.hi)] {
            evals += 1;
            heap.push(Node { ub: upper(f(half)), iv: half, depth: node.depth + 1 });
        }
    }
    Interval::new(best.min(aside), aside)
}

/// Returns `[l, s]` where `l <= inf f` over `dom` and `s` is attained at a sample point.
pub fn inf<F: Scalar>(f: &dyn Fn(Interval<F>) -> Interval<F>, dom: Interval<F>) -> Interval<F> {
    -sup(&|x| -f(x), dom)
}

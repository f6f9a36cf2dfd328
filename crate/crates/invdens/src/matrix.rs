//! Sparse transition matrices, markovization and the text dump format.

use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scalar::{add_up, div_up, sub_up, sum_up, Scalar};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    L1,
    Linf,
}

impl fmt::Display for NormKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormKind::L1 => "l1",
            NormKind::Linf => "linf",
        })
    }
}

impl std::str::FromStr for NormKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(NormKind::L1),
            "linf" | "l-inf" | "l_inf" => Ok(NormKind::Linf),
            other => Err(format!("unknown mode `{other}`, expected l1 or linf")),
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum MatrixError {
    #[error("row {0} has no nonzero entries; the map is singular over that cell")]
    EmptyRow(usize),
    #[error("row {row} sums to {sum}, too far from 1 for the recorded errors")]
    RowSum { row: usize, sum: f64 },
    #[error("row {row} has {nnz} nonzeros, above the bound {bound}")]
    NnzBound { row: usize, nnz: usize, bound: usize },
}

/// Row-major sparse matrix with a rigorous error bound for every stored entry.
///
/// In `L1` mode `eps` bounds every entry error of the Ulam matrix, so that
/// `|Pi_ij - P_ij| <= 2 eps` after markovization. In `Linf` mode `eps` bounds
/// the infinity norm of the difference of the operators acting on coefficient
/// vectors, that is the largest column sum of entry errors.
#[derive(Clone, Debug, PartialEq)]
pub struct TransitionMatrix<F> {
    pub k: usize,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<F>,
    errs: Vec<F>,
    pub eps: F,
    pub nnz_max: usize,
    pub norm_kind: NormKind,
    pub markovized: bool,
}

impl<F: Scalar> TransitionMatrix<F> {
    /// Builds the matrix from rows of `(column, value, error)` triples sorted by column.
    pub fn from_rows(k: usize, rows: Vec<Vec<(u32, F, F)>>, norm_kind: NormKind) -> Self {
        assert_eq!(rows.len(), k);
        let mut row_ptr = Vec::with_capacity(k + 1);
        row_ptr.push(0);
        let total = rows.iter().map(Vec::len).sum();
        let (mut cols, mut vals, mut errs) = (Vec::with_capacity(total), Vec::with_capacity(total), Vec::with_capacity(total));
        for row in rows {
            for (c, v, e) in row {
                cols.push(c);
                vals.push(v);
                errs.push(e);
            }
            row_ptr.push(cols.len());
        }
        let mut m = TransitionMatrix {
            k,
            row_ptr,
            cols,
            vals,
            errs,
            eps: F::zero(),
            nnz_max: 0,
            norm_kind,
            markovized: false,
        };
        m.refresh();
        m
    }

    fn refresh(&mut self) {
        self.nnz_max = (0..self.k).map(|i| self.row_ptr[i + 1] - self.row_ptr[i]).max().unwrap_or(0);
        self.eps = match self.norm_kind {
            NormKind::L1 => self.errs.iter().fold(F::zero(), |a, &e| a.max(e)),
            NormKind::Linf => {
                let mut colsum = vec![F::zero(); self.k];
                for (c, &e) in self.cols.iter().zip(&self.errs) {
                    colsum[*c as usize] = add_up(colsum[*c as usize], e);
                }
                colsum.into_iter().fold(F::zero(), F::max)
            }
        };
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, F, F)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r.clone()])
            .zip(&self.errs[r])
            .map(|((&c, &v), &e)| (c as usize, v, e))
    }

    pub fn get(&self, i: usize, j: usize) -> F {
        self.row(i).find(|&(c, _, _)| c == j).map_or(F::zero(), |(_, v, _)| v)
    }

    /// Row sum accumulated left to right in working precision.
    pub fn row_sum(&self, i: usize) -> F {
        self.vals[self.row_ptr[i]..self.row_ptr[i + 1]].iter().fold(F::zero(), |a, &v| a + v)
    }

    pub fn column_sums(&self) -> Vec<F> {
        let mut s = vec![F::zero(); self.k];
        for (c, &v) in self.cols.iter().zip(&self.vals) {
            s[*c as usize] = s[*c as usize] + v;
        }
        s
    }

    /// `y = x M`, the action on row vectors.
    pub fn left_mul_into(&self, x: &[F], y: &mut [F]) {
        y.iter_mut().for_each(|v| *v = F::zero());
        for (i, &xi) in x.iter().enumerate() {
            if xi.is_zero() {
                continue;
            }
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let c = self.cols[p] as usize;
                y[c] = xi.mul_add(self.vals[p], y[c]);
            }
        }
    }

    /// `y = M x`, the action on column vectors.
    pub fn right_mul_into(&self, x: &[F], y: &mut [F]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = F::zero();
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                acc = self.vals[p].mul_add(x[self.cols[p] as usize], acc);
            }
            *yi = acc;
        }
    }

    /// Transposed matrix; errors and bookkeeping fields are carried over unchanged.
    pub fn transpose(&self) -> Self {
        let mut rows: Vec<Vec<(u32, F, F)>> = vec![Vec::new(); self.k];
        for i in 0..self.k {
            for (c, v, e) in self.row(i) {
                rows[c].push((i as u32, v, e));
            }
        }
        let mut t = TransitionMatrix::from_rows(self.k, rows, self.norm_kind);
        t.eps = self.eps;
        t.nnz_max = self.nnz_max;
        t.markovized = self.markovized;
        t
    }

    /// Dense copy, for small matrices.
    pub fn to_dense(&self) -> Vec<Vec<F>> {
        let mut d = vec![vec![F::zero(); self.k]; self.k];
        for (i, row) in d.iter_mut().enumerate() {
            for (c, v, _) in self.row(i) {
                row[c] = v;
            }
        }
        d
    }

    /// Writes the header `k eps nnz_max norm_kind` and one `row col value err` line per nonzero.
    pub fn dump<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{} {:e} {} {}", self.k, self.eps, self.nnz_max, self.norm_kind)?;
        for i in 0..self.k {
            for (c, v, e) in self.row(i) {
                writeln!(w, "{i} {c} {v:e} {e:e}")?;
            }
        }
        Ok(())
    }
}

const MAX_RESIDUE_STEPS: usize = 256;

/// Spreads each row's deficit uniformly over its nonzeros so that every row sums to one.
///
/// The largest entry absorbs the residue left by rounding. Entry errors are
/// replaced by the distance to the true entry, and `eps` is updated so that
/// the documented bound of the norm kind still holds.
pub fn markovize<F: Scalar>(raw: &TransitionMatrix<F>) -> Result<TransitionMatrix<F>, MatrixError> {
    let mut m = raw.clone();
    for i in 0..m.k {
        let r = m.row_ptr[i]..m.row_ptr[i + 1];
        if r.is_empty() {
            return Err(MatrixError::EmptyRow(i));
        }
        let n = F::from_usize(r.len()).unwrap();
        let old: Vec<F> = m.vals[r.clone()].to_vec();
        let err_sum = sum_up(&m.errs[r.clone()]);
        let sum = m.row_sum(i);
        let slack = add_up(err_sum, F::EPS_MACH * n * F::lit(4.0));
        if (F::one() - sum).abs() > slack {
            return Err(MatrixError::RowSum { row: i, sum: sum.as_f64() });
        }
        let share = (F::one() - sum) / n;
        let vals = &mut m.vals[r.clone()];
        for v in vals.iter_mut() {
            *v = (*v + share).max(F::zero());
        }
        let big = (0..vals.len()).fold(0, |b, j| if vals[j] > vals[b] { j } else { b });
        let s = vals.iter().fold(F::zero(), |a, &v| a + v);
        vals[big] = (vals[big] + (F::one() - s)).max(F::zero());
        // the sum is monotone in each entry; later entries are added at finer resolution
        'absorb: for cand in std::iter::once(big).chain((0..vals.len()).rev()) {
            for _ in 0..MAX_RESIDUE_STEPS {
                let s = vals.iter().fold(F::zero(), |a, &v| a + v);
                if s == F::one() {
                    break 'absorb;
                }
                let next = if s < F::one() { vals[cand].next_up() } else { vals[cand].next_down() };
                if next < F::zero() {
                    break;
                }
                vals[cand] = next;
            }
        }
        for (j, e) in m.errs[r].iter_mut().enumerate() {
            *e = add_up(*e, sub_up(vals[j].max(old[j]), vals[j].min(old[j])));
        }
    }
    m.markovized = true;
    m.refresh();
    if m.norm_kind == NormKind::L1 {
        // entry errors are at most twice the raw bound
        m.eps = raw.eps.max(div_up(m.eps, F::lit(2.0)));
    }
    Ok(m)
}

/// Largest observed row count, checked against `ceil(sup|T'|) + 4`.
pub fn nnz_bound<F: Scalar>(m: &TransitionMatrix<F>, sup_derivative: F) -> Result<usize, MatrixError> {
    let bound = sup_derivative.ceil().to_usize().unwrap_or(usize::MAX).saturating_add(4);
    for i in 0..m.k {
        let nnz = m.row_ptr[i + 1] - m.row_ptr[i];
        if nnz > bound {
            return Err(MatrixError::NnzBound { row: i, nnz, bound });
        }
    }
    Ok(m.nnz_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stochastic_row_unchanged() {
        let m = TransitionMatrix::from_rows(2, vec![vec![(0, 0.5, 0.0), (1, 0.5, 0.0)]; 2], NormKind::L1);
        let p = markovize(&m).unwrap();
        assert_eq!(p.to_dense(), m.to_dense());
        assert_eq!(p.eps, 0.0);
    }

    #[test]
    fn deficit_spread_uniformly() {
        let row: Vec<(u32, f64, f64)> = vec![(0, 0.3, 0.04), (1, 0.3, 0.04), (2, 0.3, 0.04)];
        let m = TransitionMatrix::from_rows(3, vec![row; 3], NormKind::L1);
        let p = markovize(&m).unwrap();
        for i in 0..3 {
            assert_eq!(p.row_sum(i), 1.0);
            for j in 0..3 {
                assert!((p.get(i, j) - 1.0 / 3.0).abs() < 1e-16);
            }
        }
        assert!(p.eps <= 0.04 + 1e-12);
    }

    #[test]
    fn empty_row_rejected() {
        let m = TransitionMatrix::from_rows(2, vec![vec![(0, 1.0, 0.0)], vec![]], NormKind::L1);
        assert_eq!(markovize(&m), Err(MatrixError::EmptyRow(1)));
    }

    #[test]
    fn dump_header() {
        let m = TransitionMatrix::from_rows(1, vec![vec![(0, 1.0f64, 0.0)]], NormKind::Linf);
        let mut out = Vec::new();
        m.dump(&mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert_eq!(s.lines().next().unwrap(), "1 0e0 1 linf");
        assert_eq!(s.lines().count(), 2);
    }
}

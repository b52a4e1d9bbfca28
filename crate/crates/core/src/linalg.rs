//! Dense matrices over a [`Scalar`] and a sparse exact LU for the graded solvers.

use std::collections::BTreeMap;
use std::ops::{Index, IndexMut};

use crate::scalar::{Rational, Scalar};

#[derive(Clone, Debug, PartialEq)]
pub struct Matrix<S> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![S::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = S::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> S) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<S>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |v| v.len());
        assert!(rows.iter().all(|v| v.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.into_iter().flatten().collect() }
    }

    pub fn row(&self, i: usize) -> &[S] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "shape mismatch in matmul");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] = out[(i, j)].clone() + a.clone() * b.clone();
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[S]) -> Vec<S> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = S::zero();
                for (a, b) in self.row(i).iter().zip(v) {
                    if !a.is_zero() && !b.is_zero() {
                        acc = acc + a.clone() * b.clone();
                    }
                }
                acc
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a.clone() + b.clone()).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.scale(&S::from_i64(-1)))
    }

    pub fn scale(&self, s: &S) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.clone() * s.clone()).collect(),
        }
    }

    pub fn trace(&self) -> S {
        (0..self.rows.min(self.cols)).fold(S::zero(), |acc, i| acc + self[(i, i)].clone())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs_f64()).fold(0.0, f64::max)
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|x| x.is_zero())
    }

    /// Entrywise comparison at `tol` (exact for rational backends).
    pub fn close(&self, other: &Self, tol: f64) -> bool {
        self.rows == other.rows
            && self.cols == other.cols
            && self.data.iter().zip(&other.data).all(|(a, b)| a.close(b, tol))
    }

    fn pivot_tol(&self) -> f64 {
        if S::EXACT {
            0.0
        } else {
            1e-11 * self.max_abs().max(1.0)
        }
    }

    /// Reduced row echelon form and pivot columns.
    pub fn rref(&self) -> (Self, Vec<usize>) {
        let mut m = self.clone();
        let tol = self.pivot_tol();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let mut best = None;
            let mut best_abs = tol;
            for i in r..m.rows {
                let v = m[(i, c)].abs_f64();
                let nonzero = if S::EXACT { !m[(i, c)].is_zero() } else { v > best_abs };
                if nonzero {
                    best = Some(i);
                    if S::EXACT {
                        break;
                    }
                    best_abs = v;
                }
            }
            let Some(p) = best else { continue };
            m.swap_rows(r, p);
            let inv = S::one() / m[(r, c)].clone();
            for j in c..m.cols {
                m[(r, j)] = m[(r, j)].clone() * inv.clone();
            }
            for i in 0..m.rows {
                if i == r || m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone();
                for j in c..m.cols {
                    if !m[(r, j)].is_zero() {
                        m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(r, j)].clone();
                    }
                }
                if !S::EXACT {
                    m[(i, c)] = S::zero();
                }
            }
            pivots.push(c);
            r += 1;
        }
        (m, pivots)
    }

    pub fn rank(&self) -> usize {
        self.rref().1.len()
    }

    /// Basis of the right null space.
    pub fn nullspace(&self) -> Vec<Vec<S>> {
        let (r, pivots) = self.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![S::zero(); self.cols];
                v[f] = S::one();
                for (row, &pc) in pivots.iter().enumerate() {
                    v[pc] = -r[(row, f)].clone();
                }
                v
            })
            .collect()
    }

    pub fn det(&self) -> S {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let mut m = self.clone();
        let n = m.rows;
        let mut det = S::one();
        for c in 0..n {
            let mut p = None;
            let mut best = m.pivot_tol();
            for i in c..n {
                let v = m[(i, c)].abs_f64();
                if S::EXACT {
                    if !m[(i, c)].is_zero() {
                        p = Some(i);
                        break;
                    }
                } else if v > best {
                    best = v;
                    p = Some(i);
                }
            }
            let Some(p) = p else { return S::zero() };
            if p != c {
                m.swap_rows(p, c);
                det = -det;
            }
            let piv = m[(c, c)].clone();
            det = det * piv.clone();
            for i in c + 1..n {
                if m[(i, c)].is_zero() {
                    continue;
                }
                let f = m[(i, c)].clone() / piv.clone();
                for j in c..n {
                    m[(i, j)] = m[(i, j)].clone() - f.clone() * m[(c, j)].clone();
                }
            }
        }
        det
    }

    pub fn inverse(&self) -> Option<Self> {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let aug = Self::from_fn(n, 2 * n, |i, j| {
            if j < n {
                self[(i, j)].clone()
            } else if j - n == i {
                S::one()
            } else {
                S::zero()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.len() < n || pivots[n - 1] != n - 1 {
            return None;
        }
        Some(Self::from_fn(n, n, |i, j| r[(i, j + n)].clone()))
    }

    /// Solves `self · x = b`, returning one solution when the system is consistent.
    pub fn solve(&self, b: &[S]) -> Option<Vec<S>> {
        let aug = Self::from_fn(self.rows, self.cols + 1, |i, j| {
            if j < self.cols {
                self[(i, j)].clone()
            } else {
                b[i].clone()
            }
        });
        let (r, pivots) = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![S::zero(); self.cols];
        for (row, &pc) in pivots.iter().enumerate() {
            x[pc] = r[(row, self.cols)].clone();
        }
        Some(x)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }
}

impl<S> Index<(usize, usize)> for Matrix<S> {
    type Output = S;
    fn index(&self, (i, j): (usize, usize)) -> &S {
        &self.data[i * self.cols + j]
    }
}

impl<S> IndexMut<(usize, usize)> for Matrix<S> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut S {
        &mut self.data[i * self.cols + j]
    }
}

pub type SparseRow = BTreeMap<usize, Rational>;

/// Exact sparse LU factorization with minimal-fill row pivoting.
///
/// Elimination operations are recorded so that many right-hand sides can be
/// solved against one factorization.
#[derive(Clone, Debug)]
pub struct SparseLu {
    n: usize,
    /// (pivot column, pivot row id, reduced row) per elimination step.
    steps: Vec<(usize, usize, SparseRow)>,
    /// (source row, target row, multiplier): `b[target] -= m * b[source]`.
    ops: Vec<(usize, usize, Rational)>,
    /// Columns that never received a pivot.
    pub deficient_cols: Vec<usize>,
    /// Row ids left without a pivot (they are zero after elimination).
    pub left_rows: Vec<usize>,
    det: Rational,
}

impl SparseLu {
    pub fn factor(n: usize, rows: Vec<SparseRow>) -> Self {
        assert_eq!(rows.len(), n);
        let mut rows: Vec<Option<SparseRow>> = rows.into_iter().map(Some).collect();
        let mut steps = Vec::new();
        let mut ops = Vec::new();
        let mut deficient = Vec::new();
        let mut det: Rational = Scalar::one();
        let mut order = Vec::new();
        for col in 0..n {
            let pivot = rows
                .iter()
                .enumerate()
                .filter_map(|(i, r)| r.as_ref().filter(|r| r.contains_key(&col)).map(|r| (i, r.len())))
                .min_by_key(|&(i, len)| (len, i))
                .map(|(i, _)| i);
            let Some(p) = pivot else {
                deficient.push(col);
                continue;
            };
            let prow = rows[p].take().unwrap();
            let pv = prow[&col].clone();
            det *= pv.clone();
            for (i, slot) in rows.iter_mut().enumerate() {
                let Some(r) = slot.as_mut() else { continue };
                let Some(v) = r.get(&col) else { continue };
                let f = v.clone() / pv.clone();
                for (c, pvv) in &prow {
                    let e = r.entry(*c).or_insert_with(Rational::zero);
                    *e -= f.clone() * pvv.clone();
                    if e.is_zero() {
                        r.remove(c);
                    }
                }
                ops.push((p, i, f));
            }
            order.push(p);
            steps.push((col, p, prow));
        }
        let left_rows: Vec<usize> = rows.iter().enumerate().filter(|(_, r)| r.is_some()).map(|(i, _)| i).collect();
        if deficient.is_empty() {
            if permutation_sign(&order) < 0 {
                det = -det;
            }
        } else {
            det = Rational::zero();
        }
        SparseLu { n, steps, ops, deficient_cols: deficient, left_rows, det }
    }

    pub fn is_singular(&self) -> bool {
        !self.deficient_cols.is_empty()
    }

    pub fn rank(&self) -> usize {
        self.steps.len()
    }

    pub fn det(&self) -> &Rational {
        &self.det
    }

    /// Solves for one right-hand side. For singular systems the free columns
    /// are set to zero and `None` is returned when the system is inconsistent.
    pub fn solve(&self, b: &[Rational]) -> Option<Vec<Rational>> {
        assert_eq!(b.len(), self.n);
        let mut b = b.to_vec();
        for (src, dst, f) in &self.ops {
            if !b[*src].is_zero() && !f.is_zero() {
                let t = f.clone() * b[*src].clone();
                b[*dst] -= t;
            }
        }
        if self.left_rows.iter().any(|&r| !b[r].is_zero()) {
            return None;
        }
        let mut x = vec![Rational::zero(); self.n];
        for (col, row, prow) in self.steps.iter().rev() {
            let mut acc = b[*row].clone();
            for (c, v) in prow {
                if c != col && !x[*c].is_zero() {
                    acc -= v.clone() * x[*c].clone();
                }
            }
            x[*col] = acc / prow[col].clone();
        }
        Some(x)
    }
}

fn permutation_sign(order: &[usize]) -> i32 {
    let mut seen = vec![false; order.len()];
    let mut sign = 1;
    for start in 0..order.len() {
        if seen[start] {
            continue;
        }
        let mut len = 0;
        let mut j = start;
        while !seen[j] {
            seen[j] = true;
            j = order[j];
            len += 1;
        }
        if len % 2 == 0 {
            sign = -sign;
        }
    }
    sign
}

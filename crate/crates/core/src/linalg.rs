//! Small dense kernels: LU with partial pivoting and a column-incremental
//! Householder QR that can reject near-dependent columns.

use nalgebra::{DMatrix, DVector};

/// LU factorization `P A = L U` with partial (row) pivoting.
///
/// Elimination skips exact zeros, so banded matrices stored densely factor in
/// roughly `O(n · bandwidth²)` flops plus `O(n²)` scanning.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
}

impl Lu {
    /// Returns `None` when a pivot vanishes relative to the matrix scale.
    pub fn factor(mut a: DMatrix<f64>) -> Option<Self> {
        let n = a.nrows();
        assert_eq!(n, a.ncols(), "LU needs a square matrix");
        let scale = a.amax();
        if !scale.is_finite() || scale == 0.0 {
            return None;
        }
        let tiny = f64::EPSILON * scale;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut rows = Vec::with_capacity(n);
        for k in 0..n {
            let (mut p, mut best) = (k, a[(k, k)].abs());
            for r in k + 1..n {
                let v = a[(r, k)].abs();
                if v > best {
                    best = v;
                    p = r;
                }
            }
            if best <= tiny {
                return None;
            }
            if p != k {
                a.swap_rows(k, p);
                perm.swap(k, p);
            }
            let pivot = a[(k, k)];
            rows.clear();
            for r in k + 1..n {
                if a[(r, k)] != 0.0 {
                    a[(r, k)] /= pivot;
                    rows.push(r);
                }
            }
            if rows.is_empty() {
                continue;
            }
            for c in k + 1..n {
                let akc = a[(k, c)];
                if akc == 0.0 {
                    continue;
                }
                for &r in &rows {
                    let l = a[(r, k)];
                    a[(r, c)] -= l * akc;
                }
            }
        }
        Some(Self { lu: a, perm })
    }

    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let n = self.lu.nrows();
        let mut x = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        for k in 0..n {
            let xk = x[k];
            if xk != 0.0 {
                for r in k + 1..n {
                    x[r] -= self.lu[(r, k)] * xk;
                }
            }
        }
        for k in (0..n).rev() {
            x[k] /= self.lu[(k, k)];
            let xk = x[k];
            if xk != 0.0 {
                for r in 0..k {
                    x[r] -= self.lu[(r, k)] * xk;
                }
            }
        }
        x
    }
}

/// Solves `A x = b`, or `None` if `A` is numerically singular.
pub fn lu_solve(a: DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    Lu::factor(a).map(|lu| lu.solve(b))
}

/// Householder QR built one column at a time.
///
/// A candidate column is accepted only if the norm of its component orthogonal
/// to the accepted columns (the new diagonal entry `|R_jj|`) exceeds
/// `tol · ‖v‖₂`.
#[derive(Debug, Clone)]
pub struct IncrementalQr {
    rows: usize,
    /// Householder vectors acting on rows `j..`, stored full length with zeros above `j`.
    reflectors: Vec<DVector<f64>>,
    /// Columns of `R`; column `j` has `j + 1` meaningful entries.
    r_cols: Vec<Vec<f64>>,
}

impl IncrementalQr {
    pub fn new(rows: usize) -> Self {
        Self { rows, reflectors: Vec::new(), r_cols: Vec::new() }
    }

    pub fn rank(&self) -> usize {
        self.r_cols.len()
    }

    fn apply_reflectors(&self, x: &mut DVector<f64>) {
        for (j, v) in self.reflectors.iter().enumerate() {
            let vv: f64 = v.rows(j, self.rows - j).norm_squared();
            if vv == 0.0 {
                continue;
            }
            let dot: f64 = v.rows(j, self.rows - j).dot(&x.rows(j, self.rows - j));
            let f = 2.0 * dot / vv;
            for i in j..self.rows {
                x[i] -= f * v[i];
            }
        }
    }

    /// Tries to append `col`; returns whether it was accepted.
    pub fn try_push(&mut self, col: &DVector<f64>, tol: f64) -> bool {
        assert_eq!(col.len(), self.rows);
        let k = self.rank();
        let col_norm = col.norm();
        if k >= self.rows || col_norm == 0.0 || !col_norm.is_finite() {
            return false;
        }
        let mut x = col.clone();
        self.apply_reflectors(&mut x);
        let alpha = x.rows(k, self.rows - k).norm();
        let independent = alpha > tol * col_norm;
        if !independent {
            return false;
        }
        let sign = if x[k] >= 0.0 { 1.0 } else { -1.0 };
        let mut v = DVector::zeros(self.rows);
        for i in k..self.rows {
            v[i] = x[i];
        }
        v[k] += sign * alpha;
        let mut r = x.rows(0, k).iter().copied().collect::<Vec<_>>();
        r.push(-sign * alpha);
        self.reflectors.push(v);
        self.r_cols.push(r);
        true
    }

    /// Absolute diagonal entries `|R_jj|` of the accepted columns.
    pub fn diagonal(&self) -> Vec<f64> {
        self.r_cols.iter().enumerate().map(|(j, c)| c[j].abs()).collect()
    }

    /// Minimizer of `‖A x − b‖₂` over the accepted columns `A`.
    pub fn least_squares(&self, b: &DVector<f64>) -> DVector<f64> {
        let k = self.rank();
        let mut y = b.clone();
        self.apply_reflectors(&mut y);
        let mut x = DVector::zeros(k);
        for i in (0..k).rev() {
            let mut s = y[i];
            for j in i + 1..k {
                s -= self.r_cols[j][i] * x[j];
            }
            x[i] = s / self.r_cols[i][i];
        }
        x
    }
}

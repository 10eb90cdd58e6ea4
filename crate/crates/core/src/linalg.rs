//! Small dense linear algebra: Cholesky solves for Newton steps and a
//! fully pivoted LU for symmetric indefinite (saddle point) systems.
//!
//! Matrices here are tiny (a few dozen rows at most), so everything is
//! row-major `Vec<f64>` with no blocking.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Relative asymmetry tolerated by the symmetric entry points.
pub const SYMMETRY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::scaled_identity(n, 1.0)
    }

    pub fn scaled_identity(n: usize, scale: f64) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = scale;
        }
        m
    }

    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from a slice of equally sized rows. Panics on ragged input.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Self {
        let cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            let r = r.as_ref();
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend_from_slice(r);
        }
        Self {
            rows: rows.len(),
            cols,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.cols, "matvec dimension mismatch");
        (0..self.rows).map(|i| dot(self.row(i), x)).collect()
    }

    /// `Aᵀ x`
    pub fn tr_matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.rows, "tr_matvec dimension mismatch");
        let mut out = vec![0.0; self.cols];
        for i in 0..self.rows {
            axpy(x[i], self.row(i), &mut out);
        }
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        out
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        for i in 0..self.rows.min(self.cols) {
            self[(i, i)] += shift;
        }
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, scale: f64, other: &DenseMatrix) {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        axpy(scale, &other.data, &mut self.data);
    }

    /// `self += scale * u vᵀ`
    pub fn add_outer(&mut self, scale: f64, u: &[f64], v: &[f64]) {
        assert_eq!((u.len(), v.len()), (self.rows, self.cols));
        for i in 0..self.rows {
            let ui = scale * u[i];
            if ui == 0.0 {
                continue;
            }
            for j in 0..self.cols {
                self[(i, j)] += ui * v[j];
            }
        }
    }

    /// Copies `block` into `self` with its top-left corner at `(r0, c0)`.
    pub fn set_block(&mut self, r0: usize, c0: usize, block: &DenseMatrix) {
        assert!(r0 + block.rows <= self.rows && c0 + block.cols <= self.cols);
        for i in 0..block.rows {
            for j in 0..block.cols {
                self[(r0 + i, c0 + j)] = block[(i, j)];
            }
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm(&self.data)
    }

    pub fn trace(&self) -> f64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in (i + 1)..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)]).abs());
            }
        }
        worst
    }

    /// Checks the square-and-symmetric precondition of the symmetric solvers.
    pub fn check_symmetric(&self) -> Result<()> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                self.rows, self.cols
            )));
        }
        let asym = self.max_asymmetry();
        if asym > SYMMETRY_TOL * self.max_abs() {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for DenseMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn check_rhs(a: &DenseMatrix, b: &[f64]) -> Result<()> {
    if b.len() != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "rhs of length {} for a {}x{} matrix",
            b.len(),
            a.rows,
            a.cols
        )));
    }
    Ok(())
}

/// Lower-triangular Cholesky factor `A = L Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DenseMatrix,
}

impl Cholesky {
    /// Factors a symmetric matrix; only the lower triangle is read.
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let n = a.rows;
        let mut l = DenseMatrix::zeros(n, n);
        for j in 0..n {
            let mut d = a[(j, j)];
            for k in 0..j {
                d -= l[(j, k)] * l[(j, k)];
            }
            if !(d > 0.0) || !d.is_finite() {
                return Err(Error::NotPositiveDefinite { index: j, pivot: d });
            }
            let ljj = d.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..n {
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Self { l })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.l.rows;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.l[(i, k)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.l[(k, i)] * y[k];
            }
            y[i] = s / self.l[(i, i)];
        }
        y
    }

    pub fn factor_l(&self) -> &DenseMatrix {
        &self.l
    }
}

/// Solves `A x = b` for symmetric positive definite `A`.
pub fn solve_spd(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    a.check_symmetric()?;
    check_rhs(a, b)?;
    Ok(Cholesky::factor(a)?.solve(b))
}

/// LU factorization with complete (row and column) pivoting, `P A Q = L U`.
#[derive(Debug, Clone)]
pub struct FullPivLu {
    lu: DenseMatrix,
    row_perm: Vec<usize>,
    col_perm: Vec<usize>,
}

impl FullPivLu {
    /// Factors a square matrix. A pivot below `n·ε·max|A|` is reported as
    /// [`Error::Singular`].
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch(format!(
                "expected square matrix, got {}x{}",
                a.rows, a.cols
            )));
        }
        let n = a.rows;
        let mut lu = a.clone();
        let mut row_perm: Vec<usize> = (0..n).collect();
        let mut col_perm: Vec<usize> = (0..n).collect();
        let threshold = (n.max(1) as f64) * f64::EPSILON * a.max_abs();
        for k in 0..n {
            let (mut pr, mut pc, mut best) = (k, k, -1.0);
            for i in k..n {
                for j in k..n {
                    let v = lu[(i, j)].abs();
                    if v > best {
                        best = v;
                        pr = i;
                        pc = j;
                    }
                }
            }
            if !(best > threshold) {
                return Err(Error::Singular {
                    index: k,
                    pivot: best,
                });
            }
            if pr != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, pr * n + j);
                }
                row_perm.swap(k, pr);
            }
            if pc != k {
                for i in 0..n {
                    lu.data.swap(i * n + k, i * n + pc);
                }
                col_perm.swap(k, pc);
            }
            let pivot = lu[(k, k)];
            for i in (k + 1)..n {
                let f = lu[(i, k)] / pivot;
                lu[(i, k)] = f;
                if f == 0.0 {
                    continue;
                }
                for j in (k + 1)..n {
                    let u = lu[(k, j)];
                    lu[(i, j)] -= f * u;
                }
            }
        }
        Ok(Self {
            lu,
            row_perm,
            col_perm,
        })
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.lu.rows;
        let mut y: Vec<f64> = self.row_perm.iter().map(|&r| b[r]).collect();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lu[(i, k)] * y[k];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in (i + 1)..n {
                s -= self.lu[(i, k)] * y[k];
            }
            y[i] = s / self.lu[(i, i)];
        }
        let mut x = vec![0.0; n];
        for (k, &c) in self.col_perm.iter().enumerate() {
            x[c] = y[k];
        }
        x
    }
}

/// Solves `K x = b` for a symmetric, possibly indefinite, nonsingular `K`
/// (typically a KKT saddle matrix). One step of iterative refinement is
/// applied after the pivoted solve.
pub fn solve_symmetric_indefinite(k: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    k.check_symmetric()?;
    check_rhs(k, b)?;
    let lu = FullPivLu::factor(k)?;
    let mut x = lu.solve(b);
    let r = sub(b, &k.matvec(&x));
    let dx = lu.solve(&r);
    axpy(1.0, &dx, &mut x);
    Ok(x)
}

/// Smallest eigenvalue of a symmetric matrix, bracketed by Gershgorin discs
/// and refined by bisection on the success of a Cholesky factorization of
/// `A − μI`. Returns the lower end of the final bracket.
pub fn min_eigenvalue(a: &DenseMatrix, tol: f64) -> Result<f64> {
    a.check_symmetric()?;
    let n = a.rows;
    if n == 0 {
        return Err(Error::InvalidInput("empty matrix".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..n {
        let radius: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)].abs()).sum();
        lo = lo.min(a[(i, i)] - radius);
        hi = hi.max(a[(i, i)] + radius);
    }
    lo -= 1e-12 * (1.0 + lo.abs());
    let mut shifted = a.clone();
    while hi - lo > tol * (1.0 + lo.abs().max(hi.abs())) {
        let mid = 0.5 * (lo + hi);
        shifted.data.copy_from_slice(&a.data);
        shifted.add_diagonal(-mid);
        if Cholesky::factor(&shifted).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

//! Dense linear algebra for the small symmetric matrices of the model.
//!
//! Storage is dense row-major. Sizes stay at desk scale (a few hundred sites at
//! most), so the factorizations are plain O(N³) loops.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// Square dense matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::SizeMismatch { expected: n, got: bad.len() });
        }
        Ok(Matrix { n, data: rows.concat() })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (i, &v) in values.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_symmetric(&self, rel_tol: f64) -> bool {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        (0..self.n).all(|i| {
            (0..i).all(|j| (self[(i, j)] - self[(j, i)]).abs() <= rel_tol * scale)
        })
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        if other.n != self.n {
            return Err(Error::SizeMismatch { expected: self.n, got: other.n });
        }
        let n = self.n;
        let mut out = Matrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * other.data[k * n + j];
                }
            }
        }
        Ok(out)
    }

    /// The principal submatrix on `keep` (in the given order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Matrix {
        Matrix::from_fn(keep.len(), |a, b| self[(keep[a], keep[b])])
    }

    /// Indices of `0..n` not in `removed`, ascending.
    pub fn complement_indices(&self, removed: &[usize]) -> Vec<usize> {
        let mut mask = vec![false; self.n];
        for &r in removed {
            if r < self.n {
                mask[r] = true;
            }
        }
        (0..self.n).filter(|&i| !mask[i]).collect()
    }

    /// `(−1)^{i+j}` times the determinant with row `i` and column `j` deleted,
    /// so that `(M⁻¹)_ji · det M = cofactor(i, j)`.
    pub fn cofactor(&self, i: usize, j: usize) -> f64 {
        let rows: Vec<usize> = (0..self.n).filter(|&r| r != i).collect();
        let cols: Vec<usize> = (0..self.n).filter(|&c| c != j).collect();
        let sub = Matrix::from_fn(self.n - 1, |a, b| self[(rows[a], cols[b])]);
        let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
        sign * sub.determinant()
    }

    /// Determinant by LU decomposition with partial pivoting. Works for any
    /// square matrix; the empty matrix has determinant 1.
    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = 1.0;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a[r * n + col].abs().total_cmp(&a[s * n + col].abs()))
                .unwrap_or(col);
            let pivot = a[pivot_row * n + col];
            if pivot == 0.0 {
                return 0.0;
            }
            if pivot_row != col {
                for j in 0..n {
                    a.swap(col * n + j, pivot_row * n + j);
                }
                det = -det;
            }
            det *= pivot;
            for r in col + 1..n {
                let factor = a[r * n + col] / pivot;
                if factor == 0.0 {
                    continue;
                }
                for j in col + 1..n {
                    a[r * n + j] -= factor * a[col * n + j];
                }
            }
        }
        det
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

/// Determinant of `m` with the rows and columns in `removed` deleted.
pub fn det_minor(m: &Matrix, removed: &[usize]) -> f64 {
    let keep = m.complement_indices(removed);
    m.principal_submatrix(&keep).determinant()
}

/// In-place Cholesky of the row-major `n × n` buffer `a`. On success the lower
/// triangle (diagonal included) holds `L` with `M = L Lᵀ`; the strict upper
/// triangle is left untouched and must be ignored. Returns `ln det M`.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<f64> {
    debug_assert_eq!(a.len(), n * n);
    let mut logdet = 0.0;
    for j in 0..n {
        let mut diag = a[j * n + j];
        for k in 0..j {
            diag -= a[j * n + k] * a[j * n + k];
        }
        if !(diag > 0.0) || !diag.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: diag });
        }
        let ljj = diag.sqrt();
        a[j * n + j] = ljj;
        logdet += 2.0 * ljj.ln();
        for i in j + 1..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / ljj;
        }
    }
    Ok(logdet)
}

/// Cholesky factor `L` of a symmetric positive definite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SpdFactor {
    n: usize,
    // Row-major; only the lower triangle is meaningful.
    lower: Vec<f64>,
    logdet: f64,
}

const SYMMETRY_TOL: f64 = 1e-12;

/// Factor a symmetric matrix. Fails cleanly on any non-positive pivot.
pub fn factor(m: &Matrix) -> Result<SpdFactor> {
    if !m.is_symmetric(SYMMETRY_TOL) {
        return Err(Error::NotSymmetric);
    }
    let mut lower = m.data.clone();
    let logdet = cholesky_in_place(&mut lower, m.n)?;
    Ok(SpdFactor { n: m.n, lower, logdet })
}

impl SpdFactor {
    pub fn n(&self) -> usize {
        self.n
    }

    /// Entry `L_ij` (zero above the diagonal).
    pub fn l(&self, i: usize, j: usize) -> f64 {
        if j > i {
            0.0
        } else {
            self.lower[i * self.n + j]
        }
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// `L Lᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let n = self.n;
        Matrix::from_fn(n, |i, j| (0..=i.min(j)).map(|k| self.l(i, k) * self.l(j, k)).sum())
    }

    /// `L⁻¹ e_x`, which vanishes above index `x`.
    fn forward_unit(&self, x: usize) -> Vec<f64> {
        let n = self.n;
        let mut z = vec![0.0; n];
        z[x] = 1.0 / self.lower[x * n + x];
        for i in x + 1..n {
            let mut s = 0.0;
            for k in x..i {
                s += self.lower[i * n + k] * z[k];
            }
            z[i] = -s / self.lower[i * n + i];
        }
        z
    }

    /// `(M⁻¹)_xy = ⟨L⁻¹e_x, L⁻¹e_y⟩`; symmetric in `(x, y)` by construction.
    pub fn inverse_entry(&self, x: usize, y: usize) -> Result<f64> {
        for idx in [x, y] {
            if idx >= self.n {
                return Err(Error::SiteOutOfRange { site: idx, size: self.n });
            }
        }
        let (a, b) = if x <= y { (x, y) } else { (y, x) };
        let za = self.forward_unit(a);
        let zb = self.forward_unit(b);
        Ok((b..self.n).map(|k| za[k] * zb[k]).sum())
    }

    /// Solve `M v = b`.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if b.len() != n {
            return Err(Error::SizeMismatch { expected: n, got: b.len() });
        }
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= self.lower[i * n + k] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= self.lower[k * n + i] * y[k];
            }
            y[i] = s / self.lower[i * n + i];
        }
        Ok(y)
    }

    /// Column `x` of `M⁻¹`.
    pub fn inverse_column(&self, x: usize) -> Result<Vec<f64>> {
        if x >= self.n {
            return Err(Error::SiteOutOfRange { site: x, size: self.n });
        }
        let mut e = vec![0.0; self.n];
        e[x] = 1.0;
        self.solve(&e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_by_two() -> Matrix {
        Matrix::from_rows(&[vec![1.5, -1.0], vec![-1.0, 1.5]]).unwrap()
    }

    #[test]
    fn identity_factor() {
        let f = factor(&Matrix::identity(4)).unwrap();
        assert_eq!(f.reconstruct(), Matrix::identity(4));
        assert_eq!(f.logdet(), 0.0);
        for x in 0..4 {
            for y in 0..4 {
                let expect = if x == y { 1.0 } else { 0.0 };
                assert_eq!(f.inverse_entry(x, y).unwrap(), expect);
            }
        }
    }

    #[test]
    fn hand_cholesky() {
        let f = factor(&two_by_two()).unwrap();
        assert!((f.l(0, 0) - 1.5f64.sqrt()).abs() < 1e-15);
        assert!((f.l(1, 0) + 1.0 / 1.5f64.sqrt()).abs() < 1e-15);
        assert!((f.logdet() - 1.25f64.ln()).abs() < 1e-14);
        assert!((f.inverse_entry(0, 1).unwrap() - 0.8).abs() < 1e-14);
        assert!((f.inverse_entry(0, 0).unwrap() - 1.2).abs() < 1e-14);
    }

    #[test]
    fn diagonal_factor() {
        let f = factor(&Matrix::diagonal(&[2.0, 5.0])).unwrap();
        assert!((f.logdet() - 10f64.ln()).abs() < 1e-15);
        assert!((f.inverse_entry(0, 0).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn failures_are_errors() {
        assert!(matches!(factor(&Matrix::zeros(2)), Err(Error::NotPositiveDefinite { pivot: 0, .. })));
        let indefinite = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(factor(&indefinite), Err(Error::NotPositiveDefinite { pivot: 1, .. })));
        let asym = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert_eq!(factor(&asym), Err(Error::NotSymmetric));
        let nan = Matrix::diagonal(&[1.0, f64::NAN]);
        assert!(factor(&nan).is_err());
        let f = factor(&two_by_two()).unwrap();
        assert!(f.inverse_entry(2, 0).is_err());
    }

    #[test]
    fn minors() {
        let m = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        assert_eq!(det_minor(&m, &[0, 1, 2]), 1.0);
        assert!((det_minor(&m, &[]) - m.determinant()).abs() < 1e-12);
        // delete {1}: [[4, .5], [.5, 2]] -> 8 - 0.25
        assert!((det_minor(&m, &[1]) - 7.75).abs() < 1e-12);
    }

    #[test]
    fn solve_and_columns_agree() {
        let m = Matrix::from_rows(&[
            vec![4.0, 1.0, 0.5],
            vec![1.0, 3.0, 0.2],
            vec![0.5, 0.2, 2.0],
        ])
        .unwrap();
        let f = factor(&m).unwrap();
        for x in 0..3 {
            let col = f.inverse_column(x).unwrap();
            for y in 0..3 {
                assert!((col[y] - f.inverse_entry(y, x).unwrap()).abs() < 1e-14);
            }
        }
    }
}

//! Independent reference implementations used as test oracles. None of these
//! call into the library's numerics.
#![allow(dead_code)]

use hsm::Matrix;

/// Determinant by the Leibniz permutation expansion (n <= 8).
pub fn permutation_det(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    if n == 0 {
        return 1.0;
    }
    let mut perm: Vec<usize> = (0..n).collect();
    let mut total = 0.0;
    permute(&mut perm, 0, 1.0, rows, &mut total);
    total
}

fn permute(perm: &mut Vec<usize>, k: usize, sign: f64, rows: &[Vec<f64>], total: &mut f64) {
    let n = perm.len();
    if k == n {
        *total += sign * (0..n).map(|i| rows[i][perm[i]]).product::<f64>();
        return;
    }
    for i in k..n {
        perm.swap(k, i);
        permute(perm, k + 1, if i == k { sign } else { -sign }, rows, total);
        perm.swap(k, i);
    }
}

pub fn rows_of(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.n()).map(|i| (0..m.n()).map(|j| m[(i, j)]).collect()).collect()
}

pub fn det_of(m: &Matrix) -> f64 {
    permutation_det(&rows_of(m))
}

/// `(M⁻¹)_xy · det M` via the adjugate: the signed minor deleting row `y`, column `x`.
pub fn adjugate_entry(m: &Matrix, x: usize, y: usize) -> f64 {
    let rows = rows_of(m);
    let minor: Vec<Vec<f64>> = rows
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != y)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != x).map(|(_, v)| *v).collect())
        .collect();
    let sign = if (x + y) % 2 == 0 { 1.0 } else { -1.0 };
    sign * permutation_det(&minor)
}

pub fn inverse_entry(m: &Matrix, x: usize, y: usize) -> f64 {
    adjugate_entry(m, x, y) / det_of(m)
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    // Split into pieces first so narrow peaks are not missed.
    let pieces = 64;
    let h = (b - a) / pieces as f64;
    (0..pieces)
        .map(|k| {
            let (lo, hi) = (a + k as f64 * h, a + (k + 1) as f64 * h);
            let (fa, fm, fb) = (f(lo), f(0.5 * (lo + hi)), f(hi));
            let whole = (hi - lo) / 6.0 * (fa + 4.0 * fm + fb);
            rec(f, lo, hi, fa, fm, fb, whole, tol / pieces as f64, 40)
        })
        .sum()
}

pub const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// Two-site weight and `D` written out by hand: edge (0,1), pinnings `e0`, `e1`.
pub struct TwoSite {
    pub beta: f64,
    pub e0: f64,
    pub e1: f64,
}

impl TwoSite {
    pub fn d(&self, t0: f64, t1: f64) -> [[f64; 2]; 2] {
        let b = self.beta;
        [
            [b * (t1 - t0).exp() + self.e0 * (-t0).exp(), -b],
            [-b, b * (t0 - t1).exp() + self.e1 * (-t1).exp()],
        ]
    }

    pub fn density(&self, t0: f64, t1: f64) -> f64 {
        let d = self.d(t0, t1);
        let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        let action = self.beta * ((t0 - t1).cosh() - 1.0) + self.e0 * (t0.cosh() - 1.0) + self.e1 * (t1.cosh() - 1.0);
        INV_SQRT_2PI * INV_SQRT_2PI * (-action).exp() * det.sqrt()
    }

    pub fn g(&self, t0: f64, t1: f64, x: usize, y: usize) -> f64 {
        let d = self.d(t0, t1);
        let det = d[0][0] * d[1][1] - d[0][1] * d[1][0];
        let adj = [[d[1][1], -d[0][1]], [-d[1][0], d[0][0]]];
        adj[x][y] / det
    }

    /// `∫∫ density · f` over `[−l, l]²` by nested adaptive Simpson.
    pub fn integrate(&self, l: f64, tol: f64, f: &dyn Fn(f64, f64) -> f64) -> f64 {
        simpson(&|t0| simpson(&|t1| self.density(t0, t1) * f(t0, t1), -l, l, tol), -l, l, tol)
    }
}

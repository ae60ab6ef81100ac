//! Dense complex matrices (column-major) and singular values by one-sided Jacobi.
//!
//! The blocks of the composition operator are small (tens of columns), so plain
//! cyclic Jacobi orthogonalization is plenty: it converges quadratically and keeps
//! the smallest singular values at full relative accuracy, which matters for the
//! merged-spectrum drift checks.

use num_complex::Complex64;

#[derive(Debug, Clone)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    /// column-major storage
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::default(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        self.data[c * self.rows + r]
    }

    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.data[c * self.rows + r] = v;
    }

    pub fn col(&self, c: usize) -> &[Complex64] {
        &self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_mut(&mut self, c: usize) -> &mut [Complex64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }

    pub fn col_norm(&self, c: usize) -> f64 {
        self.col(c).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// y = A x
    pub fn matvec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.cols);
        let mut y = vec![Complex64::default(); self.rows];
        for c in 0..self.cols {
            let xc = x[c];
            if xc.norm_sqr() == 0.0 {
                continue;
            }
            for (r, v) in self.col(c).iter().enumerate() {
                y[r] += v * xc;
            }
        }
        y
    }
}

/// All singular values, descending. One-sided Jacobi on the columns.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    let mut m = a.clone();
    jacobi_orthogonalize(&mut m);
    let mut sv: Vec<f64> = (0..m.cols).map(|c| m.col_norm(c)).collect();
    sv.sort_by(|x, y| y.partial_cmp(x).unwrap());
    sv
}

fn jacobi_orthogonalize(a: &mut CMatrix) {
    let n = a.cols;
    if n < 2 {
        return;
    }
    let tol = 1e-14;
    for _sweep in 0..40 {
        let mut off = 0.0f64;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (app, aqq, apq) = gram_entries(a, p, q);
                let scale = (app * aqq).sqrt();
                if scale == 0.0 || apq.norm() <= tol * scale {
                    continue;
                }
                off = off.max(apq.norm() / scale);
                let phase = apq / apq.norm();
                let d = (app - aqq) / (2.0 * apq.norm());
                let t = if d >= 0.0 { -1.0 } else { 1.0 } / (d.abs() + (d * d + 1.0).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_columns(a, p, q, c, s, phase);
            }
        }
        if off <= tol {
            break;
        }
    }
}

fn gram_entries(a: &CMatrix, p: usize, q: usize) -> (f64, f64, Complex64) {
    let (cp, cq) = (a.col(p), a.col(q));
    let mut app = 0.0;
    let mut aqq = 0.0;
    let mut apq = Complex64::default();
    for i in 0..cp.len() {
        app += cp[i].norm_sqr();
        aqq += cq[i].norm_sqr();
        apq += cp[i].conj() * cq[i];
    }
    (app, aqq, apq)
}

fn rotate_columns(a: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let rows = a.rows;
    let (lo, hi) = if p < q { (p, q) } else { (q, p) };
    let (left, right) = a.data.split_at_mut(hi * rows);
    let col_p;
    let col_q;
    if p == lo {
        col_p = &mut left[lo * rows..(lo + 1) * rows];
        col_q = &mut right[..rows];
    } else {
        col_q = &mut left[lo * rows..(lo + 1) * rows];
        col_p = &mut right[..rows];
    }
    let e = phase;
    for i in 0..rows {
        let vp = col_p[i];
        let vq = col_q[i];
        col_p[i] = c * vp - s * e.conj() * vq;
        col_q[i] = s * e * vp + c * vq;
    }
}

//! Small dense complex linear algebra: LU solves, affine solution lines of
//! underdetermined systems, and singular values.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Pivots below this fraction of the largest entry count as zero.
const RANK_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max).sqrt()
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect()
    }

    pub fn to_nalgebra(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| self[(i, j)])
    }

    /// Solve the square system `self * x = b` by LU with partial pivoting.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.rows != self.cols || b.len() != self.rows {
            return Err(Error::Dimension(format!(
                "solve needs a square system, got {}x{} with rhs {}",
                self.rows,
                self.cols,
                b.len()
            )));
        }
        let n = self.rows;
        let scale = self.max_abs();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Singular);
        }
        // pivots compared by squared modulus
        let floor2 = (RANK_TOL * scale).powi(2);
        let mut a = self.data.clone();
        let mut x = b.to_vec();
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[i * n + k].norm_sqr().total_cmp(&a[j * n + k].norm_sqr()))
                .unwrap();
            if a[p * n + k].norm_sqr() <= floor2 {
                return Err(Error::Singular);
            }
            if p != k {
                for j in 0..n {
                    a.swap(k * n + j, p * n + j);
                }
                x.swap(k, p);
            }
            let piv = a[k * n + k];
            for i in k + 1..n {
                let factor = a[i * n + k] / piv;
                if factor == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for j in k..n {
                    let delta = factor * a[k * n + j];
                    a[i * n + j] -= delta;
                }
                let delta = factor * x[k];
                x[i] -= delta;
            }
        }
        for k in (0..n).rev() {
            let mut acc = x[k];
            for j in k + 1..n {
                acc -= a[k * n + j] * x[j];
            }
            x[k] = acc / a[k * n + k];
        }
        Ok(x)
    }

    /// For an `n x (n+1)` system of full row rank, return `(p, k)` with
    /// `self * (p + s k) = b` for all `s`. `k` has unit 2-norm and `p` has a
    /// zero in the free coordinate.
    pub fn affine_solution_line(&self, b: &[Complex64]) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
        let (n, m) = (self.rows, self.cols);
        if m != n + 1 || b.len() != n {
            return Err(Error::Dimension(format!(
                "affine line needs an n x (n+1) system, got {}x{} with rhs {}",
                n,
                m,
                b.len()
            )));
        }
        let scale = self.max_abs();
        if scale == 0.0 || !scale.is_finite() {
            return Err(Error::Singular);
        }
        let mut a = self.data.clone();
        let mut rhs = b.to_vec();
        let mut pivot_cols = Vec::with_capacity(n);
        let mut free_cols = Vec::new();
        let mut r = 0;
        for c in 0..m {
            if r == n {
                free_cols.push(c);
                continue;
            }
            let p = (r..n)
                .max_by(|&i, &j| a[i * m + c].norm().total_cmp(&a[j * m + c].norm()))
                .unwrap();
            if a[p * m + c].norm() <= RANK_TOL * scale {
                free_cols.push(c);
                continue;
            }
            if p != r {
                for j in 0..m {
                    a.swap(r * m + j, p * m + j);
                }
                rhs.swap(r, p);
            }
            let piv = a[r * m + c];
            for i in r + 1..n {
                let factor = a[i * m + c] / piv;
                for j in c..m {
                    let delta = factor * a[r * m + j];
                    a[i * m + j] -= delta;
                }
                let delta = factor * rhs[r];
                rhs[i] -= delta;
            }
            pivot_cols.push(c);
            r += 1;
        }
        if pivot_cols.len() != n || free_cols.len() != 1 {
            return Err(Error::Singular);
        }
        let free = free_cols[0];
        let back = |rhs: &[Complex64], free_value: Complex64| {
            let mut sol = vec![Complex64::new(0.0, 0.0); m];
            sol[free] = free_value;
            for (row, &c) in pivot_cols.iter().enumerate().rev() {
                let mut acc = rhs[row];
                for j in c + 1..m {
                    acc -= a[row * m + j] * sol[j];
                }
                sol[c] = acc / a[row * m + c];
            }
            sol
        };
        let p = back(&rhs, Complex64::new(0.0, 0.0));
        let zeros = vec![Complex64::new(0.0, 0.0); n];
        let mut k = back(&zeros, Complex64::new(1.0, 0.0));
        let norm = k.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for z in k.iter_mut() {
            *z /= norm;
        }
        Ok((p, k))
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let svd = self.to_nalgebra().svd(false, false);
        svd.singular_values.iter().copied().collect()
    }

    pub fn smallest_singular_value(&self) -> f64 {
        self.singular_values().into_iter().fold(f64::INFINITY, f64::min)
    }
}

impl std::ops::Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn max_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn solve_needs_pivoting() {
        let a = CMatrix::from_fn(2, 2, |i, j| [[c(0.0, 0.0), c(1.0, 1.0)], [c(2.0, 0.0), c(1.0, 0.0)]][i][j]);
        let x = a.solve(&[c(1.0, 1.0), c(3.0, 0.0)]).unwrap();
        assert!((x[0] - c(1.0, 0.0)).norm() < 1e-14);
        assert!((x[1] - c(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn singular_rejected() {
        let a = CMatrix::from_fn(2, 2, |_, _| c(1.0, 0.0));
        assert_eq!(a.solve(&[c(1.0, 0.0), c(1.0, 0.0)]), Err(Error::Singular));
    }

    #[test]
    fn affine_line_spans_solutions() {
        let a = CMatrix::from_fn(2, 3, |i, j| c((i * 3 + j) as f64 + 1.0, (i as f64) - (j as f64)));
        let b = [c(1.0, -2.0), c(0.5, 0.25)];
        let (p, k) = a.affine_solution_line(&b).unwrap();
        for s in [c(0.0, 0.0), c(1.5, -0.5), c(-3.0, 2.0)] {
            let x: Vec<_> = p.iter().zip(&k).map(|(pi, ki)| pi + s * ki).collect();
            let r = a.mul_vec(&x);
            assert!((r[0] - b[0]).norm() < 1e-12 && (r[1] - b[1]).norm() < 1e-12);
        }
        assert!((max_norm(&a.mul_vec(&k))) < 1e-12);
    }

    #[test]
    fn rank_deficient_line_rejected() {
        let a = CMatrix::from_fn(2, 3, |_, j| c(j as f64 + 1.0, 0.0));
        assert!(a.affine_solution_line(&[c(1.0, 0.0), c(1.0, 0.0)]).is_err());
    }
}

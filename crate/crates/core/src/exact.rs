//! Exact integer and rational matrix arithmetic.
//!
//! Everything here is overflow-checked `i64` (rational work widens to
//! `i128`). The polytope identities are exact, so nothing in this module
//! touches floating point.

use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Rational = Ratio<i128>;

/// Dense row-major integer matrix.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self { rows: r, cols: c, data: rows.concat() }
    }

    pub fn from_columns(cols: &[Vec<i64>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, Vec::len);
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r, "ragged columns");
            for (i, &v) in col.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        m
    }

    pub fn diagonal(d: &[i64]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// `n x n` permutation matrix sending basis vector `j` to `perm[j]`.
    pub fn permutation(perm: &[usize]) -> Self {
        let mut m = Self::zeros(perm.len(), perm.len());
        for (j, &i) in perm.iter().enumerate() {
            m[(i, j)] = 1;
        }
        m
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

    pub fn column(&self, j: usize) -> Vec<i64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<i64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
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

    pub fn neg(&self) -> Result<Self> {
        let data = self
            .data
            .iter()
            .map(|v| v.checked_neg().ok_or(Error::Overflow))
            .collect::<Result<_>>()?;
        Ok(Self { rows: self.rows, cols: self.cols, data })
    }

    pub fn mul(&self, rhs: &IntMatrix) -> Result<IntMatrix> {
        if self.cols != rhs.rows {
            return Err(Error::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = IntMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for j in 0..rhs.cols {
                let mut acc: i64 = 0;
                for k in 0..self.cols {
                    let term = self[(i, k)].checked_mul(rhs[(k, j)]).ok_or(Error::Overflow)?;
                    acc = acc.checked_add(term).ok_or(Error::Overflow)?;
                }
                out[(i, j)] = acc;
            }
        }
        Ok(out)
    }

    pub fn mul_vec(&self, v: &[i64]) -> Result<Vec<i64>> {
        let col = IntMatrix::from_columns(&[v.to_vec()]);
        Ok(self.mul(&col)?.column(0))
    }

    /// Determinant by Bareiss fraction-free elimination.
    pub fn det(&self) -> Result<i64> {
        if !self.is_square() {
            return Err(Error::Dimension(format!("det of {}x{} matrix", self.rows, self.cols)));
        }
        let n = self.rows;
        if n == 0 {
            return Ok(1);
        }
        let mut a: Vec<Vec<i128>> =
            self.to_rows().into_iter().map(|r| r.into_iter().map(i128::from).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n - 1 {
            if a[k][k] == 0 {
                let Some(p) = (k + 1..n).find(|&i| a[i][k] != 0) else {
                    return Ok(0);
                };
                a.swap(k, p);
                sign = -sign;
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = a[i][j]
                        .checked_mul(a[k][k])
                        .and_then(|x| x.checked_sub(a[i][k].checked_mul(a[k][j])?))
                        .ok_or(Error::Overflow)?;
                    // Bareiss guarantees exact division.
                    a[i][j] = num / prev;
                }
                a[i][k] = 0;
            }
            prev = a[k][k];
        }
        let d = sign * a[n - 1][n - 1];
        i64::try_from(d).map_err(|_| Error::Overflow)
    }

    pub fn is_unimodular(&self) -> Result<bool> {
        Ok(self.is_square() && self.det()?.abs() == 1)
    }

    /// Exact inverse of a unimodular matrix. Fails if `|det| != 1`.
    pub fn unimodular_inverse(&self) -> Result<IntMatrix> {
        let det = self.det()?;
        if det.abs() != 1 {
            return Err(Error::NotUnimodular(det));
        }
        let n = self.rows;
        let mut aug = RationalMatrix::from_int(self);
        let mut inv = RationalMatrix::from_int(&IntMatrix::identity(n));
        aug.gauss_jordan_with(&mut inv)?;
        inv.to_int()
    }

    /// Smallest permutation `L` (as a mapping) with `L * a = b`, if `a` and `b`
    /// are rearrangements of each other.
    pub fn matching_permutation(a: &[i64], b: &[i64]) -> Option<Vec<usize>> {
        if a.len() != b.len() {
            return None;
        }
        let mut used = vec![false; b.len()];
        let mut perm = vec![0; a.len()];
        for (j, &v) in a.iter().enumerate() {
            let i = (0..b.len()).find(|&i| !used[i] && b[i] == v)?;
            used[i] = true;
            perm[j] = i;
        }
        Some(perm)
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "IntMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", self.row(i))?;
        }
        write!(f, "]")
    }
}

/// Row-major matrix over `Ratio<i128>`; only what the elimination needs.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Rational>,
}

impl RationalMatrix {
    pub fn from_int(m: &IntMatrix) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|&v| Rational::from_integer(i128::from(v))).collect(),
        }
    }

    fn at(&self, i: usize, j: usize) -> Rational {
        self.data[i * self.cols + j]
    }

    fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.cols + j] = v;
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Reduce `self` (square, nonsingular) to the identity, applying the same
    /// row operations to `other`.
    fn gauss_jordan_with(&mut self, other: &mut RationalMatrix) -> Result<()> {
        let n = self.rows;
        for k in 0..n {
            let p = (k..n)
                .find(|&i| self.at(i, k) != Rational::from_integer(0))
                .ok_or(Error::Singular)?;
            self.swap_rows(k, p);
            other.swap_rows(k, p);
            let piv = self.at(k, k);
            for j in 0..self.cols {
                self.set(k, j, self.at(k, j) / piv);
            }
            for j in 0..other.cols {
                other.set(k, j, other.at(k, j) / piv);
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let factor = self.at(i, k);
                if factor == Rational::from_integer(0) {
                    continue;
                }
                for j in 0..self.cols {
                    self.set(i, j, self.at(i, j) - factor * self.at(k, j));
                }
                for j in 0..other.cols {
                    other.set(i, j, other.at(i, j) - factor * other.at(k, j));
                }
            }
        }
        Ok(())
    }

    fn to_int(&self) -> Result<IntMatrix> {
        let data = self
            .data
            .iter()
            .map(|r| {
                if r.is_integer() {
                    i64::try_from(r.to_integer()).map_err(|_| Error::Overflow)
                } else {
                    Err(Error::NonInteger)
                }
            })
            .collect::<Result<_>>()?;
        Ok(IntMatrix { rows: self.rows, cols: self.cols, data })
    }
}

/// Solve `A x = b` exactly over the rationals. `A` may be overdetermined;
/// the system must be consistent and have a unique solution.
pub fn solve_rational(a: &IntMatrix, b: &[Rational]) -> Result<Vec<Rational>> {
    assert_eq!(a.rows(), b.len());
    let (m, n) = (a.rows(), a.cols());
    let zero = Rational::from_integer(0);
    let mut aug: Vec<Vec<Rational>> = (0..m)
        .map(|i| {
            let mut row: Vec<Rational> =
                a.row(i).iter().map(|&v| Rational::from_integer(i128::from(v))).collect();
            row.push(b[i]);
            row
        })
        .collect();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m).find(|&i| aug[i][c] != zero) else {
            return Err(Error::Singular);
        };
        aug.swap(r, p);
        let piv = aug[r][c];
        for v in aug[r].iter_mut() {
            *v /= piv;
        }
        for i in 0..m {
            if i != r && aug[i][c] != zero {
                let factor = aug[i][c];
                for j in 0..=n {
                    let delta = factor * aug[r][j];
                    aug[i][j] -= delta;
                }
            }
        }
        r += 1;
    }
    if aug[n..].iter().any(|row| row[n] != zero) {
        return Err(Error::Inconsistent);
    }
    Ok((0..n).map(|i| aug[i][n]).collect())
}

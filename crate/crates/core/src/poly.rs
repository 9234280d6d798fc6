//! Univariate complex polynomials: construction from linear factors and
//! simultaneous root finding (Aberth-Ehrlich).
//!
//! Coefficient vectors are in ascending order: `c[k]` multiplies `s^k`.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Normalized residual a returned root must satisfy.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-8;
const MAX_ITERATIONS: usize = 500;

#[derive(Clone, Debug, PartialEq)]
pub struct UnivariateRoots {
    pub roots: Vec<Complex64>,
    /// Number of leading coefficients dropped as numerically zero.
    pub trimmed: usize,
    /// Largest normalized residual over the returned roots.
    pub max_residual: f64,
}

pub fn eval(coeffs: &[Complex64], s: Complex64) -> Complex64 {
    coeffs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
}

fn eval_with_derivative(coeffs: &[Complex64], s: Complex64) -> (Complex64, Complex64) {
    let zero = Complex64::new(0.0, 0.0);
    coeffs.iter().rev().fold((zero, zero), |(p, dp), &c| (p * s + c, dp * s + p))
}

/// Multiply two polynomials (coefficient convolution).
pub fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `prod_i (p_i + s k_i)` expanded into ascending coefficients.
pub fn product_of_linear(factors: &[(Complex64, Complex64)]) -> Vec<Complex64> {
    factors
        .iter()
        .fold(vec![Complex64::new(1.0, 0.0)], |acc, &(p, k)| convolve(&acc, &[p, k]))
}

/// `|q(r)| / (max|c| (1 + |r|)^deg)`.
pub fn normalized_residual(coeffs: &[Complex64], r: Complex64) -> f64 {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    let deg = coeffs.len().saturating_sub(1) as i32;
    eval(coeffs, r).norm() / (scale * (1.0 + r.norm()).powi(deg))
}

/// All roots of the polynomial after trimming leading coefficients whose
/// magnitude is below `trim_threshold * max|c|`.
pub fn univariate_roots(coeffs: &[Complex64], trim_threshold: f64) -> Result<UnivariateRoots> {
    let scale = coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::ZeroPolynomial);
    }
    let mut len = coeffs.len();
    while len > 0 && coeffs[len - 1].norm() < trim_threshold * scale {
        len -= 1;
    }
    let trimmed = coeffs.len() - len;
    let poly = &coeffs[..len];
    let degree = len - 1;
    if degree == 0 {
        return Ok(UnivariateRoots { roots: Vec::new(), trimmed, max_residual: 0.0 });
    }
    let roots = aberth(poly)?;
    let max_residual = roots.iter().map(|&r| normalized_residual(poly, r)).fold(0.0, f64::max);
    if max_residual >= ROOT_RESIDUAL_TOL {
        return Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: max_residual });
    }
    Ok(UnivariateRoots { roots, trimmed, max_residual })
}

fn aberth(poly: &[Complex64]) -> Result<Vec<Complex64>> {
    let degree = poly.len() - 1;
    let lead = poly[degree];
    // Fujiwara-style radius for the initial circle.
    let radius = (0..degree)
        .map(|k| (poly[k] / lead).norm().powf(1.0 / (degree - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(radius, 2.0 * PI * k as f64 / degree as f64 + 0.4))
        .collect();
    let mut converged = vec![false; degree];
    for _ in 0..MAX_ITERATIONS {
        for i in 0..degree {
            if converged[i] {
                continue;
            }
            let (p, dp) = eval_with_derivative(poly, z[i]);
            if p == Complex64::new(0.0, 0.0) {
                converged[i] = true;
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 =
                (0..degree).filter(|&j| j != i).map(|j| (z[i] - z[j]).inv()).sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if !step.is_finite() {
                continue;
            }
            z[i] -= step;
            if step.norm() <= 4.0 * f64::EPSILON * z[i].norm().max(f64::MIN_POSITIVE) {
                converged[i] = true;
            }
        }
        if converged.iter().all(|&c| c) {
            break;
        }
    }
    // A few Newton polishing steps; harmless for converged roots.
    for r in z.iter_mut() {
        for _ in 0..3 {
            let (p, dp) = eval_with_derivative(poly, *r);
            let step = p / dp;
            if step.is_finite() {
                *r -= step;
            }
        }
    }
    if z.iter().any(|r| !r.is_finite()) {
        return Err(Error::NoConvergence { iterations: MAX_ITERATIONS, residual: f64::INFINITY });
    }
    Ok(z)
}

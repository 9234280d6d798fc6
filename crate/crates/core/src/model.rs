//! Cycle networks with uniform coupling and the two forms of the
//! synchronization equations.
//!
//! Node 0 is the reference oscillator (`theta_0 = 0`, `x_0 = 1`), so
//! both systems have `n = N - 1` equations in `n` unknowns indexed `1..=n`.
//! Vectors in this module hold entry `i - 1` for node `i`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::rng::Rng;

/// Minimum pairwise frequency separation for sampled generic instances.
pub const MIN_FREQUENCY_GAP: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleInstance {
    n_nodes: usize,
    omega: Vec<Complex64>,
    a: Complex64,
}

impl CycleInstance {
    pub fn new(n_nodes: usize, omega: Vec<Complex64>, a: Complex64) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::TooFewNodes(n_nodes));
        }
        if omega.len() != n_nodes - 1 {
            return Err(Error::Dimension(format!(
                "expected {} natural frequencies, got {}",
                n_nodes - 1,
                omega.len()
            )));
        }
        if a == Complex64::new(0.0, 0.0) || !a.is_finite() {
            return Err(Error::ZeroCoupling);
        }
        Ok(Self { n_nodes, omega, a })
    }

    /// Instance from real coupling `k` and real frequencies, with `a = k / 2i`.
    pub fn from_real(k: f64, omega: &[f64]) -> Result<Self> {
        let a = Complex64::new(k, 0.0) / Complex64::new(0.0, 2.0);
        Self::new(omega.len() + 1, omega.iter().map(|&w| Complex64::new(w, 0.0)).collect(), a)
    }

    /// Random generic instance: frequencies with real and imaginary parts in
    /// `[-1, 1]`, pairwise at least [`MIN_FREQUENCY_GAP`] apart; `|a|` in
    /// `[0.5, 1.5]` with a uniform phase.
    pub fn sample_generic(n_nodes: usize, rng: &mut Rng) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::TooFewNodes(n_nodes));
        }
        let n = n_nodes - 1;
        let omega = loop {
            let omega: Vec<Complex64> = (0..n)
                .map(|_| Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0)))
                .collect();
            if min_pairwise_gap(&omega) >= MIN_FREQUENCY_GAP {
                break omega;
            }
        };
        let a = Complex64::from_polar(rng.gen_range(0.5..=1.5), rng.gen_range(0.0..2.0 * PI));
        Self::new(n_nodes, omega, a)
    }

    /// Real instance with frequencies uniform in `(-spread, spread)` and
    /// `a = k / 2i`.
    pub fn sample_real(n_nodes: usize, k: f64, spread: f64, rng: &mut Rng) -> Result<Self> {
        if n_nodes < 3 {
            return Err(Error::TooFewNodes(n_nodes));
        }
        let omega: Vec<f64> = (0..n_nodes - 1).map(|_| rng.gen_range(-spread..spread)).collect();
        Self::from_real(k, &omega)
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Number of unknowns, `N - 1`.
    pub fn dim(&self) -> usize {
        self.n_nodes - 1
    }

    pub fn omega(&self) -> &[Complex64] {
        &self.omega
    }

    pub fn coupling(&self) -> Complex64 {
        self.a
    }

    /// False when two natural frequencies coincide; such instances are
    /// allowed but fall outside the non-homogeneous setting.
    pub fn has_distinct_frequencies(&self) -> bool {
        min_pairwise_gap(&self.omega) > 0.0
    }

    /// The two neighbours of node `i` (`1..=n`) on the cycle.
    pub fn neighbors(&self, i: usize) -> [usize; 2] {
        [i - 1, (i + 1) % self.n_nodes]
    }
}

fn min_pairwise_gap(v: &[Complex64]) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..v.len() {
        for j in i + 1..v.len() {
            gap = gap.min((v[i] - v[j]).norm());
        }
    }
    gap
}

/// Phase angles `theta_1..theta_n`, each wrapped to `(-pi, pi]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseState {
    pub theta: Vec<f64>,
}

impl PhaseState {
    pub fn new(theta: Vec<f64>) -> Self {
        Self { theta: theta.into_iter().map(wrap_angle).collect() }
    }

    pub fn zeros(n: usize) -> Self {
        Self { theta: vec![0.0; n] }
    }

    /// Max-norm distance between two phase vectors modulo `2 pi`.
    pub fn angular_distance(&self, other: &PhaseState) -> f64 {
        self.theta
            .iter()
            .zip(&other.theta)
            .map(|(a, b)| wrap_angle(a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Wrap an angle into `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let w = theta.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// A point `(x_1, .., x_n)`; `x_0 = 1` is implicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ComplexPoint {
    pub x: Vec<Complex64>,
}

impl ComplexPoint {
    pub fn new(x: Vec<Complex64>) -> Self {
        Self { x }
    }

    pub fn ones(n: usize) -> Self {
        Self { x: vec![Complex64::new(1.0, 0.0); n] }
    }

    pub fn from_phases(theta: &PhaseState) -> Self {
        Self { x: theta.theta.iter().map(|&t| Complex64::from_polar(1.0, t)).collect() }
    }

    pub fn min_modulus(&self) -> f64 {
        self.x.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min)
    }

    pub fn in_torus(&self) -> bool {
        self.x.iter().all(|z| z.norm() > 0.0 && z.is_finite())
    }

    /// Max-norm distance scaled by the larger of the two max-norms (floored at 1).
    pub fn relative_distance(&self, other: &ComplexPoint) -> f64 {
        let diff = self.x.iter().zip(&other.x).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
        let scale = crate::linalg::max_norm(&self.x).max(crate::linalg::max_norm(&other.x)).max(1.0);
        diff / scale
    }

    /// Value at node `i` with the reference node included.
    fn node(&self, i: usize) -> Complex64 {
        if i == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            self.x[i - 1]
        }
    }

    fn check(&self, inst: &CycleInstance) -> Result<()> {
        if self.x.len() != inst.dim() {
            return Err(Error::Dimension(format!(
                "point has {} coordinates, instance needs {}",
                self.x.len(),
                inst.dim()
            )));
        }
        if let Some(i) = self.x.iter().position(|z| z.norm() == 0.0) {
            return Err(Error::ZeroCoordinate(i + 1));
        }
        Ok(())
    }
}

/// Values `f_1..f_n` of the algebraic system at `x`.
pub fn evaluate_algebraic(x: &ComplexPoint, inst: &CycleInstance) -> Result<Vec<Complex64>> {
    x.check(inst)?;
    let a = inst.coupling();
    Ok((1..=inst.dim())
        .map(|i| {
            let xi = x.node(i);
            let coupling: Complex64 = inst
                .neighbors(i)
                .iter()
                .map(|&j| {
                    let xj = x.node(j);
                    xi / xj - xj / xi
                })
                .sum();
            inst.omega()[i - 1] - a * coupling
        })
        .collect())
}

/// `max_i |f_i(x)|` for the algebraic system.
pub fn residual_algebraic(x: &ComplexPoint, inst: &CycleInstance) -> Result<f64> {
    Ok(crate::linalg::max_norm(&evaluate_algebraic(x, inst)?))
}

/// Analytic Jacobian `d f_i / d x_k`.
pub fn jacobian_algebraic(x: &ComplexPoint, inst: &CycleInstance) -> Result<CMatrix> {
    x.check(inst)?;
    let n = inst.dim();
    let a = inst.coupling();
    let mut jac = CMatrix::zeros(n, n);
    for i in 1..=n {
        let xi = x.node(i);
        for j in inst.neighbors(i) {
            let xj = x.node(j);
            jac[(i - 1, i - 1)] -= a * (xj.inv() + xj / (xi * xi));
            if j != 0 {
                jac[(i - 1, j - 1)] += a * (xi / (xj * xj) + xi.inv());
            }
        }
    }
    Ok(jac)
}

/// Right-hand side `omega_i - K sum_j sin(theta_i - theta_j)` of the
/// reduced-frame phase equations.
pub fn sine_vector_field(theta: &[f64], k: f64, omega: &[f64]) -> Vec<f64> {
    let n_nodes = theta.len() + 1;
    let node = |i: usize| if i == 0 { 0.0 } else { theta[i - 1] };
    (1..n_nodes)
        .map(|i| {
            let ti = node(i);
            let s = (ti - node(i - 1)).sin() + (ti - node((i + 1) % n_nodes)).sin();
            omega[i - 1] - k * s
        })
        .collect()
}

/// `max_i |omega_i - K sum_j sin(theta_i - theta_j)|`.
pub fn residual_sine(theta: &PhaseState, k: f64, omega: &[f64]) -> f64 {
    sine_vector_field(&theta.theta, k, omega).into_iter().map(f64::abs).fold(0.0, f64::max)
}

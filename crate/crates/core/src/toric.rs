//! Monomial maps and the coupling homotopy that carries facet-subsystem
//! roots to roots of the full system.
//!
//! Scaling the coupling `a -> tau * a` and substituting `x = tau^alpha u`,
//! where `alpha` is the integer inner normal of a facet (`<alpha, w> = -1`
//! on the facet, `> -1` elsewhere), gives
//!
//! ```text
//! H(u, tau) = omega - a * sum_w  w * u^w * tau^(<alpha, w> + 1)
//! ```
//!
//! over all vertices `w` of the adjacency polytope. At `tau = 0` only the
//! facet vertices survive (the facet subsystem); at `tau = 1` this is the
//! original system with `u = x`. `tau` runs along a slightly bent complex
//! path so real instances do not stall at real fold points.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::exact::IntMatrix;
use crate::linalg::{max_norm, CMatrix};
use crate::model::CycleInstance;
use crate::polytope::{polytope_vertices, Facet};

/// Component `j` is `prod_i v_i^{E_ij}`.
pub fn monomial_transform(v: &[Complex64], e: &IntMatrix) -> Result<Vec<Complex64>> {
    if v.len() != e.rows() {
        return Err(Error::Dimension(format!(
            "monomial map with {} exponent rows applied to {} values",
            e.rows(),
            v.len()
        )));
    }
    (0..e.cols())
        .map(|j| {
            let mut acc = Complex64::new(1.0, 0.0);
            for (i, &vi) in v.iter().enumerate() {
                let p = e[(i, j)];
                if p == 0 {
                    continue;
                }
                if vi == Complex64::new(0.0, 0.0) && p < 0 {
                    return Err(Error::ZeroCoordinate(i + 1));
                }
                acc *= vi.powi(p as i32);
            }
            Ok(acc)
        })
        .collect()
}

/// `u^w` for a vertex `w` with at most two nonzero entries.
#[derive(Clone, Debug)]
struct Term {
    /// `(index, exponent)` pairs, exponents `+-1`.
    support: Vec<(usize, i64)>,
    lift: u32,
}

impl Term {
    fn monomial(&self, u: &[Complex64]) -> Complex64 {
        self.support.iter().fold(Complex64::new(1.0, 0.0), |acc, &(i, p)| {
            if p > 0 {
                acc * u[i]
            } else {
                acc / u[i]
            }
        })
    }
}

/// Bent path `tau(s) = s (1 + i beta (1 - s))`, `s` in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TauPath {
    pub beta: f64,
}

impl TauPath {
    pub fn at(&self, s: f64) -> Complex64 {
        Complex64::new(s, self.beta * s * (1.0 - s))
    }

    pub fn derivative(&self, s: f64) -> Complex64 {
        Complex64::new(1.0, self.beta * (1.0 - 2.0 * s))
    }
}

#[derive(Clone, Debug)]
pub struct CouplingHomotopy {
    omega: Vec<Complex64>,
    a: Complex64,
    terms: Vec<Term>,
    max_lift: u32,
}

impl CouplingHomotopy {
    pub fn new(inst: &CycleInstance, facet: &Facet, normal: &[i64]) -> Result<Self> {
        let n_nodes = inst.n_nodes();
        facet.check_nodes(n_nodes)?;
        let mut terms = Vec::with_capacity(2 * n_nodes);
        for w in polytope_vertices(n_nodes) {
            let dot: i64 = w.iter().zip(normal).map(|(a, b)| a * b).sum();
            let lift = dot + 1;
            if lift < 0 {
                return Err(Error::InvalidFacet(format!("normal {normal:?} is not an inner facet normal")));
            }
            let support = w.iter().enumerate().filter(|(_, &p)| p != 0).map(|(i, &p)| (i, p)).collect();
            terms.push(Term { support, lift: lift as u32 });
        }
        let max_lift = terms.iter().map(|t| t.lift).max().unwrap_or(0);
        Ok(Self { omega: inst.omega().to_vec(), a: inst.coupling(), terms, max_lift })
    }

    fn tau_powers(&self, tau: Complex64) -> Vec<Complex64> {
        let mut pw = Vec::with_capacity(self.max_lift as usize + 1);
        let mut acc = Complex64::new(1.0, 0.0);
        for _ in 0..=self.max_lift {
            pw.push(acc);
            acc *= tau;
        }
        pw
    }

    pub fn eval(&self, u: &[Complex64], tau: Complex64) -> Vec<Complex64> {
        let pw = self.tau_powers(tau);
        let mut out = self.omega.clone();
        for t in &self.terms {
            let c = self.a * t.monomial(u) * pw[t.lift as usize];
            for &(i, p) in &t.support {
                out[i] -= c * p as f64;
            }
        }
        out
    }

    /// `(H, dH/du, dH/dtau)` at `(u, tau)`.
    pub fn eval_with_derivatives(&self, u: &[Complex64], tau: Complex64) -> (Vec<Complex64>, CMatrix, Vec<Complex64>) {
        let n = u.len();
        let pw = self.tau_powers(tau);
        let mut h = self.omega.clone();
        let mut jac = CMatrix::zeros(n, n);
        let mut dtau = vec![Complex64::new(0.0, 0.0); n];
        for t in &self.terms {
            let mono = self.a * t.monomial(u);
            let scaled = mono * pw[t.lift as usize];
            let dscaled = if t.lift == 0 { Complex64::new(0.0, 0.0) } else { mono * pw[t.lift as usize - 1] * t.lift as f64 };
            for &(i, p) in &t.support {
                let wi = p as f64;
                h[i] -= scaled * wi;
                dtau[i] -= dscaled * wi;
                for &(k, pk) in &t.support {
                    // d(u^w)/du_k = w_k u^w / u_k
                    jac[(i, k)] -= wi * scaled * pk as f64 / u[k];
                }
            }
        }
        (h, jac, dtau)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackerSettings {
    pub initial_step: f64,
    pub max_step: f64,
    pub min_step: f64,
    /// Largest accepted first corrector step, relative to `1 + |u|`.
    pub max_first_correction: f64,
    pub corrector_tol: f64,
    pub max_steps: usize,
}

impl Default for TrackerSettings {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            max_step: 0.25,
            min_step: 1e-9,
            max_first_correction: 2e-2,
            corrector_tol: 1e-10,
            max_steps: 20_000,
        }
    }
}

impl TrackerSettings {
    /// Tighter settings used when re-tracking after a suspected path jump
    /// or a failed path.
    pub fn cautious(&self) -> Self {
        Self {
            initial_step: self.initial_step / 10.0,
            max_step: self.max_step / 5.0,
            max_first_correction: self.max_first_correction / 10.0,
            max_steps: self.max_steps * 5,
            ..*self
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackOutcome {
    pub endpoint: Vec<Complex64>,
    pub steps: usize,
    pub rejected: usize,
}

fn scale(u: &[Complex64]) -> f64 {
    1.0 + max_norm(u)
}

fn velocity(hom: &CouplingHomotopy, path: &TauPath, u: &[Complex64], s: f64) -> Result<Vec<Complex64>> {
    let (_, jac, dtau) = hom.eval_with_derivatives(u, path.at(s));
    let ds = path.derivative(s);
    let rhs: Vec<Complex64> = dtau.iter().map(|d| -d * ds).collect();
    jac.solve(&rhs)
}

fn axpy(u: &[Complex64], k: &[Complex64], h: f64) -> Vec<Complex64> {
    u.iter().zip(k).map(|(a, b)| a + b * h).collect()
}

/// Newton corrector at fixed `tau`; `None` if it does not settle quickly.
fn correct(hom: &CouplingHomotopy, u0: Vec<Complex64>, tau: Complex64, cfg: &TrackerSettings) -> Option<Vec<Complex64>> {
    let mut u = u0;
    let mut last = f64::INFINITY;
    for iter in 0..4 {
        let (h, jac, _) = hom.eval_with_derivatives(&u, tau);
        let step = jac.solve(&h).ok()?;
        let norm = max_norm(&step);
        let sc = scale(&u);
        if iter == 0 && norm > cfg.max_first_correction * sc {
            return None;
        }
        if iter > 0 && norm > 0.5 * last {
            return None;
        }
        for (ui, si) in u.iter_mut().zip(&step) {
            *ui -= si;
        }
        if u.iter().any(|z| !z.is_finite() || z.norm() == 0.0) {
            return None;
        }
        if norm <= cfg.corrector_tol * sc {
            return Some(u);
        }
        last = norm;
    }
    None
}

/// Track one root of `H(., tau(0))` to `tau(1) = 1`.
pub fn track(hom: &CouplingHomotopy, path: &TauPath, start: &[Complex64], cfg: &TrackerSettings) -> Result<TrackOutcome> {
    let mut u = start.to_vec();
    let mut s = 0.0f64;
    let mut h = cfg.initial_step;
    let mut steps = 0;
    let mut rejected = 0;
    let mut streak = 0;
    while s < 1.0 {
        if steps + rejected >= cfg.max_steps {
            return Err(Error::GenericityFailure(format!("path tracking exceeded {} steps at s = {s}", cfg.max_steps)));
        }
        let hs = h.min(1.0 - s);
        let predicted = (|| -> Result<Vec<Complex64>> {
            let k1 = velocity(hom, path, &u, s)?;
            let k2 = velocity(hom, path, &axpy(&u, &k1, hs / 2.0), s + hs / 2.0)?;
            let k3 = velocity(hom, path, &axpy(&u, &k2, hs / 2.0), s + hs / 2.0)?;
            let k4 = velocity(hom, path, &axpy(&u, &k3, hs), s + hs)?;
            Ok(u.iter()
                .enumerate()
                .map(|(i, ui)| ui + (k1[i] + k2[i] * 2.0 + k3[i] * 2.0 + k4[i]) * (hs / 6.0))
                .collect())
        })();
        let next_s = if hs == 1.0 - s { 1.0 } else { s + hs };
        let corrected = predicted.ok().and_then(|p| correct(hom, p, path.at(next_s), cfg));
        match corrected {
            Some(next) => {
                u = next;
                s = next_s;
                steps += 1;
                streak += 1;
                if streak >= 3 {
                    h = (h * 2.0).min(cfg.max_step);
                    streak = 0;
                }
            }
            None => {
                rejected += 1;
                streak = 0;
                h /= 2.0;
                if h < cfg.min_step {
                    return Err(Error::GenericityFailure(format!("path step size underflow at s = {s}")));
                }
            }
        }
    }
    Ok(TrackOutcome { endpoint: u, steps, rejected })
}

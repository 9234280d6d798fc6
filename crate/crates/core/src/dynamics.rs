//! Fixed-step integration of the phase equations and comparison of the
//! reachable equilibria against the algebraic solutions.

use std::f64::consts::PI;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sine_vector_field, wrap_angle, PhaseState};
use crate::rng::{streams, substream};

pub const EQUILIBRIUM_DEDUP: f64 = 1e-4;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OdeConfig {
    #[serde(rename = "K")]
    pub k: f64,
    pub omega: Vec<f64>,
    pub dt: f64,
    pub t_max: f64,
    pub convergence_tol: f64,
}

impl OdeConfig {
    /// Defaults: `dt = 0.01`, `t_max = 200`, tolerance `1e-8`.
    pub fn new(k: f64, omega: Vec<f64>) -> Result<Self> {
        let cfg = Self { k, omega, dt: 0.01, t_max: 200.0, convergence_tol: 1e-8 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_max > 0.0) {
            return Err(Error::InvalidArgument("dt and t_max must be positive".into()));
        }
        if self.k == 0.0 || !self.k.is_finite() {
            return Err(Error::ZeroCoupling);
        }
        if self.omega.len() < 2 {
            return Err(Error::TooFewNodes(self.omega.len() + 1));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

/// Classical RK4 from `theta0` until the derivative max-norm drops below
/// the tolerance or `t_max` is reached. Returns the wrapped endpoint and
/// the derivative norm there.
pub fn integrate(theta0: &PhaseState, cfg: &OdeConfig) -> (PhaseState, f64) {
    let field = |t: &[f64]| sine_vector_field(t, cfg.k, &cfg.omega);
    let axpy = |t: &[f64], h: f64, d: &[f64]| t.iter().zip(d).map(|(a, b)| a + h * b).collect::<Vec<_>>();
    let steps = (cfg.t_max / cfg.dt).ceil() as usize;
    let dt = cfg.dt;
    let mut theta = theta0.theta.clone();
    let mut k1 = field(&theta);
    let mut norm = max_abs(&k1);
    for _ in 0..steps {
        if norm < cfg.convergence_tol {
            break;
        }
        let k2 = field(&axpy(&theta, dt / 2.0, &k1));
        let k3 = field(&axpy(&theta, dt / 2.0, &k2));
        let k4 = field(&axpy(&theta, dt, &k3));
        for i in 0..theta.len() {
            theta[i] = wrap_angle(theta[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
        }
        k1 = field(&theta);
        norm = max_abs(&k1);
    }
    (PhaseState::new(theta), norm)
}

fn lex_cmp(a: &PhaseState, b: &PhaseState) -> std::cmp::Ordering {
    a.theta
        .iter()
        .zip(&b.theta)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Converged endpoints from `n_starts` uniform random phase vectors,
/// deduplicated modulo `2 pi` and sorted.
pub fn find_stable_equilibria(cfg: &OdeConfig, n_starts: usize, seed: u64) -> Vec<PhaseState> {
    let mut rng = substream(seed, streams::ODE);
    let starts: Vec<PhaseState> = (0..n_starts)
        .map(|_| PhaseState::new((0..cfg.dim()).map(|_| rng.gen_range(-PI..PI)).collect()))
        .collect();
    let ends: Vec<Option<PhaseState>> = starts
        .par_iter()
        .map(|t0| {
            let (end, norm) = integrate(t0, cfg);
            (norm < cfg.convergence_tol).then_some(end)
        })
        .collect();
    let mut eq: Vec<PhaseState> = Vec::new();
    for end in ends.into_iter().flatten() {
        if eq.iter().all(|e| e.angular_distance(&end) > EQUILIBRIUM_DEDUP) {
            eq.push(end);
        }
    }
    eq.sort_by(lex_cmp);
    eq
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumMatch {
    pub equilibrium: usize,
    /// Index of the nearest configuration, if any were given.
    pub nearest: Option<usize>,
    pub distance: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub tol: f64,
    pub matched: Vec<EquilibriumMatch>,
    pub unmatched: Vec<EquilibriumMatch>,
    pub max_matched_distance: f64,
}

impl MatchReport {
    pub fn all_matched(&self) -> bool {
        self.unmatched.is_empty()
    }
}

/// Pair each equilibrium with its nearest configuration under the wrapped
/// angular max-norm.
pub fn match_equilibria(eq: &[PhaseState], configs: &[PhaseState], tol: f64) -> MatchReport {
    let mut report = MatchReport { tol, ..Default::default() };
    for (i, e) in eq.iter().enumerate() {
        let nearest = configs
            .iter()
            .enumerate()
            .map(|(j, c)| (j, e.angular_distance(c)))
            .min_by(|a, b| a.1.total_cmp(&b.1));
        let entry = EquilibriumMatch {
            equilibrium: i,
            nearest: nearest.map(|n| n.0),
            distance: nearest.map_or(f64::INFINITY, |n| n.1),
        };
        if entry.distance < tol {
            report.max_matched_distance = report.max_matched_distance.max(entry.distance);
            report.matched.push(entry);
        } else {
            report.unmatched.push(entry);
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::residual_sine;

    #[test]
    fn zero_frequencies_stay_synchronized() {
        let cfg = OdeConfig::new(1.0, vec![0.0; 3]).unwrap();
        let (end, norm) = integrate(&PhaseState::zeros(3), &cfg);
        assert_eq!(end, PhaseState::zeros(3));
        assert_eq!(norm, 0.0);
    }

    #[test]
    fn config_validation() {
        assert!(OdeConfig::new(0.0, vec![0.0; 2]).is_err());
        let mut cfg = OdeConfig::new(1.0, vec![0.0; 2]).unwrap();
        cfg.dt = 0.0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn five_cycle_converges_from_random_start() {
        let mut rng = substream(11, 0);
        let omega: Vec<f64> = (0..4).map(|_| rng.gen_range(-0.1..0.1)).collect();
        let cfg = OdeConfig::new(1.0, omega.clone()).unwrap();
        let t0 = PhaseState::new((0..4).map(|_| rng.gen_range(-PI..PI)).collect());
        let (end, norm) = integrate(&t0, &cfg);
        assert!(norm < 1e-8, "norm {norm}");
        assert!(residual_sine(&end, 1.0, &omega) < 1e-8);
    }

    #[test]
    fn no_starts_no_equilibria() {
        let cfg = OdeConfig::new(1.0, vec![0.0; 2]).unwrap();
        assert!(find_stable_equilibria(&cfg, 0, 1).is_empty());
    }

    #[test]
    fn three_cycle_synchronized_state_found() {
        let cfg = OdeConfig::new(1.0, vec![0.0; 2]).unwrap();
        let eq = find_stable_equilibria(&cfg, 20, 3);
        assert!(eq.iter().any(|e| e.angular_distance(&PhaseState::zeros(2)) < 1e-6));
        for e in &eq {
            assert!(residual_sine(e, 1.0, &cfg.omega) < 1e-8);
        }
    }

    #[test]
    fn matching_trivial_cases() {
        let empty = match_equilibria(&[], &[], 1e-5);
        assert!(empty.matched.is_empty() && empty.unmatched.is_empty());
        let list = vec![PhaseState::new(vec![0.1, -1.0]), PhaseState::new(vec![3.0, 2.0])];
        let same = match_equilibria(&list, &list, 1e-5);
        assert_eq!(same.matched.len(), 2);
        assert!(same.matched.iter().all(|m| m.distance == 0.0));
        let none = match_equilibria(&list, &[], 1e-5);
        assert_eq!(none.unmatched.len(), 2);
    }

    #[test]
    fn matching_wraps_angles() {
        let a = [PhaseState::new(vec![PI - 1e-7, 0.0])];
        let b = [PhaseState::new(vec![-PI + 1e-7, 0.0])];
        let r = match_equilibria(&a, &b, 1e-5);
        assert!(r.all_matched());
    }
}

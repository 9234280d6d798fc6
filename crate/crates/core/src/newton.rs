//! Newton's method on the full algebraic system.

use serde::Serialize;

use crate::linalg::max_norm;
use crate::model::{evaluate_algebraic, jacobian_algebraic, ComplexPoint, CycleInstance};

/// Residual at which refinement stops.
pub const NEWTON_TARGET: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStatus {
    Converged,
    /// Steps stopped shrinking before the target residual was reached.
    Stalled,
    Diverged,
    SingularJacobian,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NewtonOutcome {
    pub point: ComplexPoint,
    pub residual: f64,
    pub iterations: usize,
    pub last_step: f64,
    pub status: NewtonStatus,
}

/// Refine `x0` towards a root of the full system.
///
/// Stops once the residual is at most [`NEWTON_TARGET`] and one further step
/// has been taken; that last step is rolled back if it made the residual worse.
pub fn newton_refine(x0: &ComplexPoint, inst: &CycleInstance, max_iter: usize) -> NewtonOutcome {
    let mut x = x0.clone();
    let mut last_step = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for iter in 0..max_iter {
        let f = match evaluate_algebraic(&x, inst) {
            Ok(f) => f,
            Err(_) => return outcome(x, f64::INFINITY, iter, last_step, NewtonStatus::Diverged),
        };
        residual = max_norm(&f);
        if !residual.is_finite() {
            return outcome(x, residual, iter, last_step, NewtonStatus::Diverged);
        }
        if residual <= NEWTON_TARGET && (last_step <= 1e-14 * (1.0 + max_norm(&x.x))) {
            return outcome(x, residual, iter, last_step, NewtonStatus::Converged);
        }
        let step = match jacobian_algebraic(&x, inst).and_then(|j| j.solve(&f)) {
            Ok(s) => s,
            Err(_) => return outcome(x, residual, iter, last_step, NewtonStatus::SingularJacobian),
        };
        last_step = max_norm(&step);
        let candidate =
            ComplexPoint::new(x.x.iter().zip(&step).map(|(a, b)| a - b).collect::<Vec<_>>());
        if residual <= NEWTON_TARGET {
            // Polishing step: keep it only if it does not make things worse.
            if let Ok(r) = evaluate_algebraic(&candidate, inst).map(|f| max_norm(&f)) {
                if r <= residual {
                    x = candidate;
                    residual = r;
                }
            }
            return outcome(x, residual, iter + 1, last_step, NewtonStatus::Converged);
        }
        if candidate.x.iter().any(|z| !z.is_finite() || z.norm() == 0.0) || max_norm(&candidate.x) > 1e12 {
            return outcome(candidate, f64::INFINITY, iter + 1, last_step, NewtonStatus::Diverged);
        }
        x = candidate;
    }
    let status = if residual <= NEWTON_TARGET { NewtonStatus::Converged } else { NewtonStatus::Stalled };
    if let Ok(f) = evaluate_algebraic(&x, inst) {
        residual = max_norm(&f);
    }
    outcome(x, residual, max_iter, last_step, status)
}

fn outcome(point: ComplexPoint, residual: f64, iterations: usize, last_step: f64, status: NewtonStatus) -> NewtonOutcome {
    NewtonOutcome { point, residual, iterations, last_step, status }
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::model::residual_algebraic;
    use crate::rng::{streams, substream};
    use crate::solver::{census, InstanceSource, SolverConfig};

    fn root_and_instance() -> (ComplexPoint, CycleInstance) {
        let c = census(5, 3, &InstanceSource::Sampled, &SolverConfig::default()).unwrap();
        (c.solutions[4].x.clone(), c.instance)
    }

    #[test]
    fn recovers_perturbed_root() {
        let (root, inst) = root_and_instance();
        let x0 = ComplexPoint::new(root.x.iter().map(|z| z * Complex64::new(1.0 + 1e-3, -1e-3)).collect());
        let out = newton_refine(&x0, &inst, 20);
        assert_eq!(out.status, NewtonStatus::Converged);
        assert!(out.point.relative_distance(&root) < 1e-9);
        assert!(out.residual <= NEWTON_TARGET);
        assert!(out.iterations <= 6, "{} iterations", out.iterations);
        assert_eq!(out.residual, residual_algebraic(&out.point, &inst).unwrap());
    }

    #[test]
    fn exact_root_needs_at_most_one_step() {
        let (root, inst) = root_and_instance();
        let out = newton_refine(&root, &inst, 20);
        assert_eq!(out.status, NewtonStatus::Converged);
        assert!(out.iterations <= 1);
        assert!(out.last_step < 1e-12 || out.last_step == f64::INFINITY);
        assert!(out.point.relative_distance(&root) < 1e-12);
    }

    #[test]
    fn zero_coordinate_is_divergence() {
        let inst = CycleInstance::sample_generic(4, &mut substream(1, streams::INSTANCE)).unwrap();
        let x0 = ComplexPoint::new(vec![Complex64::new(0.0, 0.0); 3]);
        assert_eq!(newton_refine(&x0, &inst, 10).status, NewtonStatus::Diverged);
    }

    #[test]
    fn iteration_budget_respected() {
        let inst = CycleInstance::sample_generic(6, &mut substream(2, streams::INSTANCE)).unwrap();
        let x0 = ComplexPoint::new(vec![Complex64::new(40.0, 3.0); 5]);
        let out = newton_refine(&x0, &inst, 2);
        assert!(out.iterations <= 2);
        assert_ne!(out.status, NewtonStatus::Converged);
    }
}

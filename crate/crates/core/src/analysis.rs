//! Closed-form root counts, the divisibility-by-4 witness, and independent
//! oracles used to corroborate the facet census.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::CMatrix;
use crate::model::{ComplexPoint, CycleInstance, PhaseState};
use crate::newton::{newton_refine, NewtonStatus};
use crate::polytope::{adjacency_polytope_bound, facet_count, facet_reduction, Facet, Parity};
use crate::rng::{resample_seed, streams, substream};
use crate::solver::{reduce_and_solve, FacetSubsystem, SolverConfig, TorusSolution};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPrediction {
    #[serde(rename = "N")]
    pub n_nodes: usize,
    pub per_facet: u64,
    pub total: u64,
    #[serde(rename = "bound")]
    pub bkk_bound: u64,
    pub gap: u64,
}

/// Generic root count per facet subsystem under uniform coupling.
pub fn per_facet_count(n_nodes: usize) -> Result<u64> {
    if n_nodes < 3 {
        return Err(Error::TooFewNodes(n_nodes));
    }
    let half = n_nodes as u64 / 2;
    Ok(match (Parity::of(n_nodes), n_nodes % 4) {
        (Parity::Odd, _) => 1,
        (Parity::Even, 0) => half - 1,
        (Parity::Even, _) => half,
    })
}

pub fn predicted_counts(n_nodes: usize) -> Result<CountPrediction> {
    let per_facet = per_facet_count(n_nodes)?;
    let total = facet_count(n_nodes)?.checked_mul(per_facet).ok_or(Error::Overflow)?;
    let bkk_bound = adjacency_polytope_bound(n_nodes)?;
    Ok(CountPrediction { n_nodes, per_facet, total, bkk_bound, gap: bkk_bound - total })
}

/// A point of the torus annihilated by the initial system at the facet's
/// inner normal, in the reduced coordinates `y = h`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelWitness {
    pub facet_id: usize,
    pub h: Vec<i64>,
    /// `prod_i h_i^{h_i}`, the value of the last monomial at `y = h`.
    pub last_monomial: i64,
    /// `V* (h_1, .., h_n, prod h_i^{h_i})^T`, exactly.
    pub image: Vec<i64>,
    pub verified: bool,
}

/// `base^exp` for `base = +-1`, exact for negative exponents too.
fn unit_pow(base: i64, exp: i64) -> i64 {
    debug_assert!(base == 1 || base == -1);
    if base == 1 || exp % 2 == 0 {
        1
    } else {
        -1
    }
}

/// Try `y = h` as a torus zero of `V* (y^{V*})^T = 0`. The candidate is
/// returned only when the exact integer check passes, which happens
/// precisely when `4 | N`. Odd cycles have no such witness.
pub fn initial_witness(facet_id: usize, f: &Facet, n_nodes: usize) -> Result<Option<KernelWitness>> {
    f.check_nodes(n_nodes)?;
    if f.parity() == Parity::Odd {
        return Ok(None);
    }
    let red = facet_reduction(f, n_nodes)?;
    let h = red.h.expect("even facets carry h");
    let last_monomial = h.iter().map(|&hi| unit_pow(hi, hi)).product::<i64>();
    let mut mono = h.clone();
    mono.push(last_monomial);
    let image = red.vstar.mul_vec(&mono)?;
    let verified = image.iter().all(|&v| v == 0);
    if !verified {
        return Ok(None);
    }
    Ok(Some(KernelWitness { facet_id, h, last_monomial, image, verified }))
}

/// `prod_i h_i` for an even facet.
pub fn h_sign_product(f: &Facet, n_nodes: usize) -> Result<i64> {
    let red = facet_reduction(f, n_nodes)?;
    Ok(red.h.map_or(1, |h| h.iter().product()))
}

/// Root count in the torus of the facet subsystem with the structured
/// coefficients `a V` replaced by independent random ones (same monomials,
/// same constants).
pub fn generic_bkk_facet(f: &Facet, n_nodes: usize, seed: u64) -> Result<u64> {
    f.check_nodes(n_nodes)?;
    let cfg = SolverConfig::default();
    let mut last = String::new();
    for attempt in 0..=cfg.max_resamples {
        let mut rng = substream(resample_seed(seed, attempt as u64), streams::ORACLE);
        let inst = CycleInstance::sample_generic(n_nodes, &mut rng)?;
        let cols = if f.parity() == Parity::Odd { n_nodes - 1 } else { n_nodes };
        let m = CMatrix::from_fn(n_nodes - 1, cols, |_, _| {
            Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let sub = FacetSubsystem::with_coefficients(0, f, &inst, m)?;
        match reduce_and_solve(&sub, 0, &cfg) {
            Ok(r) => {
                let in_torus = r.roots.iter().filter(|x| x.iter().all(|z| z.norm() > cfg.min_modulus)).count();
                return Ok(in_torus as u64);
            }
            Err(Error::GenericityFailure(msg)) => last = msg,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResamplesExhausted { attempts: cfg.max_resamples, last })
}

/// Solutions lying on the real torus, as phase angles.
pub fn torus_filter(solutions: &[TorusSolution], tol: f64) -> Vec<PhaseState> {
    solutions
        .iter()
        .filter(|s| s.x.x.iter().all(|z| (z.norm() - 1.0).abs() < tol))
        .map(|s| PhaseState::new(s.x.x.iter().map(|z| z.arg()).collect()))
        .collect()
}

pub const MULTISTART_ITERATIONS: usize = 50;
pub const MULTISTART_DEDUP: f64 = 1e-6;

/// Newton's method from `n_starts` random points; converged torus roots,
/// deduplicated and sorted.
pub fn multistart_roots(inst: &CycleInstance, n_starts: usize, seed: u64) -> Vec<ComplexPoint> {
    let n = inst.dim();
    let mut rng = substream(seed, streams::MULTISTART);
    let starts: Vec<ComplexPoint> = (0..n_starts)
        .map(|_| {
            ComplexPoint::new(
                (0..n)
                    .map(|_| Complex64::from_polar(rng.gen_range(-2.0f64..2.0).exp(), rng.gen_range(-PI..PI)))
                    .collect(),
            )
        })
        .collect();
    let found: Vec<Option<ComplexPoint>> = starts
        .par_iter()
        .map(|x0| {
            let out = newton_refine(x0, inst, MULTISTART_ITERATIONS);
            let ok = matches!(out.status, NewtonStatus::Converged) && out.point.min_modulus() > 1e-8;
            ok.then_some(out.point)
        })
        .collect();
    let mut roots: Vec<ComplexPoint> = Vec::new();
    for x in found.into_iter().flatten() {
        if roots.iter().all(|r| r.relative_distance(&x) > MULTISTART_DEDUP) {
            roots.push(x);
        }
    }
    roots.sort_by(|a, b| {
        a.x.iter()
            .zip(&b.x)
            .flat_map(|(p, q)| [p.re.total_cmp(&q.re), p.im.total_cmp(&q.im)])
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    roots
}

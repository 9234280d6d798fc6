//! Facet-by-facet solution of the algebraic system.
//!
//! Each facet subsystem `omega = a V (x^V)^T` is solved in closed form: a
//! square linear solve plus a unimodular monomial map for odd `N`, and an
//! affine solution line plus one univariate constraint polynomial for even
//! `N`. Every facet root is then continued along the coupling homotopy (see
//! [`crate::toric`]) to a root of the full system; the facet roots and the
//! full roots are in one-to-one correspondence.

use num_complex::Complex64;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analysis::predicted_counts;
use crate::error::{Error, Result};
use crate::exact::IntMatrix;
use crate::linalg::{max_norm, CMatrix};
use crate::model::{residual_algebraic, ComplexPoint, CycleInstance};
use crate::newton::{newton_refine, NewtonStatus};
use crate::poly::{product_of_linear, univariate_roots};
use crate::polytope::{enumerate_facets, facet_matrix, facet_normal, facet_reduction, Facet, FacetReduction, Parity};
use crate::rng::{resample_seed, streams, substream};
use crate::toric::{monomial_transform, track, CouplingHomotopy, TauPath, TrackerSettings};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub tol_residual: f64,
    pub tol_dedup: f64,
    /// Relative magnitude under which a leading coefficient of the
    /// constraint polynomial counts as cancelled.
    pub trim_threshold: f64,
    pub min_modulus: f64,
    pub max_resamples: usize,
    pub newton_iterations: usize,
    pub parallel: bool,
    #[serde(skip)]
    pub tracker: TrackerSettings,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol_residual: 1e-8,
            tol_dedup: 1e-6,
            trim_threshold: 1e-10,
            min_modulus: 1e-8,
            max_resamples: 5,
            newton_iterations: 20,
            parallel: true,
            tracker: TrackerSettings::default(),
        }
    }
}

/// `omega = M (x^V)^T` for one facet, with `M = a V` in the uniform case.
#[derive(Clone, Debug)]
pub struct FacetSubsystem {
    pub facet_id: usize,
    pub facet: Facet,
    pub v: IntMatrix,
    pub reduction: FacetReduction,
    pub m: CMatrix,
    pub target: Vec<Complex64>,
}

impl FacetSubsystem {
    pub fn uniform(facet_id: usize, facet: &Facet, inst: &CycleInstance) -> Result<Self> {
        let v = facet_matrix(facet, inst.n_nodes())?;
        let a = inst.coupling();
        let m = CMatrix::from_fn(v.rows(), v.cols(), |i, j| a * v[(i, j)] as f64);
        Self::with_coefficients(facet_id, facet, inst, m)
    }

    /// Same monomial support and constants, arbitrary coefficient matrix.
    pub fn with_coefficients(facet_id: usize, facet: &Facet, inst: &CycleInstance, m: CMatrix) -> Result<Self> {
        let n_nodes = inst.n_nodes();
        let v = facet_matrix(facet, n_nodes)?;
        if m.rows() != v.rows() || m.cols() != v.cols() {
            return Err(Error::Dimension("coefficient matrix does not match facet support".into()));
        }
        let reduction = facet_reduction(facet, n_nodes)?;
        Ok(Self { facet_id, facet: facet.clone(), v, reduction, m, target: inst.omega().to_vec() })
    }

    pub fn evaluate(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        let mono = monomial_transform(x, &self.v)?;
        let mv = self.m.mul_vec(&mono);
        Ok(self.target.iter().zip(mv).map(|(w, y)| w - y).collect())
    }

    pub fn residual(&self, x: &[Complex64]) -> Result<f64> {
        Ok(max_norm(&self.evaluate(x)?))
    }
}

/// Roots of a facet subsystem together with reduction diagnostics.
#[derive(Clone, Debug)]
pub struct ReducedRoots {
    pub roots: Vec<Vec<Complex64>>,
    /// Degree of the constraint polynomial before trimming (even `N`).
    pub nominal_degree: Option<usize>,
    /// Leading coefficients cancelled (even `N`).
    pub trimmed: Option<usize>,
    /// `|leading| / max|coeff|` of the untrimmed constraint polynomial.
    pub leading_ratio: Option<f64>,
}

/// Linear-plus-monomial reduction of `omega = M (x^V)^T`.
///
/// `expected_trims` is the number of leading cancellations the caller
/// predicts for the constraint polynomial; any other number is reported as
/// a genericity failure.
pub fn reduce_and_solve(sub: &FacetSubsystem, expected_trims: usize, cfg: &SolverConfig) -> Result<ReducedRoots> {
    let genericity = |what: &str, e: Error| Error::GenericityFailure(format!("facet {}: {what}: {e}", sub.facet_id));
    match sub.facet.parity() {
        Parity::Odd => {
            let z = sub.m.solve(&sub.target).map_err(|e| genericity("singular coefficient matrix", e))?;
            if z.iter().any(|zi| zi.norm() <= cfg.min_modulus) {
                return Err(Error::GenericityFailure(format!("facet {}: monomial value vanishes", sub.facet_id)));
            }
            let x = monomial_transform(&z, &sub.reduction.q)?;
            Ok(ReducedRoots { roots: vec![x], nominal_degree: None, trimmed: None, leading_ratio: None })
        }
        Parity::Even => {
            let h = sub.reduction.h.as_ref().expect("even facets carry h");
            let n = h.len();
            let (p, k) = sub
                .m
                .affine_solution_line(&sub.target)
                .map_err(|e| genericity("rank-deficient coefficient matrix", e))?;
            // t * prod_{h=-1} y_i - prod_{h=+1} y_i with (y, t) = p + s k
            let mut lhs_factors = vec![(p[n], k[n])];
            let mut rhs_factors = Vec::new();
            for i in 0..n {
                if h[i] < 0 {
                    lhs_factors.push((p[i], k[i]));
                } else {
                    rhs_factors.push((p[i], k[i]));
                }
            }
            let lhs = product_of_linear(&lhs_factors);
            let rhs = product_of_linear(&rhs_factors);
            let degree = lhs.len().max(rhs.len()) - 1;
            let mut q = vec![Complex64::new(0.0, 0.0); degree + 1];
            for (i, c) in lhs.into_iter().enumerate() {
                q[i] += c;
            }
            for (i, c) in rhs.into_iter().enumerate() {
                q[i] -= c;
            }
            let scale = q.iter().map(|c| c.norm()).fold(0.0, f64::max);
            let leading_ratio = q[degree].norm() / scale;
            let found = univariate_roots(&q, cfg.trim_threshold)
                .map_err(|e| genericity("constraint polynomial", e))?;
            if found.trimmed != expected_trims {
                return Err(Error::GenericityFailure(format!(
                    "facet {}: constraint polynomial lost {} leading coefficients, expected {}",
                    sub.facet_id, found.trimmed, expected_trims
                )));
            }
            let mut roots = Vec::with_capacity(found.roots.len());
            for s in found.roots {
                let y: Vec<Complex64> = (0..n).map(|i| p[i] + s * k[i]).collect();
                let t = p[n] + s * k[n];
                if y.iter().any(|yi| yi.norm() <= cfg.min_modulus) {
                    return Err(Error::GenericityFailure(format!("facet {}: root leaves the torus", sub.facet_id)));
                }
                let mono: Complex64 = y.iter().zip(h).map(|(yi, &hi)| yi.powi(hi as i32)).product();
                if (t - mono).norm() > 1e-6 * (1.0 + t.norm()) {
                    return Err(Error::GenericityFailure(format!(
                        "facet {}: constraint residual {:e}",
                        sub.facet_id,
                        (t - mono).norm()
                    )));
                }
                roots.push(monomial_transform(&y, &sub.reduction.q)?);
            }
            Ok(ReducedRoots { roots, nominal_degree: Some(degree), trimmed: Some(found.trimmed), leading_ratio: Some(leading_ratio) })
        }
    }
}

/// Leading cancellations of the uniform-coupling constraint polynomial:
/// one when `4 | N`, none otherwise.
pub fn expected_trims(n_nodes: usize) -> usize {
    usize::from(n_nodes % 4 == 0)
}

/// A root of the full system, tagged with the facet it was continued from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TorusSolution {
    pub x: ComplexPoint,
    pub facet_id: usize,
    /// Residual of the facet-subsystem root the path started from.
    pub residual_sub: f64,
    pub residual_full: f64,
}

/// Per-facet solve with the start roots kept for re-tracking.
#[derive(Clone, Debug)]
pub struct FacetSolve {
    pub facet_id: usize,
    pub solutions: Vec<TorusSolution>,
    pub starts: Vec<Vec<Complex64>>,
    pub trimmed: Option<usize>,
    pub leading_ratio: Option<f64>,
}

/// Roots of the facet subsystem itself, Newton-polished at `tau = 0`.
pub fn facet_subsystem_roots(sub: &FacetSubsystem, hom: &CouplingHomotopy, cfg: &SolverConfig) -> Result<(ReducedRoots, Vec<f64>)> {
    let mut reduced = reduce_and_solve(sub, expected_trims(sub.facet.n_nodes()), cfg)?;
    let zero = Complex64::new(0.0, 0.0);
    let mut residuals = Vec::with_capacity(reduced.roots.len());
    for root in reduced.roots.iter_mut() {
        for _ in 0..3 {
            let (h, jac, _) = hom.eval_with_derivatives(root, zero);
            if max_norm(&h) <= 1e-14 * (1.0 + max_norm(root)) {
                break;
            }
            match jac.solve(&h) {
                Ok(step) => root.iter_mut().zip(&step).for_each(|(r, s)| *r -= s),
                Err(e) => return Err(Error::GenericityFailure(format!("facet {}: singular facet root: {e}", sub.facet_id))),
            }
        }
        let r = sub.residual(root)?;
        if r >= cfg.tol_residual {
            return Err(Error::GenericityFailure(format!("facet {}: facet root residual {r:e}", sub.facet_id)));
        }
        residuals.push(r);
    }
    Ok((reduced, residuals))
}

fn finish_path(
    facet_id: usize,
    start: &[Complex64],
    residual_sub: f64,
    hom: &CouplingHomotopy,
    path: &TauPath,
    inst: &CycleInstance,
    tracker: &TrackerSettings,
    cfg: &SolverConfig,
) -> Result<TorusSolution> {
    let tracked = match track(hom, path, start, tracker) {
        Ok(t) => t,
        Err(Error::GenericityFailure(_)) => track(hom, path, start, &tracker.cautious())?,
        Err(e) => return Err(e),
    };
    let refined = newton_refine(&ComplexPoint::new(tracked.endpoint), inst, cfg.newton_iterations);
    if matches!(refined.status, NewtonStatus::Diverged | NewtonStatus::SingularJacobian) {
        return Err(Error::GenericityFailure(format!("facet {facet_id}: endpoint refinement {:?}", refined.status)));
    }
    let x = refined.point;
    let residual_full = residual_algebraic(&x, inst)?;
    if residual_full >= cfg.tol_residual || x.min_modulus() <= cfg.min_modulus {
        return Err(Error::GenericityFailure(format!(
            "facet {facet_id}: endpoint residual {residual_full:e}, min modulus {:e}",
            x.min_modulus()
        )));
    }
    Ok(TorusSolution { x, facet_id, residual_sub, residual_full })
}

/// Solve one facet subsystem and continue its roots to the full system.
pub fn solve_facet(facet_id: usize, facet: &Facet, inst: &CycleInstance, path: &TauPath, cfg: &SolverConfig) -> Result<FacetSolve> {
    let n_nodes = inst.n_nodes();
    let sub = FacetSubsystem::uniform(facet_id, facet, inst)?;
    let normal = facet_normal(facet, n_nodes)?;
    let hom = CouplingHomotopy::new(inst, facet, &normal)?;
    let (reduced, residuals) = facet_subsystem_roots(&sub, &hom, cfg)?;
    let solutions = reduced
        .roots
        .iter()
        .zip(&residuals)
        .map(|(start, &r)| finish_path(facet_id, start, r, &hom, path, inst, &cfg.tracker, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(FacetSolve { facet_id, solutions, starts: reduced.roots, trimmed: reduced.trimmed, leading_ratio: reduced.leading_ratio })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensusReport {
    pub tool_version: String,
    #[serde(rename = "N")]
    pub n_nodes: usize,
    pub seed: u64,
    pub per_facet_counts: Vec<usize>,
    pub total: usize,
    pub predicted: u64,
    pub bound: u64,
    pub gap: i64,
    pub tol_residual: f64,
    pub tol_dedup: f64,
    pub trim_threshold: f64,
    pub resample_count: usize,
    /// Facets whose constraint polynomial lost its leading coefficient.
    pub facets_with_degree_drop: usize,
    pub max_residual_full: f64,
    pub min_relative_separation: f64,
    pub path_bend: f64,
    pub retracked_paths: usize,
}

fn sort_key(s: &TorusSolution) -> Vec<f64> {
    s.x.x.iter().flat_map(|z| [z.re, z.im]).collect()
}

fn compare_solutions(a: &TorusSolution, b: &TorusSolution) -> std::cmp::Ordering {
    a.facet_id.cmp(&b.facet_id).then_with(|| {
        sort_key(a)
            .iter()
            .zip(sort_key(b).iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    })
}

/// Result of one pass over all pairs of points under
/// [`ComplexPoint::relative_distance`].
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseScan {
    /// Indices of points within `tol` of some other point, ascending.
    pub coincident: Vec<usize>,
    /// Smallest pairwise relative distance (infinite for fewer than two points).
    pub min_separation: f64,
}

pub fn pairwise_scan(points: &[ComplexPoint], tol: f64) -> PairwiseScan {
    let dim = points.first().map_or(0, |p| p.x.len());
    // interleaved (re, im) coordinates and squared scales, so the inner loop
    // works on squared moduli only
    let flat: Vec<f64> = points.iter().flat_map(|p| p.x.iter().flat_map(|z| [z.re, z.im])).collect();
    let scale2: Vec<f64> = points
        .iter()
        .map(|p| p.x.iter().map(|z| z.norm_sqr()).fold(1.0, f64::max))
        .collect();
    let tol2 = tol * tol;
    let mut bad = vec![false; points.len()];
    let mut best2 = f64::INFINITY;
    for i in 0..points.len() {
        let xi = &flat[2 * dim * i..2 * dim * (i + 1)];
        for j in i + 1..points.len() {
            let xj = &flat[2 * dim * j..2 * dim * (j + 1)];
            let mut diff2 = 0.0f64;
            for k in 0..dim {
                let dr = xi[2 * k] - xj[2 * k];
                let di = xi[2 * k + 1] - xj[2 * k + 1];
                diff2 = diff2.max(dr * dr + di * di);
            }
            let rel2 = diff2 / scale2[i].max(scale2[j]);
            best2 = best2.min(rel2);
            if rel2 <= tol2 {
                bad[i] = true;
                bad[j] = true;
            }
        }
    }
    PairwiseScan {
        coincident: bad.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i).collect(),
        min_separation: best2.sqrt(),
    }
}

/// Path bend parameter for a given seed.
pub fn path_for_seed(seed: u64) -> TauPath {
    let mut rng = substream(seed, streams::PATH);
    let magnitude: f64 = rng.gen_range(0.3..0.9);
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    TauPath { beta: sign * magnitude }
}

/// All roots of the full system on one instance, one facet at a time.
/// `seed` selects the homotopy path; no resampling happens here.
pub fn solve_all(inst: &CycleInstance, cfg: &SolverConfig, seed: u64) -> Result<(Vec<TorusSolution>, CensusReport)> {
    let n_nodes = inst.n_nodes();
    let facets = enumerate_facets(n_nodes)?;
    let path = path_for_seed(seed);
    let job = |(id, f): (usize, &Facet)| solve_facet(id, f, inst, &path, cfg);
    let mut solves: Vec<FacetSolve> = if cfg.parallel {
        facets.par_iter().enumerate().map(job).collect::<Result<_>>()?
    } else {
        facets.iter().enumerate().map(job).collect::<Result<_>>()?
    };

    // Coincident endpoints mean a path jumped; re-track those with tighter steps.
    let mut retracked = 0;
    let locate: Vec<(usize, usize)> =
        solves.iter().enumerate().flat_map(|(f, s)| (0..s.solutions.len()).map(move |k| (f, k))).collect();
    let points: Vec<ComplexPoint> = solves.iter().flat_map(|s| s.solutions.iter().map(|t| t.x.clone())).collect();
    let mut scan = pairwise_scan(&points, cfg.tol_dedup);
    let suspects = std::mem::take(&mut scan.coincident);
    if !suspects.is_empty() {
        let cautious = cfg.tracker.cautious();
        for idx in suspects {
            let (f, k) = locate[idx];
            let facet = &facets[solves[f].facet_id];
            let normal = facet_normal(facet, n_nodes)?;
            let hom = CouplingHomotopy::new(inst, facet, &normal)?;
            let start = solves[f].starts[k].clone();
            let r = solves[f].solutions[k].residual_sub;
            solves[f].solutions[k] = finish_path(solves[f].facet_id, &start, r, &hom, &path, inst, &cautious, cfg)?;
            retracked += 1;
        }
    }

    let per_facet_counts: Vec<usize> = solves.iter().map(|s| s.solutions.len()).collect();
    let facets_with_degree_drop = solves.iter().filter(|s| s.trimmed == Some(1)).count();
    let mut solutions: Vec<TorusSolution> = solves.into_iter().flat_map(|s| s.solutions).collect();
    solutions.sort_by(compare_solutions);
    if retracked > 0 {
        let points: Vec<ComplexPoint> = solutions.iter().map(|s| s.x.clone()).collect();
        scan = pairwise_scan(&points, cfg.tol_dedup);
    }
    let separation = scan.min_separation;
    if separation <= cfg.tol_dedup {
        return Err(Error::GenericityFailure(format!("coincident roots after re-tracking (separation {separation:e})")));
    }
    let prediction = predicted_counts(n_nodes)?;
    let total = solutions.len();
    let report = CensusReport {
        tool_version: TOOL_VERSION.to_string(),
        n_nodes,
        seed,
        per_facet_counts,
        total,
        predicted: prediction.total,
        bound: prediction.bkk_bound,
        gap: prediction.bkk_bound as i64 - total as i64,
        tol_residual: cfg.tol_residual,
        tol_dedup: cfg.tol_dedup,
        trim_threshold: cfg.trim_threshold,
        resample_count: 0,
        facets_with_degree_drop,
        max_residual_full: solutions.iter().map(|s| s.residual_full).fold(0.0, f64::max),
        min_relative_separation: if separation.is_finite() { separation } else { 0.0 },
        path_bend: path.beta,
        retracked_paths: retracked,
    };
    Ok((solutions, report))
}

/// Where the instance of a census run comes from.
#[derive(Clone, Debug)]
pub enum InstanceSource {
    /// Sample a generic instance from the seed; resampled on degeneracy.
    Sampled,
    /// User-supplied instance; only the homotopy path is resampled.
    Fixed(CycleInstance),
}

#[derive(Clone, Debug)]
pub struct Census {
    pub instance: CycleInstance,
    pub solutions: Vec<TorusSolution>,
    pub report: CensusReport,
}

/// Seeded census with resampling on genericity failures.
pub fn census(n_nodes: usize, seed: u64, source: &InstanceSource, cfg: &SolverConfig) -> Result<Census> {
    if n_nodes < 3 {
        return Err(Error::TooFewNodes(n_nodes));
    }
    let mut last = String::new();
    for attempt in 0..=cfg.max_resamples {
        let attempt_seed = resample_seed(seed, attempt as u64);
        let instance = match source {
            InstanceSource::Sampled => CycleInstance::sample_generic(n_nodes, &mut substream(attempt_seed, streams::INSTANCE))?,
            InstanceSource::Fixed(inst) => {
                if inst.n_nodes() != n_nodes {
                    return Err(Error::Dimension(format!("instance has N = {}, requested {n_nodes}", inst.n_nodes())));
                }
                inst.clone()
            }
        };
        match solve_all(&instance, cfg, attempt_seed) {
            Ok((solutions, mut report)) => {
                report.seed = seed;
                report.resample_count = attempt;
                return Ok(Census { instance, solutions, report });
            }
            Err(Error::GenericityFailure(msg)) => last = msg,
            Err(e) => return Err(e),
        }
    }
    Err(Error::ResamplesExhausted { attempts: cfg.max_resamples, last })
}

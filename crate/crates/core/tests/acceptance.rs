//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.
//!
//! Run with `cargo test -p kuramoto-cycle --test acceptance -- --nocapture`.

use std::collections::BTreeSet;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;

use kuramoto_cycle::analysis::{generic_bkk_facet, initial_witness, multistart_roots, torus_filter};
use kuramoto_cycle::dynamics::{find_stable_equilibria, match_equilibria, OdeConfig};
use kuramoto_cycle::exact::IntMatrix;
use kuramoto_cycle::model::residual_algebraic;
use kuramoto_cycle::polytope::{
    adjacency_polytope_bound, enumerate_facets, facet_count, facet_matrix, facet_normal, facet_reduction,
    unimodular_equivalence, Facet,
};
use kuramoto_cycle::rng::{streams, substream};
use kuramoto_cycle::solver::{census, expected_trims, path_for_seed, solve_all, solve_facet, InstanceSource, SolverConfig};
use kuramoto_cycle::{ComplexPoint, CycleInstance};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let took = start.elapsed();
    ensure(took < limit, || format!("took {took:.2?}, limit {limit:?}"))?;
    Ok(took)
}

fn choose(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
}

fn generic_instance(n_nodes: usize, seed: u64) -> CycleInstance {
    CycleInstance::sample_generic(n_nodes, &mut substream(seed, streams::INSTANCE)).unwrap()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    ensure(facet_count(4).unwrap() == 6, || "facet_count(4) != 6".into())?;
    let set = |vs: [[i64; 3]; 4]| vs.iter().map(|v| v.to_vec()).collect::<BTreeSet<_>>();
    let listed: BTreeSet<_> = [
        set([[1, 0, 0], [1, -1, 0], [0, -1, 1], [0, 0, 1]]),
        set([[1, 0, 0], [-1, 1, 0], [0, 1, -1], [0, 0, 1]]),
        set([[1, 0, 0], [1, -1, 0], [0, 1, -1], [0, 0, -1]]),
        set([[-1, 0, 0], [-1, 1, 0], [0, -1, 1], [0, 0, 1]]),
        set([[-1, 0, 0], [-1, 1, 0], [0, 1, -1], [0, 0, -1]]),
        set([[-1, 0, 0], [1, -1, 0], [0, -1, 1], [0, 0, -1]]),
    ]
    .into_iter()
    .collect();
    let facets = enumerate_facets(4).unwrap();
    let got: BTreeSet<_> = facets.iter().map(Facet::vertex_set).collect();
    ensure(got == listed, || "enumerated vertex sets differ from the listed six".into())?;
    ensure(adjacency_polytope_bound(4).unwrap() == 12, || "bound != 12".into())?;
    let inst = generic_instance(4, 1);
    let (sols, report) = solve_all(&inst, &SolverConfig::default(), 1).map_err(|e| e.to_string())?;
    ensure(sols.len() == 6, || format!("{} solutions", sols.len()))?;
    ensure(report.per_facet_counts == vec![1; 6], || format!("per facet {:?}", report.per_facet_counts))?;
    let mut worst = 0.0f64;
    for s in &sols {
        worst = worst.max(residual_algebraic(&s.x, &inst).unwrap());
    }
    ensure(worst < 1e-8, || format!("residual {worst:e}"))?;
    for i in 0..sols.len() {
        for j in i + 1..sols.len() {
            ensure(sols[i].x.relative_distance(&sols[j].x) > 1e-6, || format!("solutions {i} and {j} coincide"))?;
        }
    }
    let took = within(Duration::from_secs(1), start)?;
    Ok(format!("6 facets as listed, bound 12, 6 distinct roots (max residual {worst:.1e}) in {took:.2?}"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let table = [6u64, 6, 30, 60, 140, 210, 630, 1260, 2772, 4620];
    let cfg = SolverConfig::default();
    let mut resamples = 0;
    for (idx, n_nodes) in (3..=12usize).enumerate() {
        let nn = n_nodes as u64;
        let formula = if nn % 4 == 0 { (nn - 2) * choose(nn - 1, nn / 2 - 1) } else { nn * choose(nn - 1, (nn - 1) / 2) };
        ensure(formula == table[idx], || format!("formula disagrees with table at N = {n_nodes}"))?;
        for seed in 1..=5u64 {
            let c = census(n_nodes, seed, &InstanceSource::Sampled, &cfg).map_err(|e| format!("N = {n_nodes}, seed {seed}: {e}"))?;
            resamples += c.report.resample_count;
            ensure(c.solutions.len() as u64 == table[idx], || {
                format!("N = {n_nodes}, seed {seed}: {} roots, expected {}", c.solutions.len(), table[idx])
            })?;
        }
    }
    let took = within(Duration::from_secs(60), start)?;
    Ok(format!("all 50 runs match the table ({resamples} resamples) in {took:.2?}"))
}

fn criterion_3() -> Outcome {
    let cfg = SolverConfig::default();
    let mut checked = 0;
    for n_nodes in 3..=10usize {
        let per_facet = match (n_nodes % 2, n_nodes % 4) {
            (1, _) => 1,
            (_, 0) => n_nodes / 2 - 1,
            _ => n_nodes / 2,
        };
        let inst = generic_instance(n_nodes, 3);
        let path = path_for_seed(3);
        for (id, f) in enumerate_facets(n_nodes).unwrap().iter().enumerate() {
            let s = solve_facet(id, f, &inst, &path, &cfg).map_err(|e| format!("N = {n_nodes}, facet {id}: {e}"))?;
            ensure(s.solutions.len() == per_facet, || {
                format!("N = {n_nodes}, facet {id}: {} roots, expected {per_facet}", s.solutions.len())
            })?;
            if n_nodes % 2 == 0 {
                let want = usize::from(n_nodes % 4 == 0);
                ensure(s.trimmed == Some(want) && expected_trims(n_nodes) == want, || {
                    format!("N = {n_nodes}, facet {id}: trimmed {:?}", s.trimmed)
                })?;
                let ratio = s.leading_ratio.unwrap();
                ensure((ratio < 1e-10) == (n_nodes % 4 == 0), || format!("N = {n_nodes}, facet {id}: leading ratio {ratio:e}"))?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} facets over N = 3..10 have the predicted root count and degree drop"))
}

fn criterion_4() -> Outcome {
    let cfg = SolverConfig::default();
    let mut parts = Vec::new();
    for (n_nodes, gap) in [(4usize, 6u64), (6, 0), (8, 70)] {
        ensure(gap == if n_nodes % 4 == 0 { choose(n_nodes as u64, n_nodes as u64 / 2) } else { 0 }, || "gap table".into())?;
        let facets = enumerate_facets(n_nodes).unwrap();
        let mut generic = 0u64;
        for f in &facets {
            generic += generic_bkk_facet(f, n_nodes, 4).map_err(|e| e.to_string())?;
        }
        let c = census(n_nodes, 4, &InstanceSource::Sampled, &cfg).map_err(|e| e.to_string())?;
        let diff = generic as i64 - c.solutions.len() as i64;
        ensure(diff == gap as i64, || format!("N = {n_nodes}: generic {generic} - uniform {} = {diff}", c.solutions.len()))?;
        parts.push(format!("N={n_nodes}: {generic}-{}={diff}", c.solutions.len()));
    }
    Ok(parts.join(", "))
}

fn criterion_5() -> Outcome {
    let mut parts = Vec::new();
    for n_nodes in [4usize, 6, 8, 10, 12] {
        let facets = enumerate_facets(n_nodes).unwrap();
        let mut found = 0;
        for (i, f) in facets.iter().enumerate() {
            let w = initial_witness(i, f, n_nodes).map_err(|e| e.to_string())?;
            if let Some(w) = w {
                // independent check: V* (h, prod h_i^{h_i})^T computed here
                let red = facet_reduction(f, n_nodes).unwrap();
                let last: i64 = w.h.iter().map(|&h| if h == -1 { -1 } else { 1 }).product();
                let mut y = w.h.clone();
                y.push(last);
                let image = red.vstar.mul_vec(&y).unwrap();
                ensure(image.iter().all(|&v| v == 0), || format!("N = {n_nodes}, facet {i}: witness does not verify"))?;
                found += 1;
            }
        }
        let want = if n_nodes % 4 == 0 { facets.len() } else { 0 };
        ensure(found == want, || format!("N = {n_nodes}: {found} witnesses, expected {want}"))?;
        parts.push(format!("N={n_nodes}: {found}/{}", facets.len()));
    }
    Ok(parts.join(", "))
}

fn criterion_6() -> Outcome {
    let mut checked = 0;
    for n_nodes in 3..=10usize {
        let n = n_nodes - 1;
        for (i, f) in enumerate_facets(n_nodes).unwrap().iter().enumerate() {
            let v = facet_matrix(f, n_nodes).unwrap();
            let red = facet_reduction(f, n_nodes).unwrap();
            let det = red.q.det().unwrap();
            ensure(det.abs() == 1, || format!("N = {n_nodes}, facet {i}: det Q = {det}"))?;
            let qv = red.q.mul(&v).unwrap();
            ensure(qv == red.vstar, || format!("N = {n_nodes}, facet {i}: Q V != V*"))?;
            for r in 0..n {
                for c in 0..n {
                    ensure(qv[(r, c)] == i64::from(r == c), || format!("N = {n_nodes}, facet {i}: leading block not I"))?;
                }
            }
            if n_nodes % 2 == 0 {
                ensure(qv.cols() == n + 1, || "even facet matrix must have N columns".into())?;
                let h = qv.column(n);
                let plus = h.iter().filter(|&&x| x == 1).count();
                let minus = h.iter().filter(|&&x| x == -1).count();
                ensure(plus == n_nodes / 2 && minus == n_nodes / 2 - 1, || format!("N = {n_nodes}, facet {i}: h = {h:?}"))?;
            } else {
                ensure(qv.cols() == n, || "odd facet matrix must be square".into())?;
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} facets over N = 3..10 reduce exactly"))
}

fn criterion_7() -> Outcome {
    let mut rng = substream(7, streams::ORACLE);
    for n_nodes in [5usize, 6, 8] {
        let facets = enumerate_facets(n_nodes).unwrap();
        for _ in 0..100 {
            let f1 = facets.choose(&mut rng).unwrap();
            let f2 = facets.choose(&mut rng).unwrap();
            let cert = unimodular_equivalence(f1, f2, n_nodes).map_err(|e| e.to_string())?;
            let v1 = facet_matrix(f1, n_nodes).unwrap();
            let v2 = facet_matrix(f2, n_nodes).unwrap();
            let lhs: IntMatrix = cert.u.mul(&v1).unwrap().mul(&cert.p).unwrap();
            ensure(lhs == v2, || format!("N = {n_nodes}: U V1 P != V2"))?;
            ensure(cert.u.det().unwrap().abs() == 1, || "det U != +-1".into())?;
            let p = &cert.p;
            let perm = (0..p.rows()).all(|r| p.row(r).iter().filter(|&&x| x == 1).count() == 1)
                && (0..p.cols()).all(|c| p.column(c).iter().filter(|&&x| x == 1).count() == 1)
                && p.to_rows().iter().flatten().all(|&x| x == 0 || x == 1);
            ensure(perm, || "P is not a permutation".into())?;
        }
    }
    Ok("300 random pairs certified".into())
}

fn criterion_8() -> Outcome {
    let cfg = SolverConfig::default();
    let mut parts = Vec::new();
    for n_nodes in 3..=6usize {
        let c = census(n_nodes, 8, &InstanceSource::Sampled, &cfg).map_err(|e| e.to_string())?;
        let ours: Vec<ComplexPoint> = c.solutions.iter().map(|s| s.x.clone()).collect();
        let theirs = multistart_roots(&c.instance, 5000, 8);
        let missing = ours.iter().filter(|x| theirs.iter().all(|y| x.relative_distance(y) > 1e-6)).count();
        let extra = theirs.iter().filter(|y| ours.iter().all(|x| x.relative_distance(y) > 1e-6)).count();
        ensure(missing == 0 && extra == 0, || {
            format!("N = {n_nodes}: census {} roots, multistart {}, missing {missing}, extra {extra}", ours.len(), theirs.len())
        })?;
        parts.push(format!("N={n_nodes}: {}", ours.len()));
    }
    Ok(format!("multistart (5000 starts) agrees: {}", parts.join(", ")))
}

fn criterion_9() -> Outcome {
    let start = Instant::now();
    let cfg = SolverConfig::default();
    let mut total_eq = 0;
    for n_nodes in [3usize, 5, 6] {
        for seed in 1..=3u64 {
            let mut rng = substream(seed, streams::ODE);
            let omega: Vec<f64> = (0..n_nodes - 1).map(|_| rng.gen_range(-0.1..0.1)).collect();
            let inst = CycleInstance::from_real(1.0, &omega).unwrap();
            let c = census(n_nodes, seed, &InstanceSource::Fixed(inst), &cfg).map_err(|e| e.to_string())?;
            let configs = torus_filter(&c.solutions, 1e-6);
            let ode = OdeConfig::new(1.0, omega).unwrap();
            let eq = find_stable_equilibria(&ode, 200, seed);
            ensure(!eq.is_empty(), || format!("N = {n_nodes}, seed {seed}: no equilibria"))?;
            let report = match_equilibria(&eq, &configs, 1e-5);
            ensure(report.all_matched(), || format!("N = {n_nodes}, seed {seed}: {} unmatched", report.unmatched.len()))?;
            total_eq += eq.len();
        }
    }
    let took = within(Duration::from_secs(120), start)?;
    Ok(format!("{total_eq} equilibria over 9 runs all matched in {took:.2?}"))
}

fn criterion_10() -> Outcome {
    let exe = env!("CARGO_BIN_EXE_kuramoto-cycle");
    let run = |args: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(exe).args(args).output().map_err(|e| e.to_string())?;
        ensure(out.status.success(), || format!("{args:?} exited with {}", out.status))?;
        Ok(out.stdout)
    };
    for n in ["6", "8"] {
        let first = run(&["solve", n, "--seed", "11"])?;
        let second = run(&["solve", n, "--seed", "11"])?;
        let sequential = run(&["solve", n, "--seed", "11", "--parallel", "false"])?;
        ensure(!first.is_empty(), || "empty output".into())?;
        ensure(first == second, || format!("N = {n}: repeated runs differ"))?;
        ensure(first == sequential, || format!("N = {n}: parallel and sequential runs differ"))?;
    }
    Ok("solve 6 and solve 8 byte-identical across runs and modes".into())
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("N=4 reproduction", criterion_1),
        ("count table N=3..12", criterion_2),
        ("per-facet dichotomy", criterion_3),
        ("gap exhibition", criterion_4),
        ("witness suite", criterion_5),
        ("exact matrix identities", criterion_6),
        ("unimodular equivalence", criterion_7),
        ("multistart oracle", criterion_8),
        ("dynamics cross-validation", criterion_9),
        ("determinism", criterion_10),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn facet_normals_are_integral_for_small_cycles() {
    for n_nodes in 3..=8 {
        for f in enumerate_facets(n_nodes).unwrap() {
            facet_normal(&f, n_nodes).unwrap();
        }
    }
}

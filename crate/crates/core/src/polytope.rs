//! Facets of the adjacency polytope of the cycle `C_N` and their exact
//! integer matrices.
//!
//! Edges are numbered `1..=N`, edge `j` joining nodes `j - 1` and `j mod N`.
//! The vertex contributed by edge `j` with sign `lambda_j` is
//! `lambda_j (e_{j-1} - e_j)`, where `e_0 = e_N = 0`. With this orientation
//! the facet matrix of an even facet factors as
//! `bidiag(-1, 1) * diag(lambda)`.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::{solve_rational, IntMatrix, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Odd,
    Even,
}

impl Parity {
    pub fn of(n_nodes: usize) -> Self {
        if n_nodes % 2 == 0 {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

/// One facet, identified by its sign vector (and, for odd `N`, the edge
/// whose vertices it omits).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "FacetRecord", into = "FacetRecord")]
pub struct Facet {
    removed_edge: Option<usize>,
    lambda: Vec<i64>,
}

#[derive(Serialize, Deserialize)]
struct FacetRecord {
    parity: Parity,
    removed_edge: Option<usize>,
    lambda: Vec<i64>,
}

impl From<Facet> for FacetRecord {
    fn from(f: Facet) -> Self {
        FacetRecord { parity: f.parity(), removed_edge: f.removed_edge, lambda: f.lambda }
    }
}

impl TryFrom<FacetRecord> for Facet {
    type Error = Error;
    fn try_from(r: FacetRecord) -> Result<Self> {
        let facet = match r.parity {
            Parity::Even => {
                if r.removed_edge.is_some() {
                    return Err(Error::InvalidFacet("even facets have no removed edge".into()));
                }
                Facet::even(r.lambda)?
            }
            Parity::Odd => {
                let q = r
                    .removed_edge
                    .ok_or_else(|| Error::InvalidFacet("odd facets need a removed edge".into()))?;
                Facet::odd(q, r.lambda)?
            }
        };
        Ok(facet)
    }
}

fn check_signs(lambda: &[i64]) -> Result<()> {
    if lambda.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::InvalidFacet(format!("sign vector must be +-1: {lambda:?}")));
    }
    if lambda.iter().sum::<i64>() != 0 {
        return Err(Error::InvalidFacet(format!("signs must sum to zero: {lambda:?}")));
    }
    Ok(())
}

impl Facet {
    /// Facet of `C_N` with `N = lambda.len()` even.
    pub fn even(lambda: Vec<i64>) -> Result<Self> {
        check_signs(&lambda)?;
        if lambda.len() < 4 {
            return Err(Error::InvalidFacet(format!("even cycle needs N >= 4, got {}", lambda.len())));
        }
        Ok(Self { removed_edge: None, lambda })
    }

    /// Facet of `C_N` with `N = lambda.len() + 1` odd, omitting edge
    /// `removed_edge` (`1..=N`). `lambda` lists the signs of the remaining
    /// edges in increasing edge order.
    pub fn odd(removed_edge: usize, lambda: Vec<i64>) -> Result<Self> {
        check_signs(&lambda)?;
        let n_nodes = lambda.len() + 1;
        if n_nodes < 3 || n_nodes % 2 == 0 {
            return Err(Error::InvalidFacet(format!("odd facet sign vector length {}", lambda.len())));
        }
        if !(1..=n_nodes).contains(&removed_edge) {
            return Err(Error::InvalidFacet(format!("removed edge {removed_edge} not in 1..={n_nodes}")));
        }
        Ok(Self { removed_edge: Some(removed_edge), lambda })
    }

    pub fn parity(&self) -> Parity {
        if self.removed_edge.is_some() {
            Parity::Odd
        } else {
            Parity::Even
        }
    }

    pub fn n_nodes(&self) -> usize {
        match self.removed_edge {
            Some(_) => self.lambda.len() + 1,
            None => self.lambda.len(),
        }
    }

    pub fn removed_edge(&self) -> Option<usize> {
        self.removed_edge
    }

    pub fn lambda(&self) -> &[i64] {
        &self.lambda
    }

    /// `(edge, sign)` for every vertex of the facet, in column order.
    pub fn signed_edges(&self) -> Vec<(usize, i64)> {
        let edges = (1..=self.n_nodes()).filter(|&j| Some(j) != self.removed_edge);
        edges.zip(self.lambda.iter().copied()).collect()
    }

    pub fn check_nodes(&self, n_nodes: usize) -> Result<()> {
        if self.n_nodes() != n_nodes {
            return Err(Error::InvalidFacet(format!(
                "facet belongs to C_{}, not C_{}",
                self.n_nodes(),
                n_nodes
            )));
        }
        Ok(())
    }

    /// Vertex set as a sorted set of integer vectors.
    pub fn vertex_set(&self) -> BTreeSet<Vec<i64>> {
        let n = self.n_nodes() - 1;
        self.signed_edges().into_iter().map(|(j, s)| edge_vertex(n, j, s)).collect()
    }
}

/// `sign * (e_{j-1} - e_j)` in `Z^n`, with `e_0 = e_{n+1} = 0`.
pub fn edge_vertex(n: usize, edge: usize, sign: i64) -> Vec<i64> {
    let mut v = vec![0; n];
    if edge >= 2 {
        v[edge - 2] += sign;
    }
    if edge <= n {
        v[edge - 1] -= sign;
    }
    v
}

/// All `2N` vertices `+-(e_i - e_j)` of the adjacency polytope.
pub fn polytope_vertices(n_nodes: usize) -> Vec<Vec<i64>> {
    let n = n_nodes - 1;
    (1..=n_nodes).flat_map(|j| [edge_vertex(n, j, 1), edge_vertex(n, j, -1)]).collect()
}

fn check_nodes(n_nodes: usize) -> Result<()> {
    if n_nodes < 3 {
        return Err(Error::TooFewNodes(n_nodes));
    }
    Ok(())
}

/// `C(n, k)`, or `None` if it does not fit in a `u64`.
pub fn binomial(n: u64, k: u64) -> Option<u64> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc = 1u128;
    for i in 0..k {
        // acc = C(n, i) <= u64::MAX here, so the product fits in u128
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return None;
        }
    }
    u64::try_from(acc).ok()
}

fn checked_binomial(n: u64, k: u64) -> Result<u64> {
    binomial(n, k).ok_or(Error::Overflow)
}

pub fn facet_count(n_nodes: usize) -> Result<u64> {
    check_nodes(n_nodes)?;
    let nn = n_nodes as u64;
    Ok(match Parity::of(n_nodes) {
        Parity::Odd => nn.checked_mul(checked_binomial(nn - 1, (nn - 1) / 2)?).ok_or(Error::Overflow)?,
        Parity::Even => checked_binomial(nn, nn / 2)?,
    })
}

/// Normalized volume of the adjacency polytope, `N * C(N-1, floor((N-1)/2))`.
pub fn adjacency_polytope_bound(n_nodes: usize) -> Result<u64> {
    check_nodes(n_nodes)?;
    let nn = n_nodes as u64;
    nn.checked_mul(checked_binomial(nn - 1, (nn - 1) / 2)?).ok_or(Error::Overflow)
}

/// Balanced sign vectors of length `len` in lexicographic order (`-1 < +1`).
fn balanced_signs(len: usize) -> impl Iterator<Item = Vec<i64>> {
    (0u64..1 << len).filter(move |m| m.count_ones() as usize * 2 == len).map(move |m| {
        (0..len).map(|i| if m >> (len - 1 - i) & 1 == 1 { 1 } else { -1 }).collect()
    })
}

/// All facets in canonical order: odd `N` by removed edge then `lambda`,
/// even `N` by `lambda`. The position in this list is the facet id.
pub fn enumerate_facets(n_nodes: usize) -> Result<Vec<Facet>> {
    check_nodes(n_nodes)?;
    if n_nodes > 24 {
        return Err(Error::InvalidArgument(format!("facet enumeration capped at N = 24, got {n_nodes}")));
    }
    let facets: Vec<Facet> = match Parity::of(n_nodes) {
        Parity::Even => balanced_signs(n_nodes).map(|l| Facet { removed_edge: None, lambda: l }).collect(),
        Parity::Odd => (1..=n_nodes)
            .flat_map(|q| {
                balanced_signs(n_nodes - 1).map(move |l| Facet { removed_edge: Some(q), lambda: l })
            })
            .collect(),
    };
    Ok(facets)
}

/// Facet matrix `V`: one column per facet vertex, in edge order.
pub fn facet_matrix(f: &Facet, n_nodes: usize) -> Result<IntMatrix> {
    f.check_nodes(n_nodes)?;
    let n = n_nodes - 1;
    let cols: Vec<Vec<i64>> = f.signed_edges().into_iter().map(|(j, s)| edge_vertex(n, j, s)).collect();
    Ok(IntMatrix::from_columns(&cols))
}

/// Unimodular `Q` with `Q V = V*` in reduced row echelon form.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FacetReduction {
    pub q: IntMatrix,
    pub vstar: IntMatrix,
    /// Last column of `V*` (even `N` only).
    pub h: Option<Vec<i64>>,
}

pub fn facet_reduction(f: &Facet, n_nodes: usize) -> Result<FacetReduction> {
    let v = facet_matrix(f, n_nodes)?;
    let n = n_nodes - 1;
    match f.parity() {
        Parity::Odd => {
            let q = v.unimodular_inverse()?;
            let vstar = q.mul(&v)?;
            Ok(FacetReduction { q, vstar, h: None })
        }
        Parity::Even => {
            let neg_lambda: Vec<i64> = f.lambda[..n].iter().map(|l| -l).collect();
            let upper = IntMatrix::from_rows(
                &(0..n).map(|i| (0..n).map(|j| i64::from(j >= i)).collect()).collect::<Vec<_>>(),
            );
            let q = IntMatrix::diagonal(&neg_lambda).mul(&upper)?;
            let vstar = q.mul(&v)?;
            let h = vstar.column(n);
            Ok(FacetReduction { q, vstar, h: Some(h) })
        }
    }
}

/// Rational `alpha` with `<alpha, v> = -1` on every vertex of the facet.
/// Returned together with the strict-inequality check over the remaining
/// vertices of the polytope.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportingHyperplane {
    pub alpha: Vec<Rational>,
    pub strict: bool,
}

pub fn supporting_hyperplane(f: &Facet, n_nodes: usize) -> Result<SupportingHyperplane> {
    let v = facet_matrix(f, n_nodes)?;
    let rhs = vec![Rational::from_integer(-1); v.cols()];
    let alpha = solve_rational(&v.transpose(), &rhs)?;
    let on_facet = f.vertex_set();
    let strict = polytope_vertices(n_nodes).iter().filter(|w| !on_facet.contains(*w)).all(|w| {
        let value: Rational = w.iter().zip(&alpha).map(|(&wi, ai)| ai * i128::from(wi)).sum();
        value > Rational::from_integer(-1)
    });
    Ok(SupportingHyperplane { alpha, strict })
}

/// Integer inner normal of the facet: `<alpha, v> = -1` on the facet and
/// `> -1` on every other vertex.
pub fn facet_normal(f: &Facet, n_nodes: usize) -> Result<Vec<i64>> {
    let sh = supporting_hyperplane(f, n_nodes)?;
    if !sh.strict {
        return Err(Error::InvalidFacet("vertex set is not a facet".into()));
    }
    sh.alpha
        .iter()
        .map(|r| {
            if r.is_integer() {
                i64::try_from(r.to_integer()).map_err(|_| Error::Overflow)
            } else {
                Err(Error::NonInteger)
            }
        })
        .collect()
}

/// `(U, P)` with `U V_1 P = V_2`, `U` unimodular and `P` a permutation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EquivalenceCertificate {
    pub u: IntMatrix,
    pub p: IntMatrix,
}

impl EquivalenceCertificate {
    /// Exact integer verification of the certificate.
    pub fn verify(&self, v1: &IntMatrix, v2: &IntMatrix) -> Result<bool> {
        let is_perm = self.p.is_square()
            && (0..self.p.rows()).all(|i| {
                let row = self.p.row(i);
                row.iter().all(|&x| x == 0 || x == 1) && row.iter().sum::<i64>() == 1
            })
            && (0..self.p.cols()).all(|j| self.p.column(j).iter().sum::<i64>() == 1);
        Ok(is_perm && self.u.det()?.abs() == 1 && &self.u.mul(v1)?.mul(&self.p)? == v2)
    }
}

pub fn unimodular_equivalence(f1: &Facet, f2: &Facet, n_nodes: usize) -> Result<EquivalenceCertificate> {
    let v1 = facet_matrix(f1, n_nodes)?;
    let v2 = facet_matrix(f2, n_nodes)?;
    match Parity::of(n_nodes) {
        Parity::Odd => {
            let u = v2.mul(&v1.unimodular_inverse()?)?;
            Ok(EquivalenceCertificate { u, p: IntMatrix::identity(n_nodes - 1) })
        }
        Parity::Even => {
            let r1 = facet_reduction(f1, n_nodes)?;
            let r2 = facet_reduction(f2, n_nodes)?;
            let (h1, h2) = (r1.h.unwrap(), r2.h.unwrap());
            let perm = IntMatrix::matching_permutation(&h1, &h2)
                .ok_or_else(|| Error::InvalidFacet("last columns are not rearrangements".into()))?;
            let l = IntMatrix::permutation(&perm);
            // P = diag(L^T, 1) so that L [I | h1] P = [I | L h1].
            let mut full = perm.iter().map(|_| 0).collect::<Vec<usize>>();
            for (j, &i) in perm.iter().enumerate() {
                full[i] = j;
            }
            full.push(n_nodes - 1);
            let p = IntMatrix::permutation(&full);
            let u = r2.q.unimodular_inverse()?.mul(&l)?.mul(&r1.q)?;
            Ok(EquivalenceCertificate { u, p })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(vs: &[[i64; 3]]) -> BTreeSet<Vec<i64>> {
        vs.iter().map(|v| v.to_vec()).collect()
    }

    #[test]
    fn counts_small_cycles() {
        assert_eq!(facet_count(4).unwrap(), 6);
        assert_eq!(facet_count(5).unwrap(), 30);
        assert_eq!(facet_count(6).unwrap(), 20);
        assert_eq!(facet_count(2), Err(Error::TooFewNodes(2)));
        assert_eq!(adjacency_polytope_bound(4).unwrap(), 12);
        assert_eq!(adjacency_polytope_bound(3).unwrap(), 6);
        assert_eq!(adjacency_polytope_bound(6).unwrap(), 60);
    }

    #[test]
    fn four_cycle_facets_match_listed_sets() {
        let listed = [
            set(&[[1, 0, 0], [1, -1, 0], [0, -1, 1], [0, 0, 1]]),
            set(&[[1, 0, 0], [-1, 1, 0], [0, 1, -1], [0, 0, 1]]),
            set(&[[1, 0, 0], [1, -1, 0], [0, 1, -1], [0, 0, -1]]),
            set(&[[-1, 0, 0], [-1, 1, 0], [0, -1, 1], [0, 0, 1]]),
            set(&[[-1, 0, 0], [-1, 1, 0], [0, 1, -1], [0, 0, -1]]),
            set(&[[-1, 0, 0], [1, -1, 0], [0, -1, 1], [0, 0, -1]]),
        ];
        let got: BTreeSet<_> = enumerate_facets(4).unwrap().iter().map(Facet::vertex_set).collect();
        assert_eq!(got, listed.into_iter().collect());
    }

    #[test]
    fn shaded_four_cycle_facet_matrix() {
        // (-1, +1, -1, +1) under the e_{j-1} - e_j orientation.
        let f = Facet::even(vec![-1, 1, -1, 1]).unwrap();
        let v = facet_matrix(&f, 4).unwrap();
        assert_eq!(v.columns(), vec![vec![1, 0, 0], vec![1, -1, 0], vec![0, -1, 1], vec![0, 0, 1]]);
    }

    #[test]
    fn three_cycle_facet_matrix() {
        let f = Facet::odd(3, vec![1, -1]).unwrap();
        let v = facet_matrix(&f, 3).unwrap();
        // columns: -e_1 and -(e_1 - e_2)
        assert_eq!(v.to_rows(), vec![vec![-1, -1], vec![0, 1]]);
        assert_eq!(v.det().unwrap().abs(), 1);
    }

    #[test]
    fn lexicographic_order() {
        let facets = enumerate_facets(4).unwrap();
        assert_eq!(facets[0].lambda(), &[-1, -1, 1, 1]);
        assert_eq!(facets[5].lambda(), &[1, 1, -1, -1]);
        let odd = enumerate_facets(5).unwrap();
        assert_eq!(odd[0].removed_edge(), Some(1));
        assert_eq!(odd[29].removed_edge(), Some(5));
        assert!(odd.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn reduction_of_four_cycle_facet() {
        let f = Facet::even(vec![1, -1, 1, -1]).unwrap();
        let red = facet_reduction(&f, 4).unwrap();
        // h_i = -lambda_i lambda_4
        assert_eq!(red.h, Some(vec![1, -1, 1]));
        assert_eq!(red.q.det().unwrap().abs(), 1);
    }

    #[test]
    fn invalid_facets_rejected() {
        assert!(Facet::even(vec![1, 1, -1, 1]).is_err());
        assert!(Facet::even(vec![1, 2, -1, -2]).is_err());
        assert!(Facet::odd(6, vec![1, -1, 1, -1]).is_err());
        assert!(Facet::odd(1, vec![1, -1, 1]).is_err());
        let f = Facet::even(vec![1, -1, 1, -1]).unwrap();
        assert!(facet_matrix(&f, 6).is_err());
    }

    #[test]
    fn json_shape() {
        let f = Facet::odd(2, vec![1, -1, -1, 1]).unwrap();
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(s, r#"{"parity":"odd","removed_edge":2,"lambda":[1,-1,-1,1]}"#);
        let g = Facet::even(vec![1, -1]);
        assert!(g.is_err());
        let e: Facet = serde_json::from_str(r#"{"parity":"even","removed_edge":null,"lambda":[1,-1,1,-1]}"#).unwrap();
        assert_eq!(e, Facet::even(vec![1, -1, 1, -1]).unwrap());
        assert!(serde_json::from_str::<Facet>(r#"{"parity":"even","removed_edge":null,"lambda":[1,1,1,-1]}"#).is_err());
    }

    #[test]
    fn identity_certificate() {
        let f = Facet::even(vec![1, -1, -1, 1, 1, -1]).unwrap();
        let cert = unimodular_equivalence(&f, &f, 6).unwrap();
        let v = facet_matrix(&f, 6).unwrap();
        assert!(cert.verify(&v, &v).unwrap());
        assert_eq!(cert.u, IntMatrix::identity(5));
        assert_eq!(cert.p, IntMatrix::identity(6));
    }

    #[test]
    fn four_cycle_first_last_certificate() {
        let facets = enumerate_facets(4).unwrap();
        let (f1, f2) = (&facets[0], &facets[5]);
        let cert = unimodular_equivalence(f1, f2, 4).unwrap();
        let v1 = facet_matrix(f1, 4).unwrap();
        let v2 = facet_matrix(f2, 4).unwrap();
        assert!(cert.verify(&v1, &v2).unwrap());
    }

    #[test]
    fn binomials_and_overflow() {
        assert_eq!(binomial(10, 3), Some(120));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(67, 33), Some(14_226_520_737_620_288_370));
        assert_eq!(binomial(68, 34), None);
        assert_eq!(facet_count(70), Err(Error::Overflow));
        assert!(adjacency_polytope_bound(60).is_ok());
    }

    #[test]
    fn facet_count_matches_enumeration() {
        for n_nodes in 3..=12 {
            assert_eq!(facet_count(n_nodes).unwrap(), enumerate_facets(n_nodes).unwrap().len() as u64, "N = {n_nodes}");
        }
    }

    #[test]
    fn supporting_hyperplanes_are_strict() {
        for n_nodes in 3..=10 {
            for f in enumerate_facets(n_nodes).unwrap() {
                let sh = supporting_hyperplane(&f, n_nodes).unwrap();
                assert!(sh.strict, "N = {n_nodes}, {f:?}");
                assert!(sh.alpha.iter().all(|a| a.is_integer()));
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn reduction_is_unimodular(n_nodes in 3usize..=10, pick in 0usize..10_000) {
            let facets = enumerate_facets(n_nodes).unwrap();
            let f = &facets[pick % facets.len()];
            let v = facet_matrix(f, n_nodes).unwrap();
            let red = facet_reduction(f, n_nodes).unwrap();
            proptest::prop_assert_eq!(red.q.det().unwrap().abs(), 1);
            proptest::prop_assert_eq!(&red.q.mul(&v).unwrap(), &red.vstar);
            let n = n_nodes - 1;
            for i in 0..n {
                for j in 0..n {
                    proptest::prop_assert_eq!(red.vstar[(i, j)], i64::from(i == j));
                }
            }
        }

        #[test]
        fn certificates_verify(n_nodes in 3usize..=9, p1 in 0usize..10_000, p2 in 0usize..10_000) {
            let facets = enumerate_facets(n_nodes).unwrap();
            let (f1, f2) = (&facets[p1 % facets.len()], &facets[p2 % facets.len()]);
            let cert = unimodular_equivalence(f1, f2, n_nodes).unwrap();
            let ok = cert.verify(&facet_matrix(f1, n_nodes).unwrap(), &facet_matrix(f2, n_nodes).unwrap()).unwrap();
            proptest::prop_assert!(ok);
        }
    }
}

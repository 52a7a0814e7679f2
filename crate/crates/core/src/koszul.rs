//! Koszul complexes of commuting matrix tuples, Taylor regularity, point
//! tests against the joint spectrum, and a joint-eigenvalue oracle.

use serde::Serialize;

use crate::domain::Point;
use crate::error::{Error, Result};
use crate::exec::{map_slice, ExecMode};
use crate::linalg::{fro, hermitian_eigenvalues, kron, op_norm, real, schur, singular_values, CMatrix, C64};
use crate::poly::Polynomial;
use crate::sampling::{gaussian_c64, seeded_rng};

pub const DEFAULT_RANK_TOL: f64 = 1e-8;
pub const DEFAULT_COMMUTE_TOL: f64 = 1e-10;
pub const CONSENSUS_TOL: f64 = 1e-6;

/// Subsets of `{0, .., n-1}` ordered by size, then lexicographically.
pub fn exterior_basis(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::with_capacity(1 << n);
    for k in 0..=n {
        let mut cur = Vec::with_capacity(k);
        push_subsets(n, k, 0, &mut cur, &mut out);
    }
    out
}

fn push_subsets(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in start..n {
        cur.push(i);
        push_subsets(n, k, i + 1, cur, out);
        cur.pop();
    }
}

fn binom(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    (0..k).fold(1, |acc, i| acc * (n - i) / (i + 1))
}

/// Creation operators `Theta_i(xi) = eta_i ^ xi` on the `2^n`-dimensional
/// exterior algebra.
pub fn creation_matrices(n: usize) -> Vec<CMatrix> {
    let basis = exterior_basis(n);
    let pos = |s: &[usize]| basis.iter().position(|b| b == s).expect("subset is in the basis");
    (0..n)
        .map(|i| {
            let mut m = CMatrix::zeros(basis.len(), basis.len());
            for (col, set) in basis.iter().enumerate() {
                if set.contains(&i) {
                    continue;
                }
                let smaller = set.iter().filter(|&&j| j < i).count();
                let mut target = set.clone();
                target.push(i);
                target.sort_unstable();
                m[(pos(&target), col)] = real(if smaller % 2 == 0 { 1.0 } else { -1.0 });
            }
            m
        })
        .collect()
}

/// Largest pairwise commutator norm `||[A_i, A_j]||_2`.
pub fn commutator_defect(tuple: &[CMatrix]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..tuple.len() {
        for j in i + 1..tuple.len() {
            let c = &tuple[i] * &tuple[j] - &tuple[j] * &tuple[i];
            worst = worst.max(op_norm(&c));
        }
    }
    worst
}

fn check_commuting(tuple: &[CMatrix], rel_tol: f64) -> Result<()> {
    let scale = tuple.iter().map(|t| op_norm(t).powi(2)).fold(0.0, f64::max);
    let defect = commutator_defect(tuple);
    if defect > rel_tol * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotCommuting { defect });
    }
    Ok(())
}

fn check_square_tuple(tuple: &[CMatrix]) -> Result<usize> {
    let h = tuple.first().map(|t| t.nrows()).ok_or_else(|| Error::Precondition("empty operator tuple".into()))?;
    for t in tuple {
        if t.nrows() != h || t.ncols() != h {
            return Err(Error::DimensionMismatch { expected: h, got: t.ncols().max(t.nrows()) });
        }
    }
    Ok(h)
}

#[derive(Clone, Debug)]
pub struct KoszulComplex {
    n: usize,
    h: usize,
    boundaries: Vec<CMatrix>,
}

impl KoszulComplex {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space_dim(&self) -> usize {
        self.h
    }

    /// `D_0, .., D_{n-1}`, `D_k : Lambda^k (x) H -> Lambda^{k+1} (x) H`.
    pub fn boundaries(&self) -> &[CMatrix] {
        &self.boundaries
    }

    /// `max_k ||D_{k+1} D_k||_F`.
    pub fn square_residual(&self) -> f64 {
        self.boundaries.windows(2).map(|w| fro(&(&w[1] * &w[0]))).fold(0.0, f64::max)
    }
}

/// Builds the Koszul complex; the tuple must commute to
/// `DEFAULT_COMMUTE_TOL * max ||T_i||^2`.
pub fn koszul_boundaries(tuple: &[CMatrix]) -> Result<KoszulComplex> {
    koszul_boundaries_with_tol(tuple, DEFAULT_COMMUTE_TOL)
}

pub fn koszul_boundaries_with_tol(tuple: &[CMatrix], commute_tol: f64) -> Result<KoszulComplex> {
    let h = check_square_tuple(tuple)?;
    check_commuting(tuple, commute_tol)?;
    let n = tuple.len();
    let theta = creation_matrices(n);
    let mut offsets = vec![0];
    for k in 0..=n {
        offsets.push(offsets[k] + binom(n, k));
    }
    let boundaries = (0..n)
        .map(|k| {
            let (r0, rl) = (offsets[k + 1], binom(n, k + 1));
            let (c0, cl) = (offsets[k], binom(n, k));
            let mut d = CMatrix::zeros(h * rl, h * cl);
            for (th, t) in theta.iter().zip(tuple) {
                let block = th.view((r0, c0), (rl, cl)).into_owned();
                d += kron(&block, t);
            }
            d
        })
        .collect();
    Ok(KoszulComplex { n, h, boundaries })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    pub ranks: Vec<usize>,
    /// `min_k sqrt(lambda_min(D_{k-1} D_{k-1}^* + D_k^* D_k))`; zero exactly
    /// when some stage fails to be exact.
    pub min_defect: f64,
}

pub fn regularity_report(cx: &KoszulComplex, rank_tol: f64) -> RegularityReport {
    regularity_report_scaled(cx, rank_tol, 0.0)
}

/// As [`regularity_report`], with `sigma_max` floored at `scale`, so that a
/// boundary map made of rounding noise counts as zero.
pub fn regularity_report_scaled(cx: &KoszulComplex, rank_tol: f64, scale: f64) -> RegularityReport {
    let d = &cx.boundaries;
    let n = cx.n;
    let ranks: Vec<usize> = d
        .iter()
        .map(|m| {
            let s = singular_values(m);
            let top = s.first().copied().unwrap_or(0.0).max(scale);
            s.iter().filter(|&&v| v > rank_tol * top && v > 0.0).count()
        })
        .collect();
    let nullity = |k: usize| d[k].ncols() - ranks[k];
    let mut regular = nullity(0) == 0 && ranks[n - 1] == d[n - 1].nrows();
    for k in 1..n {
        regular &= nullity(k) == ranks[k - 1];
    }
    let mut min_defect = f64::INFINITY;
    for k in 0..=n {
        let size = cx.h * binom(n, k);
        let mut lap = CMatrix::zeros(size, size);
        if k > 0 {
            lap += &d[k - 1] * d[k - 1].adjoint();
        }
        if k < n {
            lap += d[k].adjoint() * &d[k];
        }
        let ev = hermitian_eigenvalues(&lap)[0].max(0.0);
        min_defect = min_defect.min(ev.sqrt());
    }
    RegularityReport { regular, ranks, min_defect }
}

/// Exactness of the complex, with singular values below
/// `rank_tol * sigma_max` (per boundary map) counted as zero.
pub fn is_regular(cx: &KoszulComplex, rank_tol: f64) -> bool {
    regularity_report(cx, rank_tol).regular
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Regular,
    Singular,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Regular => "regular",
            Verdict::Singular => "singular",
        })
    }
}

fn shifted(tuple: &[CMatrix], w: &[C64]) -> Result<Vec<CMatrix>> {
    if w.len() != tuple.len() {
        return Err(Error::DimensionMismatch { expected: tuple.len(), got: w.len() });
    }
    let h = check_square_tuple(tuple)?;
    Ok(tuple.iter().zip(w).map(|(t, &wi)| t - CMatrix::identity(h, h) * wi).collect())
}

/// Koszul report of `T - w`. Commutativity is checked on `T` (it is
/// shift invariant) and ranks are measured against
/// `max(||T_i||, |w_i|)`.
pub fn point_report(tuple: &[CMatrix], w: &[C64], rank_tol: f64) -> Result<RegularityReport> {
    check_square_tuple(tuple)?;
    check_commuting(tuple, DEFAULT_COMMUTE_TOL)?;
    let scale = tuple.iter().map(op_norm).chain(w.iter().map(|c| c.norm())).fold(0.0, f64::max);
    let cx = koszul_boundaries_with_tol(&shifted(tuple, w)?, f64::INFINITY)?;
    Ok(regularity_report_scaled(&cx, rank_tol, scale))
}

/// Regularity of the Koszul complex of `T - w`.
pub fn taylor_point_test(tuple: &[CMatrix], w: &[C64], rank_tol: f64) -> Result<Verdict> {
    Ok(if point_report(tuple, w, rank_tol)?.regular { Verdict::Regular } else { Verdict::Singular })
}

#[derive(Clone, Debug, Serialize)]
pub struct GridRow {
    pub point: Point,
    pub verdict: Verdict,
    pub min_defect: f64,
}

pub fn grid_scan(tuple: &[CMatrix], points: &[Point], rank_tol: f64, mode: ExecMode) -> Result<Vec<GridRow>> {
    check_square_tuple(tuple)?;
    check_commuting(tuple, DEFAULT_COMMUTE_TOL)?;
    map_slice(mode, points, |p| {
        let rep = point_report(tuple, p.coords(), rank_tol)?;
        Ok(GridRow {
            point: p.clone(),
            verdict: if rep.regular { Verdict::Regular } else { Verdict::Singular },
            min_defect: rep.min_defect,
        })
    })
    .into_iter()
    .collect()
}

fn strictly_lower_is_zero(m: &CMatrix) -> bool {
    (0..m.ncols()).all(|j| (j + 1..m.nrows()).all(|i| m[(i, j)] == C64::default()))
}

fn diagonals(tuple: &[CMatrix], q: Option<&CMatrix>) -> Vec<Point> {
    let h = tuple[0].nrows();
    let tri: Vec<CMatrix> = match q {
        Some(q) => tuple.iter().map(|t| q.adjoint() * t * q).collect(),
        None => tuple.to_vec(),
    };
    (0..h).map(|k| Point::from_vec(tri.iter().map(|t| t[(k, k)]).collect())).collect()
}

/// Joint eigenvalues with multiplicity.
///
/// Triangular tuples are read off their diagonals. Otherwise the tuple is
/// triangularized by the Schur basis of a random linear combination, for
/// two independent combinations, and the results must agree after greedy
/// matching.
pub fn joint_eigenvalues(tuple: &[CMatrix], seed: u64) -> Result<Vec<Point>> {
    check_square_tuple(tuple)?;
    check_commuting(tuple, DEFAULT_COMMUTE_TOL)?;
    if tuple.iter().all(strictly_lower_is_zero) {
        return Ok(diagonals(tuple, None));
    }
    if tuple.iter().all(|t| strictly_lower_is_zero(&t.transpose())) {
        return Ok(diagonals(tuple, None));
    }
    let first = schur_diagonals(tuple, seed);
    let second = schur_diagonals(tuple, seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let gap = matching_gap(&first, &second);
    if gap > CONSENSUS_TOL {
        return Err(Error::ConsensusFailure { gap });
    }
    Ok(first)
}

fn schur_diagonals(tuple: &[CMatrix], seed: u64) -> Vec<Point> {
    let mut rng = seeded_rng(seed);
    let h = tuple[0].nrows();
    let mut comb = CMatrix::zeros(h, h);
    for t in tuple {
        comb += t * gaussian_c64(&mut rng);
    }
    let (q, _) = schur(&comb);
    diagonals(tuple, Some(&q))
}

/// Joint eigenvalues from a single randomization, without the consensus
/// check. Adequate for radius bounds on defective tuples, where eigenvalues
/// are only determined to `eps^(1/k)` for Jordan blocks of size `k`.
pub fn joint_eigenvalue_estimate(tuple: &[CMatrix], seed: u64) -> Result<Vec<Point>> {
    check_square_tuple(tuple)?;
    check_commuting(tuple, DEFAULT_COMMUTE_TOL)?;
    if tuple.iter().all(strictly_lower_is_zero) || tuple.iter().all(|t| strictly_lower_is_zero(&t.transpose())) {
        return Ok(diagonals(tuple, None));
    }
    Ok(schur_diagonals(tuple, seed))
}

/// Largest distance in a greedy nearest-neighbour matching of two
/// equally sized point lists.
fn matching_gap(a: &[Point], b: &[Point]) -> f64 {
    let mut used = vec![false; b.len()];
    let mut gap = 0.0f64;
    for p in a {
        let (best, d) = b
            .iter()
            .enumerate()
            .filter(|(j, _)| !used[*j])
            .map(|(j, q)| (j, p.dist(q)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap_or((usize::MAX, f64::INFINITY));
        if best != usize::MAX {
            used[best] = true;
        }
        gap = gap.max(d);
    }
    gap
}

pub fn hausdorff_distance(a: &[Point], b: &[Point]) -> f64 {
    let directed = |x: &[Point], y: &[Point]| {
        x.iter().map(|p| y.iter().map(|q| p.dist(q)).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    directed(a, b).max(directed(b, a))
}

#[derive(Clone, Debug, Serialize)]
pub struct SpectralMappingReport {
    pub mapped_eigenvalues: Vec<Point>,
    pub eigenvalues_of_image: Vec<Point>,
    pub distance: f64,
}

/// Compares `f(sigma(T))` with `sigma(f(T))` for a polynomial map `f`.
pub fn spectral_mapping_check(tuple: &[CMatrix], f: &[Polynomial], seed: u64) -> Result<SpectralMappingReport> {
    let eig = joint_eigenvalues(tuple, seed)?;
    let mapped: Vec<Point> =
        eig.iter().map(|p| Point::from_vec(f.iter().map(|fi| fi.eval(p.coords())).collect())).collect();
    let image = f.iter().map(|fi| fi.eval_tuple(tuple)).collect::<Result<Vec<_>>>()?;
    let image_eig = joint_eigenvalues(&image, seed)?;
    let distance = hausdorff_distance(&mapped, &image_eig);
    Ok(SpectralMappingReport { mapped_eigenvalues: mapped, eigenvalues_of_image: image_eig, distance })
}

//! Holomorphic functional calculus for commuting matrix tuples.
//!
//! `f(T)` is realized three ways: by direct polynomial evaluation, by the
//! Szegő integral over the Shilov boundary, and (for Möbius maps) by
//! rational calculus `p(T) q(T)^{-1}`.

use crate::domain::{DomainKind, DomainSpec, MobiusMap, Point};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, pairwise_sum, ExecMode};
use crate::hilbert::OperatorTuple;
use crate::koszul::joint_eigenvalue_estimate;
use crate::linalg::{inverse, op_norm, powm, real, CMatrix};
use crate::poly::Polynomial;
use crate::quadrature::{shilov_quadrature, ShilovQuadrature};

pub const BOUNDARY_MARGIN: f64 = 1e-9;
pub const SERIES_TOL: f64 = 1e-14;
pub const DENOMINATOR_FLOOR: f64 = 1e-6;
const SPECTRUM_SEED: u64 = 0x5eed;
const NODE_CHUNK: usize = 512;
const MAX_SERIES_BLOCKS: usize = 1_000_000;

#[derive(Clone, Debug)]
pub struct CalculusResult {
    pub matrix: CMatrix,
    pub nodes: usize,
    pub estimated_error: Option<f64>,
}

fn check_tuple(tuple: &[CMatrix], dom: &DomainSpec) -> Result<usize> {
    if tuple.len() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: tuple.len() });
    }
    let h = tuple[0].nrows();
    for t in tuple {
        if t.nrows() != h || t.ncols() != h {
            return Err(Error::DimensionMismatch { expected: h, got: t.ncols() });
        }
    }
    Ok(h)
}

/// Largest spectral norm over the joint eigenvalues.
pub fn joint_spectral_radius(tuple: &[CMatrix], dom: &DomainSpec) -> Result<f64> {
    check_tuple(tuple, dom)?;
    let eig = joint_eigenvalue_estimate(tuple, SPECTRUM_SEED)?;
    let mut rho = 0.0f64;
    for p in &eig {
        rho = rho.max(dom.spectral_norm(p)?);
    }
    Ok(rho)
}

fn check_interior(tuple: &[CMatrix], dom: &DomainSpec) -> Result<f64> {
    let rho = joint_spectral_radius(tuple, dom)?;
    if rho >= 1.0 - BOUNDARY_MARGIN {
        return Err(Error::SpectrumTouchesBoundary { norm: rho });
    }
    Ok(rho)
}

/// `Delta(T, w)^{-lambda}`.
pub fn delta_power_tuple(tuple: &[CMatrix], w: &Point, lambda: f64, dom: &DomainSpec) -> Result<CMatrix> {
    let rho = check_interior(tuple, dom)?;
    delta_power_unchecked(tuple, w, lambda, dom, rho)
}

fn linear_factor(tuple: &[CMatrix], coeffs: &[(usize, crate::linalg::C64)]) -> CMatrix {
    let h = tuple[0].nrows();
    let mut a = CMatrix::identity(h, h);
    for &(i, c) in coeffs {
        a -= &tuple[i] * c;
    }
    a
}

fn delta_power_unchecked(tuple: &[CMatrix], w: &Point, lambda: f64, dom: &DomainSpec, rho: f64) -> Result<CMatrix> {
    if w.len() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: w.len() });
    }
    match dom.kind() {
        DomainKind::Ball { n } => {
            let coeffs: Vec<_> = (0..n).map(|i| (i, w[i].conj())).collect();
            powm(&linear_factor(tuple, &coeffs), -lambda)
        }
        DomainKind::Polydisc { n } => {
            let h = tuple[0].nrows();
            let mut out = CMatrix::identity(h, h);
            for i in 0..n {
                out *= powm(&linear_factor(tuple, &[(i, w[i].conj())]), -lambda)?;
            }
            Ok(out)
        }
        DomainKind::MatrixBall { .. } => Ok(series_with_radius(tuple, w, lambda, dom, rho)?.matrix),
    }
}

/// Result of summing `Delta(T, w)^{-lambda}` degree block by degree block.
#[derive(Clone, Debug)]
pub struct SeriesEvaluation {
    pub matrix: CMatrix,
    pub blocks: usize,
    /// Highest degree whose block exceeds `1e-12` of the largest block.
    pub last_significant_degree: usize,
}

/// `Delta(T, w)^{-lambda}` as the sum of its homogeneous parts in `z`,
/// generated by the Euler recurrence
/// `d F_d = sum_{k>=1} (mu k - d + k) P_k F_{d-k}` with `mu = -lambda`.
pub fn delta_power_series(tuple: &[CMatrix], w: &Point, lambda: f64, dom: &DomainSpec) -> Result<SeriesEvaluation> {
    let rho = check_interior(tuple, dom)?;
    series_with_radius(tuple, w, lambda, dom, rho)
}

fn series_with_radius(
    tuple: &[CMatrix],
    w: &Point,
    lambda: f64,
    dom: &DomainSpec,
    rho: f64,
) -> Result<SeriesEvaluation> {
    let delta = dom.generic_poly_in_z(w)?;
    let r = delta.degree().unwrap_or(0) as usize;
    let h = tuple[0].nrows();
    let p: Vec<CMatrix> = (0..=r).map(|k| delta.homogeneous_part(k as u32).eval_tuple(tuple)).collect::<Result<_>>()?;
    let mu = -lambda;
    let decay = -rho.max(1e-3).ln();
    let cap = ((200.0 * (1.0 + lambda.abs())) / decay).ceil().min(MAX_SERIES_BLOCKS as f64) as usize + 100;

    let mut f = vec![CMatrix::identity(h, h)];
    let mut norms = vec![1.0f64];
    let mut sum = CMatrix::identity(h, h);
    let mut quiet = 0usize;
    for d in 1..=cap {
        let mut next = CMatrix::zeros(h, h);
        for k in 1..=r.min(d) {
            let c = mu * k as f64 - d as f64 + k as f64;
            if c != 0.0 {
                next += &p[k] * &f[d - k] * real(c);
            }
        }
        next /= real(d as f64);
        let nn = op_norm(&next);
        sum += &next;
        f.push(next);
        norms.push(nn);
        if nn <= SERIES_TOL * op_norm(&sum) {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= r.max(1) {
            let peak = norms.iter().copied().fold(0.0, f64::max);
            let last = norms.iter().rposition(|&x| x > 1e-12 * peak).unwrap_or(0);
            return Ok(SeriesEvaluation { matrix: sum, blocks: d + 1, last_significant_degree: last });
        }
    }
    Err(Error::SeriesDivergence { degrees: cap + 1 })
}

fn check_poly(f: &Polynomial, dom: &DomainSpec) -> Result<()> {
    if f.nvars() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: f.nvars() });
    }
    Ok(())
}

/// `sum_nodes weight f(node) Delta(T, node)^{-n/r}`, one matrix per `f`,
/// sharing the kernel evaluations.
pub fn integral_calculus_many(
    tuple: &[CMatrix],
    fs: &[Polynomial],
    quad: &ShilovQuadrature,
    dom: &DomainSpec,
    mode: ExecMode,
) -> Result<Vec<CMatrix>> {
    let h = check_tuple(tuple, dom)?;
    for f in fs {
        check_poly(f, dom)?;
    }
    let rho = check_interior(tuple, dom)?;
    let s = dom.hardy_weight();
    let n = quad.len();
    let chunks = map_indexed(mode, n.div_ceil(NODE_CHUNK), |c| -> Result<Vec<CMatrix>> {
        let mut acc = vec![CMatrix::zeros(h, h); fs.len()];
        for k in c * NODE_CHUNK..((c + 1) * NODE_CHUNK).min(n) {
            let z = &quad.nodes[k];
            let kern = delta_power_unchecked(tuple, z, s, dom, rho)?;
            for (a, f) in acc.iter_mut().zip(fs) {
                let v = f.eval(z.coords()) * quad.weights[k];
                if v != crate::linalg::C64::default() {
                    *a += &kern * v;
                }
            }
        }
        Ok(acc)
    });
    let mut per_f: Vec<Vec<CMatrix>> = vec![Vec::with_capacity(chunks.len()); fs.len()];
    for chunk in chunks {
        for (slot, m) in per_f.iter_mut().zip(chunk?) {
            slot.push(m);
        }
    }
    Ok(per_f.into_iter().map(|v| pairwise_sum(v).unwrap_or_else(|| CMatrix::zeros(h, h))).collect())
}

/// `f(T)` from the Szegő integral over the Shilov boundary.
pub fn integral_calculus(
    tuple: &[CMatrix],
    f: &Polynomial,
    quad: &ShilovQuadrature,
    dom: &DomainSpec,
) -> Result<CalculusResult> {
    let m = integral_calculus_many(tuple, std::slice::from_ref(f), quad, dom, ExecMode::default())?;
    Ok(CalculusResult { matrix: m.into_iter().next().expect("one symbol"), nodes: quad.len(), estimated_error: None })
}

/// Integral calculus at `level + 1`, with the relative difference to
/// `level` as the error estimate.
pub fn integral_calculus_estimated(
    tuple: &[CMatrix],
    f: &Polynomial,
    dom: &DomainSpec,
    level: u32,
    tol: f64,
) -> Result<CalculusResult> {
    let coarse = integral_calculus(tuple, f, &shilov_quadrature(dom, level)?, dom)?;
    let fine = integral_calculus(tuple, f, &shilov_quadrature(dom, level + 1)?, dom)?;
    let scale = op_norm(&fine.matrix).max(f64::MIN_POSITIVE);
    let estimate = op_norm(&(&fine.matrix - &coarse.matrix)) / scale;
    if estimate > tol {
        return Err(Error::QuadratureUnderResolved { estimate, tolerance: tol });
    }
    Ok(CalculusResult { estimated_error: Some(estimate), ..fine })
}

/// `f(T)` as the sum of its homogeneous parts evaluated on the tuple.
pub fn series_calculus(tuple: &[CMatrix], f: &Polynomial) -> Result<CMatrix> {
    if tuple.len() != f.nvars() {
        return Err(Error::DimensionMismatch { expected: f.nvars(), got: tuple.len() });
    }
    let h = tuple.first().map(|t| t.nrows()).unwrap_or(0);
    let mut out = CMatrix::zeros(h, h);
    for d in 0..=f.degree().unwrap_or(0) {
        let part = f.homogeneous_part(d);
        if !part.is_zero() {
            out += part.eval_tuple(tuple)?;
        }
    }
    Ok(out)
}

/// `g_{z0}(T)` by rational calculus on each component.
pub fn mobius_of_tuple(tuple: &[CMatrix], z0: &Point, dom: &DomainSpec) -> Result<OperatorTuple> {
    check_tuple(tuple, dom)?;
    check_interior(tuple, dom)?;
    let g = MobiusMap::new(z0, dom)?;
    let eig = joint_eigenvalue_estimate(tuple, SPECTRUM_SEED)?;
    let comps = g.rational_components();
    let mut ops = Vec::with_capacity(comps.len());
    let mut cache: Option<(Polynomial, CMatrix)> = None;
    for comp in &comps {
        let min_q = eig.iter().map(|p| comp.q.eval(p.coords()).norm()).fold(f64::INFINITY, f64::min);
        if min_q < DENOMINATOR_FLOOR {
            return Err(Error::SingularDenominator { min_modulus: min_q });
        }
        let q_inv = match &cache {
            Some((q, inv)) if *q == comp.q => inv.clone(),
            _ => {
                let inv = inverse(&series_calculus(tuple, &comp.q)?)?;
                cache = Some((comp.q.clone(), inv.clone()));
                inv
            }
        };
        ops.push(series_calculus(tuple, &comp.p)? * q_inv);
    }
    OperatorTuple::new(ops)
}

/// `max_i ||g_{-z0}(g_{z0}(T))_i - T_i||`.
pub fn composition_check(tuple: &[CMatrix], z0: &Point, dom: &DomainSpec) -> Result<f64> {
    let there = mobius_of_tuple(tuple, z0, dom)?;
    let back = mobius_of_tuple(&there.ops, &z0.neg(), dom)?;
    Ok(back.ops.iter().zip(tuple).map(|(a, t)| op_norm(&(a - t))).fold(0.0, f64::max))
}

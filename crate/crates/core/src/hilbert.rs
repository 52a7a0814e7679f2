//! Truncated multiplication operators on `H^2_lambda`, polynomially
//! generated submodules, quotient compressions and Schatten-norm profiles.
//!
//! The truncated submodule at level `D` is `P_D M`, the projection of the
//! submodule onto polynomials of degree `<= D`. It is invariant under the
//! truncated multipliers `P_D M_f P_D`, so its orthogonal complement is
//! co-invariant and compression is multiplicative there.

use std::sync::Arc;

use nalgebra::SVD;
use serde::{Deserialize, Serialize};

use crate::domain::DomainSpec;
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::kernel::TruncatedBasis;
use crate::koszul::{commutator_defect, joint_eigenvalue_estimate, joint_eigenvalues};
use crate::linalg::{op_norm, real, singular_values, CMatrix, C64};
use crate::poly::{MultiIndex, Polynomial, RationalSymbol};
use crate::sampling::{random_interior_point, random_shilov_point, seeded_rng};

pub const SPAN_RANK_TOL: f64 = 1e-10;
pub const DENOMINATOR_MARGIN: f64 = 1e-3;
pub const DENOMINATOR_SAMPLES: usize = 10_000;
pub const MAX_CONDITION: f64 = 1e12;
pub const PERMISSIVE_SLACK: f64 = 1e-9;
const DENOMINATOR_SEED: u64 = 0x0d15_ea5e;

/// A commuting tuple of square matrices with descriptive labels.
#[derive(Clone, Debug)]
pub struct OperatorTuple {
    pub ops: Vec<CMatrix>,
    pub labels: Vec<String>,
}

impl OperatorTuple {
    pub fn new(ops: Vec<CMatrix>) -> Result<Self> {
        let h = ops.first().map(|m| m.nrows()).unwrap_or(0);
        for m in &ops {
            if m.nrows() != h || m.ncols() != h {
                return Err(Error::DimensionMismatch { expected: h, got: m.ncols() });
            }
        }
        let labels = (1..=ops.len()).map(|i| format!("T{i}")).collect();
        Ok(OperatorTuple { ops, labels })
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn space_dim(&self) -> usize {
        self.ops.first().map(|m| m.nrows()).unwrap_or(0)
    }

    pub fn commutator_defect(&self) -> f64 {
        commutator_defect(&self.ops)
    }
}

/// Polynomial generators of a submodule.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SubmoduleSpec {
    pub generators: Vec<Polynomial>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variety: Option<String>,
}

impl SubmoduleSpec {
    pub fn new(generators: Vec<Polynomial>) -> Result<Self> {
        if generators.iter().all(Polynomial::is_zero) {
            return Err(Error::EmptySpan);
        }
        Ok(SubmoduleSpec { generators, variety: None })
    }

    pub fn parse(exprs: &[&str], nvars: usize) -> Result<Self> {
        Self::new(exprs.iter().map(|e| Polynomial::parse(e, nvars)).collect::<Result<_>>()?)
    }
}

/// A polynomial or rational symbol.
#[derive(Clone, Debug, PartialEq)]
pub enum Symbol {
    Poly(Polynomial),
    Rational(RationalSymbol),
}

impl Symbol {
    pub fn degree(&self) -> u32 {
        match self {
            Symbol::Poly(p) => p.degree().unwrap_or(0),
            Symbol::Rational(r) => r.degree(),
        }
    }

    pub fn label(&self) -> String {
        match self {
            Symbol::Poly(p) => p.to_string(),
            Symbol::Rational(r) => r.to_string(),
        }
    }

    pub fn coordinate(nvars: usize, i: usize) -> Symbol {
        Symbol::Poly(Polynomial::var(nvars, i))
    }
}

fn check_poly(basis: &TruncatedBasis, f: &Polynomial) -> Result<()> {
    if f.nvars() != basis.domain().dim() {
        return Err(Error::DimensionMismatch { expected: basis.domain().dim(), got: f.nvars() });
    }
    if f.degree().unwrap_or(0) as usize > basis.max_degree() {
        return Err(Error::Precondition(format!(
            "symbol degree {} exceeds truncation degree {}",
            f.degree().unwrap_or(0),
            basis.max_degree()
        )));
    }
    Ok(())
}

/// `P_D M_f P_D` in the orthonormal basis.
pub fn mult_op(basis: &TruncatedBasis, f: &Polynomial) -> Result<CMatrix> {
    check_poly(basis, f)?;
    let n = basis.dim();
    let dmax = basis.max_degree();
    let mut out = CMatrix::zeros(n, n);
    // column block d maps into row blocks d + deg(term)
    for d in 0..=dmax {
        let (co, cl) = (basis.offset(d), basis.monomials_of(d).len());
        let l = basis.change_of_basis(d);
        let top = d + f.degree().unwrap_or(0) as usize;
        for e in d..=top.min(dmax) {
            let (ro, rl) = (basis.offset(e), basis.monomials_of(e).len());
            let mut a = CMatrix::zeros(rl, cl);
            let mut any = false;
            for (gamma, &c) in f.terms() {
                if gamma.degree() as usize != e - d {
                    continue;
                }
                for (j, alpha) in basis.monomials_of(d).iter().enumerate() {
                    let i = basis.index_of(&alpha.add(gamma)).expect("degree within range") - ro;
                    a[(i, j)] += c;
                    any = true;
                }
            }
            if any {
                let block = basis.cholesky_factor(e).adjoint() * a * &l;
                out.view_mut((ro, co), (rl, cl)).copy_from(&block);
            }
        }
    }
    Ok(out)
}

/// Orthonormal basis (columns, orthonormal coordinates) of `P_D M`.
#[derive(Clone, Debug)]
pub struct SubmoduleSpan {
    pub basis: CMatrix,
}

impl SubmoduleSpan {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
}

/// Orthonormal coordinates of `P_D(f_j z^alpha)` for every generator and
/// every `alpha` for which the product has a term of degree `<= D`.
fn generator_matrix(basis: &TruncatedBasis, spec: &SubmoduleSpec) -> Result<CMatrix> {
    let n = basis.domain().dim();
    let dmax = basis.max_degree() as u32;
    let mut cols = Vec::new();
    for f in &spec.generators {
        if f.nvars() != n {
            return Err(Error::DimensionMismatch { expected: n, got: f.nvars() });
        }
        let Some(m) = f.min_degree() else { continue };
        if m > dmax {
            continue;
        }
        for d in 0..=(dmax - m) {
            for alpha in basis.monomials_of(d as usize) {
                let c = basis.monomial_coords(&f.shift(alpha))?;
                cols.push(basis.to_orthonormal(&c));
            }
        }
    }
    if cols.is_empty() {
        return Err(Error::EmptySpan);
    }
    Ok(CMatrix::from_columns(&cols))
}

fn range_basis(m: &CMatrix) -> CMatrix {
    if m.nrows() == 0 || m.ncols() == 0 {
        return CMatrix::zeros(m.nrows(), 0);
    }
    let svd = SVD::new(m.clone(), true, false);
    let u = svd.u.expect("requested U");
    let s = &svd.singular_values;
    let smax = s.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..s.len()).filter(|&i| smax > 0.0 && s[i] > SPAN_RANK_TOL * smax).collect();
    CMatrix::from_fn(m.nrows(), keep.len(), |i, j| u[(i, keep[j])])
}

pub fn submodule_span(basis: &TruncatedBasis, spec: &SubmoduleSpec) -> Result<SubmoduleSpan> {
    let g = generator_matrix(basis, spec)?;
    let q = range_basis(&g);
    if q.ncols() == 0 {
        return Err(Error::EmptySpan);
    }
    Ok(SubmoduleSpan { basis: q })
}

/// Orthonormal columns spanning the complement of `span(a)` in `C^m`,
/// assuming the columns of `a` are orthonormal.
fn orthogonal_complement(a: &CMatrix, m: usize) -> CMatrix {
    let k = a.ncols();
    if k == 0 {
        return CMatrix::identity(m, m);
    }
    if k >= m {
        return CMatrix::zeros(m, 0);
    }
    let mut aug = CMatrix::zeros(m, k + m);
    aug.view_mut((0, 0), (m, k)).copy_from(a);
    aug.view_mut((0, k), (m, m)).copy_from(&CMatrix::identity(m, m));
    let q = aug.qr().q();
    q.columns(k, m - k).into_owned()
}

/// Quotient `H^{(D)} ⊖ P_D M` with a basis adapted to the degree filtration
/// and the compressed coordinate tuple.
#[derive(Clone, Debug)]
pub struct QuotientModel {
    basis: Arc<TruncatedBasis>,
    submodule: CMatrix,
    complement: CMatrix,
    filtration: Vec<usize>,
    tuple: Vec<CMatrix>,
}

impl QuotientModel {
    /// Quotient by the submodule generated by `spec`.
    pub fn new(basis: Arc<TruncatedBasis>, spec: &SubmoduleSpec) -> Result<Self> {
        let g = generator_matrix(&basis, spec)?;
        let full = range_basis(&g);
        if full.ncols() == 0 {
            return Err(Error::EmptySpan);
        }
        // level k: complement of P_k M inside degree <= k, extending level k-1
        let mut complement = CMatrix::zeros(0, 0);
        let mut filtration = Vec::new();
        for k in 0..=basis.max_degree() {
            let dk = basis.dim_up_to(k);
            let qk = range_basis(&g.rows(0, dk).into_owned());
            let prev = complement.ncols();
            let mut known = CMatrix::zeros(dk, qk.ncols() + prev);
            known.view_mut((0, 0), (dk, qk.ncols())).copy_from(&qk);
            if prev > 0 {
                known.view_mut((0, qk.ncols()), (complement.nrows(), prev)).copy_from(&complement);
            }
            let new = orthogonal_complement(&known, dk);
            let mut next = CMatrix::zeros(dk, prev + new.ncols());
            if prev > 0 {
                next.view_mut((0, 0), (complement.nrows(), prev)).copy_from(&complement);
            }
            next.view_mut((0, prev), (dk, new.ncols())).copy_from(&new);
            filtration.extend(std::iter::repeat_n(k, new.ncols()));
            complement = next;
        }
        Self::assemble(basis, full, complement, filtration)
    }

    /// The whole truncated space (zero submodule).
    pub fn full(basis: Arc<TruncatedBasis>) -> Result<Self> {
        let n = basis.dim();
        let filtration = (0..n).map(|i| basis.degree_of_index(i)).collect();
        Self::assemble(basis, CMatrix::zeros(n, 0), CMatrix::identity(n, n), filtration)
    }

    fn assemble(
        basis: Arc<TruncatedBasis>,
        submodule: CMatrix,
        complement: CMatrix,
        filtration: Vec<usize>,
    ) -> Result<Self> {
        let nv = basis.domain().dim();
        let mut model = QuotientModel { basis, submodule, complement, filtration, tuple: Vec::new() };
        model.tuple = (0..nv).map(|i| model.compress(&Polynomial::var(nv, i))).collect::<Result<_>>()?;
        let scale = model.tuple.iter().map(|s| op_norm(s).powi(2)).fold(0.0, f64::max);
        let defect = commutator_defect(&model.tuple);
        if defect > 1e-10 * scale.max(1.0) {
            return Err(Error::InvariantViolation(format!("compressed tuple fails to commute (defect {defect:.3e})")));
        }
        Ok(model)
    }

    pub fn basis(&self) -> &TruncatedBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.complement.ncols()
    }

    pub fn submodule_dim(&self) -> usize {
        self.submodule.ncols()
    }

    /// Orthonormal basis of `P_D M` (columns).
    pub fn submodule_basis(&self) -> &CMatrix {
        &self.submodule
    }

    /// Orthonormal basis of the quotient (columns).
    pub fn complement_basis(&self) -> &CMatrix {
        &self.complement
    }

    /// Filtration degree of each quotient basis vector.
    pub fn filtration(&self) -> &[usize] {
        &self.filtration
    }

    /// Orthogonal projector onto the quotient.
    pub fn projector(&self) -> CMatrix {
        &self.complement * self.complement.adjoint()
    }

    /// Compressed coordinate tuple `S_i`.
    pub fn tuple(&self) -> &[CMatrix] {
        &self.tuple
    }

    /// `S_f`, the compression of the truncated multiplier to the quotient.
    pub fn compress(&self, f: &Polynomial) -> Result<CMatrix> {
        let m = mult_op(&self.basis, f)?;
        Ok(self.complement.adjoint() * m * &self.complement)
    }

    /// `S_p S_q^{-1}` after checking that `q` stays away from zero on
    /// sampled points of the closed domain.
    pub fn compress_rational(&self, p: &Polynomial, q: &Polynomial) -> Result<CMatrix> {
        if q.is_zero() {
            return Err(Error::DenominatorVanishes { min_modulus: 0.0 });
        }
        if q.degree() == Some(0) {
            let c = q.coefficient(&MultiIndex::zero(q.nvars()));
            return Ok(self.compress(p)? * (real(1.0) / c));
        }
        check_denominator(self.basis.domain(), q)?;
        let sp = self.compress(p)?;
        let sq = self.compress(q)?;
        let s = singular_values(&sq);
        let cond = match (s.first(), s.last()) {
            (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
            (Some(_), Some(_)) => f64::INFINITY,
            _ => 1.0,
        };
        if cond > MAX_CONDITION {
            return Err(Error::NumericallySingular { condition: cond });
        }
        // X S_q = S_p  <=>  S_q^T X^T = S_p^T
        let xt = sq.transpose().lu().solve(&sp.transpose()).ok_or(Error::NumericallySingular { condition: cond })?;
        Ok(xt.transpose())
    }

    pub fn compress_symbol(&self, s: &Symbol) -> Result<CMatrix> {
        match s {
            Symbol::Poly(p) => self.compress(p),
            Symbol::Rational(r) => self.compress_rational(&r.p, &r.q),
        }
    }

    /// Indices of quotient basis vectors of filtration degree `<= D - w`.
    pub fn window_indices(&self, w: usize) -> Vec<usize> {
        let d = self.basis.max_degree();
        if w > d {
            return Vec::new();
        }
        (0..self.dim()).filter(|&i| self.filtration[i] <= d - w).collect()
    }

    /// Principal submatrix on [`Self::window_indices`].
    pub fn windowed(&self, m: &CMatrix, w: usize) -> CMatrix {
        let idx = self.window_indices(w);
        CMatrix::from_fn(idx.len(), idx.len(), |i, j| m[(idx[i], idx[j])])
    }
}

/// Sampled check that `|q| >= DENOMINATOR_MARGIN` on the closed domain:
/// half of the samples on the Shilov boundary, half in the interior.
pub fn check_denominator(dom: &DomainSpec, q: &Polynomial) -> Result<f64> {
    let mut rng = seeded_rng(DENOMINATOR_SEED);
    let mut min = f64::INFINITY;
    for k in 0..DENOMINATOR_SAMPLES {
        let z = if k % 2 == 0 { random_shilov_point(dom, &mut rng) } else { random_interior_point(dom, 1.0, &mut rng) };
        min = min.min(q.eval(z.coords()).norm());
    }
    if min < DENOMINATOR_MARGIN {
        return Err(Error::DenominatorVanishes { min_modulus: min });
    }
    Ok(min)
}

/// `[A, B^*] = A B^* - B^* A`.
pub fn cross_commutator(a: &CMatrix, b: &CMatrix) -> Result<CMatrix> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch { expected: a.nrows(), got: b.nrows() });
    }
    let bs = b.adjoint();
    Ok(a * &bs - &bs * a)
}

/// Schatten `p`-norm; `p = f64::INFINITY` gives the operator norm.
pub fn schatten_norm(x: &CMatrix, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Precondition(format!("Schatten exponent must be >= 1, got {p}")));
    }
    let s = singular_values(x);
    if p.is_infinite() {
        return Ok(s.first().copied().unwrap_or(0.0));
    }
    let smax = s.first().copied().unwrap_or(0.0);
    if smax == 0.0 {
        return Ok(0.0);
    }
    Ok(smax * s.iter().map(|v| (v / smax).powf(p)).sum::<f64>().powf(1.0 / p))
}

/// `c T + d`, checked to keep its joint spectrum in the closed domain.
/// Tuples whose eigenvalues are too defective for a consensus (nilpotent
/// compressions) are checked against a single estimate.
pub fn permissive_transform(tuple: &OperatorTuple, c: f64, d: &[C64], dom: &DomainSpec) -> Result<OperatorTuple> {
    if d.len() != tuple.len() {
        return Err(Error::DimensionMismatch { expected: tuple.len(), got: d.len() });
    }
    if c.is_nan() || c <= 0.0 {
        return Err(Error::Precondition(format!("scale must be positive, got {c}")));
    }
    let h = tuple.space_dim();
    let ops: Vec<CMatrix> =
        tuple.ops.iter().zip(d).map(|(t, &di)| t * real(c) + CMatrix::identity(h, h) * di).collect();
    let eig = match joint_eigenvalues(&ops, 0) {
        Err(Error::ConsensusFailure { .. }) => joint_eigenvalue_estimate(&ops, 0)?,
        other => other?,
    };
    let norm = eig.iter().map(|p| dom.spectral_norm(p)).collect::<Result<Vec<_>>>()?.into_iter().fold(0.0, f64::max);
    if norm > 1.0 + PERMISSIVE_SLACK {
        return Err(Error::NotPermissive { norm });
    }
    let labels =
        tuple.labels.iter().zip(d).map(|(l, di)| format!("{c}*{l}+{}", crate::poly::fmt_complex(*di))).collect();
    Ok(OperatorTuple { ops, labels })
}

/// What to quotient by in a profile run.
#[derive(Clone, Debug)]
pub enum ProfileModel {
    Full,
    Quotient(SubmoduleSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProfileRow {
    pub domain: String,
    pub lambda: f64,
    #[serde(rename = "D")]
    pub d: usize,
    pub symbol_i: String,
    pub symbol_j: String,
    pub p: f64,
    pub schatten_full: f64,
    pub schatten_windowed: f64,
    pub dim_quotient: usize,
}

/// Default window: one more than the largest symbol degree.
pub fn default_window(symbols: &[Symbol]) -> usize {
    symbols.iter().map(Symbol::degree).max().unwrap_or(0) as usize + 1
}

/// Inputs of [`essential_normality_profile`]. `window = None` selects
/// [`default_window`].
#[derive(Clone, Debug)]
pub struct ProfileRequest {
    pub dom: DomainSpec,
    pub lambda: f64,
    pub model: ProfileModel,
    pub symbols: Vec<Symbol>,
    pub p: f64,
    pub d_list: Vec<usize>,
    pub window: Option<usize>,
}

/// Schatten-`p` norms of `[S_i, S_j^*]` over all ordered symbol pairs and
/// every `D`, on the full truncation and on the window.
pub fn essential_normality_profile(req: &ProfileRequest, mode: ExecMode) -> Result<Vec<ProfileRow>> {
    let w = req.window.unwrap_or_else(|| default_window(&req.symbols));
    let per_d = map_indexed(mode, req.d_list.len(), |k| {
        let basis = Arc::new(TruncatedBasis::new_with(&req.dom, req.lambda, req.d_list[k], mode)?);
        let qm = match &req.model {
            ProfileModel::Full => QuotientModel::full(basis)?,
            ProfileModel::Quotient(spec) => QuotientModel::new(basis, spec)?,
        };
        profile_rows(&qm, &req.symbols, req.p, w, mode)
    });
    let mut rows = Vec::new();
    for r in per_d {
        rows.extend(r?);
    }
    Ok(rows)
}

/// Profile rows of a single model.
pub fn profile_rows(
    qm: &QuotientModel,
    symbols: &[Symbol],
    p: f64,
    w: usize,
    mode: ExecMode,
) -> Result<Vec<ProfileRow>> {
    let s: Vec<CMatrix> =
        map_indexed(mode, symbols.len(), |i| qm.compress_symbol(&symbols[i])).into_iter().collect::<Result<_>>()?;
    let labels: Vec<String> = symbols.iter().map(Symbol::label).collect();
    commutator_rows(qm, &labels, &s, p, w, mode)
}

/// Rows for `[A_i, A_j^*]` over all ordered pairs of the given operators on
/// the quotient of `qm`.
pub fn commutator_rows(
    qm: &QuotientModel,
    labels: &[String],
    ops: &[CMatrix],
    p: f64,
    w: usize,
    mode: ExecMode,
) -> Result<Vec<ProfileRow>> {
    if labels.len() != ops.len() {
        return Err(Error::DimensionMismatch { expected: ops.len(), got: labels.len() });
    }
    let pairs: Vec<(usize, usize)> = (0..ops.len()).flat_map(|i| (0..ops.len()).map(move |j| (i, j))).collect();
    let basis = qm.basis();
    map_indexed(mode, pairs.len(), |k| {
        let (i, j) = pairs[k];
        let c = cross_commutator(&ops[i], &ops[j])?;
        Ok(ProfileRow {
            domain: basis.domain().to_string(),
            lambda: basis.lambda(),
            d: basis.max_degree(),
            symbol_i: labels[i].clone(),
            symbol_j: labels[j].clone(),
            p,
            schatten_full: schatten_norm(&c, p)?,
            schatten_windowed: schatten_norm(&qm.windowed(&c, w), p)?,
            dim_quotient: qm.dim(),
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::MobiusMap;
    use crate::domain::Point;
    use crate::linalg::{c64, fro, inverse};
    use crate::sampling::gaussian_matrix;

    fn basis(dom: DomainSpec, lambda: f64, d: usize) -> Arc<TruncatedBasis> {
        Arc::new(TruncatedBasis::new(&dom, lambda, d).unwrap())
    }

    fn ball2() -> DomainSpec {
        DomainSpec::ball(2).unwrap()
    }

    #[test]
    fn mult_by_one_is_identity() {
        let b = basis(DomainSpec::matrix_ball(2, 2).unwrap(), 2.5, 3);
        let m = mult_op(&b, &Polynomial::one(4)).unwrap();
        assert!(fro(&(m - CMatrix::identity(b.dim(), b.dim()))) < 1e-12);
    }

    #[test]
    fn hardy_shift_on_the_disc() {
        let b = basis(DomainSpec::ball(1).unwrap(), 1.0, 4);
        let s = mult_op(&b, &Polynomial::var(1, 0)).unwrap();
        let mut expect = CMatrix::zeros(5, 5);
        for k in 0..4 {
            expect[(k + 1, k)] = real(1.0);
        }
        assert!(fro(&(s - expect)) < 1e-14);
    }

    #[test]
    fn drury_arveson_coordinates_are_contractions() {
        for d in [3, 6, 9] {
            let b = basis(ball2(), 1.0, d);
            let s = mult_op(&b, &Polynomial::var(2, 0)).unwrap();
            assert!(op_norm(&s) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn mult_op_rejects_high_degree() {
        let b = basis(ball2(), 2.0, 2);
        assert!(mult_op(&b, &"z1^3".parse::<Polynomial>().unwrap().shift(&MultiIndex(vec![0, 0]))).is_err());
        assert!(matches!(TruncatedBasis::new(&ball2(), 0.0, 2), Err(Error::NotAModuleWeight { .. })));
    }

    #[test]
    fn submodule_codimensions() {
        let b = basis(ball2(), 2.0, 3);
        let span = submodule_span(&b, &SubmoduleSpec::parse(&["z1"], 2).unwrap()).unwrap();
        assert_eq!(b.dim() - span.dim(), 4);
        let b4 = basis(ball2(), 2.0, 4);
        let span = submodule_span(&b4, &SubmoduleSpec::parse(&["z1*z2"], 2).unwrap()).unwrap();
        assert_eq!(b4.dim() - span.dim(), 9);
        assert!(matches!(SubmoduleSpec::parse(&["0"], 2), Err(Error::EmptySpan)));
    }

    #[test]
    fn quotient_by_z1() {
        let lambda = 2.0;
        let b = basis(ball2(), lambda, 6);
        let qm = QuotientModel::new(b.clone(), &SubmoduleSpec::parse(&["z1"], 2).unwrap()).unwrap();
        assert_eq!(qm.dim(), 7);
        assert_eq!(qm.filtration(), &[0, 1, 2, 3, 4, 5, 6]);
        let p = qm.projector();
        assert!(fro(&(&p * &p - &p)) < 1e-12);
        assert!(fro(&(&p - p.adjoint())) < 1e-14);
        assert!(fro(&qm.tuple()[0]) < 1e-12);
        // S_2 is a weighted shift with weights ||z2^{k+1}|| / ||z2^k||
        let s2 = &qm.tuple()[1];
        for k in 0..6u32 {
            let nk = crate::kernel::closed_form_norms(&ball2(), lambda, &MultiIndex(vec![0, k])).unwrap().sqrt();
            let nk1 = crate::kernel::closed_form_norms(&ball2(), lambda, &MultiIndex(vec![0, k + 1])).unwrap().sqrt();
            assert!((s2[(k as usize + 1, k as usize)].norm() - nk1 / nk).abs() < 1e-12);
        }
        let f = Polynomial::var(2, 0);
        assert!(fro(&qm.compress(&f).unwrap()) < 1e-12);
        let id = qm.compress(&Polynomial::one(2)).unwrap();
        assert!(fro(&(id - CMatrix::identity(7, 7))) < 1e-12);
    }

    #[test]
    fn trivial_quotient_is_empty() {
        let b = basis(ball2(), 2.0, 3);
        let qm = QuotientModel::new(b, &SubmoduleSpec::parse(&["1"], 2).unwrap()).unwrap();
        assert_eq!(qm.dim(), 0);
    }

    #[test]
    fn submodule_is_invariant_and_compressions_commute() {
        for (dom, lambda, gens) in [
            (ball2(), 2.0, vec!["z1 - z2^2"]),
            (ball2(), 3.0, vec!["z1*z2", "z1^2 + 0.5"]),
            (DomainSpec::polydisc(2).unwrap(), 1.5, vec!["z1 - z2"]),
            (DomainSpec::matrix_ball(2, 2).unwrap(), 2.5, vec!["z1*z4 - z2*z3"]),
        ] {
            let d = if dom.dim() == 4 { 4 } else { 7 };
            let b = basis(dom, lambda, d);
            let spec = SubmoduleSpec::parse(&gens, dom.dim()).unwrap();
            let span = submodule_span(&b, &spec).unwrap();
            let pm = &span.basis * span.basis.adjoint();
            let id = CMatrix::identity(b.dim(), b.dim());
            for i in 0..dom.dim() {
                let t = mult_op(&b, &Polynomial::var(dom.dim(), i)).unwrap();
                assert!(fro(&((&id - &pm) * &t * &pm)) < 1e-12, "{dom} {gens:?}");
            }
            let qm = QuotientModel::new(b, &spec).unwrap();
            assert!(commutator_defect(qm.tuple()) < 1e-10);
        }
    }

    #[test]
    fn compression_is_multiplicative_on_the_window() {
        let b = basis(ball2(), 2.0, 8);
        let qm = QuotientModel::new(b, &SubmoduleSpec::parse(&["z1*z2"], 2).unwrap()).unwrap();
        let f: Polynomial = "z1 + 0.5*z2^2".parse().unwrap();
        let g: Polynomial = "z2 - 0.25j*z1*z2".parse().unwrap();
        let sf = qm.compress(&f).unwrap();
        let sg = qm.compress(&g).unwrap();
        let sfg = qm.compress(&(&f * &g)).unwrap();
        let idx = qm.window_indices(4);
        for &j in &idx {
            let lhs = sfg.column(j);
            let rhs = &sf * sg.column(j);
            assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn rational_compressions() {
        let disc = DomainSpec::ball(1).unwrap();
        let b = basis(disc, 1.0, 12);
        let qm = QuotientModel::full(b).unwrap();
        let p: Polynomial = "z1 - 0.5".parse().unwrap();
        let q: Polynomial = "1 - 0.5*z1".parse().unwrap();
        let s = qm.compress_rational(&p, &p).unwrap();
        assert!(fro(&(s - CMatrix::identity(13, 13))) < 1e-10);
        let s1 = qm.compress_rational(&p, &Polynomial::one(1)).unwrap();
        assert_eq!(s1, qm.compress(&p).unwrap());
        let phi = qm.compress_rational(&p, &q).unwrap();
        // S_q S_{p/q} = S_p
        let sq = qm.compress(&q).unwrap();
        assert!(fro(&(&sq * &phi - qm.compress(&p).unwrap())) < 1e-10);
        let bad: Polynomial = "1 - z1".parse().unwrap();
        assert!(matches!(qm.compress_rational(&p, &bad), Err(Error::DenominatorVanishes { .. })));
        // Möbius components of the ball are admissible rational symbols
        let g = MobiusMap::new(&Point::from_vec(vec![c64(0.7, 0.0)]), &disc).unwrap();
        for comp in g.rational_components() {
            assert!(qm.compress_rational(&comp.p, &comp.q).is_ok());
        }
    }

    #[test]
    fn schatten_examples() {
        assert_eq!(schatten_norm(&CMatrix::zeros(3, 3), 2.0).unwrap(), 0.0);
        let d = CMatrix::from_diagonal(&crate::linalg::CVector::from_vec(vec![real(3.0), real(4.0)]));
        assert!((schatten_norm(&d, 2.0).unwrap() - 5.0).abs() < 1e-14);
        assert!((schatten_norm(&d, f64::INFINITY).unwrap() - 4.0).abs() < 1e-14);
        let mut rng = seeded_rng(1);
        let u = gaussian_matrix(4, 1, &mut rng);
        let v = gaussian_matrix(4, 1, &mut rng);
        let r1 = &u * v.adjoint();
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert!((schatten_norm(&r1, p).unwrap() - u.norm() * v.norm()).abs() < 1e-12);
        }
        assert!(schatten_norm(&d, 0.5).is_err());
    }

    #[test]
    fn cross_commutator_properties() {
        let mut rng = seeded_rng(2);
        let h = gaussian_matrix(4, 4, &mut rng);
        let h = &h + h.adjoint();
        assert!(fro(&cross_commutator(&h, &h).unwrap()) < 1e-14);
        let a = gaussian_matrix(5, 5, &mut rng);
        let b = gaussian_matrix(5, 5, &mut rng);
        let x = schatten_norm(&cross_commutator(&a, &b).unwrap(), 3.0).unwrap();
        let y = schatten_norm(&cross_commutator(&b, &a).unwrap(), 3.0).unwrap();
        assert!((x - y).abs() < 1e-12 * x);
        assert!(cross_commutator(&a, &CMatrix::zeros(4, 4)).is_err());
    }

    #[test]
    fn commutator_identities() {
        let mut rng = seeded_rng(3);
        let br = |x: &CMatrix, y: &CMatrix| x * y - y * x;
        for _ in 0..10 {
            let u = gaussian_matrix(5, 5, &mut rng) + CMatrix::identity(5, 5) * real(3.0);
            let v = gaussian_matrix(5, 5, &mut rng);
            let w = gaussian_matrix(5, 5, &mut rng);
            let lhs = br(&(&u * &v), &w);
            let rhs = &u * br(&v, &w) + br(&u, &w) * &v;
            assert!(fro(&(lhs - rhs)) < 1e-12);
            for m in 1..4 {
                let um = crate::linalg::powm(&u, m as f64).unwrap();
                let uinv = inverse(&um).unwrap();
                let lhs = br(&uinv, &v);
                let rhs = &uinv * br(&v, &um) * &uinv;
                assert!(fro(&(&lhs - &rhs)) < 1e-12 * fro(&lhs).max(1.0));
            }
        }
    }

    #[test]
    fn normal_tuples_have_vanishing_symbol_commutators() {
        let mut rng = seeded_rng(4);
        let t: Vec<CMatrix> = (0..2)
            .map(|_| {
                CMatrix::from_diagonal(&crate::linalg::CVector::from_fn(6, |_, _| {
                    crate::sampling::gaussian_c64(&mut rng)
                }))
            })
            .collect();
        for _ in 0..5 {
            let h: Polynomial = "z1^2 - 0.3*z2 + z1*z2^2".parse().unwrap();
            let q: Polynomial = "0.5j*z1 + z2^3".parse().unwrap();
            let sh = h.eval_tuple(&t).unwrap();
            let sq = q.eval_tuple(&t).unwrap();
            assert!(fro(&cross_commutator(&sh, &sq).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn permissive_scaling() {
        let dom = ball2();
        let b = basis(dom, 2.0, 5);
        let qm = QuotientModel::new(b, &SubmoduleSpec::parse(&["z1"], 2).unwrap()).unwrap();
        let t = OperatorTuple::new(qm.tuple().to_vec()).unwrap();
        let same = permissive_transform(&t, 1.0, &[C64::default(), C64::default()], &dom).unwrap();
        assert_eq!(same.ops, t.ops);
        let c = 0.6;
        let shifted = permissive_transform(&t, c, &[c64(0.1, 0.0), c64(0.0, -0.2)], &dom).unwrap();
        let base = cross_commutator(&t.ops[1], &t.ops[1]).unwrap();
        let scaled = cross_commutator(&shifted.ops[1], &shifted.ops[1]).unwrap();
        assert!(fro(&(scaled - base * real(c * c))) < 1e-13);
        assert!(matches!(
            permissive_transform(&t, 1.0, &[real(1.5), real(0.0)], &dom),
            Err(Error::NotPermissive { .. })
        ));
    }

    #[test]
    fn permissive_check_on_defective_compressions() {
        let dom = ball2();
        let qm = QuotientModel::new(basis(dom, 3.0, 8), &SubmoduleSpec::parse(&["z1*z2"], 2).unwrap()).unwrap();
        let t = OperatorTuple::new(qm.tuple().to_vec()).unwrap();
        let zero = [C64::default(), C64::default()];
        let half = permissive_transform(&t, 0.5, &zero, &dom).unwrap();
        let base = cross_commutator(&t.ops[0], &t.ops[1]).unwrap();
        let scaled = cross_commutator(&half.ops[0], &half.ops[1]).unwrap();
        assert!(fro(&(scaled - base * real(0.25))) < 1e-14);
        assert!(permissive_transform(&t, 1.0, &[real(1.2), real(0.0)], &dom).is_err());
    }

    #[test]
    fn disc_profile_artifact_and_window() {
        let disc = DomainSpec::ball(1).unwrap();
        let sym = vec![Symbol::coordinate(1, 0)];
        let req = |symbols: Vec<Symbol>, p: f64, d_list: Vec<usize>| ProfileRequest {
            dom: disc,
            lambda: 1.0,
            model: ProfileModel::Full,
            symbols,
            p,
            d_list,
            window: None,
        };
        let rows = essential_normality_profile(&req(sym, 1.0, vec![4, 8]), ExecMode::default()).unwrap();
        for r in &rows {
            assert!((r.schatten_full - 2.0).abs() < 1e-12);
            assert!((r.schatten_windowed - 1.0).abs() < 1e-12);
        }
        let one = vec![Symbol::Poly(Polynomial::one(1))];
        let rows = essential_normality_profile(&req(one, 2.0, vec![5]), ExecMode::default()).unwrap();
        assert!(rows[0].schatten_full < 1e-14);
    }

    #[test]
    fn profile_modes_agree() {
        let dom = ball2();
        let req = ProfileRequest {
            dom,
            lambda: 3.0,
            model: ProfileModel::Quotient(SubmoduleSpec::parse(&["z1"], 2).unwrap()),
            symbols: vec![Symbol::coordinate(2, 0), Symbol::coordinate(2, 1)],
            p: 3.0,
            d_list: vec![4, 6],
            window: None,
        };
        let a = essential_normality_profile(&req, ExecMode::Sequential).unwrap();
        let b = essential_normality_profile(&req, ExecMode::Parallel).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 8);
    }
}

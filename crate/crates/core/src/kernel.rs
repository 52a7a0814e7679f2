//! Power-series expansion of the kernel `Delta(z, w)^{-lambda}` by total
//! degree, per-degree Gram matrices of `H^2_lambda`, and orthonormal
//! truncated bases.
//!
//! Within degree `d` the coefficients of `z^alpha conj(w)^beta` form a
//! Hermitian block `C_d`. The monomial Gram block is its inverse: with
//! `G_d = C_d^{-1}`, polynomials with coefficient vectors `c`, `e` satisfy
//! `<f, g> = e^* G_d c`. Writing `G_d = R_d R_d^*` (Cholesky), the
//! coordinates `R_d^* c` are orthonormal coordinates and the columns of
//! `L_d = R_d^{-*}` are the coefficient vectors of an orthonormal basis.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::Cholesky;
use serde::{Deserialize, Serialize};

use crate::domain::{DomainKind, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::exec::{map_indexed, ExecMode};
use crate::linalg::{c64, real, CMatrix, CVector, C64};
use crate::poly::{monomials_of_degree, MultiIndex, Polynomial};
use crate::wallach::{rising_factorial, wallach_classify, WallachClassification};

pub const CACHE_FORMAT: &str = "symdom-gram";
pub const CACHE_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct SeriesBlock {
    pub degree: usize,
    pub coefficients: CMatrix,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GramBlock {
    pub degree: usize,
    pub matrix: CMatrix,
}

/// Monomials of each degree with their positions.
#[derive(Clone, Debug)]
struct Grading {
    monos: Vec<Vec<MultiIndex>>,
    index: Vec<HashMap<MultiIndex, usize>>,
}

impl Grading {
    fn new(nvars: usize, d_max: usize) -> Self {
        let monos: Vec<Vec<MultiIndex>> = (0..=d_max).map(|d| monomials_of_degree(nvars, d as u32)).collect();
        let index = monos.iter().map(|ms| ms.iter().enumerate().map(|(i, m)| (m.clone(), i)).collect()).collect();
        Grading { monos, index }
    }
}

struct BilinearTerm {
    z: MultiIndex,
    wbar: MultiIndex,
    coef: C64,
}

/// Homogeneous parts `P_k` (bidegree `(k, k)`) of `Delta`, `k = 0..=r`.
fn delta_parts(dom: &DomainSpec) -> Vec<Vec<BilinearTerm>> {
    let n = dom.dim();
    let mut parts: Vec<Vec<BilinearTerm>> = (0..=dom.rank()).map(|_| Vec::new()).collect();
    for (alpha, &c) in dom.generic_poly_bilinear().terms() {
        let (z, w) = alpha.0.split_at(n);
        let (z, wbar) = (MultiIndex(z.to_vec()), MultiIndex(w.to_vec()));
        debug_assert_eq!(z.degree(), wbar.degree());
        parts[z.degree() as usize].push(BilinearTerm { z, wbar, coef: c });
    }
    parts
}

fn checked_sub(a: &MultiIndex, b: &MultiIndex) -> Option<MultiIndex> {
    let mut out = Vec::with_capacity(a.0.len());
    for (&x, &y) in a.0.iter().zip(&b.0) {
        out.push(x.checked_sub(y)?);
    }
    Some(MultiIndex(out))
}

/// Taylor blocks `C_0, ..., C_D` of `Delta(z, w)^{-lambda}`.
pub fn kernel_series(dom: &DomainSpec, lambda: f64, d_max: usize) -> Vec<SeriesBlock> {
    kernel_series_with(dom, lambda, d_max, ExecMode::default())
}

pub fn kernel_series_with(dom: &DomainSpec, lambda: f64, d_max: usize, mode: ExecMode) -> Vec<SeriesBlock> {
    let grading = Grading::new(dom.dim(), d_max);
    series_from_grading(dom, lambda, &grading, mode)
}

/// Euler-operator recurrence for `F = Delta^mu`, `mu = -lambda`:
/// `d F_d = sum_{k >= 1} (mu k - d + k) P_k F_{d-k}`.
fn series_from_grading(dom: &DomainSpec, lambda: f64, g: &Grading, mode: ExecMode) -> Vec<SeriesBlock> {
    let mu = -lambda;
    let parts = delta_parts(dom);
    let r = dom.rank();
    let d_max = g.monos.len() - 1;
    let mut blocks: Vec<CMatrix> = vec![CMatrix::from_element(1, 1, real(1.0))];
    for d in 1..=d_max {
        let size = g.monos[d].len();
        // column maps beta' -> beta' + delta for every (k, term)
        let colmaps: Vec<Vec<Vec<usize>>> = (1..=r.min(d))
            .map(|k| {
                parts[k].iter().map(|t| g.monos[d - k].iter().map(|b| g.index[d][&b.add(&t.wbar)]).collect()).collect()
            })
            .collect();
        let prev = &blocks;
        let rows: Vec<Vec<C64>> = map_indexed(mode, size, |i| {
            let alpha = &g.monos[d][i];
            let mut row = vec![C64::default(); size];
            for k in 1..=r.min(d) {
                let factor = (mu * k as f64 - d as f64 + k as f64) / d as f64;
                if factor == 0.0 {
                    continue;
                }
                let src = &prev[d - k];
                for (t, term) in parts[k].iter().enumerate() {
                    let Some(a_prev) = checked_sub(alpha, &term.z) else { continue };
                    let ip = g.index[d - k][&a_prev];
                    let scale = term.coef * factor;
                    for (jp, &j) in colmaps[k - 1][t].iter().enumerate() {
                        row[j] += scale * src[(ip, jp)];
                    }
                }
            }
            row
        });
        blocks.push(CMatrix::from_fn(size, size, |i, j| rows[i][j]));
    }
    blocks.into_iter().enumerate().map(|(degree, coefficients)| SeriesBlock { degree, coefficients }).collect()
}

fn require_continuous(dom: &DomainSpec, lambda: f64) -> Result<()> {
    match wallach_classify(lambda, dom) {
        WallachClassification::Continuous => Ok(()),
        other => Err(Error::NotAModuleWeight { lambda, class: format!("{other:?}") }),
    }
}

fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * real(0.5)
}

fn invert_pd(c: &CMatrix) -> Result<CMatrix> {
    let chol = Cholesky::new(hermitian_part(c)).ok_or(Error::NumericallySingular { condition: f64::INFINITY })?;
    Ok(hermitian_part(&chol.inverse()))
}

/// Gram block `G_d = C_d^{-1}` of the monomials of degree `d`.
pub fn gram_block(dom: &DomainSpec, lambda: f64, d: usize) -> Result<GramBlock> {
    require_continuous(dom, lambda)?;
    let series = kernel_series(dom, lambda, d);
    Ok(GramBlock { degree: d, matrix: invert_pd(&series[d].coefficients)? })
}

/// `||z^alpha||^2` from the closed forms on the ball and the polydisc.
pub fn closed_form_norms(dom: &DomainSpec, lambda: f64, alpha: &MultiIndex) -> Result<f64> {
    require_continuous(dom, lambda)?;
    if alpha.nvars() != dom.dim() {
        return Err(Error::DimensionMismatch { expected: dom.dim(), got: alpha.nvars() });
    }
    match dom.kind() {
        DomainKind::Ball { .. } => Ok(alpha.factorial() / rising_factorial(lambda, alpha.degree())),
        DomainKind::Polydisc { .. } => {
            Ok(alpha.0.iter().map(|&k| MultiIndex(vec![k]).factorial() / rising_factorial(lambda, k)).product())
        }
        DomainKind::MatrixBall { .. } => {
            Err(Error::UnsupportedDomain("closed-form monomial norms exist only for ball and polydisc".into()))
        }
    }
}

/// `Delta(z, w)^{-lambda}`, taken as the product of principal powers of the
/// factors returned by [`DomainSpec::delta_factors`].
pub fn kernel_eval(dom: &DomainSpec, lambda: f64, z: &Point, w: &Point) -> Result<C64> {
    let mut out = real(1.0);
    for f in dom.delta_factors(z, w)? {
        if f.re <= 0.0 {
            return Err(Error::BranchCutError { re: f.re });
        }
        out *= f.powf(-lambda);
    }
    Ok(out)
}

/// Orthonormalized monomial basis of the polynomials of degree `<= D`.
#[derive(Clone, Debug)]
pub struct TruncatedBasis {
    dom: DomainSpec,
    lambda: f64,
    grading: Grading,
    offsets: Vec<usize>,
    series: Vec<CMatrix>,
    gram: Vec<CMatrix>,
    chol: Vec<CMatrix>,
}

impl TruncatedBasis {
    pub fn new(dom: &DomainSpec, lambda: f64, d_max: usize) -> Result<Self> {
        Self::new_with(dom, lambda, d_max, ExecMode::default())
    }

    pub fn new_with(dom: &DomainSpec, lambda: f64, d_max: usize, mode: ExecMode) -> Result<Self> {
        require_continuous(dom, lambda)?;
        let grading = Grading::new(dom.dim(), d_max);
        let series: Vec<CMatrix> =
            series_from_grading(dom, lambda, &grading, mode).into_iter().map(|b| b.coefficients).collect();
        let gram =
            map_indexed(mode, series.len(), |d| invert_pd(&series[d])).into_iter().collect::<Result<Vec<_>>>()?;
        Self::assemble(dom, lambda, grading, series, gram, mode)
    }

    fn assemble(
        dom: &DomainSpec,
        lambda: f64,
        grading: Grading,
        series: Vec<CMatrix>,
        gram: Vec<CMatrix>,
        mode: ExecMode,
    ) -> Result<Self> {
        let chol = map_indexed(mode, gram.len(), |d| {
            Cholesky::new(gram[d].clone()).map(|c| c.l()).ok_or(Error::NumericallySingular { condition: f64::INFINITY })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let mut offsets = Vec::with_capacity(grading.monos.len() + 1);
        let mut acc = 0;
        for ms in &grading.monos {
            offsets.push(acc);
            acc += ms.len();
        }
        offsets.push(acc);
        Ok(TruncatedBasis { dom: *dom, lambda, grading, offsets, series, gram, chol })
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.dom
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn max_degree(&self) -> usize {
        self.grading.monos.len() - 1
    }

    pub fn dim(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn monomials_of(&self, d: usize) -> &[MultiIndex] {
        &self.grading.monos[d]
    }

    /// All basis monomials in graded order.
    pub fn monomials(&self) -> impl Iterator<Item = &MultiIndex> {
        self.grading.monos.iter().flatten()
    }

    pub fn offset(&self, d: usize) -> usize {
        self.offsets[d]
    }

    /// Number of basis elements of degree `<= d`.
    pub fn dim_up_to(&self, d: usize) -> usize {
        self.offsets[d.min(self.max_degree()) + 1]
    }

    pub fn index_of(&self, alpha: &MultiIndex) -> Option<usize> {
        let d = alpha.degree() as usize;
        if d > self.max_degree() {
            return None;
        }
        self.grading.index[d].get(alpha).map(|i| self.offsets[d] + i)
    }

    pub fn degree_of_index(&self, i: usize) -> usize {
        self.offsets.partition_point(|&o| o <= i) - 1
    }

    pub fn series_block(&self, d: usize) -> &CMatrix {
        &self.series[d]
    }

    pub fn gram_block(&self, d: usize) -> &CMatrix {
        &self.gram[d]
    }

    /// Lower Cholesky factor `R_d` of `G_d`.
    pub fn cholesky_factor(&self, d: usize) -> &CMatrix {
        &self.chol[d]
    }

    /// `L_d = R_d^{-*}`; its columns are the orthonormal basis of degree `d`.
    pub fn change_of_basis(&self, d: usize) -> CMatrix {
        let r = &self.chol[d];
        let n = r.nrows();
        r.adjoint().solve_upper_triangular(&CMatrix::identity(n, n)).expect("Cholesky factor is nonsingular")
    }

    /// Monomial coordinates of `p`; terms above the cutoff are dropped.
    pub fn monomial_coords(&self, p: &Polynomial) -> Result<CVector> {
        if p.nvars() != self.dom.dim() {
            return Err(Error::DimensionMismatch { expected: self.dom.dim(), got: p.nvars() });
        }
        let mut v = CVector::zeros(self.dim());
        for (alpha, &c) in p.terms() {
            if let Some(i) = self.index_of(alpha) {
                v[i] = c;
            }
        }
        Ok(v)
    }

    /// Blockwise `y_d = R_d^* c_d`.
    pub fn to_orthonormal(&self, c: &CVector) -> CVector {
        let mut y = CVector::zeros(self.dim());
        for d in 0..=self.max_degree() {
            let (o, len) = (self.offsets[d], self.grading.monos[d].len());
            let seg = self.chol[d].adjoint() * c.rows(o, len);
            y.rows_mut(o, len).copy_from(&seg);
        }
        y
    }

    /// Blockwise `c_d = R_d^{-*} y_d`.
    pub fn from_orthonormal(&self, y: &CVector) -> CVector {
        let mut c = CVector::zeros(self.dim());
        for d in 0..=self.max_degree() {
            let (o, len) = (self.offsets[d], self.grading.monos[d].len());
            let seg = self.chol[d]
                .adjoint()
                .solve_upper_triangular(&y.rows(o, len).into_owned())
                .expect("Cholesky factor is nonsingular");
            c.rows_mut(o, len).copy_from(&seg);
        }
        c
    }

    /// Squared norm of a polynomial truncated to the basis.
    pub fn norm_sqr(&self, p: &Polynomial) -> Result<f64> {
        Ok(self.to_orthonormal(&self.monomial_coords(p)?).norm_squared())
    }

    /// Values `e_j(z)` of the orthonormal basis.
    pub fn eval_orthonormal(&self, z: &Point) -> Result<CVector> {
        if z.len() != self.dom.dim() {
            return Err(Error::DimensionMismatch { expected: self.dom.dim(), got: z.len() });
        }
        let mut out = CVector::zeros(self.dim());
        for d in 0..=self.max_degree() {
            let (o, len) = (self.offsets[d], self.grading.monos[d].len());
            // L^T m = conj(R^{-1} conj(m))
            let m = CVector::from_iterator(len, self.grading.monos[d].iter().map(|a| a.eval(z.coords()).conj()));
            let x = self.chol[d].solve_lower_triangular(&m).expect("Cholesky factor is nonsingular");
            out.rows_mut(o, len).copy_from(&x.map(|v| v.conj()));
        }
        Ok(out)
    }

    /// `sum_j e_j(z) conj(e_j(w))` over the truncated basis.
    pub fn partial_kernel(&self, z: &Point, w: &Point) -> Result<C64> {
        let ez = self.eval_orthonormal(z)?;
        let ew = self.eval_orthonormal(w)?;
        Ok(ew.dotc(&ez))
    }

    pub fn to_cache_json(&self) -> Result<String> {
        let blocks = (0..=self.max_degree())
            .map(|d| CacheBlock {
                degree: d,
                size: self.series[d].nrows(),
                series: row_major(&self.series[d]),
                gram: row_major(&self.gram[d]),
            })
            .collect();
        let file = CacheFile {
            format: CACHE_FORMAT.into(),
            version: CACHE_VERSION,
            header: CacheHeader { dom: self.dom, lambda: self.lambda, d: self.max_degree(), ordering: "grlex".into() },
            blocks,
        };
        serde_json::to_string(&file).map_err(|e| Error::Cache(e.to_string()))
    }

    pub fn from_cache_json(s: &str) -> Result<Self> {
        let file: CacheFile = serde_json::from_str(s).map_err(|e| Error::Cache(e.to_string()))?;
        if file.format != CACHE_FORMAT || file.version != CACHE_VERSION {
            return Err(Error::Cache(format!("unsupported cache {} v{}", file.format, file.version)));
        }
        if file.header.ordering != "grlex" {
            return Err(Error::Cache(format!("unsupported ordering {}", file.header.ordering)));
        }
        let h = file.header;
        require_continuous(&h.dom, h.lambda)?;
        let grading = Grading::new(h.dom.dim(), h.d);
        if file.blocks.len() != h.d + 1 {
            return Err(Error::Cache("block count does not match header".into()));
        }
        let mut series = Vec::with_capacity(h.d + 1);
        let mut gram = Vec::with_capacity(h.d + 1);
        for (d, b) in file.blocks.into_iter().enumerate() {
            let size = grading.monos[d].len();
            if b.degree != d || b.size != size {
                return Err(Error::Cache(format!("block {d} has wrong shape")));
            }
            series.push(from_row_major(size, &b.series)?);
            gram.push(from_row_major(size, &b.gram)?);
        }
        Self::assemble(&h.dom, h.lambda, grading, series, gram, ExecMode::default())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_cache_json()?).map_err(|e| Error::Cache(e.to_string()))
    }

    /// Loads a cached basis and checks that it was built for `(dom, lambda, D)`.
    pub fn load(path: &Path, dom: &DomainSpec, lambda: f64, d_max: usize) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Cache(e.to_string()))?;
        let b = Self::from_cache_json(&s)?;
        if b.dom != *dom || b.lambda != lambda || b.max_degree() != d_max {
            return Err(Error::Cache("cache header does not match the request".into()));
        }
        Ok(b)
    }
}

#[derive(Serialize, Deserialize)]
struct CacheHeader {
    dom: DomainSpec,
    lambda: f64,
    #[serde(rename = "D")]
    d: usize,
    ordering: String,
}

#[derive(Serialize, Deserialize)]
struct CacheBlock {
    degree: usize,
    size: usize,
    series: Vec<[f64; 2]>,
    gram: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format: String,
    version: u32,
    header: CacheHeader,
    blocks: Vec<CacheBlock>,
}

fn row_major(m: &CMatrix) -> Vec<[f64; 2]> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push([m[(i, j)].re, m[(i, j)].im]);
        }
    }
    out
}

fn from_row_major(size: usize, v: &[[f64; 2]]) -> Result<CMatrix> {
    if v.len() != size * size {
        return Err(Error::Cache("matrix payload has wrong length".into()));
    }
    Ok(CMatrix::from_fn(size, size, |i, j| c64(v[i * size + j][0], v[i * size + j][1])))
}

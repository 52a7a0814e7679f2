//! Dense complex linear-algebra helpers shared by the modules.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

#[inline]
pub fn real(re: f64) -> C64 {
    Complex::new(re, 0.0)
}

/// Singular values in non-increasing order.
pub fn singular_values(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Largest singular value (0 for empty matrices).
pub fn op_norm(m: &CMatrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Number of singular values above `rel_tol * sigma_max`.
pub fn numerical_rank(m: &CMatrix, rel_tol: f64) -> usize {
    let s = singular_values(m);
    rank_from_singular_values(&s, rel_tol)
}

pub fn rank_from_singular_values(s: &[f64], rel_tol: f64) -> usize {
    match s.first() {
        Some(&smax) if smax > 0.0 => s.iter().filter(|&&x| x > rel_tol * smax).count(),
        _ => 0,
    }
}

/// Reciprocal 2-norm condition number of a square matrix.
pub fn rcond(m: &CMatrix) -> f64 {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    }
}

pub fn inverse(m: &CMatrix) -> Result<CMatrix> {
    m.clone().lu().try_inverse().ok_or(Error::NumericallySingular { condition: f64::INFINITY })
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Eigenvalues are clamped at zero before the root is taken.
pub fn hermitian_sqrt(m: &CMatrix) -> CMatrix {
    let h = (m + m.adjoint()) * real(0.5);
    let eig = SymmetricEigen::new(h);
    let roots = eig.eigenvalues.map(|x| real(x.max(0.0).sqrt()));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&roots) * v.adjoint()
}

/// Eigenvalues of a Hermitian matrix, ascending.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    let h = (m + m.adjoint()) * real(0.5);
    let mut ev: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = CMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[(i, j)];
            if aij == C64::default() {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Complex Schur factorization `m = q * t * q^*` with `t` upper triangular.
pub fn schur(m: &CMatrix) -> (CMatrix, CMatrix) {
    let (q, mut t) = Schur::new(m.clone()).unpack();
    // Clear rounding noise below the diagonal.
    for j in 0..t.ncols() {
        for i in (j + 1)..t.nrows() {
            t[(i, j)] = C64::default();
        }
    }
    (q, t)
}

/// Eigenvalues read from the complex Schur form.
pub fn eigenvalues(m: &CMatrix) -> Vec<C64> {
    let (_, t) = schur(m);
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

fn norm1(m: &CMatrix) -> f64 {
    (0..m.ncols()).map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

fn integer_power(m: &CMatrix, mut e: u64) -> CMatrix {
    let n = m.nrows();
    let mut result = CMatrix::identity(n, n);
    let mut base = m.clone();
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Principal square root of an upper-triangular matrix (column recurrence).
fn sqrt_upper_triangular(t: &CMatrix) -> CMatrix {
    let n = t.nrows();
    let mut r = CMatrix::zeros(n, n);
    for j in 0..n {
        r[(j, j)] = t[(j, j)].sqrt();
        for i in (0..j).rev() {
            let mut s = t[(i, j)];
            for k in (i + 1)..j {
                s -= r[(i, k)] * r[(k, j)];
            }
            r[(i, j)] = s / (r[(i, i)] + r[(j, j)]);
        }
    }
    r
}

fn exp_series(a: &CMatrix) -> CMatrix {
    let n = a.nrows();
    let nrm = norm1(a);
    let mut squarings = 0u32;
    if nrm > 0.5 {
        squarings = (nrm / 0.5).log2().ceil() as u32;
    }
    let scaled = a * real(0.5f64.powi(squarings as i32));
    let mut term = CMatrix::identity(n, n);
    let mut sum = term.clone();
    for k in 1..40 {
        term = &term * &scaled * real(1.0 / k as f64);
        sum += &term;
        if norm1(&term) < 1e-18 * norm1(&sum) {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// Principal real power `m^s`.
///
/// Integer exponents use repeated squaring (with one LU inverse for negative
/// exponents). Other exponents use the complex Schur form followed by inverse
/// scaling and squaring on the triangular factor. Fails when an eigenvalue
/// lies on the closed negative real axis.
pub fn powm(m: &CMatrix, s: f64) -> Result<CMatrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch { expected: n, got: m.ncols() });
    }
    if s == 0.0 {
        return Ok(CMatrix::identity(n, n));
    }
    if s.fract() == 0.0 && s.abs() < 1e9 {
        let e = s.abs() as u64;
        return if s > 0.0 { Ok(integer_power(m, e)) } else { Ok(integer_power(&inverse(m)?, e)) };
    }
    let (q, t) = schur(m);
    for i in 0..n {
        let d = t[(i, i)];
        if d.norm() == 0.0 || (d.im == 0.0 && d.re < 0.0) {
            return Err(Error::Precondition(format!(
                "fractional power of a matrix with eigenvalue {d} on the branch cut"
            )));
        }
    }
    let eye = CMatrix::identity(n, n);
    let mut y = t;
    let mut roots = 0i32;
    while norm1(&(&y - &eye)) > 0.25 && roots < 60 {
        y = sqrt_upper_triangular(&y);
        roots += 1;
    }
    // log(I + F) by its Taylor series; ||F||_1 <= 1/4.
    let f = &y - &eye;
    let mut log = CMatrix::zeros(n, n);
    let mut pow = f.clone();
    for k in 1..80 {
        let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
        let term = &pow * real(sign / k as f64);
        log += &term;
        if norm1(&term) <= 1e-18 * norm1(&log).max(f64::MIN_POSITIVE) {
            break;
        }
        pow = &pow * &f;
    }
    let scaled = log * real(s * 2f64.powi(roots));
    let r = exp_series(&scaled);
    Ok(&q * r * q.adjoint())
}

/// Frobenius norm.
pub fn fro(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

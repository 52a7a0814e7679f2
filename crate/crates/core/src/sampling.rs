//! Seeded random points and random commuting operator tuples.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::domain::{DomainKind, DomainSpec, Point};
use crate::linalg::{c64, op_norm, real, CMatrix, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_c64<R: Rng>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Haar-distributed unitary (QR of a Gaussian matrix with phase fix).
pub fn random_unitary<R: Rng>(n: usize, rng: &mut R) -> CMatrix {
    let qr = gaussian_matrix(n, n, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let phases = CMatrix::from_fn(n, n, |i, j| {
        if i == j && r[(i, i)].norm() > 0.0 {
            r[(i, i)] / r[(i, i)].norm()
        } else if i == j {
            real(1.0)
        } else {
            C64::default()
        }
    });
    q * phases
}

/// A random point with spectral norm strictly below `radius`.
pub fn random_interior_point<R: Rng>(dom: &DomainSpec, radius: f64, rng: &mut R) -> Point {
    let n = dom.dim();
    match dom.kind() {
        DomainKind::Polydisc { .. } => Point::from_vec(
            (0..n)
                .map(|_| {
                    let rho = radius * rng.gen::<f64>().sqrt();
                    let th = rng.gen::<f64>() * std::f64::consts::TAU;
                    C64::from_polar(rho, th)
                })
                .collect(),
        ),
        _ => {
            let g = Point::from_vec((0..n).map(|_| gaussian_c64(rng)).collect());
            let nrm = dom.spectral_norm(&g).unwrap_or(1.0).max(f64::MIN_POSITIVE);
            let rho = radius * rng.gen::<f64>().powf(1.0 / (2.0 * n as f64));
            g.scale(real(rho / nrm))
        }
    }
}

/// A random point of the Shilov boundary: the unit sphere, the torus, or the
/// `r x c` matrices with orthonormal rows.
pub fn random_shilov_point<R: Rng>(dom: &DomainSpec, rng: &mut R) -> Point {
    match dom.kind() {
        DomainKind::Ball { n } => {
            let g = Point::from_vec((0..n).map(|_| gaussian_c64(rng)).collect());
            let nrm = g.0.norm();
            g.scale(real(1.0 / nrm))
        }
        DomainKind::Polydisc { n } => {
            Point::from_vec((0..n).map(|_| C64::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)).collect())
        }
        DomainKind::MatrixBall { r, cols } => {
            let g = gaussian_matrix(cols, r, rng);
            let q = g.qr().q();
            Point::from_matrix(&q.transpose())
        }
    }
}

/// A commuting tuple together with its joint eigenvalues (with multiplicity).
#[derive(Clone, Debug)]
pub struct CommutingSample {
    pub ops: Vec<CMatrix>,
    pub joint_eigenvalues: Vec<Point>,
}

/// `T_i = S D_i S^{-1}` with diagonal `D_i` whose joint eigenvalues lie in
/// the domain with spectral norm at most `radius`. With `repeated`, every
/// joint eigenvalue appears twice.
pub fn random_diagonalizable_tuple<R: Rng>(
    dom: &DomainSpec,
    h: usize,
    radius: f64,
    repeated: bool,
    rng: &mut R,
) -> CommutingSample {
    let distinct = if repeated { h.div_ceil(2) } else { h };
    let pts: Vec<Point> = (0..distinct).map(|_| random_interior_point(dom, radius, rng)).collect();
    let joint: Vec<Point> = (0..h).map(|k| pts[if repeated { k / 2 } else { k }].clone()).collect();
    let s = well_conditioned(h, rng);
    let s_inv = s.clone().try_inverse().expect("well-conditioned by construction");
    let ops = (0..dom.dim())
        .map(|i| {
            let d = CMatrix::from_fn(h, h, |a, b| if a == b { joint[a][i] } else { C64::default() });
            &s * d * &s_inv
        })
        .collect();
    CommutingSample { ops, joint_eigenvalues: joint }
}

/// A non-normal commuting tuple `T_i = a_i A + b_i A^2` where `A` carries a
/// Jordan block. The tuple is rescaled so that its joint spectrum has
/// spectral norm at most `radius`.
pub fn random_nonnormal_tuple<R: Rng>(dom: &DomainSpec, h: usize, radius: f64, rng: &mut R) -> CommutingSample {
    let lam: Vec<C64> = (0..h)
        .map(|k| {
            // pair up eigenvalues so that each pair forms a 2x2 Jordan block
            if k % 2 == 1 {
                C64::default()
            } else {
                C64::from_polar(0.6 * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU)
            }
        })
        .collect();
    let lam: Vec<C64> = (0..h).map(|k| lam[k - k % 2]).collect();
    let mut j = CMatrix::from_fn(h, h, |a, b| if a == b { lam[a] } else { C64::default() });
    for k in (0..h.saturating_sub(1)).step_by(2) {
        j[(k, k + 1)] = real(0.5);
    }
    let s = well_conditioned(h, rng);
    let s_inv = s.clone().try_inverse().expect("well-conditioned by construction");
    let a = &s * j * &s_inv;
    let a2 = &a * &a;
    let n = dom.dim();
    let coef: Vec<(C64, C64)> = (0..n).map(|_| (gaussian_c64(rng), gaussian_c64(rng) * 0.5)).collect();
    let joint: Vec<Point> =
        lam.iter().map(|&l| Point::from_vec(coef.iter().map(|&(ca, cb)| ca * l + cb * l * l).collect())).collect();
    let max = joint.iter().map(|p| dom.spectral_norm(p).unwrap_or(0.0)).fold(0.0, f64::max);
    let scale = if max > 0.0 { radius * rng.gen_range(0.5..1.0) / max } else { 1.0 };
    let ops = coef.iter().map(|&(ca, cb)| (&a * ca + &a2 * cb) * real(scale)).collect();
    let joint = joint.into_iter().map(|p| p.scale(real(scale))).collect();
    CommutingSample { ops, joint_eigenvalues: joint }
}

/// An upper triangular commuting tuple `T_i = a_i A + b_i A^2`, where `A` is
/// upper triangular with 2x2 Jordan blocks on the diagonal. Triangular
/// tuples keep their joint eigenvalues exactly readable from the diagonal.
pub fn random_triangular_tuple<R: Rng>(dom: &DomainSpec, h: usize, radius: f64, rng: &mut R) -> CommutingSample {
    let mut a = CMatrix::zeros(h, h);
    for k in 0..h {
        let base = k - k % 2;
        if k == base {
            a[(k, k)] = C64::from_polar(0.7 * rng.gen::<f64>().sqrt(), rng.gen::<f64>() * std::f64::consts::TAU);
        } else {
            a[(k, k)] = a[(base, base)];
            a[(base, k)] = real(0.5);
        }
        for j in k + 1..h {
            a[(k, j)] += gaussian_c64(rng) * 0.05;
        }
    }
    let a2 = &a * &a;
    let coef: Vec<(C64, C64)> = (0..dom.dim()).map(|_| (gaussian_c64(rng), gaussian_c64(rng) * 0.3)).collect();
    let joint: Vec<Point> = (0..h)
        .map(|k| Point::from_vec(coef.iter().map(|&(x, y)| x * a[(k, k)] + y * a[(k, k)] * a[(k, k)]).collect()))
        .collect();
    let max = joint.iter().map(|p| dom.spectral_norm(p).unwrap_or(0.0)).fold(0.0, f64::max);
    let scale = if max > 0.0 { radius / max } else { 1.0 };
    let ops = coef.iter().map(|&(x, y)| (&a * x + &a2 * y) * real(scale)).collect();
    let joint = joint.into_iter().map(|p| p.scale(real(scale))).collect();
    CommutingSample { ops, joint_eigenvalues: joint }
}

fn well_conditioned<R: Rng>(h: usize, rng: &mut R) -> CMatrix {
    let g = gaussian_matrix(h, h, rng);
    let g = &g * real(0.4 / op_norm(&g).max(1.0));
    CMatrix::identity(h, h) + g
}

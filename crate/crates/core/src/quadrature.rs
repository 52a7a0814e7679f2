//! Cubature for the normalized invariant measure on the Shilov boundary.
//!
//! Circle and torus use (product) trapezoid rules, which are spectrally
//! accurate for the analytic integrands used here. Spheres use a Halton
//! sequence pushed forward to the sphere, with equal weights.

use std::f64::consts::TAU;

use crate::domain::{DomainKind, DomainSpec, Point};
use crate::error::{Error, Result};
use crate::linalg::C64;

const HALTON_BASES: [u64; 16] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53];
const MAX_NODES: usize = 1 << 26;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuadratureFamily {
    Circle,
    Torus,
    Sphere,
}

#[derive(Clone, Debug)]
pub struct ShilovQuadrature {
    pub family: QuadratureFamily,
    pub level: u32,
    pub nodes: Vec<Point>,
    pub weights: Vec<f64>,
}

impl ShilovQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Documented accuracy class of the rule.
    pub fn tolerance_class(&self) -> f64 {
        match self.family {
            QuadratureFamily::Circle | QuadratureFamily::Torus => 1e-9,
            QuadratureFamily::Sphere => 1e-3,
        }
    }

    pub fn integrate(&self, f: impl Fn(&Point) -> C64) -> C64 {
        self.nodes.iter().zip(&self.weights).map(|(z, &w)| f(z) * w).sum()
    }
}

/// Number of nodes [`shilov_quadrature`] produces at `level`.
pub fn node_count(dom: &DomainSpec, level: u32) -> Result<usize> {
    let count = match dom.kind() {
        DomainKind::Ball { n: 1 } => 1usize.checked_shl(level),
        DomainKind::Polydisc { n } => 1usize.checked_shl(level).and_then(|m| m.checked_pow(n as u32)),
        DomainKind::Ball { .. } => 4usize.checked_pow(level).and_then(|m| m.checked_mul(1000)),
        DomainKind::MatrixBall { .. } => {
            return Err(Error::UnsupportedDomain(format!("no boundary quadrature for {dom}")));
        }
    };
    match count {
        Some(c) if c <= MAX_NODES => Ok(c),
        _ => Err(Error::Precondition(format!("quadrature level {level} on {dom} exceeds {MAX_NODES} nodes"))),
    }
}

pub fn shilov_quadrature(dom: &DomainSpec, level: u32) -> Result<ShilovQuadrature> {
    if level < 1 {
        return Err(Error::Precondition("quadrature level must be >= 1".into()));
    }
    let count = node_count(dom, level)?;
    let weight = 1.0 / count as f64;
    let (family, nodes) = match dom.kind() {
        DomainKind::Ball { n: 1 } => (QuadratureFamily::Circle, torus_nodes(1, 1 << level)),
        DomainKind::Polydisc { n } => (QuadratureFamily::Torus, torus_nodes(n, 1 << level)),
        DomainKind::Ball { n } => (QuadratureFamily::Sphere, sphere_nodes(n, count)?),
        DomainKind::MatrixBall { .. } => unreachable!("rejected by node_count"),
    };
    Ok(ShilovQuadrature { family, level, nodes, weights: vec![weight; count] })
}

fn torus_nodes(n: usize, m: usize) -> Vec<Point> {
    let roots: Vec<C64> = (0..m).map(|k| C64::from_polar(1.0, TAU * k as f64 / m as f64)).collect();
    let total = m.pow(n as u32);
    (0..total).map(|idx| Point::from_fn(n, |i| roots[(idx / m.pow(i as u32)) % m])).collect()
}

fn radical_inverse(mut i: u64, base: u64) -> f64 {
    let inv = 1.0 / base as f64;
    let mut f = inv;
    let mut x = 0.0;
    while i > 0 {
        x += (i % base) as f64 * f;
        i /= base;
        f *= inv;
    }
    x
}

/// Halton points on `S^{2n-1}`: squared moduli are uniform on the simplex
/// (stick-breaking) and phases are uniform, independent of the moduli.
fn sphere_nodes(n: usize, count: usize) -> Result<Vec<Point>> {
    let dims = 2 * n - 1;
    if dims > HALTON_BASES.len() {
        return Err(Error::UnsupportedDomain(format!(
            "sphere quadrature supports at most ball({})",
            HALTON_BASES.len().div_ceil(2)
        )));
    }
    Ok((1..=count as u64)
        .map(|i| {
            let u: Vec<f64> = HALTON_BASES[..dims].iter().map(|&b| radical_inverse(i, b)).collect();
            let mut rem = 1.0;
            let mut sq = Vec::with_capacity(n);
            for (k, &uk) in u[..n - 1].iter().enumerate() {
                let v = 1.0 - uk.powf(1.0 / (n - 1 - k) as f64);
                sq.push(rem * v);
                rem *= 1.0 - v;
            }
            sq.push(rem);
            Point::from_fn(n, |k| C64::from_polar(sq[k].max(0.0).sqrt(), TAU * u[n - 1 + k]))
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn compensated_sum(xs: &[f64]) -> f64 {
        let (mut s, mut c) = (0.0f64, 0.0f64);
        for &x in xs {
            let t = s + x;
            c += if s.abs() >= x.abs() { (s - t) + x } else { (x - t) + s };
            s = t;
        }
        s + c
    }

    #[test]
    fn circle_level_three() {
        let q = shilov_quadrature(&DomainSpec::ball(1).unwrap(), 3).unwrap();
        assert_eq!(q.family, QuadratureFamily::Circle);
        assert_eq!(q.len(), 8);
        for (z, &w) in q.nodes.iter().zip(&q.weights) {
            assert!((z[0].norm() - 1.0).abs() < 1e-15);
            assert_eq!(w, 0.125);
        }
        assert!((q.nodes[2][0] - C64::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn weights_sum_to_one() {
        for (dom, level) in [
            (DomainSpec::polydisc(2).unwrap(), 5),
            (DomainSpec::ball(2).unwrap(), 2),
            (DomainSpec::ball(3).unwrap(), 1),
        ] {
            let q = shilov_quadrature(&dom, level).unwrap();
            assert!(q.weights.iter().all(|&w| w > 0.0));
            assert!((compensated_sum(&q.weights) - 1.0).abs() < 1e-14);
            assert_eq!(q.len(), node_count(&dom, level).unwrap());
        }
    }

    #[test]
    fn nodes_lie_on_the_boundary() {
        let t = shilov_quadrature(&DomainSpec::polydisc(3).unwrap(), 2).unwrap();
        assert!(t.nodes.iter().all(|z| z.coords().iter().all(|c| (c.norm() - 1.0).abs() < 1e-15)));
        let s = shilov_quadrature(&DomainSpec::ball(3).unwrap(), 1).unwrap();
        assert!(s.nodes.iter().all(|z| (z.0.norm() - 1.0).abs() < 1e-14));
    }

    #[test]
    fn sphere_moments() {
        let q = shilov_quadrature(&DomainSpec::ball(2).unwrap(), 3).unwrap();
        let bound = 3.0 / (q.len() as f64).sqrt();
        assert!((q.integrate(|_| C64::new(1.0, 0.0)) - 1.0).norm() < 1e-12);
        assert!(q.integrate(|z| z[0]).norm() < bound);
        // |z1|^2 has mean 1/n; |z1|^2 |z2|^2 has mean 1/(n(n+1))
        assert!((q.integrate(|z| C64::from(z[0].norm_sqr())).re - 0.5).abs() < bound);
        assert!((q.integrate(|z| C64::from(z[0].norm_sqr() * z[1].norm_sqr())).re - 1.0 / 6.0).abs() < bound);
    }

    #[test]
    fn unsupported_requests() {
        assert!(matches!(
            shilov_quadrature(&DomainSpec::matrix_ball(2, 2).unwrap(), 2),
            Err(Error::UnsupportedDomain(_))
        ));
        assert!(shilov_quadrature(&DomainSpec::ball(1).unwrap(), 0).is_err());
        assert!(shilov_quadrature(&DomainSpec::polydisc(4).unwrap(), 10).is_err());
    }
}

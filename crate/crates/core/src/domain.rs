//! Jordan-triple geometry of the supported bounded symmetric domains: the
//! Euclidean ball, the polydisc, and the type-I matrix ball
//! `{ z in C^{r x c} : I - z z^* > 0 }`.
//!
//! Points are flat coordinate vectors. A matrix-ball point is the row-major
//! flattening of an `r x c` matrix, and a ball point is a `1 x n` matrix.

use std::fmt;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, hermitian_sqrt, op_norm, rcond, real, CMatrix, CVector, C64};
use crate::poly::{poly_adjugate, poly_det, MultiIndex, Polynomial, RationalSymbol};

/// Reciprocal-condition threshold below which a Bergman operator is
/// treated as singular.
pub const BERGMAN_RCOND_MIN: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum DomainKind {
    Ball { n: usize },
    Polydisc { n: usize },
    MatrixBall { r: usize, cols: usize },
}

/// One of the supported domains together with its numerical invariants.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DomainSpec {
    kind: DomainKind,
}

impl DomainSpec {
    pub fn ball(n: usize) -> Result<Self> {
        Self::new(DomainKind::Ball { n })
    }

    pub fn polydisc(n: usize) -> Result<Self> {
        Self::new(DomainKind::Polydisc { n })
    }

    pub fn matrix_ball(r: usize, cols: usize) -> Result<Self> {
        Self::new(DomainKind::MatrixBall { r, cols })
    }

    pub fn new(kind: DomainKind) -> Result<Self> {
        match kind {
            DomainKind::Ball { n } | DomainKind::Polydisc { n } if n == 0 => {
                Err(Error::InvalidDomain("dimension must be positive".into()))
            }
            DomainKind::MatrixBall { r, cols } if r == 0 || cols < r => {
                Err(Error::InvalidDomain(format!("matrix ball needs 1 <= r <= cols, got r={r}, cols={cols}")))
            }
            _ => Ok(DomainSpec { kind }),
        }
    }

    pub fn kind(&self) -> DomainKind {
        self.kind
    }

    pub fn rank(&self) -> usize {
        match self.kind {
            DomainKind::Ball { .. } => 1,
            DomainKind::Polydisc { n } => n,
            DomainKind::MatrixBall { r, .. } => r,
        }
    }

    /// Peirce invariant `a`. The ball carries `a = 2` as a type-I label; it
    /// never enters a formula because every such term has a factor `r - 1`.
    pub fn a(&self) -> usize {
        match self.kind {
            DomainKind::Polydisc { .. } => 0,
            _ => 2,
        }
    }

    pub fn b(&self) -> usize {
        match self.kind {
            DomainKind::Ball { n } => n - 1,
            DomainKind::Polydisc { .. } => 0,
            DomainKind::MatrixBall { r, cols } => cols - r,
        }
    }

    /// Genus `N = 2 + a (r - 1) + b`.
    pub fn genus(&self) -> usize {
        2 + self.a() * (self.rank() - 1) + self.b()
    }

    /// Complex dimension.
    pub fn dim(&self) -> usize {
        match self.kind {
            DomainKind::Ball { n } | DomainKind::Polydisc { n } => n,
            DomainKind::MatrixBall { r, cols } => r * cols,
        }
    }

    /// Szegő exponent `n / r` (the Hardy-space weight).
    pub fn hardy_weight(&self) -> f64 {
        self.dim() as f64 / self.rank() as f64
    }

    /// Drury-Arveson weight `(r - 1) a / 2 + 1`.
    pub fn drury_arveson_weight(&self) -> f64 {
        (self.rank() - 1) as f64 * self.a() as f64 / 2.0 + 1.0
    }

    /// Threshold of the continuous Wallach part, `(r - 1) a / 2`.
    pub fn continuous_threshold(&self) -> f64 {
        (self.rank() - 1) as f64 * self.a() as f64 / 2.0
    }

    /// Matrix shape for the type-I families.
    pub fn matrix_shape(&self) -> Option<(usize, usize)> {
        match self.kind {
            DomainKind::Ball { n } => Some((1, n)),
            DomainKind::MatrixBall { r, cols } => Some((r, cols)),
            DomainKind::Polydisc { .. } => None,
        }
    }

    fn check(&self, p: &Point) -> Result<()> {
        if p.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: p.len() });
        }
        Ok(())
    }

    /// Jordan triple product `{u v^* w}`.
    pub fn triple_product(&self, u: &Point, v: &Point, w: &Point) -> Result<Point> {
        self.check(u)?;
        self.check(v)?;
        self.check(w)?;
        Ok(match self.matrix_shape() {
            Some((r, c)) => {
                let (um, vm, wm) = (u.as_matrix(r, c), v.as_matrix(r, c), w.as_matrix(r, c));
                let vs = vm.adjoint();
                let out = (&um * &vs * &wm + &wm * &vs * &um) * real(0.5);
                Point::from_matrix(&out)
            }
            None => Point::from_fn(self.dim(), |i| u[i] * v[i].conj() * w[i]),
        })
    }

    /// The Bergman endomorphism `B(u, v)` as a matrix acting on flattened
    /// coordinates, assembled from `w - 2{u v^* w} + {u {v w^* v}^* u}`.
    pub fn bergman_op(&self, u: &Point, v: &Point) -> Result<CMatrix> {
        self.check(u)?;
        self.check(v)?;
        let n = self.dim();
        let mut m = CMatrix::zeros(n, n);
        for k in 0..n {
            let e = Point::unit(n, k);
            let t1 = self.triple_product(u, v, &e)?;
            let inner = self.triple_product(v, &e, v)?;
            let t2 = self.triple_product(u, &inner, u)?;
            let col = &e.0 - t1.0 * real(2.0) + t2.0;
            m.set_column(k, &col);
        }
        Ok(m)
    }

    /// Closed form of `B(u, v) w`: `(I - u v^*) w (I - v^* u)` for the
    /// type-I families and `(1 - u_i conj v_i)^2 w_i` on the polydisc.
    pub fn bergman_apply_closed_form(&self, u: &Point, v: &Point, w: &Point) -> Result<Point> {
        self.check(u)?;
        self.check(v)?;
        self.check(w)?;
        Ok(match self.matrix_shape() {
            Some((r, c)) => {
                let (um, vm, wm) = (u.as_matrix(r, c), v.as_matrix(r, c), w.as_matrix(r, c));
                let left = CMatrix::identity(r, r) - &um * vm.adjoint();
                let right = CMatrix::identity(c, c) - vm.adjoint() * &um;
                Point::from_matrix(&(left * wm * right))
            }
            None => Point::from_fn(self.dim(), |i| {
                let f = real(1.0) - u[i] * v[i].conj();
                f * f * w[i]
            }),
        })
    }

    /// Quasi-inverse `z^xi = B(z, xi)^{-1} (z - {z xi^* z})`.
    pub fn quasi_inverse(&self, z: &Point, xi: &Point) -> Result<Point> {
        let b = self.bergman_op(z, xi)?;
        let rc = rcond(&b);
        if rc < BERGMAN_RCOND_MIN {
            return Err(Error::SingularBergmanOperator { rcond: rc });
        }
        let rhs = &z.0 - self.triple_product(z, xi, z)?.0;
        let sol = b.lu().solve(&rhs).ok_or(Error::SingularBergmanOperator { rcond: rc })?;
        Ok(Point(sol))
    }

    /// Closed form quasi-inverse: `(I - z xi^*)^{-1} z` for the type-I
    /// families, `z_i / (1 - z_i conj xi_i)` on the polydisc.
    pub fn quasi_inverse_closed_form(&self, z: &Point, xi: &Point) -> Result<Point> {
        self.check(z)?;
        self.check(xi)?;
        match self.matrix_shape() {
            Some((r, c)) => {
                let (zm, xm) = (z.as_matrix(r, c), xi.as_matrix(r, c));
                let m = CMatrix::identity(r, r) - &zm * xm.adjoint();
                let sol = m.lu().solve(&zm).ok_or(Error::SingularBergmanOperator { rcond: 0.0 })?;
                Ok(Point::from_matrix(&sol))
            }
            None => Ok(Point::from_fn(self.dim(), |i| z[i] / (real(1.0) - z[i] * xi[i].conj()))),
        }
    }

    /// Generic polynomial `Delta(z, w)`, normalized by `Delta(0, 0) = 1`.
    pub fn generic_poly(&self, z: &Point, w: &Point) -> Result<C64> {
        self.check(z)?;
        self.check(w)?;
        Ok(match self.kind {
            DomainKind::Ball { .. } => real(1.0) - z.0.dotc(&w.0).conj(),
            DomainKind::Polydisc { n } => (0..n).map(|i| real(1.0) - z[i] * w[i].conj()).product(),
            DomainKind::MatrixBall { r, cols } => {
                let m = CMatrix::identity(r, r) - z.as_matrix(r, cols) * w.as_matrix(r, cols).adjoint();
                m.determinant()
            }
        })
    }

    /// `Delta(z, w)^{-lambda}` as the product of principal powers of the
    /// factors `1 - mu`, `mu` ranging over the eigenvalues of `z w^*` (matrix
    /// families) or over `z_i conj w_i` (polydisc). This is the branch
    /// continuous along `t z`, `t in [0, 1]`.
    pub fn delta_factors(&self, z: &Point, w: &Point) -> Result<Vec<C64>> {
        self.check(z)?;
        self.check(w)?;
        Ok(match self.kind {
            DomainKind::Ball { .. } => vec![real(1.0) - z.0.dotc(&w.0).conj()],
            DomainKind::Polydisc { n } => (0..n).map(|i| real(1.0) - z[i] * w[i].conj()).collect(),
            DomainKind::MatrixBall { r, cols } => {
                let zw = z.as_matrix(r, cols) * w.as_matrix(r, cols).adjoint();
                crate::linalg::eigenvalues(&zw).into_iter().map(|mu| real(1.0) - mu).collect()
            }
        })
    }

    /// Spectral norm: Euclidean norm (ball), max modulus (polydisc), largest
    /// singular value (matrix ball).
    pub fn spectral_norm(&self, z: &Point) -> Result<f64> {
        self.check(z)?;
        Ok(match self.kind {
            DomainKind::Ball { .. } => z.0.norm(),
            DomainKind::Polydisc { .. } => z.0.iter().map(|c| c.norm()).fold(0.0, f64::max),
            DomainKind::MatrixBall { r, cols } => op_norm(&z.as_matrix(r, cols)),
        })
    }

    pub fn contains(&self, z: &Point) -> Result<bool> {
        Ok(self.spectral_norm(z)? < 1.0)
    }

    /// `Delta` as a polynomial in `2n` variables: `z_1..z_n` followed by
    /// `conj(w_1)..conj(w_n)`.
    pub fn generic_poly_bilinear(&self) -> Polynomial {
        let n = self.dim();
        let nv = 2 * n;
        let x = |i: usize| Polynomial::var(nv, i);
        let y = |i: usize| Polynomial::var(nv, n + i);
        let one = Polynomial::one(nv);
        match self.kind {
            DomainKind::Ball { .. } => {
                let mut s = one;
                for i in 0..n {
                    s = &s - &(&x(i) * &y(i));
                }
                s
            }
            DomainKind::Polydisc { .. } => {
                let mut s = one.clone();
                for i in 0..n {
                    s = &s * &(&one - &(&x(i) * &y(i)));
                }
                s
            }
            DomainKind::MatrixBall { r, cols } => {
                let m: Vec<Vec<Polynomial>> = (0..r)
                    .map(|i| {
                        (0..r)
                            .map(|j| {
                                let mut e = if i == j { one.clone() } else { Polynomial::zero(nv) };
                                for k in 0..cols {
                                    e = &e - &(&x(i * cols + k) * &y(j * cols + k));
                                }
                                e
                            })
                            .collect()
                    })
                    .collect();
                poly_det(&m, nv)
            }
        }
    }

    /// `z -> Delta(z, w)` for fixed `w`, as a polynomial in `z`.
    pub fn generic_poly_in_z(&self, w: &Point) -> Result<Polynomial> {
        self.check(w)?;
        let n = self.dim();
        let wbar: Vec<C64> = w.0.iter().map(|c| c.conj()).collect();
        let bil = self.generic_poly_bilinear();
        let mut out = Polynomial::zero(n);
        for (alpha, c) in bil.terms() {
            let (zpart, wpart) = alpha.0.split_at(n);
            let coef = MultiIndex(wpart.to_vec()).eval(&wbar) * c;
            out.add_term(MultiIndex(zpart.to_vec()), coef);
        }
        Ok(out)
    }

    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            DomainKind::Ball { n } => write!(f, "ball({n})"),
            DomainKind::Polydisc { n } => write!(f, "polydisc({n})"),
            DomainKind::MatrixBall { r, cols } => write!(f, "matrixball({r}x{cols})"),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DomainRepr {
    kind: String,
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    r: Option<usize>,
}

impl Serialize for DomainSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let repr = match self.kind {
            DomainKind::Ball { n } => DomainRepr { kind: "ball".into(), n, r: None },
            DomainKind::Polydisc { n } => DomainRepr { kind: "polydisc".into(), n, r: None },
            DomainKind::MatrixBall { r, cols } => DomainRepr { kind: "matrixball".into(), n: cols, r: Some(r) },
        };
        repr.serialize(s)
    }
}

impl<'de> Deserialize<'de> for DomainSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let repr = DomainRepr::deserialize(d)?;
        let kind = match (repr.kind.as_str(), repr.r) {
            ("ball", None) => DomainKind::Ball { n: repr.n },
            ("polydisc", None) => DomainKind::Polydisc { n: repr.n },
            ("matrixball", Some(r)) => DomainKind::MatrixBall { r, cols: repr.n },
            ("matrixball", None) => return Err(D::Error::custom("matrixball requires field `r`")),
            (k, Some(_)) if k == "ball" || k == "polydisc" => {
                return Err(D::Error::custom("field `r` is only valid for matrixball"))
            }
            (k, _) => return Err(D::Error::custom(format!("unknown domain kind `{k}`"))),
        };
        DomainSpec::new(kind).map_err(D::Error::custom)
    }
}

/// A point of `C^n` in flattened coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct Point(pub CVector);

impl Point {
    pub fn zeros(n: usize) -> Self {
        Point(CVector::zeros(n))
    }

    pub fn unit(n: usize, k: usize) -> Self {
        let mut v = CVector::zeros(n);
        v[k] = real(1.0);
        Point(v)
    }

    pub fn from_vec(v: Vec<C64>) -> Self {
        Point(DVector::from_vec(v))
    }

    pub fn from_fn(n: usize, f: impl Fn(usize) -> C64) -> Self {
        Point(DVector::from_fn(n, |i, _| f(i)))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn coords(&self) -> &[C64] {
        self.0.as_slice()
    }

    /// Row-major `r x c` view.
    pub fn as_matrix(&self, r: usize, c: usize) -> CMatrix {
        CMatrix::from_row_slice(r, c, self.0.as_slice())
    }

    pub fn from_matrix(m: &CMatrix) -> Self {
        let (r, c) = m.shape();
        Point::from_fn(r * c, |k| m[(k / c, k % c)])
    }

    pub fn scale(&self, s: C64) -> Point {
        Point(&self.0 * s)
    }

    pub fn neg(&self) -> Point {
        Point(-&self.0)
    }

    pub fn dist(&self, other: &Point) -> f64 {
        (&self.0 - &other.0).norm()
    }
}

impl std::ops::Index<usize> for Point {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.0[i]
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.0.iter().map(|c| [c.re, c.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Repr {
            Flat(Vec<[f64; 2]>),
            Rows(Vec<Vec<[f64; 2]>>),
        }
        let pairs = match Repr::deserialize(d)? {
            Repr::Flat(v) => v,
            Repr::Rows(rows) => rows.into_iter().flatten().collect(),
        };
        Ok(Point::from_vec(pairs.into_iter().map(|[re, im]| c64(re, im)).collect()))
    }
}

/// The Möbius transformation `g_{z0}(w) = z0 + B(z0, z0)^{1/2} w^{-z0}`.
#[derive(Clone, Debug)]
pub struct MobiusMap {
    dom: DomainSpec,
    z0: Point,
    sqrt_bergman: CMatrix,
}

impl MobiusMap {
    pub fn new(z0: &Point, dom: &DomainSpec) -> Result<Self> {
        let norm = dom.spectral_norm(z0)?;
        if norm >= 1.0 {
            return Err(Error::PointOutsideDomain { norm });
        }
        let b = dom.bergman_op(z0, z0)?;
        Ok(MobiusMap { dom: *dom, z0: z0.clone(), sqrt_bergman: hermitian_sqrt(&b) })
    }

    pub fn center(&self) -> &Point {
        &self.z0
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.dom
    }

    /// `B(z0, z0)^{1/2}` on flattened coordinates.
    pub fn sqrt_bergman(&self) -> &CMatrix {
        &self.sqrt_bergman
    }

    pub fn apply(&self, w: &Point) -> Result<Point> {
        let qi = self.dom.quasi_inverse(w, &self.z0.neg())?;
        Ok(Point(&self.z0.0 + &self.sqrt_bergman * qi.0))
    }

    /// `g_{-z0}`, the inverse map.
    pub fn inverse(&self) -> Result<MobiusMap> {
        MobiusMap::new(&self.z0.neg(), &self.dom)
    }

    /// Components `g_i = p_i / q_i` as rational functions of `w`.
    ///
    /// Matrix families: `w^{-z0} = adj(I + w z0^*) w / det(I + w z0^*)`, so
    /// every component shares `q = det(I + w z0^*)`. Polydisc: component `i`
    /// has `q_i = 1 + w_i conj(z0_i)`.
    pub fn rational_components(&self) -> Vec<RationalSymbol> {
        let n = self.dom.dim();
        let one = Polynomial::one(n);
        let z0 = &self.z0;
        match self.dom.matrix_shape() {
            Some((r, c)) => {
                let wvar = |i: usize, k: usize| Polynomial::var(n, i * c + k);
                let m: Vec<Vec<Polynomial>> = (0..r)
                    .map(|i| {
                        (0..r)
                            .map(|j| {
                                let mut e = if i == j { one.clone() } else { Polynomial::zero(n) };
                                for k in 0..c {
                                    e = &e + &wvar(i, k).scale(z0[j * c + k].conj());
                                }
                                e
                            })
                            .collect()
                    })
                    .collect();
                let q = poly_det(&m, n);
                let adj = poly_adjugate(&m, n);
                // qi_num[(i,k)] = sum_j adj[i][j] * w[j][k]
                let qi_num: Vec<Polynomial> = (0..r * c)
                    .map(|idx| {
                        let (i, k) = (idx / c, idx % c);
                        let mut s = Polynomial::zero(n);
                        for (j, a) in adj[i].iter().enumerate() {
                            s = &s + &(a * &wvar(j, k));
                        }
                        s
                    })
                    .collect();
                (0..n)
                    .map(|i| {
                        let mut p = q.scale(z0[i]);
                        for (k, num) in qi_num.iter().enumerate() {
                            let l = self.sqrt_bergman[(i, k)];
                            if l != C64::default() {
                                p = &p + &num.scale(l);
                            }
                        }
                        RationalSymbol { p, q: q.clone() }
                    })
                    .collect()
            }
            None => (0..n)
                .map(|i| {
                    let q = &one + &Polynomial::var(n, i).scale(z0[i].conj());
                    let p = &q.scale(z0[i]) + &Polynomial::var(n, i).scale(self.sqrt_bergman[(i, i)]);
                    RationalSymbol { p, q }
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{random_interior_point, seeded_rng};

    #[test]
    fn invariants_of_each_family() {
        let b = DomainSpec::ball(3).unwrap();
        assert_eq!((b.rank(), b.a(), b.b(), b.genus(), b.dim()), (1, 2, 2, 4, 3));
        let p = DomainSpec::polydisc(4).unwrap();
        assert_eq!((p.rank(), p.a(), p.b(), p.genus(), p.dim()), (4, 0, 0, 2, 4));
        let m = DomainSpec::matrix_ball(2, 3).unwrap();
        assert_eq!((m.rank(), m.a(), m.b(), m.genus(), m.dim()), (2, 2, 1, 5, 6));
        for d in [b, p, m, DomainSpec::matrix_ball(3, 3).unwrap()] {
            let (r, a, bb) = (d.rank(), d.a(), d.b());
            assert_eq!(d.dim() * 2, 2 * r + a * r * (r - 1) + 2 * bb * r);
            assert_eq!(d.genus(), 2 + a * (r - 1) + bb);
        }
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(DomainSpec::ball(0).is_err());
        assert!(DomainSpec::matrix_ball(3, 2).is_err());
    }

    #[test]
    fn triple_product_examples() {
        let pd = DomainSpec::polydisc(2).unwrap();
        let one = Point::from_vec(vec![real(1.0), real(1.0)]);
        assert_eq!(pd.triple_product(&one, &one, &one).unwrap(), one);

        let b = DomainSpec::ball(2).unwrap();
        let e1 = Point::unit(2, 0);
        let e2 = Point::unit(2, 1);
        assert_eq!(b.triple_product(&e1, &e2, &e1).unwrap(), Point::zeros(2));

        let m = DomainSpec::matrix_ball(2, 2).unwrap();
        let id = Point::from_matrix(&CMatrix::identity(2, 2));
        assert_eq!(m.triple_product(&id, &id, &id).unwrap(), id);
    }

    #[test]
    fn triple_product_sesquilinearity() {
        let m = DomainSpec::matrix_ball(2, 3).unwrap();
        let mut rng = seeded_rng(5);
        let u = random_interior_point(&m, 0.9, &mut rng);
        let v = random_interior_point(&m, 0.9, &mut rng);
        let w = random_interior_point(&m, 0.9, &mut rng);
        let s = c64(0.3, -1.2);
        let lhs = m.triple_product(&u, &v.scale(s), &w).unwrap();
        let rhs = m.triple_product(&u, &v, &w).unwrap().scale(s.conj());
        assert!(lhs.dist(&rhs) < 1e-14);
        let lhs = m.triple_product(&u.scale(s), &v, &w).unwrap();
        let rhs = m.triple_product(&u, &v, &w).unwrap().scale(s);
        assert!(lhs.dist(&rhs) < 1e-14);
    }

    #[test]
    fn bergman_examples() {
        for d in
            [DomainSpec::ball(2).unwrap(), DomainSpec::polydisc(3).unwrap(), DomainSpec::matrix_ball(2, 2).unwrap()]
        {
            let z = Point::zeros(d.dim());
            let b = d.bergman_op(&z, &z).unwrap();
            assert_eq!(b, CMatrix::identity(d.dim(), d.dim()));
        }
        let d1 = DomainSpec::polydisc(1).unwrap();
        let h = Point::from_vec(vec![real(0.5)]);
        let b = d1.bergman_op(&h, &h).unwrap();
        assert!((b[(0, 0)] - real(9.0 / 16.0)).norm() < 1e-15);
    }

    #[test]
    fn bergman_definition_matches_closed_form() {
        let mut rng = seeded_rng(11);
        for d in
            [DomainSpec::ball(3).unwrap(), DomainSpec::polydisc(2).unwrap(), DomainSpec::matrix_ball(2, 2).unwrap()]
        {
            for _ in 0..50 {
                let u = random_interior_point(&d, 0.95, &mut rng);
                let v = random_interior_point(&d, 0.95, &mut rng);
                let w = random_interior_point(&d, 0.95, &mut rng);
                let b = d.bergman_op(&u, &v).unwrap();
                let lhs = Point(&b * &w.0);
                let rhs = d.bergman_apply_closed_form(&u, &v, &w).unwrap();
                assert!(lhs.dist(&rhs) < 1e-13, "{d}: {}", lhs.dist(&rhs));
            }
        }
    }

    #[test]
    fn bergman_is_hermitian_positive_definite_on_the_diagonal() {
        let mut rng = seeded_rng(12);
        for d in
            [DomainSpec::ball(2).unwrap(), DomainSpec::polydisc(2).unwrap(), DomainSpec::matrix_ball(2, 3).unwrap()]
        {
            for _ in 0..20 {
                let z = random_interior_point(&d, 0.99, &mut rng);
                let b = d.bergman_op(&z, &z).unwrap();
                assert!(crate::linalg::fro(&(&b - b.adjoint())) < 1e-14);
                assert!(crate::linalg::hermitian_eigenvalues(&b)[0] > 0.0);
            }
        }
    }

    #[test]
    fn quasi_inverse_examples() {
        let d1 = DomainSpec::polydisc(1).unwrap();
        let h = Point::from_vec(vec![real(0.5)]);
        let q = d1.quasi_inverse(&h, &h).unwrap();
        assert!((q[0] - real(2.0 / 3.0)).norm() < 1e-15);

        let mut rng = seeded_rng(3);
        for d in
            [DomainSpec::ball(2).unwrap(), DomainSpec::polydisc(3).unwrap(), DomainSpec::matrix_ball(2, 3).unwrap()]
        {
            for _ in 0..30 {
                let z = random_interior_point(&d, 0.9, &mut rng);
                let xi = random_interior_point(&d, 0.9, &mut rng);
                let zero = Point::zeros(d.dim());
                assert!(d.quasi_inverse(&z, &zero).unwrap().dist(&z) < 1e-15);
                let a = d.quasi_inverse(&z, &xi).unwrap();
                let b = d.quasi_inverse_closed_form(&z, &xi).unwrap();
                assert!(a.dist(&b) < 1e-12);
            }
        }
    }

    #[test]
    fn quasi_inverse_detects_singularity() {
        let d = DomainSpec::polydisc(1).unwrap();
        let one = Point::from_vec(vec![real(1.0)]);
        assert!(matches!(d.quasi_inverse(&one, &one), Err(Error::SingularBergmanOperator { .. })));
    }

    #[test]
    fn generic_poly_examples() {
        let b = DomainSpec::ball(2).unwrap();
        let z = Point::from_vec(vec![real(0.5), real(0.0)]);
        assert!((b.generic_poly(&z, &z).unwrap() - real(0.75)).norm() < 1e-15);
        let mut rng = seeded_rng(8);
        for d in [b, DomainSpec::polydisc(3).unwrap(), DomainSpec::matrix_ball(2, 3).unwrap()] {
            let o = Point::zeros(d.dim());
            assert_eq!(d.generic_poly(&o, &o).unwrap(), real(1.0));
            for _ in 0..100 {
                let z = random_interior_point(&d, 1.0, &mut rng);
                let w = random_interior_point(&d, 1.0, &mut rng);
                let a = d.generic_poly(&z, &w).unwrap();
                let bb = d.generic_poly(&w, &z).unwrap();
                assert!((a - bb.conj()).norm() < 1e-14);
                // the bilinear polynomial agrees with the closed form
                let mut args: Vec<C64> = z.coords().to_vec();
                args.extend(w.coords().iter().map(|c| c.conj()));
                assert!((d.generic_poly_bilinear().eval(&args) - a).norm() < 1e-13);
                let factors: C64 = d.delta_factors(&z, &w).unwrap().into_iter().product();
                assert!((factors - a).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn delta_nonvanishing_for_interior_pairs() {
        let mut rng = seeded_rng(21);
        for d in
            [DomainSpec::ball(2).unwrap(), DomainSpec::polydisc(2).unwrap(), DomainSpec::matrix_ball(2, 2).unwrap()]
        {
            for _ in 0..1000 {
                let z = random_interior_point(&d, 0.999, &mut rng);
                let w = random_interior_point(&d, 0.999, &mut rng);
                assert!(d.generic_poly(&z, &w).unwrap().norm() > 0.0);
            }
        }
    }

    #[test]
    fn spectral_norm_examples() {
        let p = DomainSpec::polydisc(3).unwrap();
        let z = Point::from_vec(vec![real(0.1), real(-0.9), c64(0.0, 0.3)]);
        assert_eq!(p.spectral_norm(&z).unwrap(), 0.9);
        let m = DomainSpec::matrix_ball(2, 2).unwrap();
        let d = Point::from_vec(vec![real(0.3), real(0.0), real(0.0), real(0.8)]);
        assert!((m.spectral_norm(&d).unwrap() - 0.8).abs() < 1e-15);
        assert_eq!(m.spectral_norm(&Point::zeros(4)).unwrap(), 0.0);
    }

    #[test]
    fn mobius_anchors_inverse_and_domain_preservation() {
        let mut rng = seeded_rng(4);
        for d in
            [DomainSpec::ball(2).unwrap(), DomainSpec::polydisc(2).unwrap(), DomainSpec::matrix_ball(2, 3).unwrap()]
        {
            for _ in 0..30 {
                let z0 = random_interior_point(&d, 0.95, &mut rng);
                let g = MobiusMap::new(&z0, &d).unwrap();
                assert!(g.apply(&Point::zeros(d.dim())).unwrap().dist(&z0) < 1e-14);
                assert!(g.apply(&z0.neg()).unwrap().0.norm() < 1e-12);
                let w = random_interior_point(&d, 0.95, &mut rng);
                let gw = g.apply(&w).unwrap();
                assert!(d.spectral_norm(&gw).unwrap() < 1.0);
                let back = g.inverse().unwrap().apply(&gw).unwrap();
                assert!(back.dist(&w) < 1e-10);
                for (i, comp) in g.rational_components().iter().enumerate() {
                    assert!((comp.eval(w.coords()) - gw[i]).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mobius_rejects_exterior_center() {
        let d = DomainSpec::ball(2).unwrap();
        let z0 = Point::from_vec(vec![real(0.8), real(0.6)]);
        assert!(matches!(MobiusMap::new(&z0, &d), Err(Error::PointOutsideDomain { .. })));
    }

    #[test]
    fn domain_json() {
        let d = DomainSpec::matrix_ball(2, 3).unwrap();
        let s = serde_json::to_string(&d).unwrap();
        assert_eq!(s, r#"{"kind":"matrixball","n":3,"r":2}"#);
        let back: DomainSpec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, d);
        let b: DomainSpec = serde_json::from_str(r#"{"kind":"ball","n":2}"#).unwrap();
        assert_eq!(b, DomainSpec::ball(2).unwrap());
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"ball","n":0}"#).is_err());
        assert!(serde_json::from_str::<DomainSpec>(r#"{"kind":"matrixball","n":2}"#).is_err());
        let p: Point = serde_json::from_str("[[[0.1,0.0],[0.0,0.2]],[[0.3,0.0],[0.0,0.0]]]").unwrap();
        assert_eq!(p.len(), 4);
    }
}

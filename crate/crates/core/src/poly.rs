//! Sparse multivariate polynomials with complex coefficients, multi-index
//! enumeration, and polynomial evaluation on commuting matrix tuples.

use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{c64, real, CMatrix, C64};

/// Exponent vector of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<u32>);

impl MultiIndex {
    pub fn zero(nvars: usize) -> Self {
        MultiIndex(vec![0; nvars])
    }

    pub fn unit(nvars: usize, i: usize) -> Self {
        let mut v = vec![0; nvars];
        v[i] = 1;
        MultiIndex(v)
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `alpha! = prod alpha_i!`
    pub fn factorial(&self) -> f64 {
        self.0.iter().map(|&k| (1..=k).map(f64::from).product::<f64>()).product()
    }

    /// Evaluates `z^alpha`.
    pub fn eval(&self, z: &[C64]) -> C64 {
        self.0.iter().zip(z).fold(real(1.0), |acc, (&k, &zi)| acc * zi.powu(k))
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|k| k.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// Number of monomials of total degree `d` in `nvars` variables.
pub fn count_monomials(nvars: usize, d: usize) -> usize {
    if nvars == 0 {
        return usize::from(d == 0);
    }
    // binom(d + nvars - 1, nvars - 1)
    let k = nvars - 1;
    let mut c: u128 = 1;
    for i in 0..k {
        c = c * (d + k - i) as u128 / (i + 1) as u128;
    }
    c as usize
}

/// All monomials of total degree `d`, in descending lexicographic order
/// (`z1^d` first). This is the within-degree order of the graded basis.
pub fn monomials_of_degree(nvars: usize, d: u32) -> Vec<MultiIndex> {
    fn rec(nvars: usize, d: u32, prefix: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if prefix.len() + 1 == nvars {
            prefix.push(d);
            out.push(MultiIndex(prefix.clone()));
            prefix.pop();
            return;
        }
        for k in (0..=d).rev() {
            prefix.push(k);
            rec(nvars, d - k, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::with_capacity(count_monomials(nvars, d as usize));
    if nvars == 0 {
        if d == 0 {
            out.push(MultiIndex(Vec::new()));
        }
        return out;
    }
    rec(nvars, d, &mut Vec::with_capacity(nvars), &mut out);
    out
}

/// Sparse polynomial in `nvars` complex variables.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial {
    nvars: usize,
    terms: BTreeMap<MultiIndex, C64>,
}

impl Polynomial {
    pub fn zero(nvars: usize) -> Self {
        Polynomial { nvars, terms: BTreeMap::new() }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = Self::zero(nvars);
        p.add_term(MultiIndex::zero(nvars), c);
        p
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, real(1.0))
    }

    /// The coordinate function `z_i` (zero-based `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::monomial(MultiIndex::unit(nvars, i), real(1.0))
    }

    pub fn monomial(alpha: MultiIndex, c: C64) -> Self {
        let mut p = Self::zero(alpha.nvars());
        p.add_term(alpha, c);
        p
    }

    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (MultiIndex, C64)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (alpha, c) in terms {
            if alpha.nvars() != nvars {
                return Err(Error::DimensionMismatch { expected: nvars, got: alpha.nvars() });
            }
            p.add_term(alpha, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, &C64)> {
        self.terms.iter()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, alpha: &MultiIndex) -> C64 {
        self.terms.get(alpha).copied().unwrap_or_default()
    }

    pub fn add_term(&mut self, alpha: MultiIndex, c: C64) {
        use std::collections::btree_map::Entry;
        debug_assert_eq!(alpha.nvars(), self.nvars);
        match self.terms.entry(alpha) {
            Entry::Vacant(v) => {
                if c != C64::default() {
                    v.insert(c);
                }
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == C64::default() {
                    o.remove();
                }
            }
        }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).max()
    }

    /// Lowest total degree among the terms.
    pub fn min_degree(&self) -> Option<u32> {
        self.terms.keys().map(MultiIndex::degree).min()
    }

    pub fn homogeneous_part(&self, d: u32) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(k, _)| k.degree() == d).map(|(k, v)| (k.clone(), *v)).collect(),
        }
    }

    /// Drops every term of total degree above `d`.
    pub fn truncate(&self, d: u32) -> Polynomial {
        Polynomial {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(k, _)| k.degree() <= d).map(|(k, v)| (k.clone(), *v)).collect(),
        }
    }

    pub fn scale(&self, c: C64) -> Polynomial {
        let mut out = Self::zero(self.nvars);
        for (k, v) in &self.terms {
            out.add_term(k.clone(), v * c);
        }
        out
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.terms.iter().map(|(k, v)| v * k.eval(z)).sum()
    }

    /// Evaluates the polynomial on a tuple of commuting square matrices.
    pub fn eval_tuple(&self, ops: &[CMatrix]) -> Result<CMatrix> {
        if ops.len() != self.nvars {
            return Err(Error::DimensionMismatch { expected: self.nvars, got: ops.len() });
        }
        let h = ops.first().map(|m| m.nrows()).unwrap_or(0);
        let maxdeg: Vec<u32> = (0..self.nvars).map(|i| self.terms.keys().map(|k| k.0[i]).max().unwrap_or(0)).collect();
        let powers: Vec<Vec<CMatrix>> = ops
            .iter()
            .zip(&maxdeg)
            .map(|(t, &m)| {
                let mut v = vec![CMatrix::identity(h, h)];
                for k in 1..=m as usize {
                    let next = &v[k - 1] * t;
                    v.push(next);
                }
                v
            })
            .collect();
        let mut out = CMatrix::zeros(h, h);
        for (alpha, c) in &self.terms {
            let mut m = CMatrix::identity(h, h);
            for (i, &k) in alpha.0.iter().enumerate() {
                if k > 0 {
                    m = &m * &powers[i][k as usize];
                }
            }
            out += m * *c;
        }
        Ok(out)
    }

    /// Multiplies by the monomial `z^alpha`.
    pub fn shift(&self, alpha: &MultiIndex) -> Polynomial {
        Polynomial { nvars: self.nvars, terms: self.terms.iter().map(|(k, v)| (k.add(alpha), *v)).collect() }
    }

    pub fn pow(&self, e: u32) -> Polynomial {
        let mut out = Polynomial::one(self.nvars);
        for _ in 0..e {
            out = &out * self;
        }
        out
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut pieces: Vec<String> = Vec::new();
        for (alpha, c) in &self.terms {
            let mono: Vec<String> = alpha
                .0
                .iter()
                .enumerate()
                .filter(|(_, &k)| k > 0)
                .map(|(i, &k)| if k == 1 { format!("z{}", i + 1) } else { format!("z{}^{}", i + 1, k) })
                .collect();
            let mono = mono.join("*");
            // a mixed coefficient is split so that the output parses back
            let parts: Vec<C64> =
                if c.re != 0.0 && c.im != 0.0 { vec![real(c.re), C64::new(0.0, c.im)] } else { vec![*c] };
            for part in parts {
                let coef = if part.re == 0.0 && part.im != 0.0 { format!("{}j", part.im) } else { fmt_complex(part) };
                pieces.push(match (mono.is_empty(), part == real(1.0)) {
                    (true, _) => coef,
                    (false, true) => mono.clone(),
                    (false, false) => format!("{coef}*{mono}"),
                });
            }
        }
        write!(f, "{}", pieces.join(" + "))?;
        Ok(())
    }
}

/// Formats a complex number as `re+imj`.
pub fn fmt_complex(c: C64) -> String {
    if c.im == 0.0 {
        format!("{}", c.re)
    } else if c.im < 0.0 {
        format!("{}{}j", c.re, c.im)
    } else {
        format!("{}+{}j", c.re, c.im)
    }
}

impl std::str::FromStr for Polynomial {
    type Err = Error;

    /// Parses expressions such as `z1*z2^2 - 0.5*z3 + 0.25j`, inferring the
    /// number of variables from the largest index. Use [`Polynomial::parse`]
    /// to fix it.
    fn from_str(s: &str) -> Result<Self> {
        parse_expression(s, None)
    }
}

impl Polynomial {
    /// Parses a sum of terms `c*z1^a*z2^b` in `nvars` variables. A
    /// coefficient is a real number, optionally suffixed by `j` for an
    /// imaginary one.
    pub fn parse(s: &str, nvars: usize) -> Result<Self> {
        parse_expression(s, Some(nvars))
    }
}

fn parse_expression(s: &str, nvars: Option<usize>) -> Result<Polynomial> {
    let bad = |msg: &str| Error::Precondition(format!("cannot parse polynomial `{s}`: {msg}"));
    let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    if compact.is_empty() {
        return Err(bad("empty expression"));
    }
    // split into signed terms, ignoring signs inside exponents of numbers (1e-3)
    let mut terms: Vec<(f64, String)> = Vec::new();
    let mut cur = String::new();
    let mut sign = 1.0;
    let chars: Vec<char> = compact.chars().collect();
    for (i, &c) in chars.iter().enumerate() {
        let after_exp = i > 0 && matches!(chars[i - 1], 'e' | 'E') && i > 1 && chars[i - 2].is_ascii_digit();
        if (c == '+' || c == '-') && !after_exp {
            if !cur.is_empty() {
                terms.push((sign, std::mem::take(&mut cur)));
            } else if i > 0 && !matches!(chars[i - 1], '+' | '-') {
                return Err(bad("dangling operator"));
            }
            sign = if c == '-' { -sign_of_run(&chars[..i], sign) } else { sign_of_run(&chars[..i], sign) };
            continue;
        }
        if cur.is_empty() && i > 0 && !matches!(chars[i - 1], '+' | '-') && !terms.is_empty() {
            return Err(bad("missing operator"));
        }
        cur.push(c);
    }
    if cur.is_empty() {
        return Err(bad("trailing operator"));
    }
    terms.push((sign, cur));

    let mut parsed: Vec<(Vec<(usize, u32)>, C64)> = Vec::new();
    let mut max_var = 0;
    for (sg, t) in terms {
        let mut coef = real(sg);
        let mut vars = Vec::new();
        for f in t.split('*') {
            if f.is_empty() {
                return Err(bad("empty factor"));
            }
            if let Some(rest) = f.strip_prefix('z') {
                let (idx, pow) = match rest.split_once('^') {
                    Some((i, k)) => (i, k.parse::<u32>().map_err(|_| bad("bad exponent"))?),
                    None => (rest, 1),
                };
                let i: usize = idx.parse().map_err(|_| bad("bad variable index"))?;
                if i == 0 {
                    return Err(bad("variables are numbered from z1"));
                }
                max_var = max_var.max(i);
                vars.push((i - 1, pow));
            } else if let Some(im) = f.strip_suffix('j') {
                let v: f64 = if im.is_empty() { 1.0 } else { im.parse().map_err(|_| bad("bad number"))? };
                coef *= c64(0.0, v);
            } else {
                let v: f64 = f.parse().map_err(|_| bad("bad number"))?;
                coef *= v;
            }
        }
        parsed.push((vars, coef));
    }
    let n = match nvars {
        Some(n) if max_var > n => return Err(Error::DimensionMismatch { expected: n, got: max_var }),
        Some(n) => n,
        None => max_var.max(1),
    };
    let mut p = Polynomial::zero(n);
    for (vars, c) in parsed {
        let mut alpha = vec![0u32; n];
        for (i, k) in vars {
            alpha[i] += k;
        }
        p.add_term(MultiIndex(alpha), c);
    }
    Ok(p)
}

/// Sign accumulated by a run of `+`/`-` immediately before position `i`.
fn sign_of_run(prefix: &[char], current: f64) -> f64 {
    match prefix.last() {
        Some('+') | Some('-') => current,
        _ => 1.0,
    }
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.add_term(k.clone(), *v);
        }
        out
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        let mut out = self.clone();
        for (k, v) in &rhs.terms {
            out.add_term(k.clone(), -*v);
        }
        out
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        self.scale(real(-1.0))
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (ka, va) in &self.terms {
            for (kb, vb) in &rhs.terms {
                out.add_term(ka.add(kb), va * vb);
            }
        }
        out
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr for Polynomial {
            type Output = Polynomial;
            fn $m(self, rhs: Polynomial) -> Polynomial {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

#[derive(Serialize, Deserialize)]
struct TermRepr {
    exponents: Vec<u32>,
    coef: [f64; 2],
}

#[derive(Serialize, Deserialize)]
struct PolyRepr {
    nvars: usize,
    terms: Vec<TermRepr>,
}

impl Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolyRepr {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(k, v)| TermRepr { exponents: k.0.clone(), coef: [v.re, v.im] }).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for Polynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = PolyRepr::deserialize(d)?;
        Polynomial::from_terms(
            repr.nvars,
            repr.terms.into_iter().map(|t| (MultiIndex(t.exponents), c64(t.coef[0], t.coef[1]))),
        )
        .map_err(serde::de::Error::custom)
    }
}

/// Quotient `p / q` of two polynomials in the same variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RationalSymbol {
    pub p: Polynomial,
    pub q: Polynomial,
}

impl RationalSymbol {
    pub fn new(p: Polynomial, q: Polynomial) -> Result<Self> {
        if p.nvars() != q.nvars() {
            return Err(Error::DimensionMismatch { expected: p.nvars(), got: q.nvars() });
        }
        if q.is_zero() {
            return Err(Error::Precondition("zero denominator".into()));
        }
        Ok(RationalSymbol { p, q })
    }

    pub fn polynomial(p: Polynomial) -> Self {
        let n = p.nvars();
        RationalSymbol { p, q: Polynomial::one(n) }
    }

    pub fn degree(&self) -> u32 {
        self.p.degree().unwrap_or(0).max(self.q.degree().unwrap_or(0))
    }

    pub fn eval(&self, z: &[C64]) -> C64 {
        self.p.eval(z) / self.q.eval(z)
    }
}

impl fmt::Display for RationalSymbol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({})/({})", self.p, self.q)
    }
}

/// Determinant of a square matrix of polynomials (Laplace expansion).
pub fn poly_det(m: &[Vec<Polynomial>], nvars: usize) -> Polynomial {
    let n = m.len();
    match n {
        0 => Polynomial::one(nvars),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Polynomial::zero(nvars);
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor = minor_of(m, 0, j);
                let term = &m[0][j] * &poly_det(&minor, nvars);
                acc = if j % 2 == 0 { &acc + &term } else { &acc - &term };
            }
            acc
        }
    }
}

fn minor_of(m: &[Vec<Polynomial>], row: usize, col: usize) -> Vec<Vec<Polynomial>> {
    m.iter()
        .enumerate()
        .filter(|(i, _)| *i != row)
        .map(|(_, r)| r.iter().enumerate().filter(|(j, _)| *j != col).map(|(_, p)| p.clone()).collect())
        .collect()
}

/// Adjugate (transposed cofactor matrix): `adj(m) * m = det(m) * I`.
pub fn poly_adjugate(m: &[Vec<Polynomial>], nvars: usize) -> Vec<Vec<Polynomial>> {
    let n = m.len();
    if n == 1 {
        return vec![vec![Polynomial::one(nvars)]];
    }
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let c = poly_det(&minor_of(m, j, i), nvars);
                    if (i + j) % 2 == 0 {
                        c
                    } else {
                        -&c
                    }
                })
                .collect()
        })
        .collect()
}

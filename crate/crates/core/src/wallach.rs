//! Partitions, generalized Pochhammer symbols, the Gindikin Gamma function
//! and the Wallach set.

use std::fmt;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::domain::DomainSpec;
use crate::error::{Error, Result};

const TOL: f64 = 1e-12;

/// Non-increasing tuple of non-negative integers.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Partition(Vec<u32>);

impl Partition {
    pub fn new(parts: Vec<u32>) -> Result<Self> {
        if parts.windows(2).any(|w| w[0] < w[1]) {
            return Err(Error::Precondition(format!("parts {parts:?} are not non-increasing")));
        }
        Ok(Partition(parts))
    }

    pub fn zero(r: usize) -> Self {
        Partition(vec![0; r])
    }

    pub fn parts(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn weight(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.0.iter().map(|m| m.to_string()).collect();
        write!(f, "({})", s.join(","))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WallachClassification {
    NotInWallach,
    Discrete(usize),
    Continuous,
}

/// `(x)_k = x (x + 1) ... (x + k - 1)`.
pub fn rising_factorial(x: f64, k: u32) -> f64 {
    (0..k).map(|i| x + i as f64).product()
}

/// Generalized Pochhammer symbol `prod_j (lambda - (a/2)(j - 1))_{m_j}`,
/// evaluated as a finite product so that zeros are exact.
pub fn pochhammer(lambda: f64, m: &Partition, a: f64) -> f64 {
    m.parts().iter().enumerate().map(|(j, &mj)| rising_factorial(lambda - a / 2.0 * j as f64, mj)).product()
}

/// `Gamma_Omega(s) = (2 pi)^{a r (r - 1) / 4} prod_j Gamma(s_j - (a/2)(j - 1))`.
pub fn gindikin_gamma(s: &[f64], a: f64, r: usize) -> Result<f64> {
    if s.len() != r {
        return Err(Error::DimensionMismatch { expected: r, got: s.len() });
    }
    let mut out = (2.0 * std::f64::consts::PI).powf(a * (r * (r.saturating_sub(1))) as f64 / 4.0);
    for (j, &sj) in s.iter().enumerate() {
        let arg = sj - a / 2.0 * j as f64;
        if arg <= 0.0 && arg.fract() == 0.0 {
            return Err(Error::PoleError { arg });
        }
        out *= gamma(arg);
    }
    Ok(out)
}

pub fn wallach_classify(lambda: f64, dom: &DomainSpec) -> WallachClassification {
    let a = dom.a() as f64;
    for j in 1..=dom.rank() {
        if (lambda - (j - 1) as f64 * a / 2.0).abs() <= TOL {
            return WallachClassification::Discrete(j);
        }
    }
    if lambda > dom.continuous_threshold() {
        WallachClassification::Continuous
    } else {
        WallachClassification::NotInWallach
    }
}

/// Membership in `{(a/2)(l - 1) - k : 1 <= l <= r, 0 <= k <= kmax}`.
///
/// This set is larger than the set of weights for which `Delta^{-lambda}` is
/// a polynomial once `r >= 2`; see [`kernel_polynomial_degree`].
pub fn finite_rank_membership(lambda: f64, a: f64, r: usize, kmax: u32) -> bool {
    (1..=r).any(|l| (0..=kmax).any(|k| (lambda - (a / 2.0 * (l - 1) as f64 - k as f64)).abs() <= TOL))
}

/// Total degree of `Delta(z, w)^{-lambda}` in `z` when it is a polynomial,
/// which happens exactly for `lambda = -k`, `k` a non-negative integer.
pub fn kernel_polynomial_degree(lambda: f64, dom: &DomainSpec) -> Option<usize> {
    let k = (-lambda).round();
    if k >= 0.0 && (lambda + k).abs() <= TOL {
        Some(dom.rank() * k as usize)
    } else {
        None
    }
}

/// Partitions of weight `<= d` with at most `r` parts, ordered by weight and
/// then reverse-lexicographically.
pub fn partitions_up_to(d: u32, r: usize) -> Vec<Partition> {
    let mut out = Vec::new();
    for w in 0..=d {
        let mut cur = Vec::with_capacity(r);
        push_partitions(w, w, r, &mut cur, &mut out);
    }
    out
}

fn push_partitions(rest: u32, max: u32, slots: usize, cur: &mut Vec<u32>, out: &mut Vec<Partition>) {
    if slots == 0 {
        if rest == 0 {
            out.push(Partition(cur.clone()));
        }
        return;
    }
    if rest as usize > max as usize * slots {
        return;
    }
    for p in (0..=rest.min(max)).rev() {
        cur.push(p);
        push_partitions(rest - p, p, slots - 1, cur, out);
        cur.pop();
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmbeddingProfile {
    pub max_ratio: f64,
    pub argmax: Partition,
}

/// Maximum of `(lambda1)_m / (lambda2)_m` over partitions of weight `<= d`.
pub fn embedding_ratio_profile(lambda1: f64, lambda2: f64, dom: &DomainSpec, d: u32) -> Result<EmbeddingProfile> {
    let t = dom.continuous_threshold();
    if !(t < lambda1 && lambda1 < lambda2) {
        return Err(Error::Precondition(format!("need {t} < lambda1 < lambda2, got {lambda1}, {lambda2}")));
    }
    let a = dom.a() as f64;
    let mut best = EmbeddingProfile { max_ratio: f64::NEG_INFINITY, argmax: Partition::zero(dom.rank()) };
    for m in partitions_up_to(d, dom.rank()) {
        let ratio = pochhammer(lambda1, &m, a) / pochhammer(lambda2, &m, a);
        if ratio > best.max_ratio {
            best = EmbeddingProfile { max_ratio: ratio, argmax: m };
        }
    }
    Ok(best)
}

//! Numerical laboratory for reproducing-kernel Hilbert modules over bounded
//! symmetric domains of type I (ball, polydisc, matrix ball).

pub mod calculus;
pub mod domain;
pub mod error;
pub mod exec;
pub mod hilbert;
pub mod kernel;
pub mod koszul;
pub mod linalg;
pub mod poly;
pub mod quadrature;
pub mod sampling;
pub mod wallach;

pub use domain::{DomainKind, DomainSpec, MobiusMap, Point};
pub use error::{Error, Result};
pub use exec::ExecMode;
pub use poly::{MultiIndex, Polynomial, RationalSymbol};

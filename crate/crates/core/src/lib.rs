//! Mild solutions of Hilfer-fractional Cauchy problems with matrix
//! generators, together with Ulam-Hyers and Ulam-Hyers-Rassias stability
//! certificates and an empirical verifier for them.
//!
//! The state is always stored in weighted form `w(t) = t^(1-γ) ξ(t)`, where
//! `γ = α + β - αβ`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod expr;
pub mod fracops;
pub mod quadrature;
pub mod product;
pub mod resolvent;
pub mod solver;
pub mod special;
pub mod stability;

use thiserror::Error;

pub use expr::{parse_expr, Expr, ExprError};

/// Numerical and structural failures raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("series diverges numerically at theta = {theta}")]
    SeriesDivergence { theta: f64 },
    #[error("quadrature failure: {0}")]
    QuadratureFailure(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("psi is not increasing on cell {cell}")]
    NonMonotonePsi { cell: usize },
    #[error("grid too coarse: {nodes} intervals, need at least {min}")]
    GridTooCoarse { nodes: usize, min: usize },
    #[error("mesh mismatch: {0}")]
    MeshMismatch(String),
    #[error("Picard iteration did not converge: last delta {last_delta:e}, ratio {ratio}")]
    NoConvergence { last_delta: f64, ratio: f64 },
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("running supremum still grows at T_max = {t_max}")]
    TruncationInconclusive { t_max: f64 },
    #[error("phi condition violated at node {node} (t = {t})")]
    PhiConditionViolated { node: usize, t: f64 },
    #[error("could not rescale perturbation {index} into the residual window")]
    RescaleFailure { index: usize },
    #[error("sample {index} exceeds G at node {node}")]
    SampleNotGBounded { index: usize, node: usize },
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

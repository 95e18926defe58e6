use thiserror::Error;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(&'static str),
    #[error("non-finite matrix entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    /// A resolvent was requested exactly on its cut; ask for the boundary value instead.
    #[error("point lies on the branch cut [{left}, {right}]")]
    OnBranchCut { left: f64, right: f64 },
    #[error("pole: {0}")]
    Pole(&'static str),
    #[error("outside domain: {0}")]
    Domain(&'static str),
    /// Marcenko–Pastur density at the origin for square matrices (density ~ 1/sqrt(lambda)).
    #[error("density diverges at the hard edge")]
    HardEdgeDivergence,
    #[error("step still rejected after {halvings} halvings (dt = {dt:e})")]
    StepSize { halvings: u32, dt: f64 },
    #[error("unsupported: {0}")]
    Unsupported(&'static str),
    #[error("argument {0} outside the supported range")]
    Range(f64),
    #[error("quadrature did not converge (last relative change {0:e})")]
    Accuracy(f64),
}

pub type Result<T> = core::result::Result<T, Error>;

use thiserror::Error;

use crate::expr::ExprError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("Hessian rank varies across sample points: {ranks:?}")]
    RankInstability { ranks: Vec<usize> },

    #[error("could not sample an admissible configuration for `{0}`")]
    Sampling(String),

    #[error("velocities {velocities:?} cannot be solved: {reason}")]
    InversionUnsupported {
        velocities: Vec<String>,
        reason: String,
    },

    #[error("input Lagrangian is singular (rank {rank} of {dimension})")]
    InputSingular { rank: usize, dimension: usize },

    #[error("constraint {label} depends on the unsolved velocity `{velocity}`")]
    VelocityDependentConstraint { label: String, velocity: String },

    #[error("inconsistent dynamics: constraint `{constraint}` reduces to a nonzero constant")]
    Contradiction { constraint: String },

    #[error("consistency iteration did not close within {bound} generations")]
    IterationBound { bound: usize },

    #[error("system is not integrable: {0}")]
    NotIntegrable(String),

    #[error("step must be positive, got {0}")]
    InvalidStep(f64),

    #[error("parametrization `{expr}` is not strictly increasing near tau = {tau}")]
    NonMonotone { expr: String, tau: f64 },

    #[error("unknown template `{0}`")]
    UnknownTemplate(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: String, reason: String },

    #[error("no closed-form solution for `{0}`")]
    NoClosedForm(String),

    #[error("unsupported Hamiltonian shape for quantization: {0}")]
    UnsupportedShape(String),

    #[error("wavefunction is not normalized (norm {0})")]
    Unnormalized(f64),

    #[error("{0}")]
    Config(String),
}

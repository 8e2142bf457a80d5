//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse grouping used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    Input,
    Precondition,
    Numerical,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid input: {0}")]
    Input(String),
    #[error("unsupported Lie derivative order {0}")]
    UnsupportedOrder(u32),
    #[error("non-finite evaluation at ({x}, {y})")]
    Domain { x: f64, y: f64 },
    #[error("first Lie derivative vanishes on [{lo}, {hi}]")]
    DegenerateTangencyLocus { lo: f64, hi: f64 },
    #[error("y = {0} is not in a sliding interval")]
    NotSliding(f64),
    #[error("no return: {0}")]
    NoReturn(String),
    #[error("orbit left the domain: {0}")]
    DomainExit(String),
    #[error("inversion failed: {0}")]
    Inversion(String),
    #[error("not a fold-fold point: {0}")]
    NotFoldFold(String),
    #[error("invalid P: {0}")]
    InvalidP(String),
    #[error("blend is not monotone (min derivative {min_derivative:e})")]
    NonMonotoneBlend { min_derivative: f64 },
    #[error("assumption A0 violated: {0}")]
    AssumptionA0(String),
    #[error("assumptions fail: {0}")]
    AssumptionsFail(String),
    #[error("quadrature did not converge: {0}")]
    Quadrature(String),
    #[error("fiber level {y} outside ({lo}, {hi}]")]
    FiberOutOfRange { y: f64, lo: f64, hi: f64 },
    #[error("y = {0} is not a dodging level")]
    NotDodgingLevel(f64),
    #[error("step size underflow: {0}")]
    StiffnessFailure(String),
    #[error("no canard connection for alpha in [{lo}, {hi}]")]
    NoConnectionInRange { lo: f64, hi: f64 },
    #[error("segment does not track the critical curve: {0}")]
    NotACanardSegment(String),
    #[error("epsilon {eps} below the floor {floor}")]
    BelowEpsFloor { eps: f64, floor: f64 },
    #[error("{0}")]
    Precondition(String),
    #[error("{0}")]
    Numerical(String),
}

impl Error {
    pub fn class(&self) -> ErrorClass {
        use Error::*;
        match self {
            Input(_) | InvalidP(_) => ErrorClass::Input,
            Domain { .. } | NoReturn(_) | DomainExit(_) | Inversion(_) | Quadrature(_)
            | StiffnessFailure(_) | Numerical(_) => ErrorClass::Numerical,
            _ => ErrorClass::Precondition,
        }
    }

    /// Exit status: 1 input, 2 precondition, 3 numerical.
    pub fn exit_code(&self) -> i32 {
        match self.class() {
            ErrorClass::Input => 1,
            ErrorClass::Precondition => 2,
            ErrorClass::Numerical => 3,
        }
    }
}

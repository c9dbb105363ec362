use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("operands live on different variable rosters")]
    RosterMismatch,
    #[error("invalid roster: {0}")]
    InvalidRoster(String),
    #[error("linear part is not invertible")]
    NonInvertibleLinearPart,
    #[error("variable `{0}` has no symplectic partner")]
    MissingPairing(String),
    #[error("empty roster")]
    EmptyRoster,
    #[error("invalid degree window ({k1}, {k2})")]
    InvalidWindow { k1: u32, k2: u32 },
    #[error("monomial {exp:?} in component {component} is resonant (divisor {divisor:e})")]
    ResonantTerm {
        component: String,
        exp: Vec<u16>,
        divisor: f64,
    },
    #[error("precondition `{name}` failed: {detail}")]
    Precondition { name: String, detail: String },
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("center eigenvalue {0} where a saddle eigenvalue was expected")]
    CenterEigenvalue(String),
    #[error("step size underflow at t = {t}")]
    StepUnderflow { t: f64 },
    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },
    #[error("integrand does not decay: {0}")]
    Divergent(String),
    #[error("blow-up: {0}")]
    BlowUp(String),
    #[error("grid too coarse for the finite-difference stencil: {0}")]
    GridTooCoarse(String),
}

impl Error {
    pub fn precondition(name: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Precondition {
            name: name.into(),
            detail: detail.into(),
        }
    }

    /// True for failures of the numerical machinery rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::StepUnderflow { .. }
                | Error::NonFinite { .. }
                | Error::Divergent(_)
                | Error::BlowUp(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

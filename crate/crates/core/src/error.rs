use alloc::string::String;
use core::fmt;

pub type Result<T, E = AdlError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum AdlError {
    /// A round or account violates a structural invariant.
    InvalidState(String),
    InfeasiblePoint,
    EmptyFeasibleSet { budget: f64, total_capacity: f64 },
    BudgetExceedsCapacity { budget: f64, total_capacity: f64 },
    NoCapacity,
    /// No lot-grid allocation lands within one lot of the budget.
    GridInfeasible { residual: f64 },
    MissingLotGrid(String),
    NonpositiveExecPrice(f64),
    DegenerateEpisode,
    EmptyRound,
    LengthMismatch { left: usize, right: usize },
    DecompositionViolated { slack: f64 },
    NoJumpWitness,
    NoExecution,
    DegenerateSlopes,
    RequiresEvenHorizon(usize),
    InvalidParameter(String),
}

impl fmt::Display for AdlError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdlError::InvalidState(msg) => write!(f, "invalid round state: {msg}"),
            AdlError::InfeasiblePoint => write!(f, "point is outside the feasible polytope"),
            AdlError::EmptyFeasibleSet { budget, total_capacity } => write!(
                f,
                "empty feasible set: budget {budget} outside [0, {total_capacity}]"
            ),
            AdlError::BudgetExceedsCapacity { budget, total_capacity } => write!(
                f,
                "budget {budget} exceeds total capacity {total_capacity}"
            ),
            AdlError::NoCapacity => write!(f, "positive budget with zero total capacity"),
            AdlError::GridInfeasible { residual } => {
                write!(f, "no lot-feasible allocation; best residual {residual}")
            }
            AdlError::MissingLotGrid(id) => write!(f, "winner {id} has no lot size"),
            AdlError::NonpositiveExecPrice(p) => {
                write!(f, "execution price {p} is not positive; quantity beyond model validity")
            }
            AdlError::DegenerateEpisode => write!(f, "all deficits are zero"),
            AdlError::EmptyRound => write!(f, "round has no winners"),
            AdlError::LengthMismatch { left, right } => {
                write!(f, "series length mismatch: {left} vs {right}")
            }
            AdlError::DecompositionViolated { slack } => {
                write!(f, "regret decomposition violated by {slack}")
            }
            AdlError::NoJumpWitness => {
                write!(f, "need two winners with capacity at least the budget")
            }
            AdlError::NoExecution => write!(f, "all executed quantities are zero"),
            AdlError::DegenerateSlopes => write!(f, "alpha_min must be below alpha_max"),
            AdlError::RequiresEvenHorizon(t) => write!(f, "horizon {t} must be even"),
            AdlError::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
        }
    }
}

impl core::error::Error for AdlError {}

impl AdlError {
    /// Errors that indicate a bug rather than bad input.
    pub fn is_internal(&self) -> bool {
        matches!(self, AdlError::DecompositionViolated { .. })
    }
}

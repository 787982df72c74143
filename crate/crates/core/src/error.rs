use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("empty distribution")]
    EmptyDistribution,
    #[error("negative weight {weight} at location {location}")]
    NegativeWeight { location: f64, weight: f64 },
    #[error("location {0} outside [0, 1]")]
    LocationOutOfRange(f64),
    #[error("weights sum to {0}, expected 1")]
    WeightSumMismatch(f64),
    #[error("need at least 2 colours, got {0}")]
    ColorCountTooSmall(u32),
    #[error("logarithm of a non-positive value ({0}) at D = {1}")]
    DegenerateLog(f64, u64),
    #[error("enumeration needs {needed} terms, budget is {budget}")]
    BudgetExceeded { needed: f64, budget: f64 },
    #[error("no negative Sigma for d up to {0}")]
    NotFoundBelowCap(u32),
    #[error("no certificate in d range [{0}, {1}]")]
    NotFoundInRange(f64, f64),
    #[error("state space {0} exceeds the enumeration limit")]
    StateSpaceTooLarge(f64),
    #[error("graph has a loop at vertex {0}")]
    HasLoop(usize),
    #[error("graph too large for exact colouring: n = {0}")]
    TooLarge(usize),
    #[error("no simple graph after {0} attempts")]
    RejectionBudgetExceeded(u64),
    #[error("Poisson point count {0} exceeds max_points")]
    MaxPointsExceeded(u64),
    #[error("certificate value {value} + radius {radius} is not negative")]
    NotNegative { value: f64, radius: f64 },
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Validation-class errors map to CLI exit code 2.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::BudgetExceeded { .. }
                | Error::NotFoundBelowCap(_)
                | Error::NotFoundInRange(..)
                | Error::StateSpaceTooLarge(_)
                | Error::RejectionBudgetExceeded(_)
                | Error::MaxPointsExceeded(_)
                | Error::DegenerateLog(..)
        )
    }

    /// Search/budget failures map to CLI exit code 3.
    pub fn is_not_found(&self) -> bool {
        matches!(
            self,
            Error::BudgetExceeded { .. }
                | Error::NotFoundBelowCap(_)
                | Error::NotFoundInRange(..)
                | Error::StateSpaceTooLarge(_)
                | Error::RejectionBudgetExceeded(_)
                | Error::MaxPointsExceeded(_)
        )
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidParams(_) => "InvalidParams",
            Error::EmptyDistribution => "EmptyDistribution",
            Error::NegativeWeight { .. } => "NegativeWeight",
            Error::LocationOutOfRange(_) => "LocationOutOfRange",
            Error::WeightSumMismatch(_) => "WeightSumMismatch",
            Error::ColorCountTooSmall(_) => "ColorCountTooSmall",
            Error::DegenerateLog(..) => "DegenerateLog",
            Error::BudgetExceeded { .. } => "BudgetExceeded",
            Error::NotFoundBelowCap(_) => "NotFoundBelowCap",
            Error::NotFoundInRange(..) => "NotFoundInRange",
            Error::StateSpaceTooLarge(_) => "StateSpaceTooLarge",
            Error::HasLoop(_) => "HasLoop",
            Error::TooLarge(_) => "TooLarge",
            Error::RejectionBudgetExceeded(_) => "RejectionBudgetExceeded",
            Error::MaxPointsExceeded(_) => "MaxPointsExceeded",
            Error::NotNegative { .. } => "NotNegative",
            Error::Parse(_) => "Parse",
        }
    }
}

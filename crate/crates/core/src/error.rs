use thiserror::Error;

/// Model constraint that a parameter vector can violate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// AR polynomial has a zero on or inside the unit circle.
    ArStability,
    /// MA polynomial has a zero on or inside the unit circle.
    MaStability,
    /// AR and MA polynomials share a zero.
    CommonZeros,
    /// Both highest-order coefficients vanish.
    LeadingCoefficients,
    /// Memory parameter outside the interval [L, U].
    MemoryRange,
    /// Short-memory coefficient outside its box bound.
    ThetaBox,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let msg = match self {
            Constraint::ArStability => {
                "AR polynomial 1 - a_1 z - ... - a_p1 z^p1 must be nonzero for |z| <= 1"
            }
            Constraint::MaStability => {
                "MA polynomial 1 - b_1 z - ... - b_p2 z^p2 must be nonzero for |z| <= 1"
            }
            Constraint::CommonZeros => "AR and MA polynomials must have no common zeros",
            Constraint::LeadingCoefficients => "|a_p1| + |b_p2| must be positive",
            Constraint::MemoryRange => "d must lie in the interval [L, U]",
            Constraint::ThetaBox => "AR/MA coefficients must lie inside the parameter box",
        };
        f.write_str(msg)
    }
}

#[derive(Debug, Error)]
pub enum ArfimaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(Constraint),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate data: {0}")]
    DegenerateData(String),

    #[error("insufficient data: need n >= {required}, got n = {n}")]
    InsufficientData { n: usize, required: usize },

    #[error("no feasible starting point in the parameter space")]
    NoFeasibleStart,

    #[error("empty parameter grid")]
    EmptyGrid,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("config error: {0}")]
    Config(String),
}

impl ArfimaError {
    /// True for errors caused by the data or the fit rather than by the caller's arguments.
    pub fn is_data_error(&self) -> bool {
        matches!(
            self,
            ArfimaError::DegenerateData(_)
                | ArfimaError::InsufficientData { .. }
                | ArfimaError::NoFeasibleStart
                | ArfimaError::Io(_)
                | ArfimaError::Csv(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, ArfimaError>;

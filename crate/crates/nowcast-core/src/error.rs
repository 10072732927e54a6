//! Error type shared across the crate.

use crate::impute::ArmaFit;
use crate::period::Period;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by dataset construction, model estimation, and evaluation.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Validation(String),

    #[error("series {id}: zero-valued predecessor at {period}, growth rate undefined")]
    ZeroDenominator { id: String, period: Period },

    #[error("series {id}: need at least 2 observations to compute growth rates")]
    TooFewObservations { id: String },

    #[error("duplicate series id {0}")]
    DuplicateSeriesId(String),

    #[error("series {id}: observation at {period} lies outside the grid range")]
    ObservationOutOfRange { id: String, period: Period },

    #[error("requested date {0} precedes the first vintage snapshot")]
    DateBeforeFirstVintage(chrono::NaiveDate),

    #[error("vintage store is empty")]
    EmptyVintageStore,

    #[error("column {0}: no observed values, cannot impute")]
    AllMissingColumn(String),

    #[error("column {column}: {source}")]
    ColumnFit {
        column: String,
        source: Box<Error>,
    },

    #[error("need at least {needed} observations to fit, got {got}")]
    TooFewForFit { needed: usize, got: usize },

    #[error("series is (numerically) constant, innovation variance is degenerate")]
    DegenerateSeries,

    #[error("optimizer did not converge within {iterations} iterations (best objective {objective:.6e})")]
    ArmaNonConvergence {
        iterations: usize,
        objective: f64,
        best: Box<ArmaFit>,
    },

    #[error("no eligible target observations to build samples from")]
    NoEligibleTargets,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite loss at epoch {epoch} while training ensemble member {member}")]
    NonFiniteLoss { epoch: usize, member: usize },

    #[error("prediction window would start before the grid at {grid_start}")]
    WindowBeforeGrid { grid_start: Period },

    #[error("non-finite value in Kalman recursion at {period}")]
    NonFiniteFilter { period: Period },

    #[error("EM log-likelihood decreased by {drop:.3e} at iteration {iteration}")]
    EmLikelihoodDecreased { iteration: usize, drop: f64 },

    #[error("variance collapsed below 1e-12 for column {0} during EM")]
    VarianceCollapse(String),

    #[error("column sets of the two vintages differ: {0}")]
    ColumnMismatch(String),

    #[error("counterfactual prediction failed for column {column}: {source}")]
    CounterfactualFailed {
        column: String,
        source: Box<Error>,
    },

    #[error("curve has no known actual value")]
    ActualUnknown,

    #[error("paired error vectors have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),

    #[error("paired differences have zero variance, t-test is degenerate")]
    DegenerateTTest,

    #[error("curves are on mismatched vintage-date grids")]
    GridMismatch,

    #[error("no vintages fall inside the replay window")]
    NoVintagesInWindow,

    #[error("csv parse error in {file} at line {line}: {message}")]
    CsvParse {
        file: String,
        line: u64,
        message: String,
    },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("serialization error: {0}")]
    Serialization(#[from] serde_json::Error),
}

impl Error {
    /// Wrap an error with the column it occurred in.
    pub fn for_column(column: &str, source: Error) -> Error {
        Error::ColumnFit {
            column: column.to_string(),
            source: Box::new(source),
        }
    }
}

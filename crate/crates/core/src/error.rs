use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// Malformed input. `line` is 1-based and counts the header.
    #[error("{source_name}, line {line}: {message}")]
    Parse {
        source_name: String,
        line: u64,
        message: String,
    },

    #[error("{source_name}: unexpected columns {found:?}, expected {expected:?}")]
    Header {
        source_name: String,
        found: Vec<String>,
        expected: Vec<String>,
    },

    #[error("{source_name}, line {line}: {what}: {field} = {value} outside [{min}, {max}]")]
    OutOfRange {
        source_name: String,
        line: u64,
        what: String,
        field: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("{source_name}, line {line}: duplicate {what}")]
    Duplicate {
        source_name: String,
        line: u64,
        what: String,
    },

    #[error("{source_name}, line {line}: {what} conflicts with an earlier record")]
    Inconsistent {
        source_name: String,
        line: u64,
        what: String,
    },

    #[error("unknown {kind} `{key}`")]
    NotFound { kind: &'static str, key: String },

    #[error("{source_name}, line {line}: county `{fips}` has no state in the geography table")]
    UnresolvedCounty {
        source_name: String,
        line: u64,
        fips: String,
    },

    #[error("region {0} has no employment records")]
    EmptyRegion(String),

    #[error("region {0} has zero wage base")]
    ZeroWageBase(String),

    #[error("no exposure for in-scope occupation `{0}`")]
    MissingExposure(String),

    #[error("invalid scope: {0}")]
    InvalidScope(String),

    #[error("cannot aggregate results from different scopes ({0} and {1})")]
    MixedScopes(String, String),

    #[error("region mismatch: {0} vs {1}")]
    RegionMismatch(String, String),

    #[error("total exposed value is zero for {0}")]
    ZeroTotal(String),

    #[error("negative exposed value {value} for industry `{industry}`")]
    NegativeContribution { industry: String, value: f64 },

    #[error("occupation `{0}` has an all-zero skill vector")]
    ZeroVector(String),

    #[error("pairwise similarity needs >= 2 occupations, found {0}")]
    TooFewOccupations(usize),

    #[error("transition network is empty")]
    EmptyNetwork,

    #[error("selector {0} selects no occupation pairs")]
    EmptySelection(String),

    #[error("state sets differ: only in first {only_first:?}, only in second {only_second:?}")]
    StateSetMismatch {
        only_first: Vec<String>,
        only_second: Vec<String>,
    },

    #[error("tier sizes {leading}+{middle}+{aspiring} do not sum to {states} states")]
    TierSizeMismatch {
        leading: usize,
        middle: usize,
        aspiring: usize,
        states: usize,
    },

    #[error("regression needs >= 2 observations, found {0}")]
    TooFewObservations(usize),

    #[error("regressor is constant")]
    ConstantRegressor,

    #[error("invalid value: {0}")]
    InvalidValue(String),

    #[error("infeasible synthetic config: {0}")]
    InfeasibleConfig(String),

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    /// True for errors caused by bad inputs or configuration, as opposed to
    /// failures inside the engine.
    pub fn is_input_error(&self) -> bool {
        !matches!(self, Error::Internal(_))
    }

    /// Stable snake_case name of the variant, for structured output.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Parse { .. } => "parse",
            Error::Header { .. } => "header",
            Error::OutOfRange { .. } => "out_of_range",
            Error::Duplicate { .. } => "duplicate",
            Error::Inconsistent { .. } => "inconsistent",
            Error::NotFound { .. } => "not_found",
            Error::UnresolvedCounty { .. } => "unresolved_county",
            Error::EmptyRegion(_) => "empty_region",
            Error::ZeroWageBase(_) => "zero_wage_base",
            Error::MissingExposure(_) => "missing_exposure",
            Error::InvalidScope(_) => "invalid_scope",
            Error::MixedScopes(..) => "mixed_scopes",
            Error::RegionMismatch(..) => "region_mismatch",
            Error::ZeroTotal(_) => "zero_total",
            Error::NegativeContribution { .. } => "negative_contribution",
            Error::ZeroVector(_) => "zero_vector",
            Error::TooFewOccupations(_) => "too_few_occupations",
            Error::EmptyNetwork => "empty_network",
            Error::EmptySelection(_) => "empty_selection",
            Error::StateSetMismatch { .. } => "state_set_mismatch",
            Error::TierSizeMismatch { .. } => "tier_size_mismatch",
            Error::TooFewObservations(_) => "too_few_observations",
            Error::ConstantRegressor => "constant_regressor",
            Error::InvalidValue(_) => "invalid_value",
            Error::InfeasibleConfig(_) => "infeasible_config",
            Error::Internal(_) => "internal",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

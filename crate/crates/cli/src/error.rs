/// Parse- and validation-level failures in the data pipeline, each carrying
/// enough location detail to fix the input.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IngestError {
    #[error("line {line}: ranking has {got} items, expected {expected}")]
    NonUniformK { line: usize, expected: usize, got: usize },
    #[error("line {line}: unexpected separator (rankings use ',', consideration sets use '|')")]
    UnknownSeparator { line: usize },
    #[error("line {line}: item '{label}' appears more than once")]
    DuplicateItem { line: usize, label: String },
    #[error("line {line}: consideration set does not cover its ranking")]
    ConsiderationNotSuperset { line: usize },
    #[error("consideration section has {got} rows for {expected} rankings")]
    ConsiderationRowMismatch { expected: usize, got: usize },
    #[error("respondent '{respondent}' rated item '{item}' more than once")]
    DuplicateRating { respondent: String, item: String },
    #[error("respondent '{respondent}' rated too few items")]
    TooFewRatings { respondent: String },
    #[error("respondent '{respondent}' rated a different number of items than earlier respondents; pass a truncation length")]
    MixedRatingCounts { respondent: String },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Top-level CLI failure, mapped onto the process exit code: validation
/// problems exit 1, I/O problems exit 2.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }
}

impl From<IngestError> for CliError {
    fn from(e: IngestError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<plc_core::Error> for CliError {
    fn from(e: plc_core::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

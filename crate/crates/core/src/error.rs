use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("rendering error: {0}")]
    Render(String),
    #[error("unresolvable primitive name {0:?}")]
    UnresolvableName(String),
    #[error("no program found ({skipped} skipped spans)")]
    NoProgram { skipped: usize },
    #[error("invalid naming table: {0}")]
    Naming(String),
    #[error("template error: {0}")]
    Template(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("infeasible demonstration selection for {sample_id}: {constraint}")]
    Infeasible { sample_id: String, constraint: String },
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("incompatible runs: {0}")]
    IncompatibleRuns(String),
    #[error("invalid config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

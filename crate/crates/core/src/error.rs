use std::path::PathBuf;

use thiserror::Error;

use crate::engine::RegisterId;

/// Failures raised by a domain engine during search.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("register {0} holds no solution")]
    EmptyRegister(RegisterId),
    #[error("register {register} is out of range (bank has {count} registers)")]
    RegisterOutOfRange { register: RegisterId, count: usize },
    #[error("unknown LLH id {0}")]
    UnknownLlh(usize),
    #[error("LLH {0} is a crossover and needs two parents")]
    CrossoverNeedsTwoParents(usize),
    #[error("LLH {0} is not a crossover")]
    NotCrossover(usize),
    #[error("perturbation intensity {0} is outside [0, 1]")]
    InvalidIntensity(f64),
    #[error("register {0} is reserved as a scratch register")]
    ScratchConflict(RegisterId),
}

/// Invalid configuration detected before any search work happens.
#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid configuration: {message}")]
pub struct ConfigError {
    pub message: String,
}

impl ConfigError {
    pub fn invalid(message: impl Into<String>) -> Self {
        Self {
            message: message.into(),
        }
    }
}

/// Instance file problems.
#[derive(Debug, Error)]
pub enum InstanceError {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Aggregation problems.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScoringError {
    #[error("no completed run for method `{method}` on instance `{instance}`")]
    MissingCell { method: String, instance: String },
    #[error("no records to score")]
    Empty,
}

/// Umbrella error for the experiment harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Scoring(#[from] ScoringError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{context}: {message}")]
    Format { context: String, message: String },
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    pub fn format(context: impl Into<String>, message: impl ToString) -> Self {
        Error::Format {
            context: context.into(),
            message: message.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

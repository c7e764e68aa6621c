//! Selection hyper-heuristics built from transformed low-level heuristic
//! sets, with Max-SAT, bin packing and TSP domains.

pub mod acceptance;
pub mod domains;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod selectors;
pub mod vllh;

pub use acceptance::{AcceptanceStrategy, ScheduleVariant, StrategyKind, TauSchedule};
pub use domains::{DomainKind, Instance, InstanceFormat};
pub use engine::{BudgetClock, DomainContract, Engine, LlhCategory, Problem, RegisterId};
pub use error::{ConfigError, EngineError, Error, InstanceError, Result, ScoringError};
pub use selectors::{
    HyperHeuristicRun, MethodSpec, RunOutcome, Selector, SelectorPlugins, Variant,
};
pub use vllh::{MethodKind, VirtualLlh, VirtualLlhSet};

//! Fixtures shared by the benchmarks.

use hyperset_core::domains::generate_instance;
use hyperset_core::engine::{BudgetClock, LlhCategory, LlhDescriptor};
use hyperset_core::selectors::CURRENT;
use hyperset_core::{DomainContract, DomainKind, Instance};

pub const SIZES: [usize; 2] = [100, 500];

pub fn instance(kind: DomainKind, size: usize) -> Instance {
    generate_instance(kind, size, 1).expect("benchmark sizes are in range")
}

/// An engine with a constructed solution in the current register.
pub fn warm_engine(instance: &Instance, seed: u64) -> Box<dyn DomainContract> {
    let mut engine = instance.engine(seed);
    engine.init_solution(CURRENT).expect("fresh engine");
    engine.take_ticks();
    engine
}

/// Non-crossover heuristics, which a single register can drive.
pub fn search_llhs(engine: &dyn DomainContract) -> Vec<LlhDescriptor> {
    engine
        .llh_set()
        .iter()
        .copied()
        .filter(|d| d.category != LlhCategory::Crossover)
        .collect()
}

/// A virtual-time budget large enough never to run out inside a benchmark.
pub fn endless_clock() -> BudgetClock {
    BudgetClock::virtual_ticks(u64::MAX / 4, 1000).expect("positive budget")
}

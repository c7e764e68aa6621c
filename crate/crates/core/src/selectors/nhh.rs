//! Naive hyper-heuristic: uniform category, then uniform heuristic, and the
//! outcome of every application is kept.

use rand::Rng;

use crate::engine::{LlhCategory, SearchRng};
use crate::error::{ConfigError, EngineError};
use crate::vllh::VirtualLlhSet;

use super::{Selector, StepContext};

const CATEGORIES: [LlhCategory; 3] = [
    LlhCategory::LocalSearch,
    LlhCategory::RuinRecreate,
    LlhCategory::Mutation,
];

/// Draws an entry index: a uniform pick among the non-empty LS/RR/MUT
/// categories, then a uniform pick inside the category.
pub fn nhh_select(rng: &mut SearchRng, set: &VirtualLlhSet) -> Result<usize, ConfigError> {
    let mut pools: [&[usize]; 3] = [&[]; 3];
    let mut count = 0;
    for category in CATEGORIES {
        let entries = set.category_entries(category);
        if !entries.is_empty() {
            pools[count] = entries;
            count += 1;
        }
    }
    if count == 0 {
        return Err(ConfigError::invalid(
            "no LS, RR or MUT heuristic to select from",
        ));
    }
    let pool = pools[rng.random_range(0..count)];
    Ok(pool[rng.random_range(0..pool.len())])
}

#[derive(Debug, Clone, Default)]
pub struct Nhh;

impl Nhh {
    pub fn new() -> Self {
        Nhh
    }
}

impl Selector for Nhh {
    fn name(&self) -> &str {
        "NHH"
    }

    fn start(&mut self, set: &VirtualLlhSet) -> Result<(), ConfigError> {
        if CATEGORIES
            .iter()
            .all(|&c| set.category_entries(c).is_empty())
        {
            return Err(ConfigError::invalid(
                "NHH needs at least one LS, RR or MUT heuristic",
            ));
        }
        Ok(())
    }

    fn step(&mut self, ctx: &mut StepContext<'_>) -> Result<(), EngineError> {
        let set = ctx.set;
        let index = nhh_select(ctx.rng(), set).expect("checked in start");
        ctx.apply(index)?;
        Ok(())
    }
}

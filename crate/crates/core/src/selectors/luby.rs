//! Uniform random selection with restarts to the best solution on the Luby
//! schedule.

use rand::Rng;

use crate::engine::LlhCategory;
use crate::error::{ConfigError, EngineError};
use crate::vllh::VirtualLlhSet;

use super::{Selector, StepContext};

/// Virtual heuristic applications per Luby unit unless configured.
pub const DEFAULT_RESTART_UNIT: u64 = 50;

/// The `i`-th term (1-based) of the Luby sequence 1,1,2,1,1,2,4,...
pub fn luby(i: u64) -> Result<u64, ConfigError> {
    if i == 0 {
        return Err(ConfigError::invalid("Luby index starts at 1"));
    }
    let mut i = i;
    loop {
        // smallest k with i <= 2^k - 1
        let k = 64 - i.leading_zeros();
        if k < 64 && i == (1u64 << k) - 1 {
            return Ok(1 << (k - 1));
        }
        if k == 64 && i == u64::MAX {
            return Ok(1 << 63);
        }
        i = i - (1 << (k - 1)) + 1;
    }
}

#[derive(Debug, Clone)]
pub struct Luby {
    restart_unit: u64,
    steps_since_restart: u64,
    luby_index: u64,
    steps: u64,
    pool: Vec<usize>,
    restarts: Vec<u64>,
}

impl Luby {
    pub fn new(restart_unit: u64) -> Self {
        assert!(restart_unit > 0, "restart unit must be positive");
        Self {
            restart_unit,
            steps_since_restart: 0,
            luby_index: 1,
            steps: 0,
            pool: Vec::new(),
            restarts: Vec::new(),
        }
    }

    pub fn luby_index(&self) -> u64 {
        self.luby_index
    }

    pub fn steps_since_restart(&self) -> u64 {
        self.steps_since_restart
    }

    /// Step counts after which each restart happened.
    pub fn restarts(&self) -> &[u64] {
        &self.restarts
    }

    fn segment_length(&self) -> u64 {
        self.restart_unit
            .saturating_mul(luby(self.luby_index).expect("index starts at 1"))
    }
}

impl Selector for Luby {
    fn name(&self) -> &str {
        "LUBY"
    }

    fn start(&mut self, set: &VirtualLlhSet) -> Result<(), ConfigError> {
        // crossovers need a second parent and single-point search has none
        self.pool = (0..set.len())
            .filter(|&i| set.entries()[i].category() != LlhCategory::Crossover)
            .collect();
        if self.pool.is_empty() {
            return Err(ConfigError::invalid(
                "LUBY needs at least one non-crossover heuristic",
            ));
        }
        Ok(())
    }

    fn step(&mut self, ctx: &mut StepContext<'_>) -> Result<(), EngineError> {
        let pick = ctx.rng().random_range(0..self.pool.len());
        ctx.apply(self.pool[pick])?;
        self.steps += 1;
        self.steps_since_restart += 1;
        if self.steps_since_restart >= self.segment_length() {
            ctx.restart_from_best()?;
            self.steps_since_restart = 0;
            self.luby_index += 1;
            self.restarts.push(self.steps);
        }
        Ok(())
    }
}

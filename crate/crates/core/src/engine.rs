//! Domain contract shared by every hyper-heuristic component.
//!
//! A problem implementation ([`Problem`]) only knows how to build, evaluate
//! and modify solutions. [`Engine`] wraps it with the stateful bits the
//! search layer relies on: the solution register bank, the global best cost,
//! the perturbation intensity parameter and work-tick accounting. Search code
//! talks to the engine through the object-safe [`DomainContract`] trait.

use std::fmt;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, EngineError};

/// Objective value. All domains minimize.
pub type Cost = f64;

/// Random source used throughout the crate; fixed so seeded runs stay
/// reproducible across platforms.
pub type SearchRng = ChaCha8Rng;

/// Builds a [`SearchRng`] for the given seed and stream.
pub fn seeded_rng(seed: u64, stream: u64) -> SearchRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Perturbation intensity a domain starts with.
pub const DEFAULT_INTENSITY: f64 = 0.2;

/// Number of solution registers in a freshly built engine.
pub const DEFAULT_REGISTER_COUNT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LlhCategory {
    /// Local search: never returns a worse solution.
    #[serde(rename = "LS")]
    LocalSearch,
    /// Ruin and recreate.
    #[serde(rename = "RR")]
    RuinRecreate,
    /// Random mutation.
    #[serde(rename = "MUT")]
    Mutation,
    /// Crossover of two parents.
    #[serde(rename = "XO")]
    Crossover,
}

impl LlhCategory {
    pub const ALL: [LlhCategory; 4] = [
        LlhCategory::LocalSearch,
        LlhCategory::RuinRecreate,
        LlhCategory::Mutation,
        LlhCategory::Crossover,
    ];

    pub fn index(self) -> usize {
        match self {
            LlhCategory::LocalSearch => 0,
            LlhCategory::RuinRecreate => 1,
            LlhCategory::Mutation => 2,
            LlhCategory::Crossover => 3,
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            LlhCategory::LocalSearch => "LS",
            LlhCategory::RuinRecreate => "RR",
            LlhCategory::Mutation => "MUT",
            LlhCategory::Crossover => "XO",
        }
    }

    /// Whether a perturbation intensity parameter may affect this category.
    pub fn is_perturbative(self) -> bool {
        matches!(self, LlhCategory::RuinRecreate | LlhCategory::Mutation)
    }
}

impl fmt::Display for LlhCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

/// Identity of one base heuristic as seen by a hyper-heuristic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LlhDescriptor {
    pub id: usize,
    pub category: LlhCategory,
    pub intensity_sensitive: bool,
}

impl LlhDescriptor {
    pub fn new(id: usize, category: LlhCategory, intensity_sensitive: bool) -> Self {
        Self {
            id,
            category,
            intensity_sensitive,
        }
    }
}

/// Checks the descriptor-list invariants: dense ids and intensity flags only
/// on perturbative categories.
pub fn validate_llh_set(llhs: &[LlhDescriptor]) -> Result<(), ConfigError> {
    for (position, llh) in llhs.iter().enumerate() {
        if llh.id != position {
            return Err(ConfigError::invalid(format!(
                "LLH ids must be dense: position {position} holds id {}",
                llh.id
            )));
        }
        if llh.intensity_sensitive && !llh.category.is_perturbative() {
            return Err(ConfigError::invalid(format!(
                "LLH {} is a {} heuristic and cannot be intensity sensitive",
                llh.id, llh.category
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RegisterId(pub usize);

impl fmt::Display for RegisterId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "r{}", self.0)
    }
}

/// A problem domain: an immutable instance plus its heuristics.
///
/// Implementations keep the cost of a solution cached inside the solution so
/// that [`Problem::cost`] is O(1); [`Problem::evaluate`] recomputes it from
/// scratch and exists for consistency checks.
pub trait Problem: Send + Sync {
    type Solution: Clone + Send + fmt::Debug;

    fn name(&self) -> &str;

    fn llhs(&self) -> &[LlhDescriptor];

    /// Builds a fresh solution. Returns it with the work ticks spent.
    fn construct(&self, rng: &mut SearchRng) -> (Self::Solution, u64);

    fn cost(&self, solution: &Self::Solution) -> Cost;

    fn evaluate(&self, solution: &Self::Solution) -> Cost;

    fn is_feasible(&self, solution: &Self::Solution) -> bool;

    /// Applies heuristic `llh` in place. `partner` is the second parent for
    /// crossover heuristics and `None` otherwise. Returns the work ticks spent.
    fn apply(
        &self,
        llh: usize,
        solution: &mut Self::Solution,
        partner: Option<&Self::Solution>,
        intensity: f64,
        rng: &mut SearchRng,
    ) -> u64;
}

/// Operations a hyper-heuristic may perform on a domain.
pub trait DomainContract: Send {
    fn name(&self) -> &str;

    fn llh_set(&self) -> &[LlhDescriptor];

    fn register_count(&self) -> usize;

    fn init_solution(&mut self, register: RegisterId) -> Result<Cost, EngineError>;

    fn copy_solution(&mut self, src: RegisterId, dst: RegisterId) -> Result<(), EngineError>;

    fn cost(&self, register: RegisterId) -> Result<Cost, EngineError>;

    /// Best cost observed in this run; `+inf` before the first solution.
    fn global_best_cost(&self) -> Cost;

    fn apply_llh(
        &mut self,
        llh: usize,
        src: RegisterId,
        dst: RegisterId,
    ) -> Result<Cost, EngineError>;

    fn apply_crossover(
        &mut self,
        llh: usize,
        first: RegisterId,
        second: RegisterId,
        dst: RegisterId,
    ) -> Result<Cost, EngineError>;

    fn set_perturbation_intensity(&mut self, value: f64) -> Result<(), EngineError>;

    fn restore_perturbation_intensity(&mut self);

    fn perturbation_intensity(&self) -> f64;

    /// Drains the work ticks accumulated since the previous call.
    fn take_ticks(&mut self) -> u64;
}

/// Stateful wrapper that turns a [`Problem`] into a [`DomainContract`].
pub struct Engine<P: Problem> {
    problem: P,
    registers: Vec<Option<P::Solution>>,
    rng: SearchRng,
    intensity: f64,
    saved_intensity: Option<f64>,
    best: Cost,
    pending_ticks: u64,
}

impl<P: Problem> Engine<P> {
    pub fn new(problem: P, seed: u64) -> Self {
        Self::with_registers(problem, seed, DEFAULT_REGISTER_COUNT)
    }

    pub fn with_registers(problem: P, seed: u64, register_count: usize) -> Self {
        Self {
            problem,
            registers: vec![None; register_count],
            rng: seeded_rng(seed, 0),
            intensity: DEFAULT_INTENSITY,
            saved_intensity: None,
            best: Cost::INFINITY,
            pending_ticks: 0,
        }
    }

    pub fn problem(&self) -> &P {
        &self.problem
    }

    pub fn solution(&self, register: RegisterId) -> Result<&P::Solution, EngineError> {
        self.slot(register)?
            .as_ref()
            .ok_or(EngineError::EmptyRegister(register))
    }

    /// Stores an externally built solution; counts towards the global best.
    pub fn store(
        &mut self,
        register: RegisterId,
        solution: P::Solution,
    ) -> Result<Cost, EngineError> {
        let cost = self.problem.cost(&solution);
        *self.slot_mut(register)? = Some(solution);
        self.observe(cost);
        Ok(cost)
    }

    fn slot(&self, register: RegisterId) -> Result<&Option<P::Solution>, EngineError> {
        self.registers
            .get(register.0)
            .ok_or(EngineError::RegisterOutOfRange {
                register,
                count: self.registers.len(),
            })
    }

    fn slot_mut(&mut self, register: RegisterId) -> Result<&mut Option<P::Solution>, EngineError> {
        let count = self.registers.len();
        self.registers
            .get_mut(register.0)
            .ok_or(EngineError::RegisterOutOfRange { register, count })
    }

    fn observe(&mut self, cost: Cost) {
        if cost < self.best {
            self.best = cost;
        }
    }

    fn descriptor(&self, llh: usize) -> Result<LlhDescriptor, EngineError> {
        self.problem
            .llhs()
            .get(llh)
            .copied()
            .ok_or(EngineError::UnknownLlh(llh))
    }

    /// Copies `src` into a detached solution ready to be modified for `dst`,
    /// reusing `dst`'s allocation when possible.
    fn detach_copy(
        &mut self,
        src: RegisterId,
        dst: RegisterId,
    ) -> Result<P::Solution, EngineError> {
        self.solution(src)?;
        self.slot(dst)?;
        if src == dst {
            return Ok(self.registers[src.0].take().expect("checked above"));
        }
        let existing = self.registers[dst.0].take();
        let source = self.registers[src.0].as_ref().expect("checked above");
        let target = match existing {
            Some(mut existing) => {
                existing.clone_from(source);
                existing
            }
            None => source.clone(),
        };
        Ok(target)
    }
}

impl<P: Problem> DomainContract for Engine<P> {
    fn name(&self) -> &str {
        self.problem.name()
    }

    fn llh_set(&self) -> &[LlhDescriptor] {
        self.problem.llhs()
    }

    fn register_count(&self) -> usize {
        self.registers.len()
    }

    fn init_solution(&mut self, register: RegisterId) -> Result<Cost, EngineError> {
        self.slot(register)?;
        let (solution, ticks) = self.problem.construct(&mut self.rng);
        self.pending_ticks += ticks;
        self.store(register, solution)
    }

    fn copy_solution(&mut self, src: RegisterId, dst: RegisterId) -> Result<(), EngineError> {
        let copied = self.detach_copy(src, dst)?;
        self.registers[dst.0] = Some(copied);
        Ok(())
    }

    fn cost(&self, register: RegisterId) -> Result<Cost, EngineError> {
        Ok(self.problem.cost(self.solution(register)?))
    }

    fn global_best_cost(&self) -> Cost {
        self.best
    }

    fn apply_llh(
        &mut self,
        llh: usize,
        src: RegisterId,
        dst: RegisterId,
    ) -> Result<Cost, EngineError> {
        let descriptor = self.descriptor(llh)?;
        if descriptor.category == LlhCategory::Crossover {
            return Err(EngineError::CrossoverNeedsTwoParents(llh));
        }
        let mut working = self.detach_copy(src, dst)?;
        let ticks = self
            .problem
            .apply(llh, &mut working, None, self.intensity, &mut self.rng);
        let cost = self.problem.cost(&working);
        self.registers[dst.0] = Some(working);
        self.pending_ticks += ticks;
        self.observe(cost);
        Ok(cost)
    }

    fn apply_crossover(
        &mut self,
        llh: usize,
        first: RegisterId,
        second: RegisterId,
        dst: RegisterId,
    ) -> Result<Cost, EngineError> {
        let descriptor = self.descriptor(llh)?;
        if descriptor.category != LlhCategory::Crossover {
            return Err(EngineError::NotCrossover(llh));
        }
        let partner = self.solution(second)?.clone();
        let mut working = self.detach_copy(first, dst)?;
        let ticks = self.problem.apply(
            llh,
            &mut working,
            Some(&partner),
            self.intensity,
            &mut self.rng,
        );
        let cost = self.problem.cost(&working);
        self.registers[dst.0] = Some(working);
        self.pending_ticks += ticks;
        self.observe(cost);
        Ok(cost)
    }

    fn set_perturbation_intensity(&mut self, value: f64) -> Result<(), EngineError> {
        if !(0.0..=1.0).contains(&value) {
            return Err(EngineError::InvalidIntensity(value));
        }
        self.saved_intensity = Some(self.intensity);
        self.intensity = value;
        Ok(())
    }

    fn restore_perturbation_intensity(&mut self) {
        if let Some(saved) = self.saved_intensity.take() {
            self.intensity = saved;
        }
    }

    fn perturbation_intensity(&self) -> f64 {
        self.intensity
    }

    fn take_ticks(&mut self) -> u64 {
        std::mem::take(&mut self.pending_ticks)
    }
}

/// How the search budget is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClockMode {
    WallClock,
    Virtual,
}

/// Virtual ticks per millisecond unless configured otherwise.
pub const DEFAULT_TICKS_PER_MS: u64 = 1000;

#[derive(Debug, Clone)]
enum ClockState {
    Wall { start: Instant },
    Virtual { ticks: u64, ticks_per_ms: u64 },
}

/// Tracks consumption of a run's search budget.
///
/// In virtual mode time only advances through [`BudgetClock::advance`], fed
/// with the work ticks domains report, which makes runs bit-reproducible.
#[derive(Debug, Clone)]
pub struct BudgetClock {
    total: Duration,
    state: ClockState,
}

impl BudgetClock {
    pub fn wall_clock(total: Duration) -> Result<Self, ConfigError> {
        Self::check_total(total)?;
        Ok(Self {
            total,
            state: ClockState::Wall {
                start: Instant::now(),
            },
        })
    }

    pub fn virtual_ticks(total_ticks: u64, ticks_per_ms: u64) -> Result<Self, ConfigError> {
        if ticks_per_ms == 0 {
            return Err(ConfigError::invalid("ticks_per_ms must be positive"));
        }
        let total = ticks_to_duration(total_ticks, ticks_per_ms);
        Self::check_total(total)?;
        Ok(Self {
            total,
            state: ClockState::Virtual {
                ticks: 0,
                ticks_per_ms,
            },
        })
    }

    fn check_total(total: Duration) -> Result<(), ConfigError> {
        if total.is_zero() {
            return Err(ConfigError::invalid("search budget must be positive"));
        }
        Ok(())
    }

    pub fn mode(&self) -> ClockMode {
        match self.state {
            ClockState::Wall { .. } => ClockMode::WallClock,
            ClockState::Virtual { .. } => ClockMode::Virtual,
        }
    }

    pub fn total(&self) -> Duration {
        self.total
    }

    /// Feeds work ticks reported by a domain. Ignored by wall clocks.
    pub fn advance(&mut self, work_ticks: u64) {
        if let ClockState::Virtual { ticks, .. } = &mut self.state {
            *ticks += work_ticks;
        }
    }

    pub fn elapsed(&self) -> Duration {
        match self.state {
            ClockState::Wall { start } => start.elapsed(),
            ClockState::Virtual {
                ticks,
                ticks_per_ms,
            } => ticks_to_duration(ticks, ticks_per_ms),
        }
    }

    pub fn consumed_fraction(&self) -> f64 {
        consumed_fraction(self.elapsed(), self.total)
    }

    pub fn exhausted(&self) -> bool {
        self.elapsed() >= self.total
    }
}

fn ticks_to_duration(ticks: u64, ticks_per_ms: u64) -> Duration {
    let nanos = u128::from(ticks) * 1_000_000 / u128::from(ticks_per_ms);
    Duration::from_nanos(u64::try_from(nanos).unwrap_or(u64::MAX))
}

/// Fraction of `total` covered by `elapsed`, saturating at 1.
pub fn consumed_fraction(elapsed: Duration, total: Duration) -> f64 {
    debug_assert!(!total.is_zero());
    (elapsed.as_secs_f64() / total.as_secs_f64()).min(1.0)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// Tiny domain used to exercise the engine: a solution is a vector of
    /// integers and its cost is their sum.
    #[derive(Debug, Clone)]
    pub struct SumProblem {
        llhs: Vec<LlhDescriptor>,
    }

    #[derive(Debug, Clone, PartialEq)]
    pub struct SumSolution {
        pub values: Vec<i64>,
        cost: f64,
    }

    impl SumProblem {
        pub fn new() -> Self {
            Self {
                llhs: vec![
                    LlhDescriptor::new(0, LlhCategory::LocalSearch, false),
                    LlhDescriptor::new(1, LlhCategory::RuinRecreate, true),
                    LlhDescriptor::new(2, LlhCategory::Mutation, true),
                    LlhDescriptor::new(3, LlhCategory::Crossover, false),
                ],
            }
        }

        fn refresh(sol: &mut SumSolution) {
            sol.cost = sol.values.iter().sum::<i64>() as f64;
        }
    }

    impl Problem for SumProblem {
        type Solution = SumSolution;

        fn name(&self) -> &str {
            "sum"
        }

        fn llhs(&self) -> &[LlhDescriptor] {
            &self.llhs
        }

        fn construct(&self, rng: &mut SearchRng) -> (SumSolution, u64) {
            use rand::Rng;
            let mut sol = SumSolution {
                values: (0..8).map(|_| rng.random_range(0..100)).collect(),
                cost: 0.0,
            };
            Self::refresh(&mut sol);
            (sol, 8)
        }

        fn cost(&self, solution: &SumSolution) -> Cost {
            solution.cost
        }

        fn evaluate(&self, solution: &SumSolution) -> Cost {
            solution.values.iter().sum::<i64>() as f64
        }

        fn is_feasible(&self, solution: &SumSolution) -> bool {
            solution.values.len() == 8
        }

        fn apply(
            &self,
            llh: usize,
            solution: &mut SumSolution,
            partner: Option<&SumSolution>,
            intensity: f64,
            rng: &mut SearchRng,
        ) -> u64 {
            use rand::Rng;
            match llh {
                0 => {
                    if let Some(max) = solution.values.iter_mut().max() {
                        *max = (*max - 1).max(0);
                    }
                }
                1 | 2 => {
                    let touched = ((intensity * 8.0).ceil() as usize).max(1);
                    for _ in 0..touched {
                        let i = rng.random_range(0..8);
                        solution.values[i] = rng.random_range(0..100);
                    }
                }
                _ => {
                    let other = partner.expect("crossover partner");
                    for (v, o) in solution.values.iter_mut().zip(&other.values) {
                        if rng.random_bool(0.5) {
                            *v = *o;
                        }
                    }
                }
            }
            Self::refresh(solution);
            3
        }
    }

    pub fn sum_engine(seed: u64) -> Engine<SumProblem> {
        Engine::new(SumProblem::new(), seed)
    }

    #[test]
    fn consumed_fraction_examples() {
        let total = Duration::from_secs(276);
        assert_eq!(consumed_fraction(Duration::ZERO, total), 0.0);
        assert_eq!(consumed_fraction(total, total), 1.0);
        assert_eq!(consumed_fraction(Duration::from_secs(138), total), 0.5);
        assert_eq!(consumed_fraction(Duration::from_secs(300), total), 1.0);
    }

    #[test]
    fn zero_budget_is_rejected() {
        assert!(BudgetClock::wall_clock(Duration::ZERO).is_err());
        assert!(BudgetClock::virtual_ticks(0, 1000).is_err());
        assert!(BudgetClock::virtual_ticks(10, 0).is_err());
    }

    #[test]
    fn virtual_clock_advances_only_on_ticks() {
        let mut clock = BudgetClock::virtual_ticks(2000, 1000).unwrap();
        assert_eq!(clock.total(), Duration::from_millis(2));
        assert_eq!(clock.consumed_fraction(), 0.0);
        clock.advance(500);
        assert_eq!(clock.elapsed(), Duration::from_micros(500));
        assert_eq!(clock.consumed_fraction(), 0.25);
        clock.advance(5000);
        assert!(clock.exhausted());
        assert_eq!(clock.consumed_fraction(), 1.0);
    }

    #[test]
    fn wall_clock_fraction_is_monotone() {
        let clock = BudgetClock::wall_clock(Duration::from_secs(60)).unwrap();
        let a = clock.consumed_fraction();
        let b = clock.consumed_fraction();
        assert!((0.0..=1.0).contains(&a));
        assert!(b >= a);
        assert_eq!(clock.mode(), ClockMode::WallClock);
    }

    #[test]
    fn copy_semantics() {
        let mut engine = sum_engine(1);
        let (r0, r1) = (RegisterId(0), RegisterId(1));
        engine.init_solution(r0).unwrap();
        engine.copy_solution(r0, r1).unwrap();
        assert_eq!(engine.cost(r1).unwrap(), engine.cost(r0).unwrap());

        let before = engine.cost(r0).unwrap();
        engine.copy_solution(r0, r0).unwrap();
        assert_eq!(engine.cost(r0).unwrap(), before);

        engine.apply_llh(2, r1, r1).unwrap();
        assert_eq!(engine.cost(r0).unwrap(), before);
    }

    #[test]
    fn empty_register_is_an_error() {
        let mut engine = sum_engine(1);
        assert!(matches!(
            engine.cost(RegisterId(3)),
            Err(EngineError::EmptyRegister(RegisterId(3)))
        ));
        assert!(matches!(
            engine.copy_solution(RegisterId(3), RegisterId(0)),
            Err(EngineError::EmptyRegister(_))
        ));
        assert!(matches!(
            engine.apply_llh(0, RegisterId(3), RegisterId(0)),
            Err(EngineError::EmptyRegister(_))
        ));
        assert!(matches!(
            engine.cost(RegisterId(99)),
            Err(EngineError::RegisterOutOfRange { .. })
        ));
    }

    #[test]
    fn crossover_requires_dedicated_call() {
        let mut engine = sum_engine(2);
        engine.init_solution(RegisterId(0)).unwrap();
        engine.init_solution(RegisterId(1)).unwrap();
        assert!(matches!(
            engine.apply_llh(3, RegisterId(0), RegisterId(2)),
            Err(EngineError::CrossoverNeedsTwoParents(3))
        ));
        assert!(matches!(
            engine.apply_crossover(1, RegisterId(0), RegisterId(1), RegisterId(2)),
            Err(EngineError::NotCrossover(1))
        ));
        engine
            .apply_crossover(3, RegisterId(0), RegisterId(1), RegisterId(2))
            .unwrap();
        assert!(engine.cost(RegisterId(2)).is_ok());
    }

    #[test]
    fn intensity_single_slot_restore() {
        let mut engine = sum_engine(3);
        assert_eq!(engine.perturbation_intensity(), DEFAULT_INTENSITY);
        engine.set_perturbation_intensity(0.7).unwrap();
        assert_eq!(engine.perturbation_intensity(), 0.7);
        engine.restore_perturbation_intensity();
        assert_eq!(engine.perturbation_intensity(), DEFAULT_INTENSITY);
        // nothing saved: restore is a no-op
        engine.restore_perturbation_intensity();
        assert_eq!(engine.perturbation_intensity(), DEFAULT_INTENSITY);
        assert!(engine.set_perturbation_intensity(1.5).is_err());
    }

    #[test]
    fn global_best_matches_shadow_tracker() {
        use rand::Rng;
        let mut engine = sum_engine(4);
        let mut rng = seeded_rng(9, 0);
        let mut shadow = f64::INFINITY;
        shadow = shadow.min(engine.init_solution(RegisterId(0)).unwrap());
        shadow = shadow.min(engine.init_solution(RegisterId(1)).unwrap());
        let mut last_best = engine.global_best_cost();
        for _ in 0..2000 {
            let llh = rng.random_range(0..3);
            let src = RegisterId(rng.random_range(0..2));
            let dst = RegisterId(rng.random_range(0..2));
            shadow = shadow.min(engine.apply_llh(llh, src, dst).unwrap());
            assert_eq!(engine.global_best_cost(), shadow);
            assert!(engine.global_best_cost() <= last_best);
            last_best = engine.global_best_cost();
        }
    }

    #[test]
    fn ticks_are_drained() {
        let mut engine = sum_engine(5);
        engine.init_solution(RegisterId(0)).unwrap();
        engine.apply_llh(0, RegisterId(0), RegisterId(0)).unwrap();
        assert_eq!(engine.take_ticks(), 11);
        assert_eq!(engine.take_ticks(), 0);
    }

    #[test]
    fn descriptor_validation() {
        let ok = SumProblem::new();
        assert!(validate_llh_set(ok.llhs()).is_ok());
        let sparse = [LlhDescriptor::new(1, LlhCategory::LocalSearch, false)];
        assert!(validate_llh_set(&sparse).is_err());
        let bad_flag = [LlhDescriptor::new(0, LlhCategory::LocalSearch, true)];
        assert!(validate_llh_set(&bad_flag).is_err());
    }
}

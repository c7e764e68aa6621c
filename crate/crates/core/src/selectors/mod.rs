//! Selection hyper-heuristics and the variant ladder.
//!
//! A [`Selector`] decides which virtual heuristic to apply next; a
//! [`HyperHeuristicRun`] owns everything else about one search run (domain
//! engine, virtual set, clock, improvement statistic, trajectory).

pub mod luby;
pub mod nhh;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::acceptance::AcceptanceStrategy;
use crate::domains::Instance;
use crate::engine::{seeded_rng, BudgetClock, Cost, DomainContract, RegisterId, SearchRng};
use crate::error::{ConfigError, EngineError};
use crate::vllh::{
    acceptance_transform, apply_virtual_llh, domain_amplification, repetition_transform,
    star_preset, transform, Context, MethodKind, ScratchRegisters, SearchContext, TransformSpec,
    VirtualLlhSet,
};

pub use luby::{luby, Luby, DEFAULT_RESTART_UNIT};
pub use nhh::{nhh_select, Nhh};

/// Register holding the working solution.
pub const CURRENT: RegisterId = RegisterId(0);
/// Register holding the best solution accepted into [`CURRENT`].
pub const BEST: RegisterId = RegisterId(1);

/// Stream of the per-run search random source (the engine uses stream 0).
const SEARCH_STREAM: u64 = 2;

/// What a selector sees during one step.
pub struct StepContext<'a> {
    pub domain: &'a mut dyn DomainContract,
    pub set: &'a VirtualLlhSet,
    pub search: &'a mut SearchContext,
}

impl StepContext<'_> {
    pub fn rng(&mut self) -> &mut SearchRng {
        &mut self.search.rng
    }

    /// Applies entry `index` from current to current and refreshes the best
    /// register on strict improvement. Returns the new current cost.
    pub fn apply(&mut self, index: usize) -> Result<Cost, EngineError> {
        let h = self.set.get(index).ok_or(EngineError::UnknownLlh(index))?;
        let cost = apply_virtual_llh(self.domain, h, self.search, CURRENT, CURRENT)?;
        if cost < self.domain.cost(BEST)? {
            self.domain.copy_solution(CURRENT, BEST)?;
        }
        Ok(cost)
    }

    /// Continues from the best solution of the run.
    pub fn restart_from_best(&mut self) -> Result<(), EngineError> {
        self.domain.copy_solution(BEST, CURRENT)
    }
}

/// A selection strategy. One instance drives exactly one run.
pub trait Selector: Send {
    fn name(&self) -> &str;

    /// Called once after the initial solution is in place.
    fn start(&mut self, set: &VirtualLlhSet) -> Result<(), ConfigError>;

    fn step(&mut self, ctx: &mut StepContext<'_>) -> Result<(), EngineError>;
}

/// Builds a fresh selector for every run.
pub type SelectorFactory = Arc<dyn Fn() -> Box<dyn Selector> + Send + Sync>;

/// Externally supplied selectors.
#[derive(Clone, Default)]
pub struct SelectorPlugins {
    /// Fills the MC slot.
    pub mc: Option<SelectorFactory>,
}

impl fmt::Debug for SelectorPlugins {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SelectorPlugins")
            .field("mc", &self.mc.as_ref().map(|_| "<factory>"))
            .finish()
    }
}

/// Best-cost checkpoint: elapsed run time and the global best at that time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub elapsed_ms: f64,
    pub best_cost: Cost,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub best_cost: Cost,
    pub elapsed: Duration,
    pub steps: u64,
    pub trajectory: Vec<Checkpoint>,
}

pub struct HyperHeuristicRun {
    domain: Box<dyn DomainContract>,
    set: VirtualLlhSet,
    selector: Box<dyn Selector>,
    search: SearchContext,
    steps: u64,
    trajectory: Vec<Checkpoint>,
    initialized: bool,
}

impl HyperHeuristicRun {
    pub fn new(
        domain: Box<dyn DomainContract>,
        set: VirtualLlhSet,
        selector: Box<dyn Selector>,
        clock: BudgetClock,
        seed: u64,
    ) -> Result<Self, ConfigError> {
        set.check_against(domain.llh_set())?;
        if domain.register_count() < 4 {
            return Err(ConfigError::invalid(
                "a run needs at least 4 solution registers",
            ));
        }
        let scratch = ScratchRegisters::top_of(domain.register_count());
        Ok(Self {
            domain,
            set,
            selector,
            search: SearchContext::new(clock, seeded_rng(seed, SEARCH_STREAM), scratch),
            steps: 0,
            trajectory: Vec::new(),
            initialized: false,
        })
    }

    pub fn set(&self) -> &VirtualLlhSet {
        &self.set
    }

    pub fn domain(&self) -> &dyn DomainContract {
        self.domain.as_ref()
    }

    pub fn search(&self) -> &SearchContext {
        &self.search
    }

    pub fn selector(&self) -> &dyn Selector {
        self.selector.as_ref()
    }

    pub fn steps(&self) -> u64 {
        self.steps
    }

    /// Builds the initial solution into both working registers.
    pub fn initialize(&mut self) -> Result<Cost, crate::error::Error> {
        if self.initialized {
            return Err(ConfigError::invalid("run is already initialized").into());
        }
        let cost = self.domain.init_solution(CURRENT)?;
        self.search.clock.advance(self.domain.take_ticks());
        self.domain.copy_solution(CURRENT, BEST)?;
        self.selector.start(&self.set)?;
        self.initialized = true;
        self.checkpoint();
        Ok(cost)
    }

    pub fn step(&mut self) -> Result<(), EngineError> {
        assert!(self.initialized, "step before initialize");
        let mut ctx = StepContext {
            domain: self.domain.as_mut(),
            set: &self.set,
            search: &mut self.search,
        };
        self.selector.step(&mut ctx)?;
        self.steps += 1;
        if self.domain.global_best_cost()
            < self
                .trajectory
                .last()
                .map_or(Cost::INFINITY, |c| c.best_cost)
        {
            self.checkpoint();
        }
        Ok(())
    }

    fn checkpoint(&mut self) {
        self.trajectory.push(Checkpoint {
            elapsed_ms: self.search.clock.elapsed().as_secs_f64() * 1e3,
            best_cost: self.domain.global_best_cost(),
        });
    }

    /// Steps until the budget is spent.
    pub fn run(mut self) -> Result<RunOutcome, crate::error::Error> {
        if !self.initialized {
            self.initialize()?;
        }
        while !self.search.clock.exhausted() {
            self.step()?;
        }
        Ok(RunOutcome {
            best_cost: self.domain.global_best_cost(),
            elapsed: self.search.clock.elapsed(),
            steps: self.steps,
            trajectory: self.trajectory,
        })
    }
}

/// Rungs of the transformation ladder.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    /// Identity set.
    #[serde(rename = "x0")]
    X0,
    /// Domain amplification.
    #[serde(rename = "xplus")]
    Xplus,
    /// Acceptance transform.
    #[serde(rename = "xa")]
    XA,
    /// Acceptance and repetition transforms.
    #[serde(rename = "xar")]
    XAR,
    /// Acceptance, repetition and intensity transforms.
    #[serde(rename = "xstar")]
    Xstar,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::X0,
        Variant::Xplus,
        Variant::XA,
        Variant::XAR,
        Variant::Xstar,
    ];

    pub fn suffix(self) -> &'static str {
        match self {
            Variant::X0 => "0",
            Variant::Xplus => "+",
            Variant::XA => "A",
            Variant::XAR => "AR",
            Variant::Xstar => "*",
        }
    }
}

impl FromStr for Variant {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "x0" | "0" => Ok(Variant::X0),
            "xplus" | "x+" | "+" => Ok(Variant::Xplus),
            "xa" | "a" => Ok(Variant::XA),
            "xar" | "ar" => Ok(Variant::XAR),
            "xstar" | "x*" | "*" => Ok(Variant::Xstar),
            _ => Err(ConfigError::invalid(format!("unknown variant `{s}`"))),
        }
    }
}

/// A fully specified method: selector, ladder rung and extra transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSpec {
    pub id: String,
    pub method: MethodKind,
    pub variant: Variant,
    pub context: Context,
    /// Applied after the rung's own transforms.
    pub overrides: Vec<TransformSpec>,
    /// LUBY only.
    pub restart_unit: u64,
}

impl MethodSpec {
    pub fn new(method: MethodKind, variant: Variant) -> Self {
        Self {
            id: format!("{}{}", method.short_name(), variant.suffix()),
            method,
            variant,
            context: Context::Benchmark,
            overrides: Vec::new(),
            restart_unit: DEFAULT_RESTART_UNIT,
        }
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn with_override(mut self, spec: TransformSpec) -> Self {
        self.overrides.push(spec);
        self
    }

    pub fn with_context(mut self, context: Context) -> Self {
        self.context = context;
        self
    }

    /// `X0` plus an acceptance transform with `strategy` on RR and MUT.
    pub fn acceptance_only(method: MethodKind, strategy: AcceptanceStrategy) -> Self {
        Self::new(method, Variant::X0)
            .with_override(crate::vllh::acceptance_transform_with(strategy))
    }

    fn rung_transforms(&self) -> Vec<TransformSpec> {
        match self.variant {
            Variant::X0 | Variant::Xplus => Vec::new(),
            Variant::XA => vec![acceptance_transform(self.method)],
            Variant::XAR => vec![
                acceptance_transform(self.method),
                repetition_transform(self.method, self.context),
            ],
            Variant::Xstar => star_preset(self.method, self.context),
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.id.trim().is_empty() {
            return Err(ConfigError::invalid("method id is empty"));
        }
        if self.variant == Variant::Xplus && !self.overrides.is_empty() {
            return Err(ConfigError::invalid(format!(
                "method `{}`: transform overrides cannot be combined with domain amplification",
                self.id
            )));
        }
        if self.method == MethodKind::Luby && self.restart_unit == 0 {
            return Err(ConfigError::invalid("restart_unit must be positive"));
        }
        for spec in &self.overrides {
            spec.validate()?;
        }
        Ok(())
    }

    /// The virtual set this method searches with on a domain offering `llhs`.
    pub fn virtual_set(
        &self,
        llhs: &[crate::engine::LlhDescriptor],
    ) -> Result<VirtualLlhSet, ConfigError> {
        self.validate()?;
        if self.variant == Variant::Xplus {
            return Ok(domain_amplification(llhs));
        }
        let mut specs = self.rung_transforms();
        specs.extend(self.overrides.iter().cloned());
        transform(llhs, &specs, AcceptanceStrategy::AcceptAll)
    }
}

/// Immutable recipe for starting runs of one method.
#[derive(Clone)]
pub struct RunFactory {
    spec: MethodSpec,
    selector: SelectorFactory,
}

impl fmt::Debug for RunFactory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RunFactory")
            .field("spec", &self.spec)
            .finish_non_exhaustive()
    }
}

impl RunFactory {
    pub fn spec(&self) -> &MethodSpec {
        &self.spec
    }

    pub fn start(
        &self,
        instance: &Instance,
        seed: u64,
        clock: BudgetClock,
    ) -> Result<HyperHeuristicRun, ConfigError> {
        let domain = instance.engine(seed);
        let set = self.spec.virtual_set(domain.llh_set())?;
        HyperHeuristicRun::new(domain, set, (self.selector)(), clock, seed)
    }

    pub fn run(
        &self,
        instance: &Instance,
        seed: u64,
        clock: BudgetClock,
    ) -> Result<RunOutcome, crate::error::Error> {
        self.start(instance, seed, clock)?.run()
    }
}

/// Resolves a method spec into a run factory.
pub fn build_variant(
    spec: MethodSpec,
    plugins: &SelectorPlugins,
) -> Result<RunFactory, ConfigError> {
    spec.validate()?;
    let selector: SelectorFactory = match spec.method {
        MethodKind::Nhh => Arc::new(|| Box::new(Nhh::new()) as Box<dyn Selector>),
        MethodKind::Luby => {
            let unit = spec.restart_unit;
            Arc::new(move || Box::new(Luby::new(unit)) as Box<dyn Selector>)
        }
        MethodKind::Mc => plugins.mc.clone().ok_or_else(|| {
            ConfigError::invalid(format!(
                "method `{}` uses the MC slot but no MC selector is plugged in",
                spec.id
            ))
        })?,
    };
    Ok(RunFactory { spec, selector })
}

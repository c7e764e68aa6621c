//! Virtual low-level heuristics.
//!
//! A [`VirtualLlh`] wraps one base heuristic with three modifiers: an
//! acceptance strategy applied inside a repetition loop, an optional
//! repetition timeout and an optional perturbation intensity override.
//! Selectors operate on a [`VirtualLlhSet`] exactly as they would on the
//! original heuristic list.

use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::acceptance::{accept, AcceptanceStrategy, ImprovementStats, TauSchedule};
use crate::engine::{
    BudgetClock, Cost, DomainContract, LlhCategory, LlhDescriptor, RegisterId, SearchRng,
};
use crate::error::{ConfigError, EngineError};

#[derive(Debug, Clone, PartialEq)]
pub struct VirtualLlh {
    pub base: LlhDescriptor,
    pub accept: AcceptanceStrategy,
    /// Repetition timeout; `None` runs the base heuristic exactly once.
    pub duration: Option<Duration>,
    /// Intensity used while this heuristic runs; `None` keeps the domain's.
    pub intensity: Option<f64>,
}

impl VirtualLlh {
    /// The base heuristic applied once, accepting whatever it returns.
    pub fn plain(base: LlhDescriptor) -> Self {
        Self {
            base,
            accept: AcceptanceStrategy::AcceptAll,
            duration: None,
            intensity: None,
        }
    }

    pub fn category(&self) -> LlhCategory {
        self.base.category
    }
}

/// Immutable list of virtual heuristics with a per-category index.
#[derive(Debug, Clone, PartialEq)]
pub struct VirtualLlhSet {
    entries: Vec<VirtualLlh>,
    by_category: [Vec<usize>; 4],
}

impl VirtualLlhSet {
    pub fn new(entries: Vec<VirtualLlh>) -> Result<Self, ConfigError> {
        let mut by_category: [Vec<usize>; 4] = Default::default();
        for (i, entry) in entries.iter().enumerate() {
            entry.accept.validate()?;
            if let Some(intensity) = entry.intensity {
                check_intensity(intensity)?;
                if !entry.base.category.is_perturbative() {
                    return Err(ConfigError::invalid(format!(
                        "entry {i}: intensity override on a {} heuristic",
                        entry.base.category
                    )));
                }
            }
            if entry.duration.is_some_and(|d| d.is_zero()) {
                return Err(ConfigError::invalid(format!(
                    "entry {i}: zero repetition duration"
                )));
            }
            by_category[entry.base.category.index()].push(i);
        }
        Ok(Self {
            entries,
            by_category,
        })
    }

    pub fn entries(&self) -> &[VirtualLlh] {
        &self.entries
    }

    pub fn get(&self, index: usize) -> Option<&VirtualLlh> {
        self.entries.get(index)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entry indices whose base heuristic belongs to `category`.
    pub fn category_entries(&self, category: LlhCategory) -> &[usize] {
        &self.by_category[category.index()]
    }

    /// Checks that every base heuristic exists in the domain's list.
    pub fn check_against(&self, llhs: &[LlhDescriptor]) -> Result<(), ConfigError> {
        for entry in &self.entries {
            match llhs.get(entry.base.id) {
                Some(d) if *d == entry.base => {}
                _ => {
                    return Err(ConfigError::invalid(format!(
                        "virtual entry refers to LLH {} which the domain does not provide",
                        entry.base.id
                    )))
                }
            }
        }
        Ok(())
    }
}

fn check_intensity(value: f64) -> Result<(), ConfigError> {
    if (0.0..=1.0).contains(&value) {
        Ok(())
    } else {
        Err(ConfigError::invalid(format!(
            "intensity {value} is outside [0, 1]"
        )))
    }
}

/// A category-level transformation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TransformSpec {
    pub categories: Vec<LlhCategory>,
    pub acceptance: Option<AcceptanceStrategy>,
    pub duration: Option<Duration>,
    /// One duplicate per listed intensity for each intensity-sensitive
    /// heuristic in the targeted categories.
    pub intensities: Option<Vec<f64>>,
}

impl TransformSpec {
    pub fn targets(&self, category: LlhCategory) -> bool {
        self.categories.contains(&category)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.categories.is_empty() {
            return Err(ConfigError::invalid("transform targets no category"));
        }
        if let Some(acceptance) = &self.acceptance {
            acceptance.validate()?;
        }
        if self.duration.is_some_and(|d| d.is_zero()) {
            return Err(ConfigError::invalid("transform duration must be positive"));
        }
        if let Some(list) = &self.intensities {
            if list.is_empty() {
                return Err(ConfigError::invalid("intensity list is empty"));
            }
            for &v in list {
                check_intensity(v)?;
            }
        }
        Ok(())
    }
}

/// Builds a virtual set from `source` by applying `specs` in order.
///
/// Later specs refine the entries produced by earlier ones; intensity lists
/// multiply them. Heuristics outside every targeted category pass through
/// once with `default_accept`.
pub fn transform(
    source: &[LlhDescriptor],
    specs: &[TransformSpec],
    default_accept: AcceptanceStrategy,
) -> Result<VirtualLlhSet, ConfigError> {
    default_accept.validate()?;
    for (i, spec) in specs.iter().enumerate() {
        spec.validate()?;
        if spec.intensities.is_some()
            && !source
                .iter()
                .any(|d| d.intensity_sensitive && spec.targets(d.category))
        {
            return Err(ConfigError::invalid(format!(
                "transform {i} duplicates intensities but its categories contain no intensity-sensitive LLH"
            )));
        }
    }

    let mut entries = Vec::new();
    for base in source {
        let mut produced = vec![VirtualLlh {
            base: *base,
            accept: default_accept,
            duration: None,
            intensity: None,
        }];
        for spec in specs.iter().filter(|s| s.targets(base.category)) {
            for entry in &mut produced {
                if let Some(acceptance) = spec.acceptance {
                    entry.accept = acceptance;
                }
                if let Some(duration) = spec.duration {
                    entry.duration = Some(duration);
                }
            }
            if let (Some(list), true) = (&spec.intensities, base.intensity_sensitive) {
                produced = produced
                    .iter()
                    .flat_map(|entry| {
                        list.iter().map(move |&v| VirtualLlh {
                            intensity: Some(v),
                            ..entry.clone()
                        })
                    })
                    .collect();
            }
        }
        entries.extend(produced);
    }
    VirtualLlhSet::new(entries)
}

/// Repetition timeout of amplified duplicates.
pub const AMPLIFICATION_DURATION: Duration = Duration::from_millis(10);

/// Original heuristics plus one duplicate of each that repeats it for
/// [`AMPLIFICATION_DURATION`] keeping only strict improvements.
pub fn domain_amplification(source: &[LlhDescriptor]) -> VirtualLlhSet {
    let originals = source.iter().map(|d| VirtualLlh::plain(*d));
    let amplified = source.iter().map(|d| VirtualLlh {
        base: *d,
        accept: AcceptanceStrategy::DiscardWorse,
        duration: Some(AMPLIFICATION_DURATION),
        intensity: None,
    });
    VirtualLlhSet::new(originals.chain(amplified).collect())
        .expect("amplified entries are always valid")
}

/// Evenly spaced intensities covering the whole scale.
pub const SETUP_I: [f64; 10] = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
/// Lower half of the scale, weighted towards small intensities.
pub const SETUP_II: [f64; 9] = [0.05, 0.05, 0.05, 0.05, 0.1, 0.1, 0.2, 0.3, 0.5];
/// Small deviations around the default intensity.
pub const SETUP_III: [f64; 3] = [0.1, 0.2, 0.3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IntensitySetup {
    I,
    II,
    III,
}

impl IntensitySetup {
    pub fn values(self) -> &'static [f64] {
        match self {
            IntensitySetup::I => &SETUP_I,
            IntensitySetup::II => &SETUP_II,
            IntensitySetup::III => &SETUP_III,
        }
    }
}

/// Hyper-heuristics with built-in transformation presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    Nhh,
    Luby,
    /// Slot for an externally supplied Q-learning selector.
    Mc,
}

impl MethodKind {
    pub fn short_name(self) -> &'static str {
        match self {
            MethodKind::Nhh => "NHH",
            MethodKind::Luby => "LUBY",
            MethodKind::Mc => "MC",
        }
    }

    pub fn preset_family(self) -> crate::acceptance::PresetFamily {
        match self {
            MethodKind::Nhh => crate::acceptance::PresetFamily::Nhh,
            MethodKind::Luby | MethodKind::Mc => crate::acceptance::PresetFamily::McLuby,
        }
    }

    /// `τ_start` of the fixed R2R EXP acceptance transform.
    pub fn tau_start(self) -> f64 {
        match self {
            MethodKind::Nhh => 5.0,
            MethodKind::Luby => 7.5,
            MethodKind::Mc => 10.0,
        }
    }

    pub fn tau_end(self) -> f64 {
        crate::acceptance::parameter_scale(
            self.preset_family(),
            crate::acceptance::StrategyKind::RecordToRecord,
            crate::acceptance::ScheduleVariant::Exp,
        )
        .tau_end
        .expect("EXP rows carry tau_end")
    }

    pub fn repetition(self, context: Context) -> Duration {
        match (context, self) {
            (Context::RealWorld, _) => Duration::from_millis(10),
            (Context::Benchmark, MethodKind::Nhh) => Duration::from_millis(1),
            (Context::Benchmark, _) => Duration::from_micros(500),
        }
    }

    pub fn intensity_setup(self) -> IntensitySetup {
        match self {
            MethodKind::Nhh | MethodKind::Mc => IntensitySetup::II,
            MethodKind::Luby => IntensitySetup::III,
        }
    }
}

/// Problem context that tunes repetition timeouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Context {
    /// Fast benchmark heuristics.
    #[default]
    Benchmark,
    /// Slower, heavily constrained heuristics; repetitions lengthened to 10 ms.
    RealWorld,
}

const PERTURBATIVE: [LlhCategory; 2] = [LlhCategory::RuinRecreate, LlhCategory::Mutation];
const SEARCH_CATEGORIES: [LlhCategory; 3] = [
    LlhCategory::LocalSearch,
    LlhCategory::RuinRecreate,
    LlhCategory::Mutation,
];

/// R2R EXP acceptance on the perturbative categories.
pub fn acceptance_transform(method: MethodKind) -> TransformSpec {
    TransformSpec {
        categories: PERTURBATIVE.to_vec(),
        acceptance: Some(AcceptanceStrategy::RecordToRecord {
            schedule: TauSchedule::Exp {
                tau_start: method.tau_start(),
                tau_end: method.tau_end(),
            },
        }),
        ..Default::default()
    }
}

/// Acceptance with an arbitrary strategy on the perturbative categories.
pub fn acceptance_transform_with(strategy: AcceptanceStrategy) -> TransformSpec {
    TransformSpec {
        categories: PERTURBATIVE.to_vec(),
        acceptance: Some(strategy),
        ..Default::default()
    }
}

/// Repetition timeout on LS, RR and MUT.
pub fn repetition_transform(method: MethodKind, context: Context) -> TransformSpec {
    TransformSpec {
        categories: SEARCH_CATEGORIES.to_vec(),
        duration: Some(method.repetition(context)),
        ..Default::default()
    }
}

/// Intensity duplication on the perturbative categories.
pub fn intensity_transform(setup: IntensitySetup) -> TransformSpec {
    TransformSpec {
        categories: PERTURBATIVE.to_vec(),
        intensities: Some(setup.values().to_vec()),
        ..Default::default()
    }
}

/// The complete acceptance + repetition + intensity transformation.
pub fn star_preset(method: MethodKind, context: Context) -> Vec<TransformSpec> {
    vec![
        acceptance_transform(method),
        repetition_transform(method, context),
        intensity_transform(method.intensity_setup()),
    ]
}

/// Registers reserved for the inner loop of [`apply_virtual_llh`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScratchRegisters {
    pub current: RegisterId,
    pub candidate: RegisterId,
}

impl ScratchRegisters {
    /// The two highest registers of a bank.
    pub fn top_of(register_count: usize) -> Self {
        assert!(register_count >= 4, "register bank too small");
        Self {
            current: RegisterId(register_count - 2),
            candidate: RegisterId(register_count - 1),
        }
    }

    pub fn contains(&self, register: RegisterId) -> bool {
        register == self.current || register == self.candidate
    }
}

/// Per-run mutable state shared by all virtual heuristic applications.
#[derive(Debug, Clone)]
pub struct SearchContext {
    pub stats: ImprovementStats,
    pub clock: BudgetClock,
    pub rng: SearchRng,
    pub scratch: ScratchRegisters,
}

impl SearchContext {
    pub fn new(clock: BudgetClock, rng: SearchRng, scratch: ScratchRegisters) -> Self {
        Self {
            stats: ImprovementStats::new(),
            clock,
            rng,
            scratch,
        }
    }
}

/// Applies virtual heuristic `h` to the solution in `src`, stores the
/// outcome in `dst` and returns its cost.
///
/// The base heuristic runs at least once, then repeats until `h.duration`
/// (measured on the run clock from entry) has passed. Each candidate updates
/// the global improvement statistic and replaces the working solution when
/// `h.accept` lets it through. The intensity override is undone before
/// returning, also on error.
pub fn apply_virtual_llh(
    domain: &mut dyn DomainContract,
    h: &VirtualLlh,
    ctx: &mut SearchContext,
    src: RegisterId,
    dst: RegisterId,
) -> Result<Cost, EngineError> {
    let scratch = ctx.scratch;
    for register in [src, dst] {
        if scratch.contains(register) {
            return Err(EngineError::ScratchConflict(register));
        }
    }
    domain.copy_solution(src, scratch.current)?;
    if let Some(intensity) = h.intensity {
        domain.set_perturbation_intensity(intensity)?;
    }
    let looped = repeat_base(domain, h, ctx);
    if h.intensity.is_some() {
        domain.restore_perturbation_intensity();
    }
    looped?;
    domain.copy_solution(scratch.current, dst)?;
    domain.cost(dst)
}

fn repeat_base(
    domain: &mut dyn DomainContract,
    h: &VirtualLlh,
    ctx: &mut SearchContext,
) -> Result<(), EngineError> {
    let ScratchRegisters { current, candidate } = ctx.scratch;
    let entered = ctx.clock.elapsed();
    loop {
        let c_best = domain.global_best_cost();
        let c_cur = domain.cost(current)?;
        let c_new = domain.apply_llh(h.base.id, current, candidate)?;
        ctx.clock.advance(domain.take_ticks());
        ctx.stats.update(c_cur, c_new);
        let rand01 = if h.accept.needs_random() && c_new >= c_cur {
            ctx.rng.random::<f64>()
        } else {
            0.0
        };
        let x = ctx.clock.consumed_fraction();
        if accept(&h.accept, ctx.stats.mu, c_best, c_cur, c_new, x, rand01) {
            domain.copy_solution(candidate, current)?;
        }
        match h.duration {
            None => return Ok(()),
            Some(limit) if ctx.clock.elapsed().saturating_sub(entered) >= limit => return Ok(()),
            Some(_) => {}
        }
    }
}

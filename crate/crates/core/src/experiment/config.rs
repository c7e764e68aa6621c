//! Experiment configuration files.
//!
//! A configuration is a TOML document:
//!
//! ```toml
//! seeds = { count = 15 }          # or an explicit list: seeds = [1, 2, 3]
//!
//! [budget]
//! wall_ms = 10000                 # or: ticks = 20000 (virtual clock)
//!
//! [output]
//! dir = "results/mini"
//!
//! [[methods]]
//! selector = "nhh"
//! variant = "xstar"
//!
//! [[methods]]
//! id = "NHH-MA-CONST"
//! selector = "nhh"
//! variant = "x0"
//! acceptance = { kind = "ma", schedule = "const" }
//!
//! [[instances]]
//! path = "instances/berlin.tsp"
//!
//! [[instances]]
//! generate = { domain = "tsp", size = 150, seed = 1 }
//! ```
//!
//! Relative paths are resolved against the configuration file's directory.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::acceptance::{preset_table, AcceptanceStrategy, ScheduleVariant, StrategyKind};
use crate::domains::{generate_instance, load_instance, DomainKind, Instance, InstanceFormat};
use crate::engine::{BudgetClock, LlhCategory, DEFAULT_TICKS_PER_MS};
use crate::error::{ConfigError, Error, Result};
use crate::selectors::{MethodSpec, Variant, DEFAULT_RESTART_UNIT};
use crate::vllh::{acceptance_transform_with, Context, MethodKind, TransformSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub methods: Vec<MethodConfig>,
    pub instances: Vec<InstanceConfig>,
    pub seeds: SeedsConfig,
    pub budget: BudgetConfig,
    #[serde(default)]
    pub output: OutputConfig,
    /// Worker threads; defaults to the available cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Keep best-cost checkpoints of every run in the journal.
    #[serde(default)]
    pub record_trajectory: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub selector: MethodKind,
    pub variant: Variant,
    #[serde(default)]
    pub context: Context,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restart_unit: Option<u64>,
    /// Tuned acceptance parameterization applied to RR and MUT.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<AcceptancePreset>,
    /// Explicit transforms applied after the variant's own.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub transforms: Vec<TransformConfig>,
}

/// One entry of the tuned parameter table for the method's preset family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcceptancePreset {
    pub kind: StrategyKind,
    pub schedule: ScheduleVariant,
    /// Position 0..=4 in the table row; 2 is the middle setting.
    #[serde(default = "middle_level")]
    pub level: usize,
}

fn middle_level() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformConfig {
    pub categories: Vec<LlhCategory>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub acceptance: Option<AcceptanceStrategy>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration_ms: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intensities: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Guessed from the file extension when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub format: Option<InstanceFormat>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generate: Option<GenerateConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateConfig {
    pub domain: DomainKind,
    pub size: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeedsConfig {
    List(Vec<u64>),
    Range {
        count: u64,
        #[serde(default = "first_seed")]
        start: u64,
    },
}

fn first_seed() -> u64 {
    1
}

impl SeedsConfig {
    pub fn seeds(&self) -> Vec<u64> {
        match self {
            SeedsConfig::List(list) => list.clone(),
            SeedsConfig::Range { count, start } => (*start..start + count).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticks: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ticks_per_ms: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_output_dir")]
    pub dir: PathBuf,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("results")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_output_dir(),
        }
    }
}

/// Per-run search budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Budget {
    Wall(Duration),
    Virtual { ticks: u64, ticks_per_ms: u64 },
}

impl Budget {
    pub fn clock(&self) -> BudgetClock {
        match *self {
            Budget::Wall(total) => BudgetClock::wall_clock(total),
            Budget::Virtual {
                ticks,
                ticks_per_ms,
            } => BudgetClock::virtual_ticks(ticks, ticks_per_ms),
        }
        .expect("budget validated on construction")
    }

    pub fn is_virtual(&self) -> bool {
        matches!(self, Budget::Virtual { .. })
    }
}

/// A named, loaded instance.
#[derive(Debug, Clone)]
pub struct NamedInstance {
    pub id: String,
    pub instance: Instance,
}

/// A validated configuration with every reference resolved.
#[derive(Debug, Clone)]
pub struct Experiment {
    pub methods: Vec<MethodSpec>,
    pub instances: Vec<NamedInstance>,
    pub seeds: Vec<u64>,
    pub budget: Budget,
    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    pub record_trajectory: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::invalid(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Ok(Self::from_toml(&text)?)
    }

    /// Checks the configuration and loads or generates every instance.
    /// Relative paths resolve against `base_dir`.
    pub fn resolve(&self, base_dir: &Path) -> Result<Experiment> {
        if self.methods.is_empty() {
            return Err(ConfigError::invalid("at least one method is required").into());
        }
        if self.instances.is_empty() {
            return Err(ConfigError::invalid("at least one instance is required").into());
        }
        let seeds = self.seeds.seeds();
        if seeds.is_empty() {
            return Err(ConfigError::invalid("at least one seed is required").into());
        }
        if seeds.iter().collect::<BTreeSet<_>>().len() != seeds.len() {
            return Err(ConfigError::invalid("seeds must be distinct").into());
        }
        if self.workers == Some(0) {
            return Err(ConfigError::invalid("workers must be positive").into());
        }
        let budget = self.budget.resolve()?;

        let methods = self
            .methods
            .iter()
            .map(MethodConfig::to_spec)
            .collect::<Result<Vec<_>, _>>()?;
        unique_ids("method", methods.iter().map(|m| m.id.as_str()))?;

        let instances = self
            .instances
            .iter()
            .map(|i| i.resolve(base_dir))
            .collect::<Result<Vec<_>>>()?;
        unique_ids("instance", instances.iter().map(|i| i.id.as_str()))?;

        Ok(Experiment {
            methods,
            instances,
            seeds,
            budget,
            output_dir: base_dir.join(&self.output.dir),
            workers: self.workers,
            record_trajectory: self.record_trajectory,
        })
    }
}

fn unique_ids<'a>(what: &str, ids: impl Iterator<Item = &'a str>) -> Result<(), ConfigError> {
    let mut seen = BTreeSet::new();
    for id in ids {
        if id.contains(',') || id.contains('\n') || id.contains('"') {
            return Err(ConfigError::invalid(format!(
                "{what} id `{id}` contains a reserved character"
            )));
        }
        if !seen.insert(id) {
            return Err(ConfigError::invalid(format!("duplicate {what} id `{id}`")));
        }
    }
    Ok(())
}

impl BudgetConfig {
    pub fn wall(ms: u64) -> Self {
        Self {
            wall_ms: Some(ms),
            ticks: None,
            ticks_per_ms: None,
        }
    }

    pub fn ticks(ticks: u64) -> Self {
        Self {
            wall_ms: None,
            ticks: Some(ticks),
            ticks_per_ms: None,
        }
    }

    pub fn resolve(&self) -> Result<Budget, ConfigError> {
        let budget = match (self.wall_ms, self.ticks) {
            (Some(ms), None) => {
                if self.ticks_per_ms.is_some() {
                    return Err(ConfigError::invalid(
                        "ticks_per_ms only applies to tick budgets",
                    ));
                }
                Budget::Wall(Duration::from_millis(ms))
            }
            (None, Some(ticks)) => Budget::Virtual {
                ticks,
                ticks_per_ms: self.ticks_per_ms.unwrap_or(DEFAULT_TICKS_PER_MS),
            },
            _ => {
                return Err(ConfigError::invalid(
                    "budget needs exactly one of wall_ms or ticks",
                ))
            }
        };
        // surfaces zero budgets and zero tick rates
        match budget {
            Budget::Wall(total) => BudgetClock::wall_clock(total)?,
            Budget::Virtual {
                ticks,
                ticks_per_ms,
            } => BudgetClock::virtual_ticks(ticks, ticks_per_ms)?,
        };
        Ok(budget)
    }
}

impl MethodConfig {
    pub fn new(selector: MethodKind, variant: Variant) -> Self {
        Self {
            id: None,
            selector,
            variant,
            context: Context::Benchmark,
            restart_unit: None,
            acceptance: None,
            transforms: Vec::new(),
        }
    }

    pub fn to_spec(&self) -> Result<MethodSpec, ConfigError> {
        let mut spec = MethodSpec::new(self.selector, self.variant).with_context(self.context);
        if let Some(preset) = self.acceptance {
            let table = preset_table(self.selector.preset_family(), preset.kind, preset.schedule);
            let strategy = *table.get(preset.level).ok_or_else(|| {
                ConfigError::invalid(format!(
                    "acceptance level {} is outside 0..=4",
                    preset.level
                ))
            })?;
            spec = spec.with_override(acceptance_transform_with(strategy));
            spec.id = format!(
                "{}{}-{}-{}",
                self.selector.short_name(),
                self.variant.suffix(),
                preset.kind.short_name(),
                preset.schedule.short_name()
            );
        }
        for t in &self.transforms {
            spec = spec.with_override(t.to_spec()?);
        }
        if let Some(id) = &self.id {
            spec.id = id.clone();
        }
        match (self.selector, self.restart_unit) {
            (MethodKind::Luby, Some(unit)) => spec.restart_unit = unit,
            (MethodKind::Luby, None) => spec.restart_unit = DEFAULT_RESTART_UNIT,
            (_, Some(_)) => {
                return Err(ConfigError::invalid(
                    "restart_unit only applies to the luby selector",
                ))
            }
            (_, None) => {}
        }
        spec.validate()?;
        Ok(spec)
    }
}

impl TransformConfig {
    pub fn to_spec(&self) -> Result<TransformSpec, ConfigError> {
        let duration = match self.duration_ms {
            None => None,
            Some(ms) if ms.is_finite() && ms > 0.0 => Some(Duration::from_secs_f64(ms / 1e3)),
            Some(ms) => {
                return Err(ConfigError::invalid(format!(
                    "duration_ms must be positive, got {ms}"
                )))
            }
        };
        let spec = TransformSpec {
            categories: self.categories.clone(),
            acceptance: self.acceptance,
            duration,
            intensities: self.intensities.clone(),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl InstanceConfig {
    pub fn file(path: impl Into<PathBuf>) -> Self {
        Self {
            id: None,
            path: Some(path.into()),
            format: None,
            generate: None,
        }
    }

    pub fn generated(domain: DomainKind, size: usize, seed: u64) -> Self {
        Self {
            id: None,
            path: None,
            format: None,
            generate: Some(GenerateConfig { domain, size, seed }),
        }
    }

    pub fn resolve(&self, base_dir: &Path) -> Result<NamedInstance> {
        match (&self.path, &self.generate) {
            (Some(path), None) => {
                let full = base_dir.join(path);
                let format = match self.format {
                    Some(f) => f,
                    None => InstanceFormat::from_path(&full).ok_or_else(|| {
                        ConfigError::invalid(format!(
                            "cannot infer the format of {}; set `format`",
                            path.display()
                        ))
                    })?,
                };
                let instance = load_instance(&full, format)?;
                let id = self.id.clone().unwrap_or_else(|| {
                    full.file_stem()
                        .map(|s| s.to_string_lossy().into_owned())
                        .unwrap_or_else(|| full.display().to_string())
                });
                Ok(NamedInstance { id, instance })
            }
            (None, Some(g)) => {
                if self.format.is_some() {
                    return Err(
                        ConfigError::invalid("`format` only applies to instance files").into(),
                    );
                }
                let instance = generate_instance(g.domain, g.size, g.seed)?;
                let id = self
                    .id
                    .clone()
                    .unwrap_or_else(|| format!("{}-{}-s{}", g.domain, g.size, g.seed));
                Ok(NamedInstance { id, instance })
            }
            _ => Err(
                ConfigError::invalid("an instance needs exactly one of `path` or `generate`")
                    .into(),
            ),
        }
    }
}

/// Generated instance sizes of the built-in mini-benchmark, per domain.
pub const MINI_BENCHMARK_SIZES: [(DomainKind, [usize; 3]); 3] = [
    (DomainKind::Maxsat, [200, 350, 500]),
    (DomainKind::BinPacking, [120, 250, 500]),
    (DomainKind::Tsp, [150, 300, 500]),
];

/// The mini-benchmark instances: three generated instances per domain.
pub fn mini_benchmark_instances() -> Vec<InstanceConfig> {
    MINI_BENCHMARK_SIZES
        .iter()
        .flat_map(|(domain, sizes)| {
            sizes
                .iter()
                .zip(1..)
                .map(|(&size, seed)| InstanceConfig::generated(*domain, size, seed))
        })
        .collect()
}

/// All five rungs of the ladder for `selector`.
pub fn ladder_methods(selector: MethodKind) -> Vec<MethodConfig> {
    Variant::ALL
        .iter()
        .map(|&v| MethodConfig::new(selector, v))
        .collect()
}

/// NHH with each criterion and schedule at its middle tuned setting.
pub fn acceptance_methods(selector: MethodKind) -> Vec<MethodConfig> {
    let mut out = Vec::new();
    for kind in StrategyKind::ALL {
        for schedule in [ScheduleVariant::Const, ScheduleVariant::Exp] {
            out.push(MethodConfig {
                acceptance: Some(AcceptancePreset {
                    kind,
                    schedule,
                    level: middle_level(),
                }),
                ..MethodConfig::new(selector, Variant::X0)
            });
        }
    }
    out
}

/// The mini-benchmark: 3 domains × 3 generated instances; the NHH ladder,
/// NHH with the tuned acceptance settings, and LUBY⁰, LUBY⁺ and LUBY*.
///
/// The middle R2R EXP setting for NHH is exactly the NHHᴬ transform, so it
/// is not listed twice.
pub fn mini_benchmark(budget: BudgetConfig, seeds: u64) -> ExperimentConfig {
    let mut methods = ladder_methods(MethodKind::Nhh);
    methods.extend(acceptance_methods(MethodKind::Nhh).into_iter().filter(|m| {
        m.acceptance.is_some_and(|a| {
            !(a.kind == StrategyKind::RecordToRecord && a.schedule == ScheduleVariant::Exp)
        })
    }));
    methods.extend(
        [Variant::X0, Variant::Xplus, Variant::Xstar]
            .into_iter()
            .map(|v| MethodConfig::new(MethodKind::Luby, v)),
    );
    ExperimentConfig {
        name: Some("mini".into()),
        methods,
        instances: mini_benchmark_instances(),
        seeds: SeedsConfig::Range {
            count: seeds,
            start: 1,
        },
        budget,
        output: OutputConfig::default(),
        workers: None,
        record_trajectory: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
seeds = { count = 3 }

[budget]
ticks = 5000

[output]
dir = "out"

[[methods]]
selector = "nhh"
variant = "xstar"

[[methods]]
selector = "luby"
variant = "x0"
restart_unit = 20

[[methods]]
selector = "nhh"
variant = "x0"
acceptance = { kind = "ma", schedule = "const" }

[[methods]]
id = "custom"
selector = "nhh"
variant = "x0"
[[methods.transforms]]
categories = ["RR", "MUT"]
acceptance = { kind = "threshold", schedule = { variant = "const", tau = 0.5 } }
duration_ms = 0.25

[[instances]]
generate = { domain = "tsp", size = 20, seed = 1 }
"#;

    #[test]
    fn sample_resolves() {
        let cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        let exp = cfg.resolve(Path::new("/tmp/base")).unwrap();
        let ids: Vec<&str> = exp.methods.iter().map(|m| m.id.as_str()).collect();
        assert_eq!(ids, ["NHH*", "LUBY0", "NHH0-MA-CONST", "custom"]);
        assert_eq!(exp.methods[1].restart_unit, 20);
        assert_eq!(exp.seeds, [1, 2, 3]);
        assert_eq!(exp.instances[0].id, "tsp-20-s1");
        assert_eq!(
            exp.budget,
            Budget::Virtual {
                ticks: 5000,
                ticks_per_ms: 1000
            }
        );
        assert_eq!(exp.output_dir, Path::new("/tmp/base/out"));
        let custom = &exp.methods[3].overrides[0];
        assert_eq!(custom.duration, Some(Duration::from_micros(250)));
    }

    #[test]
    fn middle_acceptance_preset() {
        let m = MethodConfig {
            acceptance: Some(AcceptancePreset {
                kind: StrategyKind::Metropolis,
                schedule: ScheduleVariant::Const,
                level: 2,
            }),
            ..MethodConfig::new(MethodKind::Nhh, Variant::X0)
        };
        let spec = m.to_spec().unwrap();
        assert_eq!(
            spec.overrides[0].acceptance,
            Some(AcceptanceStrategy::Metropolis {
                schedule: crate::acceptance::TauSchedule::Const { tau: 0.75 }
            })
        );
    }

    #[test]
    fn round_trips_through_toml() {
        let cfg = mini_benchmark(BudgetConfig::wall(10_000), 15);
        let again = ExperimentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
        let exp = cfg.resolve(Path::new(".")).unwrap();
        assert_eq!(exp.methods.len(), 13);
        assert_eq!(exp.instances.len(), 9);
        assert_eq!(exp.seeds.len(), 15);
    }

    #[test]
    fn validation_errors() {
        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.budget = BudgetConfig {
            wall_ms: Some(5),
            ticks: Some(5),
            ticks_per_ms: None,
        };
        assert!(cfg.resolve(Path::new(".")).is_err());

        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.budget = BudgetConfig::wall(0);
        assert!(cfg.resolve(Path::new(".")).is_err());

        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.methods.push(cfg.methods[0].clone());
        let err = cfg.resolve(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("duplicate method id"), "{err}");

        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.instances.push(InstanceConfig::file("missing.tsp"));
        assert!(matches!(
            cfg.resolve(Path::new("/nonexistent")),
            Err(Error::Instance(_))
        ));

        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.instances = vec![InstanceConfig::generated(DomainKind::Tsp, 900, 1)];
        assert!(matches!(cfg.resolve(Path::new(".")), Err(Error::Config(_))));

        let mut cfg = ExperimentConfig::from_toml(SAMPLE).unwrap();
        cfg.methods[0].restart_unit = Some(3);
        assert!(cfg.resolve(Path::new(".")).is_err());

        assert!(ExperimentConfig::from_toml("seeds = [1]\nbogus = 1").is_err());
    }

    #[test]
    fn seeds_forms() {
        assert_eq!(SeedsConfig::List(vec![4, 9]).seeds(), [4, 9]);
        assert_eq!(
            SeedsConfig::Range {
                count: 3,
                start: 10
            }
            .seeds(),
            [10, 11, 12]
        );
    }
}

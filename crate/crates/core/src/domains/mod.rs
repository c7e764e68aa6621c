//! Built-in problem domains, instance files and instance generators.

pub mod binpacking;
pub mod maxsat;
pub mod tsp;

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::engine::{seeded_rng, Cost, DomainContract, Engine, LlhDescriptor, Problem, SearchRng};
use crate::error::{ConfigError, InstanceError};

pub use binpacking::{BinPacking, Packing};
pub use maxsat::{Assignment, MaxSat};
pub use tsp::{Tour, Tsp};

/// Clauses per variable in generated Max-SAT instances.
pub const MAXSAT_CLAUSE_RATIO: usize = 4;

/// Largest instance size the generators accept.
pub const MAX_GENERATED_SIZE: usize = 500;

/// Units of domain work that make up one clock tick on top of the tick every
/// heuristic call costs.
pub const WORK_PER_TICK: usize = 16;

pub(crate) fn work_ticks(work: usize) -> u64 {
    1 + (work / WORK_PER_TICK) as u64
}

/// `⌈intensity · n⌉`, ignoring rounding noise in the product.
pub(crate) fn ceil_count(intensity: f64, n: f64) -> usize {
    let x = intensity * n;
    (x - 1e-9).ceil().max(0.0) as usize
}

impl<T: Problem> Problem for Arc<T> {
    type Solution = T::Solution;

    fn name(&self) -> &str {
        (**self).name()
    }

    fn llhs(&self) -> &[LlhDescriptor] {
        (**self).llhs()
    }

    fn construct(&self, rng: &mut SearchRng) -> (Self::Solution, u64) {
        (**self).construct(rng)
    }

    fn cost(&self, solution: &Self::Solution) -> Cost {
        (**self).cost(solution)
    }

    fn evaluate(&self, solution: &Self::Solution) -> Cost {
        (**self).evaluate(solution)
    }

    fn is_feasible(&self, solution: &Self::Solution) -> bool {
        (**self).is_feasible(solution)
    }

    fn apply(
        &self,
        llh: usize,
        solution: &mut Self::Solution,
        partner: Option<&Self::Solution>,
        intensity: f64,
        rng: &mut SearchRng,
    ) -> u64 {
        (**self).apply(llh, solution, partner, intensity, rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainKind {
    #[serde(alias = "max_sat")]
    Maxsat,
    #[serde(rename = "bpp", alias = "binpacking", alias = "bin_packing")]
    BinPacking,
    Tsp,
}

impl DomainKind {
    pub const ALL: [DomainKind; 3] = [DomainKind::Maxsat, DomainKind::BinPacking, DomainKind::Tsp];

    pub fn short_name(self) -> &'static str {
        match self {
            DomainKind::Maxsat => "maxsat",
            DomainKind::BinPacking => "bpp",
            DomainKind::Tsp => "tsp",
        }
    }

    pub fn format(self) -> InstanceFormat {
        match self {
            DomainKind::Maxsat => InstanceFormat::Cnf,
            DomainKind::BinPacking => InstanceFormat::BppText,
            DomainKind::Tsp => InstanceFormat::TspCoords,
        }
    }

    fn min_size(self) -> usize {
        match self {
            DomainKind::Tsp => 3,
            _ => 1,
        }
    }
}

impl fmt::Display for DomainKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.short_name())
    }
}

impl FromStr for DomainKind {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "maxsat" | "max_sat" | "max-sat" => Ok(DomainKind::Maxsat),
            "bpp" | "binpacking" | "bin_packing" => Ok(DomainKind::BinPacking),
            "tsp" => Ok(DomainKind::Tsp),
            _ => Err(ConfigError::invalid(format!("unknown domain `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstanceFormat {
    Cnf,
    BppText,
    TspCoords,
}

impl InstanceFormat {
    pub fn domain(self) -> DomainKind {
        match self {
            InstanceFormat::Cnf => DomainKind::Maxsat,
            InstanceFormat::BppText => DomainKind::BinPacking,
            InstanceFormat::TspCoords => DomainKind::Tsp,
        }
    }

    pub fn extension(self) -> &'static str {
        match self {
            InstanceFormat::Cnf => "cnf",
            InstanceFormat::BppText => "bpp",
            InstanceFormat::TspCoords => "tsp",
        }
    }

    /// Guesses the format from a file extension.
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()? {
            "cnf" | "wcnf" => Some(InstanceFormat::Cnf),
            "bpp" | "txt" => Some(InstanceFormat::BppText),
            "tsp" => Some(InstanceFormat::TspCoords),
            _ => None,
        }
    }
}

impl FromStr for InstanceFormat {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cnf" => Ok(InstanceFormat::Cnf),
            "bpp_text" | "bpp" => Ok(InstanceFormat::BppText),
            "tsp_coords" | "tsp" => Ok(InstanceFormat::TspCoords),
            _ => Err(ConfigError::invalid(format!(
                "unknown instance format `{s}`"
            ))),
        }
    }
}

/// A loaded, immutable problem instance. Cheap to clone.
#[derive(Debug, Clone)]
pub enum Instance {
    Maxsat(Arc<MaxSat>),
    BinPacking(Arc<BinPacking>),
    Tsp(Arc<Tsp>),
}

impl Instance {
    pub fn kind(&self) -> DomainKind {
        match self {
            Instance::Maxsat(_) => DomainKind::Maxsat,
            Instance::BinPacking(_) => DomainKind::BinPacking,
            Instance::Tsp(_) => DomainKind::Tsp,
        }
    }

    /// Variables, items or cities.
    pub fn size(&self) -> usize {
        match self {
            Instance::Maxsat(m) => m.num_vars(),
            Instance::BinPacking(b) => b.sizes().len(),
            Instance::Tsp(t) => t.len(),
        }
    }

    /// Fresh engine with its own register bank, seeded for one run.
    pub fn engine(&self, seed: u64) -> Box<dyn DomainContract> {
        match self {
            Instance::Maxsat(p) => Box::new(Engine::new(Arc::clone(p), seed)),
            Instance::BinPacking(p) => Box::new(Engine::new(Arc::clone(p), seed)),
            Instance::Tsp(p) => Box::new(Engine::new(Arc::clone(p), seed)),
        }
    }

    /// Serializes in the instance's file format.
    pub fn to_text(&self, name: &str) -> String {
        match self {
            Instance::Maxsat(m) => m.to_dimacs(),
            Instance::BinPacking(b) => b.to_text(),
            Instance::Tsp(t) => t.to_tsplib(name),
        }
    }

    pub fn parse(text: &str, format: InstanceFormat, path: &str) -> Result<Self, InstanceError> {
        Ok(match format {
            InstanceFormat::Cnf => Instance::Maxsat(Arc::new(MaxSat::parse_dimacs(text, path)?)),
            InstanceFormat::BppText => {
                Instance::BinPacking(Arc::new(BinPacking::parse_text(text, path)?))
            }
            InstanceFormat::TspCoords => Instance::Tsp(Arc::new(Tsp::parse_tsplib(text, path)?)),
        })
    }
}

pub fn load_instance(path: &Path, format: InstanceFormat) -> Result<Instance, InstanceError> {
    let text = std::fs::read_to_string(path).map_err(|source| InstanceError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Instance::parse(&text, format, &path.display().to_string())
}

/// Deterministic for `(kind, size, seed)`.
pub fn generate_instance(
    kind: DomainKind,
    size: usize,
    seed: u64,
) -> Result<Instance, ConfigError> {
    if size < kind.min_size() || size > MAX_GENERATED_SIZE {
        return Err(ConfigError::invalid(format!(
            "{kind} instance size {size} is outside [{}, {MAX_GENERATED_SIZE}]",
            kind.min_size()
        )));
    }
    let mut rng = seeded_rng(seed, 1);
    Ok(match kind {
        DomainKind::Maxsat => Instance::Maxsat(Arc::new(MaxSat::generate(size, &mut rng))),
        DomainKind::BinPacking => {
            Instance::BinPacking(Arc::new(BinPacking::generate(size, &mut rng)))
        }
        DomainKind::Tsp => Instance::Tsp(Arc::new(Tsp::generate(size, &mut rng))),
    })
}

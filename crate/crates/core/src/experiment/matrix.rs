//! Running (method × instance × seed) matrices.
//!
//! Completed cells are appended to a JSON-lines journal as they finish, so an
//! interrupted matrix resumes where it stopped. The first journal line holds a
//! fingerprint of the experiment; a journal written for a different
//! experiment is refused.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::mpsc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{ConfigError, Error, Result};
use crate::selectors::{build_variant, Checkpoint, RunFactory, SelectorPlugins};

use super::config::{Budget, Experiment, NamedInstance};

/// Overrides the worker-pool size.
pub const WORKERS_ENV: &str = "HYPERSET_WORKERS";

/// Journal file name inside the output directory.
pub const JOURNAL_FILE: &str = "cells.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed { message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub method: String,
    pub instance: String,
    pub seed: u64,
    /// Final global best cost; `None` when the run failed.
    pub best_cost: Option<f64>,
    /// Run clock at the end of the run. Virtual-clock runs report virtual
    /// time, which keeps result files reproducible.
    pub wall_time_ms: f64,
    pub status: RunStatus,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<Vec<Checkpoint>>,
}

impl RunRecord {
    pub fn is_ok(&self) -> bool {
        self.status == RunStatus::Ok
    }

    pub fn key(&self) -> (&str, &str, u64) {
        (&self.method, &self.instance, self.seed)
    }
}

#[derive(Debug, Clone, Default)]
pub struct MatrixOptions {
    /// Takes precedence over the environment and the configuration.
    pub workers: Option<usize>,
    /// Journal location; no journal when `None`.
    pub journal: Option<PathBuf>,
    /// Discard an existing journal instead of resuming from it.
    pub fresh: bool,
}

impl MatrixOptions {
    /// Journal in the experiment's output directory.
    pub fn journaled(exp: &Experiment) -> Self {
        Self {
            journal: Some(exp.output_dir.join(JOURNAL_FILE)),
            ..Self::default()
        }
    }
}

#[derive(Serialize, Deserialize)]
struct JournalHeader {
    fingerprint: String,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    method: usize,
    instance: usize,
    seed: u64,
}

/// Identifies everything that influences cell results.
pub fn fingerprint(exp: &Experiment) -> String {
    let mut hasher = Sha256::new();
    hasher.update(format!("budget={:?}\n", exp.budget));
    hasher.update(format!("trajectory={}\n", exp.record_trajectory));
    for m in &exp.methods {
        hasher.update(format!("method={m:?}\n"));
    }
    for i in &exp.instances {
        let text_hash = Sha256::digest(i.instance.to_text(&i.id));
        hasher.update(format!(
            "instance={} {:?} {:x}\n",
            i.id,
            i.instance.kind(),
            text_hash
        ));
    }
    hasher.update(format!("seeds={:?}\n", exp.seeds));
    format!("{:x}", hasher.finalize())
}

/// Worker count: explicit option, then the environment, then the
/// configuration, then the available cores. Wall-clock budgets never use
/// more workers than cores.
pub fn resolve_workers(exp: &Experiment, options: &MatrixOptions) -> Result<usize> {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    let from_env = match std::env::var(WORKERS_ENV) {
        Ok(v) => Some(
            v.trim()
                .parse::<usize>()
                .ok()
                .filter(|&n| n > 0)
                .ok_or_else(|| {
                    ConfigError::invalid(format!(
                        "{WORKERS_ENV} must be a positive integer, got `{v}`"
                    ))
                })?,
        ),
        Err(_) => None,
    };
    let requested = options
        .workers
        .or(from_env)
        .or(exp.workers)
        .unwrap_or(cores);
    if requested == 0 {
        return Err(ConfigError::invalid("worker count must be positive").into());
    }
    if !exp.budget.is_virtual() && requested > cores {
        log::warn!("wall-clock budget: limiting {requested} workers to {cores} cores");
        return Ok(cores);
    }
    Ok(requested)
}

/// Builds every method and checks it against every instance's heuristic
/// set, so configuration problems surface before any run starts.
pub fn check_experiment(
    exp: &Experiment,
    plugins: &SelectorPlugins,
) -> Result<Vec<RunFactory>, ConfigError> {
    let factories = exp
        .methods
        .iter()
        .map(|m| build_variant(m.clone(), plugins))
        .collect::<Result<Vec<_>, _>>()?;
    for (factory, inst) in factories
        .iter()
        .flat_map(|f| exp.instances.iter().map(move |i| (f, i)))
    {
        let llhs = inst.instance.engine(0).llh_set().to_vec();
        factory.spec().virtual_set(&llhs).map_err(|e| {
            ConfigError::invalid(format!(
                "method `{}` on instance `{}`: {}",
                factory.spec().id,
                inst.id,
                e.message
            ))
        })?;
    }
    Ok(factories)
}

/// Runs every (method, instance, seed) cell and returns one record per cell
/// in method, instance, seed order.
pub fn run_matrix(
    exp: &Experiment,
    plugins: &SelectorPlugins,
    options: &MatrixOptions,
) -> Result<Vec<RunRecord>> {
    let factories = check_experiment(exp, plugins)?;
    let workers = resolve_workers(exp, options)?;

    let cells: Vec<Cell> = (0..exp.methods.len())
        .flat_map(|method| {
            (0..exp.instances.len()).flat_map(move |instance| {
                exp.seeds.iter().map(move |&seed| Cell {
                    method,
                    instance,
                    seed,
                })
            })
        })
        .collect();
    let key = |c: &Cell| {
        (
            exp.methods[c.method].id.clone(),
            exp.instances[c.instance].id.clone(),
            c.seed,
        )
    };

    let mut done: HashMap<(String, String, u64), RunRecord> = HashMap::new();
    let mut journal = match &options.journal {
        Some(path) => {
            let (file, previous) = open_journal(path, &fingerprint(exp), options.fresh)?;
            for record in previous {
                done.insert(
                    (record.method.clone(), record.instance.clone(), record.seed),
                    record,
                );
            }
            Some((path.clone(), file))
        }
        None => None,
    };
    let pending: Vec<Cell> = cells
        .iter()
        .copied()
        .filter(|c| !done.contains_key(&key(c)))
        .collect();
    if !done.is_empty() {
        log::info!(
            "resuming: {} of {} cells already complete",
            cells.len() - pending.len(),
            cells.len()
        );
    }
    log::info!("running {} cells on {} worker(s)", pending.len(), workers);

    let next = AtomicUsize::new(0);
    let total = pending.len();
    std::thread::scope(|scope| -> Result<()> {
        let (tx, rx) = mpsc::channel::<RunRecord>();
        for _ in 0..workers.min(total.max(1)) {
            let tx = tx.clone();
            let (next, pending, factories) = (&next, &pending, &factories);
            scope.spawn(move || loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(cell) = pending.get(i) else { break };
                let record = run_cell(
                    &factories[cell.method],
                    &exp.instances[cell.instance],
                    cell.seed,
                    exp.budget,
                    exp.record_trajectory,
                );
                if tx.send(record).is_err() {
                    break;
                }
            });
        }
        drop(tx);
        for (finished, record) in rx.into_iter().enumerate() {
            if let RunStatus::Failed { message } = &record.status {
                log::warn!(
                    "{} on {} seed {} failed: {message}",
                    record.method,
                    record.instance,
                    record.seed
                );
            }
            if let Some((path, file)) = journal.as_mut() {
                append_record(file, &record)
                    .map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
            }
            log::debug!(
                "[{}/{}] {} {} seed {} -> {:?}",
                finished + 1,
                total,
                record.method,
                record.instance,
                record.seed,
                record.best_cost
            );
            done.insert(
                (record.method.clone(), record.instance.clone(), record.seed),
                record,
            );
        }
        Ok(())
    })?;

    Ok(cells
        .iter()
        .map(|c| done.remove(&key(c)).expect("every cell ran"))
        .collect())
}

fn run_cell(
    factory: &RunFactory,
    inst: &NamedInstance,
    seed: u64,
    budget: Budget,
    keep_trajectory: bool,
) -> RunRecord {
    let result = catch_unwind(AssertUnwindSafe(|| {
        factory.run(&inst.instance, seed, budget.clock())
    }));
    let mut record = RunRecord {
        method: factory.spec().id.clone(),
        instance: inst.id.clone(),
        seed,
        best_cost: None,
        wall_time_ms: 0.0,
        status: RunStatus::Ok,
        trajectory: None,
    };
    match result {
        Ok(Ok(outcome)) => {
            record.best_cost = Some(outcome.best_cost);
            record.wall_time_ms = outcome.elapsed.as_secs_f64() * 1e3;
            if keep_trajectory {
                record.trajectory = Some(outcome.trajectory);
            }
        }
        Ok(Err(e)) => {
            record.status = RunStatus::Failed {
                message: e.to_string(),
            }
        }
        Err(panic) => {
            let message = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "run panicked".into());
            record.status = RunStatus::Failed {
                message: format!("panic: {message}"),
            };
        }
    }
    record
}

fn append_record(file: &mut File, record: &RunRecord) -> std::io::Result<()> {
    let mut line = serde_json::to_string(record).map_err(std::io::Error::other)?;
    line.push('\n');
    file.write_all(line.as_bytes())?;
    file.flush()
}

/// Opens (or creates) the journal, returning completed records.
fn open_journal(path: &Path, fingerprint: &str, fresh: bool) -> Result<(File, Vec<RunRecord>)> {
    let ctx = || format!("journal {}", path.display());
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    }
    let mut records = Vec::new();
    let mut keep = false;
    if path.exists() && !fresh {
        let mut text = String::new();
        File::open(path)
            .and_then(|mut f| f.read_to_string(&mut text))
            .map_err(|e| Error::io(ctx(), e))?;
        let mut lines = BufReader::new(text.as_bytes()).lines();
        if let Some(Ok(first)) = lines.next() {
            let header: JournalHeader =
                serde_json::from_str(&first).map_err(|e| Error::format(ctx(), e))?;
            if header.fingerprint != fingerprint {
                return Err(ConfigError::invalid(format!(
                    "{} was written for a different experiment; remove it or start fresh",
                    path.display()
                ))
                .into());
            }
            keep = true;
        }
        let complete_lines: Vec<String> = lines.map_while(|l| l.ok()).collect();
        let ends_with_newline = text.ends_with('\n');
        for (i, line) in complete_lines.iter().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<RunRecord>(line) {
                Ok(r) => records.push(r),
                // a torn final line from an interrupted write
                Err(_) if i + 1 == complete_lines.len() && !ends_with_newline => {}
                Err(e) => return Err(Error::format(ctx(), e)),
            }
        }
        if keep && !ends_with_newline {
            // rewrite without the torn tail
            let mut rebuilt = serde_json::to_string(&JournalHeader {
                fingerprint: fingerprint.into(),
            })
            .expect("header serializes");
            rebuilt.push('\n');
            for r in &records {
                rebuilt.push_str(&serde_json::to_string(r).expect("record serializes"));
                rebuilt.push('\n');
            }
            std::fs::write(path, rebuilt).map_err(|e| Error::io(ctx(), e))?;
        }
    }
    let file = if keep {
        OpenOptions::new().append(true).open(path)
    } else {
        File::create(path).and_then(|mut f| {
            let header = serde_json::to_string(&JournalHeader {
                fingerprint: fingerprint.into(),
            })
            .expect("header serializes");
            writeln!(f, "{header}")?;
            f.flush()?;
            Ok(f)
        })
    }
    .map_err(|e| Error::io(ctx(), e))?;
    Ok((file, records))
}

/// Column order of `results.csv`.
pub const CSV_HEADER: [&str; 6] = [
    "method",
    "instance",
    "seed",
    "best_cost",
    "wall_time_ms",
    "status",
];

pub fn write_results_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let ctx = "writing results";
    w.write_record(CSV_HEADER)
        .map_err(|e| Error::format(ctx, e))?;
    for r in records {
        let status = match &r.status {
            RunStatus::Ok => "ok".to_string(),
            RunStatus::Failed { message } => format!("failed: {message}"),
        };
        w.write_record([
            r.method.clone(),
            r.instance.clone(),
            r.seed.to_string(),
            r.best_cost.map(|c| c.to_string()).unwrap_or_default(),
            r.wall_time_ms.to_string(),
            status,
        ])
        .map_err(|e| Error::format(ctx, e))?;
    }
    w.flush().map_err(|e| Error::io(ctx, e))?;
    Ok(())
}

pub fn read_results_csv<R: Read>(input: R, source: &str) -> Result<Vec<RunRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader
        .headers()
        .map_err(|e| Error::format(source, e))?
        .clone();
    if headers.len() < 5
        || headers
            .iter()
            .take(5)
            .ne(CSV_HEADER.iter().take(5).copied())
    {
        return Err(Error::format(
            source,
            format!(
                "expected columns {}, got {}",
                CSV_HEADER[..5].join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row.map_err(|e| Error::format(source, e))?;
        let line = i + 2;
        let bad = |what: &str| Error::format(source, format!("line {line}: bad {what}"));
        let seed = row[2].parse().map_err(|_| bad("seed"))?;
        let best_cost = match row[3].trim() {
            "" => None,
            v => Some(v.parse::<f64>().map_err(|_| bad("best_cost"))?),
        };
        let wall_time_ms = row[4].parse().map_err(|_| bad("wall_time_ms"))?;
        let status = match row.get(5).map(str::trim) {
            None | Some("") | Some("ok") if best_cost.is_some() => RunStatus::Ok,
            Some(s) if s.starts_with("failed") => RunStatus::Failed {
                message: s
                    .trim_start_matches("failed")
                    .trim_start_matches(':')
                    .trim()
                    .to_string(),
            },
            _ => return Err(bad("status")),
        };
        records.push(RunRecord {
            method: row[0].to_string(),
            instance: row[1].to_string(),
            seed,
            best_cost,
            wall_time_ms,
            status,
            trajectory: None,
        });
    }
    Ok(records)
}

pub fn load_results_csv(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
    read_results_csv(file, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::DomainKind;
    use crate::experiment::config::{
        BudgetConfig, ExperimentConfig, InstanceConfig, MethodConfig, SeedsConfig,
    };
    use crate::selectors::Variant;
    use crate::vllh::MethodKind;

    fn small(dir: &Path, seeds: u64) -> Experiment {
        let cfg = ExperimentConfig {
            name: None,
            methods: vec![
                MethodConfig::new(MethodKind::Nhh, Variant::X0),
                MethodConfig::new(MethodKind::Luby, Variant::Xstar),
            ],
            instances: vec![
                InstanceConfig::generated(DomainKind::Maxsat, 30, 1),
                InstanceConfig::generated(DomainKind::BinPacking, 30, 1),
                InstanceConfig::generated(DomainKind::Tsp, 30, 1),
            ],
            seeds: SeedsConfig::Range {
                count: seeds,
                start: 1,
            },
            budget: BudgetConfig::ticks(3000),
            output: Default::default(),
            workers: None,
            record_trajectory: false,
        };
        let mut exp = cfg.resolve(dir).unwrap();
        exp.output_dir = dir.to_path_buf();
        exp
    }

    fn csv_of(records: &[RunRecord]) -> String {
        let mut buf = Vec::new();
        write_results_csv(records, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn cardinality_and_order() {
        let dir = tempfile::tempdir().unwrap();
        let exp = small(dir.path(), 5);
        let records =
            run_matrix(&exp, &SelectorPlugins::default(), &MatrixOptions::default()).unwrap();
        assert_eq!(records.len(), 30);
        assert_eq!(records[0].key(), ("NHH0", "maxsat-30-s1", 1));
        assert_eq!(records[29].key(), ("LUBY*", "tsp-30-s1", 5));
        assert!(records.iter().all(|r| r.is_ok() && r.wall_time_ms >= 3.0));
    }

    #[test]
    fn serial_and_parallel_agree() {
        let dir = tempfile::tempdir().unwrap();
        let exp = small(dir.path(), 3);
        let plugins = SelectorPlugins::default();
        let serial = MatrixOptions {
            workers: Some(1),
            ..Default::default()
        };
        let parallel = MatrixOptions {
            workers: Some(3),
            ..Default::default()
        };
        let a = run_matrix(&exp, &plugins, &serial).unwrap();
        let b = run_matrix(&exp, &plugins, &parallel).unwrap();
        assert_eq!(csv_of(&a), csv_of(&b));
    }

    #[test]
    fn resume_runs_only_missing_cells() {
        let dir = tempfile::tempdir().unwrap();
        let exp = small(dir.path(), 2);
        let options = MatrixOptions::journaled(&exp);
        let full = run_matrix(&exp, &SelectorPlugins::default(), &options).unwrap();

        // keep the header and the first 5 records, plus a torn line
        let path = dir.path().join(JOURNAL_FILE);
        let text = std::fs::read_to_string(&path).unwrap();
        let mut kept: Vec<&str> = text.lines().take(6).collect();
        kept.push("{\"method\":\"NH");
        std::fs::write(&path, kept.join("\n")).unwrap();

        let resumed = run_matrix(&exp, &SelectorPlugins::default(), &options).unwrap();
        assert_eq!(csv_of(&resumed), csv_of(&full));
        let lines = std::fs::read_to_string(&path).unwrap().lines().count();
        assert_eq!(lines, 1 + full.len());
    }

    #[test]
    fn foreign_journal_is_refused() {
        let dir = tempfile::tempdir().unwrap();
        let exp = small(dir.path(), 1);
        let options = MatrixOptions::journaled(&exp);
        run_matrix(&exp, &SelectorPlugins::default(), &options).unwrap();
        let other = small(dir.path(), 2);
        assert!(matches!(
            run_matrix(&other, &SelectorPlugins::default(), &options),
            Err(Error::Config(_))
        ));
        let fresh = MatrixOptions {
            fresh: true,
            ..options
        };
        assert_eq!(
            run_matrix(&other, &SelectorPlugins::default(), &fresh)
                .unwrap()
                .len(),
            12
        );
    }

    #[test]
    fn csv_round_trip() {
        let records = vec![
            RunRecord {
                method: "NHH*".into(),
                instance: "tsp, big".into(),
                seed: 3,
                best_cost: Some(0.1 + 0.2),
                wall_time_ms: 10000.0,
                status: RunStatus::Ok,
                trajectory: None,
            },
            RunRecord {
                method: "LUBY0".into(),
                instance: "bpp".into(),
                seed: 4,
                best_cost: None,
                wall_time_ms: 0.0,
                status: RunStatus::Failed {
                    message: "boom".into(),
                },
                trajectory: None,
            },
        ];
        let text = csv_of(&records);
        assert!(text.starts_with("method,instance,seed,best_cost,wall_time_ms,status\n"));
        let back = read_results_csv(text.as_bytes(), "mem").unwrap();
        assert_eq!(back, records);
        assert!(read_results_csv("a,b\n1,2\n".as_bytes(), "mem").is_err());
    }
}

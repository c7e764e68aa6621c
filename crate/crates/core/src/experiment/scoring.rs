//! Median-based scoring: Formula-1 points and min-max normalization.

use std::collections::BTreeMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ScoringError};

use super::matrix::RunRecord;

/// Points for ranks 1 to 8.
pub const F1_POINTS: [f64; 8] = [10.0, 8.0, 6.0, 5.0, 4.0, 3.0, 2.0, 1.0];

/// Median best cost per (method, instance), methods and instances in first
/// appearance order. A cell whose runs all failed has median `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct MedianTable {
    pub methods: Vec<String>,
    pub instances: Vec<String>,
    /// `values[m][i]`.
    pub values: Vec<Vec<f64>>,
}

impl MedianTable {
    pub fn get(&self, method: &str, instance: &str) -> Option<f64> {
        let m = self.methods.iter().position(|x| x == method)?;
        let i = self.instances.iter().position(|x| x == instance)?;
        Some(self.values[m][i])
    }

    /// Cells where every run failed.
    pub fn failed_cells(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        for (m, row) in self.values.iter().enumerate() {
            for (i, v) in row.iter().enumerate() {
                if v.is_infinite() {
                    out.push((self.methods[m].clone(), self.instances[i].clone()));
                }
            }
        }
        out
    }
}

pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    })
}

fn first_appearance<'a>(items: impl Iterator<Item = &'a str>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for item in items {
        if !out.iter().any(|x| x == item) {
            out.push(item.to_string());
        }
    }
    out
}

pub fn median_table(records: &[RunRecord]) -> Result<MedianTable, ScoringError> {
    if records.is_empty() {
        return Err(ScoringError::Empty);
    }
    let methods = first_appearance(records.iter().map(|r| r.method.as_str()));
    let instances = first_appearance(records.iter().map(|r| r.instance.as_str()));
    let mut cells: BTreeMap<(usize, usize), (Vec<f64>, usize)> = BTreeMap::new();
    for r in records {
        let m = methods
            .iter()
            .position(|x| *x == r.method)
            .expect("collected above");
        let i = instances
            .iter()
            .position(|x| *x == r.instance)
            .expect("collected above");
        let cell = cells.entry((m, i)).or_default();
        cell.1 += 1;
        if let (true, Some(c)) = (r.is_ok(), r.best_cost) {
            cell.0.push(c);
        }
    }
    let mut values = vec![vec![f64::INFINITY; instances.len()]; methods.len()];
    for (m, row) in values.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let (costs, _) = cells
                .get_mut(&(m, i))
                .ok_or_else(|| ScoringError::MissingCell {
                    method: methods[m].clone(),
                    instance: instances[i].clone(),
                })?;
            *v = median(costs).unwrap_or(f64::INFINITY);
        }
    }
    Ok(MedianTable {
        methods,
        instances,
        values,
    })
}

/// Points per competitor for one instance, lower values ranking first.
/// Tied competitors share the mean of the points of the positions they
/// occupy.
pub fn f1_points(values: &[f64], points: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let at = |pos: usize| points.get(pos).copied().unwrap_or(0.0);
    let mut out = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let share = (start..end).map(at).sum::<f64>() / (end - start) as f64;
        for &c in &order[start..end] {
            out[c] = share;
        }
        start = end;
    }
    out
}

/// Formula-1 scores of a set of competitors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Table {
    pub methods: Vec<String>,
    pub instances: Vec<String>,
    /// `points[m][i]`.
    pub points: Vec<Vec<f64>>,
    pub totals: Vec<f64>,
}

impl F1Table {
    pub fn total(&self, method: &str) -> Option<f64> {
        self.methods
            .iter()
            .position(|m| m == method)
            .map(|m| self.totals[m])
    }

    pub fn points(&self, method: &str, instance: &str) -> Option<f64> {
        let m = self.methods.iter().position(|x| x == method)?;
        let i = self.instances.iter().position(|x| x == instance)?;
        Some(self.points[m][i])
    }

    /// Method indices by descending total, ties in table order.
    pub fn ranking(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.methods.len()).collect();
        order.sort_by(|&a, &b| self.totals[b].total_cmp(&self.totals[a]));
        order
    }
}

pub fn f1_from_medians(medians: &MedianTable, points: &[f64]) -> F1Table {
    let mut table = vec![vec![0.0; medians.instances.len()]; medians.methods.len()];
    for i in 0..medians.instances.len() {
        let column: Vec<f64> = medians.values.iter().map(|row| row[i]).collect();
        for (m, p) in f1_points(&column, points).into_iter().enumerate() {
            table[m][i] = p;
        }
    }
    let totals = table.iter().map(|row| row.iter().sum()).collect();
    F1Table {
        methods: medians.methods.clone(),
        instances: medians.instances.clone(),
        points: table,
        totals,
    }
}

pub fn f1_scores(records: &[RunRecord]) -> Result<F1Table, ScoringError> {
    Ok(f1_from_medians(&median_table(records)?, &F1_POINTS))
}

/// Per-instance (min, max) normalization bounds.
pub type Bounds = BTreeMap<String, (f64, f64)>;

/// Min-max normalized medians, `normalized[m][i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedTable {
    pub methods: Vec<String>,
    pub instances: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl NormalizedTable {
    pub fn mean(&self, method: &str) -> Option<f64> {
        let m = self.methods.iter().position(|x| x == method)?;
        let row = &self.values[m];
        Some(row.iter().sum::<f64>() / row.len() as f64)
    }

    pub fn row(&self, method: &str) -> Option<&[f64]> {
        let m = self.methods.iter().position(|x| x == method)?;
        Some(&self.values[m])
    }
}

/// `(median − min) / (max − min)` per instance. Bounds come from `reference`
/// when it covers the instance (values are then clamped to `[0, 1]`), from
/// the finite medians in the table otherwise. Failed cells map to 1 and
/// degenerate bounds map everything to 0.
pub fn normalize_medians(medians: &MedianTable, reference: Option<&Bounds>) -> NormalizedTable {
    let mut values = vec![vec![0.0; medians.instances.len()]; medians.methods.len()];
    for (i, instance) in medians.instances.iter().enumerate() {
        let column: Vec<f64> = medians.values.iter().map(|row| row[i]).collect();
        let (lo, hi, external) = match reference.and_then(|r| r.get(instance)) {
            Some(&(lo, hi)) => (lo, hi, true),
            None => {
                let finite = column.iter().copied().filter(|v| v.is_finite());
                let lo = finite.clone().fold(f64::INFINITY, f64::min);
                let hi = finite.fold(f64::NEG_INFINITY, f64::max);
                (lo, hi, false)
            }
        };
        let degenerate = hi.is_nan() || lo.is_nan() || hi <= lo;
        if degenerate {
            log::warn!("instance {instance}: degenerate normalization bounds ({lo}, {hi}); all values set to 0");
        }
        for (m, &v) in column.iter().enumerate() {
            values[m][i] = if !v.is_finite() {
                1.0
            } else if degenerate {
                0.0
            } else {
                let x = (v - lo) / (hi - lo);
                if external {
                    x.clamp(0.0, 1.0)
                } else {
                    x
                }
            };
        }
    }
    NormalizedTable {
        methods: medians.methods.clone(),
        instances: medians.instances.clone(),
        values,
    }
}

/// Published medians of external competitors: `(instance, method, median)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ReferenceResults {
    pub rows: Vec<(String, String, f64)>,
}

impl ReferenceResults {
    pub fn read<R: Read>(input: R, source: &str) -> Result<Self> {
        let mut reader = csv::Reader::from_reader(input);
        let headers = reader
            .headers()
            .map_err(|e| Error::format(source, e))?
            .clone();
        if headers
            .iter()
            .map(str::trim)
            .ne(["instance", "method", "median"])
        {
            return Err(Error::format(
                source,
                "expected columns instance,method,median",
            ));
        }
        let mut rows = Vec::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| Error::format(source, e))?;
            let median: f64 = row[2].trim().parse().map_err(|_| {
                Error::format(source, format!("line {}: bad median `{}`", i + 2, &row[2]))
            })?;
            rows.push((row[0].trim().to_string(), row[1].trim().to_string(), median));
        }
        Ok(Self { rows })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)
            .map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::read(file, &path.display().to_string())
    }

    /// Min and max reference median per instance.
    pub fn bounds(&self) -> Bounds {
        let mut out = Bounds::new();
        for (instance, _, v) in &self.rows {
            let e = out.entry(instance.clone()).or_insert((*v, *v));
            e.0 = e.0.min(*v);
            e.1 = e.1.max(*v);
        }
        out
    }

    /// Adds the reference competitors to `medians`, restricted to the
    /// table's instances. A reference method without a value on some
    /// instance ranks last there.
    pub fn merge_into(&self, medians: &MedianTable) -> MedianTable {
        let mut merged = medians.clone();
        for (instance, method, v) in &self.rows {
            let Some(i) = merged.instances.iter().position(|x| x == instance) else {
                continue;
            };
            let m = match merged.methods.iter().position(|x| x == method) {
                Some(m) if m >= medians.methods.len() => m,
                Some(_) => {
                    log::warn!("reference method `{method}` shadows a local method; skipped");
                    continue;
                }
                None => {
                    merged.methods.push(method.clone());
                    merged
                        .values
                        .push(vec![f64::INFINITY; merged.instances.len()]);
                    merged.methods.len() - 1
                }
            };
            merged.values[m][i] = *v;
        }
        merged
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::matrix::RunStatus;

    fn rec(method: &str, instance: &str, seed: u64, cost: Option<f64>) -> RunRecord {
        RunRecord {
            method: method.into(),
            instance: instance.into(),
            seed,
            best_cost: cost,
            wall_time_ms: 1.0,
            status: if cost.is_some() {
                RunStatus::Ok
            } else {
                RunStatus::Failed {
                    message: "x".into(),
                }
            },
            trajectory: None,
        }
    }

    #[test]
    fn point_examples() {
        assert_eq!(f1_points(&[5.0, 7.0, 9.0], &F1_POINTS), [10.0, 8.0, 6.0]);
        assert_eq!(f1_points(&[3.0, 3.0, 9.0], &F1_POINTS), [9.0, 9.0, 6.0]);
        assert_eq!(f1_points(&[42.0], &F1_POINTS), [10.0]);
        let ten: Vec<f64> = (0..10).map(f64::from).collect();
        let p = f1_points(&ten, &F1_POINTS);
        assert_eq!(p[7], 1.0);
        assert_eq!(p[8], 0.0);
        // tie straddling the 8th place: (1 + 0) / 2
        let mut straddle = ten.clone();
        straddle[8] = 7.0;
        let p = f1_points(&straddle, &F1_POINTS);
        assert_eq!((p[7], p[8], p[9]), (0.5, 0.5, 0.0));
    }

    #[test]
    fn medians_and_failed_cells() {
        let records = vec![
            rec("a", "i1", 1, Some(4.0)),
            rec("a", "i1", 2, Some(2.0)),
            rec("a", "i1", 3, None),
            rec("b", "i1", 1, None),
            rec("a", "i2", 1, Some(1.0)),
            rec("b", "i2", 1, Some(3.0)),
        ];
        let t = median_table(&records).unwrap();
        assert_eq!(t.get("a", "i1"), Some(3.0));
        assert_eq!(t.get("b", "i1"), Some(f64::INFINITY));
        assert_eq!(t.failed_cells(), [("b".to_string(), "i1".to_string())]);
        let f1 = f1_from_medians(&t, &F1_POINTS);
        assert_eq!(f1.total("a"), Some(20.0));
        assert_eq!(f1.total("b"), Some(16.0));
        assert_eq!(f1.ranking(), [0, 1]);
    }

    #[test]
    fn missing_cell_is_named() {
        let records = vec![rec("a", "i1", 1, Some(1.0)), rec("b", "i2", 1, Some(1.0))];
        match median_table(&records) {
            Err(ScoringError::MissingCell { method, instance }) => {
                assert_eq!((method.as_str(), instance.as_str()), ("a", "i2"));
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(median_table(&[]), Err(ScoringError::Empty));
    }

    fn table(values: &[f64]) -> MedianTable {
        MedianTable {
            methods: (0..values.len()).map(|i| format!("m{i}")).collect(),
            instances: vec!["i".into()],
            values: values.iter().map(|&v| vec![v]).collect(),
        }
    }

    #[test]
    fn normalization_examples() {
        let n = normalize_medians(&table(&[10.0, 20.0, 30.0]), None);
        assert_eq!(n.values, [[0.0], [0.5], [1.0]]);
        let bounds: Bounds = [("i".to_string(), (10.0, 30.0))].into();
        assert_eq!(
            normalize_medians(&table(&[5.0]), Some(&bounds)).values,
            [[0.0]]
        );
        assert_eq!(
            normalize_medians(&table(&[20.0]), Some(&bounds)).values,
            [[0.5]]
        );
        assert_eq!(
            normalize_medians(&table(&[7.0, 7.0]), None).values,
            [[0.0], [0.0]]
        );
        assert_eq!(
            normalize_medians(&table(&[1.0, f64::INFINITY, 3.0]), None).values,
            [[0.0], [1.0], [1.0]]
        );
    }

    #[test]
    fn reference_results() {
        let text = "instance,method,median\ni,GIHH,12\ni,AdapHH,8\nother,GIHH,1\n";
        let reference = ReferenceResults::read(text.as_bytes(), "ref").unwrap();
        assert_eq!(reference.bounds()["i"], (8.0, 12.0));
        let merged = reference.merge_into(&table(&[10.0]));
        assert_eq!(merged.methods, ["m0", "GIHH", "AdapHH"]);
        let f1 = f1_from_medians(&merged, &F1_POINTS);
        assert_eq!(f1.points, [[8.0], [6.0], [10.0]]);
        assert!(ReferenceResults::read("a,b\n".as_bytes(), "ref").is_err());
    }
}

//! μ-normalized acceptance criteria.
//!
//! Thresholds are expressed as multiples `τ` of the run's mean strict
//! improvement `μ`, which makes the same parameterization usable on domains
//! whose objective values live on very different scales.

use serde::{Deserialize, Serialize};

use crate::engine::Cost;
use crate::error::ConfigError;

/// Running mean of strict improvements observed during a run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ImprovementStats {
    pub mu: f64,
    pub n_imp: u64,
}

impl ImprovementStats {
    pub fn new() -> Self {
        Self::default()
    }

    /// Folds one candidate into the statistic. Only strict improvements count.
    pub fn update(&mut self, c_cur: Cost, c_new: Cost) {
        if c_new < c_cur {
            self.n_imp += 1;
            self.mu += (c_cur - c_new - self.mu) / self.n_imp as f64;
        }
    }
}

/// Functional form of [`ImprovementStats::update`].
pub fn update_mu(stats: ImprovementStats, c_cur: Cost, c_new: Cost) -> ImprovementStats {
    let mut next = stats;
    next.update(c_cur, c_new);
    next
}

/// Threshold multiplier over the consumed budget fraction `x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum TauSchedule {
    Const {
        tau: f64,
    },
    /// `τ(x) = exp((1-x)·ln τ_start + x·ln τ_end)`.
    Exp {
        tau_start: f64,
        tau_end: f64,
    },
}

impl TauSchedule {
    pub fn constant(tau: f64) -> Result<Self, ConfigError> {
        check_tau("tau", tau)?;
        Ok(TauSchedule::Const { tau })
    }

    pub fn exponential(tau_start: f64, tau_end: f64) -> Result<Self, ConfigError> {
        check_tau("tau_start", tau_start)?;
        check_tau("tau_end", tau_end)?;
        Ok(TauSchedule::Exp { tau_start, tau_end })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match *self {
            TauSchedule::Const { tau } => check_tau("tau", tau),
            TauSchedule::Exp { tau_start, tau_end } => {
                check_tau("tau_start", tau_start)?;
                check_tau("tau_end", tau_end)
            }
        }
    }

    pub fn effective_tau(&self, x: f64) -> f64 {
        effective_tau(self, x)
    }
}

fn check_tau(name: &str, value: f64) -> Result<(), ConfigError> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(ConfigError::invalid(format!(
            "{name} must be a positive finite number, got {value}"
        )))
    }
}

/// Effective `τ` at consumed fraction `x` (clamped to `[0, 1]`).
pub fn effective_tau(schedule: &TauSchedule, x: f64) -> f64 {
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, 1.0) };
    match *schedule {
        TauSchedule::Const { tau } => tau,
        TauSchedule::Exp { tau_start, tau_end } => {
            // endpoints are returned verbatim so f(0) and f(1) are exact
            if x == 0.0 {
                tau_start
            } else if x == 1.0 {
                tau_end
            } else {
                ((1.0 - x) * tau_start.ln() + x * tau_end.ln()).exp()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AcceptanceStrategy {
    AcceptAll,
    /// Keeps only strict improvements.
    DiscardWorse,
    /// Metropolis: `U(0,1) < exp((c_cur - c_new) / (τμ))`.
    Metropolis {
        schedule: TauSchedule,
    },
    /// Threshold acceptance: `c_new <= c_cur + τμ`.
    Threshold {
        schedule: TauSchedule,
    },
    /// Record-to-record travel: `c_new <= c_best + τμ`.
    RecordToRecord {
        schedule: TauSchedule,
    },
}

/// Lower clamp for the Metropolis exponent; `exp` underflows to 0 below it.
const MIN_EXPONENT: f64 = -746.0;

impl AcceptanceStrategy {
    pub fn schedule(&self) -> Option<&TauSchedule> {
        match self {
            AcceptanceStrategy::Metropolis { schedule }
            | AcceptanceStrategy::Threshold { schedule }
            | AcceptanceStrategy::RecordToRecord { schedule } => Some(schedule),
            _ => None,
        }
    }

    /// Whether a decision may consume a uniform random draw.
    pub fn needs_random(&self) -> bool {
        matches!(self, AcceptanceStrategy::Metropolis { .. })
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        match self.schedule() {
            Some(schedule) => schedule.validate(),
            None => Ok(()),
        }
    }

    /// Probability that a non-improving candidate passes the Metropolis test.
    /// `None` for strategies other than Metropolis.
    pub fn metropolis_probability(&self, mu: f64, c_cur: Cost, c_new: Cost, x: f64) -> Option<f64> {
        let AcceptanceStrategy::Metropolis { schedule } = self else {
            return None;
        };
        if c_new < c_cur {
            return Some(1.0);
        }
        let scale = effective_tau(schedule, x) * mu;
        if scale.is_nan() || scale <= 0.0 {
            return Some(0.0);
        }
        let exponent = ((c_cur - c_new) / scale).clamp(MIN_EXPONENT, 0.0);
        Some(exponent.exp())
    }

    pub fn accept(
        &self,
        mu: f64,
        c_best: Cost,
        c_cur: Cost,
        c_new: Cost,
        x: f64,
        rand01: f64,
    ) -> bool {
        accept(self, mu, c_best, c_cur, c_new, x, rand01)
    }
}

/// Acceptance decision for one candidate.
///
/// Strict improvements always pass. With `mu == 0` (no improvement seen
/// yet) the μ-normalized criteria reject every non-improving candidate.
pub fn accept(
    strategy: &AcceptanceStrategy,
    mu: f64,
    c_best: Cost,
    c_cur: Cost,
    c_new: Cost,
    x: f64,
    rand01: f64,
) -> bool {
    if c_new < c_cur {
        return true;
    }
    match strategy {
        AcceptanceStrategy::AcceptAll => true,
        AcceptanceStrategy::DiscardWorse => false,
        AcceptanceStrategy::Metropolis { .. } => {
            if mu.is_nan() || mu <= 0.0 {
                return false;
            }
            let p = strategy
                .metropolis_probability(mu, c_cur, c_new, x)
                .unwrap_or(0.0);
            rand01 < p
        }
        AcceptanceStrategy::Threshold { schedule } => {
            mu > 0.0 && c_new <= c_cur + effective_tau(schedule, x) * mu
        }
        AcceptanceStrategy::RecordToRecord { schedule } => {
            mu > 0.0 && c_new <= c_best + effective_tau(schedule, x) * mu
        }
    }
}

/// The three μ-normalized criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    #[serde(alias = "MA", alias = "ma")]
    Metropolis,
    #[serde(alias = "TA", alias = "ta")]
    Threshold,
    #[serde(rename = "r2r", alias = "R2R", alias = "record_to_record")]
    RecordToRecord,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 3] = [
        StrategyKind::Metropolis,
        StrategyKind::Threshold,
        StrategyKind::RecordToRecord,
    ];

    pub fn short_name(self) -> &'static str {
        match self {
            StrategyKind::Metropolis => "MA",
            StrategyKind::Threshold => "TA",
            StrategyKind::RecordToRecord => "R2R",
        }
    }

    pub fn with_schedule(self, schedule: TauSchedule) -> AcceptanceStrategy {
        match self {
            StrategyKind::Metropolis => AcceptanceStrategy::Metropolis { schedule },
            StrategyKind::Threshold => AcceptanceStrategy::Threshold { schedule },
            StrategyKind::RecordToRecord => AcceptanceStrategy::RecordToRecord { schedule },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleVariant {
    #[serde(alias = "CONST")]
    Const,
    #[serde(alias = "EXP")]
    Exp,
}

impl ScheduleVariant {
    pub fn short_name(self) -> &'static str {
        match self {
            ScheduleVariant::Const => "CONST",
            ScheduleVariant::Exp => "EXP",
        }
    }
}

/// Which row family of the tuned parameter scales to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PresetFamily {
    Nhh,
    /// Shared by LUBY and MC, which restart to their best-so-far solution.
    McLuby,
}

/// One row of the parameter-scale table: five values from `min` to `max`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParameterScale {
    pub tau_min: f64,
    pub tau_max: f64,
    pub tau_step: f64,
    /// Fixed `τ_end` for EXP rows.
    pub tau_end: Option<f64>,
}

impl ParameterScale {
    pub fn values(&self) -> [f64; 5] {
        // all table entries are dyadic fractions, so this is exact
        std::array::from_fn(|i| self.tau_min + i as f64 * self.tau_step)
    }
}

/// Tuned parameter scales per (family, criterion, schedule variant).
pub fn parameter_scale(
    family: PresetFamily,
    kind: StrategyKind,
    variant: ScheduleVariant,
) -> ParameterScale {
    use PresetFamily::*;
    use ScheduleVariant::*;
    use StrategyKind::*;
    let (tau_min, tau_max, tau_step, tau_end) = match (family, variant, kind) {
        (Nhh, Const, RecordToRecord) => (1.0, 6.0, 1.25, None),
        (Nhh, Const, Metropolis) => (0.25, 1.25, 0.25, None),
        (Nhh, Const, Threshold) => (0.25, 1.25, 0.25, None),
        (Nhh, Exp, RecordToRecord) => (2.5, 7.5, 1.25, Some(1.0)),
        (Nhh, Exp, Metropolis) => (0.5, 1.5, 0.25, Some(0.25)),
        (Nhh, Exp, Threshold) => (0.5, 1.5, 0.25, Some(0.25)),
        (McLuby, Const, RecordToRecord) => (1.0, 6.0, 1.25, None),
        (McLuby, Const, Metropolis) => (0.25, 2.25, 0.5, None),
        (McLuby, Const, Threshold) => (1.0, 2.0, 0.25, None),
        (McLuby, Exp, RecordToRecord) => (2.5, 12.5, 2.5, Some(1.0)),
        (McLuby, Exp, Metropolis) => (0.75, 2.75, 0.5, Some(0.25)),
        (McLuby, Exp, Threshold) => (1.25, 2.25, 0.25, Some(1.0)),
    };
    ParameterScale {
        tau_min,
        tau_max,
        tau_step,
        tau_end,
    }
}

/// The five parameterizations of a strategy, in increasing `τ` order.
pub fn preset_table(
    family: PresetFamily,
    kind: StrategyKind,
    variant: ScheduleVariant,
) -> Vec<AcceptanceStrategy> {
    let scale = parameter_scale(family, kind, variant);
    scale
        .values()
        .into_iter()
        .map(|tau| {
            let schedule = match scale.tau_end {
                None => TauSchedule::Const { tau },
                Some(tau_end) => TauSchedule::Exp {
                    tau_start: tau,
                    tau_end,
                },
            };
            kind.with_schedule(schedule)
        })
        .collect()
}

/// Middle entry of [`preset_table`].
pub fn middle_preset(
    family: PresetFamily,
    kind: StrategyKind,
    variant: ScheduleVariant,
) -> AcceptanceStrategy {
    preset_table(family, kind, variant)[2]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r2r_exp(start: f64, end: f64) -> AcceptanceStrategy {
        AcceptanceStrategy::RecordToRecord {
            schedule: TauSchedule::Exp {
                tau_start: start,
                tau_end: end,
            },
        }
    }

    #[test]
    fn update_mu_examples() {
        let s0 = ImprovementStats::new();
        assert_eq!(s0, ImprovementStats { mu: 0.0, n_imp: 0 });
        let s1 = update_mu(s0, 10.0, 7.0);
        assert_eq!(s1, ImprovementStats { mu: 3.0, n_imp: 1 });
        let s2 = update_mu(s1, 7.0, 6.0);
        assert_eq!(s2, ImprovementStats { mu: 2.0, n_imp: 2 });
        let s3 = update_mu(s2, 6.0, 6.0);
        assert_eq!(s3, s2);
        let s4 = update_mu(s3, 6.0, 8.0);
        assert_eq!(s4, s2);
    }

    #[test]
    fn effective_tau_examples() {
        let exp = TauSchedule::Exp {
            tau_start: 5.0,
            tau_end: 1.0,
        };
        assert_eq!(effective_tau(&exp, 0.0), 5.0);
        assert_eq!(effective_tau(&exp, 1.0), 1.0);
        assert!((effective_tau(&exp, 0.5) - 5f64.sqrt()).abs() < 1e-12);
        assert_eq!(effective_tau(&exp, -0.3), 5.0);
        assert_eq!(effective_tau(&exp, 1.7), 1.0);
        let c = TauSchedule::Const { tau: 1.25 };
        for x in [0.0, 0.3, 1.0] {
            assert_eq!(effective_tau(&c, x), 1.25);
        }
    }

    #[test]
    fn schedule_constructors_validate() {
        assert!(TauSchedule::constant(0.0).is_err());
        assert!(TauSchedule::constant(f64::NAN).is_err());
        assert!(TauSchedule::exponential(5.0, -1.0).is_err());
        assert!(TauSchedule::exponential(5.0, 1.0).is_ok());
    }

    #[test]
    fn accept_examples() {
        // τ·μ = 4 with EXP(4,4)·1
        let r2r = r2r_exp(4.0, 4.0);
        assert!(accept(&r2r, 1.0, 95.0, 100.0, 99.0, 0.5, 0.9));
        assert!(accept(&r2r, 1.0, 95.0, 98.0, 99.0, 0.5, 0.9));
        assert!(!accept(&r2r, 1.0, 95.0, 99.2, 99.5, 0.5, 0.9));

        let ta = AcceptanceStrategy::Threshold {
            schedule: TauSchedule::Const { tau: 0.5 },
        };
        assert!(!accept(&ta, 1.0, 5.0, 10.0, 10.6, 0.0, 0.0));
        assert!(accept(&ta, 1.0, 5.0, 10.0, 10.4, 0.0, 0.0));

        let all = [
            AcceptanceStrategy::AcceptAll,
            AcceptanceStrategy::DiscardWorse,
            ta,
            r2r,
            AcceptanceStrategy::Metropolis {
                schedule: TauSchedule::Const { tau: 1.0 },
            },
        ];
        for s in &all {
            assert!(accept(s, 0.0, 9.0, 10.0, 9.0, 0.5, 0.999));
        }
    }

    #[test]
    fn discard_worse_rejects_equal_cost() {
        assert!(!accept(
            &AcceptanceStrategy::DiscardWorse,
            1.0,
            5.0,
            10.0,
            10.0,
            0.0,
            0.0
        ));
        assert!(accept(
            &AcceptanceStrategy::AcceptAll,
            1.0,
            5.0,
            10.0,
            50.0,
            0.0,
            0.0
        ));
    }

    #[test]
    fn zero_mu_rejects_non_improving() {
        let strategies = [
            AcceptanceStrategy::Metropolis {
                schedule: TauSchedule::Const { tau: 1.0 },
            },
            AcceptanceStrategy::Threshold {
                schedule: TauSchedule::Const { tau: 1.0 },
            },
            r2r_exp(5.0, 1.0),
        ];
        for s in &strategies {
            assert!(!accept(s, 0.0, 10.0, 10.0, 10.0, 0.2, 0.0));
            assert!(!accept(s, 0.0, 10.0, 10.0, 11.0, 0.2, 0.0));
        }
    }

    #[test]
    fn equal_cost_passes_with_positive_mu() {
        let ma = AcceptanceStrategy::Metropolis {
            schedule: TauSchedule::Const { tau: 1.0 },
        };
        assert_eq!(ma.metropolis_probability(2.0, 10.0, 10.0, 0.0), Some(1.0));
        assert!(accept(&ma, 2.0, 8.0, 10.0, 10.0, 0.0, 0.999_999));
        let ta = AcceptanceStrategy::Threshold {
            schedule: TauSchedule::Const { tau: 1.0 },
        };
        assert!(accept(&ta, 2.0, 8.0, 10.0, 10.0, 0.0, 0.5));
    }

    #[test]
    fn metropolis_extreme_exponent_does_not_overflow() {
        let ma = AcceptanceStrategy::Metropolis {
            schedule: TauSchedule::Const { tau: 1e-3 },
        };
        let p = ma.metropolis_probability(1e-300, 0.0, 1e300, 0.0).unwrap();
        assert_eq!(p, 0.0);
        assert!(!accept(&ma, 1e-300, 0.0, 0.0, 1e300, 0.0, 0.0));
    }

    #[test]
    fn preset_examples() {
        let taus: Vec<f64> = preset_table(
            PresetFamily::Nhh,
            StrategyKind::RecordToRecord,
            ScheduleVariant::Const,
        )
        .iter()
        .map(|s| match s.schedule() {
            Some(TauSchedule::Const { tau }) => *tau,
            other => panic!("unexpected {other:?}"),
        })
        .collect();
        assert_eq!(taus, vec![1.0, 2.25, 3.5, 4.75, 6.0]);

        let ma_exp = preset_table(
            PresetFamily::Nhh,
            StrategyKind::Metropolis,
            ScheduleVariant::Exp,
        );
        let starts: Vec<f64> = ma_exp
            .iter()
            .map(|s| match s {
                AcceptanceStrategy::Metropolis {
                    schedule: TauSchedule::Exp { tau_start, tau_end },
                } => {
                    assert_eq!(*tau_end, 0.25);
                    *tau_start
                }
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(starts, vec![0.5, 0.75, 1.0, 1.25, 1.5]);

        let luby = preset_table(
            PresetFamily::McLuby,
            StrategyKind::RecordToRecord,
            ScheduleVariant::Exp,
        );
        let starts: Vec<f64> = luby
            .iter()
            .map(|s| match s.schedule() {
                Some(TauSchedule::Exp { tau_start, tau_end }) => {
                    assert_eq!(*tau_end, 1.0);
                    *tau_start
                }
                other => panic!("unexpected {other:?}"),
            })
            .collect();
        assert_eq!(starts, vec![2.5, 5.0, 7.5, 10.0, 12.5]);
    }

    #[test]
    fn every_scale_ends_at_its_max() {
        for family in [PresetFamily::Nhh, PresetFamily::McLuby] {
            for kind in StrategyKind::ALL {
                for variant in [ScheduleVariant::Const, ScheduleVariant::Exp] {
                    let scale = parameter_scale(family, kind, variant);
                    assert_eq!(
                        scale.values()[4],
                        scale.tau_max,
                        "{family:?} {kind:?} {variant:?}"
                    );
                    assert_eq!(scale.tau_end.is_some(), variant == ScheduleVariant::Exp);
                }
            }
        }
    }

    #[test]
    fn strategy_serde_shape() {
        let s = r2r_exp(5.0, 1.0);
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(
            json,
            r#"{"kind":"record_to_record","schedule":{"variant":"exp","tau_start":5.0,"tau_end":1.0}}"#
        );
        let back: AcceptanceStrategy = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }

    fn any_strategy() -> impl Strategy<Value = AcceptanceStrategy> {
        let schedule = prop_oneof![
            (0.01f64..10.0).prop_map(|tau| TauSchedule::Const { tau }),
            (0.01f64..10.0, 0.01f64..10.0).prop_map(|(a, b)| TauSchedule::Exp {
                tau_start: a,
                tau_end: b
            }),
        ];
        prop_oneof![
            Just(AcceptanceStrategy::AcceptAll),
            Just(AcceptanceStrategy::DiscardWorse),
            schedule
                .clone()
                .prop_map(|schedule| AcceptanceStrategy::Metropolis { schedule }),
            schedule
                .clone()
                .prop_map(|schedule| AcceptanceStrategy::Threshold { schedule }),
            schedule.prop_map(|schedule| AcceptanceStrategy::RecordToRecord { schedule }),
        ]
    }

    proptest! {
        #[test]
        fn accept_is_monotone_in_candidate_cost(
            strategy in any_strategy(),
            mu in 0.0f64..5.0,
            c_cur in 0.0f64..100.0,
            best_gap in 0.0f64..20.0,
            a in -10.0f64..30.0,
            b in -10.0f64..30.0,
            x in 0.0f64..=1.0,
            r in 0.0f64..1.0,
        ) {
            let c_best = (c_cur - best_gap).max(0.0);
            let (better, worse) = if a <= b { (c_cur + a, c_cur + b) } else { (c_cur + b, c_cur + a) };
            if accept(&strategy, mu, c_best, c_cur, worse, x, r) {
                prop_assert!(accept(&strategy, mu, c_best, c_cur, better, x, r));
            }
        }

        #[test]
        fn deterministic_criteria_ignore_random_draw(
            tau in 0.01f64..10.0,
            mu in 0.0f64..5.0,
            c_cur in 0.0f64..100.0,
            c_new in 0.0f64..120.0,
            x in 0.0f64..=1.0,
            r1 in 0.0f64..1.0,
            r2 in 0.0f64..1.0,
        ) {
            let schedule = TauSchedule::Const { tau };
            for s in [AcceptanceStrategy::Threshold { schedule }, AcceptanceStrategy::RecordToRecord { schedule }] {
                prop_assert_eq!(accept(&s, mu, c_cur * 0.9, c_cur, c_new, x, r1), accept(&s, mu, c_cur * 0.9, c_cur, c_new, x, r2));
            }
        }

        #[test]
        fn exp_schedule_matches_power_form(a in 0.01f64..20.0, b in 0.01f64..20.0, x in 0.0f64..=1.0) {
            let s = TauSchedule::Exp { tau_start: a, tau_end: b };
            let direct = a.powf(1.0 - x) * b.powf(x);
            let got = effective_tau(&s, x);
            prop_assert!(((got - direct) / direct).abs() < 1e-12);
        }

        #[test]
        fn exp_schedule_is_monotone(a in 0.01f64..20.0, b in 0.01f64..20.0, x in 0.0f64..1.0, dx in 0.0f64..1.0) {
            let s = TauSchedule::Exp { tau_start: a, tau_end: b };
            let y = (x + dx).min(1.0);
            let (fx, fy) = (effective_tau(&s, x), effective_tau(&s, y));
            if a >= b {
                prop_assert!(fy <= fx * (1.0 + 1e-12));
            } else {
                prop_assert!(fy >= fx * (1.0 - 1e-12));
            }
        }
    }
}

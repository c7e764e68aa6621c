//! Maximum satisfiability: minimize the number of unsatisfied clauses.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::Rng;

use crate::engine::{Cost, LlhCategory, LlhDescriptor, Problem, SearchRng};
use crate::error::InstanceError;

use super::{ceil_count, work_ticks};

pub const LS_BEST_OF_K: usize = 0;
pub const MUT_RANDOM_FLIPS: usize = 1;
pub const RR_GREEDY_REASSIGN: usize = 2;
pub const XO_UNIFORM: usize = 3;

/// Candidate variables sampled per hill-climbing step.
const CANDIDATES: usize = 8;
/// Consecutive samples without a non-worsening flip that end the climb.
const STALL_LIMIT: usize = 3;

const NOT_LISTED: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct MaxSat {
    num_vars: usize,
    clauses: Vec<Vec<i32>>,
    /// Per variable: (clause index, literal is positive).
    occurrences: Vec<Vec<(u32, bool)>>,
    llhs: Vec<LlhDescriptor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assignment {
    values: Vec<bool>,
    true_literals: Vec<u32>,
    unsat: Vec<u32>,
    unsat_slot: Vec<u32>,
}

impl Assignment {
    pub fn values(&self) -> &[bool] {
        &self.values
    }

    pub fn unsatisfied(&self) -> usize {
        self.unsat.len()
    }

    fn mark_unsat(&mut self, clause: u32) {
        self.unsat_slot[clause as usize] = self.unsat.len() as u32;
        self.unsat.push(clause);
    }

    fn mark_sat(&mut self, clause: u32) {
        let slot = self.unsat_slot[clause as usize] as usize;
        let last = *self.unsat.last().expect("clause is listed");
        self.unsat.swap_remove(slot);
        if last != clause {
            self.unsat_slot[last as usize] = slot as u32;
        }
        self.unsat_slot[clause as usize] = NOT_LISTED;
    }
}

impl MaxSat {
    pub fn new(num_vars: usize, clauses: Vec<Vec<i32>>) -> Result<Self, String> {
        if num_vars == 0 {
            return Err("instance has no variables".into());
        }
        if clauses.is_empty() {
            return Err("instance has no clauses".into());
        }
        let mut occurrences = vec![Vec::new(); num_vars];
        for (c, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(format!("clause {} is empty", c + 1));
            }
            for &lit in clause {
                let var = lit.unsigned_abs() as usize;
                if lit == 0 || var > num_vars {
                    return Err(format!(
                        "clause {} has literal {lit} outside 1..={num_vars}",
                        c + 1
                    ));
                }
                occurrences[var - 1].push((c as u32, lit > 0));
            }
        }
        let llhs = vec![
            LlhDescriptor::new(LS_BEST_OF_K, LlhCategory::LocalSearch, false),
            LlhDescriptor::new(MUT_RANDOM_FLIPS, LlhCategory::Mutation, true),
            LlhDescriptor::new(RR_GREEDY_REASSIGN, LlhCategory::RuinRecreate, true),
            LlhDescriptor::new(XO_UNIFORM, LlhCategory::Crossover, false),
        ];
        Ok(Self {
            num_vars,
            clauses,
            occurrences,
            llhs,
        })
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    /// Variables flipped by the mutation heuristic at `intensity`.
    pub fn mutation_flips(&self, intensity: f64) -> usize {
        ceil_count(intensity, self.num_vars as f64).min(self.num_vars)
    }

    /// Variables unassigned by the ruin-and-recreate heuristic at `intensity`.
    pub fn ruin_size(&self, intensity: f64) -> usize {
        self.mutation_flips(intensity)
    }

    /// Builds the cached clause state for a full assignment.
    pub fn assignment(&self, values: Vec<bool>) -> Assignment {
        assert_eq!(values.len(), self.num_vars);
        let mut sol = Assignment {
            values,
            true_literals: vec![0; self.clauses.len()],
            unsat: Vec::new(),
            unsat_slot: vec![NOT_LISTED; self.clauses.len()],
        };
        self.rebuild(&mut sol);
        sol
    }

    fn rebuild(&self, sol: &mut Assignment) {
        sol.unsat.clear();
        for (c, clause) in self.clauses.iter().enumerate() {
            let count = clause
                .iter()
                .filter(|&&lit| sol.values[lit.unsigned_abs() as usize - 1] == (lit > 0))
                .count() as u32;
            sol.true_literals[c] = count;
            sol.unsat_slot[c] = NOT_LISTED;
            if count == 0 {
                sol.mark_unsat(c as u32);
            }
        }
    }

    fn literal_count(&self) -> usize {
        self.clauses.iter().map(Vec::len).sum()
    }

    fn flip(&self, sol: &mut Assignment, var: usize) -> usize {
        let value = !sol.values[var];
        sol.values[var] = value;
        for &(c, positive) in &self.occurrences[var] {
            if positive == value {
                sol.true_literals[c as usize] += 1;
                if sol.true_literals[c as usize] == 1 {
                    sol.mark_sat(c);
                }
            } else {
                sol.true_literals[c as usize] -= 1;
                if sol.true_literals[c as usize] == 0 {
                    sol.mark_unsat(c);
                }
            }
        }
        self.occurrences[var].len()
    }

    /// Change in unsatisfied clauses if `var` were flipped.
    fn flip_delta(&self, sol: &Assignment, var: usize) -> i64 {
        let value = sol.values[var];
        let mut delta = 0i64;
        for &(c, positive) in &self.occurrences[var] {
            let count = sol.true_literals[c as usize];
            if count == 0 {
                delta -= 1;
            } else if count == 1 && positive == value {
                delta += 1;
            }
        }
        delta
    }

    fn hill_climb(&self, sol: &mut Assignment, rng: &mut SearchRng) -> usize {
        let max_samples = (self.num_vars / 10).max(10);
        let mut work = 0;
        let mut stalled = 0;
        for _ in 0..max_samples {
            if sol.unsat.is_empty() {
                break;
            }
            let mut best: Option<(i64, usize)> = None;
            for _ in 0..CANDIDATES {
                let clause = sol.unsat[rng.random_range(0..sol.unsat.len())] as usize;
                let lits = &self.clauses[clause];
                let var = lits[rng.random_range(0..lits.len())].unsigned_abs() as usize - 1;
                let delta = self.flip_delta(sol, var);
                work += self.occurrences[var].len();
                if best.is_none_or(|(d, _)| delta < d) {
                    best = Some((delta, var));
                }
            }
            match best {
                Some((delta, var)) if delta <= 0 => {
                    work += self.flip(sol, var);
                    stalled = 0;
                }
                _ => {
                    stalled += 1;
                    if stalled >= STALL_LIMIT {
                        break;
                    }
                }
            }
        }
        work
    }

    fn random_flips(&self, sol: &mut Assignment, intensity: f64, rng: &mut SearchRng) -> usize {
        let count = self.mutation_flips(intensity);
        let mut work = 0;
        for var in sample(rng, self.num_vars, count) {
            work += self.flip(sol, var);
        }
        work
    }

    fn greedy_reassign(&self, sol: &mut Assignment, intensity: f64, rng: &mut SearchRng) -> usize {
        let removed = sample(rng, self.num_vars, self.ruin_size(intensity)).into_vec();
        let mut work = 0;
        for &var in &removed {
            let value = sol.values[var];
            for &(c, positive) in &self.occurrences[var] {
                if positive == value {
                    sol.true_literals[c as usize] -= 1;
                }
            }
            work += self.occurrences[var].len();
        }
        for &var in &removed {
            let (mut gain_true, mut gain_false) = (0usize, 0usize);
            for &(c, positive) in &self.occurrences[var] {
                if sol.true_literals[c as usize] == 0 {
                    if positive {
                        gain_true += 1;
                    } else {
                        gain_false += 1;
                    }
                }
            }
            let value = match gain_true.cmp(&gain_false) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => rng.random_bool(0.5),
            };
            sol.values[var] = value;
            for &(c, positive) in &self.occurrences[var] {
                if positive == value {
                    sol.true_literals[c as usize] += 1;
                }
            }
            work += 2 * self.occurrences[var].len();
        }
        sol.unsat.clear();
        for c in 0..self.clauses.len() {
            sol.unsat_slot[c] = NOT_LISTED;
            if sol.true_literals[c] == 0 {
                sol.mark_unsat(c as u32);
            }
        }
        work + self.clauses.len()
    }

    fn uniform_crossover(
        &self,
        sol: &mut Assignment,
        partner: &Assignment,
        rng: &mut SearchRng,
    ) -> usize {
        for (value, &other) in sol.values.iter_mut().zip(&partner.values) {
            if rng.random_bool(0.5) {
                *value = other;
            }
        }
        self.rebuild(sol);
        self.literal_count() + self.num_vars
    }

    /// DIMACS CNF text.
    pub fn to_dimacs(&self) -> String {
        let mut out = format!("p cnf {} {}\n", self.num_vars, self.clauses.len());
        for clause in &self.clauses {
            for lit in clause {
                write!(out, "{lit} ").expect("write to string");
            }
            out.push_str("0\n");
        }
        out
    }

    pub fn parse_dimacs(text: &str, path: &str) -> Result<Self, InstanceError> {
        let parse_err = |line: usize, message: String| InstanceError::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut header: Option<(usize, usize)> = None;
        let mut clauses = Vec::new();
        let mut current = Vec::new();
        let mut last_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            last_line = line_no;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('c') {
                continue;
            }
            if line.starts_with('%') {
                break;
            }
            if line.starts_with('p') {
                if header.is_some() {
                    return Err(parse_err(line_no, "duplicate problem line".into()));
                }
                let parts: Vec<&str> = line.split_whitespace().collect();
                if parts.len() != 4 || parts[1] != "cnf" {
                    return Err(parse_err(
                        line_no,
                        format!("expected `p cnf <vars> <clauses>`, found `{line}`"),
                    ));
                }
                let vars = parts[2].parse().map_err(|_| {
                    parse_err(line_no, format!("bad variable count `{}`", parts[2]))
                })?;
                let count = parts[3]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad clause count `{}`", parts[3])))?;
                header = Some((vars, count));
                continue;
            }
            if header.is_none() {
                return Err(parse_err(
                    line_no,
                    "clause before the `p cnf` header".into(),
                ));
            }
            for token in line.split_whitespace() {
                let lit: i32 = token
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad literal `{token}`")))?;
                if lit == 0 {
                    clauses.push(std::mem::take(&mut current));
                } else {
                    current.push(lit);
                }
            }
        }
        let Some((vars, count)) = header else {
            return Err(parse_err(last_line.max(1), "missing `p cnf` header".into()));
        };
        if !current.is_empty() {
            return Err(parse_err(
                last_line,
                "last clause is not terminated by 0".into(),
            ));
        }
        let invalid = |message: String| InstanceError::Invalid {
            path: path.to_string(),
            message,
        };
        if clauses.len() != count {
            return Err(invalid(format!(
                "header declares {count} clauses, found {}",
                clauses.len()
            )));
        }
        Self::new(vars, clauses).map_err(invalid)
    }

    /// Random 3-SAT with four clauses per variable.
    pub fn generate(num_vars: usize, rng: &mut SearchRng) -> Self {
        assert!(num_vars >= 3, "need at least 3 variables");
        let clauses = (0..num_vars * super::MAXSAT_CLAUSE_RATIO)
            .map(|_| {
                sample(rng, num_vars, 3)
                    .into_iter()
                    .map(|v| {
                        let lit = v as i32 + 1;
                        if rng.random_bool(0.5) {
                            lit
                        } else {
                            -lit
                        }
                    })
                    .collect()
            })
            .collect();
        Self::new(num_vars, clauses).expect("generated instance is valid")
    }
}

impl Problem for MaxSat {
    type Solution = Assignment;

    fn name(&self) -> &str {
        "maxsat"
    }

    fn llhs(&self) -> &[LlhDescriptor] {
        &self.llhs
    }

    fn construct(&self, rng: &mut SearchRng) -> (Assignment, u64) {
        let values = (0..self.num_vars).map(|_| rng.random_bool(0.5)).collect();
        (self.assignment(values), work_ticks(self.literal_count()))
    }

    fn cost(&self, solution: &Assignment) -> Cost {
        solution.unsat.len() as Cost
    }

    fn evaluate(&self, solution: &Assignment) -> Cost {
        self.clauses
            .iter()
            .filter(|clause| {
                !clause
                    .iter()
                    .any(|&lit| solution.values[lit.unsigned_abs() as usize - 1] == (lit > 0))
            })
            .count() as Cost
    }

    fn is_feasible(&self, solution: &Assignment) -> bool {
        solution.values.len() == self.num_vars
    }

    fn apply(
        &self,
        llh: usize,
        solution: &mut Assignment,
        partner: Option<&Assignment>,
        intensity: f64,
        rng: &mut SearchRng,
    ) -> u64 {
        let work = match llh {
            LS_BEST_OF_K => self.hill_climb(solution, rng),
            MUT_RANDOM_FLIPS => self.random_flips(solution, intensity, rng),
            RR_GREEDY_REASSIGN => self.greedy_reassign(solution, intensity, rng),
            XO_UNIFORM => {
                self.uniform_crossover(solution, partner.expect("crossover partner"), rng)
            }
            other => panic!("maxsat has no LLH {other}"),
        };
        work_ticks(work)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::seeded_rng;

    fn tiny() -> MaxSat {
        MaxSat::new(3, vec![vec![1, -2], vec![2, 3], vec![-1, -3]]).unwrap()
    }

    #[test]
    fn parse_header_and_clauses() {
        let text = "c comment\np cnf 3 2\n1 -3 0\n2 3 -1 0\n";
        let inst = MaxSat::parse_dimacs(text, "t.cnf").unwrap();
        assert_eq!(inst.num_vars(), 3);
        assert_eq!(inst.clauses().len(), 2);
        assert_eq!(inst.clauses()[1], vec![2, 3, -1]);
    }

    #[test]
    fn clauses_may_span_lines() {
        let text = "p cnf 2 1\n1\n-2 0\n%\n0\n";
        let inst = MaxSat::parse_dimacs(text, "t.cnf").unwrap();
        assert_eq!(inst.clauses(), &[vec![1, -2]]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let err = MaxSat::parse_dimacs("p cnf 3 1\n1 x 0\n", "bad.cnf").unwrap_err();
        assert!(matches!(err, InstanceError::Parse { line: 2, .. }), "{err}");
        let err = MaxSat::parse_dimacs("1 2 0\n", "bad.cnf").unwrap_err();
        assert!(matches!(err, InstanceError::Parse { line: 1, .. }));
        let err = MaxSat::parse_dimacs("p cnf 3 1\n1 2\n", "bad.cnf").unwrap_err();
        assert!(matches!(err, InstanceError::Parse { line: 2, .. }));
        let err = MaxSat::parse_dimacs("p dnf 3 1\n", "bad.cnf").unwrap_err();
        assert!(matches!(err, InstanceError::Parse { line: 1, .. }));
    }

    #[test]
    fn validation_errors() {
        let err = MaxSat::parse_dimacs("p cnf 2 1\n1 3 0\n", "v.cnf").unwrap_err();
        assert!(matches!(err, InstanceError::Invalid { .. }), "{err}");
        let err = MaxSat::parse_dimacs("p cnf 2 2\n1 2 0\n", "v.cnf").unwrap_err();
        assert!(matches!(err, InstanceError::Invalid { .. }));
        let err = MaxSat::parse_dimacs("p cnf 2 2\n1 2 0\n0\n", "v.cnf").unwrap_err();
        assert!(matches!(err, InstanceError::Invalid { .. }));
    }

    #[test]
    fn dimacs_round_trip() {
        let inst = MaxSat::generate(30, &mut seeded_rng(3, 0));
        let again = MaxSat::parse_dimacs(&inst.to_dimacs(), "rt.cnf").unwrap();
        assert_eq!(again.clauses(), inst.clauses());
        assert_eq!(again.num_vars(), 30);
    }

    #[test]
    fn cost_counts_unsatisfied_clauses() {
        let inst = tiny();
        // x1=T x2=T x3=T: (1 ∨ ¬2) sat, (2 ∨ 3) sat, (¬1 ∨ ¬3) unsat
        let sol = inst.assignment(vec![true, true, true]);
        assert_eq!(inst.cost(&sol), 1.0);
        assert_eq!(inst.evaluate(&sol), 1.0);
        let sol = inst.assignment(vec![true, true, false]);
        assert_eq!(inst.cost(&sol), 0.0);
    }

    #[test]
    fn flip_delta_matches_recount() {
        let inst = MaxSat::generate(40, &mut seeded_rng(5, 0));
        let mut rng = seeded_rng(6, 0);
        let (mut sol, _) = inst.construct(&mut rng);
        for _ in 0..300 {
            let var = rng.random_range(0..40);
            let before = inst.cost(&sol);
            let delta = inst.flip_delta(&sol, var);
            inst.flip(&mut sol, var);
            assert_eq!(inst.cost(&sol), before + delta as f64);
            assert_eq!(inst.cost(&sol), inst.evaluate(&sol));
        }
    }

    #[test]
    fn mutation_flips_exactly_k_variables() {
        let inst = MaxSat::generate(100, &mut seeded_rng(7, 0));
        let mut rng = seeded_rng(8, 0);
        let (base, _) = inst.construct(&mut rng);
        for intensity in [0.0, 0.05, 0.2, 0.5, 1.0] {
            let mut sol = base.clone();
            inst.apply(MUT_RANDOM_FLIPS, &mut sol, None, intensity, &mut rng);
            let changed = sol
                .values
                .iter()
                .zip(&base.values)
                .filter(|(a, b)| a != b)
                .count();
            assert_eq!(changed, inst.mutation_flips(intensity));
            assert_eq!(inst.cost(&sol), inst.evaluate(&sol));
        }
        assert_eq!(inst.mutation_flips(0.2), 20);
        assert_eq!(inst.mutation_flips(0.051), 6);
    }

    #[test]
    fn reassign_keeps_cache_consistent() {
        let inst = MaxSat::generate(120, &mut seeded_rng(9, 0));
        let mut rng = seeded_rng(10, 0);
        let (mut sol, _) = inst.construct(&mut rng);
        for intensity in [0.05, 0.3, 1.0] {
            inst.apply(RR_GREEDY_REASSIGN, &mut sol, None, intensity, &mut rng);
            assert_eq!(inst.cost(&sol), inst.evaluate(&sol));
        }
    }

    #[test]
    fn generator_ratio() {
        let inst = MaxSat::generate(100, &mut seeded_rng(1, 0));
        assert_eq!(inst.clauses().len(), 400);
        assert!(inst.clauses().iter().all(|c| c.len() == 3));
    }
}

//! Symmetric Euclidean travelling salesman.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::{Cost, LlhCategory, LlhDescriptor, Problem, SearchRng};
use crate::error::InstanceError;

use super::{ceil_count, work_ticks};

pub const LS_TWO_OPT: usize = 0;
pub const MUT_REVERSALS: usize = 1;
pub const RR_CHEAPEST_INSERTION: usize = 2;
pub const XO_ORDER: usize = 3;

/// Candidate list length for 2-opt.
const NEIGHBOURS: usize = 10;
const IMPROVEMENT_EPS: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Tsp {
    coords: Vec<(f64, f64)>,
    dist: Vec<f64>,
    neighbours: Vec<Vec<u32>>,
    llhs: Vec<LlhDescriptor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tour {
    order: Vec<u32>,
    pos: Vec<u32>,
    cost: f64,
}

impl Tour {
    pub fn order(&self) -> &[u32] {
        &self.order
    }

    fn next(&self, city: usize) -> usize {
        let n = self.order.len();
        self.order[(self.pos[city] as usize + 1) % n] as usize
    }

    fn prev(&self, city: usize) -> usize {
        let n = self.order.len();
        self.order[(self.pos[city] as usize + n - 1) % n] as usize
    }

    fn reindex(&mut self) {
        for (i, &c) in self.order.iter().enumerate() {
            self.pos[c as usize] = i as u32;
        }
    }

    /// Reverses the cyclic stretch of positions `i..=j`, or the complementary
    /// stretch when that one is shorter (same cycle either way).
    fn reverse(&mut self, i: usize, j: usize) -> usize {
        let n = self.order.len();
        let len = (j + n - i) % n + 1;
        let (mut a, mut b, len) = if 2 * len > n {
            ((j + 1) % n, (i + n - 1) % n, n - len)
        } else {
            (i, j, len)
        };
        for _ in 0..len / 2 {
            self.order.swap(a, b);
            self.pos[self.order[a] as usize] = a as u32;
            self.pos[self.order[b] as usize] = b as u32;
            a = (a + 1) % n;
            b = (b + n - 1) % n;
        }
        len
    }
}

impl Tsp {
    pub fn new(coords: Vec<(f64, f64)>) -> Result<Self, String> {
        let n = coords.len();
        if n < 3 {
            return Err(format!("a tour needs at least 3 cities, got {n}"));
        }
        if let Some(i) = coords
            .iter()
            .position(|(x, y)| !(x.is_finite() && y.is_finite()))
        {
            return Err(format!("city {} has non-finite coordinates", i + 1));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = (coords[i].0 - coords[j].0).hypot(coords[i].1 - coords[j].1);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        let k = NEIGHBOURS.min(n - 1);
        let neighbours = (0..n)
            .map(|i| {
                let mut others: Vec<u32> = (0..n as u32).filter(|&j| j as usize != i).collect();
                others.sort_by(|&a, &b| {
                    dist[i * n + a as usize]
                        .total_cmp(&dist[i * n + b as usize])
                        .then(a.cmp(&b))
                });
                others.truncate(k);
                others
            })
            .collect();
        let llhs = vec![
            LlhDescriptor::new(LS_TWO_OPT, LlhCategory::LocalSearch, false),
            LlhDescriptor::new(MUT_REVERSALS, LlhCategory::Mutation, true),
            LlhDescriptor::new(RR_CHEAPEST_INSERTION, LlhCategory::RuinRecreate, true),
            LlhDescriptor::new(XO_ORDER, LlhCategory::Crossover, false),
        ];
        Ok(Self {
            coords,
            dist,
            neighbours,
            llhs,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[(f64, f64)] {
        &self.coords
    }

    #[inline]
    fn d(&self, a: usize, b: usize) -> f64 {
        self.dist[a * self.coords.len() + b]
    }

    /// Random segment reversals performed by the mutation at `intensity`.
    pub fn reversal_count(&self, intensity: f64) -> usize {
        ceil_count(intensity, self.len() as f64 / 10.0)
    }

    /// Cities removed by ruin-and-recreate at `intensity`. At least three
    /// cities always stay in the partial tour.
    pub fn removal_count(&self, intensity: f64) -> usize {
        ceil_count(intensity, self.len() as f64).min(self.len() - 3)
    }

    fn length(&self, order: &[u32]) -> f64 {
        let n = order.len();
        (0..n)
            .map(|i| self.d(order[i] as usize, order[(i + 1) % n] as usize))
            .sum()
    }

    pub fn tour(&self, order: Vec<u32>) -> Tour {
        let mut tour = Tour {
            pos: vec![0; order.len()],
            order,
            cost: 0.0,
        };
        tour.reindex();
        tour.cost = self.length(&tour.order);
        tour
    }

    fn nearest_neighbour(&self, start: usize) -> Vec<u32> {
        let n = self.len();
        let mut visited = vec![false; n];
        let mut order = Vec::with_capacity(n);
        let mut current = start;
        visited[current] = true;
        order.push(current as u32);
        for _ in 1..n {
            let next = (0..n)
                .filter(|&j| !visited[j])
                .min_by(|&a, &b| self.d(current, a).total_cmp(&self.d(current, b)))
                .expect("unvisited city remains");
            visited[next] = true;
            order.push(next as u32);
            current = next;
        }
        order
    }

    /// One first-improvement sweep over all cities using the candidate
    /// lists. Keeps the input when the recomputed length is not lower.
    fn two_opt_pass(&self, tour: &mut Tour, rng: &mut SearchRng) -> usize {
        let n = self.len();
        let original = tour.clone();
        let start = rng.random_range(0..n);
        let mut work = 0;
        let mut improved = false;
        for step in 0..n {
            let a = (start + step) % n;
            'candidates: for forward in [true, false] {
                let a_adj = if forward { tour.next(a) } else { tour.prev(a) };
                let d_a = self.d(a, a_adj);
                for &c in &self.neighbours[a] {
                    let c = c as usize;
                    work += 1;
                    let d_ac = self.d(a, c);
                    if d_ac >= d_a {
                        break;
                    }
                    let c_adj = if forward { tour.next(c) } else { tour.prev(c) };
                    if c_adj == a || c == a_adj {
                        continue;
                    }
                    let delta = d_ac + self.d(a_adj, c_adj) - d_a - self.d(c, c_adj);
                    if delta < -IMPROVEMENT_EPS {
                        let (i, j) = if forward {
                            (tour.pos[a_adj] as usize, tour.pos[c] as usize)
                        } else {
                            (tour.pos[c] as usize, tour.pos[a_adj] as usize)
                        };
                        work += tour.reverse(i, j);
                        improved = true;
                        break 'candidates;
                    }
                }
            }
        }
        if improved {
            tour.cost = self.length(&tour.order);
            if tour.cost >= original.cost {
                *tour = original;
            }
        }
        work + n
    }

    fn random_reversals(&self, tour: &mut Tour, intensity: f64, rng: &mut SearchRng) -> usize {
        let n = self.len();
        let mut work = n;
        for _ in 0..self.reversal_count(intensity) {
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i != j {
                work += tour.reverse(i.min(j), i.max(j));
            }
        }
        tour.cost = self.length(&tour.order);
        work
    }

    fn ruin_recreate(&self, tour: &mut Tour, intensity: f64, rng: &mut SearchRng) -> usize {
        let n = self.len();
        let k = self.removal_count(intensity);
        let mut removed = sample(rng, n, k).into_vec();
        let mut gone = vec![false; n];
        for &c in &removed {
            gone[c] = true;
        }
        let mut order: Vec<u32> = tour
            .order
            .iter()
            .copied()
            .filter(|&c| !gone[c as usize])
            .collect();
        removed.shuffle(rng);
        let mut work = n;
        for city in removed {
            let m = order.len();
            let mut best = (f64::INFINITY, 0);
            for i in 0..m {
                let (p, q) = (order[i] as usize, order[(i + 1) % m] as usize);
                let added = self.d(p, city) + self.d(city, q) - self.d(p, q);
                if added < best.0 {
                    best = (added, i + 1);
                }
            }
            work += m;
            order.insert(best.1, city as u32);
        }
        tour.order = order;
        tour.reindex();
        tour.cost = self.length(&tour.order);
        work
    }

    fn order_crossover(&self, tour: &mut Tour, partner: &Tour, rng: &mut SearchRng) -> usize {
        let n = self.len();
        let i = rng.random_range(0..n);
        let j = rng.random_range(0..n);
        let (lo, hi) = (i.min(j), i.max(j));
        let mut child = vec![u32::MAX; n];
        let mut taken = vec![false; n];
        for p in lo..=hi {
            child[p] = tour.order[p];
            taken[tour.order[p] as usize] = true;
        }
        let mut fill = (hi + 1) % n;
        for step in 0..n {
            let city = partner.order[(hi + 1 + step) % n];
            if !taken[city as usize] {
                child[fill] = city;
                fill = (fill + 1) % n;
            }
        }
        tour.order = child;
        tour.reindex();
        tour.cost = self.length(&tour.order);
        3 * n
    }

    /// TSPLIB text with a `NODE_COORD_SECTION` in `EUC_2D`.
    pub fn to_tsplib(&self, name: &str) -> String {
        let mut out = format!(
            "NAME : {name}\nTYPE : TSP\nDIMENSION : {}\nEDGE_WEIGHT_TYPE : EUC_2D\nNODE_COORD_SECTION\n",
            self.len()
        );
        for (i, (x, y)) in self.coords.iter().enumerate() {
            out.push_str(&format!("{} {x} {y}\n", i + 1));
        }
        out.push_str("EOF\n");
        out
    }

    pub fn parse_tsplib(text: &str, path: &str) -> Result<Self, InstanceError> {
        let parse_err = |line: usize, message: String| InstanceError::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let invalid = |message: String| InstanceError::Invalid {
            path: path.to_string(),
            message,
        };
        let mut dimension = None;
        let mut in_coords = false;
        let mut coords = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if line == "EOF" {
                break;
            }
            if in_coords {
                let fields: Vec<&str> = line.split_whitespace().collect();
                if fields.len() != 3 {
                    return Err(parse_err(
                        line_no,
                        format!("expected `id x y`, got `{line}`"),
                    ));
                }
                let mut nums = [0.0; 2];
                for (slot, field) in nums.iter_mut().zip(&fields[1..]) {
                    *slot = field
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad coordinate `{field}`")))?;
                }
                coords.push((nums[0], nums[1]));
                continue;
            }
            if line == "NODE_COORD_SECTION" {
                in_coords = true;
                continue;
            }
            let (key, value) = line.split_once(':').ok_or_else(|| {
                parse_err(line_no, format!("expected `KEY : VALUE`, got `{line}`"))
            })?;
            let value = value.trim();
            match key.trim() {
                "DIMENSION" => {
                    let d: usize = value
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad dimension `{value}`")))?;
                    dimension = Some(d);
                }
                "EDGE_WEIGHT_TYPE" if value != "EUC_2D" => {
                    return Err(parse_err(
                        line_no,
                        format!("unsupported edge weight type `{value}`"),
                    ));
                }
                "TYPE" if value != "TSP" => {
                    return Err(parse_err(
                        line_no,
                        format!("unsupported problem type `{value}`"),
                    ));
                }
                _ => {}
            }
        }
        if !in_coords {
            return Err(invalid("missing NODE_COORD_SECTION".into()));
        }
        if let Some(d) = dimension {
            if d != coords.len() {
                return Err(invalid(format!(
                    "DIMENSION is {d} but {} cities are listed",
                    coords.len()
                )));
            }
        }
        Self::new(coords).map_err(invalid)
    }

    /// Cities uniform in the unit square.
    pub fn generate(cities: usize, rng: &mut SearchRng) -> Self {
        let coords = (0..cities)
            .map(|_| (rng.random::<f64>(), rng.random::<f64>()))
            .collect();
        Self::new(coords).expect("generated instance is valid")
    }
}

impl Problem for Tsp {
    type Solution = Tour;

    fn name(&self) -> &str {
        "tsp"
    }

    fn llhs(&self) -> &[LlhDescriptor] {
        &self.llhs
    }

    fn construct(&self, rng: &mut SearchRng) -> (Tour, u64) {
        let start = rng.random_range(0..self.len());
        let tour = self.tour(self.nearest_neighbour(start));
        (tour, work_ticks(self.len() * self.len() / 2))
    }

    fn cost(&self, solution: &Tour) -> Cost {
        solution.cost
    }

    fn evaluate(&self, solution: &Tour) -> Cost {
        self.length(&solution.order)
    }

    fn is_feasible(&self, solution: &Tour) -> bool {
        let n = self.len();
        let mut seen = vec![false; n];
        solution.order.len() == n
            && solution
                .order
                .iter()
                .all(|&c| (c as usize) < n && !std::mem::replace(&mut seen[c as usize], true))
    }

    fn apply(
        &self,
        llh: usize,
        solution: &mut Tour,
        partner: Option<&Tour>,
        intensity: f64,
        rng: &mut SearchRng,
    ) -> u64 {
        let work = match llh {
            LS_TWO_OPT => self.two_opt_pass(solution, rng),
            MUT_REVERSALS => self.random_reversals(solution, intensity, rng),
            RR_CHEAPEST_INSERTION => self.ruin_recreate(solution, intensity, rng),
            XO_ORDER => self.order_crossover(solution, partner.expect("crossover partner"), rng),
            other => panic!("tsp has no LLH {other}"),
        };
        work_ticks(work)
    }
}

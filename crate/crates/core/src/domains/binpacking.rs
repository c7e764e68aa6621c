//! One-dimensional bin packing.
//!
//! Cost is the number of bins plus `1 - Σ(load/capacity)² / bins`, a term in
//! `[0, 1)` that rewards uneven fill so that emptying a bin becomes reachable
//! through improving moves. Fewer bins always dominates.

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::engine::{Cost, LlhCategory, LlhDescriptor, Problem, SearchRng};
use crate::error::InstanceError;

use super::{ceil_count, work_ticks};

pub const LS_MOVE_ITEM: usize = 0;
pub const MUT_SWAP_ITEMS: usize = 1;
pub const RR_EMPTY_BINS: usize = 2;
pub const XO_BIN_PRESERVING: usize = 3;

const FIT_EPS: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct BinPacking {
    capacity: f64,
    sizes: Vec<f64>,
    /// Item indices by decreasing size (ties by index).
    decreasing: Vec<usize>,
    llhs: Vec<LlhDescriptor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packing {
    bins: Vec<Vec<u32>>,
    loads: Vec<f64>,
    cost: f64,
}

impl Packing {
    pub fn bins(&self) -> &[Vec<u32>] {
        &self.bins
    }

    pub fn bin_count(&self) -> usize {
        self.bins.len()
    }

    fn remove_bin(&mut self, bin: usize) {
        self.bins.swap_remove(bin);
        self.loads.swap_remove(bin);
    }
}

impl BinPacking {
    pub fn new(capacity: f64, sizes: Vec<f64>) -> Result<Self, String> {
        if !(capacity.is_finite() && capacity > 0.0) {
            return Err(format!("capacity must be positive, got {capacity}"));
        }
        if sizes.is_empty() {
            return Err("instance has no items".into());
        }
        for (i, &s) in sizes.iter().enumerate() {
            if !(s.is_finite() && s > 0.0 && s <= capacity) {
                return Err(format!(
                    "item {} has size {s} outside (0, {capacity}]",
                    i + 1
                ));
            }
        }
        let mut decreasing: Vec<usize> = (0..sizes.len()).collect();
        decreasing.sort_by(|&a, &b| sizes[b].total_cmp(&sizes[a]).then(a.cmp(&b)));
        let llhs = vec![
            LlhDescriptor::new(LS_MOVE_ITEM, LlhCategory::LocalSearch, false),
            LlhDescriptor::new(MUT_SWAP_ITEMS, LlhCategory::Mutation, true),
            LlhDescriptor::new(RR_EMPTY_BINS, LlhCategory::RuinRecreate, true),
            LlhDescriptor::new(XO_BIN_PRESERVING, LlhCategory::Crossover, false),
        ];
        Ok(Self {
            capacity,
            sizes,
            decreasing,
            llhs,
        })
    }

    pub fn capacity(&self) -> f64 {
        self.capacity
    }

    pub fn sizes(&self) -> &[f64] {
        &self.sizes
    }

    /// Item pairs swapped by the mutation heuristic at `intensity`.
    pub fn swap_count(&self, intensity: f64) -> usize {
        ceil_count(intensity, self.sizes.len() as f64 / 4.0)
    }

    /// Bins emptied by the ruin-and-recreate heuristic at `intensity`.
    pub fn bins_to_empty(&self, intensity: f64, bins: usize) -> usize {
        ceil_count(intensity, bins as f64).min(bins)
    }

    fn cost_of(&self, loads: &[f64]) -> f64 {
        let bins = loads.len() as f64;
        let squares: f64 = loads.iter().map(|l| (l / self.capacity).powi(2)).sum();
        bins + 1.0 - squares / bins
    }

    fn refresh(&self, packing: &mut Packing) {
        packing.cost = self.cost_of(&packing.loads);
    }

    /// Packing from explicit bins; loads are recomputed.
    pub fn packing(&self, bins: Vec<Vec<u32>>) -> Packing {
        let loads = bins
            .iter()
            .map(|b| b.iter().map(|&i| self.sizes[i as usize]).sum())
            .collect();
        let mut p = Packing {
            bins,
            loads,
            cost: 0.0,
        };
        self.refresh(&mut p);
        p
    }

    fn fits(&self, load: f64, size: f64) -> bool {
        load + size <= self.capacity + FIT_EPS
    }

    /// Best fit: the feasible bin with the least residual space, lowest index
    /// on ties. Opens a new bin when nothing fits.
    fn insert_best_fit(&self, packing: &mut Packing, item: usize) -> usize {
        let size = self.sizes[item];
        let mut best: Option<(f64, usize)> = None;
        for (b, &load) in packing.loads.iter().enumerate() {
            if self.fits(load, size) {
                let residual = self.capacity - load - size;
                if best.is_none_or(|(r, _)| residual < r) {
                    best = Some((residual, b));
                }
            }
        }
        match best {
            Some((_, b)) => {
                packing.bins[b].push(item as u32);
                packing.loads[b] += size;
            }
            None => {
                packing.bins.push(vec![item as u32]);
                packing.loads.push(size);
            }
        }
        packing.loads.len()
    }

    /// Inserts `items` best-fit in decreasing size order.
    fn best_fit_decreasing(&self, packing: &mut Packing, items: &mut [usize]) -> usize {
        items.sort_by(|&a, &b| self.sizes[b].total_cmp(&self.sizes[a]).then(a.cmp(&b)));
        items
            .iter()
            .map(|&i| self.insert_best_fit(packing, i))
            .sum()
    }

    /// Best-fit-decreasing packing of every item from scratch.
    pub fn best_fit_decreasing_from_scratch(&self) -> Packing {
        let mut packing = Packing {
            bins: Vec::new(),
            loads: Vec::new(),
            cost: 0.0,
        };
        for &i in &self.decreasing {
            self.insert_best_fit(&mut packing, i);
        }
        self.refresh(&mut packing);
        packing
    }

    fn first_fit(&self, order: &[usize]) -> (Packing, usize) {
        let mut packing = Packing {
            bins: Vec::new(),
            loads: Vec::new(),
            cost: 0.0,
        };
        let mut work = 0;
        for &item in order {
            let size = self.sizes[item];
            match packing.loads.iter().position(|&l| self.fits(l, size)) {
                Some(b) => {
                    work += b + 1;
                    packing.bins[b].push(item as u32);
                    packing.loads[b] += size;
                }
                None => {
                    work += packing.loads.len();
                    packing.bins.push(vec![item as u32]);
                    packing.loads.push(size);
                }
            }
        }
        self.refresh(&mut packing);
        (packing, work)
    }

    /// Moves a single item to the first bin (scanning from a random source
    /// bin) where the move strictly lowers the cost.
    fn move_item(&self, packing: &mut Packing, rng: &mut SearchRng) -> usize {
        let n = packing.bins.len();
        if n < 2 {
            return 1;
        }
        let c2 = self.capacity * self.capacity;
        let squares: f64 = packing.loads.iter().map(|l| l * l).sum::<f64>() / c2;
        let offset = rng.random_range(0..n);
        let mut work = 0;
        for step in 0..n {
            let from = (offset + step) % n;
            let load_from = packing.loads[from];
            for slot in 0..packing.bins[from].len() {
                let item = packing.bins[from][slot] as usize;
                let size = self.sizes[item];
                let emptied = packing.bins[from].len() == 1;
                for to in 0..n {
                    work += 1;
                    if to == from || !self.fits(packing.loads[to], size) {
                        continue;
                    }
                    let load_to = packing.loads[to];
                    let new_bins = if emptied { n - 1 } else { n } as f64;
                    let new_squares = squares - (load_from * load_from + load_to * load_to) / c2
                        + ((load_from - size).powi(2) + (load_to + size).powi(2)) / c2;
                    let predicted = new_bins + 1.0 - new_squares / new_bins;
                    if predicted < packing.cost {
                        let previous = packing.clone();
                        packing.bins[from].swap_remove(slot);
                        packing.loads[from] -= size;
                        packing.bins[to].push(item as u32);
                        packing.loads[to] += size;
                        if packing.bins[from].is_empty() {
                            packing.remove_bin(from);
                        }
                        self.refresh(packing);
                        if packing.cost >= previous.cost {
                            *packing = previous;
                            continue;
                        }
                        return work;
                    }
                }
            }
        }
        work
    }

    fn locate(&self, packing: &Packing) -> Vec<(u32, u32)> {
        let mut location = vec![(0, 0); self.sizes.len()];
        for (b, bin) in packing.bins.iter().enumerate() {
            for (s, &item) in bin.iter().enumerate() {
                location[item as usize] = (b as u32, s as u32);
            }
        }
        location
    }

    fn swap_items(&self, packing: &mut Packing, intensity: f64, rng: &mut SearchRng) -> usize {
        let swaps = self.swap_count(intensity);
        let n = self.sizes.len();
        if n < 2 || swaps == 0 {
            self.refresh(packing);
            return 1;
        }
        let mut location = self.locate(packing);
        for _ in 0..swaps {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            let ((bin_a, slot_a), (bin_b, slot_b)) = (location[a], location[b]);
            if bin_a == bin_b {
                continue;
            }
            let (sa, sb) = (self.sizes[a], self.sizes[b]);
            let (la, lb) = (packing.loads[bin_a as usize], packing.loads[bin_b as usize]);
            if la - sa + sb > self.capacity + FIT_EPS || lb - sb + sa > self.capacity + FIT_EPS {
                continue;
            }
            packing.bins[bin_a as usize][slot_a as usize] = b as u32;
            packing.bins[bin_b as usize][slot_b as usize] = a as u32;
            packing.loads[bin_a as usize] += sb - sa;
            packing.loads[bin_b as usize] += sa - sb;
            location[a] = (bin_b, slot_b);
            location[b] = (bin_a, slot_a);
        }
        self.refresh(packing);
        n + swaps
    }

    fn empty_bins(&self, packing: &mut Packing, intensity: f64, rng: &mut SearchRng) -> usize {
        let count = self.bins_to_empty(intensity, packing.bins.len());
        let mut chosen = sample(rng, packing.bins.len(), count).into_vec();
        chosen.sort_unstable_by(|a, b| b.cmp(a));
        let mut freed = Vec::new();
        for b in chosen {
            freed.extend(packing.bins[b].iter().map(|&i| i as usize));
            packing.remove_bin(b);
        }
        let work = self.best_fit_decreasing(packing, &mut freed);
        self.refresh(packing);
        work + freed.len()
    }

    fn bin_preserving_crossover(
        &self,
        packing: &mut Packing,
        partner: &Packing,
        rng: &mut SearchRng,
    ) -> usize {
        let fill = |load: f64| load / self.capacity;
        let mut candidates: Vec<(f64, u8, &Vec<u32>)> = packing
            .bins
            .iter()
            .zip(&packing.loads)
            .map(|(b, &l)| (fill(l), 0u8, b))
            .chain(
                partner
                    .bins
                    .iter()
                    .zip(&partner.loads)
                    .map(|(b, &l)| (fill(l), 1u8, b)),
            )
            .collect();
        // fullest bins first; random order among equally full ones
        candidates.shuffle(rng);
        candidates.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut placed = vec![false; self.sizes.len()];
        let mut child = Packing {
            bins: Vec::new(),
            loads: Vec::new(),
            cost: 0.0,
        };
        for (_, _, bin) in &candidates {
            if bin.iter().all(|&i| !placed[i as usize]) {
                for &i in bin.iter() {
                    placed[i as usize] = true;
                }
                child
                    .loads
                    .push(bin.iter().map(|&i| self.sizes[i as usize]).sum());
                child.bins.push((*bin).clone());
            }
        }
        let mut rest: Vec<usize> = (0..self.sizes.len()).filter(|&i| !placed[i]).collect();
        let work = candidates.len() + self.best_fit_decreasing(&mut child, &mut rest);
        self.refresh(&mut child);
        *packing = child;
        work + self.sizes.len()
    }

    /// Capacity line followed by one item size per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("capacity {}\n", self.capacity);
        for s in &self.sizes {
            out.push_str(&format!("{s}\n"));
        }
        out
    }

    pub fn parse_text(text: &str, path: &str) -> Result<Self, InstanceError> {
        let parse_err = |line: usize, message: String| InstanceError::Parse {
            path: path.to_string(),
            line,
            message,
        };
        let mut capacity = None;
        let mut sizes = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            match capacity {
                None => {
                    let value = line
                        .strip_prefix("capacity")
                        .map(|rest| rest.trim_start_matches([' ', '\t', ':', '=']))
                        .unwrap_or(line)
                        .trim();
                    let cap: f64 = value
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad capacity `{line}`")))?;
                    capacity = Some(cap);
                }
                Some(_) => {
                    let size: f64 = line
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad item size `{line}`")))?;
                    sizes.push(size);
                }
            }
        }
        let capacity = capacity.ok_or_else(|| parse_err(1, "missing capacity line".into()))?;
        Self::new(capacity, sizes).map_err(|message| InstanceError::Invalid {
            path: path.to_string(),
            message,
        })
    }

    /// Integer item sizes drawn from the open interval (0.1, 0.7)·capacity,
    /// capacity 1000.
    pub fn generate(items: usize, rng: &mut SearchRng) -> Self {
        let capacity = 1000.0;
        let sizes = (0..items)
            .map(|_| rng.random_range(101..700) as f64)
            .collect();
        Self::new(capacity, sizes).expect("generated instance is valid")
    }
}

impl Problem for BinPacking {
    type Solution = Packing;

    fn name(&self) -> &str {
        "binpacking"
    }

    fn llhs(&self) -> &[LlhDescriptor] {
        &self.llhs
    }

    fn construct(&self, rng: &mut SearchRng) -> (Packing, u64) {
        let mut order: Vec<usize> = (0..self.sizes.len()).collect();
        order.shuffle(rng);
        let (packing, work) = self.first_fit(&order);
        (packing, work_ticks(work))
    }

    fn cost(&self, solution: &Packing) -> Cost {
        solution.cost
    }

    fn evaluate(&self, solution: &Packing) -> Cost {
        let loads: Vec<f64> = solution
            .bins
            .iter()
            .map(|b| b.iter().map(|&i| self.sizes[i as usize]).sum())
            .collect();
        self.cost_of(&loads)
    }

    fn is_feasible(&self, solution: &Packing) -> bool {
        let mut seen = vec![false; self.sizes.len()];
        for bin in &solution.bins {
            if bin.is_empty() {
                return false;
            }
            let load: f64 = bin.iter().map(|&i| self.sizes[i as usize]).sum();
            if load > self.capacity + FIT_EPS {
                return false;
            }
            for &i in bin {
                if std::mem::replace(&mut seen[i as usize], true) {
                    return false;
                }
            }
        }
        seen.iter().all(|&s| s)
    }

    fn apply(
        &self,
        llh: usize,
        solution: &mut Packing,
        partner: Option<&Packing>,
        intensity: f64,
        rng: &mut SearchRng,
    ) -> u64 {
        let work = match llh {
            LS_MOVE_ITEM => self.move_item(solution, rng),
            MUT_SWAP_ITEMS => self.swap_items(solution, intensity, rng),
            RR_EMPTY_BINS => self.empty_bins(solution, intensity, rng),
            XO_BIN_PRESERVING => {
                self.bin_preserving_crossover(solution, partner.expect("crossover partner"), rng)
            }
            other => panic!("binpacking has no LLH {other}"),
        };
        work_ticks(work)
    }
}

//! SL inequalities: exact separation and the cut pool.

use std::collections::HashMap;

use fixedbitset::FixedBitSet;
use serde::Serialize;

use crate::master::{Column, RmpSolution, SlCut};

/// Minimum violation for a cut to be added or reactivated.
pub const MIN_VIOLATION: f64 = 0.01;
/// Active cuts allowed per order.
pub const ACTIVE_CAP: usize = 500;
/// Deepest tree level where new cuts are separated (root = 0).
pub const SEPARATION_DEPTH: usize = 3;

pub fn should_separate(depth: usize) -> bool {
    depth <= SEPARATION_DEPTH
}

/// Location exploration order of the separation search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SeparationOrder {
    /// Largest ξ* first.
    Decreasing,
    Increasing,
}

struct Search {
    xi: Vec<f64>,
    /// Locations in exploration order.
    order: Vec<usize>,
    /// Suffix sums of positive ξ* along `order`.
    tail: Vec<f64>,
    rho: Vec<f64>,
    /// Routes stopping at each location.
    hits: Vec<FixedBitSet>,
    best: (f64, Vec<usize>),
    chosen: Vec<usize>,
}

fn better(value: f64, set: &[usize], best: &(f64, Vec<usize>)) -> bool {
    if value > best.0 + 1e-12 {
        return true;
    }
    if value < best.0 - 1e-12 {
        return false;
    }
    let mut a = set.to_vec();
    a.sort_unstable();
    (a.len(), &a) < (best.1.len(), &best.1)
}

impl Search {
    fn record(&mut self, value: f64, extra: &[usize]) {
        let mut set: Vec<usize> = self.chosen.iter().chain(extra).copied().collect();
        if set.len() < 2 {
            return;
        }
        if better(value, &set, &self.best) {
            set.sort_unstable();
            self.best = (value, set);
        }
    }

    fn loss(&self, l: usize, open: &FixedBitSet) -> f64 {
        self.hits[l].intersection(open).map(|r| self.rho[r]).sum()
    }

    fn go(&mut self, k: usize, open: FixedBitSet, value: f64) {
        // Pruning 1: even every remaining ξ* cannot beat the incumbent.
        if value + self.tail[k] < self.best.0 - 1e-12 {
            return;
        }
        if k == self.order.len() {
            self.record(value, &[]);
            return;
        }
        if open.is_clear() {
            // Pruning 3: no route left to pay, take every positive ξ*.
            let rest: Vec<usize> = self.order[k..].iter().copied().filter(|&l| self.xi[l] > 0.0).collect();
            let gain = self.tail[k];
            if self.chosen.len() + rest.len() >= 2 {
                return self.record(value + gain, &rest);
            }
            // Pad with the smallest free locations to reach two.
            let mut pad: Vec<usize> = self.order[k..].iter().copied().filter(|&l| self.xi[l] <= 0.0).collect();
            pad.sort_unstable();
            let need = 2 - self.chosen.len() - rest.len();
            if pad.len() >= need {
                let extra: Vec<usize> = rest.iter().chain(&pad[..need]).copied().collect();
                self.record(value + gain, &extra);
            }
            return;
        }
        if self.tail[k] <= 0.0 {
            // Pruning 2: only zero ξ* left; more locations never help once
            // the set is large enough.
            if self.chosen.len() >= 2 {
                return self.record(value, &[]);
            }
            self.complete_with_zeros(k, open, value);
            return;
        }
        let l = self.order[k];
        let mut with = open.clone();
        with.difference_with(&self.hits[l]);
        let gain = self.xi[l] - self.loss(l, &open);
        self.chosen.push(l);
        self.go(k + 1, with, value + gain);
        self.chosen.pop();
        self.go(k + 1, open, value);
    }

    /// Adds the cheapest zero-ξ* locations needed to reach two.
    fn complete_with_zeros(&mut self, k: usize, open: FixedBitSet, value: f64) {
        let rest: Vec<usize> = self.order[k..].to_vec();
        match self.chosen.len() {
            1 => {
                for &l in &rest {
                    let v = value - self.loss(l, &open);
                    self.record(v, &[l]);
                }
            }
            _ => {
                for (i, &a) in rest.iter().enumerate() {
                    let mut after = open.clone();
                    after.difference_with(&self.hits[a]);
                    let va = value - self.loss(a, &open);
                    for &b in &rest[i + 1..] {
                        let v = va - self.loss(b, &after);
                        self.record(v, &[a, b]);
                    }
                }
            }
        }
    }
}

/// Most violated SL inequality for one (order, SKU): maximizes
/// `Σ_{l∈L̄} ξ*_l − Σ_r ρ*_r [r stops in L̄]` over `|L̄| ≥ 2`.
/// `routes` are the order's columns with positive ρ*, as `(ρ*, locations)`.
/// Ties go to the smaller, then lexicographically smaller set.
pub fn separate_value(xi: &[f64], routes: &[(f64, Vec<usize>)], order: SeparationOrder) -> (f64, Vec<usize>) {
    let n = xi.len();
    let mut hits = vec![FixedBitSet::with_capacity(routes.len()); n];
    for (r, (_, locs)) in routes.iter().enumerate() {
        for &l in locs {
            hits[l].insert(r);
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    match order {
        SeparationOrder::Decreasing => idx.sort_by(|&a, &b| xi[b].total_cmp(&xi[a]).then(a.cmp(&b))),
        SeparationOrder::Increasing => idx.sort_by(|&a, &b| xi[a].total_cmp(&xi[b]).then(a.cmp(&b))),
    }
    let mut tail = vec![0.0; n + 1];
    for k in (0..n).rev() {
        tail[k] = tail[k + 1] + xi[idx[k]].max(0.0);
    }
    let mut open = FixedBitSet::with_capacity(routes.len());
    for (r, (rho, _)) in routes.iter().enumerate() {
        if *rho > 0.0 {
            open.insert(r);
        }
    }
    let mut s = Search {
        xi: xi.to_vec(),
        order: idx,
        tail,
        rho: routes.iter().map(|r| r.0).collect(),
        hits,
        best: (f64::NEG_INFINITY, Vec::new()),
        chosen: Vec::new(),
    };
    if n >= 2 {
        s.go(0, open, 0.0);
    }
    s.best
}

/// Positive-ρ* columns of an order as `(ρ*, visited locations)`.
pub fn support(order: usize, sol: &RmpSolution, columns: &[Column]) -> Vec<(f64, Vec<usize>)> {
    columns
        .iter()
        .zip(&sol.rho)
        .filter(|(c, &r)| c.order == order && r > 0.0)
        .map(|(c, &r)| (r, c.stops.locations().collect()))
        .collect()
}

/// Most violated SL cut of (order, sku), if violated by more than [`MIN_VIOLATION`].
pub fn separate(
    order: usize,
    sku: usize,
    sol: &RmpSolution,
    columns: &[Column],
    dir: SeparationOrder,
) -> Option<(SlCut, f64)> {
    let routes = support(order, sol, columns);
    let (value, locations) = separate_value(&sol.xi[sku], &routes, dir);
    (value > MIN_VIOLATION).then(|| (SlCut { order, sku, locations }, value))
}

/// Left-hand side violation of a cut at a solution.
pub fn violation(cut: &SlCut, sol: &RmpSolution, columns: &[Column]) -> f64 {
    let mass: f64 = cut.locations.iter().map(|&l| sol.xi[cut.sku][l]).sum();
    let paid: f64 = columns
        .iter()
        .zip(&sol.rho)
        .filter(|(c, _)| c.order == cut.order && c.visits_any(&cut.locations))
        .map(|(_, &r)| r)
        .sum();
    mass - paid
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct CutStats {
    pub separated: usize,
    pub activated: usize,
    pub deactivated: usize,
}

/// Every separated cut, with the active subset.
#[derive(Debug, Clone, Default)]
pub struct CutPool {
    cuts: Vec<SlCut>,
    key: HashMap<SlCut, usize>,
    active: Vec<bool>,
    active_per_order: HashMap<usize, usize>,
    pub cap: usize,
    pub stats: CutStats,
}

impl CutPool {
    pub fn new() -> Self {
        CutPool { cap: ACTIVE_CAP, ..Default::default() }
    }

    pub fn len(&self) -> usize {
        self.cuts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cuts.is_empty()
    }

    pub fn get(&self, id: usize) -> &SlCut {
        &self.cuts[id]
    }

    pub fn is_active(&self, id: usize) -> bool {
        self.active[id]
    }

    pub fn active_count(&self, order: usize) -> usize {
        self.active_per_order.get(&order).copied().unwrap_or(0)
    }

    /// Adds a cut (inactive); returns its id and whether it was new.
    pub fn insert(&mut self, cut: SlCut) -> (usize, bool) {
        if let Some(&id) = self.key.get(&cut) {
            return (id, false);
        }
        let id = self.cuts.len();
        self.key.insert(cut.clone(), id);
        self.cuts.push(cut);
        self.active.push(false);
        self.stats.separated += 1;
        (id, true)
    }

    /// Marks a cut active unless its order is at the cap.
    pub fn activate(&mut self, id: usize) -> bool {
        if self.active[id] {
            return true;
        }
        let o = self.cuts[id].order;
        if self.active_count(o) >= self.cap {
            return false;
        }
        self.active[id] = true;
        *self.active_per_order.entry(o).or_default() += 1;
        self.stats.activated += 1;
        true
    }

    pub fn deactivate(&mut self, id: usize) {
        if self.active[id] {
            self.active[id] = false;
            *self.active_per_order.get_mut(&self.cuts[id].order).unwrap() -= 1;
            self.stats.deactivated += 1;
        }
    }

    /// Pooled (inactive) cuts violated by more than [`MIN_VIOLATION`], most
    /// violated first, trimmed so no order exceeds the active cap.
    pub fn pool_check(&self, sol: &RmpSolution, columns: &[Column]) -> Vec<usize> {
        let mut hits: Vec<(f64, usize)> = (0..self.cuts.len())
            .filter(|&id| !self.active[id])
            .map(|id| (violation(&self.cuts[id], sol, columns), id))
            .filter(|&(v, _)| v > MIN_VIOLATION)
            .collect();
        hits.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let mut room: HashMap<usize, usize> = HashMap::new();
        hits.into_iter()
            .filter(|&(_, id)| {
                let o = self.cuts[id].order;
                let r = room.entry(o).or_insert_with(|| self.cap.saturating_sub(self.active_count(o)));
                if *r == 0 {
                    return false;
                }
                *r -= 1;
                true
            })
            .map(|(_, id)| id)
            .collect()
    }

    /// Active cuts whose row has slack above 1e-6 at `sol`; they are
    /// marked inactive and stay pooled.
    pub fn deactivate_nonbinding(&mut self, sol: &RmpSolution) -> Vec<usize> {
        let out: Vec<usize> = sol.cut_slack.iter().filter(|&&(_, slack)| slack > 1e-6).map(|&(id, _)| id).collect();
        for &id in &out {
            self.deactivate(id);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_sl_subsets;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_xi_is_never_violated() {
        let routes = vec![(1.0, vec![0, 1])];
        let (v, _) = separate_value(&[0.0; 4], &routes, SeparationOrder::Decreasing);
        assert!(v <= 0.0);
    }

    #[test]
    fn two_half_routes() {
        let xi = [0.5, 0.5, 0.0];
        let routes = vec![(0.5, vec![0]), (0.5, vec![1])];
        let (v, _) = separate_value(&xi, &routes, SeparationOrder::Decreasing);
        assert!(v.abs() < 1e-12 && v <= MIN_VIOLATION);
        let routes = vec![(0.5, vec![0]), (0.4, vec![1])];
        let (v, set) = separate_value(&xi, &routes, SeparationOrder::Decreasing);
        assert!((v - 0.1).abs() < 1e-12);
        assert_eq!(set, vec![0, 1]);
    }

    #[test]
    fn matches_subset_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let n = rng.gen_range(2..=9);
            let mut xi: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 }).collect();
            let total: f64 = xi.iter().sum();
            if total > 1.0 {
                xi.iter_mut().for_each(|x| *x /= total);
            }
            let routes: Vec<(f64, Vec<usize>)> = (0..rng.gen_range(0..6))
                .map(|_| (rng.gen_range(0.0..0.6), (0..n).filter(|_| rng.gen_bool(0.3)).collect()))
                .collect();
            let (want, want_set) = enumerate_sl_subsets(&xi, &routes).unwrap();
            for dir in [SeparationOrder::Decreasing, SeparationOrder::Increasing] {
                let (got, set) = separate_value(&xi, &routes, dir);
                assert!((got - want).abs() < 1e-9, "{got} vs {want}");
                assert_eq!(set, want_set);
            }
        }
    }

    #[test]
    fn depth_rule() {
        assert!(should_separate(0));
        assert!(should_separate(3));
        assert!(!should_separate(4));
    }

    #[test]
    fn pool_cap_and_activation() {
        let mut pool = CutPool::new();
        pool.cap = 2;
        let ids: Vec<usize> =
            (0..3).map(|i| pool.insert(SlCut { order: 0, sku: 0, locations: vec![i, i + 1] }).0).collect();
        assert!(!pool.insert(SlCut { order: 0, sku: 0, locations: vec![0, 1] }).1);
        assert!(pool.activate(ids[0]));
        assert!(pool.activate(ids[1]));
        assert!(!pool.activate(ids[2]));
        assert_eq!(pool.active_count(0), 2);
        pool.deactivate(ids[0]);
        assert!(pool.activate(ids[2]));
    }
}

//! Per-order pricing: a forward labeling algorithm over the storage-node graph
//! restricted by the routing policy, with SL-cut resources.
//!
//! Labels are expanded level by level in the number of stops `q`. Every route
//! of an order has exactly `|S(o)|` stops, so only labels at the same level
//! are compared for dominance.

mod graph;

use std::collections::{BTreeMap, HashMap};

use fixedbitset::FixedBitSet;
use serde::Serialize;

pub use graph::{build_policy_graph, Mode, Phase, PolicyGraph, Step};

use crate::model::Warehouse;
use crate::routing::{route_cost, Policy, RoutingError, StopSet};

/// An active SL cut seen from the pricer: visiting any of `locations` earns
/// `lambda` (the dual summed over the cut's SKUs) once.
#[derive(Debug, Clone, PartialEq)]
pub struct CutResource {
    pub locations: Vec<usize>,
    pub lambda: f64,
}

/// Duals and restrictions for one order.
#[derive(Debug, Clone)]
pub struct PricingProblem {
    pub order: usize,
    /// |S(o)|: every route makes exactly this many stops.
    pub n_stops: usize,
    /// Convexity dual.
    pub mu: f64,
    /// Linking duals, per location; earned per stop.
    pub pi: Vec<f64>,
    /// SL-1 duals summed over the order's SKUs, per location; earned once.
    pub sigma: Vec<f64>,
    pub cuts: Vec<CutResource>,
    /// Stops each location must receive (fixed or forced SKUs of the order).
    pub mandatory: Vec<u32>,
    /// Capacity left for this order's SKUs, per location.
    pub max_stops: Vec<u32>,
}

impl PricingProblem {
    /// All duals zero, no restrictions beyond `max_stops`.
    pub fn plain(order: usize, n_stops: usize, max_stops: Vec<u32>) -> Self {
        let n = max_stops.len();
        PricingProblem {
            order,
            n_stops,
            mu: 0.0,
            pi: vec![0.0; n],
            sigma: vec![0.0; n],
            cuts: Vec::new(),
            mandatory: vec![0; n],
            max_stops,
        }
    }

    /// Reduced cost of a route with the given stops and length.
    pub fn reduced_cost(&self, stops: &StopSet, cost: i64) -> f64 {
        let mut rc = cost as f64 - self.mu;
        for &(l, c) in stops.pairs() {
            rc -= c as f64 * self.pi[l] + self.sigma[l];
        }
        for cut in &self.cuts {
            if cut.locations.iter().any(|&l| stops.count(l) > 0) {
                rc -= cut.lambda;
            }
        }
        rc
    }
}

#[derive(Debug, Clone)]
pub struct PricingConfig {
    /// Most-negative columns returned per call.
    pub max_columns: usize,
    /// Columns are returned only below this reduced cost.
    pub threshold: f64,
    pub dominance: bool,
    /// Optimal routing: locations passed on a shortest path become unreachable.
    pub first_stop_restriction: bool,
    /// Largest gap: drop partial routes whose turn point is not the largest gap.
    pub gap_kill: bool,
}

impl Default for PricingConfig {
    fn default() -> Self {
        PricingConfig {
            max_columns: 30,
            threshold: -1e-6,
            dominance: true,
            first_stop_restriction: true,
            gap_kill: true,
        }
    }
}

/// Why an extension was refused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Reject {
    /// All stops already made.
    Length,
    /// The policy has no such arc.
    Arc,
    /// Target already visited or passed by.
    Unreachable,
    /// A mandatory stop could no longer be made.
    Mandatory,
    /// Target has no capacity left for this order.
    Capacity,
    /// Largest-gap turn-point rule.
    Gap,
}

/// A partial route.
#[derive(Debug, Clone)]
pub struct Label {
    pub loc: Option<usize>,
    /// Stops made at `loc` so far (the storage node index).
    pub visits: u32,
    pub q: u32,
    /// Distance walked.
    pub cost: i64,
    /// Reduced cost so far, without the walk home.
    pub rc: f64,
    pub phase: Phase,
    pub visited: FixedBitSet,
    /// Locations that can still receive a first stop.
    pub reach: FixedBitSet,
    /// Cuts already paid out.
    pub counted: FixedBitSet,
    /// Σ of remaining mandatory stops.
    pub mandatory_left: u32,
    parent: Option<usize>,
}

/// One priced route.
#[derive(Debug, Clone, PartialEq)]
pub struct PricedRoute {
    pub stops: StopSet,
    /// Stop sequence found by the pricer (locations, repeats consecutive).
    pub sequence: Vec<usize>,
    pub cost: i64,
    pub reduced_cost: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LevelTrace {
    pub q: u32,
    pub created: usize,
    pub dominated: usize,
    /// Labels created earlier in the level and later dominated.
    pub removed: usize,
    pub rejected: BTreeMap<Reject, usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PricingTrace {
    pub levels: Vec<LevelTrace>,
}

impl PricingTrace {
    pub fn labels(&self) -> usize {
        self.levels.iter().map(|l| l.created).sum()
    }

    pub fn dominated(&self) -> usize {
        self.levels.iter().map(|l| l.dominated + l.removed).sum()
    }
}

#[derive(Debug, Clone)]
pub struct PricingOutcome {
    /// Up to `max_columns` routes below the threshold, most negative first.
    pub columns: Vec<PricedRoute>,
    /// No feasible route is below the threshold.
    pub proof_none: bool,
    /// Cheapest feasible route over the whole search, if any exists.
    pub best: Option<PricedRoute>,
    pub trace: PricingTrace,
}

/// Labeling pricer for one warehouse and policy, reusable across orders.
#[derive(Debug, Clone)]
pub struct Pricer {
    graph: PolicyGraph,
    pub config: PricingConfig,
    /// Optimal routing: `between[from * n + to]` holds the locations on some
    /// shortest path (`from == n` is the depot).
    between: Vec<FixedBitSet>,
}

impl Pricer {
    pub fn new(wh: &Warehouse, policy: Policy, config: PricingConfig) -> Result<Self, RoutingError> {
        let mut graph = build_policy_graph(wh, policy)?;
        graph.gap_kill = config.gap_kill;
        let n = wh.num_locations();
        let mut between = Vec::new();
        if policy == Policy::Optimal {
            for from in 0..=n {
                for to in 0..n {
                    let mut set = FixedBitSet::with_capacity(n);
                    let direct = wh.dist(from, to);
                    for x in 0..n {
                        if x != from && x != to && wh.dist(from, x) + wh.dist(x, to) == direct {
                            set.insert(x);
                        }
                    }
                    between.push(set);
                }
            }
        }
        Ok(Pricer { graph, config, between })
    }

    pub fn policy(&self) -> Policy {
        self.graph.policy
    }

    pub fn graph(&self) -> &PolicyGraph {
        &self.graph
    }

    fn n(&self) -> usize {
        self.graph.num_locations()
    }

    /// The empty route at the depot.
    pub fn root(&self, pp: &PricingProblem) -> Label {
        let n = self.n();
        let mut reach = FixedBitSet::with_capacity(n);
        for l in 0..n {
            if pp.max_stops[l] > 0 {
                reach.insert(l);
            }
        }
        Label {
            loc: None,
            visits: 0,
            q: 0,
            cost: 0,
            rc: -pp.mu,
            phase: self.graph.start_phase(),
            visited: FixedBitSet::with_capacity(n),
            reach,
            counted: FixedBitSet::with_capacity(pp.cuts.len()),
            mandatory_left: pp.mandatory.iter().sum(),
            parent: None,
        }
    }

    /// Extends `label` by one stop at `target`.
    pub fn extend(&self, pp: &PricingProblem, label: &Label, target: usize) -> Result<Label, Reject> {
        if label.q as usize >= pp.n_stops {
            return Err(Reject::Length);
        }
        let repeat = label.loc == Some(target);
        let step = if repeat {
            Step::Go(0, label.phase.clone())
        } else {
            self.graph.step(label.loc, &label.phase, target)
        };
        self.apply(pp, label, target, step)
    }

    fn apply(&self, pp: &PricingProblem, label: &Label, target: usize, step: Step) -> Result<Label, Reject> {
        let repeat = label.loc == Some(target);
        let (dist, phase) = match step {
            Step::Go(d, p) => (d, p),
            Step::NoArc => return Err(Reject::Arc),
            Step::Kill => return Err(Reject::Gap),
        };
        let visits = if repeat { label.visits + 1 } else { 1 };
        if visits > pp.max_stops[target] {
            return Err(Reject::Capacity);
        }
        if !repeat && !label.reach.contains(target) {
            return Err(Reject::Unreachable);
        }
        // Remaining mandatory stops at the target before this stop.
        let owed = pp.mandatory[target].saturating_sub(visits - 1);
        if owed == 0 && label.q + label.mandatory_left >= pp.n_stops as u32 {
            return Err(Reject::Mandatory);
        }
        if !repeat {
            if let Some(cur) = label.loc {
                if label.visits < pp.mandatory[cur] {
                    return Err(Reject::Mandatory);
                }
            }
        }

        let mut next = label.clone();
        next.loc = Some(target);
        next.visits = visits;
        next.q += 1;
        next.cost += dist;
        next.rc += dist as f64 - pp.pi[target];
        if owed > 0 {
            next.mandatory_left -= 1;
        }
        next.phase = phase;
        if !repeat {
            next.rc -= pp.sigma[target];
            next.visited.insert(target);
            if self.policy() == Policy::Optimal {
                next.reach.set(target, false);
                if self.config.first_stop_restriction {
                    let from = label.loc.unwrap_or(self.n());
                    next.reach.difference_with(&self.between[from * self.n() + target]);
                }
            } else {
                next.reach = self.graph.future(Some(target), &next.phase);
                next.reach.difference_with(&label.visited);
                for l in 0..self.n() {
                    if pp.max_stops[l] == 0 {
                        next.reach.set(l, false);
                    }
                }
            }
            for (c, cut) in pp.cuts.iter().enumerate() {
                if !next.counted.contains(c) && cut.locations.contains(&target) {
                    next.counted.insert(c);
                    next.rc -= cut.lambda;
                }
            }
        }
        // Every remaining mandatory stop must stay reachable.
        for (l, &m) in pp.mandatory.iter().enumerate() {
            let left = if next.visited.contains(l) {
                if l == target {
                    m.saturating_sub(visits)
                } else {
                    0
                }
            } else {
                m
            };
            if left > 0 && l != target && !next.reach.contains(l) {
                return Err(Reject::Mandatory);
            }
        }
        Ok(next)
    }

    fn cut_open(&self, pp: &PricingProblem, label: &Label, c: usize) -> bool {
        !label.counted.contains(c) && pp.cuts[c].locations.iter().any(|&l| label.reach.contains(l))
    }

    /// Whether `a` dominates `b`: every completion of `b` is matched by a
    /// completion of `a` that is no more expensive.
    pub fn dominates(&self, pp: &PricingProblem, a: &Label, b: &Label) -> bool {
        if a.loc != b.loc || a.visits != b.visits || a.q != b.q || a.phase != b.phase {
            return false;
        }
        if a.mandatory_left != b.mandatory_left {
            return false;
        }
        for (l, &m) in pp.mandatory.iter().enumerate() {
            if m > 0 && a.visited.contains(l) != b.visited.contains(l) {
                return false;
            }
        }
        if !a.reach.is_superset(&b.reach) {
            return false;
        }
        let mut slack = b.rc - a.rc;
        if slack < 0.0 {
            return false;
        }
        for c in 0..pp.cuts.len() {
            if self.cut_open(pp, b, c) && !self.cut_open(pp, a, c) {
                slack -= pp.cuts[c].lambda.max(0.0);
                if slack < 0.0 {
                    return false;
                }
            }
        }
        true
    }

    /// Candidate next stops of a label: the repeat first, then first stops.
    fn candidates(&self, pp: &PricingProblem, label: &Label, out: &mut Vec<(usize, Step)>) {
        out.clear();
        if let Some(cur) = label.loc {
            if label.visits < pp.max_stops[cur] {
                out.push((cur, Step::Go(0, label.phase.clone())));
            }
        }
        for l in label.reach.ones() {
            if Some(l) == label.loc {
                continue;
            }
            let step = self.graph.step(label.loc, &label.phase, l);
            if step != Step::NoArc {
                out.push((l, step));
            }
        }
    }

    pub fn price(&self, pp: &PricingProblem) -> PricingOutcome {
        let n_stops = pp.n_stops;
        let mut trace = PricingTrace::default();
        let mut levels: Vec<Vec<Label>> = vec![vec![self.root(pp)]];
        let mut alive: Vec<Vec<bool>> = vec![vec![true]];
        let mut cands = Vec::new();
        let feasible_start = pp.mandatory.iter().sum::<u32>() as usize <= n_stops
            && pp.mandatory.iter().zip(&pp.max_stops).all(|(m, k)| m <= k);

        for q in 0..n_stops {
            if !feasible_start {
                break;
            }
            let mut lt = LevelTrace { q: q as u32 + 1, ..Default::default() };
            let mut next: Vec<Label> = Vec::new();
            let mut next_alive: Vec<bool> = Vec::new();
            let mut buckets: HashMap<(Option<usize>, u32, Phase), Vec<usize>> = HashMap::new();
            for (i, label) in levels[q].iter().enumerate() {
                if !alive[q][i] {
                    continue;
                }
                self.candidates(pp, label, &mut cands);
                for (target, step) in cands.drain(..) {
                    let mut new = match self.apply(pp, label, target, step) {
                        Ok(l) => l,
                        Err(r) => {
                            *lt.rejected.entry(r).or_default() += 1;
                            continue;
                        }
                    };
                    new.parent = Some(i);
                    lt.created += 1;
                    let key = (new.loc, new.visits, new.phase.clone());
                    let bucket = buckets.entry(key).or_default();
                    if self.config.dominance {
                        if bucket.iter().any(|&j| next_alive[j] && self.dominates(pp, &next[j], &new)) {
                            lt.dominated += 1;
                            continue;
                        }
                        for &j in bucket.iter() {
                            if next_alive[j] && self.dominates(pp, &new, &next[j]) {
                                next_alive[j] = false;
                                lt.removed += 1;
                            }
                        }
                        bucket.retain(|&j| next_alive[j]);
                    }
                    bucket.push(next.len());
                    next.push(new);
                    next_alive.push(true);
                }
            }
            trace.levels.push(lt);
            levels.push(next);
            alive.push(next_alive);
        }

        let mut routes: BTreeMap<StopSet, PricedRoute> = BTreeMap::new();
        if feasible_start && levels.len() == n_stops + 1 {
            for (i, label) in levels[n_stops].iter().enumerate() {
                if !alive[n_stops][i] || label.mandatory_left > 0 {
                    continue;
                }
                let Some(last) = label.loc else { continue };
                let cost = label.cost + self.graph.close(last);
                let rc = label.rc + self.graph.close(last) as f64;
                let sequence = self.sequence(&levels, n_stops, i);
                let stops = StopSet::from_locations(sequence.iter().copied());
                let route = self.finish(stops, sequence, cost, rc);
                match routes.get(&route.stops) {
                    Some(r) if r.reduced_cost <= route.reduced_cost => {}
                    _ => {
                        routes.insert(route.stops.clone(), route);
                    }
                }
            }
        }
        let mut all: Vec<PricedRoute> = routes.into_values().collect();
        all.sort_by(|a, b| a.reduced_cost.total_cmp(&b.reduced_cost).then_with(|| a.stops.cmp(&b.stops)));
        let best = all.first().cloned();
        let columns: Vec<PricedRoute> = all
            .into_iter()
            .filter(|r| r.reduced_cost < self.config.threshold)
            .take(self.config.max_columns)
            .collect();
        PricingOutcome { proof_none: columns.is_empty(), columns, best, trace }
    }

    fn sequence(&self, levels: &[Vec<Label>], q: usize, mut i: usize) -> Vec<usize> {
        let mut seq = Vec::with_capacity(q);
        for level in (1..=q).rev() {
            let label = &levels[level][i];
            seq.push(label.loc.unwrap());
            i = label.parent.unwrap();
        }
        seq.reverse();
        seq
    }

    /// Prices the route at its policy cost. Under optimal routing the labeled
    /// sequence need not be the shortest tour over its stops, and without the
    /// turn-point rule a largest-gap walk may turn at a smaller gap.
    fn finish(&self, stops: StopSet, sequence: Vec<usize>, cost: i64, rc: f64) -> PricedRoute {
        let exact_walk = match self.policy() {
            Policy::Optimal => false,
            Policy::LargestGap => self.config.gap_kill,
            _ => true,
        };
        match route_cost(&stops, self.graph.warehouse(), self.policy()) {
            Ok(c) => {
                if exact_walk {
                    debug_assert_eq!(c.total, cost, "labeled walk disagrees with the {} evaluator", self.policy());
                }
                debug_assert!(c.total <= cost);
                PricedRoute { stops, sequence, cost: c.total, reduced_cost: rc - (cost - c.total) as f64 }
            }
            // Too many distinct stops for the exact evaluator: keep the walk.
            Err(_) => PricedRoute { stops, sequence, cost, reduced_cost: rc },
        }
    }
}

#[cfg(test)]
mod tests;

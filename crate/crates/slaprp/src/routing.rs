//! Route lengths under the five routing policies.
//!
//! Heuristic policies have closed forms in terms of per-aisle extents; the
//! optimal policy solves a small TSP over the distinct stop locations by
//! Held–Karp. Repeated stops at one location cost nothing extra.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{LayoutKind, Problem, Warehouse};

/// Default bound on distinct stop locations for the exact TSP evaluator.
pub const TSP_CAP: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    Optimal,
    Return,
    #[serde(rename = "sshape")]
    SShape,
    Midpoint,
    #[serde(rename = "largestgap")]
    LargestGap,
}

impl Policy {
    pub const ALL: [Policy; 5] =
        [Policy::Optimal, Policy::Return, Policy::SShape, Policy::Midpoint, Policy::LargestGap];

    pub fn name(self) -> &'static str {
        match self {
            Policy::Optimal => "optimal",
            Policy::Return => "return",
            Policy::SShape => "sshape",
            Policy::Midpoint => "midpoint",
            Policy::LargestGap => "largestgap",
        }
    }

    pub fn supports(self, kind: LayoutKind) -> bool {
        kind == LayoutKind::SingleBlock || matches!(self, Policy::Return | Policy::Optimal)
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s.to_ascii_lowercase().replace(['-', '_'], ""))
            .ok_or_else(|| format!("unknown policy `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoutingError {
    #[error("empty stop set")]
    Empty,
    #[error("unsupported combination: {0} policy on a two-block layout")]
    Unsupported(Policy),
    #[error("{0} stop locations exceed the exact TSP cap of {1}")]
    TooManyStops(usize, usize),
    #[error("unknown location {0}")]
    UnknownLocation(usize),
    #[error("infeasible assignment: {0}")]
    Infeasible(String),
}

/// Multiset of stops: `(location, count)` sorted by location, counts ≥ 1.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StopSet(Vec<(usize, u32)>);

impl StopSet {
    pub fn new(pairs: impl IntoIterator<Item = (usize, u32)>) -> Self {
        let mut m: BTreeMap<usize, u32> = BTreeMap::new();
        for (l, c) in pairs {
            if c > 0 {
                *m.entry(l).or_default() += c;
            }
        }
        StopSet(m.into_iter().collect())
    }

    /// One stop per listed location (repeats accumulate).
    pub fn from_locations(locs: impl IntoIterator<Item = usize>) -> Self {
        Self::new(locs.into_iter().map(|l| (l, 1)))
    }

    pub fn pairs(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn locations(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|p| p.0)
    }

    pub fn count(&self, l: usize) -> u32 {
        self.0.binary_search_by_key(&l, |p| p.0).map(|i| self.0[i].1).unwrap_or(0)
    }

    pub fn total(&self) -> u32 {
        self.0.iter().map(|p| p.1).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Route length split into the cross-aisle part and the per-aisle parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RouteCost {
    pub total: i64,
    pub horizontal: i64,
    /// `(aisle, distance walked inside it)`; empty for the optimal policy,
    /// whose length is reported entirely as `horizontal`.
    pub aisles: Vec<(u32, i64)>,
}

impl RouteCost {
    fn from_parts(horizontal: i64, aisles: Vec<(u32, i64)>) -> Self {
        let total = horizontal + aisles.iter().map(|a| a.1).sum::<i64>();
        RouteCost { total, horizontal, aisles }
    }
}

/// Per-aisle view of the bays holding stops.
struct AisleView {
    /// aisle -> sorted distinct bays (single block only).
    bays: BTreeMap<u32, Vec<u32>>,
}

impl AisleView {
    fn new(stops: &StopSet, wh: &Warehouse) -> Result<Self, RoutingError> {
        let mut bays: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        for l in stops.locations() {
            let loc = wh.locations.get(l).ok_or(RoutingError::UnknownLocation(l))?;
            bays.entry(loc.aisle).or_default().push(loc.bay);
        }
        for v in bays.values_mut() {
            v.sort_unstable();
            v.dedup();
        }
        Ok(AisleView { bays })
    }

    fn farthest_aisle(&self) -> u32 {
        *self.bays.keys().next_back().unwrap()
    }
}

fn prelude(stops: &StopSet, wh: &Warehouse, policy: Policy) -> Result<(), RoutingError> {
    if stops.is_empty() {
        return Err(RoutingError::Empty);
    }
    if !policy.supports(wh.layout.kind) {
        return Err(RoutingError::Unsupported(policy));
    }
    if let Some(l) = stops.locations().find(|&l| l >= wh.num_locations()) {
        return Err(RoutingError::UnknownLocation(l));
    }
    Ok(())
}

pub fn cost_return(stops: &StopSet, wh: &Warehouse) -> Result<RouteCost, RoutingError> {
    prelude(stops, wh, Policy::Return)?;
    let (dd, d) = (wh.layout.aisle_pitch, wh.layout.bay_pitch);
    // Sub-aisles are entered from the depot's cross-aisle and left the same way.
    let mut far: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for l in stops.locations() {
        let loc = &wh.locations[l];
        let f = far.entry((loc.aisle, loc.block)).or_default();
        *f = (*f).max(loc.bay);
    }
    let v = far.keys().map(|k| k.0).max().unwrap();
    let mut aisles: BTreeMap<u32, i64> = BTreeMap::new();
    for (&(a, _), &f) in &far {
        *aisles.entry(a).or_default() += 2 * d * f as i64;
    }
    Ok(RouteCost::from_parts(2 * dd * (v as i64 - 1), aisles.into_iter().collect()))
}

pub fn cost_sshape(stops: &StopSet, wh: &Warehouse) -> Result<RouteCost, RoutingError> {
    prelude(stops, wh, Policy::SShape)?;
    let (dd, d, nb) = (wh.layout.aisle_pitch, wh.layout.bay_pitch, wh.layout.bays as i64);
    let view = AisleView::new(stops, wh)?;
    let v = view.farthest_aisle();
    let m = view.bays.len();
    let mut aisles: Vec<(u32, i64)> = view.bays.keys().map(|&a| (a, (nb + 1) * d)).collect();
    if m % 2 == 1 {
        let f = *view.bays[&v].last().unwrap() as i64;
        aisles.last_mut().unwrap().1 = 2 * d * f;
    }
    Ok(RouteCost::from_parts(2 * dd * (v as i64 - 1), aisles))
}

/// Midpoint split: bays `<= mp` are served from the front.
pub fn midpoint_of(bays: u32) -> u32 {
    bays / 2
}

pub fn cost_midpoint(stops: &StopSet, wh: &Warehouse) -> Result<RouteCost, RoutingError> {
    prelude(stops, wh, Policy::Midpoint)?;
    let view = AisleView::new(stops, wh)?;
    if view.bays.len() == 1 {
        return cost_return(stops, wh);
    }
    let (dd, d, nb) = (wh.layout.aisle_pitch, wh.layout.bay_pitch, wh.layout.bays);
    let mp = midpoint_of(nb);
    let u = *view.bays.keys().next().unwrap();
    let v = view.farthest_aisle();
    let aisles = view
        .bays
        .iter()
        .map(|(&a, bays)| {
            if a == u || a == v {
                return (a, (nb as i64 + 1) * d);
            }
            let low = bays.iter().filter(|&&b| b <= mp).max().copied().unwrap_or(0) as i64;
            let high = bays.iter().filter(|&&b| b > mp).map(|&b| (nb + 1 - b) as i64).max().unwrap_or(0);
            (a, 2 * d * (low + high))
        })
        .collect();
    Ok(RouteCost::from_parts(2 * dd * (v as i64 - 1), aisles))
}

/// Largest gap in an aisle with picks at the given sorted bays, counting the
/// stretch from the front cross-aisle and the stretch to the back one.
pub fn largest_gap(bays: &[u32], n_bays: u32) -> u32 {
    let mut g = bays[0];
    for w in bays.windows(2) {
        g = g.max(w[1] - w[0]);
    }
    g.max(n_bays + 1 - bays[bays.len() - 1])
}

pub fn cost_largestgap(stops: &StopSet, wh: &Warehouse) -> Result<RouteCost, RoutingError> {
    prelude(stops, wh, Policy::LargestGap)?;
    let view = AisleView::new(stops, wh)?;
    if view.bays.len() == 1 {
        return cost_return(stops, wh);
    }
    let (dd, d, nb) = (wh.layout.aisle_pitch, wh.layout.bay_pitch, wh.layout.bays);
    let u = *view.bays.keys().next().unwrap();
    let v = view.farthest_aisle();
    let aisles = view
        .bays
        .iter()
        .map(|(&a, bays)| {
            if a == u || a == v {
                (a, (nb as i64 + 1) * d)
            } else {
                (a, 2 * d * (nb + 1 - largest_gap(bays, nb)) as i64)
            }
        })
        .collect();
    Ok(RouteCost::from_parts(2 * dd * (v as i64 - 1), aisles))
}

pub fn cost_optimal(stops: &StopSet, wh: &Warehouse) -> Result<RouteCost, RoutingError> {
    cost_optimal_capped(stops, wh, TSP_CAP)
}

pub fn cost_optimal_capped(stops: &StopSet, wh: &Warehouse, cap: usize) -> Result<RouteCost, RoutingError> {
    prelude(stops, wh, Policy::Optimal)?;
    let locs: Vec<usize> = stops.locations().collect();
    if locs.len() > cap {
        return Err(RoutingError::TooManyStops(locs.len(), cap));
    }
    let total = held_karp(&locs, wh);
    Ok(RouteCost::from_parts(total, Vec::new()))
}

/// Shortest closed tour from the depot through `locs`.
fn held_karp(locs: &[usize], wh: &Warehouse) -> i64 {
    let n = locs.len();
    let depot = wh.depot();
    if n == 1 {
        return 2 * wh.dist(depot, locs[0]);
    }
    let full = 1usize << n;
    let mut best = vec![i64::MAX; full * n];
    for i in 0..n {
        best[(1 << i) * n + i] = wh.dist(depot, locs[i]);
    }
    for mask in 1..full {
        for last in 0..n {
            let cur = best[mask * n + last];
            if cur == i64::MAX || mask & (1 << last) == 0 {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | (1 << next);
                let c = cur + wh.dist(locs[last], locs[next]);
                if c < best[m2 * n + next] {
                    best[m2 * n + next] = c;
                }
            }
        }
    }
    (0..n).map(|i| best[(full - 1) * n + i] + wh.dist(locs[i], depot)).min().unwrap()
}

pub fn route_cost(stops: &StopSet, wh: &Warehouse, policy: Policy) -> Result<RouteCost, RoutingError> {
    match policy {
        Policy::Optimal => cost_optimal(stops, wh),
        Policy::Return => cost_return(stops, wh),
        Policy::SShape => cost_sshape(stops, wh),
        Policy::Midpoint => cost_midpoint(stops, wh),
        Policy::LargestGap => cost_largestgap(stops, wh),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanCost {
    pub total: i64,
    pub per_order: Vec<RouteCost>,
}

/// Stops of every order under an assignment (SKU index -> location).
pub fn order_stops(problem: &Problem, assignment: &[usize]) -> Vec<StopSet> {
    problem.orders.iter().map(|o| StopSet::from_locations(o.iter().map(|&s| assignment[s]))).collect()
}

/// Checks that `assignment` places every SKU, respects capacities and the fixed SKUs.
pub fn check_assignment(problem: &Problem, assignment: &[usize]) -> Result<(), RoutingError> {
    if assignment.len() != problem.num_skus() {
        return Err(RoutingError::Infeasible(format!(
            "{} skus assigned, {} expected",
            assignment.len(),
            problem.num_skus()
        )));
    }
    let mut used = vec![0u32; problem.num_locations()];
    for (s, &l) in assignment.iter().enumerate() {
        let slot = used.get_mut(l).ok_or(RoutingError::UnknownLocation(l))?;
        *slot += 1;
        if let Some(f) = problem.fixed[s] {
            if f != l {
                return Err(RoutingError::Infeasible(format!(
                    "fixed assignment violated: sku {} must be at {f}, found at {l}",
                    problem.instance.skus[s]
                )));
            }
        }
    }
    for (l, &u) in used.iter().enumerate() {
        if u > problem.capacity(l) {
            return Err(RoutingError::Infeasible(format!("capacity exceeded at location {l}")));
        }
    }
    Ok(())
}

pub fn evaluate_plan(problem: &Problem, assignment: &[usize], policy: Policy) -> Result<PlanCost, RoutingError> {
    check_assignment(problem, assignment)?;
    let per_order = order_stops(problem, assignment)
        .iter()
        .map(|st| route_cost(st, &problem.wh, policy))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(PlanCost { total: per_order.iter().map(|c| c.total).sum(), per_order })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Layout;

    fn wh(aisles: u32, bays: u32) -> Warehouse {
        Warehouse::new(&Layout::single_block(aisles, bays, 2)).unwrap()
    }

    fn stops(w: &Warehouse, ab: &[(u32, u32)]) -> StopSet {
        StopSet::from_locations(ab.iter().map(|&(a, b)| w.location_at(a, 0, b).unwrap()))
    }

    #[test]
    fn return_examples() {
        let w = wh(3, 5);
        assert_eq!(cost_return(&stops(&w, &[(2, 3)]), &w).unwrap().total, 8);
        assert_eq!(cost_return(&stops(&w, &[(1, 2), (1, 5)]), &w).unwrap().total, 10);
        assert_eq!(cost_return(&stops(&w, &[(1, 4), (3, 2)]), &w).unwrap().total, 16);
        assert_eq!(cost_return(&StopSet::default(), &w), Err(RoutingError::Empty));
    }

    #[test]
    fn sshape_examples() {
        let w = wh(3, 5);
        assert_eq!(cost_sshape(&stops(&w, &[(1, 3)]), &w).unwrap().total, 6);
        assert_eq!(cost_sshape(&stops(&w, &[(1, 3), (2, 4)]), &w).unwrap().total, 14);
        assert_eq!(cost_sshape(&stops(&w, &[(1, 1), (2, 1), (3, 2)]), &w).unwrap().total, 20);
    }

    #[test]
    fn midpoint_examples() {
        let w = wh(3, 6);
        assert_eq!(cost_midpoint(&stops(&w, &[(2, 4)]), &w).unwrap().total, 2 * (1 + 4));
        assert_eq!(cost_midpoint(&stops(&w, &[(1, 1), (2, 2), (2, 5), (3, 1)]), &w).unwrap().total, 26);
        assert_eq!(cost_midpoint(&stops(&w, &[(1, 1), (2, 6)]), &w).unwrap().total, 2 + 14);
    }

    #[test]
    fn largest_gap_examples() {
        assert_eq!(largest_gap(&[1], 5), 5);
        assert_eq!(largest_gap(&[2, 5], 6), 3);
        let w = wh(3, 6);
        let c = cost_largestgap(&stops(&w, &[(1, 1), (2, 2), (2, 5), (3, 1)]), &w).unwrap();
        assert_eq!(c.total, 4 + 14 + 8);
        assert_eq!(c.aisles[1], (2, 8));
    }

    #[test]
    fn optimal_examples() {
        let w = wh(3, 5);
        assert_eq!(cost_optimal(&stops(&w, &[(3, 4)]), &w).unwrap().total, 2 * (2 + 4));
        let one_aisle = stops(&w, &[(2, 1), (2, 3), (2, 5)]);
        assert_eq!(cost_optimal(&one_aisle, &w).unwrap().total, cost_return(&one_aisle, &w).unwrap().total);
        let many = StopSet::from_locations(0..15);
        assert_eq!(cost_optimal(&many, &w), Err(RoutingError::TooManyStops(15, TSP_CAP)));
    }

    #[test]
    fn two_block_only_return_and_optimal() {
        let w = Warehouse::new(&Layout::two_block(2, 5, 2)).unwrap();
        let st = StopSet::from_locations([w.location_at(2, 0, 2).unwrap(), w.location_at(2, 1, 3).unwrap()]);
        assert_eq!(cost_return(&st, &w).unwrap().total, 2 + 4 + 6);
        assert_eq!(cost_sshape(&st, &w), Err(RoutingError::Unsupported(Policy::SShape)));
        assert!(cost_optimal(&st, &w).unwrap().total <= 12);
    }

    #[test]
    fn policy_names_round_trip() {
        for p in Policy::ALL {
            assert_eq!(p.name().parse::<Policy>().unwrap(), p);
        }
        assert_eq!("largest-gap".parse::<Policy>().unwrap(), Policy::LargestGap);
    }
}

//! Brute-force references used to check the solver.
//!
//! Nothing here calls the routing, pricing or separation code: route lengths
//! come from the grid walk in [`walk`], reduced costs and cut violations are
//! recomputed from their definitions.

mod walk;

use std::time::{Duration, Instant};

use crate::model::{Layout, LayoutKind, Problem};
use crate::pricing::PricingProblem;
use crate::routing::{Policy, StopSet};

pub use walk::{trace_policy_path, GridDistances};

/// 10! placements: the largest space the exhaustive enumerator accepts.
pub const ENUMERATION_BUDGET: u128 = 3_628_800;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error("search space of {0} placements exceeds the budget of {1}")]
    Budget(u128, u128),
    #[error("instance has no feasible placement")]
    Infeasible,
    #[error("too large for the oracle: {0}")]
    TooLarge(String),
}

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub objective: i64,
    /// Location of every SKU (by SKU index).
    pub assignment: Vec<usize>,
    /// Complete placements evaluated.
    pub evaluated: u128,
    pub elapsed: Duration,
}

/// Route lengths from the grid walk, with grid distances cached for optimal routing.
pub struct Reference {
    layout: Layout,
    grid: GridDistances,
}

impl Reference {
    pub fn new(layout: &Layout) -> Self {
        Reference { layout: layout.clone(), grid: GridDistances::new(layout) }
    }

    pub fn route_length(&self, stops: &[usize], policy: Policy) -> i64 {
        if policy != Policy::Optimal {
            return trace_policy_path(stops, policy, &self.layout);
        }
        let mut locs = stops.to_vec();
        locs.sort_unstable();
        locs.dedup();
        if locs.is_empty() {
            return 0;
        }
        let mut best = i64::MAX;
        walk::permute(&mut locs, 0, &mut |order| {
            let mut at = None;
            let mut total = 0;
            for &l in order {
                total += self.grid.location_distance(at, Some(l));
                at = Some(l);
            }
            total += self.grid.location_distance(at, None);
            best = best.min(total);
        });
        best
    }

    pub fn plan_cost(&self, problem: &Problem, assignment: &[usize], policy: Policy) -> i64 {
        problem
            .orders
            .iter()
            .map(|o| {
                let stops: Vec<usize> = o.iter().map(|&s| assignment[s]).collect();
                self.route_length(&stops, policy)
            })
            .sum()
    }
}

fn residual_capacity(problem: &Problem) -> Vec<u32> {
    let occ = problem.fixed_occupancy();
    (0..problem.num_locations()).map(|l| problem.capacity(l).saturating_sub(occ[l])).collect()
}

/// Number of ways to place `n` distinct SKUs into locations with the given
/// free slot counts, slots of one location being interchangeable.
pub fn placement_count(n: usize, residual: &[u32]) -> u128 {
    let mut binom = vec![vec![0u128; n + 1]; n + 1];
    for i in 0..=n {
        binom[i][0] = 1;
        for k in 1..=i {
            binom[i][k] = binom[i - 1][k - 1] + binom[i - 1][k];
        }
    }
    // ways[m] = placements of m SKUs into the locations processed so far.
    let mut ways = vec![0u128; n + 1];
    ways[0] = 1;
    for &r in residual {
        let mut next = vec![0u128; n + 1];
        for m in 0..=n {
            for k in 0..=(r as usize).min(m) {
                next[m] += ways[m - k] * binom[m][k];
            }
        }
        ways = next;
    }
    ways[n]
}

/// Exhaustive search over all placements of the free SKUs.
pub fn enumerate_slaprp(problem: &Problem, policy: Policy) -> Result<OracleResult, OracleError> {
    let start = Instant::now();
    let free: Vec<usize> = (0..problem.num_skus()).filter(|&s| problem.fixed[s].is_none()).collect();
    let mut residual = residual_capacity(problem);
    let count = placement_count(free.len(), &residual);
    if count > ENUMERATION_BUDGET {
        return Err(OracleError::Budget(count, ENUMERATION_BUDGET));
    }
    if count == 0 {
        return Err(OracleError::Infeasible);
    }
    let reference = Reference::new(&problem.instance.layout);
    let mut assignment: Vec<usize> = problem.fixed.iter().map(|f| f.unwrap_or(usize::MAX)).collect();
    let mut best: Option<(i64, Vec<usize>)> = None;
    let mut evaluated = 0u128;

    fn rec(
        k: usize,
        free: &[usize],
        residual: &mut [u32],
        assignment: &mut Vec<usize>,
        eval: &mut dyn FnMut(&[usize]),
    ) {
        if k == free.len() {
            eval(assignment);
            return;
        }
        for l in 0..residual.len() {
            if residual[l] == 0 {
                continue;
            }
            residual[l] -= 1;
            assignment[free[k]] = l;
            rec(k + 1, free, residual, assignment, eval);
            residual[l] += 1;
        }
    }

    rec(0, &free, &mut residual, &mut assignment, &mut |a: &[usize]| {
        evaluated += 1;
        let cost = reference.plan_cost(problem, a, policy);
        if best.as_ref().map_or(true, |b| cost < b.0) {
            best = Some((cost, a.to_vec()));
        }
    });
    let (objective, assignment) = best.ok_or(OracleError::Infeasible)?;
    Ok(OracleResult { objective, assignment, evaluated, elapsed: start.elapsed() })
}

/// Exact search for return routing with bound pruning, for placement spaces
/// too large to list one by one. Route lengths use the farthest-bay-per-aisle
/// rule, checked against the grid walk on every improving leaf.
pub fn enumerate_return_pruned(problem: &Problem) -> Result<OracleResult, OracleError> {
    let start = Instant::now();
    let wh_layout = &problem.instance.layout;
    let blocks = match wh_layout.kind {
        LayoutKind::SingleBlock => 1,
        LayoutKind::TwoBlockMidDepot => 2,
    };
    let locs = wh_layout.locations();
    let n_loc = locs.len();
    let n_sub = (wh_layout.aisles * blocks) as usize;
    let sub_of: Vec<usize> = locs.iter().map(|l| ((l.aisle - 1) * blocks + l.block) as usize).collect();
    let (dd, d) = (wh_layout.aisle_pitch, wh_layout.bay_pitch);

    let mut free: Vec<usize> = (0..problem.num_skus()).filter(|&s| problem.fixed[s].is_none()).collect();
    free.sort_by_key(|&s| (std::cmp::Reverse(problem.sku_orders[s].len()), s));
    let mut residual = residual_capacity(problem);
    if residual.iter().map(|&r| r as usize).sum::<usize>() < free.len() {
        return Err(OracleError::Infeasible);
    }

    struct State {
        far_aisle: Vec<u32>,
        far_bay: Vec<Vec<u32>>,
        remaining: Vec<usize>,
    }
    let n_orders = problem.num_orders();
    let mut st = State {
        far_aisle: vec![0; n_orders],
        far_bay: vec![vec![0; n_sub]; n_orders],
        remaining: vec![0; n_orders],
    };
    let order_cost = |st: &State, o: usize| -> i64 {
        if st.far_aisle[o] == 0 {
            return 0;
        }
        2 * dd * (st.far_aisle[o] as i64 - 1) + 2 * d * st.far_bay[o].iter().map(|&b| b as i64).sum::<i64>()
    };
    let delta = |st: &State, o: usize, l: usize| -> i64 {
        let loc = &locs[l];
        let dv = if st.far_aisle[o] == 0 {
            loc.aisle as i64 - 1
        } else {
            (loc.aisle as i64 - st.far_aisle[o] as i64).max(0)
        };
        2 * dd * dv + 2 * d * (loc.bay as i64 - st.far_bay[o][sub_of[l]] as i64).max(0)
    };
    let place = |st: &mut State, o: usize, l: usize| -> (u32, u32) {
        let prev = (st.far_aisle[o], st.far_bay[o][sub_of[l]]);
        st.far_aisle[o] = st.far_aisle[o].max(locs[l].aisle);
        let fb = &mut st.far_bay[o][sub_of[l]];
        *fb = (*fb).max(locs[l].bay);
        prev
    };

    let mut assignment: Vec<usize> = problem.fixed.iter().map(|f| f.unwrap_or(usize::MAX)).collect();
    for s in 0..problem.num_skus() {
        for &o in &problem.sku_orders[s] {
            match problem.fixed[s] {
                Some(l) => {
                    place(&mut st, o, l);
                }
                None => st.remaining[o] += 1,
            }
        }
    }

    struct Search<'a> {
        free: &'a [usize],
        best: i64,
        best_assignment: Vec<usize>,
        evaluated: u128,
        nodes: u64,
    }
    let mut search = Search {
        free: &free,
        best: i64::MAX,
        best_assignment: Vec::new(),
        evaluated: 0,
        nodes: 0,
    };

    // Lower bound on the cost still to be added: every unplaced SKU takes a
    // distinct slot, and an order's increase is at least the average of the
    // single-SKU increases of its unplaced SKUs. Solved as an assignment problem.
    let bound = |st: &State, k: usize, residual: &[u32], free: &[usize]| -> i64 {
        let rest = &free[k..];
        if rest.is_empty() {
            return 0;
        }
        let slots: Vec<usize> =
            (0..n_loc).flat_map(|l| std::iter::repeat(l).take(residual[l] as usize)).collect();
        let mut w = vec![vec![0f64; slots.len()]; rest.len()];
        let mut per_loc = vec![0f64; n_loc];
        for (i, &s) in rest.iter().enumerate() {
            for (l, v) in per_loc.iter_mut().enumerate() {
                *v = if residual[l] == 0 {
                    0.0
                } else {
                    problem.sku_orders[s]
                        .iter()
                        .map(|&o| delta(st, o, l) as f64 / st.remaining[o] as f64)
                        .sum()
                };
            }
            for (j, &l) in slots.iter().enumerate() {
                w[i][j] = per_loc[l];
            }
        }
        (min_cost_assignment(&w) - 1e-6).ceil() as i64
    };

    fn dfs(
        k: usize,
        st: &mut State,
        residual: &mut Vec<u32>,
        assignment: &mut Vec<usize>,
        search: &mut Search,
        problem: &Problem,
        current: i64,
        cfg: &dyn Fn(&State, usize, &[u32], &[usize]) -> i64,
        delta: &dyn Fn(&State, usize, usize) -> i64,
        place: &dyn Fn(&mut State, usize, usize) -> (u32, u32),
        sub_of: &[usize],
    ) {
        search.nodes += 1;
        if k == search.free.len() {
            search.evaluated += 1;
            if current < search.best {
                search.best = current;
                search.best_assignment = assignment.clone();
            }
            return;
        }
        if current + cfg(st, k, residual, search.free) >= search.best {
            return;
        }
        let s = search.free[k];
        let mut options: Vec<(i64, usize)> = (0..residual.len())
            .filter(|&l| residual[l] > 0)
            .map(|l| (problem.sku_orders[s].iter().map(|&o| delta(st, o, l)).sum(), l))
            .collect();
        options.sort_unstable();
        for (inc, l) in options {
            if current + inc >= search.best {
                continue;
            }
            let saved: Vec<(u32, u32)> = problem.sku_orders[s].iter().map(|&o| place(st, o, l)).collect();
            for &o in &problem.sku_orders[s] {
                st.remaining[o] -= 1;
            }
            residual[l] -= 1;
            assignment[s] = l;
            dfs(k + 1, st, residual, assignment, search, problem, current + inc, cfg, delta, place, sub_of);
            residual[l] += 1;
            for (&o, &(fa, fb)) in problem.sku_orders[s].iter().zip(&saved) {
                st.remaining[o] += 1;
                st.far_aisle[o] = fa;
                st.far_bay[o][sub_of[l]] = fb;
            }
        }
    }

    let base: i64 = (0..n_orders).map(|o| order_cost(&st, o)).sum();
    dfs(0, &mut st, &mut residual, &mut assignment, &mut search, problem, base, &bound, &delta, &place, &sub_of);
    if search.best == i64::MAX {
        return Err(OracleError::Infeasible);
    }
    let check = Reference::new(wh_layout).plan_cost(problem, &search.best_assignment, Policy::Return);
    assert_eq!(check, search.best, "farthest-bay rule disagrees with the grid walk");
    Ok(OracleResult {
        objective: search.best,
        assignment: search.best_assignment,
        evaluated: search.evaluated,
        elapsed: start.elapsed(),
    })
}

/// Minimum-cost assignment of every row to a distinct column (rows <= columns),
/// by the shortest augmenting path method.
pub fn min_cost_assignment(w: &[Vec<f64>]) -> f64 {
    let n = w.len();
    if n == 0 {
        return 0.0;
    }
    let m = w[0].len();
    assert!(n <= m);
    let inf = f64::INFINITY;
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; m + 1];
    let mut p = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0;
        let mut minv = vec![inf; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta = inf;
            let mut j1 = 0;
            for j in 1..=m {
                if !used[j] {
                    let cur = w[i0 - 1][j - 1] - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = j0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    (1..=m).filter(|&j| p[j] != 0).map(|j| w[p[j] - 1][j - 1]).sum()
}

/// Cheapest reduced cost over every feasible stop multiset of one order.
/// Returns `None` when no multiset satisfies the mandatory and capacity limits.
pub fn enumerate_tours(problem: &Problem, pp: &PricingProblem, policy: Policy) -> Option<(f64, StopSet)> {
    assert!(pp.n_stops <= 6, "tour enumeration is limited to 6 stops");
    let reference = Reference::new(&problem.instance.layout);
    let n = pp.max_stops.len();
    let mut counts = vec![0u32; n];
    let mut best: Option<(f64, StopSet)> = None;

    fn rec(
        l: usize,
        left: u32,
        counts: &mut Vec<u32>,
        pp: &PricingProblem,
        visit: &mut dyn FnMut(&[u32]),
    ) {
        if l == counts.len() {
            if left == 0 {
                visit(counts);
            }
            return;
        }
        let lo = pp.mandatory[l];
        let hi = pp.max_stops[l].min(left);
        for c in lo..=hi {
            counts[l] = c;
            rec(l + 1, left - c, counts, pp, visit);
        }
        counts[l] = 0;
    }

    rec(0, pp.n_stops as u32, &mut counts, pp, &mut |a: &[u32]| {
        let stops: Vec<usize> = a.iter().enumerate().flat_map(|(l, &c)| std::iter::repeat(l).take(c as usize)).collect();
        let cost = reference.route_length(&stops, policy) as f64;
        let mut rc = cost - pp.mu;
        for (l, &c) in a.iter().enumerate() {
            if c > 0 {
                rc -= c as f64 * pp.pi[l] + pp.sigma[l];
            }
        }
        for cut in &pp.cuts {
            if cut.locations.iter().any(|&l| a[l] > 0) {
                rc -= cut.lambda;
            }
        }
        if best.as_ref().map_or(true, |b| rc < b.0 - 1e-12) {
            best = Some((rc, StopSet::new(a.iter().enumerate().map(|(l, &c)| (l, c)))));
        }
    });
    best
}

/// Largest violation `Σ_{l∈L̄} ξ_l − Σ_r ρ_r·[r visits L̄]` over all location
/// subsets with at least two elements. `routes` lists `(ρ, visited locations)`.
pub fn enumerate_sl_subsets(xi: &[f64], routes: &[(f64, Vec<usize>)]) -> Result<(f64, Vec<usize>), OracleError> {
    let n = xi.len();
    if n > 16 {
        return Err(OracleError::TooLarge(format!("{n} locations")));
    }
    let route_masks: Vec<(f64, u32)> =
        routes.iter().map(|(rho, locs)| (*rho, locs.iter().fold(0u32, |m, &l| m | (1 << l)))).collect();
    let mut best = (f64::NEG_INFINITY, Vec::new());
    for mask in 1u32..(1 << n) {
        if mask.count_ones() < 2 {
            continue;
        }
        let gain: f64 = (0..n).filter(|&l| mask & (1 << l) != 0).map(|l| xi[l]).sum();
        let loss: f64 = route_masks.iter().filter(|r| r.1 & mask != 0).map(|r| r.0).sum();
        let value = gain - loss;
        let subset: Vec<usize> = (0..n).filter(|&l| mask & (1 << l) != 0).collect();
        let better = value > best.0 + 1e-12
            || ((value - best.0).abs() <= 1e-12
                && (subset.len(), &subset) < (best.1.len(), &best.1));
        if better {
            best = (value, subset);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Instance, Layout};
    use std::collections::BTreeMap;

    fn layout(a: u32, b: u32) -> Layout {
        Layout::single_block(a, b, 1)
    }

    #[test]
    fn walk_single_stop_return() {
        let l = layout(3, 5);
        let loc = Layout::locations(&l).iter().find(|x| x.aisle == 3 && x.bay == 4).unwrap().id;
        assert_eq!(trace_policy_path(&[loc], Policy::Return, &l), 2 * (2 + 4));
        for p in Policy::ALL {
            assert_eq!(trace_policy_path(&[loc], p, &l), 12);
        }
    }

    #[test]
    fn grid_distances_match_examples() {
        let l = layout(3, 5);
        let g = GridDistances::new(&l);
        assert_eq!(g.between((0, 1), (1, 1)), 3);
        assert_eq!(g.location_distance(None, Some(13)), 6); // aisle 3, bay 4
    }

    #[test]
    fn placement_count_closed_form() {
        assert_eq!(placement_count(1, &[1, 1, 1]), 3);
        assert_eq!(placement_count(8, &[1; 8]), 40_320);
        assert_eq!(placement_count(2, &[2]), 1);
        assert_eq!(placement_count(3, &[2, 2]), 6);
    }

    #[test]
    fn enumeration_counts_match() {
        let inst = Instance {
            name: None,
            layout: Layout::single_block(1, 3, 1),
            skus: vec![0],
            orders: vec![vec![0]],
            fixed: vec![],
            seed: None,
            meta: BTreeMap::new(),
        };
        let p = Problem::new(inst).unwrap();
        let r = enumerate_slaprp(&p, Policy::Return).unwrap();
        assert_eq!(r.evaluated, 3);
        assert_eq!(r.objective, 2);
    }

    #[test]
    fn assignment_solver_small() {
        let w = vec![vec![4.0, 1.0, 3.0], vec![2.0, 0.0, 5.0]];
        assert_eq!(min_cost_assignment(&w), 3.0);
    }

    #[test]
    fn sl_subset_example() {
        let xi = [0.5, 0.5];
        let routes = vec![(0.5, vec![0]), (0.5, vec![1])];
        let (v, _) = enumerate_sl_subsets(&xi, &routes).unwrap();
        assert!(v.abs() < 1e-12);
        let routes = vec![(0.5, vec![0]), (0.4, vec![1])];
        let (v, s) = enumerate_sl_subsets(&xi, &routes).unwrap();
        assert!((v - 0.1).abs() < 1e-12);
        assert_eq!(s, vec![0, 1]);
    }
}

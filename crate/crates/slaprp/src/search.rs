//! Branch-and-bound over the restricted master: column generation, SL cuts,
//! location or combined branching with symmetry strengthening, primal heuristics.

use std::cmp::Ordering;
use std::collections::{BTreeSet, BinaryHeap};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cuts::{self, CutPool, SeparationOrder};
use crate::master::{Column, Master, MasterConfig, MasterError, RmpSolution, SlCut};
use crate::model::{Layout, Problem};
use crate::pricing::{Pricer, PricingConfig};
use crate::routing::{evaluate_plan, order_stops, route_cost, Policy, RoutingError, StopSet};

/// Integrality tolerance on ξ.
pub const INT_TOL: f64 = 1e-6;
/// Aisle branching is used when its best score reaches this value.
pub const AISLE_THRESHOLD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branching {
    Location,
    Combined,
}

impl std::str::FromStr for Branching {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "location" => Ok(Branching::Location),
            "combined" => Ok(Branching::Combined),
            _ => Err(format!("unknown branching `{s}` (location or combined)")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveConfig {
    pub policy: Policy,
    pub branching: Branching,
    pub symmetry: bool,
    /// Seconds.
    pub time_limit: f64,
    pub seed: u64,
    /// SL-1 rows in the master.
    pub sl1: bool,
    /// Separate SL cuts.
    pub cuts: bool,
    pub separation_decreasing: bool,
    pub cut_cap: usize,
    pub separation_depth: usize,
    /// Cut rounds per node.
    pub max_cut_rounds: usize,
    pub max_columns: usize,
    pub dominance: bool,
    pub first_stop_restriction: bool,
    pub gap_kill: bool,
    /// Stop after the root node.
    pub root_only: bool,
    pub node_limit: Option<usize>,
}

impl Default for SolveConfig {
    fn default() -> Self {
        SolveConfig {
            policy: Policy::Optimal,
            branching: Branching::Combined,
            symmetry: true,
            time_limit: 7200.0,
            seed: 0,
            sl1: true,
            cuts: true,
            separation_decreasing: true,
            cut_cap: cuts::ACTIVE_CAP,
            separation_depth: cuts::SEPARATION_DEPTH,
            max_cut_rounds: 50,
            max_columns: 30,
            dominance: true,
            first_stop_restriction: true,
            gap_kill: true,
            root_only: false,
            node_limit: None,
        }
    }
}

impl SolveConfig {
    pub fn pricing(&self) -> PricingConfig {
        PricingConfig {
            max_columns: self.max_columns,
            dominance: self.dominance,
            first_stop_restriction: self.first_stop_restriction,
            gap_kill: self.gap_kill,
            ..PricingConfig::default()
        }
    }

    /// Sets one `key = value` option.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, String> {
            v.parse().map_err(|_| format!("bad value `{v}` for `{key}`"))
        }
        let v = value.trim();
        match key.trim() {
            "policy" => self.policy = v.parse()?,
            "branching" => self.branching = v.parse()?,
            "symmetry" => self.symmetry = parse_bool(key, v)?,
            "time_limit" => self.time_limit = parse(key, v)?,
            "seed" => self.seed = parse(key, v)?,
            "sl1" => self.sl1 = parse_bool(key, v)?,
            "cuts" => self.cuts = parse_bool(key, v)?,
            "separation_order" => {
                self.separation_decreasing = match v {
                    "decreasing" => true,
                    "increasing" => false,
                    _ => return Err(format!("bad value `{v}` for `{key}`")),
                }
            }
            "cut_cap" => self.cut_cap = parse(key, v)?,
            "separation_depth" => self.separation_depth = parse(key, v)?,
            "max_cut_rounds" => self.max_cut_rounds = parse(key, v)?,
            "max_columns" => self.max_columns = parse(key, v)?,
            "dominance" => self.dominance = parse_bool(key, v)?,
            "first_stop_restriction" => self.first_stop_restriction = parse_bool(key, v)?,
            "gap_kill" => self.gap_kill = parse_bool(key, v)?,
            "root_only" => self.root_only = parse_bool(key, v)?,
            "node_limit" => self.node_limit = Some(parse(key, v)?),
            other => return Err(format!("unknown option `{other}`")),
        }
        Ok(())
    }

    /// Reads `key = value` lines; `#` starts a comment.
    pub fn apply_file(&mut self, text: &str) -> Result<(), String> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected key = value", i + 1))?;
            self.set(k, v).map_err(|e| format!("line {}: {e}", i + 1))?;
        }
        Ok(())
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, String> {
    match v {
        "true" | "on" | "yes" | "1" => Ok(true),
        "false" | "off" | "no" | "0" => Ok(false),
        _ => Err(format!("bad value `{v}` for `{key}`")),
    }
}

/// Smallest multiple of `2·gcd(D, d)` not below `lp − 1e-6`.
pub fn round_bound(lp: f64, layout: &Layout) -> i64 {
    let step = layout.bound_step();
    ((lp - 1e-6) / step as f64).ceil() as i64 * step
}

/// Branching decisions of a node, all expressed on ξ.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BranchState {
    /// ξ_ls = 1.
    pub forced: Vec<(usize, usize)>,
    /// ξ_ls = 0.
    pub forbidden: BTreeSet<(usize, usize)>,
    pub depth: usize,
    pub parent: Option<usize>,
}

impl BranchState {
    fn forced_at(&self, s: usize) -> Option<usize> {
        self.forced.iter().find(|p| p.0 == s).map(|p| p.1)
    }

    fn forbidden_of(&self, s: usize) -> Vec<usize> {
        self.forbidden.iter().filter(|p| p.0 == s).map(|p| p.1).collect()
    }

    fn child(&self, parent: usize, extra: &Restriction) -> BranchState {
        let mut c = self.clone();
        c.forced.extend(&extra.forced);
        c.forbidden.extend(&extra.forbidden);
        c.depth += 1;
        c.parent = Some(parent);
        c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Disjunction {
    /// ξ_ls ≥ 1 or ξ_ls ≤ 0.
    Location { sku: usize, loc: usize },
    /// Σ_{l in aisle} ξ_ls ≥ 1 or ≤ 0.
    Aisle { sku: usize, aisle: u32 },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Restriction {
    pub forced: Vec<(usize, usize)>,
    pub forbidden: Vec<(usize, usize)>,
}

/// The two children of a branching: SKU in / not in the target.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Children {
    pub one: Restriction,
    pub zero: Restriction,
}

/// Location branching: most fractional ξ weighted by demand.
pub fn select_branch_location(sol: &RmpSolution, problem: &Problem) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize, usize)> = None;
    for (s, row) in sol.xi.iter().enumerate() {
        let d = problem.demand(s);
        for (l, &x) in row.iter().enumerate() {
            let frac = x.min(1.0 - x);
            if frac <= INT_TOL {
                continue;
            }
            let score = d as f64 * frac;
            let cand = (score, d, s, l);
            let wins = match best {
                None => true,
                Some((bs, bd, _, _)) => score > bs + 1e-12 || ((score - bs).abs() <= 1e-12 && d > bd),
            };
            if wins {
                best = Some(cand);
            }
        }
    }
    best.map(|b| (b.2, b.3))
}

/// Combined branching: an aisle disjunction when one scores at least
/// [`AISLE_THRESHOLD`], a location disjunction otherwise.
pub fn select_branch_combined(sol: &RmpSolution, problem: &Problem) -> Option<Disjunction> {
    let layout = &problem.instance.layout;
    if layout.aisles > 1 {
        let mut best: Option<(f64, usize, usize, u32)> = None;
        for (s, row) in sol.xi.iter().enumerate() {
            let d = problem.demand(s);
            for a in 1..=layout.aisles {
                let mass: f64 =
                    row.iter().enumerate().filter(|(l, _)| problem.wh.locations[*l].aisle == a).map(|(_, x)| x).sum();
                let frac = mass.min(1.0 - mass);
                if frac <= INT_TOL {
                    continue;
                }
                let score = d as f64 * frac;
                let wins = match best {
                    None => true,
                    Some((bs, bd, _, _)) => score > bs + 1e-12 || ((score - bs).abs() <= 1e-12 && d > bd),
                };
                if wins {
                    best = Some((score, d, s, a));
                }
            }
        }
        if let Some((score, _, sku, aisle)) = best {
            if score >= AISLE_THRESHOLD {
                return Some(Disjunction::Aisle { sku, aisle });
            }
        }
    }
    select_branch_location(sol, problem).map(|(sku, loc)| Disjunction::Location { sku, loc })
}

/// SKUs interchangeable with `s` at this node: same order set, not pre-placed,
/// not forced, and carrying the same forbidden locations.
pub fn symmetric_skus(problem: &Problem, state: &BranchState, s: usize) -> Vec<usize> {
    let forb = state.forbidden_of(s);
    (0..problem.num_skus())
        .filter(|&t| {
            t == s
                || (problem.sku_orders[t] == problem.sku_orders[s]
                    && problem.fixed[t].is_none()
                    && state.forced_at(t).is_none()
                    && state.forbidden_of(t) == forb)
        })
        .collect()
}

/// Children of a disjunction; with `symmetry`, the zero side excludes every
/// interchangeable SKU from the target.
pub fn strengthen_branch(problem: &Problem, state: &BranchState, disj: Disjunction, symmetry: bool) -> Children {
    let sku = match disj {
        Disjunction::Location { sku, .. } | Disjunction::Aisle { sku, .. } => sku,
    };
    let group = if symmetry && problem.fixed[sku].is_none() && state.forced_at(sku).is_none() {
        symmetric_skus(problem, state, sku)
    } else {
        vec![sku]
    };
    let in_target = |l: usize| match disj {
        Disjunction::Location { loc, .. } => l == loc,
        Disjunction::Aisle { aisle, .. } => problem.wh.locations[l].aisle == aisle,
    };
    let n_l = problem.num_locations();
    let one = match disj {
        Disjunction::Location { sku, loc } => Restriction { forced: vec![(sku, loc)], forbidden: vec![] },
        Disjunction::Aisle { sku, .. } => {
            Restriction { forced: vec![], forbidden: (0..n_l).filter(|&l| !in_target(l)).map(|l| (sku, l)).collect() }
        }
    };
    let zero = Restriction {
        forced: vec![],
        forbidden: group.iter().flat_map(|&t| (0..n_l).filter(|&l| in_target(l)).map(move |l| (t, l))).collect(),
    };
    Children { one, zero }
}

/// A feasible plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Incumbent {
    /// Location of every SKU (by index).
    pub assignment: Vec<usize>,
    pub objective: i64,
    pub order_costs: Vec<i64>,
}

impl Incumbent {
    pub fn evaluate(problem: &Problem, assignment: Vec<usize>, policy: Policy) -> Result<Self, RoutingError> {
        let plan = evaluate_plan(problem, &assignment, policy)?;
        Ok(Incumbent { assignment, objective: plan.total, order_costs: plan.per_order.iter().map(|c| c.total).collect() })
    }

    pub fn columns(&self, problem: &Problem, policy: Policy) -> Vec<Column> {
        order_stops(problem, &self.assignment)
            .into_iter()
            .enumerate()
            .filter_map(|(o, st)| Column::route(problem, o, st, policy).ok())
            .collect()
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SearchError {
    #[error(transparent)]
    Master(#[from] MasterError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error("ξ is fractional")]
    Fractional,
    #[error("integral ξ costs {cost} but the master objective is {lp}")]
    CostMismatch { lp: f64, cost: i64 },
}

/// Plan read off an integral ξ. Its cost must equal the master objective.
pub fn extract_integer_solution(problem: &Problem, sol: &RmpSolution, policy: Policy) -> Result<Incumbent, SearchError> {
    let mut assignment = Vec::with_capacity(problem.num_skus());
    for row in &sol.xi {
        let mut at = None;
        for (l, &x) in row.iter().enumerate() {
            if x.min(1.0 - x) > INT_TOL {
                return Err(SearchError::Fractional);
            }
            if x > 0.5 {
                at = Some(l);
            }
        }
        assignment.push(at.ok_or(SearchError::Fractional)?);
    }
    let inc = Incumbent::evaluate(problem, assignment, policy)?;
    if (inc.objective as f64 - sol.objective).abs() > 1e-6 {
        return Err(SearchError::CostMismatch { lp: sol.objective, cost: inc.objective });
    }
    Ok(inc)
}

/// Greedy completion: keep fixed and forced SKUs, then repeatedly place the
/// (SKU, location) pair with the largest ξ that still fits.
pub fn primal_heuristic(problem: &Problem, sol: &RmpSolution, state: &BranchState, policy: Policy) -> Option<Incumbent> {
    let n_l = problem.num_locations();
    let mut at: Vec<Option<usize>> = problem.fixed.clone();
    for &(s, l) in &state.forced {
        at[s] = Some(l);
    }
    let mut room: Vec<i64> = (0..n_l).map(|l| problem.capacity(l) as i64).collect();
    for l in at.iter().flatten() {
        room[*l] -= 1;
    }
    if room.iter().any(|&r| r < 0) {
        return None;
    }
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for (s, row) in sol.xi.iter().enumerate() {
        if at[s].is_none() {
            pairs.extend(row.iter().enumerate().map(|(l, &x)| (x, s, l)));
        }
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    for (_, s, l) in pairs {
        if at[s].is_none() && room[l] > 0 {
            at[s] = Some(l);
            room[l] -= 1;
        }
    }
    let assignment: Option<Vec<usize>> = at.into_iter().collect();
    Incumbent::evaluate(problem, assignment?, policy).ok()
}

/// Random feasible plan improved by best-improvement moves and swaps of free
/// SKUs until no move helps.
pub fn initial_solution(problem: &Problem, policy: Policy, seed: u64) -> Result<Incumbent, RoutingError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_l = problem.num_locations();
    let mut assignment: Vec<usize> = vec![usize::MAX; problem.num_skus()];
    let mut room: Vec<u32> = (0..n_l).map(|l| problem.capacity(l)).collect();
    for (s, f) in problem.fixed.iter().enumerate() {
        if let Some(l) = *f {
            assignment[s] = l;
            room[l] -= 1;
        }
    }
    let mut slots: Vec<usize> = (0..n_l).flat_map(|l| std::iter::repeat(l).take(room[l] as usize)).collect();
    slots.shuffle(&mut rng);
    let free: Vec<usize> = (0..problem.num_skus()).filter(|&s| problem.fixed[s].is_none()).collect();
    for (&s, l) in free.iter().zip(slots) {
        assignment[s] = l;
        room[l] -= 1;
    }
    let mut costs: Vec<i64> = order_stops(problem, &assignment)
        .iter()
        .map(|st| route_cost(st, &problem.wh, policy).map(|c| c.total))
        .collect::<Result<_, _>>()?;

    let order_cost = |assignment: &[usize], o: usize| -> i64 {
        let st = StopSet::from_locations(problem.orders[o].iter().map(|&s| assignment[s]));
        route_cost(&st, &problem.wh, policy).map(|c| c.total).unwrap_or(i64::MAX / 4)
    };
    loop {
        // (delta, kind, a, b): kind 0 = move SKU a to location b, 1 = swap SKUs a and b.
        let mut best: Option<(i64, u8, usize, usize)> = None;
        let consider = |delta: i64, kind: u8, a: usize, b: usize, best: &mut Option<(i64, u8, usize, usize)>| {
            if delta < 0 && best.map_or(true, |x| delta < x.0) {
                *best = Some((delta, kind, a, b));
            }
        };
        for &s in &free {
            for l in 0..n_l {
                if room[l] == 0 || l == assignment[s] {
                    continue;
                }
                let old = assignment[s];
                assignment[s] = l;
                let delta: i64 =
                    problem.sku_orders[s].iter().map(|&o| order_cost(&assignment, o) - costs[o]).sum();
                assignment[s] = old;
                consider(delta, 0, s, l, &mut best);
            }
        }
        for (i, &s) in free.iter().enumerate() {
            for &t in &free[i + 1..] {
                if assignment[s] == assignment[t] {
                    continue;
                }
                let mut touched: Vec<usize> = problem.sku_orders[s].iter().chain(&problem.sku_orders[t]).copied().collect();
                touched.sort_unstable();
                touched.dedup();
                assignment.swap(s, t);
                let delta: i64 = touched.iter().map(|&o| order_cost(&assignment, o) - costs[o]).sum();
                assignment.swap(s, t);
                consider(delta, 1, s, t, &mut best);
            }
        }
        let Some((_, kind, a, b)) = best else { break };
        let touched: Vec<usize> = if kind == 0 {
            room[assignment[a]] += 1;
            room[b] -= 1;
            assignment[a] = b;
            problem.sku_orders[a].clone()
        } else {
            assignment.swap(a, b);
            problem.sku_orders[a].iter().chain(&problem.sku_orders[b]).copied().collect()
        };
        for o in touched {
            costs[o] = order_cost(&assignment, o);
        }
    }
    Incumbent::evaluate(problem, assignment, policy)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// Limit reached with an incumbent.
    Limit,
    NoIncumbent,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SolveStats {
    pub optimal: bool,
    pub lb: i64,
    pub ub: Option<i64>,
    /// 100 (ub − lb) / ub.
    pub gap: f64,
    pub time_s: f64,
    pub nodes: usize,
    /// SL cuts separated.
    pub cuts: usize,
    pub columns: usize,
    /// Root LP value after cuts, before rounding.
    pub root_lp: f64,
    pub root_lb: i64,
    pub lp_solves: usize,
    pub max_depth: usize,
    /// Nodes where ξ converged integral.
    pub integral_nodes: usize,
    /// Of those, nodes whose read-off plan did not cost the master objective.
    pub integral_mismatches: usize,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub incumbent: Option<Incumbent>,
    pub stats: SolveStats,
    /// Every separated SL cut.
    pub cuts: Vec<SlCut>,
}

struct Node {
    bound: i64,
    id: usize,
    state: BranchState,
}

impl PartialEq for Node {
    fn eq(&self, o: &Self) -> bool {
        self.cmp(o) == Ordering::Equal
    }
}
impl Eq for Node {}
impl PartialOrd for Node {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl Ord for Node {
    /// Max-heap order: lowest bound, then deepest, then oldest.
    fn cmp(&self, o: &Self) -> Ordering {
        o.bound.cmp(&self.bound).then(self.state.depth.cmp(&o.state.depth)).then(o.id.cmp(&self.id))
    }
}

/// Outcome of processing one node.
enum NodeResult {
    Pruned,
    Integral,
    Fractional(RmpSolution),
    TimeOut,
}

struct Solver<'a> {
    problem: &'a Problem,
    config: SolveConfig,
    master: Master<'a>,
    pricer: Pricer,
    pool: CutPool,
    incumbent: Option<Incumbent>,
    stats: SolveStats,
    start: Instant,
    /// Final LP value of the current node.
    node_lp: f64,
}

impl<'a> Solver<'a> {
    fn timed_out(&self) -> bool {
        self.start.elapsed().as_secs_f64() > self.config.time_limit
    }

    fn ub(&self) -> i64 {
        self.incumbent.as_ref().map_or(i64::MAX, |i| i.objective)
    }

    fn offer(&mut self, inc: Incumbent) {
        if inc.objective < self.ub() {
            for col in inc.columns(self.problem, self.config.policy) {
                self.master.add_column(col);
            }
            self.incumbent = Some(inc);
        }
    }

    fn solve_lp(&mut self) -> Result<Option<RmpSolution>, SearchError> {
        self.stats.lp_solves += 1;
        match self.master.solve() {
            Ok(s) => Ok(Some(s)),
            Err(MasterError::Infeasible) => Ok(None),
            Err(e) => Err(e.into()),
        }
    }

    /// Column generation to convergence; `None` when the node LP is infeasible.
    fn column_generation(&mut self) -> Result<Option<RmpSolution>, SearchError> {
        loop {
            let Some(sol) = self.solve_lp()? else { return Ok(None) };
            if self.timed_out() {
                return Ok(Some(sol));
            }
            let mut added = 0;
            for o in 0..self.problem.num_orders() {
                let pp = self.master.pricing_problem(o, &sol.duals);
                let out = self.pricer.price(&pp);
                for r in out.columns {
                    let col = Column { order: o, cost: r.cost, stops: r.stops, is_super: false };
                    if self.master.add_column(col).is_some() {
                        added += 1;
                    }
                }
            }
            if added == 0 {
                return Ok(Some(sol));
            }
        }
    }

    fn process(&mut self, state: &BranchState) -> Result<NodeResult, SearchError> {
        let forbidden: Vec<(usize, usize)> = state.forbidden.iter().copied().collect();
        if !self.master.set_node(&state.forced, &forbidden) {
            return Ok(NodeResult::Pruned);
        }
        let separate = self.config.cuts && state.depth <= self.config.separation_depth;
        let mut rounds = 0;
        let sol = loop {
            let Some(sol) = self.column_generation()? else { return Ok(NodeResult::Pruned) };
            self.node_lp = sol.objective;
            if self.timed_out() {
                return Ok(NodeResult::TimeOut);
            }
            if round_bound(sol.objective, &self.problem.instance.layout) >= self.ub() {
                return Ok(NodeResult::Pruned);
            }
            if !self.config.cuts || rounds >= self.config.max_cut_rounds {
                break sol;
            }
            rounds += 1;
            let removed = self.pool.deactivate_nonbinding(&sol);
            self.master.remove_cuts(&removed);
            let mut new_ids = self.pool.pool_check(&sol, self.master.columns());
            if separate {
                new_ids.extend(self.separate_all(&sol));
            }
            let mut activated = 0;
            for id in new_ids {
                if !self.pool.is_active(id) && self.pool.activate(id) {
                    self.master.add_cut(id, self.pool.get(id).clone());
                    activated += 1;
                }
            }
            if activated == 0 {
                break sol;
            }
        };
        if sol.xi_integral(INT_TOL) {
            self.stats.integral_nodes += 1;
            match extract_integer_solution(self.problem, &sol, self.config.policy) {
                Ok(inc) => {
                    self.offer(inc);
                    return Ok(NodeResult::Integral);
                }
                Err(SearchError::CostMismatch { .. }) => {
                    self.stats.integral_mismatches += 1;
                    let assignment = order_free_assignment(&sol);
                    if let Ok(inc) = Incumbent::evaluate(self.problem, assignment, self.config.policy) {
                        self.offer(inc);
                    }
                    return Ok(NodeResult::Integral);
                }
                Err(e) => return Err(e),
            }
        }
        if let Some(inc) = primal_heuristic(self.problem, &sol, state, self.config.policy) {
            self.offer(inc);
        }
        Ok(NodeResult::Fractional(sol))
    }

    /// New violated cuts, one per (order, SKU).
    fn separate_all(&mut self, sol: &RmpSolution) -> Vec<usize> {
        let dir = if self.config.separation_decreasing { SeparationOrder::Decreasing } else { SeparationOrder::Increasing };
        let mut found: Vec<(f64, usize)> = Vec::new();
        for (o, skus) in self.problem.orders.iter().enumerate() {
            let routes = cuts::support(o, sol, self.master.columns());
            for &s in skus {
                let (value, locations) = cuts::separate_value(&sol.xi[s], &routes, dir);
                if value > cuts::MIN_VIOLATION {
                    let (id, new) = self.pool.insert(SlCut { order: o, sku: s, locations });
                    if new {
                        found.push((value, id));
                    }
                }
            }
        }
        found.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        found.into_iter().map(|f| f.1).collect()
    }
}

fn order_free_assignment(sol: &RmpSolution) -> Vec<usize> {
    sol.xi
        .iter()
        .map(|row| row.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(l, _)| l).unwrap_or(0))
        .collect()
}

/// Solves an instance to optimality (or until a limit).
pub fn solve(problem: &Problem, config: &SolveConfig) -> Result<SolveResult, SearchError> {
    let start = Instant::now();
    let policy = config.policy;
    let first = initial_solution(problem, policy, config.seed)?;
    let big = 10 * first.objective.max(1);
    let master = Master::new(problem, MasterConfig { sl1: config.sl1 }, big)?;
    let pricer = Pricer::new(&problem.wh, policy, config.pricing())?;
    let mut pool = CutPool::new();
    pool.cap = config.cut_cap;
    let mut solver = Solver {
        problem,
        config: config.clone(),
        master,
        pricer,
        pool,
        incumbent: None,
        stats: SolveStats::default(),
        start,
        node_lp: 0.0,
    };
    solver.offer(first);

    let layout = &problem.instance.layout;
    let mut open = BinaryHeap::new();
    open.push(Node { bound: 0, id: 0, state: BranchState::default() });
    let mut next_id = 1;
    let mut limit_hit = false;
    let mut root_done = false;

    while let Some(node) = open.pop() {
        if node.bound >= solver.ub() {
            continue;
        }
        if solver.timed_out() || config.node_limit.is_some_and(|n| solver.stats.nodes >= n) {
            open.push(node);
            limit_hit = true;
            break;
        }
        solver.stats.nodes += 1;
        solver.stats.max_depth = solver.stats.max_depth.max(node.state.depth);
        let result = solver.process(&node.state)?;
        if !root_done {
            root_done = true;
            solver.stats.root_lp = solver.node_lp;
            solver.stats.root_lb = round_bound(solver.node_lp, layout);
        }
        match result {
            NodeResult::Pruned | NodeResult::Integral => {}
            NodeResult::TimeOut => {
                open.push(node);
                limit_hit = true;
                break;
            }
            NodeResult::Fractional(sol) => {
                let bound = round_bound(sol.objective, layout).max(node.bound);
                if bound >= solver.ub() {
                    continue;
                }
                if config.root_only {
                    open.push(Node { bound, ..node });
                    limit_hit = true;
                    break;
                }
                let disj = match config.branching {
                    Branching::Location => {
                        select_branch_location(&sol, problem).map(|(sku, loc)| Disjunction::Location { sku, loc })
                    }
                    Branching::Combined => select_branch_combined(&sol, problem),
                };
                let Some(disj) = disj else { continue };
                let kids = strengthen_branch(problem, &node.state, disj, config.symmetry);
                for extra in [&kids.one, &kids.zero] {
                    open.push(Node { bound, id: next_id, state: node.state.child(node.id, extra) });
                    next_id += 1;
                }
            }
        }
    }

    let ub = solver.ub();
    let global_lb = if limit_hit { open.iter().map(|n| n.bound).min().unwrap_or(ub).min(ub) } else { ub };
    let mut stats = solver.stats;
    stats.time_s = start.elapsed().as_secs_f64();
    stats.cuts = solver.pool.stats.separated;
    stats.columns = solver.master.columns().len();
    stats.ub = solver.incumbent.as_ref().map(|i| i.objective);
    stats.lb = if root_done { global_lb.max(stats.root_lb.min(ub)) } else { 0 };
    stats.optimal = !limit_hit && solver.incumbent.is_some();
    stats.gap = match stats.ub {
        Some(u) if u > 0 => 100.0 * (u - stats.lb) as f64 / u as f64,
        Some(_) => 0.0,
        None => 100.0,
    };
    let status = match (&solver.incumbent, stats.optimal) {
        (Some(_), true) => SolveStatus::Optimal,
        (Some(_), false) => SolveStatus::Limit,
        (None, _) => SolveStatus::NoIncumbent,
    };
    let cuts = (0..solver.pool.len()).map(|id| solver.pool.get(id).clone()).collect();
    Ok(SolveResult { status, incumbent: solver.incumbent, stats, cuts })
}

/// Root LP value of the master (no rounding), for bound comparisons.
pub fn root_bound(problem: &Problem, policy: Policy, sl1: bool, cuts: bool) -> Result<f64, SearchError> {
    let config = SolveConfig { policy, sl1, cuts, root_only: true, ..SolveConfig::default() };
    let first = initial_solution(problem, policy, config.seed)?;
    let master = Master::new(problem, MasterConfig { sl1 }, 10 * first.objective.max(1))?;
    let pricer = Pricer::new(&problem.wh, policy, config.pricing())?;
    let mut solver = Solver {
        problem,
        config,
        master,
        pricer,
        pool: CutPool::new(),
        incumbent: None,
        stats: SolveStats::default(),
        start: Instant::now(),
        node_lp: 0.0,
    };
    for col in first.columns(problem, policy) {
        solver.master.add_column(col);
    }
    match solver.process(&BranchState::default())? {
        NodeResult::Pruned => Err(SearchError::Master(MasterError::Infeasible)),
        _ => Ok(solver.node_lp),
    }
}

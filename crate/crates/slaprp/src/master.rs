//! Restricted master problem over assignment variables ξ and route columns ρ.
//!
//! Rows, in order: capacity per location, assignment per SKU, convexity per
//! order, linking per (order, location), SL-1 per (order, SKU, location), then
//! the active SL cuts. Fixed SKUs and branching decisions only move variable
//! bounds, so the static rows never change within a tree.

use std::collections::HashMap;
use std::path::Path;

use crate::lp::{backend_from_env, LpError, LpSolver, LpStatus, INF};
use crate::model::Problem;
use crate::pricing::{CutResource, PricingProblem};
use crate::routing::{route_cost, Policy, RoutingError, StopSet};

/// A route of one order, or that order's super column.
#[derive(Debug, Clone, PartialEq)]
pub struct Column {
    pub order: usize,
    pub cost: i64,
    pub stops: StopSet,
    pub is_super: bool,
}

impl Column {
    pub fn route(problem: &Problem, order: usize, stops: StopSet, policy: Policy) -> Result<Self, RoutingError> {
        let cost = route_cost(&stops, &problem.wh, policy)?.total;
        Ok(Column { order, cost, stops, is_super: false })
    }

    /// Stops `K_l` at every location, at cost `big`.
    pub fn super_column(problem: &Problem, order: usize, big: i64) -> Self {
        let stops = StopSet::new((0..problem.num_locations()).map(|l| (l, problem.capacity(l))));
        Column { order, cost: big, stops, is_super: true }
    }

    pub fn visits(&self, l: usize) -> bool {
        self.stops.count(l) > 0
    }

    pub fn visits_any(&self, locs: &[usize]) -> bool {
        locs.iter().any(|&l| self.visits(l))
    }
}

/// One super column per order.
pub fn add_super_columns(problem: &Problem, big: i64) -> Vec<Column> {
    (0..problem.num_orders()).map(|o| Column::super_column(problem, o, big)).collect()
}

/// Drops later columns with the same order and stop multiset.
pub fn column_pool_dedup(columns: Vec<Column>) -> Vec<Column> {
    let mut seen = std::collections::HashSet::new();
    columns.into_iter().filter(|c| seen.insert((c.order, c.is_super, c.stops.clone()))).collect()
}

/// An SL inequality: routes of `order` visiting `locations` must carry at
/// least the ξ mass SKU `sku` puts on them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SlCut {
    pub order: usize,
    pub sku: usize,
    pub locations: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualValues {
    /// Convexity, per order.
    pub mu: Vec<f64>,
    /// Linking, `[order][location]`.
    pub pi: Vec<Vec<f64>>,
    /// SL-1, `[order][k][location]` for the k-th SKU of the order (0 when
    /// the row does not exist).
    pub sigma: Vec<Vec<Vec<f64>>>,
    /// Active cuts: `(cut id, dual)`.
    pub lambda: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RmpSolution {
    pub objective: f64,
    /// `[sku][location]`.
    pub xi: Vec<Vec<f64>>,
    /// Per pool column.
    pub rho: Vec<f64>,
    pub duals: DualValues,
    /// Active cuts: `(cut id, row slack)`.
    pub cut_slack: Vec<(usize, f64)>,
}

impl RmpSolution {
    pub fn xi_integral(&self, tol: f64) -> bool {
        self.xi.iter().flatten().all(|&v| v.min(1.0 - v).abs() <= tol)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum MasterError {
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error("restricted master is infeasible")]
    Infeasible,
    #[error("restricted master solve failed with status {0:?}")]
    Failed(LpStatus),
}

#[derive(Debug, Clone, Copy)]
pub struct MasterConfig {
    /// Keep the SL-1 rows (off only for bound comparisons).
    pub sl1: bool,
}

impl Default for MasterConfig {
    fn default() -> Self {
        MasterConfig { sl1: true }
    }
}

pub struct Master<'a> {
    pub problem: &'a Problem,
    lp: Box<dyn LpSolver>,
    config: MasterConfig,
    /// `[sku][location]` -> LP column.
    xi_col: Vec<Vec<Option<usize>>>,
    /// `[order][location]`; absent where no SKU of the order can sit, since
    /// the row would only say that visits are nonnegative.
    linking_row: Vec<Vec<Option<usize>>>,
    /// `[order][k][location]`.
    sl1_row: Vec<Vec<Vec<Option<usize>>>>,
    convexity_row: Vec<usize>,
    n_static_rows: usize,
    pool: Vec<Column>,
    pool_key: HashMap<(usize, bool, StopSet), usize>,
    lp_col: Vec<usize>,
    /// Active cut ids with their cut, in row order.
    active: Vec<(usize, SlCut)>,
    /// Current node restrictions.
    mandatory: Vec<Vec<u32>>,
    max_stops: Vec<Vec<u32>>,
    node_infeasible: bool,
}

impl<'a> Master<'a> {
    /// Builds the static rows, the ξ columns and one super column per order.
    pub fn new(problem: &'a Problem, config: MasterConfig, big: i64) -> Result<Self, MasterError> {
        let mut lp = backend_from_env()?;
        let n_l = problem.num_locations();
        let n_s = problem.num_skus();
        let n_o = problem.num_orders();

        let cap_rows: Vec<usize> = (0..n_l).map(|l| lp.add_row(-INF, problem.capacity(l) as f64, &[])).collect();
        let assign_rows: Vec<usize> = (0..n_s).map(|_| lp.add_row(1.0, 1.0, &[])).collect();
        let convexity_row: Vec<usize> = (0..n_o).map(|_| lp.add_row(1.0, 1.0, &[])).collect();
        // Free SKUs only get columns where pre-placed SKUs leave room.
        let mut spare: Vec<u32> = (0..n_l).map(|l| problem.capacity(l)).collect();
        for f in problem.fixed.iter().flatten() {
            spare[*f] = spare[*f].saturating_sub(1);
        }
        let exists = |s: usize, l: usize| problem.fixed[s].map_or(spare[l] > 0, |f| f == l);
        let linking_row: Vec<Vec<Option<usize>>> = problem
            .orders
            .iter()
            .map(|skus| {
                (0..n_l).map(|l| skus.iter().any(|&s| exists(s, l)).then(|| lp.add_row(0.0, INF, &[]))).collect()
            })
            .collect();
        let mut sl1_row = Vec::with_capacity(n_o);
        for skus in &problem.orders {
            let rows: Vec<Vec<Option<usize>>> = skus
                .iter()
                .map(|&s| {
                    (0..n_l).map(|l| (config.sl1 && exists(s, l)).then(|| lp.add_row(0.0, INF, &[]))).collect()
                })
                .collect();
            sl1_row.push(rows);
        }
        let n_static_rows = lp.num_rows();

        let mut xi_col = vec![vec![None; n_l]; n_s];
        for s in 0..n_s {
            for l in 0..n_l {
                if !exists(s, l) {
                    continue;
                }
                let mut entries = vec![(cap_rows[l], 1.0), (assign_rows[s], 1.0)];
                for &o in &problem.sku_orders[s] {
                    entries.push((linking_row[o][l].expect("linking row exists for a placeable SKU"), -1.0));
                    let k = problem.orders[o].iter().position(|&x| x == s).unwrap();
                    if let Some(r) = sl1_row[o][k][l] {
                        entries.push((r, -1.0));
                    }
                }
                entries.sort_unstable_by_key(|e| e.0);
                let lo = if problem.fixed[s].is_some() { 1.0 } else { 0.0 };
                xi_col[s][l] = Some(lp.add_col(0.0, lo, 1.0, &entries));
            }
        }

        let mut master = Master {
            problem,
            lp,
            config,
            xi_col,
            linking_row,
            sl1_row,
            convexity_row,
            n_static_rows,
            pool: Vec::new(),
            pool_key: HashMap::new(),
            lp_col: Vec::new(),
            active: Vec::new(),
            mandatory: Vec::new(),
            max_stops: Vec::new(),
            node_infeasible: false,
        };
        master.set_node(&[], &[]);
        for col in add_super_columns(problem, big) {
            master.add_column(col);
        }
        Ok(master)
    }

    pub fn num_rows(&self) -> usize {
        self.lp.num_rows()
    }

    pub fn num_static_rows(&self) -> usize {
        self.n_static_rows
    }

    pub fn columns(&self) -> &[Column] {
        &self.pool
    }

    pub fn active_cuts(&self) -> &[(usize, SlCut)] {
        &self.active
    }

    pub fn config(&self) -> MasterConfig {
        self.config
    }

    fn entries(&self, col: &Column) -> Vec<(usize, f64)> {
        let o = col.order;
        let mut e = vec![(self.convexity_row[o], 1.0)];
        for &(l, a) in col.stops.pairs() {
            if let Some(r) = self.linking_row[o][l] {
                e.push((r, a as f64));
            }
            for rows in &self.sl1_row[o] {
                if let Some(r) = rows[l] {
                    e.push((r, 1.0));
                }
            }
        }
        for (i, (_, cut)) in self.active.iter().enumerate() {
            if cut.order == o && col.visits_any(&cut.locations) {
                e.push((self.n_static_rows + i, 1.0));
            }
        }
        e.sort_unstable_by_key(|x| x.0);
        e
    }

    /// Whether the column respects the current node's mandatory stops and
    /// free capacity. Super columns always do.
    pub fn compatible(&self, col: &Column) -> bool {
        if col.is_super {
            return true;
        }
        let o = col.order;
        (0..self.problem.num_locations()).all(|l| {
            let a = col.stops.count(l);
            a >= self.mandatory[o][l] && a <= self.max_stops[o][l]
        })
    }

    /// Adds a column to the pool and the LP; returns `None` for duplicates.
    pub fn add_column(&mut self, col: Column) -> Option<usize> {
        let key = (col.order, col.is_super, col.stops.clone());
        if self.pool_key.contains_key(&key) {
            return None;
        }
        let entries = self.entries(&col);
        let ub = if self.compatible(&col) { INF } else { 0.0 };
        let j = self.lp.add_col(col.cost as f64, 0.0, ub, &entries);
        let id = self.pool.len();
        self.pool_key.insert(key, id);
        self.pool.push(col);
        self.lp_col.push(j);
        Some(id)
    }

    /// Applies node restrictions: `forced` pairs get ξ = 1, `forbidden` ξ = 0.
    /// Returns false if a forced pair cannot exist (its SKU is fixed elsewhere).
    pub fn set_node(&mut self, forced: &[(usize, usize)], forbidden: &[(usize, usize)]) -> bool {
        let p = self.problem;
        let n_l = p.num_locations();
        let mut at: Vec<Option<usize>> = p.fixed.clone();
        self.node_infeasible = false;
        for s in 0..p.num_skus() {
            for l in 0..n_l {
                if let Some(c) = self.xi_col[s][l] {
                    let lo = if p.fixed[s].is_some() { 1.0 } else { 0.0 };
                    self.lp.set_col_bounds(c, lo, 1.0);
                }
            }
        }
        for &(s, l) in forbidden {
            if let Some(c) = self.xi_col[s][l] {
                self.lp.set_col_bounds(c, 0.0, 0.0);
            }
        }
        for &(s, l) in forced {
            match self.xi_col[s][l] {
                Some(c) => {
                    self.lp.set_col_bounds(c, 1.0, 1.0);
                    at[s] = Some(l);
                }
                None => self.node_infeasible = true,
            }
        }
        let mut occupancy = vec![0u32; n_l];
        for l in at.iter().flatten() {
            occupancy[*l] += 1;
        }
        self.mandatory = vec![vec![0; n_l]; p.num_orders()];
        self.max_stops = vec![vec![0; n_l]; p.num_orders()];
        for (o, skus) in p.orders.iter().enumerate() {
            for &s in skus {
                if let Some(l) = at[s] {
                    self.mandatory[o][l] += 1;
                }
            }
            for l in 0..n_l {
                let external = occupancy[l] - self.mandatory[o][l];
                self.max_stops[o][l] = p.capacity(l).saturating_sub(external);
            }
        }
        for i in 0..self.pool.len() {
            let ub = if self.compatible(&self.pool[i]) { INF } else { 0.0 };
            self.lp.set_col_bounds(self.lp_col[i], 0.0, ub);
        }
        !self.node_infeasible
    }

    pub fn mandatory(&self, order: usize) -> &[u32] {
        &self.mandatory[order]
    }

    pub fn max_stops(&self, order: usize) -> &[u32] {
        &self.max_stops[order]
    }

    /// Adds the row of an SL cut.
    pub fn add_cut(&mut self, id: usize, cut: SlCut) {
        let mut entries = Vec::new();
        for &l in &cut.locations {
            if let Some(c) = self.xi_col[cut.sku][l] {
                entries.push((c, -1.0));
            }
        }
        for (i, col) in self.pool.iter().enumerate() {
            if col.order == cut.order && col.visits_any(&cut.locations) {
                entries.push((self.lp_col[i], 1.0));
            }
        }
        entries.sort_unstable_by_key(|e| e.0);
        let row = self.lp.add_row(0.0, INF, &entries);
        debug_assert_eq!(row, self.n_static_rows + self.active.len());
        self.active.push((id, cut));
    }

    /// Removes the rows of the given cut ids.
    pub fn remove_cuts(&mut self, ids: &[usize]) {
        let rows: Vec<usize> = self
            .active
            .iter()
            .enumerate()
            .filter(|(_, (id, _))| ids.contains(id))
            .map(|(i, _)| self.n_static_rows + i)
            .collect();
        if rows.is_empty() {
            return;
        }
        self.lp.delete_rows(&rows);
        self.active.retain(|(id, _)| !ids.contains(id));
    }

    /// Solves the LP, retrying once from a cold start on solver trouble.
    pub fn solve(&mut self) -> Result<RmpSolution, MasterError> {
        if self.node_infeasible {
            return Err(MasterError::Infeasible);
        }
        let mut status = self.lp.solve()?;
        if !matches!(status, LpStatus::Optimal | LpStatus::Infeasible) {
            self.lp.reset_basis();
            status = self.lp.solve()?;
        }
        match status {
            LpStatus::Optimal => Ok(self.extract()),
            LpStatus::Infeasible => Err(MasterError::Infeasible),
            s => Err(MasterError::Failed(s)),
        }
    }

    fn extract(&self) -> RmpSolution {
        let x = self.lp.col_values();
        let y = self.lp.row_duals();
        let rv = self.lp.row_values();
        let xi = self
            .xi_col
            .iter()
            .map(|row| row.iter().map(|c| c.map_or(0.0, |c| x[c])).collect())
            .collect();
        let rho = self.lp_col.iter().map(|&c| x[c]).collect();
        let duals = DualValues {
            mu: self.convexity_row.iter().map(|&r| y[r]).collect(),
            pi: self.linking_row.iter().map(|rows| rows.iter().map(|r| r.map_or(0.0, |r| y[r])).collect()).collect(),
            sigma: self
                .sl1_row
                .iter()
                .map(|ks| ks.iter().map(|ls| ls.iter().map(|r| r.map_or(0.0, |r| y[r])).collect()).collect())
                .collect(),
            lambda: self.active.iter().enumerate().map(|(i, (id, _))| (*id, y[self.n_static_rows + i])).collect(),
        };
        let cut_slack =
            self.active.iter().enumerate().map(|(i, (id, _))| (*id, rv[self.n_static_rows + i])).collect();
        RmpSolution { objective: self.lp.objective(), xi, rho, duals, cut_slack }
    }

    /// Reduced cost of a column against a set of duals.
    pub fn reduced_cost(&self, col: &Column, duals: &DualValues) -> f64 {
        reduced_cost(col, duals, &self.active)
    }

    /// Pricing input for one order at the current node.
    pub fn pricing_problem(&self, order: usize, duals: &DualValues) -> PricingProblem {
        let n_l = self.problem.num_locations();
        let sigma = (0..n_l).map(|l| duals.sigma[order].iter().map(|k| k[l]).sum()).collect();
        let mut grouped: Vec<CutResource> = Vec::new();
        for ((_, cut), &(_, lambda)) in self.active.iter().zip(&duals.lambda) {
            if cut.order != order || lambda <= 0.0 {
                continue;
            }
            match grouped.iter_mut().find(|g| g.locations == cut.locations) {
                Some(g) => g.lambda += lambda,
                None => grouped.push(CutResource { locations: cut.locations.clone(), lambda }),
            }
        }
        PricingProblem {
            order,
            n_stops: self.problem.orders[order].len(),
            mu: duals.mu[order],
            pi: duals.pi[order].clone(),
            sigma,
            cuts: grouped,
            mandatory: self.mandatory[order].clone(),
            max_stops: self.max_stops[order].clone(),
        }
    }

    /// Writes the current LP (`.lp` or `.mps`) for debugging.
    pub fn write_lp(&mut self, path: &Path) -> Result<(), MasterError> {
        Ok(self.lp.write_model(path)?)
    }
}

/// c − μ_o − Σ a^l π_lo − Σ b^l Σ_s σ_osl − Σ_cuts δ λ.
pub fn reduced_cost(col: &Column, duals: &DualValues, active: &[(usize, SlCut)]) -> f64 {
    let o = col.order;
    let mut rc = col.cost as f64 - duals.mu[o];
    for &(l, a) in col.stops.pairs() {
        rc -= a as f64 * duals.pi[o][l];
        rc -= duals.sigma[o].iter().map(|k| k[l]).sum::<f64>();
    }
    for ((_, cut), &(_, lambda)) in active.iter().zip(&duals.lambda) {
        if cut.order == o && col.visits_any(&cut.locations) {
            rc -= lambda;
        }
    }
    rc
}

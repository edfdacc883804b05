//! Artifacts and command bodies behind the `slaprp` binary: solution files,
//! validation, benchmark reports and model export.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::compact::{
    emit_assignment_polytope, emit_compact_mcf, emit_compact_mtz, emit_policy_mip, lp_relaxation_value,
    CompactError, MipModel, MipOptions, ModelFormat,
};
use crate::lp::backend_from_env;
use crate::model::{Instance, Problem};
use crate::routing::{evaluate_plan, order_stops, Policy};
use crate::search::{round_bound, root_bound, solve, Branching, Incumbent, SolveConfig, SolveStats, SolveStatus};

/// First line of every benchmark CSV.
pub const CSV_SCHEMA: &str = "# slaprp-bench v1";

/// Hex SHA-256 of the canonical JSON form.
pub fn instance_hash(inst: &Instance) -> String {
    Sha256::digest(inst.to_json().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderRoute {
    pub order: usize,
    /// Visited location ids, aisle-major; repeated for multiple picks.
    pub stops: Vec<usize>,
    pub cost: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionFile {
    pub instance: String,
    pub instance_hash: String,
    pub policy: Policy,
    /// `(sku id, location)` for every SKU.
    pub assignment: Vec<(u32, usize)>,
    pub routes: Vec<OrderRoute>,
    pub total: i64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stats: Option<SolveStats>,
}

impl SolutionFile {
    pub fn new(problem: &Problem, policy: Policy, inc: &Incumbent) -> Self {
        let inst = &problem.instance;
        let routes = order_stops(problem, &inc.assignment)
            .iter()
            .zip(&inc.order_costs)
            .enumerate()
            .map(|(order, (st, &cost))| OrderRoute { order, stops: st.locations().collect(), cost })
            .collect();
        SolutionFile {
            instance: inst.name.clone().unwrap_or_default(),
            instance_hash: instance_hash(inst),
            policy,
            assignment: inst.skus.iter().zip(&inc.assignment).map(|(&s, &l)| (s, l)).collect(),
            routes,
            total: inc.objective,
            stats: None,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("solution serialises")
    }
}

/// Rechecks a solution file against its instance; returns one line per problem found.
pub fn validate_solution(problem: &Problem, sol: &SolutionFile) -> Vec<String> {
    let mut diag = Vec::new();
    if sol.instance_hash != instance_hash(&problem.instance) {
        diag.push("instance hash mismatch".to_string());
    }
    let n_loc = problem.num_locations();
    let mut assignment = vec![None; problem.num_skus()];
    for &(sku, l) in &sol.assignment {
        let Some(s) = problem.sku_index(sku) else {
            diag.push(format!("unknown sku {sku}"));
            continue;
        };
        if l >= n_loc {
            diag.push(format!("sku {sku} assigned to unknown location {l}"));
        } else if assignment[s].replace(l).is_some() {
            diag.push(format!("sku {sku} assigned twice"));
        }
    }
    for (s, a) in assignment.iter().enumerate() {
        let sku = problem.instance.skus[s];
        match (a, problem.fixed[s]) {
            (None, _) => diag.push(format!("sku {sku} not assigned")),
            (Some(l), Some(f)) if *l != f => {
                diag.push(format!("fixed assignment violated: sku {sku} at location {l}, fixed at {f}"))
            }
            _ => {}
        }
    }
    let mut used = vec![0u32; n_loc];
    for l in assignment.iter().flatten() {
        used[*l] += 1;
    }
    for (l, &u) in used.iter().enumerate() {
        if u > problem.capacity(l) {
            diag.push(format!("capacity exceeded at location {l}: {u} > {}", problem.capacity(l)));
        }
    }
    if assignment.iter().any(Option::is_none) {
        return diag;
    }
    let assignment: Vec<usize> = assignment.into_iter().flatten().collect();
    let plan = match evaluate_plan(problem, &assignment, sol.policy) {
        Ok(p) => p,
        Err(e) => {
            diag.push(format!("cannot evaluate plan: {e}"));
            return diag;
        }
    };
    let stops = order_stops(problem, &assignment);
    if sol.routes.len() != problem.num_orders() {
        diag.push(format!("{} routes for {} orders", sol.routes.len(), problem.num_orders()));
    }
    for r in &sol.routes {
        let Some(c) = plan.per_order.get(r.order) else {
            diag.push(format!("route for unknown order {}", r.order));
            continue;
        };
        if r.cost != c.total {
            diag.push(format!("order {}: cost {} in file, {} recomputed", r.order, r.cost, c.total));
        }
        if !stops[r.order].locations().eq(r.stops.iter().copied()) {
            diag.push(format!("order {}: stops do not match the assignment", r.order));
        }
    }
    if sol.total != plan.total {
        diag.push(format!("total mismatch: {} in file, {} recomputed", sol.total, plan.total));
    }
    diag
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Limit => "limit",
        SolveStatus::NoIncumbent => "no_incumbent",
    }
}

/// Human-readable summary of one solve.
pub fn stats_table(name: &str, policy: Policy, status: SolveStatus, s: &SolveStats) -> String {
    let ub = s.ub.map_or("-".to_string(), |u| u.to_string());
    let rows: [(&str, String); 11] = [
        ("instance", name.to_string()),
        ("policy", policy.to_string()),
        ("status", status_name(status).to_string()),
        ("objective", ub),
        ("lower bound", s.lb.to_string()),
        ("gap %", format!("{:.2}", s.gap)),
        ("root bound", s.root_lb.to_string()),
        ("nodes", s.nodes.to_string()),
        ("cuts", s.cuts.to_string()),
        ("columns", s.columns.to_string()),
        ("time s", format!("{:.2}", s.time_s)),
    ];
    let mut out = String::new();
    for (k, v) in rows {
        let _ = writeln!(out, "{k:<12} {v}");
    }
    out
}

/// Compact formulations that can be exported.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    Assignment,
    Mtz,
    Mcf,
    Policy(Policy),
}

impl std::str::FromStr for Formulation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "assignment" => Ok(Formulation::Assignment),
            "mtz" => Ok(Formulation::Mtz),
            "mcf" => Ok(Formulation::Mcf),
            "optimal" => Err("use mtz or mcf for optimal routing".to_string()),
            other => other.parse().map(Formulation::Policy),
        }
    }
}

pub fn build_model(problem: &Problem, f: Formulation, opts: MipOptions) -> Result<MipModel, CompactError> {
    match f {
        Formulation::Assignment => Ok(emit_assignment_polytope(problem)),
        Formulation::Mtz => emit_compact_mtz(problem),
        Formulation::Mcf => emit_compact_mcf(problem),
        Formulation::Policy(p) => emit_policy_mip(problem, p, opts),
    }
}

/// Writes the model and its variable manifest (`<path>.manifest.json`); returns the manifest path.
pub fn export_model(
    problem: &Problem,
    f: Formulation,
    opts: MipOptions,
    big_m: bool,
    format: ModelFormat,
    path: &Path,
) -> Result<PathBuf, CompactError> {
    let mut model = build_model(problem, f, opts)?;
    if big_m {
        model = model.with_big_m()?;
    }
    model.write(path, format)?;
    let mut manifest = path.as_os_str().to_owned();
    manifest.push(".manifest.json");
    let manifest = PathBuf::from(manifest);
    std::fs::write(&manifest, model.manifest_json())?;
    Ok(manifest)
}

/// One solver setup in a benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchSetup {
    pub branching: Branching,
    pub symmetry: bool,
}

impl BenchSetup {
    pub fn label(&self) -> String {
        let b = match self.branching {
            Branching::Location => "location",
            Branching::Combined => "combined",
        };
        format!("{b}{}", if self.symmetry { "+sym" } else { "-sym" })
    }

    pub fn grid() -> Vec<BenchSetup> {
        let mut out = Vec::new();
        for branching in [Branching::Location, Branching::Combined] {
            for symmetry in [false, true] {
                out.push(BenchSetup { branching, symmetry });
            }
        }
        out
    }
}

/// Root bounds of the formulations, rounded like every reported bound.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BoundColumns {
    pub lp: Option<i64>,
    pub lp_mcf: Option<i64>,
    pub dw: Option<i64>,
    pub dw_sl1: Option<i64>,
    pub dw_sl: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub instance: String,
    pub group: String,
    pub policy: Policy,
    pub config: String,
    /// `optimal`, `limit`, `no_incumbent` or `error`.
    pub status: String,
    pub opt: bool,
    pub lb: Option<i64>,
    pub ub: Option<i64>,
    pub gap: Option<f64>,
    /// Wall time in milliseconds precision.
    pub time_s: Option<f64>,
    pub nodes: usize,
    pub cuts: usize,
    pub columns: usize,
    pub bounds: Option<BoundColumns>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: String,
    pub policy: Policy,
    pub config: String,
    pub instances: usize,
    pub solved: usize,
    pub gap: f64,
    pub time_s: f64,
    pub nodes: f64,
    pub cuts: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub groups: Vec<GroupRow>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("missing column `{0}`")]
    Column(&'static str),
    #[error("bad value `{1}` in column `{0}`")]
    Value(&'static str, String),
    #[error("expected schema line `{CSV_SCHEMA}`")]
    Schema,
}

const BASE_COLS: [&str; 10] = ["instance", "group", "policy", "config", "status", "opt", "lb", "ub", "gap", "time_s"];
const TAIL_COLS: [&str; 3] = ["nodes", "cuts", "columns"];
const BOUND_COLS: [&str; 5] = ["lp", "lp_mcf", "dw", "dw_sl1", "dw_sl"];

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map_or(String::new(), T::to_string)
}

/// Instance group: the name without its trailing `-seed` part.
pub fn group_of(name: &str) -> String {
    match name.rsplit_once('-') {
        Some((head, tail)) if tail.chars().all(|c| c.is_ascii_digit()) && !head.is_empty() => head.to_string(),
        _ => name.to_string(),
    }
}

impl BenchReport {
    pub fn new(rows: Vec<BenchRow>) -> Self {
        let mut acc: BTreeMap<(String, String, String), Vec<&BenchRow>> = BTreeMap::new();
        for r in &rows {
            acc.entry((r.group.clone(), r.policy.to_string(), r.config.clone())).or_default().push(r);
        }
        let groups = acc
            .into_values()
            .map(|rs| {
                let ok: Vec<&&BenchRow> = rs.iter().filter(|r| r.error.is_none()).collect();
                let mean = |f: &dyn Fn(&BenchRow) -> f64| {
                    if ok.is_empty() {
                        0.0
                    } else {
                        ok.iter().map(|r| f(r)).sum::<f64>() / ok.len() as f64
                    }
                };
                GroupRow {
                    group: rs[0].group.clone(),
                    policy: rs[0].policy,
                    config: rs[0].config.clone(),
                    instances: rs.len(),
                    solved: rs.iter().filter(|r| r.opt).count(),
                    gap: mean(&|r| r.gap.unwrap_or(100.0)),
                    time_s: mean(&|r| r.time_s.unwrap_or(0.0)),
                    nodes: mean(&|r| r.nodes as f64),
                    cuts: mean(&|r| r.cuts as f64),
                }
            })
            .collect();
        BenchReport { rows, groups }
    }

    fn has_bounds(&self) -> bool {
        self.rows.iter().any(|r| r.bounds.is_some())
    }

    /// Per-instance rows. Without `timing` the wall-time column is left out so
    /// that repeated runs give identical files.
    pub fn to_csv(&self, timing: bool) -> String {
        let bounds = self.has_bounds();
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header: Vec<&str> = BASE_COLS.iter().copied().filter(|c| timing || *c != "time_s").collect();
        header.extend(TAIL_COLS);
        if bounds {
            header.extend(BOUND_COLS);
        }
        header.push("error");
        w.write_record(&header).unwrap();
        for r in &self.rows {
            let mut rec = vec![
                r.instance.clone(),
                r.group.clone(),
                r.policy.to_string(),
                r.config.clone(),
                r.status.clone(),
                r.opt.to_string(),
                opt_str(&r.lb),
                opt_str(&r.ub),
                opt_str(&r.gap),
            ];
            if timing {
                rec.push(opt_str(&r.time_s));
            }
            rec.extend([r.nodes.to_string(), r.cuts.to_string(), r.columns.to_string()]);
            if bounds {
                let b = r.bounds.clone().unwrap_or_default();
                rec.extend([b.lp, b.lp_mcf, b.dw, b.dw_sl1, b.dw_sl].iter().map(opt_str));
            }
            rec.push(r.error.clone().unwrap_or_default());
            w.write_record(&rec).unwrap();
        }
        let body = String::from_utf8(w.into_inner().unwrap()).unwrap();
        format!("{CSV_SCHEMA}\n{body}")
    }

    pub fn from_csv(text: &str) -> Result<Self, ReportError> {
        let body = text.strip_prefix(CSV_SCHEMA).and_then(|t| t.strip_prefix('\n')).ok_or(ReportError::Schema)?;
        let mut rd = csv::Reader::from_reader(body.as_bytes());
        let header = rd.headers()?.clone();
        let idx = |c: &'static str| header.iter().position(|h| h == c);
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let get = |c: &'static str| idx(c).map(|i| rec.get(i).unwrap_or("")).ok_or(ReportError::Column(c));
            fn parse<T: std::str::FromStr>(c: &'static str, v: &str) -> Result<T, ReportError> {
                v.parse().map_err(|_| ReportError::Value(c, v.to_string()))
            }
            let opt = |c: &'static str| -> Result<Option<String>, ReportError> {
                Ok(match idx(c) {
                    None => None,
                    Some(i) => Some(rec.get(i).unwrap_or("")).filter(|v| !v.is_empty()).map(str::to_string),
                })
            };
            let opt_i = |c: &'static str| opt(c)?.map(|v| parse::<i64>(c, &v)).transpose();
            let opt_f = |c: &'static str| opt(c)?.map(|v| parse::<f64>(c, &v)).transpose();
            let bounds = if idx("dw").is_some() {
                Some(BoundColumns {
                    lp: opt_i("lp")?,
                    lp_mcf: opt_i("lp_mcf")?,
                    dw: opt_i("dw")?,
                    dw_sl1: opt_i("dw_sl1")?,
                    dw_sl: opt_i("dw_sl")?,
                })
            } else {
                None
            };
            rows.push(BenchRow {
                instance: get("instance")?.to_string(),
                group: get("group")?.to_string(),
                policy: parse("policy", get("policy")?)?,
                config: get("config")?.to_string(),
                status: get("status")?.to_string(),
                opt: parse("opt", get("opt")?)?,
                lb: opt_i("lb")?,
                ub: opt_i("ub")?,
                gap: opt_f("gap")?,
                time_s: opt_f("time_s")?,
                nodes: parse("nodes", get("nodes")?)?,
                cuts: parse("cuts", get("cuts")?)?,
                columns: parse("columns", get("columns")?)?,
                bounds,
                error: opt("error")?,
            });
        }
        Ok(BenchReport::new(rows))
    }

    pub fn to_markdown(&self, timing: bool) -> String {
        let mut out = String::from("| instance | policy | config | opt | lb | ub | gap % |");
        if timing {
            out.push_str(" time s |");
        }
        out.push_str(" nodes | cuts |");
        let bounds = self.has_bounds();
        if bounds {
            out.push_str(" LP | LP-MCF | DW | DW+SL1 | DW+SL |");
        }
        let cols = out.matches('|').count() - 1;
        out.push('\n');
        out.push_str(&"|---".repeat(cols));
        out.push_str("|\n");
        for r in &self.rows {
            let gap = r.gap.map_or("-".to_string(), |g| format!("{g:.2}"));
            let _ = write!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.instance,
                r.policy,
                r.config,
                if r.opt { "yes" } else { "no" },
                opt_str(&r.lb),
                opt_str(&r.ub),
                gap
            );
            if timing {
                let _ = write!(out, " {} |", r.time_s.map_or("-".to_string(), |t| format!("{t:.2}")));
            }
            let _ = write!(out, " {} | {} |", r.nodes, r.cuts);
            if bounds {
                let b = r.bounds.clone().unwrap_or_default();
                for v in [b.lp, b.lp_mcf, b.dw, b.dw_sl1, b.dw_sl] {
                    let _ = write!(out, " {} |", opt_str(&v));
                }
            }
            out.push('\n');
        }
        out.push_str("\n| group | policy | config | n | opt | gap % |");
        if timing {
            out.push_str(" time s |");
        }
        out.push_str(" nodes | cuts |\n");
        out.push_str(&"|---".repeat(if timing { 9 } else { 8 }));
        out.push_str("|\n");
        for g in &self.groups {
            let _ = write!(
                out,
                "| {} | {} | {} | {} | {} | {:.2} |",
                g.group, g.policy, g.config, g.instances, g.solved, g.gap
            );
            if timing {
                let _ = write!(out, " {:.2} |", g.time_s);
            }
            let _ = writeln!(out, " {:.1} | {:.1} |", g.nodes, g.cuts);
        }
        out
    }
}

/// Root bounds of every formulation for one instance.
pub fn bound_columns(problem: &Problem, policy: Policy) -> BoundColumns {
    let layout = &problem.instance.layout;
    let compact = |m: Result<MipModel, CompactError>| -> Option<i64> {
        let mut lp = backend_from_env().ok()?;
        let v = lp_relaxation_value(&m.ok()?, lp.as_mut()).ok()?;
        Some(round_bound(v, layout))
    };
    let dw = |sl1, cuts| root_bound(problem, policy, sl1, cuts).ok().map(|v| round_bound(v, layout));
    let (lp, lp_mcf) = match policy {
        Policy::Optimal => (compact(emit_compact_mtz(problem)), compact(emit_compact_mcf(problem))),
        p => (compact(emit_policy_mip(problem, p, MipOptions::default())), None),
    };
    BoundColumns { lp, lp_mcf, dw: dw(false, false), dw_sl1: dw(true, false), dw_sl: dw(true, true) }
}

/// A benchmark input: a display name and the loaded problem, or why it failed to load.
pub struct BenchInstance {
    pub name: String,
    pub problem: Result<Problem, String>,
}

/// Loads every `*.json` file of a directory, in file-name order.
pub fn load_dir(dir: &Path) -> std::io::Result<Vec<BenchInstance>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json") && !p.to_string_lossy().ends_with(".sol.json"))
        .collect();
    paths.sort();
    Ok(paths
        .into_iter()
        .map(|p| {
            let stem = p.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let problem = Instance::load(&p).map_err(|e| e.to_string()).and_then(|i| Problem::new(i).map_err(|e| e.to_string()));
            let name = match &problem {
                Ok(pr) => pr.instance.name.clone().unwrap_or(stem),
                Err(_) => stem,
            };
            BenchInstance { name, problem }
        })
        .collect())
}

fn bench_one(inst: &BenchInstance, policy: Policy, setup: BenchSetup, base: &SolveConfig, bounds: bool) -> BenchRow {
    let config = SolveConfig { policy, branching: setup.branching, symmetry: setup.symmetry, ..base.clone() };
    let mut row = BenchRow {
        instance: inst.name.clone(),
        group: group_of(&inst.name),
        policy,
        config: setup.label(),
        status: "error".to_string(),
        opt: false,
        lb: None,
        ub: None,
        gap: None,
        time_s: None,
        nodes: 0,
        cuts: 0,
        columns: 0,
        bounds: bounds.then(BoundColumns::default),
        error: None,
    };
    let problem = match &inst.problem {
        Ok(p) => p,
        Err(e) => {
            row.error = Some(e.clone());
            return row;
        }
    };
    match solve(problem, &config) {
        Ok(res) => {
            let s = &res.stats;
            row.status = status_name(res.status).to_string();
            row.opt = s.optimal;
            row.lb = Some(s.lb);
            row.ub = s.ub;
            row.gap = s.ub.map(|_| s.gap);
            row.time_s = Some((s.time_s * 1000.0).round() / 1000.0);
            row.nodes = s.nodes;
            row.cuts = s.cuts;
            row.columns = s.columns;
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    if bounds {
        row.bounds = Some(bound_columns(problem, policy));
    }
    row
}

/// Runs every (instance, policy, setup) combination on `jobs` worker threads.
/// Rows come back in grid order whatever the scheduling.
pub fn run_bench(
    instances: &[BenchInstance],
    policies: &[Policy],
    setups: &[BenchSetup],
    base: &SolveConfig,
    bounds: bool,
    jobs: usize,
) -> BenchReport {
    let mut tasks = Vec::new();
    for (i, _) in instances.iter().enumerate() {
        for &p in policies {
            for &s in setups {
                tasks.push((i, p, s));
            }
        }
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<BenchRow>>> = Mutex::new(vec![None; tasks.len()]);
    std::thread::scope(|scope| {
        for _ in 0..jobs.max(1) {
            scope.spawn(|| loop {
                let k = next.fetch_add(1, Ordering::Relaxed);
                let Some(&(i, p, s)) = tasks.get(k) else { break };
                let row = bench_one(&instances[i], p, s, base, bounds);
                results.lock().unwrap()[k] = Some(row);
            });
        }
    });
    BenchReport::new(results.into_inner().unwrap().into_iter().flatten().collect())
}

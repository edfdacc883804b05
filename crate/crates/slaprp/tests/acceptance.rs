//! Acceptance run: one line per criterion, every expected value from an
//! independent oracle. Exits nonzero if any criterion fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use slaprp::cli::{run_bench, BenchInstance, BenchSetup};
use slaprp::compact::{emit_assignment_polytope, emit_compact_mcf, emit_compact_mtz, lp_relaxation_value};
use slaprp::cuts::{separate_value, support, SeparationOrder};
use slaprp::lp::backend_from_env;
use slaprp::master::{Column, Master, MasterConfig, RmpSolution};
use slaprp::model::{
    generate_guo_instance, generate_random_instance, generate_silva_instance, Layout, Problem, RandomSpec,
};
use slaprp::oracle::{enumerate_return_pruned, enumerate_slaprp, enumerate_sl_subsets, enumerate_tours, Reference};
use slaprp::pricing::{CutResource, Pricer, PricingConfig, PricingProblem};
use slaprp::routing::{route_cost, Policy, StopSet};
use slaprp::search::{root_bound, solve, Branching, SolveConfig, SolveResult, SolveStatus};

const TOL: f64 = 1e-6;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(id: usize, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let t = start.elapsed();
    let in_time = t <= limit;
    let pass = out.pass && in_time;
    let timing = if in_time { String::new() } else { format!(" [over the {}s budget]", limit.as_secs()) };
    println!(
        "{} {id:>2}. {name}: {} ({:.1}s){timing}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        t.as_secs_f64()
    );
    pass
}

/// Tiny instances for the full-solver comparisons: |L| ≤ 6, K = 1, |S| ≤ 5, |O| ≤ 3.
fn tiny_instances(n: usize, seed: u64) -> Vec<Problem> {
    let layouts = [
        Layout::single_block(2, 3, 1),
        Layout::single_block(3, 2, 1),
        Layout::single_block(1, 6, 1),
        Layout::single_block(2, 2, 1),
        Layout::single_block(3, 2, 1).with_pitch(3, 2),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let layout = layouts[i % layouts.len()].clone();
            let n_skus = rng.gen_range(2..=5.min(layout.num_locations()));
            let spec = RandomSpec {
                n_skus,
                n_orders: rng.gen_range(1..=3),
                min_order_size: 1,
                max_order_size: n_skus.min(3),
                n_fixed: rng.gen_range(0..=1),
                layout,
            };
            let mut inst = generate_random_instance(&spec, rng.gen()).unwrap();
            inst.name = Some(format!("tiny-{i}"));
            Problem::new(inst).unwrap()
        })
        .collect()
}

fn config(policy: Policy, branching: Branching, symmetry: bool) -> SolveConfig {
    SolveConfig { policy, branching, symmetry, time_limit: 120.0, ..SolveConfig::default() }
}

/// Solver counters gathered across the whole run.
#[derive(Default)]
struct Tally {
    integral_nodes: usize,
    integral_mismatches: usize,
    solves: usize,
}

impl Tally {
    fn add(&mut self, r: &SolveResult) {
        self.solves += 1;
        self.integral_nodes += r.stats.integral_nodes;
        self.integral_mismatches += r.stats.integral_mismatches;
    }
}

/// Results of the criterion-1 runs, reused by later criteria.
struct FullRuns {
    /// `[instance][policy]` oracle optimum and assignment.
    optimum: Vec<Vec<(i64, Vec<usize>)>>,
    /// `[instance][policy][setup]` (objective, nodes).
    setups: Vec<Vec<Vec<(Option<i64>, usize)>>>,
    /// `[instance][policy]` cuts separated by the default setup.
    cuts: Vec<Vec<Vec<slaprp::master::SlCut>>>,
}

fn criterion_1(problems: &[Problem], tally: &mut Tally, runs: &mut Option<FullRuns>) -> Outcome {
    let setups = BenchSetup::grid();
    let default = setups.iter().position(|s| s.branching == Branching::Combined && s.symmetry).unwrap();
    let mut matched = 0;
    let mut total = 0;
    let mut failures = Vec::new();
    let mut full = FullRuns { optimum: Vec::new(), setups: Vec::new(), cuts: Vec::new() };
    for (i, p) in problems.iter().enumerate() {
        let (mut opt_row, mut setup_row, mut cut_row) = (Vec::new(), Vec::new(), Vec::new());
        for policy in Policy::ALL {
            let oracle = enumerate_slaprp(p, policy).unwrap();
            let mut per_setup = Vec::new();
            let mut cuts = Vec::new();
            for (k, s) in setups.iter().enumerate() {
                let r = solve(p, &config(policy, s.branching, s.symmetry)).unwrap();
                tally.add(&r);
                let obj = r.incumbent.as_ref().map(|inc| inc.objective);
                if k == default {
                    total += 1;
                    if r.status == SolveStatus::Optimal && obj == Some(oracle.objective) {
                        matched += 1;
                    } else if failures.len() < 3 {
                        failures.push(format!("tiny-{i}/{policy}: {obj:?} vs {}", oracle.objective));
                    }
                    cuts = r.cuts.clone();
                }
                per_setup.push((obj, r.stats.nodes));
            }
            opt_row.push((oracle.objective, oracle.assignment));
            setup_row.push(per_setup);
            cut_row.push(cuts);
        }
        full.optimum.push(opt_row);
        full.setups.push(setup_row);
        full.cuts.push(cut_row);
    }
    *runs = Some(full);
    Outcome {
        pass: total >= 250 && matched == total,
        detail: format!(
            "{matched}/{total} solves equal the enumeration optimum ({} instances x 5 policies){}",
            problems.len(),
            if failures.is_empty() { String::new() } else { format!("; e.g. {}", failures.join(", ")) }
        ),
    }
}

fn pricing_instance(layout: Layout) -> Problem {
    let inst = slaprp::model::Instance {
        name: None,
        layout,
        skus: vec![0],
        orders: vec![vec![0]],
        fixed: vec![],
        seed: None,
        meta: Default::default(),
    };
    Problem::new(inst).unwrap()
}

fn random_pricing_problem(rng: &mut ChaCha8Rng, n: usize, cap: u32) -> PricingProblem {
    let n_stops = rng.gen_range(1..=5);
    let max_stops: Vec<u32> = (0..n).map(|_| if rng.gen_bool(0.15) { 0 } else { rng.gen_range(1..=cap) }).collect();
    let mut pp = PricingProblem::plain(0, n_stops, max_stops);
    pp.mu = rng.gen_range(0.0..40.0);
    for l in 0..n {
        if rng.gen_bool(0.5) {
            pp.pi[l] = rng.gen_range(0.0..5.0);
        }
        if rng.gen_bool(0.4) {
            pp.sigma[l] = rng.gen_range(0.0..5.0);
        }
    }
    for _ in 0..rng.gen_range(0..3) {
        let l = rng.gen_range(0..n);
        if pp.max_stops[l] > 0 && pp.mandatory.iter().sum::<u32>() < n_stops as u32 {
            pp.mandatory[l] = 1;
        }
    }
    for _ in 0..rng.gen_range(0..5) {
        let mut locs: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        if locs.len() < 2 {
            locs = vec![rng.gen_range(0..n / 2), n / 2 + rng.gen_range(0..n - n / 2)];
        }
        pp.cuts.push(CutResource { locations: locs, lambda: rng.gen_range(0.0..4.0) });
    }
    pp
}

fn criterion_2() -> Outcome {
    let layouts = [
        (Layout::single_block(3, 4, 2), 2),
        (Layout::single_block(2, 5, 2).with_pitch(3, 2), 2),
        (Layout::single_block(4, 3, 1), 1),
        (Layout::single_block(1, 8, 3), 3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut per_policy = Vec::new();
    let mut bad = Vec::new();
    for policy in Policy::ALL {
        let mut n = 0;
        for (layout, cap) in &layouts {
            let p = pricing_instance(layout.clone());
            let pricer = Pricer::new(&p.wh, policy, PricingConfig::default()).unwrap();
            for _ in 0..125 {
                let pp = random_pricing_problem(&mut rng, p.num_locations(), *cap);
                let got = pricer.price(&pp).best.map(|r| r.reduced_cost);
                let want = enumerate_tours(&p, &pp, policy).map(|r| r.0);
                n += 1;
                let ok = match (got, want) {
                    (Some(g), Some(w)) => (g - w).abs() <= 1e-9,
                    (None, None) => true,
                    _ => false,
                };
                if !ok {
                    bad.push(format!("{policy}: {got:?} vs {want:?}"));
                }
            }
        }
        per_policy.push(n);
    }
    let min = *per_policy.iter().min().unwrap();
    Outcome {
        pass: bad.is_empty() && min >= 500,
        detail: format!(
            "{} configurations per policy, {} disagreements{}",
            min,
            bad.len(),
            bad.first().map_or(String::new(), |b| format!(" (first: {b})"))
        ),
    }
}

/// RMP iterates of root column generation, without cuts.
fn rmp_iterates(p: &Problem, policy: Policy) -> Vec<(RmpSolution, Vec<Column>)> {
    let big = 10_000;
    let mut master = Master::new(p, MasterConfig::default(), big).unwrap();
    let pricer = Pricer::new(&p.wh, policy, PricingConfig::default()).unwrap();
    let mut out = Vec::new();
    loop {
        let sol = master.solve().unwrap();
        let mut added = 0;
        for o in 0..p.num_orders() {
            let pp = master.pricing_problem(o, &sol.duals);
            for r in pricer.price(&pp).columns {
                if master.add_column(Column { order: o, cost: r.cost, stops: r.stops, is_super: false }).is_some() {
                    added += 1;
                }
            }
        }
        out.push((sol, master.columns().to_vec()));
        if added == 0 {
            return out;
        }
    }
}

fn criterion_3() -> Outcome {
    let layouts = [Layout::single_block(3, 4, 1), Layout::single_block(2, 5, 1), Layout::single_block(2, 3, 2)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut solutions, mut calls, mut bad) = (0, 0, 0);
    let mut inst = 0;
    while solutions < 200 && inst < 400 {
        let layout = layouts[inst % layouts.len()].clone();
        inst += 1;
        let slots = layout.locations().iter().map(|l| l.capacity as usize).sum::<usize>();
        let n_skus = rng.gen_range(4..=8.min(slots));
        let spec = RandomSpec {
            layout,
            n_skus,
            n_orders: rng.gen_range(3..=6),
            min_order_size: 2,
            max_order_size: 4.min(n_skus),
            n_fixed: rng.gen_range(0..=1),
        };
        let p = Problem::new(generate_random_instance(&spec, rng.gen()).unwrap()).unwrap();
        let policy = Policy::ALL[inst % 5];
        for (sol, columns) in rmp_iterates(&p, policy) {
            if sol.xi_integral(TOL) {
                continue;
            }
            solutions += 1;
            for (o, skus) in p.orders.iter().enumerate() {
                let routes = support(o, &sol, &columns);
                for &s in skus {
                    let (want, _) = enumerate_sl_subsets(&sol.xi[s], &routes).unwrap();
                    for dir in [SeparationOrder::Decreasing, SeparationOrder::Increasing] {
                        calls += 1;
                        let (got, _) = separate_value(&sol.xi[s], &routes, dir);
                        if (got - want).abs() > 1e-9 {
                            bad += 1;
                        }
                    }
                }
            }
        }
    }
    Outcome {
        pass: solutions >= 200 && bad == 0,
        detail: format!("{solutions} fractional RMP solutions, {calls} separation calls, {bad} disagreements"),
    }
}

fn criterion_4(problems: &[Problem], runs: &FullRuns) -> Outcome {
    let lp_value = |m| lp_relaxation_value(&m, backend_from_env().unwrap().as_mut()).unwrap();
    let opt_idx = Policy::ALL.iter().position(|&p| p == Policy::Optimal).unwrap();
    let (mut chains, mut broken) = (0, Vec::new());
    for (i, p) in problems.iter().enumerate().take(30) {
        let mtz = lp_value(emit_compact_mtz(p).unwrap());
        let mcf = lp_value(emit_compact_mcf(p).unwrap());
        let dw = root_bound(p, Policy::Optimal, false, false).unwrap();
        let dw1 = root_bound(p, Policy::Optimal, true, false).unwrap();
        let dwsl = root_bound(p, Policy::Optimal, true, true).unwrap();
        let opt = runs.optimum[i][opt_idx].0 as f64;
        let chain = [mtz, mcf, dw, dw1, dwsl, opt];
        chains += 1;
        if chain.windows(2).any(|w| w[0] > w[1] + TOL) {
            broken.push(format!("tiny-{i}: {chain:?}"));
        }
    }
    let mut silva = 0;
    let mut silva_bad = Vec::new();
    let grids = [(1, 5, 3), (3, 5, 3), (5, 5, 3), (1, 10, 3), (3, 10, 3), (5, 10, 3), (1, 5, 5), (3, 5, 5), (1, 10, 5)];
    for (aisles, bays, size) in grids {
        for seed in 0..2 {
            let p = Problem::new(generate_silva_instance(aisles, bays, 1, size, seed).unwrap()).unwrap();
            let caps: Vec<u32> = (0..p.num_locations()).map(|l| p.capacity(l)).collect();
            let (opt, _) = enumerate_tours(&p, &PricingProblem::plain(0, size, caps), Policy::Optimal).unwrap();
            let dw = root_bound(&p, Policy::Optimal, false, false).unwrap();
            silva += 1;
            if (dw - opt).abs() > TOL {
                silva_bad.push(format!("{aisles}x{bays}/{size}/{seed}: {dw} vs {opt}"));
            }
        }
    }
    Outcome {
        pass: chains >= 30 && broken.is_empty() && silva_bad.is_empty(),
        detail: format!(
            "MTZ <= MCF <= DW <= DW+SL1 <= DW+SL <= opt on {}/{chains}; DW = opt on {}/{silva} single-order instances{}",
            chains - broken.len(),
            silva - silva_bad.len(),
            broken.first().or(silva_bad.first()).map_or(String::new(), |b| format!(" (first failure {b})"))
        ),
    }
}

fn criterion_6(problems: &[Problem], runs: &FullRuns) -> Outcome {
    let (mut total, mut violated) = (0, 0);
    for (i, p) in problems.iter().enumerate() {
        for (k, _) in Policy::ALL.iter().enumerate() {
            let assignment = &runs.optimum[i][k].1;
            for cut in &runs.cuts[i][k] {
                total += 1;
                // Integer plan: one route per order, visiting the locations of its SKUs.
                let in_order = p.orders[cut.order].contains(&cut.sku);
                let mass = cut.locations.contains(&assignment[cut.sku]) as i32;
                let paid = p.orders[cut.order].iter().any(|&s| cut.locations.contains(&assignment[s])) as i32;
                if !in_order || mass > paid {
                    violated += 1;
                }
            }
        }
    }
    Outcome {
        pass: violated == 0,
        detail: format!("{total} separated cuts checked against the known optimum, {violated} violated"),
    }
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut integral, mut total) = (0, 0);
    for i in 0..10 {
        let layout = Layout::single_block(rng.gen_range(1..=3), rng.gen_range(2..=4), rng.gen_range(1..=2));
        let slots = layout.locations().iter().map(|l| l.capacity as usize).sum::<usize>();
        let n_skus = rng.gen_range(2..=slots.min(8));
        let spec = RandomSpec {
            layout,
            n_skus,
            n_orders: 2,
            min_order_size: 1,
            max_order_size: n_skus.min(3),
            n_fixed: i % 3,
        };
        let p = Problem::new(generate_random_instance(&spec, rng.gen()).unwrap()).unwrap();
        let mut model = emit_assignment_polytope(&p);
        let xi: Vec<usize> = (0..model.vars.len()).filter(|&j| model.vars[j].symbol == "xi").collect();
        for _ in 0..10 {
            model.objective = xi.iter().map(|&j| (j, rng.gen_range(-20..=20) as f64)).collect();
            let sol = model.solve(backend_from_env().unwrap().as_mut(), false).unwrap();
            total += 1;
            if xi.iter().all(|&j| (sol.values[j] - sol.values[j].round()).abs() <= 1e-9) {
                integral += 1;
            }
        }
    }
    Outcome { pass: total >= 100 && integral == total, detail: format!("{integral}/{total} LP optima have integral xi") }
}

fn criterion_8(runs: &FullRuns) -> Outcome {
    let setups = BenchSetup::grid();
    let (mut cases, mut agree) = (0, 0);
    let (mut branching, mut fewer) = (0, 0);
    for (i, per_policy) in runs.setups.iter().enumerate() {
        for (k, per_setup) in per_policy.iter().enumerate() {
            cases += 1;
            let opt = Some(runs.optimum[i][k].0);
            if per_setup.iter().all(|r| r.0 == opt) {
                agree += 1;
            }
            for rule in [Branching::Location, Branching::Combined] {
                let nodes = |sym: bool| {
                    let j = setups.iter().position(|s| s.branching == rule && s.symmetry == sym).unwrap();
                    per_setup[j].1
                };
                let (on, off) = (nodes(true), nodes(false));
                if on > 1 || off > 1 {
                    branching += 1;
                    if on <= off {
                        fewer += 1;
                    }
                }
            }
        }
    }
    let share = if branching == 0 { 1.0 } else { fewer as f64 / branching as f64 };
    Outcome {
        pass: agree == cases && share >= 0.8,
        detail: format!(
            "4 setups agree on {agree}/{cases}; symmetry nodes <= plain on {fewer}/{branching} branching runs ({:.0}%)",
            100.0 * share
        ),
    }
}

fn criterion_9(tally: &mut Tally) -> Outcome {
    let (mut ok, mut slowest) = (0, 0.0f64);
    let mut notes = Vec::new();
    for seed in 0..10 {
        let p = Problem::new(generate_guo_instance(0.2, 50, seed).unwrap()).unwrap();
        let oracle = enumerate_return_pruned(&p).unwrap();
        let start = Instant::now();
        let r = solve(&p, &SolveConfig { policy: Policy::Return, time_limit: 60.0, ..SolveConfig::default() }).unwrap();
        let t = start.elapsed().as_secs_f64();
        tally.add(&r);
        slowest = slowest.max(t);
        let obj = r.incumbent.as_ref().map(|i| i.objective);
        if r.status == SolveStatus::Optimal && obj == Some(oracle.objective) && t < 60.0 {
            ok += 1;
        } else {
            notes.push(format!("seed {seed}: {obj:?} vs {} in {t:.1}s", oracle.objective));
        }
    }
    Outcome {
        pass: ok == 10,
        detail: format!(
            "{ok}/10 instances match the oracle, slowest {slowest:.1}s{}",
            notes.first().map_or(String::new(), |n| format!(" ({n})"))
        ),
    }
}

fn criterion_10() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut mismatches = vec![0usize; 5];
    let mut counts = vec![0usize; 5];
    let (mut dominance, mut dom_bad) = (0, 0);
    for _ in 0..1000 {
        let layout = Layout::single_block(rng.gen_range(1..=6), rng.gen_range(2..=10), 2)
            .with_pitch(rng.gen_range(1..=4), rng.gen_range(1..=3));
        let p = pricing_instance(layout.clone());
        let reference = Reference::new(&layout);
        let n = layout.num_locations();
        let k = rng.gen_range(1..=7);
        let stops: Vec<usize> = (0..k).map(|_| rng.gen_range(0..n)).collect();
        let set = StopSet::from_locations(stops.iter().copied());
        let mut cost = [0i64; 5];
        for (i, policy) in Policy::ALL.into_iter().enumerate() {
            counts[i] += 1;
            cost[i] = route_cost(&set, &p.wh, policy).unwrap().total;
            if cost[i] != reference.route_length(&stops, policy) {
                mismatches[i] += 1;
            }
        }
        let at = |q: Policy| cost[Policy::ALL.iter().position(|&x| x == q).unwrap()];
        dominance += 1;
        let opt = at(Policy::Optimal);
        if Policy::ALL.iter().any(|&q| at(q) < opt) || at(Policy::LargestGap) > at(Policy::Midpoint) {
            dom_bad += 1;
        }
    }
    let bad: usize = mismatches.iter().sum();
    Outcome {
        pass: bad == 0 && dom_bad == 0 && counts.iter().all(|&c| c >= 1000),
        detail: format!(
            "{} stop sets per policy, {bad} evaluator/path mismatches; dominance holds on {}/{dominance}",
            counts[0],
            dominance - dom_bad
        ),
    }
}

fn criterion_11(problems: &[Problem]) -> Outcome {
    let instances: Vec<BenchInstance> = problems
        .iter()
        .map(|p| BenchInstance { name: p.instance.name.clone().unwrap(), problem: Ok(p.clone()) })
        .collect();
    let setups = [BenchSetup { branching: Branching::Combined, symmetry: true }];
    let base = SolveConfig { seed: 11, ..SolveConfig::default() };
    let a = run_bench(&instances, &Policy::ALL, &setups, &base, false, 1).to_csv(false);
    let b = run_bench(&instances, &Policy::ALL, &setups, &base, false, 4).to_csv(false);
    Outcome {
        pass: a == b && a.lines().count() > 250,
        detail: format!(
            "two runs ({} rows, 1 and 4 workers) give {} CSVs",
            a.lines().count() - 2,
            if a == b { "byte-identical" } else { "different" }
        ),
    }
}

fn main() {
    let problems = tiny_instances(50, 1);
    let mut tally = Tally::default();
    let mut runs = None;
    let minutes = |m: u64| Duration::from_secs(60 * m);
    let mut results = Vec::new();

    results.push(check(1, "oracle equivalence, full solver", minutes(10), || {
        criterion_1(&problems, &mut tally, &mut runs)
    }));
    let runs = runs.unwrap();
    results.push(check(2, "oracle equivalence, pricing", minutes(5), criterion_2));
    results.push(check(3, "oracle equivalence, separation", minutes(2), criterion_3));
    results.push(check(4, "bound chain", minutes(10), || criterion_4(&problems, &runs)));
    results.push(check(6, "SL cut validity", minutes(1), || criterion_6(&problems, &runs)));
    results.push(check(7, "assignment polytope integrality", minutes(1), criterion_7));
    results.push(check(8, "branching agreement", minutes(1), || criterion_8(&runs)));
    results.push(check(9, "replenishment instances", minutes(10), || criterion_9(&mut tally)));
    results.push(check(10, "policy evaluators", minutes(2), criterion_10));
    results.push(check(11, "determinism", minutes(10), || criterion_11(&problems)));
    // Integral nodes are counted over every solve above, so this one reports last.
    results.push(check(5, "integral xi yields a plan at the LP cost", minutes(1), || Outcome {
        pass: tally.integral_mismatches == 0 && tally.integral_nodes > 0,
        detail: format!(
            "{} integral nodes over {} solves, {} mismatches",
            tally.integral_nodes, tally.solves, tally.integral_mismatches
        ),
    }));

    let failed = results.iter().filter(|&&p| !p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}

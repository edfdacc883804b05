use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::model::{Instance, Layout, Problem};
use crate::oracle::enumerate_tours;

fn problem(layout: Layout) -> Problem {
    let n = layout.num_locations();
    let inst = Instance {
        name: None,
        layout,
        skus: vec![0],
        orders: vec![vec![0]],
        fixed: vec![],
        seed: None,
        meta: Default::default(),
    };
    assert!(n >= 1);
    Problem::new(inst).unwrap()
}

fn random_pp(rng: &mut ChaCha8Rng, n: usize, cap: u32) -> PricingProblem {
    let n_stops = rng.gen_range(1..=4);
    let max_stops: Vec<u32> = (0..n).map(|_| if rng.gen_bool(0.15) { 0 } else { rng.gen_range(1..=cap) }).collect();
    let mut pp = PricingProblem::plain(0, n_stops, max_stops);
    pp.mu = rng.gen_range(0.0..30.0);
    for l in 0..n {
        pp.pi[l] = if rng.gen_bool(0.5) { rng.gen_range(0.0..4.0) } else { 0.0 };
        pp.sigma[l] = if rng.gen_bool(0.5) { rng.gen_range(0.0..4.0) } else { 0.0 };
    }
    for _ in 0..rng.gen_range(0..3) {
        let l = rng.gen_range(0..n);
        if pp.max_stops[l] > 0 && pp.mandatory.iter().sum::<u32>() < n_stops as u32 {
            pp.mandatory[l] = 1;
        }
    }
    for _ in 0..rng.gen_range(0..4) {
        let mut locs: Vec<usize> = (0..n).filter(|_| rng.gen_bool(0.3)).collect();
        if locs.len() < 2 {
            locs = vec![0, n - 1];
        }
        pp.cuts.push(CutResource { locations: locs, lambda: rng.gen_range(0.0..3.0) });
    }
    pp
}

fn check_against_oracle(layout: Layout, policy: Policy, seed: u64, rounds: usize) {
    let p = problem(layout);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pricer = Pricer::new(&p.wh, policy, PricingConfig::default()).unwrap();
    for round in 0..rounds {
        let pp = random_pp(&mut rng, p.num_locations(), 2);
        let got = pricer.price(&pp).best.map(|r| r.reduced_cost);
        let want = enumerate_tours(&p, &pp, policy).map(|r| r.0);
        match (got, want) {
            (Some(g), Some(w)) => assert!((g - w).abs() < 1e-9, "{policy} round {round}: {g} vs {w}"),
            (None, None) => {}
            other => panic!("{policy} round {round}: {other:?}"),
        }
    }
}

#[test]
fn zero_duals_price_nothing() {
    let p = problem(Layout::single_block(3, 5, 2));
    for policy in Policy::ALL {
        let pricer = Pricer::new(&p.wh, policy, PricingConfig::default()).unwrap();
        let pp = PricingProblem::plain(0, 3, vec![2; 15]);
        let out = pricer.price(&pp);
        assert!(out.proof_none && out.columns.is_empty());
        let (min, _) = enumerate_tours(&p, &pp, policy).unwrap();
        assert_eq!(out.best.unwrap().reduced_cost, min);
    }
}

#[test]
fn large_convexity_dual_returns_cheapest_route() {
    let p = problem(Layout::single_block(3, 4, 2));
    for policy in Policy::ALL {
        let pricer = Pricer::new(&p.wh, policy, PricingConfig::default()).unwrap();
        let mut pp = PricingProblem::plain(0, 3, vec![1; 12]);
        let (cheapest, _) = enumerate_tours(&p, &pp, policy).unwrap();
        pp.mu = 2.0 * cheapest + 1.0;
        let out = pricer.price(&pp);
        assert!(!out.proof_none);
        let first = &out.columns[0];
        assert_eq!(first.cost as f64, cheapest);
        assert_eq!(first.reduced_cost, cheapest - pp.mu);
        assert_eq!(first.stops.total(), 3);
        assert!(out.columns.len() <= 30);
    }
}

#[test]
fn labeling_matches_tour_enumeration() {
    for (i, policy) in Policy::ALL.into_iter().enumerate() {
        check_against_oracle(Layout::single_block(3, 4, 2), policy, 10 + i as u64, 40);
        check_against_oracle(Layout::single_block(2, 5, 2).with_pitch(3, 2), policy, 20 + i as u64, 20);
    }
    check_against_oracle(Layout::two_block(2, 3, 2), Policy::Return, 31, 40);
    check_against_oracle(Layout::two_block(2, 3, 2), Policy::Optimal, 32, 20);
}

#[test]
fn pruning_switches_keep_the_minimum() {
    let p = problem(Layout::single_block(3, 4, 2));
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for policy in [Policy::Optimal, Policy::LargestGap, Policy::Midpoint] {
        let full = Pricer::new(&p.wh, policy, PricingConfig::default()).unwrap();
        let bare = Pricer::new(
            &p.wh,
            policy,
            PricingConfig { dominance: false, first_stop_restriction: false, gap_kill: false, ..Default::default() },
        )
        .unwrap();
        for _ in 0..15 {
            let pp = random_pp(&mut rng, 12, 2);
            let a = full.price(&pp);
            let b = bare.price(&pp);
            assert_eq!(a.best.as_ref().map(|r| r.reduced_cost), b.best.as_ref().map(|r| r.reduced_cost));
            assert!(a.trace.labels() <= b.trace.labels());
        }
    }
}

#[test]
fn first_stop_restriction_never_adds_labels() {
    let p = problem(Layout::single_block(3, 5, 1));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let with = Pricer::new(&p.wh, Policy::Optimal, PricingConfig { dominance: false, ..Default::default() }).unwrap();
    let without = Pricer::new(
        &p.wh,
        Policy::Optimal,
        PricingConfig { dominance: false, first_stop_restriction: false, ..Default::default() },
    )
    .unwrap();
    for _ in 0..10 {
        let pp = random_pp(&mut rng, 15, 1);
        let a = with.price(&pp);
        let b = without.price(&pp);
        assert!(a.trace.labels() <= b.trace.labels());
        let (ra, rb) = (a.best.map(|r| r.reduced_cost), b.best.map(|r| r.reduced_cost));
        match (ra, rb) {
            (Some(x), Some(y)) => assert!((x - y).abs() < 1e-9),
            (x, y) => assert_eq!(x, y),
        }
    }
}

#[test]
fn extension_rejections() {
    let p = problem(Layout::single_block(2, 4, 1));
    let pricer = Pricer::new(&p.wh, Policy::Return, PricingConfig::default()).unwrap();
    let pp = PricingProblem::plain(0, 1, vec![1; 8]);
    let root = pricer.root(&pp);
    let high = p.wh.location_at(1, 0, 3).unwrap();
    let low = p.wh.location_at(1, 0, 1).unwrap();
    let at_high = pricer.extend(&pp, &root, high).unwrap();
    assert_eq!(pricer.extend(&pp, &at_high, low).unwrap_err(), Reject::Length);

    let pp2 = PricingProblem::plain(0, 2, vec![1; 8]);
    let at_high = pricer.extend(&pp2, &pricer.root(&pp2), high).unwrap();
    assert_eq!(pricer.extend(&pp2, &at_high, low).unwrap_err(), Reject::Arc);
    assert!(pricer.extend(&pp2, &pricer.root(&pp2), low).and_then(|l| pricer.extend(&pp2, &l, high)).is_ok());
    assert_eq!(pricer.extend(&pp2, &at_high, high).unwrap_err(), Reject::Capacity);

    // A mandatory stop elsewhere leaves no room for a free stop at q = 1.
    let mut pp3 = PricingProblem::plain(0, 1, vec![1; 8]);
    pp3.mandatory[high] = 1;
    assert_eq!(pricer.extend(&pp3, &pricer.root(&pp3), low).unwrap_err(), Reject::Mandatory);
}

#[test]
fn cut_asymmetry_blocks_dominance() {
    let p = problem(Layout::single_block(1, 4, 1));
    let pricer = Pricer::new(&p.wh, Policy::Optimal, PricingConfig::default()).unwrap();
    let mut pp = PricingProblem::plain(0, 2, vec![1; 4]);
    pp.cuts.push(CutResource { locations: vec![3], lambda: 1.0 });
    let l2 = pricer.extend(&pp, &pricer.root(&pp), 0).unwrap();
    let mut l1 = l2.clone();
    l1.rc = l2.rc - 0.5;
    assert!(pricer.dominates(&pp, &l1, &l2));
    assert!(!pricer.dominates(&pp, &l2, &l1));
    // The cut is still open for l2 only.
    l1.counted.insert(0);
    assert!(!pricer.dominates(&pp, &l1, &l2));
    pp.cuts[0].lambda = 0.4;
    assert!(pricer.dominates(&pp, &l1, &l2));
    // Identical labels dominate each other.
    assert!(pricer.dominates(&pp, &l2, &l2.clone()));
}

#[test]
fn sshape_arc_length_depends_on_entry_side() {
    let p = problem(Layout::single_block(3, 5, 1));
    let g = build_policy_graph(&p.wh, Policy::SShape).unwrap();
    let c = p.wh.location_at(2, 0, 2).unwrap();
    let d = p.wh.location_at(3, 0, 2).unwrap();
    let mut ph = g.start_phase();
    ph.mode = Mode::Front;
    let Step::Go(front, _) = g.step(Some(c), &ph, d) else { panic!() };
    ph.mode = Mode::Back;
    let Step::Go(back, _) = g.step(Some(c), &ph, d) else { panic!() };
    assert_eq!(front, 4 + 1 + 4);
    assert_eq!(back, 2 + 1 + 2);
}

#[test]
fn optimal_graph_arc_count() {
    for (a, b, k) in [(1, 1, 2), (2, 3, 2), (3, 2, 1), (2, 2, 3)] {
        let p = problem(Layout::single_block(a, b, k));
        let g = build_policy_graph(&p.wh, Policy::Optimal).unwrap();
        let n = (a * b) as usize;
        let k = k as usize;
        assert_eq!(g.full_arc_count(), n + n * k + n * k * (n - 1) + n * (k - 1));
    }
    let two = problem(Layout::two_block(2, 3, 1));
    assert_eq!(build_policy_graph(&two.wh, Policy::Midpoint).unwrap_err(), RoutingError::Unsupported(Policy::Midpoint));
}

#[test]
fn trace_counts_levels() {
    let p = problem(Layout::single_block(3, 4, 2));
    let pricer = Pricer::new(&p.wh, Policy::LargestGap, PricingConfig::default()).unwrap();
    let pp = PricingProblem::plain(0, 4, vec![1; 12]);
    let out = pricer.price(&pp);
    assert_eq!(out.trace.levels.len(), 4);
    assert!(out.trace.levels.iter().all(|l| l.created > 0));
    assert!(out.trace.levels.iter().any(|l| l.rejected.contains_key(&Reject::Gap)));
}

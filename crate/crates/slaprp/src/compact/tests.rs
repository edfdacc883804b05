use super::*;
use crate::lp::HighsLp;
use crate::model::{generate_random_instance, Instance, Layout, Problem, RandomSpec};
use crate::oracle::enumerate_slaprp;
use crate::routing::Policy;

fn random(layout: Layout, n_skus: usize, n_orders: usize, n_fixed: usize, seed: u64) -> Problem {
    let spec = RandomSpec { layout, n_skus, n_orders, min_order_size: 1, max_order_size: 3, n_fixed };
    Problem::new(generate_random_instance(&spec, seed).unwrap()).unwrap()
}

fn mip_value(m: &MipModel) -> f64 {
    m.solve(&mut HighsLp::new(), true).unwrap().objective
}

fn lp_value(m: &MipModel) -> f64 {
    lp_relaxation_value(m, &mut HighsLp::new()).unwrap()
}

#[test]
fn mtz_row_count_and_relaxation() {
    let p = Problem::new(Instance {
        name: None,
        layout: Layout::single_block(1, 2, 1),
        skus: vec![0],
        orders: vec![vec![0]],
        fixed: vec![],
        seed: None,
        meta: Default::default(),
    })
    .unwrap();
    let m = emit_compact_mtz(&p).unwrap();
    assert_eq!(m.rows_named("mtz_"), 2);
    let opt = enumerate_slaprp(&p, Policy::Optimal).unwrap().objective as f64;
    assert!(lp_value(&m) <= opt + 1e-6);
    assert!((mip_value(&m) - opt).abs() < 1e-6);

    let q = random(Layout::single_block(2, 2, 2), 4, 3, 0, 1);
    let n_v = 8;
    assert_eq!(emit_compact_mtz(&q).unwrap().rows_named("mtz_"), 3 * n_v * (n_v - 1));
}

#[test]
fn compact_integer_optima_match_enumeration() {
    for seed in 0..4 {
        let p = random(Layout::single_block(2, 2, 1), 4, 3, 1, seed);
        let opt = enumerate_slaprp(&p, Policy::Optimal).unwrap().objective as f64;
        let mtz = emit_compact_mtz(&p).unwrap();
        let mcf = emit_compact_mcf(&p).unwrap();
        assert!((mip_value(&mtz) - opt).abs() < 1e-6, "mtz seed {seed}");
        assert!((mip_value(&mcf) - opt).abs() < 1e-6, "mcf seed {seed}");
        assert!(lp_value(&mcf) >= lp_value(&mtz) - 1e-6);
        assert!(lp_value(&mcf) <= opt + 1e-6);
    }
}

#[test]
fn mcf_flow_reaches_each_sku() {
    let p = random(Layout::single_block(2, 2, 1), 3, 2, 0, 7);
    let m = emit_compact_mcf(&p).unwrap();
    let sol = m.solve(&mut HighsLp::new(), true).unwrap();
    for (o, skus) in p.orders.iter().enumerate() {
        for &s in skus {
            // Net inflow of commodity s over all storage nodes is one unit.
            let net: f64 = m
                .vars
                .iter()
                .enumerate()
                .filter(|(_, v)| v.symbol == "g" && v.indices[0] == o as i64 && v.indices[1] == s as i64)
                .map(|(j, v)| {
                    let into = if v.indices[3] != 0 { sol.values[j] } else { 0.0 };
                    let out = if v.indices[2] != 0 { sol.values[j] } else { 0.0 };
                    into - out
                })
                .sum();
            assert!((net - 1.0).abs() < 1e-6);
        }
    }
}

#[test]
fn policy_mips_match_enumeration() {
    for (i, policy) in [Policy::Return, Policy::Midpoint, Policy::LargestGap].into_iter().enumerate() {
        for seed in 0..4u64 {
            let p = random(Layout::single_block(3, 3, 1), 5, 3, 1, 40 + 10 * i as u64 + seed);
            let opt = enumerate_slaprp(&p, policy).unwrap().objective as f64;
            let m = emit_policy_mip(&p, policy, MipOptions::default()).unwrap();
            assert!((mip_value(&m) - opt).abs() < 1e-6, "{policy} seed {seed}: {} vs {opt}", mip_value(&m));
        }
    }
}

#[test]
fn verbatim_largest_gap_misprices_single_aisle_orders() {
    // One order in one aisle: the published rows force s = 1 and zero the middle aisles.
    let p = Problem::new(Instance {
        name: None,
        layout: Layout::single_block(3, 3, 1),
        skus: vec![0],
        orders: vec![vec![0]],
        fixed: vec![(0, 7)],
        seed: None,
        meta: Default::default(),
    })
    .unwrap();
    let opt = enumerate_slaprp(&p, Policy::LargestGap).unwrap().objective as f64;
    let fixed = mip_value(&emit_policy_mip(&p, Policy::LargestGap, MipOptions::default()).unwrap());
    let verbatim = mip_value(&emit_policy_mip(&p, Policy::LargestGap, MipOptions { verbatim: true }).unwrap());
    assert!((fixed - opt).abs() < 1e-6);
    assert!(verbatim > opt + 1e-6);
}

#[test]
fn sshape_mip_differs_only_by_its_constant() {
    // Single visited aisle: the published objective gives 2df - d(b+1).
    let p = Problem::new(Instance {
        name: None,
        layout: Layout::single_block(2, 3, 1),
        skus: vec![0],
        orders: vec![vec![0]],
        fixed: vec![(0, 1)],
        seed: None,
        meta: Default::default(),
    })
    .unwrap();
    let m = emit_policy_mip(&p, Policy::SShape, MipOptions::default()).unwrap();
    let opt = enumerate_slaprp(&p, Policy::SShape).unwrap().objective as f64;
    assert_eq!(opt, 4.0);
    assert!((mip_value(&m) - (4.0 - 4.0)).abs() < 1e-6);
}

#[test]
fn two_block_policy_mip_is_rejected() {
    let p = random(Layout::two_block(2, 2, 1), 3, 2, 0, 1);
    assert!(matches!(emit_policy_mip(&p, Policy::Return, MipOptions::default()), Err(CompactError::Unsupported(_))));
    assert!(emit_compact_mtz(&p).is_ok());
}

#[test]
fn big_m_rewrite() {
    let mut m = MipModel::new("t");
    let z = m.add_var("z".into(), VarKind::Binary, 0.0, 1.0, "z", &[]);
    let v = m.add_var("v".into(), VarKind::Continuous, 1.0, 4.0, "v", &[]);
    m.objective.push((v, 1.0));
    m.objective.push((z, -10.0));
    m.add_indicator(z, true, "ind".into(), vec![(v, 1.0)], Sense::Ge, 3.0);
    let r = m.with_big_m().unwrap();
    assert!(r.indicators.is_empty());
    assert!(!r.lp_text().contains("->"));
    assert!(m.lp_text().contains("z = 1 -> v >= 3"));
    // z = 1 forces v >= 3: objective 3 - 10.
    assert!((mip_value(&m) + 7.0).abs() < 1e-9);
    let mut unbounded = MipModel::new("u");
    let g = unbounded.add_var("g".into(), VarKind::Binary, 0.0, 1.0, "g", &[]);
    let y = unbounded.add_var("y".into(), VarKind::Continuous, 0.0, INF, "y", &[]);
    unbounded.add_indicator(g, false, "bad".into(), vec![(y, 1.0)], Sense::Le, 1.0);
    assert!(matches!(unbounded.with_big_m(), Err(CompactError::UnboundedIndicator(_))));
}

fn reread(m: &MipModel, format: ModelFormat, ext: &str) -> f64 {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(format!("model.{ext}"));
    m.write(&path, format).unwrap();
    let mut lp = HighsLp::new();
    lp.read_model(&path).unwrap();
    assert_eq!(lp.solve().unwrap(), LpStatus::Optimal);
    lp.objective()
}

#[test]
fn files_parse_under_a_reference_reader() {
    let empty = MipModel::new("empty");
    assert!(empty.lp_text().contains("obj: 0"));
    assert_eq!(reread(&empty, ModelFormat::MpsText, "mps"), 0.0);

    let mut one = MipModel::new("one");
    let x = one.add_var("x".into(), VarKind::Binary, 0.0, 1.0, "x", &[]);
    one.objective.push((x, 1.0));
    one.add_row("r".into(), vec![(x, 1.0)], Sense::Ge, 1.0);
    assert_eq!(reread(&one, ModelFormat::LpText, "lp"), 1.0);
    assert_eq!(reread(&one, ModelFormat::MpsText, "mps"), 1.0);

    let p = random(Layout::single_block(2, 3, 1), 4, 2, 1, 3);
    let m = emit_policy_mip(&p, Policy::LargestGap, MipOptions::default()).unwrap();
    let direct = mip_value(&m);
    assert!((reread(&m.with_big_m().unwrap(), ModelFormat::LpText, "lp") - direct).abs() < 1e-6);
    assert!((reread(&m, ModelFormat::MpsText, "mps") - direct).abs() < 1e-6);
    let mtz = emit_compact_mtz(&p).unwrap();
    assert!((reread(&mtz, ModelFormat::MpsText, "mps") - mip_value(&mtz)).abs() < 1e-6);
}

#[test]
fn manifest_maps_every_xi() {
    let p = random(Layout::single_block(2, 2, 1), 3, 2, 0, 2);
    let m = emit_compact_mcf(&p).unwrap();
    let man = m.manifest();
    for s in 0..3i64 {
        for l in 0..4i64 {
            assert_eq!(man[&format!("xi_s{s}_l{l}")], ("xi".to_string(), vec![s, l]));
        }
    }
    let json: serde_json::Value = serde_json::from_str(&m.manifest_json()).unwrap();
    assert_eq!(json["xi_s1_l2"]["indices"], serde_json::json!([1, 2]));
}

#[test]
fn relaxation_is_deterministic() {
    let p = random(Layout::single_block(2, 2, 1), 4, 3, 0, 5);
    let m = emit_compact_mtz(&p).unwrap();
    assert_eq!(lp_value(&m).to_bits(), lp_value(&m).to_bits());
}

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Instance, Layout, ModelError};

/// Guo-style layout defaults; the source only fixes the two-block shape and 80 SKUs.
pub const GUO_AISLES: u32 = 4;
pub const GUO_BAYS_PER_BLOCK: u32 = 5;
pub const GUO_CAPACITY: u32 = 2;
pub const GUO_SKUS: usize = 80;

fn sample_order(rng: &mut ChaCha8Rng, n_skus: usize, size: usize) -> Vec<u32> {
    let mut skus: Vec<u32> = index::sample(rng, n_skus, size).into_iter().map(|s| s as u32).collect();
    skus.sort_unstable();
    skus
}

/// Single-block instance on the published grid: |S| = 2·ā·b̄, K = 2, no fixed SKUs.
pub fn generate_silva_instance(
    aisles: u32,
    bays: u32,
    n_orders: usize,
    order_size: usize,
    seed: u64,
) -> Result<Instance, ModelError> {
    let bad = |m: String| Err(ModelError::InvalidParameter(m));
    if ![1, 3, 5].contains(&aisles) {
        return bad(format!("aisles must be 1, 3 or 5 (got {aisles})"));
    }
    if ![5, 10].contains(&bays) {
        return bad(format!("bays must be 5 or 10 (got {bays})"));
    }
    if ![1, 5, 10].contains(&n_orders) {
        return bad(format!("orders must be 1, 5 or 10 (got {n_orders})"));
    }
    if ![3, 5].contains(&order_size) {
        return bad(format!("order size must be 3 or 5 (got {order_size})"));
    }
    let n_skus = (2 * aisles * bays) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders = (0..n_orders).map(|_| sample_order(&mut rng, n_skus, order_size)).collect();
    Ok(Instance {
        name: Some(format!("silva-{aisles}x{bays}-o{n_orders}-s{order_size}-{seed}")),
        layout: Layout::single_block(aisles, bays, 2),
        skus: (0..n_skus as u32).collect(),
        orders,
        fixed: Vec::new(),
        seed: Some(seed),
        meta: BTreeMap::new(),
    })
}

/// Replenishment instance: 80 SKUs in a two-block layout, ⌈α·80⌉ of them free,
/// the rest pre-placed at random; order sizes uniform in 1..=10.
pub fn generate_guo_instance(alpha: f64, n_orders: usize, seed: u64) -> Result<Instance, ModelError> {
    if ![0.2, 0.3, 0.4].iter().any(|a| (a - alpha).abs() < 1e-9) {
        return Err(ModelError::InvalidParameter(format!("alpha must be 0.2, 0.3 or 0.4 (got {alpha})")));
    }
    if ![50, 100, 200].contains(&n_orders) {
        return Err(ModelError::InvalidParameter(format!("orders must be 50, 100 or 200 (got {n_orders})")));
    }
    let layout = Layout::two_block(GUO_AISLES, GUO_BAYS_PER_BLOCK, GUO_CAPACITY);
    let n_free = (alpha * GUO_SKUS as f64 - 1e-9).ceil() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut skus: Vec<u32> = (0..GUO_SKUS as u32).collect();
    skus.shuffle(&mut rng);
    let mut fixed_skus = skus[n_free..].to_vec();
    fixed_skus.sort_unstable();

    let mut slots: Vec<usize> = layout
        .locations()
        .iter()
        .flat_map(|l| std::iter::repeat(l.id).take(l.capacity as usize))
        .collect();
    slots.shuffle(&mut rng);
    let fixed = fixed_skus.iter().zip(slots).map(|(&s, l)| (s, l)).collect();

    let orders = (0..n_orders)
        .map(|_| {
            let size = rng.gen_range(1..=10);
            sample_order(&mut rng, GUO_SKUS, size)
        })
        .collect();

    let mut meta = BTreeMap::new();
    meta.insert("policy".to_string(), "return".to_string());
    meta.insert(
        "assumed_layout".to_string(),
        format!(
            "aisles={GUO_AISLES} bays_per_block={GUO_BAYS_PER_BLOCK} capacity={GUO_CAPACITY} D=1 d=1"
        ),
    );
    Ok(Instance {
        name: Some(format!("guo-a{}-o{n_orders}-{seed}", (alpha * 100.0).round() as u32)),
        layout,
        skus: (0..GUO_SKUS as u32).collect(),
        orders,
        fixed,
        seed: Some(seed),
        meta,
    })
}

/// Free-form random instance, used for small verification runs.
#[derive(Debug, Clone)]
pub struct RandomSpec {
    pub layout: Layout,
    pub n_skus: usize,
    pub n_orders: usize,
    pub min_order_size: usize,
    pub max_order_size: usize,
    pub n_fixed: usize,
}

pub fn generate_random_instance(spec: &RandomSpec, seed: u64) -> Result<Instance, ModelError> {
    spec.layout.check()?;
    let locs = spec.layout.locations();
    let cap: usize = locs.iter().map(|l| l.capacity as usize).sum();
    if spec.n_skus == 0 || spec.n_skus > cap {
        return Err(ModelError::InvalidParameter(format!("{} skus for {} slots", spec.n_skus, cap)));
    }
    if spec.min_order_size == 0 || spec.min_order_size > spec.max_order_size || spec.max_order_size > spec.n_skus {
        return Err(ModelError::InvalidParameter("bad order size range".into()));
    }
    if spec.n_fixed > spec.n_skus {
        return Err(ModelError::InvalidParameter("more fixed skus than skus".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let orders = (0..spec.n_orders)
        .map(|_| {
            let size = rng.gen_range(spec.min_order_size..=spec.max_order_size);
            sample_order(&mut rng, spec.n_skus, size)
        })
        .collect();
    let mut slots: Vec<usize> =
        locs.iter().flat_map(|l| std::iter::repeat(l.id).take(l.capacity as usize)).collect();
    slots.shuffle(&mut rng);
    let mut fixed_skus: Vec<u32> = index::sample(&mut rng, spec.n_skus, spec.n_fixed)
        .into_iter()
        .map(|s| s as u32)
        .collect();
    fixed_skus.sort_unstable();
    let fixed = fixed_skus.into_iter().zip(slots).collect();
    Ok(Instance {
        name: Some(format!("random-{seed}")),
        layout: spec.layout.clone(),
        skus: (0..spec.n_skus as u32).collect(),
        orders,
        fixed,
        seed: Some(seed),
        meta: BTreeMap::new(),
    })
}

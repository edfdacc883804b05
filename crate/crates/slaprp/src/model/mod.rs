//! Warehouse layouts, instances, the storage-node graph and walking distances.

mod generate;
mod layout;

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use generate::{generate_guo_instance, generate_random_instance, generate_silva_instance, RandomSpec};
pub use layout::{gcd, Layout, LayoutKind, Location};

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid layout: {0}")]
    InvalidLayout(String),
    #[error("unknown location {0}")]
    UnknownLocation(usize),
    #[error("{0} requires a {1} layout")]
    WrongLayout(&'static str, &'static str),
    #[error("invalid generator parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid instance: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Instance file contents: layout, SKUs, orders and pre-placed SKUs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub layout: Layout,
    pub skus: Vec<u32>,
    pub orders: Vec<Vec<u32>>,
    #[serde(default)]
    pub fixed: Vec<(u32, usize)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Free-form annotations, e.g. which layout parameters were assumed.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl Instance {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("instance serialises")
    }

    pub fn load(path: &Path) -> Result<Self, ModelError> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<(), ModelError> {
        std::fs::write(path, self.to_json() + "\n")?;
        Ok(())
    }
}

/// Checks every instance invariant and lists all violations found.
pub fn validate_instance(inst: &Instance) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = inst.layout.check() {
        out.push(e.to_string());
        return out;
    }
    let locs = inst.layout.locations();
    let total_cap: u64 = locs.iter().map(|l| l.capacity as u64).sum();
    let mut known = HashMap::new();
    for (i, &s) in inst.skus.iter().enumerate() {
        if known.insert(s, i).is_some() {
            out.push(format!("duplicate sku id {s}"));
        }
    }
    if inst.skus.len() as u64 > total_cap {
        out.push(format!("{} skus exceed total capacity {}", inst.skus.len(), total_cap));
    }
    for (o, order) in inst.orders.iter().enumerate() {
        if order.is_empty() {
            out.push(format!("order {o} is empty"));
        }
        let mut seen = Vec::new();
        for &s in order {
            if !known.contains_key(&s) {
                out.push(format!("order {o} references unknown sku {s}"));
            }
            if seen.contains(&s) {
                out.push(format!("order {o} lists sku {s} twice"));
            }
            seen.push(s);
        }
    }
    let mut used = vec![0u32; locs.len()];
    let mut fixed_seen = Vec::new();
    for &(s, l) in &inst.fixed {
        if !known.contains_key(&s) {
            out.push(format!("fixed assignment references unknown sku {s}"));
        }
        if fixed_seen.contains(&s) {
            out.push(format!("sku {s} fixed twice"));
        }
        fixed_seen.push(s);
        match used.get_mut(l) {
            Some(u) => *u += 1,
            None => out.push(format!("fixed assignment references unknown location {l}")),
        }
    }
    for (l, &u) in used.iter().enumerate() {
        if u > locs[l].capacity {
            out.push(format!("capacity exceeded at location {l}: {u} fixed skus, capacity {}", locs[l].capacity));
        }
    }
    out
}

/// Geometry and walking distances of a layout.
#[derive(Debug, Clone)]
pub struct Warehouse {
    pub layout: Layout,
    pub locations: Vec<Location>,
    /// Row-major `(n+1)²` matrix; index `n` is the depot.
    dist: Vec<i64>,
}

impl Warehouse {
    pub fn new(layout: &Layout) -> Result<Self, ModelError> {
        layout.check()?;
        let locations = layout.locations();
        let n = locations.len();
        let pos = |i: usize| -> (u32, i64) {
            if i == n {
                (1, 0)
            } else {
                (locations[i].aisle, layout.depth(&locations[i]))
            }
        };
        let mut dist = vec![0; (n + 1) * (n + 1)];
        for i in 0..=n {
            for j in 0..=n {
                let (a1, y1) = pos(i);
                let (a2, y2) = pos(j);
                dist[i * (n + 1) + j] = layout.point_distance(a1, y1, a2, y2);
            }
        }
        Ok(Warehouse { layout: layout.clone(), locations, dist })
    }

    pub fn num_locations(&self) -> usize {
        self.locations.len()
    }

    /// Index used for the depot in [`Warehouse::dist`].
    pub fn depot(&self) -> usize {
        self.locations.len()
    }

    /// Distance between two sites (locations or the depot index).
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> i64 {
        self.dist[i * (self.locations.len() + 1) + j]
    }

    /// Shortest walking distance in a single-block layout.
    pub fn base_distance(&self, l1: usize, l2: usize) -> Result<i64, ModelError> {
        if self.layout.kind != LayoutKind::SingleBlock {
            return Err(ModelError::WrongLayout("base_distance", "single-block"));
        }
        self.checked(l1, l2)
    }

    /// Shortest walking distance in a two-block layout (front, middle and back cross-aisles).
    pub fn two_block_distance(&self, l1: usize, l2: usize) -> Result<i64, ModelError> {
        if self.layout.kind != LayoutKind::TwoBlockMidDepot {
            return Err(ModelError::WrongLayout("two_block_distance", "two-block"));
        }
        self.checked(l1, l2)
    }

    fn checked(&self, l1: usize, l2: usize) -> Result<i64, ModelError> {
        let n = self.locations.len();
        for l in [l1, l2] {
            if l > n {
                return Err(ModelError::UnknownLocation(l));
            }
        }
        Ok(self.dist(l1, l2))
    }

    /// Location id at (aisle, block, bay), all 1-based except block.
    pub fn location_at(&self, aisle: u32, block: u32, bay: u32) -> Option<usize> {
        let l = &self.layout;
        if aisle < 1 || aisle > l.aisles || block >= l.blocks() || bay < 1 || bay > l.bays {
            return None;
        }
        Some((((aisle - 1) * l.blocks() + block) * l.bays + bay - 1) as usize)
    }
}

/// The storage-node graph: node 0 is the depot, location `l` owns nodes
/// `v_l^1 .. v_l^{K_l}`, and the i-th node can only be entered from the (i-1)-th.
#[derive(Debug, Clone)]
pub struct WarehouseGraph {
    offsets: Vec<usize>,
    capacities: Vec<u32>,
}

impl WarehouseGraph {
    pub fn num_nodes(&self) -> usize {
        1 + self.capacities.iter().map(|&k| k as usize).sum::<usize>()
    }

    pub fn num_locations(&self) -> usize {
        self.capacities.len()
    }

    /// Node id of the `visit`-th (1-based) stop at location `l`.
    pub fn node(&self, l: usize, visit: u32) -> usize {
        debug_assert!(visit >= 1 && visit <= self.capacities[l]);
        1 + self.offsets[l] + visit as usize - 1
    }

    /// Inverse of [`WarehouseGraph::node`]; `None` for the depot.
    pub fn location_of(&self, node: usize) -> Option<(usize, u32)> {
        if node == 0 {
            return None;
        }
        let k = node - 1;
        let l = self.offsets.partition_point(|&o| o <= k) - 1;
        Some((l, (k - self.offsets[l]) as u32 + 1))
    }

    pub fn arcs(&self) -> Vec<(usize, usize)> {
        let n = self.capacities.len();
        let mut out = Vec::new();
        for l in 0..n {
            out.push((0, self.node(l, 1)));
        }
        for l in 0..n {
            for i in 1..=self.capacities[l] {
                let v = self.node(l, i);
                out.push((v, 0));
                if i < self.capacities[l] {
                    out.push((v, self.node(l, i + 1)));
                }
                for l2 in (0..n).filter(|&l2| l2 != l) {
                    out.push((v, self.node(l2, 1)));
                }
            }
        }
        out
    }

    pub fn in_degree(&self, node: usize) -> usize {
        self.arcs().iter().filter(|a| a.1 == node).count()
    }
}

pub fn build_graph(layout: &Layout) -> WarehouseGraph {
    let caps: Vec<u32> = layout.locations().iter().map(|l| l.capacity).collect();
    let mut offsets = Vec::with_capacity(caps.len());
    let mut acc = 0;
    for &k in &caps {
        offsets.push(acc);
        acc += k as usize;
    }
    WarehouseGraph { offsets, capacities: caps }
}

/// Validated instance with index-based lookups used by every algorithm.
#[derive(Debug, Clone)]
pub struct Problem {
    pub instance: Instance,
    pub wh: Warehouse,
    /// SKU indices (positions in `instance.skus`) of every order.
    pub orders: Vec<Vec<usize>>,
    /// Orders containing each SKU.
    pub sku_orders: Vec<Vec<usize>>,
    /// Fixed location of each SKU, if pre-placed.
    pub fixed: Vec<Option<usize>>,
    sku_index: HashMap<u32, usize>,
}

impl Problem {
    pub fn new(instance: Instance) -> Result<Self, ModelError> {
        let errs = validate_instance(&instance);
        if !errs.is_empty() {
            return Err(ModelError::Invalid(errs));
        }
        let wh = Warehouse::new(&instance.layout)?;
        let sku_index: HashMap<u32, usize> = instance.skus.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let orders: Vec<Vec<usize>> =
            instance.orders.iter().map(|o| o.iter().map(|s| sku_index[s]).collect()).collect();
        let mut sku_orders = vec![Vec::new(); instance.skus.len()];
        for (o, skus) in orders.iter().enumerate() {
            for &s in skus {
                sku_orders[s].push(o);
            }
        }
        let mut fixed = vec![None; instance.skus.len()];
        for &(s, l) in &instance.fixed {
            fixed[sku_index[&s]] = Some(l);
        }
        Ok(Problem { instance, wh, orders, sku_orders, fixed, sku_index })
    }

    pub fn num_skus(&self) -> usize {
        self.instance.skus.len()
    }

    pub fn num_orders(&self) -> usize {
        self.orders.len()
    }

    pub fn num_locations(&self) -> usize {
        self.wh.num_locations()
    }

    pub fn capacity(&self, l: usize) -> u32 {
        self.wh.locations[l].capacity
    }

    pub fn sku_index(&self, id: u32) -> Option<usize> {
        self.sku_index.get(&id).copied()
    }

    /// Demand d_s: number of orders containing the SKU.
    pub fn demand(&self, s: usize) -> usize {
        self.sku_orders[s].len()
    }

    /// Number of SKUs pre-placed at each location.
    pub fn fixed_occupancy(&self) -> Vec<u32> {
        let mut occ = vec![0; self.num_locations()];
        for l in self.fixed.iter().flatten() {
            occ[*l] += 1;
        }
        occ
    }
}

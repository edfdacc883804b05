use serde::{Deserialize, Serialize};

use super::ModelError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayoutKind {
    SingleBlock,
    TwoBlockMidDepot,
}

/// Rectangular warehouse. `bays` counts bays per aisle, or per aisle and
/// block for the two-block layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Layout {
    pub kind: LayoutKind,
    pub aisles: u32,
    pub bays: u32,
    #[serde(rename = "D")]
    pub aisle_pitch: i64,
    #[serde(rename = "d")]
    pub bay_pitch: i64,
    pub capacity: u32,
    /// `(location, capacity)` pairs overriding the uniform capacity.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub capacity_overrides: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Location {
    pub id: usize,
    /// 1-based aisle index.
    pub aisle: u32,
    /// 0 for the single block or the front (lower) block, 1 for the back block.
    pub block: u32,
    /// 1-based bay index, counted from the cross-aisle the block is entered from.
    pub bay: u32,
    pub capacity: u32,
}

impl Layout {
    pub fn single_block(aisles: u32, bays: u32, capacity: u32) -> Self {
        Layout {
            kind: LayoutKind::SingleBlock,
            aisles,
            bays,
            aisle_pitch: 1,
            bay_pitch: 1,
            capacity,
            capacity_overrides: Vec::new(),
        }
    }

    pub fn two_block(aisles: u32, bays: u32, capacity: u32) -> Self {
        Layout { kind: LayoutKind::TwoBlockMidDepot, ..Self::single_block(aisles, bays, capacity) }
    }

    pub fn with_pitch(mut self, aisle_pitch: i64, bay_pitch: i64) -> Self {
        self.aisle_pitch = aisle_pitch;
        self.bay_pitch = bay_pitch;
        self
    }

    pub fn blocks(&self) -> u32 {
        match self.kind {
            LayoutKind::SingleBlock => 1,
            LayoutKind::TwoBlockMidDepot => 2,
        }
    }

    pub fn num_locations(&self) -> usize {
        (self.aisles * self.blocks() * self.bays) as usize
    }

    pub fn check(&self) -> Result<(), ModelError> {
        let bad = |m: &str| Err(ModelError::InvalidLayout(m.to_string()));
        if self.aisles < 1 {
            return bad("at least one aisle is required");
        }
        if self.bays < 1 {
            return bad("at least one bay per aisle is required");
        }
        if self.aisle_pitch < 1 || self.bay_pitch < 1 {
            return bad("pitches must be positive");
        }
        if self.capacity < 1 {
            return bad("capacity must be positive");
        }
        let n = self.num_locations();
        for &(l, k) in &self.capacity_overrides {
            if l >= n {
                return bad(&format!("capacity override for unknown location {l}"));
            }
            if k < 1 {
                return bad(&format!("capacity override for location {l} must be positive"));
            }
        }
        Ok(())
    }

    /// Locations in aisle-major order, then block, then bay.
    pub fn locations(&self) -> Vec<Location> {
        let mut out = Vec::with_capacity(self.num_locations());
        for a in 1..=self.aisles {
            for block in 0..self.blocks() {
                for b in 1..=self.bays {
                    out.push(Location { id: out.len(), aisle: a, block, bay: b, capacity: self.capacity });
                }
            }
        }
        for &(l, k) in &self.capacity_overrides {
            if let Some(loc) = out.get_mut(l) {
                loc.capacity = k;
            }
        }
        out
    }

    /// Signed distance from the depot's cross-aisle along the aisle.
    pub fn depth(&self, loc: &Location) -> i64 {
        let y = loc.bay as i64 * self.bay_pitch;
        match (self.kind, loc.block) {
            (LayoutKind::TwoBlockMidDepot, 0) => -y,
            _ => y,
        }
    }

    /// Positions of the cross-aisles along the aisle axis.
    pub fn cross_aisles(&self) -> Vec<i64> {
        let end = (self.bays as i64 + 1) * self.bay_pitch;
        match self.kind {
            LayoutKind::SingleBlock => vec![0, end],
            LayoutKind::TwoBlockMidDepot => vec![-end, 0, end],
        }
    }

    /// Walking distance between two points given as (aisle, depth); the depot is (1, 0).
    pub fn point_distance(&self, a1: u32, y1: i64, a2: u32, y2: i64) -> i64 {
        if a1 == a2 {
            return (y1 - y2).abs();
        }
        let horiz = self.aisle_pitch * (a1 as i64 - a2 as i64).abs();
        let vert = self.cross_aisles().into_iter().map(|c| (y1 - c).abs() + (y2 - c).abs()).min().unwrap();
        horiz + vert
    }

    /// 2·gcd(D, d): every route length is a multiple of this step.
    pub fn bound_step(&self) -> i64 {
        2 * gcd(self.aisle_pitch, self.bay_pitch)
    }
}

pub fn gcd(mut a: i64, mut b: i64) -> i64 {
    a = a.abs();
    b = b.abs();
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

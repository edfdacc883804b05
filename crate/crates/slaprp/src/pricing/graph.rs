//! Policy-restricted arcs for the pricer.
//!
//! Heuristic policies admit exactly one visiting order per stop set (two for a
//! largest-gap aisle that can be split several ways), so arcs only go
//! "forward" along that order and their length depends on a small phase
//! (orientation, first aisle, per-aisle turn points).

use fixedbitset::FixedBitSet;

use crate::model::{build_graph, Warehouse};
use crate::routing::{midpoint_of, Policy, RoutingError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mode {
    /// At the depot, nothing picked yet.
    Start,
    /// No phase: optimal routing and return routing.
    Free,
    /// S-shape: current aisle entered from the front / from the back.
    Front,
    Back,
    /// Split policies: first aisle (walked up from the front).
    First,
    /// Aisles entered from the back cross-aisle, walking down.
    Upper,
    /// Midpoint only: the last aisle, below the midpoint.
    Last,
    /// Lower parts of middle aisles, served from the front on the way home.
    Lower,
}

/// Policy state carried by a label. Two labels can only dominate each other
/// when their phases are equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Phase {
    pub mode: Mode,
    /// First visited aisle (split policies), 0 when unset.
    pub first_aisle: u32,
    /// Largest gap only: per aisle the lowest bay served from the back
    /// (0 = none), then per aisle the largest gap among back-served picks,
    /// then the largest gap so far in the current lower aisle.
    pub memo: Vec<u32>,
}

/// Outcome of following one arc.
#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Go(i64, Phase),
    /// The policy does not allow this move.
    NoArc,
    /// Allowed, but the partial route can no longer follow the largest-gap
    /// rule (the turn point chosen for a finished aisle is not its largest gap).
    Kill,
}

/// Restricted arc set and arc lengths of one routing policy.
#[derive(Debug, Clone)]
pub struct PolicyGraph {
    pub policy: Policy,
    wh: Warehouse,
    aisle: Vec<u32>,
    block: Vec<u32>,
    bay: Vec<u32>,
    n_aisles: u32,
    n_bays: u32,
    dd: i64,
    d: i64,
    mp: u32,
    /// Largest-gap turn-point pruning (exact either way).
    pub gap_kill: bool,
}

pub fn build_policy_graph(wh: &Warehouse, policy: Policy) -> Result<PolicyGraph, RoutingError> {
    if !policy.supports(wh.layout.kind) {
        return Err(RoutingError::Unsupported(policy));
    }
    let l = &wh.layout;
    Ok(PolicyGraph {
        policy,
        wh: wh.clone(),
        aisle: wh.locations.iter().map(|x| x.aisle).collect(),
        block: wh.locations.iter().map(|x| x.block).collect(),
        bay: wh.locations.iter().map(|x| x.bay).collect(),
        n_aisles: l.aisles,
        n_bays: l.bays,
        dd: l.aisle_pitch,
        d: l.bay_pitch,
        mp: midpoint_of(l.bays),
        gap_kill: true,
    })
}

impl PolicyGraph {
    pub fn num_locations(&self) -> usize {
        self.aisle.len()
    }

    pub fn warehouse(&self) -> &Warehouse {
        &self.wh
    }

    pub fn start_phase(&self) -> Phase {
        let memo = if self.policy == Policy::LargestGap { vec![0; 2 * self.n_aisles as usize + 1] } else { Vec::new() };
        Phase { mode: Mode::Start, first_aisle: 0, memo }
    }

    /// Arc count of the storage-node graph, which optimal routing uses in full.
    pub fn full_arc_count(&self) -> usize {
        build_graph(&self.wh.layout).arcs().len()
    }

    fn depot_leg(&self, l: usize) -> i64 {
        self.wh.dist(self.wh.depot(), l)
    }

    /// Walk from depth `b1` to the back cross-aisle, along it, and down to `b2`.
    fn via_back(&self, b1: u32, a1: u32, a2: u32, b2: u32) -> i64 {
        let top = self.n_bays as i64 + 1;
        self.d * (top - b1 as i64) + self.dd * (a2 as i64 - a1 as i64).abs() + self.d * (top - b2 as i64)
    }

    fn via_front(&self, b1: u32, a1: u32, a2: u32, b2: u32) -> i64 {
        self.d * b1 as i64 + self.dd * (a2 as i64 - a1 as i64).abs() + self.d * b2 as i64
    }

    /// Effective upper turn point of aisle `a` (largest gap): bays strictly
    /// below it may be served from the front.
    fn p_up(&self, ph: &Phase, a: u32) -> u32 {
        match ph.memo[a as usize - 1] {
            0 => self.n_bays + 1,
            p => p,
        }
    }

    fn up_gap(&self, ph: &Phase, a: u32) -> u32 {
        ph.memo[(self.n_aisles + a) as usize - 1]
    }

    fn low_gap_slot(&self) -> usize {
        2 * self.n_aisles as usize
    }

    /// May bay `b` of middle aisle `a` be served from the front?
    fn lower_ok(&self, ph: &Phase, a: u32, b: u32) -> bool {
        match self.policy {
            Policy::Midpoint => b <= self.mp,
            _ => b < self.p_up(ph, a),
        }
    }

    /// Largest-gap check for a lower aisle currently at bay `b`.
    fn lower_alive(&self, ph: &Phase, a: u32, b: u32) -> bool {
        if !self.gap_kill || self.policy != Policy::LargestGap {
            return true;
        }
        let split = self.p_up(ph, a) - b;
        split >= self.up_gap(ph, a).max(ph.memo[self.low_gap_slot()])
    }

    /// Move from `from` (None = depot) in phase `ph` to a first stop at `to`.
    pub fn step(&self, from: Option<usize>, ph: &Phase, to: usize) -> Step {
        let (at, bt) = (self.aisle[to], self.bay[to]);
        let Some(f) = from else {
            let mode = match self.policy {
                Policy::Optimal | Policy::Return => Mode::Free,
                Policy::SShape => Mode::Front,
                _ => Mode::First,
            };
            let mut next = ph.clone();
            next.mode = mode;
            if mode == Mode::First {
                next.first_aisle = at;
            }
            return Step::Go(self.depot_leg(to), next);
        };
        if f == to {
            return Step::NoArc;
        }
        let (af, bf) = (self.aisle[f], self.bay[f]);
        match self.policy {
            Policy::Optimal => Step::Go(self.wh.dist(f, to), ph.clone()),
            Policy::Return => {
                if to < f {
                    Step::NoArc
                } else if af == at && self.block[f] == self.block[to] {
                    Step::Go(self.d * (bt - bf) as i64, ph.clone())
                } else {
                    Step::Go(self.via_front(bf, af, at, bt), ph.clone())
                }
            }
            Policy::SShape => {
                let mut next = ph.clone();
                match ph.mode {
                    Mode::Front if af == at && bt > bf => Step::Go(self.d * (bt - bf) as i64, next),
                    Mode::Back if af == at && bt < bf => Step::Go(self.d * (bf - bt) as i64, next),
                    Mode::Front if at > af => {
                        next.mode = Mode::Back;
                        Step::Go(self.via_back(bf, af, at, bt), next)
                    }
                    Mode::Back if at > af => {
                        next.mode = Mode::Front;
                        Step::Go(self.via_front(bf, af, at, bt), next)
                    }
                    _ => Step::NoArc,
                }
            }
            Policy::Midpoint | Policy::LargestGap => self.split_step(f, ph, to),
        }
    }

    fn split_step(&self, f: usize, ph: &Phase, to: usize) -> Step {
        let (af, bf) = (self.aisle[f], self.bay[f]);
        let (at, bt) = (self.aisle[to], self.bay[to]);
        let u = ph.first_aisle;
        let lg = self.policy == Policy::LargestGap;
        let mut next = ph.clone();
        // Mode after entering an aisle from the back at bay bt.
        let back_mode = |b: u32| if !lg && b <= self.mp { Mode::Last } else { Mode::Upper };
        let mark_upper = |next: &mut Phase, a: u32, gap: u32| {
            if lg {
                next.memo[a as usize - 1] = bt;
                let g = &mut next.memo[(self.n_aisles + a) as usize - 1];
                *g = (*g).max(gap);
            }
        };
        let enter_lower = |next: &mut Phase| -> Step {
            next.mode = Mode::Lower;
            if lg {
                next.memo[self.low_gap_slot()] = bt;
                if !self.lower_alive(next, at, bt) {
                    return Step::Kill;
                }
            }
            Step::Go(self.via_front(bf, af, at, bt), next.clone())
        };
        match ph.mode {
            Mode::First => {
                if at == af && bt > bf {
                    Step::Go(self.d * (bt - bf) as i64, next)
                } else if at > af {
                    next.mode = back_mode(bt);
                    mark_upper(&mut next, at, self.n_bays + 1 - bt);
                    Step::Go(self.via_back(bf, af, at, bt), next)
                } else {
                    Step::NoArc
                }
            }
            Mode::Upper => {
                if at == af && bt < bf {
                    next.mode = back_mode(bt);
                    mark_upper(&mut next, at, bf - bt);
                    Step::Go(self.d * (bf - bt) as i64, next)
                } else if at > af {
                    // Aisle af turned out to be a middle aisle.
                    if lg && self.gap_kill && self.p_up(ph, af) < self.up_gap(ph, af) {
                        return Step::Kill;
                    }
                    next.mode = back_mode(bt);
                    mark_upper(&mut next, at, self.n_bays + 1 - bt);
                    Step::Go(self.via_back(bf, af, at, bt), next)
                } else if at > u && at < af && self.lower_ok(ph, at, bt) {
                    enter_lower(&mut next)
                } else {
                    Step::NoArc
                }
            }
            Mode::Last => {
                if at == af && bt < bf {
                    Step::Go(self.d * (bf - bt) as i64, next)
                } else if at > u && at < af && self.lower_ok(ph, at, bt) {
                    enter_lower(&mut next)
                } else {
                    Step::NoArc
                }
            }
            Mode::Lower => {
                if at == af && bt > bf && self.lower_ok(ph, at, bt) {
                    if lg {
                        let slot = self.low_gap_slot();
                        next.memo[slot] = next.memo[slot].max(bt - bf);
                        if !self.lower_alive(&next, at, bt) {
                            return Step::Kill;
                        }
                    }
                    Step::Go(self.d * (bt - bf) as i64, next)
                } else if at > u && at < af && self.lower_ok(ph, at, bt) {
                    enter_lower(&mut next)
                } else {
                    Step::NoArc
                }
            }
            Mode::Start | Mode::Free | Mode::Front | Mode::Back => Step::NoArc,
        }
    }

    /// Length of the walk back to the depot from the last stop.
    /// Every policy leaves its last aisle through the depot cross-aisle.
    pub fn close(&self, from: usize) -> i64 {
        self.depot_leg(from)
    }

    /// Locations the policy can still reach as first stops from `from` in
    /// phase `ph`, ignoring what has been visited. Not used for optimal routing.
    pub fn future(&self, from: Option<usize>, ph: &Phase) -> FixedBitSet {
        let n = self.num_locations();
        let mut out = FixedBitSet::with_capacity(n);
        let Some(f) = from else {
            out.insert_range(..);
            return out;
        };
        let (af, bf) = (self.aisle[f], self.bay[f]);
        let u = ph.first_aisle;
        for l in 0..n {
            let (a, b) = (self.aisle[l], self.bay[l]);
            let ok = match (self.policy, ph.mode) {
                (Policy::Optimal, _) => l != f,
                (Policy::Return, _) => l > f,
                (_, Mode::Front) | (_, Mode::First) => a > af || (a == af && b > bf),
                (_, Mode::Back) => a > af || (a == af && b < bf),
                (_, Mode::Upper) => {
                    a > af || (a == af && b < bf) || (a > u && a < af && self.lower_ok(ph, a, b))
                }
                (_, Mode::Last) => (a == af && b < bf) || (a > u && a < af && self.lower_ok(ph, a, b)),
                (_, Mode::Lower) => {
                    (a == af && b > bf && self.lower_ok(ph, a, b)) || (a > u && a < af && self.lower_ok(ph, a, b))
                }
                (_, Mode::Start) | (_, Mode::Free) => true,
            };
            if ok {
                out.insert(l);
            }
        }
        out
    }
}

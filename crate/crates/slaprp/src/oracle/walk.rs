//! Grid-walk reference: the picker moves one bay or one aisle at a time along
//! aisles and cross-aisles, following each policy's textual rules.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use crate::model::{Layout, LayoutKind};
use crate::routing::Policy;

/// Grid node: (0-based aisle, bay row). Rows are bay units from the depot's
/// cross-aisle; the depot sits at (0, 0).
type Cell = (i64, i64);

struct Walker<'a> {
    layout: &'a Layout,
    pos: Cell,
    steps_aisle: i64,
    steps_bay: i64,
}

impl<'a> Walker<'a> {
    fn new(layout: &'a Layout) -> Self {
        Walker { layout, pos: (0, 0), steps_aisle: 0, steps_bay: 0 }
    }

    fn edge_row(&self) -> i64 {
        self.layout.bays as i64 + 1
    }

    fn is_cross_row(&self, row: i64) -> bool {
        match self.layout.kind {
            LayoutKind::SingleBlock => row == 0 || row == self.edge_row(),
            LayoutKind::TwoBlockMidDepot => row == 0 || row.abs() == self.edge_row(),
        }
    }

    fn step_row(&mut self, target: i64) {
        while self.pos.1 != target {
            self.pos.1 += (target - self.pos.1).signum();
            self.steps_bay += 1;
        }
    }

    /// Walk along the current cross-aisle to another aisle.
    fn step_aisle(&mut self, target: i64) {
        assert!(self.is_cross_row(self.pos.1), "aisle change away from a cross-aisle");
        while self.pos.0 != target {
            self.pos.0 += (target - self.pos.0).signum();
            self.steps_aisle += 1;
        }
    }

    fn distance(&self) -> i64 {
        self.steps_aisle * self.layout.aisle_pitch + self.steps_bay * self.layout.bay_pitch
    }
}

/// Picks as (0-based aisle, signed bay row).
fn cells(layout: &Layout, stops: &[usize]) -> Vec<Cell> {
    let locs = layout.locations();
    stops
        .iter()
        .map(|&l| {
            let loc = &locs[l];
            let row = loc.bay as i64;
            let row = if layout.kind == LayoutKind::TwoBlockMidDepot && loc.block == 0 { -row } else { row };
            (loc.aisle as i64 - 1, row)
        })
        .collect()
}

fn by_aisle(picks: &[Cell]) -> BTreeMap<i64, Vec<i64>> {
    let mut m: BTreeMap<i64, Vec<i64>> = BTreeMap::new();
    for &(a, r) in picks {
        m.entry(a).or_default().push(r);
    }
    for v in m.values_mut() {
        v.sort_unstable();
        v.dedup();
    }
    m
}

fn walk_return(w: &mut Walker, picks: &[Cell]) {
    for (a, rows) in by_aisle(picks) {
        w.step_aisle(a);
        // Each side of the depot cross-aisle is its own dead end.
        let low = *rows.first().unwrap();
        let high = *rows.last().unwrap();
        if low < 0 {
            w.step_row(low);
            w.step_row(0);
        }
        if high > 0 {
            w.step_row(high);
            w.step_row(0);
        }
    }
}

fn walk_sshape(w: &mut Walker, picks: &[Cell]) {
    let aisles = by_aisle(picks);
    let m = aisles.len();
    let back = w.edge_row();
    for (i, (a, rows)) in aisles.into_iter().enumerate() {
        w.step_aisle(a);
        if i == m - 1 && m % 2 == 1 {
            w.step_row(*rows.last().unwrap());
            w.step_row(0);
        } else if w.pos.1 == 0 {
            w.step_row(back);
        } else {
            w.step_row(0);
        }
    }
}

/// Shared skeleton of midpoint and largest gap: traverse the first aisle,
/// serve upper parts of middle aisles from the back, traverse the last aisle,
/// serve lower parts from the front on the way home.
fn walk_split(w: &mut Walker, picks: &[Cell], split: impl Fn(&[i64]) -> i64) {
    let aisles = by_aisle(picks);
    if aisles.len() == 1 {
        return walk_return(w, picks);
    }
    let back = w.edge_row();
    let first = *aisles.keys().next().unwrap();
    let last = *aisles.keys().next_back().unwrap();
    // split(rows) = highest row served from the front.
    let splits: BTreeMap<i64, i64> = aisles.iter().map(|(&a, rows)| (a, split(rows))).collect();

    w.step_aisle(first);
    w.step_row(back);
    for (&a, rows) in aisles.range(first + 1..last) {
        let upper: Vec<i64> = rows.iter().copied().filter(|&r| r > splits[&a]).collect();
        if let Some(&lowest) = upper.first() {
            w.step_aisle(a);
            w.step_row(lowest);
            w.step_row(back);
        }
    }
    w.step_aisle(last);
    w.step_row(0);
    for (&a, rows) in aisles.range(first + 1..last).rev() {
        let lower: Vec<i64> = rows.iter().copied().filter(|&r| r <= splits[&a]).collect();
        if let Some(&highest) = lower.last() {
            w.step_aisle(a);
            w.step_row(highest);
            w.step_row(0);
        }
    }
}

/// Length of the walk a picker following `policy` makes to collect `stops`
/// (location ids; repeats allowed). Optimal routing is brute-forced over stop
/// orders with grid shortest paths.
pub fn trace_policy_path(stops: &[usize], policy: Policy, layout: &Layout) -> i64 {
    if stops.is_empty() {
        return 0;
    }
    let picks = cells(layout, stops);
    if policy == Policy::Optimal {
        return brute_force_tour(layout, &picks);
    }
    assert!(
        layout.kind == LayoutKind::SingleBlock || policy == Policy::Return,
        "{policy} is not defined on a two-block layout"
    );
    let mut w = Walker::new(layout);
    let bays = layout.bays as i64;
    match policy {
        Policy::Return => walk_return(&mut w, &picks),
        Policy::SShape => walk_sshape(&mut w, &picks),
        Policy::Midpoint => walk_split(&mut w, &picks, |_| bays / 2),
        Policy::LargestGap => walk_split(&mut w, &picks, |rows| {
            // Try every cut between consecutive picks (and the aisle ends) and
            // keep the one leaving the longest stretch unwalked.
            let mut bounds = vec![0];
            bounds.extend_from_slice(rows);
            bounds.push(bays + 1);
            let mut best = (i64::MIN, 0);
            for k in 0..bounds.len() - 1 {
                let gap = bounds[k + 1] - bounds[k];
                if gap > best.0 {
                    best = (gap, bounds[k]);
                }
            }
            best.1
        }),
        Policy::Optimal => unreachable!(),
    }
    w.step_aisle(0);
    w.step_row(0);
    w.distance()
}

/// All-pairs shortest paths on the explicit corridor grid.
pub struct GridDistances {
    layout: Layout,
    rows: Vec<i64>,
    dist: Vec<Vec<i64>>,
}

impl GridDistances {
    pub fn new(layout: &Layout) -> Self {
        let edge = layout.bays as i64 + 1;
        let rows: Vec<i64> = match layout.kind {
            LayoutKind::SingleBlock => (0..=edge).collect(),
            LayoutKind::TwoBlockMidDepot => (-edge..=edge).collect(),
        };
        let na = layout.aisles as usize;
        let nr = rows.len();
        let id = |a: usize, r: usize| a * nr + r;
        let mut adj: Vec<Vec<(usize, i64)>> = vec![Vec::new(); na * nr];
        for a in 0..na {
            for r in 0..nr {
                if r + 1 < nr {
                    adj[id(a, r)].push((id(a, r + 1), layout.bay_pitch));
                    adj[id(a, r + 1)].push((id(a, r), layout.bay_pitch));
                }
                let row = rows[r];
                let cross = row == 0 || row.abs() == edge;
                if cross && a + 1 < na {
                    adj[id(a, r)].push((id(a + 1, r), layout.aisle_pitch));
                    adj[id(a + 1, r)].push((id(a, r), layout.aisle_pitch));
                }
            }
        }
        let dist = (0..na * nr).map(|src| dijkstra(&adj, src)).collect();
        GridDistances { layout: layout.clone(), rows, dist }
    }

    fn node(&self, c: Cell) -> usize {
        let r = self.rows.iter().position(|&x| x == c.1).unwrap();
        c.0 as usize * self.rows.len() + r
    }

    pub fn between(&self, a: Cell, b: Cell) -> i64 {
        self.dist[self.node(a)][self.node(b)]
    }

    /// Distance between two locations, or the depot when `None`.
    pub fn location_distance(&self, l1: Option<usize>, l2: Option<usize>) -> i64 {
        let c = |l: Option<usize>| l.map(|l| cells(&self.layout, &[l])[0]).unwrap_or((0, 0));
        self.between(c(l1), c(l2))
    }
}

fn dijkstra(adj: &[Vec<(usize, i64)>], src: usize) -> Vec<i64> {
    let mut dist = vec![i64::MAX; adj.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0;
    heap.push(Reverse((0, src)));
    while let Some(Reverse((d, u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            if d + w < dist[v] {
                dist[v] = d + w;
                heap.push(Reverse((d + w, v)));
            }
        }
    }
    dist
}

fn brute_force_tour(layout: &Layout, picks: &[Cell]) -> i64 {
    let grid = GridDistances::new(layout);
    let mut distinct: Vec<Cell> = picks.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    assert!(distinct.len() <= 9, "brute-force tour limited to 9 distinct stops");
    let mut best = i64::MAX;
    permute(&mut distinct, 0, &mut |order| {
        let mut at = (0, 0);
        let mut total = 0;
        for &c in order {
            total += grid.between(at, c);
            at = c;
        }
        total += grid.between(at, (0, 0));
        best = best.min(total);
    });
    best
}

pub(crate) fn permute<T: Copy>(items: &mut [T], k: usize, f: &mut impl FnMut(&[T])) {
    if k == items.len() {
        f(items);
        return;
    }
    for i in k..items.len() {
        items.swap(k, i);
        permute(items, k + 1, f);
        items.swap(k, i);
    }
}

use crate::lp::INF;
use crate::model::{build_graph, LayoutKind, Problem};
use crate::routing::{midpoint_of, Policy};

use super::{CompactError, MipModel, Sense, VarKind};

/// Options for the policy formulations.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MipOptions {
    /// Keep the published text as is, including the rows known to misprice
    /// (unconditional `s_o >= 1 - u_oa` and `gamma_oa <= b(1 - s_o)` for the
    /// largest gap, a binary `u_o` for the midpoint).
    pub verbatim: bool,
}

fn sku_id(p: &Problem, s: usize) -> i64 {
    p.instance.skus[s] as i64
}

/// ξ_ls for every SKU and location; pre-placed SKUs are fixed through bounds.
/// Adds the capacity and assignment rows.
fn assignment_block(m: &mut MipModel, p: &Problem) -> Vec<Vec<usize>> {
    let n_l = p.num_locations();
    let xi: Vec<Vec<usize>> = (0..p.num_skus())
        .map(|s| {
            let id = sku_id(p, s);
            (0..n_l)
                .map(|l| {
                    let (lo, hi) = match p.fixed[s] {
                        Some(f) if f == l => (1.0, 1.0),
                        Some(_) => (0.0, 0.0),
                        None => (0.0, 1.0),
                    };
                    m.add_var(format!("xi_s{id}_l{l}"), VarKind::Binary, lo, hi, "xi", &[id, l as i64])
                })
                .collect()
        })
        .collect();
    for l in 0..n_l {
        let terms = (0..p.num_skus()).map(|s| (xi[s][l], 1.0)).collect();
        m.add_row(format!("cap_l{l}"), terms, Sense::Le, p.capacity(l) as f64);
    }
    for (s, row) in xi.iter().enumerate() {
        let terms = row.iter().map(|&v| (v, 1.0)).collect();
        m.add_row(format!("assign_s{}", sku_id(p, s)), terms, Sense::Eq, 1.0);
    }
    xi
}

/// Capacity and assignment rows alone.
pub fn emit_assignment_polytope(p: &Problem) -> MipModel {
    let mut m = MipModel::new("assignment");
    assignment_block(&mut m, p);
    m
}

struct Routing {
    /// x^o_ij per order, aligned with `arcs`.
    x: Vec<Vec<usize>>,
    arcs: Vec<(usize, usize)>,
}

/// Tour rows shared by both compact formulations: depot degree, flow
/// conservation, stop count and linking.
fn routing_block(m: &mut MipModel, p: &Problem, xi: &[Vec<usize>]) -> Result<Routing, CompactError> {
    if p.instance.layout.kind != LayoutKind::SingleBlock && p.instance.layout.kind != LayoutKind::TwoBlockMidDepot {
        return Err(CompactError::Unsupported("unknown layout".into()));
    }
    let g = build_graph(&p.instance.layout);
    let arcs = g.arcs();
    let depot = p.wh.depot();
    let site = |node: usize| g.location_of(node).map_or(depot, |(l, _)| l);
    let n_nodes = g.num_nodes();
    let mut x = Vec::with_capacity(p.num_orders());
    for (o, skus) in p.orders.iter().enumerate() {
        let xo: Vec<usize> = arcs
            .iter()
            .map(|&(i, j)| {
                let v = m.add_var(format!("x_o{o}_{i}_{j}"), VarKind::Binary, 0.0, 1.0, "x", &[o as i64, i as i64, j as i64]);
                m.objective.push((v, p.wh.dist(site(i), site(j)) as f64));
                v
            })
            .collect();
        let out0 = arcs.iter().zip(&xo).filter(|(a, _)| a.0 == 0).map(|(_, &v)| (v, 1.0)).collect();
        let in0 = arcs.iter().zip(&xo).filter(|(a, _)| a.1 == 0).map(|(_, &v)| (v, 1.0)).collect();
        m.add_row(format!("depot_out_o{o}"), out0, Sense::Eq, 1.0);
        m.add_row(format!("depot_in_o{o}"), in0, Sense::Eq, 1.0);
        for i in 1..n_nodes {
            let mut terms = Vec::new();
            for (a, &v) in arcs.iter().zip(&xo) {
                if a.0 == i {
                    terms.push((v, 1.0));
                }
                if a.1 == i {
                    terms.push((v, -1.0));
                }
            }
            m.add_row(format!("flow_o{o}_{i}"), terms, Sense::Eq, 0.0);
        }
        let into_v = arcs.iter().zip(&xo).filter(|(a, _)| a.1 != 0).map(|(_, &v)| (v, 1.0)).collect();
        m.add_row(format!("stops_o{o}"), into_v, Sense::Eq, skus.len() as f64);
        for l in 0..p.num_locations() {
            let mut terms: Vec<(usize, f64)> = arcs
                .iter()
                .zip(&xo)
                .filter(|(a, _)| a.1 != 0 && site(a.1) == l)
                .map(|(_, &v)| (v, 1.0))
                .collect();
            terms.extend(skus.iter().map(|&s| (xi[s][l], -1.0)));
            m.add_row(format!("link_o{o}_l{l}"), terms, Sense::Ge, 0.0);
        }
        x.push(xo);
    }
    Ok(Routing { x, arcs })
}

/// Compact formulation with MTZ subtour elimination; arc lengths are the
/// shortest walking distances, so it models the optimal policy.
pub fn emit_compact_mtz(p: &Problem) -> Result<MipModel, CompactError> {
    let mut m = MipModel::new("compact_mtz");
    let xi = assignment_block(&mut m, p);
    let r = routing_block(&mut m, p, &xi)?;
    let n_nodes = build_graph(&p.instance.layout).num_nodes();
    for (o, skus) in p.orders.iter().enumerate() {
        let k = skus.len() as f64;
        let u: Vec<usize> = (1..n_nodes)
            .map(|i| m.add_var(format!("u_o{o}_{i}"), VarKind::Continuous, 0.0, k - 1.0, "u", &[o as i64, i as i64]))
            .collect();
        let arc_var: std::collections::HashMap<(usize, usize), usize> =
            r.arcs.iter().copied().zip(r.x[o].iter().copied()).collect();
        for i in 1..n_nodes {
            for j in (1..n_nodes).filter(|&j| j != i) {
                // u_j >= u_i + 1 - |S(o)| (1 - x_ij)
                let mut terms = vec![(u[j - 1], 1.0), (u[i - 1], -1.0)];
                if let Some(&x) = arc_var.get(&(i, j)) {
                    terms.push((x, -k));
                }
                m.add_row(format!("mtz_o{o}_{i}_{j}"), terms, Sense::Ge, 1.0 - k);
            }
        }
    }
    Ok(m)
}

/// Compact formulation with one flow commodity per (order, SKU).
pub fn emit_compact_mcf(p: &Problem) -> Result<MipModel, CompactError> {
    let mut m = MipModel::new("compact_mcf");
    let xi = assignment_block(&mut m, p);
    let r = routing_block(&mut m, p, &xi)?;
    let g = build_graph(&p.instance.layout);
    let site = |node: usize| g.location_of(node).map(|(l, _)| l);
    for (o, skus) in p.orders.iter().enumerate() {
        for &s in skus {
            let id = sku_id(p, s);
            let flow: Vec<usize> = r
                .arcs
                .iter()
                .zip(&r.x[o])
                .map(|(&(i, j), &x)| {
                    let v = m.add_var(
                        format!("g_o{o}_s{id}_{i}_{j}"),
                        VarKind::Continuous,
                        0.0,
                        INF,
                        "g",
                        &[o as i64, id, i as i64, j as i64],
                    );
                    m.add_row(format!("gcap_o{o}_s{id}_{i}_{j}"), vec![(v, 1.0), (x, -1.0)], Sense::Le, 0.0);
                    v
                })
                .collect();
            for l in 0..p.num_locations() {
                let mut terms = Vec::new();
                for (&(i, j), &v) in r.arcs.iter().zip(&flow) {
                    if site(j) == Some(l) {
                        terms.push((v, 1.0));
                    }
                    if site(i) == Some(l) {
                        terms.push((v, -1.0));
                    }
                }
                terms.push((xi[s][l], -1.0));
                m.add_row(format!("gflow_o{o}_s{id}_l{l}"), terms, Sense::Eq, 0.0);
            }
        }
    }
    Ok(m)
}

/// Variables shared by the policy formulations.
struct PolicyVars {
    /// xi[s][a-1][b-1]
    xi: Vec<Vec<Vec<usize>>>,
    f: Vec<Vec<usize>>,
    z: Vec<Vec<usize>>,
}

struct Dims {
    a: usize,
    b: usize,
    bf: f64,
    dd: f64,
    d: f64,
}

fn policy_common(m: &mut MipModel, p: &Problem) -> (PolicyVars, Dims) {
    let layout = &p.instance.layout;
    let dims = Dims {
        a: layout.aisles as usize,
        b: layout.bays as usize,
        bf: layout.bays as f64,
        dd: layout.aisle_pitch as f64,
        d: layout.bay_pitch as f64,
    };
    let flat = assignment_block(m, p);
    let loc = |a: usize, b: usize| p.wh.location_at(a as u32, 0, b as u32).unwrap();
    let xi: Vec<Vec<Vec<usize>>> =
        (0..p.num_skus()).map(|s| (1..=dims.a).map(|a| (1..=dims.b).map(|b| flat[s][loc(a, b)]).collect()).collect()).collect();
    let mut f = Vec::new();
    let mut z = Vec::new();
    for (o, skus) in p.orders.iter().enumerate() {
        let mut fo = Vec::new();
        let mut zo = Vec::new();
        for a in 1..=dims.a {
            let fv = m.add_var(format!("f_o{o}_a{a}"), VarKind::Continuous, 0.0, dims.bf, "f", &[o as i64, a as i64]);
            let zv = m.add_var(format!("z_o{o}_a{a}"), VarKind::Binary, 0.0, 1.0, "z", &[o as i64, a as i64]);
            for &s in skus {
                let mut terms = vec![(fv, 1.0)];
                terms.extend((1..=dims.b).map(|b| (xi[s][a - 1][b - 1], -(b as f64))));
                m.add_row(format!("far_o{o}_a{a}_s{}", sku_id(p, s)), terms, Sense::Ge, 0.0);
            }
            m.add_row(format!("visit_o{o}_a{a}"), vec![(fv, 1.0), (zv, -dims.bf)], Sense::Le, 0.0);
            fo.push(fv);
            zo.push(zv);
        }
        f.push(fo);
        z.push(zo);
    }
    (PolicyVars { xi, f, z }, dims)
}

/// Policy-specific single-block formulation.
pub fn emit_policy_mip(p: &Problem, policy: Policy, opts: MipOptions) -> Result<MipModel, CompactError> {
    if p.instance.layout.kind != LayoutKind::SingleBlock {
        return Err(CompactError::Unsupported(format!("the {policy} formulation needs a single-block layout")));
    }
    let mut m = MipModel::new(&format!("policy_{policy}"));
    let (pv, dims) = policy_common(&mut m, p);
    match policy {
        Policy::Return => return_rows(&mut m, p, &pv, &dims),
        Policy::SShape => sshape_rows(&mut m, p, &pv, &dims),
        Policy::Midpoint => gap_rows(&mut m, p, &pv, &dims, false, opts),
        Policy::LargestGap => gap_rows(&mut m, p, &pv, &dims, true, opts),
        Policy::Optimal => {
            return Err(CompactError::Unsupported("use the compact MTZ or MCF formulation for optimal routing".into()))
        }
    }
    Ok(m)
}

fn return_rows(m: &mut MipModel, p: &Problem, pv: &PolicyVars, k: &Dims) {
    let mut constant = 0.0;
    for o in 0..p.num_orders() {
        let v = m.add_var(format!("v_o{o}"), VarKind::Continuous, 1.0, k.a as f64, "v", &[o as i64]);
        m.objective.push((v, 2.0 * k.dd));
        constant -= 2.0 * k.dd;
        for a in 1..=k.a {
            m.objective.push((pv.f[o][a - 1], 2.0 * k.d));
            m.add_indicator(pv.z[o][a - 1], true, format!("last_o{o}_a{a}"), vec![(v, 1.0)], Sense::Ge, a as f64);
        }
    }
    m.add_constant(constant);
}

fn sshape_rows(m: &mut MipModel, p: &Problem, pv: &PolicyVars, k: &Dims) {
    let bf = k.bf;
    for o in 0..p.num_orders() {
        let oi = o as i64;
        let s = m.add_var(format!("s_o{o}"), VarKind::Binary, 0.0, 1.0, "s", &[oi]);
        let ko = m.add_var(format!("k_o{o}"), VarKind::Integer, 0.0, (k.a / 2) as f64, "k", &[oi]);
        m.objective.push((s, -2.0 * k.d * (bf + 1.0)));
        let v: Vec<usize> = (1..=k.a)
            .map(|a| m.add_var(format!("v_o{o}_a{a}"), VarKind::Binary, 0.0, 1.0, "v", &[oi, a as i64]))
            .collect();
        let mut parity = vec![(ko, -2.0), (s, -1.0)];
        for a in 1..=k.a {
            let (z, f, va) = (pv.z[o][a - 1], pv.f[o][a - 1], v[a - 1]);
            let alpha = m.add_var(format!("alpha_o{o}_a{a}"), VarKind::Continuous, 0.0, INF, "alpha", &[oi, a as i64]);
            m.objective.push((va, 2.0 * k.dd * (a as f64 - 1.0)));
            m.objective.push((z, k.d * (bf + 1.0)));
            m.objective.push((alpha, 2.0 * k.d));
            m.add_indicator(z, false, format!("lastvis_o{o}_a{a}"), vec![(va, 1.0)], Sense::Le, 0.0);
            let before: Vec<(usize, f64)> = v[..a - 1].iter().map(|&c| (c, 1.0)).collect();
            m.add_indicator(z, true, format!("nolater_o{o}_a{a}"), before, Sense::Le, 0.0);
            parity.push((z, 1.0));
            m.add_row(format!("alpha_s_o{o}_a{a}"), vec![(alpha, 1.0), (s, -bf)], Sense::Le, 0.0);
            m.add_row(format!("alpha_f_o{o}_a{a}"), vec![(alpha, 1.0), (f, -1.0)], Sense::Le, 0.0);
            m.add_row(format!("alpha_v_o{o}_a{a}"), vec![(alpha, 1.0), (va, -bf)], Sense::Le, 0.0);
            m.add_row(
                format!("alpha_lb_o{o}_a{a}"),
                vec![(alpha, 1.0), (f, -1.0), (s, -bf), (va, -bf)],
                Sense::Ge,
                -2.0 * bf,
            );
        }
        m.add_row(format!("one_last_o{o}"), v.iter().map(|&x| (x, 1.0)).collect(), Sense::Eq, 1.0);
        m.add_row(format!("parity_o{o}"), parity, Sense::Eq, 0.0);
    }
}

/// Midpoint (`largest = false`) and largest-gap formulations; they share
/// the first/last aisle machinery.
fn gap_rows(m: &mut MipModel, p: &Problem, pv: &PolicyVars, k: &Dims, largest: bool, opts: MipOptions) {
    let (na, nb, bf) = (k.a, k.b, k.bf);
    let af = na as f64;
    let mp = midpoint_of(nb as u32) as usize;
    let mut constant = 0.0;
    for (o, skus) in p.orders.iter().enumerate() {
        let oi = o as i64;
        let var = |m: &mut MipModel, name: &str, kind, lo, hi, a: Option<usize>| {
            let (full, idx) = match a {
                Some(a) => (format!("{name}_o{o}_a{a}"), vec![oi, a as i64]),
                None => (format!("{name}_o{o}"), vec![oi]),
            };
            m.add_var(full, kind, lo, hi, name, &idx)
        };
        let v = var(m, "v", VarKind::Continuous, 1.0, af, None);
        let u = if !largest && opts.verbatim {
            var(m, "u", VarKind::Binary, 0.0, 1.0, None)
        } else {
            var(m, "u", VarKind::Continuous, 1.0, af, None)
        };
        let s = var(m, "s", VarKind::Binary, 0.0, 1.0, None);
        m.objective.push((v, 2.0 * k.dd));
        constant -= 2.0 * k.dd;
        m.objective.push((s, 2.0 * k.d * (bf + 1.0)));
        let per = |m: &mut MipModel, name: &str, kind, hi| -> Vec<usize> {
            (1..=na).map(|a| var(m, name, kind, 0.0, hi, Some(a))).collect()
        };
        let va = per(m, "v", VarKind::Binary, 1.0);
        let ua = per(m, "u", VarKind::Binary, 1.0);
        let w = per(m, "w", VarKind::Binary, 1.0);
        let alpha = per(m, "alpha", VarKind::Binary, 1.0);
        let (z, f) = (&pv.z[o], &pv.f[o]);

        let mut vdef = vec![(v, 1.0)];
        let mut udef = vec![(u, 1.0)];
        for a in 1..=na {
            let af = a as f64;
            let i = a - 1;
            m.add_indicator(z[i], true, format!("last_o{o}_a{a}"), vec![(v, 1.0)], Sense::Ge, af);
            vdef.push((va[i], -af));
            m.add_indicator(z[i], true, format!("first_o{o}_a{a}"), vec![(u, 1.0)], Sense::Le, af);
            let mut t = vec![(alpha[i], 1.0)];
            t.extend(z[..i].iter().map(|&c| (c, -1.0)));
            m.add_row(format!("alpha_o{o}_a{a}"), t, Sense::Le, 0.0);
            m.add_indicator(alpha[i], false, format!("firstlb_o{o}_a{a}"), vec![(u, 1.0)], Sense::Ge, af);
            udef.push((ua[i], -af));
            let below: Vec<(usize, f64)> = ua[..i].iter().map(|&c| (c, -1.0)).collect();
            let above: Vec<(usize, f64)> = va[a..].iter().map(|&c| (c, -1.0)).collect();
            let mut t = vec![(w[i], 1.0)];
            t.extend(&below);
            m.add_row(format!("w_u_o{o}_a{a}"), t, Sense::Le, 0.0);
            let mut t = vec![(w[i], 1.0)];
            t.extend(&above);
            m.add_row(format!("w_v_o{o}_a{a}"), t, Sense::Le, 0.0);
            let mut t = vec![(w[i], 1.0)];
            t.extend(&below);
            t.extend(&above);
            m.add_row(format!("w_lb_o{o}_a{a}"), t, Sense::Ge, -1.0);
            let span = vec![(s, 1.0), (ua[i], 1.0)];
            if largest && opts.verbatim {
                m.add_row(format!("two_o{o}_a{a}"), span, Sense::Ge, 1.0);
            } else {
                m.add_indicator(va[i], true, format!("two_o{o}_a{a}"), span, Sense::Ge, 1.0);
            }
        }
        m.add_row(format!("vdef_o{o}"), vdef, Sense::Eq, 0.0);
        m.add_row(format!("one_last_o{o}"), va.iter().map(|&x| (x, 1.0)).collect(), Sense::Eq, 1.0);
        m.add_row(format!("udef_o{o}"), udef, Sense::Eq, 0.0);
        m.add_row(format!("one_first_o{o}"), ua.iter().map(|&x| (x, 1.0)).collect(), Sense::Eq, 1.0);
        m.add_row(format!("span_o{o}"), vec![(s, 1.0), (v, -1.0), (u, 1.0)], Sense::Le, 0.0);

        for a in 1..=na {
            let i = a - 1;
            let aisle_id = a as i64;
            let xi_at = |sk: usize, b: usize| pv.xi[sk][i][b - 1];
            // Single visited aisle: a return trip, single = f v (1 - s).
            let single = m.add_var(
                format!("{}_o{o}_a{a}", if largest { "delta" } else { "gamma" }),
                VarKind::Continuous,
                0.0,
                INF,
                if largest { "delta" } else { "gamma" },
                &[oi, aisle_id],
            );
            m.objective.push((single, 2.0 * k.d));
            m.add_row(format!("single_s_o{o}_a{a}"), vec![(single, 1.0), (s, bf)], Sense::Le, bf);
            m.add_row(format!("single_f_o{o}_a{a}"), vec![(single, 1.0), (f[i], -1.0)], Sense::Le, 0.0);
            m.add_row(format!("single_v_o{o}_a{a}"), vec![(single, 1.0), (va[i], -bf)], Sense::Le, 0.0);
            m.add_row(
                format!("single_lb_o{o}_a{a}"),
                vec![(single, 1.0), (f[i], -1.0), (s, bf), (va[i], -bf)],
                Sense::Ge,
                -bf,
            );
            if !largest {
                let fm = m.add_var(format!("fminus_o{o}_a{a}"), VarKind::Continuous, 0.0, mp as f64, "f-", &[oi, aisle_id]);
                let fp = m.add_var(
                    format!("fplus_o{o}_a{a}"),
                    VarKind::Continuous,
                    0.0,
                    (nb - mp) as f64,
                    "f+",
                    &[oi, aisle_id],
                );
                for &sk in skus {
                    let id = sku_id(p, sk);
                    let mut t = vec![(fm, 1.0)];
                    t.extend((1..=mp).map(|b| (xi_at(sk, b), -(b as f64))));
                    m.add_row(format!("fminus_o{o}_a{a}_s{id}"), t, Sense::Ge, 0.0);
                    let mut t = vec![(fp, 1.0)];
                    t.extend((mp + 1..=nb).map(|b| (xi_at(sk, b), -((nb + 1 - b) as f64))));
                    m.add_row(format!("fplus_o{o}_a{a}_s{id}"), t, Sense::Ge, 0.0);
                }
                let beta = m.add_var(format!("beta_o{o}_a{a}"), VarKind::Continuous, 0.0, INF, "beta", &[oi, aisle_id]);
                m.objective.push((beta, 2.0 * k.d));
                let b1 = bf + 1.0;
                m.add_row(format!("beta_s_o{o}_a{a}"), vec![(beta, 1.0), (s, -b1)], Sense::Le, 0.0);
                m.add_row(format!("beta_f_o{o}_a{a}"), vec![(beta, 1.0), (fm, -1.0), (fp, -1.0)], Sense::Le, 0.0);
                m.add_row(format!("beta_w_o{o}_a{a}"), vec![(beta, 1.0), (w[i], -b1)], Sense::Le, 0.0);
                m.add_row(
                    format!("beta_lb_o{o}_a{a}"),
                    vec![(beta, 1.0), (fm, -1.0), (fp, -1.0), (s, -b1), (w[i], -b1)],
                    Sense::Ge,
                    -2.0 * b1,
                );
                continue;
            }
            let b1 = bf + 1.0;
            // g_oab for b in 0..=nb: gap above the pick at b (b = 0: the front cross-aisle).
            let g: Vec<usize> = (0..=nb)
                .map(|b| {
                    m.add_var(
                        format!("g_o{o}_a{a}_b{b}"),
                        VarKind::Continuous,
                        0.0,
                        b1 - b as f64,
                        "g",
                        &[oi, aisle_id, b as i64],
                    )
                })
                .collect();
            let h: Vec<usize> = (0..=nb)
                .map(|b| m.add_var(format!("h_o{o}_a{a}_b{b}"), VarKind::Binary, 0.0, 1.0, "h", &[oi, aisle_id, b as i64]))
                .collect();
            let big_g = m.add_var(format!("G_o{o}_a{a}"), VarKind::Continuous, 0.0, INF, "G", &[oi, aisle_id]);
            let gamma = m.add_var(format!("gamma_o{o}_a{a}"), VarKind::Continuous, 0.0, INF, "gamma", &[oi, aisle_id]);
            m.objective.push((gamma, 2.0 * k.d));
            m.add_indicator(z[i], false, format!("gfront_empty_o{o}_a{a}"), vec![(g[0], 1.0)], Sense::Eq, b1);
            for &sk in skus {
                let id = sku_id(p, sk);
                for b in 1..=nb {
                    m.add_indicator(
                        xi_at(sk, b),
                        true,
                        format!("gfront_o{o}_a{a}_s{id}_b{b}"),
                        vec![(g[0], 1.0)],
                        Sense::Le,
                        b as f64,
                    );
                }
            }
            for b in 1..=nb {
                let beta = m.add_var(format!("beta_o{o}_a{a}_b{b}"), VarKind::Binary, 0.0, 1.0, "beta", &[oi, aisle_id, b as i64]);
                let mut t = vec![(beta, 1.0)];
                t.extend(skus.iter().map(|&sk| (xi_at(sk, b), -1.0)));
                m.add_row(format!("pick_o{o}_a{a}_b{b}"), t, Sense::Le, 0.0);
                m.add_indicator(beta, false, format!("nogap_o{o}_a{a}_b{b}"), vec![(g[b], 1.0)], Sense::Eq, 0.0);
                for &sk in skus {
                    let id = sku_id(p, sk);
                    for b2 in b + 1..=nb {
                        m.add_indicator(
                            xi_at(sk, b2),
                            true,
                            format!("gap_o{o}_a{a}_b{b}_s{id}_b{b2}"),
                            vec![(g[b], 1.0)],
                            Sense::Le,
                            (b2 - b) as f64,
                        );
                    }
                }
            }
            for b in 0..=nb {
                m.add_row(format!("gmax_o{o}_a{a}_b{b}"), vec![(big_g, 1.0), (g[b], -1.0)], Sense::Ge, 0.0);
                m.add_row(format!("gsel_o{o}_a{a}_b{b}"), vec![(big_g, 1.0), (g[b], -1.0), (h[b], b1)], Sense::Le, b1);
            }
            m.add_row(format!("hone_o{o}_a{a}"), h.iter().map(|&x| (x, 1.0)).collect(), Sense::Eq, 1.0);
            if opts.verbatim {
                m.add_row(format!("gamma_s_o{o}_a{a}"), vec![(gamma, 1.0), (s, bf)], Sense::Le, bf);
            } else {
                m.add_row(format!("gamma_s_o{o}_a{a}"), vec![(gamma, 1.0), (s, -b1)], Sense::Le, 0.0);
            }
            m.add_row(format!("gamma_g_o{o}_a{a}"), vec![(gamma, 1.0), (big_g, 1.0)], Sense::Le, b1);
            m.add_row(format!("gamma_w_o{o}_a{a}"), vec![(gamma, 1.0), (w[i], -b1)], Sense::Le, 0.0);
            m.add_row(
                format!("gamma_lb_o{o}_a{a}"),
                vec![(gamma, 1.0), (big_g, 1.0), (s, -b1), (w[i], -b1)],
                Sense::Ge,
                -b1,
            );
        }
    }
    m.add_constant(constant);
}

//! Fix-and-resolve rounding of the flow relaxation.
//!
//! With `rho` held at the lattice value `t` of the root relaxation, each
//! connection in turn has its fractional flow decomposed into paths, is given
//! an integral routing of exactly `ceil(t d_k / P)` packets along those paths
//! (or along fewest-hop paths with spare capacity), and is fixed there before
//! the relaxation is re-solved for the rest. Success yields a solution whose
//! value meets the bound, so the search can stop at the root.

use std::collections::VecDeque;

use super::{FlowLayout, MilpInstance};
use crate::solver::{LinearProgram, LpSession, SolveStatus, SolverConfig, SolverError};

const EPS: f64 = 1e-9;

/// Returns a feasible integral solution with objective equal to the rounded
/// root bound, or `None` when the heuristic does not find one.
pub(super) fn round_relaxation(
    milp: &MilpInstance,
    program: &LinearProgram,
    lattice: &dyn Fn(f64) -> f64,
    cfg: &SolverConfig,
) -> Result<Option<Vec<f64>>, SolverError> {
    let Some(mut lp) = LpSession::start(program, cfg)? else {
        return Ok(None);
    };
    let target = lattice(lp.objective()).min(lp.objective());
    if target.is_nan() || target <= 0.0 {
        return Ok(None);
    }
    let layout = &milp.layout;
    let (_, rho_upper) = lp.bounds(milp.rho);
    lp.set_bounds(milp.rho, target * (1.0 - 1e-12), rho_upper);
    if lp.resolve()? != SolveStatus::Optimal {
        return Ok(None);
    }

    let edges = layout.ends.len();
    let mut used_classical = vec![0.0; edges];
    let mut used_key = vec![0.0; edges];
    for k in 0..layout.terminals.len() {
        let need = (target * layout.scale[k] - 1e-6).ceil().max(0.0) as u64;
        let net = net_flows(layout, k, lp.values());
        let Some(units) = route(layout, k, need, &net, &used_classical, &used_key) else {
            return Ok(None);
        };
        for e in 0..edges {
            let u = units[e];
            let (f, b) = (u.max(0) as f64, (-u).max(0) as f64);
            lp.set_bounds(layout.var(k, e, true), f, f);
            lp.set_bounds(layout.var(k, e, false), b, b);
            let a = u.unsigned_abs() as f64;
            used_classical[e] += a;
            used_key[e] += layout.beta[k] * a;
        }
        if lp.resolve()? != SolveStatus::Optimal {
            return Ok(None);
        }
    }

    let mut x = lp.values().to_vec();
    for v in &mut x[..milp.keys.len()] {
        *v = v.round();
    }
    let rho = (0..layout.terminals.len())
        .map(|k| {
            let sink = layout.terminals[k].1;
            let inflow: f64 = (0..edges)
                .map(|e| {
                    let (a, b) = layout.ends[e];
                    let (f, r) = (x[layout.var(k, e, true)], x[layout.var(k, e, false)]);
                    if b == sink {
                        f - r
                    } else if a == sink {
                        r - f
                    } else {
                        0.0
                    }
                })
                .sum();
            inflow / layout.scale[k]
        })
        .fold(f64::INFINITY, f64::min);
    x[milp.rho] = rho;
    Ok(Some(x))
}

/// Net `a -> b` flow of connection `k` on each edge.
fn net_flows(layout: &FlowLayout, k: usize, x: &[f64]) -> Vec<f64> {
    (0..layout.ends.len())
        .map(|e| x[layout.var(k, e, true)] - x[layout.var(k, e, false)])
        .collect()
}

/// Integral net flow per edge (`a -> b` positive) carrying `need` packets
/// from the source to the sink of `k`, preferring the paths of `net`.
fn route(
    layout: &FlowLayout,
    k: usize,
    need: u64,
    net: &[f64],
    used_classical: &[f64],
    used_key: &[f64],
) -> Option<Vec<i64>> {
    let (s, t) = layout.terminals[k];
    let beta = layout.beta[k];
    let edges = layout.ends.len();
    let mut units = vec![0i64; edges];
    // Room for one more packet of this connection, in direction `dir` (+1: a -> b).
    let fits = |units: &[i64], e: usize, dir: i64| {
        let after = (units[e] + dir).unsigned_abs() as f64;
        let before = units[e].unsigned_abs() as f64;
        if after <= before {
            return true;
        }
        used_classical[e] + after <= layout.classical[e] + EPS
            && used_key[e] + beta * after <= layout.key[e] + EPS
    };

    let mut paths = decompose(layout, s, t, net);
    paths.sort_by(|a, b| b.1.total_cmp(&a.1));
    let mut left = need;
    // Whole packets first, then the largest remainders.
    for pass in 0..2 {
        for (path, amount) in &paths {
            if left == 0 {
                break;
            }
            let want = if pass == 0 { amount.floor() as u64 } else { 1 };
            for _ in 0..want.min(left) {
                if path.iter().all(|&(e, d)| fits(&units, e, d)) {
                    for &(e, d) in path {
                        units[e] += d;
                    }
                    left -= 1;
                } else {
                    break;
                }
            }
        }
    }
    while left > 0 {
        let path = shortest_free_path(layout, s, t, |e, d| fits(&units, e, d))?;
        for (e, d) in path {
            units[e] += d;
        }
        left -= 1;
    }
    Some(units)
}

/// Splits a fractional `s -> t` flow into paths `(edge, direction)` with
/// their amounts. Circulations are dropped.
fn decompose(layout: &FlowLayout, s: usize, t: usize, net: &[f64]) -> Vec<(Vec<(usize, i64)>, f64)> {
    let mut rest = net.to_vec();
    let mut out = Vec::new();
    while let Some(path) = shortest_free_path(layout, s, t, |e, d| rest[e] * d as f64 > 1e-7) {
        let amount = path
            .iter()
            .map(|&(e, d)| rest[e] * d as f64)
            .fold(f64::INFINITY, f64::min);
        for &(e, d) in &path {
            rest[e] -= amount * d as f64;
        }
        out.push((path, amount));
    }
    out
}

/// Fewest-hop path over arcs allowed by `open(edge, direction)`; ties go to
/// the lower edge index.
fn shortest_free_path(
    layout: &FlowLayout,
    s: usize,
    t: usize,
    open: impl Fn(usize, i64) -> bool,
) -> Option<Vec<(usize, i64)>> {
    let mut adj: Vec<Vec<(usize, usize, i64)>> = vec![Vec::new(); layout.nodes];
    for (e, &(a, b)) in layout.ends.iter().enumerate() {
        adj[a].push((b, e, 1));
        adj[b].push((a, e, -1));
    }
    let mut prev: Vec<Option<(usize, usize, i64)>> = vec![None; layout.nodes];
    let mut seen = vec![false; layout.nodes];
    seen[s] = true;
    let mut queue = VecDeque::from([s]);
    while let Some(u) = queue.pop_front() {
        if u == t {
            break;
        }
        for &(v, e, d) in &adj[u] {
            if !seen[v] && open(e, d) {
                seen[v] = true;
                prev[v] = Some((u, e, d));
                queue.push_back(v);
            }
        }
    }
    if !seen[t] {
        return None;
    }
    let mut path = Vec::new();
    let mut v = t;
    while let Some((u, e, d)) = prev[v] {
        path.push((e, d));
        v = u;
    }
    path.reverse();
    Some(path)
}

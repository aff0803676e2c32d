//! Generators and brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::PathBuf;

use qkdnet::keyrate::QkdSystemParams;
use qkdnet::mcfp::{its_bound_with_rates, verify_assignment_with_rates};
use qkdnet::model::{Connection, DemandModel, Edge, NetworkInstance, Node, NodeId, Topology};
use qkdnet::solver::{LinearProgram, Relation, SolveStatus, SolverConfig, VarKind};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const PACKET: u32 = 4000;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

pub fn id(s: &str) -> NodeId {
    NodeId::new(s).unwrap()
}

// ---------------------------------------------------------------------------
// Pure-integer programs

pub struct RandomMilp {
    pub lp: LinearProgram,
    pub upper: Vec<i64>,
}

/// At most 6 integer variables with bounds in `[0, u]`, `u <= 10`, and up to
/// four rows with small integer coefficients.
pub fn random_milp(rng: &mut ChaCha8Rng) -> RandomMilp {
    let n = rng.gen_range(1..=6);
    let cap = if n <= 3 { 10 } else { 4 };
    let mut lp = LinearProgram::new();
    let mut upper = Vec::with_capacity(n);
    for j in 0..n {
        let u = rng.gen_range(0..=cap);
        upper.push(u);
        lp.add_variable(format!("x{j}"), VarKind::Integer, 0.0, u as f64, rng.gen_range(-5..=6) as f64);
    }
    for i in 0..rng.gen_range(1..=4) {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        for j in 0..n {
            if rng.gen_bool(0.8) {
                terms.push((j, rng.gen_range(-3..=5) as f64));
            }
        }
        let rel = match rng.gen_range(0..10) {
            0 => Relation::Eq,
            1 | 2 => Relation::Ge,
            _ => Relation::Le,
        };
        let rhs = match rel {
            Relation::Eq => rng.gen_range(0..=8),
            Relation::Ge => rng.gen_range(-4..=6),
            Relation::Le => rng.gen_range(-2..=20),
        } as f64;
        lp.add_constraint(format!("c{i}"), terms, rel, rhs);
    }
    RandomMilp { lp, upper }
}

/// Best objective over every integral point, or `None` if there is none.
pub fn enumerate_milp(m: &RandomMilp) -> Option<f64> {
    let n = m.upper.len();
    let mut x = vec![0i64; n];
    let mut best: Option<f64> = None;
    loop {
        let xf: Vec<f64> = x.iter().map(|&v| v as f64).collect();
        if m.lp.max_violation(&xf) <= 1e-12 {
            let v = m.lp.objective_value(&xf);
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
        let mut j = 0;
        loop {
            if j == n {
                return best;
            }
            if x[j] < m.upper[j] {
                x[j] += 1;
                break;
            }
            x[j] = 0;
            j += 1;
        }
    }
}

// ---------------------------------------------------------------------------
// Small flow networks

pub struct RandomNetwork {
    pub instance: NetworkInstance,
    /// Key capability per edge, bits/second.
    pub rates: Vec<f64>,
}

/// A connected network on 2..=4 nodes with at most 5 edges, 1 or 2
/// connections, and classical and key capacities of at most 6 packets/s.
pub fn random_network(rng: &mut ChaCha8Rng) -> RandomNetwork {
    let n = rng.gen_range(2..=4usize);
    let ids: Vec<NodeId> = (0..n).map(|i| id(&format!("n{i}"))).collect();
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    // Random spanning tree, then extra edges.
    for i in 1..n {
        pairs.push((rng.gen_range(0..i), i));
    }
    let mut extra: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .filter(|p| !pairs.contains(p))
        .collect();
    extra.shuffle(rng);
    let room = 5 - pairs.len();
    pairs.extend(extra.into_iter().take(rng.gen_range(0..=room)));

    let p = PACKET as f64;
    let mut edges = Vec::new();
    let mut rates = Vec::new();
    for &(a, b) in &pairs {
        let (a, b) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
        let mut e = Edge::new(ids[a].clone(), ids[b].clone(), 10.0);
        e.classical_capacity_bps = rng.gen_range(1..=6) as f64 * p;
        edges.push(e);
        // Quarter-packet granularity so that fractional key budgets occur.
        rates.push(rng.gen_range(0..=24) as f64 * p / 4.0);
    }
    let nodes = ids.iter().cloned().map(Node::new).collect();
    let topo = Topology { nodes, edges };

    let mut conns: Vec<Connection> = Vec::new();
    for _ in 0..rng.gen_range(1..=2) {
        let s = rng.gen_range(0..n);
        let mut t = rng.gen_range(0..n - 1);
        if t >= s {
            t += 1;
        }
        if conns.iter().any(|c| c.source == ids[s] && c.sink == ids[t]) {
            continue;
        }
        conns.push(Connection {
            source: ids[s].clone(),
            sink: ids[t].clone(),
            demand_bps: [2000.0, 4000.0, 6000.0, 8000.0, 12000.0][rng.gen_range(0..5)],
            beta: [1.0, 1.0, 0.5, 0.25][rng.gen_range(0..4)],
        });
    }
    let demand = DemandModel::new(conns).unwrap();
    let instance = NetworkInstance::new(topo, demand, PACKET, QkdSystemParams::reference()).unwrap();
    RandomNetwork { instance, rates }
}

/// Exhaustive optimum of the minimum demand satisfaction over integral flows.
///
/// Opposite flows of one connection on one edge can be cancelled without
/// changing conservation, so only net flows are enumerated. Every integral
/// `s -> t` flow of value `v` is `v` times the tree path plus an integral
/// combination of fundamental cycles, whose coefficient is the net flow on
/// the corresponding non-tree edge.
pub fn brute_force_bound(net: &RandomNetwork) -> f64 {
    let inst = &net.instance;
    let topo = inst.topology();
    let p = inst.packet_bits() as f64;
    let n = topo.nodes.len();
    let index = |x: &NodeId| topo.nodes.iter().position(|nd| &nd.id == x).unwrap();
    let ends: Vec<(usize, usize)> = topo.edges.iter().map(|e| (index(&e.a), index(&e.b))).collect();
    let m = ends.len();
    let cap: Vec<i64> = topo
        .edges
        .iter()
        .map(|e| (e.classical_capacity_bps / p + 1e-9).floor() as i64)
        .collect();

    // BFS spanning tree from node 0.
    let mut parent: Vec<Option<(usize, usize)>> = vec![None; n];
    let mut seen = vec![false; n];
    let mut in_tree = vec![false; m];
    seen[0] = true;
    let mut q = VecDeque::from([0]);
    while let Some(u) = q.pop_front() {
        for (e, &(a, b)) in ends.iter().enumerate() {
            let v = if a == u { b } else if b == u { a } else { continue };
            if !seen[v] {
                seen[v] = true;
                in_tree[e] = true;
                parent[v] = Some((u, e));
                q.push_back(v);
            }
        }
    }
    assert!(seen.iter().all(|&s| s), "generated network must be connected");
    // Tree path from the root to `v` as a signed edge vector (`a -> b` positive).
    let root_path = |mut v: usize| {
        let mut vec = vec![0i64; m];
        while let Some((u, e)) = parent[v] {
            vec[e] += if ends[e] == (u, v) { 1 } else { -1 };
            v = u;
        }
        vec
    };
    let tree_path = |s: usize, t: usize| {
        let (ps, pt) = (root_path(s), root_path(t));
        pt.iter().zip(&ps).map(|(a, b)| a - b).collect::<Vec<i64>>()
    };
    let cycles: Vec<(usize, Vec<i64>)> = (0..m)
        .filter(|&e| !in_tree[e])
        .map(|e| {
            let (a, b) = ends[e];
            // a -> b on e, then back from b to a along the tree.
            let mut c = tree_path(b, a);
            c[e] += 1;
            (e, c)
        })
        .collect();

    let conns: Vec<(usize, usize, f64, f64)> = inst
        .demand()
        .connections()
        .iter()
        .map(|c| (index(&c.source), index(&c.sink), c.demand_bps, c.beta))
        .collect();
    let max_cap = *cap.iter().max().unwrap();
    // Parallel paths can carry more than any single edge.
    let max_value: i64 = cap.iter().sum();

    // Candidate net-flow vectors per connection, with their value.
    let per_conn: Vec<Vec<(Vec<i64>, i64)>> = conns
        .iter()
        .map(|&(s, t, _, beta)| {
            let path = tree_path(s, t);
            let mut out = Vec::new();
            let mut coeffs = vec![-max_cap; cycles.len()];
            for v in 0..=max_value {
                loop {
                    let mut flow: Vec<i64> = path.iter().map(|x| x * v).collect();
                    for (c, (_, cyc)) in coeffs.iter().zip(&cycles) {
                        for e in 0..m {
                            flow[e] += c * cyc[e];
                        }
                    }
                    let fits = (0..m).all(|e| {
                        let a = flow[e].abs();
                        a <= cap[e] && beta * a as f64 * p <= net.rates[e] + 1e-9
                    });
                    if fits {
                        out.push((flow, v));
                    }
                    // Next cycle coefficient vector in [-max_cap, max_cap]^k.
                    let mut i = 0;
                    loop {
                        if i == coeffs.len() {
                            break;
                        }
                        if coeffs[i] < max_cap {
                            coeffs[i] += 1;
                            break;
                        }
                        coeffs[i] = -max_cap;
                        i += 1;
                    }
                    if i == coeffs.len() {
                        coeffs.iter_mut().for_each(|c| *c = -max_cap);
                        break;
                    }
                }
            }
            out
        })
        .collect();

    let satisfaction = |k: usize, v: i64| v as f64 * p / conns[k].2;
    let fits_together = |flows: &[&Vec<i64>]| {
        (0..m).all(|e| {
            let used: i64 = flows.iter().map(|f| f[e].abs()).sum();
            let key: f64 = flows
                .iter()
                .zip(&conns)
                .map(|(f, c)| c.3 * f[e].abs() as f64 * p)
                .sum();
            used <= cap[e] && key <= net.rates[e] + 1e-9
        })
    };
    let mut best = 0.0f64;
    match per_conn.len() {
        1 => {
            for (_, v) in &per_conn[0] {
                best = best.max(satisfaction(0, *v));
            }
        }
        2 => {
            for (f0, v0) in &per_conn[0] {
                let s0 = satisfaction(0, *v0);
                if s0 <= best {
                    continue;
                }
                for (f1, v1) in &per_conn[1] {
                    let val = s0.min(satisfaction(1, *v1));
                    if val > best && fits_together(&[f0, f1]) {
                        best = val;
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    best
}

/// Solves a random network and checks the assignment, returning the bound.
pub fn solve_network(net: &RandomNetwork) -> (f64, u64) {
    let r = its_bound_with_rates(&net.instance, &net.rates, &SolverConfig::default()).unwrap();
    assert_eq!(r.status, SolveStatus::Optimal);
    let report = verify_assignment_with_rates(&net.instance, &r.assignment, &net.rates);
    assert!(report.passed(), "{report:?}");
    (r.bound, r.nodes_explored)
}

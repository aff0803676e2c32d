//! Best-bound branch-and-bound over the simplex engine.
//!
//! Node order: highest bound first, then deepest, then creation order. The
//! branching variable is the most fractional one (lowest index on ties); the
//! `x <= floor` child is created before the `x >= ceil` child. A child of the
//! node solved last reuses that node's basis; any other node restarts the
//! dual simplex from the root basis.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex::Simplex;
use super::{LinearProgram, MilpSolution, Relation, SolveStatus, SolverConfig, SolverError};

struct Node {
    id: u64,
    parent: u64,
    depth: u32,
    bound: f64,
    /// Tightened `(variable, lower, upper)` relative to the root, one entry per
    /// variable.
    bounds: Vec<(usize, f64, f64)>,
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(other.id.cmp(&self.id))
    }
}

/// Problem knowledge that speeds up the search without changing its result.
#[derive(Default)]
pub struct MilpOptions<'a> {
    /// Maps a relaxation value to an upper bound on every integral objective
    /// reachable below it (for example, rounding down to the objective's
    /// lattice). Must never return less than that best integral objective.
    pub bound_rounding: Option<&'a dyn Fn(f64) -> f64>,
    /// A known solution. Used as the first incumbent if it is feasible and
    /// integral; ignored otherwise.
    pub incumbent: Option<Vec<f64>>,
}

/// Solves a MILP with default settings.
pub fn solve_milp(lp: &LinearProgram, integer_vars: &[usize]) -> Result<MilpSolution, SolverError> {
    solve_milp_with(lp, integer_vars, &SolverConfig::default(), MilpOptions::default())
}

/// Exact branch-and-bound.
pub fn solve_milp_with(
    lp: &LinearProgram,
    integer_vars: &[usize],
    cfg: &SolverConfig,
    options: MilpOptions<'_>,
) -> Result<MilpSolution, SolverError> {
    let bound_rounding = options.bound_rounding;
    if let Some(&j) = integer_vars.iter().find(|&&j| j >= lp.num_variables()) {
        return Err(SolverError::InvalidProgram(format!(
            "integer index {j} out of range"
        )));
    }
    let mut ints: Vec<usize> = integer_vars.to_vec();
    ints.sort_unstable();
    ints.dedup();
    let tightened = round_integer_rows(lp, &ints);
    let lp = &tightened;

    let (root, status) = Simplex::solve(lp, cfg)?;
    let root = match (root, status) {
        (Some(r), SolveStatus::Optimal) => r,
        (_, st) => return Ok(MilpSolution::without_solution(st, 1)),
    };
    let round = |v: f64| match bound_rounding {
        Some(f) => f(v).min(v),
        None => v,
    };
    let prune_tol = |inc: f64| 1e-9 * inc.abs().max(1.0);

    let mut current = root.clone();
    let mut current_id = 0u64;
    let mut next_id = 1u64;
    let mut solved = 0u64;
    let mut incumbent: Option<(f64, Vec<f64>)> = options
        .incumbent
        .filter(|x| {
            x.len() == lp.num_variables()
                && ints.iter().all(|&j| x[j] == x[j].round())
                && lp.max_violation(x) <= cfg.feasibility_tol
        })
        .map(|x| (lp.objective_value(&x), x));
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        id: 0,
        parent: 0,
        depth: 0,
        bound: f64::INFINITY,
        bounds: Vec::new(),
    });

    while let Some(node) = heap.pop() {
        if let Some((inc, _)) = &incumbent {
            if node.bound <= inc + prune_tol(*inc) {
                break;
            }
        }
        if solved >= cfg.node_limit {
            return Err(SolverError::NodeLimitExceeded {
                limit: cfg.node_limit,
            });
        }
        let status = if node.id == 0 {
            SolveStatus::Optimal
        } else {
            if node.parent != current_id {
                current = root.clone();
            }
            for &(j, l, u) in &node.bounds {
                current.set_bounds(j, l, u);
            }
            current.reoptimize()?
        };
        current_id = node.id;
        solved += 1;
        match status {
            SolveStatus::Optimal => {}
            SolveStatus::Infeasible => continue,
            SolveStatus::Unbounded => {
                return Err(SolverError::NumericalBreakdown(
                    "unbounded relaxation below a bounded root".into(),
                ))
            }
        }

        let obj = current.objective();
        let bound = round(obj);
        if let Some((inc, _)) = &incumbent {
            if bound <= inc + prune_tol(*inc) {
                continue;
            }
        }

        let x = current.values();
        let mut branch: Option<(usize, f64)> = None;
        for &j in &ints {
            let f = x[j] - x[j].floor();
            let dist = f.min(1.0 - f);
            if dist > cfg.integrality_tol && branch.is_none_or(|(_, best)| dist > best + 1e-12) {
                branch = Some((j, dist));
            }
        }

        match branch {
            None => {
                let mut vals = x.to_vec();
                for &j in &ints {
                    vals[j] = vals[j].round();
                }
                let value = lp.objective_value(&vals);
                if incumbent.as_ref().is_none_or(|(inc, _)| value > *inc) {
                    incumbent = Some((value, vals));
                }
            }
            Some((j, _)) => {
                let v = x[j];
                let (lo, hi) = current.bounds(j);
                let down = Node {
                    id: next_id,
                    parent: node.id,
                    depth: node.depth + 1,
                    bound,
                    bounds: with_bound(&node.bounds, j, lo, v.floor()),
                };
                let up = Node {
                    id: next_id + 1,
                    parent: node.id,
                    depth: node.depth + 1,
                    bound,
                    bounds: with_bound(&node.bounds, j, v.ceil(), hi),
                };
                next_id += 2;
                heap.push(down);
                heap.push(up);
            }
        }
    }

    Ok(match incumbent {
        Some((objective, values)) => MilpSolution {
            status: SolveStatus::Optimal,
            objective,
            values,
            nodes: solved,
            gap: 0.0,
        },
        None => MilpSolution::without_solution(SolveStatus::Infeasible, solved),
    })
}

/// Divides every row over integer variables alone by the largest step that
/// makes its coefficients integral and rounds the right-hand side inward.
/// Integral points are unaffected; the relaxation can only shrink.
pub fn round_integer_rows(lp: &LinearProgram, integer_vars: &[usize]) -> LinearProgram {
    let mut is_int = vec![false; lp.num_variables()];
    for &j in integer_vars {
        is_int[j] = true;
    }
    let mut out = lp.clone();
    for c in &mut out.constraints {
        if c.terms.is_empty() || !c.terms.iter().all(|&(j, _)| is_int[j]) {
            continue;
        }
        let Some(g) = common_step(c.terms.iter().map(|&(_, a)| a)) else {
            continue;
        };
        let rhs = c.rhs / g;
        c.rhs = match c.relation {
            Relation::Le => (rhs + 1e-9).floor(),
            Relation::Ge => (rhs - 1e-9).ceil(),
            Relation::Eq if (rhs - rhs.round()).abs() <= 1e-9 => rhs.round(),
            Relation::Eq => continue,
        };
        for t in &mut c.terms {
            t.1 = (t.1 / g).round();
        }
    }
    out
}

/// Largest `g` with every coefficient an integer multiple of it, if the
/// coefficients are commensurable at a modest resolution.
fn common_step(coeffs: impl Iterator<Item = f64>) -> Option<f64> {
    let coeffs: Vec<f64> = coeffs.map(f64::abs).collect();
    let largest = coeffs.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return None;
    }
    let tol = 1e-9 * largest;
    let mut g = coeffs[0];
    for &a in &coeffs[1..] {
        let (mut x, mut y) = (g.max(a), g.min(a));
        while y > tol {
            let r = x % y;
            x = y;
            y = if r > tol && y - r > tol { r } else { 0.0 };
        }
        g = x;
    }
    let fits = coeffs.iter().all(|&a| ((a / g) - (a / g).round()).abs() <= 1e-9 * (a / g).max(1.0));
    (g >= 1e-6 * largest && fits).then_some(g)
}

fn with_bound(bounds: &[(usize, f64, f64)], j: usize, lo: f64, hi: f64) -> Vec<(usize, f64, f64)> {
    let mut out: Vec<(usize, f64, f64)> = bounds.iter().copied().filter(|&(k, _, _)| k != j).collect();
    out.push((j, lo, hi));
    out
}

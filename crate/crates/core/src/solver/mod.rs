//! Embedded linear and mixed-integer programming.
//!
//! [`solve_lp`] runs a bounded-variable revised simplex (explicit dense basis
//! inverse, sparse constraint columns) and [`solve_milp`] wraps it in an exact
//! best-bound branch-and-bound. Problems are always maximizations. Instances
//! are expected to be desk scale: a few thousand columns and rows at most.
//!
//! [`lp_format`] writes and reads the CPLEX-style LP text format so that any
//! instance can be cross-checked with an external solver.

mod branch;
pub mod lp_format;
mod simplex;

use thiserror::Error;

pub use branch::{round_integer_rows, solve_milp, solve_milp_with, MilpOptions};
pub use simplex::{solve_lp, solve_lp_with, LpSession};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
    #[error("branch-and-bound node limit of {limit} exceeded")]
    NodeLimitExceeded { limit: u64 },
    #[error("malformed program: {0}")]
    InvalidProgram(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("LP file parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Constraint sense.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarKind {
    Continuous,
    Integer,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub kind: VarKind,
    pub lower: f64,
    pub upper: f64,
    /// Objective coefficient (maximize).
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub name: String,
    /// Sparse row: `(variable index, coefficient)`, indices strictly increasing.
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

/// A maximization problem `max c'x  s.t.  Ax (<=|=|>=) b,  l <= x <= u`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    pub variables: Vec<Variable>,
    pub constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable and returns its index.
    pub fn add_variable(
        &mut self,
        name: impl Into<String>,
        kind: VarKind,
        lower: f64,
        upper: f64,
        objective: f64,
    ) -> usize {
        self.variables.push(Variable {
            name: name.into(),
            kind,
            lower,
            upper,
            objective,
        });
        self.variables.len() - 1
    }

    /// Adds a constraint. Duplicate indices in `terms` are merged and zero
    /// coefficients dropped.
    pub fn add_constraint(
        &mut self,
        name: impl Into<String>,
        terms: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) -> usize {
        let mut terms: Vec<(usize, f64)> = terms.into_iter().collect();
        terms.sort_by_key(|&(j, _)| j);
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(terms.len());
        for (j, a) in terms {
            match merged.last_mut() {
                Some((k, b)) if *k == j => *b += a,
                _ => merged.push((j, a)),
            }
        }
        merged.retain(|&(_, a)| a != 0.0);
        self.constraints.push(Constraint {
            name: name.into(),
            terms: merged,
            relation,
            rhs,
        });
        self.constraints.len() - 1
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Indices of integer-kind variables, ascending.
    pub fn integer_variables(&self) -> Vec<usize> {
        self.variables
            .iter()
            .enumerate()
            .filter(|(_, v)| v.kind == VarKind::Integer)
            .map(|(j, _)| j)
            .collect()
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.variables
            .iter()
            .zip(x)
            .map(|(v, &xj)| v.objective * xj)
            .sum()
    }

    /// Largest bound or constraint violation of `x`, each row scaled by
    /// `max(1, |rhs|, max |a_ij|)`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let mut worst = 0.0f64;
        for (v, &xj) in self.variables.iter().zip(x) {
            worst = worst.max(v.lower - xj).max(xj - v.upper);
        }
        for c in &self.constraints {
            let lhs: f64 = c.terms.iter().map(|&(j, a)| a * x[j]).sum();
            let scale = c
                .terms
                .iter()
                .fold(1.0f64.max(c.rhs.abs()), |s, &(_, a)| s.max(a.abs()));
            let viol = match c.relation {
                Relation::Le => lhs - c.rhs,
                Relation::Ge => c.rhs - lhs,
                Relation::Eq => (lhs - c.rhs).abs(),
            };
            worst = worst.max(viol / scale);
        }
        worst
    }

    pub(crate) fn validate(&self) -> Result<(), SolverError> {
        let n = self.variables.len();
        for v in &self.variables {
            if v.lower.is_nan() || v.upper.is_nan() || !v.objective.is_finite() {
                return Err(SolverError::InvalidProgram(format!(
                    "variable {} has a non-finite objective or NaN bound",
                    v.name
                )));
            }
            if !v.lower.is_finite() {
                return Err(SolverError::InvalidProgram(format!(
                    "variable {} needs a finite lower bound",
                    v.name
                )));
            }
            if v.upper == f64::NEG_INFINITY {
                return Err(SolverError::InvalidProgram(format!(
                    "variable {} has upper bound -inf",
                    v.name
                )));
            }
        }
        for c in &self.constraints {
            if !c.rhs.is_finite() {
                return Err(SolverError::InvalidProgram(format!(
                    "constraint {} has a non-finite right-hand side",
                    c.name
                )));
            }
            for &(j, a) in &c.terms {
                if j >= n {
                    return Err(SolverError::InvalidProgram(format!(
                        "constraint {} references undeclared variable {j}",
                        c.name
                    )));
                }
                if !a.is_finite() {
                    return Err(SolverError::InvalidProgram(format!(
                        "constraint {} has a non-finite coefficient",
                        c.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MilpSolution {
    pub status: SolveStatus,
    /// Objective value; `NaN` unless optimal.
    pub objective: f64,
    /// Variable values; empty unless optimal.
    pub values: Vec<f64>,
    /// Branch-and-bound nodes whose relaxation was solved (1 for a pure LP).
    pub nodes: u64,
    /// Relative optimality gap. Always 0 for a completed solve.
    pub gap: f64,
}

impl MilpSolution {
    pub(crate) fn without_solution(status: SolveStatus, nodes: u64) -> Self {
        Self {
            status,
            objective: f64::NAN,
            values: Vec::new(),
            nodes,
            gap: 0.0,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

/// Tolerances and limits.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Smallest pivot magnitude accepted.
    pub pivot_tol: f64,
    /// Primal feasibility tolerance.
    pub feasibility_tol: f64,
    /// Reduced-cost optimality tolerance.
    pub optimality_tol: f64,
    pub integrality_tol: f64,
    pub node_limit: u64,
    /// Consecutive degenerate pivots before switching to Bland's rule.
    pub degenerate_streak: usize,
    /// Hard cap on simplex iterations per LP solve.
    pub iteration_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            pivot_tol: 1e-9,
            feasibility_tol: 1e-7,
            optimality_tol: 1e-9,
            integrality_tol: 1e-6,
            node_limit: 1_000_000,
            degenerate_streak: 50,
            iteration_limit: 1_000_000,
        }
    }
}

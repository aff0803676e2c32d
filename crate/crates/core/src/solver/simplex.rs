//! Bounded-variable revised simplex.
//!
//! Every row `i` gets a slack `s_i` so the system reads `A x + s = b`, with
//! slack bounds `[0, inf)` for `<=`, `(-inf, 0]` for `>=` and `[0, 0]` for
//! `=`. Rows whose slack starts out of bounds get an artificial column for
//! phase 1. The basis inverse is kept as a dense row-major `m x m` matrix and
//! updated with elementary row operations; reduced costs are updated from the
//! pivot row.
//!
//! The same engine serves branch-and-bound: after tightening structural
//! bounds the old basis stays dual feasible, so [`Simplex::reoptimize`] runs
//! the dual simplex from there.

use std::sync::Arc;

use super::{LinearProgram, MilpSolution, Relation, SolveStatus, SolverConfig, SolverError};

/// Pivots between recomputations of basic values and reduced costs.
const REFRESH_INTERVAL: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Status {
    Basic,
    AtLower,
    AtUpper,
}

/// Column-major sparse matrix of the structural columns.
#[derive(Debug)]
struct SparseColumns {
    start: Vec<usize>,
    row: Vec<usize>,
    val: Vec<f64>,
}

impl SparseColumns {
    fn from_program(lp: &LinearProgram, rows: &[usize]) -> Self {
        let n = lp.num_variables();
        let mut counts = vec![0usize; n];
        for &ci in rows {
            for &(j, _) in &lp.constraints[ci].terms {
                counts[j] += 1;
            }
        }
        let mut start = Vec::with_capacity(n + 1);
        start.push(0);
        for c in &counts {
            start.push(start.last().unwrap() + c);
        }
        let nnz = *start.last().unwrap();
        let mut fill = start.clone();
        let mut row = vec![0usize; nnz];
        let mut val = vec![0.0f64; nnz];
        for (i, &ci) in rows.iter().enumerate() {
            for &(j, a) in &lp.constraints[ci].terms {
                row[fill[j]] = i;
                val[fill[j]] = a;
                fill[j] += 1;
            }
        }
        Self { start, row, val }
    }

    fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.start[j]..self.start[j + 1];
        self.row[range.clone()]
            .iter()
            .copied()
            .zip(self.val[range].iter().copied())
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Simplex {
    m: usize,
    /// Structural column count.
    n: usize,
    cols: Arc<SparseColumns>,
    /// Artificial column `n + m + k` is `art_sign[k] * e_{art_row[k]}`.
    art_row: Vec<usize>,
    art_sign: Vec<f64>,
    rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    x: Vec<f64>,
    status: Vec<Status>,
    /// Basic column of each row.
    basis: Vec<usize>,
    binv: Vec<f64>,
    /// Reduced costs, zero for basic columns.
    d: Vec<f64>,
    cfg: SolverConfig,
    iterations: usize,
    since_refresh: usize,
}

pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

impl Simplex {
    fn ncols(&self) -> usize {
        self.n + self.m + self.art_row.len()
    }

    fn for_each_in_column(&self, j: usize, mut f: impl FnMut(usize, f64)) {
        if j < self.n {
            for (i, a) in self.cols.column(j) {
                f(i, a);
            }
        } else if j < self.n + self.m {
            f(j - self.n, 1.0);
        } else {
            let k = j - self.n - self.m;
            f(self.art_row[k], self.art_sign[k]);
        }
    }

    fn is_fixed(&self, j: usize) -> bool {
        self.lower[j] == self.upper[j]
    }

    /// `B^-1 a_j`.
    fn ftran(&self, j: usize) -> Vec<f64> {
        let m = self.m;
        let mut alpha = vec![0.0; m];
        let mut entries: Vec<(usize, f64)> = Vec::new();
        self.for_each_in_column(j, |k, a| entries.push((k, a)));
        for (i, out) in alpha.iter_mut().enumerate() {
            let row = &self.binv[i * m..(i + 1) * m];
            *out = entries.iter().map(|&(k, a)| row[k] * a).sum();
        }
        alpha
    }

    /// Row `r` of `B^-1 [A I Art]`, over all columns.
    fn pivot_row(&self, r: usize) -> Vec<f64> {
        let m = self.m;
        let rho = &self.binv[r * m..(r + 1) * m];
        let mut row = vec![0.0; self.ncols()];
        for (j, out) in row.iter_mut().enumerate().take(self.n) {
            *out = self.cols.column(j).map(|(k, a)| rho[k] * a).sum();
        }
        row[self.n..self.n + m].copy_from_slice(rho);
        for (k, (&ri, &s)) in self.art_row.iter().zip(&self.art_sign).enumerate() {
            row[self.n + m + k] = s * rho[ri];
        }
        row
    }

    /// Replaces the basic column of row `r` given `alpha = B^-1 a_q`.
    fn update_inverse(&mut self, r: usize, alpha: &[f64]) {
        let m = self.m;
        let piv = alpha[r];
        let mut pivot_row: Vec<f64> = self.binv[r * m..(r + 1) * m].to_vec();
        for v in pivot_row.iter_mut() {
            *v /= piv;
        }
        let nz: Vec<usize> = (0..m).filter(|&k| pivot_row[k] != 0.0).collect();
        for (i, &ai) in alpha.iter().enumerate() {
            if i == r || ai == 0.0 {
                continue;
            }
            let row = &mut self.binv[i * m..(i + 1) * m];
            for &k in &nz {
                row[k] -= ai * pivot_row[k];
            }
        }
        self.binv[r * m..(r + 1) * m].copy_from_slice(&pivot_row);
    }

    fn recompute_duals(&mut self) {
        let m = self.m;
        let mut y = vec![0.0; m];
        for i in 0..m {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.binv[i * m..(i + 1) * m];
                for (yk, &b) in y.iter_mut().zip(row) {
                    *yk += cb * b;
                }
            }
        }
        for j in 0..self.ncols() {
            if self.status[j] == Status::Basic {
                self.d[j] = 0.0;
            } else {
                let mut dj = self.cost[j];
                self.for_each_in_column(j, |k, a| dj -= y[k] * a);
                self.d[j] = dj;
            }
        }
    }

    /// `b - N x_N`.
    fn nonbasic_residual(&self) -> Vec<f64> {
        let mut w = self.rhs.clone();
        for j in 0..self.ncols() {
            if self.status[j] != Status::Basic && self.x[j] != 0.0 {
                let xj = self.x[j];
                self.for_each_in_column(j, |k, a| w[k] -= a * xj);
            }
        }
        w
    }

    fn recompute_primal(&mut self) {
        let m = self.m;
        let w = self.nonbasic_residual();
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            let v: f64 = row.iter().zip(&w).map(|(a, b)| a * b).sum();
            self.x[self.basis[i]] = v;
        }
    }

    /// Max-norm of `B x_B - (b - N x_N)`, relative to the right-hand side.
    fn primal_residual(&self) -> f64 {
        let mut w = self.nonbasic_residual();
        for i in 0..self.m {
            let b = self.basis[i];
            let xb = self.x[b];
            self.for_each_in_column(b, |k, a| w[k] -= a * xb);
        }
        let scale = self.rhs.iter().fold(1.0f64, |s, v| s.max(v.abs()));
        w.iter().fold(0.0f64, |s, v| s.max(v.abs())) / scale
    }

    /// Rebuilds `B^-1` from scratch by Gauss-Jordan elimination.
    fn reinvert(&mut self) -> Result<(), SolverError> {
        let m = self.m;
        let mut b = vec![0.0; m * m];
        for i in 0..m {
            let col = self.basis[i];
            let mut entries = Vec::new();
            self.for_each_in_column(col, |k, a| entries.push((k, a)));
            for (k, a) in entries {
                b[k * m + i] = a;
            }
        }
        let mut inv = vec![0.0; m * m];
        for i in 0..m {
            inv[i * m + i] = 1.0;
        }
        for c in 0..m {
            let p = (c..m)
                .max_by(|&a, &bb| b[a * m + c].abs().total_cmp(&b[bb * m + c].abs()))
                .unwrap();
            let pv = b[p * m + c];
            if pv.abs() < 1e-12 {
                return Err(SolverError::NumericalBreakdown(
                    "singular basis during reinversion".into(),
                ));
            }
            if p != c {
                for k in 0..m {
                    b.swap(p * m + k, c * m + k);
                    inv.swap(p * m + k, c * m + k);
                }
            }
            for k in 0..m {
                b[c * m + k] /= pv;
                inv[c * m + k] /= pv;
            }
            let brow: Vec<f64> = b[c * m..(c + 1) * m].to_vec();
            let irow: Vec<f64> = inv[c * m..(c + 1) * m].to_vec();
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = b[r * m + c];
                if f == 0.0 {
                    continue;
                }
                for k in 0..m {
                    b[r * m + k] -= f * brow[k];
                    inv[r * m + k] -= f * irow[k];
                }
            }
        }
        self.binv = inv;
        Ok(())
    }

    fn refresh(&mut self) -> Result<(), SolverError> {
        self.since_refresh = 0;
        self.recompute_primal();
        if self.primal_residual() > 1e-9 {
            self.reinvert()?;
            self.recompute_primal();
        }
        self.recompute_duals();
        Ok(())
    }

    fn tick(&mut self) -> Result<(), SolverError> {
        self.iterations += 1;
        if self.iterations > self.cfg.iteration_limit {
            return Err(SolverError::NumericalBreakdown(format!(
                "simplex iteration limit {} reached",
                self.cfg.iteration_limit
            )));
        }
        self.since_refresh += 1;
        if self.since_refresh >= REFRESH_INTERVAL {
            self.refresh()?;
        }
        Ok(())
    }

    fn entering_primal(&self, bland: bool) -> Option<usize> {
        let tol = self.cfg.optimality_tol;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.ncols() {
            let dj = self.d[j];
            let ok = match self.status[j] {
                Status::Basic => false,
                _ if self.is_fixed(j) => false,
                Status::AtLower => dj > tol,
                Status::AtUpper => dj < -tol,
            };
            if !ok {
                continue;
            }
            if bland {
                return Some(j);
            }
            if best.is_none_or(|(_, v)| dj.abs() > v) {
                best = Some((j, dj.abs()));
            }
        }
        best.map(|(j, _)| j)
    }

    /// Performs the basis change `q` enters at row `r`, with the pivot row
    /// computed before the inverse is touched.
    fn pivot(&mut self, q: usize, r: usize, alpha: &[f64], prow: &[f64]) {
        let leaving = self.basis[r];
        let dq = self.d[q];
        let pq = prow[q];
        if dq != 0.0 {
            for (j, &a) in prow.iter().enumerate() {
                if self.status[j] != Status::Basic && j != q && a != 0.0 {
                    self.d[j] -= dq * a / pq;
                }
            }
        }
        self.d[leaving] = -dq / pq;
        self.d[q] = 0.0;
        self.update_inverse(r, alpha);
        self.basis[r] = q;
        self.status[q] = Status::Basic;
    }

    /// Primal simplex from a primal-feasible basis.
    fn primal(&mut self) -> Result<Outcome, SolverError> {
        let ptol = self.cfg.pivot_tol;
        let mut streak = 0usize;
        let mut fresh = false;
        loop {
            let bland = streak >= self.cfg.degenerate_streak;
            let Some(q) = self.entering_primal(bland) else {
                if fresh {
                    return Ok(Outcome::Optimal);
                }
                self.refresh()?;
                fresh = true;
                continue;
            };
            fresh = false;
            let dir = if self.status[q] == Status::AtLower {
                1.0
            } else {
                -1.0
            };
            let alpha = self.ftran(q);

            // (step, row, |alpha|) of the tightest blocking basic variable.
            let mut block: Option<(f64, usize, f64)> = None;
            for (i, &ai) in alpha.iter().enumerate() {
                if ai.abs() <= ptol {
                    continue;
                }
                let b = self.basis[i];
                let delta = -dir * ai;
                let room = if delta < 0.0 {
                    if self.lower[b] == f64::NEG_INFINITY {
                        continue;
                    }
                    (self.x[b] - self.lower[b]) / -delta
                } else {
                    if self.upper[b] == f64::INFINITY {
                        continue;
                    }
                    (self.upper[b] - self.x[b]) / delta
                };
                let room = room.max(0.0);
                let better = match block {
                    None => true,
                    Some((t, r, a)) => {
                        if room < t - 1e-12 {
                            true
                        } else if room <= t + 1e-12 {
                            if bland {
                                b < self.basis[r]
                            } else {
                                ai.abs() > a
                            }
                        } else {
                            false
                        }
                    }
                };
                if better {
                    block = Some((room, i, ai.abs()));
                }
            }

            let span = self.upper[q] - self.lower[q];
            let flip = span.is_finite() && block.is_none_or(|(t, _, _)| span <= t);
            if flip {
                for (i, &ai) in alpha.iter().enumerate() {
                    let b = self.basis[i];
                    self.x[b] -= dir * ai * span;
                }
                if dir > 0.0 {
                    self.x[q] = self.upper[q];
                    self.status[q] = Status::AtUpper;
                } else {
                    self.x[q] = self.lower[q];
                    self.status[q] = Status::AtLower;
                }
                streak = 0;
                self.tick()?;
                continue;
            }
            let Some((t, r, _)) = block else {
                return Ok(Outcome::Unbounded);
            };
            if t <= 1e-12 {
                streak += 1;
            } else {
                streak = 0;
            }
            for (i, &ai) in alpha.iter().enumerate() {
                let b = self.basis[i];
                self.x[b] -= dir * ai * t;
            }
            self.x[q] += dir * t;
            let leaving = self.basis[r];
            if -dir * alpha[r] < 0.0 {
                self.x[leaving] = self.lower[leaving];
                self.status[leaving] = Status::AtLower;
            } else {
                self.x[leaving] = self.upper[leaving];
                self.status[leaving] = Status::AtUpper;
            }
            let prow = self.pivot_row(r);
            self.pivot(q, r, &alpha, &prow);
            self.tick()?;
        }
    }

    /// Dual simplex from a dual-feasible basis.
    fn dual(&mut self) -> Result<Outcome, SolverError> {
        let ftol = self.cfg.feasibility_tol;
        let ptol = self.cfg.pivot_tol;
        let mut streak = 0usize;
        loop {
            let bland = streak >= self.cfg.degenerate_streak;
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..self.m {
                let b = self.basis[i];
                let infeas = (self.lower[b] - self.x[b]).max(self.x[b] - self.upper[b]);
                if infeas > ftol {
                    let better = match leave {
                        None => true,
                        Some((r, v)) => {
                            if bland {
                                b < self.basis[r]
                            } else {
                                infeas > v
                            }
                        }
                    };
                    if better {
                        leave = Some((i, infeas));
                    }
                }
            }
            let Some((r, _)) = leave else {
                return Ok(Outcome::Optimal);
            };
            let b = self.basis[r];
            let increase = self.x[b] < self.lower[b];
            let prow = self.pivot_row(r);

            let mut enter: Option<(usize, f64, f64)> = None;
            for (j, &a) in prow.iter().enumerate() {
                let st = self.status[j];
                if st == Status::Basic || self.is_fixed(j) {
                    continue;
                }
                let eligible = match (st, increase) {
                    (Status::AtLower, true) => a < -ptol,
                    (Status::AtUpper, true) => a > ptol,
                    (Status::AtLower, false) => a > ptol,
                    (Status::AtUpper, false) => a < -ptol,
                    (Status::Basic, _) => false,
                };
                if !eligible {
                    continue;
                }
                let ratio = self.d[j].abs() / a.abs();
                let better = match enter {
                    None => true,
                    Some((_, t, pa)) => {
                        if ratio < t - 1e-12 {
                            true
                        } else if ratio <= t + 1e-12 {
                            !bland && a.abs() > pa
                        } else {
                            false
                        }
                    }
                };
                if better {
                    enter = Some((j, ratio, a.abs()));
                }
            }
            let Some((q, ratio, _)) = enter else {
                return Ok(Outcome::Infeasible);
            };
            if ratio <= 1e-12 {
                streak += 1;
            } else {
                streak = 0;
            }
            let alpha = self.ftran(q);
            let target = if increase { self.lower[b] } else { self.upper[b] };
            let step = (self.x[b] - target) / alpha[r];
            for (i, &ai) in alpha.iter().enumerate() {
                let bi = self.basis[i];
                self.x[bi] -= ai * step;
            }
            self.x[q] += step;
            self.x[b] = target;
            self.status[b] = if increase {
                Status::AtLower
            } else {
                Status::AtUpper
            };
            self.pivot(q, r, &alpha, &prow);
            self.tick()?;
        }
    }

    /// Builds the phase-1 starting basis. Returns `None` if an empty row is
    /// violated.
    fn build(lp: &LinearProgram, cfg: &SolverConfig) -> Result<Option<Self>, SolverError> {
        lp.validate()?;
        let ftol = cfg.feasibility_tol;
        let mut rows = Vec::new();
        for (ci, c) in lp.constraints.iter().enumerate() {
            if c.terms.is_empty() {
                let ok = match c.relation {
                    Relation::Le => 0.0 <= c.rhs + ftol,
                    Relation::Ge => 0.0 >= c.rhs - ftol,
                    Relation::Eq => c.rhs.abs() <= ftol,
                };
                if !ok {
                    return Ok(None);
                }
            } else {
                rows.push(ci);
            }
        }
        let n = lp.num_variables();
        let m = rows.len();
        let cols = Arc::new(SparseColumns::from_program(lp, &rows));
        let rhs: Vec<f64> = rows.iter().map(|&ci| lp.constraints[ci].rhs).collect();

        let mut lower = Vec::with_capacity(n + m);
        let mut upper = Vec::with_capacity(n + m);
        let mut x = Vec::with_capacity(n + m);
        let mut status = Vec::with_capacity(n + m);
        for v in &lp.variables {
            lower.push(v.lower);
            upper.push(v.upper);
            x.push(v.lower);
            status.push(Status::AtLower);
        }
        for &ci in &rows {
            let (l, u) = match lp.constraints[ci].relation {
                Relation::Le => (0.0, f64::INFINITY),
                Relation::Ge => (f64::NEG_INFINITY, 0.0),
                Relation::Eq => (0.0, 0.0),
            };
            lower.push(l);
            upper.push(u);
        }

        // Natural slack values at x = lower.
        let mut act = rhs.clone();
        for (j, v) in lp.variables.iter().enumerate() {
            if v.lower != 0.0 {
                for (i, a) in cols.column(j) {
                    act[i] -= a * v.lower;
                }
            }
        }

        let mut basis = vec![0usize; m];
        let mut art_row = Vec::new();
        let mut art_sign = Vec::new();
        let mut art_val = Vec::new();
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            let s = act[i];
            let (l, u) = (lower[n + i], upper[n + i]);
            if s >= l && s <= u {
                x.push(s);
                status.push(Status::Basic);
                basis[i] = n + i;
                binv[i * m + i] = 1.0;
            } else {
                let (bound, st) = if s < l {
                    (l, Status::AtLower)
                } else {
                    (u, Status::AtUpper)
                };
                x.push(bound);
                status.push(st);
                let sign = if s - bound >= 0.0 { 1.0 } else { -1.0 };
                basis[i] = n + m + art_row.len();
                art_row.push(i);
                art_sign.push(sign);
                art_val.push((s - bound).abs());
                binv[i * m + i] = sign;
            }
        }
        let na = art_row.len();
        let mut cost = vec![0.0; n + m + na];
        for _ in 0..na {
            lower.push(0.0);
            upper.push(f64::INFINITY);
            status.push(Status::Basic);
        }
        x.extend(art_val);
        for c in cost.iter_mut().skip(n + m) {
            *c = -1.0;
        }
        let total = n + m + na;
        let mut engine = Simplex {
            m,
            n,
            cols,
            art_row,
            art_sign,
            rhs,
            lower,
            upper,
            cost,
            x,
            status,
            basis,
            binv,
            d: vec![0.0; total],
            cfg: cfg.clone(),
            iterations: 0,
            since_refresh: 0,
        };
        engine.recompute_duals();
        Ok(Some(engine))
    }

    /// Solves the relaxation from scratch (two phases).
    pub(crate) fn solve(lp: &LinearProgram, cfg: &SolverConfig) -> Result<(Option<Self>, SolveStatus), SolverError> {
        let Some(mut s) = Self::build(lp, cfg)? else {
            return Ok((None, SolveStatus::Infeasible));
        };
        let n = s.n;
        let m = s.m;
        if !s.art_row.is_empty() {
            match s.primal()? {
                Outcome::Optimal => {}
                _ => {
                    return Err(SolverError::NumericalBreakdown(
                        "phase 1 did not terminate optimally".into(),
                    ))
                }
            }
            let infeas: f64 = (n + m..s.ncols()).map(|j| s.x[j]).sum();
            let scale = s.rhs.iter().fold(1.0f64, |a, v| a.max(v.abs()));
            if infeas > cfg.feasibility_tol * scale {
                return Ok((None, SolveStatus::Infeasible));
            }
            for j in n + m..s.ncols() {
                s.upper[j] = 0.0;
                if s.status[j] != Status::Basic {
                    s.x[j] = 0.0;
                    s.status[j] = Status::AtLower;
                }
            }
        }
        for j in 0..s.ncols() {
            s.cost[j] = if j < n { lp.variables[j].objective } else { 0.0 };
        }
        s.refresh()?;
        match s.primal()? {
            Outcome::Optimal => Ok((Some(s), SolveStatus::Optimal)),
            Outcome::Unbounded => Ok((None, SolveStatus::Unbounded)),
            Outcome::Infeasible => unreachable!("primal simplex never reports infeasibility"),
        }
    }

    /// Changes the bounds of structural variable `j`, keeping nonbasic
    /// variables at a finite bound.
    pub(crate) fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        debug_assert!(j < self.n);
        if self.lower[j] == lower && self.upper[j] == upper {
            return;
        }
        self.lower[j] = lower;
        self.upper[j] = upper;
        let target = match self.status[j] {
            Status::Basic => return,
            Status::AtLower if lower.is_finite() => lower,
            Status::AtUpper if upper.is_finite() => upper,
            _ if lower.is_finite() => {
                self.status[j] = Status::AtLower;
                lower
            }
            _ => {
                self.status[j] = Status::AtUpper;
                upper
            }
        };
        let shift = target - self.x[j];
        if shift != 0.0 {
            let alpha = self.ftran(j);
            for (i, &ai) in alpha.iter().enumerate() {
                let b = self.basis[i];
                self.x[b] -= ai * shift;
            }
            self.x[j] = target;
        }
    }

    pub(crate) fn bounds(&self, j: usize) -> (f64, f64) {
        (self.lower[j], self.upper[j])
    }

    /// Restores optimality after bound changes: dual simplex, then a primal
    /// pass to clean up any reduced-cost drift.
    pub(crate) fn reoptimize(&mut self) -> Result<SolveStatus, SolverError> {
        self.iterations = 0;
        match self.dual()? {
            Outcome::Optimal => {}
            Outcome::Infeasible => return Ok(SolveStatus::Infeasible),
            Outcome::Unbounded => unreachable!("dual simplex never reports unboundedness"),
        }
        match self.primal()? {
            Outcome::Optimal => Ok(SolveStatus::Optimal),
            Outcome::Unbounded => Ok(SolveStatus::Unbounded),
            Outcome::Infeasible => unreachable!("primal simplex never reports infeasibility"),
        }
    }

    /// Current structural values.
    pub(crate) fn values(&self) -> &[f64] {
        &self.x[..self.n]
    }

    pub(crate) fn objective(&self) -> f64 {
        (0..self.n).map(|j| self.cost[j] * self.x[j]).sum()
    }
}

/// Solves the continuous relaxation with default settings.
pub fn solve_lp(lp: &LinearProgram) -> Result<MilpSolution, SolverError> {
    solve_lp_with(lp, &SolverConfig::default())
}

/// Solves the continuous relaxation (integrality ignored).
pub fn solve_lp_with(lp: &LinearProgram, cfg: &SolverConfig) -> Result<MilpSolution, SolverError> {
    let (engine, status) = Simplex::solve(lp, cfg)?;
    match (engine, status) {
        (Some(s), SolveStatus::Optimal) => Ok(MilpSolution {
            status,
            objective: s.objective(),
            values: s.values().to_vec(),
            nodes: 1,
            gap: 0.0,
        }),
        (_, status) => Ok(MilpSolution::without_solution(status, 1)),
    }
}

/// A solved relaxation that can be re-solved after tightening variable
/// bounds, warm-starting from the previous basis.
#[derive(Debug, Clone)]
pub struct LpSession {
    engine: Simplex,
}

impl LpSession {
    /// Solves `lp`; `None` when it is infeasible or unbounded.
    pub fn start(lp: &LinearProgram, cfg: &SolverConfig) -> Result<Option<Self>, SolverError> {
        Ok(match Simplex::solve(lp, cfg)? {
            (Some(engine), SolveStatus::Optimal) => Some(Self { engine }),
            _ => None,
        })
    }

    /// Replaces the bounds of variable `j`. Only tightening keeps the warm
    /// start valid.
    pub fn set_bounds(&mut self, j: usize, lower: f64, upper: f64) {
        self.engine.set_bounds(j, lower, upper);
    }

    pub fn bounds(&self, j: usize) -> (f64, f64) {
        self.engine.bounds(j)
    }

    pub fn resolve(&mut self) -> Result<SolveStatus, SolverError> {
        self.engine.reoptimize()
    }

    pub fn values(&self) -> &[f64] {
        self.engine.values()
    }

    pub fn objective(&self) -> f64 {
        self.engine.objective()
    }
}

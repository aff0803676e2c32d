//! C ABI over `qkdnet`.
//!
//! Objects are opaque handles created by `*_new`/`*_load` functions and
//! released by the matching `*_free`. Every fallible call returns a
//! [`QkdStatus`]; on failure [`qkdnet_last_error`] describes the cause for
//! the calling thread. Strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use qkdnet::evaluator::{self, EvalError};
use qkdnet::files::{self, FileError};
use qkdnet::keyrate::{key_rate, QkdSystemParams};
use qkdnet::mcfp::{self, McfpError};
use qkdnet::model::{DemandModel, ModelError, NetworkInstance, NodeId};
use qkdnet::solver::{SolverConfig, SolverError};

/// Result of a call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QkdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    Model = 5,
    SolverLimit = 6,
    Solver = 7,
    Panic = 8,
}

/// System parameters.
pub struct QkdParams(QkdSystemParams);

/// A topology with its demand, packet size and system parameters.
pub struct QkdInstance {
    instance: NetworkInstance,
    solver: SolverConfig,
}

/// Rows of a placement or selection study.
pub struct QkdReport {
    labels: Vec<CString>,
    bounds: Vec<f64>,
    csv: CString,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

struct Failure(QkdStatus, String);

impl Failure {
    fn invalid(msg: impl Into<String>) -> Self {
        Failure(QkdStatus::InvalidArgument, msg.into())
    }
}

impl From<FileError> for Failure {
    fn from(e: FileError) -> Self {
        let status = match e {
            FileError::Io { .. } => QkdStatus::Io,
            FileError::Parse { .. } => QkdStatus::Parse,
            FileError::Invalid { .. } => QkdStatus::Model,
        };
        Failure(status, e.to_string())
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        Failure(QkdStatus::Model, e.to_string())
    }
}

impl From<SolverError> for Failure {
    fn from(e: SolverError) -> Self {
        let status = match e {
            SolverError::NodeLimitExceeded { .. } => QkdStatus::SolverLimit,
            _ => QkdStatus::Solver,
        };
        Failure(status, e.to_string())
    }
}

impl From<McfpError> for Failure {
    fn from(e: McfpError) -> Self {
        match e {
            McfpError::Solver(s) => s.into(),
            other => Failure(QkdStatus::Model, other.to_string()),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Mcfp(m) => m.into(),
            EvalError::Model(m) => m.into(),
            other => Failure(QkdStatus::InvalidArgument, other.to_string()),
        }
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> QkdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            QkdStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            QkdStatus::Panic
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure(QkdStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, what: &str) -> Result<&'a T, Failure> {
    p.as_ref()
        .ok_or_else(|| Failure(QkdStatus::NullPointer, format!("{what} is null")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Failure> {
    p.as_mut()
        .ok_or_else(|| Failure(QkdStatus::NullPointer, format!("{what} is null")))
}

unsafe fn str_list(items: *const *const c_char, len: usize, what: &str) -> Result<Vec<String>, Failure> {
    if len == 0 {
        return Ok(Vec::new());
    }
    if items.is_null() {
        return Err(Failure(QkdStatus::NullPointer, format!("{what} is null")));
    }
    std::slice::from_raw_parts(items, len)
        .iter()
        .enumerate()
        .map(|(i, &p)| str_arg(p, &format!("{what}[{i}]")).map(str::to_owned))
        .collect()
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn qkdnet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates the reference system parameters.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_params_new(out: *mut *mut QkdParams) -> QkdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(QkdParams(QkdSystemParams::reference())));
        Ok(())
    })
}

/// Loads system parameters from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_params_load(path: *const c_char, out: *mut *mut QkdParams) -> QkdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = str_arg(path, "path")?;
        *out = Box::into_raw(Box::new(QkdParams(files::load_params(Path::new(path))?)));
        Ok(())
    })
}

/// Turns the finite-key analysis on or off.
///
/// # Safety
/// `params` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_params_set_finite_key(params: *mut QkdParams, on: bool) -> QkdStatus {
    guard(|| {
        out_arg(params, "params")?.0.finite_key = on;
        Ok(())
    })
}

/// # Safety
/// `params` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_params_free(params: *mut QkdParams) {
    if !params.is_null() {
        drop(Box::from_raw(params));
    }
}

/// Secret key rate in bits/s of one link of `length_km`.
///
/// # Safety
/// `params` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_key_rate(params: *const QkdParams, length_km: f64, out: *mut f64) -> QkdStatus {
    guard(|| {
        let p = ref_arg(params, "params")?;
        let out = out_arg(out, "out")?;
        if !(length_km.is_finite() && length_km >= 0.0) {
            return Err(Failure::invalid(format!("length_km must be non-negative, got {length_km}")));
        }
        p.0.validate().map_err(|e| Failure::invalid(e.to_string()))?;
        *out = key_rate(length_km, &p.0);
        Ok(())
    })
}

/// Loads a topology file and builds an instance.
///
/// With `demand_bps > 0` every ordered pair of non-optional nodes gets that
/// demand and key consumption ratio `beta`; otherwise the file's connections
/// are used and a positive `beta` overrides theirs. `params` may be null for
/// the reference system.
///
/// # Safety
/// Pointers must be valid; `params` may be null.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_instance_load(
    topology_path: *const c_char,
    params: *const QkdParams,
    demand_bps: f64,
    beta: f64,
    packet_bits: u32,
    out: *mut *mut QkdInstance,
) -> QkdStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        let path = Path::new(str_arg(topology_path, "topology_path")?);
        let params = params.as_ref().map_or_else(QkdSystemParams::reference, |p| p.0.clone());
        let file = files::load_topology(path)?;
        let topo = file.topology();
        let at = |e: ModelError| Failure(QkdStatus::Model, format!("{}: {e}", path.display()));
        let demand = if demand_bps > 0.0 {
            DemandModel::uniform(&topo.nodes, demand_bps, beta).map_err(at)?
        } else if file.connections.is_empty() {
            return Err(Failure::invalid(format!(
                "{}: no connections in the file and demand_bps is not positive",
                path.display()
            )));
        } else {
            let d = DemandModel::new(file.connections.clone()).map_err(at)?;
            if beta > 0.0 {
                d.with_beta(beta).map_err(at)?
            } else {
                d
            }
        };
        let instance = NetworkInstance::new(topo, demand, packet_bits, params).map_err(at)?;
        *out = Box::into_raw(Box::new(QkdInstance {
            instance,
            solver: SolverConfig::default(),
        }));
        Ok(())
    })
}

/// Sets the branch-and-bound node limit used by later solves.
///
/// # Safety
/// `instance` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_instance_set_node_limit(instance: *mut QkdInstance, limit: u64) -> QkdStatus {
    guard(|| {
        let inst = out_arg(instance, "instance")?;
        if limit == 0 {
            return Err(Failure::invalid("node limit must be positive"));
        }
        inst.solver.node_limit = limit;
        Ok(())
    })
}

/// # Safety
/// `instance` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_instance_free(instance: *mut QkdInstance) {
    if !instance.is_null() {
        drop(Box::from_raw(instance));
    }
}

/// Communication bound of the instance.
///
/// # Safety
/// `instance` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_bound(instance: *const QkdInstance, out: *mut f64) -> QkdStatus {
    guard(|| {
        let inst = ref_arg(instance, "instance")?;
        let out = out_arg(out, "out")?;
        *out = mcfp::its_bound(&inst.instance, &inst.solver)?.bound;
        Ok(())
    })
}

/// Adds one QKD system to each candidate edge in turn. With `len == 0`
/// every active edge is a candidate. Row 0 of the report is the baseline,
/// labelled `none`.
///
/// # Safety
/// `edges` must point to `len` strings; `instance` must come from this
/// library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_place(
    instance: *const QkdInstance,
    edges: *const *const c_char,
    len: usize,
    workers: usize,
    out: *mut *mut QkdReport,
) -> QkdStatus {
    guard(|| {
        let inst = ref_arg(instance, "instance")?;
        let out = out_arg(out, "out")?;
        let mut candidates = str_list(edges, len, "edges")?;
        if candidates.is_empty() {
            candidates = inst.instance.topology().active_edges().map(|(_, e)| e.name()).collect();
        }
        let rep = evaluator::evaluate_placements(&inst.instance, &candidates, &inst.solver, workers)?;
        let mut rows = vec![("none".to_owned(), rep.baseline_bound)];
        rows.extend(rep.rows.iter().map(|r| (r.edge.clone(), r.bound)));
        *out = report(rows, rep.to_csv())?;
        Ok(())
    })
}

/// Evaluates every subset of the optional nodes. With `len == 0` all
/// optional nodes of the topology are used. Labels join node ids with `+`;
/// the empty subset is `none`.
///
/// # Safety
/// `nodes` must point to `len` strings; `instance` must come from this
/// library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_select(
    instance: *const QkdInstance,
    nodes: *const *const c_char,
    len: usize,
    workers: usize,
    out: *mut *mut QkdReport,
) -> QkdStatus {
    guard(|| {
        let inst = ref_arg(instance, "instance")?;
        let out = out_arg(out, "out")?;
        let names = str_list(nodes, len, "nodes")?;
        let ids: Vec<NodeId> = if names.is_empty() {
            let topo = inst.instance.topology();
            topo.nodes.iter().filter(|n| n.optional).map(|n| n.id.clone()).collect()
        } else {
            names
                .into_iter()
                .map(NodeId::new)
                .collect::<Result<_, _>>()?
        };
        let rep = evaluator::evaluate_selection(&inst.instance, &ids, &inst.solver, workers)?;
        let rows = rep
            .rows
            .iter()
            .map(|r| {
                let label = if r.selected.is_empty() {
                    "none".to_owned()
                } else {
                    r.selected.iter().map(NodeId::as_str).collect::<Vec<_>>().join("+")
                };
                (label, r.bound)
            })
            .collect();
        *out = report(rows, rep.to_csv())?;
        Ok(())
    })
}

fn report(rows: Vec<(String, f64)>, csv: String) -> Result<*mut QkdReport, Failure> {
    let bad = |_| Failure::invalid("label contains NUL");
    let mut labels = Vec::with_capacity(rows.len());
    let mut bounds = Vec::with_capacity(rows.len());
    for (l, b) in rows {
        labels.push(CString::new(l).map_err(bad)?);
        bounds.push(b);
    }
    Ok(Box::into_raw(Box::new(QkdReport {
        labels,
        bounds,
        csv: CString::new(csv).map_err(bad)?,
    })))
}

/// Number of rows, or 0 for a null report.
///
/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_report_len(report: *const QkdReport) -> usize {
    report.as_ref().map_or(0, |r| r.labels.len())
}

/// Label of row `index`, or null when out of range. Owned by the report.
///
/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_report_label(report: *const QkdReport, index: usize) -> *const c_char {
    report
        .as_ref()
        .and_then(|r| r.labels.get(index))
        .map_or(ptr::null(), |s| s.as_ptr())
}

/// Bound of row `index`.
///
/// # Safety
/// `report` must come from this library and `out` be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_report_bound(report: *const QkdReport, index: usize, out: *mut f64) -> QkdStatus {
    guard(|| {
        let r = ref_arg(report, "report")?;
        let out = out_arg(out, "out")?;
        *out = *r
            .bounds
            .get(index)
            .ok_or_else(|| Failure::invalid(format!("row {index} out of range (len {})", r.bounds.len())))?;
        Ok(())
    })
}

/// The report as CSV. Owned by the report.
///
/// # Safety
/// `report` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_report_csv(report: *const QkdReport) -> *const c_char {
    report.as_ref().map_or(ptr::null(), |r| r.csv.as_ptr())
}

/// # Safety
/// `report` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn qkdnet_report_free(report: *mut QkdReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}

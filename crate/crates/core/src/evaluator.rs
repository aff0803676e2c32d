//! Placement and selection studies over one base instance.

use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::mcfp::{its_bound, McfpError};
use crate::model::{apply_modification, ModelError, Modification, NetworkInstance, NodeId};
use crate::solver::SolverConfig;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Mcfp(#[from] McfpError),
    #[error("{0} optional nodes requested; at most 20 can be enumerated")]
    TooManyOptionalNodes(usize),
    #[error("could not start worker pool: {0}")]
    Pool(String),
}

/// Satisfaction verdict: every connection gets at least its demand.
pub fn is_satisfied(bound: f64) -> bool {
    bound >= 1.0
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementRow {
    pub edge: String,
    pub bound: f64,
    pub delta: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlacementReport {
    pub baseline_bound: f64,
    pub rows: Vec<PlacementRow>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub selected: Vec<NodeId>,
    pub bound: f64,
    pub satisfied: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionReport {
    pub rows: Vec<SelectionRow>,
}

/// Runs `jobs` on at most `workers` threads (0: one per core), keeping input
/// order in the output.
fn run_bounded<T, F>(workers: usize, jobs: Vec<T>, f: F) -> Result<Vec<f64>, EvalError>
where
    T: Send,
    F: Fn(T) -> Result<f64, EvalError> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| EvalError::Pool(e.to_string()))?;
    pool.install(|| jobs.into_par_iter().map(&f).collect())
}

/// Bound of the unmodified instance, then of each candidate edge carrying
/// one more QKD system. Candidates are edge labels or `a-b` names.
pub fn evaluate_placements(
    instance: &NetworkInstance,
    candidates: &[String],
    cfg: &SolverConfig,
    workers: usize,
) -> Result<PlacementReport, EvalError> {
    let topo = instance.topology();
    let mut jobs = vec![None];
    let mut names = Vec::with_capacity(candidates.len());
    for c in candidates {
        let i = topo.find_edge(c)?;
        names.push(topo.edges[i].name());
        jobs.push(Some(topo.edges[i].key()));
    }
    let bounds = run_bounded(workers, jobs, |job| {
        let inst = match job {
            None => instance.clone(),
            Some(key) => instance.with_topology(apply_modification(topo, &Modification::AddSystem(key))?)?,
        };
        Ok(its_bound(&inst, cfg)?.bound)
    })?;
    let baseline_bound = bounds[0];
    let rows = names
        .into_iter()
        .zip(&bounds[1..])
        .map(|(edge, &bound)| PlacementRow {
            edge,
            bound,
            delta: bound - baseline_bound,
            satisfied: is_satisfied(bound),
        })
        .collect();
    Ok(PlacementReport { baseline_bound, rows })
}

/// All subsets of `nodes`, by size and then lexicographically by position.
pub fn subsets_in_order<T: Clone>(nodes: &[T]) -> Vec<Vec<T>> {
    let k = nodes.len();
    let mut masks: Vec<u64> = (0..(1u64 << k)).collect();
    let key = |m: &u64| {
        let idx: Vec<usize> = (0..k).filter(|i| m & (1 << i) != 0).collect();
        (idx.len(), idx)
    };
    masks.sort_by_key(key);
    masks
        .into_iter()
        .map(|m| (0..k).filter(|i| m & (1 << i) != 0).map(|i| nodes[i].clone()).collect())
        .collect()
}

/// Bound for every subset of `optional_nodes` being brought into the
/// network. Demand stays that of the base instance.
pub fn evaluate_selection(
    instance: &NetworkInstance,
    optional_nodes: &[NodeId],
    cfg: &SolverConfig,
    workers: usize,
) -> Result<SelectionReport, EvalError> {
    let topo = instance.topology();
    let mut list: Vec<NodeId> = Vec::with_capacity(optional_nodes.len());
    for id in optional_nodes {
        match topo.node(id) {
            None => return Err(ModelError::UnknownNode(id.clone()).into()),
            Some(n) if !n.optional => return Err(ModelError::NotOptional(id.clone()).into()),
            Some(_) if list.contains(id) => {}
            Some(_) => list.push(id.clone()),
        }
    }
    if list.len() > 20 {
        return Err(EvalError::TooManyOptionalNodes(list.len()));
    }
    let subsets = subsets_in_order(&list);
    let bounds = run_bounded(workers, subsets.clone(), |s| {
        let t = apply_modification(topo, &Modification::SelectNodes(s))?;
        Ok(its_bound(&instance.with_topology(t)?, cfg)?.bound)
    })?;
    let rows = subsets
        .into_iter()
        .zip(bounds)
        .map(|(selected, bound)| SelectionRow {
            selected,
            bound,
            satisfied: is_satisfied(bound),
        })
        .collect();
    Ok(SelectionReport { rows })
}

/// Fixed-width rendering of a bound.
pub fn fmt_bound(b: f64) -> String {
    format!("{b:.4}")
}

fn selection_label(nodes: &[NodeId]) -> String {
    if nodes.is_empty() {
        "none".to_owned()
    } else {
        nodes.iter().map(NodeId::as_str).collect::<Vec<_>>().join("+")
    }
}

fn verdict(satisfied: bool) -> &'static str {
    if satisfied {
        "yes"
    } else {
        "no"
    }
}

/// Right-pads each column to its widest cell.
fn aligned(rows: &[Vec<String>]) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(String::len).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r
            .iter()
            .enumerate()
            .map(|(c, cell)| format!("{cell:<w$}", w = widths[c]))
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

impl PlacementReport {
    /// `Placement,Bound`, with the unmodified topology as `none`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Placement,Bound\n");
        let _ = writeln!(out, "none,{}", self.baseline_bound);
        for r in &self.rows {
            let _ = writeln!(out, "{},{}", r.edge, r.bound);
        }
        out
    }

    /// One row per placement with the change from baseline and the verdict.
    pub fn to_table(&self) -> String {
        let mut rows = vec![vec!["Placement".into(), "Bound".into(), "Delta".into(), "Satisfied".into()]];
        rows.push(vec![
            "none".into(),
            fmt_bound(self.baseline_bound),
            fmt_bound(0.0),
            verdict(is_satisfied(self.baseline_bound)).into(),
        ]);
        for r in &self.rows {
            rows.push(vec![
                r.edge.clone(),
                fmt_bound(r.bound),
                format!("{:+.4}", r.delta),
                verdict(r.satisfied).into(),
            ]);
        }
        aligned(&rows)
    }

    /// Two lines, placements across: the layout of a comparison table.
    pub fn to_structured(&self) -> String {
        let mut head = vec!["Placement".to_owned(), "none".to_owned()];
        let mut vals = vec!["Bound".to_owned(), fmt_bound(self.baseline_bound)];
        for r in &self.rows {
            head.push(r.edge.clone());
            vals.push(fmt_bound(r.bound));
        }
        aligned(&[head, vals])
    }
}

impl SelectionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("Selection,Bound\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{}", selection_label(&r.selected), r.bound);
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut rows = vec![vec!["Selection".into(), "Bound".into(), "Satisfied".into()]];
        for r in &self.rows {
            rows.push(vec![
                selection_label(&r.selected),
                fmt_bound(r.bound),
                verdict(r.satisfied).into(),
            ]);
        }
        aligned(&rows)
    }

    pub fn to_structured(&self) -> String {
        let mut head = vec!["Selection".to_owned()];
        let mut vals = vec!["Bound".to_owned()];
        for r in &self.rows {
            head.push(selection_label(&r.selected));
            vals.push(fmt_bound(r.bound));
        }
        aligned(&[head, vals])
    }

    pub fn bound_of(&self, selected: &[NodeId]) -> Option<f64> {
        let mut want: Vec<&NodeId> = selected.iter().collect();
        want.sort();
        self.rows.iter().find_map(|r| {
            let mut have: Vec<&NodeId> = r.selected.iter().collect();
            have.sort();
            (have == want).then_some(r.bound)
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::keyrate::QkdSystemParams;
    use crate::model::{Edge, Node, Topology};

    fn id(s: &str) -> NodeId {
        NodeId::new(s).unwrap()
    }

    fn pair() -> NetworkInstance {
        let topo = Topology {
            nodes: vec![Node::new(id("a")), Node::new(id("b"))],
            edges: vec![Edge::new(id("a"), id("b"), 100.0).with_label("e")],
        };
        NetworkInstance::uniform(topo, 10_000.0, 1.0, 4000, QkdSystemParams::reference()).unwrap()
    }

    #[test]
    fn subset_order() {
        let s = subsets_in_order(&["a", "b", "c"]);
        let expect: Vec<Vec<&str>> = vec![
            vec![],
            vec!["a"],
            vec!["b"],
            vec!["c"],
            vec!["a", "b"],
            vec!["a", "c"],
            vec!["b", "c"],
            vec!["a", "b", "c"],
        ];
        assert_eq!(s, expect);
        assert_eq!(subsets_in_order::<u8>(&[]), vec![Vec::<u8>::new()]);
    }

    #[test]
    fn placement_on_single_edge_doubles() {
        // r(100 km) = 87997 bps: 21 packets for two connections -> 10 each.
        let rep = evaluate_placements(&pair(), &["e".into()], &SolverConfig::default(), 1).unwrap();
        assert_eq!(rep.baseline_bound, 4.0);
        assert_eq!(rep.rows[0].bound, 8.4);
        assert!(rep.rows[0].satisfied);
        assert_eq!(rep.to_csv(), "Placement,Bound\nnone,4\ne,8.4\n");
    }

    #[test]
    fn empty_candidates_give_baseline_only() {
        let rep = evaluate_placements(&pair(), &[], &SolverConfig::default(), 1).unwrap();
        assert!(rep.rows.is_empty());
        assert!(matches!(
            evaluate_placements(&pair(), &["zz".into()], &SolverConfig::default(), 1),
            Err(EvalError::Model(ModelError::UnknownEdge(_)))
        ));
    }

    #[test]
    fn selection_without_optional_nodes() {
        let rep = evaluate_selection(&pair(), &[], &SolverConfig::default(), 1).unwrap();
        assert_eq!(rep.rows.len(), 1);
        assert_eq!(rep.to_csv(), "Selection,Bound\nnone,4\n");
        assert!(matches!(
            evaluate_selection(&pair(), &[id("a")], &SolverConfig::default(), 1),
            Err(EvalError::Model(ModelError::NotOptional(_)))
        ));
    }

    #[test]
    fn renderings_are_aligned() {
        let rep = PlacementReport {
            baseline_bound: 0.96,
            rows: vec![PlacementRow {
                edge: "e1".into(),
                bound: 1.92,
                delta: 0.96,
                satisfied: true,
            }],
        };
        assert_eq!(
            rep.to_table(),
            "Placement  Bound   Delta    Satisfied\nnone       0.9600  0.0000   no\ne1         1.9200  +0.9600  yes\n"
        );
        assert_eq!(rep.to_structured(), "Placement  none    e1\nBound      0.9600  1.9200\n");
    }
}

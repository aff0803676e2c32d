//! TOML topology and parameter files.
//!
//! A topology file holds `[[nodes]]` and `[[edges]]` tables and, optionally,
//! explicit `[[connections]]` with per-connection demand and key
//! consumption ratio. A parameter file holds one key per
//! [`QkdSystemParams`] field.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::keyrate::QkdSystemParams;
use crate::model::{validate_topology, Connection, Edge, ModelError, Node, Topology};

#[derive(Debug, Error)]
pub enum FileError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}:{line}:{column}: {message}", path.display())]
    Parse {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
}

impl FileError {
    pub fn path(&self) -> &Path {
        match self {
            FileError::Io { path, .. } | FileError::Parse { path, .. } | FileError::Invalid { path, .. } => path,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologyFile {
    #[serde(default)]
    pub nodes: Vec<Node>,
    #[serde(default)]
    pub edges: Vec<Edge>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connections: Vec<Connection>,
}

impl TopologyFile {
    pub fn topology(&self) -> Topology {
        Topology {
            nodes: self.nodes.clone(),
            edges: self.edges.clone(),
        }
    }
}

fn read(path: &Path) -> Result<String, FileError> {
    fs::read_to_string(path).map_err(|source| FileError::Io {
        path: path.to_owned(),
        source,
    })
}

fn line_col(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.len() - before.rfind('\n').map_or(0, |i| i + 1) + 1;
    (line, column)
}

fn parse<T: for<'de> Deserialize<'de>>(path: &Path, text: &str) -> Result<T, FileError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_col(text, s.start));
        FileError::Parse {
            path: path.to_owned(),
            line,
            column,
            message: e.message().trim_end().to_owned(),
        }
    })
}

fn invalid(path: &Path, e: impl std::fmt::Display) -> FileError {
    FileError::Invalid {
        path: path.to_owned(),
        message: e.to_string(),
    }
}

/// Parses and validates a topology file held in memory.
pub fn parse_topology(path: &Path, text: &str) -> Result<TopologyFile, FileError> {
    let mut file: TopologyFile = parse(path, text)?;
    let topo = validate_topology(file.topology()).map_err(|e: ModelError| invalid(path, e))?;
    file.nodes = topo.nodes;
    file.edges = topo.edges;
    Ok(file)
}

pub fn load_topology(path: &Path) -> Result<TopologyFile, FileError> {
    parse_topology(path, &read(path)?)
}

pub fn parse_params(path: &Path, text: &str) -> Result<QkdSystemParams, FileError> {
    let params: QkdSystemParams = parse(path, text)?;
    params.validate().map_err(|e| invalid(path, e))?;
    Ok(params)
}

pub fn load_params(path: &Path) -> Result<QkdSystemParams, FileError> {
    parse_params(path, &read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"
[[nodes]]
id = "a"

[[nodes]]
id = "b"

[[nodes]]
id = "c"
optional = true

[[edges]]
label = "e1"
a = "a"
b = "b"
length_km = 10

[[edges]]
a = "b"
b = "c"
length_km = 12.5
system_count = 2
optional = true
"#;

    #[test]
    fn toy_topology_with_defaults() {
        let f = parse_topology(Path::new("toy.topo"), TOY).unwrap();
        assert_eq!(f.nodes.len(), 3);
        assert_eq!(f.edges[0].classical_capacity_bps, 1e9);
        assert_eq!(f.edges[0].length_km, 10.0);
        assert_eq!(f.edges[1].system_count, 2);
        assert!(f.connections.is_empty());
    }

    #[test]
    fn parse_error_has_line() {
        let text = "[[nodes]]\nid = \"a\"\n\n[[edges]]\na = \"a\"\nb = \"b\"\nlength_km = \"far\"\n";
        match parse_topology(Path::new("bad.topo"), text).unwrap_err() {
            FileError::Parse { line, path, .. } => {
                assert_eq!(line, 7);
                assert_eq!(path, Path::new("bad.topo"));
            }
            e => panic!("unexpected {e}"),
        }
    }

    #[test]
    fn unknown_key_is_rejected() {
        let text = "[[nodes]]\nid = \"a\"\ncolour = \"red\"\n";
        let err = parse_topology(Path::new("x.topo"), text).unwrap_err();
        assert!(err.to_string().contains("x.topo:"), "{err}");
        let text = "[[edges]]\na = \"a\"\nb = \"b\"\nlength_km = 1\nweight = 3\n";
        assert!(matches!(
            parse_topology(Path::new("x.topo"), text),
            Err(FileError::Parse { .. })
        ));
    }

    #[test]
    fn semantic_errors_name_the_file() {
        let text = "[[nodes]]\nid = \"a\"\n\n[[edges]]\na = \"a\"\nb = \"z\"\nlength_km = 1\n";
        let err = parse_topology(Path::new("dangling.topo"), text).unwrap_err();
        assert!(matches!(err, FileError::Invalid { .. }));
        let msg = err.to_string();
        assert!(msg.starts_with("dangling.topo: "), "{msg}");
        assert!(msg.contains('z'), "{msg}");
    }

    #[test]
    fn params_round_trip() {
        let p = QkdSystemParams::reference();
        let text = toml::to_string(&p).unwrap();
        assert_eq!(parse_params(Path::new("t.params"), &text).unwrap(), p);
        let bad = text.replace("mu = 0.4", "mu = -0.4");
        assert!(matches!(
            parse_params(Path::new("t.params"), &bad),
            Err(FileError::Invalid { .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let err = load_params(Path::new("/nonexistent/x.params")).unwrap_err();
        assert!(matches!(err, FileError::Io { .. }));
        assert_eq!(err.path(), Path::new("/nonexistent/x.params"));
    }
}

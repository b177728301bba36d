//! Run manifests, JSON-lines trial records and edge-list files.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;
use vacant_core::{Digraph, Graph, VertexId};

use crate::config::ExperimentConfig;
use crate::experiments::TrialRecord;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}, line {line}: {message}")]
    Parse { path: PathBuf, line: usize, message: String },
}

impl IoError {
    pub fn at(path: &Path, source: std::io::Error) -> Self {
        IoError::Io { path: path.to_path_buf(), source }
    }

    pub fn csv(path: &Path, source: csv::Error) -> Self {
        IoError::Csv { path: path.to_path_buf(), source }
    }

    fn parse(path: &Path, line: usize, message: impl Into<String>) -> Self {
        IoError::Parse { path: path.to_path_buf(), line, message: message.into() }
    }
}

pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.csv";
pub const TRIALS_FILE: &str = "trials.jsonl";

/// Everything needed to reproduce a run. Output paths are relative to the
/// directory holding the manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    /// Canonical config text, seed included.
    pub config: String,
    pub base_seed: u64,
    pub resolved_times: Vec<u64>,
    pub started_unix: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub finished_unix: Option<u64>,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(cfg: &ExperimentConfig, times: Vec<u64>, outputs: Vec<String>) -> Self {
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            config: cfg.to_text(),
            base_seed: cfg.seed,
            resolved_times: times,
            started_unix: unix_now(),
            finished_unix: None,
            outputs,
        }
    }

    pub fn write(&self, path: &Path) -> Result<(), IoError> {
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, text + "\n").map_err(|e| IoError::at(path, e))
    }

    pub fn read(path: &Path) -> Result<Self, IoError> {
        let text = fs::read_to_string(path).map_err(|e| IoError::at(path, e))?;
        serde_json::from_str(&text).map_err(|e| IoError::parse(path, e.line(), e.to_string()))
    }
}

pub fn unix_now() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
}

/// One JSON object per line, in trial order.
pub fn write_trials(records: &[TrialRecord], path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::at(path, e))?;
    let mut w = BufWriter::new(file);
    for rec in records {
        serde_json::to_writer(&mut w, rec).map_err(|e| IoError::at(path, e.into()))?;
        w.write_all(b"\n").map_err(|e| IoError::at(path, e))?;
    }
    w.flush().map_err(|e| IoError::at(path, e))
}

pub fn read_trials(path: &Path) -> Result<Vec<TrialRecord>, IoError> {
    let file = File::open(path).map_err(|e| IoError::at(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| IoError::at(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| IoError::parse(path, i + 1, e.to_string()))?);
    }
    Ok(out)
}

/// A graph read back from an edge list.
#[derive(Clone, Debug, PartialEq)]
pub enum EdgeList {
    Undirected(Graph),
    Directed(Digraph),
}

pub fn write_graph<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# n={} m={} directed=0", g.vertex_count(), g.edge_count())?;
    for &(u, v) in g.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn write_digraph<W: Write>(d: &Digraph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# n={} m={} directed=1", d.vertex_count(), d.arc_count())?;
    for (u, v) in d.arcs() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn dump_graph(g: &Graph, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::at(path, e))?;
    write_graph(g, BufWriter::new(file)).map_err(|e| IoError::at(path, e))
}

pub fn dump_digraph(d: &Digraph, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(|e| IoError::at(path, e))?;
    write_digraph(d, BufWriter::new(file)).map_err(|e| IoError::at(path, e))
}

pub fn load_edge_list(path: &Path) -> Result<EdgeList, IoError> {
    let file = File::open(path).map_err(|e| IoError::at(path, e))?;
    parse_edge_list(file, path)
}

/// Parses the `# n=<n> m=<m> directed=<0|1>` header and `u v` lines.
/// `origin` is only used in error messages.
pub fn parse_edge_list<R: Read>(input: R, origin: &Path) -> Result<EdgeList, IoError> {
    let mut lines = BufReader::new(input).lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| IoError::parse(origin, 1, "empty file"))?;
    let header = header.map_err(|e| IoError::at(origin, e))?;
    let (n, m, directed) = parse_header(&header).ok_or_else(|| IoError::parse(origin, 1, "bad header"))?;
    let mut pairs: Vec<(VertexId, VertexId)> = Vec::with_capacity(m);
    for (i, line) in lines {
        let line = line.map_err(|e| IoError::at(origin, e))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split_whitespace().map(str::parse::<VertexId>);
        match (parts.next(), parts.next(), parts.next()) {
            (Some(Ok(u)), Some(Ok(v)), None) => pairs.push((u, v)),
            _ => return Err(IoError::parse(origin, i + 1, format!("expected `u v`, got {line:?}"))),
        }
    }
    if pairs.len() != m {
        return Err(IoError::parse(origin, 1, format!("header says m={m}, found {} lines", pairs.len())));
    }
    let wrap = |e: vacant_core::GraphError| IoError::parse(origin, 0, e.to_string());
    Ok(if directed {
        EdgeList::Directed(Digraph::from_arcs(n, &pairs).map_err(wrap)?)
    } else {
        EdgeList::Undirected(Graph::from_edges(n, pairs).map_err(wrap)?)
    })
}

fn parse_header(line: &str) -> Option<(usize, usize, bool)> {
    let rest = line.strip_prefix('#')?;
    let (mut n, mut m, mut d) = (None, None, None);
    for field in rest.split_whitespace() {
        let (k, v) = field.split_once('=')?;
        match k {
            "n" => n = v.parse().ok(),
            "m" => m = v.parse().ok(),
            "directed" => {
                d = match v {
                    "0" => Some(false),
                    "1" => Some(true),
                    _ => None,
                }
            }
            _ => return None,
        }
    }
    Some((n?, m?, d?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use vacant_core::{generate_dnp, generate_regular, DnpParams, RegularParams};

    #[test]
    fn graph_round_trip_keeps_loops_and_multi_edges() {
        let g = Graph::from_edges(3, vec![(0, 0), (0, 1), (0, 1), (1, 2)]).unwrap();
        let mut buf = Vec::new();
        write_graph(&g, &mut buf).unwrap();
        assert!(buf.starts_with(b"# n=3 m=4 directed=0\n"));
        assert_eq!(parse_edge_list(&buf[..], Path::new("mem")).unwrap(), EdgeList::Undirected(g));
    }

    #[test]
    fn generated_graphs_round_trip() {
        let g = generate_regular(RegularParams { n: 100, r: 3, simple_only: true }, 1).unwrap();
        let mut buf = Vec::new();
        write_graph(&g, &mut buf).unwrap();
        // Slot order of a pairing-built graph follows point order, so only
        // the edge list is compared.
        match parse_edge_list(&buf[..], Path::new("mem")).unwrap() {
            EdgeList::Undirected(back) => assert_eq!(back.edges(), g.edges()),
            other => panic!("{other:?}"),
        }
        let d = generate_dnp(DnpParams { n: 50, p: 0.1 }, 2).unwrap();
        let mut buf = Vec::new();
        write_digraph(&d, &mut buf).unwrap();
        assert_eq!(parse_edge_list(&buf[..], Path::new("mem")).unwrap(), EdgeList::Directed(d));
    }

    #[test]
    fn trial_records_round_trip_exactly() {
        use crate::config::{Density, ModelSpec, TimeSpec};
        let mut cfg = ExperimentConfig::new(
            ModelSpec::Gnp { n: 3000, density: Density::C(3.0) },
            vec![TimeSpec::Theta(-0.3), TimeSpec::Theta(0.3)],
        );
        cfg.trials = 3;
        let records = crate::experiments::run_trials(&cfg, true).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(TRIALS_FILE);
        write_trials(&records, &path).unwrap();
        assert_eq!(read_trials(&path).unwrap(), records);
    }

    #[test]
    fn malformed_edge_lists() {
        let cases = [
            "",
            "n=2 m=0 directed=0\n",
            "# n=2 m=1 directed=2\n0 1\n",
            "# n=2 m=2 directed=0\n0 1\n",
            "# n=2 m=1 directed=0\n0 x\n",
            "# n=2 m=1 directed=0\n0 5\n",
        ];
        for c in cases {
            assert!(parse_edge_list(c.as_bytes(), Path::new("mem")).is_err(), "{c:?}");
        }
    }
}

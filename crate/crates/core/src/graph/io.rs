//! On-disk dataset formats.
//!
//! * edges: one `src dst [weight]` per line, `#` starts a comment line
//! * features: headerless CSV, one row per node
//! * labels: one integer class id per line
//! * splits: `{"splits": [{"name", "train", "val", "test"}]}`

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DatasetBundle, Graph, Split};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetPaths {
    pub edges: PathBuf,
    pub features: PathBuf,
    pub labels: PathBuf,
    pub splits: PathBuf,
    /// Declared class count; inferred as `max(label) + 1` when absent.
    #[serde(default)]
    pub num_classes: Option<usize>,
}

impl DatasetPaths {
    /// Conventional file names inside one directory.
    pub fn in_dir(dir: impl AsRef<Path>) -> Self {
        let dir = dir.as_ref();
        Self {
            edges: dir.join("edges.txt"),
            features: dir.join("features.csv"),
            labels: dir.join("labels.txt"),
            splits: dir.join("splits.json"),
            num_classes: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SplitFile {
    splits: Vec<Split>,
}

pub(super) fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub(super) fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        message: message.into(),
    }
}

pub(super) fn read_splits(path: &Path) -> Result<Vec<Split>> {
    let file: SplitFile =
        serde_json::from_str(&read(path)?).map_err(|e| parse_err(path, e.line(), e.to_string()))?;
    Ok(file.splits)
}

fn parse_edges(path: &Path) -> Result<Vec<(usize, usize, f64)>> {
    let text = read(path)?;
    let mut edges = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if !(2..=3).contains(&tokens.len()) {
            return Err(parse_err(
                path,
                no + 1,
                format!("expected 2 or 3 fields, found {}", tokens.len()),
            ));
        }
        let node = |t: &str| {
            t.parse::<usize>()
                .map_err(|_| parse_err(path, no + 1, format!("bad node id '{t}'")))
        };
        let weight = match tokens.get(2) {
            Some(t) => t
                .parse::<f64>()
                .map_err(|_| parse_err(path, no + 1, format!("bad weight '{t}'")))?,
            None => 1.0,
        };
        edges.push((node(tokens[0])?, node(tokens[1])?, weight));
    }
    Ok(edges)
}

fn parse_features(path: &Path) -> Result<DenseMatrix> {
    let text = read(path)?;
    let mut data = Vec::new();
    let mut rows = 0;
    let mut cols = None;
    for (no, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let start = data.len();
        for field in line.split(',') {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| parse_err(path, no + 1, format!("bad number '{}'", field.trim())))?;
            if !v.is_finite() {
                return Err(parse_err(path, no + 1, "non-finite feature value"));
            }
            data.push(v);
        }
        let width = data.len() - start;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(parse_err(
                    path,
                    no + 1,
                    format!("{width} columns, expected {c}"),
                ))
            }
            _ => {}
        }
        rows += 1;
    }
    DenseMatrix::from_vec(rows, cols.unwrap_or(0), data)
}

fn parse_labels(path: &Path) -> Result<Vec<usize>> {
    let text = read(path)?;
    let mut labels = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v: i64 = t
            .parse()
            .map_err(|_| parse_err(path, no + 1, format!("bad label '{t}'")))?;
        if v < 0 {
            return Err(Error::Validation(format!(
                "{}:{}: label {v} is negative",
                path.display(),
                no + 1
            )));
        }
        labels.push(v as usize);
    }
    Ok(labels)
}

/// Loads and validates a dataset. Reversed and repeated edges collapse to one undirected edge;
/// self-loops are dropped with a warning.
pub fn load_dataset(paths: &DatasetPaths) -> Result<DatasetBundle> {
    let labels = parse_labels(&paths.labels)?;
    let features = parse_features(&paths.features)?;
    let raw_edges = parse_edges(&paths.edges)?;
    let splits = read_splits(&paths.splits)?;

    let n = labels.len();
    let (graph, cleanup) = Graph::from_edges(n, raw_edges)?;
    if cleanup.self_loops > 0 {
        log::warn!(
            "{}: dropped {} self-loop(s)",
            paths.edges.display(),
            cleanup.self_loops
        );
    }
    let inferred = labels.iter().max().map_or(0, |&m| m + 1);
    let num_classes = match paths.num_classes {
        Some(c) => c,
        None => inferred,
    };
    DatasetBundle::new(graph, features, labels, splits, num_classes)
}

fn write(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Writes a bundle in the formats read by [`load_dataset`]. Floats use the shortest
/// representation that parses back to the same bits.
pub fn save_dataset(bundle: &DatasetBundle, dir: &Path) -> Result<DatasetPaths> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut paths = DatasetPaths::in_dir(dir);
    paths.num_classes = Some(bundle.num_classes);

    let weighted = bundle.graph.is_weighted();
    let mut edges = String::new();
    for &(u, v, w) in bundle.graph.edges() {
        if weighted {
            writeln!(edges, "{u} {v} {w:?}").unwrap();
        } else {
            writeln!(edges, "{u} {v}").unwrap();
        }
    }
    write(&paths.edges, &edges)?;

    let mut features = String::new();
    for i in 0..bundle.features.rows() {
        let row: Vec<String> = bundle.features.row(i).iter().map(|v| format!("{v:?}")).collect();
        features.push_str(&row.join(","));
        features.push('\n');
    }
    write(&paths.features, &features)?;

    let labels: String = bundle.labels.iter().map(|c| format!("{c}\n")).collect();
    write(&paths.labels, &labels)?;

    let splits = SplitFile {
        splits: bundle.splits.clone(),
    };
    write(&paths.splits, &serde_json::to_string(&splits)?)?;
    Ok(paths)
}

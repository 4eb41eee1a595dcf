//! Reader for the Geom-GCN benchmark layout:
//!
//! * `out1_graph_edges.txt`: header line, then `src<TAB>dst`
//! * `out1_node_feature_label.txt`: header line, then `id<TAB>f1,f2,...<TAB>label`
//! * `<name>_split_<train>_<val>_<i>.npz` holding `train_mask`, `val_mask`, `test_mask`
//!
//! A `splits.json` in the directory takes precedence over the `.npz` files.

use std::fs::{self, File};
use std::io::Read;
use std::path::{Path, PathBuf};

use super::io::{parse_err, read, read_splits};
use super::{DatasetBundle, Graph, Split};
use crate::error::{Error, Result};
use crate::numerics::DenseMatrix;

pub fn load_geom_gcn(dir: &Path) -> Result<DatasetBundle> {
    let edge_path = dir.join("out1_graph_edges.txt");
    let node_path = dir.join("out1_node_feature_label.txt");

    let text = read(&node_path)?;
    let mut rows: Vec<(usize, Vec<f64>, usize)> = Vec::new();
    for (no, line) in text.lines().enumerate().skip(1) {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split('\t').collect();
        if parts.len() != 3 {
            return Err(parse_err(&node_path, no + 1, "expected id, features and label"));
        }
        let id = parts[0]
            .trim()
            .parse()
            .map_err(|_| parse_err(&node_path, no + 1, "bad node id"))?;
        let feats = parts[1]
            .split(',')
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| parse_err(&node_path, no + 1, "bad feature value"))?;
        let label = parts[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(&node_path, no + 1, "bad label"))?;
        rows.push((id, feats, label));
    }
    rows.sort_by_key(|r| r.0);
    let n = rows.len();
    if rows.iter().enumerate().any(|(i, r)| r.0 != i) {
        return Err(Error::Validation(format!(
            "{}: node ids must be 0..{n} without gaps",
            node_path.display()
        )));
    }
    let dim = rows.first().map_or(0, |r| r.1.len());
    if let Some(r) = rows.iter().find(|r| r.1.len() != dim) {
        return Err(Error::Validation(format!(
            "node {} has {} features, expected {dim}",
            r.0,
            r.1.len()
        )));
    }
    let labels: Vec<usize> = rows.iter().map(|r| r.2).collect();
    let features = DenseMatrix::from_vec(n, dim, rows.into_iter().flat_map(|r| r.1).collect())?;

    let text = read(&edge_path)?;
    let mut edges = Vec::new();
    for (no, line) in text.lines().enumerate().skip(1) {
        let mut it = line.split_whitespace();
        let (Some(u), Some(v)) = (it.next(), it.next()) else {
            continue;
        };
        let parse = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| parse_err(&edge_path, no + 1, format!("bad node id {s:?}")))
        };
        edges.push((parse(u)?, parse(v)?, 1.0));
    }
    let (graph, cleanup) = Graph::from_edges(n, edges)?;
    if cleanup.self_loops > 0 {
        log::warn!("{}: dropped {} self-loops", edge_path.display(), cleanup.self_loops);
    }

    let json = dir.join("splits.json");
    let splits = if json.exists() {
        read_splits(&json)?
    } else {
        npz_splits(dir)?
    };
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    DatasetBundle::new(graph, features, labels, splits, classes)
}

fn npz_splits(dir: &Path) -> Result<Vec<Split>> {
    let mut files: Vec<(usize, PathBuf)> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "npz"))
        .filter_map(|p| {
            let stem = p.file_stem()?.to_str()?;
            let idx = stem.rsplit('_').next()?.parse().ok()?;
            stem.contains("_split_").then_some((idx, p))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Validation(format!("{}: no split files found", dir.display())));
    }
    files
        .into_iter()
        .map(|(i, path)| {
            let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
            let mut archive =
                zip::ZipArchive::new(file).map_err(|e| parse_err(&path, 0, e.to_string()))?;
            let mut mask = |name: &str| -> Result<Vec<usize>> {
                let mut entry = archive
                    .by_name(&format!("{name}.npy"))
                    .map_err(|e| parse_err(&path, 0, format!("{name}: {e}")))?;
                let mut bytes = Vec::new();
                entry.read_to_end(&mut bytes).map_err(|e| Error::io(&path, e))?;
                let values = parse_npy_mask(&bytes).map_err(|m| parse_err(&path, 0, format!("{name}: {m}")))?;
                Ok(values.iter().enumerate().filter(|v| *v.1).map(|v| v.0).collect())
            };
            Ok(Split {
                name: format!("split_{i}"),
                train: mask("train_mask")?,
                val: mask("val_mask")?,
                test: mask("test_mask")?,
            })
        })
        .collect()
}

/// Decodes a 1-D `.npy` array of bools or integers as a boolean mask.
pub(crate) fn parse_npy_mask(bytes: &[u8]) -> std::result::Result<Vec<bool>, String> {
    if bytes.len() < 10 || &bytes[..6] != b"\x93NUMPY" {
        return Err("not an npy array".into());
    }
    let (header_len, start) = match bytes[6] {
        1 => (u16::from_le_bytes([bytes[8], bytes[9]]) as usize, 10),
        2 | 3 if bytes.len() >= 12 => (
            u32::from_le_bytes([bytes[8], bytes[9], bytes[10], bytes[11]]) as usize,
            12,
        ),
        v => return Err(format!("unsupported npy version {v}")),
    };
    let header = std::str::from_utf8(bytes.get(start..start + header_len).ok_or("truncated header")?)
        .map_err(|_| "header is not text")?;
    let descr = header
        .split("'descr':")
        .nth(1)
        .and_then(|s| s.split('\'').nth(1))
        .ok_or("missing descr")?;
    if header.contains("'fortran_order': True") {
        return Err("fortran order is not supported".into());
    }
    let width = match &descr[1..] {
        "b1" | "u1" | "i1" => 1,
        "i2" | "u2" => 2,
        "i4" | "u4" => 4,
        "i8" | "u8" => 8,
        other => return Err(format!("unsupported dtype {other}")),
    };
    if descr.starts_with('>') && width > 1 {
        return Err("big-endian arrays are not supported".into());
    }
    let data = &bytes[start + header_len..];
    if !data.len().is_multiple_of(width) {
        return Err("data length is not a multiple of the element size".into());
    }
    Ok(data.chunks(width).map(|c| c.iter().any(|&b| b != 0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn npy(descr: &str, data: &[u8]) -> Vec<u8> {
        let mut header = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': ({},), }}", data.len());
        while (10 + header.len() + 1) % 64 != 0 {
            header.push(' ');
        }
        header.push('\n');
        let mut out = b"\x93NUMPY\x01\x00".to_vec();
        out.extend_from_slice(&(header.len() as u16).to_le_bytes());
        out.extend_from_slice(header.as_bytes());
        out.extend_from_slice(data);
        out
    }

    #[test]
    fn npy_masks() {
        assert_eq!(parse_npy_mask(&npy("|b1", &[1, 0, 1])).unwrap(), vec![true, false, true]);
        let ints = npy("<i8", &[1, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(parse_npy_mask(&ints).unwrap(), vec![true, false]);
        assert!(parse_npy_mask(b"garbage!!!!").is_err());
        assert!(parse_npy_mask(&npy("<f8", &[0; 8])).is_err());
    }

    #[test]
    fn loads_directory() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("out1_node_feature_label.txt"),
            "node_id\tfeature\tlabel\n1\t0,1\t1\n0\t1,0\t0\n2\t1,1\t0\n",
        )
        .unwrap();
        fs::write(dir.path().join("out1_graph_edges.txt"), "node_id\tnode_id\n0\t1\n1\t0\n1\t2\n").unwrap();
        let mut zip = zip::ZipWriter::new(File::create(dir.path().join("toy_split_0.6_0.2_0.npz")).unwrap());
        let opts = zip::write::SimpleFileOptions::default().compression_method(zip::CompressionMethod::Stored);
        for (name, mask) in [("train_mask", [1u8, 1, 0]), ("val_mask", [0, 0, 0]), ("test_mask", [0, 0, 1])] {
            zip.start_file(format!("{name}.npy"), opts).unwrap();
            std::io::Write::write_all(&mut zip, &npy("|b1", &mask)).unwrap();
        }
        zip.finish().unwrap();

        let ds = load_geom_gcn(dir.path()).unwrap();
        assert_eq!(ds.labels, vec![0, 1, 0]);
        assert_eq!(ds.features.row(1), &[0.0, 1.0]);
        assert_eq!(ds.graph.num_edges(), 2);
        assert_eq!(ds.splits[0].train, vec![0, 1]);
        assert_eq!(ds.splits[0].test, vec![2]);
    }
}

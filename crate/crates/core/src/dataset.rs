//! On-disk dataset directories.
//!
//! A directory holds `meta.json`, `features.tsv` (one tab-separated row per
//! node), optional `labels.tsv` (one class id per line) and either
//! `edges.tsv` or, for multiplex graphs, one `edges.<layer>.tsv` per layer
//! named in `meta.json`. Edge files list two 0-based node ids per line. Blank
//! lines and lines starting with `#` are ignored everywhere.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{build_graph_shared, Adjacency, FeatureMatrix, SparseGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub name: String,
    pub num_nodes: usize,
    pub num_features: usize,
    /// 0 when the dataset has no labels.
    pub num_classes: usize,
    /// Layer names of a multiplex dataset; empty for a plain graph.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layers: Vec<String>,
}

/// A loaded dataset. `layers` has one entry for a plain graph; `graph` is the
/// union of all layers.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub graph: SparseGraph,
    pub layers: Vec<SparseGraph>,
}

impl Dataset {
    pub fn is_multiplex(&self) -> bool {
        !self.meta.layers.is_empty()
    }
}

fn format_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| format_err(path, 0, format!("cannot read: {e}")))
}

pub fn read_meta(dir: &Path) -> Result<DatasetMeta> {
    let path = dir.join("meta.json");
    let text = read_text(&path)?;
    serde_json::from_str(&text).map_err(|e| format_err(&path, e.line(), e.to_string()))
}

pub fn read_edges(path: &Path, num_nodes: usize) -> Result<Vec<(usize, usize)>> {
    let text = read_text(path)?;
    content_lines(&text)
        .map(|(line, l)| {
            let fields: Vec<&str> = l.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(format_err(path, line, format!("expected 2 node ids, found {} fields", fields.len())));
            }
            let mut ids = [0usize; 2];
            for (slot, f) in ids.iter_mut().zip(&fields) {
                *slot = f
                    .parse()
                    .map_err(|_| format_err(path, line, format!("`{f}` is not a node id")))?;
                if *slot >= num_nodes {
                    return Err(format_err(path, line, format!("node {slot} out of range for {num_nodes} nodes")));
                }
            }
            Ok((ids[0], ids[1]))
        })
        .collect()
}

pub fn read_features(path: &Path, num_nodes: usize, num_features: usize) -> Result<Array2<f32>> {
    let text = read_text(path)?;
    let mut values = Vec::with_capacity(num_nodes * num_features);
    let mut rows = 0;
    for (line, l) in content_lines(&text) {
        let before = values.len();
        for f in l.split('\t') {
            let v: f32 = f
                .trim()
                .parse()
                .map_err(|_| format_err(path, line, format!("`{f}` is not a real number")))?;
            if !v.is_finite() {
                return Err(format_err(path, line, "non-finite feature value"));
            }
            values.push(v);
        }
        let width = values.len() - before;
        if width != num_features {
            return Err(format_err(path, line, format!("ragged row: {width} values, expected {num_features}")));
        }
        rows += 1;
    }
    if rows != num_nodes {
        return Err(format_err(path, 0, format!("{rows} feature rows for {num_nodes} nodes")));
    }
    Ok(Array2::from_shape_vec((num_nodes, num_features), values).expect("row widths checked"))
}

pub fn read_labels(path: &Path, num_nodes: usize, num_classes: usize) -> Result<Vec<usize>> {
    let text = read_text(path)?;
    let labels = content_lines(&text)
        .map(|(line, l)| {
            let c: usize = l
                .parse()
                .map_err(|_| format_err(path, line, format!("`{l}` is not a class id")))?;
            if c >= num_classes {
                return Err(format_err(path, line, format!("class {c} but meta declares {num_classes} classes")));
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>>>()?;
    if labels.len() != num_nodes {
        return Err(format_err(path, 0, format!("{} labels for {num_nodes} nodes", labels.len())));
    }
    Ok(labels)
}

fn edge_files(dir: &Path, meta: &DatasetMeta) -> Vec<PathBuf> {
    if meta.layers.is_empty() {
        vec![dir.join("edges.tsv")]
    } else {
        meta.layers.iter().map(|l| dir.join(format!("edges.{l}.tsv"))).collect()
    }
}

pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let meta = read_meta(dir)?;
    let features = Arc::new(FeatureMatrix::new(read_features(
        &dir.join("features.tsv"),
        meta.num_nodes,
        meta.num_features,
    )?));
    let label_path = dir.join("labels.tsv");
    let labels = if label_path.exists() {
        Some(read_labels(&label_path, meta.num_nodes, meta.num_classes)?)
    } else {
        None
    };
    let mut layers = Vec::new();
    let mut all_edges = Vec::new();
    for path in edge_files(dir, &meta) {
        let edges = read_edges(&path, meta.num_nodes)?;
        layers.push(build_graph_shared(meta.num_nodes, &edges, features.clone(), labels.clone())?);
        all_edges.extend(edges);
    }
    let graph = if layers.len() == 1 {
        layers[0].clone()
    } else {
        layers[0].with_adjacency(Adjacency::from_edges(meta.num_nodes, &all_edges)?)?
    };
    Ok(Dataset { meta, graph, layers })
}

/// Every problem found in a dataset directory, at most one per file.
pub fn validate_dataset(dir: &Path) -> (Option<DatasetMeta>, Vec<Error>) {
    let meta = match read_meta(dir) {
        Ok(m) => m,
        Err(e) => return (None, vec![e]),
    };
    let mut problems = Vec::new();
    if let Err(e) = read_features(&dir.join("features.tsv"), meta.num_nodes, meta.num_features) {
        problems.push(e);
    }
    let label_path = dir.join("labels.tsv");
    if label_path.exists() {
        if let Err(e) = read_labels(&label_path, meta.num_nodes, meta.num_classes) {
            problems.push(e);
        }
    }
    for path in edge_files(dir, &meta) {
        if let Err(e) = read_edges(&path, meta.num_nodes) {
            problems.push(e);
        }
    }
    (Some(meta), problems)
}

fn write_edges(path: &Path, adjacency: &Adjacency) -> Result<()> {
    let mut out = String::new();
    for (i, j) in adjacency.undirected_edges() {
        writeln!(out, "{i}\t{j}").expect("write to string");
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Write `graph` (and extra multiplex layers, keyed by name) as a dataset
/// directory.
pub fn write_dataset(dir: &Path, name: &str, graph: &SparseGraph, layers: &BTreeMap<String, Adjacency>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let meta = DatasetMeta {
        name: name.to_string(),
        num_nodes: graph.num_nodes(),
        num_features: graph.num_features(),
        num_classes: graph.num_classes(),
        layers: layers.keys().cloned().collect(),
    };
    std::fs::write(dir.join("meta.json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    let mut feats = String::new();
    for row in graph.features().dense().rows() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        feats.push_str(&cells.join("\t"));
        feats.push('\n');
    }
    std::fs::write(dir.join("features.tsv"), feats)?;
    if let Some(labels) = graph.labels() {
        let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
        std::fs::write(dir.join("labels.tsv"), text)?;
    }
    if layers.is_empty() {
        write_edges(&dir.join("edges.tsv"), graph.adjacency())?;
    } else {
        for (layer, adj) in layers {
            write_edges(&dir.join(format!("edges.{layer}.tsv")), adj)?;
        }
    }
    Ok(())
}

/// Convert the classic `cora.content` / `cora.cites` pair into a graph.
///
/// Content lines are `paper_id word_0 .. word_{F-1} class_name`; node ids
/// follow content order and classes are numbered by sorted name. Citations
/// that mention unknown papers are skipped.
pub fn import_cora(content: &Path, cites: &Path) -> Result<SparseGraph> {
    let text = read_text(content)?;
    let mut ids = BTreeMap::new();
    let mut rows: Vec<Vec<f32>> = Vec::new();
    let mut class_names = Vec::new();
    for (line, l) in content_lines(&text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() < 3 {
            return Err(format_err(content, line, "expected id, features and class"));
        }
        let feats = fields[1..fields.len() - 1]
            .iter()
            .map(|f| f.parse::<f32>().map_err(|_| format_err(content, line, format!("bad feature `{f}`"))))
            .collect::<Result<Vec<_>>>()?;
        if rows.first().is_some_and(|r| r.len() != feats.len()) {
            return Err(format_err(content, line, "ragged feature row"));
        }
        if ids.insert(fields[0].to_string(), rows.len()).is_some() {
            return Err(format_err(content, line, format!("duplicate paper id {}", fields[0])));
        }
        rows.push(feats);
        class_names.push(fields[fields.len() - 1].to_string());
    }
    let mut classes: Vec<&String> = class_names.iter().collect();
    classes.sort();
    classes.dedup();
    let labels: Vec<usize> = class_names
        .iter()
        .map(|c| classes.binary_search(&c).expect("class present"))
        .collect();

    let text = read_text(cites)?;
    let mut edges = Vec::new();
    for (line, l) in content_lines(&text) {
        let fields: Vec<&str> = l.split_whitespace().collect();
        if fields.len() != 2 {
            return Err(format_err(cites, line, "expected two paper ids"));
        }
        if let (Some(&a), Some(&b)) = (ids.get(fields[0]), ids.get(fields[1])) {
            edges.push((a, b));
        }
    }
    let n = rows.len();
    let width = rows.first().map_or(0, Vec::len);
    let x = Array2::from_shape_vec((n, width), rows.concat()).expect("rows share a width");
    crate::graph::build_graph(n, &edges, x, Some(labels))
}

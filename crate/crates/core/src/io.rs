//! Ingestion of weighted edge lists and dataset manifests, censoring of
//! weighted digraphs into binary graphs, and CSV/JSON record files.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{Error, Result};
use crate::graph_model::AdjacencyMatrix;

pub const MANIFEST_FORMAT_VERSION: u64 = 1;
pub const DEFAULT_PERCENTILE: f64 = 25.0;

#[derive(Debug, Clone, PartialEq)]
pub struct WeightedDigraph {
    node_count: usize,
    edges: Vec<(usize, usize, f64)>,
    dropped_self_loops: usize,
}

impl WeightedDigraph {
    /// Self-loops are dropped and counted; parallel arcs and non-finite
    /// weights are rejected.
    pub fn new(node_count: usize, arcs: Vec<(usize, usize, f64)>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(arcs.len());
        let mut edges = Vec::with_capacity(arcs.len());
        let mut dropped = 0;
        for (src, dst, w) in arcs {
            if src >= node_count || dst >= node_count {
                return Err(Error::argument(format!(
                    "arc ({src}, {dst}) out of range for {node_count} nodes"
                )));
            }
            if !w.is_finite() {
                return Err(Error::argument(format!("arc ({src}, {dst}) has weight {w}")));
            }
            if !seen.insert((src, dst)) {
                return Err(Error::argument(format!("duplicate arc ({src}, {dst})")));
            }
            if src == dst {
                dropped += 1;
            } else {
                edges.push((src, dst, w));
            }
        }
        Ok(Self {
            node_count,
            edges,
            dropped_self_loops: dropped,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn dropped_self_loops(&self) -> usize {
        self.dropped_self_loops
    }

    /// `|w|` for every arc with `w != 0`.
    pub fn nonzero_abs_weights(&self) -> Vec<f64> {
        self.edges
            .iter()
            .filter(|e| e.2 != 0.0)
            .map(|e| e.2.abs())
            .collect()
    }
}

fn parse_field<T: std::str::FromStr>(rec: &csv::StringRecord, i: usize, name: &str, path: &Path, line: usize) -> Result<T> {
    let raw = rec.get(i).ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("missing `{name}` column"),
    })?;
    raw.trim().parse().map_err(|_| Error::Parse {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse `{name}` from `{raw}`"),
    })
}

/// Reads a CSV with header `src,dst,weight` and zero-based node ids.
pub fn load_weighted_edge_list(path: impl AsRef<Path>, node_count: usize) -> Result<WeightedDigraph> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(File::open(path).map_err(|e| Error::file(path, e))?);
    let header = rdr.headers()?.clone();
    let names: Vec<&str> = header.iter().collect();
    if names != ["src", "dst", "weight"] {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `src,dst,weight`, found `{}`", names.join(",")),
        });
    }

    let mut arcs = Vec::new();
    let mut seen = HashSet::new();
    let mut self_loops = 0;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let src: usize = parse_field(&rec, 0, "src", path, line)?;
        let dst: usize = parse_field(&rec, 1, "dst", path, line)?;
        let w: f64 = parse_field(&rec, 2, "weight", path, line)?;
        let fail = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if src >= node_count || dst >= node_count {
            return Err(fail(format!(
                "node id out of range: ({src}, {dst}) with node_count = {node_count}"
            )));
        }
        if !w.is_finite() {
            return Err(fail(format!("weight {w} is not finite")));
        }
        if !seen.insert((src, dst)) {
            return Err(fail(format!("duplicate arc ({src}, {dst})")));
        }
        if src == dst {
            self_loops += 1;
        }
        arcs.push((src, dst, w));
    }
    if self_loops > 0 {
        log::info!("{}: dropped {self_loops} self-loop(s)", path.display());
    }
    WeightedDigraph::new(node_count, arcs)
}

pub fn write_weighted_edge_list(g: &WeightedDigraph, path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["src", "dst", "weight"])?;
    for &(s, d, x) in g.edges() {
        w.write_record([s.to_string(), d.to_string(), x.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// How reciprocal arcs are merged into one undirected weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Symmetrize {
    /// `max(|w(i->j)|, |w(j->i)|)`
    #[default]
    Max,
    /// `|w(i->j)| + |w(j->i)|`
    Sum,
    /// Mean of the absolute weights of the arcs that exist.
    Mean,
}

impl std::str::FromStr for Symmetrize {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Symmetrize::Max),
            "sum" => Ok(Symmetrize::Sum),
            "mean" => Ok(Symmetrize::Mean),
            other => Err(Error::argument(format!("unknown symmetrization rule `{other}`"))),
        }
    }
}

/// Linear-interpolation percentile (`p` in `[0, 100]`) of a non-empty sample:
/// position `p/100 * (m - 1)` between the sorted order statistics.
pub fn percentile(values: &[f64], p: f64) -> Result<f64> {
    if !(0.0..=100.0).contains(&p) {
        return Err(Error::Range {
            what: "percentile",
            value: p,
            lo: 0.0,
            hi: 100.0,
        });
    }
    if values.is_empty() {
        return Err(Error::DegenerateInput("percentile of an empty sample".into()));
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

/// Per-graph censoring threshold.
pub fn censor_threshold(g: &WeightedDigraph, p: f64) -> Result<f64> {
    let w = g.nonzero_abs_weights();
    if w.is_empty() {
        return Err(Error::DegenerateInput("every edge weight is zero".into()));
    }
    percentile(&w, p)
}

/// Threshold computed from the nonzero weights of all graphs together.
pub fn pooled_threshold(graphs: &[WeightedDigraph], p: f64) -> Result<f64> {
    let w: Vec<f64> = graphs.iter().flat_map(|g| g.nonzero_abs_weights()).collect();
    if w.is_empty() {
        return Err(Error::DegenerateInput("every edge weight is zero".into()));
    }
    percentile(&w, p)
}

/// Symmetrize with `rule`, then keep an edge iff its weight exceeds `tau`.
pub fn binarize_at(g: &WeightedDigraph, tau: f64, rule: Symmetrize) -> AdjacencyMatrix {
    let n = g.node_count();
    // (sum of |w|, max |w|, arc count) per unordered pair
    let mut acc = std::collections::HashMap::<(usize, usize), (f64, f64, u8)>::new();
    for &(s, d, w) in g.edges() {
        let key = (s.min(d), s.max(d));
        let e = acc.entry(key).or_insert((0.0, 0.0, 0));
        e.0 += w.abs();
        e.1 = e.1.max(w.abs());
        e.2 += 1;
    }
    let mut a = AdjacencyMatrix::empty(n);
    for ((i, j), (sum, max, count)) in acc {
        let weight = match rule {
            Symmetrize::Max => max,
            Symmetrize::Sum => sum,
            Symmetrize::Mean => sum / count as f64,
        };
        if weight > tau {
            a.set(i, j, true);
        }
    }
    a
}

/// Censor and binarize one graph with its own percentile threshold.
pub fn censor_binarize(g: &WeightedDigraph, p: f64) -> Result<AdjacencyMatrix> {
    censor_binarize_with(g, p, Symmetrize::Max)
}

pub fn censor_binarize_with(g: &WeightedDigraph, p: f64, rule: Symmetrize) -> Result<AdjacencyMatrix> {
    let tau = censor_threshold(g, p)?;
    Ok(binarize_at(g, tau, rule))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CensorOptions {
    pub percentile: f64,
    pub symmetrize: Symmetrize,
    /// One threshold for the whole collection instead of one per graph.
    pub pooled: bool,
}

impl Default for CensorOptions {
    fn default() -> Self {
        Self {
            percentile: DEFAULT_PERCENTILE,
            symmetrize: Symmetrize::Max,
            pooled: false,
        }
    }
}

pub fn censor_collection(graphs: &[WeightedDigraph], opts: &CensorOptions) -> Result<Vec<AdjacencyMatrix>> {
    if opts.pooled {
        let tau = pooled_threshold(graphs, opts.percentile)?;
        Ok(graphs.iter().map(|g| binarize_at(g, tau, opts.symmetrize)).collect())
    } else {
        graphs
            .iter()
            .map(|g| censor_binarize_with(g, opts.percentile, opts.symmetrize))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesEntry {
    /// Edge-list files in time order, relative to the manifest's directory.
    pub graphs: Vec<PathBuf>,
    pub response: f64,
}

/// JSON description of a dataset: one time series of weighted digraphs per
/// subject and one scalar response per series.
///
/// ```json
/// {
///   "format_version": 1,
///   "node_count": 20,
///   "series": [ { "graphs": ["s0/g0.csv", "s0/g1.csv"], "response": 1.5 } ]
/// }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u64,
    pub node_count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    pub series: Vec<SeriesEntry>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn series_length(&self) -> usize {
        self.series.first().map_or(0, |s| s.graphs.len())
    }

    pub fn responses(&self) -> Vec<f64> {
        self.series.iter().map(|s| s.response).collect()
    }

    /// Path of the `position`-th (1-based) graph of every series.
    pub fn graphs_at(&self, position: usize) -> Result<Vec<PathBuf>> {
        let len = self.series_length();
        if position == 0 || position > len {
            return Err(Error::argument(format!(
                "position {position} outside the series range 1..={len}"
            )));
        }
        Ok(self
            .series
            .iter()
            .map(|s| self.root.join(&s.graphs[position - 1]))
            .collect())
    }

    /// Loads and censors the `position`-th graph of every series.
    pub fn load_position(&self, position: usize, opts: &CensorOptions) -> Result<Vec<AdjacencyMatrix>> {
        let paths = self.graphs_at(position)?;
        let n = self.node_count;
        let graphs = crate::par::try_map(&paths, |p| load_weighted_edge_list(p, n))?;
        censor_collection(&graphs, opts)
    }

    pub fn validate(&self) -> Result<()> {
        let v = serde_json::to_value(self)?;
        validate_manifest_value(&v)
    }
}

fn expect_key<'a>(obj: &'a serde_json::Map<String, Value>, key: &str, path: &str) -> Result<&'a Value> {
    obj.get(key)
        .ok_or_else(|| Error::validation(join(path, key), "missing required field"))
}

fn join(path: &str, key: &str) -> String {
    if path.is_empty() {
        key.to_string()
    } else {
        format!("{path}.{key}")
    }
}

fn validate_manifest_value(v: &Value) -> Result<()> {
    let obj = v
        .as_object()
        .ok_or_else(|| Error::validation("$", "manifest must be a JSON object"))?;
    for key in obj.keys() {
        if !matches!(key.as_str(), "format_version" | "node_count" | "series" | "description") {
            return Err(Error::validation(key.clone(), "unknown field"));
        }
    }
    let version = expect_key(obj, "format_version", "")?;
    if version.as_u64() != Some(MANIFEST_FORMAT_VERSION) {
        return Err(Error::validation(
            "format_version",
            format!("expected {MANIFEST_FORMAT_VERSION}, found {version}"),
        ));
    }
    let nodes = expect_key(obj, "node_count", "")?;
    if !matches!(nodes.as_u64(), Some(n) if n >= 1) {
        return Err(Error::validation("node_count", "must be a positive integer"));
    }
    if let Some(desc) = obj.get("description") {
        if !desc.is_string() {
            return Err(Error::validation("description", "must be a string"));
        }
    }
    let series = expect_key(obj, "series", "")?
        .as_array()
        .ok_or_else(|| Error::validation("series", "must be an array"))?;
    if series.is_empty() {
        return Err(Error::validation("series", "must contain at least one series"));
    }
    let mut expected_len = None;
    for (i, entry) in series.iter().enumerate() {
        let here = format!("series[{i}]");
        let e = entry
            .as_object()
            .ok_or_else(|| Error::validation(here.clone(), "must be an object"))?;
        for key in e.keys() {
            if key != "graphs" && key != "response" {
                return Err(Error::validation(join(&here, key), "unknown field"));
            }
        }
        let gpath = join(&here, "graphs");
        let graphs = expect_key(e, "graphs", &here)?
            .as_array()
            .ok_or_else(|| Error::validation(gpath.clone(), "must be an array of paths"))?;
        if graphs.is_empty() {
            return Err(Error::validation(gpath, "must list at least one graph"));
        }
        for (j, g) in graphs.iter().enumerate() {
            if !g.is_string() {
                return Err(Error::validation(format!("{gpath}[{j}]"), "must be a path string"));
            }
        }
        match expected_len {
            None => expected_len = Some(graphs.len()),
            Some(len) if len != graphs.len() => {
                return Err(Error::validation(
                    gpath,
                    format!("series length {} differs from series[0] length {len}", graphs.len()),
                ));
            }
            Some(_) => {}
        }
        let response = expect_key(e, "response", &here)?;
        if !matches!(response.as_f64(), Some(y) if y.is_finite()) {
            return Err(Error::validation(join(&here, "response"), "must be a finite number"));
        }
    }
    Ok(())
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    let value: Value = serde_json::from_str(&text)?;
    validate_manifest_value(&value)?;
    let mut m: DatasetManifest = serde_json::from_value(value)?;
    m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    Ok(m)
}

pub fn write_manifest(m: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    m.validate()?;
    write_json(m, path)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

/// A row type with a fixed, documented column order.
pub trait CsvRecord: Serialize + DeserializeOwned {
    const HEADER: &'static [&'static str];
}

/// One Monte Carlo replicate of the prediction-consistency experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    #[serde(rename = "K")]
    pub k: usize,
    pub replicate: usize,
    pub seed: u64,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n_star: usize,
    pub lambda: f64,
    /// Empty for invalid replicates.
    pub sq_gap: Option<f64>,
    pub valid: bool,
}

impl CsvRecord for ReplicateRecord {
    const HEADER: &'static [&'static str] = &["K", "replicate", "seed", "n", "N", "n_star", "lambda", "sq_gap", "valid"];
}

/// One Monte Carlo replicate of the power experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerRecord {
    #[serde(rename = "K")]
    pub k: usize,
    pub replicate: usize,
    pub seed: u64,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n_star: usize,
    pub lambda: f64,
    /// Squared gap between the fitted values at the last labeled graph.
    pub sq_gap: Option<f64>,
    pub valid: bool,
    pub f_true: Option<f64>,
    pub f_hat: Option<f64>,
    pub reject_true: Option<bool>,
    pub reject_hat: Option<bool>,
}

impl CsvRecord for PowerRecord {
    const HEADER: &'static [&'static str] = &[
        "K",
        "replicate",
        "seed",
        "n",
        "N",
        "n_star",
        "lambda",
        "sq_gap",
        "valid",
        "f_true",
        "f_hat",
        "reject_true",
        "reject_hat",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRecord {
    pub index: usize,
    pub z_hat: f64,
    pub response: Option<f64>,
}

impl CsvRecord for EmbeddingRecord {
    const HEADER: &'static [&'static str] = &["index", "z_hat", "response"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConsistencySummary {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n_star: usize,
    pub lambda: f64,
    pub replicates: usize,
    pub valid: usize,
    pub mean_sq_gap: Option<f64>,
    pub median_sq_gap: Option<f64>,
}

impl CsvRecord for ConsistencySummary {
    const HEADER: &'static [&'static str] = &[
        "K",
        "n",
        "N",
        "n_star",
        "lambda",
        "replicates",
        "valid",
        "mean_sq_gap",
        "median_sq_gap",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSummary {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n_star: usize,
    pub lambda: f64,
    pub replicates: usize,
    pub valid: usize,
    pub pi_true: Option<f64>,
    pub pi_hat: Option<f64>,
    pub abs_diff: Option<f64>,
    /// Binomial standard errors `sqrt(p (1 - p) / valid)`.
    pub se_true: Option<f64>,
    pub se_hat: Option<f64>,
}

impl CsvRecord for PowerSummary {
    const HEADER: &'static [&'static str] = &[
        "K",
        "n",
        "N",
        "n_star",
        "lambda",
        "replicates",
        "valid",
        "pi_true",
        "pi_hat",
        "abs_diff",
        "se_true",
        "se_hat",
    ];
}

/// Entries of the estimated score matrices, one row per `(graph, i, j)`
/// with `i <= j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub graph: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

impl CsvRecord for ScoreRecord {
    const HEADER: &'static [&'static str] = &["graph", "i", "j", "value"];
}

/// Writes the header unconditionally, so an empty slice yields a
/// header-only file.
pub fn emit_csv<T: CsvRecord>(records: &[T], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path)?;
    w.write_record(T::HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn load_csv<T: CsvRecord>(path: impl AsRef<Path>) -> Result<Vec<T>> {
    let path = path.as_ref();
    let mut rdr = csv::Reader::from_reader(File::open(path).map_err(|e| Error::file(path, e))?);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != T::HEADER {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header `{}`, found `{}`", T::HEADER.join(","), header.join(",")),
        });
    }
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        out.push(rec?);
    }
    Ok(out)
}

//! Synthetic weighted-digraph datasets with a known latent position per
//! series, written in the on-disk manifest layout.

use std::path::{Path, PathBuf};

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::graph_model::{balanced_membership, build_block_probability, probability_matrix, sample_adjacency, Curve};
use crate::io::{self, DatasetManifest, SeriesEntry, WeightedDigraph, MANIFEST_FORMAT_VERSION};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub series: usize,
    /// Graphs per series.
    pub length: usize,
    pub node_count: usize,
    pub variant: Curve,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Probability of a weak spurious arc between non-adjacent nodes.
    pub noise_arc_rate: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            series: 10,
            length: 3,
            node_count: 60,
            variant: Curve::CurveA,
            alpha: 2.0,
            beta: 5.0,
            sigma: 0.1,
            noise_arc_rate: 0.05,
            seed: 7,
        }
    }
}

/// Latent positions, responses and the weighted digraphs of every series.
pub struct SyntheticDataset {
    pub ts: Vec<f64>,
    pub responses: Vec<f64>,
    pub graphs: Vec<Vec<WeightedDigraph>>,
}

/// Each series gets a latent `t ~ U(0.25, 1)`. Every graph in it is a
/// two-block sample at `B(t)`; sampled edges carry strong arcs
/// (|w| in [1, 3], random sign, reverse arc with probability 1/2) and a few
/// non-edges carry weak arcs (|w| < 0.3).
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    let n = spec.node_count;
    let z = balanced_membership(n, 2)?;
    let mut rng = seed::rng(spec.seed);
    let noise = Normal::new(0.0, spec.sigma.max(0.0)).map_err(|e| crate::Error::argument(e.to_string()))?;
    let mut ts = Vec::with_capacity(spec.series);
    let mut responses = Vec::with_capacity(spec.series);
    let mut graphs = Vec::with_capacity(spec.series);
    for i in 0..spec.series {
        let t = rng.random_range(0.25..1.0);
        ts.push(t);
        responses.push(spec.alpha + spec.beta * t + noise.sample(&mut rng));
        let p = probability_matrix(&z, &build_block_probability(t, spec.variant)?)?;
        let mut series = Vec::with_capacity(spec.length);
        for j in 0..spec.length {
            let a = sample_adjacency(&p, seed::mix64(spec.seed ^ seed::mix64(((i as u64) << 32) | j as u64)));
            let mut arcs = Vec::new();
            for u in 0..n {
                for v in (u + 1)..n {
                    if a.has_edge(u, v) {
                        let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                        arcs.push((u, v, sign * rng.random_range(1.0..3.0)));
                        if rng.random::<bool>() {
                            arcs.push((v, u, rng.random_range(0.5..3.0)));
                        }
                    } else if rng.random::<f64>() < spec.noise_arc_rate {
                        let (s, d) = if rng.random::<bool>() { (u, v) } else { (v, u) };
                        arcs.push((s, d, rng.random_range(0.01..0.3)));
                    }
                }
            }
            series.push(WeightedDigraph::new(n, arcs)?);
        }
        graphs.push(series);
    }
    Ok(SyntheticDataset { ts, responses, graphs })
}

/// Writes `series_<i>/graph_<j>.csv` files and `manifest.json` under `dir`
/// and returns the manifest path.
pub fn write_dataset(spec: &SyntheticSpec, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    let data = generate(spec)?;
    let mut series = Vec::with_capacity(spec.series);
    for (i, (graphs, &y)) in data.graphs.iter().zip(&data.responses).enumerate() {
        let sub = format!("series_{i:03}");
        std::fs::create_dir_all(dir.join(&sub))?;
        let mut paths = Vec::with_capacity(graphs.len());
        for (j, g) in graphs.iter().enumerate() {
            let rel = PathBuf::from(&sub).join(format!("graph_{j:03}.csv"));
            io::write_weighted_edge_list(g, dir.join(&rel))?;
            paths.push(rel);
        }
        series.push(SeriesEntry { graphs: paths, response: y });
    }
    let manifest = DatasetManifest {
        format_version: MANIFEST_FORMAT_VERSION,
        node_count: spec.node_count,
        description: Some(format!("synthetic two-block dataset, seed {}", spec.seed)),
        series,
        root: dir.to_path_buf(),
    };
    let path = dir.join("manifest.json");
    io::write_manifest(&manifest, &path)?;
    Ok(path)
}

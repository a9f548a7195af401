//! Browser bindings: each exported function takes plain numbers and
//! returns a JSON string for the page to draw.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::Serialize;
use wasm_bindgen::prelude::*;

use netresp::graph_model::{balanced_membership, build_block_probability, msbm_to_cosie, sample_collection, Curve};
use netresp::manifold::{isomap_1d_with, IsomapOptions, SmacofOptions};
use netresp::mase::{scaled_score_points, sparse_mase_with, MaseOptions};
use netresp::pipeline::{oracle_prediction, pred_graph_resp, PredictConfig};
use netresp::{seed, Error, Result};

fn curve(name: &str) -> Result<Curve> {
    name.parse()
}

fn draw_ts(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    (0..count).map(|_| rng.random_range(0.25..1.0)).collect()
}

/// Rotation-invariant summaries of one score matrix.
#[derive(Debug, Serialize)]
pub struct ScorePoint {
    pub t: f64,
    pub trace_hat: f64,
    pub norm_hat: f64,
    pub trace_true: f64,
    pub norm_true: f64,
}

#[derive(Debug, Serialize)]
pub struct ScoresView {
    pub rho_hat: f64,
    pub points: Vec<ScorePoint>,
}

/// Estimated versus population score matrices for `graphs` random
/// two-block graphs on `n` nodes.
pub fn scores_view(n: usize, graphs: usize, variant: &str, seed: u64) -> Result<ScoresView> {
    let variant = curve(variant)?;
    let ts = draw_ts(graphs, seed);
    let coll = sample_collection(&ts, n, variant, seed::mix64(seed))?;
    let mase = sparse_mase_with(coll.graphs(), &MaseOptions::new(2))?;
    let hat = scaled_score_points(&mase.scores, n);
    let z = balanced_membership(n, 2)?;
    let blocks = ts
        .iter()
        .map(|&t| build_block_probability(t, variant))
        .collect::<Result<Vec<_>>>()?;
    let truth = msbm_to_cosie(&z, &blocks)?.sparse_normalized().scaled_scores();
    let points = ts
        .iter()
        .zip(hat.iter().zip(&truth))
        .map(|(&t, (h, q))| {
            let m = h.to_matrix();
            ScorePoint {
                t,
                trace_hat: m.trace(),
                norm_hat: m.norm(),
                trace_true: q.trace(),
                norm_true: q.norm(),
            }
        })
        .collect();
    Ok(ScoresView {
        rho_hat: mase.rho_hat,
        points,
    })
}

#[derive(Debug, Serialize)]
pub struct EmbeddingView {
    pub ts: Vec<f64>,
    pub z_hat: Vec<f64>,
    /// Correlation between `z_hat` and the true `t`; the sign of the
    /// embedding is arbitrary.
    pub correlation: f64,
    pub stress: Vec<f64>,
}

/// 1-D isomap of the first `l` estimated score matrices.
pub fn embedding_view(n: usize, graphs: usize, lambda: f64, l: usize, seed: u64) -> Result<EmbeddingView> {
    let ts = draw_ts(graphs, seed);
    let coll = sample_collection(&ts, n, Curve::CurveA, seed::mix64(seed))?;
    let mase = sparse_mase_with(coll.graphs(), &MaseOptions::new(2))?;
    let pts = scaled_score_points(&mase.scores, n);
    let iso = isomap_1d_with(
        &pts,
        &IsomapOptions {
            lambda,
            l,
            smacof: SmacofOptions::default(),
        },
    )?;
    let z = iso.embedding.0;
    let ts = ts[..l].to_vec();
    Ok(EmbeddingView {
        correlation: pearson(&ts, &z),
        ts,
        z_hat: z,
        stress: iso.trace.values,
    })
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let m = a.len() as f64;
    let ma = a.iter().sum::<f64>() / m;
    let mb = b.iter().sum::<f64>() / m;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[derive(Debug, Serialize)]
pub struct PredictionView {
    pub ts: Vec<f64>,
    pub z_hat: Vec<f64>,
    pub ys: Vec<f64>,
    pub y_tilde: f64,
    pub y_oracle: f64,
    pub intercept: f64,
    pub slope: f64,
}

/// Predict the response of graph `l` from graphs `1..l-1` with
/// `y = 2 + 5 t + N(0, sigma^2)`.
pub fn prediction_view(n: usize, graphs: usize, lambda: f64, l: usize, sigma: f64, seed: u64) -> Result<PredictionView> {
    if l < 4 {
        return Err(Error::Argument("l must be at least 4".into()));
    }
    if !(sigma >= 0.0) {
        return Err(Error::Argument("sigma must be non-negative".into()));
    }
    let ts = draw_ts(graphs, seed);
    let mut rng = seed::rng(seed ^ 1);
    let noise = Normal::new(0.0, sigma).map_err(|e| Error::Argument(e.to_string()))?;
    let ys: Vec<f64> = ts[..l - 1]
        .iter()
        .map(|t| 2.0 + 5.0 * t + noise.sample(&mut rng))
        .collect();
    let coll = sample_collection(&ts, n, Curve::CurveA, seed::mix64(seed))?;
    let pred = pred_graph_resp(coll.graphs(), &ys, &PredictConfig::new(2, lambda, l, graphs, l))?;
    Ok(PredictionView {
        y_oracle: oracle_prediction(&ts, &ys, l)?,
        ts: ts[..l].to_vec(),
        z_hat: pred.embedding,
        ys,
        y_tilde: pred.y_tilde,
        intercept: pred.fit.intercept,
        slope: pred.fit.slope,
    })
}

fn to_js<T: Serialize>(r: Result<T>) -> std::result::Result<String, JsValue> {
    match r {
        Ok(v) => serde_json::to_string(&v).map_err(|e| JsValue::from_str(&e.to_string())),
        Err(e) => Err(JsValue::from_str(&e.to_string())),
    }
}

#[wasm_bindgen]
pub fn scores(n: usize, graphs: usize, variant: &str, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(scores_view(n, graphs, variant, seed as u64))
}

#[wasm_bindgen]
pub fn embed(n: usize, graphs: usize, lambda: f64, l: usize, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(embedding_view(n, graphs, lambda, l, seed as u64))
}

#[wasm_bindgen]
pub fn predict(n: usize, graphs: usize, lambda: f64, l: usize, sigma: f64, seed: u32) -> std::result::Result<String, JsValue> {
    to_js(prediction_view(n, graphs, lambda, l, sigma, seed as u64))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scores_track_the_population() {
        let v = scores_view(200, 8, "a", 3).unwrap();
        assert_eq!(v.points.len(), 8);
        for p in &v.points {
            assert!((p.trace_hat - p.trace_true).abs() < 0.1 * p.trace_true.abs() + 0.05, "{p:?}");
        }
        assert!(scores_view(20, 3, "c", 1).is_err());
    }

    #[test]
    fn embedding_orders_latent_positions() {
        let v = embedding_view(300, 15, 5.0, 8, 4).unwrap();
        assert_eq!(v.z_hat.len(), 8);
        assert!(v.correlation.abs() > 0.95, "{}", v.correlation);
    }

    #[test]
    fn prediction_is_close_to_oracle() {
        let v = prediction_view(300, 15, 5.0, 8, 0.01, 2).unwrap();
        assert!((v.y_tilde - v.y_oracle).abs() < 0.3, "{v:?}");
        assert!(prediction_view(300, 15, 5.0, 3, 0.01, 2).is_err());
        let json = to_js(prediction_view(100, 8, 5.0, 5, 0.0, 1)).unwrap();
        assert!(json.contains("\"y_tilde\""));
    }
}

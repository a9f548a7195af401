//! End-to-end response prediction, the two Monte Carlo studies and the
//! real-data analysis.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph_model::{sample_collection, Curve};
use crate::io::{
    self, CensorOptions, ConsistencySummary, EmbeddingRecord, PowerRecord, PowerSummary, ReplicateRecord, ScoreRecord,
};
use crate::linalg::SymmetricOperator;
use crate::manifold::{isomap_1d_with, IsomapOptions, SmacofOptions, StressTrace};
use crate::mase::{scaled_score_points, sparse_mase_with, MaseOptions, ScoreBasis, ScoreMatrix, Sparsity};
use crate::regression::{f_test, fit_local_linear, fit_slr, local_linear_r_squared, RegressionFit, TestReport};
use crate::seed;

pub const EXPERIMENT_FORMAT_VERSION: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictConfig {
    pub d: usize,
    pub lambda: f64,
    pub l: usize,
    pub n_star: usize,
    /// 1-based index of the graph whose response is predicted.
    pub r: usize,
    #[serde(default)]
    pub sparsity: Sparsity,
    #[serde(default)]
    pub basis: ScoreBasis,
    #[serde(default)]
    pub smacof: SmacofOptions,
}

impl PredictConfig {
    pub fn new(d: usize, lambda: f64, l: usize, n_star: usize, r: usize) -> Self {
        Self {
            d,
            lambda,
            l,
            n_star,
            r,
            sparsity: Sparsity::Estimate,
            basis: ScoreBasis::Joint,
            smacof: SmacofOptions::default(),
        }
    }

    pub fn mase_options(&self) -> MaseOptions {
        MaseOptions {
            d: self.d,
            sparsity: self.sparsity,
            basis: self.basis,
        }
    }

    fn check(&self, big_n: usize, s: usize) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::argument(format!("lambda = {} must be positive", self.lambda)));
        }
        if self.r == 0 || self.r > self.l {
            return Err(Error::argument(format!("r = {} must satisfy 1 <= r <= l = {}", self.r, self.l)));
        }
        if s > self.l {
            return Err(Error::argument(format!("{s} responses but only l = {} embedded graphs", self.l)));
        }
        if self.l > self.n_star {
            return Err(Error::argument(format!("l = {} exceeds N* = {}", self.l, self.n_star)));
        }
        if self.n_star > big_n {
            return Err(Error::argument(format!("N* = {} exceeds the {big_n} graphs", self.n_star)));
        }
        Ok(())
    }
}

/// Range of the off-diagonal shortest-path distances.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DissimilaritySummary {
    pub min: f64,
    pub max: f64,
    pub mean: f64,
}

impl DissimilaritySummary {
    fn of(m: &DMatrix<f64>) -> Self {
        let l = m.nrows();
        let mut min = f64::INFINITY;
        let mut max: f64 = 0.0;
        let mut sum = 0.0;
        let mut count = 0usize;
        for h in 0..l {
            for k in (h + 1)..l {
                let v = m[(h, k)];
                min = min.min(v);
                max = max.max(v);
                sum += v;
                count += 1;
            }
        }
        if count == 0 {
            min = 0.0;
        }
        Self {
            min,
            max,
            mean: if count > 0 { sum / count as f64 } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub rho_hat: f64,
    pub boundary_ties: usize,
    pub localization_edges: usize,
    pub init_stress: f64,
    pub trace: StressTrace,
    pub dissimilarity: DissimilaritySummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub y_tilde: f64,
    /// The `l` isomap outputs.
    pub embedding: Vec<f64>,
    pub fit: RegressionFit,
    pub diagnostics: Diagnostics,
}

/// Fit on the first `ys.len()` embedded values and predict at the `r`-th.
pub fn predict_from_embedding(z: &[f64], ys: &[f64], r: usize) -> Result<(f64, RegressionFit)> {
    if r == 0 || r > z.len() {
        return Err(Error::argument(format!("r = {r} outside 1..={}", z.len())));
    }
    if ys.len() > z.len() {
        return Err(Error::argument("more responses than embedded graphs"));
    }
    let fit = fit_slr(&z[..ys.len()], ys)?;
    Ok((fit.predict(z[r - 1]), fit))
}

/// Predict the response of graph `r` from the responses of the first
/// `responses.len()` graphs.
pub fn pred_graph_resp<S: SymmetricOperator>(graphs: &[S], responses: &[f64], cfg: &PredictConfig) -> Result<Prediction> {
    cfg.check(graphs.len(), responses.len())?;
    let mase = sparse_mase_with(graphs, &cfg.mase_options())?;
    let points = scaled_score_points(&mase.scores, graphs[0].dim());
    let iso = isomap_1d_with(
        &points[..cfg.n_star],
        &IsomapOptions {
            lambda: cfg.lambda,
            l: cfg.l,
            smacof: cfg.smacof,
        },
    )?;
    let z = iso.embedding.0;
    let (y_tilde, fit) = predict_from_embedding(&z, responses, cfg.r)?;
    Ok(Prediction {
        y_tilde,
        embedding: z,
        fit,
        diagnostics: Diagnostics {
            rho_hat: mase.rho_hat,
            boundary_ties: mase.boundary_ties,
            localization_edges: iso.edge_count,
            init_stress: iso.init_stress,
            trace: iso.trace,
            dissimilarity: DissimilaritySummary::of(iso.dissimilarity.as_matrix()),
        },
    })
}

/// Prediction at `ts[r - 1]` from a line fitted on the true regressors of
/// the first `ys.len()` graphs.
pub fn oracle_prediction(ts: &[f64], ys: &[f64], r: usize) -> Result<f64> {
    Ok(predict_from_embedding(ts, ys, r)?.0)
}

/// Per-`K` sizes: `n_K = n_base + n_step (K-1)`, `N_K = graphs_base +
/// graphs_step (K-1)`, `N*_K = floor(N_K^n_star_exponent)`,
/// `lambda_K = lambda_base * lambda_decay^(K-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub n_base: usize,
    pub n_step: usize,
    pub graphs_base: usize,
    pub graphs_step: usize,
    pub n_star_exponent: f64,
    pub lambda_base: f64,
    pub lambda_decay: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScheduleRow {
    #[serde(rename = "K")]
    pub k: usize,
    pub n: usize,
    #[serde(rename = "N")]
    pub big_n: usize,
    pub n_star: usize,
    pub lambda: f64,
}

impl Schedule {
    pub fn row(&self, k: usize) -> ScheduleRow {
        let step = k.saturating_sub(1);
        let big_n = self.graphs_base + self.graphs_step * step;
        ScheduleRow {
            k,
            n: self.n_base + self.n_step * step,
            big_n,
            // guard against 16^(3/4) = 7.999999...
            n_star: ((big_n as f64).powf(self.n_star_exponent) + 1e-9).floor() as usize,
            lambda: self.lambda_base * self.lambda_decay.powi(step as i32),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub format_version: u64,
    pub schedule: Schedule,
    pub k_values: Vec<usize>,
    pub replicates: usize,
    pub base_seed: u64,
    pub variant: Curve,
    pub d: usize,
    /// Labeled graphs.
    pub s: usize,
    /// Graphs embedded by isomap.
    pub l: usize,
    /// 1-based index of the predicted graph.
    pub r: usize,
    pub alpha: f64,
    pub beta: f64,
    pub sigma: f64,
    /// Test level for the power study.
    pub level: f64,
    /// Regressors are drawn uniformly from `[t_lo, t_hi]`.
    pub t_lo: f64,
    pub t_hi: f64,
    #[serde(default)]
    pub smacof: SmacofOptions,
}

impl ExperimentConfig {
    /// The prediction-consistency study at the published scale.
    pub fn consistency_paper() -> Self {
        Self {
            format_version: EXPERIMENT_FORMAT_VERSION,
            schedule: Schedule {
                n_base: 500,
                n_step: 150,
                graphs_base: 15,
                graphs_step: 1,
                n_star_exponent: 0.75,
                lambda_base: 2.0,
                lambda_decay: 0.99,
            },
            k_values: (1..=12).collect(),
            replicates: 100,
            base_seed: 20_240_501,
            variant: Curve::CurveA,
            d: 2,
            s: 5,
            l: 6,
            r: 6,
            alpha: 2.0,
            beta: 5.0,
            sigma: 0.01,
            level: 0.05,
            t_lo: 0.25,
            t_hi: 1.0,
            smacof: SmacofOptions::default(),
        }
    }

    /// Reduced consistency schedule that runs in minutes on one core.
    pub fn consistency_desk() -> Self {
        let mut c = Self::consistency_paper();
        c.schedule.n_base = 200;
        c.schedule.n_step = 100;
        c.k_values = (1..=6).collect();
        c.replicates = 30;
        c
    }

    /// The power study at the published scale.
    pub fn power_paper() -> Self {
        Self {
            format_version: EXPERIMENT_FORMAT_VERSION,
            schedule: Schedule {
                n_base: 16,
                n_step: 4,
                graphs_base: 12,
                graphs_step: 1,
                n_star_exponent: 0.85,
                lambda_base: 0.95,
                lambda_decay: 0.99,
            },
            k_values: (1..=20).collect(),
            replicates: 100,
            base_seed: 20_240_502,
            variant: Curve::CurveB,
            d: 2,
            s: 5,
            l: 5,
            r: 5,
            alpha: 2.0,
            beta: 5.0,
            sigma: 0.1,
            level: 0.05,
            t_lo: 0.25,
            t_hi: 1.0,
            smacof: SmacofOptions::default(),
        }
    }

    pub fn rows(&self) -> Vec<ScheduleRow> {
        self.k_values.iter().map(|&k| self.schedule.row(k)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |path: &str, msg: String| Err(Error::validation(path, msg));
        if self.format_version != EXPERIMENT_FORMAT_VERSION {
            return bad(
                "format_version",
                format!("expected {EXPERIMENT_FORMAT_VERSION}, found {}", self.format_version),
            );
        }
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return bad("k_values", "must be a non-empty list of positive integers".into());
        }
        if self.replicates == 0 {
            return bad("replicates", "must be positive".into());
        }
        if self.s < 3 {
            return bad("s", format!("{} labeled graphs leave no residual degrees of freedom", self.s));
        }
        if self.s > self.l || self.r == 0 || self.r > self.l {
            return bad("l", format!("need s <= l and 1 <= r <= l (s = {}, r = {}, l = {})", self.s, self.r, self.l));
        }
        if !(self.sigma >= 0.0) || !self.alpha.is_finite() || !self.beta.is_finite() {
            return bad("sigma", "alpha, beta must be finite and sigma non-negative".into());
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return bad("level", format!("{} is not in (0, 1)", self.level));
        }
        if !(0.0 <= self.t_lo && self.t_lo < self.t_hi && self.t_hi <= self.variant.max_t()) {
            return bad(
                "t_hi",
                format!("need 0 <= t_lo < t_hi <= {}", self.variant.max_t()),
            );
        }
        for (i, row) in self.rows().iter().enumerate() {
            let at = format!("k_values[{i}]");
            if row.n % 2 != 0 || row.n < 2 * self.d {
                return bad(&at, format!("n_K = {} must be even and at least 2d", row.n));
            }
            if row.n_star > row.big_n || row.n_star < self.l {
                return bad(
                    &at,
                    format!("need l <= N*_K <= N_K, got l = {}, N* = {}, N = {}", self.l, row.n_star, row.big_n),
                );
            }
            if !(row.lambda > 0.0) {
                return bad(&at, format!("lambda_K = {} must be positive", row.lambda));
            }
        }
        Ok(())
    }

    fn predict_config(&self, row: &ScheduleRow) -> PredictConfig {
        let mut c = PredictConfig::new(self.d, row.lambda, self.l, row.n_star, self.r);
        c.smacof = self.smacof;
        c
    }
}

/// Everything one replicate needs, derived from its own seed only.
struct Draw {
    ts: Vec<f64>,
    ys: Vec<f64>,
    graph_seed: u64,
}

fn draw(cfg: &ExperimentConfig, row: &ScheduleRow, seed: u64) -> Draw {
    let mut rng = seed::rng(seed);
    let ts: Vec<f64> = (0..row.big_n).map(|_| rng.random_range(cfg.t_lo..cfg.t_hi)).collect();
    let ys = if cfg.sigma > 0.0 {
        let noise = Normal::new(0.0, cfg.sigma).expect("sigma validated");
        ts[..cfg.s]
            .iter()
            .map(|t| cfg.alpha + cfg.beta * t + noise.sample(&mut rng))
            .collect()
    } else {
        ts[..cfg.s].iter().map(|t| cfg.alpha + cfg.beta * t).collect()
    };
    Draw {
        ts,
        ys,
        graph_seed: seed::mix64(seed ^ 0x5851_f42d_4c95_7f2d),
    }
}

fn tasks(cfg: &ExperimentConfig) -> Vec<(ScheduleRow, usize)> {
    cfg.rows()
        .into_iter()
        .flat_map(|row| (0..cfg.replicates).map(move |rep| (row, rep)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult<R, S> {
    pub config: ExperimentConfig,
    pub records: Vec<R>,
    pub summaries: Vec<S>,
    /// Wall-clock time; kept out of the written files so reruns are
    /// byte-identical.
    #[serde(skip)]
    pub runtime_secs: f64,
}

pub type ConsistencyResult = ExperimentResult<ReplicateRecord, ConsistencySummary>;
pub type PowerResult = ExperimentResult<PowerRecord, PowerSummary>;

impl<R: io::CsvRecord, S: io::CsvRecord> ExperimentResult<R, S> {
    /// `replicates.csv`, `summary.csv` and `config.json` under `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let paths = vec![dir.join("replicates.csv"), dir.join("summary.csv"), dir.join("config.json")];
        io::emit_csv(&self.records, &paths[0])?;
        io::emit_csv(&self.summaries, &paths[1])?;
        io::write_json(&self.config, &paths[2])?;
        Ok(paths)
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len();
    if m % 2 == 1 {
        v[m / 2]
    } else {
        0.5 * (v[m / 2 - 1] + v[m / 2])
    }
}

pub fn summarize_consistency(cfg: &ExperimentConfig, records: &[ReplicateRecord]) -> Vec<ConsistencySummary> {
    cfg.rows()
        .iter()
        .map(|row| {
            let mine: Vec<&ReplicateRecord> = records.iter().filter(|r| r.k == row.k).collect();
            let mut gaps: Vec<f64> = mine.iter().filter(|r| r.valid).filter_map(|r| r.sq_gap).collect();
            let valid = gaps.len();
            let mean = (valid > 0).then(|| gaps.iter().sum::<f64>() / valid as f64);
            let med = (valid > 0).then(|| median(&mut gaps));
            ConsistencySummary {
                k: row.k,
                n: row.n,
                big_n: row.big_n,
                n_star: row.n_star,
                lambda: row.lambda,
                replicates: mine.len(),
                valid,
                mean_sq_gap: mean,
                median_sq_gap: med,
            }
        })
        .collect()
}

fn consistency_replicate(cfg: &ExperimentConfig, row: &ScheduleRow, rep: usize) -> ReplicateRecord {
    let seed = seed::replicate_seed(cfg.base_seed, row.k, rep);
    let d = draw(cfg, row, seed);
    let gap = (|| -> Result<f64> {
        let coll = sample_collection(&d.ts, row.n, cfg.variant, d.graph_seed)?;
        let pred = pred_graph_resp(coll.graphs(), &d.ys, &cfg.predict_config(row))?;
        let oracle = oracle_prediction(&d.ts, &d.ys, cfg.r)?;
        Ok((pred.y_tilde - oracle).powi(2))
    })();
    if let Err(e) = &gap {
        log::debug!("K = {} replicate {rep}: {e}", row.k);
    }
    ReplicateRecord {
        k: row.k,
        replicate: rep,
        seed,
        n: row.n,
        big_n: row.big_n,
        n_star: row.n_star,
        lambda: row.lambda,
        valid: gap.is_ok(),
        sq_gap: gap.ok(),
    }
}

/// Squared gap between the graph-based and the oracle prediction, per
/// replicate and summarized per `K`.
pub fn run_consistency_experiment(cfg: &ExperimentConfig) -> Result<ConsistencyResult> {
    cfg.validate()?;
    let start = Instant::now();
    let records = crate::par::map(&tasks(cfg), |(row, rep)| consistency_replicate(cfg, row, *rep));
    let summaries = summarize_consistency(cfg, &records);
    Ok(ExperimentResult {
        config: cfg.clone(),
        records,
        summaries,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

fn rate(flags: &[bool]) -> Option<(f64, f64)> {
    if flags.is_empty() {
        return None;
    }
    let m = flags.len() as f64;
    let p = flags.iter().filter(|&&b| b).count() as f64 / m;
    Some((p, (p * (1.0 - p) / m).sqrt()))
}

pub fn summarize_power(cfg: &ExperimentConfig, records: &[PowerRecord]) -> Vec<PowerSummary> {
    cfg.rows()
        .iter()
        .map(|row| {
            let mine: Vec<&PowerRecord> = records.iter().filter(|r| r.k == row.k).collect();
            let ok: Vec<&&PowerRecord> = mine.iter().filter(|r| r.valid).collect();
            let truth: Vec<bool> = ok.iter().filter_map(|r| r.reject_true).collect();
            let hat: Vec<bool> = ok.iter().filter_map(|r| r.reject_hat).collect();
            let t = rate(&truth);
            let h = rate(&hat);
            PowerSummary {
                k: row.k,
                n: row.n,
                big_n: row.big_n,
                n_star: row.n_star,
                lambda: row.lambda,
                replicates: mine.len(),
                valid: ok.len(),
                pi_true: t.map(|x| x.0),
                pi_hat: h.map(|x| x.0),
                abs_diff: t.zip(h).map(|(a, b)| (a.0 - b.0).abs()),
                se_true: t.map(|x| x.1),
                se_hat: h.map(|x| x.1),
            }
        })
        .collect()
}

fn power_replicate(cfg: &ExperimentConfig, row: &ScheduleRow, rep: usize) -> PowerRecord {
    let seed = seed::replicate_seed(cfg.base_seed, row.k, rep);
    let d = draw(cfg, row, seed);
    let out = (|| -> Result<(TestReport, TestReport, f64)> {
        let truth = f_test(&d.ts[..cfg.s], &d.ys, cfg.level)?;
        let coll = sample_collection(&d.ts, row.n, cfg.variant, d.graph_seed)?;
        let pred = pred_graph_resp(coll.graphs(), &d.ys, &cfg.predict_config(row))?;
        let hat = f_test(&pred.embedding[..cfg.s], &d.ys, cfg.level)?;
        let oracle = oracle_prediction(&d.ts, &d.ys, cfg.r)?;
        Ok((truth, hat, (pred.y_tilde - oracle).powi(2)))
    })();
    if let Err(e) = &out {
        log::debug!("K = {} replicate {rep}: {e}", row.k);
    }
    let ok = out.as_ref().ok();
    PowerRecord {
        k: row.k,
        replicate: rep,
        seed,
        n: row.n,
        big_n: row.big_n,
        n_star: row.n_star,
        lambda: row.lambda,
        sq_gap: ok.map(|o| o.2),
        valid: ok.is_some(),
        f_true: ok.map(|o| o.0.f_value),
        f_hat: ok.map(|o| o.1.f_value),
        reject_true: ok.map(|o| o.0.reject),
        reject_hat: ok.map(|o| o.1.reject),
    }
}

/// Empirical power of the F-test on true versus estimated regressors.
pub fn run_power_experiment(cfg: &ExperimentConfig) -> Result<PowerResult> {
    cfg.validate()?;
    let start = Instant::now();
    let records = crate::par::map(&tasks(cfg), |(row, rep)| power_replicate(cfg, row, *rep));
    let summaries = summarize_power(cfg, &records);
    Ok(ExperimentResult {
        config: cfg.clone(),
        records,
        summaries,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisOptions {
    /// 1-based position within each series.
    pub position: usize,
    pub d: usize,
    pub lambda: f64,
    pub level: f64,
    pub censor: CensorOptions,
    /// Bandwidth of the optional local linear fit.
    pub local_linear: Option<f64>,
    pub smacof: SmacofOptions,
}

impl AnalysisOptions {
    pub fn new(position: usize, lambda: f64) -> Self {
        Self {
            position,
            d: 3,
            lambda,
            level: 0.05,
            censor: CensorOptions::default(),
            local_linear: None,
            smacof: SmacofOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LocalLinearReport {
    pub bandwidth: f64,
    /// `1 - SSE / SST` of the smoother evaluated at the observed regressors.
    pub pseudo_r_squared: f64,
    /// `(z, fitted)` on an even grid over the embedding's range.
    pub curve: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub position: usize,
    pub graphs: usize,
    pub node_count: usize,
    pub d: usize,
    pub lambda: f64,
    pub percentile: f64,
    pub edge_counts: Vec<usize>,
    pub rho_hat: f64,
    /// Upper-triangle entries of the scaled score matrices, one row per graph.
    pub score_vectors: Vec<Vec<f64>>,
    /// Pearson correlations between the score-vector coordinates; `None`
    /// where a coordinate is constant.
    pub correlations: Vec<Vec<Option<f64>>>,
    pub embedding: Vec<f64>,
    pub responses: Vec<f64>,
    pub fit: RegressionFit,
    pub test: TestReport,
    pub final_stress: f64,
    pub local_linear: Option<LocalLinearReport>,
    /// Files written next to the report, relative to the output directory.
    pub files: Vec<String>,
}

pub fn correlation_matrix(rows: &[Vec<f64>]) -> Vec<Vec<Option<f64>>> {
    let m = rows.first().map_or(0, Vec::len);
    let count = rows.len() as f64;
    let means: Vec<f64> = (0..m).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / count).collect();
    let cov = |a: usize, b: usize| -> f64 {
        rows.iter()
            .map(|r| (r[a] - means[a]) * (r[b] - means[b]))
            .sum::<f64>()
    };
    let var: Vec<f64> = (0..m).map(|j| cov(j, j)).collect();
    (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    let den = (var[a] * var[b]).sqrt();
                    (den > 0.0).then(|| (cov(a, b) / den).clamp(-1.0, 1.0))
                })
                .collect()
        })
        .collect()
}

fn score_records(scores: &[ScoreMatrix]) -> Vec<ScoreRecord> {
    let mut out = Vec::new();
    for (g, s) in scores.iter().enumerate() {
        let m = s.as_matrix();
        for i in 0..m.nrows() {
            for j in i..m.ncols() {
                out.push(ScoreRecord {
                    graph: g,
                    i,
                    j,
                    value: m[(i, j)],
                });
            }
        }
    }
    out
}

/// Score matrices of the `position`-th graph of every series.
pub fn manifest_scores(
    manifest: &io::DatasetManifest,
    position: usize,
    opts: &MaseOptions,
    censor: &CensorOptions,
) -> Result<(Vec<ScoreMatrix>, f64, Vec<ScoreRecord>)> {
    let graphs = manifest.load_position(position, censor)?;
    let mase = sparse_mase_with(&graphs, opts)?;
    let records = score_records(&mase.scores);
    Ok((mase.scores, mase.rho_hat, records))
}

/// Censor and embed one cross-section of a dataset, regress the responses
/// on the 1-D embedding and test for a linear effect. When `out_dir` is
/// given, `embeddings.csv`, `scores.csv` and `report.json` are written there.
pub fn analyze_real_dataset(
    manifest_path: impl AsRef<Path>,
    opts: &AnalysisOptions,
    out_dir: Option<&Path>,
) -> Result<AnalysisReport> {
    let manifest = io::load_manifest(manifest_path)?;
    let graphs = manifest.load_position(opts.position, &opts.censor)?;
    let edge_counts = graphs.iter().map(|g| g.edge_count()).collect();
    let mase = sparse_mase_with(&graphs, &MaseOptions::new(opts.d))?;
    let points = scaled_score_points(&mase.scores, manifest.node_count);
    let score_vectors: Vec<Vec<f64>> = points.iter().map(|p| p.alt_coords.clone()).collect();
    let correlations = correlation_matrix(&score_vectors);
    let iso = isomap_1d_with(
        &score_vectors,
        &IsomapOptions {
            lambda: opts.lambda,
            l: score_vectors.len(),
            smacof: opts.smacof,
        },
    )?;
    let z = iso.embedding.0;
    let ys = manifest.responses();
    let fit = fit_slr(&z, &ys)?;
    let test = f_test(&z, &ys, opts.level)?;
    let local_linear = match opts.local_linear {
        None => None,
        Some(h) => {
            let lo = z.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let grid = 50;
            let curve = (0..grid)
                .map(|i| {
                    let q = lo + (hi - lo) * i as f64 / (grid - 1) as f64;
                    fit_local_linear(&z, &ys, h, q).map(|v| (q, v))
                })
                .collect::<Result<Vec<_>>>()?;
            Some(LocalLinearReport {
                bandwidth: h,
                pseudo_r_squared: local_linear_r_squared(&z, &ys, h)?,
                curve,
            })
        }
    };

    let mut report = AnalysisReport {
        position: opts.position,
        graphs: graphs.len(),
        node_count: manifest.node_count,
        d: opts.d,
        lambda: opts.lambda,
        percentile: opts.censor.percentile,
        edge_counts,
        rho_hat: mase.rho_hat,
        score_vectors,
        correlations,
        embedding: z.clone(),
        responses: ys.clone(),
        fit,
        test,
        final_stress: iso.trace.final_stress(),
        local_linear,
        files: Vec::new(),
    };
    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir)?;
        let emb: Vec<EmbeddingRecord> = z
            .iter()
            .zip(&ys)
            .enumerate()
            .map(|(i, (&z_hat, &y))| EmbeddingRecord {
                index: i,
                z_hat,
                response: Some(y),
            })
            .collect();
        io::emit_csv(&emb, dir.join("embeddings.csv"))?;
        io::emit_csv(&score_records(&mase.scores), dir.join("scores.csv"))?;
        report.files = vec!["embeddings.csv".into(), "scores.csv".into(), "report.json".into()];
        io::write_json(&report, dir.join("report.json"))?;
    }
    Ok(report)
}

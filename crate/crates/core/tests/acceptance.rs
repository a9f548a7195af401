//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use netresp::graph_model::{
    balanced_membership, build_block_probability, msbm_to_cosie, noiseless_probabilities, sample_collection, Curve,
};
use netresp::io::{self, CensorOptions};
use netresp::linalg::SymmetricOperator;
use netresp::manifold::{
    cmds_embed, isomap_1d_with, localization_graph, raw_stress, shortest_path_matrix, smacof_from_cmds,
    DissimilarityMatrix, Embedding1D, IsomapOptions, SmacofOptions,
};
use netresp::mase::{pairwise_frobenius, scaled_score_points, sparse_mase, sparse_mase_with, MaseOptions, ScaledScorePoint, Sparsity};
use netresp::pipeline::{
    analyze_real_dataset, oracle_prediction, pred_graph_resp, predict_from_embedding, run_consistency_experiment,
    run_power_experiment, AnalysisOptions, ExperimentConfig, PredictConfig,
};
use netresp::regression::f_test;
use netresp::special::f_quantile;
use netresp::synthetic::{write_dataset, SyntheticSpec};
use netresp::seed;

type Criterion = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn uniform_ts(count: usize, seed: u64) -> Vec<f64> {
    let mut rng = seed::rng(seed);
    (0..count).map(|_| rng.random_range(0.25..1.0)).collect()
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let ts = uniform_ts(60, 101);
    let p = noiseless_probabilities(&ts, 400, Curve::CurveA).unwrap();
    let ys: Vec<f64> = ts[..5].iter().map(|t| 2.0 + 5.0 * t).collect();
    let mut cfg = PredictConfig::new(2, 2.0, 6, 60, 6);
    cfg.sparsity = Sparsity::Known(1.0);
    let pred = pred_graph_resp(&p, &ys, &cfg).unwrap();
    let oracle = oracle_prediction(&ts, &ys, 6).unwrap();
    let gap = (pred.y_tilde - oracle).abs();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        gap < 1e-3 && secs < 30.0,
        format!("noiseless pipeline oracle: |y~ - y^| = {gap:.2e} (limit 1e-3), {secs:.1} s (limit 30 s)"),
    )
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let (n, graphs, seeds) = (800, 30, 20);
    let z = balanced_membership(n, 2).unwrap();
    let mut ok = 0;
    let mut worst: f64 = 0.0;
    for s in 0..seeds {
        let ts = uniform_ts(graphs, 1000 + s);
        let coll = sample_collection(&ts, n, Curve::CurveA, s).unwrap();
        let (scores, _) = sparse_mase(coll.graphs(), 2).unwrap();
        let hat = pairwise_frobenius(&scaled_score_points(&scores, n));
        // population scores in the sparse parameterisation the estimator targets
        let blocks: Vec<_> = ts.iter().map(|&t| build_block_probability(t, Curve::CurveA).unwrap()).collect();
        let truth: Vec<ScaledScorePoint> = msbm_to_cosie(&z, &blocks)
            .unwrap()
            .sparse_normalized()
            .scaled_scores()
            .iter()
            .map(ScaledScorePoint::from_matrix)
            .collect();
        let exact = pairwise_frobenius(&truth);
        let mut err: f64 = 0.0;
        for h in 0..6 {
            for k in 0..6 {
                err = err.max((hat[(h, k)] - exact[(h, k)]).abs());
            }
        }
        worst = worst.max(err);
        if err < 0.02 {
            ok += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        ok >= 18 && secs < 120.0,
        format!(
            "MASE distance consistency: {ok}/{seeds} seeds below 0.02 (need 18), worst {worst:.4}, {secs:.1} s (limit 120 s)"
        ),
    )
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig::consistency_desk();
    let res = run_consistency_experiment(&cfg).unwrap();
    let first = res.summaries.first().unwrap();
    let last = res.summaries.last().unwrap();
    let (m1, m6) = (first.median_sq_gap.unwrap_or(f64::NAN), last.median_sq_gap.unwrap_or(f64::NAN));
    let secs = start.elapsed().as_secs_f64();
    let medians: Vec<String> = res
        .summaries
        .iter()
        .map(|s| s.median_sq_gap.map_or("-".into(), |v| format!("{v:.2e}")))
        .collect();
    outcome(
        m6 < 0.5 * m1 && secs < 900.0,
        format!(
            "desk consistency: median gap^2 by K = [{}], K=6/K=1 ratio {:.3} (limit 0.5), {secs:.1} s (limit 900 s)",
            medians.join(", "),
            m6 / m1
        ),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::power_paper();
    cfg.k_values = vec![1, 10, 20];
    let res = run_power_experiment(&cfg).unwrap();
    let diffs: Vec<f64> = res.summaries.iter().map(|s| s.abs_diff.unwrap_or(f64::NAN)).collect();
    let se: Vec<f64> = res
        .summaries
        .iter()
        .map(|s| (s.se_true.unwrap_or(0.0).powi(2) + s.se_hat.unwrap_or(0.0).powi(2)).sqrt())
        .collect();
    let monotone = (1..diffs.len()).all(|i| diffs[i] <= diffs[i - 1] + se[i].max(se[i - 1]));
    let secs = start.elapsed().as_secs_f64();
    let valid: Vec<String> = res.summaries.iter().map(|s| format!("{}", s.valid)).collect();
    outcome(
        diffs[2] <= 0.10 && monotone && secs < 600.0,
        format!(
            "power gap: |pi^ - pi*| at K = 1, 10, 20 = {:.3}, {:.3}, {:.3} (valid {}), K=20 limit 0.10, non-increasing within 1 SE: {monotone}, {secs:.1} s (limit 600 s)",
            diffs[0],
            diffs[1],
            diffs[2],
            valid.join("/")
        ),
    )
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let ts = uniform_ts(200, 505);
    let pts: Vec<[f64; 4]> = ts.iter().map(|&t| Curve::CurveA.point(t)).collect();
    let g = localization_graph(&pts, 0.05).unwrap();
    let delta = shortest_path_matrix(&g, 6).unwrap();
    let mut geo_ok = true;
    for h in 0..6 {
        for k in 0..6 {
            let truth = (ts[h] - ts[k]).abs();
            let v = delta.get(h, k);
            geo_ok &= v >= 0.95 * truth - 1e-12 && v <= 1.05 * truth + 1e-12;
        }
    }
    let iso = isomap_1d_with(
        &pts,
        &IsomapOptions {
            lambda: 0.05,
            l: 6,
            smacof: SmacofOptions::default(),
        },
    )
    .unwrap();
    let z = iso.embedding.values();
    let mut worst: f64 = 0.0;
    for h in 0..6 {
        for k in 0..6 {
            worst = worst.max(((z[h] - z[k]).abs() - (ts[h] - ts[k]).abs()).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        geo_ok && worst < 0.01 && secs < 5.0,
        format!(
            "isomap geodesic fidelity: paths within 5%: {geo_ok}, worst embedding distance error {worst:.2e} (limit 0.01), {secs:.2} s (limit 5 s)"
        ),
    )
}

fn criterion_6() -> Outcome {
    let start = Instant::now();
    let mut rng = seed::rng(606);
    let mut bad = 0;
    for _ in 0..100 {
        let l = rng.random_range(2..=20);
        let mut m = DMatrix::zeros(l, l);
        for i in 0..l {
            for j in (i + 1)..l {
                let v: f64 = rng.random_range(0.0..10.0);
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let delta = DissimilarityMatrix::new(m).unwrap();
        let init = raw_stress(&cmds_embed(&delta), &delta);
        let (_, trace, init_stress) = smacof_from_cmds(&delta, &SmacofOptions::default()).unwrap();
        if !trace.is_non_increasing() || trace.final_stress() > init || init_stress != init {
            bad += 1;
        }
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        bad == 0 && secs < 5.0,
        format!("SMACOF monotonicity: {bad}/100 violations, {secs:.2} s (limit 5 s)"),
    )
}

fn criterion_7() -> Outcome {
    let start = Instant::now();
    let noise = Normal::new(0.0, 0.1).unwrap();
    let reps = 2000;
    let mut rejections = 0;
    for rep in 0..reps {
        let mut rng = seed::rng(seed::replicate_seed(707, 30, rep));
        let ts: Vec<f64> = (0..30).map(|_| rng.random_range(0.25..1.0)).collect();
        let ys: Vec<f64> = ts.iter().map(|_| 2.0 + noise.sample(&mut rng)).collect();
        if f_test(&ts, &ys, 0.05).unwrap().reject {
            rejections += 1;
        }
    }
    let rate = rejections as f64 / reps as f64;
    let secs = start.elapsed().as_secs_f64();
    outcome(
        (0.03..=0.08).contains(&rate) && secs < 10.0,
        format!("F-test size: rejection rate {rate:.4} over {reps} null replicates (band [0.03, 0.08]), {secs:.2} s (limit 10 s)"),
    )
}

fn criterion_8() -> Outcome {
    let ours = f_quantile(0.95, 1.0, 3.0);
    let statrs = FisherSnedecor::new(1.0, 3.0).unwrap().inverse_cdf(0.95);
    // F(1, 3) upper quantile is the square of the t(3) two-sided 0.05 quantile
    let t_squared = 3.182_446_305_284_263f64.powi(2);
    let pass = (ours - 10.128).abs() < 1e-3 && (ours - statrs).abs() < 1e-3 && (ours - t_squared).abs() < 1e-3;
    outcome(
        pass,
        format!("F(1,3) critical value: {ours:.6} (statrs {statrs:.6}, t^2 {t_squared:.6}, target 10.128 +/- 1e-3)"),
    )
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().to_string_lossy().into_owned();
                out.push((rel, std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let spec = SyntheticSpec {
        series: 10,
        length: 1,
        node_count: 60,
        seed: 909,
        ..SyntheticSpec::default()
    };
    let a = write_dataset(&spec, tmp.path().join("a")).unwrap();
    write_dataset(&spec, tmp.path().join("b")).unwrap();
    let data_identical = dir_bytes(&tmp.path().join("a")) == dir_bytes(&tmp.path().join("b"));

    let manifest = io::load_manifest(&a).unwrap();
    let graphs = manifest.load_position(1, &CensorOptions::default()).unwrap();
    let well_formed = graphs.len() == 10 && graphs.iter().all(|g| g.is_symmetric_hollow_binary());

    let mut monotone = true;
    let mut previous: Option<Vec<netresp::graph_model::AdjacencyMatrix>> = None;
    for p in (0..=100).step_by(10) {
        let opts = CensorOptions {
            percentile: p as f64,
            ..CensorOptions::default()
        };
        let now = manifest.load_position(1, &opts).unwrap();
        if let Some(prev) = &previous {
            for (lo, hi) in prev.iter().zip(&now) {
                let n = hi.node_count();
                for i in 0..n {
                    for j in 0..n {
                        monotone &= !hi.has_edge(i, j) || lo.has_edge(i, j);
                    }
                }
            }
        }
        previous = Some(now);
    }

    let round_trip = io::load_manifest(&a).unwrap() == manifest;
    let mut opts = AnalysisOptions::new(1, 50.0);
    opts.local_linear = Some(0.5);
    analyze_real_dataset(&a, &opts, Some(&tmp.path().join("out1"))).unwrap();
    analyze_real_dataset(&a, &opts, Some(&tmp.path().join("out2"))).unwrap();
    let outputs_identical = dir_bytes(&tmp.path().join("out1")) == dir_bytes(&tmp.path().join("out2"));

    outcome(
        data_identical && well_formed && monotone && round_trip && outputs_identical,
        format!(
            "ingestion and censoring: symmetric/hollow/binary {well_formed}, percentile monotone {monotone}, manifest round trip {round_trip}, identical reruns (data {data_identical}, outputs {outputs_identical})"
        ),
    )
}

fn random_orthogonal(d: usize, rng: &mut seed::Rng) -> DMatrix<f64> {
    let g = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    g.qr().q()
}

fn criterion_10() -> Outcome {
    // affine gauge: replacing the isomap output by an affine image leaves the prediction unchanged
    let ts = uniform_ts(20, 1010);
    let coll = sample_collection(&ts, 300, Curve::CurveA, 1010).unwrap();
    let ys: Vec<f64> = ts[..5].iter().map(|t| 2.0 + 5.0 * t).collect();
    let pred = pred_graph_resp(coll.graphs(), &ys, &PredictConfig::new(2, 5.0, 6, 20, 6)).unwrap();
    let mut affine: f64 = 0.0;
    for (a, b) in [(2.5, -1.0), (-0.3, 4.0), (10.0, 100.0), (-7.0, 0.0)] {
        let w: Vec<f64> = pred.embedding.iter().map(|z| a * z + b).collect();
        let (y, _) = predict_from_embedding(&w, &ys, 6).unwrap();
        affine = affine.max((y - pred.y_tilde).abs());
    }

    // rotation: scores computed in a rotated joint basis give the same pairwise distances
    let mase = sparse_mase_with(coll.graphs(), &MaseOptions::new(2)).unwrap();
    let base = pairwise_frobenius(&scaled_score_points(&mase.scores, 300));
    let mut rng = seed::rng(1011);
    let mut rotation: f64 = 0.0;
    for _ in 0..5 {
        let w = random_orthogonal(2, &mut rng);
        let v = mase.joint_basis.columns() * &w;
        let rotated: Vec<ScaledScorePoint> = coll
            .graphs()
            .iter()
            .map(|g| {
                let r = v.transpose() * g.to_dense() * &v / mase.rho_hat;
                ScaledScorePoint::from_matrix(&((&r + r.transpose()) * 0.5 / 300.0))
            })
            .collect();
        rotation = rotation.max((pairwise_frobenius(&rotated) - &base).amax());
    }

    // raw stress is unchanged by translation and reflection (dyadic values keep it exact)
    let delta = DissimilarityMatrix::new(DMatrix::from_row_slice(
        4,
        4,
        &[0.0, 1.5, 2.25, 3.0, 1.5, 0.0, 0.75, 1.25, 2.25, 0.75, 0.0, 0.5, 3.0, 1.25, 0.5, 0.0],
    ))
    .unwrap();
    let z = [0.25, -1.5, 0.75, 2.0];
    let s0 = raw_stress(&Embedding1D(z.to_vec()), &delta);
    let shifted = raw_stress(&Embedding1D(z.iter().map(|v| v + 4.0).collect()), &delta);
    let flipped = raw_stress(&Embedding1D(z.iter().map(|v| -v).collect()), &delta);
    let gauge = s0 == shifted && s0 == flipped;

    outcome(
        affine < 1e-10 && rotation < 1e-8 && gauge,
        format!(
            "invariance: affine prediction {affine:.1e} (limit 1e-10), rotation {rotation:.1e} (limit 1e-8), stress gauge exact {gauge}"
        ),
    )
}

fn main() {
    let criteria: [(&str, Criterion); 10] = [
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
        ("9", criterion_9),
        ("10", criterion_10),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| f == id) {
            continue;
        }
        let o = run();
        println!("[{}] criterion {id:>2}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criterion/criteria failed");
        std::process::exit(1);
    }
}

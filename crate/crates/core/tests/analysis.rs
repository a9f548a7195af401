use netresp::io::{self, EmbeddingRecord};
use netresp::pipeline::{analyze_real_dataset, AnalysisOptions};
use netresp::synthetic::{write_dataset, SyntheticSpec};
use netresp::Error;

fn spec(series: usize) -> SyntheticSpec {
    SyntheticSpec {
        series,
        length: 3,
        node_count: 80,
        seed: 11,
        ..SyntheticSpec::default()
    }
}

#[test]
fn end_to_end_report_on_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(&spec(12), dir.path().join("data")).unwrap();
    let mut opts = AnalysisOptions::new(2, 50.0);
    opts.local_linear = Some(0.5);
    let out = dir.path().join("out");
    let report = analyze_real_dataset(&manifest, &opts, Some(&out)).unwrap();

    assert_eq!(report.graphs, 12);
    assert_eq!(report.score_vectors[0].len(), 6);
    assert_eq!(report.correlations.len(), 6);
    assert!(report.test.p_value.is_finite());
    assert!(report.test.p_value < 0.05, "latent positions drive the response: {:?}", report.test);
    let ll = report.local_linear.as_ref().unwrap();
    assert!(ll.pseudo_r_squared <= 1.0);
    assert_eq!(ll.curve.len(), 50);

    let emb: Vec<EmbeddingRecord> = io::load_csv(out.join("embeddings.csv")).unwrap();
    assert_eq!(emb.len(), 12);
    for (rec, (&z, &y)) in emb.iter().zip(report.embedding.iter().zip(&report.responses)) {
        assert_eq!(rec.z_hat, z);
        assert_eq!(rec.response, Some(y));
    }
    let json: serde_json::Value = io::read_json(out.join("report.json")).unwrap();
    assert_eq!(json["graphs"], 12);
}

#[test]
fn single_series_is_a_degenerate_design() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(&spec(1), dir.path()).unwrap();
    let err = analyze_real_dataset(&manifest, &AnalysisOptions::new(1, 50.0), None).unwrap_err();
    assert!(matches!(err, Error::DegenerateDesign(_)), "{err}");
}

#[test]
fn position_out_of_range() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(&spec(3), dir.path()).unwrap();
    for position in [0, 4] {
        let err = analyze_real_dataset(&manifest, &AnalysisOptions::new(position, 50.0), None).unwrap_err();
        assert!(matches!(err, Error::Argument(_)), "{err}");
    }
}

#[test]
fn tiny_lambda_reports_disconnection() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = write_dataset(&spec(6), dir.path()).unwrap();
    let err = analyze_real_dataset(&manifest, &AnalysisOptions::new(1, 1e-9), None).unwrap_err();
    assert!(matches!(err, Error::Connectivity { .. }));
    assert!(err.to_string().contains("larger"));
}

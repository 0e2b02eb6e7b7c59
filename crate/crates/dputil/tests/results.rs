use dputil::results::{read_results, read_rows, results_csv, write_results, ResultRow, RunMeta, SweepResult, RESULTS_FILE};
use dputil::HarnessError;
use dputil_core::learners::ArchKind;
use dputil_core::mechanisms::MechanismKind;
use dputil_core::metrics::MetricRow;

fn sample() -> SweepResult {
    let ok = MetricRow {
        acc_nonprivate: 0.1 + 0.2,
        acc_private: 1.0 / 3.0,
        utility_loss: 1.0 - (1.0 / 3.0) / 0.3,
        tpr: 0.62,
        fpr: 0.5,
        privacy_leakage: 0.62 - 0.5,
        true_revealed: 62,
        n_members: 100,
    };
    let rows = vec![
        ResultRow { dataset: "blobs".into(), arch: ArchKind::Lr, mechanism: MechanismKind::Output, epsilon: 0.01, seed: 3, metrics: Some(ok) },
        ResultRow { dataset: "blobs".into(), arch: ArchKind::Lr, mechanism: MechanismKind::Gradient, epsilon: 1e4, seed: 3, metrics: None },
    ];
    SweepResult {
        meta: RunMeta {
            dataset: "blobs".into(),
            arch: ArchKind::Lr,
            generator: "xoshiro256++".into(),
            version: "0.1.0".into(),
            wall_time_secs: 1.5,
            failures: vec![],
        },
        rows,
    }
}

#[test]
fn round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let r = sample();
    write_results(&r, dir.path()).unwrap();
    assert_eq!(read_results(dir.path()).unwrap(), r);
}

#[test]
fn failed_rows_have_empty_metrics() {
    let text = results_csv(&sample().rows);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "dataset,arch,mechanism,epsilon,seed,acc_nonprivate,acc_private,utility_loss,tpr,fpr,privacy_leakage,true_revealed,n_members,status"
    );
    assert!(lines[1].ends_with(",62,100,ok"));
    assert_eq!(lines[2], "blobs,lr,gradient,1.0000000000000000e4,3,,,,,,,,,failed");
}

#[test]
fn floats_carry_17_significant_digits() {
    let text = results_csv(&sample().rows);
    assert!(text.contains("3.0000000000000004e-1"));
}

#[test]
fn header_mismatch_is_a_format_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(RESULTS_FILE);
    std::fs::write(&path, "dataset,arch,mechanism\nx,lr,input\n").unwrap();
    assert!(matches!(read_rows(&path), Err(HarnessError::Format { .. })));
}

#[test]
fn malformed_values_are_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join(RESULTS_FILE);
    let mut text = results_csv(&sample().rows);
    text = text.replace(",62,100,ok", ",sixty,100,ok");
    std::fs::write(&path, text).unwrap();
    assert!(matches!(read_rows(&path), Err(HarnessError::Ingest { .. })));
}

use dputil::config::ExperimentConfig;
use dputil::plots::{emit_plots, Metric};
use dputil::results::{read_results, results_csv, write_results};
use dputil::sweep::{check_baseline_reuse, run_sweep};
use dputil::HarnessError;

fn config(extra: &str) -> ExperimentConfig {
    let mut c: ExperimentConfig = serde_json::from_str(&format!(
        r#"{{
            "dataset": {{ "synthetic": {{ "n": 400, "d": 5, "class_count": 2, "class_separation": 3.0, "seed": 2 }} }},
            "arch": "lr",
            "train": {{ "epochs": 10 }},
            "attack": {{ "shadows": 3, "forest": {{ "trees": 10 }} }}
            {extra}
        }}"#
    ))
    .unwrap();
    c.fill_defaults();
    c
}

#[test]
fn grid_cardinality_and_order() {
    let c = config(r#", "mechanisms": [{ "kind": "input", "delta": 0.2 }, "objective", "gradient", "output", "prediction"], "seeds": [0, 1, 2]"#);
    let r = run_sweep(&c).unwrap();
    assert_eq!(r.rows.len(), 5 * 7 * 3);
    assert!(r.rows.iter().all(|row| row.is_ok()), "{:?}", r.meta.failures);
    assert_eq!(r.rows[0].seed, 0);
    assert_eq!(r.rows[7].mechanism.as_str(), "objective");
    assert_eq!(r.rows[35].seed, 1);
    check_baseline_reuse(&r).unwrap();
    for row in &r.rows {
        let m = row.metrics.unwrap();
        assert_eq!(m.n_members, 100);
        assert!((m.privacy_leakage - (m.tpr - m.fpr)).abs() < 1e-12);
    }
}

#[test]
fn failures_are_recorded_not_fatal() {
    // the default delta makes input perturbation infeasible on 100 rows
    let c = config(r#", "mechanisms": ["input", "output"], "epsilons": [1.0]"#);
    let r = run_sweep(&c).unwrap();
    assert_eq!(r.rows.len(), 2);
    assert!(!r.rows[0].is_ok());
    assert!(r.rows[1].is_ok());
    assert_eq!(r.meta.failures.len(), 1);
    assert!(r.meta.failures[0].error.contains("infeasible"), "{}", r.meta.failures[0].error);
}

#[test]
fn incompatible_mechanism_fails_before_training() {
    let mut c = config(r#", "mechanisms": ["output"]"#);
    c.arch = dputil_core::learners::ArchKind::Mlp;
    assert!(matches!(run_sweep(&c), Err(HarnessError::Config(_))));
}

#[test]
fn sweep_is_deterministic() {
    let c = config(r#", "mechanisms": ["gradient", "prediction"], "epsilons": [0.1, 10.0], "seeds": [4, 5]"#);
    let a = results_csv(&run_sweep(&c).unwrap().rows);
    let b = results_csv(&run_sweep(&c).unwrap().rows);
    assert_eq!(a, b);
}

#[test]
fn report_files_match_results() {
    let c = config(r#", "mechanisms": ["objective", "output", "prediction"], "epsilons": [0.1, 1.0, 100.0], "seeds": [0, 1]"#);
    let r = run_sweep(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    write_results(&r, dir.path()).unwrap();
    let back = read_results(dir.path()).unwrap();
    let svgs = emit_plots(&back, dir.path()).unwrap();
    assert_eq!(svgs.len(), 3);
    for svg in &svgs {
        let text = std::fs::read_to_string(svg).unwrap();
        assert!(text.starts_with("<svg"));
        for name in ["objective", "output", "prediction"] {
            assert!(text.contains(name), "{} lacks {name}", svg.display());
        }
    }

    // recompute seed means straight from the rows
    for metric in Metric::ALL {
        let csv = svgs.iter().find(|p| p.to_string_lossy().contains(metric.name())).unwrap().with_extension("csv");
        let text = std::fs::read_to_string(csv).unwrap();
        let lines: Vec<&str> = text.lines().skip(1).collect();
        assert_eq!(lines.len(), 9);
        for line in lines {
            let f: Vec<&str> = line.split(',').collect();
            let eps: f64 = f[1].parse().unwrap();
            let values: Vec<f64> = r
                .rows
                .iter()
                .filter(|row| row.mechanism.as_str() == f[0] && row.epsilon == eps)
                .map(|row| metric.value(row.metrics.as_ref().unwrap()))
                .collect();
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            let got: f64 = f[3].parse().unwrap();
            assert!((got - mean).abs() <= 1e-12, "{line}");
            assert_eq!(f[5], "2");
        }
    }
}

#[test]
fn single_seed_has_zero_error_bars() {
    let c = config(r#", "mechanisms": ["output"], "epsilons": [1.0]"#);
    let r = run_sweep(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    emit_plots(&r, dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("synthetic-n400-d5-c2_lr_utility_loss.csv")).unwrap();
    let std: f64 = text.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert_eq!(std, 0.0);
}

#[test]
fn empty_report_is_an_error() {
    let c = config(r#", "mechanisms": ["input"], "epsilons": [1.0]"#);
    let r = run_sweep(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(emit_plots(&r, dir.path()), Err(HarnessError::EmptyReport)));
}

use dputil_core::attack::AttackOutcome;
use dputil_core::metrics::{mean_std, privacy_leakage, spearman, true_revealed, utility_loss, MetricRow};
use dputil_core::Error;

fn outcome(tp: usize, fn_: usize, fp: usize, tn: usize) -> AttackOutcome {
    let mut member_flags = vec![true; tp];
    member_flags.extend(vec![false; fn_]);
    AttackOutcome { tp, fp, tn, fn_, member_flags }
}

#[test]
fn utility_loss_examples() {
    assert_eq!(utility_loss(0.375, 0.375).unwrap(), 0.0);
    assert!((utility_loss(0.528, 0.661).unwrap() - 0.201).abs() <= 1e-3);
    assert!((utility_loss(0.1896, 0.375).unwrap() - 0.4944).abs() <= 1e-4);
    assert!(utility_loss(0.8, 0.7).unwrap() < 0.0);
    assert!(matches!(utility_loss(0.5, 0.0), Err(Error::UndefinedMetric(_))));
}

#[test]
fn leakage_examples() {
    assert_eq!(privacy_leakage(&outcome(62, 38, 50, 50)).unwrap(), 0.62 - 0.50);
    assert!((privacy_leakage(&outcome(62, 38, 50, 50)).unwrap() - 0.12).abs() < 1e-12);
    assert_eq!(privacy_leakage(&outcome(0, 100, 50, 50)).unwrap(), -0.5);
    assert_eq!(privacy_leakage(&outcome(30, 70, 30, 70)).unwrap(), 0.0);
    assert!(privacy_leakage(&outcome(0, 0, 5, 5)).is_err());
    assert!(privacy_leakage(&outcome(5, 5, 0, 0)).is_err());
}

#[test]
fn true_revealed_counts_true_positives() {
    assert_eq!(true_revealed(&outcome(100, 0, 3, 97)), 100);
    assert_eq!(true_revealed(&outcome(0, 100, 3, 97)), 0);
}

#[test]
fn metric_row_invariants() {
    let row = MetricRow::compute(0.9, 0.81, &outcome(40, 60, 25, 75)).unwrap();
    assert!((row.privacy_leakage - (row.tpr - row.fpr)).abs() < 1e-12);
    assert_eq!(row.true_revealed, 40);
    assert_eq!(row.n_members, 100);
    assert!((row.utility_loss - 0.1).abs() < 1e-12);
}

#[test]
fn leakage_bounded_over_all_small_outcomes() {
    for m in 1..8 {
        for nm in 1..8 {
            for tp in 0..=m {
                for fp in 0..=nm {
                    let l = privacy_leakage(&outcome(tp, m - tp, fp, nm - fp)).unwrap();
                    assert!((-1.0..=1.0).contains(&l));
                    assert!(true_revealed(&outcome(tp, m - tp, fp, nm - fp)) <= m);
                }
            }
        }
    }
}

#[test]
fn mean_std_matches_definition() {
    let s = mean_std(&[1.0, 2.0, 3.0, 4.0]).unwrap();
    assert_eq!(s.mean, 2.5);
    assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert_eq!(mean_std(&[7.0]).unwrap().std, 0.0);
    assert!(mean_std(&[]).is_none());
}

#[test]
fn spearman_examples() {
    assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
    assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
    // ties get average ranks: ranks (1.5, 1.5, 3) vs (1, 2, 3)
    let r = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!((r - 0.866_025_403_784_438_6).abs() < 1e-12);
    assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_none());
}

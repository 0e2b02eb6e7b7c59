use dputil_core::dataset::{make_split, normalize_rows_to_unit_ball, synthesize, Dataset, SyntheticSpec};
use dputil_core::learners::{
    argmax, logistic_erm_gradient, train, ArchKind, ModelArch, PredictionApi, TrainConfig,
};
use dputil_core::mechanisms::{
    default_delta, dpsgd_sigma, dpsgd_train, fit_private, gradient_perturb_lr_with, input_lr_sigma,
    input_perturb_lr, input_perturb_mlp, noisy_aggregate, objective_noise_scale, objective_perturb,
    output_noise_scale, output_perturb, perturb_features, prediction_perturb, regularized_optimum,
    shard_indices, ConvexLaplaceHook, ErmNoise, MechanismKind, MechanismSpec, PrivacyBudget,
    Underlying, VoteNoise,
};
use dputil_core::numkit::{Matrix, Rng};
use dputil_core::Error;

struct Split {
    train: Dataset,
    test: Dataset,
}

fn separable(seed: u64) -> Split {
    let data = synthesize(&SyntheticSpec { n: 2000, d: 10, class_count: 2, class_separation: 4.0, seed }).unwrap();
    let data = normalize_rows_to_unit_ball(&data);
    let plan = make_split(&data, seed).unwrap();
    Split { train: data.subset(&plan.target_train), test: data.subset(&plan.target_test) }
}

fn lr(data: &Dataset) -> ModelArch {
    ModelArch::for_dataset(ArchKind::Lr, data).unwrap()
}

fn params_of(m: &dputil_core::mechanisms::PrivateModel) -> Vec<f64> {
    match &m.underlying {
        Underlying::Single(model) => model.params().to_vec(),
        Underlying::Ensemble(_) => panic!("expected a single model"),
    }
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn private_accuracy(m: &dputil_core::mechanisms::PrivateModel, data: &Dataset, seed: u64) -> f64 {
    let mut api = m.oracle(Rng::seed_from(seed));
    dputil_core::learners::evaluate_api(&mut api, data).unwrap()
}

#[test]
fn noise_scale_arithmetic() {
    assert!((output_noise_scale(25_000, 1e-4, 1.0) - 0.8).abs() < 1e-9);
    assert!((objective_noise_scale(5000, 0.1) - 0.004).abs() < 1e-9);
    let sigma = dpsgd_sigma(250, 25_000, 10_000, 1e-5, 1.0, 1.0).unwrap();
    let oracle = 0.01 * (10_000.0f64 * (1e5f64).ln()).sqrt();
    assert!((sigma - oracle).abs() < 1e-9);
    assert!((sigma - 3.393).abs() < 5e-4);
    assert!((ConvexLaplaceHook::scale(25_000, 1.0) - 8e-5).abs() < 1e-18);
}

#[test]
fn input_lr_feasibility() {
    let s = input_lr_sigma(10_000, 5, 1e-4, 1.0, 0.01).unwrap();
    assert!(s > 0.0);
    match input_lr_sigma(500, 5, 1e-4, 1.0, default_delta(500)) {
        Err(Error::Infeasible { n, delta, a }) => {
            assert_eq!(n, 500);
            assert_eq!(delta, 1e-4);
            assert!(a >= 0.5);
        }
        other => panic!("expected infeasible, got {other:?}"),
    }
}

#[test]
fn perturbed_features_stay_in_bounds() {
    let s = separable(3);
    let mut rng = Rng::seed_from(1);
    let noisy = perturb_features(&s.train, 5.0, &mut rng);
    for row in noisy.features().iter_rows() {
        for (v, &(lo, hi)) in row.iter().zip(s.train.feature_bounds()) {
            assert!(*v >= lo && *v <= hi);
        }
    }
    assert_ne!(noisy.features(), s.train.features());
    assert_eq!(noisy.labels(), s.train.labels());
}

#[test]
fn vanishing_noise_matches_baseline() {
    let s = separable(11);
    let arch = lr(&s.train);
    let config = TrainConfig::default();
    let base = train(&arch, &s.train, &config, None).unwrap().evaluate(&s.test).unwrap();
    for kind in MechanismKind::ALL {
        let delta = if kind == MechanismKind::Input { 0.05 } else { default_delta(s.train.len()) };
        let spec = MechanismSpec::new(kind, PrivacyBudget::new(1e6, delta).unwrap());
        let mut rng = Rng::derive(11, kind.as_str());
        let m = fit_private(&arch, &s.train, &config, &spec, &mut rng).unwrap();
        let acc = private_accuracy(&m, &s.test, 5);
        assert!((acc - base).abs() <= 0.02, "{}: {acc} vs {base}", kind.as_str());
    }
}

#[test]
fn mlp_vanishing_noise_matches_baseline() {
    let s = separable(12);
    let arch = ModelArch::for_dataset(ArchKind::Mlp, &s.train).unwrap();
    let config = TrainConfig { epochs: 30, ..TrainConfig::default() };
    let base = train(&arch, &s.train, &config, None).unwrap().evaluate(&s.test).unwrap();
    let budget = PrivacyBudget::new(1e4, 1e-3).unwrap();
    let mut rng = Rng::seed_from(4);
    let m = input_perturb_mlp(&s.train, &budget, 1.0, 1.0, &config, &mut rng).unwrap();
    assert!((private_accuracy(&m, &s.test, 0) - base).abs() <= 0.02);
}

#[test]
fn erm_mechanisms_converge_to_regularized_optimum() {
    let s = separable(5);
    let lambda = 1e-4;
    let exact = regularized_optimum(&s.train, lambda).unwrap();
    let signs: Vec<f64> = s.train.labels().iter().map(|&y| if y == 1 { 1.0 } else { -1.0 }).collect();
    let g = logistic_erm_gradient(s.train.features(), &signs, lambda, None, exact.params());
    assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-5);

    let budget = PrivacyBudget::new(1e6, 1e-4).unwrap();
    for seed in 0..5 {
        let mut rng = Rng::seed_from(seed);
        let obj = objective_perturb(&s.train, &budget, lambda, ErmNoise::Sphere, &mut rng).unwrap();
        assert!(dist(&params_of(&obj), exact.params()) <= 1e-3);
        let out = output_perturb(&s.train, &budget, lambda, ErmNoise::Sphere, &mut rng).unwrap();
        assert!(dist(&params_of(&out), exact.params()) <= 1e-3);
    }
}

#[test]
fn objective_solution_is_stationary_for_perturbed_objective() {
    let s = separable(6);
    let budget = PrivacyBudget::new(1.0, 1e-4).unwrap();
    let mut rng = Rng::seed_from(9);
    let m = objective_perturb(&s.train, &budget, 1e-3, ErmNoise::PerCoordinate, &mut rng).unwrap();
    // Replay the noise draw to check the returned point against the perturbed objective.
    let mut replay = Rng::seed_from(9);
    let b = dputil_core::numkit::sample_laplace(&mut replay, 2.0, 11).unwrap();
    let signs: Vec<f64> = s.train.labels().iter().map(|&y| if y == 1 { 1.0 } else { -1.0 }).collect();
    let g = logistic_erm_gradient(s.train.features(), &signs, 1e-3, Some(&b), &params_of(&m));
    assert!(g.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-5);
}

#[test]
fn erm_mechanisms_reject_unnormalized_rows() {
    let data = synthesize(&SyntheticSpec { n: 200, d: 4, class_count: 2, class_separation: 2.0, seed: 1 }).unwrap();
    let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
    let mut rng = Rng::seed_from(0);
    assert!(matches!(objective_perturb(&data, &budget, 1e-4, ErmNoise::Sphere, &mut rng), Err(Error::Precondition(_))));
    assert!(matches!(output_perturb(&data, &budget, 1e-4, ErmNoise::Sphere, &mut rng), Err(Error::Precondition(_))));
}

#[test]
fn output_perturbation_crushed_to_chance() {
    let s = separable(21);
    let budget = PrivacyBudget::new(1e-2, 1e-4).unwrap();
    let accs: Vec<f64> = (0..10)
        .map(|seed| {
            let mut rng = Rng::seed_from(seed);
            let m = output_perturb(&s.train, &budget, 1e-4, ErmNoise::Sphere, &mut rng).unwrap();
            private_accuracy(&m, &s.test, 0)
        })
        .collect();
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    assert!((mean - 0.5).abs() <= 0.1, "{accs:?}");
}

#[test]
fn multiclass_erm_is_one_vs_rest() {
    let data = synthesize(&SyntheticSpec { n: 900, d: 6, class_count: 3, class_separation: 4.0, seed: 2 }).unwrap();
    let data = normalize_rows_to_unit_ball(&data);
    let m = regularized_optimum(&data, 1e-4).unwrap();
    assert_eq!(m.params().len(), 3 * 7);
    assert!(m.evaluate(&data).unwrap() > 0.9);
    let budget = PrivacyBudget::new(1e6, 1e-4).unwrap();
    let p = output_perturb(&data, &budget, 1e-4, ErmNoise::Sphere, &mut Rng::seed_from(1)).unwrap();
    let proba = p.predict_proba(data.features(), &mut Rng::seed_from(0)).unwrap();
    for row in proba.iter_rows() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

#[test]
fn convex_gradient_noise_free_matches_plain_training() {
    let s = separable(8);
    let config = TrainConfig { epochs: 20, ..TrainConfig::default() };
    let budget = PrivacyBudget::new(1.0, 1e-4).unwrap();
    let quiet = gradient_perturb_lr_with(&s.train, &budget, &config, &mut Rng::seed_from(0), false).unwrap();
    let full = TrainConfig { batch_size: s.train.len(), ..config.clone() };
    let plain = train(&lr(&s.train), &s.train, &full, None).unwrap();
    assert_eq!(params_of(&quiet), plain.params());
    let noisy = gradient_perturb_lr_with(&s.train, &budget, &config, &mut Rng::seed_from(0), true).unwrap();
    assert_ne!(params_of(&noisy), plain.params());
}

#[test]
fn dpsgd_clipped_norms_bounded() {
    let s = separable(9);
    for (arch, clip) in [(lr(&s.train), 0.05), (ModelArch::for_dataset(ArchKind::Mlp, &s.train).unwrap(), 0.5)] {
        let config = TrainConfig { epochs: 5, batch_size: 50, ..TrainConfig::default() };
        let budget = PrivacyBudget::new(1.0, 1e-4).unwrap();
        let (_, trace) = dpsgd_train(&arch, &s.train, &budget, clip, 1.0, &config, &mut Rng::seed_from(3)).unwrap();
        assert_eq!(trace.len(), config.total_steps(s.train.len()));
        assert!(trace.iter().all(|&n| n <= clip + 1e-12));
        assert!(trace.iter().any(|&n| n > 0.9 * clip), "clipping never engaged");
    }
}

#[test]
fn dpsgd_large_epsilon_close_to_baseline() {
    let s = separable(10);
    let arch = lr(&s.train);
    let config = TrainConfig::default();
    let base = train(&arch, &s.train, &config, None).unwrap().evaluate(&s.test).unwrap();
    let budget = PrivacyBudget::new(1e4, 1e-4).unwrap();
    let (m, _) = dpsgd_train(&arch, &s.train, &budget, 1.0, 1.0, &config, &mut Rng::seed_from(0)).unwrap();
    assert!((m.evaluate(&s.test).unwrap() - base).abs() <= 0.05);
}

#[test]
fn mechanisms_are_deterministic() {
    let s = separable(13);
    let arch = lr(&s.train);
    let config = TrainConfig { epochs: 10, ..TrainConfig::default() };
    for kind in MechanismKind::ALL {
        let delta = if kind == MechanismKind::Input { 0.05 } else { 1e-4 };
        let spec = MechanismSpec::new(kind, PrivacyBudget::new(1.0, delta).unwrap());
        let a = fit_private(&arch, &s.train, &config, &spec, &mut Rng::seed_from(2)).unwrap();
        let b = fit_private(&arch, &s.train, &config, &spec, &mut Rng::seed_from(2)).unwrap();
        assert_eq!(a, b);
        let pa = a.predict_proba(s.test.features(), &mut Rng::seed_from(1)).unwrap();
        let pb = b.predict_proba(s.test.features(), &mut Rng::seed_from(1)).unwrap();
        assert_eq!(pa, pb);
    }
}

#[test]
fn objective_and_output_reject_mlp() {
    let s = separable(1);
    let arch = ModelArch::for_dataset(ArchKind::Mlp, &s.train).unwrap();
    for kind in [MechanismKind::Objective, MechanismKind::Output] {
        let spec = MechanismSpec::new(kind, PrivacyBudget::new(1.0, 1e-4).unwrap());
        let err = fit_private(&arch, &s.train, &TrainConfig::default(), &spec, &mut Rng::seed_from(0));
        assert!(matches!(err, Err(Error::Config(_))));
    }
}

#[test]
fn input_lr_infeasible_at_default_delta() {
    let s = separable(1);
    let budget = PrivacyBudget::for_training_set(1.0, s.train.len()).unwrap();
    let r = input_perturb_lr(&s.train, &budget, &TrainConfig::default(), &mut Rng::seed_from(0));
    assert!(matches!(r, Err(Error::Infeasible { .. })));
}

#[test]
fn wide_vote_gap_wins_almost_always() {
    let mut rng = Rng::seed_from(77);
    let wins = (0..10_000)
        .filter(|_| noisy_aggregate(&[30.0, 5.0, 5.0], 1e9, VoteNoise::Laplace, &mut rng).0 == 0)
        .count();
    assert!(wins as f64 / 1e4 >= 0.999);
}

#[test]
fn tie_breaks_to_lowest_class() {
    let mut rng = Rng::seed_from(0);
    assert_eq!(noisy_aggregate(&[10.0, 10.0], 1.0, VoteNoise::Disabled, &mut rng).0, 0);
    assert_eq!(noisy_aggregate(&[3.0, 7.0, 7.0], 1.0, VoteNoise::Disabled, &mut rng).0, 1);
}

#[test]
fn noisy_probabilities_are_floored_and_normalized() {
    let mut rng = Rng::seed_from(5);
    for _ in 0..1000 {
        let (w, p) = noisy_aggregate(&[1.0, 0.0, 0.0], 0.5, VoteNoise::Laplace, &mut rng);
        assert!(p.iter().all(|&v| v >= 0.0));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert_eq!(argmax(&p), w);
    }
}

#[test]
fn noise_free_ensemble_equals_majority_vote() {
    let s = separable(14);
    let arch = lr(&s.train);
    let config = TrainConfig { epochs: 20, ..TrainConfig::default() };
    let budget = PrivacyBudget::new(1.0, 1e-4).unwrap();
    let m = prediction_perturb(&arch, &s.train, &budget, 30, &config, VoteNoise::Disabled).unwrap();
    let Underlying::Ensemble(ens) = &m.underlying else { panic!() };
    assert_eq!(ens.teachers().len(), 30);

    let mut rng = Rng::seed_from(1);
    let queries = Matrix::from_rows(
        &(0..100).map(|_| (0..10).map(|_| (rng.uniform() - 0.5) * 0.6).collect()).collect::<Vec<_>>(),
    )
    .unwrap();
    let votes = ens.votes(&queries).unwrap();
    let proba = m.predict_proba(&queries, &mut rng).unwrap();
    for q in 0..100 {
        assert_eq!(votes.row(q).iter().sum::<f64>(), 30.0);
        let mut counts = [0usize; 2];
        for t in ens.teachers() {
            counts[argmax(t.predict_proba(&queries.select_rows(&[q])).unwrap().row(0))] += 1;
        }
        let brute = if counts[1] > counts[0] { 1 } else { 0 };
        assert_eq!(argmax(proba.row(q)), brute);
    }
}

#[test]
fn shards_are_disjoint_and_stratified() {
    let labels: Vec<usize> = (0..500).map(|i| i % 2).collect();
    let shards = shard_indices(&labels, 2, 30).unwrap();
    let mut seen = vec![false; 500];
    for shard in &shards {
        let ones = shard.iter().filter(|&&i| labels[i] == 1).count();
        assert!(ones >= 2 && shard.len() - ones >= 2);
        for &i in shard {
            assert!(!seen[i]);
            seen[i] = true;
        }
    }
    assert!(seen.iter().all(|&s| s));
}

#[test]
fn too_many_teachers_is_a_config_error() {
    let data = synthesize(&SyntheticSpec { n: 40, d: 3, class_count: 2, class_separation: 2.0, seed: 0 }).unwrap();
    let arch = lr(&data);
    let budget = PrivacyBudget::new(1.0, 1e-3).unwrap();
    let r = prediction_perturb(&arch, &data, &budget, 30, &TrainConfig::default(), VoteNoise::Laplace);
    assert!(matches!(r, Err(Error::Config(_))));
}

#[test]
fn oracle_only_exposes_probabilities() {
    let s = separable(2);
    let arch = lr(&s.train);
    let spec = MechanismSpec::new(MechanismKind::Prediction, PrivacyBudget::new(1.0, 1e-4).unwrap());
    let config = TrainConfig { epochs: 5, ..TrainConfig::default() };
    let m = fit_private(&arch, &s.train, &config, &spec, &mut Rng::seed_from(0)).unwrap();
    let mut api = m.oracle(Rng::seed_from(3));
    assert_eq!(api.class_count(), 2);
    let p = api.query(s.test.features()).unwrap();
    for row in p.iter_rows() {
        assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }
}

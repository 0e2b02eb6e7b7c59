//! The epsilon sweep: baselines, shadows and attack forest once per seed, then
//! one private model per (mechanism, epsilon) cell.

use std::time::Instant;

use dputil_core::attack::{AttackOutcome, Attacker};
use dputil_core::dataset::{make_split, normalize_rows_to_unit_ball, synthesize, Dataset};
use dputil_core::learners::{evaluate_api, train, ArchKind, ModelArch, TrainConfig};
use dputil_core::mechanisms::{default_delta, fit_private, PrivacyBudget, PrivateModel};
use dputil_core::metrics::MetricRow;
use dputil_core::numkit::{stream_seed, Rng, GENERATOR_NAME};
use rayon::prelude::*;

use crate::config::{DatasetSource, ExperimentConfig, MechanismSettings};
use crate::error::{HarnessError, Result};
use crate::ingest::load_csv;
use crate::results::{Failure, ResultRow, RunMeta, SweepResult};

/// Loads or synthesizes the configured dataset. Logistic regression data is
/// scaled into the unit ball, which objective and output perturbation need.
pub fn load_dataset(config: &ExperimentConfig) -> Result<Dataset> {
    let data = match &config.dataset {
        DatasetSource::Csv { path, label_column, class_count } => load_csv(path, label_column, *class_count)?,
        DatasetSource::Synthetic(spec) => synthesize(spec)?,
    };
    Ok(match config.arch {
        ArchKind::Lr => normalize_rows_to_unit_ball(&data),
        ArchKind::Mlp => data,
    })
}

/// Everything a seed's cells share.
pub struct SeedContext {
    pub seed: u64,
    pub arch: ModelArch,
    pub train_config: TrainConfig,
    pub target_train: Dataset,
    pub target_test: Dataset,
    pub acc_nonprivate: f64,
    pub attacker: Attacker,
}

impl SeedContext {
    /// Splits, trains the non-private baseline and prepares the attacker.
    pub fn prepare(config: &ExperimentConfig, data: &Dataset, seed: u64) -> Result<Self> {
        let plan = make_split(data, seed)?;
        plan.check_partition(data.len())?;
        let target_train = data.subset(&plan.target_train);
        let target_test = data.subset(&plan.target_test);
        let pool = data.subset(&plan.shadow_pool);
        let arch = ModelArch::for_dataset(config.arch, data)?;
        let train_config = config.train.with_seed(stream_seed(seed, "train"));
        let baseline = train(&arch, &target_train, &train_config, None)?;
        let acc_nonprivate = baseline.evaluate(&target_test)?;
        let attacker = Attacker::prepare(&pool, &arch, &train_config, &config.attack, stream_seed(seed, "attack"))?;
        Ok(SeedContext {
            seed,
            arch,
            train_config,
            target_train,
            target_test,
            acc_nonprivate,
            attacker,
        })
    }

    fn cell_label(settings: &MechanismSettings, epsilon: f64) -> String {
        format!("{}@{:e}", settings.kind.as_str(), epsilon)
    }

    pub fn budget(&self, settings: &MechanismSettings, epsilon: f64) -> Result<PrivacyBudget> {
        let delta = settings.delta.unwrap_or_else(|| default_delta(self.target_train.len()));
        Ok(PrivacyBudget::new(epsilon, delta)?)
    }

    /// Trains one private model.
    pub fn fit(&self, settings: &MechanismSettings, epsilon: f64) -> Result<PrivateModel> {
        let spec = settings.spec(self.budget(settings, epsilon)?);
        let label = Self::cell_label(settings, epsilon);
        let mut rng = Rng::derive(stream_seed(self.seed, "mechanism"), &label);
        Ok(fit_private(&self.arch, &self.target_train, &self.train_config, &spec, &mut rng)?)
    }

    /// Test accuracy and attack outcome of a private model. Accuracy uses
    /// `target_test` only; the attack sees `target_train` as members and
    /// `target_test` as non-members, never shadow data.
    pub fn assess(&self, model: &PrivateModel, label: &str) -> Result<(f64, AttackOutcome)> {
        let queries = stream_seed(self.seed, "queries");
        let mut api = model.oracle(Rng::derive(queries, &format!("{label}/accuracy")));
        let acc = evaluate_api(&mut api, &self.target_test)?;
        let mut api = model.oracle(Rng::derive(queries, &format!("{label}/attack")));
        let outcome = self.attacker.evaluate(&mut api, &self.target_train, &self.target_test)?;
        Ok((acc, outcome))
    }

    pub fn run_cell(&self, settings: &MechanismSettings, epsilon: f64) -> Result<MetricRow> {
        let model = self.fit(settings, epsilon)?;
        let (acc, outcome) = self.assess(&model, &Self::cell_label(settings, epsilon))?;
        Ok(MetricRow::compute(self.acc_nonprivate, acc, &outcome)?)
    }
}

/// Runs the whole grid. Cells run in parallel; row order is seeds, then
/// mechanisms in config order, then epsilons in grid order. A cell that fails
/// becomes a failed row; a seed whose baseline or shadows fail fails all of
/// its rows.
pub fn run_sweep(config: &ExperimentConfig) -> Result<SweepResult> {
    config.validate()?;
    let started = Instant::now();
    let data = load_dataset(config)?;
    let settings = config.mechanism_settings();

    let contexts: Vec<std::result::Result<SeedContext, String>> = config
        .seeds
        .par_iter()
        .map(|&seed| SeedContext::prepare(config, &data, seed).map_err(|e| e.to_string()))
        .collect();

    let cells: Vec<(usize, &MechanismSettings, f64)> = (0..contexts.len())
        .flat_map(|s| settings.iter().flat_map(move |m| config.epsilons.iter().map(move |&e| (s, m, e))))
        .collect();
    let outcomes: Vec<std::result::Result<MetricRow, String>> = cells
        .par_iter()
        .map(|&(s, m, e)| match &contexts[s] {
            Ok(ctx) => ctx.run_cell(m, e).map_err(|err| err.to_string()),
            Err(err) => Err(format!("seed setup failed: {err}")),
        })
        .collect();

    let mut rows = Vec::with_capacity(cells.len());
    let mut failures = Vec::new();
    for ((s, m, e), outcome) in cells.iter().zip(outcomes) {
        let seed = config.seeds[*s];
        let metrics = match outcome {
            Ok(row) => Some(row),
            Err(error) => {
                failures.push(Failure { mechanism: m.kind, epsilon: *e, seed, error });
                None
            }
        };
        rows.push(ResultRow {
            dataset: data.name().to_owned(),
            arch: config.arch,
            mechanism: m.kind,
            epsilon: *e,
            seed,
            metrics,
        });
    }

    Ok(SweepResult {
        meta: RunMeta {
            dataset: data.name().to_owned(),
            arch: config.arch,
            generator: GENERATOR_NAME.to_owned(),
            version: env!("CARGO_PKG_VERSION").to_owned(),
            wall_time_secs: started.elapsed().as_secs_f64(),
            failures,
        },
        rows,
    })
}

/// Checks that every successful row of a (dataset, arch, seed) group carries
/// the same baseline accuracy.
pub fn check_baseline_reuse(result: &SweepResult) -> Result<()> {
    let mut seen: Vec<((&str, ArchKind, u64), f64)> = Vec::new();
    for row in &result.rows {
        let Some(m) = &row.metrics else { continue };
        let key = (row.dataset.as_str(), row.arch, row.seed);
        match seen.iter().find(|(k, _)| *k == key) {
            Some((_, acc)) if *acc != m.acc_nonprivate => {
                return Err(HarnessError::Config(format!(
                    "seed {} has two baseline accuracies ({acc} and {})",
                    row.seed, m.acc_nonprivate
                )))
            }
            Some(_) => {}
            None => seen.push((key, m.acc_nonprivate)),
        }
    }
    Ok(())
}

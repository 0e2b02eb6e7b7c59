//! Black-box membership inference with shadow models.
//!
//! Shadows are trained on the attacker's own pool, each on a fresh random
//! half. Their outputs on their own training half (members) and held-out
//! half (non-members) train a random forest, which is then pointed at the
//! target through [`PredictionApi`]: the attack only ever sees probability
//! vectors.

mod forest;

use alloc::vec::Vec;

use crate::dataset::Dataset;
use crate::learners::{train, Model, ModelArch, PredictionApi, TrainConfig};
use crate::numkit::{stream_seed, Matrix, Rng};
use crate::{Error, Result};

pub use forest::{fit_forest, ForestClassifier, ForestParams, MaxFeatures, Tree};

/// Shadow models used by default.
pub const DEFAULT_SHADOWS: usize = 10;

/// Trained shadows with their index halves into the pool.
#[derive(Debug, Clone, PartialEq)]
pub struct ShadowEnsemble {
    pool: Dataset,
    models: Vec<Model>,
    splits: Vec<(Vec<usize>, Vec<usize>)>,
    seed: u64,
}

impl ShadowEnsemble {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn models(&self) -> &[Model] {
        &self.models
    }

    /// `(train, test)` pool indices of each shadow.
    pub fn splits(&self) -> &[(Vec<usize>, Vec<usize>)] {
        &self.splits
    }

    pub fn pool(&self) -> &Dataset {
        &self.pool
    }
}

/// Trains `count` shadows of `arch`. Shadow `i` shuffles the whole pool with
/// its own derived stream and trains on the first half; the rest is its
/// held-out half. Training uses `config` with a per-shadow seed.
pub fn train_shadows(
    pool: &Dataset,
    arch: &ModelArch,
    config: &TrainConfig,
    count: usize,
    seed: u64,
) -> Result<ShadowEnsemble> {
    if count == 0 {
        return Err(Error::Config("need at least one shadow model".into()));
    }
    if pool.len() < 2 {
        return Err(Error::Config(alloc::format!(
            "shadow pool has {} rows, need at least 2",
            pool.len()
        )));
    }
    let n = pool.len();
    let mut models = Vec::with_capacity(count);
    let mut splits = Vec::with_capacity(count);
    for i in 0..count {
        let label = alloc::format!("shadow-{i}");
        let mut order: Vec<usize> = (0..n).collect();
        Rng::derive(seed, &label).shuffle(&mut order);
        let test = order.split_off(n / 2);
        let model = train(arch, &pool.subset(&order), &config.with_seed(stream_seed(seed, &label)), None)?;
        models.push(model);
        splits.push((order, test));
    }
    Ok(ShadowEnsemble {
        pool: pool.clone(),
        models,
        splits,
        seed,
    })
}

/// One attack-model example.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackRecord {
    pub features: Vec<f64>,
    pub member: bool,
}

/// Probability row sorted descending, followed by the one-hot true label.
pub fn attack_features(proba: &[f64], label: usize) -> Result<Vec<f64>> {
    let c = proba.len();
    if label >= c {
        return Err(Error::shape("attack_features", alloc::format!("label {label} with {c} classes")));
    }
    let sum: f64 = proba.iter().sum();
    if proba.iter().any(|&p| !(p >= 0.0)) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::Precondition(alloc::format!(
            "prediction row is not a probability vector (sum {sum})"
        )));
    }
    let mut out = proba.to_vec();
    out.sort_by(|a, b| b.total_cmp(a));
    out.extend((0..c).map(|j| if j == label { 1.0 } else { 0.0 }));
    Ok(out)
}

fn records_for(api: &mut dyn PredictionApi, data: &Dataset, rows: &[usize], member: bool) -> Result<Vec<AttackRecord>> {
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let proba = api.query(&data.features().select_rows(rows))?;
    rows.iter()
        .enumerate()
        .map(|(k, &i)| {
            Ok(AttackRecord {
                features: attack_features(proba.row(k), data.labels()[i])?,
                member,
            })
        })
        .collect()
}

/// Member records from each shadow's training half, non-member records from
/// its held-out half. Each shadow contributes equally many of both: the
/// larger side is down-sampled at random.
pub fn build_attack_set(ensemble: &ShadowEnsemble) -> Result<Vec<AttackRecord>> {
    let mut out = Vec::new();
    for (i, (model, (train_rows, test_rows))) in ensemble.models.iter().zip(&ensemble.splits).enumerate() {
        let keep = train_rows.len().min(test_rows.len());
        if keep == 0 {
            continue;
        }
        let mut rng = Rng::derive(ensemble.seed, &alloc::format!("balance-{i}"));
        let mut pick = |rows: &[usize]| {
            let mut rows = rows.to_vec();
            if rows.len() > keep {
                rng.shuffle(&mut rows);
                rows.truncate(keep);
            }
            rows
        };
        let members = pick(train_rows);
        let non_members = pick(test_rows);
        let mut api = model.clone();
        out.extend(records_for(&mut api, &ensemble.pool, &members, true)?);
        out.extend(records_for(&mut api, &ensemble.pool, &non_members, false)?);
    }
    Ok(out)
}

/// Anything that labels an attack feature vector as member (`true`).
pub trait MembershipClassifier {
    fn is_member(&self, features: &[f64]) -> bool;
}

impl MembershipClassifier for ForestClassifier {
    fn is_member(&self, features: &[f64]) -> bool {
        self.predict(features)
    }
}

pub fn fit_attack_forest(records: &[AttackRecord], params: &ForestParams, seed: u64) -> Result<ForestClassifier> {
    let x: Vec<Vec<f64>> = records.iter().map(|r| r.features.clone()).collect();
    let y: Vec<bool> = records.iter().map(|r| r.member).collect();
    fit_forest(&x, &y, params, seed)
}

/// Share of `records` the classifier labels correctly.
pub fn attack_accuracy(classifier: &dyn MembershipClassifier, records: &[AttackRecord]) -> f64 {
    if records.is_empty() {
        return 0.0;
    }
    let hits = records
        .iter()
        .filter(|r| classifier.is_member(&r.features) == r.member)
        .count();
    hits as f64 / records.len() as f64
}

/// Confusion counts of one attack against one target.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AttackOutcome {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[cfg_attr(feature = "serde", serde(rename = "fn"))]
    pub fn_: usize,
    /// Verdict for each target training row, in order.
    pub member_flags: Vec<bool>,
}

impl AttackOutcome {
    pub fn members(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn non_members(&self) -> usize {
        self.fp + self.tn
    }
}

/// Queries `target` once on every row of both sets and counts verdicts.
pub fn evaluate_attack(
    classifier: &dyn MembershipClassifier,
    target: &mut dyn PredictionApi,
    target_train: &Dataset,
    target_test: &Dataset,
) -> Result<AttackOutcome> {
    if target_train.len() != target_test.len() {
        return Err(Error::Precondition(alloc::format!(
            "member and non-member sets must be the same size ({} vs {})",
            target_train.len(),
            target_test.len()
        )));
    }
    let flags = |api: &mut dyn PredictionApi, data: &Dataset| -> Result<Vec<bool>> {
        if data.is_empty() {
            return Ok(Vec::new());
        }
        let proba: Matrix = api.query(data.features())?;
        proba
            .iter_rows()
            .zip(data.labels())
            .map(|(row, &y)| Ok(classifier.is_member(&attack_features(row, y)?)))
            .collect()
    };
    let member_flags = flags(target, target_train)?;
    let non_member_flags = flags(target, target_test)?;
    let tp = member_flags.iter().filter(|&&f| f).count();
    let fp = non_member_flags.iter().filter(|&&f| f).count();
    Ok(AttackOutcome {
        tp,
        fn_: member_flags.len() - tp,
        fp,
        tn: non_member_flags.len() - fp,
        member_flags,
    })
}

/// Attack settings shared across a sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct AttackConfig {
    pub shadows: usize,
    pub forest: ForestParams,
}

impl Default for AttackConfig {
    fn default() -> Self {
        AttackConfig {
            shadows: DEFAULT_SHADOWS,
            forest: ForestParams::default(),
        }
    }
}

/// A fitted attack: the shadows and the forest trained on their records.
#[derive(Debug, Clone)]
pub struct Attacker {
    pub shadows: ShadowEnsemble,
    pub forest: ForestClassifier,
}

impl Attacker {
    /// Trains shadows on `pool` and the forest on their records.
    pub fn prepare(
        pool: &Dataset,
        arch: &ModelArch,
        config: &TrainConfig,
        attack: &AttackConfig,
        seed: u64,
    ) -> Result<Self> {
        let shadows = train_shadows(pool, arch, config, attack.shadows, stream_seed(seed, "shadows"))?;
        let records = build_attack_set(&shadows)?;
        let forest = fit_attack_forest(&records, &attack.forest, stream_seed(seed, "forest"))?;
        Ok(Attacker { shadows, forest })
    }

    pub fn evaluate(
        &self,
        target: &mut dyn PredictionApi,
        target_train: &Dataset,
        target_test: &Dataset,
    ) -> Result<AttackOutcome> {
        evaluate_attack(&self.forest, target, target_train, target_test)
    }
}

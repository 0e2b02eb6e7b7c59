use alloc::format;
use alloc::vec::Vec;

use super::{add_l2, mlp, Adam, ArchKind, Model, ModelArch, Provenance, TrainConfig};
use crate::dataset::Dataset;
use crate::numkit::{Matrix, Rng};
use crate::{Error, Result};

/// Turns the per-example gradients of one mini-batch into the data-term
/// update direction. The trainer adds the l2 term afterwards.
pub trait GradientTransform {
    fn transform(&mut self, per_example: &Matrix, batch: &[usize], step: usize) -> Result<Vec<f64>>;
}

/// The plain mean of the per-example rows; what training uses without a hook.
#[derive(Debug, Clone, Copy, Default)]
pub struct MeanGradient;

impl GradientTransform for MeanGradient {
    fn transform(&mut self, per_example: &Matrix, _batch: &[usize], _step: usize) -> Result<Vec<f64>> {
        Ok(per_example.column_means())
    }
}

/// Initial parameters: zeros for logistic regression, fan-in scaled uniform
/// `U(-sqrt(6 / fan_in), sqrt(6 / fan_in))` weights and zero biases for the MLP.
pub fn init_params(arch: &ModelArch, seed: u64) -> Vec<f64> {
    let p = arch.param_count();
    match arch.kind {
        ArchKind::Lr => alloc::vec![0.0; p],
        ArchKind::Mlp => {
            let mut rng = Rng::derive(seed, "init");
            (0..p)
                .map(|i| match mlp::fan_in(arch, i) {
                    Some(fan) => {
                        let bound = libm::sqrt(6.0 / fan as f64);
                        (2.0 * rng.uniform() - 1.0) * bound
                    }
                    None => 0.0,
                })
                .collect()
        }
    }
}

/// Adam over shuffled mini-batches for `config.epochs` passes. The final
/// short batch of each epoch is kept.
pub fn train(
    arch: &ModelArch,
    data: &Dataset,
    config: &TrainConfig,
    hook: Option<&mut dyn GradientTransform>,
) -> Result<Model> {
    config.validate()?;
    if data.is_empty() {
        return Err(Error::param("data", "training slice is empty"));
    }
    if data.dim() != arch.input_dim || data.class_count() != arch.class_count {
        return Err(Error::shape(
            "train",
            format!(
                "data is {}-dim with {} classes, architecture is {}-dim with {}",
                data.dim(),
                data.class_count(),
                arch.input_dim,
                arch.class_count
            ),
        ));
    }
    let mut default_hook = MeanGradient;
    let hook: &mut dyn GradientTransform = match hook {
        Some(h) => h,
        None => &mut default_hook,
    };

    let n = data.len();
    let batch = config.effective_batch(n);
    let p = arch.param_count();
    let bias = arch.bias_mask();
    let mut params = init_params(arch, config.seed);
    let mut adam = Adam::new(config.adam, config.learning_rate, p);
    let mut shuffle = Rng::derive(config.seed, "shuffle");
    let mut order: Vec<usize> = (0..n).collect();
    let mut per_example = Matrix::zeros(batch, p);
    let mut step = 0;

    for _ in 0..config.epochs {
        shuffle.shuffle(&mut order);
        for rows in order.chunks(batch) {
            if per_example.rows() != rows.len() {
                per_example = Matrix::zeros(rows.len(), p);
            }
            for (k, &i) in rows.iter().enumerate() {
                let loss = arch.example_loss_grad(
                    &params,
                    data.features().row(i),
                    data.labels()[i],
                    per_example.row_mut(k),
                );
                if !loss.is_finite() {
                    return Err(Error::NonFiniteLoss { row: i });
                }
            }
            let mut direction = hook.transform(&per_example, rows, step)?;
            if direction.len() != p {
                return Err(Error::shape(
                    "gradient transform",
                    format!("returned {} entries, model has {p}", direction.len()),
                ));
            }
            add_l2(&mut direction, &params, &bias, config.lambda);
            adam.step(&mut params, &direction);
            if params.iter().any(|v| !v.is_finite()) {
                return Err(Error::Divergence { step });
            }
            step += 1;
        }
    }

    Model::new(
        *arch,
        params,
        Provenance {
            config: Some(config.clone()),
            mechanism: "non-private".into(),
        },
    )
}

//! Logistic regression. Two classes use one sigmoid unit with parameters
//! `[w, b]`; more classes use softmax rows `[w_k, b_k]` for each class `k`.

use alloc::vec::Vec;

use super::{sigmoid, softmax_in_place, softplus, ModelArch};
use crate::numkit::dot;

fn rows(arch: &ModelArch) -> usize {
    if arch.class_count == 2 {
        1
    } else {
        arch.class_count
    }
}

pub(super) fn param_count(arch: &ModelArch) -> usize {
    rows(arch) * (arch.input_dim + 1)
}

pub(super) fn bias_mask(arch: &ModelArch) -> Vec<bool> {
    let stride = arch.input_dim + 1;
    (0..param_count(arch)).map(|i| i % stride == arch.input_dim).collect()
}

#[inline]
fn score(params: &[f64], d: usize, k: usize, x: &[f64]) -> f64 {
    let row = &params[k * (d + 1)..(k + 1) * (d + 1)];
    dot(&row[..d], x) + row[d]
}

pub(super) fn loss_grad(arch: &ModelArch, params: &[f64], x: &[f64], y: usize, grad: &mut [f64]) -> f64 {
    let d = arch.input_dim;
    if arch.class_count == 2 {
        let s = score(params, d, 0, x);
        let target = y as f64;
        let residual = sigmoid(s) - target;
        for (g, &xi) in grad[..d].iter_mut().zip(x) {
            *g = residual * xi;
        }
        grad[d] = residual;
        // -log p(y): softplus(-s) for y=1, softplus(s) for y=0
        if y == 1 {
            softplus(-s)
        } else {
            softplus(s)
        }
    } else {
        let c = arch.class_count;
        let mut probs: Vec<f64> = (0..c).map(|k| score(params, d, k, x)).collect();
        let sy = probs[y];
        let lse = softmax_in_place(&mut probs);
        for k in 0..c {
            let residual = probs[k] - if k == y { 1.0 } else { 0.0 };
            let g = &mut grad[k * (d + 1)..(k + 1) * (d + 1)];
            for (gi, &xi) in g[..d].iter_mut().zip(x) {
                *gi = residual * xi;
            }
            g[d] = residual;
        }
        lse - sy
    }
}

pub(super) fn proba(arch: &ModelArch, params: &[f64], x: &[f64], out: &mut [f64]) {
    let d = arch.input_dim;
    if arch.class_count == 2 {
        let p1 = sigmoid(score(params, d, 0, x));
        out[0] = 1.0 - p1;
        out[1] = p1;
    } else {
        for (k, o) in out.iter_mut().enumerate() {
            *o = score(params, d, k, x);
        }
        softmax_in_place(out);
    }
}

//! `d -> 64 -> 64 -> c` perceptron with ReLU hidden units and softmax output.
//!
//! Flat layout: `W1 (h1 x d)`, `b1`, `W2 (h2 x h1)`, `b2`, `W3 (c x h2)`, `b3`,
//! all row-major.

use alloc::vec;
use alloc::vec::Vec;

use super::{softmax_in_place, ModelArch, MLP_HIDDEN};
use crate::numkit::dot;

struct Layout {
    d: usize,
    h1: usize,
    h2: usize,
    c: usize,
}

impl Layout {
    fn of(arch: &ModelArch) -> Self {
        Layout {
            d: arch.input_dim,
            h1: MLP_HIDDEN[0],
            h2: MLP_HIDDEN[1],
            c: arch.class_count,
        }
    }

    fn w1(&self) -> usize {
        0
    }
    fn b1(&self) -> usize {
        self.h1 * self.d
    }
    fn w2(&self) -> usize {
        self.b1() + self.h1
    }
    fn b2(&self) -> usize {
        self.w2() + self.h2 * self.h1
    }
    fn w3(&self) -> usize {
        self.b2() + self.h2
    }
    fn b3(&self) -> usize {
        self.w3() + self.c * self.h2
    }
    fn total(&self) -> usize {
        self.b3() + self.c
    }
}

pub(super) fn param_count(arch: &ModelArch) -> usize {
    Layout::of(arch).total()
}

pub(super) fn bias_mask(arch: &ModelArch) -> Vec<bool> {
    let l = Layout::of(arch);
    let mut mask = vec![false; l.total()];
    for range in [l.b1()..l.w2(), l.b2()..l.w3(), l.b3()..l.total()] {
        mask[range].iter_mut().for_each(|m| *m = true);
    }
    mask
}

/// Fan-in of the layer each weight belongs to, `None` for biases.
pub(super) fn fan_in(arch: &ModelArch, idx: usize) -> Option<usize> {
    let l = Layout::of(arch);
    if idx < l.b1() {
        Some(l.d)
    } else if (l.w2()..l.b2()).contains(&idx) {
        Some(l.h1)
    } else if (l.w3()..l.b3()).contains(&idx) {
        Some(l.h2)
    } else {
        None
    }
}

fn dense(w: &[f64], b: &[f64], x: &[f64], out: &mut [f64]) {
    let n_in = x.len();
    for (j, o) in out.iter_mut().enumerate() {
        *o = dot(&w[j * n_in..(j + 1) * n_in], x) + b[j];
    }
}

struct Forward {
    z1: Vec<f64>,
    a1: Vec<f64>,
    z2: Vec<f64>,
    a2: Vec<f64>,
    out: Vec<f64>,
}

fn forward(l: &Layout, p: &[f64], x: &[f64]) -> Forward {
    let mut z1 = vec![0.0; l.h1];
    dense(&p[l.w1()..l.b1()], &p[l.b1()..l.w2()], x, &mut z1);
    let a1: Vec<f64> = z1.iter().map(|&v| v.max(0.0)).collect();
    let mut z2 = vec![0.0; l.h2];
    dense(&p[l.w2()..l.b2()], &p[l.b2()..l.w3()], &a1, &mut z2);
    let a2: Vec<f64> = z2.iter().map(|&v| v.max(0.0)).collect();
    let mut out = vec![0.0; l.c];
    dense(&p[l.w3()..l.b3()], &p[l.b3()..l.total()], &a2, &mut out);
    Forward { z1, a1, z2, a2, out }
}

pub(super) fn proba(arch: &ModelArch, params: &[f64], x: &[f64], out: &mut [f64]) {
    let l = Layout::of(arch);
    let f = forward(&l, params, x);
    out.copy_from_slice(&f.out);
    softmax_in_place(out);
}

pub(super) fn loss_grad(arch: &ModelArch, params: &[f64], x: &[f64], y: usize, grad: &mut [f64]) -> f64 {
    let l = Layout::of(arch);
    let Forward { z1, a1, z2, a2, mut out } = forward(&l, params, x);
    let sy = out[y];
    let lse = softmax_in_place(&mut out);
    let loss = lse - sy;

    // output layer: dL/dlogits = p - onehot(y)
    let delta3: Vec<f64> = out
        .iter()
        .enumerate()
        .map(|(k, &p)| p - if k == y { 1.0 } else { 0.0 })
        .collect();
    outer(&delta3, &a2, &mut grad[l.w3()..l.b3()]);
    grad[l.b3()..l.total()].copy_from_slice(&delta3);

    let w3 = &params[l.w3()..l.b3()];
    let mut delta2 = vec![0.0; l.h2];
    for (k, &dk) in delta3.iter().enumerate() {
        for (j, d2) in delta2.iter_mut().enumerate() {
            *d2 += w3[k * l.h2 + j] * dk;
        }
    }
    for (d2, &z) in delta2.iter_mut().zip(&z2) {
        if z <= 0.0 {
            *d2 = 0.0;
        }
    }
    outer(&delta2, &a1, &mut grad[l.w2()..l.b2()]);
    grad[l.b2()..l.w3()].copy_from_slice(&delta2);

    let w2 = &params[l.w2()..l.b2()];
    let mut delta1 = vec![0.0; l.h1];
    for (k, &dk) in delta2.iter().enumerate() {
        if dk == 0.0 {
            continue;
        }
        for (j, d1) in delta1.iter_mut().enumerate() {
            *d1 += w2[k * l.h1 + j] * dk;
        }
    }
    for (d1, &z) in delta1.iter_mut().zip(&z1) {
        if z <= 0.0 {
            *d1 = 0.0;
        }
    }
    outer(&delta1, x, &mut grad[l.w1()..l.b1()]);
    grad[l.b1()..l.w2()].copy_from_slice(&delta1);
    loss
}

fn outer(a: &[f64], b: &[f64], out: &mut [f64]) {
    let n = b.len();
    for (i, &ai) in a.iter().enumerate() {
        for (o, &bj) in out[i * n..(i + 1) * n].iter_mut().zip(b) {
            *o = ai * bj;
        }
    }
}

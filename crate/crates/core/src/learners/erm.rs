//! Exact minimizer for binary l2-regularized logistic ERM with an optional
//! linear term, used by objective and output perturbation.
//!
//! Minimizes `(1/n) sum softplus(-y_i <theta, [x_i, 1]>) + (lambda/2)|theta|^2
//! + <b, theta> / n` over `theta = [w, bias]` with labels `y_i` in {-1, +1}.
//! The bias is regularized here: with an unregularized bias a large linear
//! term makes the objective unbounded below.
//!
//! The problem is strongly convex for `lambda > 0`, so damped Newton with an
//! Armijo backtracking search converges to the unique optimum.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::{sigmoid, softplus};
use crate::numkit::{dot, l2_norm, Matrix};
use crate::{Error, Result};

/// Gradient-norm target of the solver.
pub const ERM_GRADIENT_TOLERANCE: f64 = 1e-9;
const MAX_ITERATIONS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct ErmSolution {
    /// `[w, bias]`.
    pub params: Vec<f64>,
    pub gradient_norm: f64,
    pub iterations: usize,
}

struct Problem<'a> {
    x: &'a Matrix,
    y: &'a [f64],
    lambda: f64,
    linear: Option<&'a [f64]>,
}

impl Problem<'_> {
    fn dim(&self) -> usize {
        self.x.cols() + 1
    }

    fn margin(&self, theta: &[f64], i: usize) -> f64 {
        let d = self.x.cols();
        self.y[i] * (dot(&theta[..d], self.x.row(i)) + theta[d])
    }

    fn objective(&self, theta: &[f64]) -> f64 {
        let n = self.x.rows() as f64;
        let data: f64 = (0..self.x.rows()).map(|i| softplus(-self.margin(theta, i))).sum::<f64>() / n;
        let reg = 0.5 * self.lambda * dot(theta, theta);
        let lin = self.linear.map_or(0.0, |b| dot(b, theta) / n);
        data + reg + lin
    }

    fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let d = self.x.cols();
        let n = self.x.rows() as f64;
        let mut g = vec![0.0; d + 1];
        for i in 0..self.x.rows() {
            // d/ds softplus(-y s) = -y sigmoid(-y s)
            let coef = -self.y[i] * sigmoid(-self.margin(theta, i));
            for (gj, &xj) in g[..d].iter_mut().zip(self.x.row(i)) {
                *gj += coef * xj;
            }
            g[d] += coef;
        }
        for (gj, &t) in g.iter_mut().zip(theta) {
            *gj = *gj / n + self.lambda * t;
        }
        if let Some(b) = self.linear {
            for (gj, &bj) in g.iter_mut().zip(b) {
                *gj += bj / n;
            }
        }
        g
    }

    fn hessian(&self, theta: &[f64]) -> Matrix {
        let d = self.x.cols();
        let p = d + 1;
        let n = self.x.rows() as f64;
        let mut h = Matrix::zeros(p, p);
        let mut xt = vec![1.0; p];
        for i in 0..self.x.rows() {
            xt[..d].copy_from_slice(self.x.row(i));
            let s = sigmoid(self.margin(theta, i));
            let w = s * (1.0 - s) / n;
            if w == 0.0 {
                continue;
            }
            let hs = h.as_mut_slice();
            for a in 0..p {
                let wa = w * xt[a];
                for b in 0..=a {
                    hs[a * p + b] += wa * xt[b];
                }
            }
        }
        let hs = h.as_mut_slice();
        for a in 0..p {
            hs[a * p + a] += self.lambda;
            for b in 0..a {
                hs[b * p + a] = hs[a * p + b];
            }
        }
        h
    }
}

/// Gradient of the ERM objective at `theta`.
pub fn logistic_erm_gradient(
    features: &Matrix,
    signs: &[f64],
    lambda: f64,
    linear: Option<&[f64]>,
    theta: &[f64],
) -> Vec<f64> {
    Problem {
        x: features,
        y: signs,
        lambda,
        linear,
    }
    .gradient(theta)
}

/// Solves the ERM problem from `theta = 0`.
pub fn solve_logistic_erm(
    features: &Matrix,
    signs: &[f64],
    lambda: f64,
    linear: Option<&[f64]>,
) -> Result<ErmSolution> {
    if features.rows() == 0 || features.rows() != signs.len() {
        return Err(Error::shape(
            "erm",
            format!("{} rows, {} labels", features.rows(), signs.len()),
        ));
    }
    if signs.iter().any(|&y| y != 1.0 && y != -1.0) {
        return Err(Error::param("signs", "labels must be -1 or +1"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::param("lambda", "ERM solver needs lambda > 0"));
    }
    let problem = Problem {
        x: features,
        y: signs,
        lambda,
        linear,
    };
    if let Some(b) = linear {
        if b.len() != problem.dim() {
            return Err(Error::shape("erm", format!("linear term has {} entries, need {}", b.len(), problem.dim())));
        }
    }

    let mut theta = vec![0.0; problem.dim()];
    let mut value = problem.objective(&theta);
    let mut grad = problem.gradient(&theta);
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS && l2_norm(&grad) > ERM_GRADIENT_TOLERANCE {
        iterations += 1;
        let step = cholesky_solve(problem.hessian(&theta), &grad)
            .ok_or_else(|| Error::Precondition("ERM Hessian is not positive definite".into()))?;
        let slope = dot(&grad, &step);
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let candidate: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a - t * s).collect();
            let v = problem.objective(&candidate);
            if v <= value - 1e-4 * t * slope {
                theta = candidate;
                value = v;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        grad = problem.gradient(&theta);
        if !accepted {
            // at the floating-point floor of the objective; one full step on
            // the gradient is all that is left to gain
            let candidate: Vec<f64> = theta.iter().zip(&step).map(|(a, s)| a - s).collect();
            let g = problem.gradient(&candidate);
            if l2_norm(&g) < l2_norm(&grad) {
                theta = candidate;
                grad = g;
            }
            break;
        }
    }
    if theta.iter().any(|v| !v.is_finite()) {
        return Err(Error::Divergence { step: iterations });
    }
    Ok(ErmSolution {
        gradient_norm: l2_norm(&grad),
        params: theta,
        iterations,
    })
}

/// Solves `A x = b` for symmetric positive definite `A`.
fn cholesky_solve(mut a: Matrix, b: &[f64]) -> Option<Vec<f64>> {
    let n = a.rows();
    let l = a.as_mut_slice();
    for j in 0..n {
        let mut diag = l[j * n + j];
        for k in 0..j {
            diag -= l[j * n + k] * l[j * n + k];
        }
        if !(diag > 0.0) {
            return None;
        }
        let diag = libm::sqrt(diag);
        l[j * n + j] = diag;
        for i in j + 1..n {
            let mut v = l[i * n + j];
            for k in 0..j {
                v -= l[i * n + k] * l[j * n + k];
            }
            l[i * n + j] = v / diag;
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i * n + k] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[k * n + i] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    Some(z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_spd_system() {
        let a = Matrix::from_rows(&[vec![4.0, 1.0], vec![1.0, 3.0]]).unwrap();
        let x = cholesky_solve(a, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!((x[0] + 3.0 * x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn pure_quadratic_with_linear_term() {
        // features all zero: J = ln2 + (lambda/2)|t|^2 + <b,t>/n, optimum -b/(n lambda)
        let x = Matrix::zeros(4, 2);
        let y = [1.0, -1.0, 1.0, -1.0];
        let b = [0.4, -0.8, 0.0];
        let sol = solve_logistic_erm(&x, &y, 0.1, Some(&b)).unwrap();
        assert!((sol.params[0] + 1.0).abs() < 1e-9);
        assert!((sol.params[1] - 2.0).abs() < 1e-9);
        assert!(sol.params[2].abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_labels_and_lambda() {
        let x = Matrix::zeros(2, 1);
        assert!(solve_logistic_erm(&x, &[0.0, 1.0], 0.1, None).is_err());
        assert!(solve_logistic_erm(&x, &[1.0, -1.0], 0.0, None).is_err());
    }
}

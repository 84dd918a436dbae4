//! Linear classifiers sharing one representation: a dense weight vector and
//! a bias. Labels are encoded as +1 (flaky) / -1 (non-flaky).

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: vec![0.0; dim],
            bias: 0.0,
        }
    }

    pub fn decision(&self, x: &SparseVec) -> f64 {
        x.dot_dense(&self.weights) + self.bias
    }
}

/// Iteration bookkeeping returned by the iterative trainers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Fit {
    pub iterations: usize,
    pub converged: bool,
}

fn sign(flaky: bool) -> f64 {
    if flaky {
        1.0
    } else {
        -1.0
    }
}

/// Classic online perceptron with a seeded shuffle per epoch; stops after
/// the first epoch without mistakes.
pub(crate) fn perceptron(rows: &[SparseVec], y: &[bool], rate: f64, max_epochs: usize, seed: u64) -> (LinearModel, Fit) {
    let mut model = LinearModel::zeros(rows[0].dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..rows.len()).collect();
    for epoch in 1..=max_epochs {
        order.shuffle(&mut rng);
        let mut mistakes = 0;
        for &i in &order {
            let t = sign(y[i]);
            if t * model.decision(&rows[i]) <= 0.0 {
                rows[i].axpy_into(rate * t, &mut model.weights);
                model.bias += rate * t;
                mistakes += 1;
            }
        }
        if mistakes == 0 {
            return (
                model,
                Fit {
                    iterations: epoch,
                    converged: true,
                },
            );
        }
    }
    (
        model,
        Fit {
            iterations: max_epochs,
            converged: false,
        },
    )
}

/// L2-regularized hinge-loss SVM trained by dual coordinate descent. The
/// bias is handled as an extra constant feature (and is regularized with
/// the weights). Converges when the spread of projected gradients over an
/// epoch falls below `tol`.
pub(crate) fn linear_svm(
    rows: &[SparseVec],
    y: &[bool],
    c: f64,
    max_epochs: usize,
    tol: f64,
    seed: u64,
) -> (LinearModel, Fit) {
    let n = rows.len();
    let mut model = LinearModel::zeros(rows[0].dim());
    let mut alpha = vec![0.0; n];
    let diag: Vec<f64> = rows.iter().map(|r| r.squared_norm() + 1.0).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=max_epochs {
        order.shuffle(&mut rng);
        let (mut pg_max, mut pg_min) = (f64::NEG_INFINITY, f64::INFINITY);
        for &i in &order {
            let t = sign(y[i]);
            let g = t * model.decision(&rows[i]) - 1.0;
            let pg = if alpha[i] == 0.0 {
                g.min(0.0)
            } else if alpha[i] == c {
                g.max(0.0)
            } else {
                g
            };
            pg_max = pg_max.max(pg);
            pg_min = pg_min.min(pg);
            if pg.abs() > 1e-12 {
                let old = alpha[i];
                alpha[i] = (old - g / diag[i]).clamp(0.0, c);
                let delta = (alpha[i] - old) * t;
                if delta != 0.0 {
                    rows[i].axpy_into(delta, &mut model.weights);
                    model.bias += delta;
                }
            }
        }
        if pg_max - pg_min <= tol {
            return (
                model,
                Fit {
                    iterations: epoch,
                    converged: true,
                },
            );
        }
    }
    (
        model,
        Fit {
            iterations: max_epochs,
            converged: false,
        },
    )
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

pub fn logistic(t: f64) -> f64 {
    sigmoid(t)
}

/// `0.5 |w|^2 + C * sum log(1 + exp(-y (w.x + b)))` and its gradient; the
/// bias is not penalized. `theta = [w.., b]`.
fn logistic_objective(rows: &[SparseVec], y: &[bool], c: f64, theta: &[f64], grad: &mut [f64]) -> f64 {
    let dim = theta.len() - 1;
    let (w, b) = theta.split_at(dim);
    let b = b[0];
    grad[..dim].copy_from_slice(w);
    grad[dim] = 0.0;
    let mut f = 0.5 * w.iter().map(|v| v * v).sum::<f64>();
    for (x, &flaky) in rows.iter().zip(y) {
        let t = sign(flaky);
        let z = x.dot_dense(w) + b;
        f += c * softplus(-t * z);
        let coef = -c * t * sigmoid(-t * z);
        x.axpy_into(coef, &mut grad[..dim]);
        grad[dim] += coef;
    }
    f
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Relative objective decrease below which L-BFGS stops (scipy's default
/// `factr * eps`).
const FTOL: f64 = 1e7 * f64::EPSILON;

/// L2-penalized logistic regression fitted with L-BFGS (history 10,
/// backtracking Armijo line search). Converged when the largest gradient
/// component is at most `tol` or the relative objective decrease drops
/// below [`FTOL`].
pub(crate) fn logistic_regression(
    rows: &[SparseVec],
    y: &[bool],
    c: f64,
    tol: f64,
    max_iter: usize,
) -> (LinearModel, Fit) {
    const HISTORY: usize = 10;
    let dim = rows[0].dim();
    let p = dim + 1;
    let mut theta = vec![0.0; p];
    let mut grad = vec![0.0; p];
    let mut f = logistic_objective(rows, y, c, &theta, &mut grad);
    let mut s_hist: Vec<Vec<f64>> = Vec::new();
    let mut y_hist: Vec<Vec<f64>> = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    let gnorm = |g: &[f64]| g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if gnorm(&grad) <= tol {
        converged = true;
    }
    while !converged && iterations < max_iter {
        iterations += 1;
        // Two-loop recursion.
        let mut q = grad.clone();
        let mut alphas = vec![0.0; s_hist.len()];
        for k in (0..s_hist.len()).rev() {
            let rho = 1.0 / dot(&y_hist[k], &s_hist[k]);
            alphas[k] = rho * dot(&s_hist[k], &q);
            q.iter_mut().zip(&y_hist[k]).for_each(|(qi, yi)| *qi -= alphas[k] * yi);
        }
        let gamma = match (s_hist.last(), y_hist.last()) {
            (Some(s), Some(yv)) => dot(s, yv) / dot(yv, yv),
            _ => 1.0 / gnorm(&grad).max(1.0),
        };
        q.iter_mut().for_each(|v| *v *= gamma);
        for k in 0..s_hist.len() {
            let rho = 1.0 / dot(&y_hist[k], &s_hist[k]);
            let beta = rho * dot(&y_hist[k], &q);
            q.iter_mut().zip(&s_hist[k]).for_each(|(qi, si)| *qi += (alphas[k] - beta) * si);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&grad, &dir);
        if slope >= 0.0 {
            s_hist.clear();
            y_hist.clear();
            dir = grad.iter().map(|v| -v / gnorm(&grad).max(1.0)).collect();
            slope = dot(&grad, &dir);
        }

        let mut step = 1.0;
        let mut next = vec![0.0; p];
        let mut next_grad = vec![0.0; p];
        let mut next_f = f;
        let mut accepted = false;
        for _ in 0..40 {
            next.iter_mut()
                .zip(&theta)
                .zip(&dir)
                .for_each(|((n, t), d)| *n = t + step * d);
            next_f = logistic_objective(rows, y, c, &next, &mut next_grad);
            if next_f <= f + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            // No further progress is representable.
            converged = true;
            break;
        }
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = next_grad.iter().zip(&grad).map(|(a, b)| a - b).collect();
        if dot(&s, &yv) > 1e-12 {
            if s_hist.len() == HISTORY {
                s_hist.remove(0);
                y_hist.remove(0);
            }
            s_hist.push(s);
            y_hist.push(yv);
        }
        let decrease = (f - next_f) / f.abs().max(next_f.abs()).max(1.0);
        theta = next;
        grad = next_grad;
        f = next_f;
        if gnorm(&grad) <= tol || decrease <= FTOL {
            converged = true;
        }
    }
    let bias = theta[dim];
    theta.truncate(dim);
    (
        LinearModel { weights: theta, bias },
        Fit { iterations, converged },
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_data() -> (Vec<SparseVec>, Vec<bool>) {
        let xs = [-3.0, -2.0, -1.5, 1.0, 2.0, 4.0];
        let rows = xs.iter().map(|&x| SparseVec::from_dense(&[x, 1.0])).collect();
        (rows, vec![false, false, false, true, true, true])
    }

    #[test]
    fn perceptron_separates() {
        let (rows, y) = line_data();
        let (m, fit) = perceptron(&rows, &y, 1.0, 1000, 3);
        assert!(fit.converged);
        for (r, &t) in rows.iter().zip(&y) {
            assert_eq!(m.decision(r) > 0.0, t);
        }
    }

    #[test]
    fn svm_separates() {
        let (rows, y) = line_data();
        let (m, fit) = linear_svm(&rows, &y, 1.0, 5000, 1e-4, 3);
        assert!(fit.converged);
        for (r, &t) in rows.iter().zip(&y) {
            assert_eq!(m.decision(r) > 0.0, t);
        }
    }

    #[test]
    fn logistic_gradient_matches_finite_differences() {
        let (rows, y) = line_data();
        let theta = [0.3, -0.2, 0.1];
        let mut g = [0.0; 3];
        logistic_objective(&rows, &y, 1.0, &theta, &mut g);
        let h = 1e-6;
        for k in 0..3 {
            let mut up = theta;
            let mut down = theta;
            up[k] += h;
            down[k] -= h;
            let mut scratch = [0.0; 3];
            let fd = (logistic_objective(&rows, &y, 1.0, &up, &mut scratch)
                - logistic_objective(&rows, &y, 1.0, &down, &mut scratch))
                / (2.0 * h);
            assert!((fd - g[k]).abs() < 1e-6, "component {k}: {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn logistic_reaches_stationary_point() {
        let (rows, y) = line_data();
        let (m, fit) = logistic_regression(&rows, &y, 1.0, 1e-6, 1000);
        assert!(fit.converged);
        let mut theta = m.weights.clone();
        theta.push(m.bias);
        let mut g = vec![0.0; 3];
        logistic_objective(&rows, &y, 1.0, &theta, &mut g);
        assert!(g.iter().all(|v| v.abs() < 1e-4), "{g:?}");
        for (r, &t) in rows.iter().zip(&y) {
            assert_eq!(m.decision(r) > 0.0, t);
        }
    }
}

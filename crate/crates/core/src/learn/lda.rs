//! Linear discriminant analysis with a ridge-regularized pooled covariance.
//!
//! The discriminant direction solves `(S + ridge * I) w = mu_flaky - mu_other`
//! where `S` is the pooled within-class covariance. When there are more
//! features than samples the system is solved through the Woodbury identity
//! on the `n x n` Gram matrix of centered rows instead of the `d x d`
//! covariance; both routes give the same `w`.

use nalgebra::{DMatrix, DVector};

use super::linear::LinearModel;
use super::SparseVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) enum Route {
    Auto,
    Covariance,
    Gram,
}

fn solve_spd(m: DMatrix<f64>, rhs: DVector<f64>) -> DVector<f64> {
    match m.clone().cholesky() {
        Some(ch) => ch.solve(&rhs),
        None => m
            .lu()
            .solve(&rhs)
            .expect("ridge-regularized system is non-singular"),
    }
}

pub(crate) fn fit(rows: &[SparseVec], y: &[bool], ridge: f64, route: Route) -> LinearModel {
    let dim = rows[0].dim();
    let n = rows.len();
    let mut means = [vec![0.0; dim], vec![0.0; dim]];
    let mut counts = [0usize; 2];
    for (r, &f) in rows.iter().zip(y) {
        let c = f as usize;
        counts[c] += 1;
        r.axpy_into(1.0, &mut means[c]);
    }
    for c in 0..2 {
        let k = counts[c] as f64;
        means[c].iter_mut().for_each(|v| *v /= k);
    }
    let diff: Vec<f64> = means[1].iter().zip(&means[0]).map(|(a, b)| a - b).collect();
    let scale = 1.0 / (n.saturating_sub(2).max(1)) as f64;

    let use_gram = match route {
        Route::Auto => dim > n,
        Route::Covariance => false,
        Route::Gram => true,
    };
    let weights = if use_gram {
        gram_route(rows, y, &means, &diff, ridge, scale)
    } else {
        covariance_route(rows, &means, &counts, &diff, ridge, scale)
    };

    let midpoint: f64 = weights
        .iter()
        .zip(means[0].iter().zip(&means[1]))
        .map(|(w, (a, b))| w * (a + b) / 2.0)
        .sum();
    let log_prior_ratio = (counts[1] as f64 / counts[0] as f64).ln();
    LinearModel {
        weights,
        bias: log_prior_ratio - midpoint,
    }
}

fn covariance_route(
    rows: &[SparseVec],
    means: &[Vec<f64>; 2],
    counts: &[usize; 2],
    diff: &[f64],
    ridge: f64,
    scale: f64,
) -> Vec<f64> {
    let dim = diff.len();
    let mut s = DMatrix::<f64>::zeros(dim, dim);
    for r in rows {
        let entries: Vec<(usize, f64)> = r.iter().collect();
        for &(i, vi) in &entries {
            for &(j, vj) in &entries {
                s[(i, j)] += vi * vj;
            }
        }
    }
    for c in 0..2 {
        let k = counts[c] as f64;
        for i in 0..dim {
            if means[c][i] == 0.0 {
                continue;
            }
            for j in 0..dim {
                s[(i, j)] -= k * means[c][i] * means[c][j];
            }
        }
    }
    s *= scale;
    for i in 0..dim {
        s[(i, i)] += ridge;
    }
    solve_spd(s, DVector::from_column_slice(diff)).iter().copied().collect()
}

fn gram_route(
    rows: &[SparseVec],
    y: &[bool],
    means: &[Vec<f64>; 2],
    diff: &[f64],
    ridge: f64,
    scale: f64,
) -> Vec<f64> {
    let n = rows.len();
    let class: Vec<usize> = y.iter().map(|&f| f as usize).collect();
    let mu_dot_mu = [
        [dot(&means[0], &means[0]), dot(&means[0], &means[1])],
        [dot(&means[1], &means[0]), dot(&means[1], &means[1])],
    ];
    let x_dot_mu: Vec<[f64; 2]> = rows
        .iter()
        .map(|r| [r.dot_dense(&means[0]), r.dot_dense(&means[1])])
        .collect();

    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..=i {
            let k = rows[i].dot(&rows[j]) - x_dot_mu[i][class[j]] - x_dot_mu[j][class[i]]
                + mu_dot_mu[class[i]][class[j]];
            m[(i, j)] = scale * k;
            m[(j, i)] = scale * k;
        }
        m[(i, i)] += ridge;
    }
    let mu_dot_diff = [dot(&means[0], diff), dot(&means[1], diff)];
    let rhs = DVector::from_iterator(n, (0..n).map(|i| rows[i].dot_dense(diff) - mu_dot_diff[class[i]]));
    let t = solve_spd(m, rhs);

    // w = (diff - scale * Z^T t) / ridge
    let mut zt = vec![0.0; diff.len()];
    let mut class_sums = [0.0; 2];
    for i in 0..n {
        rows[i].axpy_into(t[i], &mut zt);
        class_sums[class[i]] += t[i];
    }
    for c in 0..2 {
        for (z, mu) in zt.iter_mut().zip(&means[c]) {
            *z -= class_sums[c] * mu;
        }
    }
    diff.iter().zip(&zt).map(|(d, z)| (d - scale * z) / ridge).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

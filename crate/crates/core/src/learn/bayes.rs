//! Gaussian naive Bayes over dense feature columns.

use serde::{Deserialize, Serialize};

use super::SparseVec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    /// Per class (`[non-flaky, flaky]`): feature means and variances.
    means: [Vec<f64>; 2],
    variances: [Vec<f64>; 2],
    log_priors: [f64; 2],
    /// Log-likelihood of the all-zero vector per class; sparse rows only
    /// correct the columns they touch.
    zero_loglik: [f64; 2],
    epsilon: f64,
}

fn moments(rows: &[&SparseVec], dim: usize) -> (Vec<f64>, Vec<f64>) {
    let n = rows.len() as f64;
    let mut mean = vec![0.0; dim];
    for r in rows {
        r.axpy_into(1.0, &mut mean);
    }
    mean.iter_mut().for_each(|m| *m /= n);
    // Two-pass variance; columns a row does not touch contribute mean^2.
    let mut var: Vec<f64> = mean.iter().map(|m| m * m * n).collect();
    for r in rows {
        for (j, v) in r.iter() {
            let m = mean[j];
            var[j] += (v - m) * (v - m) - m * m;
        }
    }
    var.iter_mut().for_each(|s| *s = (*s / n).max(0.0));
    (mean, var)
}

impl GaussianNb {
    /// `var_smoothing` is scaled by the largest per-feature variance of the
    /// whole training set and never drops below `var_floor`.
    pub(crate) fn fit(rows: &[SparseVec], y: &[bool], var_smoothing: f64, var_floor: f64) -> Self {
        let dim = rows[0].dim();
        let all: Vec<&SparseVec> = rows.iter().collect();
        let (_, overall) = moments(&all, dim);
        let max_var = overall.iter().copied().fold(0.0, f64::max);
        let epsilon = (var_smoothing * max_var).max(var_floor);

        let mut means: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut variances: [Vec<f64>; 2] = [Vec::new(), Vec::new()];
        let mut log_priors = [0.0; 2];
        let mut zero_loglik = [0.0; 2];
        for class in 0..2 {
            let members: Vec<&SparseVec> = rows
                .iter()
                .zip(y)
                .filter(|(_, &f)| f == (class == 1))
                .map(|(r, _)| r)
                .collect();
            let (mean, mut var) = moments(&members, dim);
            var.iter_mut().for_each(|v| *v += epsilon);
            zero_loglik[class] = mean
                .iter()
                .zip(&var)
                .map(|(m, v)| -0.5 * (2.0 * std::f64::consts::PI * v).ln() - m * m / (2.0 * v))
                .sum();
            log_priors[class] = (members.len() as f64 / rows.len() as f64).ln();
            means[class] = mean;
            variances[class] = var;
        }
        Self {
            means,
            variances,
            log_priors,
            zero_loglik,
            epsilon,
        }
    }

    fn joint_log_likelihood(&self, x: &SparseVec, class: usize) -> f64 {
        let mut ll = self.zero_loglik[class] + self.log_priors[class];
        let (mean, var) = (&self.means[class], &self.variances[class]);
        for (j, v) in x.iter() {
            let m = mean[j];
            ll -= ((v - m) * (v - m) - m * m) / (2.0 * var[j]);
        }
        ll
    }

    /// Log-odds of flaky versus non-flaky.
    pub fn log_odds(&self, x: &SparseVec) -> f64 {
        self.joint_log_likelihood(x, 1) - self.joint_log_likelihood(x, 0)
    }

    /// Posterior probability of flaky.
    pub fn posterior(&self, x: &SparseVec) -> f64 {
        let d = self.log_odds(x);
        if d >= 0.0 {
            1.0 / (1.0 + (-d).exp())
        } else {
            let e = d.exp();
            e / (1.0 + e)
        }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

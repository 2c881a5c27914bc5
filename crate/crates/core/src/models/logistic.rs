use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{normal_expectation, Dataset, IntervalHypothesis, Model};
use crate::error::{Error, Result};
use crate::numeric::{interval_prob, inv_logit_raw, std_normal_cdf};
use crate::rng::LaneRng;

const MAX_ITERATIONS: usize = 100;
const GRADIENT_TOL: f64 = 1e-8;
const DECREMENT_TOL: f64 = 1e-14;
const FULL_STEP_DECREMENT: f64 = 1e-6;

/// `y ~ Bernoulli(pi)`, `logit(pi) = b0 + b1 * x1 + b2 * x2` with independent
/// normal priors on each coefficient. The estimand is the odds ratio `exp(b1)`;
/// the working scale is `b1` itself. The posterior is approximated by a normal
/// centered at the mode (Laplace).
///
/// eta-plus is `[b0, b1, b2]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LogisticRegression {
    pub prior_mean: [f64; 3],
    pub prior_sd: [f64; 3],
    #[serde(default)]
    pub covariate_mean: f64,
    #[serde(default = "one")]
    pub covariate_sd: f64,
}

fn one() -> f64 {
    1.0
}

/// Laplace approximation: mode and covariance of the coefficients.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LaplaceFit {
    pub mode: Vector3<f64>,
    pub covariance: Matrix3<f64>,
    pub iterations: usize,
}

impl LogisticRegression {
    pub fn validate(&self) -> Result<()> {
        if self.prior_mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("model.prior_mean", "values must be finite"));
        }
        if self.prior_sd.iter().any(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::config("model.prior_sd", "values must be positive and finite"));
        }
        if !self.covariate_mean.is_finite() || !(self.covariate_sd > 0.0 && self.covariate_sd.is_finite()) {
            return Err(Error::config("model.covariate_sd", "covariate mean must be finite and sd positive"));
        }
        Ok(())
    }

    fn log_posterior(&self, data: &Dataset, beta: &Vector3<f64>) -> f64 {
        let mut lp = 0.0;
        for i in 0..data.len() {
            let eta = beta[0] + beta[1] * data.treatment(i) + beta[2] * data.covariate[i];
            // y * eta - log(1 + e^eta), written to avoid overflow.
            lp += data.response[i] * eta - softplus(eta);
        }
        for k in 0..3 {
            let z = (beta[k] - self.prior_mean[k]) / self.prior_sd[k];
            lp -= 0.5 * z * z;
        }
        lp
    }

    /// Newton iterations on the log posterior with step halving.
    pub fn laplace(&self, data: &Dataset) -> Result<LaplaceFit, String> {
        let prior_prec = Vector3::from(self.prior_sd).map(|s| 1.0 / (s * s));
        let mu0 = Vector3::from(self.prior_mean);
        let mut beta = mu0;
        let mut current = self.log_posterior(data, &beta);
        for iteration in 0..MAX_ITERATIONS {
            let mut grad = -(beta - mu0).component_mul(&prior_prec);
            let mut info = Matrix3::from_diagonal(&prior_prec);
            for i in 0..data.len() {
                let x = Vector3::new(1.0, data.treatment(i), data.covariate[i]);
                let pi = inv_logit_raw(x.dot(&beta));
                grad += x * (data.response[i] - pi);
                info += x * x.transpose() * (pi * (1.0 - pi));
            }
            let chol = info.cholesky().ok_or("negative Hessian is not positive definite")?;
            let step = chol.solve(&grad);
            // The Newton decrement also ends the loop: with many observations
            // rounding in the gradient sum can exceed an absolute tolerance.
            if grad.amax() < GRADIENT_TOL || grad.dot(&step) < DECREMENT_TOL {
                return Ok(LaplaceFit { mode: beta, covariance: chol.inverse(), iterations: iteration });
            }
            if grad.dot(&step) < FULL_STEP_DECREMENT {
                // Close to the mode the objective change is below its rounding
                // noise, so take the pure Newton step.
                beta += step;
                current = self.log_posterior(data, &beta);
                continue;
            }
            let mut scale = 1.0;
            loop {
                let candidate = beta + step * scale;
                let value = self.log_posterior(data, &candidate);
                if value >= current || scale < 1e-10 {
                    beta = candidate;
                    current = value;
                    break;
                }
                scale *= 0.5;
            }
        }
        Err(format!("posterior mode not found within {MAX_ITERATIONS} iterations"))
    }

    /// Expected information matrix per group-B subject.
    fn info_matrix(&self, eta: &[f64], q: f64) -> Matrix3<f64> {
        let mut total = Matrix3::zeros();
        for (weight, x1) in [(q, 1.0), (1.0, 0.0)] {
            let mut group = Matrix3::zeros();
            for a in 0..3 {
                for b in a..3 {
                    let v = normal_expectation(self.covariate_mean, self.covariate_sd, |x2| {
                        let x = [1.0, x1, x2];
                        let pi = inv_logit_raw(eta[0] + eta[1] * x1 + eta[2] * x2);
                        x[a] * x[b] * pi * (1.0 - pi)
                    });
                    group[(a, b)] = v;
                    group[(b, a)] = v;
                }
            }
            total += group * weight;
        }
        total
    }
}

fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

impl Model for LogisticRegression {
    fn name(&self) -> &'static str {
        "logistic-regression"
    }

    fn dimension(&self) -> usize {
        3
    }

    fn eta_len(&self) -> usize {
        3
    }

    fn two_group(&self) -> bool {
        true
    }

    fn theta(&self, eta: &[f64]) -> f64 {
        eta[1].exp()
    }

    fn working(&self, theta: f64) -> f64 {
        if theta <= 0.0 {
            f64::NEG_INFINITY
        } else {
            theta.ln()
        }
    }

    fn generate(&self, eta: &[f64], n_a: usize, n_b: usize, rng: &mut LaneRng) -> Dataset {
        let n = n_a + n_b;
        let mut covariate = Vec::with_capacity(n);
        let mut response = Vec::with_capacity(n);
        for i in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            let x2 = self.covariate_mean + self.covariate_sd * z;
            let x1 = if i < n_a { 1.0 } else { 0.0 };
            let pi = inv_logit_raw(eta[0] + eta[1] * x1 + eta[2] * x2);
            covariate.push(x2);
            response.push(if rng.random::<f64>() < pi { 1.0 } else { 0.0 });
        }
        Dataset { n_a, n_b, response, covariate }
    }

    fn posterior_prob(&self, data: &Dataset, hyp: &IntervalHypothesis) -> Result<f64, String> {
        let fit = self.laplace(data)?;
        let sd = fit.covariance[(1, 1)].sqrt();
        let working = hyp.map(|t| self.working(t));
        Ok(interval_prob(std_normal_cdf, fit.mode[1], sd, working.lower, working.upper))
    }

    fn fisher_info(&self, eta: &[f64], q: f64) -> Result<f64> {
        let inv = self.info_matrix(eta, q).try_inverse().ok_or(Error::Capability {
            model: "logistic-regression",
            message: "singular expected information matrix".into(),
        })?;
        Ok(1.0 / inv[(1, 1)])
    }
}

use nalgebra::{Matrix3, Vector3};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, IntervalHypothesis, Model};
use crate::error::{Error, Result};
use crate::numeric::{interval_prob, student_t_cdf};
use crate::rng::LaneRng;

/// `y = b0 + b1 * x1 + b2 * x2 + e`, `x1` the group-A indicator,
/// `x2 ~ N(covariate_mean, covariate_sd^2)`, `e ~ N(0, sigma^2)`.
///
/// Normal-inverse-gamma prior: `beta | s2 ~ N(prior_mean, s2 * diag(prior_precision)^-1)`,
/// `s2 ~ IG(prior_shape, prior_rate)`. The estimand is `b1`.
///
/// eta-plus is `[b0, b1, b2, sigma]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianRegression {
    pub prior_mean: [f64; 3],
    pub prior_precision: [f64; 3],
    pub prior_shape: f64,
    pub prior_rate: f64,
    pub covariate_mean: f64,
    pub covariate_sd: f64,
}

/// Marginal posterior of `b1`: location-scale Student t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlopePosterior {
    pub location: f64,
    pub scale: f64,
    pub dof: f64,
}

impl GaussianRegression {
    pub fn validate(&self) -> Result<()> {
        if self.prior_mean.iter().any(|x| !x.is_finite()) {
            return Err(Error::config("model.prior_mean", "values must be finite"));
        }
        if self.prior_precision.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
            return Err(Error::config("model.prior_precision", "values must be finite and nonnegative"));
        }
        if !(self.prior_shape > 0.0 && self.prior_shape.is_finite()) {
            return Err(Error::config("model.prior_shape", "must be positive"));
        }
        if !(self.prior_rate > 0.0 && self.prior_rate.is_finite()) {
            return Err(Error::config("model.prior_rate", "must be positive"));
        }
        if !self.covariate_mean.is_finite() || !(self.covariate_sd > 0.0 && self.covariate_sd.is_finite()) {
            return Err(Error::config("model.covariate_sd", "covariate mean must be finite and sd positive"));
        }
        Ok(())
    }

    pub fn slope_posterior(&self, data: &Dataset) -> Result<SlopePosterior, String> {
        let n = data.len();
        let mut xtx = Matrix3::<f64>::zeros();
        let mut xty = Vector3::<f64>::zeros();
        let mut yty = 0.0;
        for i in 0..n {
            let x = Vector3::new(1.0, data.treatment(i), data.covariate[i]);
            let y = data.response[i];
            xtx += x * x.transpose();
            xty += x * y;
            yty += y * y;
        }
        let lambda0 = Matrix3::from_diagonal(&Vector3::from(self.prior_precision));
        let mu0 = Vector3::from(self.prior_mean);
        let lambda_n = xtx + lambda0;
        let chol = lambda_n.cholesky().ok_or("posterior precision is not positive definite")?;
        let mu_n = chol.solve(&(lambda0 * mu0 + xty));
        let a_n = self.prior_shape + n as f64 / 2.0;
        let quad = yty + mu0.dot(&(lambda0 * mu0)) - mu_n.dot(&(lambda_n * mu_n));
        let b_n = self.prior_rate + 0.5 * quad.max(0.0);
        let cov = chol.inverse();
        let scale = ((b_n / a_n) * cov[(1, 1)]).sqrt();
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(format!("degenerate posterior scale {scale}"));
        }
        Ok(SlopePosterior { location: mu_n[1], scale, dof: 2.0 * a_n })
    }

    /// Expected per-observation design moments `E[x x']` for one group.
    fn moment(&self, treatment: f64) -> Matrix3<f64> {
        let mu = self.covariate_mean;
        let ex2 = mu * mu + self.covariate_sd * self.covariate_sd;
        Matrix3::new(
            1.0, treatment, mu,
            treatment, treatment, treatment * mu,
            mu, treatment * mu, ex2,
        )
    }
}

impl Model for GaussianRegression {
    fn name(&self) -> &'static str {
        "gaussian-regression"
    }

    fn dimension(&self) -> usize {
        3
    }

    fn eta_len(&self) -> usize {
        4
    }

    fn two_group(&self) -> bool {
        true
    }

    fn theta(&self, eta: &[f64]) -> f64 {
        eta[1]
    }

    fn generate(&self, eta: &[f64], n_a: usize, n_b: usize, rng: &mut LaneRng) -> Dataset {
        let n = n_a + n_b;
        let mut covariate = Vec::with_capacity(n);
        let mut response = Vec::with_capacity(n);
        for i in 0..n {
            let z: f64 = StandardNormal.sample(rng);
            let e: f64 = StandardNormal.sample(rng);
            let x2 = self.covariate_mean + self.covariate_sd * z;
            let x1 = if i < n_a { 1.0 } else { 0.0 };
            covariate.push(x2);
            response.push(eta[0] + eta[1] * x1 + eta[2] * x2 + eta[3] * e);
        }
        Dataset { n_a, n_b, response, covariate }
    }

    fn posterior_prob(&self, data: &Dataset, hyp: &IntervalHypothesis) -> Result<f64, String> {
        let post = self.slope_posterior(data)?;
        let cdf = |z: f64| student_t_cdf(z, post.dof);
        Ok(interval_prob(cdf, post.location, post.scale, hyp.lower, hyp.upper))
    }

    fn fisher_info(&self, eta: &[f64], q: f64) -> Result<f64> {
        let sigma2 = eta[3] * eta[3];
        if !(sigma2 > 0.0) {
            return Err(Error::Capability {
                model: "gaussian-regression",
                message: "information needs a positive error standard deviation".into(),
            });
        }
        let per_nb = (self.moment(1.0) * q + self.moment(0.0)) / sigma2;
        let inv = per_nb.try_inverse().ok_or(Error::Capability {
            model: "gaussian-regression",
            message: "singular information matrix".into(),
        })?;
        Ok(1.0 / inv[(1, 1)])
    }

    fn check_eta(&self, eta: &[f64]) -> Result<()> {
        if eta.len() != 4 {
            return Err(Error::config("eta", format!("gaussian-regression needs [b0, b1, b2, sigma], got {} values", eta.len())));
        }
        if eta.iter().any(|x| !x.is_finite()) || eta[3] <= 0.0 {
            return Err(Error::config("eta", "values must be finite and sigma positive"));
        }
        Ok(())
    }
}

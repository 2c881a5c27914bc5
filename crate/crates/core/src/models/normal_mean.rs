use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{Dataset, IntervalHypothesis, Model};
use crate::error::{Error, Result};
use crate::numeric::{interval_prob, std_normal_cdf};
use crate::rng::LaneRng;

/// `y ~ N(theta, sigma^2)` with known `sigma`. Flat prior unless both prior
/// fields are given, in which case `theta ~ N(prior_mean, prior_sd^2)`.
///
/// eta-plus is `[theta]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalMean {
    pub sigma: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_mean: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prior_sd: Option<f64>,
}

impl NormalMean {
    pub fn flat(sigma: f64) -> Self {
        NormalMean { sigma, prior_mean: None, prior_sd: None }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::config("model.sigma", format!("must be positive, got {}", self.sigma)));
        }
        match (self.prior_mean, self.prior_sd) {
            (None, None) => Ok(()),
            (Some(mu), Some(sd)) if mu.is_finite() && sd > 0.0 && sd.is_finite() => Ok(()),
            (Some(_), Some(sd)) => {
                Err(Error::config("model.prior_sd", format!("must be positive and finite, got {sd}")))
            }
            _ => Err(Error::config(
                "model.prior_mean",
                "prior_mean and prior_sd must be given together (omit both for a flat prior)",
            )),
        }
    }

    /// Posterior mean and standard deviation of theta given `n` observations with mean `ybar`.
    pub fn posterior(&self, ybar: f64, n: usize) -> (f64, f64) {
        let data_prec = n as f64 / (self.sigma * self.sigma);
        match (self.prior_mean, self.prior_sd) {
            (Some(mu0), Some(sd0)) => {
                let prior_prec = 1.0 / (sd0 * sd0);
                let prec = prior_prec + data_prec;
                ((prior_prec * mu0 + data_prec * ybar) / prec, prec.sqrt().recip())
            }
            _ => (ybar, data_prec.sqrt().recip()),
        }
    }
}

impl Model for NormalMean {
    fn name(&self) -> &'static str {
        "normal-mean"
    }

    fn dimension(&self) -> usize {
        1
    }

    fn eta_len(&self) -> usize {
        1
    }

    fn two_group(&self) -> bool {
        false
    }

    fn theta(&self, eta: &[f64]) -> f64 {
        eta[0]
    }

    fn generate(&self, eta: &[f64], _n_a: usize, n_b: usize, rng: &mut LaneRng) -> Dataset {
        let response = (0..n_b)
            .map(|_| {
                let z: f64 = StandardNormal.sample(rng);
                eta[0] + self.sigma * z
            })
            .collect();
        Dataset { n_a: 0, n_b, response, covariate: Vec::new() }
    }

    fn posterior_prob(&self, data: &Dataset, hyp: &IntervalHypothesis) -> Result<f64, String> {
        if data.is_empty() {
            return Err("empty dataset".into());
        }
        let ybar = data.response.iter().sum::<f64>() / data.len() as f64;
        let (mean, sd) = self.posterior(ybar, data.len());
        Ok(interval_prob(std_normal_cdf, mean, sd, hyp.lower, hyp.upper))
    }

    fn fisher_info(&self, _eta: &[f64], _q: f64) -> Result<f64> {
        Ok(1.0 / (self.sigma * self.sigma))
    }
}

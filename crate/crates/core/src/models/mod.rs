//! Statistical models: data generation, estimand, analysis prior, Fisher
//! information and the posterior probability of the alternative hypothesis.

mod gaussian_regression;
mod logistic;
mod normal_mean;
mod process;

use std::fmt;

use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub use gaussian_regression::GaussianRegression;
pub use logistic::LogisticRegression;
pub use normal_mean::NormalMean;
pub use process::{DataGenProcess, DrawRecord};

use crate::error::{Error, Result};
use crate::rng::LaneRng;

/// `H1: lower < theta < upper`; either endpoint may be infinite.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalHypothesis {
    #[serde(serialize_with = "ser_endpoint", deserialize_with = "de_endpoint")]
    pub lower: f64,
    #[serde(serialize_with = "ser_endpoint", deserialize_with = "de_endpoint")]
    pub upper: f64,
}

impl IntervalHypothesis {
    pub fn new(lower: f64, upper: f64) -> Result<Self> {
        let h = IntervalHypothesis { lower, upper };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lower.is_nan() || self.upper.is_nan() {
            return Err(Error::config("hypothesis", "endpoints must not be NaN"));
        }
        if self.lower == f64::INFINITY || self.upper == f64::NEG_INFINITY {
            return Err(Error::config("hypothesis", "lower cannot be +inf and upper cannot be -inf"));
        }
        if self.lower >= self.upper {
            return Err(Error::config(
                "hypothesis",
                format!("need lower < upper, got ({}, {})", self.lower, self.upper),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, theta: f64) -> bool {
        self.lower < theta && theta < self.upper
    }

    /// Applies a strictly increasing map to both endpoints.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> IntervalHypothesis {
        IntervalHypothesis { lower: f(self.lower), upper: f(self.upper) }
    }
}

impl fmt::Display for IntervalHypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.lower, self.upper)
    }
}

fn ser_endpoint<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    if *x == f64::INFINITY {
        s.serialize_str("inf")
    } else if *x == f64::NEG_INFINITY {
        s.serialize_str("-inf")
    } else {
        s.serialize_f64(*x)
    }
}

fn de_endpoint<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Endpoint {
        Number(f64),
        Int(i64),
        Token(String),
    }
    match Endpoint::deserialize(d)? {
        Endpoint::Number(x) => Ok(x),
        Endpoint::Int(x) => Ok(x as f64),
        Endpoint::Token(t) => match t.trim() {
            "inf" | "+inf" | "Inf" | "infinity" => Ok(f64::INFINITY),
            "-inf" | "-Inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            other => Err(de::Error::custom(format!(
                "expected a number, \"inf\" or \"-inf\", got \"{other}\""
            ))),
        },
    }
}

/// Simulated data for one repetition. In two-group models the first `n_a`
/// observations belong to group A (treatment indicator 1), the rest to group B.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub n_a: usize,
    pub n_b: usize,
    pub response: Vec<f64>,
    /// Second covariate per observation; empty for models without one.
    pub covariate: Vec<f64>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.response.len()
    }

    pub fn is_empty(&self) -> bool {
        self.response.is_empty()
    }

    pub fn treatment(&self, i: usize) -> f64 {
        if i < self.n_a {
            1.0
        } else {
            0.0
        }
    }
}

/// `round(q * n_b)` with ties to even.
pub fn group_a_size(q: f64, n_b: usize) -> usize {
    (q * n_b as f64).round_ties_even() as usize
}

/// Behaviour shared by every model.
///
/// `theta` is the estimand on its natural scale. Limiting logit slopes, Fisher
/// information and BvM sample sizes are computed on a "working" scale, a
/// strictly increasing transform of theta (identity unless the model says
/// otherwise) on which the posterior is closer to normal.
pub trait Model: Send + Sync {
    fn name(&self) -> &'static str;

    /// Number of regression-type parameters; sets the smallest usable sample size.
    fn dimension(&self) -> usize;

    /// Length of the eta-plus vector drawn from a data generation process.
    fn eta_len(&self) -> usize;

    /// Whether the sample size refers to group B of a two-group design.
    fn two_group(&self) -> bool;

    fn theta(&self, eta: &[f64]) -> f64;

    fn working(&self, theta: f64) -> f64 {
        theta
    }

    fn generate(&self, eta: &[f64], n_a: usize, n_b: usize, rng: &mut LaneRng) -> Dataset;

    /// `Pr(lower < theta < upper | data)`. Errors carry a short diagnostic.
    fn posterior_prob(&self, data: &Dataset, hyp: &IntervalHypothesis) -> Result<f64, String>;

    /// Information for the working-scale estimand per unit of sample size
    /// (per group-B subject in two-group models, so `n_a = q * n_b` is folded in).
    fn fisher_info(&self, eta: &[f64], q: f64) -> Result<f64>;

    /// Checks eta-plus values before any simulation runs.
    fn check_eta(&self, eta: &[f64]) -> Result<()> {
        if eta.len() != self.eta_len() {
            return Err(Error::config(
                "eta",
                format!("model `{}` needs {} values, got {}", self.name(), self.eta_len(), eta.len()),
            ));
        }
        if let Some(x) = eta.iter().find(|x| !x.is_finite()) {
            return Err(Error::config("eta", format!("values must be finite, got {x}")));
        }
        Ok(())
    }

    fn min_sample_size(&self) -> usize {
        (2 * self.dimension()).max(4)
    }
}

/// Model selection as written in a design configuration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    NormalMean(NormalMean),
    GaussianRegression(GaussianRegression),
    LogisticRegression(LogisticRegression),
}

impl ModelSpec {
    pub fn as_model(&self) -> &dyn Model {
        match self {
            ModelSpec::NormalMean(m) => m,
            ModelSpec::GaussianRegression(m) => m,
            ModelSpec::LogisticRegression(m) => m,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelSpec::NormalMean(m) => m.validate(),
            ModelSpec::GaussianRegression(m) => m.validate(),
            ModelSpec::LogisticRegression(m) => m.validate(),
        }
    }
}

/// Simpson-rule expectation of `f(x)` for `x ~ N(mean, sd^2)`.
pub(crate) fn normal_expectation(mean: f64, sd: f64, f: impl Fn(f64) -> f64) -> f64 {
    const HALF_WIDTH: f64 = 9.0;
    const STEPS: usize = 600;
    if sd == 0.0 {
        return f(mean);
    }
    let h = 2.0 * HALF_WIDTH / STEPS as f64;
    let dens = |z: f64| (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    for i in 0..=STEPS {
        let z = -HALF_WIDTH + i as f64 * h;
        let w = if i == 0 || i == STEPS {
            1.0
        } else if i % 2 == 1 {
            4.0
        } else {
            2.0
        };
        total += w * dens(z) * f(mean + sd * z);
    }
    total * h / 3.0
}

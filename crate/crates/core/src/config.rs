//! Design configuration: every input of a design problem, readable from TOML.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{DataGenProcess, GaussianRegression, IntervalHypothesis, LogisticRegression, ModelSpec};
use crate::numeric::check_logit_eps;
use crate::rng::Hypothesis;
use crate::sampdist::{Criteria, SimSetup};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DesignConfig {
    pub seed: u64,
    pub alpha: f64,
    pub beta: f64,
    /// Allocation ratio `n_A / n_B` for two-group models.
    #[serde(default = "default_q")]
    pub q: f64,
    /// Repetitions per simulated sampling distribution.
    pub m: usize,
    pub hypothesis: IntervalHypothesis,
    pub model: ModelSpec,
    pub psi0: DataGenProcess,
    pub psi1: DataGenProcess,
    #[serde(default)]
    pub optimizer: OptimizerOptions,
    #[serde(default)]
    pub bootstrap: BootstrapOptions,
    #[serde(default)]
    pub contour: ContourOptions,
}

fn default_q() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerOptions {
    /// Theta subgroups for matching ranks under a nondegenerate process.
    pub subgroups: usize,
    /// Search the final sample size in hundredths.
    pub fractional_n: bool,
    /// Simulate a third size when the final answer is far from the second anchor.
    pub resimulate: bool,
    /// Relative distance `|n2 - n1| / n1` that triggers the third simulation.
    pub resimulate_threshold: f64,
    /// Keep gamma fixed and search only the sample size (comparison mode).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fixed_gamma: Option<f64>,
    /// Grid points below the bisection answer that are re-checked.
    pub scan_window: usize,
    /// Probability clamp before taking logits.
    pub logit_eps: f64,
}

impl Default for OptimizerOptions {
    fn default() -> Self {
        OptimizerOptions {
            subgroups: 10,
            fractional_n: false,
            resimulate: true,
            resimulate_threshold: 0.5,
            fixed_gamma: None,
            scan_window: 8,
            logit_eps: crate::numeric::DEFAULT_LOGIT_EPS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BootstrapOptions {
    pub resamples: usize,
    /// Size of each resample; the simulated `m` when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub resample_size: Option<usize>,
    pub level: f64,
}

impl Default for BootstrapOptions {
    fn default() -> Self {
        BootstrapOptions { resamples: 1000, resample_size: None, level: 0.95 }
    }
}

/// Grid ranges; anything left out is derived from the recommendation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContourOptions {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_max: Option<f64>,
    pub gamma_points: usize,
}

impl Default for ContourOptions {
    fn default() -> Self {
        ContourOptions { n_min: None, n_max: None, gamma_min: None, gamma_max: None, gamma_points: 201 }
    }
}

fn unit_open(key: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::config(key, format!("must lie in (0, 1), got {x}")))
    }
}

impl DesignConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let config: DesignConfig = toml::from_str(text).map_err(|e| {
            let key = e
                .message()
                .split('`')
                .nth(1)
                .filter(|_| e.message().starts_with("unknown field"))
                .unwrap_or("config")
                .to_string();
            Error::config(key, e.to_string().trim_end().to_string())
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }

    /// Checks every constraint, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        unit_open("alpha", self.alpha)?;
        unit_open("beta", self.beta)?;
        if !(self.q > 0.0 && self.q.is_finite()) {
            return Err(Error::config("q", format!("must be positive, got {}", self.q)));
        }
        if self.m == 0 {
            return Err(Error::config("m", "must be at least 1"));
        }
        Criteria::new(self.m, self.alpha, self.beta).map_err(|e| match e {
            Error::Argument(msg) => Error::config("m", msg),
            other => other,
        })?;
        self.hypothesis.validate()?;
        self.model.validate()?;
        let model = self.model.as_model();
        self.psi0.validate(model, &self.hypothesis, Hypothesis::Null)?;
        self.psi1.validate(model, &self.hypothesis, Hypothesis::Alternative)?;

        let o = &self.optimizer;
        if o.subgroups == 0 {
            return Err(Error::config("optimizer.subgroups", "must be at least 1"));
        }
        if !(o.resimulate_threshold > 0.0) {
            return Err(Error::config("optimizer.resimulate_threshold", "must be positive"));
        }
        if let Some(g) = o.fixed_gamma {
            if !(0.5..1.0).contains(&g) {
                return Err(Error::config("optimizer.fixed_gamma", format!("must lie in [0.5, 1), got {g}")));
            }
        }
        check_logit_eps(o.logit_eps).map_err(|_| {
            Error::config("optimizer.logit_eps", format!("must satisfy 0 < eps < 0.5, got {}", o.logit_eps))
        })?;

        let b = &self.bootstrap;
        if b.resamples == 0 {
            return Err(Error::config("bootstrap.resamples", "must be at least 1"));
        }
        if let Some(size) = b.resample_size {
            Criteria::new(size, self.alpha, self.beta)
                .map_err(|e| Error::config("bootstrap.resample_size", e.to_string()))?;
        }
        unit_open("bootstrap.level", b.level)?;

        let c = &self.contour;
        if c.gamma_points < 2 {
            return Err(Error::config("contour.gamma_points", "must be at least 2"));
        }
        if let (Some(lo), Some(hi)) = (c.n_min, c.n_max) {
            if lo > hi {
                return Err(Error::config("contour.n_min", format!("n_min {lo} exceeds n_max {hi}")));
            }
        }
        for (key, g) in [("contour.gamma_min", c.gamma_min), ("contour.gamma_max", c.gamma_max)] {
            if let Some(g) = g {
                if !(0.5..1.0).contains(&g) {
                    return Err(Error::config(key, format!("must lie in [0.5, 1), got {g}")));
                }
            }
        }
        if let (Some(lo), Some(hi)) = (c.gamma_min, c.gamma_max) {
            if lo >= hi {
                return Err(Error::config("contour.gamma_min", "must be below gamma_max"));
            }
        }
        Ok(())
    }

    pub fn criteria(&self) -> Result<Criteria> {
        Criteria::new(self.m, self.alpha, self.beta)
    }

    pub fn sim_setup(&self) -> SimSetup<'_> {
        SimSetup {
            model: self.model.as_model(),
            hypothesis: self.hypothesis,
            q: self.q,
            seed: self.seed,
            logit_eps: self.optimizer.logit_eps,
        }
    }

    pub fn psi(&self, which: Hypothesis) -> &DataGenProcess {
        match which {
            Hypothesis::Null => &self.psi0,
            Hypothesis::Alternative => &self.psi1,
        }
    }

    /// Weight-loss trial: linear regression on percentage weight change with a
    /// treatment indicator and baseline waist circumference, conjugate prior,
    /// `H1: b1 > 5` and an assurance-type alternative with `b1 ~ U(9, 12)`.
    pub fn weight_loss_example() -> Self {
        let eta0 = vec![-25.75, 5.0, 0.25, 10.07];
        DesignConfig {
            seed: 1,
            alpha: 0.05,
            beta: 0.2,
            q: 2.0,
            m: 10_000,
            hypothesis: IntervalHypothesis { lower: 5.0, upper: f64::INFINITY },
            model: ModelSpec::GaussianRegression(GaussianRegression {
                prior_mean: [0.0; 3],
                prior_precision: [0.01; 3],
                prior_shape: 1.0,
                prior_rate: 1.0,
                covariate_mean: 115.0,
                covariate_sd: 14.5,
            }),
            psi0: DataGenProcess::Degenerate { eta: eta0 },
            psi1: DataGenProcess::Uniform { eta: vec![-25.75, 10.5, 0.25, 10.07], component: 1, low: 9.0, high: 12.0 },
            optimizer: OptimizerOptions::default(),
            bootstrap: BootstrapOptions::default(),
            contour: ContourOptions::default(),
        }
    }

    /// Adverse-event comparison: logistic regression on serious adverse events
    /// with a standardized baseline-weight covariate, informative intercept
    /// prior, `H1: odds ratio < 2`, null at the boundary, alternative OR 1.25.
    pub fn adverse_event_example() -> Self {
        DesignConfig {
            seed: 1,
            alpha: 0.4,
            beta: 0.25,
            q: 2.0,
            m: 10_000,
            hypothesis: IntervalHypothesis { lower: f64::NEG_INFINITY, upper: 2.0 },
            model: ModelSpec::LogisticRegression(LogisticRegression {
                prior_mean: [-2.71, 0.0, 0.0],
                prior_sd: [1.0, 10.0, 10.0],
                covariate_mean: 0.0,
                covariate_sd: 1.0,
            }),
            psi0: DataGenProcess::Degenerate { eta: vec![-2.71, 2f64.ln(), 0.25] },
            psi1: DataGenProcess::Degenerate { eta: vec![-2.71, 1.25f64.ln(), 0.25] },
            optimizer: OptimizerOptions::default(),
            bootstrap: BootstrapOptions::default(),
            contour: ContourOptions::default(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
seed = 3
alpha = 0.05
beta = 0.2
m = 1000

[hypothesis]
lower = 0.0
upper = "inf"

[model]
kind = "normal-mean"
sigma = 1.0

[psi0]
kind = "degenerate"
eta = [0.0]

[psi1]
kind = "degenerate"
eta = [0.8]
"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = DesignConfig::from_toml_str(MINIMAL).unwrap();
        assert_eq!(c.q, 1.0);
        assert_eq!(c.optimizer, OptimizerOptions::default());
        assert_eq!(c.hypothesis.upper, f64::INFINITY);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let top = MINIMAL.replace("m = 1000", "m = 1000\nmm = 3");
        let err = DesignConfig::from_toml_str(&top).unwrap_err();
        assert!(err.to_string().contains("mm"), "{err}");
        let nested = MINIMAL.replace("sigma = 1.0", "sigma = 1.0\nsigmaa = 2.0");
        let err = DesignConfig::from_toml_str(&nested).unwrap_err();
        assert!(err.to_string().contains("sigmaa"), "{err}");
        let psi = MINIMAL.replace("eta = [0.8]", "eta = [0.8]\nlow = 1.0");
        assert!(DesignConfig::from_toml_str(&psi).is_err());
        let opt = format!("{MINIMAL}\n[optimizer]\nsubgroup = 4\n");
        let err = DesignConfig::from_toml_str(&opt).unwrap_err();
        assert!(err.to_string().contains("subgroup"), "{err}");
    }

    #[test]
    fn constraint_violations_name_the_key() {
        let cases = [
            ("alpha = 0.05", "alpha = 0.0", "alpha"),
            ("beta = 0.2", "beta = 1.5", "beta"),
            ("m = 1000", "m = 2", "m"),
            ("sigma = 1.0", "sigma = -1.0", "model.sigma"),
            ("eta = [0.8]", "eta = [-0.8]", "psi1"),
        ];
        for (from, to, key) in cases {
            match DesignConfig::from_toml_str(&MINIMAL.replace(from, to)) {
                Err(Error::Config { key: k, .. }) => assert_eq!(k, key),
                other => panic!("{to}: {other:?}"),
            }
        }
    }

    #[test]
    fn presets_round_trip_through_toml() {
        for c in [DesignConfig::weight_loss_example(), DesignConfig::adverse_event_example()] {
            c.validate().unwrap();
            let text = c.to_toml_string().unwrap();
            assert_eq!(DesignConfig::from_toml_str(&text).unwrap(), c, "{text}");
        }
    }
}

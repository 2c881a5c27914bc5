use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{IntervalHypothesis, Model};
use crate::error::{Error, Result};
use crate::rng::{Hypothesis, LaneRng};

/// How eta-plus is drawn in each repetition under one hypothesis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DataGenProcess {
    /// The same eta-plus in every repetition.
    Degenerate { eta: Vec<f64> },
    /// `eta` with component `component` replaced by a `U(low, high)` draw.
    Uniform { eta: Vec<f64>, component: usize, low: f64, high: f64 },
}

/// One draw from a data generation process.
#[derive(Clone, Debug, PartialEq)]
pub struct DrawRecord {
    pub eta_plus: Vec<f64>,
    pub theta: f64,
}

impl DataGenProcess {
    pub fn is_degenerate(&self) -> bool {
        match self {
            DataGenProcess::Degenerate { .. } => true,
            DataGenProcess::Uniform { low, high, .. } => low == high,
        }
    }

    pub fn base_eta(&self) -> &[f64] {
        match self {
            DataGenProcess::Degenerate { eta } | DataGenProcess::Uniform { eta, .. } => eta,
        }
    }

    pub fn draw(&self, model: &dyn Model, rng: &mut LaneRng) -> DrawRecord {
        let eta_plus = match self {
            DataGenProcess::Degenerate { eta } => eta.clone(),
            DataGenProcess::Uniform { eta, component, low, high } => {
                let mut e = eta.clone();
                e[*component] = if low == high { *low } else { rng.random_range(*low..*high) };
                e
            }
        };
        let theta = model.theta(&eta_plus);
        DrawRecord { eta_plus, theta }
    }

    /// eta-plus at the median of the process, used for the BvM starting size.
    pub fn median_eta(&self) -> Vec<f64> {
        match self {
            DataGenProcess::Degenerate { eta } => eta.clone(),
            DataGenProcess::Uniform { eta, component, low, high } => {
                let mut e = eta.clone();
                e[*component] = 0.5 * (low + high);
                e
            }
        }
    }

    /// eta-plus values at the extremes of the support (both equal when degenerate).
    fn extremes(&self) -> [Vec<f64>; 2] {
        match self {
            DataGenProcess::Degenerate { eta } => [eta.clone(), eta.clone()],
            DataGenProcess::Uniform { eta, component, low, high } => {
                let mut a = eta.clone();
                let mut b = eta.clone();
                a[*component] = *low;
                b[*component] = *high;
                [a, b]
            }
        }
    }

    /// Checks shape against the model and that every draw is consistent with
    /// its hypothesis. The estimand is assumed monotone in the drawn component,
    /// so checking the support endpoints suffices. The comparison is made on the
    /// model's working scale with a tiny tolerance so that a boundary value
    /// written as a rounded decimal (e.g. `log(2)`) still counts as the boundary.
    pub fn validate(&self, model: &dyn Model, hyp: &IntervalHypothesis, which: Hypothesis) -> Result<()> {
        let key = match which {
            Hypothesis::Null => "psi0",
            Hypothesis::Alternative => "psi1",
        };
        model.check_eta(self.base_eta()).map_err(|e| match e {
            Error::Config { message, .. } => Error::config(format!("{key}.eta"), message),
            other => other,
        })?;
        if let DataGenProcess::Uniform { eta, component, low, high } = self {
            if *component >= eta.len() {
                return Err(Error::config(
                    format!("{key}.component"),
                    format!("index {component} outside eta of length {}", eta.len()),
                ));
            }
            if !(low.is_finite() && high.is_finite() && low <= high) {
                return Err(Error::config(format!("{key}.low"), format!("need finite low <= high, got ({low}, {high})")));
            }
        }
        let working = hyp.map(|t| model.working(t));
        for eta in self.extremes() {
            model.check_eta(&eta).map_err(|e| match e {
                Error::Config { message, .. } => Error::config(format!("{key}.high"), message),
                other => other,
            })?;
            let w = model.working(model.theta(&eta));
            let tol = 1e-12 * w.abs().max(1.0);
            let inside = working.lower + tol < w && w < working.upper - tol;
            let outside = w <= working.lower + tol || w >= working.upper - tol;
            let ok = match which {
                Hypothesis::Null => outside,
                Hypothesis::Alternative => inside,
            };
            if !ok {
                return Err(Error::config(
                    key,
                    format!(
                        "draws must give theta {} {hyp}; found theta = {}",
                        if which == Hypothesis::Null { "outside" } else { "inside" },
                        model.theta(&eta)
                    ),
                ));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{GaussianRegression, LogisticRegression, NormalMean};
    use crate::rng::{Lane, Phase, RngStream};

    fn weight_model() -> GaussianRegression {
        GaussianRegression {
            prior_mean: [0.0; 3],
            prior_precision: [0.01; 3],
            prior_shape: 1.0,
            prior_rate: 1.0,
            covariate_mean: 115.0,
            covariate_sd: 14.5,
        }
    }

    fn rng(r: u64) -> LaneRng {
        RngStream::new(0, Lane::new(Hypothesis::Alternative, r, Phase::Direct(0))).rng()
    }

    #[test]
    fn degenerate_draws_are_identical() {
        let m = weight_model();
        let psi = DataGenProcess::Degenerate { eta: vec![-25.75, 5.0, 0.25, 10.07] };
        let a = psi.draw(&m, &mut rng(0));
        let b = psi.draw(&m, &mut rng(1));
        assert_eq!(a, b);
        assert_eq!(a.theta, 5.0);
        assert_eq!(a.eta_plus, vec![-25.75, 5.0, 0.25, 10.07]);
    }

    #[test]
    fn uniform_draws_stay_in_range() {
        let m = weight_model();
        let psi = DataGenProcess::Uniform { eta: vec![-25.75, 0.0, 0.25, 10.07], component: 1, low: 9.0, high: 12.0 };
        let thetas: Vec<f64> = (0..500).map(|r| psi.draw(&m, &mut rng(r)).theta).collect();
        assert!(thetas.iter().all(|t| (9.0..12.0).contains(t)));
        let distinct = thetas.windows(2).filter(|w| w[0] != w[1]).count();
        assert!(distinct > 400);
        assert_eq!(psi.median_eta()[1], 10.5);
    }

    #[test]
    fn validation_against_hypotheses() {
        let m = weight_model();
        let hyp = IntervalHypothesis::new(5.0, f64::INFINITY).unwrap();
        let psi0 = DataGenProcess::Degenerate { eta: vec![-25.75, 5.0, 0.25, 10.07] };
        let psi1 = DataGenProcess::Uniform { eta: vec![-25.75, 0.0, 0.25, 10.07], component: 1, low: 9.0, high: 12.0 };
        psi0.validate(&m, &hyp, Hypothesis::Null).unwrap();
        psi1.validate(&m, &hyp, Hypothesis::Alternative).unwrap();
        assert!(psi0.validate(&m, &hyp, Hypothesis::Alternative).is_err());
        assert!(psi1.validate(&m, &hyp, Hypothesis::Null).is_err());
        let bad = DataGenProcess::Uniform { eta: vec![-25.75, 0.0, 0.25, 10.07], component: 1, low: 4.0, high: 12.0 };
        assert!(bad.validate(&m, &hyp, Hypothesis::Alternative).is_err());
        let short = DataGenProcess::Degenerate { eta: vec![1.0] };
        assert!(short.validate(&m, &hyp, Hypothesis::Null).is_err());
    }

    #[test]
    fn logistic_boundary_is_null() {
        let m = LogisticRegression {
            prior_mean: [-2.71, 0.0, 0.0],
            prior_sd: [1.0, 10.0, 10.0],
            covariate_mean: 0.0,
            covariate_sd: 1.0,
        };
        let hyp = IntervalHypothesis::new(f64::NEG_INFINITY, 2.0).unwrap();
        let psi0 = DataGenProcess::Degenerate { eta: vec![-2.71, std::f64::consts::LN_2, 0.25] };
        psi0.validate(&m, &hyp, Hypothesis::Null).unwrap();
        let d = psi0.draw(&m, &mut rng(0));
        assert!((d.theta - 2.0).abs() < 1e-12);
        let psi1 = DataGenProcess::Degenerate { eta: vec![-2.71, 1.25f64.ln(), 0.25] };
        psi1.validate(&m, &hyp, Hypothesis::Alternative).unwrap();
    }

    #[test]
    fn toy_eta_length() {
        let m = NormalMean::flat(1.0);
        let hyp = IntervalHypothesis::new(0.0, f64::INFINITY).unwrap();
        DataGenProcess::Degenerate { eta: vec![0.0] }.validate(&m, &hyp, Hypothesis::Null).unwrap();
        assert!(DataGenProcess::Degenerate { eta: vec![0.0, 1.0] }.validate(&m, &hyp, Hypothesis::Null).is_err());
    }
}

//! Monte-Carlo estimation of sampling distributions of posterior probabilities
//! and the operating characteristics derived from them.

use std::ops::Range;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{group_a_size, DataGenProcess, IntervalHypothesis, Model};
use crate::numeric::{check_logit_eps, floor_guarded, logit_clamped, xi_in_place};
use crate::rng::{Hypothesis, Lane, Phase, RngStream};

/// Redraws allowed for one repetition before it counts as failed.
const MAX_ATTEMPTS: u32 = 16;

/// Everything needed to run repetitions, apart from the sample size.
#[derive(Clone, Copy)]
pub struct SimSetup<'a> {
    pub model: &'a dyn Model,
    pub hypothesis: IntervalHypothesis,
    /// Allocation ratio `n_A / n_B`; ignored by one-group models.
    pub q: f64,
    pub seed: u64,
    pub logit_eps: f64,
}

/// One estimated sampling distribution.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampDist {
    pub hypothesis: Hypothesis,
    /// Sample size (group B in two-group models).
    pub n: usize,
    pub seed: u64,
    pub phase: Phase,
    pub probs: Vec<f64>,
    pub logits: Vec<f64>,
    pub thetas: Vec<f64>,
    /// eta-plus per repetition, flattened with stride `eta_len`.
    #[serde(skip)]
    pub eta_plus: Vec<f64>,
    pub eta_len: usize,
    /// Repetitions that needed at least one redraw.
    pub redrawn: usize,
    /// Posterior probabilities computed, including failed attempts.
    pub evaluations: usize,
}

impl SampDist {
    pub fn m(&self) -> usize {
        self.probs.len()
    }

    pub fn eta(&self, r: usize) -> &[f64] {
        &self.eta_plus[r * self.eta_len..(r + 1) * self.eta_len]
    }

    /// Appends the repetitions of `other`, which must describe the same
    /// hypothesis and sample size.
    pub fn extend(&mut self, other: SampDist) -> Result<()> {
        if other.hypothesis != self.hypothesis || other.n != self.n || other.eta_len != self.eta_len {
            return Err(Error::argument("can only concatenate sampling distributions of the same hypothesis and n"));
        }
        self.probs.extend(other.probs);
        self.logits.extend(other.logits);
        self.thetas.extend(other.thetas);
        self.eta_plus.extend(other.eta_plus);
        self.redrawn += other.redrawn;
        self.evaluations += other.evaluations;
        Ok(())
    }
}

struct Repetition {
    prob: f64,
    theta: f64,
    eta: Vec<f64>,
    attempts: u32,
}

fn run_repetition(
    setup: &SimSetup<'_>,
    psi: &DataGenProcess,
    n_a: usize,
    n_b: usize,
    base: Lane,
) -> std::result::Result<Repetition, (Lane, String)> {
    let mut lane = base;
    let mut last = String::new();
    for attempt in 0..MAX_ATTEMPTS {
        let mut rng = RngStream::new(setup.seed, lane).rng();
        let draw = psi.draw(setup.model, &mut rng);
        let data = setup.model.generate(&draw.eta_plus, n_a, n_b, &mut rng);
        match setup.model.posterior_prob(&data, &setup.hypothesis) {
            Ok(p) if (0.0..=1.0).contains(&p) => {
                return Ok(Repetition { prob: p, theta: draw.theta, eta: draw.eta_plus, attempts: attempt + 1 })
            }
            Ok(p) => last = format!("posterior probability {p} outside [0, 1]"),
            Err(e) => last = e,
        }
        lane = lane.retry();
    }
    Err((base, last))
}

/// Runs repetitions `reps` (lane indices) under `psi` at sample size `n`.
///
/// Repetitions run in parallel, but every repetition draws from its own lane,
/// so the result does not depend on the thread count.
pub fn estimate_range(
    setup: &SimSetup<'_>,
    psi: &DataGenProcess,
    which: Hypothesis,
    n: usize,
    reps: Range<u64>,
    phase: Phase,
) -> Result<SampDist> {
    check_logit_eps(setup.logit_eps)?;
    if reps.is_empty() {
        return Err(Error::argument("at least one repetition is required"));
    }
    let model = setup.model;
    if n < model.min_sample_size() {
        return Err(Error::argument(format!(
            "sample size {n} below the minimum {} for model `{}`",
            model.min_sample_size(),
            model.name()
        )));
    }
    let (n_a, n_b) = if model.two_group() { (group_a_size(setup.q, n), n) } else { (0, n) };
    let count = (reps.end - reps.start) as usize;
    let results: Vec<_> = reps
        .clone()
        .into_par_iter()
        .map(|r| run_repetition(setup, psi, n_a, n_b, Lane::new(which, r, phase)))
        .collect();

    // Failed repetitions are redrawn on a retry lane so m stays fixed, but a
    // run where more than 0.1% of repetitions needed a redraw is rejected.
    if let Some((lane, message)) = results.iter().find_map(|r| r.as_ref().err()) {
        return Err(Error::Numerical {
            lane: *lane,
            message: format!("{message} (gave up after {MAX_ATTEMPTS} attempts)"),
        });
    }
    let redrawn = results.iter().filter(|r| matches!(r, Ok(rep) if rep.attempts > 1)).count();
    if redrawn * 1000 > count {
        return Err(Error::Numerical {
            lane: Lane::new(which, reps.start, phase),
            message: format!("{redrawn} of {count} repetitions failed at least once"),
        });
    }

    let eta_len = model.eta_len();
    let mut sd = SampDist {
        hypothesis: which,
        n,
        seed: setup.seed,
        phase,
        probs: Vec::with_capacity(count),
        logits: Vec::with_capacity(count),
        thetas: Vec::with_capacity(count),
        eta_plus: Vec::with_capacity(count * eta_len),
        eta_len,
        redrawn: 0,
        evaluations: 0,
    };
    for rep in results.into_iter().flatten() {
        sd.probs.push(rep.prob);
        sd.logits.push(logit_clamped(rep.prob, setup.logit_eps));
        sd.thetas.push(rep.theta);
        sd.eta_plus.extend(rep.eta);
        sd.evaluations += rep.attempts as usize;
    }
    sd.redrawn = redrawn;
    Ok(sd)
}

/// Sampling distribution from `m` repetitions (lanes `0..m`).
pub fn estimate(
    setup: &SimSetup<'_>,
    psi: &DataGenProcess,
    which: Hypothesis,
    n: usize,
    m: usize,
    phase: Phase,
) -> Result<SampDist> {
    estimate_range(setup, psi, which, n, 0..m as u64, phase)
}

/// Order-statistic ranks equivalent to the power and type I error criteria
/// for a sample of `m` posterior probabilities.
///
/// Estimated power `#{p >= gamma} / m` is at least `1 - beta` exactly when at
/// most `floor(m * beta)` probabilities fall below `gamma`, i.e. when the
/// `floor(m * beta) + 1`-th smallest probability is at least `gamma`. The type
/// I error estimate is at most `alpha` exactly when the `m - floor(m * alpha)`-th
/// (= `ceil(m * (1 - alpha))`-th) smallest probability is below `gamma`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Criteria {
    pub m: usize,
    /// `floor(m * beta)`: misses allowed under the alternative.
    pub max_misses: usize,
    /// `floor(m * alpha)`: rejections allowed under the null.
    pub max_false: usize,
    /// Rank of the power threshold.
    pub power_rank: usize,
    /// Rank of the type I error threshold.
    pub type1_rank: usize,
}

impl Criteria {
    pub fn new(m: usize, alpha: f64, beta: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::config("alpha", format!("must lie in (0, 1), got {alpha}")));
        }
        if !(beta > 0.0 && beta < 1.0) {
            return Err(Error::config("beta", format!("must lie in (0, 1), got {beta}")));
        }
        if m == 0 {
            return Err(Error::config("m", "must be at least 1"));
        }
        let max_misses = floor_guarded(m as f64 * beta) as usize;
        let max_false = floor_guarded(m as f64 * alpha) as usize;
        if max_misses < 1 {
            return Err(Error::argument(format!("m = {m} is too small for beta = {beta}: floor(m * beta) < 1")));
        }
        Ok(Criteria {
            m,
            max_misses,
            max_false,
            power_rank: max_misses + 1,
            type1_rank: m - max_false,
        })
    }
}

/// Operating characteristics of the rule "declare H1 when Pr(H1 | data) >= gamma".
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OcEstimate {
    pub n: f64,
    pub gamma: f64,
    pub power: f64,
    pub type1: f64,
    /// Power threshold on the probability scale.
    pub xi1: f64,
    /// Type I error threshold on the probability scale.
    pub xi0: f64,
    pub xi1_logit: f64,
    pub xi0_logit: f64,
    /// Repetitions at or above gamma under each hypothesis.
    pub power_hits: usize,
    pub type1_hits: usize,
    pub criteria: Criteria,
}

impl OcEstimate {
    /// Estimates from probabilities under H1 and H0 (equal length).
    pub fn from_probs(
        n: f64,
        probs1: &[f64],
        probs0: &[f64],
        gamma: f64,
        alpha: f64,
        beta: f64,
        logit_eps: f64,
    ) -> Result<Self> {
        if probs1.len() != probs0.len() {
            return Err(Error::argument("sampling distributions must have the same m"));
        }
        if !(0.5..1.0).contains(&gamma) {
            return Err(Error::argument(format!("gamma must lie in [0.5, 1), got {gamma}")));
        }
        let criteria = Criteria::new(probs1.len(), alpha, beta)?;
        let power_hits = probs1.iter().filter(|&&p| p >= gamma).count();
        let type1_hits = probs0.iter().filter(|&&p| p >= gamma).count();
        let xi1 = xi_in_place(criteria.power_rank, &mut probs1.to_vec())?;
        let xi0 = xi_in_place(criteria.type1_rank, &mut probs0.to_vec())?;
        let m = criteria.m as f64;
        Ok(OcEstimate {
            n,
            gamma,
            power: power_hits as f64 / m,
            type1: type1_hits as f64 / m,
            xi1,
            xi0,
            xi1_logit: logit_clamped(xi1, logit_eps),
            xi0_logit: logit_clamped(xi0, logit_eps),
            power_hits,
            type1_hits,
            criteria,
        })
    }

    pub fn power_met(&self) -> bool {
        self.criteria.m - self.power_hits <= self.criteria.max_misses
    }

    pub fn type1_met(&self) -> bool {
        self.type1_hits <= self.criteria.max_false
    }

    /// Both criteria hold, counted exactly.
    pub fn criteria_met(&self) -> bool {
        self.power_met() && self.type1_met()
    }
}

/// Operating characteristics from two simulated sampling distributions.
pub fn oc_estimate(sd1: &SampDist, sd0: &SampDist, gamma: f64, alpha: f64, beta: f64, logit_eps: f64) -> Result<OcEstimate> {
    if sd1.n != sd0.n {
        return Err(Error::argument("sampling distributions were simulated at different sample sizes"));
    }
    OcEstimate::from_probs(sd1.n as f64, &sd1.probs, &sd0.probs, gamma, alpha, beta, logit_eps)
}

/// Whether some gamma meets both criteria: the type I error threshold lies
/// strictly below the power threshold.
pub fn feasible_probs(probs1: &[f64], probs0: &[f64], criteria: &Criteria) -> Result<bool> {
    let xi1 = xi_in_place(criteria.power_rank, &mut probs1.to_vec())?;
    let xi0 = xi_in_place(criteria.type1_rank, &mut probs0.to_vec())?;
    Ok(xi0 < xi1)
}

pub fn feasible(sd1: &SampDist, sd0: &SampDist, alpha: f64, beta: f64) -> Result<bool> {
    if sd1.m() != sd0.m() {
        return Err(Error::argument("sampling distributions must have the same m"));
    }
    feasible_probs(&sd1.probs, &sd0.probs, &Criteria::new(sd1.m(), alpha, beta)?)
}

/// Smallest gamma meeting the type I error criterion given its threshold:
/// the next representable value above `xi0`.
pub fn gamma_from_threshold(xi0: f64) -> f64 {
    xi0.next_up()
}

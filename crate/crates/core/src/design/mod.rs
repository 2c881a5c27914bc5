//! Sample size and critical value search from two simulated sample sizes.

pub mod bootstrap;
pub mod lines;
pub mod search;

use serde::Serialize;

pub use bootstrap::{bootstrap_cis, BootstrapResult};
pub use lines::{matched_lines, phase1_lines, LineKind, RankLines};
pub use search::{search_smallest, Predicates, Resolution, SearchBounds, SearchOutcome};

use crate::config::{DesignConfig, OptimizerOptions};
use crate::error::{Error, Result};
use crate::models::{group_a_size, DataGenProcess, IntervalHypothesis, Model};
use crate::numeric::std_normal_quantile;
use crate::proxy::standardized_distance;
use crate::rng::{Hypothesis, Phase};
use crate::sampdist::{estimate, estimate_range, gamma_from_threshold, Criteria, OcEstimate, SampDist};

/// Galloping gives up once `n` exceeds the start by this factor.
const CAP_FACTOR: f64 = 65_536.0;

/// Large-sample starting size
/// `ceil(((z_{1-alpha} + z_{1-beta}) / a)^2)`, where `a` is the standardized
/// distance between the estimand under `eta` and the nearest finite endpoint,
/// per unit of sample size on the model's working scale.
pub fn bvm_sample_size(
    model: &dyn Model,
    hyp: &IntervalHypothesis,
    eta: &[f64],
    alpha: f64,
    beta: f64,
    q: f64,
) -> Result<usize> {
    let info = model.fisher_info(eta, q)?;
    let theta = model.working(model.theta(eta));
    let a = [hyp.lower, hyp.upper]
        .into_iter()
        .filter(|d| d.is_finite())
        .map(|d| standardized_distance(model.working(d), theta, info).abs())
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::argument("hypothesis needs at least one finite endpoint"))?;
    if !(a > 0.0) {
        return Err(Error::infeasible("the alternative sits on the hypothesis boundary", None));
    }
    let z = std_normal_quantile(1.0 - alpha)? + std_normal_quantile(1.0 - beta)?;
    let n = (z / a).powi(2).ceil();
    if !n.is_finite() || n > 1e12 {
        return Err(Error::Range(format!("starting sample size {n} is not usable")));
    }
    Ok(n as usize)
}

/// Starting size for a configuration: the large-sample size at the median of
/// the alternative process, raised to the model's minimum.
pub fn initial_n0(config: &DesignConfig) -> Result<usize> {
    let model = config.model.as_model();
    let n = bvm_sample_size(model, &config.hypothesis, &config.psi1.median_eta(), config.alpha, config.beta, config.q)?;
    Ok(n.max(model.min_sample_size()))
}

/// Simulated distributions under both hypotheses at one sample size.
#[derive(Clone, Debug, PartialEq)]
pub struct Anchor {
    pub n: usize,
    pub h1: SampDist,
    pub h0: SampDist,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchRecord {
    pub stage: &'static str,
    pub outcome: SearchOutcome,
}

/// Everything the optimizer simulated and decided, enough to resume from.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerTrace {
    pub n0: usize,
    pub n1: usize,
    /// Answer of the first matched-line search.
    pub n2: f64,
    pub anchors: Vec<Anchor>,
    /// Indices into `anchors` of the pair behind the final lines.
    pub final_pair: (usize, usize),
    pub phase1: (RankLines, RankLines),
    /// Final lines under H1 and H0.
    pub lines: (RankLines, RankLines),
    pub searches: Vec<SearchRecord>,
    pub flags: Vec<String>,
    pub criteria: Criteria,
    pub min_n: usize,
    pub resolution: Resolution,
}

impl OptimizerTrace {
    /// Posterior probabilities computed across all simulations.
    pub fn evaluations(&self) -> usize {
        self.anchors.iter().map(|a| a.h0.evaluations + a.h1.evaluations).sum()
    }

    pub fn anchor_sizes(&self) -> Vec<usize> {
        self.anchors.iter().map(|a| a.n).collect()
    }

    pub fn final_anchors(&self) -> (&Anchor, &Anchor) {
        (&self.anchors[self.final_pair.0], &self.anchors[self.final_pair.1])
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DesignRecommendation {
    /// Recommended sample size (group B for two-group models).
    pub n: f64,
    /// Both groups together.
    pub n_total: f64,
    pub gamma: f64,
    /// The type I error threshold fell outside `[0.5, 1)` and gamma was clamped.
    pub gamma_clamped: bool,
    /// Gamma was fixed by the caller instead of optimized.
    pub gamma_fixed: bool,
    /// Operating characteristics predicted at `(n, gamma)`.
    pub oc: OcEstimate,
    pub trace: OptimizerTrace,
}

/// Smallest allowed distance between the two simulated sizes.
pub fn min_anchor_gap(n0: usize) -> usize {
    2.max((0.1 * n0 as f64).ceil() as usize)
}

fn simulate_anchor(config: &DesignConfig, n: usize, k: u32) -> Result<Anchor> {
    let setup = config.sim_setup();
    let h1 = estimate(&setup, &config.psi1, Hypothesis::Alternative, n, config.m, Phase::Anchor(k))?;
    let h0 = estimate(&setup, &config.psi0, Hypothesis::Null, n, config.m, Phase::Anchor(k))?;
    Ok(Anchor { n, h1, h0 })
}

fn matched_pair(a: &Anchor, b: &Anchor, subgroups: usize) -> Result<(RankLines, RankLines)> {
    Ok((matched_lines(&a.h1, &b.h1, subgroups)?, matched_lines(&a.h0, &b.h0, subgroups)?))
}

/// Smallest size at which the design criteria can be met under `lines`.
/// With a fixed gamma only the power criterion drives the search.
pub(crate) fn search_lines(
    lines: &(RankLines, RankLines),
    criteria: Criteria,
    opts: &OptimizerOptions,
    bounds: SearchBounds,
) -> Result<SearchOutcome> {
    let mut preds = Predicates::new(&lines.0, &lines.1, criteria)?;
    match opts.fixed_gamma {
        Some(g) => search_smallest(|n| preds.power_at(n, g), bounds),
        None => search_smallest(|n| preds.feasible(n), bounds),
    }
}

fn bounds(min_n: usize, start: f64, resolution: Resolution, opts: &OptimizerOptions) -> SearchBounds {
    SearchBounds {
        lo: min_n as f64,
        start,
        cap: (start.max(min_n as f64) * CAP_FACTOR).min(1e12),
        resolution,
        scan_window: opts.scan_window,
    }
}

/// `(gamma, clamped)` for sample size `n` under `lines`.
pub(crate) fn choose_gamma(
    lines: &(RankLines, RankLines),
    criteria: Criteria,
    opts: &OptimizerOptions,
    n: f64,
) -> Result<(f64, bool)> {
    if let Some(g) = opts.fixed_gamma {
        return Ok((g, false));
    }
    let mut preds = Predicates::new(&lines.0, &lines.1, criteria)?;
    let gamma = gamma_from_threshold(preds.xi0(n));
    if gamma < 0.5 {
        Ok((0.5, true))
    } else if gamma >= 1.0 {
        Ok((1f64.next_down(), true))
    } else {
        Ok((gamma, false))
    }
}

fn total_size(model: &dyn Model, q: f64, n: f64) -> f64 {
    if !model.two_group() {
        n
    } else if n.fract() == 0.0 {
        n + group_a_size(q, n as usize) as f64
    } else {
        n * (1.0 + q)
    }
}

fn recommend(config: &DesignConfig, trace: OptimizerTrace, n: f64) -> Result<DesignRecommendation> {
    let opts = &config.optimizer;
    let (gamma, gamma_clamped) = choose_gamma(&trace.lines, trace.criteria, opts, n)?;
    let probs1 = trace.lines.0.predict_probs(n);
    let probs0 = trace.lines.1.predict_probs(n);
    let oc = OcEstimate::from_probs(n, &probs1, &probs0, gamma, config.alpha, config.beta, opts.logit_eps)?;
    let mut trace = trace;
    if gamma_clamped {
        trace.flags.push(format!("gamma clamped to {gamma}"));
    }
    Ok(DesignRecommendation {
        n,
        n_total: total_size(config.model.as_model(), config.q, n),
        gamma,
        gamma_clamped,
        gamma_fixed: opts.fixed_gamma.is_some(),
        oc,
        trace,
    })
}

fn note_search(trace_flags: &mut Vec<String>, stage: &str, out: &SearchOutcome) {
    if out.flagged {
        trace_flags.push(format!("{stage}: feasible sizes may exist below the scan window"));
    } else if out.repaired {
        trace_flags.push(format!("{stage}: non-monotone predicate repaired by the local scan"));
    }
}

/// Finds the smallest sample size and its critical value.
///
/// Sampling distributions are simulated at the large-sample starting size
/// `n0`, extrapolated with limiting slopes to pick a second size `n1`, and
/// simulated again there. Lines through matched ranks of the two simulations
/// then locate the answer; if it lands far from `n1` a third size is simulated
/// and the lines are rebuilt from the last two.
pub fn optimize(config: &DesignConfig) -> Result<DesignRecommendation> {
    config.validate()?;
    let model = config.model.as_model();
    let opts = &config.optimizer;
    let criteria = config.criteria()?;
    let min_n = model.min_sample_size();
    let resolution = if opts.fractional_n { Resolution::Hundredth } else { Resolution::Integer };
    let mut flags = Vec::new();
    let mut searches = Vec::new();

    let n0 = initial_n0(config)?;
    let a0 = simulate_anchor(config, n0, 0)?;
    let phase1 = (
        phase1_lines(&a0.h1, model, &config.hypothesis, config.q)?,
        phase1_lines(&a0.h0, model, &config.hypothesis, config.q)?,
    );
    let s1 = search_lines(&phase1, criteria, opts, bounds(min_n, n0 as f64, Resolution::Integer, opts))?;
    note_search(&mut flags, "phase 1", &s1);
    let mut n1 = s1.n as usize;
    searches.push(SearchRecord { stage: "phase 1", outcome: s1 });
    // Matched-rank slopes from nearly equal sizes are dominated by noise, so
    // the anchors are kept at least 10% (and 2) apart.
    let gap = min_anchor_gap(n0);
    if n1.abs_diff(n0) < gap {
        let moved = if n1 < n0 && n0 >= min_n + gap { n0 - gap } else { n0 + gap };
        flags.push(format!("second anchor moved from {n1} to {moved}"));
        n1 = moved;
    }

    let a1 = simulate_anchor(config, n1, 1)?;
    let lines = matched_pair(&a0, &a1, opts.subgroups)?;
    let s2 = search_lines(&lines, criteria, opts, bounds(min_n, n1 as f64, resolution, opts))?;
    note_search(&mut flags, "phase 2", &s2);
    let n2 = s2.n;
    searches.push(SearchRecord { stage: "phase 2", outcome: s2 });

    let mut trace = OptimizerTrace {
        n0,
        n1,
        n2,
        anchors: vec![a0, a1],
        final_pair: (0, 1),
        phase1,
        lines,
        searches,
        flags,
        criteria,
        min_n,
        resolution,
    };
    let mut n = n2;
    let n3 = n2.ceil() as usize;
    if opts.resimulate && (n2 - n1 as f64).abs() / n1 as f64 > opts.resimulate_threshold && n3 != n1 && n3 != n0 {
        let a2 = simulate_anchor(config, n3, 2)?;
        trace.lines = matched_pair(&trace.anchors[1], &a2, opts.subgroups)?;
        trace.anchors.push(a2);
        trace.final_pair = (1, 2);
        let s3 = search_lines(&trace.lines, criteria, opts, bounds(min_n, n3 as f64, resolution, opts))?;
        note_search(&mut trace.flags, "phase 3", &s3);
        n = s3.n;
        trace.searches.push(SearchRecord { stage: "phase 3", outcome: s3 });
    }
    recommend(config, trace, n)
}

/// Adds `additional` repetitions to the final pair of simulations and redoes
/// the final search. The new repetitions continue the same lanes, so the
/// enlarged distributions equal ones simulated with the larger `m` directly.
pub fn augment_m(rec: &DesignRecommendation, config: &DesignConfig, additional: usize) -> Result<DesignRecommendation> {
    if additional == 0 {
        return Err(Error::argument("additional repetitions must be positive"));
    }
    let mut trace = rec.trace.clone();
    let m_old = trace.criteria.m;
    let m_new = m_old + additional;
    let mut config = config.clone();
    config.m = m_new;
    config.validate()?;
    let setup = config.sim_setup();
    let range = m_old as u64..m_new as u64;
    let (i, j) = trace.final_pair;
    for k in [i, j] {
        let anchor = &mut trace.anchors[k];
        for (which, psi) in [(Hypothesis::Alternative, &config.psi1), (Hypothesis::Null, &config.psi0)] {
            let sd = match which {
                Hypothesis::Alternative => &mut anchor.h1,
                Hypothesis::Null => &mut anchor.h0,
            };
            if sd.m() != m_old {
                return Err(Error::argument("trace simulations do not match its criteria"));
            }
            sd.extend(extend_lanes(&setup, psi, which, sd, range.clone())?)?;
        }
    }
    trace.criteria = config.criteria()?;
    trace.lines = matched_pair(&trace.anchors[i], &trace.anchors[j], config.optimizer.subgroups)?;
    let start = trace.anchors[j].n as f64;
    let out = search_lines(
        &trace.lines,
        trace.criteria,
        &config.optimizer,
        bounds(trace.min_n, start, trace.resolution, &config.optimizer),
    )?;
    note_search(&mut trace.flags, "augment", &out);
    let n = out.n;
    trace.searches.push(SearchRecord { stage: "augment", outcome: out });
    recommend(&config, trace, n)
}

fn extend_lanes(
    setup: &crate::sampdist::SimSetup<'_>,
    psi: &DataGenProcess,
    which: Hypothesis,
    sd: &SampDist,
    range: std::ops::Range<u64>,
) -> Result<SampDist> {
    estimate_range(setup, psi, which, sd.n, range, sd.phase)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelSpec, NormalMean};

    fn normal_config(effect: f64, m: usize, seed: u64) -> DesignConfig {
        DesignConfig {
            seed,
            alpha: 0.05,
            beta: 0.2,
            q: 1.0,
            m,
            hypothesis: IntervalHypothesis { lower: 0.0, upper: f64::INFINITY },
            model: ModelSpec::NormalMean(NormalMean::flat(1.0)),
            psi0: DataGenProcess::Degenerate { eta: vec![0.0] },
            psi1: DataGenProcess::Degenerate { eta: vec![effect] },
            optimizer: Default::default(),
            bootstrap: Default::default(),
            contour: Default::default(),
        }
    }

    #[test]
    fn bvm_for_the_normal_mean() {
        // ((1.6449 + 0.8416) / 0.8)^2 = 9.66
        let c = normal_config(0.8, 100, 0);
        assert_eq!(initial_n0(&c).unwrap(), 10);
        let c = normal_config(0.2, 100, 0);
        assert_eq!(initial_n0(&c).unwrap(), 155);
    }

    #[test]
    fn bvm_rejects_boundary_alternative() {
        let model = NormalMean::flat(1.0);
        let hyp = IntervalHypothesis { lower: 0.0, upper: f64::INFINITY };
        assert!(matches!(bvm_sample_size(&model, &hyp, &[0.0], 0.05, 0.2, 1.0), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn optimize_flat_normal_meets_criteria() {
        let c = normal_config(0.8, 2000, 7);
        let rec = optimize(&c).unwrap();
        assert!(rec.oc.criteria_met(), "{:?}", rec.oc);
        assert!((8.0..=14.0).contains(&rec.n), "n = {}", rec.n);
        // With a flat prior the null probability at the boundary is uniform.
        assert!((rec.gamma - 0.95).abs() < 0.02, "gamma = {}", rec.gamma);
        assert_eq!(rec.trace.anchors[0].n, rec.trace.n0);
        assert_eq!(rec.n_total, rec.n);
    }

    #[test]
    fn optimize_is_reproducible() {
        let c = normal_config(0.5, 500, 3);
        let a = optimize(&c).unwrap();
        let b = optimize(&c).unwrap();
        assert_eq!(a.n, b.n);
        assert_eq!(a.gamma, b.gamma);
        assert_eq!(a.trace.anchor_sizes(), b.trace.anchor_sizes());
    }

    #[test]
    fn fractional_search_is_within_one_of_integer() {
        let mut c = normal_config(0.5, 1000, 11);
        let int = optimize(&c).unwrap();
        c.optimizer.fractional_n = true;
        let frac = optimize(&c).unwrap();
        assert!(frac.n <= int.n + 1e-9 && frac.n > int.n - 1.0 - 1e-9, "{} vs {}", frac.n, int.n);
    }

    #[test]
    fn fixed_gamma_keeps_gamma() {
        let mut c = normal_config(0.5, 500, 5);
        c.optimizer.fixed_gamma = Some(0.9);
        let rec = optimize(&c).unwrap();
        assert_eq!(rec.gamma, 0.9);
        assert!(rec.gamma_fixed);
        assert!(rec.oc.power_met());
    }

    #[test]
    fn augment_matches_direct_simulation_at_the_anchors() {
        let c = normal_config(0.5, 400, 9);
        let rec = optimize(&c).unwrap();
        let aug = augment_m(&rec, &c, 200).unwrap();
        let (a, b) = aug.trace.final_anchors();
        let mut big = c.clone();
        big.m = 600;
        let setup = big.sim_setup();
        let (k, _) = aug.trace.final_pair;
        let direct = estimate(&setup, &big.psi1, Hypothesis::Alternative, a.n, 600, Phase::Anchor(k as u32)).unwrap();
        assert_eq!(direct.probs, a.h1.probs);
        assert_eq!(b.h0.m(), 600);
        assert_eq!(aug.trace.criteria.m, 600);
    }
}

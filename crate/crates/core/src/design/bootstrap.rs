//! Bootstrap confidence intervals for the recommended `(n, gamma)`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::DesignConfig;
use crate::error::{Error, Result};
use crate::numeric::{ceil_guarded, floor_guarded};
use crate::rng::{Hypothesis, Lane, Phase, RngStream};
use crate::sampdist::Criteria;

use super::lines::{lines_from_groups, Prepared};
use super::{bounds, choose_gamma, search_lines, DesignRecommendation};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BootDraw {
    pub n: f64,
    pub gamma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BootstrapResult {
    pub resamples: usize,
    pub resample_size: usize,
    pub level: f64,
    /// One entry per resample; `None` when no size was feasible.
    pub draws: Vec<Option<BootDraw>>,
    pub n_ci: Option<(f64, f64)>,
    pub gamma_ci: Option<(f64, f64)>,
    pub infeasible: usize,
    /// More than 1% of resamples were infeasible.
    pub flagged: bool,
}

/// Percentile interval of `values` (sorted in place).
pub fn percentile_interval(values: &mut [f64], level: f64) -> Option<(f64, f64)> {
    let m = values.len();
    if m == 0 {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let lo = (floor_guarded(m as f64 * (1.0 - level) / 2.0) as usize).max(1);
    let hi = (ceil_guarded(m as f64 * (1.0 + level) / 2.0) as usize).clamp(lo, m);
    Some((values[lo - 1], values[hi - 1]))
}

/// Resamples the four simulations behind the final lines with replacement,
/// `resample_size` repetitions each, and repeats the final search and the
/// choice of gamma for every resample.
pub fn bootstrap_cis(
    rec: &DesignRecommendation,
    config: &DesignConfig,
    resamples: usize,
    resample_size: usize,
    level: f64,
) -> Result<BootstrapResult> {
    if resamples == 0 {
        return Err(Error::argument("at least one bootstrap resample is required"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::argument(format!("confidence level must lie in (0, 1), got {level}")));
    }
    let criteria = Criteria::new(resample_size, config.alpha, config.beta)?;
    let trace = &rec.trace;
    let (a, b) = trace.final_anchors();
    let prepared = [Prepared::new(&a.h1), Prepared::new(&b.h1), Prepared::new(&a.h0), Prepared::new(&b.h0)];
    let m = a.h1.m();
    if prepared.iter().any(|p| p.m() != m) {
        return Err(Error::argument("final simulations differ in m"));
    }
    let opts = &config.optimizer;
    let subgroups = opts.subgroups;
    let search_bounds = bounds(trace.min_n, rec.n, trace.resolution, opts);
    let (n_a, n_b) = (a.n as f64, b.n as f64);

    let draws: Vec<Option<BootDraw>> = (0..resamples as u64)
        .into_par_iter()
        .map_init(
            || (vec![0u32; m], Vec::new()),
            |(counts, scratch), r| -> Result<Option<BootDraw>> {
                let mut rng = RngStream::new(config.seed, Lane::new(Hypothesis::Null, r, Phase::Bootstrap)).rng();
                let mut groups = Vec::with_capacity(4);
                for p in &prepared {
                    counts.iter_mut().for_each(|c| *c = 0);
                    for _ in 0..resample_size {
                        counts[rng.random_range(0..m)] += 1;
                    }
                    groups.push(p.grouped(Some(counts), subgroups, scratch));
                }
                let mut g = groups.into_iter();
                let (g1a, g1b, g0a, g0b) = (g.next().unwrap(), g.next().unwrap(), g.next().unwrap(), g.next().unwrap());
                let lines = (
                    lines_from_groups(Hypothesis::Alternative, n_a, n_b, g1a, g1b),
                    lines_from_groups(Hypothesis::Null, n_a, n_b, g0a, g0b),
                );
                match search_lines(&lines, criteria, opts, search_bounds) {
                    Ok(out) => {
                        let (gamma, _) = choose_gamma(&lines, criteria, opts, out.n)?;
                        Ok(Some(BootDraw { n: out.n, gamma }))
                    }
                    Err(Error::Infeasible { .. }) => Ok(None),
                    Err(e) => Err(e),
                }
            },
        )
        .collect::<Result<_>>()?;

    let infeasible = draws.iter().filter(|d| d.is_none()).count();
    let mut ns: Vec<f64> = draws.iter().flatten().map(|d| d.n).collect();
    let mut gammas: Vec<f64> = draws.iter().flatten().map(|d| d.gamma).collect();
    Ok(BootstrapResult {
        resamples,
        resample_size,
        level,
        n_ci: percentile_interval(&mut ns, level),
        gamma_ci: percentile_interval(&mut gammas, level),
        infeasible,
        flagged: infeasible * 100 > resamples,
        draws,
    })
}

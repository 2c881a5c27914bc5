//! Per-rank linear models of posterior-probability logits as functions of n.

use std::ops::Range;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{IntervalHypothesis, Model};
use crate::numeric::inv_logit_raw;
use crate::proxy::limiting_slope;
use crate::rng::Hypothesis;
use crate::sampdist::SampDist;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LineKind {
    /// Through the simulated logit at `n0` with the limiting slope.
    Limiting,
    /// Through equal ranks of the sorted logits at two simulated sizes.
    Matched,
}

/// One line per repetition (or per rank), evaluated at any sample size.
///
/// The simulated probabilities at the anchors are kept so that predictions at
/// the anchors reproduce them exactly rather than through a logit round trip.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RankLines {
    pub hypothesis: Hypothesis,
    pub kind: LineKind,
    pub n0: f64,
    pub n1: Option<f64>,
    pub intercepts: Vec<f64>,
    pub slopes: Vec<f64>,
    #[serde(skip)]
    pub probs0: Vec<f64>,
    #[serde(skip)]
    pub probs1: Vec<f64>,
    /// Index ranges of the theta subgroups (a single range when undivided).
    pub groups: Vec<Range<usize>>,
}

impl RankLines {
    pub fn m(&self) -> usize {
        self.slopes.len()
    }

    pub fn predict_logits(&self, n: f64) -> Vec<f64> {
        self.intercepts.iter().zip(&self.slopes).map(|(a, s)| a + s * (n - self.n0)).collect()
    }

    /// Predicted probabilities at `n`, written into `out`.
    pub fn predict_probs_into(&self, n: f64, out: &mut Vec<f64>) {
        out.clear();
        if n == self.n0 {
            out.extend_from_slice(&self.probs0);
        } else if Some(n) == self.n1 {
            out.extend_from_slice(&self.probs1);
        } else {
            let dn = n - self.n0;
            out.extend(self.intercepts.iter().zip(&self.slopes).map(|(a, s)| inv_logit_raw(a + s * dn)));
        }
    }

    pub fn predict_probs(&self, n: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.m());
        self.predict_probs_into(n, &mut out);
        out
    }
}

/// Lines through each simulated logit at `sd.n` with the limiting slope for
/// that repetition's theta, computed on the model's working scale with the
/// per-unit information at its eta-plus.
pub fn phase1_lines(sd: &SampDist, model: &dyn Model, hyp: &IntervalHypothesis, q: f64) -> Result<RankLines> {
    let working = hyp.map(|t| model.working(t));
    let mut slopes = Vec::with_capacity(sd.m());
    let mut cache: Option<(&[f64], f64)> = None;
    for r in 0..sd.m() {
        let eta = sd.eta(r);
        let info = match cache {
            Some((e, info)) if e == eta => info,
            _ => {
                let info = model.fisher_info(eta, q)?;
                cache = Some((eta, info));
                info
            }
        };
        slopes.push(limiting_slope(model.working(sd.thetas[r]), &working, info)?);
    }
    Ok(RankLines {
        hypothesis: sd.hypothesis,
        kind: LineKind::Limiting,
        n0: sd.n as f64,
        n1: None,
        intercepts: sd.logits.clone(),
        slopes,
        probs0: sd.probs.clone(),
        probs1: Vec::new(),
        groups: vec![0..sd.m()],
    })
}

/// Rank-matching structure for one simulated distribution, reused across
/// bootstrap resamples.
pub(crate) struct Prepared<'a> {
    sd: &'a SampDist,
    by_prob: Vec<u32>,
    /// Repetition indices sorted by theta, or `None` when theta is constant.
    by_theta: Option<Vec<u32>>,
}

impl<'a> Prepared<'a> {
    pub(crate) fn new(sd: &'a SampDist) -> Self {
        let m = sd.m();
        let mut by_prob: Vec<u32> = (0..m as u32).collect();
        by_prob.sort_by(|&a, &b| sd.probs[a as usize].total_cmp(&sd.probs[b as usize]).then(a.cmp(&b)));
        let constant = sd.thetas.windows(2).all(|w| w[0] == w[1]);
        let by_theta = (!constant).then(|| {
            let mut idx: Vec<u32> = (0..m as u32).collect();
            idx.sort_by(|&a, &b| sd.thetas[a as usize].total_cmp(&sd.thetas[b as usize]).then(a.cmp(&b)));
            idx
        });
        Prepared { sd, by_prob, by_theta }
    }

    pub(crate) fn m(&self) -> usize {
        self.sd.m()
    }

    pub(crate) fn has_theta_spread(&self) -> bool {
        self.by_theta.is_some()
    }

    /// `(logit, prob)` pairs grouped by theta order and sorted by probability
    /// within each group, with repetition `r` included `counts[r]` times
    /// (once each when `counts` is `None`).
    pub(crate) fn grouped(&self, counts: Option<&[u32]>, subgroups: usize, scratch: &mut Vec<u64>) -> Vec<Vec<(f64, f64)>> {
        let m = self.sd.m();
        let count = |r: usize| counts.map_or(1, |c| c[r] as u64);
        let total: u64 = match counts {
            Some(c) => c.iter().map(|&x| x as u64).sum(),
            None => m as u64,
        };
        let groups = match &self.by_theta {
            Some(_) => (subgroups as u64).clamp(1, total.max(1)),
            None => 1,
        } as usize;
        let size = (total / groups as u64).max(1);
        let mut out: Vec<Vec<(f64, f64)>> = (0..groups)
            .map(|g| Vec::with_capacity(if g + 1 == groups { (total - size * g as u64) as usize } else { size as usize }))
            .collect();
        match &self.by_theta {
            None => {
                for &r in &self.by_prob {
                    let r = r as usize;
                    for _ in 0..count(r) {
                        out[0].push((self.sd.logits[r], self.sd.probs[r]));
                    }
                }
            }
            Some(by_theta) => {
                // First position of each repetition in theta order.
                scratch.clear();
                scratch.resize(m, 0);
                let mut pos = 0u64;
                for &r in by_theta {
                    scratch[r as usize] = pos;
                    pos += count(r as usize);
                }
                for &r in &self.by_prob {
                    let r = r as usize;
                    let start = scratch[r];
                    for p in start..start + count(r) {
                        let g = ((p / size) as usize).min(groups - 1);
                        out[g].push((self.sd.logits[r], self.sd.probs[r]));
                    }
                }
            }
        }
        out
    }
}

pub(crate) fn lines_from_groups(
    hypothesis: Hypothesis,
    n0: f64,
    n1: f64,
    at0: Vec<Vec<(f64, f64)>>,
    at1: Vec<Vec<(f64, f64)>>,
) -> RankLines {
    let m: usize = at0.iter().map(Vec::len).sum();
    let mut lines = RankLines {
        hypothesis,
        kind: LineKind::Matched,
        n0,
        n1: Some(n1),
        intercepts: Vec::with_capacity(m),
        slopes: Vec::with_capacity(m),
        probs0: Vec::with_capacity(m),
        probs1: Vec::with_capacity(m),
        groups: Vec::with_capacity(at0.len()),
    };
    let dn = n1 - n0;
    for (g0, g1) in at0.into_iter().zip(at1) {
        let start = lines.slopes.len();
        for ((l0, p0), (l1, p1)) in g0.into_iter().zip(g1) {
            lines.intercepts.push(l0);
            lines.slopes.push((l1 - l0) / dn);
            lines.probs0.push(p0);
            lines.probs1.push(p1);
        }
        lines.groups.push(start..lines.slopes.len());
    }
    lines
}

/// Lines joining equal ranks of the sorted logits at two sample sizes, within
/// each of `subgroups` groups formed by the order of theta. Distributions with
/// a single theta value are not divided.
pub fn matched_lines(sd0: &SampDist, sd1: &SampDist, subgroups: usize) -> Result<RankLines> {
    if sd0.hypothesis != sd1.hypothesis {
        return Err(Error::argument("anchor distributions belong to different hypotheses"));
    }
    if sd0.n == sd1.n {
        return Err(Error::argument(format!("anchors must differ, both are n = {}", sd0.n)));
    }
    if sd0.m() != sd1.m() {
        return Err(Error::argument(format!("anchor distributions have different m ({} vs {})", sd0.m(), sd1.m())));
    }
    if subgroups == 0 {
        return Err(Error::config("optimizer.subgroups", "must be at least 1"));
    }
    let p0 = Prepared::new(sd0);
    let p1 = Prepared::new(sd1);
    let s = if p0.has_theta_spread() || p1.has_theta_spread() { subgroups } else { 1 };
    let mut scratch = Vec::new();
    let g0 = p0.grouped(None, s, &mut scratch);
    let g1 = p1.grouped(None, s, &mut scratch);
    Ok(lines_from_groups(sd0.hypothesis, sd0.n as f64, sd1.n as f64, g0, g1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::NormalMean;
    use crate::numeric::logit_clamped;
    use crate::rng::Phase;

    fn sd(n: usize, probs: &[f64], thetas: &[f64]) -> SampDist {
        SampDist {
            hypothesis: Hypothesis::Alternative,
            n,
            seed: 0,
            phase: Phase::Direct(0),
            probs: probs.to_vec(),
            logits: probs.iter().map(|&p| logit_clamped(p, 1e-12)).collect(),
            thetas: thetas.to_vec(),
            eta_plus: thetas.to_vec(),
            eta_len: 1,
            redrawn: 0,
            evaluations: probs.len(),
        }
    }

    fn probs_for(logits: &[f64]) -> Vec<f64> {
        logits.iter().map(|&l| inv_logit_raw(l)).collect()
    }

    #[test]
    fn two_point_lines() {
        let a = sd(10, &probs_for(&[2.0, 0.0]), &[1.0, 1.0]);
        let b = sd(20, &probs_for(&[3.0, 1.0]), &[1.0, 1.0]);
        let lines = matched_lines(&a, &b, 10).unwrap();
        assert_eq!(lines.groups.len(), 1);
        for s in &lines.slopes {
            assert!((s - 0.1).abs() < 1e-12);
        }
        let mid = lines.predict_logits(15.0);
        assert!((mid[0] - 0.5).abs() < 1e-12 && (mid[1] - 2.5).abs() < 1e-12);
    }

    #[test]
    fn identical_multisets_give_flat_lines() {
        let p = [0.3, 0.9, 0.5, 0.7];
        let lines = matched_lines(&sd(5, &p, &[0.0; 4]), &sd(9, &[0.9, 0.5, 0.7, 0.3], &[0.0; 4]), 1).unwrap();
        assert!(lines.slopes.iter().all(|&s| s == 0.0));
    }

    #[test]
    fn anchors_reproduce_sorted_probabilities() {
        let pa = [0.91, 0.2, 0.55, 0.999_999_999_999_9, 0.7];
        let pb = [0.3, 0.95, 0.8, 0.6, 0.99];
        let lines = matched_lines(&sd(12, &pa, &[0.0; 5]), &sd(30, &pb, &[0.0; 5]), 1).unwrap();
        let mut sa = pa.to_vec();
        sa.sort_by(f64::total_cmp);
        let mut sb = pb.to_vec();
        sb.sort_by(f64::total_cmp);
        assert_eq!(lines.predict_probs(12.0), sa);
        assert_eq!(lines.predict_probs(30.0), sb);
    }

    #[test]
    fn subgroups_follow_theta_order() {
        // Low theta has low probabilities at both sizes; matching within
        // theta groups pairs them with each other.
        let thetas = [1.0, 2.0, 3.0, 4.0];
        let a = sd(10, &[0.1, 0.2, 0.8, 0.9], &thetas);
        let b = sd(20, &[0.15, 0.3, 0.85, 0.95], &[4.0, 3.0, 2.0, 1.0]);
        let lines = matched_lines(&a, &b, 2).unwrap();
        assert_eq!(lines.groups, vec![0..2, 2..4]);
        // Group of the two smallest thetas: a has {0.1, 0.2}, b has {0.85, 0.95}.
        assert_eq!(lines.probs0[..2], [0.1, 0.2]);
        assert_eq!(lines.probs1[..2], [0.85, 0.95]);
    }

    #[test]
    fn remainder_goes_to_last_group() {
        let thetas: Vec<f64> = (0..7).map(f64::from).collect();
        let p: Vec<f64> = (0..7).map(|i| 0.1 + 0.1 * i as f64).collect();
        let lines = matched_lines(&sd(4, &p, &thetas), &sd(8, &p, &thetas), 3).unwrap();
        assert_eq!(lines.groups, vec![0..2, 2..4, 4..7]);
    }

    #[test]
    fn counts_match_explicit_duplication() {
        let thetas = [0.5, 0.1, 0.9, 0.3];
        let p = [0.6, 0.2, 0.9, 0.4];
        let base = sd(6, &p, &thetas);
        let counts = [2u32, 0, 1, 1];
        let dup = sd(6, &[0.6, 0.6, 0.9, 0.4], &[0.5, 0.5, 0.9, 0.3]);
        let mut scratch = Vec::new();
        let via_counts = Prepared::new(&base).grouped(Some(&counts), 2, &mut scratch);
        let explicit = Prepared::new(&dup).grouped(None, 2, &mut scratch);
        assert_eq!(via_counts, explicit);
    }

    #[test]
    fn errors() {
        let a = sd(10, &[0.5], &[0.0]);
        assert!(matched_lines(&a, &a, 1).is_err());
        assert!(matched_lines(&a, &sd(12, &[0.5, 0.6], &[0.0, 0.0]), 1).is_err());
    }

    #[test]
    fn phase1_boundary_is_flat() {
        let model = NormalMean::flat(1.0);
        let hyp = IntervalHypothesis::new(0.0, f64::INFINITY).unwrap();
        let s = sd(10, &[0.3, 0.8, 0.5], &[0.0; 3]);
        let lines = phase1_lines(&s, &model, &hyp, 1.0).unwrap();
        assert!(lines.slopes.iter().all(|&x| x == 0.0));
        assert_eq!(lines.predict_logits(1000.0), s.logits);
    }

    #[test]
    fn phase1_single_line() {
        let model = NormalMean::flat(2.0);
        let hyp = IntervalHypothesis::new(0.0, f64::INFINITY).unwrap();
        let s = sd(10, &[0.8], &[1.0]);
        let lines = phase1_lines(&s, &model, &hyp, 1.0).unwrap();
        assert_eq!(lines.m(), 1);
        assert!((lines.slopes[0] - 0.125).abs() < 1e-15);
        assert_eq!(lines.predict_probs(10.0), vec![0.8]);
    }
}

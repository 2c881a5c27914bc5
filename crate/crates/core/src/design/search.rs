//! Smallest sample size satisfying a predicate that is expected, but not
//! guaranteed, to be monotone.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::numeric::ceil_guarded;
use crate::sampdist::Criteria;

use super::lines::RankLines;

/// Grid on which sample sizes are searched.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Resolution {
    Integer,
    /// Hundredths of a unit.
    Hundredth,
}

impl Resolution {
    fn per_unit(self) -> f64 {
        match self {
            Resolution::Integer => 1.0,
            Resolution::Hundredth => 100.0,
        }
    }

    pub fn to_n(self, k: i64) -> f64 {
        k as f64 / self.per_unit()
    }

    fn to_k_ceil(self, n: f64) -> i64 {
        ceil_guarded(n * self.per_unit()) as i64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SearchBounds {
    pub lo: f64,
    pub start: f64,
    /// Largest size probed before giving up.
    pub cap: f64,
    pub resolution: Resolution,
    /// Sizes below the bisection answer re-checked one by one.
    pub scan_window: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SearchOutcome {
    pub n: f64,
    /// Every predicate evaluation in order: `(n, value)`.
    pub probes: Vec<(f64, bool)>,
    /// The scan below the bisection answer found a smaller feasible size.
    pub repaired: bool,
    /// That smaller size sat at the edge of the scan window, so feasible sizes
    /// may exist further down.
    pub flagged: bool,
}

/// Smallest `n` on the grid with `pred(n)` true.
///
/// Gallops from `start` (down while true, up while false) to bracket the
/// answer, bisects, then scans `scan_window` grid points below the result to
/// catch local non-monotonicity.
pub fn search_smallest(mut pred: impl FnMut(f64) -> bool, bounds: SearchBounds) -> Result<SearchOutcome> {
    let res = bounds.resolution;
    let lo = res.to_k_ceil(bounds.lo);
    let cap = res.to_k_ceil(bounds.cap).max(lo);
    let start = res.to_k_ceil(bounds.start).clamp(lo, cap);
    let mut memo: BTreeMap<i64, bool> = BTreeMap::new();
    let mut probes = Vec::new();
    let mut eval = |k: i64, probes: &mut Vec<(f64, bool)>| -> bool {
        *memo.entry(k).or_insert_with(|| {
            let v = pred(res.to_n(k));
            probes.push((res.to_n(k), v));
            v
        })
    };

    // Bracket: `bad` is false (or below lo), `good` is true.
    let (mut bad, mut good);
    if eval(start, &mut probes) {
        good = start;
        bad = lo - 1;
        let mut step = 1;
        while good > lo {
            let cand = (good - step).max(lo);
            if eval(cand, &mut probes) {
                good = cand;
                step *= 2;
            } else {
                bad = cand;
                break;
            }
        }
    } else {
        bad = start;
        let mut step = 1;
        loop {
            if bad >= cap {
                return Err(Error::infeasible(
                    format!("no sample size up to {} satisfies the design criteria", res.to_n(cap)),
                    Some(res.to_n(bad)),
                ));
            }
            let cand = (bad + step).min(cap);
            if eval(cand, &mut probes) {
                good = cand;
                break;
            }
            bad = cand;
            step *= 2;
        }
    }
    while good - bad > 1 {
        let mid = bad + (good - bad) / 2;
        if eval(mid, &mut probes) {
            good = mid;
        } else {
            bad = mid;
        }
    }

    let mut repaired = false;
    let mut flagged = false;
    let floor = (good - bounds.scan_window as i64).max(lo);
    let mut k = good - 1;
    let mut best = good;
    while k >= floor {
        if eval(k, &mut probes) {
            best = k;
            repaired = true;
        }
        k -= 1;
    }
    if repaired && best == floor && floor > lo {
        flagged = true;
    }
    Ok(SearchOutcome { n: res.to_n(best), probes, repaired, flagged })
}

/// Predicate evaluation on predicted distributions, with reusable buffers.
pub struct Predicates<'a> {
    pub lines1: &'a RankLines,
    pub lines0: &'a RankLines,
    pub criteria: Criteria,
    buf1: Vec<f64>,
    buf0: Vec<f64>,
}

impl<'a> Predicates<'a> {
    pub fn new(lines1: &'a RankLines, lines0: &'a RankLines, criteria: Criteria) -> Result<Self> {
        if lines1.m() != criteria.m || lines0.m() != criteria.m {
            return Err(Error::argument("rank lines and criteria disagree on m"));
        }
        Ok(Predicates { lines1, lines0, criteria, buf1: Vec::new(), buf0: Vec::new() })
    }

    /// Type I error threshold of the predicted null distribution at `n`.
    pub fn xi0(&mut self, n: f64) -> f64 {
        self.lines0.predict_probs_into(n, &mut self.buf0);
        let k = self.criteria.type1_rank - 1;
        *self.buf0.select_nth_unstable_by(k, f64::total_cmp).1
    }

    /// Power threshold of the predicted alternative distribution at `n`.
    pub fn xi1(&mut self, n: f64) -> f64 {
        self.lines1.predict_probs_into(n, &mut self.buf1);
        let k = self.criteria.power_rank - 1;
        *self.buf1.select_nth_unstable_by(k, f64::total_cmp).1
    }

    /// Some gamma meets both criteria at `n`: `xi0 < xi1`, checked by
    /// counting alternative probabilities at or below `xi0`.
    pub fn feasible(&mut self, n: f64) -> bool {
        let xi0 = self.xi0(n);
        self.lines1.predict_probs_into(n, &mut self.buf1);
        let at_or_below = self.buf1.iter().filter(|&&p| p <= xi0).count();
        at_or_below < self.criteria.power_rank
    }

    /// Power criterion at a fixed gamma.
    pub fn power_at(&mut self, n: f64, gamma: f64) -> bool {
        self.lines1.predict_probs_into(n, &mut self.buf1);
        let below = self.buf1.iter().filter(|&&p| p < gamma).count();
        below <= self.criteria.max_misses
    }
}

//! Large-sample proxy for the sampling distribution of posterior probabilities
//! and numerical checks of the limiting logit slope.
//!
//! With a normal posterior `N(theta_hat, I^-1 / n)` and the estimator drawn by
//! CDF inversion at a point `u`, the posterior probability of
//! `lower < theta < upper` is `Phi(A) - Phi(C)` with
//! `A = a(upper) sqrt(n) - Phi^-1(u)` and `C = a(lower) sqrt(n) - Phi^-1(u)`.
//! All logits here are computed in log space so they stay finite for very
//! large `n`.

use std::f64::consts::PI;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::IntervalHypothesis;
use crate::numeric::{std_normal_cdf, std_normal_quantile};
use crate::rng::{Hypothesis, Lane, Phase, RngStream};

/// One proxy repetition: CDF-inversion point, true estimand and information.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ProxyPoint {
    pub u: f64,
    pub theta: f64,
    pub info: f64,
}

impl ProxyPoint {
    pub fn new(u: f64, theta: f64, info: f64) -> Result<Self> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::argument(format!("proxy point u must lie in (0, 1), got {u}")));
        }
        if !(info > 0.0 && info.is_finite()) {
            return Err(Error::argument(format!("information must be positive, got {info}")));
        }
        if !theta.is_finite() {
            return Err(Error::argument("theta must be finite"));
        }
        Ok(ProxyPoint { u, theta, info })
    }
}

/// `(delta - theta) / sqrt(1 / info)`; infinite when `delta` is.
pub fn standardized_distance(delta: f64, theta: f64, info: f64) -> f64 {
    (delta - theta) * info.sqrt()
}

/// `ln Phi(x)`, accurate far into the lower tail.
pub fn log_std_normal_cdf(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        f64::NEG_INFINITY
    } else if x > 0.0 {
        (-std_normal_cdf(-x)).ln_1p()
    } else if x > -30.0 {
        std_normal_cdf(x).ln()
    } else {
        // Mills-ratio asymptotic series.
        let r = 1.0 / (x * x);
        let series = 1.0 - r * (1.0 - 3.0 * r * (1.0 - 5.0 * r * (1.0 - 7.0 * r)));
        -0.5 * x * x - 0.5 * (2.0 * PI).ln() - (-x).ln() + series.ln()
    }
}

fn log_add(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(Phi(hi) - Phi(lo))` for `lo < hi`.
fn log_normal_interval(lo: f64, hi: f64) -> f64 {
    if hi <= 0.0 {
        let top = log_std_normal_cdf(hi);
        top + (-(log_std_normal_cdf(lo) - top).exp()).ln_1p()
    } else if lo >= 0.0 {
        let top = log_std_normal_cdf(-lo);
        top + (-(log_std_normal_cdf(-hi) - top).exp()).ln_1p()
    } else {
        (-(std_normal_cdf(-hi) + std_normal_cdf(lo))).ln_1p()
    }
}

fn arguments(pt: &ProxyPoint, hyp: &IntervalHypothesis, n: f64) -> Result<(f64, f64)> {
    if !(n > 0.0) {
        return Err(Error::argument(format!("sample size must be positive, got {n}")));
    }
    if !(pt.u > 0.0 && pt.u < 1.0) {
        return Err(Error::argument(format!("proxy point u must lie in (0, 1), got {}", pt.u)));
    }
    let z = std_normal_quantile(pt.u)?;
    let root = n.sqrt();
    let a = standardized_distance(hyp.upper, pt.theta, pt.info) * root - z;
    let c = standardized_distance(hyp.lower, pt.theta, pt.info) * root - z;
    Ok((a, c))
}

/// Proxy posterior probability of `hyp` at sample size `n`.
pub fn proxy_prob(pt: &ProxyPoint, hyp: &IntervalHypothesis, n: f64) -> Result<f64> {
    let (a, c) = arguments(pt, hyp, n)?;
    Ok(log_normal_interval(c, a).exp())
}

/// Logit of [`proxy_prob`], computed without forming the probability.
pub fn proxy_logit(pt: &ProxyPoint, hyp: &IntervalHypothesis, n: f64) -> Result<f64> {
    let (a, c) = arguments(pt, hyp, n)?;
    let log_p = log_normal_interval(c, a);
    let log_q = log_add(log_std_normal_cdf(-a), log_std_normal_cdf(c));
    let l = log_p - log_q;
    if l.is_finite() {
        Ok(l)
    } else {
        Err(Error::Range(format!("proxy logit not finite at n = {n} (theta = {})", pt.theta)))
    }
}

/// Limit of `d/dn logit(p)` as `n` grows:
/// `(0.5 - [theta outside hyp]) * min(a(upper)^2, a(lower)^2)`.
pub fn limiting_slope(theta: f64, hyp: &IntervalHypothesis, info: f64) -> Result<f64> {
    if hyp.lower.is_infinite() && hyp.upper.is_infinite() {
        return Err(Error::argument("limiting slope needs at least one finite endpoint"));
    }
    if !(info > 0.0) {
        return Err(Error::argument(format!("information must be positive, got {info}")));
    }
    let au = standardized_distance(hyp.upper, theta, info);
    let al = standardized_distance(hyp.lower, theta, info);
    let sign = if hyp.contains(theta) { 0.5 } else { -0.5 };
    Ok(sign * (au * au).min(al * al))
}

/// Central-difference derivative of the proxy logit in `n`.
pub fn numeric_slope(pt: &ProxyPoint, hyp: &IntervalHypothesis, n: f64, h: f64) -> Result<f64> {
    if !(h > 0.0 && h < n) {
        return Err(Error::argument(format!("step must satisfy 0 < h < n, got h = {h}, n = {n}")));
    }
    Ok((proxy_logit(pt, hyp, n + h)? - proxy_logit(pt, hyp, n - h)?) / (2.0 * h))
}

/// `m` independent uniforms in (0, 1) for building a proxy sampling distribution.
pub fn proxy_uniforms(seed: u64, which: Hypothesis, m: usize) -> Vec<f64> {
    (0..m as u64)
        .map(|r| {
            let mut rng = RngStream::new(seed, Lane::new(which, r, Phase::Proxy)).rng();
            loop {
                let u: f64 = rng.random();
                if u > 0.0 {
                    return u;
                }
            }
        })
        .collect()
}

/// Proxy posterior probabilities for a set of points at sample size `n`.
pub fn proxy_sampdist(points: &[ProxyPoint], hyp: &IntervalHypothesis, n: f64) -> Result<Vec<f64>> {
    points.iter().map(|pt| proxy_prob(pt, hyp, n)).collect()
}

/// A labelled configuration for checking the limiting slope.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeCase {
    pub label: &'static str,
    pub point: ProxyPoint,
    pub hypothesis: IntervalHypothesis,
}

/// Configurations spanning every branch of the limit: theta inside with the
/// upper, lower or neither distance smaller, theta on each endpoint, and
/// theta outside on either side, for two-sided and one-sided hypotheses.
pub fn slope_cases() -> Vec<SlopeCase> {
    let inf = f64::INFINITY;
    let case = |label, u, theta, info, lower, upper| SlopeCase {
        label,
        point: ProxyPoint { u, theta, info },
        hypothesis: IntervalHypothesis { lower, upper },
    };
    vec![
        case("inside, upper endpoint nearer", 0.30, 0.0, 1.0, -0.8, 0.5),
        case("inside, lower endpoint nearer", 0.70, 0.0, 1.0, -0.4, 0.9),
        case("inside, equidistant, u = 0.5", 0.50, 0.2, 1.0, -0.4, 0.8),
        case("inside, equidistant, u = 0.8", 0.80, 0.2, 1.0, -0.4, 0.8),
        case("inside, scaled information", 0.15, 0.1, 4.0, -0.2, 0.3),
        case("inside, lower-bounded only", 0.20, 0.3, 1.0, 0.0, inf),
        case("inside, upper-bounded only", 0.90, -0.1, 2.0, -inf, 0.5),
        case("on lower endpoint, one-sided", 0.50, 0.0, 1.0, 0.0, inf),
        case("on lower endpoint, two-sided", 0.65, 0.0, 1.0, 0.0, 1.0),
        case("on upper endpoint, two-sided", 0.35, 1.0, 1.0, 0.0, 1.0),
        case("above upper endpoint", 0.40, 1.3, 1.0, 0.0, 1.0),
        case("below lower endpoint", 0.60, -0.5, 1.0, 0.0, 1.0),
        case("below lower endpoint, one-sided", 0.25, -0.7, 0.5, 0.0, inf),
        case("above upper endpoint, one-sided", 0.55, 0.9, 1.0, -inf, 0.4),
    ]
}

/// One row of the slope verification table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SlopeCheck {
    pub label: &'static str,
    pub n: f64,
    pub numeric: f64,
    pub analytic: f64,
    pub error: f64,
}

/// Compares numeric and limiting slopes (step `n / 1000`) for every case and `n`.
pub fn check_slopes(cases: &[SlopeCase], ns: &[f64]) -> Result<Vec<SlopeCheck>> {
    let mut rows = Vec::with_capacity(cases.len() * ns.len());
    for c in cases {
        let analytic = limiting_slope(c.point.theta, &c.hypothesis, c.point.info)?;
        for &n in ns {
            let numeric = numeric_slope(&c.point, &c.hypothesis, n, n / 1000.0)?;
            rows.push(SlopeCheck { label: c.label, n, numeric, analytic, error: (numeric - analytic).abs() });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(u: f64, theta: f64, info: f64) -> ProxyPoint {
        ProxyPoint::new(u, theta, info).unwrap()
    }

    fn hyp(lower: f64, upper: f64) -> IntervalHypothesis {
        IntervalHypothesis { lower, upper }
    }

    #[test]
    fn proxy_examples() {
        let inf = f64::INFINITY;
        for n in [1.0, 10.0, 1e4] {
            assert!((proxy_prob(&pt(0.5, 0.0, 1.0), &hyp(-inf, 0.0), n).unwrap() - 0.5).abs() < 1e-15);
        }
        let p = proxy_prob(&pt(0.5, 0.0, 1.0), &hyp(-inf, 1.0), 4.0).unwrap();
        assert!((p - 0.977_249_868_051_820_8).abs() < 1e-12);
        let u = std_normal_cdf(1.0);
        let p = proxy_prob(&pt(u, 0.0, 1.0), &hyp(-1.0, 1.0), 4.0).unwrap();
        assert!((p - (std_normal_cdf(1.0) - std_normal_cdf(-3.0))).abs() < 1e-12);
        assert!((p - 0.839_994_848_036_913).abs() < 1e-9);
        assert!(ProxyPoint::new(0.0, 0.0, 1.0).is_err());
        assert!(proxy_prob(&ProxyPoint { u: 1.0, theta: 0.0, info: 1.0 }, &hyp(0.0, 1.0), 4.0).is_err());
    }

    #[test]
    fn boundary_median_stays_at_half() {
        for n in [1.0, 1e3, 1e6, 1e9] {
            let p = proxy_prob(&pt(0.5, 2.0, 3.0), &hyp(2.0, f64::INFINITY), n).unwrap();
            assert_eq!(p, 0.5);
        }
    }

    #[test]
    fn log_cdf_matches_direct_values() {
        for x in [-29.0, -12.0, -3.0, 0.0, 2.0, 7.0] {
            let direct = std_normal_cdf(x).ln();
            assert!((log_std_normal_cdf(x) - direct).abs() <= 1e-10 * direct.abs().max(1.0));
        }
        // Continuity where the asymptotic series takes over.
        let left = log_std_normal_cdf(-30.0 - 1e-9);
        let right = log_std_normal_cdf(-30.0 + 1e-9);
        assert!((left - right).abs() < 1e-6);
    }

    #[test]
    fn logit_matches_probability_where_representable() {
        let p = pt(0.3, 0.1, 2.0);
        let h = hyp(-0.5, 0.6);
        for n in [2.0, 10.0, 40.0] {
            let prob = proxy_prob(&p, &h, n).unwrap();
            let l = proxy_logit(&p, &h, n).unwrap();
            assert!((l - (prob / (1.0 - prob)).ln()).abs() < 1e-8);
        }
    }

    #[test]
    fn slope_examples() {
        let inf = f64::INFINITY;
        assert_eq!(limiting_slope(0.0, &hyp(-2.0, 1.0), 1.0).unwrap(), 0.5);
        assert_eq!(limiting_slope(1.0, &hyp(-2.0, 1.0), 1.0).unwrap(), 0.0);
        assert_eq!(limiting_slope(3.0, &hyp(0.0, 2.0), 1.0).unwrap(), -0.5);
        assert_eq!(limiting_slope(1.0, &hyp(0.0, inf), 0.25).unwrap(), 0.125);
        assert!(limiting_slope(0.0, &hyp(-inf, inf), 1.0).is_err());
    }

    #[test]
    fn logit_is_asymptotically_linear_one_sided() {
        // Only the lower endpoint is finite, so the probability is Phi(A) with
        // A = (theta - lower) sqrt(n info) + Phi^-1(u), and the logit behaves
        // like A^2 / 2 + ln(A sqrt(2 pi)) up to O(1 / A^2).
        let p = pt(0.4, 0.7, 1.0);
        let h = hyp(0.2, f64::INFINITY);
        let slope = limiting_slope(p.theta, &h, p.info).unwrap();
        assert!((slope - 0.125).abs() < 1e-15);
        let z = std_normal_quantile(p.u).unwrap();
        for n in [1e4f64, 1e5, 1e6] {
            let a = 0.5 * n.sqrt() + z;
            let approx = a * a / 2.0 + (a * (2.0 * PI).sqrt()).ln();
            let l = proxy_logit(&p, &h, n).unwrap();
            assert!((l - approx).abs() < 1e-3, "{n}: {l} vs {approx}");
            assert!(((l - slope * n) / n).abs() < 2e-3);
        }
    }

    #[test]
    fn slope_cases_converge() {
        let rows = check_slopes(&slope_cases(), &[1e3, 1e4, 1e5, 1e6]).unwrap();
        for chunk in rows.chunks(4) {
            for w in chunk.windows(2) {
                assert!(w[1].error <= w[0].error, "{}: {:?}", chunk[0].label, chunk);
            }
            assert!(chunk[3].error < 1e-3, "{}: {}", chunk[3].label, chunk[3].error);
        }
    }

    #[test]
    fn uniforms_are_reproducible() {
        let a = proxy_uniforms(3, Hypothesis::Null, 50);
        assert_eq!(a, proxy_uniforms(3, Hypothesis::Null, 50));
        assert_ne!(a, proxy_uniforms(3, Hypothesis::Alternative, 50));
        assert!(a.iter().all(|&u| u > 0.0 && u < 1.0));
    }
}

//! Shared numeric primitives: probability/logit transforms, order statistics and
//! the normal and Student-t distribution functions.

use std::f64::consts::SQRT_2;

use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, erf};

use crate::error::{Error, Result};

/// Clamp applied to probabilities before taking logits.
pub const DEFAULT_LOGIT_EPS: f64 = 1e-12;

/// A probability in `[0, 1]`.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::argument(format!("probability must lie in [0, 1], got {value}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

/// A finite log-odds value.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Logit(f64);

impl Logit {
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() {
            Ok(Logit(value))
        } else {
            Err(Error::argument(format!("logit must be finite, got {value}")))
        }
    }

    pub fn get(self) -> f64 {
        self.0
    }
}

pub fn check_logit_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < 0.5 {
        Ok(())
    } else {
        Err(Error::config("logit_eps", format!("must satisfy 0 < eps < 0.5, got {eps}")))
    }
}

/// `log(p / (1 - p))` after clamping `p` into `[eps, 1 - eps]`.
pub fn logit(p: Probability, eps: f64) -> Result<Logit> {
    check_logit_eps(eps)?;
    Ok(Logit(logit_clamped(p.0, eps)))
}

/// Unchecked form of [`logit`] for hot loops; `eps` must already be validated.
#[inline]
pub fn logit_clamped(p: f64, eps: f64) -> f64 {
    // Work from the nearer tail so that 1 - p is not formed by cancellation.
    if p <= 0.5 {
        let p = p.max(eps);
        (p / (1.0 - p)).ln()
    } else {
        let q = (1.0 - p).max(eps);
        ((1.0 - q) / q).ln()
    }
}

pub fn inv_logit(l: Logit) -> Probability {
    Probability(inv_logit_raw(l.0))
}

#[inline]
pub fn inv_logit_raw(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// The `a`-th smallest element (1-based) of `values`, counting ties with multiplicity.
pub fn xi(a: usize, values: &[f64]) -> Result<f64> {
    let mut scratch = values.to_vec();
    xi_in_place(a, &mut scratch)
}

/// Like [`xi`] but reorders `values` instead of copying.
pub fn xi_in_place(a: usize, values: &mut [f64]) -> Result<f64> {
    if a == 0 || a > values.len() {
        return Err(Error::argument(format!(
            "order statistic rank {a} outside 1..={}",
            values.len()
        )));
    }
    let (_, nth, _) = values.select_nth_unstable_by(a - 1, f64::total_cmp);
    Ok(*nth)
}

/// `floor(x)` that snaps values within rounding noise of an integer onto it,
/// so that e.g. `10_000 * 0.2` floors to 2000 rather than 1999 or 2000.000…
pub fn floor_guarded(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

pub fn ceil_guarded(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

/// Standard normal CDF.
#[inline]
pub fn std_normal_cdf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    0.5 * libm::erfc(-x / SQRT_2)
}

/// Standard normal quantile; `p` must lie strictly inside `(0, 1)`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if p > 0.0 && p < 1.0 {
        Ok(-SQRT_2 * erf::erfc_inv(2.0 * p))
    } else {
        Err(Error::argument(format!("normal quantile needs 0 < p < 1, got {p}")))
    }
}

/// CDF of Student's t with `dof` degrees of freedom.
pub fn student_t_cdf(x: f64, dof: f64) -> f64 {
    debug_assert!(dof > 0.0);
    if x.is_nan() {
        return f64::NAN;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if dof.is_infinite() {
        return std_normal_cdf(x);
    }
    // P(|T| > |x|) / 2 through the regularized incomplete beta function.
    let tail = 0.5 * beta_reg(dof / 2.0, 0.5, dof / (dof + x * x));
    if x > 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

/// `P(lower < Z < upper)` for `Z = mean + scale * T`, where `T` has CDF `cdf`
/// symmetric about zero. Uses upper tails when the interval lies above the mean
/// so probabilities close to 0 keep their relative precision.
pub(crate) fn interval_prob(cdf: impl Fn(f64) -> f64, mean: f64, scale: f64, lower: f64, upper: f64) -> f64 {
    let zl = (lower - mean) / scale;
    let zu = (upper - mean) / scale;
    let p = if zl > 0.0 { cdf(-zl) - cdf(-zu) } else { cdf(zu) - cdf(zl) };
    p.clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64) -> Probability {
        Probability::new(x).unwrap()
    }

    #[test]
    fn logit_examples() {
        assert_eq!(logit(p(0.5), 1e-12).unwrap().get(), 0.0);
        assert!((logit(p(0.9), 1e-12).unwrap().get() - 9f64.ln()).abs() < 1e-12);
        let top = logit(p(1.0), 1e-12).unwrap().get();
        assert!((top - ((1.0 - 1e-12) / 1e-12f64).ln()).abs() < 1e-9);
        assert!((top - 27.6310).abs() < 1e-4);
        assert!(logit(p(0.3), 0.0).is_err());
        assert!(logit(p(0.3), 0.5).is_err());
    }

    #[test]
    fn inv_logit_examples() {
        assert_eq!(inv_logit(Logit::new(0.0).unwrap()).get(), 0.5);
        assert!((inv_logit(Logit::new(9f64.ln()).unwrap()).get() - 0.9).abs() < 1e-15);
        assert!((inv_logit(Logit::new(-(9f64.ln())).unwrap()).get() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn xi_examples() {
        assert_eq!(xi(1, &[0.3, 0.1, 0.5]).unwrap(), 0.1);
        assert_eq!(xi(3, &[0.3, 0.1, 0.5]).unwrap(), 0.5);
        assert_eq!(xi(2, &[0.7, 0.7, 0.2]).unwrap(), 0.7);
        assert!(xi(0, &[0.1]).is_err());
        assert!(xi(2, &[0.1]).is_err());
    }

    #[test]
    fn guarded_rounding() {
        assert_eq!(floor_guarded(10_000.0 * 0.2), 2000.0);
        assert_eq!(floor_guarded(10.0 * 0.25), 2.0);
        assert_eq!(ceil_guarded(10_000.0 * (1.0 - 0.05)), 9500.0);
        assert_eq!(ceil_guarded(10.0 * (1.0 - 0.4)), 6.0);
        assert_eq!(floor_guarded(3.0 * 0.1), 0.0);
    }

    #[test]
    fn normal_values() {
        assert_eq!(std_normal_cdf(0.0), 0.5);
        assert!((std_normal_cdf(2.0) - 0.977_249_868_051_820_8).abs() < 1e-13);
        assert!((std_normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
    }

    /// Composite Simpson integration of the standard normal density.
    fn normal_cdf_quadrature(x: f64) -> f64 {
        let lo = -40.0;
        let n = 400_000;
        let h = (x - lo) / n as f64;
        let f = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let mut s = f(lo) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(lo + i as f64 * h);
        }
        s * h / 3.0
    }

    #[test]
    fn normal_cdf_against_quadrature() {
        for &x in &[-8.0, -5.5, -3.0, -1.2, 0.0, 0.7, 2.5, 4.0, 8.0] {
            let q = normal_cdf_quadrature(x);
            assert!((std_normal_cdf(x) - q).abs() <= 1e-10, "x = {x}");
        }
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &pr in &[1e-10, 1e-4, 0.01, 0.2, 0.5, 0.8, 0.99, 1.0 - 1e-6] {
            let z = std_normal_quantile(pr).unwrap();
            assert!((std_normal_cdf(z) - pr).abs() <= 1e-8 * pr.max(1e-2), "p = {pr}");
        }
    }

    /// Student-t CDF by Simpson integration of its density from 0.
    fn t_cdf_quadrature(x: f64, dof: f64) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let ln_c = ln_gamma((dof + 1.0) / 2.0)
            - ln_gamma(dof / 2.0)
            - 0.5 * (dof * std::f64::consts::PI).ln();
        let f = |t: f64| (ln_c - (dof + 1.0) / 2.0 * (1.0 + t * t / dof).ln()).exp();
        let n = 200_000;
        let h = x / n as f64;
        let mut s = f(0.0) + f(x);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * f(i as f64 * h);
        }
        0.5 + s * h / 3.0
    }

    #[test]
    fn student_t_values() {
        assert_eq!(student_t_cdf(0.0, 5.0), 0.5);
        let q = t_cdf_quadrature(2.015, 5.0);
        assert!((student_t_cdf(2.015, 5.0) - q).abs() < 1e-8);
        assert!((q - 0.95).abs() < 1e-3);
        for &(x, dof) in &[(-3.1, 2.5), (0.4, 1.0), (1.7, 30.0), (-0.9, 107.0), (4.2, 12.0)] {
            let q = if x >= 0.0 { t_cdf_quadrature(x, dof) } else { 1.0 - t_cdf_quadrature(-x, dof) };
            assert!((student_t_cdf(x, dof) - q).abs() < 1e-8, "x = {x}, dof = {dof}");
        }
        assert!((student_t_cdf(1.5, 1e6) - std_normal_cdf(1.5)).abs() < 1e-4);
        assert_eq!(student_t_cdf(f64::INFINITY, 3.0), 1.0);
        assert_eq!(student_t_cdf(f64::NEG_INFINITY, 3.0), 0.0);
    }

    #[test]
    fn interval_prob_complements() {
        let cdf = |z| student_t_cdf(z, 9.0);
        let above = interval_prob(cdf, 1.3, 0.7, 0.5, f64::INFINITY);
        let below = interval_prob(cdf, 1.3, 0.7, f64::NEG_INFINITY, 0.5);
        assert!((above + below - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn logit_round_trip(x in 1e-9f64..(1.0 - 1e-9)) {
            let back = inv_logit(logit(p(x), 1e-12).unwrap()).get();
            prop_assert!((back - x).abs() < 1e-9);
        }

        #[test]
        fn xi_matches_full_sort(
            values in prop::collection::vec(-1e3f64..1e3, 1..2000),
            pick in 0.0f64..1.0,
        ) {
            let a = 1 + ((values.len() - 1) as f64 * pick) as usize;
            let mut sorted = values.clone();
            sorted.sort_by(f64::total_cmp);
            prop_assert_eq!(xi(a, &values).unwrap(), sorted[a - 1]);
        }
    }

    #[test]
    fn xi_large_random() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let values: Vec<f64> = (0..100_000).map(|_| rng.random::<f64>()).collect();
        let mut sorted = values.clone();
        sorted.sort_by(f64::total_cmp);
        for a in [1, 2, 777, 50_000, 99_999, 100_000] {
            assert_eq!(xi(a, &values).unwrap(), sorted[a - 1]);
        }
    }
}

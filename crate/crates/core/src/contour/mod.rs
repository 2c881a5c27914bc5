//! Power and type I error over a grid of sample sizes and critical values,
//! predicted from rank lines, with their level curves.

pub mod marching;

use serde::Serialize;

pub use marching::{extract_level, intersections, Polyline};

use crate::config::DesignConfig;
use crate::design::{DesignRecommendation, RankLines};
use crate::error::{Error, Result};
use crate::sampdist::{gamma_from_threshold, Criteria};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Column taken from a simulated sampling distribution.
    Simulated,
    /// Column predicted from the lines.
    Predicted,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContourGrid {
    pub ns: Vec<f64>,
    pub gammas: Vec<f64>,
    /// `power[i][j]` at `(ns[i], gammas[j])`.
    pub power: Vec<Vec<f64>>,
    pub type1: Vec<Vec<f64>>,
    /// Power and type I error thresholds per column.
    pub xi1: Vec<f64>,
    pub xi0: Vec<f64>,
    pub provenance: Vec<Provenance>,
    pub criteria: Criteria,
}

fn sorted_probs(lines: &RankLines, n: f64, buf: &mut Vec<f64>) {
    lines.predict_probs_into(n, buf);
    buf.sort_by(f64::total_cmp);
}

fn check_axis(name: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::argument(format!("{name} axis is empty")));
    }
    if xs.iter().any(|x| !x.is_finite()) || xs.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::argument(format!("{name} axis must be finite and strictly increasing")));
    }
    Ok(())
}

/// Predicted power and type I error at every `(n, gamma)` pair.
pub fn build_grid(
    lines1: &RankLines,
    lines0: &RankLines,
    criteria: Criteria,
    ns: &[f64],
    gammas: &[f64],
) -> Result<ContourGrid> {
    check_axis("n", ns)?;
    check_axis("gamma", gammas)?;
    if gammas[0] < 0.0 || gammas[gammas.len() - 1] > 1.0 {
        return Err(Error::argument("gamma axis must lie in [0, 1]"));
    }
    if lines1.m() != criteria.m || lines0.m() != criteria.m {
        return Err(Error::argument("rank lines and criteria disagree on m"));
    }
    let m = criteria.m as f64;
    let (mut b1, mut b0) = (Vec::new(), Vec::new());
    let mut grid = ContourGrid {
        ns: ns.to_vec(),
        gammas: gammas.to_vec(),
        power: Vec::with_capacity(ns.len()),
        type1: Vec::with_capacity(ns.len()),
        xi1: Vec::with_capacity(ns.len()),
        xi0: Vec::with_capacity(ns.len()),
        provenance: Vec::with_capacity(ns.len()),
        criteria,
    };
    for &n in ns {
        sorted_probs(lines1, n, &mut b1);
        sorted_probs(lines0, n, &mut b0);
        let above = |b: &[f64], g: f64| (b.len() - b.partition_point(|&p| p < g)) as f64 / m;
        grid.power.push(gammas.iter().map(|&g| above(&b1, g)).collect());
        grid.type1.push(gammas.iter().map(|&g| above(&b0, g)).collect());
        grid.xi1.push(b1[criteria.power_rank - 1]);
        grid.xi0.push(b0[criteria.type1_rank - 1]);
        let anchor = n == lines1.n0 || Some(n) == lines1.n1;
        grid.provenance.push(if anchor { Provenance::Simulated } else { Provenance::Predicted });
    }
    Ok(grid)
}

/// Default grid around a recommendation, overridden by any ranges in the
/// configuration.
pub fn default_axes(rec: &DesignRecommendation, config: &DesignConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    let c = &config.contour;
    let min_n = rec.trace.min_n;
    let n_min = c.n_min.unwrap_or_else(|| ((0.6 * rec.n).ceil() as usize).max(min_n));
    let n_max = c.n_max.unwrap_or_else(|| ((1.5 * rec.n).ceil() as usize).max(n_min + 1));
    if n_min < min_n {
        return Err(Error::argument(format!("grid starts at n = {n_min}, below the model minimum {min_n}")));
    }
    let g_min = c.gamma_min.unwrap_or((rec.gamma - 0.15).max(0.5));
    let g_max = c.gamma_max.unwrap_or((rec.gamma + 0.04).min(0.999));
    if g_min >= g_max {
        return Err(Error::argument(format!("empty gamma range [{g_min}, {g_max}]")));
    }
    let ns = (n_min..=n_max).map(|n| n as f64).collect();
    Ok((ns, linspace(g_min, g_max, c.gamma_points)))
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        k => (0..k).map(|i| if i + 1 == k { hi } else { lo + (hi - lo) * i as f64 / (k - 1) as f64 }).collect(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Contours {
    /// Level `1 - beta` of the power surface.
    pub power: Vec<Polyline>,
    /// Level `alpha` of the type I error surface.
    pub type1: Vec<Polyline>,
}

pub fn contours(grid: &ContourGrid, alpha: f64, beta: f64) -> Contours {
    Contours {
        power: extract_level(&grid.ns, &grid.gammas, &grid.power, 1.0 - beta),
        type1: extract_level(&grid.ns, &grid.gammas, &grid.type1, alpha),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Crossing {
    /// Smallest n among intersections of the two curves, if they meet.
    pub n_star: Option<f64>,
    /// First grid size at or beyond `floor(n_star)` where some gamma meets
    /// both criteria exactly.
    pub n: f64,
    pub gamma: f64,
}

/// Where the power and type I error curves meet, snapped to a grid column at
/// which the counted criteria actually hold. When the curves do not meet, the
/// first feasible column is returned.
pub fn crossing_point(grid: &ContourGrid, curves: &Contours) -> Option<Crossing> {
    let n_star = curves
        .power
        .iter()
        .flat_map(|p| curves.type1.iter().flat_map(move |t| intersections(p, t)))
        .map(|pt| pt.0)
        .min_by(f64::total_cmp);
    let from = n_star.map_or(f64::NEG_INFINITY, f64::floor);
    (0..grid.ns.len())
        .find(|&i| grid.ns[i] >= from && grid.xi0[i] < grid.xi1[i])
        .map(|i| Crossing { n_star, n: grid.ns[i], gamma: gamma_from_threshold(grid.xi0[i]) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::LineKind;
    use crate::numeric::{inv_logit_raw, logit_clamped};
    use crate::rng::Hypothesis;

    /// Lines with logits `a_r + s (n - 10)` where the intercepts spread evenly.
    fn lines(hyp: Hypothesis, centre: f64, slope: f64, m: usize) -> RankLines {
        let probs: Vec<f64> = (0..m).map(|r| inv_logit_raw(centre + (r as f64 - m as f64 / 2.0) / m as f64)).collect();
        RankLines {
            hypothesis: hyp,
            kind: LineKind::Limiting,
            n0: 10.0,
            n1: None,
            intercepts: probs.iter().map(|&p| logit_clamped(p, 1e-12)).collect(),
            slopes: vec![slope; m],
            probs0: probs,
            probs1: Vec::new(),
            groups: vec![0..m],
        }
    }

    #[test]
    fn grid_counts_match_direct_counts() {
        let l1 = lines(Hypothesis::Alternative, 0.0, 0.1, 100);
        let l0 = lines(Hypothesis::Null, 2.0, 0.0, 100);
        let criteria = Criteria::new(100, 0.05, 0.2).unwrap();
        let ns = linspace(10.0, 60.0, 51);
        let gammas = linspace(0.5, 0.99, 50);
        let grid = build_grid(&l1, &l0, criteria, &ns, &gammas).unwrap();
        for (i, &n) in ns.iter().enumerate() {
            let p1 = l1.predict_probs(n);
            for (j, &g) in gammas.iter().enumerate() {
                let hits = p1.iter().filter(|&&p| p >= g).count() as f64 / 100.0;
                assert_eq!(grid.power[i][j], hits);
            }
            // Power rises with n, falls with gamma.
            if i > 0 {
                assert!(grid.power[i].iter().zip(&grid.power[i - 1]).all(|(a, b)| a >= b));
            }
            assert!(grid.power[i].windows(2).all(|w| w[0] >= w[1]));
        }
        assert_eq!(grid.provenance[0], Provenance::Simulated);
        assert_eq!(grid.provenance[1], Provenance::Predicted);
    }

    #[test]
    fn crossing_matches_the_feasibility_boundary() {
        let l1 = lines(Hypothesis::Alternative, 0.0, 0.1, 200);
        let l0 = lines(Hypothesis::Null, 2.0, 0.0, 200);
        let criteria = Criteria::new(200, 0.05, 0.2).unwrap();
        let ns = linspace(10.0, 60.0, 51);
        let gammas = linspace(0.5, 0.99, 99);
        let grid = build_grid(&l1, &l0, criteria, &ns, &gammas).unwrap();
        let curves = contours(&grid, 0.05, 0.2);
        let cross = crossing_point(&grid, &curves).unwrap();
        let first = (0..ns.len()).find(|&i| grid.xi0[i] < grid.xi1[i]).unwrap();
        assert_eq!(cross.n, ns[first]);
        assert!(cross.n_star.is_some());
        assert!(cross.gamma > grid.xi0[first] && cross.gamma <= grid.xi1[first]);
    }

    #[test]
    fn rejects_bad_axes() {
        let l = lines(Hypothesis::Null, 0.0, 0.0, 10);
        let c = Criteria::new(10, 0.2, 0.2).unwrap();
        assert!(build_grid(&l, &l, c, &[20.0, 10.0], &[0.5, 0.6]).is_err());
        assert!(build_grid(&l, &l, c, &[10.0], &[0.5, 1.5]).is_err());
    }
}

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::contour::ContourGrid;
use crate::design::{BootstrapResult, DesignRecommendation, OptimizerTrace};
use crate::error::Result;
use crate::numeric::xi;
use crate::sampdist::{Criteria, SampDist};

use super::write_file;

pub(crate) fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

pub fn recommendation_json(rec: &DesignRecommendation) -> Value {
    json!({
        "n": rec.n,
        "n_total": rec.n_total,
        "gamma": rec.gamma,
        "gamma_clamped": rec.gamma_clamped,
        "gamma_fixed": rec.gamma_fixed,
        "power": rec.oc.power,
        "type1": rec.oc.type1,
        "xi1": rec.oc.xi1,
        "xi0": rec.oc.xi0,
        "criteria_met": rec.oc.criteria_met(),
    })
}

pub fn trace_json(trace: &OptimizerTrace) -> Value {
    let searches: Vec<Value> = trace
        .searches
        .iter()
        .map(|s| {
            json!({
                "stage": s.stage,
                "n": s.outcome.n,
                "probes": s.outcome.probes.len(),
                "repaired": s.outcome.repaired,
                "flagged": s.outcome.flagged,
            })
        })
        .collect();
    json!({
        "n0": trace.n0,
        "n1": trace.n1,
        "n2": trace.n2,
        "anchors": trace.anchor_sizes(),
        "final_pair": [trace.anchors[trace.final_pair.0].n, trace.anchors[trace.final_pair.1].n],
        "subgroups": trace.lines.0.groups.len(),
        "searches": searches,
        "evaluations": trace.evaluations(),
        "redrawn": trace.anchors.iter().map(|a| a.h0.redrawn + a.h1.redrawn).sum::<usize>(),
        "criteria": trace.criteria,
        "min_n": trace.min_n,
        "resolution": trace.resolution,
        "flags": trace.flags,
    })
}

pub(crate) fn sampdist_summary(sd: &SampDist, criteria: &Criteria) -> Result<Value> {
    let rank = match sd.hypothesis {
        crate::rng::Hypothesis::Null => criteria.type1_rank,
        crate::rng::Hypothesis::Alternative => criteria.power_rank,
    };
    let mean = sd.probs.iter().sum::<f64>() / sd.m() as f64;
    Ok(json!({
        "hypothesis": sd.hypothesis.to_string(),
        "n": sd.n,
        "m": sd.m(),
        "mean_prob": mean,
        "threshold_rank": rank,
        "threshold": xi(rank, &sd.probs)?,
        "redrawn": sd.redrawn,
        "evaluations": sd.evaluations,
    }))
}

/// `n,r,theta,prob,logit` rows for each distribution in turn.
pub fn write_sampdist_csv(path: &Path, dists: &[&SampDist]) -> Result<()> {
    let mut s = String::from("n,r,theta,prob,logit\n");
    for sd in dists {
        for r in 0..sd.m() {
            let _ = writeln!(s, "{},{},{},{},{}", sd.n, r, sd.thetas[r], sd.probs[r], sd.logits[r]);
        }
    }
    write_file(path, &s)
}

/// `n,gamma,power,type1,source` rows, one per grid point.
pub fn write_grid_csv(path: &Path, grid: &ContourGrid) -> Result<()> {
    let mut s = String::from("n,gamma,power,type1,source\n");
    for (i, &n) in grid.ns.iter().enumerate() {
        let source = match grid.provenance[i] {
            crate::contour::Provenance::Simulated => "simulated",
            crate::contour::Provenance::Predicted => "predicted",
        };
        for (j, &g) in grid.gammas.iter().enumerate() {
            let _ = writeln!(s, "{n},{g},{},{},{source}", grid.power[i][j], grid.type1[i][j]);
        }
    }
    write_file(path, &s)
}

/// `resample,n,gamma` rows; infeasible resamples have empty fields.
pub(crate) fn write_bootstrap_csv(path: &Path, boot: &BootstrapResult) -> Result<()> {
    let mut s = String::from("resample,n,gamma\n");
    for (b, d) in boot.draws.iter().enumerate() {
        match d {
            Some(d) => {
                let _ = writeln!(s, "{b},{},{}", d.n, d.gamma);
            }
            None => {
                let _ = writeln!(s, "{b},,");
            }
        }
    }
    write_file(path, &s)
}

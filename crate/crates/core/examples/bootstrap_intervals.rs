//! Bootstrap percentile intervals for the recommended sample size and critical
//! value, reusing the simulated anchors.
//!
//! `cargo run --release --example bootstrap_intervals [resamples] [m_star]`

use posterior_design::config::DesignConfig;
use posterior_design::design::{bootstrap_cis, optimize};

fn main() -> posterior_design::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let resamples: usize = args.first().map_or(200, |s| s.parse().expect("resamples"));
    let config = DesignConfig::weight_loss_example();
    let m_star: usize = args.get(1).map_or(config.m, |s| s.parse().expect("m_star"));

    let rec = optimize(&config)?;
    println!("point estimate: n_B = {}, gamma = {:.4}", rec.n, rec.gamma);

    let boot = bootstrap_cis(&rec, &config, resamples, m_star, 0.95)?;
    if let (Some((n_lo, n_hi)), Some((g_lo, g_hi))) = (boot.n_ci, boot.gamma_ci) {
        println!("{} resamples of {m_star}:", boot.resamples);
        println!("  95% interval for n_B:   [{n_lo}, {n_hi}]");
        println!("  95% interval for gamma: [{g_lo:.4}, {g_hi:.4}]");
    }
    if boot.infeasible > 0 {
        println!("  {} resamples had no feasible size", boot.infeasible);
    }

    let mut counts = std::collections::BTreeMap::new();
    for d in boot.draws.iter().flatten() {
        *counts.entry(d.n as i64).or_insert(0usize) += 1;
    }
    for (n, c) in counts {
        println!("  n_B = {n:>3}: {}", "#".repeat((60 * c).div_ceil(boot.resamples)));
    }
    Ok(())
}

//! Sampling distributions of the posterior probability at a single sample size,
//! with power and type I error at a chosen critical value.
//!
//! `cargo run --release --example simulate_sampling_distribution [n_B] [gamma] [m]`

use posterior_design::config::DesignConfig;
use posterior_design::numeric::xi;
use posterior_design::rng::{Hypothesis, Phase};
use posterior_design::sampdist::{estimate, gamma_from_threshold, oc_estimate, Criteria};

fn main() -> posterior_design::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n: usize = args.first().map_or(35, |s| s.parse().expect("n_B"));
    let gamma: f64 = args.get(1).map_or(0.9564, |s| s.parse().expect("gamma"));
    let mut config = DesignConfig::weight_loss_example();
    if let Some(m) = args.get(2) {
        config.m = m.parse().expect("m");
    }

    let setup = config.sim_setup();
    let phase = Phase::Direct(n as u64);
    let h1 = estimate(&setup, &config.psi1, Hypothesis::Alternative, n, config.m, phase)?;
    let h0 = estimate(&setup, &config.psi0, Hypothesis::Null, n, config.m, phase)?;

    let criteria = Criteria::new(config.m, config.alpha, config.beta)?;
    for (name, sd) in [("H1", &h1), ("H0", &h0)] {
        let mut p = sd.probs.clone();
        p.sort_by(f64::total_cmp);
        let q = |f: f64| p[((f * (p.len() - 1) as f64).round()) as usize];
        println!(
            "{name}: m = {}, quartiles {:.4} {:.4} {:.4}, mean {:.4}",
            sd.m(),
            q(0.25),
            q(0.5),
            q(0.75),
            p.iter().sum::<f64>() / p.len() as f64
        );
    }
    let xi1 = xi(criteria.power_rank, &h1.probs)?;
    let xi0 = xi(criteria.type1_rank, &h0.probs)?;
    println!("order statistics: xi1 = {xi1:.4} (rank {}), xi0 = {xi0:.4} (rank {})", criteria.power_rank, criteria.type1_rank);
    println!("feasible: {}; smallest admissible gamma {:.4}", xi0 < xi1, gamma_from_threshold(xi0));

    let oc = oc_estimate(&h1, &h0, gamma, config.alpha, config.beta, config.optimizer.logit_eps)?;
    println!("at n_B = {n}, gamma = {gamma}: power {:.4}, type I error {:.4}", oc.power, oc.type1);
    Ok(())
}

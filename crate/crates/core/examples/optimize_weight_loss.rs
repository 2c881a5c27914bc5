//! Sample size and critical value for the weight-loss regression design.
//!
//! Run with `cargo run --release --example optimize_weight_loss [m] [seed]`.

use std::time::Instant;

use posterior_design::config::DesignConfig;
use posterior_design::design::optimize;

fn main() -> posterior_design::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = DesignConfig::weight_loss_example();
    if let Some(m) = args.next() {
        config.m = m.parse().expect("m must be an integer");
    }
    if let Some(seed) = args.next() {
        config.seed = seed.parse().expect("seed must be an integer");
    }

    let start = Instant::now();
    let rec = optimize(&config)?;
    let trace = &rec.trace;
    println!("hypothesis     b1 in {}", config.hypothesis);
    println!("starting size  n0 = {}", trace.n0);
    println!("anchors        {:?}", trace.anchor_sizes());
    for s in &trace.searches {
        println!("  {:<8} n = {:<6} ({} predicate evaluations)", s.stage, s.outcome.n, s.outcome.probes.len());
    }
    println!("recommended    n_B = {}, n_A + n_B = {}", rec.n, rec.n_total);
    println!("critical value gamma = {:.4}", rec.gamma);
    println!("predicted      power = {:.4}, type I error = {:.4}", rec.oc.power, rec.oc.type1);
    println!("posterior probabilities computed: {}", trace.evaluations());
    for flag in &trace.flags {
        println!("note: {flag}");
    }
    println!("elapsed {:.2?}", start.elapsed());
    Ok(())
}

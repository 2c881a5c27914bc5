//! Adverse-event design with a logistic model: the optimized critical value
//! against the conventional fixed gamma = 0.6.
//!
//! `cargo run --release --example logistic_sae [m] [seed]`

use posterior_design::config::DesignConfig;
use posterior_design::design::optimize;

fn main() -> posterior_design::Result<()> {
    let mut args = std::env::args().skip(1);
    let mut config = DesignConfig::adverse_event_example();
    config.m = args.next().map_or(1000, |s| s.parse().expect("m"));
    if let Some(seed) = args.next() {
        config.seed = seed.parse().expect("seed");
    }

    let free = optimize(&config)?;
    let mut fixed_config = config.clone();
    fixed_config.optimizer.fixed_gamma = Some(0.6);
    let fixed = optimize(&fixed_config)?;

    println!("hypothesis: log odds ratio in {}", config.hypothesis);
    println!("{:<16} {:>6} {:>8} {:>8} {:>8}", "", "n_B", "gamma", "power", "type I");
    for (name, r) in [("optimized", &free), ("fixed gamma 0.6", &fixed)] {
        println!("{name:<16} {:>6} {:>8.4} {:>8.4} {:>8.4}", r.n, r.gamma, r.oc.power, r.oc.type1);
    }
    println!("anchors: optimized {:?}, fixed {:?}", free.trace.anchor_sizes(), fixed.trace.anchor_sizes());
    Ok(())
}

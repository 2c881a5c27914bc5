//! Start with few repetitions, then add more to the same anchors and re-run the
//! search without resimulating what is already there.
//!
//! `cargo run --release --example augment_repetitions`

use posterior_design::config::DesignConfig;
use posterior_design::design::{augment_m, optimize};

fn main() -> posterior_design::Result<()> {
    let mut config = DesignConfig::weight_loss_example();
    config.m = 1000;
    let mut rec = optimize(&config)?;
    println!("m = {:>6}: n_B = {}, gamma = {:.4}, anchors {:?}", config.m, rec.n, rec.gamma, rec.trace.anchor_sizes());
    for add in [1000, 3000, 5000] {
        rec = augment_m(&rec, &config, add)?;
        let m = rec.trace.final_anchors().0.h1.m();
        println!("m = {m:>6}: n_B = {}, gamma = {:.4}, anchors {:?}", rec.n, rec.gamma, rec.trace.anchor_sizes());
    }
    Ok(())
}

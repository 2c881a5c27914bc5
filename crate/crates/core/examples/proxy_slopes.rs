//! Logit slopes of the normal proxy for Pr(H1 | data) in sqrt(n), numeric
//! against limiting, across a range of sample sizes.
//!
//! `cargo run --release --example proxy_slopes`

use posterior_design::proxy::{check_slopes, slope_cases};

fn main() -> posterior_design::Result<()> {
    let ns = [1e3, 1e4, 1e5, 1e6];
    let cases = slope_cases();
    let rows = check_slopes(&cases, &ns)?;
    println!("{:<34} {:>10} {:>12} {:>12} {:>12}", "case", "limit", "err 1e3", "err 1e4", "err 1e6");
    for (case, chunk) in cases.iter().zip(rows.chunks(ns.len())) {
        println!(
            "{:<34} {:>10.4} {:>12.2e} {:>12.2e} {:>12.2e}",
            case.label, chunk[0].analytic, chunk[0].error, chunk[1].error, chunk[3].error
        );
    }
    Ok(())
}

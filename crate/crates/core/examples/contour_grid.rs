//! Power and type I error over an (n, gamma) grid predicted from the two
//! anchors, with the 1 - beta and alpha contours and their crossing.
//!
//! `cargo run --release --example contour_grid`

use posterior_design::config::DesignConfig;
use posterior_design::contour::{build_grid, contours, crossing_point, linspace, Provenance};
use posterior_design::design::optimize;

fn main() -> posterior_design::Result<()> {
    let config = DesignConfig::weight_loss_example();
    let rec = optimize(&config)?;
    let ns: Vec<f64> = (25..=45).map(f64::from).collect();
    let gammas = linspace(0.90, 0.99, 91);
    let (l1, l0) = &rec.trace.lines;
    let grid = build_grid(l1, l0, rec.trace.criteria, &ns, &gammas)?;

    println!("power / type I error at selected gamma (* marks simulated columns)");
    let shown = [0, 30, 50, 60, 70, 90];
    print!("{:>5}", "n_B");
    for &j in &shown {
        print!("  {:>13}", format!("g={:.3}", gammas[j]));
    }
    println!();
    for (i, &n) in ns.iter().enumerate() {
        let mark = if grid.provenance[i] == Provenance::Simulated { '*' } else { ' ' };
        print!("{n:>4}{mark}");
        for &j in &shown {
            print!("  {:>6.3}/{:<6.3}", grid.power[i][j], grid.type1[i][j]);
        }
        println!();
    }

    let curves = contours(&grid, config.alpha, config.beta);
    println!("{} power contour(s), {} type I contour(s)", curves.power.len(), curves.type1.len());
    match crossing_point(&grid, &curves) {
        Some(c) => {
            if let Some(n_star) = c.n_star {
                println!("contours cross near n_B = {n_star:.2}");
            }
            println!("smallest feasible column: n_B = {}, gamma = {:.4}", c.n, c.gamma);
        }
        None => println!("contours do not cross on this grid"),
    }
    println!("optimizer: n_B = {}, gamma = {:.4}", rec.n, rec.gamma);
    Ok(())
}

use posterior_design::config::DesignConfig;
use posterior_design::contour::{build_grid, contours, crossing_point, linspace};
use posterior_design::design::{augment_m, bootstrap_cis, optimize};
use posterior_design::rng::{Hypothesis, Phase};
use posterior_design::sampdist::{estimate, oc_estimate};

fn small_weight(m: usize, seed: u64) -> DesignConfig {
    let mut c = DesignConfig::weight_loss_example();
    c.m = m;
    c.seed = seed;
    c
}

fn in_pool<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(f)
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let c = small_weight(3000, 4);
    let one = in_pool(1, || optimize(&c).unwrap());
    let four = in_pool(4, || optimize(&c).unwrap());
    assert_eq!(one.n, four.n);
    assert_eq!(one.gamma.to_bits(), four.gamma.to_bits());
    let (a, b) = (one.trace.final_anchors().0, four.trace.final_anchors().0);
    assert_eq!(a.h1.probs, b.h1.probs);

    let boot1 = in_pool(1, || bootstrap_cis(&one, &c, 40, 3000, 0.95).unwrap());
    let boot4 = in_pool(3, || bootstrap_cis(&four, &c, 40, 3000, 0.95).unwrap());
    assert_eq!(boot1.draws, boot4.draws);
}

#[test]
fn seeds_change_the_draws() {
    let a = optimize(&small_weight(2000, 1)).unwrap();
    let b = optimize(&small_weight(2000, 2)).unwrap();
    assert_ne!(a.trace.final_anchors().0.h1.probs, b.trace.final_anchors().0.h1.probs);
}

#[test]
fn recommendation_is_close_to_direct_simulation() {
    let c = small_weight(10_000, 3);
    let rec = optimize(&c).unwrap();
    let setup = c.sim_setup();
    let n = rec.n as usize;
    let h1 = estimate(&setup, &c.psi1, Hypothesis::Alternative, n, 20_000, Phase::Direct(n as u64)).unwrap();
    let h0 = estimate(&setup, &c.psi0, Hypothesis::Null, n, 20_000, Phase::Direct(n as u64)).unwrap();
    let oc = oc_estimate(&h1, &h0, rec.gamma, c.alpha, c.beta, 1e-12).unwrap();
    // Loose: three standard errors of a 2e4 estimate plus prediction slack.
    assert!(oc.power > 0.77, "power {}", oc.power);
    assert!(oc.type1 < 0.06, "type I {}", oc.type1);
}

#[test]
fn augmenting_repetitions_matches_a_larger_run() {
    let small = small_weight(2000, 11);
    let rec = optimize(&small).unwrap();
    let grown = augment_m(&rec, &small, 1000).unwrap();
    let (a, _) = grown.trace.final_anchors();
    assert_eq!(a.h1.m(), 3000);
    // The first 2000 repetitions are kept unchanged.
    let (old, _) = rec.trace.final_anchors();
    assert_eq!(&a.h1.probs[..2000], &old.h1.probs[..]);
}

#[test]
fn contour_crossing_agrees_with_optimizer() {
    let c = small_weight(5000, 6);
    let rec = optimize(&c).unwrap();
    let ns: Vec<f64> = (20..=50).map(f64::from).collect();
    let gammas = linspace(0.9, 0.99, 91);
    let (l1, l0) = &rec.trace.lines;
    let grid = build_grid(l1, l0, rec.trace.criteria, &ns, &gammas).unwrap();
    let curves = contours(&grid, c.alpha, c.beta);
    let crossing = crossing_point(&grid, &curves).expect("curves cross");
    assert!((crossing.n - rec.n).abs() <= 1.0, "crossing {} vs {}", crossing.n, rec.n);
}

#[test]
fn fixed_gamma_needs_more_patients_for_adverse_events() {
    let mut c = DesignConfig::adverse_event_example();
    c.m = 1000;
    let mut fixed = c.clone();
    fixed.optimizer.fixed_gamma = Some(0.6);
    let base = optimize(&fixed).unwrap();
    assert_eq!(base.gamma, 0.6);
    assert!(base.gamma_fixed);
    let free = optimize(&c).unwrap();
    assert!(free.n < base.n);
}

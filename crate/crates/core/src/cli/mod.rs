//! Command-line front end: argument definitions, dispatch and output files.

mod report;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

pub use crate::config::DesignConfig;
pub use report::{recommendation_json, trace_json, write_grid_csv, write_sampdist_csv};

use crate::contour::{build_grid, contours, crossing_point, default_axes};
use crate::design::{bootstrap_cis, optimize, DesignRecommendation};
use crate::error::{Error, Result};
use crate::proxy::{check_slopes, slope_cases};
use crate::rng::{Hypothesis, Phase};
use crate::sampdist::{estimate, feasible, oc_estimate, gamma_from_threshold, Criteria};

#[derive(Debug, Parser)]
#[command(name = "posterior-design", version, about = "Sample size and critical value search for Bayesian posterior analyses")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the smallest sample size and its critical value.
    Optimize {
        #[command(flatten)]
        common: Common,
        /// Search sample sizes in hundredths.
        #[arg(long)]
        fractional_n: bool,
        /// Keep gamma at this value and search only n.
        #[arg(long)]
        fixed_gamma: Option<f64>,
    },
    /// Optimize, then bootstrap confidence intervals for n and gamma.
    Bootstrap {
        #[command(flatten)]
        common: Common,
        /// Number of bootstrap resamples.
        #[arg(long)]
        big_m: Option<usize>,
        /// Repetitions per resample.
        #[arg(long)]
        m_star: Option<usize>,
        #[arg(long)]
        level: Option<f64>,
    },
    /// Optimize, then tabulate power and type I error over an (n, gamma) grid.
    Contour {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n_min: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
        #[arg(long)]
        gamma_min: Option<f64>,
        #[arg(long)]
        gamma_max: Option<f64>,
    },
    /// Simulate sampling distributions at one sample size.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Sample size (group B in two-group models).
        #[arg(long)]
        n_b: usize,
        #[arg(long, value_enum, default_value_t = Which::Both)]
        hypothesis: Which,
        /// Report operating characteristics at this critical value.
        #[arg(long)]
        gamma: Option<f64>,
    },
    /// Compare numerical and limiting logit slopes of the normal proxy.
    ProxyCheck {
        /// Sample sizes at which to differentiate.
        #[arg(long, value_delimiter = ',', default_values_t = [1e3, 1e4, 1e5, 1e6])]
        ns: Vec<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Largest allowed absolute slope error.
        #[arg(long, default_value_t = 1e-3)]
        tolerance: f64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Design configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Repetitions per sampling distribution.
    #[arg(long)]
    pub m: Option<usize>,
    /// Directory for report and data files.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (defaults to all cores).
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Which {
    H0,
    H1,
    Both,
}

fn load(common: &Common) -> Result<DesignConfig> {
    let mut config = DesignConfig::from_path(&common.config)?;
    if let Some(seed) = common.seed {
        config.seed = seed;
    }
    if let Some(m) = common.m {
        config.m = m;
    }
    Ok(config)
}

fn set_threads(threads: Option<usize>) -> Result<()> {
    if let Some(t) = threads {
        if t == 0 {
            return Err(Error::argument("--threads must be positive"));
        }
        // A pool may already exist when called twice in one process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    Ok(())
}

fn prepare_out(out: &Option<PathBuf>) -> Result<Option<&Path>> {
    match out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|source| Error::Io { path: dir.clone(), source })?;
            Ok(Some(dir.as_path()))
        }
        None => Ok(None),
    }
}

pub(crate) fn write_file(path: &Path, contents: &str) -> Result<()> {
    std::fs::write(path, contents).map_err(|source| Error::Io { path: path.to_path_buf(), source })
}

fn finish(command: &str, config: Option<&DesignConfig>, result: Value, out: Option<&Path>, start: Instant) -> Result<Value> {
    let mut doc = json!({
        "tool": env!("CARGO_PKG_NAME"),
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
    });
    if let Some(config) = config {
        let text = config.to_toml_string()?;
        doc["config_sha256"] = json!(report::sha256_hex(&text));
        doc["config"] = json!(text);
    }
    doc["result"] = result;
    doc["elapsed_seconds"] = json!(start.elapsed().as_secs_f64());
    if let Some(dir) = out {
        let text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Serialization(e.to_string()))?;
        write_file(&dir.join("report.json"), &text)?;
    }
    Ok(doc)
}

fn run_optimize(config: &DesignConfig, out: Option<&Path>) -> Result<DesignRecommendation> {
    eprintln!("optimizing: m = {}, seed = {}", config.m, config.seed);
    let rec = optimize(config)?;
    eprintln!("anchors {:?}, n = {}, gamma = {}", rec.trace.anchor_sizes(), rec.n, rec.gamma);
    if let Some(dir) = out {
        let (a, b) = rec.trace.final_anchors();
        write_sampdist_csv(&dir.join("sampdist_h1.csv"), &[&a.h1, &b.h1])?;
        write_sampdist_csv(&dir.join("sampdist_h0.csv"), &[&a.h0, &b.h0])?;
    }
    Ok(rec)
}

/// Runs one parsed command and returns its JSON report.
pub fn run(cli: Cli) -> Result<Value> {
    let start = Instant::now();
    match cli.command {
        Command::Optimize { common, fractional_n, fixed_gamma } => {
            set_threads(common.threads)?;
            let mut config = load(&common)?;
            config.optimizer.fractional_n |= fractional_n;
            if fixed_gamma.is_some() {
                config.optimizer.fixed_gamma = fixed_gamma;
            }
            config.validate()?;
            let out = prepare_out(&common.out)?;
            let rec = run_optimize(&config, out)?;
            let result = json!({
                "recommendation": recommendation_json(&rec),
                "trace": trace_json(&rec.trace),
            });
            finish("optimize", Some(&config), result, out, start)
        }
        Command::Bootstrap { common, big_m, m_star, level } => {
            set_threads(common.threads)?;
            let mut config = load(&common)?;
            if let Some(b) = big_m {
                config.bootstrap.resamples = b;
            }
            if m_star.is_some() {
                config.bootstrap.resample_size = m_star;
            }
            if let Some(l) = level {
                config.bootstrap.level = l;
            }
            config.validate()?;
            let out = prepare_out(&common.out)?;
            let rec = run_optimize(&config, out)?;
            let b = &config.bootstrap;
            let size = b.resample_size.unwrap_or(config.m);
            eprintln!("bootstrapping: {} resamples of {size}", b.resamples);
            let boot = bootstrap_cis(&rec, &config, b.resamples, size, b.level)?;
            if let Some(dir) = out {
                report::write_bootstrap_csv(&dir.join("bootstrap.csv"), &boot)?;
            }
            let result = json!({
                "recommendation": recommendation_json(&rec),
                "bootstrap": {
                    "resamples": boot.resamples,
                    "resample_size": boot.resample_size,
                    "level": boot.level,
                    "n_ci": boot.n_ci,
                    "gamma_ci": boot.gamma_ci,
                    "infeasible": boot.infeasible,
                    "flagged": boot.flagged,
                },
                "trace": trace_json(&rec.trace),
            });
            finish("bootstrap", Some(&config), result, out, start)
        }
        Command::Contour { common, n_min, n_max, gamma_min, gamma_max } => {
            set_threads(common.threads)?;
            let mut config = load(&common)?;
            let c = &mut config.contour;
            c.n_min = n_min.or(c.n_min);
            c.n_max = n_max.or(c.n_max);
            c.gamma_min = gamma_min.or(c.gamma_min);
            c.gamma_max = gamma_max.or(c.gamma_max);
            config.validate()?;
            let out = prepare_out(&common.out)?;
            let rec = run_optimize(&config, out)?;
            let (ns, gammas) = default_axes(&rec, &config)?;
            let (l1, l0) = &rec.trace.lines;
            let grid = build_grid(l1, l0, rec.trace.criteria, &ns, &gammas)?;
            let curves = contours(&grid, config.alpha, config.beta);
            let crossing = crossing_point(&grid, &curves);
            if let Some(dir) = out {
                write_grid_csv(&dir.join("grid.csv"), &grid)?;
                let text = serde_json::to_string_pretty(&json!({ "curves": curves, "crossing": crossing }))
                    .map_err(|e| Error::Serialization(e.to_string()))?;
                write_file(&dir.join("contours.json"), &text)?;
            }
            let result = json!({
                "recommendation": recommendation_json(&rec),
                "grid": {
                    "n_range": [ns[0], ns[ns.len() - 1]],
                    "gamma_range": [gammas[0], gammas[gammas.len() - 1]],
                    "columns": ns.len(),
                    "rows": gammas.len(),
                    "simulated_columns": grid.ns.iter().zip(&grid.provenance)
                        .filter(|(_, p)| **p == crate::contour::Provenance::Simulated)
                        .map(|(n, _)| *n).collect::<Vec<_>>(),
                },
                "crossing": crossing,
                "curves": { "power": curves.power.len(), "type1": curves.type1.len() },
            });
            finish("contour", Some(&config), result, out, start)
        }
        Command::Simulate { common, n_b, hypothesis, gamma } => {
            set_threads(common.threads)?;
            let config = load(&common)?;
            config.validate()?;
            let out = prepare_out(&common.out)?;
            let setup = config.sim_setup();
            let phase = Phase::Direct(n_b as u64);
            let mut sims = Vec::new();
            for (which, tag) in [(Hypothesis::Null, Which::H0), (Hypothesis::Alternative, Which::H1)] {
                if hypothesis == tag || hypothesis == Which::Both {
                    eprintln!("simulating {which} at n = {n_b}, m = {}", config.m);
                    let sd = estimate(&setup, config.psi(which), which, n_b, config.m, phase)?;
                    if let Some(dir) = out {
                        let name = format!("sampdist_h{}.csv", which.index());
                        write_sampdist_csv(&dir.join(name), &[&sd])?;
                    }
                    sims.push(sd);
                }
            }
            let criteria = Criteria::new(config.m, config.alpha, config.beta)?;
            let mut summaries = Vec::new();
            for sd in &sims {
                summaries.push(report::sampdist_summary(sd, &criteria)?);
            }
            let mut result = json!({ "n": n_b, "m": config.m, "distributions": summaries });
            if let [h0, h1] = sims.as_slice() {
                result["feasible"] = json!(feasible(h1, h0, config.alpha, config.beta)?);
                let xi0 = crate::numeric::xi(criteria.type1_rank, &h0.probs)?;
                result["gamma_min"] = json!(gamma_from_threshold(xi0));
                if let Some(g) = gamma {
                    let oc = oc_estimate(h1, h0, g, config.alpha, config.beta, config.optimizer.logit_eps)?;
                    result["oc"] = json!(oc);
                }
            }
            finish("simulate", Some(&config), result, out, start)
        }
        Command::ProxyCheck { ns, out, tolerance } => {
            let dir = prepare_out(&out)?;
            let mut ns = ns;
            ns.sort_by(f64::total_cmp);
            let checks = check_slopes(&slope_cases(), &ns)?;
            // Judged at the largest n; errors must also shrink as n grows.
            let per_case: Vec<_> = checks.chunks(ns.len()).collect();
            let worst = per_case.iter().map(|c| c[c.len() - 1].error).fold(0.0, f64::max);
            let monotone = per_case.iter().all(|c| c.windows(2).all(|w| w[1].error <= w[0].error));
            let pass = worst <= tolerance && monotone;
            if let Some(dir) = dir {
                let mut csv = String::from("case,n,numeric,analytic,error\n");
                for c in &checks {
                    csv.push_str(&format!("{},{},{},{},{}\n", c.label, c.n, c.numeric, c.analytic, c.error));
                }
                write_file(&dir.join("proxy_check.csv"), &csv)?;
            }
            let result = json!({
                "checks": checks,
                "max_error_at_largest_n": worst,
                "errors_nonincreasing": monotone,
                "tolerance": tolerance,
                "pass": pass,
            });
            let doc = finish("proxy-check", None, result, dir, start)?;
            if pass {
                Ok(doc)
            } else {
                Err(Error::Range(format!(
                    "slope error {worst} at n = {} (tolerance {tolerance}), nonincreasing: {monotone}",
                    ns[ns.len() - 1]
                )))
            }
        }
    }
}

/// JSON document for a failed command.
pub fn error_json(err: &Error) -> Value {
    let mut v = json!({ "error": err.kind(), "message": err.to_string(), "exit_code": err.exit_code() });
    match err {
        Error::Config { key, .. } => v["key"] = json!(key),
        Error::Infeasible { largest_probe, .. } => v["largest_probe"] = json!(largest_probe),
        Error::Numerical { lane, .. } => v["lane"] = json!(lane),
        _ => {}
    }
    v
}

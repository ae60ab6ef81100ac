//! Command-line front end: spectra, norm tables, counting profiles, Stanton
//! residuals, exponent fits, check suites, and Bessel tables.
//!
//! Exit codes: 0 success, 1 check failure, 2 config error.

use clap::{Args, Parser, Subcommand};
use dircomp::lab::{self, SuiteConfig};
use dircomp::operator::{approximation_numbers, spectrum_csv, spectrum_sidecar, SpectrumCaps};
use dircomp::symbol::Symbol;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "dircomp", version, about = "composition operators on the Dirichlet-series Hardy space")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// JSON config file ({suite, symbol, caps, n_max, sigmas, tolerances})
    #[arg(long)]
    config: Option<PathBuf>,
    /// output directory for CSV/JSON artifacts
    #[arg(long)]
    out: Option<PathBuf>,
    /// seed for sampled grids
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// worker threads (default: all cores)
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// merged singular-value spectrum → CSV + JSON sidecar
    Approx {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        n_max: usize,
    },
    /// norm table ‖C_φ e_n‖ by all available oracles
    Norms {
        #[command(flatten)]
        common: Common,
        /// explicit n values; defaults to a log-spaced grid
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<u64>>,
    },
    /// restricted-counting profile CSV over a σ × t grid
    Counting {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        t_grid: usize,
    },
    /// Stanton change-of-variables residual for f given by chain coefficients
    Stanton {
        #[command(flatten)]
        common: Common,
        /// chain coefficients of f at indices j·p^k, as re:im pairs from k = 0
        #[arg(long, value_delimiter = ',', default_value = "0:0,1:0")]
        f: Vec<String>,
        #[arg(long, default_value_t = 1)]
        j: u64,
    },
    /// exponent fit over a CSV of (n, value) rows
    Fit {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        theta: f64,
        /// stretched-exponential β; power-log model when absent
        #[arg(long)]
        beta: Option<f64>,
    },
    /// acceptance / experiment suite
    Suite {
        #[command(flatten)]
        common: Common,
    },
    /// two-sided bound table for the scaled Bessel integral
    Bessel {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', default_value = "0.125,0.25,0.5,1,2,5,10,50")]
        xs: Vec<f64>,
    },
}

fn load_config(common: &Common) -> Result<SuiteConfig, String> {
    match &common.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            SuiteConfig::from_json(&text).map_err(|e| e.to_string())
        }
        None => Ok(SuiteConfig {
            suite: None,
            symbol: None,
            caps: None,
            n_max: None,
            sigmas: None,
            tolerances: None,
        }),
    }
}

fn config_symbol(cfg: &SuiteConfig) -> Result<Symbol, String> {
    match &cfg.symbol {
        Some(sc) => lab::build_symbol(sc).map_err(|e| e.to_string()),
        None => Err("this subcommand needs a `symbol` entry in the config".into()),
    }
}

fn write_artifact(common: &Common, name: &str, content: &str) -> Result<(), String> {
    match &common.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
            let path = dir.join(name);
            std::fs::write(&path, content).map_err(|e| e.to_string())?;
            eprintln!("wrote {}", path.display());
            Ok(())
        }
        None => {
            println!("{content}");
            Ok(())
        }
    }
}

fn spectrum_caps(cfg: &SuiteConfig) -> SpectrumCaps {
    let mut caps = SpectrumCaps::default();
    if let Some(c) = &cfg.caps {
        if let Some(j) = c.j {
            caps.j_budget = j;
        }
        if let Some(k_log2) = c.k_log2 {
            caps.col_cap_log = k_log2 * std::f64::consts::LN_2;
        }
    }
    caps
}

fn run() -> Result<bool, String> {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Approx { common, .. }
        | Command::Norms { common, .. }
        | Command::Counting { common, .. }
        | Command::Stanton { common, .. }
        | Command::Fit { common, .. }
        | Command::Suite { common }
        | Command::Bessel { common, .. } => common.clone(),
    };
    if let Some(threads) = common.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())?;
    }
    let cfg = load_config(&common)?;

    match cli.command {
        Command::Approx { common, n_max } => {
            let sym = config_symbol(&cfg)?;
            let n_max = cfg.n_max.unwrap_or(n_max);
            let spec = approximation_numbers(&sym, n_max, spectrum_caps(&cfg))
                .map_err(|e| e.to_string())?;
            write_artifact(&common, "spectrum.csv", &spectrum_csv(&spec))?;
            write_artifact(&common, "spectrum.meta.json", &spectrum_sidecar(&spec, &sym))?;
            Ok(true)
        }
        Command::Norms { common, n } => {
            let sym = config_symbol(&cfg)?;
            let ns = n.unwrap_or_else(|| vec![2, 10, 100, 1000, 10_000, 100_000, 1_000_000]);
            let csv = lab::norms_csv(&sym, &ns).map_err(|e| e.to_string())?;
            write_artifact(&common, "norms.csv", &csv)?;
            Ok(true)
        }
        Command::Counting { common, t_grid } => {
            let sym = config_symbol(&cfg)?;
            let sigmas = cfg
                .sigmas
                .clone()
                .unwrap_or_else(|| vec![0.1, 0.05, 0.025, 0.0125]);
            let csv = dircomp::counting::profile_csv(&sym, &sigmas, t_grid)
                .map_err(|e| e.to_string())?;
            write_artifact(&common, "counting.csv", &csv)?;
            Ok(true)
        }
        Command::Stanton { common, f, j } => {
            let sym = config_symbol(&cfg)?;
            let prime = sym.support().primes().first().copied().unwrap_or(2);
            let mut coeffs = Vec::new();
            for part in &f {
                let (re, im) = part
                    .split_once(':')
                    .ok_or_else(|| format!("bad coefficient '{part}', want re:im"))?;
                let re: f64 = re.parse().map_err(|e| format!("{e}"))?;
                let im: f64 = im.parse().map_err(|e| format!("{e}"))?;
                coeffs.push((re, im));
            }
            let support = dircomp::indices::PrimeSupport::new(vec![prime])
                .map_err(|e| e.to_string())?;
            let mut max_pow = 0u32;
            let mut terms = Vec::new();
            for (k, &(re, im)) in coeffs.iter().enumerate() {
                if re != 0.0 || im != 0.0 {
                    max_pow = max_pow.max(k as u32);
                    terms.push((k as u32, num_complex::Complex64::new(re, im)));
                }
            }
            let _ = j; // chain indices j·p^k with j > 1 need a wider support
            let mut poly = dircomp::series::DirichletPolynomial::zero(
                support,
                dircomp::series::IndexBound::from_prime_power(prime, max_pow),
            );
            for (k, c) in terms {
                poly.set_exp_coeff(dircomp::indices::Exponents(vec![k]), c);
            }
            let rep = dircomp::counting::verify_stanton(&sym, &poly, &[1e-4, 1e-6, 1e-8])
                .map_err(|e| e.to_string())?;
            let json = serde_json::json!({
                "lhs": rep.lhs,
                "rhs": rep.rhs,
                "relative_residual": rep.residual,
                "refinements": rep.refinements,
            })
            .to_string();
            write_artifact(&common, "stanton.json", &json)?;
            Ok(true)
        }
        Command::Fit { common, input, theta, beta } => {
            let text = std::fs::read_to_string(&input)
                .map_err(|e| format!("cannot read {}: {e}", input.display()))?;
            let mut values = Vec::new();
            for (ln, line) in text.lines().enumerate() {
                let line = line.trim();
                if line.is_empty() || line.starts_with('#') || line.starts_with('n') {
                    continue;
                }
                let mut parts = line.split(',');
                let n: f64 = parts
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| format!("bad row {}", ln + 1))?;
                let v: f64 = parts
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| format!("bad row {}", ln + 1))?;
                values.push((n, v));
            }
            let fit = match beta {
                Some(b) => lab::fit_stretched(&values, theta, b),
                None => lab::fit_power_log(&values, theta),
            }
            .map_err(|e| e.to_string())?;
            let json = serde_json::json!({
                "model": match fit.model {
                    lab::FitModel::PowerLog => "power_log",
                    lab::FitModel::StretchedExp => "stretched_exp",
                },
                "theta": fit.theta_hat,
                "gamma_hat": fit.gamma_hat,
                "r_squared": fit.r_squared,
                "n_range": [fit.n_range.0, fit.n_range.1],
            })
            .to_string();
            write_artifact(&common, "fit.json", &json)?;
            Ok(true)
        }
        Command::Suite { common } => {
            let report = lab::run_suite(&cfg, common.seed).map_err(|e| e.to_string())?;
            for check in &report.checks {
                println!("{}", check.line());
            }
            if let Some(dir) = &common.out {
                std::fs::create_dir_all(dir).map_err(|e| e.to_string())?;
                std::fs::write(dir.join("suite.json"), report.to_json())
                    .map_err(|e| e.to_string())?;
            }
            Ok(report.all_passed())
        }
        Command::Bessel { common, xs } => {
            let csv = lab::bessel_csv(&xs).map_err(|e| e.to_string())?;
            write_artifact(&common, "bessel.csv", &csv)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

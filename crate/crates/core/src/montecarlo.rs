//! Monte Carlo orchestration: per-trial simulation, metric aggregation,
//! and CSV/JSON emission.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::accounting::{overhead_and_complexity, BaselineParams};
use crate::channel::{assemble_channel, draw_paths};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::{ase_bps_hz, ber_16qam, nmse_db_from_ratios, nmse_ratio};
use crate::omp::{build_dictionary, omp_estimate};
use crate::reconstruction::esprit_estimate;
use crate::training::{aggregate_training, estimate_effective_channel, simulate_uplink};

pub const DEFAULT_OMP_GRID: usize = 150;
pub const DEFAULT_OMP_ITERS: usize = 50;
/// 16-QAM symbol vectors transmitted per trial for the BER estimate
/// (4 * N_RF bits each).
pub const SYMBOL_VECTORS_PER_TRIAL: usize = 250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Esprit,
    Omp,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Esprit => write!(f, "esprit"),
            Scheme::Omp => write!(f, "omp"),
        }
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "esprit" => Ok(Scheme::Esprit),
            "omp" => Ok(Scheme::Omp),
            other => Err(Error::Config(format!("unknown scheme '{other}'"))),
        }
    }
}

/// Full experiment description: the physical configuration plus which
/// estimators to sweep and how wide to parallelize.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub system: SystemConfig,
    pub schemes: Vec<Scheme>,
    /// Worker threads; 0 means the runtime default.
    pub jobs: usize,
    pub omp_grid: usize,
    pub omp_iters: usize,
}

impl ExperimentConfig {
    pub fn new(system: SystemConfig, schemes: Vec<Scheme>) -> Self {
        ExperimentConfig {
            system,
            schemes,
            jobs: 0,
            omp_grid: DEFAULT_OMP_GRID,
            omp_iters: DEFAULT_OMP_ITERS,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub scheme: String,
    pub snr_db: f64,
    pub n_paths: usize,
    pub n_trials: usize,
    pub nmse_db: f64,
    pub ase_bps_hz: f64,
    pub ber: f64,
    pub pilot_overhead: usize,
    pub complexity_ops: f64,
    pub failure_rate: f64,
}

struct TrialOutcome {
    nmse_ratio: f64,
    ase: f64,
    ber: f64,
}

fn run_trial(
    scheme: Scheme,
    trial: u64,
    sigma_n_sq: f64,
    exp: &ExperimentConfig,
    plan: &crate::training::TrainingPlan,
    dict: Option<&crate::omp::GridDictionary>,
) -> Result<TrialOutcome> {
    let cfg = &exp.system;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(trial);
    let paths = draw_paths(cfg, &mut rng);
    let h = assemble_channel(&paths, cfg);
    let y = simulate_uplink(&h, plan, sigma_n_sq, &mut rng);
    let eff = estimate_effective_channel(&y, plan);
    let est = match scheme {
        Scheme::Esprit => esprit_estimate(&eff, plan, cfg)?,
        Scheme::Omp => omp_estimate(&eff, dict.expect("dictionary built"), exp.omp_iters, cfg)?,
    };
    let ratio = nmse_ratio(&h.h, &est.h_hat)?;
    let ase = ase_bps_hz(&h, &est.h_hat, cfg.n_rf_bs, sigma_n_sq)?;
    let ber = ber_16qam(
        &h,
        &est.h_hat,
        cfg.n_rf_bs,
        sigma_n_sq,
        SYMBOL_VECTORS_PER_TRIAL,
        &mut rng,
    )?;
    Ok(TrialOutcome {
        nmse_ratio: ratio,
        ase,
        ber,
    })
}

/// Sweep every (scheme, SNR) cell. Records are a pure function of the
/// configuration: per-trial RNG streams are keyed by (seed, trial index)
/// and results are folded in trial order, so any `jobs` setting produces
/// identical output.
pub fn run_monte_carlo(exp: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    exp.system.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(exp.jobs)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| sweep(exp))
}

fn sweep(exp: &ExperimentConfig) -> Result<Vec<MetricsRecord>> {
    let cfg = &exp.system;
    let plan = aggregate_training(cfg)?;
    let dict = if exp.schemes.contains(&Scheme::Omp) {
        Some(build_dictionary(cfg, exp.omp_grid, &plan))
    } else {
        None
    };
    let acct = overhead_and_complexity(cfg, &BaselineParams::for_paths(cfg.n_paths));

    let mut records = Vec::new();
    for &scheme in &exp.schemes {
        for &snr_db in &cfg.snr_db_grid {
            let sigma_n_sq = cfg.sigma_alpha_sq / 10f64.powf(snr_db / 10.0);
            let outcomes: Vec<Result<TrialOutcome>> = (0..cfg.n_trials as u64)
                .into_par_iter()
                .map(|t| run_trial(scheme, t, sigma_n_sq, exp, &plan, dict.as_ref()))
                .collect();

            let mut ratios = Vec::new();
            let mut ases = Vec::new();
            let mut bers = Vec::new();
            let mut failures = 0usize;
            for o in outcomes {
                match o {
                    Ok(t) => {
                        ratios.push(t.nmse_ratio);
                        ases.push(t.ase);
                        bers.push(t.ber);
                    }
                    Err(_) => failures += 1,
                }
            }
            let n_ok = ratios.len();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
            records.push(MetricsRecord {
                scheme: scheme.to_string(),
                snr_db,
                n_paths: cfg.n_paths,
                n_trials: cfg.n_trials,
                nmse_db: if n_ok > 0 {
                    nmse_db_from_ratios(&ratios)
                } else {
                    f64::NAN
                },
                ase_bps_hz: mean(&ases),
                ber: mean(&bers),
                pilot_overhead: acct.t_proposed,
                complexity_ops: match scheme {
                    Scheme::Esprit => acct.c_proposed,
                    Scheme::Omp => acct.c_omp,
                },
                failure_rate: failures as f64 / cfg.n_trials as f64,
            });
        }
    }
    Ok(records)
}

/// Render a float with 10 significant digits.
fn fmt_f64(x: f64) -> String {
    if x == 0.0 {
        return "0.000000000".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    let decimals = (9 - exp).clamp(0, 32) as usize;
    format!("{x:.decimals$}")
}

pub const CSV_HEADER: &str =
    "scheme,snr_db,n_paths,n_trials,nmse_db,ase_bps_hz,ber,pilot_overhead,failure_rate";

pub fn write_csv<W: Write>(records: &[MetricsRecord], out: &mut W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.scheme,
            fmt_f64(r.snr_db),
            r.n_paths,
            r.n_trials,
            fmt_f64(r.nmse_db),
            fmt_f64(r.ase_bps_hz),
            fmt_f64(r.ber),
            r.pilot_overhead,
            fmt_f64(r.failure_rate),
        )?;
    }
    Ok(())
}

pub fn write_json<W: Write>(
    records: &[MetricsRecord],
    config: &SystemConfig,
    out: &mut W,
) -> Result<()> {
    let doc = serde_json::json!({
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "records": records,
    });
    serde_json::to_writer_pretty(&mut *out, &doc)
        .map_err(|e| Error::Parse(format!("JSON write failed: {e}")))?;
    writeln!(out)?;
    Ok(())
}

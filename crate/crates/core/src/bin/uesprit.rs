use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use uesprit::accounting::{overhead_and_complexity, BaselineParams};
use uesprit::channel::{assemble_channel, draw_paths};
use uesprit::config::SystemConfig;
use uesprit::error::Result;
use uesprit::metrics::nmse_db;
use uesprit::montecarlo::{
    run_monte_carlo, write_csv, write_json, ExperimentConfig, Scheme,
};
use uesprit::esprit::estimate_angles;
use uesprit::reconstruction::{estimate_gains, reconstruct_channel};
use uesprit::training::{aggregate_training, estimate_effective_channel, simulate_uplink};

/// Super-resolution mmWave channel estimation simulator.
#[derive(Parser)]
#[command(name = "uesprit", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full Monte Carlo sweep over the SNR grid.
    Run(RunArgs),
    /// Single channel realization: estimate and print the angle table.
    Estimate(EstimateArgs),
    /// Training-overhead and complexity report.
    Accounting(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// TOML configuration file; unknown keys are rejected.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the path count L.
    #[arg(long)]
    paths: Option<usize>,
    /// Override the RNG seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Override the SNR grid, comma-separated dB values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
    /// Override the Monte Carlo trial count.
    #[arg(long)]
    trials: Option<usize>,
    /// Estimators to sweep.
    #[arg(long, value_delimiter = ',', default_value = "esprit,omp")]
    schemes: Vec<String>,
    /// Output directory for results.<format>; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Args)]
struct EstimateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// SNR in dB for the single realization.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr: Option<Vec<f64>>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

fn load_config(common: &CommonArgs) -> Result<SystemConfig> {
    let mut cfg = match &common.config {
        Some(path) => SystemConfig::from_toml_file(path)?,
        None => SystemConfig::default(),
    };
    if let Some(l) = common.paths {
        cfg.n_paths = l;
    }
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut cfg = load_config(&args.common)?;
    if let Some(snr) = &args.snr {
        cfg.snr_db_grid = snr.clone();
    }
    if let Some(t) = args.trials {
        cfg.n_trials = t;
    }
    cfg.validate()?;
    let schemes = args
        .schemes
        .iter()
        .map(|s| s.parse())
        .collect::<Result<Vec<Scheme>>>()?;
    let mut exp = ExperimentConfig::new(cfg, schemes);
    exp.jobs = args.jobs;
    let records = run_monte_carlo(&exp)?;

    match &args.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            let (name, bytes) = render(&records, &exp.system, args.format)?;
            let path = dir.join(name);
            fs::write(&path, bytes)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            let (_, bytes) = render(&records, &exp.system, args.format)?;
            print!("{}", String::from_utf8_lossy(&bytes));
        }
    }
    Ok(())
}

fn render(
    records: &[uesprit::montecarlo::MetricsRecord],
    cfg: &SystemConfig,
    format: Format,
) -> Result<(&'static str, Vec<u8>)> {
    let mut buf = Vec::new();
    match format {
        Format::Csv => {
            write_csv(records, &mut buf)?;
            Ok(("results.csv", buf))
        }
        Format::Json => {
            write_json(records, cfg, &mut buf)?;
            Ok(("results.json", buf))
        }
    }
}

fn cmd_estimate(args: &EstimateArgs) -> Result<()> {
    let cfg = load_config(&args.common)?;
    let snr_db = args
        .snr
        .as_ref()
        .and_then(|v| v.first().copied())
        .unwrap_or(20.0);
    let sigma_n_sq = cfg.sigma_alpha_sq / 10f64.powf(snr_db / 10.0);

    let plan = aggregate_training(&cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let paths = draw_paths(&cfg, &mut rng);
    let h = assemble_channel(&paths, &cfg);
    let y = simulate_uplink(&h, &plan, sigma_n_sq, &mut rng);
    let eff = estimate_effective_channel(&y, &plan);
    let angles = estimate_angles(&eff, &cfg)?;
    let d_hat = estimate_gains(&eff, &angles, &plan, &cfg)?;
    let est = reconstruct_channel(&angles, &d_hat, &cfg);

    // Greedy nearest-pair matching of estimated to true angles for display.
    let mut assigned = vec![usize::MAX; cfg.n_paths];
    for t in 0..cfg.n_paths {
        let mut best = usize::MAX;
        let mut best_d = f64::INFINITY;
        for (e, &(aoa, aod)) in angles.pairs.iter().enumerate() {
            if assigned.contains(&e) {
                continue;
            }
            let d = (aoa - paths.aoa[t]).abs() + (aod - paths.aod[t]).abs();
            if d < best_d {
                best_d = d;
                best = e;
            }
        }
        assigned[t] = best;
    }

    println!("SNR: {snr_db} dB, L = {}", cfg.n_paths);
    println!(
        "{:>4}  {:>12} {:>12}  {:>12} {:>12}  {:>18}",
        "path", "AoA true", "AoA est", "AoD true", "AoD est", "gain est"
    );
    for t in 0..cfg.n_paths {
        let e = assigned[t];
        println!(
            "{:>4}  {:>12.6} {:>12.6}  {:>12.6} {:>12.6}  {:>8.4}{:+.4}j",
            t,
            paths.aoa[t],
            angles.pairs[e].0,
            paths.aod[t],
            angles.pairs[e].1,
            est.d_hat[e].re,
            est.d_hat[e].im
        );
    }
    println!("NMSE: {:.4} dB", nmse_db(&h.h, &est.h_hat)?);
    Ok(())
}

fn cmd_accounting(common: &CommonArgs) -> Result<()> {
    let cfg = load_config(common)?;
    let acct = overhead_and_complexity(&cfg, &BaselineParams::for_paths(cfg.n_paths));
    println!("pilot overhead (frames)");
    println!("  proposed  {:>10}", acct.t_proposed);
    println!("  omp       {:>10}", acct.t_omp);
    println!("  acs       {:>10}", acct.t_acs);
    println!("complexity (modeled ops)");
    println!("  proposed  {:>14.4e}", acct.c_proposed);
    println!("  omp       {:>14.4e}", acct.c_omp);
    println!("  acs       {:>14.4e}", acct.c_acs);
    println!("ratios");
    println!("  proposed/acs  {:>10.4e}", acct.ratio_vs_acs);
    println!("  proposed/omp  {:>10.4e}", acct.ratio_vs_omp);
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Estimate(args) => cmd_estimate(args),
        Command::Accounting(args) => cmd_accounting(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

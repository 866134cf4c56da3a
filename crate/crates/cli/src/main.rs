//! `iqi-sim`: Monte Carlo sweeps of the I/Q-imbalance estimators.
//!
//! Settings are resolved in order: built-in defaults, `--recipe`, the
//! `--config` file, then the remaining flags.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Parser;
use iqi_core::harness::{export, load_config_pairs, run_sweep, Format, Recipe, RunResult, SimConfig};

#[derive(Debug, Parser)]
#[command(
    name = "iqi-sim",
    version,
    about = "Subspace I/Q-imbalance estimation sweeps for low-IF receivers"
)]
struct Args {
    /// Comma-separated SNR values in dB; `inf` disables noise.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<String>,
    /// Comma-separated input SIR values in dB.
    #[arg(long, allow_hyphen_values = true)]
    sir_in_db: Option<String>,
    /// Comma-separated frame counts.
    #[arg(long)]
    frames: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, allow_hyphen_values = true)]
    gain_imbalance_db: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    theta_deg: Option<f64>,
    #[arg(long)]
    pilot_len: Option<usize>,
    #[arg(long)]
    data_len: Option<usize>,
    #[arg(long)]
    zc_root: Option<usize>,
    /// Pilot segments per frame (1 or 2).
    #[arg(long)]
    segments: Option<usize>,
    #[arg(long)]
    doppler_hz: Option<f64>,
    #[arg(long)]
    sample_time_us: Option<f64>,
    #[arg(long)]
    oscillators: Option<usize>,
    /// Comma-separated subset of subspace-product, subspace-lse, blind, uncompensated.
    #[arg(long)]
    methods: Option<String>,
    /// qam64 or gaussian.
    #[arg(long)]
    interference: Option<String>,
    /// closed-form or empirical.
    #[arg(long)]
    sir_metric: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// csv or json; inferred from the output extension when omitted.
    #[arg(long)]
    format: Option<String>,
    /// TOML file of `key = value` settings using the long flag names.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    recipe: Option<String>,
    #[arg(long)]
    print_summary: bool,
}

impl Args {
    fn flag_settings(&self) -> Vec<(&'static str, String)> {
        let mut out = Vec::new();
        let mut push = |key: &'static str, value: Option<String>| {
            if let Some(v) = value {
                out.push((key, v));
            }
        };
        push("snr-db", self.snr_db.clone());
        push("sir-in-db", self.sir_in_db.clone());
        push("frames", self.frames.clone());
        push("trials", self.trials.map(|v| v.to_string()));
        push("seed", self.seed.map(|v| v.to_string()));
        push("gain-imbalance-db", self.gain_imbalance_db.map(|v| v.to_string()));
        push("theta-deg", self.theta_deg.map(|v| v.to_string()));
        push("pilot-len", self.pilot_len.map(|v| v.to_string()));
        push("data-len", self.data_len.map(|v| v.to_string()));
        push("zc-root", self.zc_root.map(|v| v.to_string()));
        push("segments", self.segments.map(|v| v.to_string()));
        push("doppler-hz", self.doppler_hz.map(|v| v.to_string()));
        push("sample-time-us", self.sample_time_us.map(|v| v.to_string()));
        push("oscillators", self.oscillators.map(|v| v.to_string()));
        push("methods", self.methods.clone());
        push("interference", self.interference.clone());
        push("sir-metric", self.sir_metric.clone());
        out
    }
}

struct Resolved {
    cfg: SimConfig,
    output: Option<PathBuf>,
    format: Option<String>,
}

fn resolve(args: &Args) -> Result<Resolved> {
    let mut cfg = SimConfig::default();
    if let Some(recipe) = &args.recipe {
        cfg.apply_recipe(recipe.parse::<Recipe>()?);
    }
    let mut output = None;
    let mut format = None;
    if let Some(path) = &args.config {
        for (key, value) in load_config_pairs(path)? {
            match key.replace('_', "-").as_str() {
                "output" => output = Some(PathBuf::from(value)),
                "format" => format = Some(value),
                _ => cfg
                    .set(&key, &value)
                    .with_context(|| format!("{}: setting '{key}'", path.display()))?,
            }
        }
    }
    for (key, value) in args.flag_settings() {
        cfg.set(key, &value).with_context(|| format!("--{key} {value}"))?;
    }
    cfg.validate()?;
    Ok(Resolved {
        cfg,
        output: args.output.clone().or(output),
        format: args.format.clone().or(format),
    })
}

fn output_format(explicit: Option<&str>, path: &std::path::Path) -> Result<Format> {
    if let Some(f) = explicit {
        return Ok(f.parse()?);
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Ok(Format::Json),
        Some("csv") | None => Ok(Format::Csv),
        Some(other) => bail!("cannot infer format from extension '.{other}', pass --format"),
    }
}

fn fmt_db(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"))
}

fn print_summary(result: &RunResult) {
    println!(
        "{:<18} {:>8} {:>10} {:>6} {:>9} {:>9} {:>9} {:>10} {:>8}",
        "method", "snr_db", "sir_in_db", "frames", "p10", "median", "p90", "nmse", "failures"
    );
    for c in &result.cells {
        let s = &c.summary;
        println!(
            "{:<18} {:>8} {:>10} {:>6} {:>9} {:>9} {:>9} {:>10} {:>8}{}",
            c.method.as_str(),
            c.cell.snr_db,
            c.cell.sir_in_db,
            c.cell.frames,
            fmt_db(s.p10_sir_db),
            fmt_db(s.median_sir_db),
            fmt_db(s.p90_sir_db),
            s.mean_nmse.map_or_else(|| "-".to_string(), |v| format!("{v:.3e}")),
            s.failures,
            s.annotation.as_deref().map(|a| format!("  ({a})")).unwrap_or_default(),
        );
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = Args::parse();
    let Resolved { cfg, output, format } = resolve(&args)?;
    if output.is_none() && format.is_some() {
        bail!("--format needs --output");
    }

    log::info!(
        "{} cells x {} trials, methods {:?}",
        cfg.snr_db.len() * cfg.sir_in_db.len() * cfg.frames.len(),
        cfg.trials,
        cfg.methods
    );
    let result = run_sweep(&cfg)?;

    if let Some(path) = &output {
        let fmt = output_format(format.as_deref(), path)?;
        export(&result, path, fmt)?;
        log::info!("wrote {}", path.display());
    }
    if args.print_summary || output.is_none() {
        print_summary(&result);
    }
    Ok(())
}

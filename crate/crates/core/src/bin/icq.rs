use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use icq::algorithms::{run_detailed, RunOptions, TrialConfig};
use icq::bandit::make_instance;
use icq::config::FileConfig;
use icq::harness::{self, Family, SweepResult, SweepSpec, XAxis};
use icq::protocol::write_log;
use icq::theory::sample_bound;

/// Best-arm identification over bit-limited uplinks.
#[derive(Parser)]
#[command(name = "icq", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run repeated trials of one algorithm at one parameter point.
    Run(RunArgs),
    /// Sweep ln(1/delta) over the ten standard grid points.
    SweepDelta(SweepArgs),
    /// Sweep the gap of the Gaussian hardness family from 0.1 to 1.
    SweepHardness(SweepArgs),
    /// Sweep the schedule base alpha = 2..9 for ICQ-SE at B = 1.
    SweepAlpha(SweepArgs),
    /// Sweep B = 1..9 for ICQ-SE at alpha = 2.
    SweepBits(SweepArgs),
    /// Print the closed-form complexity bounds for one instance.
    Bounds(BoundsArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with any of the flag names below as keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// beta | gaussian | hardness
    #[arg(long)]
    family: Option<String>,
    /// Gap of the hardness family.
    #[arg(long)]
    gap: Option<f64>,
    #[arg(long)]
    arms: Option<usize>,
    /// icq-se | se | fed-sel | quban-se
    #[arg(long = "algo")]
    algorithm: Option<String>,
    /// Bits per ICQ-SE message.
    #[arg(long = "B", alias = "bits")]
    bits: Option<u32>,
    #[arg(long)]
    alpha: Option<u64>,
    #[arg(long)]
    delta: Option<f64>,
    /// Grid step of quban-se.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_rounds: Option<u32>,
    /// Permit ICQ-SE with alpha >= 4^B.
    #[arg(long)]
    allow_unproven_alpha: bool,
    /// CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the first trial's uplink messages in the binary frame format.
    #[arg(long)]
    dump_wire: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// beta | gaussian (sweep-delta only)
    #[arg(long, default_value = "beta")]
    family: String,
    /// Fixed delta for sweeps whose x axis is not delta.
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    #[arg(long, default_value_t = harness::DEFAULT_TRIALS)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    max_rounds: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundsArgs {
    #[arg(long, default_value = "hardness")]
    family: String,
    #[arg(long, default_value_t = 0.5)]
    gap: f64,
    #[arg(long, default_value_t = harness::DEFAULT_ARMS)]
    arms: usize,
    #[arg(long = "B", alias = "bits", default_value_t = 3)]
    bits: u32,
    #[arg(long, default_value_t = 2)]
    alpha: u64,
    #[arg(long, default_value_t = 0.1)]
    delta: f64,
    /// Seed of the random instance families.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Per-arm CSV output path.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> anyhow::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::SweepDelta(args) => {
            let family = Family::parse(&args.family)?;
            if family == Family::GaussianHardness {
                bail!("sweep-delta supports the beta and gaussian families");
            }
            sweep(harness::delta_sweep(family, args.trials, args.seed), &args)
        }
        Command::SweepHardness(args) => sweep(harness::hardness_sweep(args.delta, args.trials, args.seed), &args),
        Command::SweepAlpha(args) => sweep(harness::alpha_sweep(args.delta, args.trials, args.seed), &args),
        Command::SweepBits(args) => sweep(harness::bits_sweep(args.delta, args.trials, args.seed), &args),
        Command::Bounds(args) => bounds(args),
    }
}

fn run(args: RunArgs) -> anyhow::Result<()> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path).with_context(|| format!("reading {}", path.display()))?,
        None => FileConfig::default(),
    };
    let flags = FileConfig {
        family: args.family,
        gap: args.gap,
        arms: args.arms,
        algorithm: args.algorithm,
        bits: args.bits,
        alpha: args.alpha,
        delta: args.delta,
        epsilon: args.epsilon,
        trials: args.trials,
        seed: args.seed,
        max_rounds: args.max_rounds,
        allow_unproven_alpha: args.allow_unproven_alpha.then_some(true),
        out: args.out,
        dump_wire: args.dump_wire,
    };
    let s = file.merge(flags).resolve()?;
    let kind = s.family.kind(s.gap);
    let x = -s.trial.delta.ln();
    let trials = harness::run_trials(kind, s.arms, &s.trial, s.trials, s.seed, x)?;
    let row = harness::aggregate(s.family, XAxis::LogInvDelta, x, &s.trial, &trials);
    print_rows(std::slice::from_ref(&row));

    if let Some(path) = &s.dump_wire {
        let seed = harness::trial_seed(s.seed, 0);
        let instance = make_instance(kind, s.arms, seed)?;
        let config = TrialConfig { seed, ..s.trial.clone() };
        let out = run_detailed(&instance, &config, RunOptions { trajectory: false, wire_log: true })?;
        let log = out.wire_log.unwrap_or_default();
        write_log(path, &log)?;
        eprintln!("wrote {} messages of trial 0 to {}", log.len(), path.display());
    }
    write_results(&[row], s.out.as_deref())
}

fn sweep(mut spec: SweepSpec, args: &SweepArgs) -> anyhow::Result<()> {
    if let Some(cap) = args.max_rounds {
        for a in &mut spec.algorithms {
            a.max_rounds = cap;
        }
    }
    let results = harness::run_sweep(&spec)?;
    print_rows(&results);
    write_results(&results, args.out.as_deref())
}

fn write_results(results: &[SweepResult], out: Option<&Path>) -> anyhow::Result<()> {
    if let Some(path) = out {
        harness::write_csv(results, path).with_context(|| format!("writing {}", path.display()))?;
        eprintln!("wrote {} rows to {}", results.len(), path.display());
    }
    Ok(())
}

fn print_rows(rows: &[SweepResult]) {
    println!(
        "{:<18} {:>8} {:>14} {:>10} {:>12} {:>8} {:>8}",
        "algorithm", "x", "samples", "rounds", "bits", "error", "inconcl"
    );
    for r in rows {
        let bits = r.mean_bits.map_or_else(|| "-".to_string(), |b| format!("{b:.2}"));
        println!(
            "{:<18} {:>8.4} {:>14.2} {:>10.3} {:>12} {:>8.4} {:>8.4}",
            r.algorithm, r.x, r.mean_samples, r.mean_rounds, bits, r.error_rate, r.inconclusive_rate
        );
    }
}

fn bounds(args: BoundsArgs) -> anyhow::Result<()> {
    let family = Family::parse(&args.family)?;
    let instance = make_instance(family.kind(args.gap), args.arms, args.seed)?;
    let report = sample_bound(
        &instance.gaps(),
        instance.sigma_cb(),
        instance.k(),
        args.delta,
        args.bits,
        args.alpha,
        instance.support().map(|s| s.width()),
    )?;
    println!("B={} alpha={} delta={}", report.bits, report.alpha, report.delta);
    println!("c          {:>14.6}", report.c);
    println!("c (tight)  {:>14.6}", report.c_tight);
    if let Some(d) = report.delta_max {
        println!("delta_max  {:>14.6}  (delta ok: {})", d, report.delta_ok);
    }
    println!("samples    {:>14.3}", report.sample_bound);
    println!("rounds     {:>14.3}", report.round_bound);
    println!("bits       {:>14.3}", report.bit_bound);
    println!("SE samples {:>14.3}", report.se_sample_bound);
    println!();
    println!("{:>4} {:>10} {:>14} {:>14} {:>12}", "arm", "gap", "term", "SE term", "T_j");
    for a in &report.arms {
        let tj = a.t_j.map_or_else(|| "-".to_string(), |t| t.to_string());
        println!("{:>4} {:>10.4} {:>14.3} {:>14.3} {:>12}", a.arm, a.gap, a.term, a.se_term, tj);
    }
    if let Some(path) = &args.out {
        let mut w = csv::Writer::from_path(path)?;
        for a in &report.arms {
            w.serialize(a)?;
        }
        w.flush()?;
        eprintln!("wrote {} rows to {}", report.arms.len(), path.display());
    }
    Ok(())
}

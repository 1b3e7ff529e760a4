use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use epicredit_core::credit::Mechanism;
use epicredit_core::harness::{
    aggregate, footprint_report, run_experiment, write_csv, write_svg, ExperimentData,
    MechanismSummary, MetricsRecord, Scenario, TrainConfig,
};
use epicredit_core::Error;

/// Train an episodic-memory classifier with one or more credit-assignment
/// mechanisms and write per-run metrics.
#[derive(Debug, Parser)]
#[command(name = "epicredit", version)]
struct Args {
    /// Starting preset: `full` (MNIST, K=5000, 10 runs) or `desk` (blobs, K=500, 3 runs).
    #[arg(long, default_value = "full")]
    profile: String,
    /// key=value config file, applied after the profile and before flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Mechanism, comma-separated list, or `all`.
    #[arg(long)]
    mechanism: Option<String>,
    #[arg(long)]
    capacity: Option<usize>,
    #[arg(long)]
    embed_dim: Option<usize>,
    #[arg(long)]
    tau: Option<f64>,
    /// Learning rate for every network.
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    eval_every: Option<u64>,
    #[arg(long)]
    eval_size: Option<usize>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    subset_fraction: Option<f64>,
    /// Number, or `auto` for the memory capacity.
    #[arg(long)]
    synth_scale: Option<String>,
    #[arg(long)]
    decoder_warmup: Option<u64>,
    /// Directory with the MNIST IDX files; selects MNIST data.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// `mnist` or `blobs`.
    #[arg(long)]
    data: Option<String>,
    /// Metrics CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Optional SVG plot of mean validation accuracy.
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Print the storage footprint of a preset (`atari` or `mnist`) and exit.
    #[arg(long, value_name = "PRESET")]
    footprint: Option<String>,
    /// Print the resolved configuration and exit.
    #[arg(long)]
    dry_run: bool,
}

/// Exit status categories.
#[derive(Debug)]
enum Failure {
    Config(Error),
    Data(Error),
    Output(Error),
    Other(Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Config(_) => 2,
            Failure::Data(_) => 3,
            Failure::Output(_) => 4,
            Failure::Other(_) => 1,
        }
    }

    fn error(&self) -> &Error {
        match self {
            Failure::Config(e) | Failure::Data(e) | Failure::Output(e) | Failure::Other(e) => e,
        }
    }
}

fn parse_mechanisms(s: &str) -> Result<Vec<Mechanism>, Error> {
    if s == "all" {
        return Ok(Mechanism::ALL.to_vec());
    }
    s.split(',').map(|m| m.trim().parse()).collect()
}

fn build_config(args: &Args) -> Result<(TrainConfig, Vec<Mechanism>), Error> {
    let mut cfg = TrainConfig::profile(&args.profile)?;
    if let Some(path) = &args.config {
        cfg.apply_file(path)?;
    }
    let mut mechanisms = vec![cfg.mechanism];
    if let Some(m) = &args.mechanism {
        mechanisms = parse_mechanisms(m)?;
    }
    let flags: [(&str, Option<String>); 13] = [
        ("capacity", args.capacity.map(|v| v.to_string())),
        ("embed_dim", args.embed_dim.map(|v| v.to_string())),
        ("tau", args.tau.map(|v| v.to_string())),
        ("lr", args.lr.map(|v| v.to_string())),
        ("steps", args.steps.map(|v| v.to_string())),
        ("eval_every", args.eval_every.map(|v| v.to_string())),
        ("eval_size", args.eval_size.map(|v| v.to_string())),
        ("runs", args.runs.map(|v| v.to_string())),
        ("seed", args.seed.map(|v| v.to_string())),
        ("subset_fraction", args.subset_fraction.map(|v| v.to_string())),
        ("synth_scale", args.synth_scale.clone()),
        ("decoder_warmup", args.decoder_warmup.map(|v| v.to_string())),
        ("data", args.data.clone()),
    ];
    for (k, v) in flags {
        if let Some(v) = v {
            cfg.set(k, &v)?;
        }
    }
    if let Some(d) = &args.data_dir {
        cfg.set("data_dir", &d.display().to_string())?;
    }
    if let Some(p) = &args.out {
        cfg.out = Some(p.clone());
    }
    if let Some(p) = &args.svg {
        cfg.svg = Some(p.clone());
    }
    for &m in &mechanisms {
        TrainConfig {
            mechanism: m,
            ..cfg.clone()
        }
        .validate()?;
    }
    Ok((cfg, mechanisms))
}

fn print_summary(summaries: &[MechanismSummary]) {
    println!("{:<18} {:>8} {:>10} {:>10}", "mechanism", "final", "std", "diverged");
    for s in summaries {
        let last = s.series.last();
        println!(
            "{:<18} {:>8} {:>10} {:>7}/{}",
            s.mechanism.as_str(),
            last.map_or("-".into(), |p| format!("{:.4}", p.mean_accuracy)),
            last.and_then(|p| p.std_accuracy)
                .map_or("-".into(), |v| format!("{v:.4}")),
            s.diverged_runs,
            s.runs
        );
    }
}

fn run(args: Args) -> Result<(), Failure> {
    if let Some(preset) = &args.footprint {
        let f = footprint_report(&Scenario::preset(preset).map_err(Failure::Config)?);
        println!("{f}");
        print!("{}", f.to_csv());
        return Ok(());
    }
    let (cfg, mechanisms) = build_config(&args).map_err(Failure::Config)?;
    if args.dry_run {
        print!("{}", cfg.to_kv_text());
        return Ok(());
    }
    let data = ExperimentData::load(&cfg).map_err(|e| match e {
        Error::Config(_) => Failure::Config(e),
        _ => Failure::Data(e),
    })?;
    log::info!(
        "data: {} train, {} validation, dim {}",
        data.train.len(),
        data.validation.len(),
        data.train.dim()
    );
    let mut records: Vec<MetricsRecord> = Vec::new();
    for m in mechanisms {
        let c = TrainConfig {
            mechanism: m,
            ..cfg.clone()
        };
        log::info!("running {m}: {} runs x {} steps", c.runs, c.steps);
        let res = run_experiment(&c, &data).map_err(|e| match e {
            Error::Config(_) => Failure::Config(e),
            _ => Failure::Other(e),
        })?;
        records.extend(res.records);
    }
    let summaries = aggregate(&records);
    print_summary(&summaries);
    if let Some(p) = &cfg.out {
        write_csv(p, &records).map_err(Failure::Output)?;
    }
    if let Some(p) = &cfg.svg {
        write_svg(p, &summaries).map_err(Failure::Output)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.error());
            ExitCode::from(f.code())
        }
    }
}

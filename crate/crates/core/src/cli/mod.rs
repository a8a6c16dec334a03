//! `netaware` command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid configuration or input,
//! 3 runtime failure (I/O, malformed files).

mod config;

pub use config::{parse_config, parse_config_str, AppConfig, ForestSettings, CONFIG_ENV};

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use log::info;

use crate::atomic;
use crate::error::{Error, Result};
use crate::harness::{make_dataset, with_jobs, BandwidthPlan, ComputeProfile, Harness, SweepOutput};
use crate::latent::{apply_mask, channel_importance, energy_retention, read_tensor, topk_mask, write_tensor};
use crate::policy::select_level;
use crate::slalib::{
    evaluate, grid_search, predict, read_model, read_table, split_dataset, train_forest, write_dataset, write_model,
    EvaluationReport, ForestConfig,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "netaware", version, about = "Network-aware semantic transcoding simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a bandwidth sweep and write results.csv, summary.csv and manifest.json
    Sweep(SweepArgs),
    /// Inspect the channel-budget policy
    #[command(subcommand)]
    Policy(PolicyCommand),
    /// Train or apply the SLA predictor
    #[command(subcommand)]
    Sla(SlaCommand),
    /// Build labeled datasets from sweeps
    #[command(subcommand)]
    Dataset(DatasetCommand),
    /// Mask latent tensor files
    #[command(subcommand)]
    Mask(MaskCommand),
}

#[derive(Debug, Args)]
struct Common {
    /// Config file (defaults to $NETAWARE_CONFIG, then built-in defaults)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. --set policy.gamma=1.5
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    /// Master seed for every random stream
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (0 = all cores); never changes results
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Policy steepness (overrides policy.gamma; must exceed 1)
    #[arg(long, global = true)]
    gamma: Option<f64>,
}

impl Common {
    fn load(&self) -> Result<AppConfig> {
        let mut overrides = Vec::new();
        for item in &self.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::config(item.clone(), "override must look like KEY=VALUE"))?;
            overrides.push((k.trim().to_string(), v.trim().to_string()));
        }
        if let Some(seed) = self.seed {
            overrides.push(("seed".into(), seed.to_string()));
        }
        if let Some(jobs) = self.jobs {
            overrides.push(("jobs".into(), jobs.to_string()));
        }
        if let Some(g) = self.gamma {
            overrides.push(("policy.gamma".into(), format!("{g:?}")));
        }
        let cfg = parse_config(self.config.as_deref(), &overrides)?;
        let _ = env_logger::Builder::new()
            .filter_level(cfg.log_level)
            .format_timestamp(None)
            .try_init();
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Output directory (overrides output_dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Compute preset: reference or edge-cpu
    #[arg(long)]
    preset: Option<String>,
}

#[derive(Debug, Subcommand)]
enum PolicyCommand {
    /// Print the budget chosen for a bandwidth reading
    Eval {
        #[command(flatten)]
        common: Common,
        /// Link bandwidth in Mbps
        #[arg(long)]
        bandwidth: f64,
        /// Round-trip time in ms (ignored by the default policy)
        #[arg(long, default_value_t = 0.0)]
        rtt: f64,
    },
}

#[derive(Debug, Subcommand)]
enum SlaCommand {
    /// Train a forest on a dataset CSV
    Train(TrainArgs),
    /// Predict tiers for a dataset CSV with a saved model
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    common: Common,
    /// Dataset CSV: feature columns, plus `label` (1-3) when known
    #[arg(long)]
    data: PathBuf,
    /// Number of trees; a comma list triggers a cross-validated grid search
    #[arg(long, value_delimiter = ',')]
    trees: Vec<usize>,
    /// Maximum depth, 0 for unlimited; comma list allowed
    #[arg(long = "max-depth", value_delimiter = ',')]
    max_depth: Vec<usize>,
    /// Minimum samples to split a node; comma list allowed
    #[arg(long = "min-split", value_delimiter = ',')]
    min_split: Vec<usize>,
    /// Fraction used for training; the rest is held out for the report (1 = no holdout)
    #[arg(long = "train-fraction")]
    train_fraction: Option<f64>,
    /// Model output path
    #[arg(long)]
    out: PathBuf,
    /// Also write the evaluation report here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    common: Common,
    /// Model JSON written by `sla train`
    #[arg(long)]
    model: PathBuf,
    /// Dataset CSV: feature columns, plus `label` (1-3) when known
    #[arg(long)]
    data: PathBuf,
    /// Predictions CSV path
    #[arg(long)]
    out: PathBuf,
    /// Also write the evaluation report here
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum DatasetCommand {
    /// Run a sampled-telemetry sweep and write one labeled record per run
    Make {
        #[command(flatten)]
        common: Common,
        /// Dataset CSV to write
        #[arg(long)]
        out: PathBuf,
        /// Number of telemetry snapshots (overrides sweep.samples)
        #[arg(long)]
        samples: Option<usize>,
        /// Keep the config's bandwidth plan instead of sampling telemetry
        #[arg(long)]
        keep_plan: bool,
        /// Compute preset: reference or edge-cpu
        #[arg(long)]
        preset: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
enum MaskCommand {
    /// Keep the top-k channels of a tensor file
    Apply {
        #[command(flatten)]
        common: Common,
        /// Input tensor (binary LTNS, or text with an `N C` header)
        #[arg(long)]
        tensor: PathBuf,
        /// Channel budget
        #[arg(long, conflicts_with = "bandwidth", required_unless_present = "bandwidth")]
        k: Option<usize>,
        /// Choose k from the policy for this bandwidth (Mbps)
        #[arg(long)]
        bandwidth: Option<f64>,
        /// Masked tensor output (binary LTNS)
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `args` (including the program name) and runs the command,
/// writing human output to `stdout`. Returns the process exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command, stdout) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_validation() {
                EXIT_VALIDATION
            } else {
                EXIT_RUNTIME
            }
        }
    }
}

/// Entry point for the binary.
pub fn main() -> i32 {
    run(std::env::args_os(), &mut std::io::stdout().lock())
}

fn out_err(e: std::io::Error) -> Error {
    Error::io("<stdout>", e)
}

fn dispatch(cmd: Command, stdout: &mut dyn Write) -> Result<()> {
    match cmd {
        Command::Sweep(args) => sweep(args, stdout),
        Command::Policy(PolicyCommand::Eval {
            common,
            bandwidth,
            rtt: _,
        }) => {
            let cfg = common.load()?;
            let s = select_level(bandwidth, &cfg.policy)?;
            writeln!(stdout, "k={} index={}", s.k, s.index).map_err(out_err)
        }
        Command::Sla(SlaCommand::Train(args)) => sla_train(args, stdout),
        Command::Sla(SlaCommand::Predict(args)) => sla_predict(args, stdout),
        Command::Dataset(DatasetCommand::Make {
            common,
            out,
            samples,
            keep_plan,
            preset,
        }) => {
            let cfg = common.load()?;
            let mut spec = cfg.sweep.clone();
            if !keep_plan {
                spec.bandwidth = BandwidthPlan::Sampled {
                    count: samples.unwrap_or(match spec.bandwidth {
                        BandwidthPlan::Sampled { count } => count,
                        _ => 500,
                    }),
                };
                spec.fixed_rtt_ms = None;
            }
            if let Some(p) = preset {
                spec.compute = compute_preset(&p)?;
            }
            let harness = Harness::new(spec)?;
            let output = with_jobs(cfg.jobs, || harness.run())??;
            let data = make_dataset(&output.results, &harness.spec().compute);
            write_dataset(&out, &data)?;
            info!("wrote {}", out.display());
            writeln!(stdout, "records={} out={}", data.len(), out.display()).map_err(out_err)
        }
        Command::Mask(MaskCommand::Apply {
            common,
            tensor,
            k,
            bandwidth,
            out,
        }) => {
            let cfg = common.load()?;
            let t = read_tensor(&tensor)?;
            let k = match (k, bandwidth) {
                (Some(k), _) => k,
                (None, Some(b)) => select_level(b, &cfg.policy)?.k,
                (None, None) => unreachable!("clap requires one of --k/--bandwidth"),
            };
            let mask = topk_mask(&channel_importance(&t), k)?;
            let masked = apply_mask(&t, &mask)?;
            write_tensor(&out, &masked)?;
            writeln!(
                stdout,
                "k={} channels={} energy_retention={:.6} out={}",
                k,
                t.n_channels(),
                energy_retention(&t, &mask)?,
                out.display()
            )
            .map_err(out_err)
        }
    }
}

fn compute_preset(name: &str) -> Result<ComputeProfile> {
    ComputeProfile::preset(name).ok_or_else(|| {
        Error::config(
            "preset",
            format!("unknown compute preset `{name}` (reference, edge-cpu)"),
        )
    })
}

fn sweep(args: SweepArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.common.load()?;
    let mut spec = cfg.sweep.clone();
    if let Some(p) = &args.preset {
        spec.compute = compute_preset(p)?;
    }
    let dir = args.out.unwrap_or(cfg.output_dir);
    let harness = Harness::new(spec)?;
    let output: SweepOutput = with_jobs(cfg.jobs, || harness.run())??;
    let written = output.write_to(&dir, harness.spec())?;
    for p in &written {
        info!("wrote {}", p.display());
    }
    writeln!(stdout, "rows={} out={}", output.results.len(), dir.display()).map_err(out_err)
}

fn write_report(path: &std::path::Path, report: &EvaluationReport) -> Result<()> {
    atomic::write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, report)?;
        w.write_all(b"\n")
    })
}

fn sla_train(args: TrainArgs, stdout: &mut dyn Write) -> Result<()> {
    let cfg = args.common.load()?;
    let settings = &cfg.forest;
    let data = read_table(&args.data)?.into_dataset()?;
    let base = &settings.forest;
    let or_base = |v: &Vec<usize>, d: usize| if v.is_empty() { vec![d] } else { v.clone() };
    let trees = or_base(&args.trees, base.n_trees);
    let depths = or_base(&args.max_depth, base.max_depth.unwrap_or(0));
    let splits = or_base(&args.min_split, base.min_split);
    let mut grid = Vec::new();
    for &n_trees in &trees {
        for &d in &depths {
            for &min_split in &splits {
                let c = ForestConfig {
                    n_trees,
                    max_depth: (d > 0).then_some(d),
                    min_split,
                    ..base.clone()
                };
                c.validate()?;
                grid.push(c);
            }
        }
    }

    let fraction = args.train_fraction.unwrap_or(settings.train_fraction);
    let (train, holdout) = if fraction >= 1.0 {
        (data, None)
    } else {
        let (tr, te) = split_dataset(&data, fraction, cfg.seed)?;
        (tr, Some(te))
    };

    let chosen = if grid.len() > 1 {
        let (best, points) = with_jobs(cfg.jobs, || grid_search(&train, &grid, settings.folds))??;
        for p in &points {
            info!(
                "cv trees={} max_depth={:?} min_split={} macro_f1={:.4}",
                p.config.n_trees, p.config.max_depth, p.config.min_split, p.mean_macro_f1
            );
        }
        best
    } else {
        grid.remove(0)
    };
    let forest = with_jobs(cfg.jobs, || train_forest(&train, &chosen))??;
    write_model(&args.out, &forest)?;

    let report = match &holdout {
        Some(test) if !test.is_empty() => Some(evaluate(&forest, &test.records)?),
        _ => None,
    };
    if let (Some(r), Some(path)) = (&report, &args.report) {
        write_report(path, r)?;
    }
    let summary = serde_json::json!({
        "model": args.out,
        "config": chosen,
        "train_records": train.len(),
        "validation": report,
    });
    writeln!(
        stdout,
        "{}",
        serde_json::to_string_pretty(&summary).expect("serialisable")
    )
    .map_err(out_err)
}

fn sla_predict(args: PredictArgs, stdout: &mut dyn Write) -> Result<()> {
    let _cfg = args.common.load()?;
    let forest = read_model(&args.model)?;
    let table = read_table(&args.data)?;
    if table.feature_names != forest.feature_names {
        return Err(Error::Format {
            what: "dataset",
            reason: format!(
                "feature columns {:?} do not match the model's {:?}",
                table.feature_names, forest.feature_names
            ),
        });
    }
    let predicted = table
        .rows
        .iter()
        .map(|x| predict(&forest, x))
        .collect::<Result<Vec<_>>>()?;
    atomic::write_file(&args.out, |w| {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["row", "predicted"])?;
        for (i, p) in predicted.iter().enumerate() {
            out.write_record([i.to_string(), p.to_string()])?;
        }
        out.flush()
    })?;
    match table.labels.is_some() {
        true => {
            let data = table.into_dataset()?;
            let report = evaluate(&forest, &data.records)?;
            if let Some(path) = &args.report {
                write_report(path, &report)?;
            }
            writeln!(
                stdout,
                "{}",
                serde_json::to_string_pretty(&report).expect("serialisable")
            )
            .map_err(out_err)
        }
        false => writeln!(stdout, "predictions={} out={}", predicted.len(), args.out.display()).map_err(out_err),
    }
}

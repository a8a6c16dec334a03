//! Experiment configuration: a sectioned TOML document, overlaid with
//! `section.key=value` overrides from the command line.

use std::path::{Path, PathBuf};

use serde::Deserialize;
use toml::{Table, Value};

use crate::error::{Error, Result};
use crate::harness::{linear_grid, log_grid, BandwidthPlan, ComputeProfile, ImageSpec, LatencyModel, SweepSpec};
use crate::latent::CodecProfile;
use crate::netmodel::{read_trace, TelemetryConfig};
use crate::policy::ModulatorConfig;
use crate::slalib::{FeaturesPerSplit, ForestConfig};

/// Environment variable naming the config file used when `--config` is absent.
pub const CONFIG_ENV: &str = "NETAWARE_CONFIG";

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawConfig {
    output_dir: PathBuf,
    log_level: String,
    jobs: usize,
    seed: u64,
    policy: ModulatorConfig,
    telemetry: TelemetryConfig,
    codec: CodecProfile,
    sweep: RawSweep,
    forest: RawForest,
}

impl Default for RawConfig {
    fn default() -> Self {
        Self {
            output_dir: PathBuf::from("out"),
            log_level: "warn".into(),
            jobs: 0,
            seed: 0,
            policy: ModulatorConfig::default(),
            telemetry: TelemetryConfig::default(),
            codec: CodecProfile::default(),
            sweep: RawSweep::default(),
            forest: RawForest::default(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawSweep {
    images: Vec<String>,
    /// `grid`, `sampled` or `trace`.
    bandwidth_mode: String,
    bandwidth_points: usize,
    /// `log` or `linear`.
    bandwidth_spacing: String,
    bandwidth_min: Option<f64>,
    bandwidth_max: Option<f64>,
    samples: usize,
    trace: Option<PathBuf>,
    /// `fixed` or `sampled`.
    rtt_mode: String,
    rtt_ms: f64,
    repetitions: usize,
    /// Compute preset: `reference` or `edge-cpu`.
    compute: String,
    edge_ms: Option<f64>,
    cloud_ms: Option<f64>,
}

impl Default for RawSweep {
    fn default() -> Self {
        Self {
            images: vec!["kodak".into(), "flickr2k".into()],
            bandwidth_mode: "grid".into(),
            bandwidth_points: 100,
            bandwidth_spacing: "log".into(),
            bandwidth_min: None,
            bandwidth_max: None,
            samples: 100,
            trace: None,
            rtt_mode: "fixed".into(),
            rtt_ms: 50.0,
            repetitions: 1,
            compute: "reference".into(),
            edge_ms: None,
            cloud_ms: None,
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RawForest {
    trees: usize,
    /// 0 means unlimited.
    max_depth: usize,
    min_split: usize,
    features_per_split: FeaturesPerSplit,
    bootstrap: bool,
    train_fraction: f64,
    folds: usize,
}

impl Default for RawForest {
    fn default() -> Self {
        let f = ForestConfig::default();
        Self {
            trees: f.n_trees,
            max_depth: 0,
            min_split: f.min_split,
            features_per_split: f.features_per_split,
            bootstrap: f.bootstrap,
            train_fraction: 0.8,
            folds: 5,
        }
    }
}

/// Forest hyper-parameters plus the evaluation protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct ForestSettings {
    pub forest: ForestConfig,
    pub train_fraction: f64,
    pub folds: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AppConfig {
    pub policy: ModulatorConfig,
    pub telemetry: TelemetryConfig,
    pub codec: CodecProfile,
    pub sweep: SweepSpec,
    pub forest: ForestSettings,
    pub output_dir: PathBuf,
    pub log_level: log::LevelFilter,
    pub jobs: usize,
    pub seed: u64,
}

impl Default for AppConfig {
    fn default() -> Self {
        parse_config_str("", &[]).expect("defaults are valid")
    }
}

/// Loads `path` (or the file named by [`CONFIG_ENV`], or nothing), applies
/// overrides and validates the result.
pub fn parse_config(path: Option<&Path>, overrides: &[(String, String)]) -> Result<AppConfig> {
    let env_path = std::env::var_os(CONFIG_ENV).map(PathBuf::from);
    let text = match path.map(Path::to_path_buf).or(env_path) {
        Some(p) => std::fs::read_to_string(&p)
            .map_err(|e| Error::config("config", format!("cannot read {}: {e}", p.display())))?,
        None => String::new(),
    };
    parse_config_str(&text, overrides)
}

pub fn parse_config_str(text: &str, overrides: &[(String, String)]) -> Result<AppConfig> {
    let mut doc: Table = toml::from_str(text).map_err(|e| Error::config("config", e.to_string()))?;
    for (key, raw) in overrides {
        set_path(&mut doc, key, parse_value(raw))?;
    }
    let raw: RawConfig = doc
        .try_into()
        .map_err(|e: toml::de::Error| Error::config("config", e.message().to_string()))?;
    build(raw)
}

/// Parses an override value as TOML, falling back to a bare string.
fn parse_value(raw: &str) -> Value {
    toml::from_str::<Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn set_path(doc: &mut Table, key: &str, value: Value) -> Result<()> {
    let mut parts: Vec<&str> = key.split('.').collect();
    let last = parts
        .pop()
        .filter(|s| !s.is_empty())
        .ok_or_else(|| Error::config(key, "empty key"))?;
    let mut table = doc;
    for part in parts {
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| Value::Table(Table::new()));
        table = entry
            .as_table_mut()
            .ok_or_else(|| Error::config(key, format!("`{part}` is not a section")))?;
    }
    table.insert(last.to_string(), value);
    Ok(())
}

fn build(raw: RawConfig) -> Result<AppConfig> {
    raw.codec.validate()?;
    raw.policy.validate(raw.codec.latent_channels as usize)?;
    let telemetry = TelemetryConfig {
        seed: raw.seed,
        ..raw.telemetry
    };
    telemetry.validate()?;

    let log_level = raw
        .log_level
        .parse::<log::LevelFilter>()
        .map_err(|_| Error::config("log_level", format!("unknown level `{}`", raw.log_level)))?;

    let s = raw.sweep;
    let images = s
        .images
        .iter()
        .map(|i| ImageSpec::parse(i))
        .collect::<Result<Vec<_>>>()?;
    let lo = s.bandwidth_min.unwrap_or(raw.policy.b_min);
    let hi = s.bandwidth_max.unwrap_or(raw.policy.b_max);
    if !(lo > 0.0 && hi >= lo) {
        return Err(Error::config(
            "sweep.bandwidth_max",
            "bandwidth range must be positive and ordered",
        ));
    }
    let bandwidth = match s.bandwidth_mode.as_str() {
        "grid" => BandwidthPlan::Grid {
            points: match s.bandwidth_spacing.as_str() {
                "log" => log_grid(lo, hi, s.bandwidth_points),
                "linear" => linear_grid(lo, hi, s.bandwidth_points),
                other => {
                    return Err(Error::config(
                        "sweep.bandwidth_spacing",
                        format!("expected `log` or `linear`, got `{other}`"),
                    ))
                }
            },
        },
        "sampled" => BandwidthPlan::Sampled { count: s.samples },
        "trace" => {
            let path = s
                .trace
                .as_ref()
                .ok_or_else(|| Error::config("sweep.trace", "required when bandwidth_mode = \"trace\""))?;
            BandwidthPlan::Trace {
                snapshots: read_trace(path)?,
            }
        }
        other => {
            return Err(Error::config(
                "sweep.bandwidth_mode",
                format!("expected `grid`, `sampled` or `trace`, got `{other}`"),
            ))
        }
    };
    let fixed_rtt_ms = match s.rtt_mode.as_str() {
        "fixed" => Some(s.rtt_ms),
        "sampled" => None,
        other => {
            return Err(Error::config(
                "sweep.rtt_mode",
                format!("expected `fixed` or `sampled`, got `{other}`"),
            ))
        }
    };
    let mut compute = ComputeProfile::preset(&s.compute).ok_or_else(|| {
        Error::config(
            "sweep.compute",
            format!("unknown preset `{}` (reference, edge-cpu)", s.compute),
        )
    })?;
    if let Some(ms) = s.edge_ms {
        compute.edge = LatencyModel::Constant { ms };
    }
    if let Some(ms) = s.cloud_ms {
        compute.cloud = LatencyModel::Constant { ms };
    }

    let sweep = SweepSpec {
        images,
        bandwidth,
        fixed_rtt_ms,
        policy: raw.policy.clone(),
        telemetry: telemetry.clone(),
        codec: raw.codec,
        compute,
        seed: raw.seed,
        repetitions: s.repetitions,
    };
    sweep.validate()?;

    let f = raw.forest;
    let forest = ForestConfig {
        n_trees: f.trees,
        max_depth: (f.max_depth > 0).then_some(f.max_depth),
        min_split: f.min_split,
        features_per_split: f.features_per_split,
        bootstrap: f.bootstrap,
        seed: raw.seed,
    };
    forest.validate()?;
    if !(f.train_fraction > 0.0 && f.train_fraction <= 1.0) {
        return Err(Error::config("forest.train_fraction", "must lie in (0, 1]"));
    }
    if f.folds < 2 {
        return Err(Error::config("forest.folds", "must be at least 2"));
    }

    Ok(AppConfig {
        policy: raw.policy,
        telemetry,
        codec: raw.codec,
        sweep,
        forest: ForestSettings {
            forest,
            train_fraction: f.train_fraction,
            folds: f.folds,
        },
        output_dir: raw.output_dir,
        log_level,
        jobs: raw.jobs,
        seed: raw.seed,
    })
}

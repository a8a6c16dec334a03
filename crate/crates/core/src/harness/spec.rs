use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::latent::{CodecProfile, Geometry};
use crate::netmodel::{LinkSnapshot, TelemetryConfig};
use crate::policy::ModulatorConfig;

/// An image size tagged with the benchmark it stands for.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSpec {
    pub dataset: String,
    pub h: u32,
    pub w: u32,
}

impl ImageSpec {
    /// Benchmark presets as `(name, h, w)`. With the default codec the
    /// encoded latents are 15.73, 104.86 and 98.30 Mb.
    pub const PRESETS: [(&'static str, u32, u32); 3] =
        [("kodak", 512, 768), ("clic21", 1280, 2048), ("flickr2k", 1200, 2048)];

    pub fn new(dataset: impl Into<String>, h: u32, w: u32) -> Self {
        Self {
            dataset: dataset.into(),
            h,
            w,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        let lower = name.to_ascii_lowercase();
        Self::PRESETS
            .iter()
            .find(|(n, _, _)| *n == lower)
            .map(|&(n, h, w)| Self::new(n, h, w))
    }

    /// Parses a preset name or `name:WxH`.
    pub fn parse(text: &str) -> Result<Self> {
        if let Some(p) = Self::preset(text) {
            return Ok(p);
        }
        let bad = || {
            Error::config(
                "sweep.images",
                format!("`{text}` is neither a preset (kodak, clic21, flickr2k) nor `name:WxH`"),
            )
        };
        let (name, dims) = text.split_once(':').ok_or_else(bad)?;
        let (w, h) = dims.split_once(['x', 'X']).ok_or_else(bad)?;
        let w = w.trim().parse().map_err(|_| bad())?;
        let h = h.trim().parse().map_err(|_| bad())?;
        Ok(Self::new(name.trim(), h, w))
    }

    pub fn geometry(&self) -> Geometry {
        Geometry::new(self.h, self.w)
    }
}

/// Where link states come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase")]
pub enum BandwidthPlan {
    /// Fixed bandwidth points in Mbps.
    Grid { points: Vec<f64> },
    /// `count` snapshots drawn from the telemetry model.
    Sampled { count: usize },
    /// Recorded snapshots replayed in order.
    Trace { snapshots: Vec<LinkSnapshot> },
}

impl BandwidthPlan {
    pub fn len(&self) -> usize {
        match self {
            BandwidthPlan::Grid { points } => points.len(),
            BandwidthPlan::Sampled { count } => *count,
            BandwidthPlan::Trace { snapshots } => snapshots.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `n` points spaced evenly in log10 between `lo` and `hi` inclusive.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.log10(), hi.log10());
            (0..n)
                .map(|i| {
                    if i == n - 1 {
                        hi
                    } else if i == 0 {
                        lo
                    } else {
                        10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)
                    }
                })
                .collect()
        }
    }
}

pub fn linear_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

/// Distribution of a compute latency, in ms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LatencyModel {
    Constant { ms: f64 },
    Uniform { low_ms: f64, high_ms: f64 },
}

impl LatencyModel {
    pub fn sample(&self, rng: &mut dyn RngCore) -> f64 {
        match *self {
            LatencyModel::Constant { ms } => ms,
            LatencyModel::Uniform { low_ms, high_ms } => rng.random_range(low_ms..=high_ms),
        }
    }

    fn validate(&self, key: &str) -> Result<()> {
        let ok = match *self {
            LatencyModel::Constant { ms } => ms >= 0.0 && ms.is_finite(),
            LatencyModel::Uniform { low_ms, high_ms } => low_ms >= 0.0 && low_ms <= high_ms && high_ms.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::config(key, "latencies must be finite, non-negative and ordered"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelVariant {
    Small,
    Base,
    Large,
}

impl ModelVariant {
    pub fn code(self) -> f64 {
        self as u8 as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuantMode {
    Fp32,
    DynLinear,
}

impl QuantMode {
    pub fn code(self) -> f64 {
        self as u8 as f64
    }
}

/// Compute-side latencies plus the host state recorded as features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComputeProfile {
    pub edge: LatencyModel,
    pub cloud: LatencyModel,
    pub cpu_util_pct: f64,
    pub active_cores: u32,
    pub mem_gb: f64,
    pub gpu_util_pct: f64,
    pub model_variant: ModelVariant,
    pub quant_mode: QuantMode,
}

impl ComputeProfile {
    /// GPU-class encoder and decoder, about 13 ms each.
    pub fn reference() -> Self {
        Self {
            edge: LatencyModel::Constant { ms: 13.0 },
            cloud: LatencyModel::Constant { ms: 13.0 },
            cpu_util_pct: 35.0,
            active_cores: 8,
            mem_gb: 16.0,
            gpu_util_pct: 60.0,
            model_variant: ModelVariant::Base,
            quant_mode: QuantMode::Fp32,
        }
    }

    /// Quantised encoder on a 6-core, 8 GB edge CPU: encoding takes 6-9 s.
    pub fn edge_cpu() -> Self {
        Self {
            edge: LatencyModel::Uniform {
                low_ms: 6000.0,
                high_ms: 9000.0,
            },
            cloud: LatencyModel::Constant { ms: 13.0 },
            cpu_util_pct: 95.0,
            active_cores: 6,
            mem_gb: 8.0,
            gpu_util_pct: 30.0,
            model_variant: ModelVariant::Base,
            quant_mode: QuantMode::DynLinear,
        }
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "reference" => Some(Self::reference()),
            "edge-cpu" | "edge_cpu" => Some(Self::edge_cpu()),
            _ => None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.edge.validate("compute.edge")?;
        self.cloud.validate("compute.cloud")
    }
}

impl Default for ComputeProfile {
    fn default() -> Self {
        Self::reference()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub images: Vec<ImageSpec>,
    pub bandwidth: BandwidthPlan,
    /// Overrides the RTT of every link state when set.
    pub fixed_rtt_ms: Option<f64>,
    pub policy: ModulatorConfig,
    pub telemetry: TelemetryConfig,
    pub codec: CodecProfile,
    pub compute: ComputeProfile,
    pub seed: u64,
    pub repetitions: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        let policy = ModulatorConfig::default();
        Self {
            images: vec![
                ImageSpec::preset("kodak").unwrap(),
                ImageSpec::preset("flickr2k").unwrap(),
            ],
            bandwidth: BandwidthPlan::Grid {
                points: log_grid(policy.b_min, policy.b_max, 100),
            },
            fixed_rtt_ms: Some(50.0),
            policy,
            telemetry: TelemetryConfig::default(),
            codec: CodecProfile::default(),
            compute: ComputeProfile::reference(),
            seed: 0,
            repetitions: 1,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.codec.validate()?;
        self.policy.validate(self.codec.latent_channels as usize)?;
        self.telemetry.validate()?;
        self.compute.validate()?;
        for img in &self.images {
            self.codec
                .tokens(img.geometry())
                .map_err(|e| Error::config("sweep.images", e.to_string()))?;
        }
        if let Some(rtt) = self.fixed_rtt_ms {
            if !(rtt > 0.0 && rtt.is_finite()) {
                return Err(Error::config("sweep.rtt_ms", "must be positive"));
            }
        }
        match &self.bandwidth {
            BandwidthPlan::Grid { points } if points.iter().any(|b| !(*b > 0.0 && b.is_finite())) => {
                Err(Error::config("sweep.bandwidth", "grid points must be positive"))
            }
            BandwidthPlan::Trace { snapshots }
                if snapshots.iter().any(|s| !(s.bandwidth_mbps > 0.0 && s.rtt_ms > 0.0)) =>
            {
                Err(Error::config("sweep.trace", "trace bandwidth and rtt must be positive"))
            }
            _ => Ok(()),
        }
    }
}

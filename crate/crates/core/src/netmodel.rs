//! Backhaul telemetry sampling and the additive latency model.
//!
//! Payloads are in bits, latencies in milliseconds, bandwidth in Mbps
//! (10^6 bits per second).

use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// One telemetry observation of the edge-to-cloud path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkSnapshot {
    pub bandwidth_mbps: f64,
    pub rtt_ms: f64,
}

impl LinkSnapshot {
    pub const fn new(bandwidth_mbps: f64, rtt_ms: f64) -> Self {
        Self { bandwidth_mbps, rtt_ms }
    }

    /// Bandwidth-delay product in bits.
    pub fn bdp_bits(&self) -> f64 {
        self.bandwidth_mbps * 1e6 * self.rtt_ms / 1000.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TelemetryConfig {
    pub b_low: f64,
    pub b_high: f64,
    pub rtt_low: f64,
    pub rtt_high: f64,
    /// Location and scale of the RTT's underlying normal (log-ms).
    pub rtt_mu: f64,
    pub rtt_sigma: f64,
    pub seed: u64,
}

impl Default for TelemetryConfig {
    fn default() -> Self {
        Self {
            b_low: 10.0,
            b_high: 1000.0,
            rtt_low: 5.0,
            rtt_high: 300.0,
            rtt_mu: 40f64.ln(),
            rtt_sigma: 0.8,
            seed: 0,
        }
    }
}

/// The RTT window must overlap the log-normal's central +-5 sigma band,
/// otherwise rejection sampling would almost never accept.
const MAX_WINDOW_SIGMAS: f64 = 5.0;

impl TelemetryConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |key: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::config(key, "must be a positive finite number"))
            }
        };
        positive("telemetry.b_low", self.b_low)?;
        positive("telemetry.b_high", self.b_high)?;
        positive("telemetry.rtt_low", self.rtt_low)?;
        positive("telemetry.rtt_high", self.rtt_high)?;
        positive("telemetry.rtt_sigma", self.rtt_sigma)?;
        if self.b_low > self.b_high {
            return Err(Error::config("telemetry.b_high", "must not be below telemetry.b_low"));
        }
        if self.rtt_low >= self.rtt_high {
            return Err(Error::config("telemetry.rtt_high", "must exceed telemetry.rtt_low"));
        }
        if !self.rtt_mu.is_finite() {
            return Err(Error::config("telemetry.rtt_mu", "must be finite"));
        }
        let (lo, hi) = self.rtt_window_sigmas();
        if lo > MAX_WINDOW_SIGMAS || hi < -MAX_WINDOW_SIGMAS {
            return Err(Error::config(
                "telemetry.rtt_mu",
                format!("RTT window lies {lo:.1}..{hi:.1} sigma from the log-normal centre"),
            ));
        }
        Ok(())
    }

    /// Window bounds as standard scores of the underlying normal.
    pub fn rtt_window_sigmas(&self) -> (f64, f64) {
        let z = |x: f64| (x.ln() - self.rtt_mu) / self.rtt_sigma;
        (z(self.rtt_low), z(self.rtt_high))
    }
}

/// Draws one snapshot: log-uniform bandwidth and a log-normal RTT
/// truncated to the configured window by rejection.
pub fn sample_snapshot<R: Rng + ?Sized>(cfg: &TelemetryConfig, rng: &mut R) -> LinkSnapshot {
    let bandwidth_mbps = if cfg.b_low == cfg.b_high {
        cfg.b_low
    } else {
        let exponent = rng.random_range(cfg.b_low.log10()..=cfg.b_high.log10());
        10f64.powf(exponent).clamp(cfg.b_low, cfg.b_high)
    };
    LinkSnapshot {
        bandwidth_mbps,
        rtt_ms: sample_rtt(cfg, rng),
    }
}

/// Truncated log-normal RTT draw.
pub fn sample_rtt<R: Rng + ?Sized>(cfg: &TelemetryConfig, rng: &mut R) -> f64 {
    let dist = LogNormal::new(cfg.rtt_mu, cfg.rtt_sigma).expect("validated telemetry config");
    loop {
        let rtt = dist.sample(rng);
        if (cfg.rtt_low..=cfg.rtt_high).contains(&rtt) {
            return rtt;
        }
    }
}

/// A reproducible stream of snapshots.
pub struct TelemetrySampler {
    cfg: TelemetryConfig,
    rng: ChaCha8Rng,
}

impl TelemetrySampler {
    /// Sampler for stream `stream_index` of the config's seed.
    pub fn new(cfg: TelemetryConfig, stream_index: u64) -> Result<Self> {
        cfg.validate()?;
        let rng = rng::stream(cfg.seed, "telemetry", stream_index);
        Ok(Self { cfg, rng })
    }

    pub fn config(&self) -> &TelemetryConfig {
        &self.cfg
    }
}

impl Iterator for TelemetrySampler {
    type Item = LinkSnapshot;

    fn next(&mut self) -> Option<LinkSnapshot> {
        Some(sample_snapshot(&self.cfg, &mut self.rng))
    }
}

#[derive(Debug, Deserialize)]
struct TraceRow {
    bandwidth_mbps: f64,
    rtt_ms: f64,
}

/// Loads a recorded telemetry trace with columns `bandwidth_mbps,rtt_ms`.
pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<LinkSnapshot>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| Error::csv(path, e))?;
    reader
        .deserialize::<TraceRow>()
        .enumerate()
        .map(|(i, row)| {
            let row = row.map_err(|e| Error::csv(path, e))?;
            if !(row.bandwidth_mbps > 0.0 && row.rtt_ms >= 0.0) {
                return Err(Error::InvalidTelemetry(format!(
                    "{} row {}: bandwidth must be positive and rtt non-negative",
                    path.display(),
                    i + 1
                )));
            }
            Ok(LinkSnapshot::new(row.bandwidth_mbps, row.rtt_ms))
        })
        .collect()
}

/// One-way transfer time `S/B + RTT/2` in ms.
pub fn tx_latency(payload_bits: u64, link: &LinkSnapshot) -> Result<f64> {
    if !(link.bandwidth_mbps > 0.0) {
        return Err(Error::InvalidLink(format!(
            "bandwidth must be positive, got {} Mbps",
            link.bandwidth_mbps
        )));
    }
    if !(link.rtt_ms >= 0.0) {
        return Err(Error::InvalidLink(format!(
            "rtt must be non-negative, got {} ms",
            link.rtt_ms
        )));
    }
    Ok(payload_bits as f64 / (link.bandwidth_mbps * 1e6) * 1000.0 + link.rtt_ms / 2.0)
}

/// Additive end-to-end latency terms, all in ms.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LatencyComponents {
    pub edge: f64,
    pub radio: f64,
    pub tx: f64,
    pub core: f64,
    pub upf_as: f64,
    pub cloud: f64,
    /// Inter-operator peering point, only present in multi-domain paths.
    pub peering: Option<f64>,
}

impl LatencyComponents {
    pub const CORE_MS: f64 = 24.0;
    pub const UPF_AS_MS: f64 = 20.0;
    pub const PROCESSING_MS: f64 = 13.0;
    pub const PEERING_MS: f64 = 0.431;

    /// Reference values for a single-operator path, with `tx` to be filled
    /// in from the transport model.
    pub fn reference(tx: f64) -> Self {
        Self {
            edge: Self::PROCESSING_MS,
            radio: 0.0,
            tx,
            core: Self::CORE_MS,
            upf_as: Self::UPF_AS_MS,
            cloud: Self::PROCESSING_MS,
            peering: Some(Self::PEERING_MS),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("edge", self.edge),
            ("radio", self.radio),
            ("tx", self.tx),
            ("core", self.core),
            ("upf_as", self.upf_as),
            ("cloud", self.cloud),
            ("peering", self.peering.unwrap_or(0.0)),
        ];
        match fields.iter().find(|(_, v)| !(*v >= 0.0)) {
            Some((name, v)) => Err(Error::Domain(format!("latency component {name} = {v} is negative"))),
            None => Ok(()),
        }
    }
}

/// Sum of the latency components; peering counts only when requested.
pub fn e2e_latency(c: &LatencyComponents, include_peering: bool) -> f64 {
    let peering = if include_peering { c.peering.unwrap_or(0.0) } else { 0.0 };
    c.edge + c.radio + c.tx + c.core + c.upf_as + c.cloud + peering
}

/// Reduced model used when encoder and decoder sit at the edge and cloud
/// ends of a single transport hop.
pub fn edge_pipeline_latency(edge_ms: f64, tx_ms: f64, cloud_ms: f64) -> f64 {
    edge_ms + tx_ms + cloud_ms
}

/// Energy in joules for `gflops` of work at `nj_per_flop`.
pub fn flops_energy(gflops: f64, nj_per_flop: f64) -> f64 {
    gflops * 1e9 * nj_per_flop * 1e-9
}

/// Access-domain latency presets in ms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadioProfile {
    /// Access latency left out of the model.
    Omitted,
    Embb,
    Urllc,
}

impl RadioProfile {
    pub fn range_ms(self) -> (f64, f64) {
        match self {
            RadioProfile::Omitted => (0.0, 0.0),
            RadioProfile::Embb => (5.0, 10.0),
            RadioProfile::Urllc => (1.0, 4.0),
        }
    }

    pub fn nominal_ms(self) -> f64 {
        let (lo, hi) = self.range_ms();
        (lo + hi) / 2.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn tx_examples() {
        let gig = LinkSnapshot::new(1000.0, 30.0);
        assert_relative_eq!(tx_latency(236_000_000, &gig).unwrap(), 251.0, epsilon = 1e-9);
        assert_relative_eq!(tx_latency(0, &gig).unwrap(), 15.0);
        assert_relative_eq!(tx_latency(9_830_400, &gig).unwrap(), 24.8304, epsilon = 1e-9);
        assert!(matches!(
            tx_latency(1, &LinkSnapshot::new(0.0, 10.0)),
            Err(Error::InvalidLink(_))
        ));
    }

    #[test]
    fn e2e_examples() {
        let c = LatencyComponents {
            edge: 13.0,
            radio: 0.0,
            tx: 24.8,
            core: 24.0,
            upf_as: 20.0,
            cloud: 13.0,
            peering: Some(0.431),
        };
        assert_relative_eq!(e2e_latency(&c, false), 94.8, epsilon = 1e-9);
        assert_relative_eq!(e2e_latency(&c, true) - e2e_latency(&c, false), 0.431, epsilon = 1e-12);
        assert_eq!(e2e_latency(&LatencyComponents::default(), true), 0.0);
        assert_eq!(c, LatencyComponents::reference(24.8));
    }

    #[test]
    fn negative_component_rejected() {
        let c = LatencyComponents {
            core: -1.0,
            ..Default::default()
        };
        assert!(matches!(c.validate(), Err(Error::Domain(_))));
    }

    #[test]
    fn edge_pipeline_examples() {
        assert_relative_eq!(edge_pipeline_latency(13.0, 24.8, 13.0), 50.8, epsilon = 1e-12);
        assert_eq!(edge_pipeline_latency(0.0, 0.0, 0.0), 0.0);
        assert_eq!(edge_pipeline_latency(6000.0, 700.0, 300.0), 7000.0);
    }

    #[test]
    fn energy_examples() {
        assert_relative_eq!(flops_energy(34.52, 0.1), 3.452, epsilon = 1e-12);
        assert_relative_eq!(flops_energy(34.52, 0.3), 10.356, epsilon = 1e-12);
        assert_eq!(flops_energy(0.0, 0.2), 0.0);
    }

    #[test]
    fn degenerate_bandwidth_support() {
        let cfg = TelemetryConfig {
            b_low: 100.0,
            b_high: 100.0,
            ..Default::default()
        };
        cfg.validate().unwrap();
        for s in TelemetrySampler::new(cfg, 0).unwrap().take(100) {
            assert_eq!(s.bandwidth_mbps, 100.0);
        }
    }

    #[test]
    fn samples_respect_window_and_median() {
        let cfg = TelemetryConfig::default();
        let mut logs: Vec<f64> = TelemetrySampler::new(cfg.clone(), 0)
            .unwrap()
            .take(10_000)
            .inspect(|s| {
                assert!((10.0..=1000.0).contains(&s.bandwidth_mbps));
                assert!((5.0..=300.0).contains(&s.rtt_ms));
            })
            .map(|s| s.bandwidth_mbps.log10())
            .collect();
        logs.sort_by(f64::total_cmp);
        let median = logs[logs.len() / 2];
        assert!((median - 2.0).abs() <= 0.05, "median log10 bandwidth {median}");
    }

    #[test]
    fn sampler_is_deterministic() {
        let a: Vec<_> = TelemetrySampler::new(TelemetryConfig::default(), 4)
            .unwrap()
            .take(50)
            .collect();
        let b: Vec<_> = TelemetrySampler::new(TelemetryConfig::default(), 4)
            .unwrap()
            .take(50)
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn impossible_rtt_window_rejected() {
        let cfg = TelemetryConfig {
            rtt_mu: 50.0,
            ..Default::default()
        };
        assert!(matches!(cfg.validate(), Err(Error::Config { key, .. }) if key == "telemetry.rtt_mu"));
    }

    #[test]
    fn trace_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        std::fs::write(&path, "bandwidth_mbps,rtt_ms\n100,20\n550.5,7.25\n").unwrap();
        let trace = read_trace(&path).unwrap();
        assert_eq!(
            trace,
            vec![LinkSnapshot::new(100.0, 20.0), LinkSnapshot::new(550.5, 7.25)]
        );
        std::fs::write(&path, "bandwidth_mbps,rtt_ms\n0,20\n").unwrap();
        assert!(read_trace(&path).is_err());
    }

    proptest! {
        #[test]
        fn tx_monotone(s in 0u64..1_000_000_000, b in 1.0f64..1000.0, rtt in 0.0f64..300.0, d in 0.001f64..10.0) {
            let base = tx_latency(s, &LinkSnapshot::new(b, rtt)).unwrap();
            if s > 0 {
                prop_assert!(tx_latency(s, &LinkSnapshot::new(b + d, rtt)).unwrap() < base);
            }
            prop_assert!(tx_latency(s + 1_000, &LinkSnapshot::new(b, rtt)).unwrap() > base);
            prop_assert!(tx_latency(s, &LinkSnapshot::new(b, rtt + d)).unwrap() > base);
        }

        #[test]
        fn e2e_split_invariant(vals in proptest::array::uniform6(0.0f64..1e4)) {
            let c = LatencyComponents { edge: vals[0], radio: vals[1], tx: vals[2], core: vals[3], upf_as: vals[4], cloud: vals[5], peering: None };
            let rotated = LatencyComponents { edge: vals[5], radio: vals[0], tx: vals[1], core: vals[2], upf_as: vals[3], cloud: vals[4], peering: None };
            let split = LatencyComponents { edge: vals[0] / 2.0, radio: vals[1] + vals[0] / 2.0, ..c };
            let total = e2e_latency(&c, false);
            prop_assert!((total - e2e_latency(&rotated, false)).abs() <= 1e-9 * total.max(1.0));
            prop_assert!((total - e2e_latency(&split, false)).abs() <= 1e-9 * total.max(1.0));
        }
    }
}

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::{PointSummary, RunResult, SweepOutput, SweepSpec};
use crate::atomic::Batch;
use crate::error::Result;

pub const RESULT_COLUMNS: [&str; 21] = [
    "dataset",
    "h",
    "w",
    "bandwidth_mbps",
    "rtt_ms",
    "k",
    "payload_source_bits",
    "payload_encoded_bits",
    "payload_masked_bits",
    "tx_source_ms",
    "tx_encoded_ms",
    "tx_masked_ms",
    "e2e_ms",
    "util_source_pct",
    "util_encoded_pct",
    "util_masked_pct",
    "fps_source",
    "fps_encoded",
    "fps_masked",
    "energy_retention",
    "sla_tier",
];

pub const SUMMARY_COLUMNS: [&str; 14] = [
    "dataset",
    "h",
    "w",
    "link_index",
    "runs",
    "bandwidth_mbps",
    "k_mean",
    "tx_masked_mean_ms",
    "e2e_mean_ms",
    "e2e_p50_ms",
    "e2e_p95_ms",
    "e2e_p99_ms",
    "channel_reduction_pct",
    "source_reduction_pct",
];

pub fn write_results_csv(out: &mut dyn Write, results: &[RunResult]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULT_COLUMNS)?;
    for r in results {
        w.write_record([
            r.dataset.clone(),
            r.h.to_string(),
            r.w.to_string(),
            r.snapshot.bandwidth_mbps.to_string(),
            r.snapshot.rtt_ms.to_string(),
            r.k.to_string(),
            r.payload_bits.source.to_string(),
            r.payload_bits.encoded.to_string(),
            r.payload_bits.masked.to_string(),
            r.tx_ms.source.to_string(),
            r.tx_ms.encoded.to_string(),
            r.tx_ms.masked.to_string(),
            r.e2e_ms.to_string(),
            r.utilization_pct.source.to_string(),
            r.utilization_pct.encoded.to_string(),
            r.utilization_pct.masked.to_string(),
            r.throughput_fps.source.to_string(),
            r.throughput_fps.encoded.to_string(),
            r.throughput_fps.masked.to_string(),
            r.energy_retention.to_string(),
            r.sla_tier.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_summary_csv(out: &mut dyn Write, summary: &[PointSummary]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SUMMARY_COLUMNS)?;
    for s in summary {
        w.write_record([
            s.dataset.clone(),
            s.h.to_string(),
            s.w.to_string(),
            s.link_index.to_string(),
            s.runs.to_string(),
            s.bandwidth_mbps.to_string(),
            s.k_mean.to_string(),
            s.tx_masked_mean_ms.to_string(),
            s.e2e_mean_ms.to_string(),
            s.e2e_p50_ms.to_string(),
            s.e2e_p95_ms.to_string(),
            s.e2e_p99_ms.to_string(),
            s.channel_reduction_pct.to_string(),
            s.source_reduction_pct.to_string(),
        ])?;
    }
    w.flush()
}

/// Run metadata written next to the results.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub seed: u64,
    pub rows: usize,
    pub spec: &'a SweepSpec,
    /// Outputs that go beyond mean-value reporting.
    pub extensions: Vec<&'static str>,
}

impl<'a> Manifest<'a> {
    pub fn new(spec: &'a SweepSpec, rows: usize) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            seed: spec.seed,
            rows,
            spec,
            extensions: vec!["summary.csv e2e_p50_ms/e2e_p95_ms/e2e_p99_ms: tail-latency percentiles (nearest rank)"],
        }
    }
}

impl SweepOutput {
    /// Writes `results.csv`, `summary.csv` and `manifest.json` into `dir`.
    /// Nothing is renamed into place unless all three were written.
    pub fn write_to(&self, dir: &Path, spec: &SweepSpec) -> Result<Vec<PathBuf>> {
        let manifest = Manifest::new(spec, self.results.len());
        let mut batch = Batch::new();
        batch.stage(dir.join("results.csv"), |w| write_results_csv(w, &self.results))?;
        batch.stage(dir.join("summary.csv"), |w| write_summary_csv(w, &self.summary))?;
        batch.stage(dir.join("manifest.json"), |w| {
            serde_json::to_writer_pretty(&mut *w, &manifest)?;
            w.write_all(b"\n")
        })?;
        batch.commit()
    }
}

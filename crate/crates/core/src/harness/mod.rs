//! Sweep runner: encode, pick a budget from telemetry, mask, and account
//! for payload, transfer time, utilisation and frame rate at every point.

mod output;
mod spec;

pub use output::{write_results_csv, write_summary_csv, Manifest, RESULT_COLUMNS, SUMMARY_COLUMNS};
pub use spec::{
    linear_grid, log_grid, BandwidthPlan, ComputeProfile, ImageSpec, LatencyModel, ModelVariant, QuantMode, SweepSpec,
};

use rand::RngCore;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::latent::{
    channel_importance, payload_bits, retention_from_importance, topk_mask, LatentEncoder, PayloadKind,
    SyntheticEncoder,
};
use crate::netmodel::{edge_pipeline_latency, sample_rtt, sample_snapshot, tx_latency, LinkSnapshot};
use crate::policy::{BudgetPolicy, NetAwareModulator};
use crate::rng;
use crate::slalib::{classify_tier, Dataset, FeatureRecord, SlaTier, FEATURE_NAMES};

/// One value for each transmitted state of an image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PerKind<T> {
    pub source: T,
    pub encoded: T,
    pub masked: T,
}

impl<T: Copy> PerKind<T> {
    pub fn map<U>(self, mut f: impl FnMut(T) -> U) -> PerKind<U> {
        PerKind {
            source: f(self.source),
            encoded: f(self.encoded),
            masked: f(self.masked),
        }
    }

    pub fn try_map<U>(self, mut f: impl FnMut(T) -> Result<U>) -> Result<PerKind<U>> {
        Ok(PerKind {
            source: f(self.source)?,
            encoded: f(self.encoded)?,
            masked: f(self.masked)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunResult {
    pub dataset: String,
    pub h: u32,
    pub w: u32,
    pub snapshot: LinkSnapshot,
    pub k: usize,
    pub latent_channels: usize,
    pub payload_bits: PerKind<u64>,
    pub tx_ms: PerKind<f64>,
    pub edge_ms: f64,
    pub cloud_ms: f64,
    /// Edge compute + masked-payload transfer + cloud compute.
    pub e2e_ms: f64,
    pub utilization_pct: PerKind<f64>,
    pub throughput_fps: PerKind<f64>,
    pub energy_retention: f64,
    pub sla_tier: SlaTier,
}

impl RunResult {
    /// Share of latent channels dropped, `1 - k / C`.
    pub fn channel_reduction(&self) -> f64 {
        1.0 - self.k as f64 / self.latent_channels as f64
    }

    /// Payload saved relative to sending the raw frame.
    pub fn source_reduction(&self) -> f64 {
        1.0 - self.payload_bits.masked as f64 / self.payload_bits.source as f64
    }
}

/// Share of the link's bandwidth-delay product taken by one payload, in
/// percent. Above 100 the payload cannot be in flight within one RTT.
pub fn bandwidth_utilization(payload_bits: u64, link: &LinkSnapshot) -> Result<f64> {
    let bdp = link.bdp_bits();
    if !(bdp > 0.0) {
        return Err(Error::InvalidLink(format!(
            "bandwidth-delay product must be positive ({} Mbps x {} ms)",
            link.bandwidth_mbps, link.rtt_ms
        )));
    }
    Ok(100.0 * payload_bits as f64 / bdp)
}

/// Frames per second the link can carry at this payload size.
pub fn effective_throughput(payload_bits: u64, link: &LinkSnapshot) -> Result<f64> {
    if payload_bits == 0 {
        return Err(Error::InvalidLink(
            "payload must be non-empty to define a frame rate".into(),
        ));
    }
    if !(link.bandwidth_mbps > 0.0) {
        return Err(Error::InvalidLink(format!(
            "bandwidth must be positive, got {} Mbps",
            link.bandwidth_mbps
        )));
    }
    Ok(link.bandwidth_mbps * 1e6 / payload_bits as f64)
}

/// Position of one run in the sweep's Cartesian product.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepPoint {
    pub image: usize,
    pub link: usize,
    pub repetition: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointSummary {
    pub dataset: String,
    pub h: u32,
    pub w: u32,
    pub link_index: usize,
    pub runs: usize,
    pub bandwidth_mbps: f64,
    pub k_mean: f64,
    pub tx_masked_mean_ms: f64,
    pub e2e_mean_ms: f64,
    pub e2e_p50_ms: f64,
    pub e2e_p95_ms: f64,
    pub e2e_p99_ms: f64,
    pub channel_reduction_pct: f64,
    pub source_reduction_pct: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    pub results: Vec<RunResult>,
    pub summary: Vec<PointSummary>,
}

/// Nearest-rank percentile of an ascending slice.
fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    sum / n as f64
}

/// Runs a sweep with pluggable encoder and budget policy.
pub struct Harness {
    spec: SweepSpec,
    encoder: Box<dyn LatentEncoder>,
    policy: Box<dyn BudgetPolicy>,
}

impl Harness {
    pub fn new(spec: SweepSpec) -> Result<Self> {
        spec.validate()?;
        let policy = Box::new(NetAwareModulator::new(spec.policy.clone()));
        Ok(Self {
            spec,
            encoder: Box::new(SyntheticEncoder),
            policy,
        })
    }

    pub fn with_encoder(mut self, encoder: impl LatentEncoder + 'static) -> Self {
        self.encoder = Box::new(encoder);
        self
    }

    pub fn with_policy(mut self, policy: impl BudgetPolicy + 'static) -> Self {
        self.policy = Box::new(policy);
        self
    }

    pub fn spec(&self) -> &SweepSpec {
        &self.spec
    }

    /// Every run in emission order: image-major, then link, then repetition.
    pub fn points(&self) -> Vec<SweepPoint> {
        let links = self.spec.bandwidth.len();
        let reps = self.spec.repetitions;
        let mut points = Vec::with_capacity(self.spec.images.len() * links * reps);
        for image in 0..self.spec.images.len() {
            for link in 0..links {
                for repetition in 0..reps {
                    points.push(SweepPoint {
                        image,
                        link,
                        repetition,
                    });
                }
            }
        }
        points
    }

    /// Telemetry for a link slot. Shared by every image so datasets are
    /// compared under the same conditions.
    pub fn link_for(&self, link: usize, repetition: usize) -> LinkSnapshot {
        let tel = &self.spec.telemetry;
        let stream = (link * self.spec.repetitions + repetition) as u64;
        let mut snap = match &self.spec.bandwidth {
            BandwidthPlan::Grid { points } => {
                let rtt = match self.spec.fixed_rtt_ms {
                    Some(rtt) => rtt,
                    None => sample_rtt(tel, &mut rng::stream(tel.seed, "telemetry.rtt", stream)),
                };
                LinkSnapshot::new(points[link], rtt)
            }
            BandwidthPlan::Sampled { .. } => sample_snapshot(tel, &mut rng::stream(tel.seed, "telemetry", stream)),
            BandwidthPlan::Trace { snapshots } => snapshots[link],
        };
        if let Some(rtt) = self.spec.fixed_rtt_ms {
            snap.rtt_ms = rtt;
        }
        snap
    }

    /// Executes the transmit side once for one image under one link state.
    pub fn run_once(&self, image: &ImageSpec, link: LinkSnapshot, rng: &mut dyn RngCore) -> Result<RunResult> {
        let codec = &self.spec.codec;
        let geometry = image.geometry();

        let latent = self.encoder.encode(geometry, codec, rng)?;
        let k = self.policy.select(&link)?.k;
        let importance = channel_importance(&latent);
        let mask = topk_mask(&importance, k)?;
        let retention = retention_from_importance(&importance, &mask);

        let payload = PerKind {
            source: PayloadKind::Source,
            encoded: PayloadKind::Encoded,
            masked: PayloadKind::Masked(k),
        }
        .try_map(|kind| payload_bits(kind, geometry, codec))?;
        let tx_ms = payload.try_map(|bits| tx_latency(bits, &link))?;
        let utilization_pct = payload.try_map(|bits| bandwidth_utilization(bits, &link))?;
        let throughput_fps = payload.try_map(|bits| effective_throughput(bits, &link))?;

        let edge_ms = self.spec.compute.edge.sample(rng);
        let cloud_ms = self.spec.compute.cloud.sample(rng);
        let e2e_ms = edge_pipeline_latency(edge_ms, tx_ms.masked, cloud_ms);

        Ok(RunResult {
            dataset: image.dataset.clone(),
            h: image.h,
            w: image.w,
            snapshot: link,
            k,
            latent_channels: codec.latent_channels as usize,
            payload_bits: payload,
            tx_ms,
            edge_ms,
            cloud_ms,
            e2e_ms,
            utilization_pct,
            throughput_fps,
            energy_retention: retention,
            sla_tier: classify_tier(e2e_ms)?,
        })
    }

    fn run_point(&self, index: usize, point: SweepPoint) -> Result<RunResult> {
        let image = &self.spec.images[point.image];
        let link = self.link_for(point.link, point.repetition);
        let mut rng = rng::stream(self.spec.seed, "sweep.point", index as u64);
        self.run_once(image, link, &mut rng)
    }

    /// Runs every point on the current rayon pool. Results come back in
    /// point order and are identical for any worker count.
    pub fn run(&self) -> Result<SweepOutput> {
        let points = self.points();
        let results = points
            .par_iter()
            .enumerate()
            .map(|(i, &p)| self.run_point(i, p))
            .collect::<Result<Vec<_>>>()?;
        let summary = self.summarise(&points, &results);
        Ok(SweepOutput { results, summary })
    }

    fn summarise(&self, points: &[SweepPoint], results: &[RunResult]) -> Vec<PointSummary> {
        let reps = self.spec.repetitions;
        if reps == 0 {
            return Vec::new();
        }
        points
            .chunks(reps)
            .zip(results.chunks(reps))
            .map(|(pts, runs)| {
                let mut e2e: Vec<f64> = runs.iter().map(|r| r.e2e_ms).collect();
                e2e.sort_by(f64::total_cmp);
                let first = &runs[0];
                PointSummary {
                    dataset: first.dataset.clone(),
                    h: first.h,
                    w: first.w,
                    link_index: pts[0].link,
                    runs: runs.len(),
                    bandwidth_mbps: mean(runs.iter().map(|r| r.snapshot.bandwidth_mbps)),
                    k_mean: mean(runs.iter().map(|r| r.k as f64)),
                    tx_masked_mean_ms: mean(runs.iter().map(|r| r.tx_ms.masked)),
                    e2e_mean_ms: mean(e2e.iter().copied()),
                    e2e_p50_ms: percentile(&e2e, 50.0),
                    e2e_p95_ms: percentile(&e2e, 95.0),
                    e2e_p99_ms: percentile(&e2e, 99.0),
                    channel_reduction_pct: 100.0 * mean(runs.iter().map(RunResult::channel_reduction)),
                    source_reduction_pct: 100.0 * mean(runs.iter().map(RunResult::source_reduction)),
                }
            })
            .collect()
    }
}

/// Runs a single image under a single link with the default encoder
/// and policy.
pub fn run_once(image: &ImageSpec, link: LinkSnapshot, spec: &SweepSpec, rng: &mut dyn RngCore) -> Result<RunResult> {
    Harness::new(spec.clone())?.run_once(image, link, rng)
}

pub fn run_sweep(spec: &SweepSpec) -> Result<SweepOutput> {
    Harness::new(spec.clone())?.run()
}

/// One labeled record per run, in [`FEATURE_NAMES`] order. System-state
/// features come from `compute`; latencies and link state from the run.
pub fn make_dataset(results: &[RunResult], compute: &ComputeProfile) -> Dataset {
    let records = results
        .iter()
        .map(|r| {
            let features = vec![
                compute.cpu_util_pct,
                compute.active_cores as f64,
                compute.mem_gb,
                compute.gpu_util_pct,
                compute.model_variant.code(),
                compute.quant_mode.code(),
                r.snapshot.bandwidth_mbps,
                r.snapshot.rtt_ms,
                r.payload_bits.masked as f64,
                r.edge_ms,
                r.cloud_ms,
            ];
            FeatureRecord::new(features, r.sla_tier)
        })
        .collect();
    Dataset {
        feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
        records,
    }
}

/// Runs `f` on a pool of `jobs` workers, or on the global pool when `jobs`
/// is 0.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if jobs == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::config("jobs", e.to_string()))?;
    Ok(pool.install(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn kodak_spec() -> SweepSpec {
        SweepSpec {
            images: vec![ImageSpec::preset("kodak").unwrap()],
            bandwidth: BandwidthPlan::Grid { points: vec![1000.0] },
            fixed_rtt_ms: Some(30.0),
            ..SweepSpec::default()
        }
    }

    #[test]
    fn kodak_gigabit_run() {
        let spec = kodak_spec();
        let r = run_once(
            &spec.images[0],
            LinkSnapshot::new(1000.0, 30.0),
            &spec,
            &mut rng::stream(0, "t", 0),
        )
        .unwrap();
        assert_eq!(r.k, 192);
        assert_relative_eq!(r.tx_ms.masked, 9.437184 + 15.0, epsilon = 1e-9);
        assert_relative_eq!(r.tx_ms.source, 37.748736 + 15.0, epsilon = 1e-9);
        assert_relative_eq!(r.e2e_ms, 13.0 + r.tx_ms.masked + 13.0, epsilon = 1e-9);
        assert_eq!(r.sla_tier, SlaTier::Sla2);
        assert!(r.payload_bits.masked <= r.payload_bits.encoded);
        assert!(r.payload_bits.encoded <= r.payload_bits.source);
        assert!(r.energy_retention > 0.0 && r.energy_retention <= 1.0);
    }

    #[test]
    fn utilization_examples() {
        let link = LinkSnapshot::new(100.0, 50.0);
        assert_relative_eq!(bandwidth_utilization(5_000_000, &link).unwrap(), 100.0);
        let doubled = LinkSnapshot::new(200.0, 50.0);
        assert_relative_eq!(
            bandwidth_utilization(1_234_567, &doubled).unwrap() * 2.0,
            bandwidth_utilization(1_234_567, &link).unwrap(),
            epsilon = 1e-12
        );
        assert_relative_eq!(
            bandwidth_utilization(37_748_736, &link).unwrap(),
            754.97472,
            epsilon = 1e-9
        );
        assert!(bandwidth_utilization(1, &LinkSnapshot::new(100.0, 0.0)).is_err());
    }

    #[test]
    fn throughput_examples() {
        let link = LinkSnapshot::new(100.0, 50.0);
        assert_relative_eq!(
            effective_throughput(1_572_864, &link).unwrap(),
            63.578_287_760_416_67,
            epsilon = 1e-9
        );
        assert_relative_eq!(
            effective_throughput(37_748_736, &link).unwrap(),
            2.649_095_323_350_694,
            epsilon = 1e-12
        );
        assert_eq!(effective_throughput(100_000_000, &link).unwrap(), 1.0);
        assert!(effective_throughput(0, &link).is_err());
    }

    #[test]
    fn zero_size_sweep() {
        let spec = SweepSpec {
            repetitions: 0,
            ..kodak_spec()
        };
        let out = run_sweep(&spec).unwrap();
        assert!(out.results.is_empty());
        assert!(out.summary.is_empty());
    }

    #[test]
    fn grid_cardinality_and_order() {
        let spec = SweepSpec {
            bandwidth: BandwidthPlan::Grid {
                points: log_grid(10.0, 1000.0, 5),
            },
            ..kodak_spec()
        };
        let out = run_sweep(&spec).unwrap();
        assert_eq!(out.results.len(), 5);
        let bw: Vec<f64> = out.results.iter().map(|r| r.snapshot.bandwidth_mbps).collect();
        assert!(bw.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn percentile_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile(&v, 50.0), 50.0);
        assert_eq!(percentile(&v, 95.0), 95.0);
        assert_eq!(percentile(&v, 99.0), 99.0);
        assert_eq!(percentile(&[7.0], 99.0), 7.0);
    }

    #[test]
    fn dataset_labels_follow_tiers() {
        let spec = kodak_spec();
        let out = run_sweep(&spec).unwrap();
        let data = make_dataset(&out.results, &spec.compute);
        assert_eq!(data.len(), 1);
        assert_eq!(data.n_features(), FEATURE_NAMES.len());
        assert_eq!(data.records[0].label, classify_tier(out.results[0].e2e_ms).unwrap());
        assert!(make_dataset(&[], &spec.compute).is_empty());
    }
}

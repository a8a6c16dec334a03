//! With a CPU-only quantised encoder at the edge, no link is fast enough:
//! every run lands in the batch tier.

use netaware::harness::{log_grid, run_sweep, BandwidthPlan, ComputeProfile, ImageSpec, SweepSpec};
use netaware::slalib::SlaTier;

fn main() -> netaware::Result<()> {
    for (label, compute) in [
        ("reference", ComputeProfile::reference()),
        ("edge-cpu", ComputeProfile::edge_cpu()),
    ] {
        let spec = SweepSpec {
            images: vec![ImageSpec::preset("kodak").unwrap()],
            bandwidth: BandwidthPlan::Grid {
                points: log_grid(10.0, 10_000.0, 10),
            },
            fixed_rtt_ms: None,
            compute,
            repetitions: 3,
            seed: 1,
            ..Default::default()
        };
        let runs = run_sweep(&spec)?.results;
        let mut tiers = [0usize; 3];
        for r in &runs {
            tiers[r.sla_tier.index()] += 1;
        }
        let best = runs.iter().map(|r| r.e2e_ms).fold(f64::INFINITY, f64::min);
        println!(
            "{label:<10} runs={} SLA1={} SLA2={} SLA3={} fastest e2e {best:.1} ms",
            runs.len(),
            tiers[SlaTier::Sla1.index()],
            tiers[SlaTier::Sla2.index()],
            tiers[SlaTier::Sla3.index()]
        );
    }
    Ok(())
}

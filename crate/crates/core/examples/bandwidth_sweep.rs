//! A small sweep over a log bandwidth grid, written to a directory as
//! results.csv, summary.csv and manifest.json.
//!
//!     cargo run --example bandwidth_sweep -- /tmp/sweep

use std::path::PathBuf;

use netaware::harness::{log_grid, run_sweep, BandwidthPlan, ImageSpec, SweepSpec};

fn main() -> netaware::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("netaware-sweep"));
    let spec = SweepSpec {
        images: vec![ImageSpec::preset("kodak").unwrap()],
        bandwidth: BandwidthPlan::Grid {
            points: log_grid(10.0, 1000.0, 9),
        },
        fixed_rtt_ms: None,
        repetitions: 5,
        seed: 42,
        ..Default::default()
    };
    let out = run_sweep(&spec)?;
    println!(
        "{:>10} {:>6} {:>10} {:>10} {:>10} {:>9}",
        "B (Mbps)", "k", "e2e mean", "e2e p95", "chan red%", "src red%"
    );
    for s in &out.summary {
        println!(
            "{:>10.1} {:>6.1} {:>10.2} {:>10.2} {:>10.1} {:>9.1}",
            s.bandwidth_mbps, s.k_mean, s.e2e_mean_ms, s.e2e_p95_ms, s.channel_reduction_pct, s.source_reduction_pct
        );
    }
    for path in out.write_to(&dir, &spec)? {
        println!("wrote {}", path.display());
    }
    Ok(())
}

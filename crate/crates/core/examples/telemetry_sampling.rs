//! Draw link snapshots from the telemetry model and summarise them.

use netaware::netmodel::{TelemetryConfig, TelemetrySampler};

fn main() -> netaware::Result<()> {
    let cfg = TelemetryConfig {
        seed: 11,
        ..Default::default()
    };
    let samples: Vec<_> = TelemetrySampler::new(cfg.clone(), 0)?.take(10_000).collect();
    let mut bw: Vec<f64> = samples.iter().map(|s| s.bandwidth_mbps).collect();
    let mut rtt: Vec<f64> = samples.iter().map(|s| s.rtt_ms).collect();
    bw.sort_by(f64::total_cmp);
    rtt.sort_by(f64::total_cmp);
    let q = |v: &[f64], p: f64| v[((v.len() - 1) as f64 * p).round() as usize];
    println!(
        "bandwidth window [{}, {}] Mbps, rtt window [{}, {}] ms",
        cfg.b_low, cfg.b_high, cfg.rtt_low, cfg.rtt_high
    );
    for (name, v) in [("bandwidth Mbps", &bw), ("rtt ms", &rtt)] {
        println!(
            "{name:<15} min {:>8.2}  p10 {:>8.2}  p50 {:>8.2}  p90 {:>8.2}  max {:>8.2}",
            v[0],
            q(v, 0.1),
            q(v, 0.5),
            q(v, 0.9),
            v[v.len() - 1]
        );
    }
    for s in samples.iter().take(3) {
        println!(
            "  {:.2} Mbps, {:.2} ms, BDP {:.0} bits",
            s.bandwidth_mbps,
            s.rtt_ms,
            s.bdp_bits()
        );
    }
    Ok(())
}

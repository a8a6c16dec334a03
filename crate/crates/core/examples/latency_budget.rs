//! Where the milliseconds go: a component-level end-to-end budget for one
//! masked payload, and the compute energy of the encoder.

use netaware::harness::ImageSpec;
use netaware::latent::{payload_bits, CodecProfile, PayloadKind};
use netaware::netmodel::{e2e_latency, flops_energy, tx_latency, LatencyComponents, LinkSnapshot, RadioProfile};
use netaware::policy::{select_k, ModulatorConfig};
use netaware::slalib::classify_tier;

fn main() -> netaware::Result<()> {
    let image = ImageSpec::preset("kodak").unwrap();
    let policy = ModulatorConfig::default();
    for link in [
        LinkSnapshot::new(20.0, 30.0),
        LinkSnapshot::new(300.0, 10.0),
        LinkSnapshot::new(1000.0, 2.0),
    ] {
        let k = select_k(link.bandwidth_mbps, link.rtt_ms, &policy)?;
        let bits = payload_bits(PayloadKind::Masked(k), image.geometry(), &CodecProfile::default())?;
        let tx = tx_latency(bits, &link)?;
        let mut parts = LatencyComponents::reference(tx);
        parts.radio = RadioProfile::Urllc.nominal_ms();
        let total = e2e_latency(&parts, true);
        println!(
            "{:>6} Mbps rtt {:>4} ms: k={k:<3} tx={tx:>7.2} edge={} radio={} core={} upf={} cloud={} peering={:?} -> {total:.2} ms (SLA{})",
            link.bandwidth_mbps,
            link.rtt_ms,
            parts.edge,
            parts.radio,
            parts.core,
            parts.upf_as,
            parts.cloud,
            parts.peering,
            classify_tier(total)?
        );
    }
    println!(
        "encoder energy at 120 GFLOP, 0.6 nJ/FLOP: {:.1} J",
        flops_energy(120.0, 0.6)
    );
    Ok(())
}

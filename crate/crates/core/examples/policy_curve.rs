//! The bandwidth-to-budget curve for a few steepness values.
//!
//!     cargo run --example policy_curve -- 1.5 2 3

use netaware::harness::log_grid;
use netaware::policy::{normalized_bandwidth, select_level, ModulatorConfig};

fn main() -> netaware::Result<()> {
    let gammas: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let gammas = if gammas.is_empty() { vec![1.5, 2.0, 3.0] } else { gammas };
    let configs: Vec<ModulatorConfig> = gammas
        .iter()
        .map(|&gamma| ModulatorConfig {
            gamma,
            ..Default::default()
        })
        .collect();
    for c in &configs {
        c.validate(320)?;
    }

    print!("{:>10} {:>6}", "B (Mbps)", "eta");
    for g in &gammas {
        print!(" {:>9}", format!("k@g={g}"));
    }
    println!();
    for b in log_grid(5.0, 2000.0, 16) {
        print!("{b:>10.1} {:>6.3}", normalized_bandwidth(b, &configs[0])?);
        for c in &configs {
            print!(" {:>9}", select_level(b, c)?.k);
        }
        println!();
    }
    Ok(())
}

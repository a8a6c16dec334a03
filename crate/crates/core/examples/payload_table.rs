//! Payload sizes for the benchmark presets: raw RGB, full latent, and the
//! masked latent at every channel budget the default policy can choose.

use netaware::harness::ImageSpec;
use netaware::latent::{payload_bits, CodecProfile, PayloadKind};
use netaware::policy::ModulatorConfig;

fn main() -> netaware::Result<()> {
    let codec = CodecProfile::default();
    let levels = ModulatorConfig::default().levels;
    print!(
        "{:<10} {:>11} {:>10} {:>11}",
        "dataset", "WxH", "source Mb", "encoded Mb"
    );
    for k in &levels {
        print!(" {:>8}", format!("k={k}"));
    }
    println!();
    for (name, _, _) in ImageSpec::PRESETS {
        let image = ImageSpec::preset(name).unwrap();
        let g = image.geometry();
        let mb = |kind| payload_bits(kind, g, &codec).map(|b| b as f64 / 1e6);
        print!(
            "{:<10} {:>11} {:>10.2} {:>11.2}",
            name,
            format!("{}x{}", image.w, image.h),
            mb(PayloadKind::Source)?,
            mb(PayloadKind::Encoded)?
        );
        for &k in &levels {
            print!(" {:>8.2}", mb(PayloadKind::Masked(k))?);
        }
        println!();
    }
    Ok(())
}

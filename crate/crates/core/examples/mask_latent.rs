//! Encode a synthetic latent, keep the top-k channels, and round-trip the
//! result through the binary tensor format.

use netaware::latent::{
    apply_mask, channel_importance, decode_tensor, encode_tensor, energy_retention, topk_mask, CodecProfile, Geometry,
    LatentEncoder, SyntheticEncoder,
};
use netaware::rng;

fn main() -> netaware::Result<()> {
    let codec = CodecProfile::default();
    let latent = SyntheticEncoder.encode(Geometry::new(512, 768), &codec, &mut rng::stream(7, "example", 0))?;
    println!(
        "latent: {} tokens x {} channels",
        latent.n_tokens(),
        latent.n_channels()
    );

    let importance = channel_importance(&latent);
    for k in [32, 92, 192, 320] {
        let mask = topk_mask(&importance, k)?;
        let masked = apply_mask(&latent, &mask)?;
        let top: Vec<usize> = mask.retained().take(5).collect();
        println!(
            "k={k:>3}: active={:>3} retention={:.4} first kept channels {:?}",
            masked.active_channels(),
            energy_retention(&latent, &mask)?,
            top
        );
    }

    let mask = topk_mask(&importance, 32)?;
    let masked = apply_mask(&latent, &mask)?;
    let mut bytes = Vec::new();
    encode_tensor(&masked, &mut bytes).expect("in-memory write");
    let back = decode_tensor(&bytes)?;
    assert_eq!(back, masked);
    println!("binary round trip: {} bytes", bytes.len());
    Ok(())
}

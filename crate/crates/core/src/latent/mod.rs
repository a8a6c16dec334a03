//! Latent tensors, channel importance, top-k masking and payload accounting.

mod encoder;
mod io;

pub use encoder::{LatentEncoder, SyntheticEncoder};
pub use io::{decode_tensor, encode_tensor, read_tensor, write_tensor, TENSOR_MAGIC, TENSOR_VERSION};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Encoder output of shape `n_tokens x n_channels`, stored row-major by token.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentTensor {
    n_tokens: usize,
    n_channels: usize,
    values: Vec<f32>,
}

impl LatentTensor {
    pub fn new(n_tokens: usize, n_channels: usize, values: Vec<f32>) -> Result<Self> {
        if n_tokens == 0 || n_channels == 0 {
            return Err(Error::Format {
                what: "latent tensor",
                reason: format!("shape {n_tokens}x{n_channels} has a zero dimension"),
            });
        }
        let expected = n_tokens * n_channels;
        if values.len() != expected {
            return Err(Error::DimensionMismatch {
                expected,
                actual: values.len(),
            });
        }
        Ok(Self {
            n_tokens,
            n_channels,
            values,
        })
    }

    pub fn zeros(n_tokens: usize, n_channels: usize) -> Result<Self> {
        Self::new(n_tokens, n_channels, vec![0.0; n_tokens * n_channels])
    }

    /// Builds a tensor from token rows. All rows must have equal length.
    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self> {
        let n_channels = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * n_channels);
        for row in rows {
            let row = row.as_ref();
            if row.len() != n_channels {
                return Err(Error::DimensionMismatch {
                    expected: n_channels,
                    actual: row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), n_channels, values)
    }

    pub fn n_tokens(&self) -> usize {
        self.n_tokens
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.values.chunks_exact(self.n_channels)
    }

    pub fn get(&self, token: usize, channel: usize) -> f32 {
        self.values[token * self.n_channels + channel]
    }

    pub fn scaled(&self, factor: f32) -> Self {
        Self {
            values: self.values.iter().map(|v| v * factor).collect(),
            ..*self
        }
    }

    /// Number of channels holding at least one non-zero value.
    pub fn active_channels(&self) -> usize {
        (0..self.n_channels)
            .filter(|&c| self.rows().any(|row| row[c] != 0.0))
            .count()
    }
}

/// Binary selector over the channel axis.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ChannelMask {
    bits: Vec<bool>,
    k: usize,
}

impl ChannelMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        let k = bits.iter().filter(|&&b| b).count();
        Self { bits, k }
    }

    pub fn all(n_channels: usize) -> Self {
        Self {
            bits: vec![true; n_channels],
            k: n_channels,
        }
    }

    pub fn from_indices(n_channels: usize, retained: &[usize]) -> Result<Self> {
        let mut bits = vec![false; n_channels];
        for &c in retained {
            if c >= n_channels {
                return Err(Error::DimensionMismatch {
                    expected: n_channels,
                    actual: c + 1,
                });
            }
            bits[c] = true;
        }
        Ok(Self::from_bits(bits))
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn is_set(&self, channel: usize) -> bool {
        self.bits[channel]
    }

    /// Indices of retained channels in ascending order.
    pub fn retained(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter_map(|(c, &b)| b.then_some(c))
    }
}

/// Per-channel L1 mass: `importance[c] = sum_n |y[n][c]|`.
pub fn channel_importance(t: &LatentTensor) -> Vec<f64> {
    let mut importance = vec![0.0f64; t.n_channels];
    for row in t.rows() {
        for (acc, &v) in importance.iter_mut().zip(row) {
            *acc += f64::from(v.abs());
        }
    }
    importance
}

/// Selects the `k` channels with the largest importance.
///
/// Ties go to the lower channel index, so an all-zero tensor keeps the
/// first `k` channels.
pub fn topk_mask(importance: &[f64], k: usize) -> Result<ChannelMask> {
    if k == 0 {
        return Err(Error::ZeroBudget);
    }
    if k > importance.len() {
        return Err(Error::BudgetExceedsChannels {
            k,
            channels: importance.len(),
        });
    }
    let mut order: Vec<usize> = (0..importance.len()).collect();
    order.sort_by(|&a, &b| importance[b].total_cmp(&importance[a]).then(a.cmp(&b)));
    let mut bits = vec![false; importance.len()];
    for &c in &order[..k] {
        bits[c] = true;
    }
    Ok(ChannelMask { bits, k })
}

/// Zeroes the channels not retained by `m`. Shape is unchanged.
pub fn apply_mask(t: &LatentTensor, m: &ChannelMask) -> Result<LatentTensor> {
    if m.len() != t.n_channels {
        return Err(Error::DimensionMismatch {
            expected: t.n_channels,
            actual: m.len(),
        });
    }
    let values = t
        .rows()
        .flat_map(|row| row.iter().zip(&m.bits).map(|(&v, &keep)| if keep { v } else { 0.0 }))
        .collect();
    Ok(LatentTensor { values, ..*t })
}

/// Fraction of the tensor's L1 mass carried by retained channels.
///
/// An all-zero tensor has nothing to lose and reports 1.
pub fn energy_retention(t: &LatentTensor, m: &ChannelMask) -> Result<f64> {
    if m.len() != t.n_channels {
        return Err(Error::DimensionMismatch {
            expected: t.n_channels,
            actual: m.len(),
        });
    }
    Ok(retention_from_importance(&channel_importance(t), m))
}

/// [`energy_retention`] from precomputed channel importances.
pub fn retention_from_importance(importance: &[f64], m: &ChannelMask) -> f64 {
    let total: f64 = importance.iter().sum();
    if total == 0.0 {
        return 1.0;
    }
    let kept: f64 = m.retained().map(|c| importance[c]).sum();
    (kept / total).clamp(0.0, 1.0)
}

/// Shape constants of the codec whose latents are being transmitted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CodecProfile {
    /// Spatial reduction from pixels to tokens along each axis.
    pub patch_downsample: u32,
    pub latent_channels: u32,
    pub bits_per_value: u32,
    /// Charge one bit per latent channel for sending the mask alongside
    /// the masked tensor.
    pub mask_overhead: bool,
}

impl Default for CodecProfile {
    fn default() -> Self {
        Self {
            patch_downsample: 16,
            latent_channels: 320,
            bits_per_value: 32,
            mask_overhead: false,
        }
    }
}

impl CodecProfile {
    pub fn validate(&self) -> Result<()> {
        for (key, v) in [
            ("codec.patch_downsample", self.patch_downsample),
            ("codec.latent_channels", self.latent_channels),
            ("codec.bits_per_value", self.bits_per_value),
        ] {
            if v == 0 {
                return Err(Error::config(key, "must be at least 1"));
            }
        }
        Ok(())
    }

    /// Token count `(H/ds)(W/ds)` for an image.
    pub fn tokens(&self, geometry: Geometry) -> Result<usize> {
        let ds = self.patch_downsample;
        if ds == 0 || !geometry.h.is_multiple_of(ds) || !geometry.w.is_multiple_of(ds) {
            return Err(Error::Geometry {
                h: geometry.h,
                w: geometry.w,
                factor: ds,
            });
        }
        Ok((geometry.h / ds) as usize * (geometry.w / ds) as usize)
    }
}

/// Image height and width in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub h: u32,
    pub w: u32,
}

impl Geometry {
    pub const fn new(h: u32, w: u32) -> Self {
        Self { h, w }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PayloadKind {
    /// Raw RGB frame.
    Source,
    /// Full latent with every channel.
    Encoded,
    /// Latent restricted to `k` channels.
    Masked(usize),
}

/// Payload size in bits for one image in the given state.
///
/// Latent kinds require both image sides to be divisible by the codec's
/// downsample factor.
pub fn payload_bits(kind: PayloadKind, geometry: Geometry, profile: &CodecProfile) -> Result<u64> {
    let bits = u64::from(profile.bits_per_value);
    match kind {
        PayloadKind::Source => Ok(u64::from(geometry.h) * u64::from(geometry.w) * 3 * bits),
        PayloadKind::Encoded => {
            let tokens = profile.tokens(geometry)? as u64;
            Ok(tokens * u64::from(profile.latent_channels) * bits)
        }
        PayloadKind::Masked(k) => {
            let channels = profile.latent_channels as usize;
            if k == 0 {
                return Err(Error::ZeroBudget);
            }
            if k > channels {
                return Err(Error::BudgetExceedsChannels { k, channels });
            }
            let tokens = profile.tokens(geometry)? as u64;
            let overhead = if profile.mask_overhead {
                u64::from(profile.latent_channels)
            } else {
                0
            };
            Ok(tokens * k as u64 * bits + overhead)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(rows: &[&[f32]]) -> LatentTensor {
        LatentTensor::from_rows(rows).unwrap()
    }

    /// Brute-force top-k: enumerate every k-subset and keep the one with the
    /// largest importance sum; equal sums go to the lexicographically
    /// smallest subset.
    fn brute_topk(importance: &[f64], k: usize) -> Vec<usize> {
        let c = importance.len();
        let mut best: Option<(f64, Vec<usize>)> = None;
        for bits in 0u32..(1 << c) {
            if bits.count_ones() as usize != k {
                continue;
            }
            let subset: Vec<usize> = (0..c).filter(|i| bits & (1 << i) != 0).collect();
            let sum: f64 = subset.iter().map(|&i| importance[i]).sum();
            let better = match &best {
                None => true,
                Some((s, b)) => sum > *s || (sum == *s && subset < *b),
            };
            if better {
                best = Some((sum, subset));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn importance_by_hand() {
        assert_eq!(channel_importance(&t(&[&[1.0, -3.0], &[2.0, 0.0]])), vec![3.0, 3.0]);
        assert_eq!(channel_importance(&t(&[&[-1.0, 5.0, 2.0]])), vec![1.0, 5.0, 2.0]);
        let z = LatentTensor::zeros(4, 3).unwrap();
        assert_eq!(channel_importance(&z), vec![0.0; 3]);
    }

    #[test]
    fn topk_examples() {
        let imp = [3.0, 1.0, 2.0];
        assert_eq!(brute_topk(&imp, 2), vec![0, 2]);
        let m = topk_mask(&imp, 2).unwrap();
        assert_eq!(m.retained().collect::<Vec<_>>(), brute_topk(&imp, 2));

        assert_eq!(topk_mask(&imp, 3).unwrap(), ChannelMask::all(3));

        let m = topk_mask(&[5.0, 5.0, 1.0], 1).unwrap();
        assert_eq!(m.retained().collect::<Vec<_>>(), vec![0]);
    }

    #[test]
    fn topk_matches_brute_force_on_small_vectors() {
        let imp = [0.5, 2.0, 2.0, 0.0, 1.5, 2.0, 0.1];
        for k in 1..=imp.len() {
            let m = topk_mask(&imp, k).unwrap();
            assert_eq!(m.k(), k);
            assert_eq!(m.retained().collect::<Vec<_>>(), brute_topk(&imp, k), "k={k}");
        }
    }

    #[test]
    fn topk_rejects_bad_budgets() {
        assert!(matches!(
            topk_mask(&[1.0, 2.0], 3),
            Err(Error::BudgetExceedsChannels { k: 3, channels: 2 })
        ));
        assert!(matches!(topk_mask(&[1.0], 0), Err(Error::ZeroBudget)));
    }

    #[test]
    fn zero_tensor_keeps_first_channels() {
        let z = LatentTensor::zeros(2, 6).unwrap();
        let m = topk_mask(&channel_importance(&z), 3).unwrap();
        assert_eq!(m.retained().collect::<Vec<_>>(), vec![0, 1, 2]);
    }

    #[test]
    fn apply_mask_examples() {
        let x = t(&[&[1.0, 2.0], &[3.0, 4.0]]);
        let m = ChannelMask::from_indices(2, &[1]).unwrap();
        let y = apply_mask(&x, &m).unwrap();
        assert_eq!(y, t(&[&[0.0, 2.0], &[0.0, 4.0]]));
        assert_eq!(apply_mask(&x, &ChannelMask::all(2)).unwrap(), x);
        assert_eq!(apply_mask(&y, &m).unwrap(), y);
        assert!(matches!(
            apply_mask(&x, &ChannelMask::all(3)),
            Err(Error::DimensionMismatch { expected: 2, actual: 3 })
        ));
    }

    #[test]
    fn energy_retention_examples() {
        let x = t(&[&[3.0, -1.0]]);
        let keep0 = ChannelMask::from_indices(2, &[0]).unwrap();
        assert_eq!(energy_retention(&x, &keep0).unwrap(), 0.75);
        assert_eq!(energy_retention(&x, &ChannelMask::all(2)).unwrap(), 1.0);
        let z = LatentTensor::zeros(3, 2).unwrap();
        assert_eq!(energy_retention(&z, &keep0).unwrap(), 1.0);
    }

    #[test]
    fn kodak_payloads() {
        let p = CodecProfile::default();
        let kodak = Geometry::new(512, 768);
        assert_eq!(payload_bits(PayloadKind::Source, kodak, &p).unwrap(), 37_748_736);
        assert_eq!(payload_bits(PayloadKind::Encoded, kodak, &p).unwrap(), 15_728_640);
        assert_eq!(payload_bits(PayloadKind::Masked(32), kodak, &p).unwrap(), 1_572_864);
        assert_eq!(payload_bits(PayloadKind::Masked(192), kodak, &p).unwrap(), 9_437_184);
    }

    #[test]
    fn mask_overhead_adds_one_bit_per_channel() {
        let p = CodecProfile {
            mask_overhead: true,
            ..Default::default()
        };
        let g = Geometry::new(512, 768);
        assert_eq!(payload_bits(PayloadKind::Masked(32), g, &p).unwrap(), 1_572_864 + 320);
    }

    #[test]
    fn payload_errors() {
        let p = CodecProfile::default();
        assert!(matches!(
            payload_bits(PayloadKind::Encoded, Geometry::new(500, 768), &p),
            Err(Error::Geometry { .. })
        ));
        assert!(matches!(
            payload_bits(PayloadKind::Masked(321), Geometry::new(512, 768), &p),
            Err(Error::BudgetExceedsChannels { .. })
        ));
    }
}

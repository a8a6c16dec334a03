//! Bandwidth-driven channel budget.
//!
//! The modulator maps link throughput onto a discrete set of channel
//! budgets through a log-normalised power law:
//!
//! ```text
//! eta(B)  = (log10 B - log10 B_min) / (log10 B_max - log10 B_min)   B clamped to [B_min, B_max]
//! index   = min(floor(eta^gamma * L), L - 1)
//! k       = levels[index]
//! ```
//!
//! RTT is part of the [`BudgetPolicy`] interface but the default policy
//! ignores it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::netmodel::LinkSnapshot;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModulatorConfig {
    /// Channel budgets, strictly increasing.
    pub levels: Vec<usize>,
    /// Telemetry window in Mbps.
    pub b_min: f64,
    pub b_max: f64,
    /// Steepness; values above 1 keep budgets conservative in mid-band.
    pub gamma: f64,
}

impl Default for ModulatorConfig {
    fn default() -> Self {
        Self {
            levels: vec![32, 64, 92, 128, 160, 192],
            b_min: 10.0,
            b_max: 1000.0,
            gamma: 2.0,
        }
    }
}

impl ModulatorConfig {
    /// Checks the config against a codec with `channels` latent channels.
    pub fn validate(&self, channels: usize) -> Result<()> {
        let Some(&top) = self.levels.last() else {
            return Err(Error::config("policy.levels", "must not be empty"));
        };
        if self.levels[0] == 0 {
            return Err(Error::config("policy.levels", "budgets must be positive"));
        }
        if self.levels.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("policy.levels", "must be strictly increasing"));
        }
        if top > channels {
            return Err(Error::config(
                "policy.levels",
                format!("largest budget {top} exceeds the {channels} latent channels"),
            ));
        }
        if !(self.b_min.is_finite() && self.b_min > 0.0) {
            return Err(Error::config("policy.b_min", "must be a positive number of Mbps"));
        }
        if !(self.b_max.is_finite() && self.b_max > self.b_min) {
            return Err(Error::config("policy.b_max", "must exceed policy.b_min"));
        }
        if !(self.gamma.is_finite() && self.gamma > 1.0) {
            return Err(Error::config("policy.gamma", "must exceed 1"));
        }
        Ok(())
    }
}

/// Position of `bandwidth` (Mbps) inside the telemetry window on a log
/// scale, in `[0, 1]`.
pub fn normalized_bandwidth(bandwidth: f64, cfg: &ModulatorConfig) -> Result<f64> {
    if !(bandwidth > 0.0) {
        return Err(Error::InvalidTelemetry(format!(
            "bandwidth must be positive, got {bandwidth} Mbps"
        )));
    }
    let b = bandwidth.clamp(cfg.b_min, cfg.b_max);
    let lo = cfg.b_min.log10();
    let eta = (b.log10() - lo) / (cfg.b_max.log10() - lo);
    Ok(eta.clamp(0.0, 1.0))
}

/// A chosen budget and its position in the level table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Selection {
    pub k: usize,
    pub index: usize,
}

/// Level index and budget for a bandwidth reading.
pub fn select_level(bandwidth: f64, cfg: &ModulatorConfig) -> Result<Selection> {
    let eta = normalized_bandwidth(bandwidth, cfg)?;
    let l = cfg.levels.len();
    let raw = (eta.powf(cfg.gamma) * l as f64).floor() as usize;
    let index = raw.min(l - 1);
    Ok(Selection {
        k: cfg.levels[index],
        index,
    })
}

/// Channel budget for the link. `_rtt_ms` is accepted for interface parity
/// with joint policies and does not influence the result.
pub fn select_k(bandwidth: f64, _rtt_ms: f64, cfg: &ModulatorConfig) -> Result<usize> {
    select_level(bandwidth, cfg).map(|s| s.k)
}

/// Anything that turns a telemetry reading into a channel budget.
pub trait BudgetPolicy: Send + Sync {
    fn select(&self, link: &LinkSnapshot) -> Result<Selection>;
}

/// The deterministic bandwidth-only modulator.
#[derive(Debug, Clone, Default)]
pub struct NetAwareModulator {
    pub config: ModulatorConfig,
}

impl NetAwareModulator {
    pub fn new(config: ModulatorConfig) -> Self {
        Self { config }
    }
}

impl BudgetPolicy for NetAwareModulator {
    fn select(&self, link: &LinkSnapshot) -> Result<Selection> {
        select_level(link.bandwidth_mbps, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> ModulatorConfig {
        ModulatorConfig::default()
    }

    #[test]
    fn eta_boundaries() {
        assert_eq!(normalized_bandwidth(10.0, &cfg()).unwrap(), 0.0);
        assert_eq!(normalized_bandwidth(1000.0, &cfg()).unwrap(), 1.0);
        assert!((normalized_bandwidth(100.0, &cfg()).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(normalized_bandwidth(5.0, &cfg()).unwrap(), 0.0);
        assert_eq!(normalized_bandwidth(5000.0, &cfg()).unwrap(), 1.0);
    }

    #[test]
    fn eta_rejects_nonpositive() {
        for b in [0.0, -3.0, f64::NAN] {
            assert!(matches!(
                normalized_bandwidth(b, &cfg()),
                Err(Error::InvalidTelemetry(_))
            ));
        }
    }

    #[test]
    fn k_examples() {
        assert_eq!(select_level(10.0, &cfg()).unwrap(), Selection { k: 32, index: 0 });
        assert_eq!(select_level(1000.0, &cfg()).unwrap(), Selection { k: 192, index: 5 });
        // floor(0.5^2 * 6) = 1
        assert_eq!(select_level(100.0, &cfg()).unwrap(), Selection { k: 64, index: 1 });
        assert_eq!(select_k(100.0, 300.0, &cfg()).unwrap(), 64);
    }

    #[test]
    fn validation_names_keys() {
        let bad = |f: fn(&mut ModulatorConfig)| {
            let mut c = cfg();
            f(&mut c);
            match c.validate(320) {
                Err(Error::Config { key, .. }) => key,
                other => panic!("expected config error, got {other:?}"),
            }
        };
        assert_eq!(bad(|c| c.gamma = 0.5), "policy.gamma");
        assert_eq!(bad(|c| c.gamma = 1.0), "policy.gamma");
        assert_eq!(bad(|c| c.levels = vec![]), "policy.levels");
        assert_eq!(bad(|c| c.levels = vec![64, 32]), "policy.levels");
        assert_eq!(bad(|c| c.levels = vec![32, 400]), "policy.levels");
        assert_eq!(bad(|c| c.b_max = 5.0), "policy.b_max");
        assert_eq!(bad(|c| c.b_min = 0.0), "policy.b_min");
        cfg().validate(320).unwrap();
    }

    proptest! {
        #[test]
        fn monotone_in_bandwidth(a in 0.01f64..5000.0, b in 0.01f64..5000.0, gamma in 1.01f64..6.0) {
            let c = ModulatorConfig { gamma, ..cfg() };
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(select_k(lo, 0.0, &c).unwrap() <= select_k(hi, 0.0, &c).unwrap());
        }

        #[test]
        fn output_in_levels(b in 0.01f64..1e5) {
            let k = select_k(b, 0.0, &cfg()).unwrap();
            prop_assert!(cfg().levels.contains(&k));
            if b <= 10.0 { prop_assert_eq!(k, 32); }
            if b >= 1000.0 { prop_assert_eq!(k, 192); }
        }

        #[test]
        fn scale_invariant(b in 1.0f64..2000.0, scale in 0.01f64..100.0) {
            let base = cfg();
            let scaled = ModulatorConfig { b_min: base.b_min * scale, b_max: base.b_max * scale, ..base.clone() };
            let e0 = normalized_bandwidth(b, &base).unwrap();
            let e1 = normalized_bandwidth(b * scale, &scaled).unwrap();
            prop_assert!((e0 - e1).abs() < 1e-9);
            // away from bin edges the budget must agree exactly
            let pos = e0.powf(base.gamma) * base.levels.len() as f64;
            if (pos - pos.round()).abs() > 1e-6 {
                prop_assert_eq!(select_k(b, 0.0, &base).unwrap(), select_k(b * scale, 0.0, &scaled).unwrap());
            }
        }
    }
}

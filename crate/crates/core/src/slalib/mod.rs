//! SLA tiers and the random-forest compliance predictor.

mod dataset;
mod forest;
mod metrics;
mod tree;

pub use dataset::{read_table, split_dataset, write_dataset, Dataset, FeatureRecord, Table, FEATURE_NAMES};
pub use forest::{
    cross_validate, grid_search, predict, read_model, train_forest, write_model, FeaturesPerSplit, Forest,
    ForestConfig, GridPoint,
};
pub use metrics::{evaluate, score_predictions, ClassScore, EvaluationReport, FeatureImportance};
pub use tree::{fit_tree, Node, Tree};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Latency class of one end-to-end execution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SlaTier {
    /// Real-time, at most 30 ms.
    Sla1,
    /// Interactive, above 30 ms and at most 100 ms.
    Sla2,
    /// Off-site or batch, above 100 ms.
    Sla3,
}

impl SlaTier {
    pub const ALL: [SlaTier; 3] = [SlaTier::Sla1, SlaTier::Sla2, SlaTier::Sla3];

    /// Zero-based position, used for vote and confusion tables.
    pub fn index(self) -> usize {
        self as usize
    }

    /// The tier's label as written in datasets: 1, 2 or 3.
    pub fn number(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn from_number(n: u8) -> Option<Self> {
        n.checked_sub(1).and_then(|i| Self::from_index(i as usize))
    }
}

impl std::fmt::Display for SlaTier {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.number())
    }
}

impl Serialize for SlaTier {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_u8(self.number())
    }
}

impl<'de> Deserialize<'de> for SlaTier {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let n = u8::deserialize(d)?;
        SlaTier::from_number(n).ok_or_else(|| serde::de::Error::custom(format!("SLA tier must be 1, 2 or 3, got {n}")))
    }
}

pub const REALTIME_LIMIT_MS: f64 = 30.0;
pub const INTERACTIVE_LIMIT_MS: f64 = 100.0;

/// Maps an end-to-end latency to its tier. Upper bounds are inclusive.
pub fn classify_tier(l_e2e_ms: f64) -> Result<SlaTier> {
    if !(l_e2e_ms >= 0.0) {
        return Err(Error::Domain(format!(
            "end-to-end latency must be non-negative, got {l_e2e_ms}"
        )));
    }
    Ok(if l_e2e_ms <= REALTIME_LIMIT_MS {
        SlaTier::Sla1
    } else if l_e2e_ms <= INTERACTIVE_LIMIT_MS {
        SlaTier::Sla2
    } else {
        SlaTier::Sla3
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn tier_examples() {
        assert_eq!(classify_tier(25.0).unwrap(), SlaTier::Sla1);
        assert_eq!(classify_tier(30.0).unwrap(), SlaTier::Sla1);
        assert_eq!(classify_tier(30.0001).unwrap(), SlaTier::Sla2);
        assert_eq!(classify_tier(100.0).unwrap(), SlaTier::Sla2);
        assert_eq!(classify_tier(150.0).unwrap(), SlaTier::Sla3);
        assert_eq!(classify_tier(0.0).unwrap(), SlaTier::Sla1);
        assert!(matches!(classify_tier(-1.0), Err(Error::Domain(_))));
        assert!(classify_tier(f64::NAN).is_err());
    }

    #[test]
    fn tier_numbers() {
        for t in SlaTier::ALL {
            assert_eq!(SlaTier::from_number(t.number()), Some(t));
        }
        assert_eq!(SlaTier::from_number(0), None);
        assert_eq!(SlaTier::from_number(4), None);
        assert_eq!(serde_json::to_string(&SlaTier::Sla2).unwrap(), "2");
    }

    proptest! {
        #[test]
        fn tiers_monotone(a in 0.0f64..1e5, b in 0.0f64..1e5) {
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            prop_assert!(classify_tier(lo).unwrap() <= classify_tier(hi).unwrap());
        }
    }
}

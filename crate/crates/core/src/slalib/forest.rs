use std::path::Path;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::score_predictions;
use super::tree::{GrowParams, Grower, Tree};
use super::{Dataset, SlaTier};
use crate::atomic;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeaturesPerSplit {
    All,
    /// `ceil(sqrt(n_features))`.
    Sqrt,
    #[serde(untagged)]
    Count(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, n_features: usize) -> usize {
        let m = match self {
            FeaturesPerSplit::All => n_features,
            FeaturesPerSplit::Sqrt => (n_features as f64).sqrt().ceil() as usize,
            FeaturesPerSplit::Count(m) => m,
        };
        m.clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_split: usize,
    pub features_per_split: FeaturesPerSplit,
    /// Train each tree on a same-size resample drawn with replacement.
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            min_split: 2,
            features_per_split: FeaturesPerSplit::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::config("forest.n_trees", "must be at least 1"));
        }
        if self.min_split < 2 {
            return Err(Error::config("forest.min_split", "must be at least 2"));
        }
        if self.max_depth == Some(0) {
            return Err(Error::config(
                "forest.max_depth",
                "must be at least 1 (omit for unlimited)",
            ));
        }
        if self.features_per_split == FeaturesPerSplit::Count(0) {
            return Err(Error::config("forest.features_per_split", "must be at least 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub feature_names: Vec<String>,
    pub trees: Vec<Tree>,
    /// Total Gini decrease attributed to each feature, normalised to sum 1.
    pub feature_importance: Vec<f64>,
}

impl Forest {
    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Checks structural invariants after loading a model from disk.
    pub fn validate(&self) -> Result<()> {
        let bad = |reason: String| Error::Format { what: "model", reason };
        if self.trees.is_empty() {
            return Err(bad("forest has no trees".into()));
        }
        if self.feature_importance.len() != self.n_features() {
            return Err(bad("feature_importance length differs from feature_names".into()));
        }
        for (i, t) in self.trees.iter().enumerate() {
            if let Some(f) = t.root.max_feature() {
                if f >= self.n_features() {
                    return Err(bad(format!("tree {i} splits on feature {f} of {}", self.n_features())));
                }
            }
        }
        Ok(())
    }
}

fn normalise(raw: Vec<f64>) -> Vec<f64> {
    let total: f64 = raw.iter().sum();
    if total > 0.0 {
        raw.into_iter().map(|v| v / total).collect()
    } else {
        // no split anywhere: nothing distinguishes the features
        let n = raw.len();
        vec![1.0 / n as f64; n]
    }
}

fn train_tree(data: &Dataset, cfg: &ForestConfig, params: GrowParams, index: usize) -> (Tree, Vec<f64>) {
    let mut rng = rng::stream(cfg.seed, "forest.tree", index as u64);
    let n = data.len();
    let sample: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| rng.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut grower = Grower::new(data, params, &mut rng);
    let tree = grower.grow(&sample);
    let importance = grower.importance.iter().map(|v| v / n as f64).collect();
    (tree, importance)
}

/// Fits a random forest. Trees are trained in parallel on the current
/// rayon pool and assembled in index order, so the result does not depend
/// on the worker count.
pub fn train_forest(data: &Dataset, cfg: &ForestConfig) -> Result<Forest> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Training("dataset is empty".into()));
    }
    if data.n_features() == 0 {
        return Err(Error::Training("dataset has no feature columns".into()));
    }
    let params = GrowParams {
        max_depth: cfg.max_depth,
        min_split: cfg.min_split,
        features_per_split: cfg.features_per_split.resolve(data.n_features()),
    };
    let fitted: Vec<(Tree, Vec<f64>)> = (0..cfg.n_trees)
        .into_par_iter()
        .map(|i| train_tree(data, cfg, params, i))
        .collect();

    let mut raw = vec![0.0; data.n_features()];
    let mut trees = Vec::with_capacity(fitted.len());
    for (tree, imp) in fitted {
        for (acc, v) in raw.iter_mut().zip(imp) {
            *acc += v;
        }
        trees.push(tree);
    }
    Ok(Forest {
        feature_names: data.feature_names.clone(),
        trees,
        feature_importance: normalise(raw),
    })
}

/// Majority vote over the trees; equal vote counts go to the lower tier.
pub fn predict(forest: &Forest, x: &[f64]) -> Result<SlaTier> {
    if x.len() != forest.n_features() {
        return Err(Error::DimensionMismatch {
            expected: forest.n_features(),
            actual: x.len(),
        });
    }
    let mut votes = [0usize; 3];
    for t in &forest.trees {
        votes[t.predict(x).index()] += 1;
    }
    let mut best = 0;
    for i in 1..3 {
        if votes[i] > votes[best] {
            best = i;
        }
    }
    Ok(SlaTier::ALL[best])
}

pub fn write_model(path: impl AsRef<Path>, forest: &Forest) -> Result<()> {
    atomic::write_file(path.as_ref(), |w| {
        serde_json::to_writer_pretty(&mut *w, forest)?;
        w.write_all(b"\n")
    })
}

pub fn read_model(path: impl AsRef<Path>) -> Result<Forest> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let forest: Forest = serde_json::from_str(&text).map_err(|e| Error::Format {
        what: "model",
        reason: format!("{}: {e}", path.display()),
    })?;
    forest.validate()?;
    Ok(forest)
}

/// Mean macro-F1 over `folds` contiguous folds of a seeded permutation.
pub fn cross_validate(data: &Dataset, cfg: &ForestConfig, folds: usize) -> Result<f64> {
    if folds < 2 || folds > data.len() {
        return Err(Error::config(
            "folds",
            format!("need 2 <= folds <= {} records, got {folds}", data.len()),
        ));
    }
    let mut order: Vec<usize> = (0..data.len()).collect();
    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng::stream(cfg.seed, "forest.cv", 0));
    let mut total = 0.0;
    for f in 0..folds {
        let lo = f * data.len() / folds;
        let hi = (f + 1) * data.len() / folds;
        let test: Vec<usize> = order[lo..hi].to_vec();
        let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
        let forest = train_forest(&data.subset(&train), cfg)?;
        let test = data.subset(&test);
        let truth: Vec<SlaTier> = test.records.iter().map(|r| r.label).collect();
        let pred = test
            .records
            .iter()
            .map(|r| predict(&forest, &r.features))
            .collect::<Result<Vec<_>>>()?;
        total += score_predictions(&truth, &pred)?.macro_f1;
    }
    Ok(total / folds as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub config: ForestConfig,
    pub mean_macro_f1: f64,
}

/// Cross-validates every candidate and returns them all; the best is the
/// first with the highest score.
pub fn grid_search(
    data: &Dataset,
    candidates: &[ForestConfig],
    folds: usize,
) -> Result<(ForestConfig, Vec<GridPoint>)> {
    let mut points = Vec::with_capacity(candidates.len());
    for c in candidates {
        points.push(GridPoint {
            config: c.clone(),
            mean_macro_f1: cross_validate(data, c, folds)?,
        });
    }
    let best = points
        .iter()
        .fold(None::<&GridPoint>, |best, p| match best {
            Some(b) if b.mean_macro_f1 >= p.mean_macro_f1 => Some(b),
            _ => Some(p),
        })
        .ok_or_else(|| Error::Training("empty hyper-parameter grid".into()))?
        .config
        .clone();
    Ok((best, points))
}

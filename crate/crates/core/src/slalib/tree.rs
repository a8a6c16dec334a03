//! CART classification tree with Gini impurity.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Dataset, SlaTier};
use crate::error::{Error, Result};

/// Gains closer than this are treated as equal, so the earlier candidate
/// (lower feature, then lower threshold) wins.
const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Node {
    Leaf {
        leaf: SlaTier,
    },
    /// Samples with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    pub fn max_feature(&self) -> Option<usize> {
        match self {
            Node::Leaf { .. } => None,
            Node::Split {
                feature, left, right, ..
            } => [Some(*feature), left.max_feature(), right.max_feature()]
                .into_iter()
                .flatten()
                .max(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub root: Node,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> SlaTier {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { leaf } => return *leaf,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }
}

/// Grows one deterministic CART tree on every record, examining all
/// features at each node.
pub fn fit_tree(data: &Dataset, max_depth: Option<usize>, min_split: usize) -> Result<Tree> {
    if data.is_empty() {
        return Err(Error::Training("dataset is empty".into()));
    }
    if data.n_features() == 0 {
        return Err(Error::Training("dataset has no feature columns".into()));
    }
    let params = GrowParams {
        max_depth,
        min_split,
        features_per_split: data.n_features(),
    };
    // all features are examined, so the generator is never consulted
    let mut rng = crate::rng::stream(0, "tree.fit", 0);
    let idx: Vec<usize> = (0..data.len()).collect();
    Ok(Grower::new(data, params, &mut rng).grow(&idx))
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct GrowParams {
    pub max_depth: Option<usize>,
    pub min_split: usize,
    /// Features examined per split, already resolved to a count.
    pub features_per_split: usize,
}

type Counts = [usize; 3];

pub(crate) fn gini(counts: &Counts, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

fn majority(counts: &Counts) -> SlaTier {
    let mut best = 0;
    for i in 1..3 {
        if counts[i] > counts[best] {
            best = i;
        }
    }
    SlaTier::ALL[best]
}

fn counts_of(data: &Dataset, idx: &[usize]) -> Counts {
    let mut c = [0; 3];
    for &i in idx {
        c[data.records[i].label.index()] += 1;
    }
    c
}

/// Threshold strictly separating `lo < hi`, so `lo <= t < hi`.
pub(crate) fn midpoint(lo: f64, hi: f64) -> f64 {
    let t = lo / 2.0 + hi / 2.0;
    if t >= lo && t < hi {
        t
    } else {
        lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    /// Parent impurity minus size-weighted child impurity.
    pub gain: f64,
}

/// Best threshold on one feature over the samples in `idx`, or `None` when
/// the feature is constant there.
pub(crate) fn best_threshold(data: &Dataset, idx: &[usize], feature: usize) -> Option<SplitCandidate> {
    let n = idx.len();
    let mut pairs: Vec<(f64, usize)> = idx
        .iter()
        .map(|&i| (data.records[i].features[feature], data.records[i].label.index()))
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));

    let total = counts_of(data, idx);
    let parent = gini(&total, n);
    let mut left = [0usize; 3];
    let mut best: Option<SplitCandidate> = None;
    for i in 0..n - 1 {
        left[pairs[i].1] += 1;
        let (v, next) = (pairs[i].0, pairs[i + 1].0);
        if v >= next {
            continue;
        }
        let nl = i + 1;
        let nr = n - nl;
        let right = [total[0] - left[0], total[1] - left[1], total[2] - left[2]];
        let child = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
        let gain = parent - child;
        if best.is_none_or(|b| gain > b.gain + GAIN_EPS) {
            best = Some(SplitCandidate {
                feature,
                threshold: midpoint(v, next),
                gain,
            });
        }
    }
    best
}

pub(crate) struct Grower<'a, R> {
    data: &'a Dataset,
    params: GrowParams,
    rng: &'a mut R,
    /// Sum of `n_node * gain` per feature.
    pub importance: Vec<f64>,
}

impl<'a, R: Rng> Grower<'a, R> {
    pub fn new(data: &'a Dataset, params: GrowParams, rng: &'a mut R) -> Self {
        Self {
            data,
            params,
            rng,
            importance: vec![0.0; data.n_features()],
        }
    }

    pub fn grow(&mut self, idx: &[usize]) -> Tree {
        Tree {
            root: self.node(idx, 0),
        }
    }

    fn node(&mut self, idx: &[usize], depth: usize) -> Node {
        let counts = counts_of(self.data, idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || idx.len() < self.params.min_split.max(2) {
            return Node::Leaf {
                leaf: majority(&counts),
            };
        }
        let Some(split) = self.choose_split(idx) else {
            return Node::Leaf {
                leaf: majority(&counts),
            };
        };
        self.importance[split.feature] += idx.len() as f64 * split.gain.max(0.0);
        let (l, r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.data.records[i].features[split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.node(&l, depth + 1)),
            right: Box::new(self.node(&r, depth + 1)),
        }
    }

    /// Examines a random subset of features in ascending index order. If
    /// none of them can split the node, further features are drawn one at a
    /// time until one can or all are exhausted.
    fn choose_split(&mut self, idx: &[usize]) -> Option<SplitCandidate> {
        let n_features = self.data.n_features();
        let m = self.params.features_per_split.clamp(1, n_features);
        let mut order: Vec<usize> = (0..n_features).collect();
        if m < n_features {
            order.shuffle(self.rng);
        }
        let (first, rest) = order.split_at(m);
        let mut first = first.to_vec();
        first.sort_unstable();

        let mut best: Option<SplitCandidate> = None;
        for &f in &first {
            if let Some(c) = best_threshold(self.data, idx, f) {
                if best.is_none_or(|b| c.gain > b.gain + GAIN_EPS) {
                    best = Some(c);
                }
            }
        }
        if best.is_some() {
            return best;
        }
        rest.iter().find_map(|&f| best_threshold(self.data, idx, f))
    }
}

//! Reward models and path simulation.
//!
//! Three model classes share the same downstream machinery:
//!
//! * [`StylizedModel`]: the two-period example with `Z_0 = 0`,
//!   `Z_1 = U ~ Uniform[0, 2]` and `Z_2 = 1`;
//! * [`BermudanCallModel`]: a two-exercise call on a geometric Brownian
//!   motion, `Z_j = (S_j - kappa_j)^+` with
//!   `S_j = s0 exp(-sigma^2 j / 2 + sigma W_j)`;
//! * [`TreeModel`]: an arbitrary finite probability tree with per-node
//!   rewards, used for exact enumeration and the verification sweeps.
//!
//! Simulation is reproducible: drivers are a pure function of
//! `(seed, path, slot)` through a dedicated stream, so a bundle can always
//! be regenerated bit for bit from its stored seed.

use crate::error::{Error, Result};
use crate::rng::StreamKey;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Largest number of paths a tree may enumerate to.
pub const MAX_TREE_PATHS: u64 = 10_000_000;

// ---------------------------------------------------------------------------
// Monte Carlo models
// ---------------------------------------------------------------------------

/// Two-period uniform reward model: `Z = (0, U, 1)` with `U ~ Uniform[0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct StylizedModel;

/// Bermudan call with two exercise dates on a driftless geometric Brownian
/// motion in natural time units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BermudanCallModel {
    /// Spot at time zero.
    pub s0: f64,
    /// Variance per period (`sigma^2`).
    pub sigma2: f64,
    /// Strike at date 1.
    pub kappa1: f64,
    /// Strike at date 2.
    pub kappa2: f64,
}

impl BermudanCallModel {
    /// Validated constructor. Strikes may be zero (the degenerate case is a
    /// useful closed-form oracle) and so may the variance (deterministic
    /// stock); the spot must be positive and everything finite.
    pub fn new(s0: f64, sigma2: f64, kappa1: f64, kappa2: f64) -> Result<Self> {
        let all_finite =
            s0.is_finite() && sigma2.is_finite() && kappa1.is_finite() && kappa2.is_finite();
        if !all_finite {
            return Err(Error::InvalidParameter(String::from(
                "Bermudan call parameters must be finite",
            )));
        }
        if s0 <= 0.0 {
            return Err(Error::InvalidParameter(format!("s0 must be positive, got {s0}")));
        }
        if sigma2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "sigma2 must be nonnegative, got {sigma2}"
            )));
        }
        if kappa1 < 0.0 || kappa2 < 0.0 {
            return Err(Error::InvalidParameter(String::from(
                "strikes must be nonnegative",
            )));
        }
        Ok(Self { s0, sigma2, kappa1, kappa2 })
    }

    pub fn sigma(&self) -> f64 {
        libm::sqrt(self.sigma2)
    }

    /// Spot at date 1 given the first Brownian increment.
    pub fn s1(&self, w1: f64) -> f64 {
        self.s0 * libm::exp(-0.5 * self.sigma2 + self.sigma() * w1)
    }

    /// Spot at date 2 given both increments.
    pub fn s2(&self, w1: f64, w12: f64) -> f64 {
        self.s0 * libm::exp(-self.sigma2 + self.sigma() * (w1 + w12))
    }
}

/// A simulatable market model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MarketModel {
    Stylized(StylizedModel),
    Bermudan(BermudanCallModel),
}

impl MarketModel {
    /// Number of exercise dates after time zero; rewards run `Z_0..Z_J`.
    pub fn horizon(&self) -> usize {
        2
    }

    /// Number of stored raw drivers per path.
    pub fn driver_count(&self) -> usize {
        match self {
            MarketModel::Stylized(_) => 1,
            MarketModel::Bermudan(_) => 2,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            MarketModel::Stylized(_) => "stylized",
            MarketModel::Bermudan(_) => "bermudan",
        }
    }
}

/// A bundle of simulated paths: raw drivers and the reward rows.
///
/// Regenerating with the same model, path count and seed reproduces the
/// drivers bit for bit.
#[derive(Debug, Clone)]
pub struct PathBundle {
    pub model: MarketModel,
    pub n_paths: usize,
    pub seed: u64,
    /// Raw drivers, `driver_count` per path: `U` for the stylized model,
    /// `(W_1, W_{1,2})` for the Bermudan model.
    drivers: Vec<f64>,
    /// Rewards, `horizon + 1` per path.
    rewards: Vec<f64>,
}

impl PathBundle {
    pub fn horizon(&self) -> usize {
        self.model.horizon()
    }

    /// Raw driver `slot` of path `n`.
    pub fn driver(&self, n: usize, slot: usize) -> f64 {
        let k = self.model.driver_count();
        debug_assert!(slot < k);
        self.drivers[n * k + slot]
    }

    /// Reward `Z_j` of path `n`.
    pub fn reward(&self, n: usize, j: usize) -> f64 {
        self.rewards[n * (self.horizon() + 1) + j]
    }

    /// Reward row `Z_0..Z_J` of path `n`.
    pub fn reward_row(&self, n: usize) -> &[f64] {
        let w = self.horizon() + 1;
        &self.rewards[n * w..(n + 1) * w]
    }
}

/// Tag of the driver stream within a seed.
pub const DRIVER_TAG: &str = "driver";

/// Simulate `n_paths` paths of `model` with reproducible drivers.
pub fn simulate(model: &MarketModel, n_paths: usize, seed: u64) -> Result<PathBundle> {
    if n_paths == 0 {
        return Err(Error::InvalidArgument(String::from(
            "n_paths must be at least 1",
        )));
    }
    let stream = StreamKey::new(seed, DRIVER_TAG);
    let horizon = model.horizon();
    let mut drivers = Vec::with_capacity(n_paths * model.driver_count());
    let mut rewards = Vec::with_capacity(n_paths * (horizon + 1));
    match model {
        MarketModel::Stylized(_) => {
            for n in 0..n_paths {
                let u = 2.0 * stream.u01(n as u64, 0);
                drivers.push(u);
                rewards.extend_from_slice(&[0.0, u, 1.0]);
            }
        }
        MarketModel::Bermudan(m) => {
            for n in 0..n_paths {
                let w1 = stream.normal(n as u64, 0);
                let w12 = stream.normal(n as u64, 1);
                drivers.push(w1);
                drivers.push(w12);
                let z0 = (m.s0 - m.kappa1).max(0.0);
                let z1 = (m.s1(w1) - m.kappa1).max(0.0);
                let z2 = (m.s2(w1, w12) - m.kappa2).max(0.0);
                rewards.extend_from_slice(&[z0, z1, z2]);
            }
        }
    }
    Ok(PathBundle {
        model: *model,
        n_paths,
        seed,
        drivers,
        rewards,
    })
}

// ---------------------------------------------------------------------------
// Tree models
// ---------------------------------------------------------------------------

/// Node of a [`TreeModel`]; nodes are stored level by level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNode {
    pub reward: f64,
    /// Global index of the parent; the root has none.
    pub parent: Option<usize>,
    /// Conditional branch probability from the parent (1 for the root).
    pub prob: f64,
}

/// Specification of one node when building a tree level by level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeNodeSpec {
    pub reward: f64,
    /// Index of the parent within the previous level (ignored for the root).
    pub parent: usize,
    pub prob: f64,
}

/// A finite probability tree with rewards on every node.
///
/// Every non-terminal node has at least one child, and leaves live exactly at
/// the final date, so root-to-leaf paths all have the same length and are in
/// bijection with the leaves.
#[derive(Debug, Clone)]
pub struct TreeModel {
    nodes: Vec<TreeNode>,
    /// `levels[j]` is the range of global node indices at date `j`.
    levels: Vec<core::ops::Range<usize>>,
    children: Vec<Vec<usize>>,
}

impl TreeModel {
    /// Build and validate a tree from per-level node specs.
    ///
    /// Requires a single root, conditional child probabilities in `(0, 1]`
    /// summing to one (within `1e-12`) for every parent, finite rewards, and
    /// at most [`MAX_TREE_PATHS`] leaves.
    pub fn from_levels(levels: &[Vec<TreeNodeSpec>]) -> Result<Self> {
        if levels.len() < 2 {
            return Err(Error::InvalidTree(String::from(
                "a tree needs at least dates 0 and 1",
            )));
        }
        if levels[0].len() != 1 {
            return Err(Error::InvalidTree(format!(
                "expected exactly one root, got {}",
                levels[0].len()
            )));
        }
        let last = levels.len() - 1;
        if levels[last].len() as u64 > MAX_TREE_PATHS {
            return Err(Error::TreeTooLarge {
                paths: levels[last].len() as u64,
                bound: MAX_TREE_PATHS,
            });
        }
        let mut nodes = Vec::new();
        let mut ranges = Vec::with_capacity(levels.len());
        let mut prev_start = 0usize;
        for (j, level) in levels.iter().enumerate() {
            if level.is_empty() {
                return Err(Error::InvalidTree(format!("level {j} is empty")));
            }
            let start = nodes.len();
            for spec in level {
                if !spec.reward.is_finite() {
                    return Err(Error::InvalidTree(String::from("rewards must be finite")));
                }
                let parent = if j == 0 {
                    None
                } else {
                    let prev_len = start - prev_start;
                    if spec.parent >= prev_len {
                        return Err(Error::InvalidTree(format!(
                            "node at level {j} references parent {} of {} at level {}",
                            spec.parent,
                            prev_len,
                            j - 1
                        )));
                    }
                    Some(prev_start + spec.parent)
                };
                let prob = if j == 0 { 1.0 } else { spec.prob };
                if !(prob > 0.0 && prob <= 1.0) {
                    return Err(Error::InvalidTree(format!(
                        "branch probability {prob} outside (0, 1]"
                    )));
                }
                nodes.push(TreeNode {
                    reward: spec.reward,
                    parent,
                    prob,
                });
            }
            ranges.push(start..nodes.len());
            prev_start = start;
        }

        let mut children = vec![Vec::new(); nodes.len()];
        for (i, node) in nodes.iter().enumerate() {
            if let Some(p) = node.parent {
                children[p].push(i);
            }
        }
        // Every non-terminal node must branch, and its probabilities must
        // sum to one.
        for j in 0..ranges.len() - 1 {
            for i in ranges[j].clone() {
                if children[i].is_empty() {
                    return Err(Error::InvalidTree(format!(
                        "node {i} at date {j} has no children"
                    )));
                }
                let mut sum = crate::math::CompSum::new();
                for &c in &children[i] {
                    sum.add(nodes[c].prob);
                }
                if libm::fabs(sum.value() - 1.0) > 1e-12 {
                    return Err(Error::InvalidTree(format!(
                        "child probabilities of node {i} sum to {} instead of 1",
                        sum.value()
                    )));
                }
            }
        }
        Ok(TreeModel {
            nodes,
            levels: ranges,
            children,
        })
    }

    /// Number of dates after time zero.
    pub fn horizon(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: usize) -> &TreeNode {
        &self.nodes[i]
    }

    pub fn reward(&self, i: usize) -> f64 {
        self.nodes[i].reward
    }

    pub fn children(&self, i: usize) -> &[usize] {
        &self.children[i]
    }

    /// Global node indices at date `j`.
    pub fn level(&self, j: usize) -> core::ops::Range<usize> {
        self.levels[j].clone()
    }

    /// Date of node `i`.
    pub fn date_of(&self, i: usize) -> usize {
        self.levels.iter().position(|r| r.contains(&i)).unwrap()
    }

    /// Unconditional probability of reaching node `i`.
    pub fn node_prob(&self, i: usize) -> f64 {
        let mut p = 1.0;
        let mut cur = i;
        while let Some(parent) = self.nodes[cur].parent {
            p *= self.nodes[cur].prob;
            cur = parent;
        }
        p
    }

    /// The two-point example tree with symmetric branch weights:
    /// `Z_1` is 0.5 or 1.5 with probability 1/2 each, `Z_2 = 1`.
    ///
    /// Its objective over `alpha * M*` is flat exactly on `[-4, 6]`.
    pub fn two_point_even() -> Self {
        Self::two_point(&[(0.5, 0.5), (1.5, 0.5)])
    }

    /// The skewed two-point tree: `Z_1` is 0.5 with probability 3/4 or 2
    /// with probability 1/4, `Z_2 = 1`.
    ///
    /// Same value 1.25 as the even tree, but the flat region of the
    /// objective over `alpha * M*` is exactly `[-4, 8/3]`.
    pub fn two_point_skewed() -> Self {
        Self::two_point(&[(0.5, 0.75), (2.0, 0.25)])
    }

    fn two_point(mid: &[(f64, f64)]) -> Self {
        let level0 = vec![TreeNodeSpec { reward: 0.0, parent: 0, prob: 1.0 }];
        let level1: Vec<TreeNodeSpec> = mid
            .iter()
            .map(|&(reward, prob)| TreeNodeSpec { reward, parent: 0, prob })
            .collect();
        let level2: Vec<TreeNodeSpec> = (0..mid.len())
            .map(|parent| TreeNodeSpec { reward: 1.0, parent, prob: 1.0 })
            .collect();
        Self::from_levels(&[level0, level1, level2]).expect("builtin tree is valid")
    }
}

/// One enumerated root-to-leaf path.
#[derive(Debug, Clone)]
pub struct TreePath {
    /// Global node indices, one per date, starting at the root.
    pub nodes: Vec<usize>,
    /// Unconditional probability of the path.
    pub prob: f64,
    /// Rewards along the path.
    pub rewards: Vec<f64>,
}

/// Enumerate all root-to-leaf paths with probabilities and rewards.
///
/// The probabilities sum to one within `1e-10`; rejects trees beyond
/// [`MAX_TREE_PATHS`] leaves (already enforced at construction).
pub fn enumerate_paths(tree: &TreeModel) -> Vec<TreePath> {
    let horizon = tree.horizon();
    let leaves = tree.level(horizon);
    let mut out = Vec::with_capacity(leaves.len());
    for leaf in leaves {
        let mut nodes = vec![0usize; horizon + 1];
        let mut cur = leaf;
        let mut prob = 1.0;
        for j in (0..=horizon).rev() {
            nodes[j] = cur;
            if let Some(p) = tree.node(cur).parent {
                prob *= tree.node(cur).prob;
                cur = p;
            }
        }
        let rewards = nodes.iter().map(|&i| tree.reward(i)).collect();
        out.push(TreePath { nodes, prob, rewards });
    }
    out
}

//! Structural characterizations of weakly and surely optimal dual
//! martingales on finite trees, verified against brute force.
//!
//! A martingale `M` is weakly optimal at date `j` when the conditional
//! expectation of `max_{j<=r<=J}(Z_r - M_r + M_j)` equals `Y*_j` at every
//! date-`j` node, and surely optimal when the maximum itself equals `Y*_j`
//! on every path. Writing `M = M* - S` for the Doob martingale `M*`, both
//! classes are carved out by pathwise inequalities on `S` organized around
//! the optimal exercise dates: the module implements those conditions in
//! cumulative and in increment form, the date-zero specializations, and
//! the randomized-objective gap that singles out `S = 0`, together with a
//! seeded sweep that cross-checks every predicate against enumeration.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::dual::{exact_moments, ExactObjective};
use crate::error::{Error, Result};
use crate::families::from_node_columns;
use crate::math::CompSum;
use crate::models::{enumerate_paths, TreeModel, TreeNodeSpec, TreePath};
use crate::randomize::{RandomizerSpec, XiLaw};
use crate::rng::StreamKey;
use crate::snell::{backward_induct, SnellData};

/// Slack for the structural inequalities; inputs built from dyadic
/// rationals are exact, so this only absorbs rounding of scaled inputs.
const COND_TOL: f64 = 1e-12;
/// Tolerance of the brute-force expectation and pathwise comparisons.
const BRUTE_TOL: f64 = 1e-10;
/// A perturbation increment counts as zero below this.
const ZERO_TOL: f64 = 1e-12;

/// An adapted perturbation of the Doob martingale, stored per tree node
/// with `S = 0` at the root; increments `zeta` live on the edges.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationS {
    values: Vec<f64>,
}

impl PerturbationS {
    pub fn zero(tree: &TreeModel) -> Self {
        PerturbationS {
            values: vec![0.0; tree.n_nodes()],
        }
    }

    /// Node-indexed values; requires one finite value per node and an
    /// exact zero at the root.
    pub fn from_node_values(tree: &TreeModel, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.n_nodes() {
            return Err(Error::DimensionMismatch {
                expected: tree.n_nodes(),
                got: values.len(),
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(String::from(
                "perturbation values must be finite",
            )));
        }
        if values[0] != 0.0 {
            return Err(Error::InvalidArgument(String::from(
                "a perturbation starts at zero",
            )));
        }
        Ok(PerturbationS { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, node: usize) -> f64 {
        self.values[node]
    }

    /// Increment on the edge into `node` (zero at the root).
    pub fn zeta(&self, tree: &TreeModel, node: usize) -> f64 {
        match tree.node(node).parent {
            Some(p) => self.values[node] - self.values[p],
            None => 0.0,
        }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Whether the one-step conditional increment means vanish at every
    /// non-terminal node (within `1e-12`).
    pub fn is_tree_martingale(&self, tree: &TreeModel) -> bool {
        for j in 0..tree.horizon() {
            for v in tree.level(j) {
                let mut mean = CompSum::new();
                for &c in tree.children(v) {
                    mean.add(tree.node(c).prob * (self.values[c] - self.values[v]));
                }
                if mean.value().abs() > ZERO_TOL {
                    return false;
                }
            }
        }
        true
    }
}

fn check_node_vector(tree: &TreeModel, m: &[f64]) -> Result<()> {
    if m.len() != tree.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: tree.n_nodes(),
            got: m.len(),
        });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(String::from(
            "martingale values must be finite",
        )));
    }
    Ok(())
}

fn check_martingale(tree: &TreeModel, m: &[f64]) -> Result<()> {
    for j in 0..tree.horizon() {
        for v in tree.level(j) {
            let mut mean = CompSum::new();
            for &c in tree.children(v) {
                mean.add(tree.node(c).prob * (m[c] - m[v]));
            }
            if mean.value().abs() > BRUTE_TOL {
                return Err(Error::NonMartingale {
                    node: v,
                    mean_increment: mean.value(),
                });
            }
        }
    }
    Ok(())
}

/// Visit every path through the subtree under `node`, reporting the
/// running maximum of `Z_r - M_r + m_ref` and the conditional probability.
fn fold_subtree<F: FnMut(f64, f64)>(
    tree: &TreeModel,
    m: &[f64],
    m_ref: f64,
    node: usize,
    running: f64,
    prob: f64,
    visit: &mut F,
) {
    let running = running.max(tree.reward(node) - m[node] + m_ref);
    let kids = tree.children(node);
    if kids.is_empty() {
        visit(running, prob);
        return;
    }
    for &c in kids {
        fold_subtree(tree, m, m_ref, c, running, prob * tree.node(c).prob, visit);
    }
}

/// Brute-force weak optimality of a node-indexed martingale at date `j`:
/// the conditional expectation of the pathwise maximum from `j` on equals
/// `Y*_j` at every date-`j` node (within `1e-10`). Rejects inputs whose
/// conditional increment means exceed `1e-10`.
pub fn is_weakly_optimal_at(tree: &TreeModel, m: &[f64], j: usize) -> Result<bool> {
    check_node_vector(tree, m)?;
    check_martingale(tree, m)?;
    if j > tree.horizon() {
        return Err(Error::InvalidArgument(format!(
            "date {j} beyond horizon {}",
            tree.horizon()
        )));
    }
    let snell = backward_induct(tree);
    for v in tree.level(j) {
        let mut acc = CompSum::new();
        fold_subtree(tree, m, m[v], v, f64::NEG_INFINITY, 1.0, &mut |mx, p| {
            acc.add(p * mx);
        });
        if (acc.value() - snell.node_y(v)).abs() > BRUTE_TOL {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Brute-force sure optimality at date `j`: the pathwise maximum equals
/// `Y*_j` on every path through every date-`j` node.
pub fn is_surely_optimal_at(tree: &TreeModel, m: &[f64], j: usize) -> Result<bool> {
    check_node_vector(tree, m)?;
    check_martingale(tree, m)?;
    if j > tree.horizon() {
        return Err(Error::InvalidArgument(format!(
            "date {j} beyond horizon {}",
            tree.horizon()
        )));
    }
    let snell = backward_induct(tree);
    for v in tree.level(j) {
        let y = snell.node_y(v);
        let mut ok = true;
        fold_subtree(tree, m, m[v], v, f64::NEG_INFINITY, 1.0, &mut |mx, _| {
            if (mx - y).abs() > BRUTE_TOL {
                ok = false;
            }
        });
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Cumulative characterization of full weak optimality of `M* - S`: `S`
/// is a tree martingale and, on every path and at every date `i`, the
/// segment maximum of `Z_r - Y*_r + S_r` (over the exercise segment
/// holding `i`) stays at or below `S_i`, while the segment-opening
/// exercise date `p` satisfies `Z_p - cont_p + S_p >= S_i`.
pub fn segment_conditions_hold(tree: &TreeModel, s: &PerturbationS) -> bool {
    if s.values.len() != tree.n_nodes() || !s.is_tree_martingale(tree) {
        return false;
    }
    let snell = backward_induct(tree);
    for path in enumerate_paths(tree) {
        let mut run_max = f64::NEG_INFINITY;
        let mut seg_open: Option<usize> = None;
        for &v in &path.nodes {
            let cur = run_max.max(tree.reward(v) - snell.node_y(v) + s.value(v));
            if cur - s.value(v) > COND_TOL {
                return false;
            }
            if let Some(p) = seg_open {
                if tree.reward(p) - snell.node_cont(p) + s.value(p) - s.value(v) < -COND_TOL {
                    return false;
                }
            }
            if snell.node_exercise(v) {
                seg_open = Some(v);
                run_max = f64::NEG_INFINITY;
            } else {
                run_max = cur;
            }
        }
    }
    true
}

/// Increment form of [`segment_conditions_hold`], equivalent by
/// telescoping: inside a segment the increment `zeta` into the next date
/// is squeezed between the running segment maximum (shifted by `S_i`) and
/// the segment-opening slack, and at an exercise date it is capped by
/// `Z_i - cont_i`.
pub fn increment_conditions_hold(tree: &TreeModel, s: &PerturbationS) -> bool {
    if s.values.len() != tree.n_nodes() || !s.is_tree_martingale(tree) {
        return false;
    }
    let snell = backward_induct(tree);
    let horizon = tree.horizon();
    for path in enumerate_paths(tree) {
        let mut run_max = f64::NEG_INFINITY;
        let mut seg_open: Option<usize> = None;
        for i in 0..=horizon {
            let v = path.nodes[i];
            let cur = run_max.max(tree.reward(v) - snell.node_y(v) + s.value(v));
            if i < horizon {
                let zeta = s.value(path.nodes[i + 1]) - s.value(v);
                if snell.node_exercise(v) {
                    if zeta > tree.reward(v) - snell.node_cont(v) + COND_TOL {
                        return false;
                    }
                } else {
                    if zeta < cur - s.value(v) - COND_TOL {
                        return false;
                    }
                    if let Some(p) = seg_open {
                        let cap =
                            tree.reward(p) - snell.node_cont(p) + s.value(p) - s.value(v);
                        if zeta > cap + COND_TOL {
                            return false;
                        }
                    }
                }
            }
            if snell.node_exercise(v) {
                seg_open = Some(v);
                run_max = f64::NEG_INFINITY;
            } else {
                run_max = cur;
            }
        }
    }
    true
}

/// Date-zero characterizations for `M* - S`: the first component is weak
/// optimality at 0 (prefix maxima of `Z_r - Y*_r + S_r` capped by `S_j` up
/// to the first exercise date, and `S_j - S_{tau*} <= Y*_j - Z_j + A*_j`
/// after it), the second is sure optimality at 0 (`S` vanishes up to the
/// first exercise date and `S_j <= Y*_j - Z_j + A*_j` after it). Both
/// presume a martingale `S`.
pub fn date_zero_conditions(tree: &TreeModel, s: &PerturbationS) -> (bool, bool) {
    if s.values.len() != tree.n_nodes() {
        return (false, false);
    }
    let snell = backward_induct(tree);
    let horizon = tree.horizon();
    let mut weak0 = true;
    let mut sure0 = true;
    for path in enumerate_paths(tree) {
        let t = path
            .nodes
            .iter()
            .position(|&v| snell.node_exercise(v))
            .expect("the final date always exercises");
        let s_tau = s.value(path.nodes[t]);
        let mut prefix_max = f64::NEG_INFINITY;
        for j in 0..=horizon {
            let v = path.nodes[j];
            if j <= t {
                if prefix_max - s.value(v) > COND_TOL {
                    weak0 = false;
                }
                if s.value(v).abs() > ZERO_TOL {
                    sure0 = false;
                }
            } else {
                let slack = snell.node_y(v) - tree.reward(v) + snell.node_a(v);
                if s.value(v) - s_tau > slack + COND_TOL {
                    weak0 = false;
                }
                if s.value(v) > slack + COND_TOL {
                    sure0 = false;
                }
            }
            prefix_max = prefix_max.max(tree.reward(v) - snell.node_y(v) + s.value(v));
        }
    }
    (weak0, sure0)
}

/// Increment characterization of full sure optimality: `S` is a tree
/// martingale whose increments vanish strictly inside exercise segments
/// and obey `zeta <= Z_i - cont_i` out of exercise dates.
pub fn sure_increment_conditions_hold(tree: &TreeModel, s: &PerturbationS) -> bool {
    if s.values.len() != tree.n_nodes() || !s.is_tree_martingale(tree) {
        return false;
    }
    let snell = backward_induct(tree);
    let horizon = tree.horizon();
    for path in enumerate_paths(tree) {
        for i in 0..horizon {
            let v = path.nodes[i];
            let zeta = s.value(path.nodes[i + 1]) - s.value(v);
            if snell.node_exercise(v) {
                if zeta > tree.reward(v) - snell.node_cont(v) + COND_TOL {
                    return false;
                }
            } else if zeta.abs() > ZERO_TOL {
                return false;
            }
        }
    }
    true
}

/// Exact mean and variance of the randomized pathwise maximum for
/// `M = M* - S` under the optimal randomizer at full strength on the
/// quadrature grid of `law`.
pub fn randomized_moments(
    tree: &TreeModel,
    s: &PerturbationS,
    law: XiLaw,
) -> Result<ExactObjective> {
    if s.values.len() != tree.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: tree.n_nodes(),
            got: s.values.len(),
        });
    }
    let snell = backward_induct(tree);
    let column: Vec<f64> = (0..tree.n_nodes())
        .map(|v| snell.node_m(v) - s.value(v))
        .collect();
    let basis = from_node_columns(tree, &[column])?;
    exact_moments(
        tree,
        &basis,
        &[1.0],
        &RandomizerSpec::optimal(1.0).with_law(law),
    )
}

/// Exact randomized objective gap `E[max_j (Z_j - M~_j)] - Y*_0` for
/// `M = M* - S` under the uniform-law optimal randomizer; requires the
/// unrandomized `M` to be weakly optimal at date zero.
pub fn randomized_gap(tree: &TreeModel, s: &PerturbationS) -> Result<f64> {
    if s.values.len() != tree.n_nodes() {
        return Err(Error::DimensionMismatch {
            expected: tree.n_nodes(),
            got: s.values.len(),
        });
    }
    let snell = backward_induct(tree);
    let m: Vec<f64> = (0..tree.n_nodes())
        .map(|v| snell.node_m(v) - s.value(v))
        .collect();
    if !is_weakly_optimal_at(tree, &m, 0)? {
        return Err(Error::NotWeaklyOptimal);
    }
    let moments = randomized_moments(tree, s, XiLaw::Uniform)?;
    Ok(moments.mean - snell.y0())
}

/// Whether the law-level randomized gap of `M = M* - S` at full strength
/// is strictly positive. Writing `m_j = Y*_j - Z_j + A*_j >= 0`, the
/// randomized pathwise value is `Y*_0 + S_j - (1 - xi_j) m_j`, which both
/// laws push arbitrarily close to `Y*_0 + S_j` (mass near `xi = 1`) while
/// the date-`tau*` term is pinned at `Y*_0 + S_{tau*}` by `m_{tau*} = 0`.
/// The gap is therefore strict exactly when some date on some path
/// carries `S_j > S_{tau*}`; a fixed quadrature grid can miss the
/// boundary layer, so the dichotomy must not be read off the grid value.
fn strict_gap_expected(snell: &SnellData, paths: &[TreePath], s: &PerturbationS) -> bool {
    for path in paths {
        let t_star = path
            .nodes
            .iter()
            .position(|&v| snell.node_exercise(v))
            .expect("the final date always exercises");
        let pivot = s.value(path.nodes[t_star]);
        if path.nodes.iter().any(|&v| s.value(v) > pivot + COND_TOL) {
            return true;
        }
    }
    false
}

// ---------------------------------------------------------------------------
// Equivalence sweeps
// ---------------------------------------------------------------------------

/// How a sweep trial's perturbation was generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialKind {
    /// Drawn inside the feasible increment intervals (must pass).
    Feasible,
    /// One increment pushed past its bound (must fail).
    Violating,
    /// Unconstrained mean-zero increments (either way).
    Wild,
}

impl TrialKind {
    pub fn name(&self) -> &'static str {
        match self {
            TrialKind::Feasible => "feasible",
            TrialKind::Violating => "violating",
            TrialKind::Wild => "wild",
        }
    }
}

/// Predicate and brute-force outcomes of one sweep trial.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub tree: usize,
    pub trial: usize,
    pub kind: TrialKind,
    pub s: Vec<f64>,
    pub segment_ok: bool,
    pub increment_ok: bool,
    pub weak_all_brute: bool,
    pub weak0_cond: bool,
    pub sure0_cond: bool,
    pub weak0_brute: bool,
    pub sure0_brute: bool,
    pub sure_cond: bool,
    pub sure_all_brute: bool,
    /// Randomized gap under the sweep's law, when the base martingale
    /// is weakly optimal at date zero.
    pub gap: Option<f64>,
    pub variance: Option<f64>,
}

/// Result of [`equivalence_sweep`]: per-trial records plus collected
/// disagreements (hard failures) and findings. Whether the law-level
/// randomized gap vanishes is decided analytically (some date must carry
/// `S_j > S_{tau*}` on some path for a strict gap, since the scale
/// multiplier vanishes at `tau*` and `xi` puts mass arbitrarily close
/// to 1); a vanishing gap with a nonzero perturbation is a finding under
/// the bounded uniform law and a disagreement under the shifted
/// exponential, whose density is positive at 1. A strict gap the
/// quadrature grid is too coarse to resolve is recorded as a finding.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub xi_law: XiLaw,
    pub trials: Vec<TrialRecord>,
    pub disagreements: Vec<String>,
    pub findings: Vec<String>,
    pub n_trees: usize,
    /// Paths (across trees) with an exercise date before the horizon,
    /// which is what exercises the multi-segment bookkeeping.
    pub interior_exercise_paths: usize,
}

impl SweepReport {
    pub fn all_agree(&self) -> bool {
        self.disagreements.is_empty()
    }
}

struct Draws<'a> {
    key: &'a StreamKey,
    stream: u64,
    counter: u64,
}

impl Draws<'_> {
    fn next(&mut self) -> f64 {
        let u = self.key.u01(self.stream, self.counter);
        self.counter += 1;
        u
    }
}

/// Dyadic grid step of generated increments; together with power-of-two
/// branch probabilities it keeps every generated quantity exact in
/// floating point, so the sweeps compare predicates without rounding slop.
const ZETA_STEP: f64 = 1.0 / 64.0;

fn generate_perturbation(
    tree: &TreeModel,
    snell: &SnellData,
    kind: TrialKind,
    draws: &mut Draws<'_>,
) -> PerturbationS {
    let n = tree.n_nodes();
    let horizon = tree.horizon();
    let mut s = vec![0.0; n];
    let mut base_max = vec![f64::NEG_INFINITY; n];
    let mut seg_open: Vec<Option<usize>> = vec![None; n];

    let target = if kind == TrialKind::Violating {
        let eligible: Vec<usize> = (0..horizon)
            .flat_map(|j| tree.level(j))
            .filter(|&v| tree.children(v).len() >= 2)
            .collect();
        if eligible.is_empty() {
            None
        } else {
            let pick = (draws.next() * eligible.len() as f64) as usize;
            Some(eligible[pick.min(eligible.len() - 1)])
        }
    } else {
        None
    };

    for j in 0..horizon {
        for v in tree.level(j) {
            let cur = base_max[v].max(tree.reward(v) - snell.node_y(v) + s[v]);
            let kids = tree.children(v);
            let (lo, hi) = if snell.node_exercise(v) {
                (
                    f64::NEG_INFINITY,
                    tree.reward(v) - snell.node_cont(v),
                )
            } else {
                let hi = match seg_open[v] {
                    Some(p) => tree.reward(p) - snell.node_cont(p) + s[p] - s[v],
                    None => f64::INFINITY,
                };
                (cur - s[v], hi)
            };

            let mut zeta = vec![0.0; kids.len()];
            if kids.len() >= 2 {
                if target == Some(v) {
                    force_violation(tree, kids, lo, hi, draws, &mut zeta);
                } else {
                    match kind {
                        TrialKind::Wild => draw_wild(tree, kids, draws, &mut zeta),
                        _ => draw_feasible(tree, kids, lo, hi, draws, &mut zeta),
                    }
                }
            }

            for (idx, &w) in kids.iter().enumerate() {
                s[w] = s[v] + zeta[idx];
                if snell.node_exercise(v) {
                    seg_open[w] = Some(v);
                    base_max[w] = f64::NEG_INFINITY;
                } else {
                    seg_open[w] = seg_open[v];
                    base_max[w] = cur;
                }
            }
        }
    }
    PerturbationS { values: s }
}

/// Mean-zero increments inside `[lo, hi]` on the dyadic grid; candidates
/// are projected to exact conditional mean zero and halved toward zero
/// until the closed interval holds again (zero is always feasible).
fn draw_feasible(
    tree: &TreeModel,
    kids: &[usize],
    lo: f64,
    hi: f64,
    draws: &mut Draws<'_>,
    zeta: &mut [f64],
) {
    let lo_eff = lo.max(-1.0);
    let hi_eff = hi.min(1.0);
    let klo = libm::ceil(lo_eff / ZETA_STEP) as i64;
    let khi = libm::floor(hi_eff / ZETA_STEP) as i64;
    if klo > khi {
        return;
    }
    let span = (khi - klo + 1) as f64;
    for z in zeta.iter_mut() {
        let k = klo + (draws.next() * span) as i64;
        *z = k.min(khi) as f64 * ZETA_STEP;
    }
    project_mean_zero(tree, kids, zeta);
    for _ in 0..60 {
        if zeta.iter().all(|&z| z >= lo && z <= hi) {
            return;
        }
        for z in zeta.iter_mut() {
            *z *= 0.5;
        }
    }
    for z in zeta.iter_mut() {
        *z = 0.0;
    }
}

fn draw_wild(tree: &TreeModel, kids: &[usize], draws: &mut Draws<'_>, zeta: &mut [f64]) {
    for z in zeta.iter_mut() {
        let k = (draws.next() * 33.0) as i64 - 16;
        *z = k.min(16) as f64 * ZETA_STEP;
    }
    project_mean_zero(tree, kids, zeta);
}

fn project_mean_zero(tree: &TreeModel, kids: &[usize], zeta: &mut [f64]) {
    let mut mean = CompSum::new();
    for (idx, &w) in kids.iter().enumerate() {
        mean.add(tree.node(w).prob * zeta[idx]);
    }
    let mean = mean.value();
    for z in zeta.iter_mut() {
        *z -= mean;
    }
}

/// Push the first child's increment at least 1/4 past the active bound
/// while keeping the conditional mean exactly zero through a two-child
/// see-saw scaled by the opposite branch probabilities.
fn force_violation(
    tree: &TreeModel,
    kids: &[usize],
    lo: f64,
    hi: f64,
    draws: &mut Draws<'_>,
    zeta: &mut [f64],
) {
    let p0 = tree.node(kids[0]).prob;
    let p1 = tree.node(kids[1]).prob;
    let go_high = if hi.is_finite() && lo.is_finite() {
        draws.next() < 0.5
    } else {
        hi.is_finite()
    };
    let bound = if go_high { hi } else { -lo };
    let c = libm::ceil((bound + 0.5) / p1 / ZETA_STEP) * ZETA_STEP;
    let magnitude = p1 * c;
    zeta[0] = if go_high { magnitude } else { -magnitude };
    zeta[1] = -zeta[0] / p1 * p0;
}

/// Standard sweep trees: the two two-point examples plus seeded binary
/// and mixed-branching trees with dyadic rewards at horizons 3 and 4.
pub fn sweep_trees(seed: u64) -> Vec<TreeModel> {
    let key = StreamKey::new(seed, "sweep-trees");
    let mut out = vec![TreeModel::two_point_even(), TreeModel::two_point_skewed()];
    let shapes: [(usize, bool); 4] = [(3, false), (3, true), (4, false), (4, true)];
    for (t, &(horizon, mixed)) in shapes.iter().enumerate() {
        out.push(random_tree(&key, t as u64, horizon, mixed));
    }
    out
}

/// Power-of-two branch palettes keep node probabilities dyadic.
const PALETTES: [&[f64]; 4] = [
    &[0.5, 0.5],
    &[0.5, 0.25, 0.25],
    &[0.25, 0.25, 0.5],
    &[0.125, 0.125, 0.25, 0.5],
];

fn random_tree(key: &StreamKey, stream: u64, horizon: usize, mixed: bool) -> TreeModel {
    let mut draws = Draws {
        key,
        stream: 0x7000 + stream,
        counter: 0,
    };
    let mut levels: Vec<Vec<TreeNodeSpec>> = vec![vec![TreeNodeSpec {
        reward: 0.0,
        parent: 0,
        prob: 1.0,
    }]];
    for _ in 1..=horizon {
        let parents = levels.last().unwrap().len();
        let mut level = Vec::new();
        for parent in 0..parents {
            let palette: &[f64] = if mixed {
                PALETTES[(draws.next() * 4.0) as usize % 4]
            } else {
                PALETTES[0]
            };
            for &prob in palette {
                let reward = (draws.next() * 64.0) as i64 as f64 / 16.0;
                level.push(TreeNodeSpec {
                    reward,
                    parent,
                    prob,
                });
            }
        }
        levels.push(level);
    }
    TreeModel::from_levels(&levels).expect("generated tree is valid")
}

/// Run the full predicate-versus-brute-force sweep: `trials_per_tree`
/// perturbations (feasible, violating and wild in a fixed rotation) on
/// each standard tree, recording every disagreement between the
/// structural conditions and enumeration, the stopping-rule identity at
/// weakly optimal inputs, and the randomized gap/variance dichotomy
/// under the uniform law.
pub fn equivalence_sweep(seed: u64, trials_per_tree: usize) -> Result<SweepReport> {
    equivalence_sweep_with_law(seed, trials_per_tree, XiLaw::Uniform)
}

/// [`equivalence_sweep`] with an explicit randomization law for the gap
/// checks.
pub fn equivalence_sweep_with_law(
    seed: u64,
    trials_per_tree: usize,
    xi_law: XiLaw,
) -> Result<SweepReport> {
    sweep_on_trees(seed, &sweep_trees(seed), trials_per_tree, xi_law)
}

/// Sweep over caller-supplied trees instead of the standard palette.
pub fn sweep_on_trees(
    seed: u64,
    trees: &[TreeModel],
    trials_per_tree: usize,
    xi_law: XiLaw,
) -> Result<SweepReport> {
    let key = StreamKey::new(seed, "sweep");
    let mut report = SweepReport {
        xi_law,
        trials: Vec::new(),
        disagreements: Vec::new(),
        findings: Vec::new(),
        n_trees: trees.len(),
        interior_exercise_paths: 0,
    };

    for (t, tree) in trees.iter().enumerate() {
        let snell = backward_induct(tree);
        let paths = enumerate_paths(tree);
        let horizon = tree.horizon();
        let branching = (0..horizon)
            .flat_map(|j| tree.level(j))
            .any(|v| tree.children(v).len() >= 2);
        for path in &paths {
            if path.nodes[..horizon]
                .iter()
                .any(|&v| snell.node_exercise(v))
            {
                report.interior_exercise_paths += 1;
            }
        }

        for q in 0..trials_per_tree {
            let mut kind = match q % 5 {
                0 | 1 => TrialKind::Feasible,
                2 | 3 => TrialKind::Wild,
                _ => TrialKind::Violating,
            };
            // A tree without branching admits only the zero martingale,
            // so there is nothing to violate.
            if !branching && kind == TrialKind::Violating {
                kind = TrialKind::Feasible;
            }
            let mut draws = Draws {
                key: &key,
                stream: ((t as u64) << 32) | q as u64,
                counter: 0,
            };
            let s = generate_perturbation(tree, &snell, kind, &mut draws);
            let mut fail = |msg: String| {
                report
                    .disagreements
                    .push(format!("tree {t} trial {q} ({}): {msg}", kind.name()));
            };

            if !s.is_tree_martingale(tree) {
                fail(String::from("generated perturbation is not a martingale"));
                continue;
            }

            let segment_ok = segment_conditions_hold(tree, &s);
            let increment_ok = increment_conditions_hold(tree, &s);
            let (weak0_cond, sure0_cond) = date_zero_conditions(tree, &s);
            let sure_cond = sure_increment_conditions_hold(tree, &s);

            let m: Vec<f64> = (0..tree.n_nodes())
                .map(|v| snell.node_m(v) - s.value(v))
                .collect();
            let mut weak_all_brute = true;
            let mut sure_all_brute = true;
            for j in 0..=horizon {
                if !is_weakly_optimal_at(tree, &m, j)? {
                    weak_all_brute = false;
                }
                if !is_surely_optimal_at(tree, &m, j)? {
                    sure_all_brute = false;
                }
            }
            let weak0_brute = is_weakly_optimal_at(tree, &m, 0)?;
            let sure0_brute = is_surely_optimal_at(tree, &m, 0)?;

            if segment_ok != weak_all_brute {
                fail(format!(
                    "segment conditions {segment_ok} vs brute-force weak optimality {weak_all_brute}"
                ));
            }
            if increment_ok != segment_ok {
                fail(format!(
                    "increment conditions {increment_ok} vs segment conditions {segment_ok}"
                ));
            }
            if weak0_cond != weak0_brute {
                fail(format!(
                    "date-zero weak conditions {weak0_cond} vs brute force {weak0_brute}"
                ));
            }
            if sure0_cond != sure0_brute {
                fail(format!(
                    "date-zero sure conditions {sure0_cond} vs brute force {sure0_brute}"
                ));
            }
            if sure_cond != sure_all_brute {
                fail(format!(
                    "sure increment conditions {sure_cond} vs brute-force sure optimality {sure_all_brute}"
                ));
            }
            if kind == TrialKind::Feasible && !segment_ok {
                fail(String::from("feasible draw failed the conditions"));
            }
            if kind == TrialKind::Violating && segment_ok {
                fail(String::from("forced violation went undetected"));
            }

            if weak0_brute {
                for path in &paths {
                    let t_star = path
                        .nodes
                        .iter()
                        .position(|&v| snell.node_exercise(v))
                        .expect("the final date always exercises");
                    let mut best = f64::NEG_INFINITY;
                    for &v in &path.nodes {
                        best = best.max(tree.reward(v) - m[v]);
                    }
                    let at_stop = tree.reward(path.nodes[t_star]) - m[path.nodes[t_star]];
                    if (best - at_stop).abs() > BRUTE_TOL {
                        fail(format!(
                            "pathwise maximum {best} not attained at the stopping date ({at_stop})"
                        ));
                        break;
                    }
                }
            }

            let mut gap = None;
            let mut variance = None;
            if weak0_brute {
                let moments = randomized_moments(tree, &s, xi_law)?;
                let g = moments.mean - snell.y0();
                gap = Some(g);
                variance = Some(moments.variance);
                if g < -1e-10 {
                    fail(format!("randomized gap {g} below zero"));
                }
                let strict = strict_gap_expected(&snell, &paths, &s);
                if s.is_zero() {
                    if g.abs() > 1e-12 {
                        fail(format!("zero perturbation produced gap {g}"));
                    }
                    if moments.variance > 1e-12 {
                        fail(format!(
                            "zero perturbation produced variance {}",
                            moments.variance
                        ));
                    }
                } else if !strict {
                    if g.abs() > 1e-12 {
                        fail(format!(
                            "grid gap {g} although no date carries S_j above S_tau*"
                        ));
                    }
                    let msg = format!(
                        "tree {t} trial {q}: nonzero perturbation with zero law-level \
                         randomized gap under the {} law",
                        xi_law.name()
                    );
                    if xi_law == XiLaw::Texp {
                        fail(msg);
                    } else {
                        report.findings.push(msg);
                    }
                } else if g <= 1e-9 {
                    report.findings.push(format!(
                        "tree {t} trial {q}: strict randomized gap below the {} grid \
                         resolution (grid gap {g})",
                        xi_law.name()
                    ));
                }
            }

            report.trials.push(TrialRecord {
                tree: t,
                trial: q,
                kind,
                s: s.values.clone(),
                segment_ok,
                increment_ok,
                weak_all_brute,
                weak0_cond,
                sure0_cond,
                weak0_brute,
                sure0_brute,
                sure_cond,
                sure_all_brute,
                gap,
                variance,
            });
        }
    }
    Ok(report)
}

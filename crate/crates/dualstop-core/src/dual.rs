//! Dual objective evaluation: pathwise maxima of `Z_j - M_j + eta_j`,
//! their Monte Carlo summaries, and exact expectations on trees.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::families::BasisMatrix;
use crate::math::{mean_and_std, CompSum};
use crate::models::{enumerate_paths, PathBundle, TreeModel};
use crate::randomize::{make_eta, xi_grid, RandomizerKind, RandomizerSpec, XI_GRID_ORDER};
use crate::snell::{backward_induct, SnellData, SnellLayout};

/// Monte Carlo summary of the dual objective on one path bundle.
#[derive(Debug, Clone)]
pub struct DualEstimate {
    /// Sample mean of the pathwise maxima.
    pub mean: f64,
    /// Sample standard deviation, unbiased `n - 1` divisor.
    pub std: f64,
    /// Standard error `std / sqrt(n)`.
    pub se: f64,
    /// One maximum per path, in path order.
    pub per_path_max: Vec<f64>,
    /// Number of paths.
    pub n: usize,
}

impl DualEstimate {
    fn from_maxima(per_path_max: Vec<f64>) -> Self {
        let n = per_path_max.len();
        let (mean, std) = mean_and_std(&per_path_max);
        let se = if n == 0 {
            0.0
        } else {
            std / libm::sqrt(n as f64)
        };
        DualEstimate {
            mean,
            std,
            se,
            per_path_max,
            n,
        }
    }
}

/// `max_j (Z_j - M_j + eta_j)` over one path.
pub fn pathwise_max(rewards: &[f64], m: &[f64], eta: &[f64]) -> f64 {
    assert!(
        rewards.len() == m.len() && m.len() == eta.len(),
        "pathwise_max inputs must share one length"
    );
    let mut best = f64::NEG_INFINITY;
    for j in 0..rewards.len() {
        let v = rewards[j] - m[j] + eta[j];
        if v > best {
            best = v;
        }
    }
    best
}

/// Evaluate the dual objective on a simulated bundle for one coefficient
/// vector. Deterministic in `(paths, alpha, spec, seed)`; `snell` is
/// required exactly when the randomizer is the optimal kind.
pub fn estimate(
    paths: &PathBundle,
    basis: &BasisMatrix,
    alpha: &[f64],
    spec: &RandomizerSpec,
    snell: Option<&SnellData>,
    seed: u64,
) -> Result<DualEstimate> {
    match basis.layout {
        SnellLayout::PerPath { n_paths } if n_paths == paths.n_paths => {}
        SnellLayout::PerPath { n_paths } => {
            return Err(Error::DimensionMismatch {
                expected: paths.n_paths,
                got: n_paths,
            })
        }
        SnellLayout::PerNode { .. } => {
            return Err(Error::InvalidArgument(
                "path-indexed basis required for Monte Carlo estimates".to_string(),
            ))
        }
    }
    if basis.horizon != paths.horizon() {
        return Err(Error::DimensionMismatch {
            expected: paths.horizon(),
            got: basis.horizon,
        });
    }
    if alpha.len() != basis.n_alpha {
        return Err(Error::DimensionMismatch {
            expected: basis.n_alpha,
            got: alpha.len(),
        });
    }
    let eta = make_eta(spec, paths, snell, seed)?;
    let width = paths.horizon() + 1;
    let mut per_path_max = Vec::with_capacity(paths.n_paths);
    for n in 0..paths.n_paths {
        let mut best = f64::NEG_INFINITY;
        for j in 0..width {
            let m = basis.combine(basis.row(n, j), alpha);
            let v = paths.reward(n, j) - m + eta[n * width + j];
            if v > best {
                best = v;
            }
        }
        per_path_max.push(best);
    }
    Ok(DualEstimate::from_maxima(per_path_max))
}

/// Exact mean and variance of the (possibly randomized) pathwise maximum
/// on a tree, with `xi` integrated over its quadrature grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactObjective {
    pub mean: f64,
    pub variance: f64,
}

enum ScalePlan {
    /// No randomization anywhere; the maximum is deterministic per path.
    Still,
    /// Optimal kind: per-node scale `theta * (Y*_v - Z_v + A*_v)`.
    PerNode(Vec<f64>),
    /// Naive kind: per-date scale `theta_j`.
    PerDate(Vec<f64>),
}

fn scale_plan(tree: &TreeModel, spec: &RandomizerSpec) -> Result<ScalePlan> {
    let width = tree.horizon() + 1;
    match &spec.kind {
        RandomizerKind::None => Ok(ScalePlan::Still),
        RandomizerKind::Optimal { theta } => {
            if !(theta.is_finite() && *theta >= 0.0) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "optimal randomizer scale must be finite and nonnegative, got {theta}"
                )));
            }
            if *theta == 0.0 {
                return Ok(ScalePlan::Still);
            }
            let snell = backward_induct(tree);
            let mut scale = Vec::with_capacity(tree.n_nodes());
            for v in 0..tree.n_nodes() {
                scale.push(theta * (snell.node_y(v) - tree.reward(v) + snell.node_a(v)));
            }
            Ok(ScalePlan::PerNode(scale))
        }
        RandomizerKind::Naive { theta } => {
            if theta.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    got: theta.len(),
                });
            }
            if theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(Error::InvalidParameter(alloc::format!(
                    "naive randomizer scales must be finite and nonnegative, got {theta:?}"
                )));
            }
            if theta.iter().all(|t| *t == 0.0) {
                return Ok(ScalePlan::Still);
            }
            Ok(ScalePlan::PerDate(theta.clone()))
        }
    }
}

/// First two moments of `max_j (c_j + s_j xi_j)` for independent grid-valued
/// `xi_j`. The distribution function of the maximum is the product of the
/// per-date ones, so one sorted sweep over all atoms gives the exact
/// expectation under the grid measure.
fn grid_max_moments(c: &[f64], s: &[f64], points: &[f64], weights: &[f64]) -> (f64, f64) {
    let width = c.len();
    let mut atoms: Vec<(f64, usize, f64)> = Vec::new();
    for j in 0..width {
        if s[j] == 0.0 {
            atoms.push((c[j], j, 1.0));
        } else {
            for (p, w) in points.iter().zip(weights) {
                atoms.push((c[j] + s[j] * p, j, *w));
            }
        }
    }
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("atom values are finite"));
    let mut cum = vec![0.0f64; width];
    let mut prev = 0.0;
    let mut e1 = CompSum::new();
    let mut e2 = CompSum::new();
    let mut i = 0;
    while i < atoms.len() {
        let v = atoms[i].0;
        while i < atoms.len() && atoms[i].0 == v {
            cum[atoms[i].1] += atoms[i].2;
            i += 1;
        }
        let mut f = 1.0;
        for &cj in cum.iter() {
            f *= cj;
        }
        let pmf = f - prev;
        if pmf > 0.0 {
            e1.add(v * pmf);
            e2.add(v * v * pmf);
        }
        prev = f;
    }
    (e1.value(), e2.value())
}

/// Exact dual objective moments on an enumerable tree.
pub fn exact_moments(
    tree: &TreeModel,
    basis: &BasisMatrix,
    alpha: &[f64],
    spec: &RandomizerSpec,
) -> Result<ExactObjective> {
    match basis.layout {
        SnellLayout::PerNode { n_nodes } if n_nodes == tree.n_nodes() => {}
        SnellLayout::PerNode { n_nodes } => {
            return Err(Error::DimensionMismatch {
                expected: tree.n_nodes(),
                got: n_nodes,
            })
        }
        SnellLayout::PerPath { .. } => {
            return Err(Error::InvalidArgument(
                "node-indexed basis required for tree objectives".to_string(),
            ))
        }
    }
    if alpha.len() != basis.n_alpha {
        return Err(Error::DimensionMismatch {
            expected: basis.n_alpha,
            got: alpha.len(),
        });
    }
    let plan = scale_plan(tree, spec)?;
    let grid = match plan {
        ScalePlan::Still => None,
        _ => Some(xi_grid(spec.xi_law, XI_GRID_ORDER)),
    };
    let width = tree.horizon() + 1;
    let mut c = vec![0.0f64; width];
    let mut s = vec![0.0f64; width];
    let mut mean_acc = CompSum::new();
    let mut m2_acc = CompSum::new();
    for path in enumerate_paths(tree) {
        for j in 0..width {
            c[j] = path.rewards[j] - basis.combine(basis.node_row(path.nodes[j]), alpha);
        }
        let (e1, e2) = match &plan {
            ScalePlan::Still => {
                let mut best = f64::NEG_INFINITY;
                for &v in c.iter() {
                    if v > best {
                        best = v;
                    }
                }
                (best, best * best)
            }
            ScalePlan::PerNode(scale) => {
                for j in 0..width {
                    s[j] = scale[path.nodes[j]];
                }
                let (points, weights) = grid.as_ref().expect("grid built for randomized plans");
                grid_max_moments(&c, &s, points, weights)
            }
            ScalePlan::PerDate(scale) => {
                let (points, weights) = grid.as_ref().expect("grid built for randomized plans");
                grid_max_moments(&c, scale, points, weights)
            }
        };
        mean_acc.add(path.prob * e1);
        m2_acc.add(path.prob * e2);
    }
    let mean = mean_acc.value();
    let variance = (m2_acc.value() - mean * mean).max(0.0);
    Ok(ExactObjective { mean, variance })
}

/// Exact `E[max_j (Z_j - M_j(alpha) + eta_j)]` on a tree as a finite
/// weighted sum.
pub fn exact_objective(
    tree: &TreeModel,
    basis: &BasisMatrix,
    alpha: &[f64],
    spec: &RandomizerSpec,
) -> Result<f64> {
    Ok(exact_moments(tree, basis, alpha, spec)?.mean)
}

/// One summary row of a variance profile over a coefficient grid.
#[derive(Debug, Clone)]
pub struct ProfileRow {
    pub alpha: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub se: f64,
    pub n: usize,
}

/// Evaluate [`estimate`] on each grid point with shared `eta` draws,
/// producing the data behind objective and deviation curves.
pub fn variance_profile(
    paths: &PathBundle,
    basis: &BasisMatrix,
    alpha_grid: &[Vec<f64>],
    spec: &RandomizerSpec,
    snell: Option<&SnellData>,
    seed: u64,
) -> Result<Vec<ProfileRow>> {
    if alpha_grid.is_empty() {
        return Err(Error::InvalidArgument(
            "variance profile needs at least one grid point".to_string(),
        ));
    }
    let mut rows = Vec::with_capacity(alpha_grid.len());
    for alpha in alpha_grid {
        let est = estimate(paths, basis, alpha, spec, snell, seed)?;
        rows.push(ProfileRow {
            alpha: alpha.clone(),
            mean: est.mean,
            std: est.std,
            se: est.se,
            n: est.n,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{build_doob_scalar_basis, build_stylized_basis, tree_doob_scalar_basis};
    use crate::models::{simulate, BermudanCallModel, MarketModel, StylizedModel, TreeModel, TreeNodeSpec};
    use crate::randomize::XiLaw;
    use crate::rng::StreamKey;
    use crate::snell::{bs_value_and_snell, stylized_snell};

    fn stylized_setup(n_paths: usize, seed: u64) -> (PathBundle, SnellData, BasisMatrix) {
        let paths = simulate(&MarketModel::Stylized(StylizedModel), n_paths, seed).unwrap();
        let snell = stylized_snell(&paths).unwrap();
        let basis = build_doob_scalar_basis(&paths, &snell).unwrap();
        (paths, snell, basis)
    }

    #[test]
    fn pathwise_max_examples() {
        for &u in &[0.0f64, 0.3, 1.0, 1.7, 2.0] {
            let z = [0.0, u, 1.0];
            let m_star = [0.0, u.max(1.0) - 1.25, u.max(1.0) - 1.25];
            let eta = [0.0; 3];
            assert_eq!(pathwise_max(&z, &m_star, &eta), 1.25);
            assert_eq!(pathwise_max(&z, &[0.0; 3], &eta), u.max(1.0));
        }
        assert_eq!(
            pathwise_max(&[0.0, 2.0, 1.0], &[0.0; 3], &[0.0, -1.0, 0.0]),
            1.0
        );
    }

    #[test]
    fn doob_coefficients_make_the_estimate_exact() {
        let (paths, _, basis) = stylized_setup(10_000, 41);
        let est = estimate(&paths, &basis, &[1.0], &RandomizerSpec::none(), None, 7).unwrap();
        for &v in &est.per_path_max {
            assert!((v - 1.25).abs() < 1e-12, "per-path max {v} drifted");
        }
        assert!((est.mean - 1.25).abs() < 1e-13);
        assert!(est.std < 1e-12);
        assert!(est.se <= est.std);
        assert_eq!(est.n, 10_000);
    }

    #[test]
    fn flat_region_within_monte_carlo_noise() {
        let (paths, _, basis) = stylized_setup(40_000, 42);
        for &a in &[-4.0, 0.0, 8.0 / 3.0] {
            let est = estimate(&paths, &basis, &[a], &RandomizerSpec::none(), None, 7).unwrap();
            assert!(
                (est.mean - 1.25).abs() <= 3.0 * est.se,
                "alpha {a}: mean {} se {}",
                est.mean,
                est.se
            );
            assert!(est.std > 0.0, "alpha {a} should be noisy");
        }
    }

    #[test]
    fn optimal_randomization_separates_the_doob_point() {
        let (paths, snell, basis) = stylized_setup(100_000, 43);
        let spec = RandomizerSpec::optimal(1.0);
        let est = estimate(&paths, &basis, &[0.0], &spec, Some(&snell), 11).unwrap();
        assert!(
            est.mean > 1.25 + 3.0 * est.se,
            "mean {} se {}",
            est.mean,
            est.se
        );
    }

    #[test]
    fn weak_duality_on_random_coefficients() {
        let (paths, snell, basis) = stylized_setup(10_000, 44);
        let key = StreamKey::new(909, "alpha");
        let specs = [
            RandomizerSpec::none(),
            RandomizerSpec::optimal(0.7),
            RandomizerSpec::naive(vec![0.16, 0.0, 0.0]),
        ];
        for i in 0..12u64 {
            let a = 12.0 * key.u01(i, 0) - 6.0;
            for spec in &specs {
                let est = estimate(&paths, &basis, &[a], spec, Some(&snell), 13).unwrap();
                assert!(
                    est.mean + 3.0 * est.se >= 1.25,
                    "weak duality broke at alpha {a}: mean {} se {}",
                    est.mean,
                    est.se
                );
            }
        }
    }

    #[test]
    fn randomized_sure_optimality_keeps_paths_at_the_value() {
        let (paths, snell, basis) = stylized_setup(20_000, 45);
        for law in [XiLaw::Uniform, XiLaw::Texp] {
            for theta in [0.5, 1.0] {
                let spec = RandomizerSpec::optimal(theta).with_law(law);
                let est = estimate(&paths, &basis, &[1.0], &spec, Some(&snell), 17).unwrap();
                for &v in &est.per_path_max {
                    assert!((v - 1.25).abs() < 1e-10, "{law:?} theta {theta}: max {v}");
                }
                assert!(est.std <= 1e-10);
            }
        }
    }

    #[test]
    fn estimate_is_deterministic_and_seed_sensitive() {
        let (paths, snell, basis) = stylized_setup(500, 46);
        let spec = RandomizerSpec::optimal(1.0);
        let a = estimate(&paths, &basis, &[0.3], &spec, Some(&snell), 5).unwrap();
        let b = estimate(&paths, &basis, &[0.3], &spec, Some(&snell), 5).unwrap();
        assert_eq!(a.mean, b.mean);
        assert_eq!(a.std, b.std);
        assert_eq!(a.per_path_max, b.per_path_max);
        let c = estimate(&paths, &basis, &[0.3], &spec, Some(&snell), 6).unwrap();
        assert_ne!(a.mean, c.mean);
    }

    #[test]
    fn estimate_rejects_bad_shapes() {
        let (paths, snell, basis) = stylized_setup(50, 47);
        let err = estimate(&paths, &basis, &[1.0, 2.0], &RandomizerSpec::none(), None, 1)
            .unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
        let err = estimate(
            &paths,
            &basis,
            &[1.0],
            &RandomizerSpec::optimal(1.0),
            None,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::MissingSnell));
        let tree = TreeModel::two_point_even();
        let tsnell = backward_induct(&tree);
        let tbasis = tree_doob_scalar_basis(&tree, &tsnell).unwrap();
        let err = estimate(&paths, &tbasis, &[1.0], &RandomizerSpec::none(), None, 1).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        let err = exact_objective(&tree, &basis, &[1.0], &RandomizerSpec::none()).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
        drop(snell);
    }

    fn tree_setup(tree: &TreeModel) -> BasisMatrix {
        let snell = backward_induct(tree);
        tree_doob_scalar_basis(tree, &snell).unwrap()
    }

    #[test]
    fn exact_tree_objectives_match_hand_enumeration() {
        let even = TreeModel::two_point_even();
        let basis = tree_setup(&even);
        let none = RandomizerSpec::none();
        assert_eq!(exact_objective(&even, &basis, &[1.0], &none).unwrap(), 1.25);
        assert_eq!(exact_objective(&even, &basis, &[7.0], &none).unwrap(), 1.375);

        let line = TreeModel::from_levels(&[
            vec![TreeNodeSpec {
                reward: 0.0,
                parent: 0,
                prob: 1.0,
            }],
            vec![TreeNodeSpec {
                reward: 2.0,
                parent: 0,
                prob: 1.0,
            }],
            vec![TreeNodeSpec {
                reward: 1.0,
                parent: 0,
                prob: 1.0,
            }],
        ])
        .unwrap();
        let lbasis = tree_setup(&line);
        assert_eq!(exact_objective(&line, &lbasis, &[0.0], &none).unwrap(), 2.0);
    }

    #[test]
    fn skewed_tree_flat_region_is_exact() {
        let tree = TreeModel::two_point_skewed();
        let basis = tree_setup(&tree);
        let none = RandomizerSpec::none();
        for &a in &[-4.0, -2.0, 0.0, 1.0, 2.0, 8.0 / 3.0] {
            let o = exact_objective(&tree, &basis, &[a], &none).unwrap();
            assert!((o - 1.25).abs() <= 1e-12, "alpha {a}: objective {o}");
        }
        let right = exact_objective(&tree, &basis, &[3.0], &none).unwrap();
        assert_eq!(right, 1.3125);
        let left = exact_objective(&tree, &basis, &[-4.5], &none).unwrap();
        assert_eq!(left, 1.34375);
    }

    #[test]
    fn randomized_grid_objective_is_exact_at_the_doob_point() {
        let tree = TreeModel::two_point_skewed();
        let basis = tree_setup(&tree);
        for law in [XiLaw::Uniform, XiLaw::Texp] {
            let spec = RandomizerSpec::optimal(1.0).with_law(law);
            let at_one = exact_moments(&tree, &basis, &[1.0], &spec).unwrap();
            assert!(
                (at_one.mean - 1.25).abs() <= 1e-10,
                "{law:?}: mean {}",
                at_one.mean
            );
            assert!(at_one.variance <= 1e-10, "{law:?}: var {}", at_one.variance);
            for &a in &[-2.0, 0.0, 0.5, 1.5, 2.0] {
                let o = exact_moments(&tree, &basis, &[a], &spec).unwrap();
                assert!(
                    o.mean > 1.25 + 1e-6,
                    "{law:?} alpha {a}: mean {} should gap",
                    o.mean
                );
                assert!(o.variance > 1e-12, "{law:?} alpha {a}: var {}", o.variance);
            }
        }
    }

    #[test]
    fn product_rule_matches_direct_grid_enumeration() {
        let tree = TreeModel::two_point_skewed();
        let snell = backward_induct(&tree);
        let basis = tree_doob_scalar_basis(&tree, &snell).unwrap();
        let spec = RandomizerSpec::optimal(0.8);
        let fast = exact_moments(&tree, &basis, &[0.4], &spec).unwrap();

        let (points, weights) = xi_grid(spec.xi_law, XI_GRID_ORDER);
        let mut mean = CompSum::new();
        let mut m2 = CompSum::new();
        for path in enumerate_paths(&tree) {
            for i0 in 0..points.len() {
                for i1 in 0..points.len() {
                    for i2 in 0..points.len() {
                        let xs = [points[i0], points[i1], points[i2]];
                        let w = path.prob * weights[i0] * weights[i1] * weights[i2];
                        let mut best = f64::NEG_INFINITY;
                        for j in 0..3 {
                            let v = path.nodes[j];
                            let mult = snell.node_y(v) - tree.reward(v) + snell.node_a(v);
                            let cand = path.rewards[j] - 0.4 * basis.node_row(v)[0]
                                + 0.8 * mult * xs[j];
                            if cand > best {
                                best = cand;
                            }
                        }
                        mean.add(w * best);
                        m2.add(w * best * best);
                    }
                }
            }
        }
        let bm = mean.value();
        let bv = m2.value() - bm * bm;
        assert!((fast.mean - bm).abs() < 1e-12, "{} vs {bm}", fast.mean);
        assert!((fast.variance - bv).abs() < 1e-12, "{} vs {bv}", fast.variance);
    }

    #[test]
    fn exact_weak_duality_on_trees() {
        let trees = [
            TreeModel::two_point_even(),
            TreeModel::two_point_skewed(),
        ];
        let key = StreamKey::new(515, "alpha");
        for (t, tree) in trees.iter().enumerate() {
            let snell = backward_induct(tree);
            let basis = tree_doob_scalar_basis(tree, &snell).unwrap();
            let y0 = snell.y0();
            for i in 0..25u64 {
                let a = 16.0 * key.u01(i, t as u64) - 8.0;
                let o = exact_objective(tree, &basis, &[a], &RandomizerSpec::none()).unwrap();
                assert!(o >= y0 - 1e-12, "tree {t} alpha {a}: {o} < {y0}");
            }
        }
    }

    #[test]
    fn midpoint_convexity_holds_pathwise() {
        let (paths, snell, basis) = stylized_setup(2_000, 48);
        let spec = RandomizerSpec::optimal(0.9);
        let lo = estimate(&paths, &basis, &[-2.0], &spec, Some(&snell), 23).unwrap();
        let hi = estimate(&paths, &basis, &[3.0], &spec, Some(&snell), 23).unwrap();
        let mid = estimate(&paths, &basis, &[0.5], &spec, Some(&snell), 23).unwrap();
        for n in 0..paths.n_paths {
            let chord = 0.5 * (lo.per_path_max[n] + hi.per_path_max[n]);
            assert!(
                mid.per_path_max[n] <= chord + 1e-12,
                "path {n}: {} > {chord}",
                mid.per_path_max[n]
            );
        }
        assert!(mid.mean <= 0.5 * (lo.mean + hi.mean) + 1e-12);
    }

    #[test]
    fn profile_rows_match_single_estimates() {
        let (paths, _, basis) = stylized_setup(5_000, 49);
        let none = RandomizerSpec::none();
        let grid = vec![vec![0.5], vec![1.0], vec![1.5]];
        let rows = variance_profile(&paths, &basis, &grid, &none, None, 3).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(rows[1].std <= 1e-12);
        assert!(rows[0].std > 0.0 && rows[2].std > 0.0);

        let single = variance_profile(&paths, &basis, &[vec![1.0]], &none, None, 3).unwrap();
        let direct = estimate(&paths, &basis, &[1.0], &none, None, 3).unwrap();
        assert_eq!(single[0].mean, direct.mean);
        assert_eq!(single[0].std, direct.std);
        assert_eq!(single[0].se, direct.se);
        assert_eq!(single[0].n, direct.n);

        let err = variance_profile(&paths, &basis, &[], &none, None, 3).unwrap_err();
        assert!(matches!(err, Error::InvalidArgument(_)));
    }

    #[test]
    fn reproducing_family_has_zero_profile_deviation() {
        let model = BermudanCallModel::new(2.0, 0.04, 2.0, 2.5).unwrap();
        let paths = simulate(&MarketModel::Bermudan(model), 2_000, 50).unwrap();
        let (_, snell) = bs_value_and_snell(&model, &paths).unwrap();
        let basis = build_stylized_basis(&paths, &snell).unwrap();
        let rows = variance_profile(
            &paths,
            &basis,
            &[vec![1.0, 1.0, 1.0, 1.0]],
            &RandomizerSpec::none(),
            None,
            3,
        )
        .unwrap();
        assert!(rows[0].std <= 1e-10, "std {}", rows[0].std);
        assert!((rows[0].mean - snell.y0()).abs() <= 1e-10);
    }
}

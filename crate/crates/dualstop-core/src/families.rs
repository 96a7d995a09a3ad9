//! Linearly parameterized martingale families `M_j(alpha) = sum_k alpha_k B_{j,k}`.
//!
//! A [`BasisMatrix`] stores the basis values `B_{j,k}` per path and date (or
//! per tree node); every member of the family starts at zero and every
//! column is itself a martingale, so the span stays inside the dual
//! feasible set. Built-in constructions:
//!
//! * the single-column span of the Doob martingale `M(alpha) = alpha M*`;
//! * the four-column family tailored to the Bermudan call whose
//!   coefficient vector `(1, 1, 1, 1)` reproduces `M*` exactly;
//! * the Hermite family: `He_k(W_1)` increments at date 1 and
//!   `He_k(W_1) He_l(W_{1,2})` increments at date 2;
//! * custom columns from per-date increment expressions over the drivers;
//! * arbitrary node-indexed columns on trees, validated for the
//!   martingale property.

use crate::error::{Error, Result};
use crate::expr::Expr;
use crate::models::{MarketModel, PathBundle, TreeModel};
use crate::snell::{SnellData, SnellLayout};
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

/// Which construction produced a basis, carrying enough to rebuild the
/// same family on a fresh bundle.
#[derive(Debug, Clone, PartialEq)]
pub enum FamilyKind {
    DoobScalar,
    Stylized,
    Hermite(HermiteSpec),
    Custom(Vec<CustomColumn>),
    /// Raw node-indexed columns on a tree; not rebuildable on paths.
    TreeColumns,
}

/// Degrees of the Hermite family: `k` powers of `W_1` at date 1 and the
/// `(k+1) * l` mixed terms at date 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HermiteSpec {
    pub k: usize,
    pub l: usize,
}

/// Basis values of a linear martingale family, row-indexed like
/// [`SnellData`]: per `(path, date)` or per tree node.
#[derive(Debug, Clone)]
pub struct BasisMatrix {
    pub kind: FamilyKind,
    pub n_alpha: usize,
    pub horizon: usize,
    pub layout: SnellLayout,
    values: Vec<f64>,
}

impl BasisMatrix {
    pub fn n_paths(&self) -> usize {
        match self.layout {
            SnellLayout::PerPath { n_paths } => n_paths,
            SnellLayout::PerNode { .. } => panic!("node-indexed basis has no paths"),
        }
    }

    /// `B_{j,k}` on path `n`.
    pub fn b(&self, n: usize, j: usize, k: usize) -> f64 {
        self.row(n, j)[k]
    }

    /// All `K` basis values at `(path, date)`.
    pub fn row(&self, n: usize, j: usize) -> &[f64] {
        debug_assert!(matches!(self.layout, SnellLayout::PerPath { .. }));
        let r = (n * (self.horizon + 1) + j) * self.n_alpha;
        &self.values[r..r + self.n_alpha]
    }

    /// All `K` basis values at a tree node.
    pub fn node_row(&self, v: usize) -> &[f64] {
        debug_assert!(matches!(self.layout, SnellLayout::PerNode { .. }));
        &self.values[v * self.n_alpha..(v + 1) * self.n_alpha]
    }

    /// `M_j(alpha)` for one row, given a full coefficient vector.
    pub fn combine(&self, row: &[f64], alpha: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in 0..self.n_alpha {
            acc += alpha[k] * row[k];
        }
        acc
    }
}

/// Probabilists' Hermite polynomial `He_k(x)`:
/// `He_0 = 1`, `He_1 = x`, `He_{k+1}(x) = x He_k(x) - k He_{k-1}(x)`.
pub fn hermite(k: usize, x: f64) -> f64 {
    if k == 0 {
        return 1.0;
    }
    let (mut p0, mut p1) = (1.0, x);
    for m in 1..k {
        let p2 = x * p1 - m as f64 * p0;
        p0 = p1;
        p1 = p2;
    }
    p1
}

fn require_per_path(paths: &PathBundle, snell: &SnellData) -> Result<()> {
    match snell.layout {
        SnellLayout::PerPath { n_paths } if n_paths == paths.n_paths => Ok(()),
        SnellLayout::PerPath { n_paths } => Err(Error::DimensionMismatch {
            expected: paths.n_paths,
            got: n_paths,
        }),
        SnellLayout::PerNode { .. } => Err(Error::InvalidArgument(String::from(
            "path bundle needs path-indexed Snell data",
        ))),
    }
}

/// The one-dimensional span of the Doob martingale, `M(alpha) = alpha M*`,
/// as a single-column basis. Works for any model with per-path Snell data.
pub fn build_doob_scalar_basis(paths: &PathBundle, snell: &SnellData) -> Result<BasisMatrix> {
    require_per_path(paths, snell)?;
    let width = paths.horizon() + 1;
    let mut values = Vec::with_capacity(paths.n_paths * width);
    for n in 0..paths.n_paths {
        for j in 0..width {
            values.push(snell.m(n, j));
        }
    }
    Ok(BasisMatrix {
        kind: FamilyKind::DoobScalar,
        n_alpha: 1,
        horizon: paths.horizon(),
        layout: SnellLayout::PerPath {
            n_paths: paths.n_paths,
        },
        values,
    })
}

/// The four-column family tailored to the Bermudan call:
///
/// * column 0: `Y*_1(W_1) - Y*_0 - W_1` from date 1 on,
/// * column 1: `W_1` from date 1 on,
/// * column 2: increment `Z_2 - C_1(W_1) - W_{1,2}` at date 2,
/// * column 3: increment `W_{1,2}` at date 2,
///
/// so `alpha = (1, 1, 1, 1)` reproduces the Doob martingale exactly. The
/// date-1 columns stay flat over date 2; only the date-2 columns accrue
/// increments there.
pub fn build_stylized_basis(paths: &PathBundle, snell: &SnellData) -> Result<BasisMatrix> {
    match paths.model {
        MarketModel::Bermudan(_) => {}
        other => {
            return Err(Error::ModelMismatch {
                expected: "bermudan",
                got: other.name(),
            })
        }
    }
    require_per_path(paths, snell)?;
    let y0 = snell.y0();
    let mut values = Vec::with_capacity(paths.n_paths * 3 * 4);
    for n in 0..paths.n_paths {
        let w1 = paths.driver(n, 0);
        let w12 = paths.driver(n, 1);
        let z2 = paths.reward(n, 2);
        let c1 = snell.cont(n, 1);
        let b1 = snell.y(n, 1) - y0 - w1;
        values.extend_from_slice(&[0.0, 0.0, 0.0, 0.0]);
        values.extend_from_slice(&[b1, w1, 0.0, 0.0]);
        values.extend_from_slice(&[b1, w1, z2 - c1 - w12, w12]);
    }
    Ok(BasisMatrix {
        kind: FamilyKind::Stylized,
        n_alpha: 4,
        horizon: 2,
        layout: SnellLayout::PerPath {
            n_paths: paths.n_paths,
        },
        values,
    })
}

/// The Hermite family on the Bermudan drivers: date-1 increments
/// `He_k(W_1)` for `k = 1..K`, date-2 increments `He_k(W_1) He_l(W_{1,2})`
/// for `k = 0..K`, `l = 1..L`; `K = L = 3` gives 15 columns.
pub fn build_hermite_basis(paths: &PathBundle, spec: HermiteSpec) -> Result<BasisMatrix> {
    if spec.k < 1 || spec.l < 1 {
        return Err(Error::InvalidParameter(format!(
            "Hermite degrees must be at least 1, got K={} L={}",
            spec.k, spec.l
        )));
    }
    match paths.model {
        MarketModel::Bermudan(_) => {}
        other => {
            return Err(Error::ModelMismatch {
                expected: "bermudan",
                got: other.name(),
            })
        }
    }
    let n_alpha = spec.k + (spec.k + 1) * spec.l;
    let mut values = Vec::with_capacity(paths.n_paths * 3 * n_alpha);
    for n in 0..paths.n_paths {
        let w1 = paths.driver(n, 0);
        let w12 = paths.driver(n, 1);
        values.extend_from_slice(&vec![0.0; n_alpha]);
        // Date 1: He_k(W_1) columns live, the mixed block is still zero.
        for k in 1..=spec.k {
            values.push(hermite(k, w1));
        }
        values.extend_from_slice(&vec![0.0; (spec.k + 1) * spec.l]);
        // Date 2: the date-1 block stays flat, the mixed block accrues.
        for k in 1..=spec.k {
            values.push(hermite(k, w1));
        }
        for k in 0..=spec.k {
            for l in 1..=spec.l {
                values.push(hermite(k, w1) * hermite(l, w12));
            }
        }
    }
    Ok(BasisMatrix {
        kind: FamilyKind::Hermite(spec),
        n_alpha,
        horizon: 2,
        layout: SnellLayout::PerPath {
            n_paths: paths.n_paths,
        },
        values,
    })
}

/// One custom column: per-date increment expressions over the drivers.
///
/// Date `j`'s increment may only reference drivers measurable by date `j`
/// (`u` for the two-period uniform model; `w1` at date 1 and `w1`, `w12`
/// at date 2 for the Bermudan model).
#[derive(Debug, Clone, PartialEq)]
pub struct CustomColumn {
    /// Increment expression per date `1..=J`.
    pub increments: Vec<String>,
}

fn driver_scope(model: &MarketModel, date: usize) -> &'static [&'static str] {
    match model {
        MarketModel::Stylized(_) => &["u"],
        MarketModel::Bermudan(_) => {
            if date <= 1 {
                &["w1"]
            } else {
                &["w1", "w12"]
            }
        }
    }
}

/// Build a basis from custom increment expressions.
pub fn build_custom_basis(paths: &PathBundle, columns: &[CustomColumn]) -> Result<BasisMatrix> {
    if columns.is_empty() {
        return Err(Error::InvalidArgument(String::from(
            "custom basis needs at least one column",
        )));
    }
    let horizon = paths.horizon();
    let mut parsed: Vec<Vec<Expr>> = Vec::with_capacity(columns.len());
    for col in columns {
        if col.increments.len() != horizon {
            return Err(Error::DimensionMismatch {
                expected: horizon,
                got: col.increments.len(),
            });
        }
        let mut exprs = Vec::with_capacity(horizon);
        for (i, src) in col.increments.iter().enumerate() {
            exprs.push(Expr::parse(src, driver_scope(&paths.model, i + 1))?);
        }
        parsed.push(exprs);
    }
    let n_alpha = columns.len();
    let width = horizon + 1;
    let mut values = vec![0.0; paths.n_paths * width * n_alpha];
    for n in 0..paths.n_paths {
        for j in 1..width {
            let scope_vals: Vec<f64> = match paths.model {
                MarketModel::Stylized(_) => vec![paths.driver(n, 0)],
                MarketModel::Bermudan(_) => {
                    if j <= 1 {
                        vec![paths.driver(n, 0)]
                    } else {
                        vec![paths.driver(n, 0), paths.driver(n, 1)]
                    }
                }
            };
            for (k, col) in parsed.iter().enumerate() {
                let inc = col[j - 1].eval(&scope_vals)?;
                let prev = values[(n * width + j - 1) * n_alpha + k];
                values[(n * width + j) * n_alpha + k] = prev + inc;
            }
        }
    }
    Ok(BasisMatrix {
        kind: FamilyKind::Custom(columns.to_vec()),
        n_alpha,
        horizon,
        layout: SnellLayout::PerPath {
            n_paths: paths.n_paths,
        },
        values,
    })
}

/// Build a node-indexed basis from explicit per-node column values,
/// validating that each column starts at zero and is a martingale on the
/// tree (conditional one-step increment means vanish).
pub fn from_node_columns(tree: &TreeModel, columns: &[Vec<f64>]) -> Result<BasisMatrix> {
    if columns.is_empty() {
        return Err(Error::InvalidArgument(String::from(
            "node basis needs at least one column",
        )));
    }
    let n = tree.n_nodes();
    for col in columns {
        if col.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: col.len(),
            });
        }
        if col[0] != 0.0 {
            return Err(Error::InvalidArgument(format!(
                "basis columns must start at 0, root value is {}",
                col[0]
            )));
        }
        for v in 0..n {
            let kids = tree.children(v);
            if kids.is_empty() {
                continue;
            }
            let mut scale: f64 = 1.0;
            let mut inc = 0.0;
            for &c in kids {
                inc += tree.node(c).prob * (col[c] - col[v]);
                scale = scale.max(libm::fabs(col[c]));
            }
            if libm::fabs(inc) > 1e-10 * scale.max(1.0) {
                return Err(Error::NonMartingale {
                    node: v,
                    mean_increment: inc,
                });
            }
        }
    }
    let n_alpha = columns.len();
    let mut values = vec![0.0; n * n_alpha];
    for (k, col) in columns.iter().enumerate() {
        for v in 0..n {
            values[v * n_alpha + k] = col[v];
        }
    }
    Ok(BasisMatrix {
        kind: FamilyKind::TreeColumns,
        n_alpha,
        horizon: tree.horizon(),
        layout: SnellLayout::PerNode { n_nodes: n },
        values,
    })
}

/// The single-column Doob span on a tree, from node-indexed Snell data.
pub fn tree_doob_scalar_basis(tree: &TreeModel, snell: &SnellData) -> Result<BasisMatrix> {
    let col: Vec<f64> = (0..tree.n_nodes()).map(|v| snell.node_m(v)).collect();
    let mut basis = from_node_columns(tree, &[col])?;
    basis.kind = FamilyKind::DoobScalar;
    Ok(basis)
}

/// Evaluate the family member `M(alpha)`: one value per basis row, in the
/// basis's own layout.
pub fn eval_family(basis: &BasisMatrix, alpha: &[f64]) -> Result<Vec<f64>> {
    if alpha.len() != basis.n_alpha {
        return Err(Error::DimensionMismatch {
            expected: basis.n_alpha,
            got: alpha.len(),
        });
    }
    let n_rows = basis.values.len() / basis.n_alpha;
    let mut out = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let row = &basis.values[r * basis.n_alpha..(r + 1) * basis.n_alpha];
        out.push(basis.combine(row, alpha));
    }
    Ok(out)
}

/// Build the same family on a fresh bundle, recomputing Snell data when
/// the construction needs it. Used for test-sample evaluation.
pub fn rebuild_basis(kind: &FamilyKind, paths: &PathBundle) -> Result<BasisMatrix> {
    match kind {
        FamilyKind::DoobScalar => {
            let snell = crate::snell::snell_for(paths)?;
            build_doob_scalar_basis(paths, &snell)
        }
        FamilyKind::Stylized => {
            let snell = crate::snell::snell_for(paths)?;
            build_stylized_basis(paths, &snell)
        }
        FamilyKind::Hermite(spec) => build_hermite_basis(paths, *spec),
        FamilyKind::Custom(columns) => build_custom_basis(paths, columns),
        FamilyKind::TreeColumns => Err(Error::InvalidArgument(
            "node-indexed columns cannot be rebuilt on simulated paths".into(),
        )),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{simulate, BermudanCallModel, StylizedModel};
    use crate::quad::normal_expectation;
    use crate::snell::{backward_induct, bs_value_and_snell, stylized_snell};

    fn pa1_bundle(n: usize) -> (BermudanCallModel, PathBundle, SnellData) {
        let m = BermudanCallModel::new(2.0, 0.04, 2.0, 2.5).unwrap();
        let b = simulate(&MarketModel::Bermudan(m), n, 99).unwrap();
        let (_, s) = bs_value_and_snell(&m, &b).unwrap();
        (m, b, s)
    }

    #[test]
    fn hermite_values() {
        assert_eq!(hermite(0, 123.0), 1.0);
        assert_eq!(hermite(1, -2.5), -2.5);
        assert_eq!(hermite(2, 2.0), 3.0);
        assert_eq!(hermite(3, 1.0), -2.0);
        assert_eq!(hermite(4, 0.0), 3.0);
        // Gaussian orthogonality: E[He_2 He_3] = 0, E[He_3^2] = 3! = 6.
        let cross = normal_expectation(40, |z| hermite(2, z) * hermite(3, z));
        assert!(cross.abs() < 1e-12);
        let norm3 = normal_expectation(40, |z| hermite(3, z) * hermite(3, z));
        assert!((norm3 - 6.0).abs() < 1e-11);
    }

    #[test]
    fn stylized_basis_reproduces_doob() {
        let (_, b, s) = pa1_bundle(3000);
        let basis = build_stylized_basis(&b, &s).unwrap();
        assert_eq!(basis.n_alpha, 4);
        let m = eval_family(&basis, &[1.0, 1.0, 1.0, 1.0]).unwrap();
        for n in 0..b.n_paths {
            for j in 0..=2 {
                assert!((m[n * 3 + j] - s.m(n, j)).abs() < 1e-12, "path {n} date {j}");
                assert_eq!(basis.b(n, 0, 0), 0.0);
            }
        }
        let zero = eval_family(&basis, &[0.0; 4]).unwrap();
        assert!(zero.iter().all(|&x| x == 0.0));
        // Dropping the date-2 columns freezes the member after date 1.
        let m12 = eval_family(&basis, &[1.0, 1.0, 0.0, 0.0]).unwrap();
        for n in 0..b.n_paths {
            assert_eq!(m12[n * 3 + 2], m12[n * 3 + 1]);
            assert!((m12[n * 3 + 1] - s.m(n, 1)).abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_basis_shape_and_columns() {
        let (_, b, _) = pa1_bundle(500);
        let basis = build_hermite_basis(&b, HermiteSpec { k: 3, l: 3 }).unwrap();
        assert_eq!(basis.n_alpha, 15);
        let small = build_hermite_basis(&b, HermiteSpec { k: 1, l: 1 }).unwrap();
        assert_eq!(small.n_alpha, 3);
        for n in 0..b.n_paths {
            let w1 = b.driver(n, 0);
            let w12 = b.driver(n, 1);
            assert_eq!(small.b(n, 1, 0), w1);
            assert_eq!(small.b(n, 1, 1), 0.0);
            assert_eq!(small.b(n, 2, 0), w1);
            assert_eq!(small.b(n, 2, 1), w12);
            assert_eq!(small.b(n, 2, 2), w1 * w12);
        }
        assert!(build_hermite_basis(&b, HermiteSpec { k: 0, l: 3 }).is_err());
        let sty = simulate(&MarketModel::Stylized(StylizedModel), 5, 1).unwrap();
        assert!(build_hermite_basis(&sty, HermiteSpec { k: 1, l: 1 }).is_err());
    }

    #[test]
    fn basis_columns_are_sample_martingales() {
        let (_, b, s) = pa1_bundle(100_000);
        let n = b.n_paths as f64;
        for basis in [
            build_stylized_basis(&b, &s).unwrap(),
            build_hermite_basis(&b, HermiteSpec { k: 3, l: 3 }).unwrap(),
        ] {
            for k in 0..basis.n_alpha {
                for j in 1..=2 {
                    let incs: Vec<f64> = (0..b.n_paths)
                        .map(|p| basis.b(p, j, k) - basis.b(p, j - 1, k))
                        .collect();
                    let (mean, sd) = crate::math::mean_and_std(&incs);
                    let se = sd / n.sqrt();
                    assert!(
                        mean.abs() <= 4.0 * se.max(1e-12),
                        "column {k} date {j}: mean {mean}, se {se}"
                    );
                }
            }
        }
    }

    #[test]
    fn eval_family_is_linear() {
        let (_, b, s) = pa1_bundle(200);
        let basis = build_stylized_basis(&b, &s).unwrap();
        let a = [0.3, -1.2, 0.7, 2.0];
        let bb = [1.1, 0.4, -0.6, 0.9];
        let sum: Vec<f64> = a.iter().zip(&bb).map(|(x, y)| x + y).collect();
        let ma = eval_family(&basis, &a).unwrap();
        let mb = eval_family(&basis, &bb).unwrap();
        let ms = eval_family(&basis, &sum).unwrap();
        for i in 0..ma.len() {
            assert!((ma[i] + mb[i] - ms[i]).abs() < 1e-12);
        }
        assert!(matches!(
            eval_family(&basis, &[1.0, 2.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn doob_scalar_span() {
        let b = simulate(&MarketModel::Stylized(StylizedModel), 400, 7).unwrap();
        let s = stylized_snell(&b).unwrap();
        let basis = build_doob_scalar_basis(&b, &s).unwrap();
        assert_eq!(basis.n_alpha, 1);
        let m1 = eval_family(&basis, &[1.0]).unwrap();
        for n in 0..b.n_paths {
            for j in 0..=2 {
                assert_eq!(m1[n * 3 + j], s.m(n, j));
            }
        }
    }

    #[test]
    fn node_columns_validate_martingales() {
        let tree = TreeModel::two_point_even();
        let s = backward_induct(&tree);
        let basis = tree_doob_scalar_basis(&tree, &s).unwrap();
        assert_eq!(basis.node_row(0), &[0.0]);
        assert_eq!(basis.node_row(1), &[-0.25]);
        assert_eq!(basis.node_row(2), &[0.25]);
        // A drifting column is refused.
        let bad = vec![0.0, 1.0, 1.0, 1.0, 1.0];
        assert!(matches!(
            from_node_columns(&tree, &[bad]),
            Err(Error::NonMartingale { .. })
        ));
        let shifted = vec![1.0, 1.0, 1.0, 1.0, 1.0];
        assert!(from_node_columns(&tree, &[shifted]).is_err());
    }

    #[test]
    fn custom_columns_from_expressions() {
        let (_, b, _) = pa1_bundle(50);
        let cols = [
            CustomColumn {
                increments: vec!["w1".into(), "w12".into()],
            },
            CustomColumn {
                increments: vec!["w1*w1 - 1".into(), "w1*(w12*w12 - 1)".into()],
            },
        ];
        let basis = build_custom_basis(&b, &cols).unwrap();
        assert_eq!(basis.n_alpha, 2);
        for n in 0..b.n_paths {
            let w1 = b.driver(n, 0);
            let w12 = b.driver(n, 1);
            assert_eq!(basis.b(n, 1, 0), w1);
            assert_eq!(basis.b(n, 2, 0), w1 + w12);
            assert!((basis.b(n, 2, 1) - (w1 * w1 - 1.0 + w1 * (w12 * w12 - 1.0))).abs() < 1e-12);
        }
        // Date-1 increments must be measurable at date 1.
        let leaky = [CustomColumn {
            increments: vec!["w12".into(), "w1".into()],
        }];
        assert!(build_custom_basis(&b, &leaky).is_err());
    }
}

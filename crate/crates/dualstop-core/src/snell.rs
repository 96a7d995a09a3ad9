//! Snell envelopes, Doob decompositions and optimal stopping families.
//!
//! The value process of the stopping problem is the Snell envelope
//! `Y*_j = max(Z_j, E_{F_j}[Y*_{j+1}])` with `Y*_J = Z_J`. Its Doob
//! decomposition `Y*_j = Y*_0 + M*_j - A*_j` splits it into a martingale
//! `M*` and a nondecreasing predictable compensator `A*`; `M*` is the
//! canonical surely optimal dual martingale, satisfying
//! `max_j (Z_j - M*_j) = Y*_0` on every path.
//!
//! Three routes produce [`SnellData`]:
//!
//! * exact backward induction on a [`TreeModel`] (node indexed);
//! * the closed forms of the two-period uniform example (path indexed);
//! * the Black-formula continuation value for the Bermudan call plus one
//!   adaptive quadrature for `Y*_0` (path indexed).

use crate::error::{Error, Result};
use crate::math::{norm_cdf, norm_pdf, CompSum};
use crate::models::{BermudanCallModel, MarketModel, PathBundle, TreeModel};
use crate::quad;
use alloc::vec;
use alloc::vec::Vec;

/// How the flat value vectors of a [`SnellData`] are indexed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SnellLayout {
    /// Row-major `(path, date)` with `horizon + 1` entries per path.
    PerPath { n_paths: usize },
    /// One entry per tree node, in the tree's global node order.
    PerNode { n_nodes: usize },
}

/// Snell envelope, Doob decomposition and stopping data, either per
/// `(path, date)` or per tree node.
#[derive(Debug, Clone)]
pub struct SnellData {
    pub horizon: usize,
    pub layout: SnellLayout,
    y_star: Vec<f64>,
    cont: Vec<f64>,
    m_star: Vec<f64>,
    a_star: Vec<f64>,
    exercise: Vec<bool>,
    /// Per-path layouts only: `tau_family[n * (J+1) + i]` is the first
    /// optimal exercise date at or after `i`.
    tau_family: Vec<usize>,
}

impl SnellData {
    pub fn n_paths(&self) -> usize {
        match self.layout {
            SnellLayout::PerPath { n_paths } => n_paths,
            SnellLayout::PerNode { .. } => panic!("node-indexed Snell data has no paths"),
        }
    }

    fn at(&self, n: usize, j: usize) -> usize {
        debug_assert!(matches!(self.layout, SnellLayout::PerPath { .. }));
        debug_assert!(j <= self.horizon);
        n * (self.horizon + 1) + j
    }

    /// `Y*_j` on path `n`.
    pub fn y(&self, n: usize, j: usize) -> f64 {
        self.y_star[self.at(n, j)]
    }

    /// Continuation value `E_{F_j}[Y*_{j+1}]` on path `n` (0 at the horizon).
    pub fn cont(&self, n: usize, j: usize) -> f64 {
        self.cont[self.at(n, j)]
    }

    /// Doob martingale `M*_j` on path `n`.
    pub fn m(&self, n: usize, j: usize) -> f64 {
        self.m_star[self.at(n, j)]
    }

    /// Compensator `A*_j` on path `n`.
    pub fn a(&self, n: usize, j: usize) -> f64 {
        self.a_star[self.at(n, j)]
    }

    /// Whether date `j` is an optimal exercise date on path `n`.
    pub fn is_exercise(&self, n: usize, j: usize) -> bool {
        self.exercise[self.at(n, j)]
    }

    /// First optimal exercise date at or after `i` on path `n`.
    pub fn tau(&self, n: usize, i: usize) -> usize {
        self.tau_family[self.at(n, i)]
    }

    /// The first optimal stopping time from date 0.
    pub fn tau_star(&self, n: usize) -> usize {
        self.tau(n, 0)
    }

    /// `Y*_0`, identical across paths (root value for node layouts).
    pub fn y0(&self) -> f64 {
        self.y_star[0]
    }

    fn node(&self, v: usize) -> usize {
        debug_assert!(matches!(self.layout, SnellLayout::PerNode { .. }));
        v
    }

    pub fn node_y(&self, v: usize) -> f64 {
        self.y_star[self.node(v)]
    }

    pub fn node_cont(&self, v: usize) -> f64 {
        self.cont[self.node(v)]
    }

    pub fn node_m(&self, v: usize) -> f64 {
        self.m_star[self.node(v)]
    }

    pub fn node_a(&self, v: usize) -> f64 {
        self.a_star[self.node(v)]
    }

    pub fn node_exercise(&self, v: usize) -> bool {
        self.exercise[self.node(v)]
    }
}

/// Successive optimal exercise dates and segment labels per path.
///
/// The exercise dates of path `n` are the strictly increasing sequence
/// `tau^1 < ... < tau^L = J` of dates with `Z_i >= cont_i` (the final date
/// always exercises since `Y*_J = Z_J`), preceded by the sentinel
/// `tau^0 = -1`. Date `i` carries the 1-based label `l_i` of the segment
/// `tau^{l_i - 1} < i <= tau^{l_i}` it falls in.
#[derive(Debug, Clone)]
pub struct SegmentIndex {
    pub horizon: usize,
    pub n_paths: usize,
    dates: Vec<Vec<usize>>,
    labels: Vec<usize>,
}

impl SegmentIndex {
    /// Exercise dates of path `n`, in increasing order.
    pub fn exercise_dates(&self, n: usize) -> &[usize] {
        &self.dates[n]
    }

    /// Segment label `l_i` (1-based).
    pub fn label(&self, n: usize, i: usize) -> usize {
        self.labels[n * (self.horizon + 1) + i]
    }

    /// The last exercise date strictly before `i`, `None` when `i` lies in
    /// the first segment (the sentinel case).
    pub fn last_exercise_before(&self, n: usize, i: usize) -> Option<usize> {
        let l = self.label(n, i);
        if l == 1 {
            None
        } else {
            Some(self.dates[n][l - 2])
        }
    }
}

/// Extract the per-path stopping family from path-indexed Snell data.
pub fn stopping_family(snell: &SnellData) -> SegmentIndex {
    let n_paths = snell.n_paths();
    let width = snell.horizon + 1;
    let mut dates = Vec::with_capacity(n_paths);
    let mut labels = vec![0usize; n_paths * width];
    for n in 0..n_paths {
        let mut path_dates = Vec::new();
        for i in 0..width {
            labels[n * width + i] = path_dates.len() + 1;
            if snell.is_exercise(n, i) {
                path_dates.push(i);
            }
        }
        debug_assert_eq!(path_dates.last().copied(), Some(snell.horizon));
        dates.push(path_dates);
    }
    SegmentIndex {
        horizon: snell.horizon,
        n_paths,
        dates,
        labels,
    }
}

/// Exact Snell data on a tree by backward induction, node indexed.
///
/// Expectations are computed exactly from the transition probabilities, so
/// the Doob identity and the martingale property of `M*` hold to rounding.
pub fn backward_induct(tree: &TreeModel) -> SnellData {
    let n = tree.n_nodes();
    let horizon = tree.horizon();
    let mut y = vec![0.0; n];
    let mut cont = vec![0.0; n];
    let mut m = vec![0.0; n];
    let mut a = vec![0.0; n];
    let mut exercise = vec![false; n];

    for v in tree.level(horizon) {
        y[v] = tree.reward(v);
        cont[v] = 0.0;
        exercise[v] = true;
    }
    for j in (0..horizon).rev() {
        for v in tree.level(j) {
            let mut e = CompSum::new();
            for &c in tree.children(v) {
                e.add(tree.node(c).prob * y[c]);
            }
            cont[v] = e.value();
            let z = tree.reward(v);
            y[v] = z.max(cont[v]);
            exercise[v] = z >= cont[v];
        }
    }
    // Forward pass for the decomposition: the martingale increment at a
    // child is the innovation y - cont(parent), the compensator increment
    // is the parent's drift y(parent) - cont(parent).
    for j in 1..=horizon {
        for v in tree.level(j) {
            let p = tree.node(v).parent.expect("non-root node has a parent");
            m[v] = m[p] + y[v] - cont[p];
            a[v] = a[p] + y[p] - cont[p];
        }
    }
    SnellData {
        horizon,
        layout: SnellLayout::PerNode { n_nodes: n },
        y_star: y,
        cont,
        m_star: m,
        a_star: a,
        exercise,
        tau_family: Vec::new(),
    }
}

fn per_path_tau(exercise: &[bool], width: usize, n_paths: usize) -> Vec<usize> {
    let mut tau = vec![0usize; n_paths * width];
    for n in 0..n_paths {
        let row = n * width;
        let mut next = width - 1;
        for i in (0..width).rev() {
            if exercise[row + i] {
                next = i;
            }
            tau[row + i] = next;
        }
    }
    tau
}

/// Closed-form Snell data for the two-period uniform model, path indexed.
///
/// `Y*_0 = E[max(U, 1)] = 5/4`; `Y*_1 = max(U, 1)`; `M*_1 = M*_2 =
/// max(U, 1) - 5/4`; `A*_2 = max(U, 1) - 1`.
pub fn stylized_snell(paths: &PathBundle) -> Result<SnellData> {
    match paths.model {
        MarketModel::Stylized(_) => {}
        other => {
            return Err(Error::ModelMismatch {
                expected: "stylized",
                got: other.name(),
            })
        }
    }
    let n_paths = paths.n_paths;
    let width = 3;
    let mut y = Vec::with_capacity(n_paths * width);
    let mut cont = Vec::with_capacity(n_paths * width);
    let mut m = Vec::with_capacity(n_paths * width);
    let mut a = Vec::with_capacity(n_paths * width);
    let mut exercise = Vec::with_capacity(n_paths * width);
    for n in 0..n_paths {
        let u = paths.reward(n, 1);
        let y1 = u.max(1.0);
        y.extend_from_slice(&[1.25, y1, 1.0]);
        cont.extend_from_slice(&[1.25, 1.0, 0.0]);
        m.extend_from_slice(&[0.0, y1 - 1.25, y1 - 1.25]);
        a.extend_from_slice(&[0.0, 0.0, y1 - 1.0]);
        exercise.extend_from_slice(&[false, u >= 1.0, true]);
    }
    let tau_family = per_path_tau(&exercise, width, n_paths);
    Ok(SnellData {
        horizon: 2,
        layout: SnellLayout::PerPath { n_paths },
        y_star: y,
        cont,
        m_star: m,
        a_star: a,
        exercise,
        tau_family,
    })
}

/// Date-1 continuation value of the Bermudan call, the Black-type formula
///
/// `C_1(w) = s0 e^{-sigma^2/2 + sigma w} N(d) - kappa2 N(d - sigma)` with
/// `d = w + ln(s0 / kappa2) / sigma`.
pub fn black_continuation(model: &BermudanCallModel, w1: f64) -> Result<f64> {
    if model.sigma2 <= 0.0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "continuation formula needs sigma2 > 0, got {}",
            model.sigma2
        )));
    }
    let sigma = model.sigma();
    let forward = model.s1(w1);
    if model.kappa2 == 0.0 {
        return Ok(forward);
    }
    let d = w1 + libm::log(model.s0 / model.kappa2) / sigma;
    Ok(forward * norm_cdf(d) - model.kappa2 * norm_cdf(d - sigma))
}

/// The point `w` where the date-1 reward crosses the continuation value,
/// `Z_1(w) = C_1(w)`: exercise at date 1 is optimal exactly on `[w, inf)`.
/// `None` when the two never cross (the reward stays on one side).
pub fn z1_c1_crossing(model: &BermudanCallModel) -> Result<Option<f64>> {
    let g = |w: f64| -> Result<f64> {
        let z1 = (model.s1(w) - model.kappa1).max(0.0);
        Ok(z1 - black_continuation(model, w)?)
    };
    let mut lo = -20.0;
    let mut glo = g(lo)?;
    if glo == 0.0 {
        return Ok(Some(lo));
    }
    let mut bracket = None;
    for i in 1..=80 {
        let hi = -20.0 + 0.5 * i as f64;
        let ghi = g(hi)?;
        if glo * ghi <= 0.0 {
            bracket = Some((lo, hi, glo));
            break;
        }
        lo = hi;
        glo = ghi;
    }
    let (mut lo, mut hi, mut glo) = match bracket {
        Some(b) => b,
        None => return Ok(None),
    };
    loop {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(Some(mid));
        }
        let gm = g(mid)?;
        if gm == 0.0 {
            return Ok(Some(mid));
        }
        if (gm > 0.0) == (glo > 0.0) {
            lo = mid;
            glo = gm;
        } else {
            hi = mid;
        }
    }
}

fn breakpoints_in(candidates: &[Option<f64>], a: f64, b: f64) -> Vec<f64> {
    let mut pts = vec![a];
    let mut interior: Vec<f64> = candidates
        .iter()
        .filter_map(|&c| c)
        .filter(|&c| c > a + 1e-9 && c < b - 1e-9)
        .collect();
    interior.sort_by(|x, y| x.partial_cmp(y).unwrap());
    for c in interior {
        if c - pts[pts.len() - 1] > 1e-9 {
            pts.push(c);
        }
    }
    pts.push(b);
    pts
}

/// `E[Y*_1]`, the date-0 continuation value, by adaptive quadrature of
/// `max((s0 e^{-sigma^2/2 + sigma z} - kappa1)^+, C_1(z)) phi(z)` over
/// `z in [-10, 10]` (truncated normal mass below 1e-22), absolute
/// tolerance 1e-7. The reward kink and the exercise boundary are passed as
/// panel boundaries so no mass can hide from the rule.
fn bs_continuation0(model: &BermudanCallModel) -> Result<quad::QuadResult> {
    if model.sigma2 <= 0.0 {
        return Err(Error::InvalidParameter(alloc::format!(
            "quadrature value needs sigma2 > 0, got {}",
            model.sigma2
        )));
    }
    let sigma = model.sigma();
    let z1_kink = if model.kappa1 > 0.0 {
        Some((libm::log(model.kappa1 / model.s0) + 0.5 * model.sigma2) / sigma)
    } else {
        None
    };
    let crossing = z1_c1_crossing(model)?;
    let points = breakpoints_in(&[z1_kink, crossing], -10.0, 10.0);
    let f = |z: f64| -> f64 {
        let z1 = (model.s1(z) - model.kappa1).max(0.0);
        let c1 = black_continuation(model, z).expect("sigma2 checked above");
        z1.max(c1) * norm_pdf(z)
    };
    quad::integrate_segmented(&f, &points, 1e-7)
}

/// `Y*_0` of the Bermudan call by adaptive quadrature, with the achieved
/// absolute error estimate.
pub fn bs_value(model: &BermudanCallModel) -> Result<(f64, f64)> {
    let r = bs_continuation0(model)?;
    let z0 = (model.s0 - model.kappa1).max(0.0);
    Ok((z0.max(r.value), r.abs_error))
}

/// Per-path Snell data for the Bermudan call: one quadrature for `Y*_0`,
/// closed forms for everything else.
pub fn bs_value_and_snell(
    model: &BermudanCallModel,
    paths: &PathBundle,
) -> Result<(f64, SnellData)> {
    match paths.model {
        MarketModel::Bermudan(m) if m == *model => {}
        other => {
            return Err(Error::ModelMismatch {
                expected: "bermudan",
                got: other.name(),
            })
        }
    }
    let integral = bs_continuation0(model)?.value;
    let z0 = (model.s0 - model.kappa1).max(0.0);
    let y0 = z0.max(integral);
    let n_paths = paths.n_paths;
    let width = 3;
    let mut y = Vec::with_capacity(n_paths * width);
    let mut cont = Vec::with_capacity(n_paths * width);
    let mut m = Vec::with_capacity(n_paths * width);
    let mut a = Vec::with_capacity(n_paths * width);
    let mut exercise = Vec::with_capacity(n_paths * width);
    for n in 0..n_paths {
        let w1 = paths.driver(n, 0);
        let z1 = paths.reward(n, 1);
        let z2 = paths.reward(n, 2);
        let c1 = black_continuation(model, w1)?;
        let y1 = z1.max(c1);
        let y0n = z0.max(integral);
        let m1 = y1 - integral;
        let a1 = y0n - integral;
        y.extend_from_slice(&[y0n, y1, z2]);
        cont.extend_from_slice(&[integral, c1, 0.0]);
        m.extend_from_slice(&[0.0, m1, m1 + z2 - c1]);
        a.extend_from_slice(&[0.0, a1, a1 + y1 - c1]);
        exercise.extend_from_slice(&[z0 >= integral, z1 >= c1, true]);
    }
    let tau_family = per_path_tau(&exercise, width, n_paths);
    Ok((
        y0,
        SnellData {
            horizon: 2,
            layout: SnellLayout::PerPath { n_paths },
            y_star: y,
            cont,
            m_star: m,
            a_star: a,
            exercise,
            tau_family,
        },
    ))
}

/// Per-path Snell data for whichever model produced the bundle.
pub fn snell_for(paths: &PathBundle) -> Result<SnellData> {
    match paths.model {
        MarketModel::Stylized(_) => stylized_snell(paths),
        MarketModel::Bermudan(m) => bs_value_and_snell(&m, paths).map(|(_, s)| s),
    }
}

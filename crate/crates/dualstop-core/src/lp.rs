//! Epigraph linear program for the sample dual minimization and a revised
//! simplex solver exploiting its structure: every inequality row touches
//! exactly one epigraph variable `u_n`, so a basis is one anchor row per
//! path plus one extra tight row per basic `alpha`, and all basis algebra
//! reduces to a small `K x K` working system.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::dual::{estimate, DualEstimate};
use crate::error::{Error, Result};
use crate::families::{rebuild_basis, BasisMatrix};
use crate::math::{comp_sum, CompSum};
use crate::models::{simulate, PathBundle};
use crate::randomize::{make_eta, RandomizerSpec};
use crate::snell::{SnellData, SnellLayout};

/// min (1/N) sum_n u_n subject to u_n >= c_{j,n} - sum_k alpha_k b_{j,n,k}
/// for every path `n` and date `j`; the `alpha` are sign-unrestricted.
#[derive(Debug, Clone, PartialEq)]
pub struct LPProblem {
    pub n_alpha: usize,
    pub n_paths: usize,
    pub horizon: usize,
    /// `c_{j,n} = Z_j + eta_j`, row-major per path; `eta` drawn once at
    /// build time and never re-sampled while solving.
    costs: Vec<f64>,
    /// `b_{j,n,k}` basis values, row-major per (path, date).
    coeffs: Vec<f64>,
}

impl LPProblem {
    pub fn from_parts(
        n_paths: usize,
        horizon: usize,
        n_alpha: usize,
        costs: Vec<f64>,
        coeffs: Vec<f64>,
    ) -> Result<LPProblem> {
        if n_paths == 0 {
            return Err(Error::InvalidArgument(
                "linear program needs at least one path".to_string(),
            ));
        }
        let width = horizon + 1;
        if costs.len() != n_paths * width {
            return Err(Error::DimensionMismatch {
                expected: n_paths * width,
                got: costs.len(),
            });
        }
        if coeffs.len() != n_paths * width * n_alpha {
            return Err(Error::DimensionMismatch {
                expected: n_paths * width * n_alpha,
                got: coeffs.len(),
            });
        }
        if costs.iter().chain(coeffs.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "linear program entries must be finite".to_string(),
            ));
        }
        Ok(LPProblem {
            n_alpha,
            n_paths,
            horizon,
            costs,
            coeffs,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_paths * (self.horizon + 1)
    }

    pub fn c(&self, n: usize, j: usize) -> f64 {
        self.costs[n * (self.horizon + 1) + j]
    }

    pub fn b_row(&self, n: usize, j: usize) -> &[f64] {
        let r = (n * (self.horizon + 1) + j) * self.n_alpha;
        &self.coeffs[r..r + self.n_alpha]
    }

    pub fn b(&self, n: usize, j: usize, k: usize) -> f64 {
        self.b_row(n, j)[k]
    }

    /// Plain-text dump (`u_n >= c - sum(a_k*b_k)`) for external solver
    /// cross-checks; [`LPProblem::load`] reads it back exactly.
    pub fn dump(&self) -> String {
        let mut out = format!(
            "minimize (1/{}) sum u_n ; horizon={} n_alpha={}\n",
            self.n_paths, self.horizon, self.n_alpha
        );
        for n in 0..self.n_paths {
            for j in 0..=self.horizon {
                out.push_str(&format!("u_{} >= {:.16e} - sum(", n, self.c(n, j)));
                let row = self.b_row(n, j);
                for (k, b) in row.iter().enumerate() {
                    if k > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&format!("a_{k}*{b:.16e}"));
                }
                out.push_str(")\n");
            }
        }
        out
    }

    pub fn load(text: &str) -> Result<LPProblem> {
        fn bad(msg: &str) -> Error {
            Error::InvalidArgument(format!("malformed LP text: {msg}"))
        }
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let rest = header
            .strip_prefix("minimize (1/")
            .ok_or_else(|| bad("missing objective"))?;
        let close = rest.find(')').ok_or_else(|| bad("missing path count"))?;
        let n_paths: usize = rest[..close].parse().map_err(|_| bad("bad path count"))?;
        let horizon: usize = header
            .split("horizon=")
            .nth(1)
            .and_then(|s| s.split_whitespace().next())
            .ok_or_else(|| bad("missing horizon"))?
            .parse()
            .map_err(|_| bad("bad horizon"))?;
        let n_alpha: usize = header
            .split("n_alpha=")
            .nth(1)
            .and_then(|s| s.split_whitespace().next())
            .ok_or_else(|| bad("missing n_alpha"))?
            .parse()
            .map_err(|_| bad("bad n_alpha"))?;
        let width = horizon + 1;
        let mut costs = Vec::with_capacity(n_paths * width);
        let mut coeffs = Vec::with_capacity(n_paths * width * n_alpha);
        for n in 0..n_paths {
            for _ in 0..width {
                let line = lines.next().ok_or_else(|| bad("missing row"))?;
                let rest = line
                    .strip_prefix(&format!("u_{n} >= "))
                    .ok_or_else(|| bad("row out of order"))?;
                let (c_str, sum_str) = rest
                    .split_once(" - sum(")
                    .ok_or_else(|| bad("missing sum"))?;
                costs.push(c_str.parse().map_err(|_| bad("bad cost"))?);
                let terms = sum_str
                    .strip_suffix(')')
                    .ok_or_else(|| bad("unterminated sum"))?;
                let mut parsed = 0usize;
                if !terms.is_empty() {
                    for (k, term) in terms.split(", ").enumerate() {
                        let value = term
                            .strip_prefix(&format!("a_{k}*"))
                            .ok_or_else(|| bad("bad term label"))?;
                        coeffs.push(value.parse().map_err(|_| bad("bad coefficient"))?);
                        parsed += 1;
                    }
                }
                if parsed != n_alpha {
                    return Err(bad("wrong term count"));
                }
            }
        }
        if lines.next().is_some() {
            return Err(bad("trailing rows"));
        }
        LPProblem::from_parts(n_paths, horizon, n_alpha, costs, coeffs)
    }
}

/// `(1/N) sum_n max_j (c_{j,n} - alpha . b_{j,n})`: the epigraph objective
/// at a fixed coefficient vector. Panics on a wrong `alpha` length.
pub fn objective_at(problem: &LPProblem, alpha: &[f64]) -> f64 {
    assert_eq!(alpha.len(), problem.n_alpha, "coefficient count mismatch");
    let mut acc = CompSum::new();
    for n in 0..problem.n_paths {
        let mut best = f64::NEG_INFINITY;
        for j in 0..=problem.horizon {
            let row = problem.b_row(n, j);
            let mut v = problem.c(n, j);
            for k in 0..problem.n_alpha {
                v -= alpha[k] * row[k];
            }
            if v > best {
                best = v;
            }
        }
        acc.add(best);
    }
    acc.value() / problem.n_paths as f64
}

/// Assemble the epigraph LP from a bundle, family and randomizer; the
/// perturbations are drawn once here.
pub fn build_lp(
    paths: &PathBundle,
    basis: &BasisMatrix,
    spec: &RandomizerSpec,
    snell: Option<&SnellData>,
    seed: u64,
) -> Result<LPProblem> {
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
                "path-indexed basis required to build the sample LP".to_string(),
            ))
        }
    }
    if basis.horizon != paths.horizon() {
        return Err(Error::DimensionMismatch {
            expected: paths.horizon(),
            got: basis.horizon,
        });
    }
    let eta = make_eta(spec, paths, snell, seed)?;
    let width = paths.horizon() + 1;
    let mut costs = Vec::with_capacity(paths.n_paths * width);
    let mut coeffs = Vec::with_capacity(paths.n_paths * width * basis.n_alpha);
    for n in 0..paths.n_paths {
        for j in 0..width {
            costs.push(paths.reward(n, j) + eta[n * width + j]);
            coeffs.extend_from_slice(basis.row(n, j));
        }
    }
    LPProblem::from_parts(paths.n_paths, paths.horizon(), basis.n_alpha, costs, coeffs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LPStatus {
    Optimal,
    Unbounded,
    IterationLimit,
}

impl core::fmt::Display for LPStatus {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(match self {
            LPStatus::Optimal => "optimal",
            LPStatus::Unbounded => "unbounded",
            LPStatus::IterationLimit => "iteration-limit",
        })
    }
}

#[derive(Debug, Clone)]
pub struct LPSolution {
    pub alpha_hat: Vec<f64>,
    pub objective_value: f64,
    pub status: LPStatus,
    pub iterations: usize,
}

const PIVOT_TOL: f64 = 1e-9;
const OPT_TOL: f64 = 1e-8;

struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(mut a: Vec<f64>, n: usize) -> Option<Lu> {
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.iter().fold(0.0f64, |m, &x| m.max(x.abs())).max(1.0);
        let tol = 1e-12 * scale;
        for k in 0..n {
            let mut p = k;
            let mut pv = a[k * n + k].abs();
            for r in k + 1..n {
                let v = a[r * n + k].abs();
                if v > pv {
                    p = r;
                    pv = v;
                }
            }
            if pv <= tol {
                return None;
            }
            if p != k {
                for c in 0..n {
                    a.swap(k * n + c, p * n + c);
                }
                perm.swap(k, p);
            }
            let d = a[k * n + k];
            for r in k + 1..n {
                let f = a[r * n + k] / d;
                a[r * n + k] = f;
                for c in k + 1..n {
                    a[r * n + c] -= f * a[k * n + c];
                }
            }
        }
        Some(Lu { n, lu: a, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for k in 0..n {
            for c in 0..k {
                x[k] -= self.lu[k * n + c] * x[c];
            }
        }
        for k in (0..n).rev() {
            for c in k + 1..n {
                x[k] -= self.lu[k * n + c] * x[c];
            }
            x[k] /= self.lu[k * n + k];
        }
        x
    }
}

enum Candidate {
    /// Nonbasic `alpha_k` with nonzero reduced cost; moves in `direction`.
    Alpha(usize, f64),
    /// Extra tight row (by working slot) with a negative multiplier.
    Extra(usize),
    /// Anchor row of a path with a negative multiplier.
    Anchor(usize),
}

struct Workspace {
    anchor: Vec<usize>,
    extras: Vec<(usize, usize)>,
    basic: Vec<usize>,
    is_basic: Vec<bool>,
    active: Vec<bool>,
    alpha_basic: Vec<f64>,
    u: Vec<f64>,
}

impl Workspace {
    fn refresh_active(&mut self, width: usize) {
        for a in self.active.iter_mut() {
            *a = false;
        }
        for (n, &j) in self.anchor.iter().enumerate() {
            self.active[n * width + j] = true;
        }
        for &(n, j) in &self.extras {
            self.active[n * width + j] = true;
        }
    }
}

fn build_working(
    p: &LPProblem,
    ws: &Workspace,
) -> (Vec<f64>, Vec<f64>) {
    let kb = ws.basic.len();
    let mut w = vec![0.0; kb * kb];
    let mut rhs = vec![0.0; kb];
    for (e, &(n, j)) in ws.extras.iter().enumerate() {
        let be = p.b_row(n, j);
        let ba = p.b_row(n, ws.anchor[n]);
        for (i, &k) in ws.basic.iter().enumerate() {
            w[e * kb + i] = be[k] - ba[k];
        }
        rhs[e] = p.c(n, j) - p.c(n, ws.anchor[n]);
    }
    (w, rhs)
}

/// Re-derive the vertex (basic alpha values and anchors' `u`) from the
/// current active set; returns false when the working matrix is singular.
fn resolve_vertex(p: &LPProblem, ws: &mut Workspace) -> Option<Lu> {
    let kb = ws.basic.len();
    let (w, rhs) = build_working(p, ws);
    let lu = Lu::factor(w, kb)?;
    ws.alpha_basic = lu.solve(&rhs);
    for n in 0..p.n_paths {
        let ba = p.b_row(n, ws.anchor[n]);
        let mut v = p.c(n, ws.anchor[n]);
        for (i, &k) in ws.basic.iter().enumerate() {
            v -= ws.alpha_basic[i] * ba[k];
        }
        ws.u[n] = v;
    }
    Some(lu)
}

/// Solve the epigraph LP with a primal active-set simplex. The start is
/// `alpha = 0`, `u_n = max_j c_{j,n}`; free `alpha` variables enter in
/// either direction; Dantzig pricing switches to Bland's rule after a
/// stretch of iterations without objective progress.
pub fn solve_lp(problem: &LPProblem) -> LPSolution {
    let np = problem.n_paths;
    let width = problem.horizon + 1;
    let ka = problem.n_alpha;
    let n_rows = problem.n_rows();
    let inv_n = 1.0 / np as f64;

    let mut ws = Workspace {
        anchor: (0..np)
            .map(|n| {
                let mut bj = 0;
                for j in 1..width {
                    if problem.c(n, j) > problem.c(n, bj) {
                        bj = j;
                    }
                }
                bj
            })
            .collect(),
        extras: Vec::new(),
        basic: Vec::new(),
        is_basic: vec![false; ka],
        active: vec![false; n_rows],
        alpha_basic: Vec::new(),
        u: vec![0.0; np],
    };

    let max_iters = 6 * n_rows + 10_000;
    let bland_after = 5 * n_rows;
    let mut stall = 0usize;
    let mut best_obj = f64::INFINITY;
    let mut iterations = 0usize;
    let mut status = LPStatus::IterationLimit;

    'simplex: while iterations < max_iters {
        iterations += 1;
        ws.refresh_active(width);
        let Some(lu) = resolve_vertex(problem, &mut ws) else {
            break;
        };
        let kb = ws.basic.len();

        let obj = inv_n * comp_sum(&ws.u);
        if obj < best_obj - 1e-12 * (1.0 + best_obj.abs()) {
            best_obj = obj;
            stall = 0;
        } else {
            stall += 1;
        }
        let bland = stall > bland_after;

        // Duals: extras from the transposed working system, anchors from
        // the per-path budget 1/N, reduced costs for nonbasic alpha.
        let (w, _) = build_working(problem, &ws);
        let mut wt = vec![0.0; kb * kb];
        for r in 0..kb {
            for c in 0..kb {
                wt[c * kb + r] = w[r * kb + c];
            }
        }
        let Some(lut) = Lu::factor(wt, kb) else {
            break;
        };
        let g: Vec<f64> = ws
            .basic
            .iter()
            .map(|&k| {
                let mut acc = CompSum::new();
                for n in 0..np {
                    acc.add(problem.b(n, ws.anchor[n], k));
                }
                -inv_n * acc.value()
            })
            .collect();
        let y = lut.solve(&g);
        let mut lam = vec![inv_n; np];
        for (i, &(n, _)) in ws.extras.iter().enumerate() {
            lam[n] -= y[i];
        }

        let mut candidate: Option<(f64, usize, Candidate)> = None;
        let mut consider = |score: f64, order: usize, cand: Candidate| {
            let better = match &candidate {
                None => true,
                Some((s, o, _)) => {
                    if bland {
                        order < *o
                    } else {
                        score < *s || (score == *s && order < *o)
                    }
                }
            };
            if better {
                candidate = Some((score, order, cand));
            }
        };
        for k in 0..ka {
            if ws.is_basic[k] {
                continue;
            }
            let mut acc = CompSum::new();
            for n in 0..np {
                acc.add(problem.b(n, ws.anchor[n], k));
            }
            let mut rk = inv_n * acc.value();
            for (i, &(n, j)) in ws.extras.iter().enumerate() {
                rk += y[i] * (problem.b(n, j, k) - problem.b(n, ws.anchor[n], k));
            }
            if rk.abs() > OPT_TOL {
                let dir = if rk > 0.0 { 1.0 } else { -1.0 };
                consider(-rk.abs(), k, Candidate::Alpha(k, dir));
            }
        }
        for (i, &(n, j)) in ws.extras.iter().enumerate() {
            if y[i] < -OPT_TOL {
                consider(y[i], ka + n * width + j, Candidate::Extra(i));
            }
        }
        for (n, &l) in lam.iter().enumerate() {
            if l < -OPT_TOL {
                consider(l, ka + n * width + ws.anchor[n], Candidate::Anchor(n));
            }
        }

        let Some((_, _, cand)) = candidate else {
            status = LPStatus::Optimal;
            break;
        };

        // A negative anchor multiplier: swap labels with the extra holding
        // the largest multiplier on that path (it is positive, since the
        // path's multipliers sum to 1/N), then retry; the former anchor is
        // now an extra and will be priced as such.
        let cand = match cand {
            Candidate::Anchor(n0) => {
                let mut slot: Option<usize> = None;
                for (i, &(n, j)) in ws.extras.iter().enumerate() {
                    if n != n0 {
                        continue;
                    }
                    let better = match slot {
                        None => true,
                        Some(s) => {
                            y[i] > y[s] || (y[i] == y[s] && j < ws.extras[s].1)
                        }
                    };
                    if better {
                        slot = Some(i);
                    }
                }
                let Some(slot) = slot else {
                    break;
                };
                let old = ws.anchor[n0];
                ws.anchor[n0] = ws.extras[slot].1;
                ws.extras[slot] = (n0, old);
                continue 'simplex;
            }
            other => other,
        };

        // Direction through the working system, then the ratio test over
        // inactive rows; the first blocking row joins the extras.
        let (dab, entering) = match cand {
            Candidate::Alpha(k0, dir) => {
                let rhs: Vec<f64> = ws
                    .extras
                    .iter()
                    .map(|&(n, j)| {
                        -dir * (problem.b(n, j, k0) - problem.b(n, ws.anchor[n], k0))
                    })
                    .collect();
                (lu.solve(&rhs), Some((k0, dir)))
            }
            Candidate::Extra(e0) => {
                let mut rhs = vec![0.0; kb];
                rhs[e0] = 1.0;
                (lu.solve(&rhs), None)
            }
            Candidate::Anchor(_) => unreachable!("anchors handled by relabeling"),
        };

        let mut du = vec![0.0; np];
        for n in 0..np {
            let ba = problem.b_row(n, ws.anchor[n]);
            let mut v = 0.0;
            for (i, &k) in ws.basic.iter().enumerate() {
                v += dab[i] * ba[k];
            }
            if let Some((k0, dir)) = entering {
                v += dir * ba[k0];
            }
            du[n] = -v;
        }

        let mut best_t = f64::INFINITY;
        let mut leaving: Option<(usize, usize)> = None;
        for n in 0..np {
            for j in 0..width {
                let id = n * width + j;
                if ws.active[id] {
                    continue;
                }
                let bj = problem.b_row(n, j);
                let mut rate = du[n];
                for (i, &k) in ws.basic.iter().enumerate() {
                    rate += dab[i] * bj[k];
                }
                if let Some((k0, dir)) = entering {
                    rate += dir * bj[k0];
                }
                if rate >= -PIVOT_TOL {
                    continue;
                }
                let mut m = 0.0;
                for (i, &k) in ws.basic.iter().enumerate() {
                    m += ws.alpha_basic[i] * bj[k];
                }
                let slack = (ws.u[n] + m - problem.c(n, j)).max(0.0);
                let t = slack / (-rate);
                let id_better = match leaving {
                    Some((ln, lj)) => id < ln * width + lj,
                    None => true,
                };
                if t < best_t || (t == best_t && id_better) {
                    best_t = t;
                    leaving = Some((n, j));
                }
            }
        }

        let Some(blocking) = leaving else {
            status = LPStatus::Unbounded;
            break;
        };
        match cand {
            Candidate::Alpha(k0, _) => {
                ws.extras.push(blocking);
                ws.basic.push(k0);
                ws.is_basic[k0] = true;
            }
            Candidate::Extra(e0) => {
                ws.extras[e0] = blocking;
            }
            Candidate::Anchor(_) => unreachable!(),
        }
    }

    let mut alpha_hat = vec![0.0; ka];
    for (i, &k) in ws.basic.iter().enumerate() {
        if i < ws.alpha_basic.len() {
            alpha_hat[k] = ws.alpha_basic[i];
        }
    }
    let objective_value = objective_at(problem, &alpha_hat);
    LPSolution {
        alpha_hat,
        objective_value,
        status,
        iterations,
    }
}

const TEST_SEED_SALT: u64 = 0x9E37_79B9_7F4A_7C15;

/// Build, solve, then re-evaluate the minimizer in-sample (same
/// perturbations) and on a fresh bundle of `test_n` paths with no
/// randomizer, which is the test-sample protocol behind the reported
/// `m_test` and `sigma_test` columns.
pub fn minimize_with_test(
    paths: &PathBundle,
    basis: &BasisMatrix,
    spec: &RandomizerSpec,
    snell: Option<&SnellData>,
    seed: u64,
    test_n: usize,
) -> Result<(LPSolution, DualEstimate, DualEstimate)> {
    let problem = build_lp(paths, basis, spec, snell, seed)?;
    let solution = solve_lp(&problem);
    let in_sample = estimate(paths, basis, &solution.alpha_hat, spec, snell, seed)?;
    let test_bundle = simulate(&paths.model, test_n, seed ^ TEST_SEED_SALT)?;
    let test_basis = rebuild_basis(&basis.kind, &test_bundle)?;
    let out_sample = estimate(
        &test_bundle,
        &test_basis,
        &solution.alpha_hat,
        &RandomizerSpec::none(),
        None,
        seed ^ TEST_SEED_SALT,
    )?;
    Ok((solution, in_sample, out_sample))
}

/// [`minimize_with_test`] with a test bundle the same size as the
/// training bundle.
pub fn minimize(
    paths: &PathBundle,
    basis: &BasisMatrix,
    spec: &RandomizerSpec,
    snell: Option<&SnellData>,
    seed: u64,
) -> Result<(LPSolution, DualEstimate, DualEstimate)> {
    minimize_with_test(paths, basis, spec, snell, seed, paths.n_paths)
}

//! Randomized perturbations of dual martingales.
//!
//! A pseudo martingale is `M̃ = M - eta` where `eta_j` is conditionally
//! mean-zero noise given the model filtration. The optimal scheme draws
//! i.i.d. `xi_j` with mean zero and support in `(-inf, 1]` and sets
//! `eta_j = theta xi_j (Y*_j - Z_j + A*_j)`: it leaves the Doob martingale
//! surely optimal (the multiplier vanishes at the optimal exercise date)
//! while giving every other optimal martingale a strictly positive expected
//! gap, so the randomized objective singles out `M*`. The naive scheme
//! `eta_j = theta_j xi_j` needs no Snell data but loses the almost-sure
//! upper bound.

use crate::error::{Error, Result};
use crate::models::PathBundle;
use crate::quad::{gauss_laguerre, gauss_legendre};
use crate::rng::StreamKey;
use crate::snell::SnellData;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

/// Law of the i.i.d. randomization variables `xi_j`.
///
/// Both laws have mean zero and support inside `(-inf, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XiLaw {
    /// Uniform on `[-1, 1]`.
    #[default]
    Uniform,
    /// Shifted exponential `1 - Exp(1)` on `(-inf, 1]`, with full left
    /// support and density 1 at the right endpoint.
    Texp,
}

impl XiLaw {
    /// Transform a uniform `(0, 1)` draw into a `xi` sample.
    pub fn from_u01(&self, u: f64) -> f64 {
        match self {
            XiLaw::Uniform => 2.0 * u - 1.0,
            XiLaw::Texp => 1.0 + libm::log(u),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            XiLaw::Uniform => "uniform",
            XiLaw::Texp => "texp",
        }
    }
}

/// Quadrature grid `(points, weights)` for exact expectations over one
/// `xi` draw: `sum_i w_i f(x_i)` approximates `E[f(xi)]`, with the weights
/// summing to one.
pub fn xi_grid(law: XiLaw, n: usize) -> (Vec<f64>, Vec<f64>) {
    match law {
        XiLaw::Uniform => {
            let (x, mut w) = gauss_legendre(n);
            for wi in w.iter_mut() {
                *wi *= 0.5;
            }
            (x, w)
        }
        XiLaw::Texp => {
            let (t, w) = gauss_laguerre(n);
            let x = t.iter().map(|&ti| 1.0 - ti).collect();
            (x, w)
        }
    }
}

/// Default order of the exact `xi` grids.
pub const XI_GRID_ORDER: usize = 21;

/// What perturbation to apply.
#[derive(Debug, Clone, PartialEq)]
pub enum RandomizerKind {
    /// `eta = 0`: the raw martingale.
    None,
    /// `eta_j = theta xi_j (Y*_j - Z_j + A*_j)`.
    Optimal { theta: f64 },
    /// `eta_j = theta[j] xi_j`, no Snell data required.
    Naive { theta: Vec<f64> },
}

/// Perturbation specification: kind plus the `xi` law.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomizerSpec {
    pub kind: RandomizerKind,
    pub xi_law: XiLaw,
}

impl RandomizerSpec {
    pub fn none() -> Self {
        RandomizerSpec {
            kind: RandomizerKind::None,
            xi_law: XiLaw::Uniform,
        }
    }

    pub fn optimal(theta: f64) -> Self {
        RandomizerSpec {
            kind: RandomizerKind::Optimal { theta },
            xi_law: XiLaw::Uniform,
        }
    }

    pub fn naive(theta: Vec<f64>) -> Self {
        RandomizerSpec {
            kind: RandomizerKind::Naive { theta },
            xi_law: XiLaw::Uniform,
        }
    }

    pub fn with_law(mut self, law: XiLaw) -> Self {
        self.xi_law = law;
        self
    }

    pub fn is_none(&self) -> bool {
        matches!(self.kind, RandomizerKind::None)
    }
}

/// Tag of the `xi` stream within a seed, separate from the driver stream
/// so changing the randomizer never perturbs the simulated paths.
pub const XI_TAG: &str = "xi";

/// Draw the perturbations `eta_{n,j}`, row-major per path.
///
/// The optimal kind requires path-indexed Snell data; `xi` values are a
/// pure function of `(seed, path, date)`.
pub fn make_eta(
    spec: &RandomizerSpec,
    paths: &PathBundle,
    snell: Option<&SnellData>,
    seed: u64,
) -> Result<Vec<f64>> {
    let width = paths.horizon() + 1;
    let total = paths.n_paths * width;
    match &spec.kind {
        RandomizerKind::None => Ok(vec![0.0; total]),
        RandomizerKind::Optimal { theta } => {
            if !(theta.is_finite() && *theta >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "optimal randomizer scale must be finite and nonnegative, got {theta}"
                )));
            }
            let snell = snell.ok_or(Error::MissingSnell)?;
            if snell.n_paths() != paths.n_paths {
                return Err(Error::DimensionMismatch {
                    expected: paths.n_paths,
                    got: snell.n_paths(),
                });
            }
            let stream = StreamKey::new(seed, XI_TAG);
            let mut eta = Vec::with_capacity(total);
            for n in 0..paths.n_paths {
                for j in 0..width {
                    let mult = snell.y(n, j) - paths.reward(n, j) + snell.a(n, j);
                    if mult == 0.0 {
                        eta.push(0.0);
                        continue;
                    }
                    let xi = spec.xi_law.from_u01(stream.u01(n as u64, j as u64));
                    eta.push(theta * xi * mult);
                }
            }
            Ok(eta)
        }
        RandomizerKind::Naive { theta } => {
            if theta.len() != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    got: theta.len(),
                });
            }
            if theta.iter().any(|t| !(t.is_finite() && *t >= 0.0)) {
                return Err(Error::InvalidParameter(format!(
                    "naive randomizer scales must be finite and nonnegative, got {theta:?}"
                )));
            }
            let stream = StreamKey::new(seed, XI_TAG);
            let mut eta = Vec::with_capacity(total);
            for n in 0..paths.n_paths {
                for j in 0..width {
                    if theta[j] == 0.0 {
                        eta.push(0.0);
                        continue;
                    }
                    let xi = spec.xi_law.from_u01(stream.u01(n as u64, j as u64));
                    eta.push(theta[j] * xi);
                }
            }
            Ok(eta)
        }
    }
}

/// Per-path check of the almost-sure bound `eta_j <= Y*_j - Z_j + A*_j`:
/// perturbations passing it keep the pathwise dual bound intact.
pub fn check_asl(eta: &[f64], paths: &PathBundle, snell: &SnellData) -> Result<Vec<bool>> {
    let width = paths.horizon() + 1;
    if eta.len() != paths.n_paths * width {
        return Err(Error::DimensionMismatch {
            expected: paths.n_paths * width,
            got: eta.len(),
        });
    }
    if snell.n_paths() != paths.n_paths {
        return Err(Error::DimensionMismatch {
            expected: paths.n_paths,
            got: snell.n_paths(),
        });
    }
    let mut out = Vec::with_capacity(paths.n_paths);
    for n in 0..paths.n_paths {
        let mut ok = true;
        for j in 0..width {
            let bound = snell.y(n, j) - paths.reward(n, j) + snell.a(n, j);
            if eta[n * width + j] > bound + 1e-12 {
                ok = false;
                break;
            }
        }
        out.push(ok);
    }
    Ok(out)
}

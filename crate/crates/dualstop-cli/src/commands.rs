//! The four subcommands: target values, LP minimization tables, profile
//! curves, and the structural-equivalence sweeps.

use std::path::PathBuf;

use dualstop_core::dual::{exact_moments, variance_profile};
use dualstop_core::families::{
    build_custom_basis, build_doob_scalar_basis, build_hermite_basis, build_stylized_basis,
    tree_doob_scalar_basis, BasisMatrix, HermiteSpec,
};
use dualstop_core::lp::{minimize_with_test, LPStatus};
use dualstop_core::models::{simulate, MarketModel, PathBundle, TreeModel};
use dualstop_core::optimality::{equivalence_sweep_with_law, sweep_on_trees, SweepReport};
use dualstop_core::randomize::RandomizerSpec;
use dualstop_core::snell::{
    backward_induct, bs_value, bs_value_and_snell, stylized_snell, z1_c1_crossing, SnellData,
};

use crate::config::{ExperimentConfig, FamilySpec, ModelSpec, RandomizerCfg};
use crate::error::{CliError, Result};
use crate::io;

/// Trials per tree in a verification sweep.
const SWEEP_TRIALS: usize = 25;

fn load_tree_model(config: &ExperimentConfig) -> Result<TreeModel> {
    match &config.model {
        ModelSpec::Tree { path } => io::load_tree(path),
        _ => Err(CliError::Config("expected a tree model".to_string())),
    }
}

fn simulate_with_snell(
    config: &ExperimentConfig,
    model: &MarketModel,
) -> Result<(PathBundle, SnellData)> {
    let paths = simulate(model, config.n_paths, config.seed)?;
    let snell = match model {
        MarketModel::Stylized(_) => stylized_snell(&paths)?,
        MarketModel::Bermudan(m) => bs_value_and_snell(m, &paths)?.1,
    };
    Ok((paths, snell))
}

fn build_basis(
    config: &ExperimentConfig,
    paths: &PathBundle,
    snell: &SnellData,
) -> Result<BasisMatrix> {
    match &config.family {
        FamilySpec::SingleDoobScalar => Ok(build_doob_scalar_basis(paths, snell)?),
        FamilySpec::Msty => Ok(build_stylized_basis(paths, snell)?),
        FamilySpec::Hermite { k, l } => {
            Ok(build_hermite_basis(paths, HermiteSpec { k: *k, l: *l })?)
        }
        FamilySpec::Custom { path } => {
            let columns = io::load_custom_columns(path)?;
            Ok(build_custom_basis(paths, &columns)?)
        }
    }
}

// ---------------------------------------------------------------------------
// value
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy)]
pub struct ValueReport {
    pub value: f64,
    pub abs_error: f64,
    pub method: &'static str,
}

/// Compute `Y*_0` for the configured model.
pub fn cmd_value(config: &ExperimentConfig) -> Result<ValueReport> {
    let report = match &config.model {
        ModelSpec::Stylized => ValueReport {
            value: 1.25,
            abs_error: 0.0,
            method: "closed form",
        },
        ModelSpec::Bermudan { .. } => {
            let model = match config.market_model()? {
                Some(MarketModel::Bermudan(m)) => m,
                _ => unreachable!("bermudan spec builds a bermudan model"),
            };
            let (value, abs_error) = bs_value(&model)?;
            ValueReport {
                value,
                abs_error,
                method: "adaptive quadrature",
            }
        }
        ModelSpec::Tree { .. } => {
            let tree = load_tree_model(config)?;
            let snell = backward_induct(&tree);
            ValueReport {
                value: snell.y0(),
                abs_error: 0.0,
                method: "backward induction",
            }
        }
    };
    println!(
        "Y*_0 = {:.6} ({}, |err| <= {:.1e})",
        report.value, report.method, report.abs_error
    );
    Ok(report)
}

// ---------------------------------------------------------------------------
// minimize
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub m_hat: f64,
    pub se_hat: f64,
    pub std_hat: f64,
    pub m_test: f64,
    pub se_test: f64,
    pub std_test: f64,
}

#[derive(Debug, Clone)]
pub struct MinimizeReport {
    pub alpha_hat: Vec<f64>,
    pub status: LPStatus,
    pub iterations: usize,
    pub row: TableRow,
    pub table_path: PathBuf,
}

/// Fit the martingale family by linear programming on a training bundle,
/// then re-price on an independent unrandomized test bundle.
pub fn cmd_minimize(config: &ExperimentConfig) -> Result<MinimizeReport> {
    let model = config.market_model()?.ok_or_else(|| {
        CliError::Config("minimize needs a simulated model, not a tree".to_string())
    })?;
    let (paths, snell) = simulate_with_snell(config, &model)?;
    let basis = build_basis(config, &paths, &snell)?;
    let spec = config.randomizer_spec()?;
    let (solution, in_sample, out_sample) = minimize_with_test(
        &paths,
        &basis,
        &spec,
        Some(&snell),
        config.seed.wrapping_add(1),
        config.n_test_paths,
    )?;
    if solution.status != LPStatus::Optimal {
        return Err(CliError::Numerical(format!(
            "LP terminated {} after {} iterations",
            solution.status, solution.iterations
        )));
    }
    let row = TableRow {
        m_hat: in_sample.mean,
        se_hat: in_sample.se,
        std_hat: in_sample.std,
        m_test: out_sample.mean,
        se_test: out_sample.se,
        std_test: out_sample.std,
    };
    let table_path = config.outdir.join("table.csv");
    io::write_csv(
        &table_path,
        &["m_hat", "se_hat", "std_hat", "m_test", "se_test", "std_test"],
        &[vec![
            row.m_hat, row.se_hat, row.std_hat, row.m_test, row.se_test, row.std_test,
        ]],
    )?;
    let alpha: Vec<String> = solution.alpha_hat.iter().map(|a| format!("{a:.6}")).collect();
    println!(
        "alpha_hat = [{}] ({} iterations)",
        alpha.join(", "),
        solution.iterations
    );
    println!(
        "m_hat {:.5}  se_hat {:.5}  std_hat {:.5}",
        row.m_hat, row.se_hat, row.std_hat
    );
    println!(
        "m_test {:.5}  se_test {:.5}  std_test {:.5}",
        row.m_test, row.se_test, row.std_test
    );
    println!("table written to {}", table_path.display());
    Ok(MinimizeReport {
        alpha_hat: solution.alpha_hat,
        status: solution.status,
        iterations: solution.iterations,
        row,
        table_path,
    })
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurveStat {
    pub mean: f64,
    pub std: f64,
    pub se: f64,
}

#[derive(Debug, Clone)]
pub struct ProfilePoint {
    pub alpha: Vec<f64>,
    pub none: CurveStat,
    pub optimal: CurveStat,
    pub naive: CurveStat,
}

#[derive(Debug, Clone)]
pub struct ProfileReport {
    pub y0: f64,
    pub points: Vec<ProfilePoint>,
    pub profile_path: PathBuf,
    pub crossing_path: Option<PathBuf>,
    pub crossing: Option<f64>,
}

fn grid_1d(from: f64, to: f64, step: f64) -> Vec<Vec<f64>> {
    let count = ((to - from) / step).round() as usize;
    (0..=count).map(|i| vec![from + step * i as f64]).collect()
}

fn optimal_theta(config: &ExperimentConfig) -> f64 {
    match &config.randomizer {
        RandomizerCfg::Optimal { theta, .. } => *theta,
        _ => 1.0,
    }
}

fn naive_theta(config: &ExperimentConfig, width: usize) -> Result<Vec<f64>> {
    let values = match &config.randomizer {
        RandomizerCfg::Naive {
            theta: Some(values),
            ..
        } => values.clone(),
        _ => match config.preset.as_deref() {
            Some(name) => crate::config::naive_theta_preset(name)?,
            None if matches!(config.model, ModelSpec::Stylized) => vec![0.16, 0.0, 0.0],
            None => {
                let mut values = vec![0.0; width];
                values[0] = 0.16;
                values
            }
        },
    };
    if values.len() != width {
        return Err(CliError::Config(format!(
            "naive randomizer needs {} scales (one per date), got {}",
            width,
            values.len()
        )));
    }
    Ok(values)
}

/// Objective and deviation curves for the three randomizations (none,
/// optimal, naive) over the family's standard grid, plus the date-1
/// reward/continuation crossing data for the Bermudan model.
pub fn cmd_profile(config: &ExperimentConfig) -> Result<ProfileReport> {
    let law = config.xi_law();
    let (y0, points) = match &config.model {
        ModelSpec::Tree { .. } => {
            let tree = load_tree_model(config)?;
            let snell = backward_induct(&tree);
            let basis = tree_doob_scalar_basis(&tree, &snell)?;
            let width = tree.horizon() + 1;
            let specs = [
                RandomizerSpec::none(),
                RandomizerSpec::optimal(optimal_theta(config)).with_law(law),
                RandomizerSpec::naive(naive_theta(config, width)?).with_law(law),
            ];
            let mut points = Vec::new();
            for alpha in grid_1d(-4.0, 3.0, 0.25) {
                let mut stats = Vec::with_capacity(3);
                for spec in &specs {
                    let m = exact_moments(&tree, &basis, &alpha, spec)?;
                    stats.push(CurveStat {
                        mean: m.mean,
                        std: m.variance.max(0.0).sqrt(),
                        se: 0.0,
                    });
                }
                points.push(ProfilePoint {
                    alpha,
                    none: stats[0],
                    optimal: stats[1],
                    naive: stats[2],
                });
            }
            (snell.y0(), points)
        }
        _ => {
            let model = config.market_model()?.expect("market model");
            let (paths, snell) = simulate_with_snell(config, &model)?;
            let y0 = snell.y0();
            let width = paths.horizon() + 1;
            let (basis, grid, expand): (_, Vec<Vec<f64>>, fn(&[f64]) -> Vec<f64>) =
                match (&config.family, &model) {
                    (FamilySpec::Msty, MarketModel::Bermudan(_)) => {
                        let mut grid = Vec::new();
                        for i in 0..=8 {
                            for j in 0..=8 {
                                grid.push(vec![0.25 * i as f64, 0.25 * j as f64]);
                            }
                        }
                        let basis = build_stylized_basis(&paths, &snell)?;
                        fn expand(a: &[f64]) -> Vec<f64> {
                            vec![a[0], a[0], a[1], a[1]]
                        }
                        (basis, grid, expand)
                    }
                    (FamilySpec::SingleDoobScalar, _) => {
                        let basis = build_doob_scalar_basis(&paths, &snell)?;
                        fn expand(a: &[f64]) -> Vec<f64> {
                            a.to_vec()
                        }
                        (basis, grid_1d(-4.0, 3.0, 0.25), expand)
                    }
                    _ => {
                        return Err(CliError::Config(
                            "profile grids are defined for the single_doob_scalar and msty \
                             families"
                                .to_string(),
                        ))
                    }
                };
            let full_grid: Vec<Vec<f64>> = grid.iter().map(|a| expand(a)).collect();
            let specs = [
                RandomizerSpec::none(),
                RandomizerSpec::optimal(optimal_theta(config)).with_law(law),
                RandomizerSpec::naive(naive_theta(config, width)?).with_law(law),
            ];
            let mut curves = Vec::with_capacity(3);
            for spec in &specs {
                curves.push(variance_profile(
                    &paths,
                    &basis,
                    &full_grid,
                    spec,
                    Some(&snell),
                    config.seed.wrapping_add(1),
                )?);
            }
            let points = grid
                .iter()
                .enumerate()
                .map(|(i, alpha)| {
                    let stat = |rows: &[dualstop_core::dual::ProfileRow]| CurveStat {
                        mean: rows[i].mean,
                        std: rows[i].std,
                        se: rows[i].se,
                    };
                    ProfilePoint {
                        alpha: alpha.clone(),
                        none: stat(&curves[0]),
                        optimal: stat(&curves[1]),
                        naive: stat(&curves[2]),
                    }
                })
                .collect();
            (y0, points)
        }
    };

    let n_alpha = points[0].alpha.len();
    let mut header: Vec<String> = (0..n_alpha).map(|k| format!("alpha_{k}")).collect();
    for curve in ["none", "optimal", "naive"] {
        for stat in ["mean", "std", "se", "reldev"] {
            header.push(format!("{curve}_{stat}"));
        }
    }
    let header_refs: Vec<&str> = header.iter().map(|s| s.as_str()).collect();
    let rows: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut row = p.alpha.clone();
            for stat in [&p.none, &p.optimal, &p.naive] {
                row.extend_from_slice(&[stat.mean, stat.std, stat.se, stat.std / y0]);
            }
            row
        })
        .collect();
    let profile_path = config.outdir.join("profile.csv");
    io::write_csv(&profile_path, &header_refs, &rows)?;
    println!(
        "profile written to {} ({} grid points)",
        profile_path.display(),
        rows.len()
    );

    let (crossing_path, crossing) = match config.market_model()? {
        Some(MarketModel::Bermudan(model)) => {
            let mut rows = Vec::new();
            for i in 0..=120 {
                let w = -3.0 + 0.05 * i as f64;
                let z1 = (model.s1(w) - model.kappa1).max(0.0);
                let c1 = dualstop_core::snell::black_continuation(&model, w)?;
                rows.push(vec![w, z1, c1]);
            }
            let path = config.outdir.join("crossing.csv");
            io::write_csv(&path, &["w1", "z1", "c1"], &rows)?;
            let crossing = z1_c1_crossing(&model)?;
            match crossing {
                Some(w) => println!("Z_1 crosses C_1 at w = {w:.6} ({})", path.display()),
                None => println!("Z_1 never crosses C_1 ({})", path.display()),
            }
            (Some(path), crossing)
        }
        _ => (None, None),
    };

    Ok(ProfileReport {
        y0,
        points,
        profile_path,
        crossing_path,
        crossing,
    })
}

// ---------------------------------------------------------------------------
// verify
// ---------------------------------------------------------------------------

#[derive(Debug)]
pub struct VerifyReport {
    pub sweep: SweepReport,
    pub json_path: PathBuf,
}

/// Run the predicate-versus-brute-force sweeps and persist the JSON
/// report; disagreements are a verification failure (exit 4).
pub fn cmd_verify(config: &ExperimentConfig) -> Result<VerifyReport> {
    let law = config.xi_law();
    let sweep = match &config.model {
        ModelSpec::Tree { .. } => {
            let tree = load_tree_model(config)?;
            sweep_on_trees(config.seed, &[tree], SWEEP_TRIALS, law)?
        }
        _ => equivalence_sweep_with_law(config.seed, SWEEP_TRIALS, law)?,
    };
    let json_path = config.outdir.join("sweep.json");
    io::write_json(&json_path, &io::sweep_to_json(&sweep))?;
    println!(
        "sweep: {} trials on {} trees, {} disagreements, {} findings ({})",
        sweep.trials.len(),
        sweep.n_trees,
        sweep.disagreements.len(),
        sweep.findings.len(),
        json_path.display()
    );
    if !sweep.all_agree() {
        return Err(CliError::Verification(format!(
            "{} of {} trials disagree with brute force; first: {}",
            sweep.disagreements.len(),
            sweep.trials.len(),
            sweep.disagreements[0]
        )));
    }
    Ok(VerifyReport { sweep, json_path })
}

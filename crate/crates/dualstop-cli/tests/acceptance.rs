//! Acceptance suite: one test per headline guarantee, each printing a
//! single summary line (visible with `--nocapture`).

use std::path::Path;
use std::time::{Duration, Instant};

use dualstop_cli::commands::TableRow;
use dualstop_cli::{cmd_minimize, cmd_value, resolve, ConfigFile, ExperimentConfig, Overrides};
use dualstop_core::dual::{estimate, exact_moments, exact_objective};
use dualstop_core::families::{
    build_custom_basis, build_doob_scalar_basis, build_hermite_basis, build_stylized_basis,
    tree_doob_scalar_basis, BasisMatrix, CustomColumn, HermiteSpec,
};
use dualstop_core::lp::{build_lp, objective_at, solve_lp, LPProblem, LPStatus};
use dualstop_core::models::{
    simulate, BermudanCallModel, MarketModel, PathBundle, StylizedModel, TreeModel,
};
use dualstop_core::optimality::{equivalence_sweep, sweep_trees, TrialKind};
use dualstop_core::randomize::{check_asl, make_eta, RandomizerSpec, XiLaw};
use dualstop_core::rng::StreamKey;
use dualstop_core::snell::{backward_induct, snell_for, stylized_snell, SnellData};

const TABLE_SEED: u64 = 54;

fn config(text: &str, dir: &Path, seed: u64) -> ExperimentConfig {
    let file: ConfigFile = serde_json::from_str(text).unwrap();
    let overrides = Overrides {
        preset: None,
        seed: Some(seed),
        out: Some(dir.to_path_buf()),
    };
    resolve(file, &overrides).unwrap()
}

fn stylized() -> MarketModel {
    MarketModel::Stylized(StylizedModel)
}

fn pa1() -> MarketModel {
    MarketModel::Bermudan(BermudanCallModel::new(2.0, 0.04, 2.0, 2.5).unwrap())
}

fn pa2() -> MarketModel {
    MarketModel::Bermudan(BermudanCallModel::new(2.0, 1.0 / 3.0, 2.0, 3.0).unwrap())
}

#[test]
fn criterion_1_stylized_exact_value() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(r#"{"preset": "stylized"}"#, dir.path(), 1);
    let report = cmd_value(&cfg).unwrap();
    assert_eq!(report.value, 1.25);

    let paths = simulate(&stylized(), 100_000, 11).unwrap();
    let snell = stylized_snell(&paths).unwrap();
    let basis = build_doob_scalar_basis(&paths, &snell).unwrap();
    let est = estimate(&paths, &basis, &[1.0], &RandomizerSpec::none(), Some(&snell), 11).unwrap();
    let dev = est
        .per_path_max
        .iter()
        .map(|v| (v - 1.25).abs())
        .fold(0.0, f64::max);
    assert!(dev < 1e-10, "max pathwise deviation {dev:e}");

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(1), "took {elapsed:?}");
    println!(
        "criterion 1 (stylized exact value): pass, value 1.25 exact, \
         max deviation {dev:.1e} over {} paths in {elapsed:?}",
        est.n
    );
}

#[test]
fn criterion_2_flat_region_agreement() {
    let tree = TreeModel::two_point_skewed();
    let snell = backward_induct(&tree);
    let basis = tree_doob_scalar_basis(&tree, &snell).unwrap();
    let none = RandomizerSpec::none();

    for a in [-4.0, -2.0, 0.0, 1.0, 2.0, 8.0 / 3.0] {
        let v = exact_objective(&tree, &basis, &[a], &none).unwrap();
        assert!((v - 1.25).abs() <= 1e-12, "alpha {a}: objective {v}");
    }
    for a in [-4.5, 3.0] {
        let v = exact_objective(&tree, &basis, &[a], &none).unwrap();
        assert!(v > 1.25 + 1e-6, "alpha {a}: objective {v} not above 1.25");
    }

    let paths = simulate(&stylized(), 100_000, 21).unwrap();
    let psnell = stylized_snell(&paths).unwrap();
    let pbasis = build_doob_scalar_basis(&paths, &psnell).unwrap();
    let cases = [
        (-4.0, 1.25),
        (-2.0, 1.25),
        (0.0, 1.25),
        (1.0, 1.25),
        (2.0, 1.25),
        (8.0 / 3.0, 1.25),
        (3.0, 161.0 / 128.0),
        (-4.5, 20339.0 / 15488.0),
    ];
    let mut worst = 0.0f64;
    for (a, expected) in cases {
        let est = estimate(&paths, &pbasis, &[a], &none, Some(&psnell), 21).unwrap();
        let err = (est.mean - expected).abs();
        assert!(
            err <= 3.0 * est.se + 1e-12,
            "alpha {a}: mean {} vs {expected}, se {}",
            est.mean,
            est.se
        );
        if est.se > 0.0 {
            worst = worst.max(err / est.se);
        }
    }
    println!(
        "criterion 2 (flat objective region): pass, exact on the two-point tree \
         and Monte Carlo within {worst:.2} se at every grid point"
    );
}

#[test]
fn criterion_3_optimal_randomization_uniqueness() {
    let tree = TreeModel::two_point_skewed();
    let snell = backward_induct(&tree);
    let basis = tree_doob_scalar_basis(&tree, &snell).unwrap();
    let spec = RandomizerSpec::optimal(1.0);

    let at_one = exact_moments(&tree, &basis, &[1.0], &spec).unwrap();
    assert!((at_one.mean - 1.25).abs() <= 1e-10, "mean {}", at_one.mean);
    assert!(at_one.variance.abs() <= 1e-10, "variance {}", at_one.variance);

    let mut min_gap = f64::INFINITY;
    for a in [-2.0, 0.0, 0.5, 1.5, 2.0] {
        let m = exact_moments(&tree, &basis, &[a], &spec).unwrap();
        assert!(m.mean > 1.25 + 1e-6, "alpha {a}: mean {}", m.mean);
        assert!(m.variance > 1e-10, "alpha {a}: variance {}", m.variance);
        min_gap = min_gap.min(m.mean - 1.25);
    }
    println!(
        "criterion 3 (unique randomized minimum): pass, zero mean gap and variance \
         at alpha = 1, smallest off-minimum gap {min_gap:.2e}"
    );
}

#[test]
fn criterion_4_bermudan_target_values() {
    let dir = tempfile::tempdir().unwrap();
    let mut details = Vec::new();
    for (preset, target) in [("pa1", 0.164402), ("pa2", 0.496182)] {
        let start = Instant::now();
        let cfg = config(&format!(r#"{{"preset": "{preset}"}}"#), dir.path(), 1);
        let report = cmd_value(&cfg).unwrap();
        let elapsed = start.elapsed();
        let err = (report.value - target).abs();
        assert!(err < 1e-5, "{preset}: value {} vs {target}", report.value);
        assert!(elapsed < Duration::from_secs(1), "{preset} took {elapsed:?}");
        details.push(format!("{preset} {:.6} ({elapsed:?})", report.value));
    }
    println!(
        "criterion 4 (continuation-value targets): pass, {}",
        details.join(", ")
    );
}

fn table_run(preset: &str, family: &str, randomized: bool, dir: &Path) -> TableRow {
    let randomizer = if randomized {
        r#"{"kind": "optimal", "theta": 1.0}"#
    } else {
        r#"{"kind": "none"}"#
    };
    let text = format!(
        r#"{{"preset": "{preset}", "family": {family}, "randomizer": {randomizer}}}"#
    );
    let cfg = config(&text, dir, TABLE_SEED);
    let report = cmd_minimize(&cfg).unwrap();
    assert_eq!(report.status, LPStatus::Optimal, "{preset} {family}");
    report.row
}

#[test]
fn criterion_5_variance_reduction_tables() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let msty = r#"{"kind": "msty"}"#;
    let herm = r#"{"kind": "hermite", "k": 3, "l": 3}"#;

    let pa1_m0 = table_run("pa1", msty, false, dir.path());
    let pa1_m1 = table_run("pa1", msty, true, dir.path());
    let pa1_h0 = table_run("pa1", herm, false, dir.path());
    let pa1_h1 = table_run("pa1", herm, true, dir.path());
    let pa2_m0 = table_run("pa2", msty, false, dir.path());
    let pa2_m1 = table_run("pa2", msty, true, dir.path());
    let pa2_h0 = table_run("pa2", herm, false, dir.path());
    let pa2_h1 = table_run("pa2", herm, true, dir.path());

    assert!(
        (0.20..=0.32).contains(&pa1_m0.std_test),
        "pa1 msty unrandomized sigma {}",
        pa1_m0.std_test
    );
    assert!(pa1_m1.std_test <= 0.03, "pa1 msty sigma {}", pa1_m1.std_test);
    assert!(
        (0.163..=0.166).contains(&pa1_m1.m_test),
        "pa1 msty mean {}",
        pa1_m1.m_test
    );
    assert!(pa1_h1.std_test <= 0.10, "pa1 hermite sigma {}", pa1_h1.std_test);
    assert!(pa2_m1.std_test <= 0.12, "pa2 msty sigma {}", pa2_m1.std_test);
    assert!(
        (0.493..=0.500).contains(&pa2_m1.m_test),
        "pa2 msty mean {}",
        pa2_m1.m_test
    );

    let ratios = [
        ("pa1 msty", pa1_m0.std_test / pa1_m1.std_test, 8.0),
        ("pa2 msty", pa2_m0.std_test / pa2_m1.std_test, 8.0),
        ("pa1 hermite", pa1_h0.std_test / pa1_h1.std_test, 4.0),
        ("pa2 hermite", pa2_h0.std_test / pa2_h1.std_test, 4.0),
    ];
    for (label, ratio, floor) in ratios {
        assert!(ratio >= floor, "{label}: variance-reduction ratio {ratio:.2}");
    }

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(300), "took {elapsed:?}");
    println!(
        "criterion 5 (test-sample tables): pass, pa1 msty {:.4}->{:.4} (x{:.1}), \
         pa1 hermite {:.4}->{:.4} (x{:.1}), pa2 msty {:.4}->{:.4} (x{:.1}), \
         pa2 hermite {:.4}->{:.4} (x{:.1}), means {:.5}/{:.5}, in {elapsed:?}",
        pa1_m0.std_test,
        pa1_m1.std_test,
        pa1_m0.std_test / pa1_m1.std_test,
        pa1_h0.std_test,
        pa1_h1.std_test,
        pa1_h0.std_test / pa1_h1.std_test,
        pa2_m0.std_test,
        pa2_m1.std_test,
        pa2_m0.std_test / pa2_m1.std_test,
        pa2_h0.std_test,
        pa2_h1.std_test,
        pa2_h0.std_test / pa2_h1.std_test,
        pa1_m1.m_test,
        pa2_m1.m_test,
    );
}

fn weak_duality_panel(model: &MarketModel, seed: u64) -> Vec<(&'static str, BasisMatrix, PathBundle, SnellData)> {
    let paths = simulate(model, 10_000, seed).unwrap();
    let snell = snell_for(&paths).unwrap();
    let mut panel = vec![(
        "single_doob_scalar",
        build_doob_scalar_basis(&paths, &snell).unwrap(),
        paths.clone(),
        snell.clone(),
    )];
    if matches!(model, MarketModel::Bermudan(_)) {
        panel.push((
            "msty",
            build_stylized_basis(&paths, &snell).unwrap(),
            paths.clone(),
            snell.clone(),
        ));
        panel.push((
            "hermite(3,3)",
            build_hermite_basis(&paths, HermiteSpec { k: 3, l: 3 }).unwrap(),
            paths,
            snell,
        ));
    }
    panel
}

#[test]
fn criterion_6_weak_duality() {
    let none = RandomizerSpec::none();
    let key = StreamKey::new(606, "acceptance-weak-duality");

    let mut panels = weak_duality_panel(&stylized(), 61);
    panels.extend(weak_duality_panel(&pa1(), 62));
    panels.extend(weak_duality_panel(&pa2(), 63));

    let mut checked = 0usize;
    let mut tightest = f64::INFINITY;
    for (combo, (label, basis, paths, snell)) in panels.iter().enumerate() {
        let y0 = snell.y0();
        for draw in 0..50u64 {
            let alpha: Vec<f64> = (0..basis.n_alpha)
                .map(|k| 6.0 * key.u01(draw, (combo * 32 + k) as u64) - 3.0)
                .collect();
            let est = estimate(paths, basis, &alpha, &none, Some(snell), 606).unwrap();
            let slack = est.mean + 3.0 * est.se - y0;
            assert!(slack >= 0.0, "{label} draw {draw}: mean {} se {} vs {y0}", est.mean, est.se);
            tightest = tightest.min(slack);
            checked += 1;
        }
    }

    for tree in [TreeModel::two_point_even(), TreeModel::two_point_skewed()] {
        let snell = backward_induct(&tree);
        let basis = tree_doob_scalar_basis(&tree, &snell).unwrap();
        for draw in 0..50u64 {
            let a = 12.0 * key.u01(draw, 1000) - 6.0;
            let v = exact_objective(&tree, &basis, &[a], &none).unwrap();
            assert!(v >= snell.y0() - 1e-12, "alpha {a}: objective {v}");
            checked += 1;
        }
    }
    println!(
        "criterion 6 (weak duality): pass over {checked} random coefficient draws, \
         tightest Monte Carlo slack {tightest:.2e}"
    );
}

#[test]
fn criterion_7_characterization_sweeps() {
    let start = Instant::now();
    let trees = sweep_trees(707);
    assert!(trees.len() >= 5);
    assert!(trees.iter().map(TreeModel::horizon).max().unwrap() >= 4);

    let report = equivalence_sweep(707, 25).unwrap();
    assert!(report.trials.len() >= 100);
    assert!(report.n_trees >= 5);
    assert!(report.all_agree(), "{:?}", report.disagreements);

    let violating: Vec<_> = report
        .trials
        .iter()
        .filter(|t| t.kind == TrialKind::Violating)
        .collect();
    assert!(!violating.is_empty());
    for t in &violating {
        assert!(
            !t.increment_ok && !t.weak_all_brute,
            "tree {} trial {} not flagged",
            t.tree,
            t.trial
        );
    }

    let elapsed = start.elapsed();
    assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
    println!(
        "criterion 7 (equivalence sweeps): pass, {} trials on {} trees agree, \
         {} forced violations all detected, in {elapsed:?}",
        report.trials.len(),
        report.n_trees,
        violating.len()
    );
}

#[test]
fn criterion_8_randomized_doob_sure_optimality() {
    let bundles = [
        simulate(&stylized(), 10_000, 808).unwrap(),
        simulate(&pa1(), 10_000, 809).unwrap(),
    ];
    let prepared: Vec<(PathBundle, SnellData, BasisMatrix)> = bundles
        .into_iter()
        .map(|paths| {
            let snell = snell_for(&paths).unwrap();
            let basis = build_doob_scalar_basis(&paths, &snell).unwrap();
            (paths, snell, basis)
        })
        .collect();

    let key = StreamKey::new(808, "acceptance-asl");
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        let theta = match i {
            0 => 0.0,
            1 => 1.0,
            _ => key.u01(i, 0),
        };
        let law = if i % 2 == 0 { XiLaw::Uniform } else { XiLaw::Texp };
        let spec = RandomizerSpec::optimal(theta).with_law(law);
        for (paths, snell, basis) in &prepared {
            let eta = make_eta(&spec, paths, Some(snell), 9000 + i).unwrap();
            let ok = check_asl(&eta, paths, snell).unwrap();
            assert!(ok.iter().all(|&b| b), "config {i} violates the bound");

            let est = estimate(paths, basis, &[1.0], &spec, Some(snell), 9000 + i).unwrap();
            let y0 = snell.y0();
            let dev = est
                .per_path_max
                .iter()
                .map(|v| (v - y0).abs())
                .fold(0.0, f64::max);
            assert!(dev <= 1e-9, "config {i}: max deviation {dev:e}");
            worst = worst.max(dev);
        }
    }
    println!(
        "criterion 8 (randomized sure optimality): pass, 20 admissible configurations \
         on two models, max pathwise deviation {worst:.1e}"
    );
}

fn grid_min_1d(problem: &LPProblem) -> f64 {
    let mut lo = -10.0;
    let mut hi = 10.0;
    let mut step = 1.0 / 128.0;
    let mut best = (f64::INFINITY, 0.0);
    for _ in 0..4 {
        let mut a = lo;
        while a <= hi + 0.5 * step {
            let v = objective_at(problem, &[a]);
            if v < best.0 {
                best = (v, a);
            }
            a += step;
        }
        lo = best.1 - step;
        hi = best.1 + step;
        step /= 32.0;
    }
    best.0
}

fn grid_min_2d(problem: &LPProblem) -> f64 {
    let mut center = [0.0, 0.0];
    let mut best = (f64::INFINITY, center);
    let mut half = 10.0;
    for stage in 0..6 {
        let m: i64 = if stage == 0 { 160 } else { 16 };
        let step = half / m as f64;
        for p in -m..=m {
            for q in -m..=m {
                let a = [
                    center[0] + p as f64 * step,
                    center[1] + q as f64 * step,
                ];
                let v = objective_at(problem, &a);
                if v < best.0 {
                    best = (v, a);
                }
            }
        }
        center = best.1;
        half = 2.0 * step;
    }
    best.0
}

#[test]
fn criterion_9_lp_grid_oracle() {
    let key = StreamKey::new(909, "acceptance-lp");
    let mut worst_gap = 0.0f64;
    let mut worst_tight = 0.0f64;
    for i in 0..20u64 {
        let n = 20 + (key.word(i, 0) % 31) as usize;
        let paths = simulate(&stylized(), n, 5000 + i).unwrap();
        let snell = stylized_snell(&paths).unwrap();
        let basis = if i % 2 == 0 {
            build_doob_scalar_basis(&paths, &snell).unwrap()
        } else {
            let columns = [
                CustomColumn {
                    increments: vec!["u - 1".to_string(), "0".to_string()],
                },
                CustomColumn {
                    increments: vec![
                        "(u - 1)*(u - 1) - 0.3333333333333333".to_string(),
                        "0".to_string(),
                    ],
                },
            ];
            build_custom_basis(&paths, &columns).unwrap()
        };
        let spec = if i % 4 < 2 {
            RandomizerSpec::none()
        } else {
            RandomizerSpec::optimal(0.7)
        };

        let problem = build_lp(&paths, &basis, &spec, Some(&snell), 6000 + i).unwrap();
        let solution = solve_lp(&problem);
        assert_eq!(solution.status, LPStatus::Optimal, "instance {i}");

        let oracle = if basis.n_alpha == 1 {
            grid_min_1d(&problem)
        } else {
            grid_min_2d(&problem)
        };
        let gap = (solution.objective_value - oracle).abs();
        assert!(gap <= 1e-4, "instance {i}: lp {} vs grid {oracle}", solution.objective_value);
        assert!(
            oracle >= solution.objective_value - 1e-9,
            "instance {i}: grid beat the lp by {:e}",
            solution.objective_value - oracle
        );

        let est = estimate(&paths, &basis, &solution.alpha_hat, &spec, Some(&snell), 6000 + i)
            .unwrap();
        let tight = (est.mean - solution.objective_value).abs();
        assert!(tight <= 1e-8, "instance {i}: epigraph mismatch {tight:e}");

        worst_gap = worst_gap.max(gap);
        worst_tight = worst_tight.max(tight);
    }
    println!(
        "criterion 9 (lp oracle): pass, 20 instances optimal, worst grid gap \
         {worst_gap:.1e}, worst epigraph mismatch {worst_tight:.1e}"
    );
}

//! Acceptance suite: one test per criterion, each printing a PASS line
//! with its measured values and asserting the stated budgets.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use phlab_cli::boundary_cmd::{self, BoundarySettings};
use phlab_cli::cordes_cmd::{basic_sweep, general_sweep, GAP_TOL};
use phlab_cli::estimate_cmd::{self, EstimateSettings};
use phlab_cli::identities_cmd::{
    calibrate_k, identity_residual, refinement_ok, slack_catalog_2d, slack_catalog_3d,
    slack_minimum, slack_pairs_2d, EXACT_TOL,
};
use phlab_core::analytic::AnalyticField;
use phlab_core::grid::GridDomain;
use phlab_core::profile::OperatorProfile;
use phlab_core::solver::{minimality_bound_check, solve, DirichletProblem};

const SEED: u64 = 42;

fn tmp_dir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("phlab-acceptance-{name}"));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

/// Criterion 1: basic gap sweep over n ∈ {2..6}, δ ∈ {0.25, 0.5, 1} with
/// 10⁵ admissible pairs each; every normalized gap at least −1e−9; under
/// 30 seconds.
#[test]
fn criterion_1_cordes_basic_sweep() {
    let start = Instant::now();
    let mut worst = f64::INFINITY;
    for n in 2..=6 {
        for &delta in &[0.25, 0.5, 1.0] {
            let sweep = basic_sweep(n, delta, 100_000, SEED).unwrap();
            assert_eq!(
                sweep.violations, 0,
                "n={n} delta={delta}: {} gap violations",
                sweep.violations
            );
            worst = worst.min(sweep.min_normalized_gap);
            if delta == 1.0 {
                assert!(
                    sweep.closed_form_dev <= GAP_TOL,
                    "closed-form cross-check failed: {}",
                    sweep.closed_form_dev
                );
            }
        }
    }
    let elapsed = start.elapsed();
    assert!(worst >= -GAP_TOL, "worst normalized gap {worst}");
    assert!(elapsed.as_secs_f64() < 30.0, "took {elapsed:?}");
    println!(
        "criterion 1 (basic Cordes sweep): PASS — min normalized gap {worst:.3e}, {elapsed:.2?}"
    );
}

/// Criterion 2: congruence-basis gap and transpose-product bound on 10⁵
/// random triples for n ∈ {2, 3, 4}; under 60 seconds.
#[test]
fn criterion_2_general_sweep() {
    let start = Instant::now();
    let mut worst_gap = f64::INFINITY;
    let mut worst_slack = f64::INFINITY;
    for n in 2..=4 {
        let sweep = general_sweep(n, 0.4, 100_000, SEED).unwrap();
        assert_eq!(sweep.gap_violations, 0, "n={n} gap violations");
        assert_eq!(sweep.transpose_violations, 0, "n={n} transpose violations");
        worst_gap = worst_gap.min(sweep.min_normalized_gap);
        worst_slack = worst_slack.min(sweep.min_transpose_slack);
    }
    let elapsed = start.elapsed();
    assert!(worst_gap >= -GAP_TOL && worst_slack >= -GAP_TOL);
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!(
        "criterion 2 (general Cordes + transpose bound): PASS — min gap {worst_gap:.3e}, min slack {worst_slack:.3e}, {elapsed:.2?}"
    );
}

/// Criterion 3: identity residuals vanish to 1e−12 on affine/quadratic
/// samples and decay at second order (±20%) on the smooth catalog over
/// h ∈ {1/32, 1/64, 1/128}; under 60 seconds.
#[test]
fn criterion_3_identity_suites() {
    let start = Instant::now();
    let grids = [32usize, 64, 128];

    let exact_scalar: Vec<String> = AnalyticField::exact_catalog()
        .iter()
        .map(|f| f.name())
        .collect();
    let smooth_scalar: Vec<String> = AnalyticField::smooth_catalog()
        .iter()
        .map(|f| f.name())
        .collect();
    let suites: Vec<(&str, Vec<String>, Vec<String>)> = vec![
        ("basic", exact_scalar.clone(), smooth_scalar.clone()),
        (
            "divstruct",
            vec!["identity_map".into(), "constant".into()],
            vec!["swirl".into(), "mixed".into()],
        ),
        ("infinity", exact_scalar, smooth_scalar),
    ];

    for (identity, exact_fields, smooth_fields) in &suites {
        for field in exact_fields {
            for &cells in &grids {
                let r = identity_residual(identity, field, cells).unwrap();
                assert!(
                    r <= EXACT_TOL,
                    "{identity}/{field} at {cells}: residual {r:e}"
                );
            }
        }
        for field in smooth_fields {
            let residuals: Vec<f64> = grids
                .iter()
                .map(|&cells| identity_residual(identity, field, cells).unwrap())
                .collect();
            assert!(
                refinement_ok(&residuals),
                "{identity}/{field}: residuals {residuals:?} not second order"
            );
        }
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 60.0, "took {elapsed:?}");
    println!("criterion 3 (identity suites): PASS — {elapsed:.2?}");
}

/// Criterion 4: gradient-field inequality slack stays above −K·h² on every
/// catalog field at h = 1/128 for the 2D profile grid, and for the 3D spot
/// check p = 4, β = 0 inside the window; under 120 seconds.
#[test]
fn criterion_4_key_inequality_slack() {
    let start = Instant::now();
    let eps = 1e-4;
    for (p, beta) in slack_pairs_2d() {
        for field in slack_catalog_2d() {
            let coarse: Vec<(usize, f64)> = [32usize, 64]
                .iter()
                .map(|&cells| {
                    (
                        cells,
                        slack_minimum(2, p, beta, eps, &field, cells).unwrap(),
                    )
                })
                .collect();
            let k = calibrate_k(&coarse);
            let min = slack_minimum(2, p, beta, eps, &field, 128).unwrap();
            let h = 1.0 / 128.0;
            assert!(
                min >= -k * h * h - 1e-9,
                "2d p={p} beta={beta} {}: min slack {min:e} vs budget {:e}",
                field.name(),
                -k * h * h
            );
        }
    }
    for field in slack_catalog_3d() {
        let coarse: Vec<(usize, f64)> = [12usize, 16]
            .iter()
            .map(|&cells| (cells, slack_minimum(3, 4.0, 0.0, eps, &field, cells).unwrap()))
            .collect();
        let k = calibrate_k(&coarse);
        let min = slack_minimum(3, 4.0, 0.0, eps, &field, 24).unwrap();
        let h = 1.0 / 24.0;
        assert!(
            min >= -k * h * h - 1e-9,
            "3d {}: min slack {min:e}",
            field.name()
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 120.0, "took {elapsed:?}");
    println!("criterion 4 (inequality slack budgets): PASS — {elapsed:.2?}");
}

// --- radial oracle for criterion 5 -------------------------------------
//
// The regularized radial equation on an annulus integrates to
// r·a(|u'|)u' = c, so u'(r) inverts the scalar flux map w ↦ (w²+ε)^{(p−2)/2}w
// at c/r and c is found by shooting on the outer boundary value. This path
// shares nothing with the grid minimizer.

struct RadialOracle {
    r0: f64,
    table: Vec<f64>,
    step: f64,
    u0: f64,
}

impl RadialOracle {
    fn build(p: f64, eps: f64, r0: f64, r1: f64, u0: f64, u1: f64) -> Self {
        let flux_inverse = |y: f64| -> f64 {
            if y <= 0.0 {
                return 0.0;
            }
            let f = |w: f64| (w * w + eps).powf((p - 2.0) / 2.0) * w;
            let fp = |w: f64| (w * w + eps).powf((p - 4.0) / 2.0) * ((p - 1.0) * w * w + eps);
            let mut hi = (y.powf(1.0 / (p - 1.0)) + 1.0) * 2.0;
            while f(hi) < y {
                hi *= 2.0;
            }
            let mut w = hi * 0.5;
            for _ in 0..100 {
                let err = f(w) - y;
                if err.abs() <= 1e-15 * (1.0 + y) {
                    break;
                }
                let mut next = w - err / fp(w);
                if !(0.0..=hi).contains(&next) {
                    next = if err > 0.0 { w * 0.5 } else { (w + hi) * 0.5 };
                }
                w = next;
            }
            w
        };

        let n = 8192usize;
        let step = (r1 - r0) / n as f64;
        let sweep = |c: f64| -> Vec<f64> {
            let mut table = vec![0.0f64; n + 1];
            for i in 0..n {
                let a = r0 + i as f64 * step;
                let inc = step / 6.0
                    * (flux_inverse(c / a)
                        + 4.0 * flux_inverse(c / (a + 0.5 * step))
                        + flux_inverse(c / (a + step)));
                table[i + 1] = table[i] + inc;
            }
            table
        };
        let target = u1 - u0;
        let mut c_hi = 1.0f64;
        while *sweep(c_hi).last().unwrap() < target {
            c_hi *= 2.0;
        }
        let mut c_lo = 0.0f64;
        for _ in 0..60 {
            let mid = 0.5 * (c_lo + c_hi);
            if *sweep(mid).last().unwrap() < target {
                c_lo = mid;
            } else {
                c_hi = mid;
            }
        }
        let table = sweep(0.5 * (c_lo + c_hi));
        Self {
            r0,
            table,
            step,
            u0,
        }
    }

    fn eval(&self, r: f64) -> f64 {
        let x = ((r - self.r0) / self.step).clamp(0.0, (self.table.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.table.len() - 2);
        let frac = x - i as f64;
        self.u0 + self.table[i] * (1.0 - frac) + self.table[i + 1] * frac
    }
}

/// Criterion 5: linear Dirichlet data is reproduced to 1e−10; the annulus
/// solution matches the radial shooting oracle within 1% at h = 1/256 and
/// ε = 1e−5; energy histories never increase and minimality holds in every
/// run; under 5 minutes.
#[test]
fn criterion_5_solver_exactness() {
    let start = Instant::now();

    // linear reproduction on the aligned square
    let dom = Arc::new(GridDomain::<f64>::square([0.0, 0.0], 1.0, 64).unwrap());
    let profile = OperatorProfile::new(3.0, 1e-4, 0.0).unwrap();
    let problem = DirichletProblem::new(dom, profile, &AnalyticField::Tilt).unwrap();
    let report = solve(&problem, 1e-10).unwrap();
    let mut linear_err = 0.0f64;
    for idx in report.u.defined_nodes() {
        linear_err = linear_err.max((report.u.value(idx) - problem.phi.value(idx)).abs());
    }
    assert!(linear_err <= 1e-10, "linear reproduction error {linear_err:e}");
    check_descent_and_minimality(&report, &problem);

    // annulus against the radial oracle
    let p = 3.0;
    let eps = 1e-5;
    let alpha = (p - 2.0) / (p - 1.0);
    let dom = Arc::new(GridDomain::<f64>::annulus([0.0, 0.0], 0.25, 1.0, 512).unwrap());
    assert!((dom.spacing() - 1.0 / 256.0).abs() < 1e-15);
    let profile = OperatorProfile::new(p, eps, 0.0).unwrap();
    let phi = AnalyticField::RadialPower { alpha };
    let problem = DirichletProblem::new(dom.clone(), profile, &phi).unwrap();
    let report = solve(&problem, 1e-8).unwrap();
    check_descent_and_minimality(&report, &problem);

    let oracle = RadialOracle::build(p, eps, 0.25, 1.0, 0.25f64.powf(alpha), 1.0);
    let mut max_err = 0.0f64;
    let mut max_val = 0.0f64;
    for idx in 0..dom.node_count() {
        if !dom.is_inside(idx) {
            continue;
        }
        let x = dom.node_pos(idx);
        let r = x[0].hypot(x[1]);
        let want = oracle.eval(r);
        max_val = max_val.max(want.abs());
        max_err = max_err.max((report.u.value(idx) - want).abs());
    }
    assert!(
        max_err <= 0.01 * max_val,
        "annulus oracle error {max_err:e} vs 1% of {max_val:e}"
    );

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "criterion 5 (solver exactness): PASS — linear {linear_err:.2e}, annulus {max_err:.3e} (1% budget {:.3e}), {elapsed:.2?}",
        0.01 * max_val
    );
}

fn check_descent_and_minimality(
    report: &phlab_core::solver::SolveReport<f64>,
    problem: &DirichletProblem<f64>,
) {
    for w in report.energy_history.windows(2) {
        assert!(w[1] <= w[0] + 1e-14, "energy increased: {w:?}");
    }
    assert!(minimality_bound_check(report, problem));
}

/// Criterion 6: on the unit disk with φ = sin(πx₁)sin(πx₂), the ratio
/// ‖Du‖_{W^{1,2}}/(‖Dφ‖_{W^{1,2}}+‖Dφ‖_{L^p}+ε) drifts by less than 10%
/// across ε ∈ {1e−2..1e−5} at h = 1/128 for p ∈ {1.5, 2, 2.5, 4}, and the
/// convex-square Hessian ratio stays bounded; under 10 minutes.
#[test]
fn criterion_6_global_estimate() {
    let start = Instant::now();
    let out = tmp_dir("estimate");
    let settings = EstimateSettings {
        p_list: vec![1.5, 2.0, 2.5, 4.0],
        eps_list: vec![1e-2, 1e-3, 1e-4, 1e-5],
        beta: 0.0,
        grids: vec![128],
        phi: AnalyticField::SinPiProduct,
        phi_square: AnalyticField::Poly4,
        tol: 1e-8,
        drift_limit: 0.10,
        hessian_ratio_cap: 50.0,
    };
    let outcome = estimate_cmd::run(&settings, &out).unwrap();
    for b in &outcome.budgets {
        assert!(
            b.pass(),
            "budget {} failed: measured {:e} vs limit {:e}",
            b.name,
            b.measured,
            b.limit
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 600.0, "took {elapsed:?}");
    println!(
        "criterion 6 (global estimate, no blow-up as eps -> 0): PASS — {} budgets, {elapsed:.2?}",
        outcome.budgets.len()
    );
}

/// Criterion 7: boundary suite — Grisvard residual ≤ 1e−6 at 512 samples
/// on circle and ellipse, convex flow nonpositive for 20 random normal
/// fields, condenser capacity within 3% of 2π/ln 4, rearrangement identity
/// to 1e−10 on 100 random step functions, concentration estimate
/// non-increasing over r ∈ {0.4, 0.2, 0.1, 0.05}; under 5 minutes.
#[test]
fn criterion_7_boundary_suite() {
    let start = Instant::now();
    let out = tmp_dir("boundary");
    let settings = BoundarySettings {
        samples: 512,
        cap_resolution: 48,
        k_radii: vec![0.4, 0.2, 0.1, 0.05],
        rho_list: vec![0.4, 0.2, 0.1],
        trace_radii: vec![0.2, 0.4],
        rearrangement_trials: 100,
        normal_fields: 20,
        seed: SEED,
    };
    let outcome = boundary_cmd::run(&settings, &out).unwrap();
    for b in &outcome.budgets {
        assert!(
            b.pass(),
            "budget {} failed: measured {:e} vs limit {:e}",
            b.name,
            b.measured,
            b.limit
        );
    }
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 300.0, "took {elapsed:?}");
    println!(
        "criterion 7 (boundary suite): PASS — {} budgets, {elapsed:.2?}",
        outcome.budgets.len()
    );
}

/// Criterion 8: every subcommand rerun with the same seed produces
/// byte-identical CSV files.
#[test]
fn criterion_8_deterministic_reruns() {
    let bin = env!("CARGO_BIN_EXE_phlab");
    let base = tmp_dir("determinism");

    let small_est = "[profile]\np = 2, 3\neps = 1e-2,1e-3\n[grid]\nsizes = 24\n";
    let small_solve = "[domain]\ntype = disk\n[profile]\np = 2.5\neps = 1e-3\n[grid]\nsizes = 24\n";
    let small_ids = "[identities]\ngrids = 16,32\nslack_grids = 16,32\nslack_grids_3d = 8,12\n";
    let small_cordes = "[cordes]\ntrials = 2000\n";
    let small_boundary = "[boundary]\nsamples = 128\ncap_resolution = 24\nk_radii = 0.4,0.2\nrho_list = 0.4,0.2\nrearrangement_trials = 10\nnormal_fields = 4\n";

    let cases: Vec<(&str, &str)> = vec![
        ("verify-cordes", small_cordes),
        ("verify-identities", small_ids),
        ("solve", small_solve),
        ("boundary-suite", small_boundary),
        ("global-estimate", small_est),
    ];

    for (subcommand, config_text) in cases {
        let cfg_path = base.join(format!("{subcommand}.cfg"));
        std::fs::write(&cfg_path, config_text).unwrap();
        let mut outputs = Vec::new();
        for run in 0..2 {
            let out = base.join(format!("{subcommand}-{run}"));
            let status = std::process::Command::new(bin)
                .args([
                    subcommand,
                    "--config",
                    cfg_path.to_str().unwrap(),
                    "--seed",
                    "42",
                    "--out",
                    out.to_str().unwrap(),
                ])
                .output()
                .unwrap();
            assert!(
                status.status.success(),
                "{subcommand} run {run} failed:\n{}\n{}",
                String::from_utf8_lossy(&status.stdout),
                String::from_utf8_lossy(&status.stderr)
            );
            outputs.push(out);
        }
        let mut compared = 0usize;
        for entry in std::fs::read_dir(&outputs[0]).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().and_then(|e| e.to_str()) != Some("csv") {
                continue;
            }
            let name = path.file_name().unwrap();
            let twin = outputs[1].join(name);
            let a = std::fs::read(&path).unwrap();
            let b = std::fs::read(&twin).unwrap();
            assert_eq!(
                a, b,
                "{subcommand}: {} differs between reruns",
                Path::new(name).display()
            );
            compared += 1;
        }
        assert!(compared > 0, "{subcommand} produced no CSV files");
    }
    println!("criterion 8 (deterministic reruns): PASS");
}

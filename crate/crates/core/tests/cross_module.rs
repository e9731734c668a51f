//! Cross-module checks that exercise the solver output through the field
//! calculus and the interior estimates.

use std::sync::Arc;

use phlab_core::analytic::AnalyticField;
use phlab_core::grid::GridDomain;
use phlab_core::profile::OperatorProfile;
use phlab_core::solver::{local_oscillation_check, norms, solve, DirichletProblem};

fn solve_annulus(cells: usize, p: f64) -> phlab_core::solver::SolveReport<f64> {
    let dom = Arc::new(GridDomain::<f64>::annulus([0.0, 0.0], 0.25, 1.0, cells).unwrap());
    let alpha = (p - 2.0) / (p - 1.0);
    let profile = OperatorProfile::new(p, 1e-4, 0.0).unwrap();
    let phi = AnalyticField::RadialPower { alpha };
    let problem = DirichletProblem::new(dom, profile, &phi).unwrap();
    solve(&problem, 1e-8).unwrap()
}

/// The first-order norms of the solved annulus profile settle under grid
/// refinement (within 2% between successive grids). The Hessian norm is
/// excluded here: the staircase boundary carries first-order data error,
/// which one-sided second-derivative stencils amplify in an O(h) band, so
/// ‖D²u‖ of a staircase solve is not a convergent quantity.
#[test]
fn annulus_norms_stable_under_refinement() {
    let p = 3.0;
    let coarse = solve_annulus(96, p);
    let fine = solve_annulus(192, p);
    let nc = norms(&coarse.u, Some(p)).unwrap();
    let nf = norms(&fine.u, Some(p)).unwrap();
    for (name, a, b) in [
        ("du_l2", nc.du_l2, nf.du_l2),
        ("du_lp", nc.du_lp, nf.du_lp),
    ] {
        let rel = (a - b).abs() / b;
        assert!(rel < 0.02, "{name}: {a} vs {b} (rel {rel})");
    }
    // the staircase exclusion layer for the Hessian norm shrinks with h
    assert!(nf.excluded_area <= nc.excluded_area + 1e-12);
}

/// On an aligned domain the boundary data is exact, so all the norms
/// including the Hessian stabilize under refinement.
#[test]
fn square_norms_stable_under_refinement() {
    let p = 2.5;
    let run = |cells: usize| {
        let dom = Arc::new(GridDomain::<f64>::square([0.0, 0.0], 1.0, cells).unwrap());
        let profile = OperatorProfile::new(p, 1e-4, 0.0).unwrap();
        let problem =
            DirichletProblem::new(dom, profile, &AnalyticField::Poly4).unwrap();
        solve(&problem, 1e-8).unwrap()
    };
    let nc = norms(&run(64).u, Some(p)).unwrap();
    let nf = norms(&run(128).u, Some(p)).unwrap();
    for (name, a, b) in [
        ("du_l2", nc.du_l2, nf.du_l2),
        ("d2u_l2", nc.d2u_l2, nf.d2u_l2),
        ("du_w12", nc.du_w12, nf.du_w12),
        ("du_lp", nc.du_lp, nf.du_lp),
    ] {
        let rel = (a - b).abs() / b;
        assert!(rel < 0.02, "{name}: {a} vs {b} (rel {rel})");
    }
    assert_eq!(nf.excluded_area, 0.0);
}

/// Interior oscillation ratios of the solved field stay bounded across a
/// family of balls at a fixed interior center.
#[test]
fn annulus_oscillation_ratio_bounded() {
    let report = solve_annulus(128, 2.5);
    let profile = OperatorProfile::new(2.5, 1e-4, 0.0).unwrap();
    let center = [0.625, 0.0];
    for r in [0.05, 0.1, 0.15] {
        let (lhs, rhs) = local_oscillation_check(&report.u, &profile, center, r).unwrap();
        assert!(lhs >= 0.0 && rhs > 0.0, "r={r}: lhs={lhs} rhs={rhs}");
        let ratio = lhs / (rhs / (r * r));
        assert!(
            ratio.is_finite() && ratio > 0.0 && ratio < 50.0,
            "r={r}: ratio {ratio}"
        );
    }
}

//! `verify-identities`: refinement studies of the pointwise identities and
//! the gradient-field inequality slack on the analytic catalog.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, Result};

use phlab_core::analytic::{AnalyticField, VectorExpr};
use phlab_core::field::{
    basic_identity_residual, divergence_structure_residual,
    infinity_laplacian_identity_residual, key_inequality_slack, young_split_check, ScalarField,
    VectorField,
};
use phlab_core::grid::GridDomain;
use phlab_core::profile::OperatorProfile;

use crate::config::ConfigFile;
use crate::report::{Budget, Csv, CsvField, Outcome};

/// Residual level treated as "exact to rounding": below it no convergence
/// order is measurable (or meaningful).
pub const EXACT_FLOOR: f64 = 5e-11;
/// Exactness budget for affine and quadratic samples.
pub const EXACT_TOL: f64 = 1e-12;
/// Acceptable range for the residual decay per grid halving (second-order
/// convergence within ±20%).
pub const ORDER_RATIO: (f64, f64) = (3.2, 4.8);

#[derive(Debug, Clone)]
pub struct IdentitySettings {
    pub grids: Vec<usize>,
    pub slack_grids: Vec<usize>,
    pub slack_grid_3d: Vec<usize>,
    pub eps: f64,
}

impl IdentitySettings {
    pub fn from_config(cfg: &ConfigFile) -> Result<Self> {
        Ok(Self {
            grids: cfg
                .usize_list("identities", "grids")?
                .unwrap_or_else(|| vec![32, 64, 128]),
            slack_grids: cfg
                .usize_list("identities", "slack_grids")?
                .unwrap_or_else(|| vec![32, 64, 128]),
            slack_grid_3d: cfg
                .usize_list("identities", "slack_grids_3d")?
                .unwrap_or_else(|| vec![12, 16, 24]),
            eps: cfg.f64("identities", "eps")?.unwrap_or(1e-4),
        })
    }
}

fn square(cells: usize) -> Result<Arc<GridDomain<f64>>> {
    Ok(Arc::new(
        GridDomain::square([0.0, 0.0], 1.0, cells).map_err(|e| anyhow!("{e}"))?,
    ))
}

fn cube(cells: usize) -> Result<Arc<GridDomain<f64>>> {
    Ok(Arc::new(
        GridDomain::cube([0.0, 0.0, 0.0], 1.0, cells).map_err(|e| anyhow!("{e}"))?,
    ))
}

/// Max-norm residual of one identity on one field at one resolution.
pub fn identity_residual(identity: &str, field_name: &str, cells: usize) -> Result<f64> {
    let dom = square(cells)?;
    let res = match identity {
        "basic" | "infinity" => {
            let expr = AnalyticField::parse(field_name).map_err(|e| anyhow!("{e}"))?;
            let u = ScalarField::from_analytic(&dom, &expr);
            if identity == "basic" {
                basic_identity_residual(&u).map_err(|e| anyhow!("{e}"))?
            } else {
                infinity_laplacian_identity_residual(&u).map_err(|e| anyhow!("{e}"))?
            }
        }
        "divstruct" => {
            let expr = parse_vector_expr(field_name)?;
            let x = VectorField::sample(&dom, |p| expr.value(p, 2));
            divergence_structure_residual(&x).map_err(|e| anyhow!("{e}"))?
        }
        other => return Err(anyhow!("unknown identity {other:?}")),
    };
    Ok(res.max_abs())
}

fn parse_vector_expr(name: &str) -> Result<VectorExpr> {
    match name {
        "identity_map" => Ok(VectorExpr::Identity),
        "constant" => Ok(VectorExpr::Constant),
        "swirl" => Ok(VectorExpr::Swirl),
        "mixed" => Ok(VectorExpr::Mixed),
        other => Err(anyhow!("unknown vector expression {other:?}")),
    }
}

/// Whether a residual sequence is acceptable: exact to rounding at the
/// finest grid, or decaying at second order between consecutive grids.
pub fn refinement_ok(residuals: &[f64]) -> bool {
    if residuals.last().is_some_and(|&r| r <= EXACT_FLOOR) {
        return true;
    }
    residuals.windows(2).all(|w| {
        if w[1] <= EXACT_FLOOR {
            return true;
        }
        let ratio = w[0] / w[1];
        (ORDER_RATIO.0..=ORDER_RATIO.1).contains(&ratio)
    })
}

/// Calibrates the slack budget constant K from coarse-grid minima: the
/// finest grid must satisfy min slack ≥ −K·h² − 1e−9.
pub fn calibrate_k(coarse: &[(usize, f64)]) -> f64 {
    let mut k: f64 = 1.0;
    for &(cells, min_slack) in coarse {
        let h = 1.0 / cells as f64;
        if min_slack < 0.0 {
            k = k.max(3.0 * (-min_slack) / (h * h));
        }
    }
    k
}

/// Minimum slack of the gradient-field inequality over the interior nodes.
pub fn slack_minimum(
    dim: usize,
    p: f64,
    beta: f64,
    eps: f64,
    field: &AnalyticField,
    cells: usize,
) -> Result<f64> {
    let dom = if dim == 2 { square(cells)? } else { cube(cells)? };
    let profile = OperatorProfile::new(p, eps, beta).map_err(|e| anyhow!("{e}"))?;
    let constants = profile
        .key_inequality_constants(dim)
        .map_err(|e| anyhow!("{e}"))?;
    let u = ScalarField::from_analytic(&dom, field);
    let slack =
        key_inequality_slack(&u, &profile, None, constants).map_err(|e| anyhow!("{e}"))?;
    Ok(slack.min_defined())
}

/// Scalar fields used by the 2D slack sweep.
pub fn slack_catalog_2d() -> Vec<AnalyticField> {
    let mut v = AnalyticField::exact_catalog();
    v.extend(AnalyticField::smooth_catalog());
    v
}

/// Scalar fields valid on the 3D cube.
pub fn slack_catalog_3d() -> Vec<AnalyticField> {
    vec![
        AnalyticField::Tilt,
        AnalyticField::HalfSquareNorm,
        AnalyticField::Saddle,
        AnalyticField::SinPiProduct,
        AnalyticField::Gaussian,
    ]
}

/// The (p, β) pairs of the 2D slack sweep: β = 0 and the profile-matched
/// exponent (p−2)/2 where it is admissible.
pub fn slack_pairs_2d() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &p in &[1.5, 2.0, 3.0, 6.0] {
        out.push((p, 0.0));
        let beta = (p - 2.0) / 2.0;
        if beta > -1.0 {
            out.push((p, beta));
        }
    }
    out
}

pub fn run(settings: &IdentitySettings, seed: u64, out_dir: &Path) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let mut csv = Csv::new(&["identity", "field", "cells", "max_residual"]);

    let scalar_exact: Vec<String> = AnalyticField::exact_catalog()
        .iter()
        .map(|f| f.name())
        .collect();
    let scalar_smooth: Vec<String> = AnalyticField::smooth_catalog()
        .iter()
        .map(|f| f.name())
        .collect();

    let suites: Vec<(&str, Vec<String>, Vec<String>)> = vec![
        ("basic", scalar_exact.clone(), scalar_smooth.clone()),
        (
            "divstruct",
            vec!["identity_map".into(), "constant".into()],
            vec!["swirl".into(), "mixed".into()],
        ),
        ("infinity", scalar_exact, scalar_smooth),
    ];

    for (identity, exact_fields, smooth_fields) in &suites {
        for field in exact_fields {
            let mut worst: f64 = 0.0;
            for &cells in &settings.grids {
                let r = identity_residual(identity, field, cells)?;
                worst = worst.max(r);
                csv.row(&[
                    CsvField::Str(identity),
                    CsvField::Str(field),
                    CsvField::Int(cells as i64),
                    CsvField::Num(r),
                ]);
            }
            outcome.push(Budget::at_most(
                format!("exact[{identity}/{field}]"),
                worst,
                EXACT_TOL,
            ));
        }
        for field in smooth_fields {
            let mut residuals = Vec::new();
            for &cells in &settings.grids {
                let r = identity_residual(identity, field, cells)?;
                residuals.push(r);
                csv.row(&[
                    CsvField::Str(identity),
                    CsvField::Str(field),
                    CsvField::Int(cells as i64),
                    CsvField::Num(r),
                ]);
            }
            outcome.push(Budget::at_least(
                format!("order[{identity}/{field}]"),
                if refinement_ok(&residuals) { 1.0 } else { 0.0 },
                1.0,
            ));
        }
    }
    let identities_path = out_dir.join("identities.csv");
    csv.write(&identities_path)?;
    outcome.record_file(identities_path);

    // gradient-field inequality slack, 2D sweep with per-case calibration
    let mut slack_csv = Csv::new(&["n", "p", "beta", "field", "cells", "min_slack", "k"]);
    let finest = *settings.slack_grids.last().unwrap();
    for (p, beta) in slack_pairs_2d() {
        for field in slack_catalog_2d() {
            let mut coarse = Vec::new();
            for &cells in &settings.slack_grids[..settings.slack_grids.len() - 1] {
                let min = slack_minimum(2, p, beta, settings.eps, &field, cells)?;
                coarse.push((cells, min));
                slack_csv.row(&[
                    CsvField::Int(2),
                    CsvField::Num(p),
                    CsvField::Num(beta),
                    CsvField::Str(&field.name()),
                    CsvField::Int(cells as i64),
                    CsvField::Num(min),
                    CsvField::Num(0.0),
                ]);
            }
            let k = calibrate_k(&coarse);
            let min = slack_minimum(2, p, beta, settings.eps, &field, finest)?;
            slack_csv.row(&[
                CsvField::Int(2),
                CsvField::Num(p),
                CsvField::Num(beta),
                CsvField::Str(&field.name()),
                CsvField::Int(finest as i64),
                CsvField::Num(min),
                CsvField::Num(k),
            ]);
            let h = 1.0 / finest as f64;
            outcome.push(Budget::at_least(
                format!("slack[2d,p={p},beta={beta},{}]", field.name()),
                min,
                -k * h * h - 1e-9,
            ));
        }
    }

    // 3D spot check inside the admissibility window
    let finest3 = *settings.slack_grid_3d.last().unwrap();
    for field in slack_catalog_3d() {
        let mut coarse = Vec::new();
        for &cells in &settings.slack_grid_3d[..settings.slack_grid_3d.len() - 1] {
            let min = slack_minimum(3, 4.0, 0.0, settings.eps, &field, cells)?;
            coarse.push((cells, min));
        }
        let k = calibrate_k(&coarse);
        let min = slack_minimum(3, 4.0, 0.0, settings.eps, &field, finest3)?;
        slack_csv.row(&[
            CsvField::Int(3),
            CsvField::Num(4.0),
            CsvField::Num(0.0),
            CsvField::Str(&field.name()),
            CsvField::Int(finest3 as i64),
            CsvField::Num(min),
            CsvField::Num(k),
        ]);
        let h = 1.0 / finest3 as f64;
        outcome.push(Budget::at_least(
            format!("slack[3d,p=4,{}]", field.name()),
            min,
            -k * h * h - 1e-9,
        ));
    }
    let slack_path = out_dir.join("slack.csv");
    slack_csv.write(&slack_path)?;
    outcome.record_file(slack_path);

    // quadratic-splitting sweep on seeded smooth fields
    let young_ok = young_sweep(seed)?;
    outcome.push(Budget::at_least(
        "young-split-sweep",
        if young_ok { 1.0 } else { 0.0 },
        1.0,
    ));

    // p = 2, β = 0 cross-check: the slack reduces to the basic identity
    let reduction_dev = p2_reduction_deviation(48, settings.eps)?;
    let h = 1.0 / 48.0;
    outcome.push(Budget::at_most(
        "p2-reduction-deviation",
        reduction_dev,
        300.0 * h * h + 1e-3,
    ));

    Ok(outcome)
}

/// Pointwise quadratic-splitting check on a family of seeded smooth fields.
pub fn young_sweep(seed: u64) -> Result<bool> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x70757);
    let dom = square(24)?;
    for _ in 0..8 {
        let (ax, ay, bx, by): (f64, f64, f64, f64) = (
            rng.gen::<f64>() * 3.0 - 1.5,
            rng.gen::<f64>() * 3.0 - 1.5,
            rng.gen::<f64>() * 3.0 - 1.5,
            rng.gen::<f64>() * 3.0 - 1.5,
        );
        let x = VectorField::sample(&dom, |p| {
            [(ax * p[0] + ay * p[1]).sin(), (ax * p[0] - ay * p[1]).cos(), 0.0]
        });
        let w = VectorField::sample(&dom, |p| {
            [(bx * p[1] + by).cos(), (bx * p[0] * p[1]).sin(), 0.0]
        });
        for &c in &[0.1, 0.25, 0.5] {
            if !young_split_check(&x, &w, c).map_err(|e| anyhow!("{e}"))? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}


/// Max deviation between the p = 2, β = 0 slack and its closed reduction
/// (1−c)|D²u|² + (C−1)(Δu)².
pub fn p2_reduction_deviation(cells: usize, eps: f64) -> Result<f64> {
    use phlab_core::field::{hessian_mode, mat_hs_norm2, mat_trace, StencilMode};
    let dom = square(cells)?;
    let profile = OperatorProfile::new(2.0, eps, 0.0).map_err(|e| anyhow!("{e}"))?;
    let (c, big_c) = profile
        .key_inequality_constants(2)
        .map_err(|e| anyhow!("{e}"))?;
    let u = ScalarField::from_analytic(&dom, &AnalyticField::SinCos);
    let slack =
        key_inequality_slack(&u, &profile, None, (c, big_c)).map_err(|e| anyhow!("{e}"))?;
    let h = hessian_mode(&u, StencilMode::CentralOnly).map_err(|e| anyhow!("{e}"))?;
    let mut max_dev = 0.0f64;
    for idx in slack.defined_nodes() {
        if !h.is_defined(idx) {
            continue;
        }
        let hm = h.value(idx);
        let lap = mat_trace(hm, 2);
        let formula = (1.0 - c) * mat_hs_norm2(hm, 2) + (big_c - 1.0) * lap * lap;
        max_dev = max_dev.max((slack.value(idx) - formula).abs());
    }
    Ok(max_dev)
}

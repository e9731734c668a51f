//! `boundary-suite`: boundary identity residuals, convex flow bounds, the
//! capacity oracle, rearrangement identities, curvature-concentration
//! trends and the weighted trace ratio.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phlab_core::boundary::{
    decreasing_rearrangement, grisvard_identity_residual, k_quantity, normal_extension_field,
    normal_flow_bound, relative_capacity, weighted_trace_check, AmbientField, BoundaryCurve,
    CurveShape,
};
use phlab_core::grid::GridDomain;
use phlab_core::solver::cutoff;

use crate::config::ConfigFile;
use crate::report::{Budget, Csv, CsvField, Outcome};
use crate::svg::{line_chart, Series};

#[derive(Debug, Clone)]
pub struct BoundarySettings {
    pub samples: usize,
    pub cap_resolution: usize,
    pub k_radii: Vec<f64>,
    pub rho_list: Vec<f64>,
    pub trace_radii: Vec<f64>,
    pub rearrangement_trials: usize,
    pub normal_fields: usize,
    pub seed: u64,
}

impl BoundarySettings {
    pub fn from_config(cfg: &ConfigFile, seed: u64) -> Result<Self> {
        Ok(Self {
            samples: cfg.usize("boundary", "samples")?.unwrap_or(512),
            cap_resolution: cfg.usize("boundary", "cap_resolution")?.unwrap_or(48),
            k_radii: cfg
                .f64_list("boundary", "k_radii")?
                .unwrap_or_else(|| vec![0.4, 0.2, 0.1, 0.05]),
            rho_list: cfg
                .f64_list("boundary", "rho_list")?
                .unwrap_or_else(|| vec![0.4, 0.2, 0.1]),
            trace_radii: cfg
                .f64_list("boundary", "trace_radii")?
                .unwrap_or_else(|| vec![0.2, 0.4]),
            rearrangement_trials: cfg
                .usize("boundary", "rearrangement_trials")?
                .unwrap_or(100),
            normal_fields: cfg.usize("boundary", "normal_fields")?.unwrap_or(20),
            seed,
        })
    }
}

/// Max Grisvard residual over the circle and the (2,1)-ellipse for a
/// generic smooth field with analytic Jacobian.
pub fn grisvard_max_residual(samples: usize) -> Result<f64> {
    let field = AmbientField::with_jacobian(
        |x: [f64; 2]| {
            [
                (x[0] + 0.3 * x[1]).sin() + 0.2,
                (x[0] - x[1]).cos() - 0.1 * x[0],
            ]
        },
        |x: [f64; 2]| {
            let c1 = (x[0] + 0.3 * x[1]).cos();
            let s2 = (x[0] - x[1]).sin();
            [[c1, 0.3 * c1], [-s2 - 0.1, s2]]
        },
    );
    let mut worst = 0.0f64;
    for shape in [
        CurveShape::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        },
        CurveShape::Ellipse { a: 2.0, b: 1.0 },
    ] {
        let curve = BoundaryCurve::<f64>::from_shape(shape, samples).map_err(|e| anyhow!("{e}"))?;
        let res = grisvard_identity_residual(&curve, &field).map_err(|e| anyhow!("{e}"))?;
        worst = worst.max(res.iter().fold(0.0f64, |a, &b| a.max(b.abs())));
    }
    Ok(worst)
}

/// Largest flow value (should be ≤ 0 on convex curves) and largest excess
/// of |flow| over |κ||X|², over seeded random normal fields on convex
/// catalog curves.
pub fn convex_flow_extremes(samples: usize, fields: usize, seed: u64) -> Result<(f64, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xf10a);
    let shapes = [
        CurveShape::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        },
        CurveShape::Ellipse { a: 1.5, b: 1.0 },
    ];
    let mut max_flow = f64::NEG_INFINITY;
    let mut max_excess = f64::NEG_INFINITY;
    for k in 0..fields {
        let shape = shapes[k % shapes.len()];
        let curve = BoundaryCurve::<f64>::from_shape(shape, samples).map_err(|e| anyhow!("{e}"))?;
        let (a0, a1, a2, ph) = (
            0.5 + rng.gen::<f64>(),
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() * std::f64::consts::TAU,
        );
        let g = move |t: f64| a0 + a1 * (t + ph).sin() + a2 * (2.0 * t - ph).cos();
        let field = normal_extension_field(shape, g).map_err(|e| anyhow!("{e}"))?;
        let (flow, bound) = normal_flow_bound(&curve, &field).map_err(|e| anyhow!("{e}"))?;
        for i in 0..flow.len() {
            max_flow = max_flow.max(flow[i]);
            max_excess = max_excess.max(flow[i].abs() - bound[i]);
        }
    }
    Ok((max_flow, max_excess))
}

/// Relative error of the discrete condenser capacity against the closed
/// form 2π/ln(1/ρ) for the concentric circle of radius ρ = 1/4.
pub fn capacity_oracle_error(resolution: usize) -> Result<f64> {
    let rho = 0.25f64;
    let m = 1024;
    let e: Vec<[f64; 2]> = (0..m)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / m as f64;
            [rho * t.cos(), rho * t.sin()]
        })
        .collect();
    let cap = relative_capacity(&e, [0.0, 0.0], resolution).map_err(|e| anyhow!("{e}"))?;
    let exact = std::f64::consts::TAU / (1.0f64 / rho).ln();
    Ok((cap - exact).abs() / exact)
}

/// Worst rearrangement-identity error |∫ψ* − ∫|ψ|| over seeded random step
/// functions.
pub fn rearrangement_worst_error(trials: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e5e);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let n = 64 + (rng.gen::<u64>() % 192) as usize;
        let levels = 1 + (rng.gen::<u64>() % 6) as usize;
        let mut psi = vec![0.0f64; n];
        for _ in 0..levels {
            let lo = (rng.gen::<u64>() as usize) % n;
            let hi = lo + 1 + (rng.gen::<u64>() as usize) % (n - lo).max(1);
            let val = rng.gen::<f64>() * 6.0 - 3.0;
            for v in psi.iter_mut().take(hi.min(n)).skip(lo) {
                *v = val;
            }
        }
        let ds = 0.005 + rng.gen::<f64>() * 0.05;
        let re = decreasing_rearrangement(&psi, ds);
        let direct: f64 = psi.iter().map(|v| v.abs()).sum::<f64>() * ds;
        worst = worst.max((re.total_integral() - direct).abs() / (1.0 + direct));
    }
    worst
}

pub fn run(settings: &BoundarySettings, out_dir: &Path) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let mut csv = Csv::new(&["check", "parameter", "value"]);

    // boundary identity residual budget
    let grisvard = grisvard_max_residual(settings.samples)?;
    csv.row(&[
        CsvField::Str("grisvard_max_residual"),
        CsvField::Num(settings.samples as f64),
        CsvField::Num(grisvard),
    ]);
    outcome.push(Budget::at_most("grisvard-residual", grisvard, 1e-6));

    // convex flow nonpositivity and curvature bound
    let (max_flow, max_excess) =
        convex_flow_extremes(settings.samples, settings.normal_fields, settings.seed)?;
    csv.row(&[
        CsvField::Str("convex_max_flow"),
        CsvField::Num(settings.normal_fields as f64),
        CsvField::Num(max_flow),
    ]);
    outcome.push(Budget::at_most("convex-flow-nonpositive", max_flow, 1e-8));
    outcome.push(Budget::at_most("flow-curvature-bound", max_excess, 1e-8));

    // condenser capacity against the closed form
    let cap_err = capacity_oracle_error(settings.cap_resolution.max(64))?;
    csv.row(&[
        CsvField::Str("capacity_rel_error"),
        CsvField::Num(0.25),
        CsvField::Num(cap_err),
    ]);
    outcome.push(Budget::at_most("capacity-oracle", cap_err, 0.03));

    // rearrangement identity on random step functions
    let re_err = rearrangement_worst_error(settings.rearrangement_trials, settings.seed);
    csv.row(&[
        CsvField::Str("rearrangement_identity_error"),
        CsvField::Num(settings.rearrangement_trials as f64),
        CsvField::Num(re_err),
    ]);
    outcome.push(Budget::at_most("rearrangement-identity", re_err, 1e-10));

    // curvature concentration trend on the circle: non-increasing as r → 0
    let circle = BoundaryCurve::<f64>::from_shape(
        CurveShape::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        },
        settings.samples.min(256),
    )
    .map_err(|e| anyhow!("{e}"))?;
    let mut k_values = Vec::new();
    for &r in &settings.k_radii {
        let k = k_quantity(&circle, r, settings.cap_resolution).map_err(|e| anyhow!("{e}"))?;
        k_values.push((r, k));
        csv.row(&[
            CsvField::Str("k_quantity_circle"),
            CsvField::Num(r),
            CsvField::Num(k),
        ]);
    }
    let mut monotone = true;
    for w in k_values.windows(2) {
        // radii are listed decreasing; the estimate must not increase
        if w[1].1 > w[0].1 * (1.0 + 1e-9) {
            monotone = false;
        }
    }
    outcome.push(Budget::at_least(
        "k-trend-circle-nonincreasing",
        if monotone { 1.0 } else { 0.0 },
        1.0,
    ));

    // rounded square: sharper corners concentrate curvature
    let r_fixed = 0.3;
    let mut k_by_rho = Vec::new();
    for &rho in &settings.rho_list {
        let curve = BoundaryCurve::<f64>::from_shape(
            CurveShape::RoundedSquare { half: 1.0, rho },
            settings.samples.min(256),
        )
        .map_err(|e| anyhow!("{e}"))?;
        let k = k_quantity(&curve, r_fixed, settings.cap_resolution).map_err(|e| anyhow!("{e}"))?;
        k_by_rho.push((rho, k));
        csv.row(&[
            CsvField::Str("k_quantity_rounded_square"),
            CsvField::Num(rho),
            CsvField::Num(k),
        ]);
    }
    let mut rho_monotone = true;
    for w in k_by_rho.windows(2) {
        // rho decreasing: the estimate must not decrease
        if w[1].1 < w[0].1 * (1.0 - 1e-9) {
            rho_monotone = false;
        }
    }
    outcome.push(Budget::at_least(
        "k-trend-corner-sharpening",
        if rho_monotone { 1.0 } else { 0.0 },
        1.0,
    ));

    // weighted trace ratio on a disk boundary patch, stable across radii
    let domain = Arc::new(
        GridDomain::<f64>::disk([0.0, 0.0], 1.0, 64).map_err(|e| anyhow!("{e}"))?,
    );
    let center = [1.0f64, 0.0];
    let mut ratios = Vec::new();
    for &r in &settings.trace_radii {
        let v = cutoff(&domain, center, r / 2.0);
        let (lhs, rhs_factor) = weighted_trace_check(
            &v,
            &domain,
            &circle,
            center,
            r,
            settings.cap_resolution,
        )
        .map_err(|e| anyhow!("{e}"))?;
        let ratio = if rhs_factor > 0.0 { lhs / rhs_factor } else { 0.0 };
        ratios.push(ratio);
        csv.row(&[
            CsvField::Str("weighted_trace_ratio"),
            CsvField::Num(r),
            CsvField::Num(ratio),
        ]);
    }
    let spread = if ratios.iter().all(|&r| r > 0.0) {
        let max = ratios.iter().cloned().fold(f64::MIN, f64::max);
        let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
        max / min
    } else {
        f64::INFINITY
    };
    outcome.push(Budget::at_most("trace-ratio-stability", spread, 3.0));

    let csv_path = out_dir.join("boundary.csv");
    csv.write(&csv_path)?;
    outcome.record_file(csv_path);

    let svg_path = out_dir.join("k_vs_r.svg");
    line_chart(
        &svg_path,
        "curvature concentration vs radius (unit circle)",
        &[Series {
            label: "K(r)".into(),
            points: k_values.iter().map(|&(r, k)| (r, k)).collect(),
        }],
    )?;
    outcome.record_file(svg_path);

    // rearrangement-invariant norms of the curvature per catalog curve
    // (the n = 2 summability condition reads off the Zygmund column)
    let mut weak_csv = Csv::new(&["curve", "lorentz_q2_kappa", "zygmund_kappa"]);
    for shape in [
        CurveShape::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        },
        CurveShape::Ellipse { a: 2.0, b: 1.0 },
        CurveShape::RoundedSquare {
            half: 1.0,
            rho: 0.25,
        },
        CurveShape::Bean,
    ] {
        let curve = BoundaryCurve::<f64>::from_shape(shape, settings.samples.min(256))
            .map_err(|e| anyhow!("{e}"))?;
        let kappa: Vec<f64> = curve.samples().iter().map(|s| s.kappa).collect();
        let (lorentz, zygmund) = phlab_core::boundary::weak_norms(&kappa, curve.spacing(), 2.0)
            .map_err(|e| anyhow!("{e}"))?;
        weak_csv.row(&[
            CsvField::Str(&shape.name()),
            CsvField::Num(lorentz),
            CsvField::Num(zygmund),
        ]);
        outcome.push(Budget::at_most(
            format!("weak-norms-finite[{}]", shape.name()),
            if lorentz.is_finite() && zygmund.is_finite() {
                0.0
            } else {
                1.0
            },
            0.0,
        ));
    }
    let weak_path = out_dir.join("weak_norms.csv");
    weak_csv.write(&weak_path)?;
    outcome.record_file(weak_path);

    // boundary data export for the catalog curves
    let mut curve_csv = Csv::new(&["curve", "s", "x", "y", "nu_x", "nu_y", "kappa"]);
    for shape in [
        CurveShape::Circle {
            center: [0.0, 0.0],
            radius: 1.0,
        },
        CurveShape::Ellipse { a: 2.0, b: 1.0 },
        CurveShape::RoundedSquare {
            half: 1.0,
            rho: 0.25,
        },
        CurveShape::Bean,
    ] {
        let curve =
            BoundaryCurve::<f64>::from_shape(shape, 64).map_err(|e| anyhow!("{e}"))?;
        let name = shape.name();
        for (i, s) in curve.samples().iter().enumerate() {
            curve_csv.row(&[
                CsvField::Str(&name),
                CsvField::Num(i as f64 * curve.spacing()),
                CsvField::Num(s.pos[0]),
                CsvField::Num(s.pos[1]),
                CsvField::Num(s.normal[0]),
                CsvField::Num(s.normal[1]),
                CsvField::Num(s.kappa),
            ]);
        }
    }
    let curves_path = out_dir.join("curves.csv");
    curve_csv.write(&curves_path)?;
    outcome.record_file(curves_path);

    Ok(outcome)
}

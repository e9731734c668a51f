//! `global-estimate`: solves the regularized Dirichlet problem across an
//! ε-sequence and checks that the gradient-norm ratio stays uniformly
//! bounded as ε → 0, on the disk and on the convex square.

use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use anyhow::{anyhow, Result};

use phlab_core::analytic::AnalyticField;
use phlab_core::field::{self, VectorField};
use phlab_core::solver::{norms, solve_with_init, DirichletProblem, FieldNorms};

use crate::config::{grid_sizes, phi_expr, ConfigFile, DomainSpec, ProfileSpec};
use crate::report::{Budget, Csv, CsvField, Outcome};
use crate::svg::{line_chart, Series};

#[derive(Debug, Clone)]
pub struct EstimateSettings {
    pub p_list: Vec<f64>,
    pub eps_list: Vec<f64>,
    pub beta: f64,
    pub grids: Vec<usize>,
    pub phi: AnalyticField,
    /// Dirichlet data for the convex-square check; the default disk data
    /// has zero trace on the unit square, which would make the Hessian
    /// ratio vacuous there.
    pub phi_square: AnalyticField,
    pub tol: f64,
    /// Allowed relative drift of the ratio across the ε-sequence.
    pub drift_limit: f64,
    /// Hard cap treated as "bounded" for the convex-domain Hessian ratio.
    pub hessian_ratio_cap: f64,
}

impl EstimateSettings {
    pub fn from_config(
        cfg: &ConfigFile,
        grid_flag: Option<Vec<usize>>,
        eps_flag: Option<Vec<f64>>,
    ) -> Result<Self> {
        let profile = ProfileSpec::from_config(cfg, eps_flag)?;
        let p_list = if cfg.get("profile", "p").is_some() {
            profile.p_list.clone()
        } else {
            vec![1.5, 2.0, 2.5, 4.0]
        };
        let eps_list = if cfg.get("profile", "eps").is_some() || profile.eps_list.len() > 1 {
            profile.eps_list.clone()
        } else {
            vec![1e-2, 1e-3, 1e-4, 1e-5]
        };
        Ok(Self {
            p_list,
            eps_list,
            beta: profile.beta,
            grids: grid_sizes(cfg, grid_flag, &[128])?,
            phi: phi_expr(cfg, AnalyticField::SinPiProduct)?,
            phi_square: match cfg.get("phi", "square_name") {
                None => AnalyticField::Poly4,
                Some(name) => AnalyticField::parse(name).map_err(|e| anyhow!("{e}"))?,
            },
            tol: cfg.f64("solver", "tol")?.unwrap_or(1e-8),
            drift_limit: cfg.f64("estimate", "drift_limit")?.unwrap_or(0.10),
            hessian_ratio_cap: cfg.f64("estimate", "hessian_ratio_cap")?.unwrap_or(50.0),
        })
    }
}

/// One solved run of the sweep.
pub struct EstimateRecord {
    pub domain: &'static str,
    pub p: f64,
    pub cells: usize,
    pub eps: f64,
    pub u_norms: FieldNorms<f64>,
    pub phi_norms: FieldNorms<f64>,
    /// ‖Du‖_{W^{1,2}} / (‖Dφ‖_{W^{1,2}} + ‖Dφ‖_{L^p} + ε)
    pub ratio: f64,
    /// ∫|D²u|² / ∫|D²φ|²
    pub hessian_ratio: f64,
    /// L² distance of Du to the previous (larger) ε solution
    pub cauchy_tail: f64,
}

/// Runs the ε-sweep for one (domain, p, grid); solutions are warm-started
/// from the previous ε.
pub fn eps_sweep(
    domain_name: &'static str,
    spec: &DomainSpec,
    p: f64,
    beta: f64,
    cells: usize,
    eps_list: &[f64],
    phi: &AnalyticField,
    tol: f64,
) -> Result<Vec<EstimateRecord>> {
    let domain = Arc::new(spec.build(cells)?);
    let mut records = Vec::new();
    let mut prev_u = None;
    let mut prev_grad: Option<VectorField<f64>> = None;
    for &eps in eps_list {
        let profile = phlab_core::profile::OperatorProfile::new(p, eps, beta)
            .map_err(|e| anyhow!("{e}"))?;
        let problem = DirichletProblem::new(domain.clone(), profile, phi)
            .map_err(|e| anyhow!("{e}"))?;
        let t0 = Instant::now();
        let report = solve_with_init(&problem, tol, prev_u.as_ref())
            .map_err(|e| anyhow!("solve(p={p}, eps={eps:e}, cells={cells}): {e}"))?;
        let elapsed = t0.elapsed();

        let u_norms = norms(&report.u, Some(p)).map_err(|e| anyhow!("{e}"))?;
        let phi_norms = norms(&problem.phi, Some(p)).map_err(|e| anyhow!("{e}"))?;
        let ratio = u_norms.du_w12 / (phi_norms.du_w12 + phi_norms.du_lp + eps);
        let hessian_ratio = (u_norms.d2u_l2 * u_norms.d2u_l2)
            / (phi_norms.d2u_l2 * phi_norms.d2u_l2).max(1e-300);

        let grad = field::gradient(&report.u).map_err(|e| anyhow!("{e}"))?;
        let cauchy_tail = match &prev_grad {
            None => f64::NAN,
            Some(g0) => {
                let h2 = domain.spacing() * domain.spacing();
                let mut s = 0.0;
                for idx in 0..domain.node_count() {
                    if g0.is_defined(idx) && grad.is_defined(idx) {
                        for k in 0..2 {
                            s += (g0.value(idx)[k] - grad.value(idx)[k]).powi(2) * h2;
                        }
                    }
                }
                s.sqrt()
            }
        };
        println!(
            "{domain_name} p={p} cells={cells} eps={eps:e}: {} iterations in {:.2?}, ratio {ratio:.4}",
            report.iterations, elapsed
        );

        prev_grad = Some(grad);
        prev_u = Some(report.u.clone());
        records.push(EstimateRecord {
            domain: domain_name,
            p,
            cells,
            eps,
            u_norms,
            phi_norms,
            ratio,
            hessian_ratio,
            cauchy_tail,
        });
    }
    Ok(records)
}

/// Relative drift (max−min)/min of the ratio across an ε-sweep.
pub fn ratio_drift(records: &[EstimateRecord]) -> f64 {
    let max = records.iter().map(|r| r.ratio).fold(f64::MIN, f64::max);
    let min = records.iter().map(|r| r.ratio).fold(f64::MAX, f64::min);
    if min > 0.0 {
        (max - min) / min
    } else {
        f64::INFINITY
    }
}


pub fn run(settings: &EstimateSettings, out_dir: &Path) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let mut csv = Csv::new(&[
        "domain",
        "p",
        "cells",
        "eps",
        "du_w12_u",
        "du_w12_phi",
        "du_lp_phi",
        "ratio",
        "hessian_ratio",
        "cauchy_tail",
        "excluded_area",
    ]);

    let disk = DomainSpec::Disk {
        center: [0.0, 0.0],
        radius: 1.0,
    };
    let square = DomainSpec::Square {
        origin: [0.0, 0.0],
        side: 1.0,
    };

    let mut ratio_series: Vec<Series> = Vec::new();
    for (domain_name, spec) in [("disk", &disk), ("square", &square)] {
        let phi = if domain_name == "square" {
            &settings.phi_square
        } else {
            &settings.phi
        };
        for &p in &settings.p_list {
            for &cells in &settings.grids {
                let records = eps_sweep(
                    domain_name,
                    spec,
                    p,
                    settings.beta,
                    cells,
                    &settings.eps_list,
                    phi,
                    settings.tol,
                )?;
                for r in &records {
                    csv.row(&[
                        CsvField::Str(r.domain),
                        CsvField::Num(r.p),
                        CsvField::Int(r.cells as i64),
                        CsvField::Num(r.eps),
                        CsvField::Num(r.u_norms.du_w12),
                        CsvField::Num(r.phi_norms.du_w12),
                        CsvField::Num(r.phi_norms.du_lp),
                        CsvField::Num(r.ratio),
                        CsvField::Num(r.hessian_ratio),
                        CsvField::Num(if r.cauchy_tail.is_nan() {
                            -1.0
                        } else {
                            r.cauchy_tail
                        }),
                        CsvField::Num(r.u_norms.excluded_area),
                    ]);
                }

                let drift = ratio_drift(&records);
                outcome.push(Budget::at_most(
                    format!("ratio-drift[{domain_name},p={p},cells={cells}]"),
                    drift,
                    settings.drift_limit,
                ));

                // Cauchy tail of Du along the ε-sequence decreases
                let tails: Vec<f64> = records
                    .iter()
                    .filter(|r| !r.cauchy_tail.is_nan())
                    .map(|r| r.cauchy_tail)
                    .collect();
                let tail_monotone = tails.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9));
                outcome.push(Budget::at_least(
                    format!("cauchy-tail[{domain_name},p={p},cells={cells}]"),
                    if tail_monotone { 1.0 } else { 0.0 },
                    1.0,
                ));

                if domain_name == "square" {
                    // convex domain: the Hessian ratio stays bounded as ε → 0
                    let max_hr = records
                        .iter()
                        .map(|r| r.hessian_ratio)
                        .fold(f64::MIN, f64::max);
                    outcome.push(Budget::at_most(
                        format!("hessian-ratio[square,p={p},cells={cells}]"),
                        max_hr,
                        settings.hessian_ratio_cap,
                    ));
                }

                if cells == *settings.grids.last().unwrap() {
                    ratio_series.push(Series {
                        label: format!("{domain_name} p={p}"),
                        points: records
                            .iter()
                            .map(|r| (r.eps.log10(), r.ratio))
                            .collect(),
                    });
                }
            }
        }
    }

    let csv_path = out_dir.join("estimates.csv");
    csv.write(&csv_path)?;
    outcome.record_file(csv_path);

    let svg_path = out_dir.join("ratio_vs_eps.svg");
    line_chart(
        &svg_path,
        "gradient-norm ratio vs log10(eps)",
        &ratio_series,
    )?;
    outcome.record_file(svg_path);

    Ok(outcome)
}

//! `solve`: one Dirichlet problem from a problem-definition file, with the
//! solution snapshot, energy history and norms written as CSV.

use std::path::Path;
use std::sync::Arc;

use anyhow::{anyhow, Result};

use phlab_core::analytic::AnalyticField;
use phlab_core::solver::{minimality_bound_check, norms, solve, DirichletProblem};

use crate::config::{grid_sizes, phi_expr, ConfigFile, DomainSpec, ProfileSpec};
use crate::report::{Budget, Csv, CsvField, Outcome};

pub struct SolveSettings {
    pub domain: DomainSpec,
    pub profile: ProfileSpec,
    pub phi: AnalyticField,
    pub cells: usize,
    pub tol: f64,
}

impl SolveSettings {
    pub fn from_config(
        cfg: &ConfigFile,
        grid_flag: Option<Vec<usize>>,
        eps_flag: Option<Vec<f64>>,
    ) -> Result<Self> {
        let domain = DomainSpec::from_config(cfg)?;
        let profile = ProfileSpec::from_config(cfg, eps_flag)?;
        let phi = phi_expr(cfg, AnalyticField::SinPiProduct)?;
        let cells = *grid_sizes(cfg, grid_flag, &[64])?.last().unwrap();
        let tol = cfg.f64("solver", "tol")?.unwrap_or(1e-8);
        Ok(Self {
            domain,
            profile,
            phi,
            cells,
            tol,
        })
    }
}

pub fn run(settings: &SolveSettings, out_dir: &Path) -> Result<Outcome> {
    let mut outcome = Outcome::default();
    let p = settings.profile.p_list[0];
    let eps = settings.profile.eps_list[0];
    let profile = settings.profile.profile(p, eps)?;
    let domain = Arc::new(settings.domain.build(settings.cells)?);
    let problem = DirichletProblem::new(domain, profile, &settings.phi)
        .map_err(|e| anyhow!("{e}"))?;

    let report = solve(&problem, settings.tol).map_err(|e| anyhow!("solve failed: {e}"))?;

    // solution snapshot
    let mut buf = Vec::new();
    report.u.write_csv(&mut buf)?;
    let solution_path = out_dir.join("solution.csv");
    std::fs::create_dir_all(out_dir)?;
    let tmp = solution_path.with_extension("csv.tmp");
    std::fs::write(&tmp, &buf)?;
    std::fs::rename(&tmp, &solution_path)?;
    outcome.record_file(solution_path);

    let mut hist = Csv::new(&["iteration", "energy"]);
    for (i, e) in report.energy_history.iter().enumerate() {
        hist.row(&[CsvField::Int(i as i64), CsvField::Num(*e)]);
    }
    let hist_path = out_dir.join("energy_history.csv");
    hist.write(&hist_path)?;
    outcome.record_file(hist_path);

    let n = norms(&report.u, Some(p)).map_err(|e| anyhow!("{e}"))?;
    let n_phi = norms(&problem.phi, Some(p)).map_err(|e| anyhow!("{e}"))?;
    let mut norms_csv = Csv::new(&[
        "field",
        "du_l2",
        "d2u_l2",
        "du_w12",
        "du_lp",
        "excluded_area",
    ]);
    for (name, v) in [("u", &n), ("phi", &n_phi)] {
        norms_csv.row(&[
            CsvField::Str(name),
            CsvField::Num(v.du_l2),
            CsvField::Num(v.d2u_l2),
            CsvField::Num(v.du_w12),
            CsvField::Num(v.du_lp),
            CsvField::Num(v.excluded_area),
        ]);
    }
    let norms_path = out_dir.join("norms.csv");
    norms_csv.write(&norms_path)?;
    outcome.record_file(norms_path);

    // descent and minimality hold in every successful run
    let monotone = report
        .energy_history
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-14);
    outcome.push(Budget::at_least(
        "energy-history-nonincreasing",
        if monotone { 1.0 } else { 0.0 },
        1.0,
    ));
    outcome.push(Budget::at_least(
        "minimality",
        if minimality_bound_check(&report, &problem) {
            1.0
        } else {
            0.0
        },
        1.0,
    ));
    outcome.push(Budget::at_most(
        "final-residual",
        report.final_residual,
        settings.tol,
    ));
    println!(
        "solved: {} iterations, final residual {:.3e}",
        report.iterations, report.final_residual
    );
    Ok(outcome)
}

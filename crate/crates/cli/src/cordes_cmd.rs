//! `verify-cordes`: randomized sweeps of the matrix gap inequalities.

use std::path::Path;

use anyhow::Result;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use phlab_core::matrix::{
    basic_cordes_gap, general_cordes_gap, transpose_product_bound, CordesCertificate,
};
use phlab_core::sampling;

use crate::config::ConfigFile;
use crate::report::{Budget, Csv, CsvField, Outcome};

#[derive(Debug, Clone)]
pub struct CordesSettings {
    pub trials: usize,
    pub dims: Vec<usize>,
    pub deltas: Vec<f64>,
    pub general_dims: Vec<usize>,
    pub seed: u64,
}

impl CordesSettings {
    pub fn from_config(cfg: &ConfigFile, seed: u64) -> Result<Self> {
        Ok(Self {
            trials: cfg.usize("cordes", "trials")?.unwrap_or(100_000),
            dims: cfg
                .usize_list("cordes", "dims")?
                .unwrap_or_else(|| vec![2, 3, 4, 5, 6]),
            deltas: cfg
                .f64_list("cordes", "deltas")?
                .unwrap_or_else(|| vec![0.25, 0.5, 1.0]),
            general_dims: cfg
                .usize_list("cordes", "general_dims")?
                .unwrap_or_else(|| vec![2, 3, 4]),
            seed,
        })
    }
}

/// Result of the basic sweep for one (n, δ) cell.
pub struct BasicSweep {
    pub n: usize,
    pub delta: f64,
    pub trials: usize,
    pub min_normalized_gap: f64,
    pub violations: usize,
    /// Worst deviation of the δ = 1 family from its closed-form gap |M|²/2
    /// (zero for δ < 1 sweeps).
    pub closed_form_dev: f64,
}

/// Normalized gap tolerance of the sweeps.
pub const GAP_TOL: f64 = 1e-9;

/// Runs the basic gap sweep for one (n, δ).
pub fn basic_sweep(n: usize, delta: f64, trials: usize, seed: u64) -> Result<BasicSweep> {
    let mut rng = ChaCha8Rng::seed_from_u64(
        seed ^ (n as u64).wrapping_mul(0x9e37_79b9) ^ (delta.to_bits().rotate_left(17)),
    );
    let cert = CordesCertificate::new(n, delta)?;
    let mut min_gap = f64::INFINITY;
    let mut violations = 0usize;
    let mut closed_form_dev = 0.0f64;
    for _ in 0..trials {
        let a = sampling::random_admissible::<f64, _>(n, delta, &mut rng)?;
        let m = sampling::random_symmetric::<f64, _>(n, &mut rng);
        let gap = basic_cordes_gap(&a, &m, &cert)?;
        let m2 = m.hs_inner(&m);
        let normalized = gap / (1.0 + m2);
        min_gap = min_gap.min(normalized);
        if normalized < -GAP_TOL {
            violations += 1;
        }
        if delta == 1.0 {
            // the δ = 1 family is exactly the positive multiples of the
            // identity; there the gap has the closed form |M|²/2
            closed_form_dev =
                closed_form_dev.max((gap - 0.5 * m2).abs() / (1.0 + m2));
        }
    }
    Ok(BasicSweep {
        n,
        delta,
        trials,
        min_normalized_gap: min_gap,
        violations,
        closed_form_dev,
    })
}

/// Result of the general-basis sweep for one dimension.
pub struct GeneralSweep {
    pub n: usize,
    pub trials: usize,
    pub min_normalized_gap: f64,
    pub gap_violations: usize,
    pub min_transpose_slack: f64,
    pub transpose_violations: usize,
}

/// Runs the congruence-basis gap sweep and the transpose-product bound for
/// one dimension.
pub fn general_sweep(n: usize, delta: f64, trials: usize, seed: u64) -> Result<GeneralSweep> {
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x517c_c1b7) ^ 0xabcd);
    let cert = CordesCertificate::new(n, delta)?;
    let mut min_gap = f64::INFINITY;
    let mut gap_violations = 0usize;
    let mut min_slack = f64::INFINITY;
    let mut transpose_violations = 0usize;
    for _ in 0..trials {
        let b = sampling::random_spd::<f64, _>(n, &mut rng);
        let a = sampling::random_admissible_wrt(n, delta, &b, &mut rng)?;
        let m = sampling::random_symmetric::<f64, _>(n, &mut rng);

        let gap = general_cordes_gap(&a, &b, &m, &cert)?;
        let bm = b.to_sq().matmul(&m.to_sq());
        let scale = 1.0 + bm.transpose_inner();
        let normalized = gap / scale;
        min_gap = min_gap.min(normalized);
        if normalized < -GAP_TOL {
            gap_violations += 1;
        }

        let (lhs, rhs) = transpose_product_bound(&b, &m)?;
        let slack = (rhs - lhs) / (1.0 + rhs.abs());
        min_slack = min_slack.min(slack);
        if slack < -GAP_TOL {
            transpose_violations += 1;
        }
    }
    Ok(GeneralSweep {
        n,
        trials,
        min_normalized_gap: min_gap,
        gap_violations,
        min_transpose_slack: min_slack,
        transpose_violations,
    })
}

/// Full `verify-cordes` run: per-cell sweeps, CSV reports and budgets.
pub fn run(settings: &CordesSettings, out_dir: &Path) -> Result<Outcome> {
    let mut outcome = Outcome::default();

    let mut basic_csv = Csv::new(&[
        "n",
        "delta",
        "trials",
        "min_normalized_gap",
        "violations",
        "closed_form_dev",
    ]);
    for &n in &settings.dims {
        for &delta in &settings.deltas {
            let sweep = basic_sweep(n, delta, settings.trials, settings.seed)?;
            basic_csv.row(&[
                CsvField::Int(n as i64),
                CsvField::Num(delta),
                CsvField::Int(sweep.trials as i64),
                CsvField::Num(sweep.min_normalized_gap),
                CsvField::Int(sweep.violations as i64),
                CsvField::Num(sweep.closed_form_dev),
            ]);
            outcome.push(Budget::at_least(
                format!("basic-gap[n={n},delta={delta}]"),
                sweep.min_normalized_gap,
                -GAP_TOL,
            ));
            if delta == 1.0 {
                outcome.push(Budget::at_most(
                    format!("identity-family-closed-form[n={n}]"),
                    sweep.closed_form_dev,
                    GAP_TOL,
                ));
            }
        }
    }
    let basic_path = out_dir.join("cordes_basic.csv");
    basic_csv.write(&basic_path)?;
    outcome.record_file(basic_path);

    let mut general_csv = Csv::new(&[
        "n",
        "trials",
        "min_normalized_gap",
        "gap_violations",
        "min_transpose_slack",
        "transpose_violations",
    ]);
    for &n in &settings.general_dims {
        let sweep = general_sweep(n, 0.4, settings.trials, settings.seed)?;
        general_csv.row(&[
            CsvField::Int(n as i64),
            CsvField::Int(sweep.trials as i64),
            CsvField::Num(sweep.min_normalized_gap),
            CsvField::Int(sweep.gap_violations as i64),
            CsvField::Num(sweep.min_transpose_slack),
            CsvField::Int(sweep.transpose_violations as i64),
        ]);
        outcome.push(Budget::at_least(
            format!("general-gap[n={n}]"),
            sweep.min_normalized_gap,
            -GAP_TOL,
        ));
        outcome.push(Budget::at_least(
            format!("transpose-bound[n={n}]"),
            sweep.min_transpose_slack,
            -GAP_TOL,
        ));
    }
    let general_path = out_dir.join("cordes_general.csv");
    general_csv.write(&general_path)?;
    outcome.record_file(general_path);

    Ok(outcome)
}

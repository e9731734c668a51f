//! Batch harness for the p-harmonic regularity laboratory: reproducible
//! experiments over the matrix inequalities, identity suites, the energy
//! minimizer and the boundary toolbox, with deterministic CSV reports and
//! SVG charts.

pub mod boundary_cmd;
pub mod config;
pub mod cordes_cmd;
pub mod estimate_cmd;
pub mod identities_cmd;
pub mod report;
pub mod solve_cmd;
pub mod svg;

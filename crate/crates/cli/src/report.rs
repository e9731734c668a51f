//! Deterministic CSV output and pass/fail budget bookkeeping.
//!
//! Every CSV starts with a versioned schema line and is written atomically
//! (temp file, then rename). Float formatting is fixed so a rerun with the
//! same seed produces byte-identical files; wall-clock data never enters
//! the CSVs.

use std::fmt::Write as FmtWrite;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub const CSV_SCHEMA: &str = "# phlab-csv v1";

/// In-memory CSV builder with the fixed schema header.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        let mut buf = String::new();
        buf.push_str(CSV_SCHEMA);
        buf.push('\n');
        buf.push_str(&columns.join(","));
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[CsvField]) {
        let mut first = true;
        for f in fields {
            if !first {
                self.buf.push(',');
            }
            first = false;
            match f {
                CsvField::Str(s) => self.buf.push_str(s),
                CsvField::Int(v) => {
                    write!(self.buf, "{v}").unwrap();
                }
                CsvField::Num(v) => {
                    write!(self.buf, "{v:.12e}").unwrap();
                }
            }
        }
        self.buf.push('\n');
    }

    /// Writes atomically: the file appears complete or not at all.
    pub fn write(&self, path: &Path) -> Result<()> {
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
        let tmp = path.with_extension("csv.tmp");
        fs::write(&tmp, self.buf.as_bytes())
            .with_context(|| format!("writing {}", tmp.display()))?;
        fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
        Ok(())
    }
}

pub enum CsvField<'a> {
    Str(&'a str),
    Int(i64),
    Num(f64),
}

/// One asserted budget: a measured value against its limit.
#[derive(Debug, Clone)]
pub struct Budget {
    pub name: String,
    pub measured: f64,
    pub limit: f64,
    pub kind: BudgetKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetKind {
    /// measured ≤ limit
    AtMost,
    /// measured ≥ limit
    AtLeast,
}

impl Budget {
    pub fn at_most(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            limit,
            kind: BudgetKind::AtMost,
        }
    }

    pub fn at_least(name: impl Into<String>, measured: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            measured,
            limit,
            kind: BudgetKind::AtLeast,
        }
    }

    pub fn pass(&self) -> bool {
        match self.kind {
            BudgetKind::AtMost => self.measured <= self.limit,
            BudgetKind::AtLeast => self.measured >= self.limit,
        }
    }
}

/// Collected results of one subcommand run.
#[derive(Debug, Default)]
pub struct Outcome {
    pub budgets: Vec<Budget>,
    pub files: Vec<PathBuf>,
}

impl Outcome {
    pub fn push(&mut self, budget: Budget) {
        self.budgets.push(budget);
    }

    pub fn record_file(&mut self, path: PathBuf) {
        self.files.push(path);
    }

    pub fn all_pass(&self) -> bool {
        self.budgets.iter().all(Budget::pass)
    }

    pub fn failures(&self) -> Vec<&Budget> {
        self.budgets.iter().filter(|b| !b.pass()).collect()
    }

    /// Prints every budget with its measured value, one line each.
    pub fn print(&self) {
        for b in &self.budgets {
            let op = match b.kind {
                BudgetKind::AtMost => "<=",
                BudgetKind::AtLeast => ">=",
            };
            println!(
                "budget {}: measured = {:.6e} {} limit = {:.6e} -> {}",
                b.name,
                b.measured,
                op,
                b.limit,
                if b.pass() { "PASS" } else { "FAIL" }
            );
        }
        for f in &self.files {
            println!("wrote {}", f.display());
        }
    }
}

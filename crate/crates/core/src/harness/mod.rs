//! Study orchestration: fixtures and refinement families, the property
//! suites and their JSON/CSV artifacts.

mod config;
mod suites;

use std::path::Path;

use serde::Serialize;

pub use config::{bounding_box, exterior_points, DegreePolicy, MeshSource, StudyConfig, Thresholds};

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Algebraic,
    Poincare,
    Interpolation,
    Rates,
    EfieConvergence,
    Extinction,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Algebraic,
        Suite::Poincare,
        Suite::Interpolation,
        Suite::Rates,
        Suite::EfieConvergence,
        Suite::Extinction,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Algebraic => "algebraic",
            Suite::Poincare => "poincare",
            Suite::Interpolation => "interpolation",
            Suite::Rates => "rates",
            Suite::EfieConvergence => "efie-convergence",
            Suite::Extinction => "extinction",
        }
    }
}

impl std::str::FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL.into_iter().find(|x| x.as_str() == s).ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    AtMost,
    AtLeast,
    Above,
}

/// One asserted invariant.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub identity: String,
    pub measured: f64,
    pub threshold: f64,
    pub comparison: Comparison,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(identity: impl Into<String>, measured: f64, comparison: Comparison, threshold: f64) -> Self {
        let passed = match comparison {
            Comparison::AtMost => measured <= threshold,
            Comparison::AtLeast => measured >= threshold,
            Comparison::Above => measured > threshold,
        };
        Self { identity: identity.into(), measured, threshold, comparison, passed, detail: String::new() }
    }

    pub fn at_most(identity: impl Into<String>, measured: f64, threshold: f64) -> Self {
        Self::new(identity, measured, Comparison::AtMost, threshold)
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = d.into();
        self
    }

    pub fn describe(&self) -> String {
        let op = match self.comparison {
            Comparison::AtMost => "<=",
            Comparison::AtLeast => ">=",
            Comparison::Above => ">",
        };
        let mut s = format!("{}: measured {:.3e}, required {op} {:.3e}", self.identity, self.measured, self.threshold);
        if !self.detail.is_empty() {
            s.push_str(&format!(" ({})", self.detail));
        }
        s
    }
}

/// Outcome of one suite run. Contains no timings, so identical inputs give
/// identical JSON.
#[derive(Clone, Debug, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub mesh: String,
    pub kind: String,
    pub levels: usize,
    pub seed: u64,
    pub passed: bool,
    pub first_failure: Option<String>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
    pub data: serde_json::Value,
    #[serde(skip)]
    pub rates_csv: Option<String>,
}

impl SuiteReport {
    fn new(suite: Suite, cfg: &StudyConfig) -> Self {
        Self {
            suite,
            mesh: cfg.mesh_label(),
            kind: cfg.kind.as_str().to_string(),
            levels: cfg.levels,
            seed: cfg.seed,
            passed: true,
            first_failure: None,
            checks: Vec::new(),
            warnings: Vec::new(),
            data: serde_json::Value::Null,
            rates_csv: None,
        }
    }

    fn push(&mut self, c: Check) {
        if c.passed {
            log::info!("pass  {}", c.describe());
        } else {
            log::error!("FAIL  {}", c.describe());
        }
        self.checks.push(c);
    }

    fn finish(mut self) -> Self {
        self.passed = self.checks.iter().all(|c| c.passed);
        self.first_failure = self.checks.iter().find(|c| !c.passed).map(Check::describe);
        self
    }

    pub fn check(&self, identity: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.identity == identity)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

/// Run one suite. Errors are configuration or numerical failures that
/// prevent the suite from producing measurements at all.
pub fn run_suite(cfg: &StudyConfig, suite: Suite) -> Result<SuiteReport> {
    cfg.validate()?;
    let mut report = SuiteReport::new(suite, cfg);
    match suite {
        Suite::Algebraic => suites::algebraic(cfg, &mut report)?,
        Suite::Poincare => suites::poincare(cfg, &mut report)?,
        Suite::Interpolation => suites::interpolation(cfg, &mut report)?,
        Suite::Rates => suites::rates(cfg, &mut report)?,
        Suite::EfieConvergence => suites::efie_convergence(cfg, &mut report)?,
        Suite::Extinction => suites::extinction(cfg, &mut report)?,
    }
    let report = report.finish();
    if let Some(dir) = &cfg.out_dir {
        write_artifacts(&report, dir)?;
    }
    Ok(report)
}

/// `report.json`, plus `rates.csv` when the suite produced a rate table.
pub fn write_artifacts(report: &SuiteReport, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let mut json = serde_json::to_string_pretty(report)?;
    json.push('\n');
    std::fs::write(dir.join("report.json"), json)?;
    if let Some(csv) = &report.rates_csv {
        std::fs::write(dir.join("rates.csv"), csv)?;
    }
    Ok(())
}

/// Cap the worker count of the global pool. Only the first call has an
/// effect.
pub fn configure_threads(threads: usize) -> Result<()> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

#[cfg(test)]
mod tests;

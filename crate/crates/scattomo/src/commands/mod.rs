//! One function per subcommand. Each writes its data files and a JSON report into the output
//! directory and returns the report.

use std::path::{Path, PathBuf};

use scattomo_core::hilbert::{random_unitary, BasisSpec, FockSpace, TruncatedUnitary, DEFAULT_TRUNCATION_TOL};
use scattomo_core::protocol::{build_input_plan_elastic, build_input_plan_general, equal_magnitudes, InputPlan, PlanKind};
use serde::{Deserialize, Serialize};

use crate::config::OracleConfig;
use crate::error::CliError;
use crate::io;
use crate::schema::SchemaKind;

pub mod figure3;
pub mod imperfections;
pub mod noise_demo;
pub mod reconstruct;
pub mod scaling;

pub use figure3::{figure3, Panel};
pub use imperfections::imperfections;
pub use noise_demo::noise_demo;
pub use reconstruct::reconstruct;
pub use scaling::scaling;

/// Where and with which seed a command runs.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunContext {
    pub fn new(seed: u64, out_dir: impl Into<PathBuf>) -> Result<Self, CliError> {
        let out_dir = out_dir.into();
        io::create_dir(&out_dir)?;
        Ok(Self { seed, out_dir })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub(crate) fn finish<R: Serialize>(&self, name: &str, report: R) -> Result<R, CliError> {
        io::write_json(&self.path(&format!("{name}.json")), &report, SchemaKind::Report)?;
        Ok(report)
    }
}

/// A named pass/fail verdict with the observed value and the accepted range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub expected: String,
    pub passed: bool,
}

impl Check {
    pub fn within(name: &str, value: f64, lo: f64, hi: f64) -> Self {
        Self { name: name.into(), value, expected: format!("[{lo}, {hi}]"), passed: value >= lo && value <= hi }
    }

    pub fn at_most(name: &str, value: f64, max: f64) -> Self {
        Self { name: name.into(), value, expected: format!("<= {max}"), passed: value <= max }
    }
}

pub(crate) fn build_oracle(cfg: &OracleConfig, max_power: f64, order: usize, seed: u64) -> Result<TruncatedUnitary, CliError> {
    let cutoff = cfg.cutoff.unwrap_or_else(|| BasisSpec::default_cutoff(max_power, order, DEFAULT_TRUNCATION_TOL));
    let space = FockSpace::new(BasisSpec::new(cfg.modes, cutoff)?)?;
    Ok(random_unitary(&space, cfg.kind, cfg.seed.unwrap_or(seed)))
}

pub(crate) fn build_plan(kind: PlanKind, magnitudes: &[f64]) -> scattomo_core::Result<InputPlan> {
    match kind {
        PlanKind::General => build_input_plan_general(magnitudes.len(), magnitudes),
        PlanKind::Elastic => build_input_plan_elastic(magnitudes.len(), magnitudes),
    }
}

pub(crate) fn equal_plan(kind: PlanKind, modes: usize, power: f64) -> scattomo_core::Result<InputPlan> {
    build_plan(kind, &equal_magnitudes(modes, power))
}

pub(crate) fn file_name(path: &Path) -> String {
    path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default()
}

//! On-disk formats: records documents, surface CSV with a JSON header, CSV tables and JSON reports.

use std::fs;
use std::path::{Path, PathBuf};

use scattomo_core::grid::Axis;
use scattomo_core::protocol::{
    build_input_plan_elastic, build_input_plan_general, CorrelationRecord, NoiseConfig, PlanKind, RecordSet,
};
use scattomo_core::waveguide::{SampledSurface, SurfaceMeta};
use scattomo_core::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::schema::{self, SchemaKind};

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io { path: path.to_owned(), source }
}

pub fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// Pretty JSON with a trailing newline, checked against `kind` first.
pub fn write_json<T: Serialize>(path: &Path, value: &T, kind: SchemaKind) -> Result<(), CliError> {
    let value = serde_json::to_value(value)?;
    schema::validate(kind, &value)?;
    let mut text = serde_json::to_string_pretty(&value)?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

/// Read a JSON document after checking it against `kind`.
pub fn read_json<T: DeserializeOwned>(path: &Path, kind: SchemaKind) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Config(format!("{}: not valid JSON: {e}", path.display())))?;
    schema::validate(kind, &value)?;
    serde_json::from_value(value).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(io_err(path))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDocument {
    pub kind: PlanKind,
    pub magnitudes: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prepared_magnitudes: Option<Vec<f64>>,
    #[serde(default)]
    pub perturbed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordEntry {
    /// Phase index; absent for elastic plans.
    #[serde(default)]
    pub l: Option<u32>,
    pub s: Vec<i8>,
    #[serde(default)]
    pub ports: Vec<usize>,
    pub p_modes: Vec<usize>,
    pub re: f64,
    pub im: f64,
    #[serde(default)]
    pub shots: Option<u64>,
}

/// Correlation records as exchanged with experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordsDocument {
    pub plan: PlanDocument,
    pub port_count: usize,
    #[serde(default)]
    pub output_modes: Vec<usize>,
    pub records: Vec<RecordEntry>,
}

impl RecordsDocument {
    pub fn from_set(set: &RecordSet) -> Self {
        let plan = &set.plan;
        let prepared = (plan.prepared_magnitudes != plan.magnitudes).then(|| plan.prepared_magnitudes.clone());
        Self {
            plan: PlanDocument {
                kind: plan.kind,
                magnitudes: plan.magnitudes.clone(),
                prepared_magnitudes: prepared,
                perturbed: plan.perturbed,
            },
            port_count: set.port_count,
            output_modes: set.output_modes.clone(),
            records: set
                .records
                .iter()
                .map(|r| RecordEntry {
                    l: r.phase_index,
                    s: r.signs.clone(),
                    ports: r.ports.clone(),
                    p_modes: r.p_modes.clone(),
                    re: r.value.re,
                    im: r.value.im,
                    shots: r.shots,
                })
                .collect(),
        }
    }

    /// Rebuild the nominal plan and attach the records; reconstruction only uses nominal amplitudes.
    pub fn into_set(self) -> Result<RecordSet, CliError> {
        let m = self.plan.magnitudes.len();
        let mut plan = match self.plan.kind {
            PlanKind::General => build_input_plan_general(m, &self.plan.magnitudes)?,
            PlanKind::Elastic => build_input_plan_elastic(m, &self.plan.magnitudes)?,
        };
        plan.perturbed = self.plan.perturbed;
        if let Some(bad) = self.records.iter().find(|r| r.s.len() != m) {
            return Err(CliError::Config(format!("record sign vector {:?} does not match {m} plan modes", bad.s)));
        }
        let shots = self.records.first().and_then(|r| r.shots);
        Ok(RecordSet {
            plan,
            port_count: self.port_count,
            output_modes: self.output_modes,
            noise: NoiseConfig { shots, ..NoiseConfig::exact() },
            records: self
                .records
                .into_iter()
                .map(|r| CorrelationRecord {
                    phase_index: r.l,
                    signs: r.s,
                    ports: r.ports,
                    p_modes: r.p_modes,
                    value: Complex64::new(r.re, r.im),
                    shots: r.shots,
                })
                .collect(),
        })
    }

    pub fn load(path: &Path) -> Result<RecordSet, CliError> {
        read_json::<Self>(path, SchemaKind::Records)?.into_set()
    }
}

pub const SURFACE_COLUMNS: [&str; 6] = ["khat", "delta_k", "delta_p", "re", "im", "abs2"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfaceRow {
    pub khat: f64,
    pub delta_k: f64,
    pub delta_p: f64,
    pub re: f64,
    pub im: f64,
    pub abs2: f64,
}

/// Sidecar describing a surface CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceHeader {
    /// What the values are, e.g. "measured_t" or "gamma_tbar".
    pub quantity: String,
    /// Stored values are the surface values times this factor.
    pub scale: f64,
    pub sigma: f64,
    pub gamma: Option<f64>,
    pub omega0: Option<f64>,
    pub khat: Axis,
    pub delta_p: Axis,
    pub delta_k: Axis,
    pub columns: Vec<String>,
    pub rows: usize,
    /// CSV file name, relative to the header.
    pub data: String,
}

fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

/// Write `<stem>.csv` and `<stem>.json` into `dir`; values are multiplied by `scale`.
pub fn write_surface(dir: &Path, stem: &str, surface: &SampledSurface, quantity: &str, scale: f64) -> Result<PathBuf, CliError> {
    let data = format!("{stem}.csv");
    let rows = surface.samples().map(|(khat, delta_k, delta_p, v)| {
        let v = v * scale;
        SurfaceRow { khat, delta_k, delta_p, re: v.re, im: v.im, abs2: v.norm_sqr() }
    });
    write_csv(&dir.join(&data), rows)?;
    let header = SurfaceHeader {
        quantity: quantity.into(),
        scale,
        sigma: surface.meta.sigma,
        gamma: finite(surface.meta.gamma),
        omega0: finite(surface.meta.omega0),
        khat: surface.khat,
        delta_p: surface.delta_p,
        delta_k: surface.delta_k,
        columns: SURFACE_COLUMNS.iter().map(|c| c.to_string()).collect(),
        rows: surface.values.len(),
        data,
    };
    let path = dir.join(format!("{stem}.json"));
    write_json(&path, &header, SchemaKind::Surface)?;
    Ok(path)
}

/// Read a surface from its JSON header; rows must follow the header's grid in order.
pub fn read_surface(header_path: &Path) -> Result<(SurfaceHeader, SampledSurface), CliError> {
    let header: SurfaceHeader = read_json(header_path, SchemaKind::Surface)?;
    let data = header_path.parent().unwrap_or(Path::new(".")).join(&header.data);
    let meta = SurfaceMeta {
        sigma: header.sigma,
        gamma: header.gamma.unwrap_or(f64::NAN),
        omega0: header.omega0.unwrap_or(f64::NAN),
    };
    let mut surface = SampledSurface::zeros(header.khat, header.delta_p, header.delta_k, meta);
    let mut reader = csv::Reader::from_path(&data)?;
    let expected: Vec<(f64, f64, f64)> = surface.samples().map(|(k, dk, dp, _)| (k, dk, dp)).collect();
    let mut count = 0;
    for (i, row) in reader.deserialize::<SurfaceRow>().enumerate() {
        let row = row?;
        let Some(&(k, dk, dp)) = expected.get(i) else {
            return Err(CliError::Config(format!("{}: more rows than the header grid", data.display())));
        };
        let tol = 1e-9 * (1.0 + k.abs());
        if (row.khat - k).abs() > tol || (row.delta_k - dk).abs() > tol || (row.delta_p - dp).abs() > tol {
            return Err(CliError::Config(format!("{}: row {} is off the header grid", data.display(), i + 1)));
        }
        surface.values[i] = Complex64::new(row.re, row.im) / header.scale;
        count += 1;
    }
    if count != expected.len() {
        return Err(CliError::Config(format!("{}: {count} rows for a grid of {}", data.display(), expected.len())));
    }
    Ok((header, surface))
}

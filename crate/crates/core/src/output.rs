//! CSV and JSON writers for command results, plus the run manifest.
//!
//! Numbers are written in shortest round-trip form, so identical inputs give identical
//! bytes.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::fluxes::FluxResult;
use crate::scan::{
    ratio_band_decades, EnergySweepRecord, EquivalenceReport, LSweepPoint, TransportClassification,
    RATIO_BAND_MIN_LENGTH,
};

pub const SWEEP_E_HEADER: &str = "E,transmission,phi_l,j_l,sigma,unitarity_residual";
pub const SWEEP_L_HEADER: &str = "L,sigma_density,transmission,log_transfer_norm,resonance_flag";
pub const EQUIVALENCE_HEADER: &str = "E,label,norm_slope,sigma_slope,floor_ratio,sigma_at_l_max,contradiction";

pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        serde_json::to_string(&x).expect("finite floats serialize")
    }
}

fn row(cells: &[String]) -> String {
    let mut line = cells.join(",");
    line.push('\n');
    line
}

pub fn sweep_e_csv(records: &[EnergySweepRecord]) -> String {
    let mut out = format!("{SWEEP_E_HEADER}\n");
    for r in records {
        if let Ok(p) = &r.outcome {
            out.push_str(&row(&[
                format_float(r.energy),
                format_float(p.transmission),
                format_float(p.densities.phi_l),
                format_float(p.densities.j_l),
                format_float(p.densities.sigma),
                format_float(p.unitarity_residual),
            ]));
        }
    }
    out
}

pub fn sweep_l_csv(points: &[LSweepPoint]) -> String {
    let mut out = format!("{SWEEP_L_HEADER}\n");
    for p in points {
        out.push_str(&row(&[
            p.length.to_string(),
            format_float(p.sigma_density),
            format_float(p.transmission),
            format_float(p.log_transfer_norm),
            p.resonance_flag.to_string(),
        ]));
    }
    out
}

pub fn equivalence_csv(report: &EquivalenceReport) -> String {
    let mut out = format!("{EQUIVALENCE_HEADER}\n");
    for r in &report.rows {
        let Some(c) = r.classification else { continue };
        let label = serde_json::to_value(c.label).unwrap();
        out.push_str(&row(&[
            format_float(r.energy),
            label.as_str().unwrap().to_string(),
            format_float(c.norm_slope),
            format_float(c.sigma_slope),
            format_float(c.floor_ratio),
            format_float(r.sigma_at_l_max),
            c.contradiction.to_string(),
        ]));
    }
    out
}

/// The summary document of `fluxes`; exactly these keys.
pub fn fluxes_json(result: &FluxResult) -> Value {
    json!({
        "energy_flux_l": result.energy_flux_l,
        "charge_flux_l": result.charge_flux_l,
        "entropy_flux": result.entropy_flux,
        "quadrature_error_estimate": result.quadrature_error_estimate,
        "evaluations": result.evaluations,
        "no_open_channel": result.no_open_channel,
    })
}

pub fn sweep_e_json(records: &[EnergySweepRecord]) -> Value {
    let failures: Vec<Value> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| json!({"E": r.energy, "error": e})))
        .collect();
    let max_residual = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok())
        .map(|p| p.unitarity_residual)
        .fold(0.0, f64::max);
    json!({
        "points": records.len(),
        "failed": failures.len(),
        "failures": failures,
        "max_unitarity_residual": max_residual,
    })
}

pub fn sweep_l_json(energy: f64, points: &[LSweepPoint], classification: Option<&TransportClassification>, note: Option<String>) -> Value {
    let log_sigma: Vec<Value> = points
        .iter()
        .map(|p| json!({"L": p.length, "log_sigma_density": p.log_sigma_density, "unitarity_residual": p.unitarity_residual}))
        .collect();
    json!({
        "energy": energy,
        "classification": classification,
        "classification_note": note,
        "ratio_band": {
            "min_length": RATIO_BAND_MIN_LENGTH,
            "decades": ratio_band_decades(points, RATIO_BAND_MIN_LENGTH),
        },
        "points": log_sigma,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub config: RunConfig,
    pub seeds: Vec<u64>,
    pub timestamp_unix: u64,
    pub max_unitarity_residual: f64,
    pub outputs: Vec<String>,
    /// Command-specific details not part of the fixed output schemas.
    pub details: Value,
}

impl RunManifest {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        let timestamp_unix = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        RunManifest {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: config.clone(),
            seeds: config.sample.potential.seed().into_iter().collect(),
            timestamp_unix,
            max_unitarity_residual: 0.0,
            outputs: Vec::new(),
            details: Value::Null,
        }
    }
}

/// Collects output files under one directory; every write is recorded in the manifest.
pub struct OutputDir {
    root: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)
            .map_err(|e| Error::Numerical(format!("serializing {name}: {e}")))?;
        text.push('\n');
        self.write_text(name, &text)
    }

    pub fn finish(mut self, mut manifest: RunManifest) -> Result<()> {
        manifest.outputs = std::mem::take(&mut self.written);
        self.write_json("manifest.json", &manifest)
    }
}

//! JSON run configuration: parsing, defaults, validation with key paths.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluxes::{QuadratureConfig, SystemConfig};
use crate::leads::{sigma_intersection, LeadModel, WeissTable};
use crate::model::{SampleSpec, ThermoParams};
use crate::potentials::{generate, PotentialSpec};
use crate::scan::{geometric_checkpoints, ClassificationThresholds};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleConfig {
    pub length: usize,
    pub potential: PotentialSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LeadConfig {
    Laplacian {
        #[serde(default = "one")]
        hopping: f64,
        #[serde(default = "one")]
        coupling: f64,
    },
    /// CSV with header `E,re_F,im_F`; relative paths resolve against the config file.
    Tabulated { path: PathBuf },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnergyGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl EnergyGrid {
    /// `count` equally spaced points including both ends.
    pub fn points(&self) -> Vec<f64> {
        match self.count {
            0 => vec![],
            1 => vec![self.start],
            n => (0..n)
                .map(|i| self.start + (self.stop - self.start) * i as f64 / (n - 1) as f64)
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometricCheckpoints {
    pub min: usize,
    pub max: usize,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    /// Explicit energies; takes precedence over `grid`.
    pub energies: Option<Vec<f64>>,
    pub grid: Option<EnergyGrid>,
    /// Energy of a single length sweep.
    pub energy: Option<f64>,
    /// Explicit lengths; takes precedence over `geometric`.
    pub checkpoints: Option<Vec<usize>>,
    pub geometric: Option<GeometricCheckpoints>,
    pub thresholds: ClassificationThresholds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub sample: SampleConfig,
    pub lead_l: LeadConfig,
    pub lead_r: LeadConfig,
    pub thermo: ThermoParams,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub sweep: SweepConfig,
}

/// A validated configuration with leads loaded and paths made absolute.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadedConfig {
    pub config: RunConfig,
    pub lead_l: LeadModel,
    pub lead_r: LeadModel,
}

fn prefixed(prefix: &str, err: Error) -> Error {
    match err {
        Error::Config { key, message } if !key.starts_with(prefix) => Error::Config {
            key: format!("{prefix}.{key}"),
            message,
        },
        other => other,
    }
}

fn resolve(base: &Path, path: &Path) -> PathBuf {
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        base.join(path)
    }
}

fn load_lead(key: &str, lead: &mut LeadConfig, base: &Path) -> Result<LeadModel> {
    match lead {
        LeadConfig::Laplacian { hopping, coupling } => {
            LeadModel::laplacian(*hopping, *coupling).map_err(|e| prefixed(key, e))
        }
        LeadConfig::Tabulated { path } => {
            *path = resolve(base, path);
            let table = WeissTable::from_csv(path).map_err(|e| match e {
                Error::InvalidInput(message) => Error::config(format!("{key}.path"), message),
                other => other,
            })?;
            Ok(LeadModel::Tabulated(table))
        }
    }
}

/// Parses a configuration document; `base` anchors relative paths.
pub fn parse_config_str(text: &str, base: &Path) -> Result<LoadedConfig> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::config("", format!("invalid JSON: {e}")))?;
    // serde accepts stray keys next to the tag of a unit variant; reject them here
    if let Some(pot) = value.pointer("/sample/potential").and_then(|p| p.as_object()) {
        if pot.get("kind").and_then(|k| k.as_str()) == Some("zero") {
            if let Some(extra) = pot.keys().find(|k| *k != "kind") {
                return Err(Error::config(
                    format!("sample.potential.{extra}"),
                    "unknown field for potential kind `zero`",
                ));
            }
        }
    }
    let mut config: RunConfig = serde_path_to_error::deserialize(value).map_err(|e| {
        let key = e.path().to_string();
        Error::config(if key == "." { String::new() } else { key }, e.inner().to_string())
    })?;

    if config.sample.length < 1 {
        return Err(Error::config("sample.length", "must be >= 1"));
    }
    config
        .sample
        .potential
        .validate()
        .map_err(|e| prefixed("sample.potential", e))?;
    if let PotentialSpec::File { path } = &mut config.sample.potential {
        *path = resolve(base, path);
    }
    config.thermo.validate()?;
    config.quadrature.validate()?;
    config.sweep.thresholds.validate()?;
    if let Some(g) = &config.sweep.grid {
        if !(g.start.is_finite() && g.stop.is_finite() && g.start <= g.stop && g.count >= 1) {
            return Err(Error::config("sweep.grid", "needs finite start <= stop and count >= 1"));
        }
    }
    if let Some(cps) = &config.sweep.checkpoints {
        if cps.is_empty() || cps[0] < 1 || cps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config(
                "sweep.checkpoints",
                "must be a nonempty strictly increasing list of lengths >= 1",
            ));
        }
    }
    if let Some(g) = &config.sweep.geometric {
        if !(g.min >= 1 && g.max >= g.min && g.count >= 2) {
            return Err(Error::config("sweep.geometric", "needs 1 <= min <= max and count >= 2"));
        }
    }
    let lead_l = load_lead("lead_l", &mut config.lead_l, base)?;
    let lead_r = load_lead("lead_r", &mut config.lead_r, base)?;
    Ok(LoadedConfig {
        config,
        lead_l,
        lead_r,
    })
}

pub fn parse_config(path: &Path) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_config_str(&text, &base)
}

/// Default sizes of the energy grids and the length sweep.
pub const DEFAULT_SWEEP_POINTS: usize = 500;
pub const DEFAULT_EQUIVALENCE_POINTS: usize = 100;
pub const DEFAULT_CHECKPOINTS: usize = 16;

impl LoadedConfig {
    pub fn thermo(&self) -> &ThermoParams {
        &self.config.thermo
    }

    pub fn potential(&self) -> &PotentialSpec {
        &self.config.sample.potential
    }

    /// Replaces the seed of a random potential.
    pub fn override_seed(&mut self, seed: u64) {
        let spec = self.config.sample.potential.clone();
        self.config.sample.potential = spec.with_seed(seed);
    }

    pub fn system(&self) -> Result<SystemConfig> {
        let length = self.config.sample.length;
        Ok(SystemConfig {
            sample: SampleSpec::new(length, generate(self.potential(), length)?)?,
            lead_l: self.lead_l.clone(),
            lead_r: self.lead_r.clone(),
            thermo: self.config.thermo,
            quadrature: self.config.quadrature,
        })
    }

    /// The configured energies, or `default_count` midpoints spread over the open-channel
    /// window shrunk by the edge margin.
    pub fn energies(&self, default_count: usize) -> Vec<f64> {
        if let Some(e) = &self.config.sweep.energies {
            return e.clone();
        }
        if let Some(g) = &self.config.sweep.grid {
            return g.points();
        }
        let window = sigma_intersection(&self.lead_l, &self.lead_r).shrink(self.config.quadrature.edge_margin);
        let total = window.measure();
        if total <= 0.0 {
            return vec![];
        }
        // midpoints of `default_count` equal cells laid along the concatenated intervals
        let mut out = Vec::with_capacity(default_count);
        for i in 0..default_count {
            let mut s = total * (i as f64 + 0.5) / default_count as f64;
            for &(a, b) in window.intervals() {
                if s < b - a {
                    out.push(a + s);
                    break;
                }
                s -= b - a;
            }
        }
        out
    }

    /// The configured checkpoints, or a geometric ladder from `min(10, L)` up to the sample length.
    pub fn checkpoints(&self) -> Vec<usize> {
        if let Some(c) = &self.config.sweep.checkpoints {
            return c.clone();
        }
        if let Some(g) = &self.config.sweep.geometric {
            return geometric_checkpoints(g.min, g.max, g.count);
        }
        let l_max = self.config.sample.length;
        geometric_checkpoints(10.min(l_max), l_max, DEFAULT_CHECKPOINTS)
    }

    pub fn sweep_energy(&self) -> Result<f64> {
        self.config
            .sweep
            .energy
            .ok_or_else(|| Error::config("sweep.energy", "required by the length sweep"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    const MINIMAL: &str = r#"{
        "sample": {"length": 10, "potential": {"kind": "zero"}},
        "lead_l": {"kind": "laplacian"},
        "lead_r": {"kind": "laplacian", "hopping": 1.0, "coupling": 1.0},
        "thermo": {"beta_l": 1.0, "beta_r": 1.0, "mu_l": 0.5, "mu_r": -0.5}
    }"#;

    fn parse(text: &str) -> Result<LoadedConfig> {
        parse_config_str(text, Path::new("/tmp"))
    }

    fn config_key(err: Error) -> String {
        match err {
            Error::Config { key, .. } => key,
            other => panic!("expected a config error, got {other}"),
        }
    }

    #[test]
    fn minimal_config_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.config.quadrature, QuadratureConfig::default());
        assert_eq!(c.config.sweep.thresholds, ClassificationThresholds::default());
        assert_eq!(c.lead_l, LeadModel::laplacian(1.0, 1.0).unwrap());
        assert_eq!(c.checkpoints(), geometric_checkpoints(10, 10, 16));
        let e = c.energies(4);
        assert_eq!(e.len(), 4);
        assert!(e.iter().all(|x| x.abs() < 2.0));
        // defaults are echoed on serialization
        let echoed = serde_json::to_value(&c.config).unwrap();
        assert_eq!(echoed["quadrature"]["tolerance"], 1e-8);
        assert_eq!(echoed["lead_l"]["hopping"], 1.0);
    }

    #[test]
    fn key_paths_in_errors() {
        let bad_beta = MINIMAL.replace("\"beta_l\": 1.0", "\"beta_l\": -1.0");
        assert_eq!(config_key(parse(&bad_beta).unwrap_err()), "thermo.beta_l");
        let unknown = MINIMAL.replace("\"mu_r\": -0.5", "\"mu_r\": -0.5, \"gamma\": 2");
        assert_eq!(config_key(parse(&unknown).unwrap_err()), "thermo.gamma");
        let wrong_type = MINIMAL.replace("\"length\": 10", "\"length\": \"ten\"");
        assert_eq!(config_key(parse(&wrong_type).unwrap_err()), "sample.length");
        let zero_len = MINIMAL.replace("\"length\": 10", "\"length\": 0");
        assert_eq!(config_key(parse(&zero_len).unwrap_err()), "sample.length");
        let empty_cell = MINIMAL.replace("{\"kind\": \"zero\"}", "{\"kind\": \"periodic\", \"cell\": []}");
        assert_eq!(config_key(parse(&empty_cell).unwrap_err()), "sample.potential.cell");
        let bad_hop = MINIMAL.replace("\"hopping\": 1.0", "\"hopping\": -1.0");
        assert_eq!(config_key(parse(&bad_hop).unwrap_err()), "lead_r.hopping");
        let unknown_kind = MINIMAL.replace("{\"kind\": \"zero\"}", "{\"kind\": \"zero\", \"value\": 1}");
        assert!(config_key(parse(&unknown_kind).unwrap_err()).starts_with("sample.potential"));
    }

    #[test]
    fn tabulated_lead_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut f = std::fs::File::create(dir.path().join("lead.csv")).unwrap();
        writeln!(f, "E,re_F,im_F").unwrap();
        for i in 0..=40 {
            let e = -2.0 + 0.1 * i as f64;
            let w = LeadModel::laplacian(1.0, 1.0).unwrap();
            let v = crate::leads::weiss_boundary(&w, e).unwrap().0;
            writeln!(f, "{e},{},{}", v.re, v.im.max(0.0)).unwrap();
        }
        drop(f);
        let text = MINIMAL.replace(
            "{\"kind\": \"laplacian\"}",
            "{\"kind\": \"tabulated\", \"path\": \"lead.csv\"}",
        );
        std::fs::write(dir.path().join("run.json"), text).unwrap();
        let c = parse_config(&dir.path().join("run.json")).unwrap();
        let LeadModel::Tabulated(table) = &c.lead_l else {
            panic!("expected a tabulated lead")
        };
        assert_eq!(table.energies().len(), 41);
        assert!(c.system().is_ok());

        // negative imaginary part is rejected
        std::fs::write(dir.path().join("bad.csv"), "E,re_F,im_F\n0,0,1\n1,0,-0.5\n").unwrap();
        let text = MINIMAL.replace(
            "{\"kind\": \"laplacian\"}",
            "{\"kind\": \"tabulated\", \"path\": \"bad.csv\"}",
        );
        std::fs::write(dir.path().join("bad.json"), text).unwrap();
        assert!(parse_config(&dir.path().join("bad.json")).is_err());
    }

    #[test]
    fn seed_override_and_sweep_settings() {
        let text = MINIMAL
            .replace("{\"kind\": \"zero\"}", "{\"kind\": \"anderson\", \"amplitude\": 2.0, \"seed\": 7}")
            .replace(
                "\"thermo\"",
                "\"sweep\": {\"energy\": 0.5, \"grid\": {\"start\": -1, \"stop\": 1, \"count\": 5}, \"geometric\": {\"min\": 10, \"max\": 100, \"count\": 8}}, \"thermo\"",
            );
        let mut c = parse(&text).unwrap();
        assert_eq!(c.energies(100), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert_eq!(c.checkpoints(), geometric_checkpoints(10, 100, 8));
        assert_eq!(c.sweep_energy().unwrap(), 0.5);
        c.override_seed(99);
        assert_eq!(c.potential().seed(), Some(99));
    }
}

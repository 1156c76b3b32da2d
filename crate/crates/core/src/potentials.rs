//! On-site potentials `v : Z+ -> R` and their restriction to `0..=L`.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A recipe for a half-line potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// The cell is tiled starting at site 0.
    Periodic {
        cell: Vec<f64>,
    },
    /// I.i.d. uniform on `[-amplitude, amplitude]`, drawn per site from a keyed stream.
    Anderson {
        amplitude: f64,
        seed: u64,
    },
    /// `coupling * cos(2 pi (frequency x + phase))`.
    AlmostMathieu {
        coupling: f64,
        frequency: f64,
        phase: f64,
    },
    /// One value per line, in site order.
    File {
        path: PathBuf,
    },
}

impl PotentialSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            PotentialSpec::Zero => Ok(()),
            PotentialSpec::Constant { value } => finite("value", *value),
            PotentialSpec::Periodic { cell } => {
                if cell.is_empty() {
                    return Err(Error::config("cell", "periodic cell must be nonempty"));
                }
                cell.iter().try_for_each(|v| finite("cell", *v))
            }
            PotentialSpec::Anderson { amplitude, .. } => {
                if !(amplitude.is_finite() && *amplitude >= 0.0) {
                    return Err(Error::config(
                        "amplitude",
                        format!("disorder amplitude must be finite and >= 0, got {amplitude}"),
                    ));
                }
                Ok(())
            }
            PotentialSpec::AlmostMathieu {
                coupling,
                frequency,
                phase,
            } => {
                finite("coupling", *coupling)?;
                finite("frequency", *frequency)?;
                finite("phase", *phase)
            }
            PotentialSpec::File { .. } => Ok(()),
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            PotentialSpec::Anderson { seed, .. } => Some(*seed),
            _ => None,
        }
    }

    /// Replaces the seed of a random potential; other kinds are unchanged.
    pub fn with_seed(mut self, new_seed: u64) -> Self {
        if let PotentialSpec::Anderson { seed, .. } = &mut self {
            *seed = new_seed;
        }
        self
    }
}

fn finite(key: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(key, format!("must be finite, got {v}")))
    }
}

/// Values `v(0), ..., v(L)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialValues(Vec<f64>);

impl PotentialValues {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(x) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "potential value at site {x} is not finite"
            )));
        }
        Ok(PotentialValues(values))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Restriction to `0..=length`.
    pub fn truncated(&self, length: usize) -> Result<PotentialValues> {
        if length >= self.0.len() {
            return Err(Error::InvalidInput(format!(
                "cannot restrict {} values to length {length}",
                self.0.len()
            )));
        }
        Ok(PotentialValues(self.0[..=length].to_vec()))
    }
}

impl std::ops::Index<usize> for PotentialValues {
    type Output = f64;

    fn index(&self, x: usize) -> &f64 {
        &self.0[x]
    }
}

/// Evaluates `spec` on the sites `0..=length`.
///
/// The result for a smaller length is always a prefix of the result for a larger one.
pub fn generate(spec: &PotentialSpec, length: usize) -> Result<PotentialValues> {
    if length < 1 {
        return Err(Error::InvalidInput("sample length must be >= 1".into()));
    }
    spec.validate()?;
    let n = length + 1;
    let values = match spec {
        PotentialSpec::Zero => vec![0.0; n],
        PotentialSpec::Constant { value } => vec![*value; n],
        PotentialSpec::Periodic { cell } => cell.iter().copied().cycle().take(n).collect(),
        PotentialSpec::Anderson { amplitude, seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            (0..n)
                .map(|x| anderson_site(&mut rng, *amplitude, x as u64))
                .collect()
        }
        PotentialSpec::AlmostMathieu {
            coupling,
            frequency,
            phase,
        } => (0..n)
            .map(|x| coupling * (2.0 * PI * (frequency * x as f64 + phase)).cos())
            .collect(),
        PotentialSpec::File { path } => {
            let mut values = read_potential_file(path)?;
            if values.len() < n {
                return Err(Error::InvalidInput(format!(
                    "{}: {} values, need {n} for length {length}",
                    path.display(),
                    values.len()
                )));
            }
            values.truncate(n);
            values
        }
    };
    PotentialValues::new(values)
}

/// The value at site `x` depends only on `(seed, x)`: the stream is repositioned to the
/// two 32-bit words belonging to `x` before drawing.
fn anderson_site(rng: &mut ChaCha8Rng, amplitude: f64, x: u64) -> f64 {
    if amplitude == 0.0 {
        return 0.0;
    }
    rng.set_word_pos(2 * x as u128);
    rng.random_range(-amplitude..=amplitude)
}

pub fn read_potential_file(path: &Path) -> Result<Vec<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut values = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let v: f64 = line.parse().map_err(|_| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: format!("expected a real number, got `{line}`"),
        })?;
        values.push(v);
    }
    Ok(values)
}

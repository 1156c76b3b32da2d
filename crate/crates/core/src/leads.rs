//! Reservoir models, the boundary values `F(E + i0)` of their Weiss functions, and the
//! energy windows where both reservoirs carry absolutely continuous spectrum.

use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// A reservoir, reduced to the cyclic subspace of its coupling vector.
#[derive(Debug, Clone, PartialEq)]
pub enum LeadModel {
    /// `h = -k Delta` on the half line with `chi = kappa delta_0`.
    SemiInfiniteLaplacian { hopping: f64, coupling: f64 },
    Tabulated(WeissTable),
}

/// Tabulated `F(E + i0)` on a strictly increasing energy grid, linearly interpolated.
#[derive(Debug, Clone, PartialEq)]
pub struct WeissTable {
    energies: Vec<f64>,
    values: Vec<Complex64>,
}

impl WeissTable {
    pub fn new(energies: Vec<f64>, values: Vec<Complex64>) -> Result<Self> {
        if energies.len() != values.len() {
            return Err(Error::InvalidInput(
                "lead table: energy and value columns differ in length".into(),
            ));
        }
        if energies.len() < 2 {
            return Err(Error::InvalidInput(
                "lead table needs at least two rows".into(),
            ));
        }
        if energies.iter().any(|e| !e.is_finite())
            || values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvalidInput("lead table entries must be finite".into()));
        }
        if let Some(i) = energies.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!(
                "lead table energies not strictly increasing at row {}",
                i + 2
            )));
        }
        if let Some(i) = values.iter().position(|v| v.im < 0.0) {
            return Err(Error::InvalidInput(format!(
                "lead table row {}: Im F = {} < 0 violates the Herglotz sign",
                i + 1,
                values[i].im
            )));
        }
        Ok(WeissTable { energies, values })
    }

    /// Reads a CSV with header `E,re_F,im_F`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, header)) if header.trim() == "E,re_F,im_F" => {}
            _ => return Err(parse_err(1, "expected header `E,re_F,im_F`".into())),
        }
        let mut energies = Vec::new();
        let mut values = Vec::new();
        for (i, line) in lines {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(parse_err(i + 1, format!("expected 3 fields, got {}", fields.len())));
            }
            let mut nums = [0.0; 3];
            for (slot, field) in nums.iter_mut().zip(&fields) {
                *slot = field
                    .parse()
                    .map_err(|_| parse_err(i + 1, format!("not a number: `{field}`")))?;
            }
            energies.push(nums[0]);
            values.push(Complex64::new(nums[1], nums[2]));
        }
        WeissTable::new(energies, values)
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn range(&self) -> (f64, f64) {
        (self.energies[0], *self.energies.last().unwrap())
    }

    fn interpolate(&self, energy: f64) -> Result<Complex64> {
        let (lo, hi) = self.range();
        if !(lo..=hi).contains(&energy) {
            return Err(Error::Domain {
                energy,
                reason: format!("outside lead table range [{lo}, {hi}]"),
            });
        }
        let i = self
            .energies
            .partition_point(|&e| e <= energy)
            .clamp(1, self.energies.len() - 1);
        let (e0, e1) = (self.energies[i - 1], self.energies[i]);
        let w = (energy - e0) / (e1 - e0);
        let v = self.values[i - 1] * (1.0 - w) + self.values[i] * w;
        Ok(Complex64::new(v.re, v.im.max(0.0)))
    }

    fn support(&self) -> EnergyWindow {
        // nodes carry Im F >= 0, so a segment is positive on its interior unless both ends vanish
        let mut intervals: Vec<(f64, f64)> = Vec::new();
        let mut open: Option<f64> = None;
        for i in 0..self.energies.len() - 1 {
            let (y0, y1) = (self.values[i].im, self.values[i + 1].im);
            if y0 > 0.0 || y1 > 0.0 {
                open.get_or_insert(self.energies[i]);
                if y1 == 0.0 || i + 2 == self.energies.len() {
                    intervals.push((open.take().unwrap(), self.energies[i + 1]));
                }
            }
        }
        EnergyWindow { intervals }
    }
}

/// Boundary value `F(E + i0)`; `Im >= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeissValue(pub Complex64);

impl WeissValue {
    pub fn value(self) -> Complex64 {
        self.0
    }

    pub fn im(self) -> f64 {
        self.0.im
    }
}

/// A finite union of disjoint open intervals, sorted.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EnergyWindow {
    intervals: Vec<(f64, f64)>,
}

impl EnergyWindow {
    pub fn new(mut intervals: Vec<(f64, f64)>) -> Result<Self> {
        if intervals
            .iter()
            .any(|&(a, b)| !(a.is_finite() && b.is_finite() && a < b))
        {
            return Err(Error::InvalidInput(
                "energy window intervals need finite endpoints a < b".into(),
            ));
        }
        intervals.sort_by(|x, y| x.0.total_cmp(&y.0));
        if intervals.windows(2).any(|w| w[0].1 > w[1].0) {
            return Err(Error::InvalidInput("energy window intervals overlap".into()));
        }
        Ok(EnergyWindow { intervals })
    }

    pub fn empty() -> Self {
        EnergyWindow::default()
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.is_empty()
    }

    pub fn measure(&self) -> f64 {
        self.intervals.iter().map(|(a, b)| b - a).sum()
    }

    pub fn contains(&self, energy: f64) -> bool {
        self.intervals.iter().any(|&(a, b)| a < energy && energy < b)
    }

    /// Distance from `energy` to the nearest endpoint; zero outside the window.
    pub fn interior_margin(&self, energy: f64) -> f64 {
        self.intervals
            .iter()
            .find(|&&(a, b)| a < energy && energy < b)
            .map_or(0.0, |&(a, b)| (energy - a).min(b - energy))
    }

    pub fn intersect(&self, other: &EnergyWindow) -> EnergyWindow {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.intervals.len() && j < other.intervals.len() {
            let (a0, a1) = self.intervals[i];
            let (b0, b1) = other.intervals[j];
            let lo = a0.max(b0);
            let hi = a1.min(b1);
            if lo < hi {
                out.push((lo, hi));
            }
            if a1 < b1 {
                i += 1;
            } else {
                j += 1;
            }
        }
        EnergyWindow { intervals: out }
    }

    /// Each interval shrunk by `margin` at both ends; intervals that vanish are dropped.
    pub fn shrink(&self, margin: f64) -> EnergyWindow {
        EnergyWindow {
            intervals: self
                .intervals
                .iter()
                .map(|&(a, b)| (a + margin, b - margin))
                .filter(|(a, b)| a < b)
                .collect(),
        }
    }
}

impl LeadModel {
    pub fn laplacian(hopping: f64, coupling: f64) -> Result<Self> {
        let lead = LeadModel::SemiInfiniteLaplacian { hopping, coupling };
        lead.validate()?;
        Ok(lead)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            LeadModel::SemiInfiniteLaplacian { hopping, coupling } => {
                if !(hopping.is_finite() && hopping > 0.0) {
                    return Err(Error::config("hopping", format!("must be > 0, got {hopping}")));
                }
                if !(coupling.is_finite() && coupling != 0.0) {
                    return Err(Error::config("coupling", format!("must be nonzero, got {coupling}")));
                }
                Ok(())
            }
            LeadModel::Tabulated(_) => Ok(()),
        }
    }
}

/// `F(E + i0) = <chi, (h - E - i0)^{-1} chi>`.
///
/// For the Laplacian lead, `F(z) = kappa^2 (-z + sqrt(z^2 - 4k^2)) / (2k^2)` with the root
/// fixed by `Im F >= 0` and `F(z) ~ -kappa^2 / z` at infinity.
pub fn weiss_boundary(lead: &LeadModel, energy: f64) -> Result<WeissValue> {
    match lead {
        LeadModel::SemiInfiniteLaplacian { hopping, coupling } => {
            let (k, kappa2) = (*hopping, coupling * coupling);
            let edge = 2.0 * k;
            let g = if energy.abs() < edge {
                let im = ((edge - energy) * (edge + energy)).sqrt();
                Complex64::new(-energy, im) / (2.0 * k * k)
            } else {
                // the root with |g| <= 1/k, written without cancellation: g = -2 / (E + sgn(E) sqrt(E^2 - 4k^2))
                let root = ((energy - edge) * (energy + edge)).sqrt();
                Complex64::new(-2.0 / (energy + energy.signum() * root), 0.0)
            };
            Ok(WeissValue(g * kappa2))
        }
        LeadModel::Tabulated(table) => table.interpolate(energy).map(WeissValue),
    }
}

/// Essential support of the lead's absolutely continuous spectrum: `{E : Im F(E+i0) > 0}`.
pub fn band_support(lead: &LeadModel) -> EnergyWindow {
    match lead {
        LeadModel::SemiInfiniteLaplacian { hopping, .. } => EnergyWindow {
            intervals: vec![(-2.0 * hopping, 2.0 * hopping)],
        },
        LeadModel::Tabulated(table) => table.support(),
    }
}

pub fn sigma_intersection(left: &LeadModel, right: &LeadModel) -> EnergyWindow {
    band_support(left).intersect(&band_support(right))
}

//! Growing-length sweeps of the entropy density and transfer norms, energy sweeps at fixed
//! length, and the persistent/vanishing classification built on them.
//!
//! The classification is a finite-length heuristic. It never claims anything about the
//! infinite-length sets; its thresholds are configurable and `l_max` is always reported.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fluxes::{evaluate_point, log_sigma_density, spectral_densities, PointEvaluation};
use crate::green::{coupled_green_direct, sample_green_via_transfer, SelfEnergyPair};
use crate::leads::{sigma_intersection, LeadModel};
use crate::model::{SampleSpec, ThermoParams};
use crate::potentials::{generate, PotentialSpec};
use crate::scattering::{t_matrix, transmission, unitarity_residual};
use crate::stats::{linear_fit, median};
use crate::transfer::product;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LSweepPoint {
    #[serde(rename = "L")]
    pub length: usize,
    pub sigma_density: f64,
    pub transmission: f64,
    pub log_transfer_norm: f64,
    /// The transfer route sees a Dirichlet resonance here; the densities still come from the
    /// direct solve.
    pub resonance_flag: bool,
    /// `ln sigma_density`, finite even where `sigma_density` underflows to 0.
    pub log_sigma_density: f64,
    pub unitarity_residual: f64,
}

/// `sigma <= 4 T max(beta) (|E| + |mu_l| + |mu_r| + 2 / min(beta))`.
pub fn sigma_envelope(energy: f64, transmission: f64, thermo: &ThermoParams) -> f64 {
    let bmax = thermo.beta_l.max(thermo.beta_r);
    let bmin = thermo.beta_l.min(thermo.beta_r);
    4.0 * transmission * bmax * (energy.abs() + thermo.mu_l.abs() + thermo.mu_r.abs() + 2.0 / bmin)
}

fn check_envelope(energy: f64, transmission: f64, sigma: f64, thermo: &ThermoParams) -> Result<()> {
    let bound = sigma_envelope(energy, transmission, thermo);
    if sigma > bound * (1.0 + 1e-12) {
        return Err(Error::Numerical(format!(
            "entropy density {sigma} above its envelope {bound} at E = {energy}"
        )));
    }
    Ok(())
}

/// Strictly increasing, roughly geometric lengths from `l_min` to `l_max` inclusive.
pub fn geometric_checkpoints(l_min: usize, l_max: usize, count: usize) -> Vec<usize> {
    assert!(l_min >= 1 && l_max >= l_min && count >= 2);
    let ratio = (l_max as f64 / l_min as f64).ln() / (count - 1) as f64;
    let mut out: Vec<usize> = (0..count)
        .map(|i| ((l_min as f64).ln() + ratio * i as f64).exp().round() as usize)
        .collect();
    out[0] = l_min;
    out[count - 1] = l_max;
    out.dedup();
    out
}

/// `sigma_L(E)`, `T_L(E)` and `log ||T_L(E)||` at each checkpoint length.
pub fn l_sweep(
    spec: &PotentialSpec,
    energy: f64,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    thermo: &ThermoParams,
    checkpoints: &[usize],
) -> Result<Vec<LSweepPoint>> {
    thermo.validate()?;
    if !sigma_intersection(lead_l, lead_r).contains(energy) {
        return Err(Error::Domain {
            energy,
            reason: "outside the open-channel window of the two leads, where sigma vanishes identically"
                .into(),
        });
    }
    if checkpoints.is_empty() || checkpoints[0] < 1 {
        return Err(Error::InvalidInput("checkpoints must be nonempty and >= 1".into()));
    }
    let l_max = *checkpoints.last().unwrap();
    let potential = generate(spec, l_max)?;
    let (_, trace) = product(&potential, energy, l_max, checkpoints)?;
    let se = SelfEnergyPair::from_leads(lead_l, lead_r, energy)?;
    trace
        .points
        .par_iter()
        .map(|tp| {
            let length = tp.length;
            let g = coupled_green_direct(&potential, energy, length, &se)?;
            let t = t_matrix(&g.green, &se);
            let tr = transmission(&t)?;
            let log_t = (4.0f64.ln() + se.left.im().ln() + se.right.im().ln() + 2.0 * g.ln_abs_lr).min(0.0);
            let sigma = spectral_densities(energy, tr, thermo).sigma;
            check_envelope(energy, tr, sigma, thermo)?;
            Ok(LSweepPoint {
                length,
                sigma_density: sigma,
                transmission: tr,
                log_transfer_norm: tp.log_norm,
                resonance_flag: sample_green_via_transfer(&tp.matrix).is_err(),
                log_sigma_density: log_sigma_density(energy, log_t, thermo),
                unitarity_residual: unitarity_residual(&t),
            })
        })
        .collect()
}

/// One grid point of an energy sweep; failures are kept, not propagated.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergySweepRecord {
    pub energy: f64,
    pub outcome: std::result::Result<PointEvaluation, String>,
}

pub fn energy_sweep(
    spec: &PotentialSpec,
    length: usize,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    thermo: &ThermoParams,
    grid: &[f64],
) -> Result<Vec<EnergySweepRecord>> {
    thermo.validate()?;
    let sample = SampleSpec::new(length, generate(spec, length)?)?;
    Ok(grid
        .par_iter()
        .map(|&energy| {
            let outcome = evaluate_point(&sample, lead_l, lead_r, thermo, energy).and_then(|p| {
                check_envelope(energy, p.transmission, p.densities.sigma, thermo)?;
                Ok(p)
            });
            EnergySweepRecord {
                energy,
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassificationThresholds {
    /// `vanishing` needs a log-sigma slope below `-vanishing_slope / l_max`.
    pub vanishing_slope: f64,
    pub min_r_squared: f64,
    /// `persistent` needs `min sigma > floor_ratio * median sigma`.
    pub floor_ratio: f64,
    /// Norms count as bounded when the log-norm slope is below `bounded_norm_slope / l_max`.
    pub bounded_norm_slope: f64,
    pub min_checkpoints: usize,
    pub min_span: f64,
}

impl Default for ClassificationThresholds {
    fn default() -> Self {
        ClassificationThresholds {
            vanishing_slope: 10.0,
            min_r_squared: 0.8,
            floor_ratio: 0.5,
            bounded_norm_slope: 1.0,
            min_checkpoints: 8,
            min_span: 10.0,
        }
    }
}

impl ClassificationThresholds {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("vanishing_slope", self.vanishing_slope),
            ("floor_ratio", self.floor_ratio),
            ("bounded_norm_slope", self.bounded_norm_slope),
            ("min_span", self.min_span),
        ];
        for (key, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(format!("sweep.thresholds.{key}"), "must be finite and > 0"));
            }
        }
        if !(0.0..=1.0).contains(&self.min_r_squared) {
            return Err(Error::config("sweep.thresholds.min_r_squared", "must lie in [0, 1]"));
        }
        if self.min_checkpoints < 3 {
            return Err(Error::config("sweep.thresholds.min_checkpoints", "must be >= 3"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransportLabel {
    Persistent,
    Vanishing,
    Indeterminate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TransportClassification {
    pub label: TransportLabel,
    pub norm_slope: f64,
    pub norm_r_squared: f64,
    pub sigma_slope: f64,
    pub sigma_r_squared: f64,
    /// `min sigma / median sigma` over the checkpoints.
    pub floor_ratio: f64,
    pub l_max: usize,
    /// Norm divergence and sigma behavior disagree with the two-sided dichotomy.
    pub contradiction: bool,
}

pub fn classify_transport(
    sweep: &[LSweepPoint],
    thresholds: &ClassificationThresholds,
) -> Result<TransportClassification> {
    thresholds.validate()?;
    if sweep.len() < thresholds.min_checkpoints {
        return Err(Error::InvalidInput(format!(
            "classification needs >= {} checkpoints, got {}",
            thresholds.min_checkpoints,
            sweep.len()
        )));
    }
    let l_min = sweep.iter().map(|p| p.length).min().unwrap();
    let l_max = sweep.iter().map(|p| p.length).max().unwrap();
    if (l_max as f64) < thresholds.min_span * l_min as f64 {
        return Err(Error::InvalidInput(format!(
            "checkpoints span {l_min}..={l_max}, need a factor of at least {}",
            thresholds.min_span
        )));
    }
    let xs: Vec<f64> = sweep.iter().map(|p| p.length as f64).collect();
    let norms: Vec<f64> = sweep.iter().map(|p| p.log_transfer_norm).collect();
    let logs: Vec<f64> = sweep.iter().map(|p| p.log_sigma_density).collect();
    let norm_fit = linear_fit(&xs, &norms).expect("span checked above");
    let sigma_fit = if logs.iter().all(|l| l.is_finite()) {
        linear_fit(&xs, &logs)
    } else {
        None
    };
    let sigmas: Vec<f64> = sweep.iter().map(|p| p.sigma_density).collect();
    let med = median(&sigmas);
    let min = sigmas.iter().copied().fold(f64::INFINITY, f64::min);
    let floor_ratio = if med > 0.0 { min / med } else { 0.0 };

    let lm = l_max as f64;
    let sigma_vanishes = sigma_fit
        .is_some_and(|f| f.slope < -thresholds.vanishing_slope / lm && f.r_squared > thresholds.min_r_squared);
    let sigma_floor = floor_ratio > thresholds.floor_ratio;
    let norm_bounded = norm_fit.slope < thresholds.bounded_norm_slope / lm;

    let label = if sigma_vanishes {
        TransportLabel::Vanishing
    } else if sigma_floor && norm_bounded {
        TransportLabel::Persistent
    } else {
        TransportLabel::Indeterminate
    };
    let contradiction = (sigma_vanishes && norm_bounded) || (sigma_floor && !sigma_vanishes && !norm_bounded);
    Ok(TransportClassification {
        label,
        norm_slope: norm_fit.slope,
        norm_r_squared: norm_fit.r_squared,
        sigma_slope: sigma_fit.map_or(f64::NAN, |f| f.slope),
        sigma_r_squared: sigma_fit.map_or(f64::NAN, |f| f.r_squared),
        floor_ratio,
        l_max,
        contradiction,
    })
}

/// Shortest length included in the ratio band by default.
pub const RATIO_BAND_MIN_LENGTH: usize = 200;

/// Width in decades of `sigma_L ||T_L||^2` over the checkpoints with `L >= l_from`.
///
/// Reported alongside a sweep, never asserted. `None` with fewer than two usable points.
pub fn ratio_band_decades(sweep: &[LSweepPoint], l_from: usize) -> Option<f64> {
    let logs: Vec<f64> = sweep
        .iter()
        .filter(|p| p.length >= l_from && p.log_sigma_density.is_finite())
        .map(|p| p.log_sigma_density + 2.0 * p.log_transfer_norm)
        .collect();
    if logs.len() < 2 {
        return None;
    }
    let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
    Some((hi - lo) / std::f64::consts::LN_10)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceRow {
    pub energy: f64,
    /// `None` when the sweep or the classification failed; see `error`.
    pub classification: Option<TransportClassification>,
    pub sigma_at_l_max: f64,
    pub log_sigma_at_l_max: f64,
    pub max_unitarity_residual: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub rows: Vec<EquivalenceRow>,
    pub persistent: usize,
    pub vanishing: usize,
    pub indeterminate: usize,
    pub failed: usize,
    pub contradictions: usize,
    /// Grid average of `sigma_{l_max}` over energies labeled persistent (NaN if none).
    pub mean_sigma_persistent: f64,
    pub mean_sigma_vanishing: f64,
    pub l_max: usize,
}

impl EquivalenceReport {
    pub fn max_unitarity_residual(&self) -> f64 {
        self.rows.iter().map(|r| r.max_unitarity_residual).fold(0.0, f64::max)
    }
}

/// Classifies every energy of `grid` and checks that sigma vanishing and norm divergence
/// co-occur.
pub fn equivalence_report(
    spec: &PotentialSpec,
    grid: &[f64],
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    thermo: &ThermoParams,
    checkpoints: &[usize],
    thresholds: &ClassificationThresholds,
) -> Result<EquivalenceReport> {
    thresholds.validate()?;
    let l_max = checkpoints.last().copied().unwrap_or(0);
    let rows: Vec<EquivalenceRow> = grid
        .par_iter()
        .map(|&energy| {
            let sweep = l_sweep(spec, energy, lead_l, lead_r, thermo, checkpoints);
            let classified = sweep.and_then(|s| classify_transport(&s, thresholds).map(|c| (s, c)));
            match classified {
                Ok((s, c)) => {
                    let last = s.last().unwrap();
                    EquivalenceRow {
                        energy,
                        classification: Some(c),
                        sigma_at_l_max: last.sigma_density,
                        log_sigma_at_l_max: last.log_sigma_density,
                        max_unitarity_residual: s.iter().map(|p| p.unitarity_residual).fold(0.0, f64::max),
                        error: None,
                    }
                }
                Err(e) => EquivalenceRow {
                    energy,
                    classification: None,
                    sigma_at_l_max: f64::NAN,
                    log_sigma_at_l_max: f64::NAN,
                    max_unitarity_residual: 0.0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();

    let count = |label| {
        rows.iter()
            .filter(|r| r.classification.is_some_and(|c| c.label == label))
            .count()
    };
    let mean_sigma = |label| {
        let v: Vec<f64> = rows
            .iter()
            .filter(|r| r.classification.is_some_and(|c| c.label == label))
            .map(|r| r.sigma_at_l_max)
            .collect();
        if v.is_empty() {
            f64::NAN
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(EquivalenceReport {
        persistent: count(TransportLabel::Persistent),
        vanishing: count(TransportLabel::Vanishing),
        indeterminate: count(TransportLabel::Indeterminate),
        failed: rows.iter().filter(|r| r.classification.is_none()).count(),
        contradictions: rows
            .iter()
            .filter(|r| r.classification.is_some_and(|c| c.contradiction))
            .count(),
        mean_sigma_persistent: mean_sigma(TransportLabel::Persistent),
        mean_sigma_vanishing: mean_sigma(TransportLabel::Vanishing),
        l_max,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leads() -> LeadModel {
        LeadModel::laplacian(1.0, 1.0).unwrap()
    }

    fn thermo() -> ThermoParams {
        ThermoParams::new(1.0, 1.0, 0.5, -0.5).unwrap()
    }

    fn point(length: usize, sigma: f64, log_norm: f64) -> LSweepPoint {
        LSweepPoint {
            length,
            sigma_density: sigma,
            transmission: sigma,
            log_transfer_norm: log_norm,
            resonance_flag: false,
            log_sigma_density: sigma.ln(),
            unitarity_residual: 0.0,
        }
    }

    #[test]
    fn checkpoints_are_geometric() {
        let c = geometric_checkpoints(10, 2000, 16);
        assert_eq!(c.first(), Some(&10));
        assert_eq!(c.last(), Some(&2000));
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(c.len(), 16);
        assert_eq!(geometric_checkpoints(1, 3, 10), vec![1, 2, 3]);
    }

    #[test]
    fn free_chain_is_persistent() {
        let cps = geometric_checkpoints(10, 2000, 16);
        let s = l_sweep(&PotentialSpec::Zero, 0.5, &leads(), &leads(), &thermo(), &cps).unwrap();
        let bound = (2.0 / (1.0f64 - 0.0625).sqrt()).ln() + 2.0f64.ln();
        for p in &s {
            assert!(p.log_transfer_norm <= bound);
            assert!(p.sigma_density > 0.0);
            assert!(p.unitarity_residual < 1e-10);
        }
        let c = classify_transport(&s, &ClassificationThresholds::default()).unwrap();
        assert_eq!(c.label, TransportLabel::Persistent, "{c:?}");
        assert!(!c.contradiction);
    }

    #[test]
    fn disordered_chain_ratio_band() {
        let cps = geometric_checkpoints(10, 2000, 16);
        let spec = PotentialSpec::Anderson { amplitude: 2.0, seed: 7 };
        let s = l_sweep(&spec, 0.5, &leads(), &leads(), &thermo(), &cps).unwrap();
        assert!(s.last().unwrap().log_transfer_norm > s[0].log_transfer_norm + 50.0);
        let width = ratio_band_decades(&s, RATIO_BAND_MIN_LENGTH).unwrap();
        assert!(width < 3.0, "{width}");
        assert!(ratio_band_decades(&s, 5000).is_none());
    }

    #[test]
    fn outside_window_is_rejected() {
        let err = l_sweep(&PotentialSpec::Zero, 2.5, &leads(), &leads(), &thermo(), &[10, 20]).unwrap_err();
        assert!(matches!(err, Error::Domain { .. }));
    }

    #[test]
    fn classification_rules() {
        let th = ClassificationThresholds::default();
        let cps = geometric_checkpoints(10, 1000, 10);
        let decaying: Vec<_> = cps.iter().map(|&l| point(l, (-0.3 * l as f64).exp(), 0.15 * l as f64)).collect();
        let c = classify_transport(&decaying, &th).unwrap();
        assert_eq!(c.label, TransportLabel::Vanishing);
        assert!(!c.contradiction);

        // oscillating within a factor 2 with slowly growing norms
        let wobbly: Vec<_> = cps
            .iter()
            .enumerate()
            .map(|(i, &l)| point(l, if i % 2 == 0 { 0.2 } else { 0.1 }, 2.0 * l as f64 / 1000.0))
            .collect();
        let c = classify_transport(&wobbly, &th).unwrap();
        assert_eq!(c.label, TransportLabel::Indeterminate);

        let bounded_but_vanishing: Vec<_> =
            cps.iter().map(|&l| point(l, (-0.3 * l as f64).exp(), 0.5)).collect();
        assert!(classify_transport(&bounded_but_vanishing, &th).unwrap().contradiction);

        assert!(classify_transport(&decaying[..5], &th).is_err());
        let narrow: Vec<_> = (100..110).map(|l| point(l, 0.1, 0.1)).collect();
        assert!(classify_transport(&narrow, &th).is_err());
    }

    #[test]
    fn energy_sweep_worked_point() {
        let th = ThermoParams::new(1.0, 2.0, 1.0, 0.0).unwrap();
        let recs = energy_sweep(&PotentialSpec::Zero, 1, &leads(), &leads(), &th, &[0.0, 3.0]).unwrap();
        let p = recs[0].outcome.as_ref().unwrap();
        assert!((p.transmission - 1.0).abs() < 1e-12);
        // outside the band the channel is closed
        assert_eq!(recs[1].outcome.as_ref().unwrap().transmission, 0.0);
        let eq = ThermoParams::new(1.0, 1.0, 0.0, 0.0).unwrap();
        let grid: Vec<f64> = (0..50).map(|i| -1.9 + 3.8 * i as f64 / 49.0).collect();
        let recs = energy_sweep(&PotentialSpec::Zero, 7, &leads(), &leads(), &eq, &grid).unwrap();
        assert!(recs.iter().all(|r| r.outcome.as_ref().unwrap().densities.sigma == 0.0));
    }
}

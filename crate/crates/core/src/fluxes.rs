//! Spectral densities of the steady-state fluxes and their energy integrals.

use std::f64::consts::PI;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::green::{coupled_green_direct, SelfEnergyPair};
use crate::leads::{sigma_intersection, LeadModel};
use crate::model::{log_abs_occupation_difference, occupation_difference, SampleSpec, ThermoParams};
use crate::quadrature::{integrate, QuadratureOptions};
use crate::scattering::{t_matrix, transmission, unitarity_residual};

/// Densities at one energy; right-reservoir densities are the negated left ones.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralDensities {
    pub phi_l: f64,
    pub phi_r: f64,
    pub j_l: f64,
    pub j_r: f64,
    pub sigma: f64,
}

pub fn spectral_densities(energy: f64, transmission: f64, thermo: &ThermoParams) -> SpectralDensities {
    let (xl, xr) = (thermo.xi_l(energy), thermo.xi_r(energy));
    let j_l = transmission * occupation_difference(xl, xr);
    let phi_l = energy * j_l;
    // (xi_r - xi_l) and (rho_l - rho_r) share a sign, so sigma >= 0 by construction
    let sigma = (transmission * (xr - xl) * occupation_difference(xl, xr)).max(0.0);
    SpectralDensities {
        phi_l,
        phi_r: -phi_l,
        j_l,
        j_r: -j_l,
        sigma,
    }
}

/// `ln sigma` from `ln T`; finite wherever the transmission is positive, even if it underflows.
pub fn log_sigma_density(energy: f64, log_transmission: f64, thermo: &ThermoParams) -> f64 {
    let (xl, xr) = (thermo.xi_l(energy), thermo.xi_r(energy));
    if xl == xr {
        return f64::NEG_INFINITY;
    }
    log_transmission + (xr - xl).abs().ln() + log_abs_occupation_difference(xl, xr)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub tolerance: f64,
    pub max_evaluations: usize,
    pub edge_margin: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            tolerance: 1e-8,
            max_evaluations: 2_000_000,
            edge_margin: 1e-6,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::config("quadrature.tolerance", "must be finite and > 0"));
        }
        if !(self.edge_margin.is_finite() && self.edge_margin >= 0.0) {
            return Err(Error::config("quadrature.edge_margin", "must be finite and >= 0"));
        }
        if self.max_evaluations < 15 {
            return Err(Error::config("quadrature.max_evaluations", "must be >= 15"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub sample: SampleSpec,
    pub lead_l: LeadModel,
    pub lead_r: LeadModel,
    pub thermo: ThermoParams,
    pub quadrature: QuadratureConfig,
}

/// Transmission and densities at one energy through the direct self-energy pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointEvaluation {
    pub energy: f64,
    pub transmission: f64,
    pub unitarity_residual: f64,
    pub densities: SpectralDensities,
}

pub fn evaluate_point(
    sample: &SampleSpec,
    lead_l: &LeadModel,
    lead_r: &LeadModel,
    thermo: &ThermoParams,
    energy: f64,
) -> Result<PointEvaluation> {
    let se = SelfEnergyPair::from_leads(lead_l, lead_r, energy)?;
    let (tr, residual) = if se.left.im() > 0.0 && se.right.im() > 0.0 {
        let g = coupled_green_direct(sample.potential(), energy, sample.length(), &se)?;
        let t = t_matrix(&g.green, &se);
        (transmission(&t)?, unitarity_residual(&t))
    } else {
        // a closed channel carries nothing
        (0.0, 0.0)
    };
    Ok(PointEvaluation {
        energy,
        transmission: tr,
        unitarity_residual: residual,
        densities: spectral_densities(energy, tr, thermo),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FluxResult {
    pub energy_flux_l: f64,
    pub energy_flux_r: f64,
    pub charge_flux_l: f64,
    pub charge_flux_r: f64,
    pub entropy_flux: f64,
    pub quadrature_error_estimate: f64,
    pub evaluations: usize,
    pub converged: bool,
    pub no_open_channel: bool,
    pub max_unitarity_residual: f64,
}

impl FluxResult {
    fn closed() -> Self {
        FluxResult {
            energy_flux_l: 0.0,
            energy_flux_r: 0.0,
            charge_flux_l: 0.0,
            charge_flux_r: 0.0,
            entropy_flux: 0.0,
            quadrature_error_estimate: 0.0,
            evaluations: 0,
            converged: true,
            no_open_channel: true,
            max_unitarity_residual: 0.0,
        }
    }
}

/// `(1/2 pi) * integral` of the densities over the open-channel window minus edge margins.
pub fn integrate_fluxes(config: &SystemConfig) -> Result<FluxResult> {
    config.thermo.validate()?;
    config.quadrature.validate()?;
    config.lead_l.validate()?;
    config.lead_r.validate()?;
    let window = sigma_intersection(&config.lead_l, &config.lead_r).shrink(config.quadrature.edge_margin);
    if window.is_empty() {
        return Ok(FluxResult::closed());
    }
    let options = QuadratureOptions {
        tolerance: config.quadrature.tolerance * 2.0 * PI,
        max_evaluations: config.quadrature.max_evaluations,
        max_initial_width: PI / (config.sample.length() + 1) as f64,
    };
    // f64 bit patterns of non-negative numbers order like the numbers
    let max_residual = AtomicU64::new(0);
    let integral = integrate(window.intervals(), &options, |e| {
        let p = evaluate_point(&config.sample, &config.lead_l, &config.lead_r, &config.thermo, e)?;
        max_residual.fetch_max(p.unitarity_residual.to_bits(), Ordering::Relaxed);
        Ok([p.densities.phi_l, p.densities.j_l, p.densities.sigma])
    })?;
    let scale = 1.0 / (2.0 * PI);
    let [phi, j, sigma] = integral.value;
    Ok(FluxResult {
        energy_flux_l: phi * scale,
        energy_flux_r: -phi * scale,
        charge_flux_l: j * scale,
        charge_flux_r: -j * scale,
        entropy_flux: sigma * scale,
        quadrature_error_estimate: integral.max_error() * scale,
        evaluations: integral.evaluations,
        converged: integral.converged,
        no_open_channel: false,
        max_unitarity_residual: f64::from_bits(max_residual.into_inner()),
    })
}

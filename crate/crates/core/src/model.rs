//! Thermodynamic parameters of the two reservoirs and the Fermi-Dirac machinery.
//!
//! Units: hbar = e = 1 and the hopping amplitude of the sample equals 1.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::potentials::PotentialValues;

/// Inverse temperatures and chemical potentials of the left and right reservoirs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermoParams {
    pub beta_l: f64,
    pub beta_r: f64,
    pub mu_l: f64,
    pub mu_r: f64,
}

impl ThermoParams {
    pub fn new(beta_l: f64, beta_r: f64, mu_l: f64, mu_r: f64) -> Result<Self> {
        let params = ThermoParams {
            beta_l,
            beta_r,
            mu_l,
            mu_r,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        let check_beta = |name: &str, beta: f64| {
            if beta.is_finite() && beta > 0.0 {
                Ok(())
            } else {
                Err(Error::config(
                    format!("thermo.{name}"),
                    format!("inverse temperature must be finite and > 0, got {beta}"),
                ))
            }
        };
        check_beta("beta_l", self.beta_l)?;
        check_beta("beta_r", self.beta_r)?;
        for (name, mu) in [("mu_l", self.mu_l), ("mu_r", self.mu_r)] {
            if !mu.is_finite() {
                return Err(Error::config(
                    format!("thermo.{name}"),
                    "chemical potential must be finite",
                ));
            }
        }
        Ok(())
    }

    pub fn is_equilibrium(&self) -> bool {
        self.beta_l == self.beta_r && self.mu_l == self.mu_r
    }

    pub fn xi_l(&self, energy: f64) -> f64 {
        xi(energy, self.beta_l, self.mu_l)
    }

    pub fn xi_r(&self, energy: f64) -> f64 {
        xi(energy, self.beta_r, self.mu_r)
    }
}

/// A finite sample on the sites `0..=length`, coupled at sites 0 and `length`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSpec {
    length: usize,
    potential: PotentialValues,
}

impl SampleSpec {
    pub fn new(length: usize, potential: PotentialValues) -> Result<Self> {
        if length < 1 {
            return Err(Error::InvalidInput(
                "sample length must be >= 1 (the two coupling sites must differ)".into(),
            ));
        }
        if potential.len() != length + 1 {
            return Err(Error::InvalidInput(format!(
                "potential has {} entries, sample of length {} needs {}",
                potential.len(),
                length,
                length + 1
            )));
        }
        Ok(SampleSpec { length, potential })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn potential(&self) -> &PotentialValues {
        &self.potential
    }
}

/// Reduced energy `beta * (E - mu)`.
pub fn xi(energy: f64, beta: f64, mu: f64) -> f64 {
    beta * (energy - mu)
}

/// Fermi-Dirac occupation `1 / (1 + exp(beta (E - mu)))`.
pub fn fermi_density(energy: f64, beta: f64, mu: f64) -> f64 {
    logistic_complement(xi(energy, beta, mu))
}

/// `1 / (1 + e^x)` without overflow for either sign of `x`.
pub(crate) fn logistic_complement(x: f64) -> f64 {
    if x > 0.0 {
        let e = (-x).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `ln cosh(x)`, finite for all finite `x`.
fn ln_cosh(x: f64) -> f64 {
    let a = x.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

/// `ln sinh(y)` for `y >= 0`; `-inf` at zero.
fn ln_sinh(y: f64) -> f64 {
    debug_assert!(y >= 0.0);
    y + (-(-2.0 * y).exp_m1()).ln() - std::f64::consts::LN_2
}

/// `rho(xi_l) - rho(xi_r)`, evaluated without cancellation.
///
/// Uses `rho_l - rho_r = sinh((xi_r - xi_l)/2) / (2 cosh(xi_l/2) cosh(xi_r/2))`, so the
/// sign is exactly the sign of `xi_r - xi_l` and the relative accuracy does not degrade
/// when the two occupations are close.
pub fn occupation_difference(xi_l: f64, xi_r: f64) -> f64 {
    let half_gap = 0.5 * (xi_r - xi_l);
    let (hl, hr) = (0.5 * xi_l, 0.5 * xi_r);
    if half_gap.abs() < 300.0 && hl.abs() < 300.0 && hr.abs() < 300.0 {
        half_gap.sinh() / (2.0 * hl.cosh() * hr.cosh())
    } else {
        half_gap.signum() * log_abs_occupation_difference(xi_l, xi_r).exp()
    }
}

/// `ln |rho(xi_l) - rho(xi_r)|`; stays finite where the difference itself underflows.
pub fn log_abs_occupation_difference(xi_l: f64, xi_r: f64) -> f64 {
    let half_gap = 0.5 * (xi_r - xi_l);
    ln_sinh(half_gap.abs()) - ln_cosh(0.5 * xi_l) - ln_cosh(0.5 * xi_r) - std::f64::consts::LN_2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn xi_examples() {
        assert_eq!(xi(3.7, 2.5, 3.7), 0.0);
        assert_eq!(xi(1.0, 2.0, 0.0), 2.0);
        assert_eq!(xi(0.0, 1.0, 1.0), -1.0);
    }

    #[test]
    fn fermi_examples() {
        assert_eq!(fermi_density(0.3, 4.0, 0.3), 0.5);
        // 1 / (1 + e^-1), evaluated to 20 digits
        let expected = 0.731_058_578_630_005_f64;
        assert!((fermi_density(0.0, 1.0, 1.0) - expected).abs() < 1e-15);
    }

    #[test]
    fn fermi_far_tail_does_not_overflow() {
        // e^-1000 is below the smallest subnormal, so the tail underflows to zero.
        let v = fermi_density(1000.0, 1.0, 0.0);
        assert!(v.is_finite() && (0.0..=1e-300).contains(&v));
        let w = fermi_density(-1000.0, 1.0, 0.0);
        assert_eq!(w, 1.0);
        let v = fermi_density(700.0, 1.0, 0.0);
        assert!(v > 0.0 && v <= 1e-300);
    }

    #[test]
    fn thermo_validation_names_key() {
        let err = ThermoParams::new(-1.0, 1.0, 0.0, 0.0).unwrap_err();
        assert!(err.to_string().contains("thermo.beta_l"), "{err}");
        assert!(ThermoParams::new(1.0, 1.0, 0.2, 0.2).unwrap().is_equilibrium());
        assert!(!ThermoParams::new(1.0, 2.0, 0.2, 0.2).unwrap().is_equilibrium());
    }

    #[test]
    fn sample_rejects_degenerate_length() {
        let pot = PotentialValues::new(vec![0.0]).unwrap();
        assert!(SampleSpec::new(0, pot).is_err());
        let pot = PotentialValues::new(vec![0.0; 3]).unwrap();
        assert!(SampleSpec::new(1, pot).is_err());
    }

    #[test]
    fn occupation_difference_example() {
        // beta_l=1, mu_l=1, beta_r=2, mu_r=0 at E=0: rho_l - rho_r = 0.7310585786 - 0.5
        let d = occupation_difference(-1.0, 0.0);
        assert!((d - 0.231_058_578_630_005).abs() < 1e-15);
    }

    #[test]
    fn log_occupation_difference_survives_underflow() {
        let l = log_abs_occupation_difference(2000.0, 2001.0);
        // rho ~ e^-xi in the tail: ln(e^-2000 - e^-2001)
        let expected = -2000.0 + (1.0 - (-1.0f64).exp()).ln();
        assert!((l - expected).abs() < 1e-9, "{l} vs {expected}");
        assert_eq!(occupation_difference(2000.0, 2001.0), 0.0);
    }

    proptest! {
        #[test]
        fn particle_hole_symmetry(e in -50.0f64..50.0, beta in 0.01f64..20.0, mu in -5.0f64..5.0) {
            let s = fermi_density(e, beta, mu) + fermi_density(2.0 * mu - e, beta, mu);
            prop_assert!((s - 1.0).abs() < 1e-14);
        }

        #[test]
        fn strictly_decreasing(e in -5.0f64..5.0, de in 1e-3f64..2.0, beta in 0.1f64..5.0, mu in -2.0f64..2.0) {
            prop_assert!(fermi_density(e, beta, mu) > fermi_density(e + de, beta, mu));
        }

        #[test]
        fn occupation_sign_follows_xi(e in -10.0f64..10.0, bl in 0.1f64..5.0, br in 0.1f64..5.0,
                                      ml in -2.0f64..2.0, mr in -2.0f64..2.0) {
            let (xl, xr) = (xi(e, bl, ml), xi(e, br, mr));
            let d = occupation_difference(xl, xr);
            let naive = fermi_density(e, bl, ml) - fermi_density(e, br, mr);
            prop_assert_eq!(d.signum() * (xr - xl).signum() >= 0.0, true);
            prop_assert!((d - naive).abs() < 1e-14);
            if xr != xl {
                prop_assert!((log_abs_occupation_difference(xl, xr) - d.abs().ln()).abs() < 1e-9);
            }
        }
    }
}

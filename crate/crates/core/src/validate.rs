//! Built-in invariant suite run by the `validate` command.
//!
//! Every check compares two routes that share no code beyond the inputs, or tests an
//! identity that must hold at rounding level.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::fluxes::{integrate_fluxes, spectral_densities, QuadratureConfig, SystemConfig};
use crate::green::{
    coupled_green, coupled_green_direct, graph_map_check, sample_green_direct, sample_green_via_transfer,
    GreenMatrix2, SelfEnergyPair,
};
use crate::leads::{sigma_intersection, LeadModel};
use crate::model::{SampleSpec, ThermoParams};
use crate::potentials::{generate, PotentialSpec};
use crate::scattering::{s_matrix, t_matrix, transmission, unitarity_residual};
use crate::transfer::product;

const SUITE_SEED: u64 = 0x5eed_2024;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest observed violation, in the units of `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    pub points: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub passed: bool,
    pub checks: Vec<CheckResult>,
    pub max_unitarity_residual: f64,
}

/// The potential families exercised by the suite.
pub fn test_families() -> Vec<PotentialSpec> {
    vec![
        PotentialSpec::Zero,
        PotentialSpec::Constant { value: 0.5 },
        PotentialSpec::Periodic {
            cell: vec![1.0, 0.0],
        },
        PotentialSpec::Anderson {
            amplitude: 0.5,
            seed: 42,
        },
        PotentialSpec::Anderson {
            amplitude: 2.0,
            seed: 7,
        },
    ]
}

struct Tally {
    worst: f64,
    points: usize,
    skipped: usize,
    failed_eval: bool,
}

impl Tally {
    fn new() -> Self {
        Tally {
            worst: 0.0,
            points: 0,
            skipped: 0,
            failed_eval: false,
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.worst = self.worst.max(other.worst);
        self.points += other.points;
        self.skipped += other.skipped;
        self.failed_eval |= other.failed_eval;
        self
    }

    fn observe(&mut self, value: f64) {
        self.points += 1;
        // NaN counts as a failure
        self.worst = if value.is_nan() { f64::INFINITY } else { self.worst.max(value) };
    }

    fn finish(self, name: &str, tolerance: f64) -> CheckResult {
        CheckResult {
            name: name.to_string(),
            passed: !self.failed_eval && self.worst < tolerance && self.points > 0,
            worst: self.worst,
            tolerance,
            points: self.points,
            skipped: self.skipped,
        }
    }
}

fn midpoints(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * (i as f64 + 0.5) / n as f64).collect()
}

fn random_energies(seed: u64, lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(lo..hi)).collect()
}

fn unitarity_check(lead_l: &LeadModel, lead_r: &LeadModel) -> (CheckResult, f64) {
    let window = sigma_intersection(lead_l, lead_r).shrink(1e-6);
    let jobs: Vec<(PotentialSpec, usize)> = test_families()
        .into_iter()
        .flat_map(|f| [10, 50, 200, 1000].map(|l| (f.clone(), l)))
        .collect();
    let tally = jobs
        .par_iter()
        .map(|(spec, length)| {
            let mut t = Tally::new();
            let Ok(pot) = generate(spec, *length) else {
                t.failed_eval = true;
                return t;
            };
            for &(a, b) in window.intervals() {
                for e in midpoints(a, b, 500 / window.intervals().len()) {
                    let r = SelfEnergyPair::from_leads(lead_l, lead_r, e)
                        .and_then(|se| coupled_green_direct(&pot, e, *length, &se).map(|g| (se, g)));
                    match r {
                        Ok((se, g)) => {
                            let tm = t_matrix(&g.green, &se);
                            let reciprocity = (tm.t_lr().norm() - tm.t_rl().norm()).abs();
                            t.observe(unitarity_residual(&tm).max(reciprocity));
                            if transmission(&tm).is_err() {
                                t.failed_eval = true;
                            }
                        }
                        Err(_) => t.failed_eval = true,
                    }
                }
            }
            t
        })
        .reduce(Tally::new, Tally::merge);
    let worst = tally.worst;
    (tally.finish("unitarity_and_reciprocity", 1e-10), worst)
}

/// Decoupled and coupled Green matrices: transfer route vs direct solves.
fn green_route_checks(lead_l: &LeadModel, lead_r: &LeadModel) -> Vec<CheckResult> {
    let jobs: Vec<(usize, PotentialSpec, usize)> = test_families()
        .into_iter()
        .enumerate()
        .flat_map(|(i, f)| [10, 50, 200].map(|l| (i, f.clone(), l)))
        .collect();
    let (decoupled, coupled) = jobs
        .par_iter()
        .map(|(i, spec, length)| {
            let mut d = Tally::new();
            let mut c = Tally::new();
            let pot = generate(spec, *length).expect("suite potentials are valid");
            for e in random_energies(SUITE_SEED + *i as u64 * 1000 + *length as u64, -1.9, 1.9, 100) {
                let Ok(direct) = sample_green_direct(&pot, e, *length) else {
                    d.skipped += 1;
                    c.skipped += 1;
                    continue;
                };
                if direct.condition > 1e8 {
                    d.skipped += 1;
                    c.skipped += 1;
                    continue;
                }
                match product(&pot, e, *length, &[]).and_then(|(tm, _)| sample_green_via_transfer(&tm)) {
                    Ok(via) => d.observe(via.relative_difference(&direct.green)),
                    Err(_) => d.failed_eval = true,
                }
                let Ok(se) = SelfEnergyPair::from_leads(lead_l, lead_r, e) else {
                    c.skipped += 1;
                    continue;
                };
                if !(se.left.im() > 0.0 || se.right.im() > 0.0) {
                    c.skipped += 1;
                    continue;
                }
                match (coupled_green(&direct.green, &se), coupled_green_direct(&pot, e, *length, &se)) {
                    (Ok(a), Ok(b)) => c.observe(a.relative_difference(&b.green)),
                    _ => c.failed_eval = true,
                }
            }
            (d, c)
        })
        .reduce(
            || (Tally::new(), Tally::new()),
            |(a, b), (c, d)| (a.merge(c), b.merge(d)),
        );
    vec![
        decoupled.finish("decoupled_green_transfer_vs_direct", 1e-9),
        coupled.finish("coupled_green_identity_vs_direct", 1e-8),
    ]
}

fn graph_map_suite(lead_l: &LeadModel, lead_r: &LeadModel) -> CheckResult {
    let jobs: Vec<(PotentialSpec, usize)> = test_families()
        .into_iter()
        .flat_map(|f| [10, 50, 200, 500].map(|l| (f.clone(), l)))
        .collect();
    jobs.par_iter()
        .map(|(spec, length)| {
            let mut t = Tally::new();
            let pot = generate(spec, *length).expect("suite potentials are valid");
            let window = sigma_intersection(lead_l, lead_r).shrink(1e-3);
            for &(a, b) in window.intervals() {
                for e in midpoints(a, b, 20) {
                    let r = SelfEnergyPair::from_leads(lead_l, lead_r, e).and_then(|se| {
                        let g = coupled_green_direct(&pot, e, *length, &se)?;
                        let (tm, _) = product(&pot, e, *length, &[])?;
                        Ok(graph_map_check(&g.green, &tm, &se))
                    });
                    match r {
                        Ok(res) => t.observe(res),
                        Err(_) => t.failed_eval = true,
                    }
                }
            }
            t
        })
        .reduce(Tally::new, Tally::merge)
        .finish("graph_map_residual", 1e-8)
}

fn worked_example() -> CheckResult {
    let mut t = Tally::new();
    let lead = LeadModel::laplacian(1.0, 1.0).expect("valid lead");
    let r: Result<()> = (|| {
        let pot = generate(&PotentialSpec::Zero, 1)?;
        let se = SelfEnergyPair::from_leads(&lead, &lead, 0.0)?;
        let g = coupled_green_direct(&pot, 0.0, 1, &se)?.green;
        let c = Complex64::new;
        let expected = GreenMatrix2::new(c(0.0, 0.5), c(-0.5, 0.0), c(-0.5, 0.0), c(0.0, 0.5));
        t.observe(g.relative_difference(&expected));
        let tm = t_matrix(&g, &se);
        t.observe((transmission(&tm)? - 1.0).abs());
        let s = s_matrix(&tm).0;
        let expected_s = [[c(0.0, 0.0), c(0.0, -1.0)], [c(0.0, -1.0), c(0.0, 0.0)]];
        for (x, y) in s.iter().flatten().zip(expected_s.iter().flatten()) {
            t.observe((x - y).norm());
        }
        Ok(())
    })();
    if r.is_err() {
        t.failed_eval = true;
    }
    t.finish("worked_example_two_sites", 1e-12)
}

fn flux_system(spec: &PotentialSpec, length: usize, lead_l: &LeadModel, lead_r: &LeadModel, thermo: ThermoParams) -> Result<SystemConfig> {
    Ok(SystemConfig {
        sample: SampleSpec::new(length, generate(spec, length)?)?,
        lead_l: lead_l.clone(),
        lead_r: lead_r.clone(),
        thermo,
        quadrature: QuadratureConfig::default(),
    })
}

fn random_thermo(rng: &mut ChaCha8Rng) -> ThermoParams {
    loop {
        let t = ThermoParams {
            beta_l: rng.random_range(0.2..5.0),
            beta_r: rng.random_range(0.2..5.0),
            mu_l: rng.random_range(-1.0..1.0),
            mu_r: rng.random_range(-1.0..1.0),
        };
        if !t.is_equilibrium() {
            return t;
        }
    }
}

/// Conservation and the entropy identity at sample nodes; integrated second law.
fn thermodynamic_checks(lead_l: &LeadModel, lead_r: &LeadModel, thermo: &ThermoParams) -> Vec<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let mut settings: Vec<ThermoParams> = (0..10).map(|_| random_thermo(&mut rng)).collect();
    if !thermo.is_equilibrium() {
        settings.push(*thermo);
    }
    let mut pointwise = Tally::new();
    for th in &settings {
        for e in midpoints(-2.5, 2.5, 200) {
            for tr in [0.0, 0.3, 1.0] {
                let d = spectral_densities(e, tr, th);
                let identity = -th.beta_l * (d.phi_l - th.mu_l * d.j_l) - th.beta_r * (d.phi_r - th.mu_r * d.j_r);
                let scale = (th.beta_l + th.beta_r) * (e.abs() + th.mu_l.abs() + th.mu_r.abs() + 1.0);
                let conservation = (d.phi_l + d.phi_r).abs() + (d.j_l + d.j_r).abs();
                let negativity = (-d.sigma).max(0.0);
                pointwise.observe(((identity - d.sigma).abs() / scale).max(conservation).max(negativity));
            }
        }
    }
    let integrated = settings
        .par_iter()
        .map(|th| {
            let mut t = Tally::new();
            for (spec, length) in [(PotentialSpec::Zero, 10), (PotentialSpec::Anderson { amplitude: 0.5, seed: 42 }, 50)] {
                match flux_system(&spec, length, lead_l, lead_r, *th).and_then(|s| integrate_fluxes(&s)) {
                    Ok(r) => {
                        let deficit = (-(r.entropy_flux + r.quadrature_error_estimate)).max(0.0);
                        let sums = (r.energy_flux_l + r.energy_flux_r).abs() + (r.charge_flux_l + r.charge_flux_r).abs();
                        t.observe(deficit.max(sums));
                    }
                    Err(_) => t.failed_eval = true,
                }
            }
            t
        })
        .reduce(Tally::new, Tally::merge);
    let equilibrium = {
        let mut t = Tally::new();
        let th = ThermoParams {
            beta_l: thermo.beta_l,
            beta_r: thermo.beta_l,
            mu_l: thermo.mu_l,
            mu_r: thermo.mu_l,
        };
        for spec in [PotentialSpec::Zero, PotentialSpec::Anderson { amplitude: 2.0, seed: 7 }] {
            match flux_system(&spec, 20, lead_l, lead_r, th).and_then(|s| integrate_fluxes(&s)) {
                Ok(r) => t.observe(r.energy_flux_l.abs().max(r.charge_flux_l.abs()).max(r.entropy_flux.abs())),
                Err(_) => t.failed_eval = true,
            }
        }
        t
    };
    vec![
        pointwise.finish("pointwise_conservation_and_entropy_identity", 1e-12),
        integrated.finish("integrated_second_law_and_conservation", 1e-15),
        equilibrium.finish("equilibrium_null", 1e-12),
    ]
}

pub fn run_validation(lead_l: &LeadModel, lead_r: &LeadModel, thermo: &ThermoParams) -> ValidationReport {
    let (unitarity, max_residual) = unitarity_check(lead_l, lead_r);
    let mut checks = vec![unitarity];
    checks.extend(green_route_checks(lead_l, lead_r));
    checks.push(graph_map_suite(lead_l, lead_r));
    checks.push(worked_example());
    checks.extend(thermodynamic_checks(lead_l, lead_r, thermo));
    ValidationReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
        max_unitarity_residual: max_residual,
    }
}

//! Boundary Green matrices of the sample.
//!
//! `G0(E)` restricts `(h_S,L - E)^{-1}` to the coupling sites `{0, L}`; `G(E + i0)` does the
//! same for the coupled operator, which on the sample is `h_S,L - E - F_l P_0 - F_r P_L`.
//! Both are available through a direct pivoted tridiagonal solve; `G0` also through the
//! transfer matrix and `G` through `G0` and the lead self-energies, so the three routes can
//! be checked against each other.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::leads::{weiss_boundary, LeadModel, WeissValue};
use crate::potentials::PotentialValues;
use crate::transfer::ScaledMatrix2;
use crate::tridiagonal::TridiagonalLu;

/// Condition estimate above which a direct solve is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;
/// `|T11| / ||T||` below which `E` counts as a Dirichlet eigenvalue of the sample.
pub const RESONANCE_LIMIT: f64 = 1e-12;
/// `|det(I - G0 F)|` below which the coupling identity is not solved.
pub const COUPLING_DET_LIMIT: f64 = 1e-14;

type C2x2 = [[Complex64; 2]; 2];

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// `<psi_a, (. - z)^{-1} psi_b>` for `a, b` in `{l, r}`; index 0 is `l` (site 0), 1 is `r`
/// (site `L`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GreenMatrix2(pub C2x2);

impl GreenMatrix2 {
    pub fn new(g_ll: Complex64, g_lr: Complex64, g_rl: Complex64, g_rr: Complex64) -> Self {
        GreenMatrix2([[g_ll, g_lr], [g_rl, g_rr]])
    }

    pub fn real(g_ll: f64, g_lr: f64, g_rl: f64, g_rr: f64) -> Self {
        let c = |x| Complex64::new(x, 0.0);
        GreenMatrix2::new(c(g_ll), c(g_lr), c(g_rl), c(g_rr))
    }

    pub fn zero() -> Self {
        GreenMatrix2([[ZERO; 2]; 2])
    }

    pub fn g_ll(&self) -> Complex64 {
        self.0[0][0]
    }

    pub fn g_lr(&self) -> Complex64 {
        self.0[0][1]
    }

    pub fn g_rl(&self) -> Complex64 {
        self.0[1][0]
    }

    pub fn g_rr(&self) -> Complex64 {
        self.0[1][1]
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |self - other| / max |other|` over entries.
    pub fn relative_difference(&self, other: &GreenMatrix2) -> f64 {
        let diff = self
            .0
            .iter()
            .flatten()
            .zip(other.0.iter().flatten())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max);
        let scale = other.max_abs();
        if scale == 0.0 {
            diff
        } else {
            diff / scale
        }
    }

    pub fn apply(&self, x: [Complex64; 2]) -> [Complex64; 2] {
        let g = &self.0;
        [
            g[0][0] * x[0] + g[0][1] * x[1],
            g[1][0] * x[0] + g[1][1] * x[1],
        ]
    }
}

/// Lead self-energies `F_l(E + i0)`, `F_r(E + i0)` placed on sites 0 and `L`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfEnergyPair {
    pub left: WeissValue,
    pub right: WeissValue,
}

impl SelfEnergyPair {
    pub fn new(left: Complex64, right: Complex64) -> Self {
        SelfEnergyPair {
            left: WeissValue(left),
            right: WeissValue(right),
        }
    }

    pub fn from_leads(left: &LeadModel, right: &LeadModel, energy: f64) -> Result<Self> {
        Ok(SelfEnergyPair {
            left: weiss_boundary(left, energy)?,
            right: weiss_boundary(right, energy)?,
        })
    }

    pub fn zero() -> Self {
        SelfEnergyPair::new(ZERO, ZERO)
    }
}

/// A direct solve together with its 1-norm condition estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectGreen {
    pub green: GreenMatrix2,
    pub condition: f64,
    /// `ln |G_lr|`, accurate even where `G_lr` itself underflows.
    pub ln_abs_lr: f64,
}

/// `G0` from `T_L(E) = [[a, b], [c, d]]`: `G0 = [[-b/a, 1/a], [1/a, c/a]]`.
pub fn sample_green_via_transfer(transfer: &ScaledMatrix2) -> Result<GreenMatrix2> {
    let (m, log_scale) = transfer.to_parts();
    let [[a, b], [c, _]] = m;
    let norm = (transfer.log_spectral_norm() - log_scale).exp();
    let indicator = a.abs() / norm;
    if indicator < RESONANCE_LIMIT {
        return Err(Error::Resonance {
            energy: f64::NAN,
            indicator,
        });
    }
    let off = (-log_scale).exp() / a;
    Ok(GreenMatrix2::real(-b / a, off, off, c / a))
}

fn boundary_block(diag: &[Complex64]) -> std::result::Result<DirectGreen, (usize, f64)> {
    let n = diag.len();
    let off = vec![Complex64::new(-1.0, 0.0); n - 1];
    let lu = TridiagonalLu::factor(diag, &off).map_err(|p| (p.0, f64::INFINITY))?;
    let condition = lu.condition_estimate();
    if !(condition <= CONDITION_LIMIT) {
        return Err((n, condition));
    }
    let mut col0 = vec![ZERO; n];
    col0[0] = Complex64::new(1.0, 0.0);
    lu.solve(&mut col0);
    let (g_lr, ln_abs_lr, g_rr) = lu.last_column_ends();
    Ok(DirectGreen {
        green: GreenMatrix2::new(col0[0], g_lr, col0[n - 1], g_rr),
        condition,
        ln_abs_lr,
    })
}

fn check_length(potential: &PotentialValues, length: usize) -> Result<()> {
    if length < 1 {
        return Err(Error::InvalidInput("sample length must be >= 1".into()));
    }
    if potential.len() < length + 1 {
        return Err(Error::InvalidInput(format!(
            "potential has {} values, sample of length {length} needs {}",
            potential.len(),
            length + 1
        )));
    }
    Ok(())
}

/// `G0(E)` by solving `(h_S,L - E) u = delta_0` and `= delta_L` directly.
pub fn sample_green_direct(
    potential: &PotentialValues,
    energy: f64,
    length: usize,
) -> Result<DirectGreen> {
    check_length(potential, length)?;
    let diag: Vec<Complex64> = potential.as_slice()[..=length]
        .iter()
        .map(|v| Complex64::new(v - energy, 0.0))
        .collect();
    boundary_block(&diag).map_err(|(_, condition)| Error::Resonance {
        energy,
        indicator: 1.0 / condition,
    })
}

/// `G(E + i0) = (I - G0 F)^{-1} G0`, i.e. `((G0)^{-1} - F)^{-1}` without inverting `G0`.
pub fn coupled_green(g0: &GreenMatrix2, se: &SelfEnergyPair) -> Result<GreenMatrix2> {
    let g = &g0.0;
    let (fl, fr) = (se.left.0, se.right.0);
    let one = Complex64::new(1.0, 0.0);
    let m = [
        [one - g[0][0] * fl, -g[0][1] * fr],
        [-g[1][0] * fl, one - g[1][1] * fr],
    ];
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    if det.norm() < COUPLING_DET_LIMIT {
        return Err(Error::Numerical(format!(
            "det(I - G0 F) = {det} is numerically zero"
        )));
    }
    let inv = [[m[1][1] / det, -m[0][1] / det], [-m[1][0] / det, m[0][0] / det]];
    let mut out = [[ZERO; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = inv[i][0] * g[0][j] + inv[i][1] * g[1][j];
        }
    }
    Ok(GreenMatrix2(out))
}

/// `G(E + i0)` from the complex system `(h_S,L - E - F_l P_0 - F_r P_L) u = delta_a`.
pub fn coupled_green_direct(
    potential: &PotentialValues,
    energy: f64,
    length: usize,
    se: &SelfEnergyPair,
) -> Result<DirectGreen> {
    check_length(potential, length)?;
    if !(se.left.im() > 0.0 || se.right.im() > 0.0) {
        return Err(Error::Domain {
            energy,
            reason: "neither lead has Im F > 0; the coupled system may be singular".into(),
        });
    }
    let mut diag: Vec<Complex64> = potential.as_slice()[..=length]
        .iter()
        .map(|v| Complex64::new(v - energy, 0.0))
        .collect();
    diag[0] -= se.left.0;
    diag[length] -= se.right.0;
    boundary_block(&diag).map_err(|(_, condition)| {
        Error::Numerical(format!(
            "coupled system at E = {energy} ill-conditioned (estimate {condition:.3e})"
        ))
    })
}

/// Residual of the graph map taking `G(E + i0)` to `T_L(E)`.
///
/// For `(x, y)` in the standard basis and `(u, v) = G (x, y)`, returns the largest
/// `|| T (u, x + F_l u) - (y + F_r v, v) || / ||T||`, evaluated in scaled arithmetic.
pub fn graph_map_check(g: &GreenMatrix2, transfer: &ScaledMatrix2, se: &SelfEnergyPair) -> f64 {
    let (fl, fr) = (se.left.0, se.right.0);
    let log_norm = transfer.log_spectral_norm();
    let one = Complex64::new(1.0, 0.0);
    [[one, ZERO], [ZERO, one]]
        .iter()
        .map(|&[x, y]| {
            let [u, v] = g.apply([x, y]);
            let (lhs, log_scale) = transfer.apply([u, x + fl * u]);
            let rhs_scale = (-log_scale).exp();
            let rhs = [(y + fr * v) * rhs_scale, v * rhs_scale];
            let diff = ((lhs[0] - rhs[0]).norm_sqr() + (lhs[1] - rhs[1]).norm_sqr()).sqrt();
            diff * (log_scale - log_norm).exp()
        })
        .fold(0.0, f64::max)
}

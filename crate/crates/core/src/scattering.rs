//! T-matrix, S-matrix and transmission from the coupled boundary Green matrix.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::green::{GreenMatrix2, SelfEnergyPair};

/// Slack above 1 tolerated in the transmission before it is reported as an error.
pub const TRANSMISSION_SLACK: f64 = 1e-10;

type C2x2 = [[Complex64; 2]; 2];

/// `t(E) = 2i sqrt(Im F) G(E + i0) sqrt(Im F)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TMatrix(pub C2x2);

impl TMatrix {
    pub fn t_lr(&self) -> Complex64 {
        self.0[0][1]
    }

    pub fn t_rl(&self) -> Complex64 {
        self.0[1][0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SMatrix(pub C2x2);

pub fn t_matrix(g: &GreenMatrix2, se: &SelfEnergyPair) -> TMatrix {
    let w = [se.left.im().max(0.0).sqrt(), se.right.im().max(0.0).sqrt()];
    let two_i = Complex64::new(0.0, 2.0);
    let mut t = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (a, row) in t.iter_mut().enumerate() {
        for (b, entry) in row.iter_mut().enumerate() {
            *entry = two_i * w[a] * g.0[a][b] * w[b];
        }
    }
    TMatrix(t)
}

pub fn s_matrix(t: &TMatrix) -> SMatrix {
    let mut s = t.0;
    s[0][0] += 1.0;
    s[1][1] += 1.0;
    SMatrix(s)
}

/// Spectral norm of a complex 2x2 matrix.
pub fn spectral_norm(m: &C2x2) -> f64 {
    let fro2: f64 = m.iter().flatten().map(|z| z.norm_sqr()).sum();
    let det = (m[0][0] * m[1][1] - m[0][1] * m[1][0]).norm();
    let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0);
    ((fro2 + disc.sqrt()) / 2.0).sqrt()
}

/// `|| t* t + t + t* ||`, which vanishes exactly when `s` is unitary.
pub fn unitarity_residual(t: &TMatrix) -> f64 {
    let t = &t.0;
    let mut r = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            r[i][j] = t[0][i].conj() * t[0][j] + t[1][i].conj() * t[1][j] + t[i][j] + t[j][i].conj();
        }
    }
    spectral_norm(&r)
}

/// `|t_lr|^2`, clamped into `[0, 1]` within [`TRANSMISSION_SLACK`].
pub fn transmission(t: &TMatrix) -> Result<f64> {
    let value = t.t_lr().norm_sqr();
    if !value.is_finite() || value > 1.0 + TRANSMISSION_SLACK {
        return Err(Error::Unitarity(value));
    }
    Ok(value.min(1.0))
}

/// Scattering data at a single energy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringPoint {
    pub energy: f64,
    pub transmission: f64,
    pub unitarity_residual: f64,
    /// `ln |t_lr|^2`, finite even where the transmission underflows.
    pub log_transmission: f64,
}

impl ScatteringPoint {
    /// Builds the point from `G(E + i0)`; `ln_abs_lr` is `ln |G_lr|` when known more
    /// accurately than `G_lr` itself.
    pub fn new(
        energy: f64,
        g: &GreenMatrix2,
        se: &SelfEnergyPair,
        ln_abs_lr: Option<f64>,
    ) -> Result<Self> {
        let t = t_matrix(g, se);
        let transmission = transmission(&t)?;
        let ln_g = ln_abs_lr.unwrap_or_else(|| g.g_lr().norm().ln());
        let log_transmission =
            (2.0f64.ln() * 2.0 + se.left.im().ln() + se.right.im().ln() + 2.0 * ln_g).min(0.0);
        Ok(ScatteringPoint {
            energy,
            transmission,
            unitarity_residual: unitarity_residual(&t),
            log_transmission,
        })
    }
}

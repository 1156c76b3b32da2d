//! Transfer-matrix products `T_L(E) = T(v(L)) ... T(v(0))` with `T(v) = [[v - E, -1], [1, 0]]`.
//!
//! Products grow like `exp(gamma L)` for localized potentials, so they are never stored as a
//! plain 2x2 array. A [`ScaledMatrix2`] keeps the running product as `Q R` where `Q` is a
//! rotation and `R` is upper triangular with each entry carried as a mantissa and a binary
//! exponent. Every update is a Givens step followed by exact power-of-two renormalization,
//! which keeps the determinant `r11 * r22` accurate even when `T` is numerically rank one.
//! The conventional "matrix times scalar" view (`m`, `log_scale`) is materialized on demand.

use std::f64::consts::LN_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::potentials::PotentialValues;

pub type Matrix2 = [[f64; 2]; 2];

/// One factor of the product: `[[v - E, -1], [1, 0]]`.
pub fn one_step(v_x: f64, energy: f64) -> Matrix2 {
    [[v_x - energy, -1.0], [1.0, 0.0]]
}

pub fn mat_mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    [
        [
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
        ],
        [
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        ],
    ]
}

/// `mantissa * 2^exponent` with the mantissa in `[0.5, 1)` in absolute value, or zero.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Pow2 {
    mant: f64,
    exp: i64,
}

const EXP_CLAMP: i64 = 4000;

impl Pow2 {
    const ZERO: Pow2 = Pow2 { mant: 0.0, exp: 0 };
    const ONE: Pow2 = Pow2 { mant: 0.5, exp: 1 };

    fn new(x: f64) -> Self {
        let (mant, exp) = libm::frexp(x);
        Pow2 {
            mant,
            exp: exp as i64,
        }
    }

    fn is_zero(self) -> bool {
        self.mant == 0.0
    }

    fn scale(self, x: f64) -> Self {
        let r = Pow2::new(self.mant * x);
        if r.is_zero() {
            return Pow2::ZERO;
        }
        Pow2 {
            mant: r.mant,
            exp: r.exp + self.exp,
        }
    }

    fn mul(self, other: Pow2) -> Self {
        let r = Pow2::new(self.mant * other.mant);
        if r.is_zero() {
            return Pow2::ZERO;
        }
        Pow2 {
            mant: r.mant,
            exp: r.exp + self.exp + other.exp,
        }
    }

    fn add(self, other: Pow2) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let e = self.exp.max(other.exp);
        let r = Pow2::new(self.at(e) + other.at(e));
        if r.is_zero() {
            return Pow2::ZERO;
        }
        Pow2 {
            mant: r.mant,
            exp: r.exp + e,
        }
    }

    /// Value divided by `2^reference`.
    fn at(self, reference: i64) -> f64 {
        let shift = (self.exp - reference).clamp(-EXP_CLAMP, EXP_CLAMP);
        libm::scalbn(self.mant, shift as i32)
    }

    /// `e^s` for arbitrary real `s`.
    fn exp_of(s: f64) -> Self {
        let k = (s / LN_2).floor();
        let frac = s - k * LN_2;
        let r = Pow2::new(frac.exp());
        Pow2 {
            mant: r.mant,
            exp: r.exp + k as i64,
        }
    }

    fn ln_abs(self) -> f64 {
        self.mant.abs().ln() + self.exp as f64 * LN_2
    }
}

/// A real 2x2 matrix with a separated logarithmic scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledMatrix2 {
    cos: f64,
    sin: f64,
    r11: Pow2,
    r12: Pow2,
    r22: Pow2,
    unimodular: bool,
}

impl ScaledMatrix2 {
    pub fn identity() -> Self {
        ScaledMatrix2 {
            cos: 1.0,
            sin: 0.0,
            r11: Pow2::ONE,
            r12: Pow2::ZERO,
            r22: Pow2::ONE,
            unimodular: true,
        }
    }

    /// The matrix `exp(log_scale) * m`.
    pub fn from_parts(m: Matrix2, log_scale: f64) -> Result<Self> {
        if m.iter().flatten().any(|x| !x.is_finite()) || !log_scale.is_finite() {
            return Err(Error::InvalidInput("matrix entries must be finite".into()));
        }
        if m.iter().flatten().all(|&x| x == 0.0) {
            return Err(Error::InvalidInput("zero matrix has no scaled form".into()));
        }
        let mut out = ScaledMatrix2::identity();
        out.left_mul(&m);
        let factor = Pow2::exp_of(log_scale);
        out.r11 = out.r11.mul(factor);
        out.r12 = out.r12.mul(factor);
        out.r22 = out.r22.mul(factor);
        out.unimodular = false;
        Ok(out)
    }

    /// Replaces `self` by `m * self`.
    pub fn left_mul(&mut self, m: &Matrix2) {
        let (c, s) = (self.cos, self.sin);
        let n00 = m[0][0] * c + m[0][1] * s;
        let n01 = -m[0][0] * s + m[0][1] * c;
        let n10 = m[1][0] * c + m[1][1] * s;
        let n11 = -m[1][0] * s + m[1][1] * c;
        let rho = n00.hypot(n10);
        let (c2, s2) = if rho == 0.0 {
            (1.0, 0.0)
        } else {
            (n00 / rho, n10 / rho)
        };
        let q12 = c2 * n01 + s2 * n11;
        let q22 = -s2 * n01 + c2 * n11;
        self.r12 = self.r12.scale(rho).add(self.r22.scale(q12));
        self.r11 = self.r11.scale(rho);
        self.r22 = self.r22.scale(q22);
        self.cos = c2;
        self.sin = s2;
        self.unimodular &= m[0][0] * m[1][1] - m[0][1] * m[1][0] == 1.0;
    }

    fn reference_exponent(&self) -> i64 {
        [self.r11, self.r12, self.r22]
            .iter()
            .filter(|p| !p.is_zero())
            .map(|p| p.exp)
            .max()
            .unwrap_or(0)
    }

    /// `R / 2^reference` as plain floats.
    fn triangular_at(&self, reference: i64) -> (f64, f64, f64) {
        (
            self.r11.at(reference),
            self.r12.at(reference),
            self.r22.at(reference),
        )
    }

    /// `(m, log_scale)` with the largest `|m_ij|` in `[1/2, 1)`.
    pub fn to_parts(&self) -> (Matrix2, f64) {
        let e = self.reference_exponent();
        let (a, b, d) = self.triangular_at(e);
        let (c, s) = (self.cos, self.sin);
        let m = [[c * a, c * b - s * d], [s * a, s * b + c * d]];
        let max = m.iter().flatten().fold(0.0f64, |acc, x| acc.max(x.abs()));
        if max == 0.0 {
            return (m, f64::NEG_INFINITY);
        }
        let (_, shift) = libm::frexp(max);
        let m = m.map(|row| row.map(|x| libm::scalbn(x, -shift)));
        (m, (e + shift as i64) as f64 * LN_2)
    }

    /// Determinant of the represented matrix, from the triangular factor.
    pub fn determinant(&self) -> f64 {
        let p = self.r11.mul(self.r22);
        p.at(0)
    }

    /// `ln |det|`, finite even when the determinant itself would overflow.
    pub fn log_abs_determinant(&self) -> f64 {
        self.r11.mul(self.r22).ln_abs()
    }

    /// Natural log of the largest singular value.
    ///
    /// `m^T m = R^T R`, so the closed form uses `tr(R^T R)` and `det R`.
    pub fn log_spectral_norm(&self) -> f64 {
        let e = self.reference_exponent();
        let (a, b, d) = self.triangular_at(e);
        let t = a * a + b * b + d * d;
        let det = (a * d).abs();
        let disc = ((t - 2.0 * det) * (t + 2.0 * det)).max(0.0);
        let sigma2 = 0.5 * (t + disc.sqrt());
        let log_norm = e as f64 * LN_2 + 0.5 * sigma2.ln();
        if self.unimodular {
            // a unimodular 2x2 matrix has norm >= 1
            log_norm.max(0.0)
        } else {
            log_norm
        }
    }

    /// `T w` as `(y, log_scale)` with `T w = exp(log_scale) * y`.
    pub fn apply(&self, w: [Complex64; 2]) -> ([Complex64; 2], f64) {
        let e = self.reference_exponent();
        let (a, b, d) = self.triangular_at(e);
        let z0 = w[0] * a + w[1] * b;
        let z1 = w[1] * d;
        let (c, s) = (self.cos, self.sin);
        ([z0 * c - z1 * s, z0 * s + z1 * c], e as f64 * LN_2)
    }

    pub fn is_unimodular(&self) -> bool {
        self.unimodular
    }
}

/// Log-norm of `T_L(E)` recorded at one checkpoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub length: usize,
    pub log_norm: f64,
    pub matrix: ScaledMatrix2,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TransferTrace {
    pub points: Vec<TracePoint>,
}

/// `T_L(E)` over sites `0..=length`, with log-norms at the requested checkpoints.
pub fn product(
    potential: &PotentialValues,
    energy: f64,
    length: usize,
    checkpoints: &[usize],
) -> Result<(ScaledMatrix2, TransferTrace)> {
    if potential.len() < length + 1 {
        return Err(Error::InvalidInput(format!(
            "potential has {} values, product to site {length} needs {}",
            potential.len(),
            length + 1
        )));
    }
    if checkpoints.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(
            "checkpoints must be strictly increasing".into(),
        ));
    }
    if checkpoints.last().is_some_and(|&c| c > length) {
        return Err(Error::InvalidInput(format!(
            "checkpoint beyond product length {length}"
        )));
    }
    let values = potential.as_slice();
    let mut acc = ScaledMatrix2::identity();
    let mut trace = TransferTrace {
        points: Vec::with_capacity(checkpoints.len()),
    };
    let mut next = checkpoints.iter().peekable();
    for (x, &v) in values[..=length].iter().enumerate() {
        acc.left_mul(&one_step(v, energy));
        if next.peek() == Some(&&x) {
            next.next();
            trace.points.push(TracePoint {
                length: x,
                log_norm: acc.log_spectral_norm(),
                matrix: acc,
            });
        }
    }
    Ok((acc, trace))
}

/// Trace of the transfer matrix across one period of a periodic potential.
///
/// `|trace| < 2` inside the bands of the periodic operator, `> 2` in its gaps.
pub fn period_trace(cell: &[f64], energy: f64) -> f64 {
    let m = cell.iter().fold([[1.0, 0.0], [0.0, 1.0]], |acc, &v| {
        mat_mul(&one_step(v, energy), &acc)
    });
    m[0][0] + m[1][1]
}

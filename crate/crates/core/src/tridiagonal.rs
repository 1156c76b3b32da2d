//! LU factorization with partial pivoting for complex symmetric tridiagonal matrices
//! (the LAPACK `gttrf`/`gttrs` scheme), plus a Hager-Higham 1-norm condition estimate.

use num_complex::Complex64;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// `|re| + |im|`, the pivot magnitude used by the complex LAPACK routines.
fn cabs1(z: Complex64) -> f64 {
    z.re.abs() + z.im.abs()
}

#[derive(Debug, Clone)]
pub(crate) struct TridiagonalLu {
    dl: Vec<Complex64>,
    d: Vec<Complex64>,
    du: Vec<Complex64>,
    du2: Vec<Complex64>,
    swap: Vec<bool>,
    norm1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct SingularPivot(pub usize);

impl TridiagonalLu {
    /// Factors the symmetric matrix with the given diagonal and off-diagonal.
    pub fn factor(diag: &[Complex64], off: &[Complex64]) -> Result<Self, SingularPivot> {
        let n = diag.len();
        assert!(n >= 1 && off.len() + 1 == n, "tridiagonal shape mismatch");
        let norm1 = (0..n)
            .map(|j| {
                let mut s = diag[j].norm();
                if j > 0 {
                    s += off[j - 1].norm();
                }
                if j + 1 < n {
                    s += off[j].norm();
                }
                s
            })
            .fold(0.0, f64::max);

        let mut d = diag.to_vec();
        let mut dl = off.to_vec();
        let mut du = off.to_vec();
        let mut du2 = vec![ZERO; n.saturating_sub(2)];
        let mut swap = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if cabs1(d[i]) >= cabs1(dl[i]) {
                if cabs1(d[i]) != 0.0 {
                    let fact = dl[i] / d[i];
                    dl[i] = fact;
                    d[i + 1] -= fact * du[i];
                }
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                dl[i] = fact;
                let temp = du[i];
                du[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du[i + 1];
                }
                swap[i] = true;
            }
        }
        if let Some(i) = d.iter().position(|&p| cabs1(p) == 0.0) {
            return Err(SingularPivot(i));
        }
        Ok(TridiagonalLu {
            dl,
            d,
            du,
            du2,
            swap,
            norm1,
        })
    }

    pub fn len(&self) -> usize {
        self.d.len()
    }

    fn forward(&self, b: &mut [Complex64]) {
        for i in 0..self.len() - 1 {
            if self.swap[i] {
                let temp = b[i];
                b[i] = b[i + 1];
                b[i + 1] = temp - self.dl[i] * b[i];
            } else {
                b[i + 1] -= self.dl[i] * b[i];
            }
        }
    }

    /// Overwrites `b` with `A^{-1} b`.
    pub fn solve(&self, b: &mut [Complex64]) {
        let n = self.len();
        assert_eq!(b.len(), n);
        self.forward(b);
        b[n - 1] /= self.d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
        }
    }

    /// First and last entries of `A^{-1} e_{n-1}`, with the first also returned as a
    /// natural log of its modulus.
    ///
    /// Only the last two entries of `L^{-1} P e_{n-1}` are nonzero, so back substitution
    /// below them is a homogeneous recurrence and may be rescaled freely. This keeps
    /// `ln |x_0|` accurate when `x_0` itself underflows.
    pub fn last_column_ends(&self) -> (Complex64, f64, Complex64) {
        let n = self.len();
        let mut b = vec![ZERO; n];
        b[n - 1] = ONE;
        self.forward(&mut b);
        let last_y = b[n - 1];
        b[n - 1] = last_y / self.d[n - 1];
        let last = b[n - 1];
        if n == 1 {
            return (last, last.norm().ln(), last);
        }
        b[n - 2] = (b[n - 2] - self.du[n - 2] * b[n - 1]) / self.d[n - 2];
        let mut exponent: i32 = 0;
        for i in (0..n - 2).rev() {
            debug_assert!(b[i] == ZERO);
            b[i] = (-self.du[i] * b[i + 1] - self.du2[i] * b[i + 2]) / self.d[i];
            let size = cabs1(b[i]).max(cabs1(b[i + 1]));
            if size != 0.0 && !(1e-200..=1e200).contains(&size) {
                let (_, e) = libm::frexp(size);
                for z in &mut b[i..i + 2] {
                    *z = Complex64::new(libm::scalbn(z.re, -e), libm::scalbn(z.im, -e));
                }
                exponent += e;
            }
        }
        let ln_first = b[0].norm().ln() + exponent as f64 * std::f64::consts::LN_2;
        let first = Complex64::new(libm::scalbn(b[0].re, exponent), libm::scalbn(b[0].im, exponent));
        (first, ln_first, last)
    }

    /// `A^{-H} b`, using `A^T = A`.
    fn solve_adjoint(&self, b: &mut [Complex64]) {
        b.iter_mut().for_each(|z| *z = z.conj());
        self.solve(b);
        b.iter_mut().for_each(|z| *z = z.conj());
    }

    /// Estimate of `||A||_1 ||A^{-1}||_1` (Hager's method with Higham's refinements).
    pub fn condition_estimate(&self) -> f64 {
        self.norm1 * self.inverse_norm1_estimate()
    }

    fn inverse_norm1_estimate(&self) -> f64 {
        let n = self.len();
        let norm1 = |v: &[Complex64]| v.iter().map(|z| z.norm()).sum::<f64>();
        let mut x = vec![Complex64::new(1.0 / n as f64, 0.0); n];
        self.solve(&mut x);
        let mut est = norm1(&x);
        if n == 1 {
            return est;
        }
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let mut z: Vec<Complex64> = x
                .iter()
                .map(|&y| {
                    let a = y.norm();
                    if a > 0.0 {
                        y / a
                    } else {
                        ONE
                    }
                })
                .collect();
            self.solve_adjoint(&mut z);
            let (j, zmax) = z
                .iter()
                .enumerate()
                .map(|(i, v)| (i, v.norm()))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if j == last_j || zmax <= 0.0 {
                break;
            }
            last_j = j;
            x.iter_mut().for_each(|v| *v = ZERO);
            x[j] = ONE;
            self.solve(&mut x);
            let new_est = norm1(&x);
            if new_est <= est {
                break;
            }
            est = new_est;
        }
        let mut alt: Vec<Complex64> = (0..n)
            .map(|i| {
                let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
                Complex64::new(sign * (1.0 + i as f64 / (n - 1) as f64), 0.0)
            })
            .collect();
        self.solve(&mut alt);
        est.max(2.0 * norm1(&alt) / (3.0 * n as f64))
    }
}

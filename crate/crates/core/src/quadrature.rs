//! Globally adaptive 15-point Gauss-Kronrod quadrature for vector integrands.
//!
//! Panels are refined in batches; each batch is evaluated in parallel and the totals are
//! always summed over panels sorted by left endpoint, so results do not depend on the
//! thread count.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_838_258_730,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

/// Integrand evaluations per panel.
pub const POINTS_PER_PANEL: usize = 15;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions {
    /// Absolute tolerance on every component.
    pub tolerance: f64,
    pub max_evaluations: usize,
    /// Upper bound on the width of the starting panels.
    pub max_initial_width: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integral<const N: usize> {
    pub value: [f64; N],
    pub error: [f64; N],
    pub evaluations: usize,
    pub converged: bool,
}

impl<const N: usize> Integral<N> {
    pub fn max_error(&self) -> f64 {
        self.error.iter().copied().fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel<const N: usize> {
    a: f64,
    b: f64,
    value: [f64; N],
    error: [f64; N],
}

impl<const N: usize> Panel<N> {
    fn worst(&self) -> f64 {
        self.error.iter().copied().fold(0.0, f64::max)
    }

    fn splittable(&self) -> bool {
        let mid = 0.5 * (self.a + self.b);
        mid > self.a && mid < self.b && (self.b - self.a) > 1e-13 * self.a.abs().max(self.b.abs())
    }
}

fn rescale_error(err: f64, res_abs: f64, res_asc: f64) -> f64 {
    let mut scaled = err.abs();
    if res_asc != 0.0 && scaled != 0.0 {
        let scale = (200.0 * scaled / res_asc).powf(1.5);
        scaled = if scale < 1.0 { res_asc * scale } else { res_asc };
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        scaled = scaled.max(50.0 * f64::EPSILON * res_abs);
    }
    scaled
}

fn kronrod<const N: usize, F>(f: &F, a: f64, b: f64) -> Result<Panel<N>>
where
    F: Fn(f64) -> Result<[f64; N]>,
{
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut fv = [[0.0; N]; POINTS_PER_PANEL];
    fv[0] = f(center)?;
    for (j, x) in XGK[..7].iter().enumerate() {
        fv[1 + 2 * j] = f(center - half * x)?;
        fv[2 + 2 * j] = f(center + half * x)?;
    }
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for c in 0..N {
        let fc = fv[0][c];
        let mut res_k = fc * WGK[7];
        let mut res_g = fc * WG[3];
        let mut res_abs = res_k.abs();
        for j in 0..7 {
            let (f1, f2) = (fv[1 + 2 * j][c], fv[2 + 2 * j][c]);
            res_k += WGK[j] * (f1 + f2);
            res_abs += WGK[j] * (f1.abs() + f2.abs());
            if j % 2 == 1 {
                res_g += WG[j / 2] * (f1 + f2);
            }
        }
        let mean = 0.5 * res_k;
        let mut res_asc = WGK[7] * (fc - mean).abs();
        for j in 0..7 {
            res_asc += WGK[j] * ((fv[1 + 2 * j][c] - mean).abs() + (fv[2 + 2 * j][c] - mean).abs());
        }
        let h = half.abs();
        value[c] = res_k * half;
        error[c] = rescale_error((res_k - res_g) * half, res_abs * h, res_asc * h);
    }
    Ok(Panel { a, b, value, error })
}

fn totals<const N: usize>(panels: &[Panel<N>]) -> ([f64; N], [f64; N]) {
    let mut value = [0.0; N];
    let mut error = [0.0; N];
    for p in panels {
        for c in 0..N {
            value[c] += p.value[c];
            error[c] += p.error[c];
        }
    }
    (value, error)
}

/// Integrates `f` over the union of disjoint `intervals`.
///
/// Stops when every component's summed error estimate is at most `tolerance`, or when the
/// next refinement would exceed `max_evaluations` (then `converged` is false).
pub fn integrate<const N: usize, F>(
    intervals: &[(f64, f64)],
    options: &QuadratureOptions,
    f: F,
) -> Result<Integral<N>>
where
    F: Fn(f64) -> Result<[f64; N]> + Sync,
{
    if !(options.tolerance > 0.0) {
        return Err(Error::InvalidInput("quadrature tolerance must be > 0".into()));
    }
    if !(options.max_initial_width > 0.0) {
        return Err(Error::InvalidInput("initial panel width must be > 0".into()));
    }
    let mut bounds = Vec::new();
    for &(a, b) in intervals {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("bad interval ({a}, {b})")));
        }
        let count = ((b - a) / options.max_initial_width).ceil().max(1.0) as usize;
        let h = (b - a) / count as f64;
        for i in 0..count {
            let lo = a + h * i as f64;
            let hi = if i + 1 == count { b } else { a + h * (i + 1) as f64 };
            bounds.push((lo, hi));
        }
    }
    let mut evaluations = bounds.len() * POINTS_PER_PANEL;
    let mut panels: Vec<Panel<N>> = bounds
        .par_iter()
        .map(|&(a, b)| kronrod(&f, a, b))
        .collect::<Result<_>>()?;

    loop {
        panels.sort_by(|p, q| p.a.total_cmp(&q.a));
        let (value, error) = totals(&panels);
        let worst_total = error.iter().copied().fold(0.0, f64::max);
        if worst_total <= options.tolerance {
            return Ok(Integral {
                value,
                error,
                evaluations,
                converged: true,
            });
        }
        // Split every panel carrying more than its equal share of the tolerance, worst first.
        let budget = options.max_evaluations.saturating_sub(evaluations) / (2 * POINTS_PER_PANEL);
        let share = options.tolerance / panels.len() as f64;
        let mut order: Vec<usize> = (0..panels.len())
            .filter(|&i| panels[i].splittable() && panels[i].worst() > share)
            .collect();
        order.sort_by(|&i, &j| panels[j].worst().total_cmp(&panels[i].worst()).then(i.cmp(&j)));
        order.truncate(budget.min(panels.len().max(16)));
        if order.is_empty() {
            return Ok(Integral {
                value,
                error,
                evaluations,
                converged: false,
            });
        }
        let halves: Vec<(f64, f64)> = order
            .iter()
            .flat_map(|&i| {
                let p = &panels[i];
                let mid = 0.5 * (p.a + p.b);
                [(p.a, mid), (mid, p.b)]
            })
            .collect();
        evaluations += halves.len() * POINTS_PER_PANEL;
        let fresh: Vec<Panel<N>> = halves
            .par_iter()
            .map(|&(a, b)| kronrod(&f, a, b))
            .collect::<Result<_>>()?;
        let mut replaced = vec![false; panels.len()];
        for &i in &order {
            replaced[i] = true;
        }
        let mut next: Vec<Panel<N>> = panels
            .iter()
            .zip(&replaced)
            .filter(|(_, &r)| !r)
            .map(|(p, _)| *p)
            .collect();
        next.extend(fresh);
        panels = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts(tolerance: f64) -> QuadratureOptions {
        QuadratureOptions {
            tolerance,
            max_evaluations: 1_000_000,
            max_initial_width: 1.0,
        }
    }

    #[test]
    fn polynomial_exact() {
        let r = integrate(&[(0.0, 2.0)], &opts(1e-12), |x| Ok([x.powi(5), 1.0])).unwrap();
        assert!((r.value[0] - 64.0 / 6.0).abs() < 1e-12);
        assert!((r.value[1] - 2.0).abs() < 1e-14);
        assert!(r.converged);
    }

    #[test]
    fn oscillatory_and_peaked() {
        let r = integrate(&[(0.0, 1.0), (2.0, 3.0)], &opts(1e-10), |x| {
            Ok([(50.0 * x).sin(), 1e-4 / ((x - 0.3).powi(2) + 1e-8)])
        })
        .unwrap();
        let sin_exact = ((1.0 - (50.0f64).cos()) + ((100.0f64).cos() - (150.0f64).cos())) / 50.0;
        assert!((r.value[0] - sin_exact).abs() < 1e-10);
        let peak = |x: f64| 1e-4 / 1e-4 * ((x - 0.3) / 1e-4).atan();
        let peak_exact = peak(1.0) - peak(0.0) + peak(3.0) - peak(2.0);
        assert!((r.value[1] - peak_exact).abs() < 1e-9, "{} vs {peak_exact}", r.value[1]);
        assert!(r.max_error() <= 1e-10);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let o = QuadratureOptions {
            tolerance: 1e-15,
            max_evaluations: 200,
            max_initial_width: 1.0,
        };
        let r = integrate(&[(0.0, 1.0)], &o, |x| Ok([x.sqrt()])).unwrap();
        assert!(!r.converged);
        assert!(r.evaluations <= 200);
    }

    #[test]
    fn errors_propagate() {
        let r = integrate(&[(0.0, 1.0)], &opts(1e-8), |x| {
            if x > 0.5 {
                Err(Error::Numerical("boom".into()))
            } else {
                Ok([x])
            }
        });
        assert!(r.is_err());
    }

    #[test]
    fn thread_count_does_not_change_result() {
        let f = |x: f64| Ok([(30.0 * x).cos() * (-x).exp(), x.sin().abs().sqrt()]);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| integrate(&[(-2.0, 3.0)], &opts(1e-11), f).unwrap());
        let b = four.install(|| integrate(&[(-2.0, 3.0)], &opts(1e-11), f).unwrap());
        assert_eq!(a, b);
    }
}

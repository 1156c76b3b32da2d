//! Test-side reference computations, written independently of the library.

#![allow(dead_code)]

use num_complex::Complex64;

pub type C = Complex64;

pub fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Dense complex solve with partial pivoting; `a` is row-major `n x n`.
pub fn dense_solve(mut a: Vec<Vec<C>>, mut b: Vec<C>) -> Vec<C> {
    let n = b.len();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].norm().total_cmp(&a[j][k].norm())).unwrap();
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == C::new(0.0, 0.0) {
                continue;
            }
            let (top, bottom) = a.split_at_mut(i);
            for (x, &y) in bottom[0][k..].iter_mut().zip(&top[k][k..]) {
                *x -= f * y;
            }
            let bk = b[k];
            b[i] -= f * bk;
        }
    }
    let mut x = vec![C::new(0.0, 0.0); n];
    for i in (0..n).rev() {
        let s: C = (i + 1..n).map(|j| a[i][j] * x[j]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    x
}

/// Boundary block `[[u_0(0), u_L(0)], [u_0(L), u_L(L)]]` of `(h - E - fl P_0 - fr P_L)^{-1}`
/// for `h = -Delta + v` with Dirichlet ends.
pub fn dense_boundary_green(v: &[f64], e: f64, fl: C, fr: C) -> [[C; 2]; 2] {
    let n = v.len();
    let matrix = || {
        let mut a = vec![vec![C::new(0.0, 0.0); n]; n];
        for i in 0..n {
            a[i][i] = c(v[i] - e, 0.0);
            if i + 1 < n {
                a[i][i + 1] = c(-1.0, 0.0);
                a[i + 1][i] = c(-1.0, 0.0);
            }
        }
        a[0][0] -= fl;
        a[n - 1][n - 1] -= fr;
        a
    };
    let unit = |k: usize| {
        let mut b = vec![C::new(0.0, 0.0); n];
        b[k] = c(1.0, 0.0);
        b
    };
    let x0 = dense_solve(matrix(), unit(0));
    let xl = dense_solve(matrix(), unit(n - 1));
    [[x0[0], xl[0]], [x0[n - 1], xl[n - 1]]]
}

/// `F(E + i eps)` of a half-line chain truncated after `n` sites, by the continued fraction
/// `g = 1 / (-z - k^2 g)` started from an empty tail.
pub fn truncated_lead_weiss(e: f64, eps: f64, hopping: f64, coupling: f64, n: usize) -> C {
    let z = c(e, eps);
    let k2 = hopping * hopping;
    let mut g = C::new(0.0, 0.0);
    for _ in 0..n {
        g = C::new(1.0, 0.0) / (-z - k2 * g);
    }
    g * coupling * coupling
}

pub fn fermi(e: f64, beta: f64, mu: f64) -> f64 {
    let x = beta * (e - mu);
    if x > 0.0 {
        let t = (-x).exp();
        t / (1.0 + t)
    } else {
        1.0 / (1.0 + x.exp())
    }
}

/// `max |a - b| / max |b|` over the four entries.
pub fn relative_gap(a: &[[C; 2]; 2], b: &[[C; 2]; 2]) -> f64 {
    let mut diff = 0.0f64;
    let mut scale = 0.0f64;
    for i in 0..2 {
        for j in 0..2 {
            diff = diff.max((a[i][j] - b[i][j]).norm());
            scale = scale.max(b[i][j].norm());
        }
    }
    diff / scale
}

/// Largest singular value of a complex 2x2 matrix from the eigenvalues of `M* M`.
pub fn spectral_norm_2x2(m: &[[C; 2]; 2]) -> f64 {
    let mut h = [[C::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            h[i][j] = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
        }
    }
    let tr = h[0][0].re + h[1][1].re;
    let det = (h[0][0] * h[1][1] - h[0][1] * h[1][0]).re;
    let disc = (tr * tr - 4.0 * det).max(0.0).sqrt();
    (0.5 * (tr + disc)).max(0.0).sqrt()
}

/// Least-squares slope and coefficient of determination.
pub fn fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
    let slope = sxy / sxx;
    (slope, slope * sxy / syy)
}

/// `n` midpoints of equal cells covering `(a, b)`.
pub fn midpoints(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * (i as f64 + 0.5) / n as f64).collect()
}

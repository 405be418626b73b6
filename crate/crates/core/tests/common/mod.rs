//! Independent oracles for the integration tests.
#![allow(dead_code)]

use nonlocal_burgers::convolution::DiscreteKernel;
use nonlocal_burgers::grid::GridFunction;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Adaptive Simpson on `[a, b]`.
pub fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Simpson over consecutive panels `[p_i, p_{i+1}]`.
pub fn simpson_panels(f: &dyn Fn(f64) -> f64, panels: &[f64], tol: f64) -> f64 {
    panels.windows(2).map(|w| simpson(f, w[0], w[1], tol)).sum()
}

/// Right-hand side in its double-sum form
/// `h Σ_j [K(x_i - x_j)(u_j - u_i) + G(x_i - x_j)((u_i + u_j)/2)²]`.
pub fn rhs_double_sum(u: &[f64], k: &DiscreteKernel, g: &DiscreteKernel) -> Vec<f64> {
    let n = u.len();
    let h = k.grid().spacing();
    let (kw, gw) = (k.weights(), g.weights());
    (0..n)
        .map(|i| {
            let mut s = 0.0;
            for j in 0..n {
                let d = (i + n - j) % n;
                let avg = 0.5 * (u[i] + u[j]);
                s += kw[d] * (u[j] - u[i]) + gw[d] * avg * avg;
            }
            h * s
        })
        .collect()
}

/// `h² Σ_i Σ_j G(x_i - x_j) (u_j² u_i^{p-1}/4 + u_j u_i^p/2)`, accumulated
/// column by column.
pub fn i2_oracle(u: &[f64], g: &DiscreteKernel, p: i32) -> f64 {
    let n = u.len();
    let h = g.grid().spacing();
    let w = g.weights();
    let mut total = 0.0;
    for j in 0..n {
        for i in 0..n {
            let d = (i + n - j) % n;
            total += w[d] * (u[j] * u[j] * u[i].powi(p - 1) / 4.0 + u[j] * u[i].powi(p) / 2.0);
        }
    }
    h * h * total
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_values(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

pub fn random_function(rng: &mut ChaCha8Rng, grid: nonlocal_burgers::grid::Grid, lo: f64, hi: f64) -> GridFunction {
    GridFunction::new(grid, random_values(rng, grid.len(), lo, hi)).unwrap()
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

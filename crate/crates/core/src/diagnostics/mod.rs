//! Functionals, inequalities and fits evaluated on grid functions and runs.

mod checks;
mod report;
mod series;

pub use checks::{
    check_dissipation, check_tail_bound, comparison_check, dissipation_from_series, fit_decay_exponent,
    renormalized_error,
    ComparisonReport, DecayFit, DissipationReport, DissipationRow, TailReport,
};
pub use report::{
    comparison_profile, verify_run, CheckRecord, ProfileMoments, Status, VerifyOptions, VerifyReport,
};
pub use series::{compute_series, default_tail_radius, TimeSeries, SERIES_CHANNELS};

use serde::{Deserialize, Serialize};

use crate::convolution::{convolve, DiscreteKernel};
use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// Largest `N` for which the energies are summed directly.
pub const DIRECT_LIMIT: usize = 2048;

/// How to evaluate the double sums.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyPath {
    /// Direct up to [`DIRECT_LIMIT`] points, convolution identity above.
    #[default]
    Auto,
    Direct,
    Convolution,
}

impl EnergyPath {
    fn direct(self, n: usize) -> bool {
        match self {
            EnergyPath::Auto => n <= DIRECT_LIMIT,
            EnergyPath::Direct => true,
            EnergyPath::Convolution => false,
        }
    }
}

/// `h² Σ_i Σ_j K(x_i - x_j) (u_i - u_j)²`.
pub fn energy_i1(u: &GridFunction, k: &DiscreteKernel) -> Result<f64> {
    energy_i1_p(u, k, 2, EnergyPath::Auto)
}

/// `h² Σ Σ K(x_i - x_j) (u_i - u_j)(u_i^{p-1} - u_j^{p-1})`.
///
/// The convolution path uses `2 h Σ u^{p-1} (u - K∗u)`, valid for even `K`
/// of unit discrete mass.
pub fn energy_i1_p(u: &GridFunction, k: &DiscreteKernel, p: u32, path: EnergyPath) -> Result<f64> {
    k.grid().check_same(u.grid())?;
    let h = u.grid().spacing();
    let v = u.values();
    let q: Vec<f64> = v.iter().map(|x| x.powi(p as i32 - 1)).collect();
    if path.direct(v.len()) {
        let w = k.weights();
        let n = v.len();
        let mut total = 0.0;
        for i in 0..n {
            let mut row = 0.0;
            for j in 0..n {
                row += w[(i + n - j) % n] * (v[i] - v[j]) * (q[i] - q[j]);
            }
            total += row;
        }
        Ok(h * h * total)
    } else {
        let kq = convolve(k, &GridFunction::from_raw(*u.grid(), q.clone()))?;
        Ok(2.0 * h * v.iter().zip(&q).zip(kq.values()).map(|((a, b), c)| a * (b - c)).sum::<f64>())
    }
}

/// `h² Σ_i Σ_j G(x_i - x_j) (u_j² u_i^{p-1}/4 + u_j u_i^p/2)` for `u ≥ 0`.
pub fn energy_i2(u: &GridFunction, g: &DiscreteKernel, p: u32) -> Result<f64> {
    let min = u.min();
    if min < -1e-12 {
        return Err(Error::NegativityViolation { min });
    }
    energy_i2_signed(u, g, p, EnergyPath::Auto)
}

/// [`energy_i2`] without the sign precondition.
pub fn energy_i2_signed(u: &GridFunction, g: &DiscreteKernel, p: u32, path: EnergyPath) -> Result<f64> {
    g.grid().check_same(u.grid())?;
    let h = u.grid().spacing();
    let v = u.values();
    let n = v.len();
    let pi = p as i32;
    if path.direct(n) {
        let w = g.weights();
        let mut total = 0.0;
        for i in 0..n {
            let (a, b) = (v[i].powi(pi - 1), v[i].powi(pi));
            let mut row = 0.0;
            for j in 0..n {
                row += w[(i + n - j) % n] * (0.25 * v[j] * v[j] * a + 0.5 * v[j] * b);
            }
            total += row;
        }
        Ok(h * h * total)
    } else {
        let gu = convolve(g, u)?;
        let gu2 = convolve(g, &u.map(|x| x * x))?;
        Ok(h * (0..n)
            .map(|i| 0.25 * v[i].powi(pi - 1) * gu2.values()[i] + 0.5 * v[i].powi(pi) * gu.values()[i])
            .sum::<f64>())
    }
}

/// `C(2) = 1/4`, `C(p) = p/(p+1)` for `p ≥ 3`.
pub fn lemma_constant(p: u32) -> f64 {
    if p == 2 {
        0.25
    } else {
        p as f64 / (p as f64 + 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub p: u32,
    pub i2_abs: f64,
    pub bound: f64,
    /// `bound - |I₂|`.
    pub slack: f64,
    pub pass: bool,
}

/// `|I₂| ≤ C(p) C_GK ‖u‖_∞ I₁` with `I₁` taken at the same `p`.
pub fn check_lemma_i2i1(
    u: &GridFunction,
    k: &DiscreteKernel,
    g: &DiscreteKernel,
    p: u32,
    c_gk: f64,
) -> Result<LemmaReport> {
    if p < 2 {
        return Err(Error::OutOfRange {
            what: "p",
            value: p as f64,
            lo: 2.0,
            hi: f64::INFINITY,
        });
    }
    let i2_abs = energy_i2(u, g, p)?.abs();
    let i1 = energy_i1_p(u, k, p, EnergyPath::Auto)?;
    let bound = lemma_constant(p) * c_gk * u.lp_norm(f64::INFINITY) * i1;
    let slack = bound - i2_abs;
    Ok(LemmaReport {
        p,
        i2_abs,
        bound,
        slack,
        pass: slack >= -1e-12,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolyReport {
    pub p: u32,
    pub samples: usize,
    /// `max (lhs - rhs) / max(1, lhs, rhs)`, negative when every sample holds.
    pub max_violation: f64,
    pub worst_z: f64,
    pub pass: bool,
}

/// Both sides of the polynomial inequality behind the lemma divided by
/// `(z-1)²`; the quotients carry no cancellation near `z = 1`.
///
/// For `p ≥ 3`: `|f(z)| / (z-1)² = Q(z)/(p+1)` with
/// `Q = z^{p-1} + 2 z^{p-2} + … + (p-1) z + (3p-1)/4`, and the right side is
/// `C(p) R(z) max(z,1)` with `R = z^{p-2} + … + 1`.
/// For `p = 2` the cubic `(z-1)²(z-2)/12` against `(z-1)² max(z,1)/4`.
fn poly_sides_reduced(p: u32, z: f64) -> (f64, f64) {
    if p == 2 {
        return ((z - 2.0).abs() / 12.0, 0.25 * z.max(1.0));
    }
    // Horner: Q = Σ_{k=1}^{p-1} k z^{p-k} + (3p-1)/4.
    let mut q = 0.0;
    for c in 1..p {
        q = q * z + c as f64;
    }
    q = q * z + (3.0 * p as f64 - 1.0) / 4.0;
    let mut r = 0.0;
    for _ in 0..p - 1 {
        r = r * z + 1.0;
    }
    (q / (p as f64 + 1.0), lemma_constant(p) * r * z.max(1.0))
}

/// Unreduced sides `|α z^{p+1} + z²/4 + z/2 + β|` and
/// `C(p)(z-1)(z^{p-1}-1) max(z,1)`; `p = 2` uses `|(z-1)²(z-2)/12|` and
/// `(z-1)² max(z,1)/4`.
pub fn poly_sides(p: u32, z: f64) -> (f64, f64) {
    let (l, r) = poly_sides_reduced(p, z);
    let d2 = (z - 1.0) * (z - 1.0);
    (l * d2, r * d2)
}

fn relative_violation(d2: f64, l: f64, r: f64) -> f64 {
    d2 * (l - r) / (d2 * l.max(r)).max(1.0)
}

/// Checks the inequality at every sample. For `p = 2` the sample must also
/// satisfy the bound for `(z-1)²(2z+1)/12`, which is what cancelling the
/// `u³` terms with `α z³ + z²/4 + β` produces.
pub fn check_poly_inequality(p: u32, z_samples: &[f64]) -> PolyReport {
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_z = f64::NAN;
    for &z in z_samples {
        let (l, r) = poly_sides_reduced(p, z);
        let d2 = (z - 1.0) * (z - 1.0);
        let mut v = relative_violation(d2, l, r);
        if p == 2 {
            v = v.max(relative_violation(d2, (2.0 * z + 1.0) / 12.0, r));
        }
        if v > max_violation {
            max_violation = v;
            worst_z = z;
        }
    }
    PolyReport {
        p,
        samples: z_samples.len(),
        max_violation,
        worst_z,
        pass: max_violation <= 1e-12,
    }
}

/// `count` log-spaced samples in `[lo, hi]`.
pub fn log_samples(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count.max(2) - 1) as f64).exp())
        .collect()
}

/// `h Σ_{|x_j| > R} u_j`.
pub fn tail_mass(u: &GridFunction, r: f64) -> f64 {
    let grid = u.grid();
    grid.spacing()
        * grid
            .points()
            .zip(u.values())
            .filter(|(x, _)| x.abs() > r)
            .map(|(_, v)| v)
            .sum::<f64>()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convolution::{kernel_from_weights, sample_kernel};
    use crate::grid::Grid;
    use crate::kernels::{KernelFn, Parity};

    #[test]
    fn spike_energy_against_uniform_kernel() {
        let grid = Grid::new(64, 4.0).unwrap();
        let k = kernel_from_weights(&grid, vec![1.0; 64], Parity::Even).unwrap();
        let mut v = vec![0.0; 64];
        v[17] = 1.0;
        let u = GridFunction::new(grid, v).unwrap();
        let h = grid.spacing();
        let expected = 2.0 * h * (1.0 - h / 8.0);
        for path in [EnergyPath::Direct, EnergyPath::Convolution] {
            assert!((energy_i1_p(&u, &k, 2, path).unwrap() - expected).abs() < 1e-14);
        }
    }

    #[test]
    fn energies_vanish_on_constants() {
        let grid = Grid::new(128, 10.0).unwrap();
        let k = sample_kernel(&KernelFn::exponential(1.0), &grid, Parity::Even).unwrap();
        let g = sample_kernel(&KernelFn::exponential_derivative(1.0), &grid, Parity::Odd).unwrap();
        let u = GridFunction::from_fn(grid, |_| 0.3);
        assert!(energy_i1(&u, &k).unwrap().abs() < 1e-15);
        assert!(energy_i2(&u, &g, 3).unwrap().abs() < 1e-15);
        let r = check_lemma_i2i1(&u, &k, &g, 2, 1.0).unwrap();
        assert!(r.pass);
    }

    #[test]
    fn negative_input_is_rejected() {
        let grid = Grid::new(64, 10.0).unwrap();
        let g = sample_kernel(&KernelFn::exponential_derivative(1.0), &grid, Parity::Odd).unwrap();
        let u = GridFunction::from_fn(grid, |x| x.sin());
        assert!(matches!(energy_i2(&u, &g, 2), Err(Error::NegativityViolation { .. })));
    }

    #[test]
    fn reduced_sides_match_expanded_polynomial() {
        for p in 3..=8u32 {
            let alpha = -1.0 / (p as f64 + 1.0);
            let beta = -0.75 + 1.0 / (p as f64 + 1.0);
            for z in [0.1f64, 0.5, 2.0, 3.7] {
                let f = alpha * z.powi(p as i32 + 1) + z * z / 4.0 + z / 2.0 + beta;
                let rhs = lemma_constant(p) * (z - 1.0) * (z.powi(p as i32 - 1) - 1.0) * z.max(1.0);
                let (l, r) = poly_sides(p, z);
                assert!((l - f.abs()).abs() < 1e-12 * l.max(1.0), "p={p} z={z}");
                assert!((r - rhs).abs() < 1e-12 * r.max(1.0));
            }
        }
        assert_eq!(poly_sides(2, 2.0).0, 0.0);
        assert_eq!(poly_sides(2, 1.0), (0.0, 0.0));
    }

    #[test]
    fn tail_of_constant() {
        let grid = Grid::new(400, 10.0).unwrap();
        let u = GridFunction::from_fn(grid, |_| 1.0 / 20.0);
        // One node sits on |x| = R and is not counted.
        let t = tail_mass(&u, 2.5);
        assert!((t - 0.75).abs() <= grid.spacing() / 20.0 + 1e-15);
    }
}

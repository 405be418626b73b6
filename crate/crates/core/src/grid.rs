//! Uniform periodic grid on `[-L, L)` and real samples on it.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `N` points `x_j = -L + j h`, `h = 2L/N`, periodic with period `2L`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    n: usize,
    half_length: f64,
}

impl Grid {
    pub fn new(n: usize, half_length: f64) -> Result<Self> {
        if n < 8 {
            return Err(Error::ConfigInvalid(format!("grid needs N >= 8, got {n}")));
        }
        if !(half_length > 0.0 && half_length.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "half-period must be positive, got {half_length}"
            )));
        }
        Ok(Self { n, half_length })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn half_length(&self) -> f64 {
        self.half_length
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.spacing()
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |j| self.x(j))
    }

    /// Signed offset represented by periodic index `j`: `j h` for `j ≤ N/2`,
    /// `(j - N) h` above.
    pub fn offset(&self, j: usize) -> f64 {
        let h = self.spacing();
        if j <= self.n / 2 {
            j as f64 * h
        } else {
            (j as f64 - self.n as f64) * h
        }
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                left: format!("{self:?}"),
                right: format!("{other:?}"),
            })
        }
    }
}

/// Interpolation order for [`GridFunction::interpolate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    Linear,
    /// Four-point Lagrange interpolation.
    #[default]
    Cubic,
}

/// Samples of a real function on a [`Grid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::ConfigInvalid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index, t: f64::NAN });
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid,
            values: grid.points().map(f).collect(),
        }
    }

    /// Wraps values without the finiteness check; used on hot paths whose
    /// callers check finiteness themselves.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &GridFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(Self::from_raw(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        ))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `h Σ f_j`.
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * self.values.iter().sum::<f64>()
    }

    /// `(h Σ |f_j|^p)^{1/p}`, or `max |f_j|` for `p = ∞`.
    pub fn lp_norm(&self, p: f64) -> f64 {
        assert!(p >= 1.0, "norm index must be at least 1, got {p}");
        if p.is_infinite() {
            return self.values.iter().fold(0.0, |m, v| m.max(v.abs()));
        }
        let h = self.grid.spacing();
        if p == 1.0 {
            return h * self.values.iter().map(|v| v.abs()).sum::<f64>();
        }
        if p == 2.0 {
            return (h * self.values.iter().map(|v| v * v).sum::<f64>()).sqrt();
        }
        (h * self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>()).powf(1.0 / p)
    }

    pub fn interpolate(&self, x: f64) -> f64 {
        self.interpolate_with(x, Interpolation::Cubic)
    }

    /// Value at arbitrary `x`, wrapping periodically.
    pub fn interpolate_with(&self, x: f64, kind: Interpolation) -> f64 {
        let n = self.grid.len();
        let h = self.grid.spacing();
        let s = (x + self.grid.half_length()) / h;
        let base = s.floor();
        let frac = s - base;
        let i = (base as i64).rem_euclid(n as i64) as usize;
        let at = |k: i64| self.values[(i as i64 + k).rem_euclid(n as i64) as usize];
        if frac == 0.0 {
            return at(0);
        }
        match kind {
            Interpolation::Linear => at(0) * (1.0 - frac) + at(1) * frac,
            Interpolation::Cubic => {
                // Lagrange basis on nodes -1, 0, 1, 2.
                let t = frac;
                let wm1 = -t * (t - 1.0) * (t - 2.0) / 6.0;
                let w0 = (t + 1.0) * (t - 1.0) * (t - 2.0) / 2.0;
                let w1 = -(t + 1.0) * t * (t - 2.0) / 2.0;
                let w2 = (t + 1.0) * t * (t - 1.0) / 6.0;
                wm1 * at(-1) + w0 * at(0) + w1 * at(1) + w2 * at(2)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(64, 4.0).unwrap()
    }

    #[test]
    fn rejects_small_grids() {
        assert!(Grid::new(4, 1.0).is_err());
        assert!(Grid::new(16, 0.0).is_err());
    }

    #[test]
    fn norms_of_simple_functions() {
        let g = grid();
        let one = GridFunction::from_fn(g, |_| 1.0);
        assert!((one.lp_norm(1.0) - 8.0).abs() < 1e-14);
        assert!((one.mass() - 8.0).abs() < 1e-14);
        let zero = GridFunction::zeros(g);
        for p in [1.0, 2.0, 3.5, f64::INFINITY] {
            assert_eq!(zero.lp_norm(p), 0.0);
        }
        let mut spike = vec![0.0; 64];
        spike[10] = 1.0;
        let spike = GridFunction::new(g, spike).unwrap();
        assert!((spike.lp_norm(2.0) - g.spacing().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn odd_function_has_zero_mass() {
        let g = grid();
        // x_0 = -L has no partner; zero it as the periodic odd extension does.
        let f = GridFunction::from_fn(g, |x| if x == -4.0 { 0.0 } else { x * (-x * x).exp() });
        assert!(f.mass().abs() < 1e-15);
    }

    #[test]
    fn interpolation_hits_nodes_and_lines() {
        let g = grid();
        let f = GridFunction::from_fn(g, |x| (x * 1.3).sin());
        for j in [0, 5, 63] {
            assert_eq!(f.interpolate(g.x(j)), f.values()[j]);
        }
        let line = GridFunction::from_fn(g, |x| 2.0 * x - 1.0);
        for x in [-2.9, -0.31, 0.0, 1.77, 2.5] {
            assert!((line.interpolate(x) - (2.0 * x - 1.0)).abs() < 1e-13);
            assert!(
                (line.interpolate_with(x, Interpolation::Linear) - (2.0 * x - 1.0)).abs() < 1e-13
            );
        }
    }

    #[test]
    fn interpolation_wraps() {
        let g = grid();
        let f = GridFunction::from_fn(g, |x| (std::f64::consts::PI * x / 4.0).cos());
        assert!((f.interpolate(3.9) - f.interpolate(3.9 - 8.0)).abs() < 1e-15);
    }

    #[test]
    fn offsets_are_signed() {
        let g = grid();
        assert_eq!(g.offset(0), 0.0);
        assert_eq!(g.offset(1), g.spacing());
        assert_eq!(g.offset(63), -g.spacing());
        assert_eq!(g.offset(32), 4.0);
    }
}

//! Discrete kernels on a periodic grid and circular convolution
//! `(k ∗ f)_i = h Σ_j w_{(i-j) mod N} f_j`, by direct summation or by FFT.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::kernels::{KernelFn, Parity};

/// Kernel weights indexed by periodic offset.
///
/// Even kernels satisfy `w_j = w_{N-j}` and `h Σ w = 1`; odd kernels satisfy
/// `w_j = -w_{N-j}` with `w_0 = w_{N/2} = 0`, so `h Σ w = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteKernel {
    grid: Grid,
    weights: Vec<f64>,
    parity: Parity,
    raw_mass: f64,
}

impl DiscreteKernel {
    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// `h Σ w_j` before normalization.
    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// `h Σ w_j`.
    pub fn mass(&self) -> f64 {
        self.grid.spacing() * self.weights.iter().sum::<f64>()
    }

    /// `h Σ w_j x_j^k` with signed offsets `x_j`.
    pub fn moment(&self, k: i32) -> f64 {
        let h = self.grid.spacing();
        h * self
            .weights
            .iter()
            .enumerate()
            .map(|(j, w)| w * self.grid.offset(j).powi(k))
            .sum::<f64>()
    }

    /// `½ h Σ w_j x_j²`: the diffusivity of the lattice kernel.
    pub fn diffusivity(&self) -> f64 {
        0.5 * self.moment(2)
    }

    /// `max |g_j| / w_j` over offsets with `w_j > 0`; infinite when `g`
    /// charges an offset where `self` vanishes.
    pub fn domination_constant(&self, g: &DiscreteKernel) -> f64 {
        self.weights
            .iter()
            .zip(&g.weights)
            .map(|(&w, &gv)| {
                if w > 0.0 {
                    gv.abs() / w
                } else if gv != 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Samples `f` at the periodic offsets of `grid`, then enforces `parity`
/// exactly and, for even kernels, normalizes to unit discrete mass.
pub fn sample_kernel(f: &KernelFn, grid: &Grid, parity: Parity) -> Result<DiscreteKernel> {
    let l = grid.half_length();
    match (f.tail_mass(l), f.tail_mass(0.0)) {
        (Ok(tail), Ok(total)) if tail > 1e-8 * total => {
            log::warn!("kernel mass outside [-{l}, {l}] is {tail:e} of {total:e}")
        }
        _ => {}
    }

    let w: Vec<f64> = (0..grid.len()).map(|j| f.eval(grid.offset(j))).collect();
    symmetrize(grid, w, parity)
}

/// Builds a discrete kernel from weights indexed by periodic offset,
/// enforcing parity and (for even kernels) unit mass as [`sample_kernel`] does.
pub fn kernel_from_weights(grid: &Grid, weights: Vec<f64>, parity: Parity) -> Result<DiscreteKernel> {
    if weights.len() != grid.len() {
        return Err(Error::ConfigInvalid(format!(
            "{} weights for a grid of {} points",
            weights.len(),
            grid.len()
        )));
    }
    symmetrize(grid, weights, parity)
}

fn symmetrize(grid: &Grid, mut w: Vec<f64>, parity: Parity) -> Result<DiscreteKernel> {
    let n = grid.len();
    for j in 1..=n / 2 {
        let k = n - j;
        match parity {
            Parity::Even => {
                let a = 0.5 * (w[j] + w[k]);
                w[j] = a;
                w[k] = a;
            }
            Parity::Odd if j == k => w[j] = 0.0,
            Parity::Odd => {
                let a = 0.5 * (w[j] - w[k]);
                w[j] = a;
                w[k] = -a;
            }
        }
    }
    let raw_mass = grid.spacing() * w.iter().sum::<f64>();
    match parity {
        Parity::Even => {
            if !(raw_mass > 0.0) {
                return Err(Error::DegenerateKernel { mass: raw_mass });
            }
            w.iter_mut().for_each(|v| *v /= raw_mass);
        }
        Parity::Odd => w[0] = 0.0,
    }
    Ok(DiscreteKernel {
        grid: *grid,
        weights: w,
        parity,
        raw_mass,
    })
}

/// Convolution algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConvolutionPath {
    /// O(N²) double loop.
    Direct,
    /// O(N log N) via the discrete Fourier transform.
    #[default]
    Fast,
}

pub fn convolve(k: &DiscreteKernel, f: &GridFunction) -> Result<GridFunction> {
    convolve_with(k, f, ConvolutionPath::Fast)
}

pub fn convolve_with(k: &DiscreteKernel, f: &GridFunction, path: ConvolutionPath) -> Result<GridFunction> {
    k.grid.check_same(f.grid())?;
    let values = match path {
        ConvolutionPath::Direct => convolve_direct(k.grid.spacing(), &k.weights, f.values()),
        ConvolutionPath::Fast => Convolver::new(k).apply(f.values()),
    };
    Ok(GridFunction::from_raw(*f.grid(), values))
}

fn convolve_direct(h: f64, w: &[f64], f: &[f64]) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .map(|i| h * f.iter().enumerate().map(|(j, fj)| w[(i + n - j) % n] * fj).sum::<f64>())
        .collect()
}

/// FFT plans for one grid size.
#[derive(Clone)]
pub struct FftPair {
    pub(crate) forward: Arc<dyn Fft<f64>>,
    pub(crate) inverse: Arc<dyn Fft<f64>>,
}

impl FftPair {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }
}

/// Transfer function `h ŵ_k / N` of a discrete kernel; multiplying an
/// unnormalized forward transform by it and applying the unnormalized inverse
/// gives the convolution.
pub(crate) fn transfer_function(k: &DiscreteKernel, ffts: &FftPair) -> Vec<Complex64> {
    let n = k.weights.len();
    let scale = k.grid.spacing() / n as f64;
    let mut spec: Vec<Complex64> = k.weights.iter().map(|&w| Complex64::new(w, 0.0)).collect();
    ffts.forward.process(&mut spec);
    spec.iter_mut().for_each(|c| *c *= scale);
    spec
}

/// Repeated FFT convolution with one kernel.
pub struct Convolver {
    ffts: FftPair,
    transfer: Vec<Complex64>,
}

impl Convolver {
    pub fn new(k: &DiscreteKernel) -> Self {
        let ffts = FftPair::new(k.weights.len());
        let transfer = transfer_function(k, &ffts);
        Self { ffts, transfer }
    }

    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.ffts.forward.process(&mut buf);
        buf.iter_mut().zip(&self.transfer).for_each(|(b, t)| *b *= t);
        self.ffts.inverse.process(&mut buf);
        buf.into_iter().map(|c| c.re).collect()
    }
}

//! Time integration of `u_t = K∗u - u + G∗(u²/4) + (G∗u)(u/2)` on a periodic grid.

mod config;

pub use config::{
    DiagnosticsConfig, GridConfig, InitialData, Schedule, SimulationConfig, SmallnessPolicy,
    StepperConfig, StepperKind, DEFAULT_SEED,
};

use rustfft::num_complex::Complex64;

use crate::convolution::{convolve, sample_kernel, transfer_function, DiscreteKernel, FftPair};
use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::kernels::{moment_a, moment_b, MomentMethod, Parity};

/// `K∗u - u + G∗(u²)/4 + (G∗u) u/2`, one convolution at a time.
pub fn rhs(u: &GridFunction, k: &DiscreteKernel, g: &DiscreteKernel) -> Result<GridFunction> {
    let ku = convolve(k, u)?;
    let gu = convolve(g, u)?;
    let gu2 = convolve(g, &u.map(|v| v * v))?;
    let n = u.grid().len();
    let (uv, ku, gu, gu2) = (u.values(), ku.values(), gu.values(), gu2.values());
    let values = (0..n)
        .map(|i| ku[i] - uv[i] + 0.25 * gu2[i] + 0.5 * gu[i] * uv[i])
        .collect();
    Ok(GridFunction::from_raw(*u.grid(), values))
}

/// Reusable right-hand side evaluator.
///
/// Packs `u + i u²` into one complex transform: the even and odd parts of its
/// spectrum separate `û` and `(u²)^`, and the real and imaginary parts of one
/// inverse transform return `K∗u + G∗u²/4` and `G∗u`.
pub struct RhsOperator {
    grid: Grid,
    ffts: FftPair,
    k_hat: Vec<Complex64>,
    g_hat: Vec<Complex64>,
    buf: Vec<Complex64>,
    spec: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl RhsOperator {
    pub fn new(k: &DiscreteKernel, g: &DiscreteKernel) -> Result<Self> {
        k.grid().check_same(g.grid())?;
        let n = k.grid().len();
        let ffts = FftPair::new(n);
        let k_hat = transfer_function(k, &ffts);
        let g_hat = transfer_function(g, &ffts);
        let scratch_len = ffts
            .forward
            .get_inplace_scratch_len()
            .max(ffts.inverse.get_inplace_scratch_len());
        Ok(Self {
            grid: *k.grid(),
            ffts,
            k_hat,
            g_hat,
            buf: vec![Complex64::default(); n],
            spec: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn eval(&mut self, u: &[f64], out: &mut [f64]) {
        let n = self.grid.len();
        assert_eq!(u.len(), n);
        assert_eq!(out.len(), n);
        for (b, &v) in self.buf.iter_mut().zip(u) {
            *b = Complex64::new(v, v * v);
        }
        self.ffts
            .forward
            .process_with_scratch(&mut self.buf, &mut self.scratch);
        let i = Complex64::i();
        for k in 0..n {
            let z = self.buf[k];
            let zc = self.buf[(n - k) % n].conj();
            let u_hat = 0.5 * (z + zc);
            let sq_hat = -0.5 * i * (z - zc);
            let s1 = self.k_hat[k] * u_hat + 0.25 * self.g_hat[k] * sq_hat;
            let s2 = self.g_hat[k] * u_hat;
            self.spec[k] = s1 + i * s2;
        }
        self.ffts
            .inverse
            .process_with_scratch(&mut self.spec, &mut self.scratch);
        for ((o, &v), s) in out.iter_mut().zip(u).zip(&self.spec) {
            *o = s.re - v + 0.5 * s.im * v;
        }
    }

    pub fn apply(&mut self, u: &GridFunction) -> Result<GridFunction> {
        self.grid.check_same(u.grid())?;
        let mut out = vec![0.0; self.grid.len()];
        self.eval(u.values(), &mut out);
        Ok(GridFunction::from_raw(self.grid, out))
    }
}

/// `safety / (2 (1 + 3/2 C_GK sup_u))`.
pub fn stable_dt(safety: f64, c_gk: f64, sup_u: f64) -> f64 {
    safety / (2.0 * (1.0 + 1.5 * c_gk * sup_u))
}

/// Current time, solution and the conserved mass it must keep.
#[derive(Debug, Clone)]
pub struct SimulationState {
    pub t: f64,
    pub u: GridFunction,
    pub mass0: f64,
    pub steps: u64,
}

impl SimulationState {
    pub fn new(u: GridFunction) -> Self {
        let mass0 = u.mass();
        Self {
            t: 0.0,
            u,
            mass0,
            steps: 0,
        }
    }

    fn check(&self) -> Result<()> {
        if let Some(index) = self.u.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index, t: self.t });
        }
        let mass = self.u.mass();
        if (mass - self.mass0).abs() > 1e-10 * (1.0 + self.mass0.abs()) {
            return Err(Error::MassDrift {
                t: self.t,
                mass,
                mass0: self.mass0,
            });
        }
        Ok(())
    }
}

/// Explicit integrator holding its stage buffers.
pub struct Stepper {
    op: RhsOperator,
    kind: StepperKind,
    stages: [Vec<f64>; 3],
}

impl Stepper {
    pub fn new(k: &DiscreteKernel, g: &DiscreteKernel, kind: StepperKind) -> Result<Self> {
        let n = k.grid().len();
        Ok(Self {
            op: RhsOperator::new(k, g)?,
            kind,
            stages: [vec![0.0; n], vec![0.0; n], vec![0.0; n]],
        })
    }

    pub fn step(&mut self, state: &mut SimulationState, dt: f64) -> Result<()> {
        self.op.grid.check_same(state.u.grid())?;
        let u = state.u.values_mut();
        let [acc, stage, tmp] = &mut self.stages;
        match self.kind {
            StepperKind::Euler => {
                self.op.eval(u, stage);
                u.iter_mut().zip(stage.iter()).for_each(|(v, s)| *v += dt * s);
            }
            StepperKind::Rk4 => {
                self.op.eval(u, stage);
                acc.copy_from_slice(stage);
                for (c, w) in [(0.5, 2.0), (0.5, 2.0), (1.0, 1.0)] {
                    for ((t, &v), &s) in tmp.iter_mut().zip(u.iter()).zip(stage.iter()) {
                        *t = v + c * dt * s;
                    }
                    self.op.eval(tmp, stage);
                    acc.iter_mut().zip(stage.iter()).for_each(|(a, s)| *a += w * s);
                }
                u.iter_mut().zip(acc.iter()).for_each(|(v, a)| *v += dt / 6.0 * a);
            }
        }
        state.t += dt;
        state.steps += 1;
        state.check()
    }
}

/// Solution at one scheduled time.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub index: usize,
    pub t: f64,
    pub u: GridFunction,
}

/// Constants of a run that diagnostics need.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RunConstants {
    /// Continuous moments of the kernel pair.
    pub a: f64,
    pub b: f64,
    /// Lattice moments `½ h Σ w x²` and `h Σ g x`.
    pub a_h: f64,
    pub b_h: f64,
    /// `max |g_j| / w_j` on the lattice.
    pub c_gk: f64,
    pub dt_max: f64,
    pub sup0: f64,
    pub mass0: f64,
}

/// A finished run: configuration, kernels and snapshots.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub config: SimulationConfig,
    pub grid: Grid,
    pub k: DiscreteKernel,
    pub g: DiscreteKernel,
    pub constants: RunConstants,
    pub snapshots: Vec<Snapshot>,
    pub steps: u64,
}

/// Grid, discrete kernels and initial datum for a configuration.
#[derive(Debug, Clone)]
pub struct Setup {
    pub grid: Grid,
    pub k: DiscreteKernel,
    pub g: DiscreteKernel,
    pub phi: GridFunction,
    pub a: f64,
    pub b: f64,
}

impl Setup {
    pub fn new(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let a = moment_a(&config.kernels, MomentMethod::Auto)?;
        let b = moment_b(&config.kernels, MomentMethod::Auto)?;
        let half_length = config
            .grid
            .half_length
            .unwrap_or_else(|| 25.0 * (config.t_final * a).sqrt());
        let grid = Grid::new(config.grid.n, half_length)?;
        let k = sample_kernel(&config.kernels.k, &grid, Parity::Even)?;
        let g = sample_kernel(&config.kernels.g, &grid, Parity::Odd)?;
        let phi = config.initial.sample(&grid, config.seed)?;
        Ok(Self { grid, k, g, phi, a, b })
    }
}

pub fn simulate(config: &SimulationConfig) -> Result<RunRecord> {
    let setup = Setup::new(config)?;
    run_setup(config, setup)
}

/// Runs `config` from a given initial datum on the configured grid.
pub fn simulate_with_initial(config: &SimulationConfig, phi: GridFunction) -> Result<RunRecord> {
    let mut setup = Setup::new(config)?;
    setup.grid.check_same(phi.grid())?;
    setup.phi = phi;
    run_setup(config, setup)
}

fn run_setup(config: &SimulationConfig, setup: Setup) -> Result<RunRecord> {
    let Setup { grid, k, g, phi, a, b } = setup;
    let c_gk = k.domination_constant(&g);
    let sup0 = phi.lp_norm(f64::INFINITY);
    check_smallness(config.policy, c_gk, sup0)?;

    let auto_dt = stable_dt(config.stepper.safety, c_gk, sup0);
    let dt_max = match config.stepper.dt {
        Some(dt) if dt > auto_dt => match config.policy {
            SmallnessPolicy::Enforce => {
                return Err(Error::ConfigInvalid(format!(
                    "dt = {dt} exceeds the stable step {auto_dt}"
                )))
            }
            SmallnessPolicy::Warn => {
                log::warn!("dt = {dt} exceeds the stable step {auto_dt}");
                dt
            }
        },
        Some(dt) => dt,
        None => auto_dt,
    };

    let mut state = SimulationState::new(phi);
    let mut stepper = Stepper::new(&k, &g, config.stepper.method)?;
    let times = config.schedule.times(config.t_final);
    let mut snapshots = Vec::with_capacity(times.len());
    snapshots.push(Snapshot {
        index: 0,
        t: 0.0,
        u: state.u.clone(),
    });
    for (index, &target) in times.iter().enumerate().skip(1) {
        let span = target - state.t;
        let n = ((span / dt_max) * (1.0 - 1e-12)).ceil().max(1.0) as u64;
        let dt = span / n as f64;
        for _ in 0..n {
            stepper.step(&mut state, dt)?;
        }
        state.t = target;
        log::debug!("t = {target}, steps = {}", state.steps);
        snapshots.push(Snapshot {
            index,
            t: target,
            u: state.u.clone(),
        });
    }

    Ok(RunRecord {
        config: config.clone(),
        grid,
        constants: RunConstants {
            a,
            b,
            a_h: k.diffusivity(),
            b_h: g.moment(1),
            c_gk,
            dt_max,
            sup0,
            mass0: state.mass0,
        },
        k,
        g,
        snapshots,
        steps: state.steps,
    })
}

/// Enforce requires `sup < 1/(2 C)`; warn requires `sup < 1/C` and logs
/// when the stricter threshold is missed.
pub fn check_smallness(policy: SmallnessPolicy, c_gk: f64, sup: f64) -> Result<()> {
    let strict = sup * c_gk < 0.5;
    let loose = sup * c_gk < 1.0;
    match policy {
        SmallnessPolicy::Enforce if !strict => Err(Error::ConfigInvalid(format!(
            "‖φ‖∞ = {sup} is not below 1/(2 C_GK) = {}",
            0.5 / c_gk
        ))),
        SmallnessPolicy::Warn if !loose => Err(Error::ConfigInvalid(format!(
            "‖φ‖∞ = {sup} is not below 1/C_GK = {}",
            1.0 / c_gk
        ))),
        SmallnessPolicy::Warn if !strict => {
            log::warn!("‖φ‖∞ = {sup} lies in [1/(2 C_GK), 1/C_GK); large-p decay is not covered");
            Ok(())
        }
        _ => Ok(()),
    }
}

impl RunRecord {
    pub fn t_final(&self) -> f64 {
        self.snapshots.last().map_or(0.0, |s| s.t)
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Snapshot nearest to `t` within relative `1e-9`.
    pub fn snapshot_at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots
            .iter()
            .find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// `u(t)`, linear in time between bracketing snapshots.
    pub fn state_at(&self, t: f64) -> Result<GridFunction> {
        if let Some(s) = self.snapshot_at(t) {
            return Ok(s.u.clone());
        }
        let hi = self.snapshots.iter().position(|s| s.t > t);
        match hi {
            Some(j) if j > 0 && t >= 0.0 => {
                let (a, b) = (&self.snapshots[j - 1], &self.snapshots[j]);
                let w = (t - a.t) / (b.t - a.t);
                a.u.zip_with(&b.u, |x, y| (1.0 - w) * x + w * y)
            }
            _ => Err(Error::OutOfRange {
                what: "time",
                value: t,
                lo: 0.0,
                hi: self.t_final(),
            }),
        }
    }
}

/// `x ↦ λ u(λ² t0, λ x)` on the run grid; `u` is taken as zero outside
/// `[-L, L)` rather than continued periodically.
pub fn rescale_snapshot(run: &RunRecord, lambda: f64, t0: f64) -> Result<GridFunction> {
    if !(lambda > 0.0) {
        return Err(Error::OutOfRange {
            what: "lambda",
            value: lambda,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    let u = run.state_at(lambda * lambda * t0)?;
    let l = run.grid.half_length();
    Ok(GridFunction::from_fn(run.grid, |x| {
        let y = lambda * x;
        if y < -l || y >= l {
            0.0
        } else {
            lambda * u.interpolate(y)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::KernelFn;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn kernels(grid: &Grid) -> (DiscreteKernel, DiscreteKernel) {
        (
            sample_kernel(&KernelFn::exponential(1.0), grid, Parity::Even).unwrap(),
            sample_kernel(&KernelFn::exponential_derivative(1.0), grid, Parity::Odd).unwrap(),
        )
    }

    #[test]
    fn packed_operator_matches_plain_rhs() {
        let grid = Grid::new(128, 10.0).unwrap();
        let (k, g) = kernels(&grid);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = GridFunction::new(grid, (0..128).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap();
        let a = rhs(&u, &k, &g).unwrap();
        let b = RhsOperator::new(&k, &g).unwrap().apply(&u).unwrap();
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).abs() < 1e-14);
        }
        assert!(b.mass().abs() < 1e-14);
    }

    #[test]
    fn stable_dt_formula() {
        assert_eq!(stable_dt(0.5, 1.0, 0.0), 0.25);
        assert!((stable_dt(0.5, 1.0, 0.5) - 1.0 / 7.0).abs() < 1e-16);
        assert_eq!(stable_dt(1.0, 0.0, 3.0), 0.5);
    }

    #[test]
    fn euler_step_on_linear_problem() {
        let grid = Grid::new(64, 10.0).unwrap();
        let k = sample_kernel(&KernelFn::exponential(1.0), &grid, Parity::Even).unwrap();
        let g = sample_kernel(&KernelFn::zero(), &grid, Parity::Odd).unwrap();
        let u0 = GridFunction::from_fn(grid, |x| (-x * x).exp());
        let mut state = SimulationState::new(u0.clone());
        Stepper::new(&k, &g, StepperKind::Euler).unwrap().step(&mut state, 0.1).unwrap();
        let ku = convolve(&k, &u0).unwrap();
        for i in 0..64 {
            let expected = u0.values()[i] + 0.1 * (ku.values()[i] - u0.values()[i]);
            assert!((state.u.values()[i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn smallness_policy() {
        assert!(check_smallness(SmallnessPolicy::Enforce, 1.0, 0.3).is_ok());
        assert!(check_smallness(SmallnessPolicy::Enforce, 1.0, 0.6).is_err());
        assert!(check_smallness(SmallnessPolicy::Warn, 1.0, 0.6).is_ok());
        assert!(check_smallness(SmallnessPolicy::Warn, 1.0, 1.2).is_err());
    }
}

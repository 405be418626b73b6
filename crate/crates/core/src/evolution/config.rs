use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{Grid, GridFunction};
use crate::kernels::{read_table, KernelPair};

/// Default seed for randomized initial data.
pub const DEFAULT_SEED: u64 = 20_160_301;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub n: usize,
    /// Half-period `L`. When absent, `L = 25 √(T A)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_length: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 4096,
            half_length: None,
        }
    }
}

fn zero() -> f64 {
    0.0
}

/// Initial datum `φ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum InitialData {
    /// Normal profile with the given mass and either a width `sigma` or a
    /// peak value `peak`. Rescaled so the discrete mass equals `mass`.
    Gaussian {
        mass: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        sigma: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        peak: Option<f64>,
        #[serde(default = "zero")]
        center: f64,
    },
    /// `mass / (2a)` on `|x - center| ≤ a`, rescaled to the exact discrete mass.
    #[serde(rename = "tophat")]
    TopHat {
        mass: f64,
        half_width: f64,
        #[serde(default = "zero")]
        center: f64,
    },
    /// Piecewise-linear through `(x, value)` nodes, zero outside.
    Tabulated {
        #[serde(default)]
        points: Vec<[f64; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        path: Option<String>,
    },
    Constant { value: f64 },
    /// Sum of `count` Gaussian bumps with random centres in `[-spread, spread]`,
    /// widths in `[width/2, 3 width/2]` and positive weights, scaled to `mass`.
    RandomBumps {
        count: usize,
        mass: f64,
        spread: f64,
        width: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    Sum { terms: Vec<InitialData> },
}

impl InitialData {
    pub fn gaussian_with_peak(mass: f64, peak: f64) -> Self {
        InitialData::Gaussian {
            mass,
            sigma: None,
            peak: Some(peak),
            center: 0.0,
        }
    }

    pub fn resolve_tables(&mut self, base: &Path) -> Result<()> {
        match self {
            InitialData::Tabulated { points, path } => {
                if let Some(p) = path.take() {
                    *points = read_table(&base.join(p))?;
                }
            }
            InitialData::Sum { terms } => {
                for t in terms {
                    t.resolve_tables(base)?;
                }
            }
            _ => {}
        }
        Ok(())
    }

    /// Samples the datum on `grid`; `seed` feeds random shapes without their
    /// own seed.
    pub fn sample(&self, grid: &Grid, seed: u64) -> Result<GridFunction> {
        let values = match *self {
            InitialData::Gaussian {
                mass,
                sigma,
                peak,
                center,
            } => {
                let sigma = match (sigma, peak) {
                    (Some(s), None) => s,
                    (None, Some(p)) if p > 0.0 => mass.abs() / (p * (2.0 * PI).sqrt()),
                    _ => {
                        return Err(Error::ConfigInvalid(
                            "gaussian needs exactly one of sigma, peak (> 0)".into(),
                        ))
                    }
                };
                if !(sigma > 0.0) && mass != 0.0 {
                    return Err(Error::ConfigInvalid(format!("sigma must be positive, got {sigma}")));
                }
                if mass == 0.0 {
                    vec![0.0; grid.len()]
                } else {
                    let raw: Vec<f64> = grid
                        .points()
                        .map(|x| (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp())
                        .collect();
                    normalize_mass(grid, raw, mass)?
                }
            }
            InitialData::TopHat {
                mass,
                half_width,
                center,
            } => {
                if !(half_width > 0.0) {
                    return Err(Error::ConfigInvalid("tophat half_width must be positive".into()));
                }
                let raw = grid
                    .points()
                    .map(|x| if (x - center).abs() <= half_width { 1.0 } else { 0.0 })
                    .collect();
                if mass == 0.0 {
                    vec![0.0; grid.len()]
                } else {
                    normalize_mass(grid, raw, mass)?
                }
            }
            InitialData::Tabulated { ref points, ref path } => {
                if path.is_some() {
                    return Err(Error::ConfigInvalid("initial table path not resolved".into()));
                }
                let table = crate::kernels::KernelFn::tabulated(points.clone());
                grid.points().map(|x| table.eval(x)).collect()
            }
            InitialData::Constant { value } => vec![value; grid.len()],
            InitialData::RandomBumps {
                count,
                mass,
                spread,
                width,
                seed: own,
            } => {
                if count == 0 || !(width > 0.0) || !(spread >= 0.0) {
                    return Err(Error::ConfigInvalid(
                        "random_bumps needs count > 0, width > 0, spread >= 0".into(),
                    ));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(own.unwrap_or(seed));
                let bumps: Vec<(f64, f64, f64)> = (0..count)
                    .map(|_| {
                        let c = if spread > 0.0 { rng.gen_range(-spread..=spread) } else { 0.0 };
                        let s = width * rng.gen_range(0.5..1.5);
                        let w = rng.gen_range(0.1..1.0);
                        (c, s, w)
                    })
                    .collect();
                let raw = grid
                    .points()
                    .map(|x| {
                        bumps
                            .iter()
                            .map(|&(c, s, w)| w * (-(x - c).powi(2) / (2.0 * s * s)).exp())
                            .sum()
                    })
                    .collect();
                normalize_mass(grid, raw, mass)?
            }
            InitialData::Sum { ref terms } => {
                let mut acc = vec![0.0; grid.len()];
                for t in terms {
                    for (a, v) in acc.iter_mut().zip(t.sample(grid, seed)?.values()) {
                        *a += v;
                    }
                }
                acc
            }
        };
        GridFunction::new(*grid, values)
    }
}

fn normalize_mass(grid: &Grid, raw: Vec<f64>, mass: f64) -> Result<Vec<f64>> {
    let m = grid.spacing() * raw.iter().sum::<f64>();
    if !(m > 0.0) {
        return Err(Error::ConfigInvalid(
            "initial datum has no mass on the grid (resolve the shape)".into(),
        ));
    }
    Ok(raw.into_iter().map(|v| v * mass / m).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StepperKind {
    Euler,
    #[default]
    Rk4,
}

fn default_safety() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StepperConfig {
    #[serde(default)]
    pub method: StepperKind,
    /// Fixed time step; overrides the automatic stable step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_safety")]
    pub safety: f64,
}

impl Default for StepperConfig {
    fn default() -> Self {
        Self {
            method: StepperKind::Rk4,
            dt: None,
            safety: default_safety(),
        }
    }
}

fn default_t_min() -> f64 {
    0.625
}

fn default_per_octave() -> u32 {
    4
}

/// Snapshot times: `0`, `t_min 2^{k / per_octave}` below `T`, any `extra`
/// times, and `T` itself.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schedule {
    #[serde(default = "default_t_min")]
    pub t_min: f64,
    #[serde(default = "default_per_octave")]
    pub per_octave: u32,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<f64>,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            t_min: default_t_min(),
            per_octave: default_per_octave(),
            extra: Vec::new(),
        }
    }
}

impl Schedule {
    pub fn times(&self, t_final: f64) -> Vec<f64> {
        let mut times = vec![0.0];
        let q = self.per_octave.max(1) as i32;
        let mut k = 0i32;
        loop {
            let t = self.t_min * 2f64.powi(k.div_euclid(q)) * 2f64.powf(k.rem_euclid(q) as f64 / q as f64);
            if !(t < t_final) || self.t_min <= 0.0 {
                break;
            }
            times.push(t);
            k += 1;
        }
        times.extend(self.extra.iter().copied().filter(|&t| t > 0.0 && t < t_final));
        times.push(t_final);
        times.sort_by(f64::total_cmp);
        times.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
        times
    }
}

/// What to do when `‖φ‖_∞` exceeds the smallness thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmallnessPolicy {
    /// Refuse unless `‖φ‖_∞ < 1/(2 C_GK)`.
    #[default]
    Enforce,
    /// Log and run anyway.
    Warn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DiagnosticsConfig {
    /// Radius `R` of the tail-mass channel `h Σ_{|x|>R} u`. Defaults to
    /// `10 √(A T)` capped below `L/2`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tail_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationConfig {
    pub kernels: KernelPair,
    #[serde(default)]
    pub grid: GridConfig,
    pub initial: InitialData,
    pub t_final: f64,
    #[serde(default)]
    pub stepper: StepperConfig,
    #[serde(default)]
    pub schedule: Schedule,
    #[serde(default)]
    pub policy: SmallnessPolicy,
    #[serde(default)]
    pub diagnostics: DiagnosticsConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

impl SimulationConfig {
    /// The reference setup: exponential pair, Gaussian datum of mass 0.4 and
    /// peak 0.3, `N = 4096`, RK4, `T = 800`.
    pub fn reference() -> Self {
        Self {
            kernels: KernelPair::exponential(),
            grid: GridConfig::default(),
            initial: InitialData::gaussian_with_peak(0.4, 0.3),
            t_final: 800.0,
            stepper: StepperConfig::default(),
            schedule: Schedule::default(),
            policy: SmallnessPolicy::Enforce,
            diagnostics: DiagnosticsConfig::default(),
            seed: DEFAULT_SEED,
        }
    }

    /// Parses a JSON config and loads table files relative to its directory.
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let mut cfg: SimulationConfig = serde_json::from_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_tables(base)?;
        Ok(cfg)
    }

    pub fn resolve_tables(&mut self, base: &Path) -> Result<()> {
        self.kernels.resolve_tables(base)?;
        self.initial.resolve_tables(base)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernels.validate_parameters()?;
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(Error::ConfigInvalid(format!(
                "t_final must be positive, got {}",
                self.t_final
            )));
        }
        if let Some(dt) = self.stepper.dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return Err(Error::ConfigInvalid(format!("dt must be positive, got {dt}")));
            }
        }
        if !(self.stepper.safety > 0.0) {
            return Err(Error::ConfigInvalid("stepper safety must be positive".into()));
        }
        if !(self.schedule.t_min > 0.0) {
            return Err(Error::ConfigInvalid("schedule t_min must be positive".into()));
        }
        Ok(())
    }

    /// Sorted-key JSON; stable under key reordering of the input.
    pub fn canonical_json(&self) -> String {
        serde_json::to_value(self)
            .expect("config serializes")
            .to_string()
    }

    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_json().as_bytes()))
    }
}

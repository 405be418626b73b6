//! Self-similar source solution of the viscous Burgers equation
//! `U_t = A U_xx - (B/2)(U²)_x`, `U(0) = m δ₀`:
//!
//! ```text
//! U(t, x) = t^{-1/2} f_m(x / √t),   -A f'' - ½ ξ f' = ½ f - (B/2)(f²)'.
//! ```
//!
//! Integrating the profile equation once (the constant vanishes by decay at
//! infinity) gives the Bernoulli equation `A f' + (ξ/2) f = (B/2) f²`. With
//! `g = 1/f` it becomes linear, and
//!
//! ```text
//! f(ξ) = e^{-η²} / (C - β erf(η)),   η = ξ / (2√A),   β = B √π / (2√A).
//! ```
//!
//! Since `f = -(2A/B) d/dξ ln D` for the denominator `D`, the mass is
//! `-(2A/B) ln((C - β)/(C + β))`, which inverts to `C = β coth(mB / 4A)`.
//! Writing `coth x - erf η` as `2/expm1(2x) + erfc(η)` (for `x > 0`, and the
//! mirrored form for `x < 0`) keeps both terms positive, so the denominator is
//! evaluated without cancellation.
//!
//! [`build_profile_shooting`] is an independent check: it integrates the
//! Bernoulli equation outward from `ξ = 0` and bisects on `f(0)` until the
//! mass matches.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::quadrature::integrate_real_line;

#[derive(Debug, Clone)]
enum Repr {
    Zero,
    /// `B = 0`: `m e^{-η²} / √(4πA)`.
    Heat,
    /// `sign(m) e^{-η²} / (|β| (2/expm1(2|x|) + erfc(s η)))`, `s = sign(mB)`.
    ClosedForm { beta_abs: f64, offset: f64, s: f64 },
    /// Values and derivatives on a uniform ξ-grid, cubic Hermite in between.
    Table {
        xi0: f64,
        step: f64,
        f: Vec<f64>,
        df: Vec<f64>,
    },
}

/// The profile `f_m` for given mass and moments.
#[derive(Debug, Clone)]
pub struct Profile {
    m: f64,
    a: f64,
    b: f64,
    c_norm: f64,
    repr: Repr,
}

/// Summary written next to profile tables.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileMetadata {
    pub m: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub c_norm: f64,
    pub mass: f64,
    pub residual: f64,
}

fn check_coefficients(m: f64, a: f64, b: f64) -> Result<()> {
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::ConfigInvalid(format!("A must be positive, got {a}")));
    }
    if !m.is_finite() || !b.is_finite() {
        return Err(Error::ConfigInvalid(format!("m = {m} and B = {b} must be finite")));
    }
    Ok(())
}

/// Builds `f_m` from the explicit solution of the integrated profile
/// equation.
pub fn build_profile_closed_form(m: f64, a: f64, b: f64) -> Result<Profile> {
    check_coefficients(m, a, b)?;
    if m == 0.0 {
        return Ok(Profile {
            m,
            a,
            b,
            c_norm: f64::INFINITY,
            repr: Repr::Zero,
        });
    }
    let heat_c = (4.0 * PI * a).sqrt() / m;
    if b == 0.0 {
        return Ok(Profile {
            m,
            a,
            b,
            c_norm: heat_c,
            repr: Repr::Heat,
        });
    }
    let beta = b * PI.sqrt() / (2.0 * a.sqrt());
    let x = m * b / (4.0 * a);
    // coth|x| - 1; zero means the denominator touches zero at one end.
    let offset = 2.0 / (2.0 * x.abs()).exp_m1();
    if !(offset > 0.0 && offset.is_finite()) {
        return Err(Error::NoAdmissibleConstant { m, a, b });
    }
    Ok(Profile {
        m,
        a,
        b,
        c_norm: beta * (1.0 + offset) * x.signum(),
        repr: Repr::ClosedForm {
            beta_abs: beta.abs(),
            offset,
            s: x.signum(),
        },
    })
}

/// Step of the shooting integrator, in units of `√A`.
const SHOOT_STEP: f64 = 2.5e-3;
/// Integration half-range, in units of `√A`.
const SHOOT_RANGE: f64 = 16.0;

struct Trajectory {
    f: Vec<f64>,
    df: Vec<f64>,
    mass: f64,
}

/// Integrates `A f' = (B/2) f² - (ξ/2) f` from `f(0) = f0` out to `±R` with
/// classical RK4. Returns `None` when the solution blows up.
fn shoot(f0: f64, a: f64, b: f64, n_half: usize, step: f64) -> Option<Trajectory> {
    let rhs = |xi: f64, f: f64| (0.5 * b * f * f - 0.5 * xi * f) / a;
    let mut f = vec![0.0; 2 * n_half + 1];
    f[n_half] = f0;
    let bound = 1e8 * f0.abs().max(1e-300);
    for dir in [1.0, -1.0] {
        let hstep = dir * step;
        let mut y = f0;
        for k in 0..n_half {
            let xi = dir * k as f64 * step;
            let k1 = rhs(xi, y);
            let k2 = rhs(xi + 0.5 * hstep, y + 0.5 * hstep * k1);
            let k3 = rhs(xi + 0.5 * hstep, y + 0.5 * hstep * k2);
            let k4 = rhs(xi + hstep, y + hstep * k3);
            y += hstep / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
            if !y.is_finite() || y.abs() > bound {
                return None;
            }
            let idx = if dir > 0.0 { n_half + k + 1 } else { n_half - k - 1 };
            f[idx] = y;
        }
    }
    // Composite Simpson over the 2 n_half intervals.
    let mut acc = f[0] + f[2 * n_half];
    for (i, v) in f.iter().enumerate().take(2 * n_half).skip(1) {
        acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
    }
    let mass = acc * step / 3.0;
    let df = f
        .iter()
        .enumerate()
        .map(|(i, &v)| rhs((i as f64 - n_half as f64) * step, v))
        .collect();
    Some(Trajectory { f, df, mass })
}

/// Builds `f_m` by shooting on `f(0)`.
pub fn build_profile_shooting(m: f64, a: f64, b: f64) -> Result<Profile> {
    check_coefficients(m, a, b)?;
    if m == 0.0 {
        return Ok(Profile {
            m,
            a,
            b,
            c_norm: f64::INFINITY,
            repr: Repr::Zero,
        });
    }
    // f ↦ -f maps the equation with B onto the one with -B.
    let (target, b_pos, sign) = if m > 0.0 { (m, b, 1.0) } else { (-m, -b, -1.0) };
    let step = SHOOT_STEP * a.sqrt();
    let n_half = (SHOOT_RANGE / SHOOT_STEP).round() as usize;
    let mass_at = |f0: f64| shoot(f0, a, b_pos, n_half, step).map_or(f64::INFINITY, |t| t.mass);

    let mut lo = 0.0;
    let mut mass_lo = 0.0;
    let mut hi = target / (4.0 * PI * a).sqrt();
    let mut mass_hi = mass_at(hi);
    let mut doublings = 0;
    while mass_hi < target {
        lo = hi;
        mass_lo = mass_hi;
        hi *= 2.0;
        mass_hi = mass_at(hi);
        doublings += 1;
        if doublings > 200 {
            return Err(Error::BisectionFailure(format!(
                "no upper bracket for f(0) with mass {target}"
            )));
        }
    }
    if mass_lo > target {
        return Err(Error::BisectionFailure(format!(
            "mass {mass_lo} at lower bracket f(0) = {lo} already exceeds {target}"
        )));
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let mass_mid = mass_at(mid);
        if mass_mid < mass_lo || mass_mid > mass_hi {
            return Err(Error::BisectionFailure(format!(
                "mass not monotone in f(0) on [{lo}, {hi}]: {mass_lo}, {mass_mid}, {mass_hi}"
            )));
        }
        if mass_mid < target {
            lo = mid;
            mass_lo = mass_mid;
        } else {
            hi = mid;
            mass_hi = mass_mid;
        }
        if (mass_hi - mass_lo).abs() <= 1e-15 * target {
            break;
        }
    }
    let f0 = if (target - mass_lo) <= (mass_hi - target) { lo } else { hi };
    let traj = shoot(f0, a, b_pos, n_half, step).ok_or_else(|| {
        Error::BisectionFailure(format!("trajectory from f(0) = {f0} blows up"))
    })?;
    Ok(Profile {
        m,
        a,
        b,
        c_norm: sign / f0,
        repr: Repr::Table {
            xi0: -(n_half as f64) * step,
            step,
            f: traj.f.iter().map(|v| sign * v).collect(),
            df: traj.df.iter().map(|v| sign * v).collect(),
        },
    })
}

impl Profile {
    pub fn mass_parameter(&self) -> f64 {
        self.m
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    /// `1/f_m(0)`: the constant `C` of the explicit solution.
    pub fn c_norm(&self) -> f64 {
        self.c_norm
    }

    /// `f_m(ξ)`.
    pub fn eval(&self, xi: f64) -> f64 {
        let eta = xi / (2.0 * self.a.sqrt());
        match self.repr {
            Repr::Zero => 0.0,
            Repr::Heat => self.m * (-eta * eta).exp() / (4.0 * PI * self.a).sqrt(),
            Repr::ClosedForm { beta_abs, offset, s } => {
                let num = (-eta * eta).exp();
                if num == 0.0 {
                    return 0.0;
                }
                self.m.signum() * num / (beta_abs * (offset + libm::erfc(s * eta)))
            }
            Repr::Table {
                xi0,
                step,
                ref f,
                ref df,
            } => {
                let pos = (xi - xi0) / step;
                if !(pos >= 0.0) || pos >= (f.len() - 1) as f64 {
                    return 0.0;
                }
                let i = pos.floor() as usize;
                let t = pos - i as f64;
                let (t2, t3) = (t * t, t * t * t);
                let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
                let h10 = t3 - 2.0 * t2 + t;
                let h01 = -2.0 * t3 + 3.0 * t2;
                let h11 = t3 - t2;
                h00 * f[i] + h10 * step * df[i] + h01 * f[i + 1] + h11 * step * df[i + 1]
            }
        }
    }

    /// `∫ f_m` by adaptive quadrature.
    pub fn mass(&self) -> f64 {
        let scale = self.a.sqrt();
        integrate_real_line(|x| self.eval(x), &[], scale, 1e-15, "profile mass").unwrap_or(f64::NAN)
    }

    /// `‖f_m‖_p` by adaptive quadrature.
    pub fn lp_norm(&self, p: f64) -> f64 {
        let scale = self.a.sqrt();
        integrate_real_line(|x| self.eval(x).abs().powf(p), &[], scale, 1e-15, "profile norm")
            .map(|v| v.powf(1.0 / p))
            .unwrap_or(f64::NAN)
    }

    pub fn metadata(&self, residual_grid: &Grid) -> ProfileMetadata {
        ProfileMetadata {
            m: self.m,
            a: self.a,
            b: self.b,
            c_norm: self.c_norm,
            mass: self.mass(),
            residual: profile_residual(self, residual_grid),
        }
    }
}

/// `U(t, x) = t^{-1/2} f_m(x / √t)`.
pub fn evaluate_u(profile: &Profile, t: f64, x: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let s = t.sqrt();
    Ok(profile.eval(x / s) / s)
}

/// Sup over interior nodes of `|-A f'' - (ξ/2) f' - ½ f + (B/2)(f²)'|` with
/// centred differences.
pub fn profile_residual(profile: &Profile, grid: &Grid) -> f64 {
    profile_residual_of(|x| profile.eval(x), profile.a, profile.b, grid)
}

/// [`profile_residual`] for an arbitrary function.
pub fn profile_residual_of(f: impl Fn(f64) -> f64, a: f64, b: f64, grid: &Grid) -> f64 {
    let h = grid.spacing();
    if h > 0.01 * a.sqrt() {
        log::warn!("residual grid spacing {h} does not resolve the profile (A = {a})");
    }
    let v: Vec<f64> = grid.points().map(&f).collect();
    (1..grid.len() - 1)
        .map(|j| {
            let xi = grid.x(j);
            let d2 = (v[j + 1] - 2.0 * v[j] + v[j - 1]) / (h * h);
            let d1 = (v[j + 1] - v[j - 1]) / (2.0 * h);
            let dsq = (v[j + 1] * v[j + 1] - v[j - 1] * v[j - 1]) / (2.0 * h);
            (-a * d2 - 0.5 * xi * d1 - 0.5 * v[j] + 0.5 * b * dsq).abs()
        })
        .fold(0.0, f64::max)
}

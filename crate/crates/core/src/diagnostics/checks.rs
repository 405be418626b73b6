use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::RunRecord;
use crate::profiles::{evaluate_u, Profile};

use super::{compute_series, tail_mass, TimeSeries};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationRow {
    pub t0: f64,
    pub t1: f64,
    /// `(‖u(t1)‖₂² - ‖u(t0)‖₂²) / (2 Δt)`.
    pub lhs: f64,
    /// `-I₁(u(t0)) / 4`.
    pub rhs: f64,
    pub tol: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DissipationReport {
    pub rows: Vec<DissipationRow>,
    /// Smallest `rhs + tol - lhs` over all rows.
    pub worst_slack: f64,
    pub pass: bool,
}

/// Energy dissipation between consecutive snapshots.
pub fn check_dissipation(run: &RunRecord) -> Result<DissipationReport> {
    let limit = 1.0 / run.constants.c_gk;
    if run.constants.sup0 > limit {
        log::warn!(
            "‖φ‖∞ = {} exceeds 1/C_GK = {limit}; dissipation is not guaranteed",
            run.constants.sup0
        );
    }
    dissipation_from_series(&compute_series(run)?)
}

/// Dissipation check on the `L2` and `I1` channels of a series.
///
/// The tolerance on `[t_k, t_{k+1}]` is `10 Δt M_k`, where `M_k` is the largest
/// second divided difference of `‖u‖₂²` over the triples that include the
/// interval.
pub fn dissipation_from_series(series: &TimeSeries) -> Result<DissipationReport> {
    let missing = |c: &str| Error::ConfigInvalid(format!("series has no {c} channel"));
    let l2 = series.channel("L2").ok_or_else(|| missing("L2"))?;
    let i1 = series.channel("I1").ok_or_else(|| missing("I1"))?;
    let t = series.times();
    let e: Vec<f64> = l2.iter().map(|v| v * v).collect();
    let n = t.len();
    let second: Vec<f64> = (0..n)
        .map(|j| {
            if j == 0 || j + 1 >= n {
                0.0
            } else {
                let right = (e[j + 1] - e[j]) / (t[j + 1] - t[j]);
                let left = (e[j] - e[j - 1]) / (t[j] - t[j - 1]);
                2.0 * (right - left) / (t[j + 1] - t[j - 1])
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(n.saturating_sub(1));
    let mut worst_slack = f64::INFINITY;
    for k in 0..n.saturating_sub(1) {
        let dt = t[k + 1] - t[k];
        let m = second[k].abs().max(second[k + 1].abs());
        let tol = 10.0 * dt * m;
        let lhs = (e[k + 1] - e[k]) / (2.0 * dt);
        let rhs = -0.25 * i1[k];
        let slack = rhs + tol - lhs;
        worst_slack = worst_slack.min(slack);
        rows.push(DissipationRow {
            t0: t[k],
            t1: t[k + 1],
            lhs,
            rhs,
            tol,
            pass: slack >= 0.0,
        });
    }
    Ok(DissipationReport {
        pass: rows.iter().all(|r| r.pass),
        rows,
        worst_slack,
    })
}

/// Least-squares line through `(log t, log value)` on a time window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub channel: String,
    pub t_a: f64,
    pub t_b: f64,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
    pub points: usize,
}

pub fn fit_decay_exponent(series: &TimeSeries, channel: &str, window: (f64, f64)) -> Result<DecayFit> {
    let (t_a, t_b) = window;
    let values = series
        .channel(channel)
        .ok_or_else(|| Error::ConfigInvalid(format!("series has no {channel} channel")))?;
    let eps = 1e-9 * t_b.abs().max(1.0);
    let pts: Vec<(f64, f64)> = series
        .times()
        .iter()
        .zip(values)
        .filter(|(&t, _)| t >= t_a - eps && t <= t_b + eps && t > 0.0)
        .map(|(&t, &v)| (t, v))
        .collect();
    if pts.len() < 8 {
        return Err(Error::InsufficientData {
            found: pts.len(),
            needed: 8,
        });
    }
    if let Some(&(t, v)) = pts.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::PreconditionViolation(format!(
            "{channel} = {v} at t = {t} is not positive"
        )));
    }
    let xs: Vec<f64> = pts.iter().map(|(t, _)| t.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|(_, v)| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(DecayFit {
        channel: channel.to_string(),
        t_a,
        t_b,
        slope,
        intercept,
        residual,
        points: pts.len(),
    })
}

/// `t^{(1 - 1/p)/2} ‖u(t) - U(t)‖_p` on the run grid.
pub fn renormalized_error(run: &RunRecord, profile: &Profile, p: f64, t: f64) -> Result<f64> {
    let m_run = run.constants.mass0;
    let m_profile = profile.mass_parameter();
    if (m_run - m_profile).abs() > 1e-8 {
        return Err(Error::MassMismatch {
            run: m_run,
            profile: m_profile,
        });
    }
    if !(t > 0.0) {
        return Err(Error::NonPositiveTime(t));
    }
    let u = run.state_at(t)?;
    let mut diff = Vec::with_capacity(u.values().len());
    for (x, v) in run.grid.points().zip(u.values()) {
        diff.push(v - evaluate_u(profile, t, x)?);
    }
    let diff = crate::grid::GridFunction::new(run.grid, diff)?;
    let exponent = if p.is_infinite() { 0.5 } else { 0.5 * (1.0 - 1.0 / p) };
    let norm = diff.lp_norm(p);
    Ok(if exponent == 0.0 { norm } else { t.powf(exponent) * norm })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TailReport {
    pub r: f64,
    /// `∫_{|x|>R} φ`.
    pub initial_tail: f64,
    /// `(t, ∫_{|x|>2R} u(t), smallest C for this t)`.
    pub rows: Vec<(f64, f64, f64)>,
    /// Smallest `C` with `∫_{|x|>2R} u ≤ ∫_{|x|>R} φ + C (t/R² + √t/R)` at every snapshot.
    pub fitted_c: f64,
}

pub fn check_tail_bound(run: &RunRecord, r: f64) -> Result<TailReport> {
    let l = run.grid.half_length();
    if !(r > 0.0) || 2.0 * r >= l {
        return Err(Error::RangeError { radius: r, half_length: l });
    }
    let phi = &run.snapshots[0].u;
    if phi.min() < -1e-12 {
        log::warn!("tail bound assumes nonnegative data; min φ = {}", phi.min());
    }
    let initial_tail = tail_mass(phi, r);
    let mut rows = Vec::new();
    let mut fitted_c = 0.0f64;
    for s in run.snapshots.iter().filter(|s| s.t > 0.0) {
        let tail = tail_mass(&s.u, 2.0 * r);
        let scale = s.t / (r * r) + s.t.sqrt() / r;
        let c = ((tail - initial_tail) / scale).max(0.0);
        fitted_c = fitted_c.max(c);
        rows.push((s.t, tail, c));
    }
    Ok(TailReport {
        r,
        initial_tail,
        rows,
        fitted_c,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    /// `max_t max_j (u_j - v_j)`.
    pub max_violation: f64,
    pub worst_t: f64,
    pub pass: bool,
}

/// Ordered data stay ordered: `u₀ ≤ v₀ ⇒ u(t) ≤ v(t)`.
pub fn comparison_check(run_u: &RunRecord, run_v: &RunRecord) -> Result<ComparisonReport> {
    run_u.grid.check_same(&run_v.grid)?;
    if run_u.times() != run_v.times() {
        return Err(Error::PreconditionViolation("runs do not share a snapshot schedule".into()));
    }
    if run_u.k != run_v.k || run_u.g != run_v.g {
        return Err(Error::PreconditionViolation("runs do not share kernels".into()));
    }
    let (u0, v0) = (&run_u.snapshots[0].u, &run_v.snapshots[0].u);
    let order = u0
        .values()
        .iter()
        .zip(v0.values())
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    if order > 1e-15 {
        return Err(Error::PreconditionViolation(format!(
            "initial data are not ordered: max(u₀ - v₀) = {order}"
        )));
    }
    let limit = 1.0 / run_u.constants.c_gk;
    for sup in [run_u.constants.sup0, run_v.constants.sup0] {
        if sup >= limit {
            return Err(Error::PreconditionViolation(format!(
                "‖φ‖∞ = {sup} is not below 1/C_GK = {limit}"
            )));
        }
    }
    let mut max_violation = f64::NEG_INFINITY;
    let mut worst_t = 0.0;
    for (a, b) in run_u.snapshots.iter().zip(&run_v.snapshots) {
        let v = a
            .u
            .values()
            .iter()
            .zip(b.u.values())
            .map(|(x, y)| x - y)
            .fold(f64::NEG_INFINITY, f64::max);
        if v > max_violation {
            max_violation = v;
            worst_t = a.t;
        }
    }
    Ok(ComparisonReport {
        max_violation,
        worst_t,
        pass: max_violation <= 1e-9,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fit_recovers_power_law() {
        let mut s = TimeSeries::new(["L2"]);
        for k in 0..12 {
            let t = 50.0 * 2f64.powf(k as f64 / 3.0);
            s.push(t, &[3.0 * t.powf(-0.25)]).unwrap();
        }
        let fit = fit_decay_exponent(&s, "L2", (50.0, 800.0)).unwrap();
        assert!((fit.slope + 0.25).abs() < 1e-12);
        assert!((fit.intercept - 3f64.ln()).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn fit_needs_eight_points() {
        let mut s = TimeSeries::new(["L2"]);
        for k in 1..8 {
            s.push(k as f64, &[1.0]).unwrap();
        }
        assert!(matches!(
            fit_decay_exponent(&s, "L2", (0.0, 10.0)),
            Err(Error::InsufficientData { found: 7, needed: 8 })
        ));
    }

    #[test]
    fn constant_series_has_zero_slope() {
        let mut s = TimeSeries::new(["L1"]);
        for k in 1..=10 {
            s.push(k as f64, &[0.4]).unwrap();
        }
        assert!(fit_decay_exponent(&s, "L1", (1.0, 10.0)).unwrap().slope.abs() < 1e-15);
    }

    #[test]
    fn zero_run_dissipates_trivially() {
        let mut s = TimeSeries::new(["L2", "I1"]);
        for k in 0..5 {
            s.push(k as f64, &[0.0, 0.0]).unwrap();
        }
        let r = dissipation_from_series(&s).unwrap();
        assert!(r.pass);
        assert_eq!(r.worst_slack, 0.0);
    }
}

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::RunRecord;
use crate::profiles::{build_profile_closed_form, Profile};

use super::{
    check_dissipation, check_lemma_i2i1, check_tail_bound, comparison_check, compute_series,
    default_tail_radius, fit_decay_exponent, renormalized_error, TimeSeries,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    Skipped,
}

/// One verified claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub check: String,
    pub anchor: String,
    pub inputs_hash: String,
    pub status: Status,
    /// Margin by which the check held; negative when it failed.
    pub worst_slack: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub fitted: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub config_hash: String,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
}

impl VerifyReport {
    pub fn failing(&self) -> Vec<&CheckRecord> {
        self.checks.iter().filter(|c| c.status == Status::Fail).collect()
    }

    /// Fixed-width table, one row per check.
    pub fn table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<22} {:<8} {:>12}  anchor", "check", "status", "slack");
        for c in &self.checks {
            let status = match c.status {
                Status::Pass => "pass",
                Status::Fail => "FAIL",
                Status::Skipped => "skipped",
            };
            let slack = c.worst_slack.map_or_else(|| "-".to_string(), |s| format!("{s:.3e}"));
            let _ = writeln!(out, "{:<22} {:<8} {:>12}  {}", c.check, status, slack, c.anchor);
            if !c.detail.is_empty() {
                let _ = writeln!(out, "{:<22} {}", "", c.detail);
            }
        }
        out
    }
}

/// Moments used for the limiting Burgers profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMoments {
    /// `½ h Σ w x²` and `h Σ g x` of the sampled kernels: the constants the
    /// discrete dynamics actually converges to.
    #[default]
    Lattice,
    Continuous,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyOptions {
    pub moments: ProfileMoments,
    /// Overrides for the profile's `A` and `B`.
    pub profile_a: Option<f64>,
    pub profile_b: Option<f64>,
    /// Decay-fit window; defaults to `[T/16, T]`.
    pub fit_window: Option<(f64, f64)>,
    /// Early and late times of the error ratio; default `T/80` and `0.8 T`.
    pub error_times: Option<(f64, f64)>,
    pub lemma_ps: Vec<u32>,
    pub tail_radius: Option<f64>,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            moments: ProfileMoments::Lattice,
            profile_a: None,
            profile_b: None,
            fit_window: None,
            error_times: None,
            lemma_ps: (2..=8).collect(),
            tail_radius: None,
        }
    }
}

/// Profile with the run's mass and the chosen moments.
pub fn comparison_profile(run: &RunRecord, opts: &VerifyOptions) -> Result<Profile> {
    let (a, b) = match opts.moments {
        ProfileMoments::Lattice => (run.constants.a_h, run.constants.b_h),
        ProfileMoments::Continuous => (run.constants.a, run.constants.b),
    };
    build_profile_closed_form(
        run.constants.mass0,
        opts.profile_a.unwrap_or(a),
        opts.profile_b.unwrap_or(b),
    )
}

struct Builder {
    hash: String,
    checks: Vec<CheckRecord>,
}

impl Builder {
    fn add(&mut self, check: &str, anchor: &str, pass: bool, slack: Option<f64>) -> &mut CheckRecord {
        self.checks.push(CheckRecord {
            check: check.into(),
            anchor: anchor.into(),
            inputs_hash: self.hash.clone(),
            status: if pass { Status::Pass } else { Status::Fail },
            worst_slack: slack,
            fitted: BTreeMap::new(),
            detail: String::new(),
        });
        self.checks.last_mut().unwrap()
    }

    fn skip(&mut self, check: &str, anchor: &str, why: String) {
        let r = self.add(check, anchor, true, None);
        r.status = Status::Skipped;
        r.detail = why;
    }
}

/// Largest increase `x[k+1] - x[k]` over a channel.
fn max_increase(x: &[f64]) -> f64 {
    x.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

/// Runs every applicable check on `run` (and on the ordered pair
/// `run ≤ paired` when given).
pub fn verify_run(run: &RunRecord, paired: Option<&RunRecord>, opts: &VerifyOptions) -> Result<VerifyReport> {
    let series = compute_series(run)?;
    let mut b = Builder {
        hash: run.config.hash(),
        checks: Vec::new(),
    };
    let t_final = run.t_final();
    let m0 = run.constants.mass0;
    let channel = |name: &str| -> Result<&[f64]> {
        series
            .channel(name)
            .ok_or_else(|| Error::ConfigInvalid(format!("series has no {name} channel")))
    };

    let mass = channel("mass")?;
    let drift = mass.iter().map(|m| (m - m0).abs()).fold(0.0, f64::max);
    let tol = 1e-10 * (1.0 + m0.abs());
    b.add("mass", "mass conservation", drift <= tol, Some(tol - drift))
        .fitted
        .insert("max_drift".into(), drift);

    let phi_min = run.snapshots[0].u.min();
    if phi_min >= 0.0 {
        let min = run.snapshots.iter().map(|s| s.u.min()).fold(f64::INFINITY, f64::min);
        b.add("sign", "sign preservation", min >= -1e-9, Some(min + 1e-9));
    } else {
        b.skip("sign", "sign preservation", format!("φ changes sign (min {phi_min:e})"));
    }

    for (name, ch, anchor) in [
        ("l1-stability", "L1", "L1 stability"),
        ("linf-stability", "Linf", "L-infinity stability"),
    ] {
        let x = channel(ch)?;
        let slack = (1e-9 - max_increase(x)).min(x[0] + 1e-9 - x.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        b.add(name, anchor, slack >= 0.0, Some(slack));
    }

    let diss = check_dissipation(run)?;
    let r = b.add("energy-dissipation", "energy inequality", diss.pass, Some(diss.worst_slack));
    if let Some(row) = diss.rows.iter().find(|r| !r.pass) {
        r.detail = format!("first failure on [{}, {}]", row.t0, row.t1);
    }

    lemma_check(&mut b, run, opts)?;
    decay_checks(&mut b, &series, t_final, opts);
    convergence_check(&mut b, run, opts);

    if let Some(v) = paired {
        match comparison_check(run, v) {
            Ok(c) => {
                b.add("comparison", "comparison principle", c.pass, Some(1e-9 - c.max_violation))
                    .fitted
                    .insert("worst_t".into(), c.worst_t);
            }
            Err(e) => {
                b.add("comparison", "comparison principle", false, None).detail = e.to_string();
            }
        }
    }

    let radius = opts.tail_radius.unwrap_or_else(|| default_tail_radius(run));
    match check_tail_bound(run, radius) {
        Ok(t) => {
            let r = b.add("tail-bound", "tail estimate (fitted constant)", t.fitted_c.is_finite(), None);
            r.fitted.insert("R".into(), t.r);
            r.fitted.insert("C".into(), t.fitted_c);
        }
        Err(e) => b.skip("tail-bound", "tail estimate (fitted constant)", e.to_string()),
    }

    let pass = b.checks.iter().all(|c| c.status != Status::Fail);
    Ok(VerifyReport {
        config_hash: b.hash,
        checks: b.checks,
        pass,
    })
}

fn lemma_check(b: &mut Builder, run: &RunRecord, opts: &VerifyOptions) -> Result<()> {
    let anchor = "I2 bounded by I1";
    if run.snapshots.iter().any(|s| s.u.min() < -1e-12) {
        b.skip("i2-i1-lemma", anchor, "solution is not nonnegative".into());
        return Ok(());
    }
    let mut worst = f64::INFINITY;
    let mut worst_at = (0.0, 0);
    for s in &run.snapshots {
        for &p in &opts.lemma_ps {
            let r = check_lemma_i2i1(&s.u, &run.k, &run.g, p, run.constants.c_gk)?;
            if r.slack < worst {
                worst = r.slack;
                worst_at = (s.t, p);
            }
        }
    }
    let r = b.add("i2-i1-lemma", anchor, worst >= -1e-12, Some(worst));
    r.fitted.insert("worst_t".into(), worst_at.0);
    r.fitted.insert("worst_p".into(), worst_at.1 as f64);
    Ok(())
}

fn decay_checks(b: &mut Builder, series: &TimeSeries, t_final: f64, opts: &VerifyOptions) {
    let window = opts.fit_window.unwrap_or((t_final / 16.0, t_final));
    for (name, ch, lo, hi) in [
        ("decay-l1", "L1", -0.02, 0.005),
        ("decay-l2", "L2", -0.30, -0.20),
        ("decay-l4", "L4", -0.43, -0.32),
    ] {
        let anchor = format!("decay of {ch}");
        match fit_decay_exponent(series, ch, window) {
            Ok(fit) => {
                let slack = (fit.slope - lo).min(hi - fit.slope);
                let r = b.add(name, &anchor, slack >= 0.0, Some(slack));
                r.fitted.insert("slope".into(), fit.slope);
                r.fitted.insert("intercept".into(), fit.intercept);
                r.fitted.insert("residual".into(), fit.residual);
                r.detail = format!("window [{}, {}], {} points, accepted [{lo}, {hi}]", fit.t_a, fit.t_b, fit.points);
            }
            Err(e) => b.skip(name, &anchor, e.to_string()),
        }
    }
}

fn convergence_check(b: &mut Builder, run: &RunRecord, opts: &VerifyOptions) {
    let anchor = "convergence to the Burgers profile";
    let t_final = run.t_final();
    let (early, late) = opts.error_times.unwrap_or((t_final / 80.0, 0.8 * t_final));
    let profile = match comparison_profile(run, opts) {
        Ok(p) => p,
        Err(e) => {
            b.add("profile-convergence", anchor, false, None).detail = e.to_string();
            return;
        }
    };
    if run.constants.mass0 == 0.0 {
        b.skip("profile-convergence", anchor, "zero mass".into());
        return;
    }
    let outcome = (|| -> Result<CheckRecord> {
        let mut fitted = BTreeMap::new();
        let mut slack = f64::INFINITY;
        for p in [1.0, 2.0] {
            let e0 = renormalized_error(run, &profile, p, early)?;
            let e1 = renormalized_error(run, &profile, p, late)?;
            fitted.insert(format!("e{p}_early"), e0);
            fitted.insert(format!("e{p}_late"), e1);
            slack = slack.min(0.5 - e1 / e0);
        }
        // e₁ nonincreasing up to 5% over the last three decades.
        let mut prev: Option<f64> = None;
        let mut jitter = f64::NEG_INFINITY;
        for s in run.snapshots.iter().filter(|s| s.t >= t_final / 1000.0) {
            let e = renormalized_error(run, &profile, 1.0, s.t)?;
            if let Some(p) = prev {
                jitter = jitter.max(e / p - 1.0);
            }
            prev = Some(e);
        }
        fitted.insert("max_rise".into(), jitter);
        slack = slack.min(0.05 - jitter);
        Ok(CheckRecord {
            check: "profile-convergence".into(),
            anchor: anchor.into(),
            inputs_hash: String::new(),
            status: if slack >= 0.0 { Status::Pass } else { Status::Fail },
            worst_slack: Some(slack),
            fitted,
            detail: format!("profile A = {}, B = {}", profile.a(), profile.b()),
        })
    })();
    match outcome {
        Ok(mut r) => {
            r.inputs_hash = b.hash.clone();
            b.checks.push(r);
        }
        Err(e) => b.skip("profile-convergence", anchor, e.to_string()),
    }
}

//! `sweep`: a base config, explicit patched variants and a cartesian product
//! over dotted field paths, run concurrently.
//!
//! ```json
//! {
//!   "base": { ... simulation config ... },
//!   "runs": [ { "name": "wide", "patch": { "initial": { "sigma": 2.0 } } } ],
//!   "product": { "initial.mass": [0.1, 0.2], "grid.n": [512, 1024] }
//! }
//! ```

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use nonlocal_burgers::diagnostics::{compute_series, fit_decay_exponent, DecayFit};
use nonlocal_burgers::evolution::{simulate, SimulationConfig};
use nonlocal_burgers::io::write_run;

use crate::{usage, CmdResult, Failure, PolicyArg};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    base: Value,
    #[serde(default)]
    runs: Vec<Variant>,
    #[serde(default)]
    product: BTreeMap<String, Vec<Value>>,
}

#[derive(Deserialize)]
struct Variant {
    name: String,
    #[serde(default)]
    patch: Value,
}

#[derive(Serialize)]
struct Outcome {
    name: String,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    manifest: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip)]
    fits: Vec<DecayFit>,
}

/// RFC 7386 merge patch.
fn merge(target: &mut Value, patch: &Value) {
    match (target, patch) {
        (Value::Object(t), Value::Object(p)) => {
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else {
                    merge(t.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        (t, p) => *t = p.clone(),
    }
}

fn set_path(target: &mut Value, path: &str, value: Value) {
    let mut patch = value;
    for key in path.rsplit('.') {
        let mut obj = serde_json::Map::new();
        obj.insert(key.to_string(), patch);
        patch = Value::Object(obj);
    }
    merge(target, &patch);
}

fn expand(cfg: &SweepConfig) -> Vec<(String, Value)> {
    let mut out: Vec<(String, Value)> = cfg
        .runs
        .iter()
        .map(|v| {
            let mut c = cfg.base.clone();
            merge(&mut c, &v.patch);
            (v.name.clone(), c)
        })
        .collect();
    if !cfg.product.is_empty() {
        let mut combos: Vec<Value> = vec![cfg.base.clone()];
        for (path, values) in &cfg.product {
            combos = combos
                .into_iter()
                .flat_map(|c| {
                    values.iter().map(move |v| {
                        let mut c = c.clone();
                        set_path(&mut c, path, v.clone());
                        c
                    })
                })
                .collect();
        }
        out.extend(combos.into_iter().enumerate().map(|(i, c)| (format!("run_{i:03}"), c)));
    }
    out
}

fn run_one(name: &str, cfg: Value, base_dir: &Path, out: &Path) -> anyhow::Result<(String, Vec<DecayFit>)> {
    let mut cfg: SimulationConfig = serde_json::from_value(cfg).context("parsing config")?;
    cfg.resolve_tables(base_dir)?;
    let run = simulate(&cfg)?;
    let dir = out.join(name);
    write_run(&run, &dir)?;
    let series = compute_series(&run)?;
    let t = run.t_final();
    let fits = ["L1", "L2", "L4"]
        .iter()
        .filter_map(|ch| fit_decay_exponent(&series, ch, (t / 16.0, t)).ok())
        .collect();
    Ok((dir.join("manifest.json").to_string_lossy().into_owned(), fits))
}

pub fn run(
    config: &Path,
    out: &Path,
    threads: Option<usize>,
    seed: Option<u64>,
    policy: Option<PolicyArg>,
) -> CmdResult {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(usage)?;
    let sweep: SweepConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", config.display()))
        .map_err(usage)?;
    let mut variants = expand(&sweep);
    for (_, v) in &mut variants {
        if let Some(s) = seed {
            set_path(v, "seed", s.into());
        }
        if let Some(p) = policy {
            let name = match p {
                PolicyArg::Enforce => "enforce",
                PolicyArg::Warn => "warn",
            };
            set_path(v, "policy", name.into());
        }
    }
    let mut names: Vec<&str> = variants.iter().map(|(n, _)| n.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(usage(anyhow!("sweep run names must be unique")));
    }

    fs::create_dir_all(out).map_err(usage)?;
    let base_dir = config.parent().unwrap_or(Path::new("."));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(usage)?;
    let outcomes: Vec<Outcome> = pool.install(|| {
        variants
            .into_par_iter()
            .map(|(name, cfg)| match run_one(&name, cfg, base_dir, out) {
                Ok((manifest, fits)) => Outcome {
                    name,
                    ok: true,
                    manifest: Some(manifest),
                    error: None,
                    fits,
                },
                Err(e) => {
                    log::error!("{name}: {e:#}");
                    Outcome {
                        name,
                        ok: false,
                        manifest: None,
                        error: Some(format!("{e:#}")),
                        fits: Vec::new(),
                    }
                }
            })
            .collect()
    });

    let mut csv = std::io::BufWriter::new(fs::File::create(out.join("decay_fits.csv")).map_err(usage)?);
    writeln!(csv, "name,channel,t_a,t_b,slope,intercept,residual,points").map_err(usage)?;
    for o in &outcomes {
        for f in &o.fits {
            writeln!(
                csv,
                "{},{},{:e},{:e},{:e},{:e},{:e},{}",
                o.name, f.channel, f.t_a, f.t_b, f.slope, f.intercept, f.residual, f.points
            )
            .map_err(usage)?;
        }
    }
    csv.flush().map_err(usage)?;
    let json = serde_json::to_string_pretty(&outcomes).map_err(|e| Failure::Check(e.into()))?;
    fs::write(out.join("sweep.json"), json + "\n").map_err(usage)?;

    let failed: Vec<&str> = outcomes.iter().filter(|o| !o.ok).map(|o| o.name.as_str()).collect();
    println!("{} runs, {} failed", outcomes.len(), failed.len());
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Check(anyhow!("failed runs: {}", failed.join(", "))))
    }
}

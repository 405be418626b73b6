use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use serde::{Deserialize, Serialize};

use nonlocal_burgers::diagnostics::{verify_run, ProfileMoments, VerifyOptions};
use nonlocal_burgers::evolution::simulate as run_simulation;
use nonlocal_burgers::grid::Grid;
use nonlocal_burgers::io::{load_run, write_run, RunManifest};
use nonlocal_burgers::kernels::{validate_kernel_pair, KernelPair, SampleSet};
use nonlocal_burgers::profiles::{build_profile_closed_form, build_profile_shooting, ProfileMetadata};

use crate::{classify, load_config, usage, CmdResult, Failure, MomentsArg, RunArgs};

const KERNEL_TOL: f64 = 1e-10;

#[derive(Deserialize)]
struct KernelsOnly {
    kernels: KernelPair,
}

pub fn validate(config: &Path) -> CmdResult {
    let text = fs::read_to_string(config)
        .with_context(|| format!("reading {}", config.display()))
        .map_err(usage)?;
    let mut pair = serde_json::from_str::<KernelsOnly>(&text)
        .with_context(|| format!("parsing the kernels block of {}", config.display()))
        .map_err(usage)?
        .kernels;
    pair.resolve_tables(config.parent().unwrap_or(Path::new(".")))
        .map_err(usage)?;
    let report = validate_kernel_pair(&pair, &SampleSet::default_for(&pair), KERNEL_TOL).map_err(classify)?;
    let h = &report.hypotheses;
    println!("A     = {}", report.a);
    println!("B     = {}", report.b);
    println!("C_GK  = {}", report.c_gk);
    println!("|K|   = {}", report.mass_k);
    for (name, ok) in [
        ("K >= 0", h.k_nonnegative),
        ("K even", h.k_even),
        ("K mass one", h.k_unit_mass),
        ("G odd", h.g_odd),
        ("|G| <= C_GK K", h.dominated),
        ("finite moments", h.finite_moments),
    ] {
        println!("{:<16} {}", name, if ok { "ok" } else { "FAILED" });
    }
    println!("{}", serde_json::to_string(&report).map_err(|e| Failure::Check(e.into()))?);
    if h.all() {
        Ok(())
    } else {
        Err(Failure::Check(anyhow!("kernel hypotheses do not hold")))
    }
}

pub fn simulate(args: &RunArgs) -> CmdResult {
    let cfg = load_config(&args.config, args.seed, args.policy)?;
    let run = run_simulation(&cfg)
        .map_err(|e| Failure::Check(anyhow!(e).context(format!("simulating {}", args.config.display()))))?;
    let manifest = write_run(&run, &args.out).map_err(classify)?;
    let last = run.snapshots.last().expect("runs keep t = 0");
    let drift = run
        .snapshots
        .iter()
        .map(|s| (s.u.mass() - run.constants.mass0).abs())
        .fold(0.0, f64::max);
    println!(
        "{} t = {} steps = {} mass = {} drift = {:e} L1 = {} Linf = {} -> {}",
        manifest.run_id,
        last.t,
        run.steps,
        run.constants.mass0,
        drift,
        last.u.lp_norm(1.0),
        last.u.lp_norm(f64::INFINITY),
        args.out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct ProfileOutput {
    #[serde(flatten)]
    metadata: ProfileMetadata,
    /// `max |closed form - shooting|` over the table.
    shooting_max_diff: f64,
}

pub fn profile(m: f64, a: f64, b: f64, out: &Path, xi_max: Option<f64>, points: usize) -> CmdResult {
    if points < 2 {
        return Err(usage(anyhow!("--points must be at least 2")));
    }
    let closed = build_profile_closed_form(m, a, b).map_err(classify)?;
    let shooting = build_profile_shooting(m, a, b).map_err(classify)?;
    let xi_max = xi_max.unwrap_or(12.0 * a.sqrt());
    let xs: Vec<f64> = (0..points)
        .map(|i| -xi_max + 2.0 * xi_max * i as f64 / (points - 1) as f64)
        .collect();
    let residual_grid = Grid::new(4096, xi_max).map_err(usage)?;
    let shooting_max_diff = xs
        .iter()
        .map(|&x| (closed.eval(x) - shooting.eval(x)).abs())
        .fold(0.0, f64::max);

    fs::create_dir_all(out).map_err(usage)?;
    let mut table = csv_writer(&out.join("profile.csv"))?;
    writeln!(table, "xi,f").map_err(usage)?;
    for &x in &xs {
        writeln!(table, "{x:e},{:e}", closed.eval(x)).map_err(usage)?;
    }
    let output = ProfileOutput {
        metadata: closed.metadata(&residual_grid),
        shooting_max_diff,
    };
    let json = serde_json::to_string_pretty(&output).map_err(|e| Failure::Check(e.into()))?;
    fs::write(out.join("profile.json"), json.clone() + "\n").map_err(usage)?;
    println!("{json}");
    Ok(())
}

fn csv_writer(path: &Path) -> Result<std::io::BufWriter<fs::File>, Failure> {
    Ok(std::io::BufWriter::new(
        fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(usage)?,
    ))
}

pub fn verify(
    run_dir: &Path,
    paired: Option<&Path>,
    moments: MomentsArg,
    profile_a: Option<f64>,
    profile_b: Option<f64>,
    out: Option<&Path>,
) -> CmdResult {
    let run = load_run(run_dir)
        .with_context(|| format!("loading {}", run_dir.display()))
        .map_err(usage)?;
    let paired_run = match paired {
        Some(p) => Some(
            load_run(p)
                .with_context(|| format!("loading {}", p.display()))
                .map_err(usage)?,
        ),
        None => None,
    };
    let opts = VerifyOptions {
        moments: match moments {
            MomentsArg::Lattice => ProfileMoments::Lattice,
            MomentsArg::Continuous => ProfileMoments::Continuous,
        },
        profile_a,
        profile_b,
        ..VerifyOptions::default()
    };
    let report = verify_run(&run, paired_run.as_ref(), &opts).map_err(classify)?;
    let default_out = run_dir.join("verify.json");
    let path = out.unwrap_or(&default_out);
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Check(e.into()))?;
    fs::write(path, json + "\n").map_err(usage)?;
    if out.is_none() {
        let mut manifest = RunManifest::read(run_dir).map_err(usage)?;
        if !manifest.reports.iter().any(|r| r == "verify.json") {
            manifest.reports.push("verify.json".into());
            manifest.write(run_dir).map_err(usage)?;
        }
    }
    print!("{}", report.table());
    if report.pass {
        Ok(())
    } else {
        let names: Vec<&str> = report.failing().iter().map(|c| c.check.as_str()).collect();
        Err(Failure::Check(anyhow!("failing checks: {}", names.join(", "))))
    }
}

//! Run directories: `config.json`, `series.csv`, `snapshots/t_<index>.bin`
//! with `.json` sidecars, and `manifest.json`.

use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::diagnostics::compute_series;
use crate::error::{Error, Result};
use crate::evolution::{RunConstants, RunRecord, Setup, SimulationConfig, Snapshot};
use crate::grid::{Grid, GridFunction};

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Sidecar of a binary snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotMeta {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "L")]
    pub half_length: f64,
    pub t: f64,
    pub mass: f64,
    pub kernel_hash: String,
    pub index: usize,
}

/// Index of a run directory. Paths are relative to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub config_hash: String,
    pub seed: u64,
    pub tool_version: String,
    pub config: String,
    pub series: String,
    pub snapshots: Vec<String>,
    #[serde(default)]
    pub reports: Vec<String>,
    pub constants: RunConstants,
    pub steps: u64,
}

impl RunManifest {
    pub fn read(dir: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&fs::read_to_string(dir.join("manifest.json"))?)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(self)? + "\n")?;
        Ok(())
    }
}

pub fn run_id(config_hash: &str) -> String {
    format!("run-{}", &config_hash[..12.min(config_hash.len())])
}

/// Little-endian `f64` values.
pub fn write_values(path: &Path, values: &[f64]) -> Result<()> {
    let bytes: Vec<u8> = values.iter().flat_map(|v| v.to_le_bytes()).collect();
    fs::write(path, bytes)?;
    Ok(())
}

pub fn read_values(path: &Path) -> Result<Vec<f64>> {
    let bytes = fs::read(path)?;
    if bytes.len() % 8 != 0 {
        return Err(Error::ConfigInvalid(format!(
            "{} is not a whole number of f64 values",
            path.display()
        )));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

pub fn write_snapshot(stem: &Path, snapshot: &Snapshot, kernel_hash: &str) -> Result<()> {
    let grid = snapshot.u.grid();
    write_values(&stem.with_extension("bin"), snapshot.u.values())?;
    let meta = SnapshotMeta {
        n: grid.len(),
        half_length: grid.half_length(),
        t: snapshot.t,
        mass: snapshot.u.mass(),
        kernel_hash: kernel_hash.to_string(),
        index: snapshot.index,
    };
    fs::write(stem.with_extension("json"), serde_json::to_string_pretty(&meta)? + "\n")?;
    Ok(())
}

pub fn read_snapshot(bin: &Path) -> Result<(Snapshot, SnapshotMeta)> {
    let meta: SnapshotMeta = serde_json::from_str(&fs::read_to_string(bin.with_extension("json"))?)?;
    let grid = Grid::new(meta.n, meta.half_length)?;
    let u = GridFunction::new(grid, read_values(bin)?)?;
    Ok((
        Snapshot {
            index: meta.index,
            t: meta.t,
            u,
        },
        meta,
    ))
}

/// Writes the whole run; the manifest goes last, so its presence means every
/// file it lists exists.
pub fn write_run(run: &RunRecord, dir: &Path) -> Result<RunManifest> {
    let snap_dir = dir.join("snapshots");
    fs::create_dir_all(&snap_dir)?;
    fs::write(dir.join("config.json"), run.config.canonical_json() + "\n")?;

    let series = compute_series(run)?;
    series.write_csv(BufWriter::new(fs::File::create(dir.join("series.csv"))?))?;

    let kernel_hash = run.config.kernels.hash();
    let mut snapshots = Vec::with_capacity(run.snapshots.len());
    for s in &run.snapshots {
        let rel = PathBuf::from("snapshots").join(format!("t_{:04}", s.index));
        write_snapshot(&dir.join(&rel), s, &kernel_hash)?;
        snapshots.push(rel.with_extension("bin").to_string_lossy().into_owned());
    }

    let config_hash = run.config.hash();
    let manifest = RunManifest {
        run_id: run_id(&config_hash),
        config_hash,
        seed: run.config.seed,
        tool_version: TOOL_VERSION.to_string(),
        config: "config.json".into(),
        series: "series.csv".into(),
        snapshots,
        reports: Vec::new(),
        constants: run.constants,
        steps: run.steps,
    };
    manifest.write(dir)?;
    Ok(manifest)
}

/// Rebuilds a [`RunRecord`] from a directory written by [`write_run`].
pub fn load_run(dir: &Path) -> Result<RunRecord> {
    let manifest = RunManifest::read(dir)?;
    let config: SimulationConfig = serde_json::from_str(&fs::read_to_string(dir.join(&manifest.config))?)?;
    if config.hash() != manifest.config_hash {
        return Err(Error::ConfigInvalid(format!(
            "{} does not match the manifest hash",
            manifest.config
        )));
    }
    let setup = Setup::new(&config)?;
    let kernel_hash = config.kernels.hash();
    let mut snapshots = Vec::with_capacity(manifest.snapshots.len());
    for rel in &manifest.snapshots {
        let (s, meta) = read_snapshot(&dir.join(rel))?;
        setup.grid.check_same(s.u.grid())?;
        if meta.kernel_hash != kernel_hash {
            return Err(Error::ConfigInvalid(format!("{rel} was produced with other kernels")));
        }
        snapshots.push(s);
    }
    if snapshots.is_empty() {
        return Err(Error::ConfigInvalid(format!("{} lists no snapshots", dir.display())));
    }
    Ok(RunRecord {
        config,
        grid: setup.grid,
        k: setup.k,
        g: setup.g,
        constants: manifest.constants,
        snapshots,
        steps: manifest.steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evolution::{simulate, InitialData};

    #[test]
    fn run_round_trips_through_disk() {
        let mut cfg = SimulationConfig::reference();
        cfg.grid.n = 256;
        cfg.t_final = 5.0;
        cfg.initial = InitialData::gaussian_with_peak(0.2, 0.2);
        let run = simulate(&cfg).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let manifest = write_run(&run, dir.path()).unwrap();
        for rel in manifest.snapshots.iter().chain([&manifest.series, &manifest.config]) {
            assert!(dir.path().join(rel).exists(), "{rel}");
        }
        let back = load_run(dir.path()).unwrap();
        assert_eq!(back.snapshots, run.snapshots);
        assert_eq!(back.constants, run.constants);
        assert_eq!(back.config, run.config);
    }
}

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::evolution::RunRecord;

use super::{energy_i1, energy_i2_signed, tail_mass, EnergyPath};

/// Channels written by [`compute_series`], in column order after `t`.
pub const SERIES_CHANNELS: [&str; 8] = ["mass", "L1", "L2", "L4", "Linf", "I1", "I2", "tail"];

/// Named channels sampled at strictly increasing times.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries {
    times: Vec<f64>,
    names: Vec<String>,
    columns: Vec<Vec<f64>>,
}

impl TimeSeries {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Self {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        Self {
            times: Vec::new(),
            columns: vec![Vec::new(); names.len()],
            names,
        }
    }

    pub fn push(&mut self, t: f64, row: &[f64]) -> Result<()> {
        if row.len() != self.names.len() {
            return Err(Error::ConfigInvalid(format!(
                "row of {} values for {} channels",
                row.len(),
                self.names.len()
            )));
        }
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(Error::ConfigInvalid(format!(
                    "time {t} does not follow {last}"
                )));
            }
        }
        self.times.push(t);
        for (c, &v) in self.columns.iter_mut().zip(row) {
            c.push(v);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn channel(&self, name: &str) -> Option<&[f64]> {
        self.names
            .iter()
            .position(|n| n == name)
            .map(|i| self.columns[i].as_slice())
    }

    /// Writes `t` and every channel; floats use the shortest round-trip
    /// exponent form, so output is a deterministic function of the values.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let header: Vec<&str> = std::iter::once("t").chain(self.names.iter().map(String::as_str)).collect();
        w.write_record(&header)?;
        for (i, t) in self.times.iter().enumerate() {
            let row: Vec<String> = std::iter::once(*t)
                .chain(self.columns.iter().map(|c| c[i]))
                .map(|v| format!("{v:e}"))
                .collect();
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut r = csv::Reader::from_reader(input);
        let header = r.headers()?.clone();
        if header.get(0) != Some("t") {
            return Err(Error::ConfigInvalid("series CSV must start with a t column".into()));
        }
        let mut series = TimeSeries::new(header.iter().skip(1));
        for record in r.records() {
            let record = record?;
            let values = record
                .iter()
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::ConfigInvalid(format!("bad number {s:?}: {e}")))
                })
                .collect::<Result<Vec<f64>>>()?;
            series.push(values[0], &values[1..])?;
        }
        Ok(series)
    }
}

/// `min(10 √(A T), 0.45 L)` with the lattice diffusivity.
pub fn default_tail_radius(run: &RunRecord) -> f64 {
    let natural = 10.0 * (run.constants.a_h * run.t_final()).sqrt();
    natural.min(0.45 * run.grid.half_length())
}

/// Mass, norms, `I₁`, `I₂` (p = 2) and tail mass at every snapshot.
pub fn compute_series(run: &RunRecord) -> Result<TimeSeries> {
    let r = run
        .config
        .diagnostics
        .tail_radius
        .unwrap_or_else(|| default_tail_radius(run));
    let mut series = TimeSeries::new(SERIES_CHANNELS);
    for s in &run.snapshots {
        let u = &s.u;
        series.push(
            s.t,
            &[
                u.mass(),
                u.lp_norm(1.0),
                u.lp_norm(2.0),
                u.lp_norm(4.0),
                u.lp_norm(f64::INFINITY),
                energy_i1(u, &run.k)?,
                energy_i2_signed(u, &run.g, 2, EnergyPath::Auto)?,
                tail_mass(u, r),
            ],
        )?;
    }
    Ok(series)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_exact() {
        let mut s = TimeSeries::new(["a", "b"]);
        s.push(0.0, &[0.1, -3.0e-300]).unwrap();
        s.push(0.625, &[1.0 / 3.0, f64::MAX]).unwrap();
        let mut buf = Vec::new();
        s.write_csv(&mut buf).unwrap();
        let back = TimeSeries::read_csv(buf.as_slice()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn times_must_increase() {
        let mut s = TimeSeries::new(["a"]);
        s.push(1.0, &[0.0]).unwrap();
        assert!(s.push(1.0, &[0.0]).is_err());
    }
}

//! The sweep CSV: fixed header, 17 significant digits, empty inapplicable cells.

use anyhow::{bail, Context};
use std::io::{Read, Write};

pub const SWEEP_HEADER: [&str; 11] = [
    "r0_m",
    "r_eff_m",
    "n_atoms",
    "d_m",
    "delta_e_J",
    "tau_s",
    "tau_obs_ratio",
    "bound_lower_J",
    "bound_upper_J",
    "wall_ms",
    "term_count",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub r0: f64,
    pub r_eff: f64,
    pub n_atoms: u64,
    pub d: f64,
    pub delta_e: Option<f64>,
    pub tau: Option<f64>,
    pub tau_obs_ratio: Option<f64>,
    pub bound_lower: Option<f64>,
    pub bound_upper: Option<f64>,
    pub wall_ms: Option<f64>,
    pub term_count: Option<u64>,
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl SweepRow {
    fn record(&self) -> [String; 11] {
        [
            fmt_f64(self.r0),
            fmt_f64(self.r_eff),
            self.n_atoms.to_string(),
            fmt_f64(self.d),
            cell(self.delta_e),
            cell(self.tau),
            cell(self.tau_obs_ratio),
            cell(self.bound_lower),
            cell(self.bound_upper),
            cell(self.wall_ms),
            self.term_count.map(|n| n.to_string()).unwrap_or_default(),
        ]
    }

    fn from_record(rec: &csv::StringRecord) -> anyhow::Result<Self> {
        let f = |i: usize| -> anyhow::Result<f64> {
            rec[i]
                .parse()
                .with_context(|| format!("column `{}`: `{}`", SWEEP_HEADER[i], &rec[i]))
        };
        let opt = |i: usize| -> anyhow::Result<Option<f64>> {
            if rec[i].is_empty() {
                Ok(None)
            } else {
                f(i).map(Some)
            }
        };
        Ok(SweepRow {
            r0: f(0)?,
            r_eff: f(1)?,
            n_atoms: rec[2].parse().context("column `n_atoms`")?,
            d: f(3)?,
            delta_e: opt(4)?,
            tau: opt(5)?,
            tau_obs_ratio: opt(6)?,
            bound_lower: opt(7)?,
            bound_upper: opt(8)?,
            wall_ms: opt(9)?,
            term_count: if rec[10].is_empty() {
                None
            } else {
                Some(rec[10].parse().context("column `term_count`")?)
            },
        })
    }
}

pub fn write_sweep<W: Write>(out: W, rows: &[SweepRow]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record(r.record())?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep<R: Read>(input: R) -> anyhow::Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != SWEEP_HEADER {
        bail!(
            "unexpected header `{}`, want `{}`",
            header.join(","),
            SWEEP_HEADER.join(",")
        );
    }
    rdr.records()
        .enumerate()
        .map(|(i, rec)| SweepRow::from_record(&rec?).with_context(|| format!("row {}", i + 1)))
        .collect()
}

/// Generic table with a caller-chosen header, for the non-sweep outputs.
pub fn write_table<W: Write>(out: W, header: &[&str], rows: &[Vec<String>]) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(r0: f64) -> SweepRow {
        SweepRow {
            r0,
            r_eff: r0,
            n_atoms: 400,
            d: 8e-9,
            delta_e: Some(1.234_567_890_123_456_7e-40),
            tau: Some(0.1 + 0.2),
            tau_obs_ratio: Some(30.000_000_000_000_004),
            bound_lower: None,
            bound_upper: None,
            wall_ms: None,
            term_count: Some(1521),
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let rows = vec![row(1e-10), row(std::f64::consts::PI * 1e-9)];
        let mut buf = Vec::new();
        write_sweep(&mut buf, &rows).unwrap();
        let back = read_sweep(buf.as_slice()).unwrap();
        assert_eq!(back, rows);
        let mut again = Vec::new();
        write_sweep(&mut again, &back).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn header_is_fixed() {
        let mut buf = Vec::new();
        write_sweep(&mut buf, &[]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "r0_m,r_eff_m,n_atoms,d_m,delta_e_J,tau_s,tau_obs_ratio,bound_lower_J,bound_upper_J,wall_ms,term_count\n"
        );
        assert!(read_sweep("a,b\n1,2\n".as_bytes()).is_err());
    }
}

//! Trial records and their CSV form.

use std::io::{Read, Write};

use crate::error::{Error, Result};

pub const HEADER: [&str; 12] = [
    "algorithm",
    "instance",
    "seed",
    "eps",
    "delta",
    "tau",
    "stopped",
    "policy",
    "gain_gap",
    "success",
    "d_hat",
    "wall_time_ms",
];

/// One trial's outcome. `policy` is empty and `gain_gap` NaN when no policy
/// was returned; `d_hat` is NaN for algorithms without a diameter phase.
#[derive(Clone, Debug, PartialEq)]
pub struct TrialRecord {
    pub algorithm: String,
    pub instance: String,
    pub seed: u64,
    pub eps: f64,
    pub delta: f64,
    pub tau: u64,
    pub stopped: bool,
    pub policy: String,
    pub gain_gap: f64,
    pub success: bool,
    pub d_hat: f64,
    pub wall_time_ms: f64,
}

/// Formats with 12 significant digits, trimming trailing zeros.
pub fn format_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        let s = format!("{:.11e}", x);
        let (mant, e) = s.split_once('e').unwrap_or((&s, "0"));
        let mant = if mant.contains('.') { mant.trim_end_matches('0').trim_end_matches('.') } else { mant };
        format!("{mant}e{e}")
    }
}

fn parse_f64(s: &str) -> Result<f64> {
    match s {
        "nan" => Ok(f64::NAN),
        "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Config(format!("bad number '{s}'"))),
    }
}

fn parse_field<T: std::str::FromStr>(s: &str, name: &str) -> Result<T> {
    s.parse().map_err(|_| Error::Config(format!("bad {name} '{s}'")))
}

impl TrialRecord {
    pub fn to_row(&self) -> Vec<String> {
        vec![
            self.algorithm.clone(),
            self.instance.clone(),
            self.seed.to_string(),
            format_sig(self.eps),
            format_sig(self.delta),
            self.tau.to_string(),
            self.stopped.to_string(),
            self.policy.clone(),
            format_sig(self.gain_gap),
            self.success.to_string(),
            format_sig(self.d_hat),
            format_sig(self.wall_time_ms),
        ]
    }

    pub fn from_row(row: &csv::StringRecord) -> Result<Self> {
        if row.len() != HEADER.len() {
            return Err(Error::Config(format!("expected {} columns, got {}", HEADER.len(), row.len())));
        }
        Ok(TrialRecord {
            algorithm: row[0].to_string(),
            instance: row[1].to_string(),
            seed: parse_field(&row[2], "seed")?,
            eps: parse_f64(&row[3])?,
            delta: parse_f64(&row[4])?,
            tau: parse_field(&row[5], "tau")?,
            stopped: parse_field(&row[6], "stopped")?,
            policy: row[7].to_string(),
            gain_gap: parse_f64(&row[8])?,
            success: parse_field(&row[9], "success")?,
            d_hat: parse_f64(&row[10])?,
            wall_time_ms: parse_f64(&row[11])?,
        })
    }
}

pub fn write_records<W: Write>(sink: W, records: &[TrialRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(sink);
    let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
    w.write_record(HEADER).map_err(io)?;
    for r in records {
        w.write_record(r.to_row()).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(source: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::Reader::from_reader(source);
    let header = rdr.headers().map_err(|e| Error::Config(e.to_string()))?;
    if header.iter().ne(HEADER.iter().copied()) {
        return Err(Error::Config("unexpected results header".into()));
    }
    rdr.records()
        .map(|row| TrialRecord::from_row(&row.map_err(|e| Error::Config(e.to_string()))?))
        .collect()
}

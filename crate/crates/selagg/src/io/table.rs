use std::path::Path;

use selagg_core::signal::SampledSignal;
use selagg_core::CoeffDisk;

use super::write_file;
use crate::error::{Error, Result};

/// Shortest decimal form that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

/// Comma-separated table with `\n` line endings.
pub fn csv_string<R, I>(header: &[&str], rows: R) -> String
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)
        .expect("writing to memory cannot fail");
    for row in rows {
        w.write_record(row).expect("writing to memory cannot fail");
    }
    String::from_utf8(w.into_inner().expect("writing to memory cannot fail"))
        .expect("csv output is utf-8")
}

pub fn write_csv<R, I>(path: &Path, header: &[&str], rows: R) -> Result<()>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = String>,
{
    write_file(path, csv_string(header, rows).as_bytes())
}

/// `t,value` with `t = t0 + m / sample_rate`.
pub fn write_signal_csv(path: &Path, s: &SampledSignal) -> Result<()> {
    write_series(path, "value", s)
}

fn write_series(path: &Path, name: &str, s: &SampledSignal) -> Result<()> {
    let rows = s
        .samples()
        .iter()
        .enumerate()
        .map(|(m, v)| [fmt_f64(s.time(m)), fmt_f64(*v)]);
    write_csv(path, &["t", name], rows)
}

/// Two-column table such as `t,p` or `t,bpm`.
pub fn write_pairs_csv(path: &Path, header: [&str; 2], pairs: &[(f64, f64)]) -> Result<()> {
    write_csv(
        path,
        &header,
        pairs.iter().map(|(a, b)| [fmt_f64(*a), fmt_f64(*b)]),
    )
}

/// `channel_id,a,b` for every point of the disk.
pub fn write_coefficients_csv(path: &Path, disk: &CoeffDisk) -> Result<()> {
    let rows = disk
        .ids()
        .iter()
        .zip(disk.points())
        .map(|(id, p)| [id.to_string(), fmt_f64(p.a), fmt_f64(p.b)]);
    write_csv(path, &["channel_id", "a", "b"], rows)
}

/// Reads a `t,<value>` table; the sample rate comes from the span of `t`.
pub fn read_signal_csv(path: &Path) -> Result<SampledSignal> {
    let corrupt = |reason: String| Error::CorruptHeader {
        path: path.into(),
        reason,
    };
    let mut r = csv::Reader::from_path(path).map_err(|source| Error::Csv {
        path: path.into(),
        source,
    })?;
    let header = r
        .headers()
        .map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?
        .clone();
    if header.len() != 2 || &header[0] != "t" {
        return Err(corrupt(format!(
            "expected columns t,<value>, found {:?}",
            header.iter().collect::<Vec<_>>()
        )));
    }
    let mut t = Vec::new();
    let mut v = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|source| Error::Csv {
            path: path.into(),
            source,
        })?;
        let parse = |i: usize| {
            rec[i]
                .trim()
                .parse::<f64>()
                .map_err(|e| corrupt(format!("row {}: {e}", t.len() + 1)))
        };
        let (a, b) = (parse(0)?, parse(1)?);
        t.push(a);
        v.push(b);
    }
    if t.len() < 2 {
        return Err(corrupt("need at least two rows".into()));
    }
    let span = t[t.len() - 1] - t[0];
    if !(span > 0.0) {
        return Err(corrupt("time column must increase".into()));
    }
    let fs = (t.len() - 1) as f64 / span;
    Ok(SampledSignal::new(v, fs, t[0])?)
}

//! Sweep and temperature-series files.
//!
//! CSV sweeps carry a header of either `freq_hz,re,im` or
//! `freq_hz,mag_db,phase_deg`, optionally followed by `power_dbm`. Rows with
//! different drive powers are split into separate sweeps. Touchstone files
//! are version 1 two-port (`# <unit> S RI|MA|DB R 50`); only S21 is kept.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{ComplexSweep, TemperatureSeries};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FileFormat {
    #[default]
    Csv,
    Touchstone,
}

impl std::str::FromStr for FileFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(FileFormat::Csv),
            "touchstone" | "s2p" => Ok(FileFormat::Touchstone),
            other => Err(Error::Config(format!("unknown input format `{other}`"))),
        }
    }
}

/// Complex-number encoding used by CSV and Touchstone writers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Real and imaginary parts.
    RealImag,
    /// Linear magnitude and angle in degrees (Touchstone only).
    MagAngle,
    /// Magnitude in dB and angle in degrees.
    DbAngle,
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.display().to_string(),
        line,
        message: message.into(),
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn from_db_deg(mag_db: f64, phase_deg: f64) -> Complex64 {
    Complex64::from_polar(10f64.powf(mag_db / 20.0), phase_deg.to_radians())
}

pub fn load_sweep(path: &Path, format: FileFormat) -> Result<Vec<ComplexSweep>> {
    let text = read(path)?;
    match format {
        FileFormat::Csv => parse_csv_sweep(path, &text),
        FileFormat::Touchstone => parse_touchstone(path, &text).map(|s| vec![s]),
    }
}

#[derive(Clone, Copy)]
enum CsvColumns {
    RealImag,
    DbDeg,
}

fn parse_csv_sweep(path: &Path, text: &str) -> Result<Vec<ComplexSweep>> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    let names: Vec<&str> = headers.iter().collect();
    if names.iter().all(|n| n.is_empty()) {
        return Err(parse_error(path, 1, "empty file"));
    }
    let (columns, has_power) = match names.as_slice() {
        ["freq_hz", "re", "im"] => (CsvColumns::RealImag, false),
        ["freq_hz", "re", "im", "power_dbm"] => (CsvColumns::RealImag, true),
        ["freq_hz", "mag_db", "phase_deg"] => (CsvColumns::DbDeg, false),
        ["freq_hz", "mag_db", "phase_deg", "power_dbm"] => (CsvColumns::DbDeg, true),
        _ if names.contains(&"re") || names.contains(&"mag_db") => {
            return Err(parse_error(
                path,
                1,
                format!("mixed or unsupported columns `{}`", names.join(",")),
            ))
        }
        _ => {
            return Err(parse_error(
                path,
                1,
                format!(
                    "expected header freq_hz,re,im or freq_hz,mag_db,phase_deg, found `{}`",
                    names.join(",")
                ),
            ))
        }
    };

    // (power, frequencies, values) per contiguous block of equal power
    let mut blocks: Vec<(Option<f64>, Vec<f64>, Vec<Complex64>)> = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let expected = if has_power { 4 } else { 3 };
        if record.len() != expected {
            return Err(parse_error(
                path,
                line,
                format!("expected {expected} fields, found {}", record.len()),
            ));
        }
        let mut values = [0.0; 4];
        for (i, field) in record.iter().enumerate() {
            values[i] = field
                .parse::<f64>()
                .map_err(|_| parse_error(path, line, format!("`{field}` is not a number")))?;
        }
        let z = match columns {
            CsvColumns::RealImag => Complex64::new(values[1], values[2]),
            CsvColumns::DbDeg => from_db_deg(values[1], values[2]),
        };
        let power = has_power.then_some(values[3]);
        match blocks.last_mut() {
            Some((p, f, s)) if *p == power => {
                f.push(values[0]);
                s.push(z);
            }
            _ => blocks.push((power, vec![values[0]], vec![z])),
        }
    }
    if blocks.is_empty() {
        return Err(parse_error(path, 2, "no data rows"));
    }
    blocks
        .into_iter()
        .map(|(power, f, s)| {
            let sweep = ComplexSweep::new(f, s).map_err(|e| parse_error(path, 0, e.to_string()))?;
            match power {
                Some(p) => sweep.with_drive_power(p),
                None => Ok(sweep),
            }
        })
        .collect()
}

fn parse_touchstone(path: &Path, text: &str) -> Result<ComplexSweep> {
    let mut option: Option<(f64, Encoding, usize)> = None;
    let mut pending: Vec<(f64, usize)> = Vec::new();
    let mut freqs = Vec::new();
    let mut s21 = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('!').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('#') {
            let parsed = parse_option_line(path, line_no, rest)?;
            if let Some(prev) = option {
                if (prev.0, prev.1) != (parsed.0, parsed.1) {
                    return Err(parse_error(path, line_no, "conflicting option lines (mixed units)"));
                }
            }
            option = Some(parsed);
            continue;
        }
        let Some((scale, encoding, _)) = option else {
            return Err(parse_error(path, line_no, "data before the `#` option line"));
        };
        for token in line.split_whitespace() {
            let v: f64 = token
                .parse()
                .map_err(|_| parse_error(path, line_no, format!("`{token}` is not a number")))?;
            pending.push((v, line_no));
        }
        while pending.len() >= 9 {
            let row: Vec<f64> = pending.drain(..9).map(|(v, _)| v).collect();
            freqs.push(row[0] * scale);
            let (a, b) = (row[3], row[4]);
            s21.push(match encoding {
                Encoding::RealImag => Complex64::new(a, b),
                Encoding::MagAngle => Complex64::from_polar(a, b.to_radians()),
                Encoding::DbAngle => from_db_deg(a, b),
            });
        }
    }
    if let Some(&(_, line)) = pending.first() {
        return Err(parse_error(path, line, "incomplete two-port data row"));
    }
    if option.is_none() {
        return Err(parse_error(path, 1, "missing `#` option line"));
    }
    if freqs.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    ComplexSweep::new(freqs, s21).map_err(|e| parse_error(path, 0, e.to_string()))
}

fn parse_option_line(path: &Path, line: usize, rest: &str) -> Result<(f64, Encoding, usize)> {
    let tokens: Vec<String> = rest.split_whitespace().map(|t| t.to_ascii_uppercase()).collect();
    let mut scale = 1e9;
    let mut encoding = Encoding::MagAngle;
    let mut i = 0;
    while i < tokens.len() {
        match tokens[i].as_str() {
            "HZ" => scale = 1.0,
            "KHZ" => scale = 1e3,
            "MHZ" => scale = 1e6,
            "GHZ" => scale = 1e9,
            "S" => {}
            "RI" => encoding = Encoding::RealImag,
            "MA" => encoding = Encoding::MagAngle,
            "DB" => encoding = Encoding::DbAngle,
            "R" => {
                let r = tokens.get(i + 1).and_then(|t| t.parse::<f64>().ok());
                if r != Some(50.0) {
                    return Err(parse_error(path, line, "only R 50 reference impedance is supported"));
                }
                i += 1;
            }
            p @ ("Y" | "Z" | "H" | "G") => {
                return Err(parse_error(path, line, format!("parameter type {p} is not supported")));
            }
            other => return Err(parse_error(path, line, format!("unknown option `{other}`"))),
        }
        i += 1;
    }
    Ok((scale, encoding, line))
}

/// Write one sweep as CSV; the drive power column is added when the sweep
/// carries one. Values use shortest round-trip formatting.
pub fn write_sweep_csv(path: &Path, sweep: &ComplexSweep, encoding: Encoding) -> Result<()> {
    let power = sweep.drive_power_dbm();
    let mut out = String::new();
    out.push_str(match encoding {
        Encoding::RealImag => "freq_hz,re,im",
        Encoding::DbAngle => "freq_hz,mag_db,phase_deg",
        Encoding::MagAngle => return Err(Error::invalid("CSV sweeps are RI or dB/degree")),
    });
    out.push_str(if power.is_some() { ",power_dbm\n" } else { "\n" });
    for (&f, z) in sweep.frequencies().iter().zip(sweep.s21()) {
        let (a, b) = match encoding {
            Encoding::RealImag => (z.re, z.im),
            _ => (20.0 * z.norm().log10(), z.arg().to_degrees()),
        };
        let _ = write!(out, "{f},{a},{b}");
        if let Some(p) = power {
            let _ = write!(out, ",{p}");
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Write a sweep as a two-port Touchstone file with S12 = S21 and zero
/// reflections.
pub fn write_touchstone(path: &Path, sweep: &ComplexSweep, encoding: Encoding) -> Result<()> {
    let tag = match encoding {
        Encoding::RealImag => "RI",
        Encoding::MagAngle => "MA",
        Encoding::DbAngle => "DB",
    };
    let enc = |z: Complex64| -> (f64, f64) {
        match encoding {
            Encoding::RealImag => (z.re, z.im),
            Encoding::MagAngle => (z.norm(), z.arg().to_degrees()),
            Encoding::DbAngle => (20.0 * z.norm().log10(), z.arg().to_degrees()),
        }
    };
    // zero reflection has no finite dB value; use a floor
    let zero = match encoding {
        Encoding::DbAngle => (-400.0, 0.0),
        _ => (0.0, 0.0),
    };
    let mut out = format!("! synthetic two-port sweep\n# HZ S {tag} R 50\n");
    for (&f, &z) in sweep.frequencies().iter().zip(sweep.s21()) {
        let (a, b) = enc(z);
        let _ = writeln!(out, "{f} {} {} {a} {b} {a} {b} {} {}", zero.0, zero.1, zero.0, zero.1);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// CSV with header `temperature_k,freq_hz`.
pub fn load_temperature_series(path: &Path) -> Result<TemperatureSeries> {
    let text = read(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| parse_error(path, 1, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["temperature_k", "freq_hz"] {
        return Err(parse_error(path, 1, "expected header temperature_k,freq_hz"));
    }
    let mut points = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_error(path, line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let parse = |i: usize| -> Result<f64> {
            record[i]
                .parse::<f64>()
                .map_err(|_| parse_error(path, line, format!("`{}` is not a number", &record[i])))
        };
        points.push((parse(0)?, parse(1)?));
    }
    if points.is_empty() {
        return Err(parse_error(path, 1, "no data rows"));
    }
    TemperatureSeries::new(points).map_err(|e| parse_error(path, 0, e.to_string()))
}

pub fn write_temperature_series(path: &Path, series: &TemperatureSeries) -> Result<()> {
    let mut out = String::from("temperature_k,freq_hz\n");
    for &(t, f) in series.points() {
        let _ = writeln!(out, "{t},{f}");
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::notch::NotchModel;
    use crate::synth::{linewidth_grid, synth_notch, NoiseSpec};

    fn synthetic() -> ComplexSweep {
        let mut m = NotchModel::bare(5e9, 2000.0, 4000.0, 0.2);
        m.cable_delay = 30e-9;
        synth_notch(
            &m,
            &linewidth_grid(5e9, 2000.0, 6.0, 64),
            NoiseSpec::new(1e-3, 4).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn ri_csv_round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.csv");
        let text = "freq_hz,re,im\n1e9,0.1,-0.2\n2e9,0.30000000000000004,1e-300\n3e9,-0.5,0.25\n";
        fs::write(&path, text).unwrap();
        assert!(load_sweep(&path, FileFormat::Csv).is_err()); // fewer than 8 points

        let s = synthetic().with_drive_power(-70.0).unwrap();
        write_sweep_csv(&path, &s, Encoding::RealImag).unwrap();
        let back = load_sweep(&path, FileFormat::Csv).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0], s);
    }

    #[test]
    fn power_column_splits_sweeps() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        let mut text = String::from("freq_hz,re,im,power_dbm\n");
        for p in [-80.0, -60.0] {
            for i in 0..10 {
                text.push_str(&format!("{},{},0,{p}\n", 1e9 + i as f64, 1.0 - 0.01 * i as f64));
            }
        }
        fs::write(&path, text).unwrap();
        let sweeps = load_sweep(&path, FileFormat::Csv).unwrap();
        assert_eq!(sweeps.len(), 2);
        assert_eq!(sweeps[1].drive_power_dbm(), Some(-60.0));
    }

    #[test]
    fn touchstone_encodings_agree() {
        let dir = tempfile::tempdir().unwrap();
        let s = synthetic();
        let ri = dir.path().join("ri.s2p");
        let ma = dir.path().join("ma.s2p");
        let db = dir.path().join("db.s2p");
        write_touchstone(&ri, &s, Encoding::RealImag).unwrap();
        write_touchstone(&ma, &s, Encoding::MagAngle).unwrap();
        write_touchstone(&db, &s, Encoding::DbAngle).unwrap();
        let a = load_sweep(&ri, FileFormat::Touchstone).unwrap().remove(0);
        assert_eq!(a, s);
        for p in [&ma, &db] {
            let b = load_sweep(p, FileFormat::Touchstone).unwrap().remove(0);
            for (x, y) in a.s21().iter().zip(b.s21()) {
                assert!((x - y).norm() <= 1e-12 * x.norm());
            }
        }
    }

    #[test]
    fn malformed_inputs_report_lines() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        fs::write(&path, "").unwrap();
        assert!(matches!(load_sweep(&path, FileFormat::Csv), Err(Error::Parse { .. })));

        fs::write(&path, "freq_hz,re,phase_deg\n1,2,3\n").unwrap();
        let err = load_sweep(&path, FileFormat::Csv).unwrap_err();
        assert!(err.to_string().contains("mixed"), "{err}");

        let mut text = String::from("freq_hz,re,im\n");
        for i in 0..5 {
            text.push_str(&format!("{},1,0\n", 1e9 + i as f64));
        }
        text.push_str("1000000005,abc,0\n");
        fs::write(&path, text).unwrap();
        match load_sweep(&path, FileFormat::Csv) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 7),
            other => panic!("{other:?}"),
        }

        let ts = dir.path().join("bad.s2p");
        fs::write(&ts, "# HZ S RI R 50\n1 0 0 1 0 1 0 0 0\n# GHZ S MA R 50\n").unwrap();
        assert!(load_sweep(&ts, FileFormat::Touchstone).is_err());
        fs::write(&ts, "# HZ S RI R 50\n1 0 0 1 0\n").unwrap();
        match load_sweep(&ts, FileFormat::Touchstone) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn temperature_series_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let s = TemperatureSeries::new(vec![(0.05, 5e9), (0.1, 5.0000001e9), (0.15, 4.9999e9)]).unwrap();
        write_temperature_series(&path, &s).unwrap();
        assert_eq!(load_temperature_series(&path).unwrap(), s);
    }
}

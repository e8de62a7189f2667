//! Scan datasets and their CSV form.
//!
//! A dataset file starts with `#`-prefixed `key = value` metadata lines,
//! followed by the column row `x,x_unit,fraction,stderr` and one row per
//! point. The x column is written in the scan variable's display unit (µs for
//! durations, kHz for two-photon detuning), and every row repeats that unit.
//! Numbers use Rust's shortest round-trip formatting, so they are locale-free
//! and parse back exactly. Lines end in `\n`.

use std::f64::consts::TAU;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use thiserror::Error;

/// First line of every dataset file.
pub const DATASET_MAGIC: &str = "# fortsim dataset";
pub const COLUMNS: &str = "x,x_unit,fraction,stderr";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("missing `{DATASET_MAGIC}` metadata header")]
    MissingHeader,
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("missing column row `{COLUMNS}`")]
    MissingColumns,
    #[error("unknown scan variable `{0}`")]
    UnknownVariable(String),
    #[error("metadata key `{0}` is not a valid key")]
    BadKey(String),
}

/// The swept quantity of a scan. Values are stored in SI (s, rad/s).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ScanVariable {
    PulseDuration,
    TwoPhotonDetuning,
    RamseyGap,
}

impl ScanVariable {
    pub fn name(&self) -> &'static str {
        match self {
            ScanVariable::PulseDuration => "pulse_duration",
            ScanVariable::TwoPhotonDetuning => "two_photon_detuning",
            ScanVariable::RamseyGap => "ramsey_gap",
        }
    }

    pub fn unit(&self) -> &'static str {
        match self {
            ScanVariable::PulseDuration | ScanVariable::RamseyGap => "us",
            ScanVariable::TwoPhotonDetuning => "kHz",
        }
    }

    /// SI value to the display unit.
    pub fn to_display(&self, si: f64) -> f64 {
        match self {
            ScanVariable::PulseDuration | ScanVariable::RamseyGap => si * 1e6,
            ScanVariable::TwoPhotonDetuning => si / TAU / 1e3,
        }
    }

    /// Display-unit value to SI.
    pub fn from_display(&self, shown: f64) -> f64 {
        match self {
            ScanVariable::PulseDuration | ScanVariable::RamseyGap => shown * 1e-6,
            ScanVariable::TwoPhotonDetuning => shown * 1e3 * TAU,
        }
    }
}

impl fmt::Display for ScanVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScanVariable {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pulse_duration" => Ok(ScanVariable::PulseDuration),
            "two_photon_detuning" => Ok(ScanVariable::TwoPhotonDetuning),
            "ramsey_gap" => Ok(ScanVariable::RamseyGap),
            other => Err(DataError::UnknownVariable(other.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    /// Scan variable in SI.
    pub x: f64,
    pub fraction: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanDataset {
    pub variable: ScanVariable,
    /// Ordered `key = value` pairs written to the file header.
    pub metadata: Vec<(String, String)>,
    pub points: Vec<ScanPoint>,
}

fn valid_key(key: &str) -> bool {
    !key.is_empty()
        && key.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '.' | '-'))
}

impl ScanDataset {
    pub fn new(variable: ScanVariable) -> Self {
        Self { variable, metadata: Vec::new(), points: Vec::new() }
    }

    /// Dataset from parallel slices; `stderr` defaults to zero.
    pub fn from_xy(variable: ScanVariable, x: &[f64], y: &[f64], stderr: Option<&[f64]>) -> Self {
        let points = x
            .iter()
            .zip(y)
            .enumerate()
            .map(|(i, (&x, &fraction))| ScanPoint {
                x,
                fraction,
                stderr: stderr.map_or(0.0, |s| s[i]),
            })
            .collect();
        Self { variable, metadata: Vec::new(), points }
    }

    pub fn push_meta(&mut self, key: impl Into<String>, value: impl ToString) {
        self.metadata.push((key.into(), value.to_string()));
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn xs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.x).collect()
    }

    pub fn fractions(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.fraction).collect()
    }

    pub fn stderrs(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.stderr).collect()
    }

    pub fn to_csv(&self) -> Result<String, DataError> {
        let mut out = String::new();
        out.push_str(DATASET_MAGIC);
        out.push('\n');
        let unit = self.variable.unit();
        let _ = writeln!(out, "# variable = {}", self.variable);
        let _ = writeln!(out, "# x_unit = {unit}");
        for (k, v) in &self.metadata {
            if !valid_key(k) || v.contains('\n') {
                return Err(DataError::BadKey(k.clone()));
            }
            let _ = writeln!(out, "# {k} = {v}");
        }
        out.push_str(COLUMNS);
        out.push('\n');
        for p in &self.points {
            let _ = writeln!(out, "{},{unit},{},{}", self.variable.to_display(p.x), p.fraction, p.stderr);
        }
        Ok(out)
    }

    pub fn from_csv(text: &str) -> Result<Self, DataError> {
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, first)) if first.trim_end() == DATASET_MAGIC => {}
            _ => return Err(DataError::MissingHeader),
        }
        let malformed = |line: usize, message: String| DataError::Malformed { line: line + 1, message };
        let mut variable = None;
        let mut metadata = Vec::new();
        let mut saw_columns = false;
        let mut points = Vec::new();
        for (i, line) in lines {
            if let Some(rest) = line.strip_prefix('#') {
                if saw_columns {
                    return Err(malformed(i, "metadata after the column row".into()));
                }
                let (k, v) = rest
                    .split_once('=')
                    .ok_or_else(|| malformed(i, "expected `# key = value`".into()))?;
                let (k, v) = (k.trim(), v.trim());
                match k {
                    "variable" => variable = Some(v.parse::<ScanVariable>()?),
                    "x_unit" => {}
                    _ => metadata.push((k.to_string(), v.to_string())),
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            if !saw_columns {
                if line.trim() != COLUMNS {
                    return Err(DataError::MissingColumns);
                }
                saw_columns = true;
                continue;
            }
            let var: ScanVariable = variable.ok_or(DataError::MissingHeader)?;
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 4 {
                return Err(malformed(i, format!("expected 4 fields, found {}", fields.len())));
            }
            if fields[1] != var.unit() {
                return Err(malformed(i, format!("unit `{}` does not match `{}`", fields[1], var.unit())));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| malformed(i, format!("`{s}` is not a number")));
            points.push(ScanPoint {
                x: var.from_display(num(fields[0])?),
                fraction: num(fields[2])?,
                stderr: num(fields[3])?,
            });
        }
        if !saw_columns {
            return Err(DataError::MissingColumns);
        }
        let variable = variable.ok_or(DataError::MissingHeader)?;
        Ok(Self { variable, metadata, points })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> ScanDataset {
        let mut d = ScanDataset::from_xy(
            ScanVariable::PulseDuration,
            &[0.0, 0.5e-6, 1.0e-6],
            &[0.0, 0.71, -0.02],
            Some(&[0.0, 0.05, 0.01]),
        );
        d.push_meta("seed", 7);
        d.push_meta("config.omega_r_mhz", 1.36);
        d
    }

    #[test]
    fn csv_layout() {
        let csv = sample().to_csv().unwrap();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], DATASET_MAGIC);
        assert_eq!(lines[1], "# variable = pulse_duration");
        assert_eq!(lines[2], "# x_unit = us");
        assert_eq!(lines[3], "# seed = 7");
        assert_eq!(lines[5], COLUMNS);
        assert_eq!(lines[6], "0,us,0,0");
        assert_eq!(lines[7], "0.5,us,0.71,0.05");
        assert!(csv.ends_with('\n') && !csv.contains('\r'));
    }

    #[test]
    fn csv_round_trip() {
        let d = sample();
        let back = ScanDataset::from_csv(&d.to_csv().unwrap()).unwrap();
        assert_eq!(back.variable, d.variable);
        assert_eq!(back.metadata, d.metadata);
        assert_eq!(back.fractions(), d.fractions());
        assert_eq!(back.stderrs(), d.stderrs());
        for (a, b) in back.xs().iter().zip(d.xs()) {
            assert!((a - b).abs() <= 1e-15 * b.abs());
        }
        assert_eq!(back.meta("seed"), Some("7"));
    }

    #[test]
    fn detuning_display_unit() {
        let v = ScanVariable::TwoPhotonDetuning;
        assert!((v.to_display(TAU * 10e3) - 10.0).abs() < 1e-12);
        assert!((v.from_display(10.0) - TAU * 10e3).abs() < 1e-9);
    }

    #[test]
    fn rejects_files_without_header() {
        assert_eq!(ScanDataset::from_csv("x,x_unit,fraction,stderr\n1,us,0,0\n"), Err(DataError::MissingHeader));
        let no_cols = format!("{DATASET_MAGIC}\n# variable = ramsey_gap\n");
        assert_eq!(ScanDataset::from_csv(&no_cols), Err(DataError::MissingColumns));
    }

    #[test]
    fn rejects_bad_rows() {
        let text = format!("{DATASET_MAGIC}\n# variable = pulse_duration\n{COLUMNS}\n1,s,0,0\n");
        assert!(matches!(ScanDataset::from_csv(&text), Err(DataError::Malformed { line: 4, .. })));
        let text = format!("{DATASET_MAGIC}\n# variable = pulse_duration\n{COLUMNS}\n1,us,zero,0\n");
        assert!(matches!(ScanDataset::from_csv(&text), Err(DataError::Malformed { .. })));
        let text = format!("{DATASET_MAGIC}\n# variable = flux\n{COLUMNS}\n");
        assert_eq!(ScanDataset::from_csv(&text), Err(DataError::UnknownVariable("flux".into())));
    }

    #[test]
    fn rejects_bad_metadata_keys() {
        let mut d = sample();
        d.push_meta("has space", 1);
        assert_eq!(d.to_csv(), Err(DataError::BadKey("has space".into())));
    }
}

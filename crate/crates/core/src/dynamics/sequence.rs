use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{DynamicsError, RamanDrive, Rotation};
use crate::state::QubitState;
use crate::units::{angular_to_hz, hz_to_angular};

/// One constant-parameter piece of a pulse sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Segment {
    /// Raman drive on: Rabi frequency, two-photon detuning (rad/s), phase (rad).
    Drive { omega_r: f64, delta: f64, phase: f64, duration: f64 },
    /// Drive off: the qubit precesses at the frame detuning only.
    Free { delta: f64, duration: f64 },
}

impl Segment {
    pub fn drive(drive: &RamanDrive, phase: f64, duration: f64) -> Self {
        Segment::Drive {
            omega_r: drive.two_photon_rabi(),
            delta: drive.effective_detuning(),
            phase,
            duration,
        }
    }

    pub fn duration(&self) -> f64 {
        match *self {
            Segment::Drive { duration, .. } | Segment::Free { duration, .. } => duration,
        }
    }

    fn validate(&self) -> Result<(), DynamicsError> {
        let d = self.duration();
        if !(d.is_finite() && d >= 0.0) {
            return Err(DynamicsError::NegativeDuration(d));
        }
        match *self {
            Segment::Drive { omega_r, delta, phase, .. } => {
                for (name, v) in [("omega_r", omega_r), ("delta", delta), ("phase", phase)] {
                    if !v.is_finite() {
                        return Err(DynamicsError::NotFinite(name));
                    }
                }
            }
            Segment::Free { delta, .. } => {
                if !delta.is_finite() {
                    return Err(DynamicsError::NotFinite("delta"));
                }
            }
        }
        Ok(())
    }

    pub fn rotation(&self) -> Rotation {
        match *self {
            Segment::Drive { omega_r, delta, phase, duration } => {
                Rotation::constant_drive(omega_r, delta, phase, duration)
            }
            Segment::Free { delta, duration } => Rotation::free(delta, duration),
        }
    }
}

/// Ordered list of segments applied left to right.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PulseSequence {
    pub segments: Vec<Segment>,
}

impl PulseSequence {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(mut self, segment: Segment) -> Self {
        self.segments.push(segment);
        self
    }

    pub fn pulse(self, omega_r: f64, delta: f64, phase: f64, duration: f64) -> Self {
        self.push(Segment::Drive { omega_r, delta, phase, duration })
    }

    pub fn wait(self, delta: f64, duration: f64) -> Self {
        self.push(Segment::Free { delta, duration })
    }

    /// π/2 – wait(T) – π/2. The pulses are driven at `pulse_delta`, the gap
    /// precesses at `gap_delta`.
    pub fn ramsey(omega_r: f64, pulse_delta: f64, gap_delta: f64, gap: f64) -> Self {
        let tau = super::pi_half_time(omega_r);
        Self::new()
            .pulse(omega_r, pulse_delta, 0.0, tau)
            .wait(gap_delta, gap)
            .pulse(omega_r, pulse_delta, 0.0, tau)
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(Segment::duration).sum()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        self.segments.iter().try_for_each(Segment::validate)
    }

    /// The whole sequence as one propagator.
    pub fn rotation(&self) -> Result<Rotation, DynamicsError> {
        self.validate()?;
        Ok(self
            .segments
            .iter()
            .fold(Rotation::identity(), |acc, s| acc.then(&s.rotation())))
    }
}

/// Apply `seq` to `state`, segment by segment.
pub fn run_sequence(state: QubitState, seq: &PulseSequence) -> Result<QubitState, DynamicsError> {
    seq.validate()?;
    Ok(seq.segments.iter().fold(state, |s, seg| seg.rotation().apply(s)))
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SequenceParseError {
    #[error("line {line}: unknown segment kind `{kind}`")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: missing field `{field}`")]
    MissingField { line: usize, field: &'static str },
    #[error("line {line}: unexpected field `{field}`")]
    UnexpectedField { line: usize, field: String },
    #[error("line {line}: bad value for `{field}`: {value}")]
    BadValue { line: usize, field: String, value: String },
    #[error("line {line}: {source}")]
    Invalid { line: usize, source: DynamicsError },
}

impl fmt::Display for PulseSequence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for seg in &self.segments {
            match *seg {
                Segment::Drive { omega_r, delta, phase, duration } => writeln!(
                    f,
                    "DRIVE omega_r_hz={} delta_hz={} phase_rad={} t_s={}",
                    angular_to_hz(omega_r),
                    angular_to_hz(delta),
                    phase,
                    duration
                )?,
                Segment::Free { delta, duration } => {
                    writeln!(f, "FREE delta_hz={} t_s={}", angular_to_hz(delta), duration)?
                }
            }
        }
        Ok(())
    }
}

impl FromStr for PulseSequence {
    type Err = SequenceParseError;

    /// One segment per line; blank lines and `#` comments are skipped.
    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut seq = PulseSequence::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let mut tokens = content.split_whitespace();
            let kind = tokens.next().unwrap_or_default();
            let expected: &[&'static str] = match kind {
                "DRIVE" => &["omega_r_hz", "delta_hz", "phase_rad", "t_s"],
                "FREE" => &["delta_hz", "t_s"],
                other => {
                    return Err(SequenceParseError::UnknownKind { line, kind: other.to_string() })
                }
            };
            let mut values = vec![None; expected.len()];
            for tok in tokens {
                let (key, value) = tok.split_once('=').ok_or_else(|| SequenceParseError::BadValue {
                    line,
                    field: tok.to_string(),
                    value: String::new(),
                })?;
                let slot = expected
                    .iter()
                    .position(|k| *k == key)
                    .ok_or_else(|| SequenceParseError::UnexpectedField { line, field: key.to_string() })?;
                let parsed: f64 = value.parse().map_err(|_| SequenceParseError::BadValue {
                    line,
                    field: key.to_string(),
                    value: value.to_string(),
                })?;
                values[slot] = Some(parsed);
            }
            let get = |i: usize| values[i].ok_or(SequenceParseError::MissingField { line, field: expected[i] });
            let segment = if kind == "DRIVE" {
                Segment::Drive {
                    omega_r: hz_to_angular(get(0)?),
                    delta: hz_to_angular(get(1)?),
                    phase: get(2)?,
                    duration: get(3)?,
                }
            } else {
                Segment::Free { delta: hz_to_angular(get(0)?), duration: get(1)? }
            };
            segment.validate().map_err(|source| SequenceParseError::Invalid { line, source })?;
            seq.segments.push(segment);
        }
        Ok(seq)
    }
}

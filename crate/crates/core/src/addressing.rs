//! Site-selective drive bookkeeping: how strongly each trap site is driven
//! when the Raman beam is parked on one of them, the crosstalk bound that a
//! null measurement supports, Zeeman isolation of the clock transition, and
//! the field gradient a magnetic addressing scheme would need instead.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::dynamics::RamanDrive;
use crate::optics::{steer_beam, GaussianBeam, OpticsError, TrapArray};
use crate::species::AtomSpecies;
use crate::units::tesla_per_m_to_per_cm;

/// |1,±1⟩ → |2,±1⟩ sensitivity, Hz/T (1.4 MHz/G).
pub const DEFAULT_DFDB: f64 = 1.4e10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AddressingError {
    #[error("{0} must be finite and strictly positive")]
    NonPositive(&'static str),
    #[error("detection sensitivity must lie in (0, π], got {0}")]
    Sensitivity(f64),
    #[error("crosstalk tolerance must lie in (0, 1), got {0}")]
    Crosstalk(f64),
    #[error("level F={f}, m={m} is not a valid ground-state sublevel")]
    InvalidLevel { f: u32, m: i32 },
    #[error(transparent)]
    Optics(#[from] OpticsError),
}

/// A null measurement at a neighbouring site while the drive is parked elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct CrosstalkExperiment {
    pub driven_site: String,
    pub monitored_site: String,
    /// Longest pulse for which no excitation was seen at the monitored site, s.
    pub max_pulse_duration: f64,
    /// Smallest detectable rotation angle, rad.
    pub detection_sensitivity: f64,
    /// Two-photon Rabi frequency at the driven site, rad/s.
    pub drive_rabi: f64,
}

impl Default for CrosstalkExperiment {
    fn default() -> Self {
        Self {
            driven_site: "A".into(),
            monitored_site: "B".into(),
            max_pulse_duration: 43e-6,
            detection_sensitivity: std::f64::consts::PI / 6.0,
            drive_rabi: TAU * 1.36e6,
        }
    }
}

impl CrosstalkExperiment {
    pub fn validate(&self) -> Result<(), AddressingError> {
        let s = self.detection_sensitivity;
        if !(s > 0.0 && s <= std::f64::consts::PI) {
            return Err(AddressingError::Sensitivity(s));
        }
        if !(self.max_pulse_duration.is_finite() && self.max_pulse_duration > 0.0) {
            return Err(AddressingError::NonPositive("max_pulse_duration"));
        }
        if !(self.drive_rabi.is_finite() && self.drive_rabi.abs() > 0.0) {
            return Err(AddressingError::NonPositive("drive_rabi"));
        }
        Ok(())
    }
}

/// Upper bound on the ratio of Rabi frequencies (monitored / driven) implied
/// by seeing no rotation larger than the detection sensitivity after the
/// longest pulse.
pub fn crosstalk_bound(exp: &CrosstalkExperiment) -> Result<f64, AddressingError> {
    exp.validate()?;
    Ok(exp.detection_sensitivity / (exp.drive_rabi.abs() * exp.max_pulse_duration))
}

/// A ground-state sublevel |F, m⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Sublevel {
    pub f: u32,
    pub m: i32,
}

impl Sublevel {
    pub fn new(f: u32, m: i32) -> Self {
        Self { f, m }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanConfig {
    /// Bias field along the quantization axis, G.
    pub bias_field: f64,
    pub lower: Sublevel,
    pub upper: Sublevel,
}

impl ZeemanConfig {
    /// The clock transition |1,0⟩ → |2,0⟩ at 10.7 G.
    pub fn clock() -> Self {
        Self { bias_field: 10.7, lower: Sublevel::new(1, 0), upper: Sublevel::new(2, 0) }
    }
}

/// First-order Zeeman shift of a transition, Hz: (g′m′ − g m)(μ_B/h) B.
///
/// The clock pair has no first-order shift; the second-order shift (tens of Hz
/// at 10.7 G) is not modelled.
pub fn zeeman_shift(cfg: &ZeemanConfig, species: &AtomSpecies) -> Result<f64, AddressingError> {
    let g = |level: Sublevel| -> Result<f64, AddressingError> {
        let invalid = AddressingError::InvalidLevel { f: level.f, m: level.m };
        if level.m.unsigned_abs() > level.f {
            return Err(invalid);
        }
        species.g_factor(level.f).ok_or(invalid)
    };
    let (g_lower, g_upper) = (g(cfg.lower)?, g(cfg.upper)?);
    let moment = g_upper * cfg.upper.m as f64 - g_lower * cfg.lower.m as f64;
    Ok(moment * species.bohr_magneton_over_h * cfg.bias_field)
}

/// How "crosstalk" is compared against a detuning when sizing a magnetic
/// addressing gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CrosstalkDefinition {
    /// Off-resonant amplitude ratio Ω/δ equals the tolerance.
    #[default]
    AmplitudeRatio,
    /// Off-resonant transfer probability (Ω/δ)² equals the tolerance.
    ProbabilityRatio,
}

impl std::str::FromStr for CrosstalkDefinition {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "amplitude" => Ok(Self::AmplitudeRatio),
            "probability" => Ok(Self::ProbabilityRatio),
            other => Err(format!("expected `amplitude` or `probability`, got `{other}`")),
        }
    }
}

impl std::fmt::Display for CrosstalkDefinition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::AmplitudeRatio => "amplitude",
            Self::ProbabilityRatio => "probability",
        })
    }
}

/// Field gradient, T/cm, needed to detune a neighbour a distance `d` away far
/// enough that a drive of Rabi frequency `target_rabi` (rad/s) leaves it with
/// crosstalk `crosstalk`. `dfdb` is the transition's field sensitivity, Hz/T.
pub fn magnetic_gradient_required(
    target_rabi: f64,
    crosstalk: f64,
    d: f64,
    dfdb: f64,
) -> Result<f64, AddressingError> {
    magnetic_gradient_required_with(target_rabi, crosstalk, d, dfdb, CrosstalkDefinition::AmplitudeRatio)
}

pub fn magnetic_gradient_required_with(
    target_rabi: f64,
    crosstalk: f64,
    d: f64,
    dfdb: f64,
    definition: CrosstalkDefinition,
) -> Result<f64, AddressingError> {
    for (name, v) in [("target_rabi", target_rabi), ("d", d), ("dfdb", dfdb)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(AddressingError::NonPositive(name));
        }
    }
    if !(crosstalk > 0.0 && crosstalk < 1.0) {
        return Err(AddressingError::Crosstalk(crosstalk));
    }
    let rabi_hz = target_rabi / TAU;
    let required_detuning = match definition {
        CrosstalkDefinition::AmplitudeRatio => rabi_hz / crosstalk,
        CrosstalkDefinition::ProbabilityRatio => rabi_hz / crosstalk.sqrt(),
    };
    Ok(tesla_per_m_to_per_cm(required_detuning / (dfdb * d)))
}

/// Effective two-photon Rabi frequency at every site when the drive is
/// steered to `target`, in array order.
pub fn site_drive_map(
    array: &TrapArray,
    beam: &GaussianBeam,
    drive: &RamanDrive,
    target: &str,
) -> Result<Vec<(String, f64)>, AddressingError> {
    let steered = steer_beam(array, target, beam)?;
    let omega_r = drive.two_photon_rabi();
    Ok(array
        .sites()
        .iter()
        .map(|s| (s.label.clone(), omega_r * steered.relative_rabi_at(s.position)))
        .collect())
}

/// Rabi frequency a site sees from a drive of on-axis Rabi frequency
/// `omega_r` steered to `target`.
pub fn site_rabi(
    array: &TrapArray,
    beam: &GaussianBeam,
    omega_r: f64,
    target: &str,
    site: &str,
) -> Result<f64, AddressingError> {
    let steered = steer_beam(array, target, beam)?;
    Ok(omega_r * steered.relative_rabi_at(array.site(site)?.position))
}

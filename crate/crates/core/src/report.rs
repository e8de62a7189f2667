//! Headline numbers: π/2 time, crosstalk (beam-profile value and measured
//! bound), T₂, figure of merit, trap depth and the magnetic gradient that
//! would be needed instead of optical addressing.

use std::f64::consts::{FRAC_PI_6, TAU};
use std::fmt;

use thiserror::Error;

use crate::addressing::{
    crosstalk_bound, magnetic_gradient_required_with, AddressingError, CrosstalkDefinition, CrosstalkExperiment,
    DEFAULT_DFDB,
};
use crate::dynamics::pi_half_time;
use crate::experiments::{figure_of_merit, DEFAULT_CROSSTALK_DURATION, DEFAULT_OMEGA_R, DEFAULT_SEPARATION};
use crate::optics::{crosstalk_ratio, trap_depth, GaussianBeam, OpticsError};
use crate::species::AtomSpecies;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("{0} must be positive")]
    NonPositive(&'static str),
    #[error(transparent)]
    Optics(#[from] OpticsError),
    #[error(transparent)]
    Addressing(#[from] AddressingError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeadlineInputs {
    /// Two-photon Rabi frequency, rad/s.
    pub omega_r: f64,
    pub t2: f64,
    pub separation: f64,
    pub raman_waist: f64,
    pub crosstalk: CrosstalkExperiment,
    pub fort: GaussianBeam,
    pub species: AtomSpecies,
    /// Rabi frequency the magnetic scheme must reach, rad/s.
    pub gradient_rabi: f64,
    /// Crosstalk tolerance for the magnetic scheme.
    pub gradient_crosstalk: f64,
    /// Transition sensitivity used for the gradient, Hz/T.
    pub dfdb: f64,
    pub definition: CrosstalkDefinition,
}

impl Default for HeadlineInputs {
    fn default() -> Self {
        Self {
            omega_r: DEFAULT_OMEGA_R,
            t2: 870e-6,
            separation: DEFAULT_SEPARATION,
            raman_waist: GaussianBeam::raman().waist,
            crosstalk: CrosstalkExperiment {
                max_pulse_duration: DEFAULT_CROSSTALK_DURATION,
                detection_sensitivity: FRAC_PI_6,
                drive_rabi: DEFAULT_OMEGA_R,
                ..Default::default()
            },
            fort: GaussianBeam::fort(),
            species: AtomSpecies::rubidium87(),
            gradient_rabi: TAU * 1e6,
            gradient_crosstalk: 1e-3,
            dfdb: DEFAULT_DFDB,
            definition: CrosstalkDefinition::AmplitudeRatio,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Headline {
    pub inputs: HeadlineInputs,
    /// s
    pub pi_half_time: f64,
    pub crosstalk_theory: f64,
    pub crosstalk_bound: f64,
    pub figure_of_merit: f64,
    /// K
    pub trap_depth: f64,
    /// T/cm
    pub gradient: f64,
}

pub fn report_headline(inputs: &HeadlineInputs) -> Result<Headline, ReportError> {
    if !(inputs.omega_r.abs() > 0.0) {
        return Err(ReportError::NonPositive("omega_r"));
    }
    if !(inputs.t2 > 0.0) {
        return Err(ReportError::NonPositive("t2"));
    }
    if !(inputs.raman_waist > 0.0) {
        return Err(ReportError::NonPositive("raman_waist"));
    }
    Ok(Headline {
        pi_half_time: pi_half_time(inputs.omega_r),
        crosstalk_theory: crosstalk_ratio(inputs.separation, inputs.raman_waist),
        crosstalk_bound: crosstalk_bound(&inputs.crosstalk)?,
        figure_of_merit: figure_of_merit(inputs.t2, inputs.omega_r),
        trap_depth: trap_depth(&inputs.fort, &inputs.species)?,
        gradient: magnetic_gradient_required_with(
            inputs.gradient_rabi,
            inputs.gradient_crosstalk,
            inputs.separation,
            inputs.dfdb,
            inputs.definition,
        )?,
        inputs: inputs.clone(),
    })
}

impl fmt::Display for Headline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let i = &self.inputs;
        let mhz = |w: f64| w.abs() / TAU / 1e6;
        writeln!(
            f,
            "pi/2 time            {:.1} ns      π/(2Ω_R), Ω_R = 2π×{:.3} MHz",
            self.pi_half_time * 1e9,
            mhz(i.omega_r)
        )?;
        writeln!(
            f,
            "crosstalk (theory)   {:.3e}     exp(-2d²/w²), d = {:.2} µm, w = {:.2} µm",
            self.crosstalk_theory,
            i.separation * 1e6,
            i.raman_waist * 1e6
        )?;
        writeln!(
            f,
            "crosstalk (bound)    {:.3e}     θ/(Ω_R·t), θ = {:.4} rad, Ω_R = 2π×{:.3} MHz, t = {:.1} µs",
            self.crosstalk_bound,
            i.crosstalk.detection_sensitivity,
            mhz(i.crosstalk.drive_rabi),
            i.crosstalk.max_pulse_duration * 1e6
        )?;
        writeln!(f, "T2                   {:.1} µs", i.t2 * 1e6)?;
        writeln!(
            f,
            "figure of merit      {:.0}         T2 / (pi/2 time) = {:.1} µs / {:.1} ns",
            self.figure_of_merit,
            i.t2 * 1e6,
            self.pi_half_time * 1e9
        )?;
        writeln!(
            f,
            "trap depth           {:.3} mK     P = {:.1} mW, w0 = {:.2} µm, λ = {:.0} nm",
            self.trap_depth * 1e3,
            i.fort.power * 1e3,
            i.fort.waist * 1e6,
            i.fort.wavelength * 1e9
        )?;
        writeln!(
            f,
            "B gradient needed    {:.1} T/cm    Ω = 2π×{:.3} MHz, crosstalk {:e}, d = {:.2} µm, df/dB = {:e} Hz/T, {} model",
            self.gradient,
            mhz(i.gradient_rabi),
            i.gradient_crosstalk,
            i.separation * 1e6,
            i.dfdb,
            i.definition
        )
    }
}

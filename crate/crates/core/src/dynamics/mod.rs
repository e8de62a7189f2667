//! Two-photon Raman dynamics of the hyperfine qubit.
//!
//! The far-detuned Λ system (|0⟩, |1⟩ coupled through an excited state at
//! single-photon detuning Δ) is treated as an effective two-level system with
//! Rabi frequency Ω₁Ω₂/2Δ. Constant-drive segments are propagated with the
//! exact SU(2) rotation; [`lambda`] integrates the full three-level problem
//! numerically as an independent check. Spontaneous emission during the
//! pulses is neglected (|Δ|/Γ is several thousand in the default setup).
//!
//! Sign conventions: δ = ω_drive − ω_hyperfine and Δ = ω_laser − ω_excited,
//! both stored signed. In the rotating frame the qubit Hamiltonian is
//! `H/ħ = ½ [[δ, Ω e^{-iφ}], [Ω e^{iφ}, -δ]]` in the (|0⟩, |1⟩) basis.

pub mod lambda;
mod sequence;

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::species::AtomSpecies;
use crate::state::QubitState;

pub use sequence::{run_sequence, PulseSequence, Segment, SequenceParseError};

/// Minimum |Δ|/Γ for the adiabatically eliminated model.
pub const MIN_DETUNING_OVER_LINEWIDTH: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DynamicsError {
    #[error("single-photon detuning must be nonzero")]
    ZeroDetuning,
    #[error("|Δ| = {delta:e} rad/s is below {min:e} rad/s (100 Γ); the effective two-level model does not apply")]
    DetuningTooSmall { delta: f64, min: f64 },
    #[error("{0} must be finite")]
    NotFinite(&'static str),
    #[error("duration must be finite and non-negative, got {0}")]
    NegativeDuration(f64),
    #[error("integration step must be finite and positive, got {0}")]
    InvalidStep(f64),
    #[error("step refinement did not converge after {halvings} halvings (last change {change:e})")]
    NotConverged { halvings: u32, change: f64 },
}

/// The pair of Raman beams driving |0⟩ ↔ |1⟩.
///
/// Ω₁ and Ω₂ are calibration inputs; see [`estimate_single_photon_rabi`] for
/// the order of magnitude implied by a beam power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RamanDrive {
    /// Single-photon Rabi frequency of beam 1, rad/s.
    omega1: f64,
    /// Single-photon Rabi frequency of beam 2, rad/s.
    omega2: f64,
    /// Single-photon detuning Δ from the excited state, rad/s.
    delta_big: f64,
    /// Two-photon detuning δ, rad/s.
    pub delta_two_photon: f64,
    /// Total power in both sidebands, W. Not used by the dynamics.
    pub sideband_power: f64,
    /// Additional shift of the two-photon resonance, rad/s. Zero unless set.
    pub light_shift: f64,
}

impl RamanDrive {
    pub fn new(
        omega1: f64,
        omega2: f64,
        delta_big: f64,
        delta_two_photon: f64,
        species: &AtomSpecies,
    ) -> Result<Self, DynamicsError> {
        for (name, v) in [("omega1", omega1), ("omega2", omega2), ("delta_two_photon", delta_two_photon)] {
            if !v.is_finite() {
                return Err(DynamicsError::NotFinite(name));
            }
        }
        if !delta_big.is_finite() {
            return Err(DynamicsError::NotFinite("delta_big"));
        }
        if delta_big == 0.0 {
            return Err(DynamicsError::ZeroDetuning);
        }
        let min = MIN_DETUNING_OVER_LINEWIDTH * species.d2_linewidth;
        if delta_big.abs() < min {
            return Err(DynamicsError::DetuningTooSmall { delta: delta_big, min });
        }
        Ok(Self {
            omega1,
            omega2,
            delta_big,
            delta_two_photon,
            sideband_power: 0.0,
            light_shift: 0.0,
        })
    }

    /// Balanced beams (Ω₁ = Ω₂ ≥ 0) chosen so that |Ω₁Ω₂/2Δ| = |omega_r|.
    pub fn balanced(omega_r: f64, delta_big: f64, species: &AtomSpecies) -> Result<Self, DynamicsError> {
        let single = (2.0 * delta_big.abs() * omega_r.abs()).sqrt();
        Self::new(single, single, delta_big, 0.0, species)
    }

    pub fn omega1(&self) -> f64 {
        self.omega1
    }

    pub fn omega2(&self) -> f64 {
        self.omega2
    }

    pub fn delta_big(&self) -> f64 {
        self.delta_big
    }

    /// Ω_R = Ω₁Ω₂/2Δ, signed.
    pub fn two_photon_rabi(&self) -> f64 {
        self.omega1 * self.omega2 / (2.0 * self.delta_big)
    }

    /// Two-photon detuning including the optional light shift.
    pub fn effective_detuning(&self) -> f64 {
        self.delta_two_photon + self.light_shift
    }

    pub fn with_detuning(mut self, delta: f64) -> Self {
        self.delta_two_photon = delta;
        self
    }

    pub fn with_light_shift(mut self, shift: f64) -> Self {
        self.light_shift = shift;
        self
    }

    /// Turn on the differential AC Stark shift implied by unequal beams.
    pub fn with_differential_light_shift(self) -> Self {
        let shift = differential_light_shift(self.omega1, self.omega2, self.delta_big);
        self.with_light_shift(shift)
    }

    pub fn with_sideband_power(mut self, power: f64) -> Self {
        self.sideband_power = power;
        self
    }
}

/// Ω₁Ω₂/2Δ for a validated drive.
pub fn two_photon_rabi(drive: &RamanDrive) -> f64 {
    drive.two_photon_rabi()
}

/// Differential AC Stark shift of the qubit frequency, (Ω₁² − Ω₂²)/4Δ.
pub fn differential_light_shift(omega1: f64, omega2: f64, delta_big: f64) -> f64 {
    (omega1 * omega1 - omega2 * omega2) / (4.0 * delta_big)
}

/// Order-of-magnitude single-photon Rabi frequency for a beam of `power`
/// focused to `waist`, using the cycling-transition saturation intensity:
/// Ω ≈ Γ √(I / 2 I_sat). Clebsch-Gordan factors of the actual Raman path are
/// not included, so this is good to a factor of a few at best.
pub fn estimate_single_photon_rabi(power: f64, waist: f64, species: &AtomSpecies) -> f64 {
    let peak = 2.0 * power / (std::f64::consts::PI * waist * waist);
    species.d2_linewidth * (peak / (2.0 * species.saturation_intensity)).sqrt()
}

/// An SU(2) propagator stored as its 2×2 matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation {
    m: [[C64; 2]; 2],
}

impl Rotation {
    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self { m: [[one, zero], [zero, one]] }
    }

    /// Exact propagator for constant Rabi frequency, detuning and phase over `t`.
    pub fn constant_drive(omega_r: f64, delta: f64, phase: f64, t: f64) -> Self {
        let generalized = omega_r.hypot(delta);
        if generalized == 0.0 || t == 0.0 {
            return Self::identity();
        }
        let half = 0.5 * generalized * t;
        let (s, c) = half.sin_cos();
        let nx = omega_r * phase.cos() / generalized;
        let ny = omega_r * phase.sin() / generalized;
        let nz = delta / generalized;
        let i = C64::new(0.0, 1.0);
        Self {
            m: [
                [C64::new(c, -s * nz), -i * s * C64::new(nx, -ny)],
                [-i * s * C64::new(nx, ny), C64::new(c, s * nz)],
            ],
        }
    }

    /// Free precession: relative phase δt between |1⟩ and |0⟩.
    pub fn free(delta: f64, t: f64) -> Self {
        let half = 0.5 * delta * t;
        let zero = C64::new(0.0, 0.0);
        Self {
            m: [
                [C64::from_polar(1.0, -half), zero],
                [zero, C64::from_polar(1.0, half)],
            ],
        }
    }

    pub fn apply(&self, state: QubitState) -> QubitState {
        let m = &self.m;
        QubitState {
            c0: m[0][0] * state.c0 + m[0][1] * state.c1,
            c1: m[1][0] * state.c0 + m[1][1] * state.c1,
        }
    }

    /// `self` followed by `next`.
    pub fn then(&self, next: &Rotation) -> Rotation {
        let (a, b) = (&next.m, &self.m);
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, out) in row.iter_mut().enumerate() {
                *out = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Rotation { m }
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.m
    }
}

/// Evolve `state` for `t` under a constant drive of Rabi frequency `omega_r`,
/// two-photon detuning `delta` and phase `phase`.
///
/// From |0⟩ this gives P₁(t) = (Ω_R²/Ω′²) sin²(Ω′t/2) with Ω′ = √(Ω_R² + δ²).
pub fn propagate(
    state: QubitState,
    omega_r: f64,
    delta: f64,
    phase: f64,
    t: f64,
) -> Result<QubitState, DynamicsError> {
    if !(t.is_finite() && t >= 0.0) {
        return Err(DynamicsError::NegativeDuration(t));
    }
    for (name, v) in [("omega_r", omega_r), ("delta", delta), ("phase", phase)] {
        if !v.is_finite() {
            return Err(DynamicsError::NotFinite(name));
        }
    }
    Ok(Rotation::constant_drive(omega_r, delta, phase, t).apply(state))
}

/// Transition probability from |0⟩ after a constant pulse, closed form.
pub fn rabi_probability(omega_r: f64, delta: f64, t: f64) -> f64 {
    let generalized_sq = omega_r * omega_r + delta * delta;
    if generalized_sq == 0.0 {
        return 0.0;
    }
    let s = (0.5 * generalized_sq.sqrt() * t).sin();
    omega_r * omega_r / generalized_sq * s * s
}

/// Ramsey fringe contrast after a gap `gap` for exponential dephasing with
/// time constant `t2` (`f64::INFINITY` for none).
pub fn ramsey_contrast(gap: f64, t2: f64) -> f64 {
    (-gap / t2).exp()
}

/// Probability of finding |1⟩ after two ideal π/2 pulses separated by `gap`
/// at two-photon detuning `delta`: ½[1 + e^{-T/T₂} cos δT].
///
/// At δ = 0 the two pulses add to a π rotation and the probability is 1
/// without dephasing.
pub fn ramsey_probability(delta: f64, gap: f64, t2: f64) -> f64 {
    0.5 * (1.0 + ramsey_contrast(gap, t2) * (delta * gap).cos())
}

/// Duration of a π/2 pulse, π/(2|Ω_R|).
pub fn pi_half_time(omega_r: f64) -> f64 {
    std::f64::consts::FRAC_PI_2 / omega_r.abs()
}

//! Atomic constants for the trapped species. Defaults are ⁸⁷Rb.

use std::f64::consts::TAU;

use thiserror::Error;

use crate::units::SPEED_OF_LIGHT;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeciesError {
    #[error("species field `{0}` must be finite and strictly positive")]
    NonPositive(&'static str),
    #[error("ground-state g-factors must differ by exactly 1 (got {upper} - {lower})")]
    GFactorSplit { lower: f64, upper: f64 },
}

/// Constants of an alkali atom with two hyperfine ground manifolds.
///
/// The qubit lives on the clock pair |0⟩ = |F=1, m=0⟩ and |1⟩ = |F=2, m=0⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSpecies {
    /// Ground hyperfine splitting, Hz.
    pub hyperfine_splitting: f64,
    /// D2 line vacuum wavelength, m.
    pub d2_wavelength: f64,
    /// D1 line vacuum wavelength, m.
    pub d1_wavelength: f64,
    /// D2 natural linewidth Γ, rad/s.
    pub d2_linewidth: f64,
    /// Landé factor of the lower (F=1) ground manifold.
    pub g_lower: f64,
    /// Landé factor of the upper (F=2) ground manifold.
    pub g_upper: f64,
    /// Bohr magneton over Planck's constant, Hz/G.
    pub bohr_magneton_over_h: f64,
    /// Saturation intensity of the D2 cycling transition, W/m².
    pub saturation_intensity: f64,
}

impl AtomSpecies {
    pub const RUBIDIUM_87: AtomSpecies = AtomSpecies {
        hyperfine_splitting: 6_834_683e3,
        d2_wavelength: 780.24e-9,
        d1_wavelength: 794.98e-9,
        d2_linewidth: TAU * 6.07e6,
        g_lower: -0.5,
        g_upper: 0.5,
        bohr_magneton_over_h: 1.3996e6,
        saturation_intensity: 16.69,
    };

    pub fn rubidium87() -> Self {
        Self::RUBIDIUM_87
    }

    pub fn validate(&self) -> Result<(), SpeciesError> {
        let positive = [
            ("hyperfine_splitting", self.hyperfine_splitting),
            ("d2_wavelength", self.d2_wavelength),
            ("d1_wavelength", self.d1_wavelength),
            ("d2_linewidth", self.d2_linewidth),
            ("bohr_magneton_over_h", self.bohr_magneton_over_h),
            ("saturation_intensity", self.saturation_intensity),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(SpeciesError::NonPositive(name));
            }
        }
        if ((self.g_upper - self.g_lower) - 1.0).abs() > 1e-12 {
            return Err(SpeciesError::GFactorSplit { lower: self.g_lower, upper: self.g_upper });
        }
        Ok(())
    }

    /// Landé factor of ground manifold `f` (1 or 2).
    pub fn g_factor(&self, f: u32) -> Option<f64> {
        match f {
            1 => Some(self.g_lower),
            2 => Some(self.g_upper),
            _ => None,
        }
    }

    /// D1 and D2 transition angular frequencies, rad/s.
    pub fn d1_angular(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / self.d1_wavelength
    }

    pub fn d2_angular(&self) -> f64 {
        TAU * SPEED_OF_LIGHT / self.d2_wavelength
    }

    /// Hyperfine splitting as an angular frequency, rad/s.
    pub fn hyperfine_angular(&self) -> f64 {
        TAU * self.hyperfine_splitting
    }
}

impl Default for AtomSpecies {
    fn default() -> Self {
        Self::RUBIDIUM_87
    }
}

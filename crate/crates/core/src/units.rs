//! Physical constants and the handful of unit conversions used across the crate.
//!
//! Internally every frequency is an angular frequency in rad/s, lengths are in
//! metres and times in seconds. Ordinary frequencies (Hz, kHz, MHz) and gauss
//! only appear at the file and command-line boundaries.

use std::f64::consts::TAU;

/// Boltzmann constant, J/K (exact SI value).
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant, J s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Tesla per gauss.
pub const TESLA_PER_GAUSS: f64 = 1e-4;

pub const MICRO: f64 = 1e-6;
pub const NANO: f64 = 1e-9;
pub const MILLI: f64 = 1e-3;

/// Ordinary frequency (Hz) to angular frequency (rad/s).
pub fn hz_to_angular(f: f64) -> f64 {
    TAU * f
}

/// Angular frequency (rad/s) to ordinary frequency (Hz).
pub fn angular_to_hz(omega: f64) -> f64 {
    omega / TAU
}

/// Energy to the equivalent temperature `U / k_B`. Sign is preserved.
pub fn energy_to_temperature(energy: f64) -> f64 {
    energy / BOLTZMANN
}

pub fn temperature_to_energy(temperature: f64) -> f64 {
    temperature * BOLTZMANN
}

pub fn gauss_to_tesla(b: f64) -> f64 {
    b * TESLA_PER_GAUSS
}

pub fn tesla_to_gauss(b: f64) -> f64 {
    b / TESLA_PER_GAUSS
}

/// Convert a gradient in T/m to T/cm.
pub fn tesla_per_m_to_per_cm(g: f64) -> f64 {
    g * 1e-2
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn angular_conversion_examples() {
        assert_eq!(hz_to_angular(0.0), 0.0);
        let w = hz_to_angular(1.36e6);
        assert!((w - 8.5451e6).abs() / 8.5451e6 < 1e-5);
        assert!((hz_to_angular(1.0 / TAU) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn temperature_examples() {
        assert_eq!(energy_to_temperature(0.0), 0.0);
        assert!((energy_to_temperature(1.380_649e-23) - 1.0).abs() < 1e-15);
        let t = energy_to_temperature(1.46e-26);
        assert!((t - 1.06e-3).abs() < 0.005e-3);
        assert!(energy_to_temperature(-1.46e-26) < 0.0);
    }

    proptest! {
        #[test]
        fn hz_round_trip(f in -1e12f64..1e12) {
            let back = angular_to_hz(hz_to_angular(f));
            prop_assert!((back - f).abs() <= 1e-15 * f.abs());
        }

        #[test]
        fn temperature_round_trip(u in -1e-20f64..1e-20) {
            let back = temperature_to_energy(energy_to_temperature(u));
            prop_assert!((back - u).abs() <= 1e-15 * u.abs());
        }

        #[test]
        fn gauss_round_trip(b in -1e4f64..1e4) {
            let back = tesla_to_gauss(gauss_to_tesla(b));
            prop_assert!((back - b).abs() <= 1e-15 * b.abs());
        }
    }
}

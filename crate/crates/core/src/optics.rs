//! Gaussian beam geometry for the trap and addressing beams, the dipole trap
//! depth, and the site-to-site crosstalk factor.

use std::f64::consts::PI;

use thiserror::Error;

use crate::species::AtomSpecies;
use crate::units::{energy_to_temperature, SPEED_OF_LIGHT};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OpticsError {
    #[error("beam {0} must be finite and strictly positive")]
    InvalidBeam(&'static str),
    #[error("beam power must be finite and non-negative")]
    NegativePower,
    #[error("wavelength {wavelength:e} m is not red-detuned of both D lines")]
    NotRedDetuned { wavelength: f64 },
    #[error("unknown trap site `{0}`")]
    UnknownSite(String),
    #[error("duplicate trap site label `{0}`")]
    DuplicateSite(String),
    #[error("site position must be finite")]
    InvalidPosition,
}

/// A TEM00 beam focused in the plane of the trap array.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBeam {
    /// Optical power, W.
    pub power: f64,
    /// 1/e² intensity radius at the focus, m.
    pub waist: f64,
    /// Vacuum wavelength, m.
    pub wavelength: f64,
    /// Transverse position of the beam axis in the focal plane, m.
    pub focus: [f64; 2],
}

impl GaussianBeam {
    pub fn new(power: f64, waist: f64, wavelength: f64) -> Result<Self, OpticsError> {
        let beam = Self { power, waist, wavelength, focus: [0.0, 0.0] };
        beam.validate()?;
        Ok(beam)
    }

    /// One of the two trap beams: 80 mW at 1010 nm focused to 2.7 µm.
    pub fn fort() -> Self {
        Self { power: 80e-3, waist: 2.7e-6, wavelength: 1010e-9, focus: [0.0, 0.0] }
    }

    /// The Raman addressing beam, 4.1 µm waist carrying both sidebands
    /// (45 µW total, near 795 nm).
    pub fn raman() -> Self {
        Self { power: 45e-6, waist: 4.1e-6, wavelength: 795e-9, focus: [0.0, 0.0] }
    }

    pub fn validate(&self) -> Result<(), OpticsError> {
        if !(self.power.is_finite() && self.power >= 0.0) {
            return Err(OpticsError::NegativePower);
        }
        if !(self.waist.is_finite() && self.waist > 0.0) {
            return Err(OpticsError::InvalidBeam("waist"));
        }
        if !(self.wavelength.is_finite() && self.wavelength > 0.0) {
            return Err(OpticsError::InvalidBeam("wavelength"));
        }
        if !self.focus.iter().all(|v| v.is_finite()) {
            return Err(OpticsError::InvalidPosition);
        }
        Ok(())
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }

    /// Beam radius a distance `z` from the focus.
    pub fn radius_at(&self, z: f64) -> f64 {
        let zr = z / self.rayleigh_range();
        self.waist * (1.0 + zr * zr).sqrt()
    }

    pub fn peak_intensity(&self) -> f64 {
        2.0 * self.power / (PI * self.waist * self.waist)
    }

    /// Intensity at radial distance `r` from the beam axis and axial offset `z`, W/m².
    pub fn intensity(&self, r: f64, z: f64) -> f64 {
        let w = self.radius_at(z);
        2.0 * self.power / (PI * w * w) * (-2.0 * r * r / (w * w)).exp()
    }

    /// Intensity at a transverse point of the focal plane.
    pub fn intensity_at(&self, point: [f64; 2]) -> f64 {
        self.intensity(self.distance_from_axis(point), 0.0)
    }

    pub fn distance_from_axis(&self, point: [f64; 2]) -> f64 {
        (point[0] - self.focus[0]).hypot(point[1] - self.focus[1])
    }

    /// Two-photon Rabi frequency at `point` relative to its on-axis value.
    ///
    /// Both Raman sidebands share this beam, so each single-photon Rabi
    /// frequency follows the field amplitude and the product follows the
    /// intensity profile.
    pub fn relative_rabi_at(&self, point: [f64; 2]) -> f64 {
        crosstalk_ratio(self.distance_from_axis(point), self.waist)
    }
}

/// Signed ground-state dipole potential at the focus of `beam`, J.
///
/// Fine-structure resolved, rotating-wave form for linear polarization,
/// hyperfine structure ignored:
/// `U = (π c² Γ / 2 ω₀³) (2/Δ₂ + 1/Δ₁) I₀` with ω₀ and Γ taken from the D2 line.
pub fn dipole_potential(beam: &GaussianBeam, species: &AtomSpecies) -> Result<f64, OpticsError> {
    beam.validate()?;
    if beam.wavelength <= species.d1_wavelength.max(species.d2_wavelength) {
        return Err(OpticsError::NotRedDetuned { wavelength: beam.wavelength });
    }
    let omega_laser = 2.0 * PI * SPEED_OF_LIGHT / beam.wavelength;
    let omega_d2 = species.d2_angular();
    let detuning_d2 = omega_laser - omega_d2;
    let detuning_d1 = omega_laser - species.d1_angular();
    let prefactor = PI * SPEED_OF_LIGHT * SPEED_OF_LIGHT * species.d2_linewidth
        / (2.0 * omega_d2.powi(3));
    Ok(prefactor * (2.0 / detuning_d2 + 1.0 / detuning_d1) * beam.peak_intensity())
}

/// Trap depth at the focus expressed as a temperature, K.
pub fn trap_depth(beam: &GaussianBeam, species: &AtomSpecies) -> Result<f64, OpticsError> {
    dipole_potential(beam, species).map(|u| energy_to_temperature(u.abs()))
}

/// `exp(-2 d² / w²)`: ratio of the two-photon Rabi frequency a distance `d`
/// from the axis of an addressing beam of waist `w` to the on-axis value.
pub fn crosstalk_ratio(d: f64, w: f64) -> f64 {
    (-2.0 * d * d / (w * w)).exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrapSite {
    pub label: String,
    /// Transverse position in the focal plane, m.
    pub position: [f64; 2],
}

impl TrapSite {
    pub fn new(label: impl Into<String>, position: [f64; 2]) -> Self {
        Self { label: label.into(), position }
    }
}

/// Ordered set of trap sites with unique labels.
#[derive(Debug, Clone, PartialEq)]
pub struct TrapArray {
    sites: Vec<TrapSite>,
}

impl TrapArray {
    pub fn new(sites: Vec<TrapSite>) -> Result<Self, OpticsError> {
        for (i, site) in sites.iter().enumerate() {
            if !site.position.iter().all(|v| v.is_finite()) {
                return Err(OpticsError::InvalidPosition);
            }
            if sites[..i].iter().any(|s| s.label == site.label) {
                return Err(OpticsError::DuplicateSite(site.label.clone()));
            }
        }
        Ok(Self { sites })
    }

    /// Sites along x with spacing `separation`, the first at the origin.
    pub fn linear(labels: &[&str], separation: f64) -> Result<Self, OpticsError> {
        let sites = labels
            .iter()
            .enumerate()
            .map(|(i, l)| TrapSite::new(*l, [i as f64 * separation, 0.0]))
            .collect();
        Self::new(sites)
    }

    /// Two sites, A at the origin and B a distance `separation` along x.
    pub fn pair(separation: f64) -> Self {
        Self::linear(&["A", "B"], separation).expect("distinct labels")
    }

    pub fn sites(&self) -> &[TrapSite] {
        &self.sites
    }

    pub fn site(&self, label: &str) -> Result<&TrapSite, OpticsError> {
        self.sites
            .iter()
            .find(|s| s.label == label)
            .ok_or_else(|| OpticsError::UnknownSite(label.to_string()))
    }

    /// Common spacing between adjacent sites, if the array has at least two
    /// sites and every adjacent pair has the same spacing.
    pub fn separation(&self) -> Option<f64> {
        let gaps: Vec<f64> = self
            .sites
            .windows(2)
            .map(|w| {
                let (a, b) = (w[0].position, w[1].position);
                (a[0] - b[0]).hypot(a[1] - b[1])
            })
            .collect();
        let first = *gaps.first()?;
        gaps.iter()
            .all(|g| (g - first).abs() <= 1e-12 * first.max(1e-30))
            .then_some(first)
    }

    pub fn distance(&self, a: &str, b: &str) -> Result<f64, OpticsError> {
        let (pa, pb) = (self.site(a)?.position, self.site(b)?.position);
        Ok((pa[0] - pb[0]).hypot(pa[1] - pb[1]))
    }
}

/// Point the addressing beam at `target`, as the AO deflector does.
///
/// The AO frequency shift is common to both Raman sidebands and drops out of
/// the two-photon detuning, so only the focus position changes.
pub fn steer_beam(array: &TrapArray, target: &str, beam: &GaussianBeam) -> Result<GaussianBeam, OpticsError> {
    steer_beam_with_offset(array, target, beam, [0.0, 0.0])
}

/// Like [`steer_beam`] but lands the beam `pointing_error` away from the site.
pub fn steer_beam_with_offset(
    array: &TrapArray,
    target: &str,
    beam: &GaussianBeam,
    pointing_error: [f64; 2],
) -> Result<GaussianBeam, OpticsError> {
    let site = array.site(target)?;
    let mut steered = beam.clone();
    steered.focus = [site.position[0] + pointing_error[0], site.position[1] + pointing_error[1]];
    Ok(steered)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn fort_peak_intensity() {
        let beam = GaussianBeam::fort();
        assert!(rel(beam.intensity(0.0, 0.0), 6.99e9) < 1e-3);
        let on_axis = beam.intensity(0.0, 0.0);
        let at_waist = beam.intensity(beam.waist, 0.0);
        assert!(rel(at_waist, on_axis * (-2.0f64).exp()) < 1e-14);
        let dark = GaussianBeam { power: 0.0, ..GaussianBeam::fort() };
        assert_eq!(dark.intensity(1e-6, 3e-6), 0.0);
    }

    #[test]
    fn radius_grows_by_sqrt2_at_rayleigh_range() {
        let beam = GaussianBeam::fort();
        let zr = beam.rayleigh_range();
        assert!(zr > 0.0);
        assert!(rel(beam.radius_at(zr), beam.waist * 2f64.sqrt()) < 1e-14);
    }

    #[test]
    fn intensity_integrates_to_power() {
        // composite Simpson on 2π ∫ I(r) r dr out to 10 w(z)
        for &z in &[0.0, 5e-6, 40e-6] {
            let beam = GaussianBeam::fort();
            let w = beam.radius_at(z);
            let n = 4000;
            let h = 10.0 * w / n as f64;
            let f = |r: f64| 2.0 * PI * r * beam.intensity(r, z);
            let mut sum = f(0.0) + f(10.0 * w);
            for i in 1..n {
                let coeff = if i % 2 == 1 { 4.0 } else { 2.0 };
                sum += coeff * f(i as f64 * h);
            }
            let total = sum * h / 3.0;
            assert!(rel(total, beam.power) < 1e-6, "z = {z}: {total}");
        }
    }

    #[test]
    fn fort_trap_depth_is_about_one_millikelvin() {
        let depth = trap_depth(&GaussianBeam::fort(), &AtomSpecies::rubidium87()).unwrap();
        assert!((0.5e-3..2.0e-3).contains(&depth), "{depth}");
        let dark = GaussianBeam { power: 0.0, ..GaussianBeam::fort() };
        assert_eq!(trap_depth(&dark, &AtomSpecies::rubidium87()).unwrap(), 0.0);
    }

    #[test]
    fn trap_depth_is_linear_in_power() {
        let s = AtomSpecies::rubidium87();
        let base = trap_depth(&GaussianBeam::fort(), &s).unwrap();
        let doubled = trap_depth(&GaussianBeam { power: 0.16, ..GaussianBeam::fort() }, &s).unwrap();
        assert!(rel(doubled, 2.0 * base) < 1e-14);
    }

    #[test]
    fn trap_depth_falls_with_wavelength() {
        let s = AtomSpecies::rubidium87();
        let depths: Vec<f64> = [850e-9, 1010e-9, 1064e-9, 1550e-9, 10.6e-6, 1e-3]
            .iter()
            .map(|&l| trap_depth(&GaussianBeam { wavelength: l, ..GaussianBeam::fort() }, &s).unwrap())
            .collect();
        assert!(depths.windows(2).all(|w| w[1] < w[0]), "{depths:?}");
        // far to the red the rotating-wave expression levels off at its
        // static value instead of vanishing
        let w2 = s.d2_angular();
        let w1 = s.d1_angular();
        let static_limit = PI * SPEED_OF_LIGHT.powi(2) * s.d2_linewidth / (2.0 * w2.powi(3))
            * (2.0 / w2 + 1.0 / w1)
            * GaussianBeam::fort().peak_intensity()
            / crate::units::BOLTZMANN;
        assert!(rel(*depths.last().unwrap(), static_limit) < 1e-3);
    }

    #[test]
    fn rejects_blue_detuned_trap() {
        let s = AtomSpecies::rubidium87();
        for l in [532e-9, 780e-9, 790e-9] {
            let beam = GaussianBeam { wavelength: l, ..GaussianBeam::fort() };
            assert!(matches!(trap_depth(&beam, &s), Err(OpticsError::NotRedDetuned { .. })));
        }
    }

    #[test]
    fn crosstalk_examples() {
        assert!(rel(crosstalk_ratio(8e-6, 4.1e-6), 4.9e-4) < 0.02);
        assert_eq!(crosstalk_ratio(0.0, 4.1e-6), 1.0);
        assert!(rel(crosstalk_ratio(4.1e-6, 4.1e-6), 0.1353) < 1e-3);
    }

    #[test]
    fn steering() {
        let array = TrapArray::pair(8e-6);
        let beam = GaussianBeam::raman();
        let at_a = steer_beam(&array, "A", &beam).unwrap();
        let b = array.site("B").unwrap().position;
        let a = array.site("A").unwrap().position;
        assert!(rel(at_a.relative_rabi_at(b), 4.9e-4) < 0.02);
        assert_eq!(at_a.relative_rabi_at(a), 1.0);
        let via_b = steer_beam(&array, "B", &beam).unwrap();
        let back = steer_beam(&array, "A", &via_b).unwrap();
        assert_eq!(back, at_a);
        assert_eq!(steer_beam(&array, "C", &beam), Err(OpticsError::UnknownSite("C".into())));
    }

    #[test]
    fn pointing_offset_moves_the_focus() {
        let array = TrapArray::pair(8e-6);
        let beam = steer_beam_with_offset(&array, "A", &GaussianBeam::raman(), [1e-6, 0.0]).unwrap();
        let b = array.site("B").unwrap().position;
        assert!(rel(beam.relative_rabi_at(b), crosstalk_ratio(7e-6, 4.1e-6)) < 1e-12);
    }

    #[test]
    fn array_validation() {
        let dup = TrapArray::new(vec![TrapSite::new("A", [0.0, 0.0]), TrapSite::new("A", [1.0, 0.0])]);
        assert_eq!(dup, Err(OpticsError::DuplicateSite("A".into())));
        let array = TrapArray::linear(&["A", "B", "C"], 8e-6).unwrap();
        assert!(rel(array.separation().unwrap(), 8e-6) < 1e-14);
        assert!(rel(array.distance("A", "C").unwrap(), 16e-6) < 1e-14);
        let single = TrapArray::linear(&["A"], 8e-6).unwrap();
        assert_eq!(single.separation(), None);
        let uneven = TrapArray::new(vec![
            TrapSite::new("A", [0.0, 0.0]),
            TrapSite::new("B", [8e-6, 0.0]),
            TrapSite::new("C", [20e-6, 0.0]),
        ])
        .unwrap();
        assert_eq!(uneven.separation(), None);
    }

    #[test]
    fn rejects_invalid_beams() {
        assert_eq!(GaussianBeam::new(-1.0, 1e-6, 1e-6), Err(OpticsError::NegativePower));
        assert_eq!(GaussianBeam::new(1.0, 0.0, 1e-6), Err(OpticsError::InvalidBeam("waist")));
        assert_eq!(
            GaussianBeam::new(1.0, 1e-6, f64::NAN),
            Err(OpticsError::InvalidBeam("wavelength"))
        );
    }

    proptest! {
        #[test]
        fn crosstalk_monotone_and_symmetric(
            d in 0.1e-6f64..20e-6,
            w in 1e-6f64..10e-6,
            step in 1e-8f64..1e-6,
        ) {
            let base = crosstalk_ratio(d, w);
            let further = crosstalk_ratio(d + step, w);
            let wider = crosstalk_ratio(d, w + step);
            prop_assert!(further < base || base == 0.0);
            prop_assert!(wider > base || wider == 0.0);
            prop_assert_eq!(crosstalk_ratio(-d, w), base);
        }
    }
}

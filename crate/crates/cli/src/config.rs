//! Flat `key = value` run configuration.
//!
//! Every key has a default, a unit in its name and a value check. Values are
//! stored in canonical text form so that the echo written into output
//! headers reads back to the same configuration.

use std::f64::consts::TAU;
use std::fmt;
use std::path::Path;

use fortsim::addressing::{CrosstalkDefinition, CrosstalkExperiment};
use fortsim::data::ScanVariable;
use fortsim::dynamics::RamanDrive;
use fortsim::experiments::{linspace, ramsey_grid, FringeFrequency, ScanConfig};
use fortsim::optics::{GaussianBeam, TrapArray};
use fortsim::report::HeadlineInputs;
use fortsim::species::AtomSpecies;
use fortsim::stochastics::{AtomLoading, Dephasing, DetectionModel, NoiseModel, SpreadShape, DEFAULT_WIDTH_PER_KELVIN};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("invalid value for `{key}`: {message}")]
    Invalid { key: String, message: String },
    #[error("{path}:{line}: expected `key = value`")]
    Syntax { path: String, line: usize },
    #[error("--set expects key=value, got `{0}`")]
    BadOverride(String),
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
}

/// Prefix of the config echo lines written into output headers.
pub const ECHO_PREFIX: &str = "# config.";

pub(crate) fn invalid(key: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { key: key.to_string(), message: message.into() }
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Positive,
    NonNegative,
    Finite,
    /// Positive, `inf` allowed.
    PositiveOrInf,
    /// In [0, 1].
    Probability,
    /// In [0, 1).
    Fraction,
    /// In (0, 1).
    OpenFraction,
    /// Integer ≥ 1.
    Count,
    /// Integer ≥ 8.
    GridCount,
    Seed,
    Bool,
    Choice(&'static [&'static str]),
    Label,
    /// Comma-separated positive numbers.
    PositiveList,
}

struct Key {
    name: &'static str,
    default: &'static str,
    kind: Kind,
    help: &'static str,
}

const fn key(name: &'static str, default: &'static str, kind: Kind, help: &'static str) -> Key {
    Key { name, default, kind, help }
}

/// Every accepted key, in echo order.
static KEYS: &[Key] = &[
    key("seed", "1", Kind::Seed, "master RNG seed"),
    key("noise", "on", Kind::Choice(&["on", "off"]), "shot-noise mode"),
    key("omega_r_mhz", "1.36", Kind::Positive, "two-photon Rabi frequency Ω_R/2π on the beam axis"),
    key("delta_ghz", "-41", Kind::Finite, "single-photon detuning Δ/2π, signed"),
    key("detuning_khz", "0", Kind::Finite, "two-photon detuning δ/2π for pulse scans"),
    key("light_shift_khz", "0", Kind::Finite, "extra shift of the two-photon resonance /2π"),
    key("drive_power_uw", "45", Kind::NonNegative, "total Raman sideband power"),
    key("separation_um", "8", Kind::NonNegative, "distance between sites A and B"),
    key("raman_waist_um", "4.1", Kind::Positive, "addressing beam waist"),
    key("raman_wavelength_nm", "795", Kind::Positive, "addressing beam wavelength"),
    key("pointing_error_um", "0", Kind::Finite, "transverse pointing error of the addressing beam along the site axis"),
    key("target", "A", Kind::Label, "site the addressing beam is steered to"),
    key("monitored", "B", Kind::Label, "site watched in the crosstalk scan"),
    key("fort_power_mw", "80", Kind::NonNegative, "trap beam power"),
    key("fort_waist_um", "2.7", Kind::Positive, "trap beam waist"),
    key("fort_wavelength_nm", "1010", Kind::Positive, "trap beam wavelength"),
    key("shots", "12", Kind::Count, "repetitions per point"),
    key("atoms_per_site", "10", Kind::Positive, "mean atoms loaded per site"),
    key("atom_loading", "poisson", Kind::Choice(&["poisson", "fixed"]), "shot-to-shot atom number"),
    key("photoelectron_rate_hz", "2100", Kind::Positive, "photoelectrons per second per bright atom"),
    key("exposure_ms", "10", Kind::Positive, "fluorescence probe duration"),
    key("background_rate_hz", "0", Kind::NonNegative, "background photoelectrons per second"),
    key("normalization_systematic", "0.1", Kind::Fraction, "half-width of the uniform normalization error"),
    key("dephasing", "exponential", Kind::Choice(&["exponential", "lorentzian", "gaussian"]), "dephasing model"),
    key("t2_us", "870", Kind::PositiveOrInf, "exponential dephasing time"),
    key("spread_rad_per_s_per_k", "", Kind::NonNegative, "quasi-static detuning width per kelvin (blank: width giving T2 = 870 µs at 70 µK)"),
    key("temperature_uk", "70", Kind::NonNegative, "atom temperature"),
    key("trap_lifetime_ms", "780", Kind::Positive, "1/e trap lifetime"),
    key("residual_population", "0", Kind::Probability, "atoms left outside |0> by state preparation"),
    key("probe_loss", "false", Kind::Bool, "apply trap loss during the probe"),
    key("rabi_t_max_us", "1.5", Kind::Positive, "longest pulse in the Rabi scan"),
    key("rabi_points", "41", Kind::GridCount, "points in the Rabi scan"),
    key("crosstalk_t_max_us", "43", Kind::Positive, "longest pulse in the crosstalk scan"),
    key("crosstalk_points", "44", Kind::GridCount, "points in the crosstalk scan"),
    key("crosstalk_sensitivity_rad", "0.5235987755982988", Kind::Positive, "smallest detectable pulse area"),
    key("gap_us", "100", Kind::Positive, "Ramsey gap for the ramsey scan"),
    key("gaps_us", "100,300,1000,3000", Kind::PositiveList, "Ramsey gaps for contrast decay and fringe sets"),
    key("fringes", "4", Kind::Positive, "fringe periods per Ramsey scan"),
    key("fringe_points", "161", Kind::GridCount, "points per Ramsey scan"),
    key("fringe_frequency", "fixed", Kind::Choice(&["fixed", "seeded", "free"]), "fringe frequency in contrast-decay fits"),
    key("gradient_rabi_mhz", "1", Kind::Positive, "Rabi frequency /2π for the magnetic comparison"),
    key("gradient_crosstalk", "0.001", Kind::OpenFraction, "crosstalk tolerance for the magnetic comparison"),
    key("dfdb_hz_per_t", "14000000000", Kind::Positive, "transition sensitivity for the magnetic comparison"),
    key("crosstalk_definition", "amplitude", Kind::Choice(&["amplitude", "probability"]), "crosstalk measure for the magnetic comparison"),
    key("bias_field_g", "10.7", Kind::NonNegative, "quantization bias field"),
    key("species_hyperfine_khz", "6834683", Kind::Positive, "ground hyperfine splitting"),
    key("species_d1_nm", "794.98", Kind::Positive, "D1 wavelength"),
    key("species_d2_nm", "780.24", Kind::Positive, "D2 wavelength"),
    key("species_d2_linewidth_mhz", "6.07", Kind::Positive, "D2 natural linewidth Γ/2π"),
    key("species_g_lower", "-0.5", Kind::Finite, "g_F of the lower hyperfine level"),
    key("species_g_upper", "0.5", Kind::Finite, "g_F of the upper hyperfine level"),
    key("species_bohr_mhz_per_g", "1.3996", Kind::Positive, "μ_B/h"),
    key("species_isat_w_per_m2", "16.69", Kind::Positive, "saturation intensity"),
];

fn find(name: &str) -> Option<&'static Key> {
    KEYS.iter().find(|k| k.name == name)
}

fn number(key: &str, value: &str) -> Result<f64, ConfigError> {
    value.parse::<f64>().map_err(|_| invalid(key, format!("`{value}` is not a number")))
}

/// Check `raw` against the key's kind and return its canonical form.
fn canonical(k: &Key, raw: &str) -> Result<String, ConfigError> {
    let raw = raw.trim();
    let name = k.name;
    if raw.is_empty() {
        return if k.default.is_empty() { Ok(String::new()) } else { Err(invalid(name, "empty value")) };
    }
    let check = |ok: bool, v: f64, what: &str| {
        if ok { Ok(format!("{v}")) } else { Err(invalid(name, format!("must be {what}, got {raw}"))) }
    };
    match k.kind {
        Kind::Positive => {
            let v = number(name, raw)?;
            check(v.is_finite() && v > 0.0, v, "positive")
        }
        Kind::NonNegative => {
            let v = number(name, raw)?;
            check(v.is_finite() && v >= 0.0, v, "non-negative")
        }
        Kind::Finite => {
            let v = number(name, raw)?;
            check(v.is_finite(), v, "finite")
        }
        Kind::PositiveOrInf => {
            let v = number(name, raw)?;
            check(v > 0.0 && !v.is_nan(), v, "positive or inf")
        }
        Kind::Probability => {
            let v = number(name, raw)?;
            check((0.0..=1.0).contains(&v), v, "in [0, 1]")
        }
        Kind::Fraction => {
            let v = number(name, raw)?;
            check((0.0..1.0).contains(&v), v, "in [0, 1)")
        }
        Kind::OpenFraction => {
            let v = number(name, raw)?;
            check(v > 0.0 && v < 1.0, v, "in (0, 1)")
        }
        Kind::Count | Kind::GridCount => {
            let min = if matches!(k.kind, Kind::Count) { 1 } else { 8 };
            match raw.parse::<usize>() {
                Ok(n) if n >= min => Ok(n.to_string()),
                _ => Err(invalid(name, format!("must be an integer ≥ {min}, got {raw}"))),
            }
        }
        Kind::Seed => raw
            .parse::<u64>()
            .map(|n| n.to_string())
            .map_err(|_| invalid(name, format!("must be an unsigned 64-bit integer, got {raw}"))),
        Kind::Bool => match raw {
            "true" | "on" | "yes" => Ok("true".into()),
            "false" | "off" | "no" => Ok("false".into()),
            _ => Err(invalid(name, format!("must be true or false, got {raw}"))),
        },
        Kind::Choice(options) => {
            if options.contains(&raw) {
                Ok(raw.to_string())
            } else {
                Err(invalid(name, format!("must be one of {}, got {raw}", options.join(", "))))
            }
        }
        Kind::Label => {
            if raw.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                Ok(raw.to_string())
            } else {
                Err(invalid(name, format!("site labels are alphanumeric, got {raw}")))
            }
        }
        Kind::PositiveList => {
            let values: Vec<String> = raw
                .split(',')
                .map(|s| {
                    let v = number(name, s.trim())?;
                    check(v.is_finite() && v > 0.0, v, "a list of positive numbers")
                })
                .collect::<Result<_, _>>()?;
            Ok(values.join(","))
        }
    }
}

/// Resolved configuration: every key with a canonical value.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    values: Vec<(&'static str, String)>,
}

impl Default for Config {
    fn default() -> Self {
        Self { values: KEYS.iter().map(|k| (k.name, k.default.to_string())).collect() }
    }
}

impl Config {
    pub fn set(&mut self, name: &str, raw: &str) -> Result<(), ConfigError> {
        let k = find(name).ok_or_else(|| ConfigError::UnknownKey(name.to_string()))?;
        let value = canonical(k, raw)?;
        let slot = self.values.iter_mut().find(|(n, _)| *n == k.name).expect("all keys present");
        slot.1 = value;
        Ok(())
    }

    /// Apply a `key=value` override.
    pub fn set_pair(&mut self, pair: &str) -> Result<(), ConfigError> {
        let (k, v) = pair.split_once('=').ok_or_else(|| ConfigError::BadOverride(pair.to_string()))?;
        self.set(k.trim(), v.trim())
    }

    /// Apply a config file's text. Output files are accepted too: when the
    /// text carries `# config.<key> = <value>` echo lines, only those are read.
    pub fn apply_text(&mut self, text: &str, path: &str) -> Result<(), ConfigError> {
        let is_dataset = text.lines().any(|l| l.starts_with(ECHO_PREFIX));
        for (i, line) in text.lines().enumerate() {
            let body = if is_dataset {
                match line.strip_prefix(ECHO_PREFIX) {
                    Some(rest) => rest,
                    None => continue,
                }
            } else {
                let without_comment = line.split('#').next().unwrap_or("");
                if without_comment.trim().is_empty() {
                    continue;
                }
                without_comment
            };
            let (k, v) = body
                .split_once('=')
                .ok_or_else(|| ConfigError::Syntax { path: path.to_string(), line: i + 1 })?;
            self.set(k.trim(), v.trim())?;
        }
        Ok(())
    }

    pub fn load(&mut self, path: &Path) -> Result<(), ConfigError> {
        let shown = path.display().to_string();
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: shown.clone(), source })?;
        self.apply_text(&text, &shown)
    }

    pub fn get(&self, name: &str) -> &str {
        &self.values.iter().find(|(n, _)| *n == name).unwrap_or_else(|| panic!("unknown key {name}")).1
    }

    fn f64(&self, name: &str) -> f64 {
        self.get(name).parse().unwrap_or_else(|_| panic!("{name} was validated as a number"))
    }

    fn usize(&self, name: &str) -> usize {
        self.get(name).parse().unwrap_or_else(|_| panic!("{name} was validated as an integer"))
    }

    pub fn seed(&self) -> u64 {
        self.get("seed").parse().expect("validated")
    }

    pub fn noisy(&self) -> bool {
        self.get("noise") == "on"
    }

    pub fn entries(&self) -> impl Iterator<Item = (&'static str, &str)> {
        self.values.iter().map(|(k, v)| (*k, v.as_str()))
    }

    pub fn gaps(&self) -> Vec<f64> {
        self.get("gaps_us").split(',').map(|v| v.parse::<f64>().expect("validated") / 1e6).collect()
    }

    pub fn species(&self) -> Result<AtomSpecies, ConfigError> {
        let s = AtomSpecies {
            hyperfine_splitting: self.f64("species_hyperfine_khz") * 1e3,
            d1_wavelength: self.f64("species_d1_nm") * 1e-9,
            d2_wavelength: self.f64("species_d2_nm") * 1e-9,
            d2_linewidth: TAU * self.f64("species_d2_linewidth_mhz") * 1e6,
            g_lower: self.f64("species_g_lower"),
            g_upper: self.f64("species_g_upper"),
            bohr_magneton_over_h: self.f64("species_bohr_mhz_per_g") * 1e6,
            saturation_intensity: self.f64("species_isat_w_per_m2"),
        };
        s.validate().map_err(|e| invalid("species_g_upper", e.to_string()))?;
        Ok(s)
    }

    pub fn drive(&self, species: &AtomSpecies) -> Result<RamanDrive, ConfigError> {
        let drive = RamanDrive::balanced(TAU * self.f64("omega_r_mhz") * 1e6, TAU * self.f64("delta_ghz") * 1e9, species)
            .map_err(|e| invalid("delta_ghz", e.to_string()))?;
        Ok(drive
            .with_detuning(TAU * self.f64("detuning_khz") * 1e3)
            .with_light_shift(TAU * self.f64("light_shift_khz") * 1e3)
            .with_sideband_power(self.f64("drive_power_uw") * 1e-6))
    }

    pub fn raman_beam(&self) -> Result<GaussianBeam, ConfigError> {
        GaussianBeam::new(
            self.drive_power(),
            self.f64("raman_waist_um") * 1e-6,
            self.f64("raman_wavelength_nm") * 1e-9,
        )
        .map_err(|e| invalid("raman_waist_um", e.to_string()))
    }

    fn drive_power(&self) -> f64 {
        self.f64("drive_power_uw") * 1e-6
    }

    pub fn fort_beam(&self) -> Result<GaussianBeam, ConfigError> {
        GaussianBeam::new(
            self.f64("fort_power_mw") * 1e-3,
            self.f64("fort_waist_um") * 1e-6,
            self.f64("fort_wavelength_nm") * 1e-9,
        )
        .map_err(|e| invalid("fort_waist_um", e.to_string()))
    }

    pub fn noise_model(&self) -> NoiseModel {
        let width = match self.get("spread_rad_per_s_per_k") {
            "" => DEFAULT_WIDTH_PER_KELVIN,
            v => v.parse().expect("validated"),
        };
        let dephasing = match self.get("dephasing") {
            "lorentzian" => Dephasing::QuasiStatic { shape: SpreadShape::Lorentzian, width_per_kelvin: width },
            "gaussian" => Dephasing::QuasiStatic { shape: SpreadShape::Gaussian, width_per_kelvin: width },
            _ => Dephasing::Exponential { t2: self.f64("t2_us") * 1e-6 },
        };
        NoiseModel {
            dephasing,
            trap_lifetime: self.f64("trap_lifetime_ms") * 1e-3,
            atom_temperature: self.f64("temperature_uk") * 1e-6,
        }
    }

    fn loading(&self) -> Result<AtomLoading, ConfigError> {
        let mean = self.f64("atoms_per_site");
        match self.get("atom_loading") {
            "fixed" => {
                if mean.fract() != 0.0 {
                    return Err(invalid("atoms_per_site", "fixed loading needs a whole number of atoms"));
                }
                Ok(AtomLoading::Fixed(mean as u64))
            }
            _ => Ok(AtomLoading::Poisson(mean)),
        }
    }

    /// Scan configuration for `variable` with the grid taken from the
    /// matching keys. Crosstalk scans use `crosstalk = true`.
    pub fn scan_config(&self, variable: ScanVariable, crosstalk: bool) -> Result<ScanConfig, ConfigError> {
        let species = self.species()?;
        let separation = self.f64("separation_um") * 1e-6;
        let array = TrapArray::pair(separation);
        for k in ["target", "monitored"] {
            if array.site(self.get(k)).is_err() {
                return Err(invalid(k, format!("no site `{}`; sites are A and B", self.get(k))));
            }
        }
        let grid = match variable {
            ScanVariable::PulseDuration if crosstalk => {
                linspace(0.0, self.f64("crosstalk_t_max_us") * 1e-6, self.usize("crosstalk_points"))
            }
            ScanVariable::PulseDuration => linspace(0.0, self.f64("rabi_t_max_us") * 1e-6, self.usize("rabi_points")),
            ScanVariable::TwoPhotonDetuning => {
                ramsey_grid(self.f64("gap_us") / 1e6, self.f64("fringes"), self.usize("fringe_points"))
            }
            ScanVariable::RamseyGap => self.gaps(),
        };
        let fringe_frequency = match self.get("fringe_frequency") {
            "free" => FringeFrequency::Free,
            "seeded" => FringeFrequency::SeededAtGap,
            _ => FringeFrequency::FixedAtGap,
        };
        Ok(ScanConfig {
            variable,
            grid,
            shots: self.usize("shots"),
            drive: self.drive(&species)?,
            species,
            array,
            beam: self.raman_beam()?,
            target: self.get("target").to_string(),
            pointing_error: [self.f64("pointing_error_um") * 1e-6, 0.0],
            detection: DetectionModel {
                photoelectron_rate: self.f64("photoelectron_rate_hz"),
                exposure: self.f64("exposure_ms") * 1e-3,
                background_rate: self.f64("background_rate_hz"),
                normalization_systematic: self.f64("normalization_systematic"),
            },
            noise: self.noise_model(),
            loading: self.loading()?,
            residual_population: self.f64("residual_population"),
            probe_loss: self.get("probe_loss") == "true",
            noisy: self.noisy(),
            seed: self.seed(),
            fringes: self.f64("fringes"),
            fringe_points: self.usize("fringe_points"),
            fringe_frequency,
            fit_options: Default::default(),
        })
    }

    pub fn crosstalk_definition(&self) -> CrosstalkDefinition {
        self.get("crosstalk_definition").parse().expect("validated choice")
    }

    pub fn headline_inputs(&self) -> Result<HeadlineInputs, ConfigError> {
        let omega_r = TAU * self.f64("omega_r_mhz") * 1e6;
        let t2 = match self.noise_model().dephasing {
            Dephasing::Exponential { t2 } => t2,
            // the quasi-static modes define T2 through their closed-form contrast
            Dephasing::QuasiStatic { .. } => {
                let spread = self.noise_model().detuning_spread();
                if spread > 0.0 { 1.0 / spread } else { f64::INFINITY }
            }
        };
        Ok(HeadlineInputs {
            omega_r,
            t2,
            separation: self.f64("separation_um") * 1e-6,
            raman_waist: self.f64("raman_waist_um") * 1e-6,
            crosstalk: CrosstalkExperiment {
                driven_site: self.get("target").to_string(),
                monitored_site: self.get("monitored").to_string(),
                max_pulse_duration: self.f64("crosstalk_t_max_us") * 1e-6,
                detection_sensitivity: self.f64("crosstalk_sensitivity_rad"),
                drive_rabi: omega_r,
            },
            fort: self.fort_beam()?,
            species: self.species()?,
            gradient_rabi: TAU * self.f64("gradient_rabi_mhz") * 1e6,
            gradient_crosstalk: self.f64("gradient_crosstalk"),
            dfdb: self.f64("dfdb_hz_per_t"),
            definition: self.crosstalk_definition(),
        })
    }
}

/// The documented key list, for `--help`-style output.
pub struct KeyList;

impl fmt::Display for KeyList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in KEYS {
            writeln!(f, "{:<28} {:<22} {}", k.name, if k.default.is_empty() { "(auto)" } else { k.default }, k.help)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_canonical() {
        for k in KEYS {
            assert_eq!(canonical(k, k.default).unwrap(), k.default, "{}", k.name);
        }
    }

    #[test]
    fn defaults_build_every_config() {
        let c = Config::default();
        for (v, x) in [
            (ScanVariable::PulseDuration, false),
            (ScanVariable::PulseDuration, true),
            (ScanVariable::TwoPhotonDetuning, false),
            (ScanVariable::RamseyGap, false),
        ] {
            c.scan_config(v, x).unwrap().validate().unwrap();
        }
        let rabi = c.scan_config(ScanVariable::PulseDuration, false).unwrap();
        assert!((rabi.omega_r().abs() - TAU * 1.36e6).abs() < 1e-6);
        assert_eq!(rabi.shots, 12);
        assert_eq!(c.gaps(), vec![100e-6, 300e-6, 1000e-6, 3000e-6]);
    }

    #[test]
    fn negative_rabi_frequency_names_the_key() {
        let mut c = Config::default();
        let err = c.apply_text("omega_r_mhz = -1\n", "cfg").unwrap_err();
        assert!(err.to_string().contains("omega_r_mhz"), "{err}");
    }

    #[test]
    fn unknown_key_is_rejected() {
        let mut c = Config::default();
        let err = c.apply_text("# comment\n\nomega_r_hz = 1\n", "cfg").unwrap_err();
        assert!(matches!(&err, ConfigError::UnknownKey(k) if k == "omega_r_hz"));
    }

    #[test]
    fn syntax_errors_report_the_line() {
        let mut c = Config::default();
        let err = c.apply_text("shots = 3\nnot a pair\n", "cfg").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
    }

    #[test]
    fn values_are_canonicalised() {
        let mut c = Config::default();
        c.apply_text("t2_us = 8.7e2   # trailing comment\ngaps_us = 100, 3e3, 1000\nprobe_loss = on\n", "cfg")
            .unwrap();
        assert_eq!(c.get("t2_us"), "870");
        assert_eq!(c.get("gaps_us"), "100,3000,1000");
        assert_eq!(c.get("probe_loss"), "true");
        c.set("t2_us", "inf").unwrap();
        assert_eq!(c.get("t2_us"), "inf");
    }

    #[test]
    fn dataset_header_round_trip() {
        let mut c = Config::default();
        c.set("seed", "42").unwrap();
        c.set("omega_r_mhz", "2.5").unwrap();
        let mut text = "# fortsim dataset\n# variable = pulse_duration\n".to_string();
        for (k, v) in c.entries() {
            text.push_str(&format!("# config.{k} = {v}\n"));
        }
        text.push_str("x,x_unit,fraction,stderr\n0,us,0,0\n");
        let mut back = Config::default();
        back.apply_text(&text, "data.csv").unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn range_checks() {
        let mut c = Config::default();
        assert!(c.set("normalization_systematic", "1").is_err());
        assert!(c.set("shots", "0").is_err());
        assert!(c.set("rabi_points", "5").is_err());
        assert!(c.set("noise", "maybe").is_err());
        assert!(c.set("target", "A B").is_err());
        assert!(c.set("gaps_us", "100,-3").is_err());
        assert!(c.set_pair("shots").is_err());
        c.set_pair("shots=20").unwrap();
        assert_eq!(c.get("shots"), "20");
    }

    #[test]
    fn small_detuning_is_a_config_error() {
        let mut c = Config::default();
        c.set("delta_ghz", "0.1").unwrap();
        let err = c.scan_config(ScanVariable::PulseDuration, false).unwrap_err();
        assert!(err.to_string().contains("delta_ghz"));
    }

    #[test]
    fn unknown_site_is_a_config_error() {
        let mut c = Config::default();
        c.set("target", "C").unwrap();
        let err = c.scan_config(ScanVariable::PulseDuration, false).unwrap_err();
        assert!(err.to_string().contains("`target`"));
    }
}

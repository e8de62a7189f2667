//! Simulation and analysis toolkit for hyperfine qubits held in microscopic
//! far-off-resonant optical traps and addressed site by site with a focused
//! two-photon Raman beam.
//!
//! Physical models live in [`optics`], [`dynamics`] and [`addressing`];
//! [`stochastics`] owns every random draw; [`experiments`] runs Rabi,
//! crosstalk and Ramsey scans and [`fitting`] extracts Rabi frequency,
//! fringe contrast and T₂ from the resulting datasets.

pub mod addressing;
pub mod data;
pub mod dynamics;
pub mod experiments;
pub mod fitting;
pub mod optics;
pub mod report;
pub mod species;
pub mod state;
pub mod stochastics;
pub mod units;

pub use species::AtomSpecies;
pub use state::QubitState;

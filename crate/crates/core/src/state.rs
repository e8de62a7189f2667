//! Two-level amplitude pair for the hyperfine clock qubit.

use num_complex::Complex64 as C64;

/// Amplitudes `(c0, c1)` of |0⟩ = |F=1, m=0⟩ and |1⟩ = |F=2, m=0⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitState {
    pub c0: C64,
    pub c1: C64,
}

impl QubitState {
    pub fn new(c0: C64, c1: C64) -> Self {
        Self { c0, c1 }
    }

    /// All population in |0⟩, the state after optical pumping into F=1.
    pub fn ground() -> Self {
        Self { c0: C64::new(1.0, 0.0), c1: C64::new(0.0, 0.0) }
    }

    pub fn excited() -> Self {
        Self { c0: C64::new(0.0, 0.0), c1: C64::new(1.0, 0.0) }
    }

    pub fn p0(&self) -> f64 {
        self.c0.norm_sqr()
    }

    /// Population of |1⟩, the quantity the fluorescence probe measures.
    pub fn p1(&self) -> f64 {
        self.c1.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.c0.norm_sqr() + self.c1.norm_sqr()
    }
}

impl Default for QubitState {
    fn default() -> Self {
        Self::ground()
    }
}

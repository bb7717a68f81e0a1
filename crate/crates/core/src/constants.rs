//! Physical constants (CODATA 2018) and reference parameters.

use serde::{Deserialize, Serialize};

/// Speed of light in vacuum, exact (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Reduced Planck constant (J s).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Effective two-photon wave number of magic-wavelength Bragg diffraction (1/m).
pub const K_MAGIC: f64 = 1.5e7;

/// Rest mass of a strontium-87 atom (kg).
pub const SR87_MASS: f64 = 1.443_157e-25;

/// Frequency of the Sr 698 nm clock transition (Hz).
pub const SR_CLOCK_FREQUENCY_HZ: f64 = 429.228e12;

/// Angular splitting of the Sr clock transition, 2π·429.228 THz (rad/s).
pub const SR_CLOCK_OMEGA: f64 = 2.696_928e15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// m/s
    pub c: f64,
    /// J s
    pub hbar: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: Self = Self {
        c: SPEED_OF_LIGHT,
        hbar: HBAR,
    };

    /// Non-CODATA constants, for tests that need round numbers.
    #[doc(hidden)]
    pub fn custom(c: f64, hbar: f64) -> Self {
        assert!(c > 0.0 && hbar > 0.0, "constants must be positive");
        Self { c, hbar }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

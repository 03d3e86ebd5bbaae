//! Thermal occupation factors, extended to signed frequencies.

use serde::Serialize;

use crate::error::{Error, Result};

/// Below this ratio |ω|/T the Laurent expansion of coth is used.
const POLE_GUARD: f64 = 1e-8;

/// Thermal state of the field at temperature `temperature` (k_B = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalSpectrum {
    pub temperature: f64,
}

impl ThermalSpectrum {
    pub fn new(temperature: f64) -> Result<Self> {
        if !(temperature >= 0.0 && temperature.is_finite()) {
            return Err(Error::domain(format!(
                "temperature must be finite and non-negative, got {temperature}"
            )));
        }
        Ok(Self { temperature })
    }

    pub fn zero() -> Self {
        Self { temperature: 0.0 }
    }

    /// Bose occupation n(ω) = 1/(e^{ω/T} − 1) for ω > 0; zero at T = 0.
    ///
    /// Returned separately from z so that differences such as z_k − z_j can be
    /// formed without cancellation against the zero-point term.
    pub fn occupation(&self, omega: f64) -> f64 {
        debug_assert!(omega > 0.0);
        if self.temperature == 0.0 {
            return 0.0;
        }
        let x = omega / self.temperature;
        if x < POLE_GUARD {
            1.0 / x - 0.5 + x / 12.0
        } else {
            1.0 / x.exp_m1()
        }
    }

    /// z(ω) = coth(ω/2T), odd in ω; sign(ω) at T = 0.
    pub fn z(&self, omega: f64) -> Result<f64> {
        if omega == 0.0 || !omega.is_finite() {
            return Err(Error::domain(format!(
                "z(ω) is undefined at ω = {omega} (pole of coth)"
            )));
        }
        Ok(self.z_nonzero(omega))
    }

    /// z(ω) for ω known to be nonzero.
    #[inline]
    pub(crate) fn z_nonzero(&self, omega: f64) -> f64 {
        let z = 1.0 + 2.0 * self.occupation(omega.abs());
        z.copysign(omega)
    }
}

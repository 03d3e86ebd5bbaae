//! Mode basis of the one-dimensional cavity at its equilibrium length.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate, QuadOptions};

/// Cavity geometry and mode truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CavitySpec {
    pub d: f64,
    pub k_max: usize,
    pub omega_pl: f64,
}

impl CavitySpec {
    pub fn new(d: f64, k_max: usize, omega_pl: f64) -> Result<Self> {
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::domain(format!("cavity length d must be positive, got {d}")));
        }
        if !(omega_pl > 0.0 && omega_pl.is_finite()) {
            return Err(Error::domain(format!(
                "plasma frequency must be positive, got {omega_pl}"
            )));
        }
        if k_max == 0 {
            return Err(Error::domain("K_max must be at least 1"));
        }
        Ok(Self { d, k_max, omega_pl })
    }

    /// Truncate at the plasma cutoff: K_max = floor(ω_pl d / π).
    pub fn from_cutoff(d: f64, omega_pl: f64) -> Result<Self> {
        if !(d > 0.0 && omega_pl > 0.0) {
            return Err(Error::domain("d and omega_pl must be positive"));
        }
        let k = (omega_pl * d / PI).floor();
        if k < 1.0 {
            return Err(Error::domain(format!(
                "plasma cutoff {omega_pl} lies below the fundamental mode π/d = {}",
                PI / d
            )));
        }
        Self::new(d, k as usize, omega_pl)
    }

    /// Fundamental frequency π/d.
    pub fn omega_1(&self) -> f64 {
        PI / self.d
    }

    /// ω_k = kπ/d for 1 ≤ k ≤ K_max.
    pub fn mode_frequency(&self, k: usize) -> Result<f64> {
        if k == 0 || k > self.k_max {
            return Err(Error::domain(format!(
                "mode index {k} outside 1 ≤ k ≤ K_max = {}",
                self.k_max
            )));
        }
        Ok(self.omega(k as i64))
    }

    /// Signed-index frequency, ω_{−k} = −ω_k. No range check.
    #[inline]
    pub fn omega(&self, k: i64) -> f64 {
        k as f64 * PI / self.d
    }
}

/// Closed-form coupling g_jk = (−1)^(k+j) 2kj/(k² − j²), zero on the diagonal.
///
/// Numerator and denominator are exact integers, so `coupling(j, k)` is the
/// bitwise negation of `coupling(k, j)`.
#[inline]
pub fn coupling(j: usize, k: usize) -> f64 {
    if j == k {
        return 0.0;
    }
    let (j, k) = (j as i64, k as i64);
    let num = (2 * k * j) as f64;
    let den = (k * k - j * j) as f64;
    let v = num / den;
    if (k + j) % 2 == 0 {
        v
    } else {
        -v
    }
}

/// Dense K_max × K_max coupling matrix with 1-based accessors.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingMatrix {
    k_max: usize,
    data: Vec<f64>,
}

impl CouplingMatrix {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    /// g[j][k] with 1-based mode labels.
    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        debug_assert!(j >= 1 && k >= 1 && j <= self.k_max && k <= self.k_max);
        self.data[(j - 1) * self.k_max + (k - 1)]
    }

    /// Row-major storage, entry (j−1)·K + (k−1).
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

pub fn coupling_matrix(spec: &CavitySpec) -> CouplingMatrix {
    let n = spec.k_max;
    let data = (0..n * n)
        .into_par_iter()
        .map(|idx| coupling(idx / n + 1, idx % n + 1))
        .collect();
    CouplingMatrix { k_max: n, data }
}

/// q-derivative of φ_k(z; q) = sqrt(2/q) sin(kπz/q).
fn dphi_dq(k: usize, z: f64, q: f64) -> f64 {
    let a = k as f64 * PI / q;
    let amp = (2.0 / q).sqrt();
    -amp * (0.5 / q * (a * z).sin() + (a * z).cos() * a * z / q)
}

/// R_kj = q² ∫₀^q ∂_qφ_k ∂_qφ_j dz at q = d, by adaptive quadrature.
pub fn completeness_integral(d: f64, k: usize, j: usize) -> Result<f64> {
    let opts = QuadOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        max_intervals: 4000,
    };
    let r = integrate(|z| dphi_dq(k, z, d) * dphi_dq(j, z, d), 0.0, d, opts)?;
    Ok(d * d * r.value)
}

/// Truncated completeness sum Σ_{s ≤ S_max} g_ks g_js.
pub fn completeness_partial_sum(k: usize, j: usize, s_max: usize) -> f64 {
    let terms: Vec<f64> = (1..=s_max).map(|s| coupling(k, s) * coupling(j, s)).collect();
    crate::summation::pairwise_sum(&terms)
}

/// |Σ_{s ≤ S_max} g_ks g_js − R_kj|.
pub fn completeness_residual(spec: &CavitySpec, k: usize, j: usize, s_max: usize) -> Result<f64> {
    spec.mode_frequency(k)?;
    spec.mode_frequency(j)?;
    if s_max < k.max(j) {
        return Err(Error::domain(format!(
            "S_max = {s_max} must be at least max(k, j) = {}",
            k.max(j)
        )));
    }
    let r = completeness_integral(spec.d, k, j)?;
    Ok((completeness_partial_sum(k, j, s_max) - r).abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frequencies() {
        let c = CavitySpec::new(1.0, 8, 100.0).unwrap();
        assert_eq!(c.mode_frequency(1).unwrap(), PI);
        let c2 = CavitySpec::new(2.0, 8, 100.0).unwrap();
        assert_eq!(c2.mode_frequency(4).unwrap(), 2.0 * PI);
        assert!(c.mode_frequency(9).is_err());
        assert!(c.mode_frequency(0).is_err());
    }

    #[test]
    fn cutoff_truncation() {
        let c = CavitySpec::from_cutoff(1.0, 64.5 * PI).unwrap();
        assert_eq!(c.k_max, 64);
        assert!(CavitySpec::from_cutoff(1.0, 3.0).is_err());
        assert!(CavitySpec::new(0.0, 1, 1.0).is_err());
    }

    #[test]
    fn closed_form_entries() {
        assert_eq!(coupling(1, 2), -4.0 / 3.0);
        assert_eq!(coupling(2, 1), 4.0 / 3.0);
        assert_eq!(coupling(3, 3), 0.0);
        let g = coupling_matrix(&CavitySpec::new(1.0, 4, 10.0).unwrap());
        assert_eq!(g.get(1, 2), -4.0 / 3.0);
        assert_eq!(g.get(2, 1), 4.0 / 3.0);
    }

    #[test]
    fn diagonal_completeness_closed_form() {
        // R_11 = 1/4 + π²/3 at d = 1.
        let r = completeness_integral(1.0, 1, 1).unwrap();
        assert!((r - (0.25 + PI * PI / 3.0)).abs() < 1e-12);
    }

    #[test]
    fn truncated_sum_leaves_residual() {
        let c = CavitySpec::new(1.0, 4, 10.0).unwrap();
        let r = completeness_residual(&c, 1, 2, 2).unwrap();
        assert!(r > 0.0 && r.is_finite());
        assert!(completeness_residual(&c, 1, 3, 2).is_err());
    }
}

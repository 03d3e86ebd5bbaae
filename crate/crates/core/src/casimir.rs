//! Regularized and renormalized static field energy density.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, QuadOptions};
use crate::summation::pairwise_sum;
use crate::thermal::ThermalSpectrum;

const MAX_TERMS: usize = 50_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyDensityResult {
    pub d: f64,
    pub temperature: f64,
    pub sigma_values: Vec<f64>,
    pub regularized: Vec<f64>,
    pub freespace: Vec<f64>,
    /// regularized − freespace per σ.
    pub subtracted: Vec<f64>,
    /// σ → 0 extrapolation.
    pub renormalized: f64,
    /// Difference between the two highest extrapolation orders.
    pub model_error: f64,
    /// Powers of σ eliminated by the extrapolation.
    pub eliminated_powers: Vec<u32>,
}

fn check(d: f64, sigma: f64) -> Result<()> {
    if !(d > 0.0 && d.is_finite()) {
        return Err(Error::domain(format!("cavity length must be positive, got {d}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::domain(format!("regulator σ must be positive, got {sigma}")));
    }
    Ok(())
}

/// ε_reg(σ) = Σ_k z_k ω_k/(2d) e^{−σω_k}.
pub fn regularized_density(d: f64, thermal: &ThermalSpectrum, sigma: f64) -> Result<f64> {
    let (vacuum, thermal_part) = regularized_parts(d, thermal, sigma)?;
    Ok(vacuum + thermal_part)
}

/// Zero-point and thermal parts of the regularized sum, each summed on its own
/// so that the tail bound of one is not set by the size of the other.
fn regularized_parts(d: f64, thermal: &ThermalSpectrum, sigma: f64) -> Result<(f64, f64)> {
    check(d, sigma)?;
    let unit = PI / d;
    let vacuum = mode_sum(unit, sigma, |w| w / (2.0 * d) * (-sigma * w).exp())?;
    let t = thermal.temperature;
    let thermal_part = if t == 0.0 {
        0.0
    } else {
        mode_sum(unit, sigma + 1.0 / t, |w| {
            thermal.occupation(w) * w / d * (-sigma * w).exp()
        })?
    };
    Ok((vacuum, thermal_part))
}

/// Σ_{k≥1} term(kπ/d) for terms that eventually decay at least like e^{−rate·ω}.
/// Summation stops once the geometric bound on the remaining tail is negligible.
fn mode_sum(unit: f64, rate: f64, term: impl Fn(f64) -> f64) -> Result<f64> {
    let ratio = (-rate * unit).exp();
    let tail_factor = 1.0 / -(-rate * unit).exp_m1();
    // Terms grow until k ≈ 1/(rate·unit) and decay afterwards.
    let peak = (1.0 / (rate * unit)).ceil().min(MAX_TERMS as f64) as usize;
    let mut terms = Vec::new();
    let mut running = 0.0;
    for k in 1..=MAX_TERMS {
        let v = term(k as f64 * unit);
        terms.push(v);
        running += v;
        if k > peak && v * ratio * tail_factor <= 1e-18 * running {
            return Ok(pairwise_sum(&terms));
        }
    }
    Err(Error::numerical(format!(
        "mode sum did not converge within {MAX_TERMS} terms (decay rate {rate})"
    )))
}

/// Free-space density (1/π)∫₀^∞ z(ω)(ω/2)e^{−σω}dω.
///
/// The zero-point part integrates to 1/(2πσ²) in closed form; the thermal
/// part (1/π)∫ ω n(ω) e^{−σω} dω is computed by adaptive quadrature.
pub fn freespace_density(thermal: &ThermalSpectrum, sigma: f64) -> Result<f64> {
    let (vacuum, thermal_part) = freespace_parts(thermal, sigma)?;
    Ok(vacuum + thermal_part)
}

fn freespace_parts(thermal: &ThermalSpectrum, sigma: f64) -> Result<(f64, f64)> {
    check(1.0, sigma)?;
    let vacuum = 1.0 / (2.0 * PI * sigma * sigma);
    let t = thermal.temperature;
    if t == 0.0 {
        return Ok((vacuum, 0.0));
    }
    let rate = 1.0 / t + sigma;
    let upper = 80.0 / rate;
    let breaks: Vec<f64> = [0.0, 0.5, 2.0, 8.0, 20.0, 40.0, 80.0]
        .iter()
        .map(|f| f / rate)
        .collect();
    debug_assert_eq!(*breaks.last().unwrap(), upper);
    let f = |w: f64| {
        if w == 0.0 {
            t
        } else {
            w * thermal.occupation(w) * (-sigma * w).exp()
        }
    };
    let opts = QuadOptions {
        rel_tol: 1e-13,
        abs_tol: 0.0,
        max_intervals: 4000,
    };
    let r = integrate_with_breaks(f, &breaks, opts)?;
    Ok((vacuum, r.value / PI))
}

/// Default σ grid: three levels from 0.1 d at T = 0; six from
/// min(0.05 d, 0.05/T) at T > 0, where odd powers of σ appear.
pub fn default_sigma_grid(d: f64, thermal: &ThermalSpectrum) -> Vec<f64> {
    if thermal.temperature == 0.0 {
        (0..3).map(|i| 0.1 * d / 2f64.powi(i)).collect()
    } else {
        let s0 = (0.05 * d).min(0.05 / thermal.temperature);
        (0..6).map(|i| s0 / 2f64.powi(i)).collect()
    }
}

/// Renormalized density on the default σ grid.
pub fn renormalized_density(d: f64, thermal: &ThermalSpectrum) -> Result<EnergyDensityResult> {
    renormalized_density_on(d, thermal, &default_sigma_grid(d, thermal))
}

/// Renormalized density from a σ grid of successive halvings (largest first).
pub fn renormalized_density_on(
    d: f64,
    thermal: &ThermalSpectrum,
    sigmas: &[f64],
) -> Result<EnergyDensityResult> {
    if sigmas.len() < 2 {
        return Err(Error::domain("σ grid needs at least two points"));
    }
    for w in sigmas.windows(2) {
        if (w[0] / w[1] - 2.0).abs() > 1e-12 {
            return Err(Error::domain("σ grid must consist of successive halvings"));
        }
    }
    let rows: Vec<((f64, f64), (f64, f64))> = sigmas
        .par_iter()
        .map(|&s| Ok((regularized_parts(d, thermal, s)?, freespace_parts(thermal, s)?)))
        .collect::<Result<_>>()?;
    let regularized: Vec<f64> = rows.iter().map(|r| r.0 .0 + r.0 .1).collect();
    let freespace: Vec<f64> = rows.iter().map(|r| r.1 .0 + r.1 .1).collect();
    // Subtract like from like: only the zero-point parts cancel strongly.
    let subtracted: Vec<f64> = rows
        .iter()
        .map(|((rv, rt), (fv, ft))| (rv - fv) + (rt - ft))
        .collect();

    // At T = 0 the expansion is even in σ; otherwise every integer power occurs.
    let powers: Vec<u32> = if thermal.temperature == 0.0 {
        (1..sigmas.len() as u32).map(|p| 2 * p).collect()
    } else {
        (1..sigmas.len() as u32).collect()
    };
    let scale = regularized.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let (renormalized, model_error) = richardson(&subtracted, &powers, scale)?;
    Ok(EnergyDensityResult {
        d,
        temperature: thermal.temperature,
        sigma_values: sigmas.to_vec(),
        regularized,
        freespace,
        subtracted,
        renormalized,
        model_error,
        eliminated_powers: powers,
    })
}

/// Richardson tableau for step ratio 2, eliminating σ^p for each p in `powers`.
/// Returns the last diagonal entry and |R_{n,n} − R_{n,n−1}|.
/// `scale` is the magnitude of the terms that were cancelled to form
/// `values`; corrections below its rounding level are not treated as growth.
fn richardson(values: &[f64], powers: &[u32], scale: f64) -> Result<(f64, f64)> {
    let n = values.len();
    let mut prev: Vec<f64> = values.to_vec();
    let mut corrections = Vec::new();
    for (level, &p) in powers.iter().enumerate().take(n - 1) {
        let f = 2f64.powi(p as i32);
        let next: Vec<f64> = (0..prev.len() - 1)
            .map(|i| (f * prev[i + 1] - prev[i]) / (f - 1.0))
            .collect();
        let last = *next.last().expect("tableau row is non-empty");
        corrections.push((last - prev.last().copied().unwrap()).abs());
        prev = next;
        if prev.len() == 1 {
            debug_assert_eq!(level + 2, n);
        }
    }
    let value = prev[0];
    let floor = (1e-13 * value.abs()).max(1e3 * f64::EPSILON * scale).max(1e-300);
    for w in corrections.windows(2) {
        if w[1] > w[0] && w[1] > floor {
            return Err(Error::numerical(format!(
                "σ extrapolation unstable: corrections grow ({:.3e} then {:.3e}); use a smaller σ grid",
                w[0], w[1]
            )));
        }
    }
    let model_error = corrections.last().copied().unwrap_or(f64::INFINITY);
    Ok((value, model_error))
}

/// ε_ren(T = 0) = −π/(24 d²).
pub fn zero_temperature_density(d: f64) -> f64 {
    -PI / (24.0 * d * d)
}

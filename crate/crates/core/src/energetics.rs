//! Dissipated, radiated and transition quantities, and the energy balance.
//!
//! Discrete spectral sums run over signed mode pairs (k, j), |k|, |j| ≤ K_max,
//! at sum frequency Ω = ω_k + ω_j with prefactor 2π²/d²; the continuum forms
//! replace (2π²/d²)Σ by 2∬ dω dω′.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{histories_with, MemoryMethod};
use crate::error::{Error, Result};
use crate::kernels::MirrorKernels;
use crate::quadrature::{integrate_try, integrate_with_breaks, QuadOptions};
use crate::summation::pairwise_sum;
use crate::trajectory::{spectrum_unchecked, Spectrum, Trajectory};

/// Denominator of the balance residual when E_trans vanishes identically.
pub const RESIDUAL_FLOOR: f64 = 1e-30;

/// Transition probability above which a warning is issued.
pub const PERTURBATIVE_WARNING: f64 = 0.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FrequencyMode {
    Discrete,
    Continuum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Precision {
    Double,
    /// Analytic resampling and phase set-up in MPFR at the given mantissa
    /// width; memory convolutions in 256-bit fixed point.
    Extended { bits: u32 },
}

/// Power |x̃(ω)|² seen by the spectral sums.
pub trait PowerSpectrum: Sync {
    fn power(&self, omega: f64) -> f64;
}

impl PowerSpectrum for Spectrum {
    fn power(&self, omega: f64) -> f64 {
        self.power_at(omega)
    }
}

impl<F: Fn(f64) -> f64 + Sync> PowerSpectrum for F {
    fn power(&self, omega: f64) -> f64 {
        self(omega)
    }
}

/// Power tabulated at the harmonics hπ/d, h = 1..=len.
#[derive(Debug, Clone, PartialEq)]
pub struct HarmonicPower {
    pub unit: f64,
    pub values: Vec<f64>,
}

impl HarmonicPower {
    pub fn sample(power: &dyn PowerSpectrum, unit: f64, h_max: u32) -> Self {
        let values = (1..=h_max)
            .into_par_iter()
            .map(|h| power.power(h as f64 * unit))
            .collect();
        Self { unit, values }
    }

    /// |x̃|² at harmonic h; zero at h = 0 (only the static channel lives there).
    fn at(&self, h: i64) -> f64 {
        if h == 0 {
            0.0
        } else {
            self.values[h.unsigned_abs() as usize - 1]
        }
    }
}

/// Contribution of one signed pair to E_trans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeContribution {
    pub k: i64,
    pub j: i64,
    pub omega_sum: f64,
    pub contribution: f64,
}

/// Frequency-domain energies split into the k = j and k ≠ j blocks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralEnergies {
    pub e_x: f64,
    pub e_xdot: f64,
    pub e_diss: f64,
    pub e_trans: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeEnergies {
    pub e_x: f64,
    pub e_xdot: f64,
}

impl TimeEnergies {
    pub fn total(&self) -> f64 {
        self.e_x + self.e_xdot
    }
}

fn prefactor(kernels: &MirrorKernels) -> f64 {
    let d = kernels.cavity().d;
    2.0 * std::f64::consts::PI.powi(2) / (d * d)
}

/// Per-pair contributions (2π²/d²) Ω (Ω² Im μ_kj) |x̃_Ω|² in table order.
pub fn mode_breakdown(kernels: &MirrorKernels, power: &HarmonicPower) -> Vec<ModeContribution> {
    let c = prefactor(kernels);
    kernels
        .spectral_table()
        .par_iter()
        .map(|e| ModeContribution {
            k: e.k,
            j: e.j,
            omega_sum: e.omega_sum,
            contribution: c * e.omega_sum * e.weight.w_mu_im * power.at(e.k + e.j),
        })
        .collect()
}

fn harmonic_power(spectrum: &dyn PowerSpectrum, kernels: &MirrorKernels) -> HarmonicPower {
    HarmonicPower::sample(spectrum, kernels.cavity().omega_1(), 2 * kernels.k_max() as u32)
}

fn energies_from_breakdown(rows: &[ModeContribution]) -> SpectralEnergies {
    let diag: Vec<f64> = rows.iter().filter(|r| r.k == r.j).map(|r| r.contribution).collect();
    let off: Vec<f64> = rows.iter().filter(|r| r.k != r.j).map(|r| r.contribution).collect();
    let all: Vec<f64> = rows.iter().map(|r| r.contribution).collect();
    let e_trans = pairwise_sum(&all);
    SpectralEnergies {
        e_x: -pairwise_sum(&diag),
        e_xdot: -pairwise_sum(&off),
        e_diss: -e_trans,
        e_trans,
    }
}

fn spectral_energies_discrete(kernels: &MirrorKernels, power: &HarmonicPower) -> SpectralEnergies {
    energies_from_breakdown(&mode_breakdown(kernels, power))
}

fn check_bandwidth(spectrum: &Spectrum, kernels: &MirrorKernels) -> Option<String> {
    let first = 2.0 * kernels.cavity().omega_1();
    (spectrum.nyquist() < first).then(|| {
        format!(
            "spectrum bandwidth {:.3e} lies below the first sum frequency {first:.3e}; energies are ≈ 0",
            spectrum.nyquist()
        )
    })
}

/// Inner continuum integrals over ω′ = u − ω at fixed sum frequency u:
/// ∫ ω(u−ω)(z(ω)+z(u−ω))/4 dω and ∫ ω(u−ω)(z(ω)z(u−ω)+1)/4 dω,
/// restricted to |ω|, |u−ω| ≤ ω_pl.
fn inner_continuum(kernels: &MirrorKernels, u: f64, which: Weight, opts: QuadOptions) -> Result<f64> {
    let wpl = kernels.cavity().omega_pl;
    let lo = (-wpl).max(u - wpl);
    let hi = wpl.min(u + wpl);
    if !(lo < hi) {
        return Ok(0.0);
    }
    let th = *kernels.thermal();
    let f = |w: f64| {
        let wp = u - w;
        if w == 0.0 || wp == 0.0 {
            return 0.0;
        }
        let (z1, z2) = (th.z_nonzero(w), th.z_nonzero(wp));
        match which {
            Weight::Mu => w * wp * (z1 + z2) / 4.0,
            Weight::Nu => w * wp * (z1 * z2 + 1.0) / 4.0,
        }
    };
    let mut pts = vec![lo];
    for p in [0.0, u] {
        if p > lo && p < hi && !pts.contains(&p) {
            pts.push(p);
        }
    }
    pts.push(hi);
    pts.sort_by(f64::total_cmp);
    Ok(integrate_with_breaks(f, &pts, opts)?.value)
}

#[derive(Debug, Clone, Copy)]
enum Weight {
    Mu,
    Nu,
}

/// 4 ∫₀^{2ω_pl} du |x̃_u|² u^p I(u), using evenness of the integrand in u.
fn continuum(kernels: &MirrorKernels, power: &dyn PowerSpectrum, which: Weight) -> Result<f64> {
    let wpl = kernels.cavity().omega_pl;
    let inner = QuadOptions {
        rel_tol: 1e-11,
        abs_tol: 1e-300,
        max_intervals: 2000,
    };
    let outer = QuadOptions {
        rel_tol: 1e-9,
        abs_tol: 1e-300,
        max_intervals: 4000,
    };
    let f = |u: f64| -> Result<f64> {
        let p = power.power(u);
        if p == 0.0 {
            return Ok(0.0);
        }
        let i = inner_continuum(kernels, u, which, inner)?;
        Ok(match which {
            Weight::Mu => p * u * i,
            Weight::Nu => p * i,
        })
    };
    let pts = [0.0, wpl, 2.0 * wpl];
    Ok(4.0 * integrate_try(f, &pts, outer)?.value)
}

/// E_diss from the spectrum: discrete double sum (k = j block → E_x, k ≠ j → E_ẋ)
/// or the continuum integral (reported in `e_diss`, channels not separated).
pub fn dissipated_energy_freq(
    power: &dyn PowerSpectrum,
    kernels: &MirrorKernels,
    mode: FrequencyMode,
) -> Result<SpectralEnergies> {
    match mode {
        FrequencyMode::Discrete => Ok(spectral_energies_discrete(
            kernels,
            &harmonic_power(power, kernels),
        )),
        FrequencyMode::Continuum => {
            let e_trans = continuum(kernels, power, Weight::Mu)?;
            Ok(SpectralEnergies {
                e_x: f64::NAN,
                e_xdot: f64::NAN,
                e_diss: -e_trans,
                e_trans,
            })
        }
    }
}

/// E_trans = (2π²/d²) Σ Ω³ Im μ_kj |x̃_Ω|² (or its continuum form).
pub fn radiated_energy(
    power: &dyn PowerSpectrum,
    kernels: &MirrorKernels,
    mode: FrequencyMode,
) -> Result<f64> {
    Ok(dissipated_energy_freq(power, kernels, mode)?.e_trans)
}

/// P_trans = (2π²/d²) Σ_{k ≠ −j} Ω² ν_kj |x̃_Ω|² (or 2∬ of the regularized ν weight).
///
/// The static channel k = −j (Ω = 0) is excluded from the discrete sum.
pub fn transition_probability(
    power: &dyn PowerSpectrum,
    kernels: &MirrorKernels,
    mode: FrequencyMode,
) -> Result<f64> {
    let p = match mode {
        FrequencyMode::Discrete => {
            let hp = harmonic_power(power, kernels);
            let c = prefactor(kernels);
            let terms: Vec<f64> = kernels
                .spectral_table()
                .par_iter()
                .map(|e| {
                    if e.k == -e.j {
                        0.0
                    } else {
                        c * e.weight.w_nu * hp.at(e.k + e.j)
                    }
                })
                .collect();
            pairwise_sum(&terms)
        }
        FrequencyMode::Continuum => continuum(kernels, power, Weight::Nu)?,
    };
    if p > PERTURBATIVE_WARNING {
        log::warn!("transition probability {p:.3} exceeds {PERTURBATIVE_WARNING}; perturbative result is unreliable");
    }
    Ok(p)
}

/// Time-domain (E_x, E_ẋ) = trapezoidal ∫ ẋ F dt over the grid.
pub fn dissipated_energy_time(
    traj: &Trajectory,
    kernels: &MirrorKernels,
    method: MemoryMethod,
) -> Result<TimeEnergies> {
    let v = traj.velocity()?;
    let lines = kernels.force_lines();
    let (fx, fv) = histories_with(&traj.x, &v, traj.dt, &lines, kernels.cavity().d, method);
    Ok(work_integrals(&v, &fx, &fv, traj.dt))
}

pub(crate) fn work_integrals(v: &[f64], fx: &[f64], fv: &[f64], dt: f64) -> TimeEnergies {
    let n = v.len();
    let (mut ex, mut ev) = (0.0, 0.0);
    for i in 0..n {
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        ex += w * v[i] * fx[i] * dt;
        ev += w * v[i] * fv[i] * dt;
    }
    TimeEnergies { e_x: ex, e_xdot: ev }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BalanceOptions {
    pub method: MemoryMethod,
    pub precision: Precision,
    /// Residual above which [`EnergyReport::check`] fails.
    pub tolerance: f64,
}

impl Default for BalanceOptions {
    fn default() -> Self {
        Self {
            method: MemoryMethod::Recursive,
            precision: Precision::Double,
            tolerance: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub e_x: f64,
    pub e_xdot: f64,
    pub e_diss_time: f64,
    pub e_x_freq: f64,
    pub e_xdot_freq: f64,
    pub e_diss_freq: f64,
    pub p_trans: f64,
    pub e_trans: f64,
    /// |E_trans + E_diss_time| / |E_trans| (denominator 1e−30 when E_trans = 0).
    pub balance_residual: f64,
    pub tolerance: f64,
    pub precision: Precision,
    #[serde(skip)]
    pub mode_breakdown: Vec<ModeContribution>,
    pub warnings: Vec<String>,
}

impl EnergyReport {
    pub fn passed(&self) -> bool {
        self.balance_residual <= self.tolerance
    }

    /// Error with the per-channel breakdown when the residual exceeds the tolerance.
    pub fn check(&self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        Err(Error::numerical(format!(
            "energy balance failed: residual {:.3e} > {:.1e} (time: E_x = {:.6e}, E_xdot = {:.6e}; spectral: E_x = {:.6e}, E_xdot = {:.6e}; E_trans = {:.6e})",
            self.balance_residual,
            self.tolerance,
            self.e_x,
            self.e_xdot,
            self.e_x_freq,
            self.e_xdot_freq,
            self.e_trans
        )))
    }
}

/// |E_trans + E_diss| / |E_trans|. The floor only replaces an exactly zero
/// E_trans: slow pulses legitimately radiate far less than any fixed floor.
pub fn residual(e_trans: f64, e_diss_time: f64) -> f64 {
    let den = if e_trans == 0.0 { RESIDUAL_FLOOR } else { e_trans.abs() };
    (e_trans + e_diss_time).abs() / den
}

/// Assemble time- and frequency-domain energies on one trajectory.
pub fn balance_report(
    traj: &Trajectory,
    kernels: &MirrorKernels,
    options: &BalanceOptions,
) -> Result<EnergyReport> {
    let mut warnings = Vec::new();
    if !traj.is_pulse_like() {
        let (a, b) = traj.endpoint_ratios();
        let msg = format!(
            "trajectory does not decay at the grid ends (|x|/max = {a:.2e}, {b:.2e}); the balance is not expected to close"
        );
        log::warn!("{msg}");
        warnings.push(msg);
    }
    if let Some(msg) = traj.displacement_warning(kernels.cavity().d, crate::trajectory::DISPLACEMENT_WARNING) {
        warnings.push(msg);
    }
    let h_max = 2 * kernels.k_max() as u32;
    let unit = kernels.cavity().omega_1();
    let (time, power) = match options.precision {
        Precision::Double => {
            let spectrum = spectrum_unchecked(traj);
            if let Some(w) = check_bandwidth(&spectrum, kernels) {
                warnings.push(w);
            }
            let time = dissipated_energy_time(traj, kernels, options.method)?;
            (time, HarmonicPower::sample(&spectrum, unit, h_max))
        }
        Precision::Extended { bits } => extended(traj, kernels, h_max, bits)?,
    };
    let rows = mode_breakdown(kernels, &power);
    let spectral = energies_from_breakdown(&rows);
    let c = prefactor(kernels);
    let p_terms: Vec<f64> = kernels
        .spectral_table()
        .iter()
        .map(|e| if e.k == -e.j { 0.0 } else { c * e.weight.w_nu * power.at(e.k + e.j) })
        .collect();
    let p_trans = pairwise_sum(&p_terms);
    if p_trans > PERTURBATIVE_WARNING {
        warnings.push(format!("transition probability {p_trans:.3} exceeds {PERTURBATIVE_WARNING}"));
    }
    let e_diss_time = time.total();
    Ok(EnergyReport {
        e_x: time.e_x,
        e_xdot: time.e_xdot,
        e_diss_time,
        e_x_freq: spectral.e_x,
        e_xdot_freq: spectral.e_xdot,
        e_diss_freq: spectral.e_diss,
        p_trans,
        e_trans: spectral.e_trans,
        balance_residual: residual(spectral.e_trans, e_diss_time),
        tolerance: options.tolerance,
        precision: options.precision,
        mode_breakdown: rows,
        warnings,
    })
}

#[cfg(feature = "mpfr")]
fn extended(
    traj: &Trajectory,
    kernels: &MirrorKernels,
    h_max: u32,
    bits: u32,
) -> Result<(TimeEnergies, HarmonicPower)> {
    let lines = kernels.force_lines();
    let pass = crate::precise::extended_pass(traj, kernels.cavity().d, &lines, h_max, bits)?;
    Ok((
        TimeEnergies {
            e_x: pass.e_x,
            e_xdot: pass.e_xdot,
        },
        HarmonicPower {
            unit: kernels.cavity().omega_1(),
            values: pass.power,
        },
    ))
}

#[cfg(not(feature = "mpfr"))]
fn extended(
    _traj: &Trajectory,
    _kernels: &MirrorKernels,
    _h_max: u32,
    _bits: u32,
) -> Result<(TimeEnergies, HarmonicPower)> {
    Err(Error::domain(
        "extended precision requires the `mpfr` feature",
    ))
}

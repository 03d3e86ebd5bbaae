//! Microscopic, pair and mirror kernels, their spectral coefficients, and
//! the sinusoidal line representation used by the memory forces.

use rayon::prelude::*;
use serde::Serialize;

use crate::cavity::{coupling_matrix, CavitySpec, CouplingMatrix};
use crate::error::{Error, Result};
use crate::summation::pairwise_sum;
use crate::thermal::ThermalSpectrum;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairKernels {
    pub nu_plus: f64,
    pub nu_minus: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
}

/// (N₊⁰⁰, N₋⁰⁰, M₊⁰⁰) at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kernel00 {
    pub n_plus: f64,
    pub n_minus: f64,
    pub m_plus: f64,
}

/// (N₊¹¹ + N₋¹¹, M₊¹¹ + M₋¹¹) at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kernel11 {
    pub n: f64,
    pub m: f64,
}

/// ν_kj (real) and μ_kj (purely imaginary, stored as Im μ_kj).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralCoefficient {
    pub nu: f64,
    pub im_mu: f64,
}

/// (ω_k+ω_j)²ν_kj and (ω_k+ω_j)²μ_kj in cancelled form, finite for k = −j.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularizedWeight {
    pub w_nu: f64,
    pub w_mu_im: f64,
}

/// One row of the signed spectral table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralEntry {
    pub k: i64,
    pub j: i64,
    pub omega_sum: f64,
    pub weight: RegularizedWeight,
    /// `None` on the singular channel k = −j.
    pub coefficient: Option<SpectralCoefficient>,
}

/// A sinusoid `amplitude · sin(harmonic · unit · t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Line {
    pub harmonic: u32,
    pub amplitude: f64,
}

/// A kernel written as a finite sine series on the harmonic grid `unit = π/d`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LineSeries {
    pub unit: f64,
    pub lines: Vec<Line>,
}

impl LineSeries {
    pub fn frequency(&self, line: &Line) -> f64 {
        line.harmonic as f64 * self.unit
    }

    /// Σ a sin(Ω t).
    pub fn eval(&self, t: f64) -> f64 {
        let terms: Vec<f64> = self
            .lines
            .iter()
            .map(|l| l.amplitude * (self.frequency(l) * t).sin())
            .collect();
        pairwise_sum(&terms)
    }

    /// Σ a Ω cos(Ω t), the analytic time derivative.
    pub fn eval_rate(&self, t: f64) -> f64 {
        let terms: Vec<f64> = self
            .lines
            .iter()
            .map(|l| {
                let w = self.frequency(l);
                l.amplitude * w * (w * t).cos()
            })
            .collect();
        pairwise_sum(&terms)
    }

    pub fn max_frequency(&self) -> f64 {
        self.lines
            .iter()
            .map(|l| self.frequency(l))
            .fold(0.0, f64::max)
    }

    fn from_contributions(unit: f64, mut contrib: Vec<(u32, f64)>) -> Self {
        // Stable sort keeps generation order within a harmonic, so the
        // aggregation below is deterministic.
        contrib.sort_by_key(|c| c.0);
        let mut lines = Vec::new();
        let mut i = 0;
        while i < contrib.len() {
            let h = contrib[i].0;
            let mut end = i;
            while end < contrib.len() && contrib[end].0 == h {
                end += 1;
            }
            let amps: Vec<f64> = contrib[i..end].iter().map(|c| c.1).collect();
            let amplitude = pairwise_sum(&amps);
            if amplitude != 0.0 {
                lines.push(Line {
                    harmonic: h,
                    amplitude,
                });
            }
            i = end;
        }
        Self { unit, lines }
    }
}

/// The two memory kernels entering the optical forces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ForceLines {
    /// M₊⁰⁰, convolved with x.
    pub m00: LineSeries,
    /// M₊¹¹ + M₋¹¹, whose derivative is convolved with ẋ.
    pub m11: LineSeries,
}

/// Kernel machinery for a truncated cavity at fixed temperature.
#[derive(Debug, Clone)]
pub struct MirrorKernels {
    cavity: CavitySpec,
    thermal: ThermalSpectrum,
    coupling: CouplingMatrix,
    omega: Vec<f64>,
    occ: Vec<f64>,
    z: Vec<f64>,
    table: Vec<SpectralEntry>,
}

impl MirrorKernels {
    pub fn new(cavity: CavitySpec, thermal: ThermalSpectrum) -> Self {
        let k_max = cavity.k_max;
        let omega: Vec<f64> = (1..=k_max).map(|k| cavity.omega(k as i64)).collect();
        let occ: Vec<f64> = omega.iter().map(|&w| thermal.occupation(w)).collect();
        let z: Vec<f64> = occ.iter().map(|&n| 1.0 + 2.0 * n).collect();
        let coupling = coupling_matrix(&cavity);
        let mut kernels = Self {
            cavity,
            thermal,
            coupling,
            omega,
            occ,
            z,
            table: Vec::new(),
        };
        let width = 2 * k_max;
        let table: Vec<SpectralEntry> = (0..width * width)
            .into_par_iter()
            .map(|idx| {
                let k = signed_index(idx / width, k_max);
                let j = signed_index(idx % width, k_max);
                kernels.entry(k, j)
            })
            .collect();
        kernels.table = table;
        kernels
    }

    pub fn cavity(&self) -> &CavitySpec {
        &self.cavity
    }

    pub fn thermal(&self) -> &ThermalSpectrum {
        &self.thermal
    }

    pub fn coupling(&self) -> &CouplingMatrix {
        &self.coupling
    }

    pub fn k_max(&self) -> usize {
        self.cavity.k_max
    }

    /// Thermal factor z_k of mode k ≥ 1.
    pub fn z_mode(&self, k: usize) -> f64 {
        self.z[k - 1]
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        self.cavity.mode_frequency(k).map(|_| ())
    }

    fn check_signed(&self, k: i64) -> Result<()> {
        if k == 0 || k.unsigned_abs() as usize > self.cavity.k_max {
            return Err(Error::domain(format!(
                "signed mode index {k} outside 1 ≤ |k| ≤ K_max = {}",
                self.cavity.k_max
            )));
        }
        Ok(())
    }

    // Thermal combinations written through occupations so that they are
    // accurate even when z_k ≈ z_j.

    /// z_k + z_j for modes k, j ≥ 1.
    fn z_sum(&self, k: usize, j: usize) -> f64 {
        2.0 + 2.0 * (self.occ[k - 1] + self.occ[j - 1])
    }

    /// z_k − z_j for modes k, j ≥ 1.
    fn z_diff(&self, k: usize, j: usize) -> f64 {
        2.0 * (self.occ[k - 1] - self.occ[j - 1])
    }

    /// z_k z_j + 1 for modes k, j ≥ 1.
    fn z_prod_plus(&self, k: usize, j: usize) -> f64 {
        let (a, b) = (self.occ[k - 1], self.occ[j - 1]);
        2.0 + 2.0 * (a + b) + 4.0 * a * b
    }

    /// z_k z_j − 1 for modes k, j ≥ 1.
    fn z_prod_minus(&self, k: usize, j: usize) -> f64 {
        let (a, b) = (self.occ[k - 1], self.occ[j - 1]);
        2.0 * (a + b) + 4.0 * a * b
    }

    /// (z_k + z_j, z_k z_j + 1) for signed indices with z_{−k} = −z_k.
    fn signed_factors(&self, k: i64, j: i64) -> (f64, f64) {
        let (ka, ja) = (k.unsigned_abs() as usize, j.unsigned_abs() as usize);
        match (k > 0, j > 0) {
            (true, true) => (self.z_sum(ka, ja), self.z_prod_plus(ka, ja)),
            (false, false) => (-self.z_sum(ka, ja), self.z_prod_plus(ka, ja)),
            (true, false) => (self.z_diff(ka, ja), -self.z_prod_minus(ka, ja)),
            (false, true) => (self.z_diff(ja, ka), -self.z_prod_minus(ka, ja)),
        }
    }

    fn entry(&self, k: i64, j: i64) -> SpectralEntry {
        let (wk, wj) = (self.cavity.omega(k), self.cavity.omega(j));
        let (s, p) = self.signed_factors(k, j);
        let weight = RegularizedWeight {
            w_nu: wk * wj * p / 4.0,
            w_mu_im: wk * wj * s / 4.0,
        };
        let coefficient = (k != -j).then(|| {
            let sum = wk + wj;
            let q = wk * wj / (4.0 * sum * sum);
            SpectralCoefficient {
                nu: q * p,
                im_mu: q * s,
            }
        });
        SpectralEntry {
            k,
            j,
            omega_sum: wk + wj,
            weight,
            coefficient,
        }
    }

    /// Signed spectral table, row-major over k, j ∈ {−K..−1, 1..K}.
    pub fn spectral_table(&self) -> &[SpectralEntry] {
        &self.table
    }

    fn table_entry(&self, k: i64, j: i64) -> &SpectralEntry {
        let width = 2 * self.cavity.k_max;
        &self.table[table_position(k, self.cavity.k_max) * width + table_position(j, self.cavity.k_max)]
    }

    /// ν_k(t) = z_k/(2ω_k) cos(ω_k t).
    pub fn micro_nu(&self, k: usize, t: f64) -> Result<f64> {
        self.check_mode(k)?;
        let w = self.omega[k - 1];
        Ok(self.z[k - 1] / (2.0 * w) * (w * t).cos())
    }

    /// μ_k(t) = −sin(ω_k t)/(2ω_k).
    pub fn micro_mu(&self, k: usize, t: f64) -> Result<f64> {
        self.check_mode(k)?;
        let w = self.omega[k - 1];
        Ok(-(w * t).sin() / (2.0 * w))
    }

    /// ν±⁽²⁾ and μ±⁽²⁾ for the mode pair (k, j).
    pub fn pair_kernels(&self, k: usize, j: usize, t: f64) -> Result<PairKernels> {
        self.check_mode(k)?;
        self.check_mode(j)?;
        let (wk, wj) = (self.omega[k - 1], self.omega[j - 1]);
        let (sp, sm) = (((wk + wj) * t).sin_cos(), ((wk - wj) * t).sin_cos());
        Ok(PairKernels {
            nu_plus: self.z_prod_plus(k, j) / 8.0 * sp.1,
            nu_minus: self.z_prod_minus(k, j) / 8.0 * sm.1,
            mu_plus: -self.z_sum(k, j) / 8.0 * sp.0,
            mu_minus: self.z_diff(k, j) / 8.0 * sm.0,
        })
    }

    /// N±⁰⁰(t) = Σ_k ω_k² ν±⁽²⁾(t;k,k), M₊⁰⁰(t) = Σ_k ω_k² μ₊⁽²⁾(t;k,k).
    pub fn kernel_00(&self, t: f64) -> Kernel00 {
        let n = self.cavity.k_max;
        let mut np = Vec::with_capacity(n);
        let mut nm = Vec::with_capacity(n);
        let mut mp = Vec::with_capacity(n);
        for k in 1..=n {
            let w = self.omega[k - 1];
            let w2 = w * w;
            let (s, c) = (2.0 * w * t).sin_cos();
            np.push(w2 * self.z_prod_plus(k, k) / 8.0 * c);
            nm.push(w2 * self.z_prod_minus(k, k) / 8.0);
            mp.push(-w2 * self.z_sum(k, k) / 8.0 * s);
        }
        Kernel00 {
            n_plus: pairwise_sum(&np),
            n_minus: pairwise_sum(&nm),
            m_plus: pairwise_sum(&mp),
        }
    }

    /// Channel weights g²(ω_k ∓ ω_j)²/(ω_k ω_j), simplified to 4kj/(k ± j)².
    fn channel_weights(k: usize, j: usize) -> (f64, f64) {
        let (k, j) = (k as f64, j as f64);
        let plus = 4.0 * k * j / ((k + j) * (k + j));
        let minus = 4.0 * k * j / ((k - j) * (k - j));
        (plus, minus)
    }

    /// N¹¹ and M¹¹ summed over both channels.
    pub fn kernel_11(&self, t: f64) -> Kernel11 {
        let n = self.cavity.k_max;
        let mut ns = Vec::with_capacity(2 * n * n);
        let mut ms = Vec::with_capacity(2 * n * n);
        for k in 1..=n {
            for j in 1..=n {
                if k == j {
                    continue;
                }
                let (wk, wj) = (self.omega[k - 1], self.omega[j - 1]);
                let (cp, cm) = Self::channel_weights(k, j);
                let (sp, kp) = ((wk + wj) * t).sin_cos();
                let (sm, km) = ((wk - wj) * t).sin_cos();
                ns.push(cp * self.z_prod_plus(k, j) / 8.0 * kp);
                ns.push(cm * self.z_prod_minus(k, j) / 8.0 * km);
                ms.push(-cp * self.z_sum(k, j) / 8.0 * sp);
                ms.push(cm * self.z_diff(k, j) / 8.0 * sm);
            }
        }
        Kernel11 {
            n: pairwise_sum(&ns),
            m: pairwise_sum(&ms),
        }
    }

    /// d/dt (M₊¹¹ + M₋¹¹), differentiated term by term.
    pub fn kernel_11_rate(&self, t: f64) -> f64 {
        let n = self.cavity.k_max;
        let mut ms = Vec::with_capacity(2 * n * n);
        for k in 1..=n {
            for j in 1..=n {
                if k == j {
                    continue;
                }
                let (wk, wj) = (self.omega[k - 1], self.omega[j - 1]);
                let (cp, cm) = Self::channel_weights(k, j);
                ms.push(-cp * self.z_sum(k, j) / 8.0 * (wk + wj) * ((wk + wj) * t).cos());
                ms.push(cm * self.z_diff(k, j) / 8.0 * (wk - wj) * ((wk - wj) * t).cos());
            }
        }
        pairwise_sum(&ms)
    }

    /// ν_kj⁽²⁾ and μ_kj⁽²⁾ for signed indices; k = −j is singular.
    pub fn spectral_coefficients(&self, k: i64, j: i64) -> Result<SpectralCoefficient> {
        self.check_signed(k)?;
        self.check_signed(j)?;
        self.table_entry(k, j).coefficient.ok_or_else(|| {
            Error::domain(format!(
                "spectral coefficient ({k}, {j}) lies on the singular channel ω_k + ω_j = 0; use regularized_weight"
            ))
        })
    }

    /// (ω_k+ω_j)² ν_kj⁽²⁾ and (ω_k+ω_j)² μ_kj⁽²⁾, finite everywhere.
    pub fn regularized_weight(&self, k: i64, j: i64) -> Result<RegularizedWeight> {
        self.check_signed(k)?;
        self.check_signed(j)?;
        Ok(self.table_entry(k, j).weight)
    }

    /// Relative violation of ν_kj = −i z(ω_k+ω_j) μ_kj.
    pub fn fdt_residual(&self, k: i64, j: i64) -> Result<f64> {
        let c = self.spectral_coefficients(k, j)?;
        let sum = self.cavity.omega(k) + self.cavity.omega(j);
        let rhs = self.thermal.z(sum)? * c.im_mu;
        let scale = c.nu.abs().max(rhs.abs());
        if scale == 0.0 {
            return Ok(0.0);
        }
        Ok((c.nu - rhs).abs() / scale)
    }

    /// Δm(σ) = Σ_{k,j} g_kj² ν_k(0) e^{−σω_k}. Diagnostic only.
    pub fn mass_shift(&self, sigma: f64) -> Result<f64> {
        if !(sigma > 0.0) {
            return Err(Error::domain(format!("regulator σ must be positive, got {sigma}")));
        }
        let n = self.cavity.k_max;
        let mut terms = Vec::with_capacity(n * n);
        for k in 1..=n {
            let w = self.omega[k - 1];
            let nu0 = self.z[k - 1] / (2.0 * w) * (-sigma * w).exp();
            for j in 1..=n {
                let g = self.coupling.get(k, j);
                terms.push(g * g * nu0);
            }
        }
        Ok(pairwise_sum(&terms))
    }

    /// Sine-series form of M₊⁰⁰ and M₊¹¹ + M₋¹¹ on the harmonic grid π/d.
    pub fn force_lines(&self) -> ForceLines {
        let n = self.cavity.k_max;
        let unit = self.cavity.omega_1();
        let m00 = (1..=n)
            .map(|k| {
                let w = self.omega[k - 1];
                ((2 * k) as u32, -w * w * self.z_sum(k, k) / 8.0)
            })
            .collect();
        let mut m11 = Vec::with_capacity(n * n);
        for k in 1..=n {
            for j in 1..=n {
                if k == j {
                    continue;
                }
                let (cp, cm) = Self::channel_weights(k, j);
                m11.push(((k + j) as u32, -cp * self.z_sum(k, j) / 8.0));
                if k > j {
                    // (k, j) and (j, k) give identical sines at k − j.
                    m11.push(((k - j) as u32, 2.0 * cm * self.z_diff(k, j) / 8.0));
                }
            }
        }
        ForceLines {
            m00: LineSeries::from_contributions(unit, m00),
            m11: LineSeries::from_contributions(unit, m11),
        }
    }
}

fn signed_index(pos: usize, k_max: usize) -> i64 {
    if pos < k_max {
        pos as i64 - k_max as i64
    } else {
        (pos - k_max) as i64 + 1
    }
}

fn table_position(k: i64, k_max: usize) -> usize {
    if k < 0 {
        (k + k_max as i64) as usize
    } else {
        k as usize + k_max - 1
    }
}

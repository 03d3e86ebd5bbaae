//! Run configuration read from TOML.
//!
//! Unknown keys are rejected. Temperatures are given in units of the
//! fundamental mode frequency ω₁ = π/d; everything else is in natural units.
//! [`RunConfig::resolved`] fills every default so the effective configuration
//! can be written next to the results.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cavity::CavitySpec;
use crate::dynamics::{MirrorSpec, Potential};
use crate::energetics::{BalanceOptions, Precision};
use crate::error::{Error, Result};
use crate::thermal::ThermalSpectrum;
use crate::trajectory::{gaussian_pulse, windowed_sine, TimeGrid, Trajectory};
use crate::MemoryMethod;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub cavity: CavityConfig,
    #[serde(default)]
    pub thermal: ThermalConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mirror: Option<MirrorConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trajectory: Option<TrajectoryConfig>,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub balance: BalanceConfig,
    #[serde(default)]
    pub kernels: KernelSampling,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CavityConfig {
    pub d: f64,
    pub omega_pl: f64,
    /// Defaults to ⌊ω_pl d/π⌋.
    #[serde(rename = "K_max", default, skip_serializing_if = "Option::is_none")]
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ThermalConfig {
    /// Temperature in units of ω₁.
    #[serde(rename = "T", default)]
    pub t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PotentialKind {
    Harmonic,
    Free,
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MirrorConfig {
    pub m: f64,
    #[serde(default = "harmonic")]
    pub potential: PotentialKind,
    #[serde(rename = "Omega", default, skip_serializing_if = "Option::is_none")]
    pub omega: Option<f64>,
    /// CSV with columns x,V,dV; relative paths are taken from the config file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<PathBuf>,
    #[serde(default)]
    pub x0: f64,
    #[serde(default)]
    pub v0: f64,
}

fn harmonic() -> PotentialKind {
    PotentialKind::Harmonic
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Defaults to 1/40 of the fastest kernel period.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Grid spans [−half_width, half_width]; the default depends on the shape.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub half_width: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum TrajectoryConfig {
    GaussianPulse {
        amplitude: f64,
        tau: f64,
        #[serde(default)]
        grid: GridConfig,
    },
    WindowedSine {
        amplitude: f64,
        omega_d: f64,
        n_cycles: u32,
        #[serde(default = "one")]
        ramp: f64,
        #[serde(default)]
        grid: GridConfig,
    },
    File {
        path: PathBuf,
    },
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default = "default_steps")]
    pub steps: usize,
    /// Use the sliding recursion for the memory integrals.
    #[serde(default)]
    pub accel: bool,
    #[serde(default)]
    pub include_casimir_force: bool,
}

fn default_steps() -> usize {
    10_000
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            dt: None,
            steps: default_steps(),
            accel: false,
            include_casimir_force: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionKind {
    Double,
    Extended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BalanceConfig {
    #[serde(default = "double")]
    pub precision: PrecisionKind,
    #[serde(default = "default_bits")]
    pub bits: u32,
    #[serde(default = "default_tolerance")]
    pub tolerance: f64,
}

fn double() -> PrecisionKind {
    PrecisionKind::Double
}

fn default_bits() -> u32 {
    256
}

fn default_tolerance() -> f64 {
    1e-3
}

impl Default for BalanceConfig {
    fn default() -> Self {
        Self {
            precision: PrecisionKind::Double,
            bits: default_bits(),
            tolerance: default_tolerance(),
        }
    }
}

/// Time sampling of the kernel tables written by the `kernels` command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSampling {
    /// Defaults to one round trip, 2d.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_max: Option<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
}

fn default_samples() -> usize {
    1001
}

impl Default for KernelSampling {
    fn default() -> Self {
        Self {
            t_max: None,
            samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default = "all_formats")]
    pub formats: Vec<Format>,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

fn all_formats() -> Vec<Format> {
    vec![Format::Csv, Format::Json]
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_dir(),
            formats: all_formats(),
        }
    }
}

impl OutputConfig {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

fn invalid(e: Error) -> Error {
    match e {
        Error::Domain(m) => Error::Config(m),
        other => other,
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("`{name}` must be positive and finite, got {v}")))
    }
}

impl RunConfig {
    /// Parse and validate; relative paths stay as written.
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Read a file; relative paths inside are resolved against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let Some(m) = &mut cfg.mirror {
            if let Some(t) = &mut m.table {
                fix(t);
            }
        }
        if let Some(TrajectoryConfig::File { path }) = &mut cfg.trajectory {
            fix(path);
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.cavity()?;
        self.thermal()?;
        if let Some(m) = &self.mirror {
            positive("mirror.m", m.m)?;
            match m.potential {
                PotentialKind::Harmonic => positive("mirror.Omega", m.omega.unwrap_or(f64::NAN))?,
                PotentialKind::Tabulated if m.table.is_none() => {
                    return Err(Error::Config("tabulated potential needs `mirror.table`".into()))
                }
                _ => {}
            }
            if !(m.x0.is_finite() && m.v0.is_finite()) {
                return Err(Error::Config("mirror.x0 and mirror.v0 must be finite".into()));
            }
        }
        if let Some(t) = &self.trajectory {
            match t {
                TrajectoryConfig::GaussianPulse { amplitude, tau, grid } => {
                    if !amplitude.is_finite() {
                        return Err(Error::Config("trajectory.amplitude must be finite".into()));
                    }
                    positive("trajectory.tau", *tau)?;
                    check_grid(grid)?;
                }
                TrajectoryConfig::WindowedSine { amplitude, omega_d, n_cycles, ramp, grid } => {
                    if !amplitude.is_finite() {
                        return Err(Error::Config("trajectory.amplitude must be finite".into()));
                    }
                    positive("trajectory.omega_d", *omega_d)?;
                    if *n_cycles == 0 {
                        return Err(Error::Config("trajectory.n_cycles must be at least 1".into()));
                    }
                    positive("trajectory.ramp", *ramp)?;
                    check_grid(grid)?;
                }
                TrajectoryConfig::File { .. } => {}
            }
        }
        if let Some(dt) = self.solver.dt {
            positive("solver.dt", dt)?;
        }
        if self.solver.steps == 0 {
            return Err(Error::Config("solver.steps must be at least 1".into()));
        }
        positive("balance.tolerance", self.balance.tolerance)?;
        if !(64..=4096).contains(&self.balance.bits) {
            return Err(Error::Config(format!("balance.bits must lie in 64..=4096, got {}", self.balance.bits)));
        }
        if let Some(t) = self.kernels.t_max {
            positive("kernels.t_max", t)?;
        }
        if self.kernels.samples < 2 {
            return Err(Error::Config("kernels.samples must be at least 2".into()));
        }
        if self.outputs.formats.is_empty() {
            return Err(Error::Config("outputs.formats must not be empty".into()));
        }
        Ok(())
    }

    pub fn cavity(&self) -> Result<CavitySpec> {
        let c = &self.cavity;
        positive("cavity.d", c.d)?;
        positive("cavity.omega_pl", c.omega_pl)?;
        match c.k_max {
            Some(k) => CavitySpec::new(c.d, k, c.omega_pl),
            None => CavitySpec::from_cutoff(c.d, c.omega_pl),
        }
        .map_err(invalid)
    }

    pub fn thermal(&self) -> Result<ThermalSpectrum> {
        let unit = std::f64::consts::PI / self.cavity.d;
        ThermalSpectrum::new(self.thermal.t * unit).map_err(invalid)
    }

    pub fn mirror(&self) -> Result<MirrorSpec> {
        let m = self
            .mirror
            .as_ref()
            .ok_or_else(|| Error::Config("missing [mirror] section".into()))?;
        let potential = match m.potential {
            PotentialKind::Free => Potential::Free,
            PotentialKind::Harmonic => Potential::Harmonic {
                omega: m.omega.ok_or_else(|| Error::Config("harmonic potential needs `mirror.Omega`".into()))?,
            },
            PotentialKind::Tabulated => {
                let path = m
                    .table
                    .as_ref()
                    .ok_or_else(|| Error::Config("tabulated potential needs `mirror.table`".into()))?;
                let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                Potential::Tabulated(crate::io::read_potential_csv(f)?)
            }
        };
        MirrorSpec::new(m.m, potential).map_err(invalid)
    }

    /// Default sample spacing: 40 samples per period of the fastest kernel line.
    pub fn default_dt(&self) -> Result<f64> {
        let cavity = self.cavity()?;
        let fastest = 2.0 * cavity.k_max as f64 * cavity.omega_1();
        Ok(2.0 * std::f64::consts::PI / fastest / 40.0)
    }

    pub fn trajectory(&self) -> Result<Trajectory> {
        let t = self
            .trajectory
            .as_ref()
            .ok_or_else(|| Error::Config("missing [trajectory] section".into()))?;
        match t {
            TrajectoryConfig::GaussianPulse { amplitude, tau, grid } => {
                let dt = grid.dt.map_or_else(|| self.default_dt(), Ok)?;
                let half = grid.half_width.unwrap_or(10.0 * tau);
                let g = TimeGrid::centered(half, dt).map_err(invalid)?;
                gaussian_pulse(*amplitude, *tau, g).map_err(invalid)
            }
            TrajectoryConfig::WindowedSine { amplitude, omega_d, n_cycles, ramp, grid } => {
                let dt = grid.dt.map_or_else(|| self.default_dt(), Ok)?;
                let period = 2.0 * std::f64::consts::PI / omega_d;
                let half = grid.half_width.unwrap_or((0.5 * *n_cycles as f64 + 1.0) * period);
                let g = TimeGrid::centered(half, dt).map_err(invalid)?;
                windowed_sine(*amplitude, *omega_d, *n_cycles, *ramp, g).map_err(invalid)
            }
            TrajectoryConfig::File { path } => {
                let f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
                crate::io::read_trajectory_csv(f)
            }
        }
    }

    pub fn balance_options(&self) -> BalanceOptions {
        BalanceOptions {
            method: MemoryMethod::Recursive,
            precision: match self.balance.precision {
                PrecisionKind::Double => Precision::Double,
                PrecisionKind::Extended => Precision::Extended { bits: self.balance.bits },
            },
            tolerance: self.balance.tolerance,
        }
    }

    /// Copy with every defaulted quantity written out.
    pub fn resolved(&self) -> Result<RunConfig> {
        let mut out = self.clone();
        out.cavity.k_max = Some(self.cavity()?.k_max);
        if self.kernels.t_max.is_none() {
            out.kernels.t_max = Some(2.0 * self.cavity.d);
        }
        let dt = self.default_dt()?;
        match &mut out.trajectory {
            Some(TrajectoryConfig::GaussianPulse { tau, grid, .. }) => {
                grid.dt.get_or_insert(dt);
                grid.half_width.get_or_insert(10.0 * *tau);
            }
            Some(TrajectoryConfig::WindowedSine { omega_d, n_cycles, grid, .. }) => {
                grid.dt.get_or_insert(dt);
                let period = 2.0 * std::f64::consts::PI / *omega_d;
                grid.half_width.get_or_insert((0.5 * *n_cycles as f64 + 1.0) * period);
            }
            _ => {}
        }
        if out.mirror.is_some() {
            out.solver.dt.get_or_insert(dt);
        }
        Ok(out)
    }
}

fn check_grid(g: &GridConfig) -> Result<()> {
    if let Some(dt) = g.dt {
        positive("trajectory.grid.dt", dt)?;
    }
    if let Some(h) = g.half_width {
        positive("trajectory.grid.half_width", h)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[cavity]\nd = 1.0\nomega_pl = 50.0\n";

    #[test]
    fn minimal_config_resolves_k_max() {
        let cfg = RunConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(cfg.cavity().unwrap().k_max, 15);
        assert_eq!(cfg.resolved().unwrap().cavity.k_max, Some(15));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let e = RunConfig::from_toml(&format!("{MINIMAL}colour = 1\n")).unwrap_err();
        assert_eq!(e.kind(), "config");
        let e = RunConfig::from_toml(&format!("{MINIMAL}[thermal]\nT = 1\nTT = 2\n")).unwrap_err();
        assert_eq!(e.kind(), "config");
    }

    #[test]
    fn temperature_is_in_units_of_the_fundamental() {
        let cfg = RunConfig::from_toml("[cavity]\nd = 2.0\nomega_pl = 50.0\n[thermal]\nT = 2.0\n").unwrap();
        assert!((cfg.thermal().unwrap().temperature - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn negative_length_is_a_config_error() {
        let e = RunConfig::from_toml("[cavity]\nd = -1.0\nomega_pl = 50.0\n").unwrap_err();
        assert_eq!(e.kind(), "config");
    }

    #[test]
    fn resolved_config_round_trips() {
        let text = format!(
            "{MINIMAL}[trajectory]\nkind = \"gaussian_pulse\"\namplitude = 0.01\ntau = 0.5\n"
        );
        let cfg = RunConfig::from_toml(&text).unwrap().resolved().unwrap();
        let again = RunConfig::from_toml(&toml::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(cfg, again);
    }
}

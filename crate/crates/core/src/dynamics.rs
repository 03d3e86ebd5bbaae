//! Optical back-reaction forces and the semiclassical equation of motion.

use num_complex::Complex64;
use serde::Serialize;

use crate::cavity::CavitySpec;
use crate::error::{Error, Result};
use crate::kernels::{ForceLines, LineSeries, MirrorKernels};
use crate::trajectory::{TimeGrid, Trajectory};

/// Tabulated confining potential V(x) with derivative V′(x), interpolated linearly.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PotentialTable {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
    pub dv: Vec<f64>,
}

impl PotentialTable {
    pub fn new(x: Vec<f64>, v: Vec<f64>, dv: Vec<f64>) -> Result<Self> {
        if x.len() < 2 || x.len() != v.len() || x.len() != dv.len() {
            return Err(Error::domain(
                "potential table needs at least two rows of equal-length x, V, dV columns",
            ));
        }
        if x.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::domain("potential table x values must be strictly increasing"));
        }
        if x.iter().chain(&v).chain(&dv).any(|s| !s.is_finite()) {
            return Err(Error::domain("potential table contains non-finite values"));
        }
        Ok(Self { x, v, dv })
    }

    fn interp(&self, ys: &[f64], q: f64) -> Result<f64> {
        let (lo, hi) = (self.x[0], self.x[self.x.len() - 1]);
        if !(q >= lo && q <= hi) {
            return Err(Error::numerical(format!(
                "position {q} left the tabulated potential range [{lo}, {hi}]"
            )));
        }
        let i = match self.x.binary_search_by(|p| p.total_cmp(&q)) {
            Ok(i) => return Ok(ys[i]),
            Err(i) => i - 1,
        };
        let s = (q - self.x[i]) / (self.x[i + 1] - self.x[i]);
        Ok(ys[i] + s * (ys[i + 1] - ys[i]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Potential {
    Free,
    Harmonic { omega: f64 },
    Tabulated(PotentialTable),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MirrorSpec {
    pub mass: f64,
    pub potential: Potential,
}

impl MirrorSpec {
    pub fn new(mass: f64, potential: Potential) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::domain(format!("mirror mass must be positive, got {mass}")));
        }
        if let Potential::Harmonic { omega } = potential {
            if !(omega >= 0.0 && omega.is_finite()) {
                return Err(Error::domain(format!(
                    "harmonic frequency must be non-negative, got {omega}"
                )));
            }
        }
        Ok(Self { mass, potential })
    }

    pub fn harmonic(mass: f64, omega: f64) -> Result<Self> {
        Self::new(mass, Potential::Harmonic { omega })
    }

    pub fn energy(&self, x: f64, v: f64) -> Result<f64> {
        let pot = match &self.potential {
            Potential::Free => 0.0,
            Potential::Harmonic { omega } => 0.5 * self.mass * omega * omega * x * x,
            Potential::Tabulated(t) => t.interp(&t.v, x)?,
        };
        Ok(0.5 * self.mass * v * v + pot)
    }

    /// V′(x).
    pub fn restoring(&self, x: f64) -> Result<f64> {
        match &self.potential {
            Potential::Free => Ok(0.0),
            Potential::Harmonic { omega } => Ok(self.mass * omega * omega * x),
            Potential::Tabulated(t) => t.interp(&t.dv, x),
        }
    }

    /// Zero-point amplitude (1/(2mΩ))^{1/2} of a harmonic mirror.
    pub fn zero_point_amplitude(&self) -> Result<f64> {
        match self.potential {
            Potential::Harmonic { omega } if omega > 0.0 => Ok((0.5 / (self.mass * omega)).sqrt()),
            _ => Err(Error::domain(
                "zero-point amplitude needs a harmonic potential with Ω > 0",
            )),
        }
    }
}

/// λ = (x_zpf/d)(ω_pl/Ω).
pub fn coupling_parameter(mirror: &MirrorSpec, cavity: &CavitySpec) -> Result<f64> {
    let omega = match mirror.potential {
        Potential::Harmonic { omega } if omega > 0.0 => omega,
        _ => {
            return Err(Error::domain(
                "coupling parameter λ is undefined unless the mirror is harmonic with Ω > 0",
            ))
        }
    };
    Ok(mirror.zero_point_amplitude()? / cavity.d * cavity.omega_pl / omega)
}

/// How the memory integrals are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryMethod {
    /// Trapezoidal convolution against tabulated kernels, O(N²).
    Direct,
    /// Exact sliding recursion over the kernel's sinusoids, O(N·lines).
    Recursive,
}

/// Causal memory integrals F_x = −(4/d²)∫M₊⁰⁰ x and F_ẋ = (1/d²)∫Ṁ¹¹ ẋ.
///
/// Samples are pushed in time order; forces at the next sample depend only on
/// pushed history plus, for F_ẋ, the endpoint velocity (half trapezoid weight).
pub(crate) struct Memory {
    dt: f64,
    cx: f64,
    cv: f64,
    rate0: f64,
    engine: Engine,
    pushed: usize,
}

enum Engine {
    Direct {
        m00: Vec<f64>,
        rate11: Vec<f64>,
        xs: Vec<f64>,
        vs: Vec<f64>,
    },
    Recursive {
        x_freq: Vec<f64>,
        x_amp: Vec<f64>,
        v_freq: Vec<f64>,
        v_amp: Vec<f64>,
        zx: Vec<Complex64>,
        zv: Vec<Complex64>,
    },
}

impl Memory {
    pub(crate) fn new(lines: &ForceLines, d: f64, dt: f64, len: usize, method: MemoryMethod) -> Self {
        let engine = match method {
            MemoryMethod::Direct => Engine::Direct {
                m00: (0..len).map(|l| lines.m00.eval(l as f64 * dt)).collect(),
                rate11: (0..len).map(|l| lines.m11.eval_rate(l as f64 * dt)).collect(),
                xs: Vec::with_capacity(len),
                vs: Vec::with_capacity(len),
            },
            MemoryMethod::Recursive => {
                let split = |s: &LineSeries, rate: bool| -> (Vec<f64>, Vec<f64>) {
                    s.lines
                        .iter()
                        .map(|l| {
                            let w = s.frequency(l);
                            (w, if rate { l.amplitude * w } else { l.amplitude })
                        })
                        .unzip()
                };
                let (x_freq, x_amp) = split(&lines.m00, false);
                let (v_freq, v_amp) = split(&lines.m11, true);
                Engine::Recursive {
                    zx: vec![Complex64::new(0.0, 0.0); x_freq.len()],
                    zv: vec![Complex64::new(0.0, 0.0); v_freq.len()],
                    x_freq,
                    x_amp,
                    v_freq,
                    v_amp,
                }
            }
        };
        Self {
            dt,
            cx: 4.0 / (d * d),
            cv: 1.0 / (d * d),
            rate0: lines.m11.eval_rate(0.0),
            engine,
            pushed: 0,
        }
    }

    /// Coefficient of the endpoint velocity in F_ẋ at any sample after the first.
    pub(crate) fn endpoint_coefficient(&self) -> f64 {
        0.5 * self.cv * self.dt * self.rate0
    }

    /// Record sample `pushed` with its final displacement and velocity.
    pub(crate) fn push(&mut self, x: f64, v: f64) {
        let w = if self.pushed == 0 { 0.5 } else { 1.0 };
        let n = self.pushed;
        let dt = self.dt;
        match &mut self.engine {
            Engine::Direct { xs, vs, .. } => {
                xs.push(x);
                vs.push(v);
            }
            Engine::Recursive {
                x_freq,
                zx,
                v_freq,
                zv,
                ..
            } => {
                let tau = n as f64 * dt;
                for (z, &f) in zx.iter_mut().zip(x_freq.iter()) {
                    let (s, c) = (f * tau).sin_cos();
                    *z += w * x * Complex64::new(c, -s);
                }
                for (z, &f) in zv.iter_mut().zip(v_freq.iter()) {
                    let (s, c) = (f * tau).sin_cos();
                    *z += w * v * Complex64::new(c, -s);
                }
            }
        }
        self.pushed += 1;
    }

    /// (F_x, history part of F_ẋ) at sample index `pushed`.
    pub(crate) fn next_forces(&self) -> (f64, f64) {
        let n = self.pushed;
        if n == 0 {
            return (0.0, 0.0);
        }
        let dt = self.dt;
        let (fx, fv) = match &self.engine {
            Engine::Direct {
                m00, rate11, xs, vs, ..
            } => {
                let mut sx = 0.5 * m00[n] * xs[0];
                let mut sv = 0.5 * rate11[n] * vs[0];
                for m in 1..n {
                    sx += m00[n - m] * xs[m];
                    sv += rate11[n - m] * vs[m];
                }
                (sx, sv)
            }
            Engine::Recursive {
                x_freq,
                x_amp,
                v_freq,
                v_amp,
                zx,
                zv,
            } => {
                let tau = n as f64 * dt;
                let mut sx = 0.0;
                for ((&f, &a), z) in x_freq.iter().zip(x_amp).zip(zx) {
                    let (s, c) = (f * tau).sin_cos();
                    sx += a * (Complex64::new(c, s) * z).im;
                }
                let mut sv = 0.0;
                for ((&f, &a), z) in v_freq.iter().zip(v_amp).zip(zv) {
                    let (s, c) = (f * tau).sin_cos();
                    sv += a * (Complex64::new(c, s) * z).re;
                }
                (sx, sv)
            }
        };
        (-self.cx * dt * fx, self.cv * dt * fv)
    }

    /// Full F_ẋ at the next sample given its velocity.
    pub(crate) fn velocity_force(&self, history: f64, v_end: f64) -> f64 {
        if self.pushed == 0 {
            0.0
        } else {
            history + self.endpoint_coefficient() * v_end
        }
    }
}

/// Force histories (F_x, F_ẋ) on a prescribed trajectory.
///
/// Uses stored velocities when present, fourth-order finite differences otherwise.
pub fn force_histories(
    traj: &Trajectory,
    kernels: &MirrorKernels,
    method: MemoryMethod,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = traj.velocity()?;
    let lines = kernels.force_lines();
    Ok(histories_with(&traj.x, &v, traj.dt, &lines, kernels.cavity().d, method))
}

pub(crate) fn histories_with(
    x: &[f64],
    v: &[f64],
    dt: f64,
    lines: &ForceLines,
    d: f64,
    method: MemoryMethod,
) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let mut mem = Memory::new(lines, d, dt, n, method);
    let mut fx = Vec::with_capacity(n);
    let mut fv = Vec::with_capacity(n);
    for i in 0..n {
        let (a, hist) = mem.next_forces();
        fx.push(a);
        fv.push(mem.velocity_force(hist, v[i]));
        mem.push(x[i], v[i]);
    }
    (fx, fv)
}

fn check_index(traj: &Trajectory, index: usize) -> Result<()> {
    if index >= traj.len() {
        return Err(Error::domain(format!(
            "time index {index} outside grid of {} samples",
            traj.len()
        )));
    }
    Ok(())
}

/// F_x(t_i) = −(4/d²) Σ_{s ≤ t_i} w_s M₊⁰⁰(t_i − s) x(s) dt, trapezoidal weights.
pub fn force_x(traj: &Trajectory, kernels: &MirrorKernels, index: usize) -> Result<f64> {
    check_index(traj, index)?;
    if index == 0 {
        return Ok(0.0);
    }
    let lines = kernels.force_lines();
    let d = kernels.cavity().d;
    let dt = traj.dt;
    let mut s = 0.0;
    for m in 0..=index {
        let w = if m == 0 || m == index { 0.5 } else { 1.0 };
        s += w * lines.m00.eval((index - m) as f64 * dt) * traj.x[m];
    }
    Ok(-4.0 / (d * d) * s * dt)
}

/// F_ẋ(t_i) = (1/d²) Σ_{s ≤ t_i} w_s [Ṁ₊¹¹ + Ṁ₋¹¹](t_i − s) ẋ(s) dt.
pub fn force_xdot(traj: &Trajectory, kernels: &MirrorKernels, index: usize) -> Result<f64> {
    check_index(traj, index)?;
    if index == 0 {
        return Ok(0.0);
    }
    let v = traj.velocity()?;
    let lines = kernels.force_lines();
    let d = kernels.cavity().d;
    let dt = traj.dt;
    let mut s = 0.0;
    for m in 0..=index {
        let w = if m == 0 || m == index { 0.5 } else { 1.0 };
        s += w * lines.m11.eval_rate((index - m) as f64 * dt) * v[m];
    }
    Ok(s * dt / (d * d))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolveOptions {
    pub method: MemoryMethod,
    /// Constant static-pressure force added to the right-hand side.
    pub casimir_force: Option<f64>,
    /// Mechanical energy may grow at most this factor above its initial value.
    pub energy_growth_bound: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            method: MemoryMethod::Direct,
            casimir_force: None,
            energy_growth_bound: 1e3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverReport {
    pub steps: usize,
    pub method: Option<MemoryMethod>,
    pub lambda: Option<f64>,
    /// Σ w ẋ F_x dt and Σ w ẋ F_ẋ dt accumulated during the run.
    pub work_x: f64,
    pub work_xdot: f64,
    pub energy_initial: f64,
    pub energy_final: f64,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvolutionResult {
    pub trajectory: Trajectory,
    pub force_x: Vec<f64>,
    pub force_xdot: Vec<f64>,
    pub diagnostics: SolverReport,
}

/// Solve m ẍ + V′(x) = F_x + F_ẋ (+ optional static force).
///
/// Velocity-Verlet base step with an explicit predictor for the endpoint
/// velocity, one corrector pass through the memory forces, and forces
/// re-evaluated after the correction. `kernels = None` switches the field off.
pub fn evolve(
    mirror: &MirrorSpec,
    kernels: Option<&MirrorKernels>,
    x0: f64,
    v0: f64,
    grid: TimeGrid,
    options: &EvolveOptions,
) -> Result<EvolutionResult> {
    if !(x0.is_finite() && v0.is_finite()) {
        return Err(Error::domain("initial conditions must be finite"));
    }
    let mut warnings = Vec::new();
    let mut lambda = None;
    if let Some(k) = kernels {
        match coupling_parameter(mirror, k.cavity()) {
            Ok(l) if l >= 1.0 => {
                return Err(Error::domain(format!(
                    "coupling parameter λ = {l:.3e} ≥ 1: perturbative treatment invalid"
                )))
            }
            Ok(l) => {
                if l > 0.1 {
                    let msg = format!("coupling parameter λ = {l:.3e} exceeds 0.1");
                    log::warn!("{msg}");
                    warnings.push(msg);
                }
                lambda = Some(l);
            }
            Err(_) => warnings.push("λ undefined for a non-harmonic mirror; not checked".into()),
        }
    }
    let n = grid.len;
    let dt = grid.dt;
    let m = mirror.mass;
    let f_static = options.casimir_force.unwrap_or(0.0);
    let mut mem = kernels.map(|k| {
        Memory::new(&k.force_lines(), k.cavity().d, dt, n, options.method)
    });
    if let Some(mem) = &mem {
        let kappa = mem.endpoint_coefficient() * 0.5 * dt / m;
        if kappa.abs() >= 0.5 {
            return Err(Error::numerical(format!(
                "step-size instability: endpoint memory coefficient {kappa:.3e} makes the corrector diverge; reduce dt"
            )));
        }
    }

    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    let mut fxs = Vec::with_capacity(n);
    let mut fvs = Vec::with_capacity(n);
    let energy_initial = mirror.energy(x0, v0)?;
    let bound = options.energy_growth_bound * energy_initial.abs();

    let (mut x, mut v) = (x0, v0);
    let (mut fx, mut fv) = (0.0, 0.0);
    let mut acc = (f_static + fx + fv - mirror.restoring(x)?) / m;
    let (mut work_x, mut work_xdot) = (0.0, 0.0);
    for i in 0..n {
        xs.push(x);
        vs.push(v);
        fxs.push(fx);
        fvs.push(fv);
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        work_x += w * v * fx * dt;
        work_xdot += w * v * fv * dt;
        if let Some(mem) = &mut mem {
            mem.push(x, v);
        }
        if i == n - 1 {
            break;
        }
        let x_next = x + v * dt + 0.5 * acc * dt * dt;
        let (fx_next, hist) = mem.as_ref().map_or((0.0, 0.0), |m| m.next_forces());
        let base = f_static + fx_next - mirror.restoring(x_next)?;
        let endpoint = |vel: f64| mem.as_ref().map_or(0.0, |m| m.velocity_force(hist, vel));
        let v_pred = v + acc * dt;
        let a_pred = (base + endpoint(v_pred)) / m;
        let v_next = v + 0.5 * (acc + a_pred) * dt;
        let fv_next = endpoint(v_next);
        let a_next = (base + fv_next) / m;

        if !(x_next.is_finite() && v_next.is_finite() && a_next.is_finite()) {
            return Err(Error::numerical(format!("non-finite state at step {}", i + 1)));
        }
        if bound > 0.0 {
            let e = mirror.energy(x_next, v_next)?;
            if e.abs() > bound {
                return Err(Error::numerical(format!(
                    "step-size instability: mechanical energy {e:.3e} exceeds {:.0e} × initial at step {}",
                    options.energy_growth_bound,
                    i + 1
                )));
            }
        }
        x = x_next;
        v = v_next;
        fx = fx_next;
        fv = fv_next;
        acc = a_next;
    }
    let energy_final = mirror.energy(x, v)?;
    let trajectory = Trajectory::new(grid.t0, dt, xs, Some(vs))?;
    if let Some(k) = kernels {
        if let Some(msg) = trajectory.displacement_warning(k.cavity().d, crate::trajectory::DISPLACEMENT_WARNING) {
            log::warn!("{msg}");
            warnings.push(msg);
        }
    }
    Ok(EvolutionResult {
        trajectory,
        force_x: fxs,
        force_xdot: fvs,
        diagnostics: SolverReport {
            steps: n - 1,
            method: kernels.map(|_| options.method),
            lambda,
            work_x,
            work_xdot,
            energy_initial,
            energy_final,
            warnings,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::ThermalSpectrum;
    use std::f64::consts::PI;

    #[test]
    fn lambda_examples() {
        let cav = CavitySpec::new(1.0, 100, 100.0 * PI).unwrap();
        let m = MirrorSpec::harmonic(1.0, 1.0).unwrap();
        let l = coupling_parameter(&m, &cav).unwrap();
        assert!((l - 100.0 * PI / 2f64.sqrt()).abs() < 1e-10);
        let cav2 = CavitySpec::new(2.0, 100, 100.0 * PI).unwrap();
        assert!((coupling_parameter(&m, &cav2).unwrap() - l / 2.0).abs() < 1e-12);
        let free = MirrorSpec::new(1.0, Potential::Free).unwrap();
        assert!(coupling_parameter(&free, &cav).is_err());
        assert!(coupling_parameter(&MirrorSpec::harmonic(1.0, 0.0).unwrap(), &cav).is_err());
    }

    #[test]
    fn tabulated_potential_interpolates() {
        let t = PotentialTable::new(vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, 1.0], vec![-2.0, 0.0, 2.0])
            .unwrap();
        let m = MirrorSpec::new(1.0, Potential::Tabulated(t)).unwrap();
        assert_eq!(m.restoring(0.5).unwrap(), 1.0);
        assert!(m.restoring(1.5).is_err());
    }

    #[test]
    fn empty_memory_is_zero() {
        let k = MirrorKernels::new(CavitySpec::new(1.0, 4, 20.0).unwrap(), ThermalSpectrum::zero());
        let tr = Trajectory::new(0.0, 0.01, vec![0.3; 8], Some(vec![1.0; 8])).unwrap();
        assert_eq!(force_x(&tr, &k, 0).unwrap(), 0.0);
        assert_eq!(force_xdot(&tr, &k, 0).unwrap(), 0.0);
        let z = Trajectory::zeros(tr.grid());
        assert_eq!(force_x(&z, &k, 7).unwrap(), 0.0);
        assert_eq!(force_xdot(&z, &k, 7).unwrap(), 0.0);
        assert!(force_x(&tr, &k, 8).is_err());
    }

    #[test]
    fn histories_agree_with_single_index_forces() {
        let k = MirrorKernels::new(CavitySpec::new(1.0, 6, 20.0).unwrap(), ThermalSpectrum::new(2.0).unwrap());
        let x: Vec<f64> = (0..40).map(|i| (0.3 * i as f64).sin() * 1e-2).collect();
        let v: Vec<f64> = (0..40).map(|i| (0.3 * i as f64).cos() * 0.3).collect();
        let tr = Trajectory::new(0.0, 0.01, x, Some(v)).unwrap();
        for method in [MemoryMethod::Direct, MemoryMethod::Recursive] {
            let (fx, fv) = force_histories(&tr, &k, method).unwrap();
            for i in [0, 1, 17, 39] {
                let a = force_x(&tr, &k, i).unwrap();
                let b = force_xdot(&tr, &k, i).unwrap();
                assert!((fx[i] - a).abs() <= 1e-12 * (1.0 + a.abs()), "{method:?} {i}");
                assert!((fv[i] - b).abs() <= 1e-12 * (1.0 + b.abs()), "{method:?} {i}");
            }
        }
    }
}

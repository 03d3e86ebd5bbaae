//! Uniformly sampled mirror trajectories and their spectra.
//!
//! Fourier convention: x̃(ω) = (1/2π)∫ x(t) e^{−iωt} dt, x(t) = ∫ x̃(ω) e^{iωt} dω.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::summation::pairwise_sum_complex;

/// Relative endpoint amplitude above which a trajectory is not pulse-like.
pub const DECAY_TOLERANCE: f64 = 1e-12;

/// Default |x|/d above which the small-displacement expansion is flagged.
pub const DISPLACEMENT_WARNING: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub len: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, len: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::domain(format!("time step must be positive, got {dt}")));
        }
        if !t0.is_finite() {
            return Err(Error::domain("grid origin must be finite"));
        }
        if len < 2 {
            return Err(Error::domain(format!("grid needs at least 2 samples, got {len}")));
        }
        Ok(Self { t0, dt, len })
    }

    /// Symmetric grid on [−half_width, half_width] (half_width rounded to a whole number of steps).
    pub fn centered(half_width: f64, dt: f64) -> Result<Self> {
        if !(half_width > 0.0) {
            return Err(Error::domain("half width must be positive"));
        }
        let half = (half_width / dt).round() as usize;
        Self::new(-(half as f64) * dt, dt, 2 * half + 1)
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn end(&self) -> f64 {
        self.time(self.len - 1)
    }

    pub fn midpoint(&self) -> f64 {
        self.t0 + 0.5 * (self.len - 1) as f64 * self.dt
    }

    pub fn duration(&self) -> f64 {
        (self.len - 1) as f64 * self.dt
    }
}

/// Displacement samples x(t_i) with optional velocities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub t0: f64,
    pub dt: f64,
    pub x: Vec<f64>,
    pub v: Option<Vec<f64>>,
    /// Closed form the samples were drawn from, when known. Extended-precision
    /// passes resample it instead of using the rounded samples.
    #[serde(skip)]
    pub shape: Option<Shape>,
}

/// Analytic displacement profiles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Shape {
    /// A e^{−(t − center)²/τ²}.
    Gaussian { amplitude: f64, tau: f64, center: f64 },
    /// A w(s) sin(Ω_d s), s = t − start, with a raised-cosine ramp of length
    /// `t_ramp` at both ends of [0, support].
    WindowedSine {
        amplitude: f64,
        omega_d: f64,
        start: f64,
        support: f64,
        t_ramp: f64,
    },
}

impl Shape {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            Shape::Gaussian { amplitude, tau, center } => {
                let s = (t - center) / tau;
                amplitude * (-s * s).exp()
            }
            Shape::WindowedSine { amplitude, omega_d, start, support, t_ramp } => {
                let s = t - start;
                amplitude * sine_envelope(s, support, t_ramp).0 * (omega_d * s).sin()
            }
        }
    }
}

/// Raised-cosine envelope and its derivative.
pub(crate) fn sine_envelope(s: f64, support: f64, t_ramp: f64) -> (f64, f64) {
    if s <= 0.0 || s >= support {
        (0.0, 0.0)
    } else if s < t_ramp {
        let a = PI * s / t_ramp;
        (0.5 * (1.0 - a.cos()), 0.5 * PI / t_ramp * a.sin())
    } else if s > support - t_ramp {
        let a = PI * (support - s) / t_ramp;
        (0.5 * (1.0 - a.cos()), -0.5 * PI / t_ramp * a.sin())
    } else {
        (1.0, 0.0)
    }
}

impl Trajectory {
    pub fn new(t0: f64, dt: f64, x: Vec<f64>, v: Option<Vec<f64>>) -> Result<Self> {
        TimeGrid::new(t0, dt, x.len())?;
        if let Some(v) = &v {
            if v.len() != x.len() {
                return Err(Error::domain(format!(
                    "velocity has {} samples, displacement has {}",
                    v.len(),
                    x.len()
                )));
            }
        }
        if x.iter().chain(v.iter().flatten()).any(|s| !s.is_finite()) {
            return Err(Error::domain("trajectory contains non-finite samples"));
        }
        Ok(Self { t0, dt, x, v, shape: None })
    }

    pub fn zeros(grid: TimeGrid) -> Self {
        Self {
            t0: grid.t0,
            dt: grid.dt,
            x: vec![0.0; grid.len],
            v: Some(vec![0.0; grid.len]),
            shape: None,
        }
    }

    pub fn grid(&self) -> TimeGrid {
        TimeGrid {
            t0: self.t0,
            dt: self.dt,
            len: self.x.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 * self.dt
    }

    pub fn max_abs(&self) -> f64 {
        self.x.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Endpoint amplitudes relative to the peak, (start, end); zero for x ≡ 0.
    pub fn endpoint_ratios(&self) -> (f64, f64) {
        let peak = self.max_abs();
        if peak == 0.0 {
            return (0.0, 0.0);
        }
        (self.x[0].abs() / peak, self.x[self.len() - 1].abs() / peak)
    }

    pub fn is_pulse_like(&self) -> bool {
        let (a, b) = self.endpoint_ratios();
        a < DECAY_TOLERANCE && b < DECAY_TOLERANCE
    }

    /// Warning text when max|x|/d exceeds `threshold`.
    pub fn displacement_warning(&self, d: f64, threshold: f64) -> Option<String> {
        let r = self.max_abs() / d;
        (r > threshold).then(|| {
            format!("max|x|/d = {r:.3e} exceeds {threshold}; small-displacement expansion may be inaccurate")
        })
    }

    /// Velocities, falling back to finite differences when none are stored.
    pub fn velocity(&self) -> Result<Vec<f64>> {
        match &self.v {
            Some(v) => Ok(v.clone()),
            None => fd_velocity(&self.x, self.dt),
        }
    }

    /// Replace stored velocities by fourth-order finite differences.
    pub fn with_fd_velocity(mut self) -> Result<Self> {
        self.v = Some(fd_velocity(&self.x, self.dt)?);
        Ok(self)
    }

    /// x(−t) on the mirrored grid; velocities flip sign.
    pub fn time_reversed(&self) -> Self {
        let n = self.len();
        let x: Vec<f64> = self.x.iter().rev().copied().collect();
        let v = self
            .v
            .as_ref()
            .map(|v| v.iter().rev().map(|s| -s).collect());
        let shape = match self.shape {
            Some(Shape::Gaussian { amplitude, tau, center }) => Some(Shape::Gaussian {
                amplitude,
                tau,
                center: -center,
            }),
            _ => None,
        };
        Self {
            t0: -self.time(n - 1),
            dt: self.dt,
            x,
            v,
            shape,
        }
    }
}

/// Fourth-order finite-difference derivative: centred in the interior,
/// one-sided on the two samples nearest each edge.
pub fn fd_velocity(x: &[f64], dt: f64) -> Result<Vec<f64>> {
    let n = x.len();
    if n < 5 {
        return Err(Error::domain(format!(
            "finite-difference velocity needs at least 5 samples, got {n}"
        )));
    }
    let h = 12.0 * dt;
    let mut v = vec![0.0; n];
    v[0] = (-25.0 * x[0] + 48.0 * x[1] - 36.0 * x[2] + 16.0 * x[3] - 3.0 * x[4]) / h;
    v[1] = (-3.0 * x[0] - 10.0 * x[1] + 18.0 * x[2] - 6.0 * x[3] + x[4]) / h;
    for i in 2..n - 2 {
        v[i] = (x[i - 2] - 8.0 * x[i - 1] + 8.0 * x[i + 1] - x[i + 2]) / h;
    }
    v[n - 2] = (3.0 * x[n - 1] + 10.0 * x[n - 2] - 18.0 * x[n - 3] + 6.0 * x[n - 4] - x[n - 5]) / h;
    v[n - 1] =
        (25.0 * x[n - 1] - 48.0 * x[n - 2] + 36.0 * x[n - 3] - 16.0 * x[n - 4] + 3.0 * x[n - 5]) / h;
    Ok(v)
}

/// x(t) = A e^{−(t − t_c)²/τ²} centred on the grid midpoint.
pub fn gaussian_pulse(amplitude: f64, tau: f64, grid: TimeGrid) -> Result<Trajectory> {
    if !(tau > 0.0 && tau.is_finite()) {
        return Err(Error::domain(format!("pulse width τ must be positive, got {tau}")));
    }
    if !amplitude.is_finite() {
        return Err(Error::domain("pulse amplitude must be finite"));
    }
    let half = 0.5 * grid.duration();
    if half < 6.0 * tau * (1.0 - 1e-12) {
        return Err(Error::domain(format!(
            "grid half-span {half} is shorter than 6τ = {}",
            6.0 * tau
        )));
    }
    let tc = grid.midpoint();
    let x = (0..grid.len)
        .map(|i| {
            let s = (grid.time(i) - tc) / tau;
            amplitude * (-s * s).exp()
        })
        .collect();
    let v = (0..grid.len)
        .map(|i| {
            let u = grid.time(i) - tc;
            let s = u / tau;
            -2.0 * u / (tau * tau) * amplitude * (-s * s).exp()
        })
        .collect();
    let mut traj = Trajectory::new(grid.t0, grid.dt, x, Some(v))?;
    traj.shape = Some(Shape::Gaussian { amplitude, tau, center: tc });
    Ok(traj)
}

/// Analytic spectrum of [`gaussian_pulse`] centred at t = 0.
pub fn gaussian_spectrum(amplitude: f64, tau: f64, omega: f64) -> f64 {
    amplitude * tau / (2.0 * PI.sqrt()) * (-omega * omega * tau * tau / 4.0).exp()
}

/// A sin(Ω_d s) under a raised-cosine envelope of `ramp` cycles at each end,
/// supported on `n_cycles` whole cycles centred on the grid midpoint and zero
/// elsewhere. Envelope and its first derivative vanish at the support edges.
pub fn windowed_sine(
    amplitude: f64,
    omega_d: f64,
    n_cycles: u32,
    ramp: f64,
    grid: TimeGrid,
) -> Result<Trajectory> {
    if !(omega_d > 0.0) {
        return Err(Error::domain("drive frequency must be positive"));
    }
    if !(ramp >= 1.0) {
        return Err(Error::domain(format!("ramp must span at least one cycle, got {ramp}")));
    }
    if 2.0 * ramp > n_cycles as f64 {
        return Err(Error::domain("two ramps do not fit inside the requested cycles"));
    }
    let period = 2.0 * PI / omega_d;
    let support = n_cycles as f64 * period;
    if grid.duration() < support {
        return Err(Error::domain(format!(
            "grid duration {} is shorter than the drive support {support}",
            grid.duration()
        )));
    }
    let start = grid.midpoint() - 0.5 * support;
    let t_ramp = ramp * period;
    let mut x = Vec::with_capacity(grid.len);
    let mut v = Vec::with_capacity(grid.len);
    for i in 0..grid.len {
        let s = grid.time(i) - start;
        let (w, dw) = sine_envelope(s, support, t_ramp);
        let (sn, cs) = (omega_d * s).sin_cos();
        x.push(amplitude * w * sn);
        v.push(amplitude * (dw * sn + w * omega_d * cs));
    }
    let mut traj = Trajectory::new(grid.t0, grid.dt, x, Some(v))?;
    traj.shape = Some(Shape::WindowedSine { amplitude, omega_d, start, support, t_ramp });
    Ok(traj)
}

/// Discrete spectrum on the DFT grid ω_m = 2πm/(N dt), ascending in ω.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Spectrum {
    pub t0: f64,
    pub dt: f64,
    pub omega: Vec<f64>,
    #[serde(skip)]
    pub xt: Vec<Complex64>,
}

/// DFT bin index (possibly negative) of each position in FFT order.
fn bin(m: usize, n: usize) -> i64 {
    if m <= (n - 1) / 2 {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

pub fn spectrum_of(traj: &Trajectory) -> Result<Spectrum> {
    if !traj.is_pulse_like() {
        let (a, b) = traj.endpoint_ratios();
        return Err(Error::domain(format!(
            "trajectory does not decay at its ends (|x|/max = {a:.2e}, {b:.2e}); apply a window before transforming"
        )));
    }
    Ok(spectrum_unchecked(traj))
}

/// Transform without the endpoint-decay precondition.
pub fn spectrum_unchecked(traj: &Trajectory) -> Spectrum {
    let n = traj.len();
    let mut buf: Vec<Complex64> = traj.x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let dw = 2.0 * PI / (n as f64 * traj.dt);
    let scale = traj.dt / (2.0 * PI);
    let mut pairs: Vec<(i64, Complex64)> = buf
        .iter()
        .enumerate()
        .map(|(m, &c)| {
            let b = bin(m, n);
            let w = b as f64 * dw;
            (b, scale * c * Complex64::from_polar(1.0, -w * traj.t0))
        })
        .collect();
    pairs.sort_by_key(|p| p.0);
    Spectrum {
        t0: traj.t0,
        dt: traj.dt,
        omega: pairs.iter().map(|p| p.0 as f64 * dw).collect(),
        xt: pairs.iter().map(|p| p.1).collect(),
    }
}

/// Direct DTFT (dt/2π) Σ x_n e^{−iω t_n}.
pub fn dtft(traj: &Trajectory, omega: f64) -> Complex64 {
    let terms: Vec<Complex64> = traj
        .x
        .iter()
        .enumerate()
        .map(|(n, &x)| x * Complex64::from_polar(1.0, -omega * traj.time(n)))
        .collect();
    traj.dt / (2.0 * PI) * pairwise_sum_complex(&terms)
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        2.0 * PI / (self.len() as f64 * self.dt)
    }

    /// Highest representable frequency π/dt.
    pub fn nyquist(&self) -> f64 {
        PI / self.dt
    }

    /// Samples reconstructed by x_n = Δω Σ_m x̃_m e^{iω_m t_n}.
    pub fn inverse(&self) -> Vec<f64> {
        let n = self.len();
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        for (w, c) in self.omega.iter().zip(&self.xt) {
            let b = (w / self.spacing()).round() as i64;
            let pos = b.rem_euclid(n as i64) as usize;
            buf[pos] = 2.0 * PI / self.dt * c * Complex64::from_polar(1.0, w * self.t0);
        }
        FftPlanner::new().plan_fft_inverse(n).process(&mut buf);
        buf.iter().map(|c| c.re / n as f64).collect()
    }

    /// Band-limited (Dirichlet-kernel) interpolation to arbitrary ω; equals the
    /// DTFT of the underlying samples.
    pub fn at(&self, omega: f64) -> Complex64 {
        let n = self.len();
        let nf = n as f64;
        let terms: Vec<Complex64> = self
            .omega
            .iter()
            .zip(&self.xt)
            .map(|(&wm, &c)| {
                let theta = (omega - wm) * self.dt;
                let half = 0.5 * theta;
                let s = half.sin();
                let ratio = if s.abs() < 1e-12 {
                    nf * (nf * half).cos() / half.cos()
                } else {
                    (nf * half).sin() / s
                };
                let phase = (wm - omega) * self.t0 - half * (nf - 1.0);
                c * Complex64::from_polar(ratio, phase)
            })
            .collect();
        pairwise_sum_complex(&terms) / nf
    }

    pub fn power_at(&self, omega: f64) -> f64 {
        self.at(omega).norm_sqr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn centered_grid() {
        let g = TimeGrid::centered(1.0, 0.25).unwrap();
        assert_eq!(g.len, 9);
        assert_eq!(g.t0, -1.0);
        assert_eq!(g.midpoint(), 0.0);
        assert!(TimeGrid::new(0.0, 0.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 0.1, 1).is_err());
    }

    #[test]
    fn gaussian_shape() {
        let g = TimeGrid::centered(6.0, 0.01).unwrap();
        let tr = gaussian_pulse(0.3, 1.0, g).unwrap();
        assert_eq!(tr.x[600], 0.3);
        assert!(tr.x[0] < 3e-16 * 0.3);
        assert!(gaussian_pulse(1.0, 1.0, TimeGrid::centered(5.0, 0.01).unwrap()).is_err());
    }

    #[test]
    fn fd_velocity_is_fourth_order_exact_on_quartics() {
        let x: Vec<f64> = (0..9).map(|i| (i as f64 * 0.1).powi(4)).collect();
        let v = fd_velocity(&x, 0.1).unwrap();
        for (i, vi) in v.iter().enumerate() {
            let t = i as f64 * 0.1;
            assert!((vi - 4.0 * t.powi(3)).abs() < 1e-12, "{i}");
        }
    }

    #[test]
    fn spike_has_flat_spectrum() {
        let mut x = vec![0.0; 64];
        x[0] = 2.0;
        let tr = Trajectory::new(0.0, 0.5, x, None).unwrap();
        let sp = spectrum_unchecked(&tr);
        for c in &sp.xt {
            assert!((c - Complex64::new(0.5 * 2.0 / (2.0 * PI), 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn non_decaying_input_rejected() {
        let tr = Trajectory::new(0.0, 0.1, vec![1.0; 16], None).unwrap();
        assert!(spectrum_of(&tr).is_err());
    }

    #[test]
    fn windowed_sine_properties() {
        let od = 3.0 * PI;
        let g = TimeGrid::centered(10.0, 0.005).unwrap();
        let tr = windowed_sine(0.01, od, 12, 2.0, g).unwrap();
        assert_eq!(tr.x[0], 0.0);
        assert_eq!(*tr.x.last().unwrap(), 0.0);
        let mean: f64 = tr.x.iter().sum::<f64>() * tr.dt;
        assert!(mean.abs() < 1e-12);
        assert!(windowed_sine(0.01, od, 12, 0.5, g).is_err());
    }

    #[test]
    fn time_reversal_flips_velocity() {
        let g = TimeGrid::new(0.0, 0.1, 5).unwrap();
        let tr = Trajectory::new(g.t0, g.dt, vec![0.0, 1.0, 2.0, 3.0, 4.0], Some(vec![1.0; 5]))
            .unwrap();
        let r = tr.time_reversed();
        assert_eq!(r.x, vec![4.0, 3.0, 2.0, 1.0, 0.0]);
        assert_eq!(r.v.unwrap(), vec![-1.0; 5]);
        assert!((r.t0 + 0.4).abs() < 1e-15);
    }
}

//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero if any fails.

#![allow(clippy::needless_range_loop)]

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use ctp_mirror::casimir::renormalized_density;
use ctp_mirror::cavity::completeness_residual;
use ctp_mirror::dynamics::evolve;
use ctp_mirror::energetics::{balance_report, transition_probability};
use ctp_mirror::trajectory::{gaussian_pulse, spectrum_of, windowed_sine};
use ctp_mirror::{
    BalanceOptions, CavitySpec, EvolveOptions, FrequencyMode, MemoryMethod, MirrorKernels, MirrorSpec, Precision,
    ThermalSpectrum, TimeGrid,
};
use num_complex::Complex64;

use common::{naive_00, naive_11};

type Criterion = (&'static str, fn() -> Outcome, Duration);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn kernels(d: f64, k_max: usize, t: f64) -> MirrorKernels {
    let cav = CavitySpec::new(d, k_max, (k_max as f64 + 0.5) * PI / d).expect("cavity");
    MirrorKernels::new(cav, ThermalSpectrum::new(t).expect("temperature"))
}

fn casimir_zero_t() -> Outcome {
    let r = renormalized_density(1.0, &ThermalSpectrum::zero()).expect("casimir");
    let expect = -PI / 24.0;
    let err = (r.renormalized / expect - 1.0).abs();
    outcome(err < 1e-6, format!("eps_ren = {:.12e}, expected {expect:.12e}, rel err {err:.2e}", r.renormalized))
}

fn casimir_high_t() -> Outcome {
    let t = 50.0 * PI;
    let r = renormalized_density(1.0, &ThermalSpectrum::new(t).expect("temperature")).expect("casimir");
    let target = t / 2.0;
    let err = (r.renormalized / target - 1.0).abs();
    outcome(
        err < 1e-2,
        format!(
            "eps_ren = {:.6e}, target +T/(2d) = {target:.6e}, rel err {err:.2e} (eps_ren/(T/2d) = {:.4})",
            r.renormalized,
            r.renormalized / target
        ),
    )
}

fn fdt() -> Outcome {
    let mut worst: f64 = 0.0;
    for tu in [0.0, 0.5, 2.0] {
        let k = kernels(1.0, 64, tu * PI);
        for a in (-64i64..=64).filter(|&a| a != 0) {
            for b in (-64i64..=64).filter(|&b| b != 0 && b != -a) {
                worst = worst.max(k.fdt_residual(a, b).expect("fdt"));
            }
        }
    }
    outcome(worst <= 1e-12, format!("max relative violation {worst:.2e} over |k|,|j| <= 64, 3 temperatures"))
}

/// One-period DFT bin h of samples f(t_n), t_n = 2d n/N.
fn bin(samples: &[f64], h: usize) -> Complex64 {
    let n = samples.len() as f64;
    samples
        .iter()
        .enumerate()
        .map(|(i, &f)| f * Complex64::from_polar(1.0, -2.0 * PI * (h * i) as f64 / n))
        .sum::<Complex64>()
        / n
}

fn spectral_identity() -> Outcome {
    // Every line sits on the harmonic grid π/d, so sampling exactly one period
    // 2d with N > 2·(highest harmonic) leaves no leakage to correct.
    let (d, kmax, n) = (1.0, 16usize, 128usize);
    let mut worst: f64 = 0.0;
    for tu in [0.0, 0.5, 2.0] {
        let k = kernels(d, kmax, tu * PI);
        let times: Vec<f64> = (0..n).map(|i| 2.0 * d * i as f64 / n as f64).collect();
        let m00: Vec<f64> = times.iter().map(|&t| k.kernel_00(t).m_plus).collect();
        let m11: Vec<f64> = times.iter().map(|&t| k.kernel_11(t).m).collect();
        let mut pred00 = vec![0.0; 2 * kmax + 1];
        let mut pred11 = vec![0.0; 2 * kmax + 1];
        for a in (-(kmax as i64)..=kmax as i64).filter(|&a| a != 0) {
            for b in (-(kmax as i64)..=kmax as i64).filter(|&b| b != 0 && b != -a) {
                let h = a + b;
                if h <= 0 {
                    continue;
                }
                let c = k.spectral_coefficients(a, b).expect("coefficient");
                if a == b {
                    let w = k.cavity().omega(a);
                    pred00[h as usize] += w * w * c.im_mu;
                } else if a.abs() != b.abs() {
                    pred11[h as usize] += c.im_mu;
                }
            }
        }
        for (samples, pred) in [(&m00, &pred00), (&m11, &pred11)] {
            let scale = pred.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for h in 1..=2 * kmax {
                let got = bin(samples, h);
                // Bin of a sine series = i × (signed-sum coefficient).
                let e = (got - Complex64::new(0.0, pred[h])).norm() / scale;
                worst = worst.max(e);
            }
        }
    }
    outcome(worst < 1e-6, format!("K_max = 16, one-period DFT vs coefficients: max err {worst:.2e} (scaled by largest line)"))
}

fn balance_case(k_max: usize, samples_per_period: f64) -> (f64, usize) {
    let kern = kernels(1.0, k_max, 0.0);
    let fastest = 2.0 * PI / (2.0 * k_max as f64 * PI);
    let dt = fastest / samples_per_period;
    let tr = gaussian_pulse(0.01, 2.0, TimeGrid::centered(20.0, dt).expect("grid")).expect("pulse");
    let opts = BalanceOptions { method: MemoryMethod::Recursive, precision: Precision::Extended { bits: 256 }, tolerance: 1e-3 };
    let r = balance_report(&tr, &kern, &opts).expect("balance");
    (r.balance_residual, tr.len())
}

fn energy_balance() -> Outcome {
    let (r1, n1) = balance_case(64, 40.0);
    let (r2, n2) = balance_case(128, 40.0);
    outcome(
        r1 < 1e-3 && r2 < r1,
        format!("K=64, N={n1}: residual {r1:.3e}; refined K=128, N={n2}: residual {r2:.3e}"),
    )
}

fn two_photon() -> Outcome {
    let kern = kernels(1.0, 16, 0.0);
    let wd = 3.0 * PI;
    let n_cycles = 40;
    let support = n_cycles as f64 * 2.0 * PI / wd;
    let bandwidth = 4.0 * PI / support;
    let grid = TimeGrid::centered(0.5 * support + 2.0, 1.0 / 800.0).expect("grid");
    let tr = windowed_sine(0.001, wd, n_cycles, 8.0, grid).expect("drive");
    let r = balance_report(&tr, &kern, &BalanceOptions::default()).expect("balance");
    let total: f64 = r.mode_breakdown.iter().map(|m| m.contribution.abs()).sum();
    let near: f64 = r
        .mode_breakdown
        .iter()
        .filter(|m| (m.omega_sum.abs() - wd).abs() <= bandwidth)
        .map(|m| m.contribution.abs())
        .sum();
    let frac = near / total;
    outcome(frac >= 0.9, format!("fraction of |E| within {bandwidth:.3} of Omega_d = 3pi: {frac:.6}"))
}

fn completeness() -> Outcome {
    let spec = CavitySpec::new(1.0, 4, 15.0).expect("cavity");
    let mut lines = Vec::new();
    let mut pass = true;
    for (k, j) in [(1, 1), (1, 2), (2, 3)] {
        let fit: Vec<(f64, f64)> = [100usize, 200, 400]
            .iter()
            .map(|&s| (s as f64, completeness_residual(&spec, k, j, s).expect("residual")))
            .collect();
        let c = fit.iter().map(|(s, r)| r / s).sum::<f64>() / fit.iter().map(|(s, _)| 1.0 / (s * s)).sum::<f64>();
        let r = completeness_residual(&spec, k, j, 2000).expect("residual");
        let ratio = r / (c / 2000.0);
        pass &= (ratio - 1.0).abs() < 0.1;
        lines.push(format!("({k},{j}): C = {c:.4}, R(2000)/(C/2000) = {ratio:.4}"));
    }
    outcome(pass, lines.join("; "))
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for &(tu, t) in &[(0.0, 0.05), (0.0, 0.61), (0.5, 0.3), (2.0, 1.17)] {
        let k = kernels(1.0, 32, tu * PI);
        let a = k.kernel_00(t);
        let (np, nm, m, scale) = naive_00(1.0, 32, tu * PI, t);
        worst = worst.max((a.n_plus - np).abs() / scale).max((a.m_plus - m).abs() / scale);
        if nm != 0.0 {
            worst = worst.max((a.n_minus - nm).abs() / nm.abs());
        }
        let b = k.kernel_11(t);
        let (n, m, rate, scale, rate_scale) = naive_11(1.0, 32, tu * PI, t);
        worst = worst
            .max((b.n - n).abs() / scale)
            .max((b.m - m).abs() / scale)
            .max((k.kernel_11_rate(t) - rate).abs() / rate_scale);
    }
    let k = kernels(1.0, 32, 0.0);
    let static_zero = (1..=32i64).all(|a| {
        let w = k.regularized_weight(a, -a).expect("weight");
        w.w_mu_im == 0.0 && w.w_nu == 0.0
    });
    outcome(
        worst <= 1e-13 && static_zero,
        format!("max err {worst:.2e} relative to sum of |terms|; static channel weights exactly zero: {static_zero}"),
    )
}

fn solver_sanity() -> Outcome {
    let (m, w, x0, v0) = (1.0, 1.0, 1.0, 0.5);
    let steps = 1_500_000;
    let dt = 10.0 * 2.0 * PI / w / steps as f64;
    let mirror = MirrorSpec::harmonic(m, w).expect("mirror");
    let run = evolve(&mirror, None, x0, v0, TimeGrid::new(0.0, dt, steps + 1).expect("grid"), &EvolveOptions::default())
        .expect("evolve");
    let dev = (0..=steps)
        .map(|i| {
            let t = i as f64 * dt;
            (run.trajectory.x[i] - (x0 * (w * t).cos() + v0 / w * (w * t).sin())).abs()
        })
        .fold(0.0, f64::max);

    let coupled = |dt: f64| {
        let kern = kernels(1.0, 4, 0.0);
        let mirror = MirrorSpec::harmonic(1e4, 1.0).expect("mirror");
        let n = (10.0 / dt).round() as usize + 1;
        let opts = EvolveOptions { method: MemoryMethod::Recursive, ..Default::default() };
        evolve(&mirror, Some(&kern), 0.01, 0.02, TimeGrid::new(0.0, dt, n).expect("grid"), &opts)
            .expect("evolve")
            .trajectory
            .x
    };
    let (a, b, c) = (coupled(4e-3), coupled(2e-3), coupled(1e-3));
    let e1 = (0..a.len()).map(|i| (a[i] - b[2 * i]).abs()).fold(0.0, f64::max);
    let e2 = (0..b.len()).map(|i| (b[i] - c[2 * i]).abs()).fold(0.0, f64::max);
    let order = (e1 / e2).log2();
    outcome(
        dev < 1e-8 && order >= 2.0 - 0.05,
        format!("field-free max deviation {dev:.2e} over 10 periods; coupled self-convergence order {order:.3}"),
    )
}

fn temperature_monotonicity() -> Outcome {
    let tr = gaussian_pulse(0.01, 0.2, TimeGrid::centered(2.0, 1e-3).expect("grid")).expect("pulse");
    let sp = spectrum_of(&tr).expect("spectrum");
    let ps: Vec<f64> = [0.0, 1.0, 2.0]
        .iter()
        .map(|&tu| transition_probability(&sp, &kernels(1.0, 40, tu * PI), FrequencyMode::Discrete).expect("P"))
        .collect();
    outcome(ps[0] < ps[1] && ps[1] < ps[2], format!("P_trans at T = 0, 1, 2 omega_1: {:.6e}, {:.6e}, {:.6e}", ps[0], ps[1], ps[2]))
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return ExitCode::SUCCESS;
    }
    let criteria: [Criterion; 10] = [
        ("casimir zero temperature", casimir_zero_t, Duration::from_secs(1)),
        ("casimir high temperature", casimir_high_t, Duration::from_secs(1)),
        ("fluctuation-dissipation", fdt, Duration::from_secs(1)),
        ("spectral identity", spectral_identity, Duration::from_secs(10)),
        ("energy balance", energy_balance, Duration::from_secs(120)),
        ("two-photon signature", two_photon, Duration::from_secs(60)),
        ("completeness relation", completeness, Duration::from_secs(10)),
        ("oracle equivalence", oracle_equivalence, Duration::from_secs(3600)),
        ("solver sanity", solver_sanity, Duration::from_secs(3600)),
        ("temperature monotonicity", temperature_monotonicity, Duration::from_secs(3600)),
    ];
    let mut failed = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let took = start.elapsed();
        let in_time = took <= *budget;
        let pass = out.pass && in_time;
        if !pass {
            failed += 1;
        }
        let timing = if in_time {
            format!("{:.2} s", took.as_secs_f64())
        } else {
            format!("{:.2} s, over the {} s budget", took.as_secs_f64(), budget.as_secs())
        };
        println!("{} {:>2} {name}: {} [{timing}]", if pass { "PASS" } else { "FAIL" }, i + 1, out.detail);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 { ExitCode::SUCCESS } else { ExitCode::FAILURE }
}

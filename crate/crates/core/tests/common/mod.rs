//! Independent reference implementations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use rug::float::Constant;
use rug::Float;

pub const PREC: u32 = 200;

/// Coupling written straight from (−1)^(k+j) 2kj/(k² − j²).
pub fn g(j: usize, k: usize) -> f64 {
    if j == k {
        return 0.0;
    }
    let sign = if (k + j).is_multiple_of(2) { 1.0 } else { -1.0 };
    sign * 2.0 * (k * j) as f64 / ((k * k) as f64 - (j * j) as f64)
}

/// coth(ω/2T) by its definition; sign(ω) at T = 0.
pub fn z(omega: f64, t: f64) -> f64 {
    if t == 0.0 {
        omega.signum()
    } else {
        1.0 / (omega / (2.0 * t)).tanh()
    }
}

pub fn omega(k: usize, d: f64) -> f64 {
    k as f64 * PI / d
}

pub fn mp(v: f64) -> Float {
    Float::with_val(PREC, v)
}

pub fn mp_pi() -> Float {
    Float::with_val(PREC, Constant::Pi)
}

/// coth(ω/2T) in extended precision for ω = k π/d.
pub fn mp_z(k: i64, d: f64, t: f64) -> Float {
    let w = mp_pi() * k / d;
    if t == 0.0 {
        return mp(if k > 0 { 1.0 } else { -1.0 });
    }
    let x = w / (2.0 * t);
    x.tanh().recip()
}

pub fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

/// Relative error against a reference scale.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Order-literal sums over the pair kernels in extended precision, z from coth.
/// The last entry is Σ|terms|, the scale at which double-precision sums are
/// accurate; individual kernel values can sit at cancellation points.
pub fn naive_00(d: f64, k_max: usize, temp: f64, t: f64) -> (f64, f64, f64, f64) {
    let (mut np, mut nm, mut mp_) = (mp(0.0), mp(0.0), mp(0.0));
    let mut scale = 0.0;
    for k in 1..=k_max {
        let w: Float = mp_pi() * k as u32 / d;
        let zk = mp_z(k as i64, d, temp);
        let w2 = Float::with_val(PREC, &w * &w);
        let zz = Float::with_val(PREC, &zk * &zk);
        let arg = Float::with_val(PREC, &w * (2.0 * t));
        np += Float::with_val(PREC, &zz + 1u32) * &w2 / 8u32 * arg.clone().cos();
        nm += Float::with_val(PREC, &zz - 1u32) * &w2 / 8u32;
        mp_ -= Float::with_val(PREC, &zk + &zk) * &w2 / 8u32 * arg.sin();
        scale += (&zz + Float::with_val(PREC, 1u32)).to_f64() * w2.to_f64() / 8.0;
    }
    (np.to_f64(), nm.to_f64(), mp_.to_f64(), scale)
}

/// (N, M, dM/dt) of the summed 11 kernels.
pub fn naive_11(d: f64, k_max: usize, temp: f64, t: f64) -> (f64, f64, f64, f64, f64) {
    let (mut n, mut m, mut r) = (mp(0.0), mp(0.0), mp(0.0));
    let (mut scale, mut rate_scale) = (0.0, 0.0);
    for k in 1..=k_max {
        for j in 1..=k_max {
            let wk: Float = mp_pi() * k as u32 / d;
            let wj: Float = mp_pi() * j as u32 / d;
            let (zk, zj) = (mp_z(k as i64, d, temp), mp_z(j as i64, d, temp));
            let gg = mp(g(k, j) * g(k, j));
            let prod = Float::with_val(PREC, &wk * &wj);
            let sum = Float::with_val(PREC, &wk + &wj);
            let diff = Float::with_val(PREC, &wk - &wj);
            let cp: Float = Float::with_val(PREC, &diff * &diff) * &gg / &prod;
            let cm: Float = Float::with_val(PREC, &sum * &sum) * &gg / &prod;
            let zz = Float::with_val(PREC, &zk * &zj);
            let (sp, kp) = Float::with_val(PREC, &sum * t).sin_cos(Float::new(PREC));
            let (sm, km) = Float::with_val(PREC, &diff * t).sin_cos(Float::new(PREC));
            n += Float::with_val(PREC, &zz + 1u32) * &cp / 8u32 * &kp;
            n += Float::with_val(PREC, &zz - 1u32) * &cm / 8u32 * &km;
            let ap: Float = -Float::with_val(PREC, &zk + &zj) * &cp / 8u32;
            let am: Float = Float::with_val(PREC, &zk - &zj) * &cm / 8u32;
            m += Float::with_val(PREC, &ap * &sp);
            m += Float::with_val(PREC, &am * &sm);
            scale += (cp.to_f64() + cm.to_f64()) * (zz.to_f64() + 1.0) / 8.0;
            rate_scale += (ap.to_f64() * sum.to_f64()).abs() + (am.to_f64() * diff.to_f64()).abs();
            r += ap * &sum * &kp;
            r += am * &diff * &km;
        }
    }
    (n.to_f64(), m.to_f64(), r.to_f64(), scale, rate_scale)
}

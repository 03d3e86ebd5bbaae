mod common;

use std::f64::consts::PI;

use ctp_mirror::{CavitySpec, MirrorKernels, ThermalSpectrum};
use num_complex::Complex64;
use rug::Float;
use proptest::prelude::*;

use common::*;

fn kernels(d: f64, k_max: usize, t: f64) -> MirrorKernels {
    MirrorKernels::new(
        CavitySpec::new(d, k_max, (k_max as f64 + 0.5) * PI / d).unwrap(),
        ThermalSpectrum::new(t).unwrap(),
    )
}

#[test]
fn micro_kernels_at_reference_points() {
    let k = kernels(1.0, 4, 0.0);
    assert!(rel(k.micro_nu(1, 0.0).unwrap(), 1.0 / (2.0 * PI)) < 1e-15);
    assert_eq!(k.micro_mu(1, 0.0).unwrap(), 0.0);
    assert!(rel(k.micro_mu(1, 0.5).unwrap(), -1.0 / (2.0 * PI)) < 1e-15);
    for &t in &[0.1, 0.37, 2.5] {
        assert_eq!(k.micro_nu(3, t).unwrap(), k.micro_nu(3, -t).unwrap());
        assert_eq!(k.micro_mu(3, t).unwrap(), -k.micro_mu(3, -t).unwrap());
    }
    assert!(k.micro_nu(5, 0.0).is_err());
    assert!(k.micro_mu(0, 0.0).is_err());

    // coth(π)/(4π)·cos(0.6π) at T = 1, k = 2.
    let hot = kernels(1.0, 4, 1.0);
    let w: Float = mp_pi() * 2u32;
    let expect: Float = mp_z(2, 1.0, 1.0) / Float::with_val(PREC, &w * 2u32) * Float::with_val(PREC, &w * 0.3).cos();
    assert!(rel(hot.micro_nu(2, 0.3).unwrap(), expect.to_f64()) < 1e-14);
}

#[test]
fn pair_kernels_match_closed_forms() {
    let cold = kernels(1.0, 4, 0.0);
    let p = cold.pair_kernels(2, 2, 0.0).unwrap();
    assert_eq!((p.nu_plus, p.nu_minus, p.mu_plus, p.mu_minus), (0.25, 0.0, 0.0, 0.0));
    for &t in &[0.0, 0.3, 1.7] {
        assert_eq!(cold.pair_kernels(1, 3, t).unwrap().mu_minus, 0.0);
    }

    let hot = kernels(1.0, 4, 1.0);
    let t = 0.1;
    let p = hot.pair_kernels(1, 2, t).unwrap();
    let (z1, z2) = (mp_z(1, 1.0, 1.0), mp_z(2, 1.0, 1.0));
    let (w1, w2): (Float, Float) = (mp_pi(), mp_pi() * 2u32);
    let sum: Float = (w1.clone() + &w2) * t;
    let diff: Float = (w1 - w2) * t;
    let nu_p: Float = Float::with_val(PREC, &z1 * &z2) + 1u32;
    let nu_p: Float = nu_p / 8u32 * sum.clone().cos();
    let nu_m: Float = Float::with_val(PREC, &z1 * &z2) - 1u32;
    let nu_m: Float = nu_m / 8u32 * diff.clone().cos();
    let mu_p: Float = -Float::with_val(PREC, &z1 + &z2) / 8u32 * sum.sin();
    let mu_m: Float = Float::with_val(PREC, &z1 - &z2) / 8u32 * diff.sin();
    assert!(rel(p.nu_plus, nu_p.to_f64()) < 1e-14);
    assert!(rel(p.nu_minus, nu_m.to_f64()) < 1e-13);
    assert!(rel(p.mu_plus, mu_p.to_f64()) < 1e-14);
    assert!(rel(p.mu_minus, mu_m.to_f64()) < 1e-13);
}

#[test]
fn kernel_00_matches_naive_loop() {
    for &(temp, t) in &[(0.0, 0.05), (0.0, 0.73), (0.7, 0.05), (3.0, 1.3)] {
        let k = kernels(1.0, 64, temp);
        let got = k.kernel_00(t);
        let (np, nm, m, scale) = naive_00(1.0, 64, temp, t);
        assert!((got.n_plus - np).abs() <= 1e-13 * scale, "N+ at T={temp}, t={t}: {} vs {np}", got.n_plus);
        assert!((got.m_plus - m).abs() <= 1e-13 * scale, "M+ at T={temp}, t={t}: {} vs {m}", got.m_plus);
        if temp == 0.0 {
            assert_eq!(got.n_minus, 0.0);
        } else {
            // A sum of positive terms: no cancellation, so plain relative error.
            assert!(close(got.n_minus, nm, 1e-13), "N- at T={temp}: {} vs {nm}", got.n_minus);
        }
    }
}

#[test]
fn kernel_11_matches_naive_loop() {
    for &(temp, t) in &[(0.0, 0.1), (0.0, 0.77), (1.3, 0.1), (4.0, 0.45)] {
        let k = kernels(1.0, 32, temp);
        let got = k.kernel_11(t);
        let (n, m, r, scale, rate_scale) = naive_11(1.0, 32, temp, t);
        assert!((got.n - n).abs() <= 1e-13 * scale, "N at T={temp}, t={t}: {} vs {n}", got.n);
        assert!((got.m - m).abs() <= 1e-13 * scale, "M at T={temp}, t={t}: {} vs {m}", got.m);
        let rate = k.kernel_11_rate(t);
        assert!((rate - r).abs() <= 1e-13 * rate_scale, "dM/dt at T={temp}, t={t}: {rate} vs {r}");
    }
}

#[test]
fn kernel_parity_on_sampled_grid() {
    let k = kernels(1.0, 16, 0.9);
    for i in 0..50 {
        let t = 0.0371 * i as f64;
        let (a, b) = (k.kernel_00(t), k.kernel_00(-t));
        assert_eq!(a.n_plus, b.n_plus);
        assert_eq!(a.n_minus, b.n_minus);
        assert_eq!(a.m_plus, -b.m_plus);
        let (a, b) = (k.kernel_11(t), k.kernel_11(-t));
        assert_eq!(a.n, b.n);
        assert_eq!(a.m, -b.m);
    }
    assert_eq!(k.kernel_00(0.0).m_plus, 0.0);
    assert_eq!(k.kernel_11(0.0).m, 0.0);
}

#[test]
fn spectral_coefficients_reference_values() {
    let cold = kernels(1.0, 4, 0.0);
    let c = cold.spectral_coefficients(1, 1).unwrap();
    assert!(rel(c.nu, 0.125) < 1e-15 && rel(c.im_mu, 0.125) < 1e-15);
    assert!(cold.spectral_coefficients(2, -2).is_err());
    assert!(cold.spectral_coefficients(5, 1).is_err());
    assert!(rel(cold.regularized_weight(1, 2).unwrap().w_nu, PI * PI) < 1e-15);

    // T = 2, k = 1, j = 3 against the closed form in extended precision.
    let hot = kernels(1.0, 4, 2.0);
    let c = hot.spectral_coefficients(1, 3).unwrap();
    let (z1, z3) = (mp_z(1, 1.0, 2.0), mp_z(3, 1.0, 2.0));
    let pre: Float = mp(3.0) / 64u32; // ω₁ω₃/(4(ω₁+ω₃)²) = 3/64
    let nu: Float = Float::with_val(PREC, &z1 * &z3) + 1u32;
    let nu: Float = nu * &pre;
    let mu: Float = Float::with_val(PREC, &z1 + &z3) * &pre;
    assert!(rel(c.nu, nu.to_f64()) < 1e-14);
    assert!(rel(c.im_mu, mu.to_f64()) < 1e-14);
}

#[test]
fn static_channel_weights_vanish() {
    for &t in &[0.0, 0.3, 5.0] {
        let k = kernels(1.0, 12, t);
        for a in 1..=12i64 {
            let w = k.regularized_weight(a, -a).unwrap();
            assert_eq!(w.w_mu_im, 0.0);
            if t == 0.0 {
                assert_eq!(w.w_nu, 0.0);
            }
        }
    }
}

#[test]
fn fdt_holds_on_every_channel() {
    for &tu in &[0.0, 0.5, 2.0] {
        let k = kernels(1.0, 64, tu * PI);
        for a in (-64i64..=64).filter(|&a| a != 0) {
            for b in (-64i64..=64).filter(|&b| b != 0 && b != -a) {
                let r = k.fdt_residual(a, b).unwrap();
                assert!(r <= 1e-12, "({a}, {b}) at T = {tu}: {r:e}");
            }
        }
    }
}

#[test]
fn mass_shift_reference() {
    let one = kernels(1.0, 1, 0.0);
    assert_eq!(one.mass_shift(0.1).unwrap(), 0.0);
    let k = kernels(1.0, 16, 0.0);
    let mut naive = 0.0;
    for a in 1..=16 {
        for b in 1..=16 {
            let w = omega(a, 1.0);
            naive += g(a, b).powi(2) / (2.0 * w) * (-0.1 * w).exp();
        }
    }
    assert!(rel(k.mass_shift(0.1).unwrap(), naive) < 1e-13);
    assert!(k.mass_shift(0.01).unwrap() > k.mass_shift(0.1).unwrap());
    assert!(k.mass_shift(0.0).is_err());
}

/// Two-sided spectral sums rebuild the one-sided time kernels.
fn spectral_m00(k: &MirrorKernels, t: f64) -> f64 {
    let n = k.k_max() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for a in (-n..=n).filter(|&a| a != 0) {
        let w = k.cavity().omega(a);
        let c = k.spectral_coefficients(a, a).unwrap();
        acc += w * w * Complex64::new(0.0, c.im_mu) * Complex64::from_polar(1.0, 2.0 * w * t);
    }
    acc.re
}

fn spectral_m11(k: &MirrorKernels, t: f64) -> f64 {
    let n = k.k_max() as i64;
    let mut acc = Complex64::new(0.0, 0.0);
    for a in (-n..=n).filter(|&a| a != 0) {
        for b in (-n..=n).filter(|&b| b != 0 && b.abs() != a.abs()) {
            let c = k.spectral_coefficients(a, b).unwrap();
            let w = k.cavity().omega(a) + k.cavity().omega(b);
            acc += Complex64::new(0.0, c.im_mu) * Complex64::from_polar(1.0, w * t);
        }
    }
    acc.re
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn fdt_at_random_temperature(temp in 0.0f64..200.0, a in 1i64..=24, b in 1i64..=24, sa: bool, sb: bool) {
        let k = kernels(1.0, 24, temp);
        let (a, b) = (if sa { a } else { -a }, if sb { b } else { -b });
        prop_assume!(a != -b);
        prop_assert!(k.fdt_residual(a, b).unwrap() <= 1e-12);
    }

    #[test]
    fn signed_sums_reproduce_time_kernels(temp in 0.0f64..10.0, t in -3.0f64..3.0, d in 0.5f64..3.0) {
        let k = kernels(d, 10, temp);
        let m00 = k.kernel_00(t).m_plus;
        let m11 = k.kernel_11(t).m;
        let s00: f64 = (1..=10).map(|i| { let w = omega(i, d); w * w * z(w, temp) / 4.0 }).sum();
        prop_assert!((spectral_m00(&k, t) - m00).abs() <= 1e-12 * s00);
        let scale: f64 = (1..=10).flat_map(|a| (1..=10).map(move |b| (a, b))).map(|(a, b)| {
            let (wa, wb) = (omega(a, d), omega(b, d));
            g(a, b).powi(2) * (wa + wb).powi(2) / (wa * wb) * (z(wa, temp) + z(wb, temp)).abs()
        }).sum();
        prop_assert!((spectral_m11(&k, t) - m11).abs() <= 1e-12 * scale);
    }

    #[test]
    fn coupling_is_antisymmetric(j in 1usize..500, k in 1usize..500) {
        prop_assert_eq!(ctp_mirror::cavity::coupling(j, k), -ctp_mirror::cavity::coupling(k, j));
        prop_assert!(rel(ctp_mirror::cavity::coupling(j, k), g(j, k)) < 1e-15);
    }
}

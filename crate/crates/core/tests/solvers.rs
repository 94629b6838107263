use std::f64::consts::PI;

use stvmd_core::signals::{gen_sim1, gen_two_tone, NoiseSpec};
use stvmd_core::stvmd::mode_bandwidth_power;
use stvmd_core::{
    stvmd_decompose, stvmd_decompose_observed, vmd_decompose, vmd_decompose_observed,
    DecompositionConfig, FrequencyState, InitScheme, IterationView, Variant, RESIDUAL_INDEX,
};

fn sorted_static(freqs: &FrequencyState) -> Vec<f64> {
    let FrequencyState::Static(v) = freqs else {
        panic!("expected static frequencies");
    };
    let mut v: Vec<f64> = v.iter().copied().skip(1).collect();
    v.sort_by(f64::total_cmp);
    v
}

#[test]
fn long_window_static_matches_vmd() {
    let x = gen_two_tone(128.0, 10.0).unwrap();
    let cfg = DecompositionConfig {
        window_len: 128,
        ..Default::default()
    };
    let v = sorted_static(&vmd_decompose(&x, &cfg).unwrap().freqs);
    let s = sorted_static(&stvmd_decompose(&x, &cfg, Variant::NonDynamic).unwrap().freqs);
    for (a, b) in v.iter().zip(&s) {
        assert!((a - b).abs() < 1.0 / 128.0, "vmd {a} vs stvmd {b}");
    }
}

#[test]
fn dynamic_is_steady_on_stationary_input() {
    let x = gen_two_tone(128.0, 10.0).unwrap();
    let cfg = DecompositionConfig::default();
    let m = stvmd_decompose(&x, &cfg, Variant::Dynamic).unwrap();
    let half = cfg.window_len / 2;
    for k in 1..cfg.num_modes {
        let row = m.freqs.row(k);
        let interior = &row[half..row.len() - half];
        let mean = interior.iter().sum::<f64>() / interior.len() as f64;
        let var = interior.iter().map(|w| (w - mean).powi(2)).sum::<f64>() / interior.len() as f64;
        assert!(var.sqrt() < 0.005, "mode {k} std {}", var.sqrt());
    }
}

#[test]
fn dual_ascent_residual_settles() {
    let x = gen_two_tone(128.0, 4.0).unwrap();
    let cfg = DecompositionConfig {
        dual_step: 0.5,
        max_iters: 200,
        tolerance: 1e-300,
        ..Default::default()
    };
    for variant in [None, Some(Variant::NonDynamic), Some(Variant::Dynamic)] {
        let mut residuals = Vec::new();
        let mut obs = |v: &IterationView<'_>| residuals.push(v.residual_energy);
        match variant {
            None => drop(vmd_decompose_observed(&x, &cfg, Some(&mut obs)).unwrap()),
            Some(var) => drop(stvmd_decompose_observed(&x, &cfg, var, Some(&mut obs)).unwrap()),
        }
        let tail = &residuals[residuals.len() - 10..];
        for pair in tail.windows(2) {
            assert!(pair[1] <= pair[0] * (1.0 + 1e-9) + 1e-20, "{variant:?}: {tail:?}");
        }
    }
}

#[test]
fn zero_init_keeps_iterating() {
    let x = gen_two_tone(128.0, 4.0).unwrap();
    let cfg = DecompositionConfig {
        init: InitScheme::Zero,
        ..Default::default()
    };
    let m = vmd_decompose(&x, &cfg).unwrap();
    assert!(m.stats.iterations > 1);
    assert_eq!(m.freqs.at(RESIDUAL_INDEX, 0), 0.0);
}

#[test]
fn bandwidth_power_matches_direct_sum() {
    let x = gen_sim1(128.0, 3.0, NoiseSpec::new(0.2, 5).unwrap()).unwrap();
    let cfg = DecompositionConfig {
        window_len: 32,
        ..Default::default()
    };
    let m = stvmd_decompose(&x, &cfg, Variant::Dynamic).unwrap();
    let (k_total, channels, frames, bins) = m.mode_spectra.dim();
    for k in 0..k_total {
        let got = mode_bandwidth_power(&m, k);
        assert_eq!(got.len(), frames);
        for (tau, &g) in got.iter().enumerate() {
            let w = 2.0 * PI * m.freqs.at(k, tau);
            let mut want = 0.0;
            for bin in 0..bins {
                let f = 2.0 * PI * bin as f64 / m.n_fft as f64;
                for c in 0..channels {
                    want += (f - w).powi(2) * m.mode_spectra[[k, c, tau, bin]].norm_sqr();
                }
            }
            assert!((g - want).abs() <= 1e-9 * want.max(1.0), "k {k} tau {tau}: {g} vs {want}");
        }
    }
}

//! Short-time VMD over windowed spectra.
//!
//! The input is framed (see [`crate::spectral`]) and each frame's half
//! spectrum gets its own set of `K` mode spectra. In the non-dynamic variant
//! one central frequency per mode is pooled over every channel and window; in
//! the dynamic variant each window `τ` carries its own column of `Ω`, still
//! shared by all channels. Loop order per sweep is modes outer, then
//! channels, then windows.

use std::f64::consts::PI;

use ndarray::{Array3, Array4, ArrayView3, Axis};
use num_complex::Complex64;

use crate::config::{validate_config, DecompositionConfig, RESIDUAL_INDEX};
use crate::error::{Error, Result};
use crate::frequency::{init_frequencies, FrequencyState};
use crate::modes::{IterationView, ModeSet, Observer, SolveStats};
use crate::signal::MultichannelSignal;
use crate::spectral::{
    forward_spectra, frame_signal, inverse_spectra, make_window, overlap_add_recover,
    WindowVector, WindowedSpectra,
};
pub use crate::vmd::{FreqUpdate, ModeDelta};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Variant {
    /// One frequency per mode for all windows.
    NonDynamic,
    /// One frequency per (mode, window).
    Dynamic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StvmdState {
    /// `K × C × T × B`.
    pub mode_spectra: Array4<Complex64>,
    pub freqs: FrequencyState,
    /// `C × T × B`.
    pub multipliers: Array3<Complex64>,
    pub iteration: usize,
    pub change_history: Vec<f64>,
}

impl StvmdState {
    pub fn new(
        num_modes: usize,
        num_channels: usize,
        num_frames: usize,
        num_bins: usize,
        freqs: FrequencyState,
    ) -> Result<Self> {
        if freqs.num_modes() != num_modes {
            return Err(Error::CustomLengthMismatch {
                expected: num_modes,
                got: freqs.num_modes(),
            });
        }
        if freqs.is_dynamic() && freqs.num_columns() != num_frames {
            return Err(Error::ShapeMismatch(format!(
                "frequency matrix has {} columns for {num_frames} windows",
                freqs.num_columns()
            )));
        }
        Ok(Self {
            mode_spectra: Array4::zeros((num_modes, num_channels, num_frames, num_bins)),
            freqs,
            multipliers: Array3::zeros((num_channels, num_frames, num_bins)),
            iteration: 0,
            change_history: Vec::new(),
        })
    }

    fn lane_offset(&self, k: usize, c: usize, tau: usize) -> usize {
        let (_, channels, frames, bins) = self.mode_spectra.dim();
        ((k * channels + c) * frames + tau) * bins
    }
}

/// Wiener-filter update of `û_{k,cτ}` around the frequency currently
/// assigned to `(k, τ)`.
pub fn mode_update(
    state: &mut StvmdState,
    input: ArrayView3<'_, Complex64>,
    bins: &[f64],
    alpha: f64,
    k: usize,
    c: usize,
    tau: usize,
) -> ModeDelta {
    let omega = state.freqs.at(k, tau);
    let num_modes = state.mode_spectra.dim().0;
    let offsets: Vec<usize> = (0..num_modes).map(|i| state.lane_offset(i, c, tau)).collect();
    let x = input.slice(ndarray::s![c, tau, ..]);
    let lambda = state.multipliers.slice(ndarray::s![c, tau, ..]).to_owned();
    let u = state
        .mode_spectra
        .as_slice_mut()
        .expect("mode tensor is contiguous");
    let mut delta = ModeDelta::default();
    for (m, &f) in bins.iter().enumerate() {
        let mut numer = x[m] + lambda[m] * 0.5;
        for (i, &off) in offsets.iter().enumerate() {
            if i != k {
                numer -= u[off + m];
            }
        }
        let d = f - omega;
        let new = numer / (1.0 + 2.0 * alpha * d * d);
        let slot = &mut u[offsets[k] + m];
        delta.change += (new - *slot).norm_sqr();
        delta.previous += slot.norm_sqr();
        *slot = new;
    }
    delta
}

fn centroid_sums(state: &StvmdState, bins: &[f64], k: usize, tau: Option<usize>) -> (f64, f64) {
    let (_, channels, frames, _) = state.mode_spectra.dim();
    let taus = match tau {
        Some(t) => t..t + 1,
        None => 0..frames,
    };
    let u = state
        .mode_spectra
        .as_slice()
        .expect("mode tensor is contiguous");
    let (mut weighted, mut total) = (0.0, 0.0);
    for c in 0..channels {
        for t in taus.clone() {
            let off = state.lane_offset(k, c, t);
            for (z, &f) in u[off..off + bins.len()].iter().zip(bins) {
                let p = z.norm_sqr();
                weighted += f * p;
                total += p;
            }
        }
    }
    (weighted, total)
}

/// Non-dynamic update: power-weighted mean frequency pooled over channels
/// and windows.
pub fn freq_update_static(state: &mut StvmdState, bins: &[f64], k: usize) -> Result<FreqUpdate> {
    let (weighted, total) = centroid_sums(state, bins, k, None);
    let FrequencyState::Static(freqs) = &mut state.freqs else {
        return Err(Error::ShapeMismatch("static update on dynamic state".into()));
    };
    Ok(if total > 0.0 {
        freqs[k] = (weighted / total).clamp(0.0, 0.5);
        FreqUpdate::Updated(freqs[k])
    } else {
        FreqUpdate::ZeroEnergy(freqs[k])
    })
}

/// Dynamic update of `ω_{k,τ}`: channel-pooled centroid of window `τ` only.
pub fn freq_update_dynamic(
    state: &mut StvmdState,
    bins: &[f64],
    k: usize,
    tau: usize,
) -> Result<FreqUpdate> {
    let (weighted, total) = centroid_sums(state, bins, k, Some(tau));
    let FrequencyState::Dynamic(omega) = &mut state.freqs else {
        return Err(Error::ShapeMismatch("dynamic update on static state".into()));
    };
    Ok(if total > 0.0 {
        omega[[k, tau]] = (weighted / total).clamp(0.0, 0.5);
        FreqUpdate::Updated(omega[[k, tau]])
    } else {
        FreqUpdate::ZeroEnergy(omega[[k, tau]])
    })
}

/// `λ̂_{cτ} ← λ̂_{cτ} + step·(x̂w_{cτ} - Σ_k û_{k,cτ})`; returns the residual
/// energy of the lane.
pub fn multiplier_update(
    state: &mut StvmdState,
    input: ArrayView3<'_, Complex64>,
    dual_step: f64,
    c: usize,
    tau: usize,
) -> f64 {
    let num_modes = state.mode_spectra.dim().0;
    let offsets: Vec<usize> = (0..num_modes).map(|k| state.lane_offset(k, c, tau)).collect();
    let x = input.slice(ndarray::s![c, tau, ..]);
    let u = state
        .mode_spectra
        .as_slice()
        .expect("mode tensor is contiguous");
    let mut lambda = state.multipliers.slice_mut(ndarray::s![c, tau, ..]);
    let mut energy = 0.0;
    for (m, l) in lambda.iter_mut().enumerate() {
        let mut r = x[m];
        for &off in &offsets {
            r -= u[off + m];
        }
        energy += r.norm_sqr();
        if dual_step != 0.0 {
            *l += r * dual_step;
        }
    }
    energy
}

/// Runs full sweeps on precomputed windowed spectra.
///
/// `init` must be static for [`Variant::NonDynamic`] and a `K × T` matrix for
/// [`Variant::Dynamic`]. The residual row is forced to 0 and never updated.
pub fn solve_spectra(
    spectra: &WindowedSpectra,
    config: &DecompositionConfig,
    variant: Variant,
    mut init: FrequencyState,
    mut observer: Option<Observer<'_>>,
) -> Result<(StvmdState, SolveStats)> {
    config.check()?;
    match (&variant, &init) {
        (Variant::NonDynamic, FrequencyState::Static(_))
        | (Variant::Dynamic, FrequencyState::Dynamic(_)) => {}
        _ => {
            return Err(Error::ShapeMismatch(format!(
                "{variant:?} solver given the wrong frequency layout"
            )))
        }
    }
    match &mut init {
        FrequencyState::Static(v) => v[RESIDUAL_INDEX] = 0.0,
        FrequencyState::Dynamic(m) => m.row_mut(RESIDUAL_INDEX).fill(0.0),
    }
    let (channels, frames, num_bins) = spectra.spectra.dim();
    let bins = spectra.bin_freqs();
    if bins.len() != num_bins {
        return Err(Error::ShapeMismatch(format!(
            "{num_bins} bins do not match transform length {}",
            spectra.n_fft
        )));
    }
    let k_total = config.num_modes;
    let input = spectra.spectra.view();
    let mut state = StvmdState::new(k_total, channels, frames, num_bins, init)?;
    let mut stats = SolveStats {
        iterations: 0,
        converged: false,
        final_change: f64::INFINITY,
        change_history: Vec::new(),
        zero_energy_events: 0,
        residual_energy: 0.0,
    };

    for n in 1..=config.max_iters {
        let mut change: f64 = 0.0;
        for k in 0..k_total {
            for c in 0..channels {
                let mut delta = ModeDelta::default();
                for tau in 0..frames {
                    delta.accumulate(mode_update(&mut state, input, &bins, config.alpha, k, c, tau));
                }
                change = change.max(delta.quotient());
            }
        }
        for k in (0..k_total).filter(|&k| k != RESIDUAL_INDEX) {
            match variant {
                Variant::NonDynamic => {
                    if let FreqUpdate::ZeroEnergy(_) = freq_update_static(&mut state, &bins, k)? {
                        stats.zero_energy_events += 1;
                    }
                }
                Variant::Dynamic => {
                    for tau in 0..frames {
                        if let FreqUpdate::ZeroEnergy(_) =
                            freq_update_dynamic(&mut state, &bins, k, tau)?
                        {
                            stats.zero_energy_events += 1;
                        }
                    }
                }
            }
        }
        let mut residual = 0.0;
        for c in 0..channels {
            for tau in 0..frames {
                residual += multiplier_update(&mut state, input, config.dual_step, c, tau);
            }
        }
        state.iteration = n;
        state.change_history.push(change);
        stats.iterations = n;
        stats.final_change = change;
        stats.residual_energy = residual;
        if let Some(obs) = observer.as_mut() {
            obs(&IterationView {
                iteration: n,
                change,
                freqs: &state.freqs,
                residual_energy: residual,
            });
        }
        if change < config.tolerance {
            stats.converged = true;
            break;
        }
    }
    stats.change_history = state.change_history.clone();
    Ok((state, stats))
}

/// Solves on framed spectra and rebuilds each mode in the time domain by
/// inverse transform plus overlap-add with the analysis window.
pub fn decompose_spectra(
    spectra: &WindowedSpectra,
    window: &WindowVector,
    config: &DecompositionConfig,
    variant: Variant,
    init: FrequencyState,
    observer: Option<Observer<'_>>,
) -> Result<ModeSet> {
    let layout = spectra
        .layout
        .ok_or_else(|| Error::ShapeMismatch("short-time solver needs framed spectra".into()))?;
    let (state, stats) = solve_spectra(spectra, config, variant, init, observer)?;
    let (k_total, channels, _, _) = state.mode_spectra.dim();
    let mut mode_time = Array3::<f64>::zeros((k_total, channels, layout.signal_len));
    for k in 0..k_total {
        let mode = WindowedSpectra {
            spectra: state.mode_spectra.index_axis(Axis(0), k).to_owned(),
            n_fft: spectra.n_fft,
            layout: Some(layout),
        };
        let frames = inverse_spectra(&mode)?;
        let recovered = overlap_add_recover(&frames, window)?;
        mode_time.index_axis_mut(Axis(0), k).assign(&recovered);
    }
    Ok(ModeSet {
        mode_spectra: state.mode_spectra,
        mode_time,
        freqs: state.freqs,
        residual_index: RESIDUAL_INDEX,
        n_fft: spectra.n_fft,
        layout: Some(layout),
        stats,
    })
}

pub fn stvmd_decompose(
    signal: &MultichannelSignal,
    config: &DecompositionConfig,
    variant: Variant,
) -> Result<ModeSet> {
    stvmd_decompose_observed(signal, config, variant, None)
}

pub fn stvmd_decompose_observed(
    signal: &MultichannelSignal,
    config: &DecompositionConfig,
    variant: Variant,
    observer: Option<Observer<'_>>,
) -> Result<ModeSet> {
    let checked = validate_config(config, signal)?;
    let window = make_window(config.window_kind, config.window_len)?;
    let frames = frame_signal(signal.samples().view(), &window, config.hop)?;
    let spectra = forward_spectra(&frames);
    let init = init_frequencies(
        config,
        match variant {
            Variant::NonDynamic => None,
            Variant::Dynamic => Some(checked.num_windows),
        },
    )?;
    decompose_spectra(&spectra, &window, config, variant, init, observer)
}

/// Per-window bandwidth penalty of mode `k`,
/// `Σ_c Σ_m (2π(f_m - ω_{k,τ}))² |û_{k,cτ}[m]|²`.
pub fn mode_bandwidth_power(modes: &ModeSet, k: usize) -> Vec<f64> {
    let (_, channels, frames, num_bins) = modes.mode_spectra.dim();
    let bins: Vec<f64> = (0..num_bins).map(|m| m as f64 / modes.n_fft as f64).collect();
    (0..frames)
        .map(|tau| {
            let omega = modes.freqs.at(k, tau);
            let mut power = 0.0;
            for c in 0..channels {
                for (m, &f) in bins.iter().enumerate() {
                    let d = 2.0 * PI * (f - omega);
                    power += d * d * modes.mode_spectra[[k, c, tau, m]].norm_sqr();
                }
            }
            power
        })
        .collect()
}

/// Moving median of width `2·half_width + 1` along each row of a dynamic
/// `Ω` (windows clipped at the edges). Diagnostic extension, not applied by
/// any solver.
pub fn smooth_freqs_median(freqs: &FrequencyState, half_width: usize) -> FrequencyState {
    let FrequencyState::Dynamic(omega) = freqs else {
        return freqs.clone();
    };
    let (rows, cols) = omega.dim();
    let mut out = omega.clone();
    let mut buf = Vec::with_capacity(2 * half_width + 1);
    for k in 0..rows {
        for tau in 0..cols {
            buf.clear();
            let lo = tau.saturating_sub(half_width);
            let hi = (tau + half_width + 1).min(cols);
            buf.extend((lo..hi).map(|t| omega[[k, t]]));
            buf.sort_by(f64::total_cmp);
            let mid = buf.len() / 2;
            out[[k, tau]] = if buf.len() % 2 == 1 {
                buf[mid]
            } else {
                0.5 * (buf[mid - 1] + buf[mid])
            };
        }
    }
    FrequencyState::Dynamic(out)
}

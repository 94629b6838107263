//! Whole-signal VMD (`C = 1`) and MVMD (`C > 1`).
//!
//! Each channel is transformed once with an `L`-point DFT and only the
//! non-negative bins are optimized. Modes are updated Gauss-Seidel style in
//! ascending order, so mode `k` sees the already-updated modes `i < k` and
//! the previous iterate of `i > k`. MVMD keeps a single frequency per mode
//! for all channels.

use ndarray::{Array2, Array3, Array4, ArrayView2, Axis};
use num_complex::Complex64;

use crate::config::{DecompositionConfig, RESIDUAL_INDEX};
use crate::error::{Error, Result};
use crate::frequency::{init_frequencies, FrequencyState};
use crate::modes::{IterationView, ModeSet, Observer, SolveStats};
use crate::signal::{check_finite, MultichannelSignal};
use crate::spectral::{bin_freqs, whole_signal_spectra, RealFft};

#[derive(Debug, Clone, PartialEq)]
pub struct VmdState {
    /// `K × C × B`.
    pub mode_spectra: Array3<Complex64>,
    pub freqs: Vec<f64>,
    /// `C × B`.
    pub multipliers: Array2<Complex64>,
    pub iteration: usize,
    pub change_history: Vec<f64>,
}

impl VmdState {
    pub fn new(num_modes: usize, num_channels: usize, num_bins: usize, freqs: Vec<f64>) -> Self {
        assert_eq!(freqs.len(), num_modes);
        Self {
            mode_spectra: Array3::zeros((num_modes, num_channels, num_bins)),
            freqs,
            multipliers: Array2::zeros((num_channels, num_bins)),
            iteration: 0,
            change_history: Vec::new(),
        }
    }

    pub fn last_change(&self) -> Option<f64> {
        self.change_history.last().copied()
    }
}

/// Squared norms gathered while overwriting one mode spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModeDelta {
    /// `‖û^{n+1} - û^n‖²`
    pub change: f64,
    /// `‖û^n‖²`
    pub previous: f64,
}

impl ModeDelta {
    pub fn accumulate(&mut self, other: ModeDelta) {
        self.change += other.change;
        self.previous += other.previous;
    }

    /// Relative change; an all-zero previous iterate counts as converged only
    /// if nothing changed.
    pub fn quotient(&self) -> f64 {
        if self.previous > 0.0 {
            self.change / self.previous
        } else if self.change == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Result of a centroid update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FreqUpdate {
    Updated(f64),
    /// The mode held no energy; the previous frequency was kept.
    ZeroEnergy(f64),
}

impl FreqUpdate {
    pub fn value(self) -> f64 {
        match self {
            FreqUpdate::Updated(w) | FreqUpdate::ZeroEnergy(w) => w,
        }
    }
}

/// Wiener-filter update of mode `k` on channel `c`.
pub fn mode_update(
    state: &mut VmdState,
    input: ArrayView2<'_, Complex64>,
    bins: &[f64],
    alpha: f64,
    k: usize,
    c: usize,
) -> ModeDelta {
    let num_modes = state.mode_spectra.dim().0;
    let omega = state.freqs[k];
    let mut delta = ModeDelta::default();
    for (m, &f) in bins.iter().enumerate() {
        let mut numer = input[[c, m]] + state.multipliers[[c, m]] * 0.5;
        for i in (0..num_modes).filter(|&i| i != k) {
            numer -= state.mode_spectra[[i, c, m]];
        }
        let d = f - omega;
        let new = numer / (1.0 + 2.0 * alpha * d * d);
        let old = state.mode_spectra[[k, c, m]];
        delta.change += (new - old).norm_sqr();
        delta.previous += old.norm_sqr();
        state.mode_spectra[[k, c, m]] = new;
    }
    delta
}

/// Power-weighted mean frequency of mode `k`, pooled over channels.
pub fn freq_update(state: &mut VmdState, bins: &[f64], k: usize) -> FreqUpdate {
    let mut weighted = 0.0;
    let mut total = 0.0;
    for lane in state.mode_spectra.index_axis(Axis(0), k).rows() {
        for (z, &f) in lane.iter().zip(bins) {
            let p = z.norm_sqr();
            weighted += f * p;
            total += p;
        }
    }
    if total > 0.0 {
        let w = (weighted / total).clamp(0.0, 0.5);
        state.freqs[k] = w;
        FreqUpdate::Updated(w)
    } else {
        FreqUpdate::ZeroEnergy(state.freqs[k])
    }
}

/// `λ̂_c ← λ̂_c + step·(x̂_c - Σ_k û_{k,c})`; returns the residual energy of
/// channel `c`.
pub fn multiplier_update(
    state: &mut VmdState,
    input: ArrayView2<'_, Complex64>,
    dual_step: f64,
    c: usize,
) -> f64 {
    let num_modes = state.mode_spectra.dim().0;
    let mut energy = 0.0;
    for m in 0..input.ncols() {
        let mut r = input[[c, m]];
        for k in 0..num_modes {
            r -= state.mode_spectra[[k, c, m]];
        }
        energy += r.norm_sqr();
        if dual_step != 0.0 {
            state.multipliers[[c, m]] += r * dual_step;
        }
    }
    energy
}

/// Runs sweeps on a precomputed `C × B` half spectrum until the relative
/// change drops below tolerance or the iteration cap is reached.
pub fn solve_spectrum(
    input: ArrayView2<'_, Complex64>,
    n_fft: usize,
    config: &DecompositionConfig,
    init: Vec<f64>,
    mut observer: Option<Observer<'_>>,
) -> Result<(VmdState, SolveStats)> {
    config.check()?;
    let (channels, num_bins) = input.dim();
    let bins = bin_freqs(n_fft);
    if bins.len() != num_bins {
        return Err(Error::ShapeMismatch(format!(
            "{num_bins} bins do not match transform length {n_fft}"
        )));
    }
    if init.len() != config.num_modes {
        return Err(Error::CustomLengthMismatch {
            expected: config.num_modes,
            got: init.len(),
        });
    }
    let k_total = config.num_modes;
    let mut state = VmdState::new(k_total, channels, num_bins, init);
    state.freqs[RESIDUAL_INDEX] = 0.0;
    let mut stats = SolveStats {
        iterations: 0,
        converged: false,
        final_change: f64::INFINITY,
        change_history: Vec::new(),
        zero_energy_events: 0,
        residual_energy: 0.0,
    };

    for n in 1..=config.max_iters {
        let mut deltas = vec![ModeDelta::default(); k_total * channels];
        for k in 0..k_total {
            for c in 0..channels {
                deltas[k * channels + c] = mode_update(&mut state, input, &bins, config.alpha, k, c);
            }
        }
        for k in (0..k_total).filter(|&k| k != RESIDUAL_INDEX) {
            if let FreqUpdate::ZeroEnergy(_) = freq_update(&mut state, &bins, k) {
                stats.zero_energy_events += 1;
            }
        }
        let mut residual = 0.0;
        for c in 0..channels {
            residual += multiplier_update(&mut state, input, config.dual_step, c);
        }
        let change = deltas.iter().map(ModeDelta::quotient).fold(0.0, f64::max);
        state.iteration = n;
        state.change_history.push(change);
        stats.iterations = n;
        stats.final_change = change;
        stats.residual_energy = residual;
        if let Some(obs) = observer.as_mut() {
            let freqs = FrequencyState::Static(state.freqs.clone());
            obs(&IterationView {
                iteration: n,
                change,
                freqs: &freqs,
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

/// (M)VMD of a whole signal. The result holds `T = 1` spectra over `L/2 + 1`
/// bins; `stats.converged == false` flags an iteration-capped run.
pub fn vmd_decompose(signal: &MultichannelSignal, config: &DecompositionConfig) -> Result<ModeSet> {
    vmd_decompose_observed(signal, config, None)
}

pub fn vmd_decompose_observed(
    signal: &MultichannelSignal,
    config: &DecompositionConfig,
    observer: Option<Observer<'_>>,
) -> Result<ModeSet> {
    config.check()?;
    check_finite(signal.samples())?;
    let FrequencyState::Static(init) = init_frequencies(config, None)? else {
        unreachable!("static init requested");
    };
    let spectra = whole_signal_spectra(signal.samples().view());
    let input = spectra.spectra.index_axis(Axis(1), 0);
    let len = signal.len();
    let (state, stats) = solve_spectrum(input, len, config, init, observer)?;

    let (k_total, channels, num_bins) = state.mode_spectra.dim();
    let fft = RealFft::new(len);
    let mut mode_time = Array3::<f64>::zeros((k_total, channels, len));
    for k in 0..k_total {
        for c in 0..channels {
            let half: Vec<Complex64> = state.mode_spectra.slice(ndarray::s![k, c, ..]).to_vec();
            for (d, v) in mode_time
                .slice_mut(ndarray::s![k, c, ..])
                .iter_mut()
                .zip(fft.inverse(&half))
            {
                *d = v;
            }
        }
    }
    let mode_spectra = state
        .mode_spectra
        .into_shape_with_order((k_total, channels, 1, num_bins))
        .map(|a: Array4<Complex64>| a)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    Ok(ModeSet {
        mode_spectra,
        mode_time,
        freqs: FrequencyState::Static(state.freqs),
        residual_index: RESIDUAL_INDEX,
        n_fft: len,
        layout: None,
        stats,
    })
}

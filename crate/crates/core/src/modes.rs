use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;

use crate::frequency::FrequencyState;
use crate::spectral::FrameLayout;

/// How a solver run ended.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    /// Stopped because the relative change fell below tolerance (rather than
    /// hitting the iteration cap).
    pub converged: bool,
    /// Convergence quotient of the final sweep.
    pub final_change: f64,
    /// Quotient after every sweep, in order.
    pub change_history: Vec<f64>,
    /// Frequency updates skipped because the mode (or window) held no energy.
    pub zero_energy_events: usize,
    /// `Σ |x̂ - Σ_k û_k|²` over all channels, windows and bins after the final
    /// sweep.
    pub residual_energy: f64,
}

/// Decomposition output shared by every solver.
#[derive(Debug, Clone)]
pub struct ModeSet {
    /// `K × C × T × B`. Whole-signal solvers store `T = 1`.
    pub mode_spectra: Array4<Complex64>,
    /// `K × C × L` reconstructed time-domain modes.
    pub mode_time: Array3<f64>,
    pub freqs: FrequencyState,
    pub residual_index: usize,
    /// Transform length behind `mode_spectra`.
    pub n_fft: usize,
    /// `None` for whole-signal (M)VMD.
    pub layout: Option<FrameLayout>,
    pub stats: SolveStats,
}

impl ModeSet {
    pub fn num_modes(&self) -> usize {
        self.mode_time.dim().0
    }

    pub fn num_channels(&self) -> usize {
        self.mode_time.dim().1
    }

    pub fn signal_len(&self) -> usize {
        self.mode_time.dim().2
    }

    /// `Σ_k mode_time[k]`, the recovered `C × L` signal.
    pub fn recovered(&self) -> Array2<f64> {
        self.mode_time.sum_axis(ndarray::Axis(0))
    }
}

/// Snapshot handed to an observer after every sweep.
#[derive(Debug)]
pub struct IterationView<'a> {
    pub iteration: usize,
    pub change: f64,
    pub freqs: &'a FrequencyState,
    pub residual_energy: f64,
}

/// Callback invoked once per sweep.
pub type Observer<'a> = &'a mut dyn FnMut(&IterationView<'_>);

//! Reconstruction error, frequency tracks, time-frequency maps and mode power.

use std::ops::Range;

use ndarray::{Array2, Array3, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::config::WindowKind;
use crate::error::{Error, Result};
use crate::modes::ModeSet;
use crate::spectral::{forward_spectra, frame_signal, half_spectrum_energy, make_window};

#[derive(Debug, Clone, PartialEq)]
pub struct Rmse {
    pub per_channel: Vec<f64>,
    pub overall: f64,
}

/// RMSE between two `C × L` arrays, per channel and pooled.
pub fn rmse_between(original: ArrayView2<'_, f64>, recovered: ArrayView2<'_, f64>) -> Result<Rmse> {
    if original.dim() != recovered.dim() {
        return Err(Error::ShapeMismatch(format!(
            "original {:?} vs recovered {:?}",
            original.dim(),
            recovered.dim()
        )));
    }
    let len = original.ncols().max(1) as f64;
    let sums: Vec<f64> = original
        .rows()
        .into_iter()
        .zip(recovered.rows())
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum())
        .collect();
    let per_channel = sums.iter().map(|s| (s / len).sqrt()).collect();
    let overall = (sums.iter().sum::<f64>() / (len * sums.len().max(1) as f64)).sqrt();
    Ok(Rmse {
        per_channel,
        overall,
    })
}

/// RMSE between the input and the sum of all modes, residual included.
pub fn reconstruction_rmse(original: ArrayView2<'_, f64>, modes: &ModeSet) -> Result<Rmse> {
    rmse_between(original, modes.recovered().view())
}

/// Central frequencies in Hz, `K × T` (or `K × 1` for static states).
pub fn freq_track_hz(modes: &ModeSet, fs: f64) -> Array2<f64> {
    modes.freqs.to_matrix().mapv(|w| w * fs)
}

/// Per-window spectral energy of each mode pooled over channels, `K × T`.
pub fn mode_power(modes: &ModeSet) -> Array2<f64> {
    let (k_total, channels, frames, _) = modes.mode_spectra.dim();
    Array2::from_shape_fn((k_total, frames), |(k, tau)| {
        (0..channels)
            .map(|c| {
                let lane = modes.mode_spectra.slice(ndarray::s![k, c, tau, ..]).to_vec();
                half_spectrum_energy(&lane, modes.n_fft)
            })
            .sum()
    })
}

/// Index of the strongest non-residual mode in each window.
pub fn dominant_modes(modes: &ModeSet) -> Vec<usize> {
    let power = mode_power(modes);
    power
        .columns()
        .into_iter()
        .map(|col| {
            (0..col.len())
                .filter(|&k| k != modes.residual_index)
                .max_by(|&a, &b| col[a].total_cmp(&col[b]))
                .unwrap_or(modes.residual_index)
        })
        .collect()
}

/// Frequency (Hz) of the strongest non-residual mode in each window.
pub fn dominant_track_hz(modes: &ModeSet, fs: f64) -> Vec<f64> {
    let dominant = dominant_modes(modes);
    dominant
        .iter()
        .enumerate()
        .map(|(tau, &k)| modes.freqs.at(k, tau) * fs)
        .collect()
}

/// Windows whose centers are at least `N/2` samples from both signal ends.
pub fn interior_windows(num_windows: usize, window_len: usize, hop: usize) -> Range<usize> {
    let skip = (window_len / 2).div_ceil(hop.max(1));
    let end = num_windows.saturating_sub(skip);
    skip.min(end)..end
}

/// Per-channel magnitude spectrogram, `C × T × (N/2 + 1)`.
pub fn spectrogram(
    samples: ArrayView2<'_, f64>,
    window_len: usize,
    hop: usize,
    kind: WindowKind,
) -> Result<Array3<f64>> {
    if window_len > samples.ncols() {
        return Err(Error::WindowTooLong {
            window_len,
            signal_len: samples.ncols(),
        });
    }
    let window = make_window(kind, window_len)?;
    let frames = frame_signal(samples, &window, hop)?;
    Ok(forward_spectra(&frames).spectra.mapv(|z| z.norm()))
}

/// Magnitude map of each reconstructed mode on channel `c`, `K × T × B`.
pub fn mode_spectrogram(modes: &ModeSet, c: usize) -> Array3<f64> {
    modes
        .mode_spectra
        .index_axis(Axis(1), c)
        .mapv(|z| z.norm())
}

/// Serialized summary of one decomposition. Field order is the JSON key
/// order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub solver: String,
    pub sample_rate_hz: f64,
    pub num_channels: usize,
    pub signal_len: usize,
    pub num_modes: usize,
    pub residual_index: usize,
    pub rmse_per_channel: Vec<f64>,
    pub rmse_overall: f64,
    /// `K` rows of Hz values, one column per window (one for static).
    pub freq_tracks: Vec<Vec<f64>>,
    /// `K` rows of per-window mode energy.
    pub mode_power: Vec<Vec<f64>>,
    pub iterations: usize,
    pub converged: bool,
    pub final_change: f64,
    pub zero_energy_events: usize,
    pub warnings: Vec<String>,
}

fn rows(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.rows().into_iter().map(|r| r.to_vec()).collect()
}

impl DecompositionReport {
    pub fn build(
        solver: &str,
        original: ArrayView2<'_, f64>,
        modes: &ModeSet,
        fs: f64,
    ) -> Result<Self> {
        let rmse = reconstruction_rmse(original, modes)?;
        let mut warnings = Vec::new();
        if !modes.stats.converged {
            warnings.push(format!(
                "not converged after {} iterations (last change {:e})",
                modes.stats.iterations, modes.stats.final_change
            ));
        }
        if modes.stats.zero_energy_events > 0 {
            warnings.push(format!(
                "{} frequency updates skipped on zero-energy modes",
                modes.stats.zero_energy_events
            ));
        }
        Ok(Self {
            solver: solver.to_string(),
            sample_rate_hz: fs,
            num_channels: modes.num_channels(),
            signal_len: modes.signal_len(),
            num_modes: modes.num_modes(),
            residual_index: modes.residual_index,
            rmse_per_channel: rmse.per_channel,
            rmse_overall: rmse.overall,
            freq_tracks: rows(&freq_track_hz(modes, fs)),
            mode_power: rows(&mode_power(modes)),
            iterations: modes.stats.iterations,
            converged: modes.stats.converged,
            final_change: if modes.stats.final_change.is_finite() {
                modes.stats.final_change
            } else {
                f64::MAX
            },
            zero_energy_events: modes.stats.zero_energy_events,
            warnings,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frequency::FrequencyState;
    use crate::modes::SolveStats;
    use ndarray::{Array3, Array4};
    use num_complex::Complex64;

    fn modeset(mode_time: Array3<f64>, freqs: FrequencyState) -> ModeSet {
        let (k, c, _) = mode_time.dim();
        ModeSet {
            mode_spectra: Array4::zeros((k, c, freqs.num_columns(), 5)),
            mode_time,
            freqs,
            residual_index: 0,
            n_fft: 8,
            layout: None,
            stats: SolveStats {
                iterations: 3,
                converged: true,
                final_change: 0.0,
                change_history: vec![],
                zero_energy_events: 0,
                residual_energy: 0.0,
            },
        }
    }

    #[test]
    fn rmse_examples() {
        let x = Array2::from_shape_fn((2, 6), |(c, n)| (c * 7 + n) as f64);
        let mut modes = Array3::zeros((2, 2, 6));
        modes.index_axis_mut(Axis(0), 1).assign(&x);
        let ms = modeset(modes.clone(), FrequencyState::Static(vec![0.0, 0.2]));
        assert_eq!(reconstruction_rmse(x.view(), &ms).unwrap().overall, 0.0);
        modes.index_axis_mut(Axis(0), 0).fill(1.0);
        let ms = modeset(modes, FrequencyState::Static(vec![0.0, 0.2]));
        let r = reconstruction_rmse(x.view(), &ms).unwrap();
        assert_eq!(r.overall, 1.0);
        assert_eq!(r.per_channel, vec![1.0, 1.0]);
        assert!(matches!(
            reconstruction_rmse(Array2::zeros((1, 6)).view(), &ms),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn track_units() {
        let ms = modeset(
            Array3::zeros((2, 1, 4)),
            FrequencyState::Static(vec![0.0, 0.15625]),
        );
        let t = freq_track_hz(&ms, 128.0);
        assert_eq!(t[[1, 0]], 20.0);
        assert_eq!(t[[0, 0]], 0.0);
        assert_eq!(t[[1, 0]] / 128.0, 0.15625);
    }

    #[test]
    fn dominant_mode_uses_power() {
        let mut ms = modeset(
            Array3::zeros((3, 1, 4)),
            FrequencyState::Static(vec![0.0, 0.1, 0.3]),
        );
        ms.mode_spectra[[0, 0, 0, 1]] = Complex64::new(100.0, 0.0);
        ms.mode_spectra[[2, 0, 0, 2]] = Complex64::new(2.0, 0.0);
        ms.mode_spectra[[1, 0, 0, 3]] = Complex64::new(1.0, 0.0);
        assert_eq!(dominant_modes(&ms), vec![2]);
        assert_eq!(dominant_track_hz(&ms, 10.0), vec![3.0]);
    }

    #[test]
    fn interior_range() {
        assert_eq!(interior_windows(100, 64, 1), 32..68);
        assert_eq!(interior_windows(50, 64, 4), 8..42);
        assert!(interior_windows(10, 64, 1).is_empty());
    }

    #[test]
    fn spectrogram_zero_and_tone() {
        let z = spectrogram(Array2::zeros((1, 64)).view(), 16, 1, WindowKind::Hann).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        let x = Array2::from_shape_fn((1, 128), |(_, n)| {
            (2.0 * std::f64::consts::PI * 4.0 * n as f64 / 32.0).cos()
        });
        let s = spectrogram(x.view(), 32, 1, WindowKind::Rectangular).unwrap();
        for tau in 16..112 {
            let row = s.slice(ndarray::s![0, tau, ..]);
            let peak = (0..row.len()).max_by(|&a, &b| row[a].total_cmp(&row[b])).unwrap();
            assert_eq!(peak, 4);
        }
    }

    #[test]
    fn report_key_order_is_stable() {
        let ms = modeset(Array3::zeros((2, 1, 4)), FrequencyState::Static(vec![0.0, 0.25]));
        let r = DecompositionReport::build("vmd", Array2::zeros((1, 4)).view(), &ms, 8.0).unwrap();
        let json = as_toml(&r);
        assert!(json.find("solver").unwrap() < json.find("rmse_overall").unwrap());
        assert_eq!(r.freq_tracks, vec![vec![0.0], vec![2.0]]);
    }

    fn as_toml(r: &DecompositionReport) -> String {
        toml::to_string(r).unwrap()
    }
}

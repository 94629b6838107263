//! Streaming dynamic STVMD.
//!
//! The state keeps the latest `N - 1` samples per channel. Each arriving
//! sample completes a length-`N` block that is framed with real cached data
//! on the left and `N/2` reflected samples on the right, decomposed with the
//! dynamic solver, and reduced to the newest sample's mode values and the
//! newest window's frequencies. Nothing after a sample's own index is ever
//! read when producing its output.

use std::collections::VecDeque;
use std::ops::Range;

use ndarray::{Array2, Array3, ArrayView1, Axis};

use crate::config::DecompositionConfig;
use crate::error::{Error, Result};
use crate::frequency::{init_frequencies, FrequencyState};
use crate::modes::SolveStats;
use crate::spectral::{
    forward_spectra, frame_with_layout, half_spectrum_energy, inverse_spectra, make_window,
    overlap_add_range, window_coverage, FrameLayout, WindowVector, WindowedSpectra,
};
use crate::stvmd::{solve_spectra, StvmdState, Variant};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OnlineOptions {
    /// Seed each block's `Ω` with the previous block's newest unpadded frame.
    pub warm_start: bool,
    /// Decompose on every `stride`-th tick after warm-up.
    pub stride: usize,
}

impl Default for OnlineOptions {
    fn default() -> Self {
        Self {
            warm_start: true,
            stride: 1,
        }
    }
}

/// Result for one sample index.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineOutput {
    pub index: usize,
    /// Fewer than `N` samples seen; values are placeholders.
    pub warmup: bool,
    /// Per-mode central frequency (cycles/sample) of the newest window that
    /// ends at this sample and holds no padding.
    pub freqs: Vec<f64>,
    /// `K × C` mode values at this sample.
    pub modes: Array2<f64>,
    /// Per-mode spectral energy of that window, pooled over channels.
    pub power: Vec<f64>,
}

impl OnlineOutput {
    /// Non-residual mode with the most window energy.
    pub fn dominant_mode(&self, residual_index: usize) -> Option<usize> {
        (0..self.power.len())
            .filter(|&k| k != residual_index)
            .max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))
    }
}

#[derive(Debug, Clone)]
pub struct OnlineState {
    config: DecompositionConfig,
    options: OnlineOptions,
    window: WindowVector,
    /// One queue per channel, oldest first.
    cache: Vec<VecDeque<f64>>,
    warm_freqs: Vec<f64>,
    received: usize,
    emitted_count: usize,
    /// Cached sample indices that have not had a decomposed output yet.
    pending: VecDeque<usize>,
    last_stats: Option<SolveStats>,
}

struct BlockResult {
    state: StvmdState,
    stats: SolveStats,
    spectra: WindowedSpectra,
}

impl OnlineState {
    pub fn new(config: DecompositionConfig, options: OnlineOptions) -> Result<Self> {
        config.check()?;
        if options.stride == 0 {
            return Err(Error::param("stride", "must be at least 1"));
        }
        let window = make_window(config.window_kind, config.window_len)?;
        let warm_freqs = match init_frequencies(&config, None)? {
            FrequencyState::Static(v) => v,
            FrequencyState::Dynamic(_) => unreachable!("static init requested"),
        };
        Ok(Self {
            config,
            options,
            window,
            cache: Vec::new(),
            warm_freqs,
            received: 0,
            emitted_count: 0,
            pending: VecDeque::new(),
            last_stats: None,
        })
    }

    pub fn config(&self) -> &DecompositionConfig {
        &self.config
    }

    pub fn options(&self) -> OnlineOptions {
        self.options
    }

    /// `C × width` copy of the cached samples, oldest first.
    pub fn cache(&self) -> Array2<f64> {
        let width = self.cache_len();
        let mut out = Array2::zeros((self.cache.len(), width));
        for (c, q) in self.cache.iter().enumerate() {
            for (j, &v) in q.iter().enumerate() {
                out[[c, j]] = v;
            }
        }
        out
    }

    pub fn cache_len(&self) -> usize {
        self.cache.first().map_or(0, VecDeque::len)
    }

    pub fn num_channels(&self) -> Option<usize> {
        (!self.cache.is_empty()).then_some(self.cache.len())
    }

    pub fn warm_freqs(&self) -> &[f64] {
        &self.warm_freqs
    }

    pub fn received(&self) -> usize {
        self.received
    }

    pub fn emitted_count(&self) -> usize {
        self.emitted_count
    }

    pub fn is_warm(&self) -> bool {
        self.received >= self.config.window_len
    }

    pub fn last_stats(&self) -> Option<&SolveStats> {
        self.last_stats.as_ref()
    }

    /// Appends one sample (one value per channel).
    ///
    /// Returns a warm-up placeholder for the first `N - 1` samples, a
    /// decomposed output on decomposition ticks, and `None` on ticks skipped
    /// by the stride.
    pub fn push(&mut self, sample: &[f64]) -> Result<Option<OnlineOutput>> {
        if self.cache.is_empty() {
            if sample.is_empty() {
                return Err(Error::ShapeMismatch("sample has no channels".into()));
            }
            self.cache = vec![VecDeque::with_capacity(self.config.window_len); sample.len()];
        } else if sample.len() != self.cache.len() {
            return Err(Error::ShapeMismatch(format!(
                "sample has {} channels, stream has {}",
                sample.len(),
                self.cache.len()
            )));
        }
        if let Some(c) = sample.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                channel: c,
                index: self.received,
            });
        }
        for (q, &v) in self.cache.iter_mut().zip(sample) {
            q.push_back(v);
        }
        let index = self.received;
        self.received += 1;
        let n = self.config.window_len;

        if self.cache_len() < n {
            self.pending.push_back(index);
            self.emitted_count += 1;
            return Ok(Some(self.placeholder(index)));
        }

        let output = if (self.received - n).is_multiple_of(self.options.stride) {
            let block = self.cache();
            let result = self.solve_block(block)?;
            let local = n - 1;
            let tau = report_frame(&result.spectra.layout.expect("framed"), local);
            let values = self.mode_values(&result, local..n)?;
            let out = self.output_at(&result, index, tau, values.index_axis(Axis(2), 0).to_owned());
            if self.options.warm_start {
                self.warm_freqs = result.state.freqs.column(seed_frame(&result));
            }
            self.last_stats = Some(result.stats);
            self.emitted_count += 1;
            Some(out)
        } else {
            self.pending.push_back(index);
            None
        };

        for q in &mut self.cache {
            q.pop_front();
        }
        let oldest = self.received - self.cache_len();
        while self.pending.front().is_some_and(|&i| i < oldest) {
            self.pending.pop_front();
        }
        Ok(output)
    }

    /// Decomposes the cached tail once for samples that never received a
    /// decomposed output (warm-up or stride-skipped). A second call emits
    /// nothing.
    pub fn flush(&mut self) -> Result<Vec<OnlineOutput>> {
        let n = self.config.window_len;
        let len = self.cache_len();
        if self.pending.is_empty() || len <= n / 2 {
            self.pending.clear();
            return Ok(Vec::new());
        }
        let oldest = self.received - len;
        let result = self.solve_block(self.cache())?;
        let layout = result.spectra.layout.expect("framed");
        let coverage = window_coverage(&layout, &self.window);
        let wanted: Vec<usize> = self
            .pending
            .iter()
            .map(|&i| i - oldest)
            .filter(|&j| coverage[j] > 0.0)
            .collect();
        let mut outputs = Vec::with_capacity(wanted.len());
        if let (Some(&first), Some(&last)) = (wanted.first(), wanted.last()) {
            let values = self.mode_values(&result, first..last + 1)?;
            for &j in &wanted {
                let tau = report_frame(&layout, j);
                let v = values.index_axis(Axis(2), j - first).to_owned();
                outputs.push(self.output_at(&result, oldest + j, tau, v));
            }
        }
        if self.options.warm_start {
            self.warm_freqs = result.state.freqs.column(seed_frame(&result));
        }
        self.last_stats = Some(result.stats);
        self.emitted_count += outputs.len();
        self.pending.clear();
        Ok(outputs)
    }

    fn placeholder(&self, index: usize) -> OnlineOutput {
        let k = self.config.num_modes;
        OnlineOutput {
            index,
            warmup: true,
            freqs: self.warm_freqs.clone(),
            modes: Array2::zeros((k, self.cache.len())),
            power: vec![0.0; k],
        }
    }

    fn solve_block(&self, block: Array2<f64>) -> Result<BlockResult> {
        let layout = FrameLayout::causal_block(block.ncols(), self.config.window_len);
        let frames = frame_with_layout(block.view(), &self.window, layout)?;
        let spectra = forward_spectra(&frames);
        let init = if self.options.warm_start {
            FrequencyState::replicate(ArrayView1::from(&self.warm_freqs), layout.num_frames)
        } else {
            init_frequencies(&self.config, Some(layout.num_frames))?
        };
        let (state, stats) = solve_spectra(&spectra, &self.config, Variant::Dynamic, init, None)?;
        Ok(BlockResult {
            state,
            stats,
            spectra,
        })
    }

    /// `K × C × range.len()` time-domain mode values over `range` of the
    /// block.
    fn mode_values(&self, result: &BlockResult, range: Range<usize>) -> Result<Array3<f64>> {
        let (k_total, channels, _, _) = result.state.mode_spectra.dim();
        let mut out = Array3::zeros((k_total, channels, range.len()));
        for k in 0..k_total {
            let mode = WindowedSpectra {
                spectra: result.state.mode_spectra.index_axis(Axis(0), k).to_owned(),
                n_fft: result.spectra.n_fft,
                layout: result.spectra.layout,
            };
            let frames = inverse_spectra(&mode)?;
            let values = overlap_add_range(&frames, &self.window, range.clone())?;
            out.index_axis_mut(Axis(0), k).assign(&values);
        }
        Ok(out)
    }

    fn output_at(
        &self,
        result: &BlockResult,
        index: usize,
        tau: usize,
        modes: Array2<f64>,
    ) -> OnlineOutput {
        let (k_total, channels, _, _) = result.state.mode_spectra.dim();
        let n_fft = result.spectra.n_fft;
        let power = (0..k_total)
            .map(|k| {
                (0..channels)
                    .map(|c| {
                        let lane = result.state.mode_spectra.slice(ndarray::s![k, c, tau, ..]);
                        half_spectrum_energy(lane.as_slice().expect("contiguous"), n_fft)
                    })
                    .sum()
            })
            .collect();
        OnlineOutput {
            index,
            warmup: false,
            freqs: result.state.freqs.column(tau),
            modes,
            power,
        }
    }
}

/// Frame reported for block sample `j`: the one spanning `[j + 1 - N, j]`
/// when the block reaches back that far, else the frame centered nearest to
/// `j`.
fn report_frame(layout: &FrameLayout, j: usize) -> usize {
    let n = layout.window_len;
    if j + 1 >= n {
        (j + 1 - n).min(layout.num_frames - 1)
    } else {
        layout.frame_nearest(j)
    }
}

/// Column that seeds the next block: the newest frame lying on received
/// samples only.
fn seed_frame(result: &BlockResult) -> usize {
    let layout = result.spectra.layout.expect("framed");
    report_frame(&layout, layout.signal_len - 1)
}

pub fn online_init(config: DecompositionConfig) -> Result<OnlineState> {
    OnlineState::new(config, OnlineOptions::default())
}

pub fn online_push(state: &mut OnlineState, sample: &[f64]) -> Result<Option<OnlineOutput>> {
    state.push(sample)
}

pub fn online_flush(state: &mut OnlineState) -> Result<Vec<OnlineOutput>> {
    state.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::InitScheme;

    fn config(n: usize) -> DecompositionConfig {
        DecompositionConfig {
            window_len: n,
            max_iters: 200,
            tolerance: 1e-7,
            ..Default::default()
        }
    }

    #[test]
    fn init_state_is_empty() {
        let s = online_init(config(64)).unwrap();
        assert_eq!(s.cache_len(), 0);
        assert_eq!(s.warm_freqs(), &[0.0, 0.5 / 3.0, 1.0 / 3.0]);
        let z = online_init(DecompositionConfig {
            init: InitScheme::Zero,
            ..config(64)
        })
        .unwrap();
        assert!(z.warm_freqs().iter().all(|&w| w == 0.0));
        assert!(online_init(DecompositionConfig {
            window_len: 7,
            ..config(64)
        })
        .is_err());
    }

    #[test]
    fn warmup_then_bounded_cache() {
        let n = 16;
        let mut s = online_init(config(n)).unwrap();
        for i in 0..40 {
            let out = s.push(&[(i as f64 * 0.3).sin()]).unwrap().unwrap();
            assert_eq!(out.index, i);
            assert_eq!(out.warmup, i < n - 1);
            assert!(s.cache_len() < n);
            if i >= n - 1 {
                assert_eq!(s.cache_len(), n - 1);
            }
        }
    }

    #[test]
    fn zero_stream_stays_at_init() {
        let mut s = online_init(config(8)).unwrap();
        let init = s.warm_freqs().to_vec();
        for _ in 0..20 {
            let out = s.push(&[0.0, 0.0]).unwrap().unwrap();
            assert!(out.modes.iter().all(|&v| v == 0.0));
            assert_eq!(out.freqs, init);
        }
    }

    #[test]
    fn stride_skips_and_flush_fills() {
        let n = 8;
        let mut s = OnlineState::new(
            config(n),
            OnlineOptions {
                warm_start: true,
                stride: 3,
            },
        )
        .unwrap();
        let mut decomposed = Vec::new();
        for i in 0..20 {
            if let Some(out) = s.push(&[(i as f64).cos()]).unwrap() {
                if !out.warmup {
                    decomposed.push(out.index);
                }
            }
        }
        assert_eq!(decomposed, vec![7, 10, 13, 16, 19]);
        let flushed: Vec<usize> = s.flush().unwrap().iter().map(|o| o.index).collect();
        assert_eq!(flushed, vec![14, 15, 17, 18]);
        assert!(s.flush().unwrap().is_empty());
    }

    #[test]
    fn flush_of_short_stream() {
        let mut s = online_init(config(8)).unwrap();
        assert!(s.flush().unwrap().is_empty());
        for i in 0..6 {
            s.push(&[i as f64]).unwrap();
        }
        let out = s.flush().unwrap();
        assert_eq!(out.len(), 6);
        assert!(out.iter().all(|o| !o.warmup));
        assert!(s.flush().unwrap().is_empty());
    }

    #[test]
    fn channel_count_fixed() {
        let mut s = online_init(config(8)).unwrap();
        s.push(&[1.0, 2.0]).unwrap();
        assert!(matches!(s.push(&[1.0]), Err(Error::ShapeMismatch(_))));
        assert!(matches!(s.push(&[1.0, f64::NAN]), Err(Error::NonFinite { .. })));
    }
}

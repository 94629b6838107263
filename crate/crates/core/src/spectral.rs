//! Windowing, framing with reflective padding, half-spectrum transforms and
//! overlap-add recovery.
//!
//! Frames are indexed by their center sample. A window of even length `N`
//! covers offsets `-N/2 < n <= N/2` around the center, so window coefficient
//! `i` multiplies the sample at `center + i + 1 - N/2`. Offline framing pads
//! `N/2` mirrored samples on both sides, which gives one frame per input
//! sample when `hop = 1`.

use std::f64::consts::PI;
use std::sync::Arc;

use ndarray::{Array2, Array3, ArrayView2};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::config::WindowKind;
use crate::error::{Error, Result};

impl WindowKind {
    /// Continuous evaluation of the window at position `n` of a length-`len`
    /// window.
    pub fn value_at(self, n: f64, len: usize) -> f64 {
        let denom = (len.max(2) - 1) as f64;
        match self {
            WindowKind::Hamming => 0.54 - 0.46 * (2.0 * PI * n / denom).cos(),
            WindowKind::Hann => 0.5 - 0.5 * (2.0 * PI * n / denom).cos(),
            WindowKind::Rectangular => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowVector {
    pub coeffs: Vec<f64>,
    pub kind: WindowKind,
}

impl WindowVector {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }
}

pub fn make_window(kind: WindowKind, len: usize) -> Result<WindowVector> {
    if len < 2 || !len.is_multiple_of(2) {
        return Err(Error::BadWindow(len));
    }
    let coeffs = (0..len)
        .map(|n| kind.value_at(n as f64, len).max(0.0))
        .collect();
    Ok(WindowVector { coeffs, kind })
}

/// Mirrors `left` samples before and `right` samples after `signal` without
/// repeating the edge sample (`x[-1] = x[1]`).
pub fn reflect_pad(signal: &[f64], left: usize, right: usize) -> Result<Vec<f64>> {
    let len = signal.len();
    for pad in [left, right] {
        if pad > 0 && pad >= len {
            return Err(Error::PadTooLarge { pad, len });
        }
    }
    let mut out = Vec::with_capacity(len + left + right);
    out.extend((1..=left).rev().map(|i| signal[i]));
    out.extend_from_slice(signal);
    out.extend((1..=right).map(|i| signal[len - 1 - i]));
    Ok(out)
}

/// Where each frame sits relative to the signal it was cut from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FrameLayout {
    pub signal_len: usize,
    pub window_len: usize,
    pub hop: usize,
    /// Center sample of frame 0.
    pub first_center: usize,
    pub num_frames: usize,
    pub pad_left: usize,
    pub pad_right: usize,
}

impl FrameLayout {
    /// Offline layout: frames centered on samples `0, hop, 2·hop, …` with
    /// `N/2` reflective padding on both sides.
    pub fn centered(signal_len: usize, window_len: usize, hop: usize) -> Self {
        Self {
            signal_len,
            window_len,
            hop,
            first_center: 0,
            num_frames: signal_len.div_ceil(hop.max(1)),
            pad_left: window_len / 2,
            pad_right: window_len / 2,
        }
    }

    /// Streaming layout for a block whose left edge is real cached data:
    /// frames centered from `N/2 - 1` to the last sample (the first frame
    /// needs no padding), right side padded by `N/2`.
    pub fn causal_block(block_len: usize, window_len: usize) -> Self {
        let first_center = window_len / 2 - 1;
        Self {
            signal_len: block_len,
            window_len,
            hop: 1,
            first_center,
            num_frames: block_len.saturating_sub(first_center),
            pad_left: 0,
            pad_right: window_len / 2,
        }
    }

    pub fn center(&self, tau: usize) -> usize {
        self.first_center + tau * self.hop
    }

    pub fn centers(&self) -> Vec<usize> {
        (0..self.num_frames).map(|tau| self.center(tau)).collect()
    }

    /// Signal index (possibly negative, i.e. in the padding) of window
    /// coefficient 0 for frame `tau`.
    pub fn frame_start(&self, tau: usize) -> isize {
        self.center(tau) as isize + 1 - (self.window_len / 2) as isize
    }

    /// Frame whose center is closest to `sample`.
    pub fn frame_nearest(&self, sample: usize) -> usize {
        if sample <= self.first_center || self.num_frames == 0 {
            return 0;
        }
        let tau = ((sample - self.first_center) as f64 / self.hop as f64).round() as usize;
        tau.min(self.num_frames - 1)
    }
}

/// Windowed frames, `C × T × N`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedTensor {
    pub frames: Array3<f64>,
    pub layout: FrameLayout,
}

impl WindowedTensor {
    pub fn center_indices(&self) -> Vec<usize> {
        self.layout.centers()
    }
}

/// Offline framing of `C × L` samples with `N/2` reflective padding.
pub fn frame_signal(
    samples: ArrayView2<'_, f64>,
    window: &WindowVector,
    hop: usize,
) -> Result<WindowedTensor> {
    if hop == 0 {
        return Err(Error::param("hop", "must be at least 1"));
    }
    let layout = FrameLayout::centered(samples.ncols(), window.len(), hop);
    frame_with_layout(samples, window, layout)
}

pub fn frame_with_layout(
    samples: ArrayView2<'_, f64>,
    window: &WindowVector,
    layout: FrameLayout,
) -> Result<WindowedTensor> {
    let (channels, len) = samples.dim();
    let n = window.len();
    if len != layout.signal_len || n != layout.window_len {
        return Err(Error::ShapeMismatch(format!(
            "layout expects L={} N={}, got L={len} N={n}",
            layout.signal_len, layout.window_len
        )));
    }
    let mut frames = Array3::<f64>::zeros((channels, layout.num_frames, n));
    for (c, row) in samples.rows().into_iter().enumerate() {
        let row = row.to_vec();
        let padded = reflect_pad(&row, layout.pad_left, layout.pad_right)?;
        for tau in 0..layout.num_frames {
            let start = layout.frame_start(tau) + layout.pad_left as isize;
            if start < 0 || start as usize + n > padded.len() {
                return Err(Error::PadTooLarge {
                    pad: layout.pad_left.max(layout.pad_right),
                    len,
                });
            }
            let src = &padded[start as usize..start as usize + n];
            let mut dst = frames.slice_mut(ndarray::s![c, tau, ..]);
            for ((d, &x), &w) in dst.iter_mut().zip(src).zip(&window.coeffs) {
                *d = x * w;
            }
        }
    }
    Ok(WindowedTensor { frames, layout })
}

/// Cached forward/inverse plans for real input of one length.
#[derive(Clone)]
pub struct RealFft {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for RealFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RealFft").field("len", &self.len).finish()
    }
}

impl RealFft {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn num_bins(&self) -> usize {
        self.len / 2 + 1
    }

    /// Bins `0..=len/2` of the DFT `X[m] = Σ x[n] e^{-j2πmn/len}`.
    pub fn forward(&self, input: &[f64]) -> Vec<Complex64> {
        assert_eq!(input.len(), self.len);
        let mut buf: Vec<Complex64> = input.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.forward.process(&mut buf);
        buf.truncate(self.num_bins());
        buf
    }

    /// Real inverse from a half spectrum, treating the missing bins as the
    /// conjugate mirror. Imaginary parts of the DC and (even-length) Nyquist
    /// bins are ignored.
    pub fn inverse(&self, half: &[Complex64]) -> Vec<f64> {
        let n = self.len;
        assert_eq!(half.len(), self.num_bins());
        let mut buf = vec![Complex64::new(0.0, 0.0); n];
        buf[0] = Complex64::new(half[0].re, 0.0);
        for m in 1..half.len() {
            if 2 * m == n {
                buf[m] = Complex64::new(half[m].re, 0.0);
            } else {
                buf[m] = half[m];
                buf[n - m] = half[m].conj();
            }
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / n as f64;
        buf.iter().map(|z| z.re * scale).collect()
    }
}

/// Per-channel, per-frame half spectra, `C × T × (N/2 + 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSpectra {
    pub spectra: Array3<Complex64>,
    /// Transform length each spectrum was taken over.
    pub n_fft: usize,
    /// Framing metadata; `None` for whole-signal spectra.
    pub layout: Option<FrameLayout>,
}

impl WindowedSpectra {
    pub fn num_channels(&self) -> usize {
        self.spectra.dim().0
    }

    pub fn num_frames(&self) -> usize {
        self.spectra.dim().1
    }

    pub fn num_bins(&self) -> usize {
        self.spectra.dim().2
    }

    /// Bin `m` sits at `m / n_fft` cycles/sample.
    pub fn bin_freqs(&self) -> Vec<f64> {
        bin_freqs(self.n_fft)
    }
}

pub fn bin_freqs(n_fft: usize) -> Vec<f64> {
    (0..n_fft / 2 + 1).map(|m| m as f64 / n_fft as f64).collect()
}

pub fn forward_spectra(frames: &WindowedTensor) -> WindowedSpectra {
    let (channels, num_frames, n) = frames.frames.dim();
    let fft = RealFft::new(n);
    let mut spectra = Array3::<Complex64>::zeros((channels, num_frames, fft.num_bins()));
    let mut scratch = vec![0.0; n];
    for c in 0..channels {
        for tau in 0..num_frames {
            for (s, &x) in scratch
                .iter_mut()
                .zip(frames.frames.slice(ndarray::s![c, tau, ..]))
            {
                *s = x;
            }
            let half = fft.forward(&scratch);
            spectra
                .slice_mut(ndarray::s![c, tau, ..])
                .iter_mut()
                .zip(half)
                .for_each(|(d, v)| *d = v);
        }
    }
    WindowedSpectra {
        spectra,
        n_fft: n,
        layout: Some(frames.layout),
    }
}

/// Whole-signal half spectra (`C × 1 × (L/2 + 1)`), the transform used by
/// plain (M)VMD.
pub fn whole_signal_spectra(samples: ArrayView2<'_, f64>) -> WindowedSpectra {
    let (channels, len) = samples.dim();
    let fft = RealFft::new(len);
    let mut spectra = Array3::<Complex64>::zeros((channels, 1, fft.num_bins()));
    for (c, row) in samples.rows().into_iter().enumerate() {
        let half = fft.forward(&row.to_vec());
        spectra
            .slice_mut(ndarray::s![c, 0, ..])
            .iter_mut()
            .zip(half)
            .for_each(|(d, v)| *d = v);
    }
    WindowedSpectra {
        spectra,
        n_fft: len,
        layout: None,
    }
}

pub fn inverse_spectra(spectra: &WindowedSpectra) -> Result<WindowedTensor> {
    let layout = spectra.layout.ok_or_else(|| {
        Error::ShapeMismatch("whole-signal spectra carry no frame layout".into())
    })?;
    let (channels, num_frames, bins) = spectra.spectra.dim();
    let fft = RealFft::new(spectra.n_fft);
    if bins != fft.num_bins() {
        return Err(Error::ShapeMismatch(format!(
            "{bins} bins do not match transform length {}",
            spectra.n_fft
        )));
    }
    let mut frames = Array3::<f64>::zeros((channels, num_frames, spectra.n_fft));
    let mut half = vec![Complex64::new(0.0, 0.0); bins];
    for c in 0..channels {
        for tau in 0..num_frames {
            for (h, &v) in half
                .iter_mut()
                .zip(spectra.spectra.slice(ndarray::s![c, tau, ..]))
            {
                *h = v;
            }
            let time = fft.inverse(&half);
            frames
                .slice_mut(ndarray::s![c, tau, ..])
                .iter_mut()
                .zip(time)
                .for_each(|(d, v)| *d = v);
        }
    }
    Ok(WindowedTensor { frames, layout })
}

/// Sum of window weights landing on each signal sample.
pub fn window_coverage(layout: &FrameLayout, window: &WindowVector) -> Vec<f64> {
    let mut den = vec![0.0; layout.signal_len];
    for tau in 0..layout.num_frames {
        let start = layout.frame_start(tau);
        for (i, &w) in window.coeffs.iter().enumerate() {
            let j = start + i as isize;
            if j >= 0 && (j as usize) < layout.signal_len {
                den[j as usize] += w;
            }
        }
    }
    den
}

/// `x[n] = Σ_τ frame_τ[n] / Σ_τ w[n - c_τ]` on the unpadded support.
pub fn overlap_add_recover(frames: &WindowedTensor, window: &WindowVector) -> Result<Array2<f64>> {
    overlap_add_range(frames, window, 0..frames.layout.signal_len)
}

/// Overlap-add restricted to `range`; only the samples in `range` must have
/// non-vanishing window coverage. Output is `C × range.len()`.
pub fn overlap_add_range(
    frames: &WindowedTensor,
    window: &WindowVector,
    range: std::ops::Range<usize>,
) -> Result<Array2<f64>> {
    let layout = &frames.layout;
    if window.len() != layout.window_len || range.end > layout.signal_len {
        return Err(Error::ShapeMismatch(format!(
            "window {} / range {:?} incompatible with layout {layout:?}",
            window.len(),
            range
        )));
    }
    let den = window_coverage(layout, window);
    if let Some(j) = range.clone().find(|&j| den[j] <= 0.0) {
        return Err(Error::ZeroWindowSum(j));
    }
    let channels = frames.frames.dim().0;
    let mut num = Array2::<f64>::zeros((channels, range.len()));
    let (lo, hi) = (range.start as isize, range.end as isize);
    for c in 0..channels {
        for tau in 0..layout.num_frames {
            let start = layout.frame_start(tau);
            if start + layout.window_len as isize <= lo || start >= hi {
                continue;
            }
            let frame = frames.frames.slice(ndarray::s![c, tau, ..]);
            for (i, &v) in frame.iter().enumerate() {
                let j = start + i as isize;
                if j >= lo && j < hi {
                    num[[c, (j - lo) as usize]] += v;
                }
            }
        }
    }
    for mut row in num.rows_mut() {
        for (v, j) in row.iter_mut().zip(range.clone()) {
            *v /= den[j];
        }
    }
    Ok(num)
}

/// `Σ_m weight_m |X[m]|² / N` with weight 1 at DC and Nyquist and 2
/// elsewhere, which equals the time-domain energy of the frame.
pub fn half_spectrum_energy(half: &[Complex64], n_fft: usize) -> f64 {
    half.iter()
        .enumerate()
        .map(|(m, z)| symmetry_weight(m, n_fft) * z.norm_sqr())
        .sum::<f64>()
        / n_fft as f64
}

#[inline]
pub fn symmetry_weight(m: usize, n_fft: usize) -> f64 {
    if m == 0 || 2 * m == n_fft {
        1.0
    } else {
        2.0
    }
}

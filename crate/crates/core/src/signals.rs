//! Experiment signal generators, the recording CSV format, and SSVEP-style
//! preprocessing.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, Array3, Axis};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::signal::MultichannelSignal;
use crate::spectral::RealFft;

/// Fundamental schedule of simulated signal 1, one entry per second.
pub const SIM1_SEQ: [f64; 8] = [2.0, 5.0, 0.0, 6.0, 3.0, 1.0, 4.0, 7.0];
pub const SIM1_OFFSET_HZ: f64 = 13.0;

/// Additive Gaussian white noise of standard deviation `amplitude`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub amplitude: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(amplitude: f64, seed: u64) -> Result<Self> {
        if !(amplitude >= 0.0 && amplitude.is_finite()) {
            return Err(Error::param("noise amplitude", "must be finite and non-negative"));
        }
        Ok(Self { amplitude, seed })
    }

    pub fn silent() -> Self {
        Self {
            amplitude: 0.0,
            seed: 0,
        }
    }

    /// `channels × len` noise; rows are consecutive draws of one stream, so
    /// channels are independent.
    pub fn sample(&self, channels: usize, len: usize) -> Array2<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        Array2::from_shape_simple_fn((channels, len), || {
            let z: f64 = StandardNormal.sample(&mut rng);
            self.amplitude * z
        })
    }
}

fn time_axis(fs: f64, duration: f64) -> Result<Vec<f64>> {
    if !(fs > 0.0 && fs.is_finite()) {
        return Err(Error::param("fs", "must be positive"));
    }
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(Error::param("duration", "must be positive"));
    }
    let len = (fs * duration).round() as usize;
    Ok((0..len).map(|n| n as f64 / fs).collect())
}

fn build(
    fs: f64,
    duration: f64,
    channels: usize,
    noise: NoiseSpec,
    f: impl Fn(usize, f64) -> f64,
) -> Result<MultichannelSignal> {
    let t = time_axis(fs, duration)?;
    let eta = noise.sample(channels, t.len());
    let samples = Array2::from_shape_fn((channels, t.len()), |(c, n)| f(c, t[n]) + eta[[c, n]]);
    MultichannelSignal::new(samples, fs)
}

fn sine(freq_hz: f64, t: f64) -> f64 {
    (2.0 * PI * freq_hz * t).sin()
}

/// `sin(2π·20t) + 0.5·sin(2π·28t)`.
pub fn gen_two_tone(fs: f64, duration: f64) -> Result<MultichannelSignal> {
    build(fs, duration, 1, NoiseSpec::silent(), |_, t| {
        sine(20.0, t) + 0.5 * sine(28.0, t)
    })
}

/// Two channels sharing a 36 Hz component: `{20, 36}` and `{28, 36}` Hz.
pub fn gen_common_mode_pair(fs: f64, duration: f64) -> Result<MultichannelSignal> {
    build(fs, duration, 2, NoiseSpec::silent(), |c, t| {
        let own = if c == 0 { 20.0 } else { 28.0 };
        sine(own, t) + 0.5 * sine(36.0, t)
    })
}

/// Fundamental of simulated signal 1 at time `t`, cycling through
/// [`SIM1_SEQ`] every 8 s.
pub fn sim1_fundamental_hz(t: f64) -> f64 {
    let second = t.max(0.0).floor() as usize;
    SIM1_SEQ[second % SIM1_SEQ.len()] + SIM1_OFFSET_HZ
}

/// True when `duration` runs past one pass of the schedule and the
/// generator repeats it.
pub fn sim1_is_cyclic(duration: f64) -> bool {
    duration > SIM1_SEQ.len() as f64
}

/// Stepped fundamental plus its second harmonic.
pub fn gen_sim1(fs: f64, duration: f64, noise: NoiseSpec) -> Result<MultichannelSignal> {
    build(fs, duration, 1, noise, |_, t| {
        let w = sim1_fundamental_hz(t);
        sine(w, t) + 0.5 * sine(2.0 * w, t)
    })
}

/// Two linear chirps.
pub fn gen_sim2(fs: f64, duration: f64, noise: NoiseSpec) -> Result<MultichannelSignal> {
    build(fs, duration, 1, noise, |_, t| {
        (2.0 * PI * (20.0 * t + 10.0) * t).sin() + 0.5 * (2.0 * PI * (20.0 * t + 20.0) * t).sin()
    })
}

/// Instantaneous frequencies (Hz) of the two chirps.
pub fn sim2_if_hz(t: f64) -> [f64; 2] {
    [40.0 * t + 10.0, 40.0 * t + 20.0]
}

/// Two sinusoidally modulated components.
pub fn gen_sim3(fs: f64, duration: f64, noise: NoiseSpec) -> Result<MultichannelSignal> {
    build(fs, duration, 1, noise, |_, t| {
        let m = 2.0 * PI * 0.25 * t;
        (2.0 * PI * (2.0 * m.sin() + 10.0) * t).sin()
            + 0.5 * (2.0 * PI * (1.5 * m.cos() + 40.0) * t).sin()
    })
}

/// Instantaneous frequencies (Hz) of the two modulated components.
pub fn sim3_if_hz(t: f64) -> [f64; 2] {
    let m = 2.0 * PI * 0.25 * t;
    let dm = 2.0 * PI * 0.25;
    [
        2.0 * m.sin() + 10.0 + 2.0 * t * dm * m.cos(),
        1.5 * m.cos() + 40.0 - 1.5 * t * dm * m.sin(),
    ]
}

/// Shared stepped fundamental with a 2nd harmonic on channel 0 and a 3rd on
/// channel 1.
pub fn gen_alignment_pair(fs: f64, duration: f64, noise: NoiseSpec) -> Result<MultichannelSignal> {
    build(fs, duration, 2, noise, |c, t| {
        let w = sim1_fundamental_hz(t);
        let factor = if c == 0 { 2.0 } else { 3.0 };
        sine(w, t) + 0.5 * sine(factor * w, t)
    })
}

/// Synthetic SSVEP-like recording: a fundamental that switches frequency
/// with continuous phase, a second harmonic, and independent noise per
/// epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct SsvepSurrogate {
    pub fs: f64,
    pub duration: f64,
    pub switch_s: f64,
    pub f_before_hz: f64,
    pub f_after_hz: f64,
    pub harmonic_amplitude: f64,
    pub epochs: usize,
    pub noise: NoiseSpec,
}

impl Default for SsvepSurrogate {
    fn default() -> Self {
        Self {
            fs: 250.0,
            duration: 10.0,
            switch_s: 5.0,
            f_before_hz: 10.0,
            f_after_hz: 13.0,
            harmonic_amplitude: 0.5,
            epochs: 6,
            noise: NoiseSpec {
                amplitude: 0.5,
                seed: 3,
            },
        }
    }
}

impl SsvepSurrogate {
    pub fn fundamental_hz(&self, t: f64) -> f64 {
        if t < self.switch_s {
            self.f_before_hz
        } else {
            self.f_after_hz
        }
    }
}

pub fn gen_ssvep_surrogate(spec: &SsvepSurrogate) -> Result<EpochedRecording> {
    let t = time_axis(spec.fs, spec.duration)?;
    if spec.epochs == 0 {
        return Err(Error::param("epochs", "must be at least 1"));
    }
    let mut phase = 0.0;
    let clean: Vec<f64> = t
        .iter()
        .map(|&ti| {
            phase += 2.0 * PI * spec.fundamental_hz(ti) / spec.fs;
            phase.sin() + spec.harmonic_amplitude * (2.0 * phase).sin()
        })
        .collect();
    let eta = spec.noise.sample(spec.epochs, t.len());
    let epochs = Array3::from_shape_fn((spec.epochs, 1, t.len()), |(e, _, n)| {
        clean[n] + eta[[e, n]]
    });
    EpochedRecording::new(epochs, spec.fs, vec!["surrogate".into()])
}

/// Named generators exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SignalKind {
    TwoTone,
    CommonPair,
    Sim1,
    Sim2,
    Sim3,
    AlignPair,
    SsvepSurrogate,
}

impl SignalKind {
    pub const ALL: [SignalKind; 7] = [
        SignalKind::TwoTone,
        SignalKind::CommonPair,
        SignalKind::Sim1,
        SignalKind::Sim2,
        SignalKind::Sim3,
        SignalKind::AlignPair,
        SignalKind::SsvepSurrogate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SignalKind::TwoTone => "two_tone",
            SignalKind::CommonPair => "common_pair",
            SignalKind::Sim1 => "sim1",
            SignalKind::Sim2 => "sim2",
            SignalKind::Sim3 => "sim3",
            SignalKind::AlignPair => "align_pair",
            SignalKind::SsvepSurrogate => "ssvep_surrogate",
        }
    }

    pub fn is_noisy(self) -> bool {
        !matches!(self, SignalKind::TwoTone | SignalKind::CommonPair)
    }

    /// Recording for this kind. `noise_amplitude` applies to noisy kinds
    /// only.
    pub fn generate(
        self,
        fs: f64,
        duration: f64,
        noise_amplitude: f64,
        seed: u64,
    ) -> Result<EpochedRecording> {
        let noise = NoiseSpec::new(noise_amplitude, seed)?;
        let single = |s: MultichannelSignal| EpochedRecording::from_signal(&s, None);
        match self {
            SignalKind::TwoTone => single(gen_two_tone(fs, duration)?),
            SignalKind::CommonPair => single(gen_common_mode_pair(fs, duration)?),
            SignalKind::Sim1 => single(gen_sim1(fs, duration, noise)?),
            SignalKind::Sim2 => single(gen_sim2(fs, duration, noise)?),
            SignalKind::Sim3 => single(gen_sim3(fs, duration, noise)?),
            SignalKind::AlignPair => single(gen_alignment_pair(fs, duration, noise)?),
            SignalKind::SsvepSurrogate => gen_ssvep_surrogate(&SsvepSurrogate {
                fs,
                duration,
                switch_s: duration / 2.0,
                noise,
                ..Default::default()
            }),
        }
    }

    /// Component instantaneous frequencies (Hz) at time `t`.
    pub fn truth_hz(self, t: f64, duration: f64) -> Vec<f64> {
        match self {
            SignalKind::TwoTone => vec![20.0, 28.0],
            SignalKind::CommonPair => vec![20.0, 28.0, 36.0],
            SignalKind::Sim1 => {
                let w = sim1_fundamental_hz(t);
                vec![w, 2.0 * w]
            }
            SignalKind::Sim2 => sim2_if_hz(t).to_vec(),
            SignalKind::Sim3 => sim3_if_hz(t).to_vec(),
            SignalKind::AlignPair => {
                let w = sim1_fundamental_hz(t);
                vec![w, 2.0 * w, 3.0 * w]
            }
            SignalKind::SsvepSurrogate => {
                let w = if t < duration / 2.0 { 10.0 } else { 13.0 };
                vec![w, 2.0 * w]
            }
        }
    }

    pub fn truth_labels(self) -> Vec<&'static str> {
        match self {
            SignalKind::TwoTone => vec!["tone_20", "tone_28"],
            SignalKind::CommonPair => vec!["ch0_own", "ch1_own", "common"],
            SignalKind::Sim1 | SignalKind::SsvepSurrogate => vec!["fundamental", "harmonic2"],
            SignalKind::Sim2 | SignalKind::Sim3 => vec!["component1", "component2"],
            SignalKind::AlignPair => vec!["fundamental", "harmonic2", "harmonic3"],
        }
    }
}

impl FromStr for SignalKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SignalKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::param("signal", format!("unknown signal '{s}'")))
    }
}

/// `E × C × L` epoched recording.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochedRecording {
    epochs: Array3<f64>,
    sample_rate_hz: f64,
    channel_names: Vec<String>,
}

impl EpochedRecording {
    pub fn new(epochs: Array3<f64>, sample_rate_hz: f64, channel_names: Vec<String>) -> Result<Self> {
        let (e, c, l) = epochs.dim();
        if e == 0 {
            return Err(Error::RaggedEpochs("recording has no epochs".into()));
        }
        if channel_names.len() != c {
            return Err(Error::ShapeMismatch(format!(
                "{} channel names for {c} channels",
                channel_names.len()
            )));
        }
        if !(sample_rate_hz > 0.0 && sample_rate_hz.is_finite()) {
            return Err(Error::param("sample_rate_hz", "must be positive"));
        }
        if l == 0 {
            return Err(Error::RaggedEpochs("epochs are empty".into()));
        }
        Ok(Self {
            epochs,
            sample_rate_hz,
            channel_names,
        })
    }

    pub fn from_signal(signal: &MultichannelSignal, names: Option<Vec<String>>) -> Result<Self> {
        let names = names
            .unwrap_or_else(|| (0..signal.num_channels()).map(|c| format!("ch{c}")).collect());
        Self::new(
            signal.samples().clone().insert_axis(Axis(0)),
            signal.sample_rate_hz(),
            names,
        )
    }

    pub fn epochs(&self) -> &Array3<f64> {
        &self.epochs
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn num_epochs(&self) -> usize {
        self.epochs.dim().0
    }

    pub fn num_channels(&self) -> usize {
        self.epochs.dim().1
    }

    pub fn epoch_len(&self) -> usize {
        self.epochs.dim().2
    }

    /// Serializes to the recording CSV format.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# sample_rate_hz={}", self.sample_rate_hz);
        let _ = writeln!(out, "# channels={}", self.channel_names.join(","));
        let _ = writeln!(out, "# epoch_len={}", self.epoch_len());
        let (epochs, channels, len) = self.epochs.dim();
        for n in 0..len {
            let row: Vec<String> = (0..epochs)
                .flat_map(|e| (0..channels).map(move |c| (e, c)))
                .map(|(e, c)| format!("{:?}", self.epochs[[e, c, n]]))
                .collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string())?;
        Ok(())
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses the recording CSV format. Trailing blank fields mark an epoch that
/// ended early and are rejected as ragged.
pub fn parse_csv_recording(text: &str) -> Result<EpochedRecording> {
    let mut sample_rate = None;
    let mut channels: Option<Vec<String>> = None;
    let mut epoch_len = None;
    let mut rows: Vec<Vec<Option<f64>>> = Vec::new();
    let mut first_data_line = 0;

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(header) = line.strip_prefix('#') {
            let Some((key, value)) = header.split_once('=') else {
                continue;
            };
            let value = value.trim();
            match key.trim() {
                "sample_rate_hz" => {
                    let v: f64 = value
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad sample rate '{value}'")))?;
                    sample_rate = Some(v);
                }
                "channels" => {
                    channels = Some(value.split(',').map(|s| s.trim().to_string()).collect());
                }
                "epoch_len" => {
                    let v: usize = value
                        .parse()
                        .map_err(|_| parse_err(line_no, format!("bad epoch length '{value}'")))?;
                    epoch_len = Some(v);
                }
                other => return Err(parse_err(line_no, format!("unknown header '{other}'"))),
            }
            continue;
        }
        if rows.is_empty() {
            first_data_line = line_no;
        }
        let row = line
            .split(',')
            .map(|field| {
                let field = field.trim();
                if field.is_empty() {
                    Ok(None)
                } else {
                    field
                        .parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .map(Some)
                        .ok_or_else(|| parse_err(line_no, format!("bad number '{field}'")))
                }
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }

    let sample_rate = sample_rate.ok_or_else(|| parse_err(1, "missing '# sample_rate_hz=' header"))?;
    let channels = channels.ok_or_else(|| parse_err(1, "missing '# channels=' header"))?;
    let c = channels.len();
    let width = rows.first().map_or(0, Vec::len);
    if width == 0 {
        return Err(parse_err(first_data_line.max(1), "no data rows"));
    }
    for (i, row) in rows.iter().enumerate() {
        if row.len() != width {
            return Err(parse_err(
                first_data_line + i,
                format!("expected {width} columns, found {}", row.len()),
            ));
        }
    }
    if !width.is_multiple_of(c) {
        return Err(Error::RaggedEpochs(format!(
            "{width} columns do not split into epochs of {c} channels"
        )));
    }
    let e = width / c;
    let lengths: Vec<usize> = (0..width)
        .map(|col| rows.iter().take_while(|r| r[col].is_some()).count())
        .collect();
    for (col, &len) in lengths.iter().enumerate() {
        if rows[len..].iter().any(|r| r[col].is_some()) {
            return Err(parse_err(
                first_data_line + len,
                format!("blank value inside column {col}"),
            ));
        }
    }
    let len = lengths[0];
    if lengths.iter().any(|&l| l != len) {
        return Err(Error::RaggedEpochs(format!(
            "column lengths range from {} to {}",
            lengths.iter().min().unwrap(),
            lengths.iter().max().unwrap()
        )));
    }
    if let Some(declared) = epoch_len {
        if declared != len {
            return Err(Error::RaggedEpochs(format!(
                "header declares epoch_len={declared}, data has {len} rows"
            )));
        }
    }
    let epochs = Array3::from_shape_fn((e, c, len), |(ei, ci, n)| {
        rows[n][ei * c + ci].expect("checked above")
    });
    EpochedRecording::new(epochs, sample_rate, channels)
}

pub fn load_csv_recording(path: &Path) -> Result<EpochedRecording> {
    let text = std::fs::read_to_string(path)?;
    parse_csv_recording(&text)
}

/// Mean over epochs, `C × L`.
pub fn average_epochs(recording: &EpochedRecording) -> Array2<f64> {
    recording
        .epochs
        .mean_axis(Axis(0))
        .expect("recording has at least one epoch")
}

/// Per-channel z-score with population variance.
pub fn zscore(samples: &Array2<f64>) -> Result<Array2<f64>> {
    let mut out = samples.clone();
    for (c, mut row) in out.rows_mut().into_iter().enumerate() {
        let n = row.len() as f64;
        let mean = row.sum() / n;
        let var = row.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        if !(var > (1e-12 * mean).powi(2)) {
            return Err(Error::DegenerateVariance(c));
        }
        let sd = var.sqrt();
        row.mapv_inplace(|v| (v - mean) / sd);
    }
    Ok(out)
}

/// Zeroes every half-spectrum bin whose frequency `m·fs/n` lies outside
/// `[lo, hi]` Hz.
pub fn apply_band_mask(spectrum: &mut [Complex64], n_fft: usize, fs: f64, lo: f64, hi: f64) {
    for (m, z) in spectrum.iter_mut().enumerate() {
        let f = m as f64 * fs / n_fft as f64;
        if f < lo || f > hi {
            *z = Complex64::new(0.0, 0.0);
        }
    }
}

/// Whole-signal FFT bandpass.
pub fn bandpass_brickwall(samples: &Array2<f64>, fs: f64, lo: f64, hi: f64) -> Result<Array2<f64>> {
    let nyquist = fs / 2.0;
    if !(lo > 0.0 && lo < hi && hi < nyquist) {
        return Err(Error::BadBand { lo, hi, nyquist });
    }
    let len = samples.ncols();
    let fft = RealFft::new(len);
    let mut out = Array2::zeros(samples.dim());
    for (src, mut dst) in samples.rows().into_iter().zip(out.rows_mut()) {
        let mut spectrum = fft.forward(&src.to_vec());
        apply_band_mask(&mut spectrum, len, fs, lo, hi);
        for (d, v) in dst.iter_mut().zip(fft.inverse(&spectrum)) {
            *d = v;
        }
    }
    Ok(out)
}

/// Epoch average, per-channel z-score, then brickwall bandpass.
pub fn preprocess_ssvep(
    recording: &EpochedRecording,
    band_lo_hz: f64,
    band_hi_hz: f64,
) -> Result<MultichannelSignal> {
    let fs = recording.sample_rate_hz;
    let nyquist = fs / 2.0;
    if !(band_lo_hz > 0.0 && band_lo_hz < band_hi_hz && band_hi_hz < nyquist) {
        return Err(Error::BadBand {
            lo: band_lo_hz,
            hi: band_hi_hz,
            nyquist,
        });
    }
    let normalized = zscore(&average_epochs(recording))?;
    let filtered = bandpass_brickwall(&normalized, fs, band_lo_hz, band_hi_hz)?;
    MultichannelSignal::new(filtered, fs)
}

/// Removes the time-averaged spectral trend from a `T × B` map.
///
/// The per-bin mean over time is smoothed by a centered 5-point moving
/// average (fewer points at the edges) and subtracted from every row.
pub fn detrend_tf_map(tf_map: &Array2<f64>) -> Result<Array2<f64>> {
    let (rows, bins) = tf_map.dim();
    if bins < 5 {
        return Err(Error::param("tf_map", format!("needs at least 5 bins, got {bins}")));
    }
    if rows == 0 {
        return Ok(tf_map.clone());
    }
    let mean = tf_map.mean_axis(Axis(0)).expect("non-empty");
    let trend: Vec<f64> = (0..bins)
        .map(|b| {
            let lo = b.saturating_sub(2);
            let hi = (b + 3).min(bins);
            (lo..hi).map(|i| mean[i]).sum::<f64>() / (hi - lo) as f64
        })
        .collect();
    let mut out = tf_map.clone();
    for mut row in out.rows_mut() {
        for (v, t) in row.iter_mut().zip(&trend) {
            *v -= t;
        }
    }
    Ok(out)
}

use ndarray::{Array2, ArrayView1};

use crate::error::{Error, Result};

/// `C` equal-length real channels sampled at a common rate.
///
/// Samples are stored channel-major (`C × L`). Construction checks that
/// every channel has at least two samples, that every sample is finite and
/// that the rate is positive, so downstream code never re-validates.
#[derive(Debug, Clone, PartialEq)]
pub struct MultichannelSignal {
    samples: Array2<f64>,
    sample_rate_hz: f64,
}

impl MultichannelSignal {
    pub fn new(samples: Array2<f64>, sample_rate_hz: f64) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::param(
                "sample_rate_hz",
                format!("must be positive and finite, got {sample_rate_hz}"),
            ));
        }
        let (channels, len) = samples.dim();
        if channels == 0 {
            return Err(Error::ShapeMismatch("signal has no channels".into()));
        }
        if len < 2 {
            return Err(Error::ShapeMismatch(format!(
                "signal length {len} is below the minimum of 2"
            )));
        }
        check_finite(&samples)?;
        Ok(Self {
            samples,
            sample_rate_hz,
        })
    }

    pub fn from_channels(channels: Vec<Vec<f64>>, sample_rate_hz: f64) -> Result<Self> {
        let c = channels.len();
        let len = channels.first().map_or(0, Vec::len);
        if let Some(bad) = channels.iter().position(|ch| ch.len() != len) {
            return Err(Error::ShapeMismatch(format!(
                "channel {bad} has length {}, expected {len}",
                channels[bad].len()
            )));
        }
        let flat: Vec<f64> = channels.into_iter().flatten().collect();
        let samples = Array2::from_shape_vec((c, len), flat)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Self::new(samples, sample_rate_hz)
    }

    pub fn mono(samples: Vec<f64>, sample_rate_hz: f64) -> Result<Self> {
        Self::from_channels(vec![samples], sample_rate_hz)
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn into_samples(self) -> Array2<f64> {
        self.samples
    }

    pub fn channel(&self, c: usize) -> ArrayView1<'_, f64> {
        self.samples.row(c)
    }

    pub fn num_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn len(&self) -> usize {
        self.samples.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate_hz
    }
}

pub(crate) fn check_finite(samples: &Array2<f64>) -> Result<()> {
    for (c, row) in samples.rows().into_iter().enumerate() {
        if let Some(index) = row.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { channel: c, index });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_nan() {
        let err = MultichannelSignal::mono(vec![0.0, f64::NAN, 1.0], 10.0).unwrap_err();
        assert_eq!(err, Error::NonFinite { channel: 0, index: 1 });
    }

    #[test]
    fn rejects_ragged_channels() {
        let err = MultichannelSignal::from_channels(vec![vec![0.0; 4], vec![0.0; 3]], 1.0)
            .unwrap_err();
        assert!(matches!(err, Error::ShapeMismatch(_)));
    }

    #[test]
    fn rejects_short_and_bad_rate() {
        assert!(MultichannelSignal::mono(vec![1.0], 1.0).is_err());
        assert!(MultichannelSignal::mono(vec![1.0, 2.0], 0.0).is_err());
        assert!(MultichannelSignal::mono(vec![1.0, 2.0], f64::INFINITY).is_err());
    }

    #[test]
    fn layout_is_channel_major() {
        let s = MultichannelSignal::from_channels(vec![vec![1.0, 2.0], vec![3.0, 4.0]], 2.0)
            .unwrap();
        assert_eq!(s.num_channels(), 2);
        assert_eq!(s.len(), 2);
        assert_eq!(s.channel(1).to_vec(), vec![3.0, 4.0]);
        assert_eq!(s.duration_s(), 1.0);
    }
}

use ndarray::{Array2, ArrayView1};

use crate::config::{DecompositionConfig, InitScheme, RESIDUAL_INDEX};
use crate::error::{Error, Result};

/// Central frequencies in cycles/sample, either one per mode or one per
/// (mode, window).
#[derive(Debug, Clone, PartialEq)]
pub enum FrequencyState {
    /// `K` frequencies shared by every channel and window.
    Static(Vec<f64>),
    /// `K × T` matrix; column `τ` holds the frequencies of window `τ`.
    Dynamic(Array2<f64>),
}

impl FrequencyState {
    pub fn num_modes(&self) -> usize {
        match self {
            FrequencyState::Static(v) => v.len(),
            FrequencyState::Dynamic(m) => m.nrows(),
        }
    }

    /// Columns stored: 1 for static states.
    pub fn num_columns(&self) -> usize {
        match self {
            FrequencyState::Static(_) => 1,
            FrequencyState::Dynamic(m) => m.ncols(),
        }
    }

    pub fn is_dynamic(&self) -> bool {
        matches!(self, FrequencyState::Dynamic(_))
    }

    /// Frequency that filters mode `k` in window `tau`.
    #[inline]
    pub fn at(&self, k: usize, tau: usize) -> f64 {
        match self {
            FrequencyState::Static(v) => v[k],
            FrequencyState::Dynamic(m) => m[[k, tau]],
        }
    }

    /// Static states broadcast to a single column.
    pub fn to_matrix(&self) -> Array2<f64> {
        match self {
            FrequencyState::Static(v) => Array2::from_shape_fn((v.len(), 1), |(k, _)| v[k]),
            FrequencyState::Dynamic(m) => m.clone(),
        }
    }

    pub fn row(&self, k: usize) -> Vec<f64> {
        match self {
            FrequencyState::Static(v) => vec![v[k]],
            FrequencyState::Dynamic(m) => m.row(k).to_vec(),
        }
    }

    pub fn column(&self, tau: usize) -> Vec<f64> {
        match self {
            FrequencyState::Static(v) => v.clone(),
            FrequencyState::Dynamic(m) => m.column(tau).to_vec(),
        }
    }

    /// True when every entry of the residual row is exactly zero.
    pub fn residual_pinned(&self) -> bool {
        match self {
            FrequencyState::Static(v) => v[RESIDUAL_INDEX] == 0.0,
            FrequencyState::Dynamic(m) => m.row(RESIDUAL_INDEX).iter().all(|&w| w == 0.0),
        }
    }

    pub fn in_half_band(&self) -> bool {
        let ok = |w: &f64| (0.0..=0.5).contains(w);
        match self {
            FrequencyState::Static(v) => v.iter().all(ok),
            FrequencyState::Dynamic(m) => m.iter().all(ok),
        }
    }

    pub(crate) fn replicate(freqs: ArrayView1<'_, f64>, num_windows: usize) -> Self {
        FrequencyState::Dynamic(Array2::from_shape_fn((freqs.len(), num_windows), |(k, _)| {
            freqs[k]
        }))
    }
}

/// Initial central frequencies per the configured scheme.
///
/// `num_windows = None` gives a static state; `Some(T)` replicates the same
/// vector across `T` columns for the dynamic solvers.
pub fn init_frequencies(
    config: &DecompositionConfig,
    num_windows: Option<usize>,
) -> Result<FrequencyState> {
    let k = config.num_modes;
    let freqs = match &config.init {
        InitScheme::UniformHalfBand => (0..k).map(|i| 0.5 * i as f64 / k as f64).collect(),
        InitScheme::Zero => vec![0.0; k],
        InitScheme::Custom(values) => {
            if values.len() != k {
                return Err(Error::CustomLengthMismatch {
                    expected: k,
                    got: values.len(),
                });
            }
            values.clone()
        }
    };
    Ok(match num_windows {
        None => FrequencyState::Static(freqs),
        Some(t) => FrequencyState::replicate(ArrayView1::from(&freqs), t),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(k: usize, init: InitScheme) -> DecompositionConfig {
        DecompositionConfig {
            num_modes: k,
            init,
            ..Default::default()
        }
    }

    #[test]
    fn uniform_half_band_four_modes() {
        let state = init_frequencies(&config(4, InitScheme::UniformHalfBand), None).unwrap();
        assert_eq!(state, FrequencyState::Static(vec![0.0, 0.125, 0.25, 0.375]));
        assert!(state.residual_pinned());
    }

    #[test]
    fn zero_init() {
        let state = init_frequencies(&config(2, InitScheme::Zero), None).unwrap();
        assert_eq!(state, FrequencyState::Static(vec![0.0, 0.0]));
    }

    #[test]
    fn dynamic_replicates_columns() {
        let state = init_frequencies(&config(3, InitScheme::UniformHalfBand), Some(5)).unwrap();
        let FrequencyState::Dynamic(m) = &state else {
            panic!("expected dynamic state");
        };
        assert_eq!(m.dim(), (3, 5));
        for col in m.columns() {
            assert_eq!(col.to_vec(), vec![0.0, 1.0 / 6.0, 1.0 / 3.0]);
        }
    }

    #[test]
    fn custom_length_checked() {
        let err = init_frequencies(&config(3, InitScheme::Custom(vec![0.0])), None).unwrap_err();
        assert_eq!(err, Error::CustomLengthMismatch { expected: 3, got: 1 });
        let ok = init_frequencies(&config(2, InitScheme::Custom(vec![0.0, 0.3])), Some(2)).unwrap();
        assert_eq!(ok.at(1, 1), 0.3);
    }

    #[test]
    fn matrix_views() {
        let s = FrequencyState::Static(vec![0.0, 0.2]);
        assert_eq!(s.to_matrix().dim(), (2, 1));
        assert_eq!(s.num_columns(), 1);
        assert_eq!(s.column(0), vec![0.0, 0.2]);
        assert!(s.in_half_band());
        assert!(!FrequencyState::Static(vec![0.0, 0.6]).in_half_band());
        assert!(!FrequencyState::Static(vec![0.1, 0.2]).residual_pinned());
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{check_finite, MultichannelSignal};

/// Index of the mode pinned at 0 Hz.
pub const RESIDUAL_INDEX: usize = 0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    Hamming,
    Hann,
    #[serde(rename = "rect", alias = "rectangular")]
    Rectangular,
}

impl std::str::FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "hamming" => Ok(WindowKind::Hamming),
            "hann" | "hanning" => Ok(WindowKind::Hann),
            "rect" | "rectangular" | "boxcar" => Ok(WindowKind::Rectangular),
            other => Err(Error::param("window_kind", format!("unknown window `{other}`"))),
        }
    }
}

/// How the central frequencies are seeded before the first sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InitRepr", into = "InitRepr")]
pub enum InitScheme {
    /// `0.5 * k / K` for `k = 0..K`: arithmetic spacing up to Nyquist.
    UniformHalfBand,
    Zero,
    /// Normalized frequencies (cycles/sample), one per mode.
    Custom(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum InitRepr {
    Named(String),
    Values(Vec<f64>),
}

impl TryFrom<InitRepr> for InitScheme {
    type Error = Error;

    fn try_from(repr: InitRepr) -> Result<Self> {
        match repr {
            InitRepr::Named(name) => name.parse(),
            InitRepr::Values(v) => Ok(InitScheme::Custom(v)),
        }
    }
}

impl From<InitScheme> for InitRepr {
    fn from(init: InitScheme) -> Self {
        match init {
            InitScheme::UniformHalfBand => InitRepr::Named("uniform".into()),
            InitScheme::Zero => InitRepr::Named("zero".into()),
            InitScheme::Custom(v) => InitRepr::Values(v),
        }
    }
}

impl std::str::FromStr for InitScheme {
    type Err = Error;

    /// Accepts `uniform`, `zero`, or a comma-separated list of normalized
    /// frequencies.
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "uniform" | "uniform_half_band" | "uniformhalfband" => Ok(InitScheme::UniformHalfBand),
            "zero" | "zeros" => Ok(InitScheme::Zero),
            list => list
                .split(',')
                .map(|v| {
                    v.trim().parse::<f64>().map_err(|_| {
                        Error::param("init", format!("expected uniform, zero or a number list, got `{s}`"))
                    })
                })
                .collect::<Result<Vec<_>>>()
                .map(InitScheme::Custom),
        }
    }
}

/// Solver parameters shared by VMD, MVMD and both short-time variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecompositionConfig {
    pub num_modes: usize,
    /// Bandwidth penalty.
    pub alpha: f64,
    pub window_len: usize,
    pub window_kind: WindowKind,
    pub hop: usize,
    /// Dual-ascent rate for the Lagrange multipliers; 0 disables the update.
    pub dual_step: f64,
    pub tolerance: f64,
    pub max_iters: usize,
    pub init: InitScheme,
}

impl Default for DecompositionConfig {
    fn default() -> Self {
        Self {
            num_modes: 3,
            alpha: 50.0,
            window_len: 64,
            window_kind: WindowKind::Hamming,
            hop: 1,
            dual_step: 0.0,
            tolerance: 1e-9,
            max_iters: 500,
            init: InitScheme::UniformHalfBand,
        }
    }
}

impl DecompositionConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            line: e
                .span()
                .map(|span| text[..span.start].matches('\n').count() + 1)
                .unwrap_or(0),
            message: e.message().to_string(),
        })
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    /// Checks the parameters that do not depend on a signal.
    pub fn check(&self) -> Result<()> {
        if self.num_modes < 2 {
            return Err(Error::BadModeCount(self.num_modes));
        }
        if self.window_len < 2 || !self.window_len.is_multiple_of(2) {
            return Err(Error::BadWindow(self.window_len));
        }
        if !(self.alpha.is_finite() && self.alpha > 0.0) {
            return Err(Error::param("alpha", format!("must be positive, got {}", self.alpha)));
        }
        if self.hop == 0 {
            return Err(Error::param("hop", "must be at least 1"));
        }
        if !(self.dual_step.is_finite() && self.dual_step >= 0.0) {
            return Err(Error::param(
                "dual_step",
                format!("must be non-negative, got {}", self.dual_step),
            ));
        }
        if !(self.tolerance.is_finite() && self.tolerance > 0.0) {
            return Err(Error::param(
                "tolerance",
                format!("must be positive, got {}", self.tolerance),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if let InitScheme::Custom(values) = &self.init {
            check_custom_init(values, self.num_modes)?;
        }
        Ok(())
    }
}

fn check_custom_init(values: &[f64], num_modes: usize) -> Result<()> {
    if values.len() != num_modes {
        return Err(Error::CustomLengthMismatch {
            expected: num_modes,
            got: values.len(),
        });
    }
    if let Some(v) = values.iter().find(|v| !(0.0..=0.5).contains(*v)) {
        return Err(Error::param(
            "init",
            format!("frequency {v} outside [0, 0.5] cycles/sample"),
        ));
    }
    if values[RESIDUAL_INDEX] != 0.0 {
        return Err(Error::param("init", "residual mode frequency must be 0"));
    }
    Ok(())
}

/// A configuration that has been checked against a concrete signal, with
/// derived sizes filled in.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckedConfig {
    pub config: DecompositionConfig,
    pub signal_len: usize,
    pub num_channels: usize,
    /// Half-spectrum bins per window, `N/2 + 1`.
    pub num_bins: usize,
    /// Signal length after `N/2` reflective padding on each side.
    pub padded_len: usize,
    /// Number of windows, `ceil(L / hop)`.
    pub num_windows: usize,
}

pub fn validate_config(
    config: &DecompositionConfig,
    signal: &MultichannelSignal,
) -> Result<CheckedConfig> {
    config.check()?;
    check_finite(signal.samples())?;
    let len = signal.len();
    if config.window_len > len {
        return Err(Error::WindowTooLong {
            window_len: config.window_len,
            signal_len: len,
        });
    }
    Ok(CheckedConfig {
        config: config.clone(),
        signal_len: len,
        num_channels: signal.num_channels(),
        num_bins: config.window_len / 2 + 1,
        padded_len: len + config.window_len,
        num_windows: len.div_ceil(config.hop),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn signal(len: usize) -> MultichannelSignal {
        MultichannelSignal::mono((0..len).map(|i| (i as f64).sin()).collect(), 128.0).unwrap()
    }

    #[test]
    fn table_one_defaults_accepted() {
        let cfg = DecompositionConfig::default();
        assert_eq!(cfg.alpha, 50.0);
        assert_eq!(cfg.tolerance, 1e-9);
        assert_eq!(cfg.window_kind, WindowKind::Hamming);
        assert_eq!(cfg.init, InitScheme::UniformHalfBand);
        let checked = validate_config(&cfg, &signal(1280)).unwrap();
        assert_eq!(checked.num_bins, 33);
        assert_eq!(checked.num_windows, 1280);
        assert_eq!(checked.padded_len, 1344);
    }

    #[test]
    fn degenerate_window_rejected() {
        let cfg = DecompositionConfig {
            window_len: 0,
            ..Default::default()
        };
        assert_eq!(validate_config(&cfg, &signal(100)), Err(Error::BadWindow(0)));
        let cfg = DecompositionConfig {
            window_len: 7,
            ..Default::default()
        };
        assert_eq!(validate_config(&cfg, &signal(100)), Err(Error::BadWindow(7)));
    }

    #[test]
    fn window_longer_than_signal_rejected() {
        let cfg = DecompositionConfig {
            window_len: 128,
            ..Default::default()
        };
        assert_eq!(
            validate_config(&cfg, &signal(100)),
            Err(Error::WindowTooLong {
                window_len: 128,
                signal_len: 100
            })
        );
    }

    #[test]
    fn single_mode_rejected() {
        let cfg = DecompositionConfig {
            num_modes: 1,
            ..Default::default()
        };
        assert_eq!(validate_config(&cfg, &signal(100)), Err(Error::BadModeCount(1)));
    }

    #[test]
    fn bad_scalars_rejected() {
        for cfg in [
            DecompositionConfig { alpha: 0.0, ..Default::default() },
            DecompositionConfig { hop: 0, ..Default::default() },
            DecompositionConfig { tolerance: 0.0, ..Default::default() },
            DecompositionConfig { max_iters: 0, ..Default::default() },
            DecompositionConfig { dual_step: -1.0, ..Default::default() },
        ] {
            assert!(matches!(cfg.check(), Err(Error::BadParameter { .. })), "{cfg:?}");
        }
    }

    #[test]
    fn custom_init_checked() {
        let cfg = DecompositionConfig {
            init: InitScheme::Custom(vec![0.0, 0.1]),
            ..Default::default()
        };
        assert_eq!(
            cfg.check(),
            Err(Error::CustomLengthMismatch { expected: 3, got: 2 })
        );
        let cfg = DecompositionConfig {
            init: InitScheme::Custom(vec![0.1, 0.2, 0.3]),
            ..Default::default()
        };
        assert!(cfg.check().is_err());
    }

    #[test]
    fn toml_round_trip() {
        for init in [
            InitScheme::UniformHalfBand,
            InitScheme::Zero,
            InitScheme::Custom(vec![0.0, 0.125, 0.3]),
        ] {
            let cfg = DecompositionConfig {
                num_modes: 3,
                alpha: 2000.5,
                window_len: 250,
                window_kind: WindowKind::Rectangular,
                hop: 3,
                dual_step: 0.1,
                tolerance: 1e-7,
                max_iters: 42,
                init,
            };
            let text = cfg.to_toml_string();
            assert_eq!(DecompositionConfig::from_toml_str(&text).unwrap(), cfg, "{text}");
        }
    }

    #[test]
    fn partial_toml_uses_defaults() {
        let cfg = DecompositionConfig::from_toml_str("num_modes = 4\nwindow_kind = \"hann\"\n").unwrap();
        assert_eq!(cfg.num_modes, 4);
        assert_eq!(cfg.window_kind, WindowKind::Hann);
        assert_eq!(cfg.alpha, 50.0);
    }

    #[test]
    fn unknown_toml_key_reports_line() {
        let err = DecompositionConfig::from_toml_str("alpha = 3.0\nbogus = 1\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err:?}");
    }

    #[test]
    fn init_parses_from_cli_text() {
        assert_eq!("uniform".parse::<InitScheme>().unwrap(), InitScheme::UniformHalfBand);
        assert_eq!("zero".parse::<InitScheme>().unwrap(), InitScheme::Zero);
        assert_eq!(
            "0, 0.1,0.2".parse::<InitScheme>().unwrap(),
            InitScheme::Custom(vec![0.0, 0.1, 0.2])
        );
        assert!("nope".parse::<InitScheme>().is_err());
    }
}

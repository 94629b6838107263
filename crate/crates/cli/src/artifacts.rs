//! Files written by the CLI and the readers that load them back.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ndarray::{Array2, Array3};
use serde::{Deserialize, Serialize};
use stvmd_core::metrics::DecompositionReport;
use stvmd_core::signals::{load_csv_recording, EpochedRecording};
use stvmd_core::{DecompositionConfig, ModeSet};

use crate::error::{CliError, CliResult};

/// 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pgm {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
}

impl Pgm {
    /// Heatmap of a `T × B` magnitude map: one column per window, frequency
    /// increasing upward, `ln(1 + |X|)` scaled to 0..=255 per image.
    pub fn from_magnitudes(map: &Array2<f64>) -> Self {
        let (frames, bins) = map.dim();
        let logs = map.mapv(f64::ln_1p);
        let lo = logs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let mut pixels = Vec::with_capacity(frames * bins);
        for row in 0..bins {
            let b = bins - 1 - row;
            for tau in 0..frames {
                let v = if span > 0.0 {
                    (255.0 * (logs[[tau, b]] - lo) / span).round()
                } else {
                    0.0
                };
                pixels.push(v as u8);
            }
        }
        Self {
            width: frames,
            height: bins,
            pixels,
        }
    }

    /// Plain (P2) encoding.
    pub fn to_plain(&self) -> String {
        let mut out = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.pixels.chunks(self.width.max(1)) {
            let line: Vec<String> = row.iter().map(u8::to_string).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: &Path) -> CliResult<()> {
        std::fs::write(path, self.to_plain())?;
        Ok(())
    }

    /// Reads P2 or P5 files with a maxval of at most 255.
    pub fn parse(bytes: &[u8]) -> CliResult<Self> {
        let bad = |m: &str| CliError::Data(format!("pgm: {m}"));
        let mut pos = 0;
        let mut header = Vec::new();
        while header.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            header.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
        }
        let magic = header[0];
        let num = |s: &str| s.parse::<usize>().map_err(|_| bad("bad header number"));
        let (width, height, maxval) = (num(header[1])?, num(header[2])?, num(header[3])?);
        if maxval == 0 || maxval > 255 {
            return Err(bad("only 8-bit images are supported"));
        }
        let count = width * height;
        let pixels: Vec<u8> = match magic {
            "P5" => {
                let data = bytes.get(pos + 1..pos + 1 + count).ok_or_else(|| bad("short data"))?;
                data.to_vec()
            }
            "P2" => {
                let text = std::str::from_utf8(&bytes[pos..]).map_err(|_| bad("not text"))?;
                text.split_ascii_whitespace()
                    .map(|t| t.parse::<u8>().map_err(|_| bad("bad pixel")))
                    .collect::<CliResult<_>>()?
            }
            other => return Err(bad(&format!("unsupported magic {other}"))),
        };
        if pixels.len() != count {
            return Err(bad("pixel count does not match dimensions"));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&std::fs::read(path)?)
    }
}

/// Time-domain modes as a one-epoch recording with channels `k{k}_c{c}`.
pub fn modes_recording(modes: &ModeSet, fs: f64) -> CliResult<EpochedRecording> {
    let (k_total, channels, len) = modes.mode_time.dim();
    let names = (0..k_total)
        .flat_map(|k| (0..channels).map(move |c| format!("k{k}_c{c}")))
        .collect();
    let data = Array3::from_shape_fn((1, k_total * channels, len), |(_, kc, n)| {
        modes.mode_time[[kc / channels, kc % channels, n]]
    });
    Ok(EpochedRecording::new(data, fs, names)?)
}

/// Frequency tracks in Hz as a recording: one row per window (a single row
/// for whole-signal solvers), one column per mode. The header rate is the
/// window rate.
pub fn freqs_recording(track_hz: &Array2<f64>, row_rate_hz: f64) -> CliResult<EpochedRecording> {
    let (k_total, frames) = track_hz.dim();
    let names = (0..k_total).map(|k| format!("mode{k}_hz")).collect();
    let data = Array3::from_shape_fn((1, k_total, frames), |(_, k, t)| track_hz[[k, t]]);
    Ok(EpochedRecording::new(data, row_rate_hz, names)?)
}

/// Ground-truth tracks `T × M` sampled at `rate`.
pub fn truth_recording(
    labels: &[&str],
    values: &Array2<f64>,
    rate: f64,
) -> CliResult<EpochedRecording> {
    let (len, m) = values.dim();
    let data = Array3::from_shape_fn((1, m, len), |(_, j, n)| values[[n, j]]);
    Ok(EpochedRecording::new(
        data,
        rate,
        labels.iter().map(|s| s.to_string()).collect(),
    )?)
}

pub fn load_recording(path: &Path) -> CliResult<EpochedRecording> {
    load_csv_recording(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

pub fn read_report(path: &Path) -> CliResult<DecompositionReport> {
    Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDescriptor {
    pub path: PathBuf,
    pub bytes: u64,
}

/// Everything needed to re-run a command.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub subcommand: String,
    /// Arguments after the program name, exactly as given.
    pub argv: Vec<String>,
    pub config: Option<DecompositionConfig>,
    pub input: Option<InputDescriptor>,
    pub out_dir: PathBuf,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, argv: &[String], out_dir: &Path) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            subcommand: subcommand.to_string(),
            argv: argv.to_vec(),
            config: None,
            input: None,
            out_dir: out_dir.to_path_buf(),
            seed: None,
        }
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// Arguments to re-run this command, writing into `out` when given.
    pub fn replay_argv(&self, out: Option<&Path>) -> Vec<String> {
        let Some(out) = out else {
            return self.argv.clone();
        };
        let mut argv = Vec::with_capacity(self.argv.len() + 2);
        let mut replaced = false;
        let mut iter = self.argv.iter();
        while let Some(a) = iter.next() {
            if a == "--out" {
                iter.next();
                argv.push("--out".into());
                argv.push(out.display().to_string());
                replaced = true;
            } else if a.starts_with("--out=") {
                argv.push(format!("--out={}", out.display()));
                replaced = true;
            } else {
                argv.push(a.clone());
            }
        }
        if !replaced {
            argv.push("--out".into());
            argv.push(out.display().to_string());
        }
        argv
    }
}

pub fn ensure_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Data(format!("{}: {e}", dir.display())))
}

/// CSV grid with a header row; used for the simulated-signal benchmark.
pub fn grid_csv(header: &[&str], rows: &[(String, Vec<f64>)], footer: &[String]) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for (label, values) in rows {
        out.push_str(label);
        for v in values {
            let _ = write!(out, ",{v:.6}");
        }
        out.push('\n');
    }
    for line in footer {
        let _ = writeln!(out, "# {line}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_roundtrip_and_orientation() {
        let map = Array2::from_shape_fn((3, 2), |(t, b)| (t + 10 * b) as f64);
        let img = Pgm::from_magnitudes(&map);
        assert_eq!((img.width, img.height), (3, 2));
        assert_eq!(img.pixels[3], 0);
        assert_eq!(img.pixels[2], 255);
        assert_eq!(Pgm::parse(img.to_plain().as_bytes()).unwrap(), img);
        let mut p5 = b"P5\n# c\n3 2\n255\n".to_vec();
        p5.extend_from_slice(&img.pixels);
        assert_eq!(Pgm::parse(&p5).unwrap(), img);
        assert!(Pgm::parse(b"P2\n2 2\n255\n1 2 3\n").is_err());
    }

    #[test]
    fn flat_map_is_black() {
        let img = Pgm::from_magnitudes(&Array2::from_elem((4, 3), 2.0));
        assert!(img.pixels.iter().all(|&p| p == 0));
    }

    #[test]
    fn replay_argv_replaces_out() {
        let argv: Vec<String> = ["generate", "sim1", "--out", "a", "--seed", "3"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let m = RunManifest::new("generate", &argv, Path::new("a"));
        assert_eq!(
            m.replay_argv(Some(Path::new("b"))),
            vec!["generate", "sim1", "--out", "b", "--seed", "3"]
        );
        assert_eq!(m.replay_argv(None), argv);
    }
}

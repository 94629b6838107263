use std::io::{BufRead, Write};
use std::path::Path;

use ndarray::{Array2, Axis};
use serde::{Deserialize, Serialize};
use stvmd_core::metrics::{freq_track_hz, reconstruction_rmse, spectrogram, DecompositionReport};
use stvmd_core::online::{OnlineOptions, OnlineOutput, OnlineState};
use stvmd_core::signals::{
    average_epochs, gen_sim1, gen_sim2, gen_sim3, preprocess_ssvep, NoiseSpec, SignalKind,
};
use stvmd_core::{
    stvmd_decompose, vmd_decompose, DecompositionConfig, Error as CoreError, ModeSet,
    MultichannelSignal, Variant, RESIDUAL_INDEX,
};

use crate::args::{BenchArgs, DecomposeArgs, GenerateArgs, Solver, StreamArgs};
use crate::artifacts::{
    ensure_dir, freqs_recording, grid_csv, load_recording, modes_recording, truth_recording,
    write_json, InputDescriptor, Pgm, RunManifest,
};
use crate::error::{CliError, CliResult};

/// Runs one solver on a validated signal.
pub fn run_solver(
    solver: Solver,
    signal: &MultichannelSignal,
    config: &DecompositionConfig,
) -> CliResult<ModeSet> {
    let result = match solver {
        Solver::Vmd | Solver::Mvmd => vmd_decompose(signal, config),
        Solver::Stvmd => stvmd_decompose(signal, config, Variant::NonDynamic),
        Solver::StvmdDynamic => stvmd_decompose(signal, config, Variant::Dynamic),
    };
    result.map_err(|e| match e {
        CoreError::WindowTooLong { .. } | CoreError::NonFinite { .. } => CliError::Data(e.to_string()),
        CoreError::BadParameter { .. } | CoreError::BadWindow(_) | CoreError::BadModeCount(_) => {
            CliError::Usage(e.to_string())
        }
        other => CliError::Solver(other.to_string()),
    })
}

pub fn generate(args: &GenerateArgs, argv: &[String], stdout: &mut dyn Write) -> CliResult<()> {
    let kind: SignalKind = args
        .signal
        .parse()
        .map_err(|_| CliError::Usage(format!("unknown signal '{}'", args.signal)))?;
    let is_ssvep = kind == SignalKind::SsvepSurrogate;
    let fs = args.fs.unwrap_or(if is_ssvep { 250.0 } else { 128.0 });
    let duration = args.duration.unwrap_or(match kind {
        SignalKind::TwoTone | SignalKind::SsvepSurrogate => 10.0,
        _ => 8.0,
    });
    let noise = args.noise.unwrap_or(if is_ssvep { 0.5 } else { 0.2 });
    let recording = kind.generate(fs, duration, noise, args.seed)?;

    ensure_dir(&args.out)?;
    let data_path = args.out.join(format!("{}.csv", kind.name()));
    recording.save(&data_path)?;

    let len = recording.epoch_len();
    let labels = kind.truth_labels();
    let truth = Array2::from_shape_fn((len, labels.len()), |(n, j)| {
        kind.truth_hz(n as f64 / fs, duration)[j]
    });
    let truth_path = args.out.join(format!("{}_truth.csv", kind.name()));
    truth_recording(&labels, &truth, fs)?.save(&truth_path)?;

    let mut manifest = RunManifest::new("generate", argv, &args.out);
    manifest.seed = Some(args.seed);
    write_json(&args.out.join("manifest.json"), &manifest)?;
    writeln!(stdout, "{}", data_path.display())?;
    writeln!(stdout, "{}", truth_path.display())?;
    Ok(())
}

fn input_signal(args: &DecomposeArgs) -> CliResult<MultichannelSignal> {
    let recording = load_recording(&args.input)?;
    let fs = recording.sample_rate_hz();
    let signal = match (args.band_lo, args.band_hi) {
        (Some(lo), Some(hi)) => preprocess_ssvep(&recording, lo, hi)?,
        _ => MultichannelSignal::new(average_epochs(&recording), fs)?,
    };
    Ok(signal)
}

fn write_heatmaps(
    dir: &Path,
    signal: &MultichannelSignal,
    modes: &ModeSet,
    config: &DecompositionConfig,
) -> CliResult<()> {
    if config.window_len > signal.len() {
        return Ok(());
    }
    let map = |x: ndarray::ArrayView2<'_, f64>| {
        spectrogram(x, config.window_len, config.hop, config.window_kind)
    };
    let input = map(signal.samples().view())?;
    for (c, m) in input.axis_iter(Axis(0)).enumerate() {
        Pgm::from_magnitudes(&m.to_owned()).save(&dir.join(format!("spectrogram_c{c}.pgm")))?;
    }
    for (k, mode) in modes.mode_time.axis_iter(Axis(0)).enumerate() {
        let maps = map(mode)?;
        for (c, m) in maps.axis_iter(Axis(0)).enumerate() {
            Pgm::from_magnitudes(&m.to_owned()).save(&dir.join(format!("mode{k}_c{c}.pgm")))?;
        }
    }
    Ok(())
}

pub fn decompose(
    args: &DecomposeArgs,
    argv: &[String],
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    let config = args.config.resolve()?;
    let signal = input_signal(args)?;
    if args.solver == Solver::Vmd && signal.num_channels() > 1 {
        return Err(CliError::Usage(format!(
            "vmd takes one channel, input has {}; use --solver mvmd",
            signal.num_channels()
        )));
    }
    let modes = run_solver(args.solver, &signal, &config)?;
    let fs = signal.sample_rate_hz();
    let report = DecompositionReport::build(args.solver.name(), signal.samples().view(), &modes, fs)?;

    ensure_dir(&args.out)?;
    let out = &args.out;
    stvmd_core::signals::EpochedRecording::from_signal(&signal, None)?.save(&out.join("signal.csv"))?;
    modes_recording(&modes, fs)?.save(&out.join("modes.csv"))?;
    let row_rate = if args.solver.is_short_time() {
        fs / config.hop as f64
    } else {
        fs / signal.len() as f64
    };
    freqs_recording(&freq_track_hz(&modes, fs), row_rate)?.save(&out.join("freqs.csv"))?;
    write_json(&out.join("report.json"), &report)?;
    if !args.no_heatmaps {
        write_heatmaps(out, &signal, &modes, &config)?;
    }

    let mut manifest = RunManifest::new("decompose", argv, out);
    manifest.config = Some(config);
    manifest.input = Some(InputDescriptor {
        path: args.input.clone(),
        bytes: std::fs::metadata(&args.input)?.len(),
    });
    write_json(&out.join("manifest.json"), &manifest)?;

    for w in &report.warnings {
        writeln!(stderr, "warning: {w}")?;
    }
    writeln!(
        stdout,
        "{}: rmse {:.6}, {} iterations, converged {}",
        args.solver.name(),
        report.rmse_overall,
        report.iterations,
        report.converged
    )?;
    Ok(())
}

/// One JSON line of `stream` output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamLine {
    pub index: usize,
    pub warmup: bool,
    pub freqs_hz: Vec<f64>,
    /// `K` rows of per-channel values.
    pub modes: Vec<Vec<f64>>,
    pub dominant_mode: Option<usize>,
}

impl StreamLine {
    fn new(out: &OnlineOutput, fs: f64) -> Self {
        Self {
            index: out.index,
            warmup: out.warmup,
            freqs_hz: out.freqs.iter().map(|w| w * fs).collect(),
            modes: out.modes.rows().into_iter().map(|r| r.to_vec()).collect(),
            dominant_mode: if out.warmup {
                None
            } else {
                out.dominant_mode(RESIDUAL_INDEX)
            },
        }
    }
}

fn parse_row(line: &str) -> Result<Vec<f64>, String> {
    line.split(',')
        .map(|f| {
            let f = f.trim();
            f.parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| format!("bad value '{f}'"))
        })
        .collect()
}

pub fn stream(
    args: &StreamArgs,
    stdin: &mut dyn BufRead,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> CliResult<()> {
    if !(args.fs > 0.0 && args.fs.is_finite()) {
        return Err(CliError::Usage("--fs must be positive".into()));
    }
    let config = args.config.resolve()?;
    let mut state = OnlineState::new(
        config,
        OnlineOptions {
            warm_start: !args.cold_start,
            stride: args.stride,
        },
    )?;
    let emit = |out: &OnlineOutput, stdout: &mut dyn Write| -> CliResult<()> {
        serde_json::to_writer(&mut *stdout, &StreamLine::new(out, args.fs))?;
        stdout.write_all(b"\n")?;
        stdout.flush()?;
        Ok(())
    };
    let (mut rows, mut malformed) = (0usize, 0usize);
    for (i, line) in stdin.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        rows += 1;
        let sample = match parse_row(line) {
            Ok(v) => v,
            Err(msg) => {
                malformed += 1;
                writeln!(stderr, "line {}: {msg}; skipped", i + 1)?;
                continue;
            }
        };
        match state.push(&sample) {
            Ok(Some(out)) => emit(&out, stdout)?,
            Ok(None) => {}
            Err(CoreError::ShapeMismatch(msg)) => {
                malformed += 1;
                writeln!(stderr, "line {}: {msg}; skipped", i + 1)?;
            }
            Err(e) => return Err(CliError::Solver(e.to_string())),
        }
    }
    for out in state.flush().map_err(|e| CliError::Solver(e.to_string()))? {
        emit(&out, stdout)?;
    }
    if malformed * 10 > rows {
        return Err(CliError::Data(format!("{malformed} of {rows} rows malformed")));
    }
    Ok(())
}

/// RMSE grid for simulated signals 1-3.
#[derive(Debug, Clone, PartialEq)]
pub struct Table2 {
    /// `(signal, [vmd, stvmd, stvmd-dynamic])`.
    pub rows: Vec<(String, [f64; 3])>,
    pub average: [f64; 3],
    pub ordering_holds: bool,
    pub margin_holds: bool,
}

pub fn table2(seed: u64) -> CliResult<Table2> {
    let (fs, duration) = (128.0, 8.0);
    let noise = NoiseSpec::new(0.2, seed)?;
    let base = DecompositionConfig::default();
    let windowed = DecompositionConfig {
        window_len: 64,
        ..base.clone()
    };
    let signals = [
        ("sim1", gen_sim1(fs, duration, noise)?),
        ("sim2", gen_sim2(fs, duration, noise)?),
        ("sim3", gen_sim3(fs, duration, noise)?),
    ];
    let mut rows = Vec::new();
    for (name, signal) in &signals {
        let mut r = [0.0; 3];
        for (slot, (solver, cfg)) in [
            (Solver::Vmd, &base),
            (Solver::Stvmd, &windowed),
            (Solver::StvmdDynamic, &windowed),
        ]
        .into_iter()
        .enumerate()
        {
            let modes = run_solver(solver, signal, cfg)?;
            r[slot] = reconstruction_rmse(signal.samples().view(), &modes)?.overall;
        }
        rows.push((name.to_string(), r));
    }
    let mut average = [0.0; 3];
    for (_, r) in &rows {
        for (a, v) in average.iter_mut().zip(r) {
            *a += v / rows.len() as f64;
        }
    }
    let ordering_holds = rows.iter().all(|(_, r)| r[2] < r[1] && r[1] <= 1.05 * r[0]);
    let margin_holds = average[2] <= 0.6 * average[0];
    Ok(Table2 {
        rows,
        average,
        ordering_holds,
        margin_holds,
    })
}

pub fn bench_table2(args: &BenchArgs, argv: &[String], stdout: &mut dyn Write) -> CliResult<()> {
    let table = table2(args.seed)?;
    let mut rows: Vec<(String, Vec<f64>)> =
        table.rows.iter().map(|(n, r)| (n.clone(), r.to_vec())).collect();
    rows.push(("average".into(), table.average.to_vec()));
    let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
    let footer = vec![
        format!(
            "ordering dynamic < non-dynamic <= 1.05 x vmd per signal: {}",
            verdict(table.ordering_holds)
        ),
        format!(
            "average dynamic <= 0.6 x average vmd ({:.4} vs {:.4}): {}",
            table.average[2],
            table.average[0],
            verdict(table.margin_holds)
        ),
    ];
    let text = grid_csv(&["signal", "vmd", "stvmd", "stvmd_dynamic"], &rows, &footer);
    ensure_dir(&args.out)?;
    std::fs::write(args.out.join("table2.csv"), &text)?;
    let mut manifest = RunManifest::new("bench-table2", argv, &args.out);
    manifest.seed = Some(args.seed);
    manifest.config = Some(DecompositionConfig {
        window_len: 64,
        ..Default::default()
    });
    write_json(&args.out.join("manifest.json"), &manifest)?;
    stdout.write_all(text.as_bytes())?;
    Ok(())
}

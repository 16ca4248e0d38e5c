//! Command-line front end: `fit`, `simulate`, `stats`, `bench` and `rir`.
//!
//! Exit codes: 0 on success, 1 on runtime failure, 2 on usage or
//! configuration errors.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::acoustics::{image_method_rir, RoomSpec};
use crate::corpus_io::{load_session_manifests, read_rttm, write_wav, SessionManifest, WavFormat};
use crate::error::{Error, Result};
use crate::pipeline::{benchmark, generate_dataset, write_bench_csv, SimulationConfig};
use crate::stats::{compute_stats, session_transitions, StatsReport};
use crate::turntaking::{
    classify_transitions, fit_params, TimedTurn, TransitionEvent, TransitionMode, TransitionType,
    TurnTakingParams,
};

pub const EXIT_RUNTIME: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "convsim", version, about = "Simulate multi-talker conversations with ground-truth annotations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AnnotationFormat {
    Rttm,
    SessionManifest,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Categorical,
    Markov,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SampleFormat {
    Pcm16,
    Float32,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit turn-taking parameters to annotated conversations.
    Fit {
        /// RTTM file or session manifest (JSON lines).
        annotations: PathBuf,
        #[arg(long, value_enum, default_value = "rttm")]
        format: AnnotationFormat,
        /// Where to write the fitted parameters (TOML).
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "categorical")]
        mode: Mode,
        /// Longest overlapping utterance still counted as a backchannel (s).
        #[arg(long, default_value_t = 1.0)]
        bc_max_duration: f64,
    },
    /// Generate a dataset from a simulation config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        num_conversations: Option<usize>,
        /// Multiply IR and BC probabilities by this factor, then renormalize.
        #[arg(long)]
        boost_overlap: Option<f64>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
        /// Write manifests and RTTM only.
        #[arg(long)]
        no_audio: bool,
    },
    /// Summarize session manifests.
    Stats {
        #[arg(required = true)]
        manifests: Vec<PathBuf>,
        #[arg(long)]
        json: bool,
        #[arg(long, default_value_t = 1.0)]
        bc_max_duration: f64,
    },
    /// Time dataset generation at several worker counts and print CSV.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated worker counts.
        #[arg(long, value_delimiter = ',', required = true)]
        workers: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        repetitions: usize,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a shoebox-room impulse response as WAV.
    Rir {
        /// Room size X,Y,Z in meters.
        #[arg(long, value_parser = parse_triple)]
        room: [f64; 3],
        #[arg(long, value_parser = parse_triple)]
        src: [f64; 3],
        #[arg(long, value_parser = parse_triple)]
        mic: [f64; 3],
        #[arg(long, default_value_t = 0.5)]
        absorption: f64,
        #[arg(long, default_value_t = 6)]
        max_order: u32,
        #[arg(long, default_value_t = 343.0)]
        speed_of_sound: f64,
        #[arg(long, default_value_t = 16000)]
        sample_rate: u32,
        #[arg(long, value_enum, default_value = "float32")]
        format: SampleFormat,
        #[arg(long)]
        out: PathBuf,
    },
}

/// An error with the exit code it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub error: Error,
}

fn usage(error: Error) -> CliError {
    CliError {
        code: EXIT_USAGE,
        error,
    }
}

fn runtime(error: Error) -> CliError {
    CliError {
        code: EXIT_RUNTIME,
        error,
    }
}

/// Errors in what the user asked for, as opposed to failures while doing it.
fn classify(error: Error) -> CliError {
    match error {
        Error::Config(_) | Error::InvalidParams(_) | Error::Geometry(_) => usage(error),
        other => runtime(other),
    }
}

fn parse_triple(text: &str) -> std::result::Result<[f64; 3], String> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>().map_err(|e| format!("'{v}': {e}")))
        .collect::<std::result::Result<_, _>>()?;
    <[f64; 3]>::try_from(values).map_err(|v| format!("expected X,Y,Z, got {} values", v.len()))
}

fn load_config(path: &Path) -> std::result::Result<SimulationConfig, CliError> {
    match SimulationConfig::load(path) {
        Ok(c) => Ok(c),
        Err(e @ (Error::Io { .. } | Error::Config(_))) => Err(usage(e)),
        Err(e) => Err(runtime(e)),
    }
}

fn rttm_transitions(path: &Path, bc_max_duration: f64) -> Result<Vec<TransitionEvent>> {
    let mut events = Vec::new();
    for session in read_rttm(path)? {
        let mut turns: Vec<TimedTurn<'_>> = session
            .segments
            .iter()
            .map(|s| TimedTurn::new(&s.speaker, s.onset, s.onset + s.duration))
            .collect();
        turns.sort_by(|a, b| a.start.total_cmp(&b.start));
        events.extend(classify_transitions(&turns, bc_max_duration).map_err(|e| Error::InvalidSession {
            session_id: session.session_id.clone(),
            message: e.to_string(),
        })?);
    }
    Ok(events)
}

fn manifest_transitions(path: &Path, bc_max_duration: f64) -> Result<Vec<TransitionEvent>> {
    let mut events = Vec::new();
    for manifest in load_session_manifests(path)? {
        events.extend(session_transitions(&manifest, bc_max_duration)?);
    }
    Ok(events)
}

fn print_fit(params: &TurnTakingParams, events: &[TransitionEvent], out: &mut dyn Write) -> io::Result<()> {
    let mut histogram = [0usize; 4];
    for e in events {
        histogram[e.kind().index()] += 1;
    }
    writeln!(out, "transitions {}", events.len())?;
    for t in TransitionType::ALL {
        writeln!(out, "  {}  {:>8}  p = {:.4}", t.label(), histogram[t.index()], params.p[t.index()])?;
    }
    writeln!(out, "beta_th {:.4}", params.beta_th)?;
    writeln!(out, "beta_ts {:.4}", params.beta_ts)?;
    writeln!(out, "beta_ir {:.4}", params.beta_ir)
}

fn cmd_fit(
    annotations: &Path,
    format: AnnotationFormat,
    out: &Path,
    mode: Mode,
    bc_max_duration: f64,
) -> std::result::Result<TurnTakingParams, CliError> {
    if !(bc_max_duration.is_finite() && bc_max_duration > 0.0) {
        return Err(usage(Error::Config(format!("--bc-max-duration must be > 0, got {bc_max_duration}"))));
    }
    let events = match format {
        AnnotationFormat::Rttm => rttm_transitions(annotations, bc_max_duration),
        AnnotationFormat::SessionManifest => manifest_transitions(annotations, bc_max_duration),
    }
    .map_err(runtime)?;
    let mode = match mode {
        Mode::Categorical => TransitionMode::Categorical,
        Mode::Markov => TransitionMode::Markov,
    };
    let params = fit_params(&events, mode, bc_max_duration).map_err(runtime)?;
    params.save(out).map_err(runtime)?;
    print_fit(&params, &events, &mut io::stdout().lock()).map_err(|e| runtime(e.into()))?;
    Ok(params)
}

fn cmd_stats(manifests: &[PathBuf], json: bool, bc_max_duration: f64) -> std::result::Result<StatsReport, CliError> {
    let mut sessions: Vec<SessionManifest> = Vec::new();
    for path in manifests {
        sessions.extend(load_session_manifests(path).map_err(|e| match e {
            Error::Io { .. } => usage(e),
            other => runtime(other),
        })?);
    }
    if sessions.is_empty() {
        return Err(usage(Error::Config("no sessions in the given manifests".into())));
    }
    let report = compute_stats(&sessions, bc_max_duration).map_err(runtime)?;
    let mut stdout = io::stdout().lock();
    let written = if json {
        serde_json::to_writer_pretty(&mut stdout, &report)
            .map_err(io::Error::from)
            .and_then(|_| writeln!(stdout))
    } else {
        writeln!(stdout, "{report}")
    };
    written.map_err(|e| runtime(e.into()))?;
    Ok(report)
}

fn execute(cli: Cli) -> std::result::Result<(), CliError> {
    match cli.command {
        Command::Fit {
            annotations,
            format,
            out,
            mode,
            bc_max_duration,
        } => cmd_fit(&annotations, format, &out, mode, bc_max_duration).map(|_| ()),
        Command::Simulate {
            config,
            workers,
            seed,
            num_conversations,
            boost_overlap,
            output_dir,
            no_audio,
        } => {
            let mut config = load_config(&config)?;
            if let Some(w) = workers {
                config.num_workers = w;
            }
            if let Some(s) = seed {
                config.seed = s;
            }
            if let Some(n) = num_conversations {
                config.num_conversations = n;
            }
            if boost_overlap.is_some() {
                config.boost_overlap = boost_overlap;
            }
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            if no_audio {
                config.write_audio = false;
            }
            config.validate().map_err(classify)?;
            let summary = generate_dataset(&config).map_err(classify)?;
            eprintln!(
                "wrote {} conversations ({:.3} h) to {} in {:.2} s",
                summary.conversations,
                summary.total_hours,
                config.output_dir.display(),
                summary.wall_seconds
            );
            Ok(())
        }
        Command::Stats {
            manifests,
            json,
            bc_max_duration,
        } => cmd_stats(&manifests, json, bc_max_duration).map(|_| ()),
        Command::Bench {
            config,
            workers,
            repetitions,
            out,
        } => {
            let config = load_config(&config)?;
            if workers.contains(&0) {
                return Err(usage(Error::Config("worker counts must be at least 1".into())));
            }
            let rows = benchmark(&config, &workers, repetitions).map_err(classify)?;
            match out {
                Some(path) => {
                    let file = File::create(&path).map_err(|e| runtime(Error::io(&path, e)))?;
                    let mut w = BufWriter::new(file);
                    write_bench_csv(&rows, &mut w).map_err(runtime)?;
                    w.flush().map_err(|e| runtime(e.into()))
                }
                None => write_bench_csv(&rows, io::stdout().lock()).map_err(runtime),
            }
        }
        Command::Rir {
            room,
            src,
            mic,
            absorption,
            max_order,
            speed_of_sound,
            sample_rate,
            format,
            out,
        } => {
            let room = RoomSpec {
                dimensions: room,
                absorption,
                max_order,
                speed_of_sound,
            };
            let rir = image_method_rir(&room, src, mic, sample_rate).map_err(usage)?;
            let format = match format {
                SampleFormat::Pcm16 => WavFormat::Pcm16,
                SampleFormat::Float32 => WavFormat::Float32,
            };
            write_wav(&out, &rir.taps, sample_rate, format).map_err(runtime)?;
            eprintln!("wrote {} taps to {}", rir.taps.len(), out.display());
            Ok(())
        }
    }
}

/// Parses `args` (including the program name), runs the command and
/// returns the process exit code. Errors are printed to standard error.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(CliError { code, error }) => {
            eprintln!("error: {error}");
            code
        }
    }
}

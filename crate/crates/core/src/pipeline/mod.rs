//! Deterministic, sharded, parallel dataset generation and its throughput
//! benchmark.
//!
//! Conversation `i` draws everything from ChaCha8 streams keyed by
//! [`conversation_seed`]`(seed, i)`, never from the worker that renders it,
//! so every artifact is identical for any worker count.

mod config;

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::time::Instant;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub use config::{SimulationConfig, TurnTakingSource};

use crate::corpus_io::{
    check_sample_rate, load_session_manifests, load_utterances, group_by_speaker, split_pools,
    write_rttm, write_session_manifest_line, write_wav, AudioLoader, SessionManifest,
    SourceUtterance, SpeakerPool, WavLoader,
};
use crate::error::{Error, Result};
use crate::planner::{build_plan_with_rng, ConversationPlan, PlanRequest};
use crate::renderer::{prepare_setup, render, SourceCatalog};
use crate::turntaking::TurnTakingParams;

/// Per-conversation seed: the SplitMix64 output function applied to
/// `global_seed ^ index`.
///
/// ```text
/// z = (global_seed ^ index) + 0x9E3779B97F4A7C15        (wrapping)
/// z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9              (wrapping)
/// z = (z ^ (z >> 27)) * 0x94D049BB133111EB              (wrapping)
/// seed = z ^ (z >> 31)
/// ```
///
/// Every step is a bijection on u64, so distinct indices always give
/// distinct seeds.
pub fn conversation_seed(global_seed: u64, index: u64) -> u64 {
    let mut z = (global_seed ^ index).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Random streams of one conversation. Each consumer gets its own ChaCha8
/// stream of the conversation seed so that, for example, switching noise on
/// does not change the plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Plan = 0,
    Speakers = 1,
    Scene = 2,
    Render = 3,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

pub fn session_id(index: usize) -> String {
    format!("session_{index:06}")
}

/// The output files owned by one worker.
#[derive(Debug, Clone, PartialEq)]
pub struct Shard {
    pub worker_index: usize,
    pub conversation_indices: Vec<usize>,
    pub manifest_path: PathBuf,
    pub audio_dir: PathBuf,
}

/// Round-robin assignment of conversations to workers. Audio files are named
/// by conversation index, so no two workers ever write the same file.
pub fn plan_shards(num_conversations: usize, num_workers: usize, output_dir: &Path) -> Vec<Shard> {
    (0..num_workers)
        .map(|w| Shard {
            worker_index: w,
            conversation_indices: (w..num_conversations).step_by(num_workers).collect(),
            manifest_path: output_dir.join("shards").join(format!("worker_{w:03}.jsonl")),
            audio_dir: output_dir.join("audio"),
        })
        .collect()
}

/// One generated conversation. `samples` is `None` when audio is disabled.
#[derive(Debug, Clone)]
pub struct GeneratedSession {
    pub plan: ConversationPlan,
    pub manifest: SessionManifest,
    pub samples: Option<Vec<f64>>,
}

/// Loaded inputs shared read-only by all workers.
pub struct Simulator {
    config: SimulationConfig,
    params: TurnTakingParams,
    pools: Vec<SpeakerPool>,
    catalog: SourceCatalog,
    noise_pool: Vec<SourceUtterance>,
    loader: Box<dyn AudioLoader>,
    speaker_counts: Vec<usize>,
    speaker_weights: WeightedIndex<f64>,
}

fn load_resolved(path: &Path) -> Result<Vec<SourceUtterance>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut utterances = load_utterances(path)?;
    for u in &mut utterances {
        if u.audio.path.is_relative() {
            u.audio.path = base.join(&u.audio.path);
        }
    }
    Ok(utterances)
}

impl Simulator {
    /// Loads the seed corpus (and noise pool) named by `config`, reading
    /// audio from WAV files relative to each manifest.
    pub fn from_config(config: &SimulationConfig) -> Result<Self> {
        config.validate()?;
        let mut pools = group_by_speaker(load_resolved(&config.source_manifest)?);
        if let Some(pause) = config.split_min_pause {
            pools = split_pools(&pools, pause);
        }
        let noise_pool = match (&config.acoustic.noise_manifest, config.acoustic.noise) {
            (Some(path), true) => load_resolved(path)?,
            _ => Vec::new(),
        };
        Simulator::new(config, pools, noise_pool, Box::new(WavLoader::new("")))
    }

    /// Builds a simulator over already loaded pools and any audio loader.
    pub fn new(
        config: &SimulationConfig,
        pools: Vec<SpeakerPool>,
        noise_pool: Vec<SourceUtterance>,
        loader: Box<dyn AudioLoader>,
    ) -> Result<Self> {
        config.validate()?;
        check_sample_rate(&pools, config.sample_rate)?;
        let params = config.turntaking_params()?;
        let speaker_counts = config.num_speakers.iter().map(|&(c, _)| c).collect();
        let speaker_weights = WeightedIndex::new(config.num_speakers.iter().map(|&(_, w)| w))
            .map_err(|e| Error::Config(format!("num_speakers weights: {e}")))?;
        if config.acoustic.noise && noise_pool.is_empty() {
            return Err(Error::Config("noise is enabled but the noise pool is empty".into()));
        }
        Ok(Simulator {
            config: config.clone(),
            params,
            catalog: SourceCatalog::from_pools(&pools),
            pools,
            noise_pool,
            loader,
            speaker_counts,
            speaker_weights,
        })
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    pub fn params(&self) -> &TurnTakingParams {
        &self.params
    }

    pub fn pools(&self) -> &[SpeakerPool] {
        &self.pools
    }

    /// Plans and, if audio is enabled, renders conversation `index`.
    pub fn session(&self, index: usize) -> Result<GeneratedSession> {
        let config = &self.config;
        let seed = conversation_seed(config.seed, index as u64);
        let num_speakers =
            self.speaker_counts[self.speaker_weights.sample(&mut stream_rng(seed, Stream::Speakers))];
        let acoustic = &config.acoustic;
        let request = PlanRequest {
            session_id: session_id(index),
            num_speakers,
            target_duration: config.target_duration,
            gain_range_db: (acoustic.gain_db[0], acoustic.gain_db[1]),
            seed,
        };
        let plan = build_plan_with_rng(&self.params, &self.pools, &request, &mut stream_rng(seed, Stream::Plan))?;
        if !config.write_audio {
            let manifest = plan.to_manifest(config.sample_rate, |id| self.catalog.text_of(id));
            return Ok(GeneratedSession {
                plan,
                manifest,
                samples: None,
            });
        }
        let setup = prepare_setup(
            &plan,
            acoustic,
            &self.noise_pool,
            config.sample_rate,
            &mut stream_rng(seed, Stream::Scene),
        )?;
        let rendered = render(
            &plan,
            &setup,
            &self.catalog,
            self.loader.as_ref(),
            config.sample_rate,
            &mut stream_rng(seed, Stream::Render),
        )?;
        let mut manifest = rendered.manifest;
        manifest.audio_path = Some(PathBuf::from("audio").join(format!("{}.wav", plan.session_id)));
        Ok(GeneratedSession {
            plan,
            manifest,
            samples: Some(rendered.samples),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetSummary {
    pub conversations: usize,
    pub workers: usize,
    /// Sum of session durations in seconds.
    pub total_duration: f64,
    pub total_hours: f64,
    pub wall_seconds: f64,
    pub manifest_path: PathBuf,
    pub rttm_path: PathBuf,
}

fn create_file(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?))
}

fn run_shard(simulator: &Simulator, shard: &Shard, output_dir: &Path, stop: &AtomicBool) -> Result<()> {
    let config = simulator.config();
    let mut manifest_out = create_file(&shard.manifest_path)?;
    for &index in &shard.conversation_indices {
        if stop.load(Ordering::Relaxed) {
            break;
        }
        let result = (|| {
            let session = simulator.session(index)?;
            if let (Some(samples), Some(rel)) = (&session.samples, &session.manifest.audio_path) {
                write_wav(&output_dir.join(rel), samples, config.sample_rate, config.audio_format)?;
            }
            let rttm_path = output_dir.join("rttm").join(format!("{}.rttm", session.manifest.session_id));
            let mut rttm = create_file(&rttm_path)?;
            write_rttm(&session.manifest, &mut rttm)?;
            rttm.flush()?;
            write_session_manifest_line(&session.manifest, &mut manifest_out)?;
            Ok(())
        })();
        if let Err(e) = result {
            stop.store(true, Ordering::Relaxed);
            return Err(Error::Conversation {
                index,
                source: Box::new(e),
            });
        }
        log::info!("worker {}: conversation {index} done", shard.worker_index);
    }
    manifest_out.flush()?;
    Ok(())
}

/// Generates `config.num_conversations` sessions on `config.num_workers`
/// threads.
///
/// Layout under `output_dir`: `audio/session_NNNNNN.wav`,
/// `rttm/session_NNNNNN.rttm`, `shards/worker_WWW.jsonl`, and the merged
/// `sessions.jsonl` / `sessions.rttm` sorted by conversation index. The first
/// failure stops all workers and is reported with its conversation index;
/// shard files written so far stay on disk.
pub fn generate_dataset(config: &SimulationConfig) -> Result<DatasetSummary> {
    let simulator = Simulator::from_config(config)?;
    generate_with(&simulator)
}

/// [`generate_dataset`] with already loaded inputs.
pub fn generate_with(simulator: &Simulator) -> Result<DatasetSummary> {
    let config = simulator.config();
    let start = Instant::now();
    let out = &config.output_dir;
    for dir in ["audio", "rttm", "shards"] {
        let path = out.join(dir);
        fs::create_dir_all(&path).map_err(|e| Error::io(&path, e))?;
    }
    let shards = plan_shards(config.num_conversations, config.num_workers, out);
    let stop = AtomicBool::new(false);
    let results: Vec<Result<()>> = std::thread::scope(|scope| {
        let handles: Vec<_> = shards
            .iter()
            .map(|shard| {
                let stop = &stop;
                scope.spawn(move || run_shard(simulator, shard, out, stop))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|_| Err(Error::Plan("worker thread panicked".into()))))
            .collect()
    });
    let mut failures: Vec<Error> = results.into_iter().filter_map(|r| r.err()).collect();
    failures.sort_by_key(|e| match e {
        Error::Conversation { index, .. } => *index,
        _ => usize::MAX,
    });
    if let Some(first) = failures.into_iter().next() {
        return Err(first);
    }

    let (manifest_path, rttm_path, total_duration) = merge_shards(&shards, out)?;
    let summary = DatasetSummary {
        conversations: config.num_conversations,
        workers: config.num_workers,
        total_duration,
        total_hours: total_duration / 3600.0,
        wall_seconds: start.elapsed().as_secs_f64(),
        manifest_path,
        rttm_path,
    };
    log::info!(
        "{} conversations, {:.2} h of audio in {:.2} s",
        summary.conversations,
        summary.total_hours,
        summary.wall_seconds
    );
    Ok(summary)
}

fn merge_shards(shards: &[Shard], out: &Path) -> Result<(PathBuf, PathBuf, f64)> {
    let mut sessions: Vec<(usize, SessionManifest)> = Vec::new();
    for shard in shards {
        let loaded = load_session_manifests(&shard.manifest_path)?;
        if loaded.len() != shard.conversation_indices.len() {
            return Err(Error::Config(format!(
                "{} holds {} sessions, expected {}",
                shard.manifest_path.display(),
                loaded.len(),
                shard.conversation_indices.len()
            )));
        }
        sessions.extend(shard.conversation_indices.iter().copied().zip(loaded));
    }
    sessions.sort_by_key(|(i, _)| *i);
    let manifest_path = out.join("sessions.jsonl");
    let rttm_path = out.join("sessions.rttm");
    let mut manifest_out = create_file(&manifest_path)?;
    let mut rttm_out = create_file(&rttm_path)?;
    let mut total = 0.0;
    for (_, session) in &sessions {
        write_session_manifest_line(session, &mut manifest_out)?;
        write_rttm(session, &mut rttm_out)?;
        total += session.duration;
    }
    manifest_out.flush()?;
    rttm_out.flush()?;
    Ok((manifest_path, rttm_path, total))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub workers: usize,
    /// Median over repetitions.
    pub wall_s: f64,
    /// Hours of generated audio per minute of wall time.
    pub hours_per_min: f64,
}

/// Times [`generate_dataset`] for each worker count, writing into
/// `output_dir/bench/workers_N`, and reports the median wall time.
pub fn benchmark(config: &SimulationConfig, worker_counts: &[usize], repetitions: usize) -> Result<Vec<BenchRow>> {
    if worker_counts.is_empty() {
        return Err(Error::Config("benchmark needs at least one worker count".into()));
    }
    let repetitions = repetitions.max(1);
    let base = Simulator::from_config(config)?;
    let mut rows = Vec::with_capacity(worker_counts.len());
    for &workers in worker_counts {
        let mut run_config = config.clone();
        run_config.num_workers = workers;
        run_config.output_dir = config.output_dir.join("bench").join(format!("workers_{workers}"));
        let simulator = Simulator::new(
            &run_config,
            base.pools.clone(),
            base.noise_pool.clone(),
            Box::new(WavLoader::new("")),
        )?;
        let mut times = Vec::with_capacity(repetitions);
        let mut hours = 0.0;
        for _ in 0..repetitions {
            let summary = generate_with(&simulator)?;
            times.push(summary.wall_seconds);
            hours = summary.total_hours;
        }
        times.sort_by(f64::total_cmp);
        let mid = times.len() / 2;
        let wall_s = if times.len() % 2 == 1 {
            times[mid]
        } else {
            (times[mid - 1] + times[mid]) / 2.0
        };
        rows.push(BenchRow {
            workers,
            wall_s,
            hours_per_min: hours / (wall_s / 60.0),
        });
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], mut out: W) -> Result<()> {
    writeln!(out, "workers,wall_s,hours_per_min")?;
    for row in rows {
        writeln!(out, "{},{:.6},{:.6}", row.workers, row.wall_s, row.hours_per_min)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn seed_reference_values() {
        // first outputs of the reference SplitMix64 generator seeded with 0
        assert_eq!(conversation_seed(0, 0), 0xE220_A839_7B1D_CDAF);
        assert_eq!(conversation_seed(0x9E37_79B9_7F4A_7C15, 0), 0x6E78_9E6A_A1B9_65F4);
        assert_eq!(conversation_seed(5, 7), conversation_seed(5, 7));
    }

    #[test]
    fn seeds_differ_across_indices_and_globals() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10_000 {
            let s: u64 = rng.random();
            let i: u64 = rng.random_range(0..1_000_000);
            assert_ne!(conversation_seed(s, 0), conversation_seed(s, 1));
            assert_ne!(conversation_seed(s, i), conversation_seed(s ^ 1, i));
        }
    }

    #[test]
    fn shards_partition_indices() {
        for (n, w) in [(0, 3), (10, 1), (10, 4), (3, 8)] {
            let shards = plan_shards(n, w, Path::new("o"));
            assert_eq!(shards.len(), w);
            let mut all: Vec<usize> = shards.iter().flat_map(|s| s.conversation_indices.clone()).collect();
            all.sort();
            assert_eq!(all, (0..n).collect::<Vec<_>>());
            let paths: std::collections::HashSet<_> = shards.iter().map(|s| &s.manifest_path).collect();
            assert_eq!(paths.len(), w);
        }
    }

    #[test]
    fn bench_csv_format() {
        let rows = [BenchRow {
            workers: 1,
            wall_s: 2.0,
            hours_per_min: 0.5,
        }];
        let mut out = Vec::new();
        write_bench_csv(&rows, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "workers,wall_s,hours_per_min\n1,2.000000,0.500000\n");
    }
}

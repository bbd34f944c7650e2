//! Batch example server: writes `count` records to a directory using a fixed
//! number of worker threads.

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{Duration, Instant};

use super::config::AugmentationConfig;
use super::example::{make_example, NamedAudio};
use super::manifest::Manifest;
use super::record::write_record;
use crate::error::Error;
use crate::signal::AudioSignal;

#[derive(Debug, Clone)]
pub struct ServerOptions {
    pub config: AugmentationConfig,
    pub manifest: Manifest,
    pub out_dir: PathBuf,
    pub count: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerReport {
    pub records: u64,
    pub elapsed: Duration,
    pub audio_secs: f64,
}

impl ServerReport {
    pub fn utterances_per_sec(&self) -> f64 {
        self.records as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// Failure classes, each with its own process exit code.
#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error("configuration error: {0}")]
    Config(#[source] Error),
    #[error("cannot read input: {0}")]
    Input(#[source] Error),
    #[error("cannot write output: {0}")]
    Output(#[source] Error),
    #[error("example {index} ({source_name}): {error}")]
    Example { index: u64, source_name: String, error: Error },
}

impl ServerError {
    pub fn exit_code(&self) -> i32 {
        match self {
            ServerError::Config(_) => 2,
            ServerError::Input(_) => 3,
            ServerError::Output(_) => 4,
            ServerError::Example { .. } => 5,
        }
    }
}

fn load_named(path: &Path) -> Result<NamedAudio, ServerError> {
    let signal = AudioSignal::read_wav(path).map_err(ServerError::Input)?;
    Ok(NamedAudio { name: path.display().to_string(), signal })
}

/// Generates records `0..count`. Worker `j` handles the indices congruent to
/// `j` modulo the worker count; every record depends only on its index, so
/// the output is identical for any number of workers.
pub fn run_server(opts: &ServerOptions, mut progress: impl FnMut(u64, u64) + Send) -> Result<ServerReport, ServerError> {
    opts.config.validate().map_err(ServerError::Config)?;
    if opts.workers == 0 {
        return Err(ServerError::Config(Error::Config {
            field: "workers".into(),
            reason: "must be at least 1".into(),
        }));
    }
    std::fs::create_dir_all(&opts.out_dir).map_err(|e| ServerError::Output(Error::io(&opts.out_dir, e)))?;
    let start = Instant::now();
    if opts.count == 0 {
        return Ok(ServerReport { records: 0, elapsed: start.elapsed(), audio_secs: 0.0 });
    }
    if opts.manifest.clean.is_empty() {
        return Err(ServerError::Input(Error::format("manifest", "no [clean] entries")));
    }
    let noises = opts
        .manifest
        .noise
        .iter()
        .map(|p| load_named(p))
        .collect::<Result<Vec<_>, _>>()?;

    let cfg = &opts.config;
    let plan = cfg.pretrain_plan();
    let done = AtomicUsize::new(0);
    let workers = opts.workers.min(opts.count as usize);
    let progress = std::sync::Mutex::new(&mut progress);

    let results: Vec<Result<f64, ServerError>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|j| {
                let (noises, plan, done, progress) = (&noises, &plan, &done, &progress);
                scope.spawn(move || -> Result<f64, ServerError> {
                    let mut audio = 0.0;
                    let mut index = j as u64;
                    while index < opts.count {
                        let path = &opts.manifest.clean[(index % opts.manifest.clean.len() as u64) as usize];
                        let clean = load_named(path)?;
                        let state = plan.state_at(cfg.epoch_of(index));
                        let ex = make_example(&clean, noises, cfg, &state, cfg.seed, index).map_err(|error| {
                            ServerError::Example { index, source_name: clean.name.clone(), error }
                        })?;
                        write_record(&opts.out_dir, &ex.meta, &ex.x_aug, &ex.x_clean).map_err(ServerError::Output)?;
                        audio += clean.signal.duration_secs();
                        let n = done.fetch_add(1, Ordering::Relaxed) as u64 + 1;
                        if let Ok(mut p) = progress.lock() {
                            (*p)(n, opts.count);
                        }
                        index += workers as u64;
                    }
                    Ok(audio)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
    });

    let mut audio_secs = 0.0;
    for r in results {
        audio_secs += r?;
    }
    Ok(ServerReport { records: opts.count, elapsed: start.elapsed(), audio_secs })
}

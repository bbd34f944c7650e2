use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use fforge::den::den_normalize;
use fforge::features::{power_mel, FeatureConfig, FeatureRole};
use fforge::pipeline::{run_server, verify_records, AugmentationConfig, Manifest, ServerOptions, VerifyOptions};
use fforge::room::{generate_rir, reflection_from_t60, ImagePath, RoomSpec, DEFAULT_MAX_REFLECTION_ORDER};
use fforge::schedule::{format_trace, schedule_trace};
use fforge::AudioSignal;

/// Far-field training data forge: room simulation, delay/energy
/// normalization, power-mel features and curriculum schedules.
#[derive(Parser)]
#[command(name = "fforge", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate training-example records from a clean/noise manifest.
    Serve(ServeArgs),
    /// Print the sparse impulse response of a shoebox room.
    Rir(RirArgs),
    /// Delay- and energy-normalize a clean utterance against its augmented copy.
    Den(DenArgs),
    /// Compute power-mel features and write them in NEF1 format.
    Features(FeaturesArgs),
    /// Print the w / lambda / lr schedules as whitespace-separated columns.
    ScheduleTrace(TraceArgs),
    /// Check emitted records, optionally regenerating them bit-for-bit.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML augmentation config; built-in defaults when omitted.
    #[arg(long, env = "FFORGE_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, env = "FFORGE_SEED")]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn load(&self) -> fforge::Result<AugmentationConfig> {
        let mut cfg = match &self.config {
            Some(p) => AugmentationConfig::load(p)?,
            None => AugmentationConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    config: ConfigArgs,
    /// Manifest with `[clean]` and `[noise]` sections.
    #[arg(long, env = "FFORGE_MANIFEST")]
    manifest: PathBuf,
    #[arg(long, env = "FFORGE_OUT")]
    out: PathBuf,
    #[arg(long, env = "FFORGE_COUNT")]
    count: u64,
    /// Defaults to the number of available cores.
    #[arg(long, env = "FFORGE_WORKERS")]
    workers: Option<usize>,
    #[arg(long, short)]
    quiet: bool,
}

#[derive(Args)]
struct RoomArgs {
    /// Room dimensions in metres, `x,y,z`.
    #[arg(long, value_parser = parse_position)]
    dims: [f64; 3],
    #[arg(long, value_parser = parse_position)]
    source: [f64; 3],
    #[arg(long, value_parser = parse_position)]
    mic: [f64; 3],
    #[arg(long, default_value_t = 16000)]
    sample_rate: u32,
}

#[derive(Args)]
struct RirArgs {
    #[command(flatten)]
    room: RoomArgs,
    /// Wall reflection coefficient.
    #[arg(long, conflicts_with = "t60", required_unless_present = "t60")]
    reflection: Option<f64>,
    /// Reverberation time in seconds, converted by Sabine's formula.
    #[arg(long)]
    t60: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_REFLECTION_ORDER)]
    order: u32,
    #[arg(long, env = "FFORGE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct DenArgs {
    #[command(flatten)]
    room: RoomArgs,
    #[arg(long)]
    clean: PathBuf,
    #[arg(long)]
    augmented: PathBuf,
    /// Output WAV for the normalized clean signal.
    #[arg(long, env = "FFORGE_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    /// 16-bit mono WAV.
    input: PathBuf,
    #[arg(long, env = "FFORGE_OUT")]
    out: PathBuf,
}

#[derive(Args)]
struct TraceArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long, default_value_t = 12)]
    end_epoch: u32,
    #[arg(long, default_value_t = 4)]
    points_per_epoch: u32,
    /// Dev-set loss after each completed epoch, comma separated.
    #[arg(long, value_delimiter = ',')]
    dev_losses: Vec<f64>,
    #[arg(long, env = "FFORGE_OUT")]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Record directory written by `serve`.
    #[arg(long, alias = "out", env = "FFORGE_OUT")]
    dir: PathBuf,
    /// Fraction of records to check.
    #[arg(long, default_value_t = 0.01)]
    fraction: f64,
    /// Regenerate each checked record; needs the config used by `serve`.
    #[arg(long, env = "FFORGE_MANIFEST")]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

fn parse_position(s: &str) -> Result<[f64; 3], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<Result<_, _>>()?;
    <[f64; 3]>::try_from(parts).map_err(|v| format!("expected 3 comma-separated values, got {}", v.len()))
}

/// Exit code for failed verification.
const VERIFY_FAILED: u8 = 6;
/// Exit code for config errors outside `serve`.
const CONFIG_ERROR: u8 = 2;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(a) => return serve(a),
        Command::Rir(a) => rir(a),
        Command::Den(a) => den(a),
        Command::Features(a) => features(a),
        Command::ScheduleTrace(a) => trace(a),
        Command::Verify(a) => return verify(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn serve(a: ServeArgs) -> ExitCode {
    let config = match a.config.load() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let manifest = match Manifest::load(&a.manifest) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("error: manifest {}: {e}", a.manifest.display());
            return ExitCode::from(3);
        }
    };
    let workers = a.workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let opts = ServerOptions { config, manifest, out_dir: a.out, count: a.count, workers };
    let step = (a.count / 20).max(1);
    let quiet = a.quiet;
    let progress = move |done: u64, total: u64| {
        if !quiet && (done.is_multiple_of(step) || done == total) {
            eprintln!("[{done}/{total}]");
        }
    };
    match run_server(&opts, progress) {
        Ok(report) => {
            println!(
                "wrote {} records to {} in {:.2}s ({:.1} utt/s, {:.1}s of audio)",
                report.records,
                opts.out_dir.display(),
                report.elapsed.as_secs_f64(),
                report.utterances_per_sec(),
                report.audio_secs
            );
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn write_or_print(out: Option<&Path>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn rir(a: RirArgs) -> anyhow::Result<()> {
    let r = match (a.reflection, a.t60) {
        (Some(r), _) => r,
        (None, Some(t60)) => reflection_from_t60(a.room.dims, t60)?,
        (None, None) => bail!("one of --reflection or --t60 is required"),
    };
    let room = RoomSpec::new(a.room.dims, r, a.room.sample_rate)?;
    let rir = generate_rir(&room, a.room.source, a.room.mic, a.order)?;
    write_or_print(a.out.as_deref(), &rir.to_text())
}

fn den(a: DenArgs) -> anyhow::Result<()> {
    let clean = AudioSignal::read_wav(&a.clean).with_context(|| a.clean.display().to_string())?;
    let augmented = AudioSignal::read_wav(&a.augmented).with_context(|| a.augmented.display().to_string())?;
    // Only geometry matters for the direct path; the coefficient is unused.
    let room = RoomSpec::new(a.room.dims, 0.0, a.room.sample_rate)?;
    let distance = a.room.source.iter().zip(&a.room.mic).map(|(s, m)| (s - m).powi(2)).sum::<f64>().sqrt();
    let direct = ImagePath { distance, reflection_count: 0, image: a.room.source };
    let res = den_normalize(&clean, &augmented, &direct, &room)?;
    res.normalized_clean.write_wav(&a.out)?;
    println!("delay {} samples, gain {:.6}", res.applied_delay, res.applied_gain);
    Ok(())
}

fn features(a: FeaturesArgs) -> anyhow::Result<()> {
    let signal = AudioSignal::read_wav(&a.input).with_context(|| a.input.display().to_string())?;
    let f = power_mel(&signal, &FeatureConfig::default(), FeatureRole::Clean)?;
    std::fs::write(&a.out, f.encode()).with_context(|| a.out.display().to_string())?;
    println!("{} frames x {} bands", f.num_frames, f.num_mel);
    Ok(())
}

fn trace(a: TraceArgs) -> anyhow::Result<()> {
    let (schedules, plan) = match a.config.load() {
        Ok(cfg) => (cfg.schedules(), cfg.pretrain_plan()),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(CONFIG_ERROR.into());
        }
    };
    let pts = schedule_trace(&schedules, &plan, &a.dev_losses, a.end_epoch, a.points_per_epoch);
    write_or_print(a.out.as_deref(), &format_trace(&pts))
}

fn verify(a: VerifyArgs) -> ExitCode {
    let regenerate = match &a.manifest {
        None => None,
        Some(path) => {
            let cfg = match a.config.load() {
                Ok(c) => c,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(CONFIG_ERROR);
                }
            };
            match Manifest::load(path) {
                Ok(m) => Some((cfg, m)),
                Err(e) => {
                    eprintln!("error: manifest {}: {e}", path.display());
                    return ExitCode::from(3);
                }
            }
        }
    };
    let opts = VerifyOptions { dir: a.dir, fraction: a.fraction, regenerate };
    match verify_records(&opts) {
        Ok(report) => {
            for f in &report.failures {
                eprintln!("FAIL {f}");
            }
            println!("checked {} of {} records, {} failed", report.checked, report.total, report.failures.len());
            if report.passed() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(VERIFY_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
    }
}

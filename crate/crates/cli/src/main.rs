//! `auscult`: batch augmentation, cycle rearrangement, diffusion training and
//! sampling, and metrics from the command line.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use auscult_core::cycles::{apply_rearrangement, plan_mode, plan_rearrangement, RearrangeMode};
use auscult_core::ddpm::checkpoint;
use auscult_core::ddpm::train::{generate_pcg, train_toy_denoiser, TrainRecord};
use auscult_core::hpss::{apply_two_stage, hpss_decompose, HpssDraw, HpssParams};
use auscult_core::io::config::FragmentConfig;
use auscult_core::io::manifest::write_cycles;
use auscult_core::io::{fixtures, pipeline, tables};
use auscult_core::io::{load_cycles, load_manifest, load_wav, write_wav, PipelineConfig, WavFormat};
use auscult_core::metrics::{compute_metrics, confusion, MetricsReport};
use auscult_core::{istft, stft, Error, Label, RandomStream, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(name = "auscult", version, about = "Cardiac audio augmentation toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SeedArg {
    /// Master seed. Falls back to AUSCULT_SEED, then the config file, then 0.
    #[arg(long, env = "AUSCULT_SEED")]
    seed: Option<u64>,
}

impl SeedArg {
    fn resolve(&self, config: Option<&PipelineConfig>) -> u64 {
        self.seed.or_else(|| config.and_then(|c| c.seed)).unwrap_or(0)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic paired PCG/ECG dataset.
    Fixtures {
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long, default_value_t = 10)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Augment every manifest record into K copies with provenance sidecars.
    Augment {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        copies: Option<usize>,
        /// Also cut each copy into fixed-length fragments.
        #[arg(long)]
        fragment_seconds: Option<f64>,
        #[arg(long)]
        fragments: Option<usize>,
    },
    /// Harmonic/percussive separation, or one random two-stage reconstruction.
    Hpss {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        harmonic: Option<PathBuf>,
        #[arg(long)]
        percussive: Option<PathBuf>,
        #[arg(long, default_value_t = 1.5)]
        lambda: f64,
        #[arg(long, default_value_t = 15)]
        ell: usize,
        #[arg(long, default_value_t = 1024)]
        window: usize,
        #[arg(long, default_value_t = 256)]
        hop: usize,
        /// Write a randomized two-stage reconstruction here (draw printed as JSON).
        #[arg(long)]
        augment: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Reorder heart cycles with crossfaded splices.
    Rearrange {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        cycles: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Where to write the rearranged boundaries.
        #[arg(long)]
        cycles_out: Option<PathBuf>,
        /// Force one mode; otherwise a random mode is drawn.
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        #[arg(long, default_value_t = 0.75)]
        probability: f64,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Train the toy ECG-conditioned denoiser.
    DdpmTrain {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        seed: SeedArg,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        steps: Option<usize>,
        /// Write the loss curves as JSON.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Generate a PCG conditioned on an ECG.
    DdpmSample {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        ecg: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        label: Option<Label>,
        /// Sample with the full training schedule instead of the short one.
        #[arg(long)]
        full_schedule: bool,
        #[command(flatten)]
        seed: SeedArg,
    },
    /// Subject-level metrics from fragment scores and labels.
    Metrics {
        #[arg(long)]
        preds: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Halves,
    Groups,
    Cycles,
}

impl From<ModeArg> for RearrangeMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Halves => RearrangeMode::Halves,
            ModeArg::Groups => RearrangeMode::Groups,
            ModeArg::Cycles => RearrangeMode::Cycles,
        }
    }
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    match path {
        Some(p) => PipelineConfig::load(p),
        None => Ok(PipelineConfig::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Fixtures { seed, count, out } => {
            let set = fixtures::make_fixtures(seed.resolve(None), count, &out)?;
            println!("{} records in {}", set.ids.len(), set.manifest.display());
        }

        Command::Augment { manifest, config, seed, out, copies, fragment_seconds, fragments } => {
            let mut cfg = load_config(config.as_deref())?;
            if fragment_seconds.is_some() || fragments.is_some() {
                let base = cfg.fragments.unwrap_or_default();
                cfg.fragments = Some(FragmentConfig {
                    seconds: fragment_seconds.unwrap_or(base.seconds),
                    count: fragments.unwrap_or(base.count),
                });
                cfg.validate()?;
            }
            let out = out
                .or_else(|| cfg.output_dir.as_ref().map(|d| cfg.resolve(d)))
                .ok_or_else(|| Error::InvalidArgument("no output directory (--out or output_dir)".into()))?;
            let seed = seed.resolve(Some(&cfg));
            let copies = copies.unwrap_or(cfg.copies);
            let m = load_manifest(&manifest)?;
            let summary = pipeline::run_augment(&m, &cfg, seed, copies, &out)?;
            println!("{} records x {} copies, {} files written", summary.records, summary.copies, summary.files.len());
        }

        Command::Hpss { input, harmonic, percussive, lambda, ell, window, hop, augment, config, seed } => {
            let signal = load_wav::<f64>(&input)?;
            if harmonic.is_none() && percussive.is_none() && augment.is_none() {
                return Err(Error::InvalidArgument("nothing to do: pass --harmonic, --percussive or --augment".into()));
            }
            if harmonic.is_some() || percussive.is_some() {
                let spec = stft(&signal, window, hop)?;
                let (h, p) = hpss_decompose(&spec, &HpssParams::new(lambda, lambda, ell, ell));
                if let Some(path) = harmonic {
                    write_wav(&path, &istft(&h)?, WavFormat::Float32)?;
                }
                if let Some(path) = percussive {
                    write_wav(&path, &istft(&p)?, WavFormat::Float32)?;
                }
            }
            if let Some(path) = augment {
                let cfg = load_config(config.as_deref())?;
                let mut rng = RandomStream::new(seed.resolve(Some(&cfg))).split("hpss");
                let draw = HpssDraw::sample(&mut rng, &cfg.augment.hpss);
                let (out, status) = apply_two_stage(&signal, &draw)?;
                write_wav(&path, &out, WavFormat::Float32)?;
                println!("{}", serde_json::json!({ "status": status, "draw": draw }));
            }
        }

        Command::Rearrange { input, cycles, out, cycles_out, mode, probability, seed } => {
            let signal = load_wav::<f64>(&input)?;
            let bounds = load_cycles(&cycles)?;
            let mut rng = RandomStream::new(seed.resolve(None)).split("rearrange");
            let plan = match mode {
                Some(m) => plan_mode(bounds.cycle_count(), m.into(), &mut rng),
                None => plan_rearrangement(bounds.cycle_count(), probability, &mut rng),
            };
            let (rearranged, new_bounds) = apply_rearrangement(&signal, &bounds, &plan)?;
            write_wav(&out, &rearranged, WavFormat::Float32)?;
            if let Some(path) = cycles_out {
                write_cycles(&path, &new_bounds)?;
            }
            println!("{}", serde_json::to_string(&plan)?);
        }

        Command::DdpmTrain { manifest, config, seed, out, steps, report } => {
            let cfg = load_config(config.as_deref())?;
            let mut train = cfg.train.clone();
            if let Some(s) = steps {
                train.steps = s;
            }
            train.validate()?;
            let seed = seed.resolve(Some(&cfg));
            let m = load_manifest(&manifest)?;
            let mut data = Vec::new();
            for row in &m.rows {
                if row.ecg.is_none() {
                    log::warn!("{}: no ECG, skipped", row.id);
                    continue;
                }
                let rec = pipeline::prepare_record(&m, row, cfg.sample_rate)?;
                let rec = auscult_core::PairedRecord {
                    pcg: rec.pcg.cast::<f32>(),
                    ecg: rec.ecg.map(|e| e.cast::<f32>()),
                    id: rec.id,
                    label: rec.label,
                    cycles: rec.cycles,
                    provenance: rec.provenance,
                };
                data.push(TrainRecord::from_paired(&rec, &train.mel)?);
            }
            let (model, rep) = train_toy_denoiser(&data, &train, &RandomStream::new(seed).split("ddpm-train"))?;
            checkpoint::save(&out, &model, &train)?;
            if let Some(path) = report {
                std::fs::write(path, serde_json::to_string_pretty(&rep)?)?;
            }
            println!(
                "validation loss {:.5} -> {:.5} (best at step {})",
                rep.initial_validation(),
                rep.best_validation,
                rep.best_step
            );
        }

        Command::DdpmSample { checkpoint: ckpt, ecg, out, label, full_schedule, seed } => {
            let (model, train) = checkpoint::load::<f32>(&ckpt)?;
            let ecg = load_wav::<f32>(&ecg)?;
            let schedule = if full_schedule { train.schedule() } else { train.inference_schedule()? };
            let mut rng = RandomStream::new(seed.resolve(None)).split("ddpm-sample");
            let pcg = generate_pcg(&model, &ecg, label, &train.mel, &schedule, &mut rng)?;
            write_wav(&out, &pcg, WavFormat::Float32)?;
            println!("{} samples at {} Hz", pcg.len(), pcg.sample_rate());
        }

        Command::Metrics { preds, labels, threshold, json } => {
            let p = tables::load_predictions(&preds)?;
            let l = tables::load_labels(&labels)?;
            let (predicted, truth) = tables::subject_outcomes(&p, &l, threshold)?;
            let cm = confusion(&predicted, &truth)?;
            let report = compute_metrics(&cm);
            if json {
                println!("{}", serde_json::json!({ "confusion": cm, "metrics": report }));
            } else {
                println!("{}", MetricsReport::table_header());
                println!("{}", report.table_row());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! `fdb`: command-line front end for the forensic degradation benchmark.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fdb_core::degrade::{
    apply, apply_unchecked, sample_spec_with, DegradationKind, DegradationSpec, RecaptureParams,
    Seed,
};
use fdb_core::evalcore::{roc_points, select_threshold};
use fdb_core::harness::{
    ingest_dataset, run_experiment, write_fixture, write_report, ExperimentConfig, ReportOptions,
    Settings, FIXTURE_SEED,
};
use fdb_core::imagecore::{load_image, save_image, SaveFormat};
use fdb_core::selftest::run_selftest;
use fdb_core::{Error, Result};

#[derive(Parser)]
#[command(
    name = "fdb",
    version,
    about = "Forensic degradation benchmark for face recognition"
)]
struct Cli {
    /// Log progress to stderr (repeat for more detail).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Pair a person-per-directory dataset into a manifest CSV.
    Ingest {
        root: PathBuf,
        /// Use this manifest instead of auto-pairing.
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Where to write the manifest (default: stdout).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Degrade a single image, for inspection.
    Degrade(DegradeArgs),
    /// Run or resume an experiment.
    Run(RunArgs),
    /// Write report tables from a trials file.
    Report {
        trials: PathBuf,
        out_dir: PathBuf,
        #[arg(long, default_value_t = 1000)]
        iterations: usize,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// Bootstrap seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Pick the Youden-optimal threshold from a label,score CSV.
    Roc {
        scores: PathBuf,
        /// Also print every ROC point.
        #[arg(long)]
        points: bool,
    },
    /// Check the numerics and operator invariants.
    Selftest,
    /// Write a synthetic two-images-per-person face dataset.
    Synth {
        out_dir: PathBuf,
        #[arg(long, default_value_t = 10)]
        identities: usize,
        #[arg(long, default_value_t = FIXTURE_SEED)]
        seed: u64,
    },
}

#[derive(Args)]
struct DegradeArgs {
    #[arg(long)]
    kind: DegradationKind,
    /// Seed for unset parameters and stochastic operators.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    cycles: Option<u32>,
    /// JPEG quality per cycle; one value is repeated for every cycle.
    #[arg(long, value_delimiter = ',')]
    quality: Vec<u8>,
    #[arg(long)]
    factor: Option<u32>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    length: Option<u32>,
    #[arg(long)]
    angle: Option<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// Per-channel offsets as r,g,b.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    deltas: Vec<i32>,
    #[command(flatten)]
    recapture: RecaptureArgs,
    /// Accept parameters outside the standard grids.
    #[arg(long)]
    off_grid: bool,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct RecaptureArgs {
    #[arg(long, alias = "grid_period")]
    grid_period: Option<u32>,
    #[arg(long, alias = "moire_freq")]
    moire_freq: Option<f64>,
    #[arg(long, alias = "moire_amp")]
    moire_amp: Option<f64>,
    #[arg(long, alias = "reflect_strength")]
    reflect_strength: Option<f64>,
    #[arg(long, alias = "recapture_quality")]
    recapture_quality: Option<u8>,
}

#[derive(Args)]
struct RunArgs {
    /// key=value or JSON config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    manifest: Option<String>,
    #[arg(long, alias = "master_seed")]
    master_seed: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    threshold: Option<String>,
    /// Comma-separated kinds, or `all`.
    #[arg(long)]
    kinds: Option<String>,
    #[arg(long, alias = "params_mode")]
    params_mode: Option<String>,
    #[arg(long)]
    protocol: Option<String>,
    #[arg(long, alias = "enhance_cmd")]
    enhance_cmd: Option<String>,
    #[arg(long, alias = "embed_cmd")]
    embed_cmd: Option<String>,
    #[arg(long, alias = "embed_dim")]
    embed_dim: Option<String>,
    #[arg(long, alias = "timeout_s")]
    timeout_s: Option<String>,
    #[arg(long, alias = "output_dir")]
    output_dir: Option<String>,
    #[arg(long, alias = "grid_period")]
    grid_period: Option<String>,
    #[arg(long, alias = "moire_freq")]
    moire_freq: Option<String>,
    #[arg(long, alias = "moire_amp")]
    moire_amp: Option<String>,
    #[arg(long, alias = "reflect_strength")]
    reflect_strength: Option<String>,
    #[arg(long, alias = "recapture_quality")]
    recapture_quality: Option<String>,
    #[arg(long)]
    workers: Option<String>,
}

impl RunArgs {
    fn overrides(&self) -> [(&'static str, &Option<String>); 17] {
        [
            ("manifest", &self.manifest),
            ("master_seed", &self.master_seed),
            ("threshold", &self.threshold),
            ("kinds", &self.kinds),
            ("params_mode", &self.params_mode),
            ("protocol", &self.protocol),
            ("enhance_cmd", &self.enhance_cmd),
            ("embed_cmd", &self.embed_cmd),
            ("embed_dim", &self.embed_dim),
            ("timeout_s", &self.timeout_s),
            ("output_dir", &self.output_dir),
            ("grid_period", &self.grid_period),
            ("moire_freq", &self.moire_freq),
            ("moire_amp", &self.moire_amp),
            ("reflect_strength", &self.reflect_strength),
            ("recapture_quality", &self.recapture_quality),
            ("workers", &self.workers),
        ]
    }

    /// Layers config file, then the seed environment variable, then flags.
    fn settings(&self) -> Result<Settings> {
        let mut settings = match &self.config {
            Some(p) => Settings::from_file(p)?,
            None => Settings::default(),
        };
        settings.apply_env()?;
        for (key, value) in self.overrides() {
            if let Some(v) = value {
                settings.set(key, v)?;
            }
        }
        Ok(settings)
    }
}

fn degrade_spec(args: &DegradeArgs) -> Result<DegradationSpec> {
    let r = &args.recapture;
    let defaults = RecaptureParams::default();
    let recapture = RecaptureParams {
        grid_period: r.grid_period.unwrap_or(defaults.grid_period),
        moire_freq: r.moire_freq.unwrap_or(defaults.moire_freq),
        moire_amp: r.moire_amp.unwrap_or(defaults.moire_amp),
        reflect_strength: r.reflect_strength.unwrap_or(defaults.reflect_strength),
        recapture_quality: r.recapture_quality.unwrap_or(defaults.recapture_quality),
    };
    let sampled = match args.kind {
        DegradationKind::None => DegradationSpec::None,
        kind => sample_spec_with(kind, Seed(args.seed), &recapture)?,
    };
    Ok(match sampled {
        DegradationSpec::MultiGenJpeg { cycles, qualities } => {
            let cycles = args.cycles.unwrap_or(cycles);
            let qualities = match args.quality.as_slice() {
                [] if qualities.len() == cycles as usize => qualities,
                [] => vec![qualities[0]; cycles as usize],
                [q] => vec![*q; cycles as usize],
                qs => qs.to_vec(),
            };
            DegradationSpec::MultiGenJpeg { cycles, qualities }
        }
        DegradationSpec::DownUpScale { factor } => DegradationSpec::DownUpScale {
            factor: args.factor.unwrap_or(factor),
        },
        DegradationSpec::GaussianBlur { sigma } => DegradationSpec::GaussianBlur {
            sigma: args.sigma.unwrap_or(sigma),
        },
        DegradationSpec::MotionBlur {
            length_px,
            angle_deg,
        } => DegradationSpec::MotionBlur {
            length_px: args.length.unwrap_or(length_px),
            angle_deg: args.angle.unwrap_or(angle_deg),
        },
        DegradationSpec::SaltPepper { p } => DegradationSpec::SaltPepper {
            p: args.p.unwrap_or(p),
        },
        DegradationSpec::ChannelClip { deltas } => match args.deltas.as_slice() {
            [] => DegradationSpec::ChannelClip { deltas },
            &[r, g, b] => DegradationSpec::ChannelClip { deltas: [r, g, b] },
            other => {
                return Err(Error::Validation(format!(
                    "--deltas needs three values, got {}",
                    other.len()
                )))
            }
        },
        other => other,
    })
}

fn save_format(path: &Path) -> SaveFormat {
    match path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
    {
        Some(e) if e == "jpg" || e == "jpeg" => SaveFormat::Jpeg { quality: 95 },
        _ => SaveFormat::Png,
    }
}

fn execute(command: Command) -> Result<ExitCode> {
    match command {
        Command::Ingest {
            root,
            manifest,
            out,
        } => {
            let report = ingest_dataset(&root, manifest.as_deref())?;
            for id in &report.skipped {
                eprintln!("skipped {id}: fewer than two images");
            }
            match out {
                Some(path) => {
                    report.manifest.write_csv(&path)?;
                    eprintln!(
                        "{} identities written to {}",
                        report.manifest.len(),
                        path.display()
                    );
                }
                None => report
                    .manifest
                    .write_csv_to(std::io::stdout().lock(), Path::new("<stdout>"))?,
            }
        }
        Command::Degrade(args) => {
            let spec = degrade_spec(&args)?;
            let img = load_image(&args.input)?;
            let seed = Seed(args.seed).child(0);
            let out = if args.off_grid {
                apply_unchecked(&img, &spec, seed)?
            } else {
                apply(&img, &spec, seed).map_err(|e| match e {
                    Error::InvalidParam(m) => {
                        Error::InvalidParam(format!("{m} (pass --off-grid to allow)"))
                    }
                    other => other,
                })?
            };
            save_image(&out, &args.output, save_format(&args.output))?;
            println!(
                "{}",
                serde_json::to_string(&spec).map_err(|e| Error::Format(e.to_string()))?
            );
        }
        Command::Run(args) => {
            let config = ExperimentConfig::from_settings(&args.settings()?)?;
            let outcome = run_experiment(&config)?;
            let errors = outcome.error_count();
            println!(
                "{} trials in {} ({} computed, {} resumed, {} errors)",
                outcome.trials.len(),
                outcome.trials_path.display(),
                outcome.computed,
                outcome.resumed,
                errors
            );
            if errors > 0 && errors == outcome.trials.len() {
                eprintln!("every trial failed in a backend");
                return Ok(ExitCode::from(2));
            }
        }
        Command::Report {
            trials,
            out_dir,
            iterations,
            level,
            seed,
        } => {
            let mut opts = ReportOptions {
                iterations,
                level,
                ..ReportOptions::default()
            };
            if let Some(s) = seed {
                opts.seed = Seed(s);
            }
            let report = write_report(&trials, &out_dir, &opts)?;
            print!("{}", report.to_markdown());
        }
        Command::Roc { scores, points } => {
            let (genuine, impostor) = fdb_core::harness::read_scores(&scores)?;
            let roc = roc_points(&genuine, &impostor)?;
            if points {
                println!("threshold,tpr,fpr");
                for p in &roc {
                    println!("{},{:.6},{:.6}", p.threshold, p.tpr, p.fpr);
                }
            }
            let t = select_threshold(&roc)?;
            println!("threshold {t}");
        }
        Command::Selftest => {
            let checks = run_selftest();
            let mut failed = 0;
            for c in &checks {
                if c.passed {
                    println!("pass  {}", c.name);
                } else {
                    failed += 1;
                    println!("FAIL  {}: {}", c.name, c.detail);
                }
            }
            println!(
                "{} of {} checks passed",
                checks.len() - failed,
                checks.len()
            );
            if failed > 0 {
                return Ok(ExitCode::from(1));
            }
        }
        Command::Synth {
            out_dir,
            identities,
            seed,
        } => {
            let files = write_fixture(&out_dir, identities, seed)?;
            eprintln!("{} images written under {}", files.len(), out_dir.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_backend() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}

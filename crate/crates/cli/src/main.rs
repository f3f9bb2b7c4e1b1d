use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use thz_core::beamforming::write_gain_profile_csv;
use thz_core::config::{Profile, Psf};
use thz_core::experiments::{
    gain_profiles, parse_adc_list, parse_snr_range, write_results, write_results_csv, ConfigDocument, ExperimentKind,
    ExperimentSpec,
};

/// Run a seeded Monte-Carlo sweep and write the results table as CSV.
#[derive(Debug, Parser)]
#[command(name = "thz-sim", version)]
struct Args {
    /// TOML file with `profile`, `[system]` and `[experiment]` sections.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// nmse_vs_snr, ber_vs_snr, se_vs_snr, adc_sweep, gain_profile or psf_compare.
    #[arg(long, value_name = "NAME")]
    experiment: Option<ExperimentKind>,

    #[arg(long, value_name = "N")]
    seed: Option<u64>,

    /// SNR grid in dB as `min:step:max`, or a single value.
    #[arg(long, value_name = "RANGE", allow_hyphen_values = true)]
    snr: Option<String>,

    #[arg(long, value_name = "N")]
    trials: Option<usize>,

    /// Comma-separated resolutions such as `1,2,3,inf`. Swept by adc_sweep;
    /// other experiments take a single value as the receiver resolution.
    #[arg(long, value_name = "LIST")]
    adc_bits: Option<String>,

    #[arg(long, value_enum)]
    psf: Option<PsfArg>,

    /// Results CSV; stdout when omitted. gain_profile also writes one
    /// `<stem>_<method>.csv` per beamformer next to it.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Base parameter set, overriding the one named in the config file.
    #[arg(long, value_enum)]
    profile: Option<ProfileArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PsfArg {
    Rrc,
    Rect,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    Paper,
    Desk,
}

impl From<ProfileArg> for Profile {
    fn from(p: ProfileArg) -> Self {
        match p {
            ProfileArg::Paper => Profile::Paper,
            ProfileArg::Desk => Profile::Desk,
        }
    }
}

fn build_spec(args: &Args) -> Result<ExperimentSpec> {
    let doc = match &args.config {
        Some(path) => {
            let text =
                std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
            ConfigDocument::parse(&text).with_context(|| format!("in config {}", path.display()))?
        }
        None => ConfigDocument::default(),
    };
    let (mut config, mut spec) = doc.resolve(args.profile.map(Profile::from))?;

    if let Some(kind) = args.experiment {
        spec.kind = kind;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
        config.seed = seed;
    }
    if let Some(range) = &args.snr {
        spec.snr_grid = parse_snr_range(range)?;
    }
    if let Some(trials) = args.trials {
        spec.trials = trials;
    }
    if let Some(list) = &args.adc_bits {
        let bits = parse_adc_list(list)?;
        if spec.kind == ExperimentKind::AdcSweep {
            spec.adc_bits = bits;
        } else {
            match bits.as_slice() {
                [b] => config.adc_bits = *b,
                _ => bail!("--adc-bits takes a single resolution unless the experiment is adc_sweep"),
            }
        }
    }
    match args.psf {
        Some(PsfArg::Rect) => config.psf = Psf::Rect,
        Some(PsfArg::Rrc) if !matches!(config.psf, Psf::Rrc { .. }) => config.psf = Psf::TABLE_RRC,
        _ => {}
    }
    spec.config = config;
    spec.validate()?;
    Ok(spec)
}

fn gain_path(out: &Path, method: &str) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("gain");
    out.with_file_name(format!("{stem}_{method}.csv"))
}

fn run(args: &Args) -> Result<()> {
    let spec = build_spec(args)?;
    let table = thz_core::experiments::run_experiment(&spec)?;
    match &args.out {
        Some(path) => {
            write_results_csv(&table, path).with_context(|| format!("cannot write {}", path.display()))?;
            if spec.kind == ExperimentKind::GainProfile {
                for (method, samples) in gain_profiles(&spec)? {
                    let p = gain_path(path, method);
                    write_gain_profile_csv(&samples, &p).with_context(|| format!("cannot write {}", p.display()))?;
                }
            }
        }
        None => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_results(&table, &mut lock)?;
            lock.flush()?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("thz-sim: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

use std::fs::File;
use std::io::{self, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use mfenhance::config::load_config;
use mfenhance::masks::{read_masks_for, write_masks};
use mfenhance::metrics::{write_json, write_tsv, EvalRecord, MetricConfig};
use mfenhance::pipeline::{enhance_with_report, mix_at_snr, oracle_masks};
use mfenhance::{read_wav, write_wav, EnhanceConfig, FilterKind, SppSource};

#[derive(Parser)]
#[command(name = "mfenhance", version, about = "Multi-frame MVDR/MPDR speech enhancement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FilterArg {
    Mfmvdr,
    Mfmpdr,
}

#[derive(Clone, Copy, ValueEnum)]
enum SppArg {
    Model,
    MaskN1,
    MaskN2,
    /// Mask file whose speech plane already holds the SPP (see dump-spp).
    Oracle,
}

#[derive(Subcommand)]
enum Command {
    /// Enhance a noisy 16-bit mono WAV file.
    Enhance {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "mfmvdr")]
        filter: FilterArg,
        #[arg(long, value_enum, default_value = "model")]
        spp: SppArg,
        /// MFSM mask file, required unless --spp model.
        #[arg(long)]
        masks: Option<PathBuf>,
        /// key=value parameter file.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Mix clean speech with a random noise segment at a given SNR.
    Mix {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        noise: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        snr: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also write the scaled noise segment that was added.
        #[arg(long)]
        noise_out: Option<PathBuf>,
    },
    /// Write ideal speech/noise masks of an aligned clean + noise pair.
    OracleMasks {
        #[arg(long)]
        clean: PathBuf,
        /// The exact noise realization contained in the mixture.
        #[arg(long)]
        noise: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score an enhanced file against the clean reference.
    Eval {
        #[arg(long)]
        clean: PathBuf,
        #[arg(long)]
        enhanced: PathBuf,
        /// Noisy input, for the *_in columns.
        #[arg(long)]
        noisy: Option<PathBuf>,
        /// Report file; `.tsv` gives a table, anything else JSON.
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        id: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[arg(long, default_value = "")]
        method: String,
        /// Seconds excluded from the start of the signal.
        #[arg(long, default_value_t = 1.0)]
        exclude_head: f64,
    },
    /// Run the model-based SPP estimator and store it as an MFSM file.
    DumpSpp {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn base_config(path: Option<&Path>) -> Result<EnhanceConfig> {
    let base = EnhanceConfig::default();
    match path {
        Some(p) => load_config(p, &base).with_context(|| format!("loading {}", p.display())),
        None => Ok(base),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Enhance {
            input,
            out,
            filter,
            spp,
            masks,
            config,
        } => {
            let mut cfg = base_config(config.as_deref())?;
            cfg.filter = match filter {
                FilterArg::Mfmvdr => FilterKind::Mfmvdr,
                FilterArg::Mfmpdr => FilterKind::Mfmpdr,
            };
            cfg.spp_source = match spp {
                SppArg::Model => SppSource::Model,
                SppArg::MaskN1 => SppSource::MaskN1,
                SppArg::MaskN2 => SppSource::MaskN2,
                SppArg::Oracle => SppSource::Oracle,
            };
            let grid = match (&masks, cfg.spp_source.needs_masks()) {
                (Some(p), true) => {
                    Some(read_masks_for(p, &cfg.stft).with_context(|| format!("reading {}", p.display()))?)
                }
                (None, true) => bail!("--spp {} requires --masks", cfg.spp_source.name()),
                (Some(_), false) => bail!("--masks given but --spp is model"),
                (None, false) => None,
            };
            let noisy = read_wav(&input).with_context(|| format!("reading {}", input.display()))?;
            let (enhanced, report) = enhance_with_report(&noisy, &cfg, grid.as_ref())?;
            write_wav(&out, &enhanced).with_context(|| format!("writing {}", out.display()))?;
            if report.fallback_count > 0 {
                eprintln!(
                    "warning: {} of {} TF bins used the passthrough filter",
                    report.fallback_count,
                    report.fallback_count + report.filters_computed
                );
            }
        }
        Command::Mix {
            clean,
            noise,
            snr,
            seed,
            out,
            noise_out,
        } => {
            let clean = read_wav(&clean)?;
            let noise = read_wav(&noise)?;
            let (noisy, used) = mix_at_snr(&clean, &noise, snr, seed)?;
            let peak = noisy.samples.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            if peak >= 1.0 {
                eprintln!("warning: mixture clips (peak {peak:.3})");
            }
            write_wav(&out, &noisy)?;
            if let Some(p) = noise_out {
                write_wav(&p, &used)?;
            }
        }
        Command::OracleMasks { clean, noise, out } => {
            let cfg = EnhanceConfig::default();
            let masks = oracle_masks(&read_wav(&clean)?, &read_wav(&noise)?, &cfg.stft)?;
            write_masks(&out, &masks, &cfg.stft)?;
        }
        Command::Eval {
            clean,
            enhanced,
            noisy,
            report,
            id,
            snr,
            method,
            exclude_head,
        } => {
            let clean_utt = read_wav(&clean)?;
            let enhanced_utt = read_wav(&enhanced)?;
            let noisy_utt = noisy.as_ref().map(read_wav).transpose()?;
            let metric = MetricConfig {
                exclude_head_s: exclude_head,
                ..Default::default()
            };
            let record = EvalRecord::evaluate(
                id.unwrap_or_else(|| enhanced_utt.id.clone()),
                method,
                snr,
                &clean_utt.samples,
                noisy_utt.as_ref().map(|u| u.samples.as_slice()),
                &enhanced_utt.samples,
                clean_utt.sample_rate,
                &metric,
            )?;
            let records = [record];
            write_tsv(io::stdout().lock(), &records)?;
            if let Some(path) = report {
                let file = BufWriter::new(File::create(&path).with_context(|| format!("creating {}", path.display()))?);
                if path.extension().is_some_and(|e| e == "tsv") {
                    write_tsv(file, &records)?;
                } else {
                    write_json(file, &records)?;
                }
            }
        }
        Command::DumpSpp { input, out, config } => {
            let cfg = base_config(config.as_deref())?;
            let noisy = read_wav(&input)?;
            let (_, report) = enhance_with_report(&noisy, &cfg, None)?;
            write_masks(&out, &report.spp, &cfg.stft)?;
        }
    }
    Ok(())
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use riskmod::data::{self, SynthConfig};
use riskmod::harness::{self, Bounds, DatasetSource, ExperimentConfig, DEFAULT_EXPERIMENT};
use riskmod::labeler::{self, Lexicon};
use riskmod::losses::Tau;
use riskmod::model::Checkpoint;

/// Risk-modulated training experiments on coarse labels.
#[derive(Parser, Debug)]
#[command(name = "riskmod", version)]
struct Cli {
    /// Experiment config file; the bundled acceptance config when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for `run` and `tausweep`, output file for the other
    /// commands (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Replace the configured seed list with this single seed. For `gen`,
    /// the dataset seed.
    #[arg(long, global = true)]
    seed_override: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train every configured method under every seed and write results.csv.
    Run,
    /// Compare PU-RM at several tau values against the U-Ones baseline.
    Tausweep {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
        taus: Vec<f64>,
    },
    /// Tabulate CE and PCE of the positive class against its confidence.
    Losscurves {
        #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.5,0.7,0.9")]
        taus: Vec<f64>,
        #[arg(long, default_value_t = 0.001)]
        step: f64,
    },
    /// Evaluate a 2-d checkpoint on a lattice for plotting its decision boundary.
    Boundary {
        #[arg(long)]
        checkpoint: PathBuf,
        /// x_min,x_max,y_min,y_max
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-5.0, 5.0, -4.0, 4.0])]
        bounds: Vec<f64>,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Assign a positive report to the atypical or typical subcategory.
    Label {
        /// Report text; read from stdin when omitted.
        text: Option<String>,
        #[arg(long)]
        lexicon: Option<PathBuf>,
    },
    /// Write the configured synthetic dataset as JSON lines.
    Gen {
        #[arg(long, value_enum, default_value_t = Split::Train)]
        split: Split,
    },
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Split {
    /// The noisy training draw.
    Train,
    /// The noise-free validation draw.
    Val,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // library errors already carry their causes in the message
            let mut msg = e.to_string();
            for cause in e.chain().skip(1) {
                let cause = cause.to_string();
                if !msg.contains(&cause) {
                    msg = format!("{msg}: {cause}");
                }
            }
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::Run => {
            let cfg = experiment(&cli)?;
            let outcome = harness::run_experiment(&cfg)?;
            print!("{}", outcome.table.to_csv());
            eprintln!("wrote {}", cfg.output.join(harness::RESULTS_FILE).display());
        }
        Command::Tausweep { taus } => {
            let cfg = experiment(&cli)?;
            let outcome = harness::emit_tau_sweep(&cfg, &parse_taus(taus)?)?;
            print!("{}", outcome.table.to_csv());
            eprintln!("wrote {}", cfg.output.join(harness::TAU_SWEEP_FILE).display());
        }
        Command::Losscurves { taus, step } => {
            let curves = harness::emit_loss_curves(&parse_taus(taus)?, *step)?;
            emit(cli.out.as_deref(), &curves.to_csv())?;
        }
        Command::Boundary {
            checkpoint,
            bounds,
            resolution,
        } => {
            let ckpt = Checkpoint::load(checkpoint)?;
            let &[x_min, x_max, y_min, y_max] = bounds.as_slice() else {
                bail!("--bounds takes four numbers");
            };
            let bounds = Bounds {
                x_min,
                x_max,
                y_min,
                y_max,
            };
            let grid = harness::emit_boundary_grid(&ckpt.params, bounds, *resolution)?;
            emit(cli.out.as_deref(), &harness::boundary_csv(&grid))?;
        }
        Command::Label { text, lexicon } => {
            let lexicon = match lexicon {
                Some(p) => Lexicon::load(p)?,
                None => Lexicon::default(),
            };
            let text = match text {
                Some(t) => t.clone(),
                None => {
                    let mut buf = String::new();
                    io::stdin()
                        .read_to_string(&mut buf)
                        .context("reading report from stdin")?;
                    buf
                }
            };
            let label = labeler::label_report(&text, &lexicon);
            let mut out = format!("{}\n", label.subcategory);
            for h in &label.hits {
                out.push_str(&format!(
                    "{}\t{}\t{:?}\t{}\n",
                    h.position, h.surface, h.dimension, h.polarity
                ));
            }
            emit(cli.out.as_deref(), &out)?;
        }
        Command::Gen { split } => {
            let cfg = match &cli.config {
                Some(p) => ExperimentConfig::load(p)?,
                None => ExperimentConfig::parse(DEFAULT_EXPERIMENT)?,
            };
            let DatasetSource::Synth { config, val_seed } = cfg.dataset else {
                bail!("the config reads its data from files; `gen` needs a [synth] section");
            };
            let synth = match split {
                Split::Train => SynthConfig {
                    seed: cli.seed_override.unwrap_or(config.seed),
                    ..config
                },
                Split::Val => SynthConfig {
                    seed: cli.seed_override.unwrap_or(val_seed),
                    noise_rate: 0.0,
                    ..config
                },
            };
            let dataset = data::generate(&synth)?;
            emit(cli.out.as_deref(), &data::to_jsonl(&dataset)?)?;
        }
    }
    Ok(())
}

fn experiment(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::parse(DEFAULT_EXPERIMENT)?,
    };
    if let Some(out) = &cli.out {
        cfg.output = out.clone();
    }
    if let Some(seed) = cli.seed_override {
        cfg.seeds = vec![seed];
    }
    Ok(cfg)
}

fn parse_taus(taus: &[f64]) -> Result<Vec<Tau>> {
    Ok(taus.iter().map(|&t| Tau::new(t)).collect::<riskmod::Result<_>>()?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => match io::stdout().write_all(text.as_bytes()) {
            // a closed pipe (`riskmod gen | head`) is not an error
            Err(e) if e.kind() == io::ErrorKind::BrokenPipe => Ok(()),
            r => r.context("writing to stdout"),
        },
    }
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bowtie_core::evaluate::{self, Approach, EvaluationOptions, EvaluationResult};
use bowtie_core::model::{self, BowTieModel};
use bowtie_core::report;
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Bow-tie risk model evaluation: quantitative fault/event-tree analysis
/// and semi-quantitative confidence-level analysis.
#[derive(Parser)]
#[command(name = "bowtie", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate barriers, central event and phenomenon frequencies.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = ApproachArg::Both)]
        approach: ApproachArg,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Compare central-event frequencies of the two approaches per case.
    Compare {
        #[command(flatten)]
        common: CommonArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Check a model file and list every problem found.
    Validate {
        /// Model file (JSON).
        #[arg(long)]
        model: PathBuf,
    },
}

#[derive(Args)]
struct CommonArgs {
    /// Model file (JSON); the built-in separator case study if omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Case id, or `all`.
    #[arg(long, default_value = "all")]
    case: String,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Averaging grid step in hours.
    #[arg(long)]
    grid_step: Option<f64>,
    /// Averaging horizon in hours.
    #[arg(long)]
    horizon: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ApproachArg {
    Quant,
    Semi,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

fn load(path: Option<&Path>) -> Result<BowTieModel> {
    let Some(path) = path else {
        return Ok(model::case_study());
    };
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    model::parse_model(&text).map_err(|e| anyhow::anyhow!("invalid model {}:\n{e}", path.display()))
}

fn run_all(common: &CommonArgs, approaches: &[Approach]) -> Result<EvaluationResult> {
    let model = load(common.model.as_deref())?;
    let cases: Vec<String> = if common.case == "all" {
        model.cases.iter().map(|c| c.case_id.clone()).collect()
    } else {
        vec![common.case.clone()]
    };
    let options = EvaluationOptions {
        horizon_hours: common.horizon,
        grid_step_hours: common.grid_step,
    };
    Ok(evaluate::evaluate(&model, approaches, &cases, &options)?)
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Evaluate {
            common,
            approach,
            format,
        } => {
            let approaches = match approach {
                ApproachArg::Quant => vec![Approach::Quantitative],
                ApproachArg::Semi => vec![Approach::SemiQuantitative],
                ApproachArg::Both => vec![Approach::Quantitative, Approach::SemiQuantitative],
            };
            let result = run_all(&common, &approaches)?;
            let text = match format {
                Format::Table => report::render_table(&result),
                Format::Csv => report::render_csv(&result),
            };
            emit(common.out.as_deref(), &text)?;
        }
        Command::Compare { common, format } => {
            let result = run_all(
                &common,
                &[Approach::Quantitative, Approach::SemiQuantitative],
            )?;
            let rows = evaluate::compare(&result);
            if rows.is_empty() {
                bail!("nothing to compare");
            }
            let text = match format {
                Format::Table => report::render_comparison_table(&rows),
                Format::Csv => report::render_comparison_csv(&rows),
            };
            emit(common.out.as_deref(), &text)?;
        }
        Command::Validate { model } => {
            let text = fs::read_to_string(&model)
                .with_context(|| format!("reading {}", model.display()))?;
            return Ok(match model::parse_model(&text) {
                Ok(_) => {
                    println!("OK");
                    ExitCode::SUCCESS
                }
                Err(errors) => {
                    println!("{errors}");
                    eprintln!("{} error(s)", errors.0.len());
                    ExitCode::from(1)
                }
            });
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

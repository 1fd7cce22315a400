use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sembn::pipeline::{compare_estimators, run_pipeline, validate, PipelineConfig, PipelineError, RunOptions};
use sembn::synthetic;

#[derive(Parser)]
#[command(name = "sembn", version, about = "Fit a structural equation model and turn it into a discrete Bayesian network")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write every artifact.
    Run(Common),
    /// Fit EM and BDeu on the training split and write comparison.json.
    Compare(Common),
    /// Check the config and data without fitting.
    Validate(Common),
    /// Write a simulated data.csv and matching config.toml.
    Simulate {
        dir: PathBuf,
        #[arg(long, default_value_t = synthetic::CASE_STUDY_ROWS)]
        rows: usize,
        #[arg(long, default_value_t = synthetic::CASE_STUDY_ROWS - synthetic::CASE_STUDY_COMPLETE)]
        incomplete: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

#[derive(Args)]
struct Common {
    /// Config TOML, or the manifest.json of an earlier run.
    config: PathBuf,
    /// Output directory, replacing `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for the split and EM, replacing the configured seeds.
    #[arg(long)]
    seed: Option<u64>,
}

impl Common {
    fn load(&self) -> Result<(PipelineConfig, RunOptions), PipelineError> {
        let config = if self.config.extension().is_some_and(|e| e == "json") {
            PipelineConfig::from_manifest(&self.config)?
        } else {
            PipelineConfig::load(&self.config)?
        };
        let opts = RunOptions {
            out_dir: self.out.clone(),
            seed: self.seed,
            timestamp: source_date_epoch()?,
        };
        Ok((config, opts))
    }
}

fn source_date_epoch() -> Result<Option<u64>, PipelineError> {
    match std::env::var("SOURCE_DATE_EPOCH") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| PipelineError::config(format!("SOURCE_DATE_EPOCH is not an integer: {v}"))),
        Err(_) => Ok(None),
    }
}

fn execute(command: Command) -> Result<(), PipelineError> {
    match command {
        Command::Run(c) => {
            let (config, opts) = c.load()?;
            let summary = run_pipeline(config, &opts)?;
            for f in &summary.files {
                println!("{}", f.display());
            }
        }
        Command::Compare(c) => {
            let (config, opts) = c.load()?;
            let (cmp, path) = compare_estimators(config, &opts)?;
            println!("{:<10} {:>10} {:>10} {:>10}", "", "accuracy", "recall", "f1");
            for (name, m) in [
                ("em/train", &cmp.em.train),
                ("em/valid", &cmp.em.validation),
                ("bdeu/train", &cmp.bdeu.train),
                ("bdeu/valid", &cmp.bdeu.validation),
            ] {
                println!(
                    "{name:<10} {:>10.4} {:>10.4} {:>10.4}",
                    m.accuracy, m.recall_macro, m.f1_macro
                );
            }
            println!("{}", path.display());
        }
        Command::Validate(c) => {
            let (config, opts) = c.load()?;
            let report = validate(config, &opts)?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report serializes")
            );
        }
        Command::Simulate {
            dir,
            rows,
            incomplete,
            seed,
        } => {
            if incomplete > rows {
                return Err(PipelineError::config("--incomplete exceeds --rows"));
            }
            let path = synthetic::write_example(Path::new(&dir), rows, incomplete, seed).map_err(|e| {
                PipelineError::new(
                    sembn::pipeline::Stage::Output,
                    sembn::pipeline::ErrorKind::Data,
                    e.to_string(),
                )
            })?;
            println!("{}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

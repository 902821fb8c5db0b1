use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use leadlag::pipeline::{self, InputPaths, MethodRegistry, OutputFormat, RunConfig};
use leadlag::synth;
use leadlag::Error;

#[derive(Parser)]
#[command(name = "leadlag", version, about = "Lead-lag analysis of surveillance indicators against hospital admissions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    /// 121 trusts, 333 days, 20 indicators.
    Study,
    /// Same layout with 8 trusts.
    Small,
}

#[derive(Subcommand)]
enum Command {
    /// Run the analysis and write reports.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        admissions: PathBuf,
        /// Directory of <source>.csv indicator files.
        #[arg(long)]
        indicators: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
        #[arg(long)]
        population: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
        /// Comma-separated method names or families; overrides the config.
        #[arg(long, value_delimiter = ',')]
        methods: Option<Vec<String>>,
    },
    /// Write a synthetic corpus with known injected leads.
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, value_enum, default_value = "small")]
        preset: Preset,
    },
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            config,
            admissions,
            indicators,
            mapping,
            population,
            out,
            format,
            methods,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(m) = methods {
                cfg.methods = m;
            }
            let registry = MethodRegistry::with_defaults(&cfg);
            let selected = registry.select(&cfg.methods)?;
            let paths = InputPaths {
                admissions,
                indicators,
                mapping,
                population,
            };
            let inputs = pipeline::load_inputs(&cfg, &paths)?;
            let output = pipeline::run_analysis(&cfg, &selected, &inputs)?;
            let format = match format {
                Format::Csv => OutputFormat::Csv,
                Format::Json => OutputFormat::Json,
            };
            for p in pipeline::emit_reports(&output.rows, &output.summary, &out, format)? {
                log::info!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::Synth { out, seed, preset } => {
            let (mut spec, layout) = synth::study_scale(seed);
            if let Preset::Small = preset {
                spec.trusts = 8;
            }
            let paths = synth::write_corpus(&spec, &layout, &out)?;
            println!("{}", paths.config.display());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let c = e.category();
            eprintln!("error[{}]: {e}", c.as_str());
            ExitCode::from(c.exit_code() as u8)
        }
    }
}

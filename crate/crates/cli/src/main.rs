use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use lovasz_cli::{cmd_demo, cmd_run, cmd_verify, CliError, RunConfig};
use lovasz_core::hindman::StreamMode;
use lovasz_core::ratio;

#[derive(Parser)]
#[command(
    name = "lovasz",
    version,
    about = "Computable local-lemma colorings and immunity checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Comp,
    Main,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a family, color its constraint stream, and audit the result.
    Run {
        #[arg(long, value_enum)]
        mode: Mode,
        /// Addition-like function: sum or absdiff.
        #[arg(long = "f", default_value = "sum")]
        function: String,
        /// Minimum constraint size; defaults to the least admissible value.
        #[arg(long = "M")]
        min_size: Option<usize>,
        #[arg(long, default_value = "1/2")]
        q: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 16384)]
        horizon: usize,
        #[arg(long, default_value_t = 50)]
        members: usize,
        /// Family stages (defaults to the horizon).
        #[arg(long)]
        stages: Option<usize>,
        #[arg(long, default_value_t = 3)]
        mind_changes: usize,
        #[arg(long, env = "LOVASZ_OUT_DIR", default_value = "out")]
        out_dir: PathBuf,
    },
    /// Print a bundled demonstration: pigeonhole, baseline or lll-cert.
    Demo { name: String },
    /// Re-check a saved coloring against a stream manifest.
    Verify { coloring: PathBuf, stream: PathBuf },
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run {
            mode,
            function,
            min_size,
            q,
            seed,
            horizon,
            members,
            stages,
            mind_changes,
            out_dir,
        } => {
            let q = ratio::parse(&q).map_err(|e| CliError::Config(format!("q: {e}")))?;
            let mode = match mode {
                Mode::Comp => StreamMode::Comp,
                Mode::Main => StreamMode::Main,
            };
            let mut config = RunConfig::new(mode, &function, seed, horizon, members, out_dir);
            config.min_size = min_size;
            config.q = q;
            config.stages = stages;
            config.mind_changes = mind_changes;
            let summary = cmd_run(&config)?;
            Ok(format!(
                "{}\nwrote {}",
                summary.render(),
                config.out_dir.display()
            ))
        }
        Command::Demo { name } => cmd_demo(&name),
        Command::Verify { coloring, stream } => cmd_verify(&coloring, &stream).map(|s| s.render()),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(text) => {
            println!("{}", text.trim_end());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

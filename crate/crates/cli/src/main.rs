use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use stefan_core::runner::{self, Axis, RunConfig};
use stefan_core::{scenarios, verify, Exec};

#[derive(Parser)]
#[command(name = "stefan-lab", version, about = "Two-phase Stefan problem laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario over its refinement levels and write reports.
    Run(RunArgs),
    /// Run one scenario and add a trend summary along an axis.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_enum, default_value_t = AxisArg::Refinement)]
        axis: AxisArg,
    },
    /// Run the graph and proof-device property suites.
    Verify {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
        #[arg(long)]
        sequential: bool,
    },
    /// List the built-in scenarios.
    List,
}

#[derive(Args)]
struct RunArgs {
    /// TOML run configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Disable the data-parallel loops.
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum AxisArg {
    Refinement,
    M,
}

impl RunArgs {
    fn config(&self) -> stefan_core::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(s) = &self.scenario {
            cfg.scenario = s.clone();
        }
        if let Some(l) = self.levels {
            cfg.levels = l;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.out = o.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn exec(sequential: bool) -> Exec {
    if sequential {
        Exec::Sequential
    } else {
        Exec::Parallel
    }
}

fn run(args: &RunArgs, axis: Option<Axis>) -> ExitCode {
    let cfg = match args.config() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    let outcome = match runner::run(&cfg, exec(args.sequential)) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = runner::write_outputs(&outcome, &cfg.out, axis) {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    print!("{}", runner::table(&outcome.summary));
    println!("reports written to {}", cfg.out.display());
    if outcome.passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => run(&args, None),
        Command::Sweep { run: args, axis } => {
            let axis = match axis {
                AxisArg::Refinement => Axis::Refinement,
                AxisArg::M => Axis::M,
            };
            run(&args, Some(axis))
        }
        Command::Verify { seed, sequential } => match verify::verify_all(seed, exec(sequential)) {
            Ok(checks) => {
                checks.iter().for_each(|c| println!("{c}"));
                if checks.iter().all(|c| c.status != runner::Status::Fail) {
                    ExitCode::SUCCESS
                } else {
                    ExitCode::from(1)
                }
            }
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(2)
            }
        },
        Command::List => {
            for s in scenarios::all() {
                println!("{:<16} {}", s.name, s.description());
            }
            ExitCode::SUCCESS
        }
    }
}

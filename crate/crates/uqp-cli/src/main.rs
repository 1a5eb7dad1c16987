use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use uqp_cli::bench::BenchConfig;
use uqp_cli::families::Family;
use uqp_cli::{cmd_bench, cmd_compile, cmd_disasm, cmd_run, CliError, ReportFormat};
use uqp_core::isa::program::Target;

#[global_allocator]
static ALLOC: uqp_core::meter::CountingAllocator = uqp_core::meter::CountingAllocator;

/// Unified quantum platform toolchain: compile QIR kernels to the 32-bit
/// hybrid binary format, execute them on the simulated control processor,
/// inspect binaries and benchmark the runtime.
#[derive(Parser)]
#[command(name = "uqp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    /// superconducting
    Sc,
    /// neutral atom
    Na,
}

impl From<TargetArg> for Target {
    fn from(arg: TargetArg) -> Target {
        match arg {
            TargetArg::Sc => Target::Superconducting,
            TargetArg::Na => Target::NeutralAtom,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, ValueEnum)]
enum FamilyArg {
    Ghz,
    Lin,
    Qftlike,
}

impl From<FamilyArg> for Family {
    fn from(arg: FamilyArg) -> Family {
        match arg {
            FamilyArg::Ghz => Family::Ghz,
            FamilyArg::Lin => Family::Lin,
            FamilyArg::Qftlike => Family::QftLike,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Compile a QIR base-profile file into an offload binary (.uqpb)
    Compile {
        /// input .ll file
        input: PathBuf,
        /// output binary path
        #[arg(short, long)]
        output: PathBuf,
        /// hardware target
        #[arg(long, value_enum, default_value = "sc")]
        target: TargetArg,
        /// shots recorded in the binary header
        #[arg(long, default_value_t = 1000)]
        shots: u32,
    },
    /// Execute an offload binary on the simulated control processor
    Run {
        /// input .uqpb file
        program: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value = "json")]
        format: FormatArg,
        /// write the report here instead of stdout
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Print the annotated disassembly of an offload binary
    Disasm {
        /// input .uqpb file
        program: PathBuf,
    },
    /// Time the runtime lowering across a qubit range and write a CSV
    Bench {
        #[arg(long, value_enum)]
        family: FamilyArg,
        /// qubit range as A..B (inclusive)
        #[arg(long)]
        qubits: String,
        #[arg(long, default_value_t = 5)]
        step: u32,
        /// repetitions per data point
        #[arg(long, default_value_t = 1000)]
        reps: u32,
        /// output CSV path (stdout when omitted)
        #[arg(long)]
        csv: Option<PathBuf>,
        /// shard points across worker threads
        #[arg(long)]
        parallel: bool,
    },
}

fn parse_range(spec: &str) -> Result<(u32, u32), CliError> {
    let (from, to) = spec
        .split_once("..")
        .ok_or_else(|| CliError::User(format!("qubit range `{spec}` is not of the form A..B")))?;
    let parse = |s: &str| {
        s.trim()
            .parse::<u32>()
            .map_err(|_| CliError::User(format!("qubit range `{spec}` is not of the form A..B")))
    };
    Ok((parse(from)?, parse(to)?))
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Compile {
            input,
            output,
            target,
            shots,
        } => cmd_compile(&input, &output, target.into(), shots),
        Command::Run {
            program,
            seed,
            format,
            output,
        } => cmd_run(
            &program,
            seed,
            match format {
                FormatArg::Json => ReportFormat::Json,
                FormatArg::Csv => ReportFormat::Csv,
            },
            output.as_deref(),
        ),
        Command::Disasm { program } => cmd_disasm(&program),
        Command::Bench {
            family,
            qubits,
            step,
            reps,
            csv,
            parallel,
        } => {
            let (qubits_from, qubits_to) = parse_range(&qubits)?;
            let config = BenchConfig {
                family: family.into(),
                qubits_from,
                qubits_to,
                step,
                reps,
                parallel,
            };
            cmd_bench(&config, csv.as_deref())
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("uqp: {}", err.message());
            ExitCode::from(err.exit_code())
        }
    }
}

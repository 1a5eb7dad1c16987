//! Implementation of the `uqp` command-line toolchain.
//!
//! The binary front-end stays thin; command logic lives here so the
//! integration and acceptance suites can drive it directly.

pub mod bench;
pub mod families;

use std::fs;
use std::path::Path;

use uqp_core::isa::program::{disassemble, BinaryProgram, Target};
use uqp_core::lowering::{emission_cost, lower, JobOptions};
use uqp_core::qcp::{load, PulseLibrary};
use uqp_core::qir::{parse_qir, validate};

/// Environment variable overriding the pulse-library data file.
pub const PULSE_LIB_ENV: &str = "UQP_PULSE_LIB";

/// Command outcome classification for exit codes: user/input problems exit
/// 1, internal invariant violations exit 2.
#[derive(Debug)]
pub enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::User(m) | CliError::Internal(m) => m,
        }
    }
}

fn user<E: std::fmt::Display>(context: &str, err: E) -> CliError {
    CliError::User(format!("{context}: {err}"))
}

/// Report output format for `run`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

/// Compile a QIR file into an offload binary. Prints the lowering summary
/// on success.
pub fn cmd_compile(
    input: &Path,
    output: &Path,
    target: Target,
    shots: u32,
) -> Result<(), CliError> {
    let source = fs::read_to_string(input)
        .map_err(|e| user(&format!("cannot read {}", input.display()), e))?;
    let module =
        parse_qir(&source).map_err(|e| user(&format!("{}", input.display()), e))?;
    let kernel = validate(&module).map_err(|e| user(&format!("{}", input.display()), e))?;
    let opts = JobOptions::new(target, shots)
        .ok_or_else(|| CliError::User("shots must be at least 1".to_string()))?;
    let (program, report) =
        lower(&kernel, &opts).map_err(|e| user(&format!("{}", input.display()), e))?;
    if report.word_count != emission_cost(&kernel, target) {
        return Err(CliError::Internal(format!(
            "emitted {} words but the cost model predicts {}",
            report.word_count,
            emission_cost(&kernel, target)
        )));
    }
    let bytes = program
        .assemble()
        .map_err(|e| user(&format!("{}", input.display()), e))?;
    fs::write(output, bytes)
        .map_err(|e| user(&format!("cannot write {}", output.display()), e))?;
    println!(
        "compiled {} -> {} [{}] {} words, {} pool angles, {} output registers, peak {} bytes, {:.6}s",
        input.display(),
        output.display(),
        target,
        report.word_count,
        report.angle_count,
        report.recorded_results.len(),
        report.peak_bytes,
        report.wall_time.as_secs_f64(),
    );
    Ok(())
}

/// Resolve the pulse library: the env override when set, otherwise the
/// embedded default.
pub fn resolve_pulse_library() -> Result<PulseLibrary, CliError> {
    match std::env::var_os(PULSE_LIB_ENV) {
        Some(path) => {
            let text = fs::read_to_string(&path).map_err(|e| {
                user(
                    &format!("cannot read {PULSE_LIB_ENV}={}", Path::new(&path).display()),
                    e,
                )
            })?;
            PulseLibrary::from_json_str(&text)
                .map_err(|e| user(&format!("{}", Path::new(&path).display()), e))
        }
        None => Ok(PulseLibrary::embedded_default()),
    }
}

/// Execute an offload binary on the simulated control processor and write
/// the execution report.
pub fn cmd_run(
    program_path: &Path,
    seed: u64,
    format: ReportFormat,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let bytes = fs::read(program_path)
        .map_err(|e| user(&format!("cannot read {}", program_path.display()), e))?;
    let program = BinaryProgram::parse(&bytes)
        .map_err(|e| user(&format!("{}", program_path.display()), e))?;
    let library = resolve_pulse_library()?;
    let mut instance =
        load(program, library).map_err(|e| user(&format!("{}", program_path.display()), e))?;
    let report = instance
        .run(seed)
        .map_err(|e| user(&format!("{}", program_path.display()), e))?;
    let rendered = match format {
        ReportFormat::Json => report.to_json(),
        ReportFormat::Csv => report.histogram_csv(),
    };
    match output {
        Some(path) => fs::write(path, rendered)
            .map_err(|e| user(&format!("cannot write {}", path.display()), e))?,
        None => println!("{rendered}"),
    }
    Ok(())
}

/// Print the annotated disassembly listing of an offload binary.
pub fn cmd_disasm(program_path: &Path) -> Result<(), CliError> {
    let bytes = fs::read(program_path)
        .map_err(|e| user(&format!("cannot read {}", program_path.display()), e))?;
    let (_, listing) =
        disassemble(&bytes).map_err(|e| user(&format!("{}", program_path.display()), e))?;
    print!("{listing}");
    Ok(())
}

/// Run the scaling benchmark and write the CSV.
pub fn cmd_bench(config: &bench::BenchConfig, csv_path: Option<&Path>) -> Result<(), CliError> {
    let records = bench::run_bench(config).map_err(|e| CliError::User(e.to_string()))?;
    let csv = bench::to_csv(&records, config.reps);
    match csv_path {
        Some(path) => {
            fs::write(path, &csv)
                .map_err(|e| user(&format!("cannot write {}", path.display()), e))?;
            println!(
                "benchmarked {} over {}..={} step {} ({} reps/point) -> {}",
                config.family,
                config.qubits_from,
                config.qubits_to,
                config.step,
                config.reps,
                path.display()
            );
        }
        None => print!("{csv}"),
    }
    Ok(())
}

//! Code generation from a validated kernel to the offload binary.
//!
//! Lowering is verbatim: no optimization passes run, instructions are
//! emitted strictly in kernel order. Each gate becomes a memory instruction
//! plus a quantum operation; each measurement additionally fetches the
//! latch into its result register; result-record ops consume no words and
//! are reported as the program's output registers. Neutral-atom targets get
//! the four-stage atom-preparation prologue right after environment
//! initialization.

use std::num::NonZeroU32;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::isa::program::{AngleTable, BinaryProgram, Target, FORMAT_VERSION, MAX_QUBITS};
use crate::isa::{encode, AtomStage, GateCode, Instruction, IsaError, Word32};
use crate::meter;
use crate::qir::{QuantumKernel, ResolvedOp};

/// Job parameters supplied alongside the kernel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JobOptions {
    pub target: Target,
    pub shots: NonZeroU32,
    pub seed: Option<u64>,
}

impl JobOptions {
    pub fn new(target: Target, shots: u32) -> Option<JobOptions> {
        Some(JobOptions {
            target,
            shots: NonZeroU32::new(shots)?,
            seed: None,
        })
    }
}

/// Per-gate timing-field values, in control-processor cycles.
///
/// Real durations are hardware calibration data; the default of 4 cycles
/// for every gate matches the verification vectors.
#[derive(Debug, Clone)]
pub struct GateTimings {
    cycles: [u8; 64],
}

pub const DEFAULT_GATE_CYCLES: u8 = 4;

impl Default for GateTimings {
    fn default() -> Self {
        GateTimings {
            cycles: [DEFAULT_GATE_CYCLES; 64],
        }
    }
}

impl GateTimings {
    pub fn cycles(&self, gate: GateCode) -> u8 {
        self.cycles[gate as usize]
    }

    /// Override the timing field for one gate. `cycles` must fit the 6-bit
    /// field.
    pub fn set(&mut self, gate: GateCode, cycles: u8) {
        debug_assert!(cycles < 64);
        self.cycles[gate as usize] = cycles;
    }
}

/// What lowering produced, beyond the program itself.
#[derive(Debug, Clone, PartialEq)]
pub struct LoweringReport {
    pub word_count: usize,
    pub angle_count: usize,
    pub peak_bytes: usize,
    pub wall_time: Duration,
    /// Result registers marked for output by record ops, in kernel order.
    pub recorded_results: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoweringError {
    #[error("kernel addresses {num_qubits} qubits, above the {MAX_QUBITS}-qubit ISA limit")]
    QubitCountExceeded { num_qubits: u32 },
    #[error("gate `{gate}` is not executable on target {target}", gate = .gate.mnemonic())]
    UnsupportedGateForTarget { gate: GateCode, target: Target },
    #[error("kernel uses more than {max} distinct rotation angles", max = crate::isa::program::ANGLE_POOL_CAPACITY)]
    AnglePoolOverflow,
    #[error("result index {result} does not fit the indexed memory-instruction form")]
    ResultIndexTooLarge { result: u32 },
    #[error(transparent)]
    Isa(#[from] IsaError),
}

/// Words emitted by the neutral-atom preparation prologue.
pub const ATOM_PROLOGUE_WORDS: usize = 4;

/// Closed-form word count of `lower` for this kernel and target, from the
/// per-op cost table: one word of environment initialization, the atom
/// prologue on neutral-atom targets, two words per gate, three per
/// measurement, none per record, and the final halt.
pub fn emission_cost(kernel: &QuantumKernel, target: Target) -> usize {
    let prologue = match target {
        Target::Superconducting => 0,
        Target::NeutralAtom => ATOM_PROLOGUE_WORDS,
    };
    let body: usize = kernel
        .ops
        .iter()
        .map(|op| match op {
            ResolvedOp::Gate1 { .. } | ResolvedOp::Rotation { .. } | ResolvedOp::Gate2 { .. } => 2,
            ResolvedOp::Measure { .. } => 3,
            ResolvedOp::Record { .. } => 0,
        })
        .sum();
    1 + prologue + body + 1
}

/// Lower a validated kernel with the default gate timings.
pub fn lower(
    kernel: &QuantumKernel,
    opts: &JobOptions,
) -> Result<(BinaryProgram, LoweringReport), LoweringError> {
    lower_with_timings(kernel, opts, &GateTimings::default())
}

/// Lower a validated kernel to a binary program plus its report.
pub fn lower_with_timings(
    kernel: &QuantumKernel,
    opts: &JobOptions,
    timings: &GateTimings,
) -> Result<(BinaryProgram, LoweringReport), LoweringError> {
    let started = Instant::now();
    let (emitted, peak_bytes) = meter::with_peak(|| emit(kernel, opts, timings));
    let (program, recorded_results) = emitted?;
    let report = LoweringReport {
        word_count: program.words.len(),
        angle_count: program.angle_table.len(),
        peak_bytes,
        wall_time: started.elapsed(),
        recorded_results,
    };
    Ok((program, report))
}

fn emit(
    kernel: &QuantumKernel,
    opts: &JobOptions,
    timings: &GateTimings,
) -> Result<(BinaryProgram, Vec<u32>), LoweringError> {
    if kernel.num_qubits > MAX_QUBITS as u32 {
        return Err(LoweringError::QubitCountExceeded {
            num_qubits: kernel.num_qubits,
        });
    }

    let mut words: Vec<Word32> = Vec::with_capacity(emission_cost(kernel, opts.target));
    let mut angle_table = AngleTable::new();
    let mut recorded = Vec::new();
    let push = |words: &mut Vec<Word32>, instr: Instruction| -> Result<(), LoweringError> {
        words.push(encode(&instr)?);
        Ok(())
    };

    let env_size = kernel.num_qubits.max(kernel.num_results);
    push(&mut words, Instruction::EnvInit { size: env_size })?;

    if opts.target == Target::NeutralAtom {
        for stage in AtomStage::ALL {
            push(&mut words, Instruction::AtomPrep { stage })?;
        }
    }

    for op in &kernel.ops {
        match *op {
            ResolvedOp::Gate1 { gate, qubit } => {
                push(&mut words, Instruction::mem_load_single(qubit as u16, None))?;
                push(
                    &mut words,
                    Instruction::quantum_single(gate, timings.cycles(gate)),
                )?;
            }
            ResolvedOp::Rotation { gate, qubit, angle } => {
                push(&mut words, Instruction::mem_load_single(qubit as u16, None))?;
                let angle_index = angle_table
                    .intern(angle)
                    .ok_or(LoweringError::AnglePoolOverflow)?;
                push(
                    &mut words,
                    Instruction::quantum_rotation(gate, angle_index, timings.cycles(gate)),
                )?;
            }
            ResolvedOp::Gate2 {
                gate,
                control,
                target,
            } => {
                push(
                    &mut words,
                    Instruction::mem_load_pair(control as u8, target as u8),
                )?;
                push(
                    &mut words,
                    Instruction::quantum_pair(gate, timings.cycles(gate)),
                )?;
            }
            ResolvedOp::Measure { qubit, result } => {
                if result > u8::MAX as u32 {
                    return Err(LoweringError::ResultIndexTooLarge { result });
                }
                push(
                    &mut words,
                    Instruction::mem_load_single(qubit as u16, Some(result as u16)),
                )?;
                push(
                    &mut words,
                    Instruction::quantum_measure(qubit as u16, timings.cycles(GateCode::Mz)),
                )?;
                push(
                    &mut words,
                    Instruction::FetchResult {
                        result: result as u16,
                    },
                )?;
            }
            ResolvedOp::Record { result } => recorded.push(result),
        }
    }

    push(&mut words, Instruction::Halt)?;

    let program = BinaryProgram {
        version: FORMAT_VERSION,
        target: opts.target,
        num_qubits: kernel.num_qubits as u16,
        num_results: kernel.num_results as u16,
        shots: opts.shots.get(),
        angle_table,
        words,
    };
    Ok((program, recorded))
}

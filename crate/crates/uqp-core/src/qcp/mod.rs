//! Cross-technology control-processor simulator.
//!
//! Decodes and executes the 32-bit word stream: classical control (program
//! counter, address registers, result registers), quantum control (pulse
//! scheduling against the modality's pulse library, state-vector execution
//! at desk scale) and the neutral-atom preparation unit. Programs wider
//! than the state-vector cap run trace-only: instructions decode, pulses
//! schedule and the clock advances, but no statistics are produced.

pub mod pulse;
pub mod statevec;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use thiserror::Error;

use crate::atoms::{
    apply_plan, detect, emit_moves, half_signal_threshold, plan_sort, synth_image,
    AtomError, AtomGrid, AtomImage, SortPlan, TargetPattern,
};
use crate::isa::program::{BinaryProgram, ProgramError, Target};
use crate::isa::{decode, AtomStage, GateCode, Instruction, IsaError, MemMode};
use crate::rng;

pub use pulse::{PulseChannel, PulseEvent, PulseLibrary, WaveformDef};
pub use statevec::{StateVector, StateVecError, MAX_STATEVEC_QUBITS};

/// What the address registers currently hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AddrKind {
    None,
    Mask,
    Pair,
}

/// Architectural state of the control processor.
#[derive(Debug, Clone)]
pub struct MachineState {
    pub pc: usize,
    pub qubit_addr_reg: u128,
    pub pair_reg: (u8, u8),
    pub addr_kind: AddrKind,
    pub pending_result: Option<u16>,
    pub last_measurement: Option<bool>,
    pub result_regs: Vec<bool>,
    pub clock: u64,
    pub halted: bool,
    pub modality: Target,
}

impl MachineState {
    fn fresh(modality: Target) -> MachineState {
        MachineState {
            pc: 0,
            qubit_addr_reg: 0,
            pair_reg: (0, 0),
            addr_kind: AddrKind::None,
            pending_result: None,
            last_measurement: None,
            result_regs: Vec::new(),
            clock: 0,
            halted: false,
            modality,
        }
    }
}

/// Configuration of the simulated trap array and imaging chain.
#[derive(Debug, Clone)]
pub struct AtomSetup {
    pub rows: usize,
    pub cols: usize,
    /// Per-site loading probability of the stochastic fill.
    pub fill: f64,
    pub brightness: f64,
    pub noise_sd: f64,
    pub threshold: f64,
    pub target: TargetPattern,
}

impl AtomSetup {
    /// Array large enough to load `num_qubits` computational sites with
    /// surplus ancillary atoms, targeting a dense top-left rectangle.
    pub fn for_qubits(num_qubits: u16) -> AtomSetup {
        let wanted = num_qubits.max(1) as usize;
        let side = (2 * wanted).isqrt().max(1);
        let side = if side * side < 2 * wanted { side + 1 } else { side };
        let brightness = 5000.0;
        AtomSetup {
            rows: side,
            cols: side,
            fill: 0.7,
            brightness,
            noise_sd: 100.0,
            threshold: half_signal_threshold(brightness),
            target: TargetPattern::dense_rect(num_qubits as usize, side),
        }
    }
}

/// Progress and outcome of the preparation pipeline (first shot).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AtomPrepLog {
    pub rows: usize,
    pub cols: usize,
    pub loaded_atoms: usize,
    pub detected_atoms: usize,
    pub target_sites: usize,
    pub plan_moves: usize,
    pub plan_cost: usize,
    pub commands_sent: usize,
}

#[derive(Debug, Default)]
struct AtomUnit {
    truth: Option<AtomGrid>,
    image: Option<AtomImage>,
    detected: Option<AtomGrid>,
    plan: Option<SortPlan>,
    next_stage: Option<AtomStage>,
    log: Option<AtomPrepLog>,
}

impl AtomUnit {
    fn reset(&mut self) {
        *self = AtomUnit {
            next_stage: Some(AtomStage::ImageFetch),
            ..AtomUnit::default()
        };
    }
}

/// Execution outcome over all shots.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionReport {
    pub shots: u32,
    /// True when the register exceeded the state-vector cap: pulses and
    /// timing were simulated but no measurement statistics exist.
    pub trace_only: bool,
    /// Per-shot result-register bitstrings (result 0 leftmost).
    pub records: Vec<String>,
    pub histogram: BTreeMap<String, u32>,
    /// Pulse schedule of shot 0.
    pub pulse_trace: Vec<PulseEvent>,
    pub atom_prep_log: Option<AtomPrepLog>,
}

impl ExecutionReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Histogram only: `bitstring,count` rows.
    pub fn histogram_csv(&self) -> String {
        let mut out = String::from("bitstring,count\n");
        for (bits, count) in &self.histogram {
            let _ = writeln!(out, "{bits},{count}");
        }
        out
    }

    /// Pulse trace as `t,channel,waveform_id,params` rows.
    pub fn trace_csv(&self) -> String {
        let mut out = String::from("t,channel,waveform_id,params\n");
        for event in &self.pulse_trace {
            let params = event
                .params
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect::<Vec<_>>()
                .join(";");
            let _ = writeln!(out, "{},{},{},{}", event.t, event.channel, event.waveform_id, params);
        }
        out
    }
}

/// Result of one [`QcpInstance::step`].
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    /// Word index the instruction was fetched from.
    pub pc: usize,
    pub instr: Instruction,
    pub halted: bool,
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("program rejected: {0}")]
    BadProgram(#[from] ProgramError),
    #[error("no waveform for gates {gates:?} on target {target}")]
    MissingWaveform { target: Target, gates: Vec<GateCode> },
    #[error("pc {pc}: {source}")]
    IllegalOpcode {
        pc: usize,
        #[source]
        source: IsaError,
    },
    #[error("pc {pc}: measurement without a pending result selector")]
    MeasureWithoutPendingResult { pc: usize },
    #[error("pc {pc}: atom-preparation instruction on a superconducting target")]
    AtomPrepOnSuperconducting { pc: usize },
    #[error("pc {pc}: atom stage {found:?} out of order (expected {expected:?})")]
    AtomStageOutOfOrder {
        pc: usize,
        expected: Option<AtomStage>,
        found: AtomStage,
    },
    #[error("pc {pc}: atom pipeline failed: {source}")]
    AtomPipeline {
        pc: usize,
        #[source]
        source: AtomError,
    },
    #[error("pc {pc}: quantum op with no target loaded")]
    NoTargetLoaded { pc: usize },
    #[error("pc {pc}: qubit {qubit} outside the {num_qubits}-qubit register")]
    QubitOutOfRange {
        pc: usize,
        qubit: u32,
        num_qubits: u16,
    },
    #[error("pc {pc}: result {result} outside the {num_results}-register file")]
    ResultOutOfRange {
        pc: usize,
        result: u16,
        num_results: u16,
    },
    #[error("pc {pc}: pair register holds identical control and target {qubit}")]
    PairOverlap { pc: usize, qubit: u8 },
    #[error("pc {pc}: two-qubit gate without a pair load")]
    NoPairLoaded { pc: usize },
    #[error("pc {pc}: measurement addresses more than one qubit")]
    MultiTargetMeasurement { pc: usize },
    #[error("pc {pc}: malformed result selector 0x{selector:02x}")]
    MalformedResultSelector { pc: usize, selector: u8 },
    #[error("pc {pc}: mask segment without a preceding base load")]
    SegmentWithoutBase { pc: usize },
    #[error("pc {pc}: rotation references angle {index} outside the pool")]
    AngleOutOfRange { pc: usize, index: u16 },
    #[error("pc {pc}: fetch before any measurement")]
    FetchBeforeMeasure { pc: usize },
    #[error("pc {pc}: ran off the end of the word stream without halt")]
    RanOffEnd { pc: usize },
    #[error("machine already halted")]
    MachineHalted,
    #[error(transparent)]
    StateVec(#[from] StateVecError),
    #[error("shot {shot}: {source}")]
    InShot {
        shot: u32,
        #[source]
        source: Box<SimError>,
    },
}

/// A loaded program plus machine state, ready to step or run.
#[derive(Debug)]
pub struct QcpInstance {
    program: BinaryProgram,
    library: PulseLibrary,
    state: MachineState,
    statevec: Option<StateVector>,
    trace_only: bool,
    atom_setup: AtomSetup,
    atom: AtomUnit,
    pulse_trace: Vec<PulseEvent>,
    record_trace: bool,
    seed: u64,
    shot: u32,
    meas_ordinal: u64,
}

/// Validate a program against a pulse library and prepare an instance.
pub fn load(program: BinaryProgram, library: PulseLibrary) -> Result<QcpInstance, SimError> {
    program.validate()?;
    let mut gates = Vec::new();
    for (pc, word) in program.words.iter().enumerate() {
        match decode(*word) {
            Ok(Instruction::QuantumOp { gate, .. }) => gates.push(gate),
            Ok(_) => {}
            Err(source) => return Err(SimError::IllegalOpcode { pc, source }),
        }
    }
    let missing = library.missing_for(program.target, gates);
    if !missing.is_empty() {
        return Err(SimError::MissingWaveform {
            target: program.target,
            gates: missing,
        });
    }
    let trace_only = program.num_qubits > MAX_STATEVEC_QUBITS;
    let atom_setup = AtomSetup::for_qubits(program.num_qubits);
    let modality = program.target;
    Ok(QcpInstance {
        program,
        library,
        state: MachineState::fresh(modality),
        statevec: None,
        trace_only,
        atom_setup,
        atom: AtomUnit::default(),
        pulse_trace: Vec::new(),
        record_trace: true,
        seed: 0,
        shot: 0,
        meas_ordinal: 0,
    })
}

impl QcpInstance {
    pub fn program(&self) -> &BinaryProgram {
        &self.program
    }

    pub fn state(&self) -> &MachineState {
        &self.state
    }

    pub fn statevector(&self) -> Option<&StateVector> {
        self.statevec.as_ref()
    }

    pub fn trace_only(&self) -> bool {
        self.trace_only
    }

    /// Replace the default trap-array configuration (neutral atom only).
    pub fn set_atom_setup(&mut self, setup: AtomSetup) {
        self.atom_setup = setup;
    }

    /// Reset the machine for one shot of a run seeded with `seed`.
    pub fn begin_shot(&mut self, seed: u64, shot: u32) {
        self.seed = seed;
        self.shot = shot;
        self.meas_ordinal = 0;
        self.state = MachineState::fresh(self.program.target);
        self.statevec = None;
        self.atom = AtomUnit::default();
        self.record_trace = shot == 0;
        self.pulse_trace.clear();
    }

    /// Decode and execute the word at the program counter.
    pub fn step(&mut self) -> Result<StepOutcome, SimError> {
        if self.state.halted {
            return Err(SimError::MachineHalted);
        }
        let pc = self.state.pc;
        let word = *self
            .program
            .words
            .get(pc)
            .ok_or(SimError::RanOffEnd { pc })?;
        let instr = decode(word).map_err(|source| SimError::IllegalOpcode { pc, source })?;
        self.execute(pc, instr)?;
        self.state.pc = pc + 1;
        Ok(StepOutcome {
            pc,
            instr,
            halted: self.state.halted,
        })
    }

    /// Execute all shots and aggregate the report.
    pub fn run(&mut self, seed: u64) -> Result<ExecutionReport, SimError> {
        let shots = self.program.shots;
        let mut records = Vec::new();
        let mut histogram: BTreeMap<String, u32> = BTreeMap::new();
        let mut pulse_trace = Vec::new();
        let mut atom_prep_log = None;

        for shot in 0..shots {
            self.begin_shot(seed, shot);
            while !self.state.halted {
                let pc = self.state.pc;
                self.step().map_err(|source| SimError::InShot {
                    shot,
                    source: Box::new(source),
                })?;
                debug_assert!(self.state.pc == pc + 1);
            }
            if !self.trace_only {
                let bits: String = self
                    .state
                    .result_regs
                    .iter()
                    .map(|b| if *b { '1' } else { '0' })
                    .collect();
                *histogram.entry(bits.clone()).or_insert(0) += 1;
                records.push(bits);
            }
            if shot == 0 {
                pulse_trace = std::mem::take(&mut self.pulse_trace);
                atom_prep_log = self.atom.log.clone();
            }
        }

        Ok(ExecutionReport {
            shots,
            trace_only: self.trace_only,
            records,
            histogram,
            pulse_trace,
            atom_prep_log,
        })
    }

    fn execute(&mut self, pc: usize, instr: Instruction) -> Result<(), SimError> {
        match instr {
            Instruction::EnvInit { .. } => {
                let modality = self.program.target;
                let pc_next = self.state.pc;
                self.state = MachineState::fresh(modality);
                self.state.pc = pc_next;
                self.state.result_regs = vec![false; self.program.num_results as usize];
                self.statevec = if self.trace_only {
                    None
                } else {
                    Some(StateVector::new(self.program.num_qubits)?)
                };
                self.atom.reset();
                Ok(())
            }
            Instruction::MemLoad {
                mode,
                result_sel,
                qubit_mask,
            } => self.exec_mem_load(pc, mode, result_sel, qubit_mask),
            Instruction::QuantumOp {
                gate,
                operand,
                timing,
            } => self.exec_quantum_op(pc, gate, operand, timing),
            Instruction::FetchResult { result } => {
                if result as u32 >= self.program.num_results as u32 {
                    return Err(SimError::ResultOutOfRange {
                        pc,
                        result,
                        num_results: self.program.num_results,
                    });
                }
                let latch = self
                    .state
                    .last_measurement
                    .ok_or(SimError::FetchBeforeMeasure { pc })?;
                self.state.result_regs[result as usize] = latch;
                Ok(())
            }
            Instruction::AtomPrep { stage } => self.exec_atom_prep(pc, stage),
            Instruction::Halt => {
                self.state.halted = true;
                Ok(())
            }
        }
    }

    fn exec_mem_load(
        &mut self,
        pc: usize,
        mode: MemMode,
        result_sel: u8,
        qubit_mask: u16,
    ) -> Result<(), SimError> {
        match mode {
            MemMode::OneHot => {
                self.state.qubit_addr_reg = qubit_mask as u128;
                self.state.addr_kind = AddrKind::Mask;
                self.state.pending_result = match result_sel {
                    0 => None,
                    sel if sel & 0x0f == 0 && (sel >> 4).count_ones() == 1 => {
                        Some((sel >> 4).trailing_zeros() as u16)
                    }
                    sel => {
                        return Err(SimError::MalformedResultSelector { pc, selector: sel })
                    }
                };
                Ok(())
            }
            MemMode::Indexed | MemMode::IndexedResult => {
                let qubit = qubit_mask as u32;
                if qubit >= self.program.num_qubits as u32 {
                    return Err(SimError::QubitOutOfRange {
                        pc,
                        qubit,
                        num_qubits: self.program.num_qubits,
                    });
                }
                self.state.qubit_addr_reg = 1u128 << qubit;
                self.state.addr_kind = AddrKind::Mask;
                self.state.pending_result = match mode {
                    MemMode::Indexed => {
                        if result_sel != 0 {
                            return Err(SimError::MalformedResultSelector {
                                pc,
                                selector: result_sel,
                            });
                        }
                        None
                    }
                    _ => Some(result_sel as u16),
                };
                Ok(())
            }
            MemMode::MaskSegment => {
                if self.state.addr_kind != AddrKind::Mask {
                    return Err(SimError::SegmentWithoutBase { pc });
                }
                let segment = result_sel as u32;
                if !(1..=7).contains(&segment) {
                    return Err(SimError::MalformedResultSelector {
                        pc,
                        selector: result_sel,
                    });
                }
                self.state.qubit_addr_reg |= (qubit_mask as u128) << (16 * segment);
                Ok(())
            }
            MemMode::Pair => {
                if result_sel != 0 {
                    return Err(SimError::MalformedResultSelector {
                        pc,
                        selector: result_sel,
                    });
                }
                self.state.pair_reg = ((qubit_mask >> 8) as u8, (qubit_mask & 0xff) as u8);
                self.state.addr_kind = AddrKind::Pair;
                self.state.pending_result = None;
                Ok(())
            }
        }
    }

    fn masked_qubits(&self, pc: usize) -> Result<Vec<u16>, SimError> {
        if self.state.addr_kind != AddrKind::Mask {
            return Err(SimError::NoTargetLoaded { pc });
        }
        let mut mask = self.state.qubit_addr_reg;
        if mask == 0 {
            return Err(SimError::NoTargetLoaded { pc });
        }
        let mut qubits = Vec::with_capacity(mask.count_ones() as usize);
        while mask != 0 {
            let q = mask.trailing_zeros();
            if q >= self.program.num_qubits as u32 {
                return Err(SimError::QubitOutOfRange {
                    pc,
                    qubit: q,
                    num_qubits: self.program.num_qubits,
                });
            }
            qubits.push(q as u16);
            mask &= mask - 1;
        }
        Ok(qubits)
    }

    fn emit_pulse(&mut self, channel: PulseChannel, gate: GateCode, angle: Option<f64>) {
        if !self.record_trace {
            return;
        }
        let def = self
            .library
            .lookup(self.program.target, gate)
            .expect("coverage checked at load");
        let mut params = def.params.clone();
        if let Some(angle) = angle {
            params.insert("angle".to_string(), angle);
        }
        self.pulse_trace.push(PulseEvent {
            t: self.state.clock,
            channel,
            waveform_id: def.waveform.clone(),
            params,
        });
    }

    fn next_draw(&mut self) -> f64 {
        let u = rng::measurement_draw(self.seed, self.shot as u64, self.meas_ordinal);
        self.meas_ordinal += 1;
        u
    }

    fn exec_quantum_op(
        &mut self,
        pc: usize,
        gate: GateCode,
        operand: u16,
        timing: u8,
    ) -> Result<(), SimError> {
        if gate.is_two_qubit() {
            if self.state.addr_kind != AddrKind::Pair {
                return Err(SimError::NoPairLoaded { pc });
            }
            let (control, target) = self.state.pair_reg;
            if control == target {
                return Err(SimError::PairOverlap { pc, qubit: control });
            }
            for q in [control, target] {
                if q as u32 >= self.program.num_qubits as u32 {
                    return Err(SimError::QubitOutOfRange {
                        pc,
                        qubit: q as u32,
                        num_qubits: self.program.num_qubits,
                    });
                }
            }
            self.emit_pulse(
                PulseChannel::Pair {
                    control: control as u16,
                    target: target as u16,
                },
                gate,
                None,
            );
            if let Some(sv) = self.statevec.as_mut() {
                sv.apply_gate(gate, &[control as u16, target as u16], None)?;
            }
        } else if gate == GateCode::Mz {
            let qubits = self.masked_qubits(pc)?;
            let [qubit] = qubits.as_slice() else {
                return Err(SimError::MultiTargetMeasurement { pc });
            };
            let pending = self
                .state
                .pending_result
                .take()
                .ok_or(SimError::MeasureWithoutPendingResult { pc })?;
            if pending as u32 >= self.program.num_results as u32 {
                return Err(SimError::ResultOutOfRange {
                    pc,
                    result: pending,
                    num_results: self.program.num_results,
                });
            }
            self.emit_pulse(PulseChannel::Qubit(*qubit), gate, None);
            let u = self.next_draw();
            let outcome = match self.statevec.as_mut() {
                Some(sv) => sv.measure(*qubit, u),
                None => false,
            };
            self.state.last_measurement = Some(outcome);
        } else if gate == GateCode::Reset {
            for qubit in self.masked_qubits(pc)? {
                self.emit_pulse(PulseChannel::Qubit(qubit), gate, None);
                let u = self.next_draw();
                if let Some(sv) = self.statevec.as_mut() {
                    if sv.measure(qubit, u) {
                        sv.apply_gate(GateCode::X, &[qubit], None)?;
                    }
                }
            }
        } else {
            let angle = if gate.is_rotation() {
                let index = operand & 0x0fff;
                Some(
                    self.program
                        .angle_table
                        .get(index)
                        .ok_or(SimError::AngleOutOfRange { pc, index })?,
                )
            } else {
                None
            };
            for qubit in self.masked_qubits(pc)? {
                self.emit_pulse(PulseChannel::Qubit(qubit), gate, angle);
                if let Some(sv) = self.statevec.as_mut() {
                    sv.apply_gate(gate, &[qubit], angle)?;
                }
            }
        }
        self.state.clock += timing as u64;
        Ok(())
    }

    fn exec_atom_prep(&mut self, pc: usize, stage: AtomStage) -> Result<(), SimError> {
        if self.program.target != Target::NeutralAtom {
            return Err(SimError::AtomPrepOnSuperconducting { pc });
        }
        if self.atom.next_stage != Some(stage) {
            return Err(SimError::AtomStageOutOfOrder {
                pc,
                expected: self.atom.next_stage,
                found: stage,
            });
        }
        let atom_err = |source| SimError::AtomPipeline { pc, source };
        let setup = &self.atom_setup;
        match stage {
            AtomStage::ImageFetch => {
                let load_key = rng::stream_key(self.seed, 0x41_544f4d, self.shot as u64);
                let truth = AtomGrid::random(
                    setup.rows,
                    setup.cols,
                    setup.fill,
                    load_key,
                    Some(setup.target.len()),
                );
                let image = synth_image(&truth, setup.brightness, setup.noise_sd, load_key ^ 1);
                self.atom.log = Some(AtomPrepLog {
                    rows: setup.rows,
                    cols: setup.cols,
                    loaded_atoms: truth.occupied_count(),
                    detected_atoms: 0,
                    target_sites: setup.target.len(),
                    plan_moves: 0,
                    plan_cost: 0,
                    commands_sent: 0,
                });
                self.atom.truth = Some(truth);
                self.atom.image = Some(image);
                self.atom.next_stage = Some(AtomStage::AtomDetect);
                Ok(())
            }
            AtomStage::AtomDetect => {
                let image = self.atom.image.as_ref().expect("stage order enforced");
                let grid =
                    detect(image, setup.rows, setup.cols, setup.threshold).map_err(atom_err)?;
                if let Some(log) = self.atom.log.as_mut() {
                    log.detected_atoms = grid.occupied_count();
                }
                self.atom.detected = Some(grid);
                self.atom.next_stage = Some(AtomStage::AtomSort);
                Ok(())
            }
            AtomStage::AtomSort => {
                let grid = self.atom.detected.as_ref().expect("stage order enforced");
                let plan = plan_sort(grid, &setup.target).map_err(atom_err)?;
                if let Some(log) = self.atom.log.as_mut() {
                    log.plan_moves = plan.moves.len();
                    log.plan_cost = plan.cost();
                }
                self.atom.plan = Some(plan);
                self.atom.next_stage = Some(AtomStage::AtomMove);
                Ok(())
            }
            AtomStage::AtomMove => {
                let grid = self.atom.detected.as_ref().expect("stage order enforced");
                let plan = self.atom.plan.as_ref().expect("stage order enforced");
                let commands = emit_moves(plan);
                let rearranged = apply_plan(grid, plan).map_err(atom_err)?;
                debug_assert!(setup
                    .target
                    .iter()
                    .all(|s| rearranged.is_occupied(s.0, s.1)));
                if let Some(log) = self.atom.log.as_mut() {
                    log.commands_sent = commands.len();
                }
                self.atom.detected = Some(rearranged);
                self.atom.next_stage = None;
                Ok(())
            }
        }
    }
}

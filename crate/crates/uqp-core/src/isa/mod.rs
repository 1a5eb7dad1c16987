//! The unified 32-bit hybrid instruction set.
//!
//! Every instruction occupies exactly one little-endian 32-bit word. The top
//! nibble, bits `[31:28]`, selects the instruction class:
//!
//! | class  | meaning                                             |
//! |--------|-----------------------------------------------------|
//! | `0000` | control; the all-zero word is `halt`                |
//! | `0010` | classical-result ops; sub-op `1010` = fetch result  |
//! | `0100` | execution environment initialization                |
//! | `0101` | memory instruction (qubit / result addressing)      |
//! | `0110` | neutral-atom preparation; sub-op in `[27:24]`       |
//! | `1000` | quantum operation                                   |
//!
//! Any other class value, and any undefined sub-op or mode pattern inside a
//! defined class, decodes to [`IsaError::IllegalOpcode`]; decoding never
//! panics on arbitrary input.
//!
//! ## Memory instructions (`0101`)
//!
//! `mode[27:24] | result_sel[23:16] | qubit_mask[15:0]`
//!
//! Gates do not carry their targets inline. A memory instruction loads the
//! qubit address register (and, for measurements, the pending result
//! selector); the following quantum operation reads its targets from those
//! registers. Defined modes:
//!
//! * `0000` one-hot: `qubit_mask` holds a one-hot selection of qubits 0..=15
//!   and begins a fresh load. `result_sel` is zero or a one-hot over its bits
//!   4..=7 selecting result register 0..=3.
//! * `0001` indexed: `qubit_mask` is a binary qubit index. Used when the
//!   target does not fit the one-hot form.
//! * `0010` indexed+result: as `0001`, with `result_sel` holding a binary
//!   result-register index.
//! * `0011` mask segment: `result_sel` is a segment number `s >= 1` and
//!   `qubit_mask` carries mask bits for qubits `16s..=16s+15`, OR-ed into the
//!   address register loaded by a preceding mode-`0000` word. Masks wider
//!   than 16 bits are expressed as such multi-word sequences.
//! * `1001` pair: `qubit_mask[15:8]` is the control index, `[7:0]` the
//!   target index, both binary. Loads the pair register for two-qubit gates.
//!
//! ## Quantum operations (`1000`)
//!
//! `gate_code[27:22] | operand[21:6] | timing[5:0]`
//!
//! `timing` is the cycle count the operation occupies on the control
//! processor. The operand field is gate-family specific: zero for plain
//! single-qubit gates, bit 15 set for pair-addressed (two-qubit) gates, the
//! angle-pool index in bits `[11:0]` for rotations, and for measurements a
//! one-hot echo of the measured qubit at bit `11 + q` when `q <= 3` (zero
//! otherwise; the authoritative target always comes from the address
//! register).
//!
//! ## Classical-result ops (`0010`)
//!
//! Sub-op `1010` fetches the last measurement latch into a result register:
//! bits `[15:0]` are a one-hot selector, bits `[23:16]` a binary segment
//! number, selecting register `16 * segment + bit`.
//!
//! ## Atom preparation (`0110`)
//!
//! Sub-ops `0001` image fetch, `0010` atom detection, `0011` atom sorting,
//! `0100` atom moving; payload bits `[23:0]` must be zero. These run the
//! neutral-atom preparation pipeline and are only legal when the program
//! targets a neutral-atom machine.

pub mod program;

use std::fmt;

use thiserror::Error;

/// Class selectors, bits `[31:28]` of the word.
mod class {
    pub const CTRL: u32 = 0b0000;
    pub const RESULT: u32 = 0b0010;
    pub const ENV: u32 = 0b0100;
    pub const MEM: u32 = 0b0101;
    pub const ATOM: u32 = 0b0110;
    pub const QUANTUM: u32 = 0b1000;
}

/// Sub-op of the classical-result class that reads the measurement latch.
const RESULT_SUBOP_FETCH: u32 = 0b1010;

/// Operand-field flag marking a pair-addressed (two-qubit) quantum op.
pub const OPERAND_PAIR_FLAG: u16 = 1 << 15;

/// Base bit of the measured-qubit echo in a measurement operand.
const OPERAND_MEASURE_ECHO_BASE: u16 = 11;

/// Width of the angle-pool index carried in a rotation operand.
pub const ANGLE_INDEX_BITS: u32 = 12;

/// An encoded instruction word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Word32(pub u32);

impl Word32 {
    /// The class selector, bits `[31:28]`.
    pub fn class(self) -> u32 {
        self.0 >> 28
    }
}

impl fmt::Display for Word32 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:032b}", self.0)
    }
}

/// Errors raised by instruction encoding and decoding.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IsaError {
    /// A field value does not fit the bit width reserved for it.
    #[error("field `{field}` value {value} exceeds its {width}-bit width")]
    FieldOverflow {
        field: &'static str,
        value: u64,
        width: u32,
    },
    /// The word does not decode to any defined instruction.
    #[error("illegal opcode {word}")]
    IllegalOpcode { word: Word32 },
}

/// Gate selectors for the quantum-operation class, field `[27:22]`.
///
/// The Hadamard, CNOT and measurement codes are fixed by the binary
/// verification vectors; the remaining assignments are part of this ISA
/// revision.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum GateCode {
    X = 0b000001,
    Y = 0b000010,
    Z = 0b000011,
    S = 0b000100,
    T = 0b000101,
    Sx = 0b000110,
    Mz = 0b000111,
    Reset = 0b001000,
    Rx = 0b001001,
    Ry = 0b001010,
    Rz = 0b001011,
    H = 0b001111,
    Cnot = 0b010000,
    Cz = 0b010001,
    Swap = 0b010010,
}

impl GateCode {
    pub const ALL: [GateCode; 15] = [
        GateCode::X,
        GateCode::Y,
        GateCode::Z,
        GateCode::S,
        GateCode::T,
        GateCode::Sx,
        GateCode::Mz,
        GateCode::Reset,
        GateCode::Rx,
        GateCode::Ry,
        GateCode::Rz,
        GateCode::H,
        GateCode::Cnot,
        GateCode::Cz,
        GateCode::Swap,
    ];

    pub fn from_bits(bits: u32) -> Option<GateCode> {
        Self::ALL.iter().copied().find(|g| *g as u32 == bits)
    }

    /// Canonical lowercase mnemonic, as used in QIR intrinsic names and the
    /// pulse library.
    pub fn mnemonic(self) -> &'static str {
        match self {
            GateCode::X => "x",
            GateCode::Y => "y",
            GateCode::Z => "z",
            GateCode::S => "s",
            GateCode::T => "t",
            GateCode::Sx => "sx",
            GateCode::Mz => "mz",
            GateCode::Reset => "reset",
            GateCode::Rx => "rx",
            GateCode::Ry => "ry",
            GateCode::Rz => "rz",
            GateCode::H => "h",
            GateCode::Cnot => "cnot",
            GateCode::Cz => "cz",
            GateCode::Swap => "swap",
        }
    }

    /// Resolve a gate name. `cx` is accepted as an alias for `cnot`.
    pub fn from_mnemonic(name: &str) -> Option<GateCode> {
        if name == "cx" {
            return Some(GateCode::Cnot);
        }
        Self::ALL.iter().copied().find(|g| g.mnemonic() == name)
    }

    /// Rotation gates carry an angle-pool index in their operand field.
    pub fn is_rotation(self) -> bool {
        matches!(self, GateCode::Rx | GateCode::Ry | GateCode::Rz)
    }

    /// Two-qubit gates read the pair register instead of the address mask.
    pub fn is_two_qubit(self) -> bool {
        matches!(self, GateCode::Cnot | GateCode::Cz | GateCode::Swap)
    }
}

/// Addressing mode of a memory instruction, field `[27:24]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MemMode {
    OneHot = 0b0000,
    Indexed = 0b0001,
    IndexedResult = 0b0010,
    MaskSegment = 0b0011,
    Pair = 0b1001,
}

impl MemMode {
    pub fn from_bits(bits: u32) -> Option<MemMode> {
        match bits {
            0b0000 => Some(MemMode::OneHot),
            0b0001 => Some(MemMode::Indexed),
            0b0010 => Some(MemMode::IndexedResult),
            0b0011 => Some(MemMode::MaskSegment),
            0b1001 => Some(MemMode::Pair),
            _ => None,
        }
    }
}

/// Stages of the neutral-atom preparation pipeline, in execution order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum AtomStage {
    ImageFetch = 0b0001,
    AtomDetect = 0b0010,
    AtomSort = 0b0011,
    AtomMove = 0b0100,
}

impl AtomStage {
    pub const ALL: [AtomStage; 4] = [
        AtomStage::ImageFetch,
        AtomStage::AtomDetect,
        AtomStage::AtomSort,
        AtomStage::AtomMove,
    ];

    pub fn from_bits(bits: u32) -> Option<AtomStage> {
        Self::ALL.iter().copied().find(|s| *s as u32 == bits)
    }
}

/// A decoded instruction.
///
/// Every well-formed instruction encodes to exactly one word and decodes
/// back to itself. Memory instructions keep their raw field values; the
/// interpretation of those fields is fixed by [`MemMode`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instruction {
    /// Initialize the execution environment for `size` registers.
    EnvInit { size: u32 },
    /// Load qubit / result addressing state for the next operation.
    MemLoad {
        mode: MemMode,
        result_sel: u8,
        qubit_mask: u16,
    },
    /// A gate, rotation or measurement on the currently addressed targets.
    QuantumOp {
        gate: GateCode,
        operand: u16,
        timing: u8,
    },
    /// Copy the last measurement latch into result register `result`.
    FetchResult { result: u16 },
    /// Run one stage of the neutral-atom preparation pipeline.
    AtomPrep { stage: AtomStage },
    /// Stop execution.
    Halt,
}

impl Instruction {
    /// Memory instruction addressing a single qubit, optionally arming a
    /// result selector for a following measurement.
    ///
    /// Picks the one-hot mode when the indices fit its fields and the
    /// indexed modes otherwise, so small programs keep the compact golden
    /// encodings while large registers stay addressable.
    pub fn mem_load_single(qubit: u16, result: Option<u16>) -> Instruction {
        match result {
            None if qubit <= 15 => Instruction::MemLoad {
                mode: MemMode::OneHot,
                result_sel: 0,
                qubit_mask: 1 << qubit,
            },
            None => Instruction::MemLoad {
                mode: MemMode::Indexed,
                result_sel: 0,
                qubit_mask: qubit,
            },
            Some(result) if qubit <= 15 && result <= 3 => Instruction::MemLoad {
                mode: MemMode::OneHot,
                result_sel: 1 << (4 + result),
                qubit_mask: 1 << qubit,
            },
            Some(result) => Instruction::MemLoad {
                mode: MemMode::IndexedResult,
                result_sel: (result & 0xff) as u8,
                qubit_mask: qubit,
            },
        }
    }

    /// Memory instruction loading the control/target pair register.
    pub fn mem_load_pair(control: u8, target: u8) -> Instruction {
        Instruction::MemLoad {
            mode: MemMode::Pair,
            result_sel: 0,
            qubit_mask: ((control as u16) << 8) | target as u16,
        }
    }

    /// Plain single-qubit gate on the addressed qubit.
    pub fn quantum_single(gate: GateCode, timing: u8) -> Instruction {
        Instruction::QuantumOp {
            gate,
            operand: 0,
            timing,
        }
    }

    /// Rotation gate; `angle_index` points into the program's angle pool.
    pub fn quantum_rotation(gate: GateCode, angle_index: u16, timing: u8) -> Instruction {
        debug_assert!(gate.is_rotation());
        debug_assert!(angle_index < (1 << ANGLE_INDEX_BITS));
        Instruction::QuantumOp {
            gate,
            operand: angle_index,
            timing,
        }
    }

    /// Two-qubit gate on the loaded pair register.
    pub fn quantum_pair(gate: GateCode, timing: u8) -> Instruction {
        debug_assert!(gate.is_two_qubit());
        Instruction::QuantumOp {
            gate,
            operand: OPERAND_PAIR_FLAG,
            timing,
        }
    }

    /// Measurement of the addressed qubit. Qubits 0..=3 are echoed one-hot
    /// in the operand field as the verification vectors require; higher
    /// indices leave the operand clear.
    pub fn quantum_measure(qubit: u16, timing: u8) -> Instruction {
        let operand = if qubit <= 3 {
            1 << (OPERAND_MEASURE_ECHO_BASE + qubit)
        } else {
            0
        };
        Instruction::QuantumOp {
            gate: GateCode::Mz,
            operand,
            timing,
        }
    }

    /// The qubit echoed in a measurement operand, if one is present.
    pub fn measure_echo_qubit(operand: u16) -> Option<u16> {
        let echo = operand & !OPERAND_PAIR_FLAG;
        if echo == 0 || echo.count_ones() != 1 {
            return None;
        }
        let bit = echo.trailing_zeros() as u16;
        (OPERAND_MEASURE_ECHO_BASE..OPERAND_MEASURE_ECHO_BASE + 4)
            .contains(&bit)
            .then(|| bit - OPERAND_MEASURE_ECHO_BASE)
    }
}

/// Encode one instruction into its 32-bit word.
pub fn encode(instr: &Instruction) -> Result<Word32, IsaError> {
    let word = match *instr {
        Instruction::EnvInit { size } => {
            if size >= 1 << 28 {
                return Err(IsaError::FieldOverflow {
                    field: "size",
                    value: size as u64,
                    width: 28,
                });
            }
            (class::ENV << 28) | size
        }
        Instruction::MemLoad {
            mode,
            result_sel,
            qubit_mask,
        } => {
            (class::MEM << 28) | ((mode as u32) << 24) | ((result_sel as u32) << 16) | qubit_mask as u32
        }
        Instruction::QuantumOp {
            gate,
            operand,
            timing,
        } => {
            if timing >= 1 << 6 {
                return Err(IsaError::FieldOverflow {
                    field: "timing",
                    value: timing as u64,
                    width: 6,
                });
            }
            (class::QUANTUM << 28) | ((gate as u32) << 22) | ((operand as u32) << 6) | timing as u32
        }
        Instruction::FetchResult { result } => {
            if result >= 16 << 8 {
                return Err(IsaError::FieldOverflow {
                    field: "result",
                    value: result as u64,
                    width: 12,
                });
            }
            let segment = (result / 16) as u32;
            let onehot = 1u32 << (result % 16);
            (class::RESULT << 28) | (RESULT_SUBOP_FETCH << 24) | (segment << 16) | onehot
        }
        Instruction::AtomPrep { stage } => (class::ATOM << 28) | ((stage as u32) << 24),
        Instruction::Halt => 0,
    };
    Ok(Word32(word))
}

/// Decode a 32-bit word. Total over all inputs: undefined patterns yield
/// [`IsaError::IllegalOpcode`], never a panic.
pub fn decode(word: Word32) -> Result<Instruction, IsaError> {
    let w = word.0;
    let illegal = Err(IsaError::IllegalOpcode { word });
    match word.class() {
        class::CTRL => {
            if w == 0 {
                Ok(Instruction::Halt)
            } else {
                illegal
            }
        }
        class::ENV => Ok(Instruction::EnvInit {
            size: w & 0x0fff_ffff,
        }),
        class::MEM => match MemMode::from_bits((w >> 24) & 0xf) {
            Some(mode) => Ok(Instruction::MemLoad {
                mode,
                result_sel: ((w >> 16) & 0xff) as u8,
                qubit_mask: (w & 0xffff) as u16,
            }),
            None => illegal,
        },
        class::RESULT => {
            let subop = (w >> 24) & 0xf;
            let onehot = w & 0xffff;
            if subop != RESULT_SUBOP_FETCH || onehot.count_ones() != 1 {
                return illegal;
            }
            let segment = ((w >> 16) & 0xff) as u16;
            Ok(Instruction::FetchResult {
                result: segment * 16 + onehot.trailing_zeros() as u16,
            })
        }
        class::ATOM => {
            if w & 0x00ff_ffff != 0 {
                return illegal;
            }
            match AtomStage::from_bits((w >> 24) & 0xf) {
                Some(stage) => Ok(Instruction::AtomPrep { stage }),
                None => illegal,
            }
        }
        class::QUANTUM => match GateCode::from_bits((w >> 22) & 0x3f) {
            Some(gate) => Ok(Instruction::QuantumOp {
                gate,
                operand: ((w >> 6) & 0xffff) as u16,
                timing: (w & 0x3f) as u8,
            }),
            None => illegal,
        },
        _ => illegal,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn enc(i: Instruction) -> u32 {
        encode(&i).unwrap().0
    }

    // The ten gate/measure words plus environment initialization from the
    // binary verification table, bit for bit.
    #[test]
    fn golden_vectors_encode() {
        assert_eq!(
            enc(Instruction::EnvInit { size: 2 }),
            0b0100_0000_0000_0000_0000_0000_0000_0010
        );
        assert_eq!(
            enc(Instruction::mem_load_single(0, None)),
            0b0101_0000_0000_0000_0000_0000_0000_0001
        );
        assert_eq!(
            enc(Instruction::quantum_single(GateCode::H, 4)),
            0b1000_0011_1100_0000_0000_0000_0000_0100
        );
        assert_eq!(
            enc(Instruction::mem_load_pair(0, 1)),
            0b0101_1001_0000_0000_0000_0000_0000_0001
        );
        assert_eq!(
            enc(Instruction::quantum_pair(GateCode::Cnot, 4)),
            0b1000_0100_0010_0000_0000_0000_0000_0100
        );
        assert_eq!(
            enc(Instruction::mem_load_single(0, Some(0))),
            0b0101_0000_0001_0000_0000_0000_0000_0001
        );
        assert_eq!(
            enc(Instruction::quantum_measure(0, 4)),
            0b1000_0001_1100_0010_0000_0000_0000_0100
        );
        assert_eq!(
            enc(Instruction::FetchResult { result: 0 }),
            0b0010_1010_0000_0000_0000_0000_0000_0001
        );
        assert_eq!(
            enc(Instruction::mem_load_single(1, Some(1))),
            0b0101_0000_0010_0000_0000_0000_0000_0010
        );
        assert_eq!(
            enc(Instruction::quantum_measure(1, 4)),
            0b1000_0001_1100_0100_0000_0000_0000_0100
        );
        assert_eq!(
            enc(Instruction::FetchResult { result: 1 }),
            0b0010_1010_0000_0000_0000_0000_0000_0010
        );
    }

    #[test]
    fn golden_vectors_decode() {
        assert_eq!(
            decode(Word32(0b1000_0100_0010_0000_0000_0000_0000_0100)).unwrap(),
            Instruction::QuantumOp {
                gate: GateCode::Cnot,
                operand: OPERAND_PAIR_FLAG,
                timing: 4
            }
        );
        assert_eq!(
            decode(Word32(0b0010_1010_0000_0000_0000_0000_0000_0010)).unwrap(),
            Instruction::FetchResult { result: 1 }
        );
        assert_eq!(
            decode(Word32(0b0100_0000_0000_0000_0000_0000_0000_0010)).unwrap(),
            Instruction::EnvInit { size: 2 }
        );
        assert_eq!(decode(Word32(0)).unwrap(), Instruction::Halt);
    }

    #[test]
    fn undefined_patterns_are_illegal() {
        // undefined class
        assert!(decode(Word32(0xffff_ffff)).is_err());
        // ctrl class with a payload
        assert!(decode(Word32(0x0000_0001)).is_err());
        // undefined memory mode
        assert!(decode(Word32(0x5f00_0000)).is_err());
        // undefined gate code
        assert!(decode(Word32(0x8000_0000 | (0b111111 << 22))).is_err());
        // fetch with a non-one-hot selector
        assert!(decode(Word32(0x2a00_0003)).is_err());
        // fetch with the wrong sub-op
        assert!(decode(Word32(0x2000_0001)).is_err());
        // atom prep with payload bits
        assert!(decode(Word32(0x6100_0001)).is_err());
        // atom prep with undefined stage
        assert!(decode(Word32(0x6f00_0000)).is_err());
    }

    #[test]
    fn field_overflow_is_reported() {
        assert!(matches!(
            encode(&Instruction::EnvInit { size: 1 << 28 }),
            Err(IsaError::FieldOverflow { field: "size", .. })
        ));
        assert!(matches!(
            encode(&Instruction::QuantumOp {
                gate: GateCode::H,
                operand: 0,
                timing: 64
            }),
            Err(IsaError::FieldOverflow { field: "timing", .. })
        ));
        assert!(matches!(
            encode(&Instruction::FetchResult { result: 4096 }),
            Err(IsaError::FieldOverflow { field: "result", .. })
        ));
    }

    #[test]
    fn measure_echo_round_trips_small_qubits() {
        for q in 0..4 {
            let Instruction::QuantumOp { operand, .. } = Instruction::quantum_measure(q, 4) else {
                unreachable!()
            };
            assert_eq!(Instruction::measure_echo_qubit(operand), Some(q));
        }
        let Instruction::QuantumOp { operand, .. } = Instruction::quantum_measure(17, 4) else {
            unreachable!()
        };
        assert_eq!(operand, 0);
        assert_eq!(Instruction::measure_echo_qubit(operand), None);
    }

    pub(crate) fn arb_instruction() -> impl Strategy<Value = Instruction> {
        let mem_mode = prop_oneof![
            Just(MemMode::OneHot),
            Just(MemMode::Indexed),
            Just(MemMode::IndexedResult),
            Just(MemMode::MaskSegment),
            Just(MemMode::Pair),
        ];
        let gate = proptest::sample::select(GateCode::ALL.as_slice());
        let stage = proptest::sample::select(AtomStage::ALL.as_slice());
        prop_oneof![
            (0u32..1 << 28).prop_map(|size| Instruction::EnvInit { size }),
            (mem_mode, any::<u8>(), any::<u16>()).prop_map(|(mode, result_sel, qubit_mask)| {
                Instruction::MemLoad {
                    mode,
                    result_sel,
                    qubit_mask,
                }
            }),
            (gate, any::<u16>(), 0u8..64).prop_map(|(gate, operand, timing)| {
                Instruction::QuantumOp {
                    gate,
                    operand,
                    timing,
                }
            }),
            (0u16..4096).prop_map(|result| Instruction::FetchResult { result }),
            stage.prop_map(|stage| Instruction::AtomPrep { stage }),
            Just(Instruction::Halt),
        ]
    }

    proptest! {
        #[test]
        fn decode_inverts_encode(instr in arb_instruction()) {
            let word = encode(&instr).unwrap();
            prop_assert_eq!(decode(word).unwrap(), instr);
        }

        #[test]
        fn decode_never_panics(raw in any::<u32>()) {
            let _ = decode(Word32(raw));
        }

        #[test]
        fn decoded_words_reencode_identically(raw in any::<u32>()) {
            if let Ok(instr) = decode(Word32(raw)) {
                // Canonical encodings: whatever decodes must encode back to
                // the same word.
                prop_assert_eq!(encode(&instr).unwrap().0, raw);
            }
        }
    }
}

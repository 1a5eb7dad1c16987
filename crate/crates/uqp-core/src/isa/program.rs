//! The offload binary: header, angle constant pool and instruction words.
//!
//! The assembled byte sequence is the image of the shared memory segment
//! handed from the runtime to the control processor. Layout, little-endian:
//!
//! ```text
//!   magic      4 bytes   "UQPB"
//!   version    u16
//!   target     u8        0 = superconducting, 1 = neutral atom
//!   pad        u8
//!   num_qubits u16
//!   num_results u16
//!   shots      u32
//!   angle_count u16
//!   pad        u16
//!   angles     angle_count x f64
//!   word_count u32
//!   words      word_count x u32
//! ```

use std::fmt;

use thiserror::Error;

use super::{decode, GateCode, Instruction, IsaError, MemMode, Word32};

pub const MAGIC: [u8; 4] = *b"UQPB";
pub const FORMAT_VERSION: u16 = 1;

/// The widest quantum register the 32-bit ISA can address.
pub const MAX_QUBITS: u16 = 100;

/// Capacity of the per-program angle pool (12-bit index).
pub const ANGLE_POOL_CAPACITY: usize = 1 << super::ANGLE_INDEX_BITS;

/// Physical machine modality a program is compiled for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum Target {
    Superconducting = 0,
    NeutralAtom = 1,
}

impl Target {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<Target> {
        match code {
            0 => Some(Target::Superconducting),
            1 => Some(Target::NeutralAtom),
            _ => None,
        }
    }
}

impl fmt::Display for Target {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Target::Superconducting => "superconducting",
            Target::NeutralAtom => "neutral-atom",
        })
    }
}

/// Deduplicated pool of rotation angles referenced by 12-bit indices.
///
/// A 32-bit instruction word cannot carry a full-precision angle, so
/// rotations index into this per-program table instead. Angles deduplicate
/// by exact bit pattern.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AngleTable {
    angles: Vec<f64>,
}

impl AngleTable {
    pub fn new() -> AngleTable {
        AngleTable::default()
    }

    pub fn from_angles(angles: Vec<f64>) -> AngleTable {
        AngleTable { angles }
    }

    /// Index of `angle`, inserting it if not yet present. `None` when the
    /// pool is full.
    pub fn intern(&mut self, angle: f64) -> Option<u16> {
        let bits = angle.to_bits();
        if let Some(idx) = self.angles.iter().position(|a| a.to_bits() == bits) {
            return Some(idx as u16);
        }
        if self.angles.len() >= ANGLE_POOL_CAPACITY {
            return None;
        }
        self.angles.push(angle);
        Some((self.angles.len() - 1) as u16)
    }

    pub fn get(&self, index: u16) -> Option<f64> {
        self.angles.get(index as usize).copied()
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.angles
    }
}

/// A complete offload program: header fields, angle pool and word stream.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryProgram {
    pub version: u16,
    pub target: Target,
    pub num_qubits: u16,
    pub num_results: u16,
    pub shots: u32,
    pub angle_table: AngleTable,
    pub words: Vec<Word32>,
}

/// Errors raised by program validation, assembly and disassembly.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ProgramError {
    #[error("program addresses {num_qubits} qubits, above the {MAX_QUBITS}-qubit ISA limit")]
    QubitCountExceeded { num_qubits: u16 },
    #[error("program contains no instruction words")]
    EmptyProgram,
    #[error("first word must be an environment initialization")]
    FirstWordNotEnvInit,
    #[error("word {word_index} references angle {angle_index} outside the {table_len}-entry pool")]
    AngleIndexOutOfRange {
        word_index: usize,
        angle_index: u16,
        table_len: usize,
    },
    #[error("bad magic {found:02x?}, expected {MAGIC:02x?}")]
    BadMagic { found: [u8; 4] },
    #[error("unsupported format version {found}")]
    UnsupportedVersion { found: u16 },
    #[error("unknown target code {code}")]
    BadTarget { code: u8 },
    #[error("truncated program: needed {needed} bytes, have {have}")]
    TruncatedProgram { needed: usize, have: usize },
    #[error("{extra} trailing bytes after the word stream")]
    TrailingBytes { extra: usize },
    #[error("word {offset}: {source}")]
    IllegalWord {
        offset: usize,
        #[source]
        source: IsaError,
    },
}

impl BinaryProgram {
    /// Check the structural invariants every valid program satisfies: the
    /// qubit cap, a non-empty word stream starting with environment
    /// initialization, and in-range angle references.
    pub fn validate(&self) -> Result<(), ProgramError> {
        if self.num_qubits > MAX_QUBITS {
            return Err(ProgramError::QubitCountExceeded {
                num_qubits: self.num_qubits,
            });
        }
        match self.words.first() {
            None => return Err(ProgramError::EmptyProgram),
            Some(first) => {
                if !matches!(decode(*first), Ok(Instruction::EnvInit { .. })) {
                    return Err(ProgramError::FirstWordNotEnvInit);
                }
            }
        }
        for (word_index, word) in self.words.iter().enumerate() {
            let instr = decode(*word).map_err(|source| ProgramError::IllegalWord {
                offset: word_index,
                source,
            })?;
            if let Instruction::QuantumOp { gate, operand, .. } = instr {
                if gate.is_rotation() {
                    let angle_index = operand & 0x0fff;
                    if self.angle_table.get(angle_index).is_none() {
                        return Err(ProgramError::AngleIndexOutOfRange {
                            word_index,
                            angle_index,
                            table_len: self.angle_table.len(),
                        });
                    }
                }
            }
        }
        Ok(())
    }

    /// Serialize to the shared-segment image.
    pub fn assemble(&self) -> Result<Vec<u8>, ProgramError> {
        self.validate()?;
        let mut bytes = Vec::with_capacity(
            24 + self.angle_table.len() * 8 + self.words.len() * 4,
        );
        bytes.extend_from_slice(&MAGIC);
        bytes.extend_from_slice(&self.version.to_le_bytes());
        bytes.push(self.target.code());
        bytes.push(0);
        bytes.extend_from_slice(&self.num_qubits.to_le_bytes());
        bytes.extend_from_slice(&self.num_results.to_le_bytes());
        bytes.extend_from_slice(&self.shots.to_le_bytes());
        bytes.extend_from_slice(&(self.angle_table.len() as u16).to_le_bytes());
        bytes.extend_from_slice(&0u16.to_le_bytes());
        for angle in self.angle_table.as_slice() {
            bytes.extend_from_slice(&angle.to_le_bytes());
        }
        bytes.extend_from_slice(&(self.words.len() as u32).to_le_bytes());
        for word in &self.words {
            bytes.extend_from_slice(&word.0.to_le_bytes());
        }
        Ok(bytes)
    }

    /// Parse a shared-segment image back into a program.
    pub fn parse(bytes: &[u8]) -> Result<BinaryProgram, ProgramError> {
        let mut cursor = Cursor { bytes, pos: 0 };
        let magic = cursor.take::<4>()?;
        if magic != MAGIC {
            return Err(ProgramError::BadMagic { found: magic });
        }
        let version = u16::from_le_bytes(cursor.take::<2>()?);
        if version != FORMAT_VERSION {
            return Err(ProgramError::UnsupportedVersion { found: version });
        }
        let target_code = cursor.take::<1>()?[0];
        let target =
            Target::from_code(target_code).ok_or(ProgramError::BadTarget { code: target_code })?;
        cursor.take::<1>()?;
        let num_qubits = u16::from_le_bytes(cursor.take::<2>()?);
        let num_results = u16::from_le_bytes(cursor.take::<2>()?);
        let shots = u32::from_le_bytes(cursor.take::<4>()?);
        let angle_count = u16::from_le_bytes(cursor.take::<2>()?);
        cursor.take::<2>()?;
        let mut angles = Vec::with_capacity(angle_count as usize);
        for _ in 0..angle_count {
            angles.push(f64::from_le_bytes(cursor.take::<8>()?));
        }
        let word_count = u32::from_le_bytes(cursor.take::<4>()?);
        let mut words = Vec::with_capacity(word_count as usize);
        for _ in 0..word_count {
            words.push(Word32(u32::from_le_bytes(cursor.take::<4>()?)));
        }
        if cursor.pos != bytes.len() {
            return Err(ProgramError::TrailingBytes {
                extra: bytes.len() - cursor.pos,
            });
        }
        Ok(BinaryProgram {
            version,
            target,
            num_qubits,
            num_results,
            shots,
            angle_table: AngleTable::from_angles(angles),
            words,
        })
    }

    /// Annotated listing of the word stream, one line per word:
    /// `<32-char binary>  <mnemonic>  ; <annotation>`.
    pub fn listing(&self) -> Result<String, ProgramError> {
        let mut out = String::new();
        for (offset, word) in self.words.iter().enumerate() {
            let instr = decode(*word).map_err(|source| ProgramError::IllegalWord {
                offset,
                source,
            })?;
            out.push_str(&format!(
                "{}  {:<19}  ; {}\n",
                word,
                mnemonic(&instr),
                annotation(&instr)
            ));
        }
        Ok(out)
    }
}

/// Disassemble a shared-segment image into its program and an annotated
/// textual listing. Lossless: the returned program re-assembles to the
/// input bytes.
pub fn disassemble(bytes: &[u8]) -> Result<(BinaryProgram, String), ProgramError> {
    let program = BinaryProgram::parse(bytes)?;
    let listing = program.listing()?;
    Ok((program, listing))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], ProgramError> {
        let end = self.pos + N;
        if end > self.bytes.len() {
            return Err(ProgramError::TruncatedProgram {
                needed: end,
                have: self.bytes.len(),
            });
        }
        let mut out = [0u8; N];
        out.copy_from_slice(&self.bytes[self.pos..end]);
        self.pos = end;
        Ok(out)
    }
}

/// Assembly-style mnemonic for one instruction.
pub fn mnemonic(instr: &Instruction) -> String {
    match *instr {
        Instruction::EnvInit { size } => format!("envinit {size}"),
        Instruction::MemLoad {
            mode,
            result_sel,
            qubit_mask,
        } => match mode {
            MemMode::OneHot if result_sel == 0 => format!("memld 0x{qubit_mask:04x}"),
            MemMode::OneHot => format!("memld 0x{qubit_mask:04x}, r0x{result_sel:02x}"),
            MemMode::Indexed => format!("memld.ix q{qubit_mask}"),
            MemMode::IndexedResult => format!("memld.ix q{qubit_mask}, r{result_sel}"),
            MemMode::MaskSegment => format!("memld.seg {result_sel}, 0x{qubit_mask:04x}"),
            MemMode::Pair => {
                format!("memld.pair q{}, q{}", qubit_mask >> 8, qubit_mask & 0xff)
            }
        },
        Instruction::QuantumOp {
            gate,
            operand,
            timing,
        } => {
            if gate.is_rotation() {
                format!("qop.{} a{}, {}", gate.mnemonic(), operand & 0x0fff, timing)
            } else {
                format!("qop.{} {}", gate.mnemonic(), timing)
            }
        }
        Instruction::FetchResult { result } => format!("fetch r{result}"),
        Instruction::AtomPrep { stage } => match stage {
            super::AtomStage::ImageFetch => "atom.imgfetch".to_string(),
            super::AtomStage::AtomDetect => "atom.detect".to_string(),
            super::AtomStage::AtomSort => "atom.sort".to_string(),
            super::AtomStage::AtomMove => "atom.move".to_string(),
        },
        Instruction::Halt => "halt".to_string(),
    }
}

/// Human annotation for one instruction, in the style of the two-column
/// verification listing.
pub fn annotation(instr: &Instruction) -> String {
    match *instr {
        Instruction::EnvInit { .. } => "Execution environment initialization".to_string(),
        Instruction::MemLoad { .. } => "Memory instruction".to_string(),
        Instruction::QuantumOp { gate, operand, .. } => match gate {
            GateCode::H => "Hadamard operation".to_string(),
            GateCode::Cnot => "CNOT operation".to_string(),
            GateCode::Cz => "CZ operation".to_string(),
            GateCode::Swap => "SWAP operation".to_string(),
            GateCode::X => "Pauli-X operation".to_string(),
            GateCode::Y => "Pauli-Y operation".to_string(),
            GateCode::Z => "Pauli-Z operation".to_string(),
            GateCode::S => "Phase gate operation".to_string(),
            GateCode::T => "T gate operation".to_string(),
            GateCode::Sx => "Sqrt-X operation".to_string(),
            GateCode::Reset => "Qubit reset operation".to_string(),
            GateCode::Rx | GateCode::Ry | GateCode::Rz => {
                format!(
                    "{} rotation operation",
                    gate.mnemonic().to_uppercase()
                )
            }
            GateCode::Mz => match Instruction::measure_echo_qubit(operand) {
                Some(0) => "First qubit measurement operation".to_string(),
                Some(1) => "Second qubit measurement operation".to_string(),
                Some(2) => "Third qubit measurement operation".to_string(),
                Some(3) => "Fourth qubit measurement operation".to_string(),
                _ => "Qubit measurement operation".to_string(),
            },
        },
        Instruction::FetchResult { .. } => "Fetch last measurement".to_string(),
        Instruction::AtomPrep { stage } => match stage {
            super::AtomStage::ImageFetch => {
                "Fetch atom fluorescence image into memory".to_string()
            }
            super::AtomStage::AtomDetect => "Detect atom occupancy from image".to_string(),
            super::AtomStage::AtomSort => "Compute atom rearrangement plan".to_string(),
            super::AtomStage::AtomMove => "Send atom move control signals".to_string(),
        },
        Instruction::Halt => "Halt execution".to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::super::encode;
    use super::*;
    use proptest::prelude::*;

    fn words(instrs: &[Instruction]) -> Vec<Word32> {
        instrs.iter().map(|i| encode(i).unwrap()).collect()
    }

    fn minimal_program(num_qubits: u16) -> BinaryProgram {
        BinaryProgram {
            version: FORMAT_VERSION,
            target: Target::Superconducting,
            num_qubits,
            num_results: 0,
            shots: 1,
            angle_table: AngleTable::new(),
            words: words(&[
                Instruction::EnvInit {
                    size: num_qubits as u32,
                },
                Instruction::Halt,
            ]),
        }
    }

    #[test]
    fn assemble_layout_matches_spec() {
        // Eleven words, no angles: 12-byte identification header, 8 bytes of
        // shot/angle-pool fields, 4-byte word count, then 44 bytes of words.
        let mut program = minimal_program(2);
        program.num_results = 2;
        program.shots = 1000;
        let mut instrs = vec![Instruction::EnvInit { size: 2 }];
        for q in 0..5u16 {
            instrs.push(Instruction::mem_load_single(q % 2, None));
            instrs.push(Instruction::quantum_single(GateCode::H, 4));
        }
        program.words = words(&instrs);
        assert_eq!(program.words.len(), 11);
        let bytes = program.assemble().unwrap();
        assert_eq!(bytes.len(), 12 + 8 + 4 + 44);
        assert_eq!(&bytes[0..4], b"UQPB");
        assert_eq!(u16::from_le_bytes([bytes[8], bytes[9]]), 2);
        assert_eq!(
            u32::from_le_bytes([bytes[12], bytes[13], bytes[14], bytes[15]]),
            1000
        );
        // word section is word_count * 4 bytes at the tail
        assert_eq!(
            u32::from_le_bytes([bytes[20], bytes[21], bytes[22], bytes[23]]),
            11
        );
    }

    #[test]
    fn qubit_cap_enforced_at_assembly() {
        let program = minimal_program(101);
        assert_eq!(
            program.assemble().unwrap_err(),
            ProgramError::QubitCountExceeded { num_qubits: 101 }
        );
        assert!(minimal_program(100).assemble().is_ok());
    }

    #[test]
    fn empty_and_headless_programs_rejected() {
        let mut program = minimal_program(1);
        program.words.clear();
        assert_eq!(program.assemble().unwrap_err(), ProgramError::EmptyProgram);
        program.words = words(&[Instruction::Halt]);
        assert_eq!(
            program.assemble().unwrap_err(),
            ProgramError::FirstWordNotEnvInit
        );
    }

    #[test]
    fn bad_magic_and_truncation() {
        let program = minimal_program(2);
        let mut bytes = program.assemble().unwrap();
        // header-only prefix
        assert!(matches!(
            BinaryProgram::parse(&bytes[..12]),
            Err(ProgramError::TruncatedProgram { .. })
        ));
        bytes[0] ^= 0xff;
        assert!(matches!(
            BinaryProgram::parse(&bytes),
            Err(ProgramError::BadMagic { .. })
        ));
    }

    #[test]
    fn angle_references_validated() {
        let mut program = minimal_program(1);
        program.words = words(&[
            Instruction::EnvInit { size: 1 },
            Instruction::mem_load_single(0, None),
            Instruction::quantum_rotation(GateCode::Rz, 0, 4),
            Instruction::Halt,
        ]);
        assert!(matches!(
            program.assemble(),
            Err(ProgramError::AngleIndexOutOfRange { word_index: 2, .. })
        ));
        program.angle_table.intern(0.25).unwrap();
        assert!(program.assemble().is_ok());
    }

    #[test]
    fn listing_flags_illegal_words_with_offset() {
        let mut program = minimal_program(1);
        program.words.insert(1, Word32(0xffff_ffff));
        assert!(matches!(
            program.listing(),
            Err(ProgramError::IllegalWord { offset: 1, .. })
        ));
    }

    #[test]
    fn angle_table_deduplicates_by_bit_pattern() {
        let mut table = AngleTable::new();
        let a = table.intern(0.5).unwrap();
        let b = table.intern(0.5).unwrap();
        let c = table.intern(-0.5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_eq!(table.len(), 2);
        // 0.0 and -0.0 compare equal but are distinct bit patterns
        let z = table.intern(0.0).unwrap();
        let nz = table.intern(-0.0).unwrap();
        assert_ne!(z, nz);
    }

    fn arb_program() -> impl Strategy<Value = BinaryProgram> {
        let body = proptest::collection::vec(crate::isa::tests::arb_instruction(), 0..40);
        let angles = proptest::collection::vec(any::<f64>(), 0..8);
        (
            0u16..=MAX_QUBITS,
            any::<u16>(),
            any::<u32>(),
            angles,
            body,
        )
            .prop_map(|(num_qubits, num_results, shots, angles, body)| {
                let mut words = vec![encode(&Instruction::EnvInit {
                    size: num_qubits as u32,
                })
                .unwrap()];
                for instr in &body {
                    // keep rotation angle indices inside the generated pool
                    let instr = match *instr {
                        Instruction::QuantumOp {
                            gate,
                            operand,
                            timing,
                        } if gate.is_rotation() => {
                            if angles.is_empty() {
                                Instruction::QuantumOp {
                                    gate: GateCode::H,
                                    operand,
                                    timing,
                                }
                            } else {
                                Instruction::QuantumOp {
                                    gate,
                                    operand: (operand & !0x0fff)
                                        | (operand % angles.len() as u16),
                                    timing,
                                }
                            }
                        }
                        other => other,
                    };
                    words.push(encode(&instr).unwrap());
                }
                BinaryProgram {
                    version: FORMAT_VERSION,
                    target: Target::Superconducting,
                    num_qubits,
                    num_results,
                    shots,
                    angle_table: AngleTable::from_angles(angles),
                    words,
                }
            })
    }

    proptest! {
        #[test]
        fn disassemble_inverts_assemble(program in arb_program()) {
            let bytes = program.assemble().unwrap();
            let (recovered, listing) = disassemble(&bytes).unwrap();
            prop_assert_eq!(recovered.version, program.version);
            prop_assert_eq!(recovered.target, program.target);
            prop_assert_eq!(recovered.num_qubits, program.num_qubits);
            prop_assert_eq!(recovered.num_results, program.num_results);
            prop_assert_eq!(recovered.shots, program.shots);
            prop_assert_eq!(
                recovered.angle_table.as_slice().iter().map(|a| a.to_bits()).collect::<Vec<_>>(),
                program.angle_table.as_slice().iter().map(|a| a.to_bits()).collect::<Vec<_>>()
            );
            prop_assert_eq!(&recovered.words, &program.words);
            prop_assert_eq!(listing.lines().count(), program.words.len());
            // and the recovered program re-assembles to the same image
            prop_assert_eq!(recovered.assemble().unwrap(), bytes);
        }
    }
}

//! QIR base-profile frontend.
//!
//! Parses the textual QIR subset in which a kernel is one entry-point
//! function whose body is a linear sequence of quantum intrinsic calls,
//! validates it, and produces the [`QuantumKernel`] consumed by the
//! lowering stage.

mod parser;
mod printer;

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::isa::GateCode;

pub use parser::parse_qir;
pub use printer::print_qir;

/// A parsed (not yet validated) QIR module.
#[derive(Debug, Clone, PartialEq)]
pub struct QirModule {
    pub entry_name: String,
    pub ops: Vec<KernelOp>,
    pub metadata: KernelMetadata,
    pub declared_intrinsics: BTreeSet<String>,
}

/// Register sizes and raw attributes attached to the entry point.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KernelMetadata {
    pub num_qubits: u32,
    pub num_results: u32,
    pub source_attributes: BTreeMap<String, String>,
}

/// One operation in the kernel body, in source order. Gate names are kept
/// verbatim here; validation resolves them against the supported set.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelOp {
    Gate1Q {
        gate_name: String,
        qubit: u32,
    },
    Gate1QAngle {
        gate_name: String,
        qubit: u32,
        angle: f64,
    },
    Gate2Q {
        gate_name: String,
        control: u32,
        target: u32,
    },
    Measure {
        qubit: u32,
        result: u32,
    },
    ResultRecord {
        result: u32,
    },
}

/// A validated kernel ready for lowering: indices bounds-checked, gate
/// names resolved, measure/record ordering verified.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumKernel {
    pub num_qubits: u32,
    pub num_results: u32,
    pub ops: Vec<ResolvedOp>,
}

/// Kernel operation with its gate selector resolved.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ResolvedOp {
    Gate1 { gate: GateCode, qubit: u32 },
    Rotation { gate: GateCode, qubit: u32, angle: f64 },
    Gate2 { gate: GateCode, control: u32, target: u32 },
    Measure { qubit: u32, result: u32 },
    Record { result: u32 },
}

impl QuantumKernel {
    /// Number of words-producing operations (gates and measurements).
    pub fn gate_count(&self) -> usize {
        self.ops
            .iter()
            .filter(|op| !matches!(op, ResolvedOp::Record { .. }))
            .count()
    }
}

/// Parse-time errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QirParseError {
    #[error("{line}:{column}: {message}")]
    SyntaxError {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{line}: unsupported construct: {construct}")]
    UnsupportedConstruct { line: usize, construct: String },
    #[error("entry point lacks required attribute `{name}`")]
    MissingAttribute { name: &'static str },
    #[error("no entry-point function found")]
    NoEntryPoint,
    #[error("multiple entry-point functions found")]
    MultipleEntryPoints,
}

/// Validation errors.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QirValidateError {
    #[error("op {op_index}: {kind} index {index} out of range (register size {limit})")]
    IndexOutOfRange {
        op_index: usize,
        kind: &'static str,
        index: u32,
        limit: u32,
    },
    #[error("op {op_index}: unknown gate `{name}`")]
    UnknownGate { op_index: usize, name: String },
    #[error("op {op_index}: gate `{name}` called with the wrong operand shape")]
    WrongArity { op_index: usize, name: String },
    #[error("op {op_index}: control and target are both qubit {qubit}")]
    ControlTargetEqual { op_index: usize, qubit: u32 },
    #[error("op {op_index}: result {result} recorded before any measurement wrote it")]
    RecordBeforeMeasure { op_index: usize, result: u32 },
}

/// Validate a parsed module into a kernel the lowering stage accepts.
pub fn validate(module: &QirModule) -> Result<QuantumKernel, QirValidateError> {
    let num_qubits = module.metadata.num_qubits;
    let num_results = module.metadata.num_results;
    let mut measured = vec![false; num_results as usize];
    let mut ops = Vec::with_capacity(module.ops.len());

    let check_qubit = |op_index: usize, index: u32| {
        if index >= num_qubits {
            Err(QirValidateError::IndexOutOfRange {
                op_index,
                kind: "qubit",
                index,
                limit: num_qubits,
            })
        } else {
            Ok(())
        }
    };
    let check_result = |op_index: usize, index: u32| {
        if index >= num_results {
            Err(QirValidateError::IndexOutOfRange {
                op_index,
                kind: "result",
                index,
                limit: num_results,
            })
        } else {
            Ok(())
        }
    };
    let resolve = |op_index: usize, name: &str| {
        GateCode::from_mnemonic(name).ok_or_else(|| QirValidateError::UnknownGate {
            op_index,
            name: name.to_string(),
        })
    };

    for (op_index, op) in module.ops.iter().enumerate() {
        match op {
            KernelOp::Gate1Q { gate_name, qubit } => {
                let gate = resolve(op_index, gate_name)?;
                if gate.is_two_qubit() || gate.is_rotation() || gate == GateCode::Mz {
                    return Err(QirValidateError::WrongArity {
                        op_index,
                        name: gate_name.clone(),
                    });
                }
                check_qubit(op_index, *qubit)?;
                ops.push(ResolvedOp::Gate1 { gate, qubit: *qubit });
            }
            KernelOp::Gate1QAngle {
                gate_name,
                qubit,
                angle,
            } => {
                let gate = resolve(op_index, gate_name)?;
                if !gate.is_rotation() {
                    return Err(QirValidateError::WrongArity {
                        op_index,
                        name: gate_name.clone(),
                    });
                }
                check_qubit(op_index, *qubit)?;
                ops.push(ResolvedOp::Rotation {
                    gate,
                    qubit: *qubit,
                    angle: *angle,
                });
            }
            KernelOp::Gate2Q {
                gate_name,
                control,
                target,
            } => {
                let gate = resolve(op_index, gate_name)?;
                if !gate.is_two_qubit() {
                    return Err(QirValidateError::WrongArity {
                        op_index,
                        name: gate_name.clone(),
                    });
                }
                check_qubit(op_index, *control)?;
                check_qubit(op_index, *target)?;
                if control == target {
                    return Err(QirValidateError::ControlTargetEqual {
                        op_index,
                        qubit: *control,
                    });
                }
                ops.push(ResolvedOp::Gate2 {
                    gate,
                    control: *control,
                    target: *target,
                });
            }
            KernelOp::Measure { qubit, result } => {
                check_qubit(op_index, *qubit)?;
                check_result(op_index, *result)?;
                measured[*result as usize] = true;
                ops.push(ResolvedOp::Measure {
                    qubit: *qubit,
                    result: *result,
                });
            }
            KernelOp::ResultRecord { result } => {
                check_result(op_index, *result)?;
                if !measured[*result as usize] {
                    return Err(QirValidateError::RecordBeforeMeasure {
                        op_index,
                        result: *result,
                    });
                }
                ops.push(ResolvedOp::Record { result: *result });
            }
        }
    }

    Ok(QuantumKernel {
        num_qubits,
        num_results,
        ops,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bell_module() -> QirModule {
        QirModule {
            entry_name: "main".to_string(),
            ops: vec![
                KernelOp::Gate1Q {
                    gate_name: "h".to_string(),
                    qubit: 0,
                },
                KernelOp::Gate2Q {
                    gate_name: "cnot".to_string(),
                    control: 0,
                    target: 1,
                },
                KernelOp::Measure { qubit: 0, result: 0 },
                KernelOp::Measure { qubit: 1, result: 1 },
                KernelOp::ResultRecord { result: 0 },
                KernelOp::ResultRecord { result: 1 },
            ],
            metadata: KernelMetadata {
                num_qubits: 2,
                num_results: 2,
                source_attributes: Default::default(),
            },
            declared_intrinsics: Default::default(),
        }
    }

    #[test]
    fn bell_module_validates_to_six_ops() {
        let kernel = validate(&bell_module()).unwrap();
        assert_eq!(kernel.ops.len(), 6);
        assert_eq!(kernel.num_qubits, 2);
        assert_eq!(kernel.gate_count(), 4);
        assert_eq!(
            kernel.ops[1],
            ResolvedOp::Gate2 {
                gate: GateCode::Cnot,
                control: 0,
                target: 1
            }
        );
    }

    #[test]
    fn qubit_index_out_of_range() {
        let mut module = bell_module();
        module.ops[0] = KernelOp::Gate1Q {
            gate_name: "h".to_string(),
            qubit: 5,
        };
        assert_eq!(
            validate(&module).unwrap_err(),
            QirValidateError::IndexOutOfRange {
                op_index: 0,
                kind: "qubit",
                index: 5,
                limit: 2
            }
        );
    }

    #[test]
    fn record_before_measure_rejected() {
        let mut module = bell_module();
        module.ops.insert(0, KernelOp::ResultRecord { result: 0 });
        assert_eq!(
            validate(&module).unwrap_err(),
            QirValidateError::RecordBeforeMeasure {
                op_index: 0,
                result: 0
            }
        );
    }

    #[test]
    fn unknown_gate_rejected() {
        let mut module = bell_module();
        module.ops[0] = KernelOp::Gate1Q {
            gate_name: "toffoli".to_string(),
            qubit: 0,
        };
        assert!(matches!(
            validate(&module).unwrap_err(),
            QirValidateError::UnknownGate { .. }
        ));
    }

    #[test]
    fn arity_mismatches_rejected() {
        let mut module = bell_module();
        // cnot with one operand
        module.ops[0] = KernelOp::Gate1Q {
            gate_name: "cnot".to_string(),
            qubit: 0,
        };
        assert!(matches!(
            validate(&module).unwrap_err(),
            QirValidateError::WrongArity { .. }
        ));
        // rotation without an angle
        module.ops[0] = KernelOp::Gate1Q {
            gate_name: "rz".to_string(),
            qubit: 0,
        };
        assert!(matches!(
            validate(&module).unwrap_err(),
            QirValidateError::WrongArity { .. }
        ));
        // h with two operands
        module.ops[0] = KernelOp::Gate2Q {
            gate_name: "h".to_string(),
            control: 0,
            target: 1,
        };
        assert!(matches!(
            validate(&module).unwrap_err(),
            QirValidateError::WrongArity { .. }
        ));
    }

    #[test]
    fn control_equal_target_rejected() {
        let mut module = bell_module();
        module.ops[1] = KernelOp::Gate2Q {
            gate_name: "cx".to_string(),
            control: 1,
            target: 1,
        };
        assert!(matches!(
            validate(&module).unwrap_err(),
            QirValidateError::ControlTargetEqual { qubit: 1, .. }
        ));
    }

    #[test]
    fn cx_alias_resolves_to_cnot() {
        let mut module = bell_module();
        module.ops[1] = KernelOp::Gate2Q {
            gate_name: "cx".to_string(),
            control: 0,
            target: 1,
        };
        let kernel = validate(&module).unwrap();
        assert!(matches!(
            kernel.ops[1],
            ResolvedOp::Gate2 {
                gate: GateCode::Cnot,
                ..
            }
        ));
    }
}

//! Canonical textual form of a parsed module.
//!
//! Pretty-printing a module and re-parsing it yields the same op sequence
//! and metadata; angles are printed in the raw-bits hex form so they
//! survive the round trip exactly.

use std::fmt::Write;

use super::{KernelOp, QirModule};

fn qubit_operand(index: u32) -> String {
    if index == 0 {
        "%Qubit* null".to_string()
    } else {
        format!("%Qubit* inttoptr (i64 {index} to %Qubit*)")
    }
}

fn result_operand(index: u32) -> String {
    if index == 0 {
        "%Result* null".to_string()
    } else {
        format!("%Result* inttoptr (i64 {index} to %Result*)")
    }
}

fn known_signature(name: &str) -> Option<&'static str> {
    if name == super::parser::RT_RESULT_RECORD_NAME {
        return Some("(%Result*, i8*)");
    }
    let gate = name
        .strip_prefix("__quantum__qis__")?
        .strip_suffix("__body")?;
    Some(match gate {
        "mz" => "(%Qubit*, %Result*)",
        "rx" | "ry" | "rz" => "(double, %Qubit*)",
        "cnot" | "cx" | "cz" | "swap" => "(%Qubit*, %Qubit*)",
        _ => "(%Qubit*)",
    })
}

/// Render a module as QIR base-profile text.
pub fn print_qir(module: &QirModule) -> String {
    let mut out = String::new();
    out.push_str("%Qubit = type opaque\n%Result = type opaque\n\n");
    let _ = writeln!(out, "define void @{}() #0 {{", module.entry_name);
    out.push_str("entry:\n");
    for op in &module.ops {
        let call = match op {
            KernelOp::Gate1Q { gate_name, qubit } => format!(
                "call void @__quantum__qis__{}__body({})",
                gate_name,
                qubit_operand(*qubit)
            ),
            KernelOp::Gate1QAngle {
                gate_name,
                qubit,
                angle,
            } => format!(
                "call void @__quantum__qis__{}__body(double 0x{:016X}, {})",
                gate_name,
                angle.to_bits(),
                qubit_operand(*qubit)
            ),
            KernelOp::Gate2Q {
                gate_name,
                control,
                target,
            } => format!(
                "call void @__quantum__qis__{}__body({}, {})",
                gate_name,
                qubit_operand(*control),
                qubit_operand(*target)
            ),
            KernelOp::Measure { qubit, result } => format!(
                "call void @__quantum__qis__mz__body({}, {})",
                qubit_operand(*qubit),
                result_operand(*result)
            ),
            KernelOp::ResultRecord { result } => format!(
                "call void @__quantum__rt__result_record_output({}, i8* null)",
                result_operand(*result)
            ),
        };
        let _ = writeln!(out, "  {call}");
    }
    out.push_str("  ret void\n}\n\n");

    for name in &module.declared_intrinsics {
        let signature = known_signature(name).unwrap_or("()");
        let _ = writeln!(out, "declare void @{name}{signature}");
    }

    out.push_str("\nattributes #0 = {");
    for (key, value) in &module.metadata.source_attributes {
        if value.is_empty() {
            let _ = write!(out, " \"{key}\"");
        } else {
            let _ = write!(out, " \"{key}\"=\"{value}\"");
        }
    }
    // register sizes are authoritative from the metadata fields
    if !module
        .metadata
        .source_attributes
        .contains_key("required_num_qubits")
    {
        let _ = write!(
            out,
            " \"required_num_qubits\"=\"{}\"",
            module.metadata.num_qubits
        );
    }
    if !module
        .metadata
        .source_attributes
        .contains_key("required_num_results")
    {
        let _ = write!(
            out,
            " \"required_num_results\"=\"{}\"",
            module.metadata.num_results
        );
    }
    if !module.metadata.source_attributes.contains_key("entry_point") {
        out.push_str(" \"entry_point\"");
    }
    out.push_str(" }\n");
    out
}

//! Hand-written parser for the QIR base-profile textual subset.
//!
//! The base profile needs no general IR parser: a module is global
//! declarations, attribute groups and one entry function whose body is a
//! linear call sequence ending in `ret void`. Anything outside that subset
//! (branches, phi nodes, value-returning calls, dynamic qubit allocation)
//! is rejected as an unsupported construct.

use std::collections::{BTreeMap, BTreeSet};

use super::{KernelMetadata, KernelOp, QirModule, QirParseError};

const QIS_PREFIX: &str = "__quantum__qis__";
const QIS_BODY_SUFFIX: &str = "__body";
pub(crate) const RT_RESULT_RECORD_NAME: &str = "__quantum__rt__result_record_output";
const RT_PREFIX: &str = "__quantum__rt__";

/// Attribute names that carry the register sizes. The first spelling per
/// pair is canonical; the second is the legacy alias some frontends emit.
const QUBIT_ATTRS: [&str; 2] = ["required_num_qubits", "num_required_qubits"];
const RESULT_ATTRS: [&str; 2] = ["required_num_results", "num_required_results"];

struct FunctionDef {
    name: String,
    attr_groups: Vec<u32>,
    ops: Vec<KernelOp>,
}

/// Parse QIR base-profile text into a [`QirModule`].
pub fn parse_qir(source: &str) -> Result<QirModule, QirParseError> {
    let mut declared = BTreeSet::new();
    let mut functions: Vec<FunctionDef> = Vec::new();
    let mut attr_groups: BTreeMap<u32, BTreeMap<String, String>> = BTreeMap::new();
    let mut current: Option<FunctionDef> = None;

    // Declarations may follow the function that calls them; collect them
    // up front so call resolution is order-independent.
    for raw_line in source.lines() {
        let line = strip_comment(raw_line).trim();
        if line.starts_with("declare ") {
            if let Ok(name) = callee_name(line, 0) {
                declared.insert(name);
            }
        }
    }

    for (idx, raw_line) in source.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw_line).trim();
        if line.is_empty() {
            continue;
        }

        if let Some(func) = current.as_mut() {
            if line == "}" {
                functions.push(current.take().unwrap());
                continue;
            }
            if line.ends_with(':') && is_identifier(&line[..line.len() - 1]) {
                continue; // basic-block label
            }
            if line == "ret void" {
                continue;
            }
            let call = line.strip_prefix("tail call ").or_else(|| line.strip_prefix("call "));
            if let Some(call) = call {
                if let Some(op) = parse_call(call, line_no, &declared)? {
                    func.ops.push(op);
                }
                continue;
            }
            return Err(unsupported(line_no, line));
        }

        if line.starts_with("declare ") {
            declared.insert(callee_name(line, line_no)?);
            continue;
        }
        if line.starts_with("define ") {
            let name = callee_name(line, line_no)?;
            if !line.ends_with('{') {
                return Err(QirParseError::SyntaxError {
                    line: line_no,
                    column: line.len(),
                    message: "expected `{` opening the function body".to_string(),
                });
            }
            let attr_refs = line[..line.len() - 1]
                .split_whitespace()
                .filter_map(|tok| tok.strip_prefix('#'))
                .filter_map(|tok| tok.parse::<u32>().ok())
                .collect();
            current = Some(FunctionDef {
                name,
                attr_groups: attr_refs,
                ops: Vec::new(),
            });
            continue;
        }
        if let Some(rest) = line.strip_prefix("attributes #") {
            let (group_id, body) = rest.split_once('=').ok_or_else(|| QirParseError::SyntaxError {
                line: line_no,
                column: 1,
                message: "malformed attributes line".to_string(),
            })?;
            let group_id: u32 = group_id.trim().parse().map_err(|_| QirParseError::SyntaxError {
                line: line_no,
                column: 1,
                message: "malformed attribute group id".to_string(),
            })?;
            attr_groups.insert(group_id, parse_attr_group(body.trim(), line_no)?);
            continue;
        }
        // Tolerated module furniture: type declarations, label constants,
        // source/target lines and module-level metadata.
        if is_module_furniture(line) {
            continue;
        }
        return Err(unsupported(line_no, line));
    }

    if current.is_some() {
        return Err(QirParseError::SyntaxError {
            line: source.lines().count(),
            column: 1,
            message: "unterminated function body".to_string(),
        });
    }

    let mut entries = functions.iter().filter(|f| {
        f.attr_groups.iter().any(|id| {
            attr_groups
                .get(id)
                .is_some_and(|g| g.contains_key("entry_point") || g.contains_key("EntryPoint"))
        })
    });
    let entry = entries.next().ok_or(QirParseError::NoEntryPoint)?;
    if entries.next().is_some() {
        return Err(QirParseError::MultipleEntryPoints);
    }

    let mut source_attributes = BTreeMap::new();
    for id in &entry.attr_groups {
        if let Some(group) = attr_groups.get(id) {
            source_attributes.extend(group.clone());
        }
    }
    let num_qubits = register_size(&source_attributes, &QUBIT_ATTRS)
        .ok_or(QirParseError::MissingAttribute {
            name: "required_num_qubits",
        })?;
    let num_results = register_size(&source_attributes, &RESULT_ATTRS)
        .ok_or(QirParseError::MissingAttribute {
            name: "required_num_results",
        })?;

    Ok(QirModule {
        entry_name: entry.name.clone(),
        ops: entry.ops.clone(),
        metadata: KernelMetadata {
            num_qubits,
            num_results,
            source_attributes,
        },
        declared_intrinsics: declared,
    })
}

fn register_size(attrs: &BTreeMap<String, String>, names: &[&str]) -> Option<u32> {
    names
        .iter()
        .find_map(|name| attrs.get(*name))
        .and_then(|value| value.parse().ok())
}

fn unsupported(line: usize, construct: &str) -> QirParseError {
    let head: String = construct.split_whitespace().take(3).collect::<Vec<_>>().join(" ");
    QirParseError::UnsupportedConstruct {
        line,
        construct: head,
    }
}

fn is_identifier(s: &str) -> bool {
    !s.is_empty()
        && s.chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
}

fn is_module_furniture(line: &str) -> bool {
    if line.starts_with("source_filename")
        || line.starts_with("target ")
        || line.starts_with('!')
    {
        return true;
    }
    if let Some((lhs, rhs)) = line.split_once('=') {
        let lhs = lhs.trim();
        let rhs = rhs.trim();
        if lhs.starts_with('%') && rhs.starts_with("type") {
            return true; // %Qubit = type opaque
        }
        if lhs.starts_with('@') && (rhs.contains("constant") || rhs.contains("global")) {
            return true; // output-label constants
        }
    }
    false
}

/// Strip a `;` comment, honoring quoted strings.
fn strip_comment(line: &str) -> &str {
    let mut in_string = false;
    for (pos, ch) in line.char_indices() {
        match ch {
            '"' => in_string = !in_string,
            ';' if !in_string => return &line[..pos],
            _ => {}
        }
    }
    line
}

/// Extract the `@name` being declared, defined or called on this line.
fn callee_name(line: &str, line_no: usize) -> Result<String, QirParseError> {
    let at = line.find('@').ok_or_else(|| QirParseError::SyntaxError {
        line: line_no,
        column: 1,
        message: "expected a function symbol".to_string(),
    })?;
    let rest = &line[at + 1..];
    let end = rest
        .find(|c: char| !(c.is_ascii_alphanumeric() || c == '_' || c == '.'))
        .unwrap_or(rest.len());
    if end == 0 {
        return Err(QirParseError::SyntaxError {
            line: line_no,
            column: at + 1,
            message: "empty function symbol".to_string(),
        });
    }
    Ok(rest[..end].to_string())
}

/// One parsed call argument.
enum CallArg {
    Qubit(u32),
    Result(u32),
    Angle(f64),
    Opaque, // i8* label pointers and the like
}

fn parse_call(
    call: &str,
    line_no: usize,
    declared: &BTreeSet<String>,
) -> Result<Option<KernelOp>, QirParseError> {
    let call = call.trim();
    let Some(rest) = call.strip_prefix("void ") else {
        return Err(unsupported(line_no, "value-returning call"));
    };
    let name = callee_name(rest, line_no)?;
    if !declared.contains(&name) {
        return Err(QirParseError::SyntaxError {
            line: line_no,
            column: 1,
            message: format!("call to undeclared function `{name}`"),
        });
    }
    let open = rest.find('(').ok_or_else(|| QirParseError::SyntaxError {
        line: line_no,
        column: 1,
        message: "expected `(` after callee".to_string(),
    })?;
    let close = rest.rfind(')').ok_or_else(|| QirParseError::SyntaxError {
        line: line_no,
        column: rest.len(),
        message: "expected `)` closing the call".to_string(),
    })?;
    let args: Vec<CallArg> = split_top_level(&rest[open + 1..close])
        .into_iter()
        .map(|arg| parse_arg(arg, line_no))
        .collect::<Result<_, _>>()?;

    if name == RT_RESULT_RECORD_NAME {
        return match args.as_slice() {
            [CallArg::Result(result), ..] => Ok(Some(KernelOp::ResultRecord { result: *result })),
            _ => Err(unsupported(line_no, "malformed result_record_output call")),
        };
    }
    if name.starts_with(RT_PREFIX) {
        return Err(unsupported(line_no, &format!("runtime intrinsic {name}")));
    }
    if let Some(gate_name) = name
        .strip_prefix(QIS_PREFIX)
        .and_then(|n| n.strip_suffix(QIS_BODY_SUFFIX))
    {
        let op = match args.as_slice() {
            [CallArg::Qubit(qubit)] => KernelOp::Gate1Q {
                gate_name: gate_name.to_string(),
                qubit: *qubit,
            },
            [CallArg::Angle(angle), CallArg::Qubit(qubit)] => KernelOp::Gate1QAngle {
                gate_name: gate_name.to_string(),
                qubit: *qubit,
                angle: *angle,
            },
            [CallArg::Qubit(control), CallArg::Qubit(target)] => KernelOp::Gate2Q {
                gate_name: gate_name.to_string(),
                control: *control,
                target: *target,
            },
            [CallArg::Qubit(qubit), CallArg::Result(result)] if gate_name == "mz" => {
                KernelOp::Measure {
                    qubit: *qubit,
                    result: *result,
                }
            }
            _ => return Err(unsupported(line_no, &format!("call shape of {name}"))),
        };
        return Ok(Some(op));
    }
    if name.starts_with(QIS_PREFIX) {
        // adjoint / controlled specializations are outside the base profile
        return Err(unsupported(line_no, &format!("intrinsic specialization {name}")));
    }
    Err(unsupported(line_no, &format!("unknown intrinsic {name}")))
}

/// Split an argument list on top-level commas, respecting nesting.
fn split_top_level(s: &str) -> Vec<&str> {
    let mut parts = Vec::new();
    let mut depth = 0usize;
    let mut start = 0usize;
    for (pos, ch) in s.char_indices() {
        match ch {
            '(' | '[' | '{' | '<' => depth += 1,
            ')' | ']' | '}' | '>' => depth = depth.saturating_sub(1),
            ',' if depth == 0 => {
                parts.push(s[start..pos].trim());
                start = pos + 1;
            }
            _ => {}
        }
    }
    let tail = s[start..].trim();
    if !tail.is_empty() {
        parts.push(tail);
    }
    parts.retain(|p| !p.is_empty());
    parts
}

fn parse_arg(arg: &str, line_no: usize) -> Result<CallArg, QirParseError> {
    let (ty, mut value) = arg.split_once(char::is_whitespace).ok_or_else(|| {
        QirParseError::SyntaxError {
            line: line_no,
            column: 1,
            message: format!("malformed call argument `{arg}`"),
        }
    })?;
    value = value.trim();
    // parameter attributes between type and value
    for attr in ["writeonly", "readonly", "nocapture", "nonnull"] {
        if let Some(rest) = value.strip_prefix(attr) {
            value = rest.trim_start();
        }
    }
    match ty {
        "%Qubit*" => Ok(CallArg::Qubit(parse_pointer_index(value, line_no, "Qubit")?)),
        "%Result*" => Ok(CallArg::Result(parse_pointer_index(value, line_no, "Result")?)),
        "double" => parse_double(value).map(CallArg::Angle).ok_or_else(|| {
            QirParseError::SyntaxError {
                line: line_no,
                column: 1,
                message: format!("malformed double literal `{value}`"),
            }
        }),
        "i8*" | "i8" | "i1" | "i32" | "i64" if value == "null" || value.starts_with("getelementptr") => {
            Ok(CallArg::Opaque)
        }
        _ => Err(QirParseError::UnsupportedConstruct {
            line: line_no,
            construct: format!("argument of type {ty}"),
        }),
    }
}

/// Decode a static qubit/result operand: `null` is index 0 and
/// `inttoptr (i64 N to %T*)` is index N. Anything else (dynamic allocation,
/// SSA values) is outside the base profile.
fn parse_pointer_index(value: &str, line_no: usize, ty: &str) -> Result<u32, QirParseError> {
    if value == "null" {
        return Ok(0);
    }
    if let Some(inner) = value
        .strip_prefix("inttoptr")
        .map(|r| r.trim_start())
        .and_then(|r| r.strip_prefix('('))
        .and_then(|r| r.rfind(')').map(|end| &r[..end]))
    {
        let mut toks = inner.split_whitespace();
        if toks.next() == Some("i64") {
            if let Some(lit) = toks.next() {
                if let Ok(index) = lit.parse::<i64>() {
                    if (0..=u32::MAX as i64).contains(&index) {
                        return Ok(index as u32);
                    }
                    return Err(QirParseError::SyntaxError {
                        line: line_no,
                        column: 1,
                        message: format!("{ty} index {index} out of representable range"),
                    });
                }
            }
        }
    }
    if value.starts_with('%') {
        return Err(QirParseError::UnsupportedConstruct {
            line: line_no,
            construct: format!("dynamic {ty} operand `{value}`"),
        });
    }
    Err(QirParseError::SyntaxError {
        line: line_no,
        column: 1,
        message: format!("malformed {ty} operand `{value}`"),
    })
}

/// Parse an LLVM double literal: decimal/scientific or the 16-hex-digit
/// raw-bits form.
fn parse_double(value: &str) -> Option<f64> {
    if let Some(hex) = value.strip_prefix("0x").or_else(|| value.strip_prefix("0X")) {
        if hex.len() == 16 {
            if let Ok(bits) = u64::from_str_radix(hex, 16) {
                return Some(f64::from_bits(bits));
            }
        }
        return None;
    }
    value.parse().ok()
}

fn parse_attr_group(
    body: &str,
    line_no: usize,
) -> Result<BTreeMap<String, String>, QirParseError> {
    let inner = body
        .strip_prefix('{')
        .and_then(|b| b.strip_suffix('}'))
        .ok_or_else(|| QirParseError::SyntaxError {
            line: line_no,
            column: 1,
            message: "attribute group must be brace-delimited".to_string(),
        })?;
    let mut attrs = BTreeMap::new();
    let mut rest = inner.trim();
    while !rest.is_empty() {
        if let Some(after_quote) = rest.strip_prefix('"') {
            let end = after_quote.find('"').ok_or_else(|| QirParseError::SyntaxError {
                line: line_no,
                column: 1,
                message: "unterminated attribute string".to_string(),
            })?;
            let key = after_quote[..end].to_string();
            rest = after_quote[end + 1..].trim_start();
            if let Some(after_eq) = rest.strip_prefix('=') {
                let after_eq = after_eq.trim_start();
                let value_body = after_eq.strip_prefix('"').ok_or_else(|| {
                    QirParseError::SyntaxError {
                        line: line_no,
                        column: 1,
                        message: "attribute value must be quoted".to_string(),
                    }
                })?;
                let vend = value_body.find('"').ok_or_else(|| QirParseError::SyntaxError {
                    line: line_no,
                    column: 1,
                    message: "unterminated attribute value".to_string(),
                })?;
                attrs.insert(key, value_body[..vend].to_string());
                rest = value_body[vend + 1..].trim_start();
            } else {
                attrs.insert(key, String::new());
                rest = rest.trim_start();
            }
        } else {
            // bare keyword attribute such as `nounwind`
            let end = rest
                .find(char::is_whitespace)
                .unwrap_or(rest.len());
            attrs.insert(rest[..end].to_string(), String::new());
            rest = rest[end..].trim_start();
        }
    }
    Ok(attrs)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) const BELL_QIR: &str = r#"
; bell state preparation
%Qubit = type opaque
%Result = type opaque

define void @main() #0 {
entry:
  call void @__quantum__qis__h__body(%Qubit* null)
  call void @__quantum__qis__cnot__body(%Qubit* null, %Qubit* inttoptr (i64 1 to %Qubit*))
  call void @__quantum__qis__mz__body(%Qubit* null, %Result* null)
  call void @__quantum__qis__mz__body(%Qubit* inttoptr (i64 1 to %Qubit*), %Result* inttoptr (i64 1 to %Result*))
  call void @__quantum__rt__result_record_output(%Result* null, i8* null)
  call void @__quantum__rt__result_record_output(%Result* inttoptr (i64 1 to %Result*), i8* null)
  ret void
}

declare void @__quantum__qis__h__body(%Qubit*)
declare void @__quantum__qis__cnot__body(%Qubit*, %Qubit*)
declare void @__quantum__qis__mz__body(%Qubit*, %Result* writeonly)
declare void @__quantum__rt__result_record_output(%Result*, i8*)

attributes #0 = { "entry_point" "required_num_qubits"="2" "required_num_results"="2" "output_labeling_schema" "qir_profiles"="base_profile" }
"#;

    #[test]
    fn bell_parses_to_six_ops_in_call_order() {
        let module = parse_qir(BELL_QIR).unwrap();
        assert_eq!(module.entry_name, "main");
        assert_eq!(module.metadata.num_qubits, 2);
        assert_eq!(module.metadata.num_results, 2);
        assert_eq!(
            module.ops,
            vec![
                KernelOp::Gate1Q {
                    gate_name: "h".into(),
                    qubit: 0
                },
                KernelOp::Gate2Q {
                    gate_name: "cnot".into(),
                    control: 0,
                    target: 1
                },
                KernelOp::Measure { qubit: 0, result: 0 },
                KernelOp::Measure { qubit: 1, result: 1 },
                KernelOp::ResultRecord { result: 0 },
                KernelOp::ResultRecord { result: 1 },
            ]
        );
        assert!(module
            .declared_intrinsics
            .contains("__quantum__qis__cnot__body"));
    }

    #[test]
    fn empty_kernel_parses_to_zero_ops() {
        let src = r#"
define void @main() #0 {
  ret void
}
attributes #0 = { "entry_point" "required_num_qubits"="0" "required_num_results"="0" }
"#;
        let module = parse_qir(src).unwrap();
        assert!(module.ops.is_empty());
        assert_eq!(module.metadata.num_qubits, 0);
    }

    #[test]
    fn branch_is_unsupported() {
        let src = r#"
define void @main() #0 {
entry:
  br label %next
next:
  ret void
}
attributes #0 = { "entry_point" "required_num_qubits"="1" "required_num_results"="0" }
"#;
        assert!(matches!(
            parse_qir(src).unwrap_err(),
            QirParseError::UnsupportedConstruct { line: 4, .. }
        ));
    }

    #[test]
    fn missing_register_attributes() {
        let src = r#"
define void @main() #0 {
  ret void
}
attributes #0 = { "entry_point" }
"#;
        assert_eq!(
            parse_qir(src).unwrap_err(),
            QirParseError::MissingAttribute {
                name: "required_num_qubits"
            }
        );
    }

    #[test]
    fn legacy_attribute_spelling_accepted() {
        let src = r#"
define void @main() #0 {
  ret void
}
attributes #0 = { "entry_point" "num_required_qubits"="3" "num_required_results"="1" }
"#;
        let module = parse_qir(src).unwrap();
        assert_eq!(module.metadata.num_qubits, 3);
        assert_eq!(module.metadata.num_results, 1);
    }

    #[test]
    fn undeclared_callee_is_a_syntax_error() {
        let src = r#"
define void @main() #0 {
  call void @__quantum__qis__h__body(%Qubit* null)
  ret void
}
attributes #0 = { "entry_point" "required_num_qubits"="1" "required_num_results"="0" }
"#;
        assert!(matches!(
            parse_qir(src).unwrap_err(),
            QirParseError::SyntaxError { line: 3, .. }
        ));
    }

    #[test]
    fn no_entry_point() {
        let src = r#"
declare void @__quantum__qis__h__body(%Qubit*)
"#;
        assert_eq!(parse_qir(src).unwrap_err(), QirParseError::NoEntryPoint);
    }

    #[test]
    fn rotation_call_with_hex_double() {
        let src = r#"
define void @main() #0 {
  call void @__quantum__qis__rz__body(double 0x3FF921FB54442D18, %Qubit* null)
  call void @__quantum__qis__rx__body(double 1.500000e+00, %Qubit* null)
  ret void
}
declare void @__quantum__qis__rz__body(double, %Qubit*)
declare void @__quantum__qis__rx__body(double, %Qubit*)
attributes #0 = { "entry_point" "required_num_qubits"="1" "required_num_results"="0" }
"#;
        let module = parse_qir(src).unwrap();
        assert_eq!(
            module.ops[0],
            KernelOp::Gate1QAngle {
                gate_name: "rz".into(),
                qubit: 0,
                angle: f64::from_bits(0x3FF921FB54442D18)
            }
        );
        assert_eq!(
            module.ops[1],
            KernelOp::Gate1QAngle {
                gate_name: "rx".into(),
                qubit: 0,
                angle: 1.5
            }
        );
    }

    #[test]
    fn adjoint_specialization_unsupported() {
        let src = r#"
define void @main() #0 {
  call void @__quantum__qis__s__adj(%Qubit* null)
  ret void
}
declare void @__quantum__qis__s__adj(%Qubit*)
attributes #0 = { "entry_point" "required_num_qubits"="1" "required_num_results"="0" }
"#;
        assert!(matches!(
            parse_qir(src).unwrap_err(),
            QirParseError::UnsupportedConstruct { .. }
        ));
    }

    #[test]
    fn dynamic_qubit_operand_unsupported() {
        let src = r#"
define void @main() #0 {
  call void @__quantum__qis__h__body(%Qubit* %q)
  ret void
}
declare void @__quantum__qis__h__body(%Qubit*)
attributes #0 = { "entry_point" "required_num_qubits"="1" "required_num_results"="0" }
"#;
        assert!(matches!(
            parse_qir(src).unwrap_err(),
            QirParseError::UnsupportedConstruct { .. }
        ));
    }

    mod totality {
        use super::super::parse_qir;
        use super::BELL_QIR;
        use proptest::prelude::*;

        proptest! {
            // parse_qir is total: arbitrary input yields a module or a
            // structured error, never a panic
            #[test]
            fn arbitrary_text_never_panics(input in ".{0,400}") {
                let _ = parse_qir(&input);
            }

            #[test]
            fn mutated_bell_never_panics(
                pos in 0usize..BELL_QIR.len(),
                len in 0usize..40,
                replacement in ".{0,20}",
            ) {
                // BELL_QIR is ASCII, so byte offsets are char boundaries
                let mut text = BELL_QIR.to_string();
                let end = (pos + len).min(text.len());
                text.replace_range(pos..end, &replacement);
                let _ = parse_qir(&text);
            }
        }
    }
}

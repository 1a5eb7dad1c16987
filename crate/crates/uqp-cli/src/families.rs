//! Built-in benchmark circuit families.
//!
//! Kernel generators spanning the gate-count growth regimes of interest:
//! `ghz` and `lin` grow linearly in the qubit count, `qftlike` carries the
//! O(n²) two-qubit layer structure of Fourier-style circuits.

use std::fmt;
use std::str::FromStr;

use uqp_core::isa::GateCode;
use uqp_core::qir::{QuantumKernel, ResolvedOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Ghz,
    Lin,
    QftLike,
}

impl Family {
    pub const ALL: [Family; 3] = [Family::Ghz, Family::Lin, Family::QftLike];

    pub fn name(self) -> &'static str {
        match self {
            Family::Ghz => "ghz",
            Family::Lin => "lin",
            Family::QftLike => "qftlike",
        }
    }

    pub fn build(self, num_qubits: u32) -> QuantumKernel {
        match self {
            Family::Ghz => ghz(num_qubits),
            Family::Lin => lin(num_qubits),
            Family::QftLike => qftlike(num_qubits),
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Family {
    type Err = String;

    fn from_str(s: &str) -> Result<Family, String> {
        Family::ALL
            .iter()
            .copied()
            .find(|f| f.name() == s)
            .ok_or_else(|| format!("unknown circuit family `{s}` (expected ghz, lin or qftlike)"))
    }
}

/// GHZ state preparation: one Hadamard, a CNOT chain, full measurement.
pub fn ghz(n: u32) -> QuantumKernel {
    assert!(n >= 1);
    let mut ops = vec![ResolvedOp::Gate1 {
        gate: GateCode::H,
        qubit: 0,
    }];
    for q in 0..n.saturating_sub(1) {
        ops.push(ResolvedOp::Gate2 {
            gate: GateCode::Cnot,
            control: q,
            target: q + 1,
        });
    }
    for q in 0..n {
        ops.push(ResolvedOp::Measure { qubit: q, result: q });
    }
    QuantumKernel {
        num_qubits: n,
        num_results: n,
        ops,
    }
}

/// Linear entangler: a Hadamard layer, one nearest-neighbor CNOT chain,
/// full measurement.
pub fn lin(n: u32) -> QuantumKernel {
    assert!(n >= 1);
    let mut ops = Vec::new();
    for q in 0..n {
        ops.push(ResolvedOp::Gate1 {
            gate: GateCode::H,
            qubit: q,
        });
    }
    for q in 0..n.saturating_sub(1) {
        ops.push(ResolvedOp::Gate2 {
            gate: GateCode::Cnot,
            control: q,
            target: q + 1,
        });
    }
    for q in 0..n {
        ops.push(ResolvedOp::Measure { qubit: q, result: q });
    }
    QuantumKernel {
        num_qubits: n,
        num_results: n,
        ops,
    }
}

/// Fourier-style circuit with an O(n²) controlled layer: per qubit, a
/// Hadamard followed by a phase rotation and CZ against every later qubit,
/// then full measurement.
pub fn qftlike(n: u32) -> QuantumKernel {
    assert!(n >= 1);
    let mut ops = Vec::new();
    for i in 0..n {
        ops.push(ResolvedOp::Gate1 {
            gate: GateCode::H,
            qubit: i,
        });
        for j in i + 1..n {
            let angle = std::f64::consts::PI / f64::from(1u32 << (j - i).min(30));
            ops.push(ResolvedOp::Rotation {
                gate: GateCode::Rz,
                qubit: j,
                angle,
            });
            ops.push(ResolvedOp::Gate2 {
                gate: GateCode::Cz,
                control: i,
                target: j,
            });
        }
    }
    for q in 0..n {
        ops.push(ResolvedOp::Measure { qubit: q, result: q });
    }
    QuantumKernel {
        num_qubits: n,
        num_results: n,
        ops,
    }
}

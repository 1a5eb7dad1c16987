//! Toolchain for a unified hybrid quantum platform.
//!
//! The crate compiles quantum kernels written in the QIR base-profile textual
//! format down to a 32-bit hybrid binary instruction set shared by
//! superconducting and neutral-atom control processors, and executes those
//! binaries on a simulated control processor with an embedded state-vector
//! backend.
//!
//! Pipeline, end to end:
//!
//! ```text
//!   .ll text ── qir::parse_qir ──► QirModule ── qir::validate ──► QuantumKernel
//!       QuantumKernel ── lowering::lower ──► BinaryProgram (+ LoweringReport)
//!       BinaryProgram ── isa::assemble ──► offload image bytes (.uqpb)
//!       BinaryProgram ── qcp::load / run ──► ExecutionReport
//! ```
//!
//! Neutral-atom targets additionally run the [`atoms`] preparation pipeline
//! (image synthesis, detection, rearrangement planning, move emission) before
//! the gate stream, driven by the atom-preparation instruction class.

pub mod atoms;
pub mod isa;
pub mod lowering;
pub mod meter;
pub mod qcp;
pub mod qir;
pub mod rng;

pub use isa::program::{BinaryProgram, Target};
pub use lowering::{lower, JobOptions, LoweringReport};
pub use qcp::{ExecutionReport, QcpInstance};
pub use qir::{parse_qir, validate, QuantumKernel};

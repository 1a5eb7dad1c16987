//! Dense state-vector backend for desk-scale verification.
//!
//! Qubit `q` corresponds to bit `q` of the basis-state index. Capped at 20
//! qubits; wider programs run trace-only without a state vector.

use num_complex::Complex64;
use thiserror::Error;

use crate::isa::GateCode;

/// Widest register the dense backend simulates.
pub const MAX_STATEVEC_QUBITS: u16 = 20;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateVecError {
    #[error("{requested} qubits exceed the {MAX_STATEVEC_QUBITS}-qubit state-vector cap")]
    TooManyQubits { requested: u16 },
    #[error("bad targets {targets:?} for gate `{gate}` on {num_qubits} qubits", gate = .gate.mnemonic())]
    BadTargets {
        gate: GateCode,
        targets: Vec<u16>,
        num_qubits: u16,
    },
    #[error("gate `{gate}` is not a unitary the backend applies directly", gate = .gate.mnemonic())]
    NotUnitary { gate: GateCode },
    #[error("rotation gate `{gate}` needs an angle", gate = .gate.mnemonic())]
    MissingAngle { gate: GateCode },
}

#[derive(Debug, Clone)]
pub struct StateVector {
    num_qubits: u16,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Fresh |0...0> state.
    pub fn new(num_qubits: u16) -> Result<StateVector, StateVecError> {
        if num_qubits > MAX_STATEVEC_QUBITS {
            return Err(StateVecError::TooManyQubits {
                requested: num_qubits,
            });
        }
        let mut amps = vec![Complex64::ZERO; 1 << num_qubits];
        amps[0] = Complex64::ONE;
        Ok(StateVector { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> u16 {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Apply a unitary gate. Measurement and reset are handled by the
    /// machine (they need a random draw) and are rejected here.
    pub fn apply_gate(
        &mut self,
        gate: GateCode,
        targets: &[u16],
        angle: Option<f64>,
    ) -> Result<(), StateVecError> {
        let bad_targets = || StateVecError::BadTargets {
            gate,
            targets: targets.to_vec(),
            num_qubits: self.num_qubits,
        };
        if targets.iter().any(|t| *t >= self.num_qubits) {
            return Err(bad_targets());
        }
        match gate {
            GateCode::Mz | GateCode::Reset => Err(StateVecError::NotUnitary { gate }),
            GateCode::Rx | GateCode::Ry | GateCode::Rz => {
                let [q] = targets else { return Err(bad_targets()) };
                let theta = angle.ok_or(StateVecError::MissingAngle { gate })?;
                self.apply_single(*q, rotation_matrix(gate, theta));
                Ok(())
            }
            GateCode::Cnot | GateCode::Cz | GateCode::Swap => {
                let [a, b] = targets else { return Err(bad_targets()) };
                if a == b {
                    return Err(bad_targets());
                }
                match gate {
                    GateCode::Cnot => self.apply_cnot(*a, *b),
                    GateCode::Cz => self.apply_cz(*a, *b),
                    _ => self.apply_swap(*a, *b),
                }
                Ok(())
            }
            _ => {
                let [q] = targets else { return Err(bad_targets()) };
                self.apply_single(*q, fixed_matrix(gate));
                Ok(())
            }
        }
    }

    /// Probability of reading 1 on `qubit`.
    pub fn prob_one(&self, qubit: u16) -> f64 {
        let bit = 1usize << qubit;
        self.amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & bit != 0)
            .map(|(_, a)| a.norm_sqr())
            .sum()
    }

    /// Projective measurement of `qubit` in the computational basis using
    /// the uniform draw `u`; collapses and renormalizes the state.
    pub fn measure(&mut self, qubit: u16, u: f64) -> bool {
        let p_one = self.prob_one(qubit);
        let outcome = u < p_one;
        self.collapse(qubit, outcome, if outcome { p_one } else { 1.0 - p_one });
        outcome
    }

    fn collapse(&mut self, qubit: u16, outcome: bool, probability: f64) {
        let bit = 1usize << qubit;
        let scale = 1.0 / probability.max(f64::MIN_POSITIVE).sqrt();
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if (i & bit != 0) == outcome {
                *amp *= scale;
            } else {
                *amp = Complex64::ZERO;
            }
        }
    }

    fn apply_single(&mut self, qubit: u16, m: [Complex64; 4]) {
        let bit = 1usize << qubit;
        for i in 0..self.amps.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a, b) = (self.amps[i], self.amps[j]);
                self.amps[i] = m[0] * a + m[1] * b;
                self.amps[j] = m[2] * a + m[3] * b;
            }
        }
    }

    fn apply_cnot(&mut self, control: u16, target: u16) {
        let cbit = 1usize << control;
        let tbit = 1usize << target;
        for i in 0..self.amps.len() {
            if i & cbit != 0 && i & tbit == 0 {
                self.amps.swap(i, i | tbit);
            }
        }
    }

    fn apply_cz(&mut self, a: u16, b: u16) {
        let mask = (1usize << a) | (1usize << b);
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask == mask {
                *amp = -*amp;
            }
        }
    }

    fn apply_swap(&mut self, a: u16, b: u16) {
        let abit = 1usize << a;
        let bbit = 1usize << b;
        for i in 0..self.amps.len() {
            if i & abit != 0 && i & bbit == 0 {
                self.amps.swap(i, i ^ abit ^ bbit);
            }
        }
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn fixed_matrix(gate: GateCode) -> [Complex64; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match gate {
        GateCode::H => [c(s, 0.0), c(s, 0.0), c(s, 0.0), c(-s, 0.0)],
        GateCode::X => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        GateCode::Y => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        GateCode::Z => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        GateCode::S => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 1.0)],
        GateCode::T => [
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(s, s),
        ],
        GateCode::Sx => [
            c(0.5, 0.5),
            c(0.5, -0.5),
            c(0.5, -0.5),
            c(0.5, 0.5),
        ],
        _ => unreachable!("fixed_matrix only covers non-parametric single-qubit unitaries"),
    }
}

fn rotation_matrix(gate: GateCode, theta: f64) -> [Complex64; 4] {
    let half = theta / 2.0;
    let (sin, cos) = half.sin_cos();
    match gate {
        GateCode::Rx => [c(cos, 0.0), c(0.0, -sin), c(0.0, -sin), c(cos, 0.0)],
        GateCode::Ry => [c(cos, 0.0), c(-sin, 0.0), c(sin, 0.0), c(cos, 0.0)],
        GateCode::Rz => [c(cos, -sin), c(0.0, 0.0), c(0.0, 0.0), c(cos, sin)],
        _ => unreachable!("rotation_matrix only covers rx/ry/rz"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < EPS
    }

    #[test]
    fn h_on_zero_gives_plus_state() {
        let mut sv = StateVector::new(1).unwrap();
        sv.apply_gate(GateCode::H, &[0], None).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(sv.amplitudes()[0], c(s, 0.0)));
        assert!(close(sv.amplitudes()[1], c(s, 0.0)));
    }

    #[test]
    fn cnot_flips_target_when_control_set() {
        let mut sv = StateVector::new(2).unwrap();
        sv.apply_gate(GateCode::X, &[0], None).unwrap(); // |01> (qubit0 = 1)
        sv.apply_gate(GateCode::Cnot, &[0, 1], None).unwrap();
        // both bits now set -> basis index 3
        assert!(close(sv.amplitudes()[3], Complex64::ONE));
    }

    #[test]
    fn bell_pair_amplitudes() {
        let mut sv = StateVector::new(2).unwrap();
        sv.apply_gate(GateCode::H, &[0], None).unwrap();
        sv.apply_gate(GateCode::Cnot, &[0, 1], None).unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(sv.amplitudes()[0], c(s, 0.0)));
        assert!(close(sv.amplitudes()[3], c(s, 0.0)));
        assert!(close(sv.amplitudes()[1], Complex64::ZERO));
        assert!(close(sv.amplitudes()[2], Complex64::ZERO));
    }

    #[test]
    fn rz_pair_cancels() {
        let mut sv = StateVector::new(3).unwrap();
        // an arbitrary-ish state
        sv.apply_gate(GateCode::H, &[0], None).unwrap();
        sv.apply_gate(GateCode::T, &[0], None).unwrap();
        sv.apply_gate(GateCode::Cnot, &[0, 2], None).unwrap();
        sv.apply_gate(GateCode::Ry, &[1], Some(0.3)).unwrap();
        let before = sv.clone();
        let theta = std::f64::consts::FRAC_PI_2;
        sv.apply_gate(GateCode::Rz, &[1], Some(theta)).unwrap();
        sv.apply_gate(GateCode::Rz, &[1], Some(-theta)).unwrap();
        for (a, b) in sv.amplitudes().iter().zip(before.amplitudes()) {
            assert!(close(*a, *b));
        }
    }

    #[test]
    fn norm_preserved_across_gates() {
        let mut sv = StateVector::new(4).unwrap();
        let gates: [(GateCode, Vec<u16>, Option<f64>); 10] = [
            (GateCode::H, vec![0], None),
            (GateCode::Sx, vec![1], None),
            (GateCode::T, vec![2], None),
            (GateCode::Cnot, vec![0, 3], None),
            (GateCode::Rx, vec![2], Some(1.234)),
            (GateCode::Cz, vec![1, 2], None),
            (GateCode::Ry, vec![3], Some(-0.7)),
            (GateCode::Swap, vec![0, 2], None),
            (GateCode::Y, vec![1], None),
            (GateCode::Rz, vec![0], Some(2.5)),
        ];
        for (gate, targets, angle) in gates {
            sv.apply_gate(gate, &targets, angle).unwrap();
            assert!((sv.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn measure_collapses_consistently() {
        let mut sv = StateVector::new(2).unwrap();
        sv.apply_gate(GateCode::H, &[0], None).unwrap();
        sv.apply_gate(GateCode::Cnot, &[0, 1], None).unwrap();
        let one = sv.measure(0, 0.3); // u < 0.5 -> outcome 1
        assert!(one);
        // collapsed to |11>
        assert!(close(sv.amplitudes()[3], Complex64::ONE));
        let second = sv.measure(1, 0.99);
        assert!(second);
    }

    #[test]
    fn swap_exchanges_qubits() {
        let mut sv = StateVector::new(2).unwrap();
        sv.apply_gate(GateCode::X, &[0], None).unwrap();
        sv.apply_gate(GateCode::Swap, &[0, 1], None).unwrap();
        assert!(close(sv.amplitudes()[2], Complex64::ONE));
    }

    #[test]
    fn errors_on_bad_usage() {
        assert!(matches!(
            StateVector::new(21),
            Err(StateVecError::TooManyQubits { requested: 21 })
        ));
        let mut sv = StateVector::new(2).unwrap();
        assert!(matches!(
            sv.apply_gate(GateCode::H, &[5], None),
            Err(StateVecError::BadTargets { .. })
        ));
        assert!(matches!(
            sv.apply_gate(GateCode::Cnot, &[1, 1], None),
            Err(StateVecError::BadTargets { .. })
        ));
        assert!(matches!(
            sv.apply_gate(GateCode::Rz, &[0], None),
            Err(StateVecError::MissingAngle { .. })
        ));
        assert!(matches!(
            sv.apply_gate(GateCode::Mz, &[0], None),
            Err(StateVecError::NotUnitary { .. })
        ));
    }
}

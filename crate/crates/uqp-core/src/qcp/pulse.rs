//! Pulse libraries and the pulse events the control processor schedules.
//!
//! A pulse library maps `(modality, gate)` to a waveform identifier plus
//! default parameters. The library is backend-developer data, shipped as a
//! JSON file; the embedded default covers every gate on both modalities
//! with placeholder amplitudes and durations.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::isa::program::Target;
use crate::isa::GateCode;

/// Channel a pulse is played on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PulseChannel {
    Qubit(u16),
    Pair { control: u16, target: u16 },
}

impl fmt::Display for PulseChannel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PulseChannel::Qubit(q) => write!(f, "q{q}"),
            PulseChannel::Pair { control, target } => write!(f, "q{control}-q{target}"),
        }
    }
}

/// One scheduled pulse.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PulseEvent {
    /// Cycle at which the pulse starts.
    pub t: u64,
    pub channel: PulseChannel,
    pub waveform_id: String,
    pub params: BTreeMap<String, f64>,
}

/// Waveform identifier and default parameters for one gate on one modality.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveformDef {
    pub waveform: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Error)]
pub enum PulseLibraryError {
    #[error("pulse library is not valid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("pulse library names unknown modality `{0}`")]
    UnknownModality(String),
    #[error("pulse library names unknown gate `{0}`")]
    UnknownGate(String),
}

/// Per-modality waveform table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PulseLibrary {
    entries: BTreeMap<(Target, GateCode), WaveformDef>,
}

const EMBEDDED_LIBRARY: &str = include_str!("../../data/pulse_library.json");

impl PulseLibrary {
    /// The library shipped with the crate.
    pub fn embedded_default() -> PulseLibrary {
        Self::from_json_str(EMBEDDED_LIBRARY).expect("embedded pulse library is valid")
    }

    /// Parse the JSON form: `{ "<modality>": { "<gate>": {waveform, params} } }`
    /// with modalities `superconducting` and `neutral_atom`.
    pub fn from_json_str(json: &str) -> Result<PulseLibrary, PulseLibraryError> {
        let raw: BTreeMap<String, BTreeMap<String, WaveformDef>> = serde_json::from_str(json)?;
        let mut entries = BTreeMap::new();
        for (modality, gates) in raw {
            let target = match modality.as_str() {
                "superconducting" => Target::Superconducting,
                "neutral_atom" => Target::NeutralAtom,
                other => return Err(PulseLibraryError::UnknownModality(other.to_string())),
            };
            for (gate_name, def) in gates {
                let gate = GateCode::from_mnemonic(&gate_name)
                    .ok_or_else(|| PulseLibraryError::UnknownGate(gate_name.clone()))?;
                entries.insert((target, gate), def);
            }
        }
        Ok(PulseLibrary { entries })
    }

    pub fn lookup(&self, target: Target, gate: GateCode) -> Option<&WaveformDef> {
        self.entries.get(&(target, gate))
    }

    /// Gates of `gates` that have no waveform on `target`.
    pub fn missing_for(&self, target: Target, gates: impl IntoIterator<Item = GateCode>) -> Vec<GateCode> {
        let mut missing: Vec<GateCode> = gates
            .into_iter()
            .filter(|gate| self.lookup(target, *gate).is_none())
            .collect();
        missing.sort_unstable();
        missing.dedup();
        missing
    }
}

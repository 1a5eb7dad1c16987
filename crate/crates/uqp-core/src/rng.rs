//! Counter-based pseudo-random streams (SplitMix64).
//!
//! Every random draw in the simulator is a pure function of a key and a
//! counter, so replays are exactly reproducible and independent streams can
//! be derived for measurements, atom loading and image noise without shared
//! state.

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

/// SplitMix64 output function.
pub fn splitmix64(state: u64) -> u64 {
    let mut z = state.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive a stream key from a seed and up to two stream labels.
pub fn stream_key(seed: u64, label_a: u64, label_b: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ label_a) ^ label_b)
}

/// The `counter`-th value of the stream identified by `key`.
pub fn at(key: u64, counter: u64) -> u64 {
    splitmix64(key.wrapping_add(counter.wrapping_mul(GOLDEN_GAMMA)))
}

/// Uniform draw in `[0, 1)` at a (key, counter) position.
pub fn unit_at(key: u64, counter: u64) -> f64 {
    (at(key, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Measurement draw for a (seed, shot, measurement-ordinal) triple.
pub fn measurement_draw(seed: u64, shot: u64, ordinal: u64) -> f64 {
    unit_at(stream_key(seed, 0x4d45_4153, shot), ordinal)
}

/// Sequential view over one counter-based stream.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> CounterRng {
        CounterRng { key, counter: 0 }
    }

    pub fn next_u64(&mut self) -> u64 {
        let value = at(self.key, self.counter);
        self.counter += 1;
        value
    }

    pub fn next_unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard-normal draw via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_unit().max(f64::MIN_POSITIVE);
        let u2 = self.next_unit();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

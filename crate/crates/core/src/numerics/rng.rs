use std::f64::consts::TAU;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// Advance a splitmix64 state and return the next raw output.
#[inline]
pub fn splitmix64_next(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN_GAMMA);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of child stream `stream` derived from `parent`: the first splitmix64
/// output for state `parent ^ stream`.
pub fn split_seed(parent: u64, stream: u64) -> u64 {
    let mut s = parent ^ stream;
    splitmix64_next(&mut s)
}

/// Seeded splitmix64 generator. Single owner; parallel consumers take
/// independent children via [`RandomSource::child`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomSource {
    seed: u64,
    state: u64,
}

impl RandomSource {
    pub fn new(seed: u64) -> Self {
        Self { seed, state: seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn child(&self, stream: u64) -> RandomSource {
        RandomSource::new(split_seed(self.seed, stream))
    }

    pub fn next_u64(&mut self) -> u64 {
        splitmix64_next(&mut self.state)
    }

    /// Uniform in [0, 1): the top 53 bits of the raw output scaled by 2^-53.
    pub fn next_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal via Box–Muller; consumes two uniforms per draw.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_uniform().max(f64::powi(2.0, -64));
        let u2 = self.next_uniform();
        (-2.0 * u1.ln()).sqrt() * (TAU * u2).cos()
    }

    /// Uniform index in `0..n`.
    pub fn next_index(&mut self, n: usize) -> usize {
        ((self.next_uniform() * n as f64) as usize).min(n - 1)
    }
}

//! Deterministic splittable random streams.
//!
//! Every Monte Carlo sample draws from its own stream, derived in O(1) from
//! the run seed and a `StreamKey` (scenario, T-grid index, sample index,
//! channel). Streams are counter-based: state advances by a per-stream odd
//! increment and the output is a strong 64-bit mix of the state, so deriving
//! a stream is as cheap as hashing the key. Identical (seed, key) pairs
//! always reproduce the identical draw sequence, which is what makes
//! parallel and serial runs agree count-for-count.

/// Run-level seed. Any 64-bit value is valid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Seed(pub u64);

/// Channel conventions used by the composition machinery.
pub const CHANNEL_INNER: u8 = 0;
pub const CHANNEL_OUTER_PLUS: u8 = 1;
pub const CHANNEL_OUTER_MINUS: u8 = 2;

/// Identifies one logical stream within a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamKey {
    pub scenario_index: u64,
    pub grid_index: u64,
    pub sample_index: u64,
    /// 0 = inner path, 1 = outer plus branch, 2 = outer minus branch.
    pub channel: u8,
}

impl StreamKey {
    pub fn new(scenario_index: u64, grid_index: u64, sample_index: u64, channel: u8) -> Self {
        StreamKey {
            scenario_index,
            grid_index,
            sample_index,
            channel,
        }
    }

    pub fn channel(self, channel: u8) -> Self {
        StreamKey { channel, ..self }
    }
}

// Finalizer from SplitMix64 (Stafford variant 13 constants).
#[inline]
fn mix64(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xbf58476d1ce4e5b9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

// Second mixer (murmur3 finalizer constants) used where two independent
// 64-bit digests of the same material are needed.
#[inline]
fn mix64_alt(mut z: u64) -> u64 {
    z ^= z >> 33;
    z = z.wrapping_mul(0xff51afd7ed558ccd);
    z ^= z >> 33;
    z = z.wrapping_mul(0xc4ceb9fe1a85ec53);
    z ^ (z >> 33)
}

const GOLDEN: u64 = 0x9e3779b97f4a7c15;

/// Counter-based generator with a per-stream increment.
///
/// With the increment odd, the state walks a full 2^64 cycle; distinct
/// derived (state, increment) pairs give distinct output sequences, and the
/// strong output mix decorrelates neighbouring counters.
#[derive(Debug, Clone)]
pub struct Stream {
    state: u64,
    gamma: u64,
    spare_normal: Option<f64>,
}

/// Derives the stream for `key`: a pure function of (seed, key).
pub fn derive_stream(seed: Seed, key: StreamKey) -> Stream {
    let mut h = mix64(seed.0 ^ 0x6a09e667f3bcc908);
    h = mix64(h ^ mix64(key.scenario_index.wrapping_add(0xbb67ae8584caa73b)));
    h = mix64(h ^ mix64(key.grid_index.wrapping_add(0x3c6ef372fe94f82b)));
    h = mix64(h ^ mix64(key.sample_index.wrapping_add(0xa54ff53a5f1d36f1)));
    h = mix64(h ^ mix64((key.channel as u64).wrapping_add(0x510e527fade682d1)));

    let state = mix64_alt(h);
    let mut gamma = mix64_alt(h ^ GOLDEN) | 1;
    // Guard against weak increments (sparse bit transitions), as in
    // SplittableRandom's gamma post-processing.
    if (gamma ^ (gamma >> 1)).count_ones() < 24 {
        gamma ^= 0xaaaa_aaaa_aaaa_aaaa;
    }
    Stream {
        state,
        gamma,
        spare_normal: None,
    }
}

impl Stream {
    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(self.gamma);
        mix64(self.state)
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    #[inline]
    pub fn next_uniform(&mut self) -> f64 {
        const SCALE: f64 = 1.0 / 9007199254740992.0; // 2^-53
        (self.next_u64() >> 11) as f64 * SCALE
    }

    /// Uniform draw in (0, 1]; safe as a log argument.
    #[inline]
    pub fn next_uniform_open(&mut self) -> f64 {
        1.0 - self.next_uniform()
    }

    /// Standard normal via Box–Muller; the paired draw is cached.
    #[inline]
    pub fn next_standard_normal(&mut self) -> f64 {
        if let Some(v) = self.spare_normal.take() {
            return v;
        }
        let u1 = self.next_uniform_open();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        let (s, c) = theta.sin_cos();
        self.spare_normal = Some(r * s);
        r * c
    }

    /// Poisson draw by Knuth's product method. Exact for any mean; cost grows
    /// linearly with the mean, which stays small for the cell sizes used here.
    pub fn next_poisson(&mut self, mean: f64) -> u64 {
        debug_assert!(mean >= 0.0 && mean.is_finite());
        if mean == 0.0 {
            return 0;
        }
        // Work in log space so large cells cannot underflow the product.
        let mut acc = 0.0f64;
        let mut k = 0u64;
        loop {
            acc += self.next_uniform_open().ln();
            if acc < -mean {
                return k;
            }
            k += 1;
        }
    }
}

//! Seed-derived random streams.
//!
//! Every stochastic element of a run (a neuron's noise, a bias train, a data
//! shuffle) draws from its own ChaCha8 stream. All streams share the run's root
//! seed and differ only in the stream id, so adding a new consumer never shifts
//! the numbers seen by an existing one.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

const NEURON: u64 = 0;
const BIAS: u64 = 1 << 40;
const AUX: u64 = 2 << 40;

/// Named stream namespaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stream {
    /// Membrane noise of neuron `i` (global index).
    Neuron(usize),
    /// Poisson bias train feeding neuron `i`.
    Bias(usize),
    /// Anything else: data order, weight init, Gibbs chains, trial draws.
    Aux(u64),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Neuron(i) => NEURON + i as u64,
            Stream::Bias(i) => BIAS + i as u64,
            Stream::Aux(k) => AUX + k,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}

/// Child seed for trial `k` of a multi-trial experiment.
pub fn child_seed(seed: u64, k: u64) -> u64 {
    // splitmix64 finalizer
    let mut z = seed ^ k.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

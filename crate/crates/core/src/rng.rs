//! Deterministic random streams.
//!
//! A run has one root seed. Each phase of the algorithm draws from its own
//! ChaCha stream so that, for example, extra bootstrap rounds never shift the
//! draws seen by the random walks.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The generator used for every stream.
pub type StreamRng = ChaCha8Rng;

/// Named sub-streams of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    /// Initial live points.
    Init,
    /// Walk start selection and slice-sampler draws.
    Walk,
    /// Bootstrap resampling for the reference radius.
    Radius,
    /// Anything a harness needs outside a run (e.g. synthetic samples).
    Harness,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Init => 1,
            Stream::Walk => 2,
            Stream::Radius => 3,
            Stream::Harness => 4,
        }
    }
}

/// Generator for `stream` under the root `seed`.
pub fn stream_rng(seed: u64, stream: Stream) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.id());
    rng
}

/// A point drawn uniformly from `[0, 1]^d`.
pub fn sample_unit_cube<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random::<f64>()).collect()
}

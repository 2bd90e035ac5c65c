//! Reproducible random streams.
//!
//! Every replication (Monte Carlo draw, bootstrap resample) gets its own
//! ChaCha20 stream: the 64-bit user seed fixes the key and the replication
//! index selects the stream. ChaCha is counter based, so stream `i` is the
//! same no matter how many other streams were consumed before it or on which
//! thread it runs.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

pub type StreamRng = ChaCha20Rng;

/// Generator for replication `stream` under `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

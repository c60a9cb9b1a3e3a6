//! Counter-based random streams.
//!
//! Every replication gets its own ChaCha stream keyed by `(seed, stream)`, so a
//! replication's draws do not depend on how many other replications ran
//! before it or on which thread it ran.
use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as StreamRng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = StreamRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

pub fn seeded_rng(seed: u64) -> StreamRng {
    stream_rng(seed, 0)
}

//! Replication streams.
//!
//! Replication `k` of a run with master seed `s` draws from
//! `ChaCha8Rng::seed_from_u64(s)` switched to stream `k`. Streams of one
//! key never overlap, so the replications are independent and each can be
//! regenerated on its own.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn stream(master: u64, replication: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(replication);
    rng
}

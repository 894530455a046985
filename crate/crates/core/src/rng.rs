//! Seeded substreams. Every replication draws from its own ChaCha stream keyed
//! by `(master seed, replication index)`, so results do not depend on how the
//! replications are scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

pub type SimRng = ChaCha8Rng;

/// Purpose tags mixed into the master seed so that different estimators never
/// share random numbers.
pub mod tags {
    pub const PFA: u64 = 0x5046_4100;
    pub const ADD: u64 = 0x4144_4400;
    pub const KL: u64 = 0x4b4c_0000;
    pub const OVERSHOOT: u64 = 0x4f56_5200;
    pub const ETA: u64 = 0x4554_4100;
    pub const POISSON: u64 = 0x504f_4953;
    pub const SLLN: u64 = 0x534c_4c4e;
    pub const CALIBRATE: u64 = 0x4341_4c42;
    pub const RUN_LENGTH: u64 = 0x524c_454e;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent master seed for a given purpose.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    splitmix64(master ^ splitmix64(tag))
}

/// RNG for replication `index` under `master`.
pub fn substream(master: u64, index: u64) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(master);
    rng.set_stream(index);
    rng
}

/// Runs `f` for every replication in parallel and returns results in
/// replication order. The first error (lowest index) wins.
pub fn par_replicate<T, F>(reps: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    let out: Vec<Result<T>> = (0..reps).into_par_iter().map(|i| f(i)).collect();
    out.into_iter()
        .enumerate()
        .map(|(i, r)| r.map_err(|e| e.in_replication(i)))
        .collect()
}

/// Runs `f` inside a dedicated rayon pool with `threads` workers
/// (`0` means the global pool).
pub fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    if threads == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Argument(format!("cannot build thread pool: {e}")))?;
    Ok(pool.install(f))
}

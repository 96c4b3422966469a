//! Counter-based seeding: every (master seed, trial, purpose) triple gets its
//! own ChaCha stream, so trials can run in any order or in parallel and
//! still reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// What a random stream is used for inside one trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Drop = 1,
    Pilots = 2,
    Fading = 3,
    Darts = 4,
    Scheduling = 5,
    Detection = 6,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Derives the 64-bit key for a sub-stream.
pub fn stream_key(master: u64, trial: u64, purpose: Purpose) -> u64 {
    splitmix64(splitmix64(splitmix64(master) ^ trial) ^ (purpose as u64))
}

/// Independent generator for one (master, trial, purpose) triple.
pub fn substream(master: u64, trial: u64, purpose: Purpose) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(stream_key(master, trial, purpose));
    rng.set_stream(purpose as u64);
    rng
}

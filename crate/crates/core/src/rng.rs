//! Counter-based random substreams.
//!
//! Every draw is addressed by `(seed, stream, index)`: the seed keys a ChaCha8
//! generator, the stream selects its 64-bit nonce and the index selects a fixed
//! block of words. Results therefore do not depend on how work is split across
//! threads or in what order events are generated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved per index; enough for eight `f64` draws.
const WORDS_PER_INDEX: u128 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stream(pub u64);

impl Stream {
    pub const DECAY_TIMES: Stream = Stream(1);
    pub const JOINT: Stream = Stream(2);
    pub const DETECT: Stream = Stream(3);
    pub const BACKGROUND: Stream = Stream(4);
    pub const ZENO: Stream = Stream(5);
    pub const CHANNELS: Stream = Stream(6);

    /// Sub-stream for repetition `k` of a study, disjoint from the fixed streams.
    pub fn trial(self, k: u64) -> Stream {
        Stream((1 << 63) | (self.0 << 40) | (k & ((1 << 40) - 1)))
    }
}

pub fn substream(seed: u64, stream: Stream, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream.0);
    rng.set_word_pos(index as u128 * WORDS_PER_INDEX);
    rng
}

/// Uniform on `(0, 1]`.
pub fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    1.0 - rng.random::<f64>()
}

//! The bit expander behind `PRNG_EXPANSION` programs.
//!
//! The seed is scrambled once with SplitMix64 (a zero state is replaced by
//! the golden-ratio constant), then xorshift64* words are emitted and read
//! most significant bit first. Coordinate `i` takes bits `[i*m, (i+1)*m)`
//! of that stream as its grid index. Frozen: golden vectors depend on it.

use crate::rng::splitmix64;

const ZERO_STATE_REPLACEMENT: u64 = 0x9E37_79B9_7F4A_7C15;
const XORSHIFT_STAR_MULTIPLIER: u64 = 0x2545_F491_4F6C_DD1D;

pub struct Expander {
    state: u64,
    word: u64,
    left: u32,
}

impl Expander {
    pub fn new(seed: u64) -> Self {
        let s = splitmix64(seed);
        Self {
            state: if s == 0 { ZERO_STATE_REPLACEMENT } else { s },
            word: 0,
            left: 0,
        }
    }

    fn next_word(&mut self) -> u64 {
        let mut x = self.state;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        self.state = x;
        x.wrapping_mul(XORSHIFT_STAR_MULTIPLIER)
    }

    pub fn next_bit(&mut self) -> u64 {
        if self.left == 0 {
            self.word = self.next_word();
            self.left = 64;
        }
        self.left -= 1;
        (self.word >> self.left) & 1
    }

    /// Next `width`-bit field, most significant bit first.
    pub fn next_field(&mut self, width: u32) -> u64 {
        (0..width).fold(0, |acc, _| (acc << 1) | self.next_bit())
    }
}

/// Grid indices for an `n`-coordinate signal at `m` bits.
pub fn expand(seed: u64, n: usize, m: u32) -> Vec<u64> {
    let mut e = Expander::new(seed);
    (0..n).map(|_| e.next_field(m)).collect()
}

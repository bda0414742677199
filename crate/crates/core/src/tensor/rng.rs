use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// SplitMix64 finalizer; a bijection on `u64`.
#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// ChaCha8 generator tagged with the seed it was built from.
///
/// Substream `i` of a generator seeded with `s` is a fresh ChaCha8 generator
/// seeded with `splitmix64(splitmix64(s) ^ i)`. Substreams depend only on
/// `(s, i)`, never on how many values the parent has produced, and can be
/// nested to any depth.
#[derive(Debug, Clone)]
pub struct StreamRng {
    seed: u64,
    inner: ChaCha8Rng,
}

impl StreamRng {
    pub fn new(seed: u64) -> Self {
        StreamRng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn substream(&self, index: u64) -> StreamRng {
        StreamRng::new(splitmix64(splitmix64(self.seed) ^ index))
    }

    /// Substream addressed by a path of indices, e.g. `[fold, epoch]`.
    pub fn substream_path(&self, path: &[u64]) -> StreamRng {
        path.iter().fold(self.clone(), |rng, &i| rng.substream(i))
    }
}

impl RngCore for StreamRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn equal_seeds_give_equal_streams() {
        let mut a = StreamRng::new(42);
        let mut b = StreamRng::new(42);
        for _ in 0..10_000 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
    }

    #[test]
    fn substreams_ignore_parent_position() {
        let mut parent = StreamRng::new(7);
        let before = parent.substream(3).random::<u64>();
        for _ in 0..100 {
            parent.next_u64();
        }
        assert_eq!(before, parent.substream(3).random::<u64>());
        assert_ne!(parent.substream(3).seed(), parent.substream(4).seed());
    }

    #[test]
    fn known_first_draw_is_stable() {
        // Pins the derivation; changing it silently invalidates saved experiments.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }

    #[test]
    fn path_matches_nested_substreams() {
        let r = StreamRng::new(9);
        assert_eq!(
            r.substream_path(&[1, 2]).seed(),
            r.substream(1).substream(2).seed()
        );
    }
}

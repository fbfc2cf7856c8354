//! Block-parallel execution with a sequential fallback.
//!
//! Every data-parallel loop in the crate is expressed as a map over a fixed
//! number of independent blocks whose results are collected in block order.
//! Reductions then run sequentially over that ordered list, so the output is
//! bit-identical whether the blocks ran on a thread pool or in a plain loop.
//! The `parallel` cargo feature (on by default) enables the rayon backend.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// How block maps are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Execution {
    /// Plain iterator loop on the calling thread.
    Sequential,
    /// rayon thread pool when the `parallel` feature is enabled, otherwise
    /// identical to [`Execution::Sequential`].
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this mode actually dispatches to a thread pool in this build.
    pub fn is_threaded(self) -> bool {
        matches!(self, Execution::Parallel) && cfg!(feature = "parallel")
    }
}

/// Map `f` over `0..blocks`, returning results in block order.
pub fn map_blocks<T, F>(exec: Execution, blocks: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..blocks).into_par_iter().map(f).collect()
        }
        _ => (0..blocks).map(f).collect(),
    }
}

/// Split `len` items into contiguous ranges of at most `block` items.
pub fn block_ranges(len: usize, block: usize) -> Vec<std::ops::Range<usize>> {
    assert!(block > 0);
    (0..len.div_ceil(block))
        .map(|b| b * block..((b + 1) * block).min(len))
        .collect()
}

/// SplitMix64 finalizer, used to derive independent sub-seeds.
pub fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic generator for stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn ranges_cover_everything_once() {
        let r = block_ranges(10, 4);
        assert_eq!(r, vec![0..4, 4..8, 8..10]);
        assert!(block_ranges(0, 4).is_empty());
    }

    #[test]
    fn modes_agree() {
        let f = |b: usize| {
            let mut rng = stream_rng(7, b as u64);
            rng.random::<u64>()
        };
        assert_eq!(
            map_blocks(Execution::Sequential, 33, f),
            map_blocks(Execution::Parallel, 33, f)
        );
    }

    #[test]
    fn streams_differ() {
        let a: u64 = stream_rng(1, 0).random();
        let b: u64 = stream_rng(1, 1).random();
        assert_ne!(a, b);
        assert_ne!(mix_seed(1, 1), mix_seed(1, 2));
    }
}

//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper returns results in input order, so callers that reduce the
//! output sequentially get bit-identical numbers with or without the
//! `parallel` feature.

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        map_parallel(items, f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        map_sequential(items, f)
    }
}

/// Maps `f` over the integer range `0..count` (seeds, segment indices).
pub fn map_range<R, F>(count: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}

pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

#[cfg(feature = "parallel")]
pub fn map_parallel<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

/// SplitMix64 finalizer, used to derive independent stream seeds from a
/// base seed and a tag.
pub fn mix_seed(base: u64, tag: u64) -> u64 {
    let mut z = base
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let ys = map(&xs, |x| x * 2);
        assert_eq!(ys, map_sequential(&xs, |x| x * 2));
        assert_eq!(map_range(5, |i| i), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn mixed_seeds_differ() {
        assert_ne!(mix_seed(1, 0), mix_seed(1, 1));
        assert_ne!(mix_seed(1, 0), mix_seed(2, 0));
        assert_eq!(mix_seed(7, 3), mix_seed(7, 3));
    }
}

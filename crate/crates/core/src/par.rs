//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature the maps below run on the rayon global pool
//! when asked to; otherwise, or when `parallel` is false, they run in order on
//! the calling thread. Results are always returned in input order so callers
//! stay deterministic either way.

/// Maps `f` over `items`, in parallel when enabled.
pub fn map<T, R, F>(parallel: bool, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && items.len() > 1 {
        use rayon::prelude::*;
        return items.par_iter().map(f).collect();
    }
    let _ = parallel;
    items.iter().map(f).collect()
}

/// Maps `f` over `0..len`, in parallel when enabled.
pub fn map_range<R, F>(parallel: bool, len: usize, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if parallel && len > 1 {
        use rayon::prelude::*;
        return (0..len).into_par_iter().map(f).collect();
    }
    let _ = parallel;
    (0..len).map(f).collect()
}

/// Whether parallel execution is compiled in.
pub const fn available() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let a = super::map(true, &items, |x| x * x);
        let b = super::map(false, &items, |x| x * x);
        assert_eq!(a, b);
        assert_eq!(super::map_range(true, 5, |i| i + 1), vec![1, 2, 3, 4, 5]);
    }
}

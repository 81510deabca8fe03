//! Order-preserving data-parallel maps.
//!
//! With the `parallel` feature these run on the current rayon pool; without
//! it they are plain sequential loops. Results are collected in input order
//! either way, so callers see identical output regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// `(0..n).map(f).collect()`, possibly in parallel.
#[cfg(feature = "parallel")]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_range<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..n).map(f).collect()
}

/// `items.iter().map(f).collect()`, possibly in parallel.
#[cfg(feature = "parallel")]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Number of worker threads the maps above will use.
pub fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preserves_order() {
        let out = map_range(1000, |i| i * 2);
        assert!(out.iter().enumerate().all(|(i, &v)| v == 2 * i));
        let strs = map_slice(&["a", "bb", "ccc"], |s| s.len());
        assert_eq!(strs, vec![1, 2, 3]);
        assert!(current_workers() >= 1);
    }
}

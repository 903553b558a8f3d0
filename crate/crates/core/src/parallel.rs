//! Data-parallel helpers. With the `parallel` feature the work is spread over
//! the rayon pool; without it the same code runs sequentially.
//!
//! Every helper here produces results that do not depend on the number of
//! threads: maps preserve index order and reductions use fixed chunk
//! boundaries merged left to right.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of worker threads available to the helpers.
pub fn num_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Configure the global pool. `0` keeps rayon's automatic choice. Returns
/// false if the pool had already been initialized.
pub fn init_global_pool(threads: usize) -> bool {
    #[cfg(feature = "parallel")]
    {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if threads > 0 {
            builder = builder.num_threads(threads);
        }
        builder.build_global().is_ok()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        true
    }
}

/// `(0..len).map(f).collect()`, in index order.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Fallible variant of [`map_indexed`].
pub fn try_map_indexed<T, E, F>(len: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Fill `out[i] = f(i)`.
pub fn fill_indexed<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        out.iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
}

/// Apply `f(row_index, row)` to consecutive rows of width `width`.
pub fn for_each_row_mut<T, F>(data: &mut [T], width: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    assert!(width > 0);
    #[cfg(feature = "parallel")]
    {
        data.par_chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
    #[cfg(not(feature = "parallel"))]
    {
        data.chunks_mut(width)
            .enumerate()
            .for_each(|(i, row)| f(i, row));
    }
}

/// Fold the indices `0..len` into accumulators over fixed-size chunks, then
/// merge the chunk accumulators in order. The floating-point result is
/// bit-identical for any thread count.
pub fn chunked_fold<A, Init, Fold, Merge>(
    len: usize,
    chunk: usize,
    init: Init,
    fold: Fold,
    merge: Merge,
) -> A
where
    A: Send,
    Init: Fn() -> A + Sync + Send,
    Fold: Fn(&mut A, usize) + Sync + Send,
    Merge: Fn(A, A) -> A,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    let partials = map_indexed(n_chunks, |c| {
        let mut acc = init();
        for i in c * chunk..((c + 1) * chunk).min(len) {
            fold(&mut acc, i);
        }
        acc
    });
    partials.into_iter().fold(init(), merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_preserves_order() {
        let v = map_indexed(1000, |i| i * 2);
        assert!(v.iter().enumerate().all(|(i, &x)| x == 2 * i));
    }

    #[test]
    fn try_map_propagates_error() {
        let r: Result<Vec<usize>, usize> =
            try_map_indexed(100, |i| if i == 37 { Err(i) } else { Ok(i) });
        assert_eq!(r, Err(37));
    }

    #[test]
    fn chunked_fold_matches_sequential_sum() {
        let xs: Vec<f64> = (0..10_001).map(|i| (i as f64).sin() * 1e3).collect();
        let par = chunked_fold(xs.len(), 64, || 0.0, |a, i| *a += xs[i], |a, b| a + b);
        // Same chunking done by hand.
        let mut seq = 0.0;
        for c in xs.chunks(64) {
            let mut s = 0.0;
            for x in c {
                s += x;
            }
            seq += s;
        }
        assert_eq!(par.to_bits(), seq.to_bits());
    }

    #[test]
    fn rows_are_visited_once() {
        let mut data = vec![0usize; 12];
        for_each_row_mut(&mut data, 4, |r, row| {
            row.iter_mut().for_each(|x| *x += r + 1)
        });
        assert_eq!(data, vec![1, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3]);
    }
}

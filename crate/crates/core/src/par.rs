//! Order-preserving data-parallel helpers. With the `parallel` feature these
//! run on the rayon pool; without it they are plain iterator loops. Results
//! always come back in input order, so callers that reduce them sequentially
//! get bit-identical output from either build.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Vec<R> {
    items.iter().map(f).collect()
}

/// Applies `f` to each `(state, input)` pair.
#[cfg(feature = "parallel")]
pub fn zip_map_mut<S: Send, T: Sync, R: Send>(states: &mut [S], inputs: &[T], f: impl Fn(&mut S, &T) -> R + Sync + Send) -> Vec<R> {
    states.par_iter_mut().zip(inputs.par_iter()).map(|(s, t)| f(s, t)).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn zip_map_mut<S: Send, T: Sync, R: Send>(states: &mut [S], inputs: &[T], f: impl Fn(&mut S, &T) -> R + Sync + Send) -> Vec<R> {
    states.iter_mut().zip(inputs).map(|(s, t)| f(s, t)).collect()
}

/// Runs `f` with the current thread's work confined to a single worker.
/// Used by the benchmarks to compare against the parallel path.
#[cfg(feature = "parallel")]
pub fn sequential<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .expect("single-thread pool")
        .install(f)
}

#[cfg(not(feature = "parallel"))]
pub fn sequential<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    f()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_keeps_order() {
        let v: Vec<u64> = (0..1000).collect();
        assert_eq!(map(&v, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
    }

    #[test]
    fn zip_map_mut_updates_states() {
        let mut s = vec![0; 5];
        let r = zip_map_mut(&mut s, &[1, 2, 3, 4, 5], |s, &t| {
            *s = t * 10;
            t
        });
        assert_eq!(s, vec![10, 20, 30, 40, 50]);
        assert_eq!(r, vec![1, 2, 3, 4, 5]);
        assert_eq!(sequential(|| map(&[1, 2], |x| x + 1)), vec![2, 3]);
    }
}

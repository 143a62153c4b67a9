//! Execution policy for the enumeration kernels.
//!
//! Every hot loop in the crate is a map or reduction over an index range. The
//! kernels take an [`Exec`] so callers (and the benches) can pick between the
//! rayon path and a plain sequential loop. Without the `parallel` feature both
//! variants run sequentially.
//!
//! Floating-point reductions split the range into fixed-size chunks that do
//! not depend on the thread count, so results are bit-identical across
//! policies and runs.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used for deterministic floating-point reductions.
const CHUNK: usize = 1024;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f).collect()` in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Exact integer sum of `f(i)` over `0..n`.
    pub fn sum_u64<F>(self, n: usize, f: F) -> u64
    where
        F: Fn(usize) -> u64 + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).sum();
        }
        (0..n).map(f).sum()
    }

    /// Sum of `f(i)` over `0..n` with a fixed reduction tree.
    pub fn sum_f64<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let chunks = n.div_ceil(CHUNK);
        let partial = self.map(chunks, |c| {
            let lo = c * CHUNK;
            let hi = (lo + CHUNK).min(n);
            neumaier_sum((lo..hi).map(&f))
        });
        neumaier_sum(partial)
    }

    /// Maximum of `f(i)` over `0..n` with the smallest index winning ties.
    pub fn argmax_f64<F>(self, n: usize, f: F) -> Option<(usize, f64)>
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let vals = self.map(n, f);
        let mut best: Option<(usize, f64)> = None;
        for (i, v) in vals.into_iter().enumerate() {
            match best {
                Some((_, b)) if v <= b => {}
                _ => best = Some((i, v)),
            }
        }
        best
    }
}

/// Compensated (Neumaier) summation.
pub fn neumaier_sum<I: IntoIterator<Item = f64>>(it: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for x in it {
        let t = sum + x;
        if sum.abs() >= x.abs() {
            comp += (sum - t) + x;
        } else {
            comp += (x - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let a = Exec::Sequential.sum_f64(10_000, f);
        let b = Exec::Parallel.sum_f64(10_000, f);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_eq!(
            Exec::Sequential.sum_u64(5000, |i| i as u64),
            Exec::Parallel.sum_u64(5000, |i| i as u64)
        );
    }

    #[test]
    fn neumaier_recovers_cancellation() {
        let v = [1.0, 1e100, 1.0, -1e100];
        assert_eq!(neumaier_sum(v), 2.0);
    }

    #[test]
    fn argmax_prefers_first() {
        let v = [1.0, 3.0, 3.0, 2.0];
        assert_eq!(Exec::Parallel.argmax_f64(4, |i| v[i]), Some((1, 3.0)));
        assert_eq!(Exec::Sequential.argmax_f64(0, |i| v[i]), None);
    }
}

//! Deterministic fork-join helper for embarrassingly parallel index sweeps.
//!
//! Results are written back by index, so the output is identical for any
//! thread count. Work items (grid rows, objective cells) cost roughly the
//! same, so static chunking balances well without any coordination.

/// Evaluates `f(i)` for `i in 0..n` on up to `threads` worker threads and
/// returns the results in index order. `threads <= 1` runs inline.
pub fn run_indexed<T, F>(n: usize, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    if threads <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let workers = threads.min(n);
    let chunk = n.div_ceil(workers);
    let mut out: Vec<Option<T>> = Vec::with_capacity(n);
    out.resize_with(n, || None);
    std::thread::scope(|scope| {
        for (w, slots) in out.chunks_mut(chunk).enumerate() {
            let f = &f;
            scope.spawn(move || {
                for (k, slot) in slots.iter_mut().enumerate() {
                    *slot = Some(f(w * chunk + k));
                }
            });
        }
    });
    out.into_iter().map(|slot| slot.expect("every index was visited")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_agree() {
        let f = |i: usize| (i as f64).sin() * (i as f64 + 1.0).ln();
        let seq = run_indexed(257, 1, f);
        for threads in [2, 3, 8] {
            let par = run_indexed(257, threads, f);
            assert_eq!(seq.len(), par.len());
            for (a, b) in seq.iter().zip(&par) {
                assert_eq!(a.to_bits(), b.to_bits(), "bitwise identical across thread counts");
            }
        }
    }

    #[test]
    fn handles_empty_and_single() {
        assert!(run_indexed(0, 4, |i| i).is_empty());
        assert_eq!(run_indexed(1, 4, |i| i * 10), vec![0]);
    }
}

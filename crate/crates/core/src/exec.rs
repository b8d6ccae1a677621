//! Deterministic map/reduce helpers shared by the data-parallel inner loops.
//!
//! Work is always split by index into fixed chunks; `map_collect` evaluates
//! the chunks (on rayon with the `parallel` feature, plain loop without) and
//! returns results in index order. Callers fold the collected partials
//! sequentially, so the final floating-point reduction order never depends
//! on the thread count or on the feature flag.

#[cfg(feature = "parallel")]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_collect<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Neumaier-compensated accumulator.
#[derive(Clone, Copy, Debug, Default)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    pub(crate) fn new() -> Self {
        Self::default()
    }

    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_collect_preserves_index_order() {
        let v = map_collect(100, |i| i * i);
        assert_eq!(v[7], 49);
        assert_eq!(v.len(), 100);
    }

    #[test]
    fn kahan_recovers_cancellation() {
        // Naive summation returns 0 here; Neumaier keeps the small terms.
        let mut k = Kahan::new();
        for x in [1.0, 1e100, 1.0, -1e100] {
            k.add(x);
        }
        assert_eq!(k.value(), 2.0);
    }
}

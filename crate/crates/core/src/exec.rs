//! Data-parallel helpers with a sequential fallback.
//!
//! Results are always collected in index order, so the output of a job never
//! depends on thread scheduling. Without the `parallel` feature,
//! `Execution::Parallel` runs sequentially.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Execution {
    #[default]
    Parallel,
    Sequential,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// `(0..n).map(f).collect()`, in parallel when enabled.
pub fn map_indexed<T, F>(exec: Execution, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Index of the minimum by `key`; ties go to the lowest index.
pub fn argmin_by<T>(items: &[T], key: impl Fn(&T) -> f64) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, item) in items.iter().enumerate() {
        let k = key(item);
        match best {
            Some((_, b)) if !(k < b) => {}
            _ => best = Some((i, k)),
        }
    }
    best.map(|(i, _)| i)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn both_modes_agree() {
        let a = map_indexed(Execution::Parallel, 100, |i| i * i);
        let b = map_indexed(Execution::Sequential, 100, |i| i * i);
        assert_eq!(a, b);
    }

    #[test]
    fn argmin_ties_to_lowest_index() {
        assert_eq!(argmin_by(&[3.0, 1.0, 1.0, 2.0], |x| *x), Some(1));
        assert_eq!(argmin_by::<f64>(&[], |x| *x), None);
    }
}

//! Thread-pool executor for the off-line stage and the error series.

use std::sync::Mutex;
use std::time::Instant;

use homs_core::homog::Executor;
use rayon::prelude::*;

/// Runs jobs on the rayon pool. Results come back in job order, so output does not depend
/// on scheduling. Each call to `map` is one pass; the wall time of every job is recorded.
#[derive(Debug, Default)]
pub struct Parallel {
    timings: Mutex<Vec<Vec<f64>>>,
}

impl Parallel {
    pub fn new() -> Self {
        Self::default()
    }

    /// Per-job seconds for each pass so far.
    pub fn timings(&self) -> Vec<Vec<f64>> {
        self.timings.lock().expect("timing lock").clone()
    }
}

impl Executor for Parallel {
    fn map<T: Send>(&self, n: usize, f: &(dyn Fn(usize) -> T + Sync)) -> Vec<T> {
        let out: Vec<(T, f64)> = (0..n)
            .into_par_iter()
            .map(|i| {
                let start = Instant::now();
                let v = f(i);
                (v, start.elapsed().as_secs_f64())
            })
            .collect();
        let (values, secs): (Vec<T>, Vec<f64>) = out.into_iter().unzip();
        self.timings.lock().expect("timing lock").push(secs);
        values
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_job_order() {
        let p = Parallel::new();
        let v = p.map(100, &|i| i * i);
        assert_eq!(v, (0..100).map(|i| i * i).collect::<Vec<_>>());
        assert_eq!(p.timings()[0].len(), 100);
    }
}

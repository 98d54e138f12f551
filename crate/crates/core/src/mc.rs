//! Seeded, chunked Monte Carlo ensembles.
//!
//! Samples are grouped into fixed-size chunks. Chunk `c` draws from the
//! ChaCha20 stream `c` of the run seed, and chunk accumulators are merged in
//! chunk order, so results do not depend on the worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

pub const RNG_ID: &str = "rand_chacha::ChaCha20Rng seed_from_u64(seed), set_stream(chunk)";
pub const CHUNK_SIZE: usize = 512;

pub type Rng = ChaCha20Rng;

/// Generator for substream `stream` of `seed`.
pub fn substream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Number of Euler steps of size `dt` covering `[0, t]`; `dt` must divide `t`.
pub fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(t > 0.0 && dt > 0.0 && t.is_finite() && dt.is_finite()) {
        return Err(LabError::InvalidSteps(format!("t = {t}, dt = {dt}")));
    }
    let n = (t / dt).round();
    if n < 1.0 || (n * dt - t).abs() > 1e-9 * t {
        return Err(LabError::InvalidSteps(format!(
            "dt = {dt} does not divide t = {t}"
        )));
    }
    Ok(n as usize)
}

/// Explicit count, else `PARALLELISM`, else the rayon default.
pub fn worker_count(explicit: Option<usize>) -> usize {
    explicit
        .filter(|&w| w > 0)
        .or_else(|| {
            std::env::var("PARALLELISM")
                .ok()
                .and_then(|v| v.trim().parse().ok())
                .filter(|&w: &usize| w > 0)
        })
        .unwrap_or_else(rayon::current_num_threads)
}

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }

    pub fn estimate(&self, seed: u64) -> EnsembleEstimate {
        EnsembleEstimate {
            mean: self.mean,
            std_error: self.std_error(),
            count: self.count,
            seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: u64,
    pub seed: u64,
}

impl EnsembleEstimate {
    /// `|a − b| ≤ k·√(se_a² + se_b²)`.
    pub fn agrees_with(&self, other: &EnsembleEstimate, k: f64) -> bool {
        (self.mean - other.mean).abs() <= k * self.std_error.hypot(other.std_error)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Ensemble {
    pub samples: usize,
    pub seed: u64,
    pub workers: Option<usize>,
}

impl Ensemble {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: None,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    /// Runs `sample(rng, out)` once per sample; `out` has `stats` slots
    /// and each slot is accumulated separately.
    pub fn run<F>(&self, stats: usize, sample: F) -> Result<Vec<Welford>>
    where
        F: Fn(&mut Rng, &mut [f64]) -> Result<()> + Sync,
    {
        if self.samples < 2 {
            return Err(LabError::InvalidArgument(
                "an ensemble needs at least two samples".into(),
            ));
        }
        let chunks = self.samples.div_ceil(CHUNK_SIZE);
        let work = |c: usize| -> Result<Vec<Welford>> {
            let mut rng = substream(self.seed, c as u64);
            let mut acc = vec![Welford::default(); stats];
            let mut buf = vec![0.0; stats];
            let end = ((c + 1) * CHUNK_SIZE).min(self.samples);
            for _ in c * CHUNK_SIZE..end {
                sample(&mut rng, &mut buf)?;
                for (a, &v) in acc.iter_mut().zip(&buf) {
                    a.push(v);
                }
            }
            Ok(acc)
        };
        let workers = worker_count(self.workers);
        let parts: Vec<Result<Vec<Welford>>> = if workers <= 1 {
            (0..chunks).map(work).collect()
        } else {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(workers)
                .build()
                .map_err(|e| LabError::InvalidArgument(format!("thread pool: {e}")))?;
            pool.install(|| (0..chunks).into_par_iter().map(work).collect())
        };
        let mut total = vec![Welford::default(); stats];
        for part in parts {
            for (t, p) in total.iter_mut().zip(&part?) {
                t.merge(p);
            }
        }
        Ok(total)
    }
}

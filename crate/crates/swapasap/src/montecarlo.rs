//! Seeded Monte Carlo simulation of the swap-ASAP protocol.
//!
//! Each run draws the first-success round of every segment from a
//! geometric law by inverse-CDF; with a cut-off, a window whose slowest
//! segment exceeds `T_c` is discarded wholesale and redrawn, which is
//! exactly the restart the analytic cut-off formulas model. The empirical
//! roughness distribution, delivery times, and `E[lambda^K]` estimates
//! come with binomial standard errors.
//!
//! Reproducibility: the run stream is partitioned into fixed-size chunks,
//! chunk `c` uses the seeded counter-mode generator on stream `c`, and all
//! accumulators are integers, so results are bit-identical for a given
//! seed no matter how many worker threads execute the chunks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::chain::{roughness, ChainParams, Instance};
use crate::error::{NoiseError, Result};

/// Runs per deterministic RNG stream.
const CHUNK: u64 = 4096;
/// Hard cap on total runs per call.
const RUNS_CAP: u64 = 100_000_000;

/// One simulated delivery.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Success rounds of the surviving window.
    pub instance: Instance,
    pub roughness: u64,
    /// Rounds consumed in total: every discarded window in full, plus the
    /// rounds of the surviving one.
    pub delivery_rounds: u64,
    /// Windows discarded by the cut-off.
    pub resets: u64,
}

/// Geometric on {1, 2, ...} with success probability `1 - q`, by
/// inverse CDF. Rounds where `u` lands exactly on 1.0 map to 1.
fn geometric(q: f64, rng: &mut impl Rng) -> u32 {
    if q == 0.0 {
        return 1;
    }
    let mut u: f64 = rng.gen();
    while u == 0.0 {
        u = rng.gen();
    }
    let t = (u.ln() / q.ln()).ceil();
    if t < 1.0 {
        1
    } else if t >= u32::MAX as f64 {
        u32::MAX
    } else {
        t as u32
    }
}

/// Simulates one delivery. With a tight cut-off and small `p` the
/// expected number of redraws is `1 / (1 - q^{T_c})^n`; keeping that
/// feasible is the caller's job.
pub fn sample_run(params: &ChainParams, rng: &mut impl Rng) -> RunRecord {
    let q = params.q();
    let mut resets: u64 = 0;
    loop {
        let t: Vec<u32> = (0..params.n).map(|_| geometric(q, rng)).collect();
        let max = *t.iter().max().expect("n >= 1");
        if let Some(t_c) = params.cutoff {
            if max > t_c {
                resets += 1;
                continue;
            }
        }
        let instance = Instance::new(t).expect("sampled times are positive");
        let k = roughness(&instance);
        return RunRecord {
            instance,
            roughness: k,
            delivery_rounds: resets * params.cutoff.map_or(0, u64::from) + max as u64,
            resets,
        };
    }
}

/// Empirical roughness distribution with uncertainty, plus delivery
/// statistics, from `runs` independent samples.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalPmf {
    /// Hits per roughness value.
    pub counts: Vec<u64>,
    /// `counts / runs`.
    pub probs: Vec<f64>,
    /// Binomial standard error per bin, `sqrt(p (1-p) / runs)`.
    pub std_errs: Vec<f64>,
    pub runs: u64,
    pub mean_delivery_rounds: f64,
    /// Standard error of the delivery mean.
    pub se_delivery_rounds: f64,
    pub total_resets: u64,
}

impl EmpiricalPmf {
    /// Plug-in estimate of `E[lambda^K]` with its standard error, from the
    /// sample variance of `lambda^K`.
    pub fn expected_lambda(&self, lambda: f64) -> (f64, f64) {
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        let mut pow = 1.0;
        for &p in &self.probs {
            m1 += p * pow;
            m2 += p * pow * pow;
            pow *= lambda;
        }
        let var = (m2 - m1 * m1).max(0.0);
        (m1, (var / self.runs as f64).sqrt())
    }
}

#[derive(Default)]
struct Tally {
    counts: Vec<u64>,
    delivery_sum: u128,
    delivery_sq_sum: u128,
    resets: u64,
    runs: u64,
}

impl Tally {
    fn record(&mut self, run: &RunRecord) {
        let k = run.roughness as usize;
        if self.counts.len() <= k {
            self.counts.resize(k + 1, 0);
        }
        self.counts[k] += 1;
        self.delivery_sum += run.delivery_rounds as u128;
        self.delivery_sq_sum += (run.delivery_rounds as u128) * (run.delivery_rounds as u128);
        self.resets += run.resets;
        self.runs += 1;
    }

    fn merge(mut self, other: Tally) -> Tally {
        if self.counts.len() < other.counts.len() {
            self.counts.resize(other.counts.len(), 0);
        }
        for (slot, c) in self.counts.iter_mut().zip(other.counts.iter()) {
            *slot += c;
        }
        self.delivery_sum += other.delivery_sum;
        self.delivery_sq_sum += other.delivery_sq_sum;
        self.resets += other.resets;
        self.runs += other.runs;
        self
    }
}

/// Estimates the roughness pmf from `runs` simulations. Identical
/// `(params, runs, seed)` give identical results regardless of thread
/// count.
pub fn estimate_pmf(params: &ChainParams, runs: u64, seed: u64) -> Result<EmpiricalPmf> {
    if runs == 0 {
        return Err(NoiseError::InvalidParameter("runs must be at least 1".into()));
    }
    if runs > RUNS_CAP {
        return Err(NoiseError::ResourceLimit {
            what: "Monte Carlo runs",
            requested: runs,
            cap: RUNS_CAP,
        });
    }
    let chunks = runs.div_ceil(CHUNK);
    let total = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk + 1);
            let lo = chunk * CHUNK;
            let hi = (lo + CHUNK).min(runs);
            let mut tally = Tally::default();
            for _ in lo..hi {
                tally.record(&sample_run(params, &mut rng));
            }
            tally
        })
        .reduce(Tally::default, Tally::merge);
    debug_assert_eq!(total.runs, runs);
    let rf = runs as f64;
    let probs: Vec<f64> = total.counts.iter().map(|&c| c as f64 / rf).collect();
    let std_errs: Vec<f64> = probs.iter().map(|&p| (p * (1.0 - p) / rf).sqrt()).collect();
    let mean = total.delivery_sum as f64 / rf;
    let mean_sq = total.delivery_sq_sum as f64 / rf;
    let variance = (mean_sq - mean * mean).max(0.0);
    Ok(EmpiricalPmf {
        counts: total.counts,
        probs,
        std_errs,
        runs,
        mean_delivery_rounds: mean,
        se_delivery_rounds: (variance / rf).sqrt(),
        total_resets: total.resets,
    })
}

//! Secret-key fractions, delivery times, and the two optimizers built on
//! them.
//!
//! A Werner state with parameter `Lambda` feeds BB84 with bit and phase
//! error rate `(1 - Lambda) / 2`, so the asymptotic secret-key fraction is
//! `max(0, 1 - 2 h((1 - Lambda)/2))` with `h` the binary entropy. The
//! fraction hits zero at a threshold `Lambda` just below 0.78, computed
//! here by bisection rather than hard-coded ([`lambda_min`]).
//!
//! Delivery time is the number of rounds until end-to-end entanglement:
//! the maximum of `n` geometrics without a cut-off, and a restart-aware
//! closed form with one. The secret-key rate per round divides the
//! fraction by the delivery time; [`skr_binned`] improves on plugging in
//! `E[Lambda]` by averaging the fraction over the roughness distribution,
//! which convexity guarantees can only help.

use std::sync::OnceLock;

use rayon::prelude::*;

use crate::chain::{
    apply_generation_noise, fidelity_from_lambda, segment_success_prob, ChainParams, WernerParam,
};
use crate::distribution::RoughnessPmf;
use crate::error::{NoiseError, Result};
use crate::recursion::{expected_lambda, expected_lambda_cutoff};

/// Binary entropy in bits, with the `0 log 0 = 0` convention.
pub fn binary_entropy(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    -(x * x.log2()) - (1.0 - x) * (1.0 - x).log2()
}

/// Asymptotic BB84 secret-key fraction of a Werner state.
pub fn skf_bb84(w: WernerParam) -> f64 {
    let e = (1.0 - w.value()) / 2.0;
    (1.0 - 2.0 * binary_entropy(e)).max(0.0)
}

/// Smallest Werner parameter with a positive secret-key fraction, solved
/// by bisection once and cached. The commonly quoted rounded value is
/// 0.78; the computed root is near 0.77994.
pub fn lambda_min() -> f64 {
    static CACHE: OnceLock<f64> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let margin = |lam: f64| 1.0 - 2.0 * binary_entropy((1.0 - lam) / 2.0);
        let (mut lo, mut hi) = (0.5f64, 0.95f64);
        debug_assert!(margin(lo) < 0.0 && margin(hi) > 0.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if margin(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    })
}

fn validate_np(n: usize, p: f64) -> Result<()> {
    if n == 0 {
        return Err(NoiseError::InvalidParameter("n must be at least 1".into()));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(NoiseError::InvalidParameter(format!("p = {p} outside (0, 1]")));
    }
    Ok(())
}

/// Mean rounds until every segment has succeeded, `E[max of n
/// geometrics]`, without a cut-off.
///
/// Small `n` uses the inclusion-exclusion closed form
/// `sum_k C(n,k) (-1)^(k+1) / (1 - (1-p)^k)`; its alternating terms grow
/// like `2^n`, so larger `n` switches to the equivalent survival-function
/// sum `sum_{t>=0} (1 - (1 - q^t)^n)`, which is monotone and stable.
pub fn expected_delivery_no_cutoff(n: usize, p: f64) -> Result<f64> {
    validate_np(n, p)?;
    let q = 1.0 - p;
    if q == 0.0 {
        return Ok(1.0);
    }
    if n <= 30 {
        let mut sum = 0.0f64;
        let mut binom = 1.0f64; // C(n, k), updated multiplicatively
        for k in 1..=n {
            binom *= (n - k + 1) as f64 / k as f64;
            let term = binom / (1.0 - q.powi(k as i32));
            sum += if k % 2 == 1 { term } else { -term };
        }
        Ok(sum)
    } else {
        let mut sum = 0.0f64;
        let mut qt = 1.0f64;
        loop {
            let term = 1.0 - (1.0 - qt).powi(n as i32);
            sum += term;
            qt *= q;
            if term < 1e-16 * sum {
                return Ok(sum);
            }
        }
    }
}

/// Mean delivery time with a global cut-off `t_c`, counting every
/// discarded window in full plus the rounds of the surviving attempt.
pub fn expected_delivery_cutoff(n: usize, p: f64, t_c: u32) -> Result<f64> {
    validate_np(n, p)?;
    if t_c == 0 {
        return Err(NoiseError::InvalidParameter("cut-off t_c must be at least 1".into()));
    }
    let q = 1.0 - p;
    let window = |t: u32| (1.0 - q.powi(t as i32)).powi(n as i32);
    let p_succ = window(t_c);
    let mut rounds_given_success = 0.0f64;
    for t in 1..=t_c {
        rounds_given_success += t as f64 * (window(t) - window(t - 1));
    }
    Ok((1.0 / p_succ - 1.0) * t_c as f64 + rounds_given_success / p_succ)
}

/// Mean delivery time if every window always runs its full `t_c` rounds
/// before the result is inspected.
pub fn expected_delivery_wait_full_window(n: usize, p: f64, t_c: u32) -> Result<f64> {
    validate_np(n, p)?;
    if t_c == 0 {
        return Err(NoiseError::InvalidParameter("cut-off t_c must be at least 1".into()));
    }
    let q = 1.0 - p;
    Ok(t_c as f64 / (1.0 - q.powi(t_c as i32)).powi(n as i32))
}

/// Secret-key fraction and rate of the roughness-binned average, when
/// requested.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BinnedRates {
    pub skf_binned: f64,
    pub skr_binned: f64,
    /// Last roughness bin that can still contribute key.
    pub k_max: usize,
}

/// End-to-end performance figures of one chain configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    /// Mean end-to-end Werner parameter, generation and swap noise
    /// included.
    pub expected_lambda: f64,
    /// Mean fidelity `3 Lambda / 4 + 1/4` of that Werner parameter.
    pub fidelity: f64,
    /// Secret-key fraction evaluated at the mean Werner parameter.
    pub skf: f64,
    /// Mean rounds per delivered pair.
    pub expected_delivery_rounds: f64,
    /// Secret key per protocol round, `skf / delivery`.
    pub skr_per_round: f64,
    pub binned: Option<BinnedRates>,
}

fn mean_chain_lambda(params: &ChainParams) -> Result<f64> {
    match params.cutoff {
        None => expected_lambda(params.n, params.q(), params.lambda),
        Some(t_c) => expected_lambda_cutoff(params.n, params.q(), params.lambda, t_c),
    }
}

fn delivery_rounds(params: &ChainParams) -> Result<f64> {
    match params.cutoff {
        None => expected_delivery_no_cutoff(params.n, params.p),
        Some(t_c) => expected_delivery_cutoff(params.n, params.p, t_c),
    }
}

/// Full per-round rate pipeline at the mean Werner parameter.
pub fn skr(params: &ChainParams) -> Result<RateReport> {
    let chain_mean = mean_chain_lambda(params)?;
    let total = apply_generation_noise(WernerParam::new(chain_mean)?, params);
    let skf = skf_bb84(total);
    let delivery = delivery_rounds(params)?;
    Ok(RateReport {
        expected_lambda: total.value(),
        fidelity: fidelity_from_lambda(total),
        skf,
        expected_delivery_rounds: delivery,
        skr_per_round: skf / delivery,
        binned: None,
    })
}

/// Roughness bins beyond this index fall below [`lambda_min`] and cannot
/// contribute key.
fn key_bearing_bins(lambda: f64) -> Option<usize> {
    if lambda == 1.0 {
        None // every bin has Lambda = 1
    } else {
        Some((lambda_min().ln() / lambda.ln()).ceil() as usize)
    }
}

/// Rate pipeline with the secret-key fraction averaged over the roughness
/// distribution instead of evaluated at its mean. The fraction is convex
/// in `Lambda`, so this never loses against [`skr`]; the pmf's tail bound
/// caps the averaging error because each omitted bin contributes at most
/// its probability.
pub fn skr_binned(params: &ChainParams, pmf: &RoughnessPmf) -> Result<RateReport> {
    if pmf.n != params.n || pmf.cutoff != params.cutoff || (pmf.q - params.q()).abs() > 1e-12 {
        return Err(NoiseError::InvalidParameter(format!(
            "pmf was built for (n = {}, q = {}, cutoff = {:?}), not (n = {}, q = {}, cutoff = {:?})",
            pmf.n,
            pmf.q,
            pmf.cutoff,
            params.n,
            params.q(),
            params.cutoff
        )));
    }
    let mut base = skr(params)?;
    let gen = params.generation_factor();
    let k_hi = match key_bearing_bins(params.lambda) {
        None => pmf.probs.len() - 1,
        Some(k_max) => k_max.min(pmf.probs.len() - 1),
    };
    let mut skf_binned = 0.0f64;
    let mut pow = 1.0f64;
    for k in 0..=k_hi {
        skf_binned += pmf.probs[k] * skf_bb84(WernerParam::new(pow * gen)?);
        pow *= params.lambda;
    }
    let skr_binned = skf_binned / base.expected_delivery_rounds;
    base.binned = Some(BinnedRates {
        skf_binned,
        skr_binned,
        k_max: k_hi,
    });
    Ok(base)
}

/// Best global cut-off for a fixed chain, by exhaustive scan.
///
/// Candidates are every value in `t_values` followed by "no cut-off";
/// each is scored by [`skr`] with the input's own cut-off field replaced.
/// Strictly better candidates win, so ties resolve to the smallest
/// cut-off, and removing the cut-off must strictly pay before `None` is
/// returned. Candidate evaluations run in parallel; the reduction order
/// is fixed, so results are reproducible.
pub fn optimize_cutoff(
    params: &ChainParams,
    t_values: &[u32],
) -> Result<(Option<u32>, RateReport)> {
    if t_values.is_empty() {
        return Err(NoiseError::InvalidParameter(
            "cut-off candidate list must be nonempty".into(),
        ));
    }
    let mut candidates: Vec<Option<u32>> = t_values.iter().copied().map(Some).collect();
    candidates.push(None);
    let scored: Vec<(Option<u32>, RateReport)> = candidates
        .par_iter()
        .map(|&cutoff| {
            let mut trial = params.clone();
            trial.cutoff = cutoff;
            skr(&trial).map(|report| (cutoff, report))
        })
        .collect::<Result<_>>()?;
    let mut best = scored[0];
    for &(cutoff, report) in &scored[1..] {
        if report.skr_per_round > best.1.skr_per_round {
            best = (cutoff, report);
        }
    }
    Ok(best)
}

/// One row of a segment-count scan: the best cut-off found for `n`
/// segments and its figures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentOptimum {
    pub n: usize,
    /// Per-segment success probability implied by the span.
    pub p: f64,
    pub cutoff: Option<u32>,
    pub report: RateReport,
}

/// Scans segment counts for a fixed total span: each `n` gets
/// `p = exp(-L / (n l_att))`, per-link generation noise `lambda_gen`, and
/// its own cut-off optimization over `t_values`.
pub fn optimize_segments(
    l_total: f64,
    lambda: f64,
    lambda_gen: f64,
    n_values: &[usize],
    t_values: &[u32],
    l_att: f64,
) -> Result<Vec<SegmentOptimum>> {
    if n_values.is_empty() {
        return Err(NoiseError::InvalidParameter(
            "segment-count candidate list must be nonempty".into(),
        ));
    }
    n_values
        .iter()
        .map(|&n| {
            let p = segment_success_prob(l_total, n, l_att)?;
            let params = ChainParams::build(
                n,
                p,
                lambda,
                vec![lambda_gen; n],
                vec![1.0; n - 1],
                None,
            )?;
            let (cutoff, report) = optimize_cutoff(&params, t_values)?;
            Ok(SegmentOptimum { n, p, cutoff, report })
        })
        .collect()
}

//! Distribution of the roughness `K` over success-round instances.
//!
//! The joint law of `(t_1, ..., t_n)` is a product of geometrics, and `K`
//! accumulates `|t_i - t_{i+1}|` along the chain, so the pair
//! `(t_i, partial K)` is a Markov state. [`roughness_pmf`] runs that
//! forward dynamic programme. A naive transition touches every `(t, t')`
//! pair; splitting it by the sign of `t' - t` turns the absolute-value
//! shift into two running prefix passes, one per direction, making each
//! segment linear in the state size.
//!
//! Truncations are explicit and accounted: the per-segment time axis stops
//! at the smallest `T` with `n q^T / (1 - q) < tail_eps`, and the roughness
//! axis starts at `ceil(10 n / p)` and doubles until the requested mass is
//! captured (a single tall segment adds both its rise and its fall to `K`,
//! so the tail decays like `q^{k/2}`, which can outrun the starting cap).
//! The call fails rather than under-report when the state budget runs out,
//! and the returned [`RoughnessPmf`] carries an upper bound on everything
//! omitted.
//!
//! [`brute_force_expected_lambda`] and [`brute_force_roughness_pmf`]
//! enumerate instances literally; they exist to cross-check everything
//! else and refuse workloads past `2e8` instances.

use crate::error::{NoiseError, Result};

/// Hard cap on DP state entries, to bound memory.
const STATE_ENTRY_CAP: u64 = 20_000_000;
/// Hard cap on brute-force instance count.
const BRUTE_FORCE_CAP: u64 = 200_000_000;

/// Probability mass function of the roughness `K`, with its truncation
/// provenance.
#[derive(Debug, Clone)]
pub struct RoughnessPmf {
    /// `probs[k] = P(K = k)` for `k = 0..probs.len()`.
    pub probs: Vec<f64>,
    /// Upper bound on the total mass omitted by truncation.
    pub tail_bound: f64,
    pub n: usize,
    pub q: f64,
    pub cutoff: Option<u32>,
    /// Per-segment time horizon the DP actually used.
    pub t_max: u32,
}

fn validate_common(n: usize, q: f64) -> Result<()> {
    if n == 0 {
        return Err(NoiseError::InvalidParameter(
            "segment count n must be at least 1".into(),
        ));
    }
    if !(0.0..1.0).contains(&q) {
        return Err(NoiseError::InvalidParameter(format!(
            "per-round failure probability q must lie in [0, 1), got {q}"
        )));
    }
    Ok(())
}

fn validate_tail_eps(tail_eps: f64) -> Result<()> {
    if !(tail_eps > 0.0 && tail_eps < 1.0) {
        return Err(NoiseError::InvalidParameter(format!(
            "tail_eps must lie in (0, 1), got {tail_eps}"
        )));
    }
    Ok(())
}

/// Smallest horizon with `n q^T / (1 - q) < tail_eps`.
fn horizon_for(n: usize, q: f64, tail_eps: f64) -> u32 {
    if q == 0.0 {
        return 1;
    }
    let t = ((tail_eps * (1.0 - q) / n as f64).ln() / q.ln()).ceil();
    (t.max(1.0) as u32).max(1)
}

/// Shifts a roughness row up by one (`K += 1`), returning mass pushed past
/// the cap.
fn shift_up(row: &mut [f64]) -> f64 {
    let last = row.len() - 1;
    let spilled = row[last];
    for k in (1..=last).rev() {
        row[k] = row[k - 1];
    }
    row[0] = 0.0;
    spilled
}

struct DpOutcome {
    box_pmf: Vec<f64>,
    spilled: f64,
}

/// Forward DP over `(t, partial K)` with per-segment weights `w[t]`,
/// `t = 1..=t_hi`. Weights need not sum to one; the caller owns whatever
/// normalisation they encode.
fn roughness_dp(n: usize, w: &[f64], k_cap: usize) -> Result<DpOutcome> {
    let t_hi = w.len() - 1;
    let entries = (t_hi as u64 + 1) * (k_cap as u64 + 1);
    if entries > STATE_ENTRY_CAP {
        return Err(NoiseError::ResourceLimit {
            what: "roughness DP state entries",
            requested: entries,
            cap: STATE_ENTRY_CAP,
        });
    }
    let width = k_cap + 1;
    // state[t * width + k], t = 0 row unused.
    let mut state = vec![0.0f64; (t_hi + 1) * width];
    for t in 1..=t_hi {
        state[t * width] = w[t];
    }
    let mut spilled = 0.0f64;
    for _ in 1..n {
        let mut next = vec![0.0f64; (t_hi + 1) * width];
        // Ascending pass: contributions from t <= t', shift grows with t'.
        // Spill crossing the cap would next be scaled by w[t'] and by later
        // segment weights (each <= 1), so w[t'] * spill bounds its mass.
        let mut carry = vec![0.0f64; width];
        for t in 1..=t_hi {
            spilled += shift_up(&mut carry) * w[t];
            for k in 0..width {
                carry[k] += state[t * width + k];
                next[t * width + k] = carry[k];
            }
        }
        // Descending pass: contributions from t > t'.
        carry.fill(0.0);
        for t in (1..t_hi).rev() {
            for k in 0..width {
                carry[k] += state[(t + 1) * width + k];
            }
            spilled += shift_up(&mut carry) * w[t];
            for k in 0..width {
                next[t * width + k] += carry[k];
            }
        }
        for t in 1..=t_hi {
            for k in 0..width {
                next[t * width + k] *= w[t];
            }
        }
        state = next;
    }
    let mut box_pmf = vec![0.0f64; width];
    for t in 1..=t_hi {
        for (k, slot) in box_pmf.iter_mut().enumerate() {
            *slot += state[t * width + k];
        }
    }
    Ok(DpOutcome { box_pmf, spilled })
}

/// Truncates a box pmf at the first `k` whose cumulative mass reaches
/// `1 - tail_eps`; `None` if the cap was hit before that point.
fn package(
    outcome: DpOutcome,
    n: usize,
    q: f64,
    cutoff: Option<u32>,
    t_max: u32,
    tail_eps: f64,
) -> Option<RoughnessPmf> {
    let mut cumulative = 0.0f64;
    let mut comp = 0.0f64;
    let mut keep = None;
    for (k, &p) in outcome.box_pmf.iter().enumerate() {
        let y = p - comp;
        let t = cumulative + y;
        comp = (t - cumulative) - y;
        cumulative = t;
        if cumulative >= 1.0 - tail_eps {
            keep = Some(k);
            break;
        }
    }
    let keep = keep?;
    let mut probs = outcome.box_pmf;
    probs.truncate(keep + 1);
    let kept: f64 = probs.iter().sum();
    let tail_bound = (1.0 - kept).max(outcome.spilled).max(0.0);
    Some(RoughnessPmf { probs, tail_bound, n, q, cutoff, t_max, })
}

fn roughness_k_cap(n: usize, q: f64) -> usize {
    ((10.0 * n as f64 / (1.0 - q)).ceil() as usize).max(8)
}

/// Runs the DP, doubling the roughness cap until `package` captures
/// `1 - tail_eps` of the mass or the state budget is exhausted. `k_hard`
/// caps growth where the support is known to be finite.
fn dp_with_growth(
    n: usize,
    w: &[f64],
    q: f64,
    cutoff: Option<u32>,
    t_max: u32,
    tail_eps: f64,
    k_hard: Option<usize>,
) -> Result<RoughnessPmf> {
    let mut k_cap = roughness_k_cap(n, q);
    if let Some(hard) = k_hard {
        k_cap = k_cap.min(hard);
    }
    loop {
        let outcome = roughness_dp(n, w, k_cap)?;
        if let Some(pmf) = package(outcome, n, q, cutoff, t_max, tail_eps) {
            return Ok(pmf);
        }
        let grown = match k_hard {
            Some(hard) if k_cap >= hard => None,
            Some(hard) => Some((k_cap * 2).min(hard)),
            None => Some(k_cap * 2),
        };
        let fits = |k: usize| (w.len() as u64) * (k as u64 + 1) <= STATE_ENTRY_CAP;
        match grown {
            Some(next) if fits(next) => k_cap = next,
            _ => {
                return Err(NoiseError::ResourceLimit {
                    what: "roughness pmf support",
                    requested: k_cap as u64 + 1,
                    cap: k_cap as u64,
                });
            }
        }
    }
}

/// PMF of `K` for an `n`-segment chain without a cut-off, within `tail_eps`
/// of exact.
pub fn roughness_pmf(n: usize, q: f64, tail_eps: f64) -> Result<RoughnessPmf> {
    validate_common(n, q)?;
    validate_tail_eps(tail_eps)?;
    if q == 0.0 || n == 1 {
        return Ok(RoughnessPmf {
            probs: vec![1.0],
            tail_bound: 0.0,
            n,
            q,
            cutoff: None,
            t_max: 1,
        });
    }
    let t_max = horizon_for(n, q, tail_eps);
    let mut w = vec![0.0f64; t_max as usize + 1];
    for (t, slot) in w.iter_mut().enumerate().skip(1) {
        *slot = (1.0 - q) * q.powi(t as i32 - 1);
    }
    dp_with_growth(n, &w, q, None, t_max, tail_eps, None)
}

/// PMF of `K` under a global cut-off `t_c`: each segment time is a
/// geometric conditioned on `t <= t_c`, which the surviving attempt
/// realises. Exact (zero tail) whenever the full support fits the cap.
pub fn roughness_pmf_cutoff(n: usize, q: f64, t_c: u32, tail_eps: f64) -> Result<RoughnessPmf> {
    validate_common(n, q)?;
    validate_tail_eps(tail_eps)?;
    if t_c == 0 {
        return Err(NoiseError::InvalidParameter(
            "cut-off t_c must be at least 1".into(),
        ));
    }
    if q == 0.0 || n == 1 || t_c == 1 {
        return Ok(RoughnessPmf {
            probs: vec![1.0],
            tail_bound: 0.0,
            n,
            q,
            cutoff: Some(t_c),
            t_max: 1,
        });
    }
    let norm = 1.0 - q.powi(t_c as i32);
    let mut w = vec![0.0f64; t_c as usize + 1];
    for (t, slot) in w.iter_mut().enumerate().skip(1) {
        *slot = (1.0 - q) * q.powi(t as i32 - 1) / norm;
    }
    // K <= (n - 1)(t_c - 1) exactly; growth stops at that support bound.
    let support = (n as u64 - 1) * (t_c as u64 - 1);
    dp_with_growth(n, &w, q, Some(t_c), t_c, tail_eps, Some(support as usize))
}

/// `E[lambda^K]` from a pmf: accurate to `pmf.tail_bound` because every
/// omitted term is damped by `lambda^k <= 1`.
pub fn pmf_to_expected_lambda(pmf: &RoughnessPmf, lambda: f64) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    let mut pow = 1.0f64;
    for &p in &pmf.probs {
        let y = p * pow - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
        pow *= lambda;
    }
    sum
}

fn check_brute_force_size(n: usize, t_max: u32) -> Result<()> {
    let mut total: u64 = 1;
    for _ in 0..n {
        total = match total.checked_mul(t_max as u64) {
            Some(v) if v <= BRUTE_FORCE_CAP => v,
            _ => {
                return Err(NoiseError::ResourceLimit {
                    what: "brute-force instance count",
                    requested: (t_max as f64).powi(n as i32).min(u64::MAX as f64) as u64,
                    cap: BRUTE_FORCE_CAP,
                })
            }
        };
    }
    Ok(())
}

/// Walks every instance in `{1..=t_max}^n` through an odometer, handing
/// `(probability, roughness)` to `visit`.
fn enumerate_box(n: usize, q: f64, t_max: u32, mut visit: impl FnMut(f64, u64)) {
    let p = 1.0 - q;
    let t_hi = t_max as usize;
    // q^j for j up to n (t_max - 1).
    let mut q_pow = vec![1.0f64; n * (t_hi - 1) + 1];
    for j in 1..q_pow.len() {
        q_pow[j] = q_pow[j - 1] * q;
    }
    let p_n = p.powi(n as i32);
    let mut t = vec![1u32; n];
    loop {
        let excess: usize = t.iter().map(|&ti| ti as usize - 1).sum();
        let rough: u64 = t.windows(2).map(|w| w[0].abs_diff(w[1]) as u64).sum();
        visit(p_n * q_pow[excess], rough);
        let mut i = 0;
        loop {
            if i == n {
                return;
            }
            t[i] += 1;
            if t[i] <= t_max {
                break;
            }
            t[i] = 1;
            i += 1;
        }
    }
}

/// Literal enumeration of `E[lambda^K]` over the box `{1..=t_max}^n`.
/// Returns the box sum and an upper bound on the mass outside the box.
pub fn brute_force_expected_lambda(
    n: usize,
    q: f64,
    lambda: f64,
    t_max: u32,
) -> Result<(f64, f64)> {
    validate_common(n, q)?;
    if t_max == 0 {
        return Err(NoiseError::InvalidParameter("t_max must be at least 1".into()));
    }
    check_brute_force_size(n, t_max)?;
    let mut lam_pow = vec![1.0f64; n * (t_max as usize - 1) + 1];
    for j in 1..lam_pow.len() {
        lam_pow[j] = lam_pow[j - 1] * lambda;
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    enumerate_box(n, q, t_max, |prob, rough| {
        let y = prob * lam_pow[rough as usize] - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    });
    let tail = 1.0 - (1.0 - q.powi(t_max as i32)).powi(n as i32);
    Ok((sum, tail.max(0.0)))
}

/// Literal enumeration of the roughness pmf over `{1..=t_max}^n`.
/// `conditioned` divides by the box mass, which is exactly the pmf under a
/// cut-off `t_c = t_max`; otherwise entries are raw box masses.
pub fn brute_force_roughness_pmf(
    n: usize,
    q: f64,
    t_max: u32,
    conditioned: bool,
) -> Result<Vec<f64>> {
    validate_common(n, q)?;
    if t_max == 0 {
        return Err(NoiseError::InvalidParameter("t_max must be at least 1".into()));
    }
    check_brute_force_size(n, t_max)?;
    let mut pmf = vec![0.0f64; (n - 1) * (t_max as usize - 1) + 1];
    enumerate_box(n, q, t_max, |prob, rough| {
        pmf[rough as usize] += prob;
    });
    if conditioned {
        let box_mass = (1.0 - q.powi(t_max as i32)).powi(n as i32);
        for p in &mut pmf {
            *p /= box_mass;
        }
    }
    Ok(pmf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn two_segments_have_geometric_roughness() {
        // n = 2, q = 1/2: P(0) = 1/3 and P(k) = (2/3) 2^{-k}.
        let pmf = roughness_pmf(2, 0.5, 1e-12).unwrap();
        assert_relative_eq!(pmf.probs[0], 1.0 / 3.0, epsilon = 1e-12);
        for k in 1..pmf.probs.len().min(21) {
            assert_relative_eq!(
                pmf.probs[k],
                (2.0 / 3.0) * 0.5f64.powi(k as i32),
                epsilon = 1e-12
            );
        }
        assert!(pmf.tail_bound <= 1e-12);
    }

    #[test]
    fn smooth_mass_matches_closed_form() {
        // P(K = 0) = p^n / (1 - (1-p)^n).
        for &(n, p) in &[(2usize, 0.5), (3, 0.1), (4, 0.3), (5, 0.8)] {
            let pmf = roughness_pmf(n, 1.0 - p, 1e-12).unwrap();
            let expect = p.powi(n as i32) / (1.0 - (1.0 - p).powi(n as i32));
            assert_relative_eq!(pmf.probs[0], expect, epsilon = 1e-10);
        }
        let pmf = roughness_pmf(3, 0.9, 1e-12).unwrap();
        assert_relative_eq!(pmf.probs[0], 0.0036900369, epsilon = 1e-9);
    }

    #[test]
    fn single_segment_and_certain_success_are_point_masses() {
        let pmf = roughness_pmf(1, 0.7, 1e-12).unwrap();
        assert_eq!(pmf.probs, vec![1.0]);
        assert_eq!(pmf.tail_bound, 0.0);
        let pmf = roughness_pmf(5, 0.0, 1e-12).unwrap();
        assert_eq!(pmf.probs, vec![1.0]);
    }

    #[test]
    fn mass_accounting_closes_to_one() {
        for &(n, q) in &[(2usize, 0.5), (4, 0.8), (7, 0.3), (10, 0.9)] {
            let pmf = roughness_pmf(n, q, 1e-10).unwrap();
            let total: f64 = pmf.probs.iter().sum();
            assert!(pmf.tail_bound <= 1e-10);
            assert!((total + pmf.tail_bound - 1.0).abs() <= 1e-12 + pmf.tail_bound);
            assert!(total <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn tight_cutoff_pmf_is_exact() {
        let pmf = roughness_pmf_cutoff(2, 0.5, 2, 1e-12).unwrap();
        assert_eq!(pmf.probs.len(), 2);
        assert_relative_eq!(pmf.probs[0], 5.0 / 9.0, epsilon = 1e-14);
        assert_relative_eq!(pmf.probs[1], 4.0 / 9.0, epsilon = 1e-14);
        assert_eq!(pmf.tail_bound, 0.0);
    }

    #[test]
    fn unit_cutoff_is_a_point_mass() {
        let pmf = roughness_pmf_cutoff(6, 0.8, 1, 1e-12).unwrap();
        assert_eq!(pmf.probs, vec![1.0]);
    }

    #[test]
    fn cutoff_pmf_agrees_with_enumeration() {
        for &(n, q, t_c) in &[(2usize, 0.6, 4u32), (3, 0.5, 5), (4, 0.3, 25), (4, 0.7, 6)] {
            let pmf = roughness_pmf_cutoff(n, q, t_c, 1e-12).unwrap();
            let brute = brute_force_roughness_pmf(n, q, t_c, true).unwrap();
            for k in 0..brute.len() {
                let dp = pmf.probs.get(k).copied().unwrap_or(0.0);
                assert!(
                    (dp - brute[k]).abs() <= 1e-12 + pmf.tail_bound,
                    "n={n} q={q} t_c={t_c} k={k}: {dp} vs {}",
                    brute[k]
                );
            }
        }
    }

    #[test]
    fn free_pmf_agrees_with_deep_enumeration() {
        // t_max = 80 at q <= 0.5 puts the enumeration tail below 1e-20.
        for &(n, q) in &[(2usize, 0.5), (3, 0.4), (4, 0.3)] {
            let pmf = roughness_pmf(n, q, 1e-12).unwrap();
            let brute = brute_force_roughness_pmf(n, q, 80, false).unwrap();
            for k in 0..pmf.probs.len().min(brute.len()) {
                assert!(
                    (pmf.probs[k] - brute[k]).abs() <= 1e-10,
                    "n={n} q={q} k={k}: {} vs {}",
                    pmf.probs[k],
                    brute[k]
                );
            }
        }
    }

    #[test]
    fn pmf_mean_matches_enumerated_mean() {
        let (brute, tail) = brute_force_expected_lambda(3, 0.5, 0.9, 60).unwrap();
        let pmf = roughness_pmf(3, 0.5, 1e-12).unwrap();
        let via_pmf = pmf_to_expected_lambda(&pmf, 0.9);
        assert!((via_pmf - brute).abs() <= 1e-10 + tail + pmf.tail_bound);
    }

    #[test]
    fn oversized_requests_are_refused() {
        assert!(matches!(
            brute_force_expected_lambda(10, 0.5, 0.9, 100),
            Err(NoiseError::ResourceLimit { .. })
        ));
        assert!(matches!(
            brute_force_roughness_pmf(8, 0.5, 50, false),
            Err(NoiseError::ResourceLimit { .. })
        ));
    }

    #[test]
    fn domain_violations_are_rejected() {
        assert!(roughness_pmf(0, 0.5, 1e-12).is_err());
        assert!(roughness_pmf(2, 1.0, 1e-12).is_err());
        assert!(roughness_pmf(2, 0.5, 0.0).is_err());
        assert!(roughness_pmf(2, 0.5, 1.0).is_err());
        assert!(roughness_pmf_cutoff(2, 0.5, 0, 1e-12).is_err());
    }
}

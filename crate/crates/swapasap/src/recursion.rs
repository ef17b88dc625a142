//! Exact `E[Lambda_n]` via a sparse linear recursion.
//!
//! The sum over success-round instances factorises through the two-variable
//! basis `|a,b> = sum_{t>=1} q^{a t} lambda^{b t}`. Appending one segment is
//! the linear map
//!
//! ```text
//! |a,b>  ->  C(a,b) |a+1,b>  +  D(a,b) |1,1>            (no cut-off)
//! |a,b>  ->  ... as above ... +  E(a,b) |1,-1>          (with cut-off T_c)
//! ```
//!
//! so an `n`-segment chain needs `n - 1` applications starting from
//! `|1,0>`, a closing evaluation of each basis element as a geometric sum
//! (truncated at `T_c` when a cut-off is active), and one scalar prefactor
//! per segment. The exponent `b` only ever takes values in `{-1, 0, 1}`,
//! which keeps the state a handful of terms regardless of `n`.
//!
//! Coefficient denominators vanish on a measure-zero resonance set such as
//! `lambda^2 = q^a`; evaluation within `1e-9` of such a point fails with
//! [`NoiseError::NearSingularParameters`], and the public entry points then
//! retry once with `lambda` stepped just outside the guard band before
//! giving up. The value is smooth across each resonance (the pole is
//! removable), so the step changes the result by far less than any
//! tolerance used elsewhere in the crate.

use std::collections::BTreeMap;

use crate::error::{NoiseError, Result};

/// Magnitude below which a denominator factor counts as a resonance hit.
const SINGULAR_EPS: f64 = 1e-9;
/// Size of the one-shot `lambda` perturbation used to step off a resonance.
/// Coefficients at distance `d` from a resonance scale like `1/d` and
/// compound across steps, so rounding error grows like `eps / d^2` while
/// the perturbation itself biases the smooth limit by `O(d)`; `d ~ eps^(1/3)`
/// balances the two at roughly five decimal digits. Callers needing the
/// resonant value more precisely should sum the roughness pmf instead,
/// which has no singular denominators.
const NUDGE: f64 = 5e-6;
/// Coefficients smaller than this are dropped from the state.
const PRUNE_EPS: f64 = 1e-300;

/// Parameters of one recursion step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionCoeffs {
    pub q: f64,
    pub lambda: f64,
    /// `Some(t_c)` switches to the three-image cut-off step.
    pub cutoff: Option<u32>,
}

/// Sparse vector over the basis `|a,b>`, keyed by the exponent pair.
pub type TermVector = BTreeMap<(i32, i32), f64>;

fn check_factor(f: f64, context: &'static str) -> Result<f64> {
    if f.abs() < SINGULAR_EPS {
        Err(NoiseError::NearSingularParameters { factor: f, context })
    } else {
        Ok(f)
    }
}

fn pow_iexp(base: f64, exp: i32) -> f64 {
    base.powi(exp)
}

/// Coefficient of `|a+1,b>` in the image of `|a,b>`.
pub fn coeff_c(a: i32, b: i32, q: f64, lambda: f64) -> Result<f64> {
    let qa = pow_iexp(q, a);
    let num = -qa * pow_iexp(lambda, b) * (1.0 / lambda - lambda);
    let d1 = check_factor(1.0 - pow_iexp(lambda, b - 1) * qa, "survival coefficient")?;
    let d2 = check_factor(1.0 - pow_iexp(lambda, b + 1) * qa, "survival coefficient")?;
    Ok(num / (d1 * d2))
}

/// Coefficient of `|1,1>` in the image of `|a,b>`.
pub fn coeff_d(a: i32, b: i32, q: f64, lambda: f64) -> Result<f64> {
    let qa = pow_iexp(q, a);
    let den = check_factor(pow_iexp(lambda, 1 - b) - qa, "restart coefficient")?;
    Ok(qa / den)
}

/// Coefficient of `|1,-1>` in the image of `|a,b>` when a cut-off `t_c`
/// caps every geometric tail.
pub fn coeff_e(a: i32, b: i32, q: f64, lambda: f64, t_c: u32) -> Result<f64> {
    let horizon = t_c as f64 + 1.0;
    let num = -q.powf(a as f64 * horizon) * lambda.powf((b + 1) as f64 * horizon);
    let den = check_factor(1.0 - pow_iexp(lambda, b + 1) * pow_iexp(q, a), "cut-off coefficient")?;
    Ok(num / den)
}

/// Applies one segment-appending step to a state vector.
pub fn step(v: &TermVector, coeffs: &RecursionCoeffs) -> Result<TermVector> {
    let RecursionCoeffs { q, lambda, cutoff } = *coeffs;
    let mut out = TermVector::new();
    let mut add = |key: (i32, i32), val: f64| {
        *out.entry(key).or_insert(0.0) += val;
    };
    for (&(a, b), &c) in v {
        add((a + 1, b), c * coeff_c(a, b, q, lambda)?);
        add((1, 1), c * coeff_d(a, b, q, lambda)?);
        if let Some(t_c) = cutoff {
            add((1, -1), c * coeff_e(a, b, q, lambda, t_c)?);
        }
    }
    out.retain(|_, c| c.abs() >= PRUNE_EPS);
    Ok(out)
}

/// Closes a state vector: evaluates each `|a,b>` as its geometric sum and
/// accumulates with compensated summation. `horizon` truncates the sums at
/// `t <= t_c` when present.
fn close(v: &TermVector, q: f64, lambda: f64, horizon: Option<u32>) -> Result<f64> {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for (&(a, b), &c) in v {
        let w = pow_iexp(q, a) * pow_iexp(lambda, b);
        let den = check_factor(1.0 - w, "basis closure")?;
        let value = match horizon {
            // sum_{t=1}^{inf} w^t; convergence needs w < 1, which holds for
            // the b >= 0 exponents the cut-off-free recursion produces.
            None => w / den,
            // sum_{t=1}^{t_c} w^t, finite for any w != 1.
            Some(t_c) => (w - w.powf(t_c as f64 + 1.0)) / den,
        };
        let y = c * value - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    Ok(sum)
}

fn validate_q_lambda(q: f64, lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&q) {
        return Err(NoiseError::InvalidParameter(format!(
            "per-round failure probability q must lie in [0, 1), got {q}"
        )));
    }
    if !(lambda > 0.0 && lambda <= 1.0) {
        return Err(NoiseError::InvalidParameter(format!(
            "memory quality lambda must lie in (0, 1], got {lambda}"
        )));
    }
    Ok(())
}

fn validate_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(NoiseError::InvalidParameter(
            "segment count n must be at least 1".into(),
        ));
    }
    Ok(())
}

/// Snaps removable floating-point overshoot back into `[0, 1]`.
fn clamp_unit(x: f64) -> Result<f64> {
    if (-1e-9..=1.0 + 1e-9).contains(&x) {
        Ok(x.clamp(0.0, 1.0))
    } else {
        Err(NoiseError::InvalidParameter(format!(
            "mean Werner parameter evaluated outside [0, 1]: {x}"
        )))
    }
}

/// Runs `op` and, if it hits a resonance, retries once with `lambda`
/// nudged by [`NUDGE`] (downward unless that would leave the domain).
pub(crate) fn with_nudged_lambda<T>(lambda: f64, mut op: impl FnMut(f64) -> Result<T>) -> Result<T> {
    match op(lambda) {
        Err(NoiseError::NearSingularParameters { .. }) => {
            let nudged = if lambda > 2.0 * NUDGE { lambda - NUDGE } else { lambda + NUDGE };
            op(nudged)
        }
        other => other,
    }
}

fn expected_lambda_raw(n: usize, q: f64, lambda: f64, cutoff: Option<u32>) -> Result<f64> {
    // Per-segment scale: folding it in step by step keeps coefficients O(1)
    // even when ((1-q)/q)^n alone would overflow.
    let scale = match cutoff {
        None => (1.0 - q) / q,
        Some(t_c) => (1.0 - q) / (q * (1.0 - q.powf(t_c as f64))),
    };
    let coeffs = RecursionCoeffs { q, lambda, cutoff };
    let mut v = TermVector::from([((1, 0), 1.0)]);
    for _ in 1..n {
        v = step(&v, &coeffs)?;
        for c in v.values_mut() {
            *c *= scale;
        }
    }
    clamp_unit(scale * close(&v, q, lambda, cutoff)?)
}

/// Mean Werner parameter `E[Lambda_n]` of an `n`-segment chain without a
/// cut-off, exact up to floating point.
pub fn expected_lambda(n: usize, q: f64, lambda: f64) -> Result<f64> {
    validate_n(n)?;
    validate_q_lambda(q, lambda)?;
    if q == 0.0 {
        // Every segment succeeds in round one, so K = 0 always.
        return Ok(1.0);
    }
    with_nudged_lambda(lambda, |l| expected_lambda_raw(n, q, l, None))
}

/// `E[Lambda_n^m]`, computed as the mean for memory quality `lambda^m`
/// through the identical code path (`Lambda^m = (lambda^m)^K`).
pub fn expected_lambda_moment(n: usize, m: u32, q: f64, lambda: f64) -> Result<f64> {
    if m == 0 {
        return Err(NoiseError::InvalidParameter(
            "moment order m must be at least 1".into(),
        ));
    }
    validate_q_lambda(q, lambda)?;
    expected_lambda(n, q, lambda.powi(m as i32))
}

/// Mean Werner parameter under a global cut-off: every segment must
/// succeed within `t_c` rounds or the whole attempt restarts, so each
/// geometric is conditioned on `t <= t_c`.
pub fn expected_lambda_cutoff(n: usize, q: f64, lambda: f64, t_c: u32) -> Result<f64> {
    validate_n(n)?;
    validate_q_lambda(q, lambda)?;
    if t_c == 0 {
        return Err(NoiseError::InvalidParameter(
            "cut-off t_c must be at least 1".into(),
        ));
    }
    if t_c == 1 || q == 0.0 {
        // All successes land in the same round: K = 0 deterministically.
        return Ok(1.0);
    }
    with_nudged_lambda(lambda, |l| expected_lambda_raw(n, q, l, Some(t_c)))
}

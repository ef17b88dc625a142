//! Core domain types and elementary formulas shared by every other module.
//!
//! A chain of `n` repeater segments attempts link generation each round,
//! succeeding per segment with probability `p` (we write `q = 1 - p`).
//! An [`Instance`] records the round at which each segment first succeeded;
//! its [`roughness`] is the total decoherence exponent of the delivered
//! state, so the end-to-end Werner parameter is `lambda^K` times the
//! constant generation and swap noise factors.

use crate::error::{NoiseError, Result};

/// Default attenuation length in kilometers for [`segment_success_prob`].
pub const DEFAULT_ATTENUATION_KM: f64 = 22.0;

/// Description of a homogeneous swap-ASAP repeater chain.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainParams {
    /// Number of elementary segments, at least 1.
    pub n: usize,
    /// Per-round link success probability, in (0, 1].
    pub p: f64,
    /// Per-round memory decay factor, in (0, 1].
    pub lambda: f64,
    /// Per-link generation-noise factors, length `n`, each in (0, 1].
    pub lambda_gen: Vec<f64>,
    /// Per-node swap-noise factors, length `n - 1`, each in (0, 1].
    pub lambda_swap: Vec<f64>,
    /// Global cut-off `T_c`: a fresh attempt is abandoned and restarted when
    /// end-to-end entanglement is not ready within `T_c` rounds.
    pub cutoff: Option<u32>,
}

impl ChainParams {
    /// Builds a chain with unit noise factors and no cut-off.
    pub fn new(n: usize, p: f64, lambda: f64) -> Result<Self> {
        Self::build(n, p, lambda, vec![1.0; n], vec![1.0; n.saturating_sub(1)], None)
    }

    /// Builds a chain after validating every invariant.
    pub fn build(
        n: usize,
        p: f64,
        lambda: f64,
        lambda_gen: Vec<f64>,
        lambda_swap: Vec<f64>,
        cutoff: Option<u32>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(NoiseError::InvalidParameter("n must be at least 1".into()));
        }
        if !(p > 0.0 && p <= 1.0) {
            return Err(NoiseError::InvalidParameter(format!(
                "p = {p} outside (0, 1]"
            )));
        }
        if !(lambda > 0.0 && lambda <= 1.0) {
            return Err(NoiseError::InvalidParameter(format!(
                "lambda = {lambda} outside (0, 1]"
            )));
        }
        if lambda_gen.len() != n {
            return Err(NoiseError::InvalidParameter(format!(
                "lambda_gen has {} entries, expected {n}",
                lambda_gen.len()
            )));
        }
        if lambda_swap.len() != n - 1 {
            return Err(NoiseError::InvalidParameter(format!(
                "lambda_swap has {} entries, expected {}",
                lambda_swap.len(),
                n - 1
            )));
        }
        for &f in lambda_gen.iter().chain(lambda_swap.iter()) {
            if !(f > 0.0 && f <= 1.0) {
                return Err(NoiseError::InvalidParameter(format!(
                    "noise factor {f} outside (0, 1]"
                )));
            }
        }
        if cutoff == Some(0) {
            return Err(NoiseError::InvalidParameter("cutoff must be at least 1".into()));
        }
        Ok(Self { n, p, lambda, lambda_gen, lambda_swap, cutoff })
    }

    /// Failure probability `q = 1 - p`, computed once here so downstream
    /// formulas never repeat the subtraction.
    pub fn q(&self) -> f64 {
        1.0 - self.p
    }

    /// Product of all generation and swap noise factors.
    pub fn generation_factor(&self) -> f64 {
        self.lambda_gen.iter().chain(self.lambda_swap.iter()).product()
    }
}

/// The rounds at which each segment first generated its link.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    t: Vec<u32>,
}

impl Instance {
    /// Validates that every entry is at least 1 and the sequence is nonempty.
    pub fn new(t: Vec<u32>) -> Result<Self> {
        if t.is_empty() {
            return Err(NoiseError::InvalidParameter("instance must be nonempty".into()));
        }
        if t.iter().any(|&ti| ti == 0) {
            return Err(NoiseError::InvalidParameter(
                "instance entries must be at least 1".into(),
            ));
        }
        Ok(Self { t })
    }

    pub fn times(&self) -> &[u32] {
        &self.t
    }

    pub fn len(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest entry; the round at which the end-to-end state is delivered.
    pub fn max_time(&self) -> u32 {
        *self.t.iter().max().expect("instance is nonempty")
    }
}

/// Werner parameter of a delivered state, in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct WernerParam(f64);

impl WernerParam {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(NoiseError::InvalidParameter(format!(
                "Werner parameter {value} outside [0, 1]"
            )));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Aggregate waiting time of an instance:
///
/// ```text
/// K(t) = sum_{i=1}^{n-1} |t_i - t_{i+1}|
/// ```
///
/// Zero for a single segment. `lambda^K` is the end-to-end Werner parameter
/// contributed by memory decay (end-node storage excluded from the model).
pub fn roughness(inst: &Instance) -> u64 {
    inst.times()
        .windows(2)
        .map(|w| (i64::from(w[0]) - i64::from(w[1])).unsigned_abs())
        .sum()
}

/// Probability that the chain realizes exactly this instance:
/// the product of independent geometric laws, `prod_i (1-q) q^{t_i - 1}`.
pub fn instance_probability(inst: &Instance, q: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&q) {
        return Err(NoiseError::InvalidParameter(format!("q = {q} outside [0, 1)")));
    }
    let p = 1.0 - q;
    Ok(inst
        .times()
        .iter()
        .map(|&t| p * q.powi(t as i32 - 1))
        .product())
}

/// Average fidelity of a Werner state with parameter `Lambda`:
/// `F = 3*Lambda/4 + 1/4`. Affine, increasing, maps [0,1] onto [1/4, 1].
pub fn fidelity_from_lambda(w: WernerParam) -> f64 {
    0.75 * w.value() + 0.25
}

/// Applies the constant multiplicative noise factors of imperfect link
/// generation and imperfect swaps:
/// `Lambda * prod_i lambda_gen_i * prod_i lambda_swap_i`.
pub fn apply_generation_noise(w: WernerParam, params: &ChainParams) -> WernerParam {
    WernerParam(w.value() * params.generation_factor())
}

/// Per-segment success probability for a chain of `n` equal spans covering
/// `l_total` kilometers of fiber with attenuation length `l_att`:
/// `p = exp(-l_total / (n * l_att))`.
pub fn segment_success_prob(l_total: f64, n: usize, l_att: f64) -> Result<f64> {
    if l_total < 0.0 {
        return Err(NoiseError::InvalidParameter(format!("L = {l_total} negative")));
    }
    if n == 0 {
        return Err(NoiseError::InvalidParameter("n must be at least 1".into()));
    }
    if l_att <= 0.0 {
        return Err(NoiseError::InvalidParameter(format!(
            "attenuation length {l_att} must be positive"
        )));
    }
    Ok((-l_total / (n as f64 * l_att)).exp())
}

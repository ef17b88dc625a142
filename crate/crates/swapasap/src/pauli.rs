//! Qudit Pauli channels, their Fourier (lambda) picture, and dense
//! density-matrix oracles that validate it.
//!
//! A Pauli channel on a dimension-`d` system applies the Weyl operator
//! `X^a Z^b` with probability `p_{a,b}`. Its Fourier transform
//!
//! ```text
//! lambda_{u,v} = sum_{a,b} p_{a,b} omega^{-(u a + v b)},   omega = e^{2 pi i / d}
//! ```
//!
//! diagonalises composition: convolving probability vectors multiplies
//! lambda vectors entrywise. Entanglement swapping through a Bell
//! measurement with per-outcome Pauli corrections is also entrywise
//! multiplicative, but only for channels symmetric under `a -> -a`
//! ([`is_x_symmetric`]); the reflection enters through operator
//! transposition, `(X^a Z^b)^T = X^{-a} Z^b` up to phase. [`swap_oracle`]
//! verifies or refutes that multiplicativity from first principles on
//! dense matrices, and [`transpose_side_check`] measures how much moving a
//! channel across a maximally entangled state changes it.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{NoiseError, Result};

/// Largest dimension the dense oracles accept (`d^4`-sized matrices).
const ORACLE_DIM_CAP: usize = 5;
/// Tolerance for "this quantity is zero up to floating point".
const ZERO_EPS: f64 = 1e-10;

type CMat = DMatrix<Complex64>;

fn cplx(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// `omega^k` with the exponent reduced modulo `d` first.
fn root_of_unity(d: usize, k: i64) -> Complex64 {
    let k = k.rem_euclid(d as i64);
    let angle = 2.0 * std::f64::consts::PI * k as f64 / d as f64;
    Complex64::from_polar(1.0, angle)
}

fn validate_dim(d: usize) -> Result<()> {
    if d < 2 {
        return Err(NoiseError::InvalidParameter(format!(
            "qudit dimension must be at least 2, got {d}"
        )));
    }
    Ok(())
}

fn validate_oracle_dim(d: usize) -> Result<()> {
    validate_dim(d)?;
    if d > ORACLE_DIM_CAP {
        return Err(NoiseError::ResourceLimit {
            what: "dense oracle qudit dimension",
            requested: d as u64,
            cap: ORACLE_DIM_CAP as u64,
        });
    }
    Ok(())
}

/// Probability vector over the `d^2` Weyl operators `X^a Z^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliChannel {
    d: usize,
    /// Row-major over `(a, b)`: entry `a * d + b`.
    probs: Vec<f64>,
}

impl PauliChannel {
    pub fn new(d: usize, probs: Vec<f64>) -> Result<Self> {
        validate_dim(d)?;
        if probs.len() != d * d {
            return Err(NoiseError::InvalidParameter(format!(
                "expected {} probabilities for d = {d}, got {}",
                d * d,
                probs.len()
            )));
        }
        let mut probs = probs;
        for p in &mut probs {
            if *p < -1e-12 {
                return Err(NoiseError::NotAChannel {
                    reason: "negative probability",
                    value: *p,
                });
            }
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(NoiseError::NotAChannel {
                reason: "probabilities do not sum to 1",
                value: total,
            });
        }
        for p in &mut probs {
            *p /= total;
        }
        Ok(Self { d, probs })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn prob(&self, a: usize, b: usize) -> f64 {
        self.probs[a * self.d + b]
    }

    /// The identity channel: all weight on `X^0 Z^0`.
    pub fn identity(d: usize) -> Result<Self> {
        validate_dim(d)?;
        let mut probs = vec![0.0; d * d];
        probs[0] = 1.0;
        Ok(Self { d, probs })
    }

    /// Phase noise: probability `1 - p` of doing nothing, `p` split evenly
    /// over the nontrivial powers `Z^b`. For `d = 2` this applies `Z` with
    /// probability exactly `p`.
    pub fn dephasing(d: usize, p: f64) -> Result<Self> {
        validate_dim(d)?;
        if !(0.0..=1.0).contains(&p) {
            return Err(NoiseError::InvalidParameter(format!(
                "dephasing probability {p} outside [0, 1]"
            )));
        }
        let mut probs = vec![0.0; d * d];
        probs[0] = 1.0 - p;
        for b in 1..d {
            probs[b] = p / (d - 1) as f64;
        }
        Ok(Self { d, probs })
    }

    /// Uniform noise: keeps weight `p_identity` on the identity and
    /// spreads the rest evenly over every other Weyl operator.
    pub fn depolarizing(d: usize, p_identity: f64) -> Result<Self> {
        validate_dim(d)?;
        if !(0.0..=1.0).contains(&p_identity) {
            return Err(NoiseError::InvalidParameter(format!(
                "identity weight {p_identity} outside [0, 1]"
            )));
        }
        let rest = (1.0 - p_identity) / (d * d - 1) as f64;
        let mut probs = vec![rest; d * d];
        probs[0] = p_identity;
        Ok(Self { d, probs })
    }

    /// Qubit channel from the conventional `(I, X, Y, Z)` weights.
    pub fn qubit(p_i: f64, p_x: f64, p_y: f64, p_z: f64) -> Result<Self> {
        // (a, b) indices: I = (0,0), Z = (0,1), X = (1,0), Y = (1,1).
        PauliChannel::new(2, vec![p_i, p_z, p_x, p_y])
    }
}

/// Fourier transform of a Pauli channel, indexed like the channel.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaVector {
    d: usize,
    /// Row-major over `(u, v)`: entry `u * d + v`.
    entries: Vec<Complex64>,
}

impl LambdaVector {
    pub fn d(&self) -> usize {
        self.d
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entry(&self, u: usize, v: usize) -> Complex64 {
        self.entries[u * self.d + v]
    }

    /// The four qubit eigenvalues in the conventional order
    /// `(lambda_1, lambda_2, lambda_3, lambda_4)` = entries
    /// `(0,0), (0,1), (1,1), (1,0)`; a dephasing channel reads
    /// `(1, 1-2p, 1-2p, 1)`.
    pub fn qubit_order(&self) -> Result<[Complex64; 4]> {
        if self.d != 2 {
            return Err(NoiseError::InvalidParameter(format!(
                "qubit ordering requires d = 2, got {}",
                self.d
            )));
        }
        Ok([self.entry(0, 0), self.entry(0, 1), self.entry(1, 1), self.entry(1, 0)])
    }

    /// Largest entrywise deviation from another vector.
    pub fn max_deviation(&self, other: &LambdaVector) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

fn character_transform(d: usize, probs: &[f64]) -> Vec<Complex64> {
    let mut entries = vec![Complex64::default(); d * d];
    for u in 0..d {
        for v in 0..d {
            let mut acc = Complex64::default();
            for a in 0..d {
                for b in 0..d {
                    let k = (u * a + v * b) as i64;
                    acc += cplx(probs[a * d + b]) * root_of_unity(d, -k);
                }
            }
            entries[u * d + v] = acc;
        }
    }
    entries
}

/// Fourier transform `p -> lambda`. Linear, so it carries convex
/// mixtures of channels to the same mixtures of lambda vectors.
pub fn to_lambda(ch: &PauliChannel) -> LambdaVector {
    LambdaVector { d: ch.d, entries: character_transform(ch.d, &ch.probs) }
}

/// Inverse transform `lambda -> p`; fails with [`NoiseError::NotAChannel`]
/// when the preimage is not a probability vector.
pub fn from_lambda(lv: &LambdaVector) -> Result<PauliChannel> {
    let d = lv.d;
    validate_dim(d)?;
    let mut probs = vec![0.0f64; d * d];
    for a in 0..d {
        for b in 0..d {
            let mut acc = Complex64::default();
            for u in 0..d {
                for v in 0..d {
                    let k = (u * a + v * b) as i64;
                    acc += lv.entries[u * d + v] * root_of_unity(d, k);
                }
            }
            acc /= cplx((d * d) as f64);
            if acc.im.abs() > ZERO_EPS {
                return Err(NoiseError::NotAChannel {
                    reason: "preimage has a nonreal probability",
                    value: acc.im,
                });
            }
            probs[a * d + b] = acc.re;
        }
    }
    PauliChannel::new(d, probs)
}

/// Sequential composition: convolution of the Weyl-index distributions.
pub fn compose(first: &PauliChannel, second: &PauliChannel) -> Result<PauliChannel> {
    if first.d != second.d {
        return Err(NoiseError::InvalidParameter(format!(
            "cannot compose channels of dimension {} and {}",
            first.d, second.d
        )));
    }
    let d = first.d;
    let mut probs = vec![0.0f64; d * d];
    for a1 in 0..d {
        for b1 in 0..d {
            let p1 = first.prob(a1, b1);
            if p1 == 0.0 {
                continue;
            }
            for a2 in 0..d {
                for b2 in 0..d {
                    probs[((a1 + a2) % d) * d + (b1 + b2) % d] += p1 * second.prob(a2, b2);
                }
            }
        }
    }
    PauliChannel::new(d, probs)
}

/// Whether `p_{a,b} = p_{-a mod d, b}`, the symmetry under which swapping
/// is entrywise multiplicative.
pub fn is_x_symmetric(ch: &PauliChannel) -> bool {
    let d = ch.d;
    for a in 0..d {
        for b in 0..d {
            if (ch.prob(a, b) - ch.prob((d - a) % d, b)).abs() > 1e-12 {
                return false;
            }
        }
    }
    true
}

/// Weyl operator `X^a Z^b` as a dense matrix:
/// `X^a Z^b |j> = omega^{b j} |j + a mod d>`.
pub fn weyl_operator(d: usize, a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    for j in 0..d {
        m[((j + a) % d, j)] = root_of_unity(d, (b * j) as i64);
    }
    m
}

/// The maximally entangled vector `sum_i |i,i> / sqrt(d)`.
fn entangled_vector(d: usize) -> Vec<Complex64> {
    let mut v = vec![Complex64::default(); d * d];
    let amp = cplx(1.0 / (d as f64).sqrt());
    for i in 0..d {
        v[i * d + i] = amp;
    }
    v
}

/// Bell-basis vector `(I x X^a Z^b) |psi_d>`.
fn bell_vector(d: usize, a: usize, b: usize) -> Vec<Complex64> {
    let amp = 1.0 / (d as f64).sqrt();
    let mut v = vec![Complex64::default(); d * d];
    for i in 0..d {
        v[i * d + (i + a) % d] = root_of_unity(d, (b * i) as i64) * cplx(amp);
    }
    v
}

fn outer(v: &[Complex64]) -> CMat {
    let n = v.len();
    CMat::from_fn(n, n, |r, c| v[r] * v[c].conj())
}

/// A two-qudit density matrix with validity checks.
#[derive(Debug, Clone, PartialEq)]
pub struct QuditBipartiteState {
    d: usize,
    rho: CMat,
}

impl QuditBipartiteState {
    pub fn new(d: usize, rho: CMat) -> Result<Self> {
        validate_oracle_dim(d)?;
        if rho.nrows() != d * d || rho.ncols() != d * d {
            return Err(NoiseError::InvalidParameter(format!(
                "state matrix is {}x{}, expected {}x{}",
                rho.nrows(),
                rho.ncols(),
                d * d,
                d * d
            )));
        }
        let state = Self { d, rho };
        state.validate()?;
        Ok(state)
    }

    /// The shared maximally entangled pair.
    pub fn maximally_entangled(d: usize) -> Result<Self> {
        validate_oracle_dim(d)?;
        Ok(Self { d, rho: outer(&entangled_vector(d)) })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &CMat {
        &self.rho
    }

    /// Hermiticity, unit trace, and positive semidefiniteness, all up to
    /// floating-point tolerance.
    pub fn validate(&self) -> Result<()> {
        let herm_gap = (&self.rho - self.rho.adjoint()).norm();
        if herm_gap > ZERO_EPS {
            return Err(NoiseError::NotAChannel {
                reason: "state is not Hermitian",
                value: herm_gap,
            });
        }
        let trace = self.rho.trace();
        if (trace.re - 1.0).abs() > ZERO_EPS || trace.im.abs() > ZERO_EPS {
            return Err(NoiseError::NotAChannel {
                reason: "state trace is not 1",
                value: trace.re,
            });
        }
        let eigen = self.rho.clone().symmetric_eigenvalues();
        if let Some(min) = eigen.iter().cloned().reduce(f64::min) {
            if min < -ZERO_EPS {
                return Err(NoiseError::NotAChannel {
                    reason: "state has a negative eigenvalue",
                    value: min,
                });
            }
        }
        Ok(())
    }

    /// Applies a Pauli channel to the second (right) qudit.
    pub fn apply_channel_right(&self, ch: &PauliChannel) -> Result<Self> {
        self.apply_channel(ch, false)
    }

    /// Applies a Pauli channel to the first (left) qudit.
    pub fn apply_channel_left(&self, ch: &PauliChannel) -> Result<Self> {
        self.apply_channel(ch, true)
    }

    fn apply_channel(&self, ch: &PauliChannel, left: bool) -> Result<Self> {
        if ch.d != self.d {
            return Err(NoiseError::InvalidParameter(format!(
                "channel dimension {} does not match state dimension {}",
                ch.d, self.d
            )));
        }
        let d = self.d;
        let eye = CMat::identity(d, d);
        let mut out = CMat::zeros(d * d, d * d);
        for a in 0..d {
            for b in 0..d {
                let p = ch.prob(a, b);
                if p == 0.0 {
                    continue;
                }
                let w = weyl_operator(d, a, b);
                let op = if left { w.kronecker(&eye) } else { eye.kronecker(&w) };
                out += (&op * &self.rho * op.adjoint()).scale(p);
            }
        }
        Ok(Self { d, rho: out })
    }

    /// Diagonal of the state in the Bell basis: `<Psi_ab| rho |Psi_ab>`.
    pub fn bell_diagonal_probs(&self) -> Vec<f64> {
        let d = self.d;
        let mut probs = vec![0.0f64; d * d];
        for a in 0..d {
            for b in 0..d {
                let bell = bell_vector(d, a, b);
                let mut acc = Complex64::default();
                for r in 0..d * d {
                    for c in 0..d * d {
                        acc += bell[r].conj() * self.rho[(r, c)] * bell[c];
                    }
                }
                probs[a * d + b] = acc.re;
            }
        }
        probs
    }
}

/// What the dense swap oracle found.
#[derive(Debug, Clone, PartialEq)]
pub struct SwapOracleOutcome {
    /// Lambda vector of the post-swap state, channels and corrections
    /// applied exactly, all measurement outcomes mixed.
    pub lambda: LambdaVector,
    /// The entrywise product `lambda_1 * lambda_2` it is compared with.
    pub pointwise_product: LambdaVector,
    /// Largest entrywise gap between the two.
    pub product_deviation: f64,
    /// Whether the gap is floating-point zero; false warns that the
    /// multiplicative shortcut does not apply to these channels.
    pub multiplicative: bool,
}

/// Bra-side projector onto Bell outcome `(a, b)` of qudits 2 and 3 inside
/// a 4-qudit register, as a `d^2 x d^4` matrix mapping to the (1, 4) pair.
fn middle_bell_bra(d: usize, a: usize, b: usize) -> CMat {
    let bell = bell_vector(d, a, b);
    let mut k = CMat::zeros(d * d, d * d * d * d);
    for i1 in 0..d {
        for i4 in 0..d {
            let row = i1 * d + i4;
            for i2 in 0..d {
                for i3 in 0..d {
                    let col = ((i1 * d + i2) * d + i3) * d + i4;
                    k[(row, col)] = bell[i2 * d + i3].conj();
                }
            }
        }
    }
    k
}

/// Per-outcome Pauli corrections, found by searching the clean (noiseless)
/// swap for the Weyl operator that restores the entangled pair exactly.
fn correction_table(d: usize) -> Result<Vec<CMat>> {
    let psi = entangled_vector(d);
    let clean = outer(&psi).kronecker(&outer(&psi));
    let eye = CMat::identity(d, d);
    let mut table = Vec::with_capacity(d * d);
    for a in 0..d {
        for b in 0..d {
            let k = middle_bell_bra(d, a, b);
            let cond = &k * &clean * k.adjoint();
            let trace = cond.trace().re;
            let mut found = None;
            'search: for ca in 0..d {
                for cb in 0..d {
                    let u = weyl_operator(d, ca, cb);
                    let op = eye.kronecker(&u);
                    let restored = op.adjoint() * &cond * &op;
                    let mut fid = Complex64::default();
                    for r in 0..d * d {
                        for c in 0..d * d {
                            fid += psi[r].conj() * restored[(r, c)] * psi[c];
                        }
                    }
                    if (fid.re / trace - 1.0).abs() < 1e-9 {
                        found = Some(op);
                        break 'search;
                    }
                }
            }
            table.push(found.ok_or(NoiseError::InvalidParameter(
                "no Weyl correction restores the clean swap outcome".into(),
            ))?);
        }
    }
    Ok(table)
}

/// Simulates one entanglement swap on dense matrices: two shared pairs,
/// `ch1` on the right qudit of the first and `ch2` on the left qudit of
/// the second, a Bell measurement on the middle qudits, the standard
/// Pauli correction per outcome, and exact mixing over outcomes. Returns
/// the resulting lambda vector next to the entrywise product shortcut.
pub fn swap_oracle(ch1: &PauliChannel, ch2: &PauliChannel) -> Result<SwapOracleOutcome> {
    if ch1.d != ch2.d {
        return Err(NoiseError::InvalidParameter(format!(
            "cannot swap channels of dimension {} and {}",
            ch1.d, ch2.d
        )));
    }
    let d = ch1.d;
    validate_oracle_dim(d)?;
    let pair = QuditBipartiteState::maximally_entangled(d)?;
    let rho_a = pair.apply_channel_right(ch1)?;
    let rho_b = pair.apply_channel_left(ch2)?;
    let joint = rho_a.rho.kronecker(&rho_b.rho);
    let corrections = correction_table(d)?;
    let mut mixed = CMat::zeros(d * d, d * d);
    for a in 0..d {
        for b in 0..d {
            let k = middle_bell_bra(d, a, b);
            let cond = &k * &joint * k.adjoint();
            let op = &corrections[a * d + b];
            mixed += op.adjoint() * cond * op;
        }
    }
    let out_state = QuditBipartiteState::new(d, mixed)?;
    let probs = out_state.bell_diagonal_probs();
    let lambda = LambdaVector { d, entries: character_transform(d, &probs) };
    let l1 = to_lambda(ch1);
    let l2 = to_lambda(ch2);
    let product_entries: Vec<Complex64> = l1
        .entries
        .iter()
        .zip(&l2.entries)
        .map(|(x, y)| x * y)
        .collect();
    let pointwise_product = LambdaVector { d, entries: product_entries };
    let product_deviation = lambda.max_deviation(&pointwise_product);
    Ok(SwapOracleOutcome {
        lambda,
        pointwise_product,
        product_deviation,
        multiplicative: product_deviation <= ZERO_EPS,
    })
}

/// Trace-norm difference between the channel acting on the right and on
/// the left qudit of a maximally entangled pair. Zero exactly when the
/// channel is X-symmetric, because side-switching transposes the Weyl
/// operators and `(X^a Z^b)^T = X^{-a} Z^b` up to phase.
pub fn transpose_side_check(ch: &PauliChannel) -> Result<f64> {
    validate_oracle_dim(ch.d)?;
    let pair = QuditBipartiteState::maximally_entangled(ch.d)?;
    let right = pair.apply_channel_right(ch)?;
    let left = pair.apply_channel_left(ch)?;
    let delta = &right.rho - &left.rho;
    let eigen = delta.symmetric_eigenvalues();
    Ok(eigen.iter().map(|e| e.abs()).sum())
}

//! Generating function of `E[Lambda_n]` and its dominant-pole asymptotics.
//!
//! `G(x) = sum_{n>=1} E[Lambda_n] x^n` has a closed form built from basic
//! q-hypergeometric series
//!
//! ```text
//! r_phi_s[c_1..c_r; d_1..d_s](q, z)
//!   = sum_m ((c_1;q)_m ... (c_r;q)_m) / ((d_1;q)_m ... (d_s;q)_m (q;q)_m)
//!     * [(-1)^m q^(m(m-1)/2)]^(1+s-r) * z^m
//! ```
//!
//! evaluated by running-term recurrence. Every series used here carries at
//! least one `q^(m(m-1)/2)` factor, so the sums are entire in `z` and
//! truncate after a few dozen terms. `G` is a rational expression in those
//! series; its singularity nearest the origin is a simple pole `rho`, and
//! the residue there gives `E[Lambda_n] ~ A * B^n` with `B = 1/rho`.
//!
//! The cut-off variant follows the same plan through a 2x2 transfer system
//! (states: memory ahead of / behind its partner), with entry, transfer,
//! and exit series and the conditioned-geometric scale
//! `R = (1-q) / (q (1 - q^{T_c}))`. Extreme regimes with `lambda` far
//! below `q` and cut-offs in the thousands overflow the growing
//! `(q/lambda)^t` exit weights; practical cut-offs stay modest.
//!
//! Pole finding is deliberately dumb and auditable: an outward scan until
//! the sign changes, then bisection, with iteration count, bracket, and
//! final residual reported in [`SolverReport`].

use crate::error::{NoiseError, Result};
use crate::recursion::with_nudged_lambda;

/// Magnitude below which a structural denominator counts as singular.
const SINGULAR_EPS: f64 = 1e-9;
/// Series terms are negligible below this fraction of the running sum.
const TERM_EPS: f64 = 1e-16;
/// Consecutive negligible terms required before a series stops.
const SETTLED_TERMS: usize = 3;
/// Hard cap on series terms.
const MAX_TERMS: usize = 10_000;
/// Default upper end of the pole scan.
const POLE_SCAN_LIMIT: f64 = 1e6;

/// q-shifted factorial `(a;q)_m = prod_{i=0}^{m-1} (1 - a q^i)`.
pub fn q_pochhammer(a: f64, q: f64, m: u32) -> f64 {
    let mut acc = 1.0;
    let mut qi = 1.0;
    for _ in 0..m {
        acc *= 1.0 - a * qi;
        qi *= q;
    }
    acc
}

/// One basic q-hypergeometric series, held as its parameter lists.
#[derive(Debug, Clone, PartialEq)]
pub struct QHypergeometricSpec {
    pub numerator_params: Vec<f64>,
    pub denominator_params: Vec<f64>,
    pub q: f64,
}

impl QHypergeometricSpec {
    pub fn new(numerator_params: Vec<f64>, denominator_params: Vec<f64>, q: f64) -> Self {
        Self { numerator_params, denominator_params, q }
    }

    /// `T_{m+1} / T_m` with the `z^{m+1}` factor left out.
    fn coefficient_ratio(&self, m: i32) -> Result<f64> {
        let q = self.q;
        let qm = q.powi(m);
        let mut ratio = 1.0;
        for &c in &self.numerator_params {
            ratio *= 1.0 - c * qm;
        }
        for &d in &self.denominator_params {
            let f = 1.0 - d * qm;
            if f.abs() < SINGULAR_EPS {
                return Err(NoiseError::NearSingularParameters {
                    factor: f,
                    context: "q-series denominator parameter",
                });
            }
            ratio /= f;
        }
        let f = 1.0 - q.powi(m + 1);
        if f.abs() < SINGULAR_EPS {
            return Err(NoiseError::NearSingularParameters {
                factor: f,
                context: "q-series implicit (q;q) factor",
            });
        }
        ratio /= f;
        // [(-1) q^m]^(1+s-r) from the q^(m(m-1)/2) normaliser.
        let e = 1 + self.denominator_params.len() as i32 - self.numerator_params.len() as i32;
        debug_assert!(e >= 0, "series with r > s + 1 are not used here");
        if e > 0 {
            let mag = q.powi(m * e);
            ratio *= if e % 2 == 1 { -mag } else { mag };
        }
        Ok(ratio)
    }

    fn sum_terms(&self, first: f64, mut advance: impl FnMut(f64, i32) -> Result<f64>) -> Result<f64> {
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        let mut term = first;
        let mut settled = 0;
        for m in 0..MAX_TERMS {
            let y = term - comp;
            let t = sum + y;
            comp = (t - sum) - y;
            sum = t;
            if term.abs() <= TERM_EPS * sum.abs().max(1e-100) {
                settled += 1;
                if settled >= SETTLED_TERMS {
                    return Ok(sum);
                }
            } else {
                settled = 0;
            }
            term = advance(term, m as i32)?;
            if !term.is_finite() {
                return Err(NoiseError::SeriesDivergence { terms: m + 1, last_term: term });
            }
        }
        Err(NoiseError::SeriesDivergence { terms: MAX_TERMS, last_term: term })
    }

    /// Series value at argument `z`.
    pub fn eval(&self, z: f64) -> Result<f64> {
        self.sum_terms(1.0, |term, m| Ok(term * self.coefficient_ratio(m)? * z))
    }

    /// Termwise derivative with respect to `z`.
    pub fn eval_dz(&self, z: f64) -> Result<f64> {
        let first = self.coefficient_ratio(0)?;
        self.sum_terms(first, |term, m| {
            // u_m = m c_m z^{m-1}; here `m` counts from 0 for u_{m+1}.
            let m = m + 1;
            Ok(term * ((m + 1) as f64 / m as f64) * self.coefficient_ratio(m)? * z)
        })
    }
}

/// Evaluates a one-off series; thin wrapper over [`QHypergeometricSpec::eval`].
pub fn q_hypergeometric(spec: &QHypergeometricSpec, z: f64) -> Result<f64> {
    spec.eval(z)
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

/// The four series the cut-off-free `G` is built from, evaluated at `x`.
///
/// Returned in the order: entire part, numerator pair (first factor,
/// second factor is index 3), and the pole-carrying denominator series
/// (index 2). Concretely `G(x) = x phi_1 + x^2 c phi_2 phi_4 / (1 - x phi_3)`
/// with `c = (1-q)^2 lambda / ((lambda-q)(1-lambda q))`.
pub fn phi_functions(x: f64, q: f64, lambda: f64) -> Result<(f64, f64, f64, f64)> {
    validate_q_lambda(q, lambda)?;
    with_nudged_lambda(lambda, |l| phi_functions_raw(x, q, l))
}

fn phi_specs(q: f64, l: f64) -> [QHypergeometricSpec; 4] {
    [
        QHypergeometricSpec::new(vec![q, q, 0.0], vec![q * q, l * q, q / l], q),
        QHypergeometricSpec::new(vec![q, 0.0], vec![q * q / l, l * q], q),
        QHypergeometricSpec::new(vec![q, 0.0], vec![q * q, q * l * l], q),
        QHypergeometricSpec::new(vec![l * q, 0.0], vec![l * q * q, q * l * l], q),
    ]
}

fn phi_functions_raw(x: f64, q: f64, l: f64) -> Result<(f64, f64, f64, f64)> {
    let p = 1.0 - q;
    let z1 = x * p * q * (1.0 / l - l);
    let z2 = x * p * q * (1.0 - l * l);
    let [s1, s2, s3, s4] = phi_specs(q, l);
    Ok((s1.eval(z1)?, s2.eval(z1)?, s3.eval(z2)?, s4.eval(z2)?))
}

fn pole_coupling(q: f64, l: f64) -> Result<f64> {
    let d1 = l - q;
    if d1.abs() < SINGULAR_EPS {
        return Err(NoiseError::NearSingularParameters {
            factor: d1,
            context: "memory-success resonance lambda = q",
        });
    }
    let d2 = 1.0 - l * q;
    Ok((1.0 - q).powi(2) * l / (d1 * d2))
}

/// Closed-form `G(x)` without a cut-off. Finite for `x` below the
/// dominant pole; near-pole evaluations fail as near-singular.
pub fn generating_function(x: f64, q: f64, lambda: f64) -> Result<f64> {
    validate_q_lambda(q, lambda)?;
    if q == 0.0 || lambda == 1.0 {
        // E[Lambda_n] = 1 for every n, so G is plain geometric.
        let den = 1.0 - x;
        if den.abs() < SINGULAR_EPS {
            return Err(NoiseError::NearSingularParameters {
                factor: den,
                context: "generating-function pole",
            });
        }
        return Ok(x / den);
    }
    with_nudged_lambda(lambda, |l| {
        let (phi1, phi2, phi3, phi4) = phi_functions_raw(x, q, l)?;
        let den = 1.0 - x * phi3;
        if den.abs() < SINGULAR_EPS {
            return Err(NoiseError::NearSingularParameters {
                factor: den,
                context: "generating-function pole",
            });
        }
        Ok(x * phi1 + x * x * pole_coupling(q, l)? * phi2 * phi4 / den)
    })
}

/// Audit trail of one pole search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverReport {
    /// Function evaluations spent scanning plus bisecting.
    pub iterations: u32,
    /// Sign-change bracket the scan produced.
    pub bracket: (f64, f64),
    /// `|f(rho)|` at the returned root.
    pub residual: f64,
}

impl SolverReport {
    fn exact() -> Self {
        SolverReport { iterations: 0, bracket: (0.0, 0.0), residual: 0.0 }
    }
}

/// Scans outward in steps of `step` until `f` changes sign, then bisects.
/// `f(0+)` is assumed positive; the smallest positive root is returned.
pub(crate) fn find_smallest_root(
    f: &mut dyn FnMut(f64) -> Result<f64>,
    step: f64,
    x_up: f64,
) -> Result<(f64, SolverReport)> {
    let mut evals: u32 = 0;
    let mut lo = 0.0f64;
    let mut x = step;
    let (mut lo, mut hi) = loop {
        if x > x_up {
            return Err(NoiseError::RootNotBracketed { x_up });
        }
        let fx = f(x)?;
        evals += 1;
        if fx == 0.0 {
            return Ok((x, SolverReport { iterations: evals, bracket: (lo, x), residual: 0.0 }));
        }
        if fx < 0.0 {
            break (lo, x);
        }
        lo = x;
        x += step;
    };
    let bracket = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // interval at floating-point resolution
        }
        let fm = f(mid)?;
        evals += 1;
        if fm == 0.0 {
            lo = mid;
            hi = mid;
            break;
        }
        if fm > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let root = 0.5 * (lo + hi);
    let residual = f(root)?.abs();
    evals += 1;
    Ok((root, SolverReport { iterations: evals, bracket, residual }))
}

/// Smallest positive root of `1 - x phi_3(x) = 0`, the dominant pole of
/// the cut-off-free `G`.
pub fn find_dominant_pole(q: f64, lambda: f64) -> Result<f64> {
    validate_q_lambda(q, lambda)?;
    if q == 0.0 || lambda == 1.0 {
        return Ok(1.0);
    }
    with_nudged_lambda(lambda, |l| find_dominant_pole_raw(q, l).map(|(rho, _)| rho))
}

fn find_dominant_pole_raw(q: f64, l: f64) -> Result<(f64, SolverReport)> {
    let spec = phi_specs(q, l).into_iter().nth(2).unwrap();
    let zc = (1.0 - q) * q * (1.0 - l * l);
    let mut f = |x: f64| Ok(1.0 - x * spec.eval(zc * x)?);
    // First-guess scale 1 / phi_3(1); the root of the linearised equation.
    let guess = match spec.eval(zc) {
        Ok(v) if v > 0.0 && v.is_finite() => 1.0 / v,
        _ => 1.0,
    };
    let step = 0.05 * guess.max(1e-3);
    find_smallest_root(&mut f, step, POLE_SCAN_LIMIT)
}

/// Dominant-pole data: `E[Lambda_n] ~ A * B^n` = `[-residue] * B^{n+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleAsymptotics {
    pub rho: f64,
    /// Residue of `G` at `rho` (negative for a positive sequence).
    pub residue: f64,
    pub a: f64,
    pub b: f64,
    pub solver_report: SolverReport,
}

impl PoleAsymptotics {
    /// The asymptotic estimate `A * B^n`.
    pub fn predict(&self, n: usize) -> f64 {
        self.a * self.b.powi(n as i32)
    }

    fn trivial() -> Self {
        PoleAsymptotics {
            rho: 1.0,
            residue: -1.0,
            a: 1.0,
            b: 1.0,
            solver_report: SolverReport::exact(),
        }
    }
}

fn finish_asymptotics(
    rho: f64,
    report: SolverReport,
    a: f64,
) -> Result<PoleAsymptotics> {
    let b = 1.0 / rho;
    if !(a.is_finite() && b.is_finite() && a > 0.0 && b > 0.0) {
        return Err(NoiseError::InvalidParameter(format!(
            "asymptotic amplitude/base not positive finite: A = {a}, B = {b}"
        )));
    }
    // B may poke past 1 by floating-point noise only.
    let b = if b > 1.0 && b <= 1.0 + 1e-9 { 1.0 } else { b };
    if b > 1.0 {
        return Err(NoiseError::InvalidParameter(format!(
            "asymptotic base exceeds 1: B = {b}"
        )));
    }
    Ok(PoleAsymptotics { rho, residue: -a * rho, a, b, solver_report: report })
}

/// Pole position, residue, and `(A, B)` for the cut-off-free chain.
pub fn asymptotic_ab(q: f64, lambda: f64) -> Result<PoleAsymptotics> {
    validate_q_lambda(q, lambda)?;
    if q == 0.0 || lambda == 1.0 {
        return Ok(PoleAsymptotics::trivial());
    }
    with_nudged_lambda(lambda, |l| {
        let (rho, report) = find_dominant_pole_raw(q, l)?;
        let p = 1.0 - q;
        let z1 = rho * p * q * (1.0 / l - l);
        let z2 = rho * p * q * (1.0 - l * l);
        let [_, s2, s3, s4] = phi_specs(q, l);
        let phi2 = s2.eval(z1)?;
        let phi3 = s3.eval(z2)?;
        let phi3_dx = s3.eval_dz(z2)? * p * q * (1.0 - l * l);
        let phi4 = s4.eval(z2)?;
        let a = pole_coupling(q, l)? * rho * phi2 * phi4 / (phi3 + rho * phi3_dx);
        finish_asymptotics(rho, report, a)
    })
}

/// One cut-off transfer/entry series: `pref * x * S(zc * x)`.
struct ScaledSeries {
    pref: f64,
    zc: f64,
    spec: QHypergeometricSpec,
}

impl ScaledSeries {
    fn value(&self, x: f64) -> Result<f64> {
        Ok(self.pref * x * self.spec.eval(self.zc * x)?)
    }

    fn dvalue(&self, x: f64) -> Result<f64> {
        Ok(self.pref * (self.spec.eval(self.zc * x)? + x * self.zc * self.spec.eval_dz(self.zc * x)?))
    }
}

fn structural(reciprocal: f64, context: &'static str) -> Result<f64> {
    if reciprocal.abs() < SINGULAR_EPS {
        Err(NoiseError::NearSingularParameters { factor: reciprocal, context })
    } else {
        Ok(reciprocal)
    }
}

/// The 2x2 transfer system of the cut-off chain. State 1 is "own memory
/// waiting on the later neighbour", state 2 the mirrored case; `entry_*`
/// feed from the first segment, `exit_*` close the last.
struct CutoffSystem {
    r: f64,
    q: f64,
    l: f64,
    t_c: u32,
    t11: ScaledSeries,
    t22: ScaledSeries,
    t12: ScaledSeries,
    t21: ScaledSeries,
    entry1: ScaledSeries,
    entry2: ScaledSeries,
}

impl CutoffSystem {
    fn new(q: f64, l: f64, t_c: u32) -> Result<Self> {
        let p = 1.0 - q;
        let r = p / (q * (1.0 - q.powf(t_c as f64)));
        let horizon = |base: f64| base.powf(t_c as f64 + 1.0);
        let up = 1.0 - l * l; // lambda-advantage decay
        let down = 1.0 / (l * l) - 1.0; // lambda-deficit growth
        let t11 = ScaledSeries {
            pref: q * r / p,
            zc: q * q * r * up,
            spec: QHypergeometricSpec::new(vec![q, 0.0], vec![q * q, q * l * l], q),
        };
        let t22 = ScaledSeries {
            pref: -horizon(q) * r / p,
            zc: horizon(q) * q * r * down,
            spec: QHypergeometricSpec::new(vec![q, 0.0], vec![q * q, q / (l * l)], q),
        };
        let t12 = ScaledSeries {
            pref: -r * horizon(q * l * l) / structural(1.0 - q * l * l, "transfer 1->2 weight")?,
            zc: horizon(q) * q * r * up,
            spec: QHypergeometricSpec::new(vec![q, 0.0], vec![q, q * q * l * l], q),
        };
        let t21 = ScaledSeries {
            pref: -r / structural(1.0 - l * l / q, "transfer 2->1 weight")?,
            zc: q * q * r * down,
            spec: QHypergeometricSpec::new(vec![q, 0.0], vec![q, q * q / (l * l)], q),
        };
        let entry1 = ScaledSeries {
            pref: -r / structural(1.0 - l / q, "entry weight")?,
            zc: q * q * r * (1.0 / l - l),
            spec: QHypergeometricSpec::new(vec![q, 0.0], vec![q * q / l, q * l], q),
        };
        let entry2 = ScaledSeries {
            pref: -r * horizon(q * l) / structural(1.0 - l * q, "entry weight")?,
            zc: horizon(q) * q * r * (1.0 / l - l),
            spec: QHypergeometricSpec::new(vec![q, 0.0], vec![q / l, q * q * l], q),
        };
        Ok(Self { r, q, l, t_c, t11, t22, t12, t21, entry1, entry2 })
    }

    /// `1 - (t11 + t22 + t12 t21 - t11 t22)`, whose smallest positive
    /// root is the dominant pole.
    fn pole_function(&self, x: f64) -> Result<f64> {
        let a = self.t11.value(x)?;
        let d = self.t22.value(x)?;
        let bc = self.t12.value(x)? * self.t21.value(x)?;
        Ok(1.0 - (a + d + bc - a * d))
    }

    fn pole_function_dx(&self, x: f64) -> Result<f64> {
        let a = self.t11.value(x)?;
        let d = self.t22.value(x)?;
        let da = self.t11.dvalue(x)?;
        let dd = self.t22.dvalue(x)?;
        let b = self.t12.value(x)?;
        let c = self.t21.value(x)?;
        let db = self.t12.dvalue(x)?;
        let dc = self.t21.dvalue(x)?;
        Ok(-(da + dd + db * c + b * dc - da * d - a * dd))
    }

    /// Exit sum from state 1: `sum_t (q l)^t S(q^{t+1} ... x)`.
    fn exit1(&self, x: f64) -> Result<f64> {
        let (q, l) = (self.q, self.l);
        let spec = QHypergeometricSpec::new(vec![0.0], vec![q * l * l], q);
        let zc = q * self.r * (1.0 - l * l) * x;
        let mut sum = 0.0f64;
        let mut weight = 1.0f64;
        let mut zt = zc;
        for _ in 1..=self.t_c {
            weight *= q * l;
            zt *= q;
            sum += weight * spec.eval(zt)?;
        }
        Ok(sum)
    }

    /// Exit sum from state 2, with the growing `(q/l)^t` weight.
    fn exit2(&self, x: f64) -> Result<f64> {
        let (q, l) = (self.q, self.l);
        let spec = QHypergeometricSpec::new(vec![0.0], vec![q / (l * l)], q);
        let zc = q * self.r * (1.0 / (l * l) - 1.0) * x;
        let mut sum = 0.0f64;
        let mut weight = 1.0f64;
        let mut zt = zc;
        for _ in 1..=self.t_c {
            weight *= q / l;
            zt *= q;
            sum += weight * spec.eval(zt)?;
        }
        Ok(sum)
    }

    /// Single-segment walks: both memories expire together every round.
    fn direct(&self, x: f64) -> Result<f64> {
        let (q, l) = (self.q, self.l);
        let spec = QHypergeometricSpec::new(vec![q, 0.0], vec![q / l, l * q], q);
        let zc = q * self.r * (1.0 / l - l) * x;
        let mut sum = 0.0f64;
        let mut weight = 1.0f64;
        let mut zt = zc;
        for _ in 1..=self.t_c {
            weight *= q;
            zt *= q;
            sum += weight * self.r * x * spec.eval(zt)?;
        }
        Ok(sum)
    }

    /// Numerator of the pole part: entry, transfer closure, exit.
    fn pole_numerator(&self, x: f64) -> Result<f64> {
        let e1 = self.entry1.value(x)?;
        let e2 = self.entry2.value(x)?;
        let a = self.t11.value(x)?;
        let d = self.t22.value(x)?;
        let b = self.t12.value(x)?;
        let c = self.t21.value(x)?;
        let x1 = self.exit1(x)?;
        let x2 = self.exit2(x)?;
        Ok(e1 * ((1.0 - d) * x1 + b * x2) + e2 * ((1.0 - a) * x2 + c * x1))
    }
}

/// Closed-form `G(x)` with a global cut-off `t_c`.
pub fn generating_function_cutoff(x: f64, q: f64, lambda: f64, t_c: u32) -> Result<f64> {
    validate_q_lambda(q, lambda)?;
    if t_c == 0 {
        return Err(NoiseError::InvalidParameter("cut-off t_c must be at least 1".into()));
    }
    if q == 0.0 || lambda == 1.0 || t_c == 1 {
        let den = 1.0 - x;
        if den.abs() < SINGULAR_EPS {
            return Err(NoiseError::NearSingularParameters {
                factor: den,
                context: "generating-function pole",
            });
        }
        return Ok(x / den);
    }
    with_nudged_lambda(lambda, |l| {
        let sys = CutoffSystem::new(q, l, t_c)?;
        let den = sys.pole_function(x)?;
        if den.abs() < SINGULAR_EPS {
            return Err(NoiseError::NearSingularParameters {
                factor: den,
                context: "generating-function pole",
            });
        }
        Ok(sys.direct(x)? + sys.r * x * sys.pole_numerator(x)? / den)
    })
}

/// Pole position, residue, and `(A, B)` for the cut-off chain.
pub fn asymptotic_ab_cutoff(q: f64, lambda: f64, t_c: u32) -> Result<PoleAsymptotics> {
    validate_q_lambda(q, lambda)?;
    if t_c == 0 {
        return Err(NoiseError::InvalidParameter("cut-off t_c must be at least 1".into()));
    }
    if q == 0.0 || lambda == 1.0 || t_c == 1 {
        return Ok(PoleAsymptotics::trivial());
    }
    with_nudged_lambda(lambda, |l| {
        let sys = CutoffSystem::new(q, l, t_c)?;
        let mut f = |x: f64| sys.pole_function(x);
        // E[Lambda] <= 1 keeps the pole at or beyond 1.
        let (rho, report) = find_smallest_root(&mut f, 0.05, POLE_SCAN_LIMIT)?;
        // G ~ R rho N(rho) / (D'(rho)(x - rho)) near the pole, so the
        // coefficient amplitude carries a minus from 1/(x - rho).
        let a = -sys.r * sys.pole_numerator(rho)? / sys.pole_function_dx(rho)?;
        finish_asymptotics(rho, report, a)
    })
}

/// Result of the generating-function self-test on a known sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FibonacciCheck {
    pub rho: f64,
    pub residue: f64,
    /// Dominant-pole estimate of the 10th term (exact value 55).
    pub approx_f10: f64,
}

/// Runs the pole/residue machinery on `x / (1 - x - x^2)`, whose
/// coefficients are the Fibonacci numbers, and estimates term 10.
pub fn fibonacci_check() -> Result<FibonacciCheck> {
    let mut f = |x: f64| Ok(1.0 - x - x * x);
    let (rho, _) = find_smallest_root(&mut f, 0.05, 10.0)?;
    // Residue of x / (1 - x - x^2): numerator over the derivative there.
    let residue = rho / (-1.0 - 2.0 * rho);
    let approx_f10 = -residue * (1.0 / rho).powi(11);
    Ok(FibonacciCheck { rho, residue, approx_f10 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::recursion::{expected_lambda, expected_lambda_cutoff};
    use approx::assert_relative_eq;

    #[test]
    fn pochhammer_matches_hand_products() {
        assert_eq!(q_pochhammer(0.3, 0.5, 0), 1.0);
        let by_hand = (1.0 - 0.5) * (1.0 - 0.25) * (1.0 - 0.125);
        assert_relative_eq!(q_pochhammer(0.5, 0.5, 3), by_hand, epsilon = 1e-15);
        assert_eq!(q_pochhammer(0.0, 0.9, 7), 1.0);
    }

    #[test]
    fn euler_sum_inverts_infinite_product() {
        // sum_m z^m / (q;q)_m = 1 / prod_{i>=0} (1 - z q^i).
        let (q, z) = (0.5, 0.3);
        let series = QHypergeometricSpec::new(vec![0.0], vec![], q);
        let lhs = series.eval(z).unwrap();
        let mut product = 1.0;
        for i in 0..200 {
            product *= 1.0 - z * q.powi(i);
        }
        assert_relative_eq!(lhs, 1.0 / product, max_relative = 1e-13);
    }

    #[test]
    fn alternating_euler_sum_is_the_product() {
        // sum_m q^(m(m-1)/2) (-z)^m / (q;q)_m = prod_{i>=0} (1 - z q^i).
        let (q, z) = (0.6, 0.8);
        let series = QHypergeometricSpec::new(vec![], vec![], q);
        let lhs = series.eval(z).unwrap();
        let mut product = 1.0;
        for i in 0..300 {
            product *= 1.0 - z * q.powi(i);
        }
        assert_relative_eq!(lhs, product, max_relative = 1e-13);
    }

    #[test]
    fn termwise_derivative_matches_central_difference() {
        let spec = QHypergeometricSpec::new(vec![0.6, 0.0], vec![0.36, 0.55], 0.6);
        for &z in &[0.0, 0.2, -0.4, 1.3] {
            let h = 1e-6;
            let fd = (spec.eval(z + h).unwrap() - spec.eval(z - h).unwrap()) / (2.0 * h);
            assert_relative_eq!(spec.eval_dz(z).unwrap(), fd, max_relative = 1e-7, epsilon = 1e-9);
        }
    }

    #[test]
    fn fibonacci_pole_and_estimate() {
        let check = fibonacci_check().unwrap();
        assert_relative_eq!(check.rho, (5.0f64.sqrt() - 1.0) / 2.0, epsilon = 1e-9);
        assert_relative_eq!(check.residue, -0.27639320225, epsilon = 1e-9);
        assert_relative_eq!(check.approx_f10, 55.0036, epsilon = 1e-3);
        assert!((check.approx_f10 - 55.0).abs() < 0.01);
    }

    #[test]
    fn trivial_parameters_put_the_pole_at_one() {
        assert_eq!(find_dominant_pole(0.5, 1.0).unwrap(), 1.0);
        assert_eq!(find_dominant_pole(0.0, 0.9).unwrap(), 1.0);
        let pa = asymptotic_ab(0.7, 1.0).unwrap();
        assert_eq!((pa.a, pa.b), (1.0, 1.0));
    }

    #[test]
    fn pole_solution_has_small_residual() {
        let pa = asymptotic_ab(0.6, 0.98).unwrap();
        assert!(pa.rho > 1.0);
        assert!(pa.solver_report.residual < 1e-12);
        assert!(pa.solver_report.iterations > 0);
        assert!(pa.solver_report.bracket.0 < pa.rho && pa.rho <= pa.solver_report.bracket.1);
        assert!((0.0..=1.0).contains(&pa.b));
        assert!(pa.residue < 0.0);
        assert_relative_eq!(pa.residue, -pa.a * pa.rho, max_relative = 1e-12);
    }

    #[test]
    fn asymptote_tracks_the_exact_mean() {
        for &(q, lambda) in &[(0.6, 0.98), (0.9, 0.99)] {
            let pa = asymptotic_ab(q, lambda).unwrap();
            let n = 30;
            let exact = expected_lambda(n, q, lambda).unwrap();
            assert_relative_eq!(pa.predict(n), exact, max_relative = 1e-2);
        }
    }

    #[test]
    fn series_expansion_of_g_matches_exact_means() {
        let (q, lambda) = (0.6, 0.95);
        let pa = asymptotic_ab(q, lambda).unwrap();
        let x = 0.5 * pa.rho;
        let g = generating_function(x, q, lambda).unwrap();
        let mut partial = 0.0;
        let n_terms = 60;
        for n in 1..=n_terms {
            partial += expected_lambda(n, q, lambda).unwrap() * x.powi(n as i32);
        }
        let bx = pa.b * x;
        let tail = pa.a * bx.powi(n_terms as i32 + 1) / (1.0 - bx);
        assert!((g - partial).abs() <= 2.0 * tail + 1e-10, "G={g} partial={partial} tail={tail}");
    }

    #[test]
    fn cutoff_series_expansion_matches_exact_means() {
        let (q, lambda, t_c) = (0.6, 0.95, 5);
        let pa = asymptotic_ab_cutoff(q, lambda, t_c).unwrap();
        let x = 0.5 * pa.rho;
        let g = generating_function_cutoff(x, q, lambda, t_c).unwrap();
        let mut partial = 0.0;
        let n_terms = 60;
        for n in 1..=n_terms {
            partial += expected_lambda_cutoff(n, q, lambda, t_c).unwrap() * x.powi(n as i32);
        }
        let bx = pa.b * x;
        let tail = pa.a * bx.powi(n_terms as i32 + 1) / (1.0 - bx);
        assert!((g - partial).abs() <= 2.0 * tail + 1e-10, "G={g} partial={partial} tail={tail}");
    }

    #[test]
    fn cutoff_asymptote_tracks_the_exact_mean() {
        let (q, lambda, t_c) = (0.9, 0.99, 12);
        let pa = asymptotic_ab_cutoff(q, lambda, t_c).unwrap();
        let n = 30;
        let exact = expected_lambda_cutoff(n, q, lambda, t_c).unwrap();
        assert_relative_eq!(pa.predict(n), exact, max_relative = 1e-2);
    }

    #[test]
    fn unit_cutoff_is_the_trivial_asymptote() {
        let pa = asymptotic_ab_cutoff(0.8, 0.9, 1).unwrap();
        assert_eq!((pa.a, pa.b, pa.rho), (1.0, 1.0, 1.0));
    }

    #[test]
    fn loose_cutoff_asymptote_approaches_free_one() {
        let free = asymptotic_ab(0.6, 0.95).unwrap();
        let capped = asymptotic_ab_cutoff(0.6, 0.95, 60).unwrap();
        assert_relative_eq!(capped.b, free.b, max_relative = 1e-9);
        assert_relative_eq!(capped.a, free.a, max_relative = 1e-6);
    }

    #[test]
    fn tighter_cutoff_slows_the_decay() {
        // Smaller T_c discards more stragglers, so B should move toward 1.
        let b6 = asymptotic_ab_cutoff(0.8, 0.95, 6).unwrap().b;
        let b20 = asymptotic_ab_cutoff(0.8, 0.95, 20).unwrap().b;
        let free = asymptotic_ab(0.8, 0.95).unwrap().b;
        assert!(b6 > b20, "B(T_c=6)={b6} vs B(T_c=20)={b20}");
        assert!(b20 > free - 1e-12);
    }

    #[test]
    fn domain_violations_are_rejected() {
        assert!(asymptotic_ab(1.0, 0.9).is_err());
        assert!(asymptotic_ab(0.5, 0.0).is_err());
        assert!(asymptotic_ab_cutoff(0.5, 0.9, 0).is_err());
        assert!(generating_function(0.5, -0.1, 0.9).is_err());
    }
}

//! Cross-checks of the recursion engine against closed forms and literal
//! enumeration, including the cut-off limiting cases.

use swapasap::distribution::brute_force_expected_lambda;
use swapasap::recursion::{expected_lambda, expected_lambda_cutoff};

const Q_GRID: [f64; 5] = [0.1, 0.3, 0.5, 0.7, 0.9];
const L_GRID: [f64; 5] = [0.82, 0.87, 0.93, 0.96, 0.99];

fn two_segment_closed_form(q: f64, l: f64) -> f64 {
    (1.0 - q) * (1.0 + q * l) / ((1.0 + q) * (1.0 - q * l))
}

/// Horizon giving brute-force tail below `tail` for an `n`-segment box.
fn horizon(n: usize, q: f64, tail: f64) -> u32 {
    ((tail / n as f64).ln() / q.ln()).ceil() as u32 + 1
}

#[test]
fn two_segment_recursion_matches_closed_form_on_grid() {
    for q in Q_GRID {
        for l in L_GRID {
            let rec = expected_lambda(2, q, l).unwrap();
            let closed = two_segment_closed_form(q, l);
            assert!(
                (rec - closed).abs() < 1e-10,
                "q={q} l={l}: {rec} vs {closed}"
            );
        }
    }
}

#[test]
fn two_segment_closed_form_matches_enumeration() {
    for q in Q_GRID {
        for l in L_GRID {
            let t_max = horizon(2, q, 1e-12);
            let (brute, tail) = brute_force_expected_lambda(2, q, l, t_max).unwrap();
            assert!(tail < 1e-12, "tail {tail} at q={q}");
            let closed = two_segment_closed_form(q, l);
            assert!(
                (brute - closed).abs() < 1e-10 + tail,
                "q={q} l={l}: {brute} vs {closed}"
            );
        }
    }
}

#[test]
fn recursion_matches_enumeration_for_short_chains() {
    // Spec grid for oracle equivalence; the tolerance carries the box tail.
    for n in [2usize, 3, 4] {
        for q in [0.3, 0.6, 0.9] {
            // Keep the instance count under budget: T^n <= ~1e8.
            let t_max = match (n, q < 0.65) {
                (4, false) => 100,
                (4, true) => 45,
                (3, false) => 200,
                (3, true) => 60,
                _ => 300,
            };
            for l in [0.8, 0.95, 0.99] {
                let (brute, tail) = brute_force_expected_lambda(n, q, l, t_max).unwrap();
                let rec = expected_lambda(n, q, l).unwrap();
                assert!(
                    (rec - brute).abs() <= 1e-9 + tail,
                    "n={n} q={q} l={l}: {rec} vs {brute} (tail {tail})"
                );
            }
        }
    }
}

#[test]
fn unit_cutoff_is_exactly_one() {
    for q in Q_GRID {
        for l in L_GRID {
            for n in [1usize, 2, 3, 7] {
                assert_eq!(expected_lambda_cutoff(n, q, l, 1).unwrap(), 1.0);
            }
        }
    }
}

#[test]
fn loose_cutoff_approaches_the_free_chain() {
    for n in [2usize, 3, 5] {
        for (q, t_c) in [(0.3, 30u32), (0.6, 80), (0.8, 150)] {
            for l in [0.85, 0.97] {
                let free = expected_lambda(n, q, l).unwrap();
                let cut = expected_lambda_cutoff(n, q, l, t_c).unwrap();
                assert!(
                    (free - cut).abs() < 1e-8,
                    "n={n} q={q} t_c={t_c} l={l}: {cut} vs {free}"
                );
            }
        }
    }
}

#[test]
fn hand_enumerated_tight_cutoff_value() {
    // n=2, T_c=2, q=0.5, lambda=0.8: conditioned box {1,2}^2 gives 41/45.
    let e = expected_lambda_cutoff(2, 0.5, 0.8, 2).unwrap();
    assert!((e - 41.0 / 45.0).abs() < 1e-9, "{e}");
}

#[test]
fn cutoff_agrees_with_conditioned_enumeration() {
    // Direct check of the cut-off recursion against the conditioned law:
    // E[lambda^K | all t <= T_c] from the exact pmf of the truncated box.
    use swapasap::distribution::{pmf_to_expected_lambda, roughness_pmf_cutoff};
    for n in [2usize, 3, 4] {
        for q in [0.4, 0.7] {
            for t_c in [2u32, 4, 9] {
                for l in [0.8, 0.95] {
                    let rec = expected_lambda_cutoff(n, q, l, t_c).unwrap();
                    let pmf = roughness_pmf_cutoff(n, q, t_c, 1e-12).unwrap();
                    let via = pmf_to_expected_lambda(&pmf, l);
                    assert!(
                        (rec - via).abs() <= 1e-9 + pmf.tail_bound,
                        "n={n} q={q} t_c={t_c} l={l}: {rec} vs {via}"
                    );
                }
            }
        }
    }
}

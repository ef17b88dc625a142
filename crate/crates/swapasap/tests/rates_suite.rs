//! Key-rate behaviour: the secret-key fraction and its threshold, delivery
//! times, convexity dominance of binning, and the cut-off necessity case.

use swapasap::distribution::roughness_pmf;
use swapasap::rates::{
    expected_delivery_cutoff, expected_delivery_no_cutoff, expected_delivery_wait_full_window,
    lambda_min, optimize_cutoff, skf_bb84, skr, skr_binned,
};
use swapasap::{ChainParams, WernerParam};

fn werner(v: f64) -> WernerParam {
    WernerParam::new(v).unwrap()
}

#[test]
fn fraction_endpoints_and_example() {
    assert_eq!(skf_bb84(werner(1.0)), 1.0);
    assert_eq!(skf_bb84(werner(0.7)), 0.0);
    // 1 - 2 h(0.05), h(0.05) = 0.2863969...
    assert!((skf_bb84(werner(0.9)) - 0.4272061).abs() < 1e-6);
}

#[test]
fn threshold_straddles_zero() {
    let lm = lambda_min();
    assert_eq!(skf_bb84(werner(lm - 1e-9)), 0.0);
    assert!(skf_bb84(werner(lm + 1e-9)) > 0.0);
}

#[test]
fn delivery_time_closed_cases() {
    // Single segment is plain geometric.
    assert!((expected_delivery_no_cutoff(1, 0.25).unwrap() - 4.0).abs() < 1e-12);
    // Two segments at p = 1/2: 4 - 1/(1 - 1/4) = 8/3.
    let e = expected_delivery_no_cutoff(2, 0.5).unwrap();
    assert!((e - 8.0 / 3.0).abs() < 1e-12, "{e}");
    // Unit cut-off forces a joint success: 1/p^n conditional rounds.
    let e = expected_delivery_cutoff(2, 0.5, 1).unwrap();
    assert!((e - 4.0).abs() < 1e-12, "{e}");
    for p in [0.3, 0.6] {
        let e = expected_delivery_cutoff(3, p, 1).unwrap();
        assert!((e - 1.0 / p.powi(3)).abs() < 1e-9, "{e}");
    }
    // Certain success delivers in one round regardless of the window.
    assert_eq!(expected_delivery_cutoff(4, 1.0, 9).unwrap(), 1.0);
}

#[test]
fn generous_window_recovers_the_free_delivery_time() {
    for (n, p) in [(2usize, 0.5), (4, 0.3), (6, 0.55)] {
        let t_c = ((1e-14f64).ln() / (1.0f64 - p).ln()).ceil() as u32 + 1;
        let free = expected_delivery_no_cutoff(n, p).unwrap();
        let cut = expected_delivery_cutoff(n, p, t_c).unwrap();
        assert!((free - cut).abs() < 1e-8, "n={n} p={p}: {cut} vs {free}");
    }
}

#[test]
fn waiting_the_window_out_never_beats_restarting_early() {
    for (n, p, t_c) in [(2usize, 0.4, 3u32), (3, 0.2, 8), (5, 0.7, 4)] {
        let restart = expected_delivery_cutoff(n, p, t_c).unwrap();
        let wait = expected_delivery_wait_full_window(n, p, t_c).unwrap();
        assert!(wait >= restart - 1e-9, "n={n} p={p} t_c={t_c}: {wait} < {restart}");
    }
}

#[test]
fn binned_fraction_dominates_the_plugin_fraction() {
    for (n, p, l) in [
        (2usize, 0.5, 0.97),
        (3, 0.5, 0.95),
        (4, 0.7, 0.99),
        (5, 0.4, 0.995),
    ] {
        let params = ChainParams::new(n, p, l).unwrap();
        let pmf = roughness_pmf(n, params.q(), 1e-12).unwrap();
        let plain = skr(&params).unwrap();
        let binned = skr_binned(&params, &pmf).unwrap();
        let sb = binned.binned.as_ref().unwrap().skf_binned;
        assert!(
            sb + 1e-12 >= plain.skf,
            "n={n} p={p} l={l}: {sb} < {}",
            plain.skf
        );
    }
}

#[test]
fn starved_chain_needs_a_cutoff_for_positive_rate() {
    // Deep chain, slow links, good memory: without a cut-off the roughness
    // drives the mean Werner parameter under the key threshold; a finite
    // window restores a strictly positive rate.
    let params = ChainParams::new(5, 0.02, 0.998).unwrap();
    let free = skr(&params).unwrap();
    assert_eq!(free.skr_per_round, 0.0, "free-running rate should vanish");
    let candidates: Vec<u32> = (1..=60).collect();
    let (best, report) = optimize_cutoff(&params, &candidates).unwrap();
    assert!(best.is_some(), "optimizer should pick a finite window");
    assert!(
        report.skr_per_round > 0.0,
        "optimised rate should be positive, got {}",
        report.skr_per_round
    );
}

#[test]
fn optimizer_output_is_self_consistent() {
    let params = ChainParams::new(3, 0.3, 0.95).unwrap();
    let candidates: Vec<u32> = (1..=30).collect();
    let (best, report) = optimize_cutoff(&params, &candidates).unwrap();
    let mut check = params.clone();
    check.cutoff = best;
    let again = skr(&check).unwrap();
    assert!((again.skr_per_round - report.skr_per_round).abs() < 1e-15);
    // No candidate in the range does strictly better.
    for t_c in candidates {
        let mut other = params.clone();
        other.cutoff = Some(t_c);
        assert!(skr(&other).unwrap().skr_per_round <= report.skr_per_round + 1e-15);
    }
}

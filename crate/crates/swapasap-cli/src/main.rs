//! Command-line surface over the swap-ASAP chain analytics library.
//!
//! Every subcommand prints human-readable lines (or CSV rows for the
//! table-producing ones) to stdout, mirrors the same values as JSON under
//! `--json`, and writes files atomically when `--output` is given. Exit
//! codes: 0 success, 2 parameter errors, 3 numeric errors.

mod channels;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde_json::json;

use channels::{ChannelSpec, SecondChannelSpec};
use output::{cutoff_cell, emit, sig12};
use swapasap::chain::{fidelity_from_lambda, segment_success_prob};
use swapasap::distribution::{roughness_pmf, roughness_pmf_cutoff, RoughnessPmf};
use swapasap::genfunc::{asymptotic_ab, asymptotic_ab_cutoff, fibonacci_check, PoleAsymptotics};
use swapasap::montecarlo::estimate_pmf;
use swapasap::pauli::{
    compose, is_x_symmetric, swap_oracle, to_lambda, transpose_side_check, LambdaVector,
};
use swapasap::rates::{optimize_cutoff, optimize_segments, skr, skr_binned, RateReport};
use swapasap::recursion::{expected_lambda, expected_lambda_cutoff};
use swapasap::{ChainParams, NoiseError, WernerParam};

/// Fixed default seed: identical invocations reproduce identical output.
const DEFAULT_SEED: u64 = 42;

const RATE_HEADER: &str = "n,p,lambda,cutoff,expected_lambda,fidelity,skf,delivery_rounds,skr";

// ---------------------------------------------------------------------
// Error handling and exit codes.

#[derive(Debug)]
pub struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    pub fn parameter(message: String) -> Self {
        CliError { message: format!("parameter error: {message}"), code: 2 }
    }

    fn numeric(message: String) -> Self {
        CliError { message: format!("numeric error: {message}"), code: 3 }
    }

    /// Wraps a library error, tagging it with the parameter set that
    /// produced it and classifying it for the exit code.
    pub fn from_noise(e: NoiseError, ctx: &str) -> Self {
        match e {
            NoiseError::InvalidParameter(_) | NoiseError::ResourceLimit { .. } => {
                Self::parameter(format!("{e} [{ctx}]"))
            }
            _ => Self::numeric(format!("{e} [{ctx}]")),
        }
    }

    fn io(e: std::io::Error, path: &std::path::Path) -> Self {
        Self::parameter(format!("cannot write {}: {e}", path.display()))
    }
}

fn emit_or_die(output: Option<&PathBuf>, contents: &str) -> Result<(), CliError> {
    match output {
        Some(path) => emit(Some(path), contents).map_err(|e| CliError::io(e, path)),
        None => emit(None, contents).map_err(|e| CliError::parameter(format!("stdout: {e}"))),
    }
}

fn json_text(value: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("finite values serialize");
    s.push('\n');
    s
}

// ---------------------------------------------------------------------
// Argument declarations.

#[derive(Parser)]
#[command(
    name = "swapasap",
    version,
    about = "Werner-parameter, delivery-time, and secret-key-rate analytics \
             for homogeneous swap-ASAP repeater chains"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mean Werner parameter, fidelity, and variance of the delivered state.
    Fidelity(FidelityArgs),
    /// Distribution of the roughness K as k,probability,cumulative rows.
    Pmf(PmfArgs),
    /// Dominant-pole approximation E[Lambda_n] ~ A * B^n.
    Approx(ApproxArgs),
    /// Secret-key rate report for one parameter set.
    Skr(SkrArgs),
    /// Best cut-off for one chain, or best cut-off per segment count.
    Optimize(OptimizeArgs),
    /// Rate table over a parameter grid.
    Sweep(SweepArgs),
    /// Seeded Monte Carlo simulation of the protocol.
    Simulate(SimulateArgs),
    /// Qudit Pauli channel tools.
    Pauli(PauliArgs),
}

#[derive(Args)]
struct FidelityArgs {
    /// Number of elementary segments.
    #[arg(long)]
    n: usize,
    /// Per-round link success probability.
    #[arg(long)]
    p: f64,
    /// Per-round memory decay factor.
    #[arg(long)]
    lambda: f64,
    /// Global cut-off in rounds; omit for the free protocol.
    #[arg(long)]
    cutoff: Option<u32>,
    #[arg(long)]
    json: bool,
    /// Write to this file (atomically) instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PmfArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    /// Global cut-off in rounds; omit for the free protocol.
    #[arg(long)]
    cutoff: Option<u32>,
    /// Truncation target: captured mass is at least 1 - tail_eps.
    #[arg(long, default_value_t = 1e-10)]
    tail_eps: f64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ApproxArgs {
    /// Per-round link success probability.
    #[arg(long, required_unless_present = "fibonacci", conflicts_with = "fibonacci")]
    p: Option<f64>,
    #[arg(long, required_unless_present = "fibonacci", conflicts_with = "fibonacci")]
    lambda: Option<f64>,
    /// Cut-off variant of the asymptote.
    #[arg(long, conflicts_with = "fibonacci")]
    cutoff: Option<u32>,
    /// Self-test on the Fibonacci generating function instead.
    #[arg(long)]
    fibonacci: bool,
    #[arg(long)]
    json: bool,
    /// Write rho,residue,A,B as CSV to this file instead of stdout text.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SkrArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    cutoff: Option<u32>,
    /// Constant generation-noise factor applied per link.
    #[arg(long, default_value_t = 1.0)]
    lambda_gen: f64,
    /// Also report the roughness-binned fraction and rate.
    #[arg(long)]
    binned: bool,
    /// Truncation target for the binning pmf.
    #[arg(long, default_value_t = 1e-10)]
    tail_eps: f64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OptimizeArgs {
    /// Segment count (single-chain mode).
    #[arg(long, conflicts_with = "segments")]
    n: Option<usize>,
    /// Link success probability (single-chain mode).
    #[arg(long, conflicts_with = "segments")]
    p: Option<f64>,
    #[arg(long)]
    lambda: f64,
    #[arg(long, default_value_t = 1.0)]
    lambda_gen: f64,
    /// Inclusive cut-off candidate range, e.g. 1..60.
    #[arg(long, default_value = "1..40")]
    cutoff_range: String,
    /// Segment counts to scan (span mode), e.g. 2,3,4,5.
    #[arg(long, value_delimiter = ',', num_args = 1..)]
    segments: Option<Vec<usize>>,
    /// Total span in km (span mode); p = exp(-L / (n * l_att)) per n.
    #[arg(long)]
    l_total: Option<f64>,
    /// Attenuation length in km.
    #[arg(long, default_value_t = 22.0)]
    l_att: f64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Segment counts, e.g. 2,3,4.
    #[arg(long = "n", value_delimiter = ',', num_args = 1..)]
    n_list: Vec<usize>,
    /// Success probabilities, e.g. 0.5,0.7.
    #[arg(long = "p", value_delimiter = ',', num_args = 1.., conflicts_with = "l_list")]
    p_list: Option<Vec<f64>>,
    /// Total spans in km; per row p = exp(-L / (n * l_att)).
    #[arg(long = "l-total", value_delimiter = ',', num_args = 1..)]
    l_list: Option<Vec<f64>>,
    /// Memory decay factors, e.g. 0.95,0.99.
    #[arg(long = "lambda", value_delimiter = ',', num_args = 1..)]
    lambda_list: Vec<f64>,
    /// Cut-offs; entries are round counts or the word none.
    #[arg(long = "cutoff", value_delimiter = ',', num_args = 1..)]
    cutoff_list: Option<Vec<String>>,
    #[arg(long, default_value_t = 1.0)]
    lambda_gen: f64,
    #[arg(long, default_value_t = 22.0)]
    l_att: f64,
    /// Recorded in JSON output; reserved for sampling-based sweeps.
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    p: f64,
    /// Memory decay factor; when given, the empirical mean Werner
    /// parameter and its standard error are reported too.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    cutoff: Option<u32>,
    #[arg(long, default_value_t = 100_000)]
    runs: u64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long)]
    json: bool,
    /// Write the k,probability,cumulative table to this file.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PauliArgs {
    #[command(subcommand)]
    command: PauliCommand,
}

#[derive(Subcommand)]
enum PauliCommand {
    /// Character transform of a channel: its lambda vector.
    ToLambda(ToLambdaArgs),
    /// Composition of two channels (probability convolution).
    Compose(TwoChannelArgs),
    /// Density-matrix entanglement swap vs the entrywise lambda product.
    SwapOracle(TwoChannelArgs),
    /// Reflection symmetry p[a,b] = p[-a,b] and the side-switching gap.
    CheckXsym(OneChannelArgs),
}

#[derive(Args)]
struct ToLambdaArgs {
    /// Qudit dimension.
    #[arg(long)]
    d: usize,
    #[command(flatten)]
    channel: ChannelSpec,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct OneChannelArgs {
    #[arg(long)]
    d: usize,
    #[command(flatten)]
    channel: ChannelSpec,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TwoChannelArgs {
    #[arg(long)]
    d: usize,
    #[command(flatten)]
    first: ChannelSpec,
    #[command(flatten)]
    second: SecondChannelSpec,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    output: Option<PathBuf>,
}

// ---------------------------------------------------------------------
// Shared rendering.

fn rate_row_csv(n: usize, p: f64, lambda: f64, cutoff: Option<u32>, r: &RateReport) -> String {
    format!(
        "{n},{},{},{},{},{},{},{},{}",
        sig12(p),
        sig12(lambda),
        cutoff_cell(cutoff),
        sig12(r.expected_lambda),
        sig12(r.fidelity),
        sig12(r.skf),
        sig12(r.expected_delivery_rounds),
        sig12(r.skr_per_round)
    )
}

fn rate_row_json(n: usize, p: f64, lambda: f64, cutoff: Option<u32>, r: &RateReport) -> serde_json::Value {
    json!({
        "n": n,
        "p": p,
        "lambda": lambda,
        "cutoff": cutoff,
        "expected_lambda": r.expected_lambda,
        "fidelity": r.fidelity,
        "skf": r.skf,
        "delivery_rounds": r.expected_delivery_rounds,
        "skr": r.skr_per_round,
    })
}

fn pmf_csv(probs: &[f64]) -> String {
    let mut out = String::from("k,probability,cumulative\n");
    let mut cumulative = 0.0f64;
    for (k, &p) in probs.iter().enumerate() {
        cumulative += p;
        out.push_str(&format!("{k},{},{}\n", sig12(p), sig12(cumulative)));
    }
    out
}

fn pmf_rows_json(probs: &[f64]) -> Vec<serde_json::Value> {
    let mut cumulative = 0.0f64;
    probs
        .iter()
        .enumerate()
        .map(|(k, &p)| {
            cumulative += p;
            json!({"k": k, "probability": p, "cumulative": cumulative})
        })
        .collect()
}

fn lambda_lines(lv: &LambdaVector, label: &str) -> String {
    let d = lv.d();
    let mut out = String::new();
    for u in 0..d {
        for v in 0..d {
            let e = lv.entry(u, v);
            out.push_str(&format!("{label}[{u},{v}]: {} {}\n", sig12(e.re), sig12(e.im)));
        }
    }
    out
}

fn lambda_entries_json(lv: &LambdaVector) -> Vec<serde_json::Value> {
    let d = lv.d();
    let mut entries = Vec::with_capacity(d * d);
    for u in 0..d {
        for v in 0..d {
            let e = lv.entry(u, v);
            entries.push(json!({"u": u, "v": v, "re": e.re, "im": e.im}));
        }
    }
    entries
}

fn build_chain(
    n: usize,
    p: f64,
    lambda: f64,
    lambda_gen: f64,
    cutoff: Option<u32>,
    ctx: &str,
) -> Result<ChainParams, CliError> {
    ChainParams::build(
        n,
        p,
        lambda,
        vec![lambda_gen; n],
        vec![1.0; n.saturating_sub(1)],
        cutoff,
    )
    .map_err(|e| CliError::from_noise(e, ctx))
}

fn chain_pmf(n: usize, q: f64, cutoff: Option<u32>, tail_eps: f64, ctx: &str) -> Result<RoughnessPmf, CliError> {
    match cutoff {
        None => roughness_pmf(n, q, tail_eps),
        Some(t_c) => roughness_pmf_cutoff(n, q, t_c, tail_eps),
    }
    .map_err(|e| CliError::from_noise(e, ctx))
}

fn parse_cutoff_range(spec: &str) -> Result<Vec<u32>, CliError> {
    let err = || {
        CliError::parameter(format!(
            "cutoff range must look like LO..HI with LO <= HI, got {spec:?}"
        ))
    };
    let (lo, hi) = spec.split_once("..").ok_or_else(err)?;
    let lo: u32 = lo.trim().parse().map_err(|_| err())?;
    let hi: u32 = hi.trim().parse().map_err(|_| err())?;
    if lo == 0 || lo > hi {
        return Err(err());
    }
    Ok((lo..=hi).collect())
}

fn parse_cutoff_entry(entry: &str) -> Result<Option<u32>, CliError> {
    if entry.eq_ignore_ascii_case("none") {
        return Ok(None);
    }
    entry
        .parse::<u32>()
        .map(Some)
        .map_err(|_| CliError::parameter(format!("cutoff must be a round count or none, got {entry:?}")))
}

// ---------------------------------------------------------------------
// Subcommand handlers.

fn run_fidelity(args: &FidelityArgs) -> Result<(), CliError> {
    let FidelityArgs { n, p, lambda, cutoff, json, ref output } = *args;
    let ctx = format!("n={n} p={p} lambda={lambda} cutoff={}", cutoff_or_none(cutoff));
    let q = 1.0 - p;
    let mean_at = |l: f64| match cutoff {
        None => expected_lambda(n, q, l),
        Some(t_c) => expected_lambda_cutoff(n, q, l, t_c),
    };
    let mean = mean_at(lambda).map_err(|e| CliError::from_noise(e, &ctx))?;
    let second = mean_at(lambda * lambda).map_err(|e| CliError::from_noise(e, &ctx))?;
    let variance = (second - mean * mean).max(0.0);
    let fidelity = fidelity_from_lambda(
        WernerParam::new(mean).map_err(|e| CliError::from_noise(e, &ctx))?,
    );
    let contents = if json {
        json_text(&json!({
            "n": n,
            "p": p,
            "lambda": lambda,
            "cutoff": cutoff,
            "expected_lambda": mean,
            "fidelity": fidelity,
            "variance": variance,
        }))
    } else {
        format!(
            "expected_lambda: {}\nfidelity: {}\nvariance: {}\n",
            sig12(mean),
            sig12(fidelity),
            sig12(variance)
        )
    };
    emit_or_die(output.as_ref(), &contents)
}

fn run_pmf(args: &PmfArgs) -> Result<(), CliError> {
    let PmfArgs { n, p, cutoff, tail_eps, json, ref output } = *args;
    let ctx = format!(
        "n={n} p={p} cutoff={} tail_eps={tail_eps}",
        cutoff_or_none(cutoff)
    );
    let pmf = chain_pmf(n, 1.0 - p, cutoff, tail_eps, &ctx)?;
    let contents = if json {
        json_text(&json!({
            "n": n,
            "p": p,
            "cutoff": cutoff,
            "tail_eps": tail_eps,
            "tail_bound": pmf.tail_bound,
            "rows": pmf_rows_json(&pmf.probs),
        }))
    } else {
        pmf_csv(&pmf.probs)
    };
    emit_or_die(output.as_ref(), &contents)
}

fn run_approx(args: &ApproxArgs) -> Result<(), CliError> {
    if args.fibonacci {
        let fib = fibonacci_check().map_err(|e| CliError::from_noise(e, "fibonacci self-test"))?;
        let contents = if args.json {
            json_text(&json!({
                "rho": fib.rho,
                "residue": fib.residue,
                "approx_f10": fib.approx_f10,
            }))
        } else {
            format!(
                "rho: {}\nresidue: {}\napprox_f10: {}\n",
                sig12(fib.rho),
                sig12(fib.residue),
                sig12(fib.approx_f10)
            )
        };
        return emit_or_die(args.output.as_ref(), &contents);
    }
    let (p, lambda) = (args.p.expect("clap requires"), args.lambda.expect("clap requires"));
    let ctx = format!("p={p} lambda={lambda} cutoff={}", cutoff_or_none(args.cutoff));
    let q = 1.0 - p;
    let ab: PoleAsymptotics = match args.cutoff {
        None => asymptotic_ab(q, lambda),
        Some(t_c) => asymptotic_ab_cutoff(q, lambda, t_c),
    }
    .map_err(|e| CliError::from_noise(e, &ctx))?;
    let contents = if args.json {
        json_text(&json!({
            "p": p,
            "lambda": lambda,
            "cutoff": args.cutoff,
            "rho": ab.rho,
            "residue": ab.residue,
            "A": ab.a,
            "B": ab.b,
            "solver": {
                "iterations": ab.solver_report.iterations,
                "bracket": [ab.solver_report.bracket.0, ab.solver_report.bracket.1],
                "residual": ab.solver_report.residual,
            },
        }))
    } else if args.output.is_some() {
        format!(
            "rho,residue,A,B\n{},{},{},{}\n",
            sig12(ab.rho),
            sig12(ab.residue),
            sig12(ab.a),
            sig12(ab.b)
        )
    } else {
        format!(
            "rho: {}\nresidue: {}\nA: {}\nB: {}\nsolver_iterations: {}\nsolver_residual: {}\n",
            sig12(ab.rho),
            sig12(ab.residue),
            sig12(ab.a),
            sig12(ab.b),
            ab.solver_report.iterations,
            sig12(ab.solver_report.residual)
        )
    };
    emit_or_die(args.output.as_ref(), &contents)
}

fn run_skr(args: &SkrArgs) -> Result<(), CliError> {
    let SkrArgs { n, p, lambda, cutoff, lambda_gen, binned, tail_eps, json, ref output } = *args;
    let ctx = format!(
        "n={n} p={p} lambda={lambda} lambda_gen={lambda_gen} cutoff={}",
        cutoff_or_none(cutoff)
    );
    let params = build_chain(n, p, lambda, lambda_gen, cutoff, &ctx)?;
    let report = if binned {
        let pmf = chain_pmf(n, params.q(), cutoff, tail_eps, &ctx)?;
        skr_binned(&params, &pmf)
    } else {
        skr(&params)
    }
    .map_err(|e| CliError::from_noise(e, &ctx))?;
    let contents = if json {
        let mut value = rate_row_json(n, p, lambda, cutoff, &report);
        value["binned"] = match &report.binned {
            Some(b) => json!({
                "skf_binned": b.skf_binned,
                "skr_binned": b.skr_binned,
                "k_max": b.k_max,
            }),
            None => serde_json::Value::Null,
        };
        json_text(&value)
    } else {
        let mut text = format!(
            "expected_lambda: {}\nfidelity: {}\nskf: {}\ndelivery_rounds: {}\nskr: {}\n",
            sig12(report.expected_lambda),
            sig12(report.fidelity),
            sig12(report.skf),
            sig12(report.expected_delivery_rounds),
            sig12(report.skr_per_round)
        );
        if let Some(b) = &report.binned {
            text.push_str(&format!(
                "skf_binned: {}\nskr_binned: {}\nkey_bins: {}\n",
                sig12(b.skf_binned),
                sig12(b.skr_binned),
                b.k_max
            ));
        }
        text
    };
    emit_or_die(output.as_ref(), &contents)
}

fn run_optimize(args: &OptimizeArgs) -> Result<(), CliError> {
    let t_values = parse_cutoff_range(&args.cutoff_range)?;
    if let Some(segments) = &args.segments {
        let l_total = args.l_total.ok_or_else(|| {
            CliError::parameter("--segments requires --l-total".to_string())
        })?;
        let ctx = format!(
            "segments={segments:?} l_total={l_total} lambda={} lambda_gen={} l_att={}",
            args.lambda, args.lambda_gen, args.l_att
        );
        let rows = optimize_segments(
            l_total,
            args.lambda,
            args.lambda_gen,
            segments,
            &t_values,
            args.l_att,
        )
        .map_err(|e| CliError::from_noise(e, &ctx))?;
        let contents = if args.json {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| rate_row_json(r.n, r.p, args.lambda, r.cutoff, &r.report))
                .collect();
            json_text(&json!({"l_total": l_total, "l_att": args.l_att, "rows": rows}))
        } else {
            let mut out = String::from(RATE_HEADER);
            out.push('\n');
            for r in &rows {
                out.push_str(&rate_row_csv(r.n, r.p, args.lambda, r.cutoff, &r.report));
                out.push('\n');
            }
            out
        };
        return emit_or_die(args.output.as_ref(), &contents);
    }
    let (n, p) = match (args.n, args.p) {
        (Some(n), Some(p)) => (n, p),
        _ => {
            return Err(CliError::parameter(
                "single-chain mode requires --n and --p (or use --segments with --l-total)"
                    .to_string(),
            ))
        }
    };
    let ctx = format!(
        "n={n} p={p} lambda={} lambda_gen={} cutoff_range={}",
        args.lambda, args.lambda_gen, args.cutoff_range
    );
    let params = build_chain(n, p, args.lambda, args.lambda_gen, None, &ctx)?;
    let (best, report) =
        optimize_cutoff(&params, &t_values).map_err(|e| CliError::from_noise(e, &ctx))?;
    let contents = if args.json {
        let mut value = rate_row_json(n, p, args.lambda, best, &report);
        value["best_cutoff"] = json!(best);
        json_text(&value)
    } else {
        format!(
            "best_cutoff: {}\nexpected_lambda: {}\nfidelity: {}\nskf: {}\ndelivery_rounds: {}\nskr: {}\n",
            cutoff_or_none(best),
            sig12(report.expected_lambda),
            sig12(report.fidelity),
            sig12(report.skf),
            sig12(report.expected_delivery_rounds),
            sig12(report.skr_per_round)
        )
    };
    emit_or_die(args.output.as_ref(), &contents)
}

fn run_sweep(args: &SweepArgs) -> Result<(), CliError> {
    if args.n_list.is_empty() || args.lambda_list.is_empty() {
        return Err(CliError::parameter("sweep grids must be nonempty".to_string()));
    }
    let cutoffs: Vec<Option<u32>> = match &args.cutoff_list {
        None => vec![None],
        Some(entries) => entries
            .iter()
            .map(|e| parse_cutoff_entry(e))
            .collect::<Result<_, _>>()?,
    };
    // Grid order (outer to inner): n, then p or span, then lambda, then
    // cut-off. Rows are evaluated in parallel and emitted in this order.
    let mut points: Vec<(usize, f64, f64, Option<u32>)> = Vec::new();
    for &n in &args.n_list {
        let p_values: Vec<f64> = match (&args.p_list, &args.l_list) {
            (Some(ps), None) => ps.clone(),
            (None, Some(ls)) => ls
                .iter()
                .map(|&l| {
                    segment_success_prob(l, n, args.l_att).map_err(|e| {
                        CliError::from_noise(e, &format!("l_total={l} n={n} l_att={}", args.l_att))
                    })
                })
                .collect::<Result<_, _>>()?,
            _ => {
                return Err(CliError::parameter(
                    "exactly one of --p and --l-total is required".to_string(),
                ))
            }
        };
        for &p in &p_values {
            for &lambda in &args.lambda_list {
                for &cutoff in &cutoffs {
                    points.push((n, p, lambda, cutoff));
                }
            }
        }
    }
    let reports: Vec<(usize, f64, f64, Option<u32>, RateReport)> = points
        .par_iter()
        .map(|&(n, p, lambda, cutoff)| {
            let ctx = format!(
                "n={n} p={p} lambda={lambda} cutoff={}",
                cutoff_or_none(cutoff)
            );
            let params = build_chain(n, p, lambda, args.lambda_gen, cutoff, &ctx)?;
            let report = skr(&params).map_err(|e| CliError::from_noise(e, &ctx))?;
            Ok((n, p, lambda, cutoff, report))
        })
        .collect::<Result<_, CliError>>()?;
    let contents = if args.json {
        let rows: Vec<_> = reports
            .iter()
            .map(|(n, p, lambda, cutoff, r)| rate_row_json(*n, *p, *lambda, *cutoff, r))
            .collect();
        json_text(&json!({"seed": args.seed, "rows": rows}))
    } else {
        let mut out = String::from(RATE_HEADER);
        out.push('\n');
        for (n, p, lambda, cutoff, r) in &reports {
            out.push_str(&rate_row_csv(*n, *p, *lambda, *cutoff, r));
            out.push('\n');
        }
        out
    };
    emit_or_die(args.output.as_ref(), &contents)
}

fn run_simulate(args: &SimulateArgs) -> Result<(), CliError> {
    let SimulateArgs { n, p, lambda, cutoff, runs, seed, json, ref output } = *args;
    let ctx = format!(
        "n={n} p={p} cutoff={} runs={runs} seed={seed}",
        cutoff_or_none(cutoff)
    );
    let params = build_chain(n, p, lambda.unwrap_or(1.0), 1.0, cutoff, &ctx)?;
    let emp = estimate_pmf(&params, runs, seed).map_err(|e| CliError::from_noise(e, &ctx))?;
    let werner = lambda.map(|l| emp.expected_lambda(l));
    if json {
        let value = json!({
            "n": n,
            "p": p,
            "cutoff": cutoff,
            "runs": runs,
            "seed": seed,
            "mean_delivery_rounds": emp.mean_delivery_rounds,
            "se_delivery_rounds": emp.se_delivery_rounds,
            "total_resets": emp.total_resets,
            "expected_lambda_estimate": werner.map(|(e, _)| e),
            "expected_lambda_se": werner.map(|(_, se)| se),
            "rows": pmf_rows_json(&emp.probs),
        });
        return emit_or_die(output.as_ref(), &json_text(&value));
    }
    let table = pmf_csv(&emp.probs);
    let mut summary = format!(
        "runs: {runs}\nseed: {seed}\nmean_delivery_rounds: {}\nse_delivery_rounds: {}\ntotal_resets: {}\n",
        sig12(emp.mean_delivery_rounds),
        sig12(emp.se_delivery_rounds),
        emp.total_resets
    );
    if let Some((est, se)) = werner {
        summary.push_str(&format!(
            "expected_lambda_estimate: {}\nexpected_lambda_se: {}\n",
            sig12(est),
            sig12(se)
        ));
    }
    match output {
        // File output holds just the table; the summary goes to stdout.
        Some(_) => {
            emit_or_die(output.as_ref(), &table)?;
            emit_or_die(None, &summary)
        }
        None => emit_or_die(None, &format!("{summary}{table}")),
    }
}

fn run_pauli(args: &PauliArgs) -> Result<(), CliError> {
    match &args.command {
        PauliCommand::ToLambda(a) => {
            let ch = a.channel.build(a.d)?;
            let lv = to_lambda(&ch);
            let qubit_order: Option<Vec<f64>> = (a.d == 2).then(|| {
                let order = lv.qubit_order().expect("dimension checked");
                order.iter().map(|e| e.re).collect()
            });
            let contents = if a.json {
                json_text(&json!({
                    "d": a.d,
                    "entries": lambda_entries_json(&lv),
                    "qubit_order": qubit_order,
                }))
            } else {
                let mut text = format!("d: {}\n", a.d);
                text.push_str(&lambda_lines(&lv, "lambda"));
                if let Some(order) = qubit_order {
                    let rendered: Vec<String> = order.iter().map(|&x| sig12(x)).collect();
                    text.push_str(&format!("qubit_order: {}\n", rendered.join(", ")));
                }
                text
            };
            emit_or_die(a.output.as_ref(), &contents)
        }
        PauliCommand::Compose(a) => {
            let (first, second) = (a.first.build(a.d)?, a.second.build(a.d)?);
            let composed = compose(&first, &second)
                .map_err(|e| CliError::from_noise(e, &format!("d={}", a.d)))?;
            let contents = if a.json {
                json_text(&json!({"d": a.d, "probs": composed.probs()}))
            } else {
                let rendered: Vec<String> = composed.probs().iter().map(|&x| sig12(x)).collect();
                format!("d: {}\nprobs: {}\n", a.d, rendered.join(", "))
            };
            emit_or_die(a.output.as_ref(), &contents)
        }
        PauliCommand::SwapOracle(a) => {
            let (first, second) = (a.first.build(a.d)?, a.second.build(a.d)?);
            let out = swap_oracle(&first, &second)
                .map_err(|e| CliError::from_noise(e, &format!("d={}", a.d)))?;
            let contents = if a.json {
                json_text(&json!({
                    "d": a.d,
                    "lambda": lambda_entries_json(&out.lambda),
                    "pointwise_product": lambda_entries_json(&out.pointwise_product),
                    "product_deviation": out.product_deviation,
                    "multiplicative": out.multiplicative,
                }))
            } else {
                let mut text = format!("d: {}\n", a.d);
                text.push_str(&lambda_lines(&out.lambda, "lambda"));
                text.push_str(&lambda_lines(&out.pointwise_product, "product"));
                text.push_str(&format!(
                    "product_deviation: {}\nmultiplicative: {}\n",
                    sig12(out.product_deviation),
                    out.multiplicative
                ));
                text
            };
            emit_or_die(a.output.as_ref(), &contents)
        }
        PauliCommand::CheckXsym(a) => {
            let ch = a.channel.build(a.d)?;
            let symmetric = is_x_symmetric(&ch);
            let gap = transpose_side_check(&ch)
                .map_err(|e| CliError::from_noise(e, &format!("d={}", a.d)))?;
            let contents = if a.json {
                json_text(&json!({"d": a.d, "x_symmetric": symmetric, "transpose_gap": gap}))
            } else {
                format!("x_symmetric: {symmetric}\ntranspose_gap: {}\n", sig12(gap))
            };
            emit_or_die(a.output.as_ref(), &contents)
        }
    }
}

fn cutoff_or_none(cutoff: Option<u32>) -> String {
    cutoff.map(|t| t.to_string()).unwrap_or_else(|| "none".to_string())
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Fidelity(args) => run_fidelity(args),
        Command::Pmf(args) => run_pmf(args),
        Command::Approx(args) => run_approx(args),
        Command::Skr(args) => run_skr(args),
        Command::Optimize(args) => run_optimize(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Simulate(args) => run_simulate(args),
        Command::Pauli(args) => run_pauli(args),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.message);
            ExitCode::from(e.code)
        }
    }
}

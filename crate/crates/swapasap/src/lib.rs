//! Analytics for homogeneous swap-ASAP quantum repeater chains.
//!
//! A chain of `n` segments generates elementary links in parallel, each
//! succeeding per round with probability `p`, and every node swaps as soon
//! as it holds both adjacent links. The delivered state is Werner with
//! parameter `Lambda = lambda^K` where `K` is the roughness of the success
//! rounds, times constant generation and swap noise factors. This crate
//! computes, exactly and asymptotically:
//!
//! - `E[Lambda_n]` and its moments, with and without a global cut-off
//!   ([`recursion`]), via a linear-map recursion on the sparse basis
//!   `q^{a t} lambda^{b t}`;
//! - the full distribution of the roughness `K` ([`distribution`]), plus a
//!   brute-force enumeration oracle;
//! - the generating function `G(x) = sum_n E[Lambda_n] x^n` in closed
//!   q-hypergeometric form and its dominant-pole approximation `A * B^n`
//!   ([`genfunc`]);
//! - BB84 secret-key fractions, delivery times, secret-key rates, and
//!   cut-off / segment-count optimizers ([`rates`]);
//! - qudit Pauli channel lambda-vectors, their multiplicativity under
//!   composition and entanglement swapping, and density-matrix oracles
//!   validating both ([`pauli`]);
//! - a seeded Monte Carlo simulator of the protocol ([`montecarlo`]).
//!
//! Everything is plain `f64`; all functions are pure and reentrant.

pub mod chain;
pub mod distribution;
pub mod error;
pub mod genfunc;
pub mod montecarlo;
pub mod pauli;
pub mod rates;
pub mod recursion;

pub use chain::{ChainParams, Instance, WernerParam};
pub use error::{NoiseError, Result};

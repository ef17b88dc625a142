//! Pauli channel specification on the command line: either an explicit
//! row-major probability list or a named one-parameter family.

use clap::Args;
use swapasap::pauli::PauliChannel;

use crate::CliError;

/// First (or only) channel of a Pauli subcommand. Exactly one of the
/// three forms must be given.
#[derive(Args, Debug)]
pub struct ChannelSpec {
    /// Row-major error probabilities p[a*d + b], d*d comma-separated values.
    #[arg(long, value_delimiter = ',', num_args = 1.., conflicts_with_all = ["dephasing", "depolarizing"])]
    pub probs: Option<Vec<f64>>,
    /// Dephasing family: weight p spread over the phase operators.
    #[arg(long, conflicts_with = "depolarizing")]
    pub dephasing: Option<f64>,
    /// Depolarizing family: identity weight p_i, the rest uniform.
    #[arg(long)]
    pub depolarizing: Option<f64>,
}

/// Second channel, for the two-channel subcommands.
#[derive(Args, Debug)]
pub struct SecondChannelSpec {
    /// Row-major probabilities of the second channel.
    #[arg(long = "with-probs", value_delimiter = ',', num_args = 1.., conflicts_with_all = ["with_dephasing", "with_depolarizing"])]
    pub with_probs: Option<Vec<f64>>,
    /// Second channel from the dephasing family.
    #[arg(long = "with-dephasing", conflicts_with = "with_depolarizing")]
    pub with_dephasing: Option<f64>,
    /// Second channel from the depolarizing family.
    #[arg(long = "with-depolarizing")]
    pub with_depolarizing: Option<f64>,
}

fn build(
    d: usize,
    probs: &Option<Vec<f64>>,
    dephasing: Option<f64>,
    depolarizing: Option<f64>,
    role: &str,
) -> Result<PauliChannel, CliError> {
    let ctx = format!("d={d} {role}");
    let lib = |e| CliError::from_noise(e, &ctx);
    match (probs, dephasing, depolarizing) {
        (Some(p), None, None) => PauliChannel::new(d, p.clone()).map_err(lib),
        (None, Some(p), None) => PauliChannel::dephasing(d, p).map_err(lib),
        (None, None, Some(p)) => PauliChannel::depolarizing(d, p).map_err(lib),
        _ => Err(CliError::parameter(format!(
            "exactly one channel form (probs, dephasing, depolarizing) is required [{ctx}]"
        ))),
    }
}

impl ChannelSpec {
    pub fn build(&self, d: usize) -> Result<PauliChannel, CliError> {
        build(d, &self.probs, self.dephasing, self.depolarizing, "channel 1")
    }
}

impl SecondChannelSpec {
    pub fn build(&self, d: usize) -> Result<PauliChannel, CliError> {
        build(
            d,
            &self.with_probs,
            self.with_dephasing,
            self.with_depolarizing,
            "channel 2",
        )
    }
}

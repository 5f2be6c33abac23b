//! Executable coding schemes built on the Poisson functional representation.

pub mod block;
pub mod lossy;
pub mod relay;

use serde::{Deserialize, Serialize};

use crate::poisson::derive_substream;

pub use block::{block_params, is_typical, min_blocklength, phi_excess, BlockParams, PhiEvaluator};
pub use lossy::{BetaRule, Encoded, LossyBounds, NoisyVLConfig, NoisyVlScheme};
pub use relay::{RelayConfig, RelayScheme, RelayVariant};

/// Seeds of one trial: `common` is shared by every terminal, `local` feeds the
/// source, the channel, the message and private coins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrialSeeds {
    pub common: u64,
    pub local: u64,
}

impl TrialSeeds {
    pub fn from_trial_seed(seed: u64) -> Self {
        TrialSeeds {
            common: derive_substream(seed, "common"),
            local: derive_substream(seed, "local"),
        }
    }
}

/// Observables of one simulated transmission.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub seed: u64,
    pub variant: String,
    pub n: usize,
    #[serde(rename = "L")]
    pub message_count: u64,
    pub description_bits: u64,
    /// Transmitted index `K̃`.
    #[serde(skip)]
    pub index: u64,
    pub error: bool,
    /// Block `ι_{Xⁿ;Uⁿ}` of the true codeword and the decoded description.
    pub achieved_info_density: Option<f64>,
    pub distortion: f64,
    pub truncated: bool,
    #[serde(skip)]
    pub scanned: u64,
}

impl TrialResult {
    /// Header of the trial log.
    pub const CSV_HEADER: [&'static str; 9] = [
        "seed",
        "variant",
        "n",
        "L",
        "description_bits",
        "error",
        "achieved_info_density",
        "distortion",
        "truncated",
    ];
}

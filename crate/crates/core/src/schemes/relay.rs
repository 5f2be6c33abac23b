//! Oblivious relaying: a message is sent with a random iid codebook over a
//! memoryless channel, a relay that does not know the codebook compresses the
//! channel output into a description of `Uⁿ`, and the decoder recovers the
//! message from the description by Poisson matching.

use serde::{Deserialize, Serialize};

use crate::codec::{Codeword, PrefixCode};
use crate::error::{Error, Result};
use crate::ibrd::distortion::neg_info_density_distortion;
use crate::poisson::{derive_substream, pfr_select, pml_argmin, PoissonStream, ProposalStream, SelectionTarget, UniformStream};
use crate::prob::{compose_markov, information_density, JointPmf, Kernel, Pmf};
use crate::schemes::lossy::{BetaRule, NoisyVLConfig, NoisyVlScheme};
use crate::schemes::{TrialResult, TrialSeeds};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RelayVariant {
    /// Lossy description with `d = -ι_{X;U}`.
    VlLossy,
    /// Exact simulation of `P_{U|Y}ⁿ`.
    VlChansim,
    /// Lossy description truncated to a fixed-length field.
    FlTruncated,
}

impl RelayVariant {
    pub fn name(self) -> &'static str {
        match self {
            RelayVariant::VlLossy => "vl-lossy",
            RelayVariant::VlChansim => "vl-chansim",
            RelayVariant::FlTruncated => "fl-truncated",
        }
    }
}

fn default_code() -> PrefixCode {
    PrefixCode::EliasDelta
}

fn default_max_scan() -> u64 {
    1 << 32
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelayConfig {
    pub p_x: Pmf,
    /// `P_{Y|X}`
    pub channel: Kernel,
    pub n: usize,
    #[serde(rename = "L")]
    pub message_count: u64,
    /// Per-letter information threshold `C`.
    pub c_bits: f64,
    pub kernel_u_given_y: Kernel,
    pub variant: RelayVariant,
    /// Field size `K` of the fixed-length variant.
    #[serde(default)]
    pub fl_description_size: Option<u64>,
    pub eps_prime: f64,
    /// Used by the lossy variants; the channel-simulation variant uses the
    /// constant `eps_prime`.
    #[serde(default = "BetaRule::zero")]
    pub beta: BetaRule,
    pub master_seed: u64,
    #[serde(default = "default_code")]
    pub code: PrefixCode,
    #[serde(default)]
    pub derandomized: bool,
    #[serde(default = "default_max_scan")]
    pub max_scan: u64,
    /// Feasibility requires `ι >= nC + log2 n` instead of `ι >= nC`.
    #[serde(default = "yes")]
    pub strengthen_threshold: bool,
}

impl RelayConfig {
    pub fn new(p_x: Pmf, channel: Kernel, kernel_u_given_y: Kernel, n: usize, c_bits: f64, variant: RelayVariant) -> Self {
        let message_count = message_count_for(n, c_bits);
        RelayConfig {
            p_x,
            channel,
            n,
            message_count,
            c_bits,
            kernel_u_given_y,
            variant,
            fl_description_size: None,
            eps_prime: 0.05,
            beta: BetaRule::zero(),
            master_seed: 0,
            code: default_code(),
            derandomized: false,
            max_scan: default_max_scan(),
            strengthen_threshold: true,
        }
    }

    pub fn p_xy(&self) -> Result<JointPmf> {
        JointPmf::from_marginal_and_kernel(&self.p_x, &self.channel)
    }

    /// Block threshold `C'` in bits.
    pub fn block_threshold(&self) -> f64 {
        let n = self.n as f64;
        if self.strengthen_threshold {
            n * self.c_bits + n.log2()
        } else {
            n * self.c_bits
        }
    }

    /// Per-letter level of the `-ι` distortion.
    pub fn distortion_level(&self) -> f64 {
        -self.block_threshold() / self.n as f64
    }
}

/// `L = ⌈2^{nC}⌉`.
pub fn message_count_for(n: usize, c_bits: f64) -> u64 {
    let v = (n as f64 * c_bits).exp2().ceil();
    if v >= u64::MAX as f64 {
        u64::MAX
    } else {
        v.max(1.0) as u64
    }
}

/// Channel-simulation target `P_{U|Y}ⁿ(·|yⁿ) / P_Uⁿ`.
struct ChansimTarget<'a> {
    /// `log2 P(u|y) / P(u)`, index `y * |U| + u`
    table: &'a [f64],
    nu: usize,
    y: &'a [usize],
    bound: f64,
}

impl SelectionTarget for ChansimTarget<'_> {
    fn log_ratio(&self, u: &[usize]) -> f64 {
        self.y.iter().zip(u).map(|(&y, &u)| self.table[y * self.nu + u]).sum()
    }

    fn log_ratio_bound(&self) -> Option<f64> {
        Some(self.bound)
    }
}

#[derive(Debug)]
pub struct RelayScheme {
    cfg: RelayConfig,
    p_u: Pmf,
    /// `ι_{X;U}`, index `x * |U| + u`
    iota_xu: Vec<f64>,
    /// `max_x ι_{X;U}(x; u)`
    iota_max: Vec<f64>,
    /// `log2 P(u|y)/P(u)`
    iota_yu: Vec<f64>,
    lossy: Option<NoisyVlScheme>,
}

impl RelayScheme {
    pub fn new(cfg: RelayConfig) -> Result<Self> {
        if cfg.message_count == 0 {
            return Err(Error::Config("message count must be at least 1".into()));
        }
        if cfg.n == 0 {
            return Err(Error::Config("blocklength must be positive".into()));
        }
        if !cfg.channel.input_alphabet().compatible(cfg.p_x.alphabet()) {
            return Err(Error::AlphabetMismatch("channel input differs from the codebook alphabet".into()));
        }
        if cfg.variant == RelayVariant::FlTruncated && cfg.fl_description_size.is_none_or(|k| k < 2) {
            return Err(Error::Config("the fixed-length variant needs a field size K >= 2".into()));
        }
        let low_ok = cfg.eps_prime > 0.0 || (cfg.variant == RelayVariant::VlChansim && cfg.eps_prime == 0.0);
        if !(low_ok && cfg.eps_prime < 1.0) {
            return Err(Error::Config(format!("eps_prime = {} must lie in (0, 1)", cfg.eps_prime)));
        }
        let p_xy = cfg.p_xy()?;
        let (xu, yu) = compose_markov(&p_xy, &cfg.kernel_u_given_y)?;
        let nu = cfg.kernel_u_given_y.output_size();
        let ixu = information_density(&xu);
        let iyu = information_density(&yu);
        let iota_max = |t: &[f64], rows: usize| -> Vec<f64> {
            (0..nu)
                .map(|u| (0..rows).map(|r| t[r * nu + u]).fold(f64::NEG_INFINITY, f64::max))
                .collect()
        };
        let lossy = match cfg.variant {
            RelayVariant::VlChansim => None,
            _ => {
                let d = neg_info_density_distortion(&p_xy, &cfg.kernel_u_given_y)?;
                let mut inner = NoisyVLConfig::new(p_xy.clone(), d, cfg.distortion_level(), cfg.eps_prime, xu.col_marginal(), cfg.n);
                inner.beta = cfg.beta.clone();
                inner.code = cfg.code.clone();
                inner.derandomized = cfg.derandomized;
                inner.max_scan = cfg.max_scan;
                Some(NoisyVlScheme::new(inner)?)
            }
        };
        Ok(RelayScheme {
            p_u: xu.col_marginal(),
            iota_max: iota_max(ixu.values(), p_xy.n_rows()),
            iota_xu: ixu.values().to_vec(),
            iota_yu: iyu.values().to_vec(),
            lossy,
            cfg,
        })
    }

    pub fn config(&self) -> &RelayConfig {
        &self.cfg
    }

    /// The relay's lossy coder (absent for channel simulation).
    pub fn lossy(&self) -> Option<&NoisyVlScheme> {
        self.lossy.as_ref()
    }

    fn nu(&self) -> usize {
        self.p_u.len()
    }

    fn codebook(&self, common: u64) -> ProposalStream {
        ProposalStream::iid(derive_substream(common, "codebook"), &self.cfg.p_x, self.cfg.n)
    }

    fn channel(&self, x: &[usize], local: u64) -> Vec<usize> {
        let mut u = UniformStream::new(derive_substream(local, "channel"));
        x.iter().map(|&xi| self.cfg.channel.row_pmf(xi).sample_with(u.next_f64())).collect()
    }

    /// Relay: maps the channel output to a description. Never sees the
    /// codebook.
    pub fn relay_encode(&self, y: &[usize], common: u64, local: u64) -> Result<RelayDescription> {
        match self.cfg.variant {
            RelayVariant::VlChansim => {
                let mut coin = UniformStream::new(derive_substream(local, "relay-local"));
                let (index, scanned) = if coin.next_f64() < self.cfg.eps_prime {
                    (1, 0)
                } else {
                    let target = ChansimTarget {
                        table: &self.iota_yu,
                        nu: self.nu(),
                        y,
                        bound: y.iter().map(|&s| self.iota_yu_row_max(s)).sum(),
                    };
                    let mut arrivals = PoissonStream::new(derive_substream(common, "arrivals"));
                    let mut proposals = self.proposals(common);
                    let sel = pfr_select(&target, &mut arrivals, &mut proposals, self.cfg.max_scan)?;
                    (sel.index, sel.scanned)
                };
                let mut codeword = Codeword::empty();
                if self.cfg.derandomized {
                    codeword.push(false);
                }
                codeword.extend(&self.cfg.code.encode(index)?);
                Ok(RelayDescription { codeword, index, scanned, erased: false })
            }
            RelayVariant::VlLossy => {
                let e = self.inner().encode(y, common, local)?;
                Ok(RelayDescription { codeword: e.codeword, index: e.index, scanned: e.scanned, erased: false })
            }
            RelayVariant::FlTruncated => {
                let e = self.inner().encode(y, common, local)?;
                let k = self.field_size();
                let erased = e.index > k - 1;
                let field = if erased { k - 1 } else { e.index - 1 };
                let mut codeword = Codeword::empty();
                codeword.push_fixed(field, field_width(k));
                Ok(RelayDescription { codeword, index: e.index, scanned: e.scanned, erased })
            }
        }
    }

    fn iota_yu_row_max(&self, y: usize) -> f64 {
        let nu = self.nu();
        self.iota_yu[y * nu..(y + 1) * nu].iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    fn inner(&self) -> &NoisyVlScheme {
        self.lossy.as_ref().expect("lossy variants carry an inner coder")
    }

    fn field_size(&self) -> u64 {
        self.cfg.fl_description_size.unwrap_or(2)
    }

    fn proposals(&self, common: u64) -> ProposalStream {
        ProposalStream::iid(derive_substream(common, "proposals"), &self.p_u, self.cfg.n)
    }

    /// Decodes the description into `Ûⁿ`, or `None` on an erasure.
    pub fn decode_description(&self, w: &Codeword, common: u64) -> Result<Option<Vec<usize>>> {
        let k = match self.cfg.variant {
            RelayVariant::FlTruncated => {
                let k = self.field_size();
                let width = field_width(k) as usize;
                if w.len() != width {
                    return Err(Error::Decode(format!("expected a {width}-bit field, got {} bits", w.len())));
                }
                let field = w.bits().iter().fold(0u64, |a, &b| (a << 1) | b as u64);
                if field >= k - 1 {
                    return Ok(None);
                }
                field + 1
            }
            RelayVariant::VlLossy => self.inner().decode_index(w)?,
            RelayVariant::VlChansim => {
                let bits = if self.cfg.derandomized {
                    w.bits().get(1..).ok_or_else(|| Error::Decode("missing time-sharing flag".into()))?
                } else {
                    w.bits()
                };
                let (k, used) = self.cfg.code.decode(bits)?;
                if used != bits.len() {
                    return Err(Error::Decode("trailing bits after codeword".into()));
                }
                k
            }
        };
        let mut u = Vec::with_capacity(self.cfg.n);
        self.proposals(common).sample_at(k, &mut u);
        Ok(Some(u))
    }

    /// `M̂` by Poisson matching over the codebook, given `Ûⁿ`.
    pub fn decode_message(&self, u: &[usize], common: u64) -> u64 {
        let nu = self.nu();
        let book = self.codebook(common);
        let bound: f64 = u.iter().map(|&s| self.iota_max[s]).sum();
        let mut arrivals = PoissonStream::new(derive_substream(common, "decoder-arrivals"));
        let out = pml_argmin(
            self.cfg.message_count,
            |m| {
                let mut x = Vec::with_capacity(self.cfg.n);
                book.sample_at(m, &mut x);
                x.iter().zip(u).map(|(&a, &b)| self.iota_xu[a * nu + b]).sum()
            },
            &mut arrivals,
            Some(bound),
        );
        out.index
    }

    pub fn run_trial(&self, trial_seed: u64) -> Result<TrialResult> {
        self.run_trial_with(trial_seed, TrialSeeds::from_trial_seed(trial_seed))
    }

    pub fn run_trial_with(&self, trial_seed: u64, seeds: TrialSeeds) -> Result<TrialResult> {
        let n = self.cfg.n;
        let mut msg = UniformStream::new(derive_substream(seeds.local, "message"));
        let m = msg.next_below(self.cfg.message_count) + 1;
        let mut x = Vec::with_capacity(n);
        self.codebook(seeds.common).sample_at(m, &mut x);
        let y = self.channel(&x, seeds.local);
        let desc = self.relay_encode(&y, seeds.common, seeds.local)?;
        let u = self.decode_description(&desc.codeword, seeds.common)?;
        let (error, info) = match &u {
            None => (true, None),
            Some(u) => {
                let nu = self.nu();
                let info: f64 = x.iter().zip(u).map(|(&a, &b)| self.iota_xu[a * nu + b]).sum();
                (self.decode_message(u, seeds.common) != m, Some(info))
            }
        };
        Ok(TrialResult {
            seed: trial_seed,
            variant: self.cfg.variant.name().into(),
            n,
            message_count: self.cfg.message_count,
            description_bits: desc.codeword.len() as u64,
            index: desc.index,
            error,
            achieved_info_density: info,
            distortion: info.map_or(f64::INFINITY, |v| -v / n as f64),
            truncated: desc.erased,
            scanned: desc.scanned,
        })
    }
}

/// Relay output.
#[derive(Debug, Clone, PartialEq)]
pub struct RelayDescription {
    pub codeword: Codeword,
    pub index: u64,
    pub scanned: u64,
    /// Fixed-length field overflowed.
    pub erased: bool,
}

/// `⌈log2 K⌉`, at least one bit.
pub fn field_width(k: u64) -> u32 {
    (64 - (k - 1).leading_zeros()).max(1)
}

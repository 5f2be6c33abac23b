//! Variable-length noisy lossy source coding: the encoder selects the first
//! proposal `Z̄_k` with `φ(yⁿ, Z̄_k, D) <= ε'` (Poisson functional
//! representation of the reference conditioned on the feasible set), replaces
//! the index by `1` with probability `β(yⁿ)`, and sends a prefix codeword.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::codec::{build_escaped_huffman, Codeword, PrefixCode};
use crate::error::{Error, Result};
use crate::ibrd::distortion::DistortionMeasure;
use crate::poisson::{derive_substream, pfr_select, Indicator, PoissonStream, ProposalStream, UniformStream};
use crate::prob::{type_counts, JointPmf, Pmf};
use crate::schemes::block::{block_params, is_typical_counts, psi_for_type, split_count, y_types, PhiEvaluator};
use crate::schemes::{TrialResult, TrialSeeds};

/// Largest number of joint types enumerated to certify feasibility before
/// encoding.
const CHEAP_ENUMERATION: f64 = 1e5;

/// Largest number of joint types visited by [`NoisyVlScheme::checked_bounds`].
pub const BOUND_ENUMERATION_BUDGET: f64 = 2e7;

/// Probability `β(yⁿ)` of sending index `1` instead of the selected one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum BetaRule {
    Constant { value: f64 },
    /// Per-symbol values; blocklength 1 only.
    Table { values: Vec<f64> },
    /// `1` outside the typical set, `eps3` inside.
    Typical { eps3: f64 },
    /// `1` where `ψ(yⁿ) > max_psi` (including an empty feasible set), `base`
    /// elsewhere.
    PsiCap {
        #[serde(with = "crate::serde_f64")]
        max_psi: f64,
        base: f64,
    },
}

impl BetaRule {
    pub fn zero() -> Self {
        BetaRule::Constant { value: 0.0 }
    }

    /// `β = 1` exactly where nothing is feasible.
    pub fn feasible_or(base: f64) -> Self {
        BetaRule::PsiCap {
            max_psi: f64::INFINITY,
            base,
        }
    }

    fn validate(&self, n: usize, y_size: usize) -> Result<()> {
        let ok = |v: f64| (0.0..=1.0).contains(&v);
        let good = match self {
            BetaRule::Constant { value } => ok(*value),
            BetaRule::Table { values } => {
                if n != 1 || values.len() != y_size {
                    return Err(Error::Config(
                        "a beta table needs blocklength 1 and one value per observation symbol".into(),
                    ));
                }
                values.iter().all(|v| ok(*v))
            }
            BetaRule::Typical { eps3 } => ok(*eps3),
            BetaRule::PsiCap { max_psi, base } => ok(*base) && !max_psi.is_nan(),
        };
        if good {
            Ok(())
        } else {
            Err(Error::Config(format!("beta values must lie in [0, 1]: {self:?}")))
        }
    }
}

fn default_code() -> PrefixCode {
    PrefixCode::EliasDelta
}

fn default_max_scan() -> u64 {
    1 << 32
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoisyVLConfig {
    pub p_xy: JointPmf,
    pub d: DistortionMeasure,
    /// Per-letter level `D`; a block is in excess when `Σ d > n·D`.
    pub distortion_level: f64,
    pub eps_prime: f64,
    pub beta: BetaRule,
    /// Per-letter reference `P_Z̄`; blocks use its product.
    pub reference: Pmf,
    pub n: usize,
    pub master_seed: u64,
    #[serde(default = "default_code")]
    pub code: PrefixCode,
    /// Adds the one-bit time-sharing flag to every description.
    #[serde(default)]
    pub derandomized: bool,
    #[serde(default = "default_max_scan")]
    pub max_scan: u64,
}

impl NoisyVLConfig {
    pub fn new(p_xy: JointPmf, d: DistortionMeasure, distortion_level: f64, eps_prime: f64, reference: Pmf, n: usize) -> Self {
        NoisyVLConfig {
            p_xy,
            d,
            distortion_level,
            eps_prime,
            beta: BetaRule::zero(),
            reference,
            n,
            master_seed: 0,
            code: default_code(),
            derandomized: false,
            max_scan: default_max_scan(),
        }
    }

    /// Typical-set rule: `ε' = ε₁`, `β = 1` off the typical set and `ε₃` on
    /// it, so that the excess probability is at most `ε`.
    pub fn typical(p_xy: JointPmf, d: DistortionMeasure, distortion_level: f64, eps: f64, reference: Pmf, n: usize) -> Result<Self> {
        let bp = block_params(n, p_xy.n_cols(), eps)?;
        let mut cfg = Self::new(p_xy, d, distortion_level, bp.eps1, reference, n);
        cfg.beta = BetaRule::Typical { eps3: bp.eps3 };
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub codeword: Codeword,
    /// Transmitted index `K̃`.
    pub index: u64,
    /// Proposals examined by the selection (0 when it was skipped).
    pub scanned: u64,
    pub beta: f64,
}

/// Exact one-shot or block guarantees of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossyBounds {
    pub expected_beta: f64,
    /// `E[(1-β)ψ]`; `+inf` if `ψ = inf` with `β < 1` somewhere.
    #[serde(with = "crate::serde_f64")]
    pub expected_psi: f64,
    /// `E[β] + ε'`
    pub pe_bound: f64,
    /// `ℓ(E[(1-β)ψ])`
    #[serde(with = "crate::serde_f64")]
    pub len_bound: f64,
}

#[derive(Debug)]
pub struct NoisyVlScheme {
    cfg: NoisyVLConfig,
    phi: PhiEvaluator,
    p_y: Pmf,
    x_given_y: Vec<Pmf>,
    psi_cache: Mutex<HashMap<Vec<u32>, f64>>,
}

impl NoisyVlScheme {
    pub fn new(cfg: NoisyVLConfig) -> Result<Self> {
        if !(cfg.eps_prime > 0.0 && cfg.eps_prime < 1.0) {
            return Err(Error::Config(format!("eps_prime = {} must lie in (0, 1)", cfg.eps_prime)));
        }
        if !cfg.reference.alphabet().compatible(cfg.d.z_alphabet()) {
            return Err(Error::AlphabetMismatch("reference and reconstruction alphabets differ".into()));
        }
        if cfg.n == 0 {
            return Err(Error::Config("blocklength must be positive".into()));
        }
        cfg.beta.validate(cfg.n, cfg.p_xy.n_cols())?;
        let phi = PhiEvaluator::new(&cfg.p_xy, &cfg.d, cfg.distortion_level, cfg.n)?;
        let (post, _) = cfg.p_xy.row_given_col();
        let x_given_y = (0..cfg.p_xy.n_cols()).map(|y| post.row_pmf(y)).collect();
        Ok(NoisyVlScheme {
            p_y: cfg.p_xy.col_marginal(),
            x_given_y,
            phi,
            cfg,
            psi_cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn config(&self) -> &NoisyVLConfig {
        &self.cfg
    }

    pub fn phi(&self) -> &PhiEvaluator {
        &self.phi
    }

    /// `ψ` of an observation type, cached.
    pub fn psi_counts(&self, y_counts: &[u32]) -> f64 {
        if let Some(&v) = self.psi_cache.lock().expect("psi cache").get(y_counts) {
            return v;
        }
        let v = psi_for_type(&self.phi, y_counts, &self.cfg.reference, self.cfg.eps_prime);
        self.psi_cache.lock().expect("psi cache").insert(y_counts.to_vec(), v);
        v
    }

    pub fn psi(&self, y: &[usize]) -> f64 {
        self.psi_counts(&type_counts(y, self.p_y.len()))
    }

    pub fn beta_counts(&self, y_counts: &[u32]) -> f64 {
        match &self.cfg.beta {
            BetaRule::Constant { value } => *value,
            BetaRule::Table { values } => {
                let y = y_counts.iter().position(|&c| c > 0).unwrap_or(0);
                values[y]
            }
            BetaRule::Typical { eps3 } => {
                if is_typical_counts(y_counts, self.p_y.probs()) {
                    *eps3
                } else {
                    1.0
                }
            }
            BetaRule::PsiCap { max_psi, base } => {
                let psi = self.psi_counts(y_counts);
                if psi > *max_psi || psi.is_infinite() {
                    1.0
                } else {
                    *base
                }
            }
        }
    }

    pub fn beta(&self, y: &[usize]) -> f64 {
        self.beta_counts(&type_counts(y, self.p_y.len()))
    }

    fn check_observation(&self, y: &[usize]) -> Result<()> {
        if y.len() != self.cfg.n {
            return Err(Error::InvalidParameter(format!(
                "observation has length {}, expected {}",
                y.len(),
                self.cfg.n
            )));
        }
        if let Some(&s) = y.iter().find(|&&s| s >= self.p_y.len()) {
            return Err(Error::SymbolOutOfRange { symbol: s, size: self.p_y.len() });
        }
        Ok(())
    }

    /// Encodes `yⁿ` using the common randomness `common` and the encoder's own
    /// coin stream `local`.
    pub fn encode(&self, y: &[usize], common: u64, local: u64) -> Result<Encoded> {
        self.check_observation(y)?;
        let counts = type_counts(y, self.p_y.len());
        let beta = self.beta_counts(&counts);
        let mut coin = UniformStream::new(derive_substream(local, "relay-local"));
        let forced = beta >= 1.0 || coin.next_f64() < beta;
        let (index, scanned) = if forced {
            (1, 0)
        } else {
            if split_count(&counts, self.phi.z_size()) <= CHEAP_ENUMERATION && self.psi_counts(&counts).is_infinite() {
                return Err(Error::Config(
                    "no reconstruction is feasible for this observation and beta(y) < 1".into(),
                ));
            }
            let mut arrivals = PoissonStream::new(derive_substream(common, "arrivals"));
            let mut proposals = self.proposals(common);
            let eps = self.cfg.eps_prime;
            let target = Indicator(|z: &[usize]| self.phi.phi(y, z) <= eps);
            match pfr_select(&target, &mut arrivals, &mut proposals, self.cfg.max_scan) {
                Ok(sel) => (sel.index, sel.scanned),
                Err(Error::SelectionExhausted(m)) => {
                    return Err(Error::Config(format!(
                        "no feasible reconstruction within {m} proposals; beta(y) < 1 needs a nonempty feasible set"
                    )))
                }
                Err(e) => return Err(e),
            }
        };
        let mut codeword = Codeword::empty();
        if self.cfg.derandomized {
            codeword.push(false);
        }
        codeword.extend(&self.cfg.code.encode(index)?);
        Ok(Encoded { codeword, index, scanned, beta })
    }

    fn proposals(&self, common: u64) -> ProposalStream {
        ProposalStream::iid(derive_substream(common, "proposals"), &self.cfg.reference, self.cfg.n)
    }

    pub fn decode_index(&self, w: &Codeword) -> Result<u64> {
        let bits = if self.cfg.derandomized {
            w.bits().get(1..).ok_or_else(|| Error::Decode("missing time-sharing flag".into()))?
        } else {
            w.bits()
        };
        let (k, used) = self.cfg.code.decode(bits)?;
        if used != bits.len() {
            return Err(Error::Decode("trailing bits after codeword".into()));
        }
        Ok(k)
    }

    /// Replays the shared proposals and returns `Z̄_{K̃}`.
    pub fn decode(&self, w: &Codeword, common: u64) -> Result<Vec<usize>> {
        let k = self.decode_index(w)?;
        Ok(self.reconstruction(k, common))
    }

    pub fn reconstruction(&self, k: u64, common: u64) -> Vec<usize> {
        let mut z = Vec::with_capacity(self.cfg.n);
        self.proposals(common).sample_at(k, &mut z);
        z
    }

    /// Draws `(Xⁿ, Yⁿ)` from the source.
    pub fn draw_source(&self, local: u64) -> (Vec<usize>, Vec<usize>) {
        let mut u = UniformStream::new(derive_substream(local, "source"));
        let mut x = Vec::with_capacity(self.cfg.n);
        let mut y = Vec::with_capacity(self.cfg.n);
        for _ in 0..self.cfg.n {
            let ys = self.p_y.sample_with(u.next_f64());
            let xs = self.x_given_y[ys].sample_with(u.next_f64());
            y.push(ys);
            x.push(xs);
        }
        (x, y)
    }

    pub fn run_trial(&self, trial_seed: u64) -> Result<TrialResult> {
        self.run_trial_with(trial_seed, TrialSeeds::from_trial_seed(trial_seed))
    }

    pub fn run_trial_with(&self, label: u64, seeds: TrialSeeds) -> Result<TrialResult> {
        let (x, y) = self.draw_source(seeds.local);
        let enc = self.encode(&y, seeds.common, seeds.local)?;
        let z = self.decode(&enc.codeword, seeds.common)?;
        Ok(TrialResult {
            seed: label,
            variant: "noisy-vl".into(),
            n: self.cfg.n,
            message_count: 1,
            description_bits: enc.codeword.len() as u64,
            index: enc.index,
            error: self.phi.exceeds(&x, &z),
            achieved_info_density: None,
            distortion: self.phi.total(&x, &z) / self.cfg.n as f64,
            truncated: false,
            scanned: enc.scanned,
        })
    }

    /// `E[β(Yⁿ)]` and `E[(1-β)ψ]`, exact over observation types.
    pub fn expectations(&self) -> (f64, f64) {
        let mut eb = 0.0;
        let mut ep = 0.0;
        for (counts, w) in y_types(self.cfg.n, self.p_y.probs()) {
            let b = self.beta_counts(&counts);
            eb += w * b;
            if b < 1.0 {
                ep += w * (1.0 - b) * self.psi_counts(&counts);
            }
        }
        (eb, ep)
    }

    /// Joint types visited by [`NoisyVlScheme::expectations`] in the worst case.
    pub fn enumeration_cost(&self) -> f64 {
        y_types(self.cfg.n, self.p_y.probs())
            .iter()
            .map(|(c, _)| split_count(c, self.phi.z_size()))
            .sum()
    }

    /// [`NoisyVlScheme::expectations`], refused above
    /// [`BOUND_ENUMERATION_BUDGET`] joint types.
    pub fn checked_expectations(&self) -> Result<(f64, f64)> {
        let cost = self.enumeration_cost();
        if cost > BOUND_ENUMERATION_BUDGET {
            return Err(Error::Config(format!(
                "exact expectations need {cost:.3e} joint types, above the budget of {BOUND_ENUMERATION_BUDGET:.0e}"
            )));
        }
        Ok(self.expectations())
    }

    pub fn checked_bounds(&self) -> Result<LossyBounds> {
        self.checked_expectations()?;
        Ok(self.bounds())
    }

    pub fn bounds(&self) -> LossyBounds {
        let (eb, ep) = self.expectations();
        LossyBounds {
            expected_beta: eb,
            expected_psi: ep,
            pe_bound: eb + self.cfg.eps_prime,
            len_bound: crate::codec::max_entropy_length_bound(ep),
        }
    }

    /// Escaped Huffman code fitted to the indices of `pilot` trials.
    pub fn fit_index_code(&self, pilot: u64, seed: u64) -> Result<PrefixCode> {
        let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
        for t in 0..pilot {
            let seeds = TrialSeeds::from_trial_seed(derive_substream(seed, &format!("pilot{t}")));
            let (_, y) = self.draw_source(seeds.local);
            *counts.entry(self.encode(&y, seeds.common, seeds.local)?.index).or_insert(0) += 1;
        }
        build_escaped_huffman(&counts, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Kernel;

    fn dsbs(p: f64) -> JointPmf {
        JointPmf::from_marginal_and_kernel(&Pmf::uniform(2).unwrap(), &Kernel::bsc(p).unwrap()).unwrap()
    }

    fn cfg(n: usize, level: f64, eps: f64) -> NoisyVLConfig {
        NoisyVLConfig::new(dsbs(0.1), DistortionMeasure::hamming(2).unwrap(), level, eps, Pmf::uniform(2).unwrap(), n)
    }

    #[test]
    fn beta_one_sends_first_index() {
        let mut c = cfg(4, 0.3, 0.1);
        c.beta = BetaRule::Constant { value: 1.0 };
        let s = NoisyVlScheme::new(c).unwrap();
        for seed in 0..20 {
            let r = s.run_trial(seed).unwrap();
            assert_eq!(r.index, 1);
            assert_eq!(r.description_bits, 1);
        }
    }

    #[test]
    fn loose_threshold_accepts_first_proposal() {
        // every reconstruction has φ <= 1
        let s = NoisyVlScheme::new(cfg(3, 0.2, 0.999_999)).unwrap();
        let s2 = NoisyVlScheme::new(cfg(3, 1.0, 0.5)).unwrap();
        for seed in 0..20 {
            assert_eq!(s.run_trial(seed).unwrap().index, 1);
            assert_eq!(s2.run_trial(seed).unwrap().index, 1);
        }
    }

    #[test]
    fn decode_replays_encoder_choice() {
        let s = NoisyVlScheme::new(cfg(8, 0.3, 0.1)).unwrap();
        for seed in 0..30u64 {
            let seeds = TrialSeeds::from_trial_seed(seed);
            let (_, y) = s.draw_source(seeds.local);
            let e = s.encode(&y, seeds.common, seeds.local).unwrap();
            let z = s.decode(&e.codeword, seeds.common).unwrap();
            assert!(s.phi().phi(&y, &z) <= 0.1);
            assert_eq!(s.run_trial(seed).unwrap(), s.run_trial(seed).unwrap());
        }
    }

    #[test]
    fn infeasible_observation_needs_beta_one() {
        // D below the smallest achievable level
        let s = NoisyVlScheme::new(cfg(1, 0.0, 0.05)).unwrap();
        assert!(matches!(s.encode(&[0], 1, 2), Err(Error::Config(_))));
        let mut c = cfg(1, 0.0, 0.05);
        c.beta = BetaRule::feasible_or(0.0);
        let s = NoisyVlScheme::new(c).unwrap();
        assert_eq!(s.encode(&[0], 1, 2).unwrap().index, 1);
        assert_eq!(s.bounds().expected_beta, 1.0);
    }

    #[test]
    fn table_rule_is_single_letter_only() {
        let mut c = cfg(2, 0.3, 0.1);
        c.beta = BetaRule::Table { values: vec![0.0, 1.0] };
        assert!(NoisyVlScheme::new(c).is_err());
    }
}

//! Seeded common randomness: unit-rate Poisson arrivals `T_1 < T_2 < ...`, iid
//! proposal sequences `Z̄_1, Z̄_2, ...`, Poisson functional representation and
//! the bounded-argmin decoder of the Poisson matching lemma.
//!
//! Streams are generated by ChaCha8 keyed with the 64-bit seed. A uniform
//! variate is `((w >> 11) + 0.5) · 2^-53` for the next 64-bit output `w`, so it
//! lies strictly inside `(0, 1)`. Inter-arrival times are `-ln u`. The
//! proposal with index `k` (1-based) of a length-`n` stream consumes outputs
//! `(k-1)·n .. k·n`, one per letter, mapped through the inverse CDF of that
//! letter's law; any index can therefore be regenerated independently.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::prob::Pmf;

#[inline]
fn unit_open(w: u64) -> f64 {
    ((w >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Seed for an independent stream named `label` under `master_seed`: the first
/// eight bytes (little endian) of `SHA-256(master_seed_le ‖ label)`.
pub fn derive_substream(master_seed: u64, label: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(master_seed.to_le_bytes());
    h.update(label.as_bytes());
    let out = h.finalize();
    u64::from_le_bytes(out[..8].try_into().expect("digest has 32 bytes"))
}

/// Uniform variates on `(0, 1)` from a seed, same generator as the streams.
#[derive(Debug, Clone)]
pub struct UniformStream {
    rng: ChaCha8Rng,
}

impl UniformStream {
    pub fn new(seed: u64) -> Self {
        UniformStream {
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn next_f64(&mut self) -> f64 {
        unit_open(self.rng.next_u64())
    }

    /// Uniform index in `0..m` (multiply-shift, bias below `2^-64·m`).
    pub fn next_below(&mut self, m: u64) -> u64 {
        ((u128::from(self.rng.next_u64()) * u128::from(m)) >> 64) as u64
    }
}

/// Lazily extended unit-rate Poisson process.
#[derive(Debug, Clone)]
pub struct PoissonStream {
    seed: u64,
    rng: ChaCha8Rng,
    arrivals: Vec<f64>,
}

impl PoissonStream {
    pub fn new(seed: u64) -> Self {
        PoissonStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            arrivals: Vec::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `T_k` for `k >= 1`.
    pub fn nth_arrival(&mut self, k: u64) -> f64 {
        assert!(k >= 1, "arrival indices start at 1");
        let k = k as usize;
        while self.arrivals.len() < k {
            let last = self.arrivals.last().copied().unwrap_or(0.0);
            let e = -unit_open(self.rng.next_u64()).ln();
            // keep strict monotonicity even if e underflows relative to last
            let next = last + e;
            self.arrivals.push(if next > last { next } else { f64::from_bits(last.to_bits() + 1) });
        }
        self.arrivals[k - 1]
    }

    pub fn cached(&self) -> &[f64] {
        &self.arrivals
    }
}

/// Inverse-CDF sampler for one letter.
#[derive(Debug, Clone)]
struct LetterSampler {
    cdf: Vec<f64>,
}

impl LetterSampler {
    fn new(p: &Pmf) -> Self {
        let mut acc = 0.0;
        let cdf = p
            .probs()
            .iter()
            .map(|v| {
                acc += v;
                acc
            })
            .collect();
        LetterSampler { cdf }
    }

    #[inline]
    fn sample(&self, u: f64) -> usize {
        // first index whose cumulative mass exceeds u; skip zero-mass symbols
        let i = self.cdf.partition_point(|&c| c <= u);
        if i < self.cdf.len() {
            i
        } else {
            // u beyond the float total: last symbol with positive mass
            (0..self.cdf.len())
                .rev()
                .find(|&j| j == 0 || self.cdf[j] > self.cdf[j - 1])
                .unwrap_or(0)
        }
    }
}

/// iid proposals from a product law `∏ P_i`, cached as they are scanned.
#[derive(Debug, Clone)]
pub struct ProposalStream {
    seed: u64,
    rng: ChaCha8Rng,
    letters: Vec<LetterSampler>,
    /// which sampler serves each position
    layout: Vec<usize>,
    cache: Vec<usize>,
    cached: u64,
}

impl ProposalStream {
    /// Single-letter proposals.
    pub fn new(seed: u64, proposal: &Pmf) -> Self {
        Self::iid(seed, proposal, 1)
    }

    /// Length-`n` proposals with iid letters.
    pub fn iid(seed: u64, letter: &Pmf, n: usize) -> Self {
        ProposalStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            letters: vec![LetterSampler::new(letter)],
            layout: vec![0; n],
            cache: Vec::new(),
            cached: 0,
        }
    }

    /// Length-`n` proposals with independent, non-identical letters.
    pub fn product(seed: u64, letters: &[Pmf]) -> Self {
        ProposalStream {
            seed,
            rng: ChaCha8Rng::seed_from_u64(seed),
            letters: letters.iter().map(LetterSampler::new).collect(),
            layout: (0..letters.len()).collect(),
            cache: Vec::new(),
            cached: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn block_len(&self) -> usize {
        self.layout.len()
    }

    /// `Z̄_k` for `k >= 1`, extending the cache.
    pub fn nth(&mut self, k: u64) -> &[usize] {
        assert!(k >= 1, "proposal indices start at 1");
        let n = self.layout.len();
        while self.cached < k {
            for &l in &self.layout {
                let u = unit_open(self.rng.next_u64());
                self.cache.push(self.letters[l].sample(u));
            }
            self.cached += 1;
        }
        let s = (k as usize - 1) * n;
        &self.cache[s..s + n]
    }

    /// `Z̄_k` regenerated without touching the cache.
    pub fn sample_at(&self, k: u64, out: &mut Vec<usize>) {
        assert!(k >= 1, "proposal indices start at 1");
        let n = self.layout.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        // two 32-bit words per 64-bit output
        rng.set_word_pos(2 * (k as u128 - 1) * n as u128);
        out.clear();
        for &l in &self.layout {
            out.push(self.letters[l].sample(unit_open(rng.next_u64())));
        }
    }

    /// Drops cached proposals (the stream restarts lazily from index 1).
    pub fn reset(&mut self) {
        self.rng = ChaCha8Rng::seed_from_u64(self.seed);
        self.cache.clear();
        self.cached = 0;
    }
}

/// Density ratio `r(z) = target(z) / proposal(z)` in log2, used for selection.
pub trait SelectionTarget {
    /// `log2 r(z)`; `-inf` where the target has no mass.
    fn log_ratio(&self, z: &[usize]) -> f64;
    /// `log2 r_max`, if known. Selection without a bound is refused.
    fn log_ratio_bound(&self) -> Option<f64>;
}

/// Single-letter or iid-product ratio built from two finite laws.
#[derive(Debug, Clone)]
pub struct PmfRatio {
    log_ratios: Vec<f64>,
    bound: f64,
}

impl PmfRatio {
    pub fn new(target: &Pmf, proposal: &Pmf) -> Result<Self> {
        if !target.alphabet().compatible(proposal.alphabet()) {
            return Err(Error::AlphabetMismatch("target and proposal alphabets differ".into()));
        }
        let mut log_ratios = Vec::with_capacity(target.len());
        for (t, p) in target.probs().iter().zip(proposal.probs()) {
            if *t > 0.0 && *p == 0.0 {
                return Err(Error::InvalidDistribution(
                    "target is not absolutely continuous with respect to the proposal".into(),
                ));
            }
            log_ratios.push(if *t > 0.0 { (t / p).log2() } else { f64::NEG_INFINITY });
        }
        let bound = log_ratios.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(PmfRatio { log_ratios, bound })
    }

    pub fn letter(&self, z: usize) -> f64 {
        self.log_ratios[z]
    }
}

impl SelectionTarget for PmfRatio {
    /// Sum over letters, i.e. the ratio of the iid product laws.
    fn log_ratio(&self, z: &[usize]) -> f64 {
        z.iter().map(|&s| self.log_ratios[s]).sum()
    }

    fn log_ratio_bound(&self) -> Option<f64> {
        Some(self.bound)
    }
}

/// Proposal law conditioned on a feasible set: ratio constant on the set.
pub struct Indicator<F: Fn(&[usize]) -> bool>(pub F);

impl<F: Fn(&[usize]) -> bool> SelectionTarget for Indicator<F> {
    fn log_ratio(&self, z: &[usize]) -> f64 {
        if (self.0)(z) {
            0.0
        } else {
            f64::NEG_INFINITY
        }
    }

    fn log_ratio_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionResult {
    /// 1-based index `K`.
    pub index: u64,
    pub value: Vec<usize>,
    /// Number of proposals examined.
    pub scanned: u64,
}

/// `K = argmin_k T_k / r(Z̄_k)`, scanning until `T_k / r_max` can no longer
/// beat the incumbent or `max_scan` proposals were examined. Ties keep the
/// smaller index.
pub fn pfr_select(
    target: &dyn SelectionTarget,
    arrivals: &mut PoissonStream,
    proposals: &mut ProposalStream,
    max_scan: u64,
) -> Result<SelectionResult> {
    let bound = target.log_ratio_bound().ok_or_else(|| {
        Error::Config("selection needs a known bound on the density ratio".into())
    })?;
    let mut best = f64::INFINITY;
    let mut best_k = 0u64;
    let mut k = 0u64;
    loop {
        k += 1;
        if k > max_scan {
            return Err(Error::SelectionExhausted(max_scan));
        }
        let lt = arrivals.nth_arrival(k).log2();
        if best_k > 0 && lt - bound >= best {
            k -= 1;
            break;
        }
        let lr = target.log_ratio(proposals.nth(k));
        if lr == f64::NEG_INFINITY {
            continue;
        }
        let obj = lt - lr;
        if obj < best {
            best = obj;
            best_k = k;
        }
    }
    Ok(SelectionResult {
        index: best_k,
        value: proposals.nth(best_k).to_vec(),
        scanned: k,
    })
}

/// Convenience wrapper for single-letter laws.
pub fn pfr_select_pmf(target: &Pmf, proposal: &Pmf, arrivals_seed: u64, proposals_seed: u64) -> Result<SelectionResult> {
    let ratio = PmfRatio::new(target, proposal)?;
    let mut a = PoissonStream::new(arrivals_seed);
    let mut p = ProposalStream::new(proposals_seed, proposal);
    pfr_select(&ratio, &mut a, &mut p, u64::MAX)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PmlOutcome {
    /// 1-based index in `[l]`.
    pub index: u64,
    /// Every candidate had ratio zero; `index` is then 1.
    pub all_zero: bool,
}

/// `argmin_{k ∈ [l]} T_k / r_k` with `log_ratio(k) = log2 r_k`; entries with
/// `r_k = 0` have objective `+inf`. If `log_bound` is given the scan stops as
/// soon as `T_k / r_max` exceeds the incumbent.
pub fn pml_argmin(
    l: u64,
    log_ratio: impl Fn(u64) -> f64,
    arrivals: &mut PoissonStream,
    log_bound: Option<f64>,
) -> PmlOutcome {
    let mut best = f64::INFINITY;
    let mut best_k = 0;
    for k in 1..=l.max(1) {
        let lt = arrivals.nth_arrival(k).log2();
        if let Some(b) = log_bound {
            if best_k > 0 && lt - b >= best {
                break;
            }
        }
        let lr = log_ratio(k);
        if lr == f64::NEG_INFINITY {
            continue;
        }
        let obj = lt - lr;
        if obj < best {
            best = obj;
            best_k = k;
        }
    }
    if best_k == 0 {
        PmlOutcome { index: 1, all_zero: true }
    } else {
        PmlOutcome { index: best_k, all_zero: false }
    }
}

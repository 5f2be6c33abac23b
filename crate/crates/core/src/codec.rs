//! Prefix-free descriptions of positive selection indices.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::Pmf;

/// A finite bit string, written as `0`/`1` text.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Codeword {
    bits: Vec<bool>,
}

impl Codeword {
    pub fn new(bits: Vec<bool>) -> Self {
        Codeword { bits }
    }

    pub fn empty() -> Self {
        Codeword::default()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn push(&mut self, b: bool) {
        self.bits.push(b);
    }

    pub fn extend(&mut self, other: &Codeword) {
        self.bits.extend_from_slice(&other.bits);
    }

    /// Appends the `width` low-order bits of `v`, most significant first.
    pub fn push_fixed(&mut self, v: u64, width: u32) {
        for i in (0..width).rev() {
            self.bits.push((v >> i) & 1 == 1);
        }
    }

    pub fn is_prefix_of(&self, other: &Codeword) -> bool {
        other.bits.starts_with(&self.bits)
    }
}

impl fmt::Display for Codeword {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Codeword {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Decode(format!("unexpected character {other:?} in bit string"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Codeword::new)
    }
}

impl Serialize for Codeword {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Codeword {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Elias delta codeword of `k >= 1`.
pub fn elias_delta(k: u64) -> Codeword {
    assert!(k >= 1, "Elias delta encodes positive integers");
    let n_bits = 64 - k.leading_zeros(); // bits of k
    let l_bits = 32 - n_bits.leading_zeros(); // bits of n_bits
    let mut w = Codeword::empty();
    for _ in 0..l_bits - 1 {
        w.push(false);
    }
    w.push_fixed(u64::from(n_bits), l_bits);
    w.push_fixed(k, n_bits - 1);
    w
}

pub fn elias_delta_len(k: u64) -> usize {
    let n_bits = 64 - k.leading_zeros();
    let l_bits = 32 - n_bits.leading_zeros();
    (2 * l_bits - 1 + n_bits - 1) as usize
}

/// Decodes one Elias delta codeword from the front of `bits`; returns the
/// value and the number of bits consumed.
pub fn elias_delta_decode(bits: &[bool]) -> Result<(u64, usize)> {
    let zeros = bits.iter().take_while(|&&b| !b).count();
    if zeros >= bits.len() {
        return Err(Error::Decode("truncated Elias delta prefix".into()));
    }
    if zeros > 6 {
        return Err(Error::Decode("Elias delta length field overflows 64 bits".into()));
    }
    let read = |from: usize, width: usize| -> Result<u64> {
        let slice = bits
            .get(from..from + width)
            .ok_or_else(|| Error::Decode("truncated Elias delta codeword".into()))?;
        Ok(slice.iter().fold(0u64, |acc, &b| (acc << 1) | u64::from(b)))
    };
    let n_bits = read(zeros, zeros + 1)? as usize;
    if n_bits == 0 || n_bits > 64 {
        return Err(Error::Decode(format!("invalid Elias delta length {n_bits}")));
    }
    let start = 2 * zeros + 1;
    let tail = read(start, n_bits - 1)?;
    let k = if n_bits == 64 { (1u64 << 63) | tail } else { (1u64 << (n_bits - 1)) | tail };
    Ok((k, start + n_bits - 1))
}

/// `ℓ(t) = t + log2(t + 2) + 4`: expected length of an optimal prefix code
/// for a positive integer `K` with `E[log2 K] <= t`.
pub fn max_entropy_length_bound(t: f64) -> f64 {
    t + (t + 2.0).log2() + 4.0
}

/// Upper bound on the mean Elias delta length of `K` with `E[log2 K] <= t`,
/// by concavity of `log2(log2 k + 1)`.
pub fn elias_delta_mean_bound(t: f64) -> f64 {
    t + 2.0 * (t + 2.0).log2() + 2.0
}

/// Worst-case excess of [`elias_delta_mean_bound`] over
/// [`max_entropy_length_bound`] at `t`.
pub fn universal_code_constant(t: f64) -> f64 {
    (elias_delta_mean_bound(t) - max_entropy_length_bound(t)).max(0.0)
}

/// A prefix-free code over positive integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PrefixCode {
    /// Codewords for indices `1..=m`.
    Table { codewords: Vec<Codeword> },
    /// Elias delta on every positive integer.
    EliasDelta,
    /// Codewords for listed indices (sorted) plus one escape codeword
    /// followed by the Elias delta codeword of every other index.
    Escaped { entries: Vec<(u64, Codeword)>, escape: Codeword },
}

impl PrefixCode {
    pub fn encode(&self, k: u64) -> Result<Codeword> {
        if k == 0 {
            return Err(Error::InvalidParameter("indices start at 1".into()));
        }
        match self {
            PrefixCode::EliasDelta => Ok(elias_delta(k)),
            PrefixCode::Table { codewords } => codewords
                .get(k as usize - 1)
                .cloned()
                .ok_or_else(|| Error::InvalidParameter(format!("index {k} outside code of size {}", codewords.len()))),
            PrefixCode::Escaped { entries, escape } => match entries.binary_search_by_key(&k, |e| e.0) {
                Ok(i) => Ok(entries[i].1.clone()),
                Err(_) => {
                    let mut w = escape.clone();
                    w.extend(&elias_delta(k));
                    Ok(w)
                }
            },
        }
    }

    /// Decodes one codeword from the front of `bits`.
    pub fn decode(&self, bits: &[bool]) -> Result<(u64, usize)> {
        let no_match = || Error::Decode("no codeword matches".into());
        match self {
            PrefixCode::EliasDelta => elias_delta_decode(bits),
            PrefixCode::Table { codewords } => codewords
                .iter()
                .position(|w| bits.starts_with(w.bits()))
                .map(|i| (i as u64 + 1, codewords[i].len()))
                .ok_or_else(no_match),
            PrefixCode::Escaped { entries, escape } => {
                if bits.starts_with(escape.bits()) {
                    let (k, used) = elias_delta_decode(&bits[escape.len()..])?;
                    return Ok((k, escape.len() + used));
                }
                entries
                    .iter()
                    .find(|e| bits.starts_with(e.1.bits()))
                    .map(|e| (e.0, e.1.len()))
                    .ok_or_else(no_match)
            }
        }
    }

    pub fn decode_exact(&self, w: &Codeword) -> Result<u64> {
        let (k, used) = self.decode(w.bits())?;
        if used != w.len() {
            return Err(Error::Decode(format!("{} trailing bits after codeword", w.len() - used)));
        }
        Ok(k)
    }

    pub fn len_of(&self, k: u64) -> Result<usize> {
        match self {
            PrefixCode::EliasDelta if k >= 1 => Ok(elias_delta_len(k)),
            _ => self.encode(k).map(|w| w.len()),
        }
    }

    /// Finite codeword set (escape included); `None` for the universal code.
    pub fn table(&self) -> Option<Vec<&Codeword>> {
        match self {
            PrefixCode::EliasDelta => None,
            PrefixCode::Table { codewords } => Some(codewords.iter().collect()),
            PrefixCode::Escaped { entries, escape } => Some(entries.iter().map(|e| &e.1).chain([escape]).collect()),
        }
    }

    pub fn kraft_sum(&self) -> f64 {
        match self.table() {
            None => 1.0,
            Some(t) => t.iter().map(|w| (-(w.len() as f64)).exp2()).sum(),
        }
    }

    /// Structural check that no codeword is a prefix of another.
    pub fn is_prefix_free(&self) -> bool {
        match self.table() {
            None => true,
            Some(mut t) => {
                t.sort();
                t.windows(2).all(|p| !p[0].is_prefix_of(p[1]))
            }
        }
    }
}

/// Huffman code lengths for the given weights (`0` for a single symbol).
fn huffman_lengths(weights: &[f64]) -> Vec<usize> {
    #[derive(PartialEq)]
    struct Node(f64, usize);
    impl Eq for Node {}
    impl PartialOrd for Node {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }
    impl Ord for Node {
        fn cmp(&self, o: &Self) -> Ordering {
            self.0.total_cmp(&o.0).then(self.1.cmp(&o.1))
        }
    }
    let m = weights.len();
    if m <= 1 {
        return vec![0; m];
    }
    let mut parent = vec![usize::MAX; 2 * m - 1];
    let mut heap: BinaryHeap<Reverse<Node>> = weights.iter().enumerate().map(|(i, &w)| Reverse(Node(w, i))).collect();
    let mut next = m;
    while heap.len() > 1 {
        let Reverse(a) = heap.pop().expect("two nodes");
        let Reverse(b) = heap.pop().expect("two nodes");
        parent[a.1] = next;
        parent[b.1] = next;
        heap.push(Reverse(Node(a.0 + b.0, next)));
        next += 1;
    }
    (0..m)
        .map(|mut i| {
            let mut depth = 0;
            while parent[i] != usize::MAX {
                i = parent[i];
                depth += 1;
            }
            depth
        })
        .collect()
}

/// Canonical codewords for the given lengths, in symbol order.
fn canonical(lengths: &[usize]) -> Vec<Codeword> {
    let mut order: Vec<usize> = (0..lengths.len()).collect();
    order.sort_by_key(|&i| (lengths[i], i));
    let mut out = vec![Codeword::empty(); lengths.len()];
    let mut code: u128 = 0;
    let mut prev = 0usize;
    for (rank, &i) in order.iter().enumerate() {
        let l = lengths[i];
        if rank > 0 {
            code = (code + 1) << (l - prev);
        }
        let mut w = Codeword::empty();
        for b in (0..l).rev() {
            w.push((code >> b) & 1 == 1);
        }
        out[i] = w;
        prev = l;
    }
    out
}

/// Optimal prefix code for `pmf`; symbol `i` is index `i + 1`.
pub fn build_huffman(pmf: &Pmf) -> PrefixCode {
    PrefixCode::Table {
        codewords: canonical(&huffman_lengths(pmf.probs())),
    }
}

/// Huffman code on observed index counts with an escape for everything else.
/// The escape symbol carries weight `escape_weight` relative to the counts.
pub fn build_escaped_huffman(counts: &BTreeMap<u64, u64>, escape_weight: f64) -> Result<PrefixCode> {
    if !(escape_weight > 0.0) {
        return Err(Error::InvalidParameter("escape weight must be positive".into()));
    }
    let seen: Vec<(u64, f64)> = counts
        .iter()
        .filter(|(&k, &c)| k >= 1 && c > 0)
        .map(|(&k, &c)| (k, c as f64))
        .collect();
    let mut weights: Vec<f64> = seen.iter().map(|p| p.1).collect();
    weights.push(escape_weight);
    let mut words = canonical(&huffman_lengths(&weights));
    let escape = words.pop().expect("escape symbol present");
    Ok(PrefixCode::Escaped {
        entries: seen.iter().map(|p| p.0).zip(words).collect(),
        escape,
    })
}

/// Result of replacing common randomness by a two-point time sharing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Derandomized {
    pub i: usize,
    pub j: usize,
    /// Weight on point `i`.
    pub lambda: f64,
    /// Distance `t` of the combination below the mean along `(1, 1)`.
    pub slack: f64,
    /// `false` when no pair was found (float drift only); `slack` is then the
    /// smallest componentwise margin of the single returned point.
    pub dominated: bool,
}

/// Finds `i, j, λ` with `λ·p_i + (1-λ)·p_j = mean - t·(1, 1)` for the
/// smallest `t >= 0`: the first segment between two points met when moving
/// from the mean towards `-(1, 1)`. The mean lies in the convex hull, so such
/// a segment exists up to rounding; otherwise the point with the largest
/// componentwise slack is returned, flagged.
pub fn derandomize(points: &[(f64, f64)]) -> Result<Derandomized> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("no points to derandomize".into()));
    }
    let n = points.len() as f64;
    let mean = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let scale = points.iter().fold(1.0f64, |m, p| m.max(p.0.abs()).max(p.1.abs()));
    let tol = 1e-12 * scale;
    let mut best: Option<Derandomized> = None;
    let mut offer = |i: usize, j: usize, lambda: f64, t: f64| {
        if t >= -tol && best.map_or(true, |b| t < b.slack) {
            best = Some(Derandomized { i, j, lambda, slack: t, dominated: true });
        }
    };
    for i in 0..points.len() {
        let a = points[i];
        let d = (mean.0 - a.0, mean.1 - a.1);
        if (d.0 - d.1).abs() <= tol {
            offer(i, i, 1.0, 0.5 * (d.0 + d.1));
        }
        for j in i + 1..points.len() {
            let b = points[j];
            // λ(a - b) + t(1, 1) = mean - b
            let det = (a.0 - b.0) - (a.1 - b.1);
            if det.abs() <= 1e-300 {
                continue;
            }
            let r = (mean.0 - b.0, mean.1 - b.1);
            let lambda = (r.0 - r.1) / det;
            if !(-1e-12..=1.0 + 1e-12).contains(&lambda) {
                continue;
            }
            let lambda = lambda.clamp(0.0, 1.0);
            let t = (r.0 - lambda * (a.0 - b.0)).min(r.1 - lambda * (a.1 - b.1));
            offer(i, j, lambda, t);
        }
    }
    if let Some(b) = best {
        return Ok(b);
    }
    let (i, slack) = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (mean.0 - p.0).min(mean.1 - p.1)))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(Derandomized { i, j: i, lambda: 1.0, slack, dominated: false })
}

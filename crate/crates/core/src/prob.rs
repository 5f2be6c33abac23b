//! Finite-alphabet probability: distributions, channels, information measures
//! and information densities.
//!
//! Everything is in bits. Probabilities are `f64`; a distribution whose mass
//! drifts from one by more than [`NORMALIZATION_TOL`] is rejected at
//! construction and never renormalized behind the caller's back.
//!
//! Conventions: `0·log 0 = 0` and `p·log(p/0) = +∞`.

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Maximum allowed deviation of a total mass from one.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// `p · log2(p / q)` with the usual conventions.
#[inline]
pub(crate) fn plogpq(p: f64, q: f64) -> f64 {
    if p <= 0.0 {
        0.0
    } else if q <= 0.0 {
        f64::INFINITY
    } else {
        p * (p / q).log2()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
    labels: Option<Vec<String>>,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size == 0 {
            return Err(Error::InvalidAlphabet("size must be at least 1".into()));
        }
        Ok(Alphabet { size, labels: None })
    }

    pub fn labeled<S: Into<String>>(labels: impl IntoIterator<Item = S>) -> Result<Self> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::InvalidAlphabet("label list is empty".into()));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::InvalidAlphabet("labels are not distinct".into()));
        }
        Ok(Alphabet {
            size: labels.len(),
            labels: Some(labels),
        })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        match &self.labels {
            Some(l) => l.iter().position(|s| s == label),
            None => label.parse().ok().filter(|&i: &usize| i < self.size),
        }
    }

    /// Same size; labels are not compared.
    pub fn compatible(&self, other: &Alphabet) -> bool {
        self.size == other.size
    }

    fn check_symbol(&self, s: usize) -> Result<()> {
        if s < self.size {
            Ok(())
        } else {
            Err(Error::SymbolOutOfRange {
                symbol: s,
                size: self.size,
            })
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum AlphabetRepr {
    Size(usize),
    Labels(Vec<String>),
}

impl Serialize for Alphabet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match &self.labels {
            Some(l) => AlphabetRepr::Labels(l.clone()).serialize(s),
            None => AlphabetRepr::Size(self.size).serialize(s),
        }
    }
}

impl<'de> Deserialize<'de> for Alphabet {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        match AlphabetRepr::deserialize(d)? {
            AlphabetRepr::Size(n) => Alphabet::new(n),
            AlphabetRepr::Labels(l) => Alphabet::labeled(l),
        }
        .map_err(serde::de::Error::custom)
    }
}

/// Alphabet from JSON, or an unlabeled one sized by the data.
pub(crate) fn alphabet_or_size(a: Option<Alphabet>, size: usize) -> Result<Alphabet> {
    match a {
        Some(a) => Ok(a),
        None => Alphabet::new(size),
    }
}

fn check_probs(probs: &[f64], what: &str) -> Result<()> {
    if let Some(p) = probs.iter().find(|p| !p.is_finite() || **p < 0.0) {
        return Err(Error::InvalidDistribution(format!(
            "{what}: entry {p} is negative or not finite"
        )));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidDistribution(format!(
            "{what}: total mass {total} differs from 1"
        )));
    }
    Ok(())
}

/// Probability mass function over a finite alphabet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PmfRepr", into = "PmfRepr")]
pub struct Pmf {
    alphabet: Alphabet,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct PmfRepr {
    #[serde(default)]
    alphabet: Option<Alphabet>,
    probs: Vec<f64>,
}

impl TryFrom<PmfRepr> for Pmf {
    type Error = Error;
    fn try_from(r: PmfRepr) -> Result<Self> {
        Pmf::new(alphabet_or_size(r.alphabet, r.probs.len())?, r.probs)
    }
}

impl From<Pmf> for PmfRepr {
    fn from(p: Pmf) -> Self {
        PmfRepr {
            alphabet: Some(p.alphabet),
            probs: p.probs,
        }
    }
}

impl Pmf {
    pub fn new(alphabet: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != alphabet.size() {
            return Err(Error::InvalidDistribution(format!(
                "{} probabilities for an alphabet of size {}",
                probs.len(),
                alphabet.size()
            )));
        }
        check_probs(&probs, "pmf")?;
        Ok(Pmf { alphabet, probs })
    }

    pub fn from_probs(probs: Vec<f64>) -> Result<Self> {
        Pmf::new(Alphabet::new(probs.len())?, probs)
    }

    pub fn uniform(size: usize) -> Result<Self> {
        Pmf::from_probs(vec![1.0 / size.max(1) as f64; size])
    }

    pub fn point_mass(size: usize, at: usize) -> Result<Self> {
        let a = Alphabet::new(size)?;
        a.check_symbol(at)?;
        let mut probs = vec![0.0; size];
        probs[at] = 1.0;
        Pmf::new(a, probs)
    }

    /// Distribution of a binary variable that equals 1 with probability `p`.
    pub fn bernoulli(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("bernoulli parameter {p}")));
        }
        Pmf::from_probs(vec![1.0 - p, p])
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.probs
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > 0.0)
            .map(|(i, _)| i)
    }

    /// Inverse-CDF draw from a uniform `u ∈ [0, 1)`. Never returns a
    /// zero-probability symbol.
    pub fn sample_with(&self, u: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p <= 0.0 {
                continue;
            }
            acc += p;
            last = i;
            if u < acc {
                return i;
            }
        }
        last
    }

    /// Explicit renormalization of nonnegative weights.
    pub fn normalized(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return Err(Error::InvalidDistribution(format!(
                "cannot normalize weights with total {total}"
            )));
        }
        Pmf::new(alphabet, weights.into_iter().map(|w| w / total).collect())
    }
}

/// Joint distribution of a (row, column) pair, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "JointRepr", into = "JointRepr")]
pub struct JointPmf {
    rows: Alphabet,
    cols: Alphabet,
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct JointRepr {
    #[serde(default)]
    row_alphabet: Option<Alphabet>,
    #[serde(default)]
    col_alphabet: Option<Alphabet>,
    probs: Vec<Vec<f64>>,
}

impl TryFrom<JointRepr> for JointPmf {
    type Error = Error;
    fn try_from(r: JointRepr) -> Result<Self> {
        let rows = alphabet_or_size(r.row_alphabet, r.probs.len())?;
        let cols = alphabet_or_size(r.col_alphabet, r.probs.first().map_or(0, Vec::len))?;
        if r.probs.len() != rows.size() || r.probs.iter().any(|row| row.len() != cols.size())
        {
            return Err(Error::InvalidDistribution(
                "joint matrix shape does not match alphabets".into(),
            ));
        }
        JointPmf::new(rows, cols, r.probs.concat())
    }
}

impl From<JointPmf> for JointRepr {
    fn from(j: JointPmf) -> Self {
        let probs = j.probs.chunks(j.cols.size()).map(<[f64]>::to_vec).collect();
        JointRepr {
            row_alphabet: Some(j.rows),
            col_alphabet: Some(j.cols),
            probs,
        }
    }
}

impl JointPmf {
    pub fn new(rows: Alphabet, cols: Alphabet, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != rows.size() * cols.size() {
            return Err(Error::InvalidDistribution(format!(
                "{} entries for a {}x{} joint",
                probs.len(),
                rows.size(),
                cols.size()
            )));
        }
        check_probs(&probs, "joint pmf")?;
        Ok(JointPmf { rows, cols, probs })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidDistribution("ragged joint matrix".into()));
        }
        JointPmf::new(Alphabet::new(r)?, Alphabet::new(c)?, rows.concat())
    }

    /// `P(r, c) = P_R(r) · K(c | r)`.
    pub fn from_marginal_and_kernel(p: &Pmf, k: &Kernel) -> Result<Self> {
        if !p.alphabet().compatible(k.input_alphabet()) {
            return Err(Error::AlphabetMismatch(
                "marginal alphabet differs from kernel input alphabet".into(),
            ));
        }
        let mut probs = Vec::with_capacity(p.len() * k.output_size());
        for (r, &pr) in p.probs().iter().enumerate() {
            probs.extend(k.row(r).iter().map(|&q| pr * q));
        }
        JointPmf::new(p.alphabet().clone(), k.output_alphabet().clone(), probs)
    }

    pub fn product(p: &Pmf, q: &Pmf) -> Result<Self> {
        let mut probs = Vec::with_capacity(p.len() * q.len());
        for &a in p.probs() {
            probs.extend(q.probs().iter().map(|&b| a * b));
        }
        JointPmf::new(p.alphabet().clone(), q.alphabet().clone(), probs)
    }

    pub fn row_alphabet(&self) -> &Alphabet {
        &self.rows
    }

    pub fn col_alphabet(&self) -> &Alphabet {
        &self.cols
    }

    pub fn n_rows(&self) -> usize {
        self.rows.size()
    }

    pub fn n_cols(&self) -> usize {
        self.cols.size()
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.probs[r * self.cols.size() + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        let c = self.cols.size();
        &self.probs[r * c..(r + 1) * c]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn row_marginal_probs(&self) -> Vec<f64> {
        (0..self.n_rows()).map(|r| self.row(r).iter().sum()).collect()
    }

    pub fn col_marginal_probs(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_cols()];
        for r in 0..self.n_rows() {
            for (c, &p) in self.row(r).iter().enumerate() {
                m[c] += p;
            }
        }
        m
    }

    pub fn row_marginal(&self) -> Pmf {
        Pmf {
            alphabet: self.rows.clone(),
            probs: self.row_marginal_probs(),
        }
    }

    pub fn col_marginal(&self) -> Pmf {
        Pmf {
            alphabet: self.cols.clone(),
            probs: self.col_marginal_probs(),
        }
    }

    pub fn transpose(&self) -> JointPmf {
        let (r, c) = (self.n_rows(), self.n_cols());
        let mut probs = vec![0.0; r * c];
        for i in 0..r {
            for j in 0..c {
                probs[j * r + i] = self.get(i, j);
            }
        }
        JointPmf {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            probs,
        }
    }

    /// `P(col | row)` as a kernel. Rows with zero mass get a uniform row and
    /// are reported in the returned list.
    pub fn col_given_row(&self) -> (Kernel, Vec<usize>) {
        let c = self.n_cols();
        let mut rows = Vec::with_capacity(self.probs.len());
        let mut unused = Vec::new();
        for r in 0..self.n_rows() {
            let row = self.row(r);
            let m: f64 = row.iter().sum();
            if m > 0.0 {
                rows.extend(row.iter().map(|&p| p / m));
            } else {
                unused.push(r);
                rows.extend(std::iter::repeat(1.0 / c as f64).take(c));
            }
        }
        let k = Kernel {
            input: self.rows.clone(),
            output: self.cols.clone(),
            rows,
        };
        (k, unused)
    }

    /// `P(row | col)` as a kernel from the column alphabet to the row alphabet.
    pub fn row_given_col(&self) -> (Kernel, Vec<usize>) {
        self.transpose().col_given_row()
    }

    /// Whether the joint equals the product of its marginals within `tol`.
    pub fn is_product(&self, tol: f64) -> bool {
        let pr = self.row_marginal_probs();
        let pc = self.col_marginal_probs();
        (0..self.n_rows())
            .all(|r| (0..self.n_cols()).all(|c| (self.get(r, c) - pr[r] * pc[c]).abs() <= tol))
    }
}

/// Conditional distribution: one pmf over the output alphabet per input symbol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "KernelRepr", into = "KernelRepr")]
pub struct Kernel {
    input: Alphabet,
    output: Alphabet,
    rows: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct KernelRepr {
    #[serde(default)]
    input_alphabet: Option<Alphabet>,
    #[serde(default)]
    output_alphabet: Option<Alphabet>,
    rows: Vec<Vec<f64>>,
}

impl TryFrom<KernelRepr> for Kernel {
    type Error = Error;
    fn try_from(r: KernelRepr) -> Result<Self> {
        let input = alphabet_or_size(r.input_alphabet, r.rows.len())?;
        let output = alphabet_or_size(r.output_alphabet, r.rows.first().map_or(0, Vec::len))?;
        if r.rows.len() != input.size() || r.rows.iter().any(|row| row.len() != output.size())
        {
            return Err(Error::InvalidDistribution(
                "kernel matrix shape does not match alphabets".into(),
            ));
        }
        Kernel::new(input, output, r.rows.concat())
    }
}

impl From<Kernel> for KernelRepr {
    fn from(k: Kernel) -> Self {
        let rows = k.rows.chunks(k.output.size()).map(<[f64]>::to_vec).collect();
        KernelRepr {
            input_alphabet: Some(k.input),
            output_alphabet: Some(k.output),
            rows,
        }
    }
}

impl Kernel {
    pub fn new(input: Alphabet, output: Alphabet, rows: Vec<f64>) -> Result<Self> {
        if rows.len() != input.size() * output.size() {
            return Err(Error::InvalidDistribution(format!(
                "{} entries for a {}x{} kernel",
                rows.len(),
                input.size(),
                output.size()
            )));
        }
        for (i, row) in rows.chunks(output.size()).enumerate() {
            check_probs(row, &format!("kernel row {i}"))?;
        }
        Ok(Kernel {
            input,
            output,
            rows,
        })
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::InvalidDistribution("ragged kernel matrix".into()));
        }
        Kernel::new(Alphabet::new(r)?, Alphabet::new(c)?, rows.concat())
    }

    pub fn identity(size: usize) -> Result<Self> {
        let mut rows = vec![0.0; size * size];
        for i in 0..size {
            rows[i * size + i] = 1.0;
        }
        Kernel::new(Alphabet::new(size)?, Alphabet::new(size)?, rows)
    }

    /// Every input maps to the same output distribution.
    pub fn constant(input_size: usize, out: &Pmf) -> Result<Self> {
        Kernel::new(
            Alphabet::new(input_size)?,
            out.alphabet().clone(),
            out.probs().repeat(input_size),
        )
    }

    /// Binary symmetric channel with crossover probability `p`.
    pub fn bsc(p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidParameter(format!("crossover {p}")));
        }
        Kernel::from_rows(vec![vec![1.0 - p, p], vec![p, 1.0 - p]])
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.input
    }

    pub fn output_alphabet(&self) -> &Alphabet {
        &self.output
    }

    pub fn input_size(&self) -> usize {
        self.input.size()
    }

    pub fn output_size(&self) -> usize {
        self.output.size()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.output.size();
        &self.rows[i * c..(i + 1) * c]
    }

    pub fn get(&self, i: usize, o: usize) -> f64 {
        self.rows[i * self.output.size() + o]
    }

    pub fn row_pmf(&self, i: usize) -> Pmf {
        Pmf {
            alphabet: self.output.clone(),
            probs: self.row(i).to_vec(),
        }
    }

    /// Output marginal when the input is distributed as `p`.
    pub fn push_forward(&self, p: &Pmf) -> Result<Pmf> {
        Ok(JointPmf::from_marginal_and_kernel(p, self)?.col_marginal())
    }
}

/// Information density `log2 P(r,c) / (P(r) P(c))` for every cell.
#[derive(Debug, Clone, PartialEq)]
pub struct InfoDensityTable {
    joint: JointPmf,
    values: Vec<f64>,
    defined: Vec<bool>,
}

impl InfoDensityTable {
    pub fn joint(&self) -> &JointPmf {
        &self.joint
    }

    /// `-inf` where the joint cell is zero.
    pub fn value(&self, r: usize, c: usize) -> f64 {
        self.values[r * self.joint.n_cols() + c]
    }

    pub fn is_defined(&self, r: usize, c: usize) -> bool {
        self.defined[r * self.joint.n_cols() + c]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn defined_mask(&self) -> &[bool] {
        &self.defined
    }

    /// Expectation of the density under its own joint.
    pub fn mean(&self) -> f64 {
        self.joint
            .probs()
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| **p > 0.0)
            .map(|(p, v)| p * v)
            .sum()
    }
}

pub fn entropy(p: &Pmf) -> f64 {
    -p.probs()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// Binary entropy function in bits.
pub fn binary_entropy(p: f64) -> f64 {
    let q = 1.0 - p;
    let mut h = 0.0;
    if p > 0.0 {
        h -= p * p.log2();
    }
    if q > 0.0 {
        h -= q * q.log2();
    }
    h
}

/// Relative entropy `D(p ‖ q)` in bits; `+inf` when `p` is not absolutely
/// continuous with respect to `q`.
pub fn kl(p: &Pmf, q: &Pmf) -> Result<f64> {
    if !p.alphabet().compatible(q.alphabet()) {
        return Err(Error::AlphabetMismatch(format!(
            "kl between alphabets of size {} and {}",
            p.len(),
            q.len()
        )));
    }
    Ok(kl_slices(p.probs(), q.probs()))
}

pub(crate) fn kl_slices(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(&a, &b)| plogpq(a, b)).sum()
}

pub fn mutual_information(j: &JointPmf) -> f64 {
    let pr = j.row_marginal_probs();
    let pc = j.col_marginal_probs();
    let mut acc = 0.0;
    for (r, &a) in pr.iter().enumerate() {
        for (c, &b) in pc.iter().enumerate() {
            acc += plogpq(j.get(r, c), a * b);
        }
    }
    acc.max(0.0)
}

pub fn information_density(j: &JointPmf) -> InfoDensityTable {
    let pr = j.row_marginal_probs();
    let pc = j.col_marginal_probs();
    let mut values = Vec::with_capacity(j.probs().len());
    let mut defined = Vec::with_capacity(j.probs().len());
    for (r, &a) in pr.iter().enumerate() {
        for (c, &b) in pc.iter().enumerate() {
            let p = j.get(r, c);
            if p > 0.0 {
                values.push((p / (a * b)).log2());
                defined.push(true);
            } else {
                values.push(f64::NEG_INFINITY);
                defined.push(false);
            }
        }
    }
    InfoDensityTable {
        joint: j.clone(),
        values,
        defined,
    }
}

/// For a Markov chain `X → Y → U` with `P(u|y) = k`, returns the `(X, U)` and
/// `(Y, U)` joints.
pub fn compose_markov(p_xy: &JointPmf, k_u_given_y: &Kernel) -> Result<(JointPmf, JointPmf)> {
    if !p_xy.col_alphabet().compatible(k_u_given_y.input_alphabet()) {
        return Err(Error::AlphabetMismatch(format!(
            "kernel input size {} differs from |Y| = {}",
            k_u_given_y.input_size(),
            p_xy.n_cols()
        )));
    }
    let us = k_u_given_y.output_size();
    let mut xu = vec![0.0; p_xy.n_rows() * us];
    for x in 0..p_xy.n_rows() {
        for (y, &pxy) in p_xy.row(x).iter().enumerate() {
            if pxy == 0.0 {
                continue;
            }
            for (u, &k) in k_u_given_y.row(y).iter().enumerate() {
                xu[x * us + u] += pxy * k;
            }
        }
    }
    let p_y = p_xy.col_marginal();
    let yu = JointPmf::from_marginal_and_kernel(&p_y, k_u_given_y)?;
    let xu = JointPmf::new(
        p_xy.row_alphabet().clone(),
        k_u_given_y.output_alphabet().clone(),
        xu,
    )?;
    Ok((xu, yu))
}

pub fn empirical_pmf(seq: &[usize], a: &Alphabet) -> Result<Pmf> {
    if seq.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut counts = vec![0usize; a.size()];
    for &s in seq {
        a.check_symbol(s)?;
        counts[s] += 1;
    }
    let n = seq.len() as f64;
    let probs: Vec<f64> = counts.iter().map(|&c| c as f64 / n).collect();
    // counts/n can drift by a few ulps; that is far inside the tolerance.
    Pmf::new(a.clone(), probs)
}

/// Symbol counts of a sequence over an alphabet of `size` symbols.
pub fn type_counts(seq: &[usize], size: usize) -> Vec<u32> {
    let mut c = vec![0u32; size];
    for &s in seq {
        c[s] += 1;
    }
    c
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dsbs(p: f64) -> JointPmf {
        JointPmf::from_rows(vec![
            vec![(1.0 - p) / 2.0, p / 2.0],
            vec![p / 2.0, (1.0 - p) / 2.0],
        ])
        .unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(entropy(&Pmf::uniform(2).unwrap()), 1.0);
        assert_eq!(entropy(&Pmf::point_mass(3, 1).unwrap()), 0.0);
        // -0.11 log2 0.11 - 0.89 log2 0.89
        assert!((entropy(&Pmf::bernoulli(0.11).unwrap()) - 0.499_915_958).abs() < 1e-8);
    }

    #[test]
    fn kl_examples() {
        let p = Pmf::bernoulli(0.3).unwrap();
        assert_eq!(kl(&p, &p).unwrap(), 0.0);
        let one = Pmf::bernoulli(1.0).unwrap();
        let half = Pmf::bernoulli(0.5).unwrap();
        assert_eq!(kl(&one, &half).unwrap(), 1.0);
        // 0.4 * log2(7/3)
        let v = kl(&p, &Pmf::bernoulli(0.7).unwrap()).unwrap();
        assert!((v - 0.488_956_969).abs() < 1e-8, "{v}");
        assert_eq!(kl(&half, &one).unwrap(), f64::INFINITY);
        assert!(kl(&half, &Pmf::uniform(3).unwrap()).is_err());
    }

    #[test]
    fn mutual_information_examples() {
        let prod = JointPmf::product(
            &Pmf::bernoulli(0.3).unwrap(),
            &Pmf::from_probs(vec![0.2, 0.5, 0.3]).unwrap(),
        )
        .unwrap();
        assert!(mutual_information(&prod).abs() < 1e-15);
        assert!(prod.is_product(1e-15));
        let copy = JointPmf::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        assert_eq!(mutual_information(&copy), 1.0);
        let bsc = dsbs(0.1);
        assert!((mutual_information(&bsc) - (1.0 - binary_entropy(0.1))).abs() < 1e-14);
        assert!((mutual_information(&bsc) - 0.531_004_406).abs() < 1e-8);
    }

    #[test]
    fn information_density_examples() {
        let t = information_density(&dsbs(0.1));
        assert!((t.value(0, 0) - 1.8f64.log2()).abs() < 1e-15);
        assert!((t.value(0, 0) - 0.847_996_907).abs() < 1e-8);
        assert!((t.mean() - mutual_information(&dsbs(0.1))).abs() < 1e-14);
        let z = JointPmf::from_rows(vec![vec![0.5, 0.0], vec![0.25, 0.25]]).unwrap();
        let t = information_density(&z);
        assert!(!t.is_defined(0, 1));
        assert!(t.is_defined(1, 1));
        let ind = JointPmf::product(&Pmf::uniform(2).unwrap(), &Pmf::uniform(2).unwrap()).unwrap();
        assert!(information_density(&ind).values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn compose_markov_examples() {
        let j = dsbs(0.1);
        let (xu, _) = compose_markov(&j, &Kernel::identity(2).unwrap()).unwrap();
        assert_eq!(xu, j);
        let (xu, _) =
            compose_markov(&j, &Kernel::constant(2, &Pmf::bernoulli(0.3).unwrap()).unwrap()).unwrap();
        assert!(xu.is_product(1e-15));
        let (xu, yu) = compose_markov(&j, &Kernel::bsc(0.2).unwrap()).unwrap();
        assert!((mutual_information(&xu) - (1.0 - binary_entropy(0.26))).abs() < 1e-12);
        assert!((mutual_information(&xu) - 0.173_254).abs() < 1e-5);
        assert!((mutual_information(&yu) - (1.0 - binary_entropy(0.2))).abs() < 1e-12);
        assert!(compose_markov(&j, &Kernel::identity(3).unwrap()).is_err());
    }

    #[test]
    fn empirical_examples() {
        let a = Alphabet::new(2).unwrap();
        assert_eq!(empirical_pmf(&[0, 1, 1, 0], &a).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(empirical_pmf(&[0, 0, 0], &a).unwrap().probs(), &[1.0, 0.0]);
        assert!(matches!(empirical_pmf(&[], &a), Err(Error::EmptySequence)));
        assert!(empirical_pmf(&[2], &a).is_err());
    }

    #[test]
    fn empirical_concentrates() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let seq: Vec<usize> = (0..10_000).map(|_| usize::from(rng.gen::<f64>() < 0.3)).collect();
        let e = empirical_pmf(&seq, &Alphabet::new(2).unwrap()).unwrap();
        assert!((e.get(1) - 0.3).abs() < 0.02);
    }

    #[test]
    fn construction_rejects_drift() {
        assert!(Pmf::from_probs(vec![0.5, 0.5 + 1e-9]).is_err());
        assert!(Pmf::from_probs(vec![1.5, -0.5]).is_err());
        assert!(Kernel::from_rows(vec![vec![0.5, 0.6], vec![1.0, 0.0]]).is_err());
        assert!(Alphabet::labeled(["a", "a"]).is_err());
        assert!(Alphabet::new(0).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let p = Pmf::new(Alphabet::labeled(["lo", "hi"]).unwrap(), vec![0.25, 0.75]).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert_eq!(s, r#"{"alphabet":["lo","hi"],"probs":[0.25,0.75]}"#);
        assert_eq!(serde_json::from_str::<Pmf>(&s).unwrap(), p);
        let j = dsbs(0.1);
        let back: JointPmf = serde_json::from_str(&serde_json::to_string(&j).unwrap()).unwrap();
        assert_eq!(back, j);
        let k = Kernel::bsc(0.2).unwrap();
        let s = serde_json::to_string(&k).unwrap();
        assert!(s.contains(r#""rows":[[0.8,0.2],[0.2,0.8]]"#));
        assert_eq!(serde_json::from_str::<Kernel>(&s).unwrap(), k);
        assert!(serde_json::from_str::<Pmf>(r#"{"alphabet":2,"probs":[0.5,0.6]}"#).is_err());
    }
}

//! Block machinery shared by the lossy and relay schemes: exact excess
//! distortion probabilities, the typical set and the ε split, and exact
//! expectations by enumeration of types.

use std::collections::HashMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ibrd::distortion::DistortionMeasure;
use crate::prob::{type_counts, JointPmf, Pmf};

/// Grid used when distortion values have no small common denominator.
pub const FINE_GRID: f64 = 1e-9;
const MAX_DENOMINATOR: i64 = 10_000;
const DENSE_LIMIT: i64 = 2_000_000;

/// Smallest `1/q`, `q <= 10^4`, on which every value is an integer (up to
/// `1e-9` relative), or [`FINE_GRID`].
pub fn quantization_step(values: impl IntoIterator<Item = f64> + Clone) -> f64 {
    'outer: for q in 1..=MAX_DENOMINATOR {
        for v in values.clone() {
            let s = v * q as f64;
            if (s - s.round()).abs() > 1e-9 * s.abs().max(1.0) {
                continue 'outer;
            }
        }
        return 1.0 / q as f64;
    }
    FINE_GRID
}

/// Finite sub-probability law on integer grid points, sorted by value.
#[derive(Debug, Clone, PartialEq)]
struct GridLaw {
    atoms: Vec<(i64, f64)>,
}

impl GridLaw {
    fn unit() -> Self {
        GridLaw { atoms: vec![(0, 1.0)] }
    }

    fn convolve(&self, other: &GridLaw) -> GridLaw {
        if self.atoms.is_empty() || other.atoms.is_empty() {
            return GridLaw { atoms: Vec::new() };
        }
        let lo = self.atoms[0].0 + other.atoms[0].0;
        let hi = self.atoms.last().unwrap().0 + other.atoms.last().unwrap().0;
        let span = hi - lo;
        if span <= DENSE_LIMIT {
            let mut dense = vec![0.0; span as usize + 1];
            for &(a, p) in &self.atoms {
                for &(b, q) in &other.atoms {
                    dense[(a + b - lo) as usize] += p * q;
                }
            }
            let atoms = dense
                .into_iter()
                .enumerate()
                .filter(|(_, p)| *p > 0.0)
                .map(|(i, p)| (lo + i as i64, p))
                .collect();
            GridLaw { atoms }
        } else {
            let mut map: HashMap<i64, f64> = HashMap::with_capacity(self.atoms.len() * other.atoms.len());
            for &(a, p) in &self.atoms {
                for &(b, q) in &other.atoms {
                    *map.entry(a + b).or_insert(0.0) += p * q;
                }
            }
            let mut atoms: Vec<(i64, f64)> = map.into_iter().filter(|(_, p)| *p > 0.0).collect();
            atoms.sort_unstable_by_key(|a| a.0);
            GridLaw { atoms }
        }
    }

    fn power(&self, mut c: u32) -> GridLaw {
        if self.atoms.len() == 2 && c > 1 {
            return self.binomial_power(c);
        }
        let mut acc = GridLaw::unit();
        let mut base = self.clone();
        while c > 0 {
            if c & 1 == 1 {
                acc = acc.convolve(&base);
            }
            c >>= 1;
            if c > 0 {
                base = base.convolve(&base);
            }
        }
        acc
    }

    /// `c`-fold power of a two-atom law in closed form.
    fn binomial_power(&self, c: u32) -> GridLaw {
        let (a0, p0) = self.atoms[0];
        let (a1, p1) = self.atoms[1];
        let (l0, l1) = (p0.log2(), p1.log2());
        let lf = log2_factorials(c as usize);
        let atoms = (0..=c)
            .map(|k| {
                let w = lf[c as usize] - lf[k as usize] - lf[(c - k) as usize] + (c - k) as f64 * l0 + k as f64 * l1;
                ((c - k) as i64 * a0 + k as i64 * a1, w.exp2())
            })
            .filter(|a| a.1 > 0.0)
            .collect();
        GridLaw { atoms }
    }

    fn mass(&self) -> f64 {
        self.atoms.iter().map(|a| a.1).sum()
    }
}

/// `φ(yⁿ, zⁿ, D) = P(Σ d(X_i, z_i) > nD | Yⁿ = yⁿ)` for a fixed blocklength,
/// evaluated exactly on a quantization grid and memoized by joint type.
#[derive(Debug)]
pub struct PhiEvaluator {
    nx: usize,
    ny: usize,
    nz: usize,
    n: usize,
    /// `P(x | y)`, y-major
    post: Vec<f64>,
    /// per-letter laws of the quantized distortion, index `y * nz + z`
    letters: Vec<GridLaw>,
    quant: Vec<i64>,
    masked: Vec<bool>,
    step: f64,
    threshold: i64,
    level: f64,
    cache: Mutex<HashMap<Vec<u32>, f64>>,
}

impl PhiEvaluator {
    /// `level` is the per-letter distortion level `D`; the block threshold is
    /// `n·D`.
    pub fn new(p_xy: &JointPmf, d: &DistortionMeasure, level: f64, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter("blocklength must be positive".into()));
        }
        if !p_xy.row_alphabet().compatible(d.x_alphabet()) {
            return Err(Error::AlphabetMismatch("distortion and joint disagree on |X|".into()));
        }
        if !level.is_finite() {
            return Err(Error::InvalidParameter(format!("distortion level {level}")));
        }
        let (nx, ny, nz) = (p_xy.n_rows(), p_xy.n_cols(), d.z_size());
        let (post_k, _) = p_xy.row_given_col();
        let post: Vec<f64> = (0..ny).flat_map(|y| post_k.row(y).to_vec()).collect();
        let finite: Vec<f64> = (0..nx * nz)
            .filter(|&i| !d.infinite_mask()[i])
            .map(|i| d.raw_values()[i])
            .collect();
        let step = quantization_step(finite.iter().copied());
        let quant: Vec<i64> = d.raw_values().iter().map(|v| (v / step).round() as i64).collect();
        let masked = d.infinite_mask().to_vec();
        let mut letters = Vec::with_capacity(ny * nz);
        for y in 0..ny {
            for z in 0..nz {
                let mut atoms: Vec<(i64, f64)> = Vec::new();
                for x in 0..nx {
                    let p = post[y * nx + x];
                    if p > 0.0 && !masked[x * nz + z] {
                        atoms.push((quant[x * nz + z], p));
                    }
                }
                atoms.sort_unstable_by_key(|a| a.0);
                atoms.dedup_by(|b, a| {
                    if a.0 == b.0 {
                        a.1 += b.1;
                        true
                    } else {
                        false
                    }
                });
                letters.push(GridLaw { atoms });
            }
        }
        let raw = n as f64 * level / step;
        let snapped = if (raw - raw.round()).abs() < 1e-6 { raw.round() } else { raw.floor() };
        Ok(PhiEvaluator {
            nx,
            ny,
            nz,
            n,
            post,
            letters,
            quant,
            masked,
            step,
            threshold: snapped as i64,
            level,
            cache: Mutex::new(HashMap::new()),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn level(&self) -> f64 {
        self.level
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn y_size(&self) -> usize {
        self.ny
    }

    pub fn z_size(&self) -> usize {
        self.nz
    }

    /// Joint type of `(yⁿ, zⁿ)`, index `y * |Z| + z`.
    pub fn joint_counts(&self, y: &[usize], z: &[usize]) -> Vec<u32> {
        let mut c = vec![0u32; self.ny * self.nz];
        for (&a, &b) in y.iter().zip(z) {
            c[a * self.nz + b] += 1;
        }
        c
    }

    pub fn phi(&self, y: &[usize], z: &[usize]) -> f64 {
        self.phi_counts(&self.joint_counts(y, z))
    }

    /// `φ` for a joint type.
    pub fn phi_counts(&self, counts: &[u32]) -> f64 {
        if let Some(&v) = self.cache.lock().expect("phi cache").get(counts) {
            return v;
        }
        // cells sharing a letter law are merged before taking powers
        let mut groups: Vec<(&GridLaw, u32)> = Vec::new();
        for (cell, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let l = &self.letters[cell];
            match groups.iter_mut().find(|g| g.0 == l) {
                Some(g) => g.1 += c,
                None => groups.push((l, c)),
            }
        }
        let mut laws: Vec<GridLaw> = groups.iter().map(|(l, c)| l.power(*c)).collect();
        laws.sort_by_key(|l| l.atoms.len());
        let last = laws.pop().unwrap_or_else(GridLaw::unit);
        let rest = laws.iter().fold(GridLaw::unit(), |acc, l| acc.convolve(l));
        // P(R + S > t) = Σ_r P(R = r) P(S > t - r), with S the widest law
        let mut suffix = vec![0.0; last.atoms.len() + 1];
        for i in (0..last.atoms.len()).rev() {
            suffix[i] = suffix[i + 1] + last.atoms[i].1;
        }
        let above: f64 = rest
            .atoms
            .iter()
            .map(|&(r, p)| p * suffix[last.atoms.partition_point(|a| a.0 <= self.threshold - r)])
            .sum();
        let finite = rest.mass() * suffix[0];
        let v = (above + (1.0 - finite)).clamp(0.0, 1.0);
        self.cache.lock().expect("phi cache").insert(counts.to_vec(), v);
        v
    }

    /// Whether the realized distortion exceeds `n·D` on the same grid.
    pub fn exceeds(&self, x: &[usize], z: &[usize]) -> bool {
        let mut s = 0i64;
        for (&a, &b) in x.iter().zip(z) {
            let i = a * self.nz + b;
            if self.masked[i] {
                return true;
            }
            s += self.quant[i];
        }
        s > self.threshold
    }

    /// `Σ d(x_i, z_i)` in original units (`+inf` on masked cells).
    pub fn total(&self, x: &[usize], z: &[usize]) -> f64 {
        x.iter()
            .zip(z)
            .map(|(&a, &b)| {
                let i = a * self.nz + b;
                if self.masked[i] {
                    f64::INFINITY
                } else {
                    self.quant[i] as f64 * self.step
                }
            })
            .sum()
    }

    pub fn posterior(&self, y: usize) -> &[f64] {
        &self.post[y * self.nx..(y + 1) * self.nx]
    }

    pub fn cached_types(&self) -> usize {
        self.cache.lock().expect("phi cache").len()
    }
}

/// Exact excess probability of a single pair of sequences at level `big_d`.
pub fn phi_excess(y: &[usize], z: &[usize], big_d: f64, p_xy: &JointPmf, d: &DistortionMeasure) -> Result<f64> {
    if y.is_empty() || y.len() != z.len() {
        return Err(Error::InvalidParameter("sequences must be nonempty and of equal length".into()));
    }
    for &s in y {
        if s >= p_xy.n_cols() {
            return Err(Error::SymbolOutOfRange { symbol: s, size: p_xy.n_cols() });
        }
    }
    for &s in z {
        if s >= d.z_size() {
            return Err(Error::SymbolOutOfRange { symbol: s, size: d.z_size() });
        }
    }
    Ok(PhiEvaluator::new(p_xy, d, big_d, y.len())?.phi(y, z))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockParams {
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
}

impl BlockParams {
    pub fn total(&self) -> f64 {
        (self.eps1 + self.eps2) + self.eps3
    }
}

/// `ε₁ = 1/(2√n)`, `ε₂ = (2|Y|+1)/√n`, `ε₃ = ε - ε₁ - ε₂`.
pub fn block_params(n: usize, y_size: usize, eps: f64) -> Result<BlockParams> {
    if n == 0 {
        return Err(Error::InvalidParameter("blocklength must be positive".into()));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must lie in (0, 1)")));
    }
    let r = (n as f64).sqrt();
    let eps1 = 0.5 / r;
    let eps2 = (2 * y_size + 1) as f64 / r;
    let eps3 = eps - (eps1 + eps2);
    if eps3 < 0.0 {
        return Err(Error::Infeasible(format!(
            "n = {n} is below the smallest blocklength for eps = {eps} (eps1 + eps2 = {})",
            eps1 + eps2
        )));
    }
    Ok(BlockParams { eps1, eps2, eps3 })
}

/// Smallest `n` for which [`block_params`] succeeds.
pub fn min_blocklength(y_size: usize, eps: f64) -> usize {
    let c = 0.5 + (2 * y_size + 1) as f64;
    let mut n = ((c / eps).powi(2).floor() as usize).max(1);
    while block_params(n, y_size, eps).is_err() {
        n += 1;
    }
    while n > 1 && block_params(n - 1, y_size, eps).is_ok() {
        n -= 1;
    }
    n
}

/// `‖P̂ - P_Y‖² <= |Y|·log2(n)/n` for a type with `n = Σ counts`.
pub fn is_typical_counts(counts: &[u32], p_y: &[f64]) -> bool {
    let n: u32 = counts.iter().sum();
    if n == 0 {
        return false;
    }
    let nf = f64::from(n);
    let dist: f64 = counts.iter().zip(p_y).map(|(&c, p)| (f64::from(c) / nf - p).powi(2)).sum();
    dist <= p_y.len() as f64 * nf.log2() / nf
}

pub fn is_typical(y: &[usize], p_y: &Pmf) -> bool {
    is_typical_counts(&type_counts(y, p_y.len()), p_y.probs())
}

/// `log2 k!` for `k = 0..=n`.
pub fn log2_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..=n {
        acc += (k as f64).log2();
        out.push(acc);
    }
    out
}

/// All ways of writing `n` as an ordered sum of `parts` nonnegative integers.
pub fn compositions(n: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for v in 0..=left {
            cur.push(v);
            rec(left - v, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(n, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// `log2` of the multinomial coefficient times `Π p_i^{k_i}` (`-inf` if a
/// zero-probability symbol is used).
pub fn log2_type_prob(counts: &[u32], log2_p: &[f64], lf: &[f64]) -> f64 {
    let n: u32 = counts.iter().sum();
    let mut v = lf[n as usize];
    for (&k, &lp) in counts.iter().zip(log2_p) {
        if k > 0 {
            if lp == f64::NEG_INFINITY {
                return f64::NEG_INFINITY;
            }
            v += k as f64 * lp - lf[k as usize];
        }
    }
    v
}

/// `log2(2^a + 2^b)`.
pub fn log2_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a > b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp2().ln_1p() / std::f64::consts::LN_2
}

/// Types of `Yⁿ` with their probabilities (linear scale).
pub fn y_types(n: usize, p_y: &[f64]) -> Vec<(Vec<u32>, f64)> {
    let lf = log2_factorials(n);
    let lp: Vec<f64> = p_y.iter().map(|p| p.log2()).collect();
    compositions(n as u32, p_y.len())
        .into_iter()
        .map(|c| {
            let w = log2_type_prob(&c, &lp, &lf).exp2();
            (c, w)
        })
        .filter(|(_, w)| *w > 0.0)
        .collect()
}

/// One conditional `z`-split of a `y`-type: its joint type, `φ` and the
/// `log2` reference probability of the set of `zⁿ` with that joint type.
#[derive(Debug, Clone)]
pub struct Split {
    pub joint: Vec<u32>,
    pub phi: f64,
    pub log2_mass: f64,
}

/// Every `z`-split of the `y`-type `y_counts` under the product reference.
pub fn splits(phi: &PhiEvaluator, y_counts: &[u32], reference: &Pmf) -> Vec<Split> {
    let nz = phi.z_size();
    let n: u32 = y_counts.iter().sum();
    let lf = log2_factorials(n as usize);
    let lr: Vec<f64> = reference.probs().iter().map(|p| p.log2()).collect();
    let per_y: Vec<Vec<(Vec<u32>, f64)>> = y_counts
        .iter()
        .map(|&c| {
            compositions(c, nz)
                .into_iter()
                .map(|k| {
                    let w = log2_type_prob(&k, &lr, &lf);
                    (k, w)
                })
                .filter(|(_, w)| *w > f64::NEG_INFINITY)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    let mut idx = vec![0usize; per_y.len()];
    if per_y.iter().any(Vec::is_empty) {
        return out;
    }
    loop {
        let mut joint = Vec::with_capacity(y_counts.len() * nz);
        let mut lm = 0.0;
        for (y, &i) in idx.iter().enumerate() {
            joint.extend_from_slice(&per_y[y][i].0);
            lm += per_y[y][i].1;
        }
        let v = phi.phi_counts(&joint);
        out.push(Split { joint, phi: v, log2_mass: lm });
        // odometer
        let mut pos = 0;
        loop {
            if pos == idx.len() {
                return out;
            }
            idx[pos] += 1;
            if idx[pos] < per_y[pos].len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

/// `ψ(yⁿ) = -log2 P_Z̄ⁿ(φ(yⁿ, Z̄ⁿ, D) <= t)` for a `y`-type.
pub fn psi_for_type(phi: &PhiEvaluator, y_counts: &[u32], reference: &Pmf, t: f64) -> f64 {
    let lm = splits(phi, y_counts, reference)
        .iter()
        .filter(|s| s.phi <= t)
        .fold(f64::NEG_INFINITY, |a, s| log2_add(a, s.log2_mass));
    if lm == f64::NEG_INFINITY {
        f64::INFINITY
    } else {
        (-lm).max(0.0)
    }
}

/// Number of joint types visited by [`splits`] for one `y`-type.
pub fn split_count(y_counts: &[u32], nz: usize) -> f64 {
    y_counts
        .iter()
        .map(|&c| {
            // C(c + nz - 1, nz - 1)
            (1..nz).fold(1.0, |acc, j| acc * (c as f64 + j as f64) / j as f64)
        })
        .product()
}

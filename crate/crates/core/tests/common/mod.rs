//! Independent oracles shared by the integration tests.

#![allow(dead_code)]

use ibrelay::prob::{JointPmf, Kernel, Pmf};

pub fn h2(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        0.0
    } else {
        -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
    }
}

/// Binary convolution `a * b = a(1-b) + b(1-a)`.
pub fn conv(a: f64, b: f64) -> f64 {
    a * (1.0 - b) + b * (1.0 - a)
}

pub fn dsbs(p: f64) -> JointPmf {
    JointPmf::from_rows(vec![vec![0.5 * (1.0 - p), 0.5 * p], vec![0.5 * p, 0.5 * (1.0 - p)]]).unwrap()
}

pub fn bsc(p: f64) -> Kernel {
    Kernel::from_rows(vec![vec![1.0 - p, p], vec![p, 1.0 - p]]).unwrap()
}

pub fn uniform2() -> Pmf {
    Pmf::from_probs(vec![0.5, 0.5]).unwrap()
}

/// Crossover `q` of the test channel `U = Y ⊕ Bern(q)` reaching
/// `I(X;U) = 1 - h(p * q) = c`, by bisection, with the value `1 - h(q)`.
pub fn mrs_gerber(p: f64, c: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (0.0f64, 0.5f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if 1.0 - h2(conv(p, mid)) > c {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let q = 0.5 * (lo + hi);
    (q, 1.0 - h2(q))
}

/// Upper end of a Monte-Carlo allowance for a frequency whose true value
/// should not exceed `bound`.
pub fn three_sigma_above(bound: f64, trials: u64) -> f64 {
    let b = bound.clamp(0.0, 1.0);
    b + 3.0 * (b * (1.0 - b) / trials as f64).sqrt()
}

/// Pearson statistic of `counts` against `probs` (cells with zero
/// probability must have zero count).
pub fn chi_square(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p == 0.0 {
            assert_eq!(c, 0, "selected a symbol of probability zero");
            continue;
        }
        let e = p * total as f64;
        stat += (c as f64 - e).powi(2) / e;
        cells += 1;
    }
    (stat, cells.saturating_sub(1))
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let v = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (m, v.sqrt())
}

/// `D(p‖q)` in bits by direct summation.
pub fn kl_bits(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).filter(|(a, _)| **a > 0.0).map(|(a, b)| a * (a / b).log2()).sum()
}

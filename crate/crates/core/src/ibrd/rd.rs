//! Noisy rate-distortion `R(D) = min { I(Y;Z) : E[d(X,Z)] <= D }` with
//! `X → Y → Z`, reduced to a standard problem on `(Y, Z)` with the surrogate
//! distortion `d̄(y,z) = E[d(X,z) | Y=y]` and solved by Blahut–Arimoto.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ibrd::distortion::{surrogate_distortion, DistortionMeasure};
use crate::prob::{compose_markov, mutual_information, JointPmf, Kernel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RdOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Reconstruction symbols lighter than this are pruned after convergence.
    pub prune_below: f64,
}

impl Default for RdOptions {
    fn default() -> Self {
        RdOptions {
            tol: 1e-13,
            max_iter: 100_000,
            prune_below: 1e-10,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RDSolution {
    pub p_xy: JointPmf,
    pub d: DistortionMeasure,
    /// `d̄` over `(Y, Z)`.
    pub surrogate: DistortionMeasure,
    pub kernel_z_given_y: Kernel,
    pub rate_bits: f64,
    pub distortion_level: f64,
    pub achieved_distortion: f64,
    /// `-R'(D)`: `0` on the zero-rate segment, `+inf` at the smallest
    /// achievable distortion.
    #[serde(with = "crate::serde_f64")]
    pub lambda_star: f64,
    #[serde(with = "crate::serde_f64::pair")]
    pub lambda_bracket: (f64, f64),
    pub converged: bool,
    pub iterations: usize,
}

impl RDSolution {
    pub fn z_marginal(&self) -> Vec<f64> {
        let p_y = self.p_xy.col_marginal_probs();
        let nz = self.kernel_z_given_y.output_size();
        let mut q = vec![0.0; nz];
        for (y, py) in p_y.iter().enumerate() {
            for (z, qz) in q.iter_mut().enumerate() {
                *qz += py * self.kernel_z_given_y.get(y, z);
            }
        }
        q
    }
}

struct BaProblem {
    ny: usize,
    nz: usize,
    p_y: Vec<f64>,
    dbar: Vec<f64>,
    mask: Vec<bool>,
}

struct BaPoint {
    q: Vec<f64>,
    kernel: Vec<f64>,
    distortion: f64,
    iterations: usize,
    converged: bool,
}

impl BaProblem {
    fn kernel_from(&self, lambda: f64, q: &[f64], kernel: &mut [f64]) {
        let nz = self.nz;
        for y in 0..self.ny {
            let row = &mut kernel[y * nz..(y + 1) * nz];
            let mut best = f64::NEG_INFINITY;
            for z in 0..nz {
                let i = y * nz + z;
                row[z] = if q[z] > 0.0 && !self.mask[i] {
                    q[z].log2() - lambda * self.dbar[i]
                } else {
                    f64::NEG_INFINITY
                };
                best = best.max(row[z]);
            }
            if best == f64::NEG_INFINITY {
                // unreachable for used rows once q has full finite support
                row.iter_mut().for_each(|v| *v = 0.0);
                continue;
            }
            let mut s = 0.0;
            for v in row.iter_mut() {
                *v = (*v - best).exp2();
                s += *v;
            }
            row.iter_mut().for_each(|v| *v /= s);
        }
    }

    fn run(&self, lambda: f64, mut q: Vec<f64>, opts: &RdOptions) -> BaPoint {
        let nz = self.nz;
        let mut kernel = vec![0.0; self.ny * nz];
        let mut next = vec![0.0; nz];
        let mut it = 0;
        let mut converged = false;
        let mut pruned = false;
        loop {
            while it < opts.max_iter {
                self.kernel_from(lambda, &q, &mut kernel);
                next.iter_mut().for_each(|v| *v = 0.0);
                for y in 0..self.ny {
                    for z in 0..nz {
                        next[z] += self.p_y[y] * kernel[y * nz + z];
                    }
                }
                let delta = q.iter().zip(&next).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                std::mem::swap(&mut q, &mut next);
                it += 1;
                if delta < opts.tol {
                    converged = true;
                    break;
                }
            }
            if pruned || !q.iter().any(|&v| v > 0.0 && v < opts.prune_below) {
                break;
            }
            q.iter_mut().filter(|v| **v < opts.prune_below).for_each(|v| *v = 0.0);
            let s: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= s);
            pruned = true;
            converged = false;
        }
        self.kernel_from(lambda, &q, &mut kernel);
        let distortion = self.expected(&kernel);
        BaPoint {
            q,
            kernel,
            distortion,
            iterations: it,
            converged,
        }
    }

    fn expected(&self, kernel: &[f64]) -> f64 {
        let mut acc = 0.0;
        for y in 0..self.ny {
            for z in 0..self.nz {
                let w = self.p_y[y] * kernel[y * self.nz + z];
                if w > 0.0 {
                    acc += w * self.dbar[y * self.nz + z];
                }
            }
        }
        acc
    }

    fn full_support(&self) -> Vec<f64> {
        vec![1.0 / self.nz as f64; self.nz]
    }

    fn warm(&self, q: &[f64]) -> Vec<f64> {
        let nz = self.nz as f64;
        q.iter().map(|v| 0.999 * v + 0.001 / nz).collect()
    }
}

pub fn solve_noisy_rd(p_xy: &JointPmf, d: &DistortionMeasure, big_d: f64, z_size: usize) -> Result<RDSolution> {
    solve_noisy_rd_with(p_xy, d, big_d, z_size, &RdOptions::default())
}

pub fn solve_noisy_rd_with(
    p_xy: &JointPmf,
    d: &DistortionMeasure,
    big_d: f64,
    z_size: usize,
    opts: &RdOptions,
) -> Result<RDSolution> {
    if z_size != d.z_size() {
        return Err(Error::InvalidParameter(format!(
            "z_size {z_size} does not match the distortion's |Z| = {}",
            d.z_size()
        )));
    }
    if !big_d.is_finite() {
        return Err(Error::InvalidParameter(format!("distortion level {big_d}")));
    }
    let sur = surrogate_distortion(p_xy, d)?.measure;
    let (ny, nz) = (p_xy.n_cols(), z_size);
    let p_y = p_xy.col_marginal_probs();
    let prob = BaProblem {
        ny,
        nz,
        dbar: sur.raw_values().to_vec(),
        mask: sur.infinite_mask().to_vec(),
        p_y: p_y.clone(),
    };

    // Smallest achievable distortion, and the zero-rate threshold.
    let mut d_min = 0.0;
    let mut argmins = vec![0usize; ny];
    for y in (0..ny).filter(|&y| p_y[y] > 0.0) {
        let (z, v) = (0..nz)
            .map(|z| (z, sur.get(y, z)))
            .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });
        if v == f64::INFINITY {
            return Err(Error::Infeasible(format!("observation {y} has no finite reconstruction")));
        }
        argmins[y] = z;
        d_min += p_y[y] * v;
    }
    let (z0, d_max) = (0..nz)
        .map(|z| {
            let e: f64 = (0..ny).filter(|&y| p_y[y] > 0.0).map(|y| p_y[y] * sur.get(y, z)).sum();
            (z, e)
        })
        .fold((0, f64::INFINITY), |a, b| if b.1 < a.1 { b } else { a });

    let build = |rows: Vec<f64>, lambda: f64, bracket: (f64, f64), converged: bool, iterations: usize| {
        let kernel = Kernel::new(p_xy.col_alphabet().clone(), d.z_alphabet().clone(), rows)?;
        let (_, yz) = compose_markov(p_xy, &kernel)?;
        let achieved = prob.expected(&(0..ny).flat_map(|y| kernel.row(y).to_vec()).collect::<Vec<_>>());
        Ok::<_, Error>(RDSolution {
            p_xy: p_xy.clone(),
            d: d.clone(),
            surrogate: sur.clone(),
            rate_bits: mutual_information(&yz),
            kernel_z_given_y: kernel,
            distortion_level: big_d,
            achieved_distortion: achieved,
            lambda_star: lambda,
            lambda_bracket: bracket,
            converged,
            iterations,
        })
    };
    let deterministic = |pick: &dyn Fn(usize) -> usize| {
        let mut rows = vec![0.0; ny * nz];
        for y in 0..ny {
            rows[y * nz + pick(y)] = 1.0;
        }
        rows
    };

    if big_d >= d_max {
        return build(deterministic(&|_| z0), 0.0, (0.0, 0.0), true, 0);
    }
    let slack = 1e-12 * (1.0 + d_min.abs());
    if big_d < d_min - slack {
        return Err(Error::Infeasible(format!(
            "distortion level {big_d} is below the smallest achievable {d_min}"
        )));
    }
    if big_d <= d_min + slack {
        return build(
            deterministic(&|y| argmins[y]),
            f64::INFINITY,
            (f64::INFINITY, f64::INFINITY),
            true,
            0,
        );
    }

    // Distortion decreases in λ; find the smallest λ meeting the level.
    let mut iters = 0;
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut hi_pt = prob.run(hi, prob.full_support(), opts);
    iters += hi_pt.iterations;
    while hi_pt.distortion > big_d {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::Solver(format!(
                "could not reach distortion {big_d} (best {})",
                hi_pt.distortion
            )));
        }
        hi_pt = prob.run(hi, prob.warm(&hi_pt.q), opts);
        iters += hi_pt.iterations;
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi || big_d - hi_pt.distortion < 1e-13 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let pt = prob.run(mid, prob.warm(&hi_pt.q), opts);
        iters += pt.iterations;
        if pt.distortion <= big_d {
            hi = mid;
            hi_pt = pt;
        } else {
            lo = mid;
        }
    }
    let lambda = if big_d - hi_pt.distortion < 1e-13 { hi } else { 0.5 * (lo + hi) };
    let converged = hi_pt.converged;
    build(hi_pt.kernel, lambda, (lo, hi), converged, iters)
}

/// `ȷ(y, D) = ι_{Y;Z*}(y;z) + λ*(d̄(y,z) - D)`, evaluated at every `z` in the
/// support of `P_{Z*}` and required to agree within `1e-6`; the mean is
/// returned.
pub fn tilted_information(rd: &RDSolution, y: usize) -> Result<f64> {
    let ny = rd.kernel_z_given_y.input_size();
    if y >= ny {
        return Err(Error::SymbolOutOfRange { symbol: y, size: ny });
    }
    if !rd.lambda_star.is_finite() {
        return Err(Error::InvalidParameter(
            "tilted information is undefined at the smallest achievable distortion".into(),
        ));
    }
    let q = rd.z_marginal();
    let vals: Vec<f64> = (0..q.len())
        .filter(|&z| q[z] > 1e-9 && !rd.surrogate.is_infinite(y, z))
        .map(|z| {
            let k = rd.kernel_z_given_y.get(y, z);
            (k / q[z]).log2() + rd.lambda_star * (rd.surrogate.get(y, z) - rd.distortion_level)
        })
        .collect();
    if vals.is_empty() {
        return Err(Error::InvalidParameter(format!("no reconstruction symbol reachable from {y}")));
    }
    let (mn, mx) = vals
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    if mx - mn > 1e-6 {
        return Err(Error::NotConstant(mx - mn));
    }
    Ok(vals.iter().sum::<f64>() / vals.len() as f64)
}

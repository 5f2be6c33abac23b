//! Information bottleneck `IB(C) = min { I(Y;U) : I(X;U) >= C }` for a
//! Markov chain `X → Y → U`.
//!
//! For a fixed multiplier `β` the self-consistent equations
//!
//! ```text
//! P(u)       = Σ_y P(y) P(u|y)
//! P(x|u)     = Σ_y P(x,y) P(u|y) / P(u)
//! P(u|y)    ∝ P(u) · 2^(-β · D(P_{X|Y=y} ‖ P_{X|U=u}))
//! ```
//!
//! are iterated to a fixed point that minimizes `I(Y;U) - β I(X;U)`. The outer
//! loop bisects `β` until `I(X;U)` meets the requested `C`; the slope of the
//! curve at that point is `β` itself.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::prob::{compose_markov, mutual_information, Alphabet, JointPmf, Kernel};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IbOptions {
    /// Stop when no kernel entry moves by more than this.
    pub tol: f64,
    pub max_iter: usize,
    /// Extra randomized restarts at the final multiplier, used to break ties
    /// among minimizers.
    pub tie_restarts: usize,
    pub seed: u64,
}

impl Default for IbOptions {
    fn default() -> Self {
        IbOptions {
            tol: 1e-10,
            max_iter: 100_000,
            tie_restarts: 3,
            seed: 0x1b_5eed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IBSolution {
    pub p_xy: JointPmf,
    pub kernel_u_given_y: Kernel,
    pub ib_bits: f64,
    /// Slope `dIB/dC`; `+inf` at the `C = I(X;Y)` endpoint.
    #[serde(with = "crate::serde_f64")]
    pub lambda_star: f64,
    /// Final multiplier bracket; `lambda_star` is its midpoint.
    #[serde(with = "crate::serde_f64::pair")]
    pub lambda_bracket: (f64, f64),
    /// Set when the slope is one-sided (at `C = 0`) or infinite.
    pub lambda_one_sided: bool,
    pub requested_c_bits: f64,
    pub achieved_c_bits: f64,
    pub u_size: usize,
    pub converged: bool,
    pub iterations: usize,
}

impl IBSolution {
    /// Drops unused `U` symbols and merges symbols with identical `P_{X|U}`.
    /// Both mutual informations are preserved at a fixed point.
    pub fn compacted(&self) -> Result<IBSolution> {
        let (ny, nu) = (self.kernel_u_given_y.input_size(), self.u_size);
        let (xu, _) = compose_markov(&self.p_xy, &self.kernel_u_given_y)?;
        let p_u = xu.col_marginal_probs();
        let (x_given_u, _) = xu.row_given_col();
        let mut classes: Vec<usize> = Vec::new();
        let mut map = vec![usize::MAX; nu];
        for u in (0..nu).filter(|&u| p_u[u] > 1e-14) {
            let found = classes.iter().position(|&rep| {
                x_given_u
                    .row(rep)
                    .iter()
                    .zip(x_given_u.row(u))
                    .all(|(a, b)| (a - b).abs() < 1e-9)
            });
            map[u] = match found {
                Some(c) => c,
                None => {
                    classes.push(u);
                    classes.len() - 1
                }
            };
        }
        let m = classes.len().max(1);
        let mut rows = vec![0.0; ny * m];
        for y in 0..ny {
            for u in 0..nu {
                if map[u] != usize::MAX {
                    rows[y * m + map[u]] += self.kernel_u_given_y.get(y, u);
                }
            }
            let s: f64 = rows[y * m..(y + 1) * m].iter().sum();
            if s > 0.0 {
                rows[y * m..(y + 1) * m].iter_mut().for_each(|v| *v /= s);
            } else {
                rows[y * m] = 1.0;
            }
        }
        let kernel = Kernel::new(
            self.kernel_u_given_y.input_alphabet().clone(),
            Alphabet::new(m)?,
            rows,
        )?;
        let (xu, yu) = compose_markov(&self.p_xy, &kernel)?;
        Ok(IBSolution {
            ib_bits: mutual_information(&yu),
            achieved_c_bits: mutual_information(&xu),
            kernel_u_given_y: kernel,
            u_size: m,
            ..self.clone()
        })
    }

    pub fn i_xu(&self) -> f64 {
        self.achieved_c_bits
    }
}

const PRUNE_MASS: f64 = 1e-7;

/// Candidate fixed point at one multiplier.
#[derive(Debug, Clone)]
struct FixedPoint {
    kernel: Vec<f64>,
    i_xu: f64,
    i_yu: f64,
    iterations: usize,
    converged: bool,
}

impl FixedPoint {
    fn lagrangian(&self, beta: f64) -> f64 {
        self.i_yu - beta * self.i_xu
    }
}

/// Precomputed quantities of one `P_{X,Y}` instance.
pub(crate) struct IbProblem {
    nx: usize,
    ny: usize,
    nu: usize,
    p_y: Vec<f64>,
    p_xy: Vec<f64>,
    /// `P(x|y)` stored y-major.
    p_x_given_y: Vec<f64>,
}

impl IbProblem {
    pub(crate) fn new(p_xy: &JointPmf, nu: usize) -> Self {
        let (nx, ny) = (p_xy.n_rows(), p_xy.n_cols());
        let p_y = p_xy.col_marginal_probs();
        let (k, _) = p_xy.row_given_col();
        let mut p_x_given_y = vec![0.0; ny * nx];
        for y in 0..ny {
            p_x_given_y[y * nx..(y + 1) * nx].copy_from_slice(k.row(y));
        }
        IbProblem {
            nx,
            ny,
            nu,
            p_y,
            p_xy: p_xy.probs().to_vec(),
            p_x_given_y,
        }
    }

    fn marginals(&self, q: &[f64], p_u: &mut [f64], p_x_given_u: &mut [f64]) {
        let (nx, ny, nu) = (self.nx, self.ny, self.nu);
        p_u.iter_mut().for_each(|v| *v = 0.0);
        p_x_given_u.iter_mut().for_each(|v| *v = 0.0);
        for y in 0..ny {
            for u in 0..nu {
                let w = q[y * nu + u];
                p_u[u] += self.p_y[y] * w;
                if w > 0.0 {
                    for x in 0..nx {
                        p_x_given_u[u * nx + x] += self.p_xy[x * ny + y] * w;
                    }
                }
            }
        }
        for u in 0..nu {
            if p_u[u] > 0.0 {
                for x in 0..nx {
                    p_x_given_u[u * nx + x] /= p_u[u];
                }
            }
        }
    }

    /// One self-consistent update; returns the largest entry change.
    fn step(&self, beta: f64, q: &[f64], out: &mut [f64], p_u: &mut [f64], pxu: &mut [f64]) -> f64 {
        let (nx, ny, nu) = (self.nx, self.ny, self.nu);
        self.marginals(q, p_u, pxu);
        let mut delta: f64 = 0.0;
        let mut logw = vec![0.0; nu];
        for y in 0..ny {
            let pxy = &self.p_x_given_y[y * nx..(y + 1) * nx];
            let mut best = f64::NEG_INFINITY;
            for u in 0..nu {
                logw[u] = if p_u[u] > 0.0 {
                    let mut d = 0.0;
                    for x in 0..nx {
                        let a = pxy[x];
                        if a > 0.0 {
                            let b = pxu[u * nx + x];
                            d += if b > 0.0 { a * (a / b).log2() } else { f64::INFINITY };
                        }
                    }
                    p_u[u].log2() - beta * d
                } else {
                    f64::NEG_INFINITY
                };
                best = best.max(logw[u]);
            }
            let row = &mut out[y * nu..(y + 1) * nu];
            if best == f64::NEG_INFINITY {
                row.copy_from_slice(&q[y * nu..(y + 1) * nu]);
                continue;
            }
            let mut s = 0.0;
            for u in 0..nu {
                row[u] = (logw[u] - best).exp2();
                s += row[u];
            }
            for u in 0..nu {
                row[u] /= s;
                delta = delta.max((row[u] - q[y * nu + u]).abs());
            }
        }
        delta
    }

    fn informations(&self, q: &[f64]) -> (f64, f64) {
        let (nx, ny, nu) = (self.nx, self.ny, self.nu);
        let mut p_u = vec![0.0; nu];
        let mut pxu = vec![0.0; nu * nx];
        self.marginals(q, &mut p_u, &mut pxu);
        let p_x: Vec<f64> = (0..nx).map(|x| self.p_xy[x * ny..(x + 1) * ny].iter().sum()).collect();
        let mut i_yu = 0.0;
        let mut i_xu = 0.0;
        for u in 0..nu {
            if p_u[u] <= 0.0 {
                continue;
            }
            for y in 0..ny {
                let w = self.p_y[y] * q[y * nu + u];
                if w > 0.0 {
                    i_yu += w * (q[y * nu + u] / p_u[u]).log2();
                }
            }
            for x in 0..nx {
                let w = p_u[u] * pxu[u * nx + x];
                if w > 0.0 {
                    i_xu += w * (pxu[u * nx + x] / p_x[x]).log2();
                }
            }
        }
        (i_xu.max(0.0), i_yu.max(0.0))
    }

    fn iterate(&self, beta: f64, init: Vec<f64>, opts: &IbOptions) -> FixedPoint {
        let nu = self.nu;
        let mut q = init;
        let mut next = vec![0.0; q.len()];
        let mut p_u = vec![0.0; nu];
        let mut pxu = vec![0.0; nu * self.nx];
        let mut converged = false;
        let mut it = 0;
        let mut pruned = false;
        loop {
            while it < opts.max_iter {
                let delta = self.step(beta, &q, &mut next, &mut p_u, &mut pxu);
                std::mem::swap(&mut q, &mut next);
                it += 1;
                if delta < opts.tol {
                    converged = true;
                    break;
                }
            }
            // Columns that are dying out decay only geometrically; cut them
            // once and settle again.
            if pruned || !converged {
                break;
            }
            self.marginals(&q, &mut p_u, &mut pxu);
            let dead: Vec<usize> = (0..nu).filter(|&u| p_u[u] > 0.0 && p_u[u] < PRUNE_MASS).collect();
            if dead.is_empty() {
                break;
            }
            for y in 0..self.ny {
                let row = &mut q[y * nu..(y + 1) * nu];
                dead.iter().for_each(|&u| row[u] = 0.0);
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            }
            pruned = true;
            converged = false;
        }
        let (i_xu, i_yu) = self.informations(&q);
        FixedPoint {
            kernel: q,
            i_xu,
            i_yu,
            iterations: it,
            converged,
        }
    }

    fn identity_like(&self) -> Vec<f64> {
        let (ny, nu) = (self.ny, self.nu);
        let mut q = vec![0.1 / nu as f64; ny * nu];
        for y in 0..ny {
            q[y * nu + y % nu] += 0.9;
        }
        q
    }

    fn random_init(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let (ny, nu) = (self.ny, self.nu);
        let mut q: Vec<f64> = (0..ny * nu).map(|_| rng.gen::<f64>() + 1e-3).collect();
        for y in 0..ny {
            let s: f64 = q[y * nu..(y + 1) * nu].iter().sum();
            q[y * nu..(y + 1) * nu].iter_mut().for_each(|v| *v /= s);
        }
        q
    }

    fn blend(&self, warm: &[f64]) -> Vec<f64> {
        let nu = self.nu as f64;
        warm.iter().map(|v| 0.999 * v + 0.001 / nu).collect()
    }

    /// Best fixed point at `beta` from a warm start and an identity-like start.
    fn best_at(&self, beta: f64, warm: Option<&[f64]>, opts: &IbOptions, iters: &mut usize) -> FixedPoint {
        let mut best = self.iterate(beta, self.identity_like(), opts);
        *iters += best.iterations;
        if let Some(w) = warm {
            let cand = self.iterate(beta, self.blend(w), opts);
            *iters += cand.iterations;
            if cand.lagrangian(beta) < best.lagrangian(beta) - 1e-13 {
                best = cand;
            }
        }
        best
    }

    /// `E[Var[ι_{X;U}(X;U) | Y, U]]` for a kernel; the tie-break criterion.
    fn conditional_variance(&self, q: &[f64]) -> f64 {
        let (nx, ny, nu) = (self.nx, self.ny, self.nu);
        let mut p_u = vec![0.0; nu];
        let mut pxu = vec![0.0; nu * nx];
        self.marginals(q, &mut p_u, &mut pxu);
        let p_x: Vec<f64> = (0..nx).map(|x| self.p_xy[x * ny..(x + 1) * ny].iter().sum()).collect();
        let mut acc = 0.0;
        for y in 0..ny {
            let pxy = &self.p_x_given_y[y * nx..(y + 1) * nx];
            for u in 0..nu {
                let w = self.p_y[y] * q[y * nu + u];
                if w <= 0.0 {
                    continue;
                }
                let iota = |x: usize| (pxu[u * nx + x] / p_x[x]).log2();
                let mean: f64 = (0..nx).filter(|&x| pxy[x] > 0.0).map(|x| pxy[x] * iota(x)).sum();
                let var: f64 = (0..nx)
                    .filter(|&x| pxy[x] > 0.0)
                    .map(|x| pxy[x] * (iota(x) - mean).powi(2))
                    .sum();
                acc += w * var;
            }
        }
        acc
    }
}

pub fn solve_ib(p_xy: &JointPmf, c_bits: f64, u_size: usize) -> Result<IBSolution> {
    solve_ib_with(p_xy, c_bits, u_size, &IbOptions::default())
}

/// Default cardinality bound `|U| = |Y| + 1`.
pub fn default_u_size(p_xy: &JointPmf) -> usize {
    p_xy.n_cols() + 1
}

pub fn solve_ib_with(p_xy: &JointPmf, c_bits: f64, u_size: usize, opts: &IbOptions) -> Result<IBSolution> {
    if u_size < 2 {
        return Err(Error::InvalidParameter(format!("u_size {u_size} < 2")));
    }
    if !(c_bits >= 0.0) {
        return Err(Error::InvalidParameter(format!("C = {c_bits} must be nonnegative")));
    }
    let i_xy = mutual_information(p_xy);
    if c_bits > i_xy + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "C = {c_bits} exceeds I(X;Y) = {i_xy}"
        )));
    }
    let prob = IbProblem::new(p_xy, u_size);
    if c_bits >= i_xy - 1e-12 {
        return sufficient_statistic(p_xy, &prob, c_bits, u_size);
    }
    if c_bits == 0.0 {
        return trivial(p_xy, &prob, u_size, opts);
    }

    let mut iters = 0;
    // β <= 1 always yields the trivial solution.
    let mut lo = 1.0;
    let mut hi = 2.0;
    let mut hi_fp = prob.best_at(hi, None, opts, &mut iters);
    while hi_fp.i_xu < c_bits {
        lo = hi;
        hi *= 2.0;
        if hi > 1e9 {
            return Err(Error::Solver(format!(
                "could not reach I(X;U) = {c_bits} (best {})",
                hi_fp.i_xu
            )));
        }
        let warm = hi_fp.kernel.clone();
        hi_fp = prob.best_at(hi, Some(&warm), opts, &mut iters);
    }
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi || hi_fp.i_xu - c_bits < 1e-12 {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let fp = prob.best_at(mid, Some(&hi_fp.kernel), opts, &mut iters);
        if fp.i_xu >= c_bits {
            hi = mid;
            hi_fp = fp;
        } else {
            lo = mid;
        }
    }

    // Tie-break among minimizers at the final multiplier.
    let beta = hi;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut chosen = hi_fp;
    let mut chosen_cv = prob.conditional_variance(&chosen.kernel);
    for _ in 0..opts.tie_restarts {
        let init = prob.random_init(&mut rng);
        let cand = prob.iterate(beta, init, opts);
        iters += cand.iterations;
        let same_value = (cand.lagrangian(beta) - chosen.lagrangian(beta)).abs() <= 1e-9;
        if same_value && cand.i_xu >= c_bits - 1e-9 {
            let cv = prob.conditional_variance(&cand.kernel);
            if cv < chosen_cv - 1e-12 {
                chosen = cand;
                chosen_cv = cv;
            }
        }
    }

    let kernel = Kernel::new(
        p_xy.col_alphabet().clone(),
        Alphabet::new(u_size)?,
        chosen.kernel.clone(),
    )?;
    let (xu, yu) = compose_markov(p_xy, &kernel)?;
    let achieved = mutual_information(&xu);
    Ok(IBSolution {
        p_xy: p_xy.clone(),
        kernel_u_given_y: kernel,
        ib_bits: mutual_information(&yu),
        lambda_star: 0.5 * (lo + hi),
        lambda_bracket: (lo, hi),
        lambda_one_sided: false,
        requested_c_bits: c_bits,
        achieved_c_bits: achieved,
        u_size,
        converged: chosen.converged && (achieved - c_bits).abs() < 1e-8,
        iterations: iters,
    })
}

/// `C = 0`: constant `U`; the reported slope is the right derivative, found as
/// the smallest multiplier with a nontrivial fixed point.
fn trivial(p_xy: &JointPmf, prob: &IbProblem, u_size: usize, opts: &IbOptions) -> Result<IBSolution> {
    let ny = p_xy.n_cols();
    let mut rows = vec![0.0; ny * u_size];
    for y in 0..ny {
        rows[y * u_size] = 1.0;
    }
    let kernel = Kernel::new(p_xy.col_alphabet().clone(), Alphabet::new(u_size)?, rows)?;
    let mut iters = 0;
    let nontrivial = |beta: f64, iters: &mut usize| prob.best_at(beta, None, opts, iters).i_xu > 1e-6;
    let (mut lo, mut hi) = (1.0, 2.0);
    while !nontrivial(hi, &mut iters) {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            break;
        }
    }
    for _ in 0..40 {
        let mid = 0.5 * (lo + hi);
        if nontrivial(mid, &mut iters) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(IBSolution {
        p_xy: p_xy.clone(),
        kernel_u_given_y: kernel,
        ib_bits: 0.0,
        lambda_star: 0.5 * (lo + hi),
        lambda_bracket: (lo, hi),
        lambda_one_sided: true,
        requested_c_bits: 0.0,
        achieved_c_bits: 0.0,
        u_size,
        converged: true,
        iterations: iters,
    })
}

/// `C = I(X;Y)`: `U` must be a sufficient statistic of `Y` for `X`; the
/// minimal one groups observations with identical posteriors.
fn sufficient_statistic(p_xy: &JointPmf, _prob: &IbProblem, c_bits: f64, u_size: usize) -> Result<IBSolution> {
    let ny = p_xy.n_cols();
    let p_y = p_xy.col_marginal_probs();
    let (post, _) = p_xy.row_given_col();
    let mut reps: Vec<usize> = Vec::new();
    let mut class = vec![0usize; ny];
    for y in (0..ny).filter(|&y| p_y[y] > 0.0) {
        let found = reps.iter().position(|&r| {
            post.row(r)
                .iter()
                .zip(post.row(y))
                .all(|(a, b)| (a - b).abs() < 1e-12)
        });
        class[y] = found.unwrap_or_else(|| {
            reps.push(y);
            reps.len() - 1
        });
    }
    if reps.len() > u_size {
        return Err(Error::InvalidParameter(format!(
            "u_size {u_size} is smaller than the {} classes of the minimal sufficient statistic",
            reps.len()
        )));
    }
    let mut rows = vec![0.0; ny * u_size];
    for y in 0..ny {
        rows[y * u_size + class[y]] = 1.0;
    }
    let kernel = Kernel::new(p_xy.col_alphabet().clone(), Alphabet::new(u_size)?, rows)?;
    let (xu, yu) = compose_markov(p_xy, &kernel)?;
    Ok(IBSolution {
        p_xy: p_xy.clone(),
        kernel_u_given_y: kernel,
        ib_bits: mutual_information(&yu),
        lambda_star: f64::INFINITY,
        lambda_bracket: (f64::INFINITY, f64::INFINITY),
        lambda_one_sided: true,
        requested_c_bits: c_bits,
        achieved_c_bits: mutual_information(&xu),
        u_size,
        converged: true,
        iterations: 0,
    })
}

/// `E[Var[ι_{X;U}(X;U) | Y, U]]` of a solution.
pub fn conditional_info_variance(sol: &IBSolution) -> f64 {
    let prob = IbProblem::new(&sol.p_xy, sol.u_size);
    let ny = sol.kernel_u_given_y.input_size();
    let q: Vec<f64> = (0..ny).flat_map(|y| sol.kernel_u_given_y.row(y).to_vec()).collect();
    prob.conditional_variance(&q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{binary_entropy, Pmf};

    fn dsbs(p: f64) -> JointPmf {
        JointPmf::from_marginal_and_kernel(&Pmf::uniform(2).unwrap(), &Kernel::bsc(p).unwrap())
            .unwrap()
    }

    #[test]
    fn zero_rate_is_constant_kernel() {
        let s = solve_ib(&dsbs(0.1), 0.0, 3).unwrap();
        assert_eq!(s.ib_bits, 0.0);
        assert!(s.lambda_one_sided);
        // right slope at zero for the DSBS is 1/(1-2p)^2
        assert!((s.lambda_star - 1.5625).abs() < 0.05, "{}", s.lambda_star);
    }

    #[test]
    fn mrs_gerber_point() {
        let c = 1.0 - binary_entropy(0.26);
        let s = solve_ib(&dsbs(0.1), c, 3).unwrap();
        assert!(s.converged);
        assert!((s.ib_bits - (1.0 - binary_entropy(0.2))).abs() < 1e-6, "{}", s.ib_bits);
        assert!((s.ib_bits - 0.2781).abs() < 1e-4);
        assert!(s.achieved_c_bits >= c - 1e-9);
    }

    #[test]
    fn endpoint_requires_u_equal_y() {
        let j = dsbs(0.1);
        let s = solve_ib(&j, mutual_information(&j), 3).unwrap();
        assert!((s.ib_bits - 1.0).abs() < 1e-12);
        assert_eq!(s.lambda_star, f64::INFINITY);
        assert!(solve_ib(&j, 0.6, 3).is_err());
        assert!(solve_ib(&j, 0.1, 1).is_err());
    }

    #[test]
    fn compaction_preserves_informations() {
        let s = solve_ib(&dsbs(0.1), 0.2, 3).unwrap();
        let c = s.compacted().unwrap();
        assert_eq!(c.u_size, 2);
        assert!((c.ib_bits - s.ib_bits).abs() < 1e-9);
        assert!((c.achieved_c_bits - s.achieved_c_bits).abs() < 1e-9);
    }

    #[test]
    fn solution_json_roundtrip_keeps_infinite_slope() {
        let j = dsbs(0.1);
        let s = solve_ib(&j, mutual_information(&j), 2).unwrap();
        let text = serde_json::to_string(&s).unwrap();
        let back: IBSolution = serde_json::from_str(&text).unwrap();
        assert_eq!(back.lambda_star, f64::INFINITY);
        assert_eq!(back.kernel_u_given_y, s.kernel_u_given_y);
    }
}

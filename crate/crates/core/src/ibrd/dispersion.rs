//! Second-order quantities: exact sums over the finite joint law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ibrd::ib::IBSolution;
use crate::ibrd::rd::RDSolution;
use crate::prob::compose_markov;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSet {
    pub vib: f64,
    pub cvib: f64,
    pub v_tilde: f64,
    pub cv_tilde: f64,
}

/// One cell `(x, y, w)` of a three-way law with its weight.
struct Cell {
    y: usize,
    w: usize,
    p: f64,
    a: f64,
    b: f64,
}

/// `Var[a + s·b]` and `E[Var[b | Y, W]]` over the given cells.
fn moments(cells: &[Cell], s: f64, ny: usize, nw: usize) -> (f64, f64) {
    let mean: f64 = cells.iter().map(|c| c.p * (c.a + s * c.b)).sum();
    let var: f64 = cells.iter().map(|c| c.p * (c.a + s * c.b - mean).powi(2)).sum();
    let mut mass = vec![0.0; ny * nw];
    let mut first = vec![0.0; ny * nw];
    let mut count = vec![0usize; ny * nw];
    for c in cells {
        mass[c.y * nw + c.w] += c.p;
        first[c.y * nw + c.w] += c.p * c.b;
        count[c.y * nw + c.w] += 1;
    }
    let cond: f64 = cells
        .iter()
        .filter(|c| count[c.y * nw + c.w] > 1)
        .map(|c| {
            let i = c.y * nw + c.w;
            c.p * (c.b - first[i] / mass[i]).powi(2)
        })
        .sum();
    (var.max(0.0), cond.max(0.0))
}

/// `(VIB, CVIB)`: `Var[ι_{Y;U} - λ·ι_{X;U}]` and `λ²·E[Var[ι_{X;U} | Y, U]]`.
pub fn ib_dispersion(ib: &IBSolution) -> Result<(f64, f64)> {
    let lambda = ib.lambda_star;
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter("slope is infinite at this point".into()));
    }
    let p = &ib.p_xy;
    let k = &ib.kernel_u_given_y;
    let (nx, ny, nu) = (p.n_rows(), p.n_cols(), k.output_size());
    let (xu, yu) = compose_markov(p, k)?;
    let p_x = xu.row_marginal_probs();
    let p_y = yu.row_marginal_probs();
    let p_u = xu.col_marginal_probs();
    let mut cells = Vec::new();
    for x in 0..nx {
        for y in 0..ny {
            for u in 0..nu {
                let w = p.get(x, y) * k.get(y, u);
                if w > 0.0 {
                    cells.push(Cell {
                        y,
                        w: u,
                        p: w,
                        a: (yu.get(y, u) / (p_y[y] * p_u[u])).log2(),
                        b: (xu.get(x, u) / (p_x[x] * p_u[u])).log2(),
                    });
                }
            }
        }
    }
    let (vib, cond) = moments(&cells, -lambda, ny, nu);
    Ok((vib, lambda * lambda * cond))
}

/// `(Ṽ, C̃V)`: `Var[ι_{Y;Z} + λ·d(X,Z)]` and `λ²·E[Var[d(X,Z) | Y, Z]]`.
pub fn rd_dispersion(rd: &RDSolution) -> Result<(f64, f64)> {
    let lambda = rd.lambda_star;
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter("slope is infinite at this point".into()));
    }
    let p = &rd.p_xy;
    let k = &rd.kernel_z_given_y;
    let (nx, ny, nz) = (p.n_rows(), p.n_cols(), k.output_size());
    let (_, yz) = compose_markov(p, k)?;
    let p_y = yz.row_marginal_probs();
    let p_z = yz.col_marginal_probs();
    let mut cells = Vec::new();
    for x in 0..nx {
        for y in 0..ny {
            for z in 0..nz {
                let w = p.get(x, y) * k.get(y, z);
                if w > 0.0 {
                    cells.push(Cell {
                        y,
                        w: z,
                        p: w,
                        a: (yz.get(y, z) / (p_y[y] * p_z[z])).log2(),
                        b: rd.d.get(x, z),
                    });
                }
            }
        }
    }
    let (v, cond) = moments(&cells, lambda, ny, nz);
    Ok((v, lambda * lambda * cond))
}

pub fn dispersion_quantities(ib: &IBSolution, rd: &RDSolution) -> Result<DispersionSet> {
    let (vib, cvib) = ib_dispersion(ib)?;
    let (v_tilde, cv_tilde) = rd_dispersion(rd)?;
    Ok(DispersionSet {
        vib,
        cvib,
        v_tilde,
        cv_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ibrd::distortion::DistortionMeasure;
    use crate::ibrd::ib::solve_ib;
    use crate::ibrd::rd::solve_noisy_rd;
    use crate::prob::{binary_entropy, JointPmf, Kernel, Pmf};

    fn dsbs(p: f64) -> JointPmf {
        JointPmf::from_marginal_and_kernel(&Pmf::uniform(2).unwrap(), &Kernel::bsc(p).unwrap())
            .unwrap()
    }

    #[test]
    fn noiseless_has_no_conditional_variance() {
        let rd = solve_noisy_rd(&dsbs(0.0), &DistortionMeasure::hamming(2).unwrap(), 0.1, 2).unwrap();
        let (v, cv) = rd_dispersion(&rd).unwrap();
        assert_eq!(cv, 0.0);
        // binary source: Ṽ = 0 at every D (the tilted information is constant)
        assert!(v < 1e-9);
    }

    #[test]
    fn dsbs_point_matches_enumeration() {
        let j = dsbs(0.1);
        let ib = solve_ib(&j, 1.0 - binary_entropy(0.26), 3).unwrap().compacted().unwrap();
        let (vib, cvib) = ib_dispersion(&ib).unwrap();
        assert!(cvib <= vib + 1e-9);
        assert!(cvib > 0.0);
        // direct enumeration with U = BSC(q)(Y)
        let lam = ib.lambda_star;
        let xu = |x: usize, u: usize| if x == u { 0.74 } else { 0.26 };
        let yu = |y: usize, u: usize| if y == u { 0.8 } else { 0.2 };
        let mut vals = Vec::new();
        for x in 0..2 {
            for y in 0..2 {
                for u in 0..2 {
                    let p = j.get(x, y) * yu(y, u);
                    let a = (yu(y, u) / 0.5f64).log2() - lam * (xu(x, u) / 0.5f64).log2();
                    vals.push((p, a));
                }
            }
        }
        let m: f64 = vals.iter().map(|(p, a)| p * a).sum();
        let v: f64 = vals.iter().map(|(p, a)| p * (a - m).powi(2)).sum();
        assert!((v - vib).abs() < 1e-5, "{v} {vib}");
    }
}

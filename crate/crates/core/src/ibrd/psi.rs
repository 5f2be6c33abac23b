//! `ψ = inf { D(P_Z ‖ P_Z̄) : P_Z supported on a feasible set }`, which equals
//! `-log2 P_Z̄(feasible)`: the minimizer is the reference conditioned on the set.

use crate::error::{Error, Result};
use crate::ibrd::distortion::DistortionMeasure;
use crate::prob::{compose_markov, JointPmf, Kernel, Pmf};

/// `-log2` of the reference mass on the feasible symbols; `+inf` if none.
pub fn psi(feasible: impl Fn(usize) -> bool, reference: &Pmf) -> f64 {
    let mass: f64 = (0..reference.len())
        .filter(|&z| feasible(z))
        .map(|z| reference.get(z))
        .sum();
    psi_from_mass(mass)
}

pub fn psi_mask(mask: &[bool], reference: &Pmf) -> Result<f64> {
    if mask.len() != reference.len() {
        return Err(Error::AlphabetMismatch(format!(
            "mask has {} entries, reference has {}",
            mask.len(),
            reference.len()
        )));
    }
    Ok(psi(|z| mask[z], reference))
}

pub fn psi_from_mass(mass: f64) -> f64 {
    if mass <= 0.0 {
        f64::INFINITY
    } else {
        (-mass.min(1.0).log2()).max(0.0)
    }
}

/// `φ(y, z, D) = P(d(X, z) > D | Y = y)`; masked cells count as excess.
pub fn phi_single(p_xy: &JointPmf, d: &DistortionMeasure, y: usize, z: usize, big_d: f64) -> Result<f64> {
    let (post, unused) = p_xy.row_given_col();
    if y >= p_xy.n_cols() || unused.contains(&y) {
        return Err(Error::InvalidParameter(format!("observation {y} has no mass")));
    }
    Ok(post
        .row(y)
        .iter()
        .enumerate()
        .filter(|&(x, &p)| p > 0.0 && (d.is_infinite(x, z) || d.get(x, z) > big_d))
        .map(|(_, p)| p)
        .sum())
}

/// Single-letter `ψ_Z̄(y)`: feasible `z` are those with `φ(y, z, D) <= t`.
pub fn psi_zbar(p_xy: &JointPmf, d: &DistortionMeasure, y: usize, big_d: f64, t: f64, reference: &Pmf) -> Result<f64> {
    let phis = (0..d.z_size())
        .map(|z| phi_single(p_xy, d, y, z, big_d))
        .collect::<Result<Vec<_>>>()?;
    Ok(psi(|z| phis[z] <= t, reference))
}

/// Single-letter `ψ_U(y)`: feasible `u` are those with
/// `P(ι_{X;U}(X; u) < C | Y = y) <= t`, the reference being `P_U`.
pub fn psi_u(p_xy: &JointPmf, k: &Kernel, y: usize, c_bits: f64, t: f64) -> Result<f64> {
    let (xu, _) = compose_markov(p_xy, k)?;
    let d = crate::ibrd::distortion::neg_info_density_distortion(p_xy, k)?;
    psi_zbar(p_xy, &d, y, -c_bits, t, &xu.col_marginal())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms() {
        let r = Pmf::uniform(4).unwrap();
        assert_eq!(psi(|_| true, &r), 0.0);
        assert_eq!(psi(|z| z == 0, &r), 2.0);
        assert_eq!(psi(|_| false, &r), f64::INFINITY);
    }

    #[test]
    fn matches_grid_search() {
        let r = Pmf::from_probs(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let mask = [true, false, true, true];
        let closed = psi_mask(&mask, &r).unwrap();
        let steps = 200;
        let mut best = f64::INFINITY;
        for a in 0..=steps {
            for b in 0..=steps - a {
                let p = [a as f64 / steps as f64, 0.0, b as f64 / steps as f64, (steps - a - b) as f64 / steps as f64];
                let kl: f64 = p
                    .iter()
                    .zip(r.probs())
                    .filter(|(p, _)| **p > 0.0)
                    .map(|(p, q)| p * (p / q).log2())
                    .sum();
                best = best.min(kl);
            }
        }
        assert!((best - closed).abs() < 1e-4, "{best} {closed}");
    }

    #[test]
    fn phi_hamming() {
        let j = JointPmf::from_marginal_and_kernel(&Pmf::uniform(2).unwrap(), &Kernel::bsc(0.1).unwrap()).unwrap();
        let d = DistortionMeasure::hamming(2).unwrap();
        assert!((phi_single(&j, &d, 0, 0, 0.5).unwrap() - 0.1).abs() < 1e-15);
        assert_eq!(phi_single(&j, &d, 0, 0, 1.0).unwrap(), 0.0);
    }
}

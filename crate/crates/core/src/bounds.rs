//! Computable achievability bounds and second-order approximations.
//!
//! Second-order expressions omit their `O(·)` residuals; they are plotted as
//! stated and never padded with guessed constants.

use std::path::Path;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::codec::max_entropy_length_bound;
use crate::error::{Error, Result};
use crate::ibrd::{DispersionSet, IBSolution, RDSolution};
use crate::prob::{compose_markov, information_density, InfoDensityTable};
use crate::schemes::block::{compositions, log2_factorials, log2_type_prob, splits, y_types};
use crate::schemes::{NoisyVlScheme, RelayScheme, RelayVariant};
use crate::schemes::lossy::BOUND_ENUMERATION_BUDGET;

/// Largest number of joint types summed when evaluating block bounds.
const MAX_BLOCK_TYPES: usize = 5_000_000;

/// `Q(t) = P(N(0,1) >= t)`.
pub fn q_func(t: f64) -> f64 {
    0.5 * erfc(t / std::f64::consts::SQRT_2)
}

/// `Q^{-1}(ε)` by bisection, odd about `ε = 1/2`.
pub fn q_inv(eps: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidParameter(format!("Q^-1 needs eps in (0, 1), got {eps}")));
    }
    if eps == 0.5 {
        return Ok(0.0);
    }
    if eps > 0.5 {
        return Ok(-q_inv(1.0 - eps)?);
    }
    let (mut lo, mut hi) = (0.0f64, 40.0f64);
    while hi - lo > 1e-13 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            break;
        }
        if q_func(mid) > eps {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// `P_{Yⁿ, T}(ψ(Yⁿ, D, T) >= log2 γ)` with `T ~ Unif(0, 1)`, where the
/// feasible set at threshold `t` is `{z : φ(y, z, D) <= t}`.
pub fn psi_tail_over_t(scheme: &NoisyVlScheme, gamma: f64) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
    }
    let cost = scheme.enumeration_cost();
    if cost > BOUND_ENUMERATION_BUDGET {
        return Err(Error::Config(format!("the tail needs {cost:.3e} joint types, above the enumeration budget")));
    }
    let cfg = scheme.config();
    let cap = 1.0 / gamma;
    let mut total = 0.0;
    for (counts, w) in y_types(cfg.n, cfg.p_xy.col_marginal().probs()) {
        let mut sp: Vec<(f64, f64)> = splits(scheme.phi(), &counts, &cfg.reference)
            .into_iter()
            .map(|s| (s.phi, s.log2_mass.exp2()))
            .collect();
        sp.sort_by(|a, b| a.0.total_cmp(&b.0));
        // smallest breakpoint whose cumulative mass exceeds 1/γ
        let mut acc = 0.0;
        let mut t_star = 1.0;
        let mut i = 0;
        while i < sp.len() {
            let t = sp[i].0;
            while i < sp.len() && sp[i].0 == t {
                acc += sp[i].1;
                i += 1;
            }
            if acc > cap {
                t_star = t.min(1.0);
                break;
            }
        }
        total += w * t_star;
    }
    Ok(total.min(1.0))
}

/// Fixed-length bound `P(ψ(Y, D, T) >= log γ) + e^{-L/γ}`.
pub fn thm1_fl_bound(scheme: &NoisyVlScheme, gamma: f64, big_l: u64) -> Result<f64> {
    Ok((psi_tail_over_t(scheme, gamma)? + (-(big_l as f64) / gamma).exp()).min(1.0))
}

/// `E[1 - (1 - min{2^{-ι}, 1})^{(L+1)/2}]` over the joint of the table.
pub fn eq9_pml_pe_bound(ident: &InfoDensityTable, big_l: u64) -> Result<f64> {
    if big_l == 0 {
        return Err(Error::InvalidParameter("L must be at least 1".into()));
    }
    let j = ident.joint();
    let e = (big_l as f64 + 1.0) / 2.0;
    let mut acc = 0.0;
    for r in 0..j.n_rows() {
        for c in 0..j.n_cols() {
            let p = j.get(r, c);
            if p > 0.0 {
                acc += p * pml_term(ident.value(r, c), e);
            }
        }
    }
    Ok(acc)
}

fn pml_term(iota: f64, e: f64) -> f64 {
    let m = (-iota).exp2().min(1.0);
    // 1 - (1 - m)^e without cancellation
    -(e * (-m).ln_1p()).exp_m1()
}

/// Law of the block density `Σ ι(x_i, u_i)` under the product joint, as
/// `(value, probability)` pairs over joint types.
pub fn block_density_law(ident: &InfoDensityTable, n: usize) -> Result<Vec<(f64, f64)>> {
    let j = ident.joint();
    let cells: Vec<usize> = (0..j.probs().len()).filter(|&i| j.probs()[i] > 0.0).collect();
    let count = (1..cells.len()).fold(1.0, |a, k| a * (n as f64 + k as f64) / k as f64);
    if count > MAX_BLOCK_TYPES as f64 {
        return Err(Error::Config(format!("{count:.0} joint types exceed the enumeration budget")));
    }
    let lf = log2_factorials(n);
    let lp: Vec<f64> = cells.iter().map(|&i| j.probs()[i].log2()).collect();
    let vals: Vec<f64> = cells.iter().map(|&i| ident.values()[i]).collect();
    Ok(compositions(n as u32, cells.len())
        .into_iter()
        .map(|k| {
            let w = log2_type_prob(&k, &lp, &lf).exp2();
            let v: f64 = k.iter().zip(&vals).map(|(&c, &v)| c as f64 * v).sum();
            (v, w)
        })
        .collect())
}

/// Guarantee of a scheme.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeBounds {
    pub pe_bound: f64,
    /// Expected description length in bits; `+inf` when `ψ` is infinite with
    /// `β < 1` somewhere.
    #[serde(with = "crate::serde_f64")]
    pub len_bound: f64,
    /// Largest `γ` term used by fixed-length bounds.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

fn length_diagnostic(len: f64) -> Option<String> {
    (!len.is_finite()).then(|| "psi is infinite on an observation with beta < 1".to_string())
}

/// Noisy lossy coding: `P_e <= E[β] + ε'`, `E|W| <= ℓ(E[(1-β)ψ])`.
pub fn lossy_scheme_bounds(scheme: &NoisyVlScheme) -> Result<SchemeBounds> {
    let b = scheme.checked_bounds()?;
    Ok(SchemeBounds {
        pe_bound: b.pe_bound.min(1.0),
        len_bound: b.len_bound,
        gamma: None,
        diagnostic: length_diagnostic(b.len_bound),
    })
}

/// `2^{-C'}(L+1)/2` for the block threshold `C'` of the relay.
pub fn pml_union_term(relay: &RelayScheme) -> f64 {
    let cfg = relay.config();
    (-cfg.block_threshold()).exp2() * (cfg.message_count as f64 + 1.0) / 2.0
}

/// One-shot (or block) guarantee of a relay configuration:
///
/// * `vl-chansim`: `P_e <=` [`eq9_pml_pe_bound`] `+ ε'`, `E|W| <= ℓ((1-ε') I(Yⁿ;Uⁿ))`;
/// * `vl-lossy`: `P_e <= E[β] + 2^{-C'}(L+1)/2 + ε'`, `E|W| <= ℓ(E[(1-β)ψ_U])`;
/// * `fl-truncated`: `P_e <= P(ψ_U >= log γ) + 2^{-C'}(L+1)/2 + e^{-K/γ}`
///   minimized over `γ` on a grid; the length is `⌈log2 K⌉`.
pub fn oneshot_scheme_bounds(relay: &RelayScheme) -> Result<SchemeBounds> {
    let cfg = relay.config();
    let p_xy = cfg.p_xy()?;
    match cfg.variant {
        RelayVariant::VlChansim => {
            let (xu, yu) = compose_markov(&p_xy, &cfg.kernel_u_given_y)?;
            let law = block_density_law(&information_density(&xu), cfg.n)?;
            let e = (cfg.message_count as f64 + 1.0) / 2.0;
            let pe: f64 = law.iter().map(|(v, w)| w * pml_term(*v, e)).sum::<f64>() + cfg.eps_prime;
            let i_yu = crate::prob::mutual_information(&yu) * cfg.n as f64;
            Ok(SchemeBounds {
                pe_bound: pe.min(1.0),
                len_bound: max_entropy_length_bound((1.0 - cfg.eps_prime) * i_yu),
                gamma: None,
                diagnostic: None,
            })
        }
        RelayVariant::VlLossy => {
            let inner = relay.lossy().expect("lossy variant");
            let (eb, ep) = inner.checked_expectations()?;
            let len = max_entropy_length_bound(ep);
            Ok(SchemeBounds {
                pe_bound: (eb + pml_union_term(relay) + cfg.eps_prime).min(1.0),
                len_bound: len,
                gamma: None,
                diagnostic: length_diagnostic(len),
            })
        }
        RelayVariant::FlTruncated => {
            let inner = relay.lossy().expect("lossy variant");
            let k = cfg.fl_description_size.unwrap_or(2) as f64;
            let union = pml_union_term(relay);
            let mut best = (f64::INFINITY, 1.0);
            for g in gamma_grid(k) {
                let v = psi_tail_over_t(inner, g)? + union + (-k / g).exp();
                if v < best.0 {
                    best = (v, g);
                }
            }
            Ok(SchemeBounds {
                pe_bound: best.0.min(1.0),
                len_bound: crate::schemes::relay::field_width(k as u64) as f64,
                gamma: Some(best.1),
                diagnostic: None,
            })
        }
    }
}

/// Log-spaced `γ` values between `1` and `K²`.
fn gamma_grid(k: f64) -> Vec<f64> {
    let top = (2.0 * k.log2()).max(1.0);
    (0..=64).map(|i| (top * i as f64 / 64.0).exp2()).collect()
}

/// Second-order approximations at one `(n, ε)`; residual terms are excluded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderRates {
    /// `IB + √(VIB/n) Q^{-1}(ε)`
    pub eq3_rate: f64,
    /// `(1-ε)(IB + √(ln n / n · CVIB))`
    pub eq5_rate: f64,
    /// `nR + √(nṼ) Q^{-1}(ε)`
    pub thm3_len: f64,
    /// `(1-ε)(nR + √(n ln n · C̃V))`
    pub thm4_len: f64,
}

pub fn second_order_rates(ib: &IBSolution, disp: &DispersionSet, rd: &RDSolution, n: u64, eps: f64) -> Result<SecondOrderRates> {
    if n < 2 {
        return Err(Error::InvalidParameter("second-order rates need n >= 2".into()));
    }
    let qi = q_inv(eps)?;
    let nf = n as f64;
    let ln = nf.ln();
    let r = rd.rate_bits;
    Ok(SecondOrderRates {
        eq3_rate: ib.ib_bits + (disp.vib / nf).sqrt() * qi,
        eq5_rate: (1.0 - eps) * (ib.ib_bits + (ln / nf * disp.cvib).sqrt()),
        thm3_len: nf * r + (nf * disp.v_tilde).sqrt() * qi,
        thm4_len: (1.0 - eps) * (nf * r + (nf * ln * disp.cv_tilde).sqrt()),
    })
}

/// `nR + √(nṼ) Q^{-1}(ε)` with rate and dispersion taken at the lowered level
/// `D - log2(n)/n`; `rd_at` solves the rate-distortion problem at a level.
pub fn thm3_len_strengthened(
    n: u64,
    eps: f64,
    level: f64,
    rd_at: impl Fn(f64) -> Result<(RDSolution, f64)>,
) -> Result<f64> {
    let nf = n as f64;
    let (rd, v_tilde) = rd_at(level - nf.log2() / nf)?;
    Ok(nf * rd.rate_bits + (nf * v_tilde).sqrt() * q_inv(eps)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub n: u64,
    pub eps: f64,
    pub eq3: f64,
    pub eq5: f64,
    pub thm3_len: f64,
    pub thm4_len: f64,
    pub ib: f64,
    pub vib: f64,
    pub cvib: f64,
}

/// Second-order curves on an `(n, ε)` grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderCurve {
    pub ib_bits: f64,
    pub vib: f64,
    pub cvib: f64,
    #[serde(with = "crate::serde_f64")]
    pub lambda_star: f64,
    pub rd_rate_bits: f64,
    pub rows: Vec<CurveRow>,
}

impl SecondOrderCurve {
    pub fn build(ib: &IBSolution, disp: &DispersionSet, rd: &RDSolution, ns: &[u64], epss: &[f64]) -> Result<Self> {
        let mut rows = Vec::with_capacity(ns.len() * epss.len());
        for &eps in epss {
            for &n in ns {
                let r = second_order_rates(ib, disp, rd, n, eps)?;
                rows.push(CurveRow {
                    n,
                    eps,
                    eq3: r.eq3_rate,
                    eq5: r.eq5_rate,
                    thm3_len: r.thm3_len,
                    thm4_len: r.thm4_len,
                    ib: ib.ib_bits,
                    vib: disp.vib,
                    cvib: disp.cvib,
                });
            }
        }
        Ok(SecondOrderCurve {
            ib_bits: ib.ib_bits,
            vib: disp.vib,
            cvib: disp.cvib,
            lambda_star: ib.lambda_star,
            rd_rate_bits: rd.rate_bits,
            rows,
        })
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).map_err(|e| csv_path_error(path, e))?;
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Vec<CurveRow>> {
        let mut r = csv::Reader::from_path(path).map_err(|e| csv_path_error(path, e))?;
        Ok(r.deserialize().collect::<std::result::Result<Vec<CurveRow>, _>>()?)
    }
}

pub(crate) fn csv_path_error(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        kind => Error::Config(format!("{}: {kind:?}", path.display())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::{JointPmf, Kernel, Pmf};

    #[test]
    fn q_inverse() {
        assert!(q_inv(0.5).unwrap().abs() < 1e-12);
        assert!((q_inv(0.1).unwrap() - 1.2816).abs() < 1e-4);
        for e in [0.01, 0.1, 0.25] {
            assert!((q_func(q_inv(e).unwrap()) - e).abs() < 1e-10);
        }
        assert_eq!(q_func(0.0), 0.5);
        assert!(q_inv(1.0).is_err());
    }

    #[test]
    fn pml_bound_substitution() {
        let j = JointPmf::from_rows(vec![vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let t = information_density(&j);
        // ι ≡ 1, L = 1: 2^{-1}
        assert!((eq9_pml_pe_bound(&t, 1).unwrap() - 0.5).abs() < 1e-15);
        let ind = JointPmf::product(&Pmf::uniform(2).unwrap(), &Pmf::uniform(2).unwrap()).unwrap();
        assert!((eq9_pml_pe_bound(&information_density(&ind), 7).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn block_law_sums_to_one() {
        let j = JointPmf::from_marginal_and_kernel(&Pmf::uniform(2).unwrap(), &Kernel::bsc(0.2).unwrap()).unwrap();
        let t = information_density(&j);
        let law = block_density_law(&t, 12).unwrap();
        let m: f64 = law.iter().map(|l| l.1).sum();
        let mean: f64 = law.iter().map(|l| l.0 * l.1).sum();
        assert!((m - 1.0).abs() < 1e-12);
        assert!((mean - 12.0 * t.mean()).abs() < 1e-10);
    }
}

//! Variable-length noisy lossy coding of a binary source observed through a
//! symmetric channel.

use ibrelay::bounds::lossy_scheme_bounds;
use ibrelay::ibrd::DistortionMeasure;
use ibrelay::poisson::derive_substream;
use ibrelay::prob::{JointPmf, Pmf};
use ibrelay::schemes::{BetaRule, NoisyVLConfig, NoisyVlScheme};

fn main() -> ibrelay::Result<()> {
    let p_xy = JointPmf::from_rows(vec![vec![0.45, 0.05], vec![0.05, 0.45]])?;
    let d = DistortionMeasure::hamming(2)?;
    for n in [4usize, 8, 16] {
        let mut cfg = NoisyVLConfig::new(p_xy.clone(), d.clone(), 0.35, 0.05, Pmf::uniform(2)?, n);
        cfg.beta = BetaRule::feasible_or(0.0);
        cfg.master_seed = 1;
        let scheme = NoisyVlScheme::new(cfg)?;
        let trials = 2000u64;
        let (mut errors, mut bits) = (0u64, 0u64);
        for t in 0..trials {
            let r = scheme.run_trial(derive_substream(1, &format!("trial{t}")))?;
            errors += r.error as u64;
            bits += r.description_bits;
        }
        let b = lossy_scheme_bounds(&scheme)?;
        println!(
            "n = {n:>2}: P_e = {:.4} (bound {:.4}), E|W| = {:.3} (bound {:.3})",
            errors as f64 / trials as f64,
            b.pe_bound,
            bits as f64 / trials as f64,
            b.len_bound
        );
    }
    Ok(())
}

//! Noisy rate-distortion and the four dispersion quantities.

use ibrelay::ibrd::{dispersion_quantities, solve_ib, solve_noisy_rd, tilted_information, DistortionMeasure};
use ibrelay::prob::JointPmf;

fn main() -> ibrelay::Result<()> {
    let p_xy = JointPmf::from_rows(vec![vec![0.45, 0.05], vec![0.05, 0.45]])?;
    let d = DistortionMeasure::hamming(2)?;
    let rd = solve_noisy_rd(&p_xy, &d, 0.25, 2)?;
    println!("R(0.25) = {:.6} bits, achieved distortion {:.6}", rd.rate_bits, rd.achieved_distortion);
    for y in 0..2 {
        println!("  tilted information at y = {y}: {:.6}", tilted_information(&rd, y)?);
    }
    let ib = solve_ib(&p_xy, 0.1733, 3)?;
    let disp = dispersion_quantities(&ib, &rd)?;
    println!("IB(0.1733) = {:.6}", ib.ib_bits);
    println!("VIB = {:.6}  CVIB = {:.6}  V~ = {:.6}  CV~ = {:.6}", disp.vib, disp.cvib, disp.v_tilde, disp.cv_tilde);
    Ok(())
}

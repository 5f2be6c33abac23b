//! Second-order rate approximations against the blocklength.

use ibrelay::bounds::second_order_rates;
use ibrelay::ibrd::{dispersion_quantities, solve_ib, solve_noisy_rd, DistortionMeasure};
use ibrelay::prob::JointPmf;

fn main() -> ibrelay::Result<()> {
    let p_xy = JointPmf::from_rows(vec![vec![0.45, 0.05], vec![0.05, 0.45]])?;
    let ib = solve_ib(&p_xy, 0.1733, 3)?;
    let rd = solve_noisy_rd(&p_xy, &DistortionMeasure::hamming(2)?, 0.25, 2)?;
    let disp = dispersion_quantities(&ib, &rd)?;
    println!("IB = {:.6}, R = {:.6}", ib.ib_bits, rd.rate_bits);
    println!("{:>9} {:>10} {:>10} {:>12} {:>12}", "n", "eq3", "eq5", "thm3_len/n", "thm4_len/n");
    for n in [10u64, 100, 1000, 10_000, 100_000] {
        let r = second_order_rates(&ib, &disp, &rd, n, 0.1)?;
        let nf = n as f64;
        println!(
            "{n:>9} {:>10.5} {:>10.5} {:>12.5} {:>12.5}",
            r.eq3_rate,
            r.eq5_rate,
            r.thm3_len / nf,
            r.thm4_len / nf
        );
    }
    Ok(())
}

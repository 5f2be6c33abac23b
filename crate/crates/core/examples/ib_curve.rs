//! Information bottleneck of a doubly symmetric binary source.

use ibrelay::ibrd::solve_ib;
use ibrelay::prob::{mutual_information, JointPmf};

fn main() -> ibrelay::Result<()> {
    let p = 0.1;
    let p_xy = JointPmf::from_rows(vec![vec![0.5 * (1.0 - p), 0.5 * p], vec![0.5 * p, 0.5 * (1.0 - p)]])?;
    let top = mutual_information(&p_xy);
    println!("I(X;Y) = {top:.6}");
    println!("{:>8} {:>10} {:>10}", "C", "IB(C)", "slope");
    for i in 1..10 {
        let c = top * i as f64 / 10.0;
        let s = solve_ib(&p_xy, c, 3)?;
        println!("{c:>8.4} {:>10.6} {:>10.4}", s.ib_bits, s.lambda_star);
    }
    Ok(())
}

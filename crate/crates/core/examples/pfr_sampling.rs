//! Poisson functional representation: the selected proposal is an exact
//! sample from the target.

use ibrelay::poisson::{derive_substream, pfr_select_pmf};
use ibrelay::prob::Pmf;

fn main() -> ibrelay::Result<()> {
    let target = Pmf::from_probs(vec![0.6, 0.3, 0.1])?;
    let proposal = Pmf::uniform(3)?;
    let runs = 20_000u64;
    let mut counts = [0u64; 3];
    let mut index_sum = 0.0;
    for s in 0..runs {
        let sel = pfr_select_pmf(&target, &proposal, derive_substream(s, "arrivals"), derive_substream(s, "proposals"))?;
        counts[sel.value[0]] += 1;
        index_sum += sel.index as f64;
    }
    for (z, c) in counts.iter().enumerate() {
        println!("z = {z}: empirical {:.4}, target {:.4}", *c as f64 / runs as f64, target.get(z));
    }
    println!("mean selected index {:.3}", index_sum / runs as f64);
    Ok(())
}

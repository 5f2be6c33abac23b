//! Prefix codes for selection indices and time-sharing derandomization.

use ibrelay::codec::{build_huffman, derandomize, elias_delta, elias_delta_decode};
use ibrelay::prob::Pmf;

fn main() -> ibrelay::Result<()> {
    for k in [1u64, 2, 17, 1000] {
        let w = elias_delta(k);
        let (back, used) = elias_delta_decode(w.bits())?;
        println!("elias-delta({k}) = {w} ({used} bits, decodes to {back})");
    }
    let pmf = Pmf::from_probs(vec![0.4, 0.2, 0.2, 0.1, 0.1])?;
    let code = build_huffman(&pmf);
    for k in 1..=5u64 {
        println!("huffman index {k}: {}", code.encode(k)?);
    }
    println!("kraft sum {}", code.kraft_sum());
    let pts = [(0.10, 12.0), (0.02, 15.0), (0.05, 13.0)];
    let d = derandomize(&pts)?;
    println!("time-share points {} and {} with weight {:.4}", d.i, d.j, d.lambda);
    Ok(())
}

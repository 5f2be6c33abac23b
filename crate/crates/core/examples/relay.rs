//! Oblivious relaying over binary symmetric links: the three relay variants.

use ibrelay::bounds::oneshot_scheme_bounds;
use ibrelay::poisson::derive_substream;
use ibrelay::prob::{Kernel, Pmf};
use ibrelay::schemes::{BetaRule, RelayConfig, RelayScheme, RelayVariant};

fn run(cfg: RelayConfig, trials: u64) -> ibrelay::Result<()> {
    let label = cfg.variant.name();
    let scheme = RelayScheme::new(cfg)?;
    let (mut errors, mut bits) = (0u64, 0u64);
    for t in 0..trials {
        let r = scheme.run_trial(derive_substream(5, &format!("{label}{t}")))?;
        errors += r.error as u64;
        bits += r.description_bits;
    }
    let b = oneshot_scheme_bounds(&scheme)?;
    println!(
        "{label:>12}: L = {}, P_e = {:.4} (bound {:.4}), E|W| = {:.2} (bound {:.2})",
        scheme.config().message_count,
        errors as f64 / trials as f64,
        b.pe_bound,
        bits as f64 / trials as f64,
        b.len_bound
    );
    Ok(())
}

fn main() -> ibrelay::Result<()> {
    let p_x = Pmf::uniform(2)?;
    let kernel = Kernel::bsc(0.2)?;

    let mut lossy = RelayConfig::new(p_x.clone(), Kernel::bsc(0.001)?, kernel.clone(), 16, 0.05, RelayVariant::VlLossy);
    lossy.beta = BetaRule::feasible_or(0.0);
    run(lossy.clone(), 1000)?;

    let mut fl = lossy;
    fl.variant = RelayVariant::FlTruncated;
    fl.fl_description_size = Some(16);
    run(fl, 1000)?;

    let mut sim = RelayConfig::new(p_x, Kernel::bsc(0.1)?, kernel, 4, 0.1733, RelayVariant::VlChansim);
    sim.eps_prime = 0.0;
    run(sim, 1000)?;
    Ok(())
}

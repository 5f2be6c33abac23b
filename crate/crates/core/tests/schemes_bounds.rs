mod common;

use common::*;
use ibrelay::bounds::{
    eq9_pml_pe_bound, oneshot_scheme_bounds, psi_tail_over_t, q_func, q_inv, second_order_rates, thm1_fl_bound,
};
use ibrelay::codec::{max_entropy_length_bound, universal_code_constant};
use ibrelay::ibrd::{dispersion_quantities, psi_zbar, solve_ib, solve_noisy_rd, DispersionSet, DistortionMeasure};
use ibrelay::poisson::{derive_substream, UniformStream};
use ibrelay::prob::{compose_markov, information_density, JointPmf, Kernel, Pmf};
use ibrelay::schemes::{
    is_typical, phi_excess, BetaRule, NoisyVLConfig, NoisyVlScheme, RelayConfig, RelayScheme, RelayVariant,
};

#[test]
fn phi_dp_matches_monte_carlo_at_n20() {
    let p = dsbs(0.1);
    let d = DistortionMeasure::hamming(2).unwrap();
    let n = 20;
    let mut u = UniformStream::new(20);
    let y: Vec<usize> = (0..n).map(|_| (u.next_f64() < 0.5) as usize).collect();
    let z: Vec<usize> = (0..n).map(|i| if i % 3 == 0 { 1 - y[i] } else { y[i] }).collect();
    let level = 0.3;
    let exact = phi_excess(&y, &z, level, &p, &d).unwrap();
    let samples = 1_000_000u64;
    let mut hits = 0u64;
    for _ in 0..samples {
        let total: f64 = (0..n)
            .map(|i| {
                let x = if u.next_f64() < 0.9 { y[i] } else { 1 - y[i] };
                d.get(x, z[i])
            })
            .sum();
        hits += (total > n as f64 * level) as u64;
    }
    let est = hits as f64 / samples as f64;
    let sigma = (exact * (1.0 - exact) / samples as f64).sqrt();
    assert!((est - exact).abs() <= 3.0 * sigma, "{est} vs {exact}");
}

#[test]
fn phi_single_letter_and_saturation() {
    let p = dsbs(0.1);
    let d = DistortionMeasure::hamming(2).unwrap();
    assert!((phi_excess(&[0], &[0], 0.5, &p, &d).unwrap() - 0.1).abs() < 1e-12);
    assert_eq!(phi_excess(&[0, 1, 1], &[1, 1, 0], 1.0, &p, &d).unwrap(), 0.0);
}

#[test]
fn typical_set_membership_rate() {
    let p_y = Pmf::from_probs(vec![0.7, 0.3]).unwrap();
    let n = 400;
    let samples = 10_000u64;
    let mut u = UniformStream::new(9);
    let inside = (0..samples)
        .filter(|_| {
            let y: Vec<usize> = (0..n).map(|_| (u.next_f64() >= 0.7) as usize).collect();
            is_typical(&y, &p_y)
        })
        .count() as f64;
    assert!(inside / samples as f64 >= 1.0 - 5.0 / (n as f64).sqrt());
}

fn ternary() -> JointPmf {
    JointPmf::from_rows(vec![vec![0.25, 0.05, 0.03], vec![0.04, 0.2, 0.06], vec![0.02, 0.05, 0.3]]).unwrap()
}

#[test]
fn fl_bound_matches_monte_carlo_of_its_expression() {
    let p = ternary();
    let d = DistortionMeasure::hamming(3).unwrap();
    let reference = Pmf::uniform(3).unwrap();
    let scheme = NoisyVlScheme::new(NoisyVLConfig::new(p.clone(), d.clone(), 0.5, 0.1, reference.clone(), 1)).unwrap();
    let (gamma, l) = (2.0, 8u64);
    let exact = thm1_fl_bound(&scheme, gamma, l).unwrap();
    let p_y = p.col_marginal_probs();
    let samples = 1_000_000u64;
    let mut u = UniformStream::new(1);
    let mut hits = 0u64;
    for _ in 0..samples {
        let r = u.next_f64();
        let y = if r < p_y[0] { 0 } else if r < p_y[0] + p_y[1] { 1 } else { 2 };
        let t = u.next_f64();
        hits += (psi_zbar(&p, &d, y, 0.5, t, &reference).unwrap() >= gamma.log2()) as u64;
    }
    let tail = hits as f64 / samples as f64;
    let est = (tail + (-(l as f64) / gamma).exp()).min(1.0);
    let sigma = (tail * (1.0 - tail) / samples as f64).sqrt();
    assert!((est - exact).abs() <= 3.0 * sigma + 1e-12, "{est} vs {exact}");
    // limits
    assert!(thm1_fl_bound(&scheme, 1e12, l).unwrap() > 0.999_999);
    let big_l = thm1_fl_bound(&scheme, gamma, 1 << 40).unwrap();
    assert!((big_l - psi_tail_over_t(&scheme, gamma).unwrap()).abs() < 1e-12);
}

#[test]
fn pml_bound_special_values() {
    let eight = JointPmf::from_rows((0..8).map(|i| (0..8).map(|j| if i == j { 0.125 } else { 0.0 }).collect()).collect())
        .unwrap();
    assert!((eq9_pml_pe_bound(&information_density(&eight), 1).unwrap() - 0.125).abs() < 1e-12);
    let indep = JointPmf::product(&Pmf::from_probs(vec![0.3, 0.7]).unwrap(), &Pmf::uniform(3).unwrap()).unwrap();
    assert!((eq9_pml_pe_bound(&information_density(&indep), 7).unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn pml_bound_matches_enumeration() {
    let (xu, _) = compose_markov(&dsbs(0.1), &bsc(0.2)).unwrap();
    let mut brute = 0.0;
    for x in 0..2 {
        for u in 0..2 {
            let pxu = xu.get(x, u);
            let px = xu.row_marginal_probs()[x];
            let pu = xu.col_marginal_probs()[u];
            let m = (px * pu / pxu).min(1.0);
            brute += pxu * (1.0 - (1.0 - m).powf(2.5));
        }
    }
    let v = eq9_pml_pe_bound(&information_density(&xu), 4).unwrap();
    assert!((v - brute).abs() < 1e-12);
}

#[test]
fn vl_lossy_bound_substitution() {
    let mut cfg = RelayConfig::new(uniform2(), bsc(0.1), bsc(0.2), 1, 10.0, RelayVariant::VlLossy);
    cfg.message_count = 512;
    cfg.eps_prime = 0.01;
    let b = oneshot_scheme_bounds(&RelayScheme::new(cfg).unwrap()).unwrap();
    assert!((b.pe_bound - (0.01 + 513.0 / 2048.0)).abs() < 1e-12);
    assert!((b.pe_bound - 0.2605).abs() < 1e-4);
    assert!(b.len_bound.is_infinite());
    assert!(b.diagnostic.is_some());
}

#[test]
fn chansim_length_substitution() {
    let mut cfg = RelayConfig::new(uniform2(), bsc(0.1), bsc(0.2), 1, 0.1733, RelayVariant::VlChansim);
    cfg.eps_prime = 0.0;
    let b = oneshot_scheme_bounds(&RelayScheme::new(cfg).unwrap()).unwrap();
    let i = 1.0 - h2(0.2);
    assert!((b.len_bound - (i + (i + 2.0).log2() + 4.0)).abs() < 1e-12);
    assert!((b.len_bound - 5.46589).abs() < 1e-5);
}

/// `E[(1-β)ψ_U]` at `n = 1` by listing, for each `y`, the `u` with
/// `P(ι(X;u) < C | y) <= ε'`.
#[test]
fn vl_lossy_length_matches_enumeration() {
    let p_x = Pmf::from_probs(vec![0.3, 0.7]).unwrap();
    let channel = Kernel::from_rows(vec![vec![0.85, 0.15], vec![0.1, 0.9]]).unwrap();
    let kernel = Kernel::from_rows(vec![vec![0.8, 0.2], vec![0.25, 0.75]]).unwrap();
    let p_xy = JointPmf::from_marginal_and_kernel(&p_x, &channel).unwrap();
    let (xu, _) = compose_markov(&p_xy, &kernel).unwrap();
    let ident = information_density(&xu);
    let p_y = p_xy.col_marginal_probs();
    let p_u = xu.col_marginal_probs();
    for &(c, eps) in &[(0.0, 0.2), (0.1, 0.3), (-0.2, 0.12), (0.3, 0.05)] {
        let mut expected = 0.0;
        for y in 0..2 {
            let mut mass = 0.0;
            for u in 0..2 {
                let miss: f64 = (0..2).filter(|&x| ident.value(x, u) < c).map(|x| p_xy.get(x, y) / p_y[y]).sum();
                if miss <= eps {
                    mass += p_u[u];
                }
            }
            if mass > 0.0 {
                expected += p_y[y] * -mass.log2();
            }
        }
        let mut cfg = RelayConfig::new(p_x.clone(), channel.clone(), kernel.clone(), 1, c, RelayVariant::VlLossy);
        cfg.eps_prime = eps;
        cfg.beta = BetaRule::feasible_or(0.0);
        let relay = RelayScheme::new(cfg).unwrap();
        let got = relay.lossy().unwrap().bounds().expected_psi;
        assert!((got - expected).abs() < 1e-12, "C = {c}: {got} vs {expected}");
        let len = oneshot_scheme_bounds(&relay).unwrap().len_bound;
        assert!((len - max_entropy_length_bound(expected)).abs() < 1e-12);
    }
}

fn relay_cfg(n: usize, variant: RelayVariant) -> RelayConfig {
    let mut cfg = RelayConfig::new(uniform2(), bsc(0.001), bsc(0.2), n, 0.05, variant);
    cfg.beta = BetaRule::feasible_or(0.0);
    cfg
}

#[test]
fn relay_lengths_within_vl_lossy_budget() {
    let relay = RelayScheme::new(relay_cfg(16, RelayVariant::VlLossy)).unwrap();
    let ep = relay.lossy().unwrap().bounds().expected_psi;
    let trials = 3000u64;
    let bits: Vec<f64> = (0..trials)
        .map(|t| relay.run_trial(derive_substream(16, &format!("{t}"))).unwrap().description_bits as f64)
        .collect();
    let (m, sd) = mean_sd(&bits);
    let cap = max_entropy_length_bound(ep) + universal_code_constant(ep) + 3.0 * sd / (trials as f64).sqrt();
    assert!(m <= cap, "{m} vs {cap}");
}

#[test]
fn fixed_length_with_huge_field_behaves_like_variable_length() {
    let vl = RelayScheme::new(relay_cfg(8, RelayVariant::VlLossy)).unwrap();
    let mut cfg = relay_cfg(8, RelayVariant::FlTruncated);
    cfg.fl_description_size = Some(1 << 40);
    let fl = RelayScheme::new(cfg).unwrap();
    for t in 0..500u64 {
        let a = vl.run_trial(t).unwrap();
        let b = fl.run_trial(t).unwrap();
        assert_eq!((a.error, a.index), (b.error, b.index));
        assert!(!b.truncated);
        assert_eq!(b.description_bits, 40);
    }
}

#[test]
fn fixed_length_errors_shrink_with_field_size() {
    let ks = [2u64, 3, 4, 8, 16, 64, 256];
    let schemes: Vec<RelayScheme> = ks
        .iter()
        .map(|&k| {
            let mut cfg = relay_cfg(8, RelayVariant::FlTruncated);
            cfg.fl_description_size = Some(k);
            RelayScheme::new(cfg).unwrap()
        })
        .collect();
    let mut totals = vec![0u64; ks.len()];
    for t in 0..1000u64 {
        let errs: Vec<bool> = schemes.iter().map(|s| s.run_trial(t).unwrap().error).collect();
        for w in errs.windows(2) {
            assert!(w[1] <= w[0], "trial {t}: {errs:?}");
        }
        for (i, e) in errs.iter().enumerate() {
            totals[i] += *e as u64;
        }
    }
    assert!(totals.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn channel_simulation_error_within_pml_bound() {
    let mut cfg = RelayConfig::new(uniform2(), bsc(0.1), bsc(0.2), 2, 0.1733, RelayVariant::VlChansim);
    cfg.eps_prime = 0.05;
    let relay = RelayScheme::new(cfg).unwrap();
    let bound = oneshot_scheme_bounds(&relay).unwrap().pe_bound;
    let trials = 10_000u64;
    let errors = (0..trials).filter(|&t| relay.run_trial(t).unwrap().error).count() as f64;
    assert!(errors / trials as f64 <= three_sigma_above(bound, trials));
}

#[test]
fn lossy_trials_are_reproducible() {
    let mut cfg = NoisyVLConfig::new(dsbs(0.1), DistortionMeasure::hamming(2).unwrap(), 0.35, 0.05, uniform2(), 12);
    cfg.beta = BetaRule::feasible_or(0.0);
    let a = NoisyVlScheme::new(cfg.clone()).unwrap();
    let b = NoisyVlScheme::new(cfg).unwrap();
    for t in 0..200 {
        assert_eq!(a.run_trial(t).unwrap(), b.run_trial(t).unwrap());
    }
}

#[test]
fn q_function_inverse() {
    assert_eq!(q_inv(0.5).unwrap(), 0.0);
    assert!((q_inv(0.1).unwrap() - 1.2816).abs() < 1e-4);
    for &e in &[0.01, 0.1, 0.25] {
        assert!((q_func(q_inv(e).unwrap()) - e).abs() < 1e-10);
    }
    assert_eq!(q_func(0.0), 0.5);
    assert!(q_inv(0.0).is_err() && q_inv(1.0).is_err());
}

#[test]
fn second_order_examples() {
    let p = dsbs(0.1);
    let ib = solve_ib(&p, 0.1733, 3).unwrap();
    let rd = solve_noisy_rd(&p, &DistortionMeasure::hamming(2).unwrap(), 0.25, 2).unwrap();
    let ds = dispersion_quantities(&ib, &rd).unwrap();
    let r = second_order_rates(&ib, &ds, &rd, 10_000, 0.1).unwrap();
    assert!((r.eq3_rate - (ib.ib_bits + ds.vib.sqrt() / 100.0 * q_inv(0.1).unwrap())).abs() < 1e-12);
    let flat = DispersionSet { vib: 0.0, ..ds };
    for &e in &[0.01, 0.2, 0.7] {
        assert_eq!(second_order_rates(&ib, &flat, &rd, 50, e).unwrap().eq3_rate, ib.ib_bits);
    }
    let eps = 0.1;
    for n in [2u64, 5, 10, 1000, 1_000_000] {
        let r = second_order_rates(&ib, &ds, &rd, n, eps).unwrap();
        assert!(r.thm4_len / n as f64 >= (1.0 - eps) * rd.rate_bits);
    }
    assert!(second_order_rates(&ib, &ds, &rd, 1, eps).is_err());
}

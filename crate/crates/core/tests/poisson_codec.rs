mod common;

use common::*;
use ibrelay::codec::{build_huffman, derandomize, elias_delta, elias_delta_len, Codeword};
use ibrelay::poisson::{
    derive_substream, pfr_select, pml_argmin, PmfRatio, PoissonStream, ProposalStream, SelectionTarget, UniformStream,
};
use ibrelay::prob::{compose_markov, entropy, information_density, Pmf};

#[test]
fn first_arrival_exceeds_one_with_prob_inv_e() {
    let seeds = 100_000u64;
    let hits = (0..seeds)
        .filter(|&s| PoissonStream::new(derive_substream(s, "t1")).nth_arrival(1) > 1.0)
        .count() as f64;
    let p = (-1.0f64).exp();
    let sigma = (p * (1.0 - p) / seeds as f64).sqrt();
    assert!((hits / seeds as f64 - p).abs() <= 3.0 * sigma);
}

#[test]
fn fifth_arrival_has_mean_five() {
    let seeds = 10_000u64;
    let xs: Vec<f64> = (0..seeds)
        .map(|s| PoissonStream::new(derive_substream(s, "t5")).nth_arrival(5))
        .collect();
    let (m, _) = mean_sd(&xs);
    // Gamma(5, 1) has variance 5
    assert!((m - 5.0).abs() <= 3.0 * (5.0 / seeds as f64).sqrt(), "mean {m}");
}

#[test]
fn derived_streams_are_uncorrelated() {
    let n = 10_000u64;
    let pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let a = PoissonStream::new(derive_substream(i, "arrivals")).nth_arrival(1);
            let b = PoissonStream::new(derive_substream(i, "proposals")).nth_arrival(1);
            (a, b)
        })
        .collect();
    let (ma, sa) = mean_sd(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let (mb, sb) = mean_sd(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
    let cov = pairs.iter().map(|(a, b)| (a - ma) * (b - mb)).sum::<f64>() / (n as f64 - 1.0);
    let r = cov / (sa * sb);
    assert!(r.abs() <= 3.0 / (n as f64).sqrt(), "correlation {r}");
}

#[test]
fn early_stopping_matches_exhaustive_argmin() {
    let target = Pmf::from_probs(vec![0.6, 0.3, 0.1]).unwrap();
    let proposal = Pmf::from_probs(vec![0.2, 0.3, 0.5]).unwrap();
    let ratio = PmfRatio::new(&target, &proposal).unwrap();
    for s in 0..2000u64 {
        let (sa, sp) = (derive_substream(s, "a"), derive_substream(s, "p"));
        let sel = pfr_select(&ratio, &mut PoissonStream::new(sa), &mut ProposalStream::new(sp, &proposal), u64::MAX)
            .unwrap();
        let mut arr = PoissonStream::new(sa);
        let mut prop = ProposalStream::new(sp, &proposal);
        let mut best = (f64::INFINITY, 0u64);
        for k in 1..=10 * sel.scanned {
            let obj = arr.nth_arrival(k).log2() - ratio.log_ratio(prop.nth(k));
            if obj < best.0 {
                best = (obj, k);
            }
        }
        assert_eq!(sel.index, best.1, "seed {s}");
        assert!(sel.index <= sel.scanned);
    }
}

#[test]
fn selection_replays_from_seeds() {
    let target = Pmf::from_probs(vec![0.9, 0.1]).unwrap();
    let proposal = Pmf::uniform(2).unwrap();
    let ratio = PmfRatio::new(&target, &proposal).unwrap();
    for s in 0..200u64 {
        let run = || {
            pfr_select(
                &ratio,
                &mut PoissonStream::new(derive_substream(s, "arrivals")),
                &mut ProposalStream::new(derive_substream(s, "proposals"), &proposal),
                u64::MAX,
            )
            .unwrap()
        };
        let a = run();
        assert_eq!(a, run());
        let mut replay = ProposalStream::new(derive_substream(s, "proposals"), &proposal);
        assert_eq!(replay.nth(a.index), a.value.as_slice());
    }
}

#[test]
fn pml_error_per_message_within_bound() {
    let (xu, _) = compose_markov(&dsbs(0.1), &bsc(0.2)).unwrap();
    let ident = information_density(&xu);
    let p_x = xu.row_marginal();
    let u_given_x: Vec<Pmf> = (0..2)
        .map(|x| Pmf::normalized(xu.col_alphabet().clone(), xu.row(x).to_vec()).unwrap())
        .collect();
    let l = 4u64;
    let trials = 25_000u64;
    for m in 1..=l {
        // E[min{m 2^{-ι}, 1}]
        let mut bound = 0.0;
        for x in 0..2 {
            for u in 0..2 {
                bound += xu.get(x, u) * (m as f64 * (-ident.value(x, u)).exp2()).min(1.0);
            }
        }
        let mut errors = 0u64;
        for t in 0..trials {
            let s = derive_substream(m, &format!("pml{t}"));
            let codebook = ProposalStream::new(derive_substream(s, "codebook"), &p_x);
            let letter = |k: u64| {
                let mut b = Vec::with_capacity(1);
                codebook.sample_at(k, &mut b);
                b[0]
            };
            let u = u_given_x[letter(m)].sample_with(UniformStream::new(derive_substream(s, "ch")).next_f64());
            let mut arrivals = PoissonStream::new(derive_substream(s, "arrivals"));
            errors += (pml_argmin(l, |k| ident.value(letter(k), u), &mut arrivals, None).index != m) as u64;
        }
        let pe = errors as f64 / trials as f64;
        assert!(pe <= three_sigma_above(bound, trials), "m = {m}: {pe} vs {bound}");
    }
}

#[test]
fn pml_point_mass_target_finds_message() {
    let mut arrivals = PoissonStream::new(3);
    let out = pml_argmin(5, |k| if k == 4 { 1.0 } else { f64::NEG_INFINITY }, &mut arrivals, Some(1.0));
    assert_eq!(out.index, 4);
    assert!(!out.all_zero);
    let none = pml_argmin(5, |_| f64::NEG_INFINITY, &mut arrivals, None);
    assert!(none.all_zero);
    assert_eq!(none.index, 1);
}

#[test]
fn elias_delta_reference_words() {
    let text = |k| elias_delta(k).to_string();
    assert_eq!(text(1), "1");
    assert_eq!(text(17), "001010001");
    for k in 1..=1_000_000u64 {
        let l = elias_delta_len(k) as f64;
        let lg = (k as f64).log2();
        assert!(l <= lg + 2.0 * (lg + 1.0).log2() + 2.0 + 1e-9, "k = {k}");
    }
}

#[test]
fn huffman_random_eight_symbols() {
    let mut s = 0x1234_5678u64;
    for _ in 0..200 {
        let w: Vec<f64> = (0..8)
            .map(|_| {
                s = derive_substream(s, "w");
                (s >> 11) as f64 / (1u64 << 53) as f64 + 1e-6
            })
            .collect();
        let tot: f64 = w.iter().sum();
        let pmf = Pmf::from_probs(w.iter().map(|v| v / tot).collect()).unwrap();
        let code = build_huffman(&pmf);
        let el: f64 = (0..8).map(|i| pmf.get(i) * code.len_of(i as u64 + 1).unwrap() as f64).sum();
        let h = entropy(&pmf);
        assert!(el >= h - 1e-12 && el <= h + 1.0);
    }
    assert_eq!(build_huffman(&Pmf::uniform(1).unwrap()).len_of(1).unwrap(), 0);
}

#[test]
fn codewords_print_as_bits() {
    let w = Codeword::new(vec![true, false, true]);
    assert_eq!(w.to_string(), "101");
    assert_eq!("101".parse::<Codeword>().unwrap(), w);
    assert!("10x".parse::<Codeword>().is_err());
}

#[test]
fn derandomize_two_points_is_the_mean() {
    let r = derandomize(&[(1.0, 0.1), (3.0, 0.3)]).unwrap();
    let comb = r.lambda * [1.0, 3.0][r.i] + (1.0 - r.lambda) * [1.0, 3.0][r.j];
    assert!((comb - 2.0).abs() < 1e-12);
    assert!((r.lambda - 0.5).abs() < 1e-12);
    let one = derandomize(&[(2.0, 0.5)]).unwrap();
    assert_eq!((one.i, one.j, one.lambda), (0, 0, 1.0));
}

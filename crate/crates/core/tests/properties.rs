use proptest::prelude::*;

use ibrelay::codec::{build_huffman, derandomize, elias_delta, elias_delta_decode, elias_delta_len};
use ibrelay::experiment::{wilson_interval, Z95};
use ibrelay::ibrd::psi_mask;
use ibrelay::poisson::pfr_select_pmf;
use ibrelay::prob::{compose_markov, kl, mutual_information, JointPmf, Kernel, Pmf};
use ibrelay::schemes::block_params;

fn weights(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..1.0, len).prop_filter("some mass", |w| w.iter().sum::<f64>() > 1e-3)
}

fn pmf(len: std::ops::RangeInclusive<usize>) -> impl Strategy<Value = Pmf> {
    weights(len).prop_map(|w| {
        let s: f64 = w.iter().sum();
        Pmf::from_probs(w.iter().map(|v| v / s).collect()).unwrap()
    })
}

fn joint() -> impl Strategy<Value = JointPmf> {
    (2usize..=4, 2usize..=4).prop_flat_map(|(r, c)| {
        weights(r * c..=r * c).prop_map(move |w| {
            let s: f64 = w.iter().sum();
            JointPmf::from_rows(w.chunks(c).map(|row| row.iter().map(|v| v / s).collect()).collect()).unwrap()
        })
    })
}

fn kernel(rows: usize, cols: usize) -> impl Strategy<Value = Kernel> {
    prop::collection::vec(prop::collection::vec(0.01f64..1.0, cols), rows).prop_map(|m| {
        Kernel::from_rows(
            m.into_iter()
                .map(|r| {
                    let s: f64 = r.iter().sum();
                    r.iter().map(|v| v / s).collect()
                })
                .collect(),
        )
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn mutual_information_is_nonnegative(p in joint()) {
        let i = mutual_information(&p);
        prop_assert!(i >= -1e-12);
        let h_rows: f64 = p.row_marginal_probs().iter().filter(|v| **v > 0.0).map(|v| -v * v.log2()).sum();
        prop_assert!(i <= h_rows + 1e-9);
    }

    #[test]
    fn divergence_is_nonnegative(p in pmf(3..=3), q in pmf(3..=3)) {
        let q = Pmf::from_probs(q.probs().iter().map(|v| 0.9 * v + 0.1 / 3.0).collect()).unwrap();
        prop_assert!(kl(&p, &q).unwrap() >= -1e-12);
        prop_assert!(kl(&p, &p).unwrap().abs() <= 1e-12);
    }

    #[test]
    fn markov_composition_preserves_mass_and_processes_data(
        (p, k) in joint().prop_flat_map(|p| { let c = p.n_cols(); (Just(p), kernel(c, 3)) })
    ) {
        let (xu, yu) = compose_markov(&p, &k).unwrap();
        prop_assert!((xu.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!((yu.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(mutual_information(&xu) <= mutual_information(&p) + 1e-10);
        prop_assert!(mutual_information(&xu) <= mutual_information(&yu) + 1e-10);
    }

    #[test]
    fn huffman_is_prefix_free_with_kraft_one(p in pmf(2..=12)) {
        let code = build_huffman(&p);
        prop_assert!(code.is_prefix_free());
        prop_assert!((code.kraft_sum() - 1.0).abs() <= 1e-12);
        let mean: f64 = (0..p.len()).map(|i| p.get(i) * code.len_of(i as u64 + 1).unwrap() as f64).sum();
        let h: f64 = p.probs().iter().filter(|v| **v > 0.0).map(|v| -v * v.log2()).sum();
        prop_assert!(mean <= h + 1.0 + 1e-9);
        for i in 0..p.len() as u64 {
            let w = code.encode(i + 1).unwrap();
            prop_assert_eq!(code.decode_exact(&w).unwrap(), i + 1);
        }
    }

    #[test]
    fn elias_delta_roundtrip_and_length(k in 1u64..u64::MAX) {
        let w = elias_delta(k);
        prop_assert_eq!(w.len(), elias_delta_len(k));
        prop_assert_eq!(elias_delta_decode(w.bits()).unwrap(), (k, w.len()));
        let lg = (k as f64).log2();
        prop_assert!(w.len() as f64 <= lg + 2.0 * (lg + 1.0).log2() + 2.0 + 1e-9);
    }

    #[test]
    fn derandomized_point_dominates_mean(pts in prop::collection::vec((0.0f64..1.0, 0.0f64..50.0), 1..12)) {
        let d = derandomize(&pts).unwrap();
        let n = pts.len() as f64;
        let mean = pts.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
        prop_assert!((0.0..=1.0).contains(&d.lambda));
        let c = (
            d.lambda * pts[d.i].0 + (1.0 - d.lambda) * pts[d.j].0,
            d.lambda * pts[d.i].1 + (1.0 - d.lambda) * pts[d.j].1,
        );
        prop_assert!(c.0 <= mean.0 + 1e-9 && c.1 <= mean.1 + 1e-9, "{:?} vs {:?}", c, mean);
    }

    #[test]
    fn psi_shrinks_when_mask_grows(r in pmf(5..=5), a in prop::collection::vec(any::<bool>(), 5), b in prop::collection::vec(any::<bool>(), 5)) {
        let small: Vec<bool> = a.iter().zip(&b).map(|(x, y)| *x && *y).collect();
        let big = a;
        let ps = psi_mask(&small, &r).unwrap();
        let pb = psi_mask(&big, &r).unwrap();
        prop_assert!(pb <= ps || (pb.is_infinite() && ps.is_infinite()));
        prop_assert!(pb >= 0.0);
    }

    #[test]
    fn wilson_interval_brackets_estimate(n in 1u64..5000, frac in 0.0f64..=1.0) {
        let k = ((n as f64) * frac).floor() as u64;
        let (lo, hi) = wilson_interval(k, n, Z95);
        let p = k as f64 / n as f64;
        prop_assert!(0.0 <= lo && lo <= p && p <= hi && hi <= 1.0);
    }

    #[test]
    fn block_params_sum_to_eps(n in 1usize..1_000_000, ny in 1usize..5, eps in 0.001f64..0.999) {
        if let Ok(b) = block_params(n, ny, eps) {
            prop_assert!(b.eps3 >= 0.0);
            prop_assert!((b.total() - eps).abs() <= 4.0 * f64::EPSILON);
            prop_assert!(b.eps1 > 0.0 && b.eps2 > 0.0);
        }
    }

    #[test]
    fn pfr_is_a_function_of_its_seeds(t in pmf(2..=5), s1 in any::<u64>(), s2 in any::<u64>()) {
        let q = Pmf::uniform(t.len()).unwrap();
        let a = pfr_select_pmf(&t, &q, s1, s2).unwrap();
        prop_assert_eq!(&a, &pfr_select_pmf(&t, &q, s1, s2).unwrap());
        prop_assert!(t.get(a.value[0]) > 0.0);
        prop_assert!(a.index >= 1 && a.index <= a.scanned);
    }
}

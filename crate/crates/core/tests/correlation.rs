use cof_core::corr::{plcc, rank_transform, srocc};
use proptest::prelude::*;

fn pair(max_len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3..=max_len).prop_flat_map(|n| {
        (
            prop::collection::vec(-100.0f64..100.0, n),
            prop::collection::vec(-100.0f64..100.0, n),
        )
    })
}

fn tied_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (3usize..=30).prop_flat_map(|n| {
        (
            prop::collection::vec((1u8..=5).prop_map(f64::from), n),
            prop::collection::vec((1u8..=5).prop_map(f64::from), n),
        )
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn bounded_and_symmetric((a, b) in pair(50)) {
        for f in [plcc, srocc] {
            let ab = f(&a, &b).unwrap().value;
            let ba = f(&b, &a).unwrap().value;
            prop_assert!((-1.0..=1.0).contains(&ab));
            prop_assert!((ab - ba).abs() <= 1e-12);
        }
    }

    #[test]
    fn tied_scores_bounded((a, b) in tied_pair()) {
        let s = srocc(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&s.value));
        if s.degenerate {
            prop_assert_eq!(s.value, 0.0);
        }
    }

    #[test]
    fn srocc_invariant_under_monotone_maps((a, b) in pair(40)) {
        let base = srocc(&a, &b).unwrap().value;
        let mapped: Vec<f64> = a.iter().map(|v| (v / 50.0).exp() * 3.0 + 1.0).collect();
        prop_assert!((srocc(&mapped, &b).unwrap().value - base).abs() <= 1e-12);
    }

    #[test]
    fn plcc_invariant_under_positive_affine_maps((a, b) in pair(40), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
        let base = plcc(&a, &b).unwrap().value;
        let mapped: Vec<f64> = a.iter().map(|v| v * scale + shift).collect();
        prop_assert!((plcc(&mapped, &b).unwrap().value - base).abs() <= 1e-9);
    }

    #[test]
    fn ranks_sum_to_triangular_number(a in prop::collection::vec((1u8..=5).prop_map(f64::from), 1..60)) {
        let n = a.len() as f64;
        let r = rank_transform(&a).unwrap();
        prop_assert!((r.iter().sum::<f64>() - n * (n + 1.0) / 2.0).abs() <= 1e-9);
    }

    #[test]
    fn distinct_values_match_closed_form(perm in Just((0..12).collect::<Vec<usize>>()).prop_shuffle()) {
        // Spearman without ties: 1 - 6 sum d^2 / (n (n^2 - 1)).
        let a: Vec<f64> = (0..perm.len()).map(|i| i as f64).collect();
        let b: Vec<f64> = perm.iter().map(|&i| i as f64).collect();
        let n = a.len() as f64;
        let d2: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
        let closed = 1.0 - 6.0 * d2 / (n * (n * n - 1.0));
        prop_assert!((srocc(&a, &b).unwrap().value - closed).abs() <= 1e-12);
    }
}

#[test]
fn reversed_is_minus_one_and_constant_is_degenerate() {
    assert_eq!(srocc(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().value, -1.0);
    let c = plcc(&[2.0, 2.0, 2.0], &[1.0, 2.0, 3.0]).unwrap();
    assert!(c.degenerate);
    assert_eq!(c.value, 0.0);
}

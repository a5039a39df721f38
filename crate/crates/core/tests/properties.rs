use num_complex::Complex64;
use proptest::prelude::*;

use interleave::analytic::{lt_antenna_basic, lt_beam_modified, lt_iid};
use interleave::channel_models::build_exponential_covariance;
use interleave::spectra::{prefix_spectrum, EigenvalueGroups};
use interleave::special::{marcum_q1, wcs_cdf, wcs_pdf};

fn expand(g: &EigenvalueGroups) -> Vec<f64> {
    g.iter().flat_map(|(v, r)| std::iter::repeat_n(v, r)).collect()
}

fn spectrum() -> impl Strategy<Value = EigenvalueGroups> {
    prop::collection::btree_set(1u32..200, 1..5).prop_flat_map(|set| {
        let values: Vec<f64> = set.into_iter().rev().map(|v| v as f64 / 40.0).collect();
        let n = values.len();
        (Just(values), prop::collection::vec(1usize..4, n))
            .prop_map(|(v, m)| EigenvalueGroups::new(v, m).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prefix_spectra_interlace(m in 2usize..24, r in 0.05f64..0.95, phase in -3.0f64..3.0) {
        let cov = build_exponential_covariance(m + 1, Complex64::from_polar(r, phase)).unwrap();
        let small = expand(&prefix_spectrum(&cov, &(0..m).collect::<Vec<_>>()).unwrap());
        let big = expand(&prefix_spectrum(&cov, &(0..=m).collect::<Vec<_>>()).unwrap());
        prop_assert_eq!(small.len(), m);
        prop_assert_eq!(big.len(), m + 1);
        for i in 0..m {
            prop_assert!(big[i] >= small[i] - 1e-9);
            prop_assert!(small[i] >= big[i + 1] - 1e-9);
        }
    }

    #[test]
    fn wcs_cdf_is_a_distribution(g in spectrum(), x in 0.0f64..40.0, dx in 0.0f64..5.0) {
        let (a, b) = (wcs_cdf(&g, x), wcs_cdf(&g, x + dx));
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a - 1e-12);
        prop_assert!(wcs_pdf(&g, x) >= -1e-12);
    }

    #[test]
    fn larger_eigenvalues_lower_the_cdf(g in spectrum(), k in 0usize..4, bump in 0.01f64..2.0, x in 0.1f64..30.0) {
        let k = k % g.len();
        let mut values = g.values().to_vec();
        values[k] += bump;
        prop_assume!(values.iter().enumerate().all(|(i, v)| i == k || (v - values[k]).abs() > 1e-3));
        let raised = EigenvalueGroups::new(values, g.multiplicities().to_vec()).unwrap();
        prop_assert!(wcs_cdf(&raised, x) <= wcs_cdf(&g, x) + 1e-10);
    }

    #[test]
    fn wcs_cdf_derivative_is_pdf(g in spectrum(), x in 0.5f64..20.0) {
        let h = 1e-4;
        let numeric = (wcs_cdf(&g, x + h) - wcs_cdf(&g, x - h)) / (2.0 * h);
        prop_assert!((numeric - wcs_pdf(&g, x)).abs() < 1e-6);
    }

    #[test]
    fn marcum_is_monotone(a in 0.0f64..12.0, b in 0.0f64..12.0, d in 0.0f64..2.0) {
        let q = marcum_q1(a, b);
        prop_assert!((0.0..=1.0).contains(&q));
        prop_assert!(marcum_q1(a, b + d) <= q + 1e-13);
        prop_assert!(marcum_q1(a + d, b) >= q - 1e-13);
    }

    #[test]
    fn lengths_grow_with_threshold(m in 2usize..24, r in 0.0f64..0.9, alpha in 0.0f64..30.0, step in 0.1f64..5.0) {
        let cov = build_exponential_covariance(m, Complex64::new(r, 0.0)).unwrap();
        let lo = lt_beam_modified(&cov, alpha).unwrap().value;
        let hi = lt_beam_modified(&cov, alpha + step).unwrap().value;
        prop_assert!(hi >= lo - 1e-9);
        prop_assert!((1.0 - 1e-9..=m as f64 + 1e-9).contains(&lo));
        let a = lt_antenna_basic(&cov, alpha).unwrap().value;
        prop_assert!((1.0 - 1e-9..=m as f64 + 1e-9).contains(&a));
    }
}

#[test]
fn modified_beam_length_falls_with_m_once_outage_vanishes() {
    let mut checked = 0;
    for (r, alpha) in [(0.4, 3.0), (0.4, 7.0), (0.8, 3.0), (0.8, 7.0)] {
        let lengths: Vec<(f64, f64)> = (2..=64)
            .map(|m| {
                let cov = build_exponential_covariance(m, Complex64::new(r, 0.0)).unwrap();
                let full = prefix_spectrum(&cov, &(0..m).collect::<Vec<_>>()).unwrap();
                (lt_beam_modified(&cov, alpha).unwrap().value, wcs_cdf(&full, alpha))
            })
            .collect();
        for w in lengths.windows(2) {
            if w[0].1 < 1e-12 {
                assert!(w[1].0 <= w[0].0 + 1e-9, "r={r}: {} then {}", w[0].0, w[1].0);
                checked += 1;
            }
        }
    }
    assert!(checked > 100, "{checked}");
}

#[test]
fn zero_threshold_trains_one_antenna() {
    let cov = build_exponential_covariance(16, Complex64::new(0.6, 0.0)).unwrap();
    assert_eq!(lt_beam_modified(&cov, 0.0).unwrap().value, 1.0);
    assert_eq!(lt_antenna_basic(&cov, 0.0).unwrap().value, 1.0);
    assert_eq!(lt_iid(16, 0.0).unwrap().value, 1.0);
}

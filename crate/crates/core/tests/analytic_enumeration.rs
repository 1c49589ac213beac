mod common;

use common::{cycle_counts, enumeration_max_error, permutations};
use kcycles::analytic::nu_nk;

#[test]
fn permutation_generator_is_complete() {
    for n in 1..=6 {
        let all = permutations(n);
        let expected: usize = (1..=n).product();
        assert_eq!(all.len(), expected);
        let mut sorted = all.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), expected);
    }
}

#[test]
fn model_matches_weighted_enumeration() {
    let err = enumeration_max_error(7, &[0.0, 0.3, 1.0, 1.7]);
    assert!(err <= 1e-10, "largest relative error {err:e}");
}

#[test]
fn cycle_totals_match_nu() {
    for n in 1..=8 {
        let mut totals = vec![0u64; n + 1];
        for p in permutations(n) {
            for (k, c) in cycle_counts(&p).into_iter().enumerate() {
                totals[k] += c as u64;
            }
        }
        for k in 1..=n {
            assert_eq!(nu_nk(n, k).unwrap(), totals[k], "n={n} k={k}");
        }
    }
}

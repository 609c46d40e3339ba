mod common;

use conflux_core::ahp::{aggregate_group, evaluate, prioritize, revise_matrix, validate_pairwise, AhpError};
use conflux_core::{PairwiseMatrix, RandomIndexTable};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn weights_strategy() -> impl Strategy<Value = Vec<f64>> {
    (2usize..=9).prop_flat_map(|n| prop::collection::vec(0.05f64..20.0, n))
}

fn scale_value() -> impl Strategy<Value = f64> {
    prop_oneof![
        (1u32..=9).prop_map(f64::from),
        (2u32..=9).prop_map(|k| 1.0 / f64::from(k))
    ]
}

fn scale_matrix() -> impl Strategy<Value = PairwiseMatrix> {
    (3usize..=9).prop_flat_map(|n| {
        prop::collection::vec(scale_value(), n * (n - 1) / 2)
            .prop_map(move |upper| PairwiseMatrix::from_scale(common::labels(n), &upper).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn consistent_matrix_is_a_fixed_point(w in weights_strategy()) {
        let n = w.len();
        let m = PairwiseMatrix::from_weights(common::labels(n), &w).unwrap();
        let r = prioritize(&m, &RandomIndexTable::default()).unwrap();
        let total: f64 = w.iter().sum();
        for (got, want) in r.weights.iter().zip(&w) {
            prop_assert!((got - want / total).abs() < 1e-9);
        }
        prop_assert!((r.lambda_max - n as f64).abs() < 1e-9);
        prop_assert!(r.cr.abs() < 1e-9);
    }

    #[test]
    fn lambda_max_at_least_n(m in scale_matrix()) {
        let r = evaluate(&m, &RandomIndexTable::default()).unwrap();
        prop_assert!(r.lambda_max >= m.n() as f64 - 1e-9);
        prop_assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(r.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn weights_follow_permutation(m in scale_matrix(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut perm: Vec<usize> = (0..m.n()).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let p = m.permuted(&perm).unwrap();
        let table = RandomIndexTable::default();
        let a = evaluate(&m, &table).unwrap();
        let b = evaluate(&p, &table).unwrap();
        for (k, &old) in perm.iter().enumerate() {
            prop_assert!((b.weights[k] - a.weights[old]).abs() < 1e-12);
        }
        prop_assert!((a.cr - b.cr).abs() < 1e-9);
    }

    #[test]
    fn aggregation_stays_reciprocal(ms in (3usize..=6).prop_flat_map(|n| {
        prop::collection::vec(
            prop::collection::vec(scale_value(), n * (n - 1) / 2)
                .prop_map(move |u| PairwiseMatrix::from_scale(common::labels(n), &u).unwrap()),
            1..5,
        )
    })) {
        let agg = aggregate_group(&ms).unwrap();
        prop_assert!(validate_pairwise(&agg).is_ok());
        for i in 0..agg.n() {
            for j in 0..agg.n() {
                let lo = ms.iter().map(|m| m.get(i, j)).fold(f64::INFINITY, f64::min);
                let hi = ms.iter().map(|m| m.get(i, j)).fold(0.0, f64::max);
                prop_assert!(agg.get(i, j) >= lo * (1.0 - 1e-12) && agg.get(i, j) <= hi * (1.0 + 1e-12));
            }
        }
    }

    #[test]
    fn revision_lowers_cr_monotonically(m in scale_matrix()) {
        let table = RandomIndexTable::default();
        match revise_matrix(&m, &table, 40) {
            Ok(trace) => {
                prop_assert!(trace.cr_history.windows(2).all(|w| w[1] < w[0]));
                prop_assert!(*trace.cr_history.last().unwrap() <= 0.1);
                prop_assert!(prioritize(&trace.matrix, &table).is_ok());
                prop_assert!(validate_pairwise(&trace.matrix).is_ok());
            }
            Err(AhpError::RevisionDiverged { .. }) => {}
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn geometric_mean_tracks_eigenvector_near_the_gate() {
    // Wider judgement noise than the acceptance run, so more matrices sit
    // close to CR = 0.1.
    let table = RandomIndexTable::default();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut checked = 0;
    for n in (3..=9).cycle().take(20_000) {
        let m = common::random_scale_matrix(&mut rng, n);
        let r = evaluate(&m, &table).unwrap();
        if r.cr > 0.1 || r.cr < 0.05 {
            continue;
        }
        checked += 1;
        let (oracle, lambda) = common::power_iteration(&m);
        for (a, b) in r.weights.iter().zip(&oracle) {
            assert!(
                (a - b).abs() <= 0.02,
                "n={n} cr={} gm={:?} eig={:?}",
                r.cr,
                r.weights,
                oracle
            );
        }
        assert!(r.lambda_max >= n as f64 - 1e-9 && lambda >= n as f64 - 1e-9);
    }
    assert!(checked > 50, "only {checked} matrices near the gate");
}

#[test]
fn unsupported_dimension_rejected() {
    let m = PairwiseMatrix::uniform(common::labels(10)).unwrap();
    assert_eq!(
        prioritize(&m, &RandomIndexTable::default()).unwrap_err(),
        AhpError::UnsupportedDimension(10)
    );
}

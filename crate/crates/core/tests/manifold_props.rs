mod common;
mod oracles;

use common::*;
use proptest::prelude::*;
use qrpca::manifold::{low_rank_update, tangent_compact, weighted_shrink, LowRankFactors};
use qrpca::quaternion::qsvd;

fn factors(seed: u64, m: usize, t: usize) -> LowRankFactors {
    let mut r = rng(seed);
    LowRankFactors::new(
        unit_column(&mut r, m),
        vec![1.0 + (seed % 7) as f64],
        unit_column(&mut r, t),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn compact_projection_equals_dense(seed in any::<u64>(), m in 2usize..60, t in 2usize..20) {
        let f = factors(seed, m, t);
        let y = random_q(&mut rng(seed ^ 9), m, t);
        let compact = tangent_compact(&y, &f).unwrap().expand(&f);
        let dense = oracles::dense_tangent_projection(&y, &f.u, &f.v);
        prop_assert!((&compact - &dense).frobenius_norm() <= 1e-8 * dense.frobenius_norm());
    }

    #[test]
    fn update_output_is_pure_rank_one(seed in any::<u64>(), m in 2usize..60, t in 2usize..20, mu in 0.5..20.0f64) {
        let f = factors(seed, m, t);
        let y = random_q(&mut rng(seed ^ 5), m, t).pure_part();
        let (l, next) = low_rank_update(&y, &f, mu, 1.0).unwrap();
        prop_assert!(l.re().iter().all(|&v| v == 0.0));
        prop_assert_eq!(next.sigma.len(), 1);
        prop_assert!(next.sigma[0] >= 0.0);
        let rank = qsvd(&next.compose(), None).rank(1e-10);
        prop_assert!(rank <= 1);
    }

    #[test]
    fn weighted_shrink_never_grows(vals in prop::collection::vec(0.0..10.0f64, 1..6), mu in 0.1..10.0f64, c1 in 0.0..3.0f64) {
        let mut sigma = vals;
        sigma.sort_by(|a, b| b.total_cmp(a));
        let out = weighted_shrink(&sigma, mu, c1);
        for (o, s) in out.iter().zip(&sigma) {
            prop_assert!(*o >= 0.0 && o <= s);
        }
    }
}

#[test]
fn factors_stay_orthonormal_over_many_updates() {
    let mut r = rng(11);
    let (m, t) = (80, 12);
    let mut f = factors(3, m, t);
    let target = random_q(&mut r, m, t).pure_part();
    for k in 0..100 {
        let mut y = target.clone();
        y.scaled_add(0.05, &random_q(&mut r, m, t).pure_part());
        let (_, next) = low_rank_update(&y, &f, 1.0 + k as f64 * 0.1, 1.0).unwrap();
        assert!(
            next.drift() <= 1e-6,
            "iteration {k}: drift {}",
            next.drift()
        );
        f = next;
    }
}

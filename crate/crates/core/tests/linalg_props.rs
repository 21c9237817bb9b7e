mod common;

use common::*;
use proptest::prelude::*;
use rgm::linalg::{direct_traces, IncrementalCache};
use rgm::model::{likelihood_exponent, log_likelihood};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn commit_sequences_match_direct(seed in any::<u64>(), p in 2usize..12, moves in 1usize..80) {
        let err = commit_sequence_error(seed, p, moves);
        prop_assert!(err < 1e-8, "relative error {err}");
    }

    #[test]
    fn reverse_move_restores_determinant(seed in any::<u64>(), p in 2usize..10, step in -0.3f64..0.3) {
        let mut rng = rng(seed);
        let stats = random_stats(30, p, 2, &mut rng);
        let params = random_params(p, 2, &mut rng);
        let mut cache = IncrementalCache::new(&stats, &params, 1000).unwrap();
        let det0 = cache.det_ia;
        let (i, j) = (0, p - 1);
        let old = params.a[(i, j)];
        let new = old + step;
        prop_assume!(cache.det_rank1_update(i, j, old, new).abs() > 1e-6);
        cache.inv_rank1_update(i, j, old, new).unwrap();
        let back = cache.det_rank1_update(i, j, new, old);
        prop_assert!((back - det0).abs() <= 1e-12 * det0.abs().max(1.0), "{back} vs {det0}");
    }

    #[test]
    fn cached_exponent_matches_closed_form(seed in any::<u64>(), p in 1usize..6, k in 1usize..5) {
        let mut rng = rng(seed);
        let stats = random_stats(40, p, k, &mut rng);
        let params = random_params(p, k, &mut rng);
        let cache = IncrementalCache::new(&stats, &params, 1000).unwrap();
        let direct = likelihood_exponent(&stats, &params.a, &params.b, &params.sigma);
        prop_assert!(rel_err(cache.exponent(), direct) < 1e-10);
        prop_assert!(rel_err(cache.log_likelihood(), log_likelihood(&stats, &params)) < 1e-10);
    }

    #[test]
    fn queries_do_not_mutate(seed in any::<u64>(), p in 2usize..6) {
        let mut rng = rng(seed);
        let stats = random_stats(20, p, 2, &mut rng);
        let params = random_params(p, 2, &mut rng);
        let cache = IncrementalCache::new(&stats, &params, 1000).unwrap();
        let before = cache.clone();
        let _ = cache.trace_deltas_a(1, 0, params.a[(1, 0)], 0.3, &stats, &params);
        let _ = cache.trace_deltas_b(0, 1, params.b[(0, 1)], -1.0, &stats, &params);
        let _ = cache.det_rank1_update(0, 1, params.a[(0, 1)], 0.2);
        prop_assert_eq!(cache, before);
    }
}

#[test]
fn periodic_recompute_keeps_traces_exact() {
    let mut rng = rng(11);
    let p = 6;
    let stats = random_stats(60, p, 3, &mut rng);
    let mut params = random_params(p, 3, &mut rng);
    params.a *= 0.3;
    let mut cache = IncrementalCache::new(&stats, &params, 7).unwrap();
    let mut flags = 0;
    for step in 0..200 {
        let i = step % p;
        let j = (i + 1 + step % (p - 1)) % p;
        let old = params.a[(i, j)];
        let new = 0.1 * ((step as f64) * 0.37).sin();
        let t = cache.trace_deltas_a(i, j, old, new, &stats, &params);
        cache.inv_rank1_update(i, j, old, new).unwrap();
        cache.commit_a_traces(t);
        params.a[(i, j)] = new;
        flags += usize::from(cache.take_recompute_flag());
    }
    let actual_moves = cache.commits();
    assert_eq!(flags, actual_moves / 7);
    let direct = direct_traces(&stats, &params.a, &params.b, &params.sigma);
    let cached = [cache.trace1, cache.trace2, cache.trace3, cache.trace4, cache.trace5, cache.trace6];
    for (c, d) in cached.iter().zip(direct.iter()) {
        assert!(rel_err(*c, *d) < 1e-10);
    }
}

mod common;

use common::*;
use proptest::prelude::*;
use rgm::model::{IndividualData, Matrix};
use rgm::sampler::{
    network_motif, run_chain, spike_slab_indicator_probability, ChainInput, GammaTensor, Prior, SamplerConfig,
};
use rgm::sim::worked_example_mask;
use rgm::DesignMask;

#[test]
fn spike_slab_chain_invariants() {
    for seed in [1, 2] {
        check_chain_invariants(seed, Prior::SpikeSlab).unwrap();
    }
}

#[test]
fn threshold_chain_invariants() {
    for seed in [3, 4] {
        check_chain_invariants(seed, Prior::Threshold).unwrap();
    }
}

#[test]
fn different_seeds_differ() {
    let d = worked_example_mask();
    let input = ChainInput::Individual(worked_example_data(5, 1000));
    let cfg = |seed| SamplerConfig { n_iter: 200, n_burnin: 50, seed, ..SamplerConfig::default() };
    let a = run_chain(&input, &d, &cfg(1)).unwrap();
    let b = run_chain(&input, &d, &cfg(2)).unwrap();
    assert_ne!(a.ll_pst, b.ll_pst);
}

#[test]
fn summary_input_matches_individual_input() {
    let d = worked_example_mask();
    let data = worked_example_data(6, 1000);
    let stats = rgm::summarize(&data.x, &data.y).unwrap();
    let cfg = SamplerConfig { n_iter: 300, n_burnin: 100, seed: 9, ..SamplerConfig::default() };
    let a = run_chain(&ChainInput::Individual(data), &d, &cfg).unwrap();
    let b = run_chain(&ChainInput::Summary(stats), &d, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_configurations_are_rejected() {
    let d = worked_example_mask();
    let input = ChainInput::Individual(worked_example_data(7, 200));
    for cfg in [
        SamplerConfig { n_iter: 100, n_burnin: 100, ..SamplerConfig::default() },
        SamplerConfig { n_iter: 0, n_burnin: 0, ..SamplerConfig::default() },
        SamplerConfig { n_iter: 100, n_burnin: 10, thin: 0, ..SamplerConfig::default() },
    ] {
        assert!(run_chain(&input, &d, &cfg).is_err());
    }
    let wrong = DesignMask::identity(5);
    let cfg = SamplerConfig { n_iter: 10, n_burnin: 1, ..SamplerConfig::default() };
    assert!(run_chain(&input, &wrong, &cfg).is_err());
}

fn permuted(data: &IndividualData, d: &DesignMask, perm: &[usize]) -> (IndividualData, DesignMask) {
    let p = perm.len();
    let y = Matrix::from_fn(data.y.nrows(), p, |t, j| data.y[(t, perm[j])]);
    let dn = d.to_numeric();
    let dp = Matrix::from_fn(p, d.k(), |i, l| dn[(perm[i], l)]);
    (IndividualData::new(data.x.clone(), y).unwrap(), DesignMask::from_numeric(&dp))
}

#[test]
fn permutation_equivariance_of_posterior_means() {
    let d = worked_example_mask();
    let data = worked_example_data(8, 10_000);
    let perm = [3, 0, 4, 1, 2];
    let (pdata, pd) = permuted(&data, &d, &perm);
    let cfg = SamplerConfig { n_iter: 10_000, n_burnin: 2_000, seed: 8, ..SamplerConfig::default() };
    let base = run_chain(&ChainInput::Individual(data), &d, &cfg).unwrap();
    let perm_out = run_chain(&ChainInput::Individual(pdata), &pd, &cfg).unwrap();
    for i in 0..5 {
        for j in 0..5 {
            let gap = (perm_out.a_est[(i, j)] - base.a_est[(perm[i], perm[j])]).abs();
            assert!(gap <= 0.02, "a_est gap {gap} at ({i}, {j})");
        }
        for l in 0..d.k() {
            let gap = (perm_out.b_est[(i, l)] - base.b_est[(perm[i], l)]).abs();
            assert!(gap <= 0.02, "b_est gap {gap} at ({i}, {l})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn unit_nu_returns_prior_probability(coef in -10.0f64..10.0, var in 1e-6f64..1e3, incl in 0.0f64..=1.0) {
        prop_assert_eq!(spike_slab_indicator_probability(coef, var, incl, 1.0), incl);
    }

    #[test]
    fn indicator_probability_is_a_probability(coef in -10.0f64..10.0, var in 1e-6f64..1e3, incl in 0.0f64..=1.0, nu in 1e-8f64..1.0) {
        let q = spike_slab_indicator_probability(coef, var, incl, nu);
        prop_assert!((0.0..=1.0).contains(&q));
    }

    #[test]
    fn motif_equals_brute_force(seed in any::<u64>(), p in 1usize..=6, n in 1usize..=200, density in 0.0f64..1.0) {
        let (tensor, motif) = random_tensor_and_motif(seed, p, n, density);
        let slices: Vec<_> = (0..n).map(|s| tensor.slice(s)).collect();
        let hits = slices
            .iter()
            .filter(|g| (0..p).all(|i| (0..p).all(|j| motif[(i, j)] == 0 || g[(i, j)] == 1)))
            .count();
        prop_assert_eq!(network_motif(&motif, &tensor).unwrap(), hits as f64 / n as f64);
    }
}

#[test]
fn motif_shape_and_diagonal_errors() {
    let t = GammaTensor::from_slices(2, &[rgm::model::Indicator::zeros(2, 2)]).unwrap();
    assert!(network_motif(&rgm::model::Indicator::zeros(3, 3), &t).is_err());
    assert!(network_motif(&rgm::model::Indicator::identity(2, 2), &t).is_err());
}

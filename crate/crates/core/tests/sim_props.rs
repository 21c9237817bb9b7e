mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng as _;
use rgm::model::{i_minus, Indicator, Matrix};
use rgm::rng::{stream, DATA_STREAM};
use rgm::sim::{
    auc, classification_metrics, generate_dataset, worked_example_design, worked_example_mask,
    worked_example_network, ErrorDist, SimDesign,
};

fn random_indicator(p: usize, q: f64, rng: &mut rgm::rng::Rng) -> Indicator {
    Indicator::from_fn(p, p, |_, _| u8::from(rng.random_bool(q)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn metrics_match_naive_counts(seed in any::<u64>(), q1 in 0.0f64..1.0, q2 in 0.0f64..1.0) {
        let mut r = rng(seed);
        let truth = random_indicator(10, q1, &mut r);
        let pred = random_indicator(10, q2, &mut r);
        let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
        for i in 0..10 {
            for j in 0..10 {
                if i == j {
                    continue;
                }
                let (t, p) = (truth[(i, j)] == 1, pred[(i, j)] == 1);
                if t && p { tp += 1 }
                if !t && p { fp += 1 }
                if !t && !p { tn += 1 }
                if t && !p { fn_ += 1 }
            }
        }
        let (c, m) = classification_metrics(&truth, &pred).unwrap();
        prop_assert_eq!((c.tp, c.fp, c.tn, c.fn_), (tp, fp, tn, fn_));
        let div = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        prop_assert_eq!(m.tpr, div(tp, tp + fn_));
        prop_assert_eq!(m.fpr, div(fp, fp + tn));
        prop_assert_eq!(m.fdr, div(fp, tp + fp));
        prop_assert!((-1.0..=1.0).contains(&m.mcc));
    }

    #[test]
    fn auc_is_invariant_to_increasing_transforms(seed in any::<u64>(), q in 0.1f64..0.9) {
        let mut r = rng(seed);
        let truth = random_indicator(6, q, &mut r);
        // Coarse scores so that ties occur.
        let scores = Matrix::from_fn(6, 6, |_, _| (r.random_range(0..10) as f64) / 10.0);
        let Ok(base) = auc(&truth, &scores) else { return Ok(()) };
        prop_assert!((0.0..=1.0).contains(&base));
        let transformed = scores.map(|s| (3.0 * s).exp() - 7.0);
        prop_assert_eq!(auc(&truth, &transformed).unwrap(), base);
        let cubed = scores.map(|s| s.powi(3) + s);
        prop_assert_eq!(auc(&truth, &cubed).unwrap(), base);
    }
}

#[test]
fn simulated_covariance_matches_population() {
    let design = SimDesign { n: 100_000, ..worked_example_design(2024) };
    let a = worked_example_network();
    let d = worked_example_mask();
    let sim = generate_dataset(&a, &d, &design, &mut stream(2024, DATA_STREAM)).unwrap();
    let stats = rgm::summarize(&sim.data.x, &sim.data.y).unwrap();
    let m_inv = i_minus(&a).try_inverse().unwrap();
    let pop = &m_inv * (&sim.b * &stats.sxx * sim.b.transpose() + Matrix::identity(5, 5)) * m_inv.transpose();
    for (got, want) in stats.syy.iter().zip(pop.iter()) {
        assert!(((got - want) / want).abs() < 0.05, "{got} vs {want}");
    }
}

#[test]
fn heavy_tailed_errors_keep_unit_variance() {
    for dist in [ErrorDist::StudentT(3.0), ErrorDist::Laplace] {
        let design = SimDesign { p: 2, n: 200_000, instrument_effect: Some(0.5), error_dist: dist, ..SimDesign::default() };
        let sim = generate_dataset(&Matrix::zeros(2, 2), &design.design_mask(), &design, &mut stream(3, DATA_STREAM)).unwrap();
        for j in 0..2 {
            let v = sim.data.y.column(j).variance();
            assert!((v - 1.25).abs() < 0.05, "{dist:?}: {v}");
        }
    }
}

#![allow(dead_code)]

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use rgm::model::{i_minus, Matrix, StructuralParams, SummaryStats, Vector};
use rgm::rng::{stream, Rng};

pub fn rng(seed: u64) -> Rng {
    stream(seed, 7)
}

pub fn normal_matrix(rows: usize, cols: usize, rng: &mut Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Random off-diagonal `A` with entries in `(−scale, scale)` and `|det(I − A)|`
/// bounded away from zero.
pub fn random_network(p: usize, scale: f64, rng: &mut Rng) -> Matrix {
    loop {
        let a = Matrix::from_fn(p, p, |i, j| {
            if i == j {
                0.0
            } else {
                rng.random_range(-scale..scale)
            }
        });
        if i_minus(&a).determinant().abs() > 0.1 {
            return a;
        }
    }
}

pub fn random_params(p: usize, k: usize, rng: &mut Rng) -> StructuralParams {
    let mut params = StructuralParams::zeros(p, k);
    params.a = random_network(p, 0.4, rng);
    params.b = normal_matrix(p, k, rng);
    params.sigma = Vector::from_fn(p, |_, _| rng.random_range(0.5..2.0));
    params
}

/// Data drawn from the structural model with the given parameters.
pub fn model_data(params: &StructuralParams, n: usize, rng: &mut Rng) -> (Matrix, Matrix) {
    let (p, k) = (params.p(), params.k());
    let x = normal_matrix(n, k, rng);
    let e = Matrix::from_fn(n, p, |_, j| {
        let z: f64 = StandardNormal.sample(rng);
        z * params.sigma[j].sqrt()
    });
    let m_inv = i_minus(&params.a).try_inverse().unwrap();
    let y = (&x * params.b.transpose() + e) * m_inv.transpose();
    (x, y)
}

pub fn random_stats(n: usize, p: usize, k: usize, rng: &mut Rng) -> SummaryStats {
    let x = normal_matrix(n, k, rng);
    let y = normal_matrix(n, p, rng) + &x * normal_matrix(k, p, rng);
    rgm::summarize(&x, &y).unwrap()
}

/// Sum over rows of `log N(y_t; (I−A)⁻¹B x_t, (I−A)⁻¹Σ(I−A)⁻ᵀ)`.
pub fn reduced_form_log_density(x: &Matrix, y: &Matrix, a: &Matrix, b: &Matrix, sigma: &Vector) -> f64 {
    let p = y.ncols();
    let m_inv = i_minus(a).try_inverse().unwrap();
    let cov = &m_inv * Matrix::from_diagonal(sigma) * m_inv.transpose();
    let chol = cov.cholesky().unwrap();
    let log_det: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
    let mean = x * b.transpose() * m_inv.transpose();
    let mut total = 0.0;
    for t in 0..y.nrows() {
        let r = (y.row(t) - mean.row(t)).transpose();
        let q = r.dot(&chol.solve(&r));
        total += -0.5 * (p as f64 * (2.0 * PI).ln() + log_det + q);
    }
    total
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

pub fn max_rel_err(a: &Matrix, b: &Matrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| rel_err(*x, *y)).fold(0.0, f64::max)
}

/// Applies `moves` random single-entry commits to `A` and `B` through the
/// incremental cache and returns the largest relative gap to a direct
/// recomputation over the determinant, inverse and six traces. Moves that
/// would bring `|det(I − A)|` below 1e-6 are skipped.
pub fn commit_sequence_error(seed: u64, p: usize, moves: usize) -> f64 {
    use rgm::linalg::{direct_traces, exact_det_inv, IncrementalCache};
    let mut rng = rng(seed);
    let k = p;
    let stats = random_stats(50, p, k, &mut rng);
    let mut params = random_params(p, k, &mut rng);
    params.a *= 0.5;
    let mut cache = IncrementalCache::new(&stats, &params, 1_000_000).unwrap();
    for _ in 0..moves {
        if rng.random_bool(0.5) {
            let i = rng.random_range(0..p);
            let l = rng.random_range(0..k);
            let old = params.b[(i, l)];
            let new = old + rng.random_range(-0.5..0.5);
            let t = cache.trace_deltas_b(i, l, old, new, &stats, &params);
            cache.commit_b_traces(t);
            params.b[(i, l)] = new;
        } else {
            let i = rng.random_range(0..p);
            let j = (i + rng.random_range(1..p)) % p;
            let old = params.a[(i, j)];
            let new = old + rng.random_range(-0.2..0.2);
            if cache.det_rank1_update(i, j, old, new).abs() < 1e-6 {
                continue;
            }
            let t = cache.trace_deltas_a(i, j, old, new, &stats, &params);
            cache.inv_rank1_update(i, j, old, new).unwrap();
            cache.commit_a_traces(t);
            params.a[(i, j)] = new;
        }
    }
    let (det, inv) = exact_det_inv(&i_minus(&params.a)).unwrap();
    let traces = direct_traces(&stats, &params.a, &params.b, &params.sigma);
    let cached = [cache.trace1, cache.trace2, cache.trace3, cache.trace4, cache.trace5, cache.trace6];
    let inv_err = (&cache.inv_ia - &inv).amax() / inv.amax();
    let mut worst = ((cache.det_ia - det) / det).abs().max(inv_err);
    for (c, d) in cached.iter().zip(traces.iter()) {
        worst = worst.max(rel_err(*c, *d));
    }
    worst
}

/// Random `A` rescaled to spectral radius `radius`.
pub fn network_with_radius(p: usize, radius: f64, rng: &mut Rng) -> Matrix {
    let a = random_network(p, 1.0, rng);
    let rho = a.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max);
    if rho < 1e-12 {
        a
    } else {
        a * (radius / rho)
    }
}

/// Max-abs error of `a_from_beta` on `Beta = (I − A)⁻¹·diag(b)` with one extra
/// shared instrument, for a random `A` with spectral radius below 0.9.
pub fn beta_round_trip_error(seed: u64, p: usize) -> f64 {
    use rgm::model::DesignMask;
    use rgm::recovery::{a_from_beta, select_beta_columns};
    let mut rng = rng(seed);
    let a = network_with_radius(p, rng.random_range(0.05..0.9), &mut rng);
    let k = p + 1;
    let mut b = Matrix::zeros(p, k);
    let mut mask = Matrix::zeros(p, k);
    for i in 0..p {
        let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
        b[(i, i)] = sign * rng.random_range(0.2..2.0);
        mask[(i, i)] = 1.0;
        mask[(i, p)] = 1.0;
        b[(i, p)] = rng.random_range(-1.0..1.0);
    }
    let beta = i_minus(&a).try_inverse().unwrap() * b;
    let selected = select_beta_columns(&beta, &DesignMask::from_numeric(&mask)).unwrap();
    let recovered = a_from_beta(&selected).unwrap();
    assert!((0..p).all(|i| recovered[(i, i)] == 0.0));
    (recovered - a).amax()
}

/// Worked-example data at a reduced sample size.
pub fn worked_example_data(seed: u64, n: usize) -> rgm::IndividualData {
    use rgm::sim::{generate_dataset, worked_example_design, worked_example_mask, worked_example_network};
    let design = rgm::sim::SimDesign { n, ..worked_example_design(seed) };
    let mut r = stream(seed, rgm::rng::DATA_STREAM);
    generate_dataset(&worked_example_network(), &worked_example_mask(), &design, &mut r)
        .unwrap()
        .data
}

/// Runs one short chain and checks the sampler bookkeeping invariants:
/// the threshold relation and D-masking after every sweep, the acceptance
/// range, cache drift, `gamma_est` as the mean of `gamma_pst`, and seed
/// determinism.
pub fn check_chain_invariants(seed: u64, prior: rgm::sampler::Prior) -> Result<(), String> {
    use rgm::sampler::{run_chain, run_chain_observed, ChainInput, Prior, SamplerConfig};
    use rgm::sim::worked_example_mask;
    let d = worked_example_mask();
    let input = ChainInput::Individual(worked_example_data(seed, 2000));
    let config = SamplerConfig { n_iter: 600, n_burnin: 100, thin: 2, prior, seed, ..SamplerConfig::default() };
    let mut failure: Option<String> = None;
    let out = run_chain_observed(&input, &d, &config, |it, s| {
        if failure.is_some() {
            return;
        }
        for i in 0..s.p() {
            for l in 0..s.k() {
                if !d.get(i, l) && (s.b[(i, l)] != 0.0 || s.b_latent[(i, l)] != 0.0 || s.phi[(i, l)] != 0) {
                    failure = Some(format!("sweep {it}: masked cell ({i}, {l}) is active"));
                }
            }
            if s.a[(i, i)] != 0.0 || s.gamma[(i, i)] != 0 {
                failure = Some(format!("sweep {it}: diagonal ({i}, {i}) is active"));
            }
        }
        if prior == Prior::Threshold {
            if let Some(msg) = threshold_gap(s) {
                failure = Some(format!("sweep {it}: {msg}"));
            }
        }
    })
    .map_err(|e| e.to_string())?;
    if let Some(msg) = failure {
        return Err(msg);
    }
    for (name, v) in [("accpt_a", out.accpt_a), ("accpt_b", out.accpt_b)] {
        if !(0.0..=100.0).contains(&v) {
            return Err(format!("{name} = {v} outside [0, 100]"));
        }
    }
    for v in [out.accpt_t_a, out.accpt_t_b].into_iter().flatten() {
        if !(0.0..=100.0).contains(&v) {
            return Err(format!("threshold acceptance {v} outside [0, 100]"));
        }
    }
    if !(out.max_cache_drift <= 1e-6) {
        return Err(format!("cache drift {}", out.max_cache_drift));
    }
    if out.n_pst() != config.n_pst() || out.ll_pst.len() != config.n_pst() {
        return Err("retained sample count mismatch".into());
    }
    let p = d.p();
    for i in 0..p {
        for j in 0..p {
            let count: usize = (0..out.n_pst()).map(|s| out.gamma_pst.get(i, j, s) as usize).sum();
            let mean = count as f64 / out.n_pst() as f64;
            if out.gamma_est[(i, j)] != mean {
                return Err(format!("gamma_est({i}, {j}) = {} but slice mean is {mean}", out.gamma_est[(i, j)]));
            }
        }
    }
    let again = run_chain(&input, &d, &config).map_err(|e| e.to_string())?;
    if again != out {
        return Err("identical seeds gave different outputs".into());
    }
    Ok(())
}

/// Describes the first violation of `a = ã·1(|ã| > t_A)`, `γ = 1(a ≠ 0)` and
/// the analogous `B` relation, if any.
pub fn threshold_gap(s: &StructuralParams) -> Option<String> {
    use rgm::sampler::kernels::threshold_matrix;
    let a = threshold_matrix(&s.a_latent, s.t_a);
    let b = threshold_matrix(&s.b_latent, s.t_b);
    for ((i, j), &v) in a.iter().enumerate().map(|(idx, v)| ((idx % s.p(), idx / s.p()), v)) {
        if i != j && (s.a[(i, j)] != v || s.gamma[(i, j)] != u8::from(v != 0.0)) {
            return Some(format!("A relation broken at ({i}, {j})"));
        }
    }
    for i in 0..s.p() {
        for l in 0..s.k() {
            if s.phi[(i, l)] != u8::from(s.b[(i, l)] != 0.0) {
                return Some(format!("phi relation broken at ({i}, {l})"));
            }
            if s.b_latent[(i, l)] != 0.0 && s.b[(i, l)] != b[(i, l)] {
                return Some(format!("B relation broken at ({i}, {l})"));
            }
        }
    }
    None
}

/// Random `gamma_pst` tensor with zero diagonals and a random motif.
pub fn random_tensor_and_motif(
    seed: u64,
    p: usize,
    n: usize,
    density: f64,
) -> (rgm::sampler::GammaTensor, rgm::model::Indicator) {
    use rgm::model::Indicator;
    let mut rng = rng(seed);
    let cell = |rng: &mut Rng, i: usize, j: usize, q: f64| u8::from(i != j && rng.random_bool(q));
    let slices: Vec<Indicator> = (0..n)
        .map(|_| Indicator::from_fn(p, p, |i, j| cell(&mut rng, i, j, density)))
        .collect();
    let motif = Indicator::from_fn(p, p, |i, j| cell(&mut rng, i, j, 0.2));
    (rgm::sampler::GammaTensor::from_slices(p, &slices).unwrap(), motif)
}

use rand::Rng as _;
use rand_distr::{Beta, Distribution, StandardNormal};

use super::kernels::{
    accept, evaluate_entry, inverse_gamma, local_variance_full_conditional,
    mh_log_ratio_threshold, sigma_full_conditional, spike_slab_indicator_probability,
    threshold_matrix, truncated_normal_unit, Pending, Target,
};
use super::{ChainInput, ChainOutput, GammaTensor, Prior, SamplerConfig};
use crate::error::{Error, Result};
use crate::linalg::IncrementalCache;
use crate::model::{
    log_likelihood, summarize, validate_design, DesignMask, Indicator, InputMode, Matrix,
    StructuralParams, SummaryStats, ValidationStatus, Vector,
};
use crate::recovery::syy_reconstruct;
use crate::rng::{stream, Rng, CHAIN_STREAM};

const MAX_INIT_ATTEMPTS: usize = 100;
/// Starting value of `t_A` and `t_B`. It sits well below typical effect sizes
/// so that early sweeps are driven by the likelihood. A start at or above the
/// true effects lets `t` drift upward while every latent entry is still
/// inactive, after which no entry can switch on.
pub const INITIAL_THRESHOLD: f64 = 0.01;
/// Relative cache drift above which a warning is recorded.
const DRIFT_WARNING: f64 = 1e-6;

/// Runs one chain on any of the accepted input forms.
pub fn run_chain(input: &ChainInput, d: &DesignMask, config: &SamplerConfig) -> Result<ChainOutput> {
    run_chain_observed(input, d, config, |_, _| {})
}

/// Like [`run_chain`], calling `observe(iteration, state)` after every sweep.
pub fn run_chain_observed<F>(
    input: &ChainInput,
    d: &DesignMask,
    config: &SamplerConfig,
    observe: F,
) -> Result<ChainOutput>
where
    F: FnMut(usize, &StructuralParams),
{
    let mut warnings = config.validate()?;
    let mode = match input {
        ChainInput::Individual(_) => InputMode::Individual,
        ChainInput::Summary(_) => InputMode::SummaryCov,
        ChainInput::Regression(_) => InputMode::BetaSummary,
    };
    let report = validate_design(d, mode).into_result()?;
    if report.status == ValidationStatus::Warning {
        warnings.push(report.message());
    }
    let stats = match input {
        ChainInput::Individual(data) => summarize(&data.x, &data.y)?,
        ChainInput::Summary(s) => s.clone(),
        ChainInput::Regression(r) => {
            let rec = syy_reconstruct(r, d)?;
            warnings.extend(rec.warnings.iter().cloned());
            rec.into_stats(r.sxx.clone(), r.n)?
        }
    };
    if (stats.p(), stats.k()) != (d.p(), d.k()) {
        return Err(Error::Dimension(format!(
            "design is {}×{}, data has {} responses and {} instruments",
            d.p(),
            d.k(),
            stats.p(),
            stats.k()
        )));
    }
    let mut chain = Chain::new(&stats, d, config)?;
    chain.warnings = warnings;
    chain.run(observe)
}

#[derive(Default)]
struct Counter {
    proposed: u64,
    accepted: u64,
}

impl Counter {
    fn record(&mut self, accepted: bool) {
        self.proposed += 1;
        self.accepted += u64::from(accepted);
    }

    fn percent(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            100.0 * self.accepted as f64 / self.proposed as f64
        }
    }
}

struct Sums {
    a: Matrix,
    b: Matrix,
    a0: Matrix,
    b0: Matrix,
    gamma: Matrix,
    phi: Matrix,
    tau: Matrix,
    eta: Matrix,
    rho: Matrix,
    psi: Matrix,
    sigma: Vector,
    t_a: f64,
    t_b: f64,
}

impl Sums {
    fn zeros(p: usize, k: usize) -> Self {
        Self {
            a: Matrix::zeros(p, p),
            b: Matrix::zeros(p, k),
            a0: Matrix::zeros(p, p),
            b0: Matrix::zeros(p, k),
            gamma: Matrix::zeros(p, p),
            phi: Matrix::zeros(p, k),
            tau: Matrix::zeros(p, p),
            eta: Matrix::zeros(p, k),
            rho: Matrix::zeros(p, p),
            psi: Matrix::zeros(p, k),
            sigma: Vector::zeros(p),
            t_a: 0.0,
            t_b: 0.0,
        }
    }

    fn add(&mut self, s: &StructuralParams) {
        self.a += &s.a;
        self.b += &s.b;
        self.a0 += &s.a_latent;
        self.b0 += &s.b_latent;
        self.gamma += s.gamma.map(f64::from);
        self.phi += s.phi.map(f64::from);
        self.tau += &s.tau;
        self.eta += &s.eta;
        self.rho += &s.rho;
        self.psi += &s.psi;
        self.sigma += &s.sigma;
        self.t_a += s.t_a;
        self.t_b += s.t_b;
    }
}

struct Chain<'a> {
    stats: &'a SummaryStats,
    cfg: &'a SamplerConfig,
    params: StructuralParams,
    cache: IncrementalCache,
    rng: Rng,
    b_entries: Vec<(usize, usize)>,
    a_entries: Vec<(usize, usize)>,
    acc_a: Counter,
    acc_b: Counter,
    acc_t_a: Counter,
    acc_t_b: Counter,
    max_drift: f64,
    warnings: Vec<String>,
}

impl<'a> Chain<'a> {
    fn new(stats: &'a SummaryStats, d: &DesignMask, cfg: &'a SamplerConfig) -> Result<Self> {
        let (p, k) = (stats.p(), stats.k());
        let mut rng = stream(cfg.seed, CHAIN_STREAM);
        let mut params = StructuralParams::zeros(p, k);
        params.t_a = INITIAL_THRESHOLD;
        params.t_b = INITIAL_THRESHOLD;
        let b_entries: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| (0..k).map(move |l| (i, l)))
            .filter(|&(i, l)| d.get(i, l))
            .collect();
        let a_entries: Vec<(usize, usize)> = (0..p)
            .flat_map(|i| (0..p).map(move |j| (i, j)))
            .filter(|&(i, j)| i != j)
            .collect();

        for i in 0..p {
            params.tau[(i, i)] = 0.0;
            params.rho[(i, i)] = 0.0;
            for l in 0..k {
                if !d.get(i, l) {
                    params.eta[(i, l)] = 0.0;
                    params.psi[(i, l)] = 0.0;
                }
            }
        }
        for &(i, l) in &b_entries {
            let sxx = stats.sxx[(l, l)];
            let ratio = if sxx > 0.0 { stats.syx[(i, l)] / sxx } else { 0.0 };
            match cfg.prior {
                Prior::SpikeSlab => params.b[(i, l)] = ratio,
                Prior::Threshold => {
                    params.b_latent[(i, l)] = ratio;
                    if ratio.abs() > params.t_b {
                        params.b[(i, l)] = ratio;
                        params.phi[(i, l)] = 1;
                    }
                }
            }
        }
        for j in 0..p {
            params.sigma[j] = stats.syy[(j, j)];
        }
        let mut attempts = 0;
        while !log_likelihood(stats, &params).is_finite() {
            attempts += 1;
            if attempts >= MAX_INIT_ATTEMPTS {
                return Err(Error::Initialization { attempts });
            }
            for j in 0..p {
                let z: f64 = StandardNormal.sample(&mut rng);
                params.sigma[j] = stats.syy[(j, j)].max(1e-6) * z.exp();
            }
        }
        let cache = IncrementalCache::new(stats, &params, cfg.recompute_period)?;
        Ok(Self {
            stats,
            cfg,
            params,
            cache,
            rng,
            b_entries,
            a_entries,
            acc_a: Counter::default(),
            acc_b: Counter::default(),
            acc_t_a: Counter::default(),
            acc_t_b: Counter::default(),
            max_drift: 0.0,
            warnings: Vec::new(),
        })
    }

    fn run<F: FnMut(usize, &StructuralParams)>(mut self, mut observe: F) -> Result<ChainOutput> {
        let (p, k) = (self.stats.p(), self.stats.k());
        let n_pst = self.cfg.n_pst();
        let mut sums = Sums::zeros(p, k);
        let mut ll_pst = Vec::with_capacity(n_pst);
        let mut gamma_pst = GammaTensor::with_capacity(p, n_pst);
        for it in 0..self.cfg.n_iter {
            self.sweep()?;
            observe(it, &self.params);
            if self.cfg.retains(it) {
                sums.add(&self.params);
                ll_pst.push(self.cache.log_likelihood());
                gamma_pst.push(&self.params.gamma)?;
            }
        }
        Ok(self.finish(sums, ll_pst, gamma_pst))
    }

    fn sweep(&mut self) -> Result<()> {
        self.update_b()?;
        if self.cfg.prior == Prior::Threshold {
            self.update_threshold(Target::B)?;
        }
        self.update_sigma();
        self.update_a()?;
        if self.cfg.prior == Prior::Threshold {
            self.update_threshold(Target::A)?;
        }
        Ok(())
    }

    fn beta_draw(&mut self, a: f64, b: f64) -> f64 {
        Beta::new(a, b).expect("beta parameters are positive").sample(&mut self.rng)
    }

    fn update_b(&mut self) -> Result<()> {
        let h = self.cfg.hyper;
        let sd = h.prop_var_b.sqrt();
        for idx in 0..self.b_entries.len() {
            let (i, l) = self.b_entries[idx];
            let current = match self.cfg.prior {
                Prior::SpikeSlab => {
                    let phi = self.params.phi[(i, l)] == 1;
                    let (a, b) = super::beta_indicator_conditional(phi, h.a_psi, h.b_psi);
                    self.params.psi[(i, l)] = self.beta_draw(a, b);
                    let coef = self.params.b[(i, l)];
                    self.params.eta[(i, l)] = local_variance_full_conditional(
                        coef,
                        self.params.eta[(i, l)],
                        phi,
                        h.nu2,
                        &mut self.rng,
                    );
                    let pr = spike_slab_indicator_probability(
                        coef,
                        self.params.eta[(i, l)],
                        self.params.psi[(i, l)],
                        h.nu2,
                    );
                    self.params.phi[(i, l)] = u8::from(self.rng.random::<f64>() < pr);
                    coef
                }
                Prior::Threshold => {
                    let latent = self.params.b_latent[(i, l)];
                    self.params.eta[(i, l)] = local_variance_full_conditional(
                        latent,
                        self.params.eta[(i, l)],
                        true,
                        1.0,
                        &mut self.rng,
                    );
                    latent
                }
            };
            let z: f64 = StandardNormal.sample(&mut self.rng);
            let proposed = current + sd * z;
            let ev = evaluate_entry(
                Target::B,
                i,
                l,
                proposed,
                &self.params,
                self.stats,
                &self.cache,
                self.cfg.prior,
                &h,
            );
            let ok = accept(ev.log_alpha, &mut self.rng);
            self.acc_b.record(ok);
            if ok {
                if let Pending::B(t) = ev.pending {
                    self.cache.commit_b_traces(t);
                }
                self.params.b[(i, l)] = ev.effective;
                if self.cfg.prior == Prior::Threshold {
                    self.params.b_latent[(i, l)] = proposed;
                }
            }
            if self.cfg.prior == Prior::Threshold {
                self.params.phi[(i, l)] = u8::from(self.params.b[(i, l)] != 0.0);
            }
        }
        Ok(())
    }

    fn update_sigma(&mut self) {
        for j in 0..self.stats.p() {
            let (shape, rate) = sigma_full_conditional(j, self.stats, &self.params, &self.cfg.hyper);
            self.params.sigma[j] = inverse_gamma(shape, rate, &mut self.rng);
        }
        self.cache.refresh_traces(self.stats, &self.params);
    }

    fn update_a(&mut self) -> Result<()> {
        let h = self.cfg.hyper;
        let sd = h.prop_var_a.sqrt();
        for idx in 0..self.a_entries.len() {
            let (i, j) = self.a_entries[idx];
            let current = match self.cfg.prior {
                Prior::SpikeSlab => {
                    let gamma = self.params.gamma[(i, j)] == 1;
                    let (a, b) = super::beta_indicator_conditional(gamma, h.a_rho, h.b_rho);
                    self.params.rho[(i, j)] = self.beta_draw(a, b);
                    let coef = self.params.a[(i, j)];
                    self.params.tau[(i, j)] = local_variance_full_conditional(
                        coef,
                        self.params.tau[(i, j)],
                        gamma,
                        h.nu1,
                        &mut self.rng,
                    );
                    let pr = spike_slab_indicator_probability(
                        coef,
                        self.params.tau[(i, j)],
                        self.params.rho[(i, j)],
                        h.nu1,
                    );
                    self.params.gamma[(i, j)] = u8::from(self.rng.random::<f64>() < pr);
                    coef
                }
                Prior::Threshold => {
                    let latent = self.params.a_latent[(i, j)];
                    self.params.tau[(i, j)] = local_variance_full_conditional(
                        latent,
                        self.params.tau[(i, j)],
                        true,
                        1.0,
                        &mut self.rng,
                    );
                    latent
                }
            };
            let z: f64 = StandardNormal.sample(&mut self.rng);
            let proposed = current + sd * z;
            let ev = evaluate_entry(
                Target::A,
                i,
                j,
                proposed,
                &self.params,
                self.stats,
                &self.cache,
                self.cfg.prior,
                &h,
            );
            let mut ok = accept(ev.log_alpha, &mut self.rng);
            if ok {
                if let Pending::A(t) = ev.pending {
                    let old = self.params.a[(i, j)];
                    match self.cache.inv_rank1_update(i, j, old, ev.effective) {
                        Ok(()) => self.cache.commit_a_traces(t),
                        Err(Error::DegenerateUpdate { .. }) => ok = false,
                        Err(e) => return Err(e),
                    }
                }
            }
            self.acc_a.record(ok);
            if ok {
                self.params.a[(i, j)] = ev.effective;
                if self.cfg.prior == Prior::Threshold {
                    self.params.a_latent[(i, j)] = proposed;
                }
            }
            if self.cfg.prior == Prior::Threshold {
                self.params.gamma[(i, j)] = u8::from(self.params.a[(i, j)] != 0.0);
            }
        }
        if self.cache.take_recompute_flag() {
            self.check_drift();
        }
        Ok(())
    }

    fn check_drift(&mut self) {
        let direct = log_likelihood(self.stats, &self.params);
        let cached = self.cache.log_likelihood();
        let drift = (cached - direct).abs() / direct.abs().max(1.0);
        if drift > DRIFT_WARNING && self.max_drift <= DRIFT_WARNING {
            self.warnings.push(format!("cached log-likelihood drifted by {drift:.3e} (relative)"));
        }
        self.max_drift = self.max_drift.max(drift);
    }

    fn update_threshold(&mut self, target: Target) -> Result<()> {
        let h = self.cfg.hyper;
        let sd = h.threshold_prop_var.sqrt();
        let current = match target {
            Target::A => self.params.t_a,
            Target::B => self.params.t_b,
        };
        let proposed = truncated_normal_unit(current, sd, &mut self.rng);
        let la = mh_log_ratio_threshold(target, proposed, &self.params, self.stats, &h)?;
        let ok = accept(la, &mut self.rng);
        match target {
            Target::A => self.acc_t_a.record(ok),
            Target::B => self.acc_t_b.record(ok),
        }
        if !ok {
            return Ok(());
        }
        match target {
            Target::A => {
                self.params.t_a = proposed;
                self.params.a = threshold_matrix(&self.params.a_latent, proposed);
                self.params.gamma = indicator_of(&self.params.a);
            }
            Target::B => {
                self.params.t_b = proposed;
                self.params.b = threshold_matrix(&self.params.b_latent, proposed);
                self.params.phi = indicator_of(&self.params.b);
            }
        }
        self.cache.reset(self.stats, &self.params)
    }

    fn finish(self, s: Sums, ll_pst: Vec<f64>, gamma_pst: GammaTensor) -> ChainOutput {
        let n = gamma_pst.len() as f64;
        let mean = |m: Matrix| m / n;
        let threshold = self.cfg.prior == Prior::Threshold;
        let gamma_est = mean(s.gamma);
        let phi_est = mean(s.phi);
        ChainOutput {
            prior: self.cfg.prior,
            a_est: mean(s.a),
            b_est: mean(s.b),
            z_a_est: calls(&gamma_est),
            z_b_est: calls(&phi_est),
            a0_est: threshold.then(|| mean(s.a0.clone())),
            b0_est: threshold.then(|| mean(s.b0.clone())),
            gamma_est,
            phi_est,
            tau_est: mean(s.tau),
            eta_est: mean(s.eta),
            rho_est: (!threshold).then(|| mean(s.rho.clone())),
            psi_est: (!threshold).then(|| mean(s.psi.clone())),
            t_a_est: threshold.then(|| s.t_a / n),
            t_b_est: threshold.then(|| s.t_b / n),
            sigma_est: s.sigma / n,
            accpt_a: self.acc_a.percent(),
            accpt_b: self.acc_b.percent(),
            accpt_t_a: threshold.then(|| self.acc_t_a.percent()),
            accpt_t_b: threshold.then(|| self.acc_t_b.percent()),
            ll_pst,
            gamma_pst,
            max_cache_drift: self.max_drift,
            warnings: self.warnings,
        }
    }
}

fn indicator_of(m: &Matrix) -> Indicator {
    m.map(|v| u8::from(v != 0.0))
}

fn calls(freq: &Matrix) -> Indicator {
    freq.map(|v| u8::from(v >= 0.5))
}

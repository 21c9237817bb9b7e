use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::Args;
use rgm::model::Indicator;
use rgm::recovery::RegressionSummary;
use rgm::sampler::{run_chain, ChainInput, ChainOutput, Prior, SamplerConfig};
use rgm::{DesignMask, HyperParams, IndividualData, SummaryStats};
use serde::Serialize;

use crate::error::{CliError, CliResult};
use crate::io::{
    indicator_rows, matrix_rows, read_indicator, read_matrix, write_json, write_matrix, write_tensor, TensorFormat,
};
use crate::manifest::{write_manifest, Recorder, MANIFEST_FILE};
use crate::PriorArg;

pub const OUTPUT_FILE: &str = "output.json";
/// The estimated adjacency as a CSV matrix, usable directly as a motif.
pub const ADJACENCY_FILE: &str = "z_a_est.csv";

const MODES: &str = "(--x, --y) | (--syy, --syx, --sxx, --n) | (--sxx, --beta, --sigma-hat, --n)";

#[derive(Debug, Args, Serialize)]
pub struct FitArgs {
    /// Instruments, n × k.
    #[arg(long)]
    pub x: Option<PathBuf>,
    /// Responses, n × p.
    #[arg(long)]
    pub y: Option<PathBuf>,
    /// Yᵀ Y / n, p × p
    #[arg(long)]
    pub syy: Option<PathBuf>,
    /// Yᵀ X / n, p × k
    #[arg(long)]
    pub syx: Option<PathBuf>,
    /// Xᵀ X / n, k × k
    #[arg(long)]
    pub sxx: Option<PathBuf>,
    /// Marginal regression slopes, p × k.
    #[arg(long)]
    pub beta: Option<PathBuf>,
    /// Mean squared errors of the marginal regressions, p × k.
    #[arg(long)]
    pub sigma_hat: Option<PathBuf>,
    /// Sample size for the summary-level modes.
    #[arg(long)]
    pub n: Option<usize>,
    /// Binary p × k instrument design.
    #[arg(long)]
    pub d: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = PriorArg::SpikeAndSlab)]
    pub prior: PriorArg,
    #[arg(long, default_value_t = 10_000)]
    pub iter: usize,
    #[arg(long, default_value_t = 2_000)]
    pub burnin: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = rgm::linalg::DEFAULT_RECOMPUTE_PERIOD)]
    pub recompute_period: usize,
    #[command(flatten)]
    pub hyper: HyperArgs,
    /// Center X and Y columns before summarizing (individual-level input).
    #[arg(long)]
    pub center: bool,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    #[arg(long, value_enum, default_value_t = TensorFormat::Csv)]
    pub tensor_format: TensorFormat,
}

#[derive(Debug, Args, Serialize)]
pub struct HyperArgs {
    #[arg(long, default_value_t = HyperParams::default().a_rho)]
    pub a_rho: f64,
    #[arg(long, default_value_t = HyperParams::default().b_rho)]
    pub b_rho: f64,
    #[arg(long, default_value_t = HyperParams::default().nu1)]
    pub nu1: f64,
    #[arg(long, default_value_t = HyperParams::default().a_psi)]
    pub a_psi: f64,
    #[arg(long, default_value_t = HyperParams::default().b_psi)]
    pub b_psi: f64,
    #[arg(long, default_value_t = HyperParams::default().nu2)]
    pub nu2: f64,
    #[arg(long, default_value_t = HyperParams::default().a_sigma)]
    pub a_sigma: f64,
    #[arg(long, default_value_t = HyperParams::default().b_sigma)]
    pub b_sigma: f64,
    #[arg(long, default_value_t = HyperParams::default().prop_var_a)]
    pub prop_var_a: f64,
    #[arg(long, default_value_t = HyperParams::default().prop_var_b)]
    pub prop_var_b: f64,
    #[arg(long, default_value_t = HyperParams::default().threshold_prop_var)]
    pub threshold_prop_var: f64,
}

impl HyperArgs {
    fn params(&self) -> HyperParams {
        HyperParams {
            a_rho: self.a_rho,
            b_rho: self.b_rho,
            nu1: self.nu1,
            a_psi: self.a_psi,
            b_psi: self.b_psi,
            nu2: self.nu2,
            a_sigma: self.a_sigma,
            b_sigma: self.b_sigma,
            prop_var_a: self.prop_var_a,
            prop_var_b: self.prop_var_b,
            threshold_prop_var: self.threshold_prop_var,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    Individual,
    SummaryCov,
    BetaSummary,
}

impl Mode {
    fn label(self) -> &'static str {
        match self {
            Self::Individual => "individual-level data (--x, --y)",
            Self::SummaryCov => "summary covariances (--syy, --syx, --sxx, --n)",
            Self::BetaSummary => "regression summaries (--sxx, --beta, --sigma-hat, --n)",
        }
    }
}

/// Picks the input mode by priority individual > summary > beta and names
/// every supplied flag that the chosen mode ignores.
fn resolve_mode(args: &FitArgs) -> CliResult<(Mode, Vec<String>)> {
    let individual = args.x.is_some() && args.y.is_some();
    let summary = args.syy.is_some() && args.syx.is_some() && args.sxx.is_some() && args.n.is_some();
    let beta = args.sxx.is_some() && args.beta.is_some() && args.sigma_hat.is_some() && args.n.is_some();
    let mode = if individual {
        Mode::Individual
    } else if summary {
        Mode::SummaryCov
    } else if beta {
        Mode::BetaSummary
    } else {
        return Err(CliError::usage(anyhow!("no complete input set; provide one of {MODES}")));
    };
    let used: &[&str] = match mode {
        Mode::Individual => &["x", "y"],
        Mode::SummaryCov => &["syy", "syx", "sxx", "n"],
        Mode::BetaSummary => &["sxx", "beta", "sigma-hat", "n"],
    };
    let given = [
        ("x", args.x.is_some()),
        ("y", args.y.is_some()),
        ("syy", args.syy.is_some()),
        ("syx", args.syx.is_some()),
        ("sxx", args.sxx.is_some()),
        ("beta", args.beta.is_some()),
        ("sigma-hat", args.sigma_hat.is_some()),
        ("n", args.n.is_some()),
    ];
    let ignored: Vec<String> = given
        .iter()
        .filter(|(name, present)| *present && !used.contains(name))
        .map(|(name, _)| format!("--{name}"))
        .collect();
    let mut warnings = Vec::new();
    if !ignored.is_empty() {
        warnings.push(format!("using {}; ignoring {}", mode.label(), ignored.join(", ")));
    }
    if args.center && mode != Mode::Individual {
        warnings.push("--center applies only to individual-level data; ignored".to_string());
    }
    Ok((mode, warnings))
}

fn path(p: &Option<PathBuf>) -> &Path {
    p.as_deref().expect("presence checked by resolve_mode")
}

fn load_input(args: &FitArgs, mode: Mode) -> CliResult<(ChainInput, BTreeMap<&'static str, PathBuf>)> {
    let mut inputs = BTreeMap::new();
    let mut note = |name: &'static str, p: &Option<PathBuf>| {
        inputs.insert(name, path(p).to_path_buf());
    };
    let input = match mode {
        Mode::Individual => {
            note("x", &args.x);
            note("y", &args.y);
            let data = IndividualData::new(read_matrix(path(&args.x))?, read_matrix(path(&args.y))?)?;
            ChainInput::Individual(if args.center { data.centered() } else { data })
        }
        Mode::SummaryCov => {
            note("syy", &args.syy);
            note("syx", &args.syx);
            note("sxx", &args.sxx);
            ChainInput::Summary(SummaryStats::new(
                read_matrix(path(&args.syy))?,
                read_matrix(path(&args.syx))?,
                read_matrix(path(&args.sxx))?,
                args.n.unwrap(),
            )?)
        }
        Mode::BetaSummary => {
            note("sxx", &args.sxx);
            note("beta", &args.beta);
            note("sigma_hat", &args.sigma_hat);
            ChainInput::Regression(RegressionSummary::new(
                read_matrix(path(&args.beta))?,
                read_matrix(path(&args.sigma_hat))?,
                read_matrix(path(&args.sxx))?,
                args.n.unwrap(),
            )?)
        }
    };
    Ok((input, inputs))
}

#[derive(Serialize)]
struct FitOutput<'a> {
    prior: &'static str,
    a_est: Vec<Vec<f64>>,
    b_est: Vec<Vec<f64>>,
    z_a_est: Vec<Vec<u8>>,
    z_b_est: Vec<Vec<u8>>,
    a0_est: Option<Vec<Vec<f64>>>,
    b0_est: Option<Vec<Vec<f64>>>,
    gamma_est: Vec<Vec<f64>>,
    phi_est: Vec<Vec<f64>>,
    tau_est: Vec<Vec<f64>>,
    eta_est: Vec<Vec<f64>>,
    rho_est: Option<Vec<Vec<f64>>>,
    psi_est: Option<Vec<Vec<f64>>>,
    t_a_est: Option<f64>,
    t_b_est: Option<f64>,
    sigma_est: Vec<f64>,
    accpt_a: f64,
    accpt_b: f64,
    accpt_t_a: Option<f64>,
    accpt_t_b: Option<f64>,
    ll_pst: &'a [f64],
    n_pst: usize,
    gamma_pst_file: &'static str,
    max_cache_drift: f64,
    warnings: &'a [String],
    manifest: &'static str,
}

fn output_json<'a>(out: &'a ChainOutput, format: TensorFormat, warnings: &'a [String]) -> FitOutput<'a> {
    let opt = |m: &Option<rgm::Matrix>| m.as_ref().map(matrix_rows);
    FitOutput {
        prior: PriorArg::from(out.prior).name(),
        a_est: matrix_rows(&out.a_est),
        b_est: matrix_rows(&out.b_est),
        z_a_est: indicator_rows(&out.z_a_est),
        z_b_est: indicator_rows(&out.z_b_est),
        a0_est: opt(&out.a0_est),
        b0_est: opt(&out.b0_est),
        gamma_est: matrix_rows(&out.gamma_est),
        phi_est: matrix_rows(&out.phi_est),
        tau_est: matrix_rows(&out.tau_est),
        eta_est: matrix_rows(&out.eta_est),
        rho_est: opt(&out.rho_est),
        psi_est: opt(&out.psi_est),
        t_a_est: out.t_a_est,
        t_b_est: out.t_b_est,
        sigma_est: out.sigma_est.iter().copied().collect(),
        accpt_a: out.accpt_a,
        accpt_b: out.accpt_b,
        accpt_t_a: out.accpt_t_a,
        accpt_t_b: out.accpt_t_b,
        ll_pst: &out.ll_pst,
        n_pst: out.n_pst(),
        gamma_pst_file: format.file_name(),
        max_cache_drift: out.max_cache_drift,
        warnings,
        manifest: MANIFEST_FILE,
    }
}

fn print_summary(out: &ChainOutput, dir: &Path) {
    println!("prior: {}   retained samples: {}", PriorArg::from(out.prior).name(), out.n_pst());
    println!("estimated adjacency (z_a_est):");
    print_indicator(&out.z_a_est);
    print!("acceptance %: A {:.1}, B {:.1}", out.accpt_a, out.accpt_b);
    if let (Some(ta), Some(tb)) = (out.accpt_t_a, out.accpt_t_b) {
        print!(", t_A {ta:.1}, t_B {tb:.1}");
    }
    println!();
    println!("results written to {}", dir.display());
}

fn print_indicator(m: &Indicator) {
    for row in m.row_iter() {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        println!("  {}", cells.join(" "));
    }
}

pub fn run(args: &FitArgs) -> CliResult<()> {
    let recorder = Recorder::start();
    let (mode, mut warnings) = resolve_mode(args)?;
    let d_path = args
        .d
        .as_deref()
        .ok_or_else(|| CliError::usage(anyhow!("--d (instrument design matrix) is required")))?;
    let d = DesignMask::from_numeric(&read_indicator(d_path)?.map(f64::from));
    let (input, mut inputs) = load_input(args, mode)?;
    inputs.insert("d", d_path.to_path_buf());

    let config = SamplerConfig {
        n_iter: args.iter,
        n_burnin: args.burnin,
        thin: args.thin,
        prior: args.prior.into(),
        hyper: args.hyper.params(),
        seed: args.seed,
        recompute_period: args.recompute_period,
    };
    config.validate()?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    let out = run_chain(&input, &d, &config)?;
    for w in &out.warnings {
        eprintln!("warning: {w}");
    }
    warnings.extend(out.warnings.iter().cloned());

    fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))
        .map_err(CliError::runtime)?;
    write_tensor(&args.out_dir.join(args.tensor_format.file_name()), &out.gamma_pst, args.tensor_format)?;
    write_json(&args.out_dir.join(OUTPUT_FILE), &output_json(&out, args.tensor_format, &warnings))?;
    let (p, _) = out.z_a_est.shape();
    write_matrix(&args.out_dir.join(ADJACENCY_FILE), p, p, |i, j| out.z_a_est[(i, j)])?;
    let manifest = recorder.finish(
        "fit",
        args.seed,
        args,
        inputs,
        vec![
            OUTPUT_FILE.to_string(),
            args.tensor_format.file_name().to_string(),
            ADJACENCY_FILE.to_string(),
        ],
        None,
        warnings,
    );
    write_manifest(&args.out_dir, &manifest)?;
    print_summary(&out, &args.out_dir);
    Ok(())
}

impl From<Prior> for PriorArg {
    fn from(p: Prior) -> Self {
        match p {
            Prior::SpikeSlab => Self::SpikeAndSlab,
            Prior::Threshold => Self::Threshold,
        }
    }
}

//! Subcommands that work on user-supplied data.

use std::path::PathBuf;

use clap::{Args, ValueEnum};

use covtest_core::desparsified::{estimate_sigma, DEFAULT_KAPPA, DEFAULT_NODEWISE_FACTOR};
use covtest_core::refit::RefitReference;
use covtest_core::{
    assign_cov_pvals, computable_cov_steps, compute_path, cov_sequence_with, despars_inference,
    holm_adjust, refit_sequence, reject_at, select_cov_stop, ColumnScaling, CovReference,
    DesignMatrix, DesparsConfig, EventKind, PathEnd, Response, SigmaSource,
};

use crate::error::{CliError, Result};
use crate::input::{parse_design, parse_response, read_text};
use crate::output::{join_indices, sha256_hex, sig6, Table, VERSION};

#[derive(Args, Debug)]
pub struct DataArgs {
    /// Design file: `n p` header, then n rows of p values.
    #[arg(long)]
    pub x: PathBuf,
    /// Response file: one value per line.
    #[arg(long)]
    pub y: PathBuf,
    /// Column scaling applied to the design before fitting.
    #[arg(long, value_enum, default_value_t = ScalingArg::Raw)]
    pub scaling: ScalingArg,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ScalingArg {
    Raw,
    UnitNorm,
    SqrtNNorm,
}

impl From<ScalingArg> for ColumnScaling {
    fn from(s: ScalingArg) -> Self {
        match s {
            ScalingArg::Raw => ColumnScaling::Raw,
            ScalingArg::UnitNorm => ColumnScaling::UnitNorm,
            ScalingArg::SqrtNNorm => ColumnScaling::SqrtNNorm,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum EstimatedSigma {
    ScaledLasso,
    OlsResidual,
    /// Scaled lasso when p ≥ n, least-squares residual otherwise.
    Auto,
}

impl From<EstimatedSigma> for SigmaSource {
    fn from(s: EstimatedSigma) -> Self {
        match s {
            EstimatedSigma::ScaledLasso => SigmaSource::ScaledLasso,
            EstimatedSigma::OlsResidual => SigmaSource::OlsResidual,
            EstimatedSigma::Auto => SigmaSource::Auto,
        }
    }
}

#[derive(Args, Debug)]
pub struct NoiseArgs {
    /// Known noise variance.
    #[arg(long, conflicts_with = "estimate_sigma")]
    pub sigma2: Option<f64>,
    /// Estimate σ from the data instead.
    #[arg(long, value_enum)]
    pub estimate_sigma: Option<EstimatedSigma>,
}

#[derive(Args, Debug)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Maximum number of knots (enter and leave events both count).
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum ReferenceArg {
    Exp1,
    /// F(2, n − p); needs σ² from the least-squares residual.
    F2,
}

#[derive(Args, Debug)]
pub struct CovtestArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    /// Number of entry steps to test (default: all computable).
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
    #[arg(long, value_enum, default_value_t = ReferenceArg::Exp1)]
    pub reference: ReferenceArg,
}

#[derive(Args, Debug)]
pub struct RefitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub noise: NoiseArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long, default_value_t = 1000)]
    pub max_steps: usize,
}

#[derive(Args, Debug)]
pub struct DesparsArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Known σ (not σ²); overrides --sigma-source.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[arg(long, value_enum, default_value_t = EstimatedSigma::Auto)]
    pub sigma_source: EstimatedSigma,
    /// Initial lasso penalty as a multiple of σ̂·sqrt(2 log p / n).
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    pub kappa: f64,
    /// Nodewise penalty as a multiple of the universal level.
    #[arg(long, default_value_t = DEFAULT_NODEWISE_FACTOR)]
    pub nodewise_factor: f64,
}

/// Loaded inputs plus the digest that identifies them.
pub struct Loaded {
    pub x: DesignMatrix,
    pub y: Response,
    pub digest: String,
}

pub fn load(data: &DataArgs, command: &str) -> Result<Loaded> {
    let xt = read_text(&data.x)?;
    let yt = read_text(&data.y)?;
    let x = parse_design(&xt, &data.x.display().to_string(), data.scaling.into())?;
    let y = parse_response(&yt, &data.y.display().to_string())?;
    x.check_response(&y)?;
    let digest = sha256_hex(&[command.as_bytes(), xt.as_bytes(), yt.as_bytes()]);
    Ok(Loaded { x, y, digest })
}

fn header(t: &mut Table, command: &str, loaded: &Loaded, scaling: ScalingArg) {
    t.meta("tool", VERSION)
        .meta("command", command)
        .meta("config_sha256", &loaded.digest)
        .meta("seed", "none")
        .meta("n", loaded.x.n())
        .meta("p", loaded.x.p())
        .meta("scaling", ColumnScaling::from(scaling));
}

fn end_name(end: PathEnd) -> &'static str {
    match end {
        PathEnd::Exhausted => "exhausted",
        PathEnd::MaxSteps => "max_steps",
        PathEnd::RankDeficient => "rank_deficient",
        PathEnd::Empty => "empty",
    }
}

pub fn run_path(args: &PathArgs, command: &str) -> Result<Table> {
    let loaded = load(&args.data, command)?;
    let path = compute_path(&loaded.x, &loaded.y, args.max_steps)?;
    let mut t = Table::new(&["step", "lambda", "event", "variable", "active_size"]);
    header(&mut t, command, &loaded, args.data.scaling);
    t.meta("path_end", end_name(path.end));
    for (k, e) in path.events.iter().enumerate() {
        let kind = match e.kind {
            EventKind::Enter => "enter",
            EventKind::Leave => "leave",
        };
        t.row(vec![
            e.step.to_string(),
            sig6(path.knots[k]),
            kind.into(),
            e.variable.to_string(),
            path.active_sets[k].len().to_string(),
        ]);
    }
    Ok(t)
}

fn resolve_sigma2(
    noise: &NoiseArgs,
    loaded: &Loaded,
) -> Result<(f64, String, Option<SigmaSource>)> {
    match (noise.sigma2, noise.estimate_sigma) {
        (Some(s2), None) => {
            if !(s2 > 0.0 && s2.is_finite()) {
                return Err(CliError::Input(format!(
                    "--sigma2 must be positive, got {s2}"
                )));
            }
            Ok((s2, "known".into(), None))
        }
        (None, Some(src)) => {
            let source = SigmaSource::from(src).resolve(loaded.x.n(), loaded.x.p());
            let s = estimate_sigma(&loaded.x, &loaded.y, source)?;
            Ok((s * s, source.name().into(), Some(source)))
        }
        _ => Err(CliError::Input(
            "give exactly one of --sigma2 or --estimate-sigma".into(),
        )),
    }
}

pub fn run_covtest(args: &CovtestArgs, command: &str) -> Result<Table> {
    check_alpha(args.alpha)?;
    let loaded = load(&args.data, command)?;
    let (sigma2, source_name, source) = resolve_sigma2(&args.noise, &loaded)?;
    let (n, p) = (loaded.x.n(), loaded.x.p());
    let reference = match args.reference {
        ReferenceArg::Exp1 => CovReference::Exp1,
        ReferenceArg::F2 if source == Some(SigmaSource::OlsResidual) => {
            CovReference::F2 { df: n - p }
        }
        ReferenceArg::F2 => {
            return Err(CliError::Input(
                "--reference f2 needs --estimate-sigma ols-residual (or auto with n > p)".into(),
            ))
        }
    };
    let path = compute_path(&loaded.x, &loaded.y, args.max_steps)?;
    let steps = args.steps.unwrap_or_else(|| computable_cov_steps(&path));
    let seq = cov_sequence_with(&loaded.x, &loaded.y, &path, sigma2, steps, reference)?;
    let mut t = Table::new(&[
        "k",
        "step",
        "variable",
        "lambda_k",
        "lambda_next",
        "statistic",
        "p_value",
    ]);
    header(&mut t, command, &loaded, args.data.scaling);
    t.meta("sigma2", sig6(sigma2))
        .meta("sigma_source", source_name)
        .meta("reference", reference.name());
    for e in &seq.entries {
        t.row(vec![
            e.k.to_string(),
            e.step.to_string(),
            e.entered_variable.to_string(),
            sig6(e.lambda_k),
            sig6(e.lambda_next),
            sig6(e.statistic),
            sig6(e.p_value),
        ]);
    }
    let mut pvals = vec![1.0; p];
    for (j, pv) in assign_cov_pvals(&seq, &path) {
        pvals[j] = pv;
    }
    let holm = reject_at(&holm_adjust(&pvals)?, args.alpha);
    t.trailer(
        "cov_selected",
        join_indices(&select_cov_stop(&seq, args.alpha)),
    )
    .trailer("cov_pval_holm_selected", join_indices(&holm));
    Ok(t)
}

pub fn run_refit(args: &RefitArgs, command: &str) -> Result<Table> {
    let loaded = load(&args.data, command)?;
    let (sigma2, source_name, _) = resolve_sigma2(&args.noise, &loaded)?;
    let path = compute_path(&loaded.x, &loaded.y, args.max_steps)?;
    let steps = args.steps.unwrap_or_else(|| path.entries().count());
    let seq = refit_sequence(&loaded.x, &loaded.y, &path, sigma2, steps)?;
    let mut t = Table::new(&[
        "k",
        "step",
        "variable",
        "statistic",
        "p_value",
        "reference",
        "p_order_stat",
        "reference_order",
    ]);
    header(&mut t, command, &loaded, args.data.scaling);
    t.meta("sigma2", sig6(sigma2))
        .meta("sigma_source", source_name);
    let opt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), sig6);
    for s in &seq {
        t.row(vec![
            s.k.to_string(),
            s.step.to_string(),
            s.variable.to_string(),
            opt(s.drop.as_ref().map(|d| d.value)),
            opt(s.p_fixed),
            RefitReference::ChiSquare1.name().into(),
            opt(s.p_order_stat),
            RefitReference::OrderStatistic.name().into(),
        ]);
    }
    Ok(t)
}

pub fn run_despars(args: &DesparsArgs, command: &str) -> Result<Table> {
    check_alpha(args.alpha)?;
    let loaded = load(&args.data, command)?;
    let sigma_source = match args.sigma {
        Some(s) => SigmaSource::Known(s),
        None => SigmaSource::from(args.sigma_source).resolve(loaded.x.n(), loaded.x.p()),
    };
    let cfg = DesparsConfig {
        kappa: args.kappa,
        nodewise_factor: args.nodewise_factor,
        alpha: args.alpha,
        sigma_source,
    };
    let fit = despars_inference(&loaded.x, &loaded.y, &cfg)?;
    let adj = holm_adjust(&fit.p_values)?;
    let mut t = Table::new(&[
        "variable", "estimate", "se", "p", "p_holm", "ci_low", "ci_high",
    ]);
    header(&mut t, command, &loaded, args.data.scaling);
    t.meta("sigma_source", sigma_source.name())
        .meta("sigma_hat", sig6(fit.sigma_eps_hat))
        .meta("lambda", sig6(fit.lambda_used))
        .meta("kappa", sig6(args.kappa))
        .meta("nodewise_factor", sig6(args.nodewise_factor))
        .meta("alpha", sig6(args.alpha));
    for j in 0..loaded.x.p() {
        t.row(vec![
            j.to_string(),
            sig6(fit.b_hat[j]),
            sig6(fit.se[j]),
            sig6(fit.p_values[j]),
            sig6(adj.adjusted[j]),
            sig6(fit.ci_low[j]),
            sig6(fit.ci_high[j]),
        ]);
    }
    t.trailer("holm_selected", join_indices(&reject_at(&adj, args.alpha)));
    Ok(t)
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!(
            "--alpha must be in (0, 1), got {alpha}"
        )))
    }
}

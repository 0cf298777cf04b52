//! Command-line front end for the `exsis` binary.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or I/O error, 3 infeasible
//! bound or violated precondition (with a JSON reason on stderr).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde::Serialize;
use serde_json::json;

use crate::baselines::{
    lambda_grid, lambda_max, safe_filter_penalized, strong_filter, PenaltySpec, Solver, DEFAULT_MAX_ITERS, DEFAULT_TOL,
};
use crate::bounds::{self, BoundInput, BoundResult, DEFAULT_SLACK};
use crate::coherence::{coherence_property_check, CoherenceReport, DEFAULT_C_MU};
use crate::error::Error;
use crate::experiments::{self, DRule, ExperimentConfig};
use crate::io::{read_design, read_vector, write_matrix, write_vector};
use crate::model::{marginal_correlations, simulate_response};
use crate::rng::{fresh_seed, substream};
use crate::screening::{detection_rate, screen_top_d};
use crate::synth::{generate_beta_shifted, generate_beta_uniform, generate_design, CoherenceAdjuster, DesignFamily, DesignSpec};
use crate::text::{build_tfidf, Corpus, TfidfOptions, DEFAULT_MIN_DF};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "exsis", version, about = "Marginal-correlation screening for p >> n linear models")]
pub struct Cli {
    /// Master seed; a fresh one is drawn and printed when omitted.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Machine-readable JSON on stdout.
    #[arg(long, global = true)]
    pub json: bool,
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Keep the d variables with the largest |X^T y|.
    Screen(ScreenArgs),
    /// Worst-case / average coherence and the coherence-property verdict.
    Coherence(CoherenceArgs),
    /// Screened-model-size bounds.
    Bounds(BoundsArgs),
    /// Draw a synthetic design, coefficients and response.
    Synth(SynthArgs),
    /// Solve a LASSO or elastic-net problem by coordinate descent.
    Lasso(LassoArgs),
    /// Run an experiment from a JSON config.
    Experiment(ExperimentArgs),
    /// Turn a labelled text corpus into a TF-IDF matrix.
    Ingest(IngestArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SizeRule {
    TwoN,
    NOverLogp,
    SqrtN,
}

impl From<SizeRule> for DRule {
    fn from(rule: SizeRule) -> Self {
        match rule {
            SizeRule::TwoN => DRule::TwoN,
            SizeRule::NOverLogp => DRule::NOverLogp,
            SizeRule::SqrtN => DRule::SqrtN,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScreenArgs {
    /// Design matrix (.csv or binary).
    #[arg(long, visible_alias = "matrix")]
    pub x: PathBuf,
    /// Response vector.
    #[arg(long, visible_alias = "response")]
    pub y: PathBuf,
    /// Number of variables to keep.
    #[arg(long, conflicts_with = "rule")]
    pub d: Option<usize>,
    /// Parameter-free size rule used when --d is absent.
    #[arg(long, visible_alias = "d-rule", value_enum, default_value = "n-over-logp")]
    pub rule: SizeRule,
}

#[derive(Debug, Args)]
pub struct CoherenceArgs {
    #[arg(long, visible_alias = "matrix")]
    pub x: PathBuf,
    #[arg(long, default_value_t = DEFAULT_C_MU)]
    pub c_mu: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BoundRule {
    All,
    General,
    Subgaussian,
    NOverLogp,
    SqrtN,
    Mu,
    Coherence,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, value_enum, default_value = "all")]
    pub rule: BoundRule,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, conflicts_with = "msr")]
    pub beta_min: Option<f64>,
    /// beta_min / ||beta||_2, an alternative to --beta-min.
    #[arg(long)]
    pub msr: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub beta_l2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Screening parameter for the general route.
    #[arg(long)]
    pub b: Option<f64>,
    /// Sub-Gaussian parameter ratio b*/sigma* (at least 1).
    #[arg(long, default_value_t = 1.0)]
    pub ratio: f64,
    #[arg(long)]
    pub mu: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_C_MU)]
    pub c_mu: f64,
    #[arg(long, default_value_t = DEFAULT_SLACK)]
    pub c1: f64,
    #[arg(long, default_value_t = DEFAULT_SLACK)]
    pub c2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Gaussian,
    Uniform,
    Rademacher,
    Equicorrelated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BetaKind {
    Uniform,
    Shifted,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_enum, default_value = "gaussian")]
    pub family: Family,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub p: usize,
    #[arg(long, default_value_t = 0.0)]
    pub rho: f64,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    pub beta: BetaKind,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 2.0)]
    pub e: f64,
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Rescale the leading singular value to reach this coherence.
    #[arg(long)]
    pub target_mu: Option<f64>,
    #[arg(long, default_value_t = 0.01)]
    pub tolerance: f64,
    /// Output directory for design, response and coefficients.
    #[arg(long)]
    pub out: PathBuf,
    /// File extension of the written matrices (csv or bin).
    #[arg(long, default_value = "csv")]
    pub format: String,
}

#[derive(Debug, Args)]
pub struct LassoArgs {
    #[arg(long, visible_alias = "matrix")]
    pub x: PathBuf,
    #[arg(long, visible_alias = "response")]
    pub y: PathBuf,
    #[arg(long, conflicts_with_all = ["lambda_ratio", "lambda_grid"])]
    pub lambda: Option<f64>,
    /// λ as a fraction of λ_max.
    #[arg(long, default_value_t = 0.1, conflicts_with = "lambda_grid")]
    pub lambda_ratio: f64,
    /// Sweep this many λ values from λ_max down to λ_max/N with warm
    /// starts, printing one CSV row per λ.
    #[arg(long)]
    pub lambda_grid: Option<usize>,
    /// Screening rule applied before each solve.
    #[arg(long, value_enum, default_value = "none")]
    pub rule: ScreenRule,
    /// Truth file (`meta.json` from `synth`) for detection rates.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    /// Write the coefficient vector here.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScreenRule {
    None,
    Safe,
    Strong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExperimentKind {
    OracleMms,
    Compare,
    Sentiment,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    #[arg(value_enum)]
    pub kind: ExperimentKind,
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's output directory.
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// Overrides the config's trial count.
    #[arg(long)]
    pub trials: Option<usize>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Directory with labels.csv and <doc_id>.txt files.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_DF)]
    pub min_df: usize,
    /// Use the smoothed idf ln((1+N)/(1+df)) + 1.
    #[arg(long)]
    pub smooth: bool,
    /// Feature matrix output (.csv or binary).
    #[arg(long)]
    pub out: PathBuf,
    /// Vocabulary output (JSON list, column order).
    #[arg(long)]
    pub vocab: Option<PathBuf>,
    /// Label vector output.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}

/// A failed command with its exit code and, for code 3, a JSON reason.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
    pub reason: Option<serde_json::Value>,
}

impl From<Error> for Failure {
    fn from(err: Error) -> Self {
        let code = match &err {
            Error::InvalidArgument(_) => EXIT_USAGE,
            Error::Precondition(_) | Error::AdjustmentFailed { .. } => EXIT_INFEASIBLE,
            _ => EXIT_DATA,
        };
        let reason = (code == EXIT_INFEASIBLE).then(|| json!({ "error": "precondition", "message": err.to_string() }));
        Failure {
            code,
            message: err.to_string(),
            reason,
        }
    }
}

type CmdResult = Result<(), Failure>;

struct Ctx<'a> {
    json: bool,
    seed: Option<u64>,
    out: &'a mut dyn Write,
}

impl Ctx<'_> {
    /// Resolves the master seed, printing it to stderr when it was drawn.
    fn seed(&mut self) -> u64 {
        let seed = *self.seed.get_or_insert_with(|| {
            let s = fresh_seed();
            eprintln!("seed: {s}");
            s
        });
        info!("master seed {seed}");
        seed
    }

    fn emit<T: Serialize>(&mut self, value: &T, human: impl FnOnce() -> String) -> CmdResult {
        let text = if self.json {
            serde_json::to_string_pretty(value).map_err(Error::from)?
        } else {
            human()
        };
        writeln!(self.out, "{text}").map_err(Error::from)?;
        Ok(())
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn run_from_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let _ = err.print();
            return if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    init_logging(cli.verbose);
    if let Err(err) = configure_threads() {
        eprintln!("error: {err}");
        return EXIT_USAGE;
    }
    let stdout = std::io::stdout();
    dispatch(&cli, &mut stdout.lock())
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Caps the global worker pool at `EXSIS_THREADS` when set.
fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var("EXSIS_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| format!("EXSIS_THREADS must be a positive integer, got {value:?}"))?;
    // Only the first configuration in a process takes effect.
    if rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
        warn!("worker pool already initialized; EXSIS_THREADS ignored");
    }
    Ok(())
}

/// Runs a parsed invocation, writing results to `out` and diagnostics to
/// stderr; returns the exit code.
pub fn dispatch(cli: &Cli, out: &mut dyn Write) -> i32 {
    let mut ctx = Ctx {
        json: cli.json,
        seed: cli.seed,
        out,
    };
    let result = match &cli.command {
        Command::Screen(a) => screen(&mut ctx, a),
        Command::Coherence(a) => coherence(&mut ctx, a),
        Command::Bounds(a) => bounds_cmd(&mut ctx, a),
        Command::Synth(a) => synth(&mut ctx, a),
        Command::Lasso(a) => lasso(&mut ctx, a),
        Command::Experiment(a) => experiment(&mut ctx, a),
        Command::Ingest(a) => ingest(&mut ctx, a),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.message);
            if let Some(reason) = f.reason {
                eprintln!("{reason}");
            }
            f.code
        }
    }
}

fn screen(ctx: &mut Ctx, a: &ScreenArgs) -> CmdResult {
    ctx.seed();
    let x = read_design(&a.x)?;
    let y = read_vector(&a.y)?;
    let d = match a.d {
        Some(d) => d,
        None => DRule::from(a.rule).resolve(x.n(), x.p())?,
    };
    let w = marginal_correlations(&x, &y)?;
    let outcome = screen_top_d(&w, d)?;
    ctx.emit(&outcome, || {
        let mut lines: Vec<String> = outcome.selected.iter().map(usize::to_string).collect();
        let summary = json!({
            "d": outcome.d,
            "threshold_value": outcome.threshold_value,
            "tie_broken": outcome.tie_broken,
        });
        lines.push(summary.to_string());
        lines.join("\n")
    })
}

fn coherence(ctx: &mut Ctx, a: &CoherenceArgs) -> CmdResult {
    ctx.seed();
    let x = read_design(&a.x)?;
    let report = CoherenceReport::compute(&x)?;
    let verdict = coherence_property_check(&report, x.n(), x.p(), a.c_mu)?;
    let value = json!({
        "n": x.n(),
        "p": x.p(),
        "mu": verdict.mu,
        "nu": verdict.nu,
        "welch": verdict.welch,
        "mu_threshold": verdict.mu_threshold,
        "nu_threshold": verdict.nu_threshold,
        "mu_holds": verdict.mu_holds,
        "nu_holds": verdict.nu_holds,
        "property_holds": verdict.property_holds,
        "c_mu": verdict.c_mu,
        "argmax_pair": report.argmax_pair,
        "reason": verdict.reason,
    });
    ctx.emit(&value, || {
        let mut s = format!(
            "n = {}, p = {}\nmu      = {:.6} (pair {:?})\nnu      = {:.6}\nwelch   = {:.6}\nmu < 1/(c_mu sqrt(ln p)) = {:.6}: {}\nnu < mu/sqrt(n) = {:.6}: {}\ncoherence property: {}",
            x.n(),
            x.p(),
            report.mu,
            report.argmax_pair,
            report.nu,
            report.welch,
            verdict.mu_threshold,
            verdict.mu_holds,
            verdict.nu_threshold,
            verdict.nu_holds,
            if verdict.property_holds { "holds" } else { "fails" }
        );
        if let Some(r) = &verdict.reason {
            s.push_str(&format!("\nreason: {r}"));
        }
        s
    })
}

fn bound_input(a: &BoundsArgs) -> BoundInput {
    let mut input = BoundInput {
        k: a.k,
        beta_min: a.beta_min,
        beta_l2: a.beta_l2,
        sigma: a.sigma,
        b: a.b,
        subgauss_ratio: a.ratio,
        mu: a.mu,
        c_mu: a.c_mu,
        c1: a.c1,
        c2: a.c2,
        ..BoundInput::new(a.n, a.p)
    };
    if let Some(msr) = a.msr {
        input = input.with_msr(msr);
    }
    input
}

fn describe(r: &BoundResult) -> String {
    let mut s = match r.d_min {
        Some(d) => format!("{:<12} d = {d}", r.route.to_string()),
        None => format!("{:<12} d = infeasible", r.route.to_string()),
    };
    if let Some(b) = r.b {
        s.push_str(&format!(", b = {b:.6}"));
    }
    if let Some(d) = r.fallback_d {
        s.push_str(&format!(", fallback d = {d}"));
    }
    if let Some(d) = r.slack_d {
        s.push_str(&format!(", slack d = {d}"));
    }
    if let Some(pr) = r.success_probability {
        s.push_str(&format!(", probability >= {pr:.6}"));
    }
    for deficit in r.deficits() {
        s.push_str(&format!("\n    violated: {deficit}"));
    }
    for w in &r.warnings {
        s.push_str(&format!("\n    warning: {w}"));
    }
    s
}

fn bounds_cmd(ctx: &mut Ctx, a: &BoundsArgs) -> CmdResult {
    ctx.seed();
    let input = bound_input(a);
    let single = |d: usize| json!({ "rule": format!("{:?}", a.rule), "d": d });
    let result = match a.rule {
        BoundRule::NOverLogp => {
            let d = bounds::d_simple_n_over_logp(a.n, a.p)?;
            return ctx.emit(&single(d), || d.to_string());
        }
        BoundRule::SqrtN => {
            let d = bounds::d_sqrt_n(a.n);
            return ctx.emit(&single(d), || d.to_string());
        }
        BoundRule::All => {
            let all = bounds::all_routes(&input)?;
            return ctx.emit(&all, || all.iter().map(describe).collect::<Vec<_>>().join("\n"));
        }
        BoundRule::General => bounds::d_general(&input)?,
        BoundRule::Subgaussian => bounds::d_subgaussian(&input)?,
        BoundRule::Mu => bounds::d_mu_route(&input)?,
        BoundRule::Coherence => bounds::d_coherence_route(&input)?,
    };
    // Routes evaluated without k and beta_min only report their fallback.
    let evaluated = input.k.is_some() && input.beta_min.is_some();
    ctx.emit(&result, || describe(&result))?;
    if evaluated && !result.feasible() {
        return Err(Failure {
            code: EXIT_INFEASIBLE,
            message: format!("{} route is infeasible for these parameters", result.route),
            reason: Some(json!({
                "error": "infeasible",
                "route": result.route,
                "violated": result.deficits(),
                "preconditions": result.preconditions,
            })),
        });
    }
    Ok(())
}

fn synth(ctx: &mut Ctx, a: &SynthArgs) -> CmdResult {
    let seed = ctx.seed();
    let family = match a.family {
        Family::Gaussian => DesignFamily::Gaussian,
        Family::Uniform => DesignFamily::Uniform,
        Family::Rademacher => DesignFamily::Rademacher,
        Family::Equicorrelated => DesignFamily::EquicorrelatedGaussian,
    };
    let spec = DesignSpec {
        rho: a.rho,
        ..DesignSpec::new(family, a.n, a.p)
    };
    let base = generate_design(&spec, substream(seed, 0))?;
    let (x, gamma) = match a.target_mu {
        Some(target) => {
            let adjuster = CoherenceAdjuster::new(&base)?;
            let gamma = adjuster.solve(target, a.tolerance)?;
            (adjuster.materialize(gamma)?, gamma)
        }
        None => (base.clone(), 1.0),
    };
    let model = match a.beta {
        BetaKind::Uniform => generate_beta_uniform(a.p, a.k, a.a, a.e, substream(seed, 1))?,
        BetaKind::Shifted => generate_beta_shifted(a.p, a.k, substream(seed, 1))?,
    }
    .with_sigma(a.sigma);
    let response = simulate_response(&x, &model, substream(seed, 2))?;
    std::fs::create_dir_all(&a.out).map_err(Error::from)?;
    let ext = a.format.trim_start_matches('.');
    let file = |stem: &str| a.out.join(format!("{stem}.{ext}"));
    write_matrix(&file("design"), x.matrix())?;
    write_vector(&file("response"), &response.y)?;
    write_vector(&file("beta"), model.beta())?;
    let report = CoherenceReport::compute(&x)?;
    let meta = json!({
        "seed": seed,
        "n": a.n,
        "p": a.p,
        "k": a.k,
        "support": model.support(),
        "beta_values": model.support_values(),
        "sigma": a.sigma,
        "gamma": gamma,
        "mu": report.mu,
        "nu": report.nu,
    });
    std::fs::write(a.out.join("meta.json"), serde_json::to_string_pretty(&meta).map_err(Error::from)?).map_err(Error::from)?;
    ctx.emit(&meta, || {
        format!(
            "wrote {} ({}x{} design, mu = {:.4}, support {:?})",
            a.out.display(),
            a.n,
            a.p,
            report.mu,
            model.support()
        )
    })
}

/// Support indices from a `synth` truth file.
fn read_truth(path: &Path) -> Result<Vec<usize>, Error> {
    let text = std::fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let parse = || -> Option<Vec<usize>> {
        value.get("support")?.as_array()?.iter().map(|v| v.as_u64().map(|i| i as usize)).collect()
    };
    parse().ok_or_else(|| Error::Parse {
        path: path.to_path_buf(),
        message: "expected a \"support\" array of indices".into(),
    })
}

#[derive(Debug, Serialize)]
struct PathRow {
    lambda: f64,
    kept_count: usize,
    active_count: usize,
    kkt_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    detection_rate: Option<f64>,
}

fn lasso(ctx: &mut Ctx, a: &LassoArgs) -> CmdResult {
    ctx.seed();
    let x = read_design(&a.x)?;
    let y = read_vector(&a.y)?;
    let support = a.truth.as_deref().map(read_truth).transpose()?;
    let lmax = lambda_max(&x, &y, a.alpha)?;
    let grid = match a.lambda_grid {
        Some(0) => return Err(Error::invalid("--lambda-grid needs at least one value").into()),
        Some(size) => lambda_grid(lmax, size),
        None => vec![a.lambda.unwrap_or(a.lambda_ratio * lmax)],
    };
    let all: Vec<usize> = (0..x.p()).collect();
    let mut warm = vec![0.0; x.p()];
    let mut rows = Vec::with_capacity(grid.len());
    let mut last = None;
    for &lambda in &grid {
        let penalty = PenaltySpec::elastic_net(lambda, a.alpha);
        let kept = match a.rule {
            ScreenRule::None => all.clone(),
            ScreenRule::Safe => safe_filter_penalized(&x, &y, &penalty, lmax)?.kept,
            ScreenRule::Strong => strong_filter(&x, &y, lambda, lmax, a.alpha)?.kept,
        };
        let res = Solver::new(&x, &y, penalty)
            .tol(a.tol)
            .max_iters(a.max_iters)
            .columns(&kept)
            .warm_start(&warm)
            .solve()?;
        warm.clone_from(&res.beta_hat);
        rows.push(PathRow {
            lambda,
            kept_count: kept.len(),
            active_count: res.active_set.len(),
            kkt_residual: res.kkt_residual,
            detection_rate: support.as_deref().map(|s| detection_rate(&kept, s)).transpose()?,
        });
        last = Some(res);
    }
    let res = last.expect("grid is non-empty");
    if let Some(path) = &a.out {
        write_vector(path, &res.beta_hat)?;
    }
    if a.lambda_grid.is_some() {
        if ctx.json {
            return ctx.emit(&rows, String::new);
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in &rows {
            writer.serialize(row).map_err(Error::from)?;
        }
        let bytes = writer.into_inner().map_err(|err| Error::from(err.into_error()))?;
        ctx.out.write_all(&bytes).map_err(Error::from)?;
        return Ok(());
    }
    let lambda = grid[0];
    let row = &rows[0];
    let value = json!({
        "lambda": lambda,
        "lambda_max": lmax,
        "alpha": a.alpha,
        "kept_count": row.kept_count,
        "active_set": res.active_set,
        "objective": res.objective,
        "kkt_residual": res.kkt_residual,
        "detection_rate": row.detection_rate,
        "iterations": res.iterations,
        "converged": res.converged,
    });
    ctx.emit(&value, || {
        format!(
            "lambda = {lambda:.6e} (lambda_max = {lmax:.6e}), alpha = {}, {} variables kept\nactive: {} variables {:?}\nobjective = {:.10e}, kkt residual = {:.3e}, {} cycles{}",
            a.alpha,
            row.kept_count,
            res.active_set.len(),
            res.active_set,
            res.objective,
            res.kkt_residual,
            res.iterations,
            if res.converged { "" } else { " (not converged)" }
        )
    })
}

fn experiment(ctx: &mut Ctx, a: &ExperimentArgs) -> CmdResult {
    let mut config = ExperimentConfig::load(&a.config)?;
    if ctx.seed.is_none() {
        ctx.seed = config.master_seed;
    }
    config.master_seed = Some(ctx.seed());
    if let Some(dir) = &a.output_dir {
        config.output_dir.clone_from(dir);
    }
    if let Some(t) = a.trials {
        config.trials = t;
    }
    let (paths, headline) = match a.kind {
        ExperimentKind::OracleMms => {
            let run = experiments::run_oracle_mms(&config)?;
            let lines: Vec<String> = run
                .summary
                .iter()
                .map(|r| format!("mu {:.2} e {:?}: median MMS {:?} [{:?}, {:?}]", r.mu_target, r.e, r.median_mms, r.q1, r.q3))
                .collect();
            (run.write(&config)?, lines)
        }
        ExperimentKind::Compare => {
            let run = experiments::run_screening_comparison(&config)?;
            let lines: Vec<String> = run
                .summary
                .iter()
                .filter(|r| r.lambda_index.is_none() || r.labeled)
                .map(|r| match r.lambda_ratio {
                    None => format!("{}: size {}, detection {}", r.method, r.median_post_screen_size, r.median_detection_rate),
                    Some(ratio) => format!(
                        "{} alpha {:?}: largest lambda/lambda_max with median detection 1 = {ratio:.3}, size {}",
                        r.method, r.alpha, r.median_post_screen_size
                    ),
                })
                .collect();
            (run.write(&config)?, lines)
        }
        ExperimentKind::Sentiment => {
            let run = experiments::sentiment::run_sentiment_from_config(&config)?;
            let lines: Vec<String> = run
                .summary
                .iter()
                .map(|r| {
                    format!(
                        "{:<14} train TP {:.2} ({:.2})  test TP {:.2} ({:.2})  {:.3} s ({:.3})",
                        r.method, r.train_tp_mean, r.train_tp_sd, r.test_tp_mean, r.test_tp_sd, r.train_seconds_mean, r.train_seconds_sd
                    )
                })
                .collect();
            (run.write(&config)?, lines)
        }
    };
    let value = json!({ "seed": config.master_seed, "files": paths, "summary": headline });
    ctx.emit(&value, || {
        let files: Vec<String> = paths.iter().map(|p| format!("wrote {}", p.display())).collect();
        format!("{}\n{}", headline.join("\n"), files.join("\n"))
    })
}

fn write_vocab(path: &Path, tokens: &[String]) -> Result<(), Error> {
    std::fs::write(path, serde_json::to_string_pretty(tokens)?)?;
    Ok(())
}

fn ingest(ctx: &mut Ctx, a: &IngestArgs) -> CmdResult {
    ctx.seed();
    let corpus = Corpus::load(&a.corpus)?;
    let (model, features) = build_tfidf(
        &corpus,
        TfidfOptions {
            min_df: a.min_df,
            smooth: a.smooth,
        },
    )?;
    write_matrix(&a.out, &features.matrix)?;
    if let Some(path) = &a.vocab {
        write_vocab(path, model.vocabulary.tokens())?;
    }
    if let Some(path) = &a.labels {
        let labels: Vec<f64> = corpus.labels().iter().map(|&l| l as f64).collect();
        write_vector(path, &labels)?;
    }
    let value = json!({
        "documents": corpus.len(),
        "terms": model.vocabulary.len(),
        "zero_rows": features.zero_rows,
    });
    ctx.emit(&value, || {
        format!(
            "{} documents, {} terms, {} documents without vocabulary terms",
            corpus.len(),
            model.vocabulary.len(),
            features.zero_rows.len()
        )
    })
}

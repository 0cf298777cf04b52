//! Sentiment classification by penalized regression on TF-IDF features,
//! with and without marginal-correlation prescreening.

use log::info;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::Serialize;

use super::config::{ExperimentConfig, SentimentConfig};
use super::stats::{aggregate, Summary};
use super::{timed, ExperimentRecord, STATUS_OK};
use crate::baselines::{lambda_max, log_lambda_grid, PenaltySpec, Solver};
use crate::error::{Error, Result};
use crate::model::{marginal_correlations, normalize_columns, DesignMatrix};
use crate::rng::{derive_seed, fresh_seed, rng_from_seed, substream};
use crate::screening::screen_top_d;
use crate::text::{split_bins, Corpus, Document, TfidfModel, TfidfOptions};

/// Columns whose centered norm falls below this are treated as constant.
const CONSTANT_NORM: f64 = 1e-10;
pub const CLASS_THRESHOLD: f64 = 0.5;

/// Centering and scaling learned on training rows: column `columns[c]` of
/// the raw matrix maps to `(x − means[c]) / scales[c]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub columns: Vec<usize>,
    pub means: Vec<f64>,
    pub scales: Vec<f64>,
}

impl Standardizer {
    /// Fits on `rows` of `raw`, restricted to `candidates`; columns that are
    /// constant on those rows are dropped.
    pub fn fit(raw: &DMatrix<f64>, rows: &[usize], candidates: &[usize]) -> Self {
        let m = rows.len() as f64;
        let mut out = Standardizer {
            columns: Vec::new(),
            means: Vec::new(),
            scales: Vec::new(),
        };
        for &j in candidates {
            let col = raw.column(j);
            let mean = rows.iter().map(|&i| col[i]).sum::<f64>() / m;
            let norm = rows.iter().map(|&i| (col[i] - mean).powi(2)).sum::<f64>().sqrt();
            if norm > CONSTANT_NORM {
                out.columns.push(j);
                out.means.push(mean);
                out.scales.push(norm);
            }
        }
        out
    }

    pub fn apply(&self, raw: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
        DMatrix::from_fn(rows.len(), self.columns.len(), |r, c| {
            (raw[(rows[r], self.columns[c])] - self.means[c]) / self.scales[c]
        })
    }

    /// Standardized training design (unit-norm, centered columns).
    pub fn design(&self, raw: &DMatrix<f64>, rows: &[usize]) -> Result<DesignMatrix> {
        if self.columns.is_empty() {
            return Err(Error::InsufficientData("every feature is constant on the training rows".into()));
        }
        normalize_columns(self.apply(raw, rows))
    }
}

/// Greedy de-duplication: walking columns in order, drops any column whose
/// absolute correlation with an already kept column exceeds `threshold`.
/// Input columns must be centered and unit norm.
pub fn drop_correlated(x: &DesignMatrix, threshold: f64) -> Vec<usize> {
    let gram = x.matrix().tr_mul(x.matrix());
    let mut kept: Vec<usize> = Vec::new();
    for j in 0..x.p() {
        if kept.iter().all(|&i| gram[(i, j)].abs() <= threshold) {
            kept.push(j);
        }
    }
    kept
}

/// Accuracy in percent of thresholding `predictions` at 0.5.
pub fn tp_rate(predictions: &[f64], labels: &[u8]) -> f64 {
    let hits = predictions
        .iter()
        .zip(labels)
        .filter(|(p, &l)| (**p >= CLASS_THRESHOLD) == (l == 1))
        .count();
    100.0 * hits as f64 / labels.len() as f64
}

fn predict(a: &DMatrix<f64>, beta: &[f64], intercept: f64) -> Vec<f64> {
    (0..a.nrows())
        .map(|i| intercept + beta.iter().enumerate().map(|(j, b)| if *b != 0.0 { b * a[(i, j)] } else { 0.0 }).sum::<f64>())
        .collect()
}

fn center(y: &[f64]) -> (Vec<f64>, f64) {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    (y.iter().map(|v| v - mean).collect(), mean)
}

/// Fraction of the centered response variance at which a path stops: past
/// this point the fit interpolates and smaller λ only cost time.
const MAX_DEVIANCE_RATIO: f64 = 0.999;

/// Path of warm-started fits along `grid` for the response `y`. Once the
/// fit explains [`MAX_DEVIANCE_RATIO`] of `‖y‖²`, the remaining grid points
/// reuse the last solution.
fn fit_path(x: &DesignMatrix, y: &[f64], alpha: f64, grid: &[f64], sc: &SentimentConfig) -> Result<Vec<Vec<f64>>> {
    let tss: f64 = y.iter().map(|v| v * v).sum();
    let mut warm = vec![0.0; x.p()];
    let mut out = Vec::with_capacity(grid.len());
    for &lambda in grid {
        let res = Solver::new(x, y, PenaltySpec::elastic_net(lambda, alpha))
            .tol(sc.tol * tss.sqrt())
            .max_iters(sc.max_iters)
            .warm_start(&warm)
            .skip_kkt()
            .solve()?;
        log::debug!("path p={} lambda={lambda:.4e} iters={} converged={} active={}", x.p(), res.iterations, res.converged, res.active_set.len());
        warm.clone_from(&res.beta_hat);
        out.push(res.beta_hat);
        let fitted = x.mul_vec(&warm);
        let rss: f64 = y.iter().zip(&fitted).map(|(a, b)| (a - b).powi(2)).sum();
        if 1.0 - rss / tss >= MAX_DEVIANCE_RATIO {
            break;
        }
    }
    while out.len() < grid.len() {
        out.push(warm.clone());
    }
    Ok(out)
}

/// Top-`d` columns of `x` by `|xᵀy|`, sorted.
fn screen_columns(x: &DesignMatrix, y: &[f64], d: usize) -> Result<Vec<usize>> {
    let mut selected = screen_top_d(&marginal_correlations(x, y)?, d.min(x.p()))?.selected;
    selected.sort_unstable();
    Ok(selected)
}

/// Index into `grid` minimizing held-out squared error over the folds of
/// the rows of `raw`, a standardized training design. With `screen = Some(d)`
/// each fold is screened on its own fitting rows, so held-out rows never
/// influence which columns survive.
fn cross_validate(raw: &DMatrix<f64>, y: &[f64], alpha: f64, grid: &[f64], sc: &SentimentConfig, screen: Option<usize>, seed: u64) -> Result<usize> {
    let folds = sc.folds;
    let n = raw.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from_seed(seed));
    let all: Vec<usize> = (0..raw.ncols()).collect();
    let mut sse = vec![0.0; grid.len()];
    for f in 0..folds {
        let held: Vec<usize> = order.iter().copied().skip(f).step_by(folds).collect();
        let mut fit_rows: Vec<usize> = order.iter().copied().filter(|i| !held.contains(i)).collect();
        fit_rows.sort_unstable();
        let std = Standardizer::fit(raw, &fit_rows, &all);
        let mut x = std.design(raw, &fit_rows)?;
        let (yc, ybar) = center(&fit_rows.iter().map(|&i| y[i]).collect::<Vec<_>>());
        let mut a = std.apply(raw, &held);
        if let Some(d) = screen {
            let cols = screen_columns(&x, &yc, d)?;
            x = x.select_columns(&cols);
            a = a.select_columns(cols.iter());
        }
        for (g, beta) in fit_path(&x, &yc, alpha, grid, sc)?.iter().enumerate() {
            let pred = predict(&a, beta, ybar);
            sse[g] += held.iter().zip(&pred).map(|(&i, p)| (y[i] - p).powi(2)).sum::<f64>();
        }
    }
    // Ties go to the larger λ (earlier in the grid).
    let best = (0..grid.len()).fold(0, |b, g| if sse[g] < sse[b] { g } else { b });
    Ok(best)
}

pub fn method_name(alpha: f64, screened: bool) -> String {
    let base = if alpha == 1.0 { "lasso".to_string() } else { format!("enet{alpha}") };
    if screened {
        format!("exsis-{base}")
    } else {
        base
    }
}

struct BinData {
    x: DesignMatrix,
    y_train: Vec<f64>,
    labels_train: Vec<u8>,
    a_test: DMatrix<f64>,
    labels_test: Vec<u8>,
}

/// TF-IDF on the training documents, correlated-feature removal and
/// standardization with training statistics.
fn prepare_bin(corpus: &Corpus, train: &[usize], test: &[usize], sc: &SentimentConfig) -> Result<BinData> {
    let docs = corpus.documents();
    let pick = |idx: &[usize]| -> Vec<&Document> { idx.iter().map(|&i| &docs[i]).collect() };
    let options = TfidfOptions {
        min_df: sc.min_df,
        smooth: sc.smooth_idf,
    };
    let tfidf = TfidfModel::fit(pick(train), options)?;
    let t_train = tfidf.transform(pick(train)).matrix;
    let t_test = tfidf.transform(pick(test)).matrix;
    let rows: Vec<usize> = (0..train.len()).collect();
    let std = Standardizer::fit(&t_train, &rows, &(0..t_train.ncols()).collect::<Vec<_>>());
    let kept = drop_correlated(&std.design(&t_train, &rows)?, sc.corr_threshold);
    let features: Vec<usize> = kept.iter().map(|&c| std.columns[c]).collect();
    let std = Standardizer::fit(&t_train, &rows, &features);
    let labels = corpus.labels();
    Ok(BinData {
        x: std.design(&t_train, &rows)?,
        y_train: train.iter().map(|&i| labels[i] as f64).collect(),
        labels_train: train.iter().map(|&i| labels[i]).collect(),
        a_test: std.apply(&t_test, &(0..test.len()).collect::<Vec<_>>()),
        labels_test: test.iter().map(|&i| labels[i]).collect(),
    })
}

fn fit_method(
    config: &ExperimentConfig,
    sc: &SentimentConfig,
    data: &BinData,
    alpha: f64,
    screened: bool,
    seed: u64,
) -> Result<ExperimentRecord> {
    let (yc, ybar) = center(&data.y_train);
    let d = if screened {
        Some(config.d_rule.resolve(data.x.n(), data.x.p())?)
    } else {
        None
    };
    let (columns, screen_seconds) = timed(|| match d {
        Some(d) => screen_columns(&data.x, &yc, d),
        None => Ok((0..data.x.p()).collect()),
    });
    let columns = columns?;
    let (fit, solve_seconds) = timed(|| -> Result<(f64, Vec<f64>)> {
        let x = data.x.select_columns(&columns);
        let high = lambda_max(&x, &yc, alpha)?;
        let grid = log_lambda_grid(high, high * sc.cv_min_ratio, sc.cv_lambdas);
        let best = cross_validate(data.x.matrix(), &data.y_train, alpha, &grid, sc, d, seed)?;
        let y_norm = yc.iter().map(|v| v * v).sum::<f64>().sqrt();
        let fit = Solver::new(&x, &yc, PenaltySpec::elastic_net(grid[best], alpha))
            .tol(sc.tol * y_norm)
            .max_iters(sc.max_iters)
            .skip_kkt()
            .solve()?;
        Ok((grid[best], fit.beta_hat))
    });
    let (lambda, beta) = fit?;
    let train_pred = predict(&data.x.select_columns(&columns).into_inner(), &beta, ybar);
    let a_test = data.a_test.select_columns(columns.iter());
    let test_pred = predict(&a_test, &beta, ybar);
    let record = ExperimentRecord {
        method: method_name(alpha, screened),
        alpha: Some(alpha),
        lambda: Some(lambda),
        post_screen_size: Some(columns.len()),
        active_size: Some(beta.iter().filter(|b| **b != 0.0).count()),
        train_tp: Some(tp_rate(&train_pred, &data.labels_train)),
        test_tp: Some(tp_rate(&test_pred, &data.labels_test)),
        screen_seconds: Some(screen_seconds),
        solve_seconds: Some(solve_seconds),
        status: STATUS_OK.into(),
        ..Default::default()
    };
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SentimentSummaryRow {
    pub method: String,
    pub bins: usize,
    pub features: f64,
    pub train_tp_mean: f64,
    pub train_tp_sd: f64,
    pub test_tp_mean: f64,
    pub test_tp_sd: f64,
    pub train_seconds_mean: f64,
    pub train_seconds_sd: f64,
}

#[derive(Debug, Clone)]
pub struct SentimentRun {
    pub master_seed: u64,
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<SentimentSummaryRow>,
}

impl SentimentRun {
    pub fn row(&self, method: &str) -> Option<&SentimentSummaryRow> {
        self.summary.iter().find(|r| r.method == method)
    }

    pub fn write(&self, config: &ExperimentConfig) -> Result<Vec<std::path::PathBuf>> {
        super::write_tables(&config.output_dir, &config.name, &self.records, &self.summary)
    }
}

/// Runs every method on every bin. The whole run is pinned to one thread
/// so that wall times are comparable between methods.
pub fn run_sentiment(config: &ExperimentConfig, corpus: &Corpus) -> Result<SentimentRun> {
    config.validate()?;
    let sc = config
        .sentiment
        .as_ref()
        .ok_or_else(|| Error::invalid("sentiment experiment needs a `sentiment` section"))?;
    if sc.folds < 2 || sc.cv_lambdas == 0 || !(sc.cv_min_ratio > 0.0 && sc.cv_min_ratio < 1.0) {
        return Err(Error::invalid("need folds >= 2, cv_lambdas >= 1 and cv_min_ratio in (0, 1)"));
    }
    if config.alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::invalid("every alpha must lie in (0, 1]"));
    }
    let master_seed = config.master_seed.unwrap_or_else(fresh_seed);
    info!("sentiment: {} documents, master seed {master_seed}", corpus.len());
    let bins = split_bins(corpus.labels(), sc.bins, sc.train_per_bin, sc.test_per_bin, substream(master_seed, 0))?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .map_err(|err| Error::invalid(err.to_string()))?;
    let mut records = Vec::new();
    pool.install(|| -> Result<()> {
        for (b, bin) in bins.iter().enumerate() {
            let trial_seed = derive_seed(master_seed, b as u64);
            let data = prepare_bin(corpus, &bin.train, &bin.test, sc)?;
            info!("bin {b}: {} training documents, {} features", data.x.n(), data.x.p());
            for &alpha in &config.alphas {
                for screened in [false, true] {
                    let mut rec = fit_method(config, sc, &data, alpha, screened, substream(trial_seed, 1))?;
                    rec.trial = b;
                    rec.trial_seed = trial_seed;
                    records.push(rec);
                }
            }
        }
        Ok(())
    })?;
    let summary = summarize(&records)?;
    Ok(SentimentRun {
        master_seed,
        records,
        summary,
    })
}

/// Loads the corpus named in the config and runs [`run_sentiment`].
pub fn run_sentiment_from_config(config: &ExperimentConfig) -> Result<SentimentRun> {
    let sc = config
        .sentiment
        .as_ref()
        .ok_or_else(|| Error::invalid("sentiment experiment needs a `sentiment` section"))?;
    run_sentiment(config, &Corpus::load(&sc.corpus_dir)?)
}

fn summarize(records: &[ExperimentRecord]) -> Result<Vec<SentimentSummaryRow>> {
    let key = |r: &ExperimentRecord| r.method.clone();
    let seed = |r: &ExperimentRecord| r.trial_seed;
    let stat = |f: fn(&ExperimentRecord) -> f64| aggregate(records, key, seed, f);
    let train = stat(|r| r.train_tp.unwrap_or(f64::NAN))?;
    let test = stat(|r| r.test_tp.unwrap_or(f64::NAN))?;
    let secs = stat(|r| r.screen_seconds.unwrap_or(0.0) + r.solve_seconds.unwrap_or(f64::NAN))?;
    let size = stat(|r| r.post_screen_size.map_or(f64::NAN, |s| s as f64))?;
    let get = |s: Option<Summary>| s.ok_or_else(|| Error::InsufficientData("empty sentiment cell".into()));
    let mut rows = Vec::new();
    for (((tr, te), se), sz) in train.into_iter().zip(test).zip(secs).zip(size) {
        let (tr_s, te_s, se_s, sz_s) = (get(tr.2)?, get(te.2)?, get(se.2)?, get(sz.2)?);
        rows.push(SentimentSummaryRow {
            method: tr.0,
            bins: tr.1,
            features: sz_s.mean,
            train_tp_mean: tr_s.mean,
            train_tp_sd: tr_s.sd,
            test_tp_mean: te_s.mean,
            test_tp_sd: te_s.sd,
            train_seconds_mean: se_s.mean,
            train_seconds_sd: se_s.sd,
        });
    }
    Ok(rows)
}

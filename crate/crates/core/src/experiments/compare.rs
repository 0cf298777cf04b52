//! Marginal-correlation screening at a fixed model size against the SAFE
//! and basic strong rules along a LASSO / elastic-net λ grid.

use log::{info, warn};
use nalgebra::DVector;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{BetaGenerator, ExperimentConfig};
use super::stats::{aggregate, OrdF64};
use super::{timed, ExperimentRecord, STATUS_OK};
use crate::baselines::{lambda_grid, rule_violations, safe_filter_scores, strong_filter_scores, PenaltySpec, Solver};
use crate::error::{Error, Result};
use crate::model::{dot, inf_norm, marginal_correlations, normalize_columns, DesignMatrix, SparseModel};
use crate::rng::{derive_seed, fresh_seed, rng_from_seed, substream};
use crate::screening::{detection_rate, screen_top_d};
use crate::synth::{generate_beta_shifted, generate_beta_uniform, generate_raw};

pub const METHOD_EXSIS: &str = "exsis";
pub const METHOD_SAFE: &str = "safe";
pub const METHOD_STRONG: &str = "strong";
pub const STATUS_NOT_CONVERGED: &str = "not-converged";

/// One screening instance: unit-norm columns and unit-norm response.
#[derive(Debug, Clone)]
pub struct Instance {
    pub x: DesignMatrix,
    pub y: Vec<f64>,
    pub model: SparseModel,
}

/// Draws `y = Xβ + ση` from the raw design, then normalizes the columns
/// of `X` and `y` itself.
pub fn comparison_instance(config: &ExperimentConfig, trial_seed: u64) -> Result<Instance> {
    let raw = generate_raw(&config.design, substream(trial_seed, 0))?;
    let p = config.design.p;
    let model = match config.beta_gen {
        BetaGenerator::Uniform { a } => {
            let e = *config.e_grid.first().ok_or_else(|| Error::invalid("uniform coefficients need an e_grid entry"))?;
            generate_beta_uniform(p, config.k, a, e, substream(trial_seed, 1))?
        }
        BetaGenerator::Shifted => generate_beta_shifted(p, config.k, substream(trial_seed, 1))?,
    }
    .with_sigma(config.sigma);
    let beta = DVector::from_column_slice(model.beta());
    let mut y: Vec<f64> = (&raw * beta).iter().copied().collect();
    if config.sigma > 0.0 {
        let mut rng = rng_from_seed(substream(trial_seed, 100));
        for yi in y.iter_mut() {
            let z: f64 = StandardNormal.sample(&mut rng);
            *yi += config.sigma * z;
        }
    }
    let norm = dot(&y, &y).sqrt();
    if norm == 0.0 {
        return Err(Error::invalid("response is identically zero"));
    }
    y.iter_mut().for_each(|v| *v /= norm);
    Ok(Instance {
        x: normalize_columns(raw)?,
        y,
        model,
    })
}

pub fn comparison_trial(config: &ExperimentConfig, trial: usize, trial_seed: u64) -> Result<Vec<ExperimentRecord>> {
    let inst = comparison_instance(config, trial_seed)?;
    let (x, y, support) = (&inst.x, &inst.y, inst.model.support());
    let base = ExperimentRecord {
        trial,
        trial_seed,
        status: STATUS_OK.into(),
        ..Default::default()
    };
    let d = config.d_rule.resolve(x.n(), x.p())?;
    let (screened, screen_seconds) = timed(|| marginal_correlations(x, y).and_then(|w| Ok((screen_top_d(&w, d)?, w))));
    let (outcome, w) = screened?;
    let mut out = vec![ExperimentRecord {
        method: METHOD_EXSIS.into(),
        detection_rate: Some(detection_rate(&outcome.selected, support)?),
        post_screen_size: Some(outcome.selected.len()),
        screen_seconds: Some(screen_seconds),
        ..base.clone()
    }];

    let col_sq: Vec<f64> = (0..x.p()).map(|j| dot(x.column(j), x.column(j))).collect();
    let y_norm = dot(y, y).sqrt();
    let w_max = inf_norm(&w);
    for &alpha in &config.alphas {
        let lambda_max = w_max / alpha;
        let mut warm = vec![0.0; x.p()];
        for (idx, lambda) in lambda_grid(lambda_max, config.lambda_grid_size).into_iter().enumerate() {
            let penalty = PenaltySpec::elastic_net(lambda, alpha);
            let (rules, screen_seconds) = timed(|| -> Result<_> {
                Ok((
                    safe_filter_scores(&w, &col_sq, y_norm, &penalty, lambda_max)?,
                    strong_filter_scores(&w, lambda, lambda_max, alpha)?,
                ))
            });
            let (safe, strong) = rules?;
            let fit = if config.solve_path {
                let (res, secs) = timed(|| Solver::new(x, y, penalty).warm_start(&warm).solve());
                let res = res?;
                if !res.converged {
                    warn!("trial {trial}: solver did not converge at alpha {alpha}, lambda {lambda}");
                }
                warm.clone_from(&res.beta_hat);
                Some((res, secs))
            } else {
                None
            };
            for (method, rule) in [(METHOD_SAFE, &safe), (METHOD_STRONG, &strong)] {
                let mut rec = ExperimentRecord {
                    method: method.into(),
                    alpha: Some(alpha),
                    lambda: Some(lambda),
                    lambda_index: Some(idx),
                    detection_rate: Some(detection_rate(&rule.kept, support)?),
                    post_screen_size: Some(rule.kept.len()),
                    screen_seconds: Some(screen_seconds),
                    ..base.clone()
                };
                if let Some((res, secs)) = &fit {
                    rec.active_size = Some(res.active_set.len());
                    rec.kkt_residual = Some(res.kkt_residual);
                    rec.violations = Some(rule_violations(rule, &res.beta_hat).len());
                    rec.solve_seconds = Some(*secs);
                    if !res.converged {
                        rec.status = STATUS_NOT_CONVERGED.into();
                    }
                }
                out.push(rec);
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareSummaryRow {
    pub method: String,
    pub alpha: Option<f64>,
    pub lambda_index: Option<usize>,
    /// `λ / λ_max`, identical across trials.
    pub lambda_ratio: Option<f64>,
    pub median_lambda: Option<f64>,
    pub trials: usize,
    pub median_post_screen_size: f64,
    pub median_detection_rate: f64,
    pub max_violations: Option<usize>,
    /// Largest λ of its rule whose median detection rate is 1.
    pub labeled: bool,
}

#[derive(Debug, Clone)]
pub struct CompareRun {
    pub master_seed: u64,
    pub records: Vec<ExperimentRecord>,
    pub summary: Vec<CompareSummaryRow>,
}

impl CompareRun {
    pub fn exsis_row(&self) -> Option<&CompareSummaryRow> {
        self.summary.iter().find(|r| r.method == METHOD_EXSIS)
    }

    pub fn write(&self, config: &ExperimentConfig) -> Result<Vec<std::path::PathBuf>> {
        let mut paths = super::write_tables(&config.output_dir, &config.name, &self.records, &self.summary)?;
        let svg = config.output_dir.join(format!("{}.svg", config.name));
        super::plot::comparison_curves(&svg, &self.summary)?;
        paths.push(svg);
        Ok(paths)
    }
}

pub fn run_screening_comparison(config: &ExperimentConfig) -> Result<CompareRun> {
    config.validate()?;
    if config.lambda_grid_size == 0 {
        return Err(Error::invalid("lambda_grid_size must be positive"));
    }
    if config.alphas.iter().any(|&a| !(a > 0.0 && a <= 1.0)) {
        return Err(Error::invalid("every alpha must lie in (0, 1]"));
    }
    let master_seed = config.master_seed.unwrap_or_else(fresh_seed);
    info!("compare: {} trials, master seed {master_seed}", config.trials);
    let per_trial: Vec<Vec<ExperimentRecord>> = (0..config.trials)
        .into_par_iter()
        .map(|t| comparison_trial(config, t, derive_seed(master_seed, t as u64)))
        .collect::<Result<_>>()?;
    let records: Vec<ExperimentRecord> = per_trial.into_iter().flatten().collect();
    let summary = summarize(config, &records)?;
    Ok(CompareRun {
        master_seed,
        records,
        summary,
    })
}

fn summarize(config: &ExperimentConfig, records: &[ExperimentRecord]) -> Result<Vec<CompareSummaryRow>> {
    let key = |r: &ExperimentRecord| (r.method.clone(), r.alpha.map(OrdF64), r.lambda_index);
    let seed = |r: &ExperimentRecord| r.trial_seed;
    let sizes = aggregate(records, key, seed, |r| r.post_screen_size.map_or(f64::NAN, |s| s as f64))?;
    let rates = aggregate(records, key, seed, |r| r.detection_rate.unwrap_or(f64::NAN))?;
    let lambdas = aggregate(records, key, seed, |r| r.lambda.unwrap_or(f64::NAN))?;
    let viol = aggregate(records, key, seed, |r| r.violations.map_or(f64::NAN, |v| v as f64))?;
    let unit = lambda_grid(1.0, config.lambda_grid_size);
    let mut rows: Vec<CompareSummaryRow> = Vec::with_capacity(sizes.len());
    for (((s, r), l), v) in sizes.into_iter().zip(rates).zip(lambdas).zip(viol) {
        let ((method, alpha, idx), trials, s) = s;
        let (Some(s), Some(r)) = (s, r.2) else {
            return Err(Error::InsufficientData(format!("no values for {method} cell")));
        };
        let ratio = idx.map(|i| unit[i]);
        rows.push(CompareSummaryRow {
            method,
            alpha: alpha.map(|a| a.0),
            lambda_index: idx,
            lambda_ratio: ratio,
            median_lambda: l.2.map(|l| l.median),
            trials,
            median_post_screen_size: s.median,
            median_detection_rate: r.median,
            max_violations: v.2.map(|v| v.max as usize),
            labeled: false,
        });
    }
    // Rows of one rule are contiguous and ordered by decreasing λ.
    let mut start = 0;
    while start < rows.len() {
        let mut end = start;
        while end < rows.len() && rows[end].method == rows[start].method && rows[end].alpha == rows[start].alpha {
            end += 1;
        }
        if rows[start].lambda_index.is_some() {
            if let Some(hit) = rows[start..end].iter_mut().find(|r| r.median_detection_rate == 1.0) {
                hit.labeled = true;
            }
        }
        start = end;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::DesignSpec;

    fn small() -> ExperimentConfig {
        ExperimentConfig {
            name: "c".into(),
            trials: 4,
            master_seed: Some(3),
            design: DesignSpec::gaussian(40, 300),
            lambda_grid_size: 20,
            ..ExperimentConfig::compare(300, 0.0)
        }
    }

    #[test]
    fn instance_is_normalized() {
        let inst = comparison_instance(&small(), 99).unwrap();
        assert!((dot(&inst.y, &inst.y) - 1.0).abs() < 1e-12);
        assert!((dot(inst.x.column(7), inst.x.column(7)) - 1.0).abs() < 1e-12);
        assert_eq!(inst.model.k(), 5);
        assert!(inst.model.beta_min() >= 2.0);
    }

    #[test]
    fn grid_ends_and_rule_limits() {
        let run = run_screening_comparison(&small()).unwrap();
        let exsis = run.exsis_row().unwrap();
        assert_eq!(exsis.median_post_screen_size, 80.0);
        for r in run.records.iter().filter(|r| r.method != METHOD_EXSIS) {
            let idx = r.lambda_index.unwrap();
            // Bottom of the grid: SAFE threshold is nonpositive at unit norms.
            if r.method == METHOD_SAFE && idx == 19 {
                assert_eq!(r.post_screen_size, Some(300));
            }
            // Strong rule at α = 1 keeps everything once λ ≤ λ_max/2.
            if r.method == METHOD_STRONG && r.alpha == Some(1.0) && r.lambda_index.unwrap() >= 10 {
                assert_eq!(r.post_screen_size, Some(300));
            }
        }
        let ratios: Vec<f64> = run.summary.iter().filter(|r| r.method == METHOD_SAFE && r.alpha == Some(1.0)).map(|r| r.lambda_ratio.unwrap()).collect();
        assert_eq!(ratios.len(), 20);
        assert_eq!(ratios[0], 1.0);
        assert!((ratios[19] - 0.05).abs() < 1e-15);
        for rule in [METHOD_SAFE, METHOD_STRONG] {
            for alpha in [1.0, 0.5] {
                let labeled = run.summary.iter().filter(|r| r.method == rule && r.alpha == Some(alpha) && r.labeled).count();
                assert!(labeled <= 1);
            }
        }
    }

    #[test]
    fn path_audit_is_safe_and_reproducible() {
        let config = ExperimentConfig {
            trials: 2,
            solve_path: true,
            ..small()
        };
        let a = run_screening_comparison(&config).unwrap();
        let b = run_screening_comparison(&config).unwrap();
        let strip = |r: &CompareRun| r.records.iter().map(ExperimentRecord::without_timings).collect::<Vec<_>>();
        assert_eq!(strip(&a), strip(&b));
        for r in a.records.iter().filter(|r| r.method == METHOD_SAFE) {
            assert_eq!(r.violations, Some(0));
            assert!(r.kkt_residual.unwrap() <= 1e-6);
        }
    }
}

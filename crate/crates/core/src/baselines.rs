//! LASSO / elastic-net by cyclic coordinate descent, plus the SAFE and basic
//! strong screening rules.
//!
//! The objective is `½‖y − Xβ‖₂² + λ₁‖β‖₁ + ½λ₂‖β‖₂²` with
//! `(λ₁, λ₂) = (αλ, (1−α)λ)`. Columns need not have unit norm.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, inf_norm, marginal_correlations, DesignMatrix};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PenaltyKind {
    Lasso,
    ElasticNet,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltySpec {
    pub kind: PenaltyKind,
    pub lambda: f64,
    pub alpha: f64,
}

impl PenaltySpec {
    pub fn lasso(lambda: f64) -> Self {
        PenaltySpec {
            kind: PenaltyKind::Lasso,
            lambda,
            alpha: 1.0,
        }
    }

    pub fn elastic_net(lambda: f64, alpha: f64) -> Self {
        PenaltySpec {
            kind: if alpha == 1.0 { PenaltyKind::Lasso } else { PenaltyKind::ElasticNet },
            lambda,
            alpha,
        }
    }

    /// Same mixing, different `λ`.
    pub fn with_lambda(self, lambda: f64) -> Self {
        PenaltySpec { lambda, ..self }
    }

    pub fn lambda1(&self) -> f64 {
        self.alpha * self.lambda
    }

    pub fn lambda2(&self) -> f64 {
        (1.0 - self.alpha) * self.lambda
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {}", self.lambda)));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::invalid(format!("alpha must lie in (0, 1], got {}", self.alpha)));
        }
        if (self.kind == PenaltyKind::Lasso) != (self.alpha == 1.0) {
            return Err(Error::invalid("lasso penalty requires alpha = 1 and elastic net alpha < 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverResult {
    pub beta_hat: Vec<f64>,
    pub active_set: Vec<usize>,
    /// Coordinate-descent cycles (full sweeps plus active-set sweeps).
    pub iterations: usize,
    pub kkt_residual: f64,
    pub objective: f64,
    pub converged: bool,
}

fn check_response(x: &DesignMatrix, y: &[f64]) -> Result<()> {
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch {
            what: "response",
            expected: x.n(),
            found: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }
    Ok(())
}

/// `‖Xᵀy‖∞ / α`, the smallest `λ` with an all-zero solution.
pub fn lambda_max(x: &DesignMatrix, y: &[f64], alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::invalid(format!("alpha must lie in (0, 1], got {alpha}")));
    }
    Ok(inf_norm(&marginal_correlations(x, y)?) / alpha)
}

/// `size` values spaced linearly from `λ_max` down to `λ_max/size`, both ends
/// included.
pub fn lambda_grid(lambda_max: f64, size: usize) -> Vec<f64> {
    if size <= 1 {
        return vec![lambda_max; size];
    }
    let low = lambda_max / size as f64;
    let step = (lambda_max - low) / (size - 1) as f64;
    (0..size)
        .map(|i| if i + 1 == size { low } else { lambda_max - step * i as f64 })
        .collect()
}

/// `num` values spaced logarithmically from `high` down to `low`.
pub fn log_lambda_grid(high: f64, low: f64, num: usize) -> Vec<f64> {
    if num <= 1 {
        return vec![high; num];
    }
    let (lh, ll) = (high.ln(), low.ln());
    (0..num)
        .map(|i| (lh + (ll - lh) * i as f64 / (num - 1) as f64).exp())
        .collect()
}

fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

pub fn objective(x: &DesignMatrix, y: &[f64], penalty: &PenaltySpec, beta: &[f64]) -> f64 {
    let fit = x.mul_vec(beta);
    let rss: f64 = y.iter().zip(&fit).map(|(a, b)| (a - b) * (a - b)).sum();
    penalized(0.5 * rss, penalty, beta)
}

fn penalized(half_rss: f64, penalty: &PenaltySpec, beta: &[f64]) -> f64 {
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    let l2: f64 = beta.iter().map(|b| b * b).sum();
    half_rss + penalty.lambda1() * l1 + 0.5 * penalty.lambda2() * l2
}

/// Worst coordinatewise stationarity violation:
/// `|X_jᵀr − λ₂β_j − λ₁ sign β_j|` on the active set and
/// `max(0, |X_jᵀr| − λ₁)` off it.
pub fn kkt_violation(x: &DesignMatrix, y: &[f64], penalty: &PenaltySpec, beta: &[f64]) -> Result<f64> {
    check_response(x, y)?;
    if beta.len() != x.p() {
        return Err(Error::DimensionMismatch {
            what: "coefficient vector",
            expected: x.p(),
            found: beta.len(),
        });
    }
    let fit = x.mul_vec(beta);
    let r: Vec<f64> = y.iter().zip(&fit).map(|(a, b)| a - b).collect();
    let g = marginal_correlations(x, &r)?;
    let (l1, l2) = (penalty.lambda1(), penalty.lambda2());
    Ok(g.iter()
        .zip(beta)
        .map(|(&gj, &bj)| {
            if bj != 0.0 {
                (gj - l2 * bj - l1 * bj.signum()).abs()
            } else {
                (gj.abs() - l1).max(0.0)
            }
        })
        .fold(0.0, f64::max))
}

pub fn kkt_check(x: &DesignMatrix, y: &[f64], penalty: &PenaltySpec, beta: &[f64], tol: f64) -> Result<(bool, f64)> {
    let worst = kkt_violation(x, y, penalty, beta)?;
    Ok((worst <= tol, worst))
}

/// Solves over all columns from a zero start.
pub fn solve_penalized(x: &DesignMatrix, y: &[f64], penalty: &PenaltySpec, tol: f64, max_iters: usize) -> Result<SolverResult> {
    Solver::new(x, y, *penalty).tol(tol).max_iters(max_iters).solve()
}

/// Coordinate-descent configuration. Restricting to `columns` solves the
/// sub-problem on those columns; the rest stay at zero.
pub struct Solver<'a> {
    x: &'a DesignMatrix,
    y: &'a [f64],
    penalty: PenaltySpec,
    tol: f64,
    max_iters: usize,
    columns: Option<&'a [usize]>,
    warm: Option<&'a [f64]>,
    kkt: bool,
}

impl<'a> Solver<'a> {
    pub fn new(x: &'a DesignMatrix, y: &'a [f64], penalty: PenaltySpec) -> Self {
        Solver {
            x,
            y,
            penalty,
            tol: DEFAULT_TOL,
            max_iters: DEFAULT_MAX_ITERS,
            columns: None,
            warm: None,
            kkt: true,
        }
    }

    pub fn tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn max_iters(mut self, max_iters: usize) -> Self {
        self.max_iters = max_iters;
        self
    }

    pub fn columns(mut self, columns: &'a [usize]) -> Self {
        self.columns = Some(columns);
        self
    }

    pub fn warm_start(mut self, beta: &'a [f64]) -> Self {
        self.warm = Some(beta);
        self
    }

    /// Skips the final full-problem KKT evaluation (reported as NaN).
    pub fn skip_kkt(mut self) -> Self {
        self.kkt = false;
        self
    }

    pub fn solve(self) -> Result<SolverResult> {
        let Solver {
            x,
            y,
            penalty,
            tol,
            max_iters,
            columns,
            warm,
            kkt,
        } = self;
        penalty.validate()?;
        check_response(x, y)?;
        let p = x.p();
        let all: Vec<usize>;
        let cols: &[usize] = match columns {
            Some(c) => {
                if let Some(&bad) = c.iter().find(|&&j| j >= p) {
                    return Err(Error::invalid(format!("column {bad} out of range for p = {p}")));
                }
                c
            }
            None => {
                all = (0..p).collect();
                &all
            }
        };
        let mut beta = vec![0.0; p];
        if let Some(w) = warm {
            if w.len() != p {
                return Err(Error::DimensionMismatch {
                    what: "warm start",
                    expected: p,
                    found: w.len(),
                });
            }
            for &j in cols {
                beta[j] = w[j];
            }
        }
        let mut r: Vec<f64> = y.to_vec();
        for &j in cols {
            if beta[j] != 0.0 {
                for (ri, xi) in r.iter_mut().zip(x.column(j)) {
                    *ri -= beta[j] * xi;
                }
            }
        }
        let sq: Vec<f64> = (0..cols.len()).map(|c| dot(x.column(cols[c]), x.column(cols[c]))).collect();
        let (l1, l2) = (penalty.lambda1(), penalty.lambda2());

        // One pass over `set` (positions into `cols`); returns the largest
        // coordinate change.
        let sweep = |set: &[usize], beta: &mut [f64], r: &mut [f64]| -> f64 {
            let mut max_delta = 0.0f64;
            for &c in set {
                let j = cols[c];
                let xj = x.column(j);
                let old = beta[j];
                let z = dot(xj, r) + sq[c] * old;
                let new = soft_threshold(z, l1) / (sq[c] + l2);
                let delta = new - old;
                if delta != 0.0 {
                    for (ri, xi) in r.iter_mut().zip(xj) {
                        *ri -= delta * xi;
                    }
                    beta[j] = new;
                    max_delta = max_delta.max(delta.abs());
                }
            }
            max_delta
        };
        let current_objective = |beta: &[f64], r: &[f64]| penalized(0.5 * dot(r, r), &penalty, beta);

        let everything: Vec<usize> = (0..cols.len()).collect();
        let mut iterations = 0usize;
        let mut converged = false;
        let mut last = current_objective(&beta, &r);
        let mut tick = |beta: &[f64], r: &[f64], iterations: &mut usize| {
            *iterations += 1;
            if cfg!(debug_assertions) {
                let now = current_objective(beta, r);
                debug_assert!(
                    now <= last + 1e-10 * last.abs().max(1.0),
                    "objective increased from {last} to {now}"
                );
                last = now;
            }
        };
        'outer: while iterations < max_iters {
            let full_delta = sweep(&everything, &mut beta, &mut r);
            tick(&beta, &r, &mut iterations);
            if full_delta < tol {
                converged = true;
                break;
            }
            let active: Vec<usize> = everything.iter().copied().filter(|&c| beta[cols[c]] != 0.0).collect();
            loop {
                if iterations >= max_iters {
                    break 'outer;
                }
                let delta = sweep(&active, &mut beta, &mut r);
                tick(&beta, &r, &mut iterations);
                if delta < tol {
                    break;
                }
            }
        }
        if !converged {
            warn!("coordinate descent stopped after {iterations} cycles without converging");
        }
        let objective = current_objective(&beta, &r);
        let kkt_residual = if kkt {
            kkt_violation(x, y, &penalty, &beta)?
        } else {
            f64::NAN
        };
        let active_set = (0..p).filter(|&j| beta[j] != 0.0).collect();
        Ok(SolverResult {
            beta_hat: beta,
            active_set,
            iterations,
            kkt_residual,
            objective,
            converged,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Safe,
    StrongBasic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreenRuleOutcome {
    pub kept: Vec<usize>,
    pub discarded: Vec<usize>,
    pub rule: RuleKind,
    pub lambda_max: f64,
    /// Variables with `|X_jᵀy|` below this are discarded.
    pub threshold: f64,
}

fn split(scores: &[f64], threshold: f64, rule: RuleKind, lambda_max: f64) -> ScreenRuleOutcome {
    let (mut kept, mut discarded) = (Vec::new(), Vec::new());
    for (j, s) in scores.iter().enumerate() {
        if s.abs() < threshold {
            discarded.push(j);
        } else {
            kept.push(j);
        }
    }
    ScreenRuleOutcome {
        kept,
        discarded,
        rule,
        lambda_max,
        threshold,
    }
}

fn check_lambda(lambda: f64, lambda_max: f64) -> Result<()> {
    if !(lambda > 0.0 && lambda_max > 0.0) {
        return Err(Error::invalid(format!("need lambda > 0 and lambda_max > 0, got {lambda}, {lambda_max}")));
    }
    if lambda > lambda_max {
        warn!("lambda {lambda} exceeds lambda_max {lambda_max}; the rule may discard every variable");
    }
    Ok(())
}

/// SAFE rule for the LASSO: discard `j` iff
/// `|X_jᵀy| < λ − ‖X_j‖‖y‖(λ_max − λ)/λ_max`.
pub fn safe_filter(x: &DesignMatrix, y: &[f64], lambda: f64, lambda_max: f64) -> Result<ScreenRuleOutcome> {
    safe_filter_penalized(x, y, &PenaltySpec::lasso(lambda), lambda_max)
}

/// SAFE rule for the elastic net, obtained by applying the LASSO rule to the
/// augmented problem `[X; √λ₂ I]`, `[y; 0]`: discard `j` iff
/// `|X_jᵀy| < λ₁ − √(‖X_j‖² + λ₂)‖y‖(λ₁max − λ₁)/λ₁max` with
/// `λ₁max = α·lambda_max`. At `α = 1` this is [`safe_filter`].
pub fn safe_filter_penalized(x: &DesignMatrix, y: &[f64], penalty: &PenaltySpec, lambda_max: f64) -> Result<ScreenRuleOutcome> {
    let w = marginal_correlations(x, y)?;
    let col_sq: Vec<f64> = (0..x.p()).map(|j| dot(x.column(j), x.column(j))).collect();
    safe_filter_scores(&w, &col_sq, dot(y, y).sqrt(), penalty, lambda_max)
}

/// [`safe_filter_penalized`] from precomputed `w = Xᵀy`, squared column
/// norms and `‖y‖`, for sweeping a λ grid without touching `X` again.
pub fn safe_filter_scores(w: &[f64], col_sq_norms: &[f64], y_norm: f64, penalty: &PenaltySpec, lambda_max: f64) -> Result<ScreenRuleOutcome> {
    penalty.validate()?;
    check_lambda(penalty.lambda, lambda_max)?;
    if w.len() != col_sq_norms.len() {
        return Err(Error::DimensionMismatch {
            what: "column norms",
            expected: w.len(),
            found: col_sq_norms.len(),
        });
    }
    let (l1, l2) = (penalty.lambda1(), penalty.lambda2());
    let l1_max = penalty.alpha * lambda_max;
    let gap = (l1_max - l1) / l1_max;
    let (mut kept, mut discarded) = (Vec::new(), Vec::new());
    let mut loosest = f64::INFINITY;
    for (j, (wj, sq)) in w.iter().zip(col_sq_norms).enumerate() {
        let threshold = l1 - (sq + l2).sqrt() * y_norm * gap;
        loosest = loosest.min(threshold);
        if wj.abs() < threshold {
            discarded.push(j);
        } else {
            kept.push(j);
        }
    }
    Ok(ScreenRuleOutcome {
        kept,
        discarded,
        rule: RuleKind::Safe,
        lambda_max,
        threshold: loosest,
    })
}

/// Basic strong rule: discard `j` iff `|X_jᵀy| < 2λ₁ − α·lambda_max`.
pub fn strong_filter(x: &DesignMatrix, y: &[f64], lambda: f64, lambda_max: f64, alpha: f64) -> Result<ScreenRuleOutcome> {
    strong_filter_scores(&marginal_correlations(x, y)?, lambda, lambda_max, alpha)
}

/// [`strong_filter`] from precomputed `w = Xᵀy`.
pub fn strong_filter_scores(w: &[f64], lambda: f64, lambda_max: f64, alpha: f64) -> Result<ScreenRuleOutcome> {
    let penalty = PenaltySpec::elastic_net(lambda, alpha);
    penalty.validate()?;
    check_lambda(lambda, lambda_max)?;
    let threshold = 2.0 * penalty.lambda1() - alpha * lambda_max;
    Ok(split(w, threshold, RuleKind::StrongBasic, lambda_max))
}

/// Discarded variables that are nonzero in `beta_hat`.
pub fn rule_violations(outcome: &ScreenRuleOutcome, beta_hat: &[f64]) -> Vec<usize> {
    outcome.discarded.iter().copied().filter(|&j| beta_hat[j] != 0.0).collect()
}

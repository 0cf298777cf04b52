//! Top-`d` marginal-correlation screening, oracle minimum model size,
//! detection rate, and the `t̄ᵢ` shrinking-sequence diagnostic.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Selected index set (sorted ascending) and boundary information.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScreeningOutcome {
    pub selected: Vec<usize>,
    pub d: usize,
    /// The `d`-th largest `|w_i|`.
    pub threshold_value: f64,
    /// True when an unselected index has `|w_j|` equal to the threshold, so
    /// the index tie rule decided membership.
    pub tie_broken: bool,
}

/// Orders indices by decreasing `|w|`, then increasing index.
fn magnitude_order(w: &[f64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| w[b].abs().total_cmp(&w[a].abs()).then(a.cmp(&b))
}

/// Keeps the `d` indices with the largest `|w_i|`; ties at the boundary go
/// to the smaller index. Expected `O(p)` via selection, not sorting.
pub fn screen_top_d(w: &[f64], d: usize) -> Result<ScreeningOutcome> {
    let p = w.len();
    if d == 0 || d > p {
        return Err(Error::invalid(format!("d = {d} must lie in [1, {p}]")));
    }
    if w.iter().any(|v| v.is_nan()) {
        return Err(Error::NonFinite("marginal correlations"));
    }
    let mut order: Vec<usize> = (0..p).collect();
    let cmp = magnitude_order(w);
    if d < p {
        order.select_nth_unstable_by(d - 1, &cmp);
    }
    let mut selected = order[..d].to_vec();
    let threshold_value = selected
        .iter()
        .map(|&i| w[i].abs())
        .fold(f64::INFINITY, f64::min);
    let tie_broken = order[d..].iter().any(|&j| w[j].abs() == threshold_value);
    selected.sort_unstable();
    Ok(ScreeningOutcome {
        selected,
        d,
        threshold_value,
        tie_broken,
    })
}

fn check_support(support: &[usize], p: usize) -> Result<()> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    if let Some(&bad) = support.iter().find(|&&i| i >= p) {
        return Err(Error::invalid(format!("support index {bad} out of range for p = {p}")));
    }
    Ok(())
}

/// Smallest `d` that keeps the whole support under any tie-breaking:
/// `|{j : |w_j| ≥ min_{i∈S*} |w_i|}|`.
pub fn minimum_model_size(w: &[f64], support: &[usize]) -> Result<usize> {
    check_support(support, w.len())?;
    let weakest = support
        .iter()
        .map(|&i| w[i].abs())
        .fold(f64::INFINITY, f64::min);
    Ok(w.iter().filter(|v| v.abs() >= weakest).count())
}

/// `|S* ∩ Ŝ| / |S*|`.
pub fn detection_rate(selected: &[usize], support: &[usize]) -> Result<f64> {
    if support.is_empty() {
        return Err(Error::EmptySupport);
    }
    let chosen: std::collections::HashSet<usize> = selected.iter().copied().collect();
    let hits = support.iter().filter(|i| chosen.contains(i)).count();
    Ok(hits as f64 / support.len() as f64)
}

/// Inputs of the shrinking-sequence diagnostic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceParams {
    pub k: usize,
    pub beta_l1: f64,
    pub beta_l2: f64,
    pub beta_min: f64,
    pub b: f64,
    pub sigma: f64,
    pub p: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterativeTrace {
    pub tbar_sequence: Vec<f64>,
    pub p_sequence: Vec<usize>,
    pub terminated: bool,
    pub final_d: usize,
    /// `√k / (MSR − 2b − 4√(σ² ln p)/‖β‖₂)`, the level the sequence must reach.
    pub stop_level: f64,
}

pub const TRACE_MAX_ITERATIONS: usize = 1_000_000;

/// Runs `p₀ = p`, `t̄ᵢ = (pᵢ₋₁ b‖β‖₂ + ‖β‖₁ + 2pᵢ₋₁√(σ² ln p)) /
/// (β_min − b‖β‖₂ − 2√(σ² ln p))` until `pᵢ` drops to the stop level.
///
/// The count `tᵢ` bounded by `t̄ᵢ` is an integer, so `pᵢ = ⌊t̄ᵢ⌋` still
/// contains every index at least as strong as the weakest active one and is
/// strictly below `pᵢ₋₁` whenever `t̄ᵢ < pᵢ₋₁`.
pub fn tbar_trace(params: &TraceParams) -> Result<IterativeTrace> {
    let TraceParams {
        k,
        beta_l1,
        beta_l2,
        beta_min,
        b,
        sigma,
        p,
    } = *params;
    if k == 0 {
        return Err(Error::EmptySupport);
    }
    if !(beta_l2 > 0.0 && beta_min > 0.0 && beta_l1 >= beta_min && b >= 0.0 && sigma >= 0.0) {
        return Err(Error::invalid(format!("inconsistent trace parameters {params:?}")));
    }
    let noise = (sigma * sigma * (p as f64).ln()).sqrt();
    let msr = beta_min / beta_l2;
    let margin = msr - 2.0 * b - 4.0 * noise / beta_l2;
    if margin <= 0.0 {
        return Err(Error::Precondition(format!(
            "MSR {msr:.6} must exceed 2b + 4 sqrt(sigma^2 ln p)/||beta||_2 = {:.6} (deficit {:.6})",
            msr - margin,
            -margin
        )));
    }
    let stop_level = (k as f64).sqrt() / margin;
    let denominator = beta_min - b * beta_l2 - 2.0 * noise;
    let mut trace = IterativeTrace {
        tbar_sequence: Vec::new(),
        p_sequence: Vec::new(),
        terminated: false,
        final_d: p,
        stop_level,
    };
    let reached = |v: usize| v as f64 <= stop_level * (1.0 + 1e-12);
    let mut current = p;
    if reached(current) {
        trace.terminated = true;
        return Ok(trace);
    }
    for _ in 0..TRACE_MAX_ITERATIONS {
        let pf = current as f64;
        let tbar = (pf * b * beta_l2 + beta_l1 + 2.0 * pf * noise) / denominator;
        // Guard floor() against t̄ landing a rounding error below an integer.
        let next = (tbar * (1.0 + 1e-12) + 1e-9).floor() as usize;
        trace.tbar_sequence.push(tbar);
        if next >= current {
            return Err(Error::Precondition(format!(
                "sequence stalled at p = {current} (t̄ = {tbar})"
            )));
        }
        trace.p_sequence.push(next);
        current = next;
        if reached(current) {
            trace.terminated = true;
            trace.final_d = current;
            return Ok(trace);
        }
    }
    Err(Error::Precondition(format!(
        "sequence did not reach {stop_level} within {TRACE_MAX_ITERATIONS} iterations"
    )))
}

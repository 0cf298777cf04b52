//! Screened-model-size calculators.
//!
//! Every route evaluates `d = ⌈√k / (MSR − 2b − 4√(σ² ln p)/‖β‖₂)⌉` with a
//! route-specific screening parameter `b`, and reports the preconditions it
//! checked. Infeasibility is returned as a value (`d_min = None`) so sweeps can
//! tabulate it.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::coherence::DEFAULT_C_MU;
use crate::error::{Error, Result};

/// Default for the slack constants `c₁`, `c₂` (any value above 2 is valid).
pub const DEFAULT_SLACK: f64 = 2.5;

/// Denominators at or below this are treated as non-positive.
pub const DENOMINATOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundInput {
    pub n: usize,
    pub p: usize,
    pub k: Option<usize>,
    pub beta_min: Option<f64>,
    pub beta_l2: f64,
    pub sigma: f64,
    /// Screening parameter for the general route.
    pub b: Option<f64>,
    /// `b*/σ*`, at least 1 for sub-Gaussian entries.
    pub subgauss_ratio: f64,
    pub mu: Option<f64>,
    pub c_mu: f64,
    pub c1: f64,
    pub c2: f64,
}

impl BoundInput {
    pub fn new(n: usize, p: usize) -> Self {
        BoundInput {
            n,
            p,
            k: None,
            beta_min: None,
            beta_l2: 1.0,
            sigma: 0.0,
            b: None,
            subgauss_ratio: 1.0,
            mu: None,
            c_mu: DEFAULT_C_MU,
            c1: DEFAULT_SLACK,
            c2: DEFAULT_SLACK,
        }
    }

    /// Sets `β_min` so that `β_min/‖β‖₂ = msr` at the current `‖β‖₂`.
    pub fn with_msr(mut self, msr: f64) -> Self {
        self.beta_min = Some(msr * self.beta_l2);
        self
    }

    pub fn msr(&self) -> Option<f64> {
        self.beta_min.map(|m| m / self.beta_l2)
    }

    /// `4√(σ² ln p)/‖β‖₂`.
    pub fn noise_term(&self) -> f64 {
        4.0 * (self.sigma * self.sigma * ln(self.p)).sqrt() / self.beta_l2
    }

    fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p < 2 {
            return Err(Error::invalid(format!("need n >= 1 and p >= 2, got n = {}, p = {}", self.n, self.p)));
        }
        if !(self.beta_l2 > 0.0 && self.beta_l2.is_finite()) {
            return Err(Error::invalid("beta_l2 must be positive"));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(Error::invalid("sigma must be nonnegative"));
        }
        if let Some(m) = self.beta_min {
            if !(m > 0.0 && m.is_finite()) {
                return Err(Error::invalid("beta_min must be positive"));
            }
        }
        if self.k == Some(0) {
            return Err(Error::EmptySupport);
        }
        Ok(())
    }

    fn require_k(&self) -> Result<usize> {
        self.k.ok_or_else(|| Error::invalid("sparsity k is required for this route"))
    }

    fn require_msr(&self) -> Result<f64> {
        self.msr().ok_or_else(|| Error::invalid("beta_min (or MSR) is required for this route"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    General,
    SubGaussian,
    NOverLogP,
    SqrtN,
    Mu,
    Coherence,
}

impl fmt::Display for Route {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Route::General => "general",
            Route::SubGaussian => "subgaussian",
            Route::NOverLogP => "n-over-logp",
            Route::SqrtN => "sqrt-n",
            Route::Mu => "mu",
            Route::Coherence => "coherence",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Precondition {
    pub name: String,
    pub holds: bool,
    pub lhs: f64,
    pub rhs: f64,
    /// A failing hard precondition makes the result infeasible; a soft one
    /// only adds a warning.
    pub hard: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundResult {
    pub route: Route,
    pub d_min: Option<usize>,
    pub b: Option<f64>,
    pub denominator: Option<f64>,
    pub preconditions: Vec<Precondition>,
    pub warnings: Vec<String>,
    pub success_probability: Option<f64>,
    /// Parameter-free size from the matching corollary, when it applies.
    pub fallback_d: Option<usize>,
    /// `⌈√k / (2(c₁−1)b + 4(c₂−1)√(σ² ln p)/‖β‖₂)⌉`, valid under the slack
    /// MSR condition.
    pub slack_d: Option<usize>,
}

impl BoundResult {
    fn new(route: Route) -> Self {
        BoundResult {
            route,
            d_min: None,
            b: None,
            denominator: None,
            preconditions: Vec::new(),
            warnings: Vec::new(),
            success_probability: None,
            fallback_d: None,
            slack_d: None,
        }
    }

    pub fn feasible(&self) -> bool {
        self.d_min.is_some()
    }

    /// Failed hard preconditions, formatted for error reporting.
    pub fn deficits(&self) -> Vec<String> {
        self.preconditions
            .iter()
            .filter(|c| c.hard && !c.holds)
            .map(|c| format!("{}: lhs {} vs rhs {} (deficit {})", c.name, c.lhs, c.rhs, (c.lhs - c.rhs).abs()))
            .collect()
    }

    fn check(&mut self, name: &str, holds: bool, lhs: f64, rhs: f64, hard: bool) -> bool {
        if !holds && !hard {
            self.warnings.push(format!("{name} fails ({lhs} vs {rhs})"));
        }
        self.preconditions.push(Precondition {
            name: name.to_string(),
            holds,
            lhs,
            rhs,
            hard,
        });
        holds || !hard
    }

    fn hard_ok(&self) -> bool {
        self.preconditions.iter().all(|c| c.holds || !c.hard)
    }
}

fn ln(p: usize) -> f64 {
    (p as f64).ln()
}

/// Ceiling that ignores rounding noise just above an integer.
pub fn tolerant_ceil(x: f64) -> usize {
    let slack = 1e-9 * x.abs().max(1.0);
    (x - slack).ceil().max(1.0) as usize
}

/// Evaluates the one-shot bound for a given `b`, filling `d_min` and the MSR
/// precondition.
fn one_shot(result: &mut BoundResult, k: usize, msr: f64, b: f64, noise: f64) {
    let rhs = 2.0 * b + noise;
    let denominator = msr - rhs;
    result.b = Some(b);
    result.denominator = Some(denominator);
    let ok = result.check("MSR > 2b + 4 sqrt(sigma^2 ln p)/||beta||_2", denominator > DENOMINATOR_FLOOR, msr, rhs, true);
    if ok && result.hard_ok() {
        result.d_min = Some(tolerant_ceil((k as f64).sqrt() / denominator));
    }
}

fn slack(result: &mut BoundResult, input: &BoundInput, k: usize, msr: f64, b: f64, noise: f64) {
    if !(input.c1 > 2.0 && input.c2 > 2.0) {
        result.warnings.push(format!("slack constants must exceed 2 (c1 = {}, c2 = {})", input.c1, input.c2));
        return;
    }
    let rhs = 2.0 * input.c1 * b + input.c2 * noise;
    result.check("MSR > 2 c1 b + 4 c2 sqrt(sigma^2 ln p)/||beta||_2", msr > rhs, msr, rhs, false);
    let denominator = 2.0 * (input.c1 - 1.0) * b + (input.c2 - 1.0) * noise;
    if denominator > DENOMINATOR_FLOOR {
        result.slack_d = Some(tolerant_ceil((k as f64).sqrt() / denominator));
    }
}

fn check_msr_range(result: &mut BoundResult, k: usize, msr: f64) {
    let cap = 1.0 / (k as f64).sqrt();
    if msr > cap * (1.0 + 1e-12) {
        result.warnings.push(format!("MSR {msr} exceeds 1/sqrt(k) = {cap}; no k-sparse vector attains it"));
    }
}

/// `1 − 2/(p √(2π ln p))`, the noise-event success probability.
fn noise_success(p: usize) -> f64 {
    1.0 - 2.0 / (p as f64 * (2.0 * PI * ln(p)).sqrt())
}

/// General route with a caller-supplied screening parameter `b`.
pub fn d_general(input: &BoundInput) -> Result<BoundResult> {
    input.validate()?;
    let k = input.require_k()?;
    let msr = input.require_msr()?;
    let b = input.b.ok_or_else(|| Error::invalid("screening parameter b is required for the general route"))?;
    if !(b >= 0.0 && b.is_finite()) {
        return Err(Error::invalid(format!("b must be nonnegative, got {b}")));
    }
    let mut result = BoundResult::new(Route::General);
    check_msr_range(&mut result, k, msr);
    let cap = 1.0 / (k as f64).sqrt();
    result.check("b < 1/sqrt(k)", b < cap, b, cap, true);
    one_shot(&mut result, k, msr, b, input.noise_term());
    result.success_probability = Some(noise_success(input.p));
    Ok(result)
}

/// `(b, precondition)` with `b = √(8 ln p / n)·ratio` and the precondition
/// `ln p ≤ (n/16)(1/(4·ratio))⁴`.
pub fn b_subgaussian(n: usize, p: usize, subgauss_ratio: f64) -> (f64, bool) {
    let (b, lhs, rhs) = subgaussian_parts(n, p, subgauss_ratio);
    (b, lhs <= rhs)
}

fn subgaussian_parts(n: usize, p: usize, ratio: f64) -> (f64, f64, f64) {
    let b = (8.0 * ln(p) / n as f64).sqrt() * ratio;
    let rhs = n as f64 / 16.0 * (1.0 / (4.0 * ratio)).powi(4);
    (b, ln(p), rhs)
}

/// Sub-Gaussian designs: `b` from [`b_subgaussian`].
pub fn d_subgaussian(input: &BoundInput) -> Result<BoundResult> {
    input.validate()?;
    if !(input.subgauss_ratio >= 1.0) {
        return Err(Error::invalid(format!("subgauss_ratio must be >= 1, got {}", input.subgauss_ratio)));
    }
    let k = input.require_k()?;
    let msr = input.require_msr()?;
    let (b, lhs, rhs) = subgaussian_parts(input.n, input.p, input.subgauss_ratio);
    let mut result = BoundResult::new(Route::SubGaussian);
    check_msr_range(&mut result, k, msr);
    result.check("ln p <= (n/16)(1/(4 ratio))^4", lhs <= rhs, lhs, rhs, false);
    let noise = input.noise_term();
    one_shot(&mut result, k, msr, b, noise);
    let n_over = input.n as f64 / ln(input.p);
    result.check("k <= n/ln p", k as f64 <= n_over, k as f64, n_over, false);
    slack(&mut result, input, k, msr, b, noise);
    result.fallback_d = Some(d_simple_n_over_logp(input.n, input.p)?);
    result.success_probability = Some(1.0 - 2.0 * (k as f64 + 2.0) / input.p as f64);
    Ok(result)
}

/// `⌈n / ln p⌉`.
pub fn d_simple_n_over_logp(n: usize, p: usize) -> Result<usize> {
    if p < 2 {
        return Err(Error::invalid(format!("p must be >= 2, got {p}")));
    }
    Ok(tolerant_ceil(n as f64 / ln(p)))
}

/// `⌈√n⌉`.
pub fn d_sqrt_n(n: usize) -> usize {
    tolerant_ceil((n as f64).sqrt())
}

fn require_mu(input: &BoundInput) -> Result<f64> {
    let mu = input.mu.ok_or_else(|| Error::invalid("worst-case coherence mu is required for this route"))?;
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::invalid(format!("mu must lie in [0, 1], got {mu}")));
    }
    Ok(mu)
}

/// Arbitrary designs through the worst-case coherence: `b = μ√k`.
pub fn d_mu_route(input: &BoundInput) -> Result<BoundResult> {
    input.validate()?;
    let mu = require_mu(input)?;
    let mut result = BoundResult::new(Route::Mu);
    if input.p >= 2 * input.n {
        result.fallback_d = Some(d_sqrt_n(input.n));
    } else {
        result.warnings.push("sqrt(n) fallback needs p >= 2n".to_string());
    }
    let (Some(k), Some(msr)) = (input.k, input.msr()) else {
        result.warnings.push("k and beta_min not both supplied; only the fallback is reported".to_string());
        return Ok(result);
    };
    check_msr_range(&mut result, k, msr);
    let inv = if mu > 0.0 { 1.0 / mu } else { f64::INFINITY };
    result.check("k < 1/mu", (k as f64) < inv, k as f64, inv, true);
    let b = mu * (k as f64).sqrt();
    let noise = input.noise_term();
    one_shot(&mut result, k, msr, b, noise);
    slack(&mut result, input, k, msr, b, noise);
    result.success_probability = Some(noise_success(input.p));
    Ok(result)
}

/// Designs obeying the coherence property: `b = c_μ μ √(ln p)`.
pub fn d_coherence_route(input: &BoundInput) -> Result<BoundResult> {
    input.validate()?;
    let mu = require_mu(input)?;
    let c_mu = input.c_mu;
    let threshold = 10.0 * 2f64.sqrt();
    let mut result = BoundResult::new(Route::Coherence);
    result.check("c_mu > 10 sqrt(2)", c_mu > threshold, c_mu, threshold, true);
    let floor = (2 * input.n) as f64;
    let floor = floor.max(5f64.exp());
    result.check("p >= max{2n, exp(5)}", input.p as f64 >= floor, input.p as f64, floor, true);
    result.fallback_d = Some(d_simple_n_over_logp(input.n, input.p)?);
    let (Some(k), Some(msr)) = (input.k, input.msr()) else {
        result.warnings.push("k and beta_min not both supplied; only the fallback is reported".to_string());
        return Ok(result);
    };
    check_msr_range(&mut result, k, msr);
    let cap = if mu > 0.0 {
        1.0 / (mu * mu * c_mu * c_mu * ln(input.p))
    } else {
        f64::INFINITY
    };
    result.check("k < mu^-2/(c_mu^2 ln p)", (k as f64) < cap, k as f64, cap, true);
    let b = c_mu * mu * ln(input.p).sqrt();
    let noise = input.noise_term();
    one_shot(&mut result, k, msr, b, noise);
    slack(&mut result, input, k, msr, b, noise);
    result.success_probability = Some(1.0 - 6.0 / input.p as f64);
    Ok(result)
}

/// Evaluates every route that has enough input; routes missing a required
/// field are skipped.
pub fn all_routes(input: &BoundInput) -> Result<Vec<BoundResult>> {
    input.validate()?;
    let mut out = Vec::new();
    if input.k.is_some() && input.beta_min.is_some() {
        if input.b.is_some() {
            out.push(d_general(input)?);
        }
        out.push(d_subgaussian(input)?);
    }
    let mut n_over = BoundResult::new(Route::NOverLogP);
    n_over.d_min = Some(d_simple_n_over_logp(input.n, input.p)?);
    out.push(n_over);
    let mut sqrt_n = BoundResult::new(Route::SqrtN);
    sqrt_n.d_min = Some(d_sqrt_n(input.n));
    out.push(sqrt_n);
    if input.mu.is_some() {
        out.push(d_mu_route(input)?);
        out.push(d_coherence_route(input)?);
    }
    Ok(out)
}

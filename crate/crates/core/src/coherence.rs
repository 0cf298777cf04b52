//! Worst-case and average coherence, the Welch bound, coherence-property
//! certification and the deterministic screening-condition statistics.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{dot, DesignMatrix, SparseModel};

/// Column block width for the Gram scan.
pub const DEFAULT_BLOCK: usize = 256;

/// Smallest `c_μ` strictly above `10√2`.
pub const DEFAULT_C_MU: f64 = 14.14214;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoherenceReport {
    pub mu: f64,
    pub nu: f64,
    pub welch: f64,
    pub argmax_pair: (usize, usize),
}

impl CoherenceReport {
    pub fn compute(x: &DesignMatrix) -> Result<Self> {
        let (mu, argmax_pair) = worst_case_coherence(x)?;
        let nu = average_coherence(x)?;
        Ok(Self {
            mu,
            nu,
            welch: welch_lower_bound(x.n(), x.p()),
            argmax_pair,
        })
    }
}

/// Running maximum with the lexicographically smallest pair on ties, so the
/// result does not depend on scan order.
#[derive(Debug, Clone, Copy)]
struct PairMax {
    value: f64,
    pair: (usize, usize),
}

impl PairMax {
    fn empty() -> Self {
        Self {
            value: f64::NEG_INFINITY,
            pair: (usize::MAX, usize::MAX),
        }
    }

    fn offer(&mut self, value: f64, pair: (usize, usize)) {
        if value > self.value || (value == self.value && pair < self.pair) {
            self.value = value;
            self.pair = pair;
        }
    }

    fn merge(mut self, other: PairMax) -> Self {
        self.offer(other.value, other.pair);
        self
    }
}

fn require_two_columns(x: &DesignMatrix) -> Result<()> {
    if x.p() < 2 {
        return Err(Error::invalid("coherence needs at least two columns"));
    }
    Ok(())
}

/// `μ = max_{i≠j} |X_iᵀX_j|` with the achieving pair (`i < j`).
pub fn worst_case_coherence(x: &DesignMatrix) -> Result<(f64, (usize, usize))> {
    worst_case_coherence_blocked(x, DEFAULT_BLOCK)
}

/// Blocked Gram scan using `O(n·block + block²)` extra memory.
pub fn worst_case_coherence_blocked(x: &DesignMatrix, block: usize) -> Result<(f64, (usize, usize))> {
    require_two_columns(x)?;
    let block = block.max(1);
    let p = x.p();
    let m = x.matrix();
    let starts: Vec<usize> = (0..p).step_by(block).collect();
    let mut best = PairMax::empty();
    for (bi, &si) in starts.iter().enumerate() {
        let wi = block.min(p - si);
        let left = m.columns(si, wi).transpose();
        for &sj in &starts[bi..] {
            let wj = block.min(p - sj);
            let gram: DMatrix<f64> = &left * m.columns(sj, wj);
            let mut local = PairMax::empty();
            for c in 0..wj {
                let j = sj + c;
                for r in 0..wi {
                    let i = si + r;
                    if i < j {
                        local.offer(gram[(r, c)].abs(), (i, j));
                    }
                }
            }
            best = best.merge(local);
        }
    }
    Ok((best.value, best.pair))
}

/// `ν = max_i |Σ_{j≠i} X_iᵀX_j| / (p−1)`, evaluated in `O(np)` through the
/// column sum `s = Σ_j X_j`.
pub fn average_coherence(x: &DesignMatrix) -> Result<f64> {
    require_two_columns(x)?;
    let n = x.n();
    let p = x.p();
    let mut s = vec![0.0; n];
    for j in 0..p {
        for (acc, v) in s.iter_mut().zip(x.column(j)) {
            *acc += v;
        }
    }
    let worst = (0..p)
        .map(|i| {
            let col = x.column(i);
            (dot(col, &s) - dot(col, col)).abs()
        })
        .fold(0.0, f64::max);
    Ok(worst / (p - 1) as f64)
}

/// Welch lower bound `√((p−n)/(n(p−1)))` on the worst-case coherence of `p`
/// unit vectors in `ℝⁿ`; zero when `p ≤ n` (vacuous).
pub fn welch_lower_bound(n: usize, p: usize) -> f64 {
    if p <= n || p < 2 || n == 0 {
        return 0.0;
    }
    let (n, p) = (n as f64, p as f64);
    ((p - n) / (n * (p - 1.0))).sqrt()
}

/// Outcome of the coherence-property test `μ < 1/(c_μ√ln p)`, `ν < μ/√n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoherenceVerdict {
    pub mu: f64,
    pub nu: f64,
    pub welch: f64,
    pub c_mu: f64,
    pub mu_threshold: f64,
    pub nu_threshold: f64,
    pub mu_holds: bool,
    pub nu_holds: bool,
    pub property_holds: bool,
    /// Set when no unit-norm design of these dimensions can pass because
    /// the μ threshold lies below the Welch bound.
    pub reason: Option<String>,
}

pub fn coherence_property_check(report: &CoherenceReport, n: usize, p: usize, c_mu: f64) -> Result<CoherenceVerdict> {
    if !(c_mu > 0.0) {
        return Err(Error::invalid(format!("c_mu must be positive, got {c_mu}")));
    }
    if p < 2 || n == 0 {
        return Err(Error::invalid("coherence property needs n >= 1 and p >= 2"));
    }
    let mu_threshold = 1.0 / (c_mu * (p as f64).ln().sqrt());
    let nu_threshold = report.mu / (n as f64).sqrt();
    let welch = welch_lower_bound(n, p);
    let mu_holds = report.mu < mu_threshold;
    let nu_holds = report.nu < nu_threshold;
    let mut reason = None;
    if mu_threshold <= welch {
        reason = Some(format!(
            "mu threshold {mu_threshold:.5} does not exceed the Welch bound {welch:.5}: no {n}x{p} unit-norm design can satisfy the property"
        ));
    } else if !mu_holds {
        reason = Some(format!("mu = {:.5} >= threshold {mu_threshold:.5}", report.mu));
    } else if !nu_holds {
        reason = Some(format!("nu = {:.5} >= mu/sqrt(n) = {nu_threshold:.5}", report.nu));
    }
    Ok(CoherenceVerdict {
        mu: report.mu,
        nu: report.nu,
        welch,
        c_mu,
        mu_threshold,
        nu_threshold,
        mu_holds,
        nu_holds,
        property_holds: mu_holds && nu_holds,
        reason,
    })
}

/// Screening-condition aggregates for a known support.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScreeningConditionStats {
    /// `max_{i∈S*} |Σ_{j∈S*, j≠i} X_iᵀX_j β_j|`
    pub sc1: f64,
    /// `max_{i∉S*} |Σ_{j∈S*} X_iᵀX_j β_j|`
    pub sc2: f64,
    /// `max(sc1, sc2) / ‖β‖₂`
    pub b_effective: f64,
    /// `b_effective < 1/√k`
    pub feasible: bool,
}

pub fn screening_condition_stats(x: &DesignMatrix, model: &SparseModel) -> Result<ScreeningConditionStats> {
    if model.k() == 0 {
        return Err(Error::EmptySupport);
    }
    if model.p() != x.p() {
        return Err(Error::DimensionMismatch {
            what: "beta length",
            expected: x.p(),
            found: model.p(),
        });
    }
    let signal = x.mul_vec(model.beta());
    let beta = model.beta();
    let mut sc1 = 0.0f64;
    let mut sc2 = 0.0f64;
    for i in 0..x.p() {
        let full = dot(x.column(i), &signal);
        if beta[i] != 0.0 {
            // Remove the diagonal term X_iᵀX_i β_i.
            let own = dot(x.column(i), x.column(i)) * beta[i];
            sc1 = sc1.max((full - own).abs());
        } else {
            sc2 = sc2.max(full.abs());
        }
    }
    let b_effective = sc1.max(sc2) / model.l2_norm();
    let feasible = b_effective * (model.k() as f64).sqrt() < 1.0;
    Ok(ScreeningConditionStats {
        sc1,
        sc2,
        b_effective,
        feasible,
    })
}

/// High-probability coherence envelopes for column-normalized Gaussian
/// designs, with a flag for the `60 ln p ≤ n ≤ (p−1)/(4 ln p)` regime.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianCoherenceBounds {
    pub mu_bound: f64,
    pub nu_bound: f64,
    pub regime_holds: bool,
}

pub fn gaussian_coherence_bounds(n: usize, p: usize) -> GaussianCoherenceBounds {
    let log_p = (p as f64).ln();
    let nf = n as f64;
    let mu_bound = (15.0 * log_p).sqrt() / (nf.sqrt() - (12.0 * log_p).sqrt());
    let nu_bound = (15.0 * log_p).sqrt() / (nf - (12.0 * nf * log_p).sqrt());
    let regime_holds = 60.0 * log_p <= nf && nf <= (p as f64 - 1.0) / (4.0 * log_p);
    if !regime_holds {
        log::warn!("n = {n}, p = {p} outside 60 ln p <= n <= (p-1)/(4 ln p); bounds evaluated anyway");
    }
    GaussianCoherenceBounds {
        mu_bound,
        nu_bound,
        regime_holds,
    }
}

//! Synthetic instances: sub-Gaussian and equicorrelated designs, sparse
//! coefficient generators and coherence adjustment by scaling the leading
//! singular value.

use std::collections::HashSet;
use std::sync::OnceLock;

use log::debug;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{normalize_columns, DesignMatrix, SparseModel};
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DesignFamily {
    Gaussian,
    /// Uniform on `[−√3, √3]` (unit variance).
    Uniform,
    Rademacher,
    EquicorrelatedGaussian,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignSpec {
    pub family: DesignFamily,
    pub n: usize,
    pub p: usize,
    #[serde(default)]
    pub rho: f64,
    #[serde(default)]
    pub per_column_scale: Option<Vec<f64>>,
}

impl DesignSpec {
    pub fn new(family: DesignFamily, n: usize, p: usize) -> Self {
        DesignSpec {
            family,
            n,
            p,
            rho: 0.0,
            per_column_scale: None,
        }
    }

    pub fn gaussian(n: usize, p: usize) -> Self {
        Self::new(DesignFamily::Gaussian, n, p)
    }

    pub fn equicorrelated(n: usize, p: usize, rho: f64) -> Self {
        DesignSpec {
            rho,
            ..Self::new(DesignFamily::EquicorrelatedGaussian, n, p)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.p == 0 {
            return Err(Error::invalid("design needs n >= 1 and p >= 1"));
        }
        if !(0.0..1.0).contains(&self.rho) {
            return Err(Error::invalid(format!("rho must lie in [0, 1), got {}", self.rho)));
        }
        if self.rho != 0.0 && self.family != DesignFamily::EquicorrelatedGaussian {
            return Err(Error::invalid("rho is only meaningful for the equicorrelated family"));
        }
        if let Some(scale) = &self.per_column_scale {
            if scale.len() != self.p {
                return Err(Error::DimensionMismatch {
                    what: "per-column scale",
                    expected: self.p,
                    found: scale.len(),
                });
            }
            if scale.iter().any(|s| !(*s > 0.0 && s.is_finite())) {
                return Err(Error::invalid("column scales must be positive"));
            }
        }
        Ok(())
    }
}

/// Draws the raw (unnormalized) entries for `spec`, column by column.
pub fn generate_raw(spec: &DesignSpec, seed: u64) -> Result<DMatrix<f64>> {
    spec.validate()?;
    let (n, p) = (spec.n, spec.p);
    let mut rng = rng_from_seed(seed);
    let mut data = Vec::with_capacity(n * p);
    match spec.family {
        DesignFamily::Gaussian => {
            data.extend((0..n * p).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
        }
        DesignFamily::Uniform => {
            let r = 3f64.sqrt();
            let dist = Uniform::new_inclusive(-r, r).expect("valid range");
            data.extend((0..n * p).map(|_| dist.sample(&mut rng)));
        }
        DesignFamily::Rademacher => {
            data.extend((0..n * p).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }));
        }
        DesignFamily::EquicorrelatedGaussian => {
            let common: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (a, c) = ((1.0 - spec.rho).sqrt(), spec.rho.sqrt());
            for _ in 0..p {
                for z0 in &common {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    data.push(a * z + c * z0);
                }
            }
        }
    }
    let mut m = DMatrix::from_vec(n, p, data);
    if let Some(scale) = &spec.per_column_scale {
        for (mut col, s) in m.column_iter_mut().zip(scale) {
            col *= *s;
        }
    }
    Ok(m)
}

/// Draws a design per `spec` and normalizes its columns.
pub fn generate_design(spec: &DesignSpec, seed: u64) -> Result<DesignMatrix> {
    let raw = generate_raw(spec, seed)?;
    // A zero column has probability zero for continuous families and
    // cannot occur for Rademacher entries.
    normalize_columns(raw)
}

/// Uniformly random `k`-subset of `0..p` (Floyd), sorted.
pub fn random_support(p: usize, k: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut chosen = HashSet::with_capacity(k);
    let mut out = Vec::with_capacity(k);
    for j in p - k..p {
        let t = rng.random_range(0..=j);
        let pick = if chosen.contains(&t) { j } else { t };
        chosen.insert(pick);
        out.push(pick);
    }
    out.sort_unstable();
    out
}

fn check_sparsity(p: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(Error::EmptySupport);
    }
    if k >= p {
        return Err(Error::invalid(format!("k = {k} must be below p = {p}")));
    }
    Ok(())
}

/// Uniform support with nonzeros drawn iid from `U[a, e]`.
pub fn generate_beta_uniform(p: usize, k: usize, a: f64, e: f64, seed: u64) -> Result<SparseModel> {
    check_sparsity(p, k)?;
    if !(a > 0.0 && a < e && e.is_finite()) {
        return Err(Error::invalid(format!("need 0 < a < e, got a = {a}, e = {e}")));
    }
    let mut rng = rng_from_seed(seed);
    let support = random_support(p, k, &mut rng);
    let dist = Uniform::new_inclusive(a, e).map_err(|err| Error::invalid(err.to_string()))?;
    let values: Vec<f64> = (0..k).map(|_| dist.sample(&mut rng)).collect();
    SparseModel::from_support(p, &support, &values, 0.0)
}

/// Uniform support with nonzeros `|z| + 2`, `z ~ N(0, 1)`.
pub fn generate_beta_shifted(p: usize, k: usize, seed: u64) -> Result<SparseModel> {
    check_sparsity(p, k)?;
    let mut rng = rng_from_seed(seed);
    let support = random_support(p, k, &mut rng);
    let values: Vec<f64> = (0..k)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            z.abs() + 2.0
        })
        .collect();
    SparseModel::from_support(p, &support, &values, 0.0)
}

pub const GAMMA_MAX: f64 = 1e4;
pub const ADJUST_MAX_ITERATIONS: usize = 200;
const GAMMA_GRID_POINTS: usize = 41;

/// Scaling the leading singular value of `X = Σ σᵢ uᵢ vᵢᵀ` by `γ` gives
/// `X' = X + (γ−1)σ₁u₁v₁ᵀ` and `X'ᵀX' = XᵀX + (γ²−1)σ₁² v₁v₁ᵀ`, so the
/// coherence of the renormalized `X'` is available from the base Gram
/// matrix for any `γ` without refactoring.
pub struct CoherenceAdjuster<'a> {
    x: &'a DesignMatrix,
    gram: DMatrix<f64>,
    sigma1: f64,
    u: DVector<f64>,
    v: Vec<f64>,
    base_mu: f64,
    scan: OnceLock<Vec<f64>>,
}

impl<'a> CoherenceAdjuster<'a> {
    pub fn new(x: &'a DesignMatrix) -> Result<Self> {
        if x.p() < 2 {
            return Err(Error::invalid("coherence adjustment needs p >= 2"));
        }
        let m = x.matrix();
        let gram = m.tr_mul(m);
        let (sigma1, u, v) = if x.n() <= x.p() {
            let outer = m * m.transpose();
            let (lambda, u) = top_eigenpair(outer)?;
            let sigma1 = lambda.sqrt();
            let v: Vec<f64> = (m.tr_mul(&u) / sigma1).iter().copied().collect();
            (sigma1, u, v)
        } else {
            let (lambda, v) = top_eigenpair(gram.clone())?;
            let sigma1 = lambda.sqrt();
            let u = (m * &v) / sigma1;
            (sigma1, u, v.iter().copied().collect())
        };
        let mut adjuster = CoherenceAdjuster {
            x,
            gram,
            sigma1,
            u,
            v,
            base_mu: 0.0,
            scan: OnceLock::new(),
        };
        adjuster.base_mu = adjuster.mu_at(1.0);
        Ok(adjuster)
    }

    pub fn base_mu(&self) -> f64 {
        self.base_mu
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    fn shift(&self, gamma: f64) -> f64 {
        (gamma * gamma - 1.0) * self.sigma1 * self.sigma1
    }

    /// Inverse column norms of `X'` at shift `c`.
    fn inv_norms(&self, c: f64) -> Vec<f64> {
        self.v
            .iter()
            .enumerate()
            .map(|(j, vj)| 1.0 / (self.gram[(j, j)] + c * vj * vj).sqrt())
            .collect()
    }

    /// Worst-case coherence of the renormalized `X'` at scaling `γ`.
    pub fn mu_at(&self, gamma: f64) -> f64 {
        let c = self.shift(gamma);
        let inv = self.inv_norms(c);
        let p = self.v.len();
        let g = self.gram.as_slice();
        let mut best = 0.0f64;
        for j in 1..p {
            let col = &g[j * p..j * p + j];
            let cv = c * self.v[j];
            let mut m = 0.0f64;
            for ((gij, vi), si) in col.iter().zip(&self.v[..j]).zip(&inv[..j]) {
                m = m.max((gij + cv * vi).abs() * si);
            }
            best = best.max(m * inv[j]);
        }
        best
    }

    /// Finds `γ ∈ [1, 10⁴]` with `|μ(γ) − target| ≤ tolerance`.
    pub fn solve(&self, target: f64, tolerance: f64) -> Result<f64> {
        if !(target < 1.0 && tolerance > 0.0) {
            return Err(Error::invalid(format!("need target < 1 and tolerance > 0, got {target}, {tolerance}")));
        }
        if (self.base_mu - target).abs() <= tolerance {
            return Ok(1.0);
        }
        if target < self.base_mu {
            return Err(Error::Precondition(format!(
                "target mu {target} is below the base coherence {}",
                self.base_mu
            )));
        }
        let grid: Vec<f64> = (0..GAMMA_GRID_POINTS)
            .map(|i| GAMMA_MAX.powf(i as f64 / (GAMMA_GRID_POINTS - 1) as f64))
            .collect();
        // The scan is shared by every target solved on this design.
        let mus = self.scan.get_or_init(|| {
            let mus: Vec<f64> = grid.iter().map(|&g| self.mu_at(g)).collect();
            if mus.windows(2).any(|w| w[1] < w[0] - 1e-12) {
                debug!("mu(gamma) is not monotone on the scan grid; bisecting the first bracket");
            }
            mus
        });
        let Some(hi_idx) = mus.iter().position(|&m| m >= target) else {
            return Err(Error::AdjustmentFailed {
                target,
                low: self.base_mu,
                high: mus.iter().copied().fold(self.base_mu, f64::max),
            });
        };
        if (mus[hi_idx] - target).abs() <= tolerance {
            return Ok(grid[hi_idx]);
        }
        let (mut lo, mut hi) = (grid[hi_idx - 1], grid[hi_idx]);
        for _ in 0..ADJUST_MAX_ITERATIONS {
            let mid = 0.5 * (lo + hi);
            let m = self.mu_at(mid);
            if (m - target).abs() <= tolerance {
                return Ok(mid);
            }
            if m < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Err(Error::AdjustmentFailed {
            target,
            low: self.mu_at(lo),
            high: self.mu_at(hi),
        })
    }

    /// Builds the renormalized `X'` explicitly.
    pub fn materialize(&self, gamma: f64) -> Result<DesignMatrix> {
        if gamma == 1.0 {
            return Ok(self.x.clone());
        }
        let scale = (gamma - 1.0) * self.sigma1;
        let v = DVector::from_column_slice(&self.v);
        let raw = self.x.matrix() + (&self.u * v.transpose()) * scale;
        normalize_columns(raw)
    }

    /// `w = X'ᵀ(X'β + η)` for the renormalized `X'`, computed from the base
    /// Gram matrix in `O(pk + np)`.
    pub fn correlations(&self, gamma: f64, model: &SparseModel, noise: Option<&[f64]>) -> Result<Vec<f64>> {
        let p = self.v.len();
        if model.p() != p {
            return Err(Error::DimensionMismatch {
                what: "coefficient vector",
                expected: p,
                found: model.p(),
            });
        }
        let c = self.shift(gamma);
        let inv = self.inv_norms(c);
        let mut w = vec![0.0; p];
        for &i in model.support() {
            let bi = model.beta()[i] * inv[i];
            let col = self.gram.column(i);
            let cv = c * self.v[i];
            for (j, wj) in w.iter_mut().enumerate() {
                *wj += (col[j] + cv * self.v[j]) * bi;
            }
        }
        if let Some(eta) = noise {
            if eta.len() != self.x.n() {
                return Err(Error::DimensionMismatch {
                    what: "noise vector",
                    expected: self.x.n(),
                    found: eta.len(),
                });
            }
            let eta_v = DVector::from_column_slice(eta);
            let base = self.x.matrix().tr_mul(&eta_v);
            let along = (gamma - 1.0) * self.sigma1 * self.u.dot(&eta_v);
            for j in 0..p {
                w[j] += base[j] + along * self.v[j];
            }
        }
        for (wj, s) in w.iter_mut().zip(&inv) {
            *wj *= s;
        }
        Ok(w)
    }
}

fn top_eigenpair(sym: DMatrix<f64>) -> Result<(f64, DVector<f64>)> {
    let eig = SymmetricEigen::try_new(sym, 1e-14, 0).ok_or_else(|| Error::Linalg("symmetric eigendecomposition did not converge".into()))?;
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .ok_or_else(|| Error::Linalg("empty spectrum".into()))?;
    if !(lambda > 0.0) {
        return Err(Error::Linalg("design has no positive singular value".into()));
    }
    Ok((lambda, eig.eigenvectors.column(idx).into_owned()))
}

/// Scales the leading singular value until the renormalized design has
/// worst-case coherence within `tolerance` of `target_mu`.
pub fn adjust_coherence(x: &DesignMatrix, target_mu: f64, tolerance: f64) -> Result<DesignMatrix> {
    let adjuster = CoherenceAdjuster::new(x)?;
    let gamma = adjuster.solve(target_mu, tolerance)?;
    adjuster.materialize(gamma)
}

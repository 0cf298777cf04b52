//! Linear-model data types, column normalization, response simulation and
//! the signal/noise diagnostics of marginal correlations.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative tolerance on unit column norms.
pub const NORM_TOLERANCE: f64 = 1e-10;

/// Dense `n × p` design with unit ℓ2-norm columns, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    data: DMatrix<f64>,
}

impl DesignMatrix {
    /// Wraps a matrix whose columns are already unit norm. Fails if any
    /// column deviates by more than [`NORM_TOLERANCE`].
    pub fn from_normalized(data: DMatrix<f64>) -> Result<Self> {
        check_shape_and_finite(&data)?;
        for (j, col) in data.column_iter().enumerate() {
            let norm = col.norm();
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(Error::invalid(format!(
                    "column {j} has norm {norm}, expected 1"
                )));
            }
        }
        Ok(Self { data })
    }

    /// Accepts a matrix loaded from disk: columns within tolerance are kept
    /// as-is, the rest are re-normalized.
    pub fn from_loaded(mut data: DMatrix<f64>) -> Result<Self> {
        check_shape_and_finite(&data)?;
        for (j, mut col) in data.column_iter_mut().enumerate() {
            let norm = col.norm();
            if norm == 0.0 {
                return Err(Error::ZeroColumn { column: j });
            }
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                col /= norm;
            }
        }
        Ok(Self { data })
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.data
    }

    /// Contiguous view of column `j`.
    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.n();
        &self.data.as_slice()[j * n..(j + 1) * n]
    }

    /// Sub-design restricted to `columns` (in the given order).
    pub fn select_columns(&self, columns: &[usize]) -> DesignMatrix {
        let n = self.n();
        let mut out = Vec::with_capacity(n * columns.len());
        for &j in columns {
            out.extend_from_slice(self.column(j));
        }
        DesignMatrix {
            data: DMatrix::from_vec(n, columns.len(), out),
        }
    }

    /// Sub-design restricted to `rows`; columns are re-normalized.
    pub fn select_rows(&self, rows: &[usize]) -> Result<DesignMatrix> {
        let sub = self.data.select_rows(rows.iter());
        normalize_columns(sub)
    }

    /// `Xβ` for a dense coefficient vector.
    pub fn mul_vec(&self, beta: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n()];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                for (o, x) in out.iter_mut().zip(self.column(j)) {
                    *o += b * x;
                }
            }
        }
        out
    }
}

fn check_shape_and_finite(data: &DMatrix<f64>) -> Result<()> {
    if data.nrows() == 0 || data.ncols() == 0 {
        return Err(Error::invalid("design matrix must have n >= 1 and p >= 1"));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("design matrix"));
    }
    Ok(())
}

/// Divides each column by its ℓ2 norm.
pub fn normalize_columns(mut raw: DMatrix<f64>) -> Result<DesignMatrix> {
    check_shape_and_finite(&raw)?;
    for (j, mut col) in raw.column_iter_mut().enumerate() {
        let norm = col.norm();
        if norm == 0.0 {
            return Err(Error::ZeroColumn { column: j });
        }
        col /= norm;
    }
    Ok(DesignMatrix { data: raw })
}

/// Sparse ground truth: support `S*`, coefficients `β` and noise level `σ`.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SparseModel {
    support: Vec<usize>,
    beta: Vec<f64>,
    sigma: f64,
}

impl SparseModel {
    /// Builds a model from a dense coefficient vector; the support is the
    /// set of nonzero entries.
    pub fn from_dense(beta: Vec<f64>, sigma: f64) -> Result<Self> {
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::NonFinite("beta"));
        }
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be >= 0, got {sigma}")));
        }
        let support = beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(i, _)| i)
            .collect();
        Ok(Self {
            support,
            beta,
            sigma,
        })
    }

    /// Builds a model from a support set and the matching nonzero values.
    pub fn from_support(p: usize, support: &[usize], values: &[f64], sigma: f64) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::DimensionMismatch {
                what: "support values",
                expected: support.len(),
                found: values.len(),
            });
        }
        let mut beta = vec![0.0; p];
        for (&i, &v) in support.iter().zip(values) {
            if i >= p {
                return Err(Error::invalid(format!("support index {i} out of range for p = {p}")));
            }
            if v == 0.0 {
                return Err(Error::invalid(format!("coefficient at support index {i} is zero")));
            }
            if beta[i] != 0.0 {
                return Err(Error::invalid(format!("duplicate support index {i}")));
            }
            beta[i] = v;
        }
        Self::from_dense(beta, sigma)
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn with_sigma(mut self, sigma: f64) -> Self {
        assert!(sigma >= 0.0, "sigma must be nonnegative");
        self.sigma = sigma;
        self
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn p(&self) -> usize {
        self.beta.len()
    }

    /// Nonzero values in support order.
    pub fn support_values(&self) -> Vec<f64> {
        self.support.iter().map(|&i| self.beta[i]).collect()
    }

    pub fn beta_min(&self) -> f64 {
        self.support
            .iter()
            .map(|&i| self.beta[i].abs())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn l1_norm(&self) -> f64 {
        self.support.iter().map(|&i| self.beta[i].abs()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.support
            .iter()
            .map(|&i| self.beta[i] * self.beta[i])
            .sum::<f64>()
            .sqrt()
    }

    /// Checks the model against a design: matching `p` and `k < n`.
    pub fn check_against(&self, x: &DesignMatrix) -> Result<()> {
        if self.p() != x.p() {
            return Err(Error::DimensionMismatch {
                what: "beta length",
                expected: x.p(),
                found: self.p(),
            });
        }
        if self.k() >= x.n() {
            return Err(Error::invalid(format!(
                "sparsity k = {} must be smaller than n = {}",
                self.k(),
                x.n()
            )));
        }
        Ok(())
    }
}

/// Response `y = Xβ + η` with the noise retained for diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseVector {
    pub y: Vec<f64>,
    pub noise: Vec<f64>,
    pub seed: u64,
}

/// Draws `η ~ N(0, σ² I)` and returns `y = Xβ + η`. Deterministic in `seed`.
pub fn simulate_response(x: &DesignMatrix, model: &SparseModel, seed: u64) -> Result<ResponseVector> {
    model.check_against(x)?;
    let signal = x.mul_vec(model.beta());
    let noise: Vec<f64> = if model.sigma() == 0.0 {
        vec![0.0; x.n()]
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..x.n())
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                model.sigma() * z
            })
            .collect()
    };
    let y = signal.iter().zip(&noise).map(|(s, e)| s + e).collect();
    Ok(ResponseVector { y, noise, seed })
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `w = Xᵀy`. Columns are processed independently, so the result is
/// identical whether or not the map runs in parallel.
pub fn marginal_correlations(x: &DesignMatrix, y: &[f64]) -> Result<Vec<f64>> {
    if y.len() != x.n() {
        return Err(Error::DimensionMismatch {
            what: "response length",
            expected: x.n(),
            found: y.len(),
        });
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("response"));
    }
    Ok((0..x.p())
        .into_par_iter()
        .map(|j| dot(x.column(j), y))
        .collect())
}

/// Minimum-to-signal ratio `β_min / ‖β‖₂`, always in `(0, 1/√k]`.
pub fn msr(model: &SparseModel) -> Result<f64> {
    if model.k() == 0 {
        return Err(Error::EmptySupport);
    }
    Ok(model.beta_min() / model.l2_norm())
}

/// Signal-to-noise ratio `‖β‖₂ / σ`; `f64::INFINITY` when `σ = 0`.
pub fn snr(model: &SparseModel) -> f64 {
    if model.sigma() == 0.0 {
        f64::INFINITY
    } else {
        model.l2_norm() / model.sigma()
    }
}

/// Default high-probability bound on `‖Xᵀη‖_∞` for Gaussian noise:
/// `2√(σ² ln p)`.
pub fn gaussian_noise_bound(sigma: f64, p: usize) -> f64 {
    2.0 * (sigma * sigma * (p as f64).ln()).sqrt()
}

/// True iff `‖Xᵀη‖_∞ ≤ 2√(σ² ln p)`.
pub fn noise_event_check(x: &DesignMatrix, eta: &[f64], sigma: f64, p: usize) -> Result<bool> {
    noise_event_check_with_bound(x, eta, gaussian_noise_bound(sigma, p))
}

/// Same as [`noise_event_check`] with a caller-supplied bound (for other
/// noise models).
pub fn noise_event_check_with_bound(x: &DesignMatrix, eta: &[f64], bound: f64) -> Result<bool> {
    let eta_tilde = marginal_correlations(x, eta)?;
    Ok(inf_norm(&eta_tilde) <= bound)
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Decomposition `w = ξ + η̃` of the marginal correlations into the signal
/// part `ξ = XᵀXβ` and the noise part `η̃ = Xᵀη`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreeningDiagnostics {
    pub w: Vec<f64>,
    pub xi: Vec<f64>,
    pub eta_tilde: Vec<f64>,
    pub g_eta_holds: bool,
}

impl ScreeningDiagnostics {
    pub fn compute(x: &DesignMatrix, model: &SparseModel, response: &ResponseVector) -> Result<Self> {
        model.check_against(x)?;
        let w = marginal_correlations(x, &response.y)?;
        let xi = marginal_correlations(x, &x.mul_vec(model.beta()))?;
        let eta_tilde = marginal_correlations(x, &response.noise)?;
        let g_eta_holds = inf_norm(&eta_tilde) <= gaussian_noise_bound(model.sigma(), x.p());
        Ok(Self {
            w,
            xi,
            eta_tilde,
            g_eta_holds,
        })
    }
}

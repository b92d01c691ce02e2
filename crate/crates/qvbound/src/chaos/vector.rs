//! Multidimensional normal-approximation bounds for vectors of chaos
//! expansions: the operator-norm Wasserstein-style bound for positive
//! definite targets, the C^2 smooth-test bound for arbitrary covariances,
//! and the contraction estimates that control both.

use crate::chaos::expansion::ChaosExpansion;
use crate::chaos::kernel::{contract_pair, contract_sym, SymmetricKernel};
use crate::chaos::operators::{stein_kernel_inner, CENTERED_TOL};
use crate::error::{Error, Result};
use crate::rng::NormalStream;
use crate::special::{binomial, factorial};
use serde::{Deserialize, Serialize};

/// A centered Gaussian law on R^d with covariance C.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GaussianVectorLaw {
    dim: usize,
    covariance: Vec<Vec<f64>>,
    #[serde(skip)]
    eigenvalues: Vec<f64>,
}

const EIGEN_FLOOR: f64 = -1e-12;
const POSDEF_FLOOR: f64 = 1e-10;

impl GaussianVectorLaw {
    pub fn new(covariance: Vec<Vec<f64>>) -> Result<Self> {
        let dim = covariance.len();
        if dim == 0 {
            return Err(Error::invalid("covariance must be non-empty"));
        }
        if covariance.iter().any(|row| row.len() != dim) {
            return Err(Error::invalid("covariance must be square"));
        }
        for i in 0..dim {
            for j in 0..i {
                if (covariance[i][j] - covariance[j][i]).abs()
                    > 1e-12 * (1.0 + covariance[i][j].abs())
                {
                    return Err(Error::invalid("covariance must be symmetric"));
                }
            }
        }
        let eigenvalues = jacobi_eigenvalues(&covariance);
        if eigenvalues.iter().any(|&l| l < EIGEN_FLOOR) {
            return Err(Error::invalid(format!(
                "covariance has eigenvalue {} below the rounding floor",
                eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
            )));
        }
        Ok(GaussianVectorLaw {
            dim,
            covariance,
            eigenvalues,
        })
    }

    pub fn identity(dim: usize) -> Result<Self> {
        let mut c = vec![vec![0.0; dim]; dim];
        for (i, row) in c.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        GaussianVectorLaw::new(c)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.covariance[i][j]
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// ||C||_op for a symmetric PSD matrix: the largest eigenvalue magnitude.
    pub fn operator_norm(&self) -> f64 {
        self.eigenvalues
            .iter()
            .map(|l| l.abs())
            .fold(0.0f64, f64::max)
    }
}

/// Eigenvalues of a symmetric matrix by the cyclic Jacobi method.
/// Deterministic sweeps; off-diagonal Frobenius mass driven below 1e-12
/// of the matrix scale.
pub fn jacobi_eigenvalues(matrix: &[Vec<f64>]) -> Vec<f64> {
    let n = matrix.len();
    let mut a: Vec<Vec<f64>> = matrix.to_vec();
    let scale = a
        .iter()
        .flat_map(|r| r.iter())
        .map(|v| v * v)
        .sum::<f64>()
        .sqrt()
        .max(1e-300);
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += 2.0 * a[i][j] * a[i][j];
            }
        }
        if off.sqrt() <= 1e-12 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if a[p][q].abs() <= 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eig: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eig
}

fn check_vector_input(z: &[ChaosExpansion], c: &GaussianVectorLaw) -> Result<usize> {
    if z.is_empty() {
        return Err(Error::invalid("empty vector of chaos expansions"));
    }
    if z.len() != c.dim() {
        return Err(Error::DimensionMismatch(z.len(), c.dim()));
    }
    let dim = z[0].dim();
    for zi in z {
        if zi.dim() != dim {
            return Err(Error::DimensionMismatch(zi.dim(), dim));
        }
        if zi.expectation().abs() > CENTERED_TOL {
            return Err(Error::invalid(format!(
                "vector components must be centered, found mean {}",
                zi.expectation()
            )));
        }
    }
    Ok(dim)
}

/// The operator-norm bound on the Wasserstein distance to N_d(0, C):
///   ||C^{-1}||_op ||C||_op^{1/2} sqrt( sum_{ij} E[(C_ij - <DZ_i, -DL^{-1}Z_j>)^2] ),
/// with every expectation computed exactly through the chaos algebra.
pub fn majdist_bound(z: &[ChaosExpansion], c: &GaussianVectorLaw) -> Result<f64> {
    let dim = check_vector_input(z, c)?;
    let lambda_min = c.min_eigenvalue();
    if lambda_min <= POSDEF_FLOOR {
        return Err(Error::domain(format!(
            "covariance is not positive definite (lambda_min = {lambda_min}); \
             use smooth_test_bound, which admits singular targets"
        )));
    }
    let d = z.len();
    let mut sum = 0.0;
    for i in 0..d {
        for j in 0..d {
            let inner = stein_kernel_inner(&z[i], &z[j])?;
            let w = ChaosExpansion::constant(dim, c.entry(i, j))?.sub(&inner)?;
            sum += w.exact_moment(2)?;
        }
    }
    let inv_op = 1.0 / lambda_min;
    Ok(inv_op * c.operator_norm().sqrt() * sum.max(0.0).sqrt())
}

/// Monte Carlo configuration for the absolute-moment estimates inside the
/// smooth-test bound.
#[derive(Debug, Clone, Copy)]
pub struct McConfig {
    pub seed: u64,
    pub replicates: usize,
    pub batches: usize,
}

impl Default for McConfig {
    fn default() -> Self {
        McConfig {
            seed: 0,
            replicates: 100_000,
            batches: 32,
        }
    }
}

/// Output of [`smooth_test_bound`]: the Monte Carlo value with batch
/// standard error, and the exact Cauchy-Schwarz bracket
/// E|W| <= sqrt(E W^2) assembled from exact second moments.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SmoothTestBound {
    pub mc_value: f64,
    pub mc_stderr: f64,
    pub cauchy_schwarz_value: f64,
    pub pair_mc: Vec<Vec<f64>>,
    pub pair_cauchy_schwarz: Vec<Vec<f64>>,
}

/// The C^2 smooth-test bound
///   (1/2) ||phi''|| sum_{ij} E| C_ij - <DZ_j, -DL^{-1}Z_i> |.
///
/// First absolute moments have no closed form here, so they are estimated by
/// Monte Carlo through the polynomial evaluators (batch standard errors
/// reported), while exact second moments provide the Cauchy-Schwarz upper
/// bracket. Both numbers are returned.
pub fn smooth_test_bound(
    z: &[ChaosExpansion],
    c: &GaussianVectorLaw,
    phi_second_sup: f64,
    mc: &McConfig,
) -> Result<SmoothTestBound> {
    let dim = check_vector_input(z, c)?;
    if phi_second_sup < 0.0 {
        return Err(Error::invalid("phi_second_sup must be >= 0"));
    }
    if mc.replicates == 0 || mc.batches == 0 || mc.replicates < mc.batches {
        return Err(Error::invalid("Monte Carlo needs replicates >= batches >= 1"));
    }
    let d = z.len();
    let half_phi = 0.5 * phi_second_sup;

    let mut pair_cs = vec![vec![0.0; d]; d];
    let mut evaluators = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            // term (i,j) pairs C_ij with <DZ_j, -DL^{-1}Z_i>
            let inner = stein_kernel_inner(&z[j], &z[i])?;
            let w = ChaosExpansion::constant(dim, c.entry(i, j))?.sub(&inner)?;
            pair_cs[i][j] = w.exact_moment(2)?.max(0.0).sqrt();
            evaluators.push(w.to_polynomial());
        }
    }
    let cs_total: f64 = pair_cs.iter().flatten().sum();

    // one shared Gaussian draw per replicate feeds every pair, and the
    // per-replicate total is the batched statistic
    let mut pair_sums = vec![0.0f64; d * d];
    let mut batch_totals = vec![0.0f64; mc.batches];
    let mut point = vec![0.0f64; dim];
    for rep in 0..mc.replicates {
        let mut stream = NormalStream::new(mc.seed, rep as u64);
        stream.fill_normal(&mut point);
        let mut total = 0.0;
        for (slot, eval) in pair_sums.iter_mut().zip(evaluators.iter()) {
            let v = eval.eval(&point).abs();
            *slot += v;
            total += v;
        }
        batch_totals[rep * mc.batches / mc.replicates] += total;
    }
    let m = mc.replicates as f64;
    let grand = pair_sums.iter().sum::<f64>() / m;
    let b = mc.batches as f64;
    let batch_means: Vec<f64> = batch_totals
        .iter()
        .map(|t| t * b / m) // each batch holds ~ m/b replicates
        .collect();
    let batch_mean = batch_means.iter().sum::<f64>() / b;
    let batch_var =
        batch_means.iter().map(|v| (v - batch_mean).powi(2)).sum::<f64>() / (b - 1.0).max(1.0);
    let stderr = (batch_var / b).sqrt();

    let pair_mc: Vec<Vec<f64>> = (0..d)
        .map(|i| (0..d).map(|j| pair_sums[i * d + j] / m).collect())
        .collect();

    Ok(SmoothTestBound {
        mc_value: half_phi * grand,
        mc_stderr: half_phi * stderr,
        cauchy_schwarz_value: half_phi * cs_total,
        pair_mc,
        pair_cauchy_schwarz: pair_cs,
    })
}

/// Exact E[(a - (1/q) <DF, DG>)^2] for F = I_p(f), G = I_q(g) with p <= q,
/// via the contraction expansion of <DF, DG>:
///   p = q: (a - p! <f,g>)^2 + p^2 sum_{r=1}^{p-1} (r-1)!^2 C(p-1,r-1)^4 (2p-2r)! ||f (~x)_r g||^2
///   p < q: a^2 + p^2 sum_{r=1}^{p} (r-1)!^2 C(p-1,r-1)^2 C(q-1,r-1)^2 (p+q-2r)! ||f (~x)_r g||^2
pub fn murray_exact(f: &SymmetricKernel, g: &SymmetricKernel, a: f64) -> Result<f64> {
    let (f, g) = if f.order() <= g.order() { (f, g) } else { (g, f) };
    let (p, q) = (f.order(), g.order());
    if p < 1 {
        return Err(Error::invalid("murray_exact needs orders >= 1"));
    }
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch(f.dim(), g.dim()));
    }
    if p == q {
        let mut acc = (a - factorial(p as u64) * f.inner(g)?).powi(2);
        for r in 1..p {
            let c = (p as f64).powi(2)
                * factorial((r - 1) as u64).powi(2)
                * binomial((p - 1) as u64, (r - 1) as u64).powi(4)
                * factorial((2 * p - 2 * r) as u64);
            acc += c * contract_sym(f, g, r)?.norm_sq();
        }
        Ok(acc)
    } else {
        let mut acc = a * a;
        for r in 1..=p {
            let c = (p as f64).powi(2)
                * factorial((r - 1) as u64).powi(2)
                * binomial((p - 1) as u64, (r - 1) as u64).powi(2)
                * binomial((q - 1) as u64, (r - 1) as u64).powi(2)
                * factorial((p + q - 2 * r) as u64);
            acc += c * contract_sym(f, g, r)?.norm_sq();
        }
        Ok(acc)
    }
}

/// The closed-form upper estimate on E[(a - (1/q) <DF, DG>)^2] in terms of
/// the self-contraction norms of f and g alone (arguments swapped first so
/// that p <= q):
///   p = q: (a - p! <f,g>)^2
///          + (p^2/2) sum_{r=1}^{p-1} (r-1)!^2 C(p-1,r-1)^4 (2p-2r)!
///            ( ||f (x)_{p-r} f||^2 + ||g (x)_{p-r} g||^2 )
///   p < q: a^2 + p!^2 C(q-1,p-1)^2 (q-p)! ||f||^2 ||g (x)_{q-p} g||
///          + (p^2/2) sum_{r=1}^{p-1} (r-1)!^2 C(p-1,r-1)^2 C(q-1,r-1)^2 (p+q-2r)!
///            ( ||f (x)_{p-r} f||^2 + ||g (x)_{q-r} g||^2 )
pub fn lm_control_bound(f: &SymmetricKernel, g: &SymmetricKernel, a: f64) -> Result<f64> {
    let (f, g) = if f.order() <= g.order() { (f, g) } else { (g, f) };
    let (p, q) = (f.order(), g.order());
    if p < 1 {
        return Err(Error::invalid("lm_control_bound needs orders >= 1"));
    }
    if f.dim() != g.dim() {
        return Err(Error::DimensionMismatch(f.dim(), g.dim()));
    }
    if p == q {
        let mut acc = (a - factorial(p as u64) * f.inner(g)?).powi(2);
        for r in 1..p {
            let c = 0.5
                * (p as f64).powi(2)
                * factorial((r - 1) as u64).powi(2)
                * binomial((p - 1) as u64, (r - 1) as u64).powi(4)
                * factorial((2 * p - 2 * r) as u64);
            let ff = contract_pair(f, f, p - r)?.norm_sq();
            let gg = contract_pair(g, g, p - r)?.norm_sq();
            acc += c * (ff + gg);
        }
        Ok(acc)
    } else {
        let mut acc = a * a;
        acc += factorial(p as u64).powi(2)
            * binomial((q - 1) as u64, (p - 1) as u64).powi(2)
            * factorial((q - p) as u64)
            * f.norm_sq()
            * contract_pair(g, g, q - p)?.norm_sq().sqrt();
        for r in 1..p {
            let c = 0.5
                * (p as f64).powi(2)
                * factorial((r - 1) as u64).powi(2)
                * binomial((p - 1) as u64, (r - 1) as u64).powi(2)
                * binomial((q - 1) as u64, (r - 1) as u64).powi(2)
                * factorial((p + q - 2 * r) as u64);
            let ff = contract_pair(f, f, p - r)?.norm_sq();
            let gg = contract_pair(g, g, q - r)?.norm_sq();
            acc += c * (ff + gg);
        }
        Ok(acc)
    }
}

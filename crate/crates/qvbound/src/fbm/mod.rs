//! Exact quantities and Berry-Esseen-type bounds for the quadratic (and
//! Hermite-power) variation of fractional Brownian motion.
//!
//! The normalized statistic is
//!   Z_n = (1/sigma_n) sum_{k<n} [ (B_{k+1} - B_k)^2 - 1 ],
//! whose increment correlation is rho(r) = ((|r+1|^{2H} + |r-1|^{2H}) -
//! 2|r|^{2H})/2 and whose fourth cumulant reduces to 48 tr(R^4)/sigma_n^4
//! for the Toeplitz Gram matrix R = [rho(k-l)]. Everything exact in this
//! module flows from those two reductions.

pub mod toeplitz;

use crate::error::{Error, Result};
use crate::special::{factorial, ln_factorial};
use serde::{Deserialize, Serialize};
use toeplitz::SymmetricToeplitz;

/// Above this lag the direct second difference switches to its asymptotic
/// expansion (two terms), which is already at ~1e-16 relative there.
pub const DEFAULT_RHO_CROSSOVER: u64 = 10_000;

fn check_hurst(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::invalid(format!("Hurst index must lie in (0,1), got {h}")));
    }
    Ok(())
}

/// Correlation of unit-spaced fBm increments at lag r:
///   rho(r) = ( |r+1|^{2H} + |r-1|^{2H} - 2|r|^{2H} ) / 2.
///
/// Even in r; identically 0 for H = 1/2 and |r| >= 1. For 2 <= |r| <=
/// crossover the second difference is taken through expm1/ln1p, which loses
/// only ~log10(r) digits instead of twice that; past the crossover the
/// two-term expansion of the second difference of x^{2H} takes over.
pub fn rho(r: i64, h: f64) -> Result<f64> {
    rho_with_crossover(r, h, DEFAULT_RHO_CROSSOVER)
}

pub fn rho_with_crossover(r: i64, h: f64, crossover: u64) -> Result<f64> {
    check_hurst(h)?;
    Ok(rho_unchecked(r.unsigned_abs(), h, crossover))
}

fn rho_unchecked(r: u64, h: f64, crossover: u64) -> f64 {
    if r == 0 {
        return 1.0;
    }
    if h == 0.5 {
        return 0.0;
    }
    let two_h = 2.0 * h;
    if r == 1 {
        // no cancellation: (2^{2H} + 0 - 2)/2
        return 0.5 * (2f64.powf(two_h) - 2.0);
    }
    let rf = r as f64;
    if r <= crossover {
        let up = (two_h * (1.0 / rf).ln_1p()).exp_m1();
        let down = (two_h * (-1.0 / rf).ln_1p()).exp_m1();
        0.5 * rf.powf(two_h) * (up + down)
    } else {
        let lead = h * (two_h - 1.0) * rf.powf(two_h - 2.0);
        lead * (1.0 + (two_h - 2.0) * (two_h - 3.0) / (12.0 * rf * rf))
    }
}

/// sum_{k,l=0}^{m-1} f(k-l) for an even function given by table[|r|],
/// folded into the single triangular sum m f(0) + 2 sum_r (m-r) f(r).
fn triangular_sum(m: usize, f: impl Fn(usize) -> f64) -> f64 {
    let mut acc = m as f64 * f(0);
    for r in 1..m {
        acc += 2.0 * (m - r) as f64 * f(r);
    }
    acc
}

/// sigma_n^2 = 2 sum_{k,l<n} rho^2(k-l), evaluated in O(n).
pub fn sigma_sq(n: usize, h: f64) -> Result<f64> {
    check_hurst(h)?;
    if n == 0 {
        return Err(Error::invalid("sigma_sq needs n >= 1"));
    }
    let table = rho_table(n - 1, h);
    Ok(2.0 * triangular_sum(n, |r| table[r] * table[r]))
}

/// Normalization for the Hermite-power variation of order q:
///   sigma_n^{(q) 2} = q! sum_{k,l<n} rho^q(k-l),
/// the variance of sum_k H_q(B_{k+1}-B_k) under E[H_q(x)H_q(y)] = q! rho^q.
pub fn hermite_variation_sigma_sq(n: usize, h: f64, q: u32) -> Result<f64> {
    check_hurst(h)?;
    if n == 0 {
        return Err(Error::invalid("hermite_variation_sigma_sq needs n >= 1"));
    }
    if q < 2 {
        return Err(Error::invalid("Hermite variation needs q >= 2"));
    }
    let table = rho_table(n - 1, h);
    Ok(factorial(q as u64) * triangular_sum(n, |r| table[r].powi(q as i32)))
}

/// rho(0..=max_lag) as a table.
pub fn rho_table(max_lag: usize, h: f64) -> Vec<f64> {
    (0..=max_lag)
        .map(|r| rho_unchecked(r as u64, h, DEFAULT_RHO_CROSSOVER))
        .collect()
}

/// ||f_n (x)_1 f_n||^2 = tr(R^4) / sigma_n^4 for the order-2 kernel of Z_n.
pub fn contraction_norm_sq(n: usize, h: f64) -> Result<f64> {
    check_hurst(h)?;
    if n == 0 {
        return Err(Error::invalid("contraction_norm_sq needs n >= 1"));
    }
    let table = rho_table(n - 1, h);
    let s2 = 2.0 * triangular_sum(n, |r| table[r] * table[r]);
    let gram = SymmetricToeplitz::new(table);
    Ok(gram.trace_r4() / (s2 * s2))
}

/// E(Z_n^4) - 3 = 48 ||f_n (x)_1 f_n||^2 (the order-1 contraction of f_n is
/// already symmetric because rho is even).
pub fn fourth_cumulant_exact(n: usize, h: f64) -> Result<f64> {
    Ok(48.0 * contraction_norm_sq(n, h)?)
}

/// The (H, n) model with its cached lag table and normalization.
#[derive(Debug, Clone)]
pub struct FbmQVModel {
    h: f64,
    n: usize,
    rho: Vec<f64>,
    sigma_sq: f64,
}

impl FbmQVModel {
    pub fn new(h: f64, n: usize) -> Result<Self> {
        check_hurst(h)?;
        if n == 0 {
            return Err(Error::invalid("model needs n >= 1"));
        }
        let rho = rho_table(n, h);
        let sigma_sq = 2.0 * triangular_sum(n, |r| rho[r] * rho[r]);
        Ok(FbmQVModel {
            h,
            n,
            rho,
            sigma_sq,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Cached rho(r), |r| <= n.
    pub fn rho(&self, r: i64) -> f64 {
        self.rho[r.unsigned_abs() as usize]
    }

    pub fn rho_slice(&self) -> &[f64] {
        &self.rho
    }

    pub fn sigma_sq(&self) -> f64 {
        self.sigma_sq
    }

    pub fn sigma(&self) -> f64 {
        self.sigma_sq.sqrt()
    }
}

/// The three rate regimes of the Gaussian-limit theorem.
pub fn bmstat_rate(n: usize, h: f64) -> f64 {
    let nf = n as f64;
    if h <= 0.5 {
        nf.powf(-0.5)
    } else if h < 0.75 {
        nf.powf(2.0 * h - 1.5)
    } else {
        // h = 3/4: 1/sqrt(log n)
        1.0 / nf.ln().sqrt()
    }
}

fn check_gaussian_regime(h: f64) -> Result<()> {
    check_hurst(h)?;
    if h > 0.75 {
        return Err(Error::domain(format!(
            "H = {h} > 3/4: the normalized quadratic variation no longer converges \
             to a Gaussian but to a Hermite-law limit, so no bound of this family \
             applies; only H <= 3/4 is supported"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundKind {
    #[serde(rename = "kolmogorov")]
    Kolmogorov,
    #[serde(rename = "multidim-smooth")]
    MultidimSmooth,
    #[serde(rename = "moment-gap")]
    MomentGap,
}

impl BoundKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            BoundKind::Kolmogorov => "kolmogorov",
            BoundKind::MultidimSmooth => "multidim-smooth",
            BoundKind::MomentGap => "moment-gap",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "exact")]
    Exact,
    #[serde(rename = "monte-carlo")]
    MonteCarlo,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::MonteCarlo => "monte-carlo",
        }
    }
}

/// One computed bound with its rate normalization and provenance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundReport {
    pub kind: BoundKind,
    #[serde(rename = "H")]
    pub h: f64,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    pub value: f64,
    pub rate: f64,
    pub rate_normalized: f64,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
    /// For the q = 2 Kolmogorov bound: the companion value
    /// sqrt(contraction_norm_sq / 2) from the variance route.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub direct_value: Option<f64>,
}

impl BoundReport {
    fn new(kind: BoundKind, h: f64, n: usize, value: f64, method: Method) -> Result<Self> {
        if !(value >= 0.0) {
            return Err(Error::invalid(format!("bound value must be >= 0, got {value}")));
        }
        let rate = bmstat_rate(n, h);
        Ok(BoundReport {
            kind,
            h,
            n,
            q: None,
            k: None,
            d: None,
            value,
            rate,
            rate_normalized: value / rate,
            method,
            stderr: None,
            direct_value: None,
        })
    }
}

/// The Kolmogorov bound for the quadratic variation (q = 2, exact path):
///   d_Kol(Z_n, N) <= sqrt( (1/6) (E Z_n^4 - 3) ),
/// together with the variance-route companion sqrt(cnsq / 2).
pub fn kolmogorov_bound(n: usize, h: f64) -> Result<BoundReport> {
    check_gaussian_regime(h)?;
    if n == 0 {
        return Err(Error::invalid("kolmogorov_bound needs n >= 1"));
    }
    let cnsq = contraction_norm_sq(n, h)?;
    let kappa4 = 48.0 * cnsq;
    let value = (kappa4 / 6.0).sqrt();
    let mut report = BoundReport::new(BoundKind::Kolmogorov, h, n, value, Method::Exact)?;
    report.q = Some(2);
    report.direct_value = Some((0.5 * cnsq).sqrt());
    Ok(report)
}

/// The same bound shape for a Hermite-power variation of order q >= 2,
/// assembled from an externally estimated fourth moment (the exact path is
/// q = 2 only; the sampler provides E(Z^4) estimates for q >= 3):
///   value = sqrt( ((q-1)/(3q)) max(E Z^4 - 3, 0) ).
pub fn kolmogorov_bound_from_fourth_moment(
    n: usize,
    h: f64,
    q: u32,
    fourth_moment: f64,
    fourth_moment_stderr: f64,
) -> Result<BoundReport> {
    check_gaussian_regime(h)?;
    if q < 2 {
        return Err(Error::invalid("chaos order must be >= 2"));
    }
    let factor = (q as f64 - 1.0) / (3.0 * q as f64);
    let gap = (fourth_moment - 3.0).max(0.0);
    let value = (factor * gap).sqrt();
    let mut report = BoundReport::new(BoundKind::Kolmogorov, h, n, value, Method::MonteCarlo)?;
    report.q = Some(q);
    // delta method: d value / d m4 = factor / (2 value)
    report.stderr = if value > 0.0 {
        Some(factor * fourth_moment_stderr / (2.0 * value))
    } else {
        Some(0.0)
    };
    Ok(report)
}

/// The moment-gap constant
///   c_{k,q} = (k-1) 2^{k-5/2} sqrt((q-1)/(3q))
///             ( sqrt((2k-4)!/(2^{k-2}(k-2)!)) + (2k-5)^{kq/2-q} ),
/// factorials in log space.
pub fn moment_gap_constant(k: u32, q: u32) -> Result<f64> {
    if k < 3 {
        return Err(Error::invalid("moment index k must be >= 3"));
    }
    if q < 2 {
        return Err(Error::invalid("chaos order q must be >= 2"));
    }
    if k > 30 {
        return Err(Error::invalid("moment index capped at k = 30"));
    }
    let kf = k as f64;
    let qf = q as f64;
    let ln_ratio = ln_factorial(2 * k as u64 - 4)
        - (kf - 2.0) * std::f64::consts::LN_2
        - ln_factorial(k as u64 - 2);
    let sqrt_term = (0.5 * ln_ratio).exp();
    let power_term = (2.0 * kf - 5.0).powf(kf * qf / 2.0 - qf);
    Ok((kf - 1.0) * 2f64.powf(kf - 2.5) * ((qf - 1.0) / (3.0 * qf)).sqrt()
        * (sqrt_term + power_term))
}

/// |E(Z^k) - E(N^k)| <= c_{k,q} sqrt(E Z^4 - 3).
pub fn moment_gap_bound(k: u32, q: u32, fourth_gap: f64) -> Result<f64> {
    if fourth_gap < 0.0 {
        return Err(Error::invalid("fourth-moment gap must be >= 0"));
    }
    Ok(moment_gap_constant(k, q)? * fourth_gap.sqrt())
}

/// Report row for the moment-gap bound of Z_n at moment k (q = 2 exact path).
pub fn moment_gap_report(n: usize, h: f64, k: u32) -> Result<BoundReport> {
    check_gaussian_regime(h)?;
    let gap = fourth_cumulant_exact(n, h)?;
    let value = moment_gap_bound(k, 2, gap)?;
    let mut report = BoundReport::new(BoundKind::MomentGap, h, n, value, Method::Exact)?;
    report.q = Some(2);
    report.k = Some(k);
    Ok(report)
}

/// A strictly increasing partition 0 = t_0 < t_1 < ... < t_d.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimePartition {
    times: Vec<f64>,
}

impl TimePartition {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 {
            return Err(Error::invalid("partition needs at least t_0 and t_1"));
        }
        if times[0] != 0.0 {
            return Err(Error::invalid("partition must start at t_0 = 0"));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("partition must be strictly increasing"));
        }
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("partition times must be finite"));
        }
        Ok(TimePartition { times })
    }

    /// Number of increments d.
    pub fn len(&self) -> usize {
        self.times.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Index block of increment i (1-based): [floor(n t_{i-1}), floor(n t_i)).
    pub fn block(&self, i: usize, n: usize) -> Result<(usize, usize)> {
        if i < 1 || i > self.len() {
            return Err(Error::invalid(format!(
                "block index {i} outside 1..={}",
                self.len()
            )));
        }
        let a = (n as f64 * self.times[i - 1]).floor() as usize;
        let b = (n as f64 * self.times[i]).floor() as usize;
        if b <= a {
            return Err(Error::invalid(format!(
                "block {i} is empty at n = {n}; refine n or the partition"
            )));
        }
        Ok((a, b))
    }
}

/// Normalized inner product of the block kernels of increments i < j:
///   <f_n^(i), f_n^(j)> = sum_{k in B_i, l in B_j} rho^2(k-l)
///                        / ( sigma_n^2 sqrt(dt_i dt_j) ).
pub fn cross_inner(part: &TimePartition, i: usize, j: usize, n: usize, h: f64) -> Result<f64> {
    check_hurst(h)?;
    if !(1 <= i && i < j && j <= part.len()) {
        return Err(Error::invalid(format!(
            "cross_inner needs 1 <= i < j <= {}, got ({i}, {j})",
            part.len()
        )));
    }
    let (a, b) = part.block(i, n)?;
    let (c, d) = part.block(j, n)?;
    debug_assert!(b <= c, "partition blocks are ordered and disjoint");
    let table = rho_table(d - 1 - a, h);
    // lag s = l - k ranges over [c-b+1, d-1-a]; count pairs per lag
    let mut sum = 0.0;
    for s in (c - b + 1)..=(d - 1 - a) {
        let k_lo = a.max(c.saturating_sub(s));
        let k_hi = (b - 1).min(d - 1 - s);
        if k_hi >= k_lo {
            let count = (k_hi - k_lo + 1) as f64;
            sum += count * table[s] * table[s];
        }
    }
    let s2 = sigma_sq(n, h)?;
    let dt_i = part.times()[i] - part.times()[i - 1];
    let dt_j = part.times()[j] - part.times()[j - 1];
    Ok(sum / (s2 * (dt_i * dt_j).sqrt()))
}

/// Ingredients of the multidimensional bound for one block.
struct BlockQuantities {
    /// E(Z_i^2) = 2 sum_{k,l in B_i} rho^2 / (sigma_n^2 dt_i)
    norm2: f64,
    /// ||f_i (x)_1 f_i||^2 = tr(R_i^4) / (sigma_n^2 dt_i)^2
    contraction: f64,
}

fn block_quantities(len: usize, dt: f64, s2: f64, table: &[f64]) -> BlockQuantities {
    let local = &table[..len];
    let pair_sum = triangular_sum(len, |r| local[r] * local[r]);
    let gram = SymmetricToeplitz::new(local.to_vec());
    let denom = s2 * dt;
    BlockQuantities {
        norm2: 2.0 * pair_sum / denom,
        contraction: gram.trace_r4() / (denom * denom),
    }
}

/// The d-dimensional smooth-test bound for the vector of normalized
/// quadratic-variation increments over the partition, with ||phi''|| = 1:
///
///   (1/2) sum_{i,j} T_ij,
///   T_ii = sqrt( (1 - E Z_i^2)^2 + 8 ||f_i (x)_1 f_i||^2 ),
///   T_ij = sqrt( 4 <f_i,f_j>^2 + 4 (||f_i (x)_1 f_i||^2 + ||f_j (x)_1 f_j||^2) ),
///
/// the diagonal from the p = q contraction estimate with a = 1 and the
/// off-diagonal from the same estimate with a = 0.
pub fn multidim_qv_bound(part: &TimePartition, n: usize, h: f64) -> Result<BoundReport> {
    check_gaussian_regime(h)?;
    if n == 0 {
        return Err(Error::invalid("multidim_qv_bound needs n >= 1"));
    }
    let d = part.len();
    let s2 = sigma_sq(n, h)?;
    let max_index = part.block(d, n)?.1;
    let table = rho_table(max_index, h);

    let blocks: Vec<(usize, usize)> = (1..=d).map(|i| part.block(i, n)).collect::<Result<_>>()?;
    let quants: Vec<BlockQuantities> = blocks
        .iter()
        .enumerate()
        .map(|(idx, &(a, b))| {
            let dt = part.times()[idx + 1] - part.times()[idx];
            block_quantities(b - a, dt, s2, &table)
        })
        .collect();

    let mut total = 0.0;
    for i in 1..=d {
        for j in 1..=d {
            if i == j {
                let q = &quants[i - 1];
                total += ((1.0 - q.norm2).powi(2) + 8.0 * q.contraction).sqrt();
            } else {
                let (lo, hi) = (i.min(j), i.max(j));
                let inner = cross_inner(part, lo, hi, n, h)?;
                let ci = quants[i - 1].contraction;
                let cj = quants[j - 1].contraction;
                total += (4.0 * inner * inner + 4.0 * (ci + cj)).sqrt();
            }
        }
    }
    let mut report =
        BoundReport::new(BoundKind::MultidimSmooth, h, n, 0.5 * total, Method::Exact)?;
    report.q = Some(2);
    report.d = Some(d);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rho_anchors() {
        for &h in &[0.1, 0.3, 0.5, 0.75, 0.9] {
            assert_eq!(rho(0, h).unwrap(), 1.0);
        }
        assert_eq!(rho(5, 0.5).unwrap(), 0.0);
        assert_eq!(rho(-5, 0.5).unwrap(), 0.0);
        // H = 3/4, r = 1: (2^{3/2} - 2)/2
        let v = rho(1, 0.75).unwrap();
        assert!((v - 0.5 * (2f64.powf(1.5) - 2.0)).abs() < 1e-15);
        assert!((v - 0.4142136).abs() < 1e-7);
        // evenness
        for &h in &[0.3, 0.6, 0.7] {
            for r in 1..10 {
                assert_eq!(rho(r, h).unwrap(), rho(-r, h).unwrap());
            }
        }
        assert!(rho(1, 0.0).is_err());
        assert!(rho(1, 1.0).is_err());
    }

    #[test]
    fn rho_direct_and_asymptotic_agree_at_crossover() {
        for &h in &[0.1, 0.3, 0.6, 0.7, 0.75, 0.9] {
            // near the crossover the stable direct form still has ~1e-12
            // relative accuracy, making it a fair cross-check; the far-lag
            // extended-precision comparison lives in the quadrature oracle
            // of the integration tests
            for &r in &[10_000i64, 10_001, 20_000, 40_000] {
                let direct = rho_with_crossover(r, h, u64::MAX).unwrap();
                let asym = rho_with_crossover(r, h, 1).unwrap();
                let denom = direct.abs().max(1e-300);
                assert!(
                    ((direct - asym) / denom).abs() < 1e-10,
                    "h={h} r={r}: direct={direct} asym={asym}"
                );
            }
        }
    }

    #[test]
    fn sigma_sq_anchors() {
        // n = 1: only rho(0) contributes
        assert_eq!(sigma_sq(1, 0.3).unwrap(), 2.0);
        // H = 1/2: exactly 2n
        for &n in &[1usize, 7, 128] {
            assert_eq!(sigma_sq(n, 0.5).unwrap(), 2.0 * n as f64);
        }
    }

    #[test]
    fn sigma_sq_matches_double_sum() {
        for &(n, h) in &[(2usize, 0.3), (17, 0.6), (64, 0.75), (128, 0.45)] {
            let fast = sigma_sq(n, h).unwrap();
            let mut slow = 0.0;
            for k in 0..n as i64 {
                for l in 0..n as i64 {
                    let r = rho(k - l, h).unwrap();
                    slow += 2.0 * r * r;
                }
            }
            assert!(((fast - slow) / slow).abs() < 1e-12, "n={n} h={h}");
        }
    }

    #[test]
    fn hermite_sigma_consistency() {
        // q = 2 collapses to sigma_sq
        for &(n, h) in &[(16usize, 0.3), (64, 0.7)] {
            let a = hermite_variation_sigma_sq(n, h, 2).unwrap();
            let b = sigma_sq(n, h).unwrap();
            assert!(((a - b) / b).abs() < 1e-14);
        }
        // H = 1/2: q! n
        assert_eq!(hermite_variation_sigma_sq(10, 0.5, 3).unwrap(), 60.0);
        assert!(hermite_variation_sigma_sq(10, 0.5, 1).is_err());
    }

    #[test]
    fn hermite_sigma_matches_double_sum() {
        let (n, h, q) = (256usize, 0.8, 3u32);
        let fast = hermite_variation_sigma_sq(n, h, q).unwrap();
        let table = rho_table(n, h);
        let mut slow = 0.0;
        for k in 0..n {
            for l in 0..n {
                slow += table[k.abs_diff(l)].powi(3);
            }
        }
        slow *= 6.0;
        assert!(((fast - slow) / slow.abs()).abs() < 1e-12);
        assert!(fast > 0.0);
    }

    #[test]
    fn contraction_identity_h_half() {
        // R = I: tr(R^4)/sigma^4 = n/(4n^2) = 1/(4n)
        for &n in &[2usize, 12, 100] {
            let c = contraction_norm_sq(n, 0.5).unwrap();
            assert!(((c - 1.0 / (4.0 * n as f64)) / c).abs() < 1e-10, "n={n}");
        }
    }

    #[test]
    fn contraction_matches_quadruple_loop_n2() {
        // 16-term hand sum at n = 2
        for &h in &[0.3, 0.6, 0.75] {
            let fast = contraction_norm_sq(2, h).unwrap();
            let s2 = sigma_sq(2, h).unwrap();
            let mut quad = 0.0;
            for i in 0..2i64 {
                for j in 0..2i64 {
                    for k in 0..2i64 {
                        for l in 0..2i64 {
                            quad += rho(k - l, h).unwrap()
                                * rho(i - j, h).unwrap()
                                * rho(k - i, h).unwrap()
                                * rho(l - j, h).unwrap();
                        }
                    }
                }
            }
            quad /= s2 * s2;
            assert!(((fast - quad) / quad).abs() < 1e-12, "h={h}");
        }
    }

    #[test]
    fn fourth_cumulant_h_half_is_12_over_n() {
        for &n in &[12usize, 48, 192] {
            let k4 = fourth_cumulant_exact(n, 0.5).unwrap();
            assert!(
                (k4 - 12.0 / n as f64).abs() < 1e-12,
                "n={n}: k4={k4}"
            );
        }
    }

    #[test]
    fn kolmogorov_bound_values_and_regimes() {
        let r = kolmogorov_bound(12, 0.5).unwrap();
        assert!((r.value - (1.0f64 / 6.0).sqrt()).abs() < 1e-10);
        assert!((r.value - 0.40825).abs() < 1e-5);
        // companion value at H = 1/2: sqrt(1/(8n))
        let direct = r.direct_value.unwrap();
        assert!((direct - 1.0 / (8.0 * 12.0f64).sqrt()).abs() < 1e-12);
        assert_eq!(r.q, Some(2));
        assert_eq!(r.method, Method::Exact);
        assert!((r.rate_normalized - r.value * (12f64).sqrt()).abs() < 1e-12);

        match kolmogorov_bound(64, 0.8) {
            Err(Error::Domain(msg)) => assert!(msg.contains("Hermite")),
            other => panic!("expected Hermite-regime domain error, got {other:?}"),
        }
    }

    #[test]
    fn rate_branches() {
        assert_eq!(bmstat_rate(100, 0.4), 0.1);
        assert_eq!(bmstat_rate(100, 0.5), 0.1);
        let r = bmstat_rate(100, 0.6);
        assert!((r - 100f64.powf(-0.3)).abs() < 1e-15);
        let r = bmstat_rate(100, 0.75);
        assert!((r - 1.0 / 100f64.ln().sqrt()).abs() < 1e-15);
    }

    #[test]
    fn moment_gap_constant_anchors() {
        // c_{3,2} = 4/sqrt(3)
        let c32 = moment_gap_constant(3, 2).unwrap();
        assert!((c32 - 4.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((c32 - 2.309401).abs() < 1e-6);
        // c_{4,2} = 3 * 2^{3/2} * sqrt(1/6) * (sqrt(3) + 3^2) = 6 + 18 sqrt(3)
        let c42 = moment_gap_constant(4, 2).unwrap();
        assert!((c42 - (6.0 + 18.0 * 3f64.sqrt())).abs() < 1e-10);
        // monotone in q for k = 3..6
        for k in 3..=6 {
            assert!(moment_gap_constant(k, 2).unwrap() < moment_gap_constant(k, 3).unwrap());
        }
        assert!(moment_gap_constant(2, 2).is_err());
        assert!(moment_gap_constant(3, 1).is_err());
    }

    #[test]
    fn moment_gap_bound_basics() {
        assert_eq!(moment_gap_bound(3, 2, 0.0).unwrap(), 0.0);
        let b = moment_gap_bound(3, 2, 1.0).unwrap();
        assert!((b - 2.309401).abs() < 1e-6);
        assert!(moment_gap_bound(3, 2, -0.1).is_err());
    }

    #[test]
    fn partition_validation() {
        assert!(TimePartition::new(vec![0.0, 0.5, 1.0]).is_ok());
        assert!(TimePartition::new(vec![0.1, 0.5]).is_err());
        assert!(TimePartition::new(vec![0.0, 0.5, 0.5]).is_err());
        assert!(TimePartition::new(vec![0.0]).is_err());
        let p = TimePartition::new(vec![0.0, 0.25, 1.0]).unwrap();
        assert_eq!(p.block(1, 64).unwrap(), (0, 16));
        assert_eq!(p.block(2, 64).unwrap(), (16, 64));
        assert!(p.block(3, 64).is_err());
        assert!(p.block(1, 2).is_err()); // empty block
    }

    #[test]
    fn cross_inner_h_half_vanishes() {
        let p = TimePartition::new(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(cross_inner(&p, 1, 2, 64, 0.5).unwrap(), 0.0);
        let p3 = TimePartition::new(vec![0.0, 0.3, 0.6, 1.0]).unwrap();
        assert_eq!(cross_inner(&p3, 1, 3, 64, 0.5).unwrap(), 0.0);
        assert!(cross_inner(&p, 2, 1, 64, 0.5).is_err());
        assert!(cross_inner(&p, 1, 1, 64, 0.5).is_err());
    }

    #[test]
    fn cross_inner_matches_double_loop() {
        let p = TimePartition::new(vec![0.0, 0.4, 1.0]).unwrap();
        let (n, h) = (50usize, 0.7);
        let fast = cross_inner(&p, 1, 2, n, h).unwrap();
        let (a, b) = p.block(1, n).unwrap();
        let (c, d) = p.block(2, n).unwrap();
        let mut slow = 0.0;
        for k in a..b {
            for l in c..d {
                let r = rho(l as i64 - k as i64, h).unwrap();
                slow += r * r;
            }
        }
        slow /= sigma_sq(n, h).unwrap() * (0.4f64 * 0.6).sqrt();
        assert!(((fast - slow) / slow).abs() < 1e-12, "fast={fast} slow={slow}");
    }

    #[test]
    fn multidim_reduces_to_single_block() {
        let p = TimePartition::new(vec![0.0, 1.0]).unwrap();
        let (n, h) = (64usize, 0.6);
        let multi = multidim_qv_bound(&p, n, h).unwrap();
        let kol = kolmogorov_bound(n, h).unwrap();
        // single full block: E(Z_1^2) = 1 exactly, so the bound collapses to
        // (1/2) sqrt(8 cnsq) = kolmogorov value / 2
        assert!(((multi.value - 0.5 * kol.value) / multi.value).abs() < 1e-12);
        assert_eq!(multi.d, Some(1));
    }

    #[test]
    fn multidim_h_half_diagonal_only() {
        let p = TimePartition::new(vec![0.0, 1.0, 2.0]).unwrap();
        let (n, h) = (64usize, 0.5);
        let rep = multidim_qv_bound(&p, n, h).unwrap();
        // off-diagonal: cross inner = 0 but the contraction terms remain
        let block_cn = |m: usize| {
            let denom = sigma_sq(n, h).unwrap();
            m as f64 / (denom * denom)
        };
        let cn = block_cn(64);
        let diag = 2.0 * ((1.0 - 2.0 * 64.0 / sigma_sq(n, h).unwrap()).powi(2) + 8.0 * cn).sqrt();
        let off = 2.0 * (4.0 * (cn + cn)).sqrt();
        assert!(((rep.value - 0.5 * (diag + off)) / rep.value).abs() < 1e-12);
        assert!(multidim_qv_bound(&p, 64, 0.8).is_err());
    }
}

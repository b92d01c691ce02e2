//! Exact fractional Gaussian noise sampling and the reproducible Monte
//! Carlo engine for the variation statistics.
//!
//! Sampling is by circulant embedding: the n x n increment covariance
//! [rho(k-l)] embeds into the 2n x 2n circulant with first column
//! [rho_0 .. rho_{n-1}, rho_n, rho_{n-1} .. rho_1], whose eigenvalues are
//! the FFT of that column. Complex Gaussian weights with variances lambda_j
//! push forward through one FFT to a vector whose first n coordinates have
//! exactly the target covariance. Replicate i draws from Gaussian stream i,
//! and reductions run in fixed replicate order, so every result is a pure
//! function of (seed, replicates, model) regardless of thread count.

use crate::error::{Error, Result};
use crate::fbm::FbmQVModel;
use crate::rng::NormalStream;
use crate::special::dkw_radius;
use crate::stein::{empirical_kolmogorov, hermite, EmpiricalSample};
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::sync::Arc;

/// Relative tolerance for negative circulant eigenvalues: anything above
/// -1e-8 * max is clipped to zero (and counted); anything below is an error.
const EIGEN_CLIP_REL: f64 = 1e-8;

pub struct FgnSampler {
    h: f64,
    n: usize,
    /// Scale per complex weight slot: sqrt(lambda_j / M) at j = 0, M/2 and
    /// sqrt(lambda_j / (2M)) in between.
    weight_scale: Vec<f64>,
    fft: Option<Arc<dyn Fft<f64>>>,
    clipped: usize,
}

impl FgnSampler {
    pub fn new(h: f64, n: usize) -> Result<Self> {
        let model = FbmQVModel::new(h, n)?;
        Self::from_model(&model)
    }

    pub fn from_model(model: &FbmQVModel) -> Result<Self> {
        let n = model.n();
        let h = model.h();
        if n == 1 {
            return Ok(FgnSampler {
                h,
                n,
                weight_scale: Vec::new(),
                fft: None,
                clipped: 0,
            });
        }
        let m = 2 * n;
        let rho = model.rho_slice(); // rho(0..=n)
        let mut embed: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
        for (k, slot) in embed.iter_mut().enumerate() {
            let lag = if k <= n { k } else { m - k };
            *slot = Complex64::new(rho[lag], 0.0);
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(m);
        let mut spectrum = embed;
        fft.process(&mut spectrum);

        let max_eig = spectrum.iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        let floor = -EIGEN_CLIP_REL * max_eig;
        let mut clipped = 0usize;
        let mut lambda = Vec::with_capacity(m);
        for z in &spectrum {
            if z.re < floor {
                return Err(Error::Construction(format!(
                    "circulant embedding for H = {h}, n = {n} has eigenvalue {} \
                     below the clip floor {floor}",
                    z.re
                )));
            }
            if z.re < 0.0 {
                clipped += 1;
                lambda.push(0.0);
            } else {
                lambda.push(z.re);
            }
        }
        let mf = m as f64;
        let weight_scale: Vec<f64> = lambda
            .iter()
            .enumerate()
            .map(|(j, &l)| {
                if j == 0 || j == n {
                    (l / mf).sqrt()
                } else {
                    (l / (2.0 * mf)).sqrt()
                }
            })
            .collect();
        Ok(FgnSampler {
            h,
            n,
            weight_scale,
            fft: Some(fft),
            clipped,
        })
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of embedding eigenvalues clipped to zero (0 for fGn in practice).
    pub fn clipped_eigenvalues(&self) -> usize {
        self.clipped
    }

    /// One exact fGn path: deterministic in (seed, replicate_id).
    pub fn sample_fgn(&self, seed: u64, replicate_id: u64) -> Vec<f64> {
        let mut stream = NormalStream::new(seed, replicate_id);
        if self.n == 1 {
            return vec![stream.next_normal()];
        }
        let m = 2 * self.n;
        let mut w: Vec<Complex64> = vec![Complex64::new(0.0, 0.0); m];
        w[0] = Complex64::new(self.weight_scale[0] * stream.next_normal(), 0.0);
        w[self.n] = Complex64::new(self.weight_scale[self.n] * stream.next_normal(), 0.0);
        for j in 1..self.n {
            let s = self.weight_scale[j];
            let re = s * stream.next_normal();
            let im = s * stream.next_normal();
            w[j] = Complex64::new(re, im);
            w[m - j] = Complex64::new(re, -im);
        }
        self.fft.as_ref().expect("n >= 2 has a plan").process(&mut w);
        w[..self.n].iter().map(|z| z.re).collect()
    }
}

/// Z_n-type statistic from raw increments: (1/sigma) sum (x_k^2 - 1).
pub fn qv_statistic(increments: &[f64], sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma}")));
    }
    Ok(increments.iter().map(|x| x * x - 1.0).sum::<f64>() / sigma)
}

/// Hermite-power statistic: (1/sigma_q) sum H_q(x_k).
pub fn hermite_statistic(increments: &[f64], q: u32, sigma_q: f64) -> Result<f64> {
    if q < 2 {
        return Err(Error::invalid("Hermite variation needs q >= 2"));
    }
    if !(sigma_q > 0.0) {
        return Err(Error::invalid(format!("sigma must be > 0, got {sigma_q}")));
    }
    Ok(increments.iter().map(|&x| hermite(q, x)).sum::<f64>() / sigma_q)
}

/// What the Monte Carlo engine simulates per replicate.
pub enum McModel {
    /// A single standard normal draw (calibration model).
    StandardNormal,
    /// The normalized quadratic variation Z_n of fGn increments.
    QuadraticVariation { sampler: FgnSampler, sigma: f64 },
    /// The normalized Hermite-power variation Z_n^{(q)}.
    HermiteVariation {
        sampler: FgnSampler,
        q: u32,
        sigma_q: f64,
    },
}

impl McModel {
    pub fn standard_normal() -> Self {
        McModel::StandardNormal
    }

    pub fn quadratic_variation(h: f64, n: usize) -> Result<Self> {
        let model = FbmQVModel::new(h, n)?;
        Ok(McModel::QuadraticVariation {
            sampler: FgnSampler::from_model(&model)?,
            sigma: model.sigma(),
        })
    }

    pub fn hermite_variation(h: f64, n: usize, q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::invalid("Hermite variation needs q >= 2"));
        }
        let model = FbmQVModel::new(h, n)?;
        let sigma_q = crate::fbm::hermite_variation_sigma_sq(n, h, q)?.sqrt();
        Ok(McModel::HermiteVariation {
            sampler: FgnSampler::from_model(&model)?,
            q,
            sigma_q,
        })
    }

    fn statistic(&self, seed: u64, replicate: u64) -> f64 {
        match self {
            McModel::StandardNormal => NormalStream::new(seed, replicate).next_normal(),
            McModel::QuadraticVariation { sampler, sigma } => {
                let path = sampler.sample_fgn(seed, replicate);
                qv_statistic(&path, *sigma).expect("sigma > 0 by construction")
            }
            McModel::HermiteVariation { sampler, q, sigma_q } => {
                let path = sampler.sample_fgn(seed, replicate);
                hermite_statistic(&path, *q, *sigma_q).expect("sigma > 0 by construction")
            }
        }
    }
}

/// A reproducible Monte Carlo run: replicate i draws from stream i.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct McRun {
    pub seed: u64,
    pub replicates: usize,
    pub batches: usize,
}

impl McRun {
    pub fn new(seed: u64, replicates: usize) -> Self {
        McRun {
            seed,
            replicates,
            batches: 32,
        }
    }
}

/// All per-replicate statistic values, in replicate order (bit-stable
/// across thread counts: the rayon map is indexed and the collect ordered).
pub fn mc_statistics(run: &McRun, model: &McModel) -> Result<Vec<f64>> {
    if run.replicates == 0 {
        return Err(Error::invalid("Monte Carlo needs at least one replicate"));
    }
    Ok((0..run.replicates)
        .into_par_iter()
        .map(|i| model.statistic(run.seed, i as u64))
        .collect())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MomentEstimates {
    pub k_max: u32,
    /// mean[k-1] estimates E(Z^k).
    pub mean: Vec<f64>,
    /// Batch-mean standard errors, same indexing.
    pub stderr: Vec<f64>,
}

/// Batch-mean estimates of E(Z^k) for k = 1..=k_max.
pub fn mc_moments(run: &McRun, model: &McModel, k_max: u32) -> Result<MomentEstimates> {
    if run.replicates < 100 {
        return Err(Error::invalid("moment estimation needs at least 100 replicates"));
    }
    if k_max < 1 || k_max > 8 {
        return Err(Error::invalid("k_max must lie in 1..=8"));
    }
    let samples = mc_statistics(run, model)?;
    let (mean, stderr) = batch_moments(&samples, k_max, run.batches);
    Ok(MomentEstimates {
        k_max,
        mean,
        stderr,
    })
}

/// Batched moment summaries of precomputed samples (fixed order of
/// accumulation; near-equal contiguous batches).
pub fn batch_moments(samples: &[f64], k_max: u32, batches: usize) -> (Vec<f64>, Vec<f64>) {
    let m = samples.len();
    let b = batches.max(1).min(m);
    let mut mean = vec![0.0f64; k_max as usize];
    let mut stderr = vec![0.0f64; k_max as usize];
    for k in 1..=k_max as usize {
        let mut batch_means = Vec::with_capacity(b);
        for chunk_idx in 0..b {
            let lo = chunk_idx * m / b;
            let hi = (chunk_idx + 1) * m / b;
            let sum: f64 = samples[lo..hi].iter().map(|x| x.powi(k as i32)).sum();
            batch_means.push(sum / (hi - lo) as f64);
        }
        let grand: f64 =
            samples.iter().map(|x| x.powi(k as i32)).sum::<f64>() / m as f64;
        let bf = b as f64;
        let var = batch_means
            .iter()
            .map(|v| (v - grand) * (v - grand))
            .sum::<f64>()
            / (bf - 1.0).max(1.0);
        mean[k - 1] = grand;
        stderr[k - 1] = (var / bf).sqrt();
    }
    (mean, stderr)
}

/// Empirical Kolmogorov distance of the simulated statistic to the standard
/// normal, with the 99% DKW radius sqrt(ln(2/0.01) / (2M)).
pub fn mc_kolmogorov(run: &McRun, model: &McModel) -> Result<(f64, f64)> {
    if run.replicates < 10_000 {
        return Err(Error::invalid(
            "Kolmogorov estimation needs at least 10^4 replicates",
        ));
    }
    let samples = mc_statistics(run, model)?;
    let d = empirical_kolmogorov(&EmpiricalSample::new(samples)?)?;
    let radius = dkw_radius(run.replicates, 0.99)?;
    Ok((d, radius))
}

const SAMPLE_MAGIC: &[u8; 4] = b"QVMC";
const SAMPLE_VERSION: u32 = 1;

/// Stream raw statistic samples to a little-endian binary file:
/// magic "QVMC", version u32, H f64, n u64, M u64, then M f64 values.
pub fn write_samples(
    mut out: impl Write,
    h: f64,
    n: usize,
    samples: &[f64],
) -> Result<()> {
    out.write_all(SAMPLE_MAGIC)?;
    out.write_all(&SAMPLE_VERSION.to_le_bytes())?;
    out.write_all(&h.to_le_bytes())?;
    out.write_all(&(n as u64).to_le_bytes())?;
    out.write_all(&(samples.len() as u64).to_le_bytes())?;
    for v in samples {
        out.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

/// Read back a sample file written by [`write_samples`].
pub fn read_samples(mut input: impl Read) -> Result<(f64, usize, Vec<f64>)> {
    let mut magic = [0u8; 4];
    input.read_exact(&mut magic)?;
    if &magic != SAMPLE_MAGIC {
        return Err(Error::invalid("not a QVMC sample file"));
    }
    let mut b4 = [0u8; 4];
    input.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != SAMPLE_VERSION {
        return Err(Error::invalid(format!("unsupported QVMC version {version}")));
    }
    let mut b8 = [0u8; 8];
    input.read_exact(&mut b8)?;
    let h = f64::from_le_bytes(b8);
    input.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    input.read_exact(&mut b8)?;
    let m = u64::from_le_bytes(b8) as usize;
    let mut samples = Vec::with_capacity(m);
    for _ in 0..m {
        input.read_exact(&mut b8)?;
        samples.push(f64::from_le_bytes(b8));
    }
    Ok((h, n, samples))
}

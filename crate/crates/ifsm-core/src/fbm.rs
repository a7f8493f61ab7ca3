//! Exact-in-distribution fractional Gaussian noise synthesis.
//!
//! Primary route is circulant embedding of the FGN autocovariance
//! (O(n log n), exact when the embedding is nonnegative definite, which
//! holds for fractional Gaussian noise across H in (0,1)). A dense
//! Cholesky factorization of the covariance is kept as a fallback for
//! small grids or an embedding failure.

use crate::error::{Error, Result};
use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

/// Largest grid for which the dense fallback is allowed.
const MAX_CHOLESKY_STEPS: usize = 2048;

/// Relative tolerance for clipping tiny negative embedding eigenvalues.
const EIG_TOL: f64 = 1e-8;

/// FGN autocovariance at lag `k` for unit-step variance `v`:
/// `gamma(k) = v/2 * (|k+1|^{2H} - 2|k|^{2H} + |k-1|^{2H})`.
fn fgn_autocov(v: f64, h: f64, k: usize) -> f64 {
    let k = k as f64;
    let p = 2.0 * h;
    0.5 * v * ((k + 1.0).powf(p) - 2.0 * k.powf(p) + (k - 1.0).abs().powf(p))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FbmMethod {
    /// Circulant embedding, falling back to Cholesky on failure.
    Auto,
    /// Dense Cholesky only (testing and small grids).
    Cholesky,
}

enum Engine {
    Circulant { sqrt_eigs: Vec<f64>, fft: Arc<dyn Fft<f64>> },
    Cholesky { lower: Vec<f64> },
}

/// Stationary Gaussian increment sampler for one (H, sigma, dt, n) tuple.
/// Shareable across threads; each call consumes one caller-owned stream.
pub struct FbmSampler {
    n: usize,
    engine: Engine,
    pub used_fallback: bool,
}

impl FbmSampler {
    pub fn new(hurst: f64, sigma: f64, dt: f64, n: usize, method: FbmMethod) -> Result<Self> {
        if !(hurst > 0.0 && hurst < 1.0) {
            return Err(Error::InvalidHurst(hurst));
        }
        let v = sigma * sigma * dt.powf(2.0 * hurst);
        if method == FbmMethod::Cholesky {
            return Ok(Self {
                n,
                engine: Engine::Cholesky { lower: cholesky_lower(v, hurst, n)? },
                used_fallback: false,
            });
        }
        match circulant_eigs(v, hurst, n) {
            Some(sqrt_eigs) => {
                let fft = FftPlanner::new().plan_fft_forward(2 * n);
                Ok(Self { n, engine: Engine::Circulant { sqrt_eigs, fft }, used_fallback: false })
            }
            None => {
                log::warn!(
                    "circulant embedding not nonnegative definite at H={hurst}, n={n}; \
                     using dense Cholesky fallback"
                );
                Ok(Self {
                    n,
                    engine: Engine::Cholesky { lower: cholesky_lower(v, hurst, n)? },
                    used_fallback: true,
                })
            }
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Draw one FGN vector of length `n` into `out`.
    pub fn sample_increments<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
        assert_eq!(out.len(), self.n);
        match &self.engine {
            Engine::Circulant { sqrt_eigs, fft } => {
                let m = 2 * self.n;
                let norm = 1.0 / (m as f64).sqrt();
                let mut buf = vec![Complex::new(0.0, 0.0); m];
                let z0: f64 = rng.sample(StandardNormal);
                let zn: f64 = rng.sample(StandardNormal);
                buf[0] = Complex::new(sqrt_eigs[0] * z0, 0.0);
                buf[self.n] = Complex::new(sqrt_eigs[self.n] * zn, 0.0);
                let half = 0.5f64.sqrt();
                for k in 1..self.n {
                    let a: f64 = rng.sample(StandardNormal);
                    let b: f64 = rng.sample(StandardNormal);
                    let w = sqrt_eigs[k] * half;
                    buf[k] = Complex::new(w * a, w * b);
                    buf[m - k] = Complex::new(w * a, -(w * b));
                }
                fft.process(&mut buf);
                for (o, c) in out.iter_mut().zip(buf.iter().take(self.n)) {
                    *o = c.re * norm;
                }
            }
            Engine::Cholesky { lower } => {
                let z: Vec<f64> = (0..self.n).map(|_| rng.sample(StandardNormal)).collect();
                for (i, o) in out.iter_mut().enumerate() {
                    let row = &lower[i * self.n..i * self.n + i + 1];
                    *o = row.iter().zip(&z).map(|(l, zz)| l * zz).sum();
                }
            }
        }
    }
}

/// Eigenvalues of the length-2n circulant embedding, or None if any is
/// materially negative.
fn circulant_eigs(v: f64, h: f64, n: usize) -> Option<Vec<f64>> {
    let m = 2 * n;
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(m);
    for k in 0..=n {
        buf.push(Complex::new(fgn_autocov(v, h, k), 0.0));
    }
    for k in (1..n).rev() {
        buf.push(Complex::new(fgn_autocov(v, h, k), 0.0));
    }
    let fft = FftPlanner::new().plan_fft_forward(m);
    fft.process(&mut buf);
    let max = buf.iter().map(|c| c.re).fold(f64::MIN, f64::max);
    let mut eigs = Vec::with_capacity(m);
    for c in &buf {
        if c.re < -EIG_TOL * max {
            return None;
        }
        eigs.push(c.re.max(0.0).sqrt());
    }
    Some(eigs)
}

/// Dense Cholesky factor of the FGN covariance (lower triangular, row-major).
fn cholesky_lower(v: f64, h: f64, n: usize) -> Result<Vec<f64>> {
    if n > MAX_CHOLESKY_STEPS {
        return Err(Error::EmbeddingFailed(n));
    }
    let mut l = vec![0.0f64; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = fgn_autocov(v, h, i - j);
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if s <= 0.0 {
                    return Err(Error::EmbeddingFailed(n));
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Ok(l)
}

//! Pseudo-thermal speckle: Monte Carlo fields, the normalized intensity
//! cross-correlation between a scanned and a fixed detector, the e^-2 width
//! of that correlation and its conversion to the pointer coherence ratio `γ`.
//!
//! Fields are circular complex Gaussian with field correlation
//! `<E*(x) E(x')> = exp(-(x-x')^2 / w_g^2)`, so the intensity correlation is
//! `exp(-2(x-x')^2 / w_g^2)` and its e^-2 half-width is `w_g`. Realizations
//! stand in for the time average of a rotating diffuser. Detectors are
//! points; lengths are in millimetres unless noted.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{Fft, FftPlanner};

use crate::error::{Result, WvError};
use crate::parallel;

pub const MIN_REALIZATIONS: usize = 100;
pub const MIN_SAMPLES: usize = 256;

/// Realizations folded together before partial sums are merged.
const REALIZATION_CHUNK: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeckleConfig {
    /// Ground-truth field correlation width `w_g` (mm).
    pub field_corr_width: f64,
    /// Length of the periodic sampling window (mm).
    pub x_extent: f64,
    pub n_samples: usize,
    pub n_realizations: usize,
    pub seed: u64,
}

impl SpeckleConfig {
    pub fn new(
        field_corr_width: f64,
        x_extent: f64,
        n_samples: usize,
        n_realizations: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            field_corr_width,
            x_extent,
            n_samples,
            n_realizations,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.field_corr_width.is_finite() && self.field_corr_width > 0.0) {
            return Err(WvError::InvalidParameter(format!(
                "field correlation width must be positive, got {}",
                self.field_corr_width
            )));
        }
        if !(self.x_extent.is_finite() && self.x_extent >= 8.0 * self.field_corr_width) {
            return Err(WvError::InvalidParameter(format!(
                "extent {} mm is below 8 correlation widths",
                self.x_extent
            )));
        }
        if self.n_samples < MIN_SAMPLES {
            return Err(WvError::InvalidParameter(format!(
                "need at least {MIN_SAMPLES} samples, got {}",
                self.n_samples
            )));
        }
        if self.n_realizations < MIN_REALIZATIONS {
            return Err(WvError::InsufficientRealizations {
                required: MIN_REALIZATIONS,
                got: self.n_realizations,
            });
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        self.x_extent / self.n_samples as f64
    }

    /// Sample positions, centred so that sample `n/2` sits at `x = 0`.
    pub fn positions(&self) -> Vec<f64> {
        let half = (self.n_samples / 2) as f64;
        (0..self.n_samples)
            .map(|i| (i as f64 - half) * self.dx())
            .collect()
    }
}

/// Field synthesizer: white circular Gaussian noise circularly convolved with
/// a Gaussian kernel normalized to `Σ h^2 = 1`, giving unit mean intensity.
pub struct SpeckleSource {
    cfg: SpeckleConfig,
    kernel_spectrum: Vec<Complex64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl SpeckleSource {
    pub fn new(cfg: SpeckleConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.n_samples;
        let dx = cfg.dx();
        let wg2 = cfg.field_corr_width.powi(2);
        let mut kernel: Vec<Complex64> = (0..n)
            .map(|i| {
                let m = i.min(n - i) as f64 * dx;
                Complex64::new((-2.0 * m * m / wg2).exp(), 0.0)
            })
            .collect();
        let norm = kernel.iter().map(|h| h.norm_sqr()).sum::<f64>().sqrt();
        kernel.iter_mut().for_each(|h| *h /= norm);
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        forward.process(&mut kernel);
        Ok(Self {
            cfg,
            kernel_spectrum: kernel,
            forward,
            inverse,
        })
    }

    pub fn config(&self) -> &SpeckleConfig {
        &self.cfg
    }

    /// Field of one realization. Each realization draws from its own ChaCha
    /// stream keyed by `(seed, realization)`, so output does not depend on
    /// evaluation order.
    pub fn field(&self, realization: u64) -> Vec<Complex64> {
        let n = self.cfg.n_samples;
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(realization);
        let scale = std::f64::consts::FRAC_1_SQRT_2;
        let mut buf: Vec<Complex64> = (0..n)
            .map(|_| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                Complex64::new(re * scale, im * scale)
            })
            .collect();
        self.forward.process(&mut buf);
        buf.iter_mut()
            .zip(&self.kernel_spectrum)
            .for_each(|(b, k)| *b *= k);
        self.inverse.process(&mut buf);
        let inv_n = 1.0 / n as f64;
        buf.iter_mut().for_each(|b| *b *= inv_n);
        buf
    }
}

pub fn generate_speckle_field(cfg: &SpeckleConfig, realization: u64) -> Result<Vec<Complex64>> {
    Ok(SpeckleSource::new(*cfg)?.field(realization))
}

/// Normalized intensity cross-correlation against the fixed detector.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationCurve {
    /// Scanned detector positions (mm).
    pub x: Vec<f64>,
    pub c: Vec<f64>,
    /// Position of the fixed detector (mm), snapped to a sample.
    pub ref_x: f64,
}

/// Per-position moment sums over realizations.
struct Moments {
    n: usize,
    sum: Vec<f64>,
    sum_sq: Vec<f64>,
    sum_cross: Vec<f64>,
}

impl Moments {
    fn zeros(len: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; len],
            sum_sq: vec![0.0; len],
            sum_cross: vec![0.0; len],
        }
    }

    fn merge(mut self, other: Self) -> Self {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sum_sq.iter_mut().zip(&other.sum_sq) {
            *a += b;
        }
        for (a, b) in self.sum_cross.iter_mut().zip(&other.sum_cross) {
            *a += b;
        }
        self
    }
}

/// `C(x) = <ΔI(x) ΔI(ref)> / sqrt(<ΔI(x)^2> <ΔI(ref)^2>)` with the ensemble
/// average over realizations.
pub fn intensity_cross_correlation(cfg: &SpeckleConfig, ref_x: f64) -> Result<CorrelationCurve> {
    let source = SpeckleSource::new(*cfg)?;
    let x = cfg.positions();
    let half = (cfg.n_samples / 2) as f64;
    let idx = (ref_x / cfg.dx() + half).round();
    if !ref_x.is_finite() || idx < 0.0 || idx > (cfg.n_samples - 1) as f64 {
        return Err(WvError::InvalidParameter(format!(
            "reference position {ref_x} mm is off the grid"
        )));
    }
    let r = idx as usize;
    let n = cfg.n_samples;
    let m = parallel::chunked_fold(
        cfg.n_realizations,
        REALIZATION_CHUNK,
        || Moments::zeros(n),
        |acc, k| {
            let intensity: Vec<f64> = source
                .field(k as u64)
                .iter()
                .map(|e| e.norm_sqr())
                .collect();
            let i_ref = intensity[r];
            acc.n += 1;
            for (i, &v) in intensity.iter().enumerate() {
                acc.sum[i] += v;
                acc.sum_sq[i] += v * v;
                acc.sum_cross[i] += v * i_ref;
            }
        },
        Moments::merge,
    );
    let count = m.n as f64;
    let mean_ref = m.sum[r] / count;
    let var_ref = m.sum_sq[r] / count - mean_ref * mean_ref;
    let c = (0..n)
        .map(|i| {
            let mean = m.sum[i] / count;
            let var = m.sum_sq[i] / count - mean * mean;
            let cov = m.sum_cross[i] / count - mean * mean_ref;
            cov / (var * var_ref).sqrt()
        })
        .collect();
    Ok(CorrelationCurve {
        x,
        c,
        ref_x: x_at(r, cfg),
    })
}

fn x_at(i: usize, cfg: &SpeckleConfig) -> f64 {
    (i as f64 - (cfg.n_samples / 2) as f64) * cfg.dx()
}

/// Least-squares fit of `exp(-2(x-x0)^2 / w^2)` (unit amplitude) to the
/// curve. Returns the e^-2 half-width `w` and the RMS residual.
pub fn fit_gaussian_width(curve: &CorrelationCurve) -> Result<(f64, f64)> {
    if curve.x.len() != curve.c.len() {
        return Err(WvError::InvalidParameter("x and c lengths differ".into()));
    }
    let support = curve.c.iter().filter(|&&c| c > 0.05).count();
    if support < 9 {
        return Err(WvError::FitDiverged(format!(
            "only {support} points above 0.05, need 9"
        )));
    }
    let (imax, _) = curve
        .c
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &c)| {
            if c > best.1 {
                (i, c)
            } else {
                best
            }
        });
    let dx = if curve.x.len() > 1 {
        (curve.x[1] - curve.x[0]).abs()
    } else {
        1.0
    };
    // ∫ exp(-2u²/w²) du = w sqrt(π/2)
    let area: f64 = curve.c.iter().filter(|&&c| c > 0.05).sum::<f64>() * dx;
    let mut params = [curve.x[imax], area / (PI / 2.0).sqrt()];

    let residuals = |p: &[f64; 2]| -> Vec<f64> {
        curve
            .x
            .iter()
            .zip(&curve.c)
            .map(|(x, c)| c - (-2.0 * (x - p[0]).powi(2) / (p[1] * p[1])).exp())
            .collect()
    };
    let cost = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>();

    let mut lambda = 1e-3;
    let mut r = residuals(&params);
    let mut current = cost(&r);
    for _ in 0..200 {
        let (x0, w) = (params[0], params[1]);
        let (mut jtj, mut jtr) = ([[0.0; 2]; 2], [0.0; 2]);
        for ((x, _), ri) in curve.x.iter().zip(&curve.c).zip(&r) {
            let u = x - x0;
            let model = (-2.0 * u * u / (w * w)).exp();
            let j = [model * 4.0 * u / (w * w), model * 4.0 * u * u / (w * w * w)];
            for a in 0..2 {
                jtr[a] += j[a] * ri;
                for b in 0..2 {
                    jtj[a][b] += j[a] * j[b];
                }
            }
        }
        let mut improved = false;
        while lambda < 1e12 {
            let m = [
                [jtj[0][0] * (1.0 + lambda), jtj[0][1]],
                [jtj[1][0], jtj[1][1] * (1.0 + lambda)],
            ];
            let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
            if det.abs() < f64::MIN_POSITIVE {
                lambda *= 10.0;
                continue;
            }
            let step = [
                (m[1][1] * jtr[0] - m[0][1] * jtr[1]) / det,
                (m[0][0] * jtr[1] - m[1][0] * jtr[0]) / det,
            ];
            let trial = [params[0] + step[0], params[1] + step[1]];
            if trial[1] > 0.0 {
                let rt = residuals(&trial);
                let ct = cost(&rt);
                if ct <= current {
                    let converged =
                        step[1].abs() <= 1e-14 * trial[1] && step[0].abs() <= 1e-14 * trial[1];
                    params = trial;
                    r = rt;
                    current = ct;
                    lambda = (lambda * 0.1).max(1e-12);
                    improved = !converged;
                    break;
                }
            }
            lambda *= 10.0;
        }
        if !improved {
            break;
        }
    }
    let rmse = (current / curve.c.len() as f64).sqrt();
    if !(params[1].is_finite() && params[1] > 0.0 && rmse.is_finite()) {
        return Err(WvError::FitDiverged(format!(
            "non-physical width {}",
            params[1]
        )));
    }
    if rmse > 0.2 {
        return Err(WvError::FitDiverged(format!(
            "residual rms {rmse:.3} exceeds 0.2"
        )));
    }
    Ok((params[1], rmse))
}

/// Focusing optics of the weak-measurement arm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalConfig {
    pub lambda_nm: f64,
    pub f_mm: f64,
    /// e^-2 beam radius before the focusing lens (mm).
    pub w0_prime_mm: f64,
}

impl OpticalConfig {
    pub fn new(lambda_nm: f64, f_mm: f64, w0_prime_mm: f64) -> Result<Self> {
        for (name, v) in [("lambda", lambda_nm), ("f", f_mm), ("w0'", w0_prime_mm)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(WvError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(Self {
            lambda_nm,
            f_mm,
            w0_prime_mm,
        })
    }

    /// He-Ne at 632.8 nm, f = 100 mm, 0.697 mm iris radius.
    pub fn experiment() -> Self {
        Self {
            lambda_nm: 632.8,
            f_mm: 100.0,
            w0_prime_mm: 0.697,
        }
    }

    /// Focused waist `λ f / (π w0')` in µm.
    pub fn w0_um(&self) -> f64 {
        // nm * mm / mm = nm; 1 nm = 1e-3 µm.
        self.lambda_nm * self.f_mm / (PI * self.w0_prime_mm) * 1e-3
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceEstimate {
    /// e^-2 width of the measured correlation (mm).
    pub w_c_prime: f64,
    /// Coherence width at the focus (µm).
    pub w_c: f64,
    pub gamma: f64,
    pub fit_rmse: f64,
}

/// Scale a collimated-beam coherence width to the focus:
/// `w_c = w_c' w0 / w0'` and `γ = w_c / w0`.
pub fn coherence_to_gamma(w_c_prime: f64, optics: &OpticalConfig) -> Result<CoherenceEstimate> {
    if !(w_c_prime.is_finite() && w_c_prime > 0.0) {
        return Err(WvError::InvalidParameter(format!(
            "w_c' must be positive, got {w_c_prime}"
        )));
    }
    let w0 = optics.w0_um();
    let w_c = w_c_prime * w0 / optics.w0_prime_mm;
    Ok(CoherenceEstimate {
        w_c_prime,
        w_c,
        gamma: w_c / w0,
        fit_rmse: 0.0,
    })
}

/// Fit a correlation curve and convert the width to `γ`.
pub fn estimate_coherence(
    curve: &CorrelationCurve,
    optics: &OpticalConfig,
) -> Result<CoherenceEstimate> {
    let (w, rmse) = fit_gaussian_width(curve)?;
    Ok(CoherenceEstimate {
        fit_rmse: rmse,
        ..coherence_to_gamma(w, optics)?
    })
}

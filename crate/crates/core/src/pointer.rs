//! Closed-form postselected pointer distributions.
//!
//! A Gaussian pointer of spread `w0` is displaced by the eigenvalue `a_k` of
//! every eigenstate it is coupled to, and the system is then projected on
//! `psi_f`. With `c_k = alpha_k beta_k^*` the pointer density is
//!
//! * pure pointer: `P(q) ∝ |Σ_k c_k exp(-(q - a_k)^2 / w0^2)|^2`
//! * mixed pointer with coherence width `wc` (`γ = wc / w0`):
//!   `P(q) ∝ Σ_kj c_k c_j^* exp[w0^-2 (-(q-a_k)^2/γ^2 - (q-a_j)^2/γ^2
//!   + (2q-a_k-a_j)^2/(γ^4+2γ^2))]`
//!
//! Exponents are combined in log space, with the per-point maximum factored
//! out, so that large displacements do not underflow before normalization.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Result, WvError};
use crate::parallel;
use crate::profile::{Profile, QGrid};
use crate::qsys::{expectation, Observable, SystemState};

/// Below this coherence ratio the closed form loses all precision and the
/// incoherent form is used instead.
pub const MIN_GAMMA: f64 = 1e-6;

fn check_width(name: &str, w: f64) -> Result<()> {
    if !(w.is_finite() && w > 0.0) {
        return Err(WvError::InvalidParameter(format!(
            "{name} must be positive and finite, got {w}"
        )));
    }
    Ok(())
}

/// Gaussian pointer in a pure state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PurePointer {
    w0: f64,
}

impl PurePointer {
    pub fn new(w0: f64) -> Result<Self> {
        check_width("w0", w0)?;
        Ok(Self { w0 })
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }
}

/// Gaussian pointer in a mixed state: a Gaussian ensemble (spread `w0`) of
/// centres, each carrying a coherent Gaussian of width `wc`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixedPointer {
    w0: f64,
    wc: f64,
}

impl MixedPointer {
    pub fn new(w0: f64, wc: f64) -> Result<Self> {
        check_width("w0", w0)?;
        check_width("wc", wc)?;
        Ok(Self { w0, wc })
    }

    pub fn from_gamma(w0: f64, gamma: f64) -> Result<Self> {
        check_width("gamma", gamma)?;
        Self::new(w0, gamma * w0)
    }

    pub fn w0(&self) -> f64 {
        self.w0
    }

    pub fn wc(&self) -> f64 {
        self.wc
    }

    /// Degree of partial coherence `wc / w0`.
    pub fn gamma(&self) -> f64 {
        self.wc / self.w0
    }

    /// e^-2 half-width of the pointer's intensity marginal,
    /// `sqrt(wc^2 + 2 w0^2)`.
    pub fn marginal_width(&self) -> f64 {
        (self.wc * self.wc + 2.0 * self.w0 * self.w0).sqrt()
    }

    /// Pure pointer this state approaches for `γ >> 1`. Its width is the
    /// marginal width, so the uncoupled densities coincide exactly.
    pub fn pure_limit(&self) -> PurePointer {
        PurePointer {
            w0: self.marginal_width(),
        }
    }
}

/// `c_k = alpha_k beta_k^*` for every eigenstate.
fn transition_weights(psi_in: &SystemState, psi_f: &SystemState) -> Vec<Complex64> {
    psi_in
        .amplitudes()
        .iter()
        .zip(psi_f.amplitudes())
        .map(|(a, b)| a * b.conj())
        .collect()
}

/// Exact postselected density for a pure Gaussian pointer.
pub fn pure_profile(
    psi_in: &SystemState,
    psi_f: &SystemState,
    obs: &Observable,
    pointer: &PurePointer,
    grid: &QGrid,
) -> Result<Profile> {
    obs.check_states(&[psi_in, psi_f])?;
    let weights = transition_weights(psi_in, psi_f);
    let evs = obs.eigenvalues();
    let inv_w2 = 1.0 / (pointer.w0 * pointer.w0);
    let terms = parallel::map_indexed(grid.len(), |i| {
        let q = grid.point(i);
        let top = evs
            .iter()
            .map(|a| -(q - a).powi(2) * inv_w2)
            .fold(f64::NEG_INFINITY, f64::max);
        let amp: Complex64 = weights
            .iter()
            .zip(evs)
            .map(|(c, a)| c * (-(q - a).powi(2) * inv_w2 - top).exp())
            .sum();
        (amp.norm_sqr(), 2.0 * top)
    });
    let (scaled, log_scale): (Vec<f64>, Vec<f64>) = terms.into_iter().unzip();
    let log_prefactor = 0.5 * (2.0 * inv_w2 / PI).ln();
    Profile::from_log_scaled(*grid, &scaled, &log_scale, log_prefactor)
}

/// Single Gaussian centred on a real weak value, the pointer state of the
/// linearized interaction. `raw_mass` carries the pointer prefactor but not
/// the postselection probability, which this form does not know about.
pub fn weak_approx_profile(
    weak_value: f64,
    pointer: &PurePointer,
    grid: &QGrid,
) -> Result<Profile> {
    if !weak_value.is_finite() {
        return Err(WvError::InvalidParameter(format!(
            "non-finite weak value {weak_value}"
        )));
    }
    let inv_w2 = 1.0 / (pointer.w0 * pointer.w0);
    let log_scale: Vec<f64> = grid
        .points()
        .map(|q| -2.0 * (q - weak_value).powi(2) * inv_w2)
        .collect();
    let ones = vec![1.0; grid.len()];
    Profile::from_log_scaled(*grid, &ones, &log_scale, 0.5 * (2.0 * inv_w2 / PI).ln())
}

fn mixed_log_prefactor(pointer: &MixedPointer) -> f64 {
    let (w0, wc) = (pointer.w0, pointer.wc);
    0.5 * (2.0 / (PI * (2.0 * w0 * w0 + wc * wc))).ln()
}

/// Unnormalized mixed-pointer sum at `q` relative to `exp(log_scale)`,
/// returned as `(sum, log_scale)`. The sum is real for any valid input; the
/// imaginary part is kept so callers can check that.
pub fn mixed_density_terms(
    weights: &[Complex64],
    eigenvalues: &[f64],
    pointer: &MixedPointer,
    q: f64,
) -> (Complex64, f64) {
    let g2 = pointer.gamma().powi(2);
    let inv_w2 = 1.0 / (pointer.w0 * pointer.w0);
    let exponent = |ak: f64, aj: f64| {
        inv_w2
            * (-(q - ak).powi(2) / g2 - (q - aj).powi(2) / g2
                + (2.0 * q - ak - aj).powi(2) / (g2 * g2 + 2.0 * g2))
    };
    let mut top = f64::NEG_INFINITY;
    for &ak in eigenvalues {
        for &aj in eigenvalues {
            top = top.max(exponent(ak, aj));
        }
    }
    let mut sum = Complex64::new(0.0, 0.0);
    for (ck, &ak) in weights.iter().zip(eigenvalues) {
        for (cj, &aj) in weights.iter().zip(eigenvalues) {
            sum += ck * cj.conj() * (exponent(ak, aj) - top).exp();
        }
    }
    (sum, top)
}

/// Same density written with the centre-of-mass and separation coordinates,
/// `exp(-(2q-a_k-a_j)^2 / (2(wc^2+2w0^2))) exp(-(a_k-a_j)^2 / (2 wc^2))`.
/// Well conditioned as `wc -> 0`, where only equal-eigenvalue pairs survive.
fn incoherent_density_terms(
    weights: &[Complex64],
    eigenvalues: &[f64],
    pointer: &MixedPointer,
    q: f64,
) -> (Complex64, f64) {
    let m2 = pointer.marginal_width().powi(2);
    let wc2 = pointer.wc * pointer.wc;
    let exponent = |ak: f64, aj: f64| {
        -(2.0 * q - ak - aj).powi(2) / (2.0 * m2) - (ak - aj).powi(2) / (2.0 * wc2)
    };
    let top = eigenvalues
        .iter()
        .map(|&a| exponent(a, a))
        .fold(f64::NEG_INFINITY, f64::max);
    let mut sum = Complex64::new(0.0, 0.0);
    for (ck, &ak) in weights.iter().zip(eigenvalues) {
        for (cj, &aj) in weights.iter().zip(eigenvalues) {
            sum += ck * cj.conj() * (exponent(ak, aj) - top).exp();
        }
    }
    (sum, top)
}

/// Postselected density for a partially coherent pointer.
///
/// For `γ < MIN_GAMMA` the incoherent form is returned: Gaussians at the
/// eigenvalues, weighted by `|Σ_{k: a_k = a} c_k|^2`, with no cross terms
/// between distinct eigenvalues.
pub fn mixed_profile(
    psi_in: &SystemState,
    psi_f: &SystemState,
    obs: &Observable,
    pointer: &MixedPointer,
    grid: &QGrid,
) -> Result<Profile> {
    obs.check_states(&[psi_in, psi_f])?;
    let weights = transition_weights(psi_in, psi_f);
    let evs = obs.eigenvalues();
    let terms_at = if pointer.gamma() < MIN_GAMMA {
        incoherent_density_terms
    } else {
        mixed_density_terms
    };
    let terms = parallel::map_indexed(grid.len(), |i| {
        let (sum, top) = terms_at(&weights, evs, pointer, grid.point(i));
        (sum.re, top)
    });
    let (scaled, log_scale): (Vec<f64>, Vec<f64>) = terms.into_iter().unzip();
    Profile::from_log_scaled(*grid, &scaled, &log_scale, mixed_log_prefactor(pointer))
}

/// Mixed-pointer density for the polarization walk-off experiment, written as
/// the three-term expression in `β = -π/4 + epsilon`: a `cos²β` term from
/// `|H>`, a `sin 2β` interference term and a `sin²β` term from `|V>`.
///
/// The `1/2` from `|alpha_k|^2` and the pointer prefactor are kept, so
/// `raw_mass` matches [`mixed_profile`].
pub fn polarization_mixed_profile(
    a: f64,
    epsilon: f64,
    pointer: &MixedPointer,
    grid: &QGrid,
) -> Result<Profile> {
    if !a.is_finite() || !epsilon.is_finite() {
        return Err(WvError::InvalidParameter(format!(
            "non-finite a = {a} or epsilon = {epsilon}"
        )));
    }
    if pointer.gamma() < MIN_GAMMA {
        return Err(WvError::DegeneratePointer {
            gamma: pointer.gamma(),
        });
    }
    let beta = -std::f64::consts::FRAC_PI_4 + epsilon;
    let coeffs = [beta.cos().powi(2), (2.0 * beta).sin(), beta.sin().powi(2)];
    let g2 = pointer.gamma().powi(2);
    let g4 = g2 * g2 + 2.0 * g2;
    let inv_w2 = 1.0 / (pointer.w0 * pointer.w0);
    let terms = parallel::map_indexed(grid.len(), |i| {
        let q = grid.point(i);
        let exps = [
            inv_w2 * (-2.0 * (a + q).powi(2) / g2 + 4.0 * (a + q).powi(2) / g4),
            inv_w2 * (-(a * a + 2.0 * a * q + 2.0 * q * q) / g2 + (a + 2.0 * q).powi(2) / g4),
            inv_w2 * (-2.0 * q * q / g2 + 4.0 * q * q / g4),
        ];
        let top = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = coeffs
            .iter()
            .zip(&exps)
            .map(|(c, e)| c * (e - top).exp())
            .sum();
        (sum, top)
    });
    let (scaled, log_scale): (Vec<f64>, Vec<f64>) = terms.into_iter().unzip();
    let log_prefactor = mixed_log_prefactor(pointer) + 0.5f64.ln();
    Profile::from_log_scaled(*grid, &scaled, &log_scale, log_prefactor)
}

/// Ratio of the postselected peak position to the unconditioned expectation
/// value `<psi_in|A|psi_in>`.
pub fn amplification(profile: &Profile, psi_in: &SystemState, obs: &Observable) -> Result<f64> {
    let mean = expectation(psi_in, obs)?;
    if mean.abs() < 1e-15 {
        return Err(WvError::ZeroExpectation);
    }
    Ok(profile.peak_location()? / mean)
}

//! System states, observables and weak values.
//!
//! States are amplitude vectors in the eigenbasis of the measured observable,
//! and eigenvalues are pointer displacements in micrometres.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::error::{Result, WvError};

/// Below this overlap magnitude the weak value is treated as undefined.
pub const ORTHOGONALITY_TOL: f64 = 1e-12;

const NORM_TOL: f64 = 1e-12;

/// Normalized pure state of the measured system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    amplitudes: Vec<Complex64>,
}

impl SystemState {
    /// Takes amplitudes that are already normalized.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dimension(amplitudes.len())?;
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if !norm_sqr.is_finite() || (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(WvError::NotNormalized { norm_sqr });
        }
        Ok(Self { amplitudes })
    }

    /// Normalizes the given amplitudes.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        check_dimension(amplitudes.len())?;
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(WvError::NotNormalized {
                norm_sqr: norm * norm,
            });
        }
        Ok(Self {
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn from_real(amplitudes: &[f64]) -> Result<Self> {
        Self::new(amplitudes.iter().map(|&a| Complex64::new(a, 0.0)).collect())
    }

    /// Basis state `|k>` of a `dim`-level system.
    pub fn basis(dim: usize, k: usize) -> Result<Self> {
        check_dimension(dim)?;
        if k >= dim {
            return Err(WvError::InvalidParameter(format!(
                "basis index {k} >= dimension {dim}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[k] = Complex64::new(1.0, 0.0);
        Ok(Self { amplitudes })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Multiply every amplitude by the unit phase `e^{i phi}`.
    pub fn with_global_phase(&self, phi: f64) -> Self {
        let phase = Complex64::from_polar(1.0, phi);
        Self {
            amplitudes: self.amplitudes.iter().map(|a| a * phase).collect(),
        }
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &SystemState) -> Result<Complex64> {
        ensure_same_dim(self.dim(), other.dim())?;
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(b, a)| b.conj() * a)
            .sum())
    }
}

fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        return Err(WvError::InvalidParameter(format!(
            "dimension must be >= 2, got {d}"
        )));
    }
    Ok(())
}

fn ensure_same_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(WvError::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Diagonal observable, stored as its eigenvalues (µm of pointer shift).
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    eigenvalues: Vec<f64>,
}

impl Observable {
    pub fn new(eigenvalues: Vec<f64>) -> Result<Self> {
        check_dimension(eigenvalues.len())?;
        if let Some(bad) = eigenvalues.iter().find(|x| !x.is_finite()) {
            return Err(WvError::InvalidParameter(format!(
                "non-finite eigenvalue {bad}"
            )));
        }
        Ok(Self { eigenvalues })
    }

    /// Birefringent walk-off: `|H>` is displaced by `-a`, `|V>` is not.
    pub fn polarization_walkoff(a: f64) -> Result<Self> {
        Self::new(vec![-a, 0.0])
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Same observable with every eigenvalue shifted by `c`.
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            eigenvalues: self.eigenvalues.iter().map(|a| a + c).collect(),
        }
    }

    pub(crate) fn check_states(&self, states: &[&SystemState]) -> Result<()> {
        states
            .iter()
            .try_for_each(|s| ensure_same_dim(self.dim(), s.dim()))
    }

    /// `<psi_f| A^n |psi_in>`.
    fn matrix_element(&self, psi_f: &SystemState, psi_in: &SystemState, n: i32) -> Complex64 {
        psi_f
            .amplitudes()
            .iter()
            .zip(psi_in.amplitudes())
            .zip(&self.eigenvalues)
            .map(|((b, a), ev)| b.conj() * a * ev.powi(n))
            .sum()
    }
}

/// Weak value together with the pre/post overlap it was divided by.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeakValueResult {
    /// `A_w` in µm.
    pub value: Complex64,
    /// `<psi_f|psi_in>`.
    pub overlap: Complex64,
}

/// `A_w = <psi_f|A|psi_in> / <psi_f|psi_in>`.
pub fn weak_value(
    psi_in: &SystemState,
    psi_f: &SystemState,
    obs: &Observable,
) -> Result<WeakValueResult> {
    obs.check_states(&[psi_in, psi_f])?;
    let overlap = obs.matrix_element(psi_f, psi_in, 0);
    if overlap.norm() < ORTHOGONALITY_TOL {
        return Err(WvError::OrthogonalPostselection {
            overlap: overlap.norm(),
        });
    }
    let value = obs.matrix_element(psi_f, psi_in, 1) / overlap;
    Ok(WeakValueResult { value, overlap })
}

/// `<psi|A|psi>` in µm.
pub fn expectation(psi: &SystemState, obs: &Observable) -> Result<f64> {
    obs.check_states(&[psi])?;
    Ok(psi
        .amplitudes()
        .iter()
        .zip(obs.eigenvalues())
        .map(|(a, ev)| a.norm_sqr() * ev)
        .sum())
}

/// Dimensionless measures of how well the linear (weak) expansion of the
/// displacement operator holds.
///
/// The characteristic pointer momentum is taken as `p* = ħ / w0`, the momentum
/// spread of a Gaussian pointer up to an O(1) factor, so that `p*/ħ = 1/w0`.
/// Callers who prefer another convention can rescale `w0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeDiagnostic {
    /// `|A_w| / w0`.
    pub r_linear: f64,
    /// `max_n (|<A^n>_w| / w0^n) / (|A_w| / w0)` for `n = 2..=n_max`.
    pub r_higher: f64,
    /// Both ratios strictly below one.
    pub in_regime: bool,
}

pub const DEFAULT_REGIME_ORDER: u32 = 4;

pub fn weak_regime_diagnostic(
    psi_in: &SystemState,
    psi_f: &SystemState,
    obs: &Observable,
    w0: f64,
    n_max: u32,
) -> Result<RegimeDiagnostic> {
    if !(w0.is_finite() && w0 > 0.0) {
        return Err(WvError::InvalidParameter(format!(
            "w0 must be positive, got {w0}"
        )));
    }
    if n_max < 2 {
        return Err(WvError::InvalidParameter(format!(
            "n_max must be >= 2, got {n_max}"
        )));
    }
    let wv = weak_value(psi_in, psi_f, obs)?;
    let linear = wv.value.norm() / w0;
    let mut r_higher: f64 = 0.0;
    for n in 2..=n_max as i32 {
        let term = (obs.matrix_element(psi_f, psi_in, n) / wv.overlap).norm() / w0.powi(n);
        let ratio = if term == 0.0 {
            0.0
        } else if linear == 0.0 {
            f64::INFINITY
        } else {
            term / linear
        };
        r_higher = r_higher.max(ratio);
    }
    Ok(RegimeDiagnostic {
        r_linear: linear,
        r_higher,
        in_regime: linear < 1.0 && r_higher < 1.0,
    })
}

/// Linear-polarization pre- and postselection: `alpha = π/4`,
/// `beta = -π/4 + epsilon`, so that `<psi_f|psi_in> = sin(epsilon)`.
///
/// `|epsilon|` may not exceed π/4; at `epsilon = π/4` the postselection is
/// onto `|H>`.
pub fn polarization_states(epsilon: f64) -> Result<(SystemState, SystemState)> {
    if !epsilon.is_finite() || epsilon.abs() > FRAC_PI_4 {
        return Err(WvError::InvalidParameter(format!(
            "|epsilon| must be <= pi/4, got {epsilon}"
        )));
    }
    let beta = -FRAC_PI_4 + epsilon;
    let psi_in = SystemState::normalized(vec![
        Complex64::new(FRAC_PI_4.cos(), 0.0),
        Complex64::new(FRAC_PI_4.sin(), 0.0),
    ])?;
    let psi_f = SystemState::normalized(vec![
        Complex64::new(beta.cos(), 0.0),
        Complex64::new(beta.sin(), 0.0),
    ])?;
    Ok((psi_in, psi_f))
}

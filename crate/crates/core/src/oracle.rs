//! Brute-force evaluation of the mixed-pointer density, used to validate the
//! closed forms in [`crate::pointer`].
//!
//! Two independent routes are provided:
//!
//! * [`oracle_mixed_profile`] integrates over the ensemble centre `q0` by
//!   trapezoid quadrature for every grid point.
//! * [`oracle_density_evolution`] discretizes the pointer density matrix on a
//!   grid, translates each system component by its eigenvalue (linear
//!   interpolation), contracts with the pre/postselection amplitudes and reads
//!   off the diagonal.

use std::f64::consts::PI;

use ndarray::{Array2, Axis};
use num_complex::Complex64;

use crate::error::{Result, WvError};
use crate::parallel;
use crate::pointer::{MixedPointer, MIN_GAMMA};
use crate::profile::{trapezoid, Profile, QGrid};
use crate::qsys::{Observable, SystemState};

/// Relative change tolerated when the quadrature step is halved.
pub const QUADRATURE_TOL: f64 = 1e-8;

pub const DEFAULT_QUAD_NODES: usize = 401;
pub const DEFAULT_ORACLE_POINTS: usize = 1201;

/// Uniform trapezoid rule over the ensemble centre `q0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpec {
    q0_min: f64,
    q0_max: f64,
    n_nodes: usize,
}

impl QuadratureSpec {
    pub fn new(q0_min: f64, q0_max: f64, n_nodes: usize) -> Result<Self> {
        if !(q0_min.is_finite() && q0_max.is_finite() && q0_min < q0_max) {
            return Err(WvError::InvalidParameter(format!(
                "quadrature range [{q0_min}, {q0_max}] is empty"
            )));
        }
        if n_nodes < 51 {
            return Err(WvError::InvalidParameter(format!(
                "quadrature needs at least 51 nodes, got {n_nodes}"
            )));
        }
        Ok(Self {
            q0_min,
            q0_max,
            n_nodes,
        })
    }

    /// Range and node count adequate for densities evaluated at positions up
    /// to `reach` (after displacement) from the origin.
    pub fn for_reach(pointer: &MixedPointer, reach: f64) -> Result<Self> {
        let half = required_half_range(pointer, reach);
        let step = envelope_width(pointer) / 4.0;
        let nodes = ((2.0 * half / step).ceil() as usize + 1).max(DEFAULT_QUAD_NODES) | 1;
        Self::new(-half, half, nodes)
    }

    /// Default for a profile on `grid` with displacements from `obs`.
    pub fn for_problem(pointer: &MixedPointer, grid: &QGrid, obs: &Observable) -> Result<Self> {
        Self::for_reach(pointer, reach(grid, obs))
    }

    /// Same range with the step halved.
    pub fn refined(&self) -> Self {
        Self {
            n_nodes: 2 * self.n_nodes - 1,
            ..*self
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn range(&self) -> (f64, f64) {
        (self.q0_min, self.q0_max)
    }

    fn step(&self) -> f64 {
        (self.q0_max - self.q0_min) / (self.n_nodes - 1) as f64
    }

    /// Nodes and trapezoid weights.
    fn nodes(&self) -> (Vec<f64>, Vec<f64>) {
        let h = self.step();
        let x = (0..self.n_nodes)
            .map(|i| self.q0_min + i as f64 * h)
            .collect();
        let mut w = vec![h; self.n_nodes];
        w[0] *= 0.5;
        w[self.n_nodes - 1] *= 0.5;
        (x, w)
    }

    fn check_covers(&self, pointer: &MixedPointer, reach: f64) -> Result<()> {
        let half = required_half_range(pointer, reach);
        if self.q0_min > -half || self.q0_max < half {
            return Err(WvError::InvalidParameter(format!(
                "quadrature range [{}, {}] does not cover +/-{half}",
                self.q0_min, self.q0_max
            )));
        }
        Ok(())
    }
}

/// 1/e half-width of the `q0` integrand,
/// `exp(-q0^2/w0^2 - (x-q0)^2/wc^2 - (y-q0)^2/wc^2)`, as a function of `q0`.
fn envelope_width(pointer: &MixedPointer) -> f64 {
    let (w0, wc) = (pointer.w0(), pointer.wc());
    (1.0 / (1.0 / (w0 * w0) + 2.0 / (wc * wc))).sqrt()
}

/// The integrand is centred within `[-reach, reach]` and decays over
/// [`envelope_width`]; six widths past the reach leave `e^-36`.
fn required_half_range(pointer: &MixedPointer, reach: f64) -> f64 {
    reach + 6.0 * envelope_width(pointer)
}

fn reach(grid: &QGrid, obs: &Observable) -> f64 {
    let q = grid.q_min().abs().max(grid.q_max().abs());
    let a = obs.eigenvalues().iter().fold(0.0f64, |m, a| m.max(a.abs()));
    q + a
}

fn check_pointer(pointer: &MixedPointer) -> Result<()> {
    if pointer.gamma() < MIN_GAMMA {
        return Err(WvError::DegeneratePointer {
            gamma: pointer.gamma(),
        });
    }
    Ok(())
}

/// `alpha_k beta_k^*`.
fn transition_weights(psi_in: &SystemState, psi_f: &SystemState) -> Vec<Complex64> {
    psi_in
        .amplitudes()
        .iter()
        .zip(psi_f.amplitudes())
        .map(|(a, b)| a * b.conj())
        .collect()
}

/// Unnormalized density at every grid point by direct `q0` quadrature.
fn quadrature_density(
    weights: &[Complex64],
    evs: &[f64],
    pointer: &MixedPointer,
    grid: &QGrid,
    quad: &QuadratureSpec,
) -> Vec<Complex64> {
    let (nodes, qw) = quad.nodes();
    let (w0, wc) = (pointer.w0(), pointer.wc());
    let prefactor = 2f64.sqrt() / (PI * w0 * wc);
    let envelope: Vec<f64> = nodes
        .iter()
        .zip(&qw)
        .map(|(x, w)| w * (-x * x / (w0 * w0)).exp())
        .collect();
    let d = evs.len();
    parallel::map_indexed(grid.len(), |i| {
        let q = grid.point(i);
        // integrals[k][j] = ∫ dq0 g(q0) h_k(q0) h_j(q0)
        let mut integrals = vec![0.0; d * d];
        let mut h = vec![0.0; d];
        for (x, g) in nodes.iter().zip(&envelope) {
            for (hk, a) in h.iter_mut().zip(evs) {
                *hk = (-(q - a - x).powi(2) / (wc * wc)).exp();
            }
            for k in 0..d {
                for j in k..d {
                    integrals[k * d + j] += g * h[k] * h[j];
                }
            }
        }
        let mut sum = Complex64::new(0.0, 0.0);
        for k in 0..d {
            for j in 0..d {
                let integral = integrals[k.min(j) * d + k.max(j)];
                sum += weights[k] * weights[j].conj() * integral;
            }
        }
        sum * prefactor
    })
}

fn relative_linf(a: &[f64], b: &[f64]) -> f64 {
    let scale = a.iter().copied().fold(0.0, f64::max);
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Mixed-pointer density by quadrature over the ensemble centre.
///
/// The integral is evaluated with `quad` and with the step halved; if the two
/// normalized densities differ by more than [`QUADRATURE_TOL`] relative to
/// the peak, the result is rejected. Otherwise the refined one is returned.
pub fn oracle_mixed_profile(
    psi_in: &SystemState,
    psi_f: &SystemState,
    obs: &Observable,
    pointer: &MixedPointer,
    grid: &QGrid,
    quad: &QuadratureSpec,
) -> Result<Profile> {
    obs.check_states(&[psi_in, psi_f])?;
    check_pointer(pointer)?;
    quad.check_covers(pointer, reach(grid, obs))?;
    let weights = transition_weights(psi_in, psi_f);
    let evs = obs.eigenvalues();
    let coarse = quadrature_density(&weights, evs, pointer, grid, quad);
    let fine = quadrature_density(&weights, evs, pointer, grid, &quad.refined());
    let coarse: Vec<f64> = coarse.iter().map(|z| z.re).collect();
    let fine: Vec<f64> = fine.iter().map(|z| z.re).collect();
    let coarse = Profile::from_unnormalized(*grid, &coarse, 1.0)?;
    let fine = Profile::from_unnormalized(*grid, &fine, 1.0)?;
    let change = relative_linf(fine.density(), coarse.density());
    if change > QUADRATURE_TOL {
        return Err(WvError::QuadratureUnderResolved { change });
    }
    Ok(fine)
}

/// Default oracle grid: about [`DEFAULT_ORACLE_POINTS`] points over
/// `[-6 w0, 6 w0]`. When all eigenvalue differences are integer multiples of
/// the smallest one, the spacing is snapped to a divisor of it so every
/// translation lands exactly on grid nodes.
pub fn oracle_grid(w0: f64, obs: &Observable) -> Result<QGrid> {
    let half = 6.0 * w0;
    let nominal = 2.0 * half / (DEFAULT_ORACLE_POINTS - 1) as f64;
    let evs = obs.eigenvalues();
    let base = evs[0];
    let mut diffs: Vec<f64> = evs
        .iter()
        .map(|a| (a - base).abs())
        .filter(|d| *d > 0.0)
        .collect();
    diffs.sort_by(f64::total_cmp);
    let step = match diffs.first() {
        Some(&smallest) if diffs.iter().all(|d| is_integer(d / smallest)) => {
            smallest / (smallest / nominal).round().max(1.0)
        }
        _ => nominal,
    };
    let n_half = (half / step).round() as usize;
    QGrid::symmetric(n_half as f64 * step, 2 * n_half + 1)
}

fn is_integer(x: f64) -> bool {
    (x - x.round()).abs() < 1e-9 * x.abs().max(1.0)
}

/// Complex density matrix sampled on a grid; entries are cell masses
/// `rho(q_i, q_j) Δq`.
#[derive(Debug, Clone)]
pub struct DensityMatrixGrid {
    grid: QGrid,
    rho: Array2<Complex64>,
}

impl DensityMatrixGrid {
    /// Discretize the mixed pointer state
    /// `rho(q', q'') = √2/(π w0 wc) ∫ dq0 e^{-q0²/w0²} e^{-(q'-q0)²/wc²} e^{-(q''-q0)²/wc²}`
    /// by quadrature over `q0`.
    pub fn pointer_state(
        pointer: &MixedPointer,
        grid: QGrid,
        quad: &QuadratureSpec,
    ) -> Result<Self> {
        check_pointer(pointer)?;
        let reach = grid.q_min().abs().max(grid.q_max().abs());
        quad.check_covers(pointer, reach)?;
        let (w0, wc) = (pointer.w0(), pointer.wc());
        let prefactor = 2f64.sqrt() / (PI * w0 * wc) * grid.step();
        let (nodes, qw) = quad.nodes();
        let n = grid.len();
        // rho = B B^T with B[i, m] = sqrt(weight_m) h(q_i - x_m).
        let mut b = Array2::<f64>::zeros((n, nodes.len()));
        let sqrt_w: Vec<f64> = nodes
            .iter()
            .zip(&qw)
            .map(|(x, w)| (prefactor * w * (-x * x / (w0 * w0)).exp()).sqrt())
            .collect();
        let width = nodes.len();
        parallel::for_each_row_mut(
            b.as_slice_mut().expect("standard layout"),
            width,
            |i, row| {
                let q = grid.point(i);
                for ((r, x), sw) in row.iter_mut().zip(&nodes).zip(&sqrt_w) {
                    *r = sw * (-(q - x).powi(2) / (wc * wc)).exp();
                }
            },
        );
        let rho = b.dot(&b.t()).mapv(|v| Complex64::new(v, 0.0));
        Ok(Self { grid, rho })
    }

    pub fn grid(&self) -> &QGrid {
        &self.grid
    }

    pub fn matrix(&self) -> &Array2<Complex64> {
        &self.rho
    }

    pub fn trace(&self) -> Complex64 {
        self.rho.diag().sum()
    }

    /// `max |rho - rho^†| / max |rho|`.
    pub fn hermiticity_defect(&self) -> f64 {
        let scale = self.rho.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let n = self.grid.len();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.rho[[i, j]] - self.rho[[j, i]].conj()).norm());
            }
        }
        worst / scale
    }

    /// Kernel value `rho(x, y)` (density, not cell mass), bilinear in the grid.
    pub fn kernel_at(&self, x: f64, y: f64) -> Result<Complex64> {
        let (i, fx) = self.locate(x)?;
        let (j, fy) = self.locate(y)?;
        let mut v = Complex64::new(0.0, 0.0);
        for (ii, wx) in [(i, 1.0 - fx), (i + 1, fx)] {
            if wx == 0.0 {
                continue;
            }
            for (jj, wy) in [(j, 1.0 - fy), (j + 1, fy)] {
                if wy == 0.0 {
                    continue;
                }
                v += self.rho[[ii, jj]] * (wx * wy);
            }
        }
        Ok(v / self.grid.step())
    }

    /// Index of the cell containing `x` and the fractional position in it.
    /// Positions within 1e-9 cells of a node are snapped onto it.
    fn locate(&self, x: f64) -> Result<(usize, f64)> {
        let n = self.grid.len();
        let t = (x - self.grid.q_min()) / self.grid.step();
        let snapped = if (t - t.round()).abs() < 1e-9 {
            t.round()
        } else {
            t
        };
        if !(0.0..=(n - 1) as f64).contains(&snapped) {
            return Err(WvError::InterpolationOutOfRange { coordinate: x });
        }
        let i = (snapped.floor() as usize).min(n - 2);
        Ok((i, snapped - i as f64))
    }

    /// Evolve with the displacement interaction, postselect and return the
    /// pointer density matrix on `out`:
    /// `rho_f(q', q'') = Σ_kj c_k c_j^* rho(q' - a_k, q'' - a_j)`, `c_k = alpha_k beta_k^*`.
    pub fn postselect(
        &self,
        psi_in: &SystemState,
        psi_f: &SystemState,
        obs: &Observable,
        out: QGrid,
    ) -> Result<DensityMatrixGrid> {
        obs.check_states(&[psi_in, psi_f])?;
        let weights = transition_weights(psi_in, psi_f);
        let evs = obs.eigenvalues();
        let n = out.len();
        let rows = parallel::try_map_indexed(n, |i| {
            let x = out.point(i);
            (0..n)
                .map(|j| {
                    let y = out.point(j);
                    let mut v = Complex64::new(0.0, 0.0);
                    for (ck, ak) in weights.iter().zip(evs) {
                        for (cj, aj) in weights.iter().zip(evs) {
                            v += ck * cj.conj() * self.kernel_at(x - ak, y - aj)?;
                        }
                    }
                    Ok(v * out.step())
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let flat: Vec<Complex64> = rows.into_iter().flatten().collect();
        let rho = Array2::from_shape_vec((n, n), flat).expect("square matrix");
        Ok(DensityMatrixGrid { grid: out, rho })
    }

    /// Diagonal as a profile; the imaginary parts are discarded.
    pub fn diagonal_profile(&self) -> Result<Profile> {
        let h = self.grid.step();
        let diag: Vec<f64> = self.rho.diag().iter().map(|z| z.re / h).collect();
        Profile::from_unnormalized(self.grid, &diag, 1.0)
    }

    /// `∫ rho(q, q) dq` by the trapezoid rule.
    pub fn diagonal_mass(&self) -> f64 {
        let h = self.grid.step();
        let diag: Vec<f64> = self.rho.diag().iter().map(|z| z.re / h).collect();
        trapezoid(&diag, h)
    }

    pub fn row_sums(&self) -> Vec<Complex64> {
        self.rho.sum_axis(Axis(1)).to_vec()
    }
}

/// Source grid with the spacing of `out`, placed so that `q - a_0` lands on a
/// node for every output `q`, and wide enough for every displacement.
fn source_grid(out: &QGrid, obs: &Observable) -> Result<QGrid> {
    let evs = obs.eigenvalues();
    let h = out.step();
    let a_ref = evs[0];
    let a_max = evs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a_min = evs.iter().copied().fold(f64::INFINITY, f64::min);
    let pad_lo = ((a_max - a_ref) / h).ceil() as usize + 1;
    let pad_hi = ((a_ref - a_min) / h).ceil() as usize + 1;
    let start = out.q_min() - a_ref - pad_lo as f64 * h;
    let n = out.len() + pad_lo + pad_hi;
    QGrid::new(start, start + (n - 1) as f64 * h, n)
}

/// Postselected pointer density matrix, built by brute force on `grid`.
pub fn oracle_density_matrix(
    psi_in: &SystemState,
    psi_f: &SystemState,
    obs: &Observable,
    pointer: &MixedPointer,
    grid: &QGrid,
) -> Result<DensityMatrixGrid> {
    obs.check_states(&[psi_in, psi_f])?;
    let source = source_grid(grid, obs)?;
    let reach = source.q_min().abs().max(source.q_max().abs());
    let quad = QuadratureSpec::for_reach(pointer, reach)?;
    let initial = DensityMatrixGrid::pointer_state(pointer, source, &quad)?;
    initial.postselect(psi_in, psi_f, obs, *grid)
}

/// Diagonal of [`oracle_density_matrix`] as a normalized profile.
pub fn oracle_density_evolution(
    psi_in: &SystemState,
    psi_f: &SystemState,
    obs: &Observable,
    pointer: &MixedPointer,
    grid: &QGrid,
) -> Result<Profile> {
    oracle_density_matrix(psi_in, psi_f, obs, pointer, grid)?.diagonal_profile()
}

//! Sampled pointer distributions and the measurements taken on them.

use crate::error::{Result, WvError};

/// Uniform grid of pointer positions (µm).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QGrid {
    q_min: f64,
    q_max: f64,
    n_points: usize,
}

impl QGrid {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        if !(q_min.is_finite() && q_max.is_finite() && q_min < q_max) {
            return Err(WvError::InvalidParameter(format!(
                "grid needs finite q_min < q_max, got [{q_min}, {q_max}]"
            )));
        }
        if n_points < 3 {
            return Err(WvError::InvalidParameter(format!(
                "grid needs at least 3 points, got {n_points}"
            )));
        }
        Ok(Self {
            q_min,
            q_max,
            n_points,
        })
    }

    /// Symmetric grid `[-half_width, half_width]`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    /// Production default: `[-6 w0, 6 w0]` with 4801 points.
    pub fn default_for(w0: f64) -> Result<Self> {
        Self::symmetric(6.0 * w0, 4801)
    }

    pub fn q_min(&self) -> f64 {
        self.q_min
    }

    pub fn q_max(&self) -> f64 {
        self.q_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn step(&self) -> f64 {
        (self.q_max - self.q_min) / (self.n_points - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        if i + 1 == self.n_points {
            self.q_max
        } else {
            self.q_min + i as f64 * self.step()
        }
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(move |i| self.point(i))
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.points().collect()
    }
}

/// Trapezoid rule on a uniform grid with spacing `h`.
pub fn trapezoid(values: &[f64], h: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => h * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Postselected pointer density on a grid.
///
/// `density` is normalized so that its trapezoid integral over the grid is
/// one. `raw_mass` keeps the integral of the unnormalized expression, i.e.
/// the postselection-weighted probability captured by the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: QGrid,
    density: Vec<f64>,
    raw_mass: f64,
}

/// Smallest unnormalized mass accepted before reporting [`WvError::ZeroMass`].
pub const MIN_RAW_MASS: f64 = 1e-300;

impl Profile {
    /// Build from an unnormalized density written as
    /// `exp(log_prefactor) * scaled[i] * exp(log_scale[i])`.
    ///
    /// Negative `scaled` entries are round-off from cancelling terms and are
    /// clamped to zero.
    pub fn from_log_scaled(
        grid: QGrid,
        scaled: &[f64],
        log_scale: &[f64],
        log_prefactor: f64,
    ) -> Result<Self> {
        assert_eq!(scaled.len(), grid.len());
        assert_eq!(log_scale.len(), grid.len());
        let log_density: Vec<f64> = scaled
            .iter()
            .zip(log_scale)
            .map(|(&s, &l)| {
                if s > 0.0 {
                    s.ln() + l
                } else {
                    f64::NEG_INFINITY
                }
            })
            .collect();
        let top = log_density
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        if !top.is_finite() {
            return Err(WvError::ZeroMass);
        }
        let mut density: Vec<f64> = log_density.iter().map(|&l| (l - top).exp()).collect();
        let scaled_mass = trapezoid(&density, grid.step());
        let log_raw = log_prefactor + top + scaled_mass.ln();
        if scaled_mass.is_nan() || scaled_mass <= 0.0 || log_raw < MIN_RAW_MASS.ln() {
            return Err(WvError::ZeroMass);
        }
        density.iter_mut().for_each(|d| *d /= scaled_mass);
        Ok(Self {
            grid,
            density,
            raw_mass: log_raw.exp(),
        })
    }

    /// Build from a plain unnormalized density multiplied by `prefactor`.
    pub fn from_unnormalized(grid: QGrid, values: &[f64], prefactor: f64) -> Result<Self> {
        let zeros = vec![0.0; values.len()];
        Self::from_log_scaled(grid, values, &zeros, prefactor.ln())
    }

    pub fn grid(&self) -> &QGrid {
        &self.grid
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn raw_mass(&self) -> f64 {
        self.raw_mass
    }

    /// Trapezoid integral of the normalized density (one up to round-off).
    pub fn mass(&self) -> f64 {
        trapezoid(&self.density, self.grid.step())
    }

    pub fn max_density(&self) -> f64 {
        self.density.iter().copied().fold(0.0, f64::max)
    }

    /// Position of the global maximum, refined with a three-point parabola.
    pub fn peak_location(&self) -> Result<f64> {
        peak_location(self)
    }

    /// Positions of the local maxima above `rel_floor * max`, left to right.
    pub fn local_maxima(&self, rel_floor: f64) -> Vec<f64> {
        local_maxima(self, rel_floor)
    }
}

/// Abscissa of the global maximum, refined by a parabola through the grid
/// maximum and its two neighbours. Ties go to the leftmost sample.
pub fn peak_location(profile: &Profile) -> Result<f64> {
    let d = profile.density();
    let (mut imax, mut dmax, mut dmin) = (0, f64::NEG_INFINITY, f64::INFINITY);
    for (i, &v) in d.iter().enumerate() {
        if v > dmax {
            dmax = v;
            imax = i;
        }
        dmin = dmin.min(v);
    }
    if dmax - dmin < 1e-12 * dmax.abs() || dmax <= 0.0 {
        return Err(WvError::FlatProfile);
    }
    let grid = profile.grid();
    let q = grid.point(imax);
    if imax == 0 || imax + 1 == d.len() {
        return Ok(q);
    }
    Ok(q + parabolic_offset(d[imax - 1], d[imax], d[imax + 1]) * grid.step())
}

/// Vertex offset, in units of the spacing, of the parabola through three
/// equally spaced samples centred on `y0`.
fn parabolic_offset(ym: f64, y0: f64, yp: f64) -> f64 {
    let curvature = ym - 2.0 * y0 + yp;
    if curvature >= 0.0 {
        return 0.0;
    }
    (0.5 * (ym - yp) / curvature).clamp(-0.5, 0.5)
}

pub fn local_maxima(profile: &Profile, rel_floor: f64) -> Vec<f64> {
    let d = profile.density();
    let floor = rel_floor * profile.max_density();
    let grid = profile.grid();
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < d.len() {
        if d[i] > d[i - 1] && d[i] > floor {
            // Walk across a plateau, if any.
            let mut j = i;
            while j + 1 < d.len() && d[j + 1] == d[i] {
                j += 1;
            }
            if j + 1 < d.len() && d[j + 1] < d[i] {
                let offset = if j == i {
                    parabolic_offset(d[i - 1], d[i], d[i + 1])
                } else {
                    0.5 * (j - i) as f64
                };
                peaks.push(grid.point(i) + offset * grid.step());
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Distances between two profiles on the same grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileComparison {
    /// `∫ |p1 - p2| dq`.
    pub l1: f64,
    /// `max |p1 - p2| / max p1`.
    pub linf: f64,
    /// Distance between the two peak locations (µm).
    pub peak_delta: f64,
}

pub fn compare_profiles(p1: &Profile, p2: &Profile) -> Result<ProfileComparison> {
    if !same_grid(p1.grid(), p2.grid()) {
        return Err(WvError::GridMismatch);
    }
    let diff: Vec<f64> = p1
        .density()
        .iter()
        .zip(p2.density())
        .map(|(a, b)| (a - b).abs())
        .collect();
    let l1 = trapezoid(&diff, p1.grid().step());
    let linf = diff.iter().copied().fold(0.0, f64::max) / p1.max_density();
    let peak_delta = (p1.peak_location()? - p2.peak_location()?).abs();
    Ok(ProfileComparison {
        l1,
        linf,
        peak_delta,
    })
}

fn same_grid(a: &QGrid, b: &QGrid) -> bool {
    let tol = 1e-12 * (a.q_max - a.q_min);
    a.n_points == b.n_points && (a.q_min - b.q_min).abs() <= tol && (a.q_max - b.q_max).abs() <= tol
}

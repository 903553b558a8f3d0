//! Run configuration: flat `key = value` text, one pair per line, `#`
//! comments. Unit suffixes live in the key names (`a_um`, `f_mm`, ...).
//!
//! Values are layered: built-in defaults, then a preset, then a config file,
//! then command-line overrides.

use std::collections::BTreeMap;
use std::path::PathBuf;

use wvsim_core::profile::QGrid;
use wvsim_core::speckle::{OpticalConfig, SpeckleConfig};

use crate::error::CliError;

const DEFAULTS: &str = "
lambda_nm = 632.8
f_mm = 100
w0_prime_mm = 0.697
a_um = 1.316
epsilon_rad = 2.79e-2
gamma_list = 2.04, 1.33, 0.865, 0.404
epsilon_list = 1.92e-2, 2.79e-2, 3.67e-2
grid_points = 4801
grid_half_width_w0 = 6
field_corr_width_mm = 1.42, 0.93, 0.60, 0.28
x_extent_mm = 12
n_samples = 1024
n_realizations = 2000
ref_x_mm = 0
";

/// Experiment parameters shared by the figure presets. The focused waist is
/// pinned to the quoted 28.9 µm rather than recomputed from the optics.
const EXPERIMENT: &str = "
w0_um = 28.9
a_um = 1.316
";

pub const PRESETS: &[(&str, &str)] = &[
    (
        "fig2",
        "field_corr_width_mm = 1.42, 0.93, 0.60, 0.28
         x_extent_mm = 12
         n_samples = 1024
         n_realizations = 2000
         seed = 2010",
    ),
    (
        "fig3b",
        "epsilon_rad = 1.00e-3
         gamma_list = 2.04, 1.33, 0.865, 0.404",
    ),
    (
        "fig3d",
        "epsilon_rad = 2.79e-2
         gamma_list = 2.04, 1.33, 0.865, 0.404",
    ),
    (
        "fig4",
        "epsilon_rad = 2.79e-2
         epsilon_list = 1.92e-2, 2.79e-2, 3.67e-2
         gamma_sweep_min = 0.1
         gamma_sweep_max = 100
         gamma_sweep_n = 61",
    ),
];

pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|(n, _)| *n).collect()
}

/// Ordered key-value pairs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues(BTreeMap<String, String>);

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut map = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!(
                    "line {}: expected `key = value`, got `{line}`",
                    lineno + 1
                ))
            })?;
            let key = k.trim();
            if key.is_empty() {
                return Err(CliError::Config(format!("line {}: empty key", lineno + 1)));
            }
            map.insert(key.to_string(), v.trim().to_string());
        }
        Ok(Self(map))
    }

    /// Parse `key=value` command-line overrides.
    pub fn from_overrides<S: AsRef<str>>(pairs: &[S]) -> Result<Self, CliError> {
        let text: Vec<&str> = pairs.iter().map(|s| s.as_ref()).collect();
        for p in &text {
            if !p.contains('=') {
                return Err(CliError::Config(format!("override `{p}` is not key=value")));
            }
        }
        Self::parse(&text.join("\n"))
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        let body = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, body)| *body)
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown preset `{name}` (available: {})",
                    preset_names().join(", ")
                ))
            })?;
        let mut kv = Self::parse(EXPERIMENT)?;
        kv.merge(Self::parse(body)?);
        Ok(kv)
    }

    pub fn merge(&mut self, other: KeyValues) {
        self.0.extend(other.0);
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.0.insert(key.to_string(), value.into());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &String)> {
        self.0.iter()
    }

    fn raw(&self, key: &str) -> Result<&str, CliError> {
        self.0
            .get(key)
            .map(String::as_str)
            .ok_or_else(|| CliError::Config(format!("missing key `{key}`")))
    }

    fn f64(&self, key: &str) -> Result<f64, CliError> {
        parse_f64(key, self.raw(key)?)
    }

    fn opt_f64(&self, key: &str) -> Result<Option<f64>, CliError> {
        self.0.get(key).map(|v| parse_f64(key, v)).transpose()
    }

    fn usize(&self, key: &str) -> Result<usize, CliError> {
        let v = self.raw(key)?;
        v.parse()
            .map_err(|_| CliError::Config(format!("`{key}`: `{v}` is not a non-negative integer")))
    }

    fn opt_u64(&self, key: &str) -> Result<Option<u64>, CliError> {
        self.0
            .get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| CliError::Config(format!("`{key}`: `{v}` is not a u64")))
            })
            .transpose()
    }

    fn list(&self, key: &str) -> Result<Vec<f64>, CliError> {
        self.raw(key)?
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| parse_f64(key, s))
            .collect()
    }
}

fn parse_f64(key: &str, v: &str) -> Result<f64, CliError> {
    let x: f64 = v
        .parse()
        .map_err(|_| CliError::Config(format!("`{key}`: `{v}` is not a number")))?;
    if !x.is_finite() {
        return Err(CliError::Config(format!("`{key}`: value must be finite")));
    }
    Ok(x)
}

/// Log-spaced `γ` samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaSweep {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl GammaSweep {
    pub fn samples(&self) -> Vec<f64> {
        if self.n == 1 {
            return vec![self.min];
        }
        let (lo, hi) = (self.min.ln(), self.max.ln());
        (0..self.n)
            .map(|i| (lo + (hi - lo) * i as f64 / (self.n - 1) as f64).exp())
            .collect()
    }
}

/// Speckle Monte Carlo settings; one run per listed correlation width.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeckleSettings {
    pub field_corr_widths_mm: Vec<f64>,
    pub x_extent_mm: f64,
    pub n_samples: usize,
    pub n_realizations: usize,
    pub ref_x_mm: f64,
}

impl SpeckleSettings {
    pub fn config_for(&self, width: f64, seed: u64) -> wvsim_core::Result<SpeckleConfig> {
        SpeckleConfig::new(
            width,
            self.x_extent_mm,
            self.n_samples,
            self.n_realizations,
            seed,
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub optics: OpticalConfig,
    /// Pointer spread at the focus (µm).
    pub w0_um: f64,
    pub a_um: f64,
    pub epsilon: f64,
    pub gamma_list: Vec<f64>,
    pub epsilon_list: Vec<f64>,
    pub gamma_sweep: Option<GammaSweep>,
    pub grid: QGrid,
    pub output_path: Option<PathBuf>,
    pub seed: Option<u64>,
    pub speckle: SpeckleSettings,
    /// Every key that went into this config, for output headers.
    pub source: KeyValues,
}

pub const DEFAULT_SEED: u64 = 2010;

impl RunConfig {
    /// Defaults layered with the given pairs.
    pub fn from_layers(layers: impl IntoIterator<Item = KeyValues>) -> Result<Self, CliError> {
        let mut kv = KeyValues::parse(DEFAULTS)?;
        for layer in layers {
            kv.merge(layer);
        }
        Self::from_key_values(kv)
    }

    pub fn preset(name: &str) -> Result<Self, CliError> {
        Self::from_layers([KeyValues::preset(name)?])
    }

    fn from_key_values(kv: KeyValues) -> Result<Self, CliError> {
        let optics = OpticalConfig::new(
            kv.f64("lambda_nm")?,
            kv.f64("f_mm")?,
            kv.f64("w0_prime_mm")?,
        )
        .map_err(|e| CliError::Config(e.to_string()))?;
        let w0_um = kv.opt_f64("w0_um")?.unwrap_or_else(|| optics.w0_um());
        if w0_um <= 0.0 {
            return Err(CliError::Config("`w0_um` must be positive".into()));
        }
        let a_um = kv.f64("a_um")?;
        if a_um < 0.0 {
            return Err(CliError::Config("`a_um` must be >= 0".into()));
        }
        let gamma_list = kv.list("gamma_list")?;
        if gamma_list.is_empty() || gamma_list.iter().any(|&g| g <= 0.0) {
            return Err(CliError::Config(
                "`gamma_list` must be non-empty and positive".into(),
            ));
        }
        let epsilon_list = kv.list("epsilon_list")?;
        if epsilon_list.is_empty() {
            return Err(CliError::Config("`epsilon_list` must be non-empty".into()));
        }
        let gamma_sweep = match (
            kv.opt_f64("gamma_sweep_min")?,
            kv.opt_f64("gamma_sweep_max")?,
            kv.0.get("gamma_sweep_n"),
        ) {
            (None, None, None) => None,
            (Some(min), Some(max), Some(_)) => {
                let n = kv.usize("gamma_sweep_n")?;
                if !(min > 0.0 && max >= min && n >= 1) {
                    return Err(CliError::Config(
                        "gamma sweep needs 0 < min <= max and n >= 1".into(),
                    ));
                }
                Some(GammaSweep { min, max, n })
            }
            _ => {
                return Err(CliError::Config(
                    "gamma sweep needs all of gamma_sweep_min, gamma_sweep_max, gamma_sweep_n"
                        .into(),
                ))
            }
        };
        let grid = match (kv.opt_f64("q_min_um")?, kv.opt_f64("q_max_um")?) {
            (Some(lo), Some(hi)) => QGrid::new(lo, hi, kv.usize("grid_points")?),
            (None, None) => QGrid::symmetric(
                kv.f64("grid_half_width_w0")? * w0_um,
                kv.usize("grid_points")?,
            ),
            _ => {
                return Err(CliError::Config(
                    "set both q_min_um and q_max_um or neither".into(),
                ))
            }
        }
        .map_err(|e| CliError::Config(e.to_string()))?;
        let speckle = SpeckleSettings {
            field_corr_widths_mm: kv.list("field_corr_width_mm")?,
            x_extent_mm: kv.f64("x_extent_mm")?,
            n_samples: kv.usize("n_samples")?,
            n_realizations: kv.usize("n_realizations")?,
            ref_x_mm: kv.f64("ref_x_mm")?,
        };
        Ok(Self {
            optics,
            w0_um,
            a_um,
            epsilon: kv.f64("epsilon_rad")?,
            gamma_list,
            epsilon_list,
            gamma_sweep,
            grid,
            output_path: kv.0.get("output_path").map(PathBuf::from),
            seed: kv.opt_u64("seed")?,
            speckle,
            source: kv,
        })
    }

    pub fn seed_or_default(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    /// `γ` rows for the amplification table: the sweep if one is configured,
    /// else the explicit list.
    pub fn gamma_rows(&self) -> Vec<f64> {
        self.gamma_sweep
            .map(|s| s.samples())
            .unwrap_or_else(|| self.gamma_list.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_comments_and_whitespace() {
        let kv = KeyValues::parse("# header\n a_um = 2.5  # trailing\n\nseed=7\n").unwrap();
        let cfg = RunConfig::from_layers([kv]).unwrap();
        assert_eq!(cfg.a_um, 2.5);
        assert_eq!(cfg.seed, Some(7));
    }

    #[test]
    fn rejects_malformed_lines() {
        assert!(matches!(
            KeyValues::parse("a_um 2"),
            Err(CliError::Config(_))
        ));
        assert!(matches!(KeyValues::parse("= 2"), Err(CliError::Config(_))));
        let bad = KeyValues::parse("a_um = two").unwrap();
        assert!(RunConfig::from_layers([bad]).is_err());
        let neg = KeyValues::parse("gamma_list = 1, -2").unwrap();
        assert!(RunConfig::from_layers([neg]).is_err());
        let partial = KeyValues::parse("gamma_sweep_min = 0.1").unwrap();
        assert!(RunConfig::from_layers([partial]).is_err());
    }

    #[test]
    fn presets_carry_experiment_parameters() {
        for name in preset_names() {
            let cfg = RunConfig::preset(name).unwrap();
            assert_eq!(cfg.w0_um, 28.9);
            assert_eq!(cfg.a_um, 1.316);
        }
        assert_eq!(RunConfig::preset("fig3b").unwrap().epsilon, 1.0e-3);
        assert_eq!(
            RunConfig::preset("fig3d").unwrap().gamma_list,
            vec![2.04, 1.33, 0.865, 0.404]
        );
        let fig4 = RunConfig::preset("fig4").unwrap();
        assert_eq!(fig4.epsilon_list, vec![1.92e-2, 2.79e-2, 3.67e-2]);
        assert_eq!(fig4.gamma_rows().len(), 61);
        assert!(RunConfig::preset("fig9").is_err());
    }

    #[test]
    fn default_grid_spans_six_waists() {
        let cfg = RunConfig::preset("fig3d").unwrap();
        assert_eq!(cfg.grid.len(), 4801);
        assert!((cfg.grid.q_max() - 6.0 * 28.9).abs() < 1e-12);
    }

    #[test]
    fn waist_falls_back_to_optics() {
        let cfg = RunConfig::from_layers([]).unwrap();
        assert!((cfg.w0_um - 28.899).abs() < 1e-3);
    }

    #[test]
    fn sweep_is_log_spaced() {
        let s = GammaSweep {
            min: 0.1,
            max: 10.0,
            n: 3,
        }
        .samples();
        assert!((s[1] - 1.0).abs() < 1e-12 && (s[2] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn overrides_need_equals() {
        assert!(KeyValues::from_overrides(&["epsilon_rad"]).is_err());
        let kv = KeyValues::from_overrides(&["epsilon_rad=0.2"]).unwrap();
        assert_eq!(RunConfig::from_layers([kv]).unwrap().epsilon, 0.2);
    }
}

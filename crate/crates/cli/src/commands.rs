//! The four subcommands. Each returns its CSV table (if any) plus a short
//! human-readable summary; nothing is written until all work is done.

use std::fmt::Write as _;

use wvsim_core::oracle::{
    oracle_density_evolution, oracle_grid, oracle_mixed_profile, QuadratureSpec,
};
use wvsim_core::parallel;
use wvsim_core::pointer::{amplification, mixed_profile, MixedPointer};
use wvsim_core::qsys::{
    polarization_states, weak_regime_diagnostic, weak_value, Observable, SystemState,
    DEFAULT_REGIME_ORDER,
};
use wvsim_core::speckle::{estimate_coherence, intensity_cross_correlation};
use wvsim_core::{compare_profiles, Profile};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{fmt_num, Table, TOOL_VERSION};

/// Closed form vs oracle agreement required by `check`.
pub const CHECK_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct CommandOutput {
    pub table: Option<Table>,
    pub summary: String,
}

fn header(cfg: &RunConfig, command: &str) -> Table {
    let mut t = Table::default();
    t.comment(TOOL_VERSION);
    t.comment(format!("command = {command}"));
    let mut kv = cfg.source.clone();
    kv.set("w0_um", cfg.w0_um.to_string());
    kv.set("seed", cfg.seed_or_default().to_string());
    kv.set("q_min_um", cfg.grid.q_min().to_string());
    kv.set("q_max_um", cfg.grid.q_max().to_string());
    for (k, v) in kv.iter() {
        t.comment(format!("{k} = {v}"));
    }
    t
}

struct Setup {
    psi_in: SystemState,
    psi_f: SystemState,
    obs: Observable,
}

fn setup(a: f64, epsilon: f64) -> Result<Setup, CliError> {
    let (psi_in, psi_f) = polarization_states(epsilon)?;
    let obs = Observable::polarization_walkoff(a)?;
    // Surface an orthogonal postselection before any profile work.
    weak_value(&psi_in, &psi_f, &obs)?;
    Ok(Setup { psi_in, psi_f, obs })
}

fn profile_for(s: &Setup, cfg: &RunConfig, gamma: f64) -> Result<Profile, CliError> {
    let pointer = MixedPointer::from_gamma(cfg.w0_um, gamma)?;
    Ok(mixed_profile(
        &s.psi_in, &s.psi_f, &s.obs, &pointer, &cfg.grid,
    )?)
}

/// Normalized density per `γ` on the configured grid.
pub fn cmd_profile(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let s = setup(cfg.a_um, cfg.epsilon)?;
    let profiles = parallel::try_map_indexed(cfg.gamma_list.len(), |i| {
        profile_for(&s, cfg, cfg.gamma_list[i])
    })?;

    let mut columns = vec!["q_um".to_string()];
    columns.extend(cfg.gamma_list.iter().map(|g| format!("density_gamma_{g}")));
    let mut table = header(cfg, "profile");
    table.set_columns(columns);
    for (i, q) in cfg.grid.points().enumerate() {
        let mut row = Vec::with_capacity(profiles.len() + 1);
        row.push(q);
        row.extend(profiles.iter().map(|p| p.density()[i]));
        table.push_row(row);
    }

    let mut summary = String::new();
    for (g, p) in cfg.gamma_list.iter().zip(&profiles) {
        let peaks = p.local_maxima(1e-9);
        let list: Vec<String> = peaks.iter().map(|x| format!("{x:.4}")).collect();
        writeln!(
            summary,
            "gamma = {g}: peak = {:.6} um, local maxima = [{}]",
            p.peak_location()?,
            list.join(", ")
        )
        .ok();
    }
    Ok(CommandOutput {
        table: Some(table),
        summary,
    })
}

/// `|amplification|` for every `γ` row and `ε` column.
pub fn cmd_amplification(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let gammas = cfg.gamma_rows();
    let setups: Vec<Setup> = cfg
        .epsilon_list
        .iter()
        .map(|&eps| setup(cfg.a_um, eps))
        .collect::<Result<_, _>>()?;
    let n_eps = setups.len();
    let values = parallel::try_map_indexed(gammas.len() * n_eps, |idx| {
        let s = &setups[idx % n_eps];
        let p = profile_for(s, cfg, gammas[idx / n_eps])?;
        Ok::<_, CliError>(amplification(&p, &s.psi_in, &s.obs)?.abs())
    })?;

    let mut columns = vec!["gamma".to_string()];
    columns.extend(
        cfg.epsilon_list
            .iter()
            .map(|e| format!("amplification_eps_{e}")),
    );
    let mut table = header(cfg, "amplification");
    table.set_columns(columns);
    for (r, g) in gammas.iter().enumerate() {
        let mut row = vec![*g];
        row.extend_from_slice(&values[r * n_eps..(r + 1) * n_eps]);
        table.push_row(row);
    }
    let summary = format!("{} gamma rows x {} epsilon columns\n", gammas.len(), n_eps);
    Ok(CommandOutput {
        table: Some(table),
        summary,
    })
}

/// Speckle correlation curves with the fitted coherence in a footer.
pub fn cmd_speckle(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let widths = &cfg.speckle.field_corr_widths_mm;
    if widths.is_empty() {
        return Err(CliError::Config(
            "`field_corr_width_mm` must list at least one width".into(),
        ));
    }
    let seed = cfg.seed_or_default();
    let mut curves = Vec::with_capacity(widths.len());
    for &wg in widths {
        let sc = cfg.speckle.config_for(wg, seed)?;
        let curve = intensity_cross_correlation(&sc, cfg.speckle.ref_x_mm)?;
        let est = estimate_coherence(&curve, &cfg.optics)?;
        curves.push((wg, curve, est));
    }

    let mut columns = vec!["x_mm".to_string()];
    columns.extend(widths.iter().map(|w| format!("c_wg_{w}")));
    let mut table = header(cfg, "speckle");
    table.set_columns(columns);
    for i in 0..curves[0].1.x.len() {
        let mut row = vec![curves[0].1.x[i]];
        row.extend(curves.iter().map(|(_, c, _)| c.c[i]));
        table.push_row(row);
    }
    let mut summary = String::new();
    table.footer(format!("optics w0_um = {}", fmt_num(cfg.optics.w0_um())));
    for (wg, _, est) in &curves {
        let line = format!(
            "w_g_mm = {wg}, w_c_prime_mm = {}, w_c_um = {}, gamma = {}, fit_rmse = {}",
            fmt_num(est.w_c_prime),
            fmt_num(est.w_c),
            fmt_num(est.gamma),
            fmt_num(est.fit_rmse)
        );
        writeln!(summary, "{line}").ok();
        table.footer(line);
    }
    Ok(CommandOutput {
        table: Some(table),
        summary,
    })
}

/// Weak value, regime diagnostic and oracle agreement report. Fails with
/// [`CliError::OracleDisagreement`] if any `γ` exceeds [`CHECK_TOL`].
pub fn cmd_check(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let s = setup(cfg.a_um, cfg.epsilon)?;
    let wv = weak_value(&s.psi_in, &s.psi_f, &s.obs)?;
    let diag =
        weak_regime_diagnostic(&s.psi_in, &s.psi_f, &s.obs, cfg.w0_um, DEFAULT_REGIME_ORDER)?;

    let mut out = String::new();
    writeln!(out, "{TOOL_VERSION}").ok();
    writeln!(
        out,
        "a_um = {}, epsilon_rad = {}, w0_um = {}",
        cfg.a_um, cfg.epsilon, cfg.w0_um
    )
    .ok();
    writeln!(
        out,
        "weak value = {} {:+}i um",
        fmt_num(wv.value.re),
        fmt_num(wv.value.im)
    )
    .ok();
    writeln!(
        out,
        "overlap = {} {:+}i",
        fmt_num(wv.overlap.re),
        fmt_num(wv.overlap.im)
    )
    .ok();
    writeln!(
        out,
        "regime: r_linear = {}, r_higher = {}, in_regime = {}",
        fmt_num(diag.r_linear),
        fmt_num(diag.r_higher),
        diag.in_regime
    )
    .ok();
    if !diag.in_regime {
        writeln!(
            out,
            "note: |A_w|/w0 or the higher-order ratio is not below 1; the linear \
             weak-value shift is not expected to describe the pointer."
        )
        .ok();
    }

    let grid = oracle_grid(cfg.w0_um, &s.obs)?;
    let rows = parallel::try_map_indexed(cfg.gamma_list.len(), |i| {
        let gamma = cfg.gamma_list[i];
        let pointer = MixedPointer::from_gamma(cfg.w0_um, gamma)?;
        let closed = mixed_profile(&s.psi_in, &s.psi_f, &s.obs, &pointer, &grid)?;
        let quad = QuadratureSpec::for_problem(&pointer, &grid, &s.obs)?;
        let q = oracle_mixed_profile(&s.psi_in, &s.psi_f, &s.obs, &pointer, &grid, &quad)?;
        let d = oracle_density_evolution(&s.psi_in, &s.psi_f, &s.obs, &pointer, &grid)?;
        Ok::<_, CliError>((
            gamma,
            compare_profiles(&closed, &q)?.linf,
            compare_profiles(&closed, &d)?.linf,
        ))
    })?;

    let mut worst: f64 = 0.0;
    for (gamma, lq, ld) in &rows {
        let ok = lq.max(*ld) <= CHECK_TOL;
        writeln!(
            out,
            "gamma = {gamma}: linf quadrature = {lq:.3e}, linf density matrix = {ld:.3e} [{}]",
            if ok { "ok" } else { "FAIL" }
        )
        .ok();
        worst = worst.max(lq.max(*ld));
    }
    if worst > CHECK_TOL {
        return Err(CliError::OracleDisagreement(format!(
            "worst linf {worst:.3e} exceeds {CHECK_TOL:e}\n{out}"
        )));
    }
    Ok(CommandOutput {
        table: None,
        summary: out,
    })
}

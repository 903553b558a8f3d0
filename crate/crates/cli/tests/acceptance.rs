//! Acceptance suite: one PASS/FAIL line per criterion, each with its own
//! tolerance and wall-clock budget. Exits nonzero if any criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use wvsim_cli::RunConfig;
use wvsim_core::oracle::{
    oracle_density_evolution, oracle_grid, oracle_mixed_profile, QuadratureSpec,
};
use wvsim_core::pointer::{amplification, mixed_profile, polarization_mixed_profile, pure_profile};
use wvsim_core::qsys::{
    polarization_states, weak_regime_diagnostic, weak_value, DEFAULT_REGIME_ORDER,
};
use wvsim_core::speckle::{coherence_to_gamma, estimate_coherence, intensity_cross_correlation};
use wvsim_core::{compare_profiles, MixedPointer, Observable, Profile, PurePointer, WvError};

type Outcome = Result<(bool, String), WvError>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

const GAMMAS_FIG2: [f64; 4] = [2.04, 1.33, 0.865, 0.404];
const WC_FIG2_UM: [f64; 4] = [59.0, 38.5, 25.0, 11.7];

fn preset(name: &str) -> RunConfig {
    RunConfig::preset(name).expect("built-in preset")
}

fn walkoff(cfg: &RunConfig) -> Observable {
    Observable::polarization_walkoff(cfg.a_um).expect("a >= 0")
}

fn mixed(cfg: &RunConfig, eps: f64, gamma: f64) -> Result<Profile, WvError> {
    let (psi_in, psi_f) = polarization_states(eps)?;
    let pointer = MixedPointer::from_gamma(cfg.w0_um, gamma)?;
    mixed_profile(&psi_in, &psi_f, &walkoff(cfg), &pointer, &cfg.grid)
}

fn abs_amplification(cfg: &RunConfig, eps: f64, gamma: f64) -> Result<f64, WvError> {
    let (psi_in, _) = polarization_states(eps)?;
    Ok(amplification(&mixed(cfg, eps, gamma)?, &psi_in, &walkoff(cfg))?.abs())
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    ((x - target) / target).abs() <= rel
}

fn gamma_conversion() -> Outcome {
    let cfg = preset("fig2");
    let w0 = cfg.optics.w0_um();
    let mut ok = within(w0, 28.9, 1e-3);
    let mut detail = format!("w0 = {w0:.4} um;");
    for (wc_prime, target) in cfg.speckle.field_corr_widths_mm.iter().zip(GAMMAS_FIG2) {
        let est = coherence_to_gamma(*wc_prime, &cfg.optics)?;
        ok &= within(est.gamma, target, 0.02);
        detail += &format!(" gamma({wc_prime}) = {:.4};", est.gamma);
    }
    Ok((ok, detail))
}

fn closed_form_vs_oracles() -> Outcome {
    let mut worst_q: f64 = 0.0;
    let mut worst_d: f64 = 0.0;
    for name in ["fig3b", "fig3d"] {
        let cfg = preset(name);
        let obs = walkoff(&cfg);
        let grid = oracle_grid(cfg.w0_um, &obs)?;
        let (psi_in, psi_f) = polarization_states(cfg.epsilon)?;
        for &gamma in &cfg.gamma_list {
            let pointer = MixedPointer::from_gamma(cfg.w0_um, gamma)?;
            let closed = mixed_profile(&psi_in, &psi_f, &obs, &pointer, &grid)?;
            let quad = QuadratureSpec::for_problem(&pointer, &grid, &obs)?;
            let q = oracle_mixed_profile(&psi_in, &psi_f, &obs, &pointer, &grid, &quad)?;
            let d = oracle_density_evolution(&psi_in, &psi_f, &obs, &pointer, &grid)?;
            worst_q = worst_q.max(compare_profiles(&closed, &q)?.linf);
            worst_d = worst_d.max(compare_profiles(&closed, &d)?.linf);
        }
    }
    Ok((
        worst_q <= 1e-8 && worst_d <= 1e-5,
        format!("8 (gamma, eps) pairs; worst linf quadrature = {worst_q:.2e} (<= 1e-8), density matrix = {worst_d:.2e} (<= 1e-5)"),
    ))
}

fn pure_limit() -> Outcome {
    let cfg = preset("fig3d");
    let (psi_in, psi_f) = polarization_states(cfg.epsilon)?;
    let pointer = MixedPointer::from_gamma(cfg.w0_um, 1000.0)?;
    let m = mixed_profile(&psi_in, &psi_f, &walkoff(&cfg), &pointer, &cfg.grid)?;
    let p = pure_profile(
        &psi_in,
        &psi_f,
        &walkoff(&cfg),
        &pointer.pure_limit(),
        &cfg.grid,
    )?;
    let linf = compare_profiles(&m, &p)?.linf;
    Ok((
        linf <= 1e-4,
        format!("gamma = 1000: linf = {linf:.2e} (<= 1e-4)"),
    ))
}

fn three_term_form() -> Outcome {
    let cfg = preset("fig3d");
    let eps_sweep = [1.0e-3, 1.92e-2, 2.79e-2, 3.67e-2, 0.2];
    let gamma_sweep = [0.2, 0.404, 0.865, 2.04, 20.0];
    let mut worst: f64 = 0.0;
    let mut worst_pointwise: f64 = 0.0;
    for eps in eps_sweep {
        for gamma in gamma_sweep {
            let pointer = MixedPointer::from_gamma(cfg.w0_um, gamma)?;
            let general = mixed(&cfg, eps, gamma)?;
            let special = polarization_mixed_profile(cfg.a_um, eps, &pointer, &cfg.grid)?;
            // Relative to the peak density, as for every other L-infinity
            // comparison in this suite.
            worst = worst.max(compare_profiles(&general, &special)?.linf);
            worst =
                worst.max(((general.raw_mass() - special.raw_mass()) / general.raw_mass()).abs());
            for (g, s) in general.density().iter().zip(special.density()) {
                worst_pointwise = worst_pointwise.max((g - s).abs() / g.abs());
            }
        }
    }
    Ok((
        worst <= 1e-10,
        format!(
            "5 x 5 sweep; worst difference relative to peak density = {worst:.2e} (<= 1e-10); \
             worst per-point ratio = {worst_pointwise:.2e}"
        ),
    ))
}

fn double_peak_structure() -> Outcome {
    let cfg = preset("fig3b");
    let wide = mixed(&cfg, cfg.epsilon, 2.04)?.local_maxima(1e-9);
    let narrow_profile = mixed(&cfg, cfg.epsilon, 0.404)?;
    let narrow = narrow_profile.local_maxima(1e-9);
    let peak = narrow_profile.peak_location()?;
    let ok = wide.len() == 2 && narrow.len() == 1 && peak.abs() <= 0.3;
    Ok((
        ok,
        format!(
            "gamma 2.04: {} maxima at {:?}; gamma 0.404: {} maximum at {peak:.4} um (|peak| <= 0.3 required)",
            wide.len(),
            wide.iter().map(|x| (x * 1e3).round() / 1e3).collect::<Vec<_>>(),
            narrow.len()
        ),
    ))
}

fn fig4_point() -> Outcome {
    let cfg = preset("fig4");
    let peak = mixed(&cfg, 2.79e-2, 0.404)?.peak_location()?.abs();
    let lo = abs_amplification(&cfg, 1.92e-2, 0.404)?;
    let hi = abs_amplification(&cfg, 3.67e-2, 0.404)?;
    let in_band = (3.5..=6.0).contains(&peak);
    let brackets = lo.min(hi) <= 6.96 && 6.96 <= lo.max(hi);
    Ok((
        in_band && brackets,
        format!(
            "|peak| = {peak:.4} um in [3.5, 6.0]: {in_band}; |amp| eps 1.92e-2 = {lo:.3}, eps 3.67e-2 = {hi:.3}, bracket 6.96: {brackets}"
        ),
    ))
}

fn monotone_saturation() -> Outcome {
    let cfg = preset("fig4");
    let gammas = [0.2, 0.404, 0.865, 1.33, 2.04, 5.0, 20.0];
    let amps: Vec<f64> = gammas
        .iter()
        .map(|&g| abs_amplification(&cfg, 2.79e-2, g))
        .collect::<Result<_, _>>()?;
    let monotone = amps.windows(2).all(|w| w[1] >= w[0]);
    let spread = (amps[6] - amps[5]).abs() / amps[6];
    Ok((
        monotone && spread < 0.1,
        format!(
            "|amp| = {:?}; non-decreasing: {monotone}; gamma 5 vs 20 differ by {:.1}% (< 10%)",
            amps.iter()
                .map(|a| (a * 1e3).round() / 1e3)
                .collect::<Vec<_>>(),
            spread * 100.0
        ),
    ))
}

fn weak_regime_peak() -> Outcome {
    let cfg = preset("fig3d");
    let (psi_in, psi_f) = polarization_states(0.2)?;
    let obs = walkoff(&cfg);
    let diag = weak_regime_diagnostic(&psi_in, &psi_f, &obs, cfg.w0_um, DEFAULT_REGIME_ORDER)?;
    let aw = weak_value(&psi_in, &psi_f, &obs)?.value.re;
    let p = pure_profile(
        &psi_in,
        &psi_f,
        &obs,
        &PurePointer::new(cfg.w0_um)?,
        &cfg.grid,
    )?;
    let peak = p.peak_location()?;
    let rel = (peak - aw).abs() / aw.abs();
    Ok((
        diag.in_regime && rel <= 0.05,
        format!("in_regime = {}; peak = {peak:.4} um, A_w = {aw:.4} um, |diff|/|A_w| = {rel:.4} (<= 0.05)", diag.in_regime),
    ))
}

fn speckle_end_to_end() -> Outcome {
    let cfg = preset("fig2");
    let seed = cfg.seed_or_default();
    let mut ok = true;
    let mut detail = String::new();
    for ((&wg, gamma_target), wc_target) in cfg
        .speckle
        .field_corr_widths_mm
        .iter()
        .zip(GAMMAS_FIG2)
        .zip(WC_FIG2_UM)
    {
        let sc = cfg.speckle.config_for(wg, seed)?;
        let curve = intensity_cross_correlation(&sc, cfg.speckle.ref_x_mm)?;
        let est = estimate_coherence(&curve, &cfg.optics)?;
        let c0 = curve
            .x
            .iter()
            .zip(&curve.c)
            .find(|(x, _)| **x == curve.ref_x)
            .map(|(_, c)| *c)
            .unwrap_or(f64::NAN);
        let this = within(est.w_c_prime, wg, 0.05)
            && within(est.gamma, gamma_target, 0.05)
            && (c0 - 1.0).abs() <= 0.05;
        ok &= this;
        detail += &format!(
            " w_g {wg}: w_c' = {:.4} mm, w_c = {:.2} um (caption {wc_target}), gamma = {:.4}, C(0) = {c0:.3};",
            est.w_c_prime, est.w_c, est.gamma
        );
    }
    Ok((
        ok,
        format!("{} realizations each;{detail}", cfg.speckle.n_realizations),
    ))
}

fn weak_value_closed_form() -> Outcome {
    let cfg = preset("fig3d");
    let obs = walkoff(&cfg);
    let mut worst: f64 = 0.0;
    for eps in [1.0e-3, 2.79e-2, 0.2] {
        let (psi_in, psi_f) = polarization_states(eps)?;
        let aw = weak_value(&psi_in, &psi_f, &obs)?.value;
        let expected = -(cfg.a_um / 2.0) * (1.0 + 1.0 / eps.tan());
        worst = worst
            .max((aw.re - expected).abs() / expected.abs())
            .max(aw.im.abs() / expected.abs());
    }
    let (psi_in, psi_f) = polarization_states(0.0)?;
    let orthogonal = matches!(
        weak_value(&psi_in, &psi_f, &obs),
        Err(WvError::OrthogonalPostselection { .. })
    );
    Ok((
        worst <= 1e-10 && orthogonal,
        format!("worst relative error = {worst:.2e} (<= 1e-10); eps = 0 raises OrthogonalPostselection: {orthogonal}"),
    ))
}

fn main() -> ExitCode {
    let criteria = [
        Criterion {
            id: 1,
            name: "gamma conversion",
            budget: Duration::from_millis(1),
            run: gamma_conversion,
        },
        Criterion {
            id: 2,
            name: "closed form vs oracles",
            budget: Duration::from_secs(10),
            run: closed_form_vs_oracles,
        },
        Criterion {
            id: 3,
            name: "pure-state limit",
            budget: Duration::from_secs(1),
            run: pure_limit,
        },
        Criterion {
            id: 4,
            name: "three-term polarization form",
            budget: Duration::from_secs(2),
            run: three_term_form,
        },
        Criterion {
            id: 5,
            name: "peak structure at eps = 1e-3",
            budget: Duration::from_secs(1),
            run: double_peak_structure,
        },
        Criterion {
            id: 6,
            name: "amplification at gamma = 0.404",
            budget: Duration::from_secs(1),
            run: fig4_point,
        },
        Criterion {
            id: 7,
            name: "monotone, saturating amplification",
            budget: Duration::from_secs(2),
            run: monotone_saturation,
        },
        Criterion {
            id: 8,
            name: "weak-regime pointer peak",
            budget: Duration::from_secs(1),
            run: weak_regime_peak,
        },
        Criterion {
            id: 9,
            name: "speckle end to end",
            budget: Duration::from_secs(60),
            run: speckle_end_to_end,
        },
        Criterion {
            id: 10,
            name: "weak value closed form",
            budget: Duration::from_millis(1),
            run: weak_value_closed_form,
        },
    ];

    let mut failures = 0;
    for c in &criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && in_budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "{} [{:>2}] {}: {detail} | runtime {:.3?} (budget {:?}{})",
            if ok { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed,
            c.budget,
            if in_budget { "" } else { ", exceeded" }
        );
    }
    println!(
        "acceptance: {} passed, {failures} failed",
        criteria.len() - failures
    );
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

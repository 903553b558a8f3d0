//! Closed-form pointer densities against values frozen from an independent
//! oracle: direct adaptive quadrature over the ensemble centre followed by a
//! bounded scalar maximization, computed outside this crate.

use wvsim_core::pointer::{amplification, mixed_profile, pure_profile, MixedPointer, PurePointer};
use wvsim_core::profile::QGrid;
use wvsim_core::qsys::{polarization_states, weak_value, Observable};

const A: f64 = 1.316;
const W0: f64 = 28.9;

fn grid() -> QGrid {
    QGrid::default_for(W0).unwrap()
}

fn mixed_peak(eps: f64, gamma: f64) -> f64 {
    let (psi_in, psi_f) = polarization_states(eps).unwrap();
    let obs = Observable::polarization_walkoff(A).unwrap();
    let pointer = MixedPointer::from_gamma(W0, gamma).unwrap();
    mixed_profile(&psi_in, &psi_f, &obs, &pointer, &grid())
        .unwrap()
        .peak_location()
        .unwrap()
}

#[test]
fn mixed_peaks_match_quadrature_oracle() {
    let frozen = [
        (2.79e-2, 0.05, -0.7662105656469026),
        (2.79e-2, 0.2, -2.0849499270995087),
        (2.79e-2, 0.404, -5.97188818954684),
        (2.79e-2, 0.865, -13.904309734773381),
        (2.79e-2, 1.33, -17.382632289273406),
        (2.79e-2, 2.04, -19.970567711682715),
        (2.79e-2, 5.0, -23.137929907564086),
        (2.79e-2, 20.0, -24.158371464218277),
        (1.92e-2, 0.404, -4.947300324750723),
        (1.92e-2, 2.04, -25.01350136904129),
        (3.67e-2, 0.404, -6.516905310817932),
        (3.67e-2, 2.04, -16.42488060119599),
    ];
    let tol = grid().step() / 10.0;
    for (eps, gamma, expected) in frozen {
        let peak = mixed_peak(eps, gamma);
        assert!(
            (peak - expected).abs() < tol,
            "eps {eps} gamma {gamma}: {peak} vs {expected}"
        );
    }
}

#[test]
fn pure_pointer_peak_in_weak_regime() {
    let (psi_in, psi_f) = polarization_states(0.2).unwrap();
    let obs = Observable::polarization_walkoff(A).unwrap();
    let p = pure_profile(
        &psi_in,
        &psi_f,
        &obs,
        &PurePointer::new(W0).unwrap(),
        &grid(),
    )
    .unwrap();
    let peak = p.peak_location().unwrap();
    assert!(
        (peak + 3.8291387056683517).abs() < grid().step() / 10.0,
        "{peak}"
    );
    let aw = weak_value(&psi_in, &psi_f, &obs).unwrap().value.re;
    assert!((peak - aw).abs() <= 0.05 * aw.abs());
    let amp = amplification(&p, &psi_in, &obs).unwrap();
    assert!((amp - 3.8291387056683517 / 0.658).abs() < 1e-2, "{amp}");
}

#[test]
fn nearly_orthogonal_postselection_structure() {
    let (psi_in, psi_f) = polarization_states(1.0e-3).unwrap();
    let obs = Observable::polarization_walkoff(A).unwrap();
    let tol = grid().step() / 10.0;

    let coherent = MixedPointer::from_gamma(W0, 2.04).unwrap();
    let p = mixed_profile(&psi_in, &psi_f, &obs, &coherent, &grid()).unwrap();
    let maxima = p.local_maxima(1e-9);
    assert_eq!(maxima.len(), 2, "{maxima:?}");
    assert!((maxima[0] + 43.54114522092486).abs() < tol);
    assert!((maxima[1] - 44.894562032566306).abs() < tol);
    assert!((p.peak_location().unwrap() - maxima[0]).abs() < tol);

    let incoherent = MixedPointer::from_gamma(W0, 0.404).unwrap();
    let p = mixed_profile(&psi_in, &psi_f, &obs, &incoherent, &grid()).unwrap();
    let maxima = p.local_maxima(1e-9);
    assert_eq!(maxima.len(), 1);
    assert!((maxima[0] + 0.9265675478001827).abs() < tol);
}

#[test]
fn amplification_at_measured_point() {
    let (psi_in, psi_f) = polarization_states(2.79e-2).unwrap();
    let obs = Observable::polarization_walkoff(A).unwrap();
    let pointer = MixedPointer::from_gamma(W0, 0.404).unwrap();
    let p = mixed_profile(&psi_in, &psi_f, &obs, &pointer, &grid()).unwrap();
    let amp = amplification(&p, &psi_in, &obs).unwrap();
    assert!((amp - 5.97188818954684 / 0.658).abs() < 1e-2, "{amp}");
    assert!((5.3..=9.1).contains(&amp));
}

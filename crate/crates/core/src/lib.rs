//! Weak-value measurement with a partially coherent pointer.
//!
//! * [`qsys`]: system states, observables, weak values and the weak-regime
//!   diagnostic.
//! * [`pointer`]: closed-form postselected pointer densities for pure and
//!   mixed Gaussian pointers, plus peak and amplification read-outs.
//! * [`oracle`]: brute-force checks of those closed forms.
//! * [`speckle`]: pseudo-thermal speckle Monte Carlo, intensity
//!   cross-correlation and the conversion of its width to `γ`.

pub mod error;
pub mod oracle;
pub mod parallel;
pub mod pointer;
pub mod profile;
pub mod qsys;
pub mod speckle;

pub use error::{Result, WvError};
pub use pointer::{
    amplification, mixed_profile, polarization_mixed_profile, pure_profile, weak_approx_profile,
    MixedPointer, PurePointer,
};
pub use profile::{compare_profiles, peak_location, Profile, ProfileComparison, QGrid};
pub use qsys::{
    expectation, polarization_states, weak_regime_diagnostic, weak_value, Observable,
    RegimeDiagnostic, SystemState, WeakValueResult,
};

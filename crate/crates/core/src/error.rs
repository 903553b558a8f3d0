use thiserror::Error;

/// Errors produced by the simulator.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum WvError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state is not normalized: squared norm {norm_sqr}")]
    NotNormalized { norm_sqr: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The pre- and postselected states are (numerically) orthogonal, so the
    /// weak value is undefined.
    #[error("orthogonal postselection: |<psi_f|psi_in>| = {overlap:e}")]
    OrthogonalPostselection { overlap: f64 },

    #[error("postselected distribution has zero mass on the grid")]
    ZeroMass,

    #[error("degenerate pointer: coherence ratio {gamma:e} is below the resolvable limit")]
    DegeneratePointer { gamma: f64 },

    #[error("profile is flat, no peak to locate")]
    FlatProfile,

    #[error("expectation value vanishes, amplification undefined")]
    ZeroExpectation,

    #[error("quadrature under-resolved: refinement changed the density by {change:e} (relative)")]
    QuadratureUnderResolved { change: f64 },

    #[error("shifted coordinate {coordinate} lies outside the density-matrix grid")]
    InterpolationOutOfRange { coordinate: f64 },

    #[error("profiles live on different grids")]
    GridMismatch,

    #[error("need at least {required} realizations, got {got}")]
    InsufficientRealizations { required: usize, got: usize },

    #[error("gaussian fit diverged: {0}")]
    FitDiverged(String),
}

impl WvError {
    /// True for errors that come from the physics/maths rather than from a
    /// malformed request.
    pub fn is_math_domain(&self) -> bool {
        matches!(
            self,
            WvError::OrthogonalPostselection { .. }
                | WvError::ZeroMass
                | WvError::DegeneratePointer { .. }
                | WvError::FlatProfile
                | WvError::ZeroExpectation
                | WvError::QuadratureUnderResolved { .. }
                | WvError::InterpolationOutOfRange { .. }
                | WvError::FitDiverged(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, WvError>;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension {0}: need n >= 2")]
    InvalidDimension(usize),

    #[error("wedge index ({i}, {j}) invalid for n = {n}: need i < j < n (0-based)")]
    BadWedgeIndex { i: usize, j: usize, n: usize },

    #[error("matrix is not skew-symmetric (asymmetry residual {residual:.3e})")]
    NotSkew { residual: f64 },

    #[error("matrix is not a rotation (orthogonality residual {residual:.3e}, det {det:.6})")]
    NotRotation { residual: f64, det: f64 },

    #[error("adjoint vector has nonzero entries in the last row/column ({residual:.3e})")]
    NotVertical { residual: f64 },

    #[error("dimension {0} is odd; a magnetic element needs an even dimension")]
    OddDimension(usize),

    #[error("zero vector has no direction")]
    ZeroVector,

    #[error("gauge singularity: direction within {angle:.3e} rad of the section's string")]
    GaugeSingularity { angle: f64 },

    #[error("path entered the pole cap at t = {t} and re-anchoring is disabled")]
    PoleCap { t: f64 },

    #[error("collision with the origin at t = {t}")]
    Collision { t: f64 },

    #[error("step-size failure at t = {t}: {reason}")]
    StepFailure { t: f64, reason: String },

    #[error("energy {energy} lies below the effective potential minimum {minimum}")]
    BelowPotentialMinimum { energy: f64, minimum: f64 },

    #[error("zero centrifugal barrier: orbit reaches the origin")]
    CollisionOrbit,

    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// True for failures produced by the numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::GaugeSingularity { .. }
                | Error::PoleCap { .. }
                | Error::Collision { .. }
                | Error::StepFailure { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

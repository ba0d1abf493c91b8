use thiserror::Error;

/// Errors raised by the rotation-number machinery.
///
/// Variants split into two families: validation failures (bad parameters,
/// structurally invalid maps) and numerical failures (branch ambiguity,
/// escaping orbits). [`Error::is_numerical`] tells them apart.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid lift: {0}")]
    InvalidLift(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("fibre index {index} out of range for {n} fibres")]
    FibreIndex { index: usize, n: usize },

    #[error("conjugacy {index} rejected: {reason}")]
    InvalidConjugacy { index: usize, reason: String },

    #[error("coefficient vanishes at theta = {theta}")]
    Vanishing { theta: f64 },

    #[error("winding degree is {degree}, expected 0")]
    NonzeroDegree { degree: i64 },

    #[error("phase step {step:.4} rad at theta = {theta} is too large; refine the grid")]
    UnwrapAmbiguity { theta: f64, step: f64 },

    #[error("orbit left the annulus [{r_min}, {r_max}] at step {step} (|z| = {modulus})")]
    OrbitEscape {
        step: usize,
        modulus: f64,
        r_min: f64,
        r_max: f64,
    },

    #[error("step {step} rotates by {turns:.4} turn, too close to a half turn")]
    BranchAmbiguity { step: usize, turns: f64 },

    #[error("alpha = {0} must lie in (0, 1)")]
    AlphaRange(f64),
}

impl Error {
    /// True for failures of the numerics rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::UnwrapAmbiguity { .. } | Error::OrbitEscape { .. } | Error::BranchAmbiguity { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

use std::path::PathBuf;

/// Errors produced by mesh construction, discretization and solves.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cell {cell} is not star-shaped with respect to its center")]
    NotStarShaped { cell: usize },

    #[error("mesh regularity could not be met after {attempts} perturbation attempts")]
    RegularityNotMet { attempts: usize },

    #[error("point ({x}, {y}) lies outside element {element}")]
    PointOutside { element: usize, x: f64, y: f64 },

    #[error("local DOF matrix of triangle {triangle} is singular (condition number {condition:.3e})")]
    SingularLocalMatrix { triangle: usize, condition: f64 },

    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("non-finite data value at ({x}, {y})")]
    NonFiniteData { x: f64, y: f64 },

    #[error("singular system: {0}")]
    SingularSystem(String),

    #[error("relative residual {residual:.3e} exceeds tolerance {tolerance:.1e}")]
    ResidualTooLarge { residual: f64, tolerance: f64 },

    #[error("malformed mesh file {path}: {reason}")]
    MalformedFile { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for failures caused by the numerics rather than the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::SingularLocalMatrix { .. }
                | Error::SingularSystem(_)
                | Error::ResidualTooLarge { .. }
                | Error::NonFiniteData { .. }
                | Error::RegularityNotMet { .. }
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

//! Reconstruction of harmonic functions on domains of plane algebraic curves
//! from boundary data, through a Hefer-barrier Cauchy–Fantappiè kernel.
//!
//! Pipeline: [`geometry::trace_boundary`] → [`harmonic::period_a`] →
//! [`harmonic::build_h`] → [`harmonic::primitive_f`] → [`kernel::build_tube`]
//! → [`kernel::compute_g`] → [`kernel::vandermonde_solve`] →
//! [`kernel::reconstruct_u`]. [`harness`] wires it to synthetic scenarios.

pub mod algebra;
pub mod config;
pub mod fourier;
pub mod geometry;
pub mod harmonic;
pub mod harness;
pub mod kernel;
pub mod roots;
pub mod sum;

pub use num_complex::Complex64 as C64;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("validation: {0}")]
    Validation(String),
    #[error("geometry: {0}")]
    Geometry(String),
    #[error("{0}")]
    Numerical(String),
    #[error("calibration: {0}")]
    Calibration(String),
    #[error("stage {stage}: {source}")]
    Stage { stage: &'static str, source: Box<Error> },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Innermost error, skipping stage tags.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            e => e,
        }
    }

    pub fn stage(&self) -> Option<&'static str> {
        match self {
            Error::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: &'static str) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: &'static str) -> Result<T> {
        self.map_err(|e| Error::Stage {
            stage,
            source: Box::new(e),
        })
    }
}

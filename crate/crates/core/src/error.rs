use thiserror::Error;

use crate::povm::PovmDiagnostics;
use crate::psf::PsfDiagnostics;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("x = {x} lies outside the sampled range [{min}, {max}]")]
    OutOfRange { x: f64, min: f64, max: f64 },

    #[error("displacement {displacement} pushes tail mass {tail_mass:e} outside the grid")]
    SupportOverflow { displacement: f64, tail_mass: f64 },

    #[error("degenerate PSF: p4 - p2^2 = {gap:e}")]
    DegeneratePsf { gap: f64 },

    #[error("PSF failed validation: {0}")]
    InvalidPsf(PsfDiagnostics),

    #[error("derivative basis is degenerate at mode {mode} (relative residual {residual:e})")]
    DegenerateBasis { mode: usize, residual: f64 },

    #[error("Hermite-Gauss order {0} is not supported (max 12)")]
    UnsupportedOrder(usize),

    #[error("angle {name} = {value} must lie strictly inside (0, pi/2)")]
    AngleOutOfRange { name: &'static str, value: f64 },

    #[error("1 - b1^2 = {0:e} is too small to define the centroid allocation")]
    DegenerateB1(f64),

    #[error("POVM is not valid: {0}")]
    InvalidPovm(PovmDiagnostics),

    #[error("outcome probability {value:e} for outcome {outcome} is negative")]
    NegativeProbability { outcome: usize, value: f64 },

    #[error("outcome {outcome} has zero probability but non-zero slope; Fisher information is singular")]
    SingularFisher { outcome: usize },

    #[error("finite-difference step too large: Richardson disagreement {0:e}")]
    StepTooLarge(f64),

    #[error("separation {s} is below the smallest supported value {min}")]
    SeparationTooSmall { s: f64, min: f64 },

    #[error("mode truncation too small: captured norm deficit {0:e}")]
    TruncationTooSmall(f64),

    #[error("quantum Fisher information for parameter {0} vanishes")]
    ZeroQfi(usize),

    #[error("likelihood surface is flat; parameters are not identifiable")]
    NonIdentifiable,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("failed to read PSF samples: {0}")]
    Io(#[from] std::io::Error),

    #[error("failed to parse PSF samples: {0}")]
    Parse(String),
}

impl Error {
    /// True for errors caused by bad inputs rather than a numerical breakdown.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidGrid(_)
                | Error::OutOfRange { .. }
                | Error::InvalidPsf(_)
                | Error::UnsupportedOrder(_)
                | Error::AngleOutOfRange { .. }
                | Error::InvalidPovm(_)
                | Error::InvalidConfig(_)
                | Error::Io(_)
                | Error::Parse(_)
                | Error::SupportOverflow { .. }
                | Error::SeparationTooSmall { .. }
        )
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

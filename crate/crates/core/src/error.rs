use alloc::string::String;
use core::fmt;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument is outside the domain of a function.
    Domain {
        what: &'static str,
        value: f64,
    },
    InvalidMaterial {
        name: String,
        reason: &'static str,
    },
    DuplicateMaterial(String),
    UnknownMaterial(String),
    InvalidParams(&'static str),
    InvalidScene(&'static str),
    InvalidScanSpec(&'static str),
    InvalidScan(String),
    /// Two points coincide where a direction is required.
    DegenerateGeometry(&'static str),
    LengthMismatch {
        measured: usize,
        simulated: usize,
    },
    /// The measured vector has zero variance, so FVU is undefined.
    ConstantMeasurement,
    EmptyScan,
    /// Adaptive quadrature hit its evaluation cap.
    NonConvergence {
        evaluations: usize,
    },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { what, value } => write!(f, "{what} out of domain: {value}"),
            Error::InvalidMaterial { name, reason } => {
                write!(f, "invalid material `{name}`: {reason}")
            }
            Error::DuplicateMaterial(name) => write!(f, "duplicate material name `{name}`"),
            Error::UnknownMaterial(name) => write!(f, "unknown material `{name}`"),
            Error::InvalidParams(reason) => write!(f, "invalid lobe parameters: {reason}"),
            Error::InvalidScene(reason) => write!(f, "invalid scene: {reason}"),
            Error::InvalidScanSpec(reason) => write!(f, "invalid scan specification: {reason}"),
            Error::InvalidScan(reason) => write!(f, "invalid scan: {reason}"),
            Error::DegenerateGeometry(reason) => write!(f, "degenerate geometry: {reason}"),
            Error::LengthMismatch { measured, simulated } => {
                write!(f, "measured and simulated vectors differ in length ({measured} vs {simulated})")
            }
            Error::ConstantMeasurement => {
                write!(f, "measured powers are constant; FVU denominator is zero")
            }
            Error::EmptyScan => write!(f, "scan has no usable positions"),
            Error::NonConvergence { evaluations } => {
                write!(f, "quadrature did not converge within {evaluations} evaluations")
            }
        }
    }
}

impl core::error::Error for Error {}

use std::fmt;

use thiserror::Error;

/// What collapsed when the flow left the space of Kähler metrics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum SingularityKind {
    PsiCollapse,
    PhiCollapse,
    GradientBlowup,
}

impl fmt::Display for SingularityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            SingularityKind::PsiCollapse => "psi-collapse",
            SingularityKind::PhiCollapse => "phi-collapse",
            SingularityKind::GradientBlowup => "gradient-blowup",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("metric coefficients not positive: {which} = {value:e} at rho = {rho}")]
    NonKaehler {
        which: &'static str,
        rho: f64,
        value: f64,
    },
    #[error("grid too coarse: {points} points, need at least {required}")]
    GridTooCoarse { points: usize, required: usize },
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("grid must be strictly positive (rho_min = {rho_min})")]
    GridNotPositive { rho_min: f64 },
    #[error("rho interval [{lo}, {hi}] outside grid range [{grid_lo}, {grid_hi}]")]
    OutOfRange {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },
    #[error("rho = {rho} closer than two grid spacings to the boundary")]
    TooCloseToBoundary { rho: f64 },
    #[error("invalid base geometry: {0}")]
    InvalidBase(String),
    #[error("invalid regime parameters: {0}")]
    InvalidRegime(String),
    #[error("interpolation argument {arg} outside sampled range [{lo}, {hi}]")]
    InterpolationRangeExceeded { arg: f64, lo: f64, hi: f64 },
    #[error("flow singularity ({kind}) at t = {time}, rho = {location}")]
    Singularity {
        time: f64,
        location: f64,
        kind: SingularityKind,
    },
    #[error("time step {dt:e} exceeds the stability bound {bound:e} at t = {time}")]
    StabilityViolation { dt: f64, bound: f64, time: f64 },
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("nonzero constant of odd weight {weight}")]
    OddWeightConstant { weight: usize },
    #[error("invalid expansion: {0}")]
    InvalidExpansion(String),
    #[error("rescaled window maps outside the grid: {0}")]
    WindowOutsideGrid(String),
    #[error("rescaled horizon {needed} exceeds trajectory horizon {available}")]
    HorizonExceeded { needed: f64, available: f64 },
    #[error("sample lattices do not match: {0}")]
    LatticeMismatch(String),
    #[error("fit window holds {samples} samples, need at least {required}")]
    WindowTooSmall { samples: usize, required: usize },
    #[error("quantity vanishes identically on the fit window")]
    AllZeroQuantity,
    #[error("hypothesis not satisfied: {0}")]
    NotApplicable(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

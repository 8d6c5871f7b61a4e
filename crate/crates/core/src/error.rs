use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("{name} angle {value} rad is outside the open interval (-pi/2, pi/2)")]
    AngleOutOfRange { name: &'static str, value: f64 },
    #[error("direction vector has zero length")]
    ZeroDirection,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WavefrontError {
    #[error("cone slope h/r must be positive and finite, got {0}")]
    InvalidSlope(f64),
    #[error("cone gradient is undefined at the apex")]
    ApexSingularity,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:e} m)")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("Newton step reached the cone apex")]
    ApexSingularity,
    #[error("solver configuration field `{0}` must be positive")]
    InvalidConfig(&'static str),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthesisError {
    #[error("array field `{0}` must be positive")]
    InvalidArray(&'static str),
    #[error("element {index}: Newton solve failed ({cause}) and the minimization fallback gave no finite distance")]
    SolverFailure { index: usize, cause: SolverError },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("observation point {index} coincides with an array element")]
    CoincidentPoint { index: usize },
    #[error("observation point {index} is {distance:e} m from an element, below the {minimum:e} m element far-field limit")]
    TooClose {
        index: usize,
        distance: f64,
        minimum: f64,
    },
    #[error("excitation has {currents} currents but the array has {elements} elements")]
    LengthMismatch { currents: usize, elements: usize },
    #[error("invalid observation grid: {0}")]
    InvalidGrid(String),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("field grid is empty")]
    EmptyGrid,
    #[error("field grid carries no power")]
    ZeroPower,
    #[error("radius {radius} m is outside the usable range (minimum {minimum} m)")]
    RadiusOutOfRange { radius: f64, minimum: f64 },
    #[error("requested line does not lie within the grid")]
    LineOutsideGrid,
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid config field `{field}`: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            field: field.into(),
            message: message.into(),
        }
    }
}

use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("number of sites {0} outside the supported range [{min}, {max}]", min = crate::MIN_SITES, max = crate::MAX_SITES)]
    UnsupportedSize(usize),

    #[error("{name} = {value} is outside the domain of this operation ({reason})")]
    Domain {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    #[error("matrix is not Hermitian (max |A - A†| = {residual:e})")]
    NotHermitian { residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("could not resolve degenerate energy cluster {energies:?}")]
    Degeneracy { energies: Vec<f64> },

    #[error("internal consistency check `{check}` failed (residual {residual:e})")]
    Inconsistent { check: &'static str, residual: f64 },

    #[error("invalid projective measurement: {0}")]
    InvalidMeasurement(String),

    #[error("finite-difference derivative did not converge (relative disagreement {disagreement:e})")]
    DerivativeNotConverged { disagreement: f64 },

    #[error("closed form is singular at this point: {0}")]
    SingularPoint(&'static str),

    #[error("two-outcome measurement is degenerate (P(x1) = {p1})")]
    DegenerateMeasurement { p1: f64 },

    #[error("point (gamma = {gamma}, h = {field}) is too close to the critical line for the bosonic description")]
    NearCritical { gamma: f64, field: f64 },

    #[error("Fock cutoff {required} needed for the requested accuracy exceeds the cap {cap}")]
    Truncation { required: usize, cap: usize },

    #[error("objective is flat over the search interval; no maximum to locate")]
    NoMaximum,

    #[error("no level crossing found for N = {n_sites}, gamma = {gamma} in [0, {h_max}]")]
    NoCriticalLine { n_sites: usize, gamma: f64, h_max: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(name: &'static str, value: f64, reason: &'static str) -> Error {
    Error::Domain { name, value, reason }
}

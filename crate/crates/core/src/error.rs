use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {name} = {value:e} ({requirement})")]
    Domain {
        name: &'static str,
        value: f64,
        requirement: &'static str,
    },

    #[error("invalid configuration: {0}")]
    Invalid(String),

    #[error("steady state: no nonnegative real root of the photon-number cubic")]
    NoRoot,

    #[error("steady state residual {residual:e} exceeds {tolerance:e} on branch {branch}")]
    Residual {
        branch: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("requested branch {requested} but only {available} branch(es) exist")]
    MissingBranch {
        requested: &'static str,
        available: usize,
    },

    #[error(
        "detuning lock did not converge after {iterations} iterations: \
         bracket [{lo:e}, {hi:e}] rad/s, residual {residual:e} rad/s"
    )]
    LockFailed {
        iterations: usize,
        lo: f64,
        hi: f64,
        residual: f64,
    },

    #[error("phase undefined: output quadrature is zero at delta = {delta:e} rad/s")]
    UndefinedPhase { delta: f64 },

    #[error(
        "group delay mismatch at delta = {delta:e} rad/s: analytic {analytic:e} s, \
         finite-difference {numeric:e} s"
    )]
    DelayMismatch {
        delta: f64,
        analytic: f64,
        numeric: f64,
    },

    #[error("invalid grid: {0}")]
    Grid(String),

    #[error("integration step {dt:e} s exceeds limit {limit:e} s")]
    StepTooLarge { dt: f64, limit: f64 },

    #[error("mean-field amplitude diverged at t = {t:e} s (|a| = {amplitude:e}) on branch {branch}")]
    Divergence {
        t: f64,
        amplitude: f64,
        branch: usize,
    },

    #[error("trace not settled: DC drift {drift:e} over the last period; increase t_end")]
    Unsettled { drift: f64 },

    #[error("demodulation window needs {needed} samples, trace has {available}")]
    ShortTrace { needed: usize, available: usize },
}

pub(crate) fn ensure_positive(name: &'static str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            requirement: "must be positive and finite",
        })
    }
}

pub(crate) fn ensure_nonnegative(name: &'static str, value: f64) -> Result<()> {
    if value >= 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            name,
            value,
            requirement: "must be nonnegative and finite",
        })
    }
}

/// Errors serialize as their message so failed points stay readable in
/// JSON reports.
impl serde::Serialize for Error {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

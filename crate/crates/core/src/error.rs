use thiserror::Error;

/// Errors raised anywhere in the forward model, peak-time solvers or inversion.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum FdotError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("sphere radius undefined: vD*lambda^2 = {vd_lambda_sq:.6} is below |x_d - x_s|^2/4 = {quarter_sep_sq:.6}")]
    Geometry {
        vd_lambda_sq: f64,
        quarter_sep_sq: f64,
    },

    #[error("quadrature did not reach tolerance (estimated error {estimate:.3e}, requested {requested:.3e})")]
    Quadrature { estimate: f64, requested: f64 },

    #[error("peak not bracketed: maximum at grid boundary t = {t:.3} ps")]
    PeakNotBracketed { t: f64 },

    #[error("root not bracketed on [{lo}, {hi}]")]
    RootNotBracketed { lo: f64, hi: f64 },

    #[error("no convergence after {iterations} iterations (last t = {last:.6})")]
    NoConvergence { iterations: usize, last: f64 },

    #[error("validity condition failed: {0}")]
    Validity(String),

    #[error("distance parameter non-positive ({0:.6}); peak time too small for the expansion")]
    NonPositiveLambda(f64),

    #[error("degenerate tetrahedron: discriminant {discriminant:.6e} < 0")]
    DegenerateTetrahedron { discriminant: f64 },

    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<FdotError>,
    },

    #[error("io: {0}")]
    Io(String),

    #[error("config: {0}")]
    Config(String),
}

impl FdotError {
    pub(crate) fn at(self, stage: &'static str) -> Self {
        FdotError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Strips any stage labels.
    pub fn root_cause(&self) -> &FdotError {
        match self {
            FdotError::Stage { source, .. } => source.root_cause(),
            other => other,
        }
    }
}

impl From<std::io::Error> for FdotError {
    fn from(e: std::io::Error) -> Self {
        FdotError::Io(e.to_string())
    }
}

impl From<csv::Error> for FdotError {
    fn from(e: csv::Error) -> Self {
        FdotError::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, FdotError>;

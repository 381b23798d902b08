use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("kernel evaluated at the origin")]
    SingularKernel,

    #[error("curve is self-intersecting or unresolved (arc-chord constant {0:.3e} above cap)")]
    SelfIntersecting(f64),

    #[error("curves overlap: sampled minimum distance {0:.3e} below the disjointness floor")]
    CurvesOverlap(f64),

    #[error("operation `{0}` requires a closed curve")]
    NotClosed(&'static str),

    #[error("operation `{0}` requires an open curve")]
    NotOpen(&'static str),

    #[error("layer map degenerate at eps = {eps}: minimum Jacobian {min_jacobian:.3e}")]
    DegenerateLayer { eps: f64, min_jacobian: f64 },

    #[error(
        "injectivity certificate failed at eps = {eps}: worst ratio {ratio:.4e} < c0 = {c0:.4e}"
    )]
    CertificateFailed { eps: f64, ratio: f64, c0: f64 },

    #[error("quadrature not converged: coarse {coarse:?} vs fine {fine:?}")]
    QuadratureDivergence { coarse: [f64; 2], fine: [f64; 2] },

    #[error("linear solver failed: {0}")]
    Solver(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

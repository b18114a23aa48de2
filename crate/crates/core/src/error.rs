use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("parameter m = {m} outside the domain [0, 1)")]
    EllipticDomain { m: f64 },

    #[error("parameter m = {m} is within 1e-12 of the logarithmic singularity at m = 1")]
    EllipticNearSingular { m: f64 },

    #[error("quadrature did not reach tolerance {tolerance:e}: best estimate {estimate} with error {error:e}")]
    Convergence {
        estimate: f64,
        error: f64,
        tolerance: f64,
    },

    #[error("field point lies {distance:e} from a wire{}", loop_label(*.loop_index))]
    NearWire {
        distance: f64,
        loop_index: Option<usize>,
    },

    #[error("field point lies inside the flux-carrying tube of an ideal ring")]
    InsideSource,

    #[error("path meets the boundary of the spanning disk; perturb the path")]
    AmbiguousTopology,

    #[error("trajectories do not share endpoints (gap {gap:e})")]
    EndpointMismatch { gap: f64 },

    #[error("point coincides with the electron position")]
    CoincidentPoint,

    #[error("sampling too coarse: {per_period:.2} samples per fringe period (need at least 16)")]
    Undersampled { per_period: f64 },

    #[error("patterns are sampled on different screen grids")]
    GridMismatch,

    #[error("time {t} outside the trajectory span [{start}, {end}]")]
    OutsideSpan { t: f64, start: f64, end: f64 },
}

fn loop_label(index: Option<usize>) -> String {
    match index {
        Some(k) => format!(" (loop {k})"),
        None => String::new(),
    }
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    /// True for failures caused by numerics rather than by bad input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Convergence { .. })
    }

    pub(crate) fn with_loop_index(self, index: usize) -> Self {
        match self {
            Error::NearWire { distance, .. } => Error::NearWire {
                distance,
                loop_index: Some(index),
            },
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

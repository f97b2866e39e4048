use alloc::string::String;
use alloc::vec::Vec;

/// Failures raised by the engines. Every variant knows which module produced it.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("hilbert: basis of {dimension} states exceeds the cap of {cap}; lower the cutoff or the mode count")]
    DimensionTooLarge { dimension: u128, cap: usize },
    #[error("hilbert: invalid basis (modes={mode_count}, cutoff={photon_cutoff}); both must be at least 1")]
    InvalidBasis { mode_count: usize, photon_cutoff: usize },
    #[error("hilbert: mode index {mode} out of range for {mode_count} modes")]
    InvalidMode { mode: usize, mode_count: usize },
    #[error("hilbert: expected {expected} amplitudes, got {got}")]
    AmplitudeCount { expected: usize, got: usize },
    #[error("hilbert: coherent tail weight {tail:.3e} exceeds tolerance {tol:.1e}; use a cutoff of at least {required_cutoff}")]
    TruncationExceeded { tail: f64, tol: f64, required_cutoff: usize },
    #[error("hilbert: {photons} photons do not fit under cutoff {cutoff}")]
    CutoffViolation { photons: usize, cutoff: usize },
    #[error("protocol: not enough ports: {requested} output modes requested but only {ports} ports")]
    NotEnoughPorts { requested: usize, ports: usize },
    #[error("protocol: input magnitude of mode {mode} must be positive and finite")]
    ZeroMagnitude { mode: usize },
    #[error("protocol: {0}")]
    InvalidPlan(String),
    #[error("protocol: invalid target: {0}")]
    InvalidTarget(String),
    #[error("protocol: missing records for entries {}", .0.join(", "))]
    MissingRecords(Vec<String>),
    #[error("protocol: invalid noise configuration: {0}")]
    InvalidNoise(String),
    #[error("extrapolation: ladder factor must exceed 1, got {0}")]
    InvalidFactor(f64),
    #[error("extrapolation: {0}")]
    InvalidLadder(String),
    #[error("extrapolation: estimate {index} at power {got} does not match ladder power {expected}")]
    PowerMismatch { index: usize, expected: f64, got: f64 },
    #[error("extrapolation: error-bound series did not converge within {terms} terms")]
    BoundNotConverged { terms: usize },
    #[error("extrapolation: only {points} usable points for order {order}; need at least 4")]
    TooFewPoints { order: usize, points: usize },
    #[error("waveguide: {0}")]
    InvalidParameter(String),
    #[error("waveguide: quadrature not converged, relative change {residual:.3e} above {tol:.1e}")]
    QuadratureNotConverged { residual: f64, tol: f64 },
    #[error("deconvolution: Hermite order {0} above the supported maximum of 200")]
    HermiteOrder(usize),
    #[error("deconvolution: Hermite value overflowed at order {order}, x = {x}")]
    HermiteOverflow { order: usize, x: f64 },
    #[error("deconvolution: insufficient grid coverage: {0}")]
    GridCoverage(String),
    #[error("deconvolution: {0}")]
    InvalidKernel(String),
    #[error("imperfections: perturbed power {power} is not positive")]
    NonPositivePower { power: f64 },
    #[error("imperfections: {0}")]
    InvalidStudy(String),
}

impl Error {
    /// Name of the module that raised the error.
    pub fn module(&self) -> &'static str {
        use Error::*;
        match self {
            DimensionTooLarge { .. }
            | InvalidBasis { .. }
            | InvalidMode { .. }
            | AmplitudeCount { .. }
            | TruncationExceeded { .. }
            | CutoffViolation { .. } => "hilbert",
            NotEnoughPorts { .. }
            | ZeroMagnitude { .. }
            | InvalidPlan(_)
            | InvalidTarget(_)
            | MissingRecords(_)
            | InvalidNoise(_) => "protocol",
            InvalidFactor(_)
            | InvalidLadder(_)
            | PowerMismatch { .. }
            | BoundNotConverged { .. }
            | TooFewPoints { .. } => "extrapolation",
            InvalidParameter(_) | QuadratureNotConverged { .. } => "waveguide",
            HermiteOrder(_) | HermiteOverflow { .. } | GridCoverage(_) | InvalidKernel(_) => {
                "deconvolution"
            }
            NonPositivePower { .. } | InvalidStudy(_) => "imperfections",
        }
    }
}

pub type Result<T> = core::result::Result<T, Error>;

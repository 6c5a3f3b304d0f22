//! Error type shared by every module in the crate.

use thiserror::Error;

/// Largest evanescent exponent `p*width` the solvers accept before the
/// amplitude recursion would overflow `f64`.
pub const MAX_EVANESCENT_EXPONENT: f64 = 700.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Energy sits inside the guard band around a segment threshold `E = V`.
    /// Closed forms and the amplitude solver are ill-conditioned there; use
    /// the one-sided limit helpers instead.
    #[error("energy {energy} is within the threshold guard band of V = {v}{}", segment.map(|s| format!(" (segment {s})")).unwrap_or_default())]
    Threshold {
        energy: f64,
        v: f64,
        segment: Option<usize>,
    },

    /// Accumulated evanescent exponent too large for the amplitude recursion.
    #[error("evanescent exponent p*width = {exponent:.1} exceeds {MAX_EVANESCENT_EXPONENT}; amplitudes would overflow")]
    EvanescentOverflow { exponent: f64 },

    /// Input failed validation (non-finite, non-positive, malformed grid...).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The requested quantity is not defined for these inputs.
    #[error("domain: {0}")]
    Domain(String),

    /// Transmitted amplitude has underflowed; its phase carries no information.
    #[error("transmitted amplitude below 1e-300; transmission phase undefined")]
    VanishingTransmission,

    /// Reflected amplitude vanishes (perfect transmission); its phase is
    /// undefined at the resonance point itself.
    #[error("reflected amplitude below 1e-300 (perfect transmission); reflection phase undefined")]
    PerfectTransmission,

    /// The region past a step with `E < V` carries no propagating wave, so no
    /// real traversal time exists for it.
    #[error("region beyond the step is evanescent at E = {energy} < V = {v}; no real traversal time")]
    EvanescentRegion { energy: f64, v: f64 },

    /// The light speed `c` is required but the context does not carry one.
    #[error("light speed c required but not set on the particle context")]
    MissingLightSpeed,

    /// Asymptotic formula requested outside its regime of validity.
    #[error("outside asymptotic regime: {0}")]
    OutsideAsymptoticRegime(String),

    /// Adaptive quadrature hit its depth limit before reaching tolerance.
    #[error("quadrature did not converge: estimated error {estimate:.3e} above tolerance {tolerance:.3e}")]
    QuadratureNonConvergence { estimate: f64, tolerance: f64 },

    /// Richardson extrapolation failed to reach the requested accuracy.
    #[error("numeric derivative did not converge: relative error {relative_error:.3e} above {limit:.3e}")]
    DerivativeNonConvergence { relative_error: f64, limit: f64 },

    /// The phase branch jumped between closely spaced probe energies; the
    /// numeric derivative would straddle a branch cut or a sharp resonance.
    #[error("phase branch jump of {jump:.3} rad between probe energies near E = {energy}")]
    BranchJump { energy: f64, jump: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

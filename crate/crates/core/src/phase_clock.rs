//! Traversal times read off the energy derivative of scattering phases.
//!
//! A quantum clock coupled to the particle advances by the derivative of the
//! accumulated phase with respect to energy, `T = d(delta)/dE`. This module
//! carries the closed forms for free flight, the potential step (round trip)
//! and the rectangular barrier in both tunneling and over-the-barrier
//! regimes, together with the asymptotic limits, resonance special cases and
//! the superluminal bookkeeping. Sign conventions are fixed so free
//! propagation over a distance `a` always reads `+a/v`.
//!
//! All closed forms are evaluated in scaled form (`tanh`/`sech^2` instead of
//! `sinh`/`cosh^2`) so wide opaque barriers never overflow.

use crate::error::{Error, Result};
use crate::kinematics::{
    classify_regime, within_threshold_guard, ParticleContext, RegimeReport, ANGULAR_TOLERANCE,
    DEFAULT_ETA,
};
use crate::scattering::{ScatteringSolution, AMPLITUDE_FLOOR};

/// Reflected amplitudes at or below this are treated as exact transparency:
/// at a resonance the residual `|A|` is pure floating-point noise (roundoff
/// in `sin(beta a)`), orders of magnitude above the underflow floor but with
/// no physical phase left in it.
pub const REFLECTION_FLOOR: f64 = 1e-12;

/// Which definition produced a [`TimeResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimeDefinition {
    /// Clock phase time `d(delta)/dE`.
    Phase,
    /// Weak-measurement (post-selected) traversal time.
    Steinberg,
    /// Probability residence time: integrated density over incident flux.
    Dwell,
}

/// Which scattering channel the time refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Channel {
    Transmit,
    Reflect,
    RoundTrip,
    /// Unconditioned on the outcome; the dwell time counts both channels.
    Both,
}

/// How the number was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    ClosedForm,
    NumericDerivative,
    Quadrature,
    Asymptotic,
}

/// A traversal-time reading with its provenance and regime flags.
#[derive(Debug, Clone, Copy)]
pub struct TimeResult {
    pub value: f64,
    pub definition: TimeDefinition,
    pub channel: Channel,
    pub method: Method,
    pub regime: RegimeReport,
    /// Absolute error estimate for numerically obtained values.
    pub error_estimate: Option<f64>,
}

/// Spatial window `[x_from, x_to]` over which a residence time is taken.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightWindow {
    x_from: f64,
    x_to: f64,
}

impl FlightWindow {
    pub fn new(x_from: f64, x_to: f64) -> Result<Self> {
        if !(x_from.is_finite() && x_to.is_finite() && x_from < x_to) {
            return Err(Error::Invalid(format!(
                "flight window needs finite x_from < x_to, got [{x_from}, {x_to}]"
            )));
        }
        Ok(Self { x_from, x_to })
    }

    pub fn x_from(&self) -> f64 {
        self.x_from
    }

    pub fn x_to(&self) -> f64 {
        self.x_to
    }

    pub fn width(&self) -> f64 {
        self.x_to - self.x_from
    }
}

/// Keeps a phase observable on one continuous branch across a sweep by
/// nearest-branch selection: each raw (principal-value) phase is shifted by
/// the multiple of 2*pi that lands closest to the previous sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTracker {
    prev: Option<f64>,
}

impl PhaseTracker {
    pub fn new() -> Self {
        Self::default()
    }

    /// Unwrap `raw` onto the tracked branch and remember it.
    pub fn track(&mut self, raw: f64) -> f64 {
        let two_pi = std::f64::consts::TAU;
        let value = match self.prev {
            None => raw,
            Some(prev) => raw + two_pi * ((prev - raw) / two_pi).round(),
        };
        self.prev = Some(value);
        value
    }

    pub fn reset(&mut self) {
        self.prev = None;
    }
}

fn validate_width(a: f64) -> Result<()> {
    if !(a.is_finite() && a > 0.0) {
        return Err(Error::Invalid(format!("width must be finite and > 0, got {a}")));
    }
    Ok(())
}

fn validate_height(v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::Invalid(format!("potential must be finite, got {v}")));
    }
    Ok(())
}

/// Clock reading for free flight over `distance`: exactly `distance / v`.
pub fn free_flight_time(ctx: &ParticleContext, distance: f64) -> Result<TimeResult> {
    validate_width(distance)?;
    let regime = classify_regime(ctx, 0.0, distance, DEFAULT_ETA)?;
    Ok(TimeResult {
        value: distance / ctx.velocity(),
        definition: TimeDefinition::Phase,
        channel: Channel::Transmit,
        method: Method::ClosedForm,
        regime,
        error_estimate: None,
    })
}

/// Round-trip clock reading for reflection off a step of height `v > 0`,
/// starting and ending a distance `standoff` before the step.
///
/// Below threshold the reflection phase contributes an extra `2m/(kp)`, the
/// time spent penetrating a depth `~1/p` into the wall; above threshold the
/// reflected amplitude is real and the round trip is pure flight time.
pub fn step_round_trip_time(ctx: &ParticleContext, v: f64, standoff: f64) -> Result<TimeResult> {
    validate_height(v)?;
    if v <= 0.0 {
        return Err(Error::Domain(format!("step round trip needs V > 0, got {v}")));
    }
    if !(standoff.is_finite() && standoff >= 0.0) {
        return Err(Error::Invalid(format!("standoff must be finite and >= 0, got {standoff}")));
    }
    let e = ctx.energy();
    if within_threshold_guard(e, v) {
        return Err(Error::Threshold { energy: e, v, segment: None });
    }
    let k = ctx.wavenumber();
    let flight = 2.0 * standoff / ctx.velocity();
    let value = if e < v {
        let p = (2.0 * ctx.mass() * (v - e)).sqrt();
        flight + 2.0 * ctx.mass() / (k * p)
    } else {
        flight
    };
    let regime = classify_regime(ctx, v, 0.0, DEFAULT_ETA)?;
    Ok(TimeResult {
        value,
        definition: TimeDefinition::Phase,
        channel: Channel::RoundTrip,
        method: Method::ClosedForm,
        regime,
        error_estimate: None,
    })
}

/// One-way crossing time from `b_before` left of a step to `b_beyond` past
/// it. Above threshold this is plain patched flight, `b/v + b'/v'` with
/// `v' = beta/m`. Below threshold the far side carries no propagating wave
/// and no real traversal time exists; that is reported as a distinct error
/// rather than a complex number.
pub fn step_crossing_time(
    ctx: &ParticleContext,
    v: f64,
    b_before: f64,
    b_beyond: f64,
) -> Result<TimeResult> {
    validate_height(v)?;
    if v <= 0.0 {
        return Err(Error::Domain(format!("step crossing needs V > 0, got {v}")));
    }
    if !(b_before.is_finite() && b_before >= 0.0 && b_beyond.is_finite() && b_beyond >= 0.0) {
        return Err(Error::Invalid("crossing distances must be finite and >= 0".into()));
    }
    let e = ctx.energy();
    if within_threshold_guard(e, v) {
        return Err(Error::Threshold { energy: e, v, segment: None });
    }
    if e < v {
        return Err(Error::EvanescentRegion { energy: e, v });
    }
    let v_out = ctx.velocity();
    let v_in = (2.0 * ctx.mass() * (e - v)).sqrt() / ctx.mass();
    let regime = classify_regime(ctx, v, 0.0, DEFAULT_ETA)?;
    Ok(TimeResult {
        value: b_before / v_out + b_beyond / v_in,
        definition: TimeDefinition::Phase,
        channel: Channel::Transmit,
        method: Method::ClosedForm,
        regime,
        error_estimate: None,
    })
}

/// Transmission phase on a branch continuous in energy.
///
/// The raw principal value of the exit-face amplitude is referenced against
/// the propagating baseline (the phase accumulated crossing propagating
/// interior regions), which keeps single-structure phases continuous through
/// resonances and returns exactly `k*a` for free flight of any length. For
/// multi-segment cavities sweep-level continuity should additionally go
/// through a [`PhaseTracker`].
pub fn transmission_phase(sol: &ScatteringSolution) -> Result<f64> {
    if sol.transmission.norm() < AMPLITUDE_FLOOR {
        return Err(Error::VanishingTransmission);
    }
    let baseline = sol.propagating_baseline();
    let residual = (sol.transmission * num_complex::Complex64::from_polar(1.0, -baseline)).arg();
    Ok(baseline + residual)
}

/// Reflection phase (principal value) at the entry face.
///
/// Undefined at perfect-transmission resonances, where the reflected
/// amplitude vanishes; that case is reported as
/// [`Error::PerfectTransmission`].
pub fn reflection_phase(sol: &ScatteringSolution) -> Result<f64> {
    if sol.reflection.norm() < REFLECTION_FLOOR {
        return Err(Error::PerfectTransmission);
    }
    Ok(sol.reflection.arg())
}

/// Barrier traversal time from the transmission-phase derivative, exact for
/// a rectangular region of height `v` (any sign) and width `a`.
///
/// Below the barrier,
/// `T = 2m [ k(p^2-k^2) a sech^2(pa) + (p^2+k^2)^2 tanh(pa)/(kp) ]
///        / [ (p^2+k^2)^2 - (p^2-k^2)^2 sech^2(pa) ]`,
/// which saturates at the opaque-barrier plateau `1/sqrt(E(V-E))`. Above it
/// (and for wells), the continuation `p -> i beta` gives
/// `T = 2m [ k(k^2+beta^2) a - (k^2-beta^2)^2 sin(2 beta a)/(2 k beta) ]
///        / [ (k^2+beta^2)^2 - (k^2-beta^2)^2 cos^2(beta a) ]`.
/// Both reduce to `a/v` as `V -> 0`.
pub fn barrier_phase_time(ctx: &ParticleContext, v: f64, a: f64) -> Result<TimeResult> {
    validate_height(v)?;
    validate_width(a)?;
    let e = ctx.energy();
    if within_threshold_guard(e, v) {
        return Err(Error::Threshold { energy: e, v, segment: None });
    }
    let m = ctx.mass();
    let k = ctx.wavenumber();
    let k2 = k * k;

    let value = if e < v {
        let p = (2.0 * m * (v - e)).sqrt();
        let p2 = p * p;
        let sum = p2 + k2;
        let diff = p2 - k2;
        let sech2 = {
            let c = (p * a).cosh();
            1.0 / (c * c)
        };
        let tanh = (p * a).tanh();
        let num = k * diff * a * sech2 + sum * sum * tanh / (k * p);
        let den = sum * sum - diff * diff * sech2;
        2.0 * m * num / den
    } else {
        let beta = (2.0 * m * (e - v)).sqrt();
        let b2 = beta * beta;
        let sum = k2 + b2;
        let diff = k2 - b2;
        let (num, den) = if diff == 0.0 {
            // V = 0: free flight, avoid 0/0 from the 1/beta factor.
            (k * sum * a, sum * sum)
        } else {
            let angle = beta * a;
            (
                k * sum * a - diff * diff * (2.0 * angle).sin() / (2.0 * k * beta),
                sum * sum - diff * diff * angle.cos().powi(2),
            )
        };
        2.0 * m * num / den
    };

    let regime = classify_regime(ctx, v, a, DEFAULT_ETA)?;
    Ok(TimeResult {
        value,
        definition: TimeDefinition::Phase,
        channel: Channel::Transmit,
        method: Method::ClosedForm,
        regime,
        error_estimate: None,
    })
}

/// Thin-region expansion of [`barrier_phase_time`]:
/// `T = (ma/2k)(3 + p^2/k^2)` below the barrier and
/// `(ma/2k)(3 - beta^2/k^2)` above it. Enforced for `pa < 0.3`
/// (resp. `beta a < 0.3`), where the neglected terms are below a percent.
pub fn thin_barrier_time(ctx: &ParticleContext, v: f64, a: f64) -> Result<TimeResult> {
    validate_height(v)?;
    validate_width(a)?;
    let e = ctx.energy();
    if within_threshold_guard(e, v) {
        return Err(Error::Threshold { energy: e, v, segment: None });
    }
    let m = ctx.mass();
    let k = ctx.wavenumber();
    let k2 = k * k;
    let value = if e < v {
        let p = (2.0 * m * (v - e)).sqrt();
        if p * a >= 0.3 {
            return Err(Error::OutsideAsymptoticRegime(format!(
                "thin-region expansion needs pa < 0.3, got pa = {:.3}",
                p * a
            )));
        }
        (m * a / (2.0 * k)) * (3.0 + p * p / k2)
    } else {
        let beta = (2.0 * m * (e - v)).sqrt();
        if beta * a >= 0.3 && v != 0.0 {
            return Err(Error::OutsideAsymptoticRegime(format!(
                "thin-region expansion needs beta*a < 0.3, got beta*a = {:.3}",
                beta * a
            )));
        }
        (m * a / (2.0 * k)) * (3.0 - beta * beta / k2)
    };
    let regime = classify_regime(ctx, v, a, DEFAULT_ETA)?;
    Ok(TimeResult {
        value,
        definition: TimeDefinition::Phase,
        channel: Channel::Transmit,
        method: Method::Asymptotic,
        regime,
        error_estimate: None,
    })
}

/// Opaque-barrier plateau of the traversal time, `1/sqrt(E(V-E))`:
/// independent of the width, the saturation value the phase time approaches
/// as `pa` grows. Minimized over energy at `E = V/2`, where it equals `1/E`.
pub fn hartman_limit(ctx: &ParticleContext, v: f64) -> Result<TimeResult> {
    validate_height(v)?;
    let e = ctx.energy();
    if within_threshold_guard(e, v) {
        return Err(Error::Threshold { energy: e, v, segment: None });
    }
    if e >= v {
        return Err(Error::Domain(format!(
            "opaque-barrier plateau needs E < V, got E = {e}, V = {v}"
        )));
    }
    let regime = classify_regime(ctx, v, 0.0, DEFAULT_ETA)?;
    Ok(TimeResult {
        value: 1.0 / (e * (v - e)).sqrt(),
        definition: TimeDefinition::Phase,
        channel: Channel::Transmit,
        method: Method::Asymptotic,
        regime,
        error_estimate: None,
    })
}

/// Effective traversal velocity `a / T`. A vanishing time (the point-limit
/// of shrinking structures) maps to `+inf`.
pub fn effective_velocity(time: &TimeResult, width: f64) -> f64 {
    if time.value == 0.0 {
        f64::INFINITY
    } else {
        width / time.value
    }
}

/// Width at which tunneling turns nominally superluminal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuperluminalOnset {
    /// Critical width `a* = 2mc/(kp)`.
    pub width: f64,
    /// The same onset as the dimensionless opacity `p a* = 2mc/k`, twice the
    /// ratio of the reduced de Broglie wavelength to the reduced Compton
    /// wavelength.
    pub opacity: f64,
}

/// Onset width beyond which the saturated traversal time implies `a/T > c`.
///
/// Requires a light speed on the context and a tunneling configuration;
/// above the barrier the effective velocity stays below the classical one
/// and no onset exists.
pub fn superluminal_threshold(ctx: &ParticleContext, v: f64) -> Result<SuperluminalOnset> {
    let c = ctx.light_speed().ok_or(Error::MissingLightSpeed)?;
    validate_height(v)?;
    let e = ctx.energy();
    if within_threshold_guard(e, v) {
        return Err(Error::Threshold { energy: e, v, segment: None });
    }
    if e >= v {
        return Err(Error::Domain(format!(
            "superluminal onset exists only below the barrier, got E = {e}, V = {v}"
        )));
    }
    let m = ctx.mass();
    let k = ctx.wavenumber();
    let p = (2.0 * m * (v - e)).sqrt();
    Ok(SuperluminalOnset { width: 2.0 * m * c / (k * p), opacity: 2.0 * m * c / k })
}

/// An over-the-barrier transparency resonance `beta a = n pi`.
#[derive(Debug, Clone, Copy)]
pub struct ResonancePoint {
    /// Resonant width `a = n pi / beta`.
    pub width: f64,
    pub time: TimeResult,
    /// `a / T = v (E - V)/(E - V/2)`: vanishes toward threshold, so the
    /// crossing is never superluminal.
    pub effective_velocity: f64,
}

/// Time at the `n`-th transparency resonance for `E > V`:
/// `T = m a (k^2 + beta^2) / (2 k beta^2)` at width `a = n pi / beta`.
pub fn resonance_time(ctx: &ParticleContext, v: f64, order: u32) -> Result<ResonancePoint> {
    validate_height(v)?;
    if order == 0 {
        return Err(Error::Invalid("resonance order must be >= 1".into()));
    }
    let e = ctx.energy();
    if within_threshold_guard(e, v) {
        return Err(Error::Threshold { energy: e, v, segment: None });
    }
    if e <= v {
        return Err(Error::Domain(format!("resonances need E > V, got E = {e}, V = {v}")));
    }
    let m = ctx.mass();
    let k = ctx.wavenumber();
    let beta = (2.0 * m * (e - v)).sqrt();
    let width = order as f64 * std::f64::consts::PI / beta;
    let value = m * width * (k * k + beta * beta) / (2.0 * k * beta * beta);
    let regime = classify_regime(ctx, v, width, DEFAULT_ETA)?;
    let time = TimeResult {
        value,
        definition: TimeDefinition::Phase,
        channel: Channel::Transmit,
        method: Method::ClosedForm,
        regime,
        error_estimate: None,
    };
    Ok(ResonancePoint { width, time, effective_velocity: width / value })
}

/// An over-the-barrier anti-resonance `cos(beta a) = 0`.
#[derive(Debug, Clone, Copy)]
pub struct AntiResonancePoint {
    pub time: TimeResult,
    /// `a / T = (k^2 + beta^2)/(2mk)`; approaches `v/2` as `E -> V` and the
    /// classical velocity from below as `E` grows.
    pub effective_velocity: f64,
}

/// Time at an anti-resonance width (`cos(beta a) = 0` within tolerance),
/// where the over-the-barrier expression collapses to the exact
/// `T = 2mka/(k^2 + beta^2) = ka/(2E - V)`.
pub fn antiresonance_time(ctx: &ParticleContext, v: f64, a: f64) -> Result<AntiResonancePoint> {
    validate_height(v)?;
    validate_width(a)?;
    let e = ctx.energy();
    if within_threshold_guard(e, v) {
        return Err(Error::Threshold { energy: e, v, segment: None });
    }
    if e <= v {
        return Err(Error::Domain(format!("anti-resonances need E > V, got E = {e}, V = {v}")));
    }
    let m = ctx.mass();
    let k = ctx.wavenumber();
    let beta = (2.0 * m * (e - v)).sqrt();
    if (beta * a).cos().abs() > ANGULAR_TOLERANCE {
        return Err(Error::Domain(format!(
            "width is not an anti-resonance: cos(beta*a) = {:.3e}",
            (beta * a).cos()
        )));
    }
    let value = 2.0 * m * k * a / (k * k + beta * beta);
    let regime = classify_regime(ctx, v, a, DEFAULT_ETA)?;
    let time = TimeResult {
        value,
        definition: TimeDefinition::Phase,
        channel: Channel::Transmit,
        method: Method::ClosedForm,
        regime,
        error_estimate: None,
    };
    Ok(AntiResonancePoint { time, effective_velocity: a / value })
}

/// How a delta-family sequence of shrinking barriers holds its strength.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DeltaScaling {
    /// `V = C / a^2`: opacity `pa` tends to a constant and the traversal
    /// time vanishes with the width.
    WidthSquared,
    /// `V = C / a`: the conventional delta limit with `V*a` held fixed.
    Width,
}

/// Traversal time for one member of a delta-family: a barrier of width `a`
/// whose height is set by the strength `C` under the chosen scaling.
pub fn delta_family_time(
    ctx: &ParticleContext,
    strength: f64,
    a: f64,
    scaling: DeltaScaling,
) -> Result<TimeResult> {
    validate_width(a)?;
    if !strength.is_finite() {
        return Err(Error::Invalid(format!("strength must be finite, got {strength}")));
    }
    let v = match scaling {
        DeltaScaling::WidthSquared => strength / (a * a),
        DeltaScaling::Width => strength / a,
    };
    barrier_phase_time(ctx, v, a)
}

/// One-sided limits a caller can use at a refused threshold point.
#[derive(Debug, Clone, Copy)]
pub struct ThresholdLimits {
    /// Evaluated at `E = V (1 - 1e-6)`.
    pub below: TimeResult,
    /// Evaluated at `E = V (1 + 1e-6)`.
    pub above: TimeResult,
}

/// Barrier traversal times just below and just above the threshold `E = V`,
/// offered in place of the refused on-threshold evaluation.
pub fn threshold_limits(mass: f64, v: f64, a: f64) -> Result<ThresholdLimits> {
    if !(v.is_finite() && v > 0.0) {
        return Err(Error::Invalid(format!("threshold limits need V > 0, got {v}")));
    }
    validate_width(a)?;
    let offset = 1e-6;
    let below_ctx = ParticleContext::new(mass, v * (1.0 - offset))?;
    let above_ctx = ParticleContext::new(mass, v * (1.0 + offset))?;
    Ok(ThresholdLimits {
        below: barrier_phase_time(&below_ctx, v, a)?,
        above: barrier_phase_time(&above_ctx, v, a)?,
    })
}

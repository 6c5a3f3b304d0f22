//! Particle state, wavenumbers and regime classification.
//!
//! Natural units with hbar = 1 throughout: `k = sqrt(2mE)` outside the
//! structure, `p = sqrt(2m(V-E))` inside an evanescent region and
//! `beta = sqrt(2m(E-V))` inside a propagating one.

use crate::error::{Error, Result};

/// Relative half-width of the guard band around a segment threshold `E = V`.
/// Inside the band the standard formulas are refused.
pub const THRESHOLD_GUARD: f64 = 1e-12;

/// Default fraction used by [`classify_regime`] for the near-zero-energy and
/// near-threshold warnings.
pub const DEFAULT_ETA: f64 = 0.05;

/// Default angular tolerance (radians on `beta*a`) for flagging resonance and
/// anti-resonance points.
pub const ANGULAR_TOLERANCE: f64 = 1e-6;

/// Incident particle: mass, total energy and an optional light speed used
/// only for superluminal bookkeeping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParticleContext {
    mass: f64,
    energy: f64,
    light_speed: Option<f64>,
}

impl ParticleContext {
    /// A particle with mass `m > 0` and energy `E > 0`, no light speed set.
    pub fn new(mass: f64, energy: f64) -> Result<Self> {
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::Invalid(format!("mass must be finite and > 0, got {mass}")));
        }
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::Invalid(format!("energy must be finite and > 0, got {energy}")));
        }
        Ok(Self { mass, energy, light_speed: None })
    }

    /// Same as [`ParticleContext::new`] but with a light speed `c > 0` for
    /// effective-velocity comparisons.
    pub fn with_light_speed(mass: f64, energy: f64, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::Invalid(format!("light speed must be finite and > 0, got {c}")));
        }
        let mut ctx = Self::new(mass, energy)?;
        ctx.light_speed = Some(c);
        Ok(ctx)
    }

    /// Copy of this context at a different energy; keeps mass and light speed.
    pub fn at_energy(&self, energy: f64) -> Result<Self> {
        if !(energy.is_finite() && energy > 0.0) {
            return Err(Error::Invalid(format!("energy must be finite and > 0, got {energy}")));
        }
        Ok(Self { energy, ..*self })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn light_speed(&self) -> Option<f64> {
        self.light_speed
    }

    /// Free-space wavenumber `k = sqrt(2mE)`.
    pub fn wavenumber(&self) -> f64 {
        (2.0 * self.mass * self.energy).sqrt()
    }

    /// Classical velocity `v = k/m`.
    pub fn velocity(&self) -> f64 {
        self.wavenumber() / self.mass
    }
}

/// Wavenumbers for one region height `V`: `k` outside, and exactly one of
/// `p` (evanescent, `E < V`) or `beta` (propagating, `E > V`) inside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavenumbers {
    pub k: f64,
    pub p: Option<f64>,
    pub beta: Option<f64>,
}

/// True when `energy` falls inside the threshold guard band of `v`.
pub fn within_threshold_guard(energy: f64, v: f64) -> bool {
    v != 0.0 && (energy - v).abs() < THRESHOLD_GUARD * v.abs()
}

/// Wavenumbers for a particle meeting a region of height `V`.
///
/// Refuses energies inside the threshold guard band `|E - V| < 1e-12 |V|`,
/// where both `p` and `beta` lose all significant digits.
pub fn wavenumbers(ctx: &ParticleContext, v: f64) -> Result<Wavenumbers> {
    if !v.is_finite() {
        return Err(Error::Invalid(format!("potential must be finite, got {v}")));
    }
    if within_threshold_guard(ctx.energy(), v) {
        return Err(Error::Threshold { energy: ctx.energy(), v, segment: None });
    }
    let two_m = 2.0 * ctx.mass();
    let k = (two_m * ctx.energy()).sqrt();
    if ctx.energy() < v {
        Ok(Wavenumbers { k, p: Some((two_m * (v - ctx.energy())).sqrt()), beta: None })
    } else {
        Ok(Wavenumbers { k, p: None, beta: Some((two_m * (ctx.energy() - v)).sqrt()) })
    }
}

/// Classical velocity `v = k/m` of the incident particle.
pub fn classical_velocity(ctx: &ParticleContext) -> f64 {
    ctx.velocity()
}

/// Coarse regime of a single-height scattering problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Free,
    SubBarrier,
    AboveBarrier,
    Threshold,
}

impl Regime {
    /// Stable lowercase token, used in CSV output and reports.
    pub fn token(&self) -> &'static str {
        match self {
            Regime::Free => "free",
            Regime::SubBarrier => "sub_barrier",
            Regime::AboveBarrier => "above_barrier",
            Regime::Threshold => "threshold",
        }
    }
}

/// Regime plus the warning and resonance flags attached to every time result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    pub regime: Regime,
    /// `E < eta * V`: clock readings diverge as the energy vanishes.
    pub near_zero_energy: bool,
    /// `|E - V| < eta * V`: closed forms lose accuracy approaching threshold.
    pub near_threshold: bool,
    /// `n >= 1` when `beta * a` sits within the angular tolerance of `n*pi`.
    pub resonance_order: Option<u32>,
    /// `cos(beta * a)` within the angular tolerance of zero.
    pub anti_resonance: bool,
}

/// Classify `(E, V, a)` with warning fraction `eta`, using the default
/// angular tolerance for the resonance flags.
pub fn classify_regime(ctx: &ParticleContext, v: f64, width: f64, eta: f64) -> Result<RegimeReport> {
    classify_regime_with_angular_tol(ctx, v, width, eta, ANGULAR_TOLERANCE)
}

/// [`classify_regime`] with an explicit angular tolerance on `beta * a`.
pub fn classify_regime_with_angular_tol(
    ctx: &ParticleContext,
    v: f64,
    width: f64,
    eta: f64,
    angular_tol: f64,
) -> Result<RegimeReport> {
    if !v.is_finite() {
        return Err(Error::Invalid(format!("potential must be finite, got {v}")));
    }
    if !(width.is_finite() && width >= 0.0) {
        return Err(Error::Invalid(format!("width must be finite and >= 0, got {width}")));
    }
    if !(eta.is_finite() && eta > 0.0 && eta <= 0.5) {
        return Err(Error::Invalid(format!("eta must lie in (0, 0.5], got {eta}")));
    }
    if !(angular_tol.is_finite() && angular_tol > 0.0) {
        return Err(Error::Invalid(format!("angular tolerance must be > 0, got {angular_tol}")));
    }

    let e = ctx.energy();
    let regime = if v == 0.0 {
        Regime::Free
    } else if within_threshold_guard(e, v) {
        Regime::Threshold
    } else if e < v {
        Regime::SubBarrier
    } else {
        Regime::AboveBarrier
    };

    let near_zero_energy = v > 0.0 && e < eta * v;
    let near_threshold = v > 0.0 && (e - v).abs() < eta * v;

    let mut resonance_order = None;
    let mut anti_resonance = false;
    if regime == Regime::AboveBarrier && width > 0.0 {
        let beta = (2.0 * ctx.mass() * (e - v)).sqrt();
        let angle = beta * width;
        let n = (angle / std::f64::consts::PI).round();
        if n >= 1.0 && (angle - n * std::f64::consts::PI).abs() <= angular_tol {
            resonance_order = Some(n as u32);
        }
        let half_offset = (angle.rem_euclid(std::f64::consts::PI) - std::f64::consts::FRAC_PI_2).abs();
        anti_resonance = half_offset <= angular_tol;
    }

    Ok(RegimeReport { regime, near_zero_energy, near_threshold, resonance_order, anti_resonance })
}

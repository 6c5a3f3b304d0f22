//! Brute-force cross-checks for every closed form in the crate.
//!
//! The closed-form traversal times all come from differentiating a
//! scattering phase with respect to energy. This module redoes that
//! derivative the blunt way — solve the scattering problem at nearby
//! energies with the general piecewise solver, unwrap the phase, central
//! difference, Richardson extrapolation — sharing no algebra with the
//! closed forms. [`verify_identities`] then sweeps a grid and scores every
//! stated identity, producing the machine-readable report behind
//! `tunneltime verify`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kinematics::{classify_regime, within_threshold_guard, ParticleContext, DEFAULT_ETA};
use crate::phase_clock::{
    barrier_phase_time, hartman_limit, reflection_phase, step_round_trip_time,
    transmission_phase, Channel, FlightWindow, Method, PhaseTracker, TimeDefinition, TimeResult,
};
use crate::scattering::{solve_barrier, solve_piecewise, solve_step, PiecewisePotential, Segment};
use crate::weak_time::{dwell_time, steinberg_time, time_ratio};

/// Maximum allowed jump between adjacent phase samples before the
/// derivative is considered to sit on a broken branch.
const CONTINUITY_JUMP: f64 = std::f64::consts::FRAC_PI_2;

/// Controls for the numeric phase derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivativeConfig {
    /// Largest energy probe offset; the stencil halves it per level.
    pub base_step: f64,
    /// Richardson extrapolation stages (1..=8).
    pub richardson_levels: u32,
    /// Reject results whose convergence estimate exceeds this, relative.
    pub max_relative_error: f64,
}

impl DerivativeConfig {
    /// Probe scale tied to the distances that bound the smooth branch:
    /// `base_step = 1e-4 * min(E, min_j |V_j - E|)`.
    pub fn auto(ctx: &ParticleContext, pot: &PiecewisePotential) -> Self {
        let e = ctx.energy();
        let mut scale = e;
        for seg in pot.segments() {
            let dist = (seg.v - e).abs();
            if dist > 0.0 && dist < scale {
                scale = dist;
            }
        }
        Self { base_step: 1e-4 * scale, richardson_levels: 3, max_relative_error: 1e-9 }
    }

    fn validate(&self, ctx: &ParticleContext, pot: &PiecewisePotential) -> Result<()> {
        if !(self.base_step.is_finite() && self.base_step > 0.0) {
            return Err(Error::Invalid(format!(
                "base_step must be finite and > 0, got {}",
                self.base_step
            )));
        }
        let e = ctx.energy();
        let mut limit = 1e-2 * e;
        for seg in pot.segments() {
            let dist = (seg.v - e).abs();
            if dist > 0.0 {
                limit = limit.min(1e-2 * dist);
            }
        }
        if self.base_step > limit {
            return Err(Error::Invalid(format!(
                "base_step {} too coarse: probes must stay well inside the branch, limit {limit:.3e}",
                self.base_step
            )));
        }
        if !(1..=8).contains(&self.richardson_levels) {
            return Err(Error::Invalid(format!(
                "richardson_levels must be in 1..=8, got {}",
                self.richardson_levels
            )));
        }
        if !(self.max_relative_error.is_finite() && self.max_relative_error > 0.0) {
            return Err(Error::Invalid(format!(
                "max_relative_error must be finite and > 0, got {}",
                self.max_relative_error
            )));
        }
        Ok(())
    }
}

/// Which phase the derivative acts on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhaseObservable {
    /// Transmission phase of the full structure.
    Transmission,
    /// Reflection phase at the entry face.
    Reflection,
    /// Reflection phase plus the flight phase `2kb` of a there-and-back
    /// path starting `standoff` before the structure.
    StepRoundTrip { standoff: f64 },
}

fn observed_phase(
    ctx: &ParticleContext,
    pot: &PiecewisePotential,
    observable: PhaseObservable,
) -> Result<f64> {
    let sol = solve_piecewise(ctx, pot)?;
    match observable {
        PhaseObservable::Transmission => transmission_phase(&sol),
        PhaseObservable::Reflection => reflection_phase(&sol),
        PhaseObservable::StepRoundTrip { standoff } => {
            Ok(2.0 * ctx.wavenumber() * standoff + reflection_phase(&sol)?)
        }
    }
}

/// Traversal time as the numeric energy derivative of a scattering phase.
///
/// Phases are sampled on a symmetric stencil `E +- base_step / 2^j`,
/// unwrapped in energy order onto one branch, screened for inter-sample
/// jumps above `pi/2` (a branch break near a resonance or threshold), then
/// central-differenced with Richardson extrapolation across the step
/// halvings. The difference of the last two extrapolants is the error
/// estimate; results that fail `max_relative_error` are refused rather
/// than returned degraded.
pub fn phase_time_numeric(
    ctx: &ParticleContext,
    pot: &PiecewisePotential,
    observable: PhaseObservable,
    cfg: &DerivativeConfig,
) -> Result<TimeResult> {
    cfg.validate(ctx, pot)?;
    if let PhaseObservable::StepRoundTrip { standoff } = observable {
        if !(standoff.is_finite() && standoff >= 0.0) {
            return Err(Error::Invalid(format!(
                "standoff must be finite and >= 0, got {standoff}"
            )));
        }
    }
    let e0 = ctx.energy();
    for seg in pot.segments() {
        if within_threshold_guard(e0, seg.v) {
            return Err(Error::Threshold { energy: e0, v: seg.v, segment: None });
        }
    }

    let levels = cfg.richardson_levels as usize;
    let steps: Vec<f64> = (0..=levels).map(|j| cfg.base_step / (1 << j) as f64).collect();

    // Sorted stencil: E - h_0 < ... < E - h_L < E < E + h_L < ... < E + h_0.
    let mut energies: Vec<f64> = steps.iter().map(|h| e0 - h).collect();
    energies.push(e0);
    energies.extend(steps.iter().rev().map(|h| e0 + h));

    let mut tracker = PhaseTracker::new();
    let mut phases = Vec::with_capacity(energies.len());
    let mut prev: Option<f64> = None;
    for &e in &energies {
        let raw = observed_phase(&ctx.at_energy(e)?, pot, observable)?;
        let unwrapped = tracker.track(raw);
        if let Some(p) = prev {
            let jump = (unwrapped - p).abs();
            if jump > CONTINUITY_JUMP {
                return Err(Error::BranchJump { energy: e, jump });
            }
        }
        prev = Some(unwrapped);
        phases.push(unwrapped);
    }

    // phases[j] pairs with phases[len-1-j] across the center.
    let n = energies.len();
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(levels + 1);
    for (j, h) in steps.iter().enumerate() {
        let d = (phases[n - 1 - j] - phases[j]) / (2.0 * h);
        table.push(vec![d]);
        for m in 1..=j {
            let factor = (4.0_f64).powi(m as i32);
            let refined = (factor * table[j][m - 1] - table[j - 1][m - 1]) / (factor - 1.0);
            table[j].push(refined);
        }
    }
    let value = table[levels][levels];
    let estimate = (value - table[levels - 1][levels - 1]).abs();
    let relative_error = estimate / value.abs().max(f64::MIN_POSITIVE);
    if relative_error > cfg.max_relative_error {
        return Err(Error::DerivativeNonConvergence {
            relative_error,
            limit: cfg.max_relative_error,
        });
    }

    let channel = match observable {
        PhaseObservable::Transmission => Channel::Transmit,
        PhaseObservable::Reflection => Channel::Reflect,
        PhaseObservable::StepRoundTrip { .. } => Channel::RoundTrip,
    };
    let regime = classify_regime(ctx, pot.max_v(), pot.total_width(), DEFAULT_ETA)?;
    Ok(TimeResult {
        value,
        definition: TimeDefinition::Phase,
        channel,
        method: Method::NumericDerivative,
        regime,
        error_estimate: Some(estimate),
    })
}

/// Grid over which [`verify_identities`] scores the stated identities.
#[derive(Debug, Clone, Serialize)]
pub struct VerificationGrid {
    pub mass: f64,
    /// Barrier/step height the energy fractions refer to.
    pub v: f64,
    /// Sub-barrier energies as fractions of `v`; keep clear of 0.5 so the
    /// ratio identity can use its formula form.
    pub sub_barrier_fractions: Vec<f64>,
    /// Above-barrier energies as fractions of `v`.
    pub above_barrier_fractions: Vec<f64>,
    pub widths: Vec<f64>,
    pub step_standoff: f64,
    /// Tolerance for closed-form-vs-numeric and ratio identities.
    pub relative_tolerance: f64,
    /// Tolerance for conservation and matching residuals.
    pub absolute_tolerance: f64,
}

impl Default for VerificationGrid {
    fn default() -> Self {
        Self {
            mass: 1.0,
            v: 2.0,
            sub_barrier_fractions: vec![0.1, 0.2, 0.35, 0.65, 0.8, 0.9],
            above_barrier_fractions: vec![1.2, 1.5, 2.0, 3.0],
            widths: vec![0.3, 0.7, 1.3, 2.6],
            step_standoff: 1.0,
            relative_tolerance: 1e-8,
            absolute_tolerance: 1e-10,
        }
    }
}

/// Outcome of one identity over the whole grid.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityCheck {
    pub name: String,
    /// Grid points scored.
    pub points: usize,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
    /// Human-readable location of the worst deviation.
    pub worst: Option<String>,
}

/// Full verification outcome; `passed` only if every check passed.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityReport {
    pub passed: bool,
    pub checks: Vec<IdentityCheck>,
}

struct CheckAccumulator {
    name: &'static str,
    tolerance: f64,
    points: usize,
    max_deviation: f64,
    worst: Option<String>,
}

impl CheckAccumulator {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Self { name, tolerance, points: 0, max_deviation: 0.0, worst: None }
    }

    fn record(&mut self, deviation: f64, location: String) {
        self.points += 1;
        if deviation > self.max_deviation || self.worst.is_none() {
            self.max_deviation = deviation;
            self.worst = Some(location);
        }
    }

    fn finish(self) -> IdentityCheck {
        IdentityCheck {
            name: self.name.to_string(),
            points: self.points,
            max_deviation: self.max_deviation,
            tolerance: self.tolerance,
            passed: self.points > 0 && self.max_deviation <= self.tolerance,
            worst: self.worst,
        }
    }
}

fn relative_deviation(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Score every stated identity over the grid: each closed form against the
/// numeric derivative, the ratio and saturation identities, the
/// weak-time-vs-dwell comparison, and the conservation residuals of the
/// solvers themselves. Failures are data, not errors: the report carries a
/// per-identity verdict either way.
pub fn verify_identities(grid: &VerificationGrid) -> Result<IdentityReport> {
    let mut barrier_vs_numeric =
        CheckAccumulator::new("barrier_phase_time vs numeric", grid.relative_tolerance);
    let mut above_vs_numeric =
        CheckAccumulator::new("above_barrier_time vs numeric", grid.relative_tolerance);
    let mut step_vs_numeric =
        CheckAccumulator::new("step_round_trip vs numeric", grid.relative_tolerance);
    let mut reflect_vs_transmit =
        CheckAccumulator::new("reflection vs transmission time", grid.relative_tolerance);
    let mut ratio_identity =
        CheckAccumulator::new("time_ratio identity", grid.relative_tolerance);
    let mut hartman = CheckAccumulator::new("hartman saturation", grid.relative_tolerance);
    let mut dwell_identity =
        CheckAccumulator::new("steinberg vs dwell quadrature", grid.relative_tolerance);
    let mut flux = CheckAccumulator::new("flux conservation", grid.absolute_tolerance);
    let mut matching = CheckAccumulator::new("matching residual", grid.absolute_tolerance);

    let record_conservation =
        |flux: &mut CheckAccumulator,
         matching: &mut CheckAccumulator,
         sol: &crate::scattering::ScatteringSolution,
         location: &str| {
            let drift = (sol.transmit_probability() + sol.reflect_probability() - 1.0).abs();
            flux.record(drift, location.to_string());
            matching.record(sol.matching_residual(), location.to_string());
        };

    for &fraction in &grid.sub_barrier_fractions {
        let e = fraction * grid.v;
        let ctx = ParticleContext::new(grid.mass, e)?;

        for &a in &grid.widths {
            let loc = format!("E = {e}, a = {a}");
            let pot = PiecewisePotential::barrier(grid.v, a)?;
            let closed = barrier_phase_time(&ctx, grid.v, a)?;
            let cfg = DerivativeConfig::auto(&ctx, &pot);
            let numeric = phase_time_numeric(&ctx, &pot, PhaseObservable::Transmission, &cfg)?;
            barrier_vs_numeric.record(relative_deviation(closed.value, numeric.value), loc.clone());

            let reflected = phase_time_numeric(&ctx, &pot, PhaseObservable::Reflection, &cfg)?;
            reflect_vs_transmit.record(relative_deviation(closed.value, reflected.value), loc.clone());

            let formula = time_ratio(&ctx, grid.v, a)?;
            let direct = closed.value / steinberg_time(&ctx, grid.v, a)?.value;
            ratio_identity.record(relative_deviation(formula, direct), loc.clone());

            let sol = solve_barrier(&ctx, grid.v, a)?;
            let dwell = dwell_time(&sol, &FlightWindow::new(0.0, a)?)?;
            let weak = steinberg_time(&ctx, grid.v, a)?;
            dwell_identity.record(relative_deviation(dwell.value, weak.value), loc.clone());

            record_conservation(&mut flux, &mut matching, &sol, &loc);
            let general = solve_piecewise(&ctx, &pot)?;
            record_conservation(&mut flux, &mut matching, &general, &loc);
        }

        // Saturation: at pa = 20 the closed form should sit on the plateau.
        let p = (2.0 * grid.mass * (grid.v - e)).sqrt();
        let wide = 20.0 / p;
        let saturated = barrier_phase_time(&ctx, grid.v, wide)?;
        let plateau = hartman_limit(&ctx, grid.v)?;
        hartman.record(
            relative_deviation(saturated.value, plateau.value),
            format!("E = {e}, a = {wide}"),
        );

        let step_loc = format!("E = {e}, step");
        let step_pot = PiecewisePotential::step(grid.v)?;
        let closed_step = step_round_trip_time(&ctx, grid.v, grid.step_standoff)?;
        let step_cfg = DerivativeConfig::auto(&ctx, &step_pot);
        let numeric_step = phase_time_numeric(
            &ctx,
            &step_pot,
            PhaseObservable::StepRoundTrip { standoff: grid.step_standoff },
            &step_cfg,
        )?;
        step_vs_numeric
            .record(relative_deviation(closed_step.value, numeric_step.value), step_loc.clone());
        record_conservation(&mut flux, &mut matching, &solve_step(&ctx, grid.v)?, &step_loc);
    }

    for &fraction in &grid.above_barrier_fractions {
        let e = fraction * grid.v;
        let ctx = ParticleContext::new(grid.mass, e)?;
        for &a in &grid.widths {
            let loc = format!("E = {e}, a = {a}");
            let pot = PiecewisePotential::barrier(grid.v, a)?;
            let closed = barrier_phase_time(&ctx, grid.v, a)?;
            let cfg = DerivativeConfig::auto(&ctx, &pot);
            let numeric = phase_time_numeric(&ctx, &pot, PhaseObservable::Transmission, &cfg)?;
            above_vs_numeric.record(relative_deviation(closed.value, numeric.value), loc.clone());

            let sol = solve_barrier(&ctx, grid.v, a)?;
            record_conservation(&mut flux, &mut matching, &sol, &loc);
            let general = solve_piecewise(&ctx, &pot)?;
            record_conservation(&mut flux, &mut matching, &general, &loc);
        }

        let step_loc = format!("E = {e}, step");
        let step_pot = PiecewisePotential::step(grid.v)?;
        let closed_step = step_round_trip_time(&ctx, grid.v, grid.step_standoff)?;
        let step_cfg = DerivativeConfig::auto(&ctx, &step_pot);
        let numeric_step = phase_time_numeric(
            &ctx,
            &step_pot,
            PhaseObservable::StepRoundTrip { standoff: grid.step_standoff },
            &step_cfg,
        )?;
        step_vs_numeric.record(
            relative_deviation(closed_step.value, numeric_step.value),
            step_loc.clone(),
        );
        record_conservation(&mut flux, &mut matching, &solve_step(&ctx, grid.v)?, &step_loc);
    }

    // Conservation on a structure neither closed form covers: a double
    // barrier with a free gap.
    {
        let ctx = ParticleContext::new(grid.mass, 0.6 * grid.v)?;
        let cavity = PiecewisePotential::from_segments(vec![
            Segment { x_start: 0.0, x_end: 0.5, v: grid.v },
            Segment { x_start: 0.5, x_end: 1.5, v: 0.0 },
            Segment { x_start: 1.5, x_end: 2.0, v: grid.v },
        ])?;
        let sol = solve_piecewise(&ctx, &cavity)?;
        record_conservation(&mut flux, &mut matching, &sol, "double barrier");
    }

    let checks = vec![
        barrier_vs_numeric.finish(),
        above_vs_numeric.finish(),
        step_vs_numeric.finish(),
        reflect_vs_transmit.finish(),
        ratio_identity.finish(),
        hartman.finish(),
        dwell_identity.finish(),
        flux.finish(),
        matching.finish(),
    ];
    let passed = checks.iter().all(|c| c.passed);
    Ok(IdentityReport { passed, checks })
}

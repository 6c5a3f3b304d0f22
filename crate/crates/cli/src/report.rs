//! The `report` subcommand: one configuration, described in plain words.

use anyhow::Result;
use clap::Args;

use tunneltime::kinematics::{wavenumbers, within_threshold_guard};
use tunneltime::phase_clock::{
    barrier_phase_time, effective_velocity, hartman_limit, superluminal_threshold,
    threshold_limits, FlightWindow,
};
use tunneltime::scattering::{solve_barrier, transmission_thick_approx};
use tunneltime::weak_time::{dwell_time, steinberg_time, time_ratio};
use tunneltime::ParticleContext;

use crate::format::fmt_num;
use crate::NumericFailure;

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Particle mass (natural units)
    #[arg(long, default_value_t = 1.0)]
    m: f64,
    /// Incident energy
    #[arg(long = "E")]
    e: f64,
    /// Region height (negative for a well)
    #[arg(long = "V")]
    v: f64,
    /// Region width
    #[arg(long)]
    a: f64,
    /// Speed of light; adds the superluminal bookkeeping
    #[arg(long)]
    c: Option<f64>,
}

pub fn run(args: ReportArgs) -> Result<u8> {
    let wrap = |err: tunneltime::Error| NumericFailure(err.to_string());

    if within_threshold_guard(args.e, args.v) {
        println!(
            "E = {} sits on the threshold of V = {}: both wavenumbers lose all precision there.",
            fmt_num(args.e),
            fmt_num(args.v)
        );
        let limits = threshold_limits(args.m, args.v, args.a).map_err(wrap)?;
        println!("one-sided traversal times around the threshold:");
        println!("  just below (E = V(1 - 1e-6)): T = {}", fmt_num(limits.below.value));
        println!("  just above (E = V(1 + 1e-6)): T = {}", fmt_num(limits.above.value));
        return Ok(0);
    }

    let ctx = match args.c {
        Some(c) => ParticleContext::with_light_speed(args.m, args.e, c),
        None => ParticleContext::new(args.m, args.e),
    }
    .map_err(wrap)?;

    let t = barrier_phase_time(&ctx, args.v, args.a).map_err(wrap)?;
    let sol = solve_barrier(&ctx, args.v, args.a).map_err(wrap)?;
    let window = FlightWindow::new(0.0, args.a).map_err(wrap)?;
    let dwell = dwell_time(&sol, &window).map_err(wrap)?;
    let w = wavenumbers(&ctx, args.v).map_err(wrap)?;

    println!(
        "configuration: m = {}, E = {}, V = {}, a = {}",
        fmt_num(args.m),
        fmt_num(args.e),
        fmt_num(args.v),
        fmt_num(args.a)
    );
    println!("regime: {}", t.regime.regime.token());
    match (w.p, w.beta) {
        (Some(p), _) => println!(
            "wavenumbers: k = {}, p = {} (opacity pa = {})",
            fmt_num(w.k),
            fmt_num(p),
            fmt_num(p * args.a)
        ),
        (_, Some(beta)) => println!(
            "wavenumbers: k = {}, beta = {} (phase angle beta*a = {})",
            fmt_num(w.k),
            fmt_num(beta),
            fmt_num(beta * args.a)
        ),
        _ => {}
    }
    println!(
        "transmission: P_t = {}, P_r = {}",
        fmt_num(sol.transmit_probability()),
        fmt_num(sol.reflect_probability())
    );
    if let Some(p) = w.p {
        let pa = p * args.a;
        if pa >= 3.0 {
            let approx = transmission_thick_approx(&ctx, args.v, args.a).map_err(wrap)?;
            println!(
                "  opaque-barrier estimate 16 E (V - E) exp(-2pa) / V^2 = {} (relative deviation {})",
                fmt_num(approx),
                fmt_num((approx - sol.transmit_probability()).abs() / sol.transmit_probability())
            );
        }
    }

    println!("clock phase time:      T   = {}", fmt_num(t.value));
    let below_barrier = args.e < args.v;
    if below_barrier || args.v == 0.0 {
        let ts = steinberg_time(&ctx, args.v, args.a).map_err(wrap)?;
        let ratio = time_ratio(&ctx, args.v, args.a).map_err(wrap)?;
        println!("weak-measurement time: T_s = {} (T / T_s = {})", fmt_num(ts.value), fmt_num(ratio));
    } else {
        println!("weak-measurement time: not defined above the region");
    }
    println!(
        "dwell time:            T_D = {} (quadrature estimate {})",
        fmt_num(dwell.value),
        fmt_num(dwell.error_estimate.unwrap_or(0.0))
    );

    let v_eff = effective_velocity(&t, args.a);
    println!(
        "effective velocity: a / T = {} (classical velocity {})",
        fmt_num(v_eff),
        fmt_num(ctx.velocity())
    );
    if below_barrier {
        let plateau = hartman_limit(&ctx, args.v).map_err(wrap)?;
        println!(
            "opaque-barrier plateau: T -> {} as the width grows (already within {} of it)",
            fmt_num(plateau.value),
            fmt_num((t.value - plateau.value).abs() / plateau.value)
        );
        if ctx.light_speed().is_some() {
            let onset = superluminal_threshold(&ctx, args.v).map_err(wrap)?;
            println!(
                "superluminal onset: a* = {} (pa* = {}); this width is {} it{}",
                fmt_num(onset.width),
                fmt_num(onset.opacity),
                if args.a >= onset.width { "beyond" } else { "below" },
                if v_eff > ctx.light_speed().unwrap() {
                    " -- the saturated crossing outruns light"
                } else {
                    ""
                }
            );
        }
    } else if ctx.light_speed().is_some() {
        println!("superluminal onset: none above the region; a/T stays below the classical velocity");
    }

    if t.regime.resonance_order.is_some() {
        println!("note: transparency resonance (beta*a at a multiple of pi), P_t = 1");
    }
    if t.regime.anti_resonance {
        println!("note: anti-resonance width; the crossing runs at its slowest for this energy");
    }
    if t.regime.near_threshold {
        println!("warning: within 5% of the threshold E = V; clock readings here are untrustworthy");
    }
    if t.regime.near_zero_energy {
        println!("warning: within 5% of E = 0; the incident wave is nearly stationary");
    }
    if t.value < 0.0 {
        println!(
            "note: negative clock reading -- strong wells can advance the scattered phase faster than free flight"
        );
    }
    Ok(0)
}

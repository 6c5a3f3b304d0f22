//! Energy sweeps and definition comparisons, CSV/JSON out.

use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::{Deserialize, Serialize};

use tunneltime::kinematics::{wavenumbers, within_threshold_guard, RegimeReport};
use tunneltime::oracle::{phase_time_numeric, DerivativeConfig, PhaseObservable};
use tunneltime::phase_clock::{
    barrier_phase_time, effective_velocity, step_round_trip_time, FlightWindow,
};
use tunneltime::scattering::{solve_barrier, solve_piecewise, solve_step, Segment};
use tunneltime::weak_time::{dwell_time, partition_check, steinberg_time};
use tunneltime::{Error as CoreError, ParticleContext, PiecewisePotential};

use crate::format::{fmt_bool_opt, fmt_num, fmt_opt};
use crate::NumericFailure;

pub const SWEEP_HEADER: &str = "E,k,pq,T_phase,T_steinberg,T_dwell,P_t,P_r,v_eff,regime,superluminal,note";
pub const COMPARE_HEADER: &str =
    "E,T_phase,T_steinberg,T_dwell,ratio,residual_phase,residual_steinberg";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PotentialKind {
    Step,
    Barrier,
    Well,
    Piecewise,
    Delta,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Lin,
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

impl OutputFormat {
    fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

/// How a delta-family barrier trades height for width.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeltaScalingKind {
    /// `V = C / a^2` (height grows fast enough that the crossing time
    /// vanishes with the width).
    Va2,
    /// `V = C / a` (the conventional delta limit).
    Va,
}

#[derive(Args, Debug, Default)]
pub struct SweepArgs {
    /// Potential shape to sweep
    #[arg(long, value_enum)]
    potential: Option<PotentialKind>,
    /// Particle mass (natural units)
    #[arg(long)]
    m: Option<f64>,
    /// Step/barrier height; for a well, the depth (positive, negated internally)
    #[arg(long = "V")]
    v: Option<f64>,
    /// Delta-family strength C
    #[arg(long = "C")]
    strength: Option<f64>,
    /// Structure width
    #[arg(long)]
    a: Option<f64>,
    /// Standoff distance before a step
    #[arg(long)]
    b: Option<f64>,
    /// Lowest energy of the grid
    #[arg(long = "E-min")]
    e_min: Option<f64>,
    /// Highest energy of the grid
    #[arg(long = "E-max")]
    e_max: Option<f64>,
    /// Number of grid points (>= 2)
    #[arg(long)]
    steps: Option<usize>,
    /// Grid spacing
    #[arg(long, value_enum)]
    spacing: Option<Spacing>,
    /// Speed of light, enables the superluminal column
    #[arg(long)]
    c: Option<f64>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Output path (default sweep.csv / sweep.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Delta-family width scaling
    #[arg(long = "delta-scaling", value_enum)]
    delta_scaling: Option<DeltaScalingKind>,
    /// JSON file with the same fields as the flags; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    /// Particle mass (natural units)
    #[arg(long)]
    m: Option<f64>,
    /// Barrier height (0 for the free check)
    #[arg(long = "V")]
    v: Option<f64>,
    /// Barrier width
    #[arg(long)]
    a: Option<f64>,
    /// Lowest energy of the grid
    #[arg(long = "E-min")]
    e_min: Option<f64>,
    /// Highest energy of the grid (must stay below V unless V = 0)
    #[arg(long = "E-max")]
    e_max: Option<f64>,
    /// Number of grid points (>= 2)
    #[arg(long)]
    steps: Option<usize>,
    /// Grid spacing
    #[arg(long, value_enum)]
    spacing: Option<Spacing>,
    /// Output format
    #[arg(long, value_enum)]
    format: Option<OutputFormat>,
    /// Output path (default compare.csv / compare.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON file with the same fields as the flags; flags override it
    #[arg(long)]
    config: Option<PathBuf>,
}

/// JSON mirror of the sweep flags. `V`/`C`/`E_min`/`E_max` keep their flag
/// capitalization; unknown keys are rejected rather than ignored.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    potential: Option<PotentialKind>,
    m: Option<f64>,
    #[serde(rename = "V")]
    v: Option<f64>,
    #[serde(rename = "C")]
    strength: Option<f64>,
    a: Option<f64>,
    b: Option<f64>,
    #[serde(rename = "E_min")]
    e_min: Option<f64>,
    #[serde(rename = "E_max")]
    e_max: Option<f64>,
    steps: Option<usize>,
    spacing: Option<Spacing>,
    c: Option<f64>,
    format: Option<OutputFormat>,
    out: Option<PathBuf>,
    delta_scaling: Option<DeltaScalingKind>,
    segments: Option<Vec<SegmentSpec>>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
struct SegmentSpec {
    x_start: f64,
    x_end: f64,
    v: f64,
}

fn load_config(path: Option<&PathBuf>) -> Result<ConfigFile> {
    let Some(path) = path else { return Ok(ConfigFile::default()) };
    let text = fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
}

enum Shape {
    Step { v: f64, standoff: f64 },
    /// Covers barriers, wells (negative `v`) and resolved delta members.
    Barrier { v: f64, a: f64 },
    Piecewise { pot: PiecewisePotential },
}

struct ResolvedSweep {
    shape: Shape,
    m: f64,
    light_speed: Option<f64>,
    energies: Vec<f64>,
    format: OutputFormat,
    out: PathBuf,
}

fn energy_grid(e_min: f64, e_max: f64, steps: usize, spacing: Spacing) -> Result<Vec<f64>> {
    if !(e_min.is_finite() && e_max.is_finite() && e_min > 0.0) {
        bail!("energy range must be finite with E-min > 0, got [{e_min}, {e_max}]");
    }
    if e_max <= e_min {
        bail!("E-max must exceed E-min, got [{e_min}, {e_max}]");
    }
    if steps < 2 {
        bail!("steps must be >= 2, got {steps}");
    }
    let n = (steps - 1) as f64;
    let mut energies: Vec<f64> = match spacing {
        Spacing::Lin => {
            let d = (e_max - e_min) / n;
            (0..steps).map(|i| e_min + i as f64 * d).collect()
        }
        Spacing::Log => {
            let l0 = e_min.ln();
            let d = (e_max.ln() - l0) / n;
            (0..steps).map(|i| (l0 + i as f64 * d).exp()).collect()
        }
    };
    energies[0] = e_min;
    *energies.last_mut().unwrap() = e_max;
    Ok(energies)
}

fn check_mass(m: f64) -> Result<f64> {
    if !(m.is_finite() && m > 0.0) {
        bail!("mass must be finite and > 0, got {m}");
    }
    Ok(m)
}

fn resolve_sweep(args: SweepArgs) -> Result<ResolvedSweep> {
    let cfg = load_config(args.config.as_ref())?;
    let potential = args
        .potential
        .or(cfg.potential)
        .context("no potential given (--potential or config)")?;
    let m = check_mass(args.m.or(cfg.m).unwrap_or(1.0))?;
    let v = args.v.or(cfg.v);
    let strength = args.strength.or(cfg.strength);
    let a = args.a.or(cfg.a);
    let b = args.b.or(cfg.b);
    let e_min = args.e_min.or(cfg.e_min).context("--E-min required")?;
    let e_max = args.e_max.or(cfg.e_max).context("--E-max required")?;
    let steps = args.steps.or(cfg.steps).context("--steps required")?;
    let spacing = args.spacing.or(cfg.spacing).unwrap_or(Spacing::Lin);
    let format = args.format.or(cfg.format).unwrap_or(OutputFormat::Csv);
    let light_speed = args.c.or(cfg.c);
    if let Some(c) = light_speed {
        if !(c.is_finite() && c > 0.0) {
            bail!("speed of light must be finite and > 0, got {c}");
        }
    }
    let energies = energy_grid(e_min, e_max, steps, spacing)?;

    let width = || -> Result<f64> {
        let a = a.context("--a required for this potential")?;
        if !(a.is_finite() && a > 0.0) {
            bail!("width must be finite and > 0, got {a}");
        }
        Ok(a)
    };
    let shape = match potential {
        PotentialKind::Step => {
            let v = v.context("--V required for a step")?;
            if !(v.is_finite() && v > 0.0) {
                bail!("step height must be finite and > 0, got {v}");
            }
            let standoff = b.context("--b required for a step")?;
            if !(standoff.is_finite() && standoff >= 0.0) {
                bail!("standoff must be finite and >= 0, got {standoff}");
            }
            Shape::Step { v, standoff }
        }
        PotentialKind::Barrier => {
            let v = v.context("--V required for a barrier")?;
            if !v.is_finite() {
                bail!("barrier height must be finite, got {v}");
            }
            Shape::Barrier { v, a: width()? }
        }
        PotentialKind::Well => {
            let depth = v.context("--V (the depth) required for a well")?;
            if !(depth.is_finite() && depth != 0.0) {
                bail!("well depth must be finite and nonzero, got {depth}");
            }
            Shape::Barrier { v: -depth.abs(), a: width()? }
        }
        PotentialKind::Delta => {
            let strength = strength.context("--C required for a delta family")?;
            if !(strength.is_finite() && strength > 0.0) {
                bail!("delta strength must be finite and > 0, got {strength}");
            }
            let a = width()?;
            let v = match args.delta_scaling.or(cfg.delta_scaling).unwrap_or(DeltaScalingKind::Va2)
            {
                DeltaScalingKind::Va2 => strength / (a * a),
                DeltaScalingKind::Va => strength / a,
            };
            Shape::Barrier { v, a }
        }
        PotentialKind::Piecewise => {
            let seg_list = cfg
                .segments
                .context("piecewise potential needs \"segments\" in the config file")?;
            let segments = seg_list
                .iter()
                .map(|s| Segment { x_start: s.x_start, x_end: s.x_end, v: s.v })
                .collect();
            let pot = PiecewisePotential::from_segments(segments)
                .map_err(|e| anyhow::anyhow!("invalid segments: {e}"))?;
            if pot.has_semi_infinite_tail() {
                bail!("piecewise sweeps need a finite structure; use the step potential for a semi-infinite wall");
            }
            Shape::Piecewise { pot }
        }
    };
    let out = args.out.or(cfg.out).unwrap_or_else(|| {
        PathBuf::from(format!("sweep.{}", format.extension()))
    });
    Ok(ResolvedSweep { shape, m, light_speed, energies, format, out })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    #[serde(rename = "E")]
    pub e: f64,
    pub k: f64,
    /// `p` below the region, `beta` above it; absent for stacks.
    pub pq: Option<f64>,
    #[serde(rename = "T_phase")]
    pub t_phase: Option<f64>,
    #[serde(rename = "T_steinberg")]
    pub t_steinberg: Option<f64>,
    #[serde(rename = "T_dwell")]
    pub t_dwell: Option<f64>,
    #[serde(rename = "P_t")]
    pub p_t: Option<f64>,
    #[serde(rename = "P_r")]
    pub p_r: Option<f64>,
    pub v_eff: Option<f64>,
    pub regime: String,
    pub superluminal: Option<bool>,
    pub note: String,
}

impl SweepRow {
    fn shell(e: f64, k: f64) -> Self {
        Self {
            e,
            k,
            pq: None,
            t_phase: None,
            t_steinberg: None,
            t_dwell: None,
            p_t: None,
            p_r: None,
            v_eff: None,
            regime: String::new(),
            superluminal: None,
            note: String::new(),
        }
    }

    fn csv_line(&self) -> String {
        [
            fmt_num(self.e),
            fmt_num(self.k),
            fmt_opt(self.pq),
            fmt_opt(self.t_phase),
            fmt_opt(self.t_steinberg),
            fmt_opt(self.t_dwell),
            fmt_opt(self.p_t),
            fmt_opt(self.p_r),
            fmt_opt(self.v_eff),
            self.regime.clone(),
            fmt_bool_opt(self.superluminal),
            self.note.clone(),
        ]
        .join(",")
    }
}

fn regime_label(report: &RegimeReport) -> String {
    let mut label = report.regime.token().to_string();
    if let Some(n) = report.resonance_order {
        label.push_str(&format!("+resonance{n}"));
    }
    if report.anti_resonance {
        label.push_str("+anti_resonance");
    }
    if report.near_threshold {
        label.push_str("+near_threshold");
    }
    if report.near_zero_energy {
        label.push_str("+near_zero_energy");
    }
    label
}

fn particle(m: f64, e: f64, light_speed: Option<f64>) -> Result<ParticleContext, CoreError> {
    match light_speed {
        Some(c) => ParticleContext::with_light_speed(m, e, c),
        None => ParticleContext::new(m, e),
    }
}

fn barrier_row(
    ctx: &ParticleContext,
    e: f64,
    k: f64,
    v: f64,
    a: f64,
) -> Result<SweepRow, CoreError> {
    let t = barrier_phase_time(ctx, v, a)?;
    let sol = solve_barrier(ctx, v, a)?;
    let dwell = dwell_time(&sol, &FlightWindow::new(0.0, a)?)?;
    let (t_steinberg, note) = if e < v || v == 0.0 {
        (Some(steinberg_time(ctx, v, a)?.value), String::new())
    } else {
        (None, "no post-selected time above the region".to_string())
    };
    let v_eff = effective_velocity(&t, a);
    let w = wavenumbers(ctx, v)?;
    Ok(SweepRow {
        pq: w.p.or(w.beta),
        t_phase: Some(t.value),
        t_steinberg,
        t_dwell: Some(dwell.value),
        p_t: Some(sol.transmit_probability()),
        p_r: Some(sol.reflect_probability()),
        v_eff: Some(v_eff),
        regime: regime_label(&t.regime),
        superluminal: ctx.light_speed().map(|c| v_eff > c),
        note,
        ..SweepRow::shell(e, k)
    })
}

fn row_at(plan: &ResolvedSweep, e: f64) -> Result<SweepRow, CoreError> {
    let ctx = particle(plan.m, e, plan.light_speed)?;
    let k = ctx.wavenumber();

    let heights: Vec<f64> = match &plan.shape {
        Shape::Step { v, .. } | Shape::Barrier { v, .. } => vec![*v],
        Shape::Piecewise { pot } => pot.segments().iter().map(|s| s.v).collect(),
    };
    if heights.iter().any(|&v| within_threshold_guard(e, v)) {
        let mut row = SweepRow::shell(e, k);
        row.regime = "threshold".into();
        row.note = "threshold".into();
        return Ok(row);
    }

    match &plan.shape {
        Shape::Step { v, standoff } => {
            let t = step_round_trip_time(&ctx, *v, *standoff)?;
            let sol = solve_step(&ctx, *v)?;
            let w = wavenumbers(&ctx, *v)?;
            Ok(SweepRow {
                pq: w.p.or(w.beta),
                t_phase: Some(t.value),
                p_t: Some(sol.transmit_probability()),
                p_r: Some(sol.reflect_probability()),
                regime: regime_label(&t.regime),
                note: "round trip".into(),
                ..SweepRow::shell(e, k)
            })
        }
        Shape::Barrier { v, a } => barrier_row(&ctx, e, k, *v, *a),
        Shape::Piecewise { pot } => {
            let sol = solve_piecewise(&ctx, pot)?;
            let cfg = DerivativeConfig::auto(&ctx, pot);
            let t = phase_time_numeric(&ctx, pot, PhaseObservable::Transmission, &cfg)?;
            let window = FlightWindow::new(pot.x_entry(), pot.x_exit())?;
            let dwell = dwell_time(&sol, &window)?;
            let v_eff = effective_velocity(&t, pot.total_width());
            Ok(SweepRow {
                t_phase: Some(t.value),
                t_dwell: Some(dwell.value),
                p_t: Some(sol.transmit_probability()),
                p_r: Some(sol.reflect_probability()),
                v_eff: Some(v_eff),
                regime: regime_label(&t.regime),
                superluminal: ctx.light_speed().map(|c| v_eff > c),
                note: "stack: phase time from numeric derivative".into(),
                ..SweepRow::shell(e, k)
            })
        }
    }
}

fn write_rows<T: Serialize>(
    out: &PathBuf,
    format: OutputFormat,
    header: &str,
    csv_lines: Vec<String>,
    rows: &[T],
) -> Result<()> {
    let text = match format {
        OutputFormat::Csv => {
            let mut text = String::with_capacity(csv_lines.len() * 80 + header.len() + 1);
            text.push_str(header);
            text.push('\n');
            for line in csv_lines {
                text.push_str(&line);
                text.push('\n');
            }
            text
        }
        OutputFormat::Json => {
            let mut text = serde_json::to_string_pretty(rows)?;
            text.push('\n');
            text
        }
    };
    fs::write(out, text).with_context(|| format!("writing {}", out.display()))?;
    Ok(())
}

fn numeric_failure(failures: Vec<(f64, CoreError)>) -> anyhow::Error {
    let listing: Vec<String> =
        failures.iter().map(|(e, err)| format!("E = {e}: {err}")).collect();
    NumericFailure(format!(
        "{} grid point(s) failed: {}",
        failures.len(),
        listing.join("; ")
    ))
    .into()
}

pub fn run_sweep(args: SweepArgs) -> Result<u8> {
    let plan = resolve_sweep(args)?;
    let mut rows = Vec::with_capacity(plan.energies.len());
    let mut failures = Vec::new();
    for &e in &plan.energies {
        match row_at(&plan, e) {
            Ok(row) => rows.push(row),
            Err(err) => failures.push((e, err)),
        }
    }
    let csv_lines = rows.iter().map(SweepRow::csv_line).collect();
    write_rows(&plan.out, plan.format, SWEEP_HEADER, csv_lines, &rows)?;
    let skipped = rows.iter().filter(|r| r.note == "threshold").count();
    println!(
        "sweep: wrote {} rows to {}{}",
        rows.len(),
        plan.out.display(),
        if skipped > 0 { format!(" ({skipped} threshold rows excluded from the data columns)") } else { String::new() }
    );
    if !failures.is_empty() {
        return Err(numeric_failure(failures));
    }
    Ok(0)
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareRow {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "T_phase")]
    pub t_phase: f64,
    #[serde(rename = "T_steinberg")]
    pub t_steinberg: f64,
    #[serde(rename = "T_dwell")]
    pub t_dwell: f64,
    pub ratio: f64,
    /// `|T_D - (P_t + P_r) T|`: how badly the clock time fails the
    /// channel decomposition of the dwell time.
    pub residual_phase: f64,
    /// Same decomposition with the weak-measurement time; stays at
    /// quadrature accuracy.
    pub residual_steinberg: f64,
}

impl CompareRow {
    fn csv_line(&self) -> String {
        [
            fmt_num(self.e),
            fmt_num(self.t_phase),
            fmt_num(self.t_steinberg),
            fmt_num(self.t_dwell),
            fmt_num(self.ratio),
            fmt_num(self.residual_phase),
            fmt_num(self.residual_steinberg),
        ]
        .join(",")
    }
}

pub fn run_compare(args: CompareArgs) -> Result<u8> {
    let cfg = load_config(args.config.as_ref())?;
    let m = check_mass(args.m.or(cfg.m).unwrap_or(1.0))?;
    let v = args.v.or(cfg.v).context("--V required (0 for the free check)")?;
    let a = args.a.or(cfg.a).context("--a required")?;
    if !(a.is_finite() && a > 0.0) {
        bail!("width must be finite and > 0, got {a}");
    }
    let e_min = args.e_min.or(cfg.e_min).context("--E-min required")?;
    let e_max = args.e_max.or(cfg.e_max).context("--E-max required")?;
    let steps = args.steps.or(cfg.steps).context("--steps required")?;
    let spacing = args.spacing.or(cfg.spacing).unwrap_or(Spacing::Lin);
    let format = args.format.or(cfg.format).unwrap_or(OutputFormat::Csv);
    if !(v == 0.0 || e_max < v) {
        bail!(
            "compare needs a sub-barrier grid: V = 0 or E-max < V, got E-max = {e_max}, V = {v}"
        );
    }
    let energies = energy_grid(e_min, e_max, steps, spacing)?;
    let out = args
        .out
        .or(cfg.out)
        .unwrap_or_else(|| PathBuf::from(format!("compare.{}", format.extension())));

    let mut rows = Vec::with_capacity(energies.len());
    let mut failures = Vec::new();
    for &e in &energies {
        let point = ParticleContext::new(m, e).and_then(|ctx| partition_check(&ctx, v, a));
        match point {
            Ok(cmp) => rows.push(CompareRow {
                e,
                t_phase: cmp.t_phase,
                t_steinberg: cmp.t_steinberg,
                t_dwell: cmp.t_dwell,
                ratio: cmp.ratio,
                residual_phase: cmp.phase_partition_residual,
                residual_steinberg: cmp.steinberg_partition_residual,
            }),
            Err(err) => failures.push((e, err)),
        }
    }
    let csv_lines = rows.iter().map(CompareRow::csv_line).collect();
    write_rows(&out, format, COMPARE_HEADER, csv_lines, &rows)?;
    let max_weak = rows.iter().map(|r| r.residual_steinberg).fold(0.0, f64::max);
    let max_clock = rows.iter().map(|r| r.residual_phase).fold(0.0, f64::max);
    println!("compare: wrote {} rows to {}", rows.len(), out.display());
    println!(
        "compare: dwell vs weak-measurement residual <= {:.3e}; clock-time partition residual up to {:.3e}",
        max_weak, max_clock
    );
    if !failures.is_empty() {
        return Err(numeric_failure(failures));
    }
    Ok(0)
}

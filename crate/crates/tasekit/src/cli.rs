//! Command-line driver: benchmark runs, convergence studies, stability
//! maps, axis scans, and the alpha table, all emitting CSV with
//! `#`-prefixed metadata so a result file carries its own provenance.
//!
//! Exit codes: 0 for a completed run (a diverged integration is data, not
//! a failure), 2 for configuration errors, 3 for internal numerical
//! failures that indicate a bug rather than a bad flag.

use crate::error::{Result, TaseError};
use crate::integrators::{StepMode, StepPlan};
use crate::numkit::expm;
use crate::problems::{
    diffusion_dirichlet, diffusion_periodic, error_report, observed_order, polar_diffusion,
    power_law_diffusion, stiff_scalar_ode, two_species_adr, Differencing, MeshKind, ProblemCase,
    RightBc,
};
use crate::schemes::SchemeInfo;
use crate::stability::{imag_axis_scan, scan_left_half_plane, StabilityScan};
use crate::tase::{alpha_min, TaseConfig, TaseForm};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "tasekit",
    version,
    about = "Stable explicit time integration for stiff problems: benchmark runs, stability maps, convergence studies"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Integrate one benchmark case and report final-state errors.
    RunCase(RunArgs),
    /// Run a 4-point step refinement and fit the observed order.
    Converge(RunArgs),
    /// |sigma| over a log-radial left-half-plane grid, as CSV.
    StabilityMap(MapArgs),
    /// |sigma| along the imaginary axis, as CSV.
    ImagScan(ScanArgs),
    /// The minimum-alpha table, two decimals per entry.
    AlphaTable,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitMode {
    Combined,
    Split,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BcMode {
    /// Boundary sources pass through the preconditioner with the operator.
    Correct,
    /// Boundary sources are added after preconditioning — deliberately
    /// wrong, kept for falsification runs.
    Wrong,
}

#[derive(Args)]
pub struct RunArgs {
    /// Benchmark name; see the README case table.
    #[arg(long)]
    pub case: String,
    /// Time scheme (ERK1-4, SDIRK1-4, CN); defaults to the case's pick.
    #[arg(long)]
    pub scheme: Option<String>,
    /// TASE order p (0 disables preconditioning).
    #[arg(long)]
    pub tase: Option<usize>,
    /// TASE free parameter; defaults to the calibrated value.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Step size.
    #[arg(long, conflicts_with = "dt_ratio")]
    pub dt: Option<f64>,
    /// Step size as a multiple of the tightest stability step; the step is
    /// then rounded so an integer number of steps lands on the horizon.
    #[arg(long)]
    pub dt_ratio: Option<f64>,
    /// Number of steps; defaults to covering the case horizon.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Output CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// One preconditioner around the whole operator, or one per group.
    #[arg(long, value_enum)]
    pub split_mode: Option<SplitMode>,
    /// How boundary sources meet the preconditioner.
    #[arg(long, value_enum, default_value = "correct")]
    pub bc_mode: BcMode,
    /// Recorded in the output metadata for reproducibility bookkeeping.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct MapArgs {
    #[arg(long)]
    pub scheme: String,
    /// TASE order p (0 scans the plain scheme).
    #[arg(long, default_value_t = 0)]
    pub tase: usize,
    /// Defaults to the scheme's minimum stable alpha for this p.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Radii x angles, e.g. 201x201.
    #[arg(long, default_value = "201x201")]
    pub grid: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Args)]
pub struct ScanArgs {
    #[arg(long)]
    pub scheme: String,
    #[arg(long, default_value_t = 0)]
    pub tase: usize,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Largest sampled y.
    #[arg(long, default_value_t = 1e10)]
    pub ymax: f64,
    /// Number of log-spaced samples (plus the origin).
    #[arg(long, default_value_t = 8192)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// All numbers in CSV output carry 17 significant digits so files
/// round-trip through f64 exactly.
fn fmt(x: f64) -> String {
    format!("{x:.16e}")
}

/// Builds a case from its CLI name.
pub fn build_case(name: &str) -> Result<ProblemCase> {
    match name {
        "diffusion-periodic" | "diffusion-periodic-fd4" => {
            diffusion_periodic(600, Differencing::Fd4, 0.0, 50.0)
        }
        "diffusion-periodic-fd2" => diffusion_periodic(600, Differencing::Fd2, 0.0, 50.0),
        // The forced spectral configuration run to its periodic steady
        // response on a deliberately tiny grid.
        "diffusion-steady" | "diffusion-periodic-fourier" => {
            diffusion_periodic(6, Differencing::Fourier, 1.0, 50.0)
        }
        "diffusion-dirichlet" => diffusion_dirichlet(30),
        "adr-equal" => two_species_adr(50, 1e2, 1e2, 1e4, RightBc::Equal),
        "adr-incompatible" => two_species_adr(50, 1e2, 1e2, 1e4, RightBc::Incompatible),
        "power-law-beta0" => power_law_diffusion(200, 0.0),
        "power-law-beta025" => power_law_diffusion(200, 0.25),
        "power-law-beta1" => power_law_diffusion(200, 1.0),
        "power-law-beta4" => power_law_diffusion(200, 4.0),
        "ode-stiff" => stiff_scalar_ode(10.0),
        "polar" => polar_diffusion(10, 40),
        other => Err(TaseError::InvalidConfig(format!(
            "unknown case '{other}'; known cases: diffusion-periodic, diffusion-periodic-fd2, \
             diffusion-steady, diffusion-dirichlet, adr-equal, adr-incompatible, \
             power-law-beta0, power-law-beta025, power-law-beta1, power-law-beta4, \
             ode-stiff, polar"
        ))),
    }
}

/// The tightest stability step among the case's operators — the reference
/// scale for `--dt-ratio`.
fn tightest_stability_dt(case: &ProblemCase) -> Result<f64> {
    case.stability_dt
        .iter()
        .map(|&(_, v)| v)
        .fold(None, |m: Option<f64>, v| Some(m.map_or(v, |x| x.min(v))))
        .ok_or_else(|| TaseError::InvalidConfig("case carries no stability steps".into()))
}

pub struct ResolvedRun {
    pub plan: StepPlan,
    pub n_steps: usize,
}

/// Turns CLI flags plus the case defaults into a concrete step plan.
///
/// Public because the C bindings resolve their option structs through the
/// same rules; the flag semantics must never fork between entry points.
pub fn resolve_plan(case: &ProblemCase, args: &RunArgs) -> Result<ResolvedRun> {
    let rec = &case.recommended_plan;
    let scheme = match &args.scheme {
        Some(s) => SchemeInfo::named(s)?,
        None => rec.scheme.clone(),
    };
    let p = args
        .tase
        .unwrap_or_else(|| rec.tase.map(|c| c.p).unwrap_or(0));

    let tf = case.t_final;
    let (dt, n_steps) = match (args.dt, args.dt_ratio, args.steps) {
        (Some(dt), _, steps) => {
            if !(dt > 0.0) {
                return Err(TaseError::InvalidConfig(format!(
                    "step size must be positive, got {dt}"
                )));
            }
            let n = steps.unwrap_or_else(|| ((tf / dt).round() as usize).max(1));
            (dt, n)
        }
        (None, Some(ratio), steps) => {
            if !(ratio > 0.0) {
                return Err(TaseError::InvalidConfig(format!(
                    "dt ratio must be positive, got {ratio}"
                )));
            }
            let raw = ratio * tightest_stability_dt(case)?;
            match steps {
                Some(n) => (raw, n),
                // Round to an integer number of steps over the horizon.
                None => {
                    let n = ((tf / raw).round() as usize).max(1);
                    (tf / n as f64, n)
                }
            }
        }
        (None, None, Some(n)) => (tf / n as f64, n),
        (None, None, None) => (rec.dt, ((tf / rec.dt).round() as usize).max(1)),
    };
    if n_steps == 0 {
        return Err(TaseError::InvalidConfig("step count must be nonzero".into()));
    }

    let mut plan = if p == 0 {
        StepPlan::plain(scheme, dt)
    } else {
        let split_capable = !case.system.splits.is_empty();
        let mode = if split_capable {
            let want_split = match args.split_mode {
                Some(SplitMode::Split) => true,
                Some(SplitMode::Combined) => false,
                None => rec.mode == StepMode::TaseSplit,
            };
            if want_split {
                StepMode::TaseSplit
            } else {
                StepMode::TaseCombined
            }
        } else if case.system.nonlinear_rhs.is_some() {
            StepMode::TaseNonlinear
        } else {
            StepMode::TaseCombined
        };

        let same_as_rec = rec.tase.map(|c| c.p) == Some(p)
            && rec.scheme.name() == scheme.name()
            && rec.mode == mode
            && args.alpha.is_none();
        if same_as_rec {
            let mut plan = rec.clone();
            plan.scheme = scheme;
            plan.dt = dt;
            plan
        } else {
            let c = scheme.intercept.ok_or_else(|| {
                TaseError::InvalidConfig(format!(
                    "TASE needs an explicit scheme, got {}",
                    scheme.name()
                ))
            })?;
            let base = alpha_min(p, c);
            let groups = case.system.splits.len().max(1) as f64;
            let default_alpha = match mode {
                // Each group keeps its own asymptote budget: scale by the
                // number of preconditioned groups.
                StepMode::TaseSplit => groups * base,
                _ => base,
            };
            let alpha = args.alpha.unwrap_or(default_alpha);
            let cfg = TaseConfig::new(p, alpha, TaseForm::Preconditioner)?;
            let mut plan = StepPlan::tase(scheme, dt, cfg, mode);
            if mode == StepMode::TaseSplit {
                // Preserve the case's plain/preconditioned group pattern.
                let pattern: Vec<bool> = if rec.mode == StepMode::TaseSplit
                    && rec.group_tase.len() == case.system.splits.len()
                {
                    rec.group_tase.iter().map(|g| g.is_some()).collect()
                } else {
                    vec![true; case.system.splits.len()]
                };
                plan.group_tase = pattern
                    .into_iter()
                    .map(|on| if on { Some(cfg) } else { None })
                    .collect();
            }
            plan
        }
    };
    plan.source_through_tase = args.bc_mode == BcMode::Correct;
    Ok(ResolvedRun { plan, n_steps })
}

fn mesh_note(case: &ProblemCase) -> &'static str {
    match case.mesh.kind {
        MeshKind::PeriodicNodes => "periodic-nodes",
        MeshKind::BoundedCells => "bounded-cells",
        // The stretching law, pinned in the output so stretched-mesh
        // results are reproducible from the file alone.
        MeshKind::StretchedCells => "stretched-cells edges x_j=1-(1-j/N)^2",
    }
}

fn write_run_metadata(
    w: &mut dyn Write,
    command: &str,
    case: &ProblemCase,
    args: &RunArgs,
    run: &ResolvedRun,
) -> io::Result<()> {
    writeln!(w, "# tasekit {command}")?;
    writeln!(w, "# case={}", case.name)?;
    writeln!(w, "# scheme={}", run.plan.scheme.name())?;
    match run.plan.tase {
        Some(cfg) => {
            writeln!(w, "# tase_p={}", cfg.p)?;
            writeln!(w, "# alpha={}", fmt(cfg.alpha))?;
        }
        None => {
            writeln!(w, "# tase_p=0")?;
            writeln!(w, "# alpha=off")?;
        }
    }
    if !run.plan.group_tase.is_empty() {
        let desc: Vec<String> = run
            .plan
            .group_tase
            .iter()
            .zip(&case.system.splits)
            .map(|(g, s)| match g {
                Some(cfg) => format!("{}:alpha={}", s.label, fmt(cfg.alpha)),
                None => format!("{}:plain", s.label),
            })
            .collect();
        writeln!(w, "# groups={}", desc.join(";"))?;
    }
    writeln!(w, "# dt={}", fmt(run.plan.dt))?;
    writeln!(w, "# steps={}", run.n_steps)?;
    writeln!(
        w,
        "# mode={}",
        match run.plan.mode {
            StepMode::Plain => "plain",
            StepMode::TaseCombined => "combined",
            StepMode::TaseSplit => "split",
            StepMode::TaseNonlinear => "nonlinear",
        }
    )?;
    writeln!(
        w,
        "# bc_mode={}",
        if run.plan.source_through_tase {
            "correct"
        } else {
            "wrong"
        }
    )?;
    writeln!(w, "# seed={}", args.seed)?;
    writeln!(w, "# mesh={}", mesh_note(case))?;
    for (label, v) in &case.stability_dt {
        writeln!(w, "# stability_dt_{label}={}", fmt(*v))?;
    }
    Ok(())
}

fn cmd_run_case(args: &RunArgs, w: &mut dyn Write) -> Result<()> {
    let case = build_case(&args.case)?;
    let run = resolve_plan(&case, args)?;
    let traj = case.run(&run.plan, run.n_steps)?;
    let horizon = traj.final_time();
    write_run_metadata(w, "run-case", &case, args, &run)?;
    writeln!(w, "# steps_completed={}", traj.steps_completed())?;
    writeln!(w, "# diverged={}", traj.diverged())?;
    if let Some(s) = traj.diverged_at_step {
        writeln!(w, "# diverged_at_step={s}")?;
    }
    writeln!(w, "# t_end={}", fmt(horizon))?;
    let exact = case.exact_at(horizon);
    if let Some(e) = &exact {
        let rep = error_report(traj.final_state(), e, Some(&case.norm_weights))?;
        writeln!(w, "# l2_rel={}", fmt(rep.l2_rel))?;
        writeln!(w, "# linf_rel={}", fmt(rep.linf_rel))?;
    }
    match &exact {
        Some(e) => {
            writeln!(w, "index,y_final,y_exact")?;
            for (i, (y, ye)) in traj.final_state().iter().zip(e).enumerate() {
                writeln!(w, "{i},{},{}", fmt(*y), fmt(*ye))?;
            }
        }
        None => {
            writeln!(w, "index,y_final")?;
            for (i, y) in traj.final_state().iter().enumerate() {
                writeln!(w, "{i},{}", fmt(*y))?;
            }
        }
    }
    Ok(())
}

/// Reference state at the case horizon for cases without a closed form:
/// the matrix exponential for linear systems (constant sources only), a
/// fine-step explicit run for nonlinear ones.
fn reference_state(case: &ProblemCase) -> Result<(Vec<f64>, &'static str)> {
    if let Some(e) = case.exact_at(case.t_final) {
        return Ok((e, "exact"));
    }
    if let Some(l) = &case.system.linear_part {
        let tf = case.t_final;
        let s0 = case.system.source.as_ref().map(|s| s(0.0));
        if let (Some(src), Some(s0v)) = (case.system.source.as_ref(), &s0) {
            let probe = src(0.37 * tf);
            if probe != *s0v {
                return Err(TaseError::InvalidConfig(
                    "convergence reference needs an exact solution or a constant source".into(),
                ));
            }
        }
        let mut a = l.to_dense();
        a.scale(tf);
        let e = expm(&a)?;
        let y0 = &case.initial_state;
        let mut y = e.matvec(y0);
        if let Some(s0v) = s0 {
            // Constant-source correction: L^{-1} (e^{L t} - I) S.
            let mut rhs = e.matvec(&s0v);
            for (r, s) in rhs.iter_mut().zip(&s0v) {
                *r -= s;
            }
            let lu = l.to_dense().lu()?;
            let part = lu.solve(&rhs)?;
            for (yv, pv) in y.iter_mut().zip(&part) {
                *yv += pv;
            }
        }
        return Ok((y, "matrix-exponential"));
    }
    // Nonlinear: plain fourth-order run an order of magnitude inside the
    // stability limit.
    let dt_ref = tightest_stability_dt(case)? / 10.0;
    let n = ((case.t_final / dt_ref).round() as usize).max(1);
    let plan = StepPlan::plain(SchemeInfo::named("erk4")?, case.t_final / n as f64);
    let traj = case.run(&plan, n)?;
    if traj.diverged() {
        return Err(TaseError::Numerical(
            "fine-step reference run diverged".into(),
        ));
    }
    Ok((traj.final_state().to_vec(), "fine-dt-explicit"))
}

fn cmd_converge(args: &RunArgs, w: &mut dyn Write) -> Result<()> {
    let case = build_case(&args.case)?;
    let base = resolve_plan(&case, args)?;
    let tf = case.t_final;
    // Halve the step four times from the base, pinning each run to an
    // integer step count over the same horizon.
    let n0 = ((tf / base.plan.dt).round() as usize).max(1);
    let (reference, ref_kind) = reference_state(&case)?;
    let stab = tightest_stability_dt(&case)?;

    write_run_metadata(w, "converge", &case, args, &base)?;
    writeln!(w, "# reference={ref_kind}")?;
    writeln!(w, "dt,dt_ratio,l2_rel,linf_rel")?;
    let mut dts = Vec::new();
    let mut linf = Vec::new();
    for k in 0..4 {
        let n = n0 << k;
        let dt = tf / n as f64;
        let mut plan = base.plan.clone();
        plan.dt = dt;
        let traj = case.run(&plan, n)?;
        let rep = error_report(traj.final_state(), &reference, Some(&case.norm_weights))?;
        writeln!(
            w,
            "{},{},{},{}",
            fmt(dt),
            fmt(dt / stab),
            fmt(rep.l2_rel),
            fmt(rep.linf_rel)
        )?;
        dts.push(dt);
        linf.push(rep.linf_rel);
    }
    let fit = observed_order(&linf, &dts)?;
    writeln!(w, "# observed_order_linf={}", fmt(fit.slope))?;
    if !fit.excluded.is_empty() {
        let idx: Vec<String> = fit.excluded.iter().map(|i| i.to_string()).collect();
        writeln!(w, "# excluded_points={}", idx.join(";"))?;
    }
    Ok(())
}

/// Shared setup for the two scan commands.
fn scan_config(scheme: &str, p: usize, alpha: Option<f64>) -> Result<(SchemeInfo, f64)> {
    let info = SchemeInfo::named(scheme)?;
    let alpha = match alpha {
        Some(a) => a,
        None if p == 0 => 1.0, // unused by the plain scheme
        None => {
            let c = info.intercept.ok_or_else(|| {
                TaseError::InvalidConfig(format!(
                    "TASE needs an explicit scheme, got {}",
                    info.name()
                ))
            })?;
            alpha_min(p, c)
        }
    };
    Ok((info, alpha))
}

fn write_scan(
    w: &mut dyn Write,
    header: &str,
    scan: &StabilityScan,
    seed: u64,
    extra: &[(&str, String)],
) -> io::Result<()> {
    writeln!(w, "# tasekit {header}")?;
    writeln!(w, "# scheme={}", scan.scheme)?;
    writeln!(w, "# tase_p={}", scan.p)?;
    writeln!(w, "# alpha={}", fmt(scan.alpha))?;
    for (k, v) in extra {
        writeln!(w, "# {k}={v}")?;
    }
    writeln!(w, "# seed={seed}")?;
    writeln!(w, "# max_abs={}", fmt(scan.max_abs()))?;
    writeln!(w, "# count_above_one={}", scan.count_above(1.0 + 1e-10))?;
    Ok(())
}

fn cmd_stability_map(args: &MapArgs, w: &mut dyn Write) -> Result<()> {
    let (info, alpha) = scan_config(&args.scheme, args.tase, args.alpha)?;
    let (n_r, n_theta) = args
        .grid
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse::<usize>().ok()?, b.parse::<usize>().ok()?)))
        .ok_or_else(|| {
            TaseError::InvalidConfig(format!("grid must look like 201x201, got '{}'", args.grid))
        })?;
    let scan = scan_left_half_plane(&info, args.tase, alpha, 1e-6, 1e8, n_r, n_theta)?;
    write_scan(
        w,
        "stability-map",
        &scan,
        args.seed,
        &[
            ("grid", format!("{n_r}x{n_theta}")),
            ("radii", "1e-6..1e8 log-spaced".to_string()),
        ],
    )?;
    writeln!(w, "re,im,abs_sigma")?;
    for (z, (v, m)) in scan
        .points
        .iter()
        .zip(scan.values.iter().zip(&scan.pole_mask))
    {
        let s = if *m { "pole".to_string() } else { fmt(*v) };
        writeln!(w, "{},{},{s}", fmt(z.re), fmt(z.im))?;
    }
    Ok(())
}

fn cmd_imag_scan(args: &ScanArgs, w: &mut dyn Write) -> Result<()> {
    let (info, alpha) = scan_config(&args.scheme, args.tase, args.alpha)?;
    let scan = imag_axis_scan(&info, args.tase, alpha, args.ymax, args.samples)?;
    write_scan(
        w,
        "imag-scan",
        &scan,
        args.seed,
        &[("ymax", fmt(args.ymax)), ("samples", args.samples.to_string())],
    )?;
    writeln!(w, "y,abs_sigma")?;
    for (z, (v, m)) in scan
        .points
        .iter()
        .zip(scan.values.iter().zip(&scan.pole_mask))
    {
        let s = if *m { "pole".to_string() } else { fmt(*v) };
        writeln!(w, "{},{s}", fmt(z.im))?;
    }
    Ok(())
}

/// The minimum-alpha table: rows RK1..RK4, columns p=1..s, entries
/// (2^p - 1)/C printed to two decimals.
pub fn alpha_table() -> String {
    let mut out = String::from("scheme,p=1,p=2,p=3,p=4\n");
    for s in 1..=4usize {
        let name = format!("RK{s}");
        let info = SchemeInfo::named(&name).expect("registry scheme");
        let c = info.intercept.expect("explicit scheme");
        out.push_str(&name);
        for p in 1..=4usize {
            if p <= s {
                out.push_str(&format!(",{:.2}", alpha_min(p, c)));
            } else {
                out.push(',');
            }
        }
        out.push('\n');
    }
    out
}

fn open_out(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    match path {
        Some(p) => {
            let f = File::create(p).map_err(|e| {
                TaseError::InvalidConfig(format!("cannot create {}: {e}", p.display()))
            })?;
            Ok(Box::new(BufWriter::new(f)))
        }
        None => Ok(Box::new(BufWriter::new(io::stdout()))),
    }
}

fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::RunCase(args) => {
            let mut w = open_out(&args.out)?;
            cmd_run_case(args, &mut w)?;
            w.flush()?;
        }
        Command::Converge(args) => {
            let mut w = open_out(&args.out)?;
            cmd_converge(args, &mut w)?;
            w.flush()?;
        }
        Command::StabilityMap(args) => {
            let mut w = open_out(&args.out)?;
            cmd_stability_map(args, &mut w)?;
            w.flush()?;
        }
        Command::ImagScan(args) => {
            let mut w = open_out(&args.out)?;
            cmd_imag_scan(args, &mut w)?;
            w.flush()?;
        }
        Command::AlphaTable => {
            let mut w = open_out(&None)?;
            w.write_all(alpha_table().as_bytes())?;
            w.flush()?;
        }
    }
    Ok(())
}

/// Parses argv and runs; returns the process exit code.
pub fn run() -> i32 {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("tasekit: {e}");
            if e.is_config_error() {
                2
            } else {
                3
            }
        }
    }
}

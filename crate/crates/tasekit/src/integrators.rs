//! Time steppers: explicit RK with or without TASE preconditioning
//! (combined, operator-split, and frozen-linearization nonlinear modes) and
//! diagonally implicit RK with direct linear solves or Newton iteration.
//!
//! All steppers advance semi-discrete systems dY/dt = F(Y, t) with a fixed
//! step; step-size control is deliberately out of scope. A blow-up during a
//! run is recorded in the trajectory and stops the run — an unstable
//! integration is a result, not an error.

use crate::error::{Result, TaseError};
use crate::numkit::{DenseMatrix, Factorization, Operator};
use crate::schemes::SchemeInfo;
use crate::tase::{build_shift_set, ShiftSet, TaseConfig};
use std::time::Instant;

/// Max-norm threshold past which a run is declared diverged.
pub const DIVERGENCE_NORM: f64 = 1e10;
/// Newton stage iteration: absolute residual target and iteration cap.
pub const NEWTON_TOL: f64 = 1e-12;
pub const NEWTON_MAX_ITER: usize = 50;

/// Time-dependent source term S(t), returned as a full vector.
pub type SourceFn = Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>;
/// Full right-hand side F(Y, t) for nonlinear problems. Fallible so that
/// domain violations (e.g. fractional powers of negative state) surface.
pub type RhsFn = Box<dyn Fn(&[f64], f64) -> Result<Vec<f64>> + Send + Sync>;
/// State-dependent linearization L(Y) used to freeze a TASE operator.
pub type LinearizeFn = Box<dyn Fn(&[f64]) -> Result<Operator> + Send + Sync>;

/// One additive term of a split right-hand side: Y' = sum_g (L_g Y + S_g).
pub struct SplitGroup {
    pub label: String,
    pub operator: Operator,
    pub source: Option<SourceFn>,
}

/// A spatially discretized problem ready for time stepping.
///
/// Linear problems populate `linear_part` (+ `source`); nonlinear problems
/// populate `nonlinear_rhs` (+ `linearization` if TASE stepping is wanted);
/// split problems additionally carry the per-group operators whose sum is
/// the monolithic `linear_part`.
pub struct SemiDiscreteSystem {
    pub dimension: usize,
    pub linear_part: Option<Operator>,
    pub source: Option<SourceFn>,
    pub nonlinear_rhs: Option<RhsFn>,
    pub linearization: Option<LinearizeFn>,
    pub splits: Vec<SplitGroup>,
}

impl SemiDiscreteSystem {
    pub fn from_linear(operator: Operator, source: Option<SourceFn>) -> Self {
        SemiDiscreteSystem {
            dimension: operator.dimension(),
            linear_part: Some(operator),
            source,
            nonlinear_rhs: None,
            linearization: None,
            splits: Vec::new(),
        }
    }

    pub fn from_nonlinear(
        dimension: usize,
        rhs: RhsFn,
        linearization: Option<LinearizeFn>,
    ) -> Self {
        SemiDiscreteSystem {
            dimension,
            linear_part: None,
            source: None,
            nonlinear_rhs: Some(rhs),
            linearization,
            splits: Vec::new(),
        }
    }

    /// The full right-hand side at (y, t), whichever way it is stored.
    pub fn rhs(&self, y: &[f64], t: f64) -> Result<Vec<f64>> {
        if let Some(f) = &self.nonlinear_rhs {
            return f(y, t);
        }
        let l = self.linear_part.as_ref().ok_or_else(|| {
            TaseError::InvalidConfig("system has neither a linear part nor a nonlinear rhs".into())
        })?;
        let mut out = l.matvec(y);
        if let Some(s) = &self.source {
            for (o, si) in out.iter_mut().zip(s(t)) {
                *o += si;
            }
        }
        Ok(out)
    }
}

/// How a step treats the right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// The scheme as-is: explicit stages, or implicit stage solves.
    Plain,
    /// One TASE operator built from the monolithic linear part.
    TaseCombined,
    /// One TASE operator per split group, each with its own alpha.
    TaseSplit,
    /// TASE around a linearization frozen at the start of each step.
    TaseNonlinear,
}

/// Scheme, step size, and TASE configuration for a run.
#[derive(Clone)]
pub struct StepPlan {
    pub scheme: SchemeInfo,
    pub dt: f64,
    pub mode: StepMode,
    pub tase: Option<TaseConfig>,
    /// Per-group configs for `TaseSplit`; empty means "use `tase` for all".
    /// A `None` entry leaves that group unpreconditioned — its contribution
    /// is the plain `L y + S`, useful when only one group is stiff.
    pub group_tase: Vec<Option<TaseConfig>>,
    /// When false, sources are added after the preconditioner instead of
    /// passing through it — the deliberately wrong variant kept around to
    /// demonstrate the accuracy loss.
    pub source_through_tase: bool,
}

impl StepPlan {
    pub fn plain(scheme: SchemeInfo, dt: f64) -> Self {
        StepPlan {
            scheme,
            dt,
            mode: StepMode::Plain,
            tase: None,
            group_tase: Vec::new(),
            source_through_tase: true,
        }
    }

    pub fn tase(scheme: SchemeInfo, dt: f64, config: TaseConfig, mode: StepMode) -> Self {
        StepPlan {
            scheme,
            dt,
            mode,
            tase: Some(config),
            group_tase: Vec::new(),
            source_through_tase: true,
        }
    }

    /// Overrides the per-group TASE configs for split stepping. `None`
    /// entries step their group plain.
    pub fn with_group_tase(mut self, groups: Vec<Option<TaseConfig>>) -> Self {
        self.group_tase = groups;
        self
    }
}

/// Everything a finished (or aborted) run reports back.
#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Step boundary times actually reached, starting at t0.
    pub times: Vec<f64>,
    /// State snapshots aligned with `times`.
    pub states: Vec<Vec<f64>>,
    /// Max-norm of the state after each completed step.
    pub step_max_norm: Vec<f64>,
    /// Newton iterations spent per step (zero on non-Newton paths).
    pub newton_iterations: Vec<usize>,
    /// Final Newton residual per step (zero on non-Newton paths).
    pub newton_residuals: Vec<f64>,
    /// Index of the step whose result crossed the divergence threshold.
    pub diverged_at_step: Option<usize>,
    pub wall_time: std::time::Duration,
}

impl Trajectory {
    pub fn final_state(&self) -> &[f64] {
        self.states.last().expect("trajectory always holds t0")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory always holds t0")
    }

    pub fn diverged(&self) -> bool {
        self.diverged_at_step.is_some()
    }

    pub fn steps_completed(&self) -> usize {
        self.times.len() - 1
    }

    /// Mean wall time per completed step, in seconds.
    pub fn seconds_per_step(&self) -> f64 {
        let n = self.steps_completed();
        if n == 0 {
            return 0.0;
        }
        self.wall_time.as_secs_f64() / n as f64
    }
}

fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |m, &x| m.max(x.abs()))
}

/// Forward-difference Jacobian of `f` at `y`, column by column, with the
/// standard sqrt(machine-eps) relative increment.
pub fn jacobian_fd<F>(f: F, y: &[f64]) -> Result<DenseMatrix>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let n = y.len();
    let f0 = f(y)?;
    if f0.len() != n {
        return Err(TaseError::Shape(format!(
            "jacobian of a map from {} to {} components is not square",
            n,
            f0.len()
        )));
    }
    let mut jac = DenseMatrix::zeros(n, n);
    let mut yh = y.to_vec();
    let sqrt_eps = f64::EPSILON.sqrt();
    for j in 0..n {
        let h = sqrt_eps * (1.0 + y[j].abs());
        yh[j] = y[j] + h;
        let fj = f(&yh)?;
        yh[j] = y[j];
        for i in 0..n {
            *jac.at_mut(i, j) = (fj[i] - f0[i]) / h;
        }
    }
    Ok(jac)
}

/// Generic explicit RK sweep over a stage-rhs callback.
fn explicit_step(
    scheme: &SchemeInfo,
    dt: f64,
    y: &[f64],
    t: f64,
    stage_rhs: &mut dyn FnMut(&[f64], f64) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let tab = &scheme.tableau;
    let s = tab.stages();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut yi = vec![0.0; y.len()];
    for i in 0..s {
        yi.copy_from_slice(y);
        for (j, kj) in k.iter().enumerate() {
            let a = tab.a[i][j];
            if a != 0.0 {
                for (yv, kv) in yi.iter_mut().zip(kj) {
                    *yv += dt * a * kv;
                }
            }
        }
        k.push(stage_rhs(&yi, t + tab.c[i] * dt)?);
    }
    let mut out = y.to_vec();
    for (i, ki) in k.iter().enumerate() {
        let b = tab.b[i];
        if b != 0.0 {
            for (o, kv) in out.iter_mut().zip(ki) {
                *o += dt * b * kv;
            }
        }
    }
    Ok(out)
}

/// Per-run caches: shift sets and implicit-stage factorizations survive
/// across steps; only the nonlinear mode rebuilds per step.
enum RunCache {
    Explicit,
    Combined(ShiftSet),
    Split(Vec<Option<ShiftSet>>),
    NonlinearTase(TaseConfig),
    ImplicitLinear(Vec<Option<Factorization>>),
    ImplicitNewton,
}

fn stage_rhs_combined(
    system: &SemiDiscreteSystem,
    shift: &ShiftSet,
    through: bool,
    yi: &[f64],
    ti: f64,
) -> Result<Vec<f64>> {
    match (&system.source, through) {
        (None, _) => shift.apply_operator(yi),
        (Some(s), true) => {
            let l = system.linear_part.as_ref().expect("validated");
            let mut r = l.matvec(yi);
            for (rv, sv) in r.iter_mut().zip(s(ti)) {
                *rv += sv;
            }
            shift.apply_preconditioner(&r)
        }
        (Some(s), false) => {
            let mut out = shift.apply_operator(yi)?;
            for (o, sv) in out.iter_mut().zip(s(ti)) {
                *o += sv;
            }
            Ok(out)
        }
    }
}

fn stage_rhs_split(
    system: &SemiDiscreteSystem,
    shifts: &[Option<ShiftSet>],
    through: bool,
    yi: &[f64],
    ti: f64,
) -> Result<Vec<f64>> {
    let mut out = vec![0.0; yi.len()];
    for (group, shift) in system.splits.iter().zip(shifts) {
        let contrib = match (shift, &group.source, through) {
            // Unpreconditioned group: plain L y (+ S).
            (None, src, _) => {
                let mut r = group.operator.matvec(yi);
                if let Some(s) = src {
                    for (rv, sv) in r.iter_mut().zip(s(ti)) {
                        *rv += sv;
                    }
                }
                r
            }
            (Some(shift), None, _) => shift.apply_operator(yi)?,
            (Some(shift), Some(s), true) => {
                let mut r = group.operator.matvec(yi);
                for (rv, sv) in r.iter_mut().zip(s(ti)) {
                    *rv += sv;
                }
                shift.apply_preconditioner(&r)?
            }
            (Some(shift), Some(s), false) => {
                let mut c = shift.apply_operator(yi)?;
                for (cv, sv) in c.iter_mut().zip(s(ti)) {
                    *cv += sv;
                }
                c
            }
        };
        for (o, cv) in out.iter_mut().zip(&contrib) {
            *o += cv;
        }
    }
    Ok(out)
}

/// Diagonally implicit step with direct solves (linear right-hand side).
/// Stage i solves `(I - dt a_ii L) k_i = L y_partial + S(t_i)`.
fn sdirk_step_linear(
    scheme: &SchemeInfo,
    system: &SemiDiscreteSystem,
    factors: &[Option<Factorization>],
    dt: f64,
    y: &[f64],
    t: f64,
) -> Result<Vec<f64>> {
    let tab = &scheme.tableau;
    let l = system.linear_part.as_ref().ok_or_else(|| {
        TaseError::InvalidConfig("implicit linear stepping needs a linear part".into())
    })?;
    let s = tab.stages();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut yi = vec![0.0; y.len()];
    for i in 0..s {
        yi.copy_from_slice(y);
        for (j, kj) in k.iter().enumerate() {
            let a = tab.a[i][j];
            if a != 0.0 {
                for (yv, kv) in yi.iter_mut().zip(kj) {
                    *yv += dt * a * kv;
                }
            }
        }
        let ti = t + tab.c[i] * dt;
        let mut r = l.matvec(&yi);
        if let Some(src) = &system.source {
            for (rv, sv) in r.iter_mut().zip(src(ti)) {
                *rv += sv;
            }
        }
        let ki = match &factors[i] {
            None => r,
            Some(f) => f.solve(&r)?,
        };
        k.push(ki);
    }
    let mut out = y.to_vec();
    for (i, ki) in k.iter().enumerate() {
        if tab.b[i] != 0.0 {
            for (o, kv) in out.iter_mut().zip(ki) {
                *o += dt * tab.b[i] * kv;
            }
        }
    }
    Ok(out)
}

/// Diagonally implicit step with a full Newton solve per stage:
/// `k = F(y_partial + dt a_ii k, t_i)`, finite-difference Jacobian
/// refreshed every iteration, previous stage slope as the initial guess.
fn sdirk_step_newton(
    scheme: &SchemeInfo,
    system: &SemiDiscreteSystem,
    dt: f64,
    y: &[f64],
    t: f64,
    newton_iters: &mut usize,
    newton_residual: &mut f64,
) -> Result<Vec<f64>> {
    let tab = &scheme.tableau;
    let rhs = system.nonlinear_rhs.as_ref().ok_or_else(|| {
        TaseError::InvalidConfig("Newton stepping needs a nonlinear right-hand side".into())
    })?;
    let n = y.len();
    let s = tab.stages();
    let mut k: Vec<Vec<f64>> = Vec::with_capacity(s);
    let mut yi = vec![0.0; n];
    for i in 0..s {
        yi.copy_from_slice(y);
        for (j, kj) in k.iter().enumerate() {
            let a = tab.a[i][j];
            if a != 0.0 {
                for (yv, kv) in yi.iter_mut().zip(kj) {
                    *yv += dt * a * kv;
                }
            }
        }
        let ti = t + tab.c[i] * dt;
        let aii = tab.a[i][i];
        if aii == 0.0 {
            k.push(rhs(&yi, ti)?);
            continue;
        }
        let mut ki = match k.last() {
            Some(prev) => prev.clone(),
            None => rhs(&yi, ti)?,
        };
        let mut history: Vec<f64> = Vec::new();
        let mut converged = false;
        for _ in 0..NEWTON_MAX_ITER {
            let ystage: Vec<f64> = yi
                .iter()
                .zip(&ki)
                .map(|(yv, kv)| yv + dt * aii * kv)
                .collect();
            let f = rhs(&ystage, ti)?;
            let residual: Vec<f64> = ki.iter().zip(&f).map(|(kv, fv)| kv - fv).collect();
            let rnorm = max_norm(&residual);
            history.push(rnorm);
            *newton_iters += 1;
            *newton_residual = rnorm;
            if rnorm < NEWTON_TOL {
                converged = true;
                break;
            }
            let jac = jacobian_fd(|v| rhs(v, ti), &ystage)?;
            let mut mat = DenseMatrix::identity(n);
            mat.add_scaled(&jac, -dt * aii)?;
            let delta = Operator::Dense(mat).factor()?.solve(&residual)?;
            for (kv, dv) in ki.iter_mut().zip(&delta) {
                *kv -= dv;
            }
        }
        if !converged {
            let tail: Vec<String> = history
                .iter()
                .rev()
                .take(5)
                .rev()
                .map(|r| format!("{r:.3e}"))
                .collect();
            return Err(TaseError::Numerical(format!(
                "Newton stage {i} failed to reach residual {NEWTON_TOL} in {NEWTON_MAX_ITER} \
                 iterations at t = {t}; trailing residuals [{}]",
                tail.join(", ")
            )));
        }
        k.push(ki);
    }
    let mut out = y.to_vec();
    for (i, ki) in k.iter().enumerate() {
        if tab.b[i] != 0.0 {
            for (o, kv) in out.iter_mut().zip(ki) {
                *o += dt * tab.b[i] * kv;
            }
        }
    }
    Ok(out)
}

fn validate_and_cache(system: &SemiDiscreteSystem, plan: &StepPlan) -> Result<RunCache> {
    if !(plan.dt > 0.0) && plan.dt.is_finite() {
        return Err(TaseError::InvalidConfig(format!(
            "step size must be positive, got {}",
            plan.dt
        )));
    }
    let explicit = plan.scheme.tableau.is_explicit();
    match plan.mode {
        StepMode::Plain => {
            if explicit {
                Ok(RunCache::Explicit)
            } else if system.nonlinear_rhs.is_some() {
                Ok(RunCache::ImplicitNewton)
            } else {
                let l = system.linear_part.as_ref().ok_or_else(|| {
                    TaseError::InvalidConfig(
                        "implicit stepping needs a linear part or a nonlinear rhs".into(),
                    )
                })?;
                let tab = &plan.scheme.tableau;
                let mut factors: Vec<Option<Factorization>> = Vec::with_capacity(tab.stages());
                for i in 0..tab.stages() {
                    let aii = tab.a[i][i];
                    if aii == 0.0 {
                        factors.push(None);
                    } else {
                        // Reuse the factorization when a_ii repeats — the
                        // whole point of the SDIRK family.
                        let existing = (0..i)
                            .find(|&j| tab.a[j][j] == aii && factors[j].is_some());
                        match existing {
                            Some(j) => factors.push(factors[j].clone()),
                            None => {
                                let shifted = l.shifted(1.0, plan.dt * aii);
                                factors.push(Some(shifted.factor()?));
                            }
                        }
                    }
                }
                Ok(RunCache::ImplicitLinear(factors))
            }
        }
        StepMode::TaseCombined | StepMode::TaseSplit | StepMode::TaseNonlinear => {
            if !explicit {
                return Err(TaseError::InvalidConfig(format!(
                    "TASE stepping requires an explicit scheme, got {}",
                    plan.scheme.name()
                )));
            }
            let cfg = plan.tase.ok_or_else(|| {
                TaseError::InvalidConfig("TASE stepping without a TASE config".into())
            })?;
            match plan.mode {
                StepMode::TaseCombined => {
                    let l = system.linear_part.as_ref().ok_or_else(|| {
                        TaseError::InvalidConfig(
                            "combined TASE stepping needs the monolithic linear part".into(),
                        )
                    })?;
                    Ok(RunCache::Combined(build_shift_set(l, cfg, plan.dt)?))
                }
                StepMode::TaseSplit => {
                    if system.splits.is_empty() {
                        return Err(TaseError::InvalidConfig(
                            "split TASE stepping on a system without split groups".into(),
                        ));
                    }
                    let configs: Vec<Option<TaseConfig>> = if plan.group_tase.is_empty() {
                        vec![Some(cfg); system.splits.len()]
                    } else if plan.group_tase.len() == system.splits.len() {
                        plan.group_tase.clone()
                    } else {
                        return Err(TaseError::InvalidConfig(format!(
                            "{} per-group TASE configs for {} split groups",
                            plan.group_tase.len(),
                            system.splits.len()
                        )));
                    };
                    let mut shifts = Vec::with_capacity(system.splits.len());
                    for (group, gcfg) in system.splits.iter().zip(configs) {
                        shifts.push(match gcfg {
                            Some(c) => Some(build_shift_set(&group.operator, c, plan.dt)?),
                            None => None,
                        });
                    }
                    Ok(RunCache::Split(shifts))
                }
                StepMode::TaseNonlinear => {
                    if system.nonlinear_rhs.is_none() || system.linearization.is_none() {
                        return Err(TaseError::InvalidConfig(
                            "nonlinear TASE stepping needs both a rhs and a linearization".into(),
                        ));
                    }
                    Ok(RunCache::NonlinearTase(cfg))
                }
                StepMode::Plain => unreachable!(),
            }
        }
    }
}

/// Advances `n_steps` fixed steps from `(t0, y0)`.
///
/// Configuration problems error out before the first step. Once running,
/// a state whose max-norm exceeds [`DIVERGENCE_NORM`] (or stops being
/// finite) ends the run early with the offending step recorded.
pub fn integrate(
    system: &SemiDiscreteSystem,
    plan: &StepPlan,
    y0: &[f64],
    t0: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    if y0.len() != system.dimension {
        return Err(TaseError::Shape(format!(
            "initial state has length {}, system dimension is {}",
            y0.len(),
            system.dimension
        )));
    }
    let cache = validate_and_cache(system, plan)?;
    let start = Instant::now();
    let mut traj = Trajectory {
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        step_max_norm: Vec::with_capacity(n_steps),
        newton_iterations: Vec::with_capacity(n_steps),
        newton_residuals: Vec::with_capacity(n_steps),
        diverged_at_step: None,
        wall_time: std::time::Duration::ZERO,
    };
    traj.times.push(t0);
    traj.states.push(y0.to_vec());
    let mut y = y0.to_vec();
    let mut t = t0;
    for step in 0..n_steps {
        let mut iters = 0usize;
        let mut residual = 0.0f64;
        let y_next = match &cache {
            RunCache::Explicit => explicit_step(
                &plan.scheme,
                plan.dt,
                &y,
                t,
                &mut |yi, ti| system.rhs(yi, ti),
            )?,
            RunCache::Combined(shift) => explicit_step(
                &plan.scheme,
                plan.dt,
                &y,
                t,
                &mut |yi, ti| {
                    stage_rhs_combined(system, shift, plan.source_through_tase, yi, ti)
                },
            )?,
            RunCache::Split(shifts) => explicit_step(
                &plan.scheme,
                plan.dt,
                &y,
                t,
                &mut |yi, ti| stage_rhs_split(system, shifts, plan.source_through_tase, yi, ti),
            )?,
            RunCache::NonlinearTase(cfg) => {
                let linearize = system.linearization.as_ref().expect("validated");
                let rhs = system.nonlinear_rhs.as_ref().expect("validated");
                let frozen = linearize(&y)?;
                let shift = build_shift_set(&frozen, *cfg, plan.dt)?;
                explicit_step(&plan.scheme, plan.dt, &y, t, &mut |yi, ti| {
                    shift.apply_preconditioner(&rhs(yi, ti)?)
                })?
            }
            RunCache::ImplicitLinear(factors) => {
                sdirk_step_linear(&plan.scheme, system, factors, plan.dt, &y, t)?
            }
            RunCache::ImplicitNewton => sdirk_step_newton(
                &plan.scheme,
                system,
                plan.dt,
                &y,
                t,
                &mut iters,
                &mut residual,
            )?,
        };
        y = y_next;
        t = t0 + (step + 1) as f64 * plan.dt;
        let norm = max_norm(&y);
        traj.times.push(t);
        traj.states.push(y.clone());
        traj.step_max_norm.push(norm);
        traj.newton_iterations.push(iters);
        traj.newton_residuals.push(residual);
        if !norm.is_finite() || norm > DIVERGENCE_NORM {
            traj.diverged_at_step = Some(step);
            break;
        }
    }
    traj.wall_time = start.elapsed();
    Ok(traj)
}

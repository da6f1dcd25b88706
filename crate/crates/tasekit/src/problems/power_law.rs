//! Nonlinear diffusion with a power-law coefficient (Y/2)^beta on [-5, 5]:
//! the flux shuts down where the state is small and runs fastest at the
//! center of the initial bump. Stepping freezes the tridiagonal
//! linearization at the start of each step and wraps TASE around it.

use super::{Mesh1D, MeshKind, ProblemCase, Spacing};
use crate::error::{Result, TaseError};
use crate::integrators::{LinearizeFn, RhsFn, SemiDiscreteSystem, StepMode, StepPlan};
use crate::numkit::{BandedMatrix, Operator};
use crate::schemes::SchemeInfo;
use crate::tase::{alpha_min, TaseConfig, TaseForm};

/// Floor applied to face averages before raising them to a fractional
/// power, so a state grazing zero degrades gracefully instead of emitting
/// NaN. The initial data stays >= 1, so in calibrated runs the clamp is
/// dormant.
const STATE_FLOOR: f64 = 1e-12;

fn diffusivity(u: f64, beta: f64) -> f64 {
    (u.max(STATE_FLOOR) / 2.0).powf(beta)
}

/// Guards fractional powers: a non-integer beta cannot act on a state with
/// nonpositive entries (the clamp would silently rewrite the problem).
fn check_state_domain(y: &[f64], beta: f64) -> Result<()> {
    if beta.fract() != 0.0 && y.iter().any(|&v| v <= 0.0) {
        return Err(TaseError::Domain(format!(
            "fractional power beta={beta} needs a strictly positive state"
        )));
    }
    Ok(())
}

/// dY/dt = d/dx[(Y/2)^beta dY/dx] on [-5, 5] with zero-flux walls and
/// initial bump 1 + e^{-x^2/4}.
///
/// `n` cells, cell-centered. Fluxes live on interior faces with the
/// coefficient evaluated at the face average; wall fluxes are zero, so the
/// discrete integral of Y is conserved exactly. With beta=0 the problem
/// degenerates to constant-coefficient diffusion and the linearization to
/// the plain Laplacian.
pub fn power_law_diffusion(n: usize, beta: f64) -> Result<ProblemCase> {
    if n < 10 {
        return Err(TaseError::InvalidConfig(format!(
            "power-law case needs at least 10 cells, got {n}"
        )));
    }
    if !(beta >= 0.0) || !beta.is_finite() {
        return Err(TaseError::InvalidConfig(format!(
            "beta must be finite and nonnegative, got {beta}"
        )));
    }
    let (xl, xr) = (-5.0_f64, 5.0_f64);
    let dx = (xr - xl) / n as f64;
    let xc: Vec<f64> = (0..n).map(|i| xl + dx * (i as f64 + 0.5)).collect();

    let rhs: RhsFn = Box::new(move |y: &[f64], _t: f64| {
        check_state_domain(y, beta)?;
        let mut out = vec![0.0; y.len()];
        for i in 0..y.len() - 1 {
            let ybar = 0.5 * (y[i] + y[i + 1]);
            let flux = diffusivity(ybar, beta) * (y[i + 1] - y[i]) / dx;
            out[i] += flux / dx;
            out[i + 1] -= flux / dx;
        }
        Ok(out)
    });

    let linearization: LinearizeFn = Box::new(move |y: &[f64]| {
        check_state_domain(y, beta)?;
        let m = y.len();
        let mut jac = BandedMatrix::zeros(m, 1, 1);
        for i in 0..m - 1 {
            let ybar = 0.5 * (y[i] + y[i + 1]);
            let gv = diffusivity(ybar, beta);
            // d(coefficient)/d(face average), zero when the coefficient is
            // constant so no 0 * inf can leak out of the power rule.
            let gp = if beta == 0.0 {
                0.0
            } else {
                beta * (ybar.max(STATE_FLOOR) / 2.0).powf(beta - 1.0) * 0.5
            };
            let dyf = (y[i + 1] - y[i]) / dx;
            let df_dl = gp * 0.5 * dyf - gv / dx;
            let df_dr = gp * 0.5 * dyf + gv / dx;
            jac.add_to(i, i, df_dl / dx);
            jac.add_to(i, i + 1, df_dr / dx);
            jac.add_to(i + 1, i, -df_dl / dx);
            jac.add_to(i + 1, i + 1, -df_dr / dx);
        }
        Ok(Operator::Banded(jac))
    });

    let initial_state: Vec<f64> = xc.iter().map(|&x| 1.0 + (-0.25 * x * x).exp()).collect();
    let system = SemiDiscreteSystem::from_nonlinear(n, rhs, Some(linearization));

    // Fourth-order stepping; the stable step uses the peak coefficient
    // (Y/2)^beta <= 1 for states bounded by 2, so D=4 as for the plain
    // second-order Laplacian.
    let scheme = SchemeInfo::named("erk4")?;
    let c4 = scheme.intercept.expect("explicit schemes carry an intercept");
    let cfg = TaseConfig::new(4, alpha_min(4, c4), TaseForm::Preconditioner)?;
    let plan = StepPlan::tase(scheme, 1.0 / 60.0, cfg, StepMode::TaseNonlinear);
    let dt_stab = c4 * dx * dx / 4.0;

    let mesh = Mesh1D::new(xc, Spacing::Uniform(dx), MeshKind::BoundedCells, (xl, xr))?;
    let norm_weights = mesh.weights();
    Ok(ProblemCase {
        name: format!("power-law-beta{beta}-n{n}"),
        system,
        mesh,
        initial_state,
        t_final: 1.0,
        exact: None,
        stability_dt: vec![("diffusion".into(), dt_stab)],
        recommended_plan: plan,
        norm_weights,
    })
}

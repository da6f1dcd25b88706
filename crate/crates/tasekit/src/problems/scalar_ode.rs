//! The scalar decay dy/dt = -y^beta from y(0)=1: algebraically, not
//! exponentially, stiff. The solution creeps toward zero like t^{1/(1-beta)}
//! while the explicit stable step stays pinned at 2/beta — so reaching
//! t=2e4 explicitly costs 1e5 steps, and a preconditioned run does it
//! in ten.

use super::{Mesh1D, MeshKind, ProblemCase, Spacing};
use crate::error::{Result, TaseError};
use crate::integrators::{LinearizeFn, RhsFn, SemiDiscreteSystem, StepMode, StepPlan};
use crate::numkit::{DenseMatrix, Operator};
use crate::schemes::SchemeInfo;
use crate::tase::{alpha_min, TaseConfig, TaseForm};

/// y^e for nonnegative y, using the integer fast path when the exponent
/// is a whole number.
fn pw(y: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e.abs() <= i32::MAX as f64 {
        y.powi(e as i32)
    } else {
        y.powf(e)
    }
}

/// dy/dt = -y^beta with y(0) = 1, run to t = 2e4.
///
/// Exact solution (1 + (beta-1) t)^{1/(1-beta)}; the linearization at y is
/// -beta y^{beta-1}, which starts at -beta and decays with the solution —
/// the stiffness is worst at the beginning.
pub fn stiff_scalar_ode(beta: f64) -> Result<ProblemCase> {
    if !(beta > 1.0) || !beta.is_finite() {
        return Err(TaseError::InvalidConfig(format!(
            "scalar decay needs beta > 1, got {beta}"
        )));
    }
    let rhs: RhsFn = Box::new(move |y: &[f64], _t: f64| Ok(vec![-pw(y[0], beta)]));
    let linearization: LinearizeFn = Box::new(move |y: &[f64]| {
        let mut l = DenseMatrix::zeros(1, 1);
        *l.at_mut(0, 0) = -beta * pw(y[0], beta - 1.0);
        Ok(Operator::Dense(l))
    });
    let exact = Box::new(move |t: f64| vec![(1.0 + (beta - 1.0) * t).powf(1.0 / (1.0 - beta))]);

    let t_final = 2e4;
    let scheme = SchemeInfo::named("erk2")?;
    let c = scheme.intercept.expect("explicit schemes carry an intercept");
    let cfg = TaseConfig::new(2, alpha_min(2, c), TaseForm::Preconditioner)?;
    let plan = StepPlan::tase(scheme, t_final / 10.0, cfg, StepMode::TaseNonlinear);

    // A single abstract "point"; the mesh exists only to satisfy the common
    // case layout, and the norm weight is 1.
    let mesh = Mesh1D::new(
        vec![0.5],
        Spacing::Uniform(1.0),
        MeshKind::BoundedCells,
        (0.0, 1.0),
    )?;
    Ok(ProblemCase {
        name: format!("stiff-scalar-beta{beta}"),
        system: SemiDiscreteSystem::from_nonlinear(1, rhs, Some(linearization)),
        mesh,
        initial_state: vec![1.0],
        t_final,
        exact: Some(exact),
        stability_dt: vec![("decay".into(), 2.0 / beta)],
        recommended_plan: plan,
        norm_weights: vec![1.0],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution_endpoints() {
        let case = stiff_scalar_ode(10.0).unwrap();
        assert_eq!(case.exact_at(0.0).unwrap()[0], 1.0);
        let want = 180001.0_f64.powf(-1.0 / 9.0);
        assert!((case.exact_at(2e4).unwrap()[0] - want).abs() < 1e-15);
        // Cross-check the closed form against its defining property:
        // d/dt of the exact solution equals -y^10.
        let t = 7.0;
        let y = case.exact_at(t).unwrap()[0];
        let h = 1e-6;
        let dydt =
            (case.exact_at(t + h).unwrap()[0] - case.exact_at(t - h).unwrap()[0]) / (2.0 * h);
        assert!((dydt + y.powi(10)).abs() < 1e-10, "defect {}", dydt + y.powi(10));
    }

    #[test]
    fn linearization_value() {
        let case = stiff_scalar_ode(10.0).unwrap();
        let l = (case.system.linearization.as_ref().unwrap())(&[0.5]).unwrap();
        let got = l.to_dense().at(0, 0);
        assert_eq!(got, -10.0 * 0.5_f64.powi(9));
    }

    #[test]
    fn stability_step_is_two_over_beta() {
        let case = stiff_scalar_ode(10.0).unwrap();
        assert_eq!(case.stability_dt_for("decay").unwrap(), 0.2);
        // Ten recommended steps cover the horizon.
        assert_eq!(case.default_steps(), 10);
    }

    #[test]
    fn rhs_is_strictly_dissipative_on_the_unit_interval() {
        let case = stiff_scalar_ode(10.0).unwrap();
        let rhs = case.system.nonlinear_rhs.as_ref().unwrap();
        for y in [1.0, 0.5, 0.1] {
            assert!(rhs(&[y], 0.0).unwrap()[0] < 0.0);
        }
    }

    #[test]
    fn rejects_non_stiff_exponents() {
        assert!(stiff_scalar_ode(1.0).is_err());
        assert!(stiff_scalar_ode(0.5).is_err());
        assert!(stiff_scalar_ode(f64::NAN).is_err());
    }
}

//! Scalar diffusion on [0, 2pi): the over-resolved benchmark where the
//! stable step is orders of magnitude below the physical time scale, plus
//! the Dirichlet variant whose boundary data lives in the source vector.

use super::{Mesh1D, MeshKind, ProblemCase, Spacing};
use crate::error::{Result, TaseError};
use crate::integrators::{SemiDiscreteSystem, SourceFn, StepMode, StepPlan};
use crate::numkit::{BandedMatrix, DenseMatrix, Operator};
use crate::schemes::SchemeInfo;
use crate::tase::{alpha_min, TaseConfig, TaseForm};
use std::f64::consts::PI;

/// Spatial discretization of the second derivative on a periodic grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Differencing {
    /// Second-order central stencil; stiffness constant 4.
    Fd2,
    /// Fourth-order central stencil; stiffness constant 16/3.
    Fd4,
    /// Spectral differentiation as an explicit dense matrix; stiffness
    /// constant pi^2. Exact on every resolved mode, so convergence studies
    /// against it see pure time error.
    Fourier,
}

impl Differencing {
    pub fn label(self) -> &'static str {
        match self {
            Differencing::Fd2 => "fd2",
            Differencing::Fd4 => "fd4",
            Differencing::Fourier => "fourier",
        }
    }

    /// The constant D in the explicit stability bound dt <= C dx^2 / D:
    /// the largest |eigenvalue| of the operator scaled by dx^2.
    pub fn stiffness_constant(self) -> f64 {
        match self {
            Differencing::Fd2 => 4.0,
            Differencing::Fd4 => 16.0 / 3.0,
            Differencing::Fourier => PI * PI,
        }
    }
}

/// dY/dt = d2Y/dx2 + A sin(t/tau_s) on [0, 2pi) with initial profile
/// 1 - cos(x).
///
/// The exact solution 1 - cos(x) e^{-t} - A tau_s (cos(t/tau_s) - 1) decays
/// on the O(1) physical time scale while the grid supports modes that decay
/// on the O(dx^2) scale — stiffness entirely of the grid's making. With
/// `a = 0` the forcing drops out and the profile relaxes to the uniform
/// state 1.
pub fn diffusion_periodic(
    n: usize,
    differencing: Differencing,
    a: f64,
    tau_s: f64,
) -> Result<ProblemCase> {
    if n < 4 {
        return Err(TaseError::InvalidConfig(format!(
            "periodic diffusion needs at least 4 points, got {n}"
        )));
    }
    if differencing == Differencing::Fourier && n % 2 != 0 {
        return Err(TaseError::InvalidConfig(format!(
            "spectral differencing needs an even point count, got {n}"
        )));
    }
    if !(tau_s > 0.0) || !a.is_finite() {
        return Err(TaseError::InvalidConfig(format!(
            "source needs finite amplitude and positive period, got A={a}, tau_s={tau_s}"
        )));
    }
    let dx = 2.0 * PI / n as f64;
    let x: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();

    let mut l = DenseMatrix::zeros(n, n);
    match differencing {
        Differencing::Fd2 => {
            let inv = 1.0 / (dx * dx);
            for i in 0..n {
                *l.at_mut(i, (i + n - 1) % n) += inv;
                *l.at_mut(i, i) += -2.0 * inv;
                *l.at_mut(i, (i + 1) % n) += inv;
            }
        }
        Differencing::Fd4 => {
            let inv = 1.0 / (12.0 * dx * dx);
            let stencil = [(-2_i64, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];
            for i in 0..n {
                for &(off, c) in &stencil {
                    let j = (i as i64 + off).rem_euclid(n as i64) as usize;
                    *l.at_mut(i, j) += c * inv;
                }
            }
        }
        Differencing::Fourier => {
            // Closed-form entries of the periodic spectral second-derivative
            // matrix for even n: a symmetric circulant, exact on all modes
            // up to Nyquist.
            let h = dx;
            let diag = -PI * PI / (3.0 * h * h) - 1.0 / 6.0;
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        *l.at_mut(i, j) = diag;
                    } else {
                        let k = i as i64 - j as i64;
                        let sign = if k.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
                        let s = ((k as f64) * h / 2.0).sin();
                        *l.at_mut(i, j) = -sign / (2.0 * s * s);
                    }
                }
            }
        }
    }

    let initial_state: Vec<f64> = x.iter().map(|&xi| 1.0 - xi.cos()).collect();
    let source: Option<SourceFn> = if a != 0.0 {
        Some(Box::new(move |t: f64| vec![a * (t / tau_s).sin(); n]))
    } else {
        None
    };
    let xe = x.clone();
    let exact = Box::new(move |t: f64| {
        let forced = a * tau_s * ((t / tau_s).cos() - 1.0);
        xe.iter().map(|&xi| 1.0 - xi.cos() * (-t).exp() - forced).collect()
    });

    // The calibrated pairings: second-order time stepping for the finite
    // differences, fourth-order for the spectral operator (whose spatial
    // error cannot hide time error of any order).
    let (scheme, p) = match differencing {
        Differencing::Fd2 | Differencing::Fd4 => (SchemeInfo::named("erk2")?, 2),
        Differencing::Fourier => (SchemeInfo::named("erk4")?, 4),
    };
    let c = scheme.intercept.expect("explicit schemes carry an intercept");
    let form = if a != 0.0 {
        TaseForm::Preconditioner
    } else {
        TaseForm::Operator
    };
    let cfg = TaseConfig::new(p, alpha_min(p, c), form)?;
    let dt_stab = c * dx * dx / differencing.stiffness_constant();
    let plan = StepPlan::tase(scheme, 0.25, cfg, StepMode::TaseCombined);

    let mesh = Mesh1D::new(
        x,
        Spacing::Uniform(dx),
        MeshKind::PeriodicNodes,
        (0.0, 2.0 * PI),
    )?;
    let norm_weights = mesh.weights();
    // Unforced runs resolve the decay over five physical times; forced runs
    // need three times that to settle into the periodic steady response.
    let t_final = if a != 0.0 { 15.0 } else { 5.0 };
    Ok(ProblemCase {
        name: format!("diffusion-periodic-{}-n{}", differencing.label(), n),
        system: SemiDiscreteSystem::from_linear(Operator::Dense(l), source),
        mesh,
        initial_state,
        t_final,
        exact: Some(exact),
        stability_dt: vec![("diffusion".into(), dt_stab)],
        recommended_plan: plan,
        norm_weights,
    })
}

/// dY/dt = d2Y/dx2 on [pi/2, 3pi/2] with Y = 1 held at both walls.
///
/// `n` is the number of grid intervals; the n-1 interior nodes are the
/// unknowns. Interior rows use the fourth-order stencil; the rows adjacent
/// to a wall drop to the second-order three-point stencil so no stencil
/// point falls outside the domain. Every stencil leg that lands on a wall
/// is folded into the constant source vector — which is exactly what makes
/// this case a probe of how sources pass through the preconditioner.
pub fn diffusion_dirichlet(n: usize) -> Result<ProblemCase> {
    if n < 6 {
        return Err(TaseError::InvalidConfig(format!(
            "Dirichlet diffusion needs at least 6 intervals, got {n}"
        )));
    }
    let xl = PI / 2.0;
    let dx = PI / n as f64;
    let m = n - 1; // interior unknowns
    let x: Vec<f64> = (1..n).map(|g| xl + g as f64 * dx).collect();
    let bc = 1.0; // wall value at both ends

    let mut l = BandedMatrix::zeros(m, 2, 2);
    let mut s = vec![0.0; m];
    let inv1 = 1.0 / (dx * dx);
    let inv12 = 1.0 / (12.0 * dx * dx);
    let fd2_legs = [(-1_i64, inv1), (0, -2.0 * inv1), (1, inv1)];
    let fd4_legs = [
        (-2_i64, -inv12),
        (-1, 16.0 * inv12),
        (0, -30.0 * inv12),
        (1, 16.0 * inv12),
        (2, -inv12),
    ];
    for i in 0..m {
        let g = (i + 1) as i64; // grid index of unknown i
        let legs: &[(i64, f64)] = if g == 1 || g == n as i64 - 1 {
            &fd2_legs
        } else {
            &fd4_legs
        };
        for &(off, coeff) in legs {
            let gg = g + off;
            if (1..n as i64).contains(&gg) {
                l.add_to(i, (gg - 1) as usize, coeff);
            } else {
                s[i] += coeff * bc;
            }
        }
    }

    let initial_state: Vec<f64> = x.iter().map(|&xi| 1.0 - xi.cos()).collect();
    let xe = x.clone();
    let exact = Box::new(move |t: f64| {
        xe.iter()
            .map(|&xi| 1.0 - xi.cos() * (-t).exp())
            .collect::<Vec<f64>>()
    });
    let source: SourceFn = Box::new(move |_t: f64| s.clone());

    let scheme = SchemeInfo::named("erk2")?;
    let c = scheme.intercept.expect("explicit schemes carry an intercept");
    let cfg = TaseConfig::new(2, alpha_min(2, c), TaseForm::Preconditioner)?;
    // The fourth-order interior stencil sets the stable step; the
    // second-order closure rows are less stiff, not more.
    let dt_stab = c * dx * dx / Differencing::Fd4.stiffness_constant();
    let plan = StepPlan::tase(scheme, 0.25, cfg, StepMode::TaseCombined);

    let mesh = Mesh1D::new(
        x,
        Spacing::Uniform(dx),
        MeshKind::BoundedCells,
        (xl, xl + PI),
    )?;
    let norm_weights = mesh.weights();
    Ok(ProblemCase {
        name: format!("diffusion-dirichlet-n{n}"),
        system: SemiDiscreteSystem::from_linear(Operator::Banded(l), Some(source)),
        mesh,
        initial_state,
        t_final: 5.0,
        exact: Some(exact),
        stability_dt: vec![("diffusion".into(), dt_stab)],
        recommended_plan: plan,
        norm_weights,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrators::integrate;

    fn dense_of(case: &ProblemCase) -> DenseMatrix {
        case.system
            .linear_part
            .as_ref()
            .expect("linear case")
            .to_dense()
    }

    #[test]
    fn periodic_rows_annihilate_constants() {
        for d in [Differencing::Fd2, Differencing::Fd4, Differencing::Fourier] {
            let case = diffusion_periodic(16, d, 0.0, 50.0).unwrap();
            let l = dense_of(&case);
            let ones = vec![1.0; 16];
            let r = l.matvec(&ones);
            let worst = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            // Entries are O(1/dx^2) ~ 6.5, so 1e-13 leaves little slack.
            assert!(worst <= 1e-13 * l.max_row_sum().max(1.0), "{}: {worst:e}", d.label());
        }
    }

    #[test]
    fn spectral_operator_is_exact_on_modes() {
        let n = 16;
        let case = diffusion_periodic(n, Differencing::Fourier, 0.0, 50.0).unwrap();
        let l = dense_of(&case);
        for k in [1_f64, 3.0, 5.0] {
            let v: Vec<f64> = case.mesh.points.iter().map(|&xi| (k * xi).cos()).collect();
            let lv = l.matvec(&v);
            let worst = lv
                .iter()
                .zip(&v)
                .fold(0.0_f64, |m, (&a, &b)| m.max((a + k * k * b).abs()));
            assert!(worst < 1e-9, "mode {k}: residual {worst:e}");
        }
    }

    #[test]
    fn finite_difference_consistency_orders() {
        // Apply L to the exact profile and compare with its true second
        // derivative; halving dx must shrink the defect by 2^q.
        for (d, q) in [(Differencing::Fd2, 2.0_f64), (Differencing::Fd4, 4.0)] {
            let defect = |n: usize| -> f64 {
                let case = diffusion_periodic(n, d, 0.0, 50.0).unwrap();
                let l = dense_of(&case);
                let y: Vec<f64> = case.mesh.points.iter().map(|&xi| 1.0 - xi.cos()).collect();
                let ly = l.matvec(&y);
                ly.iter()
                    .zip(&case.mesh.points)
                    .fold(0.0_f64, |m, (&a, &xi)| m.max((a - xi.cos()).abs()))
            };
            let ratio = defect(32) / defect(64);
            let expect = 2.0_f64.powf(q);
            assert!(
                ratio > 0.8 * expect && ratio < 1.25 * expect,
                "{}: defect ratio {ratio}, expected ~{expect}",
                d.label()
            );
        }
    }

    #[test]
    fn exact_solution_starts_at_the_initial_state() {
        let case = diffusion_periodic(32, Differencing::Fd4, 3.0, 50.0).unwrap();
        let e0 = case.exact_at(0.0).unwrap();
        for (a, b) in e0.iter().zip(&case.initial_state) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn unforced_profile_relaxes_to_uniform_one() {
        let case = diffusion_periodic(16, Differencing::Fd2, 0.0, 50.0).unwrap();
        let late = case.exact_at(50.0).unwrap();
        for v in late {
            assert!((v - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn periodic_step_conserves_the_mean() {
        // Circulant columns sum to zero, so a plain explicit step moves no
        // mass; check one RK4 step at a stable dt.
        let case = diffusion_periodic(32, Differencing::Fd4, 0.0, 50.0).unwrap();
        let dt = 0.5 * case.stability_dt_for("diffusion").unwrap();
        let plan = StepPlan::plain(SchemeInfo::named("erk4").unwrap(), dt);
        let traj = integrate(&case.system, &plan, &case.initial_state, 0.0, 1).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let drift = (mean(traj.final_state()) - mean(&case.initial_state)).abs();
        assert!(drift < 1e-13, "mean drift {drift:e}");
    }

    #[test]
    fn stability_dt_matches_the_quoted_chain() {
        // n=600 with the fourth-order stencil: dt_stab = 2 (2pi/600)^2 / (16/3),
        // and the calibrated dt=0.25 sits ~6.08e3 above it.
        let case = diffusion_periodic(600, Differencing::Fd4, 0.0, 50.0).unwrap();
        let dx = 2.0 * PI / 600.0;
        let want = 2.0 * dx * dx / (16.0 / 3.0);
        let got = case.stability_dt_for("diffusion").unwrap();
        assert!((got - want).abs() < 1e-18);
        let ratio = case.recommended_plan.dt / got;
        assert!((ratio / 6.08e3 - 1.0).abs() < 2e-3, "ratio {ratio}");
    }

    #[test]
    fn periodic_rejects_bad_grids() {
        assert!(diffusion_periodic(3, Differencing::Fd2, 0.0, 50.0).is_err());
        assert!(diffusion_periodic(15, Differencing::Fourier, 0.0, 50.0).is_err());
        assert!(diffusion_periodic(16, Differencing::Fd2, 1.0, 0.0).is_err());
    }

    #[test]
    fn dirichlet_steady_state_is_uniform_one() {
        // L*1 + S = 0: the boundary folds make the uniform wall value an
        // equilibrium of the semi-discrete system.
        let case = diffusion_dirichlet(30).unwrap();
        let l = dense_of(&case);
        let ones = vec![1.0; 29];
        let mut r = l.matvec(&ones);
        let s = (case.system.source.as_ref().unwrap())(0.0);
        for (rv, sv) in r.iter_mut().zip(&s) {
            *rv += sv;
        }
        let worst = r.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-10, "steady-state residual {worst:e}");
    }

    #[test]
    fn dirichlet_exact_matches_initial_and_walls() {
        let case = diffusion_dirichlet(30).unwrap();
        let e0 = case.exact_at(0.0).unwrap();
        for (a, b) in e0.iter().zip(&case.initial_state) {
            assert_eq!(a, b);
        }
        // The exact profile pinned to 1 at both walls for all t: the grid
        // excludes the walls, but the nearest nodes approach 1 as t grows.
        let late = case.exact_at(40.0).unwrap();
        assert!((late[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dirichlet_closure_consistency_is_second_order() {
        // The wall-adjacent rows use the three-point stencil, so the global
        // defect against the true second derivative is O(dx^2) even though
        // interior rows are fourth-order. The probe profile 2 + cos(2x)
        // takes the wall value 1 (so the boundary folds apply verbatim) and
        // keeps its fourth derivative nonzero there, which is what makes
        // the closure rows the dominant defect.
        let defect = |n: usize| -> f64 {
            let case = diffusion_dirichlet(n).unwrap();
            let l = dense_of(&case);
            let y: Vec<f64> = case
                .mesh
                .points
                .iter()
                .map(|&xi| 2.0 + (2.0 * xi).cos())
                .collect();
            let mut ly = l.matvec(&y);
            let s = (case.system.source.as_ref().unwrap())(0.0);
            for (a, b) in ly.iter_mut().zip(&s) {
                *a += b;
            }
            ly.iter()
                .zip(&case.mesh.points)
                .fold(0.0_f64, |m, (&a, &xi)| m.max((a + 4.0 * (2.0 * xi).cos()).abs()))
        };
        let ratio = defect(30) / defect(60);
        assert!(ratio > 3.0 && ratio < 5.0, "closure defect ratio {ratio}");
    }

    #[test]
    fn dirichlet_quoted_step_ratio() {
        let case = diffusion_dirichlet(30).unwrap();
        let ratio = case.recommended_plan.dt / case.stability_dt_for("diffusion").unwrap();
        assert!((ratio / 60.79 - 1.0).abs() < 1e-3, "ratio {ratio}");
    }
}

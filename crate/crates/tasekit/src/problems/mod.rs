//! Benchmark catalog: each constructor assembles a spatially discretized
//! problem — operator(s), mesh, initial state, exact solution when one is
//! known — together with stability step sizes and a sensible default plan.
//!
//! Cases are immutable once built; a single case can back any number of
//! concurrent runs. Everything a case reports (stability step sizes, split
//! groups, norm weights) is derived from the same assembly that produced
//! its operators, so there is no second bookkeeping path to drift out of
//! sync.

mod adr;
mod diffusion;
mod polar;
mod power_law;
mod scalar_ode;

pub use adr::{two_species_adr, RightBc};
pub use diffusion::{diffusion_dirichlet, diffusion_periodic, Differencing};
pub use polar::{bessel_j2, bessel_j2_first_root, polar_diffusion};
pub use power_law::power_law_diffusion;
pub use scalar_ode::stiff_scalar_ode;

use crate::error::{Result, TaseError};
use crate::integrators::{integrate, SemiDiscreteSystem, StepPlan, Trajectory};

/// What the point coordinates of a [`Mesh1D`] refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshKind {
    /// Grid nodes on a periodic interval; the right endpoint is the left one.
    PeriodicNodes,
    /// Cell centers of a bounded finite-volume (or node-centered) grid.
    BoundedCells,
    /// Cell centers of a non-uniform grid with per-cell widths.
    StretchedCells,
}

/// Grid spacing, either one value for every cell or per-cell widths.
#[derive(Debug, Clone)]
pub enum Spacing {
    Uniform(f64),
    PerCell(Vec<f64>),
}

/// A one-dimensional grid: point coordinates plus the widths needed for
/// integral-weighted norms.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    /// Nodes or cell centers, strictly increasing.
    pub points: Vec<f64>,
    pub spacing: Spacing,
    pub kind: MeshKind,
    /// Domain endpoints (left, right).
    pub domain: (f64, f64),
}

impl Mesh1D {
    pub fn new(
        points: Vec<f64>,
        spacing: Spacing,
        kind: MeshKind,
        domain: (f64, f64),
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(TaseError::InvalidConfig("mesh with no points".into()));
        }
        if points.windows(2).any(|w| w[1] <= w[0]) {
            return Err(TaseError::InvalidConfig(
                "mesh points must be strictly increasing".into(),
            ));
        }
        if let Spacing::PerCell(widths) = &spacing {
            if widths.len() != points.len() {
                return Err(TaseError::Shape(format!(
                    "{} cell widths for {} points",
                    widths.len(),
                    points.len()
                )));
            }
            if widths.iter().any(|&w| !(w > 0.0)) {
                return Err(TaseError::InvalidConfig(
                    "cell widths must be positive".into(),
                ));
            }
            let total: f64 = widths.iter().sum();
            let length = domain.1 - domain.0;
            if (total - length).abs() > 1e-12 {
                return Err(TaseError::InvalidConfig(format!(
                    "cell widths sum to {total}, domain length is {length}"
                )));
            }
        }
        Ok(Mesh1D {
            points,
            spacing,
            kind,
            domain,
        })
    }

    /// Per-point quadrature weights (the cell widths).
    pub fn weights(&self) -> Vec<f64> {
        match &self.spacing {
            Spacing::Uniform(h) => vec![*h; self.points.len()],
            Spacing::PerCell(w) => w.clone(),
        }
    }
}

/// Exact solution as a function of time, evaluated on the case's grid.
pub type ExactFn = Box<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

/// Relative error norms of a computed state against a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    /// Weighted relative 2-norm (cell-width weighted on non-uniform grids).
    pub l2_rel: f64,
    /// Relative max-norm.
    pub linf_rel: f64,
    /// Set when the computed state contains non-finite values; both norms
    /// are then +inf.
    pub diverged: bool,
}

/// Relative error of `y` against `exact`, optionally weighted.
///
/// Non-finite entries in `y` mark the report as diverged rather than
/// erroring — a blown-up run is a result worth reporting. A reference with
/// zero norm is an error: no relative scale exists.
pub fn error_report(y: &[f64], exact: &[f64], weights: Option<&[f64]>) -> Result<ErrorReport> {
    if y.len() != exact.len() {
        return Err(TaseError::Shape(format!(
            "state length {} vs reference length {}",
            y.len(),
            exact.len()
        )));
    }
    if let Some(w) = weights {
        if w.len() != y.len() {
            return Err(TaseError::Shape(format!(
                "{} weights for {} points",
                w.len(),
                y.len()
            )));
        }
    }
    let ref_inf = exact.iter().fold(0.0_f64, |m, &e| m.max(e.abs()));
    let wsq = |i: usize, v: f64| weights.map_or(v * v, |w| w[i] * v * v);
    let ref_sq: f64 = exact
        .iter()
        .enumerate()
        .map(|(i, &e)| wsq(i, e))
        .sum();
    if ref_inf == 0.0 || ref_sq == 0.0 {
        return Err(TaseError::Domain(
            "relative error against a zero reference".into(),
        ));
    }
    if y.iter().any(|v| !v.is_finite()) {
        return Ok(ErrorReport {
            l2_rel: f64::INFINITY,
            linf_rel: f64::INFINITY,
            diverged: true,
        });
    }
    let mut diff_inf = 0.0_f64;
    let mut diff_sq = 0.0_f64;
    for (i, (&yi, &ei)) in y.iter().zip(exact).enumerate() {
        let d = yi - ei;
        diff_inf = diff_inf.max(d.abs());
        diff_sq += wsq(i, d);
    }
    Ok(ErrorReport {
        l2_rel: (diff_sq / ref_sq).sqrt(),
        linf_rel: diff_inf / ref_inf,
        diverged: false,
    })
}

/// Least-squares slope of log(error) against log(dt).
#[derive(Debug, Clone, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    /// Number of (dt, error) pairs that entered the fit.
    pub used: usize,
    /// Indices of pairs dropped because the error was nonpositive or
    /// non-finite (converged to round-off, or diverged).
    pub excluded: Vec<usize>,
}

/// Fits the observed convergence order from a refinement study.
///
/// Pairs with nonpositive or non-finite error are excluded (their indices
/// are reported back); at least three usable pairs must remain.
pub fn observed_order(errors: &[f64], dts: &[f64]) -> Result<OrderFit> {
    if errors.len() != dts.len() {
        return Err(TaseError::Shape(format!(
            "{} errors for {} step sizes",
            errors.len(),
            dts.len()
        )));
    }
    let mut xs = Vec::with_capacity(errors.len());
    let mut ys = Vec::with_capacity(errors.len());
    let mut excluded = Vec::new();
    for (i, (&e, &dt)) in errors.iter().zip(dts).enumerate() {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(TaseError::InvalidConfig(format!(
                "step size must be positive and finite, got {dt}"
            )));
        }
        if e > 0.0 && e.is_finite() {
            xs.push(dt.ln());
            ys.push(e.ln());
        } else {
            excluded.push(i);
        }
    }
    if xs.len() < 3 {
        return Err(TaseError::InvalidConfig(format!(
            "order fit needs at least 3 usable (dt, error) pairs, have {}",
            xs.len()
        )));
    }
    let n = xs.len() as f64;
    let xm = xs.iter().sum::<f64>() / n;
    let ym = ys.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (&x, &y) in xs.iter().zip(&ys) {
        num += (x - xm) * (y - ym);
        den += (x - xm) * (x - xm);
    }
    if den == 0.0 {
        return Err(TaseError::InvalidConfig(
            "order fit needs distinct step sizes".into(),
        ));
    }
    Ok(OrderFit {
        slope: num / den,
        used: xs.len(),
        excluded,
    })
}

/// A fully assembled benchmark: discrete system, grid, initial data, and
/// the run parameters the case was designed around.
pub struct ProblemCase {
    pub name: String,
    pub system: SemiDiscreteSystem,
    pub mesh: Mesh1D,
    pub initial_state: Vec<f64>,
    pub t_final: f64,
    /// Exact solution on the grid, when a closed form exists.
    pub exact: Option<ExactFn>,
    /// Explicit stability step size per operator, keyed by a short label
    /// ("diffusion", "convection", "reaction", "theta", "r", ...).
    pub stability_dt: Vec<(String, f64)>,
    /// The scheme/step configuration the case is calibrated for.
    pub recommended_plan: StepPlan,
    /// Per-component quadrature weights for integral norms (cell widths,
    /// tiled across species or dimensions where needed).
    pub norm_weights: Vec<f64>,
}

impl ProblemCase {
    /// Looks up a stability step size by its label.
    pub fn stability_dt_for(&self, key: &str) -> Option<f64> {
        self.stability_dt
            .iter()
            .find(|(k, _)| k == key)
            .map(|&(_, v)| v)
    }

    /// Exact solution at time `t`, if the case has one.
    pub fn exact_at(&self, t: f64) -> Option<Vec<f64>> {
        self.exact.as_ref().map(|f| f(t))
    }

    /// Steps the case from its initial state at t=0 under `plan`.
    pub fn run(&self, plan: &StepPlan, n_steps: usize) -> Result<Trajectory> {
        integrate(&self.system, plan, &self.initial_state, 0.0, n_steps)
    }

    /// Number of steps the recommended plan takes to reach `t_final`.
    pub fn default_steps(&self) -> usize {
        (self.t_final / self.recommended_plan.dt).round() as usize
    }

    /// Runs the recommended plan to `t_final`.
    pub fn run_default(&self) -> Result<Trajectory> {
        self.run(&self.recommended_plan.clone(), self.default_steps())
    }

    /// Error of `y` against the exact solution at `t`, using the case's
    /// norm weights. `None` when the case has no exact solution.
    pub fn error_vs_exact(&self, y: &[f64], t: f64) -> Result<Option<ErrorReport>> {
        match self.exact_at(t) {
            None => Ok(None),
            Some(e) => error_report(y, &e, Some(&self.norm_weights)).map(Some),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_report_on_exact_match_is_zero() {
        let e = vec![1.0, -2.0, 3.0];
        let r = error_report(&e, &e, None).unwrap();
        assert_eq!(r.l2_rel, 0.0);
        assert_eq!(r.linf_rel, 0.0);
        assert!(!r.diverged);
    }

    #[test]
    fn error_report_scaling() {
        let e = vec![1.0, -2.0, 0.5, 4.0];
        let y: Vec<f64> = e.iter().map(|v| 1.01 * v).collect();
        let r = error_report(&y, &e, None).unwrap();
        assert!((r.l2_rel - 0.01).abs() < 1e-12);
        assert!((r.linf_rel - 0.01).abs() < 1e-12);
    }

    #[test]
    fn error_report_weights_change_l2_not_linf() {
        let e = vec![1.0, 1.0];
        let y = vec![1.1, 1.0];
        let uniform = error_report(&y, &e, None).unwrap();
        let skewed = error_report(&y, &e, Some(&[9.0, 1.0])).unwrap();
        assert!(skewed.l2_rel > uniform.l2_rel);
        assert_eq!(skewed.linf_rel, uniform.linf_rel);
    }

    #[test]
    fn error_report_flags_divergence() {
        let r = error_report(&[f64::NAN, 1.0], &[1.0, 1.0], None).unwrap();
        assert!(r.diverged);
        assert!(r.l2_rel.is_infinite() && r.linf_rel.is_infinite());
    }

    #[test]
    fn error_report_rejects_zero_reference() {
        assert!(error_report(&[1.0], &[0.0], None).is_err());
    }

    #[test]
    fn error_report_rejects_shape_mismatch() {
        assert!(error_report(&[1.0, 2.0], &[1.0], None).is_err());
        assert!(error_report(&[1.0, 2.0], &[1.0, 2.0], Some(&[1.0])).is_err());
    }

    #[test]
    fn observed_order_recovers_synthetic_slope() {
        let dts = [0.1, 0.05, 0.025, 0.0125];
        let errs: Vec<f64> = dts.iter().map(|dt| 3.7 * dt * dt).collect();
        let fit = observed_order(&errs, &dts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert_eq!(fit.used, 4);
        assert!(fit.excluded.is_empty());
    }

    #[test]
    fn observed_order_excludes_roundoff_points() {
        let dts = [0.1, 0.05, 0.025, 0.0125, 0.00625];
        let errs = [1e-2, 2.5e-3, 6.25e-4, 0.0, f64::INFINITY];
        let fit = observed_order(&errs, &dts).unwrap();
        assert_eq!(fit.excluded, vec![3, 4]);
        assert_eq!(fit.used, 3);
        assert!((fit.slope - 2.0).abs() < 1e-12);
    }

    #[test]
    fn observed_order_needs_three_points() {
        assert!(observed_order(&[1e-2, 1e-3], &[0.1, 0.05]).is_err());
        // Exclusions can push an otherwise long list under the minimum.
        assert!(observed_order(&[1e-2, 0.0, 0.0, 1e-3], &[0.4, 0.2, 0.1, 0.05]).is_err());
    }

    #[test]
    fn mesh_rejects_non_increasing_points() {
        assert!(Mesh1D::new(
            vec![0.0, 1.0, 1.0],
            Spacing::Uniform(1.0),
            MeshKind::BoundedCells,
            (0.0, 3.0),
        )
        .is_err());
    }

    #[test]
    fn stretched_mesh_widths_must_tile_the_domain() {
        let bad = Mesh1D::new(
            vec![0.25, 0.75],
            Spacing::PerCell(vec![0.5, 0.4]),
            MeshKind::StretchedCells,
            (0.0, 1.0),
        );
        assert!(bad.is_err());
        let good = Mesh1D::new(
            vec![0.25, 0.75],
            Spacing::PerCell(vec![0.5, 0.5]),
            MeshKind::StretchedCells,
            (0.0, 1.0),
        );
        assert!(good.is_ok());
    }
}

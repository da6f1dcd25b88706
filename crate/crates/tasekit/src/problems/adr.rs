//! Two coupled species on a stretched mesh: convection and diffusion act
//! within each species, a fast linear reaction K(Y2 - Y1) couples them.
//! The case exists to compare one preconditioner around the whole operator
//! against one per split group — and to show where splitting breaks down
//! when the boundary data fights the reaction equilibrium.

use super::{Mesh1D, MeshKind, ProblemCase, Spacing};
use crate::error::{Result, TaseError};
use crate::integrators::{SemiDiscreteSystem, SourceFn, SplitGroup, StepMode, StepPlan};
use crate::numkit::{DenseMatrix, Operator};
use crate::schemes::SchemeInfo;
use crate::tase::{alpha_min, TaseConfig, TaseForm};

/// Wall values at x=1. The left wall holds both species at 0 either way.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RightBc {
    /// Both species held at 1: compatible with the reaction equilibrium
    /// Y1 = Y2, so the boundary layer stays mild.
    Equal,
    /// Species held at 1 and 0.1: the wall pins the concentrations apart
    /// while the fast reaction pulls them together, and the resulting
    /// boundary layer is where split preconditioning loses accuracy.
    Incompatible,
}

impl RightBc {
    pub fn label(self) -> &'static str {
        match self {
            RightBc::Equal => "equal",
            RightBc::Incompatible => "incompatible",
        }
    }

    fn wall_values(self) -> (f64, f64) {
        match self {
            RightBc::Equal => (1.0, 1.0),
            RightBc::Incompatible => (1.0, 0.1),
        }
    }
}

/// Finite-volume convection + diffusion for one species on the stretched
/// grid, with Dirichlet walls folded into a constant source vector.
/// Face values interpolate linearly between the adjacent cell centers;
/// wall faces take the wall value exactly.
fn species_block(
    edges: &[f64],
    centers: &[f64],
    widths: &[f64],
    u: f64,
    d: f64,
    bc_left: f64,
    bc_right: f64,
) -> (DenseMatrix, Vec<f64>) {
    let n = centers.len();
    let mut l = DenseMatrix::zeros(n, n);
    let mut s = vec![0.0; n];
    for i in 0..n {
        let h = widths[i];
        // Left face of cell i: flux enters with +U y_face, +D dy/dx.
        if i == 0 {
            let dl = centers[0] - edges[0];
            s[0] += u * bc_left / h;
            *l.at_mut(0, 0) += -d / (dl * h);
            s[0] += d * bc_left / (dl * h);
        } else {
            let dc = centers[i] - centers[i - 1];
            let w_prev = (centers[i] - edges[i]) / dc;
            *l.at_mut(i, i - 1) += u * w_prev / h;
            *l.at_mut(i, i) += u * (1.0 - w_prev) / h;
            *l.at_mut(i, i - 1) += d / (dc * h);
            *l.at_mut(i, i) += -d / (dc * h);
        }
        // Right face of cell i: flux leaves with -U y_face, -D dy/dx.
        if i == n - 1 {
            let dr = edges[n] - centers[n - 1];
            s[i] += -u * bc_right / h;
            *l.at_mut(i, i) += -d / (dr * h);
            s[i] += d * bc_right / (dr * h);
        } else {
            let dc = centers[i + 1] - centers[i];
            let w_here = (centers[i + 1] - edges[i + 1]) / dc;
            *l.at_mut(i, i) += -u * w_here / h;
            *l.at_mut(i, i + 1) += -u * (1.0 - w_here) / h;
            *l.at_mut(i, i + 1) += d / (dc * h);
            *l.at_mut(i, i) += -d / (dc * h);
        }
    }
    (l, s)
}

/// Two-species advection-diffusion-reaction on [0, 1], state [Y1; Y2].
///
/// The mesh clusters cells toward x=1 (edges at 1 - (1 - j/n)^2) where the
/// boundary layer forms. The system carries two split groups — convection
/// plus diffusion with the wall sources, and the reaction — whose operators
/// sum exactly to the combined one, because the combined operator *is*
/// their sum.
pub fn two_species_adr(n: usize, u: f64, d: f64, k: f64, bc_right: RightBc) -> Result<ProblemCase> {
    if n < 10 {
        return Err(TaseError::InvalidConfig(format!(
            "two-species case needs at least 10 cells per species, got {n}"
        )));
    }
    for (label, v) in [("U", u), ("D", d), ("K", k)] {
        if !(v > 0.0) || !v.is_finite() {
            return Err(TaseError::InvalidConfig(format!(
                "{label} must be positive and finite, got {v}"
            )));
        }
    }
    let nf = n as f64;
    let edges: Vec<f64> = (0..=n)
        .map(|j| {
            let r = 1.0 - j as f64 / nf;
            1.0 - r * r
        })
        .collect();
    let centers: Vec<f64> = edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    let widths: Vec<f64> = edges.windows(2).map(|w| w[1] - w[0]).collect();

    let (wall1, wall2) = bc_right.wall_values();
    let (l1, s1) = species_block(&edges, &centers, &widths, u, d, 0.0, wall1);
    let (l2, s2) = species_block(&edges, &centers, &widths, u, d, 0.0, wall2);

    let dim = 2 * n;
    let mut l_cd = DenseMatrix::zeros(dim, dim);
    for i in 0..n {
        for j in 0..n {
            *l_cd.at_mut(i, j) = l1.at(i, j);
            *l_cd.at_mut(n + i, n + j) = l2.at(i, j);
        }
    }
    let s_cd: Vec<f64> = s1.iter().chain(&s2).copied().collect();

    let mut l_r = DenseMatrix::zeros(dim, dim);
    for i in 0..n {
        *l_r.at_mut(i, i) = -k;
        *l_r.at_mut(i, n + i) = k;
        *l_r.at_mut(n + i, i) = k;
        *l_r.at_mut(n + i, n + i) = -k;
    }

    let mut combined = l_cd.clone();
    combined.add_scaled(&l_r, 1.0)?;

    let src = s_cd.clone();
    let combined_source: SourceFn = Box::new(move |_t| src.clone());
    let mut system = SemiDiscreteSystem::from_linear(Operator::Dense(combined), Some(combined_source));
    let src_g = s_cd.clone();
    system.splits = vec![
        SplitGroup {
            label: "convection-diffusion".into(),
            operator: Operator::Dense(l_cd),
            source: Some(Box::new(move |_t| src_g.clone())),
        },
        SplitGroup {
            label: "reaction".into(),
            operator: Operator::Dense(l_r),
            source: None,
        },
    ];

    let initial_state: Vec<f64> = match bc_right {
        RightBc::Equal => centers
            .iter()
            .copied()
            .chain(centers.iter().map(|&c| c * c))
            .collect(),
        RightBc::Incompatible => centers
            .iter()
            .copied()
            .chain(centers.iter().map(|&c| 0.1 * c * c))
            .collect(),
    };

    // Calibrated for third-order stepping. Splitting doubles each group's
    // asymptotic footprint, so the per-group alpha doubles: the group
    // asymptotes then sum back to the single-operator budget.
    let scheme = SchemeInfo::named("erk3")?;
    let c = scheme.intercept.expect("explicit schemes carry an intercept");
    let base_alpha = alpha_min(3, c);
    let group_cfg = TaseConfig::new(3, 2.0 * base_alpha, TaseForm::Preconditioner)?;
    let plan = StepPlan::tase(scheme, 5e-4, group_cfg, StepMode::TaseSplit)
        .with_group_tase(vec![Some(group_cfg), Some(group_cfg)]);

    let h_min = widths
        .iter()
        .fold(f64::INFINITY, |m, &w| m.min(w));
    let stability_dt = vec![
        ("convection".into(), c * h_min / u),
        ("diffusion".into(), c * h_min * h_min / (4.0 * d)),
        ("reaction".into(), c / (2.0 * k)),
    ];

    let mesh = Mesh1D::new(
        centers,
        Spacing::PerCell(widths.clone()),
        MeshKind::StretchedCells,
        (0.0, 1.0),
    )?;
    let norm_weights: Vec<f64> = widths.iter().chain(&widths).copied().collect();
    Ok(ProblemCase {
        name: format!("adr-{}-n{n}", bc_right.label()),
        system,
        mesh,
        initial_state,
        t_final: 0.01,
        exact: None,
        stability_dt,
        recommended_plan: plan,
        norm_weights,
    })
}

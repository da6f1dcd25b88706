//! Registry of time-marching schemes: explicit RK1-4 and the implicit
//! baselines as Butcher tableaux, the linear SSP family in Shu-Osher form,
//! and the per-scheme stability intercepts C used to place `alpha_min`.

use crate::error::{Result, TaseError};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TableauKind {
    Explicit,
    DiagonallyImplicit,
}

/// Butcher coefficients `(a, b, c)` of a Runge-Kutta scheme. `a` is stored
/// as full lower-triangular rows; explicit schemes have a zero diagonal.
#[derive(Debug, Clone)]
pub struct ButcherTableau {
    pub name: &'static str,
    pub order: usize,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub kind: TableauKind,
}

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn is_explicit(&self) -> bool {
        self.kind == TableauKind::Explicit
    }

    /// One-step amplification on dy/dt = lambda*y evaluated by the stage
    /// recursion, valid for explicit and diagonally implicit tableaux.
    pub fn amplification(&self, z: Complex64) -> Complex64 {
        let s = self.stages();
        let one = Complex64::new(1.0, 0.0);
        let mut g = vec![one; s];
        for i in 0..s {
            let mut acc = one;
            for j in 0..i {
                acc += z * self.a[i][j] * g[j];
            }
            let diag = self.a[i][i];
            g[i] = if diag == 0.0 { acc } else { acc / (one - z * diag) };
        }
        let mut sigma = one;
        for i in 0..s {
            sigma += z * self.b[i] * g[i];
        }
        sigma
    }
}

/// A scheme in Shu-Osher form: stage i is a convex combination of the
/// previous stage values plus forward-Euler increments,
/// `Y_i = sum_k (a[i][k] Y_k + dt b[i][k] f(Y_k))`.
#[derive(Debug, Clone)]
pub struct ShuOsherScheme {
    pub name: &'static str,
    pub a: Vec<Vec<f64>>,
    pub b: Vec<Vec<f64>>,
}

impl ShuOsherScheme {
    pub fn stages(&self) -> usize {
        self.a.len()
    }

    /// max over nonzero b of b[i][k]/a[i][k]; an Euler increment attached
    /// to a vanishing convex weight has no finite ratio and is rejected.
    pub fn max_ratio(&self) -> Result<f64> {
        let mut ratio: f64 = 0.0;
        for (arow, brow) in self.a.iter().zip(&self.b) {
            for (&aik, &bik) in arow.iter().zip(brow) {
                if bik > 0.0 {
                    if aik == 0.0 {
                        return Err(TaseError::InvalidConfig(format!(
                            "Shu-Osher form {}: Euler coefficient {bik} with zero convex weight",
                            self.name
                        )));
                    }
                    ratio = ratio.max(bik / aik);
                }
            }
        }
        Ok(ratio)
    }

    /// Linear amplification of one step (same stage recursion as the
    /// time stepper, specialized to dy/dt = lambda*y).
    pub fn amplification(&self, z: Complex64) -> Complex64 {
        let mut vals = vec![Complex64::new(1.0, 0.0)];
        for (arow, brow) in self.a.iter().zip(&self.b) {
            let mut v = Complex64::new(0.0, 0.0);
            for (k, (&aik, &bik)) in arow.iter().zip(brow).enumerate() {
                v += (aik + z * bik) * vals[k];
            }
            vals.push(v);
        }
        *vals.last().unwrap()
    }
}

/// A tableau bundled with the registry metadata the stability and stepping
/// code needs alongside it.
#[derive(Debug, Clone)]
pub struct SchemeInfo {
    pub tableau: ButcherTableau,
    /// Negative-real-axis stability intercept C (explicit schemes).
    pub intercept: Option<f64>,
}

impl SchemeInfo {
    pub fn named(name: &str) -> Result<SchemeInfo> {
        let tableau = get_tableau(name)?;
        let intercept = if tableau.is_explicit() {
            Some(stability_intercept(tableau.name)?)
        } else {
            None
        };
        Ok(SchemeInfo { tableau, intercept })
    }

    pub fn name(&self) -> &'static str {
        self.tableau.name
    }
}

/// SDIRK3 diagonal, printed to full precision in the source tableau.
pub const SDIRK3_GAMMA: f64 = 0.43586652150845899941601945;
/// SDIRK4 (Norsett three-stage) diagonal, as printed.
pub const SDIRK4_GAMMA: f64 = 1.06858;

/// Looks up a Butcher tableau by canonical name
/// (ERK1-4, SDIRK1-4, CN; RK1-4 accepted as aliases for the explicit set).
pub fn get_tableau(name: &str) -> Result<ButcherTableau> {
    let canon = name.to_ascii_uppercase();
    let canon = match canon.as_str() {
        "RK1" => "ERK1",
        "RK2" => "ERK2",
        "RK3" => "ERK3",
        "RK4" => "ERK4",
        other => other,
    };
    let t = match canon {
        "ERK1" => ButcherTableau {
            name: "ERK1",
            order: 1,
            a: vec![vec![0.0]],
            b: vec![1.0],
            c: vec![0.0],
            kind: TableauKind::Explicit,
        },
        // Midpoint method.
        "ERK2" => ButcherTableau {
            name: "ERK2",
            order: 2,
            a: vec![vec![0.0, 0.0], vec![0.5, 0.0]],
            b: vec![0.0, 1.0],
            c: vec![0.0, 0.5],
            kind: TableauKind::Explicit,
        },
        // Ralston's third-order method.
        "ERK3" => ButcherTableau {
            name: "ERK3",
            order: 3,
            a: vec![
                vec![0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0],
                vec![0.0, 0.75, 0.0],
            ],
            b: vec![2.0 / 9.0, 1.0 / 3.0, 4.0 / 9.0],
            c: vec![0.0, 0.5, 0.75],
            kind: TableauKind::Explicit,
        },
        // The classical fourth-order method.
        "ERK4" => ButcherTableau {
            name: "ERK4",
            order: 4,
            a: vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            c: vec![0.0, 0.5, 0.5, 1.0],
            kind: TableauKind::Explicit,
        },
        // Implicit Euler.
        "SDIRK1" => ButcherTableau {
            name: "SDIRK1",
            order: 1,
            a: vec![vec![1.0]],
            b: vec![1.0],
            c: vec![1.0],
            kind: TableauKind::DiagonallyImplicit,
        },
        // Crank-Nicolson as a two-stage tableau (explicit first stage).
        "CN" => ButcherTableau {
            name: "CN",
            order: 2,
            a: vec![vec![0.0, 0.0], vec![0.5, 0.5]],
            b: vec![0.5, 0.5],
            c: vec![0.0, 1.0],
            kind: TableauKind::DiagonallyImplicit,
        },
        "SDIRK2" => {
            let g = 1.0 - 1.0 / 2.0f64.sqrt();
            ButcherTableau {
                name: "SDIRK2",
                order: 2,
                a: vec![vec![g, 0.0], vec![1.0 - 2.0 * g, g]],
                b: vec![0.5, 0.5],
                c: vec![g, 1.0 - g],
                kind: TableauKind::DiagonallyImplicit,
            }
        }
        "SDIRK3" => {
            let g = SDIRK3_GAMMA;
            let b1 = -1.5 * g * g + 4.0 * g - 0.25;
            let b2 = 1.5 * g * g - 5.0 * g + 1.25;
            ButcherTableau {
                name: "SDIRK3",
                order: 3,
                a: vec![
                    vec![g, 0.0, 0.0],
                    vec![0.5 * (1.0 - g), g, 0.0],
                    vec![b1, b2, g],
                ],
                b: vec![b1, b2, g],
                c: vec![g, 0.5 * (1.0 + g), 1.0],
                kind: TableauKind::DiagonallyImplicit,
            }
        }
        // Norsett's three-stage fourth-order SDIRK.
        "SDIRK4" => {
            let g = SDIRK4_GAMMA;
            let d = 1.0 / (6.0 * (1.0 - 2.0 * g) * (1.0 - 2.0 * g));
            ButcherTableau {
                name: "SDIRK4",
                order: 4,
                a: vec![
                    vec![g, 0.0, 0.0],
                    vec![0.5 - g, g, 0.0],
                    vec![2.0 * g, 1.0 - 4.0 * g, g],
                ],
                b: vec![d, 1.0 - 2.0 * d, d],
                c: vec![g, 0.5, 1.0 - g],
                kind: TableauKind::DiagonallyImplicit,
            }
        }
        _ => {
            return Err(TaseError::InvalidConfig(format!(
                "unknown scheme '{name}' (expected ERK1-4, SDIRK1-4, or CN)"
            )))
        }
    };
    Ok(t)
}

/// Looks up a linear SSP scheme (SSP-RK1..SSP-RK4) in Shu-Osher form.
///
/// The one-step map of SSP-RKs on dy/dt = lambda*y is the truncated
/// exponential `sum_{j<=s} z^j/j!`, identical to the classical s-stage
/// scheme of order s.
pub fn get_shu_osher(name: &str) -> Result<ShuOsherScheme> {
    let canon = name.to_ascii_uppercase();
    let euler_row = |i: usize| {
        // Stage i advances stage i-1 by one forward-Euler step.
        let mut a = vec![0.0; i + 1];
        let mut b = vec![0.0; i + 1];
        a[i] = 1.0;
        b[i] = 1.0;
        (a, b)
    };
    let scheme = match canon.as_str() {
        "SSP-RK1" => ShuOsherScheme {
            name: "SSP-RK1",
            a: vec![vec![1.0]],
            b: vec![vec![1.0]],
        },
        "SSP-RK2" => {
            let (a1, b1) = euler_row(0);
            ShuOsherScheme {
                name: "SSP-RK2",
                a: vec![a1, vec![0.5, 0.5]],
                b: vec![b1, vec![0.0, 0.5]],
            }
        }
        "SSP-RK3" => {
            let (a1, b1) = euler_row(0);
            let (a2, b2) = euler_row(1);
            ShuOsherScheme {
                name: "SSP-RK3",
                a: vec![a1, a2, vec![1.0 / 3.0, 0.5, 1.0 / 6.0]],
                b: vec![b1, b2, vec![0.0, 0.0, 1.0 / 6.0]],
            }
        }
        "SSP-RK4" => {
            let (a1, b1) = euler_row(0);
            let (a2, b2) = euler_row(1);
            let (a3, b3) = euler_row(2);
            ShuOsherScheme {
                name: "SSP-RK4",
                a: vec![a1, a2, a3, vec![3.0 / 8.0, 1.0 / 3.0, 0.25, 1.0 / 24.0]],
                b: vec![b1, b2, b3, vec![0.0, 0.0, 0.0, 1.0 / 24.0]],
            }
        }
        _ => {
            return Err(TaseError::InvalidConfig(format!(
                "unknown Shu-Osher scheme '{name}' (expected SSP-RK1..SSP-RK4)"
            )))
        }
    };
    Ok(scheme)
}

/// Stability intercept C: the magnitude of the intersection of the scheme's
/// stability region with the negative real axis.
///
/// The four explicit RK schemes return the tabulated values used throughout
/// the source material (RK3 is listed there as 2.50 although the true
/// intercept is about 2.5127 — see [`intercept_by_bisection`]); anything
/// else is computed numerically.
pub fn stability_intercept(name: &str) -> Result<f64> {
    let canon = name.to_ascii_uppercase();
    match canon.as_str() {
        "RK1" | "ERK1" => Ok(2.00),
        "RK2" | "ERK2" => Ok(2.00),
        "RK3" | "ERK3" => Ok(2.50),
        "RK4" | "ERK4" => Ok(2.79),
        other => intercept_by_bisection(&get_tableau(other)?),
    }
}

/// Computes the negative-real-axis intercept of an explicit scheme's
/// stability region by outward march plus bisection on |R(-x)| = 1.
pub fn intercept_by_bisection(tableau: &ButcherTableau) -> Result<f64> {
    if !tableau.is_explicit() {
        return Err(TaseError::InvalidConfig(format!(
            "stability intercept is defined for explicit schemes, got {}",
            tableau.name
        )));
    }
    let modulus = |x: f64| tableau.amplification(Complex64::new(-x, 0.0)).norm();
    // March outward until |R| exceeds 1, then bisect the crossing.
    let step = 1e-2;
    let mut x = step;
    while modulus(x) <= 1.0 {
        x += step;
        if x > 1e3 {
            return Err(TaseError::Numerical(format!(
                "no negative-real-axis stability boundary found for {} below 1e3",
                tableau.name
            )));
        }
    }
    let (mut lo, mut hi) = (x - step, x);
    if lo <= 0.0 {
        return Err(TaseError::Numerical(format!(
            "empty negative-real-axis stability interval for {}",
            tableau.name
        )));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if modulus(mid) <= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Real-axis stability boundary to full floating-point accuracy.
///
/// The registry values are the conventional two-decimal figures (2.50,
/// 2.79); those are what tables print and what default alpha choices use,
/// but an A-stability certificate needs the exact boundary — the rounded
/// RK4 value 2.79 overshoots the true 2.7853, and an alpha_min derived
/// from it lets the large-z asymptote land just outside the stability
/// region (|R| = 1.0071 there).
pub fn exact_intercept(name: &str) -> Result<f64> {
    let tableau = get_tableau(name)?;
    match tableau.name {
        // |1 + z| and |1 + z + z^2/2| both cross 1 at exactly -2.
        "ERK1" | "ERK2" => Ok(2.0),
        _ => intercept_by_bisection(&tableau),
    }
}

/// The nine registered tableau names, in registry order.
pub const TABLEAU_NAMES: [&str; 9] = [
    "ERK1", "ERK2", "ERK3", "ERK4", "SDIRK1", "CN", "SDIRK2", "SDIRK3", "SDIRK4",
];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tableau_row_sums_match_c() {
        for name in TABLEAU_NAMES {
            let t = get_tableau(name).unwrap();
            let bsum: f64 = t.b.iter().sum();
            assert!((bsum - 1.0).abs() < 1e-14, "{name}: sum(b) = {bsum}");
            for i in 0..t.stages() {
                let asum: f64 = t.a[i].iter().sum();
                assert!(
                    (asum - t.c[i]).abs() < 1e-14,
                    "{name} stage {i}: sum(a) = {asum} vs c = {}",
                    t.c[i]
                );
            }
            if t.is_explicit() {
                for i in 0..t.stages() {
                    for j in i..t.stages() {
                        assert_eq!(t.a[i][j], 0.0, "{name} not strictly lower triangular");
                    }
                }
            }
        }
    }

    #[test]
    fn erk2_matches_midpoint_tableau() {
        let t = get_tableau("ERK2").unwrap();
        assert_eq!(t.a, vec![vec![0.0, 0.0], vec![0.5, 0.0]]);
        assert_eq!(t.b, vec![0.0, 1.0]);
        assert_eq!(t.c, vec![0.0, 0.5]);
    }

    #[test]
    fn aliases_resolve() {
        assert_eq!(get_tableau("RK2").unwrap().name, "ERK2");
        assert_eq!(get_tableau("erk4").unwrap().name, "ERK4");
        assert!(get_tableau("RK5").is_err());
    }

    #[test]
    fn explicit_amplification_is_truncated_exponential() {
        // Any s-stage order-s explicit RK has R(z) = sum_{j<=s} z^j/j!.
        let mut state = 7u64;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for (s, name) in ["ERK1", "ERK2", "ERK3", "ERK4"].iter().enumerate() {
            let t = get_tableau(name).unwrap();
            for _ in 0..200 {
                let r = 10.0 * next();
                let th = 2.0 * std::f64::consts::PI * next();
                let z = Complex64::from_polar(r, th);
                let mut expect = Complex64::new(1.0, 0.0);
                let mut term = Complex64::new(1.0, 0.0);
                for j in 1..=(s + 1) {
                    term *= z / j as f64;
                    expect += term;
                }
                let got = t.amplification(z);
                assert!(
                    (got - expect).norm() <= 1e-13 * expect.norm().max(1.0),
                    "{name} at z={z}: {got} vs {expect}"
                );
            }
        }
    }

    #[test]
    fn shu_osher_matches_butcher_amplification() {
        for s in 1..=4usize {
            let so = get_shu_osher(&format!("SSP-RK{s}")).unwrap();
            let t = get_tableau(&format!("ERK{s}")).unwrap();
            for k in 0..50 {
                let z = Complex64::new(-8.0 + 0.3 * k as f64, 0.21 * k as f64);
                let a = so.amplification(z);
                let b = t.amplification(z);
                assert!(
                    (a - b).norm() <= 1e-13 * b.norm().max(1.0),
                    "SSP-RK{s} vs ERK{s} at {z}"
                );
            }
        }
    }

    #[test]
    fn shu_osher_rows_are_convex_and_nonnegative() {
        for s in 1..=4usize {
            let so = get_shu_osher(&format!("SSP-RK{s}")).unwrap();
            for (arow, brow) in so.a.iter().zip(&so.b) {
                let sum: f64 = arow.iter().sum();
                assert!((sum - 1.0).abs() < 1e-15);
                assert!(arow.iter().all(|&v| v >= 0.0));
                assert!(brow.iter().all(|&v| v >= 0.0));
            }
            assert!((so.max_ratio().unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn ssp_rk2_at_minus_one() {
        let so = get_shu_osher("SSP-RK2").unwrap();
        let sigma = so.amplification(Complex64::new(-1.0, 0.0));
        assert!((sigma.re - 0.5).abs() < 1e-15 && sigma.im == 0.0);
    }

    #[test]
    fn intercept_registry_values() {
        assert_eq!(stability_intercept("ERK1").unwrap(), 2.00);
        assert_eq!(stability_intercept("RK2").unwrap(), 2.00);
        assert_eq!(stability_intercept("ERK3").unwrap(), 2.50);
        assert_eq!(stability_intercept("ERK4").unwrap(), 2.79);
    }

    #[test]
    fn bisection_oracle_rk3() {
        // The registry stores 2.50; the true RK3 intercept is 2.5127.
        let c = intercept_by_bisection(&get_tableau("ERK3").unwrap()).unwrap();
        assert!((c - 2.5127).abs() < 1e-3, "got {c}");
        let c1 = intercept_by_bisection(&get_tableau("ERK1").unwrap()).unwrap();
        assert!((c1 - 2.0).abs() < 1e-9);
        let c4 = intercept_by_bisection(&get_tableau("ERK4").unwrap()).unwrap();
        assert!((c4 - 2.7853).abs() < 1e-3, "got {c4}");
    }

    #[test]
    fn exact_intercept_sits_on_the_boundary() {
        assert_eq!(exact_intercept("ERK1").unwrap(), 2.0);
        assert_eq!(exact_intercept("rk2").unwrap(), 2.0);
        for name in ["ERK3", "ERK4"] {
            let c = exact_intercept(name).unwrap();
            let t = get_tableau(name).unwrap();
            let r = t.amplification(Complex64::new(-c, 0.0)).norm();
            assert!((r - 1.0).abs() < 1e-12, "{name}: |R(-C)| = {r}");
            // A hair inside is stable, a hair outside is not.
            assert!(t.amplification(Complex64::new(-c * (1.0 - 1e-9), 0.0)).norm() < 1.0);
            assert!(t.amplification(Complex64::new(-c * (1.0 + 1e-9), 0.0)).norm() > 1.0);
        }
    }

    #[test]
    fn intercept_rejects_implicit() {
        assert!(intercept_by_bisection(&get_tableau("SDIRK2").unwrap()).is_err());
    }

    #[test]
    fn sdirk_tableaux_match_printed_forms() {
        let t = get_tableau("SDIRK2").unwrap();
        let g = 1.0 - 1.0 / 2.0f64.sqrt();
        assert!((t.a[0][0] - g).abs() < 1e-15);
        assert!((t.a[1][0] - (1.0 - 2.0 * g)).abs() < 1e-15);
        assert_eq!(t.b, vec![0.5, 0.5]);

        let t = get_tableau("SDIRK4").unwrap();
        let d = t.b[0];
        assert!((t.b[1] - (1.0 - 2.0 * d)).abs() < 1e-15);
        assert!((t.b[2] - d).abs() < 1e-15);
        assert!((t.c[1] - 0.5).abs() < 1e-15);
    }
}

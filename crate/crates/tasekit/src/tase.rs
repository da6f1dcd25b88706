//! TASE preconditioners and operators.
//!
//! For a linear operator L and order p, the preconditioner is the rational
//! approximation
//!
//! ```text
//! T_L^(p) = sum_{k=0}^{p-1} beta_{p,k} (2^k I - alpha dt L)^(-1) = I + O(dt^p)
//! ```
//!
//! and the fused operator form is `T_L^(p) L`, expressible with the same
//! resolvents through the gamma coefficients — which is how applying the
//! operator avoids any multiplication by L itself. Both forms reduce to p
//! banded/dense solves against factorizations that depend only on
//! `(L, alpha, dt)` and are therefore built once and reused across stages
//! and steps.

use crate::error::{Result, TaseError};
use crate::numkit::{Factorization, Operator};
use crate::schemes::SchemeInfo;
use num_complex::Complex64;

/// Which algebraic form a stepper should apply.
///
/// `Preconditioner` computes `T(v)` (needed whenever sources or nonlinear
/// terms must pass through T); `Operator` computes `(T L)(v)` directly from
/// the same factorizations without an extra matvec.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TaseForm {
    Preconditioner,
    Operator,
}

/// Order, free parameter, and application form of a TASE operator.
#[derive(Debug, Clone, Copy)]
pub struct TaseConfig {
    pub p: usize,
    pub alpha: f64,
    pub form: TaseForm,
}

impl TaseConfig {
    pub fn new(p: usize, alpha: f64, form: TaseForm) -> Result<TaseConfig> {
        if !(1..=4).contains(&p) {
            return Err(TaseError::InvalidConfig(format!(
                "TASE order p must be in 1..4, got {p}"
            )));
        }
        if !(alpha > 0.0) {
            return Err(TaseError::InvalidConfig(format!(
                "TASE alpha must be positive, got {alpha}"
            )));
        }
        Ok(TaseConfig { p, alpha, form })
    }

    /// Default pairing with an explicit scheme: `alpha = alpha_min(p, C)`,
    /// the smallest asymptotically stable choice and the best one for
    /// accuracy (the leading error grows with alpha).
    pub fn for_scheme(p: usize, scheme: &SchemeInfo, form: TaseForm) -> Result<TaseConfig> {
        let c = scheme.intercept.ok_or_else(|| {
            TaseError::InvalidConfig(format!(
                "scheme {} has no stability intercept; pair TASE with an explicit scheme",
                scheme.name()
            ))
        })?;
        TaseConfig::new(p, alpha_min(p, c), form)
    }

    /// True when this alpha sits below the stability threshold for a scheme
    /// of intercept C; callers surface this as a warning, not an error,
    /// because under-resolved alpha is a legitimate falsification input.
    pub fn below_alpha_min(&self, intercept: f64) -> bool {
        self.alpha < alpha_min(self.p, intercept) - 1e-12
    }
}

/// A row of Table-2/Table-3 coefficients, kept as exact rationals so the
/// 512/21-style entries do not pick up decimal-literal error.
#[derive(Debug, Clone)]
pub struct CoefficientRow {
    pub p: usize,
    pub values: Vec<(i64, i64)>,
}

impl CoefficientRow {
    pub fn as_f64(&self) -> Vec<f64> {
        self.values
            .iter()
            .map(|&(n, d)| n as f64 / d as f64)
            .collect()
    }
}

fn check_order(p: usize) -> Result<()> {
    if (1..=4).contains(&p) {
        Ok(())
    } else {
        Err(TaseError::InvalidConfig(format!(
            "TASE order p must be in 1..4, got {p}"
        )))
    }
}

/// beta coefficients of the preconditioner form, `sum_k beta_k / 2^k = 1`.
pub fn beta_coefficients(p: usize) -> Result<CoefficientRow> {
    check_order(p)?;
    let values: Vec<(i64, i64)> = match p {
        1 => vec![(1, 1)],
        2 => vec![(-1, 1), (4, 1)],
        3 => vec![(1, 3), (-4, 1), (32, 3)],
        _ => vec![(-1, 21), (4, 3), (-32, 3), (512, 21)],
    };
    Ok(CoefficientRow { p, values })
}

/// gamma coefficients of the operator form, `sum_k gamma_k / 2^k = 2^p - 1`.
pub fn gamma_coefficients(p: usize) -> Result<CoefficientRow> {
    check_order(p)?;
    let values: Vec<(i64, i64)> = match p {
        1 => vec![(1, 1)],
        2 => vec![(-1, 1), (8, 1)],
        3 => vec![(1, 3), (-8, 1), (128, 3)],
        _ => vec![(-1, 21), (8, 3), (-128, 3), (4096, 21)],
    };
    Ok(CoefficientRow { p, values })
}

/// Stability lower bound on the free parameter: `(2^p - 1)/C`.
pub fn alpha_min(p: usize, intercept: f64) -> f64 {
    assert!(p >= 1 && intercept > 0.0, "alpha_min needs p >= 1, C > 0");
    ((1u64 << p) - 1) as f64 / intercept
}

/// The factorized shifted systems `(2^k I - alpha dt L)`, k = 0..p-1.
///
/// This is the per-(L, dt) cache: build it once, then apply it to as many
/// vectors as stages and steps require. Any change of dt or L means
/// building a fresh set.
#[derive(Debug, Clone)]
pub struct ShiftSet {
    pub config: TaseConfig,
    pub dt: f64,
    dim: usize,
    factors: Vec<Factorization>,
    beta: Vec<f64>,
    gamma: Vec<f64>,
}

/// Factors the p shifted systems for `L`.
///
/// A singular shift is reported as-is: it can only happen when
/// `alpha dt eig(L)` lands on a positive power of two, which no operator
/// with left-half-plane spectrum can produce.
pub fn build_shift_set(l: &Operator, config: TaseConfig, dt: f64) -> Result<ShiftSet> {
    if !(dt > 0.0) {
        return Err(TaseError::InvalidConfig(format!(
            "shift set needs dt > 0, got {dt}"
        )));
    }
    let mut factors = Vec::with_capacity(config.p);
    for k in 0..config.p {
        let shift = (1u64 << k) as f64;
        let shifted = l.shifted(shift, config.alpha * dt);
        factors.push(shifted.factor()?);
    }
    Ok(ShiftSet {
        config,
        dt,
        dim: l.dimension(),
        factors,
        beta: beta_coefficients(config.p)?.as_f64(),
        gamma: gamma_coefficients(config.p)?.as_f64(),
    })
}

impl ShiftSet {
    pub fn dimension(&self) -> usize {
        self.dim
    }

    fn check_len(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(TaseError::Shape(format!(
                "TASE application to vector of length {} on operator of dimension {}",
                v.len(),
                self.dim
            )));
        }
        Ok(())
    }

    /// `T v = sum_k beta_k solve_k(v)`; the inverse is never formed.
    pub fn apply_preconditioner(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let mut out = vec![0.0; self.dim];
        for (factor, &beta) in self.factors.iter().zip(&self.beta) {
            let x = factor.solve(v)?;
            for (o, xi) in out.iter_mut().zip(&x) {
                *o += beta * xi;
            }
        }
        Ok(out)
    }

    /// `(T L) v = (-(2^p - 1) v + sum_k gamma_k solve_k(v)) / (alpha dt)`,
    /// the same resolvents as the preconditioner but no matvec with L.
    pub fn apply_operator(&self, v: &[f64]) -> Result<Vec<f64>> {
        self.check_len(v)?;
        let pow = ((1u64 << self.config.p) - 1) as f64;
        let scale = 1.0 / (self.config.alpha * self.dt);
        let mut out: Vec<f64> = v.iter().map(|vi| -pow * vi).collect();
        for (factor, &gamma) in self.factors.iter().zip(&self.gamma) {
            let x = factor.solve(v)?;
            for (o, xi) in out.iter_mut().zip(&x) {
                *o += gamma * xi;
            }
        }
        for o in &mut out {
            *o *= scale;
        }
        Ok(out)
    }
}

/// Scalar symbol of the operator form: `T(z) * z = sum_k beta_k z / (2^k - alpha z)`
/// with `z = lambda dt`. This is the quantity the stability function feeds
/// into the stage recursion, and its large-negative-z limit is
/// `-(2^p - 1)/alpha`.
pub fn scalar_tase(lambda: Complex64, config: &TaseConfig, dt: f64) -> Result<Complex64> {
    let z = lambda * dt;
    let beta = beta_coefficients(config.p)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &(n, d)) in beta.values.iter().enumerate() {
        let denom = Complex64::new((1u64 << k) as f64, 0.0) - config.alpha * z;
        if denom.norm() < 1e-300 {
            return Err(TaseError::PoleProximity {
                k: k as u32,
                distance: denom.norm(),
            });
        }
        acc += (n as f64 / d as f64) * z / denom;
    }
    Ok(acc)
}

/// Scalar preconditioner by the defining recursion:
/// `T^(1)(alpha) = (1 - alpha z)^(-1)`,
/// `T^(p)(alpha) = [2^(p-1) T^(p-1)(alpha/2) - T^(p-1)(alpha)] / (2^(p-1) - 1)`.
///
/// Exists to cross-check the closed-form coefficients; the production path
/// never recurses.
pub fn scalar_recursive_preconditioner(z: Complex64, p: usize, alpha: f64) -> Complex64 {
    if p == 1 {
        return 1.0 / (Complex64::new(1.0, 0.0) - alpha * z);
    }
    let lead = (1u64 << (p - 1)) as f64;
    (lead * scalar_recursive_preconditioner(z, p - 1, alpha / 2.0)
        - scalar_recursive_preconditioner(z, p - 1, alpha))
        / (lead - 1.0)
}

/// Closed-form scalar preconditioner `T(z) = sum_k beta_k / (2^k - alpha z)`.
pub fn scalar_preconditioner(z: Complex64, p: usize, alpha: f64) -> Result<Complex64> {
    let beta = beta_coefficients(p)?;
    let mut acc = Complex64::new(0.0, 0.0);
    for (k, &(n, d)) in beta.values.iter().enumerate() {
        let denom = Complex64::new((1u64 << k) as f64, 0.0) - alpha * z;
        acc += (n as f64 / d as f64) / denom;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::{BandedMatrix, DenseMatrix};
    use crate::tase::TaseForm::Preconditioner;

    fn cfg(p: usize, alpha: f64) -> TaseConfig {
        TaseConfig::new(p, alpha, Preconditioner).unwrap()
    }

    #[test]
    fn beta_rows_are_the_table() {
        assert_eq!(beta_coefficients(2).unwrap().as_f64(), vec![-1.0, 4.0]);
        assert_eq!(beta_coefficients(1).unwrap().as_f64(), vec![1.0]);
        let p3 = beta_coefficients(3).unwrap().as_f64();
        assert_eq!(p3[0], 1.0 / 3.0);
        assert_eq!(p3[1], -4.0);
        assert_eq!(p3[2], 32.0 / 3.0);
        assert!(beta_coefficients(0).is_err());
        assert!(beta_coefficients(5).is_err());
    }

    #[test]
    fn coefficient_identities() {
        for p in 1..=4 {
            let beta = beta_coefficients(p).unwrap().as_f64();
            let gamma = gamma_coefficients(p).unwrap().as_f64();
            let t0: f64 = beta
                .iter()
                .enumerate()
                .map(|(k, b)| b / (1u64 << k) as f64)
                .sum();
            let g0: f64 = gamma
                .iter()
                .enumerate()
                .map(|(k, g)| g / (1u64 << k) as f64)
                .sum();
            assert!((t0 - 1.0).abs() < 1e-14, "p={p}: sum beta/2^k = {t0}");
            let pow = ((1u64 << p) - 1) as f64;
            assert!((g0 - pow).abs() < 1e-12, "p={p}: sum gamma/2^k = {g0}");
            // gamma_k = 2^k beta_k ties the two tables together.
            for (k, (b, g)) in beta.iter().zip(&gamma).enumerate() {
                assert!((g - b * (1u64 << k) as f64).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn alpha_min_table_values() {
        assert!((alpha_min(1, 2.00) - 0.50).abs() < 1e-15);
        assert!((alpha_min(2, 2.00) - 1.50).abs() < 1e-15);
        assert!((alpha_min(4, 2.79) - 5.376344086021505).abs() < 1e-12);
    }

    #[test]
    fn zero_operator_is_identity_for_t_and_zero_for_tl() {
        let l = Operator::Dense(DenseMatrix::zeros(3, 3));
        let v = vec![1.5, -2.0, 0.25];
        for p in 1..=4 {
            let s = build_shift_set(&l, cfg(p, 1.7), 0.3).unwrap();
            let t = s.apply_preconditioner(&v).unwrap();
            for (a, b) in t.iter().zip(&v) {
                assert!((a - b).abs() < 1e-13, "p={p}: T(v) != v at zero L");
            }
            let tl = s.apply_operator(&v).unwrap();
            for a in tl {
                assert!(a.abs() < 1e-12, "p={p}: TL(v) != 0 at zero L");
            }
        }
    }

    #[test]
    fn scalar_first_order_case() {
        // lambda = -1, p = 1, alpha = 1, dt = 1: T v = v/2, TL v = -v/2.
        let l = Operator::Dense(DenseMatrix::from_rows(&[vec![-1.0]]));
        let s = build_shift_set(&l, cfg(1, 1.0), 1.0).unwrap();
        assert!((s.apply_preconditioner(&[1.0]).unwrap()[0] - 0.5).abs() < 1e-15);
        assert!((s.apply_operator(&[1.0]).unwrap()[0] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn recursion_matches_closed_form() {
        // 1000 pseudo-random complex (z, alpha) draws per order.
        let mut state = 0x2545f4914f6cdd1du64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            (state >> 11) as f64 / (1u64 << 53) as f64
        };
        for p in 1..=4 {
            for _ in 0..1000 {
                let z = Complex64::new(40.0 * next() - 30.0, 30.0 * (next() - 0.5));
                let alpha = 0.1 + 5.0 * next();
                // Skip draws adjacent to a pole of either representation.
                let near_pole = (0..p).any(|k| {
                    let d = Complex64::new((1u64 << k) as f64, 0.0) - alpha * z;
                    d.norm() < 1e-6
                });
                if near_pole {
                    continue;
                }
                let closed = scalar_preconditioner(z, p, alpha).unwrap();
                let rec = scalar_recursive_preconditioner(z, p, alpha);
                assert!(
                    (closed - rec).norm() <= 1e-12 * rec.norm().max(1.0),
                    "p={p} z={z} alpha={alpha}: {closed} vs {rec}"
                );
            }
        }
    }

    fn random_banded(n: usize, seed: u64) -> BandedMatrix {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let mut m = BandedMatrix::zeros(n, 2, 2);
        for i in 0..n {
            for j in i.saturating_sub(2)..(i + 3).min(n) {
                m.set(i, j, next());
            }
            // Shift the diagonal to keep the spectrum in the left half-plane.
            m.add_to(i, i, -3.0);
        }
        m
    }

    #[test]
    fn operator_form_equals_preconditioner_times_l() {
        let banded = random_banded(30, 99);
        let l = Operator::Banded(banded);
        let v: Vec<f64> = (0..30).map(|i| ((i * 7 % 13) as f64 - 6.0) / 6.0).collect();
        for p in 1..=4 {
            let s = build_shift_set(&l, cfg(p, 2.0), 0.05).unwrap();
            let tl = s.apply_operator(&v).unwrap();
            let lt = s.apply_preconditioner(&l.matvec(&v)).unwrap();
            let scale = lt.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
            for (a, b) in tl.iter().zip(&lt) {
                assert!(
                    (a - b).abs() < 1e-10 * scale,
                    "p={p}: TL(v)={a} vs T(Lv)={b}"
                );
            }
        }
    }

    #[test]
    fn accuracy_order_slope() {
        // |scalar_tase(lambda, dt)/dt - lambda| = O(dt^p) at lambda = -1.
        let lambda = Complex64::new(-1.0, 0.0);
        for p in 1..=4usize {
            let alpha = alpha_min(p, 2.0);
            let c = cfg(p, alpha);
            // Window placement matters at both ends: dt = 1e-1 with the
            // p = 4 alpha has alpha*dt = 0.75 and visible higher-order
            // contamination, while another decade below 3e-4 approaches
            // the roundoff floor for the p = 4 signal.
            let dts = [3e-2, 3e-3, 3e-4];
            let errs: Vec<f64> = dts
                .iter()
                .map(|&dt| {
                    let w = scalar_tase(lambda, &c, dt).unwrap();
                    (w / dt - lambda).norm()
                })
                .collect();
            let slope = (errs[0] / errs[2]).ln() / (dts[0] / dts[2]).ln();
            assert!(
                (slope - p as f64).abs() < 0.1,
                "p={p}: observed slope {slope}"
            );
        }
    }

    #[test]
    fn leading_error_grows_with_alpha() {
        let lambda = Complex64::new(-1.0, 0.0);
        let dt = 1e-3;
        for p in 1..=4usize {
            let amin = alpha_min(p, 2.0);
            let mut last = -1.0;
            for step in 0..=12 {
                let alpha = amin * (1.0 + 3.0 * step as f64 / 12.0);
                let c = cfg(p, alpha);
                let err = (scalar_tase(lambda, &c, dt).unwrap() / dt - lambda).norm();
                assert!(
                    err >= last - 1e-18,
                    "p={p} alpha={alpha}: error {err} < previous {last}"
                );
                last = err;
            }
        }
    }

    #[test]
    fn asymptotic_window_is_bounded_by_intercept() {
        // For real lambda with dt|lambda| >= 1e8 and alpha >= alpha_min,
        // the symbol sits in [-C, 0).
        for p in 1..=4usize {
            for &c_val in &[2.0, 2.5, 2.79] {
                let amin = alpha_min(p, c_val);
                for &alpha in &[amin, 1.5 * amin, 4.0 * amin] {
                    let cfg = cfg(p, alpha);
                    for &scale in &[1e8, 1e10, 1e12] {
                        let w = scalar_tase(Complex64::new(-scale, 0.0), &cfg, 1.0).unwrap();
                        assert!(w.im.abs() < 1e-9, "imaginary leak {w}");
                        assert!(
                            w.re >= -c_val - 1e-6 && w.re < 0.0,
                            "p={p} alpha={alpha} |z|={scale}: {w} outside [-C, 0)"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_tase_pole_is_detected() {
        // z = 1/alpha puts the k = 0 denominator at zero exactly.
        let c = cfg(1, 1.0);
        match scalar_tase(Complex64::new(1.0, 0.0), &c, 1.0) {
            Err(TaseError::PoleProximity { k: 0, .. }) => {}
            other => panic!("expected pole error, got {other:?}"),
        }
    }

    #[test]
    fn config_validation() {
        assert!(TaseConfig::new(0, 1.0, Preconditioner).is_err());
        assert!(TaseConfig::new(5, 1.0, Preconditioner).is_err());
        assert!(TaseConfig::new(2, 0.0, Preconditioner).is_err());
        assert!(TaseConfig::new(2, -1.0, Preconditioner).is_err());
        let c = cfg(2, 1.0);
        assert!(c.below_alpha_min(2.0)); // alpha_min = 1.5
        assert!(!cfg(2, 1.5).below_alpha_min(2.0));
    }

    #[test]
    fn shift_set_rejects_pole_operator() {
        // L with eigenvalue exactly at 2^0/(alpha dt) makes the first shift
        // singular; the error must surface, not be patched.
        let l = Operator::Dense(DenseMatrix::from_rows(&[vec![1.0]]));
        match build_shift_set(&l, cfg(1, 1.0), 1.0) {
            Err(TaseError::Singular { .. }) => {}
            other => panic!("expected singular shift, got {other:?}"),
        }
    }
}

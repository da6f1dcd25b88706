//! Numerical stability analysis: the one-step amplification factor
//! `sigma(z)` of any (RK scheme, TASE order, alpha) pairing, complex-plane
//! region scans, imaginary-axis maximum scans, and the large-time-step
//! asymptotic limit.
//!
//! `sigma` is evaluated by running the scalar stage recursion with the TASE
//! symbol substituted for `z` — the same computation the vector steppers
//! perform, specialized to dy/dt = lambda*y — rather than by expanding the
//! polynomial form, which has no closed expression worth maintaining.

use crate::error::{Result, TaseError};
use crate::schemes::{SchemeInfo, ShuOsherScheme};
use crate::tase::{alpha_min, scalar_tase, TaseConfig, TaseForm};
use num_complex::Complex64;

/// One stability-function evaluation request. `p = 0` means the plain
/// scheme without TASE.
#[derive(Debug, Clone)]
pub struct StabilityQuery {
    pub scheme: SchemeInfo,
    pub p: usize,
    pub alpha: f64,
    pub z: Complex64,
}

/// Amplification factor of one step on dy/dt = lambda*y with z = lambda*dt.
pub fn sigma(query: &StabilityQuery) -> Result<Complex64> {
    let w = if query.p == 0 {
        query.z
    } else {
        let cfg = TaseConfig::new(query.p, query.alpha, TaseForm::Operator)?;
        scalar_tase(query.z, &cfg, 1.0)?
    };
    Ok(query.scheme.tableau.amplification(w))
}

// Scan inner loop: same math as `sigma` but without cloning the scheme
// into a query struct for every grid cell.
fn sigma_abs(scheme: &SchemeInfo, p: usize, alpha: f64, z: Complex64) -> Result<f64> {
    let w = if p == 0 {
        z
    } else {
        let cfg = TaseConfig::new(p, alpha, TaseForm::Operator)?;
        scalar_tase(z, &cfg, 1.0)?
    };
    Ok(scheme.tableau.amplification(w).norm())
}

/// Grid of |sigma| values over a set of complex samples, with pole cells
/// flagged instead of evaluated.
#[derive(Debug, Clone)]
pub struct StabilityScan {
    pub scheme: String,
    pub p: usize,
    pub alpha: f64,
    /// Sample points, row-major.
    pub points: Vec<Complex64>,
    /// |sigma| per point; poles carry 0.0 and are marked in `pole_mask`.
    pub values: Vec<f64>,
    pub pole_mask: Vec<bool>,
    pub n_rows: usize,
    pub n_cols: usize,
}

impl StabilityScan {
    /// Largest |sigma| over unflagged cells.
    pub fn max_abs(&self) -> f64 {
        self.values
            .iter()
            .zip(&self.pole_mask)
            .filter(|(_, &m)| !m)
            .map(|(&v, _)| v)
            .fold(0.0, f64::max)
    }

    /// Number of unflagged cells with |sigma| above the given bound.
    pub fn count_above(&self, bound: f64) -> usize {
        self.values
            .iter()
            .zip(&self.pole_mask)
            .filter(|(&v, &m)| !m && v > bound)
            .count()
    }
}

/// Number of worker threads for scans: capped by the TASE_KIT_THREADS
/// environment variable, defaulting to the machine parallelism (at most 8).
fn scan_threads() -> usize {
    let hw = std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
        .min(8);
    match std::env::var("TASE_KIT_THREADS") {
        Ok(v) => v.parse::<usize>().ok().filter(|&n| n >= 1).unwrap_or(hw),
        Err(_) => hw,
    }
}

/// Element-wise |sigma| over an arbitrary point set, fanned out over
/// threads. Output order matches input order regardless of thread count.
fn scan_points(
    scheme: &SchemeInfo,
    p: usize,
    alpha: f64,
    points: &[Complex64],
) -> (Vec<f64>, Vec<bool>) {
    let n = points.len();
    let mut values = vec![0.0; n];
    let mut mask = vec![false; n];
    let workers = scan_threads().min(n.max(1));
    let chunk = n.div_ceil(workers.max(1));
    std::thread::scope(|scope| {
        let mut val_rest: &mut [f64] = &mut values;
        let mut mask_rest: &mut [bool] = &mut mask;
        let mut offset = 0usize;
        while offset < n {
            let take = chunk.min(n - offset);
            let (val_chunk, vr) = val_rest.split_at_mut(take);
            let (mask_chunk, mr) = mask_rest.split_at_mut(take);
            val_rest = vr;
            mask_rest = mr;
            let pts = &points[offset..offset + take];
            scope.spawn(move || {
                for (i, &z) in pts.iter().enumerate() {
                    match sigma_abs(scheme, p, alpha, z) {
                        Ok(v) => val_chunk[i] = v,
                        Err(_) => mask_chunk[i] = true,
                    }
                }
            });
            offset += take;
        }
    });
    (values, mask)
}

/// Log-radial scan of the closed left half-plane: geometric radii in
/// `[r_min, r_max]`, uniform angles over [pi/2, 3pi/2] inclusive (so the
/// imaginary axis is part of the scan). This covers the asymptotic regime
/// without the astronomically many cells a uniform grid would need.
pub fn scan_left_half_plane(
    scheme: &SchemeInfo,
    p: usize,
    alpha: f64,
    r_min: f64,
    r_max: f64,
    n_r: usize,
    n_theta: usize,
) -> Result<StabilityScan> {
    if n_r < 2 || n_theta < 2 || !(0.0 < r_min && r_min < r_max) {
        return Err(TaseError::InvalidConfig(format!(
            "left-half-plane scan needs n_r, n_theta >= 2 and 0 < r_min < r_max, got {n_r}x{n_theta} over [{r_min}, {r_max}]"
        )));
    }
    let log_lo = r_min.ln();
    let log_hi = r_max.ln();
    let mut points = Vec::with_capacity(n_r * n_theta);
    for i in 0..n_r {
        let r = (log_lo + (log_hi - log_lo) * i as f64 / (n_r - 1) as f64).exp();
        for j in 0..n_theta {
            let theta = std::f64::consts::FRAC_PI_2
                + std::f64::consts::PI * j as f64 / (n_theta - 1) as f64;
            points.push(Complex64::from_polar(r, theta));
        }
    }
    let (values, pole_mask) = scan_points(scheme, p, alpha, &points);
    Ok(StabilityScan {
        scheme: scheme.name().to_string(),
        p,
        alpha,
        points,
        values,
        pole_mask,
        n_rows: n_r,
        n_cols: n_theta,
    })
}

/// Uniform rectangular scan, the shape used for plot-style maps.
pub fn scan_region(
    scheme: &SchemeInfo,
    p: usize,
    alpha: f64,
    re_range: (f64, f64),
    im_range: (f64, f64),
    n_re: usize,
    n_im: usize,
) -> Result<StabilityScan> {
    if n_re < 2 || n_im < 2 || re_range.0 >= re_range.1 || im_range.0 >= im_range.1 {
        return Err(TaseError::InvalidConfig(format!(
            "region scan needs at least a 2x2 grid over nondegenerate ranges, got {n_re}x{n_im}"
        )));
    }
    let mut points = Vec::with_capacity(n_re * n_im);
    for i in 0..n_im {
        let im = im_range.0 + (im_range.1 - im_range.0) * i as f64 / (n_im - 1) as f64;
        for j in 0..n_re {
            let re = re_range.0 + (re_range.1 - re_range.0) * j as f64 / (n_re - 1) as f64;
            points.push(Complex64::new(re, im));
        }
    }
    let (values, pole_mask) = scan_points(scheme, p, alpha, &points);
    Ok(StabilityScan {
        scheme: scheme.name().to_string(),
        p,
        alpha,
        points,
        values,
        pole_mask,
        n_rows: n_im,
        n_cols: n_re,
    })
}

/// |sigma| at y = 0 plus log-spaced samples of the imaginary axis up to
/// y_max. By conjugate symmetry only y >= 0 is scanned.
pub fn imag_axis_scan(
    scheme: &SchemeInfo,
    p: usize,
    alpha: f64,
    y_max: f64,
    samples: usize,
) -> Result<StabilityScan> {
    if samples < 2 || !(y_max > 1e-6) {
        return Err(TaseError::InvalidConfig(format!(
            "imaginary-axis scan needs samples >= 2 and y_max > 1e-6, got {samples} to {y_max}"
        )));
    }
    let log_lo = 1e-6f64.ln();
    let log_hi = y_max.ln();
    let mut points = Vec::with_capacity(samples + 1);
    points.push(Complex64::new(0.0, 0.0));
    for i in 0..samples {
        let y = (log_lo + (log_hi - log_lo) * i as f64 / (samples - 1) as f64).exp();
        points.push(Complex64::new(0.0, y));
    }
    let (values, pole_mask) = scan_points(scheme, p, alpha, &points);
    let n = points.len();
    Ok(StabilityScan {
        scheme: scheme.name().to_string(),
        p,
        alpha,
        points,
        values,
        pole_mask,
        n_rows: 1,
        n_cols: n,
    })
}

/// Maximum |sigma(iy)| over the [`imag_axis_scan`] sample set.
pub fn imag_axis_max(
    scheme: &SchemeInfo,
    p: usize,
    alpha: f64,
    y_max: f64,
    samples: usize,
) -> Result<f64> {
    imag_axis_scan(scheme, p, alpha, y_max, samples).map(|s| s.max_abs())
}

/// Large-time-step limit of the TASE symbol: `-(2^p - 1)/alpha`.
pub fn asymptotic_limit(p: usize, alpha: f64) -> f64 {
    assert!(alpha > 0.0, "asymptotic limit needs alpha > 0");
    -(((1u64 << p) - 1) as f64) / alpha
}

/// Cross-checks the closed-form limit against the symbol evaluated deep in
/// the asymptotic regime (z = -1e12); returns the evaluated value.
pub fn asymptotic_limit_checked(p: usize, alpha: f64) -> Result<f64> {
    let cfg = TaseConfig::new(p, alpha, TaseForm::Operator)?;
    let w = scalar_tase(Complex64::new(-1e12, 0.0), &cfg, 1.0)?;
    let limit = asymptotic_limit(p, alpha);
    let rel = (w.re - limit).abs() / limit.abs();
    if rel > 1e-3 || w.im.abs() > 1e-6 {
        return Err(TaseError::Numerical(format!(
            "asymptotic limit check failed for p={p}, alpha={alpha}: symbol {w} vs limit {limit}"
        )));
    }
    Ok(w.re)
}

/// Sufficient unconditional-stability bound from the Shu-Osher analysis:
/// `alpha >= 0.5 * max(b_{i,k}/a_{i,k})`. Only a sufficient condition, and
/// for orders above one it is weaker than the necessary `alpha_min`.
pub fn sufficient_alpha(scheme: &ShuOsherScheme) -> Result<f64> {
    Ok(0.5 * scheme.max_ratio()?)
}

/// Convenience: `alpha_min` for a scheme/TASE-order pairing straight from
/// the registry intercept.
pub fn alpha_min_for(scheme: &SchemeInfo, p: usize) -> Result<f64> {
    let c = scheme.intercept.ok_or_else(|| {
        TaseError::InvalidConfig(format!("{} has no stability intercept", scheme.name()))
    })?;
    Ok(alpha_min(p, c))
}

/// `alpha_min` from the scheme's exact stability boundary rather than the
/// rounded registry figure. A-stability certificates must use this: the
/// rounded RK4 intercept 2.79 overshoots the true 2.7853, and the alpha it
/// implies parks the large-z asymptote just outside the stability region.
pub fn certified_alpha_min(scheme: &SchemeInfo, p: usize) -> Result<f64> {
    Ok(alpha_min(p, crate::schemes::exact_intercept(scheme.name())?))
}

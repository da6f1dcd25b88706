//! Minimal dense/banded linear algebra: matrix-vector products and
//! partial-pivoting LU for the shifted systems `(shift*I - scale*L) x = rhs`
//! that every TASE application boils down to.
//!
//! Problem sizes in this crate top out around 1200 unknowns, so a direct
//! factorization is always the right tool; there are deliberately no
//! iterative solvers here.

mod banded;
mod dense;
mod expm;

pub use banded::{BandedLu, BandedMatrix};
pub use dense::{DenseLu, DenseMatrix};
pub use expm::expm;

use crate::error::{Result, TaseError};
use num_complex::Complex64;

/// Relative pivot threshold: a factorization is declared singular when a
/// pivot falls below this fraction of the largest row sum of the input.
pub(crate) const SINGULAR_PIVOT_RTOL: f64 = 1e-14;

/// Scalar abstraction so a single LU kernel serves the real solves of the
/// integrators and the complex solves of the stability machinery.
pub trait LinScalar:
    Copy
    + PartialEq
    + std::fmt::Debug
    + std::ops::Add<Output = Self>
    + std::ops::Sub<Output = Self>
    + std::ops::Mul<Output = Self>
    + std::ops::Div<Output = Self>
    + std::ops::Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// Modulus used for pivot selection and singularity checks.
    fn modulus(self) -> f64;
}

impl LinScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
}

impl LinScalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
}

/// A real linear operator in whichever storage fits its sparsity.
///
/// Discrete 1D operators are banded; spectral differentiation, the polar
/// Laplacian, and coupled-species systems are dense. Everything downstream
/// (TASE shift sets, SDIRK stage solves) works through this enum so the
/// storage choice stays a per-problem detail.
#[derive(Debug, Clone)]
pub enum Operator {
    Dense(DenseMatrix),
    Banded(BandedMatrix),
}

impl Operator {
    pub fn dimension(&self) -> usize {
        match self {
            Operator::Dense(m) => m.n_rows(),
            Operator::Banded(m) => m.order(),
        }
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Operator::Dense(m) => m.matvec(v),
            Operator::Banded(m) => m.matvec(v),
        }
    }

    /// Builds `shift*I - scale*A` in the same storage format.
    pub fn shifted(&self, shift: f64, scale: f64) -> Operator {
        match self {
            Operator::Dense(m) => Operator::Dense(m.shifted(shift, scale)),
            Operator::Banded(m) => Operator::Banded(m.shifted(shift, scale)),
        }
    }

    /// Sum of two operators on the same space. Mixed storage falls back to
    /// dense, and band widths widen as needed.
    pub fn add(&self, other: &Operator) -> Result<Operator> {
        if self.dimension() != other.dimension() {
            return Err(TaseError::Shape(format!(
                "operator sum of dimensions {} and {}",
                self.dimension(),
                other.dimension()
            )));
        }
        match (self, other) {
            (Operator::Banded(a), Operator::Banded(b)) => Ok(Operator::Banded(a.add(b))),
            _ => {
                let mut a = self.to_dense();
                a.add_scaled(&other.to_dense(), 1.0)?;
                Ok(Operator::Dense(a))
            }
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        match self {
            Operator::Dense(m) => m.clone(),
            Operator::Banded(m) => m.to_dense(),
        }
    }

    pub fn factor(&self) -> Result<Factorization> {
        lu_factor(self)
    }
}

/// Pivoted LU factors of a real operator, in matching storage.
#[derive(Debug, Clone)]
pub enum Factorization {
    Dense(DenseLu<f64>),
    Banded(BandedLu),
}

impl Factorization {
    pub fn order(&self) -> usize {
        match self {
            Factorization::Dense(f) => f.order(),
            Factorization::Banded(f) => f.order(),
        }
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        match self {
            Factorization::Dense(f) => f.solve(rhs),
            Factorization::Banded(f) => f.solve(rhs),
        }
    }
}

/// Factors a real operator with partial pivoting.
pub fn lu_factor(m: &Operator) -> Result<Factorization> {
    match m {
        Operator::Dense(d) => Ok(Factorization::Dense(d.lu()?)),
        Operator::Banded(b) => Ok(Factorization::Banded(b.lu()?)),
    }
}

/// Solves `(shift*I - scale*m) x = rhs` over the complex field.
pub fn complex_solve(
    shift: Complex64,
    scale: Complex64,
    m: &DenseMatrix,
    rhs: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = m.n_rows();
    if m.n_cols() != n {
        return Err(TaseError::Shape(format!(
            "complex_solve needs a square matrix, got {}x{}",
            m.n_rows(),
            m.n_cols()
        )));
    }
    if rhs.len() != n {
        return Err(TaseError::Shape(format!(
            "complex_solve rhs length {} vs order {n}",
            rhs.len()
        )));
    }
    let mut a = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let mut v = -scale * m.at(i, j);
            if i == j {
                v += shift;
            }
            a[i * n + j] = v;
        }
    }
    let lu = DenseLu::factor(n, a)?;
    lu.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_solve_identity_shift() {
        // shift=1, scale=0 leaves the identity: x = rhs.
        let m = DenseMatrix::from_rows(&[vec![3.0, 1.0], vec![-2.0, 5.0]]);
        let rhs = vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)];
        let x = complex_solve(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), &m, &rhs)
            .unwrap();
        for (xi, ri) in x.iter().zip(&rhs) {
            assert!((xi - ri).norm() < 1e-15);
        }
    }

    #[test]
    fn complex_solve_scalar_case() {
        // m = [-1], shift = 1, scale = 0.5i: (1 + 0.5i) x = rhs.
        let m = DenseMatrix::from_rows(&[vec![-1.0]]);
        let rhs = vec![Complex64::new(2.0, -1.0)];
        let x = complex_solve(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.5), &m, &rhs)
            .unwrap();
        let expect = rhs[0] / Complex64::new(1.0, 0.5);
        assert!((x[0] - expect).norm() < 1e-15);
    }

    #[test]
    fn complex_solve_diagonal_decouples() {
        let m = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, -3.0]]);
        let shift = Complex64::new(0.5, 1.0);
        let scale = Complex64::new(1.5, -0.25);
        let rhs = vec![Complex64::new(1.0, 1.0), Complex64::new(-2.0, 4.0)];
        let x = complex_solve(shift, scale, &m, &rhs).unwrap();
        for i in 0..2 {
            let expect = rhs[i] / (shift - scale * m.at(i, i));
            assert!((x[i] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn operator_add_mixed_storage() {
        let mut banded = BandedMatrix::zeros(3, 1, 1);
        banded.set(0, 0, 2.0);
        banded.set(1, 1, 2.0);
        banded.set(2, 2, 2.0);
        banded.set(1, 0, -1.0);
        let dense = DenseMatrix::identity(3);
        let sum = Operator::Banded(banded)
            .add(&Operator::Dense(dense))
            .unwrap();
        let v = sum.matvec(&[1.0, 1.0, 1.0]);
        assert_eq!(v, vec![3.0, 2.0, 3.0]);
    }
}

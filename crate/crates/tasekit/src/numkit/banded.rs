use super::{DenseMatrix, SINGULAR_PIVOT_RTOL};
use crate::error::{Result, TaseError};

/// Compact banded real matrix with `kl` subdiagonals and `ku`
/// superdiagonals.
///
/// Entry `(i, j)` lives at storage column `j - i + kl` of row `i`, the usual
/// diagonal-aligned layout. Row pivoting during factorization can push fill
/// up to `kl` extra superdiagonals, which the factor object accounts for.
#[derive(Debug, Clone, PartialEq)]
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    rows: Vec<f64>, // n rows of width kl + ku + 1
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        assert!(kl < n && ku < n, "bandwidths must be below the order");
        BandedMatrix {
            n,
            kl,
            ku,
            rows: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn lower_bandwidth(&self) -> usize {
        self.kl
    }

    pub fn upper_bandwidth(&self) -> usize {
        self.ku
    }

    #[inline]
    fn width(&self) -> usize {
        self.kl + self.ku + 1
    }

    #[inline]
    fn offset(&self, i: usize, j: usize) -> Option<usize> {
        let c = j as isize - i as isize + self.kl as isize;
        if j < self.n && c >= 0 && (c as usize) < self.width() {
            Some(i * self.width() + c as usize)
        } else {
            None
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.offset(i, j).map_or(0.0, |o| self.rows[o])
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        let o = self
            .offset(i, j)
            .unwrap_or_else(|| panic!("entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku));
        self.rows[o] = v;
    }

    pub fn add_to(&mut self, i: usize, j: usize, v: f64) {
        let o = self
            .offset(i, j)
            .unwrap_or_else(|| panic!("entry ({i},{j}) outside band kl={} ku={}", self.kl, self.ku));
        self.rows[o] += v;
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.n, "matvec length mismatch");
        let mut out = vec![0.0; self.n];
        for i in 0..self.n {
            let j_lo = i.saturating_sub(self.kl);
            let j_hi = (i + self.ku + 1).min(self.n);
            let mut s = 0.0;
            for j in j_lo..j_hi {
                s += self.rows[i * self.width() + (j + self.kl - i)] * v[j];
            }
            out[i] = s;
        }
        out
    }

    /// `shift*I - scale*self`, same band widths.
    pub fn shifted(&self, shift: f64, scale: f64) -> BandedMatrix {
        let mut out = self.clone();
        for r in &mut out.rows {
            *r *= -scale;
        }
        for i in 0..self.n {
            out.rows[i * self.width() + self.kl] += shift;
        }
        out
    }

    /// Sum of two banded matrices; the result takes the wider band.
    pub fn add(&self, other: &BandedMatrix) -> BandedMatrix {
        assert_eq!(self.n, other.n, "banded add order mismatch");
        let mut out = BandedMatrix::zeros(
            self.n,
            self.kl.max(other.kl),
            self.ku.max(other.ku),
        );
        for i in 0..self.n {
            let j_lo = i.saturating_sub(out.kl);
            let j_hi = (i + out.ku + 1).min(self.n);
            for j in j_lo..j_hi {
                let v = self.at(i, j) + other.at(i, j);
                if v != 0.0 {
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            let j_lo = i.saturating_sub(self.kl);
            let j_hi = (i + self.ku + 1).min(self.n);
            for j in j_lo..j_hi {
                *d.at_mut(i, j) = self.at(i, j);
            }
        }
        d
    }

    pub fn max_row_sum(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let j_lo = i.saturating_sub(self.kl);
                let j_hi = (i + self.ku + 1).min(self.n);
                (j_lo..j_hi).map(|j| self.at(i, j).abs()).sum::<f64>()
            })
            .fold(0.0, f64::max)
    }

    /// Banded LU with partial pivoting (the rotating-row scheme of the
    /// classic `bandec` routine). Pivoting is restricted to the `kl` rows
    /// below the diagonal, which is all partial pivoting ever needs for a
    /// banded matrix.
    pub fn lu(&self) -> Result<BandedLu> {
        let n = self.n;
        let (kl, ku) = (self.kl, self.ku);
        let w = kl + ku + 1;
        let tol = SINGULAR_PIVOT_RTOL * self.max_row_sum();

        let mut upper = self.rows.clone();
        let mut lower = vec![0.0; n * kl.max(1)];
        let mut pivots = vec![0usize; n];

        // Left-justify the first kl rows so every active row keeps its
        // current elimination-column entry in storage column 0.
        for i in 0..kl.min(n) {
            let shift = kl - i;
            for c in shift..w {
                upper[i * w + (c - shift)] = upper[i * w + c];
            }
            for c in (w - shift)..w {
                upper[i * w + c] = 0.0;
            }
        }

        for k in 0..n {
            let win = (k + kl + 1).min(n);
            let mut p = k;
            let mut pmag = upper[k * w].abs();
            for r in (k + 1)..win {
                let mag = upper[r * w].abs();
                if mag > pmag {
                    pmag = mag;
                    p = r;
                }
            }
            if pmag <= tol {
                return Err(TaseError::Singular {
                    pivot_index: k,
                    pivot: pmag,
                });
            }
            pivots[k] = p;
            if p != k {
                for c in 0..w {
                    upper.swap(k * w + c, p * w + c);
                }
            }
            let pivot = upper[k * w];
            for r in (k + 1)..win {
                let mult = upper[r * w] / pivot;
                lower[k * kl.max(1) + (r - k - 1)] = mult;
                // Subtract and shift the row left by one so the next
                // elimination column again sits at storage column 0.
                for c in 1..w {
                    upper[r * w + (c - 1)] = upper[r * w + c] - mult * upper[k * w + c];
                }
                upper[r * w + (w - 1)] = 0.0;
            }
        }

        Ok(BandedLu {
            n,
            kl,
            w,
            upper,
            lower,
            pivots,
        })
    }
}

/// Factors produced by [`BandedMatrix::lu`]; `upper` holds U row by row
/// (entry `(i, i+c)` at storage column `c`), `lower` the elimination
/// multipliers per column.
#[derive(Debug, Clone)]
pub struct BandedLu {
    n: usize,
    kl: usize,
    w: usize,
    upper: Vec<f64>,
    lower: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedLu {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        if rhs.len() != n {
            return Err(TaseError::Shape(format!(
                "solve rhs length {} vs order {n}",
                rhs.len()
            )));
        }
        let mut x = rhs.to_vec();
        let klw = self.kl.max(1);
        for k in 0..n {
            let p = self.pivots[k];
            if p != k {
                x.swap(k, p);
            }
            let win = (k + self.kl + 1).min(n);
            for r in (k + 1)..win {
                x[r] -= self.lower[k * klw + (r - k - 1)] * x[k];
            }
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            let c_hi = self.w.min(n - i);
            for c in 1..c_hi {
                s -= self.upper[i * self.w + c] * x[i + c];
            }
            x[i] = s / self.upper[i * self.w];
        }
        Ok(x)
    }
}

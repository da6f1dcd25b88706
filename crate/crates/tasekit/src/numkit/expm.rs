use super::DenseMatrix;
use crate::error::Result;

/// Degree-13 Padé numerator coefficients for the matrix exponential
/// (Higham's scaling-and-squaring method).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

/// 1-norm bound under which the degree-13 approximant is accurate to
/// double precision without scaling.
const THETA13: f64 = 5.371920351148152;

/// Matrix exponential by Padé(13,13) with scaling and squaring.
///
/// Used only for small reference solutions (state dimensions around 100),
/// where a dense direct method is exact enough and cheap.
pub fn expm(a: &DenseMatrix) -> Result<DenseMatrix> {
    assert_eq!(a.n_rows(), a.n_cols(), "expm needs a square matrix");
    let n = a.n_rows();

    let norm = a.one_norm();
    let s = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let mut m = a.clone();
    m.scale(0.5f64.powi(s as i32));

    let m2 = m.matmul(&m);
    let m4 = m2.matmul(&m2);
    let m6 = m4.matmul(&m2);
    let eye = DenseMatrix::identity(n);

    // u_odd = M * (M6*(b13 M6 + b11 M4 + b9 M2) + b7 M6 + b5 M4 + b3 M2 + b1 I)
    let mut inner = DenseMatrix::zeros(n, n);
    inner.add_scaled(&m6, PADE13[13])?;
    inner.add_scaled(&m4, PADE13[11])?;
    inner.add_scaled(&m2, PADE13[9])?;
    let mut u = m6.matmul(&inner);
    u.add_scaled(&m6, PADE13[7])?;
    u.add_scaled(&m4, PADE13[5])?;
    u.add_scaled(&m2, PADE13[3])?;
    u.add_scaled(&eye, PADE13[1])?;
    let u = m.matmul(&u);

    let mut inner = DenseMatrix::zeros(n, n);
    inner.add_scaled(&m6, PADE13[12])?;
    inner.add_scaled(&m4, PADE13[10])?;
    inner.add_scaled(&m2, PADE13[8])?;
    let mut v = m6.matmul(&inner);
    v.add_scaled(&m6, PADE13[6])?;
    v.add_scaled(&m4, PADE13[4])?;
    v.add_scaled(&m2, PADE13[2])?;
    v.add_scaled(&eye, PADE13[0])?;

    // Solve (V - U) R = (V + U) column by column.
    let mut vmu = v.clone();
    vmu.add_scaled(&u, -1.0)?;
    let mut vpu = v;
    vpu.add_scaled(&u, 1.0)?;
    let lu = vmu.lu()?;
    let mut r = DenseMatrix::zeros(n, n);
    let mut col = vec![0.0; n];
    for j in 0..n {
        for i in 0..n {
            col[i] = vpu.at(i, j);
        }
        let x = lu.solve(&col)?;
        for i in 0..n {
            *r.at_mut(i, j) = x[i];
        }
    }

    let mut r = r;
    for _ in 0..s {
        r = r.matmul(&r);
    }
    Ok(r)
}

//! Dense complex linear algebra helpers on top of nalgebra.
//!
//! Everything here works on small matrices (4x4 density matrices, 16x16
//! Liouvillians, covariance matrices up to a few tens of modes), so dense
//! O(n^3) routines are used throughout.

use nalgebra::{Complex, DMatrix, DVector};

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type RMat = DMatrix<f64>;
pub type RVec = DVector<f64>;

use crate::error::{Error, Result};

pub const I_C: C64 = Complex { re: 0.0, im: 1.0 };

pub fn c(re: f64) -> C64 {
    Complex { re, im: 0.0 }
}

/// Eigenvalues of a general complex matrix via its Schur form.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::Dimension("eigenvalues of a non-square matrix".into()));
    }
    let schur = m
        .clone()
        .try_schur(1e-13, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok((0..n).map(|i| t[(i, i)]).collect())
}

/// Eigendecomposition of a Hermitian matrix. Returns (eigenvalues, eigenvectors)
/// with eigenvectors in columns. The input is Hermitized first.
pub fn hermitian_eigen(m: &CMat) -> (RVec, CMat) {
    let h = (m + m.adjoint()).scale(0.5);
    let se = h.symmetric_eigen();
    (se.eigenvalues, se.eigenvectors)
}

pub fn hermitian_eigenvalues(m: &CMat) -> Vec<f64> {
    let (vals, _) = hermitian_eigen(m);
    vals.as_slice().to_vec()
}

/// Principal square root of a Hermitian positive semidefinite matrix.
/// Slightly negative eigenvalues from roundoff are clamped to zero.
pub fn hermitian_sqrt(m: &CMat) -> CMat {
    let (vals, vecs) = hermitian_eigen(m);
    let d = CMat::from_diagonal(&vals.map(|x| c(x.max(0.0).sqrt())));
    &vecs * d * vecs.adjoint()
}

/// Unit-norm right null vector (the singular vector of the smallest singular
/// value) together with the full list of singular values, descending.
pub fn null_vector(m: &CMat) -> Result<(CVec, Vec<f64>)> {
    let svd = m
        .clone()
        .try_svd(false, true, 1e-14, 100_000)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let vt = svd
        .v_t
        .ok_or_else(|| Error::Numerical("SVD returned no right singular vectors".into()))?;
    let svals = svd.singular_values.as_slice().to_vec();
    let (idx, _) = svals
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("non-empty singular value list");
    let v = vt.row(idx).adjoint();
    Ok((v, svals))
}

/// Solve the continuous Lyapunov equation `A X + X A^T + Q = 0` for symmetric Q
/// by direct vectorization, `(I (x) A + A (x) I) vec(X) = -vec(Q)`.
pub fn lyapunov(a: &RMat, q: &RMat) -> Result<RMat> {
    let n = a.nrows();
    if a.ncols() != n || q.nrows() != n || q.ncols() != n {
        return Err(Error::Dimension("lyapunov inputs must be square and same size".into()));
    }
    let eye = RMat::identity(n, n);
    let m = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = RVec::from_column_slice(q.as_slice()).scale(-1.0);
    let lu = m.lu();
    let x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Numerical("singular Lyapunov system".into()))?;
    let mut out = RMat::from_column_slice(n, n, x.as_slice());
    out = (out.clone() + out.transpose()).scale(0.5);
    Ok(out)
}

/// Largest real part over the eigenvalues of a real matrix.
///
/// Triangular inputs (the zero drift of an infinitely squeezed bath among
/// them) are read off the diagonal; nalgebra's QR iteration stalls on them.
pub fn max_real_eigenvalue(a: &RMat) -> Result<f64> {
    let n = a.nrows();
    let lower_zero = (0..n).all(|i| (0..i).all(|j| a[(i, j)] == 0.0));
    let upper_zero = (0..n).all(|i| ((i + 1)..n).all(|j| a[(i, j)] == 0.0));
    if lower_zero || upper_zero {
        return Ok((0..n).map(|i| a[(i, i)]).fold(f64::NEG_INFINITY, f64::max));
    }
    let schur = a
        .clone()
        .try_schur(1e-13, 100_000)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    Ok(schur
        .complex_eigenvalues()
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_of_diagonal() {
        let m = CMat::from_diagonal(&CVec::from_vec(vec![c(1.0), C64::new(0.0, 2.0)]));
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.re.total_cmp(&b.re));
        assert!((ev[0] - C64::new(0.0, 2.0)).norm() < 1e-12);
        assert!((ev[1] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn hermitian_sqrt_squares_back() {
        let m = CMat::from_row_slice(2, 2, &[c(2.0), I_C, -I_C, c(3.0)]);
        let s = hermitian_sqrt(&m);
        assert!((&s * &s - &m).norm() < 1e-12);
    }

    #[test]
    fn null_vector_of_rank_deficient() {
        let m = CMat::from_row_slice(2, 2, &[c(1.0), c(1.0), c(1.0), c(1.0)]);
        let (v, svals) = null_vector(&m).unwrap();
        assert!(svals[1] < 1e-14);
        assert!((&m * &v).norm() < 1e-12);
    }

    #[test]
    fn lyapunov_simple() {
        // A = -I/2, Q = I  =>  X = I
        let a = RMat::identity(3, 3).scale(-0.5);
        let q = RMat::identity(3, 3);
        let x = lyapunov(&a, &q).unwrap();
        assert!((x - RMat::identity(3, 3)).norm() < 1e-12);
    }
}

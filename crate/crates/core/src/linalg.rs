//! Small dense linear-algebra helpers shared by the synthesis and topology code.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};

use crate::error::{Error, Result};

const SCHUR_EPS: f64 = 1e-14;
const SCHUR_MAX_ITER: usize = 10_000;

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(m: &DMatrix<f64>) -> Result<Vec<Complex<f64>>> {
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    if let Some(s) = Schur::try_new(m.clone(), SCHUR_EPS, SCHUR_MAX_ITER) {
        return Ok(s.complex_eigenvalues().iter().copied().collect());
    }
    // Francis QR without exceptional shifts stalls on some cyclic structures
    // (e.g. a directed ring); an orthogonal similarity breaks the symmetry.
    let n = m.nrows();
    for attempt in 1..=4usize {
        let r = DMatrix::from_fn(n, n, |i, j| {
            (((i + 1) * 7 * attempt + (j + 3) * 13 + i * j) % 17) as f64 / 17.0 - 0.5 + if i == j { 1.0 } else { 0.0 }
        });
        let q = r.qr().q();
        if let Some(s) = Schur::try_new(q.transpose() * m * &q, SCHUR_EPS, SCHUR_MAX_ITER) {
            return Ok(s.complex_eigenvalues().iter().copied().collect());
        }
    }
    Err(Error::Singular("Schur decomposition (no convergence)"))
}

pub fn spectral_abscissa(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn spectral_radius(m: &DMatrix<f64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    SymmetricEigen::new(sym)
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Real 2n×2n embedding `[[Re, -Im], [Im, Re]]` of a complex matrix `re + i·im`.
///
/// Its spectrum is the union of the spectrum of the complex matrix and its
/// conjugate, so real parts and moduli are preserved.
pub fn complex_embedding(re: &DMatrix<f64>, im: &DMatrix<f64>) -> DMatrix<f64> {
    let n = re.nrows();
    let mut out = DMatrix::zeros(2 * n, 2 * n);
    out.view_mut((0, 0), (n, n)).copy_from(re);
    out.view_mut((0, n), (n, n)).copy_from(&(-im));
    out.view_mut((n, 0), (n, n)).copy_from(im);
    out.view_mut((n, n), (n, n)).copy_from(re);
    out
}

/// Column-major vectorisation.
pub fn vec_of(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

pub fn unvec(v: &DVector<f64>, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Solve `Aᵀ X + X A + Q = 0` through the Kronecker-vectorised linear system.
pub fn solve_lyapunov(a: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let at = a.transpose();
    let lhs = eye.kronecker(&at) + at.kronecker(&eye);
    let rhs = -vec_of(q);
    let x = lhs
        .lu()
        .solve(&rhs)
        .ok_or(Error::Singular("Lyapunov equation"))?;
    let x = unvec(&x, n, n);
    Ok((&x + x.transpose()) * 0.5)
}

/// Exchange matrix (ones on the anti-diagonal).
pub fn reversal(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { 1.0 } else { 0.0 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lyapunov_scalar() {
        let a = DMatrix::from_element(1, 1, -2.0);
        let q = DMatrix::from_element(1, 1, 4.0);
        let x = solve_lyapunov(&a, &q).unwrap();
        assert!((x[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn embedding_preserves_real_parts() {
        let re = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, -1.0]);
        let im = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.25]);
        let emb = complex_embedding(&re, &im);
        let mut res: Vec<f64> = eigenvalues(&emb).unwrap().iter().map(|z| z.re).collect();
        res.sort_by(f64::total_cmp);
        assert!((res[0] + 1.0).abs() < 1e-12 && (res[3] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn directed_ring_spectrum() {
        let l2 = DMatrix::from_row_slice(4, 4, &[
            2.0, 0.0, 0.0, -1.0, -1.0, 2.0, 0.0, 0.0, 0.0, -1.0, 2.0, 0.0, 0.0, 0.0, -1.0, 2.0,
        ]);
        let mut re: Vec<f64> = eigenvalues(&l2).unwrap().iter().map(|z| z.re).collect();
        re.sort_by(f64::total_cmp);
        for (a, b) in re.iter().zip([1.0, 2.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn rotation_has_unit_radius() {
        let m = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((spectral_radius(&m).unwrap() - 1.0).abs() < 1e-12);
        assert!(spectral_abscissa(&m).unwrap().abs() < 1e-12);
    }
}

//! Symmetric positive semi-definite matrix helpers.

use nalgebra::{DMatrix, SymmetricEigen};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PsdError {
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    Asymmetric { asymmetry: f64 },
    #[error("eigenvalue {eigenvalue:e} below the negativity floor {floor:e}")]
    Indefinite { eigenvalue: f64, floor: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
}

/// Relative asymmetry tolerated by [`psd_sqrt`].
pub const SYMMETRY_TOL: f64 = 1e-10;
/// Negative eigenvalues down to `-NEGATIVITY_FLOOR * trace` are clipped to 0.
pub const NEGATIVITY_FLOOR: f64 = 1e-8;

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |a, v| a.max(v.abs()))
}

fn check_square_finite(m: &DMatrix<f64>) -> Result<(), PsdError> {
    if m.nrows() != m.ncols() {
        return Err(PsdError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(PsdError::NonFinite);
    }
    Ok(())
}

/// Checks symmetry and the eigenvalue floor `-NEGATIVITY_FLOOR * scale`,
/// returning the eigendecomposition of the symmetrized matrix.
fn checked_eigen(m: &DMatrix<f64>, scale_hint: Option<f64>) -> Result<SymmetricEigen<f64, nalgebra::Dyn>, PsdError> {
    check_square_finite(m)?;
    let scale_hint = scale_hint.unwrap_or_else(|| m.trace().abs());
    let scale = max_abs(m);
    let asymmetry = max_abs(&(m - m.transpose()));
    if asymmetry > SYMMETRY_TOL * scale {
        return Err(PsdError::Asymmetric { asymmetry });
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let floor = -NEGATIVITY_FLOOR * scale_hint;
    if let Some(&lo) = eig.eigenvalues.iter().min_by(|a, b| a.total_cmp(b)) {
        // A tiny absolute slack covers round-off on the zero matrix.
        if lo < floor - 1e3 * f64::EPSILON * scale {
            return Err(PsdError::Indefinite { eigenvalue: lo, floor });
        }
    }
    Ok(eig)
}

fn recompose(eig: &SymmetricEigen<f64, nalgebra::Dyn>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let u = &eig.eigenvectors;
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    symmetrize(&(u * d * u.transpose()))
}

/// Symmetric square root `U diag(sqrt(max(lambda, 0))) U'`.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>, PsdError> {
    let eig = checked_eigen(m, None)?;
    Ok(recompose(&eig, |l| l.max(0.0).sqrt()))
}

/// Symmetrizes and clips negative eigenvalues to zero, failing if the matrix
/// is further from PSD than the tolerances above allow.
pub fn clip_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>, PsdError> {
    clip_eigen(checked_eigen(m, None)?, m)
}

/// As [`clip_psd`], with the negativity floor measured against `scale`
/// instead of the trace; for matrices formed as differences of larger ones.
pub fn clip_psd_scaled(m: &DMatrix<f64>, scale: f64) -> Result<DMatrix<f64>, PsdError> {
    clip_eigen(checked_eigen(m, Some(scale))?, m)
}

fn clip_eigen(eig: SymmetricEigen<f64, nalgebra::Dyn>, m: &DMatrix<f64>) -> Result<DMatrix<f64>, PsdError> {
    if eig.eigenvalues.iter().all(|&l| l >= 0.0) {
        return Ok(symmetrize(m));
    }
    Ok(recompose(&eig, |l| l.max(0.0)))
}

/// Square root with unconditional eigenvalue clipping; for diffusion
/// matrices evaluated at states where some propensities are negative.
pub fn psd_sqrt_clipped(m: &DMatrix<f64>) -> Result<DMatrix<f64>, PsdError> {
    check_square_finite(m)?;
    if let Some(l) = symmetrize(m).cholesky() {
        return Ok(l.unpack());
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    Ok(recompose(&eig, |l| l.max(0.0).sqrt()))
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_and_diagonal() {
        let i = DMatrix::<f64>::identity(3, 3);
        assert!((psd_sqrt(&i).unwrap() - &i).abs().max() < 1e-14);
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 9.0]));
        let r = psd_sqrt(&d).unwrap();
        let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![2.0, 3.0]));
        assert!((r - want).abs().max() < 1e-14);
    }

    #[test]
    fn lv_diffusion_multiplies_back() {
        let m = DMatrix::from_row_slice(2, 2, &[80.0, -56.0, -56.0, 98.0]);
        let r = psd_sqrt(&m).unwrap();
        assert!((&r * r.transpose() - &m).abs().max() <= 1e-10 * max_abs(&m));
        assert!((&r - r.transpose()).abs().max() == 0.0);
    }

    #[test]
    fn rank_deficient_and_zero() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let r = psd_sqrt(&m).unwrap();
        assert!((&r * &r - &m).abs().max() < 1e-12);
        let z = DMatrix::<f64>::zeros(3, 3);
        assert_eq!(psd_sqrt(&z).unwrap().abs().max(), 0.0);
    }

    #[test]
    fn rejects_asymmetric_and_indefinite() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert!(matches!(psd_sqrt(&a), Err(PsdError::Asymmetric { .. })));
        let b = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -0.5]);
        assert!(matches!(psd_sqrt(&b), Err(PsdError::Indefinite { .. })));
        let c = DMatrix::from_row_slice(2, 3, &[1.0; 6]);
        assert!(matches!(psd_sqrt(&c), Err(PsdError::NotSquare { .. })));
    }

    #[test]
    fn clips_round_off_negativity() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1e-12]);
        let c = clip_psd(&m).unwrap();
        assert!(min_eigenvalue(&c) >= 0.0);
    }

    #[test]
    fn clipped_sqrt_accepts_indefinite() {
        let b = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, -0.5]);
        let r = psd_sqrt_clipped(&b).unwrap();
        assert!((&r * r.transpose() - DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.0])).abs().max() < 1e-12);
    }
}

//! Dense-matrix primitives shared by the rest of the crate: thin QR with a
//! positive-diagonal uniqueness convention, symmetric eigendecomposition,
//! principal square-root inverse and Moore-Penrose pseudoinverse.
//!
//! All tolerances are relative to the largest singular/eigen value.
//! Everything here is a pure function on immutable inputs.

use nalgebra::DMatrix;

use crate::error::{Result, SpsError};

/// Relative tolerance for numerical rank decisions.
pub const RANK_TOL: f64 = 1e-12;
/// Relative tolerance for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-10;

/// Eigendecomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Orthonormal matrix whose columns are the matching eigenvectors.
    pub vectors: DMatrix<f64>,
}

/// Symmetric eigendecomposition. The input is symmetrized as (S + S^T)/2
/// first to suppress round-off asymmetry.
pub fn symmetric_eigen(s: &DMatrix<f64>) -> SymmetricEigen {
    let sym = (s + s.transpose()) * 0.5;
    let eig = nalgebra::linalg::SymmetricEigen::new(sym);
    let d = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(d, d);
    for (j, &i) in order.iter().enumerate() {
        vectors.set_column(j, &eig.eigenvectors.column(i));
    }
    SymmetricEigen { values, vectors }
}

/// Thin QR decomposition of an n x d matrix (n >= d, full column rank),
/// normalized so R has a strictly positive diagonal. With that convention
/// the factorization is unique, and repeated calls are bit-identical.
pub fn thin_qr(phi: &DMatrix<f64>) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (n, d) = phi.shape();
    if n < d {
        return Err(SpsError::DimensionMismatch(format!(
            "thin_qr needs n >= d, got {n} x {d}"
        )));
    }
    let sv = phi.clone().singular_values();
    let smax = sv.max();
    let rank = sv.iter().filter(|&&s| s > RANK_TOL * smax).count();
    if rank < d {
        return Err(SpsError::RankDeficient { rank, cols: d });
    }
    let qr = phi.clone().qr();
    let mut q = qr.q();
    let mut r = qr.r();
    for j in 0..d {
        if r[(j, j)] < 0.0 {
            for k in j..d {
                r[(j, k)] = -r[(j, k)];
            }
            for i in 0..n {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    Ok((q, r))
}

fn check_symmetric(s: &DMatrix<f64>) -> Result<()> {
    let scale = s.amax().max(f64::MIN_POSITIVE);
    let asym = (s - s.transpose()).amax();
    if asym > SYMMETRY_TOL * scale {
        return Err(SpsError::NotSymmetric { asymmetry: asym });
    }
    Ok(())
}

/// Inverse of the principal square root of a symmetric positive definite
/// matrix S: the symmetric PSD matrix W with W W = S^{-1}.
pub fn principal_sqrt_inverse(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_symmetric(s)?;
    let eig = symmetric_eigen(s);
    let lmax = eig.values.last().copied().unwrap_or(0.0);
    let lmin = eig.values[0];
    if lmin <= RANK_TOL * lmax.max(f64::MIN_POSITIVE) {
        return Err(SpsError::NotPositiveDefinite { eigenvalue: lmin });
    }
    let inv_sqrt = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eig.values.len(),
        eig.values.iter().map(|&l| 1.0 / l.sqrt()),
    ));
    let w = &eig.vectors * inv_sqrt * eig.vectors.transpose();
    Ok((&w + w.transpose()) * 0.5)
}

/// Moore-Penrose pseudoinverse of a symmetric PSD matrix. Eigenvalues below
/// `rank_tol * lambda_max` are treated as exactly zero.
pub fn pseudoinverse(s: &DMatrix<f64>, rank_tol: f64) -> Result<DMatrix<f64>> {
    check_symmetric(s)?;
    let eig = symmetric_eigen(s);
    let lmax = eig.values.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
    let inv = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        eig.values.len(),
        eig.values
            .iter()
            .map(|&l| if l.abs() > rank_tol * lmax { 1.0 / l } else { 0.0 }),
    ));
    let p = &eig.vectors * inv * eig.vectors.transpose();
    Ok((&p + p.transpose()) * 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn random_matrix(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| {
            rand_distr::StandardNormal.sample(&mut rng)
        })
    }

    #[test]
    fn thin_qr_identity() {
        let phi = DMatrix::<f64>::identity(2, 2);
        let (q, r) = thin_qr(&phi).unwrap();
        assert_relative_eq!(q, DMatrix::identity(2, 2), epsilon = 1e-12);
        assert_relative_eq!(r, DMatrix::identity(2, 2), epsilon = 1e-12);
    }

    #[test]
    fn thin_qr_orthogonal_columns() {
        let phi = DMatrix::from_row_slice(3, 2, &[2.0, 0.0, 0.0, 3.0, 0.0, 0.0]);
        let (q, r) = thin_qr(&phi).unwrap();
        let q_expect = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        assert_relative_eq!(q, q_expect, epsilon = 1e-12);
        assert_relative_eq!(
            r,
            DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]),
            epsilon = 1e-12
        );
    }

    #[test]
    fn thin_qr_reconstructs_random_input() {
        let phi = random_matrix(50, 3, 17);
        let (q, r) = thin_qr(&phi).unwrap();
        let qtq = q.transpose() * &q;
        assert!((qtq - DMatrix::identity(3, 3)).amax() < 1e-10);
        let recon = &q * &r;
        assert!((&recon - &phi).norm() < 1e-10 * phi.norm());
        for j in 0..3 {
            assert!(r[(j, j)] > 0.0);
        }
    }

    #[test]
    fn thin_qr_is_deterministic() {
        let phi = random_matrix(20, 4, 5);
        let (q1, r1) = thin_qr(&phi).unwrap();
        let (q2, r2) = thin_qr(&phi).unwrap();
        assert_eq!(q1, q2);
        assert_eq!(r1, r2);
    }

    #[test]
    fn thin_qr_rejects_rank_deficient() {
        let phi = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        match thin_qr(&phi) {
            Err(SpsError::RankDeficient { rank, cols }) => {
                assert_eq!(rank, 1);
                assert_eq!(cols, 2);
            }
            other => panic!("expected rank error, got {other:?}"),
        }
    }

    #[test]
    fn sqrt_inverse_identity_and_diagonal() {
        let id = DMatrix::<f64>::identity(3, 3);
        assert_relative_eq!(principal_sqrt_inverse(&id).unwrap(), id, epsilon = 1e-12);

        let s = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 9.0]);
        let w = principal_sqrt_inverse(&s).unwrap();
        let expect = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 1.0 / 3.0]);
        assert_relative_eq!(w, expect, epsilon = 1e-12);
    }

    #[test]
    fn sqrt_inverse_squares_to_inverse() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]);
        let w = principal_sqrt_inverse(&s).unwrap();
        let prod = &w * &w * &s;
        assert!((prod - DMatrix::identity(2, 2)).amax() < 1e-9);
    }

    #[test]
    fn sqrt_inverse_commutes_with_input() {
        for seed in 0..10u64 {
            let g = random_matrix(6, 4, seed);
            let s = g.transpose() * &g + DMatrix::identity(4, 4) * 0.1;
            let w = principal_sqrt_inverse(&s).unwrap();
            let comm = (&w * &s - &s * &w).amax();
            assert!(comm < 1e-9 * s.amax(), "commutator {comm:e}");
        }
    }

    #[test]
    fn sqrt_inverse_rejects_non_pd() {
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        match principal_sqrt_inverse(&s) {
            Err(SpsError::NotPositiveDefinite { eigenvalue }) => assert!(eigenvalue < 0.0),
            other => panic!("expected non-PD error, got {other:?}"),
        }
    }

    #[test]
    fn pseudoinverse_diagonal_with_zero() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 0.0]);
        let p = pseudoinverse(&s, RANK_TOL).unwrap();
        assert_relative_eq!(
            p,
            DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.0]),
            epsilon = 1e-12
        );
        let id = DMatrix::<f64>::identity(2, 2);
        assert_relative_eq!(pseudoinverse(&id, RANK_TOL).unwrap(), id, epsilon = 1e-12);
    }

    #[test]
    fn pseudoinverse_penrose_identities() {
        let g = random_matrix(4, 2, 3);
        // 4x4 PSD of rank 2
        let s = &g * g.transpose();
        let p = pseudoinverse(&s, 1e-10).unwrap();
        assert!((&s * &p * &s - &s).amax() < 1e-8 * s.amax());
        assert!((&p * &s * &p - &p).amax() < 1e-8 * p.amax());
    }

    #[test]
    fn pseudoinverse_preserves_rank() {
        let g = random_matrix(5, 3, 11);
        let s = &g * g.transpose(); // 5x5, rank 3
        let p = pseudoinverse(&s, 1e-10).unwrap();
        let eig = symmetric_eigen(&p);
        let lmax = eig.values.iter().fold(0.0f64, |m, &l| m.max(l.abs()));
        let rank = eig.values.iter().filter(|&&l| l.abs() > 1e-10 * lmax).count();
        assert_eq!(rank, 3);
    }

    #[test]
    fn eigen_reconstruction() {
        let g = random_matrix(5, 5, 23);
        let s = (&g + g.transpose()) * 0.5;
        let eig = symmetric_eigen(&s);
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(eig.values.clone()));
        let recon = &eig.vectors * lam * eig.vectors.transpose();
        assert!((&recon - &s).norm() < 1e-10 * s.norm().max(1.0));
        let vtv = eig.vectors.transpose() * &eig.vectors;
        assert!((vtv - DMatrix::identity(5, 5)).amax() < 1e-10);
        for w in eig.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
    }
}

//! Dense complex kernels: shifted factor/solve, SVD, and the direct
//! Hermitian-definite eigensolver used as the desk-scale reference.

use crate::error::{Result, SolverError};
use crate::scalar::{real, Scalar, C};
use nalgebra::linalg::{Cholesky, SymmetricEigen, LU, SVD};
use nalgebra::{DMatrix, DVector, Dyn};
use num_complex::Complex;

/// Columns are vectors; used for right-hand sides, bases and Ritz vectors.
pub type BlockVectors<T> = DMatrix<C<T>>;

/// Hermitian pencil (A, B) with B Hermitian positive definite.
/// `B = None` marks the standard problem `B = I`.
#[derive(Debug, Clone)]
pub struct HermitianPencil<T: Scalar> {
    a: DMatrix<C<T>>,
    b: Option<DMatrix<C<T>>>,
}

impl<T: Scalar> HermitianPencil<T> {
    /// Validates squareness, Hermitian symmetry (1e-12 relative) and, for a
    /// general B, positive definiteness via Cholesky.
    pub fn new(a: DMatrix<C<T>>, b: Option<DMatrix<C<T>>>) -> Result<Self> {
        if a.nrows() != a.ncols() {
            return Err(SolverError::ShapeError(format!(
                "A must be square, got {}x{}",
                a.nrows(),
                a.ncols()
            )));
        }
        check_hermitian(&a)?;
        if let Some(ref b) = b {
            if b.nrows() != a.nrows() || b.ncols() != a.ncols() {
                return Err(SolverError::ShapeError(format!(
                    "B must match A: {}x{} vs {}x{}",
                    b.nrows(),
                    b.ncols(),
                    a.nrows(),
                    a.ncols()
                )));
            }
            check_hermitian(b)?;
            if cholesky_definite(b.clone()).is_none() {
                return Err(SolverError::IndefiniteB);
            }
        }
        Ok(Self { a, b })
    }

    /// Standard problem, B = I.
    pub fn standard(a: DMatrix<C<T>>) -> Result<Self> {
        Self::new(a, None)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn a(&self) -> &DMatrix<C<T>> {
        &self.a
    }

    pub fn b(&self) -> Option<&DMatrix<C<T>>> {
        self.b.as_ref()
    }

    pub fn is_standard(&self) -> bool {
        self.b.is_none()
    }

    /// True when both matrices have (numerically) zero imaginary parts;
    /// half-contour conjugate completion is exact in this case.
    pub fn is_real(&self) -> bool {
        let real_mat = |m: &DMatrix<C<T>>| m.iter().all(|e| e.im == T::zero());
        real_mat(&self.a) && self.b.as_ref().map_or(true, real_mat)
    }

    /// B * X (no-op copy for the standard problem).
    pub fn apply_b(&self, x: &BlockVectors<T>) -> BlockVectors<T> {
        match &self.b {
            Some(b) => b * x,
            None => x.clone(),
        }
    }

    /// z*B - A.
    pub fn shifted_matrix(&self, z: C<T>) -> DMatrix<C<T>> {
        match &self.b {
            Some(b) => b.map(|e| e * z) - &self.a,
            None => {
                let mut m = -self.a.clone();
                for i in 0..m.nrows() {
                    m[(i, i)] += z;
                }
                m
            }
        }
    }
}

/// Cholesky that actually verifies positive definiteness: the complex
/// factorization can "succeed" on indefinite input by taking complex square
/// roots, so reject factors whose diagonal is not real and positive.
pub(crate) fn cholesky_definite<T: Scalar>(
    m: DMatrix<C<T>>,
) -> Option<Cholesky<C<T>, Dyn>> {
    let chol = Cholesky::new(m)?;
    let l = chol.l_dirty();
    let tol = T::default_epsilon() * real::<T>(64.0);
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d.re > T::zero()) || d.im.abs() > tol * d.re.abs().max(T::one()) {
            return None;
        }
    }
    Some(chol)
}

fn check_hermitian<T: Scalar>(m: &DMatrix<C<T>>) -> Result<()> {
    let dev = (m - m.adjoint()).norm();
    let scale = m.norm().max(T::one());
    let tol = real::<T>(1e-12).max(T::default_epsilon() * real(64.0));
    if dev > tol * scale {
        return Err(SolverError::NotHermitian {
            deviation: (dev / scale).to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(())
}

/// LU factorization of `z*B - A`, reusable across moments and right-hand sides.
/// Immutable after creation; solves may run concurrently.
pub struct ShiftedFactor<T: Scalar> {
    lu: LU<C<T>, Dyn, Dyn>,
    shift: C<T>,
}

impl<T: Scalar> ShiftedFactor<T> {
    pub fn shift(&self) -> C<T> {
        self.shift
    }

    /// X = (z*B - A)^{-1} * RHS. The caller supplies `B * Y` as the RHS.
    pub fn solve(&self, rhs: &BlockVectors<T>) -> Result<BlockVectors<T>> {
        self.lu.solve(rhs).ok_or(SolverError::SingularShift {
            re: self.shift.re.to_f64().unwrap_or(f64::NAN),
            im: self.shift.im.to_f64().unwrap_or(f64::NAN),
        })
    }
}

/// Factor `z*B - A` with partial-pivoting LU, detecting (near-)singular shifts.
pub fn factor_shifted<T: Scalar>(pencil: &HermitianPencil<T>, z: C<T>) -> Result<ShiftedFactor<T>> {
    let m = pencil.shifted_matrix(z);
    let scale = m.norm();
    let n = m.nrows();
    let lu = LU::new(m);
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .map(|p| nalgebra::ComplexField::modulus(*p))
        .fold(T::max_value().unwrap(), |a, b| a.min(b));
    if min_pivot <= real::<T>(n as f64) * T::default_epsilon() * scale {
        return Err(SolverError::SingularShift {
            re: z.re.to_f64().unwrap_or(f64::NAN),
            im: z.im.to_f64().unwrap_or(f64::NAN),
        });
    }
    Ok(ShiftedFactor { lu, shift: z })
}

/// Thin SVD returning the left singular vectors and all singular values
/// (descending). Orthogonalization and singular values in one step.
pub fn svd_with_values<T: Scalar>(u: &BlockVectors<T>) -> (BlockVectors<T>, DVector<T>) {
    assert!(u.ncols() >= 1, "svd of an empty block");
    let svd = SVD::new(u.clone(), true, false);
    let q = svd.u.expect("left singular vectors requested");
    (q, svd.singular_values)
}

/// Direct dense solve of `A X = B X diag(lambda)` with ascending eigenvalues
/// and B-orthonormal eigenvectors. Desk-scale reference path.
pub fn hermitian_definite_eig<T: Scalar>(
    pencil: &HermitianPencil<T>,
) -> Result<(Vec<T>, BlockVectors<T>)> {
    let (vals, vecs) = match pencil.b() {
        None => {
            let se = SymmetricEigen::new(hermitize(pencil.a().clone()));
            (se.eigenvalues, se.eigenvectors)
        }
        Some(b) => {
            let chol = cholesky_definite(b.clone()).ok_or(SolverError::IndefiniteB)?;
            let l = chol.l();
            // C = L^{-1} A L^{-H}, eigenvectors transformed back as X = L^{-H} W.
            let t1 = l
                .solve_lower_triangular(pencil.a())
                .ok_or(SolverError::IndefiniteB)?;
            let t2 = l
                .solve_lower_triangular(&t1.adjoint())
                .ok_or(SolverError::IndefiniteB)?;
            let se = SymmetricEigen::new(hermitize(t2.adjoint()));
            let x = l
                .adjoint()
                .solve_upper_triangular(&se.eigenvectors)
                .ok_or(SolverError::IndefiniteB)?;
            (se.eigenvalues, x)
        }
    };

    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let sorted_vals: Vec<T> = order.iter().map(|&i| vals[i]).collect();
    let sorted_vecs = BlockVectors::<T>::from_fn(vecs.nrows(), vecs.ncols(), |r, c| {
        vecs[(r, order[c])]
    });
    Ok((sorted_vals, sorted_vecs))
}

fn hermitize<T: Scalar>(m: DMatrix<C<T>>) -> DMatrix<C<T>> {
    let half = Complex::new(real::<T>(0.5), T::zero());
    (&m + m.adjoint()).map(|e| e * half)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::random_initial_block;
    use num_complex::Complex64;

    fn diag_pencil(entries: &[f64]) -> HermitianPencil<f64> {
        let n = entries.len();
        let a = DMatrix::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(entries[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        HermitianPencil::standard(a).unwrap()
    }

    fn random_hermitian(n: usize, seed: u64) -> HermitianPencil<f64> {
        let g = random_initial_block::<f64>(n, n, seed);
        let a = (&g + g.adjoint()).map(|e| e * Complex64::new(0.5, 0.0));
        HermitianPencil::standard(a).unwrap()
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(1.0, 0.0),
                Complex64::new(2.0, 0.0),
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
            ],
        );
        assert!(matches!(
            HermitianPencil::standard(a),
            Err(SolverError::NotHermitian { .. })
        ));
    }

    #[test]
    fn rejects_indefinite_b() {
        let a = DMatrix::from_diagonal_element(2, 2, Complex64::new(1.0, 0.0));
        let b = DMatrix::from_diagonal(&DVector::from_vec(vec![
            Complex64::new(1.0, 0.0),
            Complex64::new(-1.0, 0.0),
        ]));
        assert!(matches!(
            HermitianPencil::new(a, Some(b)),
            Err(SolverError::IndefiniteB)
        ));
    }

    #[test]
    fn diagonal_shifted_solve() {
        let pencil = diag_pencil(&[1.0, 2.0, 3.0]);
        let z = Complex64::new(0.0, 1.0);
        let factor = factor_shifted(&pencil, z).unwrap();
        let mut e2 = BlockVectors::<f64>::zeros(3, 1);
        e2[(1, 0)] = Complex64::new(1.0, 0.0);
        let x = factor.solve(&pencil.apply_b(&e2)).unwrap();
        let expected = Complex64::new(1.0, 0.0) / (z - Complex64::new(2.0, 0.0));
        assert!((x[(1, 0)] - expected).norm() < 1e-15);
        assert!(x[(0, 0)].norm() < 1e-15 && x[(2, 0)].norm() < 1e-15);
    }

    #[test]
    fn shift_at_eigenvalue_is_singular() {
        let pencil = diag_pencil(&[1.0, 2.0]);
        assert!(matches!(
            factor_shifted(&pencil, Complex64::new(2.0, 0.0)),
            Err(SolverError::SingularShift { .. })
        ));
    }

    #[test]
    fn shifted_solve_backward_error() {
        let pencil = random_hermitian(20, 7);
        let z = Complex64::new(0.3, 0.1);
        let factor = factor_shifted(&pencil, z).unwrap();
        let y = random_initial_block::<f64>(20, 4, 11);
        let x = factor.solve(&pencil.apply_b(&y)).unwrap();
        let res = (pencil.shifted_matrix(z) * &x - pencil.apply_b(&y)).norm();
        assert!(res <= 1e-10 * y.norm(), "residual {res}");
    }

    #[test]
    fn shifted_solve_backward_error_many_pencils() {
        for seed in 0..50u64 {
            let n = 8 + (seed as usize % 57);
            let pencil = random_hermitian(n, seed);
            let z = Complex64::new(0.1 + 0.01 * seed as f64, 0.2);
            let factor = factor_shifted(&pencil, z).unwrap();
            let y = random_initial_block::<f64>(n, 3, seed + 1000);
            let x = factor.solve(&pencil.apply_b(&y)).unwrap();
            let res = (pencil.shifted_matrix(z) * &x - pencil.apply_b(&y)).norm();
            assert!(res <= 1e-10 * y.norm(), "n={n} seed={seed}: {res}");
        }
    }

    #[test]
    fn svd_identity_and_rank_deficiency() {
        let id = BlockVectors::<f64>::identity(3, 3);
        let (_, sigma) = svd_with_values(&id);
        for s in sigma.iter() {
            assert!((s - 1.0).abs() < 1e-14);
        }

        let v = random_initial_block::<f64>(6, 1, 3);
        let mut dup = BlockVectors::<f64>::zeros(6, 2);
        dup.set_column(0, &v.column(0));
        dup.set_column(1, &v.column(0));
        let (_, sigma) = svd_with_values(&dup);
        assert!(sigma[1] <= 1e-14 * sigma[0]);
    }

    #[test]
    fn svd_axis_aligned_columns() {
        let mut u = BlockVectors::<f64>::zeros(2, 2);
        u[(0, 0)] = Complex64::new(3.0, 0.0);
        u[(1, 1)] = Complex64::new(4.0, 0.0);
        let (_, sigma) = svd_with_values(&u);
        assert!((sigma[0] - 4.0).abs() < 1e-14);
        assert!((sigma[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn svd_descending_and_orthonormal_and_reconstructs() {
        let u = random_initial_block::<f64>(12, 5, 99);
        let svd = SVD::new(u.clone(), true, true);
        let q = svd.u.as_ref().unwrap();
        let sigma = &svd.singular_values;
        for i in 1..sigma.len() {
            assert!(sigma[i] <= sigma[i - 1]);
        }
        let gram = q.adjoint() * q;
        assert!((gram - BlockVectors::<f64>::identity(5, 5)).norm() < 1e-12);
        let rec = q * DMatrix::from_diagonal(&sigma.map(|s| Complex64::new(s, 0.0)))
            * svd.v_t.unwrap();
        assert!((&u - rec).norm() <= 1e-12 * u.norm());
    }

    #[test]
    fn eig_diagonal_matches_entries() {
        let entries: Vec<f64> = (0..100).map(|i| -2.99 + 0.1 * i as f64).collect();
        let pencil = diag_pencil(&entries);
        let (vals, _) = hermitian_definite_eig(&pencil).unwrap();
        for (v, e) in vals.iter().zip(&entries) {
            assert!((v - e).abs() < 1e-13);
        }
    }

    #[test]
    fn eig_identity_and_two_by_two() {
        let pencil = diag_pencil(&[1.0, 1.0, 1.0]);
        let (vals, _) = hermitian_definite_eig(&pencil).unwrap();
        assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-14));

        let a = DMatrix::from_row_slice(
            2,
            2,
            &[
                Complex64::new(0.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(1.0, 0.0),
                Complex64::new(0.0, 0.0),
            ],
        );
        let pencil = HermitianPencil::standard(a).unwrap();
        let (vals, _) = hermitian_definite_eig(&pencil).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-14);
        assert!((vals[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn generalized_eig_residual_and_b_orthonormality() {
        let n = 16;
        let ga = random_initial_block::<f64>(n, n, 21);
        let a = (&ga + ga.adjoint()).map(|e| e * Complex64::new(0.5, 0.0));
        let gb = random_initial_block::<f64>(n, n, 22);
        let b = &gb * gb.adjoint()
            + DMatrix::from_diagonal_element(n, n, Complex64::new(n as f64, 0.0));
        let pencil = HermitianPencil::new(a.clone(), Some(b.clone())).unwrap();
        let (vals, vecs) = hermitian_definite_eig(&pencil).unwrap();

        let a_norm = a.norm();
        let b_norm = b.norm();
        for j in 0..n {
            let x = vecs.column(j);
            let r = (&a * x - &b * x * Complex64::new(vals[j], 0.0)).norm();
            assert!(r <= 1e-11 * (a_norm + vals[j].abs() * b_norm), "pair {j}: {r}");
        }
        let gram = vecs.adjoint() * &b * &vecs;
        assert!((gram - BlockVectors::<f64>::identity(n, n)).norm() < 1e-10);
        for j in 1..n {
            assert!(vals[j] >= vals[j - 1]);
        }
    }
}

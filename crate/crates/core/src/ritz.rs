//! Rayleigh-Ritz extraction, residuals, convergence classification and
//! locking of converged eigenpairs.

use crate::contour::Interval;
use crate::error::{Result, SolverError};
use crate::linalg::{BlockVectors, HermitianPencil};
use crate::scalar::{real, Scalar, C};
use nalgebra::linalg::SymmetricEigen;
use nalgebra::DMatrix;
use num_complex::Complex;

/// Approximate eigenpairs with residuals and classification flags.
/// Columns of `x` have unit 2-norm; `residual_j = ||A x_j - B x_j lambda_j||`.
#[derive(Debug, Clone)]
pub struct RitzSet<T: Scalar> {
    pub lambda: Vec<T>,
    pub x: BlockVectors<T>,
    pub residual: Vec<T>,
    pub in_interval: Vec<bool>,
    pub converged: Vec<bool>,
    pub locked: Vec<bool>,
}

impl<T: Scalar> RitzSet<T> {
    pub fn len(&self) -> usize {
        self.lambda.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda.is_empty()
    }

    /// Indices of pairs still active (not locked).
    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| !self.locked[i]).collect()
    }

    /// The active Ritz vectors as a block.
    pub fn active_vectors(&self) -> BlockVectors<T> {
        let idx = self.active_indices();
        BlockVectors::<T>::from_fn(self.x.nrows(), idx.len(), |r, c| self.x[(r, idx[c])])
    }
}

/// Converged eigenpairs frozen out of the active iteration.
/// Vectors are kept B-orthonormal among themselves.
#[derive(Debug, Clone)]
pub struct LockedStore<T: Scalar> {
    pub vectors: BlockVectors<T>,
    pub values: Vec<T>,
    pub residuals: Vec<T>,
}

impl<T: Scalar> LockedStore<T> {
    pub fn new(n: usize) -> Self {
        Self {
            vectors: BlockVectors::<T>::zeros(n, 0),
            values: Vec::new(),
            residuals: Vec::new(),
        }
    }

    pub fn count(&self) -> usize {
        self.values.len()
    }
}

/// Rayleigh-Ritz extraction from an orthonormal basis `Q`:
/// forms `A_U = Q^H A Q`, `B_U = Q^H B Q`, solves the reduced problem and
/// maps the eigenvectors back, with residuals and interval membership.
pub fn extract<T: Scalar>(
    pencil: &HermitianPencil<T>,
    q: &BlockVectors<T>,
    interval: Interval<T>,
    tol: T,
) -> Result<RitzSet<T>> {
    let a_u = hermitize(q.adjoint() * pencil.a() * q);
    let (vals, w) = if pencil.is_standard() {
        let se = SymmetricEigen::new(a_u);
        (se.eigenvalues, se.eigenvectors)
    } else {
        let b_u = hermitize(q.adjoint() * pencil.apply_b(q));
        let chol = crate::linalg::cholesky_definite(b_u).ok_or(SolverError::ReducedIndefinite)?;
        let l = chol.l();
        let t1 = l
            .solve_lower_triangular(&a_u)
            .ok_or(SolverError::ReducedIndefinite)?;
        let t2 = l
            .solve_lower_triangular(&t1.adjoint())
            .ok_or(SolverError::ReducedIndefinite)?;
        let se = SymmetricEigen::new(hermitize(t2.adjoint()));
        let w = l
            .adjoint()
            .solve_upper_triangular(&se.eigenvectors)
            .ok_or(SolverError::ReducedIndefinite)?;
        (se.eigenvalues, w)
    };

    let mut order: Vec<usize> = (0..vals.len()).collect();
    order.sort_by(|&i, &j| vals[i].partial_cmp(&vals[j]).unwrap());
    let lambda: Vec<T> = order.iter().map(|&i| vals[i]).collect();

    let mut x = q * BlockVectors::<T>::from_fn(w.nrows(), order.len(), |r, c| w[(r, order[c])]);
    for mut col in x.column_iter_mut() {
        let nrm = col.norm();
        if nrm > T::zero() {
            let inv = Complex::new(T::one() / nrm, T::zero());
            col.apply(|e| *e *= inv);
        }
    }

    let ax = pencil.a() * &x;
    let bx = pencil.apply_b(&x);
    let mut residual = Vec::with_capacity(lambda.len());
    for (j, &lam) in lambda.iter().enumerate() {
        let r = (ax.column(j) - bx.column(j) * Complex::new(lam, T::zero())).norm();
        residual.push(r);
    }
    let in_interval: Vec<bool> = lambda.iter().map(|&l| interval.contains(l)).collect();
    let converged: Vec<bool> = residual.iter().map(|&r| r < tol).collect();
    let locked = vec![false; lambda.len()];
    Ok(RitzSet {
        lambda,
        x,
        residual,
        in_interval,
        converged,
        locked,
    })
}

/// Which residual feeds the stagnation drop rate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StagnationStatistic {
    /// Smallest residual among the not-yet-converged pairs (the prose form).
    #[default]
    Min,
    /// Largest above-tolerance residual (the displayed-formula form).
    Max,
}

/// `r_SNC`: residual statistic over in-interval, unlocked pairs with
/// residual at or above tolerance. `None` when all such pairs converged.
pub fn smallest_nonconverged_residual<T: Scalar>(
    ritz: &RitzSet<T>,
    tol: T,
    statistic: StagnationStatistic,
) -> Option<T> {
    let mut acc: Option<T> = None;
    for i in 0..ritz.len() {
        if !ritz.in_interval[i] || ritz.locked[i] || ritz.residual[i] < tol {
            continue;
        }
        let r = ritz.residual[i];
        acc = Some(match (acc, statistic) {
            (None, _) => r,
            (Some(a), StagnationStatistic::Min) => a.min(r),
            (Some(a), StagnationStatistic::Max) => a.max(r),
        });
    }
    acc
}

/// Lock newly converged in-interval pairs into the store and B-orthogonalize
/// the remaining active columns against the full store (modified
/// Gram-Schmidt with one reorthogonalization pass).
pub fn lock_converged<T: Scalar>(
    pencil: &HermitianPencil<T>,
    mut ritz: RitzSet<T>,
    store: &mut LockedStore<T>,
) -> RitzSet<T> {
    // append newly converged pairs, keeping the store B-orthonormal
    for i in 0..ritz.len() {
        if ritz.locked[i] || !ritz.in_interval[i] || !ritz.converged[i] {
            continue;
        }
        let mut v = ritz.x.column(i).into_owned();
        let bn_before = b_norm(pencil, &v);
        for _ in 0..2 {
            mgs_against_store(pencil, store, &mut v);
        }
        let bn = b_norm(pencil, &v);
        // a converged pair that collapses against the store is a
        // rediscovery of an already-locked eigenvector (possible with raw
        // inner restarts); flag it without storing a duplicate
        if bn <= real::<T>(0.1) * bn_before {
            ritz.locked[i] = true;
            continue;
        }
        v /= Complex::new(bn, T::zero());
        let old = store.vectors.ncols();
        store.vectors = store.vectors.clone().resize_horizontally(
            old + 1,
            Complex::new(T::zero(), T::zero()),
        );
        store.vectors.set_column(old, &v);
        store.values.push(ritz.lambda[i]);
        store.residuals.push(ritz.residual[i]);
        ritz.locked[i] = true;
    }

    // purge the active columns of their locked components
    if store.count() > 0 {
        for i in 0..ritz.len() {
            if ritz.locked[i] {
                continue;
            }
            let mut v = ritz.x.column(i).into_owned();
            for _ in 0..2 {
                mgs_against_store(pencil, store, &mut v);
            }
            let nrm = v.norm();
            if nrm > T::zero() {
                v /= Complex::new(nrm, T::zero());
            }
            ritz.x.set_column(i, &v);
        }
    }
    ritz
}

fn mgs_against_store<T: Scalar>(
    pencil: &HermitianPencil<T>,
    store: &LockedStore<T>,
    v: &mut nalgebra::DVector<C<T>>,
) {
    for j in 0..store.count() {
        let u = store.vectors.column(j);
        let bv = pencil.apply_b(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()));
        let h = u.adjoint() * bv.column(0);
        let h = h[(0, 0)];
        v.zip_apply(&u, |vi, ui| *vi -= h * ui);
    }
}

fn b_norm<T: Scalar>(pencil: &HermitianPencil<T>, v: &nalgebra::DVector<C<T>>) -> T {
    let bv = pencil.apply_b(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()));
    let ip = (v.adjoint() * bv.column(0))[(0, 0)];
    ip.re.max(T::zero()).sqrt()
}

fn hermitize<T: Scalar>(m: DMatrix<C<T>>) -> DMatrix<C<T>> {
    let half = Complex::new(real::<T>(0.5), T::zero());
    (&m + m.adjoint()).map(|e| e * half)
}

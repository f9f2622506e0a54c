//! Filtered subspace construction by approximate contour integration with
//! moments, plus orthonormalization/truncation and solve-cost accounting.

use crate::contour::ContourRule;
use crate::error::{Result, SolverError};
use crate::linalg::{factor_shifted, svd_with_values, BlockVectors, HermitianPencil};
use crate::scalar::Scalar;
use nalgebra::DVector;
use rayon::prelude::*;

/// Moment layout of the subspace: `m0 = s * rhs_1` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MomentConfig {
    pub s: usize,
    pub rhs_1: usize,
}

impl MomentConfig {
    pub fn m0(&self) -> usize {
        self.s * self.rhs_1
    }
}

/// Cumulative solve-cost counters: single right-hand sides and block linear
/// systems over all iterations. Only stored (actually solved) nodes count;
/// the conjugate completion is free.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct CostCounters {
    pub rhs_ovl: u64,
    pub bls_ovl: u64,
}

impl CostCounters {
    pub fn record_build(&mut self, stored_nodes: usize, rhs_1: usize) {
        self.bls_ovl += stored_nodes as u64;
        self.rhs_ovl += (stored_nodes * rhs_1) as u64;
    }
}

/// The filtered block `U = [U_0 | U_1 | ... | U_{s-1}]`.
#[derive(Debug, Clone)]
pub struct SubspaceBlock<T: Scalar> {
    pub block: BlockVectors<T>,
    pub s: usize,
    pub rhs_1: usize,
}

impl<T: Scalar> SubspaceBlock<T> {
    pub fn m0(&self) -> usize {
        self.s * self.rhs_1
    }

    /// The zeroth-moment block `U_0` (first `rhs_1` columns).
    pub fn zeroth_moment(&self) -> BlockVectors<T> {
        self.block.columns(0, self.rhs_1).into_owned()
    }
}

/// Build `U_k = sum_j omega_j z_j^k (z_j B - A)^{-1} B Y` for `k < s`,
/// with one factorization and one block solve per stored node; moments only
/// change the accumulation. Half-contour rules add the conjugate-node
/// contribution analytically (conjugate coefficients applied to conjugate
/// solutions), exact for real pencils.
///
/// Counters: `bls_ovl += stored_nodes`, `rhs_ovl += stored_nodes * rhs_1`.
pub fn build_subspace<T: Scalar>(
    pencil: &HermitianPencil<T>,
    y: &BlockVectors<T>,
    rule: &ContourRule<T>,
    s: usize,
    counters: &mut CostCounters,
) -> Result<SubspaceBlock<T>> {
    assert!(s >= 1, "need at least one moment");
    let rhs_1 = y.ncols();
    assert!(rhs_1 >= 1, "Y must have at least one column");
    let n = pencil.n();
    let by = pencil.apply_b(y);

    // One factor + solve per node; nodes are independent, accumulation below
    // runs in ascending node order so results are reproducible.
    let solutions: Vec<BlockVectors<T>> = rule
        .nodes
        .par_iter()
        .enumerate()
        .map(|(j, &z)| {
            let factor = factor_shifted(pencil, z).map_err(|e| match e {
                SolverError::SingularShift { .. } => SolverError::SingularNode { node: j },
                other => other,
            })?;
            factor.solve(&by).map_err(|e| match e {
                SolverError::SingularShift { .. } => SolverError::SingularNode { node: j },
                other => other,
            })
        })
        .collect::<Result<_>>()?;

    counters.record_build(rule.stored_nodes(), rhs_1);

    let mut block = BlockVectors::<T>::zeros(n, s * rhs_1);
    for k in 0..s {
        let mut uk = block.columns_mut(k * rhs_1, rhs_1);
        for (j, x) in solutions.iter().enumerate() {
            let coeff = rule.coeffs[j] * rule.nodes[j].powu(k as u32);
            uk.zip_apply(x, |u, xv| *u += coeff * xv);
            if rule.half_contour {
                let cc = coeff.conj();
                uk.zip_apply(x, |u, xv| *u += cc * xv.conj());
            }
        }
    }
    Ok(SubspaceBlock { block, s, rhs_1 })
}

/// Orthonormalize by SVD and truncate (almost) linearly dependent columns:
/// keep left singular vectors with `sigma_i > delta * sigma_max`. The full
/// singular spectrum is returned for rank-based convergence checks.
pub fn orthonormalize_truncate<T: Scalar>(
    u: &BlockVectors<T>,
    delta: T,
) -> Result<(BlockVectors<T>, usize, DVector<T>)> {
    let (q, sigma) = svd_with_values(u);
    let sigma_max = sigma.max();
    if sigma_max == T::zero() {
        return Err(SolverError::ZeroSubspace);
    }
    let rank = sigma.iter().filter(|&&x| x > delta * sigma_max).count();
    let q_kept = q.columns(0, rank).into_owned();
    Ok((q_kept, rank, sigma))
}

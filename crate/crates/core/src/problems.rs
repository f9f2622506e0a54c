//! Problem construction: the toy problem, synthetic desk-scale generators,
//! random starting blocks and the dense reference spectrum.

use crate::contour::Interval;
use crate::error::Result;
use crate::linalg::{hermitian_definite_eig, BlockVectors, HermitianPencil};
use crate::scalar::{real, Scalar, C};
use nalgebra::DMatrix;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// A pencil with its search interval and the expected in-interval count.
#[derive(Debug, Clone)]
pub struct EigenProblem<T: Scalar> {
    pub pencil: HermitianPencil<T>,
    pub interval: Interval<T>,
    pub n_expect: usize,
    pub label: String,
}

/// `A = diag(-2.99, -2.89, ..., 6.91)`, `B = I`, interval `[-1, 1]` with
/// exactly 20 eigenvalues inside.
pub fn toy_problem<T: Scalar>() -> EigenProblem<T> {
    let n = 100;
    let a = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex::new(real(-2.99 + 0.1 * r as f64), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    EigenProblem {
        pencil: HermitianPencil::standard(a).expect("diagonal matrix is Hermitian"),
        interval: Interval::new(real(-1.0), real(1.0)).unwrap(),
        n_expect: 20,
        label: "toy".to_string(),
    }
}

/// Tridiagonal 1-D Laplacian: 2 on the diagonal, -1 off.
/// Eigenvalues are `2 - 2 cos(k pi / (n+1))`, all in (0, 4).
pub fn laplacian_1d<T: Scalar>(n: usize) -> DMatrix<C<T>> {
    assert!(n >= 2, "laplacian_1d requires n >= 2");
    DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex::new(real(2.0), T::zero())
        } else if r.abs_diff(c) == 1 {
            Complex::new(real(-1.0), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

/// Laplacian pencil with a search interval; `n_expect` is the exact
/// eigenvalue count from the closed form.
pub fn laplacian_problem<T: Scalar>(n: usize, lo: f64, hi: f64) -> EigenProblem<T> {
    let count = (1..=n)
        .filter(|&k| {
            let lam = 2.0 - 2.0 * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos();
            lo <= lam && lam <= hi
        })
        .count();
    EigenProblem {
        pencil: HermitianPencil::standard(laplacian_1d(n)).unwrap(),
        interval: Interval::new(real(lo), real(hi)).unwrap(),
        n_expect: count,
        label: format!("laplacian_{n}_[{lo},{hi}]"),
    }
}

/// n x p block of i.i.d. standard normal real entries from a seeded ChaCha
/// generator. Deterministic per seed, column-major fill order.
pub fn random_initial_block<T: Scalar>(n: usize, p: usize, seed: u64) -> BlockVectors<T> {
    assert!(n >= 1 && p >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut block = BlockVectors::<T>::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            let v: f64 = StandardNormal.sample(&mut rng);
            block[(i, j)] = Complex::new(real(v), T::zero());
        }
    }
    block
}

/// All oracle eigenpairs with eigenvalue inside the problem's interval,
/// B-orthonormal vectors. The scoring reference for "all eigenpairs found".
pub fn reference_spectrum<T: Scalar>(
    problem: &EigenProblem<T>,
) -> Result<(Vec<T>, BlockVectors<T>)> {
    let (vals, vecs) = hermitian_definite_eig(&problem.pencil)?;
    let keep: Vec<usize> = (0..vals.len())
        .filter(|&i| problem.interval.contains(vals[i]))
        .collect();
    let in_vals: Vec<T> = keep.iter().map(|&i| vals[i]).collect();
    let in_vecs = BlockVectors::<T>::from_fn(vecs.nrows(), keep.len(), |r, c| {
        vecs[(r, keep[c])]
    });
    Ok((in_vals, in_vecs))
}

/// Dense real symmetric test problem with tightly clustered interior
/// eigenvalues: `n_inside` eigenvalues grouped in clusters of `cluster_size`
/// inside `[0, 1]`, the rest spread outside with the given boundary gap.
/// Built as `Q D Q^T` with a random orthogonal `Q`.
pub fn clustered_hermitian_problem<T: Scalar>(
    n: usize,
    n_inside: usize,
    cluster_size: usize,
    cluster_width: f64,
    boundary_gap: f64,
    seed: u64,
) -> EigenProblem<T> {
    assert!(n_inside < n && cluster_size >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e3779b97f4a7c15));
    let n_clusters = n_inside.div_ceil(cluster_size);
    let mut eigs: Vec<f64> = Vec::with_capacity(n);
    let mut placed = 0;
    for c in 0..n_clusters {
        // cluster centers spread across the interior of [0, 1]
        let center = 0.15 + 0.7 * (c as f64 + 0.5) / n_clusters as f64;
        let jitter: f64 = StandardNormal.sample(&mut rng);
        let center = (center + 0.02 * jitter).clamp(0.1, 0.9);
        for k in 0..cluster_size.min(n_inside - placed) {
            eigs.push(center + k as f64 * cluster_width);
            placed += 1;
        }
    }
    // exterior eigenvalues on both sides, nearest ones at boundary_gap
    let n_out = n - n_inside;
    for i in 0..n_out {
        let t = i as f64 / n_out as f64;
        if i % 2 == 0 {
            eigs.push(1.0 + boundary_gap + 2.0 * t);
        } else {
            eigs.push(-boundary_gap - 2.0 * t);
        }
    }
    debug_assert_eq!(eigs.len(), n);

    let g = random_initial_block::<T>(n, n, seed);
    let q = nalgebra::linalg::QR::new(g).q();
    let d = DMatrix::from_fn(n, n, |r, c| {
        if r == c {
            Complex::new(real(eigs[r]), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    });
    let a = &q * d * q.adjoint();
    // symmetrize away the roundoff from the similarity transform
    let a = (&a + a.adjoint()).map(|e| e * Complex::new(real(0.5), T::zero()));
    let a = a.map(|e| Complex::new(e.re, T::zero()));
    EigenProblem {
        pencil: HermitianPencil::standard(a).expect("Q D Q^T is Hermitian"),
        interval: Interval::new(T::zero(), T::one()).unwrap(),
        n_expect: n_inside,
        label: format!("clustered_{n}_seed{seed}"),
    }
}

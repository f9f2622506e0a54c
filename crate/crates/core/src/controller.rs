//! The flexible subspace-iteration state machine: mode selection, inner and
//! outer restarts, stagnation-triggered switching, adaptive quadrature,
//! subspace resizing, locking and termination.

use crate::contour::{adapt_q, build_contour, RuleKind};
use crate::error::{Result, SolverError};
use crate::linalg::BlockVectors;
use crate::problems::EigenProblem;
use crate::ritz::{
    extract, lock_converged, smallest_nonconverged_residual, LockedStore, RitzSet,
    StagnationStatistic,
};
use crate::scalar::{real, Scalar, C};
use crate::subspace::{build_subspace, orthonormalize_truncate, CostCounters};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Iteration scheme in effect for a given iteration.
/// Transitions only ever go from a moment mode to `Single`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IterationMode {
    /// Multi-moment with inner restarts (`Y := U_0`).
    MomentInner,
    /// Multi-moment with outer restarts (`Y := X_hat R`).
    MomentOuter,
    /// Single-moment subspace iteration (`Y := X_hat`).
    Single,
}

impl IterationMode {
    pub fn is_moment(self) -> bool {
        !matches!(self, IterationMode::Single)
    }
}

impl std::fmt::Display for IterationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IterationMode::MomentInner => write!(f, "m_in"),
            IterationMode::MomentOuter => write!(f, "m_out"),
            IterationMode::Single => write!(f, "c"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIterations,
    Stalled,
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SolveStatus::Converged => write!(f, "converged"),
            SolveStatus::MaxIterations => write!(f, "max_iterations"),
            SolveStatus::Stalled => write!(f, "stalled"),
        }
    }
}

/// Contour-quadrature parameters of the solver.
#[derive(Debug, Clone, Copy)]
pub struct QuadConfig<T: Scalar> {
    pub rule_kind: RuleKind,
    pub q: usize,
    pub ecc: T,
    pub half_contour: bool,
}

impl<T: Scalar> Default for QuadConfig<T> {
    fn default() -> Self {
        Self {
            rule_kind: RuleKind::GaussLegendre,
            q: 16,
            ecc: real(0.1),
            half_contour: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverConfig<T: Scalar> {
    pub mode: IterationMode,
    /// The "x" flag: allow switching to single-moment on stagnation.
    pub switch_on_stagnation: bool,
    /// The "ad" flag: adapt the node count in single-moment iterations.
    pub adaptive_q: bool,
    pub s_initial: usize,
    pub subspace_factor: T,
    pub n_expect: usize,
    pub tol: T,
    pub max_iter: usize,
    pub stagnation_threshold: T,
    pub stagnation_statistic: StagnationStatistic,
    /// Reproduce fixed-index switching experiments; normally `None`.
    pub forced_switch_at: Option<usize>,
    pub quad: QuadConfig<T>,
    pub rng_seed: u64,
    /// Floor on the right-hand-side count, guarding against over-shrinking
    /// the subspace after locking.
    pub min_rhs: usize,
    /// Relative singular-value threshold for basis truncation.
    pub truncation_delta: T,
    /// Relative singular-value threshold for the saturation part of the
    /// convergence check (a coarse spectral-content count, not the
    /// truncation threshold).
    pub saturation_delta: T,
}

impl<T: Scalar> SolverConfig<T> {
    pub fn new(mode: IterationMode, n_expect: usize) -> Self {
        Self {
            mode,
            switch_on_stagnation: false,
            adaptive_q: false,
            s_initial: if mode == IterationMode::Single { 1 } else { 4 },
            subspace_factor: real(1.5),
            n_expect,
            tol: real(1e-13),
            max_iter: 50,
            stagnation_threshold: real(0.01),
            stagnation_statistic: StagnationStatistic::Min,
            forced_switch_at: None,
            quad: QuadConfig::default(),
            rng_seed: 42,
            min_rhs: 4,
            truncation_delta: real(1e-14),
            saturation_delta: real(0.25),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.subspace_factor <= T::one() {
            return Err(SolverError::InvalidConfig(
                "subspace_factor must be > 1".into(),
            ));
        }
        if self.s_initial < 1 {
            return Err(SolverError::InvalidConfig("s_initial must be >= 1".into()));
        }
        if self.n_expect < 1 {
            return Err(SolverError::InvalidConfig("n_expect must be >= 1".into()));
        }
        if self.tol <= T::zero() {
            return Err(SolverError::InvalidConfig("tol must be positive".into()));
        }
        if self.max_iter < 1 {
            return Err(SolverError::InvalidConfig("max_iter must be >= 1".into()));
        }
        if self.stagnation_threshold <= T::zero() {
            return Err(SolverError::InvalidConfig(
                "stagnation_threshold must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the per-iteration convergence trace.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub mode: IterationMode,
    pub s: usize,
    pub q: usize,
    pub rhs_1: usize,
    pub rank: usize,
    /// Statistics over the `n_expect` smallest residuals (locked and active).
    pub res_min: f64,
    pub res_avg: f64,
    pub res_max: f64,
    pub locked: usize,
    pub rhs_ovl: u64,
    pub bls_ovl: u64,
}

#[derive(Debug, Clone)]
pub struct SolveResult<T: Scalar> {
    /// Locked (converged, in-interval) eigenvalues, ascending.
    pub eigenvalues: Vec<T>,
    pub eigenvectors: BlockVectors<T>,
    pub residuals: Vec<T>,
    pub trace: Vec<IterationRecord>,
    pub counters: CostCounters,
    pub status: SolveStatus,
}

impl<T: Scalar> SolveResult<T> {
    pub fn found_count(&self) -> usize {
        self.eigenvalues.len()
    }
}

/// Stagnation: the drop rate `r_cur / r_prev` rose above the threshold.
/// Absent values (first iteration, or everything converged) never trigger.
pub fn detect_stagnation<T: Scalar>(r_prev: Option<T>, r_cur: Option<T>, threshold: T) -> bool {
    match (r_prev, r_cur) {
        (Some(p), Some(c)) if p > T::zero() => c / p > threshold,
        _ => false,
    }
}

/// Subspace sizing after locking: target `m0` of
/// `ceil(factor * max(n_expect - locked, 1))` columns, split into
/// `rhs_1 = max(min_rhs, ceil(m0 / s))` right-hand sides per moment.
/// Returns `(rhs_1, m0_active = s * rhs_1)`.
pub fn resize_subspace<T: Scalar>(
    config: &SolverConfig<T>,
    locked_count: usize,
    s_current: usize,
) -> (usize, usize) {
    let remaining = config.n_expect.saturating_sub(locked_count).max(1);
    let m0 = (config.subspace_factor * real(remaining as f64))
        .ceil()
        .to_usize()
        .unwrap_or(remaining);
    let rhs_1 = config.min_rhs.max(m0.div_ceil(s_current));
    (rhs_1, s_current * rhs_1)
}

/// Choose the next initial block per mode: inner keeps the raw zeroth-moment
/// block, outer mixes the active Ritz vectors with a random matrix, and
/// single-moment passes the active Ritz vectors through unchanged.
pub fn next_initial_vectors<T: Scalar>(
    mode: IterationMode,
    u0: &BlockVectors<T>,
    ritz: &RitzSet<T>,
    rhs_target: usize,
    rng: &mut ChaCha8Rng,
) -> Result<BlockVectors<T>> {
    assert!(rhs_target >= 1);
    match mode {
        IterationMode::MomentInner => Ok(u0.clone()),
        IterationMode::MomentOuter => {
            let active = ritz.active_vectors();
            if active.ncols() == 0 {
                return Err(SolverError::EmptyActiveSet);
            }
            let r = gaussian_block::<T>(active.ncols(), rhs_target, rng);
            Ok(&active * r)
        }
        IterationMode::Single => {
            let active = ritz.active_vectors();
            if active.ncols() == 0 {
                return Err(SolverError::EmptyActiveSet);
            }
            Ok(active)
        }
    }
}

/// Convergence: every in-interval active Ritz pair is below tolerance AND
/// the singular spectrum of `U` is not saturated (the coarse spectral-content
/// count at `saturation_delta` stays below the pre-truncation column count,
/// indicating no undiscovered in-interval content).
pub fn convergence_check<T: Scalar>(
    ritz: &RitzSet<T>,
    sigma: &DVector<T>,
    saturation_delta: T,
    tol: T,
    pre_truncation_cols: usize,
    locked_count: usize,
) -> bool {
    let mut has_in_interval = locked_count > 0;
    for i in 0..ritz.len() {
        if ritz.in_interval[i] && !ritz.locked[i] {
            has_in_interval = true;
            if ritz.residual[i] >= tol {
                return false;
            }
        }
    }
    // empty spectral content: the subspace is pure exterior leakage, whose
    // singular values all sit at one scale; the saturation count would never
    // clear, so it is waived
    if !has_in_interval {
        return true;
    }
    let sigma_max = sigma.max();
    if sigma_max == T::zero() {
        return true;
    }
    let content = sigma
        .iter()
        .filter(|&&x| x > saturation_delta * sigma_max)
        .count();
    content < pre_truncation_cols
}

/// Run the flexible subspace iteration on a problem.
pub fn run<T: Scalar>(
    problem: &EigenProblem<T>,
    config: &SolverConfig<T>,
) -> Result<SolveResult<T>> {
    config.validate()?;
    let pencil = &problem.pencil;
    let n = pencil.n();
    let interval = problem.interval;

    // Conjugate completion is exact only for real pencils; fall back to the
    // full contour otherwise.
    let half = config.quad.half_contour && pencil.is_real();
    let mut rule = build_contour(interval, config.quad.ecc, config.quad.rule_kind, config.quad.q, half)?;

    let mut mode = config.mode;
    let mut s = match mode {
        IterationMode::Single => 1,
        _ => config.s_initial,
    };
    let mut store = LockedStore::new(n);
    let mut counters = CostCounters::default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let (rhs_first, _) = resize_subspace(config, 0, s);
    let mut y = gaussian_block::<T>(n, rhs_first, &mut rng);
    let mut r_prev: Option<T> = None;
    let mut trace: Vec<IterationRecord> = Vec::new();
    let mut status = SolveStatus::MaxIterations;

    for it in 1..=config.max_iter {
        let mode_used = mode;
        let s_used = s;
        let q_used = rule.q;
        let rhs_used = y.ncols();

        let sub = build_subspace(pencil, &y, &rule, s, &mut counters)?;
        let pre_cols = sub.block.ncols();
        let u0 = if mode_used == IterationMode::MomentInner {
            sub.zeroth_moment()
        } else {
            BlockVectors::<T>::zeros(n, 0)
        };
        let (q_basis, rank, sigma) = orthonormalize_truncate(&sub.block, config.truncation_delta)?;
        let ritz = extract(pencil, &q_basis, interval, config.tol)?;
        let ritz = lock_converged(pencil, ritz, &mut store);

        let r_cur = smallest_nonconverged_residual(&ritz, config.tol, config.stagnation_statistic);

        trace.push(make_record(
            it, mode_used, s_used, q_used, rhs_used, rank, &ritz, &store, &counters,
            config.n_expect,
        ));

        let stagnated = detect_stagnation(r_prev, r_cur, config.stagnation_threshold);
        let forced = config.forced_switch_at == Some(it);
        if mode.is_moment() && ((config.switch_on_stagnation && stagnated) || forced) {
            mode = IterationMode::Single;
            s = 1;
        }

        if convergence_check(
            &ritz,
            &sigma,
            config.saturation_delta,
            config.tol,
            pre_cols,
            store.count(),
        ) {
            status = SolveStatus::Converged;
            break;
        }
        if it == config.max_iter {
            let residuals_ok = (0..ritz.len())
                .all(|i| !ritz.in_interval[i] || ritz.locked[i] || ritz.residual[i] < config.tol);
            status = if residuals_ok {
                SolveStatus::Stalled
            } else {
                SolveStatus::MaxIterations
            };
            break;
        }

        let (rhs_next, _) = resize_subspace(config, store.count(), s);
        y = match next_initial_vectors(mode, &u0, &ritz, rhs_next, &mut rng) {
            Ok(block) => block,
            Err(SolverError::EmptyActiveSet) => {
                // restart from fresh random vectors, deflated against locked
                let fresh = gaussian_block::<T>(n, rhs_next, &mut rng);
                deflate_against(pencil, &store, fresh)
            }
            Err(other) => return Err(other),
        };

        if mode == IterationMode::Single && config.adaptive_q {
            if let (Some(p), Some(c)) = (r_prev, r_cur) {
                if p > T::zero() {
                    let drop = (c / p).to_f64().unwrap_or(1.0);
                    let q_new = adapt_q(rule.q, drop, half);
                    if q_new != rule.q {
                        rule = build_contour(
                            interval,
                            config.quad.ecc,
                            config.quad.rule_kind,
                            q_new,
                            half,
                        )?;
                    }
                }
            }
        }
        r_prev = r_cur;
    }

    Ok(finish(store, trace, counters, status))
}

fn finish<T: Scalar>(
    store: LockedStore<T>,
    trace: Vec<IterationRecord>,
    counters: CostCounters,
    status: SolveStatus,
) -> SolveResult<T> {
    let mut order: Vec<usize> = (0..store.count()).collect();
    order.sort_by(|&i, &j| store.values[i].partial_cmp(&store.values[j]).unwrap());
    let eigenvalues: Vec<T> = order.iter().map(|&i| store.values[i]).collect();
    let residuals: Vec<T> = order.iter().map(|&i| store.residuals[i]).collect();
    let eigenvectors = BlockVectors::<T>::from_fn(store.vectors.nrows(), order.len(), |r, c| {
        store.vectors[(r, order[c])]
    });
    SolveResult {
        eigenvalues,
        eigenvectors,
        residuals,
        trace,
        counters,
        status,
    }
}

#[allow(clippy::too_many_arguments)]
fn make_record<T: Scalar>(
    iteration: usize,
    mode: IterationMode,
    s: usize,
    q: usize,
    rhs_1: usize,
    rank: usize,
    ritz: &RitzSet<T>,
    store: &LockedStore<T>,
    counters: &CostCounters,
    n_expect: usize,
) -> IterationRecord {
    let mut residuals: Vec<f64> = store
        .residuals
        .iter()
        .chain(ritz.residual.iter())
        .map(|r| r.to_f64().unwrap_or(f64::NAN))
        .collect();
    residuals.sort_by(|a, b| a.partial_cmp(b).unwrap());
    residuals.truncate(n_expect.max(1));
    let (res_min, res_avg, res_max) = if residuals.is_empty() {
        (f64::NAN, f64::NAN, f64::NAN)
    } else {
        let sum: f64 = residuals.iter().sum();
        (
            residuals[0],
            sum / residuals.len() as f64,
            *residuals.last().unwrap(),
        )
    };
    IterationRecord {
        iteration,
        mode,
        s,
        q,
        rhs_1,
        rank,
        res_min,
        res_avg,
        res_max,
        locked: store.count(),
        rhs_ovl: counters.rhs_ovl,
        bls_ovl: counters.bls_ovl,
    }
}

fn gaussian_block<T: Scalar>(n: usize, p: usize, rng: &mut ChaCha8Rng) -> BlockVectors<T> {
    let mut block = BlockVectors::<T>::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            let v: f64 = StandardNormal.sample(rng);
            block[(i, j)] = Complex::new(real(v), T::zero());
        }
    }
    block
}

fn deflate_against<T: Scalar>(
    pencil: &crate::linalg::HermitianPencil<T>,
    store: &LockedStore<T>,
    mut block: BlockVectors<T>,
) -> BlockVectors<T> {
    if store.count() == 0 {
        return block;
    }
    for c in 0..block.ncols() {
        let mut v: nalgebra::DVector<C<T>> = block.column(c).into_owned();
        for _ in 0..2 {
            for j in 0..store.count() {
                let u = store.vectors.column(j);
                let bv = pencil.apply_b(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()));
                let h = (u.adjoint() * bv.column(0))[(0, 0)];
                v.zip_apply(&u, |vi, ui| *vi -= h * ui);
            }
        }
        block.set_column(c, &v);
    }
    block
}

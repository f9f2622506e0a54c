//! Elliptical contours, quadrature rules and the rational filters they induce.

use crate::error::{Result, SolverError};
use crate::scalar::{real, Scalar, C};
use num_complex::Complex;

/// Real search interval on the eigenvalue axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T: Scalar> {
    pub lo: T,
    pub hi: T,
}

impl<T: Scalar> Interval<T> {
    pub fn new(lo: T, hi: T) -> Result<Self> {
        if !lo.is_finite() || !hi.is_finite() || lo >= hi {
            return Err(SolverError::InvalidInterval {
                lo: lo.to_f64().unwrap_or(f64::NAN),
                hi: hi.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { lo, hi })
    }

    pub fn center(&self) -> T {
        (self.lo + self.hi) * real(0.5)
    }

    pub fn radius(&self) -> T {
        (self.hi - self.lo) * real(0.5)
    }

    /// Closed-interval membership; boundary values count as inside.
    pub fn contains(&self, lambda: T) -> bool {
        self.lo <= lambda && lambda <= self.hi
    }
}

/// Quadrature rule family used to discretize the contour integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RuleKind {
    GaussLegendre,
    Trapezoidal,
}

impl std::fmt::Display for RuleKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RuleKind::GaussLegendre => write!(f, "gauss_legendre"),
            RuleKind::Trapezoidal => write!(f, "trapezoidal"),
        }
    }
}

/// Discretized elliptical contour: nodes `z_j` and coefficients `omega_j`
/// such that `sum_j omega_j / (z_j - lambda)` approximates the indicator of
/// the contour interior.
///
/// With `half_contour` only the nodes in the upper half-plane are stored;
/// the conjugate contributions are completed analytically wherever the rule
/// is consumed.
#[derive(Debug, Clone)]
pub struct ContourRule<T: Scalar> {
    pub center: T,
    pub radius_real: T,
    pub ecc: T,
    pub rule_kind: RuleKind,
    /// Total node count on the full contour.
    pub q: usize,
    pub nodes: Vec<C<T>>,
    pub coeffs: Vec<C<T>>,
    pub half_contour: bool,
}

impl<T: Scalar> ContourRule<T> {
    /// Number of block linear systems actually solved per subspace build.
    pub fn stored_nodes(&self) -> usize {
        self.nodes.len()
    }
}

/// Nodes and weights of the `q`-point Gauss-Legendre rule on `[-1, 1]`,
/// ascending in the node. Weights sum to 2.
pub fn gauss_legendre_rule<T: Scalar>(q: usize) -> Vec<(T, T)> {
    assert!(q >= 1, "gauss_legendre_rule requires q >= 1");
    let mut out = Vec::with_capacity(q);
    let tol = T::default_epsilon() * real(4.0);
    // Roots come in +/- pairs; Newton from the Chebyshev-like initial guess.
    for i in 0..(q + 1) / 2 {
        let guess = (std::f64::consts::PI * (i as f64 + 0.75) / (q as f64 + 0.5)).cos();
        let mut x: T = real(guess);
        let mut dp = T::one();
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= tol {
                let (_, d2) = legendre_with_derivative(q, x);
                dp = d2;
                break;
            }
        }
        let w = real::<T>(2.0) / ((T::one() - x * x) * dp * dp);
        out.push((-x, w));
    }
    // Mirror onto the positive half; odd q keeps the single root at 0.
    for i in (0..q / 2).rev() {
        let (x, w) = out[i];
        out.push((-x, w));
    }
    if q % 2 == 1 {
        let mid = q / 2;
        out[mid].0 = T::zero();
    }
    out
}

/// Value and derivative of the Legendre polynomial `P_q` at `x`
/// (three-term recurrence).
fn legendre_with_derivative<T: Scalar>(q: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if q == 0 {
        return (p0, T::zero());
    }
    for k in 2..=q {
        let kf: T = real(k as f64);
        let p2 = ((real::<T>(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = real::<T>(q as f64) * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

/// Build a quadrature rule on the ellipse
/// `phi(t) = c + r (cos t + i ecc sin t)` around the interval.
///
/// Coefficients absorb `phi'(t_j)`, the parameter weight, and the
/// `1/(2 pi i)` prefactor. Trapezoidal nodes use the half-step offset
/// `t_j = 2 pi (j + 1/2) / q` so no node is real; Gauss-Legendre maps the
/// `[-1, 1]` rule onto each half-arc `[0, pi]` and `[pi, 2 pi]`.
pub fn build_contour<T: Scalar>(
    interval: Interval<T>,
    ecc: T,
    rule_kind: RuleKind,
    q: usize,
    half_contour: bool,
) -> Result<ContourRule<T>> {
    if ecc <= T::zero() || ecc > T::one() {
        return Err(SolverError::InvalidContour(format!(
            "eccentricity must lie in (0, 1], got {}",
            ecc.to_f64().unwrap_or(f64::NAN)
        )));
    }
    if q < 2 {
        return Err(SolverError::InvalidContour(format!(
            "need at least 2 quadrature nodes, got {q}"
        )));
    }
    if half_contour && q % 2 != 0 {
        return Err(SolverError::InvalidContour(format!(
            "half-contour symmetry requires even q, got {q}"
        )));
    }
    if rule_kind == RuleKind::GaussLegendre && q % 2 != 0 {
        // The per-half-arc mapping needs q/2 nodes per arc; an odd count
        // would put a node on the real axis.
        return Err(SolverError::InvalidContour(format!(
            "Gauss-Legendre contour rule requires even q, got {q}"
        )));
    }

    let c = interval.center();
    let r = interval.radius();
    let two_pi = T::two_pi();
    let phi = |t: T| -> C<T> { Complex::new(c + r * t.cos(), r * ecc * t.sin()) };
    let dphi = |t: T| -> C<T> { Complex::new(-r * t.sin(), r * ecc * t.cos()) };

    let mut params: Vec<(T, T)> = Vec::with_capacity(q);
    match rule_kind {
        RuleKind::Trapezoidal => {
            let w = two_pi / real(q as f64);
            for j in 0..q {
                let t = two_pi * real::<T>(j as f64 + 0.5) / real(q as f64);
                params.push((t, w));
            }
        }
        RuleKind::GaussLegendre => {
            let base = gauss_legendre_rule::<T>(q / 2);
            let half = T::pi();
            for &(x, w) in &base {
                // upper arc t in [0, pi]
                params.push((half * (x + T::one()) * real(0.5), w * half * real(0.5)));
            }
            for &(x, w) in &base {
                // lower arc t in [pi, 2 pi]
                params.push((
                    half * (x + T::one()) * real::<T>(0.5) + half,
                    w * half * real(0.5),
                ));
            }
        }
    }

    let mut nodes = Vec::new();
    let mut coeffs = Vec::new();
    for (t, w) in params {
        let z = phi(t);
        if half_contour && z.im <= T::zero() {
            continue;
        }
        nodes.push(z);
        // omega_j = w_j * phi'(t_j) / (2 pi i)
        let denom = Complex::new(T::zero(), two_pi);
        coeffs.push(dphi(t) * Complex::new(w, T::zero()) / denom);
    }
    debug_assert_eq!(nodes.len(), if half_contour { q / 2 } else { q });

    Ok(ContourRule {
        center: c,
        radius_real: r,
        ecc,
        rule_kind,
        q,
        nodes,
        coeffs,
        half_contour,
    })
}

/// Evaluate the rational filter `f_k(lambda) = sum_j omega_j z_j^k / (z_j - lambda)`
/// implied by the rule, completing conjugate pairs for half-contour rules.
pub fn filter_value<T: Scalar>(rule: &ContourRule<T>, k: usize, lambda: C<T>) -> Result<C<T>> {
    let mut acc = Complex::new(T::zero(), T::zero());
    for (z, w) in rule.nodes.iter().zip(&rule.coeffs) {
        let zk = z.powu(k as u32);
        let d = z - lambda;
        if d.norm_sqr() == T::zero() {
            return Err(SolverError::NodeCollision);
        }
        acc += *w * zk / d;
        if rule.half_contour {
            let dz = z.conj() - lambda;
            if dz.norm_sqr() == T::zero() {
                return Err(SolverError::NodeCollision);
            }
            acc += (*w * zk).conj() / dz;
        }
    }
    Ok(acc)
}

/// Adapt the node count from the residual drop rate
/// `drop = r_SNC(i) / r_SNC(i-1)`.
///
/// No change below `10^-1.5`; growth by `sqrt(1.5)` (at least one node) up to
/// `10^-0.75`; growth by `1.5` (at least one node) beyond. Never shrinks.
/// Rounding is half-up; the result is forced even when half-contour symmetry
/// is active.
pub fn adapt_q(q: usize, drop: f64, force_even: bool) -> usize {
    assert!(drop > 0.0, "drop rate must be positive");
    let slow = 10f64.powf(-0.75);
    let fast = 10f64.powf(-1.5);
    let grown = if drop <= fast {
        q
    } else {
        let factor = if drop <= slow { 1.5f64.sqrt() } else { 1.5 };
        let rounded = (q as f64 * factor + 0.5).floor() as usize;
        rounded.max(q + 1)
    };
    if force_even && grown % 2 != 0 {
        grown + 1
    } else {
        grown
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn unit_interval() -> Interval<f64> {
        Interval::new(-1.0, 1.0).unwrap()
    }

    #[test]
    fn interval_rejects_degenerate() {
        assert!(Interval::new(1.0, 1.0).is_err());
        assert!(Interval::new(2.0, 1.0).is_err());
        assert!(Interval::new(f64::NAN, 1.0).is_err());
        assert!(Interval::new(0.0, f64::INFINITY).is_err());
    }

    #[test]
    fn gauss_legendre_low_orders() {
        let r1 = gauss_legendre_rule::<f64>(1);
        assert_eq!(r1.len(), 1);
        assert_relative_eq!(r1[0].0, 0.0, epsilon = 1e-15);
        assert_relative_eq!(r1[0].1, 2.0, epsilon = 1e-15);

        let r2 = gauss_legendre_rule::<f64>(2);
        assert_relative_eq!(r2[0].0, -0.5773502691896258, epsilon = 1e-14);
        assert_relative_eq!(r2[1].0, 0.5773502691896258, epsilon = 1e-14);
        assert_relative_eq!(r2[0].1, 1.0, epsilon = 1e-14);
        assert_relative_eq!(r2[1].1, 1.0, epsilon = 1e-14);

        let r3 = gauss_legendre_rule::<f64>(3);
        assert_relative_eq!(r3[0].0, -0.7745966692414834, epsilon = 1e-14);
        assert_relative_eq!(r3[1].0, 0.0, epsilon = 1e-14);
        assert_relative_eq!(r3[2].0, 0.7745966692414834, epsilon = 1e-14);
        assert_relative_eq!(r3[0].1, 5.0 / 9.0, epsilon = 1e-14);
        assert_relative_eq!(r3[1].1, 8.0 / 9.0, epsilon = 1e-14);
    }

    #[test]
    fn gauss_legendre_weight_sum_and_exactness() {
        for q in [4usize, 7, 16, 33] {
            let rule = gauss_legendre_rule::<f64>(q);
            let sum: f64 = rule.iter().map(|&(_, w)| w).sum();
            assert_relative_eq!(sum, 2.0, epsilon = 1e-13);
            // exact for x^(2q-1) (odd, integral 0) and x^(2q-2)
            let p = 2 * q - 2;
            let int: f64 = rule.iter().map(|&(x, w)| w * x.powi(p as i32)).sum();
            assert_relative_eq!(int, 2.0 / (p as f64 + 1.0), max_relative = 1e-12);
        }
    }

    #[test]
    fn trapezoid_circle_q4_nodes_and_coeffs() {
        let rule = build_contour(unit_interval(), 1.0, RuleKind::Trapezoidal, 4, false).unwrap();
        let expected: Vec<Complex64> = [1.0, 3.0, 5.0, 7.0]
            .iter()
            .map(|m| Complex64::from_polar(1.0, m * std::f64::consts::PI / 4.0))
            .collect();
        for (z, e) in rule.nodes.iter().zip(&expected) {
            assert!((z - e).norm() < 1e-14);
        }
        for (z, w) in rule.nodes.iter().zip(&rule.coeffs) {
            assert!((w - z / 4.0).norm() < 1e-14);
        }
    }

    #[test]
    fn half_contour_stores_upper_half() {
        for kind in [RuleKind::GaussLegendre, RuleKind::Trapezoidal] {
            let rule = build_contour(unit_interval(), 1.0, kind, 16, true).unwrap();
            assert_eq!(rule.stored_nodes(), 8);
            assert!(rule.nodes.iter().all(|z| z.im > 0.0));
        }
    }

    #[test]
    fn ellipse_geometry_bounds() {
        let iv = Interval::new(0.0f64, 2.0).unwrap();
        let rule = build_contour(iv, 0.1, RuleKind::GaussLegendre, 16, false).unwrap();
        for z in &rule.nodes {
            assert!((z.re - 1.0).abs() <= 1.0 + 1e-14);
            assert!(z.im.abs() <= 0.1 + 1e-14);
            assert!(z.im != 0.0);
        }
    }

    #[test]
    fn build_contour_rejects_bad_parameters() {
        let iv = unit_interval();
        assert!(build_contour(iv, 0.0, RuleKind::Trapezoidal, 8, false).is_err());
        assert!(build_contour(iv, 1.5, RuleKind::Trapezoidal, 8, false).is_err());
        assert!(build_contour(iv, 0.5, RuleKind::Trapezoidal, 7, true).is_err());
        assert!(build_contour(iv, 0.5, RuleKind::Trapezoidal, 1, false).is_err());
    }

    /// Offset trapezoid on the unit circle: nodes are the roots of
    /// `z^q = -1`, giving the closed form `f_0(lambda) = 1 / (1 + lambda^q)`.
    fn trapezoid_closed_form(lambda: Complex64, q: usize) -> Complex64 {
        Complex64::new(1.0, 0.0) / (Complex64::new(1.0, 0.0) + lambda.powu(q as u32))
    }

    #[test]
    fn trapezoid_filter_closed_form_inside_and_outside() {
        for q in [4usize, 8, 16] {
            let rule =
                build_contour(unit_interval(), 1.0, RuleKind::Trapezoidal, q, false).unwrap();
            let f0 = filter_value(&rule, 0, Complex64::new(0.0, 0.0)).unwrap();
            assert!((f0 - 1.0).norm() < 1e-14, "q={q}: f_0(0) = {f0}");
        }
        let rule = build_contour(unit_interval(), 1.0, RuleKind::Trapezoidal, 8, false).unwrap();
        let f = filter_value(&rule, 0, Complex64::new(2.0, 0.0)).unwrap();
        assert!((f - trapezoid_closed_form(Complex64::new(2.0, 0.0), 8)).norm() < 1e-15);
        assert!((f - 1.0 / 257.0).norm() < 1e-15);
        // decay far outside (closed form 1/(1 + 10^8), roundoff-limited)
        let far = filter_value(&rule, 0, Complex64::new(10.0, 0.0)).unwrap();
        assert!((far - trapezoid_closed_form(Complex64::new(10.0, 0.0), 8)).norm() < 1e-14);
        assert!(far.norm() < 1.1e-8);
    }

    #[test]
    fn filter_node_collision_is_an_error() {
        let rule = build_contour(unit_interval(), 1.0, RuleKind::Trapezoidal, 4, false).unwrap();
        let z = rule.nodes[0];
        assert!(matches!(
            filter_value(&rule, 0, z),
            Err(SolverError::NodeCollision)
        ));
    }

    #[test]
    fn half_and_full_agree_on_the_real_axis() {
        for kind in [RuleKind::GaussLegendre, RuleKind::Trapezoidal] {
            let full = build_contour(unit_interval(), 0.3, kind, 16, false).unwrap();
            let half = build_contour(unit_interval(), 0.3, kind, 16, true).unwrap();
            for k in 0..4 {
                for i in 0..40 {
                    let lam = Complex64::new(-3.0 + 0.15 * i as f64, 0.0);
                    let a = filter_value(&full, k, lam).unwrap();
                    let b = filter_value(&half, k, lam).unwrap();
                    assert!((a - b).norm() <= 1e-13 * (1.0 + a.norm()));
                }
            }
        }
    }

    #[test]
    fn gauss_legendre_filter_sharpens_with_q() {
        let samples = [-0.8, -0.3, 0.0, 0.4, 0.7];
        for &x in &samples {
            let mut prev = f64::INFINITY;
            for q in [8usize, 16, 32] {
                let rule =
                    build_contour(unit_interval(), 1.0, RuleKind::GaussLegendre, q, false).unwrap();
                let f = filter_value(&rule, 0, Complex64::new(x, 0.0)).unwrap();
                let err = (f - 1.0).norm();
                // allow for the roundoff floor once the error bottoms out
                assert!(err <= prev.max(1e-15), "x={x} q={q}: {err} > {prev}");
                prev = err;
            }
        }
    }

    #[test]
    fn adapt_q_worked_examples() {
        assert_eq!(adapt_q(16, 1e-2, false), 16);
        assert_eq!(adapt_q(16, 0.1, false), 20);
        assert_eq!(adapt_q(16, 0.5, false), 24);
    }

    #[test]
    fn adapt_q_forces_even_and_grows_by_at_least_one() {
        assert_eq!(adapt_q(2, 0.1, false), 3);
        assert_eq!(adapt_q(2, 0.1, true), 4);
        assert_eq!(adapt_q(3, 0.9, true), 6); // round(4.5) = 5 -> even 6
    }
}

//! Quadrature machinery for expectations under the standard Gaussian measure.
//!
//! Three layers:
//! - Gauss–Hermite rules calibrated to `N(0,1)` (nodes from the Jacobi-matrix
//!   Sturm bisection, weights from the Christoffel function), tensorized over
//!   reduced subspaces;
//! - exact segment integrals `int exp(-p u^2 + q u + s) du` and their radial
//!   counterparts, written against `erfcx` so far tails neither overflow nor
//!   cancel;
//! - a plain adaptive Simpson rule for bounded smooth panels.

use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuadError {
    #[error("quadrature did not reach the requested tolerance (estimate {estimate}, error {error})")]
    NonConvergence { estimate: f64, error: f64 },
    #[error("invalid quadrature spec: {0}")]
    InvalidSpec(String),
}

/// Integration scheme for reduced-space expectations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Tensor Gauss–Hermite at `order` nodes per axis, cross-checked against
    /// `3*order/2` nodes, falling back to the polar route on disagreement.
    GaussHermiteTensor,
    /// Closed-form radial integration plus adaptive angular quadrature.
    AdaptivePolar,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub scheme: Scheme,
    pub order: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            scheme: Scheme::GaussHermiteTensor,
            order: 64,
            abs_tol: 1e-8,
            rel_tol: 1e-6,
        }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<(), QuadError> {
        if self.order < 8 {
            return Err(QuadError::InvalidSpec(format!(
                "order must be >= 8, got {}",
                self.order
            )));
        }
        if !(self.abs_tol > 0.0) || !(self.rel_tol > 0.0) {
            return Err(QuadError::InvalidSpec(
                "tolerances must be positive".into(),
            ));
        }
        Ok(())
    }

    pub fn polar(self) -> Self {
        Self {
            scheme: Scheme::AdaptivePolar,
            ..self
        }
    }

    /// Looser tolerances for large Monte-Carlo sweeps where the downstream
    /// comparison has orders of magnitude more slack.
    pub fn desk_scale() -> Self {
        Self {
            scheme: Scheme::AdaptivePolar,
            order: 64,
            abs_tol: 1e-7,
            rel_tol: 1e-5,
        }
    }
}

/// Gauss–Hermite rule calibrated to the standard normal measure:
/// `E[f(Z)] ~= sum_i weights[i] * f(nodes[i])`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussHermite {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "order must be positive");
        let nodes = hermite_zeros(order);
        let weights = nodes.iter().map(|&x| christoffel_weight(order, x)).collect();
        Self { nodes, weights }
    }

    pub fn expect(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn expect_2d(&self, f: impl Fn(f64, f64) -> f64) -> f64 {
        let mut total = 0.0;
        for (&x, &wx) in self.nodes.iter().zip(&self.weights) {
            let mut row = 0.0;
            for (&y, &wy) in self.nodes.iter().zip(&self.weights) {
                row += wy * f(x, y);
            }
            total += wx * row;
        }
        total
    }

    /// Tensor rule over `dim` axes; `f` receives one point per call.
    pub fn expect_nd(&self, dim: usize, f: impl Fn(&[f64]) -> f64) -> f64 {
        let n = self.nodes.len();
        let mut idx = vec![0usize; dim];
        let mut point = vec![0.0; dim];
        let mut total = 0.0;
        loop {
            let mut w = 1.0;
            for (k, &i) in idx.iter().enumerate() {
                point[k] = self.nodes[i];
                w *= self.weights[i];
            }
            total += w * f(&point);
            let mut k = 0;
            loop {
                if k == dim {
                    return total;
                }
                idx[k] += 1;
                if idx[k] < n {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
        }
    }
}

/// Shared cache: the rules are pure data and cheap to keep around.
pub fn hermite_rule(order: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("hermite cache poisoned");
    guard
        .entry(order)
        .or_insert_with(|| Arc::new(GaussHermite::new(order)))
        .clone()
}

/// Orthonormal probabilists' Hermite values `p_0(x), ..., p_{n}(x)`.
fn hermite_ortho(n: usize, x: f64) -> Vec<f64> {
    let mut p = Vec::with_capacity(n + 1);
    p.push(1.0);
    if n == 0 {
        return p;
    }
    p.push(x);
    for k in 1..n {
        let next = (x * p[k] - (k as f64).sqrt() * p[k - 1]) / ((k + 1) as f64).sqrt();
        p.push(next);
    }
    p
}

/// Sturm count: number of eigenvalues of the Jacobi matrix (diag 0,
/// off-diag sqrt(k)) strictly below `lambda`.
fn sturm_count(order: usize, lambda: f64) -> usize {
    let mut count = 0;
    let mut d = -lambda;
    if d < 0.0 {
        count += 1;
    }
    for k in 1..order {
        let beta2 = k as f64;
        d = -lambda - beta2 / if d != 0.0 { d } else { 1e-300 };
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

fn hermite_zeros(order: usize) -> Vec<f64> {
    // All eigenvalues lie within the Gershgorin bound.
    let bound = 2.0 * (order as f64).sqrt() + 1.0;
    let mut zeros = Vec::with_capacity(order);
    for i in 0..order {
        let mut lo = -bound;
        let mut hi = bound;
        // Bisect until the i-th eigenvalue is isolated to ~1e-15 absolute.
        for _ in 0..90 {
            let mid = 0.5 * (lo + hi);
            if sturm_count(order, mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        zeros.push(0.5 * (lo + hi));
    }
    // Enforce exact symmetry of the rule.
    for i in 0..order / 2 {
        let s = 0.5 * (zeros[order - 1 - i] - zeros[i]);
        zeros[i] = -s;
        zeros[order - 1 - i] = s;
    }
    if order % 2 == 1 {
        zeros[order / 2] = 0.0;
    }
    zeros
}

fn christoffel_weight(order: usize, x: f64) -> f64 {
    let p = hermite_ortho(order - 1, x);
    1.0 / p.iter().map(|v| v * v).sum::<f64>()
}

/// Scaled complementary error function `exp(x^2) erfc(x)` for `x >= 0`.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0);
    if x < 25.0 {
        libm::exp(x * x) * libm::erfc(x)
    } else {
        // Asymptotic series; relative error below 1e-12 for x >= 25.
        let ix2 = 1.0 / (x * x);
        (1.0 - 0.5 * ix2 + 0.75 * ix2 * ix2 - 1.875 * ix2 * ix2 * ix2)
            / (x * std::f64::consts::PI.sqrt())
    }
}

const SQRT_PI: f64 = 1.772_453_850_905_516;

/// `int_l^r exp(-p u^2 + q u + s) du` with `p > 0`; `l`/`r` may be infinite.
/// Written so that segments far in either tail neither overflow nor cancel.
fn line_segment_closed(p: f64, q: f64, s: f64, l: f64, r: f64) -> f64 {
    debug_assert!(p > 0.0);
    let sp = p.sqrt();
    let m = q / (2.0 * p);
    let peak = s + q * q / (4.0 * p);
    let alpha = if l.is_finite() {
        sp * (l - m)
    } else {
        f64::NEG_INFINITY
    };
    let beta = if r.is_finite() {
        sp * (r - m)
    } else {
        f64::INFINITY
    };
    let half_width = 0.5 * SQRT_PI / sp;
    if alpha >= 0.0 {
        // Entire segment right of the peak: difference of upper tails.
        let el = if l.is_finite() { -p * l * l + q * l + s } else { f64::NEG_INFINITY };
        let er = if r.is_finite() { -p * r * r + q * r + s } else { f64::NEG_INFINITY };
        let term_l = if el == f64::NEG_INFINITY { 0.0 } else { libm::exp(el) * erfcx(alpha) };
        let term_r = if er == f64::NEG_INFINITY { 0.0 } else { libm::exp(er) * erfcx(beta) };
        half_width * (term_l - term_r).max(0.0)
    } else if beta <= 0.0 {
        line_segment_closed(p, -q, s, -r, -l)
    } else {
        // Peak interior: if exp(peak) overflows the integral is genuinely huge.
        half_width * libm::exp(peak) * (libm::erf(beta) - libm::erf(alpha))
    }
}

/// `int_l^r exp(-p u^2 + q u + s) du` for arbitrary `p`.
///
/// Unbounded non-decaying segments return infinity; bounded segments with
/// `p <= 0` are integrated numerically (smooth integrand).
pub fn gauss_line_segment(p: f64, q: f64, s: f64, l: f64, r: f64) -> f64 {
    if r <= l {
        return 0.0;
    }
    if p > 0.0 {
        return line_segment_closed(p, q, s, l, r);
    }
    if !l.is_finite() || !r.is_finite() {
        return f64::INFINITY;
    }
    simpson_unbounded_exp(|u| -p * u * u + q * u + s, l, r)
}

/// `int_{r0}^{r1} u exp(-p u^2 + q u + s) du` on `0 <= r0 <= r1 <= inf`.
pub fn gauss_radial_segment(p: f64, q: f64, s: f64, r0: f64, r1: f64) -> f64 {
    if r1 <= r0 {
        return 0.0;
    }
    debug_assert!(r0 >= 0.0);
    if p > 0.0 {
        let expo = |u: f64| -p * u * u + q * u + s;
        let e0 = libm::exp(expo(r0));
        let e1 = if r1.is_finite() { libm::exp(expo(r1)) } else { 0.0 };
        let boundary = (e0 - e1) / (2.0 * p);
        let drift = q / (2.0 * p) * line_segment_closed(p, q, s, r0, r1);
        return (boundary + drift).max(0.0);
    }
    if !r1.is_finite() {
        return f64::INFINITY;
    }
    simpson_unbounded_exp(|u| u.ln() + (-p * u * u + q * u + s), r0.max(0.0), r1)
}

/// Numeric fallback for bounded segments whose integrand is exp(expo);
/// tolerant of very large exponents (saturates to infinity). This runs in
/// the inner loop of near-divergence moment evaluations, so it uses a
/// composite Simpson rule with capped refinement instead of open-ended
/// adaptivity.
fn simpson_unbounded_exp(expo: impl Fn(f64) -> f64, l: f64, r: f64) -> f64 {
    let f = |u: f64| {
        let e = expo(u);
        if e > 700.0 {
            f64::INFINITY
        } else {
            libm::exp(e)
        }
    };
    let composite = |n: usize| -> f64 {
        let h = (r - l) / n as f64;
        let mut acc = f(l) + f(r);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            acc += w * f(l + i as f64 * h);
        }
        acc * h / 3.0
    };
    let mut prev = composite(16);
    for n in [32, 64, 128, 256] {
        let next = composite(n);
        if !next.is_finite() {
            return f64::INFINITY;
        }
        if (next - prev).abs() <= 1e-9 * next.abs().max(1e-300) {
            return next;
        }
        prev = next;
    }
    prev
}

/// `int_{r0}^{r1} (c2 u^2 + c1 u + c0) u exp(-u^2/2) du` on `[0, inf]`,
/// via the closed-form incomplete Gaussian moments.
pub fn polynomial_radial_segment(c2: f64, c1: f64, c0: f64, r0: f64, r1: f64) -> f64 {
    if r1 <= r0 {
        return 0.0;
    }
    let e0 = libm::exp(-0.5 * r0 * r0);
    let e1 = if r1.is_finite() { libm::exp(-0.5 * r1 * r1) } else { 0.0 };
    let g1 = e0 - e1;
    let g3 = (r0 * r0 + 2.0) * e0 - if r1.is_finite() { (r1 * r1 + 2.0) * e1 } else { 0.0 };
    let sqrt_half_pi = (std::f64::consts::PI / 2.0).sqrt();
    let erf_gap = if r1.is_finite() {
        libm::erfc(r0 / std::f64::consts::SQRT_2) - libm::erfc(r1 / std::f64::consts::SQRT_2)
    } else {
        libm::erfc(r0 / std::f64::consts::SQRT_2)
    };
    let g2 = r0 * e0 - if r1.is_finite() { r1 * e1 } else { 0.0 } + sqrt_half_pi * erf_gap;
    c2 * g3 + c1 * g2 + c0 * g1
}

/// Adaptive Simpson on a bounded interval; errors when the tolerance was not
/// reached within the (generous) default evaluation budget.
pub fn adaptive_simpson(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
) -> Result<f64, QuadError> {
    let (v, exhausted) = adaptive_simpson_budgeted(f, a, b, abs_tol, rel_tol, max_depth, 4_000_000);
    if exhausted && v.is_finite() {
        return Err(QuadError::NonConvergence {
            estimate: v,
            error: abs_tol.max(rel_tol * v.abs()),
        });
    }
    Ok(v)
}

/// Adaptive Simpson with an explicit evaluation budget; returns its best
/// estimate and whether the budget (or depth) ran out before the tolerance
/// was met. Integrands with near-singular spikes stay time-bounded this way.
pub fn adaptive_simpson_budgeted(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
    max_depth: u32,
    max_evals: usize,
) -> (f64, bool) {
    if b <= a {
        return (0.0, false);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget = max_evals as isize;
    let mut out_of_budget = false;
    let v = simpson_rec(
        f,
        a,
        b,
        fa,
        fm,
        fb,
        whole,
        abs_tol,
        rel_tol,
        max_depth,
        &mut budget,
        &mut out_of_budget,
    );
    (v, out_of_budget)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    abs_tol: f64,
    rel_tol: f64,
    depth: u32,
    budget: &mut isize,
    out_of_budget: &mut bool,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    *budget -= 2;
    if !(fa.is_finite() && fm.is_finite() && fb.is_finite() && flm.is_finite() && frm.is_finite()) {
        return f64::INFINITY;
    }
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    let tol = abs_tol.max(rel_tol * (left + right).abs());
    if delta.abs() <= 15.0 * tol || (b - a) < 1e-14 {
        return left + right + delta / 15.0;
    }
    if depth == 0 || *budget <= 0 {
        *out_of_budget = true;
        return left + right + delta / 15.0;
    }
    simpson_rec(
        f, a, m, fa, flm, fm, left, abs_tol / 2.0, rel_tol, depth - 1, budget, out_of_budget,
    ) + simpson_rec(
        f, m, b, fm, frm, fb, right, abs_tol / 2.0, rel_tol, depth - 1, budget, out_of_budget,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_rule_reproduces_gaussian_moments() {
        for order in [8, 17, 64, 96] {
            let rule = GaussHermite::new(order);
            let mass: f64 = rule.weights.iter().sum();
            assert!((mass - 1.0).abs() < 1e-12, "order {order}: mass {mass}");
            // E[z^k] for k = 2,4,6,8: 1, 3, 15, 105.
            for (k, expect) in [(2, 1.0), (4, 3.0), (6, 15.0), (8, 105.0)] {
                let got = rule.expect(|z| z.powi(k));
                assert!(
                    (got - expect).abs() < 1e-9 * expect,
                    "order {order}, moment {k}: {got} vs {expect}"
                );
            }
            let odd = rule.expect(|z| z.powi(3));
            assert!(odd.abs() < 1e-12);
        }
    }

    #[test]
    fn hermite_rule_2d_product_moment() {
        let rule = GaussHermite::new(32);
        let got = rule.expect_2d(|x, y| x * x * y * y);
        assert!((got - 1.0).abs() < 1e-10);
        let got3 = rule.expect_nd(3, |p| p[0] * p[0] * p[1] * p[1] * p[2] * p[2]);
        assert!((got3 - 1.0).abs() < 1e-9);
    }

    // Reference integrator used only to check the closed forms.
    fn brute(f: impl Fn(f64) -> f64, l: f64, r: f64) -> f64 {
        let n = 400_000;
        let h = (r - l) / n as f64;
        let mut acc = 0.5 * (f(l) + f(r));
        for i in 1..n {
            acc += f(l + i as f64 * h);
        }
        acc * h
    }

    #[test]
    fn line_segment_matches_brute_force() {
        let cases = [
            (0.5, 0.0, 0.0, -1.0, 2.0),
            (0.3, 1.2, -0.4, 0.5, 6.0),
            (2.0, -3.0, 0.7, -4.0, -1.0),
            (0.45, 0.2, 0.0, -30.0, 30.0),
        ];
        for (p, q, s, l, r) in cases {
            let exact = gauss_line_segment(p, q, s, l, r);
            let num = brute(|u| libm::exp(-p * u * u + q * u + s), l, r);
            assert!(
                (exact - num).abs() <= 1e-8 * (1.0 + num.abs()),
                "case ({p},{q},{s},{l},{r}): {exact} vs {num}"
            );
        }
        // Far-tail segment: the naive erf difference would cancel to zero.
        let tail = gauss_line_segment(0.5, 0.0, 0.0, 10.0, 12.0);
        let num = brute(|u| libm::exp(-0.5 * u * u), 10.0, 12.0);
        assert!((tail - num).abs() <= 1e-8 * num);
        assert!(tail > 0.0);
    }

    #[test]
    fn line_segment_infinite_bounds() {
        let full = gauss_line_segment(0.5, 0.0, 0.0, f64::NEG_INFINITY, f64::INFINITY);
        assert!((full - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        let half = gauss_line_segment(0.5, 0.0, 0.0, 0.0, f64::INFINITY);
        assert!((half - (2.0 * std::f64::consts::PI).sqrt() / 2.0).abs() < 1e-12);
        assert!(gauss_line_segment(-0.1, 0.0, 0.0, 0.0, f64::INFINITY).is_infinite());
    }

    #[test]
    fn radial_segment_matches_brute_force() {
        let cases = [
            (0.5, 0.0, 0.0, 0.0, f64::INFINITY),
            (0.4, 0.8, -0.2, 0.5, 4.0),
            (1.5, -0.6, 0.3, 0.0, 2.5),
        ];
        for (p, q, s, r0, r1) in cases {
            let exact = gauss_radial_segment(p, q, s, r0, r1);
            let hi = if r1.is_finite() { r1 } else { 40.0 };
            let num = brute(|u| u * libm::exp(-p * u * u + q * u + s), r0, hi);
            assert!(
                (exact - num).abs() <= 1e-7 * (1.0 + num.abs()),
                "case ({p},{q},{s},{r0},{r1}): {exact} vs {num}"
            );
        }
    }

    #[test]
    fn polynomial_radial_matches_brute_force() {
        let exact = polynomial_radial_segment(1.0, -0.3, 0.2, 0.5, f64::INFINITY);
        let num = brute(
            |u| (u * u - 0.3 * u + 0.2) * u * libm::exp(-0.5 * u * u),
            0.5,
            40.0,
        );
        assert!((exact - num).abs() < 1e-8);
        // Full positive axis, pure quadratic: int r^3 e^{-r^2/2} = 2.
        let full = polynomial_radial_segment(1.0, 0.0, 0.0, 0.0, f64::INFINITY);
        assert!((full - 2.0).abs() < 1e-12);
    }

    #[test]
    fn adaptive_simpson_known_integral() {
        let v = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12, 1e-12, 40)
            .unwrap();
        assert!((v - 2.0).abs() < 1e-10);
    }

    #[test]
    fn erfcx_limits() {
        assert!((erfcx(0.0) - 1.0).abs() < 1e-15);
        for x in [0.5, 2.0, 10.0, 24.9, 25.1, 40.0] {
            let v = erfcx(x);
            // 1/((x + 1/x) sqrt(pi)) <= erfcx(x) <= 1/(x sqrt(pi)) for x > 0.
            assert!(v <= 1.0 / (x * SQRT_PI) * 1.0000001, "x={x}");
            assert!(v >= 1.0 / ((x + 1.0 / x) * SQRT_PI) * 0.9999999, "x={x}");
        }
    }
}

//! Entropy integrals and chaining functionals.
//!
//! Dudley's bound turns a covering-number profile into an upper bound on the
//! Talagrand functional `gamma_2`; the closed-form profile of the shallow
//! network class integrates to `4 n^{3/2} c_w sqrt(8 c_b + d + ln2/4)`.
//! For finite families the same machinery runs on measured distances: a
//! farthest-first traversal yields both a step-function entropy profile and
//! a concrete admissible sequence whose chaining sum upper-bounds `gamma_2`.

use crate::covering::covering_number_bound_log;
use crate::model::ParameterClass;
use crate::quad::QuadratureSpec;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChainingError {
    #[error("distance matrix must be square, symmetric, non-negative, with zero diagonal")]
    InvalidDistanceMatrix,
    #[error("deviation bound requires u >= 2, got {0}")]
    ConfidenceTooSmall(f64),
    #[error("entropy integration bracket did not reach tolerance (width {width})")]
    BracketTooWide { width: f64 },
}

/// `sqrt(2) / ((sqrt(2) - 1) sqrt(ln 2))`: converts an entropy integral into
/// a `gamma_2` bound.
pub fn dudley_constant() -> f64 {
    std::f64::consts::SQRT_2 / ((std::f64::consts::SQRT_2 - 1.0) * std::f64::consts::LN_2.sqrt())
}

/// `log N(eps)` as a function of the radius, together with the radius beyond
/// which the profile vanishes.
#[derive(Debug, Clone)]
pub struct EntropyProfile {
    kind: ProfileKind,
    pub support_limit: f64,
}

#[derive(Debug, Clone)]
enum ProfileKind {
    /// Closed-form covering bound of a network class.
    ShallowClass(ParameterClass),
    /// Step function from a finite family: `radii[s]` is the covering radius
    /// of the first `s + 1` points of a farthest-first traversal.
    Steps { radii: Vec<f64> },
    /// Constant `height` on `(0, width]`; test fixture.
    Rectangle { height: f64, width: f64 },
}

impl EntropyProfile {
    pub fn shallow_class(cls: &ParameterClass) -> Self {
        Self {
            kind: ProfileKind::ShallowClass(*cls),
            support_limit: 2.0 * cls.n as f64 * cls.c_w,
        }
    }

    pub fn rectangle(height: f64, width: f64) -> Self {
        Self {
            kind: ProfileKind::Rectangle { height, width },
            support_limit: width,
        }
    }

    /// Measured profile of a finite family: covering radii of the prefixes
    /// of a farthest-first traversal of its distance matrix.
    pub fn measured(dists: &DistanceMatrix) -> Self {
        let traversal = FarthestFirst::new(dists);
        Self {
            support_limit: traversal.radii.first().copied().unwrap_or(0.0),
            kind: ProfileKind::Steps {
                radii: traversal.radii,
            },
        }
    }

    pub fn log_covering(&self, eps: f64) -> f64 {
        match &self.kind {
            ProfileKind::ShallowClass(cls) => {
                if eps <= 0.0 {
                    f64::INFINITY
                } else {
                    covering_number_bound_log(cls, eps)
                }
            }
            ProfileKind::Steps { radii } => {
                // N(eps) = number of prefix points needed for radius <= eps.
                let s = radii.partition_point(|&r| r > eps) + 1;
                (s as f64).ln()
            }
            ProfileKind::Rectangle { height, width } => {
                if eps <= *width {
                    *height
                } else {
                    0.0
                }
            }
        }
    }
}

/// `int_0^support sqrt(max(log N(eps), 0)) d eps`, then times the Dudley
/// constant. Step profiles integrate exactly; continuous profiles use
/// monotone upper/lower Riemann bracketing on a geometrically refined grid
/// (log N is non-increasing), certified to the quadrature tolerance.
pub fn dudley_integral(
    profile: &EntropyProfile,
    quad: &QuadratureSpec,
) -> Result<f64, ChainingError> {
    Ok(dudley_constant() * entropy_integral(profile, quad)?)
}

/// The raw entropy integral without the Dudley constant.
pub fn entropy_integral(
    profile: &EntropyProfile,
    quad: &QuadratureSpec,
) -> Result<f64, ChainingError> {
    if let ProfileKind::Steps { radii } = &profile.kind {
        // Exact: N(eps) = s on [radii[s-1], radii[s-2]).
        let mut total = 0.0;
        for s in 2..=radii.len() {
            let hi = radii[s - 2];
            let lo = if s - 1 < radii.len() { radii[s - 1] } else { 0.0 };
            total += (s as f64).ln().sqrt() * (hi - lo).max(0.0);
        }
        return Ok(total);
    }
    let support = profile.support_limit;
    if support <= 0.0 {
        return Ok(0.0);
    }
    let h = |eps: f64| profile.log_covering(eps).max(0.0).sqrt();
    // Geometric blocks down to support * 2^-60; h is non-increasing, so each
    // block brackets between its endpoint Riemann sums.
    let blocks: Vec<(f64, f64)> = (0..60)
        .map(|j| {
            let hi = support * 0.5f64.powi(j);
            (hi * 0.5, hi)
        })
        .collect();
    let bracket = |k: usize, lo: f64, hi: f64| {
        let step = (hi - lo) / k as f64;
        let mut lo_sum = 0.0;
        let mut hi_sum = 0.0;
        for i in 0..k {
            lo_sum += h(lo + (i + 1) as f64 * step);
            hi_sum += h(lo + i as f64 * step);
        }
        (lo_sum * step, hi_sum * step)
    };
    // Coarse pass to size the tolerance, then per-block refinement with the
    // budget split in proportion to block width.
    let rough: f64 = blocks.iter().map(|&(lo, hi)| bracket(8, lo, hi).1).sum();
    let target = quad.abs_tol.max(quad.rel_tol * rough).max(1e-14);
    let mut lower_total = 0.0;
    let mut upper_total = 0.0;
    for &(lo, hi) in &blocks {
        let mut k = 8usize;
        let (mut lower, mut upper) = bracket(k, lo, hi);
        let block_target = 0.5 * target * (hi - lo) / support;
        while upper - lower > block_target && k < 1 << 20 {
            k *= 4;
            (lower, upper) = bracket(k, lo, hi);
        }
        lower_total += lower;
        upper_total += upper;
    }
    // Tail below the last block: int_0^a sqrt(C + ln(a/eps)) d eps
    // <= a (h(a) + 1).
    let a = support * 0.5f64.powi(60);
    upper_total += a * (h(a) + 1.0);
    let width = upper_total - lower_total;
    if width > 2.0 * target {
        return Err(ChainingError::BracketTooWide { width });
    }
    Ok(0.5 * (lower_total + upper_total))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormEntropy {
    /// `4 n^{3/2} c_w sqrt(8 c_b + d + ln2/4)`.
    pub integral_bound: f64,
    /// `8/((2 - sqrt2) sqrt(ln 2)) n^{3/2} c_w sqrt(8 c_b + d + ln2/4)`.
    pub gamma2_bound: f64,
}

/// Closed-form entropy integral and `gamma_2` bound of a network class; the
/// two agree through the Dudley constant to machine precision.
pub fn entropy_integral_closed_form(cls: &ParameterClass) -> ClosedFormEntropy {
    let n = cls.n as f64;
    let integral_bound = 4.0 * n.powf(1.5) * cls.c_w * cls.complexity_factor().sqrt();
    let direct = 8.0 / ((2.0 - std::f64::consts::SQRT_2) * std::f64::consts::LN_2.sqrt())
        * n.powf(1.5)
        * cls.c_w
        * cls.complexity_factor().sqrt();
    let via_constant = dudley_constant() * integral_bound;
    debug_assert!((direct - via_constant).abs() <= 1e-12 * direct);
    ClosedFormEntropy {
        integral_bound,
        gamma2_bound: via_constant,
    }
}

/// Symmetric pairwise distances with zero diagonal.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self, ChainingError> {
        if n == 0 || data.len() != n * n {
            return Err(ChainingError::InvalidDistanceMatrix);
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(ChainingError::InvalidDistanceMatrix);
            }
            for j in 0..n {
                let v = data[i * n + j];
                if !(v >= 0.0) || (v - data[j * n + i]).abs() > 1e-12 * v.abs().max(1.0) {
                    return Err(ChainingError::InvalidDistanceMatrix);
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Result<Self, ChainingError> {
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Self::new(n, data)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Farthest-first traversal starting from the (approximate) 1-center;
/// `radii[s]` is the covering radius of the first `s + 1` points.
struct FarthestFirst {
    order: Vec<usize>,
    radii: Vec<f64>,
}

impl FarthestFirst {
    fn new(d: &DistanceMatrix) -> Self {
        let n = d.len();
        // Best 1-center among the points.
        let center = (0..n)
            .min_by(|&a, &b| {
                let ra = (0..n).map(|j| d.get(a, j)).fold(0.0f64, f64::max);
                let rb = (0..n).map(|j| d.get(b, j)).fold(0.0f64, f64::max);
                ra.partial_cmp(&rb).unwrap()
            })
            .unwrap();
        let mut order = vec![center];
        let mut dist_to_set: Vec<f64> = (0..n).map(|j| d.get(center, j)).collect();
        let mut radii = Vec::with_capacity(n);
        for _ in 1..n {
            let (next, &radius) = dist_to_set
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                .unwrap();
            radii.push(radius);
            order.push(next);
            for (j, dist) in dist_to_set.iter_mut().enumerate() {
                *dist = dist.min(d.get(next, j));
            }
        }
        radii.push(dist_to_set.iter().copied().fold(0.0f64, f64::max));
        Self { order, radii }
    }
}

/// Admissible sequence: level `k` holds at most `2^(2^k)` point indices,
/// level 0 exactly one.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibleSequence {
    pub levels: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TalagrandBound {
    pub value: f64,
    pub sequence: AdmissibleSequence,
    /// Covering radius of each level set, for the independent check
    /// `value <= sum_k 2^{k/2} radius_k`.
    pub level_radii: Vec<f64>,
}

/// Greedy upper bound on the Talagrand functional of a finite metric space:
/// levels are farthest-first prefixes of sizes `min(2^(2^k), n)`, evaluated
/// as `sup_t sum_k 2^{k/2} d(t, T_k)`.
pub fn talagrand_upper_bound_finite(d: &DistanceMatrix) -> Result<TalagrandBound, ChainingError> {
    let n = d.len();
    let traversal = FarthestFirst::new(d);
    let mut levels: Vec<Vec<usize>> = Vec::new();
    let mut level_radii = Vec::new();
    let mut size = 1usize;
    let mut k = 0u32;
    loop {
        let take = size.min(n);
        levels.push(traversal.order[..take].to_vec());
        level_radii.push(traversal.radii[take - 1]);
        if take == n {
            break;
        }
        k += 1;
        // 2^(2^k), saturating well above any realistic family size.
        size = 1usize.checked_shl(1 << k.min(6)).unwrap_or(usize::MAX);
    }
    let mut value = 0.0f64;
    for t in 0..n {
        let mut sum = 0.0;
        for (k, level) in levels.iter().enumerate() {
            let dist = level
                .iter()
                .map(|&c| d.get(t, c))
                .fold(f64::INFINITY, f64::min);
            sum += 2.0f64.powf(k as f64 / 2.0) * dist;
        }
        value = value.max(sum);
    }
    Ok(TalagrandBound {
        value,
        sequence: AdmissibleSequence { levels },
        level_radii,
    })
}

/// `sqrt(2/e) (gamma_2 + radius)`: moment-norm chaining functional bound
/// from a `gamma_2` bound and the sub-Gaussian radius of the class.
pub fn lambda_bound(gamma2_bound: f64, radius: f64) -> f64 {
    debug_assert!(gamma2_bound >= 0.0 && radius >= 0.0);
    (2.0f64 / std::f64::consts::E).sqrt() * (gamma2_bound + radius)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LambdaClassBounds {
    /// `sqrt(2/e) (gamma2_bound(cls) + 2 n c_w)`.
    pub exact: f64,
    /// Display form `(8/(sqrt(e)(sqrt2 - 1) sqrt(ln 2)) n^{3/2} + 2) c_w
    /// sqrt(8 c_b + d + ln2/4)`; a valid upper bound of `exact` for small n.
    pub display_form: f64,
}

/// Lambda-functional bounds specialized to a network class, fed with the
/// class's own `gamma_2` bound and radius `2 n c_w`. The `n^{3/2}`
/// coefficients of the two forms agree exactly.
pub fn lambda_bound_for_class(cls: &ParameterClass) -> LambdaClassBounds {
    let n = cls.n as f64;
    let gamma2 = entropy_integral_closed_form(cls).gamma2_bound;
    let exact = lambda_bound(gamma2, 2.0 * n * cls.c_w);
    let coeff = 8.0
        / (std::f64::consts::E.sqrt()
            * (std::f64::consts::SQRT_2 - 1.0)
            * std::f64::consts::LN_2.sqrt());
    let display_form = (coeff * n.powf(1.5) + 2.0) * cls.c_w * cls.complexity_factor().sqrt();
    // sqrt(2/e) * dudley-gamma2 coefficient equals the display coefficient.
    debug_assert!({
        let lhs = (2.0f64 / std::f64::consts::E).sqrt() * 8.0
            / ((2.0 - std::f64::consts::SQRT_2) * std::f64::consts::LN_2.sqrt());
        (lhs - coeff).abs() <= 1e-12 * coeff
    });
    LambdaClassBounds {
        exact,
        display_form,
    }
}

/// Tail bound on the uniform squared-norm deviation of a function class:
/// `(u/sqrt(m)) [25 N / m^{1/4} + sqrt(85 Delta N)]^2`, valid with
/// probability at least `1 - 17 exp(-u/4)` for `u >= 2`.
pub fn deviation_bound(u: f64, m: usize, n_value: f64, delta: f64) -> Result<f64, ChainingError> {
    if u < 2.0 {
        return Err(ChainingError::ConfidenceTooSmall(u));
    }
    assert!(m >= 1, "sample count must be positive");
    assert!(n_value >= 0.0 && delta >= 0.0);
    let m = m as f64;
    let inner = 25.0 * n_value / m.powf(0.25) + (85.0 * delta * n_value).sqrt();
    Ok(u / m.sqrt() * inner * inner)
}

//! Expectations under standard Gaussian inputs and their empirical
//! counterparts.
//!
//! The mu-norm of a network is assembled from pairwise neuron moments:
//! second moments have a closed form, cross moments reduce to the span of the
//! two weight vectors and are integrated there (tensor Gauss–Hermite with a
//! higher-order cross-check, falling back to the polar route, which is exact
//! in the radial coordinate). Empirical seminorms, risks, and the excess-risk
//! decomposition act on explicit sample sets.

use crate::model::{ModelError, NetworkParams, NeuronParams};
use crate::quad::{
    adaptive_simpson, hermite_rule, polynomial_radial_segment, QuadError, QuadratureSpec, Scheme,
};
use crate::rng::{stream, StreamKind};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::f64::consts::{PI, SQRT_2};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GaussianError {
    #[error("sample set has no labels")]
    MissingLabels,
    #[error("vector lengths differ ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// Standard normal density.
pub fn phi(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / (2.0 * PI).sqrt()
}

/// Standard normal CDF.
pub fn norm_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z / SQRT_2)
}

/// `m` i.i.d. standard Gaussian inputs with optional labels.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    m: usize,
    d: usize,
    data: Vec<f64>,
    pub labels: Option<Vec<f64>>,
    /// Seed provenance tag recorded in exports.
    pub seed: u64,
}

impl SampleSet {
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Option<Vec<f64>>, seed: u64) -> Self {
        assert!(!rows.is_empty(), "sample set must contain at least one row");
        let d = rows[0].len();
        assert!(rows.iter().all(|r| r.len() == d));
        if let Some(y) = &labels {
            assert_eq!(y.len(), rows.len());
        }
        let data = rows.into_iter().flatten().collect();
        Self {
            m: 0,
            d,
            data,
            labels,
            seed,
        }
        .with_len()
    }

    fn with_len(mut self) -> Self {
        self.m = self.data.len() / self.d;
        self
    }

    pub fn len(&self) -> usize {
        self.m
    }

    pub fn is_empty(&self) -> bool {
        self.m == 0
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, j: usize) -> &[f64] {
        &self.data[j * self.d..(j + 1) * self.d]
    }

    /// CSV export with header `x_1,...,x_d[,y]`, floats at 17 significant
    /// digits, rows in draw order.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for k in 1..=self.d {
            if k > 1 {
                out.push(',');
            }
            let _ = write!(out, "x_{k}");
        }
        if self.labels.is_some() {
            out.push_str(",y");
        }
        out.push('\n');
        for j in 0..self.m {
            for (k, v) in self.row(j).iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{}", fmt_f64(*v));
            }
            if let Some(y) = &self.labels {
                let _ = write!(out, ",{}", fmt_f64(y[j]));
            }
            out.push('\n');
        }
        out
    }
}

/// 17-significant-digit float formatting shared by all CSV emitters.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// ψ₂ norm of a centered Gaussian with standard deviation 1 is sqrt(8/3);
/// used to convert prescribed ψ₂ norms into noise standard deviations.
pub fn gaussian_psi2_per_sigma() -> f64 {
    (8.0f64 / 3.0).sqrt()
}

/// Draws `m` i.i.d. `N(0, I_d)` inputs; labels are teacher evaluations plus
/// centered Gaussian noise with the prescribed ψ₂ norm when requested.
pub fn draw_samples(
    m: usize,
    d: usize,
    seed: u64,
    teacher: Option<&NetworkParams>,
    noise_psi2: Option<f64>,
) -> SampleSet {
    assert!(m >= 1 && d >= 1);
    let mut rng = stream(seed, StreamKind::Samples, 0);
    let mut data = Vec::with_capacity(m * d);
    for _ in 0..m * d {
        data.push(StandardNormal.sample(&mut rng));
    }
    let set = SampleSet {
        m,
        d,
        data,
        labels: None,
        seed,
    };
    let labels = teacher.map(|t| {
        let sigma = noise_psi2.map(|c| c / gaussian_psi2_per_sigma()).unwrap_or(0.0);
        let mut noise_rng = stream(seed, StreamKind::Noise, 0);
        (0..m)
            .map(|j| {
                let mut y = t.value(set.row(j));
                if sigma > 0.0 {
                    let z: f64 = StandardNormal.sample(&mut noise_rng);
                    y += sigma * z;
                }
                y
            })
            .collect()
    });
    SampleSet { labels, ..set }
}

/// `E[phi_p(x)^2] = (sigma^2 + b^2) Phi(b/sigma) + sigma b phi(b/sigma)`
/// with `sigma = ||w||`; independent of the sign, zero for the zero neuron.
pub fn neuron_second_moment(p: &NeuronParams) -> f64 {
    let sigma = p.weight_norm();
    if sigma == 0.0 {
        let v = p.b.max(0.0);
        return v * v;
    }
    let r = p.b / sigma;
    (sigma * sigma + p.b * p.b) * norm_cdf(r) + sigma * p.b * phi(r)
}

/// `E[max(<w,x> + b, 0)]` for `<w,x> ~ N(0, sigma^2)`.
fn relu_mean(sigma: f64, b: f64) -> f64 {
    if sigma == 0.0 {
        return b.max(0.0);
    }
    let r = b / sigma;
    b * norm_cdf(r) + sigma * phi(r)
}

fn neuron_key(p: &NeuronParams) -> (u64, u64, Vec<u64>) {
    // Total order on finite parameters via the sign-flipped bit pattern.
    let bits = |x: f64| {
        let b = x.to_bits() as i64;
        (b ^ (((b >> 63) as u64) >> 1) as i64) as u64 ^ (1u64 << 63)
    };
    (
        bits(p.weight_norm()),
        bits(p.b),
        p.w.iter().map(|&x| bits(x)).collect(),
    )
}

struct Reduced2d {
    // Reduced weights in the orthonormal basis of span(w_p, w_q).
    a1: [f64; 2],
    a2: [f64; 2],
}

/// Orthonormal reduction of the pair; `None` when the weights are collinear
/// (1-D reduction applies) or one of them is zero.
fn reduce_pair(p: &NeuronParams, q: &NeuronParams) -> Option<Reduced2d> {
    let np = p.weight_norm();
    let nq = q.weight_norm();
    if np == 0.0 || nq == 0.0 {
        return None;
    }
    let dot: f64 = p.w.iter().zip(&q.w).map(|(a, b)| a * b).sum();
    let along = dot / np;
    let ortho2 = (nq * nq - along * along).max(0.0);
    let ortho = ortho2.sqrt();
    if ortho <= 1e-12 * nq {
        return None;
    }
    Some(Reduced2d {
        a1: [np, 0.0],
        a2: [along, ortho],
    })
}

/// `E[phi_p(x) phi_q(x)]` including both signs; symmetric in its arguments.
pub fn neuron_cross_moment(
    p: &NeuronParams,
    q: &NeuronParams,
    quad: &QuadratureSpec,
) -> Result<f64, GaussianError> {
    if p.dim() != q.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: p.dim(),
            got: q.dim(),
        }
        .into());
    }
    quad.validate()?;
    // Canonical argument order makes the quadrature path identical for
    // (p, q) and (q, p): symmetry holds bit-for-bit, not just to tolerance.
    let (p, q) = if neuron_key(p) <= neuron_key(q) { (p, q) } else { (q, p) };
    let sign = p.kappa.as_f64() * q.kappa.as_f64();
    let np = p.weight_norm();
    let nq = q.weight_norm();

    // Degenerate reductions first: constants and collinear weights.
    if np == 0.0 || nq == 0.0 {
        if np == 0.0 && nq == 0.0 {
            return Ok(sign * p.b.max(0.0) * q.b.max(0.0));
        }
        let (c, other, sigma) = if np == 0.0 { (p.b.max(0.0), q, nq) } else { (q.b.max(0.0), p, np) };
        return Ok(sign * c * relu_mean(sigma, other.b));
    }
    let Some(red) = reduce_pair(p, q) else {
        let dot: f64 = p.w.iter().zip(&q.w).map(|(a, b)| a * b).sum();
        let a2 = dot / np; // signed magnitude of w_q along w_p
        return Ok(sign * cross_moment_1d(np, p.b, a2, q.b));
    };

    let positive = match quad.scheme {
        Scheme::AdaptivePolar => cross_moment_polar(&red, p.b, q.b, quad)?,
        Scheme::GaussHermiteTensor => {
            let lo = hermite_rule(quad.order);
            let hi = hermite_rule(quad.order + quad.order / 2);
            let f = |u: f64, v: f64| {
                (red.a1[0] * u + red.a1[1] * v + p.b).max(0.0)
                    * (red.a2[0] * u + red.a2[1] * v + q.b).max(0.0)
            };
            let coarse = lo.expect_2d(f);
            let fine = hi.expect_2d(f);
            let scale = coarse.abs().max(fine.abs()).max(1.0);
            if (coarse - fine).abs() <= quad.abs_tol.max(quad.rel_tol * scale) {
                fine
            } else {
                cross_moment_polar(&red, p.b, q.b, quad)?
            }
        }
    };
    Ok(sign * positive)
}

/// 1-D reduction: `E[max(a1 u + b1, 0) max(a2 u + b2, 0)]`, `u ~ N(0,1)`,
/// via incomplete Gaussian moments over the interval where both are active.
fn cross_moment_1d(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (a, b) in [(a1, b1), (a2, b2)] {
        if a > 0.0 {
            lo = lo.max(-b / a);
        } else if a < 0.0 {
            hi = hi.min(-b / a);
        } else if b <= 0.0 {
            return 0.0;
        }
    }
    if hi <= lo {
        return 0.0;
    }
    let (m0, m1, m2) = gaussian_interval_moments(lo, hi);
    let c2 = a1 * a2;
    let c1 = a1 * b2 + a2 * b1;
    let c0 = b1 * b2;
    (c2 * m2 + c1 * m1 + c0 * m0) / (2.0 * PI).sqrt()
}

/// `(int e^{-u^2/2}, int u e^{-u^2/2}, int u^2 e^{-u^2/2})` over `[lo, hi]`.
fn gaussian_interval_moments(lo: f64, hi: f64) -> (f64, f64, f64) {
    let e = |u: f64| {
        if u.is_finite() {
            libm::exp(-0.5 * u * u)
        } else {
            0.0
        }
    };
    let cdf_scale = (PI / 2.0).sqrt();
    let erf_gap = match (lo.is_finite(), hi.is_finite()) {
        (true, true) => {
            if lo >= 0.0 {
                libm::erfc(lo / SQRT_2) - libm::erfc(hi / SQRT_2)
            } else if hi <= 0.0 {
                libm::erfc(-hi / SQRT_2) - libm::erfc(-lo / SQRT_2)
            } else {
                libm::erf(hi / SQRT_2) + libm::erf(-lo / SQRT_2)
            }
        }
        (true, false) => libm::erfc(lo / SQRT_2),
        (false, true) => libm::erfc(-hi / SQRT_2),
        (false, false) => 2.0,
    };
    let m0 = cdf_scale * erf_gap;
    let m1 = e(lo) - e(hi);
    let lo_term = if lo.is_finite() { lo * e(lo) } else { 0.0 };
    let hi_term = if hi.is_finite() { hi * e(hi) } else { 0.0 };
    let m2 = lo_term - hi_term + m0;
    (m0, m1, m2)
}

/// Polar route on the reduced plane: closed-form radial integral of the
/// product over the region where both neurons are active, then adaptive
/// angular quadrature split at the four zero-crossing angles.
fn cross_moment_polar(
    red: &Reduced2d,
    b1: f64,
    b2: f64,
    quad: &QuadratureSpec,
) -> Result<f64, QuadError> {
    let radial = |alpha: f64| -> f64 {
        let e = [alpha.cos(), alpha.sin()];
        let a1 = red.a1[0] * e[0] + red.a1[1] * e[1];
        let a2 = red.a2[0] * e[0] + red.a2[1] * e[1];
        let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
        for (a, b) in [(a1, b1), (a2, b2)] {
            if a > 0.0 {
                lo = lo.max(-b / a);
            } else if a < 0.0 {
                if b <= 0.0 {
                    return 0.0;
                }
                hi = hi.min(-b / a);
            } else if b <= 0.0 {
                return 0.0;
            }
        }
        if hi <= lo {
            return 0.0;
        }
        polynomial_radial_segment(a1 * a2, a1 * b2 + a2 * b1, b1 * b2, lo, hi)
    };

    let mut cuts: Vec<f64> = Vec::new();
    for a in [red.a1, red.a2] {
        let base = a[1].atan2(a[0]);
        for k in [0.5, 1.5] {
            cuts.push((base + k * PI).rem_euclid(2.0 * PI));
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut total = 0.0;
    let mut start = 0.0;
    let panel_tol = quad.abs_tol / (cuts.len() as f64 + 1.0);
    for end in cuts.iter().copied().chain([2.0 * PI]) {
        if end > start + 1e-14 {
            total += adaptive_simpson(&radial, start, end, panel_tol, quad.rel_tol, 48)?;
        }
        start = end;
    }
    Ok(total / (2.0 * PI))
}

/// `||phi_net||_mu = sqrt(sum_{i,j} E[phi_i phi_j])` with signs carried by
/// each neuron; zero for the all-zero network.
pub fn network_mu_norm(
    net: &NetworkParams,
    quad: &QuadratureSpec,
) -> Result<f64, GaussianError> {
    Ok(network_mu_norm_sq(net, quad)?.max(0.0).sqrt())
}

pub fn network_mu_norm_sq(
    net: &NetworkParams,
    quad: &QuadratureSpec,
) -> Result<f64, GaussianError> {
    let n = net.len();
    let mut total = 0.0;
    for i in 0..n {
        total += neuron_second_moment(&net.neurons[i]);
        for j in i + 1..n {
            total += 2.0 * neuron_cross_moment(&net.neurons[i], &net.neurons[j], quad)?;
        }
    }
    Ok(total)
}

/// Mu-norm of the 2n-neuron difference network; symmetric, zero at equality.
pub fn mu_distance(
    p: &NetworkParams,
    q: &NetworkParams,
    quad: &QuadratureSpec,
) -> Result<f64, GaussianError> {
    network_mu_norm(&p.difference(q)?, quad)
}

/// `sqrt(mean of phi(x_j)^2)` over the sample; a seminorm in the network.
pub fn empirical_norm(net: &NetworkParams, s: &SampleSet) -> Result<f64, GaussianError> {
    if net.dim() != s.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: s.dim(),
            got: net.dim(),
        }
        .into());
    }
    let sum: f64 = (0..s.len())
        .map(|j| {
            let v = net.value(s.row(j));
            v * v
        })
        .sum();
    Ok((sum / s.len() as f64).sqrt())
}

/// `(1/m) sum f_j g_j`; bilinear, and `empirical_inner(f, f)` is the squared
/// empirical norm of the value vector.
pub fn empirical_inner(f: &[f64], g: &[f64]) -> Result<f64, GaussianError> {
    if f.len() != g.len() || f.is_empty() {
        return Err(GaussianError::LengthMismatch {
            left: f.len(),
            right: g.len(),
        });
    }
    Ok(f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>() / f.len() as f64)
}

/// Network values on every sample row.
pub fn values_on(net: &NetworkParams, s: &SampleSet) -> Vec<f64> {
    (0..s.len()).map(|j| net.value(s.row(j))).collect()
}

/// `sqrt(mean (phi(x_j) - y_j)^2)`; requires labels.
pub fn empirical_risk(net: &NetworkParams, s: &SampleSet) -> Result<f64, GaussianError> {
    let y = s.labels.as_ref().ok_or(GaussianError::MissingLabels)?;
    if net.dim() != s.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: s.dim(),
            got: net.dim(),
        }
        .into());
    }
    let sum: f64 = (0..s.len())
        .map(|j| {
            let r = net.value(s.row(j)) - y[j];
            r * r
        })
        .sum();
    Ok((sum / s.len() as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExcessRiskDecomposition {
    pub quadratic_term: f64,
    pub multiplier_term: f64,
}

/// Excess risk of `q` against the reference `p_star`, returned together with
/// its quadratic/multiplier decomposition:
/// `value = ||phi_q - y||_m^2 - ||phi_p* - y||_m^2
///        = ||phi_q - phi_p*||_m^2
///          + (2/m) sum (phi_p*(x_j) - y_j)(phi_q(x_j) - phi_p*(x_j))`.
/// The left side and the split are computed independently.
pub fn excess_risk(
    q: &NetworkParams,
    p_star: &NetworkParams,
    s: &SampleSet,
) -> Result<(f64, ExcessRiskDecomposition), GaussianError> {
    let y = s.labels.as_ref().ok_or(GaussianError::MissingLabels)?;
    if q.dim() != p_star.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: p_star.dim(),
            got: q.dim(),
        }
        .into());
    }
    let m = s.len() as f64;
    let mut risk_q = 0.0;
    let mut risk_star = 0.0;
    let mut quadratic = 0.0;
    let mut multiplier = 0.0;
    for (j, &yj) in y.iter().enumerate() {
        let x = s.row(j);
        let vq = q.value(x);
        let vs = p_star.value(x);
        risk_q += (vq - yj) * (vq - yj);
        risk_star += (vs - yj) * (vs - yj);
        quadratic += (vq - vs) * (vq - vs);
        multiplier += (vs - yj) * (vq - vs);
    }
    let value = (risk_q - risk_star) / m;
    Ok((
        value,
        ExcessRiskDecomposition {
            quadratic_term: quadratic / m,
            multiplier_term: 2.0 * multiplier / m,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Kappa;

    fn neuron(w: &[f64], b: f64, kappa: Kappa) -> NeuronParams {
        NeuronParams::new(w.to_vec(), b, kappa).unwrap()
    }

    #[test]
    fn second_moment_closed_form_values() {
        let p = neuron(&[1.0, 0.0], 0.0, Kappa::Plus);
        assert!((neuron_second_moment(&p) - 0.5).abs() < 1e-15);
        let p = neuron(&[2.0, 0.0], 0.0, Kappa::Minus);
        assert!((neuron_second_moment(&p) - 2.0).abs() < 1e-15);
        assert_eq!(neuron_second_moment(&NeuronParams::zero(3)), 0.0);
        // Constant neuron (0, b, +1) squares to b^2 for b > 0.
        let c = neuron(&[0.0], 1.5, Kappa::Plus);
        assert!((neuron_second_moment(&c) - 2.25).abs() < 1e-15);
    }

    #[test]
    fn cross_moment_orthogonal_closed_form() {
        // Arc-cosine value at theta = pi/2: 1/(2 pi).
        let p = neuron(&[1.0, 0.0], 0.0, Kappa::Plus);
        let q = neuron(&[0.0, 1.0], 0.0, Kappa::Plus);
        for spec in [QuadratureSpec::default(), QuadratureSpec::default().polar()] {
            let v = neuron_cross_moment(&p, &q, &spec).unwrap();
            assert!(
                (v - 1.0 / (2.0 * PI)).abs() < 1e-6,
                "{:?}: {v}",
                spec.scheme
            );
        }
    }

    #[test]
    fn cross_moment_consistency_and_antipodal() {
        let quad = QuadratureSpec::default();
        let p = neuron(&[0.8, 0.3], 0.2, Kappa::Plus);
        let same = neuron_cross_moment(&p, &p, &quad).unwrap();
        assert!((same - neuron_second_moment(&p)).abs() < 1e-6 * same.max(1.0));

        let q = neuron(&[-0.8, -0.3], 0.0, Kappa::Plus);
        let p0 = neuron(&[0.8, 0.3], 0.0, Kappa::Plus);
        let v = neuron_cross_moment(&p0, &q, &quad).unwrap();
        assert!(v.abs() < 1e-10, "{v}");
    }

    #[test]
    fn cross_moment_symmetry_and_sign() {
        let quad = QuadratureSpec::default();
        let p = neuron(&[1.0, 0.2], -0.1, Kappa::Plus);
        let q = neuron(&[-0.3, 0.9], 0.4, Kappa::Minus);
        let pq = neuron_cross_moment(&p, &q, &quad).unwrap();
        let qp = neuron_cross_moment(&q, &p, &quad).unwrap();
        assert!((pq - qp).abs() < 1e-8);
        let flipped = neuron_cross_moment(&p, &q.flipped(), &quad).unwrap();
        assert!((pq + flipped).abs() < 1e-10);
    }

    #[test]
    fn network_norm_single_and_cancelling() {
        let quad = QuadratureSpec::default();
        let p = neuron(&[1.0, 0.0], 0.0, Kappa::Plus);
        let single = NetworkParams::new(vec![p.clone()]).unwrap();
        let v = network_mu_norm(&single, &quad).unwrap();
        assert!((v - 0.5f64.sqrt()).abs() < 1e-9);

        let cancel = NetworkParams::new(vec![p.clone(), p.flipped()]).unwrap();
        let v = network_mu_norm(&cancel, &quad).unwrap();
        assert!(v.abs() < 1e-7, "{v}");
    }

    #[test]
    fn mu_distance_degenerate_cases() {
        let quad = QuadratureSpec::default();
        let p = NetworkParams::new(vec![neuron(&[0.7, -0.4], 0.1, Kappa::Plus)]).unwrap();
        assert!(mu_distance(&p, &p, &quad).unwrap() < 1e-7);
        let zero = NetworkParams::zero(2);
        let d = mu_distance(&p, &zero, &quad).unwrap();
        let n = network_mu_norm(&p, &quad).unwrap();
        assert!((d - n).abs() < 1e-8);
    }

    #[test]
    fn draw_samples_deterministic_and_teacher_labels() {
        let a = draw_samples(3, 2, 11, None, None);
        let b = draw_samples(3, 2, 11, None, None);
        assert_eq!(a, b);
        assert_eq!(a.len(), 3);
        assert_eq!(a.dim(), 2);

        let zero = NetworkParams::zero(2);
        let s = draw_samples(5, 2, 11, Some(&zero), None);
        assert_eq!(s.labels.as_ref().unwrap(), &vec![0.0; 5]);
    }

    #[test]
    fn empirical_ops_hand_values() {
        let rows = vec![vec![1.0], vec![-1.0]];
        let s = SampleSet::from_rows(rows, None, 0);
        // Constant network: single zero-weight neuron with b = 3.
        let c = NetworkParams::new(vec![neuron(&[0.0], 3.0, Kappa::Plus)]).unwrap();
        assert!((empirical_norm(&c, &s).unwrap() - 3.0).abs() < 1e-15);

        // Dead zone: active only for x > 1, both samples miss it.
        let dead = NetworkParams::new(vec![neuron(&[1.0], -1.0, Kappa::Plus)]).unwrap();
        let rows = vec![vec![0.0], vec![-2.0]];
        let s2 = SampleSet::from_rows(rows, None, 0);
        assert_eq!(empirical_norm(&dead, &s2).unwrap(), 0.0);

        assert!((empirical_inner(&[1.0, 1.0], &[1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(empirical_inner(&[1.0, -1.0], &[1.0, 1.0]).unwrap(), 0.0);
        assert!((empirical_inner(&[2.0, 0.0], &[3.0, 5.0]).unwrap() - 3.0).abs() < 1e-15);
        assert!(empirical_inner(&[1.0], &[1.0, 2.0]).is_err());

        // Evaluations {1, 2} -> sqrt(2.5).
        let id = NetworkParams::new(vec![
            neuron(&[1.0], 0.0, Kappa::Plus),
            neuron(&[-1.0], 0.0, Kappa::Minus),
        ])
        .unwrap();
        let s3 = SampleSet::from_rows(vec![vec![1.0], vec![2.0]], None, 0);
        assert!((empirical_norm(&id, &s3).unwrap() - 2.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn empirical_risk_cases() {
        let p = NetworkParams::new(vec![neuron(&[1.0], 0.0, Kappa::Plus)]).unwrap();
        let s = SampleSet::from_rows(vec![vec![1.0], vec![2.0]], Some(vec![1.0, 2.0]), 0);
        assert_eq!(empirical_risk(&p, &s).unwrap(), 0.0);

        let zero = NetworkParams::zero(1);
        let s = SampleSet::from_rows(vec![vec![1.0], vec![2.0]], Some(vec![3.0, 4.0]), 0);
        let expect = ((9.0f64 + 16.0) / 2.0).sqrt();
        assert!((empirical_risk(&zero, &s).unwrap() - expect).abs() < 1e-15);

        let s = SampleSet::from_rows(vec![vec![2.0]], Some(vec![5.0]), 0);
        assert!((empirical_risk(&p, &s).unwrap() - 3.0).abs() < 1e-15);

        let unlabeled = SampleSet::from_rows(vec![vec![0.0]], None, 0);
        assert!(matches!(
            empirical_risk(&p, &unlabeled),
            Err(GaussianError::MissingLabels)
        ));
    }

    #[test]
    fn excess_risk_examples() {
        let p = NetworkParams::new(vec![neuron(&[1.0], 0.0, Kappa::Plus)]).unwrap();
        let s = SampleSet::from_rows(vec![vec![1.0], vec![-1.0]], Some(vec![0.5, 0.0]), 0);
        let (v, dec) = excess_risk(&p, &p, &s).unwrap();
        assert_eq!(v, 0.0);
        assert_eq!(dec.quadratic_term, 0.0);
        assert_eq!(dec.multiplier_term, 0.0);

        // Noiseless teacher: multiplier term vanishes.
        let teacher = NetworkParams::new(vec![neuron(&[1.0], 0.2, Kappa::Plus)]).unwrap();
        let s = draw_samples(50, 1, 3, Some(&teacher), None);
        let q = NetworkParams::new(vec![neuron(&[0.8], 0.0, Kappa::Plus)]).unwrap();
        let (v, dec) = excess_risk(&q, &teacher, &s).unwrap();
        assert!(dec.multiplier_term.abs() < 1e-14);
        assert!((v - dec.quadratic_term).abs() < 1e-12 * v.abs().max(1.0));
    }

    #[test]
    fn csv_export_shape() {
        let s = SampleSet::from_rows(vec![vec![1.0, 2.0]], Some(vec![3.0]), 7);
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "x_1,x_2,y");
        let row = lines.next().unwrap();
        assert!(row.starts_with("1.0000000000000000e0,2.0000000000000000e0"));
    }
}

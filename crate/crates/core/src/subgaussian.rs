//! Sub-Gaussian (psi_2) norms and distances for neurons and networks.
//!
//! Every function handled here is a signed sum of ReLU terms, so it only
//! depends on the projection of the input onto the span of its weight
//! vectors. The exponential moment `E_C(f) = E[exp(f(x)^2 / C^2)]` is
//! integrated on that reduced subspace: exactly (per linear piece, via erf)
//! in one dimension, by closed-form radial integration plus adaptive angular
//! quadrature in two, and by tensor Gauss–Hermite beyond. The psi_2 norm is
//! the bisection solution of `E_C(f) = 2`, using monotonicity of `E_C` in
//! `C`; divergence (`E_C = inf` once the squared growth rate of `f` reaches
//! `C^2/2` in some direction) is decided analytically from the piecewise
//! -linear structure, never from quadrature blow-up.

use crate::model::{ModelError, NetworkParams, NeuronParams, ParameterClass};
use crate::quad::{
    adaptive_simpson_budgeted, gauss_line_segment, gauss_radial_segment, hermite_rule, QuadError,
    QuadratureSpec, Scheme,
};
use crate::rng::{stream, StreamKind};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Exact quadrature is limited to reductions of this dimension; larger
/// network differences fall back to per-neuron sums.
pub const DEFAULT_REDUCTION_CAP: usize = 4;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

#[derive(Debug, Error)]
pub enum SubgaussianError {
    #[error("function reduces to {dim} dimensions, above the configured cap {cap}")]
    UnsupportedReduction { dim: usize, cap: usize },
    #[error("bisection did not converge within {max_iter} iterations; bracket ({lo}, {hi})")]
    NonConvergence { lo: f64, hi: f64, max_iter: usize },
    #[error("psi2 distance of networks with different sizes ({left} vs {right})")]
    SizeMismatch { left: usize, right: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// A signed sum of ReLU terms `f(x) = sum_i sign_i max(<w_i,x> + b_i, 0)`;
/// the reducible-function representation shared by all psi_2 estimators.
#[derive(Debug, Clone)]
pub struct ReluSum {
    terms: Vec<ReluTerm>,
    dim: usize,
}

#[derive(Debug, Clone)]
struct ReluTerm {
    w: Vec<f64>,
    b: f64,
    sign: f64,
}

impl ReluSum {
    pub fn from_neuron(p: &NeuronParams) -> Self {
        Self {
            terms: vec![ReluTerm {
                w: p.w.clone(),
                b: p.b,
                sign: p.kappa.as_f64(),
            }],
            dim: p.dim(),
        }
    }

    pub fn from_network(net: &NetworkParams) -> Self {
        Self {
            terms: net
                .neurons
                .iter()
                .map(|p| ReluTerm {
                    w: p.w.clone(),
                    b: p.b,
                    sign: p.kappa.as_f64(),
                })
                .collect(),
            dim: net.dim(),
        }
    }

    /// Constant function `x -> a`, encoded with zero weights.
    pub fn constant(a: f64, dim: usize) -> Self {
        Self {
            terms: vec![ReluTerm {
                w: vec![0.0; dim],
                b: a.abs(),
                sign: if a < 0.0 { -1.0 } else { 1.0 },
            }],
            dim,
        }
    }

    /// Linear functional `x -> <w,x>` as `relu(<w,x>) - relu(-<w,x>)`.
    pub fn linear(w: &[f64]) -> Self {
        Self {
            terms: vec![
                ReluTerm {
                    w: w.to_vec(),
                    b: 0.0,
                    sign: 1.0,
                },
                ReluTerm {
                    w: w.iter().map(|x| -x).collect(),
                    b: 0.0,
                    sign: -1.0,
                },
            ],
            dim: w.len(),
        }
    }

    /// `self - other` as a single signed sum.
    pub fn difference(&self, other: &ReluSum) -> Result<Self, SubgaussianError> {
        if self.dim != other.dim {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim,
                got: other.dim,
            }
            .into());
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|t| ReluTerm {
            w: t.w.clone(),
            b: t.b,
            sign: -t.sign,
        }));
        Ok(Self {
            terms,
            dim: self.dim,
        })
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let z: f64 = t.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + t.b;
                t.sign * z.max(0.0)
            })
            .sum()
    }

    /// Merges terms sharing a normalized hyperplane; scaled or repeated
    /// copies of the same ReLU collapse, so `f - f` reduces to zero.
    fn canonical(&self) -> Vec<ReluTerm> {
        let mut merged: Vec<ReluTerm> = Vec::new();
        for t in &self.terms {
            let norm = t.w.iter().map(|x| x * x).sum::<f64>().sqrt();
            let (unit, ratio, coeff) = if norm > 0.0 {
                (
                    t.w.iter().map(|x| x / norm).collect::<Vec<_>>(),
                    t.b / norm,
                    t.sign * norm,
                )
            } else {
                if t.b <= 0.0 {
                    continue; // relu of a non-positive constant is zero
                }
                (vec![0.0; self.dim], f64::INFINITY, t.sign * t.b)
            };
            let mut found = false;
            for m in merged.iter_mut() {
                let m_ratio = if m.w.iter().any(|&x| x != 0.0) {
                    m.b
                } else {
                    f64::INFINITY
                };
                let close = m
                    .w
                    .iter()
                    .zip(&unit)
                    .all(|(a, b)| (a - b).abs() <= 1e-12)
                    && (ratio == m_ratio
                        || (ratio.is_finite() && m_ratio.is_finite() && (ratio - m_ratio).abs() <= 1e-12));
                if close {
                    m.sign += coeff;
                    found = true;
                    break;
                }
            }
            if !found {
                merged.push(ReluTerm {
                    w: unit,
                    b: if ratio.is_finite() { ratio } else { 1.0 },
                    sign: coeff,
                });
            }
        }
        merged.retain(|t| t.sign.abs() > 1e-14);
        merged
    }
}

/// Orthonormal reduction of a [`ReluSum`]: terms re-expressed over a basis
/// of the span of their weights, with the growth analysis cached.
struct Reduced {
    dim: usize,
    terms: Vec<ReluTerm>, // w in reduced coordinates
    /// `max_e |lim_r f(r e)/r|` and, in two dimensions, its argmax angle.
    growth: f64,
    growth_angle: Option<f64>,
}

fn reduce(f: &ReluSum, cap: usize) -> Result<Reduced, SubgaussianError> {
    // Modified Gram–Schmidt over the canonical (merged) term weights.
    let terms = f.canonical();
    let scale = terms
        .iter()
        .map(|t| t.w.iter().map(|x| x * x).sum::<f64>().sqrt() * t.sign.abs())
        .fold(0.0f64, f64::max)
        .max(1e-300);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for t in &terms {
        let coeff = t.sign.abs();
        let mut v: Vec<f64> = t.w.clone();
        for e in &basis {
            let dot: f64 = v.iter().zip(e).map(|(a, b)| a * b).sum();
            for (x, e) in v.iter_mut().zip(e) {
                *x -= dot * e;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm * coeff > 1e-12 * scale {
            if basis.len() == cap {
                return Err(SubgaussianError::UnsupportedReduction {
                    dim: cap + 1,
                    cap,
                });
            }
            for x in &mut v {
                *x /= norm;
            }
            basis.push(v);
        }
    }
    let k = basis.len();
    let reduced_terms = terms
        .iter()
        .map(|t| ReluTerm {
            w: basis
                .iter()
                .map(|e| e.iter().zip(&t.w).map(|(a, b)| a * b).sum())
                .collect(),
            b: t.b,
            sign: t.sign,
        })
        .collect();
    let mut red = Reduced {
        dim: k,
        terms: reduced_terms,
        growth: 0.0,
        growth_angle: None,
    };
    match k {
        0 => {}
        1 => red.growth = red.max_growth_1d(),
        2 => {
            let (g, angle) = red.max_growth_2d();
            red.growth = g;
            red.growth_angle = Some(angle);
        }
        _ => red.growth = red.max_growth_sampled(),
    }
    Ok(red)
}

impl Reduced {
    fn is_zero(&self) -> bool {
        self.dim == 0 && self.constant_value() == 0.0
    }

    /// Value of the constant part (terms with zero reduced weight).
    fn constant_value(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.w.iter().all(|&x| x == 0.0))
            .map(|t| t.sign * t.b.max(0.0))
            .sum()
    }

    fn max_growth_1d(&self) -> f64 {
        let up: f64 = self.terms.iter().map(|t| t.sign * t.w[0].max(0.0)).sum();
        let down: f64 = self
            .terms
            .iter()
            .map(|t| t.sign * (-t.w[0]).max(0.0))
            .sum();
        up.abs().max(down.abs())
    }

    fn growth_along(&self, e: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let a: f64 = t.w.iter().zip(e).map(|(w, e)| w * e).sum();
                t.sign * a.max(0.0)
            })
            .sum()
    }

    fn max_growth_2d(&self) -> (f64, f64) {
        // Arc boundaries: angles where some <w_i, e(alpha)> changes sign.
        let mut cuts: Vec<f64> = Vec::new();
        for t in &self.terms {
            if t.w.iter().any(|&x| x != 0.0) {
                let base = t.w[1].atan2(t.w[0]);
                cuts.push((base + 0.5 * PI).rem_euclid(2.0 * PI));
                cuts.push((base + 1.5 * PI).rem_euclid(2.0 * PI));
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        if cuts.is_empty() {
            return (0.0, 0.0);
        }
        let mut best = (0.0f64, 0.0f64);
        let m = cuts.len();
        for i in 0..m {
            let start = cuts[i];
            let len = if i + 1 < m {
                cuts[i + 1] - start
            } else {
                cuts[0] + 2.0 * PI - start
            };
            let mid = start + 0.5 * len;
            // Fixed active set on the open arc.
            let active: Vec<&ReluTerm> = self
                .terms
                .iter()
                .filter(|t| {
                    let a = t.w[0] * mid.cos() + t.w[1] * mid.sin();
                    a > 0.0
                })
                .collect();
            let v = active.iter().fold([0.0f64; 2], |acc, t| {
                [acc[0] + t.sign * t.w[0], acc[1] + t.sign * t.w[1]]
            });
            let mut candidates = vec![start, start + len, mid];
            let vn = (v[0] * v[0] + v[1] * v[1]).sqrt();
            if vn > 0.0 {
                for extra in [v[1].atan2(v[0]), (v[1].atan2(v[0]) + PI)] {
                    let rel = (extra - start).rem_euclid(2.0 * PI);
                    if rel <= len {
                        candidates.push(start + rel);
                    }
                }
            }
            for alpha in candidates {
                let e = [alpha.cos(), alpha.sin()];
                let g = self.growth_along(&e).abs();
                if g > best.0 {
                    best = (g, alpha.rem_euclid(2.0 * PI));
                }
            }
        }
        best
    }

    fn max_growth_sampled(&self) -> f64 {
        let mut rng = stream(0x5eed, StreamKind::Probes, self.dim as u64);
        let mut best = 0.0f64;
        let mut starts: Vec<Vec<f64>> = Vec::new();
        for t in &self.terms {
            let n = t.w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                starts.push(t.w.iter().map(|x| x / n).collect());
                starts.push(t.w.iter().map(|x| -x / n).collect());
            }
        }
        for _ in 0..4096 {
            let mut e: Vec<f64> = (0..self.dim)
                .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
                .collect();
            let n = e.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 0.0 {
                for x in &mut e {
                    *x /= n;
                }
                starts.push(e);
            }
        }
        for mut e in starts {
            // Projected fixed-point refinement on the active-set gradient.
            for _ in 0..24 {
                let active: Vec<&ReluTerm> = self
                    .terms
                    .iter()
                    .filter(|t| t.w.iter().zip(&e).map(|(w, e)| w * e).sum::<f64>() > 0.0)
                    .collect();
                let mut v = vec![0.0; self.dim];
                for t in active {
                    for (v, w) in v.iter_mut().zip(&t.w) {
                        *v += t.sign * w;
                    }
                }
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n == 0.0 {
                    break;
                }
                let cand: Vec<f64> = v.iter().map(|x| x / n).collect();
                if self.growth_along(&cand).abs() <= self.growth_along(&e).abs() {
                    break;
                }
                e = cand;
            }
            best = best.max(self.growth_along(&e).abs());
        }
        best
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| {
                let z: f64 = t.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + t.b;
                t.sign * z.max(0.0)
            })
            .sum()
    }

    /// `E[exp(f^2/c^2)]`, possibly infinite.
    fn exp_moment(&self, c: f64, quad: &QuadratureSpec) -> Result<f64, SubgaussianError> {
        assert!(c > 0.0);
        let growth = self.growth;
        if c * c <= 2.0 * growth * growth {
            return Ok(f64::INFINITY);
        }
        match self.dim {
            0 => {
                let v = self.constant_value();
                Ok(libm::exp(v * v / (c * c)))
            }
            1 => Ok(self.exp_moment_1d(c)),
            2 => match quad.scheme {
                Scheme::AdaptivePolar => self.exp_moment_polar(c, quad),
                Scheme::GaussHermiteTensor => {
                    let coarse = self.exp_moment_gh(c, quad.order);
                    let fine = self.exp_moment_gh(c, quad.order + quad.order / 2);
                    let scale = coarse.abs().max(fine.abs());
                    if (coarse - fine).abs() <= quad.abs_tol.max(quad.rel_tol * scale) {
                        Ok(fine)
                    } else {
                        self.exp_moment_polar(c, quad)
                    }
                }
            },
            k => {
                // Tensor rule capped so the node count stays bounded.
                let per_axis = match k {
                    3 => quad.order.min(40),
                    _ => quad.order.min(20),
                };
                Ok(self.exp_moment_gh(c, per_axis))
            }
        }
    }

    fn exp_moment_gh(&self, c: f64, order: usize) -> f64 {
        let rule = hermite_rule(order);
        rule.expect_nd(self.dim, |x| {
            let v = self.value(x);
            let e = v * v / (c * c);
            if e > 700.0 {
                f64::INFINITY
            } else {
                libm::exp(e)
            }
        })
    }

    /// Exact 1-D integration: erf closed forms on each linear piece.
    fn exp_moment_1d(&self, c: f64) -> f64 {
        let mut kinks: Vec<f64> = self
            .terms
            .iter()
            .filter(|t| t.w[0] != 0.0)
            .map(|t| -t.b / t.w[0])
            .collect();
        kinks.sort_by(|a, b| a.partial_cmp(b).unwrap());
        kinks.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let mut bounds = vec![f64::NEG_INFINITY];
        bounds.extend(&kinks);
        bounds.push(f64::INFINITY);
        let mut total = 0.0;
        for win in bounds.windows(2) {
            let (l, r) = (win[0], win[1]);
            let mid = piece_midpoint(l, r);
            let (mut slope, mut level) = (0.0, 0.0);
            for t in &self.terms {
                if t.w[0] * mid + t.b > 0.0 {
                    slope += t.sign * t.w[0];
                    level += t.sign * t.b;
                }
            }
            let p = 0.5 - slope * slope / (c * c);
            let q = 2.0 * slope * level / (c * c);
            let s0 = level * level / (c * c);
            total += gauss_line_segment(p, q, s0, l, r);
            if total.is_infinite() {
                return f64::INFINITY;
            }
        }
        total / SQRT_2PI
    }

    /// 2-D polar route: exact radial segments, adaptive angular quadrature
    /// with panels split at the sign-change angles of each term.
    fn exp_moment_polar(&self, c: f64, quad: &QuadratureSpec) -> Result<f64, SubgaussianError> {
        let radial = |alpha: f64| -> f64 {
            let e = [alpha.cos(), alpha.sin()];
            // Per-angle 1-D profile f(r) = sum sign * relu(a r + b), r >= 0.
            let profile: Vec<(f64, f64, f64)> = self
                .terms
                .iter()
                .map(|t| (t.w[0] * e[0] + t.w[1] * e[1], t.b, t.sign))
                .collect();
            let mut kinks: Vec<f64> = profile
                .iter()
                .filter(|(a, b, _)| *a != 0.0 && -b / a > 0.0)
                .map(|(a, b, _)| -b / a)
                .collect();
            kinks.sort_by(|x, y| x.partial_cmp(y).unwrap());
            kinks.dedup_by(|x, y| (*x - *y).abs() < 1e-14);
            let mut bounds = vec![0.0];
            bounds.extend(&kinks);
            bounds.push(f64::INFINITY);
            let mut acc = 0.0;
            for win in bounds.windows(2) {
                let (r0, r1) = (win[0], win[1]);
                let mid = piece_midpoint(r0, r1);
                let (mut slope, mut level) = (0.0, 0.0);
                for (a, b, sign) in &profile {
                    if a * mid + b > 0.0 {
                        slope += sign * a;
                        level += sign * b;
                    }
                }
                let p = 0.5 - slope * slope / (c * c);
                let q = 2.0 * slope * level / (c * c);
                let s0 = level * level / (c * c);
                acc += gauss_radial_segment(p, q, s0, r0, r1);
                if acc.is_infinite() {
                    return f64::INFINITY;
                }
            }
            acc
        };

        let mut cuts: Vec<f64> = Vec::new();
        for t in &self.terms {
            if t.w.iter().any(|&x| x != 0.0) {
                let base = t.w[1].atan2(t.w[0]);
                cuts.push((base + 0.5 * PI).rem_euclid(2.0 * PI));
                cuts.push((base + 1.5 * PI).rem_euclid(2.0 * PI));
            }
        }
        // Near the divergence radius the integrand develops a Lorentzian
        // spike of width B around the max-growth direction: p(alpha) ~
        // p_min + (a*/c)^2 (alpha - alpha*)^2. Panels get edges there, and
        // spike-adjacent panels are integrated under alpha = alpha* +/-
        // B tan(theta), which flattens the spike exactly.
        let mut spikes: Vec<f64> = Vec::new();
        let mut spike_width = 0.0;
        if let Some(alpha) = self.growth_angle {
            if self.growth > 0.0 {
                let c2 = (self.growth / c) * (self.growth / c);
                let p_min = (0.5 - c2).max(1e-300);
                spike_width = (p_min / c2.max(1e-300)).sqrt();
                spikes.push(alpha.rem_euclid(2.0 * PI));
                spikes.push((alpha + PI).rem_euclid(2.0 * PI));
                cuts.extend_from_slice(&spikes);
            }
        }
        cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

        let near_spike =
            |x: f64| spikes.iter().any(|s| (x - s).abs() < 1e-12 || (x - s).abs() > 2.0 * PI - 1e-12);
        let mut total = 0.0;
        let mut start = 0.0;
        let panel_tol = quad.abs_tol / (cuts.len() as f64 + 1.0);
        for end in cuts.iter().copied().chain([2.0 * PI]) {
            if end > start + 1e-14 {
                let len = end - start;
                let use_sub = spike_width > 0.0 && spike_width < 0.25 * len;
                let (v, _) = if use_sub && near_spike(start) {
                    let theta_max = (len / spike_width).atan();
                    adaptive_simpson_budgeted(
                        &|theta: f64| {
                            let sec = 1.0 / theta.cos();
                            radial(start + spike_width * theta.tan()) * spike_width * sec * sec
                        },
                        0.0,
                        theta_max,
                        panel_tol,
                        quad.rel_tol,
                        40,
                        20_000,
                    )
                } else if use_sub && near_spike(end) {
                    let theta_max = (len / spike_width).atan();
                    adaptive_simpson_budgeted(
                        &|theta: f64| {
                            let sec = 1.0 / theta.cos();
                            radial(end - spike_width * theta.tan()) * spike_width * sec * sec
                        },
                        0.0,
                        theta_max,
                        panel_tol,
                        quad.rel_tol,
                        40,
                        20_000,
                    )
                } else {
                    adaptive_simpson_budgeted(
                        &radial,
                        start,
                        end,
                        panel_tol,
                        quad.rel_tol,
                        40,
                        20_000,
                    )
                };
                total += v;
                if total.is_infinite() {
                    return Ok(f64::INFINITY);
                }
            }
            start = end;
        }
        Ok(total / (2.0 * PI))
    }
}

fn piece_midpoint(l: f64, r: f64) -> f64 {
    match (l.is_finite(), r.is_finite()) {
        (true, true) => 0.5 * (l + r),
        (true, false) => l + 1.0,
        (false, true) => r - 1.0,
        (false, false) => 0.0,
    }
}

/// Estimated psi_2 norm with its bisection bracket and the exponential
/// moment evaluated at the returned value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Psi2Estimate {
    pub value: f64,
    pub bracket: (f64, f64),
    pub moment_at_value: f64,
}

/// `E[exp(f(x)^2 / C^2)]` on the reduced subspace; infinite when the
/// squared growth rate of `f` reaches `C^2/2` in some direction.
pub fn exp_moment(f: &ReluSum, c: f64, quad: &QuadratureSpec) -> Result<f64, SubgaussianError> {
    assert!(c > 0.0, "C must be positive");
    quad.validate()?;
    reduce(f, DEFAULT_REDUCTION_CAP)?.exp_moment(c, quad)
}

pub fn psi2_norm(f: &ReluSum, quad: &QuadratureSpec) -> Result<Psi2Estimate, SubgaussianError> {
    psi2_norm_capped(f, quad, DEFAULT_REDUCTION_CAP)
}

pub fn psi2_norm_capped(
    f: &ReluSum,
    quad: &QuadratureSpec,
    cap: usize,
) -> Result<Psi2Estimate, SubgaussianError> {
    quad.validate()?;
    let red = reduce(f, cap)?;
    if red.is_zero() {
        return Ok(Psi2Estimate {
            value: 0.0,
            bracket: (0.0, 0.0),
            moment_at_value: 1.0,
        });
    }
    let growth = red.growth;
    // Lipschitz-style seed: growth plus level heights.
    let height: f64 = red
        .terms
        .iter()
        .map(|t| t.sign.abs() * t.b.max(0.0))
        .sum::<f64>()
        + red.constant_value().abs();
    let seed = (2.0f64.sqrt() * growth + height / 0.8 + 1e-12).max(1e-12);

    // Upper end: double until the moment drops to 2 or below.
    let mut hi = seed;
    let mut doublings = 0;
    while red.exp_moment(hi, quad)? > 2.0 {
        hi *= 2.0;
        doublings += 1;
        if doublings > 200 {
            return Err(SubgaussianError::NonConvergence {
                lo: seed,
                hi,
                max_iter: 200,
            });
        }
    }

    // Lower end. E_C is infinite for C below the divergence radius
    // floor = sqrt(2) * growth, and decreasing above it. When the moment
    // just above the radius is already <= 2 the infimum sits exactly at the
    // radius (E_C jumps from infinity to below 2 there; this happens e.g.
    // for any pure negative-bias neuron), so no bisection is needed.
    let floor = 2.0f64.sqrt() * growth;
    let mut lo;
    if floor > 0.0 {
        let probe = (floor * (1.0 + 1e-6)).min(0.5 * (floor + hi));
        let moment_probe = red.exp_moment(probe, quad)?;
        if moment_probe < 2.0 {
            return Ok(Psi2Estimate {
                value: floor,
                bracket: (floor, probe),
                moment_at_value: moment_probe,
            });
        }
        lo = probe;
    } else {
        // Bounded functions: E_C grows to infinity as C -> 0 unless f is
        // (numerically) zero; halve until the moment reaches 2.
        let mut cand = hi / 2.0;
        loop {
            if cand < 1e-13 * hi {
                return Ok(Psi2Estimate {
                    value: 0.0,
                    bracket: (0.0, cand),
                    moment_at_value: 1.0,
                });
            }
            if red.exp_moment(cand, quad)? >= 2.0 {
                lo = cand;
                break;
            }
            hi = cand;
            cand /= 2.0;
        }
    }

    // Bisection: moment(lo) >= 2 >= moment(hi).
    let max_iter = 200;
    for _ in 0..max_iter {
        if (hi - lo) <= 1e-6 * hi {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let m = red.exp_moment(mid, quad)?;
        if (m - 2.0).abs() <= 1e-8 {
            return Ok(Psi2Estimate {
                value: mid,
                bracket: (lo, hi),
                moment_at_value: m,
            });
        }
        if m >= 2.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if (hi - lo) > 1e-6 * hi {
        return Err(SubgaussianError::NonConvergence { lo, hi, max_iter });
    }
    let value = 0.5 * (lo + hi);
    let moment = red.exp_moment(value, quad)?;
    Ok(Psi2Estimate {
        value,
        bracket: (lo, hi),
        moment_at_value: moment,
    })
}

/// psi_2 norm of a single neuron (1-D reduction, exact pieces).
pub fn neuron_psi2(p: &NeuronParams, quad: &QuadratureSpec) -> Result<Psi2Estimate, SubgaussianError> {
    psi2_norm(&ReluSum::from_neuron(p), quad)
}

/// psi_2 distance of two neurons (at most a 2-D reduction).
pub fn neuron_psi2_distance(
    p: &NeuronParams,
    q: &NeuronParams,
    quad: &QuadratureSpec,
) -> Result<f64, SubgaussianError> {
    let f = ReluSum::from_neuron(p).difference(&ReluSum::from_neuron(q))?;
    Ok(psi2_norm(&f, quad)?.value)
}

/// psi_2 distance of two same-size networks: exact when the difference
/// reduces within the cap, otherwise the per-neuron triangle upper bound
/// `sum_i psi2(phi_{p_i} - phi_{q_i})`.
pub fn psi2_distance(
    p: &NetworkParams,
    q: &NetworkParams,
    quad: &QuadratureSpec,
) -> Result<f64, SubgaussianError> {
    let f = ReluSum::from_network(p).difference(&ReluSum::from_network(q))?;
    match psi2_norm(&f, quad) {
        Ok(est) => Ok(est.value),
        Err(SubgaussianError::UnsupportedReduction { .. }) => {
            if p.len() != q.len() {
                return Err(SubgaussianError::SizeMismatch {
                    left: p.len(),
                    right: q.len(),
                });
            }
            let mut total = 0.0;
            for (a, b) in p.neurons.iter().zip(&q.neurons) {
                total += neuron_psi2_distance(a, b, quad)?;
            }
            Ok(total)
        }
        Err(e) => Err(e),
    }
}

/// Triangle upper bound `sum_i psi2(phi_{p_i})` on the network psi_2 norm.
pub fn network_psi2_upper(
    net: &NetworkParams,
    quad: &QuadratureSpec,
) -> Result<f64, SubgaussianError> {
    let mut total = 0.0;
    for p in &net.neurons {
        total += neuron_psi2(p, quad)?.value;
    }
    Ok(total)
}

#[derive(Debug, Clone, Serialize)]
pub struct RadiusViolation {
    pub index: usize,
    pub psi2: f64,
}

/// Outcome of sampling the neuron class against the `2 c_w` radius bound.
#[derive(Debug, Clone, Serialize)]
pub struct RadiusReport {
    pub samples: usize,
    pub max_psi2: f64,
    pub bound: f64,
    pub tolerance: f64,
    pub violations: Vec<RadiusViolation>,
}

/// Samples `count` admissible neurons and compares each psi_2 norm against
/// the radius bound `2 c_w`; violations beyond `1e-4` are listed (the bound
/// is a theorem, so none are expected).
pub fn check_radius(
    cls: &ParameterClass,
    count: usize,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<RadiusReport, SubgaussianError> {
    if cls.n != 1 {
        return Err(ModelError::InvalidParameter(
            "radius check is defined on single-neuron classes (n = 1)".into(),
        )
        .into());
    }
    let tolerance = 1e-4;
    let bound = 2.0 * cls.c_w;
    let mut max_psi2 = 0.0f64;
    let mut violations = Vec::new();
    let mut rng = stream(seed, StreamKind::Family, 0);
    for index in 0..count {
        let p = crate::model::sample_neuron(cls, &mut rng);
        let est = neuron_psi2(&p, quad)?;
        max_psi2 = max_psi2.max(est.value);
        if est.value > bound + tolerance {
            violations.push(RadiusViolation {
                index,
                psi2: est.value,
            });
        }
    }
    Ok(RadiusReport {
        samples: count,
        max_psi2,
        bound,
        tolerance,
        violations,
    })
}

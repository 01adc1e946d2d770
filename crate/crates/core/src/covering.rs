//! Constructive epsilon-nets for neuron and network classes in the
//! sub-Gaussian metric.
//!
//! The construction discretizes three coordinates independently: the weight
//! direction (an angle cover of the projective sphere), the weight norm
//! (levels of spacing `delta`), and the bias ratio `b/||w||` (levels of
//! spacing `rho`). With the parameter choices `gamma = eps/(8 c_w)`,
//! `delta = eps/(16 c_b)`, `rho = eps/(16 c_w)` the enumerated set is an
//! eps-net of the admissible neuron class; network nets are n-fold products
//! of eps/n neuron nets. Closed-form covering-number bounds are evaluated in
//! log space and clamp to 1 once eps reaches the class radius `2 n c_w`.

use crate::model::{
    max_bias_ratio, validate_membership, Kappa, ModelError, NetworkParams, NeuronParams,
    ParameterClass,
};
use crate::quad::QuadratureSpec;
use crate::rng::{stream, StreamKind};
use crate::subgaussian::{neuron_psi2_distance, SubgaussianError};
use rand_distr::{Distribution, StandardNormal};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Default cap on materialized net cardinality.
pub const DEFAULT_ENUMERATION_CAP: u128 = 10_000_000;

#[derive(Debug, Error)]
pub enum CoveringError {
    #[error("gamma must lie in (0, pi], got {0}")]
    InvalidGamma(f64),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("c_b = {c_b} exceeds the net-validity limit {limit}")]
    BiasCapBeyondValidity { c_b: f64, limit: f64 },
    #[error("neuron violates the class constraints required by the grid")]
    Membership,
    #[error("class must have n = 1 for a neuron net")]
    NotNeuronClass,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Subgaussian(#[from] SubgaussianError),
}

/// Largest bias-ratio cap for which the net construction is proven valid,
/// `(sqrt(pi/(8 e^2)) - 1/8) * cos(1/4) / (1 - cos(1/4)) ~= 3.289`.
pub fn bias_cap_validity_limit() -> f64 {
    let c = (0.25f64).cos();
    ((PI / (8.0 * std::f64::consts::E * std::f64::consts::E)).sqrt() - 0.125) * c / (1.0 - c)
}

/// Line angle between `w` and `v` with antipodes identified, in `[0, pi/2]`;
/// zero when either argument is the zero vector.
pub fn angle(w: &[f64], v: &[f64]) -> f64 {
    let nw = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nw == 0.0 || nv == 0.0 {
        return 0.0;
    }
    let dot: f64 = w.iter().zip(v).map(|(a, b)| a * b).sum();
    (dot.abs() / (nw * nv)).min(1.0).acos()
}

/// Floor with a relative nudge: quotients that are integers up to 1e-9
/// relative error (exactly representable rationals that merely rounded in
/// the division) floor to that integer.
pub fn floor_stable(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * r.abs().max(1.0) {
        r
    } else {
        x.floor()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoverConstruction {
    ExactGrid2d,
    GreedyPacking,
    SingleDirection,
}

/// Finite set of unit directions within line-angle `gamma` of any direction.
#[derive(Debug, Clone, Serialize)]
pub struct AngleCover {
    pub directions: Vec<Vec<f64>>,
    pub gamma: f64,
    pub construction: CoverConstruction,
    /// Max over verification probes of the min line-angle to the cover
    /// (exact grids certify analytically and report their grid half-step).
    pub verified_distortion: f64,
    pub verification_probes: usize,
}

impl AngleCover {
    /// Index, aligned direction (sign flipped so `<w, dir> >= 0`), and line
    /// angle of the nearest cover direction.
    pub fn nearest(&self, w: &[f64]) -> (usize, Vec<f64>, f64) {
        let mut best = (0usize, f64::INFINITY);
        for (i, dir) in self.directions.iter().enumerate() {
            let a = angle(w, dir);
            if a < best.1 {
                best = (i, a);
            }
        }
        let dir = &self.directions[best.0];
        let dot: f64 = w.iter().zip(dir).map(|(a, b)| a * b).sum();
        let aligned = if dot < 0.0 {
            dir.iter().map(|x| -x).collect()
        } else {
            dir.clone()
        };
        (best.0, aligned, best.1)
    }
}

/// Paper-form bound on the angle covering number of the sphere,
/// `(1 + 1/sin(gamma/2))^d`.
pub fn angle_covering_number_bound(d: usize, gamma: f64) -> f64 {
    (1.0 + 1.0 / (0.5 * gamma).sin()).powi(d as i32)
}

/// Angle cover of the projective sphere in dimension `d` with distortion at
/// most `gamma`: a single direction for `d = 1`, the exact half-circle grid
/// of `ceil(pi / (2 gamma))` lines for `d = 2`, and a greedy maximal packing
/// at Euclidean radius `sqrt(2 - 2 cos gamma)` for `d >= 3` (maximal
/// packings cover; any verification probe left uncovered joins the packing).
pub fn angle_cover(d: usize, gamma: f64) -> Result<AngleCover, CoveringError> {
    angle_cover_with_probes(d, gamma, 10_000)
}

pub fn angle_cover_with_probes(
    d: usize,
    gamma: f64,
    probes: usize,
) -> Result<AngleCover, CoveringError> {
    if !(gamma > 0.0 && gamma <= PI) {
        return Err(CoveringError::InvalidGamma(gamma));
    }
    if d == 0 {
        return Err(CoveringError::Model(ModelError::InvalidParameter(
            "dimension must be at least 1".into(),
        )));
    }
    if d == 1 {
        return Ok(AngleCover {
            directions: vec![vec![1.0]],
            gamma,
            construction: CoverConstruction::SingleDirection,
            verified_distortion: 0.0,
            verification_probes: 0,
        });
    }
    if d == 2 {
        let lines = (PI / (2.0 * gamma)).ceil().max(1.0) as usize;
        let directions = (0..lines)
            .map(|k| {
                let theta = k as f64 * PI / lines as f64;
                vec![theta.cos(), theta.sin()]
            })
            .collect();
        return Ok(AngleCover {
            directions,
            gamma,
            construction: CoverConstruction::ExactGrid2d,
            verified_distortion: PI / (2.0 * lines as f64),
            verification_probes: 0,
        });
    }

    // Greedy maximal packing; deterministic via a seed derived from (d, gamma).
    let seed = 0x636f_7665u64 ^ ((d as u64) << 32) ^ gamma.to_bits();
    let mut rng = stream(seed, StreamKind::Cover, 0);
    fn draw<R: rand::Rng>(d: usize, rng: &mut R) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n > 1e-12 {
                return v.into_iter().map(|x| x / n).collect();
            }
        }
    }
    let mut directions: Vec<Vec<f64>> = Vec::new();
    let mut rejected = 0usize;
    while rejected < 4000 + 200 * directions.len() {
        let cand = draw(d, &mut rng);
        if directions.iter().all(|dir| angle(&cand, dir) > gamma) {
            directions.push(cand);
            rejected = 0;
        } else {
            rejected += 1;
        }
    }
    // Verification probes; stragglers join the packing.
    let mut probe_rng = stream(seed, StreamKind::Probes, 1);
    let mut probe_set = Vec::with_capacity(probes);
    for _ in 0..probes {
        probe_set.push(draw(d, &mut probe_rng));
    }
    for probe in &probe_set {
        if directions.iter().all(|dir| angle(probe, dir) > gamma) {
            directions.push(probe.clone());
        }
    }
    let verified_distortion = probe_set
        .iter()
        .map(|p| {
            directions
                .iter()
                .map(|dir| angle(p, dir))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0f64, f64::max);
    let packing_radius = (2.0 - 2.0 * gamma.cos()).sqrt();
    let cap = (1.0 + 4.0 / packing_radius).powi(d as i32);
    debug_assert!((directions.len() as f64) <= cap);
    Ok(AngleCover {
        directions,
        gamma,
        construction: CoverConstruction::GreedyPacking,
        verified_distortion,
        verification_probes: probes,
    })
}

/// Level grids for the weight norm and the bias ratio.
#[derive(Debug, Clone, Serialize)]
pub struct DiscretizationGrid {
    pub gamma: f64,
    pub delta: f64,
    pub rho: f64,
    pub c_w: f64,
    pub c_b: f64,
    pub c_delta: u64,
    pub c_rho: u64,
}

impl DiscretizationGrid {
    pub fn new(gamma: f64, delta: f64, rho: f64, c_w: f64, c_b: f64) -> Self {
        let c_delta = floor_stable(c_w / delta) as u64;
        let c_rho = floor_stable(c_b / rho) as u64;
        Self {
            gamma,
            delta,
            rho,
            c_w,
            c_b,
            c_delta,
            c_rho,
        }
    }

    /// Grid with the net construction's parameter choices
    /// `gamma = eps/(8 c_w)`, `delta = eps/(16 c_b)`, `rho = eps/(16 c_w)`.
    pub fn for_epsilon(epsilon: f64, c_w: f64, c_b: f64) -> Self {
        Self::new(
            epsilon / (8.0 * c_w),
            epsilon / (16.0 * c_b),
            epsilon / (16.0 * c_w),
            c_w,
            c_b,
        )
    }

    pub fn lambda_levels(&self) -> impl Iterator<Item = f64> + '_ {
        (0..=self.c_delta).map(move |k| k as f64 * self.delta)
    }

    pub fn b_levels(&self) -> impl Iterator<Item = f64> + '_ {
        let c = self.c_rho as i64;
        (-c..=c).map(move |k| k as f64 * self.rho)
    }

    pub fn nearest_lambda(&self, norm: f64) -> f64 {
        let k = (norm / self.delta).round().clamp(0.0, self.c_delta as f64);
        k * self.delta
    }

    pub fn nearest_b(&self, ratio: f64) -> f64 {
        let c = self.c_rho as f64;
        let k = (ratio / self.rho).round().clamp(-c, c);
        k * self.rho
    }
}

/// Quantities tying a discretized neuron back to its source, together with
/// the bounds each of them provably satisfies (all recomputable from the
/// returned values with plain arithmetic).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DiscretizationCertificate {
    /// Line angle between the source weight and the chosen direction.
    pub beta: f64,
    pub gamma: f64,
    pub weight_gap_sq: f64,
    /// `delta^2 + 2 (1 - cos beta) c_w^2`.
    pub weight_gap_bound: f64,
    pub value_gap_at_zero: f64,
    /// `rho c_w + delta (c_rho rho)`.
    pub value_gap_bound: f64,
    /// Offsets of the two hyperplanes along each other's weight axes.
    pub rho_w: f64,
    pub rho_w_tilde: f64,
    /// `rho + (1/cos beta - 1) c_b`.
    pub rho_bound: f64,
}

/// Nearest grid member of an admissible neuron: direction from the angle
/// cover (sign-aligned), norm and bias ratio from the level grids.
pub fn discretize_neuron(
    p: &NeuronParams,
    grid: &DiscretizationGrid,
    cover: &AngleCover,
) -> Result<(NeuronParams, DiscretizationCertificate), CoveringError> {
    let norm = p.weight_norm();
    let slack = 1.0 + 1e-12;
    if norm > grid.c_w * slack {
        return Err(CoveringError::Membership);
    }
    if norm == 0.0 {
        if p.b != 0.0 {
            return Err(CoveringError::Membership);
        }
        let zero = NeuronParams::zero(p.dim());
        return Ok((
            zero,
            DiscretizationCertificate {
                beta: 0.0,
                gamma: grid.gamma,
                weight_gap_sq: 0.0,
                weight_gap_bound: grid.delta * grid.delta,
                value_gap_at_zero: 0.0,
                value_gap_bound: grid.rho * grid.c_w
                    + grid.delta * (grid.c_rho as f64 * grid.rho),
                rho_w: 0.0,
                rho_w_tilde: 0.0,
                rho_bound: grid.rho,
            },
        ));
    }
    let ratio = p.b / norm;
    if ratio < -grid.c_b * slack - 1e-12 || ratio > grid.c_b * slack + 1e-12 {
        return Err(CoveringError::Membership);
    }

    let (_, aligned, beta) = cover.nearest(&p.w);
    let lambda = grid.nearest_lambda(norm);
    let b_level = grid.nearest_b(ratio);
    let out = if lambda == 0.0 {
        NeuronParams::zero(p.dim())
    } else {
        NeuronParams {
            w: aligned.iter().map(|x| lambda * x).collect(),
            b: lambda * b_level,
            kappa: p.kappa,
        }
    };

    let weight_gap_sq = p
        .w
        .iter()
        .zip(&out.w)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>();
    let cos_beta = beta.cos();
    let value_gap = (p.b.max(0.0) - out.b.max(0.0)).abs();
    let rho_w = (p.b / (norm * cos_beta) - b_level).abs();
    let rho_w_tilde = (ratio - b_level / cos_beta).abs();
    Ok((
        out,
        DiscretizationCertificate {
            beta,
            gamma: grid.gamma,
            weight_gap_sq,
            weight_gap_bound: grid.delta * grid.delta
                + 2.0 * (1.0 - cos_beta) * grid.c_w * grid.c_w,
            value_gap_at_zero: value_gap,
            value_gap_bound: grid.rho * grid.c_w + grid.delta * (grid.c_rho as f64 * grid.rho),
            rho_w,
            rho_w_tilde,
            rho_bound: grid.rho + (1.0 / cos_beta - 1.0) * grid.c_b,
        },
    ))
}

/// Closed-form bound on the sub-Gaussian covering number of the class
/// (log form); `0` once `eps >= 2 n c_w`.
pub fn covering_number_bound_log(cls: &ParameterClass, epsilon: f64) -> f64 {
    assert!(epsilon > 0.0, "epsilon must be positive");
    let n = cls.n as f64;
    if epsilon >= 2.0 * n * cls.c_w {
        return 0.0;
    }
    let a = floor_stable(16.0 * n * cls.c_b * cls.c_w / epsilon + 1.0);
    let b = floor_stable(32.0 * n * cls.c_b * cls.c_w / epsilon + 1.0);
    let sine = (epsilon / (16.0 * n * cls.c_w)).sin();
    n * std::f64::consts::LN_2
        + n * a.ln()
        + n * b.ln()
        + n * cls.d as f64 * (1.0 + 1.0 / sine).ln()
}

/// Closed-form covering-number bound
/// `2^n * floor(16 n c_b c_w / eps + 1)^n * floor(32 n c_b c_w / eps + 1)^n *
/// (1 + 1/sin(eps/(16 n c_w)))^(n d)`, clamped to 1 for `eps >= 2 n c_w`;
/// computed directly (not via exp of the log) whenever it fits in an f64.
pub fn covering_number_bound(cls: &ParameterClass, epsilon: f64) -> f64 {
    let log = covering_number_bound_log(cls, epsilon);
    if log == 0.0 {
        return 1.0;
    }
    if log > 700.0 {
        return f64::INFINITY;
    }
    let n = cls.n as f64;
    let a = floor_stable(16.0 * n * cls.c_b * cls.c_w / epsilon + 1.0);
    let b = floor_stable(32.0 * n * cls.c_b * cls.c_w / epsilon + 1.0);
    let sine = (epsilon / (16.0 * n * cls.c_w)).sin();
    let per_neuron = 2.0 * a * b * (1.0 + 1.0 / sine).powi(cls.d as i32);
    per_neuron.powi(cls.n as i32)
}

/// Vanishing-bias covering bound
/// `2 floor(2 sqrt2 c_w / eps + 1) (1 + 1/sin(eps/(4 sqrt2 c_w)))^d`.
pub fn zero_bias_covering_bound(d: usize, c_w: f64, epsilon: f64) -> f64 {
    if epsilon >= 2.0 * c_w {
        return 1.0;
    }
    let a = floor_stable(2.0 * std::f64::consts::SQRT_2 * c_w / epsilon + 1.0);
    let sine = (epsilon / (4.0 * std::f64::consts::SQRT_2 * c_w)).sin();
    2.0 * a * (1.0 + 1.0 / sine).powi(d as i32)
}

/// Enumerated neuron-level net with its construction data.
#[derive(Debug, Clone, Serialize)]
pub struct NeuronNet {
    pub members: Vec<NeuronParams>,
    pub grid: DiscretizationGrid,
    #[serde(skip)]
    pub cover: AngleCover,
    pub epsilon: f64,
    /// True when `eps >= 2 c_w` collapsed the net to the zero neuron.
    pub zero_only: bool,
}

impl NeuronNet {
    /// The member the construction assigns to an admissible neuron.
    pub fn canonical(&self, p: &NeuronParams) -> Result<NeuronParams, CoveringError> {
        if self.zero_only || p.weight_norm() == 0.0 {
            return Ok(NeuronParams::zero(p.dim()));
        }
        Ok(discretize_neuron(p, &self.grid, &self.cover)?.0)
    }

    /// Canonical member plus its neighbors one level off in each coordinate.
    pub fn candidates(&self, p: &NeuronParams) -> Result<Vec<NeuronParams>, CoveringError> {
        if self.zero_only || p.weight_norm() == 0.0 {
            return Ok(vec![NeuronParams::zero(p.dim())]);
        }
        let norm = p.weight_norm();
        let ratio = p.b / norm;
        let (_, aligned, _) = self.cover.nearest(&p.w);
        let lambda0 = self.grid.nearest_lambda(norm);
        let b0 = self.grid.nearest_b(ratio);
        let mut out = Vec::new();
        for dl in [-1.0, 0.0, 1.0] {
            let lambda = lambda0 + dl * self.grid.delta;
            if lambda < -1e-12 || lambda > (self.grid.c_delta as f64 + 0.5) * self.grid.delta {
                continue;
            }
            let lambda = lambda.max(0.0);
            for db in [-1.0, 0.0, 1.0] {
                let b = b0 + db * self.grid.rho;
                if b.abs() > (self.grid.c_rho as f64 + 0.5) * self.grid.rho {
                    continue;
                }
                if lambda == 0.0 {
                    out.push(NeuronParams::zero(p.dim()));
                    continue;
                }
                out.push(NeuronParams {
                    w: aligned.iter().map(|x| lambda * x).collect(),
                    b: lambda * b,
                    kappa: p.kappa,
                });
            }
        }
        out.dedup_by(|a, b| a == b);
        Ok(out)
    }

    /// Min psi_2 distance from `p` to the candidate members (an upper bound
    /// on the distance to the full net, which is what validity checks need).
    pub fn nearest_distance(
        &self,
        p: &NeuronParams,
        quad: &QuadratureSpec,
    ) -> Result<f64, CoveringError> {
        let mut best = f64::INFINITY;
        for cand in self.candidates(p)? {
            let d = neuron_psi2_distance(p, &cand, quad)?;
            best = best.min(d);
        }
        Ok(best)
    }
}

/// How an epsilon-net was built; serialized into net exports.
#[derive(Debug, Clone, Serialize)]
pub struct NetConstruction {
    pub gamma: f64,
    pub delta: f64,
    pub rho: f64,
    pub cover_kind: CoverConstruction,
    pub cover_size: usize,
    pub zero_only: bool,
}

/// Epsilon-net of a network class: the n-fold product of an eps/n neuron
/// net, materialized when its cardinality stays under the enumeration cap.
#[derive(Debug, Clone)]
pub struct EpsilonNet {
    pub epsilon: f64,
    pub cls: ParameterClass,
    pub cardinality_bound: f64,
    pub neuron_net: NeuronNet,
    /// Materialized product members; `None` when the predicted cardinality
    /// exceeds the cap (the product description in `neuron_net` stands in).
    pub members: Option<Vec<NetworkParams>>,
}

impl EpsilonNet {
    pub fn cardinality(&self) -> f64 {
        (self.neuron_net.members.len() as f64).powi(self.cls.n as i32)
    }

    pub fn construction(&self) -> NetConstruction {
        NetConstruction {
            gamma: self.neuron_net.grid.gamma,
            delta: self.neuron_net.grid.delta,
            rho: self.neuron_net.grid.rho,
            cover_kind: self.neuron_net.cover.construction,
            cover_size: self.neuron_net.cover.directions.len(),
            zero_only: self.neuron_net.zero_only,
        }
    }

    /// Upper bound on the min psi_2 distance from `net` to the product net:
    /// the per-neuron candidate minimum, summed (exact for n = 1).
    pub fn nearest_distance(
        &self,
        net: &NetworkParams,
        quad: &QuadratureSpec,
    ) -> Result<f64, CoveringError> {
        let mut total = 0.0;
        for p in &net.neurons {
            total += self.neuron_net.nearest_distance(p, quad)?;
        }
        Ok(total)
    }

    /// JSON-lines export of the materialized members.
    pub fn to_jsonl(&self) -> Option<String> {
        self.members.as_ref().map(|members| {
            let mut out = String::new();
            for m in members {
                out.push_str(&serde_json::to_string(m).expect("network serializes"));
                out.push('\n');
            }
            out
        })
    }
}

fn build_neuron_members(
    grid: &DiscretizationGrid,
    cover: &AngleCover,
    d: usize,
) -> Vec<NeuronParams> {
    // b levels are pruned above the first level >= sqrt(ln 2): admissible
    // ratios never select higher ones, and pruning keeps every member's
    // ratio within the relaxed admissibility window.
    let top = max_bias_ratio();
    let mut b_levels: Vec<f64> = Vec::new();
    for b in grid.b_levels() {
        b_levels.push(b);
        if b >= top {
            break;
        }
    }
    let mut members = vec![NeuronParams::zero(d)];
    for kappa in [Kappa::Plus, Kappa::Minus] {
        for lambda in grid.lambda_levels() {
            if lambda == 0.0 {
                continue; // collapses to the zero neuron
            }
            for &b in &b_levels {
                for dir in &cover.directions {
                    members.push(NeuronParams {
                        w: dir.iter().map(|x| lambda * x).collect(),
                        b: lambda * b,
                        kappa,
                    });
                }
            }
        }
    }
    members
}

/// Neuron-level eps-net for an `n = 1` class (singleton zero-neuron net once
/// `eps >= 2 c_w`).
pub fn build_neuron_net(cls: &ParameterClass, epsilon: f64) -> Result<EpsilonNet, CoveringError> {
    if cls.n != 1 {
        return Err(CoveringError::NotNeuronClass);
    }
    build_product_net(cls, epsilon, DEFAULT_ENUMERATION_CAP)
}

/// Product eps-net for an n-neuron class: each factor is an eps/n neuron
/// net. Materialization is refused beyond `cap` members.
pub fn build_network_net(
    cls: &ParameterClass,
    epsilon: f64,
    cap: Option<u128>,
) -> Result<EpsilonNet, CoveringError> {
    build_product_net(cls, epsilon, cap.unwrap_or(DEFAULT_ENUMERATION_CAP))
}

fn build_product_net(
    cls: &ParameterClass,
    epsilon: f64,
    cap: u128,
) -> Result<EpsilonNet, CoveringError> {
    if !(epsilon > 0.0) {
        return Err(CoveringError::InvalidEpsilon(epsilon));
    }
    let limit = bias_cap_validity_limit();
    if cls.c_b > limit {
        return Err(CoveringError::BiasCapBeyondValidity { c_b: cls.c_b, limit });
    }
    let eps_neuron = epsilon / cls.n as f64;
    let neuron_net = if eps_neuron >= 2.0 * cls.c_w {
        NeuronNet {
            members: vec![NeuronParams::zero(cls.d)],
            grid: DiscretizationGrid::for_epsilon(2.0 * cls.c_w, cls.c_w, cls.c_b),
            cover: angle_cover(cls.d, PI / 2.0)?,
            epsilon: eps_neuron,
            zero_only: true,
        }
    } else {
        let grid = DiscretizationGrid::for_epsilon(eps_neuron, cls.c_w, cls.c_b);
        let cover = angle_cover(cls.d, grid.gamma)?;
        let members = build_neuron_members(&grid, &cover, cls.d);
        NeuronNet {
            members,
            grid,
            cover,
            epsilon: eps_neuron,
            zero_only: false,
        }
    };

    let bound = covering_number_bound(cls, epsilon);
    let m = neuron_net.members.len() as u128;
    let count = m.checked_pow(cls.n as u32);
    debug_assert!(
        bound.is_infinite() || count.map(|c| c as f64 <= bound).unwrap_or(false),
        "constructed cardinality exceeds the closed-form bound"
    );
    let members = match count {
        Some(c) if c <= cap => Some(materialize_product(&neuron_net.members, cls.n)),
        _ => None,
    };
    Ok(EpsilonNet {
        epsilon,
        cls: *cls,
        cardinality_bound: bound,
        neuron_net,
        members,
    })
}

fn materialize_product(neurons: &[NeuronParams], n: usize) -> Vec<NetworkParams> {
    let mut out = Vec::with_capacity(neurons.len().pow(n as u32));
    let mut idx = vec![0usize; n];
    loop {
        out.push(
            NetworkParams::new(idx.iter().map(|&i| neurons[i].clone()).collect())
                .expect("product members are well-formed"),
        );
        let mut k = 0;
        loop {
            if k == n {
                return out;
            }
            idx[k] += 1;
            if idx[k] < neurons.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Vanishing-bias specialization: all biases zero, parameters
/// `delta = eps/(2 sqrt2)`, `gamma = eps/(2 sqrt2 c_w)`.
pub fn build_zero_bias_neuron_net(
    d: usize,
    c_w: f64,
    epsilon: f64,
) -> Result<NeuronNet, CoveringError> {
    if !(epsilon > 0.0) {
        return Err(CoveringError::InvalidEpsilon(epsilon));
    }
    if epsilon >= 2.0 * c_w {
        return Ok(NeuronNet {
            members: vec![NeuronParams::zero(d)],
            grid: DiscretizationGrid::new(PI / 2.0, epsilon, epsilon, c_w, 0.0),
            cover: angle_cover(d, PI / 2.0)?,
            epsilon,
            zero_only: true,
        });
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let gamma = epsilon / (2.0 * sqrt2 * c_w);
    let delta = epsilon / (2.0 * sqrt2);
    let grid = DiscretizationGrid::new(gamma, delta, delta, c_w, 0.0);
    let cover = angle_cover(d, gamma)?;
    let members = build_neuron_members(&grid, &cover, d);
    debug_assert!((members.len() as f64) <= zero_bias_covering_bound(d, c_w, epsilon));
    Ok(NeuronNet {
        members,
        grid,
        cover,
        epsilon,
        zero_only: false,
    })
}

/// Membership check for net members: weight norm within `c_w`, bias ratio
/// within the grid window `[-c_b - rho, sqrt(ln 2) + rho]` (one level of
/// overshoot from the pruned grid).
pub fn relaxed_member_check(p: &NeuronParams, cls: &ParameterClass, rho: f64) -> bool {
    let norm = p.weight_norm();
    if norm > cls.c_w * (1.0 + 1e-9) {
        return false;
    }
    if norm == 0.0 {
        return p.b == 0.0;
    }
    let ratio = p.b / norm;
    ratio >= -cls.c_b - rho - 1e-12 && ratio <= max_bias_ratio() + rho + 1e-12
}

/// Exact membership check used by probing harnesses.
pub fn is_admissible(net: &NetworkParams, cls: &ParameterClass) -> bool {
    validate_membership(net, cls).pass
}

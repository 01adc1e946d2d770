//! Seeded Monte-Carlo experiments verifying the concentration and
//! generalization statements at desk scale.
//!
//! Continuous suprema are approximated by finite sampled families, so every
//! measured quantity is a lower bound of the corresponding supremum; the
//! checks remain valid necessary conditions because each theorem bounds the
//! supremum from above. Reports are deterministic for a fixed master seed:
//! trials own derived counter-based streams and rows merge in trial order.

use crate::bounds::{neurips_confidence, Confidence};
use crate::chaining::{
    deviation_bound, dudley_integral, ChainingError, DistanceMatrix, EntropyProfile,
};
use crate::covering::{build_network_net, CoveringError};
use crate::gaussian::{
    draw_samples, empirical_risk, mu_distance, network_mu_norm_sq, values_on, GaussianError,
    SampleSet,
};
use crate::model::{
    sample_network, validate_membership, ModelError, NetworkParams, NeuronParams, ParameterClass,
};
use crate::quad::QuadratureSpec;
use crate::report::CsvTable;
use crate::rng::{derive_seed, stream, StreamKind};
use crate::subgaussian::{network_psi2_upper, psi2_norm, ReluSum, SubgaussianError};
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("family member {index} has (numerically) zero mu-norm")]
    ZeroMuNorm { index: usize },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Gaussian(#[from] GaussianError),
    #[error(transparent)]
    Subgaussian(#[from] SubgaussianError),
    #[error(transparent)]
    Chaining(#[from] ChainingError),
    #[error(transparent)]
    Covering(#[from] CoveringError),
}

/// Runs `f` inside a rayon pool capped at `threads` (or the default pool).
pub fn run_with_threads<R: Send>(threads: Option<usize>, f: impl FnOnce() -> R + Send) -> R {
    match threads {
        Some(n) if n > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .expect("thread pool")
            .install(f),
        _ => f(),
    }
}

/// Least-squares slope of `ln y` against `ln x`; `None` for degenerate input.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 || points.iter().any(|&(x, y)| x <= 0.0 || y <= 0.0) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// `max_i |(norm_m phi_i)^2 - (norm_mu phi_i)^2| / (norm_mu phi_i)^2` over a
/// finite family: a lower bound of the class supremum.
pub fn estimate_sup_deviation(
    family: &[NetworkParams],
    s: &SampleSet,
    mu_norms_sq: &[f64],
) -> Result<f64, HarnessError> {
    assert_eq!(family.len(), mu_norms_sq.len());
    if let Some(index) = mu_norms_sq.iter().position(|&v| !(v > 0.0)) {
        return Err(HarnessError::ZeroMuNorm { index });
    }
    let mut sup = 0.0f64;
    for (net, &mu_sq) in family.iter().zip(mu_norms_sq) {
        let vals = values_on(net, s);
        let emp_sq = vals.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
        sup = sup.max((emp_sq - mu_sq).abs() / mu_sq);
    }
    Ok(sup)
}

/// Network psi_2 norm: exact within the reduction cap, otherwise the
/// per-neuron triangle upper bound.
fn network_psi2_value(net: &NetworkParams, quad: &QuadratureSpec) -> Result<f64, HarnessError> {
    match psi2_norm(&ReluSum::from_network(net), quad) {
        Ok(est) => Ok(est.value),
        Err(SubgaussianError::UnsupportedReduction { .. }) => {
            Ok(network_psi2_upper(net, quad)?)
        }
        Err(e) => Err(e.into()),
    }
}

fn psi2_distance_matrix(
    family: &[NetworkParams],
    quad: &QuadratureSpec,
) -> Result<DistanceMatrix, HarnessError> {
    let n = family.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let dists: Vec<Result<f64, HarnessError>> = pairs
        .par_iter()
        .map(|&(i, j)| crate::subgaussian::psi2_distance(&family[i], &family[j], quad).map_err(Into::into))
        .collect();
    let mut data = vec![0.0; n * n];
    for (&(i, j), d) in pairs.iter().zip(dists) {
        let d = d?;
        data[i * n + j] = d;
        data[j * n + i] = d;
    }
    Ok(DistanceMatrix::new(n, data)?)
}

// ---------------------------------------------------------------------------
// Uniform concentration (restricted isometry) verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NeuripsConfig {
    pub cls: ParameterClass,
    /// Number of sampled normalized networks standing in for the class.
    pub family_size: usize,
    pub m: usize,
    pub s: f64,
    pub u: f64,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeuripsTrial {
    pub trial_id: u64,
    pub seed: u64,
    /// Relative sup deviation over the family.
    pub s_tilde: f64,
    /// Absolute sup deviation (family is normalized, so nearly identical).
    pub sup_abs_deviation: f64,
    pub pass: bool,
    pub exceeds_deviation_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct NeuripsReport {
    pub config: NeuripsConfig,
    /// Dudley value of the measured psi_2 distances of the family.
    pub n_measured: f64,
    /// Max measured psi_2 norm over the family.
    pub delta_measured: f64,
    pub deviation_bound: f64,
    pub theoretical_confidence: Confidence,
    pub fraction_pass: f64,
    pub violation_fraction: f64,
    /// Finite families lower-bound the class supremum; pass fractions are
    /// necessary, not sufficient, evidence for the class-level event.
    pub semantics: &'static str,
    pub trials: Vec<NeuripsTrial>,
}

impl NeuripsReport {
    pub fn csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&[
            "trial_id",
            "seed",
            "s_tilde",
            "sup_abs_deviation",
            "pass",
            "exceeds_deviation_bound",
        ]);
        for row in &self.trials {
            t.push(vec![
                row.trial_id.into(),
                row.seed.into(),
                row.s_tilde.into(),
                row.sup_abs_deviation.into(),
                row.pass.into(),
                row.exceeds_deviation_bound.into(),
            ]);
        }
        t
    }
}

/// Samples a family from the class and normalizes each member to mu-norm 1
/// (members with numerically zero norm are redrawn from their own stream).
pub fn normalized_family(
    cls: &ParameterClass,
    count: usize,
    seed: u64,
    quad: &QuadratureSpec,
) -> Result<Vec<NetworkParams>, HarnessError> {
    (0..count)
        .into_par_iter()
        .map(|slot| {
            let mut rng = stream(seed, StreamKind::Family, slot as u64);
            for _ in 0..1000 {
                let net = sample_network(cls, &mut rng);
                let mu_sq = network_mu_norm_sq(&net, quad)?;
                if mu_sq > 1e-12 {
                    return Ok(net.scaled(1.0 / mu_sq.sqrt()));
                }
            }
            Err(HarnessError::ZeroMuNorm { index: slot })
        })
        .collect()
}

/// Runs `trials` independent sample draws against a fixed normalized family;
/// each trial reports the sup deviation, the event flag `s_tilde <= s`, and
/// whether the measured deviation exceeded the tail bound evaluated at the
/// family's own Dudley value and radius.
pub fn verify_neurips(cfg: &NeuripsConfig) -> Result<NeuripsReport, HarnessError> {
    if cfg.family_size == 0 || cfg.trials == 0 || cfg.m == 0 {
        return Err(HarnessError::InvalidConfig(
            "family_size, m, and trials must be positive".into(),
        ));
    }
    if !(cfg.s > 0.0) {
        return Err(HarnessError::InvalidConfig("s must be positive".into()));
    }
    let family = normalized_family(&cfg.cls, cfg.family_size, cfg.seed, &cfg.quad)?;
    let mu_sq: Vec<f64> = family
        .iter()
        .map(|net| network_mu_norm_sq(net, &cfg.quad))
        .collect::<Result<_, _>>()?;

    let dists = psi2_distance_matrix(&family, &cfg.quad)?;
    let n_measured = dudley_integral(&EntropyProfile::measured(&dists), &cfg.quad)?;
    let psi2s: Vec<f64> = family
        .par_iter()
        .map(|net| network_psi2_value(net, &cfg.quad))
        .collect::<Result<_, _>>()?;
    let delta_measured = psi2s.iter().copied().fold(0.0f64, f64::max);
    let bound = deviation_bound(cfg.u, cfg.m, n_measured, delta_measured)?;

    let trials: Vec<NeuripsTrial> = (0..cfg.trials as u64)
        .into_par_iter()
        .map(|trial_id| {
            let trial_seed = derive_seed(cfg.seed, trial_id);
            let s_set = draw_samples(cfg.m, cfg.cls.d, trial_seed, None, None);
            let mut s_tilde = 0.0f64;
            let mut sup_abs = 0.0f64;
            for (net, &mu) in family.iter().zip(&mu_sq) {
                let vals = values_on(net, &s_set);
                let emp_sq = vals.iter().map(|v| v * v).sum::<f64>() / cfg.m as f64;
                s_tilde = s_tilde.max((emp_sq - mu).abs() / mu);
                sup_abs = sup_abs.max((emp_sq - mu).abs());
            }
            NeuripsTrial {
                trial_id,
                seed: trial_seed,
                s_tilde,
                sup_abs_deviation: sup_abs,
                pass: s_tilde <= cfg.s,
                exceeds_deviation_bound: sup_abs > bound,
            }
        })
        .collect();

    let fraction_pass = trials.iter().filter(|t| t.pass).count() as f64 / trials.len() as f64;
    let violation_fraction =
        trials.iter().filter(|t| t.exceeds_deviation_bound).count() as f64 / trials.len() as f64;
    Ok(NeuripsReport {
        config: cfg.clone(),
        n_measured,
        delta_measured,
        deviation_bound: bound,
        theoretical_confidence: neurips_confidence(cfg.u.max(2.0))
            .expect("u validated above 2"),
        fraction_pass,
        violation_fraction,
        semantics: "finite-family lower bound of the sup",
        trials,
    })
}

// ---------------------------------------------------------------------------
// Epsilon-net validity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetVerifyConfig {
    pub cls: ParameterClass,
    pub epsilon: f64,
    pub probes: usize,
    pub seed: u64,
    /// Quadrature slack added to epsilon in the pass check.
    pub tolerance: f64,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetProbeRow {
    pub probe_id: u64,
    pub distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct NetVerifyReport {
    pub config: NetVerifyConfig,
    pub cardinality: f64,
    pub cardinality_bound: f64,
    pub materialized: bool,
    pub max_distance: f64,
    pub pass: bool,
    pub probes: Vec<NetProbeRow>,
}

impl NetVerifyReport {
    pub fn csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["probe_id", "distance"]);
        for row in &self.probes {
            t.push(vec![row.probe_id.into(), row.distance.into()]);
        }
        t
    }
}

/// Builds the class net and reports, over sampled admissible networks, the
/// (upper-bounded) min psi_2 distance to the net.
pub fn verify_net(cfg: &NetVerifyConfig) -> Result<NetVerifyReport, HarnessError> {
    let net = build_network_net(&cfg.cls, cfg.epsilon, None)?;
    let probes: Vec<NetProbeRow> = (0..cfg.probes as u64)
        .into_par_iter()
        .map(|probe_id| {
            let mut rng = stream(cfg.seed, StreamKind::Probes, probe_id);
            let sample = sample_network(&cfg.cls, &mut rng);
            net.nearest_distance(&sample, &cfg.quad)
                .map(|distance| NetProbeRow { probe_id, distance })
        })
        .collect::<Result<_, _>>()?;
    let max_distance = probes.iter().map(|p| p.distance).fold(0.0f64, f64::max);
    Ok(NetVerifyReport {
        cardinality: net.cardinality(),
        cardinality_bound: net.cardinality_bound,
        materialized: net.members.is_some(),
        max_distance,
        pass: max_distance <= cfg.epsilon + cfg.tolerance,
        probes,
        config: cfg.clone(),
    })
}

// ---------------------------------------------------------------------------
// Teacher-student sublevel experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeacherStudentConfig {
    pub cls: ParameterClass,
    pub teacher: NetworkParams,
    pub m: usize,
    pub xi: f64,
    pub t: f64,
    pub search_budget: usize,
    pub seed: u64,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct SublevelMember {
    pub candidate_id: u64,
    pub empirical_risk: f64,
    pub mu_distance: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TeacherStudentReport {
    pub config: TeacherStudentConfig,
    /// Sup deviation measured on the normalized difference family (members
    /// with mu-distance above t); `None` when that family is empty.
    pub s_tilde: Option<f64>,
    /// `1 - xi^2/t^2`: the deviation level at which the implication applies.
    pub rip_threshold: f64,
    pub implication_applicable: bool,
    /// `s_tilde <= threshold` implies every sublevel member is within t.
    pub implication_holds: bool,
    pub difference_family_size: usize,
    pub sublevel_size: usize,
    pub max_mu_distance_in_sublevel: f64,
    pub min_empirical_risk: f64,
    pub sublevel: Vec<SublevelMember>,
    pub semantics: &'static str,
}

impl TeacherStudentReport {
    pub fn csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["candidate_id", "empirical_risk", "mu_distance"]);
        for row in &self.sublevel {
            t.push(vec![
                row.candidate_id.into(),
                row.empirical_risk.into(),
                row.mu_distance.into(),
            ]);
        }
        t
    }
}

/// Projects a neuron into the class constraints (rescales oversized weights,
/// clamps the bias ratio).
fn project_neuron(p: &NeuronParams, cls: &ParameterClass) -> NeuronParams {
    let mut w = p.w.clone();
    let mut norm = p.w.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return NeuronParams::zero(cls.d);
    }
    if norm > cls.c_w {
        for x in &mut w {
            *x *= cls.c_w / norm;
        }
        norm = cls.c_w;
    }
    let ratio = (p.b / norm).clamp(-cls.c_b, crate::model::max_bias_ratio());
    NeuronParams {
        w,
        b: ratio * norm,
        kappa: p.kappa,
    }
}

/// Search candidate `k`: the teacher itself at `k = 0`, fresh class samples
/// at odd `k`, teacher perturbations at three scales otherwise.
fn search_candidate(
    k: u64,
    cls: &ParameterClass,
    teacher: &NetworkParams,
    seed: u64,
) -> NetworkParams {
    if k == 0 {
        return teacher.clone();
    }
    let mut rng = stream(seed, StreamKind::Search, k);
    if k % 2 == 1 {
        return sample_network(cls, &mut rng);
    }
    let scales = [0.3, 0.1, 0.03];
    let scale = scales[((k / 2) % 3) as usize] * cls.c_w;
    let neurons = teacher
        .neurons
        .iter()
        .map(|p| {
            let w = p
                .w
                .iter()
                .map(|x| x + scale * Distribution::<f64>::sample(&StandardNormal, &mut rng))
                .collect();
            let b = p.b + scale * Distribution::<f64>::sample(&StandardNormal, &mut rng);
            project_neuron(
                &NeuronParams {
                    w,
                    b,
                    kappa: p.kappa,
                },
                cls,
            )
        })
        .collect();
    NetworkParams::new(neurons).expect("projected networks are well-formed")
}

/// Draws one noiseless-teacher sample set, searches the class for sublevel
/// members (empirical risk at most xi), and checks the implication: if the
/// measured deviation on the normalized difference family is within
/// `1 - xi^2/t^2`, every sublevel member lies within mu-distance t.
pub fn teacher_student(cfg: &TeacherStudentConfig) -> Result<TeacherStudentReport, HarnessError> {
    if !(cfg.t > cfg.xi && cfg.xi >= 0.0) {
        return Err(HarnessError::InvalidConfig(format!(
            "need t > xi >= 0, got t = {}, xi = {}",
            cfg.t, cfg.xi
        )));
    }
    if !validate_membership(&cfg.teacher, &cfg.cls).pass {
        return Err(HarnessError::InvalidConfig(
            "teacher is not admissible for the class".into(),
        ));
    }
    let sample_seed = derive_seed(cfg.seed, 0);
    let s_set = draw_samples(cfg.m, cfg.cls.d, sample_seed, Some(&cfg.teacher), None);
    let teacher_vals = values_on(&cfg.teacher, &s_set);

    struct Candidate {
        id: u64,
        risk: f64,
        mu_dist: f64,
        emp_diff_sq: f64,
    }
    let candidates: Vec<Candidate> = (0..=cfg.search_budget as u64)
        .into_par_iter()
        .map(|k| -> Result<Candidate, HarnessError> {
            let net = search_candidate(k, &cfg.cls, &cfg.teacher, cfg.seed);
            let vals = values_on(&net, &s_set);
            let mut risk_sq = 0.0;
            for (v, t) in vals.iter().zip(&teacher_vals) {
                risk_sq += (v - t) * (v - t);
            }
            risk_sq /= cfg.m as f64;
            let mu_dist = mu_distance(&net, &cfg.teacher, &cfg.quad)?;
            Ok(Candidate {
                id: k,
                risk: risk_sq.sqrt(),
                mu_dist,
                emp_diff_sq: risk_sq,
            })
        })
        .collect::<Result<_, _>>()?;

    // Normalized difference family: candidates beyond mu-distance t; their
    // empirical norms reuse the cached value vectors.
    let mut s_tilde: Option<f64> = None;
    let mut difference_family_size = 0;
    for c in &candidates {
        if c.mu_dist > cfg.t {
            difference_family_size += 1;
            let normalized_emp_sq = c.emp_diff_sq / (c.mu_dist * c.mu_dist);
            let dev = (normalized_emp_sq - 1.0).abs();
            s_tilde = Some(s_tilde.map_or(dev, |s| s.max(dev)));
        }
    }

    let sublevel: Vec<SublevelMember> = candidates
        .iter()
        .filter(|c| c.risk <= cfg.xi)
        .map(|c| SublevelMember {
            candidate_id: c.id,
            empirical_risk: c.risk,
            mu_distance: c.mu_dist,
        })
        .collect();
    let max_mu = sublevel.iter().map(|s| s.mu_distance).fold(0.0f64, f64::max);
    let min_risk = candidates.iter().map(|c| c.risk).fold(f64::INFINITY, f64::min);

    let rip_threshold = 1.0 - cfg.xi * cfg.xi / (cfg.t * cfg.t);
    let implication_applicable = s_tilde.is_none_or(|s| s <= rip_threshold);
    let implication_holds = !implication_applicable || max_mu <= cfg.t;
    Ok(TeacherStudentReport {
        config: cfg.clone(),
        s_tilde,
        rip_threshold,
        implication_applicable,
        implication_holds,
        difference_family_size,
        sublevel_size: sublevel.len(),
        max_mu_distance_in_sublevel: max_mu,
        min_empirical_risk: min_risk,
        sublevel,
        semantics: "finite-family lower bound of the sup; sublevel sampled by randomized search",
    })
}

// ---------------------------------------------------------------------------
// Agnostic (noisy-label) experiment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AgnosticConfig {
    pub cls: ParameterClass,
    pub teacher: NetworkParams,
    pub noise_psi2: f64,
    pub m: usize,
    pub omega: f64,
    pub search_budget: usize,
    pub seed: u64,
    /// Generalization level to compare expected risks against, when the
    /// agnostic constants have been configured upstream.
    pub eta: Option<f64>,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgnosticMember {
    pub candidate_id: u64,
    pub empirical_risk: f64,
    pub expected_risk: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgnosticReport {
    pub config: AgnosticConfig,
    /// Empirical-risk tolerance `sqrt(||phi_t - y||_m^2 + omega^2)`.
    pub xi: f64,
    pub noise_sigma: f64,
    pub teacher_empirical_risk: f64,
    pub teacher_expected_risk: f64,
    pub sublevel_size: usize,
    pub max_expected_risk: f64,
    pub all_within_eta: Option<bool>,
    pub sublevel: Vec<AgnosticMember>,
}

impl AgnosticReport {
    pub fn csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["candidate_id", "empirical_risk", "expected_risk"]);
        for row in &self.sublevel {
            t.push(vec![
                row.candidate_id.into(),
                row.empirical_risk.into(),
                row.expected_risk.into(),
            ]);
        }
        t
    }
}

/// Noisy-label variant: labels carry centered Gaussian noise of the given
/// psi_2 norm, the tolerance is `xi = sqrt(||phi_t - y||_m^2 + omega^2)`,
/// and expected risks decompose as `mu-distance^2 + noise variance`.
pub fn agnostic_experiment(cfg: &AgnosticConfig) -> Result<AgnosticReport, HarnessError> {
    if !validate_membership(&cfg.teacher, &cfg.cls).pass {
        return Err(HarnessError::InvalidConfig(
            "teacher is not admissible for the class".into(),
        ));
    }
    if cfg.noise_psi2 < 0.0 || cfg.omega < 0.0 {
        return Err(HarnessError::InvalidConfig(
            "noise_psi2 and omega must be non-negative".into(),
        ));
    }
    let sample_seed = derive_seed(cfg.seed, 0);
    let noise = (cfg.noise_psi2 > 0.0).then_some(cfg.noise_psi2);
    let s_set = draw_samples(cfg.m, cfg.cls.d, sample_seed, Some(&cfg.teacher), noise);
    let noise_sigma = cfg.noise_psi2 / crate::gaussian::gaussian_psi2_per_sigma();
    let teacher_emp_risk = empirical_risk(&cfg.teacher, &s_set)?;
    let xi = (teacher_emp_risk * teacher_emp_risk + cfg.omega * cfg.omega).sqrt();

    let members: Vec<Option<AgnosticMember>> = (0..=cfg.search_budget as u64)
        .into_par_iter()
        .map(|k| -> Result<Option<AgnosticMember>, HarnessError> {
            let net = search_candidate(k, &cfg.cls, &cfg.teacher, cfg.seed);
            let risk = empirical_risk(&net, &s_set)?;
            if risk > xi {
                return Ok(None);
            }
            let mu_dist = mu_distance(&net, &cfg.teacher, &cfg.quad)?;
            let expected_risk = (mu_dist * mu_dist + noise_sigma * noise_sigma).sqrt();
            Ok(Some(AgnosticMember {
                candidate_id: k,
                empirical_risk: risk,
                expected_risk,
            }))
        })
        .collect::<Result<_, _>>()?;
    let sublevel: Vec<AgnosticMember> = members.into_iter().flatten().collect();
    let max_expected_risk = sublevel
        .iter()
        .map(|m| m.expected_risk)
        .fold(0.0f64, f64::max);
    Ok(AgnosticReport {
        xi,
        noise_sigma,
        teacher_empirical_risk: teacher_emp_risk,
        teacher_expected_risk: noise_sigma,
        sublevel_size: sublevel.len(),
        max_expected_risk,
        all_within_eta: cfg.eta.map(|eta| max_expected_risk <= eta),
        sublevel,
        config: cfg.clone(),
    })
}

// ---------------------------------------------------------------------------
// Multiplier-term concentration
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MultiplierConfig {
    pub cls: ParameterClass,
    /// psi_2 norm of the independent centered Gaussian residual.
    pub residual_psi2: f64,
    pub family_size: usize,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierRow {
    pub m: usize,
    pub trial_id: u64,
    pub sup_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MultiplierReport {
    pub config: MultiplierConfig,
    pub rows: Vec<MultiplierRow>,
    pub mean_sup_gap: Vec<(usize, f64)>,
    /// Log-log slope of the mean gap against m (about -1/2).
    pub slope: Option<f64>,
}

impl MultiplierReport {
    pub fn csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["m", "trial_id", "sup_gap"]);
        for row in &self.rows {
            t.push(vec![row.m.into(), row.trial_id.into(), row.sup_gap.into()]);
        }
        t
    }
}

/// Measures `sup_family |<f, phi>_m - <f, phi>_mu|` for an independent
/// centered Gaussian residual `f` (so the expected inner product is zero)
/// and fits the decay rate across the m grid.
pub fn multiplier_check(cfg: &MultiplierConfig) -> Result<MultiplierReport, HarnessError> {
    if cfg.m_grid.is_empty() || cfg.trials == 0 || cfg.family_size == 0 {
        return Err(HarnessError::InvalidConfig(
            "m_grid, trials, and family_size must be non-empty".into(),
        ));
    }
    let family: Vec<NetworkParams> = {
        let mut rng = stream(cfg.seed, StreamKind::Family, 0);
        (0..cfg.family_size)
            .map(|_| sample_network(&cfg.cls, &mut rng))
            .collect()
    };
    let sigma = cfg.residual_psi2 / crate::gaussian::gaussian_psi2_per_sigma();

    let jobs: Vec<(usize, u64)> = cfg
        .m_grid
        .iter()
        .flat_map(|&m| (0..cfg.trials as u64).map(move |t| (m, t)))
        .collect();
    let rows: Vec<MultiplierRow> = jobs
        .par_iter()
        .map(|&(m, trial_id)| {
            let tag = derive_seed(cfg.seed, (m as u64) << 20 | trial_id);
            let s_set = draw_samples(m, cfg.cls.d, tag, None, None);
            let mut noise_rng = stream(tag, StreamKind::Noise, 1);
            let f: Vec<f64> = (0..m)
                .map(|_| sigma * Distribution::<f64>::sample(&StandardNormal, &mut noise_rng))
                .collect();
            let mut sup_gap = 0.0f64;
            for net in &family {
                let vals = values_on(net, &s_set);
                let inner = f
                    .iter()
                    .zip(&vals)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    / m as f64;
                sup_gap = sup_gap.max(inner.abs());
            }
            MultiplierRow {
                m,
                trial_id,
                sup_gap,
            }
        })
        .collect();

    let mean_sup_gap: Vec<(usize, f64)> = cfg
        .m_grid
        .iter()
        .map(|&m| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.m == m)
                .map(|r| r.sup_gap)
                .collect();
            (m, vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    let slope = fit_loglog_slope(
        &mean_sup_gap
            .iter()
            .map(|&(m, g)| (m as f64, g))
            .collect::<Vec<_>>(),
    );
    Ok(MultiplierReport {
        config: cfg.clone(),
        rows,
        mean_sup_gap,
        slope,
    })
}

// ---------------------------------------------------------------------------
// Empirical-norm concentration rate for a fixed network
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RateConfig {
    pub network: NetworkParams,
    pub m_grid: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default)]
    pub quad: QuadratureSpec,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateRow {
    pub m: usize,
    pub trial_id: u64,
    pub abs_deviation: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateReport {
    pub config: RateConfig,
    pub mu_norm_sq: f64,
    pub rows: Vec<RateRow>,
    pub mean_abs_deviation: Vec<(usize, f64)>,
    pub slope: Option<f64>,
}

impl RateReport {
    pub fn csv(&self) -> CsvTable {
        let mut t = CsvTable::new(&["m", "trial_id", "abs_deviation"]);
        for row in &self.rows {
            t.push(vec![
                row.m.into(),
                row.trial_id.into(),
                row.abs_deviation.into(),
            ]);
        }
        t
    }
}

/// Mean `| (norm_m phi)^2 - (norm_mu phi)^2 |` across trials for each m,
/// with the fitted log-log decay slope (about -1/2 by the law of large
/// numbers).
pub fn concentration_rate(cfg: &RateConfig) -> Result<RateReport, HarnessError> {
    if cfg.m_grid.is_empty() || cfg.trials == 0 {
        return Err(HarnessError::InvalidConfig(
            "m_grid and trials must be non-empty".into(),
        ));
    }
    let mu_sq = network_mu_norm_sq(&cfg.network, &cfg.quad)?;
    let jobs: Vec<(usize, u64)> = cfg
        .m_grid
        .iter()
        .flat_map(|&m| (0..cfg.trials as u64).map(move |t| (m, t)))
        .collect();
    let rows: Vec<RateRow> = jobs
        .par_iter()
        .map(|&(m, trial_id)| {
            let tag = derive_seed(cfg.seed, (m as u64) << 20 | trial_id);
            let s_set = draw_samples(m, cfg.network.dim(), tag, None, None);
            let vals = values_on(&cfg.network, &s_set);
            let emp_sq = vals.iter().map(|v| v * v).sum::<f64>() / m as f64;
            RateRow {
                m,
                trial_id,
                abs_deviation: (emp_sq - mu_sq).abs(),
            }
        })
        .collect();
    let mean_abs_deviation: Vec<(usize, f64)> = cfg
        .m_grid
        .iter()
        .map(|&m| {
            let vals: Vec<f64> = rows
                .iter()
                .filter(|r| r.m == m)
                .map(|r| r.abs_deviation)
                .collect();
            (m, vals.iter().sum::<f64>() / vals.len() as f64)
        })
        .collect();
    let slope = fit_loglog_slope(
        &mean_abs_deviation
            .iter()
            .map(|&(m, g)| (m as f64, g))
            .collect::<Vec<_>>(),
    );
    Ok(RateReport {
        config: cfg.clone(),
        mu_norm_sq: mu_sq,
        rows,
        mean_abs_deviation,
        slope,
    })
}

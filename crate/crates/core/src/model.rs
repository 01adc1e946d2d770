//! ReLU neurons, shallow networks, and the admissible parameter classes they
//! are drawn from.
//!
//! A neuron is `x -> kappa * max(<w,x> + b, 0)`; a shallow network is a sum of
//! neurons. Weighted sums of positive neurons are folded into this signed-sum
//! form by [`NetworkParams::from_weighted_sum`]. A [`ParameterClass`] is the
//! envelope `(n, d, c_w, c_b)` constraining `||w_i|| <= c_w` and
//! `-c_b <= b_i/||w_i|| <= sqrt(ln 2)`.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper admissible bound for the bias ratio `b/||w||`, equal to `sqrt(ln 2)`.
pub fn max_bias_ratio() -> f64 {
    std::f64::consts::LN_2.sqrt()
}

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("input dimension {got} does not match parameter dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("weights and neurons have different lengths ({weights} vs {neurons})")]
    LengthMismatch { weights: usize, neurons: usize },
    #[error("from_weighted_sum requires kappa = +1 input neurons (neuron {index} has kappa = -1)")]
    SignedInputNeuron { index: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

/// Output sign of a neuron, restricted to exactly +1 or -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Kappa {
    Plus,
    Minus,
}

impl Kappa {
    pub fn as_f64(self) -> f64 {
        match self {
            Kappa::Plus => 1.0,
            Kappa::Minus => -1.0,
        }
    }

    pub fn flip(self) -> Self {
        match self {
            Kappa::Plus => Kappa::Minus,
            Kappa::Minus => Kappa::Plus,
        }
    }

    /// Sign of a real weight; zero maps to +1 so that a zero coefficient
    /// folds to the zero neuron `(0, 0, +1)`.
    pub fn from_sign(x: f64) -> Self {
        if x < 0.0 {
            Kappa::Minus
        } else {
            Kappa::Plus
        }
    }
}

impl Serialize for Kappa {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_i8(match self {
            Kappa::Plus => 1,
            Kappa::Minus => -1,
        })
    }
}

impl<'de> Deserialize<'de> for Kappa {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        match i8::deserialize(d)? {
            1 => Ok(Kappa::Plus),
            -1 => Ok(Kappa::Minus),
            other => Err(serde::de::Error::custom(format!(
                "kappa must be +1 or -1, got {other}"
            ))),
        }
    }
}

/// One ReLU unit `x -> kappa * max(<w,x> + b, 0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeuronParams {
    pub w: Vec<f64>,
    pub b: f64,
    pub kappa: Kappa,
}

impl NeuronParams {
    pub fn new(w: Vec<f64>, b: f64, kappa: Kappa) -> Result<Self, ModelError> {
        if w.is_empty() {
            return Err(ModelError::InvalidParameter(
                "weight must have dimension >= 1".into(),
            ));
        }
        if !w.iter().all(|x| x.is_finite()) || !b.is_finite() {
            return Err(ModelError::InvalidParameter(
                "weight and bias entries must be finite".into(),
            ));
        }
        Ok(Self { w, b, kappa })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            w: vec![0.0; d],
            b: 0.0,
            kappa: Kappa::Plus,
        }
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn weight_norm(&self) -> f64 {
        self.w.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// `kappa * max(<w,x> + b, 0)` without a dimension check; hot path.
    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.w.len());
        let mut z = self.b;
        for (w, x) in self.w.iter().zip(x) {
            z += w * x;
        }
        if z > 0.0 {
            self.kappa.as_f64() * z
        } else {
            0.0
        }
    }

    /// Checked evaluation; rejects inputs of the wrong dimension.
    pub fn eval(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.w.len() {
            return Err(ModelError::DimensionMismatch {
                expected: self.w.len(),
                got: x.len(),
            });
        }
        Ok(self.value(x))
    }

    /// Scales `(w, b)` by `a >= 0`, leaving the hyperplane and sign unchanged.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            w: self.w.iter().map(|x| a * x).collect(),
            b: a * self.b,
            kappa: self.kappa,
        }
    }

    pub fn flipped(&self) -> Self {
        Self {
            w: self.w.clone(),
            b: self.b,
            kappa: self.kappa.flip(),
        }
    }
}

/// Ordered tuple of `n` neurons sharing an input dimension; evaluates to the
/// sum of its neurons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub neurons: Vec<NeuronParams>,
}

impl NetworkParams {
    pub fn new(neurons: Vec<NeuronParams>) -> Result<Self, ModelError> {
        let Some(first) = neurons.first() else {
            return Err(ModelError::InvalidParameter(
                "network must contain at least one neuron".into(),
            ));
        };
        let d = first.dim();
        if neurons.iter().any(|p| p.dim() != d) {
            return Err(ModelError::InvalidParameter(
                "all neurons must share the input dimension".into(),
            ));
        }
        Ok(Self { neurons })
    }

    pub fn zero(d: usize) -> Self {
        Self {
            neurons: vec![NeuronParams::zero(d)],
        }
    }

    pub fn dim(&self) -> usize {
        self.neurons[0].dim()
    }

    pub fn len(&self) -> usize {
        self.neurons.len()
    }

    pub fn is_empty(&self) -> bool {
        self.neurons.is_empty()
    }

    #[inline]
    pub fn value(&self, x: &[f64]) -> f64 {
        self.neurons.iter().map(|p| p.value(x)).sum()
    }

    pub fn eval(&self, x: &[f64]) -> Result<f64, ModelError> {
        if x.len() != self.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        Ok(self.value(x))
    }

    /// Folds a weighted sum `sum_i lambda_i * phi_{(w_i, b_i, +1)}` into the
    /// signed-sum representation: the i-th entry becomes
    /// `(|lambda_i| w_i, |lambda_i| b_i, sign(lambda_i))`.
    pub fn from_weighted_sum(
        weights: &[f64],
        neurons: &[NeuronParams],
    ) -> Result<Self, ModelError> {
        if weights.len() != neurons.len() {
            return Err(ModelError::LengthMismatch {
                weights: weights.len(),
                neurons: neurons.len(),
            });
        }
        if let Some(index) = neurons.iter().position(|p| p.kappa != Kappa::Plus) {
            return Err(ModelError::SignedInputNeuron { index });
        }
        let folded = weights
            .iter()
            .zip(neurons)
            .map(|(&lambda, p)| {
                if lambda == 0.0 {
                    NeuronParams::zero(p.dim())
                } else {
                    NeuronParams {
                        w: p.w.iter().map(|x| lambda.abs() * x).collect(),
                        b: lambda.abs() * p.b,
                        kappa: Kappa::from_sign(lambda),
                    }
                }
            })
            .collect();
        NetworkParams::new(folded)
    }

    /// Scales every neuron's `(w, b)` by `a >= 0`; the network value scales
    /// by `a` at every input.
    pub fn scaled(&self, a: f64) -> Self {
        Self {
            neurons: self.neurons.iter().map(|p| p.scaled(a)).collect(),
        }
    }

    /// Concatenation `(self, -other)`, the 2n-neuron difference network.
    pub fn difference(&self, other: &NetworkParams) -> Result<Self, ModelError> {
        if self.dim() != other.dim() {
            return Err(ModelError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let mut neurons = self.neurons.clone();
        neurons.extend(other.neurons.iter().map(|p| p.flipped()));
        NetworkParams::new(neurons)
    }
}

/// Envelope of admissible parameters: `n` neurons in dimension `d`, weight
/// norms capped by `c_w`, bias ratios in `[-c_b, sqrt(ln 2)]` with
/// `c_b` in `[1, 3]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParameterClass {
    pub n: usize,
    pub d: usize,
    pub c_w: f64,
    pub c_b: f64,
}

impl ParameterClass {
    pub fn new(n: usize, d: usize, c_w: f64, c_b: f64) -> Result<Self, ModelError> {
        if n == 0 || d == 0 {
            return Err(ModelError::InvalidParameter(
                "n and d must be at least 1".into(),
            ));
        }
        if !(c_w >= 0.0) {
            return Err(ModelError::InvalidParameter(format!(
                "c_w must be non-negative, got {c_w}"
            )));
        }
        if !(1.0..=3.0).contains(&c_b) {
            return Err(ModelError::InvalidParameter(format!(
                "c_b must lie in [1, 3], got {c_b}"
            )));
        }
        Ok(Self { n, d, c_w, c_b })
    }

    /// The architecture factor `8 c_b + d + ln(2)/4` shared by all
    /// sample-complexity and chaining bounds.
    pub fn complexity_factor(&self) -> f64 {
        8.0 * self.c_b + self.d as f64 + std::f64::consts::LN_2 / 4.0
    }
}

/// One constraint violation found by [`validate_membership`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MembershipViolation {
    WeightNorm {
        neuron: usize,
        norm: f64,
        cap: f64,
    },
    BiasRatioLow {
        neuron: usize,
        ratio: f64,
        lower: f64,
    },
    BiasRatioHigh {
        neuron: usize,
        ratio: f64,
        upper: f64,
    },
    /// `||w|| = 0` with `b != 0`: the bias ratio is undefined; only the
    /// zero neuron is admissible with a zero weight.
    UndefinedBiasRatio {
        neuron: usize,
        bias: f64,
    },
    DimensionMismatch {
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MembershipReport {
    pub pass: bool,
    pub violations: Vec<MembershipViolation>,
}

/// Checks every neuron of `network` against the class constraints
/// `||w_i|| <= c_w` and `-c_b <= b_i/||w_i|| <= sqrt(ln 2)`.
pub fn validate_membership(network: &NetworkParams, cls: &ParameterClass) -> MembershipReport {
    let mut violations = Vec::new();
    if network.dim() != cls.d {
        violations.push(MembershipViolation::DimensionMismatch {
            expected: cls.d,
            got: network.dim(),
        });
        return MembershipReport {
            pass: false,
            violations,
        };
    }
    let upper = max_bias_ratio();
    for (i, p) in network.neurons.iter().enumerate() {
        let norm = p.weight_norm();
        if norm > cls.c_w {
            violations.push(MembershipViolation::WeightNorm {
                neuron: i,
                norm,
                cap: cls.c_w,
            });
        }
        if norm == 0.0 {
            if p.b != 0.0 {
                violations.push(MembershipViolation::UndefinedBiasRatio { neuron: i, bias: p.b });
            }
            continue;
        }
        let ratio = p.b / norm;
        if ratio < -cls.c_b {
            violations.push(MembershipViolation::BiasRatioLow {
                neuron: i,
                ratio,
                lower: -cls.c_b,
            });
        }
        if ratio > upper {
            violations.push(MembershipViolation::BiasRatioHigh {
                neuron: i,
                ratio,
                upper,
            });
        }
    }
    MembershipReport {
        pass: violations.is_empty(),
        violations,
    }
}

/// Draws `count` networks from the class, weights uniform on the ball of
/// radius `c_w`, bias ratios uniform on `[-c_b, sqrt(ln 2)]`, signs uniform.
/// Every draw passes [`validate_membership`]; fixed seeds give fixed output.
pub fn sample_parameter_class(cls: &ParameterClass, count: usize, seed: u64) -> Vec<NetworkParams> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| sample_network(cls, &mut rng))
        .collect()
}

pub(crate) fn sample_network<R: rand::Rng>(cls: &ParameterClass, rng: &mut R) -> NetworkParams {
    let neurons = (0..cls.n).map(|_| sample_neuron(cls, rng)).collect();
    NetworkParams::new(neurons).expect("sampled networks are well-formed")
}

pub(crate) fn sample_neuron<R: rand::Rng>(cls: &ParameterClass, rng: &mut R) -> NeuronParams {
    let mut w: Vec<f64> = (0..cls.d).map(|_| StandardNormal.sample(rng)).collect();
    let norm: f64 = w.iter().map(|x| x * x).sum::<f64>().sqrt();
    // Radius c_w * U^(1/d) makes the weight uniform on the ball.
    let radius = cls.c_w * rng.random::<f64>().powf(1.0 / cls.d as f64);
    if norm > 0.0 {
        for x in &mut w {
            *x *= radius / norm;
        }
    }
    let lo = -cls.c_b;
    let hi = max_bias_ratio();
    let ratio = lo + (hi - lo) * rng.random::<f64>();
    let b = ratio * radius;
    let kappa = if rng.random::<bool>() {
        Kappa::Plus
    } else {
        Kappa::Minus
    };
    NeuronParams { w, b, kappa }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn neuron(w: &[f64], b: f64, kappa: Kappa) -> NeuronParams {
        NeuronParams::new(w.to_vec(), b, kappa).unwrap()
    }

    #[test]
    fn neuron_eval_positive_halfline() {
        let p = neuron(&[1.0, 0.0], 0.0, Kappa::Plus);
        assert_eq!(p.eval(&[2.0, 0.0]).unwrap(), 2.0);
    }

    #[test]
    fn neuron_eval_clamps_negatives() {
        let p = neuron(&[1.0, 0.0], 0.0, Kappa::Plus);
        assert_eq!(p.eval(&[-2.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn neuron_eval_sign_flip() {
        let p = neuron(&[1.0, 0.0], 1.0, Kappa::Minus);
        assert_eq!(p.eval(&[0.0, 0.0]).unwrap(), -1.0);
    }

    #[test]
    fn neuron_eval_rejects_dimension_mismatch() {
        let p = neuron(&[1.0, 0.0], 0.0, Kappa::Plus);
        assert!(matches!(
            p.eval(&[1.0]),
            Err(ModelError::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn network_eval_additivity_and_cancellation() {
        let p = neuron(&[1.0], 0.0, Kappa::Plus);
        let twice = NetworkParams::new(vec![p.clone(), p.clone()]).unwrap();
        assert_eq!(twice.eval(&[3.0]).unwrap(), 6.0);

        let cancel = NetworkParams::new(vec![p.clone(), p.flipped()]).unwrap();
        for x in [-2.0, -0.5, 0.0, 0.5, 2.0] {
            assert_eq!(cancel.eval(&[x]).unwrap(), 0.0);
        }

        let single = NetworkParams::new(vec![p.clone()]).unwrap();
        assert_eq!(single.eval(&[1.5]).unwrap(), p.eval(&[1.5]).unwrap());
    }

    #[test]
    fn from_weighted_sum_folds_signs() {
        let q = neuron(&[1.0, 2.0], 0.5, Kappa::Plus);
        let net = NetworkParams::from_weighted_sum(&[-2.0], std::slice::from_ref(&q)).unwrap();
        assert_eq!(net.neurons[0].w, vec![2.0, 4.0]);
        assert_eq!(net.neurons[0].b, 1.0);
        assert_eq!(net.neurons[0].kappa, Kappa::Minus);

        let zero = NetworkParams::from_weighted_sum(&[0.0], std::slice::from_ref(&q)).unwrap();
        assert_eq!(zero.neurons[0], NeuronParams::zero(2));
        for x in [[0.3, -1.0], [5.0, 2.0]] {
            assert_eq!(zero.eval(&x).unwrap(), 0.0);
        }

        let same = NetworkParams::from_weighted_sum(&[1.0], std::slice::from_ref(&q)).unwrap();
        assert_eq!(same.neurons[0], q);
    }

    #[test]
    fn from_weighted_sum_rejects_bad_input() {
        let q = neuron(&[1.0], 0.0, Kappa::Minus);
        assert!(matches!(
            NetworkParams::from_weighted_sum(&[1.0], &[q]),
            Err(ModelError::SignedInputNeuron { index: 0 })
        ));
        let q = neuron(&[1.0], 0.0, Kappa::Plus);
        assert!(matches!(
            NetworkParams::from_weighted_sum(&[1.0, 2.0], &[q]),
            Err(ModelError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn membership_direct_checks() {
        let cls = ParameterClass::new(1, 2, 1.0, 1.0).unwrap();

        let ok = NetworkParams::new(vec![neuron(&[0.5, 0.0], 0.2, Kappa::Plus)]).unwrap();
        assert!(validate_membership(&ok, &cls).pass);

        let big = NetworkParams::new(vec![neuron(&[2.0, 0.0], 0.0, Kappa::Plus)]).unwrap();
        let report = validate_membership(&big, &cls);
        assert!(!report.pass);
        assert!(matches!(
            report.violations[0],
            MembershipViolation::WeightNorm { neuron: 0, .. }
        ));

        // ratio 1 exceeds sqrt(ln 2) = 0.83255...
        let high = NetworkParams::new(vec![neuron(&[1.0, 0.0], 1.0, Kappa::Plus)]).unwrap();
        let report = validate_membership(&high, &cls);
        assert!(!report.pass);
        assert!(matches!(
            report.violations[0],
            MembershipViolation::BiasRatioHigh { neuron: 0, .. }
        ));
        assert!(1.0 > max_bias_ratio());
        assert!((max_bias_ratio() - 0.832554611157698).abs() < 1e-15);
    }

    #[test]
    fn membership_zero_weight_convention() {
        let cls = ParameterClass::new(1, 2, 1.0, 1.0).unwrap();
        let zero = NetworkParams::zero(2);
        assert!(validate_membership(&zero, &cls).pass);

        let bad = NetworkParams::new(vec![neuron(&[0.0, 0.0], 0.5, Kappa::Plus)]).unwrap();
        let report = validate_membership(&bad, &cls);
        assert!(!report.pass);
        assert!(matches!(
            report.violations[0],
            MembershipViolation::UndefinedBiasRatio { neuron: 0, .. }
        ));
    }

    #[test]
    fn sampling_is_deterministic_and_admissible() {
        let cls = ParameterClass::new(3, 4, 1.5, 2.0).unwrap();
        assert!(sample_parameter_class(&cls, 0, 9).is_empty());
        let a = sample_parameter_class(&cls, 25, 9);
        let b = sample_parameter_class(&cls, 25, 9);
        assert_eq!(a, b);
        for net in &a {
            assert!(validate_membership(net, &cls).pass);
        }
    }

    #[test]
    fn class_rejects_out_of_range_constants() {
        assert!(ParameterClass::new(1, 1, -0.5, 1.0).is_err());
        assert!(ParameterClass::new(1, 1, 1.0, 0.5).is_err());
        assert!(ParameterClass::new(1, 1, 1.0, 3.5).is_err());
        assert!(ParameterClass::new(0, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn network_serialization_shape() {
        let net = NetworkParams::new(vec![neuron(&[0.5, -0.25], 0.125, Kappa::Minus)]).unwrap();
        let json = serde_json::to_string(&net).unwrap();
        assert_eq!(json, r#"{"neurons":[{"w":[0.5,-0.25],"b":0.125,"kappa":-1}]}"#);
        let back: NetworkParams = serde_json::from_str(&json).unwrap();
        assert_eq!(back, net);
        assert!(serde_json::from_str::<NetworkParams>(
            r#"{"neurons":[{"w":[1.0],"b":0.0,"kappa":2}]}"#
        )
        .is_err());
    }
}

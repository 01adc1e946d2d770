//! Closed-form sample-complexity and generalization-bound calculators.
//!
//! The two universal constants of the concentration bound are pinned as
//! exact formulas, `C1 = 40^2 * 2 * 5^2 / ((sqrt2 - 1)^2 ln 2)` and
//! `C2 = 40^2 * 2 * 64^2 / ((sqrt2 - 1)^2 ln 2)`. The agnostic-setting
//! constants `C0, C3, C4, C5` have no published values; the calculators
//! refuse to run without explicit configuration rather than invent numbers.

use crate::model::{ModelError, ParameterClass};
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("constant {0} is not configured (no published value; set it explicitly)")]
    UnconfiguredConstant(&'static str),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Universal constants of the bounds. `c1`/`c2` evaluate their exact
/// formulas once; the agnostic constants stay `None` until configured.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TheoremConstants {
    pub c0: Option<f64>,
    pub c3: Option<f64>,
    pub c4: Option<f64>,
    pub c5: Option<f64>,
}

/// `(sqrt2 - 1)^2 ln 2`, written as `(3 - 2 sqrt2) ln 2` to avoid squaring
/// the rounded difference.
fn constant_denominator() -> f64 {
    (3.0 - 2.0 * std::f64::consts::SQRT_2) * std::f64::consts::LN_2
}

impl TheoremConstants {
    /// `40^2 * 2 * 5^2 / ((sqrt2 - 1)^2 ln 2) ~= 6.726e5`.
    pub fn c1(&self) -> f64 {
        static C1: OnceLock<f64> = OnceLock::new();
        *C1.get_or_init(|| 40.0 * 40.0 * 2.0 * 25.0 / constant_denominator())
    }

    /// `40^2 * 2 * 64^2 / ((sqrt2 - 1)^2 ln 2) ~= 1.102e8`.
    pub fn c2(&self) -> f64 {
        static C2: OnceLock<f64> = OnceLock::new();
        *C2.get_or_init(|| 40.0 * 40.0 * 2.0 * 4096.0 / constant_denominator())
    }

    pub fn with_agnostic(c0: f64, c3: f64, c4: f64, c5: f64) -> Self {
        Self {
            c0: Some(c0),
            c3: Some(c3),
            c4: Some(c4),
            c5: Some(c5),
        }
    }

    fn require(&self, v: Option<f64>, name: &'static str) -> Result<f64, BoundsError> {
        v.ok_or(BoundsError::UnconfiguredConstant(name))
    }
}

/// Inputs of the generalization calculators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationInputs {
    /// Norm-deviation level in (0, 1).
    pub s: f64,
    /// Confidence parameter, at least 2.
    pub u: f64,
    pub t: f64,
    pub xi: f64,
    pub omega: f64,
    pub v1: f64,
    pub v2: f64,
    /// `||phi_p* - y||_mu` of the reference network.
    pub mu_risk: f64,
    /// psi_2 norm bound of the residual `phi_p* - y`.
    pub c_pstar: f64,
}

impl GeneralizationInputs {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        s: f64,
        u: f64,
        t: f64,
        xi: f64,
        omega: f64,
        v1: f64,
        v2: f64,
        mu_risk: f64,
        c_pstar: f64,
    ) -> Result<Self, BoundsError> {
        if !(s > 0.0 && s < 1.0) {
            return Err(BoundsError::Domain(format!("s must lie in (0,1), got {s}")));
        }
        if u < 2.0 {
            return Err(BoundsError::Domain(format!("u must be >= 2, got {u}")));
        }
        for (name, v) in [
            ("t", t),
            ("xi", xi),
            ("omega", omega),
            ("mu_risk", mu_risk),
            ("c_pstar", c_pstar),
        ] {
            if !(v >= 0.0) {
                return Err(BoundsError::Domain(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(Self {
            s,
            u,
            t,
            xi,
            omega,
            v1,
            v2,
            mu_risk,
            c_pstar,
        })
    }
}

/// Smallest sample count (as a real) for the uniform concentration event at
/// deviation `s` and confidence `u`:
/// `n^3 c_w^2 (8 c_b + d + ln2/4) max(C1 u/s, C2 n^2 c_w^2 (u/s)^2)`.
pub fn neurips_sample_bound(
    cls: &ParameterClass,
    s: f64,
    u: f64,
    consts: &TheoremConstants,
) -> Result<f64, BoundsError> {
    if !(s > 0.0 && s < 1.0) {
        return Err(BoundsError::Domain(format!("s must lie in (0,1), got {s}")));
    }
    if u < 2.0 {
        return Err(BoundsError::Domain(format!("u must be >= 2, got {u}")));
    }
    let n = cls.n as f64;
    let ratio = u / s;
    let linear = consts.c1() * ratio;
    let quadratic = consts.c2() * n * n * cls.c_w * cls.c_w * ratio * ratio;
    Ok(n.powi(3) * cls.c_w * cls.c_w * cls.complexity_factor() * linear.max(quadratic))
}

/// Ceiling of a real sample bound as an integer count.
pub fn ceil_samples(bound: f64) -> u128 {
    if !bound.is_finite() {
        return u128::MAX;
    }
    bound.ceil().max(0.0) as u128
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Confidence {
    pub value: f64,
    /// Set when the bound is non-positive and therefore carries no content.
    pub vacuous: bool,
}

/// `1 - 17 exp(-u/4)` for `u >= 2`; may be negative and is then flagged.
pub fn neurips_confidence(u: f64) -> Result<Confidence, BoundsError> {
    if u < 2.0 {
        return Err(BoundsError::Domain(format!("u must be >= 2, got {u}")));
    }
    let value = 1.0 - 17.0 * libm::exp(-u / 4.0);
    Ok(Confidence {
        value,
        vacuous: value <= 0.0,
    })
}

/// Sample bound for uniform recovery at expected-risk level `t` from
/// empirical-risk tolerance `xi`:
/// `8 n^3 c_w^2 (8 c_b + d + ln2/4)
///  max(C1 u/(t^2 - xi^2), C2 n^2 c_w^2 (u/(t^2 - xi^2))^2)`.
/// Identically equal to `8 *` the concentration bound of the `1/t`-rescaled
/// class at `s = (t^2 - xi^2)/t^2`.
pub fn recovery_sample_bound(
    cls: &ParameterClass,
    t: f64,
    xi: f64,
    u: f64,
    consts: &TheoremConstants,
) -> Result<f64, BoundsError> {
    if !(t > xi && xi >= 0.0) {
        return Err(BoundsError::Domain(format!(
            "need t > xi >= 0, got t = {t}, xi = {xi}"
        )));
    }
    if u < 2.0 {
        return Err(BoundsError::Domain(format!("u must be >= 2, got {u}")));
    }
    let n = cls.n as f64;
    let gap = t * t - xi * xi;
    let ratio = u / gap;
    let linear = consts.c1() * ratio;
    let quadratic = consts.c2() * n * n * cls.c_w * cls.c_w * ratio * ratio;
    Ok(8.0 * n.powi(3) * cls.c_w * cls.c_w * cls.complexity_factor() * linear.max(quadratic))
}

/// Sample quotient `alpha = m / (n^3 c_w^2 (8 c_b + d + ln2/4))`.
pub fn agnostic_alpha(cls: &ParameterClass, m: usize) -> f64 {
    let n = cls.n as f64;
    m as f64 / (n.powi(3) * cls.c_w * cls.c_w * cls.complexity_factor())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaRequirement {
    pub requirement: f64,
    /// `alpha >= requirement` when alpha is supplied.
    pub satisfied: Option<bool>,
    /// Set when `mu_risk = 0` makes the requirement infinite.
    pub degenerate: bool,
}

/// Right-hand side of the sample-quotient requirement
/// `alpha >= 8 max(C1 (1-s)^2 u / (s r^2),
///                 C2 n^2 c_w^2 ((1-s)^2 u / (s r^2))^2 c_p*^2)`
/// with `r = mu_risk`.
pub fn alpha_requirement(
    cls: &ParameterClass,
    inputs: &GeneralizationInputs,
    alpha: Option<f64>,
    consts: &TheoremConstants,
) -> Result<AlphaRequirement, BoundsError> {
    let n = cls.n as f64;
    if inputs.mu_risk == 0.0 {
        return Ok(AlphaRequirement {
            requirement: f64::INFINITY,
            satisfied: alpha.map(|_| false),
            degenerate: true,
        });
    }
    let precision =
        (1.0 - inputs.s) * (1.0 - inputs.s) * inputs.u / (inputs.s * inputs.mu_risk * inputs.mu_risk);
    let linear = consts.c1() * precision;
    let quadratic = consts.c2()
        * n
        * n
        * cls.c_w
        * cls.c_w
        * precision
        * precision
        * inputs.c_pstar
        * inputs.c_pstar;
    let requirement = 8.0 * linear.max(quadratic);
    Ok(AlphaRequirement {
        requirement,
        satisfied: alpha.map(|a| a >= requirement),
        degenerate: false,
    })
}

/// Generalization level
/// `eta = (2/(1-s) + 1) mu_risk + sqrt(C3 v1 v2 c_p* / (1-s)) alpha^{-1/4}
///        + omega / sqrt(1-s)`;
/// decreasing in alpha, with limit `3 mu_risk + omega` as `alpha -> inf`,
/// `s -> 0`. `C3` is only needed when the residual term is active.
pub fn agnostic_eta(
    inputs: &GeneralizationInputs,
    alpha: f64,
    consts: &TheoremConstants,
) -> Result<f64, BoundsError> {
    if !(alpha > 0.0) {
        return Err(BoundsError::Domain(format!(
            "alpha must be positive, got {alpha}"
        )));
    }
    let s = inputs.s;
    let base = (2.0 / (1.0 - s) + 1.0) * inputs.mu_risk;
    let residual_scale = inputs.v1 * inputs.v2 * inputs.c_pstar;
    let middle = if residual_scale == 0.0 {
        0.0
    } else {
        let c3 = consts.require(consts.c3, "C3")?;
        (c3 * residual_scale / (1.0 - s)).sqrt() * alpha.powf(-0.25)
    };
    Ok(base + middle + inputs.omega / (1.0 - s).sqrt())
}

/// `1 - 2 exp(-C4 m v1^2) - 2 exp(-C5 v2^2) - 17 exp(-u/4)`, flagged when
/// non-positive. `C4` and `C5` must be configured.
pub fn agnostic_probability(
    m: usize,
    v1: f64,
    v2: f64,
    u: f64,
    consts: &TheoremConstants,
) -> Result<Confidence, BoundsError> {
    if !(u > 0.0) {
        return Err(BoundsError::Domain(format!("u must be positive, got {u}")));
    }
    let c4 = consts.require(consts.c4, "C4")?;
    let c5 = consts.require(consts.c5, "C5")?;
    let value = 1.0
        - 2.0 * libm::exp(-c4 * m as f64 * v1 * v1)
        - 2.0 * libm::exp(-c5 * v2 * v2)
        - 17.0 * libm::exp(-u / 4.0);
    Ok(Confidence {
        value,
        vacuous: value <= 0.0,
    })
}

/// Numeric inversion convenience: smallest `s` in (0, 1) whose sample bound
/// does not exceed `m`, by bisection (the bound is decreasing in `s`).
/// `None` when even `s` near 1 demands more than `m` samples.
pub fn solve_deviation_for_samples(
    cls: &ParameterClass,
    m: f64,
    u: f64,
    consts: &TheoremConstants,
) -> Result<Option<f64>, BoundsError> {
    let hi_s = 1.0 - 1e-12;
    if neurips_sample_bound(cls, hi_s, u, consts)? > m {
        return Ok(None);
    }
    let mut lo = 1e-300;
    let mut hi = hi_s;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if neurips_sample_bound(cls, mid, u, consts)? > m {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-12 * hi {
            break;
        }
    }
    Ok(Some(hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cls112() -> ParameterClass {
        ParameterClass::new(1, 2, 1.0, 1.0).unwrap()
    }

    #[test]
    fn constant_values() {
        let c = TheoremConstants::default();
        assert!((c.c1() - 6.726e5).abs() < 5e2, "{}", c.c1());
        assert!((c.c2() - 1.102e8).abs() < 5e4, "{}", c.c2());
        // Exact formula check.
        let den = (std::f64::consts::SQRT_2 - 1.0).powi(2) * std::f64::consts::LN_2;
        assert!((c.c1() - 80_000.0 / den).abs() < 1e-6 * c.c1());
        assert!((c.c2() - 13_107_200.0 / den).abs() < 1e-6 * c.c2());
    }

    #[test]
    fn sample_bound_quadratic_scaling_and_switch() {
        let consts = TheoremConstants::default();
        let cls = cls112();
        // Deep in the quadratic regime, doubling u/s quadruples the bound.
        let a = neurips_sample_bound(&cls, 0.1, 8.0, &consts).unwrap();
        let b = neurips_sample_bound(&cls, 0.05, 8.0, &consts).unwrap();
        assert!((b / a - 4.0).abs() < 1e-9);

        // Regime switch at u/s = C1/(C2 n^2 c_w^2): both branches equal.
        let switch = consts.c1() / consts.c2();
        let n3v = cls.c_w * cls.c_w * cls.complexity_factor();
        let linear = consts.c1() * switch * n3v;
        let quadratic = consts.c2() * switch * switch * n3v;
        assert!((linear - quadratic).abs() < 1e-9 * linear);

        // Numeric value at the worked point.
        let v = neurips_sample_bound(&cls, 0.5, 2.0, &consts).unwrap();
        let expect = cls.complexity_factor() * (consts.c1() * 4.0).max(consts.c2() * 16.0);
        assert_eq!(v, expect);

        assert!(neurips_sample_bound(&cls, 1.5, 2.0, &consts).is_err());
        assert!(neurips_sample_bound(&cls, 0.5, 1.0, &consts).is_err());
    }

    #[test]
    fn confidence_values() {
        let zero_at = 4.0 * 17.0f64.ln();
        let c = neurips_confidence(zero_at).unwrap();
        assert!(c.value.abs() < 1e-12);

        let c = neurips_confidence(2.0).unwrap();
        assert!(c.value < 0.0 && c.vacuous);
        assert!((c.value - (1.0 - 17.0 * libm::exp(-0.5))).abs() < 1e-12);

        // 1 - 17 e^{-10} = 0.999228...
        let c = neurips_confidence(40.0).unwrap();
        assert!((c.value - 0.9992282011940378).abs() < 1e-12);
        assert!(!c.vacuous);

        // Strictly increasing in u.
        let mut last = -f64::INFINITY;
        for k in 0..50 {
            let u = 2.0 + k as f64;
            let c = neurips_confidence(u).unwrap().value;
            assert!(c > last);
            last = c;
        }
    }

    #[test]
    fn recovery_consistency_with_rescaled_class() {
        let consts = TheoremConstants::default();
        for (n, d, c_w, c_b, t, xi, u) in [
            (1usize, 2usize, 1.0, 1.0, 0.5, 0.25, 2.0),
            (2, 3, 1.5, 2.0, 0.8, 0.1, 5.0),
            (3, 1, 0.5, 3.0, 1.7, 0.3, 11.0),
        ] {
            let cls = ParameterClass::new(n, d, c_w, c_b).unwrap();
            let direct = recovery_sample_bound(&cls, t, xi, u, &consts).unwrap();
            let rescaled = ParameterClass {
                c_w: c_w / t,
                ..cls
            };
            let s = (t * t - xi * xi) / (t * t);
            let via = 8.0 * neurips_sample_bound(&rescaled, s, u, &consts).unwrap();
            assert!(
                (direct - via).abs() <= 1e-9 * direct,
                "n={n} d={d}: {direct} vs {via}"
            );
        }
        let cls = cls112();
        assert!(recovery_sample_bound(&cls, 0.2, 0.2, 2.0, &consts).is_err());

        // xi = 0, t = 1: the gap form evaluates directly (the rescaled
        // identity would sit at the s = 1 endpoint).
        let v = recovery_sample_bound(&cls, 1.0, 0.0, 2.0, &consts).unwrap();
        let expect = 8.0
            * cls.complexity_factor()
            * (consts.c1() * 2.0).max(consts.c2() * 4.0);
        assert!((v - expect).abs() < 1e-12 * expect);

        // Doubling t with xi = 0 divides the linear-regime bound by 4.
        let big = ParameterClass::new(1, 2, 0.001, 1.0).unwrap(); // linear regime
        let a = recovery_sample_bound(&big, 1.0, 0.0, 2.0, &consts).unwrap();
        let b = recovery_sample_bound(&big, 2.0, 0.0, 2.0, &consts).unwrap();
        assert!((a / b - 4.0).abs() < 1e-9);
    }

    #[test]
    fn eta_examples_and_limit() {
        let consts = TheoremConstants {
            c3: Some(1.0),
            ..Default::default()
        };
        // omega = 0, mu_risk = 0: only the residual term remains.
        let inputs = GeneralizationInputs::new(0.5, 2.0, 0.0, 0.0, 0.0, 2.0, 3.0, 0.0, 1.5)
            .unwrap();
        let eta = agnostic_eta(&inputs, 16.0, &consts).unwrap();
        let expect = (1.0 * 2.0 * 3.0 * 1.5f64 / 0.5).sqrt() * 16.0f64.powf(-0.25);
        assert!((eta - expect).abs() < 1e-12);

        // alpha x16 halves the residual term.
        let eta2 = agnostic_eta(&inputs, 256.0, &consts).unwrap();
        assert!((eta - 2.0 * eta2).abs() < 1e-12);

        // s = 0.5, mu = 1, omega = 0, c = 0: eta = 5.
        let inputs = GeneralizationInputs::new(0.5, 2.0, 0.0, 0.0, 0.0, 2.0, 3.0, 1.0, 0.0)
            .unwrap();
        let eta = agnostic_eta(&inputs, 100.0, &consts).unwrap();
        assert!((eta - 5.0).abs() < 1e-12);

        // Limit 3 mu_risk + omega at extreme alpha and tiny s.
        let inputs = GeneralizationInputs::new(1e-8, 2.0, 0.0, 0.0, 0.7, 2.0, 3.0, 1.3, 0.0)
            .unwrap();
        let eta = agnostic_eta(&inputs, 1e16, &consts).unwrap();
        assert!((eta - (3.0 * 1.3 + 0.7)).abs() < 1e-6, "{eta}");
    }

    #[test]
    fn alpha_quotient_and_requirement() {
        let cls = cls112();
        let denom = cls.complexity_factor();
        assert!((agnostic_alpha(&cls, denom.ceil() as usize) - denom.ceil() / denom).abs() < 1e-12);

        let consts = TheoremConstants::default();
        let inputs = GeneralizationInputs::new(0.5, 2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0)
            .unwrap();
        let req = alpha_requirement(&cls, &inputs, Some(1e12), &consts).unwrap();
        assert!(!req.degenerate);
        assert!(req.requirement > 0.0 && req.requirement.is_finite());
        assert_eq!(req.satisfied, Some(1e12 >= req.requirement));

        let zero_risk = GeneralizationInputs::new(0.5, 2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 1.0)
            .unwrap();
        let req = alpha_requirement(&cls, &zero_risk, Some(1.0), &consts).unwrap();
        assert!(req.degenerate && req.requirement.is_infinite());
        assert_eq!(req.satisfied, Some(false));
    }

    #[test]
    fn probability_requires_constants() {
        let unset = TheoremConstants::default();
        assert!(matches!(
            agnostic_probability(10, 1.0, 1.0, 40.0, &unset),
            Err(BoundsError::UnconfiguredConstant("C4"))
        ));
        let consts = TheoremConstants::with_agnostic(1.0, 1.0, 1.0, 1.0);
        let p = agnostic_probability(10, 3.0, 3.0, 40.0, &consts).unwrap();
        let expect = 1.0
            - 2.0 * libm::exp(-90.0)
            - 2.0 * libm::exp(-9.0)
            - 17.0 * libm::exp(-10.0);
        assert!((p.value - expect).abs() < 1e-12);
        assert!(!p.vacuous);

        // The u term alone at u = 4 ln 17 contributes exactly 1 of deficit.
        let at = agnostic_probability(1_000_000, 10.0, 10.0, 4.0 * 17.0f64.ln(), &consts)
            .unwrap();
        assert!((at.value - 0.0).abs() < 1e-9);
    }

    #[test]
    fn eta_requires_c3_only_with_residual() {
        let unset = TheoremConstants::default();
        let with_residual =
            GeneralizationInputs::new(0.5, 2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        assert!(matches!(
            agnostic_eta(&with_residual, 10.0, &unset),
            Err(BoundsError::UnconfiguredConstant("C3"))
        ));
        let no_residual =
            GeneralizationInputs::new(0.5, 2.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0).unwrap();
        assert!(agnostic_eta(&no_residual, 10.0, &unset).is_ok());
    }

    #[test]
    fn deviation_inversion_round_trip() {
        let cls = cls112();
        let consts = TheoremConstants::default();
        let s_target = 0.25;
        let m = neurips_sample_bound(&cls, s_target, 2.0, &consts).unwrap();
        let s = solve_deviation_for_samples(&cls, m, 2.0, &consts)
            .unwrap()
            .unwrap();
        assert!((s - s_target).abs() < 1e-9, "{s}");
        assert!(solve_deviation_for_samples(&cls, 1.0, 2.0, &consts)
            .unwrap()
            .is_none());
    }
}

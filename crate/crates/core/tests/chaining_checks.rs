//! Numeric-vs-closed-form entropy integration and chaining bounds on
//! measured neuron families.

use neurips_lab::chaining::{
    dudley_integral, entropy_integral, entropy_integral_closed_form, talagrand_upper_bound_finite,
    DistanceMatrix, EntropyProfile,
};
use neurips_lab::model::{sample_parameter_class, ParameterClass};
use neurips_lab::subgaussian::psi2_distance;
use neurips_lab::QuadratureSpec;

#[test]
fn numeric_entropy_integral_below_closed_form_subgrid() {
    // Sub-grid of the acceptance sweep; the full 3x3x3x3 grid runs there.
    let quad = QuadratureSpec::default();
    for n in [1usize, 3] {
        for d in [1usize, 3] {
            for c_w in [0.5, 2.0] {
                for c_b in [1.0, 3.0] {
                    let cls = ParameterClass::new(n, d, c_w, c_b).unwrap();
                    let numeric =
                        entropy_integral(&EntropyProfile::shallow_class(&cls), &quad).unwrap();
                    let closed = entropy_integral_closed_form(&cls).integral_bound;
                    assert!(
                        numeric <= closed + 1e-9,
                        "n={n} d={d} c_w={c_w} c_b={c_b}: {numeric} vs {closed}"
                    );
                    assert!(numeric > 0.0);
                }
            }
        }
    }
}

#[test]
fn talagrand_on_measured_neuron_distances_below_dudley() {
    // 64 sampled neurons with psi_2 distances: the greedy chaining value
    // stays below the Dudley value of the measured entropy profile.
    let cls = ParameterClass::new(1, 2, 1.0, 1.0).unwrap();
    let nets = sample_parameter_class(&cls, 64, 2024);
    let quad = QuadratureSpec::default().polar();
    let d = DistanceMatrix::from_fn(64, |i, j| {
        psi2_distance(&nets[i], &nets[j], &quad).unwrap()
    })
    .unwrap();
    let talagrand = talagrand_upper_bound_finite(&d).unwrap();
    let dudley = dudley_integral(&EntropyProfile::measured(&d), &quad).unwrap();
    assert!(
        talagrand.value <= dudley + 1e-9,
        "talagrand {} vs dudley {dudley}",
        talagrand.value
    );
    assert!(talagrand.value > 0.0);
    // The admissible-sequence cardinality constraints hold exactly.
    assert_eq!(talagrand.sequence.levels[0].len(), 1);
    for (k, level) in talagrand.sequence.levels.iter().enumerate().skip(1) {
        assert!(level.len() <= 1usize << (1 << k.min(6)));
    }
}

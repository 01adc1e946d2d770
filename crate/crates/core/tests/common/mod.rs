//! Shared oracles for the integration suites: plain Monte-Carlo estimators,
//! independent of the quadrature paths they check.

use neurips_lab::model::NetworkParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Monte-Carlo mean and standard error of `f(x)` under `x ~ N(0, I_d)`.
pub fn mc_mean(
    d: usize,
    samples: usize,
    seed: u64,
    mut f: impl FnMut(&[f64]) -> f64,
) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = vec![0.0; d];
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        for v in &mut x {
            *v = StandardNormal.sample(&mut rng);
        }
        let y = f(&x);
        sum += y;
        sum_sq += y * y;
    }
    let n = samples as f64;
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, (var / n).sqrt())
}

/// Monte-Carlo estimate of `E[phi_net(x)^2]` with its standard error.
pub fn mc_second_moment(net: &NetworkParams, samples: usize, seed: u64) -> (f64, f64) {
    mc_mean(net.dim(), samples, seed, |x| {
        let v = net.value(x);
        v * v
    })
}

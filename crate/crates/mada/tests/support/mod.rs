//! Shared helpers for the integration tests: an independent Dirichlet
//! sampler, an independent log-gamma, and small statistics utilities.
//!
//! Everything here is deliberately written from first principles rather than
//! calling into the crate under test, so Monte-Carlo comparisons act as real
//! oracles instead of tautologies.

#![allow(dead_code)]

use mada::rng::Rng64;

/// Uniform draw strictly inside (0, 1); never returns an exact endpoint, so
/// powers and logarithms of it stay finite.
pub fn uniform_open01(rng: &mut Rng64) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0)
}

/// Gamma(shape, 1) sample via the Marsaglia-Tsang squeeze method, with the
/// standard boost `Gamma(a) = Gamma(a + 1) * U^(1/a)` for shapes below one.
pub fn gamma_sample(rng: &mut Rng64, shape: f64) -> f64 {
    assert!(shape > 0.0 && shape.is_finite(), "gamma shape must be positive");
    if shape < 1.0 {
        let boost = uniform_open01(rng).powf(1.0 / shape);
        return gamma_sample(rng, shape + 1.0) * boost;
    }
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (3.0 * d.sqrt());
    loop {
        let x = rng.normal();
        let t = 1.0 + c * x;
        if t <= 0.0 {
            continue;
        }
        let v = t * t * t;
        let u = uniform_open01(rng);
        if u < 1.0 - 0.0331 * x * x * x * x {
            return d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}

/// One draw from Dirichlet(alpha): normalized independent gamma samples.
pub fn dirichlet_sample(rng: &mut Rng64, alpha: &[f64]) -> Vec<f64> {
    let g: Vec<f64> = alpha.iter().map(|&a| gamma_sample(rng, a)).collect();
    let s: f64 = g.iter().sum();
    g.into_iter().map(|x| x / s).collect()
}

/// Lanczos approximation of ln Gamma(x) (g = 7, 9 coefficients), accurate to
/// roughly 1e-13 relative error over the positive axis.
pub fn lgamma_ref(x: f64) -> f64 {
    const COEF: [f64; 9] = [
        0.99999999999980993,
        676.5203681218851,
        -1259.1392167224028,
        771.32342877765313,
        -176.61502916214059,
        12.507343278686905,
        -0.13857109526572012,
        9.9843695780195716e-6,
        1.5056327351493116e-7,
    ];
    let pi = std::f64::consts::PI;
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
        return (pi / (pi * x).sin()).ln() - lgamma_ref(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = COEF[0];
    for (i, &c) in COEF.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + 7.5;
    0.5 * (2.0 * pi).ln() + (z + 0.5) * t.ln() - t + acc.ln()
}

/// Log-density of Dirichlet(alpha) at a point of the simplex. Coordinates
/// with alpha_i = 1 contribute nothing, so their p_i may be arbitrarily
/// small without producing NaN.
pub fn ln_dirichlet_pdf(alpha: &[f64], p: &[f64]) -> f64 {
    assert_eq!(alpha.len(), p.len());
    let s: f64 = alpha.iter().sum();
    let mut out = lgamma_ref(s);
    for (&a, &pi) in alpha.iter().zip(p) {
        out -= lgamma_ref(a);
        if a != 1.0 {
            out += (a - 1.0) * pi.ln();
        }
    }
    out
}

/// Shannon entropy of a probability vector, zero-safe.
pub fn shannon_entropy(p: &[f64]) -> f64 {
    -p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum::<f64>()
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|&x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod sanity {
    use super::*;

    #[test]
    fn lgamma_ref_matches_known_values() {
        // Gamma(1) = Gamma(2) = 1, Gamma(5) = 24, Gamma(1/2) = sqrt(pi).
        assert!(lgamma_ref(1.0).abs() < 1e-12);
        assert!(lgamma_ref(2.0).abs() < 1e-12);
        assert!((lgamma_ref(5.0) - 24.0f64.ln()).abs() < 1e-12);
        let half = std::f64::consts::PI.sqrt().ln();
        assert!((lgamma_ref(0.5) - half).abs() < 1e-12);
    }

    #[test]
    fn gamma_sample_mean_tracks_shape() {
        let mut rng = Rng64::new(17);
        for &shape in &[0.3, 1.0, 4.5] {
            let n = 40_000;
            let mean: f64 =
                (0..n).map(|_| gamma_sample(&mut rng, shape)).sum::<f64>() / n as f64;
            // Gamma(a, 1) has mean a and variance a; 5 sigma of the mean.
            let bound = 5.0 * (shape / n as f64).sqrt();
            assert!((mean - shape).abs() < bound, "shape {shape}: mean {mean}");
        }
    }

    #[test]
    fn dirichlet_sample_lives_on_the_simplex() {
        let mut rng = Rng64::new(18);
        for _ in 0..200 {
            let p = dirichlet_sample(&mut rng, &[0.2, 1.0, 3.0, 7.0]);
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            assert!(p.iter().all(|&x| x >= 0.0));
        }
    }
}

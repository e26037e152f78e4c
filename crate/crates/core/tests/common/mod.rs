#![allow(dead_code)]

use euler_stat::ensemble::EnsembleSnapshot;
use euler_stat::SpectralField;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Hermitian field with every coefficient uniform in the unit box; not divergence free.
pub fn random_field(n: usize, seed: u64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    SpectralField::from_fn(n, |_, _| {
        [
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        ]
    })
}

/// Divergence-free random field with coefficients decaying like `|k|^-decay`.
pub fn random_solenoidal(n: usize, seed: u64, decay: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = SpectralField::from_fn(n, |k1, k2| {
        let k = ((k1 * k1 + k2 * k2) as f64).sqrt().max(1.0);
        let a = k.powf(-decay);
        [
            Complex64::new(rng.random_range(-a..a), rng.random_range(-a..a)),
            Complex64::new(rng.random_range(-a..a), rng.random_range(-a..a)),
        ]
    });
    f.leray_project()
}

pub fn snapshot(time: f64, fields: Vec<SpectralField>) -> EnsembleSnapshot {
    let seeds = (0..fields.len() as u64).collect();
    EnsembleSnapshot::new(time, fields, seeds).unwrap()
}

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Least-squares slope of `log y` against `log x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Exponent of the mean squared axis increment `E|B(x + h) - B(x)|^2` over
/// periodic `p x p` surfaces, fitted over the given lags.
pub fn increment_exponent(surfaces: &[Vec<f64>], p: usize, lags: &[usize]) -> f64 {
    let var: Vec<f64> = lags
        .iter()
        .map(|&h| {
            let mut acc = 0.0;
            for s in surfaces {
                for i in 0..p {
                    for j in 0..p {
                        let b = s[i * p + j];
                        let dx = s[((i + h) % p) * p + j] - b;
                        let dy = s[i * p + (j + h) % p] - b;
                        acc += dx * dx + dy * dy;
                    }
                }
            }
            acc / (2 * surfaces.len() * p * p) as f64
        })
        .collect();
    let x: Vec<f64> = lags.iter().map(|&h| h as f64).collect();
    log_log_slope(&x, &var)
}

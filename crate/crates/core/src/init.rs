//! Random initial data.
//!
//! Generators work in unit coordinates `xi in [0, 1)^2` and map to the torus by
//! `x = 2 pi xi`. Velocity amplitudes are not rescaled by the mapping. Every
//! sample is a pure function of `(spec, sample_index)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::field::{ScalarGrid, ScalarSpectralField, SpectralField, VectorGrid, TWO_PI};
use crate::rng::{sample_seed, stream_rng};

const PERTURBATION_STREAM: u64 = 0;
const FBM_STREAM: u64 = 1;
const PHASE_STREAM: u64 = 3;

/// Initial-data family.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    FlatSheet,
    SinusoidalSheet,
    Fbm,
    /// Deterministic Taylor-Green vortex, used as a solver check.
    TaylorGreen,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::FlatSheet => "flat_sheet",
            Family::SinusoidalSheet => "sinusoidal_sheet",
            Family::Fbm => "fbm",
            Family::TaylorGreen => "taylor_green",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "flat_sheet" => Some(Family::FlatSheet),
            "sinusoidal_sheet" => Some(Family::SinusoidalSheet),
            "fbm" => Some(Family::Fbm),
            "taylor_green" => Some(Family::TaylorGreen),
            _ => None,
        }
    }
}

/// Parameterized random initial-data family.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialMeasureSpec {
    pub family: Family,
    /// Smoothing length (unit coordinates).
    pub rho: f64,
    /// Perturbation amplitude.
    pub delta: f64,
    /// Number of perturbation terms.
    pub q: usize,
    /// Sheet amplitude of the sinusoidal sheet.
    pub d: f64,
    /// Quadrature points for the sheet mollification.
    pub quad_points: usize,
    /// Hurst index for fBm data.
    pub hurst: f64,
    pub base_seed: u64,
    /// Target modal cutoff.
    pub n: usize,
}

impl InitialMeasureSpec {
    fn base(family: Family, n: usize) -> Self {
        Self {
            family,
            rho: 0.0,
            delta: 0.0,
            q: 10,
            d: 0.2,
            quad_points: 400,
            hurst: 0.5,
            base_seed: 0,
            n,
        }
    }

    pub fn flat_sheet(n: usize, rho: f64, delta: f64) -> Self {
        Self { rho, delta, ..Self::base(Family::FlatSheet, n) }
    }

    /// Sinusoidal sheet with the default smoothing `rho = 5 / N`.
    pub fn sinusoidal_sheet(n: usize, delta: f64) -> Self {
        Self { rho: 5.0 / n as f64, delta, ..Self::base(Family::SinusoidalSheet, n) }
    }

    pub fn fbm(n: usize, hurst: f64) -> Self {
        Self { hurst, ..Self::base(Family::Fbm, n) }
    }

    pub fn taylor_green(n: usize) -> Self {
        Self::base(Family::TaylorGreen, n)
    }

    /// Same measure at another resolution. For the sinusoidal sheet the
    /// smoothing length is kept, so a resolution sweep compares the same data.
    pub fn at_resolution(&self, n: usize) -> Self {
        Self { n, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Argument("N must be positive".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::Argument(format!("delta must be >= 0, got {}", self.delta)));
        }
        match self.family {
            Family::FlatSheet if !(self.rho >= 0.0) => {
                Err(Error::Argument(format!("rho must be >= 0, got {}", self.rho)))
            }
            Family::SinusoidalSheet if !(self.rho > 0.0) => Err(Error::Argument(
                "the sinusoidal sheet needs a positive smoothing length rho".into(),
            )),
            Family::SinusoidalSheet if self.quad_points == 0 => {
                Err(Error::Argument("quadrature point count must be positive".into()))
            }
            Family::Fbm if !(self.hurst > 0.0 && self.hurst < 1.0) => Err(Error::Argument(format!(
                "Hurst index must lie in (0, 1), got {}",
                self.hurst
            ))),
            _ => Ok(()),
        }
    }

    /// Grid on which the generators evaluate the profile before analysis.
    pub fn synthesis_points(&self) -> usize {
        3 * self.n
    }
}

/// Random interface displacement parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct PerturbationDraw {
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl PerturbationDraw {
    /// `alpha_k = delta * U(0, 1)`, `beta_k = U[0, 2 pi)`, drawn alternately.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R, q: usize, delta: f64) -> Self {
        let mut alphas = Vec::with_capacity(q);
        let mut betas = Vec::with_capacity(q);
        for _ in 0..q {
            alphas.push(delta * rng.random::<f64>());
            betas.push(TWO_PI * rng.random::<f64>());
        }
        Self { alphas, betas }
    }

    pub fn zero(q: usize) -> Self {
        Self { alphas: vec![0.0; q], betas: vec![0.0; q] }
    }

    /// Draw for a given sample seed.
    pub fn for_seed(seed: u64, q: usize, delta: f64) -> Self {
        Self::sample(&mut stream_rng(seed, PERTURBATION_STREAM), q, delta)
    }
}

/// `sigma(x1) = sum_k alpha_k sin(2 pi x1 - beta_k)` at unit coordinate `x1`.
pub fn perturbation(draw: &PerturbationDraw, x1: f64) -> f64 {
    draw.alphas
        .iter()
        .zip(&draw.betas)
        .map(|(a, b)| a * (TWO_PI * x1 - b).sin())
        .sum()
}

/// Horizontal velocity of the flat double shear layer at unit height `x2`.
/// `rho = 0` gives the discontinuous profile.
pub fn flat_sheet_profile(x2: f64, rho: f64) -> f64 {
    if rho == 0.0 {
        if x2 > 0.25 && x2 <= 0.75 {
            1.0
        } else {
            -1.0
        }
    } else if x2 <= 0.5 {
        ((x2 - 0.25) / rho).tanh()
    } else {
        ((0.75 - x2) / rho).tanh()
    }
}

/// Third-order B-spline mollifier profile, normalized so that
/// `int_{R^2} psi(|x|) dx = 1`. Vanishes for `r >= 1`.
pub fn bspline(r: f64) -> f64 {
    let cube = |x: f64| if x > 0.0 { x * x * x } else { 0.0 };
    let r = r.abs();
    if r >= 1.0 {
        return 0.0;
    }
    80.0 / (7.0 * PI)
        * (cube(r + 1.0) - 4.0 * cube(r + 0.5) + 6.0 * cube(r) - 4.0 * cube(r - 0.5) + cube(r - 1.0))
}

/// Sample `sample_index` of the measure described by `spec`.
pub fn generate(spec: &InitialMeasureSpec, sample_index: u64) -> Result<SpectralField> {
    generate_from_seed(spec, sample_seed(spec.base_seed, sample_index))
}

/// Sample with an explicit per-sample seed.
pub fn generate_from_seed(spec: &InitialMeasureSpec, seed: u64) -> Result<SpectralField> {
    spec.validate()?;
    match spec.family {
        Family::FlatSheet => flat_sheet_from_seed(spec, seed),
        Family::SinusoidalSheet => sinusoidal_sheet_from_seed(spec, seed),
        Family::Fbm => fbm_from_seed(spec, seed),
        Family::TaylorGreen => Ok(taylor_green(spec.n)),
    }
}

fn require(spec: &InitialMeasureSpec, family: Family) -> Result<()> {
    if spec.family != family {
        return Err(Error::Argument(format!(
            "spec describes {} data, not {}",
            spec.family.name(),
            family.name()
        )));
    }
    Ok(())
}

/// Randomly displaced flat vortex sheet.
pub fn flat_sheet_sample(spec: &InitialMeasureSpec, sample_index: u64) -> Result<SpectralField> {
    require(spec, Family::FlatSheet)?;
    spec.validate()?;
    flat_sheet_from_seed(spec, sample_seed(spec.base_seed, sample_index))
}

fn flat_sheet_from_seed(spec: &InitialMeasureSpec, seed: u64) -> Result<SpectralField> {
    let draw = PerturbationDraw::for_seed(seed, spec.q, spec.delta);
    let m = spec.synthesis_points();
    let mut grid = VectorGrid::zeros(m);
    for j1 in 0..m {
        let sigma = perturbation(&draw, j1 as f64 / m as f64);
        for j2 in 0..m {
            let x2 = (j2 as f64 / m as f64 + sigma).rem_euclid(1.0);
            grid.u1[j1 * m + j2] = flat_sheet_profile(x2, spec.rho);
        }
    }
    Ok(SpectralField::from_physical(&grid, spec.n)?.leray_project())
}

/// Mollified sheet vorticity (unit coordinates) of the curve `x2 = d sin(2 pi x1)`
/// sampled on an `m x m` grid, before mean removal.
pub fn sinusoidal_sheet_vorticity(m: usize, rho: f64, d: f64, quad_points: usize) -> ScalarGrid {
    let q = quad_points as i64;
    let step = rho / quad_points as f64;
    let mut values = vec![0.0; m * m];
    for j1 in 0..m {
        let x1 = j1 as f64 / m as f64;
        // Curve nodes under the mollifier support of this column.
        let nodes: Vec<(f64, f64, f64)> = (-q..=q)
            .map(|i| {
                let dx = i as f64 * step;
                let xi = x1 + dx;
                let g = d * (TWO_PI * xi).sin();
                let slope = d * TWO_PI * (TWO_PI * xi).cos();
                (dx, g, (1.0 + slope * slope).sqrt())
            })
            .collect();
        for j2 in 0..m {
            let x2 = j2 as f64 / m as f64;
            let mut acc = 0.0;
            for &(dx, g, arc) in &nodes {
                let dy = (x2 - g + 0.5).rem_euclid(1.0) - 0.5;
                let r = (dx * dx + dy * dy).sqrt() / rho;
                if r < 1.0 {
                    acc += bspline(r) * arc;
                }
            }
            values[j1 * m + j2] = acc * step / (rho * rho);
        }
    }
    ScalarGrid::new(m, values).expect("grid size is consistent")
}

/// Randomly displaced, mollified sinusoidal vortex sheet.
pub fn sinusoidal_sheet_sample(spec: &InitialMeasureSpec, sample_index: u64) -> Result<SpectralField> {
    require(spec, Family::SinusoidalSheet)?;
    spec.validate()?;
    sinusoidal_sheet_from_seed(spec, sample_seed(spec.base_seed, sample_index))
}

fn sinusoidal_sheet_from_seed(spec: &InitialMeasureSpec, seed: u64) -> Result<SpectralField> {
    let m = spec.synthesis_points();
    let mut omega = sinusoidal_sheet_vorticity(m, spec.rho, spec.d, spec.quad_points);
    let mean = omega.values.iter().sum::<f64>() / (m * m) as f64;
    // Unit-coordinate vorticity; the torus curl carries a factor 1 / (2 pi).
    omega.values.iter_mut().for_each(|w| *w = (*w - mean) / TWO_PI);
    let mut omega_hat = ScalarSpectralField::from_physical(&omega, spec.n)?;
    omega_hat.remove_mean();
    let sheet = SpectralField::velocity_from_vorticity(&omega_hat)?;

    let draw = PerturbationDraw::for_seed(seed, spec.q, spec.delta);
    let shifts: Vec<f64> = (0..m)
        .map(|j1| TWO_PI * perturbation(&draw, j1 as f64 / m as f64))
        .collect();
    let grid = sheet.to_physical_column_shifted(m, &shifts)?;
    Ok(SpectralField::from_physical(&grid, spec.n)?.leray_project())
}

/// Periodic fractional Brownian surface on a `2^levels` torus grid by
/// diamond-square midpoint displacement. Each new node is predicted with the
/// four-point Deslauriers-Dubuc rule `(-1, 9, 9, -1) / 16`, averaged over the
/// two lattice directions through it (diagonals for the diamond step, axes
/// for the square step), then displaced by a normal variate. Standard
/// deviations shrink by `2^(-H/2)` per half step, so the square step of
/// level `l` uses `2^(-l H)`. The corner value is standard normal.
pub fn fbm_surface<R: Rng + ?Sized>(rng: &mut R, levels: u32, hurst: f64) -> Vec<f64> {
    let p = 1usize << levels;
    let pi = p as i64;
    let mut h = vec![0.0; p * p];
    let at = |i: i64, j: i64| (i.rem_euclid(pi) as usize) * p + j.rem_euclid(pi) as usize;
    // Prediction along direction (di, dj) from nodes at offsets +-1 and +-3.
    let predict = |h: &[f64], i: i64, j: i64, di: i64, dj: i64| {
        (9.0 * (h[at(i - di, j - dj)] + h[at(i + di, j + dj)])
            - (h[at(i - 3 * di, j - 3 * dj)] + h[at(i + 3 * di, j + 3 * dj)]))
            / 16.0
    };
    h[0] = rng.sample::<f64, _>(StandardNormal);
    let mut step = pi;
    let mut level = 1;
    while step > 1 {
        let half = step / 2;
        let sigma = 2f64.powf(-(level as f64) * hurst);
        let sigma_diamond = sigma * 2f64.powf(0.5 * hurst);
        for i in (half..pi).step_by(step as usize) {
            for j in (half..pi).step_by(step as usize) {
                let guess = 0.5 * (predict(&h, i, j, half, half) + predict(&h, i, j, half, -half));
                h[at(i, j)] = guess + sigma_diamond * rng.sample::<f64, _>(StandardNormal);
            }
        }
        for i in (0..pi).step_by(half as usize) {
            let start = if (i / half) % 2 == 0 { half } else { 0 };
            for j in (start..pi).step_by(step as usize) {
                let guess = 0.5 * (predict(&h, i, j, half, 0) + predict(&h, i, j, 0, half));
                h[at(i, j)] = guess + sigma * rng.sample::<f64, _>(StandardNormal);
            }
        }
        step = half;
        level += 1;
    }
    h
}

/// Dyadic level used for fBm data at cutoff `n`: smallest `2^L >= 2N + 1`.
pub fn fbm_levels(n: usize) -> u32 {
    (2 * n + 1).next_power_of_two().trailing_zeros()
}

/// Independent fBm surfaces in both velocity components, Leray-projected.
pub fn fbm_sample(spec: &InitialMeasureSpec, sample_index: u64) -> Result<SpectralField> {
    require(spec, Family::Fbm)?;
    spec.validate()?;
    fbm_from_seed(spec, sample_seed(spec.base_seed, sample_index))
}

fn fbm_from_seed(spec: &InitialMeasureSpec, seed: u64) -> Result<SpectralField> {
    let levels = fbm_levels(spec.n);
    let p = 1usize << levels;
    let mut components = [0, 1].map(|c| fbm_surface(&mut stream_rng(seed, FBM_STREAM + c), levels, spec.hurst));
    for comp in components.iter_mut() {
        let mean = comp.iter().sum::<f64>() / comp.len() as f64;
        comp.iter_mut().for_each(|v| *v -= mean);
    }
    let [u1, u2] = components;
    let grid = VectorGrid::new(p, u1, u2)?;
    Ok(SpectralField::from_physical(&grid, spec.n)?.leray_project())
}

/// Taylor-Green vortex `(sin x1 cos x2, -cos x1 sin x2)`, a steady Euler solution.
pub fn taylor_green(n: usize) -> SpectralField {
    let mut u = SpectralField::zeros(n);
    if n == 0 {
        return u;
    }
    // sin x1 cos x2 = sum over s1, s2 = +-1 of (s1 / 4i) e^{i(s1 x1 + s2 x2)}
    let q = Complex64::new(0.0, -0.25);
    for s1 in [-1i64, 1] {
        for s2 in [-1i64, 1] {
            let idx = u.index(s1, s2);
            u.coeffs_mut()[idx] = [q * s1 as f64, -q * s2 as f64];
        }
    }
    u
}

/// Divergence-free field with random phases and `|u_k|^2 = |k|^(-2 beta - 1)`,
/// so the shell spectrum behaves like `K^(-2 beta)`. Modes with
/// `|k| > k_max` are left empty.
pub fn power_law_sample(n: usize, beta: f64, k_max: f64, seed: u64) -> SpectralField {
    let mut rng = stream_rng(seed, PHASE_STREAM);
    let mut u = SpectralField::zeros(n);
    let ni = n as i64;
    for k1 in 0..=ni {
        for k2 in -ni..=ni {
            // Upper half plane; the partner follows from symmetry.
            if k1 == 0 && k2 <= 0 {
                continue;
            }
            let phase = TWO_PI * rng.random::<f64>();
            let kk = (k1 * k1 + k2 * k2) as f64;
            let k = kk.sqrt();
            if k > k_max {
                continue;
            }
            let amp = kk.powf(-(2.0 * beta + 1.0) / 4.0);
            let z = Complex64::from_polar(amp, phase);
            u.set_mode(k1, k2, [z * (-k2 as f64 / k), z * (k1 as f64 / k)]);
        }
    }
    u
}

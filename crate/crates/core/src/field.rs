//! Fourier representation of real, zero-mean fields on the torus `[0, 2pi)^2`.
//!
//! Coefficients are stored on the full square `|k|_inf <= N`, row-major with
//! `k1` as the outer index. Hermitian symmetry `c(-k) = conj(c(k))` is kept
//! explicitly and the mean mode is always zero for velocity fields.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;

pub const TWO_PI: f64 = 2.0 * PI;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

/// Index of wavenumber `k` on an `m`-point periodic grid.
#[inline]
fn wrap(k: i64, m: usize) -> usize {
    k.rem_euclid(m as i64) as usize
}

/// Real vector field sampled on an `n x n` equispaced grid, `x_j = 2 pi j / n`.
///
/// Storage is row-major with the `x1` index outer.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGrid {
    n: usize,
    pub u1: Vec<f64>,
    pub u2: Vec<f64>,
}

impl VectorGrid {
    pub fn zeros(n: usize) -> Self {
        Self { n, u1: vec![0.0; n * n], u2: vec![0.0; n * n] }
    }

    pub fn new(n: usize, u1: Vec<f64>, u2: Vec<f64>) -> Result<Self> {
        if u1.len() != n * n || u2.len() != n * n {
            return Err(Error::Shape(format!(
                "expected {n}x{n} = {} values per component, got {} and {}",
                n * n,
                u1.len(),
                u2.len()
            )));
        }
        Ok(Self { n, u1, u2 })
    }

    /// Build from nested rows `rows[j1][j2] = [u1, u2]`; rejects non-square input.
    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<Self> {
        let n = rows.len();
        let mut grid = Self::zeros(n);
        for (j1, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Shape(format!(
                    "grid is not square: {n} rows but row {j1} has {} entries",
                    row.len()
                )));
            }
            for (j2, v) in row.iter().enumerate() {
                grid.u1[j1 * n + j2] = v[0];
                grid.u2[j1 * n + j2] = v[1];
            }
        }
        Ok(grid)
    }

    /// Sample a function of the physical coordinates.
    pub fn from_fn(n: usize, mut f: impl FnMut(f64, f64) -> [f64; 2]) -> Self {
        let mut grid = Self::zeros(n);
        let h = TWO_PI / n as f64;
        for j1 in 0..n {
            for j2 in 0..n {
                let v = f(j1 as f64 * h, j2 as f64 * h);
                grid.u1[j1 * n + j2] = v[0];
                grid.u2[j1 * n + j2] = v[1];
            }
        }
        grid
    }

    pub fn points(&self) -> usize {
        self.n
    }

    pub fn get(&self, j1: usize, j2: usize) -> [f64; 2] {
        let i = j1 * self.n + j2;
        [self.u1[i], self.u2[i]]
    }

    pub fn max_speed(&self) -> f64 {
        self.u1
            .iter()
            .zip(&self.u2)
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }
}

/// Real scalar field sampled on an `n x n` equispaced grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    n: usize,
    pub values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(n: usize) -> Self {
        Self { n, values: vec![0.0; n * n] }
    }

    pub fn new(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n {
            return Err(Error::Shape(format!(
                "expected {} values, got {}",
                n * n,
                values.len()
            )));
        }
        Ok(Self { n, values })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(f64, f64) -> f64) -> Self {
        let h = TWO_PI / n as f64;
        let mut values = Vec::with_capacity(n * n);
        for j1 in 0..n {
            for j2 in 0..n {
                values.push(f(j1 as f64 * h, j2 as f64 * h));
            }
        }
        Self { n, values }
    }

    pub fn points(&self) -> usize {
        self.n
    }

    pub fn get(&self, j1: usize, j2: usize) -> f64 {
        self.values[j1 * self.n + j2]
    }

    /// Grid quadrature of `f^2` over the torus, square-rooted.
    pub fn l2_norm(&self) -> f64 {
        let cell = (TWO_PI / self.n as f64).powi(2);
        (self.values.iter().map(|v| v * v).sum::<f64>() * cell).sqrt()
    }
}

/// Divergence-free (after projection), real, zero-mean velocity field in Fourier space.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    n: usize,
    coeffs: Vec<[Complex64; 2]>,
}

impl SpectralField {
    pub fn zeros(n: usize) -> Self {
        let side = 2 * n + 1;
        Self { n, coeffs: vec![[ZERO; 2]; side * side] }
    }

    /// Build from a coefficient function. Hermitian symmetry is enforced by
    /// averaging `c(k)` with `conj(c(-k))`, and the mean mode is zeroed.
    pub fn from_fn(n: usize, mut f: impl FnMut(i64, i64) -> [Complex64; 2]) -> Self {
        let mut field = Self::zeros(n);
        let ni = n as i64;
        for k1 in -ni..=ni {
            for k2 in -ni..=ni {
                let idx = field.index(k1, k2);
                field.coeffs[idx] = f(k1, k2);
            }
        }
        field.enforce_hermitian();
        field
    }

    /// Build from raw storage-ordered coefficients (k1 outer, k2 inner).
    pub fn from_coeffs(n: usize, coeffs: Vec<[Complex64; 2]>) -> Result<Self> {
        let side = 2 * n + 1;
        if coeffs.len() != side * side {
            return Err(Error::Shape(format!(
                "expected {} coefficients for N = {n}, got {}",
                side * side,
                coeffs.len()
            )));
        }
        let mut field = Self { n, coeffs };
        let zero = field.index(0, 0);
        field.coeffs[zero] = [ZERO; 2];
        Ok(field)
    }

    /// Modal cutoff `N`.
    pub fn resolution(&self) -> usize {
        self.n
    }

    pub fn side(&self) -> usize {
        2 * self.n + 1
    }

    #[inline]
    pub fn index(&self, k1: i64, k2: i64) -> usize {
        let n = self.n as i64;
        debug_assert!(k1.abs() <= n && k2.abs() <= n);
        ((k1 + n) as usize) * self.side() + (k2 + n) as usize
    }

    /// Coefficient at `k`; zero outside the stored square.
    pub fn coeff(&self, k1: i64, k2: i64) -> [Complex64; 2] {
        let n = self.n as i64;
        if k1.abs() > n || k2.abs() > n {
            return [ZERO; 2];
        }
        self.coeffs[self.index(k1, k2)]
    }

    /// Set a coefficient and its Hermitian partner. Setting `k = 0` is ignored.
    pub fn set_mode(&mut self, k1: i64, k2: i64, value: [Complex64; 2]) {
        if k1 == 0 && k2 == 0 {
            return;
        }
        let a = self.index(k1, k2);
        let b = self.index(-k1, -k2);
        self.coeffs[a] = value;
        self.coeffs[b] = [value[0].conj(), value[1].conj()];
    }

    pub fn coeffs(&self) -> &[[Complex64; 2]] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [[Complex64; 2]] {
        &mut self.coeffs
    }

    /// Wavenumbers in storage order.
    pub fn wavenumbers(&self) -> impl Iterator<Item = (i64, i64)> {
        wavenumbers(self.n)
    }

    pub fn modes(&self) -> impl Iterator<Item = ((i64, i64), &[Complex64; 2])> {
        wavenumbers(self.n).zip(self.coeffs.iter())
    }

    /// Restore `c(-k) = conj(c(k))` and `c(0) = 0`.
    pub fn enforce_hermitian(&mut self) {
        let side = self.side();
        let total = side * side;
        // Storage index of -k is total - 1 - index(k).
        for a in 0..total / 2 {
            let b = total - 1 - a;
            let ca = self.coeffs[a];
            let cb = self.coeffs[b];
            let avg = [(ca[0] + cb[0].conj()) * 0.5, (ca[1] + cb[1].conj()) * 0.5];
            self.coeffs[a] = avg;
            self.coeffs[b] = [avg[0].conj(), avg[1].conj()];
        }
        self.coeffs[total / 2] = [ZERO; 2];
    }

    /// Largest deviation from Hermitian symmetry.
    pub fn hermitian_defect(&self) -> f64 {
        let total = self.coeffs.len();
        (0..total)
            .map(|a| {
                let b = total - 1 - a;
                (self.coeffs[a][0] - self.coeffs[b][0].conj())
                    .norm()
                    .max((self.coeffs[a][1] - self.coeffs[b][1].conj()).norm())
            })
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs
            .iter()
            .all(|c| c[0].re.is_finite() && c[0].im.is_finite() && c[1].re.is_finite() && c[1].im.is_finite())
    }

    /// Synthesize on a `grid_points^2` grid. Requires `grid_points >= 2N + 1`.
    pub fn to_physical(&self, grid_points: usize) -> Result<VectorGrid> {
        let m = grid_points;
        if m < 2 * self.n + 1 {
            return Err(Error::Resolution(format!(
                "synthesis grid of {m} points cannot represent N = {} (need >= {})",
                self.n,
                2 * self.n + 1
            )));
        }
        // Pack both real components into one complex transform: z = u1 + i u2.
        let mut buf = vec![ZERO; m * m];
        for ((k1, k2), c) in self.modes() {
            buf[wrap(k1, m) * m + wrap(k2, m)] = c[0] + I * c[1];
        }
        fft::inverse(&mut buf, m);
        let u1 = buf.iter().map(|z| z.re).collect();
        let u2 = buf.iter().map(|z| z.im).collect();
        Ok(VectorGrid { n: m, u1, u2 })
    }

    /// Synthesize with column `j1` shifted vertically: node `(j1, j2)` receives
    /// `u(x1_j1, x2_j2 + shifts[j1])`.
    pub fn to_physical_column_shifted(&self, grid_points: usize, shifts: &[f64]) -> Result<VectorGrid> {
        let m = grid_points;
        if m < 2 * self.n + 1 {
            return Err(Error::Resolution(format!(
                "synthesis grid of {m} points cannot represent N = {}",
                self.n
            )));
        }
        if shifts.len() != m {
            return Err(Error::Shape(format!("expected {m} column shifts, got {}", shifts.len())));
        }
        let n = self.n as i64;
        let side = self.side();
        let mut grid = VectorGrid::zeros(m);
        let mut line = vec![ZERO; m];
        for (j1, shift) in shifts.iter().enumerate() {
            let x1 = TWO_PI * j1 as f64 / m as f64;
            line.iter_mut().for_each(|z| *z = ZERO);
            let phases: Vec<Complex64> = (-n..=n).map(|k1| Complex64::from_polar(1.0, k1 as f64 * x1)).collect();
            for k2 in -n..=n {
                let mut acc = ZERO;
                for (a, e) in phases.iter().enumerate() {
                    let c = self.coeffs[a * side + (k2 + n) as usize];
                    acc += (c[0] + I * c[1]) * e;
                }
                line[wrap(k2, m)] = acc * Complex64::from_polar(1.0, k2 as f64 * shift);
            }
            fft::inverse_1d(&mut line);
            for (j2, z) in line.iter().enumerate() {
                grid.u1[j1 * m + j2] = z.re;
                grid.u2[j1 * m + j2] = z.im;
            }
        }
        Ok(grid)
    }

    /// Fourier projection `P_N` of a grid function; the mean is removed.
    pub fn from_physical(grid: &VectorGrid, n: usize) -> Result<Self> {
        let m = grid.n;
        if m < 2 * n + 1 {
            return Err(Error::Resolution(format!(
                "grid of {m} points is too coarse for N = {n} (need >= {})",
                2 * n + 1
            )));
        }
        let mut buf: Vec<Complex64> = grid
            .u1
            .iter()
            .zip(&grid.u2)
            .map(|(a, b)| Complex64::new(*a, *b))
            .collect();
        fft::forward(&mut buf, m);
        let scale = 1.0 / (m * m) as f64;
        let mut field = Self::zeros(n);
        let ni = n as i64;
        for k1 in -ni..=ni {
            for k2 in -ni..=ni {
                let z = buf[wrap(k1, m) * m + wrap(k2, m)] * scale;
                let zc = buf[wrap(-k1, m) * m + wrap(-k2, m)].conj() * scale;
                let idx = field.index(k1, k2);
                field.coeffs[idx] = [(z + zc) * 0.5, (z - zc) * Complex64::new(0.0, -0.5)];
            }
        }
        let zero = field.index(0, 0);
        field.coeffs[zero] = [ZERO; 2];
        Ok(field)
    }

    /// Leray projection `(I - k k^T / |k|^2) c(k)`.
    pub fn leray_project(&self) -> Self {
        let mut out = self.clone();
        out.leray_project_in_place();
        out
    }

    pub fn leray_project_in_place(&mut self) {
        let n = self.n as i64;
        let mut idx = 0;
        for k1 in -n..=n {
            for k2 in -n..=n {
                let c = &mut self.coeffs[idx];
                idx += 1;
                if k1 == 0 && k2 == 0 {
                    *c = [ZERO; 2];
                    continue;
                }
                let (a, b) = (k1 as f64, k2 as f64);
                let kk = a * a + b * b;
                let dot = (c[0] * a + c[1] * b) / kk;
                c[0] -= dot * a;
                c[1] -= dot * b;
            }
        }
    }

    /// Discrete curl `i (k1 u2 - k2 u1)`.
    pub fn vorticity(&self) -> ScalarSpectralField {
        let coeffs = self
            .modes()
            .map(|((k1, k2), c)| I * (c[1] * k1 as f64 - c[0] * k2 as f64))
            .collect();
        ScalarSpectralField { n: self.n, coeffs }
    }

    /// Divergence-free velocity whose curl is `omega`. Fails on nonzero mean vorticity.
    pub fn velocity_from_vorticity(omega: &ScalarSpectralField) -> Result<Self> {
        let mean = omega.coeff(0, 0).norm();
        let scale = omega.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if mean > 1e-12 * scale.max(1.0) {
            return Err(Error::Inconsistent(format!(
                "vorticity has nonzero mean {mean:e}; a periodic velocity needs zero circulation"
            )));
        }
        let coeffs = omega
            .modes()
            .map(|((k1, k2), w)| {
                if k1 == 0 && k2 == 0 {
                    return [ZERO; 2];
                }
                let kk = (k1 * k1 + k2 * k2) as f64;
                let f = I * *w / kk;
                [f * k2 as f64, -f * k1 as f64]
            })
            .collect();
        Ok(Self { n: omega.n, coeffs })
    }

    /// `((2 pi)^2 sum_k (1 + |k|^2)^e |c(k)|^2)^(1/2)`.
    pub fn sobolev_norm(&self, exponent: f64) -> f64 {
        let sum: f64 = self
            .modes()
            .map(|((k1, k2), c)| {
                let w = if exponent == 0.0 {
                    1.0
                } else {
                    (1.0 + (k1 * k1 + k2 * k2) as f64).powf(exponent)
                };
                w * (c[0].norm_sqr() + c[1].norm_sqr())
            })
            .sum();
        TWO_PI * sum.sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// Modal energy `sum_k |c(k)|^2` (equals the squared L2 norm over `(2 pi)^2`).
    pub fn energy(&self) -> f64 {
        self.coeffs
            .iter()
            .map(|c| c[0].norm_sqr() + c[1].norm_sqr())
            .sum()
    }

    /// Keep only `|k|_inf <= n_coarse`.
    pub fn truncate_to(&self, n_coarse: usize) -> Result<Self> {
        if n_coarse > self.n {
            return Err(Error::Argument(format!(
                "cannot truncate N = {} to larger cutoff {n_coarse}",
                self.n
            )));
        }
        Ok(Self::from_fn_unchecked(n_coarse, |k1, k2| self.coeff(k1, k2)))
    }

    /// Zero-pad to a larger cutoff.
    pub fn embed_in(&self, n_fine: usize) -> Result<Self> {
        if n_fine < self.n {
            return Err(Error::Argument(format!(
                "cannot embed N = {} into smaller cutoff {n_fine}",
                self.n
            )));
        }
        Ok(Self::from_fn_unchecked(n_fine, |k1, k2| self.coeff(k1, k2)))
    }

    fn from_fn_unchecked(n: usize, mut f: impl FnMut(i64, i64) -> [Complex64; 2]) -> Self {
        let coeffs = wavenumbers(n).map(|(k1, k2)| f(k1, k2)).collect();
        let mut field = Self { n, coeffs };
        let zero = field.index(0, 0);
        field.coeffs[zero] = [ZERO; 2];
        field
    }

    /// `max_k |k . c(k)|`.
    pub fn max_divergence(&self) -> f64 {
        self.modes()
            .map(|((k1, k2), c)| (c[0] * k1 as f64 + c[1] * k2 as f64).norm())
            .fold(0.0, f64::max)
    }

    /// Point evaluation `sum_k c(k) exp(i k.x)`.
    pub fn eval_at(&self, x: [f64; 2]) -> [f64; 2] {
        let n = self.n as i64;
        let e1: Vec<Complex64> = (-n..=n).map(|k| Complex64::from_polar(1.0, k as f64 * x[0])).collect();
        let e2: Vec<Complex64> = (-n..=n).map(|k| Complex64::from_polar(1.0, k as f64 * x[1])).collect();
        let side = self.side();
        let mut acc = [ZERO; 2];
        for (a, ea) in e1.iter().enumerate() {
            let row = &self.coeffs[a * side..(a + 1) * side];
            let mut inner = [ZERO; 2];
            for (c, eb) in row.iter().zip(&e2) {
                inner[0] += c[0] * eb;
                inner[1] += c[1] * eb;
            }
            acc[0] += inner[0] * ea;
            acc[1] += inner[1] * ea;
        }
        [acc[0].re, acc[1].re]
    }

    /// `self += a * other`.
    pub fn add_scaled(&mut self, a: f64, other: &Self) {
        assert_eq!(self.n, other.n, "resolution mismatch");
        for (c, o) in self.coeffs.iter_mut().zip(&other.coeffs) {
            c[0] += o[0] * a;
            c[1] += o[1] * a;
        }
    }

    /// `a * x + b * y`.
    pub fn lin_comb(a: f64, x: &Self, b: f64, y: &Self) -> Self {
        assert_eq!(x.n, y.n, "resolution mismatch");
        let coeffs = x
            .coeffs
            .iter()
            .zip(&y.coeffs)
            .map(|(p, q)| [p[0] * a + q[0] * b, p[1] * a + q[1] * b])
            .collect();
        Self { n: x.n, coeffs }
    }

    pub fn scaled(&self, a: f64) -> Self {
        let coeffs = self.coeffs.iter().map(|c| [c[0] * a, c[1] * a]).collect();
        Self { n: self.n, coeffs }
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: Self) -> SpectralField {
        SpectralField::lin_comb(1.0, self, 1.0, rhs)
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: Self) -> SpectralField {
        SpectralField::lin_comb(1.0, self, -1.0, rhs)
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

/// Wavenumbers of the square `|k|_inf <= n` in storage order.
pub fn wavenumbers(n: usize) -> impl Iterator<Item = (i64, i64)> {
    let n = n as i64;
    (-n..=n).flat_map(move |k1| (-n..=n).map(move |k2| (k1, k2)))
}

/// Scalar field (vorticity, stream function) in Fourier space.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarSpectralField {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl ScalarSpectralField {
    pub fn zeros(n: usize) -> Self {
        let side = 2 * n + 1;
        Self { n, coeffs: vec![ZERO; side * side] }
    }

    /// Build from a coefficient function with Hermitian symmetry enforced.
    /// The mean mode is kept as given.
    pub fn from_fn(n: usize, mut f: impl FnMut(i64, i64) -> Complex64) -> Self {
        let coeffs: Vec<Complex64> = wavenumbers(n).map(|(k1, k2)| f(k1, k2)).collect();
        let total = coeffs.len();
        let mut out = coeffs.clone();
        for a in 0..total {
            out[a] = (coeffs[a] + coeffs[total - 1 - a].conj()) * 0.5;
        }
        Self { n, coeffs: out }
    }

    pub fn resolution(&self) -> usize {
        self.n
    }

    fn index(&self, k1: i64, k2: i64) -> usize {
        let n = self.n as i64;
        ((k1 + n) as usize) * (2 * self.n + 1) + (k2 + n) as usize
    }

    pub fn coeff(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.n as i64;
        if k1.abs() > n || k2.abs() > n {
            return ZERO;
        }
        self.coeffs[self.index(k1, k2)]
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn modes(&self) -> impl Iterator<Item = ((i64, i64), &Complex64)> {
        wavenumbers(self.n).zip(self.coeffs.iter())
    }

    pub fn mean(&self) -> f64 {
        self.coeff(0, 0).re
    }

    /// Set the mean mode to zero.
    pub fn remove_mean(&mut self) {
        let idx = self.index(0, 0);
        self.coeffs[idx] = ZERO;
    }

    pub fn to_physical(&self, grid_points: usize) -> Result<ScalarGrid> {
        let m = grid_points;
        if m < 2 * self.n + 1 {
            return Err(Error::Resolution(format!(
                "synthesis grid of {m} points cannot represent N = {}",
                self.n
            )));
        }
        let mut buf = vec![ZERO; m * m];
        for ((k1, k2), c) in self.modes() {
            buf[wrap(k1, m) * m + wrap(k2, m)] = *c;
        }
        fft::inverse(&mut buf, m);
        Ok(ScalarGrid { n: m, values: buf.iter().map(|z| z.re).collect() })
    }

    /// Fourier projection of a grid function (mean retained).
    pub fn from_physical(grid: &ScalarGrid, n: usize) -> Result<Self> {
        let m = grid.n;
        if m < 2 * n + 1 {
            return Err(Error::Resolution(format!(
                "grid of {m} points is too coarse for N = {n}"
            )));
        }
        let mut buf: Vec<Complex64> = grid.values.iter().map(|v| Complex64::new(*v, 0.0)).collect();
        fft::forward(&mut buf, m);
        let scale = 1.0 / (m * m) as f64;
        Ok(Self::from_fn(n, |k1, k2| buf[wrap(k1, m) * m + wrap(k2, m)] * scale))
    }
}

//! Spectral hyper-viscosity discretization of 2D incompressible Euler.
//!
//! Each Fourier mode evolves as
//!
//! ```text
//! d/dt u_k = -P_k (i k . (u (x) u)_k) - eps_N Q_k |k|^(2s) u_k,   |k|_inf <= N, k != 0
//! ```
//!
//! with `P_k` the Leray projector. The quadratic term is evaluated on a padded
//! grid so that no aliased products reach the retained modes. Time stepping is
//! the three-stage strong-stability-preserving Runge-Kutta scheme with an
//! advective CFL bound and an explicit diffusion bound.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft;
use crate::field::{SpectralField, TWO_PI};

/// Real-axis extent of the SSP-RK3 stability region (approximately 2.51).
const RK3_REAL_STABILITY: f64 = 2.5;

/// Fourier multiplier family for the viscosity term.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Multiplier {
    /// `Q_k = max(1 - N / |k|^2, 0)`, i.e. a cutoff at `sqrt(N)`.
    Sphinx,
    /// `Q_k = 1 - (m_N / |k|)^((2s - 1) / theta)` above `m_N`, zero below.
    General { theta: f64 },
}

impl Multiplier {
    /// Largest admissible-range value `0.9 (2s - 1) / (2s)`.
    pub fn default_theta(s: u32) -> f64 {
        let s = s as f64;
        0.9 * (2.0 * s - 1.0) / (2.0 * s)
    }
}

/// Scheme parameters.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverParams {
    /// Modal cutoff.
    pub n: usize,
    /// Hyper-viscosity order, `>= 1`.
    pub s: u32,
    /// Dissipation amplitude; the scheme uses `eps_N = eps N^(1 - 2s)`.
    pub eps: f64,
    /// Dissipation-free cutoff `m_N` (used by the general multiplier).
    pub m_n: usize,
    pub multiplier: Multiplier,
    pub cfl: f64,
    pub visc_safety: f64,
    /// Padding factor for the quadratic term.
    pub dealias: f64,
    /// Test hook: `false` drops the advection term, leaving pure damping.
    pub nonlinear: bool,
}

impl SolverParams {
    /// Defaults: `s = 1`, `eps = 1/20`, `m_N = floor(sqrt N)`, SPHINX multiplier.
    pub fn new(n: usize) -> Self {
        Self {
            n,
            s: 1,
            eps: 1.0 / 20.0,
            m_n: (n as f64).sqrt().floor() as usize,
            multiplier: Multiplier::Sphinx,
            cfl: 0.5,
            visc_safety: 0.9,
            dealias: 1.5,
            nonlinear: true,
        }
    }

    /// Same parameters at another resolution, with `m_N` rescaled to `floor(sqrt N)`.
    pub fn at_resolution(&self, n: usize) -> Self {
        Self { n, m_n: (n as f64).sqrt().floor() as usize, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Argument("N must be positive".into()));
        }
        if self.s == 0 {
            return Err(Error::Argument("hyper-viscosity order s must be >= 1".into()));
        }
        if !(self.eps >= 0.0 && self.eps.is_finite()) {
            return Err(Error::Argument(format!("eps must be finite and >= 0, got {}", self.eps)));
        }
        if !(self.cfl >= 0.0) || !(self.visc_safety > 0.0) {
            return Err(Error::Argument("cfl must be >= 0 and visc_safety > 0".into()));
        }
        if !(self.dealias >= 1.0) {
            return Err(Error::Argument(format!("dealias factor must be >= 1, got {}", self.dealias)));
        }
        if let Multiplier::General { theta } = self.multiplier {
            if !(theta > 0.0) {
                return Err(Error::Argument(format!("theta must be positive, got {theta}")));
            }
        }
        Ok(())
    }

    pub fn eps_n(&self) -> f64 {
        self.eps * (self.n as f64).powi(1 - 2 * self.s as i32)
    }

    /// Multiplier coefficient `Q_k`.
    pub fn q_hat(&self, k1: i64, k2: i64) -> f64 {
        let kk = (k1 * k1 + k2 * k2) as f64;
        match self.multiplier {
            Multiplier::Sphinx => {
                let n = self.n as f64;
                if kk > n {
                    1.0 - n / kk
                } else {
                    0.0
                }
            }
            Multiplier::General { theta } => {
                let k = kk.sqrt();
                let m = self.m_n as f64;
                if k > m {
                    1.0 - (m / k).powf((2.0 * self.s as f64 - 1.0) / theta)
                } else {
                    0.0
                }
            }
        }
    }

    /// Damping rate `eps_N Q_k |k|^(2s)` of mode `k`.
    pub fn damping_rate(&self, k1: i64, k2: i64) -> f64 {
        let kk = (k1 * k1 + k2 * k2) as f64;
        self.eps_n() * self.q_hat(k1, k2) * kk.powi(self.s as i32)
    }

    /// Points per axis of the padded grid for the quadratic term.
    pub fn padded_points(&self) -> usize {
        fft::next_smooth((self.dealias * 2.0 * self.n as f64).ceil() as usize + 1)
    }
}

/// Energy bookkeeping in modal normalization (`E = sum_k |u_k|^2`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyLedger {
    pub e0: f64,
    pub energy: f64,
    /// Accumulated `2 eps_N int sum_k Q_k |k|^(2s) |u_k|^2 dt`.
    pub dissipation: f64,
    pub time: f64,
    pub steps: usize,
}

impl EnergyLedger {
    pub fn new(e0: f64) -> Self {
        Self { e0, energy: e0, dissipation: 0.0, time: 0.0, steps: 0 }
    }

    /// `|E + D - E0| / E0`.
    pub fn balance_defect(&self) -> f64 {
        if self.e0 == 0.0 {
            return (self.energy + self.dissipation).abs();
        }
        (self.energy + self.dissipation - self.e0).abs() / self.e0
    }
}

/// State handed to an observer at each requested output time.
#[derive(Debug)]
pub struct Observation<'a> {
    pub time: f64,
    pub field: &'a SpectralField,
    pub energy: f64,
    pub dissipation: f64,
}

/// Integrator for one trajectory.
#[derive(Clone, Debug)]
pub struct Solver {
    params: SolverParams,
    rates: Vec<f64>,
    lambda_max: f64,
    padded: usize,
}

impl Solver {
    pub fn new(params: SolverParams) -> Result<Self> {
        params.validate()?;
        let rates: Vec<f64> = crate::field::wavenumbers(params.n)
            .map(|(k1, k2)| params.damping_rate(k1, k2))
            .collect();
        let lambda_max = rates.iter().copied().fold(0.0, f64::max);
        let padded = params.padded_points();
        Ok(Self { params, rates, lambda_max, padded })
    }

    pub fn params(&self) -> &SolverParams {
        &self.params
    }

    /// Largest damping rate over all retained modes.
    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    fn check(&self, u: &SpectralField) -> Result<()> {
        if u.resolution() != self.params.n {
            return Err(Error::Argument(format!(
                "field resolution {} does not match solver N = {}",
                u.resolution(),
                self.params.n
            )));
        }
        Ok(())
    }

    /// Time derivative of every retained mode.
    pub fn rhs(&self, u: &SpectralField) -> Result<SpectralField> {
        self.check(u)?;
        let mut out = if self.params.nonlinear {
            self.advection(u)?
        } else {
            SpectralField::zeros(self.params.n)
        };
        for ((o, c), rate) in out.coeffs_mut().iter_mut().zip(u.coeffs()).zip(&self.rates) {
            o[0] -= c[0] * *rate;
            o[1] -= c[1] * *rate;
        }
        out.enforce_hermitian();
        Ok(out)
    }

    /// `-P(i k . (u u)_k)` with products formed on the padded grid.
    fn advection(&self, u: &SpectralField) -> Result<SpectralField> {
        let m = self.padded;
        let grid = u.to_physical(m)?;
        // Pack (u1 u1, u1 u2) into one transform and u2 u2 into another.
        let mut a: Vec<Complex64> = grid
            .u1
            .iter()
            .zip(&grid.u2)
            .map(|(x, y)| Complex64::new(x * x, x * y))
            .collect();
        let mut b: Vec<Complex64> = grid.u2.iter().map(|y| Complex64::new(y * y, 0.0)).collect();
        fft::forward(&mut a, m);
        fft::forward(&mut b, m);
        let scale = 1.0 / (m * m) as f64;
        let wrap = |k: i64| k.rem_euclid(m as i64) as usize;
        let i = Complex64::new(0.0, 1.0);
        let half_neg_i = Complex64::new(0.0, -0.5);

        let mut out = SpectralField::zeros(self.params.n);
        for ((k1, k2), o) in crate::field::wavenumbers(self.params.n).zip(out.coeffs_mut().iter_mut()) {
            if k1 == 0 && k2 == 0 {
                continue;
            }
            let p = a[wrap(k1) * m + wrap(k2)] * scale;
            let q = a[wrap(-k1) * m + wrap(-k2)].conj() * scale;
            let t11 = (p + q) * 0.5;
            let t12 = (p - q) * half_neg_i;
            let t22 = b[wrap(k1) * m + wrap(k2)] * scale;
            let (f1, f2) = (k1 as f64, k2 as f64);
            // Divergence of the momentum flux, then Leray projection.
            let n1 = i * (t11 * f1 + t12 * f2);
            let n2 = i * (t12 * f1 + t22 * f2);
            let dot = (n1 * f1 + n2 * f2) / (f1 * f1 + f2 * f2);
            o[0] = -(n1 - dot * f1);
            o[1] = -(n2 - dot * f2);
        }
        Ok(out)
    }

    /// Advective candidate `cfl h / max|u|` with `h = 2 pi / (2N)`; infinite when
    /// the field vanishes or `cfl = 0`.
    pub fn advective_dt(&self, u: &SpectralField) -> Result<f64> {
        self.check(u)?;
        if self.params.cfl == 0.0 {
            return Ok(f64::INFINITY);
        }
        let umax = u.to_physical(self.padded)?.max_speed();
        if umax == 0.0 {
            return Ok(f64::INFINITY);
        }
        let h = TWO_PI / (2.0 * self.params.n as f64);
        Ok(self.params.cfl * h / umax)
    }

    /// Explicit diffusion candidate `visc_safety * 2.5 / lambda_max`.
    pub fn viscous_dt(&self) -> f64 {
        if self.lambda_max == 0.0 {
            f64::INFINITY
        } else {
            self.params.visc_safety * RK3_REAL_STABILITY / self.lambda_max
        }
    }

    /// Stable step size for the current state. May be infinite when neither
    /// bound applies (zero field without dissipation).
    pub fn adaptive_dt(&self, u: &SpectralField) -> Result<f64> {
        Ok(self.advective_dt(u)?.min(self.viscous_dt()))
    }

    /// One SSP-RK3 (Shu-Osher) step.
    pub fn step(&self, u: &SpectralField, dt: f64) -> Result<SpectralField> {
        self.step_at(u, dt, 0.0, 0)
    }

    fn step_at(&self, u: &SpectralField, dt: f64, time: f64, step: usize) -> Result<SpectralField> {
        self.check(u)?;
        if !(dt >= 0.0) {
            return Err(Error::Argument(format!("time step must be >= 0, got {dt}")));
        }
        if dt == 0.0 {
            return Ok(u.clone());
        }
        let mut u1 = u.clone();
        u1.add_scaled(dt, &self.rhs(u)?);

        let mut u2 = u1.clone();
        u2.add_scaled(dt, &self.rhs(&u1)?);
        let u2 = SpectralField::lin_comb(0.75, u, 0.25, &u2);

        let mut u3 = u2.clone();
        u3.add_scaled(dt, &self.rhs(&u2)?);
        let mut next = SpectralField::lin_comb(1.0 / 3.0, u, 2.0 / 3.0, &u3);
        next.enforce_hermitian();

        if !next.is_finite() || !next.energy().is_finite() {
            return Err(Error::BlowUp { time: time + dt, step, dt, last_energy: u.energy() });
        }
        Ok(next)
    }

    /// `sum_k rate_k |u_k|^2`.
    pub fn dissipation_rate(&self, u: &SpectralField) -> f64 {
        u.coeffs()
            .iter()
            .zip(&self.rates)
            .map(|(c, r)| r * (c[0].norm_sqr() + c[1].norm_sqr()))
            .sum()
    }

    /// Integrate to `t_end`, landing exactly on each of `output_times` (which
    /// must lie in `[0, t_end]`, strictly increasing) and on `t_end`. The
    /// observer is called at every output time.
    pub fn evolve(
        &self,
        u0: &SpectralField,
        t_end: f64,
        output_times: &[f64],
        mut observer: impl FnMut(&Observation<'_>),
    ) -> Result<(SpectralField, EnergyLedger)> {
        self.check(u0)?;
        if !(t_end >= 0.0) {
            return Err(Error::Argument(format!("t_end must be >= 0, got {t_end}")));
        }
        if output_times.windows(2).any(|w| !(w[1] > w[0]))
            || output_times.iter().any(|t| !(*t >= 0.0 && *t <= t_end))
        {
            return Err(Error::Argument(
                "output times must be strictly increasing within [0, t_end]".into(),
            ));
        }

        let mut u = u0.clone();
        let mut ledger = EnergyLedger::new(u.energy());
        let mut rate = self.dissipation_rate(&u);
        let mut next_output = 0;
        let emit = |ledger: &EnergyLedger, u: &SpectralField, observer: &mut dyn FnMut(&Observation<'_>)| {
            observer(&Observation {
                time: ledger.time,
                field: u,
                energy: ledger.energy,
                dissipation: ledger.dissipation,
            })
        };
        if output_times.first() == Some(&0.0) {
            emit(&ledger, &u, &mut observer);
            next_output = 1;
        }

        while ledger.time < t_end {
            let target = output_times.get(next_output).copied().unwrap_or(t_end);
            let remaining = target - ledger.time;
            let mut dt = self.adaptive_dt(&u)?;
            let lands = dt >= remaining * (1.0 - 1e-12);
            if lands {
                dt = remaining;
            }
            let next = self.step_at(&u, dt, ledger.time, ledger.steps)?;
            let next_rate = self.dissipation_rate(&next);
            ledger.dissipation += dt * (rate + next_rate);
            rate = next_rate;
            u = next;
            ledger.energy = u.energy();
            ledger.steps += 1;
            ledger.time = if lands { target } else { ledger.time + dt };
            if lands && next_output < output_times.len() {
                emit(&ledger, &u, &mut observer);
                next_output += 1;
            }
        }
        Ok((u, ledger))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::taylor_green;

    #[test]
    fn taylor_green_matches_formula() {
        let u = taylor_green(3);
        let v = u.eval_at([0.3, 1.1]);
        assert!((v[0] - 0.3f64.sin() * 1.1f64.cos()).abs() < 1e-15);
        assert!((v[1] + 0.3f64.cos() * 1.1f64.sin()).abs() < 1e-15);
        assert!(u.max_divergence() < 1e-16);
    }

    #[test]
    fn taylor_green_is_steady() {
        let solver = Solver::new(SolverParams::new(8)).unwrap();
        let r = solver.rhs(&taylor_green(8)).unwrap();
        let max = r.coeffs().iter().map(|c| c[0].norm().max(c[1].norm())).fold(0.0, f64::max);
        assert!(max < 1e-12, "{max}");
    }

    #[test]
    fn zero_field_has_zero_rhs() {
        let solver = Solver::new(SolverParams::new(8)).unwrap();
        assert_eq!(solver.rhs(&SpectralField::zeros(8)).unwrap().energy(), 0.0);
    }

    #[test]
    fn resolution_mismatch_rejected() {
        let solver = Solver::new(SolverParams::new(8)).unwrap();
        assert!(matches!(solver.rhs(&SpectralField::zeros(4)), Err(Error::Argument(_))));
    }

    #[test]
    fn sphinx_damping_at_twice_n() {
        // |k|^2 = 2N = 32 at k = (4, 4)
        let mut p = SolverParams::new(16);
        p.nonlinear = false;
        let solver = Solver::new(p.clone()).unwrap();
        let mut u = SpectralField::zeros(16);
        u.set_mode(4, 4, [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        let r = solver.rhs(&u).unwrap();
        let c = r.coeff(4, 4);
        assert!((c[0].re + p.eps).abs() < 1e-15);
        assert!((c[1].re - p.eps).abs() < 1e-15);
        // eps_N Q |k|^2 = (eps / N) max(|k|^2 - N, 0)
        for (k1, k2) in [(0, 1), (3, 2), (4, 0), (5, 5), (16, 16)] {
            let kk = (k1 * k1 + k2 * k2) as f64;
            let expect = p.eps / 16.0 * (kk - 16.0).max(0.0);
            assert!((p.damping_rate(k1, k2) - expect).abs() < 1e-14);
        }
    }

    #[test]
    fn multiplier_constraints() {
        for mult in [Multiplier::Sphinx, Multiplier::General { theta: Multiplier::default_theta(2) }] {
            let mut p = SolverParams::new(64);
            p.s = 2;
            p.multiplier = mult;
            for (k1, k2) in crate::field::wavenumbers(64) {
                let q = p.q_hat(k1, k2);
                assert!((0.0..=1.0).contains(&q));
                if ((k1 * k1 + k2 * k2) as f64).sqrt() <= p.m_n as f64 {
                    assert_eq!(q, 0.0);
                }
            }
        }
        assert!((p_eps_n(2) - 0.05 / 8.0f64.powi(3)).abs() < 1e-18);
    }

    fn p_eps_n(s: u32) -> f64 {
        let mut p = SolverParams::new(8);
        p.s = s;
        p.eps_n()
    }

    #[test]
    fn adaptive_dt_for_zero_field() {
        let solver = Solver::new(SolverParams::new(16)).unwrap();
        let max = crate::field::wavenumbers(16).map(|(a, b)| (a * a + b * b - 16) as f64).fold(0.0, f64::max);
        let expect = 0.9 * 2.5 / ((1.0 / 320.0) * max);
        let dt = solver.adaptive_dt(&SpectralField::zeros(16)).unwrap();
        assert!((dt - expect).abs() < 1e-14 * expect);
    }

    #[test]
    fn advective_dt_scales_inversely_with_speed() {
        let mut p = SolverParams::new(16);
        p.eps = 0.0;
        let solver = Solver::new(p.clone()).unwrap();
        let u = taylor_green(16);
        let a = solver.adaptive_dt(&u).unwrap();
        let b = solver.adaptive_dt(&u.scaled(2.0)).unwrap();
        assert!((a / b - 2.0).abs() < 1e-12);
        p.cfl = 0.0;
        p.eps = 0.05;
        let solver = Solver::new(p).unwrap();
        assert_eq!(solver.adaptive_dt(&u).unwrap(), solver.viscous_dt());
    }

    #[test]
    fn zero_step_is_identity() {
        let solver = Solver::new(SolverParams::new(8)).unwrap();
        let u = taylor_green(8);
        assert_eq!(solver.step(&u, 0.0).unwrap(), u);
    }

    #[test]
    fn blow_up_is_reported() {
        let mut p = SolverParams::new(8);
        p.nonlinear = false;
        let solver = Solver::new(p).unwrap();
        let mut u = SpectralField::zeros(8);
        u.set_mode(8, 8, [Complex64::new(1.0, 0.0), Complex64::new(-1.0, 0.0)]);
        // Far beyond the stability limit: amplitude overflows.
        let mut state = u;
        let mut failed = None;
        for _ in 0..2000 {
            match solver.step(&state, 1e3) {
                Ok(next) => state = next,
                Err(e) => {
                    failed = Some(e);
                    break;
                }
            }
        }
        assert!(matches!(failed, Some(Error::BlowUp { .. })));
    }

    #[test]
    fn evolve_to_zero_time() {
        let solver = Solver::new(SolverParams::new(8)).unwrap();
        let u = taylor_green(8);
        let mut seen = Vec::new();
        let (out, ledger) = solver.evolve(&u, 0.0, &[0.0], |o| seen.push(o.time)).unwrap();
        assert_eq!(out, u);
        assert_eq!(ledger.dissipation, 0.0);
        assert_eq!(ledger.energy, ledger.e0);
        assert_eq!(seen, vec![0.0]);
    }

    #[test]
    fn evolve_lands_on_output_times() {
        let solver = Solver::new(SolverParams::new(8)).unwrap();
        let mut seen = Vec::new();
        solver
            .evolve(&taylor_green(8), 0.5, &[0.1, 0.25, 0.5], |o| seen.push(o.time))
            .unwrap();
        assert_eq!(seen, vec![0.1, 0.25, 0.5]);
        assert!(solver.evolve(&taylor_green(8), 0.5, &[0.3, 0.2], |_| {}).is_err());
    }
}

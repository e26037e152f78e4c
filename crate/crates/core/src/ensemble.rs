//! Monte Carlo driver: generate `m` samples, evolve each independently, and
//! collect the empirical measure at every output time.

use std::fmt::Write as _;

use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::field::{ScalarGrid, SpectralField};
use crate::init::{generate_from_seed, InitialMeasureSpec};
use crate::rng::{sample_seed, PRNG_ALGORITHM};
use crate::solver::{EnergyLedger, Multiplier, Solver, SolverParams};

/// Version of the snapshot binary layout and manifest text.
pub const FORMAT_VERSION: u32 = 1;

/// Everything needed to reproduce an ensemble run at one resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct RunManifest {
    pub spec: InitialMeasureSpec,
    pub m: usize,
    pub output_times: Vec<f64>,
    pub solver: SolverParams,
    pub format_version: u32,
    /// Drop failed samples instead of aborting.
    pub tolerate_failures: bool,
}

impl RunManifest {
    pub fn new(spec: InitialMeasureSpec, m: usize, output_times: Vec<f64>, solver: SolverParams) -> Result<Self> {
        let manifest = Self { spec, m, output_times, solver, format_version: FORMAT_VERSION, tolerate_failures: false };
        manifest.validate()?;
        Ok(manifest)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::Argument("sample count m must be >= 1".into()));
        }
        if self.output_times.is_empty() {
            return Err(Error::Argument("at least one output time is required".into()));
        }
        if !(self.output_times[0] >= 0.0)
            || self.output_times.windows(2).any(|w| !(w[1] > w[0]))
            || self.output_times.iter().any(|t| !t.is_finite())
        {
            return Err(Error::Argument("output times must be finite, >= 0 and strictly increasing".into()));
        }
        if self.spec.n != self.solver.n {
            return Err(Error::Argument(format!(
                "initial data resolution {} differs from solver resolution {}",
                self.spec.n, self.solver.n
            )));
        }
        self.spec.validate()?;
        self.solver.validate()
    }

    pub fn t_end(&self) -> f64 {
        *self.output_times.last().expect("validated manifest has output times")
    }

    /// Canonical key-value text. Floats use the shortest round-trip form.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let times: Vec<String> = self.output_times.iter().map(|t| format!("{t:?}")).collect();
        let _ = writeln!(s, "format_version = {}", self.format_version);
        let _ = writeln!(s, "prng = {PRNG_ALGORITHM}");
        let _ = writeln!(s, "m = {}", self.m);
        let _ = writeln!(s, "output_times = {}", times.join(", "));
        let _ = writeln!(s, "tolerate_failures = {}", self.tolerate_failures);
        let sp = &self.spec;
        let _ = writeln!(s, "\n[initial]");
        let _ = writeln!(s, "family = {}", sp.family.name());
        let _ = writeln!(s, "n = {}", sp.n);
        let _ = writeln!(s, "base_seed = {}", sp.base_seed);
        let _ = writeln!(s, "rho = {:?}", sp.rho);
        let _ = writeln!(s, "delta = {:?}", sp.delta);
        let _ = writeln!(s, "q = {}", sp.q);
        let _ = writeln!(s, "d = {:?}", sp.d);
        let _ = writeln!(s, "quad_points = {}", sp.quad_points);
        let _ = writeln!(s, "hurst = {:?}", sp.hurst);
        let p = &self.solver;
        let _ = writeln!(s, "\n[solver]");
        let _ = writeln!(s, "n = {}", p.n);
        let _ = writeln!(s, "s = {}", p.s);
        let _ = writeln!(s, "eps = {:?}", p.eps);
        let _ = writeln!(s, "m_n = {}", p.m_n);
        match p.multiplier {
            Multiplier::Sphinx => {
                let _ = writeln!(s, "multiplier = sphinx");
            }
            Multiplier::General { theta } => {
                let _ = writeln!(s, "multiplier = general");
                let _ = writeln!(s, "theta = {theta:?}");
            }
        }
        let _ = writeln!(s, "cfl = {:?}", p.cfl);
        let _ = writeln!(s, "visc_safety = {:?}", p.visc_safety);
        let _ = writeln!(s, "dealias = {:?}", p.dealias);
        let _ = writeln!(s, "nonlinear = {}", p.nonlinear);
        s
    }

    /// First eight bytes (little endian) of the SHA-256 of the canonical text.
    pub fn hash(&self) -> u64 {
        let digest = Sha256::digest(self.canonical_text().as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
    }
}

/// Empirical measure `(1/m) sum_i delta_{u_i(t)}` at one time.
#[derive(Clone, Debug, PartialEq)]
pub struct EnsembleSnapshot {
    pub time: f64,
    pub n: usize,
    pub fields: Vec<SpectralField>,
    pub sample_seeds: Vec<u64>,
    /// Absent for snapshots read back from disk.
    pub scheme_params: Option<SolverParams>,
    pub manifest_hash: u64,
}

impl EnsembleSnapshot {
    pub fn new(time: f64, fields: Vec<SpectralField>, sample_seeds: Vec<u64>) -> Result<Self> {
        let n = fields.first().map(|f| f.resolution()).ok_or_else(|| Error::Argument("empty ensemble".into()))?;
        if fields.iter().any(|f| f.resolution() != n) {
            return Err(Error::Argument("ensemble members differ in resolution".into()));
        }
        if sample_seeds.len() != fields.len() {
            return Err(Error::Argument("one seed per sample is required".into()));
        }
        Ok(Self { time, n, fields, sample_seeds, scheme_params: None, manifest_hash: 0 })
    }

    pub fn m(&self) -> usize {
        self.fields.len()
    }
}

/// A sample excluded from a run that tolerates failures.
#[derive(Debug)]
pub struct SampleFailure {
    pub index: usize,
    pub seed: u64,
    pub error: Error,
}

/// Per-sample energy history at the output times.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleEnergy {
    pub index: usize,
    /// `(time, energy, dissipation)` at each output time.
    pub history: Vec<(f64, f64, f64)>,
    pub ledger: EnergyLedger,
}

/// Result of [`run_ensemble`].
#[derive(Debug)]
pub struct EnsembleRun {
    pub snapshots: Vec<EnsembleSnapshot>,
    pub energies: Vec<SampleEnergy>,
    pub failures: Vec<SampleFailure>,
}

struct Trajectory {
    states: Vec<SpectralField>,
    energy: SampleEnergy,
}

fn run_sample(manifest: &RunManifest, solver: &Solver, index: usize) -> Result<Trajectory> {
    let seed = sample_seed(manifest.spec.base_seed, index as u64);
    let u0 = generate_from_seed(&manifest.spec, seed)?;
    let mut states = Vec::with_capacity(manifest.output_times.len());
    let mut history = Vec::with_capacity(manifest.output_times.len());
    let (_, ledger) = solver.evolve(&u0, manifest.t_end(), &manifest.output_times, |obs| {
        states.push(obs.field.clone());
        history.push((obs.time, obs.energy, obs.dissipation));
    })?;
    Ok(Trajectory { states, energy: SampleEnergy { index, history, ledger } })
}

/// Generate and evolve all samples on the current rayon pool. Samples are
/// ordered by index regardless of scheduling.
pub fn run_ensemble(manifest: &RunManifest) -> Result<EnsembleRun> {
    manifest.validate()?;
    let solver = Solver::new(manifest.solver.clone())?;
    let results: Vec<Result<Trajectory>> =
        (0..manifest.m).into_par_iter().map(|i| run_sample(manifest, &solver, i)).collect();

    let mut kept = Vec::with_capacity(manifest.m);
    let mut failures = Vec::new();
    for (index, result) in results.into_iter().enumerate() {
        let seed = sample_seed(manifest.spec.base_seed, index as u64);
        match result {
            Ok(t) => kept.push((seed, t)),
            Err(error) if manifest.tolerate_failures => failures.push(SampleFailure { index, seed, error }),
            Err(error) => return Err(Error::SampleFailed { sample: index, seed, source: Box::new(error) }),
        }
    }
    if kept.is_empty() {
        let first = failures.remove(0);
        return Err(Error::SampleFailed { sample: first.index, seed: first.seed, source: Box::new(first.error) });
    }

    let hash = manifest.hash();
    let seeds: Vec<u64> = kept.iter().map(|(s, _)| *s).collect();
    let snapshots = manifest
        .output_times
        .iter()
        .enumerate()
        .map(|(j, &time)| EnsembleSnapshot {
            time,
            n: manifest.solver.n,
            fields: kept.iter().map(|(_, t)| t.states[j].clone()).collect(),
            sample_seeds: seeds.clone(),
            scheme_params: Some(manifest.solver.clone()),
            manifest_hash: hash,
        })
        .collect();
    let energies = kept.into_iter().map(|(_, t)| t.energy).collect();
    Ok(EnsembleRun { snapshots, energies, failures })
}

/// [`run_ensemble`] on a dedicated pool of `workers` threads.
pub fn run_ensemble_with_workers(manifest: &RunManifest, workers: usize) -> Result<EnsembleRun> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Argument(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_ensemble(manifest))
}

/// Coefficient-wise ensemble mean.
pub fn mean_field(snapshot: &EnsembleSnapshot) -> SpectralField {
    let mut mean = SpectralField::zeros(snapshot.n);
    let w = 1.0 / snapshot.m() as f64;
    for f in &snapshot.fields {
        mean.add_scaled(w, f);
    }
    mean
}

/// Pointwise population variance, summed over both components, on an
/// `grid_points`-per-axis grid.
pub fn variance_field(snapshot: &EnsembleSnapshot, grid_points: usize) -> Result<ScalarGrid> {
    let mean = mean_field(snapshot).to_physical(grid_points)?;
    let mut acc = vec![0.0; grid_points * grid_points];
    for f in &snapshot.fields {
        let g = f.to_physical(grid_points)?;
        for (i, a) in acc.iter_mut().enumerate() {
            let d1 = g.u1[i] - mean.u1[i];
            let d2 = g.u2[i] - mean.u2[i];
            *a += d1 * d1 + d2 * d2;
        }
    }
    let w = 1.0 / snapshot.m() as f64;
    acc.iter_mut().for_each(|a| *a *= w);
    ScalarGrid::new(grid_points, acc)
}

/// Default synthesis grid for statistics at cutoff `n`.
pub fn synthesis_points(n: usize) -> usize {
    3 * n
}

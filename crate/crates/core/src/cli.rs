//! Command-line front end: `run`, `diagnose` and `presets`.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::ExperimentConfig;
use crate::diagnostics::{
    cauchy_rate, compensated_spectrum, default_fit_range, default_k_max, default_r_grid, energy_spectrum, fit_exponent,
    inertial_fit_range, structure_function, time_regularity_ratio, ScalarCurve, Statistic,
};
use crate::ensemble::{mean_field, run_ensemble, synthesis_points, variance_field, EnsembleRun, EnsembleSnapshot, FORMAT_VERSION};
use crate::error::Error;
use crate::field::TWO_PI;
use crate::presets;
use crate::rng::PRNG_ALGORITHM;
use crate::snapshot;
use crate::transport::{default_tuple_count, marginal_w1_random, DIAGNOSTIC_SEED};

/// Environment variable overriding `base_seed`.
pub const SEED_ENV: &str = "EULER_STAT_SEED";

/// Desk-scale caps lifted by `--large`.
pub const MAX_N: usize = 256;
pub const MAX_M: usize = 64;

#[derive(Parser, Debug)]
#[command(name = "euler-stat", version, about = "Statistical solutions of 2D incompressible Euler by Monte Carlo")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the ensembles of an experiment config (a path, or `preset:<name>`).
    Run {
        config: String,
        /// Overwrite existing results.
        #[arg(long)]
        force: bool,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        workers: usize,
        /// Lift the caps N <= 256 and m <= 64.
        #[arg(long)]
        large: bool,
    },
    /// Compute diagnostics of snapshot files.
    Diagnose(DiagnoseArgs),
    /// List the built-in experiments.
    Presets {
        /// Print the config file of one preset instead.
        #[arg(long, value_name = "NAME")]
        emit: Option<String>,
    },
}

#[derive(Args, Debug, Clone, Default)]
pub struct DiagnoseArgs {
    /// Snapshot files. Pair diagnostics use consecutive files.
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
    /// Structure function and fitted exponents.
    #[arg(long)]
    pub structure: bool,
    /// Energy spectrum, compensated with exponent GAMMA.
    #[arg(long, value_name = "GAMMA")]
    pub spectrum: Option<f64>,
    /// Marginal Wasserstein distance of order K (repeatable).
    #[arg(long, value_name = "K")]
    pub wasserstein: Vec<usize>,
    /// Number of spatial tuples for Wasserstein distances.
    #[arg(long, value_name = "COUNT")]
    pub tuples: Option<usize>,
    /// Seed of the spatial tuples.
    #[arg(long, default_value_t = DIAGNOSTIC_SEED)]
    pub tuple_seed: u64,
    /// Cauchy rates between resolutions N and 2N.
    #[arg(long)]
    pub cauchy: bool,
    /// Mean field and pointwise variance.
    #[arg(long)]
    pub mean_variance: bool,
    /// Time-regularity ratio with Sobolev index L.
    #[arg(long, value_name = "L")]
    pub time_regularity: Option<f64>,
    /// Output directory (default: `diagnostics` next to the first file).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}

/// Error with the process exit status it maps to.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::BlowUp { .. } | Error::SampleFailed { .. } => 3,
            _ => 2,
        };
        Self { code, message: e.to_string() }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::usage(format!("{}: {e}", path.display()))
}

fn write(path: &Path, contents: impl AsRef<[u8]>) -> CliResult<()> {
    fs::write(path, contents).map_err(|e| io_err(path, e))
}

/// Entry point used by the binary; returns the exit status.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Run { config, force, workers, large } => cmd_run(&config, force, workers, large),
        Command::Diagnose(args) => cmd_diagnose(&args),
        Command::Presets { emit } => cmd_presets(emit.as_deref()),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}

fn cmd_presets(emit: Option<&str>) -> CliResult<()> {
    match emit {
        Some(name) => {
            let p = presets::find(name).ok_or_else(|| CliError::usage(format!("no preset named `{name}`")))?;
            print!("{}", p.config.to_text());
        }
        None => print!("{}", presets::table()),
    }
    Ok(())
}

fn load_config(arg: &str) -> CliResult<ExperimentConfig> {
    let mut cfg = match arg.strip_prefix("preset:") {
        Some(name) => presets::find(name).ok_or_else(|| CliError::usage(format!("no preset named `{name}`")))?.config,
        None => {
            let path = Path::new(arg);
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            ExperimentConfig::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?
        }
    };
    if let Ok(v) = std::env::var(SEED_ENV) {
        cfg.base_seed = v
            .trim()
            .parse()
            .map_err(|_| CliError::usage(format!("{SEED_ENV}={v} is not an unsigned integer")))?;
    }
    Ok(cfg)
}

fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> CliResult<T> {
    if workers == 0 {
        return Ok(f());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::usage(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(f))
}

fn run_info() -> String {
    format!("prng = {PRNG_ALGORITHM}\nformat_version = {FORMAT_VERSION}\nversion = {}\n", env!("CARGO_PKG_VERSION"))
}

/// Snapshot file name for output time index `j` at resolution `n`.
pub fn snapshot_name(n: usize, j: usize) -> String {
    format!("N{n}_t{j}.euss")
}

fn energy_csv(run: &EnsembleRun, n: usize, t_end: f64) -> String {
    let mut s = format!("# energy,{t_end:.16e},{n},{}\n", run.energies.len());
    for e in &run.energies {
        for (t, energy, dissipation) in &e.history {
            let _ = writeln!(s, "{},{t:.16e},{energy:.16e},{dissipation:.16e}", e.index);
        }
    }
    s
}

fn cmd_run(config: &str, force: bool, workers: usize, large: bool) -> CliResult<()> {
    let cfg = load_config(config)?;
    cfg.validate()?;
    if !large {
        for &n in &cfg.resolutions {
            let m = cfg.samples_at(n);
            if n > MAX_N || m > MAX_M {
                return Err(CliError::usage(format!(
                    "N = {n}, m = {m} exceeds the desk-scale caps N <= {MAX_N}, m <= {MAX_M}; pass --large"
                )));
            }
        }
    }
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    write(&out.join("config.resolved"), cfg.to_text())?;
    write(&out.join("run_info.txt"), run_info())?;

    let mut produced: Vec<PathBuf> = Vec::new();
    for &n in &cfg.resolutions {
        let manifest = cfg.manifest_at(n)?;
        let dir = out.join(format!("N{n}"));
        let files: Vec<PathBuf> = (0..manifest.output_times.len()).map(|j| dir.join(snapshot_name(n, j))).collect();
        let manifest_path = dir.join("manifest.txt");
        let text = manifest.canonical_text();
        if manifest_path.exists() && !force {
            let existing = fs::read_to_string(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
            if existing == text && files.iter().all(|f| f.exists()) {
                eprintln!("N = {n}: results present, skipping (use --force to recompute)");
                produced.extend(files);
                continue;
            }
            return Err(CliError::usage(format!(
                "{} holds results of a different run; pass --force to overwrite",
                dir.display()
            )));
        }
        fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
        eprintln!("N = {n}: running {} samples to t = {}", manifest.m, manifest.t_end());
        let run = with_workers(workers, || run_ensemble(&manifest))??;
        for f in &run.failures {
            eprintln!("warning: sample {} (seed {:#018x}) excluded: {}", f.index, f.seed, f.error);
        }
        if !run.failures.is_empty() {
            let mut s = String::from("index,seed,error\n");
            for f in &run.failures {
                let _ = writeln!(s, "{},{},\"{}\"", f.index, f.seed, f.error);
            }
            write(&dir.join("failures.csv"), s)?;
        }
        for (snap, path) in run.snapshots.iter().zip(&files) {
            snapshot::save(path, snap).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        }
        write(&dir.join("energy.csv"), energy_csv(&run, n, manifest.t_end()))?;
        write(&dir.join("config.resolved"), cfg.to_text())?;
        write(&dir.join("run_info.txt"), run_info())?;
        write(&manifest_path, &text)?;
        produced.extend(files);
    }

    if cfg.diagnostics.any() {
        let d = &cfg.diagnostics;
        let args = DiagnoseArgs {
            files: produced,
            structure: d.structure,
            spectrum: d.spectrum,
            wasserstein: d.wasserstein.clone(),
            tuples: d.wasserstein_tuples,
            tuple_seed: DIAGNOSTIC_SEED,
            cauchy: d.cauchy,
            mean_variance: d.mean_variance,
            time_regularity: d.time_regularity,
            out: Some(out.join("diagnostics")),
        };
        let inputs = load_all(&args.files)?;
        let pairs = resolution_pairs(&inputs);
        let text = cfg.to_text();
        with_workers(workers, || diagnose(&inputs, &pairs, &args, &text))??;
    }
    Ok(())
}

struct Input {
    stem: String,
    snap: EnsembleSnapshot,
}

fn load_all(files: &[PathBuf]) -> CliResult<Vec<Input>> {
    files
        .iter()
        .map(|p| {
            let snap = snapshot::load(p).map_err(|e| CliError::usage(format!("{}: {e}", p.display())))?;
            let stem = p.file_stem().map_or_else(|| "snapshot".to_string(), |s| s.to_string_lossy().into_owned());
            Ok(Input { stem, snap })
        })
        .collect()
}

/// For each output time, consecutive resolutions.
fn resolution_pairs(inputs: &[Input]) -> Vec<(usize, usize)> {
    let mut by_time: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, inp) in inputs.iter().enumerate() {
        by_time.entry(inp.snap.time.to_bits()).or_default().push(i);
    }
    let mut pairs = Vec::new();
    for idx in by_time.values_mut() {
        idx.sort_by_key(|&i| inputs[i].snap.n);
        pairs.extend(idx.windows(2).map(|w| (w[0], w[1])));
    }
    pairs
}

fn cmd_diagnose(args: &DiagnoseArgs) -> CliResult<()> {
    let inputs = load_all(&args.files)?;
    let pairs: Vec<(usize, usize)> = (1..inputs.len()).map(|i| (i - 1, i)).collect();
    diagnose(&inputs, &pairs, args, "")
}

fn diagnose_echo(inputs: &[Input], args: &DiagnoseArgs) -> String {
    let list = |v: Vec<String>| if v.is_empty() { "none".to_string() } else { v.join(", ") };
    let mut s = String::from("[diagnose]\n");
    let _ = writeln!(s, "inputs = {}", list(inputs.iter().map(|i| i.stem.clone()).collect()));
    let _ = writeln!(s, "manifest_hashes = {}", list(inputs.iter().map(|i| format!("{:016x}", i.snap.manifest_hash)).collect()));
    let _ = writeln!(s, "structure = {}", args.structure);
    let _ = writeln!(s, "spectrum = {}", args.spectrum.map_or("none".to_string(), |g| format!("{g:?}")));
    let _ = writeln!(s, "wasserstein = {}", list(args.wasserstein.iter().map(|k| k.to_string()).collect()));
    let _ = writeln!(s, "wasserstein_tuples = {}", args.tuples.map_or("auto".to_string(), |t| t.to_string()));
    let _ = writeln!(s, "tuple_seed = {}", args.tuple_seed);
    let _ = writeln!(s, "cauchy = {}", args.cauchy);
    let _ = writeln!(s, "mean_variance = {}", args.mean_variance);
    let _ = writeln!(s, "time_regularity = {}", args.time_regularity.map_or("none".to_string(), |l| format!("{l:?}")));
    s
}

struct Summary(String);

impl Summary {
    fn new() -> Self {
        Summary(String::from("diagnostic,source,time,N,m,value\n"))
    }

    fn row(&mut self, diagnostic: &str, source: &str, time: f64, n: &str, m: usize, value: f64) {
        let _ = writeln!(self.0, "{diagnostic},{source},{time:.16e},{n},{m},{value:.16e}");
    }
}

fn fit_or_nan(curve: &ScalarCurve, range: (f64, f64)) -> f64 {
    fit_exponent(curve, range.0, range.1).map_or(f64::NAN, |f| f.exponent)
}

fn check_pair(a: &EnsembleSnapshot, b: &EnsembleSnapshot, what: &str) -> CliResult<()> {
    if (a.time - b.time).abs() > 1e-12 * a.time.abs().max(1.0) {
        return Err(CliError::usage(format!("{what}: snapshot times differ ({} vs {})", a.time, b.time)));
    }
    Ok(())
}

/// `config_prefix` is the experiment config echoed ahead of the diagnose settings.
fn diagnose(inputs: &[Input], pairs: &[(usize, usize)], args: &DiagnoseArgs, config_prefix: &str) -> CliResult<()> {
    let out = match &args.out {
        Some(o) => o.clone(),
        None => args.files[0].parent().unwrap_or(Path::new(".")).join("diagnostics"),
    };
    fs::create_dir_all(&out).map_err(|e| io_err(&out, e))?;
    let echo = if config_prefix.is_empty() {
        diagnose_echo(inputs, args)
    } else {
        format!("{config_prefix}\n{}", diagnose_echo(inputs, args))
    };
    write(&out.join("config.resolved"), echo)?;
    write(&out.join("run_info.txt"), run_info())?;
    let mut summary = Summary::new();

    for inp in inputs {
        let s = &inp.snap;
        let n_label = s.n.to_string();
        if args.structure {
            let curve = structure_function(s, &default_r_grid(s.n))?;
            write(&out.join(format!("{}.structure.csv", inp.stem)), curve.to_csv())?;
            summary.row("structure_exponent", &inp.stem, s.time, &n_label, s.m(), fit_or_nan(&curve, inertial_fit_range(s.n)));
            summary.row("structure_exponent_fine", &inp.stem, s.time, &n_label, s.m(), fit_or_nan(&curve, default_fit_range(s.n)));
        }
        if let Some(gamma) = args.spectrum {
            let curve = energy_spectrum(s, default_k_max(s.n))?;
            write(&out.join(format!("{}.spectrum.csv", inp.stem)), curve.to_csv())?;
            let comp = compensated_spectrum(&curve, gamma);
            write(&out.join(format!("{}.compensated.csv", inp.stem)), comp.to_csv())?;
            let slope = fit_or_nan(&curve, (4.0, (s.n as f64).sqrt()));
            summary.row("spectrum_exponent", &inp.stem, s.time, &n_label, s.m(), slope);
        }
        if args.mean_variance {
            let p = synthesis_points(s.n);
            let mean = mean_field(s).to_physical(p)?;
            let var = variance_field(s, p)?;
            let mut csv = format!("# mean_variance,{:.16e},{},{}\n", s.time, s.n, s.m());
            for j1 in 0..p {
                for j2 in 0..p {
                    let i = j1 * p + j2;
                    let (x1, x2) = (TWO_PI * j1 as f64 / p as f64, TWO_PI * j2 as f64 / p as f64);
                    let _ = writeln!(
                        csv,
                        "{x1:.16e},{x2:.16e},{:.16e},{:.16e},{:.16e}",
                        mean.u1[i], mean.u2[i], var.values[i]
                    );
                }
            }
            write(&out.join(format!("{}.mean_variance.csv", inp.stem)), csv)?;
            let avg = var.values.iter().sum::<f64>() / var.values.len() as f64;
            summary.row("mean_variance", &inp.stem, s.time, &n_label, s.m(), avg);
        }
    }

    for &(i, j) in pairs {
        let (a, b) = (&inputs[i], &inputs[j]);
        let pair = format!("{}__{}", a.stem, b.stem);
        let n_label = format!("{}/{}", a.snap.n, b.snap.n);
        for &k in &args.wasserstein {
            check_pair(&a.snap, &b.snap, "wasserstein")?;
            let count = args.tuples.unwrap_or_else(|| default_tuple_count(k));
            let report = marginal_w1_random(&a.snap, &b.snap, k, count, args.tuple_seed)?;
            write(&out.join(format!("{pair}.wasserstein_k{k}.csv")), report.to_csv())?;
            summary.row(&format!("wasserstein_k{k}"), &pair, a.snap.time, &n_label, a.snap.m(), report.value);
        }
        if args.cauchy {
            check_pair(&a.snap, &b.snap, "cauchy")?;
            let (coarse, fine) = if a.snap.n <= b.snap.n { (&a.snap, &b.snap) } else { (&b.snap, &a.snap) };
            if fine.n != 2 * coarse.n {
                return Err(CliError::usage(format!(
                    "cauchy: resolutions {} and {} are not related by a factor of two",
                    coarse.n, fine.n
                )));
            }
            let mut csv = format!("# cauchy,{:.16e},{},{},{}\n", coarse.time, coarse.n, fine.n, coarse.m().min(fine.m()));
            let mean = cauchy_rate(coarse, fine, Statistic::Mean)?;
            let var = cauchy_rate(coarse, fine, Statistic::Variance)?;
            let _ = writeln!(csv, "mean,{mean:.16e}");
            let _ = writeln!(csv, "variance,{var:.16e}");
            for s in 0..coarse.m().min(fine.m()) {
                let _ = writeln!(csv, "sample_{s},{:.16e}", cauchy_rate(coarse, fine, Statistic::Sample(s))?);
            }
            write(&out.join(format!("{pair}.cauchy.csv")), csv)?;
            summary.row("cauchy_mean", &pair, coarse.time, &n_label, coarse.m(), mean);
            summary.row("cauchy_variance", &pair, coarse.time, &n_label, coarse.m(), var);
        }
    }

    if let Some(l) = args.time_regularity {
        let mut groups: BTreeMap<(usize, u64), Vec<&Input>> = BTreeMap::new();
        for inp in inputs {
            groups.entry((inp.snap.n, inp.snap.manifest_hash)).or_default().push(inp);
        }
        let mut any = false;
        for ((n, _), mut group) in groups {
            group.sort_by(|a, b| a.snap.time.total_cmp(&b.snap.time));
            group.dedup_by(|a, b| a.snap.time == b.snap.time);
            if group.len() < 2 {
                continue;
            }
            any = true;
            let m = group.iter().map(|g| g.snap.m()).min().unwrap_or(0);
            let t_end = group.last().map_or(0.0, |g| g.snap.time);
            let mut csv = format!("# time_regularity_L{l},{t_end:.16e},{n},{m}\n");
            let mut worst: f64 = 0.0;
            for s in 0..m {
                let traj: Vec<(f64, &crate::SpectralField)> = group.iter().map(|g| (g.snap.time, &g.snap.fields[s])).collect();
                let r = time_regularity_ratio(&traj, l)?;
                worst = worst.max(r);
                let _ = writeln!(csv, "{s},{r:.16e}");
            }
            write(&out.join(format!("time_regularity_N{n}.csv")), csv)?;
            summary.row(&format!("time_regularity_L{l}"), &format!("N{n}"), t_end, &n.to_string(), m, worst);
        }
        if !any {
            return Err(CliError::usage("time regularity needs snapshots of one run at two or more times"));
        }
    }

    write(&out.join("summary.csv"), summary.0)?;
    Ok(())
}

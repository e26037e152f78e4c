//! Experiment configuration files.
//!
//! Flat UTF-8 key-value text: optional `[section]` headers, `key = value`
//! lines, `#` comments. Lists are comma separated. Sections are `initial`,
//! `solver`, `run` and `diagnostics`; `name`, `output_dir` and `base_seed`
//! sit above the first header.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::str::FromStr;

use crate::ensemble::{RunManifest, FORMAT_VERSION};
use crate::error::{Error, Result};
use crate::init::{Family, InitialMeasureSpec};
use crate::solver::{Multiplier, SolverParams};

/// Sample count per resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplesRule {
    Fixed(usize),
    /// `m = N`.
    EqualsN,
}

/// Smoothing length, possibly tied to the resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoRule {
    Fixed(f64),
    /// `rho = c / N`.
    PerN(f64),
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct DiagnosticsConfig {
    pub structure: bool,
    /// Compensation exponent of the spectrum output.
    pub spectrum: Option<f64>,
    /// Correlation orders for marginal Wasserstein distances.
    pub wasserstein: Vec<usize>,
    /// Tuple count override; the per-order default is used otherwise.
    pub wasserstein_tuples: Option<usize>,
    pub cauchy: bool,
    pub mean_variance: bool,
    /// Sobolev index `L` of the time-regularity ratio.
    pub time_regularity: Option<f64>,
}

impl DiagnosticsConfig {
    pub fn any(&self) -> bool {
        self.structure
            || self.spectrum.is_some()
            || !self.wasserstein.is_empty()
            || self.cauchy
            || self.mean_variance
            || self.time_regularity.is_some()
    }
}

/// Solver block; `m_n` and `theta` default per resolution.
#[derive(Clone, Debug, PartialEq)]
pub struct SolverTemplate {
    pub s: u32,
    pub eps: f64,
    pub m_n: Option<usize>,
    pub general_multiplier: bool,
    pub theta: Option<f64>,
    pub cfl: f64,
    pub visc_safety: f64,
    pub dealias: f64,
    pub nonlinear: bool,
}

impl Default for SolverTemplate {
    fn default() -> Self {
        let p = SolverParams::new(1);
        Self {
            s: p.s,
            eps: p.eps,
            m_n: None,
            general_multiplier: false,
            theta: None,
            cfl: p.cfl,
            visc_safety: p.visc_safety,
            dealias: p.dealias,
            nonlinear: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub output_dir: PathBuf,
    pub base_seed: u64,
    pub family: Family,
    pub rho: RhoRule,
    pub delta: f64,
    pub q: usize,
    pub d: f64,
    pub quad_points: usize,
    pub hurst: f64,
    pub solver: SolverTemplate,
    pub resolutions: Vec<usize>,
    pub samples: SamplesRule,
    pub output_times: Vec<f64>,
    pub tolerate_failures: bool,
    pub diagnostics: DiagnosticsConfig,
}

impl ExperimentConfig {
    /// Config with defaults for everything but the family, resolutions and times.
    pub fn new(name: &str, family: Family, resolutions: Vec<usize>, output_times: Vec<f64>) -> Self {
        Self {
            name: name.to_string(),
            output_dir: PathBuf::from("runs").join(name),
            base_seed: 0,
            family,
            rho: RhoRule::Fixed(0.0),
            delta: 0.0,
            q: 10,
            d: 0.2,
            quad_points: 400,
            hurst: 0.5,
            solver: SolverTemplate::default(),
            resolutions,
            samples: SamplesRule::EqualsN,
            output_times,
            tolerate_failures: false,
            diagnostics: DiagnosticsConfig::default(),
        }
    }

    pub fn rho_at(&self, n: usize) -> f64 {
        match self.rho {
            RhoRule::Fixed(r) => r,
            RhoRule::PerN(c) => c / n as f64,
        }
    }

    pub fn samples_at(&self, n: usize) -> usize {
        match self.samples {
            SamplesRule::Fixed(m) => m,
            SamplesRule::EqualsN => n,
        }
    }

    pub fn spec_at(&self, n: usize) -> InitialMeasureSpec {
        InitialMeasureSpec {
            family: self.family,
            rho: self.rho_at(n),
            delta: self.delta,
            q: self.q,
            d: self.d,
            quad_points: self.quad_points,
            hurst: self.hurst,
            base_seed: self.base_seed,
            n,
        }
    }

    pub fn solver_at(&self, n: usize) -> SolverParams {
        let t = &self.solver;
        let mut p = SolverParams::new(n);
        p.s = t.s;
        p.eps = t.eps;
        if let Some(m) = t.m_n {
            p.m_n = m;
        }
        p.multiplier = if t.general_multiplier {
            Multiplier::General { theta: t.theta.unwrap_or_else(|| Multiplier::default_theta(t.s)) }
        } else {
            Multiplier::Sphinx
        };
        p.cfl = t.cfl;
        p.visc_safety = t.visc_safety;
        p.dealias = t.dealias;
        p.nonlinear = t.nonlinear;
        p
    }

    pub fn manifest_at(&self, n: usize) -> Result<RunManifest> {
        let mut manifest = RunManifest::new(self.spec_at(n), self.samples_at(n), self.output_times.clone(), self.solver_at(n))?;
        manifest.tolerate_failures = self.tolerate_failures;
        manifest.format_version = FORMAT_VERSION;
        Ok(manifest)
    }

    /// Structural checks that do not need line information.
    pub fn validate(&self) -> Result<()> {
        if self.resolutions.is_empty() {
            return Err(Error::Argument("at least one resolution is required".into()));
        }
        if self.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Argument("resolutions must be strictly increasing".into()));
        }
        if let Some(n) = self.resolutions.iter().find(|n| **n < 8 || **n % 2 != 0) {
            return Err(Error::Argument(format!("resolution {n} must be even and >= 8")));
        }
        if let Some(k) = self.diagnostics.wasserstein.iter().find(|k| !(1..=3).contains(*k)) {
            return Err(Error::Argument(format!("Wasserstein order {k} outside 1..=3")));
        }
        for &n in &self.resolutions {
            self.manifest_at(n)?;
        }
        Ok(())
    }

    /// Resolved configuration in the file format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let list = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(s, "name = {}", self.name);
        let _ = writeln!(s, "output_dir = {}", self.output_dir.display());
        let _ = writeln!(s, "base_seed = {}", self.base_seed);
        let _ = writeln!(s, "\n[initial]");
        let _ = writeln!(s, "family = {}", self.family.name());
        match self.rho {
            RhoRule::Fixed(r) => {
                let _ = writeln!(s, "rho = {r:?}");
            }
            RhoRule::PerN(c) => {
                let _ = writeln!(s, "rho = {c:?}/N");
            }
        }
        let _ = writeln!(s, "delta = {:?}", self.delta);
        let _ = writeln!(s, "q = {}", self.q);
        let _ = writeln!(s, "d = {:?}", self.d);
        let _ = writeln!(s, "quad_points = {}", self.quad_points);
        let _ = writeln!(s, "hurst = {:?}", self.hurst);
        let t = &self.solver;
        let _ = writeln!(s, "\n[solver]");
        let _ = writeln!(s, "s = {}", t.s);
        let _ = writeln!(s, "eps = {:?}", t.eps);
        let _ = writeln!(s, "m_n = {}", t.m_n.map_or("auto".to_string(), |m| m.to_string()));
        let _ = writeln!(s, "multiplier = {}", if t.general_multiplier { "general" } else { "sphinx" });
        let _ = writeln!(s, "theta = {}", t.theta.map_or("auto".to_string(), |x| format!("{x:?}")));
        let _ = writeln!(s, "cfl = {:?}", t.cfl);
        let _ = writeln!(s, "visc_safety = {:?}", t.visc_safety);
        let _ = writeln!(s, "dealias = {:?}", t.dealias);
        let _ = writeln!(s, "nonlinear = {}", t.nonlinear);
        let _ = writeln!(s, "\n[run]");
        let res: Vec<String> = self.resolutions.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(s, "resolutions = {}", res.join(", "));
        match self.samples {
            SamplesRule::Fixed(m) => {
                let _ = writeln!(s, "samples = {m}");
            }
            SamplesRule::EqualsN => {
                let _ = writeln!(s, "samples = N");
            }
        }
        let _ = writeln!(s, "output_times = {}", list(&self.output_times));
        let _ = writeln!(s, "tolerate_failures = {}", self.tolerate_failures);
        let d = &self.diagnostics;
        let _ = writeln!(s, "\n[diagnostics]");
        let _ = writeln!(s, "structure = {}", d.structure);
        let _ = writeln!(s, "spectrum = {}", d.spectrum.map_or("none".to_string(), |g| format!("{g:?}")));
        let ks: Vec<String> = d.wasserstein.iter().map(|k| k.to_string()).collect();
        let _ = writeln!(s, "wasserstein = {}", if ks.is_empty() { "none".to_string() } else { ks.join(", ") });
        let _ = writeln!(s, "wasserstein_tuples = {}", d.wasserstein_tuples.map_or("auto".to_string(), |t| t.to_string()));
        let _ = writeln!(s, "cauchy = {}", d.cauchy);
        let _ = writeln!(s, "mean_variance = {}", d.mean_variance);
        let _ = writeln!(s, "time_regularity = {}", d.time_regularity.map_or("none".to_string(), |l| format!("{l:?}")));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let entries = parse_entries(text)?;
        let end_line = text.lines().count() + 1;
        let mut cfg = ExperimentConfig::new("experiment", Family::FlatSheet, Vec::new(), Vec::new());
        let mut output_dir = None;
        let mut family = None;
        let mut resolutions_line = None;
        let mut times_line = None;

        for e in &entries {
            let v = e.value.as_str();
            let line = e.line;
            match (e.section.as_str(), e.key.as_str()) {
                ("", "name") => cfg.name = v.to_string(),
                ("", "output_dir") => output_dir = Some(PathBuf::from(v)),
                ("", "base_seed") => cfg.base_seed = num(v, line)?,
                ("initial", "family") => {
                    family = Some(Family::parse(v).ok_or_else(|| {
                        config_err(line, format!("unknown family `{v}` (flat_sheet, sinusoidal_sheet, fbm, taylor_green)"))
                    })?)
                }
                ("initial", "rho") => {
                    cfg.rho = match v.strip_suffix("/N") {
                        Some(c) => RhoRule::PerN(num(c.trim(), line)?),
                        None => RhoRule::Fixed(num(v, line)?),
                    }
                }
                ("initial", "delta") => cfg.delta = num(v, line)?,
                ("initial", "q") => cfg.q = num(v, line)?,
                ("initial", "d") => cfg.d = num(v, line)?,
                ("initial", "quad_points") => cfg.quad_points = num(v, line)?,
                ("initial", "hurst") => cfg.hurst = num(v, line)?,
                ("solver", "s") => cfg.solver.s = num(v, line)?,
                ("solver", "eps") => cfg.solver.eps = num(v, line)?,
                ("solver", "m_n") => cfg.solver.m_n = auto(v, line)?,
                ("solver", "multiplier") => {
                    cfg.solver.general_multiplier = match v {
                        "sphinx" => false,
                        "general" => true,
                        _ => return Err(config_err(line, format!("unknown multiplier `{v}` (sphinx, general)"))),
                    }
                }
                ("solver", "theta") => cfg.solver.theta = auto(v, line)?,
                ("solver", "cfl") => cfg.solver.cfl = num(v, line)?,
                ("solver", "visc_safety") => cfg.solver.visc_safety = num(v, line)?,
                ("solver", "dealias") => cfg.solver.dealias = num(v, line)?,
                ("solver", "nonlinear") => cfg.solver.nonlinear = boolean(v, line)?,
                ("run", "resolutions") => {
                    cfg.resolutions = list(v, line)?;
                    resolutions_line = Some(line);
                }
                ("run", "samples") => {
                    cfg.samples = if v == "N" { SamplesRule::EqualsN } else { SamplesRule::Fixed(num(v, line)?) }
                }
                ("run", "output_times") => {
                    cfg.output_times = list(v, line)?;
                    times_line = Some(line);
                }
                ("run", "tolerate_failures") => cfg.tolerate_failures = boolean(v, line)?,
                ("diagnostics", "structure") => cfg.diagnostics.structure = boolean(v, line)?,
                ("diagnostics", "spectrum") => cfg.diagnostics.spectrum = none_or(v, line)?,
                ("diagnostics", "wasserstein") => {
                    cfg.diagnostics.wasserstein = if v == "none" { Vec::new() } else { list(v, line)? };
                    if let Some(k) = cfg.diagnostics.wasserstein.iter().find(|k| !(1..=3).contains(*k)) {
                        return Err(config_err(line, format!("Wasserstein order {k} outside 1..=3")));
                    }
                }
                ("diagnostics", "wasserstein_tuples") => cfg.diagnostics.wasserstein_tuples = auto(v, line)?,
                ("diagnostics", "cauchy") => cfg.diagnostics.cauchy = boolean(v, line)?,
                ("diagnostics", "mean_variance") => cfg.diagnostics.mean_variance = boolean(v, line)?,
                ("diagnostics", "time_regularity") => cfg.diagnostics.time_regularity = none_or(v, line)?,
                (section, key) => {
                    let place = if section.is_empty() { "top level".to_string() } else { format!("[{section}]") };
                    return Err(config_err(line, format!("unknown key `{key}` in {place}")));
                }
            }
        }

        cfg.family = family.ok_or_else(|| config_err(end_line, "missing required key `family` in [initial]"))?;
        let res_line = resolutions_line.ok_or_else(|| config_err(end_line, "missing required key `resolutions` in [run]"))?;
        let t_line = times_line.ok_or_else(|| config_err(end_line, "missing required key `output_times` in [run]"))?;
        cfg.output_dir = output_dir.unwrap_or_else(|| PathBuf::from("runs").join(&cfg.name));

        if cfg.resolutions.is_empty() || cfg.resolutions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(config_err(res_line, "resolutions must be nonempty and strictly increasing"));
        }
        if let Some(n) = cfg.resolutions.iter().find(|n| **n < 8 || **n % 2 != 0) {
            return Err(config_err(res_line, format!("resolution {n} must be even and >= 8")));
        }
        if cfg.output_times.is_empty()
            || !(cfg.output_times[0] >= 0.0)
            || cfg.output_times.windows(2).any(|w| !(w[1] > w[0]))
        {
            return Err(config_err(t_line, "output times must be >= 0 and strictly increasing"));
        }
        let line_of = |section: &str| {
            entries.iter().find(|e| e.section == section).map_or(end_line, |e| e.header_line)
        };
        for &n in &cfg.resolutions {
            if let Err(e) = cfg.spec_at(n).validate() {
                return Err(config_err(line_of("initial"), e.to_string()));
            }
            if let Err(e) = cfg.solver_at(n).validate() {
                return Err(config_err(line_of("solver"), e.to_string()));
            }
        }
        if let SamplesRule::Fixed(0) = cfg.samples {
            return Err(config_err(line_of("run"), "samples must be >= 1"));
        }
        Ok(cfg)
    }
}

struct Entry {
    section: String,
    header_line: usize,
    key: String,
    value: String,
    line: usize,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config { line, message: message.into() }
}

const SECTIONS: [&str; 4] = ["initial", "solver", "run", "diagnostics"];

fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut entries: Vec<Entry> = Vec::new();
    let mut section = String::new();
    let mut header_line = 0;
    let mut seen: HashMap<(String, String), usize> = HashMap::new();
    let mut seen_sections: HashMap<String, usize> = HashMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| config_err(line, format!("malformed section header `{content}`")))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(config_err(line, format!("unknown section [{name}]")));
            }
            if let Some(prev) = seen_sections.insert(name.to_string(), line) {
                return Err(config_err(line, format!("section [{name}] already opened at line {prev}")));
            }
            section = name.to_string();
            header_line = line;
            continue;
        }
        let (key, value) = content
            .split_once('=')
            .ok_or_else(|| config_err(line, format!("expected `key = value`, found `{content}`")))?;
        let key = key.trim();
        let value = value.trim();
        if key.is_empty() || value.is_empty() {
            return Err(config_err(line, "empty key or value"));
        }
        if let Some(prev) = seen.insert((section.clone(), key.to_string()), line) {
            return Err(config_err(line, format!("duplicate key `{key}` (first set at line {prev})")));
        }
        entries.push(Entry { section: section.clone(), header_line, key: key.to_string(), value: value.to_string(), line });
    }
    Ok(entries)
}

fn num<T: FromStr>(v: &str, line: usize) -> Result<T> {
    v.parse().map_err(|_| config_err(line, format!("cannot parse `{v}` as a number")))
}

fn boolean(v: &str, line: usize) -> Result<bool> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(config_err(line, format!("expected true or false, found `{v}`"))),
    }
}

fn auto<T: FromStr>(v: &str, line: usize) -> Result<Option<T>> {
    if v == "auto" {
        Ok(None)
    } else {
        num(v, line).map(Some)
    }
}

fn none_or<T: FromStr>(v: &str, line: usize) -> Result<Option<T>> {
    if v == "none" {
        Ok(None)
    } else {
        num(v, line).map(Some)
    }
}

fn list<T: FromStr>(v: &str, line: usize) -> Result<Vec<T>> {
    v.split(',').map(|x| num(x.trim(), line)).collect()
}

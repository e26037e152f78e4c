//! Built-in experiment configurations at desk scale.

use crate::config::{DiagnosticsConfig, ExperimentConfig, RhoRule, SamplesRule};
use crate::init::Family;

/// A named configuration plus a one-line description of the experiment it encodes.
#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    pub provenance: &'static str,
    pub config: ExperimentConfig,
}

fn sheet_diagnostics() -> DiagnosticsConfig {
    DiagnosticsConfig {
        structure: true,
        spectrum: Some(2.0),
        wasserstein: vec![1],
        cauchy: true,
        ..DiagnosticsConfig::default()
    }
}

fn flat_sheet(name: &str, rho: f64, delta: f64, resolutions: Vec<usize>) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(name, Family::FlatSheet, resolutions, vec![0.0, 0.4]);
    c.rho = RhoRule::Fixed(rho);
    c.delta = delta;
    c.samples = SamplesRule::Fixed(32);
    c.diagnostics = sheet_diagnostics();
    c
}

fn fbm(name: &str, hurst: f64) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(name, Family::Fbm, vec![64, 128], vec![0.0, 1.0]);
    c.hurst = hurst;
    c.samples = SamplesRule::Fixed(32);
    c.diagnostics = DiagnosticsConfig { time_regularity: Some(2.0), ..sheet_diagnostics() };
    c
}

/// All presets, in a fixed order.
pub fn all() -> Vec<Preset> {
    let mut out = Vec::new();

    let mut tg = ExperimentConfig::new("taylor_green_check", Family::TaylorGreen, vec![32], vec![0.0, 1.0]);
    tg.samples = SamplesRule::Fixed(1);
    out.push(Preset {
        name: "taylor_green_check",
        provenance: "steady Taylor-Green vortex; the solver should keep it fixed",
        config: tg,
    });

    out.push(Preset {
        name: "flat_sheet_smooth",
        provenance: "perturbed flat vortex sheet, smoothed (rho = 0.1, delta = 0.025)",
        config: flat_sheet("flat_sheet_smooth", 0.1, 0.025, vec![32, 64, 128]),
    });
    out.push(Preset {
        name: "flat_sheet_discontinuous",
        provenance: "perturbed flat vortex sheet, discontinuous (rho = 0, delta = 0.025)",
        config: flat_sheet("flat_sheet_discontinuous", 0.0, 0.025, vec![64, 128]),
    });

    let mut sin = ExperimentConfig::new("sinusoidal_sheet", Family::SinusoidalSheet, vec![64, 128], vec![0.0, 0.6, 1.2]);
    sin.rho = RhoRule::PerN(5.0);
    sin.delta = 0.003125;
    sin.d = 0.2;
    sin.solver.eps = 0.01;
    sin.samples = SamplesRule::Fixed(32);
    sin.diagnostics = DiagnosticsConfig { mean_variance: true, ..sheet_diagnostics() };
    out.push(Preset {
        name: "sinusoidal_sheet",
        provenance: "randomly displaced sinusoidal vortex sheet (rho = 5/N, d = 0.2, eps = 0.01, T = 1.2)",
        config: sin,
    });

    out.push(Preset { name: "fbm_h015", provenance: "fractional Brownian motion data, H = 0.15", config: fbm("fbm_h015", 0.15) });
    out.push(Preset { name: "fbm_h05", provenance: "fractional Brownian motion data, H = 0.5", config: fbm("fbm_h05", 0.5) });
    out.push(Preset { name: "fbm_h075", provenance: "fractional Brownian motion data, H = 0.75", config: fbm("fbm_h075", 0.75) });

    const SWEEP: [(&str, &str); 6] = [
        ("delta_sweep_0", "flat sheet delta sweep, delta = 0.05"),
        ("delta_sweep_1", "flat sheet delta sweep, delta = 0.05 / 2"),
        ("delta_sweep_2", "flat sheet delta sweep, delta = 0.05 / 4"),
        ("delta_sweep_3", "flat sheet delta sweep, delta = 0.05 / 8"),
        ("delta_sweep_4", "flat sheet delta sweep, delta = 0.05 / 16"),
        ("delta_sweep_5", "flat sheet delta sweep, delta = 0.05 / 32"),
    ];
    for (j, (name, provenance)) in SWEEP.into_iter().enumerate() {
        let mut c = flat_sheet(name, 0.0, 0.05 / (1u32 << j) as f64, vec![128]);
        c.diagnostics = DiagnosticsConfig { structure: true, spectrum: Some(2.0), ..DiagnosticsConfig::default() };
        out.push(Preset { name, provenance, config: c });
    }
    out
}

pub fn find(name: &str) -> Option<Preset> {
    all().into_iter().find(|p| p.name == name)
}

/// Parameter table printed by the `presets` command.
pub fn table() -> String {
    let mut s = String::new();
    for p in all() {
        let c = &p.config;
        let res: Vec<String> = c.resolutions.iter().map(|n| n.to_string()).collect();
        let times: Vec<String> = c.output_times.iter().map(|t| format!("{t}")).collect();
        let samples = match c.samples {
            SamplesRule::Fixed(m) => m.to_string(),
            SamplesRule::EqualsN => "N".to_string(),
        };
        let rho = match c.rho {
            RhoRule::Fixed(r) => format!("{r}"),
            RhoRule::PerN(k) => format!("{k}/N"),
        };
        s.push_str(&format!("{}\n  {}\n", p.name, p.provenance));
        s.push_str(&format!(
            "  family={} rho={} delta={} d={} H={} eps={} s={}\n",
            c.family.name(),
            rho,
            c.delta,
            c.d,
            c.hurst,
            c.solver.eps,
            c.solver.s
        ));
        s.push_str(&format!("  N=[{}] m={} times=[{}]\n", res.join(","), samples, times.join(",")));
    }
    s
}

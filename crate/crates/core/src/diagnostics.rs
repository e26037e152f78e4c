//! Statistics of ensemble snapshots: structure functions, energy spectra,
//! exponent fits, Cauchy rates and a time-regularity estimate.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::ensemble::{mean_field, synthesis_points, variance_field, EnsembleSnapshot};
use crate::error::{Error, Result};
use crate::field::{SpectralField, TWO_PI};

/// Sampled curve with export metadata.
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarCurve {
    pub kind: String,
    pub time: f64,
    pub n: usize,
    pub m: usize,
    pub abscissa: Vec<f64>,
    pub values: Vec<f64>,
}

impl ScalarCurve {
    pub fn new(kind: &str, time: f64, n: usize, m: usize, abscissa: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if abscissa.len() != values.len() {
            return Err(Error::Shape(format!(
                "{} abscissa values but {} ordinates",
                abscissa.len(),
                values.len()
            )));
        }
        if abscissa.windows(2).any(|w| !(w[1] > w[0])) || abscissa.first().is_some_and(|a| !(*a > 0.0)) {
            return Err(Error::Argument("abscissa must be positive and strictly increasing".into()));
        }
        Ok(Self { kind: kind.to_string(), time, n, m, abscissa, values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV text: a `# kind,time,N,m` header line, then `abscissa,value` rows.
    pub fn to_csv(&self) -> String {
        let mut s = format!("# {},{:.16e},{},{}\n", self.kind, self.time, self.n, self.m);
        for (a, v) in self.abscissa.iter().zip(&self.values) {
            let _ = writeln!(s, "{a:.16e},{v:.16e}");
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Least-squares power law on a log-log curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExponentFit {
    pub exponent: f64,
    pub intercept: f64,
    pub fit_range: (f64, f64),
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

/// Bessel function of the first kind, order one.
pub fn bessel_j1(x: f64) -> f64 {
    libm::j1(x)
}

/// Disk average of `|exp(i k.h) - 1|^2` over `|h| < r`, as a function of `rho = |k| r`.
pub fn disk_kernel(rho: f64) -> f64 {
    let rho = rho.abs();
    if rho < 1e-2 {
        let r2 = rho * rho;
        r2 / 4.0 - r2 * r2 / 96.0 + r2 * r2 * r2 / 4608.0
    } else {
        2.0 * (1.0 - 2.0 * bessel_j1(rho) / rho)
    }
}

/// 24 logarithmically spaced radii in `[2 pi / (2N), pi / 2]`; needs `N >= 3`.
pub fn default_r_grid(n: usize) -> Vec<f64> {
    log_grid(TWO_PI / (2.0 * n as f64), std::f64::consts::FRAC_PI_2, 24)
}

/// `count` logarithmically spaced points from `a` to `b` inclusive.
pub fn log_grid(a: f64, b: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..count)
        .map(|i| match i {
            0 => a,
            i if i == count - 1 => b,
            i => (la + (lb - la) * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// One decade ending at eight grid spacings: `[0.8 Delta, 8 Delta]`, `Delta = 2 pi / N`.
pub fn default_fit_range(n: usize) -> (f64, f64) {
    let delta = TWO_PI / n as f64;
    (0.8 * delta, 8.0 * delta)
}

/// Scales resolved without dissipation: `[pi / m_N, pi / 2]`, `m_N = floor(sqrt N)`.
pub fn inertial_fit_range(n: usize) -> (f64, f64) {
    let m_n = ((n as f64).sqrt().floor() as usize).max(2);
    (std::f64::consts::PI / m_n as f64, std::f64::consts::FRAC_PI_2)
}

/// Ensemble-averaged power per distinct `|k|^2`.
fn shell_power(snapshot: &EnsembleSnapshot) -> BTreeMap<i64, f64> {
    let mut power = BTreeMap::new();
    let w = 1.0 / snapshot.m() as f64;
    for f in &snapshot.fields {
        for ((k1, k2), c) in f.modes() {
            let p = c[0].norm_sqr() + c[1].norm_sqr();
            if p != 0.0 {
                *power.entry(k1 * k1 + k2 * k2).or_insert(0.0) += w * p;
            }
        }
    }
    power
}

/// `S(r) = ((1/m) sum_i (2 pi)^2 sum_k W(|k| r) |u_i(k)|^2)^(1/2)` at each radius.
pub fn structure_function(snapshot: &EnsembleSnapshot, r_values: &[f64]) -> Result<ScalarCurve> {
    if let Some(r) = r_values.iter().find(|r| !(**r > 0.0 && **r <= std::f64::consts::PI)) {
        return Err(Error::Argument(format!("radius {r} outside (0, pi]")));
    }
    let power = shell_power(snapshot);
    let values = r_values
        .iter()
        .map(|&r| {
            let sum: f64 = power.iter().map(|(&kk, &p)| disk_kernel((kk as f64).sqrt() * r) * p).sum();
            TWO_PI * sum.sqrt()
        })
        .collect();
    ScalarCurve::new("structure", snapshot.time, snapshot.n, snapshot.m(), r_values.to_vec(), values)
}

/// Smallest `K >= 0` with `K^2 >= kk`.
fn shell_index(kk: i64) -> usize {
    let mut k = (kk as f64).sqrt() as i64;
    while k * k < kk {
        k += 1;
    }
    while k > 0 && (k - 1) * (k - 1) >= kk {
        k -= 1;
    }
    k as usize
}

/// Shell count reaching the corner modes `|k| = N sqrt 2`.
pub fn default_k_max(n: usize) -> usize {
    shell_index(2 * (n as i64) * (n as i64))
}

/// `E(K) = (1/m) sum_i 1/2 sum_{K-1 < |k| <= K} |u_i(k)|^2` for `K = 1..=k_max`.
pub fn energy_spectrum(snapshot: &EnsembleSnapshot, k_max: usize) -> Result<ScalarCurve> {
    if k_max == 0 || k_max > default_k_max(snapshot.n) {
        return Err(Error::Argument(format!(
            "K_max must lie in 1..={} for N = {}, got {k_max}",
            default_k_max(snapshot.n),
            snapshot.n
        )));
    }
    let mut values = vec![0.0; k_max];
    for (kk, p) in shell_power(snapshot) {
        let shell = shell_index(kk);
        if shell <= k_max {
            values[shell - 1] += 0.5 * p;
        }
    }
    let abscissa = (1..=k_max).map(|k| k as f64).collect();
    ScalarCurve::new("spectrum", snapshot.time, snapshot.n, snapshot.m(), abscissa, values)
}

/// `K^gamma E(K)`.
pub fn compensated_spectrum(curve: &ScalarCurve, gamma: f64) -> ScalarCurve {
    let values = curve
        .abscissa
        .iter()
        .zip(&curve.values)
        .map(|(k, e)| if gamma == 0.0 { *e } else { k.powf(gamma) * e })
        .collect();
    ScalarCurve { kind: "compensated".into(), values, ..curve.clone() }
}

/// Least-squares line through `(ln r, ln S)` for `r` in `[r_min, r_max]`.
pub fn fit_exponent(curve: &ScalarCurve, r_min: f64, r_max: f64) -> Result<ExponentFit> {
    let slack = 1e-12 * r_max.abs();
    let points: Vec<(f64, f64)> = curve
        .abscissa
        .iter()
        .zip(&curve.values)
        .filter(|(r, _)| **r >= r_min - slack && **r <= r_max + slack)
        .map(|(r, v)| (*r, *v))
        .collect();
    if points.len() < 3 {
        return Err(Error::Argument(format!(
            "fit range [{r_min}, {r_max}] holds {} curve points, need at least 3",
            points.len()
        )));
    }
    if let Some((r, v)) = points.iter().find(|(_, v)| !(*v > 0.0)) {
        return Err(Error::Domain(format!("nonpositive value {v} at abscissa {r}")));
    }
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(ExponentFit {
        exponent,
        intercept,
        fit_range: (points[0].0, points[points.len() - 1].0),
        residual: (ss / n).sqrt(),
    })
}

/// Ensemble statistic compared by [`cauchy_rate`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Statistic {
    Mean,
    Variance,
    /// The `j`-th sample of both ensembles.
    Sample(usize),
}

/// L2 distance between a statistic at `N` and the same statistic at `2N`,
/// the latter restricted to the coarse resolution. Means and samples are
/// truncated modally; variance grids are compared on the coarse synthesis
/// grid, whose nodes are every other node of the fine one.
pub fn cauchy_rate(coarse: &EnsembleSnapshot, fine: &EnsembleSnapshot, statistic: Statistic) -> Result<f64> {
    if fine.n != 2 * coarse.n {
        return Err(Error::Argument(format!(
            "resolutions {} and {} are not related by a factor of two",
            coarse.n, fine.n
        )));
    }
    if (coarse.time - fine.time).abs() > 1e-12 * coarse.time.abs().max(1.0) {
        return Err(Error::Argument(format!("snapshot times differ: {} vs {}", coarse.time, fine.time)));
    }
    let modal = |a: &SpectralField, b: &SpectralField| -> Result<f64> { Ok((&b.truncate_to(a.resolution())? - a).l2_norm()) };
    match statistic {
        Statistic::Mean => modal(&mean_field(coarse), &mean_field(fine)),
        Statistic::Sample(j) => {
            let (a, b) = coarse.fields.get(j).zip(fine.fields.get(j)).ok_or_else(|| {
                Error::Argument(format!("sample {j} missing (ensembles hold {} and {})", coarse.m(), fine.m()))
            })?;
            modal(a, b)
        }
        Statistic::Variance => {
            let mc = synthesis_points(coarse.n);
            let vc = variance_field(coarse, mc)?;
            let vf = variance_field(fine, 2 * mc)?;
            let mut diff = vc.clone();
            for j1 in 0..mc {
                for j2 in 0..mc {
                    diff.values[j1 * mc + j2] -= vf.get(2 * j1, 2 * j2);
                }
            }
            Ok(diff.l2_norm())
        }
    }
}

/// `max ||u(t) - u(s)||_{H^-L} / ((1 + ||u(t_0)||^2) |t - s|)` over consecutive
/// pairs of one trajectory, given as `(time, field)` with increasing times.
pub fn time_regularity_ratio(trajectory: &[(f64, &SpectralField)], l: f64) -> Result<f64> {
    if trajectory.len() < 2 {
        return Err(Error::Argument("time regularity needs at least two snapshots".into()));
    }
    if !(l > 0.0) {
        return Err(Error::Argument(format!("Sobolev index L must be positive, got {l}")));
    }
    if trajectory.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(Error::Argument("snapshot times must be strictly increasing".into()));
    }
    let scale = 1.0 + trajectory[0].1.l2_norm().powi(2);
    let mut ratio: f64 = 0.0;
    for w in trajectory.windows(2) {
        let (s, a) = w[0];
        let (t, b) = w[1];
        let d = (b - a).sobolev_norm(-l);
        ratio = ratio.max(d / (scale * (t - s)));
    }
    Ok(ratio)
}

/// Sample `j` across a sequence of snapshots, as input for [`time_regularity_ratio`].
pub fn sample_trajectory(snapshots: &[EnsembleSnapshot], j: usize) -> Result<Vec<(f64, &SpectralField)>> {
    snapshots
        .iter()
        .map(|s| {
            s.fields
                .get(j)
                .map(|f| (s.time, f))
                .ok_or_else(|| Error::Argument(format!("sample {j} missing at t = {}", s.time)))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn j1_quadrature(x: f64, n: usize) -> f64 {
        // J1(x) = (1 / 2 pi) int_0^{2 pi} cos(t - x sin t) dt, periodic trapezoid.
        (0..n)
            .map(|i| {
                let t = TWO_PI * i as f64 / n as f64;
                (t - x * t.sin()).cos()
            })
            .sum::<f64>()
            / n as f64
    }

    #[test]
    fn bessel_matches_integral_representation() {
        // 64 nodes resolve the integrand up to x of about 30.
        for i in 0..=300 {
            let x = i as f64 * 0.1;
            assert!((bessel_j1(x) - j1_quadrature(x, 64)).abs() < 1e-12, "x = {x}");
        }
        for i in 0..=3000 {
            let x = i as f64 * 0.3;
            assert!((bessel_j1(x) - j1_quadrature(x, 1024)).abs() < 1e-12, "x = {x}");
        }
    }

    #[test]
    fn kernel_bounds() {
        assert_eq!(disk_kernel(0.0), 0.0);
        for i in 0..=100_000 {
            let rho = i as f64 * 1e-3;
            let w = disk_kernel(rho);
            assert!((0.0..=4.0).contains(&w), "{rho}");
            assert!(w <= 4.0 * (rho * rho).min(1.0) + 1e-15, "{rho}");
        }
        // Series and closed form agree at the switch.
        let rho = 1e-2;
        assert!((2.0 * (1.0 - 2.0 * bessel_j1(rho) / rho) - disk_kernel(rho)).abs() < 1e-13);
    }

    fn single_mode(n: usize, a: f64) -> EnsembleSnapshot {
        let mut u = SpectralField::zeros(n);
        u.set_mode(0, 1, [Complex64::new(a, 0.0), Complex64::new(0.0, 0.0)]);
        EnsembleSnapshot::new(0.0, vec![u], vec![0]).unwrap()
    }

    #[test]
    fn structure_function_examples() {
        let zero = EnsembleSnapshot::new(0.0, vec![SpectralField::zeros(4)], vec![0]).unwrap();
        let c = structure_function(&zero, &default_r_grid(4)).unwrap();
        assert!(c.values.iter().all(|v| *v == 0.0));
        assert!(structure_function(&zero, &[0.0]).is_err());
        assert!(structure_function(&zero, &[-0.1]).is_err());

        let a = 0.3;
        let c = structure_function(&single_mode(4, a), &[0.2, 1.0]).unwrap();
        for (r, s) in c.abscissa.iter().zip(&c.values) {
            let expect = TWO_PI * TWO_PI * 2.0 * a * a * disk_kernel(*r);
            assert!((s * s - expect).abs() < 1e-14 * expect);
        }
    }

    #[test]
    fn spectrum_examples() {
        let a = 0.7;
        let e = energy_spectrum(&single_mode(4, a), 6).unwrap();
        assert!((e.values[0] - a * a).abs() < 1e-15);
        assert!(e.values[1..].iter().all(|v| *v == 0.0));
        assert_eq!(default_k_max(4), 6);
        assert!(energy_spectrum(&single_mode(4, a), 7).is_err());
        let comp = compensated_spectrum(&e, 0.0);
        assert_eq!(comp.values, e.values);
    }

    #[test]
    fn shell_index_boundaries() {
        assert_eq!(shell_index(1), 1);
        assert_eq!(shell_index(2), 2);
        assert_eq!(shell_index(4), 2);
        assert_eq!(shell_index(5), 3);
        assert_eq!(shell_index(9), 3);
        assert_eq!(shell_index(10), 4);
    }

    #[test]
    fn fit_examples() {
        let r = log_grid(0.1, 1.0, 5);
        let v: Vec<f64> = r.iter().map(|x| 3.0 * x.powf(0.7)).collect();
        let c = ScalarCurve::new("structure", 0.0, 8, 1, r.clone(), v.clone()).unwrap();
        let f = fit_exponent(&c, 0.1, 1.0).unwrap();
        assert!((f.exponent - 0.7).abs() < 1e-12);
        let doubled = ScalarCurve { values: v.iter().map(|x| 2.0 * x).collect(), ..c.clone() };
        let g = fit_exponent(&doubled, 0.1, 1.0).unwrap();
        assert!((g.exponent - f.exponent).abs() < 1e-12);
        assert!((g.intercept - f.intercept - 2f64.ln()).abs() < 1e-12);
        let flat = ScalarCurve { values: vec![2.0; 5], ..c.clone() };
        assert!(fit_exponent(&flat, 0.1, 1.0).unwrap().exponent.abs() < 1e-12);
        let bad = ScalarCurve { values: vec![1.0, 0.0, 1.0, 1.0, 1.0], ..c.clone() };
        assert!(matches!(fit_exponent(&bad, 0.1, 1.0), Err(Error::Domain(_))));
        assert!(matches!(fit_exponent(&c, 0.5, 0.6), Err(Error::Argument(_))));
    }

    #[test]
    fn csv_layout() {
        let c = ScalarCurve::new("spectrum", 0.4, 8, 2, vec![1.0, 2.0], vec![0.5, 0.25]).unwrap();
        let text = c.to_csv();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# spectrum,4.0000000000000002e-1,8,2");
        assert_eq!(lines[1], "1.0000000000000000e0,5.0000000000000000e-1");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn time_regularity_single_mode() {
        let u0 = SpectralField::zeros(4);
        let mut u1 = SpectralField::zeros(4);
        let c = 0.1;
        u1.set_mode(1, 2, [Complex64::new(-2.0 * c, 0.0), Complex64::new(c, 0.0)]);
        let dt = 0.5;
        let r = time_regularity_ratio(&[(0.0, &u0), (dt, &u1)], 2.0).unwrap();
        let dc = (5.0f64 * c * c).sqrt();
        let expect = dc * TWO_PI * 2f64.sqrt() * (1.0 + 5.0f64).powf(-1.0) / dt;
        assert!((r - expect).abs() < 1e-14 * expect);
        let shifted = time_regularity_ratio(&[(3.0, &u0), (3.0 + dt, &u1)], 2.0).unwrap();
        assert!((shifted - r).abs() < 1e-14 * r);
        assert!(time_regularity_ratio(&[(0.0, &u0)], 2.0).is_err());
    }
}

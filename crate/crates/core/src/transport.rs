//! Exact 1-Wasserstein distances between uniform point clouds and the
//! averaged distance between k-point correlation marginals of two ensembles.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use crate::ensemble::EnsembleSnapshot;
use crate::error::{Error, Result};
use crate::field::TWO_PI;
use crate::rng::stream_rng;

/// Seed of the spatial tuples when none is given.
pub const DIAGNOSTIC_SEED: u64 = 0x5745_5353_5431;

/// `m` points in `R^d`, each with weight `1/m`.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    points: Vec<Vec<f64>>,
}

impl PointCloud {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points.first().map(Vec::len).ok_or_else(|| Error::Argument("empty point cloud".into()))?;
        if points.iter().any(|p| p.len() != dim) {
            return Err(Error::Shape("points differ in dimension".into()));
        }
        if points.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Argument("point cloud has non-finite coordinates".into()));
        }
        Ok(Self { dim, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Minimum-cost perfect matching of a square `m x m` cost matrix (row major).
/// Returns the column assigned to each row.
///
/// Among assignments whose cost ties the optimum up to rounding, the one with
/// the smallest floating-point total (summed in row order) is returned.
pub fn hungarian(cost: &[f64], m: usize) -> Vec<usize> {
    let (assignment, u, v) = hungarian_potentials(cost, m);
    break_ties(cost, m, assignment, &u, &v)
}

const MAX_TIE_CANDIDATES: usize = 1 << 14;

fn break_ties(cost: &[f64], m: usize, assignment: Vec<usize>, u: &[f64], v: &[f64]) -> Vec<usize> {
    let scale = cost.iter().fold(1.0f64, |a, c| a.max(c.abs()));
    let tol = 1e-9 * scale * m as f64;
    let tight: Vec<Vec<usize>> = (0..m)
        .map(|i| (0..m).filter(|&j| cost[i * m + j] - u[i + 1] - v[j + 1] <= tol).collect())
        .collect();
    if tight.iter().all(|t| t.len() == 1) {
        return assignment;
    }

    struct Search<'a> {
        cost: &'a [f64],
        m: usize,
        tight: &'a [Vec<usize>],
        used: Vec<bool>,
        current: Vec<usize>,
        best: Vec<usize>,
        best_total: f64,
        leaves: usize,
    }
    impl Search<'_> {
        fn go(&mut self, i: usize, partial: f64) {
            if self.leaves >= MAX_TIE_CANDIDATES {
                return;
            }
            if i == self.m {
                self.leaves += 1;
                if partial < self.best_total {
                    self.best_total = partial;
                    self.best.clone_from(&self.current);
                }
                return;
            }
            for k in 0..self.tight[i].len() {
                let j = self.tight[i][k];
                if self.used[j] {
                    continue;
                }
                self.used[j] = true;
                self.current[i] = j;
                self.go(i + 1, partial + self.cost[i * self.m + j]);
                self.used[j] = false;
            }
        }
    }
    let best_total = assignment.iter().enumerate().map(|(i, &j)| cost[i * m + j]).fold(0.0, |a, c| a + c);
    let mut search = Search {
        cost,
        m,
        tight: &tight,
        used: vec![false; m],
        current: vec![0; m],
        best: assignment,
        best_total,
        leaves: 0,
    };
    search.go(0, 0.0);
    search.best
}

fn hungarian_potentials(cost: &[f64], m: usize) -> (Vec<usize>, Vec<f64>, Vec<f64>) {
    assert_eq!(cost.len(), m * m, "cost matrix must be m x m");
    // Potentials and matching with a sentinel column 0 (1-based internally).
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1) * m + (j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut assignment = vec![0; m];
    for j in 1..=m {
        assignment[row_of[j] - 1] = j - 1;
    }
    (assignment, u, v)
}

/// `(1/m) min_pi sum_i |A_i - B_pi(i)|` with Euclidean ground cost.
pub fn w1_exact(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Argument(format!("point clouds differ in size: {} vs {}", a.len(), b.len())));
    }
    if a.dim != b.dim {
        return Err(Error::Shape(format!("point clouds differ in dimension: {} vs {}", a.dim, b.dim)));
    }
    let m = a.len();
    let mut cost = vec![0.0; m * m];
    for (i, p) in a.points.iter().enumerate() {
        for (j, q) in b.points.iter().enumerate() {
            cost[i * m + j] = distance(p, q);
        }
    }
    let assignment = hungarian(&cost, m);
    let total = assignment.iter().enumerate().map(|(i, &j)| cost[i * m + j]).fold(0.0, |a, c| a + c);
    Ok(total / m as f64)
}

/// Default number of spatial tuples for correlation order `k`.
pub fn default_tuple_count(k: usize) -> usize {
    match k {
        1 => 256,
        2 => 128,
        _ => 64,
    }
}

/// `count` tuples of `k` points drawn uniformly on the torus `[0, 2 pi)^2`.
pub fn random_tuples(k: usize, count: usize, seed: u64) -> Vec<Vec<[f64; 2]>> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| (0..k).map(|_| [TWO_PI * rng.random::<f64>(), TWO_PI * rng.random::<f64>()]).collect())
        .collect()
}

/// Averaged distance between k-point marginals.
#[derive(Clone, Debug, PartialEq)]
pub struct MarginalDistanceReport {
    pub k: usize,
    pub time: f64,
    pub resolutions: (usize, usize),
    pub m: usize,
    pub num_x_tuples: usize,
    /// Mean per-tuple distance times `normalization`.
    pub value: f64,
    /// Volume factor `(2 pi)^(2k)` applied to the mean.
    pub normalization: f64,
    pub tuple_seed: Option<u64>,
    pub per_tuple: Vec<(Vec<[f64; 2]>, f64)>,
}

impl MarginalDistanceReport {
    /// Mean per-tuple distance without the volume factor.
    pub fn mean_distance(&self) -> f64 {
        self.value / self.normalization
    }

    pub fn to_csv(&self) -> String {
        let mut s = format!(
            "# wasserstein_k{},{:.16e},{},{},{}\n",
            self.k, self.time, self.resolutions.0, self.resolutions.1, self.m
        );
        let seed = self.tuple_seed.map(|v| v.to_string()).unwrap_or_else(|| "none".into());
        let _ = writeln!(s, "# normalization={:.16e},tuple_seed={seed}", self.normalization);
        for (i, (tuple, d)) in self.per_tuple.iter().enumerate() {
            let _ = write!(s, "{i}");
            for x in tuple {
                let _ = write!(s, ",{:.16e},{:.16e}", x[0], x[1]);
            }
            let _ = writeln!(s, ",{d:.16e}");
        }
        let _ = writeln!(s, "summary,{:.16e}", self.value);
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv())?;
        Ok(())
    }
}

fn cloud_at(snapshot: &EnsembleSnapshot, tuple: &[[f64; 2]]) -> Result<PointCloud> {
    PointCloud::new(
        snapshot
            .fields
            .iter()
            .map(|f| tuple.iter().flat_map(|x| f.eval_at(*x)).collect())
            .collect(),
    )
}

/// Average over `x_tuples` of `W1` between the empirical laws of
/// `(u(x_1), ..., u(x_k))` under the two ensembles, times `(2 pi)^(2k)`.
/// Fields are evaluated exactly at the tuple points.
pub fn marginal_w1(
    a: &EnsembleSnapshot,
    b: &EnsembleSnapshot,
    k: usize,
    x_tuples: &[Vec<[f64; 2]>],
) -> Result<MarginalDistanceReport> {
    if k == 0 {
        return Err(Error::Argument("correlation order k must be >= 1".into()));
    }
    if k > 3 {
        return Err(Error::Unsupported(format!("correlation order {k} (at most 3)")));
    }
    if x_tuples.is_empty() || x_tuples.iter().any(|t| t.len() != k) {
        return Err(Error::Argument(format!("need a nonempty list of {k}-point tuples")));
    }
    if (a.time - b.time).abs() > 1e-12 * a.time.abs().max(1.0) {
        return Err(Error::Argument(format!("snapshot times differ: {} vs {}", a.time, b.time)));
    }
    if a.m() != b.m() {
        return Err(Error::Argument(format!("ensemble sizes differ: {} vs {}", a.m(), b.m())));
    }
    let distances: Vec<Result<f64>> = x_tuples
        .par_iter()
        .map(|t| w1_exact(&cloud_at(a, t)?, &cloud_at(b, t)?))
        .collect();
    let mut per_tuple = Vec::with_capacity(x_tuples.len());
    for (t, d) in x_tuples.iter().zip(distances) {
        per_tuple.push((t.clone(), d?));
    }
    let normalization = TWO_PI.powi(2 * k as i32);
    let mean = per_tuple.iter().map(|p| p.1).sum::<f64>() / per_tuple.len() as f64;
    Ok(MarginalDistanceReport {
        k,
        time: a.time,
        resolutions: (a.n, b.n),
        m: a.m(),
        num_x_tuples: per_tuple.len(),
        value: mean * normalization,
        normalization,
        tuple_seed: None,
        per_tuple,
    })
}

/// [`marginal_w1`] on `count` random tuples drawn from `seed`.
pub fn marginal_w1_random(
    a: &EnsembleSnapshot,
    b: &EnsembleSnapshot,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<MarginalDistanceReport> {
    let tuples = random_tuples(k, count, seed);
    let mut report = marginal_w1(a, b, k, &tuples)?;
    report.tuple_seed = Some(seed);
    Ok(report)
}

use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::diagnostics::{
    bounding_box, fell_check, fell_shell_check, global_sup_on_receding_set, image_hausdorff, local_uniform_sup,
    range_containment_check, FellMode,
};
use super::MapOracle;
use crate::error::{Error, Result};
use crate::geometry::{dist, norm, sphere_directions, PointCloud, SetDescriptor};
use crate::monotone::{rockafellar_potential_with_tol, MaxAffinePotential};
use crate::ranks::center_outward_grid;
use crate::transport::{coupling_support, gaussian_brenier, solve_discrete_ot, DiscreteMeasure, SUPPORT_FLOOR};

/// Name of the generator recorded in report headers.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64(seed), stream (n << 32) | rep";

/// Vertices used to approximate a round range for the strict-convexity test.
pub const RANGE_SAMPLES: usize = 256;

/// Knots of the sorted oracle on the line.
const QUANTILE_KNOTS: usize = 1024;

/// Law of a sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum Family {
    /// Centred Gaussian with the given covariance.
    Gaussian { cov: Vec<Vec<f64>> },
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    UniformBall { center: Vec<f64>, radius: f64 },
    /// Deterministic center-outward grid with `floor(sqrt n)` rings of
    /// `floor(sqrt n)` directions and the remainder at the origin.
    SphericalUniformGrid,
}

impl Family {
    fn validate(&self, dim: usize) -> Result<()> {
        let bad = |m: &str| Err(Error::invalid(m.to_string()));
        match self {
            Family::Gaussian { cov } => {
                if cov.len() != dim || cov.iter().any(|r| r.len() != dim) {
                    return bad("gaussian covariance must be dim x dim");
                }
                cholesky(cov).map(|_| ())
            }
            Family::UniformBox { lo, hi } => {
                if lo.len() != dim || hi.len() != dim || lo.iter().zip(hi).any(|(l, h)| !(h > l)) {
                    return bad("uniform_box needs lo < hi in every coordinate");
                }
                Ok(())
            }
            Family::UniformBall { center, radius } => {
                if center.len() != dim || !(*radius > 0.0) {
                    return bad("uniform_ball needs a centre of the right dimension and a positive radius");
                }
                Ok(())
            }
            Family::SphericalUniformGrid => {
                if dim < 2 {
                    return bad("spherical_uniform_grid needs dim >= 2");
                }
                Ok(())
            }
        }
    }

    /// Closed support, when bounded.
    fn support(&self, dim: usize) -> Option<SetDescriptor> {
        match self {
            Family::Gaussian { .. } => None,
            Family::UniformBox { lo, hi } => Some(SetDescriptor::cube(lo.clone(), hi.clone())),
            Family::UniformBall { center, radius } => Some(SetDescriptor::ball(center.clone(), *radius)),
            Family::SphericalUniformGrid => Some(SetDescriptor::ball(vec![0.0; dim], 1.0)),
        }
    }

    fn sample(&self, dim: usize, n: usize, seed: u64, rng: &mut ChaCha8Rng) -> Result<PointCloud> {
        let mut out = PointCloud::empty(dim);
        match self {
            Family::Gaussian { cov } => {
                let l = cholesky(cov)?;
                for _ in 0..n {
                    let z: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                    let x: Vec<f64> = (0..dim).map(|i| (0..=i).map(|j| l[(i, j)] * z[j]).sum()).collect();
                    out.push(&x);
                }
            }
            Family::UniformBox { lo, hi } => {
                for _ in 0..n {
                    let x: Vec<f64> = lo.iter().zip(hi).map(|(l, h)| l + (h - l) * rng.random::<f64>()).collect();
                    out.push(&x);
                }
            }
            Family::UniformBall { center, radius } => {
                for _ in 0..n {
                    let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(rng)).collect();
                    let r = radius * rng.random::<f64>().powf(1.0 / dim as f64) / norm(&g);
                    let x: Vec<f64> = center.iter().zip(&g).map(|(c, z)| c + r * z).collect();
                    out.push(&x);
                }
            }
            Family::SphericalUniformGrid => {
                let mut side = (n as f64).sqrt() as usize;
                while (side + 1) * (side + 1) <= n {
                    side += 1;
                }
                while side * side > n {
                    side -= 1;
                }
                if side == 0 {
                    return Err(Error::invalid("spherical_uniform_grid needs n >= 1"));
                }
                return Ok(center_outward_grid(side, side, n - side * side, dim, seed)?.points().clone());
            }
        }
        Ok(out)
    }

    /// Quantile function on the line.
    fn quantile(&self, u: f64) -> Result<f64> {
        match self {
            Family::Gaussian { cov } => {
                let normal = Normal::new(0.0, cov[0][0].sqrt()).map_err(|e| Error::invalid(e.to_string()))?;
                Ok(normal.inverse_cdf(u))
            }
            Family::UniformBox { lo, hi } => Ok(lo[0] + u * (hi[0] - lo[0])),
            Family::UniformBall { center, radius } => Ok(center[0] - radius + 2.0 * radius * u),
            Family::SphericalUniformGrid => Err(Error::Unsupported("grid family on the line".into())),
        }
    }
}

fn cholesky(cov: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = cov.len();
    let m = DMatrix::from_fn(d, d, |i, j| cov[i][j]);
    if (&m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
        return Err(Error::invalid("covariance is not symmetric"));
    }
    m.cholesky()
        .map(|c| c.l())
        .ok_or_else(|| Error::invalid("covariance is not positive definite"))
}

/// Unbounded set on which the global statistic is taken.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecedingSpec {
    pub set: SetDescriptor,
    pub r_max: f64,
}

/// User-declared hit or miss probe.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FellProbe {
    pub probe: SetDescriptor,
    pub mode: FellMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Activity tolerance for subdifferential evaluation.
    pub eval: f64,
    /// Per-arc tolerance of the cyclical monotonicity certificate.
    pub monotone: f64,
    /// Slack for range containment and strict convexity faces.
    pub geometry: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { eval: 1e-9, monotone: 1e-9, geometry: 1e-9 }
    }
}

/// One Monte-Carlo study.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub source: Family,
    pub target: Family,
    /// Reference map; derived from the families when absent.
    #[serde(default)]
    pub oracle: Option<MapOracle>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub seed: u64,
    /// Compact set `K` of the local statistics.
    pub compact: SetDescriptor,
    #[serde(default)]
    pub delta: f64,
    #[serde(default)]
    pub receding: Option<RecedingSpec>,
    pub resolution: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub fell_probes: Vec<FellProbe>,
    /// Vertex cloud of the closed range of the oracle; derived from the
    /// target family when absent.
    #[serde(default)]
    pub range: Option<Vec<Vec<f64>>>,
    /// Wall-clock timings break byte-identical reruns, so they are opt-in.
    #[serde(default)]
    pub record_wall_time: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("dim must be positive"));
        }
        if self.sample_sizes.is_empty() || self.sample_sizes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("sample_sizes must be non-empty and strictly increasing"));
        }
        if self.sample_sizes[0] == 0 {
            return Err(Error::invalid("sample sizes must be positive"));
        }
        if self.replications == 0 {
            return Err(Error::invalid("replications must be at least 1"));
        }
        if self.resolution == 0 {
            return Err(Error::invalid("resolution must be at least 1"));
        }
        if !(self.delta >= 0.0) {
            return Err(Error::invalid("delta must be nonnegative"));
        }
        self.source.validate(self.dim)?;
        self.target.validate(self.dim)?;
        self.compact.validate()?;
        if self.compact.dim()? != self.dim || !self.compact.is_bounded() {
            return Err(Error::invalid("compact must be a bounded set of dimension dim"));
        }
        if let Some(r) = &self.receding {
            r.set.validate()?;
            if r.set.dim()? != self.dim || !(r.r_max > 0.0) {
                return Err(Error::invalid("receding set must have dimension dim and r_max > 0"));
            }
        }
        for p in &self.fell_probes {
            p.probe.validate()?;
            if p.probe.dim()? != 2 * self.dim {
                return Err(Error::invalid("fell probes live in dimension 2 * dim"));
            }
        }
        if let Some(o) = &self.oracle {
            o.validate()?;
        }
        self.check_interior()
    }

    /// `K` must sit inside the interior of the source support, shrunk by
    /// one lattice cell.
    fn check_interior(&self) -> Result<()> {
        let Some(support) = self.source.support(self.dim) else {
            return Ok(());
        };
        let (lo, hi) = bounding_box(&self.compact)?;
        let width = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max);
        let cell = width / self.resolution as f64;
        let inside = |x: &[f64]| -> bool {
            match &support {
                SetDescriptor::Box { lo, hi } => {
                    x.iter().zip(lo.iter().zip(hi)).all(|(c, (l, h))| *c >= l + cell && *c <= h - cell)
                }
                SetDescriptor::Ball { center, radius } => dist(x, center) <= radius - cell,
                _ => true,
            }
        };
        let grid = self.compact.grid_points(self.resolution)?;
        if grid.iter().all(inside) {
            Ok(())
        } else {
            Err(Error::invalid(
                "compact must lie in the interior of the source support, one lattice cell from its boundary",
            ))
        }
    }

    /// The configured oracle, or the closed form implied by the families.
    pub fn resolve_oracle(&self) -> Result<MapOracle> {
        if let Some(o) = &self.oracle {
            return Ok(o.clone());
        }
        if self.source == self.target && self.source != Family::SphericalUniformGrid {
            return Ok(MapOracle::Identity);
        }
        let d = self.dim;
        match (&self.source, &self.target) {
            (Family::Gaussian { cov: a }, Family::Gaussian { cov: b }) if d > 1 => {
                let m = |c: &Vec<Vec<f64>>| DMatrix::from_fn(d, d, |i, j| c[i][j]);
                Ok(MapOracle::linear(&gaussian_brenier(&m(a), &m(b))?))
            }
            (Family::Gaussian { cov }, Family::SphericalUniformGrid)
                if cov.iter().enumerate().all(|(i, r)| {
                    r.iter().enumerate().all(|(j, v)| (v - if i == j { 1.0 } else { 0.0 }).abs() <= 1e-12)
                }) =>
            {
                Ok(MapOracle::CenterOutwardGaussian { dim: d })
            }
            (s, t) if d == 1 => {
                let mut knots_x = Vec::with_capacity(QUANTILE_KNOTS + 1);
                let mut knots_y = Vec::with_capacity(QUANTILE_KNOTS + 1);
                let bounded = |f: &Family| !matches!(f, Family::Gaussian { .. });
                let (first, last) = if bounded(s) && bounded(t) { (0, QUANTILE_KNOTS) } else { (1, QUANTILE_KNOTS - 1) };
                for k in first..=last {
                    let u = k as f64 / QUANTILE_KNOTS as f64;
                    knots_x.push(s.quantile(u)?);
                    knots_y.push(t.quantile(u)?);
                }
                let o = MapOracle::Sorted1d { knots_x, knots_y };
                o.validate()?;
                Ok(o)
            }
            _ => Err(Error::Unsupported(
                "no closed-form oracle for these families; set `oracle` in the config".into(),
            )),
        }
    }

    /// Model of the closed range of the oracle, from the config or the
    /// target family; `None` when the range is unbounded.
    pub fn resolve_range(&self) -> Result<Option<RangeModel>> {
        if let Some(rows) = &self.range {
            return Ok(Some(RangeModel::Polytope(PointCloud::from_rows(self.dim, rows)?)));
        }
        Ok(match &self.target {
            Family::Gaussian { .. } => None,
            Family::UniformBox { lo, hi } => {
                let mut c = PointCloud::empty(self.dim);
                for m in 0..(1usize << self.dim) {
                    let p: Vec<f64> =
                        (0..self.dim).map(|k| if (m >> k) & 1 == 1 { hi[k] } else { lo[k] }).collect();
                    c.push(&p);
                }
                Some(RangeModel::Polytope(c))
            }
            Family::UniformBall { center, radius } => {
                Some(RangeModel::Ball { center: center.clone(), radius: *radius })
            }
            Family::SphericalUniformGrid => Some(RangeModel::Ball { center: vec![0.0; self.dim], radius: 1.0 }),
        })
    }
}

/// Closed range of the oracle.
#[derive(Clone, Debug, PartialEq)]
pub enum RangeModel {
    Polytope(PointCloud),
    Ball { center: Vec<f64>, radius: f64 },
}

impl RangeModel {
    /// Vertex cloud used for strict-convexity tests. Balls are sampled at
    /// [`RANGE_SAMPLES`] sphere directions, which include the sampled
    /// horizon directions.
    pub fn vertex_cloud(&self) -> PointCloud {
        match self {
            RangeModel::Polytope(c) => c.clone(),
            RangeModel::Ball { center, radius } => {
                let mut c = PointCloud::empty(center.len());
                for u in sphere_directions(center.len(), RANGE_SAMPLES) {
                    let p: Vec<f64> = center.iter().zip(u.as_slice()).map(|(a, b)| a + radius * b).collect();
                    c.push(&p);
                }
                c
            }
        }
    }

    /// Whether every slope of `psi` lies within `tol` of the range.
    pub fn contains_slopes(&self, psi: &MaxAffinePotential, tol: f64) -> Result<bool> {
        match self {
            RangeModel::Polytope(c) => range_containment_check(psi, c, tol),
            RangeModel::Ball { center, radius } => {
                Ok(psi.slopes().iter().all(|s| dist(s, center) <= radius + tol))
            }
        }
    }
}

/// Metrics of one replication at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub rep: usize,
    pub sup_error_k: f64,
    pub hausdorff_k: f64,
    pub hausdorff_k_delta: f64,
    pub global_sup_e: Option<f64>,
    pub range_contained: Option<bool>,
    /// Shell miss check, centre hit check, then the configured probes.
    pub fell_checks: Vec<bool>,
    pub monotone_certified: bool,
    pub wall_time: Option<f64>,
}

/// Medians over replications at one sample size.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeSummary {
    pub n: usize,
    pub median_sup_error_k: f64,
    pub median_hausdorff_k: f64,
    pub median_hausdorff_k_delta: f64,
    pub median_global_sup_e: Option<f64>,
    pub all_certified: bool,
    pub all_range_contained: Option<bool>,
    pub fell_pass_fraction: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub per_n: Vec<SizeSummary>,
    /// Spearman correlation between `log n` and the median sup error;
    /// absent with fewer than two sizes or constant medians.
    pub spearman_sup_error: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub oracle: MapOracle,
    pub config: ExperimentConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub header: ReportHeader,
    pub rows: Vec<ReportRow>,
    pub aggregates: Aggregates,
}

impl ExperimentReport {
    /// One `(n, rep, metric, value)` record per metric; booleans map to 0/1
    /// and absent metrics are skipped.
    pub fn long_rows(&self) -> Vec<(usize, usize, String, f64)> {
        let flag = |b: bool| if b { 1.0 } else { 0.0 };
        let mut out = Vec::new();
        for r in &self.rows {
            let mut push = |name: &str, v: f64| out.push((r.n, r.rep, name.to_string(), v));
            push("sup_error_k", r.sup_error_k);
            push("hausdorff_k", r.hausdorff_k);
            push("hausdorff_k_delta", r.hausdorff_k_delta);
            if let Some(v) = r.global_sup_e {
                push("global_sup_e", v);
            }
            if let Some(b) = r.range_contained {
                push("range_contained", flag(b));
            }
            for (k, b) in r.fell_checks.iter().enumerate() {
                push(&format!("fell_check_{k}"), flag(*b));
            }
            push("monotone_certified", flag(r.monotone_certified));
            if let Some(t) = r.wall_time {
                push("wall_time", t);
            }
        }
        out
    }
}

/// Median with the mean of the two central values for even counts.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        f64::NAN
    } else if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with average ranks for ties; `None` when
/// either side is constant or shorter than two.
pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let mean = (a.len() as f64 + 1.0) / 2.0;
    let (mut num, mut da, mut db) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - mean) * (y - mean);
        da += (x - mean) * (x - mean);
        db += (y - mean) * (y - mean);
    }
    (da > 0.0 && db > 0.0).then(|| num / (da * db).sqrt())
}

/// Generator of replication `rep` at sample size `n`.
pub fn replication_rng(seed: u64, n: usize, rep: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((n as u64) << 32) | rep as u64);
    rng
}

/// Source and target samples of replication `(n, rep)`, drawn in that
/// order from [`replication_rng`].
pub fn replication_samples(cfg: &ExperimentConfig, n: usize, rep: usize) -> Result<(PointCloud, PointCloud)> {
    let mut rng = replication_rng(cfg.seed, n, rep);
    let xs = cfg.source.sample(cfg.dim, n, cfg.seed, &mut rng)?;
    let ys = cfg.target.sample(cfg.dim, n, cfg.seed, &mut rng)?;
    Ok((xs, ys))
}

/// Certified potential of the optimal coupling of the replication samples.
pub fn replication_potential(cfg: &ExperimentConfig, n: usize, rep: usize) -> Result<MaxAffinePotential> {
    let (xs, ys) = replication_samples(cfg, n, rep)?;
    let pi = solve_discrete_ot(&DiscreteMeasure::uniform(xs)?, &DiscreteMeasure::uniform(ys)?)?;
    let support = coupling_support(&pi, SUPPORT_FLOOR);
    rockafellar_potential_with_tol(&support, 0, cfg.tolerances.monotone).map_err(|e| match e {
        Error::NotCyclicallyMonotone(v) => Error::Internal(format!(
            "optimal support failed certification at n = {n}, rep = {rep}: {:?}",
            v.witness
        )),
        other => other,
    })
}

struct Prepared {
    oracle: MapOracle,
    range: Option<RangeModel>,
    range_cloud: Option<PointCloud>,
}

fn run_replication(cfg: &ExperimentConfig, prep: &Prepared, n: usize, rep: usize) -> Result<ReportRow> {
    let started = Instant::now();
    let psi = replication_potential(cfg, n, rep)?;
    let (t, tol, res) = (&prep.oracle, cfg.tolerances.eval, cfg.resolution);
    let sup_error_k = local_uniform_sup(&psi, t, &cfg.compact, res, tol)?;
    let hausdorff_k = image_hausdorff(&psi, t, &cfg.compact, 0.0, res, tol)?;
    let hausdorff_k_delta = image_hausdorff(&psi, t, &cfg.compact, cfg.delta, res, tol)?;
    let global_sup_e = match &cfg.receding {
        None => None,
        Some(spec) => {
            let Some(cloud) = &prep.range_cloud else {
                return Err(Error::invalid("a receding set needs a bounded range"));
            };
            Some(global_sup_on_receding_set(
                &psi,
                t,
                &spec.set,
                cloud,
                spec.r_max,
                res,
                cfg.tolerances.geometry,
            )?)
        }
    };
    let range_contained = match &prep.range {
        None => None,
        Some(model) => Some(model.contains_slopes(&psi, cfg.tolerances.geometry)?),
    };

    // default probes: the graph stays inside the 3 x error shell on a finer
    // lattice, and passes near T at the centre of K
    let mut fell_checks = Vec::with_capacity(2 + cfg.fell_probes.len());
    fell_checks.push(fell_shell_check(&psi, t, &cfg.compact, 3.0 * sup_error_k, 2 * res, tol)?);
    let grid = cfg.compact.grid_points(res)?;
    let centre = grid.centroid().expect("non-empty lattice");
    let (lo, hi) = bounding_box(&cfg.compact)?;
    let cell = lo.iter().zip(&hi).map(|(l, h)| h - l).fold(0.0, f64::max) / res as f64;
    let reach = 3.0 * sup_error_k + t.lipschitz().unwrap_or(1.0) * cell;
    let hit = SetDescriptor::product(SetDescriptor::ball(centre.clone(), cell), SetDescriptor::ball(t.eval(&centre)?, reach));
    fell_checks.push(fell_check(&psi, &hit, FellMode::Hit, 2, tol)?);
    for p in &cfg.fell_probes {
        fell_checks.push(fell_check(&psi, &p.probe, p.mode, res, tol)?);
    }

    Ok(ReportRow {
        n,
        rep,
        sup_error_k,
        hausdorff_k,
        hausdorff_k_delta,
        global_sup_e,
        range_contained,
        fell_checks,
        monotone_certified: true,
        wall_time: cfg.record_wall_time.then(|| started.elapsed().as_secs_f64()),
    })
}

fn aggregate(cfg: &ExperimentConfig, rows: &[ReportRow]) -> Aggregates {
    let per_n: Vec<SizeSummary> = cfg
        .sample_sizes
        .iter()
        .map(|&n| {
            let group: Vec<&ReportRow> = rows.iter().filter(|r| r.n == n).collect();
            let col = |f: fn(&ReportRow) -> f64| median(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
            let global: Vec<f64> = group.iter().filter_map(|r| r.global_sup_e).collect();
            let contained: Vec<bool> = group.iter().filter_map(|r| r.range_contained).collect();
            let checks: Vec<bool> = group.iter().flat_map(|r| r.fell_checks.iter().copied()).collect();
            SizeSummary {
                n,
                median_sup_error_k: col(|r| r.sup_error_k),
                median_hausdorff_k: col(|r| r.hausdorff_k),
                median_hausdorff_k_delta: col(|r| r.hausdorff_k_delta),
                median_global_sup_e: (!global.is_empty()).then(|| median(&global)),
                all_certified: group.iter().all(|r| r.monotone_certified),
                all_range_contained: (!contained.is_empty()).then(|| contained.iter().all(|&b| b)),
                fell_pass_fraction: if checks.is_empty() {
                    1.0
                } else {
                    checks.iter().filter(|&&b| b).count() as f64 / checks.len() as f64
                },
            }
        })
        .collect();
    let logs: Vec<f64> = per_n.iter().map(|s| (s.n as f64).ln()).collect();
    let meds: Vec<f64> = per_n.iter().map(|s| s.median_sup_error_k).collect();
    Aggregates { spearman_sup_error: spearman(&logs, &meds), per_n }
}

/// Worker count from `MTL_THREADS`: unset or 0 means one per core.
pub fn threads_from_env() -> usize {
    std::env::var("MTL_THREADS").ok().and_then(|v| v.trim().parse().ok()).unwrap_or(0)
}

/// Runs every `(n, rep)` replication with [`threads_from_env`] workers.
pub fn run_consistency_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    run_consistency_experiment_with_threads(cfg, threads_from_env())
}

/// Runs the study on `threads` workers (0 = one per core). Rows are
/// ordered by `(n, rep)`, so the report does not depend on scheduling.
pub fn run_consistency_experiment_with_threads(cfg: &ExperimentConfig, threads: usize) -> Result<ExperimentReport> {
    cfg.validate()?;
    let oracle = cfg.resolve_oracle()?;
    if let Some(d) = oracle.dim() {
        if d != cfg.dim {
            return Err(Error::DimensionMismatch { expected: cfg.dim, found: d });
        }
    }
    let range = cfg.resolve_range()?;
    let range_cloud = range.as_ref().map(RangeModel::vertex_cloud);
    let prep = Prepared { oracle, range, range_cloud };
    let tasks: Vec<(usize, usize)> = cfg
        .sample_sizes
        .iter()
        .flat_map(|&n| (0..cfg.replications).map(move |rep| (n, rep)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Internal(e.to_string()))?;
    let rows = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(n, rep)| run_replication(cfg, &prep, n, rep))
            .collect::<Result<Vec<_>>>()
    })?;
    let aggregates = aggregate(cfg, &rows);
    Ok(ExperimentReport {
        header: ReportHeader {
            tool: "mtl".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            rng: RNG_NAME.into(),
            seed: cfg.seed,
            oracle: prep.oracle,
            config: cfg.clone(),
        },
        rows,
        aggregates,
    })
}

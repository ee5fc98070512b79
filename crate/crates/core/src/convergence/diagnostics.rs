use serde::{Deserialize, Serialize};

use super::MapOracle;
use crate::error::{check_dim, Error, Result};
use crate::geometry::{
    convex_hull_vertices, dist, dot, hausdorff_distance, is_strictly_convex_in_direction, norm,
    sphere_directions, Direction, Horizon, PointCloud, SetDescriptor, POINT_TOL,
};
use crate::monotone::{eval_subdifferential, MaxAffinePotential};

/// Directions sampled when a horizon is the whole sphere.
pub const HORIZON_SAMPLES: usize = 64;

/// Radii of the ray probes, as multiples of the truncation radius.
pub const RAY_PROBE_FACTORS: [f64; 3] = [1.0, 2.0, 4.0];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FellMode {
    /// The graph of the estimate must avoid the probe.
    Miss,
    /// The graph of the estimate must meet the probe.
    Hit,
}

fn bounded_grid(set: &SetDescriptor, resolution: usize, what: &str) -> Result<PointCloud> {
    if !set.is_bounded() {
        return Err(Error::invalid(format!("{what} must be bounded")));
    }
    set.grid_points(resolution)
}

/// Hit or miss test of the graph of `∂psi` against a product probe
/// `X x Y`, sampled on the lattice of `X`.
pub fn fell_check(
    psi: &MaxAffinePotential,
    probe: &SetDescriptor,
    mode: FellMode,
    resolution: usize,
    tol: f64,
) -> Result<bool> {
    let SetDescriptor::Product { left, right } = probe else {
        return Err(Error::invalid("fell probes must be products X x Y"));
    };
    check_dim(psi.dim(), left.dim()?)?;
    check_dim(psi.dim(), right.dim()?)?;
    if mode == FellMode::Miss && !probe.is_bounded() {
        return Err(Error::invalid("miss probes must be bounded"));
    }
    let xs = bounded_grid(left, resolution, "the probe's x-part")?;
    for x in xs.iter() {
        let verts = eval_subdifferential(psi, x, tol)?.vertices;
        for y in verts.iter() {
            if right.distance(y)? <= tol {
                return Ok(mode == FellMode::Hit);
            }
        }
    }
    Ok(mode == FellMode::Miss)
}

/// Miss test against the shell `{(x, y) : x ∈ K, |y - T(x)| >= radius}`:
/// true iff every subgradient on the lattice of `K` lies within
/// `radius + tol` of the oracle value.
pub fn fell_shell_check(
    psi: &MaxAffinePotential,
    t: &MapOracle,
    k: &SetDescriptor,
    radius: f64,
    resolution: usize,
    tol: f64,
) -> Result<bool> {
    Ok(max_error_on(psi, t, &bounded_grid(k, resolution, "K")?, tol)? <= radius + tol)
}

fn max_error_on(psi: &MaxAffinePotential, t: &MapOracle, xs: &PointCloud, tol: f64) -> Result<f64> {
    let mut worst = 0.0_f64;
    for x in xs.iter() {
        let tx = t.eval(x)?;
        for y in eval_subdifferential(psi, x, tol)?.vertices.iter() {
            worst = worst.max(dist(y, &tx));
        }
    }
    Ok(worst)
}

/// `max_{x ∈ lattice(K)} max_{y ∈ ∂psi(x)} |y - T(x)|`.
pub fn local_uniform_sup(
    psi: &MaxAffinePotential,
    t: &MapOracle,
    k: &SetDescriptor,
    resolution: usize,
    tol: f64,
) -> Result<f64> {
    check_dim(psi.dim(), k.dim()?)?;
    max_error_on(psi, t, &bounded_grid(k, resolution, "K")?, tol)
}

/// Axis-aligned bounding box of a bounded set.
pub fn bounding_box(set: &SetDescriptor) -> Result<(Vec<f64>, Vec<f64>)> {
    match set {
        SetDescriptor::Box { lo, hi } => Ok((lo.clone(), hi.clone())),
        SetDescriptor::Ball { center, radius } => Ok((
            center.iter().map(|c| c - radius).collect(),
            center.iter().map(|c| c + radius).collect(),
        )),
        SetDescriptor::Finite { .. } | SetDescriptor::GridOf { .. } => {
            let pts = bounded_grid(set, 1, "set")?;
            let dim = pts.dim();
            let mut lo = vec![f64::INFINITY; dim];
            let mut hi = vec![f64::NEG_INFINITY; dim];
            for p in pts.iter() {
                for k in 0..dim {
                    lo[k] = lo[k].min(p[k]);
                    hi[k] = hi[k].max(p[k]);
                }
            }
            Ok((lo, hi))
        }
        SetDescriptor::Union { parts } => {
            let mut out: Option<(Vec<f64>, Vec<f64>)> = None;
            for part in parts {
                let (l, h) = bounding_box(part)?;
                out = Some(match out {
                    None => (l, h),
                    Some((lo, hi)) => (
                        lo.iter().zip(&l).map(|(a, b)| a.min(*b)).collect(),
                        hi.iter().zip(&h).map(|(a, b)| a.max(*b)).collect(),
                    ),
                });
            }
            out.ok_or(Error::Empty("union"))
        }
        _ => Err(Error::invalid("set must be bounded")),
    }
}

/// Lattice of `K ⊕ δ·ball`: the lattice of its bounding box (that of `K`
/// grown by `δ`) at the same resolution, filtered by distance to `K`. For
/// `δ = 0` this is exactly the lattice of `K`.
pub fn inflated_grid(k: &SetDescriptor, delta: f64, resolution: usize) -> Result<PointCloud> {
    if !(delta >= 0.0) {
        return Err(Error::invalid("inflation must be nonnegative"));
    }
    let base = bounded_grid(k, resolution, "K")?;
    if delta == 0.0 {
        return Ok(base);
    }
    let (lo, hi) = bounding_box(k)?;
    let lo: Vec<f64> = lo.iter().map(|l| l - delta).collect();
    let hi: Vec<f64> = hi.iter().map(|h| h + delta).collect();
    let cube = SetDescriptor::cube(lo, hi).grid_points(resolution)?;
    let mut out = PointCloud::empty(cube.dim());
    let slack = delta * (1.0 + 1e-12) + POINT_TOL;
    for p in cube.iter() {
        if k.distance(p)? <= slack {
            out.push(p);
        }
    }
    Ok(out)
}

/// Hausdorff distance between `∂psi(lattice(K ⊕ δ·ball))` and
/// `T(lattice(K))`.
pub fn image_hausdorff(
    psi: &MaxAffinePotential,
    t: &MapOracle,
    k: &SetDescriptor,
    delta: f64,
    resolution: usize,
    tol: f64,
) -> Result<f64> {
    check_dim(psi.dim(), k.dim()?)?;
    let mut estimate = PointCloud::empty(psi.dim());
    for x in inflated_grid(k, delta, resolution)?.iter() {
        estimate.extend(&eval_subdifferential(psi, x, tol)?.vertices);
    }
    let mut truth = PointCloud::empty(psi.dim());
    for x in bounded_grid(k, resolution, "K")?.iter() {
        truth.push(&t.eval(x)?);
    }
    hausdorff_distance(&estimate, &truth)
}

fn push_ray_probes(out: &mut PointCloud, anchor: &[f64], u: &[f64], r_max: f64) {
    for f in RAY_PROBE_FACTORS {
        let p: Vec<f64> = anchor.iter().zip(u).map(|(a, c)| a + f * r_max * c).collect();
        out.push(&p);
    }
}

fn ray_probes(e: &SetDescriptor, r_max: f64, out: &mut PointCloud) -> Result<()> {
    match e {
        SetDescriptor::Space { dim } => {
            let origin = vec![0.0; *dim];
            for u in sphere_directions(*dim, HORIZON_SAMPLES) {
                push_ray_probes(out, &origin, u.as_slice(), r_max);
            }
        }
        SetDescriptor::Ray { origin, direction } => push_ray_probes(out, origin, direction, r_max),
        SetDescriptor::Cone { apex, directions } => {
            for u in directions {
                push_ray_probes(out, apex, u, r_max);
            }
        }
        SetDescriptor::Union { parts } => {
            for part in parts {
                ray_probes(part, r_max, out)?;
            }
        }
        _ => {}
    }
    Ok(())
}

/// Uniform error over a possibly unbounded set `E`. Every horizon direction
/// of `E` must be a direction of strict convexity of `conv(range)`;
/// otherwise the offending direction is reported. The error is taken over
/// the lattice of `E ∩ Ball(0, r_max)` and over ray probes at
/// `r_max, 2 r_max, 4 r_max` along each horizon direction.
#[allow(clippy::too_many_arguments)]
pub fn global_sup_on_receding_set(
    psi: &MaxAffinePotential,
    t: &MapOracle,
    e: &SetDescriptor,
    range: &PointCloud,
    r_max: f64,
    resolution: usize,
    tol: f64,
) -> Result<f64> {
    check_dim(psi.dim(), e.dim()?)?;
    let horizon = e.horizon()?;
    if horizon.is_empty() {
        return local_uniform_sup(psi, t, e, resolution, tol);
    }
    if !(r_max > 0.0) {
        return Err(Error::invalid("truncation radius must be positive"));
    }
    check_dim(psi.dim(), range.dim())?;
    let directions = match &horizon {
        Horizon::FullSphere { dim } => sphere_directions(*dim, HORIZON_SAMPLES),
        h => h.directions(HORIZON_SAMPLES),
    };
    for u in &directions {
        if !is_strictly_convex_in_direction(range, u, tol)? {
            return Err(Error::HypothesisViolated { direction: u.as_slice().to_vec() });
        }
    }
    let mut xs = e.truncated_points(r_max, resolution)?;
    ray_probes(e, r_max, &mut xs)?;
    max_error_on(psi, t, &xs, tol)
}

/// Whether every slope of `psi` lies within `tol` of `conv(c)`. Exact in
/// dimensions 1 to 3 (facet inequalities of the hull); above that the
/// support function is compared along sampled, vertex and slope directions.
pub fn range_containment_check(psi: &MaxAffinePotential, c: &PointCloud, tol: f64) -> Result<bool> {
    check_dim(psi.dim(), c.dim())?;
    let hull = HullTest::new(c)?;
    Ok(psi.slopes().iter().all(|s| hull.contains(s, tol)))
}

/// Membership test for `conv(c)` built once per cloud.
pub struct HullTest {
    vertices: PointCloud,
    /// Outward unit normals `n` with offsets `h`: the hull lies in
    /// `<n, x> <= h` for each pair.
    halfspaces: Vec<(Vec<f64>, f64)>,
    /// Lower-dimensional hulls are tested by distance instead.
    degenerate: bool,
}

impl HullTest {
    pub fn new(c: &PointCloud) -> Result<Self> {
        let vertices = convex_hull_vertices(c)?.vertices;
        let scale = 1.0 + vertices.max_abs_coord();
        let eps = 1e-12 * scale;
        let dim = vertices.dim();
        let mut halfspaces = Vec::new();
        let mut degenerate = false;
        match dim {
            1 => {
                let (lo, hi) = vertices.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), p| {
                    (l.min(p[0]), h.max(p[0]))
                });
                halfspaces.push((vec![1.0], hi));
                halfspaces.push((vec![-1.0], -lo));
            }
            2 => {
                // vertices come counter-clockwise; a polygon needs three
                let n = vertices.len();
                degenerate = n < 3;
                if !degenerate {
                    for k in 0..n {
                        let (a, b) = (vertices.point(k), vertices.point((k + 1) % n));
                        let e = [b[0] - a[0], b[1] - a[1]];
                        let len = norm(&e);
                        let normal = vec![e[1] / len, -e[0] / len];
                        let h = dot(&normal, a);
                        halfspaces.push((normal, h));
                    }
                }
            }
            3 => {
                halfspaces = facets_3d(&vertices, eps);
                degenerate = halfspaces.is_empty();
            }
            _ => {
                let centroid = vertices.centroid().expect("non-empty");
                let mut dirs: Vec<Vec<f64>> =
                    sphere_directions(dim, 512).into_iter().map(Direction::into_vec).collect();
                for p in vertices.iter() {
                    let rel: Vec<f64> = p.iter().zip(&centroid).map(|(a, b)| a - b).collect();
                    if let Ok(u) = Direction::normalized(&rel) {
                        dirs.push(u.into_vec());
                    }
                }
                for u in dirs {
                    let h = vertices.iter().map(|p| dot(&u, p)).fold(f64::NEG_INFINITY, f64::max);
                    halfspaces.push((u, h));
                }
            }
        }
        Ok(HullTest { vertices, halfspaces, degenerate })
    }

    pub fn contains(&self, s: &[f64], tol: f64) -> bool {
        if self.degenerate {
            return distance_to_low_hull(&self.vertices, s) <= tol;
        }
        let mut inside = self.halfspaces.iter().all(|(n, h)| dot(n, s) <= h + tol);
        if inside && self.vertices.dim() > 3 {
            // sampled directions only certify membership up to the sampling;
            // also compare along the slope's own direction
            let centroid = self.vertices.centroid().expect("non-empty");
            let rel: Vec<f64> = s.iter().zip(&centroid).map(|(a, b)| a - b).collect();
            if let Ok(u) = Direction::normalized(&rel) {
                let h = self.vertices.iter().map(|p| dot(u.as_slice(), p)).fold(f64::NEG_INFINITY, f64::max);
                inside = dot(u.as_slice(), s) <= h + tol;
            }
        }
        inside
    }
}

/// Supporting facet planes of a full-dimensional cloud in 3-space; empty
/// when the cloud is flat.
fn facets_3d(v: &PointCloud, eps: f64) -> Vec<(Vec<f64>, f64)> {
    let n = v.len();
    let mut out: Vec<(Vec<f64>, f64)> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let (a, b, c) = (v.point(i), v.point(j), v.point(k));
                let e1 = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
                let e2 = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
                let cr = [
                    e1[1] * e2[2] - e1[2] * e2[1],
                    e1[2] * e2[0] - e1[0] * e2[2],
                    e1[0] * e2[1] - e1[1] * e2[0],
                ];
                let len = norm(&cr);
                if len <= eps * norm(&e1).max(norm(&e2)) {
                    continue;
                }
                let normal: Vec<f64> = cr.iter().map(|x| x / len).collect();
                let h = dot(&normal, a);
                let offs: Vec<f64> = v.iter().map(|p| dot(&normal, p) - h).collect();
                let above = offs.iter().any(|&o| o > eps);
                let below = offs.iter().any(|&o| o < -eps);
                match (above, below) {
                    (true, true) => {}
                    (false, false) => return Vec::new(),
                    (false, true) => out.push((normal, h)),
                    (true, false) => out.push((normal.iter().map(|x| -x).collect(), -h)),
                }
            }
        }
    }
    out
}

/// Distance from `s` to the hull of a flat cloud, through the planar hull
/// of the cloud in its own affine span (at most two dimensions).
fn distance_to_low_hull(v: &PointCloud, s: &[f64]) -> f64 {
    if v.len() == 1 {
        return dist(v.point(0), s);
    }
    if v.len() == 2 {
        return segment_distance(v.point(0), v.point(1), s);
    }
    // flat polygon in 3-space: orthonormal frame of the plane
    let o = v.point(0);
    let rel = |p: &[f64]| -> Vec<f64> { p.iter().zip(o).map(|(a, b)| a - b).collect() };
    let far = (1..v.len()).max_by(|&a, &b| norm(&rel(v.point(a))).total_cmp(&norm(&rel(v.point(b))))).unwrap();
    let u: Vec<f64> = {
        let r = rel(v.point(far));
        let l = norm(&r);
        r.iter().map(|x| x / l).collect()
    };
    let w = (1..v.len())
        .map(|i| {
            let r = rel(v.point(i));
            let t = dot(&r, &u);
            r.iter().zip(&u).map(|(a, b)| a - t * b).collect::<Vec<f64>>()
        })
        .max_by(|a, b| norm(a).total_cmp(&norm(b)))
        .unwrap();
    let wl = norm(&w);
    if wl == 0.0 {
        // collinear: the hull is the extreme segment
        let proj: Vec<f64> = (0..v.len()).map(|i| dot(&rel(v.point(i)), &u)).collect();
        let lo = (0..v.len()).min_by(|&a, &b| proj[a].total_cmp(&proj[b])).unwrap();
        let hi = (0..v.len()).max_by(|&a, &b| proj[a].total_cmp(&proj[b])).unwrap();
        return segment_distance(v.point(lo), v.point(hi), s);
    }
    let w: Vec<f64> = w.iter().map(|x| x / wl).collect();
    let to2 = |p: &[f64]| -> Vec<f64> {
        let r = rel(p);
        vec![dot(&r, &u), dot(&r, &w)]
    };
    let rs = rel(s);
    let (su, sw) = (dot(&rs, &u), dot(&rs, &w));
    let off_plane = (dot(&rs, &rs) - su * su - sw * sw).max(0.0).sqrt();
    let mut flat = PointCloud::empty(2);
    for p in v.iter() {
        flat.push(&to2(p));
    }
    let poly = convex_hull_vertices(&flat).expect("non-empty").vertices;
    let q = [su, sw];
    let n = poly.len();
    let inside = n >= 3
        && (0..n).all(|k| {
            let (a, b) = (poly.point(k), poly.point((k + 1) % n));
            (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0]) >= 0.0
        });
    let in_plane = if inside {
        0.0
    } else {
        (0..n)
            .map(|k| segment_distance(poly.point(k), poly.point((k + 1) % n), &q))
            .fold(f64::INFINITY, f64::min)
    };
    (in_plane * in_plane + off_plane * off_plane).sqrt()
}

fn segment_distance(a: &[f64], b: &[f64], s: &[f64]) -> f64 {
    let ab: Vec<f64> = b.iter().zip(a).map(|(x, y)| x - y).collect();
    let as_: Vec<f64> = s.iter().zip(a).map(|(x, y)| x - y).collect();
    let len2 = dot(&ab, &ab);
    let t = if len2 > 0.0 { (dot(&as_, &ab) / len2).clamp(0.0, 1.0) } else { 0.0 };
    let p: Vec<f64> = a.iter().zip(&ab).map(|(x, d)| x + t * d).collect();
    dist(&p, s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monotone::{rockafellar_potential, PairSet};

    fn identity_potential(points: &[[f64; 2]]) -> MaxAffinePotential {
        let c = PointCloud::from_rows(2, points).unwrap();
        rockafellar_potential(&PairSet::identity(&c), 0).unwrap()
    }

    fn lattice_identity(k: &SetDescriptor, res: usize) -> MaxAffinePotential {
        let c = k.grid_points(res).unwrap();
        rockafellar_potential(&PairSet::identity(&c), 0).unwrap()
    }

    fn line_identity() -> MaxAffinePotential {
        let c = PointCloud::from_flat(1, vec![-1.0, 0.0, 1.0]).unwrap();
        rockafellar_potential(&PairSet::identity(&c), 0).unwrap()
    }

    #[test]
    fn fell_examples() {
        let psi = line_identity();
        let miss = SetDescriptor::product(
            SetDescriptor::Finite { points: vec![vec![0.0]] },
            SetDescriptor::ball(vec![1.0], 0.1),
        );
        assert!(fell_check(&psi, &miss, FellMode::Miss, 4, 1e-9).unwrap());
        assert!(!fell_check(&psi, &miss, FellMode::Hit, 4, 1e-9).unwrap());
        let hit = SetDescriptor::product(SetDescriptor::ball(vec![0.0], 0.1), SetDescriptor::ball(vec![0.0], 0.2));
        assert!(fell_check(&psi, &hit, FellMode::Hit, 4, 1e-9).unwrap());
        assert!(fell_check(&psi, &SetDescriptor::ball(vec![0.0], 1.0), FellMode::Hit, 4, 1e-9).is_err());
        let open = SetDescriptor::product(SetDescriptor::ball(vec![0.0], 0.1), SetDescriptor::Space { dim: 1 });
        assert!(fell_check(&psi, &open, FellMode::Miss, 4, 1e-9).is_err());
        assert!(fell_check(&psi, &open, FellMode::Hit, 4, 1e-9).unwrap());
    }

    #[test]
    fn identity_lattice_error_is_one_cell() {
        // at a data site the subdifferential holds T(x) and the target of
        // the longest chain's last step, an axis or diagonal neighbour
        let k = SetDescriptor::cube(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let psi = lattice_identity(&k, 4);
        for x in k.grid_points(4).unwrap().iter() {
            assert!(eval_subdifferential(&psi, x, 1e-9).unwrap().vertices.contains_point(x, 1e-9));
        }
        let err = local_uniform_sup(&psi, &MapOracle::Identity, &k, 4, 1e-9).unwrap();
        assert!(err <= 0.5 * 2f64.sqrt() + 1e-9, "{err}");
        assert!(local_uniform_sup(&psi, &MapOracle::Identity, &SetDescriptor::Space { dim: 2 }, 4, 1e-9).is_err());
    }

    #[test]
    fn linear_error_bounded_by_cell_modulus() {
        // pairs (x, A x) on a fine lattice, scored on a coarser nested lattice
        let a = MapOracle::Linear { matrix: vec![vec![2.0, 0.0], vec![0.0, 1.0]] };
        let big = SetDescriptor::cube(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let xs = big.grid_points(8).unwrap();
        let mut ys = PointCloud::empty(2);
        for x in xs.iter() {
            ys.push(&a.eval(x).unwrap());
        }
        let psi = rockafellar_potential(&PairSet::new(xs, ys).unwrap(), 0).unwrap();
        let k = SetDescriptor::cube(vec![-0.5, -0.5], vec![0.5, 0.5]);
        let modulus = a.lipschitz().unwrap() * 0.25 * 2f64.sqrt();
        for x in k.grid_points(4).unwrap().iter() {
            let tx = a.eval(x).unwrap();
            assert!(eval_subdifferential(&psi, x, 1e-9).unwrap().vertices.contains_point(&tx, 1e-9));
        }
        assert!(local_uniform_sup(&psi, &a, &k, 4, 1e-9).unwrap() <= modulus + 1e-9);
        assert!(local_uniform_sup(&psi, &a, &k, 5, 1e-9).unwrap() <= modulus + 1e-9);
        let hd = image_hausdorff(&psi, &a, &k, 0.0, 4, 1e-9).unwrap();
        assert!(hd <= modulus + 1e-9);
    }

    #[test]
    fn inflated_grid_covers_the_grown_set() {
        let k = SetDescriptor::cube(vec![0.0, 0.0], vec![1.0, 1.0]);
        let grown = inflated_grid(&k, 0.5, 4).unwrap();
        // the 5 x 5 lattice of [-0.5, 1.5]^2 minus the four far corners
        assert_eq!(grown.len(), 21);
        assert!(grown.iter().all(|p| k.distance(p).unwrap() <= 0.5 + 1e-9));
        assert!(grown.contains_point(&[-0.5, 0.5], 0.0));
        assert!(!grown.contains_point(&[-0.5, -0.5], 1e-9));
        assert_eq!(inflated_grid(&k, 0.0, 4).unwrap(), k.grid_points(4).unwrap());
        assert!(inflated_grid(&k, -0.1, 4).is_err());
    }

    #[test]
    fn identity_images_grow_with_inflation() {
        let k = SetDescriptor::cube(vec![-1.0, -1.0], vec![1.0, 1.0]);
        let psi = lattice_identity(&SetDescriptor::cube(vec![-2.0, -2.0], vec![2.0, 2.0]), 16);
        for delta in [0.0, 0.25, 0.5] {
            let hd = image_hausdorff(&psi, &MapOracle::Identity, &k, delta, 8, 1e-9).unwrap();
            // the inflated lattice is coarser by (2 + 2 delta) / 8 per cell
            let cell = (2.0 + 2.0 * delta) / 8.0;
            assert!(hd <= delta + cell * 2f64.sqrt() + 1e-9, "delta {delta}: {hd}");
        }
    }

    #[test]
    fn single_point_image() {
        let c = PointCloud::from_rows(2, &[[0.5, 0.5]]).unwrap();
        let y = PointCloud::from_rows(2, &[[3.0, 1.0]]).unwrap();
        let psi = rockafellar_potential(&PairSet::new(c, y).unwrap(), 0).unwrap();
        let t = MapOracle::Tabulated { points: vec![vec![0.5, 0.5]], values: vec![vec![3.0, 1.0]] };
        let k = SetDescriptor::Finite { points: vec![vec![0.5, 0.5]] };
        assert_eq!(image_hausdorff(&psi, &t, &k, 0.0, 1, 1e-9).unwrap(), 0.0);
    }

    #[test]
    fn receding_hypothesis() {
        let psi = identity_potential(&[[0.0, 0.0], [1.0, 0.0]]);
        let square = PointCloud::from_rows(2, &[[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]]).unwrap();
        let ray = SetDescriptor::ray(vec![0.0, 0.0], &[1.0, 0.0]).unwrap();
        let err = global_sup_on_receding_set(&psi, &MapOracle::Identity, &ray, &square, 5.0, 4, 1e-9);
        match err {
            Err(Error::HypothesisViolated { direction }) => assert_eq!(direction, vec![1.0, 0.0]),
            other => panic!("expected a violation, got {other:?}"),
        }
        // bounded E reduces to the local statistic
        let k = SetDescriptor::cube(vec![0.0, 0.0], vec![1.0, 1.0]);
        let a = global_sup_on_receding_set(&psi, &MapOracle::Identity, &k, &square, 5.0, 4, 1e-9).unwrap();
        let b = local_uniform_sup(&psi, &MapOracle::Identity, &k, 4, 1e-9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn disc_range_allows_the_whole_plane() {
        let disc = PointCloud::from_rows(
            2,
            &sphere_directions(2, 256).iter().map(|u| u.as_slice().to_vec()).collect::<Vec<_>>(),
        )
        .unwrap();
        let xs = SetDescriptor::ball(vec![0.0, 0.0], 2.0).grid_points(8).unwrap();
        let mut ys = PointCloud::empty(2);
        let t = MapOracle::CenterOutwardGaussian { dim: 2 };
        for x in xs.iter() {
            ys.push(&t.eval(x).unwrap());
        }
        let psi = rockafellar_potential(&PairSet::new(xs, ys).unwrap(), 0).unwrap();
        let v = global_sup_on_receding_set(&psi, &t, &SetDescriptor::Space { dim: 2 }, &disc, 10.0, 8, 1e-9).unwrap();
        assert!(v.is_finite() && v < 1.0);
        assert!(range_containment_check(&psi, &disc, 1e-9).unwrap());
    }

    #[test]
    fn containment_examples() {
        let c = PointCloud::from_rows(2, &[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]).unwrap();
        let with = |slopes: &[[f64; 2]]| {
            let s = PointCloud::from_rows(2, slopes).unwrap();
            MaxAffinePotential::new(s.clone(), vec![0.0; s.len()], 0).unwrap()
        };
        assert!(range_containment_check(&with(&[[0.0, 0.0], [2.0, 0.0], [0.0, 2.0]]), &c, 1e-9).unwrap());
        assert!(range_containment_check(&with(&[[2.0 / 3.0, 2.0 / 3.0]]), &c, 1e-9).unwrap());
        assert!(!range_containment_check(&with(&[[2.2, 0.0]]), &c, 1e-9).unwrap());
        assert!(!range_containment_check(&with(&[[1.1, 1.1]]), &c, 1e-9).unwrap());
    }

    #[test]
    fn containment_in_three_dimensions() {
        let mut cube = PointCloud::empty(3);
        for m in 0..8 {
            cube.push(&[(m & 1) as f64, ((m >> 1) & 1) as f64, ((m >> 2) & 1) as f64]);
        }
        let t = HullTest::new(&cube).unwrap();
        assert!(t.contains(&[0.5, 0.5, 0.5], 0.0));
        assert!(t.contains(&[1.0, 1.0, 1.0], 1e-12));
        assert!(!t.contains(&[1.1, 0.5, 0.5], 1e-9));
        let flat = PointCloud::from_rows(3, &[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let t = HullTest::new(&flat).unwrap();
        assert!(t.contains(&[0.25, 0.25, 0.0], 1e-12));
        assert!(!t.contains(&[0.25, 0.25, 0.1], 1e-9));
        assert!((distance_to_low_hull(&flat, &[1.0, 1.0, 0.0]) - 0.5f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn containment_on_the_line_and_in_four_dimensions() {
        let seg = PointCloud::from_flat(1, vec![0.0, 1.0, 0.5]).unwrap();
        let t = HullTest::new(&seg).unwrap();
        assert!(t.contains(&[0.3], 0.0));
        assert!(!t.contains(&[1.1], 1e-9));
        let mut cross = PointCloud::empty(4);
        for k in 0..4 {
            let mut e = vec![0.0; 4];
            e[k] = 1.0;
            cross.push(&e);
            e[k] = -1.0;
            cross.push(&e);
        }
        let t = HullTest::new(&cross).unwrap();
        assert!(t.contains(&[0.2, 0.2, 0.2, 0.2], 1e-12));
        assert!(!t.contains(&[0.5, 0.5, 0.5, 0.5], 1e-9));
    }
}

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::{dist, dot, norm, Direction, PointCloud, POINT_TOL};
use crate::error::{check_dim, Error, Result};

/// Symbolic description of a subset of d-space, used for compact probes,
/// receding sets and range constraints.
///
/// `Cone` is the union of the rays from `apex` along each listed direction.
/// `Space` is the whole of d-space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum SetDescriptor {
    Ball { center: Vec<f64>, radius: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ray { origin: Vec<f64>, direction: Vec<f64> },
    Cone { apex: Vec<f64>, directions: Vec<Vec<f64>> },
    Finite { points: Vec<Vec<f64>> },
    Product { left: std::boxed::Box<SetDescriptor>, right: std::boxed::Box<SetDescriptor> },
    Union { parts: Vec<SetDescriptor> },
    GridOf { inner: std::boxed::Box<SetDescriptor>, resolution: usize },
    Space { dim: usize },
}

/// Directions in which a set escapes to infinity.
#[derive(Clone, Debug, PartialEq)]
pub enum Horizon {
    Empty,
    FullSphere { dim: usize },
    Directions(Vec<Direction>),
}

impl Horizon {
    pub fn is_empty(&self) -> bool {
        matches!(self, Horizon::Empty) || matches!(self, Horizon::Directions(d) if d.is_empty())
    }

    /// Finite list of directions; the full sphere is replaced by
    /// [`sphere_directions`] with `samples` points.
    pub fn directions(&self, samples: usize) -> Vec<Direction> {
        match self {
            Horizon::Empty => Vec::new(),
            Horizon::FullSphere { dim } => sphere_directions(*dim, samples),
            Horizon::Directions(d) => d.clone(),
        }
    }

    fn merge(self, other: Horizon) -> Horizon {
        match (self, other) {
            (Horizon::FullSphere { dim }, _) | (_, Horizon::FullSphere { dim }) => {
                Horizon::FullSphere { dim }
            }
            (Horizon::Empty, h) | (h, Horizon::Empty) => h,
            (Horizon::Directions(mut a), Horizon::Directions(b)) => {
                for u in b {
                    if !a.iter().any(|v| dist(v.as_slice(), u.as_slice()) <= POINT_TOL) {
                        a.push(u);
                    }
                }
                Horizon::Directions(a)
            }
        }
    }
}

/// Deterministic spread of `count` unit vectors: equispaced angles in the
/// plane, the two signs on the line, normalized Gaussian draws from a fixed
/// stream otherwise.
pub fn sphere_directions(dim: usize, count: usize) -> Vec<Direction> {
    match dim {
        0 => Vec::new(),
        1 => vec![Direction(vec![1.0]), Direction(vec![-1.0])],
        2 => (0..count)
            .map(|k| {
                let t = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                Direction(vec![t.cos(), t.sin()])
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1e5);
            let mut out = Vec::with_capacity(count);
            while out.len() < count {
                let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
                if let Ok(u) = Direction::normalized(&g) {
                    out.push(u);
                }
            }
            out
        }
    }
}

fn lattice_axis(lo: f64, hi: f64, resolution: usize) -> Vec<f64> {
    if hi <= lo {
        return vec![lo];
    }
    (0..=resolution)
        .map(|k| lo + (hi - lo) * k as f64 / resolution as f64)
        .collect()
}

/// All points of the product lattice `axes[0] x axes[1] x ...`, first axis
/// varying slowest.
fn product_lattice(axes: &[Vec<f64>]) -> PointCloud {
    let dim = axes.len();
    let mut out = PointCloud::empty(dim);
    let mut idx = vec![0usize; dim];
    let mut p = vec![0.0; dim];
    loop {
        for k in 0..dim {
            p[k] = axes[k][idx[k]];
        }
        out.push(&p);
        let mut k = dim;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
}

impl SetDescriptor {
    pub fn ball(center: Vec<f64>, radius: f64) -> Self {
        SetDescriptor::Ball { center, radius }
    }

    pub fn cube(lo: Vec<f64>, hi: Vec<f64>) -> Self {
        SetDescriptor::Box { lo, hi }
    }

    /// A ray with its direction normalized.
    pub fn ray(origin: Vec<f64>, direction: &[f64]) -> Result<Self> {
        let u = Direction::normalized(direction)?;
        Ok(SetDescriptor::Ray { origin, direction: u.into_vec() })
    }

    pub fn product(left: SetDescriptor, right: SetDescriptor) -> Self {
        SetDescriptor::Product { left: std::boxed::Box::new(left), right: std::boxed::Box::new(right) }
    }

    pub fn dim(&self) -> Result<usize> {
        Ok(match self {
            SetDescriptor::Ball { center, .. } => center.len(),
            SetDescriptor::Box { lo, .. } => lo.len(),
            SetDescriptor::Ray { origin, .. } => origin.len(),
            SetDescriptor::Cone { apex, .. } => apex.len(),
            SetDescriptor::Finite { points } => {
                points.first().map(Vec::len).ok_or(Error::Empty("finite set"))?
            }
            SetDescriptor::Product { left, right } => left.dim()? + right.dim()?,
            SetDescriptor::Union { parts } => parts.first().ok_or(Error::Empty("union"))?.dim()?,
            SetDescriptor::GridOf { inner, .. } => inner.dim()?,
            SetDescriptor::Space { dim } => *dim,
        })
    }

    /// Checks the structural invariants: positive radius, `lo <= hi`, unit
    /// directions, consistent dimensions, finite coordinates.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: &[f64]| {
            if v.iter().all(|c| c.is_finite()) {
                Ok(())
            } else {
                Err(Error::invalid("set descriptor has non-finite coordinates"))
            }
        };
        let dim = self.dim()?;
        if dim == 0 {
            return Err(Error::invalid("set descriptor has dimension 0"));
        }
        match self {
            SetDescriptor::Ball { center, radius } => {
                finite(center)?;
                if !(*radius > 0.0 && radius.is_finite()) {
                    return Err(Error::invalid(format!("ball radius must be positive, got {radius}")));
                }
            }
            SetDescriptor::Box { lo, hi } => {
                check_dim(lo.len(), hi.len())?;
                finite(lo)?;
                finite(hi)?;
                if lo.iter().zip(hi).any(|(l, h)| l > h) {
                    return Err(Error::invalid("box requires lo <= hi componentwise"));
                }
            }
            SetDescriptor::Ray { origin, direction } => {
                check_dim(dim, direction.len())?;
                finite(origin)?;
                Direction::new(direction.clone())?;
            }
            SetDescriptor::Cone { apex, directions } => {
                finite(apex)?;
                if directions.is_empty() {
                    return Err(Error::Empty("cone direction set"));
                }
                for u in directions {
                    check_dim(dim, u.len())?;
                    Direction::new(u.clone())?;
                }
            }
            SetDescriptor::Finite { points } => {
                for p in points {
                    check_dim(dim, p.len())?;
                    finite(p)?;
                }
            }
            SetDescriptor::Product { left, right } => {
                left.validate()?;
                right.validate()?;
            }
            SetDescriptor::Union { parts } => {
                for part in parts {
                    check_dim(dim, part.dim()?)?;
                    part.validate()?;
                }
            }
            SetDescriptor::GridOf { inner, resolution } => {
                if *resolution == 0 {
                    return Err(Error::invalid("grid resolution must be positive"));
                }
                inner.validate()?;
            }
            SetDescriptor::Space { .. } => {}
        }
        Ok(())
    }

    pub fn is_bounded(&self) -> bool {
        match self {
            SetDescriptor::Ball { .. } | SetDescriptor::Box { .. } | SetDescriptor::Finite { .. } => true,
            SetDescriptor::Ray { .. } | SetDescriptor::Cone { .. } | SetDescriptor::Space { .. } => false,
            SetDescriptor::Product { left, right } => left.is_bounded() && right.is_bounded(),
            SetDescriptor::Union { parts } => parts.iter().all(SetDescriptor::is_bounded),
            SetDescriptor::GridOf { inner, .. } => inner.is_bounded(),
        }
    }

    /// Euclidean distance from `x` to the set. Products use the product
    /// metric, so the distance splits into the two factor distances.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim()?, x.len())?;
        Ok(match self {
            SetDescriptor::Ball { center, radius } => (dist(x, center) - radius).max(0.0),
            SetDescriptor::Box { lo, hi } => {
                let clamped: Vec<f64> =
                    x.iter().zip(lo.iter().zip(hi)).map(|(c, (l, h))| c.clamp(*l, *h)).collect();
                dist(x, &clamped)
            }
            SetDescriptor::Ray { origin, direction } => ray_distance(x, origin, direction),
            SetDescriptor::Cone { apex, directions } => directions
                .iter()
                .map(|u| ray_distance(x, apex, u))
                .fold(f64::INFINITY, f64::min),
            SetDescriptor::Finite { points } => {
                points.iter().map(|p| dist(x, p)).fold(f64::INFINITY, f64::min)
            }
            SetDescriptor::Product { left, right } => {
                let k = left.dim()?;
                let a = left.distance(&x[..k])?;
                let b = right.distance(&x[k..])?;
                (a * a + b * b).sqrt()
            }
            SetDescriptor::Union { parts } => {
                let mut best = f64::INFINITY;
                for part in parts {
                    best = best.min(part.distance(x)?);
                }
                best
            }
            SetDescriptor::GridOf { inner, resolution } => {
                let grid = inner.grid_points(*resolution)?;
                grid.iter().map(|p| dist(x, p)).fold(f64::INFINITY, f64::min)
            }
            SetDescriptor::Space { .. } => 0.0,
        })
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> Result<bool> {
        Ok(self.distance(x)? <= tol)
    }

    /// Deterministic lattice of points of a bounded set. Boxes use
    /// `resolution + 1` points per axis; balls filter the lattice of their
    /// bounding box; finite sets are returned verbatim.
    pub fn grid_points(&self, resolution: usize) -> Result<PointCloud> {
        if resolution == 0 {
            return Err(Error::invalid("grid resolution must be positive"));
        }
        self.validate()?;
        let dim = self.dim()?;
        match self {
            SetDescriptor::Box { lo, hi } => {
                let axes: Vec<Vec<f64>> =
                    lo.iter().zip(hi).map(|(l, h)| lattice_axis(*l, *h, resolution)).collect();
                Ok(product_lattice(&axes))
            }
            SetDescriptor::Ball { center, radius } => {
                let axes: Vec<Vec<f64>> = center
                    .iter()
                    .map(|c| lattice_axis(c - radius, c + radius, resolution))
                    .collect();
                let cube = product_lattice(&axes);
                let slack = radius * (1.0 + POINT_TOL);
                let mut out = PointCloud::empty(dim);
                for p in cube.iter() {
                    if dist(p, center) <= slack {
                        out.push(p);
                    }
                }
                Ok(out)
            }
            SetDescriptor::Finite { points } => PointCloud::from_rows(dim, points),
            SetDescriptor::Product { left, right } => {
                let a = left.grid_points(resolution)?;
                let b = right.grid_points(resolution)?;
                let mut out = PointCloud::empty(dim);
                let mut row = Vec::with_capacity(dim);
                for p in a.iter() {
                    for q in b.iter() {
                        row.clear();
                        row.extend_from_slice(p);
                        row.extend_from_slice(q);
                        out.push(&row);
                    }
                }
                Ok(out)
            }
            SetDescriptor::Union { parts } => {
                let mut out = PointCloud::empty(dim);
                for part in parts {
                    out.extend(&part.grid_points(resolution)?);
                }
                Ok(out)
            }
            SetDescriptor::GridOf { inner, resolution } => inner.grid_points(*resolution),
            SetDescriptor::Ray { .. } | SetDescriptor::Cone { .. } | SetDescriptor::Space { .. } => Err(
                Error::Unsupported(format!("cannot grid the unbounded set {}", self.kind())),
            ),
        }
    }

    /// Finite sample of `self ∩ Ball(0, radius)`: lattices for solid parts,
    /// `resolution + 1` equispaced points along each ray.
    pub fn truncated_points(&self, radius: f64, resolution: usize) -> Result<PointCloud> {
        self.validate()?;
        let dim = self.dim()?;
        let origin = vec![0.0; dim];
        let keep = |cloud: PointCloud| {
            let mut out = PointCloud::empty(dim);
            for p in cloud.iter() {
                if norm(p) <= radius * (1.0 + POINT_TOL) {
                    out.push(p);
                }
            }
            out
        };
        match self {
            SetDescriptor::Space { .. } => SetDescriptor::ball(origin, radius).grid_points(resolution),
            SetDescriptor::Ray { origin: o, direction: u } => Ok(ray_segment(o, u, radius, resolution)),
            SetDescriptor::Cone { apex, directions } => {
                let mut out = PointCloud::empty(dim);
                for u in directions {
                    out.extend(&ray_segment(apex, u, radius, resolution));
                }
                Ok(out)
            }
            SetDescriptor::Union { parts } => {
                let mut out = PointCloud::empty(dim);
                for part in parts {
                    out.extend(&part.truncated_points(radius, resolution)?);
                }
                Ok(out)
            }
            SetDescriptor::Product { .. } => {
                Err(Error::Unsupported("truncation of a product set".into()))
            }
            _ => Ok(keep(self.grid_points(resolution)?)),
        }
    }

    /// Directions along which the set escapes to infinity.
    pub fn horizon(&self) -> Result<Horizon> {
        self.validate()?;
        Ok(match self {
            SetDescriptor::Ball { .. } | SetDescriptor::Box { .. } | SetDescriptor::Finite { .. } => {
                Horizon::Empty
            }
            SetDescriptor::GridOf { inner, .. } if inner.is_bounded() => Horizon::Empty,
            SetDescriptor::Ray { direction, .. } => {
                Horizon::Directions(vec![Direction::new(direction.clone())?])
            }
            SetDescriptor::Cone { directions, .. } => {
                let mut h = Horizon::Empty;
                for u in directions {
                    h = h.merge(Horizon::Directions(vec![Direction::new(u.clone())?]));
                }
                h
            }
            SetDescriptor::Space { dim } => Horizon::FullSphere { dim: *dim },
            SetDescriptor::Union { parts } => {
                let mut h = Horizon::Empty;
                for part in parts {
                    h = h.merge(part.horizon()?);
                }
                h
            }
            SetDescriptor::Product { .. } | SetDescriptor::GridOf { .. } => {
                return Err(Error::Unsupported(format!("horizon of a {} set", self.kind())));
            }
        })
    }

    fn kind(&self) -> &'static str {
        match self {
            SetDescriptor::Ball { .. } => "ball",
            SetDescriptor::Box { .. } => "box",
            SetDescriptor::Ray { .. } => "ray",
            SetDescriptor::Cone { .. } => "cone",
            SetDescriptor::Finite { .. } => "finite",
            SetDescriptor::Product { .. } => "product",
            SetDescriptor::Union { .. } => "union",
            SetDescriptor::GridOf { .. } => "grid_of",
            SetDescriptor::Space { .. } => "space",
        }
    }
}

fn ray_distance(x: &[f64], origin: &[f64], u: &[f64]) -> f64 {
    let rel: Vec<f64> = x.iter().zip(origin).map(|(a, b)| a - b).collect();
    let t = dot(&rel, u).max(0.0);
    rel.iter().zip(u).map(|(r, c)| (r - t * c).powi(2)).sum::<f64>().sqrt()
}

/// Points `origin + t u` with `|origin + t u| <= radius`, `t >= 0`.
fn ray_segment(origin: &[f64], u: &[f64], radius: f64, resolution: usize) -> PointCloud {
    let mut out = PointCloud::empty(origin.len());
    let b = dot(origin, u);
    let disc = b * b - dot(origin, origin) + radius * radius;
    if disc < 0.0 {
        return out;
    }
    let t_hi = -b + disc.sqrt();
    let t_lo = (-b - disc.sqrt()).max(0.0);
    if t_hi < t_lo {
        return out;
    }
    let steps = resolution.max(1);
    for k in 0..=steps {
        let t = t_lo + (t_hi - t_lo) * k as f64 / steps as f64;
        let p: Vec<f64> = origin.iter().zip(u).map(|(o, c)| o + t * c).collect();
        out.push(&p);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(dim: usize, k: usize) -> Vec<f64> {
        Direction::axis(dim, k).into_vec()
    }

    #[test]
    fn box_lattice() {
        let g = SetDescriptor::cube(vec![0.0, 0.0], vec![1.0, 1.0]).grid_points(2).unwrap();
        assert_eq!(g.len(), 9);
        for x in [0.0, 0.5, 1.0] {
            for y in [0.0, 0.5, 1.0] {
                assert!(g.contains_point(&[x, y], 0.0));
            }
        }
    }

    #[test]
    fn finite_is_verbatim() {
        let pts = vec![vec![0.3, 0.1], vec![-2.0, 5.0]];
        let g = SetDescriptor::Finite { points: pts.clone() }.grid_points(3).unwrap();
        assert_eq!(g.to_rows(), pts);
    }

    #[test]
    fn ball_lattice_matches_membership_filter() {
        // membership filter over the bounding-box lattice {-1,-0.5,0,0.5,1}^2
        let mut expected = 0;
        for i in 0..=4 {
            for j in 0..=4 {
                let (x, y) = (-1.0 + 0.5 * i as f64, -1.0 + 0.5 * j as f64);
                if x * x + y * y <= 1.0 {
                    expected += 1;
                }
            }
        }
        assert_eq!(expected, 13);
        let g = SetDescriptor::ball(vec![0.0, 0.0], 1.0).grid_points(4).unwrap();
        assert_eq!(g.len(), expected);
    }

    #[test]
    fn unbounded_grid_is_error() {
        let r = SetDescriptor::ray(vec![0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!(r.grid_points(4).is_err());
        assert!(SetDescriptor::Space { dim: 2 }.grid_points(4).is_err());
    }

    #[test]
    fn horizons() {
        assert_eq!(SetDescriptor::ball(vec![0.0, 0.0], 5.0).horizon().unwrap(), Horizon::Empty);
        let r1 = SetDescriptor::ray(vec![0.0, 0.0], &e(2, 0)).unwrap();
        let r2 = SetDescriptor::ray(vec![0.0, 0.0], &e(2, 1)).unwrap();
        assert_eq!(
            r1.horizon().unwrap(),
            Horizon::Directions(vec![Direction::axis(2, 0)])
        );
        let u = SetDescriptor::Union { parts: vec![r1, r2] };
        assert_eq!(
            u.horizon().unwrap(),
            Horizon::Directions(vec![Direction::axis(2, 0), Direction::axis(2, 1)])
        );
        assert_eq!(SetDescriptor::Space { dim: 3 }.horizon().unwrap(), Horizon::FullSphere { dim: 3 });
        let p = SetDescriptor::product(SetDescriptor::ball(vec![0.0], 1.0), SetDescriptor::ball(vec![0.0], 1.0));
        assert!(p.horizon().is_err());
    }

    #[test]
    fn horizon_of_union_contains_components() {
        let parts = vec![
            SetDescriptor::ball(vec![1.0, 1.0], 1.0),
            SetDescriptor::ray(vec![0.0, 0.0], &[1.0, 1.0]).unwrap(),
            SetDescriptor::Cone { apex: vec![0.0, 0.0], directions: vec![e(2, 1), vec![-1.0, 0.0]] },
        ];
        let whole = SetDescriptor::Union { parts: parts.clone() }.horizon().unwrap().directions(0);
        for part in &parts {
            for u in part.horizon().unwrap().directions(0) {
                assert!(whole.contains(&u));
            }
        }
        assert_eq!(whole.len(), 3);
    }

    #[test]
    fn validation() {
        assert!(SetDescriptor::ball(vec![0.0], 0.0).validate().is_err());
        assert!(SetDescriptor::cube(vec![1.0], vec![0.0]).validate().is_err());
        assert!(SetDescriptor::Ray { origin: vec![0.0, 0.0], direction: vec![2.0, 0.0] }.validate().is_err());
    }

    #[test]
    fn distances() {
        let b = SetDescriptor::ball(vec![0.0, 0.0], 1.0);
        assert!((b.distance(&[3.0, 4.0]).unwrap() - 4.0).abs() < 1e-15);
        let bx = SetDescriptor::cube(vec![0.0, 0.0], vec![1.0, 1.0]);
        assert!((bx.distance(&[2.0, 2.0]).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        let r = SetDescriptor::ray(vec![0.0, 0.0], &[1.0, 0.0]).unwrap();
        assert_eq!(r.distance(&[5.0, 2.0]).unwrap(), 2.0);
        assert_eq!(r.distance(&[-3.0, 4.0]).unwrap(), 5.0);
        let p = SetDescriptor::product(SetDescriptor::ball(vec![0.0], 1.0), SetDescriptor::ball(vec![0.0], 1.0));
        assert!((p.distance(&[4.0, 5.0]).unwrap() - 5.0).abs() < 1e-15);
    }

    #[test]
    fn truncated_samples_stay_inside() {
        let e = SetDescriptor::Union {
            parts: vec![
                SetDescriptor::Space { dim: 2 },
                SetDescriptor::ray(vec![1.0, 0.0], &[0.0, 1.0]).unwrap(),
            ],
        };
        let pts = e.truncated_points(10.0, 8).unwrap();
        assert!(!pts.is_empty());
        assert!(pts.iter().all(|p| norm(p) <= 10.0 + 1e-9));
    }

    #[test]
    fn json_shape() {
        let s = SetDescriptor::ball(vec![0.0, 1.0], 2.0);
        let v = serde_json::to_value(&s).unwrap();
        assert_eq!(v["type"], "ball");
        let back: SetDescriptor =
            serde_json::from_str(r#"{"type":"box","lo":[0,0],"hi":[1,1]}"#).unwrap();
        assert_eq!(back, SetDescriptor::cube(vec![0.0, 0.0], vec![1.0, 1.0]));
    }
}

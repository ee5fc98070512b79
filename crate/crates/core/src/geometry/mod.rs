//! Points, point clouds, directions and the finite geometry used to stand in
//! for compact sets: Hausdorff distance, support functions with their exposed
//! faces, and strict convexity of a vertex cloud in a direction.

mod hull;
mod sets;

pub use hull::{convex_hull_vertices, PolytopeVertices};
pub use sets::{sphere_directions, Horizon, SetDescriptor};

use crate::error::{check_dim, Error, Result};

/// Dedup and comparison tolerance for coordinates.
pub const POINT_TOL: f64 = 1e-12;

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// A finite list of points of a common dimension, stored row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    pub fn empty(dim: usize) -> Self {
        PointCloud { dim, coords: Vec::new() }
    }

    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("point dimension must be at least 1"));
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::invalid(format!(
                "{} coordinates do not split into points of dimension {dim}",
                coords.len()
            )));
        }
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::invalid(format!("non-finite coordinate {bad}")));
        }
        Ok(PointCloud { dim, coords })
    }

    /// Builds a cloud from rows; `dim` is required so that empty clouds carry
    /// a dimension too.
    pub fn from_rows<R: AsRef<[f64]>>(dim: usize, rows: &[R]) -> Result<Self> {
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for row in rows {
            let row = row.as_ref();
            check_dim(dim, row.len())?;
            coords.extend_from_slice(row);
        }
        Self::from_flat(dim, coords)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.coords
    }

    /// Appends a point. Panics on a dimension mismatch.
    pub fn push(&mut self, p: &[f64]) {
        assert_eq!(p.len(), self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(p);
    }

    pub fn extend(&mut self, other: &PointCloud) {
        assert_eq!(other.dim, self.dim, "point dimension mismatch");
        self.coords.extend_from_slice(&other.coords);
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let mut out = PointCloud::empty(self.dim);
        for &i in indices {
            out.push(self.point(i));
        }
        out
    }

    pub fn max_abs_coord(&self) -> f64 {
        self.coords.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    /// True if some point of `self` lies within `tol` of `p`.
    pub fn contains_point(&self, p: &[f64], tol: f64) -> bool {
        self.iter().any(|q| dist(p, q) <= tol)
    }

    /// Points equal as sets, up to `tol` in Euclidean distance.
    pub fn set_eq(&self, other: &PointCloud, tol: f64) -> bool {
        self.dim == other.dim
            && self.iter().all(|p| other.contains_point(p, tol))
            && other.iter().all(|q| self.contains_point(q, tol))
    }

    /// Removes points lying within `tol` of an earlier point.
    pub fn dedup(&self, tol: f64) -> PointCloud {
        let mut out = PointCloud::empty(self.dim);
        for p in self.iter() {
            if !out.contains_point(p, tol) {
                out.push(p);
            }
        }
        out
    }

    pub fn diameter(&self) -> f64 {
        let mut best = 0.0_f64;
        for (i, p) in self.iter().enumerate() {
            for q in self.iter().skip(i + 1) {
                best = best.max(dist2(p, q));
            }
        }
        best.sqrt()
    }

    pub fn centroid(&self) -> Option<Vec<f64>> {
        if self.is_empty() {
            return None;
        }
        let mut c = vec![0.0; self.dim];
        for p in self.iter() {
            for (ck, pk) in c.iter_mut().zip(p) {
                *ck += pk;
            }
        }
        let n = self.len() as f64;
        c.iter_mut().for_each(|ck| *ck /= n);
        Some(c)
    }
}

/// A unit vector.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction(Vec<f64>);

impl Direction {
    /// Accepts `u` only if it already has unit norm (within 1e-12).
    pub fn new(u: Vec<f64>) -> Result<Self> {
        if u.is_empty() || u.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("direction must be a finite non-empty vector"));
        }
        let n = norm(&u);
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("direction has norm {n}, expected 1")));
        }
        Ok(Direction(u))
    }

    pub fn normalized(u: &[f64]) -> Result<Self> {
        let n = norm(u);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::invalid("cannot normalize a zero or non-finite vector"));
        }
        Ok(Direction(u.iter().map(|c| c / n).collect()))
    }

    pub fn axis(dim: usize, k: usize) -> Self {
        let mut u = vec![0.0; dim];
        u[k] = 1.0;
        Direction(u)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}

fn point_to_cloud_dist(p: &[f64], cloud: &PointCloud) -> f64 {
    cloud
        .iter()
        .map(|q| dist2(p, q))
        .fold(f64::INFINITY, f64::min)
        .sqrt()
}

/// One-sided distance `sup_{a in a} d(a, b)`; infinite if `b` is empty and
/// `a` is not.
pub fn directed_hausdorff(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    if a.is_empty() {
        return Ok(0.0);
    }
    if b.is_empty() {
        return Ok(f64::INFINITY);
    }
    Ok(a.iter()
        .map(|p| point_to_cloud_dist(p, b))
        .fold(0.0, f64::max))
}

/// Hausdorff distance between two finite point sets. Two empty sets are at
/// distance 0; exactly one empty set is at infinite distance.
pub fn hausdorff_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    if a.is_empty() && b.is_empty() {
        return Ok(0.0);
    }
    Ok(directed_hausdorff(a, b)?.max(directed_hausdorff(b, a)?))
}

/// Value of the support function together with its exposed face.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportFace {
    pub value: f64,
    pub face: PointCloud,
}

/// Computes `max_{c in c} <u, c>` and every point of `c` within
/// `tol * (1 + |value|)` of that maximum.
pub fn support_function(c: &PointCloud, u: &Direction, tol: f64) -> Result<SupportFace> {
    support_function_raw(c, u.as_slice(), tol)
}

/// Like [`support_function`] but for an arbitrary, not necessarily unit,
/// vector `u`.
pub fn support_function_raw(c: &PointCloud, u: &[f64], tol: f64) -> Result<SupportFace> {
    if c.is_empty() {
        return Err(Error::Empty("support set"));
    }
    check_dim(c.dim(), u.len())?;
    let values: Vec<f64> = c.iter().map(|p| dot(u, p)).collect();
    let value = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cutoff = value - tol * (1.0 + value.abs());
    let mut face = PointCloud::empty(c.dim());
    for (p, v) in c.iter().zip(&values) {
        if *v >= cutoff {
            face.push(p);
        }
    }
    Ok(SupportFace { value, face })
}

/// True when the exposed face of `c` in direction `u` has diameter at most
/// `tol`.
pub fn is_strictly_convex_in_direction(c: &PointCloud, u: &Direction, tol: f64) -> Result<bool> {
    let face = support_function(c, u, tol)?.face;
    Ok(face.diameter() <= tol)
}

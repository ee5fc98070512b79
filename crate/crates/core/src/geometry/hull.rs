use super::{dist, dot, PointCloud, POINT_TOL};
use crate::error::{Error, Result};

/// Vertex cloud of a polytope. `reduced` is false when the input dimension
/// exceeds 3 and the cloud was only deduplicated.
#[derive(Clone, Debug, PartialEq)]
pub struct PolytopeVertices {
    pub vertices: PointCloud,
    pub reduced: bool,
}

/// Extreme points of `conv(p)`, deduplicated within 1e-12. Exact for
/// dimensions 1 to 3; higher dimensions return the deduplicated input with
/// `reduced = false`.
pub fn convex_hull_vertices(p: &PointCloud) -> Result<PolytopeVertices> {
    if p.is_empty() {
        return Err(Error::Empty("point cloud"));
    }
    let scale = 1.0 + p.max_abs_coord();
    let pts = p.dedup(POINT_TOL * scale);
    let eps = POINT_TOL * scale;
    let vertices = match pts.dim() {
        1 => hull_1d(&pts),
        2 => hull_2d(&pts, eps),
        3 => hull_3d(&pts, eps),
        _ => {
            return Ok(PolytopeVertices { vertices: pts, reduced: false });
        }
    };
    Ok(PolytopeVertices { vertices, reduced: true })
}

fn hull_1d(pts: &PointCloud) -> PointCloud {
    let (mut lo, mut hi) = (0, 0);
    for i in 0..pts.len() {
        if pts.point(i)[0] < pts.point(lo)[0] {
            lo = i;
        }
        if pts.point(i)[0] > pts.point(hi)[0] {
            hi = i;
        }
    }
    if lo == hi {
        pts.select(&[lo])
    } else {
        pts.select(&[lo, hi])
    }
}

fn cross2(o: &[f64], a: &[f64], b: &[f64]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Indices of the hull vertices of planar points, counter-clockwise, with
/// collinear boundary points dropped.
fn monotone_chain(pts: &[[f64; 2]], eps: f64) -> Vec<usize> {
    let n = pts.len();
    if n <= 2 {
        let mut idx: Vec<usize> = (0..n).collect();
        idx.dedup_by(|a, b| dist(&pts[*a], &pts[*b]) <= eps);
        return idx;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        pts[a][0]
            .total_cmp(&pts[b][0])
            .then(pts[a][1].total_cmp(&pts[b][1]))
    });
    // keep a turn only if b sits strictly left of o->a by more than eps
    let left = |o: usize, a: usize, b: usize| {
        let base = dist(&pts[o], &pts[b]).max(dist(&pts[o], &pts[a]));
        cross2(&pts[o], &pts[a], &pts[b]) > eps * base
    };
    let mut hull: Vec<usize> = Vec::with_capacity(2 * n);
    for &i in &order {
        while hull.len() >= 2 && !left(hull[hull.len() - 2], hull[hull.len() - 1], i) {
            hull.pop();
        }
        hull.push(i);
    }
    let lower_len = hull.len() + 1;
    for &i in order.iter().rev().skip(1) {
        while hull.len() >= lower_len && !left(hull[hull.len() - 2], hull[hull.len() - 1], i) {
            hull.pop();
        }
        hull.push(i);
    }
    hull.pop();
    if hull.len() == 2 && dist(&pts[hull[0]], &pts[hull[1]]) <= eps {
        hull.pop();
    }
    hull
}

fn hull_2d(pts: &PointCloud, eps: f64) -> PointCloud {
    let planar: Vec<[f64; 2]> = pts.iter().map(|p| [p[0], p[1]]).collect();
    pts.select(&monotone_chain(&planar, eps))
}

fn sub3(a: &[f64], b: &[f64]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn unit3(a: [f64; 3]) -> Option<[f64; 3]> {
    let n = dot(&a, &a).sqrt();
    (n > 0.0).then(|| [a[0] / n, a[1] / n, a[2] / n])
}

/// Exact extreme points in 3-space by enumerating supporting planes through
/// point triples and taking planar hulls of each face. O(n^4), intended for
/// the small vertex clouds produced by subdifferential evaluation.
fn hull_3d(pts: &PointCloud, eps: f64) -> PointCloud {
    let n = pts.len();
    if n <= 2 {
        return pts.clone();
    }
    let p = |i: usize| pts.point(i);

    // collinear clouds reduce to the two extreme points along the line
    let far = (1..n)
        .max_by(|&a, &b| dist(p(0), p(a)).total_cmp(&dist(p(0), p(b))))
        .unwrap();
    let axis = unit3(sub3(p(far), p(0))).unwrap();
    let off_line = (0..n).any(|i| {
        let c = cross3(&axis, &sub3(p(i), p(0)));
        dot(&c, &c).sqrt() > eps
    });
    if !off_line {
        let proj: Vec<f64> = (0..n).map(|i| dot(&axis, &sub3(p(i), p(0)))).collect();
        let lo = (0..n).min_by(|&a, &b| proj[a].total_cmp(&proj[b])).unwrap();
        let hi = (0..n).max_by(|&a, &b| proj[a].total_cmp(&proj[b])).unwrap();
        return pts.select(&[lo, hi]);
    }

    let mut extreme = vec![false; n];
    let mut offsets = vec![0.0; n];
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let e1 = sub3(p(j), p(i));
                let Some(normal) = unit3(cross3(&e1, &sub3(p(k), p(i)))) else {
                    continue;
                };
                // reject nearly collinear triples, whose normal is noise
                if dot(&cross3(&e1, &sub3(p(k), p(i))), &normal) <= eps * dist(p(j), p(i)) {
                    continue;
                }
                let (mut above, mut below) = (false, false);
                for (l, off) in offsets.iter_mut().enumerate() {
                    *off = dot(&normal, &sub3(p(l), p(i)));
                    above |= *off > eps;
                    below |= *off < -eps;
                }
                if above && below {
                    continue;
                }
                let face: Vec<usize> = (0..n).filter(|&l| offsets[l].abs() <= eps).collect();
                let u = unit3(e1).unwrap();
                let v = cross3(&normal, &u);
                let planar: Vec<[f64; 2]> = face
                    .iter()
                    .map(|&l| {
                        let r = sub3(p(l), p(i));
                        [dot(&r, &u), dot(&r, &v)]
                    })
                    .collect();
                for h in monotone_chain(&planar, eps) {
                    extreme[face[h]] = true;
                }
            }
        }
    }
    let idx: Vec<usize> = (0..n).filter(|&i| extreme[i]).collect();
    pts.select(&idx)
}

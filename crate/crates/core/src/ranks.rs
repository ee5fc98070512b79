//! Empirical center-outward ranks: optimal matching of a sample to a
//! spherical-uniform reference grid on the unit ball.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{norm, PointCloud};
use crate::monotone::{is_cyclically_monotone, PairSet, DEFAULT_TOL};
use crate::transport::{solve_discrete_ot, support_indices, DiscreteMeasure, SUPPORT_FLOOR};

/// Spacing of the jittered origin copies along the first axis.
pub const ORIGIN_JITTER: f64 = 1e-9;

/// Reference grid: `n_r` rings of `n_s` directions at radii `k / (n_r + 1)`,
/// followed by `n_0` copies of the origin.
#[derive(Clone, Debug, PartialEq)]
pub struct CenterOutwardGrid {
    pub n_r: usize,
    pub n_s: usize,
    pub n_0: usize,
    pub seed: u64,
    points: PointCloud,
}

impl CenterOutwardGrid {
    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Ring of grid point `g`: 1 to `n_r`, or 0 for an origin copy.
    pub fn ring_of(&self, g: usize) -> usize {
        if g < self.n_r * self.n_s {
            g / self.n_s + 1
        } else {
            0
        }
    }

    pub fn ring_radius(&self, ring: usize) -> f64 {
        ring as f64 / (self.n_r + 1) as f64
    }

    /// Unit direction of a ring point; `None` for origin copies.
    pub fn direction_of(&self, g: usize) -> Option<Vec<f64>> {
        (self.ring_of(g) > 0).then(|| {
            let r = self.ring_radius(self.ring_of(g));
            self.points.point(g).iter().map(|c| c / r).collect()
        })
    }

    /// Polar angle in `[0, 2pi)` of a planar ring point.
    pub fn angle_of(&self, g: usize) -> Option<f64> {
        if self.dim() != 2 || self.ring_of(g) == 0 {
            return None;
        }
        let p = self.points.point(g);
        Some(p[1].atan2(p[0]).rem_euclid(2.0 * PI))
    }
}

/// Builds the reference grid. In the plane ring `k` uses the angles
/// `2 pi s / n_s + pi (k - 1) / (n_r n_s)`; in higher dimension every ring
/// shares `n_s` seeded uniform directions.
pub fn center_outward_grid(n_r: usize, n_s: usize, n_0: usize, dim: usize, seed: u64) -> Result<CenterOutwardGrid> {
    if dim < 2 {
        return Err(Error::Unsupported("center-outward grids need d >= 2; use sorted ranks on the line".into()));
    }
    if n_r == 0 || n_s == 0 {
        return Err(Error::invalid("n_r and n_s must be at least 1"));
    }
    let mut points = PointCloud::empty(dim);
    let directions: Vec<Vec<f64>> = if dim == 2 {
        Vec::new()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::with_capacity(n_s);
        while out.len() < n_s {
            let g: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let len = norm(&g);
            if len > 1e-12 {
                out.push(g.iter().map(|c| c / len).collect());
            }
        }
        out
    };
    for k in 1..=n_r {
        let r = k as f64 / (n_r + 1) as f64;
        // the plane has no direction table
        #[allow(clippy::needless_range_loop)]
        for s in 0..n_s {
            if dim == 2 {
                let t = 2.0 * PI * s as f64 / n_s as f64 + PI * (k - 1) as f64 / (n_r * n_s) as f64;
                points.push(&[r * t.cos(), r * t.sin()]);
            } else {
                let p: Vec<f64> = directions[s].iter().map(|c| r * c).collect();
                points.push(&p);
            }
        }
    }
    let mut origin = vec![0.0; dim];
    for c in 0..n_0 {
        origin[0] = ORIGIN_JITTER * c as f64;
        points.push(&origin);
    }
    Ok(CenterOutwardGrid { n_r, n_s, n_0, seed, points })
}

/// Bijective optimal matching of a sample to a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RankAssignment {
    pub sample: PointCloud,
    pub grid: CenterOutwardGrid,
    /// `assignment[i]` is the grid index matched to sample point `i`.
    pub assignment: Vec<usize>,
    /// Mean squared matching distance.
    pub cost: f64,
    /// Whether the matched pairs passed the cyclical monotonicity check.
    pub certified: bool,
}

impl RankAssignment {
    pub fn pairs(&self) -> PairSet {
        let grid = self.grid.points.select(&self.assignment);
        PairSet::new(self.sample.clone(), grid).expect("assignment is a bijection")
    }
}

/// Matches `sample` to `grid` by solving the optimal transport problem
/// between the two uniform empirical measures.
pub fn center_outward_ranks(sample: &PointCloud, grid: &CenterOutwardGrid) -> Result<RankAssignment> {
    check_dim(grid.dim(), sample.dim())?;
    if sample.len() != grid.len() {
        return Err(Error::invalid(format!(
            "sample has {} points but the grid has {}",
            sample.len(),
            grid.len()
        )));
    }
    let p = DiscreteMeasure::uniform(sample.clone())?;
    let q = DiscreteMeasure::uniform(grid.points.clone())?;
    let pi = solve_discrete_ot(&p, &q)?;
    let n = sample.len();
    let mut assignment = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for (i, j) in support_indices(&pi, SUPPORT_FLOOR) {
        if assignment[i] != usize::MAX || taken[j] {
            return Err(Error::Internal(format!("matching is not a bijection at ({i}, {j})")));
        }
        assignment[i] = j;
        taken[j] = true;
    }
    if assignment.contains(&usize::MAX) {
        return Err(Error::Internal("matching leaves a sample point unassigned".into()));
    }
    let out = RankAssignment {
        sample: sample.clone(),
        grid: grid.clone(),
        assignment,
        cost: pi.cost(),
        certified: false,
    };
    let certified = is_cyclically_monotone(&out.pairs(), DEFAULT_TOL).holds;
    Ok(RankAssignment { certified, ..out })
}

/// Sample points matched to ring `ring`, ordered by grid angle in the
/// plane and by grid index otherwise.
pub fn quantile_contour(a: &RankAssignment, ring: usize) -> Result<PointCloud> {
    if ring == 0 || ring > a.grid.n_r {
        return Err(Error::invalid(format!("ring {ring} outside 1..={}", a.grid.n_r)));
    }
    let mut members: Vec<(usize, usize)> = a
        .assignment
        .iter()
        .enumerate()
        .filter(|&(_, &g)| a.grid.ring_of(g) == ring)
        .map(|(i, &g)| (i, g))
        .collect();
    if a.grid.dim() == 2 {
        members.sort_by(|x, y| {
            let (tx, ty) = (a.grid.angle_of(x.1).unwrap(), a.grid.angle_of(y.1).unwrap());
            tx.total_cmp(&ty).then(x.1.cmp(&y.1))
        });
    } else {
        members.sort_by_key(|m| m.1);
    }
    let idx: Vec<usize> = members.iter().map(|m| m.0).collect();
    Ok(a.sample.select(&idx))
}

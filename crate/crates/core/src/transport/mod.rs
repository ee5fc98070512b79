//! Discrete measures and exact optimal couplings under squared Euclidean
//! cost, plus the oracles used to check them: permutation enumeration, the
//! sorted (monotone rearrangement) plan on the line, and the closed-form
//! linear map between centred Gaussians.

mod gaussian;
mod simplex;

pub use gaussian::{gaussian_brenier, symmetric_sqrt, LinearMap};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{dist, dist2, PointCloud, POINT_TOL};
use crate::monotone::PairSet;
use simplex::TransportSimplex;

/// Largest instance accepted by [`brute_force_ot`].
pub const BRUTE_FORCE_LIMIT: usize = 8;

/// Default relative floor for reading the support off a plan.
pub const SUPPORT_FLOOR: f64 = 1e-12;

/// Weighted finite point set with positive weights summing to one.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    points: PointCloud,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: PointCloud, weights: Vec<f64>) -> Result<Self> {
        make_discrete_measure(points, weights)
    }

    /// Empirical measure: weight `1/n` on each point.
    pub fn uniform(points: PointCloud) -> Result<Self> {
        let n = points.len();
        make_discrete_measure(points, vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &PointCloud {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.dim()
    }

    fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|x| (x - w).abs() <= 1e-12)
    }
}

/// Validates a measure. Weights must be positive with a total within 1e-9 of
/// one (they are then renormalized); points must be pairwise distinct.
pub fn make_discrete_measure(points: PointCloud, weights: Vec<f64>) -> Result<DiscreteMeasure> {
    if points.is_empty() {
        return Err(Error::Empty("measure support"));
    }
    if points.len() != weights.len() {
        return Err(Error::invalid(format!(
            "{} points but {} weights",
            points.len(),
            weights.len()
        )));
    }
    if let Some(w) = weights.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        return Err(Error::invalid(format!("weights must be positive, got {w}")));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("weights sum to {total}, expected 1")));
    }
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| points.point(a)[0].total_cmp(&points.point(b)[0]));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if points.point(b)[0] - points.point(a)[0] > POINT_TOL {
                break;
            }
            if dist(points.point(a), points.point(b)) <= POINT_TOL {
                return Err(Error::invalid(format!("duplicate support points {a} and {b}")));
            }
        }
    }
    let weights = weights.into_iter().map(|w| w / total).collect();
    Ok(DiscreteMeasure { points, weights })
}

/// Sparse coupling between two measures, stored as `(i, j, mass)` triplets
/// sorted by `(i, j)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    source: DiscreteMeasure,
    target: DiscreteMeasure,
    plan: Vec<(usize, usize, f64)>,
}

impl Coupling {
    /// Checks nonnegativity and that both margins match within 1e-9.
    pub fn new(source: DiscreteMeasure, target: DiscreteMeasure, plan: Vec<(usize, usize, f64)>) -> Result<Self> {
        let c = Coupling::from_entries_unchecked(source, target, plan)?;
        let err = c.margin_error();
        if err > 1e-9 {
            return Err(Error::invalid(format!("plan margins deviate by {err:e}")));
        }
        Ok(c)
    }

    /// Builds a plan without checking its margins; indices and signs are
    /// still validated.
    pub fn from_entries_unchecked(
        source: DiscreteMeasure,
        target: DiscreteMeasure,
        mut plan: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        check_dim(source.dim(), target.dim())?;
        for &(i, j, mass) in &plan {
            if i >= source.len() || j >= target.len() {
                return Err(Error::invalid(format!("plan entry ({i}, {j}) out of range")));
            }
            if !(mass.is_finite() && mass >= 0.0) {
                return Err(Error::invalid(format!("plan entry ({i}, {j}) has mass {mass}")));
            }
        }
        plan.sort_by_key(|a| (a.0, a.1));
        Ok(Coupling { source, target, plan })
    }

    pub fn source(&self) -> &DiscreteMeasure {
        &self.source
    }

    pub fn target(&self) -> &DiscreteMeasure {
        &self.target
    }

    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.plan
    }

    /// `sum_ij pi_ij |x_i - y_j|^2`.
    pub fn cost(&self) -> f64 {
        self.plan
            .iter()
            .map(|&(i, j, m)| m * dist2(self.source.points.point(i), self.target.points.point(j)))
            .sum()
    }

    fn row_col_sums(&self) -> (Vec<f64>, Vec<f64>) {
        let mut rows = vec![0.0; self.source.len()];
        let mut cols = vec![0.0; self.target.len()];
        for &(i, j, m) in &self.plan {
            rows[i] += m;
            cols[j] += m;
        }
        (rows, cols)
    }

    /// Largest absolute deviation of a row or column sum from the stored
    /// marginal weights.
    pub fn margin_error(&self) -> f64 {
        let (rows, cols) = self.row_col_sums();
        let dev = |sums: &[f64], w: &[f64]| {
            sums.iter().zip(w).map(|(s, w)| (s - w).abs()).fold(0.0, f64::max)
        };
        dev(&rows, &self.source.weights).max(dev(&cols, &self.target.weights))
    }
}

/// Row and column sums of the plan reattached to the support points. The
/// returned weights are the raw sums, so they reproduce the stored marginals
/// only when the plan is a valid coupling.
pub fn margins_of(pi: &Coupling) -> (DiscreteMeasure, DiscreteMeasure) {
    let (rows, cols) = pi.row_col_sums();
    (
        DiscreteMeasure { points: pi.source.points.clone(), weights: rows },
        DiscreteMeasure { points: pi.target.points.clone(), weights: cols },
    )
}

/// Pairs `(x_i, y_j)` whose mass exceeds `floor` times the smallest marginal
/// weight.
pub fn coupling_support(pi: &Coupling, floor: f64) -> PairSet {
    let min_w = pi
        .source
        .weights
        .iter()
        .chain(&pi.target.weights)
        .copied()
        .fold(f64::INFINITY, f64::min);
    let cut = floor * min_w;
    let kept: Vec<(usize, usize)> =
        pi.plan.iter().filter(|e| e.2 > cut).map(|&(i, j, _)| (i, j)).collect();
    let dim = pi.source.dim();
    let mut xs = PointCloud::empty(dim);
    let mut ys = PointCloud::empty(dim);
    for (i, j) in kept {
        xs.push(pi.source.points.point(i));
        ys.push(pi.target.points.point(j));
    }
    PairSet::new(xs, ys).expect("support clouds share dimension and length")
}

/// Index pairs of [`coupling_support`], in the same order.
pub fn support_indices(pi: &Coupling, floor: f64) -> Vec<(usize, usize)> {
    let min_w = pi
        .source
        .weights
        .iter()
        .chain(&pi.target.weights)
        .copied()
        .fold(f64::INFINITY, f64::min);
    pi.plan.iter().filter(|e| e.2 > floor * min_w).map(|&(i, j, _)| (i, j)).collect()
}

/// Exact optimal coupling for squared Euclidean cost by the transportation
/// network simplex. Costs are divided by the largest entry before solving.
pub fn solve_discrete_ot(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<Coupling> {
    check_dim(p.dim(), q.dim())?;
    let (xs, ys) = (&p.points, &q.points);
    let mut scale = 0.0_f64;
    for x in xs.iter() {
        for y in ys.iter() {
            scale = scale.max(dist2(x, y));
        }
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    let entries = match p.dim() {
        1 => run_simplex::<1>(p, q, scale),
        2 => run_simplex::<2>(p, q, scale),
        3 => run_simplex::<3>(p, q, scale),
        _ => {
            let inv = 1.0 / scale;
            let cost = |i: usize, j: usize| dist2(xs.point(i), ys.point(j)) * inv;
            simplex_entries(p, q, &cost)
        }
    }?;
    Coupling::new(p.clone(), q.clone(), entries)
}

/// Fixed-dimension copy of the supports so the cost in the pricing loop
/// compiles to straight-line arithmetic.
fn run_simplex<const D: usize>(p: &DiscreteMeasure, q: &DiscreteMeasure, scale: f64) -> Result<Vec<(usize, usize, f64)>> {
    let fixed = |c: &PointCloud| -> Vec<[f64; D]> {
        c.iter().map(|x| x.try_into().expect("dimension checked")).collect()
    };
    let (xs, ys) = (fixed(&p.points), fixed(&q.points));
    let inv = 1.0 / scale;
    let cost = |i: usize, j: usize| {
        let (a, b) = (&xs[i], &ys[j]);
        let mut s = 0.0;
        for k in 0..D {
            s += (a[k] - b[k]) * (a[k] - b[k]);
        }
        s * inv
    };
    simplex_entries(p, q, &cost)
}

fn simplex_entries<C: Fn(usize, usize) -> f64>(
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    cost: &C,
) -> Result<Vec<(usize, usize, f64)>> {
    let nodes = p.len() + q.len();
    let max_pivots = 1_000 * nodes * nodes.max(64);
    TransportSimplex::new(&p.weights, &q.weights, cost)
        .solve(max_pivots)
        .map(|s| s.entries)
        .map_err(Error::Internal)
}

/// Minimum over all permutation couplings of two uniform measures with at
/// most [`BRUTE_FORCE_LIMIT`] points each. Ties keep the lexicographically
/// first permutation.
pub fn brute_force_ot(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<Coupling> {
    check_dim(p.dim(), q.dim())?;
    let n = p.len();
    if q.len() != n {
        return Err(Error::invalid("brute force needs equally sized measures"));
    }
    if n > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: BRUTE_FORCE_LIMIT });
    }
    if !p.is_uniform() || !q.is_uniform() {
        return Err(Error::invalid("brute force needs uniform weights"));
    }
    let c: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| dist2(p.points.point(i), q.points.point(j))).collect())
        .collect();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_cost = f64::INFINITY;
    loop {
        let total: f64 = perm.iter().enumerate().map(|(i, &j)| c[i][j]).sum();
        if total < best_cost {
            best_cost = total;
            best.clone_from(&perm);
        }
        if !next_permutation(&mut perm) {
            break;
        }
    }
    let w = 1.0 / n as f64;
    let plan = best.iter().enumerate().map(|(i, &j)| (i, j, w)).collect();
    Coupling::new(p.clone(), q.clone(), plan)
}

/// Advances to the next permutation in lexicographic order; false after the
/// last one.
pub fn next_permutation(perm: &mut [usize]) -> bool {
    let n = perm.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && perm[i - 1] >= perm[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while perm[j] <= perm[i - 1] {
        j -= 1;
    }
    perm.swap(i - 1, j);
    perm[i..].reverse();
    true
}

/// North-west corner plan between the sorted supports of two measures on
/// the line, the monotone rearrangement.
pub fn sorted_1d_ot(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<Coupling> {
    if p.dim() != 1 {
        return Err(Error::DimensionMismatch { expected: 1, found: p.dim() });
    }
    check_dim(1, q.dim())?;
    let sorted = |m: &DiscreteMeasure| {
        let mut idx: Vec<usize> = (0..m.len()).collect();
        idx.sort_by(|&a, &b| m.points.point(a)[0].total_cmp(&m.points.point(b)[0]));
        idx
    };
    let (pi, qi) = (sorted(p), sorted(q));
    let mut plan = Vec::with_capacity(p.len() + q.len());
    let (mut a, mut b) = (0, 0);
    let mut left_p = p.weights[pi[0]];
    let mut left_q = q.weights[qi[0]];
    while a < pi.len() && b < qi.len() {
        let mass = left_p.min(left_q);
        if mass > 0.0 {
            plan.push((pi[a], qi[b], mass));
        }
        left_p -= mass;
        left_q -= mass;
        // exhausting both at once within rounding advances both
        let done_p = left_p <= 1e-15;
        let done_q = left_q <= 1e-15;
        if done_p {
            a += 1;
            if a < pi.len() {
                left_p = p.weights[pi[a]];
            }
        }
        if done_q {
            b += 1;
            if b < qi.len() {
                left_q = q.weights[qi[b]];
            }
        }
    }
    Coupling::new(p.clone(), q.clone(), plan)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> DiscreteMeasure {
        DiscreteMeasure::uniform(PointCloud::from_flat(1, xs.to_vec()).unwrap()).unwrap()
    }

    #[test]
    fn measure_validation() {
        let pts = PointCloud::from_flat(1, vec![0.0, 1.0]).unwrap();
        assert!(make_discrete_measure(pts.clone(), vec![0.5, 0.5]).is_ok());
        assert!(make_discrete_measure(pts.clone(), vec![0.5, 0.6]).is_err());
        assert!(make_discrete_measure(pts.clone(), vec![1.0, 0.0]).is_err());
        assert!(make_discrete_measure(pts, vec![0.5]).is_err());
        let dup = PointCloud::from_flat(1, vec![1.0, 1.0]).unwrap();
        assert!(make_discrete_measure(dup, vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn renormalizes_small_drift() {
        let pts = PointCloud::from_flat(1, vec![0.0, 1.0, 2.0]).unwrap();
        let m = make_discrete_measure(pts, vec![0.3333333333, 0.3333333333, 0.3333333333]).unwrap();
        assert!((m.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identical_measures_give_diagonal() {
        let p = DiscreteMeasure::uniform(
            PointCloud::from_rows(2, &[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]).unwrap(),
        )
        .unwrap();
        let pi = solve_discrete_ot(&p, &p).unwrap();
        assert_eq!(pi.cost(), 0.0);
        assert!(pi.entries().iter().all(|&(i, j, _)| i == j));
        let (a, b) = margins_of(&pi);
        assert_eq!(a.weights(), p.weights());
        assert_eq!(b.weights(), p.weights());
    }

    #[test]
    fn shift_on_the_line() {
        // monotone 2^2 + 2^2 over two = 4, crossed (9 + 1) / 2 = 5
        let p = line(&[0.0, 1.0]);
        let q = line(&[2.0, 3.0]);
        for pi in [solve_discrete_ot(&p, &q).unwrap(), brute_force_ot(&p, &q).unwrap(), sorted_1d_ot(&p, &q).unwrap()] {
            assert_eq!(pi.entries(), &[(0, 0, 0.5), (1, 1, 0.5)]);
            assert!((pi.cost() - 4.0).abs() < 1e-12);
            let s = coupling_support(&pi, SUPPORT_FLOOR);
            assert_eq!(s.xs().as_flat(), &[0.0, 1.0]);
            assert_eq!(s.ys().as_flat(), &[2.0, 3.0]);
        }
    }

    #[test]
    fn brute_force_single_point() {
        let p = line(&[4.0]);
        let q = line(&[-1.0]);
        assert_eq!(brute_force_ot(&p, &q).unwrap().entries(), &[(0, 0, 1.0)]);
    }

    #[test]
    fn brute_force_limits() {
        let p = line(&(0..9).map(f64::from).collect::<Vec<_>>());
        assert!(matches!(brute_force_ot(&p, &p), Err(Error::TooLarge { .. })));
        let w = make_discrete_measure(PointCloud::from_flat(1, vec![0.0, 1.0]).unwrap(), vec![0.25, 0.75]).unwrap();
        assert!(brute_force_ot(&w, &w).is_err());
    }

    #[test]
    fn sorted_plan_requires_line() {
        let p = DiscreteMeasure::uniform(PointCloud::from_rows(2, &[[0.0, 0.0]]).unwrap()).unwrap();
        assert!(sorted_1d_ot(&p, &p).is_err());
    }

    #[test]
    fn sorted_plan_on_permuted_input() {
        let p = line(&[3.0, 1.0, 2.0]);
        let pi = sorted_1d_ot(&p, &p).unwrap();
        assert!(pi.entries().iter().all(|&(i, j, _)| i == j));
    }

    #[test]
    fn non_uniform_weights_split() {
        let p = make_discrete_measure(PointCloud::from_flat(1, vec![0.0, 1.0]).unwrap(), vec![0.25, 0.75]).unwrap();
        let q = line(&[0.0, 0.5, 1.0, 1.5]);
        let a = solve_discrete_ot(&p, &q).unwrap();
        let b = sorted_1d_ot(&p, &q).unwrap();
        assert!((a.cost() - b.cost()).abs() < 1e-12);
        assert!(a.margin_error() < 1e-12);
    }

    #[test]
    fn perturbed_plan_detected() {
        let p = line(&[0.0, 1.0]);
        let pi = solve_discrete_ot(&p, &p).unwrap();
        let mut entries = pi.entries().to_vec();
        entries[0].2 += 1e-6;
        assert!(Coupling::new(p.clone(), p.clone(), entries.clone()).is_err());
        let bad = Coupling::from_entries_unchecked(p.clone(), p.clone(), entries).unwrap();
        let (a, _) = margins_of(&bad);
        assert!((a.weights()[0] - p.weights()[0]).abs() > 1e-9);
    }

    #[test]
    fn permutations_are_enumerated() {
        let mut perm = vec![0, 1, 2, 3];
        let mut count = 1;
        while next_permutation(&mut perm) {
            count += 1;
        }
        assert_eq!(count, 24);
    }
}

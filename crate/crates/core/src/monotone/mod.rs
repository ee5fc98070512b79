//! Certificates for (cyclical) monotonicity of finite pair sets and the
//! max-affine potential whose subdifferential extends a cyclically monotone
//! set to a maximal one.
//!
//! Cyclical monotonicity of pairs `(x_i, y_i)` means every cyclic sum
//! `sum_k <x_k, y_k - y_{k+1}>` (indices mod the cycle length) is
//! nonnegative. That is a no-negative-cycle condition on the complete digraph
//! with arc weights `w(i -> j) = <x_i, y_i - y_j>`.

mod paths;
mod potential;

pub use potential::{
    chain_components, eval_subdifferential, rockafellar_potential, rockafellar_potential_with_tol, MaxAffinePotential,
};

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{dot, PointCloud};
use paths::{feasible_labels, BilinearArcs};

/// Default relative tolerance for monotonicity certificates.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Largest pair set accepted by [`brute_force_cycle_oracle`].
pub const ORACLE_LIMIT: usize = 8;

/// A finite set of pairs `(x_i, y_i)` in `R^d x R^d`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairSet {
    xs: PointCloud,
    ys: PointCloud,
}

impl PairSet {
    pub fn new(xs: PointCloud, ys: PointCloud) -> Result<Self> {
        check_dim(xs.dim(), ys.dim())?;
        if xs.len() != ys.len() {
            return Err(Error::invalid(format!(
                "{} sources but {} targets",
                xs.len(),
                ys.len()
            )));
        }
        Ok(PairSet { xs, ys })
    }

    pub fn from_pairs<R: AsRef<[f64]>>(dim: usize, pairs: &[(R, R)]) -> Result<Self> {
        let xs: Vec<&[f64]> = pairs.iter().map(|(x, _)| x.as_ref()).collect();
        let ys: Vec<&[f64]> = pairs.iter().map(|(_, y)| y.as_ref()).collect();
        PairSet::new(PointCloud::from_rows(dim, &xs)?, PointCloud::from_rows(dim, &ys)?)
    }

    /// Graph sample of the identity map on `points`.
    pub fn identity(points: &PointCloud) -> Self {
        PairSet { xs: points.clone(), ys: points.clone() }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.xs.dim()
    }

    pub fn x(&self, i: usize) -> &[f64] {
        self.xs.point(i)
    }

    pub fn y(&self, i: usize) -> &[f64] {
        self.ys.point(i)
    }

    pub fn xs(&self) -> &PointCloud {
        &self.xs
    }

    pub fn ys(&self) -> &PointCloud {
        &self.ys
    }

    pub fn select(&self, indices: &[usize]) -> PairSet {
        PairSet { xs: self.xs.select(indices), ys: self.ys.select(indices) }
    }

    /// `sum_k <x_{c_k}, y_{c_k} - y_{c_{k+1}}>` with the cycle closed by
    /// `c_{len} := c_0`.
    pub fn cyclic_sum(&self, cycle: &[usize]) -> f64 {
        let k = cycle.len();
        (0..k)
            .map(|m| {
                let i = cycle[m];
                let j = cycle[(m + 1) % k];
                dot(self.x(i), self.y(i)) - dot(self.x(i), self.y(j))
            })
            .sum()
    }

    /// `1 + max_i |<x_i, y_i>|`, the scale of the bilinear cycle sums.
    pub fn cycle_scale(&self) -> f64 {
        1.0 + (0..self.len())
            .map(|i| dot(self.x(i), self.y(i)).abs())
            .fold(0.0, f64::max)
    }
}

/// A violating cycle: pair indices in cycle order and their cyclic sum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleWitness {
    pub cycle: Vec<usize>,
    pub deficit: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonotoneVerdict {
    pub holds: bool,
    pub witness: Option<CycleWitness>,
}

impl MonotoneVerdict {
    fn pass() -> Self {
        MonotoneVerdict { holds: true, witness: None }
    }

    fn fail(cycle: Vec<usize>, deficit: f64) -> Self {
        MonotoneVerdict { holds: false, witness: Some(CycleWitness { cycle, deficit }) }
    }
}

/// Pairwise monotonicity: `<y_j - y_i, x_j - x_i> >= -tol * scale` for all
/// pairs, `scale = 1 + (max |coordinate|)^2`. The witness is the most violated
/// pair, reported as a 2-cycle.
pub fn is_monotone(s: &PairSet, tol: f64) -> MonotoneVerdict {
    let m = s.xs.max_abs_coord().max(s.ys.max_abs_coord());
    let threshold = -tol * (1.0 + m * m);
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let v: f64 = (0..s.dim())
                .map(|k| (s.y(j)[k] - s.y(i)[k]) * (s.x(j)[k] - s.x(i)[k]))
                .sum();
            if v < threshold && worst.is_none_or(|w| v < w.2) {
                worst = Some((i, j, v));
            }
        }
    }
    match worst {
        None => MonotoneVerdict::pass(),
        Some((i, j, v)) => MonotoneVerdict::fail(vec![i, j], v),
    }
}

/// Cyclical monotonicity by negative-cycle detection on the complete digraph
/// with arc weights `<x_i, y_i - y_j> + tol * scale`, where
/// `scale = 1 + max |<x_i, y_i>|`. Zero-sum cycles pass; a cycle of length
/// `k` fails once its sum drops below `-k * tol * scale`.
pub fn is_cyclically_monotone(s: &PairSet, tol: f64) -> MonotoneVerdict {
    match certify(s, tol) {
        Ok(_) => MonotoneVerdict::pass(),
        Err(cycle) => {
            let deficit = s.cyclic_sum(&cycle);
            MonotoneVerdict::fail(cycle, deficit)
        }
    }
}

/// `<x_i, y_i>` for every pair.
fn own_products(s: &PairSet) -> Vec<f64> {
    (0..s.len()).map(|i| dot(s.x(i), s.y(i))).collect()
}

/// Labels `d` with `d_j <= d_i + w(i -> j) + tol * scale` on every arc, or a
/// violating cycle.
fn certify(s: &PairSet, tol: f64) -> std::result::Result<Vec<f64>, Vec<usize>> {
    let own = own_products(s);
    let arcs = BilinearArcs { dim: s.dim(), a: s.xs.as_flat(), b: s.ys.as_flat(), own: &own };
    feasible_labels(&arcs, tol * s.cycle_scale())
}

/// Direct check of the cyclic inequality over every simple cycle, for sets
/// of at most [`ORACLE_LIMIT`] pairs. Uses the same per-arc tolerance as
/// [`is_cyclically_monotone`]: a `k`-cycle violates when its cyclic sum is
/// below `-k * tol * scale`.
pub fn brute_force_cycle_oracle(s: &PairSet, tol: f64) -> Result<bool> {
    let n = s.len();
    if n > ORACLE_LIMIT {
        return Err(Error::TooLarge { size: n, limit: ORACLE_LIMIT });
    }
    let per_arc = tol * s.cycle_scale();
    let mut path = Vec::with_capacity(n);
    let mut used = vec![false; n];
    for start in 0..n {
        path.clear();
        path.push(start);
        used[start] = true;
        let ok = extend_cycles(s, per_arc, &mut path, &mut used);
        used[start] = false;
        if !ok {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Depth-first enumeration of simple cycles whose smallest index is
/// `path[0]`; returns false on the first violation.
fn extend_cycles(s: &PairSet, per_arc: f64, path: &mut Vec<usize>, used: &mut [bool]) -> bool {
    let k = path.len();
    if k >= 2 {
        // sum_i <x_i, y_i> versus sum_i <x_i, y_{i+1}> with y_{k+1} := y_1
        let own: f64 = path.iter().map(|&i| dot(s.x(i), s.y(i))).sum();
        let shifted: f64 = (0..k).map(|m| dot(s.x(path[m]), s.y(path[(m + 1) % k]))).sum();
        if own - shifted < -(k as f64) * per_arc {
            return false;
        }
    }
    for next in path[0] + 1..s.len() {
        if used[next] {
            continue;
        }
        used[next] = true;
        path.push(next);
        let ok = extend_cycles(s, per_arc, path, used);
        path.pop();
        used[next] = false;
        if !ok {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pairs1(p: &[(f64, f64)]) -> PairSet {
        let rows: Vec<([f64; 1], [f64; 1])> = p.iter().map(|&(x, y)| ([x], [y])).collect();
        PairSet::from_pairs(1, &rows).unwrap()
    }

    fn random_pairs(rng: &mut ChaCha8Rng, n: usize, d: usize) -> PairSet {
        let xs: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let ys: Vec<f64> = (0..n * d).map(|_| rng.random_range(-1.0..1.0)).collect();
        PairSet::new(PointCloud::from_flat(d, xs).unwrap(), PointCloud::from_flat(d, ys).unwrap())
            .unwrap()
    }

    #[test]
    fn increasing_pairs_are_monotone() {
        assert!(is_monotone(&pairs1(&[(0.0, 0.0), (1.0, 1.0)]), DEFAULT_TOL).holds);
    }

    #[test]
    fn swap_is_not_monotone() {
        let v = is_monotone(&pairs1(&[(0.0, 1.0), (1.0, 0.0)]), DEFAULT_TOL);
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_eq!(w.cycle, vec![0, 1]);
        assert_eq!(w.deficit, -1.0);
    }

    #[test]
    fn psd_linear_graph_is_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
        let a = &b * b.transpose();
        let mut rows = Vec::new();
        for _ in 0..20 {
            let x = nalgebra::DVector::from_fn(3, |_, _| rng.random_range(-2.0..2.0));
            let y = &a * &x;
            rows.push((x.as_slice().to_vec(), y.as_slice().to_vec()));
        }
        let s = PairSet::from_pairs(3, &rows).unwrap();
        // oracle: <A(x2-x1), x2-x1> >= 0 directly
        for (x1, _) in &rows {
            for (x2, _) in &rows {
                let dx = nalgebra::DVector::from_iterator(3, x2.iter().zip(x1).map(|(a, b)| a - b));
                assert!(dx.dot(&(&a * &dx)) >= -1e-12);
            }
        }
        assert!(is_monotone(&s, DEFAULT_TOL).holds);
    }

    #[test]
    fn swap_fails_cyclic_check_with_two_cycle() {
        let s = pairs1(&[(0.0, 1.0), (1.0, 0.0)]);
        // sum <x_i,y_i> = 0 < 1 = sum <x_i, y_{i+1}>
        let v = is_cyclically_monotone(&s, DEFAULT_TOL);
        assert!(!v.holds);
        let w = v.witness.unwrap();
        assert_eq!(w.cycle, vec![0, 1]);
        assert_eq!(w.deficit, -1.0);
        assert!(!brute_force_cycle_oracle(&s, DEFAULT_TOL).unwrap());
    }

    #[test]
    fn identity_pairs_are_cyclically_monotone() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_pairs(&mut rng, 30, 3);
        let id = PairSet::identity(s.xs());
        assert!(is_cyclically_monotone(&id, DEFAULT_TOL).holds);
    }

    #[test]
    fn single_pair_passes_oracle() {
        assert!(brute_force_cycle_oracle(&pairs1(&[(0.3, -4.0)]), DEFAULT_TOL).unwrap());
    }

    #[test]
    fn oracle_rejects_large_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_pairs(&mut rng, 9, 1);
        assert!(matches!(brute_force_cycle_oracle(&s, DEFAULT_TOL), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn checker_agrees_with_oracle_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut failures = 0;
        for trial in 0..100 {
            let d = 1 + trial % 3;
            // sorted 1-d data or near-identity maps pass, generic data fails
            let mut s = random_pairs(&mut rng, 6, d);
            if trial % 2 == 0 {
                let ys: Vec<f64> = s.xs().as_flat().iter().map(|x| 2.0 * x + 0.05 * rng.random_range(-1.0..1.0)).collect();
                s = PairSet::new(s.xs().clone(), PointCloud::from_flat(d, ys).unwrap()).unwrap();
            }
            let fast = is_cyclically_monotone(&s, DEFAULT_TOL);
            assert_eq!(fast.holds, brute_force_cycle_oracle(&s, DEFAULT_TOL).unwrap());
            if let Some(w) = fast.witness {
                failures += 1;
                assert!(w.deficit < -DEFAULT_TOL);
                assert!((s.cyclic_sum(&w.cycle) - w.deficit).abs() < 1e-12);
            }
        }
        assert!(failures > 10 && failures < 90);
    }
}

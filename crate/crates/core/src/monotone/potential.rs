use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::paths::{shortest_paths, BilinearArcs, PathOutcome};
use super::{certify, own_products, CycleWitness, MonotoneVerdict, PairSet, DEFAULT_TOL};
use crate::error::{check_dim, Error, Result};
use crate::geometry::{convex_hull_vertices, dot, PointCloud, PolytopeVertices};

/// Convex function `psi(x) = max_i (<slope_i, x> - intercept_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxAffinePotential {
    slopes: PointCloud,
    intercepts: Vec<f64>,
    base_index: usize,
}

impl MaxAffinePotential {
    pub fn new(slopes: PointCloud, intercepts: Vec<f64>, base_index: usize) -> Result<Self> {
        if slopes.is_empty() {
            return Err(Error::Empty("potential slopes"));
        }
        if slopes.len() != intercepts.len() {
            return Err(Error::invalid(format!(
                "{} slopes but {} intercepts",
                slopes.len(),
                intercepts.len()
            )));
        }
        if intercepts.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("non-finite intercept"));
        }
        if base_index >= slopes.len() {
            return Err(Error::invalid(format!("base index {base_index} out of range")));
        }
        Ok(MaxAffinePotential { slopes, intercepts, base_index })
    }

    pub fn dim(&self) -> usize {
        self.slopes.dim()
    }

    pub fn len(&self) -> usize {
        self.intercepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.intercepts.is_empty()
    }

    pub fn slopes(&self) -> &PointCloud {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    pub fn base_index(&self) -> usize {
        self.base_index
    }

    fn piece(&self, i: usize, x: &[f64]) -> f64 {
        dot(self.slopes.point(i), x) - self.intercepts[i]
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok((0..self.len()).map(|i| self.piece(i, x)).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Hull vertices of the slopes whose affine piece is within
    /// `tol * (1 + |psi(x)|)` of the maximum at `x`.
    pub fn subdifferential(&self, x: &[f64], tol: f64) -> Result<PolytopeVertices> {
        check_dim(self.dim(), x.len())?;
        let values: Vec<f64> = (0..self.len()).map(|i| self.piece(i, x)).collect();
        let top = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let cutoff = top - tol * (1.0 + top.abs());
        let active: Vec<usize> = (0..self.len()).filter(|&i| values[i] >= cutoff).collect();
        convex_hull_vertices(&self.slopes.select(&active))
    }
}

#[derive(Serialize, Deserialize)]
struct PotentialRepr {
    slopes: Vec<Vec<f64>>,
    intercepts: Vec<f64>,
    base_index: usize,
    dim: usize,
}

impl Serialize for MaxAffinePotential {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        PotentialRepr {
            slopes: self.slopes.to_rows(),
            intercepts: self.intercepts.clone(),
            base_index: self.base_index,
            dim: self.dim(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for MaxAffinePotential {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let repr = PotentialRepr::deserialize(deserializer)?;
        let slopes = PointCloud::from_rows(repr.dim, &repr.slopes).map_err(serde::de::Error::custom)?;
        MaxAffinePotential::new(slopes, repr.intercepts, repr.base_index)
            .map_err(serde::de::Error::custom)
    }
}

/// Subdifferential of `psi` at `x`; see [`MaxAffinePotential::subdifferential`].
pub fn eval_subdifferential(psi: &MaxAffinePotential, x: &[f64], tol: f64) -> Result<PolytopeVertices> {
    psi.subdifferential(x, tol)
}

/// Rockafellar's construction: `v_i` is the longest chain value
/// `sum <y_{j_k}, x_{j_{k+1}} - x_{j_k}>` from `base_index` to `i`, and the
/// potential is `max_i (v_i + <y_i, x - x_i>)`. Every input pair then
/// satisfies `y_i ∈ ∂psi(x_i)`. The set is certified at [`DEFAULT_TOL`].
pub fn rockafellar_potential(s: &PairSet, base_index: usize) -> Result<MaxAffinePotential> {
    rockafellar_potential_with_tol(s, base_index, DEFAULT_TOL)
}

/// [`rockafellar_potential`] with the certificate taken at `tol`.
pub fn rockafellar_potential_with_tol(s: &PairSet, base_index: usize, tol: f64) -> Result<MaxAffinePotential> {
    let n = s.len();
    if n == 0 {
        return Err(Error::Empty("pair set"));
    }
    if base_index >= n {
        return Err(Error::invalid(format!("base index {base_index} out of range for {n} pairs")));
    }
    let labels = certify(s, tol).map_err(|cycle| {
        let deficit = s.cyclic_sum(&cycle);
        Error::NotCyclicallyMonotone(MonotoneVerdict {
            holds: false,
            witness: Some(CycleWitness { cycle, deficit }),
        })
    })?;
    let scale = s.cycle_scale();
    let own = own_products(s);
    // Longest chains are shortest paths for the negated chain weights
    // <y_j, x_j - x_i> on arcs j -> i. That graph is the reversed
    // certificate graph reweighted by `own`, so `-labels - own` makes its
    // reduced weights nonnegative up to the certificate's slack and orders
    // the search. Requiring a minimal gain keeps zero-sum cycles (shared
    // sources or targets) from relaxing forever.
    let order: Vec<f64> = labels.iter().zip(&own).map(|(d, h)| -d - h).collect();
    let arcs = BilinearArcs { dim: s.dim(), a: s.ys().as_flat(), b: s.xs().as_flat(), own: &own };
    let distances = [1e-13, DEFAULT_TOL]
        .iter()
        .find_map(|rel| {
            match shortest_paths(n, |j, row| arcs.fill_row(j, row), 0.0, rel * scale, base_index, Some(&order)) {
                PathOutcome::Distances(d) => Some(d),
                PathOutcome::NegativeCycle => None,
            }
        })
        .ok_or_else(|| Error::Internal("positive chain cycle in a certified pair set".into()))?;
    let intercepts: Vec<f64> = (0..n).map(|i| own[i] + distances[i]).collect();
    MaxAffinePotential::new(s.ys().clone(), intercepts, base_index)
}

/// Groups of pair indices joined by zero-sum cycles (within
/// `tol * scale` per arc). Potentials built from two base indices of the same
/// group differ by a constant; across groups they generally do not.
///
/// All-pairs longest chains, O(n^3).
pub fn chain_components(s: &PairSet, tol: f64) -> Vec<Vec<usize>> {
    let n = s.len();
    let mut longest = vec![vec![f64::NEG_INFINITY; n]; n];
    for (j, row) in longest.iter_mut().enumerate() {
        for (i, cell) in row.iter_mut().enumerate() {
            *cell = if i == j { 0.0 } else { dot(s.y(j), s.x(i)) - dot(s.y(j), s.x(j)) };
        }
    }
    // Floyd-Warshall reads and writes the same matrix, so it indexes
    #[allow(clippy::needless_range_loop)]
    for k in 0..n {
        for j in 0..n {
            let via = longest[j][k];
            for i in 0..n {
                let cand = via + longest[k][i];
                if cand > longest[j][i] {
                    longest[j][i] = cand;
                }
            }
        }
    }
    let slack = tol * s.cycle_scale() * n as f64;
    let mut component = vec![usize::MAX; n];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..n {
        if component[i] != usize::MAX {
            continue;
        }
        let members: Vec<usize> = (i..n)
            .filter(|&j| component[j] == usize::MAX && longest[i][j] + longest[j][i] >= -slack)
            .collect();
        for &j in &members {
            component[j] = groups.len();
        }
        groups.push(members);
    }
    groups
}

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{check_dim, Error, Result};
use crate::geometry::{dist2, norm};
use crate::transport::LinearMap;

/// Single-valued reference map `T` against which estimates are scored.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MapOracle {
    /// `x -> A x` with `A` given by rows.
    Linear { matrix: Vec<Vec<f64>> },
    Identity,
    /// Piecewise-linear monotone map on the line through the knots,
    /// extended linearly beyond the outer knots.
    Sorted1d { knots_x: Vec<f64>, knots_y: Vec<f64> },
    /// Value of the nearest tabulated point.
    Tabulated { points: Vec<Vec<f64>>, values: Vec<Vec<f64>> },
    /// Radial map `x -> F(|x|^2) x / |x|` with `F` the chi-squared CDF with
    /// `dim` degrees of freedom: the transport from a standard Gaussian to
    /// the spherical uniform law on the unit ball.
    CenterOutwardGaussian { dim: usize },
}

impl MapOracle {
    pub fn linear(a: &LinearMap) -> Self {
        MapOracle::Linear { matrix: a.to_rows() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            MapOracle::Linear { matrix } => LinearMap::from_rows(matrix).map(|_| ()),
            MapOracle::Identity => Ok(()),
            MapOracle::Sorted1d { knots_x, knots_y } => {
                if knots_x.len() < 2 || knots_x.len() != knots_y.len() {
                    return Err(Error::invalid("sorted oracle needs at least two knots of each kind"));
                }
                if knots_x.windows(2).any(|w| !(w[1] > w[0])) {
                    return Err(Error::invalid("sorted oracle knots must increase strictly"));
                }
                if knots_y.windows(2).any(|w| !(w[1] >= w[0])) {
                    return Err(Error::invalid("sorted oracle values must be nondecreasing"));
                }
                Ok(())
            }
            MapOracle::Tabulated { points, values } => {
                if points.is_empty() || points.len() != values.len() {
                    return Err(Error::invalid("tabulated oracle needs matching non-empty tables"));
                }
                let d = points[0].len();
                if points.iter().chain(values).any(|p| p.len() != d) {
                    return Err(Error::invalid("tabulated oracle rows differ in dimension"));
                }
                Ok(())
            }
            MapOracle::CenterOutwardGaussian { dim } => {
                if *dim == 0 {
                    return Err(Error::invalid("dimension must be positive"));
                }
                Ok(())
            }
        }
    }

    /// Input dimension, if fixed by the oracle.
    pub fn dim(&self) -> Option<usize> {
        match self {
            MapOracle::Linear { matrix } => Some(matrix.len()),
            MapOracle::Identity => None,
            MapOracle::Sorted1d { .. } => Some(1),
            MapOracle::Tabulated { points, .. } => points.first().map(Vec::len),
            MapOracle::CenterOutwardGaussian { dim } => Some(*dim),
        }
    }

    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        if let Some(d) = self.dim() {
            check_dim(d, x.len())?;
        }
        Ok(match self {
            MapOracle::Linear { matrix } => {
                matrix.iter().map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
            }
            MapOracle::Identity => x.to_vec(),
            MapOracle::Sorted1d { knots_x, knots_y } => vec![interpolate(knots_x, knots_y, x[0])],
            MapOracle::Tabulated { points, values } => {
                let nearest = (0..points.len())
                    .min_by(|&a, &b| dist2(&points[a], x).total_cmp(&dist2(&points[b], x)))
                    .expect("validated non-empty");
                values[nearest].clone()
            }
            MapOracle::CenterOutwardGaussian { dim } => {
                let r = norm(x);
                if r == 0.0 {
                    return Ok(vec![0.0; *dim]);
                }
                let chi = ChiSquared::new(*dim as f64).map_err(|e| Error::Internal(e.to_string()))?;
                let f = chi.cdf(r * r);
                x.iter().map(|c| f * c / r).collect()
            }
        })
    }

    /// Lipschitz constant when it is available in closed form.
    pub fn lipschitz(&self) -> Option<f64> {
        match self {
            MapOracle::Linear { matrix } => LinearMap::from_rows(matrix).ok().map(|a| a.operator_norm()),
            MapOracle::Identity => Some(1.0),
            MapOracle::Sorted1d { knots_x, knots_y } => Some(
                knots_x
                    .windows(2)
                    .zip(knots_y.windows(2))
                    .map(|(x, y)| (y[1] - y[0]) / (x[1] - x[0]))
                    .fold(0.0, f64::max),
            ),
            MapOracle::Tabulated { .. } | MapOracle::CenterOutwardGaussian { .. } => None,
        }
    }
}

fn interpolate(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let n = xs.len();
    // segment k spans knots k and k + 1; outer segments extend linearly
    let k = match xs.partition_point(|&k| k <= x) {
        0 => 0,
        p if p >= n => n - 2,
        p => p - 1,
    };
    let t = (x - xs[k]) / (xs[k + 1] - xs[k]);
    ys[k] + t * (ys[k + 1] - ys[k])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_and_identity() {
        let a = MapOracle::Linear { matrix: vec![vec![2.0, 0.0], vec![0.0, 1.0]] };
        assert_eq!(a.eval(&[1.0, 3.0]).unwrap(), vec![2.0, 3.0]);
        assert!((a.lipschitz().unwrap() - 2.0).abs() < 1e-12);
        assert!(a.eval(&[1.0]).is_err());
        assert_eq!(MapOracle::Identity.eval(&[4.0, 5.0]).unwrap(), vec![4.0, 5.0]);
    }

    #[test]
    fn sorted_interpolation() {
        let o = MapOracle::Sorted1d { knots_x: vec![0.0, 1.0, 2.0], knots_y: vec![0.0, 2.0, 3.0] };
        o.validate().unwrap();
        assert_eq!(o.eval(&[0.5]).unwrap(), vec![1.0]);
        assert_eq!(o.eval(&[1.5]).unwrap(), vec![2.5]);
        assert_eq!(o.eval(&[-1.0]).unwrap(), vec![-2.0]);
        assert_eq!(o.eval(&[3.0]).unwrap(), vec![4.0]);
        assert_eq!(o.lipschitz(), Some(2.0));
        let bad = MapOracle::Sorted1d { knots_x: vec![0.0, 0.0], knots_y: vec![0.0, 1.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn tabulated_nearest() {
        let o = MapOracle::Tabulated {
            points: vec![vec![0.0], vec![1.0]],
            values: vec![vec![5.0], vec![7.0]],
        };
        assert_eq!(o.eval(&[0.4]).unwrap(), vec![5.0]);
        assert_eq!(o.eval(&[0.6]).unwrap(), vec![7.0]);
    }

    #[test]
    fn gaussian_to_ball_is_radial() {
        let o = MapOracle::CenterOutwardGaussian { dim: 2 };
        // in the plane F(r^2) = 1 - exp(-r^2 / 2)
        let y = o.eval(&[0.0, 2.0]).unwrap();
        assert!(y[0].abs() < 1e-15);
        assert!((y[1] - (1.0 - (-2.0f64).exp())).abs() < 1e-12);
        assert_eq!(o.eval(&[0.0, 0.0]).unwrap(), vec![0.0, 0.0]);
        assert!(norm(&o.eval(&[30.0, -40.0]).unwrap()) <= 1.0);
    }

    #[test]
    fn json_shape() {
        let o = MapOracle::Sorted1d { knots_x: vec![0.0, 1.0], knots_y: vec![0.0, 2.0] };
        let s = serde_json::to_string(&o).unwrap();
        assert_eq!(s, r#"{"kind":"sorted1d","knots_x":[0.0,1.0],"knots_y":[0.0,2.0]}"#);
        assert_eq!(serde_json::from_str::<MapOracle>(&s).unwrap(), o);
    }
}

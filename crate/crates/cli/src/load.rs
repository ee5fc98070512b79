//! Point, pair and measure ingestion from CSV or JSON files.

use std::fs;
use std::path::Path;

use mtl_core::geometry::PointCloud;
use mtl_core::io::{from_json, MeasureDoc, PairsDoc, PointsDoc};
use mtl_core::monotone::PairSet;
use mtl_core::transport::DiscreteMeasure;

/// What a file was read as.
#[derive(Debug)]
pub enum Loaded {
    Cloud(PointCloud),
    Pairs(PairSet),
    Weighted(DiscreteMeasure),
}

/// Interpretation a command asks for; resolves column counts without `--dim`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Points,
    Pairs,
    Measure,
}

/// Failure to ingest a file; always a usage error.
#[derive(Debug)]
pub struct LoadError(pub String);

impl std::fmt::Display for LoadError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn fail<T>(path: &Path, msg: impl std::fmt::Display) -> Result<T, LoadError> {
    Err(LoadError(format!("{}: {msg}", path.display())))
}

/// Reads `path` as CSV, or as JSON when the extension is `.json` or the
/// first non-blank byte is `{`.
///
/// CSV rows hold `d` (points), `2d` (pairs: x then y) or `d + 1` (weighted
/// points) numeric columns. Lines starting with `#` are comments and a
/// non-numeric first row is a header. With `dim` set, `2d` wins over
/// `d + 1` unless `weights_col` is given.
pub fn load_points(
    path: &Path,
    dim: Option<usize>,
    expect: Option<Expect>,
    weights_col: Option<usize>,
) -> Result<Loaded, LoadError> {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => return fail(path, e),
    };
    let is_json = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
        || text.trim_start().starts_with('{');
    if is_json {
        load_json(path, &text, dim, expect)
    } else {
        let rows = parse_csv(path, &text)?;
        shape_rows(path, rows, dim, expect, weights_col)
    }
}

fn load_json(path: &Path, text: &str, dim: Option<usize>, expect: Option<Expect>) -> Result<Loaded, LoadError> {
    let value: serde_json::Value = match from_json(text) {
        Ok(v) => v,
        Err(e) => return fail(path, e),
    };
    let wrap = |r: mtl_core::Result<Loaded>| r.or_else(|e| fail(path, e));
    if value.get("xs").is_some() {
        let doc: PairsDoc = from_json(text).or_else(|e| fail(path, e))?;
        return wrap(doc.to_pairs(dim).map(Loaded::Pairs));
    }
    if value.get("weights").is_some() || expect == Some(Expect::Measure) {
        let doc: MeasureDoc = from_json(text).or_else(|e| fail(path, e))?;
        return wrap(doc.to_measure(dim).map(Loaded::Weighted));
    }
    let doc: PointsDoc = from_json(text).or_else(|e| fail(path, e))?;
    wrap(doc.to_cloud(dim).map(Loaded::Cloud))
}

/// Numeric rows with their 1-based line numbers. Fields are plain
/// comma-separated numbers; quoting is not supported.
fn parse_csv(path: &Path, text: &str) -> Result<Vec<(u64, Vec<f64>)>, LoadError> {
    let mut rows = Vec::new();
    let mut seen_any = false;
    for (k, raw) in text.lines().enumerate() {
        let line = k as u64 + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                if let Some(bad) = v.iter().position(|x| !x.is_finite()) {
                    return fail(path, format!("line {line}: column {} is not finite", bad + 1));
                }
                rows.push((line, v));
            }
            // a header is only allowed before any data and must be all text
            Err(_) if !seen_any && fields.iter().all(|f| f.parse::<f64>().is_err()) => {}
            Err(_) => {
                let col = fields.iter().position(|f| f.parse::<f64>().is_err()).unwrap_or(0);
                return fail(path, format!("line {line}: column {} is not a number", col + 1));
            }
        }
        seen_any = true;
    }
    if rows.is_empty() {
        return fail(path, "no data rows");
    }
    let width = rows[0].1.len();
    if let Some((line, r)) = rows.iter().find(|(_, r)| r.len() != width) {
        return fail(path, format!("line {line}: expected {width} columns, found {}", r.len()));
    }
    Ok(rows)
}

fn shape_rows(
    path: &Path,
    rows: Vec<(u64, Vec<f64>)>,
    dim: Option<usize>,
    expect: Option<Expect>,
    weights_col: Option<usize>,
) -> Result<Loaded, LoadError> {
    let c = rows[0].1.len();
    if let Some(w) = weights_col {
        if w >= c {
            return fail(path, format!("weights column {w} out of range for {c} columns"));
        }
        if c < 2 || dim.is_some_and(|d| d + 1 != c) {
            return fail(path, format!("{c} columns do not hold points plus one weight column"));
        }
        return weighted(path, &rows, w);
    }
    let kind = match (dim, expect) {
        (Some(0), _) => return fail(path, "dimension must be positive"),
        (Some(d), _) if c == d => Expect::Points,
        (Some(d), _) if c == 2 * d => Expect::Pairs,
        (Some(d), _) if c == d + 1 => Expect::Measure,
        (Some(d), _) => return fail(path, format!("{c} columns fit neither d = {d}, 2d nor d + 1")),
        (None, Some(Expect::Pairs)) if c.is_multiple_of(2) => Expect::Pairs,
        (None, Some(Expect::Points | Expect::Measure)) => Expect::Points,
        (None, _) => return fail(path, format!("{c} columns are ambiguous without --dim")),
    };
    let to_cloud = |d: usize, lo: usize| {
        let flat: Vec<f64> = rows.iter().flat_map(|(_, r)| r[lo..lo + d].iter().copied()).collect();
        PointCloud::from_flat(d, flat)
    };
    let out = match kind {
        Expect::Points => to_cloud(c, 0).map(Loaded::Cloud),
        Expect::Pairs => to_cloud(c / 2, 0)
            .and_then(|xs| to_cloud(c / 2, c / 2).and_then(|ys| PairSet::new(xs, ys)))
            .map(Loaded::Pairs),
        Expect::Measure => return weighted(path, &rows, c - 1),
    };
    out.or_else(|e| fail(path, e))
}

fn weighted(path: &Path, rows: &[(u64, Vec<f64>)], w: usize) -> Result<Loaded, LoadError> {
    let c = rows[0].1.len();
    let mut flat = Vec::with_capacity(rows.len() * (c - 1));
    let mut weights = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if r[w] < 0.0 {
            return fail(path, format!("line {line}: negative weight"));
        }
        weights.push(r[w]);
        flat.extend(r.iter().enumerate().filter(|&(k, _)| k != w).map(|(_, v)| *v));
    }
    let total: f64 = weights.iter().sum();
    if total <= 0.0 {
        return fail(path, "weights sum to zero");
    }
    // files carry relative masses
    weights.iter_mut().for_each(|v| *v /= total);
    PointCloud::from_flat(c - 1, flat)
        .and_then(|p| DiscreteMeasure::new(p, weights))
        .map(Loaded::Weighted)
        .or_else(|e| fail(path, e))
}

impl Loaded {
    pub fn into_cloud(self, path: &Path) -> Result<PointCloud, LoadError> {
        match self {
            Loaded::Cloud(c) => Ok(c),
            Loaded::Weighted(m) => Ok(m.points().clone()),
            Loaded::Pairs(_) => fail(path, "expected points, found pairs"),
        }
    }

    pub fn into_pairs(self, path: &Path) -> Result<PairSet, LoadError> {
        match self {
            Loaded::Pairs(s) => Ok(s),
            _ => fail(path, "expected pairs x_1..x_d, y_1..y_d"),
        }
    }

    pub fn into_measure(self, path: &Path) -> Result<DiscreteMeasure, LoadError> {
        match self {
            Loaded::Weighted(m) => Ok(m),
            Loaded::Cloud(c) => DiscreteMeasure::uniform(c).or_else(|e| fail(path, e)),
            Loaded::Pairs(_) => fail(path, "expected points, found pairs"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(text: &str) -> Result<Vec<(u64, Vec<f64>)>, LoadError> {
        parse_csv(Path::new("t.csv"), text)
    }

    #[test]
    fn header_comments_and_blank_lines() {
        let r = rows("x,y\n# note\n1,2\n\n3, 4\n").unwrap();
        assert_eq!(r, vec![(3, vec![1.0, 2.0]), (5, vec![3.0, 4.0])]);
    }

    #[test]
    fn bad_rows_name_their_line() {
        let e = rows("1,2\n3,oops\n").unwrap_err();
        assert!(e.0.contains("line 2: column 2"), "{e}");
        let e = rows("1,2\n3\n").unwrap_err();
        assert!(e.0.contains("line 2: expected 2 columns"), "{e}");
        let e = rows("1,2\n3,inf\n").unwrap_err();
        assert!(e.0.contains("not finite"), "{e}");
    }

    #[test]
    fn column_counts_pick_the_kind() {
        let p = Path::new("t.csv");
        let three = rows("1,2,3\n4,5,6\n").unwrap();
        assert!(matches!(shape_rows(p, three.clone(), Some(3), None, None), Ok(Loaded::Cloud(_))));
        assert!(matches!(shape_rows(p, three.clone(), Some(2), None, None), Ok(Loaded::Weighted(_))));
        assert!(shape_rows(p, three.clone(), None, None, None).is_err());
        assert!(shape_rows(p, three, Some(4), None, None).is_err());
        let two = rows("0,1\n1,0\n").unwrap();
        assert!(matches!(shape_rows(p, two.clone(), Some(1), None, None), Ok(Loaded::Pairs(_))));
        assert!(matches!(shape_rows(p, two.clone(), None, Some(Expect::Pairs), None), Ok(Loaded::Pairs(_))));
        let weighted_rows = rows("3,1\n1,0\n").unwrap();
        match shape_rows(p, weighted_rows, Some(1), None, Some(0)).unwrap() {
            Loaded::Weighted(m) => {
                assert_eq!(m.weights(), &[0.75, 0.25]);
                assert_eq!(m.points().as_flat(), &[1.0, 0.0]);
            }
            other => panic!("{other:?}"),
        }
    }
}

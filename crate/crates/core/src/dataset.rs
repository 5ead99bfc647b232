//! Labeled point sets, the canonical synthetic generators, and CSV I/O.
//!
//! The CSV layout is a header `y,x1,...,xd` followed by one row per point,
//! label first. Labels are written as `1`/`-1`; coordinates use Rust's
//! shortest round-trip float formatting, so `read_csv(write_csv(d)) == d`.

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::linalg;

/// The four support vectors of the canonical dataset, positive class.
/// Their negations carry label `-1`.
pub const SUPPORT_VECTORS: [[f64; 2]; 2] = [[0.5, 1.5], [1.5, 0.5]];

/// Default filler multipliers for [`paper_dataset`].
pub const DEFAULT_FILLERS: [u32; 3] = [2, 3, 4];

/// An immutable set of labeled points `(x_j, y_j)` with `y_j ∈ {-1, +1}`.
///
/// Points are stored row-major. Labels are kept as signed floats so that
/// `y_j * x_j` needs no branching.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    points: Vec<f64>,
    labels: Vec<f64>,
    dim: usize,
}

impl Dataset {
    /// Builds a dataset, validating shapes, labels and finiteness.
    pub fn new(points: Vec<Vec<f64>>, labels: Vec<f64>) -> Result<Self> {
        if points.is_empty() {
            return Err(invalid("points", "dataset must contain at least one point"));
        }
        if points.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: labels.len(),
            });
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(invalid("points", "points must have dimension >= 1"));
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(invalid("points", "coordinates must be finite"));
            }
            flat.extend_from_slice(p);
        }
        if let Some(bad) = labels.iter().find(|&&y| y != 1.0 && y != -1.0) {
            return Err(invalid("labels", format!("label must be ±1, got {bad}")));
        }
        Ok(Self {
            points: flat,
            labels,
            dim,
        })
    }

    pub fn n(&self) -> usize {
        self.labels.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j * self.dim..(j + 1) * self.dim]
    }

    pub fn label(&self, j: usize) -> f64 {
        self.labels[j]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    /// Iterates over `(x_j, y_j)`.
    pub fn iter(&self) -> impl Iterator<Item = (&[f64], f64)> + '_ {
        self.points
            .chunks_exact(self.dim)
            .zip(self.labels.iter().copied())
    }

    /// Row-major copy of the signed points `y_j * x_j`.
    pub fn signed_points(&self) -> Vec<f64> {
        self.iter()
            .flat_map(|(x, y)| x.iter().map(move |v| y * v))
            .collect()
    }

    pub fn max_norm(&self) -> f64 {
        self.iter()
            .map(|(x, _)| linalg::norm(x))
            .fold(0.0, f64::max)
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&y| y > 0.0) && self.labels.iter().any(|&y| y < 0.0)
    }

    /// Returns a copy with every point mapped through `f`.
    pub fn map_points(&self, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Result<Self> {
        let points = self.iter().map(|(x, _)| f(x)).collect();
        Self::new(points, self.labels.clone())
    }
}

/// The synthetic set with support vectors `±(0.5, 1.5)`, `±(1.5, 0.5)` plus,
/// for every multiplier `m`, the filler points `m·v` with the label of `v`.
///
/// With the default fillers `{2, 3, 4}` this gives `n = 16`, hard-margin
/// solution `(0.5, 0.5)` and `λ' = 8/n = 0.5`.
pub fn paper_dataset(fillers: &[u32]) -> Result<Dataset> {
    let mut multipliers = fillers.to_vec();
    multipliers.sort_unstable();
    if let Some(&m) = multipliers.iter().find(|&&m| m < 2) {
        return Err(invalid(
            "filler_multipliers",
            format!("multipliers must be integers >= 2, got {m}"),
        ));
    }
    if multipliers.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid(
            "filler_multipliers",
            "multipliers must be distinct",
        ));
    }

    let base: Vec<(Vec<f64>, f64)> = SUPPORT_VECTORS
        .iter()
        .map(|v| (v.to_vec(), 1.0))
        .chain(SUPPORT_VECTORS.iter().map(|v| (vec![-v[0], -v[1]], -1.0)))
        .collect();

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (v, y) in &base {
        points.push(v.clone());
        labels.push(*y);
    }
    for &m in &multipliers {
        let m = f64::from(m);
        for (v, y) in &base {
            points.push(v.iter().map(|c| m * c).collect());
            labels.push(*y);
        }
    }
    Dataset::new(points, labels)
}

/// Multiplies coordinate `axis` of every point by `factor`.
pub fn scaled_dataset(base: &Dataset, axis: usize, factor: f64) -> Result<Dataset> {
    if axis >= base.dim() {
        return Err(invalid(
            "axis",
            format!("axis {axis} out of range for dimension {}", base.dim()),
        ));
    }
    if factor == 0.0 || !factor.is_finite() {
        return Err(invalid("factor", "factor must be finite and nonzero"));
    }
    base.map_points(|x| {
        let mut x = x.to_vec();
        x[axis] *= factor;
        x
    })
}

/// A linearly separable sample with margin at least `margin` along a random
/// unit direction `u`.
///
/// Uses ChaCha8 seeded through `seed_from_u64` and standard normal draws,
/// so the output is a pure function of the arguments. Points 0 and 1 are
/// forced into opposite classes.
pub fn random_separable(seed: u64, n: usize, d: usize, margin: f64) -> Result<Dataset> {
    Ok(random_separable_with_direction(seed, n, d, margin)?.0)
}

/// Same as [`random_separable`], also returning the separating direction.
pub fn random_separable_with_direction(
    seed: u64,
    n: usize,
    d: usize,
    margin: f64,
) -> Result<(Dataset, Vec<f64>)> {
    if n < 2 {
        return Err(invalid("n", "need at least two points"));
    }
    if d == 0 {
        return Err(invalid("d", "dimension must be >= 1"));
    }
    if !(margin > 0.0 && margin.is_finite()) {
        return Err(invalid("margin", "margin must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
    let len = linalg::norm(&u);
    if len == 0.0 {
        u = vec![0.0; d];
        u[0] = 1.0;
    } else {
        u.iter_mut().for_each(|c| *c /= len);
    }

    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let y = match j {
            0 => 1.0,
            1 => -1.0,
            _ if rng.random::<bool>() => 1.0,
            _ => -1.0,
        };
        let mut x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let s = linalg::dot(&x, &u);
        // move x along u so that y * x·u = margin + |s|
        linalg::axpy(y * (margin + s.abs()) - s, &u, &mut x);
        points.push(x);
        labels.push(y);
    }
    Ok((Dataset::new(points, labels)?, u))
}

/// Serializes a dataset to the CSV layout described in the module docs.
pub fn to_csv_string(dataset: &Dataset) -> String {
    let mut out = String::from("y");
    for i in 1..=dataset.dim() {
        let _ = write!(out, ",x{i}");
    }
    out.push('\n');
    for (x, y) in dataset.iter() {
        out.push_str(if y > 0.0 { "1" } else { "-1" });
        for v in x {
            let _ = write!(out, ",{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn write_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, to_csv_string(dataset)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, path)
}

/// Parses dataset CSV text; `origin` is only used in error messages.
pub fn parse_csv(text: &str, origin: impl AsRef<Path>) -> Result<Dataset> {
    let origin = origin.as_ref();
    let parse_err = |line: u64, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| parse_err(1, e.to_string()))?
        .clone();
    if header.len() < 2 || &header[0] != "y" {
        return Err(parse_err(1, "header must be `y,x1,...,xd`".into()));
    }
    let d = header.len() - 1;

    let mut points = Vec::new();
    let mut labels = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            parse_err(line, e.to_string())
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != d + 1 {
            return Err(parse_err(
                line,
                format!("expected {} fields, found {}", d + 1, record.len()),
            ));
        }
        let label: f64 = record[0]
            .parse()
            .map_err(|_| parse_err(line, format!("non-numeric label `{}`", &record[0])))?;
        if label != 1.0 && label != -1.0 {
            return Err(parse_err(
                line,
                format!("label must be ±1, got `{}`", &record[0]),
            ));
        }
        let mut x = Vec::with_capacity(d);
        for field in record.iter().skip(1) {
            let v: f64 = field
                .parse()
                .map_err(|_| parse_err(line, format!("non-numeric coordinate `{field}`")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite coordinate `{field}`")));
            }
            x.push(v);
        }
        points.push(x);
        labels.push(label);
    }
    if points.is_empty() {
        return Err(parse_err(1, "no data rows".into()));
    }
    Dataset::new(points, labels)
}

//! Weighted point clouds standing in for Radon measures.
//!
//! Every integral `∫_{B(x,t)} F dμ` is read as `Σ_{|p_i - x| < t} w_i F(p_i)`:
//! balls are open, so points exactly on the sphere do not count.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::KdTree;

/// Open ball `B(center, radius)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ball {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Vec<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidArgument(format!("ball radius {radius} must be positive")));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        dist2(&self.center, p) < self.radius * self.radius
    }
}

pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    dist2(a, b).sqrt()
}

/// Immutable weighted point cloud with an exact spatial index.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    d: usize,
    n: usize,
    weights: Vec<f64>,
    total_mass: f64,
    signed: bool,
    resolution: f64,
    index: KdTree,
    meta: serde_json::Value,
}

/// Validates and indexes a point cloud. Points keep their input order.
pub fn build_measure(points: &[Vec<f64>], weights: &[f64], n: usize) -> Result<DiscreteMeasure> {
    let d = points.first().ok_or(Error::Empty)?.len();
    let mut coords = Vec::with_capacity(points.len() * d);
    for (i, p) in points.iter().enumerate() {
        if p.len() != d {
            return Err(Error::DimensionMismatch {
                index: i,
                expected: d,
                found: p.len(),
            });
        }
        coords.extend_from_slice(p);
    }
    DiscreteMeasure::from_flat(d, n, coords, weights.to_vec())
}

impl DiscreteMeasure {
    /// Builds a nonnegative measure from row-major coordinates.
    pub fn from_flat(d: usize, n: usize, coords: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if let Some((i, &w)) = weights.iter().enumerate().find(|(_, w)| **w < 0.0) {
            return Err(Error::NegativeWeight { index: i, value: w });
        }
        Self::build(d, n, coords, weights, false)
    }

    fn build(d: usize, n: usize, coords: Vec<f64>, weights: Vec<f64>, signed: bool) -> Result<Self> {
        if weights.is_empty() || d == 0 {
            return Err(Error::Empty);
        }
        if coords.len() != weights.len() * d {
            return Err(Error::LengthMismatch {
                expected: weights.len() * d,
                found: coords.len(),
            });
        }
        if n < 1 || n > d {
            return Err(Error::IntrinsicDimension { n, d });
        }
        if let Some(i) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("point {} coordinate {}", i / d, i % d),
            });
        }
        if let Some(i) = weights.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("weight {i}"),
            });
        }
        let total_mass = crate::par::pairwise_sum(&weights);
        let index = KdTree::new(d, coords);
        let resolution = median_nn_distance(&index);
        Ok(DiscreteMeasure {
            d,
            n,
            weights,
            total_mass,
            signed,
            resolution,
            index,
            meta: serde_json::Value::Null,
        })
    }

    pub fn with_meta(mut self, meta: serde_json::Value) -> Self {
        self.meta = meta;
        self
    }

    pub fn meta(&self) -> &serde_json::Value {
        &self.meta
    }

    pub fn dim_ambient(&self) -> usize {
        self.d
    }

    pub fn dim_intrinsic(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        self.index.point(i)
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        (0..self.len()).map(move |i| self.point(i))
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Signed sum of the weights.
    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    /// `‖ν‖ = Σ |w_i|`.
    pub fn total_variation(&self) -> f64 {
        if self.signed {
            self.weights.iter().map(|w| w.abs()).sum()
        } else {
            self.total_mass
        }
    }

    pub fn is_signed(&self) -> bool {
        self.signed
    }

    /// Median nearest-neighbour distance `h(μ)`; the smallest scale at which
    /// densities and coefficients are meaningful.
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn index(&self) -> &KdTree {
        &self.index
    }

    pub(crate) fn require_nonnegative(&self) -> Result<()> {
        if self.signed {
            Err(Error::SignedMeasure)
        } else {
            Ok(())
        }
    }

    /// `μ(B)` summed over the open ball.
    pub fn ball_mass(&self, ball: &Ball) -> f64 {
        self.mass_within(&ball.center, ball.radius)
    }

    pub(crate) fn mass_within(&self, x: &[f64], r: f64) -> f64 {
        let mut idx = Vec::new();
        self.index.for_each_within(x, r, false, |i, _| idx.push(i));
        // fixed summation order regardless of tree traversal
        idx.sort_unstable();
        idx.iter().map(|&i| self.weights[i]).sum()
    }

    /// Indices of the points in the open ball, ascending.
    pub fn ball_indices(&self, x: &[f64], r: f64) -> Vec<usize> {
        self.index.within(x, r)
    }

    /// `μ(B(x, r)) / r^n` for each radius.
    pub fn upper_density(&self, x: &[f64], radii: &[f64]) -> Vec<f64> {
        radii
            .iter()
            .map(|&r| self.mass_within(x, r) / r.powi(self.n as i32))
            .collect()
    }

    /// Empirical lower and upper AD-regularity constants over `sample_count`
    /// pairs `(x, r)` with `x` a support point and `r` log-uniform in the range.
    /// The sampling stream is fixed, so repeated calls agree.
    pub fn ad_regularity(&self, scale_min: f64, scale_max: f64, sample_count: usize) -> Result<(f64, f64)> {
        Ok(summarize_ratios(&self.ad_samples(scale_min, scale_max, sample_count)?))
    }

    /// The individual ratios behind [`ad_regularity`](Self::ad_regularity).
    pub fn ad_samples(&self, scale_min: f64, scale_max: f64, sample_count: usize) -> Result<Vec<f64>> {
        self.require_nonnegative()?;
        if !(scale_min > 0.0 && scale_min < scale_max) || sample_count == 0 {
            return Err(Error::InvalidArgument(format!(
                "empty scale range [{scale_min}, {scale_max}] or zero samples"
            )));
        }
        let support: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect();
        if support.is_empty() {
            return Err(Error::Empty);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        let (lo, hi) = (scale_min.ln(), scale_max.ln());
        let draws: Vec<(usize, f64)> = (0..sample_count)
            .map(|_| {
                let i = support[rng.gen_range(0..support.len())];
                (i, rng.gen_range(lo..=hi).exp())
            })
            .collect();
        Ok(crate::par::map_slice(&draws, |&(i, r)| {
            self.mass_within(self.point(i), r) / r.powi(self.n as i32)
        }))
    }

    /// The measure `f μ`. Negative products yield a signed measure.
    pub fn multiply_density(&self, f: &[f64]) -> Result<DiscreteMeasure> {
        if f.len() != self.len() {
            return Err(Error::LengthMismatch {
                expected: self.len(),
                found: f.len(),
            });
        }
        if let Some(i) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: format!("density {i}"),
            });
        }
        let weights: Vec<f64> = self.weights.iter().zip(f).map(|(w, g)| w * g).collect();
        let signed = weights.iter().any(|w| *w < 0.0);
        let total_mass = crate::par::pairwise_sum(&weights);
        Ok(DiscreteMeasure {
            d: self.d,
            n: self.n,
            weights,
            total_mass,
            signed,
            resolution: self.resolution,
            index: self.index.clone(),
            meta: self.meta.clone(),
        })
    }

    /// A measure on the points of `self` selected by `keep`, in order.
    pub fn restrict(&self, keep: &[usize]) -> Result<DiscreteMeasure> {
        let mut coords = Vec::with_capacity(keep.len() * self.d);
        let mut weights = Vec::with_capacity(keep.len());
        for &i in keep {
            coords.extend_from_slice(self.point(i));
            weights.push(self.weights[i]);
        }
        Self::build(self.d, self.n, coords, weights, self.signed)
    }

    /// Maximum pairwise distance of the positive-weight points.
    pub fn diameter(&self) -> f64 {
        let support: Vec<usize> = (0..self.len()).filter(|&i| self.weights[i] != 0.0).collect();
        exact_diameter(&self.index, &support)
    }

    pub fn to_file(&self) -> MeasureFile {
        MeasureFile {
            d: self.d,
            n: self.n,
            points: self.points().map(|p| p.to_vec()).collect(),
            weights: self.weights.clone(),
            meta: self.meta.clone(),
        }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<()> {
        serde_json::to_writer_pretty(w, &self.to_file())?;
        Ok(())
    }

    /// CSV with header `x1,...,xd,w`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=self.d).map(|k| format!("x{k}")).collect();
        header.push("w".into());
        wr.write_record(&header)?;
        for i in 0..self.len() {
            let mut row: Vec<String> = self.point(i).iter().map(|v| v.to_string()).collect();
            row.push(self.weights[i].to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self> {
        let file: MeasureFile = serde_json::from_reader(r)?;
        file.into_measure()
    }

    /// Reads the CSV format; the intrinsic dimension is not stored there.
    pub fn read_csv<R: Read>(r: R, n: usize) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let cols = rd.headers()?.len();
        if cols < 2 {
            return Err(Error::InvalidArgument("csv needs at least x1 and w columns".into()));
        }
        let d = cols - 1;
        let mut coords = Vec::new();
        let mut weights = Vec::new();
        for (row, rec) in rd.records().enumerate() {
            let rec = rec?;
            if rec.len() != cols {
                return Err(Error::DimensionMismatch {
                    index: row,
                    expected: d,
                    found: rec.len().saturating_sub(1),
                });
            }
            for (k, field) in rec.iter().enumerate() {
                let v: f64 = field.trim().parse().map_err(|_| {
                    Error::InvalidArgument(format!("row {row} column {k}: not a number: {field:?}"))
                })?;
                if !v.is_finite() {
                    return Err(Error::NonFinite {
                        context: format!("csv row {row} column {k}"),
                    });
                }
                if k < d {
                    coords.push(v);
                } else {
                    weights.push(v);
                }
            }
        }
        Self::from_flat(d, n, coords, weights)
    }

    /// Reads `.json` or `.csv` by extension; CSV files default to `n = 1`.
    pub fn load(path: &Path, n_for_csv: usize) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("csv") => Self::read_csv(std::io::BufReader::new(f), n_for_csv),
            _ => Self::read_json(std::io::BufReader::new(f)),
        }
    }
}

/// On-disk JSON form of a measure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MeasureFile {
    pub d: usize,
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    #[serde(default)]
    pub meta: serde_json::Value,
}

impl MeasureFile {
    pub fn into_measure(self) -> Result<DiscreteMeasure> {
        if let Some((i, p)) = self.points.iter().enumerate().find(|(_, p)| p.len() != self.d) {
            return Err(Error::DimensionMismatch {
                index: i,
                expected: self.d,
                found: p.len(),
            });
        }
        if self.points.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                found: self.weights.len(),
            });
        }
        let coords = self.points.concat();
        Ok(DiscreteMeasure::from_flat(self.d, self.n, coords, self.weights)?.with_meta(self.meta))
    }
}

fn summarize_ratios(r: &[f64]) -> (f64, f64) {
    let lo = r.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = r.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn median_nn_distance(index: &KdTree) -> f64 {
    if index.len() < 2 {
        return 0.0;
    }
    let mut nn = crate::par::map_range(index.len(), |i| {
        index.nearest(index.point(i), Some(i)).map_or(0.0, |(_, d)| d)
    });
    nn.sort_by(f64::total_cmp);
    let m = nn.len();
    if m % 2 == 1 {
        nn[m / 2]
    } else {
        0.5 * (nn[m / 2 - 1] + nn[m / 2])
    }
}

/// Exact diameter of a subset by farthest-pair search with bounding-box pruning.
pub(crate) fn exact_diameter(index: &KdTree, subset: &[usize]) -> f64 {
    if subset.len() < 2 {
        return 0.0;
    }
    let d = index.dim();
    // lower bound from a double sweep, then prune points that cannot beat it
    let far = |from: usize| {
        subset
            .iter()
            .copied()
            .map(|j| (j, dist2(index.point(from), index.point(j))))
            .fold((from, 0.0), |a, b| if b.1 > a.1 { b } else { a })
    };
    let (a, _) = far(subset[0]);
    let (_, mut best) = far(a);
    let mut lo = vec![f64::INFINITY; d];
    let mut hi = vec![f64::NEG_INFINITY; d];
    for &i in subset {
        for k in 0..d {
            lo[k] = lo[k].min(index.point(i)[k]);
            hi[k] = hi[k].max(index.point(i)[k]);
        }
    }
    // the farthest point from p is at most the farthest box corner
    let corner2 = |p: &[f64]| -> f64 {
        (0..d)
            .map(|k| {
                let v = (p[k] - lo[k]).abs().max((hi[k] - p[k]).abs());
                v * v
            })
            .sum()
    };
    let mut cand: Vec<(f64, usize)> = subset
        .iter()
        .map(|&i| (corner2(index.point(i)), i))
        .filter(|(c, _)| *c > best)
        .collect();
    cand.sort_by(|a, b| b.0.total_cmp(&a.0));
    for (bound, i) in cand {
        if bound <= best {
            break;
        }
        for &j in subset {
            let v = dist2(index.point(i), index.point(j));
            if v > best {
                best = v;
            }
        }
    }
    best.sqrt()
}

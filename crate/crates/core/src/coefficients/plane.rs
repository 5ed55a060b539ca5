use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Affine `n`-plane `base + span(frame)` with an orthonormal frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffinePlane {
    pub base: Vec<f64>,
    pub frame: Vec<Vec<f64>>,
}

impl AffinePlane {
    pub fn new(base: Vec<f64>, frame: Vec<Vec<f64>>) -> Result<Self> {
        let d = base.len();
        if frame.is_empty() || frame.len() > d || frame.iter().any(|f| f.len() != d) {
            return Err(Error::InvalidArgument(format!(
                "frame of {} vectors does not fit dimension {d}",
                frame.len()
            )));
        }
        for a in 0..frame.len() {
            for b in 0..frame.len() {
                let dot: f64 = frame[a].iter().zip(&frame[b]).map(|(x, y)| x * y).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (dot - want).abs() > 1e-10 {
                    return Err(Error::InvalidArgument("plane frame is not orthonormal".into()));
                }
            }
        }
        Ok(AffinePlane { base, frame })
    }

    /// Orthonormalizes `dirs` by Gram–Schmidt before building the plane.
    pub fn from_directions(base: Vec<f64>, dirs: &[Vec<f64>]) -> Result<Self> {
        let mut frame: Vec<Vec<f64>> = Vec::new();
        for v in dirs {
            let mut u = v.clone();
            for _ in 0..2 {
                for f in &frame {
                    let dot: f64 = u.iter().zip(f).map(|(a, b)| a * b).sum();
                    u.iter_mut().zip(f).for_each(|(a, b)| *a -= dot * b);
                }
            }
            let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm < 1e-12 {
                return Err(Error::InvalidArgument("plane directions are dependent".into()));
            }
            frame.push(u.iter().map(|a| a / norm).collect());
        }
        Self::new(base, frame)
    }

    pub fn dim(&self) -> usize {
        self.frame.len()
    }

    pub fn ambient(&self) -> usize {
        self.base.len()
    }

    /// Coordinates `⟨y - base, f_k⟩`.
    pub fn coords(&self, y: &[f64]) -> Vec<f64> {
        self.frame
            .iter()
            .map(|f| f.iter().zip(y.iter().zip(&self.base)).map(|(fk, (a, b))| fk * (a - b)).sum())
            .collect()
    }

    pub fn project(&self, y: &[f64]) -> Vec<f64> {
        let c = self.coords(y);
        let mut p = self.base.clone();
        for (ck, f) in c.iter().zip(&self.frame) {
            p.iter_mut().zip(f).for_each(|(a, b)| *a += ck * b);
        }
        p
    }

    /// `|(y - base) - Σ⟨y - base, f_k⟩ f_k|`.
    pub fn dist(&self, y: &[f64]) -> f64 {
        let c = self.coords(y);
        let mut r: Vec<f64> = y.iter().zip(&self.base).map(|(a, b)| a - b).collect();
        for (ck, f) in c.iter().zip(&self.frame) {
            r.iter_mut().zip(f).for_each(|(a, b)| *a -= ck * b);
        }
        r.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    /// The parallel plane through `x`.
    pub fn through(&self, x: &[f64]) -> AffinePlane {
        AffinePlane {
            base: x.to_vec(),
            frame: self.frame.clone(),
        }
    }

    /// Orthonormal basis of the orthogonal complement of the frame.
    pub fn normals(&self) -> Vec<Vec<f64>> {
        let d = self.ambient();
        let mut all = self.frame.clone();
        let mut out = Vec::new();
        for e in 0..d {
            let mut u = vec![0.0; d];
            u[e] = 1.0;
            for _ in 0..2 {
                for f in &all {
                    let dot: f64 = u.iter().zip(f).map(|(a, b)| a * b).sum();
                    u.iter_mut().zip(f).for_each(|(a, b)| *a -= dot * b);
                }
            }
            let norm = u.iter().map(|a| a * a).sum::<f64>().sqrt();
            if norm > 1e-8 {
                let u: Vec<f64> = u.iter().map(|a| a / norm).collect();
                all.push(u.clone());
                out.push(u);
            }
            if out.len() == d - self.dim() {
                break;
            }
        }
        out
    }
}

/// Weighted least-squares `n`-plane through the weighted mean, spanned by the
/// top `n` principal directions. `None` when the total weight is zero.
pub fn weighted_pca_plane<'a, I>(points: I, n: usize, d: usize) -> Option<AffinePlane>
where
    I: IntoIterator<Item = (&'a [f64], f64)> + Clone,
{
    let mut total = 0.0;
    let mut mean = vec![0.0; d];
    for (p, w) in points.clone() {
        total += w;
        mean.iter_mut().zip(p).for_each(|(m, v)| *m += w * v);
    }
    if !(total > 0.0) {
        return None;
    }
    mean.iter_mut().for_each(|m| *m /= total);
    let mut cov = DMatrix::<f64>::zeros(d, d);
    for (p, w) in points {
        let v = DVector::from_iterator(d, p.iter().zip(&mean).map(|(a, b)| a - b));
        cov += w * &v * v.transpose();
    }
    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..d).collect();
    // descending eigenvalue, ties by index for determinism
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let frame: Vec<Vec<f64>> = order[..n]
        .iter()
        .map(|&k| {
            let col = eig.eigenvectors.column(k);
            // fix the sign: first nonzero entry positive
            let s = col.iter().find(|v| v.abs() > 1e-12).map_or(1.0, |v| v.signum());
            col.iter().map(|v| s * v).collect()
        })
        .collect();
    AffinePlane::from_directions(mean, &frame).ok()
}

/// Circular projection of `y` onto the plane through `x` with the frame of
/// `plane`: the point of that plane in the direction of the projection of
/// `y - x`, at distance `|y - x|` from `x`. When `y - x` is orthogonal to the
/// plane the first frame direction is used.
pub fn circular_projection(x: &[f64], plane: &AffinePlane, y: &[f64]) -> Vec<f64> {
    let v: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
    let r = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let mut out = x.to_vec();
    if r == 0.0 {
        return out;
    }
    let c: Vec<f64> = plane
        .frame
        .iter()
        .map(|f| f.iter().zip(&v).map(|(a, b)| a * b).sum())
        .collect();
    let h = c.iter().map(|a| a * a).sum::<f64>().sqrt();
    if h <= 1e-300 {
        out.iter_mut().zip(&plane.frame[0]).for_each(|(a, b)| *a += r * b);
        return out;
    }
    let s = r / h;
    for (ck, f) in c.iter().zip(&plane.frame) {
        out.iter_mut().zip(f).for_each(|(a, b)| *a += s * ck * b);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::dist;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn plane_distance() {
        let l = AffinePlane::new(vec![0.0, 1.0], vec![vec![1.0, 0.0]]).unwrap();
        assert_eq!(l.dist(&[5.0, 3.0]), 2.0);
        assert_eq!(l.dist(&[-2.0, 1.0]), 0.0);
        assert_eq!(l.project(&[5.0, 3.0]), vec![5.0, 1.0]);
        assert!(AffinePlane::new(vec![0.0, 0.0], vec![vec![1.0, 1.0]]).is_err());
        assert_eq!(l.normals(), vec![vec![0.0, 1.0]]);
    }

    #[test]
    fn pca_recovers_line() {
        let pts: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 2.0 * i as f64 + 1.0]).collect();
        let l = weighted_pca_plane(pts.iter().map(|p| (&p[..], 1.0)), 1, 2).unwrap();
        for p in &pts {
            assert!(l.dist(p) < 1e-10);
        }
    }

    #[test]
    fn circular_projection_examples() {
        let l = AffinePlane::new(vec![0.0, 0.0], vec![vec![1.0, 0.0]]).unwrap();
        let r = circular_projection(&[0.0, 0.0], &l, &[3.0, 4.0]);
        assert!((r[0] - 5.0).abs() < 1e-12 && r[1].abs() < 1e-12);
        let on = circular_projection(&[0.0, 0.0], &l, &[-2.5, 0.0]);
        assert_eq!(on, vec![-2.5, 0.0]);
        let deg = circular_projection(&[1.0, 0.0], &l, &[1.0, -2.0]);
        assert_eq!(deg, vec![3.0, 0.0]);
    }

    #[test]
    fn circular_projection_on_random_triples() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..2000 {
            let d = rng.gen_range(2..5);
            let n = rng.gen_range(1..d);
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let dirs: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
            let l = AffinePlane::from_directions(x.clone(), &dirs).unwrap();
            let y: Vec<f64> = (0..d).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let p = circular_projection(&x, &l, &y);
            assert!((dist(&p, &x) - dist(&x, &y)).abs() <= 1e-10);
            assert!(l.dist(&p) <= 1e-10);
        }
    }

    proptest! {
        #[test]
        fn points_on_the_plane_are_fixed(a in -3.0f64..3.0, b in -3.0f64..3.0, ang in 0.0f64..6.28) {
            let x = vec![a, b];
            let l = AffinePlane::new(x.clone(), vec![vec![ang.cos(), ang.sin()]]).unwrap();
            let y = vec![a + 2.0 * ang.cos(), b + 2.0 * ang.sin()];
            let p = circular_projection(&x, &l, &y);
            prop_assert!(dist(&p, &y) < 1e-12);
        }
    }
}

//! Synthetic measures: flat pieces, Lipschitz graphs, parallel lines and the
//! four-corner Cantor set, plus perturbation maps of the circle.
//!
//! Every generator is a lattice construction by default. A [`GeneratorSpec`]
//! with a seed swaps the lattice for i.i.d. parameters drawn from a ChaCha
//! stream, keeping the point count and the total mass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::coefficients::SphereMap;
use crate::error::{Error, Result};
use crate::measures::{build_measure, DiscreteMeasure};

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("{name} must be positive and finite, got {v}")))
    }
}

/// Symmetric lattice `k h`, `|k| <= round(extent / 2h)`.
fn centered_lattice(extent: f64, h: f64) -> Vec<f64> {
    let half = (extent / (2.0 * h)).round() as i64;
    (-half..=half).map(|k| k as f64 * h).collect()
}

/// Uniform `n`-plane sample in `ℝ^{n+1}`: the lattice `(hℤ)^n ∩ [-e/2, e/2]^n`
/// times `{0}`, weights `h^n`.
pub fn gen_kplane(n: usize, extent: f64, spacing: f64) -> Result<DiscreteMeasure> {
    check_positive("spacing", spacing)?;
    check_positive("extent", extent)?;
    if n == 0 {
        return Err(Error::IntrinsicDimension { n, d: n + 1 });
    }
    let axis = centered_lattice(extent, spacing);
    let count = axis.len().pow(n as u32);
    let mut pts = Vec::with_capacity(count);
    for flat in 0..count {
        let mut p = vec![0.0; n + 1];
        let mut r = flat;
        for slot in p.iter_mut().take(n) {
            *slot = axis[r % axis.len()];
            r /= axis.len();
        }
        pts.push(p);
    }
    let w = spacing.powi(n as i32);
    Ok(build_measure(&pts, &vec![w; count], n)?.with_meta(json!({
        "generator": "kplane",
        "n": n,
        "extent": extent,
        "spacing": spacing,
        "density": 1.0,
    })))
}

/// Segment of the given length on the first axis of `ℝ²`, centered at the
/// origin, unit density.
pub fn gen_segment(length: f64, spacing: f64) -> Result<DiscreteMeasure> {
    let m = gen_kplane(1, length, spacing)?;
    let meta = json!({
        "generator": "segment",
        "length": length,
        "spacing": spacing,
        "density": 1.0,
        "arclength": m.total_mass(),
        "lipschitz": 0.0,
    });
    Ok(m.with_meta(meta))
}

/// Arclength of `x -> (x, a sin(f x))` from `x0`, tabulated on `cells + 1`
/// nodes by Simpson's rule per cell.
fn arclength_table(a: f64, f: f64, x0: f64, x1: f64, cells: usize) -> (Vec<f64>, Vec<f64>) {
    let speed = |x: f64| (1.0 + (a * f * (f * x).cos()).powi(2)).sqrt();
    let dx = (x1 - x0) / cells as f64;
    let xs: Vec<f64> = (0..=cells).map(|k| x0 + k as f64 * dx).collect();
    let mut s = Vec::with_capacity(cells + 1);
    s.push(0.0);
    for k in 0..cells {
        let (l, r) = (xs[k], xs[k + 1]);
        let ds = dx / 6.0 * (speed(l) + 4.0 * speed(0.5 * (l + r)) + speed(r));
        s.push(s[k] + ds);
    }
    (xs, s)
}

/// Graph of `a sin(f x)` over `|x| <= extent/2`, sampled at equal arclength
/// steps `spacing` starting from the left end, each sample of mass `spacing`.
pub fn gen_lipschitz_graph(amplitude: f64, frequency: f64, extent: f64, spacing: f64) -> Result<DiscreteMeasure> {
    lipschitz_graph(amplitude, frequency, extent, spacing, None)
}

fn lipschitz_graph(a: f64, f: f64, extent: f64, h: f64, seed: Option<u64>) -> Result<DiscreteMeasure> {
    check_positive("spacing", h)?;
    check_positive("extent", extent)?;
    let lip = (a * f).abs();
    if !(lip < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "amplitude * frequency = {lip} must be below 1"
        )));
    }
    let cells = ((extent / h) * 32.0).ceil() as usize;
    let (xs, s) = arclength_table(a, f, -0.5 * extent, 0.5 * extent, cells);
    let total = *s.last().unwrap();
    let count = (total / h).floor() as usize + 1;
    let targets: Vec<f64> = match seed {
        None => (0..count).map(|k| k as f64 * h).collect(),
        Some(seed) => sorted_uniform(seed, count, 0.0, total),
    };
    let mut pts = Vec::with_capacity(count);
    let mut cell = 0;
    for t in targets {
        while cell + 1 < cells && s[cell + 1] < t {
            cell += 1;
        }
        let frac = (t - s[cell]) / (s[cell + 1] - s[cell]);
        let x = xs[cell] + frac * (xs[cell + 1] - xs[cell]);
        pts.push(vec![x, a * (f * x).sin()]);
    }
    let w = match seed {
        None => h,
        Some(_) => count as f64 * h / count as f64,
    };
    Ok(build_measure(&pts, &vec![w; count], 1)?.with_meta(json!({
        "generator": "lipschitz_graph",
        "amplitude": a,
        "frequency": f,
        "extent": extent,
        "spacing": h,
        "density": 1.0,
        "arclength": total,
        "lipschitz": lip,
    })))
}

fn sorted_uniform(seed: u64, count: usize, lo: f64, hi: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v: Vec<f64> = (0..count).map(|_| rng.gen_range(lo..hi)).collect();
    v.sort_by(f64::total_cmp);
    v
}

/// Generation `g` of the four-corner Cantor set in `[0,1]²`: `4^g` points,
/// each of mass `4^{-g}`, treated as one-dimensional.
pub fn gen_cantor4(generations: u32) -> Result<DiscreteMeasure> {
    cantor4(generations, None)
}

fn cantor4(g: u32, seed: Option<u64>) -> Result<DiscreteMeasure> {
    if !(1..=8).contains(&g) {
        return Err(Error::InvalidArgument(format!("generations {g} outside 1..=8")));
    }
    let count = 4usize.pow(g);
    // corner offsets ±1.5·4^{-k} about the centre of the parent square
    let point = |digits: &mut dyn FnMut(u32) -> usize| {
        let mut p = [0.5, 0.5];
        let mut s = 1.0;
        for k in 0..g {
            s /= 4.0;
            let d = digits(k);
            p[0] += if d & 1 == 0 { -1.5 * s } else { 1.5 * s };
            p[1] += if d & 2 == 0 { -1.5 * s } else { 1.5 * s };
        }
        vec![p[0], p[1]]
    };
    let pts: Vec<Vec<f64>> = match seed {
        None => (0..count)
            .map(|i| point(&mut |k| (i >> (2 * (g - 1 - k))) & 3))
            .collect(),
        Some(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..count).map(|_| point(&mut |_| rng.gen_range(0..4))).collect()
        }
    };
    let w = 4f64.powi(-(g as i32));
    Ok(build_measure(&pts, &vec![w; count], 1)?.with_meta(json!({
        "generator": "cantor4",
        "generations": g,
        "ratio": 0.25,
        "density": null,
    })))
}

/// `count` horizontal unit-density lines at heights `(k - (count-1)/2)·spacing`,
/// each sampled on the symmetric lattice of step `sample_spacing` over
/// `|x| <= extent/2`.
pub fn gen_parallel_lines(count: usize, spacing: f64, extent: f64, sample_spacing: f64) -> Result<DiscreteMeasure> {
    parallel_lines(count, spacing, extent, sample_spacing, None)
}

fn parallel_lines(count: usize, spacing: f64, extent: f64, h: f64, seed: Option<u64>) -> Result<DiscreteMeasure> {
    if count == 0 {
        return Err(Error::InvalidArgument("need at least one line".into()));
    }
    check_positive("spacing", spacing)?;
    check_positive("extent", extent)?;
    check_positive("sample_spacing", h)?;
    let axis = centered_lattice(extent, h);
    let per_line = axis.len();
    let mut pts = Vec::with_capacity(count * per_line);
    for k in 0..count {
        let y = (k as f64 - (count - 1) as f64 / 2.0) * spacing;
        let xs = match seed {
            None => axis.clone(),
            Some(seed) => sorted_uniform(seed.wrapping_add(k as u64), per_line, axis[0], axis[per_line - 1]),
        };
        pts.extend(xs.into_iter().map(|x| vec![x, y]));
    }
    Ok(build_measure(&pts, &vec![h; pts.len()], 1)?.with_meta(json!({
        "generator": "parallel_lines",
        "count": count,
        "spacing": spacing,
        "extent": extent,
        "sample_spacing": h,
        "density": 1.0,
        "lipschitz": 0.0,
    })))
}

/// A circle map `Ω = id + ψ` with the given Fourier modes `(k, a_k, b_k)`
/// rescaled so that `max|ψ'| = delta` on the check grid. All-zero modes give
/// the identity.
pub fn gen_omega(fourier_spec: &[(u32, f64, f64)], delta: f64) -> Result<SphereMap> {
    if fourier_spec.is_empty() {
        return Err(Error::InvalidArgument("empty Fourier spec".into()));
    }
    if !(0.0..0.1).contains(&delta) {
        return Err(Error::InvalidArgument(format!("delta {delta} must lie in [0, 0.1)")));
    }
    let raw = SphereMap {
        fourier_coeffs: fourier_spec.to_vec(),
        delta,
    };
    if raw.is_identity() {
        return SphereMap::new(fourier_spec.to_vec(), delta);
    }
    let scale = delta / raw.max_slope();
    let coeffs = fourier_spec.iter().map(|&(k, a, b)| (k, a * scale, b * scale)).collect();
    SphereMap::new(coeffs, delta)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Shape {
    Segment { length: f64, spacing: f64 },
    Kplane { n: usize, extent: f64, spacing: f64 },
    LipschitzGraph { amplitude: f64, frequency: f64, extent: f64, spacing: f64 },
    Cantor4 { generations: u32 },
    ParallelLines { count: usize, spacing: f64, extent: f64, sample_spacing: f64 },
}

/// A generator with its parameters; the seed selects the random variant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub shape: Shape,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl GeneratorSpec {
    pub fn new(shape: Shape) -> Self {
        GeneratorSpec { shape, seed: None }
    }

    pub fn name(&self) -> String {
        let base = match &self.shape {
            Shape::Segment { .. } => "segment".to_string(),
            Shape::Kplane { n, .. } => format!("kplane{n}"),
            Shape::LipschitzGraph { .. } => "lipschitz_graph".into(),
            Shape::Cantor4 { generations } => format!("cantor4_g{generations}"),
            Shape::ParallelLines { count, .. } => format!("parallel_lines{count}"),
        };
        match self.seed {
            Some(s) => format!("{base}_seed{s}"),
            None => base,
        }
    }

    pub fn generate(&self) -> Result<DiscreteMeasure> {
        let m = match (&self.shape, self.seed) {
            (Shape::Segment { length, spacing }, None) => gen_segment(*length, *spacing)?,
            (Shape::Segment { length, spacing }, Some(s)) => parallel_lines(1, 1.0, *length, *spacing, Some(s))?,
            (Shape::Kplane { n, extent, spacing }, None) => gen_kplane(*n, *extent, *spacing)?,
            (Shape::Kplane { n, extent, spacing }, Some(s)) => random_kplane(*n, *extent, *spacing, s)?,
            (Shape::LipschitzGraph { amplitude, frequency, extent, spacing }, seed) => {
                lipschitz_graph(*amplitude, *frequency, *extent, *spacing, seed)?
            }
            (Shape::Cantor4 { generations }, seed) => cantor4(*generations, seed)?,
            (Shape::ParallelLines { count, spacing, extent, sample_spacing }, seed) => {
                parallel_lines(*count, *spacing, *extent, *sample_spacing, seed)?
            }
        };
        let mut meta = m.meta().clone();
        meta["spec"] = serde_json::to_value(self)?;
        Ok(m.with_meta(meta))
    }
}

fn random_kplane(n: usize, extent: f64, h: f64, seed: u64) -> Result<DiscreteMeasure> {
    let lattice = gen_kplane(n, extent, h)?;
    let half = (extent / (2.0 * h)).round() * h;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts: Vec<Vec<f64>> = (0..lattice.len())
        .map(|_| {
            let mut p: Vec<f64> = (0..n).map(|_| rng.gen_range(-half..=half)).collect();
            p.push(0.0);
            p
        })
        .collect();
    Ok(build_measure(&pts, lattice.weights(), n)?.with_meta(lattice.meta().clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::c_number;

    #[test]
    fn segment_and_kplane() {
        let s = gen_segment(2.0, 1e-3).unwrap();
        assert_eq!(s.len(), 2001);
        assert!((s.total_mass() - 2.001).abs() < 1e-12);
        assert!(c_number(&s, &[0.0, 0.0], 0.5).value < 1e-12);
        let p = gen_kplane(2, 1.0, 0.1).unwrap();
        assert_eq!(p.len(), 121);
        assert_eq!(p.dim_ambient(), 3);
        // density ≈ 1: mass of B(0, 0.3) against π 0.09
        let m = p.ball_mass(&crate::measures::Ball::new(vec![0.0; 3], 0.3).unwrap());
        assert!((m / (std::f64::consts::PI * 0.09) - 1.0).abs() < 0.15, "{m}");
    }

    #[test]
    fn lipschitz_graph_mass_and_regularity() {
        let (a, f) = (0.3, 1.0);
        let g = gen_lipschitz_graph(a, f, 4.0 * std::f64::consts::PI, 1e-3).unwrap();
        // arclength oracle: plain midpoint sum on a finer grid
        let n = 2_000_000;
        let (x0, x1) = (-2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI);
        let dx = (x1 - x0) / n as f64;
        let len: f64 = (0..n)
            .map(|k| {
                let x = x0 + (k as f64 + 0.5) * dx;
                (1.0 + (a * f * (f * x).cos()).powi(2)).sqrt() * dx
            })
            .sum();
        assert!((g.total_mass() / len - 1.0).abs() < 1e-3, "{} vs {len}", g.total_mass());
        // consecutive samples sit one arclength step apart, up to chord/arc
        for i in (0..g.len() - 1).step_by(997) {
            let d = crate::measures::dist(g.point(i), g.point(i + 1));
            assert!((d / 1e-3 - 1.0).abs() < 1e-4, "{d}");
        }
        // every sample lies on the graph, slope below the constant
        for i in (0..g.len()).step_by(101) {
            let p = g.point(i);
            assert!((p[1] - a * (f * p[0]).sin()).abs() < 1e-15);
        }
        let (lo, hi) = g.ad_regularity(0.01, 1.0, 200).unwrap();
        assert!(lo >= 0.5 && hi <= 4.0, "{lo} {hi}");
        assert!(gen_lipschitz_graph(1.0, 1.0, 1.0, 0.1).is_err());
    }

    #[test]
    fn cantor_structure() {
        for g in 1..=5 {
            let c = gen_cantor4(g).unwrap();
            assert_eq!(c.len(), 4usize.pow(g));
            assert!((c.total_mass() - 1.0).abs() < 1e-12);
        }
        assert!(gen_cantor4(0).is_err() && gen_cantor4(9).is_err());
        let c = gen_cantor4(6).unwrap();
        // recursion oracle: B(x, 4^{-k}) holds about one generation-k square
        for i in (0..c.len()).step_by(37) {
            for k in 1..5 {
                let r = 4f64.powi(-k);
                let m = c.ball_mass(&crate::measures::Ball::new(c.point(i).to_vec(), r).unwrap());
                assert!(m >= r / 4.0 && m <= 4.0 * r, "x{i}, k{k}: {m}");
            }
        }
        // diameter by direct scan against the corner-to-corner distance
        let mut diam: f64 = 0.0;
        for i in 0..c.len() {
            for j in 0..i {
                diam = diam.max(crate::measures::dist(c.point(i), c.point(j)));
            }
        }
        let side: f64 = (1..=6).map(|k| 3.0 * 4f64.powi(-k)).sum();
        assert!((diam - side * 2f64.sqrt()).abs() < 1e-12);
        assert!((c.diameter() - diam).abs() < 1e-12);
    }

    #[test]
    fn parallel_lines_symmetry() {
        let m = gen_parallel_lines(3, 1.0, 20.0, 0.01).unwrap();
        assert_eq!(m.len(), 3 * 2001);
        for x in [0.0, 1.5, -3.0] {
            for t in [0.3, 2.0, 5.0] {
                assert!(c_number(&m, &[x, 0.0], t).value < 1e-8, "{x} {t}");
            }
        }
        let one = gen_parallel_lines(1, 1.0, 2.0, 1e-3).unwrap();
        let seg = gen_segment(2.0, 1e-3).unwrap();
        assert!(one.points().zip(seg.points()).all(|(a, b)| a == b));
        assert_eq!(one.weights(), seg.weights());
        let (lo, hi) = m.ad_regularity(0.05, 1.0, 100).unwrap();
        assert!(lo > 0.0 && hi.is_finite());
    }

    #[test]
    fn omega_scaling() {
        let id = gen_omega(&[(1, 0.0, 0.0)], 0.05).unwrap();
        assert!(id.is_identity());
        let om = gen_omega(&[(1, 1.0, 0.0)], 0.05).unwrap();
        // dense grid oracle for max|ψ'|
        let n = 200_000;
        let m = (0..n)
            .map(|i| {
                let th = std::f64::consts::PI * i as f64 / n as f64;
                let h = 1e-6;
                ((om.psi(th + h) - om.psi(th - h)) / (2.0 * h)).abs()
            })
            .fold(0.0, f64::max);
        assert!((m - 0.05).abs() < 1e-6, "{m}");
        for th in [0.1, 1.0, 2.5] {
            let gap = om.omega(th + std::f64::consts::PI) - om.omega(th);
            assert!((gap - std::f64::consts::PI).abs() < 1e-14, "{gap}");
        }
        assert!(gen_omega(&[], 0.05).is_err());
        assert!(gen_omega(&[(1, 1.0, 0.0)], 0.1).is_err());
    }

    #[test]
    fn specs_round_trip_and_are_deterministic() {
        let specs = [
            GeneratorSpec::new(Shape::Segment { length: 1.0, spacing: 0.01 }),
            GeneratorSpec::new(Shape::Cantor4 { generations: 3 }),
            GeneratorSpec { shape: Shape::LipschitzGraph { amplitude: 0.2, frequency: 2.0, extent: 3.0, spacing: 0.01 }, seed: Some(7) },
            GeneratorSpec { shape: Shape::Kplane { n: 2, extent: 1.0, spacing: 0.1 }, seed: Some(1) },
            GeneratorSpec { shape: Shape::ParallelLines { count: 2, spacing: 0.5, extent: 2.0, sample_spacing: 0.05 }, seed: Some(3) },
        ];
        for s in &specs {
            let text = serde_json::to_string(s).unwrap();
            let back: GeneratorSpec = serde_json::from_str(&text).unwrap();
            assert_eq!(&back, s);
            let (a, b) = (s.generate().unwrap(), s.generate().unwrap());
            assert!(a.points().zip(b.points()).all(|(p, q)| p.iter().zip(q).all(|(u, v)| u.to_bits() == v.to_bits())));
            assert_eq!(a.meta()["spec"], serde_json::to_value(s).unwrap());
        }
        let v: GeneratorSpec = serde_json::from_str(r#"{"kind":"cantor4","generations":2}"#).unwrap();
        assert_eq!(v.generate().unwrap().len(), 16);
    }
}

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::transport::{transport_with_boundary, transport_with_boundary_sparse};
use super::{weighted_pca_plane, AffinePlane, CoefficientSample, Kind};
use crate::cubes::Cube;
use crate::error::{Error, Result};
use crate::measures::{dist, Ball, DiscreteMeasure};
use crate::spatial::KdTree;

/// Bounded-Lipschitz distance on a ball:
/// `sup{|∫f dμ - ∫f dν| : Lip(f) <= 1, spt f ⊂ B}`.
///
/// Only the points inside the open ball matter. The finite program over the
/// values of `f` at those points is solved through its transport dual, where
/// mass may also be sent to the boundary at cost `dist(z, ∂B)`.
pub fn bl_distance(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ball: &Ball) -> Result<f64> {
    if mu.dim_ambient() != nu.dim_ambient() || ball.center.len() != mu.dim_ambient() {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: mu.dim_ambient(),
            found: nu.dim_ambient(),
        });
    }
    let mut sites = SignedSites::default();
    for i in mu.ball_indices(&ball.center, ball.radius) {
        sites.add(mu.point(i), mu.weight(i));
    }
    for i in nu.ball_indices(&ball.center, ball.radius) {
        sites.add(nu.point(i), -nu.weight(i));
    }
    sites.distance(ball)
}

/// Signed point masses merged by exact coordinate identity.
#[derive(Default, Debug, Clone)]
pub struct SignedSites {
    points: Vec<Vec<f64>>,
    mass: Vec<f64>,
    lookup: HashMap<Vec<u64>, usize>,
}

impl SignedSites {
    pub fn add(&mut self, p: &[f64], m: f64) {
        let key: Vec<u64> = p.iter().map(|v| (v + 0.0).to_bits()).collect();
        match self.lookup.get(&key) {
            Some(&k) => self.mass[k] += m,
            None => {
                self.lookup.insert(key, self.points.len());
                self.points.push(p.to_vec());
                self.mass.push(m);
            }
        }
    }

    /// Transport distance with boundary for the sites inside `ball`.
    pub fn distance(&self, ball: &Ball) -> Result<f64> {
        let keep: Vec<usize> = (0..self.points.len())
            .filter(|&k| ball.contains(&self.points[k]) && self.mass[k] != 0.0)
            .collect();
        let supply: Vec<f64> = keep.iter().map(|&k| self.mass[k]).collect();
        let boundary: Vec<f64> = keep
            .iter()
            .map(|&k| (ball.radius - dist(&self.points[k], &ball.center)).max(0.0))
            .collect();
        let cost = |a: usize, b: usize| dist(&self.points[keep[a]], &self.points[keep[b]]);
        let npos = supply.iter().filter(|m| **m > 0.0).count();
        let nneg = supply.len() - npos;
        if npos * nneg <= DENSE_LIMIT {
            return transport_with_boundary(&supply, &boundary, cost);
        }
        // seed each node with its nearest partners of the other sign; a source
        // typically spreads over about nneg/npos sinks
        let d = ball.center.len();
        let side = |neg: bool| -> (Vec<usize>, KdTree) {
            let ids: Vec<usize> = (0..keep.len()).filter(|&a| (supply[a] < 0.0) == neg).collect();
            let coords: Vec<f64> = ids.iter().flat_map(|&a| self.points[keep[a]].iter().copied()).collect();
            (ids, KdTree::new(d, coords))
        };
        let (sinks, sink_tree) = side(true);
        let (sources, source_tree) = side(false);
        let per_source = SEED_ARCS + 2 * nneg.div_ceil(npos.max(1));
        let per_sink = SEED_ARCS + 2 * npos.div_ceil(nneg.max(1));
        transport_with_boundary_sparse(&supply, &boundary, cost, |a| {
            let (ids, tree, k) = if supply[a] > 0.0 {
                (&sinks, &sink_tree, per_source)
            } else {
                (&sources, &source_tree, per_sink)
            };
            tree.k_nearest(&self.points[keep[a]], k).into_iter().map(|(s, _)| ids[s]).collect()
        })
    }
}

/// Above this many source–sink pairs the transport is solved by column
/// generation instead of on the complete bipartite graph.
const DENSE_LIMIT: usize = 4096;
const SEED_ARCS: usize = 6;

/// Tuning of the α search. Missing fields deserialize to their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlphaOptions {
    /// Lattice spacing on the plane; defaults to `h(μ)/2`.
    pub spacing: Option<f64>,
    pub angle_step: f64,
    /// Offset step as a fraction of `ℓ(Q)`.
    pub offset_step: f64,
    pub grid_steps: i32,
    /// Relative tolerance of the golden-section search in `c`.
    pub c_tol: f64,
    pub polish_evals: usize,
}

impl Default for AlphaOptions {
    fn default() -> Self {
        AlphaOptions {
            spacing: None,
            angle_step: 0.02,
            offset_step: 0.05,
            grid_steps: 5,
            c_tol: 1e-3,
            polish_evals: 60,
        }
    }
}

/// Precomputed data for evaluating the α objective on one cube.
pub struct AlphaProblem {
    pub ball: Ball,
    pub side: f64,
    pub spacing: f64,
    n: usize,
    mu_points: Vec<(Vec<f64>, f64)>,
    pub mass: f64,
    seed: AffinePlane,
    normals: Vec<Vec<f64>>,
}

impl AlphaProblem {
    pub fn new(mu: &DiscreteMeasure, q: &Cube, opts: &AlphaOptions) -> Result<Self> {
        mu.require_nonnegative()?;
        let n = mu.dim_intrinsic();
        let d = mu.dim_ambient();
        let radius = q.ball_radius();
        let idx = if radius > 0.0 {
            mu.ball_indices(&q.center_point, radius)
        } else {
            Vec::new()
        };
        if idx.len() < n + 1 || radius <= 0.0 {
            return Err(Error::DegenerateCube {
                points: idx.len(),
                needed: n + 1,
            });
        }
        let ball = Ball::new(q.center_point.clone(), radius)?;
        let mu_points: Vec<(Vec<f64>, f64)> = idx.iter().map(|&i| (mu.point(i).to_vec(), mu.weight(i))).collect();
        let mass = mu_points.iter().map(|p| p.1).sum();
        let seed = weighted_pca_plane(mu_points.iter().map(|(p, w)| (&p[..], *w)), n, d).ok_or(
            Error::DegenerateCube {
                points: idx.len(),
                needed: n + 1,
            },
        )?;
        let seed = seed.through(&seed.project(&q.center_point));
        let spacing = opts.spacing.unwrap_or(0.5 * mu.resolution());
        let spacing = if spacing > 0.0 { spacing } else { q.side / 64.0 };
        let normals = seed.normals();
        Ok(AlphaProblem {
            ball,
            side: q.side,
            spacing,
            n,
            mu_points,
            mass,
            seed,
            normals,
        })
    }

    /// Number of rotation and offset parameters of a plane.
    pub fn param_count(&self) -> usize {
        self.n * self.normals.len() + self.normals.len()
    }

    /// Plane obtained from the PCA seed by tilting each frame vector towards
    /// each normal by the given angles and shifting along the normals.
    pub fn plane(&self, params: &[f64]) -> AffinePlane {
        let nn = self.normals.len();
        let mut dirs = self.seed.frame.clone();
        for (a, f) in dirs.iter_mut().enumerate() {
            for (b, nv) in self.normals.iter().enumerate() {
                let t = params[a * nn + b].tan();
                f.iter_mut().zip(nv).for_each(|(x, y)| *x += t * y);
            }
        }
        let mut base = self.seed.base.clone();
        for (b, nv) in self.normals.iter().enumerate() {
            let s = params[self.n * nn + b] * self.side;
            base.iter_mut().zip(nv).for_each(|(x, y)| *x += s * y);
        }
        AffinePlane::from_directions(base, &dirs).unwrap_or_else(|_| self.seed.clone())
    }

    /// Lattice nodes of spacing `s` on `L ∩ B_Q`, centred at the projection
    /// of `z_Q`.
    pub fn lattice(&self, plane: &AffinePlane) -> Vec<Vec<f64>> {
        let origin = plane.project(&self.ball.center);
        let r = self.ball.radius;
        let k = (r / self.spacing).ceil() as i64 + 1;
        let mut out = Vec::new();
        let mut idx = vec![-k; self.n];
        loop {
            let mut p = origin.clone();
            for (a, f) in plane.frame.iter().enumerate() {
                let s = idx[a] as f64 * self.spacing;
                p.iter_mut().zip(f).for_each(|(x, y)| *x += s * y);
            }
            if self.ball.contains(&p) {
                out.push(p);
            }
            let mut a = 0;
            loop {
                if a == self.n {
                    return out;
                }
                idx[a] += 1;
                if idx[a] <= k {
                    break;
                }
                idx[a] = -k;
                a += 1;
            }
        }
    }

    /// `ℓ(Q)^{-n-1} dist_{B_Q}(μ, c·(lattice measure of L))`.
    pub fn objective(&self, plane: &AffinePlane, c: f64) -> Result<f64> {
        let nodes = self.lattice(plane);
        self.objective_on(&nodes, c)
    }

    fn objective_on(&self, nodes: &[Vec<f64>], c: f64) -> Result<f64> {
        let mut sites = SignedSites::default();
        for (p, w) in &self.mu_points {
            sites.add(p, *w);
        }
        let wnode = c * self.spacing.powi(self.n as i32);
        for p in nodes {
            sites.add(p, -wnode);
        }
        Ok(sites.distance(&self.ball)? / self.side.powi(self.n as i32 + 1))
    }

    /// Upper end of the `c` search interval: four times the density estimate
    /// `μ(B_Q) / H^n(L ∩ B_Q)` at the seed plane.
    pub fn c_max(&self) -> f64 {
        let nodes = self.lattice(&self.seed).len().max(1) as f64;
        4.0 * self.mass / (nodes * self.spacing.powi(self.n as i32))
    }

    /// Golden-section minimisation in `c` at a fixed plane.
    pub fn best_c(&self, plane: &AffinePlane, hi: f64, tol: f64) -> Result<(f64, f64)> {
        let nodes = self.lattice(plane);
        golden(|c| self.objective_on(&nodes, c), 0.0, hi, tol * hi.max(1e-300))
    }
}

fn golden<F: Fn(f64) -> Result<f64>>(f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while (b - a) > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    // endpoints are candidates too (the minimum may sit at c = 0)
    let mut best = if fc <= fd { (c, fc) } else { (d, fd) };
    let f0 = f(a)?;
    if f0 < best.1 {
        best = (a, f0);
    }
    Ok(best)
}

fn nelder_mead<F: Fn(&[f64]) -> f64>(f: F, start: &[f64], steps: &[f64], max_evals: usize) -> (Vec<f64>, f64) {
    let k = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(k + 1);
    simplex.push((start.to_vec(), f(start)));
    for i in 0..k {
        let mut p = start.to_vec();
        p[i] += steps[i];
        let v = f(&p);
        simplex.push((p, v));
    }
    let mut evals = k + 1;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let centroid: Vec<f64> = (0..k)
            .map(|j| simplex[..k].iter().map(|s| s.0[j]).sum::<f64>() / k as f64)
            .collect();
        let worst = simplex[k].clone();
        let along = |t: f64| -> Vec<f64> { (0..k).map(|j| centroid[j] + t * (worst.0[j] - centroid[j])).collect() };
        let xr = along(-1.0);
        let fr = f(&xr);
        evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            evals += 1;
            simplex[k] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[k - 1].1 {
            simplex[k] = (xr, fr);
        } else {
            let xc = along(0.5);
            let fc = f(&xc);
            evals += 1;
            if fc < worst.1 {
                simplex[k] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = (0..k).map(|j| best[j] + 0.5 * (s.0[j] - best[j])).collect();
                    *s = (p.clone(), f(&p));
                    evals += 1;
                }
            }
        }
    }
    simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
    simplex.swap_remove(0)
}

/// `α_μ(Q) = ℓ(Q)^{-n-1} inf_{c >= 0, L} dist_{B_Q}(μ, c H^n|_L)` over a local
/// search around the PCA plane of `B_Q = B(z_Q, 3 diam Q)`.
pub fn alpha_number(mu: &DiscreteMeasure, q: &Cube) -> Result<CoefficientSample> {
    alpha_number_with(mu, q, &AlphaOptions::default())
}

pub fn alpha_number_with(mu: &DiscreteMeasure, q: &Cube, opts: &AlphaOptions) -> Result<CoefficientSample> {
    let prob = AlphaProblem::new(mu, q, opts)?;
    let k = prob.param_count();
    let c_hi = prob.c_max();
    let zero = vec![0.0; k];

    // c at the PCA plane
    let (c0, _) = prob.best_c(&prob.plane(&zero), c_hi, opts.c_tol)?;

    // grid over tilts and offsets at that c
    let rot = prob.n * prob.normals.len();
    let step_of = |i: usize| if i < rot { opts.angle_step } else { opts.offset_step };
    let s = opts.grid_steps;
    let mut candidates: Vec<Vec<f64>> = Vec::new();
    if k <= 2 {
        let total = (2 * s + 1).pow(k as u32);
        for code in 0..total {
            let mut rem = code;
            let p: Vec<f64> = (0..k)
                .map(|i| {
                    let o = rem % (2 * s + 1) - s;
                    rem /= 2 * s + 1;
                    o as f64 * step_of(i)
                })
                .collect();
            candidates.push(p);
        }
    } else {
        candidates.push(zero.clone());
        for i in 0..k {
            for o in -s..=s {
                if o != 0 {
                    let mut p = zero.clone();
                    p[i] = o as f64 * step_of(i);
                    candidates.push(p);
                }
            }
        }
    }
    let scores = crate::par::try_map_range(candidates.len(), |i| prob.objective(&prob.plane(&candidates[i]), c0))?;
    let (bi, _) = scores
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, v)| if *v < acc.1 { (i, *v) } else { acc });
    let grid_best = candidates[bi].clone();

    // c again at the best plane, then a joint polish
    let (c1, v1) = prob.best_c(&prob.plane(&grid_best), c_hi, opts.c_tol)?;
    let mut start = grid_best.clone();
    start.push(c1);
    let mut steps: Vec<f64> = (0..k).map(|i| 0.5 * step_of(i)).collect();
    steps.push(0.1 * c1.max(0.01 * c_hi));
    let obj = |p: &[f64]| -> f64 {
        let c = p[k];
        if c < 0.0 {
            return f64::INFINITY;
        }
        prob.objective(&prob.plane(&p[..k]), c).unwrap_or(f64::INFINITY)
    };
    let (best_p, best_v) = if opts.polish_evals > k + 1 {
        nelder_mead(obj, &start, &steps, opts.polish_evals)
    } else {
        (start.clone(), v1)
    };
    let (params, c, value) = if best_v < v1 {
        (best_p[..k].to_vec(), best_p[k], best_v)
    } else {
        (grid_best, c1, v1)
    };
    let plane = prob.plane(&params);
    let mut sample = CoefficientSample::scalar(&q.center_point, q.side, Kind::Alpha, value);
    sample.discretization_error = Some(
        prob.spacing * (prob.mass + c * prob.lattice(&plane).len() as f64 * prob.spacing.powi(prob.n as i32))
            / q.side.powi(prob.n as i32 + 1),
    );
    sample.plane = Some(plane);
    sample.c = Some(c);
    Ok(sample)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubes::build_christ_cubes_with_unit;
    use crate::measures::build_measure;
    use proptest::prelude::*;

    fn atoms(pts: &[[f64; 2]], w: &[f64]) -> DiscreteMeasure {
        let p: Vec<Vec<f64>> = pts.iter().map(|a| a.to_vec()).collect();
        build_measure(&p, w, 1).unwrap()
    }

    /// Primal LP of the bounded-Lipschitz distance solved with `minilp`.
    fn lp_oracle(mu: &DiscreteMeasure, nu: &DiscreteMeasure, ball: &Ball) -> f64 {
        use minilp::{ComparisonOp, OptimizationDirection, Problem};
        let mut sites = SignedSites::default();
        for i in mu.ball_indices(&ball.center, ball.radius) {
            sites.add(mu.point(i), mu.weight(i));
        }
        for i in nu.ball_indices(&ball.center, ball.radius) {
            sites.add(nu.point(i), -nu.weight(i));
        }
        let k = sites.points.len();
        if k == 0 {
            return 0.0;
        }
        let mut p = Problem::new(OptimizationDirection::Maximize);
        let vars: Vec<minilp::Variable> = (0..k)
            .map(|i| {
                let b = ball.radius - dist(&sites.points[i], &ball.center);
                p.add_var(sites.mass[i], (-b, b))
            })
            .collect();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    let dij = dist(&sites.points[i], &sites.points[j]);
                    p.add_constraint(&[(vars[i], 1.0), (vars[j], -1.0)], ComparisonOp::Le, dij);
                }
            }
        }
        p.solve().unwrap().objective()
    }

    #[test]
    fn identical_measures_are_at_distance_zero() {
        let m = atoms(&[[0.1, 0.2], [0.5, -0.3]], &[1.0, 2.0]);
        let b = Ball::new(vec![0.0, 0.0], 2.0).unwrap();
        assert_eq!(bl_distance(&m, &m, &b).unwrap(), 0.0);
    }

    #[test]
    fn two_atoms_far_from_boundary() {
        let a = atoms(&[[1.0, 0.0]], &[1.0]);
        let b = atoms(&[[-1.0, 0.0]], &[1.0]);
        let ball = Ball::new(vec![0.0, 0.0], 10.0).unwrap();
        // vertices of {|f_a - f_b| <= 2, |f_a|, |f_b| <= 9}: the optimum f_a - f_b = 2
        let v = bl_distance(&a, &b, &ball).unwrap();
        assert!((v - 2.0).abs() < 1e-12);
        assert!((lp_oracle(&a, &b, &ball) - 2.0).abs() < 1e-9);
    }

    #[test]
    fn center_against_half_radius() {
        let a = atoms(&[[0.0, 0.0]], &[1.0]);
        let b = atoms(&[[0.5, 0.0]], &[1.0]);
        let ball = Ball::new(vec![0.0, 0.0], 1.0).unwrap();
        // f_a <= 1, f_b >= -0.5, f_a - f_b <= 0.5 binds first
        assert!((bl_distance(&a, &b, &ball).unwrap() - 0.5).abs() < 1e-12);
        // close to the boundary the boundary constraint takes over
        let c = atoms(&[[0.9, 0.0]], &[1.0]);
        let d = atoms(&[[-0.9, 0.0]], &[1.0]);
        assert!((bl_distance(&c, &d, &ball).unwrap() - 0.2).abs() < 1e-12);
    }

    #[test]
    fn random_instances_match_lp() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..40 {
            let k1 = rng.gen_range(1..7);
            let k2 = rng.gen_range(1..7);
            let mk = |k: usize, rng: &mut rand_chacha::ChaCha8Rng| {
                let p: Vec<[f64; 2]> = (0..k).map(|_| [rng.gen_range(-1.2..1.2), rng.gen_range(-1.2..1.2)]).collect();
                let w: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..2.0)).collect();
                atoms(&p, &w)
            };
            let a = mk(k1, &mut rng);
            let b = mk(k2, &mut rng);
            let ball = Ball::new(vec![rng.gen_range(-0.3..0.3), 0.0], rng.gen_range(0.5..1.5)).unwrap();
            let got = bl_distance(&a, &b, &ball).unwrap();
            let want = lp_oracle(&a, &b, &ball);
            assert!((got - want).abs() < 1e-9 * (1.0 + want), "{got} vs {want}");
        }
    }

    fn line_measure(spacing: f64, weight: f64, extent: f64) -> DiscreteMeasure {
        let k = (extent / spacing).round() as i64;
        let pts: Vec<Vec<f64>> = (-k..=k).map(|i| vec![i as f64 * spacing, 0.0]).collect();
        build_measure(&pts, &vec![weight; pts.len()], 1).unwrap()
    }

    fn middle_cube(mu: &DiscreteMeasure, level: i32) -> (crate::cubes::CubeTree, crate::cubes::CubeId) {
        let t = build_christ_cubes_with_unit(mu, 0, level, 2.0).unwrap();
        let id = t.cube_of(mu.len() / 2, level).id;
        (t, id)
    }

    #[test]
    fn flat_measure_has_small_alpha() {
        // long enough that B_Q stays inside the support
        let mu = line_measure(0.01, 0.01, 3.0);
        let (t, id) = middle_cube(&mu, 3);
        let q = t.cube(id);
        let opts = AlphaOptions {
            spacing: Some(0.01),
            ..AlphaOptions::default()
        };
        let s = alpha_number_with(&mu, q, &opts).unwrap();
        let floor = mu.resolution() * mu.ball_mass(&Ball::new(q.center_point.clone(), q.ball_radius()).unwrap())
            / q.side.powi(2);
        assert!(s.value <= floor, "{} > {floor}", s.value);
    }

    #[test]
    fn double_density_line_gives_c_near_two() {
        let mu = line_measure(0.01, 0.02, 1.0);
        let (t, id) = middle_cube(&mu, 3);
        let q = t.cube(id);
        let s = alpha_number(&mu, q).unwrap();
        let c = s.c.unwrap();
        assert!((c - 2.0).abs() < 0.2, "c = {c}");
        // brute-force grid over c at the returned plane
        let prob = AlphaProblem::new(&mu, q, &AlphaOptions::default()).unwrap();
        let plane = s.plane.clone().unwrap();
        let hi = prob.c_max();
        let grid: Vec<(f64, f64)> = (0..=80)
            .map(|i| {
                let c = hi * i as f64 / 80.0;
                (c, prob.objective(&plane, c).unwrap())
            })
            .collect();
        let (cg, vg) = grid.iter().fold((0.0, f64::INFINITY), |a, b| if b.1 < a.1 { *b } else { a });
        assert!(s.value <= vg + 1e-9);
        assert!((cg - c).abs() <= hi / 40.0 + 0.1);
        for w in grid.windows(3) {
            assert!(w[1].1 <= 0.5 * (w[0].1 + w[2].1) + 1e-9);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn metric_properties(
            a in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0), 1..6),
            b in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0), 1..6),
            c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0, 0.0f64..1.0), 1..6),
        ) {
            let mk = |v: &[(f64, f64, f64)]| {
                let p: Vec<[f64; 2]> = v.iter().map(|&(x, y, _)| [x, y]).collect();
                let w: Vec<f64> = v.iter().map(|&(_, _, w)| w).collect();
                atoms(&p, &w)
            };
            let (ma, mb, mc) = (mk(&a), mk(&b), mk(&c));
            let ball = Ball::new(vec![0.0, 0.0], 1.2).unwrap();
            let ab = bl_distance(&ma, &mb, &ball).unwrap();
            let ba = bl_distance(&mb, &ma, &ball).unwrap();
            let bc = bl_distance(&mb, &mc, &ball).unwrap();
            let ac = bl_distance(&ma, &mc, &ball).unwrap();
            prop_assert!((ab - ba).abs() <= 1e-12 * (1.0 + ab));
            prop_assert!(ac <= ab + bc + 1e-9);
            prop_assert!(ab >= 0.0);
        }

        #[test]
        fn alpha_objective_convex_in_c(c1 in 0.0f64..4.0, c2 in 0.0f64..4.0) {
            let mu = line_measure(0.02, 0.02, 1.0);
            let (t, id) = middle_cube(&mu, 2);
            let prob = AlphaProblem::new(&mu, t.cube(id), &AlphaOptions::default()).unwrap();
            let plane = prob.plane(&[0.05, 0.02]);
            let f1 = prob.objective(&plane, c1).unwrap();
            let f2 = prob.objective(&plane, c2).unwrap();
            let fm = prob.objective(&plane, 0.5 * (c1 + c2)).unwrap();
            prop_assert!(fm <= 0.5 * (f1 + f2) + 1e-9);
        }
    }
}

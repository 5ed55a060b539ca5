//! Scale integrals and Carleson sums built from the coefficients.
//!
//! All integrals in `t` use the trapezoid rule in `ln t`, which matches the
//! `dt/t` measure. Sums over points and cubes are pairwise reductions of
//! values collected in a fixed order, so reports do not depend on the thread
//! count.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::coefficients::{
    alpha_number_with, beta_number, c_profile_sq, weighted_pca_plane, AffinePlane, AlphaOptions, CKind,
};
use crate::cubes::{Cube, CubeId, CubeTree};
use crate::error::{Error, Result};
use crate::measures::{Ball, DiscreteMeasure};
use crate::par::{map_range, pairwise_sum, try_map_range};

/// Dini-energy slopes at or below this are read as "bounded", larger ones as
/// "growing". Empirical threshold, not a theorem.
pub const BOUNDED_SLOPE: f64 = 0.05;

/// Geometric grid `t_k = t_max·2^{-k/m}`, `k = 0..=K`, with `t_K <= t_min`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleGrid {
    pub t_min: f64,
    pub t_max: f64,
    pub samples_per_octave: u32,
}

impl ScaleGrid {
    pub fn new(t_min: f64, t_max: f64, samples_per_octave: u32) -> Result<Self> {
        if !(t_min > 0.0 && t_min < t_max && t_max.is_finite()) || samples_per_octave < 4 {
            return Err(Error::InvalidArgument(format!(
                "scale grid needs 0 < t_min < t_max and m >= 4 (got {t_min}, {t_max}, {samples_per_octave})"
            )));
        }
        Ok(ScaleGrid {
            t_min,
            t_max,
            samples_per_octave,
        })
    }

    /// `t_max·2^{-K}` down to `t_max`, `octaves` octaves.
    pub fn octaves(t_max: f64, octaves: u32, samples_per_octave: u32) -> Result<Self> {
        Self::new(t_max * 2f64.powi(-(octaves as i32)), t_max, samples_per_octave)
    }

    pub fn node_count(&self) -> usize {
        let m = self.samples_per_octave as f64;
        (m * (self.t_max / self.t_min).log2() - 1e-9).ceil() as usize + 1
    }

    /// Strictly decreasing nodes; the first is `t_max`, the last is `<= t_min`.
    pub fn nodes(&self) -> Vec<f64> {
        let m = self.samples_per_octave as f64;
        (0..self.node_count()).map(|k| self.t_max * 2f64.powf(-(k as f64) / m)).collect()
    }

    /// Trapezoid weights in `ln t` for `∫_{t_min}^{t_max} g dt/t` from the node
    /// values of `g`. The last cell is cut at `t_min`, with `g` interpolated
    /// linearly in `ln t`.
    pub fn weights(&self) -> Vec<f64> {
        let nodes = self.nodes();
        let k = nodes.len();
        let mut w = vec![0.0; k];
        let lmin = self.t_min.ln();
        for i in 0..k - 1 {
            let (a, b) = (nodes[i].ln(), nodes[i + 1].ln());
            if b >= lmin {
                let h = a - b;
                w[i] += 0.5 * h;
                w[i + 1] += 0.5 * h;
            } else {
                // partial cell [lmin, a]; g(lmin) = (1-s) g_i + s g_{i+1}
                let h = a - lmin;
                let s = h / (a - b);
                w[i] += 0.5 * h * (2.0 - s);
                w[i + 1] += 0.5 * h * s;
            }
        }
        w
    }
}

/// `∫_{t_min}^{t_max} |coef(x,t)|² dt/t` on the grid.
pub fn dini_integral(mu: &DiscreteMeasure, x: &[f64], grid: &ScaleGrid, kind: &CKind) -> Result<f64> {
    let sq = c_profile_sq(mu, x, &grid.nodes(), kind)?;
    let w = grid.weights();
    let terms: Vec<f64> = sq.iter().zip(&w).map(|(a, b)| a * b).collect();
    Ok(pairwise_sum(&terms))
}

/// Truncated Dini energies `E(t_min)` for `t_min = t_max·2^{-k}`, `k = 1..=K`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiniProfile {
    pub t_min: Vec<f64>,
    pub energy: Vec<f64>,
}

impl DiniProfile {
    /// Least-squares slope of `ln E` against `ln(1/t_min)` over the octaves
    /// with `E > 0`; `0` when fewer than two octaves qualify.
    pub fn slope(&self) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .t_min
            .iter()
            .zip(&self.energy)
            .filter(|(_, e)| **e > 0.0)
            .map(|(t, e)| (-t.ln(), e.ln()))
            .collect();
        if pts.len() < 2 {
            return 0.0;
        }
        let k = pts.len() as f64;
        let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
        let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
        let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
        if sxx == 0.0 {
            0.0
        } else {
            sxy / sxx
        }
    }

    pub fn is_bounded(&self) -> bool {
        self.slope() <= BOUNDED_SLOPE
    }
}

/// Energies `E(t_max·2^{-k})` for `k = 1..=octaves` from one coefficient
/// profile over `[t_max·2^{-octaves}, t_max]`.
pub fn dini_profile(
    mu: &DiscreteMeasure,
    x: &[f64],
    t_max: f64,
    octaves: u32,
    samples_per_octave: u32,
    kind: &CKind,
) -> Result<DiniProfile> {
    let grid = ScaleGrid::octaves(t_max, octaves, samples_per_octave)?;
    let nodes = grid.nodes();
    let sq = c_profile_sq(mu, x, &nodes, kind)?;
    let m = samples_per_octave as usize;
    let mut acc = 0.0;
    let mut out = DiniProfile {
        t_min: Vec::new(),
        energy: Vec::new(),
    };
    for i in 0..nodes.len() - 1 {
        acc += 0.5 * (sq[i] + sq[i + 1]) * (nodes[i] / nodes[i + 1]).ln();
        if (i + 1) % m == 0 {
            out.t_min.push(nodes[i + 1]);
            out.energy.push(acc);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubeEnergy {
    pub id: CubeId,
    pub energy: f64,
    pub mass: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub kind: String,
    pub per_point: Vec<(usize, f64)>,
    pub per_cube: Vec<CubeEnergy>,
    pub total: f64,
    /// `μ(R)` for the Carleson and α sums, `ℓ(R)^n` for the β sum.
    pub normalization: f64,
    /// Plane family used by the β sum.
    pub plane_source: Option<String>,
    /// Cubes whose coefficient could not be computed (too few points); they
    /// contribute zero.
    pub degenerate: usize,
    pub grid: Option<serde_json::Value>,
}

impl EnergyReport {
    pub fn ratio(&self) -> f64 {
        if self.normalization > 0.0 {
            self.total / self.normalization
        } else {
            0.0
        }
    }

    fn assemble(kind: String, per_point: Vec<(usize, f64)>, per_cube: Vec<CubeEnergy>, normalization: f64) -> Self {
        let vals: Vec<f64> = per_cube.iter().map(|c| c.energy).collect();
        EnergyReport {
            kind,
            per_point,
            total: pairwise_sum(&vals),
            per_cube,
            normalization,
            plane_source: None,
            degenerate: 0,
            grid: None,
        }
    }

    /// CSV `cube_id,level,energy,mass`, where `cube_id` is the index within the level.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["cube_id", "level", "energy", "mass"])?;
        for c in &self.per_cube {
            wr.write_record([
                c.id.index.to_string(),
                c.id.level.to_string(),
                c.energy.to_string(),
                c.mass.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "total": self.total,
            "normalization": self.normalization,
            "ratio": self.ratio(),
            "kind": self.kind,
            "grid": self.grid,
            "plane_source": self.plane_source,
            "degenerate": self.degenerate,
        })
    }
}

/// Cubes `Q ⊆ R`, ordered by level then index.
fn family(tree: &CubeTree, r: &Cube) -> Vec<CubeId> {
    let mut ids = tree.descendants(r);
    ids.sort_unstable();
    ids
}

/// Per-point sums of per-cube contributions `contrib[cube][member]`.
fn per_point_totals(tree: &CubeTree, r: &Cube, ids: &[CubeId], contrib: &[Vec<f64>]) -> Vec<(usize, f64)> {
    let mut by_point: BTreeMap<usize, Vec<f64>> = r.members.iter().map(|&p| (p, Vec::new())).collect();
    for (id, vals) in ids.iter().zip(contrib) {
        for (&p, v) in tree.cube(*id).members.iter().zip(vals) {
            by_point.get_mut(&p).expect("member of R").push(*v);
        }
    }
    by_point.into_iter().map(|(p, v)| (p, pairwise_sum(&v))).collect()
}

/// `Σ_{Q⊆R} Σ_{x∈Q} w_x ∫_{ℓ(Q)}^{2ℓ(Q)} |coef(x,t)|² dt/t`, with the inner
/// integral a trapezoid over `m` geometric nodes; normalized by `μ(R)`.
pub fn carleson_energy(
    mu: &DiscreteMeasure,
    tree: &CubeTree,
    r: &Cube,
    kind: &CKind,
    m: usize,
) -> Result<EnergyReport> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 nodes per cube, got {m}")));
    }
    let jr = r.level();
    let levels = (tree.j_max - jr + 1) as usize;
    let h = std::f64::consts::LN_2 / (m - 1) as f64;
    let tw: Vec<f64> = (0..m).map(|k| if k == 0 || k == m - 1 { 0.5 * h } else { h }).collect();
    // one profile per point covering every level below R
    let per_level: Vec<Vec<f64>> = try_map_range(r.members.len(), |a| {
        let p = r.members[a];
        let mut ts = Vec::with_capacity(levels * m);
        for l in 0..levels {
            let side = tree.level(jr + l as i32)[0].side;
            ts.extend((0..m).map(|k| side * 2f64.powf(k as f64 / (m - 1) as f64)));
        }
        let sq = c_profile_sq(mu, mu.point(p), &ts, kind)?;
        Ok::<_, Error>(
            (0..levels)
                .map(|l| {
                    let terms: Vec<f64> = (0..m).map(|k| sq[l * m + k] * tw[k]).collect();
                    mu.weight(p) * pairwise_sum(&terms)
                })
                .collect(),
        )
    })?;
    let ids = family(tree, r);
    let contrib: Vec<Vec<f64>> = map_range(ids.len(), |c| {
        let q = tree.cube(ids[c]);
        let l = (q.level() - jr) as usize;
        q.members
            .iter()
            .map(|p| per_level[r.members.binary_search(p).expect("member of R")][l])
            .collect()
    });
    let per_cube: Vec<CubeEnergy> = ids
        .iter()
        .zip(&contrib)
        .map(|(id, v)| CubeEnergy {
            id: *id,
            energy: pairwise_sum(v),
            mass: tree.cube(*id).mass,
        })
        .collect();
    let per_point = per_point_totals(tree, r, &ids, &contrib);
    let mut rep = EnergyReport::assemble(kind.kind().as_str().to_string(), per_point, per_cube, r.mass);
    rep.grid = Some(serde_json::json!({"nodes_per_cube": m, "levels": [jr, tree.j_max]}));
    Ok(rep)
}

/// `Σ_{Q⊆R} α(Q)² μ(Q)` normalized by `μ(R)`.
pub fn alpha_energy(mu: &DiscreteMeasure, tree: &CubeTree, r: &Cube) -> Result<EnergyReport> {
    alpha_energy_with(mu, tree, r, &AlphaOptions::default())
}

pub fn alpha_energy_with(mu: &DiscreteMeasure, tree: &CubeTree, r: &Cube, opts: &AlphaOptions) -> Result<EnergyReport> {
    let ids = family(tree, r);
    let alphas: Vec<Option<f64>> = try_map_range(ids.len(), |c| match alpha_number_with(mu, tree.cube(ids[c]), opts) {
        Ok(s) => Ok(Some(s.value)),
        Err(Error::DegenerateCube { .. }) => Ok(None),
        Err(e) => Err(e),
    })?;
    let degenerate = alphas.iter().filter(|a| a.is_none()).count();
    let contrib: Vec<Vec<f64>> = ids
        .iter()
        .zip(&alphas)
        .map(|(id, a)| {
            let a2 = a.unwrap_or(0.0).powi(2);
            tree.cube(*id).members.iter().map(|&p| a2 * mu.weight(p)).collect()
        })
        .collect();
    let per_cube = ids
        .iter()
        .zip(&alphas)
        .map(|(id, a)| {
            let q = tree.cube(*id);
            CubeEnergy {
                id: *id,
                energy: a.unwrap_or(0.0).powi(2) * q.mass,
                mass: q.mass,
            }
        })
        .collect();
    let per_point = per_point_totals(tree, r, &ids, &contrib);
    let mut rep = EnergyReport::assemble("alpha".into(), per_point, per_cube, r.mass);
    rep.degenerate = degenerate;
    Ok(rep)
}

/// Which plane `L_Q` the β sum measures distances to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PlaneSource {
    /// Best `L²` plane of `μ` on `B_Q`.
    Beta2,
    /// The α-minimizing plane.
    Alpha(AlphaOptions),
}

impl PlaneSource {
    fn name(&self) -> &'static str {
        match self {
            PlaneSource::Beta2 => "beta2",
            PlaneSource::Alpha(_) => "alpha",
        }
    }

    /// `L_Q`, or `None` when `B_Q` holds too few points for a fit.
    pub fn plane(&self, mu: &DiscreteMeasure, q: &Cube) -> Result<Option<AffinePlane>> {
        match self {
            PlaneSource::Beta2 => {
                if q.ball_radius() <= 0.0 {
                    return Ok(None);
                }
                let ball = Ball::new(q.center_point.clone(), q.ball_radius())?;
                let s = beta_number(mu, &ball, 2)?;
                Ok(s.plane)
            }
            PlaneSource::Alpha(opts) => match alpha_number_with(mu, q, opts) {
                Ok(s) => Ok(s.plane),
                Err(Error::DegenerateCube { .. }) => Ok(None),
                Err(e) => Err(e),
            },
        }
    }
}

/// `Σ_{Q⊆R} Σ_{x∈Q} w_x (dist(x, L_Q)/ℓ(Q))²` normalized by `ℓ(R)^n`.
pub fn beta_energy(mu: &DiscreteMeasure, tree: &CubeTree, r: &Cube, source: &PlaneSource) -> Result<EnergyReport> {
    let ids = family(tree, r);
    let n = mu.dim_intrinsic();
    let d = mu.dim_ambient();
    let planes: Vec<Option<AffinePlane>> = try_map_range(ids.len(), |c| {
        let q = tree.cube(ids[c]);
        // a cube that is itself too small for B_Q still has its own best plane
        Ok::<_, Error>(source.plane(mu, q)?.or_else(|| {
            weighted_pca_plane(q.members.iter().map(|&p| (mu.point(p), mu.weight(p))), n, d)
        }))
    })?;
    let degenerate = planes.iter().filter(|p| p.is_none()).count();
    let contrib: Vec<Vec<f64>> = map_range(ids.len(), |c| {
        let q = tree.cube(ids[c]);
        match &planes[c] {
            Some(l) => q
                .members
                .iter()
                .map(|&p| mu.weight(p) * (l.dist(mu.point(p)) / q.side).powi(2))
                .collect(),
            None => vec![0.0; q.members.len()],
        }
    });
    let per_cube = ids
        .iter()
        .zip(&contrib)
        .map(|(id, v)| CubeEnergy {
            id: *id,
            energy: pairwise_sum(v),
            mass: tree.cube(*id).mass,
        })
        .collect();
    let per_point = per_point_totals(tree, r, &ids, &contrib);
    let mut rep = EnergyReport::assemble("beta".into(), per_point, per_cube, r.side.powi(n as i32));
    rep.plane_source = Some(source.name().to_string());
    rep.degenerate = degenerate;
    Ok(rep)
}

/// Martingale differences of `f` along the cube tree below `R`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Martingale {
    /// `f_R`, the `μ`-average of `f` over `R`.
    pub root_average: f64,
    /// `Δ_P f = Σ_{S child of P} (f_S - f_P) 1_S` on the members of `P`, for
    /// every `P ⊆ R` above the finest level; values follow `P.members`.
    pub deltas: BTreeMap<CubeId, Vec<f64>>,
    /// `f - f_Q` on the finest-level cube `Q` of each member of `R`, in the
    /// order of `R.members`. Zero when the finest cubes are single points.
    pub residual: Vec<f64>,
}

impl Martingale {
    /// `f_R + Σ_P Δ_P f(x)` at a member `x` of `R`: the finest-cube average.
    pub fn reconstruct(&self, tree: &CubeTree, r: &Cube, p: usize) -> f64 {
        let mut v = self.root_average;
        for j in r.level()..tree.j_max {
            let q = tree.cube_of(p, j);
            if let Some(d) = self.deltas.get(&q.id) {
                v += d[q.members.binary_search(&p).expect("member")];
            }
        }
        v
    }
}

/// `μ`-average of `f` over `Q`; zero on massless cubes.
fn average(mu: &DiscreteMeasure, q: &Cube, f: &[f64]) -> f64 {
    if q.mass <= 0.0 {
        return 0.0;
    }
    let terms: Vec<f64> = q.members.iter().map(|&p| mu.weight(p) * f[p]).collect();
    pairwise_sum(&terms) / q.mass
}

/// `f` is indexed by point, `f.len() == μ.len()`.
pub fn martingale_decompose(mu: &DiscreteMeasure, tree: &CubeTree, r: &Cube, f: &[f64]) -> Result<Martingale> {
    if f.len() != mu.len() {
        return Err(Error::LengthMismatch {
            expected: mu.len(),
            found: f.len(),
        });
    }
    let ids = family(tree, r);
    let avg: BTreeMap<CubeId, f64> = ids
        .iter()
        .zip(map_range(ids.len(), |c| average(mu, tree.cube(ids[c]), f)))
        .map(|(id, a)| (*id, a))
        .collect();
    let mut deltas = BTreeMap::new();
    for id in ids.iter().filter(|id| id.level < tree.j_max) {
        let q = tree.cube(*id);
        let fp = avg[id];
        let v: Vec<f64> = q
            .members
            .iter()
            .map(|&p| avg[&tree.cube_of(p, id.level + 1).id] - fp)
            .collect();
        deltas.insert(*id, v);
    }
    let residual = r
        .members
        .iter()
        .map(|&p| f[p] - avg[&tree.cube_of(p, tree.j_max).id])
        .collect();
    Ok(Martingale {
        root_average: avg[&r.id],
        deltas,
        residual,
    })
}

/// One row of the weak-(1,1) table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weak11Row {
    pub lambda: f64,
    /// `μ{x : C_ν(x) > λ}`.
    pub level_set: f64,
    /// `‖ν‖/λ`.
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Weak11Report {
    pub rows: Vec<Weak11Row>,
    /// `sup_λ λ μ{C_ν > λ} / ‖ν‖`; zero when every level set is empty.
    pub k_emp: f64,
    pub values: Vec<f64>,
}

/// Evaluates `C_ν(x) = (∫ |C_ν(x,t)|² dt/t)^{1/2}` on the grid at every point
/// of `spt μ` and compares the level sets with `‖ν‖/λ`.
pub fn weak11_check(mu: &DiscreteMeasure, nu: &DiscreteMeasure, lambdas: &[f64], grid: &ScaleGrid) -> Result<Weak11Report> {
    if mu.dim_ambient() != nu.dim_ambient() {
        return Err(Error::DimensionMismatch {
            index: 0,
            expected: mu.dim_ambient(),
            found: nu.dim_ambient(),
        });
    }
    let values: Vec<f64> = try_map_range(mu.len(), |i| {
        Ok::<_, Error>(dini_integral(nu, mu.point(i), grid, &CKind::C)?.max(0.0).sqrt())
    })?;
    let norm = nu.total_variation();
    let mut k_emp: f64 = 0.0;
    let rows = lambdas
        .iter()
        .map(|&lambda| {
            let above: Vec<f64> = (0..mu.len())
                .filter(|&i| values[i] > lambda)
                .map(|i| mu.weight(i))
                .collect();
            let level_set = pairwise_sum(&above);
            if norm > 0.0 {
                k_emp = k_emp.max(lambda * level_set / norm);
            }
            Weak11Row {
                lambda,
                level_set,
                bound: if lambda > 0.0 { norm / lambda } else { f64::INFINITY },
            }
        })
        .collect();
    Ok(Weak11Report { rows, k_emp, values })
}

/// `‖C_μ(f)‖_{L²(μ|R)} / ‖f‖_{L²(μ)}` with `C_μ(f)(x)² = ∫|C_{fμ}(x,t)|² dt/t`
/// over `t ∈ [ℓ_finest, ℓ(R)]`.
pub fn operator_l2_ratio(mu: &DiscreteMeasure, tree: &CubeTree, r: &Cube, f: &[f64]) -> Result<f64> {
    let fmu = mu.multiply_density(f)?;
    let fl2: Vec<f64> = (0..mu.len()).map(|i| mu.weight(i) * f[i] * f[i]).collect();
    let den = pairwise_sum(&fl2);
    if den <= 0.0 {
        return Err(Error::InvalidArgument("f vanishes in L2(mu)".into()));
    }
    let t_min = tree.level(tree.j_max)[0].side;
    let grid = ScaleGrid::new(t_min, r.side.max(t_min * 2.0), 8)?;
    let terms: Vec<f64> = try_map_range(r.members.len(), |a| {
        let p = r.members[a];
        Ok::<_, Error>(mu.weight(p) * dini_integral(&fmu, mu.point(p), &grid, &CKind::C)?)
    })?;
    Ok((pairwise_sum(&terms) / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cubes::build_christ_cubes_with_unit;
    use crate::measures::build_measure;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn segment(len: f64, h: f64) -> DiscreteMeasure {
        let k = (len / h).round() as usize;
        let pts: Vec<Vec<f64>> = (0..k).map(|i| vec![(i as f64 + 0.5) * h, 0.0]).collect();
        build_measure(&pts, &vec![h; k], 1).unwrap()
    }

    fn lines3(extent: f64, h: f64) -> DiscreteMeasure {
        let k = (extent / h).round() as i64;
        let mut pts = Vec::new();
        for y in [-1.0, 0.0, 1.0] {
            for i in -k..=k {
                pts.push(vec![i as f64 * h, y]);
            }
        }
        let w = vec![h; pts.len()];
        build_measure(&pts, &w, 1).unwrap()
    }

    #[test]
    fn grid_nodes_and_weights() {
        let g = ScaleGrid::new(0.1, 10.0, 8).unwrap();
        let nodes = g.nodes();
        assert_eq!(nodes[0], 10.0);
        assert!(nodes.windows(2).all(|w| w[1] < w[0]));
        assert!(*nodes.last().unwrap() <= 0.1 && nodes[nodes.len() - 2] > 0.1);
        // weights integrate dt/t exactly
        let s: f64 = g.weights().iter().sum();
        assert!((s - 100f64.ln()).abs() < 1e-12);
        // and ln t exactly (trapezoid is exact for linear integrands)
        let lin: f64 = g.weights().iter().zip(&nodes).map(|(w, t)| w * t.ln()).sum();
        let exact = 0.5 * (10f64.ln().powi(2) - 0.1f64.ln().powi(2));
        assert!((lin - exact).abs() < 1e-12);
        assert!(ScaleGrid::new(1.0, 1.0, 8).is_err());
        assert!(ScaleGrid::new(0.1, 1.0, 3).is_err());
    }

    #[test]
    fn symmetric_lines_have_zero_energy() {
        let mu = lines3(50.0, 0.01);
        let g = ScaleGrid::new(0.1, 10.0, 8).unwrap();
        let e = dini_integral(&mu, &[0.3, 0.0], &g, &CKind::C).unwrap();
        assert!(e.abs() < 1e-8, "{e}");
    }

    /// Riemann oracle for a unit-density interval `[0, len]` seen from `x`:
    /// `|C(x,t)| = |∫_{(x-t,x+t)∩[0,len]} (x-y) dy| / t²`.
    fn interval_c(x: f64, len: f64, t: f64) -> f64 {
        let (a, b) = ((x - t).max(0.0), (x + t).min(len));
        let steps = 20000;
        let h = (b - a) / steps as f64;
        let s: f64 = (0..steps).map(|i| x - (a + (i as f64 + 0.5) * h)).sum::<f64>() * h;
        s.abs() / (t * t)
    }

    #[test]
    fn segment_energy_small_inside_and_bounded_past_endpoint() {
        let h = 1e-3;
        let mu = segment(1.0, h);
        let x = [0.3 + 0.5 * h, 0.0];
        let a = 0.3;
        let inner = dini_integral(&mu, &x, &ScaleGrid::new(h, a, 8).unwrap(), &CKind::C).unwrap();
        assert!(inner < 1e-4, "{inner}");
        let mut last = 0.0;
        for tmin in [h, 4.0 * h, 16.0 * h] {
            let g = ScaleGrid::new(tmin, 4.0, 16).unwrap();
            let e = dini_integral(&mu, &x, &g, &CKind::C).unwrap();
            // oracle on the same nodes
            let want: f64 = g
                .nodes()
                .iter()
                .zip(g.weights())
                .map(|(t, w)| w * interval_c(x[0], 1.0, *t).powi(2))
                .sum();
            assert!((e - want).abs() < 1e-3 * want.max(1e-6), "{e} vs {want}");
            if last > 0.0 {
                assert!((e - last).abs() < 0.01 * last);
            }
            last = e;
        }
    }

    #[test]
    fn profile_slope_examples() {
        let p = DiniProfile {
            t_min: vec![0.5, 0.25, 0.125, 0.0625],
            energy: vec![1.0, 1.0, 1.0, 1.0],
        };
        assert_eq!(p.slope(), 0.0);
        assert!(p.is_bounded());
        // E = (1/t)^{0.5}
        let q = DiniProfile {
            t_min: p.t_min.clone(),
            energy: p.t_min.iter().map(|t| t.powf(-0.5)).collect(),
        };
        assert!((q.slope() - 0.5).abs() < 1e-12);
        // the profile's last energy equals the direct integral
        let mu = segment(1.0, 1e-2);
        let x = [0.105, 0.0];
        let prof = dini_profile(&mu, &x, 1.0, 5, 8, &CKind::C).unwrap();
        let direct = dini_integral(&mu, &x, &ScaleGrid::octaves(1.0, 5, 8).unwrap(), &CKind::C).unwrap();
        assert!((prof.energy[4] - direct).abs() < 1e-12 * direct.max(1.0));
        assert_eq!(prof.t_min.len(), 5);
    }

    fn tree_of(mu: &DiscreteMeasure, jmax: i32) -> CubeTree {
        build_christ_cubes_with_unit(mu, 0, jmax, 1.0).unwrap()
    }

    #[test]
    fn carleson_totals_additivity_and_monotonicity() {
        let mu = segment(1.0, 1.0 / 256.0);
        let tree = tree_of(&mu, 6);
        let root = tree.root();
        let rep = carleson_energy(&mu, &tree, root, &CKind::C, 5).unwrap();
        let sum: f64 = rep.per_cube.iter().map(|c| c.energy).sum();
        assert!((rep.total - sum).abs() <= 1e-9 * rep.total);
        let pts: f64 = rep.per_point.iter().map(|p| p.1).sum();
        assert!((rep.total - pts).abs() <= 1e-9 * rep.total);
        let own: f64 = rep.per_cube.iter().filter(|c| c.id == root.id).map(|c| c.energy).sum();
        let mut kids = 0.0;
        for c in tree.children(root) {
            let sub = carleson_energy(&mu, &tree, c, &CKind::C, 5).unwrap();
            assert!(sub.total <= rep.total);
            kids += sub.total;
        }
        assert!((rep.total - own - kids).abs() <= 1e-9 * rep.total);
        assert_eq!(rep.normalization, root.mass);
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("cube_id,level,energy,mass\n"));
    }

    #[test]
    fn alpha_and_beta_energy_on_flat_line() {
        // the line runs well past every B_Q of the cubes below R
        let h = 1.0 / 128.0;
        let pts: Vec<Vec<f64>> = (-512..=512).map(|i| vec![i as f64 * h, 0.0]).collect();
        let mu = build_measure(&pts, &vec![h; pts.len()], 1).unwrap();
        let tree = build_christ_cubes_with_unit(&mu, 0, 4, 4.0).unwrap();
        let r = tree.cube_of(512, 3);
        let b = beta_energy(&mu, &tree, r, &PlaneSource::Beta2).unwrap();
        assert!(b.total < 1e-20);
        assert_eq!(b.plane_source.as_deref(), Some("beta2"));
        let a = alpha_energy(&mu, &tree, r).unwrap();
        let sum: f64 = a.per_cube.iter().map(|c| c.energy).sum();
        assert!((a.total - sum).abs() <= 1e-9 * a.total.max(1e-300));
        assert!(a.ratio() < 0.05, "{}", a.ratio());
    }

    #[test]
    fn martingale_constant_and_indicator() {
        let mu = segment(1.0, 1.0 / 64.0);
        let tree = tree_of(&mu, 6);
        let r = tree.root();
        let m = martingale_decompose(&mu, &tree, r, &vec![2.5; mu.len()]).unwrap();
        assert!((m.root_average - 2.5).abs() < 1e-12);
        assert!(m.deltas.values().flatten().all(|v| v.abs() < 1e-12));

        let s = tree.children(r).next().unwrap().clone();
        let mut f = vec![0.0; mu.len()];
        s.members.iter().for_each(|&p| f[p] = 1.0);
        let m = martingale_decompose(&mu, &tree, r, &f).unwrap();
        let ratio = s.mass / r.mass;
        for (k, &p) in r.members.iter().enumerate() {
            let want = if s.members.binary_search(&p).is_ok() { 1.0 - ratio } else { -ratio };
            assert!((m.deltas[&r.id][k] - want).abs() < 1e-12);
        }
        for (id, d) in &m.deltas {
            if *id != r.id {
                assert!(d.iter().all(|v| v.abs() < 1e-12));
            }
        }
        assert!(martingale_decompose(&mu, &tree, r, &[1.0]).is_err());
    }

    #[test]
    fn weak11_zero_and_atom() {
        let mu = segment(1.0, 1.0 / 128.0);
        let zero = build_measure(&[vec![0.5, 0.5]], &[0.0], 1).unwrap();
        let g = ScaleGrid::new(1.0 / 128.0, 1.0, 8).unwrap();
        let rep = weak11_check(&mu, &zero, &[0.1, 1.0], &g).unwrap();
        assert!(rep.rows.iter().all(|r| r.level_set == 0.0));
        assert_eq!(rep.k_emp, 0.0);
        let atom = build_measure(&[vec![0.5, 0.1]], &[1.0], 1).unwrap();
        let rep = weak11_check(&mu, &atom, &[0.5, 1.0, 2.0, 4.0], &g).unwrap();
        assert!(rep.k_emp.is_finite() && rep.k_emp > 0.0);
        assert!(rep.rows.windows(2).all(|w| w[1].level_set <= w[0].level_set));
    }

    #[test]
    fn operator_ratio_examples() {
        let mu = lines3(4.0, 1.0 / 32.0);
        let tree = build_christ_cubes_with_unit(&mu, 0, 5, 2.0).unwrap();
        // a level-1 cube on the middle line far from the ends
        let mid = (0..mu.len()).find(|&i| mu.point(i) == [0.0, 0.0]).unwrap();
        let q = tree.cube_of(mid, 2);
        assert!(q.members.iter().all(|&p| mu.point(p)[0].abs() < 2.0));
        let r = operator_l2_ratio(&mu, &tree, q, &vec![1.0; mu.len()]).unwrap();
        assert!(r < 1e-7, "{r}");
        assert!(operator_l2_ratio(&mu, &tree, q, &vec![0.0; mu.len()]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn martingale_parseval(seed in 0u64..1000) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let pts: Vec<Vec<f64>> = (0..40).map(|_| vec![rng.gen_range(0.0..1.0), rng.gen_range(0.0..1.0)]).collect();
            let w: Vec<f64> = (0..40).map(|_| rng.gen_range(0.1..1.0)).collect();
            let mu = build_measure(&pts, &w, 1).unwrap();
            let tree = build_christ_cubes_with_unit(&mu, 0, 2, 2.0).unwrap();
            let r = tree.root();
            let f: Vec<f64> = (0..40).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let m = martingale_decompose(&mu, &tree, r, &f).unwrap();
            let mut lhs = m.root_average.powi(2) * r.mass;
            for (id, d) in &m.deltas {
                let q = tree.cube(*id);
                lhs += q.members.iter().zip(d).map(|(&p, v)| mu.weight(p) * v * v).sum::<f64>();
            }
            lhs += r.members.iter().zip(&m.residual).map(|(&p, v)| mu.weight(p) * v * v).sum::<f64>();
            let rhs: f64 = (0..40).map(|i| w[i] * f[i] * f[i]).sum();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs);
            for (k, &p) in r.members.iter().enumerate() {
                prop_assert!((m.reconstruct(&tree, r, p) + m.residual[k] - f[p]).abs() < 1e-12);
            }
        }

        #[test]
        // off the centre, where the energy is pure discretization noise
        fn dini_refinement_stable(i in 100usize..200) {
            let mu = segment(1.0, 1.0 / 512.0);
            let p = mu.point(i).to_vec();
            let a = dini_integral(&mu, &p, &ScaleGrid::new(0.01, 1.0, 8).unwrap(), &CKind::C).unwrap();
            let b = dini_integral(&mu, &p, &ScaleGrid::new(0.01, 1.0, 16).unwrap(), &CKind::C).unwrap();
            prop_assert!((a - b).abs() <= 0.02 * a.max(1e-12) + 1e-12);
        }
    }
}

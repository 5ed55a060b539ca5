//! Christ–David cubes on the support of a discrete measure, and the standard
//! dyadic grid of `ℝ^d`.
//!
//! The intrinsic cubes come from one farthest-point traversal of the support.
//! The prefix of points inserted at radius `> r_j = scale_unit·2^{-j}` is an
//! `r_j`-net `N_j`, and the nets are nested. Points are assigned to the
//! nearest center of the finest net. Each level-`(j+1)` cell then joins a
//! level-`j` center within `r_j` of its own center (a center that survives to
//! the coarser net keeps itself), which makes the levels nested partitions
//! with `|p - z_Q| < 2 r_j` for every member `p`. Among the admissible
//! parents the one with the least mass so far is taken, most constrained
//! cells first; plain nearest-center chaining drifts and leaves slivers at
//! the ends of lattice-like supports.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::{dist, exact_diameter, DiscreteMeasure};
use crate::spatial::KdTree;

/// Address of a cube inside a [`CubeTree`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CubeId {
    pub level: i32,
    pub index: usize,
}

#[derive(Debug, Clone)]
pub struct Cube {
    pub id: CubeId,
    /// Point index of `z_Q`.
    pub center: usize,
    pub center_point: Vec<f64>,
    /// Sorted point indices.
    pub members: Vec<usize>,
    pub mass: f64,
    pub diam: f64,
    /// `ℓ(Q) = scale_unit·2^{-j}`.
    pub side: f64,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Fewer than two distinct points; exempt from the diameter bounds.
    pub singleton: bool,
}

impl Cube {
    pub fn level(&self) -> i32 {
        self.id.level
    }

    /// `B_Q = B(z_Q, 3 diam(Q))`.
    pub fn ball_radius(&self) -> f64 {
        3.0 * self.diam
    }
}

#[derive(Debug, Clone)]
pub struct CubeTree {
    pub j_min: i32,
    pub j_max: i32,
    pub scale_unit: f64,
    levels: Vec<Vec<Cube>>,
    // assignment[level][point] = cube index at that level
    assignment: Vec<Vec<usize>>,
    /// Largest `max(diam/ℓ, ℓ/diam)` over non-singleton cubes.
    pub c0: f64,
}

/// Builds cubes on levels `j_min..=j_max` with `scale_unit = diam(spt μ)`.
pub fn build_christ_cubes(mu: &DiscreteMeasure, j_min: i32, j_max: i32) -> Result<CubeTree> {
    let unit = mu.diameter();
    build_christ_cubes_with_unit(mu, j_min, j_max, if unit > 0.0 { unit } else { 1.0 })
}

pub fn build_christ_cubes_with_unit(
    mu: &DiscreteMeasure,
    j_min: i32,
    j_max: i32,
    scale_unit: f64,
) -> Result<CubeTree> {
    mu.require_nonnegative()?;
    if mu.is_empty() {
        return Err(Error::Empty);
    }
    if j_min > j_max || !(scale_unit > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need j_min <= j_max and positive scale unit (got {j_min}, {j_max}, {scale_unit})"
        )));
    }
    let r = |j: i32| scale_unit * 2f64.powi(-j);
    let (order, radii) = farthest_point_order(mu.index(), r(j_max));
    let nlev = (j_max - j_min + 1) as usize;
    let prefix_len = |j: i32| radii.iter().take_while(|&&rho| rho > r(j)).count();

    let mut assignment = vec![Vec::new(); nlev];
    let mut centers_by_level: Vec<Vec<usize>> = vec![Vec::new(); nlev];
    for li in 0..nlev {
        let mut c: Vec<usize> = order[..prefix_len(j_min + li as i32)].to_vec();
        c.sort_unstable();
        centers_by_level[li] = c;
    }

    // finest level: nearest center, ties to the lowest point index
    let finest = &centers_by_level[nlev - 1];
    let tree = center_tree(mu, finest);
    assignment[nlev - 1] = crate::par::map_range(mu.len(), |i| {
        tree.nearest(mu.point(i), None).expect("nonempty net").0
    });
    let mut parent_of: Vec<Vec<usize>> = vec![Vec::new(); nlev];
    for li in (0..nlev - 1).rev() {
        let coarse = &centers_by_level[li];
        let tree = center_tree(mu, coarse);
        let fine = &centers_by_level[li + 1];
        let rj = r(j_min + li as i32) * (1.0 + 1e-12);
        let admissible: Vec<Vec<usize>> = crate::par::map_slice(fine, |&c| {
            if let Ok(own) = coarse.binary_search(&c) {
                return vec![own];
            }
            let mut v = Vec::new();
            tree.tree.for_each_within(mu.point(c), rj, true, |k, _| v.push(k));
            if v.is_empty() {
                v.push(tree.nearest(mu.point(c), None).unwrap().0);
            }
            v.sort_unstable();
            v
        });
        let mut child_mass = vec![0.0; fine.len()];
        for (p, &k) in assignment[li + 1].iter().enumerate() {
            child_mass[k] += mu.weight(p);
        }
        // Most constrained children first; each goes to the lightest admissible parent.
        let mut order: Vec<usize> = (0..fine.len()).collect();
        order.sort_by_key(|&k| (admissible[k].len(), k));
        let mut load = vec![0.0; coarse.len()];
        let mut up = vec![0usize; fine.len()];
        for k in order {
            let mut best = admissible[k][0];
            for &p in &admissible[k][1..] {
                if load[p] < load[best] {
                    best = p;
                }
            }
            up[k] = best;
            load[best] += child_mass[k];
        }
        parent_of[li + 1] = up.clone();
        assignment[li] = assignment[li + 1].iter().map(|&k| up[k]).collect();
    }

    let mut levels: Vec<Vec<Cube>> = Vec::with_capacity(nlev);
    for li in 0..nlev {
        let j = j_min + li as i32;
        let centers = &centers_by_level[li];
        let mut members = vec![Vec::new(); centers.len()];
        for (p, &k) in assignment[li].iter().enumerate() {
            members[k].push(p);
        }
        let cubes = crate::par::map_range(centers.len(), |k| {
            let m = &members[k];
            let mass = m.iter().map(|&i| mu.weight(i)).sum();
            let diam = exact_diameter(mu.index(), m);
            Cube {
                id: CubeId { level: j, index: k },
                center: centers[k],
                center_point: mu.point(centers[k]).to_vec(),
                members: m.clone(),
                mass,
                diam,
                side: r(j),
                parent: if li > 0 { Some(parent_of[li][k]) } else { None },
                children: Vec::new(),
                singleton: diam == 0.0,
            }
        });
        levels.push(cubes);
    }
    for li in 1..nlev {
        for k in 0..levels[li].len() {
            let p = levels[li][k].parent.unwrap();
            levels[li - 1][p].children.push(k);
        }
    }
    let c0 = levels
        .iter()
        .flatten()
        .filter(|q| !q.singleton)
        .map(|q| (q.diam / q.side).max(q.side / q.diam))
        .fold(1.0, f64::max);
    Ok(CubeTree {
        j_min,
        j_max,
        scale_unit,
        levels,
        assignment,
        c0,
    })
}

fn center_tree(mu: &DiscreteMeasure, centers: &[usize]) -> CenterIndex {
    let mut coords = Vec::with_capacity(centers.len() * mu.dim_ambient());
    for &c in centers {
        coords.extend_from_slice(mu.point(c));
    }
    CenterIndex {
        tree: KdTree::new(mu.dim_ambient(), coords),
    }
}

// Centers sorted by point index, so the tree's lowest-index tie-break is the
// lowest point index. `nearest` returns the position in that sorted list.
struct CenterIndex {
    tree: KdTree,
}

impl CenterIndex {
    fn nearest(&self, x: &[f64], exclude: Option<usize>) -> Option<(usize, f64)> {
        self.tree.nearest(x, exclude)
    }
}

/// Gonzalez traversal from point 0 with a lazy max-heap keyed on
/// (distance desc, index asc). Returns the insertion order and the insertion
/// radius of each point (`∞` for the first), stopping once the next radius
/// would be `<= r_stop`.
fn farthest_point_order(index: &KdTree, r_stop: f64) -> (Vec<usize>, Vec<f64>) {
    let n = index.len();
    let mut d = vec![f64::INFINITY; n];
    let mut heap: BinaryHeap<(u64, Reverse<usize>)> = BinaryHeap::new();
    let mut order = vec![0usize];
    let mut radii = vec![f64::INFINITY];
    d[0] = 0.0;
    for i in 1..n {
        d[i] = dist(index.point(0), index.point(i));
        heap.push((d[i].to_bits(), Reverse(i)));
    }
    while let Some((bits, Reverse(i))) = heap.pop() {
        if bits != d[i].to_bits() || d[i] == 0.0 {
            continue;
        }
        let rho = d[i];
        if rho <= r_stop {
            break;
        }
        order.push(i);
        radii.push(rho);
        d[i] = 0.0;
        let c = index.point(i).to_vec();
        let mut touched = Vec::new();
        index.for_each_within(&c, rho, false, |k, d2| {
            let v = d2.sqrt();
            if v < d[k] {
                touched.push((k, v));
            }
        });
        for (k, v) in touched {
            d[k] = v;
            if v > 0.0 {
                heap.push((v.to_bits(), Reverse(k)));
            }
        }
    }
    (order, radii)
}

impl CubeTree {
    pub fn level(&self, j: i32) -> &[Cube] {
        &self.levels[(j - self.j_min) as usize]
    }

    pub fn cube(&self, id: CubeId) -> &Cube {
        &self.level(id.level)[id.index]
    }

    pub fn root(&self) -> &Cube {
        &self.levels[0][0]
    }

    pub fn cubes(&self) -> impl Iterator<Item = &Cube> {
        self.levels.iter().flatten()
    }

    pub fn children(&self, q: &Cube) -> impl Iterator<Item = &Cube> + '_ {
        let lev = q.level() + 1;
        let kids: Vec<usize> = if lev <= self.j_max { q.children.clone() } else { Vec::new() };
        kids.into_iter().map(move |k| &self.level(lev)[k])
    }

    pub fn parent(&self, q: &Cube) -> Option<&Cube> {
        q.parent.map(|p| &self.level(q.level() - 1)[p])
    }

    /// The level-`j` cube containing point `p`.
    pub fn cube_of(&self, p: usize, j: i32) -> &Cube {
        &self.level(j)[self.assignment[(j - self.j_min) as usize][p]]
    }

    /// All cubes `Q ⊆ R` (including `R`), level by level.
    pub fn descendants(&self, r: &Cube) -> Vec<CubeId> {
        let mut out = vec![r.id];
        let mut frontier = vec![r.id];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for id in &frontier {
                let q = self.cube(*id);
                next.extend(self.children(q).map(|c| c.id));
            }
            out.extend_from_slice(&next);
            frontier = next;
        }
        out
    }

    /// Same-level cubes `P` with `dist(P, Q) <= ℓ(Q)`, including `Q`, sorted.
    pub fn neighbors(&self, mu: &DiscreteMeasure, q: &Cube) -> Vec<CubeId> {
        let li = (q.level() - self.j_min) as usize;
        let mut found = BTreeSet::new();
        for &x in &q.members {
            mu.index().for_each_within(mu.point(x), q.side, true, |y, _| {
                found.insert(self.assignment[li][y]);
            });
        }
        found
            .into_iter()
            .map(|k| CubeId {
                level: q.level(),
                index: k,
            })
            .collect()
    }

    /// `N(Q)`: union of the member sets of the neighbours, sorted.
    pub fn neighborhood(&self, mu: &DiscreteMeasure, q: &Cube) -> Vec<usize> {
        let mut v: Vec<usize> = self
            .neighbors(mu, q)
            .iter()
            .flat_map(|id| self.cube(*id).members.iter().copied())
            .collect();
        v.sort_unstable();
        v
    }

    /// `μ{x ∈ Q : dist(x, spt μ ∖ Q) <= τ ℓ(Q)} / μ(Q)`.
    pub fn small_boundary_ratio(&self, mu: &DiscreteMeasure, q: &Cube, tau: f64) -> Result<f64> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::InvalidArgument(format!("tau {tau} not in (0, 1)")));
        }
        if q.mass <= 0.0 {
            return Ok(0.0);
        }
        let li = (q.level() - self.j_min) as usize;
        let own = q.id.index;
        let near: f64 = q
            .members
            .iter()
            .filter(|&&x| {
                mu.index().any_within_closed(mu.point(x), tau * q.side, |y| {
                    self.assignment[li][y] == own || mu.weight(y) <= 0.0
                })
            })
            .map(|&x| mu.weight(x))
            .sum();
        Ok(near / q.mass)
    }

    /// Nested `{level, center, side, mass, children}` starting at `q`.
    pub fn to_json(&self, q: &Cube) -> serde_json::Value {
        let kids: Vec<serde_json::Value> = self.children(q).map(|c| self.to_json(c)).collect();
        serde_json::json!({
            "level": q.level(),
            "center": q.center_point,
            "side": q.side,
            "mass": q.mass,
            "children": kids,
        })
    }
}

/// Standard half-open dyadic cube `2^{-level}(corner + [0,1)^d)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GridCube {
    pub level: i32,
    pub corner: Vec<i64>,
}

impl GridCube {
    pub fn containing(p: &[f64], level: i32) -> Self {
        let s = 2f64.powi(level);
        GridCube {
            level,
            corner: p.iter().map(|v| (v * s).floor() as i64).collect(),
        }
    }

    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    pub fn center(&self) -> Vec<f64> {
        let s = self.side();
        self.corner.iter().map(|&c| (c as f64 + 0.5) * s).collect()
    }

    /// Half-open box `[c - f s/2, c + f s/2)` of the dilation `f·Q` about the center.
    pub fn dilation_bounds(&self, factor: f64) -> (Vec<f64>, Vec<f64>) {
        let h = 0.5 * factor * self.side();
        let c = self.center();
        (c.iter().map(|v| v - h).collect(), c.iter().map(|v| v + h).collect())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        let s = 2f64.powi(self.level);
        p.iter().zip(&self.corner).all(|(v, &c)| (v * s).floor() as i64 == c)
    }

    pub fn dilation_contains(&self, factor: f64, p: &[f64]) -> bool {
        let (lo, hi) = self.dilation_bounds(factor);
        p.iter().zip(lo.iter().zip(&hi)).all(|(v, (a, b))| *v >= *a && *v < *b)
    }

    pub fn children(&self) -> Vec<GridCube> {
        let d = self.corner.len();
        (0..1usize << d)
            .map(|mask| GridCube {
                level: self.level + 1,
                corner: (0..d).map(|k| 2 * self.corner[k] + ((mask >> k) & 1) as i64).collect(),
            })
            .collect()
    }

    pub fn parent(&self) -> GridCube {
        GridCube {
            level: self.level - 1,
            corner: self.corner.iter().map(|c| c.div_euclid(2)).collect(),
        }
    }

    /// True if `self` is `other` or one of its dyadic descendants.
    pub fn is_within(&self, other: &GridCube) -> bool {
        if self.level < other.level {
            return false;
        }
        let shift = (self.level - other.level) as u32;
        self.corner
            .iter()
            .zip(&other.corner)
            .all(|(a, b)| a >> shift == *b)
    }
}

/// Distinct dyadic cubes of side `2^{-level}` holding at least one point, sorted.
pub fn grid_cubes_touching<'a, I>(points: I, level: i32) -> Vec<GridCube>
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let set: BTreeSet<GridCube> = points.into_iter().map(|p| GridCube::containing(p, level)).collect();
    set.into_iter().collect()
}

use super::{CKind, CoefficientSample, Kind, SphereMap};
use crate::error::{Error, Result};
use crate::measures::DiscreteMeasure;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|a| a * a).sum::<f64>().sqrt()
}

/// Radius of the open ball actually queried. Points whose computed distance
/// is within rounding of `t` are taken to lie on the sphere, so mirror-image
/// lattice points are included or excluded together.
pub(crate) fn open_radius(x: &[f64], t: f64) -> f64 {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs())) + t;
    (t - 8.0 * f64::EPSILON * scale).max(0.0)
}

/// `C^n_μ(x,t)`: vector `t^{-n-1} Σ_{|p_i - x| < t} w_i (x - p_i)` and its norm.
pub fn c_number(mu: &DiscreteMeasure, x: &[f64], t: f64) -> CoefficientSample {
    let d = mu.dim_ambient();
    let mut v = vec![0.0; d];
    if t > 0.0 {
        for i in mu.ball_indices(x, open_radius(x, t)) {
            let w = mu.weight(i);
            v.iter_mut().zip(x.iter().zip(mu.point(i))).for_each(|(a, (xk, pk))| *a += w * (xk - pk));
        }
        let s = t.powi(mu.dim_intrinsic() as i32 + 1);
        v.iter_mut().for_each(|a| *a /= s);
    }
    CoefficientSample::vector_sample(x, t, Kind::C, v)
}

/// Cutoff beyond which `exp(-(r/t)^{2N})` is below machine epsilon.
pub fn smooth_cutoff(t: f64, big_n: u32) -> f64 {
    t * (1.0 / f64::EPSILON).ln().powf(1.0 / (2.0 * big_n as f64))
}

/// Smooth C-number with profile `φ_N(v) = exp(-|v|^{2N})`:
/// `Σ_i w_i ((x - p_i)/t) t^{-n} exp(-|x - p_i|^{2N}/t^{2N})`.
pub fn smooth_c_number(mu: &DiscreteMeasure, x: &[f64], t: f64, big_n: u32) -> CoefficientSample {
    let d = mu.dim_ambient();
    let mut v = vec![0.0; d];
    if t > 0.0 && big_n >= 1 {
        let n = mu.dim_intrinsic() as i32;
        for i in mu.ball_indices(x, smooth_cutoff(t, big_n)) {
            let p = mu.point(i);
            let r2 = crate::measures::dist2(x, p) / (t * t);
            let g = mu.weight(i) * (-r2.powi(big_n as i32)).exp();
            v.iter_mut().zip(x.iter().zip(p)).for_each(|(a, (xk, pk))| *a += g * (xk - pk));
        }
        let s = t.powi(n + 1);
        v.iter_mut().for_each(|a| *a /= s);
    }
    CoefficientSample::vector_sample(x, t, Kind::CSmooth, v)
}

/// Ω-perturbed C-number in the plane: `t^{-n-1} Σ_{|p_i - x| < t} w_i K(x - p_i)`
/// with `K(v) = |v| Ω(v/|v|)` and `K(0) = 0`.
pub fn omega_c_number(mu: &DiscreteMeasure, x: &[f64], t: f64, omega: &SphereMap) -> Result<CoefficientSample> {
    if mu.dim_ambient() != 2 || x.len() != 2 {
        return Err(Error::UnsupportedDimension(mu.dim_ambient()));
    }
    let mut v = [0.0; 2];
    if t > 0.0 {
        for i in mu.ball_indices(x, open_radius(x, t)) {
            let p = mu.point(i);
            let k = omega.kernel([x[0] - p[0], x[1] - p[1]]);
            let w = mu.weight(i);
            v[0] += w * k[0];
            v[1] += w * k[1];
        }
        let s = t.powi(mu.dim_intrinsic() as i32 + 1);
        v[0] /= s;
        v[1] /= s;
    }
    Ok(CoefficientSample::vector_sample(x, t, Kind::COmega, v.to_vec()))
}

/// Coefficient vectors of one kind at `x` for every `t` in `ts`.
///
/// For the ball-truncated kinds the neighbours inside the largest ball are
/// sorted once by distance and every `t` reads a prefix sum, so the profile
/// costs one range query.
pub fn c_profile(mu: &DiscreteMeasure, x: &[f64], ts: &[f64], kind: &CKind) -> Result<Vec<Vec<f64>>> {
    let d = mu.dim_ambient();
    let n = mu.dim_intrinsic() as i32;
    let omega = match kind {
        CKind::CSmooth(big_n) => {
            return Ok(ts.iter().map(|&t| smooth_c_number(mu, x, t, *big_n).vector.unwrap()).collect());
        }
        CKind::COmega(o) => {
            if d != 2 {
                return Err(Error::UnsupportedDimension(d));
            }
            Some(o)
        }
        CKind::C => None,
    };
    let tmax = ts.iter().copied().fold(0.0, f64::max);
    let mut near: Vec<(f64, usize)> = Vec::new();
    mu.index().for_each_within(x, tmax, false, |i, d2| near.push((d2, i)));
    near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut prefix = vec![vec![0.0; d]; near.len() + 1];
    for (k, &(_, i)) in near.iter().enumerate() {
        let p = mu.point(i);
        let w = mu.weight(i);
        let (head, tail) = prefix.split_at_mut(k + 1);
        let (prev, cur) = (&head[k], &mut tail[0]);
        match omega {
            Some(o) => {
                let kv = o.kernel([x[0] - p[0], x[1] - p[1]]);
                cur[0] = prev[0] + w * kv[0];
                cur[1] = prev[1] + w * kv[1];
            }
            None => {
                for j in 0..d {
                    cur[j] = prev[j] + w * (x[j] - p[j]);
                }
            }
        }
    }
    Ok(ts
        .iter()
        .map(|&t| {
            if !(t > 0.0) {
                return vec![0.0; d];
            }
            let r = open_radius(x, t);
            let cnt = near.partition_point(|&(d2, _)| d2 < r * r);
            let s = t.powi(n + 1);
            prefix[cnt].iter().map(|a| a / s).collect()
        })
        .collect())
}

/// `|coef(x,t)|²` for each `t`.
pub fn c_profile_sq(mu: &DiscreteMeasure, x: &[f64], ts: &[f64], kind: &CKind) -> Result<Vec<f64>> {
    Ok(c_profile(mu, x, ts, kind)?
        .iter()
        .map(|v| v.iter().map(|a| a * a).sum())
        .collect())
}

pub(crate) fn value_of(v: &[f64]) -> f64 {
    norm(v)
}

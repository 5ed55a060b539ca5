use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid used for the bi-Lipschitz check.
pub const CHECK_GRID: usize = 4096;

/// Odd self-map of the unit circle, `Ω(θ) = θ + ψ(θ)` with
/// `ψ(θ) = Σ a_k cos(2kθ) + b_k sin(2kθ)`. Since `ψ` is `π`-periodic,
/// `Ω(θ + π) = Ω(θ) + π`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphereMap {
    pub fourier_coeffs: Vec<(u32, f64, f64)>,
    pub delta: f64,
}

impl SphereMap {
    /// Checks `max|ψ'| <= δ` on the grid and `δ < 1/10`.
    pub fn new(fourier_coeffs: Vec<(u32, f64, f64)>, delta: f64) -> Result<Self> {
        if !(delta >= 0.0 && delta < 0.1) {
            return Err(Error::InvalidArgument(format!("delta {delta} must lie in [0, 0.1)")));
        }
        if fourier_coeffs.iter().any(|&(k, a, b)| k == 0 || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidArgument("Fourier modes need k >= 1 and finite coefficients".into()));
        }
        let map = SphereMap { fourier_coeffs, delta };
        let slope = map.max_slope();
        if slope > delta * (1.0 + 1e-12) {
            return Err(Error::InvalidArgument(format!(
                "max |psi'| = {slope} exceeds delta = {delta}"
            )));
        }
        Ok(map)
    }

    pub fn identity() -> Self {
        SphereMap {
            fourier_coeffs: Vec::new(),
            delta: 0.0,
        }
    }

    pub fn is_identity(&self) -> bool {
        self.fourier_coeffs.iter().all(|&(_, a, b)| a == 0.0 && b == 0.0)
    }

    pub fn psi(&self, theta: f64) -> f64 {
        self.psi_from_double(((2.0 * theta).cos(), (2.0 * theta).sin()))
    }

    pub fn dpsi(&self, theta: f64) -> f64 {
        self.fourier_coeffs
            .iter()
            .map(|&(k, a, b)| {
                let w = 2.0 * k as f64;
                w * (-a * (w * theta).sin() + b * (w * theta).cos())
            })
            .sum()
    }

    pub fn omega(&self, theta: f64) -> f64 {
        theta + self.psi(theta)
    }

    /// `max|ψ'|` over [`CHECK_GRID`] equispaced angles in `[0, π)`.
    pub fn max_slope(&self) -> f64 {
        (0..CHECK_GRID)
            .map(|i| self.dpsi(PI * i as f64 / CHECK_GRID as f64).abs())
            .fold(0.0, f64::max)
    }

    // ψ evaluated from (cos 2θ, sin 2θ) by the angle-addition recurrence.
    // The input is invariant under v -> -v, which makes K exactly odd.
    fn psi_from_double(&self, (c2, s2): (f64, f64)) -> f64 {
        let kmax = self.fourier_coeffs.iter().map(|m| m.0).max().unwrap_or(0);
        if kmax == 0 {
            return 0.0;
        }
        let mut cs = Vec::with_capacity(kmax as usize + 1);
        cs.push((1.0, 0.0));
        for k in 1..=kmax as usize {
            let (c, s) = cs[k - 1];
            cs.push((c * c2 - s * s2, s * c2 + c * s2));
        }
        self.fourier_coeffs
            .iter()
            .map(|&(k, a, b)| a * cs[k as usize].0 + b * cs[k as usize].1)
            .sum()
    }

    /// `K(v) = |v| Ω(v/|v|)` for `v ∈ ℝ²`, computed as `v` rotated by `ψ(θ)`;
    /// `K(0) = 0` and `K(-v) = -K(v)` exactly.
    pub fn kernel(&self, v: [f64; 2]) -> [f64; 2] {
        let r2 = v[0] * v[0] + v[1] * v[1];
        if r2 == 0.0 || self.is_identity() {
            return v;
        }
        let c2 = (v[0] * v[0] - v[1] * v[1]) / r2;
        let s2 = 2.0 * v[0] * v[1] / r2;
        let p = self.psi_from_double((c2, s2));
        let (s, c) = p.sin_cos();
        [c * v[0] - s * v[1], s * v[0] + c * v[1]]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_kernel_is_exact() {
        let m = SphereMap::identity();
        assert_eq!(m.kernel([0.3, -0.7]), [0.3, -0.7]);
    }

    #[test]
    fn oddness_and_angle() {
        let m = SphereMap::new(vec![(1, 0.02, 0.01), (3, 0.001, -0.002)], 0.09).unwrap();
        for i in 0..100 {
            let t = i as f64 * 0.0731;
            assert!((m.omega(t + PI) - m.omega(t) - PI).abs() < 1e-12);
            let v = [1.3 * t.cos(), 1.3 * t.sin()];
            let k = m.kernel(v);
            let mk = m.kernel([-v[0], -v[1]]);
            assert_eq!(k, [-mk[0], -mk[1]]);
            assert!(((k[0].hypot(k[1])) - 1.3).abs() < 1e-12);
            let ang = k[1].atan2(k[0]);
            let diff = (ang - m.omega(t)).rem_euclid(2.0 * PI);
            assert!(diff < 1e-9 || (2.0 * PI - diff) < 1e-9);
        }
    }

    #[test]
    fn rejects_large_slope() {
        assert!(SphereMap::new(vec![(1, 0.1, 0.0)], 0.05).is_err());
        assert!(SphereMap::new(vec![(1, 0.01, 0.0)], 0.1).is_err());
        assert!(SphereMap::new(vec![(1, 0.01, 0.0)], 0.02).is_ok());
    }
}

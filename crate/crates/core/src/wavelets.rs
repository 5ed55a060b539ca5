//! Compactly supported orthonormal wavelets with three vanishing moments,
//! tensorised to `ℝ²`, and the coefficients `a_I = ⟨g_i, φ_I⟩` of the
//! truncated coordinate function `g_i(y) = y_i 1_{|y| <= 1}`.
//!
//! The mother wavelet `θ` lives on `[0, 5]`; for a dyadic interval
//! `I = 2^{-j}[m, m+1)` we set `φ_I(y) = 2^{j/2} θ(2^j y - m + 2)`, so that
//! `spt φ_I = 5I`.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Length of the filter support.
pub const SUPPORT: usize = 5;

/// The six-tap orthonormal scaling filter with three vanishing moments.
pub fn db3_filter() -> [f64; 6] {
    let s10 = 10f64.sqrt();
    let r = (5.0 + 2.0 * s10).sqrt();
    let c = 1.0 / (16.0 * std::f64::consts::SQRT_2);
    [
        c * (1.0 + s10 + r),
        c * (5.0 + s10 + 3.0 * r),
        c * (10.0 - 2.0 * s10 + 2.0 * r),
        c * (10.0 - 2.0 * s10 - 2.0 * r),
        c * (5.0 + s10 - 3.0 * r),
        c * (1.0 + s10 - r),
    ]
}

/// Which factor of the tensor product is the wavelet (the rest are scaling
/// functions). In one dimension the only type is `1`.
pub type WaveletType = u8;

#[derive(Debug, Clone)]
pub struct WaveletBasis {
    pub filter: [f64; 6],
    pub cascade_depth: u32,
    pub n: usize,
    /// Scaling function and wavelet at `k 2^{-K}`, `k = 0..=5·2^K`.
    phi: Vec<f64>,
    psi: Vec<f64>,
    /// Running trapezoid integrals of `u^p θ(u)` for `p = 0, 1`, per factor.
    cum_phi: [Vec<f64>; 2],
    cum_psi: [Vec<f64>; 2],
}

fn cumulative(table: &[f64], h: f64, p: i32) -> Vec<f64> {
    let mut out = Vec::with_capacity(table.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 1..table.len() {
        let a = table[k - 1] * ((k - 1) as f64 * h).powi(p);
        let b = table[k] * (k as f64 * h).powi(p);
        acc += 0.5 * h * (a + b);
        out.push(acc);
    }
    out
}

/// Scaling function at the integers, from the eigenvector of the refinement
/// matrix with eigenvalue 1, normalised to unit sum.
fn integer_values(h: &[f64; 6]) -> Result<[f64; 6]> {
    let s2 = std::f64::consts::SQRT_2;
    // unknowns φ(1..=4); φ(0) = φ(5) = 0
    let mut a = DMatrix::<f64>::zeros(4, 4);
    for i in 1..=4usize {
        for l in 1..=4usize {
            let k = 2 * i as i64 - l as i64;
            if (0..6).contains(&k) {
                a[(i - 1, l - 1)] = s2 * h[k as usize];
            }
        }
        a[(i - 1, i - 1)] -= 1.0;
    }
    for l in 0..4 {
        a[(3, l)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(4);
    rhs[3] = 1.0;
    let v = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular refinement system".into()))?;
    Ok([0.0, v[0], v[1], v[2], v[3], 0.0])
}

impl WaveletBasis {
    fn eval(table: &[f64], depth: u32, u: f64) -> f64 {
        if !(0.0..=SUPPORT as f64).contains(&u) {
            return 0.0;
        }
        let x = u * (1u64 << depth) as f64;
        let k = (x.floor() as usize).min(table.len() - 2);
        let t = x - k as f64;
        table[k] * (1.0 - t) + table[k + 1] * t
    }

    pub fn spacing(&self) -> f64 {
        1.0 / (1u64 << self.cascade_depth) as f64
    }

    /// Mother scaling function at `u` (linear interpolation of the table).
    pub fn phi(&self, u: f64) -> f64 {
        Self::eval(&self.phi, self.cascade_depth, u)
    }

    /// Mother wavelet at `u`.
    pub fn psi(&self, u: f64) -> f64 {
        Self::eval(&self.psi, self.cascade_depth, u)
    }

    pub fn psi_table(&self) -> &[f64] {
        &self.psi
    }

    pub fn phi_table(&self) -> &[f64] {
        &self.phi
    }

    /// `∫_0^x u^p θ(u) du` for `θ` the wavelet (`wavelet = true`) or the
    /// scaling function, `p` in `{0, 1}`.
    fn primitive(&self, wavelet: bool, p: usize, x: f64) -> f64 {
        let t = if wavelet { &self.cum_psi[p] } else { &self.cum_phi[p] };
        let x = x.clamp(0.0, SUPPORT as f64);
        Self::eval(t, self.cascade_depth, x)
    }

    /// The same family mirrored, `θ(u) -> θ(5 - u)`.
    pub fn reversed(&self) -> WaveletBasis {
        let h = self.spacing();
        let phi: Vec<f64> = self.phi.iter().rev().copied().collect();
        let psi: Vec<f64> = self.psi.iter().rev().copied().collect();
        let mut filter = self.filter;
        filter.reverse();
        WaveletBasis {
            filter,
            cascade_depth: self.cascade_depth,
            n: self.n,
            cum_phi: [cumulative(&phi, h, 0), cumulative(&phi, h, 1)],
            cum_psi: [cumulative(&psi, h, 0), cumulative(&psi, h, 1)],
            phi,
            psi,
        }
    }

    /// Wavelet types of the tensor basis: bit `k` set means the wavelet sits
    /// in coordinate `k`.
    pub fn types(&self) -> Vec<WaveletType> {
        (1..(1u8 << self.n)).collect()
    }

    /// `φ_I^e(y)` for the cube `I = 2^{-level}(offset + [0,1)^n)`.
    pub fn eval_element(&self, level: i32, offset: &[i64], e: WaveletType, y: &[f64]) -> f64 {
        let s = 2f64.powi(level);
        let mut v = s.powf(self.n as f64 / 2.0);
        for k in 0..self.n {
            let u = s * y[k] - offset[k] as f64 + 2.0;
            v *= if e >> k & 1 == 1 { self.psi(u) } else { self.phi(u) };
            if v == 0.0 {
                return 0.0;
            }
        }
        v
    }
}

/// Tabulates the scaling function and wavelet by the cascade iteration.
pub fn build_basis(vanishing_moments: u32, cascade_depth: u32, n: usize) -> Result<WaveletBasis> {
    if vanishing_moments != 3 {
        return Err(Error::InvalidArgument(format!(
            "only three vanishing moments are tabulated, got {vanishing_moments}"
        )));
    }
    if !(1..=2).contains(&n) {
        return Err(Error::UnsupportedDimension(n));
    }
    if !(8..=20).contains(&cascade_depth) {
        return Err(Error::InvalidArgument(format!(
            "cascade depth {cascade_depth} outside 8..=20"
        )));
    }
    let h = db3_filter();
    let s2 = std::f64::consts::SQRT_2;
    let mut phi: Vec<f64> = integer_values(&h)?.to_vec();
    // level k table has 5·2^k + 1 entries; refine φ(x) = √2 Σ h_m φ(2x - m)
    for k in 1..=cascade_depth {
        let len = SUPPORT * (1 << k) + 1;
        let mut next = vec![0.0; len];
        for (i, slot) in next.iter_mut().enumerate() {
            if i % 2 == 0 {
                *slot = phi[i / 2];
                continue;
            }
            // 2x - m at level k-1 has index i - m 2^{k-1}
            let step = 1usize << (k - 1);
            let mut acc = 0.0;
            for (m, hm) in h.iter().enumerate() {
                if let Some(idx) = i.checked_sub(m * step) {
                    if idx < phi.len() {
                        acc += hm * phi[idx];
                    }
                }
            }
            *slot = s2 * acc;
        }
        phi = next;
    }
    // ψ(x) = √2 Σ g_k φ(2x - k), g_k = (-1)^k h_{5-k}
    let scale = 1usize << cascade_depth;
    let psi: Vec<f64> = (0..phi.len())
        .map(|i| {
            let mut acc = 0.0;
            for k in 0..6usize {
                let g = if k % 2 == 0 { h[5 - k] } else { -h[5 - k] };
                if let Some(idx) = (2 * i).checked_sub(k * scale) {
                    if idx < phi.len() {
                        acc += g * phi[idx];
                    }
                }
            }
            s2 * acc
        })
        .collect();
    let sp = 1.0 / scale as f64;
    Ok(WaveletBasis {
        filter: h,
        cascade_depth,
        n,
        cum_phi: [cumulative(&phi, sp, 0), cumulative(&phi, sp, 1)],
        cum_psi: [cumulative(&psi, sp, 0), cumulative(&psi, sp, 1)],
        phi,
        psi,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct WaveletIndex {
    pub level: i32,
    pub offset: Vec<i64>,
    pub kind: WaveletType,
}

impl WaveletIndex {
    pub fn side(&self) -> f64 {
        2f64.powi(-self.level)
    }

    /// `5I` as `(lo, hi)` per coordinate.
    pub fn support(&self) -> Vec<(f64, f64)> {
        let l = self.side();
        self.offset.iter().map(|&m| ((m - 2) as f64 * l, (m + 3) as f64 * l)).collect()
    }

    pub fn placement(&self) -> Placement {
        let sup = self.support();
        let near: f64 = sup.iter().map(|&(a, b)| if a > 0.0 { a * a } else if b < 0.0 { b * b } else { 0.0 }).sum();
        let far: f64 = sup.iter().map(|&(a, b)| a.abs().max(b.abs()).powi(2)).sum();
        if near > 1.0 {
            Placement::Exterior
        } else if far < 1.0 {
            Placement::Interior
        } else {
            Placement::Boundary
        }
    }
}

/// Position of `5I` relative to the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Placement {
    Interior,
    Exterior,
    Boundary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub n: usize,
    pub coordinate: usize,
    pub entries: BTreeMap<WaveletIndex, f64>,
}

impl CoefficientTable {
    /// CSV `level,offset1[,offset2,type],a`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["level".to_string()];
        header.extend((1..=self.n).map(|k| format!("offset{k}")));
        if self.n > 1 {
            header.push("type".into());
        }
        header.push("a".into());
        wr.write_record(&header)?;
        for (idx, a) in &self.entries {
            let mut row = vec![idx.level.to_string()];
            row.extend(idx.offset.iter().map(|m| m.to_string()));
            if self.n > 1 {
                row.push(idx.kind.to_string());
            }
            row.push(a.to_string());
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Largest `|a_I|` per level over the cubes with the given placement.
    pub fn level_maxima(&self, placement: Placement) -> BTreeMap<i32, f64> {
        let mut out = BTreeMap::new();
        for (idx, a) in &self.entries {
            if idx.placement() == placement {
                let e = out.entry(idx.level).or_insert(0.0f64);
                *e = e.max(a.abs());
            }
        }
        out
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.entries.values().map(|a| a * a).sum()
    }
}

/// `a_I = ⟨g_i, φ_I^e⟩` by Riemann sums at the basis resolution. The inner
/// coordinate (n = 2) is integrated through the tabulated primitives.
pub fn coefficient(basis: &WaveletBasis, i: usize, idx: &WaveletIndex) -> f64 {
    if idx.placement() == Placement::Exterior {
        return 0.0;
    }
    let s = 2f64.powi(idx.level);
    let l = 1.0 / s;
    // y = l (u + m - 2)
    let shift = |m: i64| (m - 2) as f64;
    // ∫ y^p θ(s y - m + 2) dy over y in [a, b]
    let segment = |wavelet: bool, p: usize, m: i64, a: f64, b: f64| -> f64 {
        let (ua, ub) = (s * a - shift(m), s * b - shift(m));
        let m0 = basis.primitive(wavelet, 0, ub) - basis.primitive(wavelet, 0, ua);
        if p == 0 {
            return l * m0;
        }
        let m1 = basis.primitive(wavelet, 1, ub) - basis.primitive(wavelet, 1, ua);
        l * l * (m1 + shift(m) * m0)
    };
    match basis.n {
        1 => s.sqrt() * segment(true, 1, idx.offset[0], -1.0, 1.0),
        _ => {
            let wav0 = idx.kind & 1 == 1;
            let wav1 = idx.kind >> 1 & 1 == 1;
            let table = if wav0 { &basis.psi } else { &basis.phi };
            let h = basis.spacing();
            let m0 = idx.offset[0];
            let mut acc = 0.0;
            for (k, &t) in table.iter().enumerate() {
                if t == 0.0 {
                    continue;
                }
                let y0 = l * (k as f64 * h + shift(m0));
                if y0.abs() > 1.0 {
                    continue;
                }
                let r = (1.0 - y0 * y0).sqrt();
                let inner = if i == 0 {
                    y0 * segment(wav1, 0, idx.offset[1], -r, r)
                } else {
                    segment(wav1, 1, idx.offset[1], -r, r)
                };
                acc += t * inner;
            }
            // outer measure: dy0 = l h; normalisation 2^{j n / 2} = s
            acc * l * h * s
        }
    }
}

/// All `a_I` for `I` in the given levels whose `5I` meets the closed unit
/// ball, every wavelet type included.
pub fn coefficients_of_g(basis: &WaveletBasis, i: usize, levels: std::ops::RangeInclusive<i32>) -> Result<CoefficientTable> {
    if i >= basis.n {
        return Err(Error::InvalidArgument(format!("coordinate {i} out of range for n = {}", basis.n)));
    }
    let mut idxs = Vec::new();
    for level in levels {
        let s = 2f64.powi(level);
        // 5I meets [-1, 1]: (m - 2) l <= 1 and (m + 3) l >= -1
        let lo = (-s).floor() as i64 - 3;
        let hi = s.ceil() as i64 + 2;
        let range: Vec<i64> = (lo..=hi).collect();
        let offsets: Vec<Vec<i64>> = if basis.n == 1 {
            range.iter().map(|&m| vec![m]).collect()
        } else {
            range.iter().flat_map(|&a| range.iter().map(move |&b| vec![a, b])).collect()
        };
        for offset in offsets {
            for kind in basis.types() {
                let idx = WaveletIndex { level, offset: offset.clone(), kind };
                if idx.placement() != Placement::Exterior {
                    idxs.push(idx);
                }
            }
        }
    }
    let vals = crate::par::map_slice(&idxs, |idx| coefficient(basis, i, idx));
    Ok(CoefficientTable {
        n: basis.n,
        coordinate: i,
        entries: idxs.into_iter().zip(vals).collect(),
    })
}

/// Partial sum `Σ a_I φ_I(y)` over the table.
pub fn reconstruct_g(table: &CoefficientTable, basis: &WaveletBasis, points: &[Vec<f64>]) -> Vec<f64> {
    crate::par::map_slice(points, |y| {
        table
            .entries
            .iter()
            .filter(|(idx, _)| idx.support().iter().zip(y).all(|(&(a, b), v)| *v >= a && *v <= b))
            .map(|(idx, a)| a * basis.eval_element(idx.level, &idx.offset, idx.kind, y))
            .sum()
    })
}

/// `g_i(y) = y_i 1_{|y| <= 1}`.
pub fn g_coordinate(i: usize, y: &[f64]) -> f64 {
    if y.iter().map(|v| v * v).sum::<f64>() <= 1.0 {
        y[i]
    } else {
        0.0
    }
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(pairs: &[(f64, f64)]) -> f64 {
    let pts: Vec<(f64, f64)> = pairs.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

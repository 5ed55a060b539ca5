//! Pointwise multiscale coefficients: C-numbers (plain, smooth and
//! Ω-perturbed), β and α numbers, the bounded-Lipschitz distance and the
//! circular projection.

mod alpha;
mod beta;
mod cnumber;
mod plane;
mod sphere;
pub mod transport;

use std::io::Write;

use serde::{Deserialize, Serialize};

pub use alpha::{alpha_number, alpha_number_with, bl_distance, AlphaOptions, AlphaProblem, SignedSites};
pub use beta::{beta_at_plane, beta_number};
pub use cnumber::{c_number, c_profile, c_profile_sq, omega_c_number, smooth_c_number, smooth_cutoff};
pub use plane::{circular_projection, weighted_pca_plane, AffinePlane};
pub use sphere::{SphereMap, CHECK_GRID};

use crate::error::Result;
use crate::measures::DiscreteMeasure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    C,
    CSmooth,
    COmega,
    Beta1,
    Beta2,
    Alpha,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::C => "c",
            Kind::CSmooth => "csmooth",
            Kind::COmega => "comega",
            Kind::Beta1 => "beta1",
            Kind::Beta2 => "beta2",
            Kind::Alpha => "alpha",
        }
    }
}

/// Selector for the C-type coefficients used by the scale integrals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CKind {
    C,
    CSmooth(u32),
    COmega(SphereMap),
}

impl CKind {
    pub fn kind(&self) -> Kind {
        match self {
            CKind::C => Kind::C,
            CKind::CSmooth(_) => Kind::CSmooth,
            CKind::COmega(_) => Kind::COmega,
        }
    }

    /// One coefficient sample of this kind.
    pub fn sample(&self, mu: &DiscreteMeasure, x: &[f64], t: f64) -> Result<CoefficientSample> {
        match self {
            CKind::C => Ok(c_number(mu, x, t)),
            CKind::CSmooth(n) => Ok(smooth_c_number(mu, x, t, *n)),
            CKind::COmega(o) => omega_c_number(mu, x, t, o),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSample {
    pub x: Vec<f64>,
    pub t: f64,
    pub kind: Kind,
    pub value: f64,
    pub vector: Option<Vec<f64>>,
    pub plane: Option<AffinePlane>,
    /// Density constant of the α comparison measure.
    pub c: Option<f64>,
    /// Set for β₁, whose plane search only yields an upper bound.
    pub upper_bound: bool,
    /// Too few points for a fit.
    pub degenerate: bool,
    /// Bound on the error from discretising the comparison measure (α).
    pub discretization_error: Option<f64>,
}

impl CoefficientSample {
    pub fn scalar(x: &[f64], t: f64, kind: Kind, value: f64) -> Self {
        CoefficientSample {
            x: x.to_vec(),
            t,
            kind,
            value,
            vector: None,
            plane: None,
            c: None,
            upper_bound: false,
            degenerate: false,
            discretization_error: None,
        }
    }

    pub fn vector_sample(x: &[f64], t: f64, kind: Kind, v: Vec<f64>) -> Self {
        let mut s = Self::scalar(x, t, kind, cnumber::value_of(&v));
        s.vector = Some(v);
        s
    }
}

/// Writes samples as CSV `x1,...,xd,t,kind,value,v1,...,vd`; the vector
/// columns are empty for scalar coefficients.
pub fn write_sweep_csv<W: Write>(w: W, d: usize, samples: &[CoefficientSample]) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    let mut header: Vec<String> = (1..=d).map(|k| format!("x{k}")).collect();
    header.extend(["t", "kind", "value"].map(String::from));
    header.extend((1..=d).map(|k| format!("v{k}")));
    wr.write_record(&header)?;
    for s in samples {
        let mut row: Vec<String> = s.x.iter().map(|v| v.to_string()).collect();
        row.push(s.t.to_string());
        row.push(s.kind.as_str().to_string());
        row.push(s.value.to_string());
        match &s.vector {
            Some(v) => row.extend(v.iter().map(|a| a.to_string())),
            None => row.extend((0..d).map(|_| String::new())),
        }
        wr.write_record(&row)?;
    }
    wr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::build_measure;

    #[test]
    fn sweep_csv_layout() {
        let mu = build_measure(&[vec![0.5, 0.0]], &[1.0], 1).unwrap();
        let s = vec![c_number(&mu, &[0.0, 0.0], 1.0), CoefficientSample::scalar(&[0.0, 0.0], 1.0, Kind::Beta2, 0.25)];
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, 2, &s).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "x1,x2,t,kind,value,v1,v2");
        assert_eq!(lines[1], "0,0,1,c,0.5,-0.5,0");
        assert_eq!(lines[2], "0,0,1,beta2,0.25,,");
    }
}

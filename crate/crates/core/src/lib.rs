//! Multiscale symmetry, flatness and transport coefficients of discrete
//! measures in `ℝ^d`.
//!
//! A [`DiscreteMeasure`](measures::DiscreteMeasure) is a weighted point cloud
//! with an exact kd-tree index. On top of it the crate provides
//! Christ–David cubes, C-numbers and their smooth and Ω-perturbed variants,
//! β and α numbers, Dini and Carleson energies, a Calderón–Zygmund
//! decomposition with postcondition checks, and a wavelet coefficient
//! analysis of `y_i 1_B(y)`.

pub mod coefficients;
pub mod cubes;
pub mod czdecomp;
pub mod energies;
pub mod error;
pub mod generators;
pub mod measures;
pub mod par;
pub mod spatial;
pub mod wavelets;

pub use error::{Error, Result};
pub use measures::{build_measure, Ball, DiscreteMeasure};

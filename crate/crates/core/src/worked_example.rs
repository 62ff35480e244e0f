//! The 4-simplex with a symmetric but not almost positive definite contact
//! set: five contacts that satisfy the symmetry condition yet fail to
//! immobilize.
//!
//! The published normals are the facet-volume normals multiplied by
//! `(n−1)! = 6` (the cofactor scaling), so the published penetration matrix
//! is six times the one built from [`Simplex::normal_fan`]. Both are exposed.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::contact::{immobilizes, ContactSet, PenetrationMatrix, Verdict};
use crate::error::Result;
use crate::geometry::Simplex;
use crate::linalg::{factorial, max_abs};

pub const DIM: usize = 4;

type Q = (i64, i64);

const VERTICES: [[Q; 4]; 5] = [
    [(-5, 12), (-1, 1), (0, 1), (-3, 1)],
    [(-83, 36), (0, 1), (0, 1), (1, 1)],
    [(1, 1), (1, 1), (0, 1), (-3, 1)],
    [(35, 18), (0, 1), (-1, 1), (1, 1)],
    [(35, 18), (0, 1), (1, 1), (1, 1)],
];

const NORMALS: [[Q; 4]; 5] = [
    [(0, 1), (34, 1), (0, 1), (17, 2)],
    [(16, 1), (-34, 3), (0, 1), (-119, 18)],
    [(0, 1), (-34, 1), (0, 1), (17, 2)],
    [(-8, 1), (17, 3), (34, 1), (-187, 36)],
    [(-8, 1), (17, 3), (-34, 1), (-187, 36)],
];

// column j holds the barycentric weights of p_j
const BARYCENTRIC: [[Q; 5]; 5] = [
    [(0, 1), (3, 10), (2, 5), (3, 20), (3, 20)],
    [(1, 10), (0, 1), (1, 10), (2, 5), (2, 5)],
    [(2, 5), (2, 5), (0, 1), (1, 10), (1, 10)],
    [(1, 10), (7, 10), (1, 10), (0, 1), (1, 10)],
    [(1, 10), (7, 10), (1, 10), (1, 10), (0, 1)],
];

const PENETRATION_DIAGONAL: [Q; 4] = [(238, 5), (136, 5), (34, 5), (-68, 5)];

fn q(x: Q) -> f64 {
    x.0 as f64 / x.1 as f64
}

/// Factor between the published normals and `|k_i| = vol(F_i)` normals.
pub fn published_scale() -> f64 {
    factorial(DIM - 1)
}

pub fn vertices() -> Vec<[f64; 4]> {
    VERTICES.iter().map(|v| v.map(q)).collect()
}

/// The normals as published (cofactor scaling).
pub fn published_normals() -> Vec<DVector<f64>> {
    NORMALS.iter().map(|k| DVector::from_iterator(DIM, k.iter().copied().map(q))).collect()
}

pub fn barycentric() -> DMatrix<f64> {
    DMatrix::from_fn(DIM + 1, DIM + 1, |i, j| q(BARYCENTRIC[j][i]))
}

/// The published `Σ k_i p_iᵀ`.
pub fn published_penetration_matrix() -> DMatrix<f64> {
    DMatrix::from_diagonal(&DVector::from_iterator(DIM, PENETRATION_DIAGONAL.iter().copied().map(q)))
}

pub fn simplex(tol: &Tolerances) -> Result<Simplex> {
    Simplex::new(&vertices(), tol)
}

pub fn contacts(simplex: &Simplex, tol: &Tolerances) -> Result<ContactSet> {
    ContactSet::from_barycentric(simplex, &barycentric(), tol)
}

/// Entrywise agreement below this counts as a reproduction.
pub const REPRODUCTION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    /// Computed normals in the published scaling, one list per facet.
    pub normals: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
    pub volume: f64,
    /// Computed `Σ k_i p_iᵀ` in the published scaling, row by row.
    pub penetration_matrix: Vec<Vec<f64>>,
    pub normals_error: f64,
    pub matrix_error: f64,
    /// Verdict for the facet-volume normals (scale-free apart from the
    /// eigenvalues, which are `1/(n−1)!` of the published ones).
    pub verdict: Verdict,
    /// Matrix and normals within [`REPRODUCTION_TOL`], symmetric, not almost
    /// positive definite.
    pub reproduced: bool,
}

/// Recomputes the normals and the penetration matrix from the vertices and
/// the barycentric weights and compares them with the published values.
pub fn reproduce(tol: &Tolerances) -> Result<Reproduction> {
    let s = simplex(tol)?;
    let c = contacts(&s, tol)?;
    let fan = s.normal_fan();
    let scale = published_scale();

    let published = published_normals();
    let normals_error = (0..=DIM).map(|i| (fan.normal(i) * scale - &published[i]).amax()).fold(0.0, f64::max);
    let a = PenetrationMatrix::assemble(&fan, &c, tol)?.matrix() * scale;
    let matrix_error = max_abs(&(&a - published_penetration_matrix()));
    let verdict = immobilizes(&s, &c, tol)?;
    let reproduced = normals_error <= REPRODUCTION_TOL
        && matrix_error <= REPRODUCTION_TOL
        && verdict.symmetric
        && !verdict.almost_positive_definite
        && !verdict.immobilizes;

    Ok(Reproduction {
        normals: (0..=DIM).map(|i| (fan.normal(i) * scale).iter().copied().collect()).collect(),
        kappa: (0..=DIM).map(|i| fan.kappa(i) * scale).collect(),
        volume: s.volume(),
        penetration_matrix: a.row_iter().map(|r| r.iter().copied().collect()).collect(),
        normals_error,
        matrix_error,
        verdict,
        reproduced,
    })
}

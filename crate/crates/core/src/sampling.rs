//! Seeded random simplices and contact sets for property tests and the
//! acceptance suite.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::Tolerances;
use crate::contact::ContactSet;
use crate::error::{Error, Result};
use crate::geometry::Simplex;
use crate::linalg;
use crate::synthesis::{apply_displacement, centroid_contacts, DisplacementCoeff};

/// Largest accepted ratio of extreme singular values of the edge matrix.
pub const MAX_EDGE_CONDITION: f64 = 50.0;

fn gaussian_vector<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Gaussian vertices, rejected until the edge matrix is well conditioned;
/// then shifted by a random offset and scaled by a random factor in
/// `[0.5, 2]`.
pub fn random_simplex<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Simplex {
    let tol = Tolerances::default();
    loop {
        let vertices: Vec<DVector<f64>> = (0..=n).map(|_| gaussian_vector(rng, n)).collect();
        let edges = DMatrix::from_fn(n, n, |r, c| vertices[c + 1][r] - vertices[0][r]);
        let sv = linalg::singular_values(&edges);
        if sv[n - 1] <= 0.0 || sv[0] / sv[n - 1] > MAX_EDGE_CONDITION {
            continue;
        }
        let offset = gaussian_vector(rng, n);
        let scale = rng.random_range(0.5..2.0);
        let placed: Vec<Vec<f64>> = vertices.iter().map(|v| (v * scale + &offset).iter().copied().collect()).collect();
        if let Ok(s) = Simplex::new(&placed, &tol) {
            return s;
        }
    }
}

/// Column-stochastic with zero diagonal and off-diagonal entries bounded
/// away from zero.
pub fn random_barycentric<R: Rng + ?Sized>(rng: &mut R, n: usize) -> DMatrix<f64> {
    let m = n + 1;
    let mut lambda = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { rng.random_range(0.05..1.0) });
    for mut col in lambda.column_iter_mut() {
        let total = col.sum();
        col /= total;
    }
    lambda
}

/// Generic contacts: `A` is almost surely asymmetric.
pub fn random_contacts<R: Rng + ?Sized>(rng: &mut R, simplex: &Simplex) -> Result<ContactSet> {
    ContactSet::from_barycentric(simplex, &random_barycentric(rng, simplex.dim()), &Tolerances::default())
}

/// Centroids moved by a random symmetry-preserving displacement. The
/// displacement starts at the size of the simplex and is halved until every
/// contact is strictly inside its facet.
pub fn random_symmetric_contacts<R: Rng + ?Sized>(rng: &mut R, simplex: &Simplex) -> Result<ContactSet> {
    let tol = Tolerances::default();
    let n = simplex.dim();
    let centroids = centroid_contacts(simplex, &tol)?;
    let fan = simplex.normal_fan();
    let diameter = simplex
        .vertices()
        .iter()
        .flat_map(|a| simplex.vertices().into_iter().map(move |b| (a - b).norm()))
        .fold(0.0, f64::max);
    let typical = (0..=n).map(|i| fan.normal(i).norm()).sum::<f64>() / (n + 1) as f64;

    let mut coeffs: Vec<DisplacementCoeff> = (0..=n)
        .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
        .map(|(i, j)| DisplacementCoeff { i, j, t: rng.sample::<f64, _>(StandardNormal) * diameter / typical })
        .collect();
    let shrink = rng.random_range(0.5..1.0);
    for _ in 0..60 {
        match apply_displacement(simplex, &centroids, &coeffs, &tol) {
            Ok(c) if c.is_strict() => return Ok(c),
            Ok(_) | Err(Error::LeftFace { .. }) => {
                for c in &mut coeffs {
                    c.t *= shrink;
                }
            }
            Err(e) => return Err(e),
        }
    }
    Ok(centroids)
}

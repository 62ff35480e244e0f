//! Construction of immobilizing contact sets and the space of
//! symmetry-preserving contact displacements.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::contact::{self, ContactSet, PenetrationMatrix};
use crate::error::{Error, Result};
use crate::geometry::{NormalFan, Simplex};
use crate::linalg::{self, Lu};

/// Contacts at the facet centroids, `Λ = (J − I)/n`. The resulting
/// penetration matrix is `vol(Δ) I`.
pub fn centroid_contacts(simplex: &Simplex, tol: &Tolerances) -> Result<ContactSet> {
    let m = simplex.dim() + 1;
    let w = 1.0 / simplex.dim() as f64;
    let lambda = DMatrix::from_fn(m, m, |i, j| if i == j { 0.0 } else { w });
    ContactSet::from_barycentric(simplex, &lambda, tol)
}

/// A point `z` through which the inward normal lines of the contacts pass:
/// `p_j = z + t_j k_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentredWitness {
    pub z: Vec<f64>,
    /// Barycentric weights of `z`.
    pub mu: Vec<f64>,
    /// `t_j = n vol(Δ) μ_j / |k_j|²`.
    pub t: Vec<f64>,
}

/// Contact set centred at `z`: each contact is the foot of the line through
/// `z` along `k_j` on the hyperplane of `F_j`. Feasible when every contact
/// weight `λ_ij = μ_i − μ_j (k_i·k_j)/|k_j|²` (`i ≠ j`) and every `t_j` is
/// positive; then `A = Σ t_j k_j k_jᵀ` is positive definite.
pub fn centred_contacts(simplex: &Simplex, z: &DVector<f64>, tol: &Tolerances) -> Result<(ContactSet, CentredWitness)> {
    let n = simplex.dim();
    if z.len() != n {
        return Err(Error::DimensionMismatch { expected: n, found: z.len() });
    }
    let fan = simplex.normal_fan();
    let n_vol = n as f64 * simplex.volume();
    let mut zbar = DVector::zeros(n + 1);
    zbar[0] = 1.0;
    zbar.rows_mut(1, n).copy_from(z);
    let mu = Lu::new(simplex.matrix()).solve(&zbar)?;

    let normals = fan.normals();
    let sq: Vec<f64> = normals.iter().map(|k| k.norm_squared()).collect();
    let t: Vec<f64> = (0..=n).map(|j| n_vol * mu[j] / sq[j]).collect();
    let lambda =
        DMatrix::from_fn(
            n + 1,
            n + 1,
            |i, j| {
                if i == j {
                    0.0
                } else {
                    mu[i] - mu[j] * normals[i].dot(&normals[j]) / sq[j]
                }
            },
        );

    let weights: Vec<(usize, usize)> = (0..=n)
        .flat_map(|j| (0..=n).filter(move |&i| i != j).map(move |i| (i, j)))
        .filter(|&(i, j)| lambda[(i, j)] <= 0.0)
        .collect();
    let offsets: Vec<usize> = (0..=n).filter(|&j| t[j] <= 0.0).collect();
    if !weights.is_empty() || !offsets.is_empty() {
        return Err(Error::NotCentredFeasible { weights, offsets });
    }

    let contacts = ContactSet::from_barycentric(simplex, &lambda, tol)?;
    let witness = CentredWitness { z: z.iter().copied().collect(), mu: mu.iter().copied().collect(), t };
    Ok((contacts, witness))
}

/// The centre with weights `μ_i = |k_i| / Σ_l |k_l|`, which is always
/// feasible and interior.
pub fn centred_feasible_witness(simplex: &Simplex) -> CentredWitness {
    let n = simplex.dim();
    let fan = simplex.normal_fan();
    let lengths: Vec<f64> = fan.normals().iter().map(|k| k.norm()).collect();
    let total: f64 = lengths.iter().sum();
    let mu: Vec<f64> = lengths.iter().map(|l| l / total).collect();
    let z: DVector<f64> = simplex.vertices().iter().zip(&mu).map(|(v, &w)| v * w).sum();
    let n_vol = n as f64 * simplex.volume();
    let t = mu.iter().zip(&lengths).map(|(&w, &l)| n_vol * w / (l * l)).collect();
    CentredWitness { z: z.iter().copied().collect(), mu, t }
}

/// Coefficient `t` on the generator `ΔP_ij`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DisplacementCoeff {
    pub i: usize,
    pub j: usize,
    pub t: f64,
}

/// Generators `ΔP_ij` (`i < j`) of the contact displacements that keep each
/// contact in its facet hyperplane and keep `A` symmetric.
///
/// `ΔP_ij` moves `p_i` along `k_ij` and `p_j` along `k_ji`, where `k_ij` is
/// the component of `k_j` orthogonal to `k_i`.
#[derive(Debug, Clone)]
pub struct DisplacementBasis {
    dim: usize,
    projected: Vec<Vec<DVector<f64>>>,
    generators: BTreeMap<(usize, usize), DMatrix<f64>>,
}

impl DisplacementBasis {
    pub fn new(fan: &NormalFan) -> Self {
        let n = fan.dim();
        let normals = fan.normals();
        let projected: Vec<Vec<DVector<f64>>> = (0..=n)
            .map(|i| {
                let ki = &normals[i];
                let sq = ki.norm_squared();
                (0..=n)
                    .map(|j| {
                        if i == j {
                            DVector::zeros(n)
                        } else {
                            let kj = &normals[j];
                            kj - ki * (ki.dot(kj) / sq)
                        }
                    })
                    .collect()
            })
            .collect();
        let generators = (0..=n)
            .flat_map(|i| (i + 1..=n).map(move |j| (i, j)))
            .map(|(i, j)| {
                let mut g = DMatrix::zeros(n, n + 1);
                g.set_column(i, &projected[i][j]);
                g.set_column(j, &projected[j][i]);
                ((i, j), g)
            })
            .collect();
        Self { dim: n, projected, generators }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `k_ij`; zero when `i == j`.
    pub fn projected_normal(&self, i: usize, j: usize) -> &DVector<f64> {
        &self.projected[i][j]
    }

    /// `ΔP_ij` for either index order.
    pub fn generator(&self, i: usize, j: usize) -> Option<&DMatrix<f64>> {
        self.generators.get(&(i.min(j), i.max(j)))
    }

    /// Pairs `(i, j)`, `i < j`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.generators.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.generators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.generators.is_empty()
    }

    /// Matrix whose columns are the column-major vectorizations of the
    /// generators, in [`pairs`](Self::pairs) order.
    pub fn generator_matrix(&self) -> DMatrix<f64> {
        let columns: Vec<DVector<f64>> =
            self.generators.values().map(|g| DVector::from_column_slice(g.as_slice())).collect();
        DMatrix::from_columns(&columns)
    }

    /// `Σ t ΔP_ij` over the given coefficients.
    pub fn combine(&self, coeffs: &[DisplacementCoeff]) -> Result<DMatrix<f64>> {
        let mut total = DMatrix::zeros(self.dim, self.dim + 1);
        for c in coeffs {
            if c.i == c.j || c.i > self.dim || c.j > self.dim {
                return Err(Error::BadInput(format!("no generator for pair ({}, {})", c.i, c.j)));
            }
            total += self.generator(c.i, c.j).expect("pair validated") * c.t;
        }
        Ok(total)
    }
}

pub fn displacement_basis(fan: &NormalFan) -> DisplacementBasis {
    DisplacementBasis::new(fan)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub rank: usize,
    /// `n(n+1)/2 − 1`.
    pub expected: usize,
    pub generators: usize,
    /// Unit null vector of the generator matrix, sign fixed so its sum is
    /// positive.
    pub null_vector: Vec<f64>,
    /// `(max − min) / max |c|` over the null vector entries; zero when all
    /// coefficients are equal.
    pub null_spread: f64,
}

impl RankReport {
    /// Rank as expected, a single dependency, with all-equal coefficients.
    pub fn holds(&self, spread_tol: f64) -> bool {
        self.rank == self.expected && self.generators - self.rank == 1 && self.null_spread <= spread_tol
    }
}

/// Numerical rank of the generators and their single dependency.
pub fn displacement_space_rank(basis: &DisplacementBasis, tol: &Tolerances) -> RankReport {
    let n = basis.dim();
    let m = basis.generator_matrix();
    let rank = linalg::numerical_rank(&m, tol.rank);
    let (_, mut null) = linalg::smallest_right_singular_vector(&m);
    if null.sum() < 0.0 {
        null = -null;
    }
    let hi = null.max();
    let lo = null.min();
    let null_spread = (hi - lo) / null.amax();
    RankReport {
        rank,
        expected: n * (n + 1) / 2 - 1,
        generators: basis.len(),
        null_vector: null.iter().copied().collect(),
        null_spread,
    }
}

/// Moves the contacts by `Σ t ΔP_ij`. The base contact set must have a
/// symmetric penetration matrix; the result keeps it symmetric and keeps
/// every contact in its facet hyperplane. A contact pushed across the
/// boundary of its facet is reported as [`Error::LeftFace`].
pub fn apply_displacement(
    simplex: &Simplex,
    contacts: &ContactSet,
    coeffs: &[DisplacementCoeff],
    tol: &Tolerances,
) -> Result<ContactSet> {
    let n = simplex.dim();
    if contacts.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, found: contacts.dim() });
    }
    let fan = simplex.normal_fan();
    let before = PenetrationMatrix::assemble(&fan, contacts, tol)?;
    if !before.is_symmetric() {
        return Err(Error::NotSymmetric { defect: before.symmetric_defect() });
    }

    let basis = DisplacementBasis::new(&fan);
    let delta = basis.combine(coeffs)?;
    let mut delta_h = DMatrix::zeros(n + 1, n + 1);
    delta_h.view_mut((1, 0), (n, n + 1)).copy_from(&delta);

    let points = contacts.matrix() + &delta_h;
    let mut lambda = contacts.barycentric() + Lu::new(simplex.matrix()).solve_matrix(&delta_h)?;
    for j in 0..=n {
        lambda[(j, j)] = 0.0;
    }
    let interiority =
        contact::classify(&lambda, tol).map_err(|(face, vertex, weight)| Error::LeftFace { face, vertex, weight })?;
    let moved = ContactSet::from_raw(points, lambda, interiority);

    let after = PenetrationMatrix::assemble(&fan, &moved, tol)?;
    if !after.is_symmetric() {
        return Err(Error::Internal(format!(
            "symmetry-preserving displacement produced defect {:e}",
            after.symmetric_defect()
        )));
    }
    Ok(moved)
}

/// Coordinates of a displacement `ΔP` (columns `Δp_i`, each parallel to its
/// facet) over the generators `ΔP_ij`.
///
/// The generators have one dependency (all coefficients equal), so the
/// returned coordinates are the minimum-norm representative. A displacement
/// that breaks the symmetry of `A` is outside the span and reported as
/// [`Error::NotInSpace`] with its wedge defect `‖B − Bᵀ‖max`,
/// `B = Σ k_i Δp_iᵀ`.
pub fn symmetry_projection_coords(fan: &NormalFan, delta: &DMatrix<f64>) -> Result<Vec<DisplacementCoeff>> {
    const FACE_PARALLEL_TOL: f64 = 1e-9;
    const RESIDUAL_TOL: f64 = 1e-9;
    const SVD_CUTOFF: f64 = 1e-10;

    let n = fan.dim();
    if delta.nrows() != n || delta.ncols() != n + 1 {
        return Err(Error::BadInput(format!(
            "displacement must be {n}×{}, got {}×{}",
            n + 1,
            delta.nrows(),
            delta.ncols()
        )));
    }
    let largest_column = delta.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    for i in 0..=n {
        let k = fan.normal(i);
        let along = k.dot(&delta.column(i)).abs();
        if along > FACE_PARALLEL_TOL * k.norm() * largest_column {
            return Err(Error::BadInput(format!("displacement {i} is not parallel to face {i}")));
        }
    }

    let basis = DisplacementBasis::new(fan);
    let target = DVector::from_column_slice(delta.as_slice());
    let m = basis.generator_matrix();
    let coords = linalg::least_squares_min_norm(&m, &target, SVD_CUTOFF);
    let scale = target.norm();
    let residual = if scale == 0.0 { 0.0 } else { (&m * &coords - &target).norm() / scale };
    if residual > RESIDUAL_TOL {
        let b = fan.normals_matrix() * delta.transpose();
        let wedge_defect = linalg::max_abs(&(&b - b.transpose()));
        return Err(Error::NotInSpace { wedge_defect, residual });
    }
    Ok(basis.pairs().zip(coords.iter()).map(|((i, j), &t)| DisplacementCoeff { i, j, t }).collect())
}

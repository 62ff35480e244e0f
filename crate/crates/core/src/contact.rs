//! Contact sets, the penetration matrix `A = Σ k_i p_iᵀ`, and the
//! immobilization verdict.
//!
//! A contact set holds one point `p_i` on each facet `F_i`. It is stored both
//! as the homogeneous point matrix `P` (column `i` is `(1, p_i)`) and as the
//! barycentric matrix `Λ` with `P = VΛ`: column `j` of `Λ` lists the weights
//! of the vertices in `p_j`, so `Λ` is column-stochastic with a zero diagonal.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::geometry::{NormalFan, Simplex};
use crate::linalg::{self, Lu, SymmetricEigen};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interiority {
    /// Every contact is strictly inside its facet.
    Strict,
    /// Contact `face` has a (near-)zero weight on vertex `vertex`.
    Boundary { face: usize, vertex: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContactSet {
    points: DMatrix<f64>,
    barycentric: DMatrix<f64>,
    interiority: Interiority,
}

impl ContactSet {
    /// Contact set from points `p_i`, each required to lie in the hyperplane
    /// of facet `F_i` and inside the facet.
    pub fn from_points(simplex: &Simplex, points: &[DVector<f64>], tol: &Tolerances) -> Result<Self> {
        let p = homogeneous_points(simplex, points)?;
        let fan = simplex.normal_fan();
        let length_scale = simplex.vertices().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (i, point) in points.iter().enumerate() {
            let k = fan.normal(i);
            let residual = (k.dot(point) + fan.kappa(i)).abs();
            if residual > tol.plane * k.norm() * length_scale.max(point.norm()) {
                return Err(Error::OffFace { face: i, residual });
            }
        }
        let mut lambda = Lu::new(simplex.matrix()).solve_matrix(&p)?;
        for j in 0..lambda.ncols() {
            lambda[(j, j)] = 0.0;
        }
        let interiority =
            classify(&lambda, tol).map_err(|(face, vertex, weight)| Error::OutsideFace { face, vertex, weight })?;
        Ok(Self { points: p, barycentric: lambda, interiority })
    }

    /// Contact set from a barycentric matrix: `P = VΛ`.
    pub fn from_barycentric(simplex: &Simplex, lambda: &DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        check_barycentric(simplex.dim() + 1, lambda)?;
        let interiority =
            classify(lambda, tol).map_err(|(face, vertex, weight)| Error::OutsideFace { face, vertex, weight })?;
        let mut points = simplex.matrix() * lambda;
        points.row_mut(0).fill(1.0);
        Ok(Self { points, barycentric: lambda.clone(), interiority })
    }

    /// Arbitrary points with no facet constraints; `Λ = V⁻¹P` may then have
    /// a non-zero diagonal or negative entries. Used to evaluate the
    /// penetration matrix on relaxed configurations.
    pub fn from_points_unchecked(simplex: &Simplex, points: &[DVector<f64>]) -> Result<Self> {
        let p = homogeneous_points(simplex, points)?;
        let lambda = Lu::new(simplex.matrix()).solve_matrix(&p)?;
        let interiority = classify(&lambda, &Tolerances::default())
            .unwrap_or_else(|(face, vertex, _)| Interiority::Boundary { face, vertex });
        Ok(Self { points: p, barycentric: lambda, interiority })
    }

    pub(crate) fn from_raw(points: DMatrix<f64>, barycentric: DMatrix<f64>, interiority: Interiority) -> Self {
        Self { points, barycentric, interiority }
    }

    /// Assembles a contact set from raw parts without any consistency check.
    pub fn from_parts_unchecked(points: DMatrix<f64>, barycentric: DMatrix<f64>) -> Self {
        Self { points, barycentric, interiority: Interiority::Strict }
    }

    pub fn dim(&self) -> usize {
        self.points.nrows() - 1
    }

    /// The homogeneous point matrix `P`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.points
    }

    pub fn barycentric(&self) -> &DMatrix<f64> {
        &self.barycentric
    }

    pub fn point(&self, i: usize) -> DVector<f64> {
        self.points.column(i).rows(1, self.dim()).into_owned()
    }

    pub fn points(&self) -> Vec<DVector<f64>> {
        (0..=self.dim()).map(|i| self.point(i)).collect()
    }

    /// `n × (n+1)` matrix `[p_0 … p_n]`.
    pub fn points_matrix(&self) -> DMatrix<f64> {
        self.points.rows(1, self.dim()).into_owned()
    }

    pub fn interiority(&self) -> Interiority {
        self.interiority
    }

    pub fn is_strict(&self) -> bool {
        self.interiority == Interiority::Strict
    }
}

fn homogeneous_points(simplex: &Simplex, points: &[DVector<f64>]) -> Result<DMatrix<f64>> {
    let n = simplex.dim();
    if points.len() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, found: points.len() });
    }
    let mut p = DMatrix::zeros(n + 1, n + 1);
    for (j, point) in points.iter().enumerate() {
        if point.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: point.len() });
        }
        p[(0, j)] = 1.0;
        p.view_mut((1, j), (n, 1)).copy_from(point);
    }
    Ok(p)
}

pub(crate) fn check_barycentric(size: usize, lambda: &DMatrix<f64>) -> Result<()> {
    if lambda.nrows() != size || lambda.ncols() != size {
        return Err(Error::BadStochastic(format!(
            "expected a {size}×{size} matrix, got {}×{}",
            lambda.nrows(),
            lambda.ncols()
        )));
    }
    for j in 0..size {
        let sum = lambda.column(j).sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::BadStochastic(format!("column {j} sums to {sum}")));
        }
        if lambda[(j, j)].abs() > 1e-12 {
            return Err(Error::BadStochastic(format!("diagonal entry {j} is {}", lambda[(j, j)])));
        }
    }
    Ok(())
}

/// Strict/boundary classification of the off-diagonal weights. A weight
/// below `−tol.interior` is returned as `(face, vertex, weight)`.
pub(crate) fn classify(
    lambda: &DMatrix<f64>,
    tol: &Tolerances,
) -> std::result::Result<Interiority, (usize, usize, f64)> {
    let mut interiority = Interiority::Strict;
    for face in 0..lambda.ncols() {
        for vertex in (0..lambda.nrows()).filter(|&v| v != face) {
            let w = lambda[(vertex, face)];
            if w < -tol.interior {
                return Err((face, vertex, w));
            }
            if w <= tol.interior && interiority == Interiority::Strict {
                interiority = Interiority::Boundary { face, vertex };
            }
        }
    }
    Ok(interiority)
}

/// The penetration matrix `A` with its symmetry defect and, when symmetric,
/// the spectrum of its symmetric part.
#[derive(Debug, Clone)]
pub struct PenetrationMatrix {
    matrix: DMatrix<f64>,
    symmetric_defect: f64,
    scale: f64,
    symmetric: bool,
    eigen: Option<SymmetricEigen>,
}

impl PenetrationMatrix {
    /// `A = Σ k_i p_iᵀ`. Symmetry is judged against
    /// `max(‖A‖max, vol(Δ))`, so a vanishing `A` still has a natural scale.
    pub fn assemble(fan: &NormalFan, contacts: &ContactSet, tol: &Tolerances) -> Result<Self> {
        if fan.dim() != contacts.dim() {
            return Err(Error::DimensionMismatch { expected: fan.dim(), found: contacts.dim() });
        }
        let a = rank_one_sum(fan, contacts);
        let scale = linalg::max_abs(&a).max(fan.implied_volume().abs());
        Self::with_scale(a, scale, tol)
    }

    /// Wraps an arbitrary square matrix, with scale `‖A‖max`.
    pub fn from_matrix(a: DMatrix<f64>, tol: &Tolerances) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::BadInput("penetration matrix must be square".into()));
        }
        let scale = linalg::max_abs(&a);
        Self::with_scale(a, scale, tol)
    }

    fn with_scale(a: DMatrix<f64>, scale: f64, tol: &Tolerances) -> Result<Self> {
        let symmetric_defect = linalg::max_abs(&(&a - a.transpose()));
        let symmetric = symmetric_defect <= tol.sym * scale;
        let eigen = if symmetric { Some(linalg::symmetric_eigen(&((&a + a.transpose()) * 0.5))?) } else { None };
        Ok(Self { matrix: a, symmetric_defect, scale, symmetric, eigen })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// `‖A − Aᵀ‖max`.
    pub fn symmetric_defect(&self) -> f64 {
        self.symmetric_defect
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// Ascending eigenvalues, present only when `A` is symmetric.
    pub fn eigenvalues(&self) -> Option<&DVector<f64>> {
        self.eigen.as_ref().map(|e| &e.values)
    }

    pub fn eigen(&self) -> Option<&SymmetricEigen> {
        self.eigen.as_ref()
    }

    /// `λ_min + λ_second`, the smallest sum over pairs of eigenvalues.
    pub fn min_pair_sum(&self) -> Option<f64> {
        self.eigenvalues().map(|v| v[0] + v[1])
    }

    /// `‖A‖₂` of the symmetric matrix, i.e. its largest absolute eigenvalue.
    pub fn spectral_norm(&self) -> Option<f64> {
        self.eigenvalues().map(|v| v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())))
    }

    /// Every pair of eigenvalues has a positive sum. Only the two smallest
    /// need checking.
    pub fn is_almost_positive_definite(&self, tol: &Tolerances) -> Result<bool> {
        match (self.min_pair_sum(), self.spectral_norm()) {
            (Some(sum), Some(norm)) => Ok(sum > tol.apd * norm),
            _ => Err(Error::NotSymmetric { defect: self.symmetric_defect }),
        }
    }
}

pub(crate) fn rank_one_sum(fan: &NormalFan, contacts: &ContactSet) -> DMatrix<f64> {
    let n = fan.dim();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..=n {
        a += fan.normal(i) * contacts.point(i).transpose();
    }
    a
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub symmetric: bool,
    #[serde(rename = "apd")]
    pub almost_positive_definite: bool,
    pub immobilizes: bool,
    /// `(λ_min + λ_second) / (2 vol(Δ))`; 1 for the centroid contact set.
    /// Absent when `A` is not symmetric.
    pub margin: Option<f64>,
    pub eigenvalues: Vec<f64>,
    pub symmetric_defect: f64,
    /// False when some contact lies on the boundary of its facet.
    pub strict: bool,
}

/// Decides immobilization: `A` symmetric and almost positive definite.
///
/// For `n ≤ 3` a symmetric `A` from strictly interior contacts is always
/// almost positive definite; a numerical disagreement there is reported as
/// [`Error::Internal`].
pub fn immobilizes(simplex: &Simplex, contacts: &ContactSet, tol: &Tolerances) -> Result<Verdict> {
    let fan = simplex.normal_fan();
    let pm = PenetrationMatrix::assemble(&fan, contacts, tol)?;
    let symmetric = pm.is_symmetric();
    let apd = symmetric && pm.is_almost_positive_definite(tol)?;
    let strict = contacts.is_strict();

    if symmetric && strict && simplex.dim() <= 3 {
        let sum = pm.min_pair_sum().expect("symmetric");
        let norm = pm.spectral_norm().expect("symmetric");
        if sum <= -tol.sym * norm.max(simplex.volume()) {
            return Err(Error::Internal(format!(
                "symmetric penetration matrix in dimension {} has min pair sum {sum:e}",
                simplex.dim()
            )));
        }
    }

    Ok(Verdict {
        symmetric,
        almost_positive_definite: apd,
        immobilizes: symmetric && apd,
        margin: pm.min_pair_sum().map(|s| s / (2.0 * simplex.volume())),
        eigenvalues: pm.eigenvalues().map(|v| v.iter().copied().collect()).unwrap_or_default(),
        symmetric_defect: pm.symmetric_defect(),
        strict,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralLink {
    pub holds: bool,
    /// `‖KPᵀ + n vol(Δ) KΛᵀK⁻¹‖max`, relative to the scale.
    pub similarity_residual: f64,
    /// Deviation of `KPᵀ` from the block form with first column
    /// `(−n vol(Δ), 0, …, 0)` and lower-right block `A`, relative.
    pub block_residual: f64,
}

/// Checks that `KPᵀ = −n vol(Δ) KΛᵀK⁻¹` and that `KPᵀ` has the block form
/// `[[−n vol(Δ), bᵀ], [0, A]]`, so the spectrum of `A` together with
/// `−n vol(Δ)` is that of `−n vol(Δ) Λ`.
pub fn spectral_link_check(simplex: &Simplex, contacts: &ContactSet) -> Result<SpectralLink> {
    const REL_TOL: f64 = 1e-9;
    let n = simplex.dim();
    let fan = simplex.normal_fan();
    let k = fan.matrix();
    let n_vol = n as f64 * simplex.volume();

    let kpt = k * contacts.matrix().transpose();
    let similar = k * contacts.barycentric().transpose() * linalg::inverse(k)? * (-n_vol);
    let scale = linalg::max_abs(&kpt).max(n_vol);
    let similarity_residual = linalg::max_abs(&(&kpt - similar)) / scale;

    let a = rank_one_sum(&fan, contacts);
    let mut block = (kpt[(0, 0)] + n_vol).abs();
    for r in 1..=n {
        block = block.max(kpt[(r, 0)].abs());
    }
    block = block.max(linalg::max_abs(&(kpt.view((1, 1), (n, n)) - a)));
    let block_residual = block / scale;

    Ok(SpectralLink {
        holds: similarity_residual <= REL_TOL && block_residual <= REL_TOL,
        similarity_residual,
        block_residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// `‖Λᵀ1 − 1‖max`.
    pub perron_residual: f64,
    /// Largest norm among the iterated zero-sum unit vectors.
    pub max_deflated_norm: f64,
    pub iterations: usize,
    pub samples: usize,
    /// Perron residual within 1e−12 and every deflated norm at most 0.99.
    /// This is evidence of a sub-unit spectral radius off the Perron
    /// eigenvector, not a proof: a slowly contracting spectrum can miss the
    /// threshold.
    pub contracts: bool,
}

const SPECTRUM_ITERATIONS: usize = 256;
const SPECTRUM_SAMPLES: usize = 32;
const SPECTRUM_THRESHOLD: f64 = 0.99;

/// Evidence that a barycentric matrix has eigenvalue 1 on the all-ones left
/// eigenvector and every other eigenvalue strictly inside the unit circle.
///
/// `Λ` maps the zero-sum subspace to itself (its columns sum to one), and that
/// subspace carries every eigenvalue except the Perron one, so repeated
/// application of `Λ` to zero-sum vectors must shrink them.
pub fn stochastic_spectrum_bound(lambda: &DMatrix<f64>, seed: u64) -> Result<SpectrumReport> {
    let m = lambda.nrows();
    if m < 3 {
        return Err(Error::BadStochastic(format!(
            "size {m} < 3: the only 2×2 barycentric matrix swaps the two entries and has eigenvalue −1"
        )));
    }
    check_barycentric(m, lambda)?;
    for j in 0..m {
        for i in (0..m).filter(|&i| i != j) {
            if lambda[(i, j)] <= 0.0 {
                return Err(Error::BadStochastic(format!("off-diagonal entry ({i}, {j}) is not positive")));
            }
        }
    }

    let ones = DVector::from_element(m, 1.0);
    let perron_residual = (lambda.transpose() * &ones - &ones).amax();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_deflated_norm = 0.0_f64;
    for _ in 0..SPECTRUM_SAMPLES {
        let mut x = DVector::from_fn(m, |_, _| rng.sample::<f64, _>(StandardNormal));
        let mean = x.mean();
        x.add_scalar_mut(-mean);
        x /= x.norm();
        for _ in 0..SPECTRUM_ITERATIONS {
            x = lambda * x;
            // exact on the zero-sum subspace; removes rounding drift toward
            // the Perron vector
            let mean = x.mean();
            x.add_scalar_mut(-mean);
        }
        max_deflated_norm = max_deflated_norm.max(x.norm());
    }
    Ok(SpectrumReport {
        perron_residual,
        max_deflated_norm,
        iterations: SPECTRUM_ITERATIONS,
        samples: SPECTRUM_SAMPLES,
        contracts: perron_residual <= 1e-12 && max_deflated_norm <= SPECTRUM_THRESHOLD,
    })
}

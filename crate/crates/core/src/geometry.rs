//! Simplices in homogeneous coordinates and their dual normal fans.
//!
//! A simplex with vertices `v_0..v_n` in `R^n` is stored as the matrix `V`
//! whose column `j` is `(1, v_j)`. Its normal fan `K` has column `i` equal to
//! `(κ_i, k_i)`, where `k_i` is the outward normal of the facet `F_i`
//! opposite `v_i` with `|k_i| = vol(F_i)`, and `κ_i = −k_i·p` for any `p` in
//! that facet. The two are tied by `KᵀV = VKᵀ = −n vol(Δ) I`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::error::{Error, Result};
use crate::linalg::{self, factorial, Lu};

#[derive(Debug, Clone, PartialEq)]
pub struct Simplex {
    dim: usize,
    matrix: DMatrix<f64>,
    volume: f64,
    reoriented: bool,
}

impl Simplex {
    /// Builds a positively oriented simplex from `n + 1` points of `R^n`.
    ///
    /// If the points are negatively oriented, vertices 0 and 1 are swapped
    /// and [`Simplex::reoriented`] reports it.
    pub fn new<P: AsRef<[f64]>>(vertices: &[P], tol: &Tolerances) -> Result<Self> {
        let m = vertices.len();
        if m < 3 {
            return Err(Error::BadInput(format!("a simplex needs at least 3 vertices, got {m}")));
        }
        let dim = m - 1;
        let mut matrix = DMatrix::zeros(m, m);
        for (j, v) in vertices.iter().enumerate() {
            let v = v.as_ref();
            if v.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: v.len() });
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::BadInput(format!("vertex {j} has a non-finite coordinate")));
            }
            matrix[(0, j)] = 1.0;
            for (r, &x) in v.iter().enumerate() {
                matrix[(r + 1, j)] = x;
            }
        }

        let scale: f64 = matrix.column_iter().map(|c| c.norm()).product();
        let mut det = linalg::det(&matrix);
        if det.abs() <= tol.degeneracy * scale {
            return Err(Error::DegenerateSimplex { det, scale });
        }
        let reoriented = det < 0.0;
        if reoriented {
            matrix.swap_columns(0, 1);
            det = -det;
        }
        Ok(Self { dim, volume: det / factorial(dim), matrix, reoriented })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The homogeneous vertex matrix `V`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn volume(&self) -> f64 {
        self.volume
    }

    /// True when the input vertices 0 and 1 were swapped to fix orientation.
    pub fn reoriented(&self) -> bool {
        self.reoriented
    }

    pub fn vertex(&self, j: usize) -> DVector<f64> {
        self.matrix.column(j).rows(1, self.dim).into_owned()
    }

    pub fn vertices(&self) -> Vec<DVector<f64>> {
        (0..=self.dim).map(|j| self.vertex(j)).collect()
    }

    /// `K = −n vol(Δ) (V⁻¹)ᵀ`, the normal fan scaled so `|k_i| = vol(F_i)`.
    pub fn normal_fan(&self) -> NormalFan {
        let inv = linalg::inverse(&self.matrix).expect("simplex matrix is non-singular by construction");
        let matrix = inv.transpose() * (-(self.dim as f64) * self.volume);
        NormalFan { dim: self.dim, matrix, relabeled: false }
    }

    /// `(n−1)`-volume of facet `F_i`, from the Gram determinant of its edge
    /// vectors. Independent of the normal fan.
    pub fn face_volume(&self, i: usize) -> f64 {
        assert!(i <= self.dim, "face index {i} out of range");
        let mut verts = (0..=self.dim).filter(|&j| j != i).map(|j| self.vertex(j));
        let base = verts.next().expect("a facet has at least two vertices");
        let edges: Vec<DVector<f64>> = verts.map(|v| v - &base).collect();
        let e = DMatrix::from_columns(&edges);
        let gram = e.transpose() * &e;
        linalg::det(&gram).max(0.0).sqrt() / factorial(self.dim - 1)
    }

    /// Centroid of facet `F_i`: `g − v_i / n` with `g = Σ v_j / n`.
    pub fn face_centroid(&self, i: usize) -> DVector<f64> {
        let sum: DVector<f64> = self.vertices().iter().sum();
        (sum - self.vertex(i)) / self.dim as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormalFan {
    dim: usize,
    matrix: DMatrix<f64>,
    relabeled: bool,
}

impl NormalFan {
    /// Wraps normals `k_i` and offsets `κ_i` without normalizing them.
    pub fn new(normals: &[DVector<f64>], kappa: &[f64]) -> Result<Self> {
        let m = normals.len();
        if m < 3 {
            return Err(Error::BadInput(format!("a normal fan needs at least 3 normals, got {m}")));
        }
        if kappa.len() != m {
            return Err(Error::DimensionMismatch { expected: m, found: kappa.len() });
        }
        let dim = m - 1;
        let mut matrix = DMatrix::zeros(m, m);
        for (i, k) in normals.iter().enumerate() {
            if k.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: k.len() });
            }
            matrix[(0, i)] = kappa[i];
            matrix.view_mut((1, i), (dim, 1)).copy_from(k);
        }
        Ok(Self { dim, matrix, relabeled: false })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The homogeneous normal matrix `K`.
    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn normal(&self, i: usize) -> DVector<f64> {
        self.matrix.column(i).rows(1, self.dim).into_owned()
    }

    pub fn normals(&self) -> Vec<DVector<f64>> {
        (0..=self.dim).map(|i| self.normal(i)).collect()
    }

    /// `n × (n+1)` matrix `[k_0 … k_n]`.
    pub fn normals_matrix(&self) -> DMatrix<f64> {
        self.matrix.rows(1, self.dim).into_owned()
    }

    pub fn kappa(&self, i: usize) -> f64 {
        self.matrix[(0, i)]
    }

    pub fn kappa_sum(&self) -> f64 {
        self.matrix.row(0).sum()
    }

    /// `vol(Δ)` implied by the normalization `Σκ = −n vol(Δ)`.
    pub fn implied_volume(&self) -> f64 {
        -self.kappa_sum() / self.dim as f64
    }

    /// True when [`rescale_fan`] swapped indices 0 and 1 to fix orientation.
    pub fn relabeled(&self) -> bool {
        self.relabeled
    }

    pub fn validity(&self, tol: &Tolerances) -> FanValidity {
        validate_normal_fan(&self.normals(), tol)
    }

    /// Recovers the vertices: `V = −ρ (Kᵀ)⁻¹` with `ρ = n vol(Δ)` given by
    /// `ρⁿ = (−1)^{n+1} (n−1)! det K`.
    pub fn to_simplex(&self, tol: &Tolerances) -> Result<Simplex> {
        let validity = self.validity(tol);
        if validity.verdict != FanVerdict::Valid {
            return Err(Error::InvalidFan(validity.verdict));
        }
        let n = self.dim;
        let sign = if n.is_multiple_of(2) { -1.0 } else { 1.0 };
        let radicand = sign * factorial(n - 1) * linalg::det(&self.matrix);
        if radicand.is_nan() || radicand <= 0.0 {
            return Err(Error::NonPositiveRadicand(radicand));
        }
        let rho = radicand.powf(1.0 / n as f64);
        let v = linalg::inverse(&self.matrix.transpose())? * (-rho);
        let row0_defect = v.row(0).iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
        if row0_defect > 1e-8 {
            return Err(Error::UnnormalizedFan(row0_defect));
        }
        let vertices: Vec<Vec<f64>> = (0..=n).map(|j| v.column(j).rows(1, n).iter().copied().collect()).collect();
        Simplex::new(&vertices, tol)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FanVerdict {
    Valid,
    /// The normals other than `k_i` are linearly dependent.
    DependentSubset(usize),
    /// The dependency `Σ λ_i k_i = 0` has coefficients of both signs.
    MixedSigns,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FanValidity {
    /// Entry `i` tells whether the normals other than `k_i` are independent.
    pub independent: Vec<bool>,
    /// Coefficients of the dependency `Σ λ_i k_i = 0`, scaled so that
    /// `max |λ_i| = 1` and `Σ λ_i ≥ 0`.
    pub dependency_coeffs: Vec<f64>,
    pub verdict: FanVerdict,
}

/// Checks that `n + 1` normals in `R^n` can be the outward normals of a
/// simplex: every `n` of them are independent and the single dependency has
/// coefficients of one sign.
pub fn validate_normal_fan(normals: &[DVector<f64>], tol: &Tolerances) -> FanValidity {
    let m = normals.len();
    let dim = m.saturating_sub(1);
    assert!(m >= 3, "need at least 3 normals");
    assert!(normals.iter().all(|k| k.len() == dim), "normals must have dimension {dim}");
    let full = DMatrix::from_columns(normals);
    let leave_out = |i: usize| full.clone().remove_column(i);

    let independent: Vec<bool> = (0..m)
        .map(|i| {
            let sv = linalg::singular_values(&leave_out(i));
            let largest = sv[0];
            let smallest = sv[sv.len() - 1];
            largest > 0.0 && smallest > tol.rank * largest
        })
        .collect();

    // generalized cross product: λ_i = (−1)^i det([k_j]_{j≠i}) spans the null space
    let mut lambda: Vec<f64> = (0..m)
        .map(|i| {
            let d = Lu::new(&leave_out(i)).det();
            if i % 2 == 0 {
                d
            } else {
                -d
            }
        })
        .collect();
    let largest = lambda.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if largest > 0.0 {
        let sign = if lambda.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        lambda.iter_mut().for_each(|x| *x *= sign / largest);
    }

    let verdict = if let Some(i) = independent.iter().position(|ok| !ok) {
        FanVerdict::DependentSubset(i)
    } else if lambda.iter().all(|&x| x > 0.0) {
        FanVerdict::Valid
    } else {
        FanVerdict::MixedSigns
    };
    FanValidity { independent, dependency_coeffs: lambda, verdict }
}

/// Rescales arbitrary outward normals at contact points `p_i` so that they
/// form the normal fan of the simplex cut out by the hyperplanes
/// `k_i·x = k_i·p_i`.
///
/// Each normal is first multiplied by its dependency coefficient so that the
/// normals sum to zero; then a single positive factor enforces
/// `Σκ = −n vol(Δ)`. If the hyperplanes bound a negatively oriented simplex,
/// indices 0 and 1 are swapped and [`NormalFan::relabeled`] reports it.
pub fn rescale_fan(normals: &[DVector<f64>], contact_points: &[DVector<f64>], tol: &Tolerances) -> Result<NormalFan> {
    if contact_points.len() != normals.len() {
        return Err(Error::DimensionMismatch { expected: normals.len(), found: contact_points.len() });
    }
    let validity = validate_normal_fan(normals, tol);
    if validity.verdict != FanVerdict::Valid {
        return Err(Error::InvalidFan(validity.verdict));
    }
    let n = normals.len() - 1;
    if let Some(p) = contact_points.iter().find(|p| p.len() != n) {
        return Err(Error::DimensionMismatch { expected: n, found: p.len() });
    }

    let mut balanced: Vec<DVector<f64>> =
        normals.iter().zip(&validity.dependency_coeffs).map(|(k, &l)| k * l).collect();
    let mut points = contact_points.to_vec();

    let build = |balanced: &[DVector<f64>], points: &[DVector<f64>]| -> Result<(DMatrix<f64>, f64, f64)> {
        let kappa: Vec<f64> = balanced.iter().zip(points).map(|(k, p)| -k.dot(p)).collect();
        let kappa_sum: f64 = kappa.iter().sum();
        if kappa_sum >= 0.0 {
            return Err(Error::NonNegativeKappaSum(kappa_sum));
        }
        let k = NormalFan::new(balanced, &kappa)?.matrix;
        // KᵀV = (Σκ) I for the vertices cut out by the hyperplanes
        let v = linalg::inverse(&k.transpose())? * kappa_sum;
        let volume = linalg::det(&v) / factorial(n);
        Ok((k, kappa_sum, volume))
    };

    let (mut k, mut kappa_sum, mut volume) = build(&balanced, &points)?;
    let relabeled = volume < 0.0;
    if relabeled {
        balanced.swap(0, 1);
        points.swap(0, 1);
        (k, kappa_sum, volume) = build(&balanced, &points)?;
    }
    if volume <= 0.0 || !volume.is_finite() {
        return Err(Error::DegenerateSimplex { det: volume * factorial(n), scale: 1.0 });
    }
    let factor = -(n as f64) * volume / kappa_sum;
    Ok(NormalFan { dim: n, matrix: k * factor, relabeled })
}

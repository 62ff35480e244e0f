//! Brute-force check of immobilization through the penetration function.
//!
//! For a rigid motion `g`, `Φ(g) = Σ (g(p_i) − p_i)·k_i` is the total normal
//! displacement of the contacts, weighted by facet volumes; a negative term
//! means that contact penetrates the simplex. `Φ` ignores translations and,
//! on rotations `g = exp S`, equals `Ψ(S) = tr(Aᵀ(exp S − I))`. The contact
//! set immobilizes exactly when `Ψ` has a strict local maximum at `S = 0`.
//!
//! [`falsify`] evaluates `Ψ` directly: it builds an explicit escape rotation
//! when the algebraic test fails, and samples rotations around the identity
//! when it passes.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::config::Tolerances;
use crate::contact::{ContactSet, PenetrationMatrix};
use crate::error::{Error, Result};
use crate::geometry::{NormalFan, Simplex};
use crate::linalg;

/// `x ↦ R x + a` with `R ∈ SO(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RigidMotion {
    rotation: DMatrix<f64>,
    translation: DVector<f64>,
}

const ORTHOGONALITY_TOL: f64 = 1e-12;

impl RigidMotion {
    pub fn new(rotation: DMatrix<f64>, translation: DVector<f64>) -> Result<Self> {
        let n = rotation.nrows();
        if !rotation.is_square() || translation.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: translation.len() });
        }
        let defect = linalg::orthogonality_defect(&rotation);
        if defect > ORTHOGONALITY_TOL {
            return Err(Error::BadInput(format!("rotation is not orthogonal (defect {defect:e})")));
        }
        let det = linalg::det(&rotation);
        if (det - 1.0).abs() > ORTHOGONALITY_TOL {
            return Err(Error::BadInput(format!("rotation has determinant {det}")));
        }
        Ok(Self { rotation, translation })
    }

    pub fn identity(n: usize) -> Self {
        Self { rotation: DMatrix::identity(n, n), translation: DVector::zeros(n) }
    }

    pub fn translation_by(a: DVector<f64>) -> Self {
        let n = a.len();
        Self { rotation: DMatrix::identity(n, n), translation: a }
    }

    /// `exp S`, re-projected onto `SO(n)` if rounding drifted past 1e−12.
    pub fn from_skew(s: &SkewGenerator) -> Result<Self> {
        let n = s.dim();
        let mut r = linalg::expm(&s.matrix());
        if linalg::orthogonality_defect(&r) > ORTHOGONALITY_TOL {
            r = linalg::orthogonal_polar_factor(&r)?;
        }
        Ok(Self { rotation: r, translation: DVector::zeros(n) })
    }

    pub fn dim(&self) -> usize {
        self.translation.len()
    }

    pub fn rotation(&self) -> &DMatrix<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &DVector<f64> {
        &self.translation
    }

    /// The same motion followed by a translation by `a`.
    pub fn then_translate(&self, a: &DVector<f64>) -> Self {
        Self { rotation: self.rotation.clone(), translation: &self.translation + a }
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.rotation * x + &self.translation
    }

    /// `G = [[1, 0ᵀ], [a, R]]`, acting on homogeneous points `(1, x)`.
    pub fn homogeneous(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut g = DMatrix::zeros(n + 1, n + 1);
        g[(0, 0)] = 1.0;
        g.view_mut((1, 0), (n, 1)).copy_from(&self.translation);
        g.view_mut((1, 1), (n, n)).copy_from(&self.rotation);
        g
    }
}

/// A skew-symmetric `n × n` matrix `S = Σ_{i<j} c_ij S^(ij)`, where `S^(ij)`
/// has `+1` at `(i, j)` and `−1` at `(j, i)`. Stored as the coordinates
/// `c_ij` in row-major upper-triangle order.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewGenerator {
    dim: usize,
    coords: Vec<f64>,
}

impl SkewGenerator {
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        let expected = dim * dim.saturating_sub(1) / 2;
        if coords.len() != expected {
            return Err(Error::DimensionMismatch { expected, found: coords.len() });
        }
        Ok(Self { dim, coords })
    }

    pub fn zero(dim: usize) -> Self {
        Self { dim, coords: vec![0.0; dim * dim.saturating_sub(1) / 2] }
    }

    /// `S^(ij)` for `i < j`.
    pub fn basis(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < j && j < dim, "basis generator needs i < j < dim");
        let mut g = Self::zero(dim);
        g.coords[pair_index(dim, i, j)] = 1.0;
        g
    }

    /// Reads the upper triangle; the matrix must be skew within 1e−12
    /// relative to its largest entry.
    pub fn from_matrix(s: &DMatrix<f64>) -> Result<Self> {
        let n = s.nrows();
        if !s.is_square() {
            return Err(Error::BadInput("generator must be square".into()));
        }
        let defect = linalg::max_abs(&(s + s.transpose()));
        if defect > 1e-12 * linalg::max_abs(s).max(f64::MIN_POSITIVE) {
            return Err(Error::BadInput(format!("matrix is not skew-symmetric (defect {defect:e})")));
        }
        let coords = upper_pairs(n).map(|(i, j)| s[(i, j)]).collect();
        Ok(Self { dim: n, coords })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Euclidean norm of the coordinates (`‖S‖_F / √2`).
    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { dim: self.dim, coords: self.coords.iter().map(|c| c * factor).collect() }
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.dim, self.dim);
        for ((i, j), &c) in upper_pairs(self.dim).zip(&self.coords) {
            s[(i, j)] = c;
            s[(j, i)] = -c;
        }
        s
    }
}

fn upper_pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

fn pair_index(n: usize, i: usize, j: usize) -> usize {
    // rows before i contribute (n−1) + (n−2) + … + (n−i) entries
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// `Φ(g) = Σ (g(p_i) − p_i)·k_i`.
pub fn phi(fan: &NormalFan, contacts: &ContactSet, g: &RigidMotion) -> f64 {
    (0..=fan.dim())
        .map(|i| {
            let p = contacts.point(i);
            (g.apply(&p) - p).dot(&fan.normal(i))
        })
        .sum()
}

/// `Ψ(S) = tr(Aᵀ(exp S − I))`, with `exp S − I` formed directly so small
/// generators keep full relative precision.
pub fn psi(a: &PenetrationMatrix, s: &SkewGenerator) -> f64 {
    let d = linalg::expm_minus_identity(&s.matrix());
    a.matrix().component_mul(&d).sum()
}

/// The translation `t(R)` making every contact's normal displacement under
/// `t(R)∘R` equal to `Φ(R)/(n+1)`.
pub fn equalizing_translation(
    fan: &NormalFan,
    contacts: &ContactSet,
    rotation: &DMatrix<f64>,
    tol: &Tolerances,
) -> Result<RigidMotion> {
    let n = fan.dim();
    let r = RigidMotion::new(rotation.clone(), DVector::zeros(n))?;
    let phi_r = phi(fan, contacts, &r);
    let share = phi_r / (n + 1) as f64;
    let b = DVector::from_fn(n + 1, |i, _| {
        let p = contacts.point(i);
        share - (rotation * &p - &p).dot(&fan.normal(i))
    });
    let v = fan.to_simplex(tol)?;
    let n_vol = -fan.kappa_sum();
    let a_tilde = v.matrix() * b / -n_vol;
    Ok(r.then_translate(&a_tilde.rows(1, n).into_owned()))
}

/// Index of a contact that penetrates under the translation by `a`
/// (the most negative `a·k_i`).
pub fn translation_penetration(fan: &NormalFan, a: &DVector<f64>) -> Result<usize> {
    if a.len() != fan.dim() {
        return Err(Error::DimensionMismatch { expected: fan.dim(), found: a.len() });
    }
    if a.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroTranslation);
    }
    let (i, dot) = (0..=fan.dim())
        .map(|i| (i, a.dot(&fan.normal(i))))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("fan has n + 1 normals");
    if dot >= 0.0 {
        return Err(Error::Internal(format!("no contact penetrates under translation (min a·k = {dot:e})")));
    }
    Ok(i)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    /// Norm of the sampled generators (coordinate norm).
    pub epsilon: f64,
    pub n_random: usize,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self { epsilon: 1e-3, n_random: 1000, seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum OracleVerdict {
    ConfirmImmobilizing,
    RefuteWithWitness,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Upper-triangle coordinates `c_ij` of the escape generator `S`.
    pub generator: Vec<f64>,
    pub psi: f64,
    /// Smallest normal displacement of the contacts under `t(R)∘exp S`;
    /// non-negative means no contact penetrates.
    pub min_normal_displacement: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub verdict: OracleVerdict,
    /// Number of generators at which `Ψ` was evaluated.
    pub samples: usize,
    /// Largest `Ψ` seen (closest to escaping).
    pub worst_psi: f64,
    pub witness: Option<Witness>,
    /// Set when the smallest pair sum vanishes: `Ψ` at the critical generator.
    pub critical_psi: Option<f64>,
}

/// Pair sums within this fraction of `‖A‖₂` are treated as zero.
const DEGENERATE_PAIR_TOL: f64 = 1e-9;

/// Confirms or refutes immobilization by evaluating `Ψ`.
///
/// - Asymmetric `A`: the antisymmetric part gives `S` with `tr(AᵀS) > 0`,
///   shrunk until `Ψ(S) > 0`.
/// - Symmetric `A` with `λ_0 + λ_1 < 0`: `S = ε Q S^(01) Qᵀ` in the
///   eigenbasis `Q` gives `Ψ(S) = (1 − cos ε)(−λ_0 − λ_1) > 0`.
/// - Pair sum within `1e−9 ‖A‖₂` of zero: `Ψ` vanishes along the critical
///   generator, reported as inconclusive.
/// - Otherwise every eigenbasis generator `S^(ij)` has `Ψ < 0` (a complete
///   check of the second-order condition), and `n_random` random generators
///   of norm `ε` plus the standard-basis generators are sampled as well.
pub fn falsify(
    simplex: &Simplex,
    contacts: &ContactSet,
    config: &OracleConfig,
    tol: &Tolerances,
) -> Result<OracleReport> {
    let n = simplex.dim();
    let fan = simplex.normal_fan();
    let pm = PenetrationMatrix::assemble(&fan, contacts, tol)?;
    let eps = config.epsilon;

    let Some(eigen) = pm.eigen() else {
        let a = pm.matrix();
        let w = (a - a.transpose()) * 0.5;
        let direction = SkewGenerator::from_matrix(&w)?;
        let unit = direction.scaled(1.0 / direction.norm());
        let mut scale = eps;
        let mut samples = 0;
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..64 {
            let s = unit.scaled(scale);
            let value = psi(&pm, &s);
            samples += 1;
            worst = worst.max(value);
            if value > 0.0 {
                let witness = make_witness(&fan, contacts, &s, value, tol)?;
                return Ok(OracleReport {
                    verdict: OracleVerdict::RefuteWithWitness,
                    samples,
                    worst_psi: value,
                    witness: Some(witness),
                    critical_psi: None,
                });
            }
            scale *= 0.5;
        }
        return Ok(OracleReport {
            verdict: OracleVerdict::Inconclusive,
            samples,
            worst_psi: worst,
            witness: None,
            critical_psi: None,
        });
    };

    let q = &eigen.vectors;
    let in_eigenbasis = |i: usize, j: usize| -> Result<SkewGenerator> {
        let local = SkewGenerator::basis(n, i, j).matrix();
        SkewGenerator::from_matrix(&(q * local * q.transpose()))
    };
    let pair_sum = pm.min_pair_sum().expect("symmetric");
    let norm = pm.spectral_norm().expect("symmetric").max(f64::MIN_POSITIVE);

    if pair_sum.abs() <= DEGENERATE_PAIR_TOL * norm {
        let s = in_eigenbasis(0, 1)?.scaled(eps);
        let value = psi(&pm, &s);
        return Ok(OracleReport {
            verdict: OracleVerdict::Inconclusive,
            samples: 1,
            worst_psi: value,
            witness: None,
            critical_psi: Some(value),
        });
    }

    if pair_sum < 0.0 {
        let s = in_eigenbasis(0, 1)?.scaled(eps);
        let value = psi(&pm, &s);
        if value < 0.0 {
            return Ok(OracleReport {
                verdict: OracleVerdict::Inconclusive,
                samples: 1,
                worst_psi: value,
                witness: None,
                critical_psi: None,
            });
        }
        let witness = make_witness(&fan, contacts, &s, value, tol)?;
        return Ok(OracleReport {
            verdict: OracleVerdict::RefuteWithWitness,
            samples: 1,
            worst_psi: value,
            witness: Some(witness),
            critical_psi: None,
        });
    }

    let mut candidates: Vec<SkewGenerator> = Vec::new();
    for (i, j) in upper_pairs(n) {
        candidates.push(in_eigenbasis(i, j)?.scaled(eps));
        candidates.push(SkewGenerator::basis(n, i, j).scaled(eps));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let m = n * (n - 1) / 2;
    for _ in 0..config.n_random {
        let coords: Vec<f64> = (0..m).map(|_| rng.sample(StandardNormal)).collect();
        let g = SkewGenerator::new(n, coords)?;
        let len = g.norm();
        if len > 0.0 {
            candidates.push(g.scaled(eps / len));
        }
    }

    let values: Vec<f64> = candidates.iter().map(|s| psi(&pm, s)).collect();
    let (worst_index, worst) =
        values.iter().copied().enumerate().max_by(|x, y| x.1.total_cmp(&y.1)).expect("at least one generator");
    if worst < 0.0 {
        Ok(OracleReport {
            verdict: OracleVerdict::ConfirmImmobilizing,
            samples: values.len(),
            worst_psi: worst,
            witness: None,
            critical_psi: None,
        })
    } else {
        let witness = make_witness(&fan, contacts, &candidates[worst_index], worst, tol)?;
        Ok(OracleReport {
            verdict: OracleVerdict::RefuteWithWitness,
            samples: values.len(),
            worst_psi: worst,
            witness: Some(witness),
            critical_psi: None,
        })
    }
}

fn make_witness(
    fan: &NormalFan,
    contacts: &ContactSet,
    s: &SkewGenerator,
    psi_value: f64,
    tol: &Tolerances,
) -> Result<Witness> {
    let rotation = RigidMotion::from_skew(s)?;
    let g = equalizing_translation(fan, contacts, rotation.rotation(), tol)?;
    let min_normal_displacement = (0..=fan.dim())
        .map(|i| {
            let p = contacts.point(i);
            (g.apply(&p) - p).dot(&fan.normal(i))
        })
        .fold(f64::INFINITY, f64::min);
    Ok(Witness { generator: s.coords().to_vec(), psi: psi_value, min_normal_displacement })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthesis::centroid_contacts;
    use approx::assert_relative_eq;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn triangle() -> Simplex {
        Simplex::new(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], &tol()).unwrap()
    }

    #[test]
    fn pair_indexing() {
        let pairs: Vec<_> = upper_pairs(4).collect();
        for (k, &(i, j)) in pairs.iter().enumerate() {
            assert_eq!(pair_index(4, i, j), k);
        }
        let s = SkewGenerator::basis(4, 1, 3).matrix();
        assert_eq!(s[(1, 3)], 1.0);
        assert_eq!(s[(3, 1)], -1.0);
        assert_eq!(s.iter().filter(|x| **x != 0.0).count(), 2);
    }

    #[test]
    fn phi_of_identity_and_translations() {
        let s = triangle();
        let fan = s.normal_fan();
        let c = centroid_contacts(&s, &tol()).unwrap();
        assert_eq!(phi(&fan, &c, &RigidMotion::identity(2)), 0.0);
        let t = RigidMotion::translation_by(DVector::from_vec(vec![3.5, -1.25]));
        assert!(phi(&fan, &c, &t).abs() < 1e-14);
    }

    #[test]
    fn small_rotation_penetrates_centroids() {
        let s = triangle();
        let fan = s.normal_fan();
        let c = centroid_contacts(&s, &tol()).unwrap();
        let g = RigidMotion::from_skew(&SkewGenerator::basis(2, 0, 1).scaled(1e-2)).unwrap();
        let value = phi(&fan, &c, &g);
        // A = vol I: Φ = vol tr(R − I) = 2 vol (cos ε − 1)
        assert_relative_eq!(value, 2.0 * 0.5 * (1e-2f64.cos() - 1.0), max_relative = 1e-9);
        assert!(value < 0.0);
    }

    #[test]
    fn psi_zero_generator() {
        let s = triangle();
        let c = centroid_contacts(&s, &tol()).unwrap();
        let pm = PenetrationMatrix::assemble(&s.normal_fan(), &c, &tol()).unwrap();
        assert_eq!(psi(&pm, &SkewGenerator::zero(2)), 0.0);
    }

    #[test]
    fn psi_second_order_term_on_diagonal_example() {
        let a = DMatrix::from_diagonal(&DVector::from_vec(vec![238.0 / 5.0, 136.0 / 5.0, 34.0 / 5.0, -68.0 / 5.0]));
        let pm = PenetrationMatrix::from_matrix(a, &tol()).unwrap();
        let eps = 1e-3;
        let value = psi(&pm, &SkewGenerator::basis(4, 2, 3).scaled(eps));
        // tr(A S²)/2 = −ε²(λ_2 + λ_3)/2, next even term is O(ε⁴)
        let leading = -eps * eps * (34.0 / 5.0 - 68.0 / 5.0) / 2.0;
        assert!(value > 0.0);
        assert_relative_eq!(value, leading, max_relative = 1e-6);
    }

    #[test]
    fn first_order_term_vanishes_for_symmetric_matrix() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 0.5, -1.0, 0.5, 1.0, 0.3, -1.0, 0.3, 4.0]);
        let s = SkewGenerator::new(3, vec![0.7, -0.2, 1.1]).unwrap().matrix();
        assert!((a.transpose() * s).trace().abs() < 1e-15);
    }

    #[test]
    fn equalizing_translation_of_identity_is_identity() {
        let s = triangle();
        let fan = s.normal_fan();
        let c = centroid_contacts(&s, &tol()).unwrap();
        let g = equalizing_translation(&fan, &c, &DMatrix::identity(2, 2), &tol()).unwrap();
        assert!(g.translation().norm() < 1e-15);
    }

    #[test]
    fn equalizing_translation_balances_penetrations() {
        let s = triangle();
        let fan = s.normal_fan();
        let c = centroid_contacts(&s, &tol()).unwrap();
        let r = RigidMotion::from_skew(&SkewGenerator::basis(2, 0, 1).scaled(0.2)).unwrap();
        let g = equalizing_translation(&fan, &c, r.rotation(), &tol()).unwrap();
        let target = phi(&fan, &c, &r) / 3.0;
        for i in 0..3 {
            let p = c.point(i);
            assert_relative_eq!((g.apply(&p) - &p).dot(&fan.normal(i)), target, epsilon = 1e-14);
        }
        assert_relative_eq!(phi(&fan, &c, &g), phi(&fan, &c, &r), epsilon = 1e-14);
    }

    #[test]
    fn translation_penetration_indices() {
        let fan = triangle().normal_fan();
        assert_eq!(translation_penetration(&fan, &DVector::from_vec(vec![1.0, 0.0])).unwrap(), 1);
        assert_eq!(translation_penetration(&fan, &DVector::from_vec(vec![-1.0, -1.0])).unwrap(), 0);
        assert_eq!(translation_penetration(&fan, &DVector::zeros(2)), Err(Error::ZeroTranslation));
    }

    #[test]
    fn rigid_motion_validation() {
        let not_rotation = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(RigidMotion::new(not_rotation, DVector::zeros(2)).is_err());
        let g = RigidMotion::from_skew(&SkewGenerator::new(3, vec![0.4, -1.0, 2.5]).unwrap()).unwrap();
        let h = g.homogeneous();
        assert_eq!(h.row(0).iter().copied().collect::<Vec<_>>(), vec![1.0, 0.0, 0.0, 0.0]);
        assert!(RigidMotion::new(g.rotation().clone(), DVector::zeros(3)).is_ok());
    }

    #[test]
    fn confirms_triangle_centroids() {
        let s = triangle();
        let c = centroid_contacts(&s, &tol()).unwrap();
        let report = falsify(&s, &c, &OracleConfig { epsilon: 1e-3, n_random: 1000, seed: 1 }, &tol()).unwrap();
        assert_eq!(report.verdict, OracleVerdict::ConfirmImmobilizing);
        // every generator of norm ε gives Ψ = 2 vol (cos ε − 1) = −vol ε² + O(ε⁴)
        assert_relative_eq!(report.worst_psi, -0.5e-6, max_relative = 1e-6);
        assert_eq!(report.samples, 1002);
    }

    #[test]
    fn refutes_asymmetric_triangle_contacts() {
        let s = triangle();
        let lambda = DMatrix::from_column_slice(3, 3, &[0.0, 0.9, 0.1, 0.5, 0.0, 0.5, 0.9, 0.1, 0.0]);
        let c = ContactSet::from_barycentric(&s, &lambda, &tol()).unwrap();
        let report = falsify(&s, &c, &OracleConfig::default(), &tol()).unwrap();
        assert_eq!(report.verdict, OracleVerdict::RefuteWithWitness);
        let w = report.witness.unwrap();
        assert!(w.psi > 0.0);
        assert!(w.min_normal_displacement >= -1e-15);
    }
}

use serde::{Deserialize, Serialize};

/// Numerical tolerances. All are relative to a natural scale of the quantity
/// being tested (documented at each use site).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerances {
    /// `|det V|` below `degeneracy × Π‖column‖` rejects a simplex.
    pub degeneracy: f64,
    /// `‖A − Aᵀ‖max ≤ sym × scale(A)` counts as symmetric.
    pub sym: f64,
    /// Almost positive definite iff `λ_min + λ_second > apd × ‖A‖₂`.
    pub apd: f64,
    /// Strictly interior iff every off-diagonal barycentric weight exceeds this.
    pub interior: f64,
    /// Hyperplane residual `|k_i·p_i + κ_i|` allowed, relative to `|k_i|·max(1, |p_i|)`.
    pub plane: f64,
    /// Smallest-to-largest singular value ratio for numerical rank.
    pub rank: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { degeneracy: 1e-12, sym: 1e-9, apd: 1e-10, interior: 1e-10, plane: 1e-9, rank: 1e-10 }
    }
}

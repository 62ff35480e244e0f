//! Small dense linear algebra: partial-pivoting LU, cyclic Jacobi for
//! symmetric eigenproblems, numerical rank, and the matrix exponential.
//!
//! Matrices are `nalgebra` dynamic matrices; the dimensions handled here are
//! tiny (`n + 1 ≤ ~20`), so everything is dense and direct.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Largest absolute entry.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// LU factorization with partial pivoting, `P A = L U`.
#[derive(Debug, Clone)]
pub struct Lu {
    lu: DMatrix<f64>,
    perm: Vec<usize>,
    sign: f64,
    singular: bool,
}

impl Lu {
    pub fn new(a: &DMatrix<f64>) -> Self {
        assert!(a.is_square(), "LU needs a square matrix");
        let n = a.nrows();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1.0;
        let mut singular = false;
        for col in 0..n {
            let (pivot_row, pivot_abs) =
                (col..n)
                    .map(|r| (r, lu[(r, col)].abs()))
                    .fold((col, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if pivot_abs == 0.0 {
                singular = true;
                continue;
            }
            if pivot_row != col {
                lu.swap_rows(pivot_row, col);
                perm.swap(pivot_row, col);
                sign = -sign;
            }
            let pivot = lu[(col, col)];
            for r in col + 1..n {
                let factor = lu[(r, col)] / pivot;
                lu[(r, col)] = factor;
                if factor != 0.0 {
                    for c in col + 1..n {
                        lu[(r, c)] -= factor * lu[(col, c)];
                    }
                }
            }
        }
        Self { lu, perm, sign, singular }
    }

    pub fn det(&self) -> f64 {
        if self.singular {
            return 0.0;
        }
        self.sign * self.lu.diagonal().iter().product::<f64>()
    }

    pub fn solve(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        if self.singular {
            return Err(Error::Singular);
        }
        let n = self.lu.nrows();
        let mut x = DVector::from_fn(n, |i, _| b[self.perm[i]]);
        for i in 0..n {
            for j in 0..i {
                x[i] -= self.lu[(i, j)] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= self.lu[(i, j)] * x[j];
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(b.nrows(), b.ncols());
        for j in 0..b.ncols() {
            let col = self.solve(&b.column(j).into_owned())?;
            out.set_column(j, &col);
        }
        Ok(out)
    }

    pub fn inverse(&self) -> Result<DMatrix<f64>> {
        let n = self.lu.nrows();
        self.solve_matrix(&DMatrix::identity(n, n))
    }
}

pub fn det(a: &DMatrix<f64>) -> f64 {
    Lu::new(a).det()
}

pub fn inverse(a: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Lu::new(a).inverse()
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SymmetricEigen {
    pub values: DVector<f64>,
    /// Column `i` is the unit eigenvector of `values[i]`.
    pub vectors: DMatrix<f64>,
    pub sweeps: usize,
}

const JACOBI_MAX_SWEEPS: usize = 50;
const JACOBI_REL_TOL: f64 = 1e-13;

/// Cyclic Jacobi rotations on a symmetric matrix. Only the upper triangle is
/// trusted; callers should symmetrize first.
pub fn symmetric_eigen(a: &DMatrix<f64>) -> Result<SymmetricEigen> {
    assert!(a.is_square(), "eigenproblem needs a square matrix");
    let n = a.nrows();
    let mut m = a.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    let frob = m.norm();
    let off_norm = |m: &DMatrix<f64>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += m[(i, j)] * m[(i, j)];
                }
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while off_norm(&m) > JACOBI_REL_TOL * frob {
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NoConvergence("Jacobi eigensolver"));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = DVector::from_iterator(n, order.iter().map(|&i| m[(i, i)]));
    let vectors = DMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(SymmetricEigen { values, vectors, sweeps })
}

/// Singular values, descending.
pub fn singular_values(a: &DMatrix<f64>) -> DVector<f64> {
    let mut sv = a.clone().singular_values();
    sv.as_mut_slice().sort_by(|x, y| y.total_cmp(x));
    sv
}

/// Number of singular values above `rel_tol × σ_max`.
pub fn numerical_rank(a: &DMatrix<f64>, rel_tol: f64) -> usize {
    let sv = singular_values(a);
    let largest = sv.iter().copied().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Minimum-norm least-squares solution through the SVD pseudo-inverse,
/// discarding singular values below `rel_cutoff × σ_max`.
pub fn least_squares_min_norm(a: &DMatrix<f64>, b: &DVector<f64>, rel_cutoff: f64) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("U requested");
    let v_t = svd.v_t.as_ref().expect("Vᵀ requested");
    let largest = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut x = DVector::zeros(a.ncols());
    for (k, &s) in svd.singular_values.iter().enumerate() {
        if largest == 0.0 || s <= rel_cutoff * largest {
            continue;
        }
        let coeff = u.column(k).dot(b) / s;
        x += v_t.row(k).transpose() * coeff;
    }
    x
}

/// Null vector of a matrix with exactly one more column than its rank:
/// the right singular vector of the smallest singular value.
pub fn smallest_right_singular_vector(a: &DMatrix<f64>) -> (f64, DVector<f64>) {
    // pad to at least square so the full right basis is available
    let cols = a.ncols();
    let rows = a.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (a.nrows(), cols)).copy_from(a);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("Vᵀ requested");
    let (k, s) =
        svd.singular_values.iter().copied().enumerate().min_by(|x, y| x.1.total_cmp(&y.1)).expect("non-empty matrix");
    (s, v_t.row(k).transpose())
}

const PADE_3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE_5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE_7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE_9: [f64; 10] =
    [17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0, 2162160.0, 110880.0, 3960.0, 90.0, 1.0];
const PADE_13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539_398_330_063_23e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

fn one_norm(a: &DMatrix<f64>) -> f64 {
    a.column_iter().map(|c| c.iter().map(|x| x.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `exp(A) − I` by scaling and squaring with diagonal Padé approximants.
///
/// Working with `exp(A) − I` rather than `exp(A)` keeps full relative
/// precision for small `A`: the approximant contributes `(V − U)⁻¹ 2U` and
/// each squaring step maps `D ↦ D (2I + D)`.
pub fn expm_minus_identity(a: &DMatrix<f64>) -> DMatrix<f64> {
    assert!(a.is_square(), "matrix exponential needs a square matrix");
    let n = a.nrows();
    let norm = one_norm(a);
    let (coeffs, squarings): (&[f64], u32) = if norm <= THETA_3 {
        (&PADE_3, 0)
    } else if norm <= THETA_5 {
        (&PADE_5, 0)
    } else if norm <= THETA_7 {
        (&PADE_7, 0)
    } else if norm <= THETA_9 {
        (&PADE_9, 0)
    } else {
        let s = (norm / THETA_13).log2().ceil().max(0.0) as u32;
        (&PADE_13, s)
    };
    let scaled = a / 2f64.powi(squarings as i32);

    let identity = DMatrix::<f64>::identity(n, n);
    let mut power = identity.clone();
    let mut even = DMatrix::<f64>::zeros(n, n);
    let mut odd = DMatrix::<f64>::zeros(n, n);
    for (k, &c) in coeffs.iter().enumerate() {
        if k > 0 {
            power = &power * &scaled;
        }
        if k % 2 == 0 {
            even += &power * c;
        } else {
            odd += &power * c;
        }
    }
    // exp(T) ≈ (V − U)⁻¹ (V + U) with U = odd part, V = even part
    let denom = &even - &odd;
    let mut d =
        Lu::new(&denom).solve_matrix(&(odd * 2.0)).expect("Padé denominator is well conditioned within theta bounds");
    for _ in 0..squarings {
        let grow = &d + &identity * 2.0;
        d = &d * grow;
    }
    d
}

pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    expm_minus_identity(a) + DMatrix::identity(n, n)
}

/// `‖RᵀR − I‖max`.
pub fn orthogonality_defect(r: &DMatrix<f64>) -> f64 {
    let n = r.nrows();
    max_abs(&(r.transpose() * r - DMatrix::identity(n, n)))
}

/// Orthogonal polar factor by Newton iteration `X ↦ (X + X⁻ᵀ)/2`.
pub fn orthogonal_polar_factor(r: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut x = r.clone();
    for _ in 0..100 {
        let next = (&x + inverse(&x)?.transpose()) * 0.5;
        let change = max_abs(&(&next - &x));
        x = next;
        if change <= 1e-15 * max_abs(&x) {
            return Ok(x);
        }
    }
    Err(Error::NoConvergence("polar decomposition"))
}

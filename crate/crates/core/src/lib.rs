//! Immobilization of an n-simplex by a set of n+1 contact points.
//!
//! A simplex is held in homogeneous form as the `(n+1)×(n+1)` vertex matrix
//! `V`, and its facet normals (scaled so that `|k_i|` is the facet volume)
//! as the dual matrix `K` with `KᵀV = VKᵀ = -n vol(Δ) I`. A contact set with
//! one point on each facet yields the penetration matrix `A = Σ k_i p_iᵀ`,
//! and the contact set immobilizes the simplex exactly when `A` is symmetric
//! and every pair of its eigenvalues has a positive sum.
//!
//! Modules:
//! - [`geometry`]: simplices, normal fans, the vertex/normal duality.
//! - [`contact`]: contact sets, the penetration matrix and the verdict.
//! - [`synthesis`]: centroid and centred contact sets, symmetry-preserving
//!   displacements.
//! - [`oracle`]: brute-force evaluation of the penetration function on rigid
//!   motions, used to confirm or refute algebraic verdicts.
//! - [`formats`]: JSON file formats shared with the command-line tool.

#![forbid(unsafe_code)]

pub mod config;
pub mod contact;
mod error;
pub mod formats;
pub mod geometry;
pub mod linalg;
pub mod oracle;
pub mod sampling;
pub mod synthesis;
pub mod worked_example;

pub use config::Tolerances;
pub use contact::{ContactSet, Interiority, PenetrationMatrix, Verdict};
pub use error::{Error, Result};
pub use geometry::{FanValidity, FanVerdict, NormalFan, Simplex};
pub use oracle::{OracleConfig, OracleReport, OracleVerdict, RigidMotion, SkewGenerator};
pub use synthesis::{CentredWitness, DisplacementBasis};

//! JSON file formats.
//!
//! Matrices are written as lists of columns: a simplex as its `n+1`
//! vertices, a contact set as its `n+1` points or as the `n+1` columns of
//! `Λ`. Floats are written with 17 significant digits by [`to_json`], so
//! files round-trip exactly and identical inputs give identical bytes.

use std::io;

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::ser::Serialize;
use serde::{Deserialize, Serialize as SerializeDerive};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::config::Tolerances;
use crate::contact::ContactSet;
use crate::error::{Error, Result};
use crate::geometry::{NormalFan, Simplex};
use crate::synthesis::DisplacementCoeff;

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexFile {
    pub n: usize,
    pub vertices: Vec<Vec<f64>>,
}

impl SimplexFile {
    pub fn from_simplex(s: &Simplex) -> Self {
        Self { n: s.dim(), vertices: s.vertices().iter().map(|v| v.iter().copied().collect()).collect() }
    }

    pub fn to_simplex(&self, tol: &Tolerances) -> Result<Simplex> {
        check_columns(&self.vertices, self.n + 1, self.n, "vertices")?;
        Simplex::new(&self.vertices, tol)
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormalFanFile {
    pub n: usize,
    pub normals: Vec<Vec<f64>>,
    pub kappa: Vec<f64>,
}

impl NormalFanFile {
    pub fn from_fan(f: &NormalFan) -> Self {
        Self {
            n: f.dim(),
            normals: f.normals().iter().map(|k| k.iter().copied().collect()).collect(),
            kappa: (0..=f.dim()).map(|i| f.kappa(i)).collect(),
        }
    }

    pub fn to_fan(&self) -> Result<NormalFan> {
        check_columns(&self.normals, self.n + 1, self.n, "normals")?;
        if self.kappa.len() != self.n + 1 {
            return Err(Error::DimensionMismatch { expected: self.n + 1, found: self.kappa.len() });
        }
        let normals: Vec<DVector<f64>> = self.normals.iter().map(|k| DVector::from_column_slice(k)).collect();
        NormalFan::new(&normals, &self.kappa)
    }
}

/// Either field may be given; when both are present `barycentric` is used,
/// since it determines the points exactly.
#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContactSetFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub barycentric: Option<Vec<Vec<f64>>>,
}

impl ContactSetFile {
    pub fn from_contacts(c: &ContactSet) -> Self {
        let lambda = c.barycentric();
        Self {
            points: Some(c.points().iter().map(|p| p.iter().copied().collect()).collect()),
            barycentric: Some(lambda.column_iter().map(|col| col.iter().copied().collect()).collect()),
        }
    }

    pub fn to_contacts(&self, simplex: &Simplex, tol: &Tolerances) -> Result<ContactSet> {
        let n = simplex.dim();
        match (&self.barycentric, &self.points) {
            (Some(columns), _) => {
                check_columns(columns, n + 1, n + 1, "barycentric")?;
                let lambda = DMatrix::from_fn(n + 1, n + 1, |i, j| columns[j][i]);
                ContactSet::from_barycentric(simplex, &lambda, tol)
            }
            (None, Some(points)) => {
                check_columns(points, n + 1, n, "points")?;
                let points: Vec<DVector<f64>> = points.iter().map(|p| DVector::from_column_slice(p)).collect();
                ContactSet::from_points(simplex, &points, tol)
            }
            (None, None) => Err(Error::BadInput("contact file needs \"points\" or \"barycentric\"".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, SerializeDerive, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffsFile {
    pub coeffs: Vec<DisplacementCoeff>,
}

fn check_columns(columns: &[Vec<f64>], count: usize, len: usize, what: &str) -> Result<()> {
    if columns.len() != count {
        return Err(Error::BadInput(format!("{what}: expected {count} entries, found {}", columns.len())));
    }
    for (j, c) in columns.iter().enumerate() {
        if c.len() != len {
            return Err(Error::BadInput(format!("{what}[{j}]: expected length {len}, found {}", c.len())));
        }
        if c.iter().any(|x| !x.is_finite()) {
            return Err(Error::BadInput(format!("{what}[{j}]: non-finite value")));
        }
    }
    Ok(())
}

/// Pretty printer that writes every float as `d.ddddddddddddddddde±x`.
struct FixedDigits<'a> {
    inner: PrettyFormatter<'a>,
}

impl Formatter for FixedDigits<'_> {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        // -0 would print as "-0.0…e0"; normalize so output does not depend on it
        let value = if value == 0.0 { 0.0 } else { value };
        write!(writer, "{value:.16e}")
    }

    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_array(w)
    }

    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array(w)
    }

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_array_value(w)
    }

    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object(w)
    }

    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object(w)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.inner.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.inner.end_object_value(w)
    }
}

/// Pretty JSON with 17 significant digits per float and a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser =
        serde_json::Serializer::with_formatter(&mut out, FixedDigits { inner: PrettyFormatter::with_indent(b"  ") });
    value.serialize(&mut ser).map_err(|e| Error::Internal(e.to_string()))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::Internal(e.to_string()))
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    serde_json::from_str(text).map_err(|e| Error::BadInput(e.to_string()))
}

//! Decision boundaries: hyperplane classification, the isometry that maps a
//! boundary onto the first-coordinate zero plane, and the embedding that
//! turns an arbitrary discriminant column into such a boundary.

use serde::Serialize;

use crate::data::DataMatrix;
use crate::error::{Error, Result};

/// The boundary `{ x : normal . x = offset }` with the classification rule
/// `sign(normal . x - offset)`; exact ties classify as +1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hyperplane {
    normal: Vec<f64>,
    offset: f64,
}

impl Hyperplane {
    pub fn new(normal: Vec<f64>, offset: f64) -> Result<Self> {
        if normal.iter().any(|v| !v.is_finite()) || !offset.is_finite() {
            return Err(Error::input("hyperplane coefficients must be finite"));
        }
        let norm_sq: f64 = normal.iter().map(|v| v * v).sum();
        if norm_sq <= 0.0 {
            return Err(Error::input("hyperplane normal must be nonzero"));
        }
        Ok(Hyperplane { normal, offset })
    }

    pub fn dim(&self) -> usize {
        self.normal.len()
    }

    pub fn normal(&self) -> &[f64] {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    /// Side of the boundary: +1 or -1, with ties resolved to +1.
    pub fn classify(&self, x: &[f64]) -> Result<i8> {
        if x.len() != self.normal.len() {
            return Err(Error::input(format!(
                "point has dimension {}, hyperplane has {}",
                x.len(),
                self.normal.len()
            )));
        }
        let s: f64 = self.normal.iter().zip(x).map(|(h, v)| h * v).sum::<f64>() - self.offset;
        Ok(if s >= 0.0 { 1 } else { -1 })
    }

    /// Isometry T with `T(boundary) = {0} x R^(n-1)` and first coordinate of
    /// `T(x)` equal to the signed distance `(normal . x - offset) / |normal|`.
    ///
    /// Built from the Householder reflection mapping the unit normal onto the
    /// first basis vector, composed with a shift along that vector. When the
    /// normal already points along the first axis the rotation is the
    /// identity, so orthogonal coordinates pass through unchanged.
    pub fn canonicalize(&self) -> CanonicalTransform {
        let n = self.normal.len();
        let norm = self.normal.iter().map(|v| v * v).sum::<f64>().sqrt();
        let u: Vec<f64> = self.normal.iter().map(|v| v / norm).collect();

        let rest_sq: f64 = u[1..].iter().map(|v| v * v).sum();
        // v = u - e1, with the first component computed free of cancellation
        // when u is close to e1.
        let v0 = if u[0] >= 0.0 {
            -rest_sq / (1.0 + u[0])
        } else {
            u[0] - 1.0
        };
        let vnorm_sq = v0 * v0 + rest_sq;

        let mut rotation = vec![0.0; n * n];
        if vnorm_sq == 0.0 {
            for i in 0..n {
                rotation[i * n + i] = 1.0;
            }
        } else {
            let mut v = u;
            v[0] = v0;
            let scale = 2.0 / vnorm_sq;
            for i in 0..n {
                for j in 0..n {
                    let id = if i == j { 1.0 } else { 0.0 };
                    rotation[i * n + j] = id - scale * v[i] * v[j];
                }
            }
        }

        let mut shift = vec![0.0; n];
        shift[0] = self.offset / norm;
        CanonicalTransform {
            rotation,
            shift,
            dim: n,
        }
    }
}

/// Orthonormal rotation plus shift taking the ambient frame to the canonical
/// one where the boundary is the first-coordinate zero plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CanonicalTransform {
    rotation: Vec<f64>, // row-major dim x dim
    shift: Vec<f64>,
    dim: usize,
}

impl CanonicalTransform {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rotation(&self) -> &[f64] {
        &self.rotation
    }

    pub fn shift(&self) -> &[f64] {
        &self.shift
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::input(format!(
                "point has dimension {}, transform has {}",
                x.len(),
                self.dim
            )));
        }
        let n = self.dim;
        let mut out = vec![0.0; n];
        for (i, o) in out.iter_mut().enumerate() {
            let acc: f64 = self.rotation[i * n..(i + 1) * n]
                .iter()
                .zip(x)
                .map(|(r, v)| r * v)
                .sum();
            *o = acc - self.shift[i];
        }
        Ok(out)
    }

    pub fn apply_matrix(&self, data: &DataMatrix) -> Result<DataMatrix> {
        if data.cols() != self.dim {
            return Err(Error::input(format!(
                "data has {} columns, transform has dimension {}",
                data.cols(),
                self.dim
            )));
        }
        let mut values = Vec::with_capacity(data.rows() * data.cols());
        for row in data.iter_rows() {
            values.extend_from_slice(&self.apply(row)?);
        }
        DataMatrix::from_flat(values, data.rows(), data.cols())
    }
}

/// Lifts a discriminant column into an extra leading coordinate so that the
/// threshold rule `sign(f(x) - threshold)` becomes a hyperplane split of the
/// extended space. Returns the extended data and the boundary `e1 . y = 0`.
pub fn embed_discriminant(
    f_values: &[f64],
    threshold: f64,
    data: &DataMatrix,
) -> Result<(DataMatrix, Hyperplane)> {
    if f_values.len() != data.rows() {
        return Err(Error::input(format!(
            "discriminant column has {} entries for {} rows",
            f_values.len(),
            data.rows()
        )));
    }
    let cols = data.cols() + 1;
    let mut values = Vec::with_capacity(data.rows() * cols);
    for (f, row) in f_values.iter().zip(data.iter_rows()) {
        values.push(f - threshold);
        values.extend_from_slice(row);
    }
    let extended = DataMatrix::from_flat(values, data.rows(), cols)?;
    let mut normal = vec![0.0; cols];
    normal[0] = 1.0;
    Ok((extended, Hyperplane::new(normal, 0.0)?))
}

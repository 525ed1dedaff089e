//! Dense unit vectors and the handful of operations the learners need.
//!
//! A [`UnitVector`] stores only the contiguous window of coordinates that can
//! be nonzero. Standard basis vectors are one entry wide, and a vector
//! produced by combining two windows spans their hull. The aggregation trees
//! used by the dimension-coupling driver join neighbouring index ranges, so
//! with the standard basis every working vector stays as narrow as the
//! subtree it came from and a full run costs close to linear time in `d`.

use crate::error::{HdcError, Result};

/// Below this norm a vector is treated as zero.
pub const MIN_NORM: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq)]
pub struct UnitVector {
    dim: usize,
    offset: usize,
    values: Vec<f64>,
}

impl UnitVector {
    /// Scales `components` to unit Euclidean norm.
    pub fn normalize(components: Vec<f64>) -> Result<Self> {
        let dim = components.len();
        Self::from_window(dim, 0, components)
    }

    /// The `index`-th standard basis vector of `R^dim`.
    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(HdcError::param(
                "index",
                format!("basis index {index} out of range for dimension {dim}"),
            ));
        }
        Ok(UnitVector {
            dim,
            offset: index,
            values: vec![1.0],
        })
    }

    pub(crate) fn from_window(dim: usize, offset: usize, mut values: Vec<f64>) -> Result<Self> {
        debug_assert!(offset + values.len() <= dim);
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !norm.is_finite() || norm <= MIN_NORM {
            return Err(HdcError::Degenerate(format!(
                "cannot normalize a vector of norm {norm:e}"
            )));
        }
        values.iter_mut().for_each(|v| *v /= norm);

        let lead = values.iter().take_while(|v| **v == 0.0).count();
        let trail = values.iter().rev().take_while(|v| **v == 0.0).count();
        let kept = values.len() - lead - trail;
        values.truncate(lead + kept);
        values.drain(..lead);
        Ok(UnitVector {
            dim,
            offset: offset + lead,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coordinate `i`, zero outside the stored window.
    pub fn get(&self, i: usize) -> f64 {
        if i < self.offset {
            return 0.0;
        }
        self.values.get(i - self.offset).copied().unwrap_or(0.0)
    }

    /// Index range that may hold nonzero coordinates.
    pub fn support(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.values.len()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        out[self.support()].copy_from_slice(&self.values);
        out
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &UnitVector) -> Result<f64> {
        same_dim(self, other)?;
        Ok(self.dot_unchecked(other))
    }

    pub(crate) fn dot_unchecked(&self, other: &UnitVector) -> f64 {
        let lo = self.offset.max(other.offset);
        let hi = self.support().end.min(other.support().end);
        if lo >= hi {
            return 0.0;
        }
        let a = &self.values[lo - self.offset..hi - self.offset];
        let b = &other.values[lo - other.offset..hi - other.offset];
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    /// Inner product with a dense vector of the same dimension.
    pub fn dot_dense(&self, dense: &[f64]) -> Result<f64> {
        if dense.len() != self.dim {
            return Err(HdcError::DimensionMismatch {
                expected: self.dim,
                actual: dense.len(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(&dense[self.support()])
            .map(|(x, y)| x * y)
            .sum())
    }

    /// Normalized `a*u + b*v`.
    pub fn combine(a: f64, u: &UnitVector, b: f64, v: &UnitVector) -> Result<UnitVector> {
        same_dim(u, v)?;
        let lo = u.offset.min(v.offset);
        let hi = u.support().end.max(v.support().end);
        let mut values = vec![0.0; hi - lo];
        for (i, x) in u.values.iter().enumerate() {
            values[u.offset - lo + i] += a * x;
        }
        for (i, x) in v.values.iter().enumerate() {
            values[v.offset - lo + i] += b * x;
        }
        UnitVector::from_window(u.dim, lo, values)
    }
}

fn same_dim(a: &UnitVector, b: &UnitVector) -> Result<()> {
    if a.dim != b.dim {
        return Err(HdcError::DimensionMismatch {
            expected: a.dim,
            actual: b.dim,
        });
    }
    Ok(())
}

/// Euclidean distance `‖a − b‖`. No sign folding: `h` and `−h` are at
/// distance 2.
pub fn estimation_error(a: &UnitVector, b: &UnitVector) -> Result<f64> {
    same_dim(a, b)?;
    let lo = a.offset.min(b.offset);
    let hi = a.support().end.max(b.support().end);
    Ok((lo..hi)
        .map(|i| {
            let diff = a.get(i) - b.get(i);
            diff * diff
        })
        .sum::<f64>()
        .sqrt())
}

/// Normalized orthogonal projection of `h` onto `span{e1, e2}`.
pub fn project_normalized(h: &UnitVector, e1: &UnitVector, e2: &UnitVector) -> Result<UnitVector> {
    check_orthonormal(&[e1, e2], 1e-9)?;
    let c1 = h.dot(e1)?;
    let c2 = h.dot(e2)?;
    if c1.hypot(c2) <= 1e-12 {
        return Err(HdcError::Degenerate(
            "vector is orthogonal to the projection plane".into(),
        ));
    }
    UnitVector::combine(c1, e1, c2, e2)
}

/// Orthonormalizes `vectors` with modified Gram-Schmidt plus one
/// reorthogonalization pass.
pub fn gram_schmidt(vectors: &[Vec<f64>]) -> Result<Vec<UnitVector>> {
    let Some(dim) = vectors.first().map(Vec::len) else {
        return Ok(Vec::new());
    };
    let mut done: Vec<Vec<f64>> = Vec::with_capacity(vectors.len());
    for (k, v) in vectors.iter().enumerate() {
        if v.len() != dim {
            return Err(HdcError::DimensionMismatch {
                expected: dim,
                actual: v.len(),
            });
        }
        let original = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let mut w = v.clone();
        for _ in 0..2 {
            for q in &done {
                let c: f64 = w.iter().zip(q).map(|(a, b)| a * b).sum();
                w.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            }
        }
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if original <= MIN_NORM || norm <= 1e-9 * original {
            return Err(HdcError::Degenerate(format!(
                "vector {k} is linearly dependent on its predecessors"
            )));
        }
        w.iter_mut().for_each(|x| *x /= norm);
        done.push(w);
    }
    done.into_iter().map(UnitVector::normalize).collect()
}

/// Checks that every vector is unit and every pair is orthogonal within `tol`.
pub fn check_orthonormal(vectors: &[&UnitVector], tol: f64) -> Result<()> {
    for (i, a) in vectors.iter().enumerate() {
        if (a.norm() - 1.0).abs() > tol {
            return Err(HdcError::param(
                "basis",
                format!("vector {i} has norm {}", a.norm()),
            ));
        }
        for (j, b) in vectors.iter().enumerate().skip(i + 1) {
            let g = a.dot(b)?;
            if g.abs() > tol {
                return Err(HdcError::param(
                    "basis",
                    format!("vectors {i} and {j} are not orthogonal (inner product {g:e})"),
                ));
            }
        }
    }
    Ok(())
}

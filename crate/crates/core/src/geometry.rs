//! Spherical geometry primitives: unit vectors, angles, and the
//! sign-ambiguous distance used throughout phase retrieval.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Inner product of two equal-length slices.
pub fn dot(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter().zip(v).map(|(a, b)| a * b).sum()
}

/// Euclidean norm.
pub fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Euclidean distance.
pub fn dist(u: &[f64], v: &[f64]) -> f64 {
    debug_assert_eq!(u.len(), v.len());
    u.iter()
        .zip(v)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// The global sign convention: `sign(0) := +1`.
///
/// Keeps the measure-zero tie in the Kaczmarz update and in wedge membership
/// deterministic.
pub fn sign_pos(t: f64) -> f64 {
    if t >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// A vector of unit Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UnitVector {
    coords: Vec<f64>,
}

impl UnitVector {
    /// Normalizes `coords` to unit length.
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension("unit vector needs n >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        let nrm = norm(&coords);
        if nrm == 0.0 {
            return Err(Error::DegenerateRow);
        }
        let coords = coords.into_iter().map(|c| c / nrm).collect();
        Ok(Self { coords })
    }

    /// Accepts coordinates that are already unit length (within `1e-12`)
    /// without rescaling, so values loaded from a file are preserved bit
    /// for bit.
    pub fn from_unit_coords(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidDimension("unit vector needs n >= 1".into()));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        if (norm(&coords) - 1.0).abs() > 1e-12 {
            return Err(Error::DegenerateRow);
        }
        Ok(Self { coords })
    }

    /// The `i`-th standard basis vector in dimension `n`.
    pub fn basis(n: usize, i: usize) -> Self {
        assert!(i < n);
        let mut coords = vec![0.0; n];
        coords[i] = 1.0;
        Self { coords }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }

    pub fn dot(&self, v: &[f64]) -> f64 {
        dot(&self.coords, v)
    }
}

/// Uniform draw from the unit sphere `S^{n-1}`.
///
/// An i.i.d. standard normal vector normalized to unit length; the marginal
/// law is invariant under any fixed orthogonal transform.
pub fn sample_uniform_sphere(n: usize, rng: &mut Rng) -> Result<UnitVector> {
    if n == 0 {
        return Err(Error::InvalidDimension("sphere dimension n must be >= 1".into()));
    }
    loop {
        let coords: Vec<f64> = (0..n).map(|_| rng.standard_normal()).collect();
        // Resample on the (measure-zero) degenerate draw.
        if norm(&coords) > 0.0 {
            return UnitVector::new(coords);
        }
    }
}

/// Angle in `[0, pi]` between two unit vectors.
///
/// The inner product is clamped to `[-1, 1]` before `acos`, so rounding can
/// never produce NaN.
pub fn angle_between(u: &UnitVector, v: &UnitVector) -> f64 {
    dot(u.coords(), v.coords()).clamp(-1.0, 1.0).acos()
}

/// Angle between two arbitrary nonzero vectors.
pub fn angle_between_raw(u: &[f64], v: &[f64]) -> f64 {
    let denom = norm(u) * norm(v);
    (dot(u, v) / denom).clamp(-1.0, 1.0).acos()
}

/// Distance from `z` to the solution set `{x, -x}`:
/// `min(||z - x||, ||z + x||)`.
pub fn dist_to_sign_set(z: &[f64], x: &[f64]) -> Result<f64> {
    if z.len() != x.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: z.len() });
    }
    let (mut minus, mut plus) = (0.0f64, 0.0f64);
    for (zi, xi) in z.iter().zip(x) {
        minus += (zi - xi) * (zi - xi);
        plus += (zi + xi) * (zi + xi);
    }
    Ok(minus.min(plus).sqrt())
}

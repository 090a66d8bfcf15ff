use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of C^d stored as 2d real coordinates `(x_1, y_1, ..., x_d, y_d)`,
/// so the j-th complex coordinate is `x_j + i*y_j`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointCd {
    coords: Vec<f64>,
}

impl PointCd {
    pub fn new(coords: Vec<f64>) -> Result<PointCd> {
        if coords.is_empty() || coords.len() % 2 != 0 {
            return Err(Error::Geometry(format!(
                "a point of C^d needs an even, positive number of real coordinates (got {})",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::Geometry("point coordinates must be finite".into()));
        }
        Ok(PointCd { coords })
    }

    pub fn origin(d: usize) -> PointCd {
        PointCd { coords: vec![0.0; 2 * d] }
    }

    pub fn from_complex(parts: &[Complex64]) -> PointCd {
        let mut coords = Vec::with_capacity(2 * parts.len());
        for z in parts {
            coords.push(z.re);
            coords.push(z.im);
        }
        PointCd { coords }
    }

    /// Number of complex coordinates d.
    pub fn complex_dim(&self) -> usize {
        self.coords.len() / 2
    }

    /// Ambient real dimension 2d.
    pub fn real_dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The j-th complex coordinate (0-based).
    pub fn complex(&self, j: usize) -> Complex64 {
        Complex64::new(self.coords[2 * j], self.coords[2 * j + 1])
    }

    pub fn complex_coords(&self) -> Vec<Complex64> {
        (0..self.complex_dim()).map(|j| self.complex(j)).collect()
    }

    pub fn norm(&self) -> f64 {
        self.coords.iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn dist(&self, other: &PointCd) -> f64 {
        self.coords
            .iter()
            .zip(&other.coords)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Translate by a real offset vector of matching dimension.
    pub fn offset(&self, delta: &[f64]) -> PointCd {
        PointCd {
            coords: self
                .coords
                .iter()
                .zip(delta)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

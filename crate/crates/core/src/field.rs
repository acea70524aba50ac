//! Real-valued functions on the vertices of a graph approximation.

use crate::error::{Error, Result};
use crate::space::GraphApproximation;

#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Field { values }
    }

    pub fn zeros(n: usize) -> Self {
        Field { values: vec![0.0; n] }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        Field { values: vec![c; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// Validate against a graph: matching length, finite entries.
    pub fn check(&self, graph: &GraphApproximation) -> Result<()> {
        if self.len() != graph.vertex_count() {
            return Err(Error::Domain(format!(
                "field length {} does not match vertex count {}",
                self.len(),
                graph.vertex_count()
            )));
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain("field has non-finite entries".into()));
        }
        Ok(())
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |acc, v| acc.max(v.abs()))
    }

    pub fn scaled(&self, a: f64) -> Field {
        Field::new(self.values.iter().map(|v| a * v).collect())
    }

    pub fn add(&self, other: &Field) -> Field {
        Field::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        )
    }

    pub fn sub(&self, other: &Field) -> Field {
        Field::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        )
    }

    /// Pointwise (vertex-wise) product.
    pub fn mul_pointwise(&self, other: &Field) -> Field {
        Field::new(
            self.values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a * b)
                .collect(),
        )
    }
}

impl std::ops::Index<usize> for Field {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

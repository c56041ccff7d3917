use std::fmt;
use std::sync::{Arc, OnceLock};

use nalgebra::DMatrix;

use super::field::ScalarField;
use crate::expr::ExprError;
use crate::{Error, Result};

/// A differentiable map between charts, given by its component functions on
/// the source chart. Cloning is cheap.
#[derive(Clone)]
pub struct ChartMap {
    inner: Arc<Inner>,
}

struct Inner {
    source_dim: usize,
    components: Vec<ScalarField>,
    jacobian: OnceLock<Vec<Vec<ScalarField>>>,
}

impl ChartMap {
    pub fn new(source_dim: usize, components: Vec<ScalarField>) -> Result<ChartMap> {
        for c in &components {
            if c.dim() != source_dim {
                return Err(Error::DimensionMismatch {
                    expected: source_dim,
                    found: c.dim(),
                });
            }
        }
        Ok(ChartMap {
            inner: Arc::new(Inner {
                source_dim,
                components,
                jacobian: OnceLock::new(),
            }),
        })
    }

    pub fn identity(dim: usize) -> ChartMap {
        let components = (0..dim).map(|i| ScalarField::coordinate(dim, i)).collect();
        ChartMap::new(dim, components).expect("coordinate fields match")
    }

    /// The map `x ↦ (x_{indices[0]}, x_{indices[1]}, …)`.
    pub fn projection(source_dim: usize, indices: &[usize]) -> ChartMap {
        let components = indices
            .iter()
            .map(|&i| ScalarField::coordinate(source_dim, i))
            .collect();
        ChartMap::new(source_dim, components).expect("coordinate fields match")
    }

    pub fn source_dim(&self) -> usize {
        self.inner.source_dim
    }

    pub fn target_dim(&self) -> usize {
        self.inner.components.len()
    }

    pub fn components(&self) -> &[ScalarField] {
        &self.inner.components
    }

    pub fn apply(&self, point: &[f64]) -> Result<Vec<f64>, ExprError> {
        self.inner.components.iter().map(|c| c.eval(point)).collect()
    }

    /// `jacobian_fields()[m][j] = ∂φ_m/∂x_j`, built once.
    pub fn jacobian_fields(&self) -> &[Vec<ScalarField>] {
        self.inner.jacobian.get_or_init(|| {
            self.inner
                .components
                .iter()
                .map(|c| (0..self.inner.source_dim).map(|j| c.partial(j)).collect())
                .collect()
        })
    }

    pub fn jacobian(&self, point: &[f64]) -> Result<DMatrix<f64>, ExprError> {
        let fields = self.jacobian_fields();
        let mut m = DMatrix::zeros(self.target_dim(), self.source_dim());
        for (r, row) in fields.iter().enumerate() {
            for (c, f) in row.iter().enumerate() {
                m[(r, c)] = f.eval(point)?;
            }
        }
        Ok(m)
    }

    /// `self ∘ inner`.
    pub fn after(&self, inner: &ChartMap) -> Result<ChartMap> {
        if inner.target_dim() != self.source_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.source_dim(),
                found: inner.target_dim(),
            });
        }
        let components = self.components().iter().map(|c| c.compose(inner)).collect();
        ChartMap::new(inner.source_dim(), components)
    }

    /// Tangent map applied to `vector` at `point`.
    pub fn push_forward(&self, point: &[f64], vector: &[f64]) -> Result<Vec<f64>, ExprError> {
        let j = self.jacobian(point)?;
        Ok((0..self.target_dim())
            .map(|r| (0..self.source_dim()).map(|c| j[(r, c)] * vector[c]).sum())
            .collect())
    }
}

impl fmt::Debug for ChartMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartMap")
            .field("source_dim", &self.source_dim())
            .field("components", &self.inner.components)
            .finish()
    }
}

use std::sync::OnceLock;

use nalgebra::DMatrix;

use super::{Gauge, HdwSystem};
use crate::calculus::ScalarField;
use crate::{Error, Result};

/// Anything that yields a k-vector value at a point of an `N`-chart.
pub trait KVectorSource {
    fn k(&self) -> usize;
    fn dim(&self) -> usize;
    /// `out[κ]` is `X_κ(z)`.
    fn eval(&self, z: &[f64]) -> Result<Vec<Vec<f64>>>;

    /// `∂(X_κ)^m/∂z_j`. The default uses central differences with step
    /// `1e-6·max(1, |z_j|)`.
    fn jacobian(&self, z: &[f64], kappa: usize) -> Result<DMatrix<f64>> {
        let dim = self.dim();
        let mut jac = DMatrix::zeros(dim, dim);
        let mut probe = z.to_vec();
        for j in 0..dim {
            let h = 1e-6 * z[j].abs().max(1.0);
            probe[j] = z[j] + h;
            let plus = self.eval(&probe)?;
            probe[j] = z[j] - h;
            let minus = self.eval(&probe)?;
            probe[j] = z[j];
            for m in 0..dim {
                jac[(m, j)] = (plus[kappa][m] - minus[kappa][m]) / (2.0 * h);
            }
        }
        Ok(jac)
    }
}

/// A k-vector field given by component functions.
#[derive(Clone, Debug)]
pub struct KVectorField {
    dim: usize,
    components: Vec<Vec<ScalarField>>,
    jacobian: OnceLock<Vec<Vec<Vec<ScalarField>>>>,
}

impl KVectorField {
    pub fn new(components: Vec<Vec<ScalarField>>) -> Result<KVectorField> {
        let dim = components.first().map(Vec::len).unwrap_or(0);
        if components.is_empty() {
            return Err(Error::Invalid("a k-vector field needs k ≥ 1 components".into()));
        }
        for comps in &components {
            if comps.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: comps.len(),
                });
            }
            if let Some(bad) = comps.iter().find(|c| c.dim() != dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: bad.dim(),
                });
            }
        }
        Ok(KVectorField {
            dim,
            components,
            jacobian: OnceLock::new(),
        })
    }

    pub fn components(&self) -> &[Vec<ScalarField>] {
        &self.components
    }

    fn jacobian_fields(&self) -> &Vec<Vec<Vec<ScalarField>>> {
        self.jacobian.get_or_init(|| {
            self.components
                .iter()
                .map(|comps| {
                    comps
                        .iter()
                        .map(|c| (0..self.dim).map(|j| c.partial(j)).collect())
                        .collect()
                })
                .collect()
        })
    }
}

impl KVectorSource for KVectorField {
    fn k(&self) -> usize {
        self.components.len()
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, z: &[f64]) -> Result<Vec<Vec<f64>>> {
        self.components
            .iter()
            .map(|comps| comps.iter().map(|c| c.eval(z).map_err(Error::from)).collect())
            .collect()
    }

    fn jacobian(&self, z: &[f64], kappa: usize) -> Result<DMatrix<f64>> {
        let fields = &self.jacobian_fields()[kappa];
        let mut jac = DMatrix::zeros(self.dim, self.dim);
        for (m, row) in fields.iter().enumerate() {
            for (j, f) in row.iter().enumerate() {
                jac[(m, j)] = f.eval(z)?;
            }
        }
        Ok(jac)
    }
}

/// The pointwise solver viewed as a k-vector field.
#[derive(Clone, Copy, Debug)]
pub struct HdwField<'a> {
    system: &'a HdwSystem,
    gauge: Gauge,
}

impl<'a> HdwField<'a> {
    pub fn new(system: &'a HdwSystem, gauge: Gauge) -> HdwField<'a> {
        HdwField { system, gauge }
    }

    pub fn system(&self) -> &HdwSystem {
        self.system
    }
}

impl KVectorSource for HdwField<'_> {
    fn k(&self) -> usize {
        self.system.bundle().k()
    }

    fn dim(&self) -> usize {
        self.system.bundle().dim()
    }

    fn eval(&self, z: &[f64]) -> Result<Vec<Vec<f64>>> {
        Ok(self.system.solve(z, self.gauge)?.fields)
    }
}

/// `max_{κ<λ} ‖[X_κ, X_λ](z)‖_∞` with `[X, Y] = DY·X − DX·Y`.
pub fn integrability_defect(x: &dyn KVectorSource, z: &[f64]) -> Result<f64> {
    let k = x.k();
    if k < 2 {
        return Ok(0.0);
    }
    let values = x.eval(z)?;
    let jacobians = (0..k).map(|kappa| x.jacobian(z, kappa)).collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for a in 0..k {
        for b in a + 1..k {
            let xa = nalgebra::DVector::from_column_slice(&values[a]);
            let xb = nalgebra::DVector::from_column_slice(&values[b]);
            let bracket = &jacobians[b] * xa - &jacobians[a] * xb;
            worst = worst.max(bracket.amax());
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VariableScope;

    fn fields(exprs: &[&[&str]]) -> KVectorField {
        let s = VariableScope::new(["q1", "q2"]).unwrap().into_shared();
        KVectorField::new(
            exprs
                .iter()
                .map(|c| c.iter().map(|e| ScalarField::parse(e, &s).unwrap()).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn coordinate_fields_commute() {
        let x = fields(&[&["1", "0"], &["0", "1"]]);
        assert_eq!(integrability_defect(&x, &[0.3, 0.4]).unwrap(), 0.0);
    }

    #[test]
    fn shear_does_not_commute() {
        let x = fields(&[&["q2", "0"], &["0", "1"]]);
        for z in [[0.0, 0.0], [1.5, -2.0]] {
            assert!((integrability_defect(&x, &z).unwrap() - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn finite_difference_jacobian_default() {
        struct Wrapped(KVectorField);
        impl KVectorSource for Wrapped {
            fn k(&self) -> usize {
                self.0.k()
            }
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn eval(&self, z: &[f64]) -> Result<Vec<Vec<f64>>> {
                self.0.eval(z)
            }
        }
        let x = fields(&[&["q2", "sin(q1)"], &["0", "1"]]);
        let exact = x.jacobian(&[0.3, 0.4], 0).unwrap();
        let fd = Wrapped(x).jacobian(&[0.3, 0.4], 0).unwrap();
        assert!((exact - fd).amax() < 1e-9);
    }

    #[test]
    fn single_field_has_no_defect() {
        let x = fields(&[&["q2", "q1"]]);
        assert_eq!(integrability_defect(&x, &[1.0, 2.0]).unwrap(), 0.0);
    }
}

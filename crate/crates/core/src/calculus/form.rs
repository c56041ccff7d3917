use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::field::ScalarField;
use super::map::ChartMap;
use crate::expr::ExprError;
use crate::{Error, Result};

pub const MAX_DEGREE: usize = 3;

/// A differential form of degree 0..=3 on a chart of dimension `dim`.
///
/// Coefficients are stored on strictly increasing index tuples. The
/// determinant convention is used throughout, so `dx∧dy` evaluates to 1 on
/// `(e_x, e_y)` and wedge coefficients carry no factorial factors.
#[derive(Clone, Debug)]
pub struct FormField {
    degree: usize,
    dim: usize,
    coeffs: BTreeMap<Vec<usize>, ScalarField>,
}

/// Sorts `indices`, returning the permutation sign, or `None` on repeats.
pub(crate) fn sort_with_sign(indices: &[usize]) -> Option<(Vec<usize>, f64)> {
    let mut v = indices.to_vec();
    let mut sign = 1.0;
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    if v.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    Some((v, sign))
}

fn check_degree(degree: usize) -> Result<()> {
    if degree > MAX_DEGREE {
        return Err(Error::DegreeOverflow { degree });
    }
    Ok(())
}

impl FormField {
    pub fn zero(degree: usize, dim: usize) -> Result<FormField> {
        check_degree(degree)?;
        Ok(FormField {
            degree,
            dim,
            coeffs: BTreeMap::new(),
        })
    }

    pub fn scalar(f: ScalarField) -> FormField {
        let dim = f.dim();
        let mut form = FormField::zero(0, dim).expect("degree 0");
        form.accumulate(Vec::new(), f);
        form
    }

    /// `Σ_i coeffs[i] dx^i`.
    pub fn one_form(coeffs: Vec<ScalarField>) -> Result<FormField> {
        let dim = coeffs.len();
        FormField::from_terms(1, dim, coeffs.into_iter().enumerate().map(|(i, c)| (vec![i], c)))
    }

    /// Builds a form from `(indices, coefficient)` terms; indices may be in
    /// any order and are sorted with the matching sign. Terms with repeated
    /// indices vanish.
    pub fn from_terms(
        degree: usize,
        dim: usize,
        terms: impl IntoIterator<Item = (Vec<usize>, ScalarField)>,
    ) -> Result<FormField> {
        let mut form = FormField::zero(degree, dim)?;
        for (indices, c) in terms {
            if indices.len() != degree {
                return Err(Error::DimensionMismatch {
                    expected: degree,
                    found: indices.len(),
                });
            }
            if let Some(&bad) = indices.iter().find(|&&i| i >= dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: bad + 1,
                });
            }
            if c.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: c.dim(),
                });
            }
            if let Some((sorted, sign)) = sort_with_sign(&indices) {
                form.accumulate(sorted, c.scale(sign));
            }
        }
        Ok(form)
    }

    fn accumulate(&mut self, key: Vec<usize>, c: ScalarField) {
        if c.is_zero() {
            return;
        }
        let sum = match self.coeffs.remove(&key) {
            Some(existing) => existing + c,
            None => c,
        };
        if !sum.is_zero() {
            self.coeffs.insert(key, sum);
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Coefficient on a strictly increasing index tuple; `None` means zero.
    pub fn coefficient(&self, indices: &[usize]) -> Option<&ScalarField> {
        self.coeffs.get(indices)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<usize>, &ScalarField)> {
        self.coeffs.iter()
    }

    /// True when no coefficient survived structural pruning.
    pub fn is_structurally_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn check_same_shape(&self, other: &FormField) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        if self.degree != other.degree {
            return Err(Error::DimensionMismatch {
                expected: self.degree,
                found: other.degree,
            });
        }
        Ok(())
    }

    pub fn add(&self, other: &FormField) -> Result<FormField> {
        self.check_same_shape(other)?;
        let mut out = self.clone();
        for (k, c) in &other.coeffs {
            out.accumulate(k.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn sub(&self, other: &FormField) -> Result<FormField> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> FormField {
        self.map_coefficients(|c| -c)
    }

    /// Pointwise product with a function.
    pub fn times(&self, f: &ScalarField) -> Result<FormField> {
        if f.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: f.dim(),
            });
        }
        Ok(self.map_coefficients(|c| c * f))
    }

    fn map_coefficients(&self, f: impl Fn(&ScalarField) -> ScalarField) -> FormField {
        let mut out = FormField {
            degree: self.degree,
            dim: self.dim,
            coeffs: BTreeMap::new(),
        };
        for (k, c) in &self.coeffs {
            out.accumulate(k.clone(), f(c));
        }
        out
    }

    pub fn wedge(&self, other: &FormField) -> Result<FormField> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        let mut out = FormField::zero(self.degree + other.degree, self.dim)?;
        for (i, a) in &self.coeffs {
            for (j, b) in &other.coeffs {
                let joined: Vec<usize> = i.iter().chain(j).copied().collect();
                if let Some((key, sign)) = sort_with_sign(&joined) {
                    out.accumulate(key, (a * b).scale(sign));
                }
            }
        }
        Ok(out)
    }

    /// `(da)_K = Σ_m (−1)^m ∂_{K_m} a_{K∖K_m}`.
    pub fn exterior_derivative(&self) -> Result<FormField> {
        let mut out = FormField::zero(self.degree + 1, self.dim)?;
        for (indices, c) in &self.coeffs {
            for axis in 0..self.dim {
                if indices.contains(&axis) {
                    continue;
                }
                let partial = c.partial(axis);
                if partial.is_zero() {
                    continue;
                }
                let mut key = indices.clone();
                let position = key.partition_point(|&i| i < axis);
                key.insert(position, axis);
                let sign = if position % 2 == 0 { 1.0 } else { -1.0 };
                out.accumulate(key, partial.scale(sign));
            }
        }
        Ok(out)
    }

    /// Lichnerowicz–de Rham differential `d_θ a = da − θ∧a`.
    pub fn lichnerowicz(&self, theta: &FormField) -> Result<FormField> {
        if theta.degree != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: theta.degree,
            });
        }
        self.exterior_derivative()?.sub(&theta.wedge(self)?)
    }

    /// Contraction with a vector field given by its component functions.
    pub fn interior(&self, vector: &[ScalarField]) -> Result<FormField> {
        if self.degree == 0 {
            return Err(Error::DegreeUnderflow);
        }
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        let mut out = FormField::zero(self.degree - 1, self.dim)?;
        for (indices, c) in &self.coeffs {
            for (m, &i) in indices.iter().enumerate() {
                if vector[i].is_zero() {
                    continue;
                }
                let mut rest = indices.clone();
                rest.remove(m);
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                out.accumulate(rest, (&vector[i] * c).scale(sign));
            }
        }
        Ok(out)
    }

    /// `φ*a`, with `(φ*a)_J = Σ_I (a_I∘φ)·det(∂φ_I/∂x_J)`.
    pub fn pullback(&self, map: &ChartMap) -> Result<FormField> {
        if map.target_dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: map.target_dim(),
            });
        }
        let source = map.source_dim();
        let jac = map.jacobian_fields();
        let mut out = FormField::zero(self.degree, source)?;
        let targets = increasing_tuples(source, self.degree);
        for (indices, c) in &self.coeffs {
            let pulled = c.compose(map);
            for j in &targets {
                let det = minor_determinant(jac, indices, j, source);
                if det.is_zero() {
                    continue;
                }
                out.accumulate(j.clone(), &pulled * &det);
            }
        }
        Ok(out)
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<FormValue, ExprError> {
        let mut coeffs = BTreeMap::new();
        for (k, c) in &self.coeffs {
            coeffs.insert(k.clone(), c.eval(point)?);
        }
        Ok(FormValue {
            degree: self.degree,
            dim: self.dim,
            coeffs,
        })
    }
}

/// All strictly increasing tuples of length `len` from `0..dim`.
pub(crate) fn increasing_tuples(dim: usize, len: usize) -> Vec<Vec<usize>> {
    fn extend(start: usize, dim: usize, len: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if prefix.len() == len {
            out.push(prefix.clone());
            return;
        }
        for i in start..dim {
            prefix.push(i);
            extend(i + 1, dim, len, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    extend(0, dim, len, &mut Vec::new(), &mut out);
    out
}

/// Determinant of the minor with rows `rows` and columns `cols`, expanded
/// by the Leibniz formula (sizes up to 3).
pub(crate) fn minor_determinant(
    jac: &[Vec<ScalarField>],
    rows: &[usize],
    cols: &[usize],
    dim: usize,
) -> ScalarField {
    match rows.len() {
        0 => ScalarField::constant(dim, 1.0),
        1 => jac[rows[0]][cols[0]].clone(),
        _ => {
            // Laplace expansion along the first row.
            let mut total = ScalarField::zero(dim);
            for (m, &c) in cols.iter().enumerate() {
                let entry = &jac[rows[0]][c];
                if entry.is_zero() {
                    continue;
                }
                let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
                let sub = minor_determinant(jac, &rows[1..], &sub_cols, dim);
                if sub.is_zero() {
                    continue;
                }
                let term = entry * &sub;
                total = if m % 2 == 0 { total + term } else { total - term };
            }
            total
        }
    }
}

/// A form evaluated at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct FormValue {
    degree: usize,
    dim: usize,
    coeffs: BTreeMap<Vec<usize>, f64>,
}

impl FormValue {
    pub fn zero(degree: usize, dim: usize) -> FormValue {
        FormValue {
            degree,
            dim,
            coeffs: BTreeMap::new(),
        }
    }

    /// A 1-form value from its components.
    pub fn covector(components: &[f64]) -> FormValue {
        FormValue {
            degree: 1,
            dim: components.len(),
            coeffs: components
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0.0)
                .map(|(i, &c)| (vec![i], c))
                .collect(),
        }
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coefficient(&self, indices: &[usize]) -> f64 {
        match sort_with_sign(indices) {
            Some((key, sign)) => sign * self.coeffs.get(&key).copied().unwrap_or(0.0),
            None => 0.0,
        }
    }

    /// `a(v_1, …, v_p)` for `p = degree` vectors.
    pub fn apply(&self, vectors: &[&[f64]]) -> f64 {
        assert_eq!(vectors.len(), self.degree, "wrong number of arguments");
        self.coeffs
            .iter()
            .map(|(indices, c)| {
                let m: Vec<Vec<f64>> = vectors
                    .iter()
                    .map(|v| indices.iter().map(|&i| v[i]).collect())
                    .collect();
                c * small_det(&m)
            })
            .sum()
    }

    pub fn interior(&self, vector: &[f64]) -> Result<FormValue> {
        if self.degree == 0 {
            return Err(Error::DegreeUnderflow);
        }
        let mut coeffs: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (indices, c) in &self.coeffs {
            for (m, &i) in indices.iter().enumerate() {
                let mut rest = indices.clone();
                rest.remove(m);
                let sign = if m % 2 == 0 { 1.0 } else { -1.0 };
                *coeffs.entry(rest).or_insert(0.0) += sign * vector[i] * c;
            }
        }
        Ok(FormValue {
            degree: self.degree - 1,
            dim: self.dim,
            coeffs,
        })
    }

    /// Components of a 1-form.
    pub fn components(&self) -> Vec<f64> {
        assert_eq!(self.degree, 1, "components() needs a 1-form");
        let mut out = vec![0.0; self.dim];
        for (k, c) in &self.coeffs {
            out[k[0]] = *c;
        }
        out
    }

    /// Antisymmetric coefficient matrix `A_ij = a(e_i, e_j)` of a 2-form.
    pub fn matrix(&self) -> DMatrix<f64> {
        assert_eq!(self.degree, 2, "matrix() needs a 2-form");
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (k, c) in &self.coeffs {
            m[(k[0], k[1])] = *c;
            m[(k[1], k[0])] = -*c;
        }
        m
    }

    /// Largest absolute canonical coefficient.
    pub fn norm(&self) -> f64 {
        self.coeffs.values().fold(0.0, |acc, c| acc.max(c.abs()))
    }

    pub fn sub(&self, other: &FormValue) -> FormValue {
        assert_eq!((self.degree, self.dim), (other.degree, other.dim));
        let mut coeffs = self.coeffs.clone();
        for (k, c) in &other.coeffs {
            *coeffs.entry(k.clone()).or_insert(0.0) -= c;
        }
        FormValue {
            degree: self.degree,
            dim: self.dim,
            coeffs,
        }
    }
}

fn small_det(m: &[Vec<f64>]) -> f64 {
    match m.len() {
        0 => 1.0,
        1 => m[0][0],
        2 => m[0][0] * m[1][1] - m[0][1] * m[1][0],
        _ => (0..m.len())
            .map(|c| {
                let sub: Vec<Vec<f64>> = m[1..]
                    .iter()
                    .map(|row| row.iter().enumerate().filter(|(j, _)| *j != c).map(|(_, v)| *v).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * m[0][c] * small_det(&sub)
            })
            .sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::VariableScope;
    use std::sync::Arc;

    fn scope() -> Arc<VariableScope> {
        VariableScope::new(["x", "y", "px", "py"]).unwrap().into_shared()
    }

    fn f(s: &str) -> ScalarField {
        ScalarField::parse(s, &scope()).unwrap()
    }

    fn c(v: f64) -> ScalarField {
        ScalarField::constant(4, v)
    }

    #[test]
    fn sorting_sign() {
        assert_eq!(sort_with_sign(&[2, 0, 1]), Some((vec![0, 1, 2], 1.0)));
        assert_eq!(sort_with_sign(&[1, 0]), Some((vec![0, 1], -1.0)));
        assert_eq!(sort_with_sign(&[1, 1]), None);
    }

    #[test]
    fn wedge_orientation_and_antisymmetry() {
        let dx = FormField::one_form(vec![c(1.0), c(0.0), c(0.0), c(0.0)]).unwrap();
        let dy = FormField::one_form(vec![c(0.0), c(1.0), c(0.0), c(0.0)]).unwrap();
        let v = dx.wedge(&dy).unwrap().evaluate(&[0.0; 4]).unwrap();
        assert_eq!(v.apply(&[&[1.0, 0.0, 0.0, 0.0], &[0.0, 1.0, 0.0, 0.0]]), 1.0);
        let theta = FormField::one_form(vec![f("x*y"), f("px"), c(2.0), f("sin(py)")]).unwrap();
        let sq = theta.wedge(&theta).unwrap().evaluate(&[0.3, 0.2, 0.1, 0.7]).unwrap();
        assert_eq!(sq.norm(), 0.0);
    }

    #[test]
    fn degree_cap() {
        let one = FormField::one_form(vec![c(1.0), c(1.0), c(1.0), c(1.0)]).unwrap();
        let three = one.wedge(&one).unwrap().wedge(&one).unwrap();
        assert!(matches!(three.wedge(&one), Err(Error::DegreeOverflow { degree: 4 })));
        assert!(matches!(three.exterior_derivative(), Err(Error::DegreeOverflow { .. })));
    }

    #[test]
    fn derivative_of_canonical_one_form() {
        // d(px dx + py dy) = dpx∧dx + dpy∧dy
        let theta = FormField::one_form(vec![f("px"), f("py"), c(0.0), c(0.0)]).unwrap();
        let d = theta.exterior_derivative().unwrap().evaluate(&[0.5; 4]).unwrap();
        assert_eq!(d.coefficient(&[2, 0]), 1.0);
        assert_eq!(d.coefficient(&[3, 1]), 1.0);
        assert_eq!(d.coefficient(&[0, 1]), 0.0);
    }

    #[test]
    fn interior_picks_rows() {
        // ι_{∂x}(dx∧dpx) = dpx
        let form = FormField::from_terms(2, 4, [(vec![0, 2], c(1.0))]).unwrap();
        let v = form.evaluate(&[0.0; 4]).unwrap();
        let out = v.interior(&[1.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(out.components(), vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(v.interior(&[0.0; 4]).unwrap().norm(), 0.0);
        let scalar = FormValue::zero(0, 4);
        assert!(matches!(scalar.interior(&[0.0; 4]), Err(Error::DegreeUnderflow)));
    }

    #[test]
    fn symbolic_and_value_interior_agree() {
        let form = FormField::from_terms(2, 4, [(vec![0, 1], f("x*py")), (vec![1, 3], f("px"))]).unwrap();
        let vector = vec![f("y"), c(1.5), f("x"), c(-1.0)];
        let z = [0.3, 0.9, -0.5, 2.0];
        let vz: Vec<f64> = vector.iter().map(|v| v.eval(&z).unwrap()).collect();
        let symbolic = form.interior(&vector).unwrap().evaluate(&z).unwrap();
        let numeric = form.evaluate(&z).unwrap().interior(&vz).unwrap();
        assert!(symbolic.sub(&numeric).norm() < 1e-15);
    }

    #[test]
    fn pullback_along_identity() {
        let form = FormField::from_terms(2, 4, [(vec![0, 1], f("x*py")), (vec![2, 3], f("px^2"))]).unwrap();
        let pulled = form.pullback(&ChartMap::identity(4)).unwrap();
        let z = [0.3, 0.9, -0.5, 2.0];
        let diff = pulled.evaluate(&z).unwrap().sub(&form.evaluate(&z).unwrap());
        assert!(diff.norm() < 1e-15);
    }
}

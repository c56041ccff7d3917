//! The phase bundle `T*_{k,θ}Q` over a base chart and its structure checks.
//!
//! Coordinates are ordered `(q^1..q^n, p^1_1..p^1_n, …, p^k_1..p^k_n)`. The
//! structure forms are
//!
//! ```text
//! Θ^κ   = p^κ_i dq^i
//! Ω^κ   = dq^i ∧ dp^κ_i            (= −dΘ^κ)
//! Ω^κ_θ = Ω^κ + θ ∧ Θ^κ            (= −d_θ Θ^κ)
//! ```
//!
//! where `θ` is the pullback of the base Lee form `ϑ`.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::calculus::{ChartMap, FormField, FormValue, ScalarField};
use crate::expr::{ExprError, VariableScope};
use crate::linalg::{max_abs, min_norm_solve, rank};
use crate::region::{seeded_rng, Region};
use crate::{Error, Result};

/// Tolerance of the closedness precondition on `ϑ`.
pub const CLOSEDNESS_TOL: f64 = 1e-8;
const CLOSEDNESS_SAMPLES: usize = 64;

/// Canonical base names `q1..qn`, with optional aliases.
pub fn base_scope(n: usize, aliases: Option<&[String]>) -> Result<Arc<VariableScope>> {
    let mut scope = VariableScope::new((1..=n).map(|i| format!("q{i}")))?;
    if let Some(names) = aliases {
        check_alias_count(n, names)?;
        for (i, name) in names.iter().enumerate() {
            if name != &format!("q{}", i + 1) {
                scope = scope.with_alias(name.clone(), i)?;
            }
        }
    }
    Ok(scope.into_shared())
}

fn check_alias_count(n: usize, names: &[String]) -> Result<()> {
    if names.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: names.len(),
        });
    }
    Ok(())
}

/// Canonical phase names `q1..qn, p_1_1..p_k_n`. With base aliases
/// (say `x, y`) the momenta are also reachable as `p1_x`, and as `px` when
/// `k = 1`.
pub fn phase_scope(n: usize, k: usize, aliases: Option<&[String]>) -> Result<Arc<VariableScope>> {
    let names = (1..=n)
        .map(|i| format!("q{i}"))
        .chain((1..=k).flat_map(|kappa| (1..=n).map(move |i| format!("p_{kappa}_{i}"))));
    let mut scope = VariableScope::new(names)?;
    if let Some(base) = aliases {
        check_alias_count(n, base)?;
        for (i, name) in base.iter().enumerate() {
            if name != &format!("q{}", i + 1) {
                scope = scope.with_alias(name.clone(), i)?;
            }
            for kappa in 0..k {
                let index = n + kappa * n + i;
                scope = scope.with_alias(format!("p{}_{name}", kappa + 1), index)?;
                if k == 1 {
                    scope = scope.with_alias(format!("p{name}"), index)?;
                }
            }
        }
    }
    Ok(scope.into_shared())
}

/// The chart model of the phase bundle.
#[derive(Clone, Debug)]
pub struct PhaseBundle {
    n: usize,
    k: usize,
    base_scope: Arc<VariableScope>,
    scope: Arc<VariableScope>,
    domain: Region,
    vartheta: FormField,
    theta: FormField,
    projection: ChartMap,
    canonical: Vec<FormField>,
    omega: Vec<FormField>,
    omega_theta: Vec<FormField>,
}

impl PhaseBundle {
    /// Builds the bundle after checking `dϑ ≈ 0` at seeded domain samples.
    pub fn build(
        n: usize,
        k: usize,
        vartheta: FormField,
        domain: Region,
        aliases: Option<&[String]>,
    ) -> Result<PhaseBundle> {
        if n == 0 || k == 0 {
            return Err(Error::Invalid("n and k must be positive".into()));
        }
        if vartheta.degree() != 1 || vartheta.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: vartheta.dim(),
            });
        }
        if domain.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: domain.dim(),
            });
        }
        check_closed(&vartheta, &domain)?;

        let dim = n + n * k;
        let base_scope = base_scope(n, aliases)?;
        let scope = phase_scope(n, k, aliases)?;
        let projection = ChartMap::projection(dim, &(0..n).collect::<Vec<_>>());
        let theta = vartheta.pullback(&projection)?;

        let mut canonical = Vec::with_capacity(k);
        let mut omega = Vec::with_capacity(k);
        let mut omega_theta = Vec::with_capacity(k);
        for kappa in 0..k {
            let p = |i: usize| n + kappa * n + i;
            let big_theta = FormField::from_terms(
                1,
                dim,
                (0..n).map(|i| (vec![i], ScalarField::coordinate(dim, p(i)))),
            )?;
            let darboux = FormField::from_terms(
                2,
                dim,
                (0..n).map(|i| (vec![i, p(i)], ScalarField::constant(dim, 1.0))),
            )?;
            omega_theta.push(darboux.add(&theta.wedge(&big_theta)?)?);
            canonical.push(big_theta);
            omega.push(darboux);
        }
        Ok(PhaseBundle {
            n,
            k,
            base_scope,
            scope,
            domain,
            vartheta,
            theta,
            projection,
            canonical,
            omega,
            omega_theta,
        })
    }

    /// The k-symplectic bundle with `ϑ = 0`.
    pub fn darboux(n: usize, k: usize, domain: Region) -> Result<PhaseBundle> {
        let vartheta = FormField::zero(1, n)?;
        PhaseBundle::build(n, k, vartheta, domain, None)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Total dimension `n + n·k`.
    pub fn dim(&self) -> usize {
        self.n + self.n * self.k
    }

    pub fn base_scope(&self) -> &Arc<VariableScope> {
        &self.base_scope
    }

    pub fn scope(&self) -> &Arc<VariableScope> {
        &self.scope
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn vartheta(&self) -> &FormField {
        &self.vartheta
    }

    pub fn theta(&self) -> &FormField {
        &self.theta
    }

    /// The bundle projection onto the base chart.
    pub fn projection(&self) -> &ChartMap {
        &self.projection
    }

    pub fn canonical(&self, kappa: usize) -> &FormField {
        &self.canonical[kappa]
    }

    pub fn omega(&self, kappa: usize) -> &FormField {
        &self.omega[kappa]
    }

    pub fn omega_theta(&self, kappa: usize) -> &FormField {
        &self.omega_theta[kappa]
    }

    pub fn omega_thetas(&self) -> &[FormField] {
        &self.omega_theta
    }

    /// Index of `p^κ_i` (0-based `kappa`, `i`).
    pub fn momentum_index(&self, kappa: usize, i: usize) -> usize {
        self.n + kappa * self.n + i
    }

    /// Unit vectors spanning the vertical distribution.
    pub fn vertical_basis(&self) -> Vec<Vec<f64>> {
        (self.n..self.dim())
            .map(|j| {
                let mut v = vec![0.0; self.dim()];
                v[j] = 1.0;
                v
            })
            .collect()
    }

    /// Whether the base part of `z` lies in the domain.
    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim() && self.domain.contains(&z[..self.n]) && z[self.n..].iter().all(|x| x.is_finite())
    }

    /// A base field viewed on the phase chart; phase fields pass through.
    pub fn lift_base_field(&self, f: &ScalarField) -> Result<ScalarField> {
        if f.dim() == self.dim() {
            Ok(f.clone())
        } else if f.dim() == self.n {
            Ok(f.compose(&self.projection))
        } else {
            Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: f.dim(),
            })
        }
    }

    /// Replaces one structure form. Meant for negative tests of the checks.
    pub fn with_omega_theta(mut self, kappa: usize, form: FormField) -> Result<PhaseBundle> {
        if form.degree() != 2 || form.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: form.dim(),
            });
        }
        self.omega_theta[kappa] = form;
        Ok(self)
    }

    /// Antisymmetric coefficient matrices of every `Ω^κ_θ` at `z`.
    pub fn omega_theta_matrices(&self, z: &[f64]) -> Result<Vec<DMatrix<f64>>, ExprError> {
        self.omega_theta
            .iter()
            .map(|w| w.evaluate(z).map(|v| v.matrix()))
            .collect()
    }

    /// Checks the three structure axioms at `points`.
    pub fn verify_structure(&self, points: &[Vec<f64>], tol: f64) -> Result<StructureReport> {
        let dim = self.dim();
        let mut axiom_forms = Vec::with_capacity(self.k);
        for w in &self.omega_theta {
            axiom_forms.push(w.exterior_derivative()?.sub(&self.theta.wedge(w)?)?);
        }
        let momenta: Vec<usize> = (self.n..dim).collect();

        let mut report = StructureReport {
            n: self.n,
            k: self.k,
            points: points.len(),
            tolerance: tol,
            closure: 0.0,
            worst_closure_point: None,
            stacked_kernel_dim: 0,
            isotropy: 0.0,
            single_kernel_dims: [usize::MAX, 0],
            expected_single_kernel_dim: self.n * (self.k - 1),
            printed_formula_residual: 0.0,
            factor_of_two: false,
            passed: false,
        };
        let mut doubled_residual: f64 = 0.0;
        let mut halved_residual: f64 = 0.0;
        for z in points {
            let mut stacked = DMatrix::zeros(self.k * dim, dim);
            for (kappa, form) in axiom_forms.iter().enumerate() {
                let r = form.evaluate(z)?.norm();
                if r > report.closure {
                    report.closure = r;
                    report.worst_closure_point = Some(z.clone());
                }
                let value = self.omega_theta[kappa].evaluate(z)?;
                let a = value.matrix();
                stacked.view_mut((kappa * dim, 0), (dim, dim)).copy_from(&a);
                let kernel = dim - rank(&a);
                report.single_kernel_dims[0] = report.single_kernel_dims[0].min(kernel);
                report.single_kernel_dims[1] = report.single_kernel_dims[1].max(kernel);
                for &i in &momenta {
                    for &j in &momenta {
                        report.isotropy = report.isotropy.max(a[(i, j)].abs());
                    }
                }
                let (plain, doubled, halved) = self.printed_formula_gaps(kappa, &value, z)?;
                report.printed_formula_residual = report.printed_formula_residual.max(plain);
                doubled_residual = doubled_residual.max(doubled);
                halved_residual = halved_residual.max(halved);
            }
            report.stacked_kernel_dim = report.stacked_kernel_dim.max(dim - rank(&stacked));
        }
        if points.is_empty() {
            report.single_kernel_dims = [0, 0];
        }
        report.factor_of_two = report.printed_formula_residual > tol && doubled_residual.min(halved_residual) <= tol;
        report.passed = report.closure < tol && report.stacked_kernel_dim == 0 && report.isotropy < tol;
        Ok(report)
    }

    /// Compares the `dq∧dq` block of `Ω^κ_θ` with the coefficient pattern
    /// `ϑ_i p^κ_j dq^i∧dq^j` summed over all `i, j`, and with that pattern
    /// doubled or halved.
    fn printed_formula_gaps(&self, kappa: usize, value: &FormValue, z: &[f64]) -> Result<(f64, f64, f64)> {
        let vartheta = self.vartheta.evaluate(&z[..self.n])?.components();
        let (mut plain, mut doubled, mut halved): (f64, f64, f64) = (0.0, 0.0, 0.0);
        for i in 0..self.n {
            for j in i + 1..self.n {
                let p = |m: usize| z[self.momentum_index(kappa, m)];
                let printed = vartheta[i] * p(j) - vartheta[j] * p(i);
                let computed = value.coefficient(&[i, j]);
                plain = plain.max((computed - printed).abs());
                doubled = doubled.max((computed - 2.0 * printed).abs());
                halved = halved.max((computed - 0.5 * printed).abs());
            }
        }
        Ok((plain, doubled, halved))
    }

    /// `Ω^κ_α = e^{−σ} Ω^κ_θ`; a base function `σ` is lifted first.
    pub fn conformal_rescale(&self, sigma: &ScalarField) -> Result<Vec<FormField>> {
        let factor = (-self.lift_base_field(sigma)?).exp();
        self.omega_theta.iter().map(|w| w.times(&factor)).collect()
    }

    /// Per-component minimum-norm solutions of `ι_{Z_κ}Ω^κ_θ = Υ^κ` at `z`.
    pub fn liouville_fields(&self, upsilon: &[FormField], z: &[f64], tol: f64) -> Result<LiouvilleField> {
        if upsilon.len() != self.k {
            return Err(Error::DimensionMismatch {
                expected: self.k,
                found: upsilon.len(),
            });
        }
        let mut out = LiouvilleField {
            fields: Vec::with_capacity(self.k),
            residuals: Vec::with_capacity(self.k),
            contractions: Vec::with_capacity(self.k),
        };
        for (kappa, u) in upsilon.iter().enumerate() {
            if u.degree() != 1 || u.dim() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    found: u.dim(),
                });
            }
            let a = self.omega_theta[kappa].evaluate(z)?.matrix();
            let rhs = nalgebra::DVector::from_vec(u.evaluate(z)?.components());
            let at = a.transpose();
            let sol = min_norm_solve(&at, &rhs);
            let residual = (&at * &sol - &rhs).amax();
            if residual > tol {
                return Err(Error::Inconsistent {
                    component: kappa,
                    residual,
                });
            }
            let exactness = self.omega_theta[kappa]
                .sub(&u.lichnerowicz(&self.theta)?)?
                .evaluate(z)?
                .norm();
            let contraction = (exactness <= tol).then(|| sol.dot(&rhs));
            out.fields.push(sol.iter().copied().collect());
            out.residuals.push(residual);
            out.contractions.push(contraction);
        }
        Ok(out)
    }
}

fn check_closed(vartheta: &FormField, domain: &Region) -> Result<()> {
    let d = vartheta.exterior_derivative()?;
    if d.is_structurally_zero() {
        return Ok(());
    }
    let mut rng = seeded_rng(0);
    let mut worst = (0.0, Vec::new());
    for q in domain.sample_many(CLOSEDNESS_SAMPLES, &mut rng) {
        let r = d.evaluate(&q)?.norm();
        if r > worst.0 {
            worst = (r, q);
        }
    }
    if worst.0 > CLOSEDNESS_TOL {
        return Err(Error::NotClosed {
            residual: worst.0,
            point: worst.1,
        });
    }
    Ok(())
}

/// Outcome of [`PhaseBundle::verify_structure`].
#[derive(Clone, Debug, Serialize)]
pub struct StructureReport {
    pub n: usize,
    pub k: usize,
    pub points: usize,
    pub tolerance: f64,
    /// Closure: max `‖dΩ^κ_θ − θ∧Ω^κ_θ‖`.
    pub closure: f64,
    pub worst_closure_point: Option<Vec<f64>>,
    /// Nondegeneracy: max dimension of `∩_κ ker Ω^κ_θ`.
    pub stacked_kernel_dim: usize,
    /// Isotropy: max `|Ω^κ_θ(v, w)|` over vertical basis vectors.
    pub isotropy: f64,
    /// Min and max kernel dimension of a single `Ω^κ_θ`.
    pub single_kernel_dims: [usize; 2],
    pub expected_single_kernel_dim: usize,
    /// Max gap between the `dq∧dq` block and `Σ_{i,j} ϑ_i p^κ_j dq^i∧dq^j`.
    pub printed_formula_residual: f64,
    /// Set when that gap disappears after doubling or halving the pattern.
    pub factor_of_two: bool,
    pub passed: bool,
}

/// Outcome of [`PhaseBundle::liouville_fields`].
#[derive(Clone, Debug)]
pub struct LiouvilleField {
    pub fields: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    /// `ι_{Z_κ}Υ^κ`, present when `Ω^κ_θ = d_θΥ^κ` holds at the point.
    pub contractions: Vec<Option<f64>>,
}

impl LiouvilleField {
    pub fn max_residual(&self) -> f64 {
        max_abs(&self.residuals)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plane() -> Region {
        Region::Box {
            lo: vec![-2.0, -2.0],
            hi: vec![2.0, 2.0],
            exclude_radius: 0.1,
        }
    }

    fn lee(n_aliases: &[String]) -> FormField {
        let s = base_scope(2, Some(n_aliases)).unwrap();
        FormField::one_form(vec![
            ScalarField::parse("-2*y/(x^2+y^2)", &s).unwrap(),
            ScalarField::parse("2*x/(x^2+y^2)", &s).unwrap(),
        ])
        .unwrap()
    }

    fn xy() -> Vec<String> {
        vec!["x".into(), "y".into()]
    }

    #[test]
    fn names_and_aliases() {
        let s = phase_scope(2, 2, Some(&xy())).unwrap();
        assert_eq!(s.names(), ["q1", "q2", "p_1_1", "p_1_2", "p_2_1", "p_2_2"]);
        assert_eq!(s.index_of("p2_y"), Some(5));
        assert_eq!(s.index_of("px"), None);
        let s1 = phase_scope(2, 1, Some(&xy())).unwrap();
        assert_eq!(s1.index_of("py"), Some(3));
    }

    #[test]
    fn dimensions() {
        let b = PhaseBundle::build(2, 3, lee(&xy()), plane(), Some(&xy())).unwrap();
        assert_eq!(b.dim(), 8);
        assert_eq!(b.omega_thetas().len(), 3);
        assert_eq!(b.vertical_basis().len(), 6);
    }

    #[test]
    fn omega_theta_mixed_coefficient() {
        let b = PhaseBundle::build(2, 1, lee(&xy()), plane(), Some(&xy())).unwrap();
        let v = b.omega_theta(0).evaluate(&[1.0, 0.0, 1.0, 0.0]).unwrap();
        assert!((v.coefficient(&[0, 1]) + 2.0).abs() < 1e-15);
        let theta = b.theta().evaluate(&[1.0, 0.0, 1.0, 0.0]).unwrap().components();
        assert_eq!(theta[2..], [0.0, 0.0]);
    }

    #[test]
    fn rejects_non_closed_lee_form() {
        let s = base_scope(2, Some(&xy())).unwrap();
        let bad = FormField::one_form(vec![
            ScalarField::parse("y", &s).unwrap(),
            ScalarField::constant(2, 0.0),
        ])
        .unwrap();
        let err = PhaseBundle::build(2, 1, bad, plane(), Some(&xy())).unwrap_err();
        assert!(matches!(err, Error::NotClosed { .. }));
    }

    #[test]
    fn darboux_structure_is_exact() {
        let b = PhaseBundle::darboux(2, 2, plane()).unwrap();
        for w in b.omega_thetas() {
            assert!(w.exterior_derivative().unwrap().is_structurally_zero());
        }
        let report = b.verify_structure(&[vec![0.5, 0.5, 1.0, 2.0, 3.0, 4.0]], 1e-12).unwrap();
        assert_eq!(report.closure, 0.0);
        assert!(report.passed);
        assert_eq!(report.single_kernel_dims, [2, 2]);
    }

    #[test]
    fn zeroed_form_breaks_nondegeneracy() {
        let b = PhaseBundle::darboux(2, 1, plane())
            .unwrap()
            .with_omega_theta(0, FormField::zero(2, 4).unwrap())
            .unwrap();
        let report = b.verify_structure(&[vec![0.5, 0.5, 1.0, 2.0]], 1e-8).unwrap();
        assert!(report.stacked_kernel_dim >= 2);
        assert!(!report.passed);
    }

    #[test]
    fn liouville_for_minus_canonical() {
        let b = PhaseBundle::darboux(2, 1, plane()).unwrap();
        let upsilon = vec![b.canonical(0).neg()];
        let z = [1.0, 0.0, 1.0, 0.0];
        let out = b.liouville_fields(&upsilon, &z, 1e-10).unwrap();
        for (got, want) in out.fields[0].iter().zip([0.0, 0.0, 1.0, 0.0]) {
            assert!((got - want).abs() < 1e-12, "{:?}", out.fields[0]);
        }
        assert!(out.contractions[0].unwrap().abs() < 1e-12);
    }
}

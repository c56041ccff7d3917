//! Sections of the phase bundle and the Hamilton–Jacobi equivalence.
//!
//! A section `γ = (γ¹, …, γᵏ)` is a family of one-forms on the base. It is
//! a solution of the Hamilton–Jacobi problem for an HDW field `X` when any
//! of the following equivalent conditions holds:
//!
//! 1. `γ∘σ` is an integral section of `X` whenever `σ` is one of `X^γ`;
//! 2. `X∘γ − T^kγ(X^γ)` lies in the kernel of `♭`;
//! 3. `d_ϑ(H∘γ) = 0`.
//!
//! [`verify_hj_theorem`] measures all three and checks that they agree.

use nalgebra::DVector;
use serde::Serialize;

use crate::calculus::{ChartMap, FormField, ScalarField};
use crate::dynamics::{
    assemble_flat, fd_derivative, integrability_defect, sweep, GridAxis, HdwSystem, KVectorSource, MultiTimeGrid,
};
use crate::linalg::max_abs;
use crate::region::Region;
use crate::structure::PhaseBundle;
use crate::{Error, Result};

/// `k` one-forms on the base and the induced map `q ↦ (q, γ¹(q), …, γᵏ(q))`.
#[derive(Clone, Debug)]
pub struct Section {
    components: Vec<FormField>,
    map: ChartMap,
}

impl Section {
    pub fn new(components: Vec<FormField>) -> Result<Section> {
        let Some(first) = components.first() else {
            return Err(Error::Invalid("a section needs at least one component".into()));
        };
        let n = first.dim();
        for c in &components {
            if c.degree() != 1 || c.dim() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.dim(),
                });
            }
        }
        let mut map = (0..n).map(|i| ScalarField::coordinate(n, i)).collect::<Vec<_>>();
        for c in &components {
            for i in 0..n {
                map.push(c.coefficient(&[i]).cloned().unwrap_or_else(|| ScalarField::zero(n)));
            }
        }
        let map = ChartMap::new(n, map)?;
        Ok(Section { components, map })
    }

    /// Parses `exprs[κ][i]`, the `dq^i` coefficient of `γ^κ`, over the
    /// base variables of `bundle`.
    pub fn parse<S: AsRef<str>>(bundle: &PhaseBundle, exprs: &[Vec<S>]) -> Result<Section> {
        if exprs.len() != bundle.k() {
            return Err(Error::DimensionMismatch {
                expected: bundle.k(),
                found: exprs.len(),
            });
        }
        let components = exprs
            .iter()
            .map(|row| {
                if row.len() != bundle.n() {
                    return Err(Error::DimensionMismatch {
                        expected: bundle.n(),
                        found: row.len(),
                    });
                }
                let coeffs = row
                    .iter()
                    .map(|e| ScalarField::parse(e.as_ref(), bundle.base_scope()).map_err(Error::from))
                    .collect::<Result<Vec<_>>>()?;
                FormField::one_form(coeffs)
            })
            .collect::<Result<Vec<_>>>()?;
        Section::new(components)
    }

    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn n(&self) -> usize {
        self.map.source_dim()
    }

    pub fn components(&self) -> &[FormField] {
        &self.components
    }

    /// The induced map from the base into the phase chart.
    pub fn map(&self) -> &ChartMap {
        &self.map
    }

    pub fn eval(&self, q: &[f64]) -> Result<Vec<f64>> {
        Ok(self.map.apply(q)?)
    }

    fn check(&self, bundle: &PhaseBundle) -> Result<()> {
        if self.n() != bundle.n() || self.k() != bundle.k() {
            return Err(Error::Invalid(format!(
                "section has n = {}, k = {} but the bundle has n = {}, k = {}",
                self.n(),
                self.k(),
                bundle.n(),
                bundle.k()
            )));
        }
        Ok(())
    }
}

/// Max over κ and `points` of `‖d_ϑγ^κ‖`.
pub fn section_closedness(bundle: &PhaseBundle, gamma: &Section, points: &[Vec<f64>]) -> Result<f64> {
    gamma.check(bundle)?;
    let forms = gamma
        .components
        .iter()
        .map(|c| c.lichnerowicz(bundle.vartheta()))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for q in points {
        for f in &forms {
            worst = worst.max(f.evaluate(q)?.norm());
        }
    }
    Ok(worst)
}

/// `X^γ(q)`: the base components of every `X_κ(γ(q))`.
pub fn project_field(x: &dyn KVectorSource, gamma: &Section, q: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = gamma.n();
    let z = gamma.eval(q)?;
    Ok(x.eval(&z)?.into_iter().map(|mut v| {
        v.truncate(n);
        v
    })
    .collect())
}

/// `X^γ` as a k-vector field on the base.
pub struct ProjectedField<'a> {
    x: &'a dyn KVectorSource,
    gamma: &'a Section,
}

impl<'a> ProjectedField<'a> {
    pub fn new(x: &'a dyn KVectorSource, gamma: &'a Section) -> ProjectedField<'a> {
        ProjectedField { x, gamma }
    }
}

impl KVectorSource for ProjectedField<'_> {
    fn k(&self) -> usize {
        self.x.k()
    }

    fn dim(&self) -> usize {
        self.gamma.n()
    }

    fn eval(&self, q: &[f64]) -> Result<Vec<Vec<f64>>> {
        project_field(self.x, self.gamma, q)
    }
}

/// Output of [`hj_residual`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HjResidual {
    /// Max `‖d_ϑ(H∘γ)‖`.
    pub residual: f64,
    /// Max `‖d_ϑ(H∘γ) − γ*(d_θH)‖`.
    pub identity_gap: f64,
}

/// Max over `points` of `‖d(H∘γ) − (H∘γ)ϑ‖`, with a cross-check against
/// the pullback `γ*(d_θH)`.
pub fn hj_residual(system: &HdwSystem, gamma: &Section, points: &[Vec<f64>]) -> Result<HjResidual> {
    let bundle = system.bundle();
    gamma.check(bundle)?;
    let along = system.hamiltonian().compose(gamma.map());
    let direct = FormField::scalar(along).lichnerowicz(bundle.vartheta())?;
    let pulled = system.rhs_form().pullback(gamma.map())?;
    let mut out = HjResidual {
        residual: 0.0,
        identity_gap: 0.0,
    };
    for q in points {
        let a = direct.evaluate(q)?;
        let b = pulled.evaluate(q)?;
        out.residual = out.residual.max(a.norm());
        out.identity_gap = out.identity_gap.max(a.sub(&b).norm());
    }
    Ok(out)
}

/// Output of [`relatedness_defect`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Relatedness {
    /// Max `‖♭(D)‖_∞` with `D = X∘γ − T^kγ(X^γ)`.
    pub flat: f64,
    /// Max base component of `D`; zero up to rounding.
    pub vertical: f64,
    /// Max of `‖d_ϑ(H∘γ)‖_∞ / ‖Jγᵀ‖_∞`. Since `Jγᵀ♭(D) = d_ϑ(H∘γ)` when `X`
    /// solves the HDW equations, `flat` cannot fall below this.
    pub lower_bound: f64,
}

/// `D_κ = X_κ(γ(q)) − Jγ(q)·X^γ_κ(q)` at one point.
pub fn relatedness_vector(x: &dyn KVectorSource, gamma: &Section, q: &[f64]) -> Result<Vec<Vec<f64>>> {
    let n = gamma.n();
    let z = gamma.eval(q)?;
    let values = x.eval(&z)?;
    let jac = gamma.map().jacobian(q)?;
    Ok(values
        .into_iter()
        .map(|v| {
            let y = DVector::from_column_slice(&v[..n]);
            let lifted = &jac * y;
            v.iter().zip(lifted.iter()).map(|(a, b)| a - b).collect()
        })
        .collect())
}

pub fn relatedness_defect(
    system: &HdwSystem,
    x: &dyn KVectorSource,
    gamma: &Section,
    points: &[Vec<f64>],
) -> Result<Relatedness> {
    let bundle = system.bundle();
    gamma.check(bundle)?;
    let n = bundle.n();
    let along = FormField::scalar(system.hamiltonian().compose(gamma.map())).lichnerowicz(bundle.vartheta())?;
    let mut out = Relatedness {
        flat: 0.0,
        vertical: 0.0,
        lower_bound: 0.0,
    };
    for q in points {
        let d = relatedness_vector(x, gamma, q)?;
        let z = gamma.eval(q)?;
        let flat = system.flat(&z)?.apply(&d);
        out.flat = out.flat.max(max_abs(&flat));
        for v in &d {
            out.vertical = out.vertical.max(max_abs(&v[..n]));
        }
        let jac = gamma.map().jacobian(q)?;
        let norm = (0..n)
            .map(|j| jac.column(j).iter().map(|v| v.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let hj = along.evaluate(q)?.norm();
        out.lower_bound = out.lower_bound.max(hj / norm);
    }
    Ok(out)
}

/// Gap between `γ*Σ_κ ι_{X_κ}Ω^κ_θ` and `Σ_κ ι_{Y_κ}γ*Ω^κ_θ` at `q`, where
/// `x` is a k-vector value at `γ(q)` and `y` one on the base. It vanishes
/// whenever `♭(x − T^kγ(y)) = 0`.
pub fn lemma_gap(bundle: &PhaseBundle, gamma: &Section, q: &[f64], x: &[Vec<f64>], y: &[Vec<f64>]) -> Result<f64> {
    gamma.check(bundle)?;
    let z = gamma.eval(q)?;
    let jac = gamma.map().jacobian(q)?;
    let flat = assemble_flat(bundle, &z)?.apply(x);
    let left = jac.transpose() * DVector::from_vec(flat);
    let mut right = DVector::zeros(bundle.n());
    for (kappa, yk) in y.iter().enumerate() {
        let pulled = bundle.omega_theta(kappa).pullback(gamma.map())?.evaluate(q)?;
        right += DVector::from_vec(pulled.interior(yk)?.components());
    }
    Ok((left - right).amax())
}

/// Max over interior grid points of `‖♭(∂φ/∂t) − d_θH(φ)‖_∞`, the HDW
/// equations read off a grid of phase points by central differences.
pub fn hdw_grid_residual(system: &HdwSystem, grid: &MultiTimeGrid) -> Result<f64> {
    let k = grid.axes().len();
    let mut worst: f64 = 0.0;
    for flat in 0..grid.len() {
        if !grid.is_reached(flat) {
            continue;
        }
        let index = grid.multi_index(flat);
        let derivs: Option<Vec<Vec<f64>>> = (0..k).map(|axis| fd_derivative(grid, &index, axis)).collect();
        let Some(derivs) = derivs else {
            continue;
        };
        if derivs.iter().flatten().any(|v| v.is_nan()) {
            continue;
        }
        worst = worst.max(system.residual(&grid.points()[flat], &derivs)?);
    }
    Ok(worst)
}

/// Settings for [`verify_hj_theorem`].
#[derive(Clone, Debug)]
pub struct HjOptions {
    /// Base points for the pointwise conditions.
    pub points: Vec<Vec<f64>>,
    /// Start of the base integral section used for the lift check.
    pub start: Vec<f64>,
    pub grid: Vec<GridAxis>,
    /// Base region the integral section must stay in.
    pub region: Region,
    /// Tolerance for pointwise identities.
    pub algebraic_tol: f64,
    /// Tolerance for grid-based residuals.
    pub integration_tol: f64,
}

impl HjOptions {
    pub const ALGEBRAIC_TOL: f64 = 1e-8;
    pub const INTEGRATION_TOL: f64 = 1e-6;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    /// The three conditions hold together or fail together.
    Pass,
    Violation,
}

/// Which conditions held, each against its own tolerance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct Conditions {
    pub closed: bool,
    pub lift: bool,
    pub relatedness: bool,
    pub hj: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct HjReport {
    pub n: usize,
    pub k: usize,
    pub points: usize,
    pub algebraic_tol: f64,
    pub integration_tol: f64,
    /// Max solver residual of `X` along `γ`.
    pub solver_residual: f64,
    pub closedness: f64,
    pub hj: f64,
    pub identity_gap: f64,
    pub relatedness: f64,
    pub relatedness_lower_bound: f64,
    pub vertical: f64,
    pub lift: f64,
    /// Bracket defect of `X` at `γ(start)`; reported, not judged.
    pub integrability_defect: f64,
    pub conditions: Conditions,
    pub verdict: Verdict,
}

/// Measures the three conditions for `γ` and a field `x` meant to solve
/// the HDW equations of `system`.
///
/// Returns [`Error::PreconditionFailed`] when `x` is not a solution along
/// `γ` or `γ` is not `d_ϑ`-closed.
pub fn verify_hj_theorem(
    system: &HdwSystem,
    x: &dyn KVectorSource,
    gamma: &Section,
    opts: &HjOptions,
) -> Result<HjReport> {
    let bundle = system.bundle();
    gamma.check(bundle)?;
    let at = opts.algebraic_tol;
    let it = opts.integration_tol;

    let mut solver_residual: f64 = 0.0;
    for q in &opts.points {
        let z = gamma.eval(q)?;
        let rhs_scale = max_abs(&system.rhs(&z)?).max(1.0);
        solver_residual = solver_residual.max(system.residual(&z, &x.eval(&z)?)? / rhs_scale);
    }
    if solver_residual > at {
        return Err(Error::PreconditionFailed {
            which: "X does not solve the HDW equations along the section".into(),
            residual: solver_residual,
        });
    }
    let closedness = section_closedness(bundle, gamma, &opts.points)?;
    if closedness > at {
        return Err(Error::PreconditionFailed {
            which: "section is not d_ϑ-closed".into(),
            residual: closedness,
        });
    }

    let hj = hj_residual(system, gamma, &opts.points)?;
    let rel = relatedness_defect(system, x, gamma, &opts.points)?;

    let projected = ProjectedField::new(x, gamma);
    let order: Vec<usize> = (0..bundle.k()).collect();
    let region = &opts.region;
    let base = sweep(&projected, &opts.start, &opts.grid, &order, &|q: &[f64]| region.contains(q))?;
    let lifted = base.map_points(|q| gamma.eval(q))?;
    let lift = hdw_grid_residual(system, &lifted)?;
    let integrability = integrability_defect(x, &gamma.eval(&opts.start)?)?;

    let conditions = Conditions {
        closed: true,
        lift: lift < it,
        relatedness: rel.flat < at,
        hj: hj.residual < at,
    };
    let verdict = if conditions.lift == conditions.relatedness && conditions.relatedness == conditions.hj {
        Verdict::Pass
    } else {
        Verdict::Violation
    };
    Ok(HjReport {
        n: bundle.n(),
        k: bundle.k(),
        points: opts.points.len(),
        algebraic_tol: at,
        integration_tol: it,
        solver_residual,
        closedness,
        hj: hj.residual,
        identity_gap: hj.identity_gap,
        relatedness: rel.flat,
        relatedness_lower_bound: rel.lower_bound,
        vertical: rel.vertical,
        lift,
        integrability_defect: integrability,
        conditions,
        verdict,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::Gauge;

    fn plane(k: usize) -> HdwSystem {
        let region = Region::Box {
            lo: vec![-2.0, -2.0],
            hi: vec![2.0, 2.0],
            exclude_radius: 0.0,
        };
        let b = PhaseBundle::darboux(2, k, region).unwrap();
        let h = (1..=k)
            .map(|c| format!("(p_{c}_1^2 + p_{c}_2^2)/2"))
            .collect::<Vec<_>>()
            .join(" + ");
        let h = ScalarField::parse(&h, b.scope()).unwrap();
        HdwSystem::new(&b, h).unwrap()
    }

    #[test]
    fn exact_section_without_lee_form() {
        // γ = dW with W = q1² + q1 q2.
        let sys = plane(1);
        let g = Section::parse(sys.bundle(), &[vec!["2*q1 + q2", "q1"]]).unwrap();
        let pts = vec![vec![0.3, -0.7], vec![1.0, 0.5]];
        assert!(section_closedness(sys.bundle(), &g, &pts).unwrap() < 1e-14);
        let hj = hj_residual(&sys, &g, &pts).unwrap();
        assert!(hj.residual > 0.1);
        assert!(hj.identity_gap < 1e-13);
    }

    #[test]
    fn constant_section_solves() {
        let sys = plane(2);
        let g = Section::parse(sys.bundle(), &[vec!["1", "2"], vec!["-1", "0.5"]]).unwrap();
        let pts = vec![vec![0.3, -0.7]];
        assert!(hj_residual(&sys, &g, &pts).unwrap().residual < 1e-15);
        let x = sys.field(Gauge::MinNorm);
        let rel = relatedness_defect(&sys, &x, &g, &pts).unwrap();
        assert!(rel.flat < 1e-12 && rel.vertical < 1e-12);
    }

    #[test]
    fn lifted_field_has_no_defect() {
        let sys = plane(1);
        let g = Section::parse(sys.bundle(), &[vec!["q1*q2", "sin(q1)"]]).unwrap();
        let q = [0.4, 0.9];
        let y = project_field(&sys.field(Gauge::MinNorm), &g, &q).unwrap();
        let jac = g.map().jacobian(&q).unwrap();
        let lifted: Vec<Vec<f64>> = y
            .iter()
            .map(|v| (&jac * DVector::from_column_slice(v)).iter().copied().collect())
            .collect();
        struct Fixed(Vec<Vec<f64>>);
        impl KVectorSource for Fixed {
            fn k(&self) -> usize {
                self.0.len()
            }
            fn dim(&self) -> usize {
                self.0[0].len()
            }
            fn eval(&self, _: &[f64]) -> Result<Vec<Vec<f64>>> {
                Ok(self.0.clone())
            }
        }
        let d = relatedness_vector(&Fixed(lifted), &g, &q).unwrap();
        assert!(d.iter().flatten().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn non_solution_is_rejected() {
        let sys = plane(1);
        let g = Section::parse(sys.bundle(), &[vec!["1", "0"]]).unwrap();
        let s = sys.bundle().scope().clone();
        let wrong = crate::dynamics::KVectorField::new(vec![["1", "0", "0", "1"]
            .iter()
            .map(|e| ScalarField::parse(e, &s).unwrap())
            .collect()])
        .unwrap();
        let opts = HjOptions {
            points: vec![vec![0.5, 0.5]],
            start: vec![0.5, 0.5],
            grid: vec![GridAxis { steps: 4, h: 0.1 }],
            region: sys.bundle().domain().clone(),
            algebraic_tol: HjOptions::ALGEBRAIC_TOL,
            integration_tol: HjOptions::INTEGRATION_TOL,
        };
        assert!(matches!(
            verify_hj_theorem(&sys, &wrong, &g, &opts),
            Err(Error::PreconditionFailed { .. })
        ));
    }
}

//! Hamilton–DeDonder–Weyl equations `Σ_κ ι_{X_κ}Ω^κ_θ = d_θH`.
//!
//! At a point the equations are the linear system `B x = d_θH(z)` where
//! `x = (X_1, …, X_k)` is stacked into a vector of length `k·N` and
//! `B = [A_1ᵀ | … | A_kᵀ]` with `A_κ` the coefficient matrix of `Ω^κ_θ`.
//! For `k > 1` the system is underdetermined and a [`Gauge`] picks one
//! solution.

mod field;
mod integrate;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calculus::{FormField, ScalarField};
use crate::linalg::{max_abs, min_norm_solve, null_space, rank};
use crate::structure::PhaseBundle;
use crate::{Error, Result};

pub use field::{integrability_defect, HdwField, KVectorField, KVectorSource};
pub use integrate::{
    fd_derivative, grid_residual, integrate_section, max_deviation, parse_grid, sweep, GridAxis,
    IntegralSection, MultiTimeGrid,
};

/// Residual bound of the pointwise solver, relative to the system scale.
pub const SOLVER_TOL: f64 = 1e-9;

/// Rule selecting one solution of the underdetermined HDW system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Gauge {
    /// Minimum Euclidean norm (pseudo-inverse).
    #[default]
    MinNorm,
    /// Off-diagonal momentum blocks zero, diagonal momentum components
    /// equal across κ.
    #[serde(alias = "darboux")]
    DarbouxDiagonal,
}

impl FromStr for Gauge {
    type Err = Error;
    fn from_str(s: &str) -> Result<Gauge> {
        match s {
            "min-norm" => Ok(Gauge::MinNorm),
            "darboux" | "darboux-diagonal" => Ok(Gauge::DarbouxDiagonal),
            _ => Err(Error::Invalid(format!("unknown gauge `{s}` (expected min-norm or darboux)"))),
        }
    }
}

impl fmt::Display for Gauge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Gauge::MinNorm => "min-norm",
            Gauge::DarbouxDiagonal => "darboux",
        })
    }
}

/// The matrix of `(X_1,…,X_k) ↦ Σ_κ ι_{X_κ}Ω_κ` at a point.
#[derive(Clone, Debug)]
pub struct FlatMatrix {
    pub point: Vec<f64>,
    pub matrix: DMatrix<f64>,
    k: usize,
}

impl FlatMatrix {
    /// Assembles `B` from any family of `k` two-forms on the chart.
    pub fn from_forms(forms: &[FormField], z: &[f64]) -> Result<FlatMatrix> {
        let dim = z.len();
        let k = forms.len();
        let mut matrix = DMatrix::zeros(dim, k * dim);
        for (kappa, form) in forms.iter().enumerate() {
            if form.dim() != dim || form.degree() != 2 {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: form.dim(),
                });
            }
            let a = form.evaluate(z)?.matrix();
            matrix.view_mut((0, kappa * dim), (dim, dim)).copy_from(&a.transpose());
        }
        Ok(FlatMatrix {
            point: z.to_vec(),
            matrix,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.point.len()
    }

    pub fn apply(&self, fields: &[Vec<f64>]) -> Vec<f64> {
        (&self.matrix * stack(fields)).iter().copied().collect()
    }

    pub fn rank(&self) -> usize {
        rank(&self.matrix)
    }
}

/// `Σ_κ ι_{X_κ}Ω^κ_θ` at `z` as a matrix.
pub fn assemble_flat(bundle: &PhaseBundle, z: &[f64]) -> Result<FlatMatrix> {
    if z.len() != bundle.dim() {
        return Err(Error::DimensionMismatch {
            expected: bundle.dim(),
            found: z.len(),
        });
    }
    FlatMatrix::from_forms(bundle.omega_thetas(), z)
}

pub(crate) fn stack(fields: &[Vec<f64>]) -> DVector<f64> {
    DVector::from_iterator(fields.iter().map(Vec::len).sum(), fields.iter().flatten().copied())
}

pub(crate) fn unstack(x: &DVector<f64>, k: usize) -> Vec<Vec<f64>> {
    let dim = x.len() / k;
    (0..k).map(|kappa| x.rows(kappa * dim, dim).iter().copied().collect()).collect()
}

/// A solution at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HdwSolution {
    /// `fields[κ]` is `X_κ` at the point.
    pub fields: Vec<Vec<f64>>,
    /// `‖B x − d_θH‖_∞`.
    pub residual: f64,
}

/// A phase bundle together with a Hamiltonian.
#[derive(Clone, Debug)]
pub struct HdwSystem {
    bundle: PhaseBundle,
    hamiltonian: ScalarField,
    rhs: FormField,
}

impl HdwSystem {
    pub fn new(bundle: &PhaseBundle, hamiltonian: ScalarField) -> Result<HdwSystem> {
        let hamiltonian = bundle.lift_base_field(&hamiltonian)?;
        let rhs = FormField::scalar(hamiltonian.clone()).lichnerowicz(bundle.theta())?;
        Ok(HdwSystem {
            bundle: bundle.clone(),
            hamiltonian,
            rhs,
        })
    }

    pub fn bundle(&self) -> &PhaseBundle {
        &self.bundle
    }

    pub fn hamiltonian(&self) -> &ScalarField {
        &self.hamiltonian
    }

    /// `d_θH` as a form.
    pub fn rhs_form(&self) -> &FormField {
        &self.rhs
    }

    pub fn rhs(&self, z: &[f64]) -> Result<Vec<f64>> {
        Ok(self.rhs.evaluate(z)?.components())
    }

    pub fn flat(&self, z: &[f64]) -> Result<FlatMatrix> {
        assemble_flat(&self.bundle, z)
    }

    /// `‖B(z)·x − d_θH(z)‖_∞`.
    pub fn residual(&self, z: &[f64], fields: &[Vec<f64>]) -> Result<f64> {
        let flat = self.flat(z)?;
        let rhs = self.rhs(z)?;
        let lhs = flat.apply(fields);
        Ok(lhs.iter().zip(&rhs).fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    pub fn solve(&self, z: &[f64], gauge: Gauge) -> Result<HdwSolution> {
        let flat = self.flat(z)?;
        let rhs = DVector::from_vec(self.rhs(z)?);
        solve_linear(&flat, &rhs, self.bundle.n(), gauge)
    }

    /// Orthonormal basis of `ker B(z)`, each vector split per κ.
    pub fn kernel_basis(&self, z: &[f64]) -> Result<Vec<Vec<Vec<f64>>>> {
        let flat = self.flat(z)?;
        Ok(null_space(&flat.matrix)
            .iter()
            .map(|v| unstack(v, self.bundle.k()))
            .collect())
    }

    /// The solver as a k-vector field.
    pub fn field(&self, gauge: Gauge) -> HdwField<'_> {
        HdwField::new(self, gauge)
    }

    /// Closed-form solution in the Darboux-diagonal gauge as symbolic
    /// fields: `(X_κ)^i = ∂H/∂p^κ_i`, `(X_κ)^κ_i = R_i/k` with
    /// `R_i = Σ_κ Σ_j (X_κ)^j Ω^κ_θ(∂_j, ∂_i) − (d_θH)_i`, other momentum
    /// components zero. Assumes the Darboux pattern built by
    /// [`PhaseBundle::build`].
    pub fn darboux_field(&self) -> Result<KVectorField> {
        let b = &self.bundle;
        let (n, k, dim) = (b.n(), b.k(), b.dim());
        let zero = ScalarField::zero(dim);
        let mut components = vec![vec![zero.clone(); dim]; k];
        for (kappa, comps) in components.iter_mut().enumerate() {
            for (i, c) in comps.iter_mut().take(n).enumerate() {
                *c = self.hamiltonian.partial(b.momentum_index(kappa, i));
            }
        }
        for i in 0..n {
            let mut r = match self.rhs.coefficient(&[i]) {
                Some(c) => -c,
                None => zero.clone(),
            };
            for (kappa, comps) in components.iter().enumerate() {
                let form = b.omega_theta(kappa);
                for (j, base) in comps.iter().take(n).enumerate() {
                    if let Some(c) = oriented_coefficient(form, j, i) {
                        r = r + base * &c;
                    }
                }
            }
            let share = r.scale(1.0 / k as f64);
            for (kappa, comps) in components.iter_mut().enumerate() {
                comps[b.momentum_index(kappa, i)] = share.clone();
            }
        }
        KVectorField::new(components)
    }
}

/// `form(∂_i, ∂_j)` as a field, `None` if structurally zero.
fn oriented_coefficient(form: &FormField, i: usize, j: usize) -> Option<ScalarField> {
    if i == j {
        return None;
    }
    if i < j {
        form.coefficient(&[i, j]).cloned()
    } else {
        form.coefficient(&[j, i]).map(|c| -c)
    }
}

/// Solves `B x = rhs` in the given gauge.
pub fn solve_linear(flat: &FlatMatrix, rhs: &DVector<f64>, n: usize, gauge: Gauge) -> Result<HdwSolution> {
    let k = flat.k();
    let dim = flat.dim();
    let x = match gauge {
        Gauge::MinNorm => min_norm_solve(&flat.matrix, rhs),
        Gauge::DarbouxDiagonal => {
            // Reduced unknowns: base components of every X_κ, then one
            // shared diagonal momentum value per base index.
            let reduced_len = k * n + n;
            let mut e = DMatrix::zeros(k * dim, reduced_len);
            for kappa in 0..k {
                for i in 0..n {
                    e[(kappa * dim + i, kappa * n + i)] = 1.0;
                    e[(kappa * dim + n + kappa * n + i, k * n + i)] = 1.0;
                }
            }
            let y = min_norm_solve(&(&flat.matrix * &e), rhs);
            e * y
        }
    };
    let residual = (&flat.matrix * &x - rhs).amax();
    let scale = 1.0_f64.max(rhs.amax()).max(flat.matrix.amax());
    if residual > SOLVER_TOL * scale {
        return Err(Error::OutOfRange {
            residual,
            point: flat.point.clone(),
        });
    }
    Ok(HdwSolution {
        fields: unstack(&x, k),
        residual,
    })
}

impl HdwSolution {
    pub fn max_abs(&self) -> f64 {
        self.fields.iter().map(|f| max_abs(f)).fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::region::Region;

    fn plane() -> Region {
        Region::Box {
            lo: vec![-2.0, -2.0],
            hi: vec![2.0, 2.0],
            exclude_radius: 0.1,
        }
    }

    #[test]
    fn canonical_matrix_for_one_degree_of_freedom() {
        let line = Region::Box {
            lo: vec![-1.0],
            hi: vec![1.0],
            exclude_radius: 0.0,
        };
        let b = PhaseBundle::darboux(1, 1, line).unwrap();
        let flat = assemble_flat(&b, &[0.3, 0.7]).unwrap();
        assert_eq!(flat.matrix, DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]));
    }

    #[test]
    fn classical_hamilton_equations() {
        // H = p²/2 + q²/2 gives q̇ = p, ṗ = −q.
        let line = Region::Box {
            lo: vec![-1.0],
            hi: vec![1.0],
            exclude_radius: 0.0,
        };
        let b = PhaseBundle::darboux(1, 1, line).unwrap();
        let h = ScalarField::parse("p_1_1^2/2 + q1^2/2", b.scope()).unwrap();
        let sys = HdwSystem::new(&b, h).unwrap();
        for gauge in [Gauge::MinNorm, Gauge::DarbouxDiagonal] {
            let x = sys.solve(&[0.5, 2.0], gauge).unwrap();
            assert!((x.fields[0][0] - 2.0).abs() < 1e-14);
            assert!((x.fields[0][1] + 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn kernel_dimension_and_verticality() {
        let b = PhaseBundle::darboux(2, 2, plane()).unwrap();
        let h = ScalarField::parse("(p_1_1^2 + p_1_2^2 + p_2_1^2 + p_2_2^2)/2", b.scope()).unwrap();
        let sys = HdwSystem::new(&b, h).unwrap();
        let z = [0.5, 0.5, 1.0, 2.0, 3.0, 4.0];
        let basis = sys.kernel_basis(&z).unwrap();
        assert_eq!(basis.len(), 6);
        for v in &basis {
            for comps in v {
                assert!(comps[..2].iter().all(|c| c.abs() < 1e-12));
            }
        }
        assert_eq!(sys.flat(&z).unwrap().rank(), 6);
    }

    #[test]
    fn free_particle_darboux_gauge() {
        let b = PhaseBundle::darboux(2, 2, plane()).unwrap();
        let h = ScalarField::parse("(p_1_1^2 + p_1_2^2 + p_2_1^2 + p_2_2^2)/2", b.scope()).unwrap();
        let sys = HdwSystem::new(&b, h).unwrap();
        let z = [0.5, 0.5, 1.0, 2.0, 3.0, 4.0];
        let x = sys.solve(&z, Gauge::DarbouxDiagonal).unwrap();
        assert!((x.fields[0][0] - 1.0).abs() < 1e-14 && (x.fields[1][1] - 4.0).abs() < 1e-14);
        assert!(x.fields.iter().all(|f| f[2..].iter().all(|c| c.abs() < 1e-14)));
    }

    #[test]
    fn gauge_parsing() {
        assert_eq!("darboux".parse::<Gauge>().unwrap(), Gauge::DarbouxDiagonal);
        assert_eq!("min-norm".parse::<Gauge>().unwrap(), Gauge::MinNorm);
        assert!("other".parse::<Gauge>().is_err());
        assert_eq!(serde_json::to_string(&Gauge::MinNorm).unwrap(), "\"min-norm\"");
    }
}

//! Conformal atlases: patches on which the Lee form is exact.
//!
//! On a patch `U_α` with `θ = dσ_α` the rescaled forms
//! `Ω^κ_α = e^{−σ_α}Ω^κ_θ` are closed and, together with
//! `H_α = e^{−σ_α}H`, define an ordinary k-symplectic Hamiltonian system
//! whose HDW solutions coincide with the global ones. Patches may carry
//! their own coordinates; momenta then transform by the cotangent lift.

use std::sync::Arc;

use nalgebra::DVector;
use rand::Rng;
use serde::Serialize;

use crate::calculus::{minor_determinant, ChartMap, FormField, ScalarField};
use crate::dynamics::{solve_linear, FlatMatrix, Gauge, HdwSystem};
use crate::expr::VariableScope;
use crate::linalg::max_abs;
use crate::region::{sample_momenta, seeded_rng, Region};
use crate::structure::{base_scope, phase_scope, PhaseBundle};
use crate::{Error, Result};

/// Default number of overlap samples drawn by [`Atlas::cocycle`].
pub const DEFAULT_BUDGET: usize = 500;

/// Alternate coordinates `u` on a patch with a map `u ↦ q` to the
/// reference chart.
#[derive(Clone, Debug)]
pub struct LocalChart {
    names: Vec<String>,
    domain: Region,
    base_map: ChartMap,
    phase_map: ChartMap,
    scope: Arc<VariableScope>,
}

impl LocalChart {
    /// `map[i]` is the reference coordinate `q^i` written in the local
    /// names; `domain` is in local coordinates.
    pub fn parse<S: AsRef<str>>(bundle: &PhaseBundle, names: &[String], map: &[S], domain: Region) -> Result<LocalChart> {
        let (n, k) = (bundle.n(), bundle.k());
        if map.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: map.len(),
            });
        }
        if domain.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: domain.dim(),
            });
        }
        let base = base_scope(n, Some(names))?;
        let comps = map
            .iter()
            .map(|e| ScalarField::parse(e.as_ref(), &base).map_err(Error::from))
            .collect::<Result<Vec<_>>>()?;
        let base_map = ChartMap::new(n, comps)?;
        let phase_map = cotangent_lift(&base_map, k)?;
        Ok(LocalChart {
            names: names.to_vec(),
            domain,
            base_map,
            phase_map,
            scope: phase_scope(n, k, Some(names))?,
        })
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn domain(&self) -> &Region {
        &self.domain
    }

    pub fn base_map(&self) -> &ChartMap {
        &self.base_map
    }

    /// `(u, p̃) ↦ (ψ(u), Dψ(u)^{-ᵀ} p̃)` for every momentum block.
    pub fn phase_map(&self) -> &ChartMap {
        &self.phase_map
    }

    /// Variable names on the local phase chart.
    pub fn scope(&self) -> &Arc<VariableScope> {
        &self.scope
    }
}

/// The cotangent lift of `ψ` to `k` momentum blocks, using
/// `Dψ^{-ᵀ} = cof(Dψ)/det(Dψ)`.
fn cotangent_lift(psi: &ChartMap, k: usize) -> Result<ChartMap> {
    let n = psi.source_dim();
    let dim = n + k * n;
    let proj = ChartMap::projection(dim, &(0..n).collect::<Vec<_>>());
    let jac = psi.jacobian_fields();
    let all: Vec<usize> = (0..n).collect();
    let det = minor_determinant(jac, &all, &all, n).compose(&proj);
    let mut comps: Vec<ScalarField> = psi.components().iter().map(|c| c.compose(&proj)).collect();
    for kappa in 0..k {
        for i in 0..n {
            let mut total = ScalarField::zero(dim);
            for j in 0..n {
                let rows: Vec<usize> = all.iter().copied().filter(|&r| r != i).collect();
                let cols: Vec<usize> = all.iter().copied().filter(|&c| c != j).collect();
                let minor = minor_determinant(jac, &rows, &cols, n).compose(&proj);
                if minor.is_zero() {
                    continue;
                }
                let term = &minor * &ScalarField::coordinate(dim, n + kappa * n + j);
                total = if (i + j) % 2 == 0 { total + term } else { total - term };
            }
            comps.push(total.div(&det));
        }
    }
    ChartMap::new(dim, comps)
}

/// One patch `U_α` with its conformal factor.
#[derive(Clone, Debug)]
pub struct ChartPatch {
    name: String,
    region: Region,
    sigma: ScalarField,
    chart: Option<LocalChart>,
}

impl ChartPatch {
    /// `region` and `sigma` live on the reference base chart.
    pub fn new(name: impl Into<String>, region: Region, sigma: ScalarField) -> ChartPatch {
        ChartPatch {
            name: name.into(),
            region,
            sigma,
            chart: None,
        }
    }

    pub fn parse(bundle: &PhaseBundle, name: impl Into<String>, region: Region, sigma: &str) -> Result<ChartPatch> {
        let sigma = ScalarField::parse(sigma, bundle.base_scope())?;
        Ok(ChartPatch::new(name, region, sigma))
    }

    pub fn with_chart(mut self, chart: LocalChart) -> ChartPatch {
        self.chart = Some(chart);
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn region(&self) -> &Region {
        &self.region
    }

    pub fn sigma(&self) -> &ScalarField {
        &self.sigma
    }

    pub fn chart(&self) -> Option<&LocalChart> {
        self.chart.as_ref()
    }

    pub fn contains(&self, q: &[f64]) -> bool {
        self.region.contains(q)
    }

    /// Reference coordinates of a patch base point.
    pub fn base_to_reference(&self, u: &[f64]) -> Result<Vec<f64>> {
        match &self.chart {
            Some(c) => Ok(c.base_map.apply(u)?),
            None => Ok(u.to_vec()),
        }
    }

    /// Reference coordinates of a patch phase point.
    pub fn to_reference(&self, z: &[f64]) -> Result<Vec<f64>> {
        match &self.chart {
            Some(c) => Ok(c.phase_map.apply(z)?),
            None => Ok(z.to_vec()),
        }
    }

    /// Base points in patch coordinates whose images lie in the patch.
    pub fn sample_base(&self, count: usize, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
        let Some(chart) = &self.chart else {
            return Ok(self.region.sample_many(count, rng));
        };
        let mut out = Vec::with_capacity(count);
        let mut attempts = 0usize;
        while out.len() < count {
            attempts += 1;
            if attempts > 1000 * count.max(1) {
                return Err(Error::Invalid(format!(
                    "local domain of patch `{}` barely meets its region",
                    self.name
                )));
            }
            let u = chart.domain.sample(rng);
            if self.region.contains(&chart.base_map.apply(&u)?) {
                out.push(u);
            }
        }
        Ok(out)
    }

    /// Phase points in patch coordinates with momenta in a ball.
    pub fn sample_phase(&self, bundle: &PhaseBundle, count: usize, radius: f64, rng: &mut impl Rng) -> Result<Vec<Vec<f64>>> {
        let bases = self.sample_base(count, rng)?;
        let momenta = bundle.dim() - bundle.n();
        Ok(bases
            .into_iter()
            .map(|u| {
                let mut z = u;
                z.extend(sample_momenta(momenta, radius, rng));
                z
            })
            .collect())
    }

    /// Max `‖θ − dσ_α‖` over reference base points.
    pub fn lee_residual(&self, bundle: &PhaseBundle, points: &[Vec<f64>]) -> Result<f64> {
        let gap = bundle.vartheta().sub(&FormField::scalar(self.sigma.clone()).exterior_derivative()?)?;
        let mut worst: f64 = 0.0;
        for q in points {
            worst = worst.max(gap.evaluate(q)?.norm());
        }
        Ok(worst)
    }

    /// Checks `θ = dσ_α` at reference base points.
    pub fn validate(&self, bundle: &PhaseBundle, points: &[Vec<f64>], tol: f64) -> Result<f64> {
        let residual = self.lee_residual(bundle, points)?;
        if residual > tol {
            return Err(Error::NotExactOnPatch {
                patch: self.name.clone(),
                residual,
            });
        }
        Ok(residual)
    }
}

/// The structure and Hamiltonian of a system restricted to a patch, in
/// patch coordinates.
#[derive(Clone, Debug)]
pub struct Localized {
    /// `Ω^κ_θ` pulled to the patch chart.
    pub global_forms: Vec<FormField>,
    /// `d_θH` pulled to the patch chart.
    pub global_rhs: FormField,
    /// `Ω^κ_α = e^{−σ_α}Ω^κ_θ`.
    pub forms: Vec<FormField>,
    /// `H_α = e^{−σ_α}H`.
    pub hamiltonian: ScalarField,
    /// `dH_α`.
    pub rhs: FormField,
    /// Max `‖dΩ^κ_α‖` at the sample points.
    pub closedness: f64,
    /// Max `‖θ − dσ_α‖` at the sample points.
    pub lee_residual: f64,
}

/// Localizes `system` to `patch`, checking `θ = dσ_α` and `dΩ^κ_α = 0` at
/// `points` (phase points in patch coordinates).
pub fn localize(system: &HdwSystem, patch: &ChartPatch, points: &[Vec<f64>], tol: f64) -> Result<Localized> {
    let bundle = system.bundle();
    let n = bundle.n();
    let bases = points
        .iter()
        .map(|z| patch.base_to_reference(&z[..n]))
        .collect::<Result<Vec<_>>>()?;
    let lee_residual = patch.validate(bundle, &bases, tol)?;

    let (global_forms, global_rhs, sigma, h) = match &patch.chart {
        Some(c) => {
            let forms = bundle
                .omega_thetas()
                .iter()
                .map(|w| w.pullback(&c.phase_map))
                .collect::<Result<Vec<_>>>()?;
            let proj = ChartMap::projection(bundle.dim(), &(0..n).collect::<Vec<_>>());
            let sigma = patch.sigma.compose(&c.base_map).compose(&proj);
            (
                forms,
                system.rhs_form().pullback(&c.phase_map)?,
                sigma,
                system.hamiltonian().compose(&c.phase_map),
            )
        }
        None => (
            bundle.omega_thetas().to_vec(),
            system.rhs_form().clone(),
            bundle.lift_base_field(&patch.sigma)?,
            system.hamiltonian().clone(),
        ),
    };
    let factor = (-sigma).exp();
    let forms = global_forms
        .iter()
        .map(|w| w.times(&factor))
        .collect::<Result<Vec<_>>>()?;
    let hamiltonian = &factor * &h;
    let rhs = FormField::scalar(hamiltonian.clone()).exterior_derivative()?;
    let derivatives = forms
        .iter()
        .map(FormField::exterior_derivative)
        .collect::<Result<Vec<_>>>()?;
    let mut closedness: f64 = 0.0;
    for z in points {
        for d in &derivatives {
            closedness = closedness.max(d.evaluate(z)?.norm());
        }
    }
    Ok(Localized {
        global_forms,
        global_rhs,
        forms,
        hamiltonian,
        rhs,
        closedness,
        lee_residual,
    })
}

fn solve_with(forms: &[FormField], rhs: &FormField, z: &[f64], n: usize, gauge: Gauge) -> Result<Vec<Vec<f64>>> {
    let flat = FlatMatrix::from_forms(forms, z)?;
    let rhs = DVector::from_vec(rhs.evaluate(z)?.components());
    Ok(solve_linear(&flat, &rhs, n, gauge)?.fields)
}

/// Max componentwise gap between the HDW solutions of the global system
/// `(Ω^κ_θ, d_θH)` and the local one `(Ω^κ_α, dH_α)`, both in patch
/// coordinates and in the same gauge.
pub fn glue_invariance(system: &HdwSystem, local: &Localized, points: &[Vec<f64>], gauge: Gauge) -> Result<f64> {
    let n = system.bundle().n();
    let mut worst: f64 = 0.0;
    for z in points {
        let global = solve_with(&local.global_forms, &local.global_rhs, z, n, gauge)?;
        let patch = solve_with(&local.forms, &local.rhs, z, n, gauge)?;
        for (a, b) in global.iter().zip(&patch) {
            worst = worst.max(a.iter().zip(b).fold(0.0, |m, (u, v)| m.max((u - v).abs())));
        }
    }
    Ok(worst)
}

/// Comparison of a local-chart solution pushed to reference coordinates
/// with the reference solution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CrossChart {
    /// Max gap in the base components, which every gauge shares.
    pub base: f64,
    /// Max gap in all components. Meaningful for `k = 1` only, since for
    /// larger `k` a gauge picks different kernel representatives in
    /// different coordinates.
    pub full: f64,
    /// Max HDW residual of the pushed-forward solution in the reference
    /// system.
    pub residual: f64,
}

/// Solves the local system at `points` (patch coordinates), pushes the
/// solution through the cotangent lift and compares with the reference
/// solution at the image points.
pub fn cross_chart_discrepancy(
    system: &HdwSystem,
    patch: &ChartPatch,
    local: &Localized,
    points: &[Vec<f64>],
    gauge: Gauge,
) -> Result<CrossChart> {
    let n = system.bundle().n();
    let mut out = CrossChart {
        base: 0.0,
        full: 0.0,
        residual: 0.0,
    };
    for z in points {
        let here = solve_with(&local.forms, &local.rhs, z, n, gauge)?;
        let w = patch.to_reference(z)?;
        let pushed: Vec<Vec<f64>> = match &patch.chart {
            Some(c) => {
                let jac = c.phase_map.jacobian(z)?;
                here.iter()
                    .map(|v| (&jac * DVector::from_column_slice(v)).iter().copied().collect())
                    .collect()
            }
            None => here,
        };
        let there = system.solve(&w, gauge)?.fields;
        for (a, b) in pushed.iter().zip(&there) {
            let gaps: Vec<f64> = a.iter().zip(b).map(|(u, v)| u - v).collect();
            out.base = out.base.max(max_abs(&gaps[..n]));
            out.full = out.full.max(max_abs(&gaps));
        }
        let scale = max_abs(&system.rhs(&w)?).max(1.0);
        out.residual = out.residual.max(system.residual(&w, &pushed)? / scale);
    }
    Ok(out)
}

/// Cocycle diagnostics over sampled overlaps.
#[derive(Clone, Debug, Serialize)]
pub struct CocycleReport {
    pub samples: usize,
    pub pair_samples: usize,
    pub triple_samples: usize,
    /// Max `|λ_δβ λ_βα − λ_δα|` over triple overlaps, patches taken in atlas
    /// order `α < β < δ`.
    pub defect: f64,
    /// Max `‖dλ_βα‖` over pairwise overlaps. Transition factors of a
    /// conformal atlas are locally constant, so anything above rounding
    /// means some `σ` does not integrate the Lee form.
    pub transition_variation: f64,
    /// Max `|e^{σ_α}H_α − e^{σ_β}H_β|` over pairwise overlaps, when a
    /// Hamiltonian was supplied.
    pub hamiltonian_glue: Option<f64>,
    pub tolerance: f64,
    pub flagged: bool,
}

/// A finite family of patches over a sampling region of the reference base.
#[derive(Clone, Debug)]
pub struct Atlas {
    patches: Vec<ChartPatch>,
    bounds: Region,
}

impl Atlas {
    pub fn new(patches: Vec<ChartPatch>, bounds: Region) -> Atlas {
        Atlas { patches, bounds }
    }

    pub fn patches(&self) -> &[ChartPatch] {
        &self.patches
    }

    pub fn bounds(&self) -> &Region {
        &self.bounds
    }

    /// `λ_βα = e^{σ_α − σ_β}` at `q`.
    pub fn transition(&self, alpha: usize, beta: usize, q: &[f64]) -> Result<f64> {
        let sa = self.patches[alpha].sigma.eval(q)?;
        let sb = self.patches[beta].sigma.eval(q)?;
        Ok((sa - sb).exp())
    }

    /// Points of `points` covered by no patch.
    pub fn uncovered<'p>(&self, points: &'p [Vec<f64>]) -> Vec<&'p [f64]> {
        points
            .iter()
            .filter(|q| !self.patches.iter().any(|p| p.contains(q)))
            .map(Vec::as_slice)
            .collect()
    }

    /// Samples `budget` points of the bounds and evaluates the cocycle
    /// condition on triple overlaps and the variation of `λ` on pairwise
    /// ones. With fewer than three patches the triple condition holds
    /// vacuously; otherwise finding no triple-overlap sample is an error.
    pub fn cocycle(
        &self,
        system: Option<&HdwSystem>,
        budget: usize,
        seed: u64,
        momentum_radius: f64,
        tol: f64,
    ) -> Result<CocycleReport> {
        let mut rng = seeded_rng(seed);
        let mut report = CocycleReport {
            samples: budget,
            pair_samples: 0,
            triple_samples: 0,
            defect: 0.0,
            transition_variation: 0.0,
            hamiltonian_glue: system.map(|_| 0.0),
            tolerance: tol,
            flagged: false,
        };
        let dsigma = self
            .patches
            .iter()
            .map(|p| FormField::scalar(p.sigma.clone()).exterior_derivative())
            .collect::<Result<Vec<_>>>()?;
        let m = self.patches.len();
        for _ in 0..budget {
            let q = self.bounds.sample(&mut rng);
            let inside: Vec<usize> = (0..m).filter(|&a| self.patches[a].contains(&q)).collect();
            if inside.len() < 2 {
                continue;
            }
            report.pair_samples += 1;
            let sigma = inside
                .iter()
                .map(|&a| self.patches[a].sigma.eval(&q))
                .collect::<Result<Vec<_>, _>>()?;
            let grads = inside
                .iter()
                .map(|&a| dsigma[a].evaluate(&q).map(|v| v.components()))
                .collect::<Result<Vec<_>, _>>()?;
            for x in 0..inside.len() {
                for y in x + 1..inside.len() {
                    let lambda = (sigma[x] - sigma[y]).exp();
                    let diff: Vec<f64> = grads[x].iter().zip(&grads[y]).map(|(a, b)| lambda * (a - b)).collect();
                    report.transition_variation = report.transition_variation.max(max_abs(&diff));
                }
            }
            if inside.len() >= 3 {
                report.triple_samples += 1;
                for x in 0..inside.len() {
                    for y in x + 1..inside.len() {
                        for w in y + 1..inside.len() {
                            let l_yx = (sigma[x] - sigma[y]).exp();
                            let l_wy = (sigma[y] - sigma[w]).exp();
                            let l_wx = (sigma[x] - sigma[w]).exp();
                            report.defect = report.defect.max((l_wy * l_yx - l_wx).abs());
                        }
                    }
                }
            }
            if let (Some(sys), Some(glue)) = (system, report.hamiltonian_glue.as_mut()) {
                let mut z = q.clone();
                let momenta = sys.bundle().dim() - sys.bundle().n();
                z.extend(sample_momenta(momenta, momentum_radius, &mut rng));
                let h = sys.hamiltonian().eval(&z)?;
                // e^{σ_α}H_α with H_α = e^{−σ_α}H, evaluated as written.
                let glued: Vec<f64> = sigma.iter().map(|s| s.exp() * ((-s).exp() * h)).collect();
                for x in 0..glued.len() {
                    for y in x + 1..glued.len() {
                        *glue = glue.max((glued[x] - glued[y]).abs());
                    }
                }
            }
        }
        if m >= 3 && report.triple_samples == 0 {
            return Err(Error::EmptyOverlap);
        }
        report.flagged = report.defect > tol || report.transition_variation > tol;
        Ok(report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn lee_bundle(k: usize) -> PhaseBundle {
        let names = vec!["x".to_string(), "y".to_string()];
        let scope = base_scope(2, Some(&names)).unwrap();
        let vartheta = FormField::one_form(vec![
            ScalarField::parse("-2*y/(x^2+y^2)", &scope).unwrap(),
            ScalarField::parse("2*x/(x^2+y^2)", &scope).unwrap(),
        ])
        .unwrap();
        let domain = Region::Box {
            lo: vec![-2.0, -2.0],
            hi: vec![2.0, 2.0],
            exclude_radius: 0.1,
        };
        PhaseBundle::build(2, k, vartheta, domain, Some(&names)).unwrap()
    }

    fn sector(a: f64, b: f64) -> Region {
        Region::Sector {
            radius: [0.1, 2.0],
            angle: [a, b],
        }
    }

    fn three_patches(b: &PhaseBundle) -> Vec<ChartPatch> {
        vec![
            ChartPatch::parse(b, "A", sector(-0.75 * PI, 0.75 * PI), "2*atan2(y, x)").unwrap(),
            ChartPatch::parse(b, "B", sector(0.25 * PI, 1.75 * PI), &format!("2*(atan2(-y, -x) + {PI})")).unwrap(),
            ChartPatch::parse(b, "C", sector(0.125 * PI, 1.375 * PI), &format!("2*(atan2(-x, y) + {})", PI / 2.0))
                .unwrap(),
        ]
    }

    #[test]
    fn polar_cotangent_lift() {
        let b = lee_bundle(1);
        let names = vec!["r".to_string(), "phi".to_string()];
        let chart = LocalChart::parse(&b, &names, &["r*cos(phi)", "r*sin(phi)"], sector(0.0, 1.0)).unwrap();
        let (r, phi, pr, pphi) = (1.3, 0.4, 0.7, -0.2);
        let w = chart.phase_map().apply(&[r, phi, pr, pphi]).unwrap();
        assert!((w[2] - (phi.cos() * pr - phi.sin() * pphi / r)).abs() < 1e-14);
        assert!((w[3] - (phi.sin() * pr + phi.cos() * pphi / r)).abs() < 1e-14);
    }

    #[test]
    fn three_patch_cocycle() {
        let b = lee_bundle(1);
        let atlas = Atlas::new(three_patches(&b), b.domain().clone());
        let report = atlas.cocycle(None, DEFAULT_BUDGET, 42, 10.0, 1e-10).unwrap();
        assert!(report.triple_samples > 0);
        assert!(report.defect < 1e-12, "{report:?}");
        assert!(!report.flagged, "{report:?}");
    }

    #[test]
    fn perturbed_sigma_is_flagged() {
        let b = lee_bundle(1);
        let mut patches = three_patches(&b);
        patches[1] = ChartPatch::parse(&b, "B", sector(0.25 * PI, 1.75 * PI), &format!("2*(atan2(-y, -x) + {PI}) + 0.1*x"))
            .unwrap();
        let report = Atlas::new(patches, b.domain().clone())
            .cocycle(None, DEFAULT_BUDGET, 42, 10.0, 1e-10)
            .unwrap();
        assert!(report.flagged);
        assert!(report.transition_variation > 1e-3);
    }

    #[test]
    fn single_patch_is_vacuous() {
        let b = lee_bundle(1);
        let atlas = Atlas::new(three_patches(&b).into_iter().take(1).collect(), b.domain().clone());
        let report = atlas.cocycle(None, 50, 1, 10.0, 1e-10).unwrap();
        assert_eq!(report.defect, 0.0);
        assert_eq!(report.triple_samples, 0);
    }

    #[test]
    fn wrong_sigma_is_not_exact() {
        let b = lee_bundle(1);
        let h = ScalarField::parse("(px^2 + py^2)/2", b.scope()).unwrap();
        let sys = HdwSystem::new(&b, h).unwrap();
        let patch = ChartPatch::parse(&b, "bad", sector(-1.0, 1.0), "atan2(y, x)").unwrap();
        let pts = patch.sample_phase(&b, 5, 10.0, &mut seeded_rng(0)).unwrap();
        assert!(matches!(
            localize(&sys, &patch, &pts, 1e-8),
            Err(Error::NotExactOnPatch { .. })
        ));
    }

    #[test]
    fn constant_sigma_without_lee_form() {
        let region = Region::Box {
            lo: vec![-1.0, -1.0],
            hi: vec![1.0, 1.0],
            exclude_radius: 0.0,
        };
        let b = PhaseBundle::darboux(2, 2, region.clone()).unwrap();
        let h = ScalarField::parse("q1*p_1_1 + p_2_2^2", b.scope()).unwrap();
        let sys = HdwSystem::new(&b, h).unwrap();
        let patch = ChartPatch::parse(&b, "flat", region, "0.7").unwrap();
        let pts = patch.sample_phase(&b, 10, 5.0, &mut seeded_rng(4)).unwrap();
        let local = localize(&sys, &patch, &pts, 1e-8).unwrap();
        assert!(local.closedness < 1e-14);
        for gauge in [Gauge::MinNorm, Gauge::DarbouxDiagonal] {
            assert!(glue_invariance(&sys, &local, &pts, gauge).unwrap() < 1e-12);
        }
    }
}

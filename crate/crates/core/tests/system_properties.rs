mod common;

use std::f64::consts::PI;

use common::{field, smooth};
use lcks::atlas::localize;
use lcks::calculus::{FormField, ScalarField};
use lcks::dynamics::{solve_linear, FlatMatrix};
use lcks::hj::{hj_residual, lemma_gap, relatedness_defect, Section};
use lcks::problem::{Problem, ProblemFile};
use lcks::region::Region;
use lcks::{Gauge, HdwSystem, PhaseBundle};
use proptest::prelude::*;

fn square(n: usize) -> Region {
    Region::Box {
        lo: vec![-1.5; n],
        hi: vec![1.5; n],
        exclude_radius: 0.0,
    }
}

/// Phase names `q1..qn, p_1_1..p_k_n` substituted for the generic `q1..q{n+nk}`.
fn on_phase(source: &str, n: usize, k: usize) -> String {
    let mut out = source.to_string();
    for j in (n + 1..=n + n * k).rev() {
        let m = j - n - 1;
        out = out.replace(&format!("q{j}"), &format!("p_{}_{}", m / n + 1, m % n + 1));
    }
    out
}

/// A system on the plane with exact Lee form `ϑ = df` and a Hamiltonian
/// quadratic in the momenta plus a random smooth term.
fn random_system(f: &ScalarField, k: usize, extra: &str) -> HdwSystem {
    let vartheta = FormField::scalar(f.clone()).exterior_derivative().unwrap();
    let bundle = PhaseBundle::build(2, k, vartheta, square(2), None).unwrap();
    let kinetic: Vec<String> = (1..=k)
        .flat_map(|a| (1..=2).map(move |i| format!("p_{a}_{i}^2")))
        .collect();
    let h = format!("({})/2 + {}", kinetic.join(" + "), on_phase(extra, 2, k));
    let h = ScalarField::parse(&h, bundle.scope()).unwrap();
    HdwSystem::new(&bundle, h).unwrap()
}

fn plane_point(k: usize) -> impl Strategy<Value = Vec<f64>> {
    (0.2..2.0_f64, -PI..PI, proptest::collection::vec(-10.0..10.0_f64, 2 * k)).prop_map(|(r, phi, p)| {
        let mut z = vec![r * phi.cos(), r * phi.sin()];
        z.extend(p);
        z
    })
}

fn plane(k: usize) -> Problem {
    ProblemFile::punctured_plane(k).build().unwrap()
}

fn flatten(v: &[Vec<f64>]) -> Vec<f64> {
    v.iter().flatten().copied().collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn gauges_share_base_components_and_differ_by_kernel(
        (k, z) in (1..=3usize).prop_flat_map(|k| (Just(k), plane_point(k))),
    ) {
        let p = plane(k);
        let a = p.system.solve(&z, Gauge::MinNorm).unwrap();
        let b = p.system.solve(&z, Gauge::DarbouxDiagonal).unwrap();
        prop_assert!(a.residual < 1e-9 && b.residual < 1e-9, "{} {}", a.residual, b.residual);
        for (xa, xb) in a.fields.iter().zip(&b.fields) {
            prop_assert!(max_abs(&[xa[0] - xb[0], xa[1] - xb[1]]) < 1e-9);
        }
        let diff: Vec<f64> = flatten(&a.fields).iter().zip(flatten(&b.fields)).map(|(u, v)| u - v).collect();
        let mut rest = diff.clone();
        for basis in p.system.kernel_basis(&z).unwrap() {
            let e = flatten(&basis);
            let c = dot(&diff, &e);
            for (r, ei) in rest.iter_mut().zip(&e) {
                *r -= c * ei;
            }
        }
        prop_assert!(max_abs(&rest) < 1e-8, "off-kernel part {}", max_abs(&rest));
    }

    #[test]
    fn kernel_dimension_of_darboux_bundles(
        n in 1..=3usize,
        k in 1..=3usize,
        seed in proptest::collection::vec(-1.0..1.0_f64, 12),
    ) {
        let bundle = PhaseBundle::darboux(n, k, square(n)).unwrap();
        let dim = bundle.dim();
        let h = ScalarField::zero(dim);
        let system = HdwSystem::new(&bundle, h).unwrap();
        let z: Vec<f64> = (0..dim).map(|i| seed[i % seed.len()]).collect();
        prop_assert_eq!(system.kernel_basis(&z).unwrap().len(), n * (k * k - 1));
    }

    #[test]
    fn lee_lift_is_semi_basic(f in field(2), k in 1..=3usize) {
        let vartheta = FormField::scalar(f).exterior_derivative().unwrap();
        let bundle = PhaseBundle::build(2, k, vartheta, square(2), None).unwrap();
        for j in 2..bundle.dim() {
            prop_assert!(bundle.theta().coefficient(&[j]).is_none());
        }
    }

    #[test]
    fn scaling_the_system_keeps_every_gauge(
        (k, z) in (1..=3usize).prop_flat_map(|k| (Just(k), plane_point(k))),
        c in 0.01..100.0_f64,
    ) {
        let p = plane(k);
        let forms = p.bundle().omega_thetas();
        let scale = ScalarField::constant(p.bundle().dim(), c);
        let scaled: Vec<FormField> = forms.iter().map(|w| w.times(&scale).unwrap()).collect();
        let rhs = nalgebra::DVector::from_vec(p.system.rhs(&z).unwrap());
        for gauge in [Gauge::MinNorm, Gauge::DarbouxDiagonal] {
            let plain = solve_linear(&FlatMatrix::from_forms(forms, &z).unwrap(), &rhs, 2, gauge).unwrap();
            let both = solve_linear(&FlatMatrix::from_forms(&scaled, &z).unwrap(), &(&rhs * c), 2, gauge).unwrap();
            let gap = max_abs(&flatten(&plain.fields).iter().zip(flatten(&both.fields)).map(|(u, v)| u - v).collect::<Vec<_>>());
            prop_assert!(gap < 1e-8 * max_abs(&flatten(&plain.fields)).max(1.0), "{gauge}: {gap}");
        }
    }

    #[test]
    fn localization_inverts(k in 1..=2usize, patch in 0..3usize, seed in any::<u64>()) {
        let p = plane(k);
        let atlas = p.atlas.as_ref().unwrap();
        let patch = &atlas.patches()[patch];
        let points = patch.sample_phase(p.bundle(), 5, 10.0, &mut lcks::region::seeded_rng(seed)).unwrap();
        let local = localize(&p.system, patch, &points, 1e-8).unwrap();
        for z in &points {
            let w = patch.to_reference(z).unwrap();
            let factor = patch.sigma().eval(&w[..2]).unwrap().exp();
            for (l, g) in local.forms.iter().zip(&local.global_forms) {
                let back = l.evaluate(z).unwrap();
                let global = g.evaluate(z).unwrap();
                let gap = (0..back.dim()).flat_map(|i| (0..back.dim()).map(move |j| (i, j)))
                    .map(|(i, j)| (factor * back.coefficient(&[i, j]) - global.coefficient(&[i, j])).abs())
                    .fold(0.0, f64::max);
                prop_assert!(gap <= 1e-13 * global.norm().max(1.0), "gap {}", gap);
            }
        }
    }

    #[test]
    fn transition_factors_are_consistent(q in (0.2..2.0_f64, -PI..PI)) {
        let p = plane(1);
        let atlas = p.atlas.as_ref().unwrap();
        let q = [q.0 * q.1.cos(), q.0 * q.1.sin()];
        for a in 0..3 {
            prop_assert_eq!(atlas.transition(a, a, &q).unwrap(), 1.0);
            for b in 0..3 {
                let round = atlas.transition(a, b, &q).unwrap() * atlas.transition(b, a, &q).unwrap();
                prop_assert!((round - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn pulled_back_differential_identity(
        f in field(2),
        k in 1..=2usize,
        extra in smooth(6),
        components in proptest::collection::vec(smooth(2), 4),
        q in common::point(2),
    ) {
        let extra = extra.replace("q5", "q1").replace("q6", "q2");
        let system = random_system(&f, k, &extra);
        let rows: Vec<Vec<String>> = components.chunks(2).take(k).map(|c| c.to_vec()).collect();
        let gamma = Section::parse(system.bundle(), &rows).unwrap();
        let r = hj_residual(&system, &gamma, std::slice::from_ref(&q)).unwrap();
        prop_assert!(r.identity_gap <= 1e-8 * r.residual.max(1.0), "gap {}", r.identity_gap);
    }

    #[test]
    fn relatedness_defect_is_vertical(
        f in field(2),
        extra in smooth(4),
        components in proptest::collection::vec(smooth(2), 4),
        q in common::point(2),
    ) {
        let system = random_system(&f, 2, &extra);
        let rows: Vec<Vec<String>> = components.chunks(2).map(|c| c.to_vec()).collect();
        let gamma = Section::parse(system.bundle(), &rows).unwrap();
        for gauge in [Gauge::MinNorm, Gauge::DarbouxDiagonal] {
            let x = system.field(gauge);
            let r = relatedness_defect(&system, &x, &gamma, std::slice::from_ref(&q)).unwrap();
            prop_assert_eq!(r.vertical, 0.0);
        }
    }

    #[test]
    fn lemma_holds_when_flats_agree(
        f in field(2),
        components in proptest::collection::vec(smooth(2), 4),
        y in proptest::collection::vec(-2.0..2.0_f64, 4),
        weights in proptest::collection::vec(-2.0..2.0_f64, 6),
        q in common::point(2),
    ) {
        let system = random_system(&f, 2, "0");
        let bundle = system.bundle();
        let rows: Vec<Vec<String>> = components.chunks(2).map(|c| c.to_vec()).collect();
        let gamma = Section::parse(bundle, &rows).unwrap();
        let z = gamma.eval(&q).unwrap();
        let jac = gamma.map().jacobian(&q).unwrap();
        let y: Vec<Vec<f64>> = y.chunks(2).map(|c| c.to_vec()).collect();
        // x = T^kγ(y) plus an element of ker ♭.
        let mut x: Vec<Vec<f64>> = y
            .iter()
            .map(|yk| (&jac * nalgebra::DVector::from_column_slice(yk)).iter().copied().collect())
            .collect();
        for (w, basis) in weights.iter().zip(system.kernel_basis(&z).unwrap()) {
            for (xk, bk) in x.iter_mut().zip(&basis) {
                for (xi, bi) in xk.iter_mut().zip(bk) {
                    *xi += w * bi;
                }
            }
        }
        let scale = max_abs(&flatten(&x)).max(1.0) * max_abs(&z).max(1.0);
        let gap = lemma_gap(bundle, &gamma, &q, &x, &y).unwrap();
        prop_assert!(gap < 1e-8 * scale, "gap {}", gap);
    }
}

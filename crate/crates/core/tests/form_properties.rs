mod common;

use common::{field, form, point, vector};
use lcks::calculus::{ChartMap, FormField, FormValue};
use proptest::prelude::*;

const DIM: usize = 3;

fn gap(a: &FormValue, b: &FormValue) -> f64 {
    a.sub(b).norm() / a.norm().max(b.norm()).max(1.0)
}

/// Degrees whose derivatives stay within the supported maximum of 3.
fn degree() -> impl Strategy<Value = usize> {
    0..=1usize
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn swapping_arguments_flips_the_sign(
        a in form(DIM, 2),
        b in form(DIM, 1),
        at in point(DIM),
        u in vector(DIM),
        v in vector(DIM),
        w in vector(DIM),
    ) {
        let two = a.evaluate(&at).unwrap();
        prop_assert_eq!(two.apply(&[&u, &v]), -two.apply(&[&v, &u]));
        let three = b.wedge(&a).unwrap().evaluate(&at).unwrap();
        let forward = three.apply(&[&u, &v, &w]);
        prop_assert!((forward + three.apply(&[&v, &u, &w])).abs() <= 1e-12 * forward.abs().max(1.0));
        prop_assert!((forward + three.apply(&[&u, &w, &v])).abs() <= 1e-12 * forward.abs().max(1.0));
    }

    #[test]
    fn d_squared_vanishes(p in degree().prop_flat_map(|p| form(DIM, p)), at in point(DIM)) {
        let dd = p.exterior_derivative().unwrap().exterior_derivative().unwrap();
        prop_assert!(dd.evaluate(&at).unwrap().norm() < 1e-7);
    }

    #[test]
    fn leibniz_rule(
        a in degree().prop_flat_map(|p| form(DIM, p)),
        b in form(DIM, 1),
        at in point(DIM),
    ) {
        let sign = if a.degree() % 2 == 0 { 1.0 } else { -1.0 };
        let lhs = a.wedge(&b).unwrap().exterior_derivative().unwrap();
        let da_b = a.exterior_derivative().unwrap().wedge(&b).unwrap();
        let a_db = a.wedge(&b.exterior_derivative().unwrap()).unwrap();
        let sign_field = lcks::ScalarField::constant(DIM, sign);
        let rhs = da_b.add(&a_db.times(&sign_field).unwrap()).unwrap();
        let g = gap(&lhs.evaluate(&at).unwrap(), &rhs.evaluate(&at).unwrap());
        prop_assert!(g < 1e-7, "gap {}", g);
    }

    #[test]
    fn twisted_differential_squares_to_minus_d_theta(
        theta in form(DIM, 1),
        a in degree().prop_flat_map(|p| form(DIM, p)),
        at in point(DIM),
    ) {
        let twice = a.lichnerowicz(&theta).unwrap().lichnerowicz(&theta).unwrap();
        let expected = theta.exterior_derivative().unwrap().wedge(&a).unwrap().neg();
        let g = gap(&twice.evaluate(&at).unwrap(), &expected.evaluate(&at).unwrap());
        prop_assert!(g < 1e-7, "gap {}", g);
    }

    #[test]
    fn pullback_commutes_with_d(
        a in (0..=2usize).prop_flat_map(|p| form(DIM, p)),
        components in proptest::collection::vec(field(2), DIM),
        at in point(2),
    ) {
        let map = ChartMap::new(2, components).unwrap();
        let image = map.apply(&at).unwrap();
        prop_assume!(image.iter().all(|c| c.is_finite()));
        let lhs = a.exterior_derivative().unwrap().pullback(&map).unwrap();
        let rhs = a.pullback(&map).unwrap().exterior_derivative().unwrap();
        let g = gap(&lhs.evaluate(&at).unwrap(), &rhs.evaluate(&at).unwrap());
        prop_assert!(g < 1e-6, "gap {}", g);
    }

    #[test]
    fn symbolic_and_pointwise_contraction_agree(a in form(DIM, 2), at in point(DIM), v in vector(DIM)) {
        let fields: Vec<_> = v.iter().map(|&c| lcks::ScalarField::constant(DIM, c)).collect();
        let symbolic = a.interior(&fields).unwrap().evaluate(&at).unwrap();
        let pointwise = a.evaluate(&at).unwrap().interior(&v).unwrap();
        prop_assert!(gap(&symbolic, &pointwise) < 1e-14);
    }
}

#[test]
fn wedge_of_one_forms_is_the_determinant() {
    let dx = FormField::one_form(vec![
        lcks::ScalarField::constant(2, 1.0),
        lcks::ScalarField::zero(2),
    ])
    .unwrap();
    let dy = FormField::one_form(vec![lcks::ScalarField::zero(2), lcks::ScalarField::constant(2, 1.0)]).unwrap();
    let w = dx.wedge(&dy).unwrap().evaluate(&[0.0, 0.0]).unwrap();
    assert_eq!(w.apply(&[&[1.0, 0.0], &[0.0, 1.0]]), 1.0);
}

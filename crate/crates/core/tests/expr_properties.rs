mod common;

use common::{point, scope, smooth, vector};
use lcks::expr::Expression;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn print_then_parse_is_identity(source in smooth(3)) {
        let s = scope(&["q1", "q2", "q3"]);
        let e = Expression::parse(&source, &s).unwrap();
        let again = Expression::parse(&e.to_string(), &s).unwrap();
        prop_assert_eq!(&again, &e);
        prop_assert_eq!(again.to_string(), e.to_string());
    }

    #[test]
    fn dual_derivative_matches_central_differences(source in smooth(3), at in point(3), dir in vector(3)) {
        let e = Expression::parse(&source, &scope(&["q1", "q2", "q3"])).unwrap();
        let (_, exact) = e.directional_derivative(&at, &dir).unwrap();
        let h = 1e-6;
        let shifted = |s: f64| -> Vec<f64> { at.iter().zip(&dir).map(|(p, d)| p + s * d).collect() };
        let fd = (e.evaluate(&shifted(h)).unwrap() - e.evaluate(&shifted(-h)).unwrap()) / (2.0 * h);
        let scale = e.evaluate(&at).unwrap().abs().max(1.0);
        prop_assert!((exact - fd).abs() <= 1e-6 * scale.max(exact.abs()), "{} vs {}", exact, fd);
    }

    #[test]
    fn derivative_is_linear_in_the_direction(
        source in smooth(3),
        at in point(3),
        u in vector(3),
        v in vector(3),
        a in -2.0..2.0_f64,
        b in -2.0..2.0_f64,
    ) {
        let e = Expression::parse(&source, &scope(&["q1", "q2", "q3"])).unwrap();
        let du = e.directional_derivative(&at, &u).unwrap().1;
        let dv = e.directional_derivative(&at, &v).unwrap().1;
        let w: Vec<f64> = u.iter().zip(&v).map(|(x, y)| a * x + b * y).collect();
        let dw = e.directional_derivative(&at, &w).unwrap().1;
        let scale = 1.0 + (a * du).abs() + (b * dv).abs();
        prop_assert!((dw - (a * du + b * dv)).abs() <= 1e-12 * scale, "{} vs {}", dw, a * du + b * dv);
    }
}

//! Strategies shared by the property tests.

#![allow(dead_code)]

use std::sync::Arc;

use lcks::calculus::{FormField, ScalarField};
use lcks::expr::VariableScope;
use proptest::prelude::*;

pub fn scope(names: &[&str]) -> Arc<VariableScope> {
    VariableScope::new(names.iter().copied()).unwrap().into_shared()
}

fn constant() -> impl Strategy<Value = String> {
    (-3.0..3.0_f64).prop_map(|c| format!("({c:.3})"))
}

/// Smooth expressions in `q1..q{dim}` that stay bounded on `[-1.5, 1.5]^dim`.
pub fn smooth(dim: usize) -> BoxedStrategy<String> {
    let var = (1..=dim).prop_map(|i| format!("q{i}"));
    let leaf = prop_oneof![var, constant()];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} + {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("({a} - {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}*{b}")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("{a}/(1 + ({b})^2)")),
            inner.clone().prop_map(|a| format!("sin({a})")),
            inner.clone().prop_map(|a| format!("cos({a})")),
            inner.clone().prop_map(|a| format!("exp(sin({a}))")),
            inner.clone().prop_map(|a| format!("-({a})^2")),
            inner.prop_map(|a| format!("sqrt(1 + ({a})^2)")),
        ]
    })
    .boxed()
}

pub fn field(dim: usize) -> BoxedStrategy<ScalarField> {
    let s = VariableScope::new((1..=dim).map(|i| format!("q{i}"))).unwrap().into_shared();
    smooth(dim).prop_map(move |e| ScalarField::parse(&e, &s).unwrap()).boxed()
}

/// All increasing index tuples of length `degree` below `dim`.
pub fn tuples(dim: usize, degree: usize) -> Vec<Vec<usize>> {
    if degree == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for t in tuples(dim, degree - 1) {
        let from = t.last().map_or(0, |&l| l + 1);
        for i in from..dim {
            let mut next = t.clone();
            next.push(i);
            out.push(next);
        }
    }
    out
}

/// A form of the given degree with random smooth coefficients.
pub fn form(dim: usize, degree: usize) -> BoxedStrategy<FormField> {
    let keys = tuples(dim, degree);
    proptest::collection::vec(field(dim), keys.len())
        .prop_map(move |coeffs| FormField::from_terms(degree, dim, keys.clone().into_iter().zip(coeffs)).unwrap())
        .boxed()
}

pub fn point(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.5..1.5_f64, dim)
}

pub fn vector(dim: usize) -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(-1.0..1.0_f64, dim)
}

/// `|a − b| ≤ tol·max(1, |a|, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1.0_f64.max(a.abs()).max(b.abs())
}

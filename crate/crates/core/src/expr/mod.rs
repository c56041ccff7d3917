//! A small arithmetic expression language for coefficient functions.
//!
//! Expressions are parsed against a [`VariableScope`] that fixes the
//! ordering of chart coordinates. Evaluation is generic over [`Scalar`], so
//! the same tree is evaluated with plain `f64`, with [`Dual`] numbers for a
//! directional derivative, or with nested jets for the exterior calculus.
//!
//! ```
//! use lcks::expr::{Expression, VariableScope};
//!
//! let scope = VariableScope::new(["x", "y", "px", "py"]).unwrap().into_shared();
//! let h = Expression::parse("(px^2 + py^2)/2", &scope).unwrap();
//! assert_eq!(h.evaluate(&[1.0, 0.0, 1.0, 0.0]).unwrap(), 0.5);
//!
//! let (value, slope) = h
//!     .directional_derivative(&[1.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 1.0, 0.0])
//!     .unwrap();
//! assert_eq!((value, slope), (0.5, 1.0));
//! ```

mod ast;
mod lexer;
mod number;
mod parser;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

pub use ast::{BinaryOp, Function, Node};
pub use number::{Dual, Scalar};
pub(crate) use number::{kink_sign, power};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ExprError {
    #[error("syntax error at offset {position}: expected {expected}, found {found}")]
    Syntax {
        position: usize,
        expected: String,
        found: String,
    },
    #[error("unknown variable `{name}` at offset {position}")]
    UnknownVariable { name: String, position: usize },
    #[error("unknown function `{name}` at offset {position}")]
    UnknownFunction { name: String, position: usize },
    #[error("{function} is undefined at argument {argument}")]
    Domain { function: &'static str, argument: f64 },
    #[error("point has {found} coordinates, scope declares {expected}")]
    PointDimension { expected: usize, found: usize },
    #[error("variable name `{0}` declared twice")]
    DuplicateVariable(String),
}

/// Ordered variable names bound to chart-coordinate indices.
///
/// Every name maps to exactly one index. Aliases are extra names for an
/// existing index; printing always uses the primary name.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableScope {
    names: Vec<String>,
    lookup: HashMap<String, usize>,
}

impl VariableScope {
    pub fn new<I, S>(names: I) -> Result<Self, ExprError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut scope = VariableScope {
            names: Vec::new(),
            lookup: HashMap::new(),
        };
        for name in names {
            let name = name.into();
            if scope.lookup.contains_key(&name) {
                return Err(ExprError::DuplicateVariable(name));
            }
            scope.lookup.insert(name.clone(), scope.names.len());
            scope.names.push(name);
        }
        Ok(scope)
    }

    /// Registers `alias` as another name for coordinate `index`.
    pub fn with_alias(mut self, alias: impl Into<String>, index: usize) -> Result<Self, ExprError> {
        let alias = alias.into();
        assert!(index < self.names.len(), "alias index out of range");
        if self.lookup.contains_key(&alias) {
            return Err(ExprError::DuplicateVariable(alias));
        }
        self.lookup.insert(alias, index);
        Ok(self)
    }

    pub fn into_shared(self) -> Arc<VariableScope> {
        Arc::new(self)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.lookup.get(name).copied()
    }
}

/// A parsed expression together with the scope its variables refer to.
#[derive(Debug, Clone)]
pub struct Expression {
    root: Node,
    scope: Arc<VariableScope>,
}

impl PartialEq for Expression {
    fn eq(&self, other: &Self) -> bool {
        self.root == other.root && self.scope.names == other.scope.names
    }
}

impl Expression {
    pub fn parse(source: &str, scope: &Arc<VariableScope>) -> Result<Self, ExprError> {
        let tokens = lexer::tokenize(source)?;
        let root = parser::Parser::new(tokens, scope).parse_complete()?;
        Ok(Expression {
            root,
            scope: Arc::clone(scope),
        })
    }

    /// Wraps an already-built tree. Panics if it references a variable
    /// outside `scope`.
    pub fn from_node(root: Node, scope: Arc<VariableScope>) -> Self {
        if let Some(max) = root.max_variable() {
            assert!(max < scope.len(), "node references variable {max} outside scope");
        }
        Expression { root, scope }
    }

    pub fn root(&self) -> &Node {
        &self.root
    }

    pub fn scope(&self) -> &Arc<VariableScope> {
        &self.scope
    }

    pub fn uses_variable(&self, index: usize) -> bool {
        self.root.uses_variable(index)
    }

    pub fn evaluate(&self, point: &[f64]) -> Result<f64, ExprError> {
        self.evaluate_with(point)
    }

    /// Value and derivative along `direction`, by forward-mode dual arithmetic.
    pub fn directional_derivative(
        &self,
        point: &[f64],
        direction: &[f64],
    ) -> Result<(f64, f64), ExprError> {
        if direction.len() != point.len() {
            return Err(ExprError::PointDimension {
                expected: point.len(),
                found: direction.len(),
            });
        }
        let duals: Vec<Dual> = point
            .iter()
            .zip(direction)
            .map(|(&x, &dx)| Dual::new(x, dx))
            .collect();
        let result = self.evaluate_with(&duals)?;
        Ok((result.value, result.deriv))
    }

    /// Evaluates over any [`Scalar`] type.
    pub fn evaluate_with<S: Scalar>(&self, point: &[S]) -> Result<S, ExprError> {
        if point.len() != self.scope.len() {
            return Err(ExprError::PointDimension {
                expected: self.scope.len(),
                found: point.len(),
            });
        }
        eval_node(&self.root, point)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.root.write(f, &self.scope)
    }
}

fn domain(function: &'static str, argument: f64) -> ExprError {
    ExprError::Domain { function, argument }
}

fn eval_node<S: Scalar>(node: &Node, point: &[S]) -> Result<S, ExprError> {
    Ok(match node {
        Node::Literal(v) => S::constant(*v),
        Node::Variable(i) => point[*i].clone(),
        Node::Neg(inner) => -eval_node(inner, point)?,
        Node::Binary(op, lhs, rhs) => {
            let a = eval_node(lhs, point)?;
            let b = eval_node(rhs, point)?;
            match op {
                BinaryOp::Add => a + b,
                BinaryOp::Sub => a - b,
                BinaryOp::Mul => a * b,
                BinaryOp::Div => {
                    if b.re() == 0.0 {
                        return Err(domain("division", a.re()));
                    }
                    a / b
                }
            }
        }
        Node::Power(base, exponent) => {
            let b = eval_node(base, point)?;
            let x = b.re();
            if *exponent == 0.0 {
                S::constant(1.0)
            } else if *exponent == 1.0 {
                b
            } else {
                if x < 0.0 && exponent.fract() != 0.0 {
                    return Err(domain("fractional power", x));
                }
                if x == 0.0 && *exponent < 0.0 {
                    return Err(domain("negative power", x));
                }
                b.powf(*exponent)
            }
        }
        Node::Call(func, args) => {
            let a = eval_node(&args[0], point)?;
            let x = a.re();
            match func {
                Function::Sin => a.sin(),
                Function::Cos => a.cos(),
                Function::Exp => a.exp(),
                Function::Ln => {
                    if x <= 0.0 {
                        return Err(domain("ln", x));
                    }
                    a.ln()
                }
                Function::Sqrt => {
                    if x < 0.0 {
                        return Err(domain("sqrt", x));
                    }
                    a.sqrt()
                }
                Function::Abs => a.abs(),
                Function::Atan2 => {
                    let b = eval_node(&args[1], point)?;
                    if x == 0.0 && b.re() == 0.0 {
                        return Err(domain("atan2", 0.0));
                    }
                    a.atan2(&b)
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scope(names: &[&str]) -> Arc<VariableScope> {
        VariableScope::new(names.iter().copied()).unwrap().into_shared()
    }

    fn parse(src: &str, names: &[&str]) -> Expression {
        Expression::parse(src, &scope(names)).unwrap()
    }

    #[test]
    fn single_variable_is_a_variable_node() {
        let e = parse("x", &["x"]);
        assert_eq!(e.root(), &Node::Variable(0));
    }

    #[test]
    fn precedence_and_associativity() {
        let s = &["a", "b", "c"];
        // power binds tighter than unary minus
        assert_eq!(
            parse("-a^2", s).root(),
            &Node::Neg(Box::new(Node::Power(Box::new(Node::Variable(0)), 2.0)))
        );
        assert_eq!(parse("a - b - c", s).evaluate(&[1.0, 2.0, 3.0]).unwrap(), -4.0);
        assert_eq!(parse("a / b / c", s).evaluate(&[12.0, 2.0, 3.0]).unwrap(), 2.0);
        assert_eq!(parse("a + b * c", s).evaluate(&[1.0, 2.0, 3.0]).unwrap(), 7.0);
        assert_eq!(parse("2^3^2", s).root(), &Node::Power(Box::new(Node::Literal(2.0)), 9.0));
        assert_eq!(parse("a^-1", s).evaluate(&[4.0, 0.0, 0.0]).unwrap(), 0.25);
        assert_eq!(parse("a^(-0.5)", s).evaluate(&[4.0, 0.0, 0.0]).unwrap(), 0.5);
        assert_eq!(parse("a*-b", s).evaluate(&[2.0, 3.0, 0.0]).unwrap(), -6.0);
    }

    #[test]
    fn hamiltonian_of_the_quadratic_model() {
        let h = parse("(px^2+py^2)/2", &["x", "y", "px", "py"]);
        assert_eq!(h.evaluate(&[1.0, 0.0, 1.0, 0.0]).unwrap(), 0.5);
        let (v, d) = h
            .directional_derivative(&[1.0, 0.0, 1.0, 0.0], &[0.0, 0.0, 1.0, 0.0])
            .unwrap();
        assert_eq!((v, d), (0.5, 1.0));
    }

    #[test]
    fn lee_form_y_coefficient() {
        let e = parse("2*x/(x^2+y^2)", &["x", "y"]);
        assert_eq!(e.evaluate(&[1.0, 0.0]).unwrap(), 2.0);
        let (_, d) = e.directional_derivative(&[1.0, 0.0], &[1.0, 0.0]).unwrap();
        assert!((d + 2.0).abs() < 1e-15);
    }

    #[test]
    fn constants_have_zero_derivative() {
        let e = parse("3.5", &["x"]);
        assert_eq!(e.evaluate(&[7.0]).unwrap(), 3.5);
        assert_eq!(e.directional_derivative(&[7.0], &[1.0]).unwrap(), (3.5, 0.0));
    }

    #[test]
    fn error_positions() {
        let s = scope(&["x"]);
        match Expression::parse("x + * 2", &s) {
            Err(ExprError::Syntax { position, .. }) => assert_eq!(position, 4),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            Expression::parse("x + z", &s),
            Err(ExprError::UnknownVariable { position: 4, .. })
        ));
        assert!(matches!(
            Expression::parse("tan(x)", &s),
            Err(ExprError::UnknownFunction { position: 0, .. })
        ));
        assert!(matches!(Expression::parse("", &s), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("(x", &s), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("x^x", &s), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("atan2(x)", &s), Err(ExprError::Syntax { .. })));
        assert!(matches!(Expression::parse("x y", &s), Err(ExprError::Syntax { .. })));
    }

    #[test]
    fn domain_errors_name_the_function() {
        let s = &["x"];
        assert_eq!(
            parse("ln(x)", s).evaluate(&[-1.0]),
            Err(ExprError::Domain { function: "ln", argument: -1.0 })
        );
        assert!(matches!(
            parse("1/x", s).evaluate(&[0.0]),
            Err(ExprError::Domain { function: "division", .. })
        ));
        assert!(parse("sqrt(x)", s).evaluate(&[-4.0]).is_err());
        assert!(parse("x^0.5", s).evaluate(&[-4.0]).is_err());
        assert!(parse("x^-2", s).evaluate(&[0.0]).is_err());
        assert!(parse("atan2(x, x)", s).evaluate(&[0.0]).is_err());
        assert_eq!(parse("x^3", s).evaluate(&[-2.0]).unwrap(), -8.0);
    }

    #[test]
    fn point_dimension_is_checked() {
        let e = parse("x", &["x", "y"]);
        assert!(matches!(e.evaluate(&[1.0]), Err(ExprError::PointDimension { .. })));
    }

    #[test]
    fn aliases_resolve_to_primary_index_and_print_primary_name() {
        let s = VariableScope::new(["q1", "p_1_1"])
            .unwrap()
            .with_alias("px", 1)
            .unwrap()
            .into_shared();
        let e = Expression::parse("px*q1", &s).unwrap();
        assert_eq!(e.to_string(), "p_1_1*q1");
        assert!(VariableScope::new(["a", "a"]).is_err());
    }

    #[test]
    fn printing_is_minimal_but_faithful() {
        let s = &["a", "b", "c"];
        for src in [
            "a - (b - c)",
            "a/(b*c)",
            "(a + b)^2.0",
            "-(a + b)",
            "(-a)^2.0",
            "(a^2.0)^3.0",
            "atan2(a, b)*exp(-c)",
            "a + (b + c)",
        ] {
            let e = parse(src, s);
            assert_eq!(e.to_string(), src);
        }
    }
}

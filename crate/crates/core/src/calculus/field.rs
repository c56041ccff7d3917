use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use super::jet::Jet;
use super::map::ChartMap;
use crate::expr::{ExprError, Expression, VariableScope};

/// A differentiable function on a chart of dimension `dim`.
///
/// Fields are immutable trees. Partial derivatives are built structurally
/// (sum, product and chain rules) down to expression leaves, whose mixed
/// partials are evaluated exactly with [`Jet`] arithmetic. Structural zeros
/// are pruned as the tree is built, so constant Darboux coefficients stay
/// constant through `d` and pullbacks.
#[derive(Clone)]
pub struct ScalarField {
    dim: usize,
    node: Arc<Node>,
}

enum Node {
    Const(f64),
    Coordinate(usize),
    Expr(Expression),
    /// Mixed partial of an expression along the (sorted) axes.
    Derivative { expr: Expression, axes: Vec<usize> },
    Add(ScalarField, ScalarField),
    Sub(ScalarField, ScalarField),
    Mul(ScalarField, ScalarField),
    Div(ScalarField, ScalarField),
    Neg(ScalarField),
    Scale(f64, ScalarField),
    Exp(ScalarField),
    Compose(ScalarField, ChartMap),
}

impl ScalarField {
    fn new(dim: usize, node: Node) -> ScalarField {
        ScalarField {
            dim,
            node: Arc::new(node),
        }
    }

    pub fn constant(dim: usize, value: f64) -> ScalarField {
        ScalarField::new(dim, Node::Const(value))
    }

    pub fn zero(dim: usize) -> ScalarField {
        ScalarField::constant(dim, 0.0)
    }

    /// The coordinate function `x_index`.
    pub fn coordinate(dim: usize, index: usize) -> ScalarField {
        assert!(index < dim, "coordinate {index} outside dimension {dim}");
        ScalarField::new(dim, Node::Coordinate(index))
    }

    pub fn from_expression(expr: Expression) -> ScalarField {
        let dim = expr.scope().len();
        match expr.root() {
            crate::expr::Node::Literal(v) => ScalarField::constant(dim, *v),
            crate::expr::Node::Variable(i) => ScalarField::coordinate(dim, *i),
            _ => ScalarField::new(dim, Node::Expr(expr)),
        }
    }

    pub fn parse(source: &str, scope: &Arc<VariableScope>) -> Result<ScalarField, ExprError> {
        Expression::parse(source, scope).map(ScalarField::from_expression)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self.node {
            Node::Const(v) => Some(v),
            _ => None,
        }
    }

    /// True only for a structural zero; a field that happens to vanish
    /// numerically is not detected.
    pub fn is_zero(&self) -> bool {
        self.as_constant() == Some(0.0)
    }

    pub fn eval(&self, point: &[f64]) -> Result<f64, ExprError> {
        if point.len() != self.dim {
            return Err(ExprError::PointDimension {
                expected: self.dim,
                found: point.len(),
            });
        }
        self.eval_unchecked(point)
    }

    fn eval_unchecked(&self, point: &[f64]) -> Result<f64, ExprError> {
        Ok(match &*self.node {
            Node::Const(v) => *v,
            Node::Coordinate(i) => point[*i],
            Node::Expr(expr) => expr.evaluate(point)?,
            Node::Derivative { expr, axes } => mixed_partial(expr, axes, point)?,
            Node::Add(a, b) => a.eval_unchecked(point)? + b.eval_unchecked(point)?,
            Node::Sub(a, b) => a.eval_unchecked(point)? - b.eval_unchecked(point)?,
            Node::Mul(a, b) => a.eval_unchecked(point)? * b.eval_unchecked(point)?,
            Node::Div(a, b) => {
                let denominator = b.eval_unchecked(point)?;
                if denominator == 0.0 {
                    return Err(ExprError::Domain {
                        function: "division",
                        argument: 0.0,
                    });
                }
                a.eval_unchecked(point)? / denominator
            }
            Node::Neg(a) => -a.eval_unchecked(point)?,
            Node::Scale(c, a) => c * a.eval_unchecked(point)?,
            Node::Exp(a) => a.eval_unchecked(point)?.exp(),
            Node::Compose(f, map) => f.eval_unchecked(&map.apply(point)?)?,
        })
    }

    /// ∂/∂x_axis as a new field.
    pub fn partial(&self, axis: usize) -> ScalarField {
        assert!(axis < self.dim, "axis {axis} outside dimension {}", self.dim);
        let dim = self.dim;
        match &*self.node {
            Node::Const(_) => ScalarField::zero(dim),
            Node::Coordinate(i) => ScalarField::constant(dim, if *i == axis { 1.0 } else { 0.0 }),
            Node::Expr(expr) => {
                if expr.uses_variable(axis) {
                    ScalarField::new(
                        dim,
                        Node::Derivative {
                            expr: expr.clone(),
                            axes: vec![axis],
                        },
                    )
                } else {
                    ScalarField::zero(dim)
                }
            }
            Node::Derivative { expr, axes } => {
                if expr.uses_variable(axis) {
                    let mut axes = axes.clone();
                    axes.push(axis);
                    axes.sort_unstable();
                    ScalarField::new(
                        dim,
                        Node::Derivative {
                            expr: expr.clone(),
                            axes,
                        },
                    )
                } else {
                    ScalarField::zero(dim)
                }
            }
            Node::Add(a, b) => a.partial(axis) + b.partial(axis),
            Node::Sub(a, b) => a.partial(axis) - b.partial(axis),
            Node::Mul(a, b) => &a.partial(axis) * b + a * &b.partial(axis),
            Node::Div(a, b) => {
                let numerator = &a.partial(axis) * b - a * &b.partial(axis);
                numerator.div(&(b * b))
            }
            Node::Neg(a) => -a.partial(axis),
            Node::Scale(c, a) => a.partial(axis).scale(*c),
            Node::Exp(a) => self * &a.partial(axis),
            Node::Compose(f, map) => {
                let jacobian = map.jacobian_fields();
                let mut total = ScalarField::zero(dim);
                for (m, row) in jacobian.iter().enumerate() {
                    if row[axis].is_zero() {
                        continue;
                    }
                    let outer = f.partial(m);
                    if outer.is_zero() {
                        continue;
                    }
                    total = total + &outer.compose(map) * &row[axis];
                }
                total
            }
        }
    }

    pub fn scale(&self, c: f64) -> ScalarField {
        if c == 0.0 {
            return ScalarField::zero(self.dim);
        }
        if c == 1.0 {
            return self.clone();
        }
        match &*self.node {
            Node::Const(v) => ScalarField::constant(self.dim, c * v),
            Node::Scale(d, inner) => inner.scale(c * d),
            _ => ScalarField::new(self.dim, Node::Scale(c, self.clone())),
        }
    }

    pub fn div(&self, rhs: &ScalarField) -> ScalarField {
        check_dims(self, rhs);
        if self.is_zero() {
            return self.clone();
        }
        match rhs.as_constant() {
            Some(c) if c != 0.0 => self.scale(1.0 / c),
            _ => ScalarField::new(self.dim, Node::Div(self.clone(), rhs.clone())),
        }
    }

    pub fn exp(&self) -> ScalarField {
        match self.as_constant() {
            Some(v) => ScalarField::constant(self.dim, v.exp()),
            None => ScalarField::new(self.dim, Node::Exp(self.clone())),
        }
    }

    /// `self ∘ map`, a field on the source chart of `map`.
    pub fn compose(&self, map: &ChartMap) -> ScalarField {
        assert_eq!(self.dim, map.target_dim(), "composition dimension mismatch");
        let dim = map.source_dim();
        match &*self.node {
            Node::Const(v) => ScalarField::constant(dim, *v),
            Node::Coordinate(i) => map.components()[*i].clone(),
            _ => ScalarField::new(dim, Node::Compose(self.clone(), map.clone())),
        }
    }
}

fn check_dims(a: &ScalarField, b: &ScalarField) {
    assert_eq!(a.dim, b.dim, "scalar fields live on charts of different dimension");
}

fn mixed_partial(expr: &Expression, axes: &[usize], point: &[f64]) -> Result<f64, ExprError> {
    if let [axis] = axes {
        let mut direction = vec![0.0; point.len()];
        direction[*axis] = 1.0;
        return Ok(expr.directional_derivative(point, &direction)?.1);
    }
    let level = axes.len();
    let jets: Vec<Jet> = point
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let seeds = axes.iter().enumerate().filter(|(_, &a)| a == j).map(|(m, _)| m);
            Jet::seeded(x, level, seeds)
        })
        .collect();
    Ok(expr.evaluate_with(&jets)?.coefficient((1 << level) - 1))
}

impl Add for ScalarField {
    type Output = ScalarField;
    fn add(self, rhs: ScalarField) -> ScalarField {
        check_dims(&self, &rhs);
        match (self.as_constant(), rhs.as_constant()) {
            (Some(0.0), _) => rhs,
            (_, Some(0.0)) => self,
            (Some(a), Some(b)) => ScalarField::constant(self.dim, a + b),
            _ => ScalarField::new(self.dim, Node::Add(self, rhs)),
        }
    }
}

impl Sub for ScalarField {
    type Output = ScalarField;
    fn sub(self, rhs: ScalarField) -> ScalarField {
        check_dims(&self, &rhs);
        match (self.as_constant(), rhs.as_constant()) {
            (_, Some(0.0)) => self,
            (Some(0.0), _) => -rhs,
            (Some(a), Some(b)) => ScalarField::constant(self.dim, a - b),
            _ => ScalarField::new(self.dim, Node::Sub(self, rhs)),
        }
    }
}

impl Mul for ScalarField {
    type Output = ScalarField;
    fn mul(self, rhs: ScalarField) -> ScalarField {
        check_dims(&self, &rhs);
        match (self.as_constant(), rhs.as_constant()) {
            (Some(a), _) => rhs.scale(a),
            (_, Some(b)) => self.scale(b),
            _ => ScalarField::new(self.dim, Node::Mul(self, rhs)),
        }
    }
}

impl Neg for ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        match &*self.node {
            Node::Const(v) => ScalarField::constant(self.dim, -v),
            Node::Neg(inner) => inner.clone(),
            _ => ScalarField::new(self.dim, Node::Neg(self)),
        }
    }
}

macro_rules! forward_ref_binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&ScalarField> for &ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                $trait::$method(self.clone(), rhs.clone())
            }
        }
        impl $trait<&ScalarField> for ScalarField {
            type Output = ScalarField;
            fn $method(self, rhs: &ScalarField) -> ScalarField {
                $trait::$method(self, rhs.clone())
            }
        }
    };
}

forward_ref_binop!(Add, add);
forward_ref_binop!(Sub, sub);
forward_ref_binop!(Mul, mul);

impl Neg for &ScalarField {
    type Output = ScalarField;
    fn neg(self) -> ScalarField {
        -self.clone()
    }
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &*self.node {
            Node::Const(v) => write!(f, "{v:?}"),
            Node::Coordinate(i) => write!(f, "x{i}"),
            Node::Expr(e) => write!(f, "{{{e}}}"),
            Node::Derivative { expr, axes } => write!(f, "∂{axes:?}{{{expr}}}"),
            Node::Add(a, b) => write!(f, "({a:?} + {b:?})"),
            Node::Sub(a, b) => write!(f, "({a:?} - {b:?})"),
            Node::Mul(a, b) => write!(f, "{a:?}*{b:?}"),
            Node::Div(a, b) => write!(f, "{a:?}/{b:?}"),
            Node::Neg(a) => write!(f, "-{a:?}"),
            Node::Scale(c, a) => write!(f, "{c:?}*{a:?}"),
            Node::Exp(a) => write!(f, "exp({a:?})"),
            Node::Compose(a, _) => write!(f, "({a:?})∘φ"),
        }
    }
}

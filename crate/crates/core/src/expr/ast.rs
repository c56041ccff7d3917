use std::fmt;

use super::VariableScope;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinaryOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinaryOp {
    fn symbol(self) -> &'static str {
        match self {
            BinaryOp::Add => " + ",
            BinaryOp::Sub => " - ",
            BinaryOp::Mul => "*",
            BinaryOp::Div => "/",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinaryOp::Add | BinaryOp::Sub => 1,
            BinaryOp::Mul | BinaryOp::Div => 2,
        }
    }
}

/// The fixed function set of the DSL.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Function {
    Sin,
    Cos,
    Exp,
    Ln,
    Sqrt,
    Atan2,
    Abs,
}

impl Function {
    pub const ALL: [Function; 7] = [
        Function::Sin,
        Function::Cos,
        Function::Exp,
        Function::Ln,
        Function::Sqrt,
        Function::Atan2,
        Function::Abs,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Function::Sin => "sin",
            Function::Cos => "cos",
            Function::Exp => "exp",
            Function::Ln => "ln",
            Function::Sqrt => "sqrt",
            Function::Atan2 => "atan2",
            Function::Abs => "abs",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Function::Atan2 => 2,
            _ => 1,
        }
    }

    pub fn from_name(name: &str) -> Option<Function> {
        Function::ALL.into_iter().find(|f| f.name() == name)
    }
}

/// A node of the expression tree. Variables are stored as indices into the
/// owning [`VariableScope`].
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Literal(f64),
    Variable(usize),
    Neg(Box<Node>),
    Binary(BinaryOp, Box<Node>, Box<Node>),
    /// Power with a literal exponent.
    Power(Box<Node>, f64),
    Call(Function, Vec<Node>),
}

const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Literal(v) if *v < 0.0 || v.is_sign_negative() => PREC_NEG,
            Node::Literal(_) | Node::Variable(_) | Node::Call(..) => PREC_ATOM,
            Node::Neg(_) => PREC_NEG,
            Node::Binary(op, ..) => op.precedence(),
            Node::Power(..) => PREC_POW,
        }
    }

    /// Whether variable `index` occurs anywhere in the tree.
    pub fn uses_variable(&self, index: usize) -> bool {
        match self {
            Node::Literal(_) => false,
            Node::Variable(i) => *i == index,
            Node::Neg(inner) | Node::Power(inner, _) => inner.uses_variable(index),
            Node::Binary(_, a, b) => a.uses_variable(index) || b.uses_variable(index),
            Node::Call(_, args) => args.iter().any(|a| a.uses_variable(index)),
        }
    }

    /// Largest variable index referenced, if any.
    pub fn max_variable(&self) -> Option<usize> {
        match self {
            Node::Literal(_) => None,
            Node::Variable(i) => Some(*i),
            Node::Neg(inner) | Node::Power(inner, _) => inner.max_variable(),
            Node::Binary(_, a, b) => a.max_variable().max(b.max_variable()),
            Node::Call(_, args) => args.iter().filter_map(Node::max_variable).max(),
        }
    }

    pub(crate) fn write(&self, f: &mut fmt::Formatter<'_>, scope: &VariableScope) -> fmt::Result {
        match self {
            Node::Literal(v) => write_literal(f, *v),
            Node::Variable(i) => f.write_str(scope.name(*i)),
            Node::Neg(inner) => {
                f.write_str("-")?;
                write_child(f, inner, inner.precedence() < PREC_NEG, scope)
            }
            Node::Binary(op, lhs, rhs) => {
                let p = op.precedence();
                write_child(f, lhs, lhs.precedence() < p, scope)?;
                f.write_str(op.symbol())?;
                write_child(f, rhs, rhs.precedence() <= p, scope)
            }
            Node::Power(base, exponent) => {
                write_child(f, base, base.precedence() < PREC_ATOM, scope)?;
                f.write_str("^")?;
                write_literal(f, *exponent)
            }
            Node::Call(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, arg) in args.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    arg.write(f, scope)?;
                }
                f.write_str(")")
            }
        }
    }
}

fn write_child(
    f: &mut fmt::Formatter<'_>,
    node: &Node,
    parenthesize: bool,
    scope: &VariableScope,
) -> fmt::Result {
    if parenthesize {
        f.write_str("(")?;
        node.write(f, scope)?;
        f.write_str(")")
    } else {
        node.write(f, scope)
    }
}

// `{:?}` is the shortest representation that parses back to the same f64.
fn write_literal(f: &mut fmt::Formatter<'_>, v: f64) -> fmt::Result {
    write!(f, "{v:?}")
}

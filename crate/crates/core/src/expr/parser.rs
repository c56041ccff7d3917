//! Precedence-climbing parser.
//!
//! ```text
//! expr     := term (('+' | '-') term)*
//! term     := unary (('*' | '/') unary)*
//! unary    := ('-' | '+') unary | power
//! power    := primary ('^' exponent)?
//! exponent := ('-' | '+')? NUMBER ('^' exponent)? | '(' exponent ')'
//! primary  := NUMBER | IDENT | IDENT '(' expr (',' expr)* ')' | '(' expr ')'
//! ```
//!
//! Exponents must reduce to a numeric literal; `2^3^2` folds to `2^9`.

use super::ast::{BinaryOp, Function, Node};
use super::lexer::{Token, TokenKind};
use super::{ExprError, VariableScope};

pub(crate) struct Parser<'a> {
    tokens: Vec<Token>,
    cursor: usize,
    scope: &'a VariableScope,
}

impl<'a> Parser<'a> {
    pub(crate) fn new(tokens: Vec<Token>, scope: &'a VariableScope) -> Self {
        Parser {
            tokens,
            cursor: 0,
            scope,
        }
    }

    pub(crate) fn parse_complete(mut self) -> Result<Node, ExprError> {
        if self.peek().kind == TokenKind::End {
            return Err(self.unexpected("an expression"));
        }
        let node = self.expr()?;
        if self.peek().kind != TokenKind::End {
            return Err(self.unexpected("an operator or end of input"));
        }
        Ok(node)
    }

    fn peek(&self) -> &Token {
        &self.tokens[self.cursor]
    }

    fn advance(&mut self) -> Token {
        let token = self.tokens[self.cursor].clone();
        if token.kind != TokenKind::End {
            self.cursor += 1;
        }
        token
    }

    fn unexpected(&self, expected: &str) -> ExprError {
        let token = self.peek();
        ExprError::Syntax {
            position: token.position,
            expected: expected.to_string(),
            found: token.kind.describe(),
        }
    }

    fn expect(&mut self, kind: TokenKind, expected: &str) -> Result<(), ExprError> {
        if self.peek().kind == kind {
            self.advance();
            Ok(())
        } else {
            Err(self.unexpected(expected))
        }
    }

    fn expr(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Plus => BinaryOp::Add,
                TokenKind::Minus => BinaryOp::Sub,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.term()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Node, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().kind {
                TokenKind::Star => BinaryOp::Mul,
                TokenKind::Slash => BinaryOp::Div,
                _ => return Ok(lhs),
            };
            self.advance();
            let rhs = self.unary()?;
            lhs = Node::Binary(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Node, ExprError> {
        match self.peek().kind {
            TokenKind::Minus => {
                self.advance();
                Ok(Node::Neg(Box::new(self.unary()?)))
            }
            TokenKind::Plus => {
                self.advance();
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Node, ExprError> {
        let base = self.primary()?;
        if self.peek().kind == TokenKind::Caret {
            self.advance();
            let exponent = self.exponent()?;
            return Ok(Node::Power(Box::new(base), exponent));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<f64, ExprError> {
        if self.peek().kind == TokenKind::LParen {
            self.advance();
            let value = self.exponent()?;
            self.expect(TokenKind::RParen, "`)`")?;
            return self.exponent_tail(value);
        }
        let sign = match self.peek().kind {
            TokenKind::Minus => {
                self.advance();
                -1.0
            }
            TokenKind::Plus => {
                self.advance();
                1.0
            }
            _ => 1.0,
        };
        match self.peek().kind {
            TokenKind::Number(v) => {
                self.advance();
                self.exponent_tail(sign * v)
            }
            _ => Err(self.unexpected("a numeric literal exponent")),
        }
    }

    fn exponent_tail(&mut self, value: f64) -> Result<f64, ExprError> {
        if self.peek().kind == TokenKind::Caret {
            self.advance();
            let rhs = self.exponent()?;
            return Ok(value.powf(rhs));
        }
        Ok(value)
    }

    fn primary(&mut self) -> Result<Node, ExprError> {
        let token = self.peek().clone();
        match token.kind {
            TokenKind::Number(v) => {
                self.advance();
                Ok(Node::Literal(v))
            }
            TokenKind::LParen => {
                self.advance();
                let inner = self.expr()?;
                self.expect(TokenKind::RParen, "`)`")?;
                Ok(inner)
            }
            TokenKind::Ident(name) => {
                self.advance();
                if self.peek().kind == TokenKind::LParen {
                    self.call(name, token.position)
                } else {
                    self.scope
                        .index_of(&name)
                        .map(Node::Variable)
                        .ok_or(ExprError::UnknownVariable {
                            name,
                            position: token.position,
                        })
                }
            }
            _ => Err(self.unexpected("a number, identifier or `(`")),
        }
    }

    fn call(&mut self, name: String, position: usize) -> Result<Node, ExprError> {
        let func =
            Function::from_name(&name).ok_or(ExprError::UnknownFunction { name, position })?;
        self.expect(TokenKind::LParen, "`(`")?;
        let mut args = vec![self.expr()?];
        while self.peek().kind == TokenKind::Comma {
            self.advance();
            args.push(self.expr()?);
        }
        if args.len() != func.arity() {
            let expected = format!("{} argument(s) to {}", func.arity(), func.name());
            return Err(self.unexpected(&expected));
        }
        self.expect(TokenKind::RParen, "`)`")?;
        Ok(Node::Call(func, args))
    }
}

//! A small expression language for the arbitrary functions that parametrize
//! Liouville solutions (`f`, `g`, the analytic seed `F`, Goursat and wave
//! data), with exact first and second derivatives.
//!
//! Grammar: numbers, declared variables, `pi`, the imaginary unit `i`
//! (complex evaluation only), `+ - * /`, integer powers `^`, unary minus and
//! the functions `exp ln sin cos sinh cosh sqrt`. Precedence from tightest:
//! `^` (right-associative), unary `-`, `* /`, `+ -`. So `-x^2` is `-(x^2)`.
//!
//! ```
//! use liouville::expr::Expr;
//! let e = Expr::parse("exp(2*x)", &["x"]).unwrap();
//! let r = e.eval_dual(&[0.0], 0).unwrap();
//! assert_eq!((r.value, r.d1, r.d2), (1.0, 2.0, 4.0));
//! ```

mod ast;
mod dual;
mod parse;

pub use ast::{BinOp, Func, Node};
pub use dual::{Jet, Scalar};

use num_complex::Complex64;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseError {
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { name: String, offset: usize },
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("`{name}` takes {expected} argument(s), got {found} (offset {offset})")]
    Arity {
        name: String,
        expected: usize,
        found: usize,
        offset: usize,
    },
    #[error("empty expression")]
    Empty,
    #[error("expected 1 or 2 variables, got {0}")]
    BadVariableCount(usize),
}

impl ParseError {
    pub fn offset(&self) -> Option<usize> {
        match self {
            ParseError::UnknownIdentifier { offset, .. }
            | ParseError::Syntax { offset, .. }
            | ParseError::Arity { offset, .. } => Some(*offset),
            ParseError::Empty | ParseError::BadVariableCount(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("domain error: {reason} in `{subexpr}`")]
    Domain {
        reason: &'static str,
        subexpr: String,
    },
    #[error("the imaginary unit is not available in real evaluation (`{subexpr}`)")]
    ComplexInRealMode { subexpr: String },
    #[error("expected {expected} coordinate(s), got {found}")]
    Dimension { expected: usize, found: usize },
    #[error("no variable with index {0}")]
    NoSuchVariable(usize),
}

/// Value with first and second derivative along one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalResult<S> {
    pub value: S,
    pub d1: S,
    pub d2: S,
}

/// A parsed expression in one or two named variables. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    ast: Node,
    vars: Vec<String>,
}

impl Expr {
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expr, ParseError> {
        if src.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        if vars.is_empty() || vars.len() > 2 {
            return Err(ParseError::BadVariableCount(vars.len()));
        }
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let ast = parse::Parser::new(src, &vars)?.parse_all()?;
        Ok(Expr { ast, vars })
    }

    /// Builds an expression directly from a tree.
    ///
    /// # Panics
    /// If the tree references a variable index outside `vars`.
    pub fn from_ast(ast: Node, vars: &[&str]) -> Expr {
        if let Some(k) = ast.max_var() {
            assert!(k < vars.len(), "variable index {k} out of range");
        }
        Expr {
            ast,
            vars: vars.iter().map(|s| s.to_string()).collect(),
        }
    }

    /// A constant expression in the given variables.
    pub fn constant(value: f64, vars: &[&str]) -> Expr {
        Expr::from_ast(Node::Const(value), vars)
    }

    pub fn ast(&self) -> &Node {
        &self.ast
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == name)
    }

    pub fn is_constant(&self) -> bool {
        !self.ast.has_vars()
    }

    pub fn eval(&self, at: &[f64]) -> Result<f64, EvalError> {
        Ok(self.eval_dual(at, 0)?.value)
    }

    /// Real evaluation with exact derivatives along variable `wrt`.
    pub fn eval_dual(&self, at: &[f64], wrt: usize) -> Result<EvalResult<f64>, EvalError> {
        self.eval_generic(at, wrt)
    }

    /// Complex evaluation with exact (complex) derivatives along `wrt`.
    pub fn eval_dual_complex(
        &self,
        at: &[Complex64],
        wrt: usize,
    ) -> Result<EvalResult<Complex64>, EvalError> {
        self.eval_generic(at, wrt)
    }

    /// `F(z)` and `F'(z)` for a single-variable analytic seed.
    pub fn eval_complex(&self, z: Complex64) -> Result<(Complex64, Complex64), EvalError> {
        let r = self.eval_generic(&[z], 0)?;
        Ok((r.value, r.d1))
    }

    fn eval_generic<S: Scalar>(&self, at: &[S], wrt: usize) -> Result<EvalResult<S>, EvalError> {
        if at.len() != self.vars.len() {
            return Err(EvalError::Dimension {
                expected: self.vars.len(),
                found: at.len(),
            });
        }
        if wrt >= self.vars.len() {
            return Err(EvalError::NoSuchVariable(wrt));
        }
        let point: Vec<Jet<S>> = at
            .iter()
            .enumerate()
            .map(|(k, &v)| {
                if k == wrt {
                    Jet::variable(v)
                } else {
                    Jet::constant(v)
                }
            })
            .collect();
        let j = self.eval_node(&self.ast, &point)?;
        Ok(EvalResult {
            value: j.v,
            d1: j.d1,
            d2: j.d2,
        })
    }

    fn domain(&self, node: &Node, reason: &'static str) -> EvalError {
        EvalError::Domain {
            reason,
            subexpr: node.display(&self.vars).to_string(),
        }
    }

    fn eval_node<S: Scalar>(&self, node: &Node, point: &[Jet<S>]) -> Result<Jet<S>, EvalError> {
        Ok(match node {
            Node::Var(k) => point[*k],
            Node::Const(c) => Jet::constant(S::from_f64(*c)),
            Node::Imag => match S::imag_unit() {
                Some(i) => Jet::constant(i),
                None => {
                    return Err(EvalError::ComplexInRealMode {
                        subexpr: node.display(&self.vars).to_string(),
                    })
                }
            },
            Node::Neg(a) => -self.eval_node(a, point)?,
            Node::Binary(op, a, b) => {
                let a = self.eval_node(a, point)?;
                let b = self.eval_node(b, point)?;
                match op {
                    BinOp::Add => a + b,
                    BinOp::Sub => a - b,
                    BinOp::Mul => a * b,
                    BinOp::Div => {
                        if b.v.is_zero() {
                            return Err(self.domain(node, "division by zero"));
                        }
                        a / b
                    }
                }
            }
            Node::Pow(a, n) => {
                let a = self.eval_node(a, point)?;
                if *n < 0 && a.v.is_zero() {
                    return Err(self.domain(node, "negative power of zero"));
                }
                a.powi(*n)
            }
            Node::Call(f, a) => {
                let a = self.eval_node(a, point)?;
                match f {
                    Func::Exp => a.exp(),
                    Func::Ln => {
                        if !a.v.log_ok() {
                            return Err(self.domain(node, "logarithm outside its domain"));
                        }
                        a.ln()
                    }
                    Func::Sqrt => {
                        if !a.v.log_ok() {
                            return Err(self.domain(node, "square root outside its domain"));
                        }
                        a.sqrt()
                    }
                    Func::Sin => a.sin(),
                    Func::Cos => a.cos(),
                    Func::Sinh => a.sinh(),
                    Func::Cosh => a.cosh(),
                }
            }
        })
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.ast.display(&self.vars))
    }
}

use std::fmt;

/// Elementary functions understood by the expression language.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
    Sinh,
    Cosh,
    Sqrt,
}

impl Func {
    pub fn from_name(name: &str) -> Option<Func> {
        Some(match name {
            "exp" => Func::Exp,
            "ln" => Func::Ln,
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "sinh" => Func::Sinh,
            "cosh" => Func::Cosh,
            "sqrt" => Func::Sqrt,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sinh => "sinh",
            Func::Cosh => "cosh",
            Func::Sqrt => "sqrt",
        }
    }

    pub const ALL: [Func; 7] = [
        Func::Exp,
        Func::Ln,
        Func::Sin,
        Func::Cos,
        Func::Sinh,
        Func::Cosh,
        Func::Sqrt,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => PREC_ADD,
            BinOp::Mul | BinOp::Div => PREC_MUL,
        }
    }
}

const PREC_ADD: u8 = 1;
const PREC_MUL: u8 = 2;
const PREC_NEG: u8 = 3;
const PREC_POW: u8 = 4;
const PREC_ATOM: u8 = 5;

/// Expression tree. Variables are stored as indices into the owning
/// [`Expr`](super::Expr)'s variable list.
#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Var(usize),
    Const(f64),
    /// The imaginary unit `i`; only valid in complex evaluation.
    Imag,
    Neg(Box<Node>),
    Binary(BinOp, Box<Node>, Box<Node>),
    Pow(Box<Node>, i32),
    Call(Func, Box<Node>),
}

impl Node {
    fn precedence(&self) -> u8 {
        match self {
            Node::Var(_) | Node::Imag | Node::Call(..) => PREC_ATOM,
            Node::Const(c) if *c < 0.0 || c.is_sign_negative() => PREC_NEG,
            Node::Const(_) => PREC_ATOM,
            Node::Neg(_) => PREC_NEG,
            Node::Binary(op, ..) => op.precedence(),
            Node::Pow(..) => PREC_POW,
        }
    }

    pub fn has_vars(&self) -> bool {
        match self {
            Node::Var(_) => true,
            Node::Const(_) | Node::Imag => false,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.has_vars(),
            Node::Binary(_, a, b) => a.has_vars() || b.has_vars(),
        }
    }

    pub fn max_var(&self) -> Option<usize> {
        match self {
            Node::Var(k) => Some(*k),
            Node::Const(_) | Node::Imag => None,
            Node::Neg(a) | Node::Pow(a, _) | Node::Call(_, a) => a.max_var(),
            Node::Binary(_, a, b) => a.max_var().max(b.max_var()),
        }
    }

    /// Renders the node with the given variable names. The output parses
    /// back to an equivalent tree.
    pub fn display<'a>(&'a self, names: &'a [String]) -> NodeDisplay<'a> {
        NodeDisplay { node: self, names }
    }
}

pub struct NodeDisplay<'a> {
    node: &'a Node,
    names: &'a [String],
}

impl fmt::Display for NodeDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_node(self.node, self.names, f)
    }
}

fn write_child(
    child: &Node,
    names: &[String],
    f: &mut fmt::Formatter<'_>,
    parens: bool,
) -> fmt::Result {
    if parens {
        f.write_str("(")?;
        write_node(child, names, f)?;
        f.write_str(")")
    } else {
        write_node(child, names, f)
    }
}

fn write_node(node: &Node, names: &[String], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match node {
        Node::Var(k) => match names.get(*k) {
            Some(n) => f.write_str(n),
            None => write!(f, "${k}"),
        },
        Node::Const(c) if c.is_sign_negative() => write!(f, "-{}", -c),
        Node::Const(c) => write!(f, "{c}"),
        Node::Imag => f.write_str("i"),
        Node::Neg(a) => {
            f.write_str("-")?;
            write_child(a, names, f, a.precedence() < PREC_NEG)
        }
        Node::Binary(op, a, b) => {
            let p = op.precedence();
            write_child(a, names, f, a.precedence() < p)?;
            write!(f, "{}", op.symbol())?;
            write_child(b, names, f, b.precedence() <= p)
        }
        Node::Pow(a, n) => {
            write_child(a, names, f, a.precedence() <= PREC_POW)?;
            if *n < 0 {
                write!(f, "^({n})")
            } else {
                write!(f, "^{n}")
            }
        }
        Node::Call(func, a) => {
            write!(f, "{}(", func.name())?;
            write_node(a, names, f)?;
            f.write_str(")")
        }
    }
}

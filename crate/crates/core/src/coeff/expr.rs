//! Scalar field expressions: a small arithmetic language over the spatial
//! variables `x1..xd` with the usual precedence rules.
//!
//! Evaluation is total on bounded boxes except at genuine singularities;
//! division by zero and `log` of a non-positive argument are reported as
//! errors rather than silently producing NaN.

use std::fmt;

use thiserror::Error;

/// Unary functions available in the expression grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func1 {
    Abs,
    Exp,
    Log,
    Sqrt,
    Sin,
    Cos,
}

impl Func1 {
    fn name(self) -> &'static str {
        match self {
            Func1::Abs => "abs",
            Func1::Exp => "exp",
            Func1::Log => "log",
            Func1::Sqrt => "sqrt",
            Func1::Sin => "sin",
            Func1::Cos => "cos",
        }
    }
}

/// Binary functions (two-argument call syntax).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func2 {
    Min,
    Max,
}

impl Func2 {
    fn name(self) -> &'static str {
        match self {
            Func2::Min => "min",
            Func2::Max => "max",
        }
    }
}

/// Binary arithmetic operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// Expression tree over `x1..xd`, real constants and the fixed function set.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index; `Var(0)` is `x1`.
    Var(usize),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call1(Func1, Box<Expr>),
    Call2(Func2, Box<Expr>, Box<Expr>),
}

/// A parsed scalar field together with the dimension it was validated against.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarFieldExpr {
    ast: Expr,
    d: usize,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at byte {pos}")]
    UnknownIdentifier { pos: usize, name: String },
    #[error("variable x{index} exceeds dimension {d}")]
    VariableOutOfRange { index: usize, d: usize },
    #[error("empty expression")]
    Empty,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("division by zero at x = {point:?}")]
    DivisionByZero { point: Vec<f64> },
    #[error("log of non-positive value {arg} at x = {point:?}")]
    LogNonPositive { arg: f64, point: Vec<f64> },
    #[error("sqrt of negative value {arg} at x = {point:?}")]
    SqrtNegative { arg: f64, point: Vec<f64> },
    #[error("non-finite result at x = {point:?}")]
    NonFinite { point: Vec<f64> },
}

impl ScalarFieldExpr {
    /// Parse `text` as an expression over `x1..xd`.
    pub fn parse(text: &str, d: usize) -> Result<Self, ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::Empty);
        }
        let mut p = Parser::new(text);
        let ast = p.parse_expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            return Err(ParseError::Syntax {
                pos: p.pos,
                msg: format!("unexpected trailing input `{}`", &p.src[p.pos..]),
            });
        }
        check_vars(&ast, d)?;
        Ok(ScalarFieldExpr { ast, d })
    }

    /// Build a constant field.
    pub fn constant(c: f64, d: usize) -> Self {
        ScalarFieldExpr {
            ast: Expr::Const(c),
            d,
        }
    }

    pub fn dimension(&self) -> usize {
        self.d
    }

    pub fn ast(&self) -> &Expr {
        &self.ast
    }

    /// Evaluate at a point; `x.len()` must be at least the dimension.
    pub fn eval(&self, x: &[f64]) -> Result<f64, EvalError> {
        debug_assert!(x.len() >= self.d);
        let v = eval_node(&self.ast, x)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite { point: x.to_vec() })
        }
    }
}

impl fmt::Display for ScalarFieldExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        print_node(&self.ast, f, 0)
    }
}

fn check_vars(e: &Expr, d: usize) -> Result<(), ParseError> {
    match e {
        Expr::Const(_) => Ok(()),
        Expr::Var(i) => {
            if *i >= d {
                Err(ParseError::VariableOutOfRange { index: i + 1, d })
            } else {
                Ok(())
            }
        }
        Expr::Neg(a) | Expr::Call1(_, a) => check_vars(a, d),
        Expr::Bin(_, a, b) | Expr::Call2(_, a, b) => {
            check_vars(a, d)?;
            check_vars(b, d)
        }
    }
}

fn eval_node(e: &Expr, x: &[f64]) -> Result<f64, EvalError> {
    Ok(match e {
        Expr::Const(c) => *c,
        Expr::Var(i) => x[*i],
        Expr::Neg(a) => -eval_node(a, x)?,
        Expr::Bin(op, a, b) => {
            let a = eval_node(a, x)?;
            let b = eval_node(b, x)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => {
                    if b == 0.0 {
                        return Err(EvalError::DivisionByZero { point: x.to_vec() });
                    }
                    a / b
                }
                BinOp::Pow => a.powf(b),
            }
        }
        Expr::Call1(f, a) => {
            let a = eval_node(a, x)?;
            match f {
                Func1::Abs => a.abs(),
                Func1::Exp => a.exp(),
                Func1::Log => {
                    if a <= 0.0 {
                        return Err(EvalError::LogNonPositive {
                            arg: a,
                            point: x.to_vec(),
                        });
                    }
                    a.ln()
                }
                Func1::Sqrt => {
                    if a < 0.0 {
                        return Err(EvalError::SqrtNegative {
                            arg: a,
                            point: x.to_vec(),
                        });
                    }
                    a.sqrt()
                }
                Func1::Sin => a.sin(),
                Func1::Cos => a.cos(),
            }
        }
        Expr::Call2(f, a, b) => {
            let a = eval_node(a, x)?;
            let b = eval_node(b, x)?;
            match f {
                Func2::Min => a.min(b),
                Func2::Max => a.max(b),
            }
        }
    })
}

// Printing with minimal parentheses: precedence levels 0 = additive,
// 1 = multiplicative, 2 = unary minus, 3 = power, 4 = atom.
fn print_node(e: &Expr, f: &mut fmt::Formatter<'_>, parent_prec: u8) -> fmt::Result {
    let prec = match e {
        Expr::Const(_) | Expr::Var(_) | Expr::Call1(..) | Expr::Call2(..) => 4,
        Expr::Neg(_) => 2,
        Expr::Bin(BinOp::Add | BinOp::Sub, ..) => 0,
        Expr::Bin(BinOp::Mul | BinOp::Div, ..) => 1,
        Expr::Bin(BinOp::Pow, ..) => 3,
    };
    let needs_paren = prec < parent_prec;
    if needs_paren {
        write!(f, "(")?;
    }
    match e {
        Expr::Const(c) => {
            if *c < 0.0 {
                // A negative literal prints as a negation so the round trip
                // does not depend on literal signs.
                write!(f, "(-{})", format_f64(-*c))?;
            } else {
                write!(f, "{}", format_f64(*c))?;
            }
        }
        Expr::Var(i) => write!(f, "x{}", i + 1)?,
        Expr::Neg(a) => {
            write!(f, "-")?;
            print_node(a, f, 3)?;
        }
        Expr::Bin(op, a, b) => {
            let (sym, lp, rp) = match op {
                BinOp::Add => ("+", 0, 1),
                BinOp::Sub => ("-", 0, 1),
                BinOp::Mul => ("*", 1, 2),
                BinOp::Div => ("/", 1, 2),
                // `^` is right-associative.
                BinOp::Pow => ("^", 4, 3),
            };
            print_node(a, f, lp)?;
            write!(f, "{sym}")?;
            print_node(b, f, rp)?;
        }
        Expr::Call1(func, a) => {
            write!(f, "{}(", func.name())?;
            print_node(a, f, 0)?;
            write!(f, ")")?;
        }
        Expr::Call2(func, a, b) => {
            write!(f, "{}(", func.name())?;
            print_node(a, f, 0)?;
            write!(f, ",")?;
            print_node(b, f, 0)?;
            write!(f, ")")?;
        }
    }
    if needs_paren {
        write!(f, ")")?;
    }
    Ok(())
}

fn format_f64(v: f64) -> String {
    // Shortest representation that round-trips through parsing.
    let s = format!("{v}");
    if s.contains(['.', 'e', 'E']) || s == "inf" || s == "NaN" {
        s
    } else {
        s
    }
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn new(src: &'a str) -> Self {
        Parser {
            src,
            bytes: src.as_bytes(),
            pos: 0,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn parse_expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Bin(BinOp::Add, Box::new(lhs), Box::new(rhs));
                }
                Some(b'-') => {
                    self.pos += 1;
                    let rhs = self.parse_term()?;
                    lhs = Expr::Bin(BinOp::Sub, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.parse_unary()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Bin(BinOp::Mul, Box::new(lhs), Box::new(rhs));
                }
                Some(b'/') => {
                    self.pos += 1;
                    let rhs = self.parse_unary()?;
                    lhs = Expr::Bin(BinOp::Div, Box::new(lhs), Box::new(rhs));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn parse_unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            let inner = self.parse_unary()?;
            return Ok(Expr::Neg(Box::new(inner)));
        }
        self.parse_power()
    }

    fn parse_power(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // Right-associative; the exponent may itself carry a unary minus.
            let exp = self.parse_unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn parse_atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_expr()?;
                if self.peek() != Some(b')') {
                    return Err(ParseError::Syntax {
                        pos: self.pos,
                        msg: "expected `)`".into(),
                    });
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.parse_ident(),
            Some(c) => Err(ParseError::Syntax {
                pos: self.pos,
                msg: format!("unexpected character `{}`", c as char),
            }),
            None => Err(ParseError::Syntax {
                pos: self.pos,
                msg: "unexpected end of input".into(),
            }),
        }
    }

    fn parse_number(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.bytes.len() {
            let c = self.bytes[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && self.pos > start {
                // Exponent part; optional sign.
                let mut j = self.pos + 1;
                if let Some(&s) = self.bytes.get(j) {
                    if s == b'+' || s == b'-' {
                        j += 1;
                    }
                }
                if self.bytes.get(j).is_some_and(|d| d.is_ascii_digit()) {
                    self.pos = j + 1;
                    while self
                        .bytes
                        .get(self.pos)
                        .is_some_and(|d| d.is_ascii_digit())
                    {
                        self.pos += 1;
                    }
                }
                break;
            } else {
                break;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::Syntax {
                pos: start,
                msg: format!("invalid number `{text}`"),
            })
    }

    fn parse_ident(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        let start = self.pos;
        while self
            .bytes
            .get(self.pos)
            .is_some_and(|c| c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = &self.src[start..self.pos];

        if let Some(rest) = name.strip_prefix('x') {
            if let Ok(idx) = rest.parse::<usize>() {
                if idx >= 1 {
                    return Ok(Expr::Var(idx - 1));
                }
            }
        }

        let f1 = match name {
            "abs" => Some(Func1::Abs),
            "exp" => Some(Func1::Exp),
            "log" => Some(Func1::Log),
            "sqrt" => Some(Func1::Sqrt),
            "sin" => Some(Func1::Sin),
            "cos" => Some(Func1::Cos),
            _ => None,
        };
        let f2 = match name {
            "min" => Some(Func2::Min),
            "max" => Some(Func2::Max),
            _ => None,
        };

        if f1.is_none() && f2.is_none() {
            return Err(ParseError::UnknownIdentifier {
                pos: start,
                name: name.to_string(),
            });
        }

        if self.peek() != Some(b'(') {
            return Err(ParseError::Syntax {
                pos: self.pos,
                msg: format!("expected `(` after function `{name}`"),
            });
        }
        self.pos += 1;
        let a = self.parse_expr()?;
        if let Some(f) = f1 {
            if self.peek() != Some(b')') {
                return Err(ParseError::Syntax {
                    pos: self.pos,
                    msg: format!("expected `)` closing `{name}`"),
                });
            }
            self.pos += 1;
            return Ok(Expr::Call1(f, Box::new(a)));
        }
        let f = f2.unwrap();
        if self.peek() != Some(b',') {
            return Err(ParseError::Syntax {
                pos: self.pos,
                msg: format!("`{name}` takes two arguments"),
            });
        }
        self.pos += 1;
        let b = self.parse_expr()?;
        if self.peek() != Some(b')') {
            return Err(ParseError::Syntax {
                pos: self.pos,
                msg: format!("expected `)` closing `{name}`"),
            });
        }
        self.pos += 1;
        Ok(Expr::Call2(f, Box::new(a), Box::new(b)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse1(text: &str) -> ScalarFieldExpr {
        ScalarFieldExpr::parse(text, 1).unwrap()
    }

    #[test]
    fn constant_one() {
        let e = parse1("1");
        assert_eq!(e.eval(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn precedence_and_functions() {
        let e = parse1("(1+abs(x1))^2 * log(2+abs(x1))");
        let v = e.eval(&[0.0]).unwrap();
        assert!((v - 2.0_f64.ln()).abs() < 1e-15, "got {v}");
        assert!((v - 0.6931).abs() < 1e-4);
    }

    #[test]
    fn division_by_zero_is_an_error() {
        let e = parse1("x1/x1");
        assert!(matches!(
            e.eval(&[0.0]),
            Err(EvalError::DivisionByZero { .. })
        ));
        assert_eq!(e.eval(&[2.0]).unwrap(), 1.0);
    }

    #[test]
    fn log_of_nonpositive_is_an_error() {
        let e = parse1("log(x1)");
        assert!(matches!(
            e.eval(&[-1.0]),
            Err(EvalError::LogNonPositive { .. })
        ));
    }

    #[test]
    fn standard_precedence() {
        let e = parse1("1+2*3^2");
        assert_eq!(e.eval(&[0.0]).unwrap(), 19.0);
        let e = parse1("2^3^2");
        assert_eq!(e.eval(&[0.0]).unwrap(), 512.0); // right-assoc
        let e = parse1("-2^2");
        assert_eq!(e.eval(&[0.0]).unwrap(), -4.0); // unary minus binds looser than ^
        let e = parse1("2-3-4");
        assert_eq!(e.eval(&[0.0]).unwrap(), -5.0);
        let e = parse1("8/4/2");
        assert_eq!(e.eval(&[0.0]).unwrap(), 1.0);
    }

    #[test]
    fn variable_out_of_range() {
        assert!(matches!(
            ScalarFieldExpr::parse("x2", 1),
            Err(ParseError::VariableOutOfRange { index: 2, d: 1 })
        ));
        assert!(ScalarFieldExpr::parse("x2", 2).is_ok());
    }

    #[test]
    fn unknown_identifier() {
        assert!(matches!(
            ScalarFieldExpr::parse("tan(x1)", 1),
            Err(ParseError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn syntax_error_carries_position() {
        match ScalarFieldExpr::parse("1+*2", 1) {
            Err(ParseError::Syntax { pos, .. }) => assert_eq!(pos, 2),
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn min_max_two_args() {
        let e = parse1("min(x1, 3) + max(x1, 0)");
        assert_eq!(e.eval(&[5.0]).unwrap(), 8.0);
        assert!(ScalarFieldExpr::parse("min(x1)", 1).is_err());
    }

    #[test]
    fn print_parse_round_trip_corpus() {
        // parse -> print -> parse must reproduce the AST exactly.
        let corpus = [
            "1", "x1", "x1+x2", "x1-x2-x3", "x1*x2", "x1/x2/x3", "x1^x2", "x1^x2^x3",
            "-x1", "--x1", "-(x1+1)", "(x1+1)*(x1-1)", "1+2*3", "(1+2)*3",
            "2^-1", "x1^(x2+1)", "(x1^2)^3", "abs(x1)", "exp(-x1^2)",
            "log(2+abs(x1))", "sqrt(1+x1^2)", "sin(x1)*cos(x2)",
            "min(x1,x2)", "max(min(x1,x2),x3)", "1.5+0.5*sin(x1)",
            "(1+abs(x1))^2*log(2+abs(x1))", "(1+x1^2)^2", "1e-3*x1", "2.5e2",
            "0.1+0.2", "x1*x1*x1", "-x1^2", "x1--x2", "1/(1+x1^2)",
            "abs(x1-x2)", "exp(x1)+exp(-x1)", "sqrt(abs(x1))", "min(1,max(2,3))",
            "x1+x2*x3^2", "(x1+x2)*x3^2", "((x1))", "3.14159", "1e10", "1.0e-10",
            "x1/(x2*x3)", "x1-(x2-x3)", "x1^(1/3)", "cos(x1)^2+sin(x1)^2",
            "max(x1,-x1)", "2*3.5", "-1.25",
        ];
        for text in corpus {
            let d = 3;
            let e1 = ScalarFieldExpr::parse(text, d)
                .unwrap_or_else(|err| panic!("parse `{text}`: {err}"));
            let printed = e1.to_string();
            let e2 = ScalarFieldExpr::parse(&printed, d)
                .unwrap_or_else(|err| panic!("reparse `{printed}` (from `{text}`): {err}"));
            assert_eq!(e1, e2, "round trip changed `{text}` -> `{printed}`");
        }
    }

    #[test]
    fn empty_input_rejected() {
        assert!(matches!(
            ScalarFieldExpr::parse("   ", 1),
            Err(ParseError::Empty)
        ));
    }
}

//! Parsing, printing, and evaluation of the closed-form expression language.
//!
//! The language is a small calculator grammar over one variable `x`:
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := base ('^' factor)?
//! base   := number | 'x' | ident '(' expr ')' | '(' expr ')' | '-' base
//! ident  := exp | log | sin | cos | sqrt
//! ```
//!
//! `+ - * /` associate left, `^` associates right, and `pi` / `e` parse as
//! numeric literals. Evaluation returns the value together with the first
//! derivative, computed by forward-mode dual numbers so there is no truncation
//! error beyond ordinary rounding.

use std::fmt;

/// Unary function names admitted by the grammar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Func {
    Exp,
    Log,
    Sin,
    Cos,
    Sqrt,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Sqrt => "sqrt",
        }
    }

    fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "log" => Some(Func::Log),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "sqrt" => Some(Func::Sqrt),
            _ => None,
        }
    }
}

/// Expression tree. `Neg` of a literal is folded into the literal during
/// parsing, so a parsed tree never contains `Neg(Num(_))`.
#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

/// Syntax error with the byte offset where parsing stopped.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error at byte {pos}: expected {expected}, found {found}")]
pub struct ParseError {
    pub pos: usize,
    pub expected: String,
    pub found: String,
}

/// Runtime evaluation failure at a concrete point.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EvalError {
    #[error("division by zero at x = {x}")]
    DivisionByZero { x: f64 },
    #[error("log of a non-positive argument ({arg}) at x = {x}")]
    LogDomain { x: f64, arg: f64 },
    #[error("sqrt of a negative argument ({arg}) at x = {x}")]
    SqrtDomain { x: f64, arg: f64 },
    #[error("non-integer power of a non-positive base ({base}) at x = {x}")]
    PowDomain { x: f64, base: f64 },
    #[error("zero base raised to a negative power at x = {x}")]
    ZeroToNegative { x: f64 },
    #[error("overflow to a non-finite value at x = {x}")]
    NonFinite { x: f64 },
}

#[derive(Clone, Copy)]
struct Dual {
    v: f64,
    d: f64,
}

/// Largest exponent magnitude treated as an integer power. Beyond this,
/// `powi` would lose the exponent to `i32` truncation anyway.
const MAX_INT_EXP: f64 = 2_147_483_647.0;

fn eval_node(e: &Expr, x: f64) -> Result<Dual, EvalError> {
    let out = match e {
        Expr::Num(c) => Dual { v: *c, d: 0.0 },
        Expr::Var => Dual { v: x, d: 1.0 },
        Expr::Neg(a) => {
            let a = eval_node(a, x)?;
            Dual { v: -a.v, d: -a.d }
        }
        Expr::Add(l, r) => {
            let (l, r) = (eval_node(l, x)?, eval_node(r, x)?);
            Dual { v: l.v + r.v, d: l.d + r.d }
        }
        Expr::Sub(l, r) => {
            let (l, r) = (eval_node(l, x)?, eval_node(r, x)?);
            Dual { v: l.v - r.v, d: l.d - r.d }
        }
        Expr::Mul(l, r) => {
            let (l, r) = (eval_node(l, x)?, eval_node(r, x)?);
            Dual { v: l.v * r.v, d: l.d * r.v + l.v * r.d }
        }
        Expr::Div(l, r) => {
            let (l, r) = (eval_node(l, x)?, eval_node(r, x)?);
            if r.v == 0.0 {
                return Err(EvalError::DivisionByZero { x });
            }
            Dual { v: l.v / r.v, d: (l.d * r.v - l.v * r.d) / (r.v * r.v) }
        }
        Expr::Pow(b, p) => {
            let b = eval_node(b, x)?;
            match **p {
                // Constant integer exponents follow repeated-multiplication
                // semantics, so negative bases are legal.
                Expr::Num(n) if n.fract() == 0.0 && n.abs() <= MAX_INT_EXP => {
                    let n_i = n as i32;
                    if n_i == 0 {
                        Dual { v: 1.0, d: 0.0 }
                    } else {
                        if b.v == 0.0 && n_i < 0 {
                            return Err(EvalError::ZeroToNegative { x });
                        }
                        Dual {
                            v: b.v.powi(n_i),
                            d: n * b.v.powi(n_i - 1) * b.d,
                        }
                    }
                }
                _ => {
                    let p = eval_node(p, x)?;
                    if b.v <= 0.0 {
                        return Err(EvalError::PowDomain { x, base: b.v });
                    }
                    let v = b.v.powf(p.v);
                    Dual { v, d: v * (p.d * b.v.ln() + p.v * b.d / b.v) }
                }
            }
        }
        Expr::Call(func, a) => {
            let a = eval_node(a, x)?;
            match func {
                Func::Exp => {
                    let v = a.v.exp();
                    Dual { v, d: v * a.d }
                }
                Func::Log => {
                    if a.v <= 0.0 {
                        return Err(EvalError::LogDomain { x, arg: a.v });
                    }
                    Dual { v: a.v.ln(), d: a.d / a.v }
                }
                Func::Sin => Dual { v: a.v.sin(), d: a.v.cos() * a.d },
                Func::Cos => Dual { v: a.v.cos(), d: -a.v.sin() * a.d },
                Func::Sqrt => {
                    if a.v < 0.0 {
                        return Err(EvalError::SqrtDomain { x, arg: a.v });
                    }
                    let v = a.v.sqrt();
                    Dual { v, d: a.d / (2.0 * v) }
                }
            }
        }
    };
    if out.v.is_finite() && out.d.is_finite() {
        Ok(out)
    } else {
        Err(EvalError::NonFinite { x })
    }
}

// ---------------------------------------------------------------------------
// Tokenizer and parser
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Var,
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    End,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Num(n) => format!("number '{n}'"),
            Tok::Var => "'x'".to_string(),
            Tok::Ident(s) => format!("identifier '{s}'"),
            Tok::Plus => "'+'".to_string(),
            Tok::Minus => "'-'".to_string(),
            Tok::Star => "'*'".to_string(),
            Tok::Slash => "'/'".to_string(),
            Tok::Caret => "'^'".to_string(),
            Tok::LParen => "'('".to_string(),
            Tok::RParen => "')'".to_string(),
            Tok::End => "end of input".to_string(),
        }
    }
}

struct Lexer<'a> {
    src: &'a [u8],
    pos: usize,
    tok: Tok,
    tok_pos: usize,
}

impl<'a> Lexer<'a> {
    fn new(src: &'a str) -> Result<Lexer<'a>, ParseError> {
        let mut lx = Lexer { src: src.as_bytes(), pos: 0, tok: Tok::End, tok_pos: 0 };
        lx.advance()?;
        Ok(lx)
    }

    fn err(&self, expected: &str) -> ParseError {
        ParseError {
            pos: self.tok_pos,
            expected: expected.to_string(),
            found: self.tok.describe(),
        }
    }

    fn advance(&mut self) -> Result<(), ParseError> {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
        self.tok_pos = self.pos;
        if self.pos >= self.src.len() {
            self.tok = Tok::End;
            return Ok(());
        }
        let c = self.src[self.pos];
        self.tok = match c {
            b'+' => {
                self.pos += 1;
                Tok::Plus
            }
            b'-' => {
                self.pos += 1;
                Tok::Minus
            }
            b'*' => {
                self.pos += 1;
                Tok::Star
            }
            b'/' => {
                self.pos += 1;
                Tok::Slash
            }
            b'^' => {
                self.pos += 1;
                Tok::Caret
            }
            b'(' => {
                self.pos += 1;
                Tok::LParen
            }
            b')' => {
                self.pos += 1;
                Tok::RParen
            }
            b'0'..=b'9' | b'.' => self.lex_number()?,
            c if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let word = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                match word {
                    "x" => Tok::Var,
                    "pi" => Tok::Num(std::f64::consts::PI),
                    "e" => Tok::Num(std::f64::consts::E),
                    _ => Tok::Ident(word.to_string()),
                }
            }
            other => {
                return Err(ParseError {
                    pos: self.pos,
                    expected: "a number, 'x', an identifier, '(' or an operator".to_string(),
                    found: format!("'{}'", other as char),
                });
            }
        };
        Ok(())
    }

    fn lex_number(&mut self) -> Result<Tok, ParseError> {
        let start = self.pos;
        let mut saw_digit = false;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
            saw_digit = true;
        }
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
                saw_digit = true;
            }
        }
        if !saw_digit {
            return Err(ParseError {
                pos: start,
                expected: "a digit".to_string(),
                found: "'.'".to_string(),
            });
        }
        // Exponent part only when an 'e'/'E' is followed by a (signed) digit;
        // otherwise the letter belongs to the next token (e.g. `2e` is `2 * e`
        // misspelled and should fail later as juxtaposition, not silently eat).
        if self.pos < self.src.len() && (self.src[self.pos] == b'e' || self.src[self.pos] == b'E') {
            let mut look = self.pos + 1;
            if look < self.src.len() && (self.src[look] == b'+' || self.src[look] == b'-') {
                look += 1;
            }
            if look < self.src.len() && self.src[look].is_ascii_digit() {
                self.pos = look;
                while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                    self.pos += 1;
                }
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        match text.parse::<f64>() {
            Ok(v) => Ok(Tok::Num(v)),
            Err(_) => Err(ParseError {
                pos: start,
                expected: "a valid number".to_string(),
                found: format!("'{text}'"),
            }),
        }
    }
}

const BASE_EXPECTED: &str = "a number, 'x', an identifier, '(' or '-'";

fn parse_root(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let e = parse_sum(lx)?;
    if lx.tok != Tok::End {
        return Err(lx.err("an operator or end of input"));
    }
    Ok(e)
}

fn parse_sum(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let mut acc = parse_product(lx)?;
    loop {
        match lx.tok {
            Tok::Plus => {
                lx.advance()?;
                acc = Expr::Add(Box::new(acc), Box::new(parse_product(lx)?));
            }
            Tok::Minus => {
                lx.advance()?;
                acc = Expr::Sub(Box::new(acc), Box::new(parse_product(lx)?));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_product(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let mut acc = parse_power(lx)?;
    loop {
        match lx.tok {
            Tok::Star => {
                lx.advance()?;
                acc = Expr::Mul(Box::new(acc), Box::new(parse_power(lx)?));
            }
            Tok::Slash => {
                lx.advance()?;
                acc = Expr::Div(Box::new(acc), Box::new(parse_power(lx)?));
            }
            _ => return Ok(acc),
        }
    }
}

fn parse_power(lx: &mut Lexer) -> Result<Expr, ParseError> {
    let base = parse_base(lx)?;
    if lx.tok == Tok::Caret {
        lx.advance()?;
        // Right associative: the exponent is itself a power.
        let exp = parse_power(lx)?;
        return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
    }
    Ok(base)
}

fn parse_base(lx: &mut Lexer) -> Result<Expr, ParseError> {
    match lx.tok.clone() {
        Tok::Num(v) => {
            lx.advance()?;
            Ok(Expr::Num(v))
        }
        Tok::Var => {
            lx.advance()?;
            Ok(Expr::Var)
        }
        Tok::Minus => {
            lx.advance()?;
            let inner = parse_base(lx)?;
            // Fold literal negation so printing round-trips structurally.
            Ok(match inner {
                Expr::Num(v) => Expr::Num(-v),
                other => Expr::Neg(Box::new(other)),
            })
        }
        Tok::LParen => {
            lx.advance()?;
            let inner = parse_sum(lx)?;
            if lx.tok != Tok::RParen {
                return Err(lx.err("')'"));
            }
            lx.advance()?;
            Ok(inner)
        }
        Tok::Ident(name) => {
            let Some(func) = Func::from_name(&name) else {
                return Err(lx.err("one of exp, log, sin, cos, sqrt"));
            };
            lx.advance()?;
            if lx.tok != Tok::LParen {
                return Err(lx.err("'('"));
            }
            lx.advance()?;
            let arg = parse_sum(lx)?;
            if lx.tok != Tok::RParen {
                return Err(lx.err("')'"));
            }
            lx.advance()?;
            Ok(Expr::Call(func, Box::new(arg)))
        }
        _ => Err(lx.err(BASE_EXPECTED)),
    }
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

/// Render a tree back to source text. The output re-parses to a structurally
/// identical tree: parentheses are inserted exactly where precedence or
/// associativity requires them.
pub fn to_text(e: &Expr) -> String {
    let mut out = String::new();
    fmt_sum(e, &mut out);
    out
}

fn fmt_sum(e: &Expr, out: &mut String) {
    match e {
        Expr::Add(l, r) => {
            fmt_sum(l, out);
            out.push_str(" + ");
            fmt_product(r, out);
        }
        Expr::Sub(l, r) => {
            fmt_sum(l, out);
            out.push_str(" - ");
            fmt_product(r, out);
        }
        _ => fmt_product(e, out),
    }
}

fn fmt_product(e: &Expr, out: &mut String) {
    match e {
        Expr::Mul(l, r) => {
            fmt_product(l, out);
            out.push('*');
            fmt_power(r, out);
        }
        Expr::Div(l, r) => {
            fmt_product(l, out);
            out.push('/');
            fmt_power(r, out);
        }
        _ => fmt_power(e, out),
    }
}

fn fmt_power(e: &Expr, out: &mut String) {
    match e {
        Expr::Pow(b, p) => {
            fmt_base(b, out);
            out.push('^');
            fmt_power(p, out);
        }
        _ => fmt_base(e, out),
    }
}

fn fmt_base(e: &Expr, out: &mut String) {
    match e {
        Expr::Num(v) => {
            use std::fmt::Write;
            write!(out, "{v}").unwrap();
        }
        Expr::Var => out.push('x'),
        Expr::Neg(inner) => {
            out.push('-');
            fmt_base(inner, out);
        }
        Expr::Call(f, a) => {
            out.push_str(f.name());
            out.push('(');
            fmt_sum(a, out);
            out.push(')');
        }
        other => {
            out.push('(');
            fmt_sum(other, out);
            out.push(')');
        }
    }
}

// ---------------------------------------------------------------------------
// Public wrapper
// ---------------------------------------------------------------------------

/// A parsed single-variable function, retaining its source text and an
/// optional interval on which every evaluation has been checked to succeed.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpressionFn {
    root: Expr,
    source: String,
    certified: Option<(f64, f64)>,
}

impl ExpressionFn {
    /// Wrap an already-built tree; the stored source is the canonical print.
    pub fn from_expr(root: Expr) -> ExpressionFn {
        let source = to_text(&root);
        ExpressionFn { root, source, certified: None }
    }

    /// The source text this function was parsed from (or printed to).
    pub fn source_text(&self) -> &str {
        &self.source
    }

    pub fn root(&self) -> &Expr {
        &self.root
    }

    /// Interval on which a dense evaluation screen has passed, if any.
    pub fn domain_guard(&self) -> Option<(f64, f64)> {
        self.certified
    }

    /// Evaluate value and first derivative at `x`.
    pub fn eval(&self, x: f64) -> Result<(f64, f64), EvalError> {
        eval_node(&self.root, x).map(|d| (d.v, d.d))
    }

    /// Evaluate the value only.
    pub fn value(&self, x: f64) -> Result<f64, EvalError> {
        Ok(self.eval(x)?.0)
    }

    /// Evaluate on a dense grid over `[a, b]` and record the interval as
    /// certified if every point evaluates to finite values.
    pub fn certify_on(&mut self, a: f64, b: f64, points: usize) -> Result<(), EvalError> {
        let n = points.max(2);
        for i in 0..n {
            let x = a + (b - a) * (i as f64) / ((n - 1) as f64);
            self.eval(x)?;
        }
        self.certified = Some((a, b));
        Ok(())
    }
}

impl fmt::Display for ExpressionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

/// Parse source text into an [`ExpressionFn`].
pub fn parse_expr(text: &str) -> Result<ExpressionFn, ParseError> {
    let mut lx = Lexer::new(text)?;
    let root = parse_root(&mut lx)?;
    Ok(ExpressionFn { root, source: text.trim().to_string(), certified: None })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> ExpressionFn {
        parse_expr(s).unwrap()
    }

    #[test]
    fn precedence_and_associativity() {
        use Expr::*;
        assert_eq!(
            *p("1 + 2*x").root(),
            Add(Box::new(Num(1.0)), Box::new(Mul(Box::new(Num(2.0)), Box::new(Var))))
        );
        // Left-assoc subtraction: 1 - 2 - 3 = (1 - 2) - 3.
        assert_eq!(p("1 - 2 - 3").value(0.0).unwrap(), -4.0);
        // Right-assoc power: 2^3^2 = 2^9.
        assert_eq!(p("2^3^2").value(0.0).unwrap(), 512.0);
        // Unary minus is part of the power's base: -x^2 is (-x)^2.
        assert_eq!(p("-x^2").value(3.0).unwrap(), 9.0);
    }

    #[test]
    fn constants_and_numbers() {
        assert_eq!(p("pi").value(0.0).unwrap(), std::f64::consts::PI);
        assert_eq!(p("e").value(0.0).unwrap(), std::f64::consts::E);
        assert_eq!(p("2.5e-3").value(0.0).unwrap(), 2.5e-3);
        assert_eq!(p(".5").value(0.0).unwrap(), 0.5);
        assert_eq!(p("-4").root(), &Expr::Num(-4.0));
    }

    #[test]
    fn dual_derivatives_match_closed_forms() {
        let f = p("exp(2*x)/x");
        let (v, d) = f.eval(1.5).unwrap();
        let ev = (3.0f64).exp();
        assert!((v - ev / 1.5).abs() < 1e-12);
        // d/dx e^{2x}/x = e^{2x}(2x-1)/x^2
        assert!((d - ev * 2.0 / 1.5 + ev / 2.25).abs() < 1e-12);

        let g = p("x^x");
        let (v, d) = g.eval(2.0).unwrap();
        assert!((v - 4.0).abs() < 1e-12);
        assert!((d - 4.0 * (2.0f64.ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn integer_powers_allow_negative_bases() {
        let f = p("(-2)^3");
        assert_eq!(f.value(0.0).unwrap(), -8.0);
        let g = p("(x - 3)^2");
        assert_eq!(g.eval(1.0).unwrap(), (4.0, -4.0));
        // Non-integer exponent on a negative base is a domain error.
        let h = p("(x - 3)^2.5");
        assert!(matches!(h.value(1.0), Err(EvalError::PowDomain { .. })));
    }

    #[test]
    fn domain_errors_are_reported_not_nan() {
        assert!(matches!(p("1/x").value(0.0), Err(EvalError::DivisionByZero { .. })));
        assert!(matches!(p("log(x)").value(-1.0), Err(EvalError::LogDomain { .. })));
        assert!(matches!(p("sqrt(x)").value(-0.5), Err(EvalError::SqrtDomain { .. })));
        assert!(matches!(p("x^-2").value(0.0), Err(EvalError::ZeroToNegative { .. })));
        // exp overflow surfaces as NonFinite, not an infinite value.
        assert!(matches!(p("exp(x)").value(1e4), Err(EvalError::NonFinite { .. })));
        // sqrt(0) has value 0 but an unbounded derivative.
        assert!(matches!(p("sqrt(x)").eval(0.0), Err(EvalError::NonFinite { .. })));
    }

    #[test]
    fn parse_errors_carry_position_and_expectation() {
        let err = parse_expr("x +").unwrap_err();
        assert_eq!(err.pos, 3);
        assert_eq!(err.found, "end of input");
        assert!(err.expected.contains("number"));

        let err = parse_expr("sin x").unwrap_err();
        assert_eq!(err.expected, "'('");

        let err = parse_expr("foo(x)").unwrap_err();
        assert!(err.expected.contains("exp, log, sin, cos, sqrt"));

        let err = parse_expr("(1 + 2").unwrap_err();
        assert_eq!(err.expected, "')'");

        let err = parse_expr("1 2").unwrap_err();
        assert_eq!(err.pos, 2);
    }

    #[test]
    fn printing_round_trips_structurally() {
        for src in [
            "x^2 + sin(x)",
            "1 - (2 - 3)",
            "x/(x + 1)/2",
            "(x + 1)*(x - 1)",
            "-(x + 1)^2",
            "2^-x",
            "x*-3 + 4",
            "exp(2*x)/x - sqrt(x + 0.5)",
            "(x^2)^3",
            "-x - -x",
        ] {
            let parsed = p(src);
            let printed = to_text(parsed.root());
            let reparsed = parse_expr(&printed)
                .unwrap_or_else(|e| panic!("print of {src:?} gave {printed:?}: {e}"));
            assert_eq!(parsed.root(), reparsed.root(), "{src:?} -> {printed:?}");
        }
    }

    #[test]
    fn juxtaposed_number_letter_is_not_an_exponent() {
        // `2e` is 2 followed by the constant e, which is invalid juxtaposition.
        assert!(parse_expr("2e").is_err());
        assert_eq!(p("2e1").value(0.0).unwrap(), 20.0);
    }
}

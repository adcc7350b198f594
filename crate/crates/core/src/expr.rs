//! Time-dependent coefficient expressions such as `1 + 0.1*cos(t)`.
//!
//! Grammar, loosest binding first:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 't' | func '(' expr ')' | '(' expr ')'
//! func    := sin | cos | exp | sqrt | abs
//! ```

use std::fmt;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    UnknownIdentifier(String),
    UnexpectedChar(char),
    UnbalancedParen,
    EmptyOperand,
    TrailingInput,
    BadNumber,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ParseError {
    pub offset: usize,
    pub kind: ParseErrorKind,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let what = match &self.kind {
            ParseErrorKind::UnknownIdentifier(s) => format!("unknown identifier `{s}`"),
            ParseErrorKind::UnexpectedChar(c) => format!("unexpected character `{c}`"),
            ParseErrorKind::UnbalancedParen => "unbalanced parenthesis".to_string(),
            ParseErrorKind::EmptyOperand => "expected an operand".to_string(),
            ParseErrorKind::TrailingInput => "unexpected trailing input".to_string(),
            ParseErrorKind::BadNumber => "malformed number".to_string(),
        };
        write!(f, "parse error at offset {}: {}", self.offset, what)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Sqrt,
    Abs,
}

impl Func {
    fn from_name(s: &str) -> Option<Func> {
        Some(match s {
            "sin" => Func::Sin,
            "cos" => Func::Cos,
            "exp" => Func::Exp,
            "sqrt" => Func::Sqrt,
            "abs" => Func::Abs,
            _ => return None,
        })
    }

    pub fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Sqrt => "sqrt",
            Func::Abs => "abs",
        }
    }

    fn apply(self, x: f64) -> f64 {
        match self {
            Func::Sin => x.sin(),
            Func::Cos => x.cos(),
            Func::Exp => x.exp(),
            Func::Sqrt => x.sqrt(),
            Func::Abs => x.abs(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => " + ",
            BinOp::Sub => " - ",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn prec(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    T,
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

const NEG_PREC: u8 = 3;
const ATOM_PREC: u8 = 5;

impl Expr {
    pub fn parse(src: &str) -> Result<Expr, ParseError> {
        let mut p = Parser {
            src: src.as_bytes(),
            pos: 0,
        };
        p.skip_ws();
        if p.pos == p.src.len() {
            return Err(p.err(ParseErrorKind::EmptyOperand));
        }
        let e = p.expr()?;
        p.skip_ws();
        if p.pos < p.src.len() {
            let kind = if p.src[p.pos] == b')' {
                ParseErrorKind::UnbalancedParen
            } else {
                ParseErrorKind::TrailingInput
            };
            return Err(p.err(kind));
        }
        Ok(e)
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::T => t,
            Expr::Neg(a) => -a.eval(t),
            Expr::Bin(op, a, b) => {
                let (x, y) = (a.eval(t), b.eval(t));
                match op {
                    BinOp::Add => x + y,
                    BinOp::Sub => x - y,
                    BinOp::Mul => x * y,
                    BinOp::Div => x / y,
                    BinOp::Pow => x.powf(y),
                }
            }
            Expr::Call(f, a) => f.apply(a.eval(t)),
        }
    }

    /// Whether the expression mentions `t` at all.
    pub fn depends_on_t(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::T => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_t(),
            Expr::Bin(_, a, b) => a.depends_on_t() || b.depends_on_t(),
        }
    }

    fn prec(&self) -> u8 {
        match self {
            Expr::Num(v) if *v < 0.0 || (*v == 0.0 && v.is_sign_negative()) => NEG_PREC,
            Expr::Num(_) | Expr::T | Expr::Call(..) => ATOM_PREC,
            Expr::Neg(_) => NEG_PREC,
            Expr::Bin(op, ..) => op.prec(),
        }
    }

    fn write_child(&self, f: &mut fmt::Formatter<'_>, parens: bool) -> fmt::Result {
        if parens {
            write!(f, "({self})")
        } else {
            write!(f, "{self}")
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::T => f.write_str("t"),
            Expr::Neg(a) => {
                f.write_str("-")?;
                a.write_child(f, a.prec() < NEG_PREC)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let p = op.prec();
                let (left_parens, right_parens) = if *op == BinOp::Pow {
                    // right-associative; a negated exponent needs no parens
                    (a.prec() < ATOM_PREC, b.prec() < NEG_PREC)
                } else {
                    (a.prec() < p, b.prec() <= p)
                };
                a.write_child(f, left_parens)?;
                f.write_str(op.symbol())?;
                b.write_child(f, right_parens)
            }
        }
    }
}

impl std::str::FromStr for Expr {
    type Err = ParseError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Expr::parse(s)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn err(&self, kind: ParseErrorKind) -> ParseError {
        ParseError {
            offset: self.pos,
            kind,
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.term()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.pos += 1;
            let rhs = self.unary()?;
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(rhs));
        }
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.unary()?;
            return Ok(Expr::Bin(BinOp::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(self.err(ParseErrorKind::EmptyOperand)),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.close_paren()?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let start = self.pos;
                while self.pos < self.src.len()
                    && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                let name = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
                if name == "t" {
                    return Ok(Expr::T);
                }
                let Some(func) = Func::from_name(name) else {
                    return Err(ParseError {
                        offset: start,
                        kind: ParseErrorKind::UnknownIdentifier(name.to_string()),
                    });
                };
                if self.peek() != Some(b'(') {
                    return Err(self.err(ParseErrorKind::UnbalancedParen));
                }
                self.pos += 1;
                let arg = self.expr()?;
                self.close_paren()?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(b')' | b'+' | b'*' | b'/' | b'^') => Err(self.err(ParseErrorKind::EmptyOperand)),
            Some(_) => {
                let c = std::str::from_utf8(&self.src[self.pos..])
                    .ok()
                    .and_then(|s| s.chars().next())
                    .unwrap_or('?');
                Err(self.err(ParseErrorKind::UnexpectedChar(c)))
            }
        }
    }

    fn close_paren(&mut self) -> Result<(), ParseError> {
        if self.peek() == Some(b')') {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(ParseErrorKind::UnbalancedParen))
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        let s = self.src;
        let digits = |p: &mut usize| {
            let b = *p;
            while *p < s.len() && s[*p].is_ascii_digit() {
                *p += 1;
            }
            *p > b
        };
        let mut p = self.pos;
        let int = digits(&mut p);
        let mut frac = false;
        if p < s.len() && s[p] == b'.' {
            p += 1;
            frac = digits(&mut p);
        }
        if !int && !frac {
            return Err(self.err(ParseErrorKind::BadNumber));
        }
        if p < s.len() && (s[p] == b'e' || s[p] == b'E') {
            let mut q = p + 1;
            if q < s.len() && (s[q] == b'+' || s[q] == b'-') {
                q += 1;
            }
            if digits(&mut q) {
                p = q;
            } else {
                self.pos = q;
                return Err(self.err(ParseErrorKind::BadNumber));
            }
        }
        self.pos = p;
        let text = std::str::from_utf8(&s[start..p]).unwrap();
        text.parse::<f64>().map(Expr::Num).map_err(|_| ParseError {
            offset: start,
            kind: ParseErrorKind::BadNumber,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn eval(s: &str, t: f64) -> f64 {
        Expr::parse(s).unwrap().eval(t)
    }

    #[test]
    fn precedence_and_associativity() {
        assert!((eval("1 + 0.1*cos(t)", 0.0) - 1.1).abs() < 1e-15);
        assert_eq!(eval("2^3^2", 0.0), 512.0);
        assert_eq!(eval("-2^2", 0.0), -4.0);
        assert_eq!(eval("2^-1", 0.0), 0.5);
        assert_eq!(eval("8/4/2", 0.0), 1.0);
        assert_eq!(eval("1 - 2 - 3", 0.0), -4.0);
        assert_eq!(eval("-t*3", 2.0), -6.0);
        assert_eq!(eval("(1 + t)^2", 2.0), 9.0);
        assert_eq!(eval("1.5e2 + .5", 0.0), 150.5);
        assert_eq!(eval("abs(-3) + sqrt(4) + exp(0) + sin(0)", 0.0), 6.0);
    }

    #[test]
    fn error_offsets() {
        let e = Expr::parse("cos(").unwrap_err();
        assert_eq!(e.offset, 4);
        assert_eq!(e.kind, ParseErrorKind::EmptyOperand);

        let e = Expr::parse("1 + tan(t)").unwrap_err();
        assert_eq!(e.offset, 4);
        assert_eq!(e.kind, ParseErrorKind::UnknownIdentifier("tan".into()));

        let e = Expr::parse("(1 + t").unwrap_err();
        assert_eq!((e.offset, e.kind), (6, ParseErrorKind::UnbalancedParen));

        let e = Expr::parse("1 + t)").unwrap_err();
        assert_eq!((e.offset, e.kind), (5, ParseErrorKind::UnbalancedParen));

        let e = Expr::parse("2 * ").unwrap_err();
        assert_eq!((e.offset, e.kind), (4, ParseErrorKind::EmptyOperand));

        assert_eq!(
            Expr::parse("").unwrap_err().kind,
            ParseErrorKind::EmptyOperand
        );
        assert_eq!(
            Expr::parse("1e+").unwrap_err().kind,
            ParseErrorKind::BadNumber
        );
        assert_eq!(
            Expr::parse("t t").unwrap_err().kind,
            ParseErrorKind::TrailingInput
        );
    }

    #[test]
    fn printing_is_minimal() {
        let show = |s: &str| Expr::parse(s).unwrap().to_string();
        assert_eq!(show("((1 + (t)))"), "1 + t");
        assert_eq!(show("1 - (2 - 3)"), "1 - (2 - 3)");
        assert_eq!(show("(1 - 2) - 3"), "1 - 2 - 3");
        assert_eq!(show("(2^3)^2"), "(2^3)^2");
        assert_eq!(show("2^(3^2)"), "2^3^2");
        assert_eq!(show("(-2)^2"), "(-2)^2");
        assert_eq!(show("-(t*3)"), "-(t*3)");
        assert_eq!(show("0.5*cos(0.9*t)"), "0.5*cos(0.9*t)");
    }

    fn arb_expr() -> impl Strategy<Value = Expr> {
        let leaf = prop_oneof![
            (0u32..1000, 0u32..4).prop_map(|(m, e)| Expr::Num(m as f64 / 10f64.powi(e as i32))),
            Just(Expr::T),
        ];
        leaf.prop_recursive(6, 48, 2, |inner| {
            prop_oneof![
                inner.clone().prop_map(|e| Expr::Neg(Box::new(e))),
                (
                    prop_oneof![
                        Just(BinOp::Add),
                        Just(BinOp::Sub),
                        Just(BinOp::Mul),
                        Just(BinOp::Div),
                        Just(BinOp::Pow)
                    ],
                    inner.clone(),
                    inner.clone()
                )
                    .prop_map(|(op, a, b)| Expr::Bin(op, Box::new(a), Box::new(b))),
                (
                    prop_oneof![
                        Just(Func::Sin),
                        Just(Func::Cos),
                        Just(Func::Exp),
                        Just(Func::Sqrt),
                        Just(Func::Abs)
                    ],
                    inner
                )
                    .prop_map(|(f, a)| Expr::Call(f, Box::new(a))),
            ]
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn print_parse_print_is_fixed_point(e in arb_expr()) {
            let printed = e.to_string();
            let reparsed = Expr::parse(&printed).unwrap();
            prop_assert_eq!(&reparsed, &e);
            prop_assert_eq!(reparsed.to_string(), printed);
        }
    }
}

//! Named rings, a small expression language composing them, and a JSON
//! document format for user-supplied rings.
//!
//! Expressions:
//!
//! ```text
//! expr := NAME '(' arg (',' arg)* ')' | NAME
//! arg  := integer | expr
//! ```
//!
//! `torus(n)`, `sphere(d)`, `cp(n)` (projective space of complex dimension
//! `n-1`), `truncpoly(g, n)`, `rp_mod2(d)`, `lens(a, n)`, `product(e1, e2)`,
//! `rationalize(e)` and `point`.

use std::fmt;
use std::fmt::Write as _;

use num_bigint::BigInt;
use num_traits::{One, Zero};
use serde::Deserialize;
use thiserror::Error;

use crate::abelian::{FpAbGroup, IntMatrix};
use crate::gradedring::{
    exterior_algebra_over, point_over, power_name, power_ring, rationalize, sphere_over,
    tensor_product, truncated_polynomial_over, validate, Coefficients, GradedRing, RingBuilder,
    RingClass, RingError, Sparse,
};

/// Largest total rank an expression may evaluate to.
pub const MAX_TOTAL_RANK: u64 = 1 << 16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("unknown constructor `{name}` at offset {offset}")]
    UnknownConstructor { name: String, offset: usize },
    #[error("`{name}` at offset {offset} takes {expected}, found {found}")]
    ArityError {
        name: String,
        expected: &'static str,
        found: String,
        offset: usize,
    },
    #[error("parameter out of range at offset {offset}: {message}")]
    ParamRange { message: String, offset: usize },
    #[error("unbalanced parentheses at offset {offset}")]
    UnbalancedParens { offset: usize },
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { message: String, offset: usize },
    #[error(
        "no constructor for `{expr}` over {coeffs}: mod-m rings are not derived from integral ones"
    )]
    NoModularConstructor { expr: String, coeffs: Coefficients },
    #[error("ring document: {0}")]
    Schema(String),
    #[error("ring document violates the ring axioms: {}", .0.join("; "))]
    AxiomViolation(Vec<String>),
    #[error("class spec at offset {offset}: {message}")]
    ClassSpec { message: String, offset: usize },
    #[error(transparent)]
    Ring(#[from] RingError),
}

impl CatalogError {
    pub fn name(&self) -> &'static str {
        match self {
            CatalogError::UnknownConstructor { .. } => "UnknownConstructor",
            CatalogError::ArityError { .. } => "ArityError",
            CatalogError::ParamRange { .. } => "ParamRange",
            CatalogError::UnbalancedParens { .. } => "UnbalancedParens",
            CatalogError::Syntax { .. } => "Syntax",
            CatalogError::NoModularConstructor { .. } => "NoModularConstructor",
            CatalogError::Schema(_) => "SchemaError",
            CatalogError::AxiomViolation(_) => "AxiomViolation",
            CatalogError::ClassSpec { .. } => "ClassSpec",
            CatalogError::Ring(e) => e.name(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum RingExpr {
    Point,
    Torus(usize),
    Sphere(usize),
    Cp(usize),
    TruncPoly(usize, usize),
    RpMod2(usize),
    Lens(u64, usize),
    Product(Box<RingExpr>, Box<RingExpr>),
    Rationalize(Box<RingExpr>),
}

impl fmt::Display for RingExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RingExpr::Point => write!(f, "point"),
            RingExpr::Torus(n) => write!(f, "torus({n})"),
            RingExpr::Sphere(d) => write!(f, "sphere({d})"),
            RingExpr::Cp(n) => write!(f, "cp({n})"),
            RingExpr::TruncPoly(g, n) => write!(f, "truncpoly({g}, {n})"),
            RingExpr::RpMod2(d) => write!(f, "rp_mod2({d})"),
            RingExpr::Lens(a, n) => write!(f, "lens({a}, {n})"),
            RingExpr::Product(a, b) => write!(f, "product({a}, {b})"),
            RingExpr::Rationalize(e) => write!(f, "rationalize({e})"),
        }
    }
}

impl RingExpr {
    /// Canonical text; `parse(e.render()) == e`.
    pub fn render(&self) -> String {
        self.to_string()
    }

    pub fn top_degree(&self) -> usize {
        match self {
            RingExpr::Point => 0,
            RingExpr::Torus(n) | RingExpr::Sphere(n) | RingExpr::RpMod2(n) => *n,
            RingExpr::Cp(n) => 2 * n - 2,
            RingExpr::TruncPoly(g, n) => g * (n - 1),
            RingExpr::Lens(_, n) => 2 * n - 1,
            RingExpr::Product(a, b) => a.top_degree() + b.top_degree(),
            RingExpr::Rationalize(e) => e.top_degree(),
        }
    }

    /// Total number of generators of the evaluated ring.
    pub fn total_rank(&self) -> u64 {
        match self {
            RingExpr::Point => 1,
            RingExpr::Torus(n) => 1u64.checked_shl(*n as u32).unwrap_or(u64::MAX),
            RingExpr::Sphere(_) => 2,
            RingExpr::Cp(n) | RingExpr::TruncPoly(_, n) => *n as u64,
            RingExpr::RpMod2(d) => *d as u64 + 1,
            RingExpr::Lens(_, n) => *n as u64 + 1,
            RingExpr::Product(a, b) => a.total_rank().saturating_mul(b.total_rank()),
            RingExpr::Rationalize(e) => e.total_rank(),
        }
    }

    /// Whether the ring structure includes products on torsion classes that
    /// are asserted by the catalog rather than derived (lens spaces).
    pub fn has_asserted_structure(&self) -> bool {
        match self {
            RingExpr::Lens(..) => true,
            RingExpr::Product(a, b) => a.has_asserted_structure() || b.has_asserted_structure(),
            RingExpr::Rationalize(e) => e.has_asserted_structure(),
            _ => false,
        }
    }

    fn contains(&self, pred: &dyn Fn(&RingExpr) -> bool) -> bool {
        pred(self)
            || match self {
                RingExpr::Product(a, b) => a.contains(pred) || b.contains(pred),
                RingExpr::Rationalize(e) => e.contains(pred),
                _ => false,
            }
    }

    /// Coefficients the expression evaluates over by default: `Q` under
    /// `rationalize`, `Z/2` when an `rp_mod2` factor is present, else `Z`.
    pub fn natural_coefficients(&self) -> Coefficients {
        if self.contains(&|e| matches!(e, RingExpr::Rationalize(_))) {
            Coefficients::Rationals
        } else if self.contains(&|e| matches!(e, RingExpr::RpMod2(_))) {
            Coefficients::Modular(2)
        } else {
            Coefficients::Integers
        }
    }

    /// Whether [`eval_over`] can build this ring over `coeffs`.
    pub fn available_over(&self, coeffs: Coefficients) -> bool {
        match self {
            RingExpr::Point
            | RingExpr::Torus(_)
            | RingExpr::Sphere(_)
            | RingExpr::Cp(_)
            | RingExpr::TruncPoly(..) => true,
            RingExpr::RpMod2(_) => coeffs == Coefficients::Modular(2),
            RingExpr::Lens(..) => {
                matches!(coeffs, Coefficients::Integers | Coefficients::Rationals)
            }
            RingExpr::Product(a, b) => a.available_over(coeffs) && b.available_over(coeffs),
            RingExpr::Rationalize(e) => {
                coeffs == Coefficients::Rationals && e.available_over(Coefficients::Integers)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Token<'a> {
    Name(&'a str),
    Int(&'a str),
    LParen,
    RParen,
    Comma,
    End,
}

struct Lexer<'a> {
    text: &'a str,
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while let Some(c) = self.text[self.pos..].chars().next() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    /// Next token and its byte offset.
    fn next(&mut self) -> Result<(Token<'a>, usize), CatalogError> {
        self.skip_ws();
        let start = self.pos;
        let rest = &self.text[start..];
        let Some(c) = rest.chars().next() else {
            return Ok((Token::End, start));
        };
        let take =
            |pred: &dyn Fn(char) -> bool| rest.find(|ch: char| !pred(ch)).unwrap_or(rest.len());
        let tok = match c {
            '(' => {
                self.pos += 1;
                Token::LParen
            }
            ')' => {
                self.pos += 1;
                Token::RParen
            }
            ',' => {
                self.pos += 1;
                Token::Comma
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let len = take(&|ch| ch.is_ascii_alphanumeric() || ch == '_');
                self.pos += len;
                Token::Name(&rest[..len])
            }
            c if c.is_ascii_digit() || c == '-' => {
                let len = 1 + rest[1..]
                    .find(|ch: char| !ch.is_ascii_digit())
                    .unwrap_or(rest.len() - 1);
                if len == 1 && c == '-' {
                    return Err(CatalogError::Syntax {
                        message: "expected digits after '-'".into(),
                        offset: start,
                    });
                }
                self.pos += len;
                Token::Int(&rest[..len])
            }
            c => {
                return Err(CatalogError::Syntax {
                    message: format!("unexpected character {c:?}"),
                    offset: start,
                })
            }
        };
        Ok((tok, start))
    }

    fn peek(&mut self) -> Result<(Token<'a>, usize), CatalogError> {
        let saved = self.pos;
        let t = self.next();
        self.pos = saved;
        t
    }
}

enum Arg<'a> {
    Int(&'a str, usize),
    Expr(RingExpr),
}

/// Parses a ring expression. Errors carry the byte offset of the offending
/// token.
pub fn parse(text: &str) -> Result<RingExpr, CatalogError> {
    let mut lx = Lexer { text, pos: 0 };
    let e = parse_expr(&mut lx)?;
    match lx.next()? {
        (Token::End, _) => Ok(e),
        (Token::RParen, offset) => Err(CatalogError::UnbalancedParens { offset }),
        (_, offset) => Err(CatalogError::Syntax {
            message: "trailing input".into(),
            offset,
        }),
    }
}

fn parse_expr(lx: &mut Lexer<'_>) -> Result<RingExpr, CatalogError> {
    let (tok, offset) = lx.next()?;
    let name = match tok {
        Token::Name(n) => n,
        Token::End => {
            return Err(CatalogError::Syntax {
                message: "expected a constructor name".into(),
                offset,
            })
        }
        Token::RParen => return Err(CatalogError::UnbalancedParens { offset }),
        _ => {
            return Err(CatalogError::Syntax {
                message: "expected a constructor name".into(),
                offset,
            })
        }
    };
    let mut args = Vec::new();
    let mut called = false;
    if let (Token::LParen, _) = lx.peek()? {
        lx.next()?;
        called = true;
        loop {
            let (tok, off) = lx.peek()?;
            match tok {
                Token::End => return Err(CatalogError::UnbalancedParens { offset: off }),
                Token::Int(digits) => {
                    lx.next()?;
                    args.push(Arg::Int(digits, off));
                }
                Token::Name(_) => args.push(Arg::Expr(parse_expr(lx)?)),
                _ => {
                    return Err(CatalogError::Syntax {
                        message: "expected an argument".into(),
                        offset: off,
                    })
                }
            }
            match lx.next()? {
                (Token::Comma, _) => continue,
                (Token::RParen, _) => break,
                (Token::End, off) => return Err(CatalogError::UnbalancedParens { offset: off }),
                (_, off) => {
                    return Err(CatalogError::Syntax {
                        message: "expected ',' or ')'".into(),
                        offset: off,
                    })
                }
            }
        }
    }
    build(name, offset, called, args)
}

fn describe_args(args: &[Arg<'_>], called: bool) -> String {
    if !called {
        return "no argument list".into();
    }
    let ints = args.iter().filter(|a| matches!(a, Arg::Int(..))).count();
    let exprs = args.len() - ints;
    format!("{ints} integer(s) and {exprs} expression(s)")
}

fn build(
    name: &str,
    offset: usize,
    called: bool,
    args: Vec<Arg<'_>>,
) -> Result<RingExpr, CatalogError> {
    let arity = |expected: &'static str| CatalogError::ArityError {
        name: name.to_string(),
        expected,
        found: describe_args(&args, called),
        offset,
    };
    let int = |a: &Arg<'_>, min: u64, max: u64, what: &str| -> Result<u64, CatalogError> {
        let Arg::Int(digits, off) = a else {
            unreachable!("checked by caller")
        };
        let v: Option<u64> = digits.parse().ok();
        match v {
            Some(v) if (min..=max).contains(&v) => Ok(v),
            _ => Err(CatalogError::ParamRange {
                message: format!("{name}: {what} = {digits} must lie in {min}..={max}"),
                offset: *off,
            }),
        }
    };
    let all_int =
        |n: usize| called && args.len() == n && args.iter().all(|a| matches!(a, Arg::Int(..)));
    let e = match name {
        "point" => {
            if called {
                return Err(arity("no arguments"));
            }
            RingExpr::Point
        }
        "torus" if all_int(1) => RingExpr::Torus(int(&args[0], 1, 16, "n")? as usize),
        "torus" => return Err(arity("one integer")),
        "sphere" if all_int(1) => RingExpr::Sphere(int(&args[0], 1, 256, "d")? as usize),
        "sphere" => return Err(arity("one integer")),
        "cp" if all_int(1) => RingExpr::Cp(int(&args[0], 2, 128, "n")? as usize),
        "cp" => return Err(arity("one integer")),
        "truncpoly" if all_int(2) => {
            let g = int(&args[0], 2, 256, "g")?;
            if g % 2 == 1 {
                let Arg::Int(_, off) = args[0] else {
                    unreachable!()
                };
                return Err(CatalogError::ParamRange {
                    message: format!("truncpoly: g = {g} must be even"),
                    offset: off,
                });
            }
            let n = int(&args[1], 2, 256 / g + 1, "n")?;
            RingExpr::TruncPoly(g as usize, n as usize)
        }
        "truncpoly" => return Err(arity("two integers")),
        "rp_mod2" if all_int(1) => {
            let d = int(&args[0], 1, 255, "d")?;
            if d % 2 == 0 {
                let Arg::Int(_, off) = args[0] else {
                    unreachable!()
                };
                return Err(CatalogError::ParamRange {
                    message: format!("rp_mod2: d = {d} must be odd"),
                    offset: off,
                });
            }
            RingExpr::RpMod2(d as usize)
        }
        "rp_mod2" => return Err(arity("one integer")),
        "lens" if all_int(2) => {
            let a = int(&args[0], 2, u32::MAX as u64, "a")?;
            let n = int(&args[1], 2, 128, "n")?;
            RingExpr::Lens(a, n as usize)
        }
        "lens" => return Err(arity("two integers")),
        "product" | "rationalize" => {
            let want = if name == "product" { 2 } else { 1 };
            if !called || args.len() != want || args.iter().any(|a| matches!(a, Arg::Int(..))) {
                return Err(arity(if want == 2 {
                    "two expressions"
                } else {
                    "one expression"
                }));
            }
            let mut it = args.into_iter().map(|a| match a {
                Arg::Expr(e) => Box::new(e),
                Arg::Int(..) => unreachable!(),
            });
            if want == 2 {
                RingExpr::Product(it.next().unwrap(), it.next().unwrap())
            } else {
                RingExpr::Rationalize(it.next().unwrap())
            }
        }
        _ => {
            return Err(CatalogError::UnknownConstructor {
                name: name.to_string(),
                offset,
            })
        }
    };
    if e.total_rank() > MAX_TOTAL_RANK {
        return Err(CatalogError::ParamRange {
            message: format!("{e} has more than {MAX_TOTAL_RANK} generators"),
            offset,
        });
    }
    Ok(e)
}

/// Evaluates over the expression's natural coefficients.
pub fn eval(e: &RingExpr) -> Result<GradedRing, CatalogError> {
    let ring = eval_over(e, e.natural_coefficients())?;
    Ok(ring.with_label(e.render()))
}

/// Evaluates with the given coefficients, using only constructors that are
/// available over them (mod-m rings are never derived from integral ones).
pub fn eval_over(e: &RingExpr, coeffs: Coefficients) -> Result<GradedRing, CatalogError> {
    if !e.available_over(coeffs) {
        return Err(CatalogError::NoModularConstructor {
            expr: e.render(),
            coeffs,
        });
    }
    let ring = match e {
        RingExpr::Point => point_over(coeffs),
        RingExpr::Torus(n) => exterior_algebra_over(*n, coeffs)?,
        RingExpr::Sphere(d) => sphere_over(*d, coeffs)?,
        RingExpr::Cp(n) => truncated_polynomial_over(2, *n, coeffs)?,
        RingExpr::TruncPoly(g, n) => truncated_polynomial_over(*g, *n, coeffs)?,
        RingExpr::RpMod2(d) => rp_mod2(*d)?,
        RingExpr::Lens(a, n) => {
            let l = lens(*a, *n)?;
            if coeffs == Coefficients::Rationals {
                rationalize(&l)?
            } else {
                l
            }
        }
        RingExpr::Product(a, b) => tensor_product(&eval_over(a, coeffs)?, &eval_over(b, coeffs)?)?,
        RingExpr::Rationalize(inner) => rationalize(&eval_over(inner, Coefficients::Integers)?)?,
    };
    let label = if coeffs == e.natural_coefficients() {
        e.render()
    } else {
        format!("{e} over {coeffs}")
    };
    Ok(ring.with_label(label))
}

/// `Z/2[a]/(a^{d+1})`, `deg a = 1`: the mod-2 cohomology of `RP^d`.
pub fn rp_mod2(d: usize) -> Result<GradedRing, RingError> {
    if d % 2 == 0 {
        return Err(RingError::InvalidParameter(format!(
            "rp_mod2 needs odd d, found {d}"
        )));
    }
    power_ring(
        format!("rp_mod2({d})"),
        "a",
        1,
        d + 1,
        Coefficients::Modular(2),
    )
}

/// Integral ring of the lens space `S^{2n-1}/Z_a`: `Z/a` generated by `y^i`
/// in degree `2i` for `1 <= i <= n-1` and `Z` in degrees `0` and `2n-1`.
pub fn lens(a: u64, n: usize) -> Result<GradedRing, RingError> {
    if a < 2 || n < 2 {
        return Err(RingError::InvalidParameter(format!(
            "lens needs a >= 2 and n >= 2, found ({a}, {n})"
        )));
    }
    let top = 2 * n - 1;
    let mut groups = vec![FpAbGroup::trivial(); top + 1];
    let mut names = vec![Vec::new(); top + 1];
    groups[0] = FpAbGroup::free(1, None)?;
    names[0] = vec!["1".to_string()];
    for i in 1..n {
        groups[2 * i] = FpAbGroup::cyclic(a)?;
        names[2 * i] = vec![power_name("y", i)];
    }
    groups[top] = FpAbGroup::free(1, None)?;
    names[top] = vec!["u".to_string()];
    let mut b = RingBuilder::new(
        format!("lens({a}, {n})"),
        Coefficients::Integers,
        groups,
        names,
        vec!["y".into(), "u".into()],
    )?;
    b.set_unit_products()?;
    for i in 1..n {
        for j in 1..n - i {
            b.set(2 * i, 0, 2 * j, 0, vec![(0, BigInt::one())])?;
        }
    }
    Ok(b.build())
}

/// Every catalog expression with top degree at most `max_top`: the named
/// families plus pairwise products of small factors.
pub fn entries_up_to(max_top: usize) -> Vec<RingExpr> {
    let mut out = Vec::new();
    out.push(RingExpr::Point);
    for n in 1..=max_top.min(16) {
        out.push(RingExpr::Torus(n));
    }
    for d in 1..=max_top {
        out.push(RingExpr::Sphere(d));
    }
    for n in 2..=max_top / 2 + 1 {
        out.push(RingExpr::Cp(n));
    }
    for g in (4..=max_top).step_by(2) {
        for n in 2..=max_top / g + 1 {
            out.push(RingExpr::TruncPoly(g, n));
        }
    }
    for d in (1..=max_top).step_by(2) {
        out.push(RingExpr::RpMod2(d));
    }
    for a in 2..=3 {
        for n in 2..=max_top.div_ceil(2) {
            out.push(RingExpr::Lens(a, n));
        }
    }
    let factors: Vec<RingExpr> = [
        RingExpr::Torus(1),
        RingExpr::Torus(2),
        RingExpr::Torus(3),
        RingExpr::Torus(4),
        RingExpr::Sphere(2),
        RingExpr::Sphere(3),
        RingExpr::Sphere(4),
        RingExpr::Cp(2),
        RingExpr::Cp(3),
        RingExpr::RpMod2(3),
        RingExpr::Lens(2, 2),
        RingExpr::Lens(3, 3),
    ]
    .into();
    for (i, a) in factors.iter().enumerate() {
        for b in &factors[i..] {
            let p = RingExpr::Product(Box::new(a.clone()), Box::new(b.clone()));
            let lens_pair = matches!((a, b), (RingExpr::Lens(..), RingExpr::Lens(..)));
            let mixed = matches!(
                (a, b),
                (RingExpr::RpMod2(_), RingExpr::Lens(..))
                    | (RingExpr::Lens(..), RingExpr::RpMod2(_))
            );
            if p.top_degree() <= max_top && !lens_pair && !mixed {
                out.push(p);
            }
        }
    }
    let rational: Vec<RingExpr> = out
        .iter()
        .filter(|e| {
            e.natural_coefficients() == Coefficients::Integers && !matches!(e, RingExpr::Point)
        })
        .filter(|e| matches!(e, RingExpr::Lens(..)) || matches!(e, RingExpr::Product(..)))
        .map(|e| RingExpr::Rationalize(Box::new(e.clone())))
        .collect();
    out.extend(rational);
    out
}

/// Parses an integer combination of generator names of one degree, such as
/// `-2*a - 2*b` or `x1x2`.
pub fn parse_class(r: &GradedRing, degree: usize, text: &str) -> Result<RingClass, CatalogError> {
    let n = r.group(degree).map_or(0, FpAbGroup::ngens);
    let mut coords = vec![BigInt::zero(); n];
    let bytes = text.as_bytes();
    let mut pos = 0;
    let skip_ws = |pos: &mut usize| {
        while *pos < bytes.len() && bytes[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
    };
    let err = |message: String, offset: usize| CatalogError::ClassSpec { message, offset };
    let mut first = true;
    loop {
        skip_ws(&mut pos);
        if pos == bytes.len() {
            if first {
                return Err(err("empty class".into(), pos));
            }
            break;
        }
        let mut sign = BigInt::one();
        match bytes[pos] {
            b'+' | b'-' => {
                if bytes[pos] == b'-' {
                    sign = -sign;
                }
                pos += 1;
                skip_ws(&mut pos);
            }
            _ if !first => return Err(err("expected '+' or '-'".into(), pos)),
            _ => {}
        }
        first = false;
        let start = pos;
        while pos < bytes.len() && bytes[pos].is_ascii_digit() {
            pos += 1;
        }
        let mut coeff = BigInt::one();
        let mut name_start = start;
        if pos > start {
            coeff = text[start..pos].parse().expect("digits");
            skip_ws(&mut pos);
            if pos < bytes.len() && bytes[pos] == b'*' {
                pos += 1;
                skip_ws(&mut pos);
                name_start = pos;
            } else {
                // a bare integer: a multiple of the unit, only meaningful in degree 0
                if degree != 0 {
                    if coeff.is_zero() {
                        continue;
                    }
                    return Err(err(
                        format!("bare integer {coeff} in degree {degree}"),
                        start,
                    ));
                }
                coords[0] += sign * coeff;
                continue;
            }
        }
        pos = name_start;
        while pos < bytes.len()
            && (bytes[pos].is_ascii_alphanumeric() || matches!(bytes[pos], b'_' | b'^'))
        {
            pos += 1;
        }
        let name = &text[name_start..pos];
        if name.is_empty() {
            return Err(err("expected a generator name".into(), name_start));
        }
        let idx = r
            .names(degree)
            .iter()
            .position(|g| g == name)
            .ok_or_else(|| {
                err(
                    format!(
                        "`{name}` is not a degree-{degree} generator of {}",
                        r.label()
                    ),
                    name_start,
                )
            })?;
        coords[idx] += sign * coeff;
    }
    Ok(r.class(degree, coords)?)
}

/// A ring document: JSON text in the canonical layout produced by
/// [`serialize`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RingDocument {
    text: String,
}

pub const DOCUMENT_FORMAT: &str = "cupobs-ring/1";

impl RingDocument {
    pub fn new(text: impl Into<String>) -> Self {
        RingDocument { text: text.into() }
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }
}

impl fmt::Display for RingDocument {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

fn json_str(s: &str) -> String {
    serde_json::to_string(s).expect("strings serialize")
}

fn json_list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    format!("[{}]", items.iter().map(f).collect::<Vec<_>>().join(", "))
}

fn sparse_json(v: &Sparse) -> String {
    json_list(v, |(k, c)| format!("[{k}, {c}]"))
}

/// Deterministic canonical document: fixed field order, one degree and one
/// product per line, products sorted by `(p, q, i, j)`.
pub fn serialize(r: &GradedRing) -> RingDocument {
    let mut s = String::new();
    s.push_str("{\n");
    let _ = writeln!(s, "  \"format\": {},", json_str(DOCUMENT_FORMAT));
    let _ = writeln!(s, "  \"label\": {},", json_str(r.label()));
    let _ = writeln!(
        s,
        "  \"coefficients\": {},",
        json_str(&r.coefficients().to_string())
    );
    let _ = writeln!(s, "  \"top_degree\": {},", r.top_degree());
    let _ = writeln!(
        s,
        "  \"variables\": {},",
        json_list(r.variables(), |v| json_str(v))
    );
    s.push_str("  \"degrees\": [");
    for (k, g) in r.groups().iter().enumerate() {
        s.push_str(if k == 0 { "\n" } else { ",\n" });
        let _ = write!(
            s,
            "    {{\"degree\": {k}, \"generators\": {}, \"relations\": {}}}",
            json_list(r.names(k), |n| json_str(n)),
            json_list(&g.relations().row_iter().collect::<Vec<_>>(), |row| {
                json_list(row, |c| c.to_string())
            })
        );
    }
    s.push_str("\n  ],\n");
    let mut entries: Vec<_> = r.table_entries().collect();
    entries.sort_by_key(|&(p, i, q, j, _)| (p, q, i, j));
    s.push_str("  \"products\": [");
    for (n, (p, i, q, j, v)) in entries.iter().enumerate() {
        s.push_str(if n == 0 { "\n" } else { ",\n" });
        let _ = write!(
            s,
            "    {{\"left\": [{p}, {i}], \"right\": [{q}, {j}], \"value\": {}}}",
            sparse_json(v)
        );
    }
    s.push_str(if entries.is_empty() { "]\n" } else { "\n  ]\n" });
    s.push_str("}\n");
    RingDocument { text: s }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DocFile {
    format: String,
    label: String,
    coefficients: String,
    top_degree: usize,
    variables: Vec<String>,
    degrees: Vec<DegreeDoc>,
    products: Vec<ProductDoc>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct DegreeDoc {
    degree: usize,
    generators: Vec<String>,
    relations: Vec<Vec<serde_json::Number>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProductDoc {
    left: (usize, usize),
    right: (usize, usize),
    value: Vec<(usize, serde_json::Number)>,
}

fn integer(n: &serde_json::Number) -> Result<BigInt, CatalogError> {
    let text = n.to_string();
    text.parse()
        .map_err(|_| CatalogError::Schema(format!("{text} is not an integer")))
}

/// Reads a document and builds the ring, rejecting it when the table
/// breaks a ring axiom.
pub fn load_ring(doc: &RingDocument) -> Result<GradedRing, CatalogError> {
    let file: DocFile =
        serde_json::from_str(doc.as_str()).map_err(|e| CatalogError::Schema(e.to_string()))?;
    if file.format != DOCUMENT_FORMAT {
        return Err(CatalogError::Schema(format!(
            "unsupported format {:?}",
            file.format
        )));
    }
    let coeffs: Coefficients = file.coefficients.parse().map_err(|_| {
        CatalogError::Schema(format!("unknown coefficients {:?}", file.coefficients))
    })?;
    if file.degrees.len() != file.top_degree + 1 {
        return Err(CatalogError::Schema(format!(
            "{} degree entries for top degree {}",
            file.degrees.len(),
            file.top_degree
        )));
    }
    let mut groups = Vec::with_capacity(file.degrees.len());
    let mut names = Vec::with_capacity(file.degrees.len());
    for (k, d) in file.degrees.into_iter().enumerate() {
        if d.degree != k {
            return Err(CatalogError::Schema(format!(
                "degree entry {k} is labelled {}",
                d.degree
            )));
        }
        let ngens = d.generators.len();
        let mut rel = IntMatrix::zeros(0, ngens);
        for (ri, row) in d.relations.iter().enumerate() {
            if row.len() != ngens {
                return Err(CatalogError::Schema(format!(
                    "degree {k}: relation {ri} has {} columns for {ngens} generators",
                    row.len()
                )));
            }
            let row = row.iter().map(integer).collect::<Result<Vec<_>, _>>()?;
            rel.push_row(&row).expect("width checked");
        }
        let g = FpAbGroup::from_relations(ngens, rel, coeffs.modulus())
            .map_err(|e| CatalogError::Schema(format!("degree {k}: {e}")))?;
        groups.push(g);
        names.push(d.generators);
    }
    let mut b = RingBuilder::new(file.label, coeffs, groups, names, file.variables)
        .map_err(|e| CatalogError::Schema(e.to_string()))?;
    let mut seen = std::collections::BTreeSet::new();
    for prod in file.products {
        let ((p, i), (q, j)) = (prod.left, prod.right);
        if !seen.insert((p, i, q, j)) {
            return Err(CatalogError::Schema(format!(
                "duplicate product entry ({p}, {i}) * ({q}, {j})"
            )));
        }
        let value = prod
            .value
            .iter()
            .map(|(k, c)| Ok((*k, integer(c)?)))
            .collect::<Result<Sparse, CatalogError>>()?;
        b.set(p, i, q, j, value)
            .map_err(|e| CatalogError::Schema(format!("product ({p}, {i}) * ({q}, {j}): {e}")))?;
    }
    let ring = b.build();
    let violations = validate(&ring);
    if !violations.is_empty() {
        return Err(CatalogError::AxiomViolation(
            violations.iter().map(|v| v.describe(&ring)).collect(),
        ));
    }
    Ok(ring)
}

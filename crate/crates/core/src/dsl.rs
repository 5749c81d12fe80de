//! A small index-notation language for tensor formulas.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := '-' factor | rational | ref | 'd(' expr ',' index ')' | '(' expr ')'
//! ref    := name ('[' index (',' index)* ']')?
//! index  := ('^' | '_') name
//! ```
//!
//! Variance is explicit on every index. A name repeated once with opposite
//! variance is summed over; `d(e, _n)` is the plain comma derivative and
//! `delta[^i,_j]` is the Kronecker delta.
//!
//! Free-index order of a result: a reference keeps its slot order, a
//! derivative appends its index, and a product of two or more tensors lists
//! contravariant indices first, then covariant ones, each in order of first
//! appearance. Summands must have the same slot valence and the same free
//! names; they are aligned by name before adding.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::jet::JetScalar;
use crate::tensor::{multi_indices, TensorField, Variance};
use crate::Rational;

const KRONECKER: &str = "delta";

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Index {
    pub name: String,
    pub variance: Variance,
}

impl Index {
    pub fn up(name: &str) -> Self {
        Index {
            name: name.to_owned(),
            variance: Variance::Up,
        }
    }

    pub fn down(name: &str) -> Self {
        Index {
            name: name.to_owned(),
            variance: Variance::Down,
        }
    }
}

impl fmt::Display for Index {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mark = match self.variance {
            Variance::Up => '^',
            Variance::Down => '_',
        };
        write!(f, "{mark}{}", self.name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    /// Non-negative; signs are carried by [`Expr::Neg`] and sums.
    Literal(Rational),
    Ref { name: String, indices: Vec<Index> },
    Deriv { inner: Box<Expr>, index: Index },
    Neg(Box<Expr>),
    Product(Vec<Expr>),
    /// `(negated, term)` pairs; the first term is never negated.
    Sum(Vec<(bool, Expr)>),
}

impl Expr {
    /// Parses without checking index discipline.
    pub fn parse(src: &str) -> Result<Self> {
        let mut p = Parser::new(src)?;
        let e = p.expr()?;
        p.expect_end()?;
        Ok(e)
    }
}

/// A parsed expression whose index discipline has been checked.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExpressionPlan {
    expr: Expr,
    free: Vec<Index>,
}

impl ExpressionPlan {
    pub fn expr(&self) -> &Expr {
        &self.expr
    }

    /// Free indices in result slot order.
    pub fn free_indices(&self) -> &[Index] {
        &self.free
    }

    pub fn from_expr(expr: Expr) -> Result<Self> {
        let free = analyze(&expr)?.free;
        Ok(ExpressionPlan { expr, free })
    }
}

pub fn parse(src: &str) -> Result<ExpressionPlan> {
    ExpressionPlan::from_expr(Expr::parse(src)?)
}

// ---------------------------------------------------------------- lexer

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Int(BigInt),
    Plus,
    Minus,
    Star,
    Slash,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Caret,
    Underscore,
    Equals,
}

fn lex(src: &str) -> Result<Vec<(usize, Tok)>> {
    let mut out = Vec::new();
    let mut chars = src.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let tok = if c.is_ascii_alphabetic() {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !c.is_ascii_alphanumeric() {
                    break;
                }
                s.push(c);
                chars.next();
            }
            out.push((pos, Tok::Ident(s)));
            continue;
        } else if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&(_, c)) = chars.peek() {
                if !c.is_ascii_digit() {
                    break;
                }
                s.push(c);
                chars.next();
            }
            out.push((pos, Tok::Int(s.parse().expect("digits"))));
            continue;
        } else {
            match c {
                '+' => Tok::Plus,
                '-' => Tok::Minus,
                '*' => Tok::Star,
                '/' => Tok::Slash,
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                '[' => Tok::LBracket,
                ']' => Tok::RBracket,
                ',' => Tok::Comma,
                '^' => Tok::Caret,
                '_' => Tok::Underscore,
                '=' => Tok::Equals,
                other => {
                    return Err(Error::Parse {
                        position: pos,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        };
        chars.next();
        out.push((pos, tok));
    }
    Ok(out)
}

// ---------------------------------------------------------------- parser

struct Parser {
    toks: Vec<(usize, Tok)>,
    at: usize,
    end: usize,
}

impl Parser {
    fn new(src: &str) -> Result<Self> {
        Ok(Parser {
            toks: lex(src)?,
            at: 0,
            end: src.len(),
        })
    }

    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|(_, t)| t)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.at + 1).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Parse {
            position: self.pos(),
            message: message.into(),
        })
    }

    fn bump(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.at).map(|(_, t)| t.clone());
        self.at += 1;
        t
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek() == Some(tok) {
            self.at += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<()> {
        if self.eat(&tok) {
            Ok(())
        } else {
            self.err(format!("expected {what}"))
        }
    }

    fn expect_end(&self) -> Result<()> {
        match self.peek() {
            None => Ok(()),
            Some(t) => self.err(format!("unexpected trailing {t:?}")),
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut terms = vec![(false, self.term()?)];
        loop {
            let negated = match self.peek() {
                Some(Tok::Plus) => false,
                Some(Tok::Minus) => true,
                _ => break,
            };
            self.at += 1;
            terms.push((negated, self.term()?));
        }
        Ok(if terms.len() == 1 {
            terms.pop().expect("one term").1
        } else {
            Expr::Sum(terms)
        })
    }

    fn term(&mut self) -> Result<Expr> {
        let mut factors = vec![self.factor()?];
        while self.eat(&Tok::Star) {
            factors.push(self.factor()?);
        }
        Ok(if factors.len() == 1 {
            factors.pop().expect("one factor")
        } else {
            Expr::Product(factors)
        })
    }

    fn factor(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.at += 1;
                Ok(Expr::Neg(Box::new(self.factor()?)))
            }
            Some(Tok::Int(_)) => self.rational(),
            Some(Tok::LParen) => {
                self.at += 1;
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) if name == "d" && self.peek2() == Some(&Tok::LParen) => {
                self.at += 2;
                let inner = self.expr()?;
                self.expect(Tok::Comma, "`,` before the derivative index")?;
                let index = self.index()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::Deriv {
                    inner: Box::new(inner),
                    index,
                })
            }
            Some(Tok::Ident(_)) => {
                let Some(Tok::Ident(name)) = self.bump() else {
                    unreachable!()
                };
                let mut indices = Vec::new();
                if self.eat(&Tok::LBracket) {
                    indices.push(self.index()?);
                    while self.eat(&Tok::Comma) {
                        indices.push(self.index()?);
                    }
                    self.expect(Tok::RBracket, "`]`")?;
                }
                Ok(Expr::Ref { name, indices })
            }
            _ => self.err("expected a number, name, `d(`, `(` or `-`"),
        }
    }

    fn rational(&mut self) -> Result<Expr> {
        let Some(Tok::Int(num)) = self.bump() else {
            unreachable!()
        };
        let den = if self.eat(&Tok::Slash) {
            match self.peek() {
                Some(Tok::Int(d)) if d.is_zero() => return self.err("zero denominator"),
                Some(Tok::Int(_)) => {
                    let Some(Tok::Int(d)) = self.bump() else {
                        unreachable!()
                    };
                    d
                }
                _ => return self.err("expected a denominator"),
            }
        } else {
            BigInt::one()
        };
        Ok(Expr::Literal(Rational::new(num, den)))
    }

    fn index(&mut self) -> Result<Index> {
        let variance = match self.peek() {
            Some(Tok::Caret) => Variance::Up,
            Some(Tok::Underscore) => Variance::Down,
            _ => return self.err("expected an index marked `^` or `_`"),
        };
        self.at += 1;
        match self.bump() {
            Some(Tok::Ident(name)) => Ok(Index { name, variance }),
            _ => {
                self.at -= 1;
                self.err("expected an index name")
            }
        }
    }
}

// ---------------------------------------------------------------- printing

#[derive(Clone, Copy, PartialEq)]
enum Ctx {
    Top,
    SumTerm,
    Factor,
    NegOperand,
}

fn write_expr(e: &Expr, ctx: Ctx, f: &mut fmt::Formatter<'_>) -> fmt::Result {
    match e {
        Expr::Literal(q) => write!(f, "{q}"),
        Expr::Ref { name, indices } => {
            write!(f, "{name}")?;
            if !indices.is_empty() {
                write!(f, "[")?;
                for (k, ix) in indices.iter().enumerate() {
                    if k > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{ix}")?;
                }
                write!(f, "]")?;
            }
            Ok(())
        }
        Expr::Deriv { inner, index } => {
            write!(f, "d(")?;
            write_expr(inner, Ctx::Top, f)?;
            write!(f, ", {index})")
        }
        Expr::Neg(inner) => {
            write!(f, "-")?;
            write_expr(inner, Ctx::NegOperand, f)
        }
        Expr::Product(factors) => {
            let paren = matches!(ctx, Ctx::Factor | Ctx::NegOperand);
            if paren {
                write!(f, "(")?;
            }
            for (k, x) in factors.iter().enumerate() {
                if k > 0 {
                    write!(f, "*")?;
                }
                write_expr(x, Ctx::Factor, f)?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
        Expr::Sum(terms) => {
            let paren = ctx != Ctx::Top;
            if paren {
                write!(f, "(")?;
            }
            for (k, (negated, t)) in terms.iter().enumerate() {
                if k > 0 {
                    write!(f, "{}", if *negated { " - " } else { " + " })?;
                }
                write_expr(t, Ctx::SumTerm, f)?;
            }
            if paren {
                write!(f, ")")?;
            }
            Ok(())
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, Ctx::Top, f)
    }
}

impl fmt::Display for ExpressionPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.expr.fmt(f)
    }
}

// ---------------------------------------------------------------- index discipline

struct Signature {
    free: Vec<Index>,
    bound: Vec<String>,
    /// False for pure literals and their sums/negations.
    tensorial: bool,
}

fn discipline(msg: impl Into<String>) -> Error {
    Error::IndexDiscipline(msg.into())
}

/// Pairs up repeated names in `indices`, returning the free ones in order
/// and the names that were summed over.
fn pair_indices(indices: &[Index]) -> Result<(Vec<Index>, Vec<String>)> {
    let mut free = Vec::new();
    let mut bound = Vec::new();
    for (k, ix) in indices.iter().enumerate() {
        let same: Vec<&Index> = indices.iter().filter(|o| o.name == ix.name).collect();
        if same.len() > 2 {
            return Err(discipline(format!("index `{}` appears more than twice", ix.name)));
        }
        if same.len() == 2 {
            if same[0].variance == same[1].variance {
                return Err(discipline(format!(
                    "index `{}` repeated with the same variance",
                    ix.name
                )));
            }
            if indices[..k].iter().all(|o| o.name != ix.name) {
                bound.push(ix.name.clone());
            }
        } else {
            free.push(ix.clone());
        }
    }
    Ok((free, bound))
}

/// Contravariant first, then covariant, each in order of first appearance.
fn canonical_order(free: Vec<Index>) -> Vec<Index> {
    let (mut up, down): (Vec<_>, Vec<_>) = free.into_iter().partition(|i| i.variance == Variance::Up);
    up.extend(down);
    up
}

fn product_signature(parts: &[Signature]) -> Result<Signature> {
    for (a, pa) in parts.iter().enumerate() {
        for name in &pa.bound {
            let clash = parts.iter().enumerate().any(|(b, pb)| {
                b != a && (pb.bound.contains(name) || pb.free.iter().any(|i| &i.name == name))
            });
            if clash {
                return Err(discipline(format!("index `{name}` appears more than twice")));
            }
        }
    }
    let all: Vec<Index> = parts.iter().flat_map(|p| p.free.iter().cloned()).collect();
    let (free, newly) = pair_indices(&all)?;
    let mut bound: Vec<String> = parts.iter().flat_map(|p| p.bound.iter().cloned()).collect();
    bound.extend(newly);
    let tensors = parts.iter().filter(|p| p.tensorial).count();
    Ok(Signature {
        free: if tensors >= 2 { canonical_order(free) } else { free },
        bound,
        tensorial: tensors > 0,
    })
}

fn same_name_set(a: &[Index], b: &[Index]) -> bool {
    a.len() == b.len() && a.iter().all(|i| b.contains(i))
}

fn valence_of(ixs: &[Index]) -> Vec<Variance> {
    ixs.iter().map(|i| i.variance).collect()
}

fn analyze(e: &Expr) -> Result<Signature> {
    match e {
        Expr::Literal(_) => Ok(Signature {
            free: vec![],
            bound: vec![],
            tensorial: false,
        }),
        Expr::Ref { name, indices } => {
            if name == KRONECKER {
                let v = valence_of(indices);
                if v.len() != 2 || v[0] == v[1] {
                    return Err(discipline("delta takes one upper and one lower index"));
                }
            }
            let (free, bound) = pair_indices(indices)?;
            Ok(Signature {
                free,
                bound,
                tensorial: true,
            })
        }
        Expr::Neg(inner) => analyze(inner),
        Expr::Deriv { inner, index } => {
            if index.variance != Variance::Down {
                return Err(discipline(format!(
                    "derivative index `{}` must be covariant",
                    index.name
                )));
            }
            let mut sig = analyze(inner)?;
            if sig.bound.contains(&index.name) {
                return Err(discipline(format!("index `{}` appears more than twice", index.name)));
            }
            match sig.free.iter().position(|i| i.name == index.name) {
                Some(p) if sig.free[p].variance == Variance::Up => {
                    sig.free.remove(p);
                    sig.bound.push(index.name.clone());
                }
                Some(_) => {
                    return Err(discipline(format!(
                        "index `{}` repeated with the same variance",
                        index.name
                    )))
                }
                None => sig.free.push(index.clone()),
            }
            sig.tensorial = true;
            Ok(sig)
        }
        Expr::Product(factors) => {
            let parts = factors.iter().map(analyze).collect::<Result<Vec<_>>>()?;
            product_signature(&parts)
        }
        Expr::Sum(terms) => {
            let mut sigs = terms.iter().map(|(_, t)| analyze(t));
            let mut first = sigs.next().expect("sum has terms")?;
            for sig in sigs {
                let sig = sig?;
                if valence_of(&sig.free) != valence_of(&first.free) || !same_name_set(&sig.free, &first.free)
                {
                    return Err(discipline(format!(
                        "summands have different free indices: {} vs {}",
                        show_indices(&first.free),
                        show_indices(&sig.free)
                    )));
                }
                first.bound.extend(sig.bound);
                first.tensorial |= sig.tensorial;
            }
            first.bound.sort();
            first.bound.dedup();
            Ok(first)
        }
    }
}

fn show_indices(ixs: &[Index]) -> String {
    let parts: Vec<String> = ixs.iter().map(ToString::to_string).collect();
    format!("[{}]", parts.join(","))
}

// ---------------------------------------------------------------- evaluation

struct Labeled {
    tensor: TensorField,
    labels: Vec<Index>,
}

enum Value {
    Scalar(Rational),
    Tensor(Labeled),
}

struct EvalCtx<'a> {
    bindings: &'a BTreeMap<String, TensorField>,
    dim: Option<usize>,
    order: usize,
}

impl<'a> EvalCtx<'a> {
    fn new(bindings: &'a BTreeMap<String, TensorField>) -> Result<Self> {
        let mut dim = None;
        let mut order = 0;
        for t in bindings.values() {
            match dim {
                None => dim = Some(t.dim()),
                Some(d) if d != t.dim() => {
                    return Err(Error::DimensionMismatch {
                        left: d,
                        right: t.dim(),
                    })
                }
                _ => {}
            }
            order = order.max(t.order());
        }
        Ok(EvalCtx {
            bindings,
            dim,
            order,
        })
    }

    fn dim(&self) -> Result<usize> {
        self.dim
            .ok_or_else(|| Error::Malformed("cannot infer the dimension without bindings".into()))
    }

    fn scalar_tensor(&self, q: Rational) -> Result<TensorField> {
        let dim = self.dim()?;
        Ok(TensorField::scalar(JetScalar::constant(dim, self.order, q)))
    }

    fn as_tensor(&self, v: Value) -> Result<Labeled> {
        match v {
            Value::Tensor(l) => Ok(l),
            Value::Scalar(q) => Ok(Labeled {
                tensor: self.scalar_tensor(q)?,
                labels: vec![],
            }),
        }
    }

    fn eval(&self, e: &Expr) -> Result<Value> {
        match e {
            Expr::Literal(q) => Ok(Value::Scalar(q.clone())),
            Expr::Ref { name, indices } => self.eval_ref(name, indices).map(Value::Tensor),
            Expr::Neg(inner) => Ok(match self.eval(inner)? {
                Value::Scalar(q) => Value::Scalar(-q),
                Value::Tensor(l) => Value::Tensor(Labeled {
                    tensor: l.tensor.neg(),
                    labels: l.labels,
                }),
            }),
            Expr::Deriv { inner, index } => {
                let inner = self.eval(inner)?;
                let l = self.as_tensor(inner)?;
                let grad = l.tensor.gradient()?;
                let mut labels = l.labels;
                match labels.iter().position(|i| i.name == index.name) {
                    Some(p) => {
                        labels.remove(p);
                        let last = grad.rank() - 1;
                        Ok(Value::Tensor(Labeled {
                            tensor: grad.contract(p, last)?,
                            labels,
                        }))
                    }
                    None => {
                        labels.push(index.clone());
                        Ok(Value::Tensor(Labeled {
                            tensor: grad,
                            labels,
                        }))
                    }
                }
            }
            Expr::Product(factors) => {
                let mut coef = Rational::one();
                let mut tensors = Vec::new();
                for x in factors {
                    match self.eval(x)? {
                        Value::Scalar(q) => coef *= q,
                        Value::Tensor(l) => tensors.push(l),
                    }
                }
                match tensors.len() {
                    0 => Ok(Value::Scalar(coef)),
                    1 => {
                        let l = tensors.pop().expect("one tensor");
                        Ok(Value::Tensor(Labeled {
                            tensor: l.tensor.scale(&coef),
                            labels: l.labels,
                        }))
                    }
                    _ => {
                        let sigs: Vec<Signature> = tensors
                            .iter()
                            .map(|l| Signature {
                                free: l.labels.clone(),
                                bound: vec![],
                                tensorial: true,
                            })
                            .collect();
                        let out = product_signature(&sigs)?.free;
                        let parts: Vec<(&TensorField, &[Index])> =
                            tensors.iter().map(|l| (&l.tensor, l.labels.as_slice())).collect();
                        let t = einsum(&parts, &out)?;
                        Ok(Value::Tensor(Labeled {
                            tensor: t.scale(&coef),
                            labels: out,
                        }))
                    }
                }
            }
            Expr::Sum(terms) => {
                let values = terms
                    .iter()
                    .map(|(neg, t)| Ok((*neg, self.eval(t)?)))
                    .collect::<Result<Vec<_>>>()?;
                if values.iter().all(|(_, v)| matches!(v, Value::Scalar(_))) {
                    let total = values.into_iter().fold(Rational::zero(), |acc, (neg, v)| {
                        let Value::Scalar(q) = v else { unreachable!() };
                        if neg {
                            acc - q
                        } else {
                            acc + q
                        }
                    });
                    return Ok(Value::Scalar(total));
                }
                let mut acc: Option<Labeled> = None;
                for (neg, v) in values {
                    let l = self.as_tensor(v)?;
                    acc = Some(match acc {
                        None => Labeled {
                            tensor: if neg { l.tensor.neg() } else { l.tensor },
                            labels: l.labels,
                        },
                        Some(a) => {
                            let aligned = align(&l, &a.labels)?;
                            let tensor = if neg {
                                a.tensor.sub(&aligned)?
                            } else {
                                a.tensor.add(&aligned)?
                            };
                            Labeled {
                                tensor,
                                labels: a.labels,
                            }
                        }
                    });
                }
                Ok(Value::Tensor(acc.expect("sum has terms")))
            }
        }
    }

    fn eval_ref(&self, name: &str, indices: &[Index]) -> Result<Labeled> {
        let tensor = match self.bindings.get(name) {
            Some(t) => t.clone(),
            None if name == KRONECKER => {
                let delta = TensorField::kronecker(self.dim()?, self.order);
                if indices.len() == 2 && indices[0].variance == Variance::Down {
                    delta.permute(&[1, 0])?
                } else {
                    delta
                }
            }
            None => return Err(Error::Unbound(name.to_owned())),
        };
        if tensor.valence() != valence_of(indices).as_slice() {
            return Err(Error::ValenceMismatch(format!(
                "`{name}` has valence {:?} but is used as {}",
                tensor.valence(),
                show_indices(indices)
            )));
        }
        let (free, bound) = pair_indices(indices)?;
        if bound.is_empty() {
            return Ok(Labeled {
                tensor,
                labels: indices.to_vec(),
            });
        }
        let t = einsum(&[(&tensor, indices)], &free)?;
        Ok(Labeled { tensor: t, labels: free })
    }
}

/// Permutes `l` so its slots follow the names in `target`.
fn align(l: &Labeled, target: &[Index]) -> Result<TensorField> {
    let perm = target
        .iter()
        .map(|t| {
            l.labels
                .iter()
                .position(|x| x.name == t.name)
                .ok_or_else(|| discipline(format!("index `{}` missing from summand", t.name)))
        })
        .collect::<Result<Vec<_>>>()?;
    l.tensor.permute(&perm)
}

/// Sums the product of the factors over every index name not in `out`.
fn einsum(factors: &[(&TensorField, &[Index])], out: &[Index]) -> Result<TensorField> {
    let dim = factors[0].0.dim();
    let order = factors.iter().map(|(t, _)| t.order()).min().unwrap_or(0);
    let mut names: Vec<&str> = out.iter().map(|i| i.name.as_str()).collect();
    for (_, labels) in factors {
        for ix in labels.iter() {
            if !names.contains(&ix.name.as_str()) {
                names.push(&ix.name);
            }
        }
    }
    let slots: Vec<Vec<usize>> = factors
        .iter()
        .map(|(_, labels)| {
            labels
                .iter()
                .map(|ix| names.iter().position(|n| *n == ix.name).expect("collected"))
                .collect()
        })
        .collect();
    let free_count = out.len();
    let mut comps: Vec<JetScalar> = vec![JetScalar::zero(dim, order); dim.pow(free_count as u32)];
    let mut ix = Vec::new();
    for assign in multi_indices(dim, names.len()) {
        let mut term: Option<JetScalar> = None;
        let mut zero = false;
        for ((t, _), slot) in factors.iter().zip(&slots) {
            ix.clear();
            ix.extend(slot.iter().map(|&s| assign[s]));
            let c = t.get(&ix);
            if c.is_zero() {
                zero = true;
                break;
            }
            term = Some(match term {
                None => c.clone(),
                Some(acc) => acc.checked_mul(c)?,
            });
        }
        if zero {
            continue;
        }
        let flat = assign[..free_count].iter().fold(0, |acc, &a| acc * dim + a);
        comps[flat] = comps[flat].checked_add(&term.expect("at least one factor"))?;
    }
    TensorField::new(dim, valence_of(out), comps)
}

/// Evaluates `plan`; the result's slots follow [`ExpressionPlan::free_indices`].
pub fn evaluate(plan: &ExpressionPlan, bindings: &BTreeMap<String, TensorField>) -> Result<TensorField> {
    let ctx = EvalCtx::new(bindings)?;
    let v = ctx.eval(&plan.expr)?;
    Ok(ctx.as_tensor(v)?.tensor)
}

// ---------------------------------------------------------------- assignment files

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Assignment {
    pub name: String,
    pub indices: Vec<Index>,
    pub plan: ExpressionPlan,
}

/// Parses one `Name[indices] = expr` line.
pub fn parse_assignment(line: &str) -> Result<Assignment> {
    let eq = line.find('=').ok_or(Error::Parse {
        position: line.len(),
        message: "expected `Name[indices] = expr`".into(),
    })?;
    let (lhs_src, rhs_src) = (&line[..eq], &line[eq + 1..]);
    let lhs = Expr::parse(lhs_src)?;
    let Expr::Ref { name, indices } = lhs else {
        return Err(Error::Parse {
            position: 0,
            message: "left-hand side must be a name with indices".into(),
        });
    };
    if name == KRONECKER {
        return Err(Error::Parse {
            position: 0,
            message: "`delta` is reserved".into(),
        });
    }
    let plan = parse(rhs_src).map_err(|e| match e {
        Error::Parse { position, message } => Error::Parse {
            position: position + eq + 1,
            message,
        },
        other => other,
    })?;
    let (free, bound) = pair_indices(&indices)?;
    if !bound.is_empty() {
        return Err(discipline("left-hand side indices must be distinct"));
    }
    if !same_name_set(&free, &plan.free) {
        return Err(discipline(format!(
            "left-hand side {} does not match free indices {}",
            show_indices(&free),
            show_indices(&plan.free)
        )));
    }
    Ok(Assignment {
        name,
        indices,
        plan,
    })
}

/// Evaluates assignments line by line. Blank lines and lines starting with
/// `#` are skipped; later lines see earlier results. Errors carry the
/// 1-based line number.
pub fn evaluate_program(
    src: &str,
    bindings: &BTreeMap<String, TensorField>,
) -> Result<Vec<(String, TensorField)>> {
    let mut env = bindings.clone();
    let mut out = Vec::new();
    for (k, line) in src.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let at_line = |e| Error::AtLine {
            line: k + 1,
            source: Box::new(e),
        };
        let a = parse_assignment(line).map_err(at_line)?;
        let value = evaluate(&a.plan, &env).map_err(at_line)?;
        let labeled = Labeled {
            tensor: value,
            labels: a.plan.free.clone(),
        };
        let value = align(&labeled, &a.indices).map_err(at_line)?;
        env.insert(a.name.clone(), value.clone());
        out.push((a.name, value));
    }
    Ok(out)
}

#[cfg(test)]
mod tests;

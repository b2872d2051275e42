//! Expression trees over chart coordinates.
//!
//! The node set is deliberately small: exact rational constants, symbols,
//! n-ary sums and products, integer powers and the five functions sqrt, exp,
//! log, sin, cos. Everything downstream (forms, metrics, connections) stores
//! its components as [`Expr`] values. Trees are immutable and shared through
//! `Arc`, so expressions are cheap to clone and safe to send across threads.
//!
//! Constructors keep a light canonical form: sums and products are flattened
//! and sorted, rational constants are folded with overflow checking, like
//! terms and repeated factors are collected. Heavier rewriting (common
//! denominators, exact cancellation) lives in [`crate::symcalc::poly`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_rational::Ratio;
use num_traits::{CheckedAdd, CheckedMul, Signed, Zero};
use thiserror::Error;

/// Exact rational scalar with checked arithmetic.
///
/// All folding in the constructors goes through the checked operations; when
/// a numerator or denominator would overflow `i64` the fold is declined and
/// the expression is left unfolded instead of silently losing precision.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Q(pub Ratio<i64>);

impl Q {
    pub const ZERO: Q = Q(Ratio::new_raw(0, 1));
    pub const ONE: Q = Q(Ratio::new_raw(1, 1));

    pub fn new(num: i64, den: i64) -> Q {
        Q(Ratio::new(num, den))
    }
    pub fn int(n: i64) -> Q {
        Q(Ratio::from_integer(n))
    }
    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
    pub fn is_one(&self) -> bool {
        self.0 == Ratio::from_integer(1)
    }
    pub fn to_f64(&self) -> f64 {
        *self.0.numer() as f64 / *self.0.denom() as f64
    }
    pub fn as_integer(&self) -> Option<i64> {
        if *self.0.denom() == 1 {
            Some(*self.0.numer())
        } else {
            None
        }
    }

    pub fn checked_add(self, rhs: Q) -> Option<Q> {
        self.0.checked_add(&rhs.0).map(Q)
    }
    pub fn checked_mul(self, rhs: Q) -> Option<Q> {
        self.0.checked_mul(&rhs.0).map(Q)
    }
    pub fn checked_neg(self) -> Option<Q> {
        Q::int(-1).checked_mul(self)
    }
    pub fn checked_recip(self) -> Option<Q> {
        if self.is_zero() {
            None
        } else {
            Some(Q(self.0.recip()))
        }
    }
    pub fn checked_pow(self, k: i64) -> Option<Q> {
        let mut base = if k < 0 { self.checked_recip()? } else { self };
        let mut n = k.unsigned_abs();
        let mut acc = Q::ONE;
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.checked_mul(base)?;
            }
            n >>= 1;
            if n > 0 {
                base = base.checked_mul(base)?;
            }
        }
        Some(acc)
    }

    /// Exact square root if `self` is a perfect square of a rational.
    pub fn sqrt_exact(self) -> Option<Q> {
        if self.0.is_negative() {
            return None;
        }
        let isqrt = |n: i64| -> Option<i64> {
            let r = (n as f64).sqrt().round() as i64;
            for c in [r - 1, r, r + 1] {
                if c >= 0 && c.checked_mul(c) == Some(n) {
                    return Some(c);
                }
            }
            None
        };
        Some(Q(Ratio::new(isqrt(*self.0.numer())?, isqrt(*self.0.denom())?)))
    }
}

impl fmt::Debug for Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Errors raised when evaluating an expression at a point.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EvalError {
    #[error("unbound symbol `{0}`")]
    Unbound(String),
    #[error("denominator below singularity threshold at `{0}`")]
    Singular(String),
    #[error("sqrt of negative value")]
    NegativeSqrt,
    #[error("log of non-positive value")]
    LogDomain,
    #[error("evaluation produced a non-finite value")]
    NonFinite,
}

/// Denominator magnitude below which evaluation refuses to divide.
///
/// Conformally compact expressions blow up at the boundary; the samplers
/// treat this error as "redraw the point" rather than returning huge values.
pub const SINGULAR_EPS: f64 = 1e-6;

#[derive(PartialEq, Eq, Hash)]
pub enum Node {
    Num(Q),
    Sym(Box<str>),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Pow(Expr, i64),
    Sqrt(Expr),
    Exp(Expr),
    Log(Expr),
    Sin(Expr),
    Cos(Expr),
}

/// Immutable symbolic expression (shared tree).
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Expr(Arc<Node>);

impl Default for Expr {
    fn default() -> Expr {
        Expr::zero()
    }
}

impl Expr {
    pub fn node(&self) -> &Node {
        &self.0
    }

    pub fn num(q: Q) -> Expr {
        Expr(Arc::new(Node::Num(q)))
    }
    pub fn int(n: i64) -> Expr {
        Expr::num(Q::int(n))
    }
    pub fn rational(num: i64, den: i64) -> Expr {
        Expr::num(Q::new(num, den))
    }
    pub fn zero() -> Expr {
        Expr::int(0)
    }
    pub fn one() -> Expr {
        Expr::int(1)
    }
    pub fn sym(name: &str) -> Expr {
        Expr(Arc::new(Node::Sym(name.into())))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_zero())
    }
    pub fn is_one(&self) -> bool {
        matches!(self.node(), Node::Num(q) if q.is_one())
    }
    pub fn as_num(&self) -> Option<Q> {
        match self.node() {
            Node::Num(q) => Some(*q),
            _ => None,
        }
    }

    /// Number of nodes in the tree (shared nodes counted once per occurrence).
    pub fn size(&self) -> usize {
        match self.node() {
            Node::Num(_) | Node::Sym(_) => 1,
            Node::Add(xs) | Node::Mul(xs) => 1 + xs.iter().map(Expr::size).sum::<usize>(),
            Node::Pow(b, _) => 1 + b.size(),
            Node::Sqrt(a) | Node::Exp(a) | Node::Log(a) | Node::Sin(a) | Node::Cos(a) => {
                1 + a.size()
            }
        }
    }

    fn rank(&self) -> u8 {
        match self.node() {
            Node::Num(_) => 0,
            Node::Sym(_) => 1,
            Node::Pow(..) => 2,
            Node::Mul(_) => 3,
            Node::Add(_) => 4,
            Node::Sqrt(_) => 5,
            Node::Exp(_) => 6,
            Node::Log(_) => 7,
            Node::Sin(_) => 8,
            Node::Cos(_) => 9,
        }
    }
}

// Structural total order; gives the constructors a deterministic canonical
// term ordering independent of construction history.
impl Ord for Expr {
    fn cmp(&self, other: &Expr) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        match self.rank().cmp(&other.rank()) {
            Ordering::Equal => {}
            o => return o,
        }
        match (self.node(), other.node()) {
            (Node::Num(a), Node::Num(b)) => a.cmp(b),
            (Node::Sym(a), Node::Sym(b)) => a.cmp(b),
            (Node::Add(a), Node::Add(b)) | (Node::Mul(a), Node::Mul(b)) => a.cmp(b),
            (Node::Pow(a, i), Node::Pow(b, j)) => a.cmp(b).then(i.cmp(j)),
            (Node::Sqrt(a), Node::Sqrt(b))
            | (Node::Exp(a), Node::Exp(b))
            | (Node::Log(a), Node::Log(b))
            | (Node::Sin(a), Node::Sin(b))
            | (Node::Cos(a), Node::Cos(b)) => a.cmp(b),
            _ => unreachable!("rank already distinguished variants"),
        }
    }
}
impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Expr) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Splits a term into (rational coefficient, remaining key).
/// The key is `None` for pure numbers.
fn coeff_key(e: &Expr) -> (Q, Option<Expr>) {
    match e.node() {
        Node::Num(q) => (*q, None),
        Node::Mul(fs) => {
            if let Node::Num(q) = fs[0].node() {
                let rest = fs[1..].to_vec();
                let key = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr(Arc::new(Node::Mul(rest)))
                };
                (*q, Some(key))
            } else {
                (Q::ONE, Some(e.clone()))
            }
        }
        _ => (Q::ONE, Some(e.clone())),
    }
}

fn base_exp(e: &Expr) -> (Expr, i64) {
    match e.node() {
        Node::Pow(b, k) => (b.clone(), *k),
        _ => (e.clone(), 1),
    }
}

/// n-ary sum with flattening, constant folding and like-term collection.
pub fn add(terms: impl IntoIterator<Item = Expr>) -> Expr {
    let mut constant = Q::ZERO;
    let mut unfolded: Vec<Expr> = Vec::new(); // Num terms whose fold overflowed
    let mut coeffs: BTreeMap<Expr, Q> = BTreeMap::new();

    fn absorb(
        e: Expr,
        constant: &mut Q,
        unfolded: &mut Vec<Expr>,
        coeffs: &mut BTreeMap<Expr, Q>,
    ) {
        match e.node() {
            Node::Add(xs) => {
                for x in xs {
                    absorb(x.clone(), constant, unfolded, coeffs);
                }
            }
            _ => {
                let (q, key) = coeff_key(&e);
                match key {
                    None => match constant.checked_add(q) {
                        Some(c) => *constant = c,
                        None => unfolded.push(e),
                    },
                    Some(k) => {
                        let entry = coeffs.entry(k.clone()).or_insert(Q::ZERO);
                        match entry.checked_add(q) {
                            Some(c) => *entry = c,
                            None => unfolded.push(e),
                        }
                    }
                }
            }
        }
    }

    for t in terms {
        absorb(t, &mut constant, &mut unfolded, &mut coeffs);
    }

    let mut out: Vec<Expr> = Vec::new();
    if !constant.is_zero() {
        out.push(Expr::num(constant));
    }
    for (key, q) in coeffs {
        if q.is_zero() {
            continue;
        }
        if q.is_one() {
            out.push(key);
        } else {
            out.push(mul([Expr::num(q), key]));
        }
    }
    out.extend(unfolded);

    match out.len() {
        0 => Expr::zero(),
        1 => out.into_iter().next().unwrap(),
        _ => {
            // Keep the sorted-order invariant (numeric head first, then keys).
            out.sort();
            Expr(Arc::new(Node::Add(out)))
        }
    }
}

/// n-ary product with flattening, zero/one folding and power collection.
pub fn mul(factors: impl IntoIterator<Item = Expr>) -> Expr {
    let mut constant = Q::ONE;
    let mut unfolded: Vec<Expr> = Vec::new();
    let mut exps: BTreeMap<Expr, i64> = BTreeMap::new();
    let mut saw_zero = false;

    fn absorb(
        e: Expr,
        constant: &mut Q,
        unfolded: &mut Vec<Expr>,
        exps: &mut BTreeMap<Expr, i64>,
        saw_zero: &mut bool,
    ) {
        match e.node() {
            Node::Mul(xs) => {
                for x in xs {
                    absorb(x.clone(), constant, unfolded, exps, saw_zero);
                }
            }
            Node::Num(q) => {
                if q.is_zero() {
                    *saw_zero = true;
                } else {
                    match constant.checked_mul(*q) {
                        Some(c) => *constant = c,
                        None => unfolded.push(e),
                    }
                }
            }
            _ => {
                let (b, k) = base_exp(&e);
                *exps.entry(b).or_insert(0) += k;
            }
        }
    }

    for f in factors {
        absorb(f, &mut constant, &mut unfolded, &mut exps, &mut saw_zero);
    }
    if saw_zero {
        return Expr::zero();
    }

    let mut out: Vec<Expr> = Vec::new();
    for (b, k) in exps {
        if k == 0 {
            continue;
        }
        let p = pow(b, k);
        match p.node() {
            Node::Num(q) => match constant.checked_mul(*q) {
                Some(c) => constant = c,
                None => unfolded.push(p),
            },
            Node::Mul(_) => {
                // pow() of a sqrt can re-expand into a product; absorb its
                // factors directly (bounded: no further nesting possible).
                if let Node::Mul(fs) = p.node() {
                    for f in fs {
                        match f.node() {
                            Node::Num(q) => match constant.checked_mul(*q) {
                                Some(c) => constant = c,
                                None => unfolded.push(f.clone()),
                            },
                            _ => out.push(f.clone()),
                        }
                    }
                }
            }
            _ => out.push(p),
        }
    }
    if constant.is_zero() {
        return Expr::zero();
    }
    out.extend(unfolded);
    out.sort();

    if out.is_empty() {
        return Expr::num(constant);
    }
    if !constant.is_one() {
        out.insert(0, Expr::num(constant));
    }
    match out.len() {
        1 => out.into_iter().next().unwrap(),
        _ => Expr(Arc::new(Node::Mul(out))),
    }
}

/// Integer power with the usual structural folds.
pub fn pow(base: Expr, k: i64) -> Expr {
    if k == 0 {
        // 0^0 is taken as 1; charts never evaluate exactly at excluded points.
        return Expr::one();
    }
    if k == 1 {
        return base;
    }
    match base.node() {
        Node::Num(q) => {
            if let Some(r) = q.checked_pow(k) {
                return Expr::num(r);
            }
            Expr(Arc::new(Node::Pow(base.clone(), k)))
        }
        Node::Pow(b, j) => pow(b.clone(), j * k),
        Node::Mul(fs) => mul(fs.iter().map(|f| pow(f.clone(), k))),
        Node::Sqrt(u) => {
            let m = k.div_euclid(2);
            let r = k.rem_euclid(2);
            if r == 0 {
                pow(u.clone(), m)
            } else {
                mul([pow(u.clone(), m), sqrt(u.clone())])
            }
        }
        _ => Expr(Arc::new(Node::Pow(base, k))),
    }
}

pub fn neg(e: Expr) -> Expr {
    mul([Expr::int(-1), e])
}
pub fn sub(a: Expr, b: Expr) -> Expr {
    add([a, neg(b)])
}
pub fn div(a: Expr, b: Expr) -> Expr {
    mul([a, pow(b, -1)])
}

pub fn sqrt(e: Expr) -> Expr {
    if let Node::Num(q) = e.node() {
        if let Some(r) = q.sqrt_exact() {
            return Expr::num(r);
        }
    }
    Expr(Arc::new(Node::Sqrt(e)))
}

pub fn exp(e: Expr) -> Expr {
    if e.is_zero() {
        return Expr::one();
    }
    Expr(Arc::new(Node::Exp(e)))
}

pub fn log(e: Expr) -> Expr {
    if e.is_one() {
        return Expr::zero();
    }
    Expr(Arc::new(Node::Log(e)))
}

pub fn sin(e: Expr) -> Expr {
    if e.is_zero() {
        return Expr::zero();
    }
    Expr(Arc::new(Node::Sin(e)))
}

pub fn cos(e: Expr) -> Expr {
    if e.is_zero() {
        return Expr::one();
    }
    Expr(Arc::new(Node::Cos(e)))
}

impl Expr {
    /// Exact partial derivative with respect to the named symbol.
    pub fn partial(&self, coord: &str) -> Expr {
        match self.node() {
            Node::Num(_) => Expr::zero(),
            Node::Sym(s) => {
                if &**s == coord {
                    Expr::one()
                } else {
                    Expr::zero()
                }
            }
            Node::Add(xs) => add(xs.iter().map(|x| x.partial(coord))),
            Node::Mul(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for (i, fi) in fs.iter().enumerate() {
                    let d = fi.partial(coord);
                    if d.is_zero() {
                        continue;
                    }
                    let mut prod: Vec<Expr> = Vec::with_capacity(fs.len());
                    prod.push(d);
                    for (j, fj) in fs.iter().enumerate() {
                        if j != i {
                            prod.push(fj.clone());
                        }
                    }
                    terms.push(mul(prod));
                }
                add(terms)
            }
            Node::Pow(b, k) => {
                let d = b.partial(coord);
                if d.is_zero() {
                    return Expr::zero();
                }
                mul([Expr::int(*k), pow(b.clone(), k - 1), d])
            }
            Node::Sqrt(u) => {
                let d = u.partial(coord);
                if d.is_zero() {
                    return Expr::zero();
                }
                mul([Expr::rational(1, 2), d, pow(sqrt(u.clone()), -1)])
            }
            Node::Exp(u) => mul([u.partial(coord), exp(u.clone())]),
            Node::Log(u) => mul([u.partial(coord), pow(u.clone(), -1)]),
            Node::Sin(u) => mul([u.partial(coord), cos(u.clone())]),
            Node::Cos(u) => mul([Expr::int(-1), u.partial(coord), sin(u.clone())]),
        }
    }

    /// Substitute an expression for a symbol.
    pub fn subst(&self, name: &str, value: &Expr) -> Expr {
        match self.node() {
            Node::Num(_) => self.clone(),
            Node::Sym(s) => {
                if &**s == name {
                    value.clone()
                } else {
                    self.clone()
                }
            }
            Node::Add(xs) => add(xs.iter().map(|x| x.subst(name, value))),
            Node::Mul(xs) => mul(xs.iter().map(|x| x.subst(name, value))),
            Node::Pow(b, k) => pow(b.subst(name, value), *k),
            Node::Sqrt(u) => sqrt(u.subst(name, value)),
            Node::Exp(u) => exp(u.subst(name, value)),
            Node::Log(u) => log(u.subst(name, value)),
            Node::Sin(u) => sin(u.subst(name, value)),
            Node::Cos(u) => cos(u.subst(name, value)),
        }
    }

    /// Collect the free symbols of the expression.
    pub fn symbols(&self) -> Vec<String> {
        fn walk(e: &Expr, out: &mut Vec<String>) {
            match e.node() {
                Node::Num(_) => {}
                Node::Sym(s) => {
                    if !out.iter().any(|x| x == &**s) {
                        out.push(s.to_string());
                    }
                }
                Node::Add(xs) | Node::Mul(xs) => xs.iter().for_each(|x| walk(x, out)),
                Node::Pow(b, _) => walk(b, out),
                Node::Sqrt(a) | Node::Exp(a) | Node::Log(a) | Node::Sin(a) | Node::Cos(a) => {
                    walk(a, out)
                }
            }
        }
        let mut out = Vec::new();
        walk(self, &mut out);
        out.sort();
        out
    }

    /// Evaluate at a point given by a symbol lookup.
    pub fn eval_with(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        let v = self.eval_inner(lookup)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFinite)
        }
    }

    fn eval_inner(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<f64, EvalError> {
        match self.node() {
            Node::Num(q) => Ok(q.to_f64()),
            Node::Sym(s) => lookup(s).ok_or_else(|| EvalError::Unbound(s.to_string())),
            Node::Add(xs) => {
                let mut acc = 0.0;
                for x in xs {
                    acc += x.eval_inner(lookup)?;
                }
                Ok(acc)
            }
            Node::Mul(xs) => {
                let mut acc = 1.0;
                for x in xs {
                    acc *= x.eval_inner(lookup)?;
                }
                Ok(acc)
            }
            Node::Pow(b, k) => {
                let v = b.eval_inner(lookup)?;
                if *k < 0 && v.abs() < SINGULAR_EPS {
                    return Err(EvalError::Singular(format!("{}", b)));
                }
                Ok(v.powi(*k as i32))
            }
            Node::Sqrt(u) => {
                let v = u.eval_inner(lookup)?;
                if v < 0.0 {
                    Err(EvalError::NegativeSqrt)
                } else {
                    Ok(v.sqrt())
                }
            }
            Node::Exp(u) => Ok(u.eval_inner(lookup)?.exp()),
            Node::Log(u) => {
                let v = u.eval_inner(lookup)?;
                if v <= 0.0 {
                    Err(EvalError::LogDomain)
                } else {
                    Ok(v.ln())
                }
            }
            Node::Sin(u) => Ok(u.eval_inner(lookup)?.sin()),
            Node::Cos(u) => Ok(u.eval_inner(lookup)?.cos()),
        }
    }

    /// Evaluate together with a magnitude estimate.
    ///
    /// The magnitude is a recursive upper bound for the size of the terms
    /// that were combined (|a|+|b| across sums, |a||b| across products), so
    /// `|value| <= tol * (1 + magnitude)` is a cancellation-aware zero test.
    pub fn eval_mag(&self, lookup: &dyn Fn(&str) -> Option<f64>) -> Result<(f64, f64), EvalError> {
        match self.node() {
            Node::Num(q) => {
                let v = q.to_f64();
                Ok((v, v.abs()))
            }
            Node::Sym(s) => {
                let v = lookup(s).ok_or_else(|| EvalError::Unbound(s.to_string()))?;
                Ok((v, v.abs()))
            }
            Node::Add(xs) => {
                let (mut v, mut m) = (0.0, 0.0);
                for x in xs {
                    let (xv, xm) = x.eval_mag(lookup)?;
                    v += xv;
                    m += xm;
                }
                Ok((v, m))
            }
            Node::Mul(xs) => {
                let (mut v, mut m) = (1.0, 1.0);
                for x in xs {
                    let (xv, xm) = x.eval_mag(lookup)?;
                    v *= xv;
                    m *= xm;
                }
                Ok((v, m))
            }
            Node::Pow(b, k) => {
                let (v, m) = b.eval_mag(lookup)?;
                if *k < 0 && v.abs() < SINGULAR_EPS {
                    return Err(EvalError::Singular(format!("{}", b)));
                }
                let mv = if *k < 0 { v.abs() } else { m };
                Ok((v.powi(*k as i32), mv.powi(*k as i32)))
            }
            _ => {
                let v = self.eval_inner(lookup)?;
                Ok((v, v.abs()))
            }
        }
    }
}

impl std::ops::Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        add([self, rhs])
    }
}
impl std::ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        sub(self, rhs)
    }
}
impl std::ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        mul([self, rhs])
    }
}
impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        neg(self)
    }
}

// ---------------------------------------------------------------------------
// Printing. Output re-parses under the DSL grammar.
// ---------------------------------------------------------------------------

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f, 0)
    }
}
impl fmt::Debug for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(self, f, 0)
    }
}

fn write_q(q: &Q, f: &mut fmt::Formatter<'_>, in_product: bool) -> fmt::Result {
    let (n, d) = (*q.0.numer(), *q.0.denom());
    if d == 1 {
        if n < 0 && in_product {
            write!(f, "({})", n)
        } else {
            write!(f, "{}", n)
        }
    } else if n < 0 || in_product {
        write!(f, "({}/{})", n, d)
    } else {
        write!(f, "{}/{}", n, d)
    }
}

// prec: 0 = sum context, 1 = product context, 2 = power/atom context
fn write_expr(e: &Expr, f: &mut fmt::Formatter<'_>, prec: u8) -> fmt::Result {
    match e.node() {
        Node::Num(q) => write_q(q, f, prec >= 1),
        Node::Sym(s) => write!(f, "{}", s),
        Node::Add(xs) => {
            if prec >= 1 {
                write!(f, "(")?;
            }
            for (i, x) in xs.iter().enumerate() {
                let (q, key) = coeff_key(x);
                if i > 0 {
                    if q.0.is_negative() {
                        write!(f, " - ")?;
                        let nq = q.checked_neg().unwrap_or(q);
                        match key {
                            None => write_q(&nq, f, false)?,
                            Some(k) => {
                                if nq.is_one() {
                                    write_expr(&k, f, 1)?;
                                } else {
                                    write_q(&nq, f, false)?;
                                    write!(f, "*")?;
                                    write_expr(&k, f, 1)?;
                                }
                            }
                        }
                        continue;
                    }
                    write!(f, " + ")?;
                }
                write_expr(x, f, if i == 0 { 1 } else { 0 })?;
            }
            if prec >= 1 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Node::Mul(xs) => {
            if prec >= 2 {
                write!(f, "(")?;
            }
            for (i, x) in xs.iter().enumerate() {
                if i > 0 {
                    write!(f, "*")?;
                }
                write_expr(x, f, if matches!(x.node(), Node::Num(_)) { 1 } else { 1 })?;
            }
            if prec >= 2 {
                write!(f, ")")?;
            }
            Ok(())
        }
        Node::Pow(b, k) => {
            match b.node() {
                Node::Sym(_) => write_expr(b, f, 2)?,
                _ => {
                    write!(f, "(")?;
                    write_expr(b, f, 0)?;
                    write!(f, ")")?;
                }
            }
            if *k < 0 {
                write!(f, "^({})", k)
            } else {
                write!(f, "^{}", k)
            }
        }
        Node::Sqrt(u) => {
            write!(f, "sqrt(")?;
            write_expr(u, f, 0)?;
            write!(f, ")")
        }
        Node::Exp(u) => {
            write!(f, "exp(")?;
            write_expr(u, f, 0)?;
            write!(f, ")")
        }
        Node::Log(u) => {
            write!(f, "log(")?;
            write_expr(u, f, 0)?;
            write!(f, ")")
        }
        Node::Sin(u) => {
            write!(f, "sin(")?;
            write_expr(u, f, 0)?;
            write!(f, ")")
        }
        Node::Cos(u) => {
            write!(f, "cos(")?;
            write_expr(u, f, 0)?;
            write!(f, ")")
        }
    }
}

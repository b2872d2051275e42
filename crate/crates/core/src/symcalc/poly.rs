//! Rational-function normal form.
//!
//! Expressions are flattened to `numerator / product of denominator factors`
//! where the numerator is an expanded multivariate polynomial over "atoms"
//! (coordinates and opaque function applications) and each denominator
//! factor is itself such a polynomial. This is enough to decide equality of
//! the rational-in-coordinates expressions that dominate this domain
//! exactly; transcendental identities fall through to sampling.
//!
//! All coefficient arithmetic is checked; overflow aborts the normal form
//! rather than producing wrong answers.

use std::collections::BTreeMap;

use num_traits::Signed;
use thiserror::Error;

use super::expr::{self, Expr, Node, Q};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NormError {
    #[error("rational coefficient overflow during normalisation")]
    Overflow,
    #[error("expression too large to normalise ({0} terms)")]
    TooBig(usize),
    #[error("division by an expression that is identically zero")]
    DivByZero,
}

const MAX_TERMS: usize = 50_000;

/// Atoms are symbols or whole function applications, keyed structurally.
#[derive(Default)]
pub struct AtomTable {
    atoms: Vec<Expr>,
    index: BTreeMap<Expr, u32>,
}

impl AtomTable {
    fn intern(&mut self, e: Expr) -> u32 {
        if let Some(&i) = self.index.get(&e) {
            return i;
        }
        let i = self.atoms.len() as u32;
        self.index.insert(e.clone(), i);
        self.atoms.push(e);
        i
    }
    pub fn expr(&self, id: u32) -> &Expr {
        &self.atoms[id as usize]
    }
    pub fn has_function_atoms(&self) -> bool {
        self.atoms
            .iter()
            .any(|a| !matches!(a.node(), Node::Sym(_)))
    }
}

/// Monomial: sorted (atom id, positive exponent) pairs.
pub type Mono = Vec<(u32, u32)>;

/// Expanded polynomial with exact rational coefficients.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug, Default)]
pub struct Poly(pub BTreeMap<Mono, Q>);

impl Poly {
    pub fn zero() -> Poly {
        Poly(BTreeMap::new())
    }
    pub fn constant(q: Q) -> Poly {
        let mut m = BTreeMap::new();
        if !q.is_zero() {
            m.insert(Vec::new(), q);
        }
        Poly(m)
    }
    pub fn atom(id: u32) -> Poly {
        let mut m = BTreeMap::new();
        m.insert(vec![(id, 1)], Q::ONE);
        Poly(m)
    }
    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }
    pub fn terms(&self) -> usize {
        self.0.len()
    }

    fn insert_term(&mut self, m: Mono, q: Q) -> Result<(), NormError> {
        if q.is_zero() {
            return Ok(());
        }
        match self.0.get_mut(&m) {
            Some(c) => {
                *c = c.checked_add(q).ok_or(NormError::Overflow)?;
                if c.is_zero() {
                    self.0.remove(&m);
                }
            }
            None => {
                self.0.insert(m, q);
            }
        }
        if self.0.len() > MAX_TERMS {
            return Err(NormError::TooBig(self.0.len()));
        }
        Ok(())
    }

    pub fn add(&self, other: &Poly) -> Result<Poly, NormError> {
        let mut out = self.clone();
        for (m, q) in &other.0 {
            out.insert_term(m.clone(), *q)?;
        }
        Ok(out)
    }

    pub fn scale(&self, q: Q) -> Result<Poly, NormError> {
        if q.is_zero() {
            return Ok(Poly::zero());
        }
        let mut out = Poly::zero();
        for (m, c) in &self.0 {
            out.insert_term(m.clone(), c.checked_mul(q).ok_or(NormError::Overflow)?)?;
        }
        Ok(out)
    }

    pub fn mul(&self, other: &Poly, trunc: &Trunc) -> Result<Poly, NormError> {
        let mut out = Poly::zero();
        for (ma, qa) in &self.0 {
            for (mb, qb) in &other.0 {
                let m = mono_mul(ma, mb);
                if trunc.drops(&m) {
                    continue;
                }
                out.insert_term(m, qa.checked_mul(*qb).ok_or(NormError::Overflow)?)?;
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u32, trunc: &Trunc) -> Result<Poly, NormError> {
        let mut acc = Poly::constant(Q::ONE);
        for _ in 0..k {
            acc = acc.mul(self, trunc)?;
        }
        Ok(acc)
    }

    /// Leading (largest) monomial under the BTreeMap order.
    fn leading(&self) -> Option<(&Mono, &Q)> {
        self.0.iter().next_back()
    }

    /// Exact division: returns `Some(q)` with `self = q * div` when the
    /// remainder is zero, `None` otherwise.
    pub fn try_div_exact(&self, div: &Poly) -> Option<Poly> {
        if div.is_zero() {
            return None;
        }
        let trunc = Trunc::none();
        let mut rem = self.clone();
        let mut quot = Poly::zero();
        let (lead_m, lead_c) = div.leading()?;
        let lead_m = lead_m.clone();
        let lead_c = *lead_c;
        let mut steps = 0usize;
        while !rem.is_zero() {
            steps += 1;
            if steps > 4 * MAX_TERMS {
                return None;
            }
            let (rm, rc) = rem.leading()?;
            let dm = mono_div(rm, &lead_m)?;
            let dc = rc.checked_mul(lead_c.checked_recip()?)?;
            let mut t = Poly::zero();
            t.insert_term(dm, dc).ok()?;
            quot = quot.add(&t).ok()?;
            let sub = div.mul(&t, &trunc).ok()?.scale(Q::int(-1)).ok()?;
            rem = rem.add(&sub).ok()?;
        }
        Some(quot)
    }

    /// Componentwise min exponent over all monomials (the monomial gcd).
    fn mono_gcd(&self) -> Mono {
        let mut it = self.0.keys();
        let Some(first) = it.next() else { return Vec::new() };
        let mut acc = first.clone();
        for m in it {
            let mut next = Vec::new();
            for &(a, e) in &acc {
                if let Some(&(_, e2)) = m.iter().find(|(b, _)| *b == a) {
                    next.push((a, e.min(e2)));
                }
            }
            acc = next;
            if acc.is_empty() {
                break;
            }
        }
        acc
    }
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out: Mono = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                out.push((a[i].0, a[i].1 + b[j].1));
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
    out
}

fn mono_div(a: &Mono, b: &Mono) -> Option<Mono> {
    let mut out = Vec::new();
    let mut used = vec![false; b.len()];
    for &(atom, ea) in a {
        match b.iter().position(|&(x, _)| x == atom) {
            Some(k) => {
                used[k] = true;
                let eb = b[k].1;
                if ea < eb {
                    return None;
                }
                if ea > eb {
                    out.push((atom, ea - eb));
                }
            }
            None => out.push((atom, ea)),
        }
    }
    if used.iter().zip(b).any(|(u, _)| !*u) && b.iter().any(|&(x, _)| !a.iter().any(|&(y, _)| y == x))
    {
        return None;
    }
    Some(out)
}

/// Optional single-atom degree truncation (used for first-order jets).
#[derive(Clone, Default)]
pub struct Trunc {
    pub atom: Option<(u32, u32)>,
}

impl Trunc {
    pub fn none() -> Trunc {
        Trunc::default()
    }
    fn drops(&self, m: &Mono) -> bool {
        match self.atom {
            None => false,
            Some((id, max)) => m
                .iter()
                .any(|&(a, e)| a == id && e > max),
        }
    }
}

/// `num / prod(factor^exp)`, factors monic under the structural order.
#[derive(Clone, Debug)]
pub struct Frac {
    pub num: Poly,
    pub den: BTreeMap<Poly, u32>,
}

impl Frac {
    fn from_poly(p: Poly) -> Frac {
        Frac {
            num: p,
            den: BTreeMap::new(),
        }
    }

    fn push_den(&mut self, factor: Poly, exp: u32, trunc: &Trunc) -> Result<(), NormError> {
        if exp == 0 {
            return Ok(());
        }
        if factor.is_zero() {
            return Err(NormError::DivByZero);
        }
        // Make the factor monic, folding the scalar into the numerator.
        let (_, lead) = factor.leading().expect("nonzero");
        let lead = *lead;
        let monic = factor.scale(lead.checked_recip().ok_or(NormError::Overflow)?)?;
        let scale = lead
            .checked_recip()
            .ok_or(NormError::Overflow)?
            .checked_pow(exp as i64)
            .ok_or(NormError::Overflow)?;
        self.num = self.num.scale(scale)?;
        if monic.0.len() == 1 && monic.0.keys().next().unwrap().is_empty() {
            // Constant factor: already folded into num.
            return Ok(());
        }
        let _ = trunc;
        *self.den.entry(monic).or_insert(0) += exp;
        Ok(())
    }

    fn mul(&self, other: &Frac, trunc: &Trunc) -> Result<Frac, NormError> {
        let mut out = Frac::from_poly(self.num.mul(&other.num, trunc)?);
        for (f, e) in self.den.iter().chain(other.den.iter()) {
            out.push_den(f.clone(), *e, trunc)?;
        }
        out.cancel();
        Ok(out)
    }

    fn add(&self, other: &Frac, trunc: &Trunc) -> Result<Frac, NormError> {
        // Common denominator: union with max exponents.
        let mut union: BTreeMap<Poly, u32> = self.den.clone();
        for (f, e) in &other.den {
            let cur = union.entry(f.clone()).or_insert(0);
            *cur = (*cur).max(*e);
        }
        let lift = |num: &Poly, den: &BTreeMap<Poly, u32>| -> Result<Poly, NormError> {
            let mut acc = num.clone();
            for (f, e) in &union {
                let have = den.get(f).copied().unwrap_or(0);
                if *e > have {
                    acc = acc.mul(&f.pow(e - have, trunc)?, trunc)?;
                }
            }
            Ok(acc)
        };
        let a = lift(&self.num, &self.den)?;
        let b = lift(&other.num, &other.den)?;
        let mut out = Frac {
            num: a.add(&b)?,
            den: union,
        };
        out.cancel();
        Ok(out)
    }

    fn pow(&self, k: i64, trunc: &Trunc) -> Result<Frac, NormError> {
        if k == 0 {
            return Ok(Frac::from_poly(Poly::constant(Q::ONE)));
        }
        if k < 0 {
            // Invert: expanded denominator product over the old numerator.
            if self.num.is_zero() {
                return Err(NormError::DivByZero);
            }
            let mut num = Poly::constant(Q::ONE);
            for (f, e) in &self.den {
                num = num.mul(&f.pow(*e, trunc)?, trunc)?;
            }
            let mut inv = Frac::from_poly(num);
            inv.push_den(self.num.clone(), 1, trunc)?;
            return inv.pow(-k, trunc);
        }
        let mut out = Frac {
            num: self.num.pow(k as u32, trunc)?,
            den: BTreeMap::new(),
        };
        for (f, e) in &self.den {
            out.push_den(f.clone(), e * k as u32, trunc)?;
        }
        out.cancel();
        Ok(out)
    }

    /// Light cancellation: pull monomial gcds and exactly-dividing factors
    /// out of the numerator.
    fn cancel(&mut self) {
        if self.num.is_zero() {
            self.den.clear();
            return;
        }
        let mut den = std::mem::take(&mut self.den);
        let mut changed = true;
        while changed {
            changed = false;
            let keys: Vec<Poly> = den.keys().cloned().collect();
            for f in keys {
                let Some(e) = den.get(&f).copied() else { continue };
                if f.0.len() == 1 {
                    // Monomial factor: cancel against the numerator gcd.
                    let (fm, _) = f.0.iter().next().unwrap();
                    let g = self.num.mono_gcd();
                    let reducible = fm
                        .iter()
                        .map(|&(a, fe)| {
                            let have = g.iter().find(|&&(b, _)| b == a).map(|&(_, e)| e).unwrap_or(0);
                            (have / fe).min(e)
                        })
                        .min()
                        .unwrap_or(0);
                    if reducible > 0 {
                        if let Some(div) = f.pow(reducible, &Trunc::none()).ok() {
                            if let Some(q) = self.num.try_div_exact(&div) {
                                self.num = q;
                                if e == reducible {
                                    den.remove(&f);
                                } else {
                                    den.insert(f.clone(), e - reducible);
                                }
                                changed = true;
                            }
                        }
                    }
                } else if f.terms() <= 16 {
                    let mut k = 0u32;
                    while k < e {
                        match self.num.try_div_exact(&f) {
                            Some(q) => {
                                self.num = q;
                                k += 1;
                            }
                            None => break,
                        }
                    }
                    if k > 0 {
                        if k == e {
                            den.remove(&f);
                        } else {
                            den.insert(f.clone(), e - k);
                        }
                        changed = true;
                    }
                }
            }
        }
        self.den = den;
    }
}

pub struct Normalizer {
    pub table: AtomTable,
    trunc: Trunc,
    trunc_sym: Option<(String, u32)>,
}

impl Normalizer {
    pub fn new() -> Normalizer {
        Normalizer {
            table: AtomTable::default(),
            trunc: Trunc::none(),
            trunc_sym: None,
        }
    }

    /// Truncate all powers of `sym` above `max_deg` (first-order jets etc).
    pub fn with_truncation(sym: &str, max_deg: u32) -> Normalizer {
        Normalizer {
            table: AtomTable::default(),
            trunc: Trunc::none(),
            trunc_sym: Some((sym.to_string(), max_deg)),
        }
    }

    pub fn normalize(&mut self, e: &Expr) -> Result<Frac, NormError> {
        // Resolve the truncation atom id lazily (it must be interned first).
        if let Some((name, deg)) = self.trunc_sym.take() {
            let id = self.table.intern(Expr::sym(&name));
            self.trunc = Trunc {
                atom: Some((id, deg)),
            };
        }
        self.norm(e)
    }

    fn norm(&mut self, e: &Expr) -> Result<Frac, NormError> {
        match e.node() {
            Node::Num(q) => Ok(Frac::from_poly(Poly::constant(*q))),
            Node::Sym(_) => {
                let id = self.table.intern(e.clone());
                Ok(Frac::from_poly(Poly::atom(id)))
            }
            Node::Add(xs) => {
                let mut acc = self.norm(&xs[0])?;
                for x in &xs[1..] {
                    let fx = self.norm(x)?;
                    acc = acc.add(&fx, &self.trunc)?;
                }
                Ok(acc)
            }
            Node::Mul(xs) => {
                let mut acc = self.norm(&xs[0])?;
                for x in &xs[1..] {
                    let fx = self.norm(x)?;
                    acc = acc.mul(&fx, &self.trunc)?;
                }
                Ok(acc)
            }
            Node::Pow(b, k) => {
                let fb = self.norm(b)?;
                fb.pow(*k, &self.trunc)
            }
            Node::Sqrt(_) | Node::Exp(_) | Node::Log(_) | Node::Sin(_) | Node::Cos(_) => {
                let id = self.table.intern(e.clone());
                Ok(Frac::from_poly(Poly::atom(id)))
            }
        }
    }

    /// Convert a normal form back into an expression tree.
    pub fn to_expr(&self, f: &Frac) -> Expr {
        let poly_expr = |p: &Poly| -> Expr {
            expr::add(p.0.iter().map(|(m, q)| {
                let mut fs: Vec<Expr> = vec![Expr::num(*q)];
                for &(a, e) in m {
                    fs.push(expr::pow(self.table.expr(a).clone(), e as i64));
                }
                expr::mul(fs)
            }))
        };
        let mut parts = vec![poly_expr(&f.num)];
        for (fac, e) in &f.den {
            parts.push(expr::pow(poly_expr(fac), -(*e as i64)));
        }
        expr::mul(parts)
    }
}

/// Best-effort simplification through the rational normal form.
///
/// Never changes the value of the expression: all arithmetic is exact, and
/// on overflow or blow-up the input is returned unchanged.
pub fn simplify(e: &Expr) -> Expr {
    let mut n = Normalizer::new();
    match n.normalize(e) {
        Ok(f) => {
            let out = n.to_expr(&f);
            if out.size() <= e.size() {
                out
            } else {
                e.clone()
            }
        }
        Err(_) => e.clone(),
    }
}

/// Square root of an expression known to be positive on the chart domain.
///
/// Extracts even powers and perfect-square rational factors exactly (so
/// `sqrt(rho^-8) = rho^-4` and `sqrt(256*(1-r2)^-8) = 16*(1-r2)^-4`); the
/// residual stays under a `sqrt` node. Positivity is the caller's
/// precondition (metric determinants on their domain), which is what
/// justifies taking the positive root of odd factors.
pub fn sqrt_assuming_positive(e: &Expr) -> Expr {
    let mut n = Normalizer::new();
    let f = match n.normalize(e) {
        Ok(f) => f,
        Err(_) => return expr::sqrt(e.clone()),
    };
    if f.num.0.len() != 1 {
        return expr::sqrt(n.to_expr(&f));
    }
    let (mono, coeff) = f.num.0.iter().next().unwrap();
    if coeff.0.is_negative() {
        return expr::sqrt(n.to_expr(&f));
    }
    let mut outside: Vec<Expr> = Vec::new();
    let mut inside: Vec<Expr> = Vec::new();
    match coeff.sqrt_exact() {
        Some(r) => outside.push(Expr::num(r)),
        None => inside.push(Expr::num(*coeff)),
    }
    for &(atom, k) in mono {
        let a = n.table.expr(atom).clone();
        if k / 2 > 0 {
            outside.push(expr::pow(a.clone(), (k / 2) as i64));
        }
        if k % 2 == 1 {
            inside.push(a);
        }
    }
    for (fac, k) in &f.den {
        let fe = n.to_expr(&Frac {
            num: fac.clone(),
            den: BTreeMap::new(),
        });
        if k / 2 > 0 {
            outside.push(expr::pow(fe.clone(), -((k / 2) as i64)));
        }
        if k % 2 == 1 {
            // 1/sqrt(P) = sqrt(P)/P
            outside.push(expr::pow(fe.clone(), -1));
            inside.push(fe);
        }
    }
    if !inside.is_empty() {
        outside.push(expr::sqrt(expr::mul(inside)));
    }
    expr::mul(outside)
}

/// Exact zero test through the normal form; `None` when undecidable.
pub fn symbolic_zero(e: &Expr) -> Option<bool> {
    let mut n = Normalizer::new();
    match n.normalize(e) {
        Ok(f) => {
            if f.num.is_zero() {
                Some(true)
            } else if !n.table.has_function_atoms() {
                // A nonzero rational function of the coordinates alone
                // cannot vanish identically on an open box.
                Some(false)
            } else {
                None
            }
        }
        Err(_) => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcalc::expr::{add, div, mul, pow, sub};

    #[test]
    fn exact_cancellation_across_denominators() {
        // -6/rho - 3*(1-2*rho)/rho^2 + 3/rho^2 == 0  with rho treated as atom
        let rho = Expr::sym("rho");
        let e = add([
            div(Expr::int(-6), rho.clone()),
            mul([
                Expr::int(-3),
                sub(Expr::one(), mul([Expr::int(2), rho.clone()])),
                pow(rho.clone(), -2),
            ]),
            mul([Expr::int(3), pow(rho.clone(), -2)]),
        ]);
        assert_eq!(symbolic_zero(&e), Some(true));
    }

    #[test]
    fn polynomial_identity_with_composite_denominator() {
        // (1-x^2)/(1-x) - (1+x) == 0
        let x = Expr::sym("x");
        let e = sub(
            div(
                sub(Expr::one(), pow(x.clone(), 2)),
                sub(Expr::one(), x.clone()),
            ),
            add([Expr::one(), x.clone()]),
        );
        assert_eq!(symbolic_zero(&e), Some(true));
    }

    #[test]
    fn trig_identity_is_undecidable_symbolically() {
        let x = Expr::sym("x");
        let e = sub(
            add([
                pow(expr::sin(x.clone()), 2),
                pow(expr::cos(x.clone()), 2),
            ]),
            Expr::one(),
        );
        assert_eq!(symbolic_zero(&e), None);
    }

    #[test]
    fn nonzero_rational_detected() {
        let x = Expr::sym("x");
        let e = add([pow(x.clone(), 2), Expr::one()]);
        assert_eq!(symbolic_zero(&e), Some(false));
    }

    #[test]
    fn jet_truncation() {
        // (1+t)^3 truncated at t^1 is 1+3t
        let t = Expr::sym("t");
        let mut n = Normalizer::with_truncation("t", 1);
        let f = n
            .normalize(&pow(add([Expr::one(), t.clone()]), 3))
            .unwrap();
        let back = n.to_expr(&f);
        let expected = add([Expr::one(), mul([Expr::int(3), t])]);
        assert_eq!(symbolic_zero(&sub(back, expected)), Some(true));
    }
}

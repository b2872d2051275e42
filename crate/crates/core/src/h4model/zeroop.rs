//! Operators generated by the boundary-tangent derivatives θ = ρ∂ρ and
//! η_i = ρ∂_{y_i} with constant matrix coefficients.
//!
//! The commutation relations are [θ, η_i] = η_i and [η_i, η_j] = 0, so every
//! word normal-orders as θ^a η^β. On top of the exact algebra this module
//! provides formal adjoints in the hyperbolic L² pairing (θ* = 3 - θ,
//! η_i* = -η_i), indicial families (θ → λ, η → 0), principal 0-symbols and
//! indicial root extraction with multiplicities.

use std::collections::BTreeMap;

use crate::symcalc::Q;

/// Normal-ordered scalar polynomial in (θ, η₁, η₂, η₃).
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct NcPoly(pub BTreeMap<(u32, [u32; 3]), Q>);

impl NcPoly {
    pub fn zero() -> NcPoly {
        NcPoly::default()
    }
    pub fn constant(q: Q) -> NcPoly {
        let mut m = BTreeMap::new();
        if !q.is_zero() {
            m.insert((0, [0, 0, 0]), q);
        }
        NcPoly(m)
    }
    pub fn one() -> NcPoly {
        NcPoly::constant(Q::ONE)
    }
    pub fn theta() -> NcPoly {
        let mut m = BTreeMap::new();
        m.insert((1, [0, 0, 0]), Q::ONE);
        NcPoly(m)
    }
    pub fn eta(i: usize) -> NcPoly {
        let mut beta = [0u32; 3];
        beta[i] = 1;
        let mut m = BTreeMap::new();
        m.insert((0, beta), Q::ONE);
        NcPoly(m)
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn insert(&mut self, key: (u32, [u32; 3]), q: Q) {
        if q.is_zero() {
            return;
        }
        let c = self.0.entry(key).or_insert(Q::ZERO);
        *c = c.checked_add(q).expect("coefficient overflow in 0-operator");
        if c.is_zero() {
            self.0.remove(&key);
        }
    }

    pub fn add(&self, other: &NcPoly) -> NcPoly {
        let mut out = self.clone();
        for (k, q) in &other.0 {
            out.insert(*k, *q);
        }
        out
    }

    pub fn scale(&self, q: Q) -> NcPoly {
        let mut out = NcPoly::zero();
        for (k, c) in &self.0 {
            out.insert(*k, c.checked_mul(q).expect("overflow"));
        }
        out
    }

    /// Product with normal reordering: η^β θ^j = (θ - |β|)^j η^β.
    pub fn mul(&self, other: &NcPoly) -> NcPoly {
        let mut out = NcPoly::zero();
        for (&(a1, b1), &q1) in &self.0 {
            for (&(a2, b2), &q2) in &other.0 {
                let q = q1.checked_mul(q2).expect("overflow");
                // θ^{a1} η^{b1} θ^{a2} η^{b2}
                //   = θ^{a1} (θ - |b1|)^{a2} η^{b1+b2}
                let shift = (b1[0] + b1[1] + b1[2]) as i64;
                // expand (θ - shift)^{a2} via binomials
                let mut beta = [0u32; 3];
                for k in 0..3 {
                    beta[k] = b1[k] + b2[k];
                }
                let mut binom = Q::ONE; // C(a2, j) running value
                for j in 0..=a2 {
                    // coefficient C(a2,j) * (-shift)^{a2-j}
                    if j > 0 {
                        let num = Q::int((a2 - j + 1) as i64);
                        let den = Q::new(1, j as i64);
                        binom = binom
                            .checked_mul(num)
                            .and_then(|x| x.checked_mul(den))
                            .expect("overflow");
                    }
                    let pw = Q::int(-shift)
                        .checked_pow((a2 - j) as i64)
                        .expect("overflow");
                    let coeff = q
                        .checked_mul(binom)
                        .and_then(|x| x.checked_mul(pw))
                        .expect("overflow");
                    out.insert((a1 + j, beta), coeff);
                }
            }
        }
        out
    }

    /// Formal adjoint in L²(H⁴): θ* = 3 - θ, η_i* = -η_i, with the factor
    /// order reversed (handled per monomial).
    pub fn adjoint(&self) -> NcPoly {
        let mut out = NcPoly::zero();
        for (&(a, b), &q) in &self.0 {
            // (θ^a η^β)* = (η^β)* (θ^a)* = (-1)^{|β|} η^β (3-θ)^a; moving the
            // θ-polynomial left substitutes θ → θ - |β|, giving
            // (-1)^{|β|} (3 + |β| - θ)^a η^β.
            let bsum = (b[0] + b[1] + b[2]) as i64;
            let sgn = Q::int(-1).checked_pow(bsum).unwrap();
            let c = Q::int(3 + bsum);
            let mut binom = Q::ONE;
            for j in 0..=a {
                if j > 0 {
                    let num = Q::int((a - j + 1) as i64);
                    let den = Q::new(1, j as i64);
                    binom = binom.checked_mul(num).and_then(|x| x.checked_mul(den)).unwrap();
                }
                let pw = c.checked_pow((a - j) as i64).unwrap();
                let sign_theta = Q::int(-1).checked_pow(j as i64).unwrap();
                let coeff = q
                    .checked_mul(sgn)
                    .and_then(|x| x.checked_mul(binom))
                    .and_then(|x| x.checked_mul(pw))
                    .and_then(|x| x.checked_mul(sign_theta))
                    .unwrap();
                out.insert((j, b), coeff);
            }
        }
        out
    }

    /// Total order of the highest-order monomial.
    pub fn order(&self) -> u32 {
        self.0
            .keys()
            .map(|(a, b)| a + b[0] + b[1] + b[2])
            .max()
            .unwrap_or(0)
    }

    /// Indicial substitution θ → λ, η → 0: polynomial coefficients in λ
    /// (index = power of λ).
    pub fn indicial(&self, max_deg: usize) -> Vec<Q> {
        let mut out = vec![Q::ZERO; max_deg + 1];
        for (&(a, b), &q) in &self.0 {
            if b != [0, 0, 0] {
                continue;
            }
            out[a as usize] = out[a as usize].checked_add(q).unwrap();
        }
        out
    }

    /// Principal 0-symbol at (ξ, η): top-order part with θ → ξ, η_i → η_i
    /// (commutative substitution).
    pub fn symbol(&self, order: u32, xi: f64, eta: [f64; 3]) -> f64 {
        let mut s = 0.0;
        for (&(a, b), &q) in &self.0 {
            if a + b[0] + b[1] + b[2] != order {
                continue;
            }
            s += q.to_f64()
                * xi.powi(a as i32)
                * eta[0].powi(b[0] as i32)
                * eta[1].powi(b[1] as i32)
                * eta[2].powi(b[2] as i32);
        }
        s
    }
}

/// Matrix of normal-ordered (θ, η)-polynomials: a constant-coefficient
/// 0-differential operator between trivialised bundles.
#[derive(Clone, Debug, PartialEq)]
pub struct ZeroOp {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<NcPoly>, // row-major
}

impl ZeroOp {
    pub fn zeros(rows: usize, cols: usize) -> ZeroOp {
        ZeroOp {
            rows,
            cols,
            entries: vec![NcPoly::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> ZeroOp {
        let mut op = ZeroOp::zeros(n, n);
        for i in 0..n {
            *op.at_mut(i, i) = NcPoly::one();
        }
        op
    }

    pub fn at(&self, r: usize, c: usize) -> &NcPoly {
        &self.entries[r * self.cols + c]
    }
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut NcPoly {
        &mut self.entries[r * self.cols + c]
    }

    pub fn add(&self, other: &ZeroOp) -> ZeroOp {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let mut out = ZeroOp::zeros(self.rows, self.cols);
        for i in 0..self.entries.len() {
            out.entries[i] = self.entries[i].add(&other.entries[i]);
        }
        out
    }

    pub fn sub(&self, other: &ZeroOp) -> ZeroOp {
        self.add(&other.scale(Q::int(-1)))
    }

    pub fn scale(&self, q: Q) -> ZeroOp {
        let mut out = self.clone();
        for e in &mut out.entries {
            *e = e.scale(q);
        }
        out
    }

    /// Operator composition `self ∘ other`.
    pub fn compose(&self, other: &ZeroOp) -> ZeroOp {
        assert_eq!(self.cols, other.rows, "composition shape mismatch");
        let mut out = ZeroOp::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for j in 0..other.cols {
                let mut acc = NcPoly::zero();
                for k in 0..self.cols {
                    if self.at(i, k).is_zero() || other.at(k, j).is_zero() {
                        continue;
                    }
                    acc = acc.add(&self.at(i, k).mul(other.at(k, j)));
                }
                *out.at_mut(i, j) = acc;
            }
        }
        out
    }

    /// Formal adjoint: entrywise adjoint of the transpose.
    pub fn adjoint(&self) -> ZeroOp {
        let mut out = ZeroOp::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                *out.at_mut(j, i) = self.at(i, j).adjoint();
            }
        }
        out
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(NcPoly::is_zero)
    }

    pub fn order(&self) -> u32 {
        self.entries.iter().map(NcPoly::order).max().unwrap_or(0)
    }

    /// Indicial family I(λ) as a matrix of λ-polynomials.
    pub fn indicial_family(&self) -> IndicialFamily {
        let deg = self.order() as usize;
        IndicialFamily {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .map(|e| e.indicial(deg))
                .collect(),
        }
    }

    /// Principal 0-symbol matrix at a direction (ξ, η).
    pub fn symbol_matrix(&self, xi: f64, eta: [f64; 3]) -> nalgebra::DMatrix<f64> {
        let d = self.order();
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| {
            self.at(i, j).symbol(d, xi, eta)
        })
    }
}

/// Matrix-valued polynomial in λ (entry = coefficient list, low to high).
pub struct IndicialFamily {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<Vec<Q>>,
}

impl IndicialFamily {
    pub fn eval(&self, lambda: f64) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.rows, self.cols, |i, j| {
            let cs = &self.entries[i * self.cols + j];
            let mut acc = 0.0;
            for c in cs.iter().rev() {
                acc = acc * lambda + c.to_f64();
            }
            acc
        })
    }

    /// det I(λ) as exact rational coefficients (square families only),
    /// computed by cofactor expansion over the polynomial ring.
    pub fn det_poly(&self) -> Vec<Q> {
        assert_eq!(self.rows, self.cols, "determinant needs a square family");
        let n = self.rows;
        let idx: Vec<usize> = (0..n).collect();
        det_rec(&self.entries, n, &idx, &idx)
    }

    /// Indicial roots with multiplicities: real roots of det I(λ).
    ///
    /// Rational roots are extracted exactly by deflation; any residual
    /// factor is handled by the companion-matrix eigenvalues. Roots are
    /// clustered to 1e-8.
    pub fn roots(&self) -> Vec<(f64, usize)> {
        let det = self.det_poly();
        poly_real_roots(&det)
    }
}

fn poly_add(a: &[Q], b: &[Q]) -> Vec<Q> {
    let n = a.len().max(b.len());
    let mut out = vec![Q::ZERO; n];
    for (i, o) in out.iter_mut().enumerate() {
        let mut v = Q::ZERO;
        if i < a.len() {
            v = v.checked_add(a[i]).unwrap();
        }
        if i < b.len() {
            v = v.checked_add(b[i]).unwrap();
        }
        *o = v;
    }
    out
}

fn poly_mul(a: &[Q], b: &[Q]) -> Vec<Q> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![Q::ZERO; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j]
                .checked_add(x.checked_mul(y).unwrap())
                .unwrap();
        }
    }
    out
}

fn det_rec(entries: &[Vec<Q>], ncols: usize, rows: &[usize], cols: &[usize]) -> Vec<Q> {
    if rows.len() == 1 {
        return entries[rows[0] * ncols + cols[0]].clone();
    }
    let mut acc = vec![Q::ZERO];
    for (jc, &c) in cols.iter().enumerate() {
        let sub_cols: Vec<usize> = cols.iter().copied().filter(|&x| x != c).collect();
        let minor = det_rec(entries, ncols, &rows[1..], &sub_cols);
        let mut term = poly_mul(&entries[rows[0] * ncols + c], &minor);
        if jc % 2 == 1 {
            for t in &mut term {
                *t = t.checked_mul(Q::int(-1)).unwrap();
            }
        }
        acc = poly_add(&acc, &term);
    }
    acc
}

/// Real roots (with multiplicity) of an exact rational polynomial.
pub fn poly_real_roots(coeffs: &[Q]) -> Vec<(f64, usize)> {
    // strip trailing zeros and leading zero-roots
    let mut cs: Vec<Q> = coeffs.to_vec();
    while cs.last().is_some_and(Q::is_zero) {
        cs.pop();
    }
    if cs.is_empty() {
        return vec![]; // identically zero: every λ (callers treat separately)
    }
    let mut roots: Vec<f64> = Vec::new();
    while cs.len() > 1 && cs[0].is_zero() {
        roots.push(0.0);
        cs.remove(0);
    }
    // exact rational-root deflation (roots here are small integers)
    'outer: while cs.len() > 1 {
        for num in -12i64..=12 {
            for den in 1i64..=4 {
                let r = Q::new(num, den);
                if eval_q(&cs, r).is_zero() {
                    cs = deflate(&cs, r);
                    roots.push(r.to_f64());
                    continue 'outer;
                }
            }
        }
        break;
    }
    if cs.len() > 1 {
        // companion matrix for the residual factor
        let n = cs.len() - 1;
        let lead = cs[n].to_f64();
        let mut m = nalgebra::DMatrix::<f64>::zeros(n, n);
        for i in 1..n {
            m[(i, i - 1)] = 1.0;
        }
        for i in 0..n {
            m[(i, n - 1)] = -cs[i].to_f64() / lead;
        }
        for c in m.complex_eigenvalues().iter() {
            if c.im.abs() < 1e-9 {
                roots.push(c.re);
            }
        }
    }
    // cluster to multiplicities
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut out: Vec<(f64, usize)> = Vec::new();
    for r in roots {
        match out.last_mut() {
            Some((v, m)) if (*v - r).abs() < 1e-8 => *m += 1,
            _ => out.push((r, 1)),
        }
    }
    out
}

fn eval_q(cs: &[Q], x: Q) -> Q {
    let mut acc = Q::ZERO;
    for c in cs.iter().rev() {
        acc = acc.checked_mul(x).and_then(|v| v.checked_add(*c)).unwrap();
    }
    acc
}

fn deflate(cs: &[Q], r: Q) -> Vec<Q> {
    // synthetic division by (x - r)
    let n = cs.len() - 1;
    let mut out = vec![Q::ZERO; n];
    let mut carry = cs[n];
    for i in (0..n).rev() {
        out[i] = carry;
        carry = cs[i].checked_add(carry.checked_mul(r).unwrap()).unwrap();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commutation_theta_eta() {
        // θ η = η θ + η
        let t = NcPoly::theta();
        let e = NcPoly::eta(0);
        let te = t.mul(&e);
        let et = e.mul(&t).add(&e);
        assert_eq!(te, et);
    }

    #[test]
    fn adjoint_involution_and_rules() {
        let t = NcPoly::theta();
        // θ* = 3 - θ
        let expect = NcPoly::constant(Q::int(3)).add(&t.scale(Q::int(-1)));
        assert_eq!(t.adjoint(), expect);
        // (θη)* = η*θ* = -η(3-θ)
        let te = t.mul(&NcPoly::eta(1));
        let adj = te.adjoint();
        let manual = NcPoly::eta(1)
            .scale(Q::int(-1))
            .mul(&NcPoly::constant(Q::int(3)).add(&NcPoly::theta().scale(Q::int(-1))));
        assert_eq!(adj, manual);
        // double adjoint is the identity
        assert_eq!(te.adjoint().adjoint(), te);
    }

    #[test]
    fn indicial_of_scalar_laplacian() {
        // d*d = -θ² + 3θ - Σ η², indicial polynomial -λ² + 3λ: roots {0, 3}
        let mut op = NcPoly::theta().mul(&NcPoly::theta()).scale(Q::int(-1));
        op = op.add(&NcPoly::theta().scale(Q::int(3)));
        for i in 0..3 {
            op = op.add(&NcPoly::eta(i).mul(&NcPoly::eta(i)).scale(Q::int(-1)));
        }
        let fam = ZeroOp {
            rows: 1,
            cols: 1,
            entries: vec![op],
        }
        .indicial_family();
        let roots = fam.roots();
        assert_eq!(roots.len(), 2);
        assert!((roots[0].0 - 0.0).abs() < 1e-12);
        assert!((roots[1].0 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn root_multiplicities() {
        // (λ+1)²(λ-4): roots -1 (×2), 4
        let cs = [Q::int(-4), Q::int(-7), Q::int(-2), Q::int(1)];
        let roots = poly_real_roots(&cs);
        assert_eq!(roots, vec![(-1.0, 2), (4.0, 1)]);
    }
}

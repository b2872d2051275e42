//! Differential forms on a 4-chart with symbolic components.
//!
//! Components are stored per increasing multi-index in the fixed tables
//! below, so a k-form holds C(4,k) expressions. Wedge, exterior derivative
//! and interior product are exact symbolic operations.

use thiserror::Error;

use crate::symcalc::{self, Chart, Expr};

pub const INDEX_SETS: [&[&[usize]]; 5] = [
    &[&[]],
    &[&[0], &[1], &[2], &[3]],
    &[&[0, 1], &[0, 2], &[0, 3], &[1, 2], &[1, 3], &[2, 3]],
    &[&[0, 1, 2], &[0, 1, 3], &[0, 2, 3], &[1, 2, 3]],
    &[&[0, 1, 2, 3]],
];

pub const fn binom4(k: usize) -> usize {
    match k {
        0 | 4 => 1,
        1 | 3 => 4,
        2 => 6,
        _ => 0,
    }
}

/// Sorts `indices`, returning (position in the increasing table, parity) or
/// `None` when an index repeats.
pub fn index_position(k: usize, indices: &[usize]) -> Option<(usize, i64)> {
    debug_assert_eq!(indices.len(), k);
    let mut v: Vec<usize> = indices.to_vec();
    let mut sign = 1i64;
    // insertion sort, counting swaps
    for i in 1..v.len() {
        let mut j = i;
        while j > 0 && v[j - 1] > v[j] {
            v.swap(j - 1, j);
            sign = -sign;
            j -= 1;
        }
    }
    for w in v.windows(2) {
        if w[0] == w[1] {
            return None;
        }
    }
    let pos = INDEX_SETS[k].iter().position(|set| {
        set.len() == v.len() && set.iter().zip(&v).all(|(a, b)| a == b)
    })?;
    Some((pos, sign))
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum FormError {
    #[error("degree {0} out of range for a 4-manifold")]
    BadDegree(usize),
    #[error("wedge of degrees {0} and {1} overflows the top degree")]
    DegreeOverflow(usize, usize),
    #[error("component count {got} does not match degree {degree}")]
    ComponentCount { degree: usize, got: usize },
}

/// Degree-k differential form with one expression per increasing multi-index.
#[derive(Clone)]
pub struct Form {
    pub chart: Chart,
    pub degree: usize,
    pub comps: Vec<Expr>,
}

impl Form {
    pub fn new(chart: Chart, degree: usize, comps: Vec<Expr>) -> Result<Form, FormError> {
        if degree > 4 {
            return Err(FormError::BadDegree(degree));
        }
        if comps.len() != binom4(degree) {
            return Err(FormError::ComponentCount {
                degree,
                got: comps.len(),
            });
        }
        Ok(Form {
            chart,
            degree,
            comps,
        })
    }

    pub fn zero(chart: &Chart, degree: usize) -> Form {
        Form {
            chart: chart.clone(),
            degree,
            comps: vec![Expr::zero(); binom4(degree)],
        }
    }

    pub fn scalar(chart: &Chart, e: Expr) -> Form {
        Form {
            chart: chart.clone(),
            degree: 0,
            comps: vec![e],
        }
    }

    /// Coordinate 1-form `dx^i`.
    pub fn dx(chart: &Chart, i: usize) -> Form {
        let mut comps = vec![Expr::zero(); 4];
        comps[i] = Expr::one();
        Form {
            chart: chart.clone(),
            degree: 1,
            comps,
        }
    }

    pub fn is_zero_structural(&self) -> bool {
        self.comps.iter().all(Expr::is_zero)
    }

    pub fn map(&self, f: impl Fn(&Expr) -> Expr) -> Form {
        Form {
            chart: self.chart.clone(),
            degree: self.degree,
            comps: self.comps.iter().map(f).collect(),
        }
    }

    pub fn simplified(&self) -> Form {
        self.map(symcalc::simplify)
    }

    pub fn add(&self, other: &Form) -> Form {
        assert_eq!(self.degree, other.degree, "degree mismatch in form sum");
        Form {
            chart: self.chart.clone(),
            degree: self.degree,
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| symcalc::add([a.clone(), b.clone()]))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Form) -> Form {
        self.add(&other.scale(&Expr::int(-1)))
    }

    pub fn scale(&self, e: &Expr) -> Form {
        self.map(|c| symcalc::mul([e.clone(), c.clone()]))
    }

    /// Wedge product; degrees add, anticommutativity comes from the table.
    pub fn wedge(&self, other: &Form) -> Result<Form, FormError> {
        let k = self.degree + other.degree;
        if k > 4 {
            return Err(FormError::DegreeOverflow(self.degree, other.degree));
        }
        let mut comps = vec![Vec::new(); binom4(k)];
        for (ia, seta) in INDEX_SETS[self.degree].iter().enumerate() {
            if self.comps[ia].is_zero() {
                continue;
            }
            for (ib, setb) in INDEX_SETS[other.degree].iter().enumerate() {
                if other.comps[ib].is_zero() {
                    continue;
                }
                let mut merged: Vec<usize> = Vec::with_capacity(k);
                merged.extend_from_slice(seta);
                merged.extend_from_slice(setb);
                if let Some((pos, sign)) = index_position(k, &merged) {
                    comps[pos].push(symcalc::mul([
                        Expr::int(sign),
                        self.comps[ia].clone(),
                        other.comps[ib].clone(),
                    ]));
                }
            }
        }
        Ok(Form {
            chart: self.chart.clone(),
            degree: k,
            comps: comps.into_iter().map(symcalc::add).collect(),
        })
    }

    /// Exterior derivative.
    pub fn ext_d(&self) -> Result<Form, FormError> {
        if self.degree >= 4 {
            // d of a top form on a 4-chart is zero in degree 5; reject.
            return Err(FormError::BadDegree(self.degree + 1));
        }
        let k = self.degree + 1;
        let mut comps = vec![Vec::new(); binom4(k)];
        for (ia, seta) in INDEX_SETS[self.degree].iter().enumerate() {
            if self.comps[ia].is_zero() {
                continue;
            }
            for m in 0..4 {
                let d = self.comps[ia].partial(self.chart.coord(m));
                if d.is_zero() {
                    continue;
                }
                let mut merged: Vec<usize> = Vec::with_capacity(k);
                merged.push(m);
                merged.extend_from_slice(seta);
                if let Some((pos, sign)) = index_position(k, &merged) {
                    comps[pos].push(symcalc::mul([Expr::int(sign), d]));
                }
            }
        }
        Ok(Form {
            chart: self.chart.clone(),
            degree: k,
            comps: comps.into_iter().map(symcalc::add).collect(),
        })
    }

    /// Interior product with the vector field `v` (coordinate components).
    pub fn interior(&self, v: &[Expr; 4]) -> Form {
        if self.degree == 0 {
            return Form::zero(&self.chart, 0);
        }
        let k = self.degree - 1;
        let mut comps = vec![Vec::new(); binom4(k)];
        for (pos, setj) in INDEX_SETS[k].iter().enumerate() {
            for m in 0..4 {
                if setj.contains(&m) {
                    continue;
                }
                let mut full: Vec<usize> = Vec::with_capacity(self.degree);
                full.push(m);
                full.extend_from_slice(setj);
                if let Some((src, sign)) = index_position(self.degree, &full) {
                    comps[pos].push(symcalc::mul([
                        Expr::int(sign),
                        v[m].clone(),
                        self.comps[src].clone(),
                    ]));
                }
            }
        }
        Form {
            chart: self.chart.clone(),
            degree: k,
            comps: comps.into_iter().map(symcalc::add).collect(),
        }
    }

    /// Evaluate all components at a point.
    pub fn eval(&self, p: &[f64; 4]) -> Result<Vec<f64>, symcalc::EvalError> {
        self.comps
            .iter()
            .map(|c| self.chart.eval(c, p))
            .collect()
    }
}

impl std::fmt::Debug for Form {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Form{}[", self.degree)?;
        for (i, c) in self.comps.iter().enumerate() {
            if i > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{}", c)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcalc::{is_identically_zero, mul, pow, Chart};

    #[test]
    fn wedge_of_coordinate_forms() {
        let ch = Chart::flat();
        let d01 = Form::dx(&ch, 0).wedge(&Form::dx(&ch, 1)).unwrap();
        let d23 = Form::dx(&ch, 2).wedge(&Form::dx(&ch, 3)).unwrap();
        let top = d01.wedge(&d23).unwrap();
        assert_eq!(top.comps[0], Expr::one());
        // anticommutativity on 1-forms
        let ab = Form::dx(&ch, 1).wedge(&Form::dx(&ch, 2)).unwrap();
        let ba = Form::dx(&ch, 2).wedge(&Form::dx(&ch, 1)).unwrap();
        assert!(ab.add(&ba).is_zero_structural());
    }

    #[test]
    fn one_form_squares_to_zero() {
        let ch = Chart::flat();
        let mut a = Form::zero(&ch, 1);
        for i in 0..4 {
            a.comps[i] = pow(ch.sym(i), (i + 1) as i64);
        }
        assert!(a.wedge(&a).unwrap().is_zero_structural());
    }

    #[test]
    fn d_squared_zero_and_exact_forms() {
        let ch = Chart::flat();
        // d(x1 dx2) = dx1 ^ dx2
        let a = Form::dx(&ch, 1).scale(&ch.sym(0));
        let da = a.ext_d().unwrap();
        let expected = Form::dx(&ch, 0).wedge(&Form::dx(&ch, 1)).unwrap();
        assert!(da.sub(&expected).is_zero_structural());
        // d(df) = 0 for a polynomial f
        let f = mul([ch.sym(0), pow(ch.sym(1), 2), ch.sym(3)]);
        let df = Form::scalar(&ch, f).ext_d().unwrap();
        assert!(df.ext_d().unwrap().is_zero_structural());
    }

    #[test]
    fn d_of_closed_boundary_form() {
        // d(rho^-1 drho) = 0 on the half-space chart
        let ch = Chart::half_space();
        let a = Form::dx(&ch, 0).scale(&pow(ch.sym(0), -1));
        let da = a.ext_d().unwrap();
        for c in &da.comps {
            assert!(is_identically_zero(c, &ch, 1).unwrap().is_zero);
        }
    }

    #[test]
    fn interior_contracts_first_slot() {
        let ch = Chart::flat();
        let omega = Form::dx(&ch, 0).wedge(&Form::dx(&ch, 1)).unwrap();
        let v = [Expr::one(), Expr::zero(), Expr::zero(), Expr::zero()];
        let iv = omega.interior(&v);
        // iota_{e0}(dx0 ^ dx1) = dx1
        assert_eq!(iv.comps[1], Expr::one());
        assert!(iv.comps[0].is_zero());
    }
}

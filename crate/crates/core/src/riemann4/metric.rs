//! Riemannian metrics on a 4-chart: inverse, volume form, Hodge star,
//! codifferential and pointwise inner products of forms.
//!
//! Sign conventions are pinned by tests rather than by fiat: `** = +1` on
//! even degrees and 2-forms, `** = -1` on 1- and 3-forms, and the
//! codifferential `d* = -*d*` (all degrees in dimension 4) is the adjoint of
//! `d` in the compactly supported pairing.

use thiserror::Error;

use crate::symcalc::{self, sqrt_assuming_positive, Chart, EvalError, Expr};

use super::forms::{binom4, index_position, Form, FormError, INDEX_SETS};

#[derive(Debug, Clone, Error, PartialEq)]
pub enum GeomError {
    #[error("metric is singular (zero determinant) on the chart")]
    SingularMetric,
    #[error("metric must be symmetric")]
    NotSymmetric,
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// 4x4 symmetric metric with an orientation flag: the oriented volume form
/// is `orientation * sqrt(det g) dx^0123`.
#[derive(Clone)]
pub struct Metric {
    pub chart: Chart,
    pub g: [[Expr; 4]; 4],
    pub orientation: i8,
}

fn det3(m: &[[Expr; 3]; 3]) -> Expr {
    let t = |i: usize, j: usize| m[i][j].clone();
    symcalc::add([
        symcalc::mul([t(0, 0), t(1, 1), t(2, 2)]),
        symcalc::mul([t(0, 1), t(1, 2), t(2, 0)]),
        symcalc::mul([t(0, 2), t(1, 0), t(2, 1)]),
        symcalc::neg(symcalc::mul([t(0, 2), t(1, 1), t(2, 0)])),
        symcalc::neg(symcalc::mul([t(0, 1), t(1, 0), t(2, 2)])),
        symcalc::neg(symcalc::mul([t(0, 0), t(1, 2), t(2, 1)])),
    ])
}

pub(crate) fn det4(m: &[[Expr; 4]; 4]) -> Expr {
    let mut terms = Vec::new();
    for col in 0..4 {
        let minor = minor3(m, 0, col);
        let sign = if col % 2 == 0 { 1 } else { -1 };
        terms.push(symcalc::mul([
            Expr::int(sign),
            m[0][col].clone(),
            det3(&minor),
        ]));
    }
    symcalc::add(terms)
}

fn minor3(m: &[[Expr; 4]; 4], row: usize, col: usize) -> [[Expr; 3]; 3] {
    let mut out: [[Expr; 3]; 3] = Default::default();
    let rows: Vec<usize> = (0..4).filter(|&r| r != row).collect();
    let cols: Vec<usize> = (0..4).filter(|&c| c != col).collect();
    for (i, &r) in rows.iter().enumerate() {
        for (j, &c) in cols.iter().enumerate() {
            out[i][j] = m[r][c].clone();
        }
    }
    out
}

impl Default for Metric {
    fn default() -> Self {
        Metric::flat(&Chart::flat())
    }
}

impl Metric {
    pub fn new(chart: Chart, g: [[Expr; 4]; 4], orientation: i8) -> Result<Metric, GeomError> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if g[i][j] != g[j][i] {
                    return Err(GeomError::NotSymmetric);
                }
            }
        }
        Ok(Metric {
            chart,
            g,
            orientation,
        })
    }

    pub fn diagonal(chart: &Chart, d: [Expr; 4]) -> Metric {
        let mut g: [[Expr; 4]; 4] = Default::default();
        for (i, e) in d.into_iter().enumerate() {
            g[i][i] = e;
        }
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    g[i][j] = Expr::zero();
                }
            }
        }
        Metric {
            chart: chart.clone(),
            g,
            orientation: 1,
        }
    }

    /// Euclidean metric on the chart.
    pub fn flat(chart: &Chart) -> Metric {
        Metric::diagonal(chart, [Expr::one(), Expr::one(), Expr::one(), Expr::one()])
    }

    /// Hyperbolic metric `rho^-2 (drho^2 + dy^2)` on the half-space chart.
    pub fn hyperbolic_half_space() -> Metric {
        let chart = Chart::half_space();
        let w = symcalc::pow(chart.sym(0), -2);
        Metric::diagonal(&chart, [w.clone(), w.clone(), w.clone(), w])
    }

    /// Hyperbolic metric `rho^-2 dx^2`, `rho = (1-|x|^2)/2`, on the ball.
    pub fn poincare_ball() -> Metric {
        let chart = Chart::ball();
        let rho = chart.parse("(1 - x1^2 - x2^2 - x3^2 - x4^2)/2").unwrap();
        let w = symcalc::pow(rho, -2);
        Metric::diagonal(&chart, [w.clone(), w.clone(), w.clone(), w])
    }

    /// Round unit sphere in a stereographic chart: `4/(1+|x|^2)^2 dx^2`.
    pub fn round_sphere() -> Metric {
        let chart = Chart::flat();
        let w = chart.parse("4/(1 + x1^2 + x2^2 + x3^2 + x4^2)^2").unwrap();
        Metric::diagonal(&chart, [w.clone(), w.clone(), w.clone(), w])
    }

    pub fn det(&self) -> Expr {
        symcalc::simplify(&det4(&self.g))
    }

    /// Inverse metric through the adjugate; exact symbolic entries.
    pub fn inverse(&self) -> Result<[[Expr; 4]; 4], GeomError> {
        let det = self.det();
        if det.is_zero() {
            return Err(GeomError::SingularMetric);
        }
        let det_inv = symcalc::pow(det, -1);
        let mut inv: [[Expr; 4]; 4] = Default::default();
        for i in 0..4 {
            for j in 0..4 {
                let sign = if (i + j) % 2 == 0 { 1 } else { -1 };
                // adjugate transpose; symmetric input keeps this symmetric
                let cof = det3(&minor3(&self.g, j, i));
                inv[i][j] = symcalc::simplify(&symcalc::mul([
                    Expr::int(sign),
                    cof,
                    det_inv.clone(),
                ]));
            }
        }
        Ok(inv)
    }

    /// `sqrt(det g)` with exact even-power extraction.
    pub fn sqrt_det(&self) -> Expr {
        sqrt_assuming_positive(&self.det())
    }

    /// Oriented Riemannian volume form.
    pub fn volume_form(&self) -> Form {
        let mut comps = vec![symcalc::mul([
            Expr::int(self.orientation as i64),
            self.sqrt_det(),
        ])];
        comps[0] = symcalc::simplify(&comps[0]);
        Form {
            chart: self.chart.clone(),
            degree: 4,
            comps,
        }
    }

    /// Raise all indices of a k-form: returns contravariant components per
    /// increasing multi-index (k-by-k minors of the inverse metric).
    pub fn raise(&self, a: &Form) -> Result<Vec<Expr>, GeomError> {
        let ginv = self.inverse()?;
        let k = a.degree;
        let sets = INDEX_SETS[k];
        let mut out = Vec::with_capacity(binom4(k));
        for seti in sets {
            let mut terms = Vec::new();
            for (jpos, setj) in sets.iter().enumerate() {
                if a.comps[jpos].is_zero() {
                    continue;
                }
                // det of the k x k submatrix ginv[seti x setj]
                let sub = subdet(&ginv, seti, setj);
                terms.push(symcalc::mul([sub, a.comps[jpos].clone()]));
            }
            out.push(symcalc::simplify(&symcalc::add(terms)));
        }
        Ok(out)
    }

    /// Hodge star with respect to the oriented volume form.
    pub fn hodge_star(&self, a: &Form) -> Result<Form, GeomError> {
        let raised = self.raise(a)?;
        let k = a.degree;
        let sd = self.sqrt_det();
        let orient = Expr::int(self.orientation as i64);
        let mut comps = vec![Expr::zero(); binom4(4 - k)];
        for (ipos, seti) in INDEX_SETS[k].iter().enumerate() {
            if raised[ipos].is_zero() {
                continue;
            }
            let complement: Vec<usize> = (0..4).filter(|m| !seti.contains(m)).collect();
            let mut full: Vec<usize> = seti.to_vec();
            full.extend_from_slice(&complement);
            let (_, sign) = index_position(4, &full).expect("disjoint complement");
            let (jpos, _) = index_position(4 - k, &complement).expect("increasing");
            comps[jpos] = symcalc::add([
                comps[jpos].clone(),
                symcalc::mul([
                    Expr::int(sign),
                    orient.clone(),
                    sd.clone(),
                    raised[ipos].clone(),
                ]),
            ]);
        }
        Ok(Form {
            chart: self.chart.clone(),
            degree: 4 - k,
            comps: comps.iter().map(symcalc::simplify).collect(),
        })
    }

    /// Codifferential `d* = -*d*` (4-dimensional Riemannian convention);
    /// the normative property is adjointness to `d`, exercised in tests.
    pub fn codifferential(&self, a: &Form) -> Result<Form, GeomError> {
        if a.degree == 0 {
            return Ok(Form::zero(&self.chart, 0));
        }
        let star = self.hodge_star(a)?;
        let dstar = star.ext_d()?;
        let back = self.hodge_star(&dstar)?;
        Ok(back.scale(&Expr::int(-1)))
    }

    /// Pointwise inner product over increasing multi-indices
    /// (`<dx^01, dx^01> = g^00 g^11 - ...`, so orthonormal pairs have norm 1).
    pub fn inner(&self, a: &Form, b: &Form) -> Result<Expr, GeomError> {
        assert_eq!(a.degree, b.degree);
        let raised = self.raise(b)?;
        let terms: Vec<Expr> = a
            .comps
            .iter()
            .zip(raised)
            .map(|(x, y)| symcalc::mul([x.clone(), y]))
            .collect();
        Ok(symcalc::simplify(&symcalc::add(terms)))
    }

    /// Musical isomorphism: 1-form to vector field.
    pub fn sharp(&self, alpha: &Form) -> Result<[Expr; 4], GeomError> {
        assert_eq!(alpha.degree, 1);
        let ginv = self.inverse()?;
        let mut v: [Expr; 4] = Default::default();
        for i in 0..4 {
            v[i] = symcalc::simplify(&symcalc::add(
                (0..4).map(|j| symcalc::mul([ginv[i][j].clone(), alpha.comps[j].clone()])),
            ));
        }
        Ok(v)
    }

    /// Musical isomorphism: vector field to 1-form.
    pub fn flat_music(&self, v: &[Expr; 4]) -> Form {
        let mut comps = vec![Expr::zero(); 4];
        #[allow(clippy::needless_range_loop)]
        for i in 0..4 {
            comps[i] = symcalc::simplify(&symcalc::add(
                (0..4).map(|j| symcalc::mul([self.g[i][j].clone(), v[j].clone()])),
            ));
        }
        Form {
            chart: self.chart.clone(),
            degree: 1,
            comps,
        }
    }

    /// Diagonal orthonormal coframe `theta^a = sqrt(g_aa) dx^a`, available
    /// when the metric is structurally diagonal.
    pub fn diagonal_coframe(&self) -> Option<[Expr; 4]> {
        for i in 0..4 {
            for j in 0..4 {
                if i != j && !self.g[i][j].is_zero() {
                    return None;
                }
            }
        }
        Some([
            sqrt_assuming_positive(&self.g[0][0]),
            sqrt_assuming_positive(&self.g[1][1]),
            sqrt_assuming_positive(&self.g[2][2]),
            sqrt_assuming_positive(&self.g[3][3]),
        ])
    }

    pub fn eval(&self, p: &[f64; 4]) -> Result<nalgebra::Matrix4<f64>, EvalError> {
        let mut m = nalgebra::Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                m[(i, j)] = self.chart.eval(&self.g[i][j], p)?;
            }
        }
        Ok(m)
    }
}

fn subdet(m: &[[Expr; 4]; 4], rows: &[usize], cols: &[usize]) -> Expr {
    match rows.len() {
        0 => Expr::one(),
        1 => m[rows[0]][cols[0]].clone(),
        2 => symcalc::sub(
            symcalc::mul([m[rows[0]][cols[0]].clone(), m[rows[1]][cols[1]].clone()]),
            symcalc::mul([m[rows[0]][cols[1]].clone(), m[rows[1]][cols[0]].clone()]),
        ),
        n => {
            // cofactor expansion along the first row
            let mut terms = Vec::new();
            for (jc, &c) in cols.iter().enumerate() {
                let sign = if jc % 2 == 0 { 1 } else { -1 };
                let sub_rows = &rows[1..];
                let sub_cols: Vec<usize> =
                    cols.iter().copied().filter(|&x| x != c).collect();
                terms.push(symcalc::mul([
                    Expr::int(sign),
                    m[rows[0]][c].clone(),
                    subdet(m, sub_rows, &sub_cols),
                ]));
            }
            let _ = n;
            symcalc::add(terms)
        }
    }
}

//! Metric curvature: Christoffel symbols, Riemann and Ricci tensors, scalar
//! curvature and the chiral splitting of the curvature operator.
//!
//! Conventions are fixed once by the hyperbolic test: the half-space metric
//! has Ric = -3g, sectional curvature -1 and curvature operator -Id on both
//! chiral blocks. Everything else (sphere +3g, splitting signs) follows.

use nalgebra::{Matrix3, Matrix4};

use crate::symcalc::{self, Chart, Compiled, EvalError, Expr};

use super::forms::INDEX_SETS;
use super::metric::{GeomError, Metric};

/// Symmetric 2-tensor with symbolic entries (metric perturbations, Ricci).
#[derive(Clone)]
pub struct SymTensor2 {
    pub chart: Chart,
    pub m: [[Expr; 4]; 4],
}

impl SymTensor2 {
    pub fn zero(chart: &Chart) -> SymTensor2 {
        SymTensor2 {
            chart: chart.clone(),
            m: Default::default(),
        }
    }

    pub fn from_fn(chart: &Chart, f: impl Fn(usize, usize) -> Expr) -> SymTensor2 {
        let mut m: [[Expr; 4]; 4] = Default::default();
        for i in 0..4 {
            for j in i..4 {
                let e = f(i, j);
                m[i][j] = e.clone();
                m[j][i] = e;
            }
        }
        SymTensor2 {
            chart: chart.clone(),
            m,
        }
    }

    pub fn add(&self, o: &SymTensor2) -> SymTensor2 {
        SymTensor2::from_fn(&self.chart, |i, j| {
            symcalc::add([self.m[i][j].clone(), o.m[i][j].clone()])
        })
    }
    pub fn sub(&self, o: &SymTensor2) -> SymTensor2 {
        SymTensor2::from_fn(&self.chart, |i, j| {
            symcalc::sub(self.m[i][j].clone(), o.m[i][j].clone())
        })
    }
    pub fn scale(&self, e: &Expr) -> SymTensor2 {
        SymTensor2::from_fn(&self.chart, |i, j| {
            symcalc::mul([e.clone(), self.m[i][j].clone()])
        })
    }

    pub fn eval(&self, p: &[f64; 4]) -> Result<Matrix4<f64>, EvalError> {
        let mut out = Matrix4::zeros();
        for i in 0..4 {
            for j in 0..4 {
                out[(i, j)] = self.chart.eval(&self.m[i][j], p)?;
            }
        }
        Ok(out)
    }
}

/// Christoffel symbols of the second kind, `gamma[k][i][j]` = Γ^k_ij.
pub fn christoffel(g: &Metric) -> Result<Vec<Vec<Vec<Expr>>>, GeomError> {
    let ginv = g.inverse()?;
    let coords = g.chart.coords();
    // dg[k][i][j] = ∂_k g_ij
    let mut dg = vec![vec![vec![Expr::zero(); 4]; 4]; 4];
    for k in 0..4 {
        for i in 0..4 {
            for j in i..4 {
                let d = g.g[i][j].partial(coords[k]);
                dg[k][i][j] = d.clone();
                dg[k][j][i] = d;
            }
        }
    }
    let mut gamma = vec![vec![vec![Expr::zero(); 4]; 4]; 4];
    for k in 0..4 {
        for i in 0..4 {
            for j in i..4 {
                let mut terms = Vec::new();
                for l in 0..4 {
                    if ginv[k][l].is_zero() {
                        continue;
                    }
                    terms.push(symcalc::mul([
                        Expr::rational(1, 2),
                        ginv[k][l].clone(),
                        symcalc::add([
                            dg[i][j][l].clone(),
                            dg[j][i][l].clone(),
                            symcalc::neg(dg[l][i][j].clone()),
                        ]),
                    ]));
                }
                let e = symcalc::simplify(&symcalc::add(terms));
                gamma[k][i][j] = e.clone();
                gamma[k][j][i] = e;
            }
        }
    }
    Ok(gamma)
}

/// Ricci tensor via the standard coordinate formula.
pub fn ricci(g: &Metric) -> Result<SymTensor2, GeomError> {
    let gamma = christoffel(g)?;
    let coords = g.chart.coords();
    let ric = SymTensor2::from_fn(&g.chart, |i, j| {
        let mut terms = Vec::new();
        for k in 0..4 {
            terms.push(gamma[k][i][j].partial(coords[k]));
            terms.push(symcalc::neg(gamma[k][k][j].partial(coords[i])));
            for l in 0..4 {
                terms.push(symcalc::mul([
                    gamma[k][k][l].clone(),
                    gamma[l][i][j].clone(),
                ]));
                terms.push(symcalc::neg(symcalc::mul([
                    gamma[k][i][l].clone(),
                    gamma[l][k][j].clone(),
                ])));
            }
        }
        symcalc::simplify(&symcalc::add(terms))
    });
    Ok(ric)
}

/// Scalar curvature `g^{ij} Ric_ij`.
pub fn scalar_curvature(g: &Metric) -> Result<Expr, GeomError> {
    let ric = ricci(g)?;
    let ginv = g.inverse()?;
    let mut terms = Vec::new();
    for i in 0..4 {
        for j in 0..4 {
            terms.push(symcalc::mul([
                ginv[i][j].clone(),
                ric.m[i][j].clone(),
            ]));
        }
    }
    Ok(symcalc::simplify(&symcalc::add(terms)))
}

/// Fully lowered Riemann tensor, `riem[i][j][k][l] = <Riem(∂i,∂j)∂k, ∂l>`.
pub fn riemann_lowered(g: &Metric) -> Result<Vec<Vec<Vec<Vec<Expr>>>>, GeomError> {
    let gamma = christoffel(g)?;
    let coords = g.chart.coords();
    // R^m_{k i j} = ∂_i Γ^m_{jk} - ∂_j Γ^m_{ik} + Γ^m_{il}Γ^l_{jk} - Γ^m_{jl}Γ^l_{ik}
    let mut upper = vec![vec![vec![vec![Expr::zero(); 4]; 4]; 4]; 4];
    for m in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in (i + 1)..4 {
                    let mut terms = vec![
                        gamma[m][j][k].partial(coords[i]),
                        symcalc::neg(gamma[m][i][k].partial(coords[j])),
                    ];
                    for l in 0..4 {
                        terms.push(symcalc::mul([
                            gamma[m][i][l].clone(),
                            gamma[l][j][k].clone(),
                        ]));
                        terms.push(symcalc::neg(symcalc::mul([
                            gamma[m][j][l].clone(),
                            gamma[l][i][k].clone(),
                        ])));
                    }
                    let e = symcalc::simplify(&symcalc::add(terms));
                    upper[m][k][i][j] = e.clone();
                    upper[m][k][j][i] = symcalc::neg(e);
                }
            }
        }
    }
    let mut low = vec![vec![vec![vec![Expr::zero(); 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut terms = Vec::new();
                    for m in 0..4 {
                        if g.g[l][m].is_zero() {
                            continue;
                        }
                        terms.push(symcalc::mul([
                            g.g[l][m].clone(),
                            upper[m][k][i][j].clone(),
                        ]));
                    }
                    low[i][j][k][l] = symcalc::simplify(&symcalc::add(terms));
                }
            }
        }
    }
    Ok(low)
}

/// Chiral blocks of the curvature operator in an orthonormal coframe.
#[derive(Clone, Debug)]
pub struct CurvatureSplit {
    pub rm_plus: [[Expr; 3]; 3],
    pub rm_minus: [[Expr; 3]; 3],
    /// Λ+ -> Λ- block; vanishes exactly when the metric is Einstein.
    pub mixed: [[Expr; 3]; 3],
    pub scalar: Expr,
}

// Λ± basis pairs in the increasing 2-index table (01,02,03,12,13,23):
// ω±_1 = (θ^01 ± θ^23)/√2, ω±_2 = (θ^02 ∓ θ^13)/√2, ω±_3 = (θ^03 ± θ^12)/√2.
const PLUS_PAIRS: [(usize, usize, i64); 3] = [(0, 5, 1), (1, 4, -1), (2, 3, 1)];
const MINUS_PAIRS: [(usize, usize, i64); 3] = [(0, 5, -1), (1, 4, 1), (2, 3, -1)];

/// Symbolic chiral splitting; requires a structurally diagonal metric (the
/// general case goes through [`curvature_split_at`] pointwise).
pub fn curvature_split(g: &Metric) -> Result<CurvatureSplit, GeomError> {
    let coframe = g
        .diagonal_coframe()
        .ok_or(GeomError::SingularMetric)?;
    let low = riemann_lowered(g)?;
    // Orthonormal components: R_on[a][b][c][d] = R(abcd)/(θ_a θ_b θ_c θ_d)
    let theta_inv: Vec<Expr> = coframe
        .iter()
        .map(|t| symcalc::pow(t.clone(), -1))
        .collect();
    let on = |a: usize, b: usize, c: usize, d: usize| -> Expr {
        symcalc::simplify(&symcalc::mul([
            low[a][b][c][d].clone(),
            theta_inv[a].clone(),
            theta_inv[b].clone(),
            theta_inv[c].clone(),
            theta_inv[d].clone(),
        ]))
    };
    // Curvature operator on 2-forms: M[(ab)][(cd)] = <Rm(e_a∧e_b), e_c∧e_d>
    // = <Riem(e_a,e_b)e_d, e_c> = -R_on(a,b,c,d).
    let pairs = INDEX_SETS[2];
    let mut m: [[Expr; 6]; 6] = Default::default();
    for (p, sp) in pairs.iter().enumerate() {
        for (q, sq) in pairs.iter().enumerate() {
            m[p][q] = symcalc::neg(on(sp[0], sp[1], sq[0], sq[1]));
        }
    }
    let block = |left: &[(usize, usize, i64); 3], right: &[(usize, usize, i64); 3]| {
        let mut out: [[Expr; 3]; 3] = Default::default();
        for (i, &(a1, a2, sa)) in left.iter().enumerate() {
            for (j, &(b1, b2, sb)) in right.iter().enumerate() {
                // (1/2) Σ signs; the 1/√2 normalisations multiply to 1/2.
                out[i][j] = symcalc::simplify(&symcalc::mul([
                    Expr::rational(1, 2),
                    symcalc::add([
                        m[a1][b1].clone(),
                        symcalc::mul([Expr::int(sb), m[a1][b2].clone()]),
                        symcalc::mul([Expr::int(sa), m[a2][b1].clone()]),
                        symcalc::mul([Expr::int(sa * sb), m[a2][b2].clone()]),
                    ]),
                ]));
            }
        }
        out
    };
    let rm_plus = block(&PLUS_PAIRS, &PLUS_PAIRS);
    let rm_minus = block(&MINUS_PAIRS, &MINUS_PAIRS);
    let mixed = block(&PLUS_PAIRS, &MINUS_PAIRS);
    let scalar = scalar_curvature(g)?;
    Ok(CurvatureSplit {
        rm_plus,
        rm_minus,
        mixed,
        scalar,
    })
}

// ---------------------------------------------------------------------------
// Numeric-at-a-point machinery. Second derivatives of the metric entries are
// taken symbolically once; everything downstream (Γ, ∂Γ, curvature) is
// assembled numerically, which keeps arbitrary metrics tractable.
// ---------------------------------------------------------------------------

/// Compiled 2-jet of a metric (entries, first and second derivatives), with
/// optional extra parameters appended to the variable list.
pub struct MetricJet {
    vars: Vec<String>,
    g: Vec<Compiled>,       // 16
    dg: Vec<Compiled>,      // 4*16
    d2g: Vec<Compiled>,     // 16*16
    orientation: i8,
}

/// Numeric metric data at a point.
#[derive(Clone, Debug)]
pub struct GVals {
    pub g: [[f64; 4]; 4],
    pub dg: [[[f64; 4]; 4]; 4],    // dg[k][i][j] = ∂_k g_ij
    pub d2g: [[[[f64; 4]; 4]; 4]; 4], // d2g[k][l][i][j] = ∂_k ∂_l g_ij
    pub orientation: i8,
}

impl MetricJet {
    pub fn new(g: &Metric, params: &[&str]) -> Result<MetricJet, EvalError> {
        let coords = g.chart.coords();
        let mut vars: Vec<String> = coords.iter().map(|s| s.to_string()).collect();
        vars.extend(params.iter().map(|s| s.to_string()));
        let var_refs: Vec<&str> = vars.iter().map(|s| s.as_str()).collect();
        let mut gx = Vec::with_capacity(16);
        let mut dgx = Vec::with_capacity(64);
        let mut d2gx = Vec::with_capacity(256);
        for i in 0..4 {
            for j in 0..4 {
                gx.push(Compiled::new(&g.g[i][j], &var_refs)?);
            }
        }
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    dgx.push(Compiled::new(&g.g[i][j].partial(coords[k]), &var_refs)?);
                }
            }
        }
        for k in 0..4 {
            for l in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        let d = g.g[i][j].partial(coords[k]).partial(coords[l]);
                        d2gx.push(Compiled::new(&d, &var_refs)?);
                    }
                }
            }
        }
        Ok(MetricJet {
            vars,
            g: gx,
            dg: dgx,
            d2g: d2gx,
            orientation: g.orientation,
        })
    }

    pub fn n_vars(&self) -> usize {
        self.vars.len()
    }

    pub fn eval(&self, point: &[f64]) -> Result<GVals, EvalError> {
        let mut scratch = Vec::new();
        let mut out = GVals {
            g: [[0.0; 4]; 4],
            dg: [[[0.0; 4]; 4]; 4],
            d2g: [[[[0.0; 4]; 4]; 4]; 4],
            orientation: self.orientation,
        };
        for i in 0..4 {
            for j in 0..4 {
                out.g[i][j] = self.g[i * 4 + j].eval(point, &mut scratch)?;
            }
        }
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    out.dg[k][i][j] = self.dg[(k * 4 + i) * 4 + j].eval(point, &mut scratch)?;
                }
            }
        }
        for k in 0..4 {
            for l in 0..4 {
                for i in 0..4 {
                    for j in 0..4 {
                        out.d2g[k][l][i][j] =
                            self.d2g[((k * 4 + l) * 4 + i) * 4 + j].eval(point, &mut scratch)?;
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Numeric curvature package assembled from a metric 2-jet.
#[derive(Clone, Debug)]
pub struct CurvatureVals {
    pub ginv: [[f64; 4]; 4],
    pub gamma: [[[f64; 4]; 4]; 4],  // gamma[k][i][j]
    pub ricci: [[f64; 4]; 4],
    pub scalar: f64,
    pub riemann: [[[[f64; 4]; 4]; 4]; 4], // lowered, [i][j][k][l]
}

pub fn curvature_at(vals: &GVals) -> Result<CurvatureVals, GeomError> {
    let g = Matrix4::from_fn(|i, j| vals.g[i][j]);
    let ginv_m = g.try_inverse().ok_or(GeomError::SingularMetric)?;
    let mut ginv = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            ginv[i][j] = ginv_m[(i, j)];
        }
    }
    // Γ^k_ij
    let mut gamma = [[[0.0; 4]; 4]; 4];
    for k in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for l in 0..4 {
                    s += 0.5
                        * ginv[k][l]
                        * (vals.dg[i][j][l] + vals.dg[j][i][l] - vals.dg[l][i][j]);
                }
                gamma[k][i][j] = s;
            }
        }
    }
    // ∂_m Γ^k_ij (uses ∂ginv = -ginv ∂g ginv)
    let mut dginv = [[[0.0; 4]; 4]; 4];
    for m in 0..4 {
        for i in 0..4 {
            for j in 0..4 {
                let mut s = 0.0;
                for a in 0..4 {
                    for b in 0..4 {
                        s -= ginv[i][a] * vals.dg[m][a][b] * ginv[b][j];
                    }
                }
                dginv[m][i][j] = s;
            }
        }
    }
    let mut dgamma = [[[[0.0; 4]; 4]; 4]; 4]; // dgamma[m][k][i][j] = ∂_m Γ^k_ij
    for m in 0..4 {
        for k in 0..4 {
            for i in 0..4 {
                for j in 0..4 {
                    let mut s = 0.0;
                    for l in 0..4 {
                        s += 0.5
                            * dginv[m][k][l]
                            * (vals.dg[i][j][l] + vals.dg[j][i][l] - vals.dg[l][i][j]);
                        s += 0.5
                            * ginv[k][l]
                            * (vals.d2g[m][i][j][l] + vals.d2g[m][j][i][l]
                                - vals.d2g[m][l][i][j]);
                    }
                    dgamma[m][k][i][j] = s;
                }
            }
        }
    }
    // Ricci
    let mut ricci = [[0.0; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            let mut s = 0.0;
            for k in 0..4 {
                s += dgamma[k][k][i][j] - dgamma[i][k][k][j];
                for l in 0..4 {
                    s += gamma[k][k][l] * gamma[l][i][j] - gamma[k][i][l] * gamma[l][k][j];
                }
            }
            ricci[i][j] = s;
        }
    }
    let mut scalar = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            scalar += ginv[i][j] * ricci[i][j];
        }
    }
    // Lowered Riemann
    let mut riemann = [[[[0.0; 4]; 4]; 4]; 4];
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                for l in 0..4 {
                    let mut up = 0.0;
                    for m in 0..4 {
                        if m == l {
                            // accumulate after lowering below
                        }
                        let _ = m;
                    }
                    // R^m_kij then lower on the last slot
                    let mut s = 0.0;
                    for m in 0..4 {
                        let mut r_up = dgamma[i][m][j][k] - dgamma[j][m][i][k];
                        for n in 0..4 {
                            r_up += gamma[m][i][n] * gamma[n][j][k]
                                - gamma[m][j][n] * gamma[n][i][k];
                        }
                        s += vals.g[l][m] * r_up;
                    }
                    up += s;
                    riemann[i][j][k][l] = up;
                }
            }
        }
    }
    Ok(CurvatureVals {
        ginv,
        gamma,
        ricci,
        scalar,
        riemann,
    })
}

/// Numeric chiral splitting at a point (orthonormalisation by Cholesky).
pub fn curvature_split_at(
    vals: &GVals,
) -> Result<(Matrix3<f64>, Matrix3<f64>, Matrix3<f64>, f64), GeomError> {
    let cur = curvature_at(vals)?;
    let g = Matrix4::from_fn(|i, j| vals.g[i][j]);
    let chol = nalgebra::Cholesky::new(g).ok_or(GeomError::SingularMetric)?;
    // coframe rows: θ^a_μ = Lᵀ rows; frame E_a = (Lᵀ)^{-1} columns
    let lt = chol.l().transpose();
    let frame = lt
        .try_inverse()
        .ok_or(GeomError::SingularMetric)?;
    // R_on[a][b][c][d]
    let mut on = [[[[0.0; 4]; 4]; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let mut s = 0.0;
                    for i in 0..4 {
                        for j in 0..4 {
                            for k in 0..4 {
                                for l in 0..4 {
                                    s += frame[(i, a)]
                                        * frame[(j, b)]
                                        * frame[(k, c)]
                                        * frame[(l, d)]
                                        * cur.riemann[i][j][k][l];
                                }
                            }
                        }
                    }
                    on[a][b][c][d] = s;
                }
            }
        }
    }
    let pairs = INDEX_SETS[2];
    let mut m = [[0.0; 6]; 6];
    for (p, sp) in pairs.iter().enumerate() {
        for (q, sq) in pairs.iter().enumerate() {
            m[p][q] = -on[sp[0]][sp[1]][sq[0]][sq[1]];
        }
    }
    let block = |left: &[(usize, usize, i64); 3], right: &[(usize, usize, i64); 3]| {
        Matrix3::from_fn(|i, j| {
            let (a1, a2, sa) = left[i];
            let (b1, b2, sb) = right[j];
            0.5 * (m[a1][b1]
                + sb as f64 * m[a1][b2]
                + sa as f64 * m[a2][b1]
                + (sa * sb) as f64 * m[a2][b2])
        })
    };
    Ok((
        block(&PLUS_PAIRS, &PLUS_PAIRS),
        block(&MINUS_PAIRS, &MINUS_PAIRS),
        block(&PLUS_PAIRS, &MINUS_PAIRS),
        cur.scalar,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcalc::is_identically_zero;

    fn assert_zero(e: &Expr, chart: &Chart, seed: u64) {
        let r = is_identically_zero(e, chart, seed).unwrap();
        assert!(r.is_zero, "not zero: {}", e);
    }

    #[test]
    fn hyperbolic_ricci_is_minus_three_g() {
        let g = Metric::hyperbolic_half_space();
        let ric = ricci(&g).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let resid = symcalc::add([
                    ric.m[i][j].clone(),
                    symcalc::mul([Expr::int(3), g.g[i][j].clone()]),
                ]);
                assert_zero(&resid, &g.chart, 10 + (i * 4 + j) as u64);
            }
        }
        let r = scalar_curvature(&g).unwrap();
        assert_zero(&symcalc::add([r, Expr::int(12)]), &g.chart, 99);
    }

    #[test]
    fn ball_ricci_is_minus_three_g() {
        let g = Metric::poincare_ball();
        let ric = ricci(&g).unwrap();
        for i in 0..4 {
            let resid = symcalc::add([
                ric.m[i][i].clone(),
                symcalc::mul([Expr::int(3), g.g[i][i].clone()]),
            ]);
            assert_zero(&resid, &g.chart, 20 + i as u64);
        }
        for (i, j) in [(0, 1), (1, 2), (2, 3), (0, 3)] {
            assert_zero(&ric.m[i][j], &g.chart, 30 + (i + j) as u64);
        }
    }

    #[test]
    fn sphere_ricci_is_plus_three_g() {
        let g = Metric::round_sphere();
        let ric = ricci(&g).unwrap();
        for i in 0..4 {
            let resid = symcalc::sub(
                ric.m[i][i].clone(),
                symcalc::mul([Expr::int(3), g.g[i][i].clone()]),
            );
            assert_zero(&resid, &g.chart, 40 + i as u64);
        }
    }

    #[test]
    fn flat_curvature_vanishes() {
        let g = Metric::flat(&Chart::flat());
        let ric = ricci(&g).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert!(ric.m[i][j].is_zero());
            }
        }
        let split = curvature_split(&g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert!(split.rm_plus[i][j].is_zero());
                assert!(split.rm_minus[i][j].is_zero());
            }
        }
    }

    #[test]
    fn hyperbolic_split_is_minus_identity() {
        let g = Metric::hyperbolic_half_space();
        let split = curvature_split(&g).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let idd = if i == j { Expr::int(-1) } else { Expr::zero() };
                assert_zero(
                    &symcalc::sub(split.rm_plus[i][j].clone(), idd.clone()),
                    &g.chart,
                    50,
                );
                assert_zero(
                    &symcalc::sub(split.rm_minus[i][j].clone(), idd),
                    &g.chart,
                    51,
                );
                assert_zero(&split.mixed[i][j], &g.chart, 52);
            }
        }
        // scalar from the chiral trace: R = 4 tr(Rm+) = -12
        assert_zero(
            &symcalc::add([split.scalar.clone(), Expr::int(12)]),
            &g.chart,
            53,
        );
    }

    #[test]
    fn sphere_split_is_plus_identity() {
        let g = Metric::round_sphere();
        let split = curvature_split(&g).unwrap();
        for i in 0..3 {
            let resid = symcalc::sub(split.rm_plus[i][i].clone(), Expr::one());
            assert_zero(&resid, &g.chart, 60 + i as u64);
        }
        assert_zero(
            &symcalc::sub(split.scalar.clone(), Expr::int(12)),
            &g.chart,
            63,
        );
    }

    #[test]
    fn numeric_split_matches_symbolic_on_hyperbolic() {
        let g = Metric::hyperbolic_half_space();
        let jet = MetricJet::new(&g, &[]).unwrap();
        let p = [0.7, 0.3, -0.2, 0.5];
        let vals = jet.eval(&p).unwrap();
        let (rp, rm, mx, sc) = curvature_split_at(&vals).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let idd = if i == j { -1.0 } else { 0.0 };
                assert!((rp[(i, j)] - idd).abs() < 1e-9);
                assert!((rm[(i, j)] - idd).abs() < 1e-9);
                assert!(mx[(i, j)].abs() < 1e-9);
            }
        }
        assert!((sc + 12.0).abs() < 1e-8);
    }

    #[test]
    fn non_einstein_perturbation_has_mixed_block() {
        // g + eps * diag(x2^2,0,0,0)-style perturbation of the hyperbolic
        // metric: the mixed block must rise above 1e-6.
        let chart = Chart::half_space();
        let w = symcalc::pow(chart.sym(0), -2);
        let pert = symcalc::add([
            w.clone(),
            symcalc::mul([
                Expr::rational(1, 100),
                symcalc::pow(chart.sym(1), 2),
            ]),
        ]);
        let g = Metric::diagonal(&chart, [pert, w.clone(), w.clone(), w]);
        let jet = MetricJet::new(&g, &[]).unwrap();
        let vals = jet.eval(&[0.8, 0.4, -0.3, 0.2]).unwrap();
        let (_, _, mx, _) = curvature_split_at(&vals).unwrap();
        let max = mx.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        assert!(max > 1e-6, "mixed block too small: {}", max);
    }
}

//! Definite connections and the canonical metric construction.
//!
//! A connection is definite when the Gram matrix `Q(μ)_ij = F_i∧F_j / 2μ`
//! has eigenvalues of one sign everywhere. The induced data package:
//! orientation (Q positive for positively oriented μ), conformal structure
//! through the Urbantke contraction of the curvature triple, volume fixed by
//! `tr √Q(μ_A) = 3`, the orthonormalised self-dual frame `Σ = ±F∘Q^{-1/2}`,
//! the almost complex structures J_i and the sign convention J₁J₂J₃ = -Id.
//!
//! Normalisation used throughout: `Σ_i ∧ Σ_j = 2 δ_ij μ_A`, i.e. the Σ_i
//! have 2-form norm √2 in the increasing-multi-index inner product, and
//! `J_i(α) = *(α ∧ Σ_i)` (equivalently `*√2(α ∧ Σ_i/√2)` for unit-norm
//! frames). This is the normalisation that reproduces the half-space J
//! tables exactly.

use nalgebra::{Matrix3, Matrix4};
use thiserror::Error;

use crate::riemann4::{Form, FormError, GeomError, Metric};
use crate::so3conn::{eps, EValuedForm, So3Connection};
use crate::symcalc::{self, is_identically_zero, sqrt_assuming_positive, Chart, ChartError, Expr};

#[derive(Debug, Clone, Error)]
pub enum DefiniteError {
    #[error("connection is not definite at sample point {point:?} (eigenvalues {eigs:?})")]
    NotDefinite { point: [f64; 4], eigs: [f64; 3] },
    #[error("Q is numerically degenerate at {point:?} (|eigenvalue| {eig:.3e} < 1e-10)")]
    DegenerateQ { point: [f64; 4], eig: f64 },
    #[error("sign of the connection could not be resolved (J1 J2 J3 residuals {plus:.3e} / {minus:.3e})")]
    SignUnresolved { plus: f64, minus: f64 },
    #[error("Q matrix is not diagonal, symbolic square root unavailable")]
    NonDiagonalQ,
    #[error("4-form vanishes on the sample domain")]
    VanishingVolume,
    #[error(transparent)]
    Form(#[from] FormError),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Chart(#[from] ChartError),
    #[error(transparent)]
    Eval(#[from] crate::symcalc::EvalError),
}

/// Definiteness verdict for a curvature triple.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Definiteness {
    PositiveSpan,
    NegativeSpan,
    NotDefinite,
}

/// Derived package of a definite connection.
#[derive(Clone)]
pub struct DefiniteData {
    pub chart: Chart,
    /// Q(μ_A); `tr sqrt(Q) = 3` by construction.
    pub q: [[Expr; 3]; 3],
    /// +1 for positive definite, -1 for negative definite (J₁J₂J₃ = -Id).
    pub sign: i8,
    /// Canonical volume form μ_A.
    pub mu: Form,
    /// The induced metric g_A (orientation flag set from Q).
    pub g: Metric,
    /// Σ_i, normalised so Σ_i ∧ Σ_j = 2 δ_ij μ_A.
    pub sigma: EValuedForm,
    /// Ψ = δ - √Q_A (symmetric, trace-free).
    pub psi: [[Expr; 3]; 3],
    /// P = (Ψ - δ)^{-1} = -Q_A^{-1/2}.
    pub p_mat: [[Expr; 3]; 3],
}

/// `Q(μ)_ij = (F_i ∧ F_j) / (2 μ)` for a nowhere vanishing 4-form μ.
pub fn q_matrix(f: &EValuedForm, mu: &Form) -> Result<[[Expr; 3]; 3], DefiniteError> {
    assert_eq!(f.degree(), 2, "curvature triple must be 2-forms");
    assert_eq!(mu.degree, 4);
    if mu.comps[0].is_zero() {
        return Err(DefiniteError::VanishingVolume);
    }
    let inv2mu = symcalc::pow(symcalc::mul([Expr::int(2), mu.comps[0].clone()]), -1);
    let mut q: [[Expr; 3]; 3] = Default::default();
    for i in 0..3 {
        for j in i..3 {
            let w = f.c[i].wedge(&f.c[j])?;
            let e = symcalc::simplify(&symcalc::mul([w.comps[0].clone(), inv2mu.clone()]));
            q[i][j] = e.clone();
            q[j][i] = e;
        }
    }
    Ok(q)
}

fn eval_matrix3(q: &[[Expr; 3]; 3], chart: &Chart, p: &[f64; 4]) -> Result<Matrix3<f64>, DefiniteError> {
    let mut m = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            m[(i, j)] = chart.eval(&q[i][j], p)?;
        }
    }
    Ok(m)
}

/// Eigenvalue-sign verdict of `Q(μ)` over the chart sample set. The verdict
/// is taken against an arbitrary nowhere-zero reference volume, so
/// "positive-span" means Q(coordinate volume) is positive definite.
pub fn is_definite(f: &EValuedForm, seed: u64) -> Result<Definiteness, DefiniteError> {
    let chart = f.chart().clone();
    let mu_ref = coordinate_volume(&chart);
    let q = q_matrix(f, &mu_ref)?;
    let mut verdict: Option<Definiteness> = None;
    for p in chart.samples(24, seed)? {
        let m = eval_matrix3(&q, &chart, &p)?;
        let eigs = m.symmetric_eigen().eigenvalues;
        let mut e = [eigs[0], eigs[1], eigs[2]];
        e.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let this = if e[0] > 1e-10 {
            Definiteness::PositiveSpan
        } else if e[2] < -1e-10 {
            Definiteness::NegativeSpan
        } else {
            return Ok(Definiteness::NotDefinite);
        };
        match verdict {
            None => verdict = Some(this),
            Some(v) if v != this => return Ok(Definiteness::NotDefinite),
            _ => {}
        }
    }
    Ok(verdict.unwrap_or(Definiteness::NotDefinite))
}

pub fn coordinate_volume(chart: &Chart) -> Form {
    let mut f = Form::zero(chart, 4);
    f.comps[0] = Expr::one();
    f
}

/// Symbolic √ of a structurally diagonal symmetric matrix of positive
/// entries; `None` when off-diagonal terms survive simplification.
fn sqrt_diag(q: &[[Expr; 3]; 3], chart: &Chart, seed: u64) -> Result<Option<[[Expr; 3]; 3]>, DefiniteError> {
    for i in 0..3 {
        for j in 0..3 {
            if i != j && !is_identically_zero(&q[i][j], chart, seed)?.is_zero {
                return Ok(None);
            }
        }
    }
    let mut out: [[Expr; 3]; 3] = Default::default();
    for (i, row) in out.iter_mut().enumerate() {
        row[i] = sqrt_assuming_positive(&q[i][i]);
    }
    Ok(Some(out))
}

/// `μ_A = μ_ref (tr√Q(μ_ref) / 3)^2`, the unique volume with tr√Q = 3.
/// `μ_ref` must already be positively oriented (Q ≻ 0).
pub fn canonical_volume(f: &EValuedForm, mu_ref: &Form, seed: u64) -> Result<Form, DefiniteError> {
    let chart = f.chart().clone();
    let q = q_matrix(f, mu_ref)?;
    let sq = sqrt_diag(&q, &chart, seed)?.ok_or(DefiniteError::NonDiagonalQ)?;
    let tr = symcalc::simplify(&symcalc::add([
        sq[0][0].clone(),
        sq[1][1].clone(),
        sq[2][2].clone(),
    ]));
    let factor = symcalc::pow(
        symcalc::mul([Expr::rational(1, 3), tr]),
        2,
    );
    Ok(mu_ref.scale(&factor).map(|e| symcalc::simplify(e)))
}

/// Urbantke contraction: `t_{μν} μ_ref = (1/6) ε^{ijk} ι_μ F_i ∧ ι_ν F_j ∧ F_k`.
/// Returns the conformal representative (defined up to scale and sign).
pub fn urbantke(f: &EValuedForm, mu_ref: &Form) -> Result<[[Expr; 4]; 4], DefiniteError> {
    let chart = f.chart().clone();
    let inv_mu = symcalc::pow(mu_ref.comps[0].clone(), -1);
    let basis_vec = |m: usize| -> [Expr; 4] {
        let mut v: [Expr; 4] = Default::default();
        v[m] = Expr::one();
        v
    };
    let mut t: [[Expr; 4]; 4] = Default::default();
    for mu in 0..4 {
        for nu in mu..4 {
            let mut terms = Vec::new();
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        let e = eps(i, j, k);
                        if e == 0 {
                            continue;
                        }
                        let w = f.c[i]
                            .interior(&basis_vec(mu))
                            .wedge(&f.c[j].interior(&basis_vec(nu)))?
                            .wedge(&f.c[k])?;
                        terms.push(symcalc::mul([
                            Expr::rational(e, 6),
                            w.comps[0].clone(),
                        ]));
                    }
                }
            }
            let entry =
                symcalc::simplify(&symcalc::mul([symcalc::add(terms), inv_mu.clone()]));
            t[mu][nu] = entry.clone();
            t[nu][mu] = entry;
        }
    }
    let _ = chart;
    Ok(t)
}

/// Almost complex structure matrices `J_i(dx^a) = *(dx^a ∧ Σ_i)` in the
/// coordinate coframe: returns 4x4 matrices with `J_i(dx^a) = Σ_b M[b][a] dx^b`.
pub fn almost_complex(g: &Metric, sigma: &EValuedForm) -> Result<[[[Expr; 4]; 4]; 3], DefiniteError> {
    let chart = g.chart.clone();
    let mut out: [[[Expr; 4]; 4]; 3] = Default::default();
    for i in 0..3 {
        for a in 0..4 {
            let w = Form::dx(&chart, a).wedge(&sigma.c[i])?;
            let img = g.hodge_star(&w)?;
            for b in 0..4 {
                out[i][b][a] = img.comps[b].clone();
            }
        }
    }
    Ok(out)
}

fn matmul4(a: &[[Expr; 4]; 4], b: &[[Expr; 4]; 4]) -> [[Expr; 4]; 4] {
    let mut out: [[Expr; 4]; 4] = Default::default();
    for i in 0..4 {
        for j in 0..4 {
            out[i][j] = symcalc::simplify(&symcalc::add(
                (0..4).map(|k| symcalc::mul([a[i][k].clone(), b[k][j].clone()])),
            ));
        }
    }
    out
}

/// Max |entry| deviation of the product J1 J2 J3 from `target * Id`,
/// sampled over the chart box.
fn j_product_residual(
    j: &[[[Expr; 4]; 4]; 3],
    chart: &Chart,
    target: f64,
    seed: u64,
) -> Result<f64, DefiniteError> {
    let prod = matmul4(&matmul4(&j[0], &j[1]), &j[2]);
    let mut worst = 0.0f64;
    for p in chart.samples(8, seed)? {
        for a in 0..4 {
            for b in 0..4 {
                let v = chart.eval(&prod[a][b], &p)?;
                let expect = if a == b { target } else { 0.0 };
                worst = worst.max((v - expect).abs());
            }
        }
    }
    Ok(worst)
}

/// Full derived package of a definite connection (symbolic path; requires
/// Q diagonal after simplification, which covers the geometric examples).
pub fn metric_from_connection(a: &So3Connection, seed: u64) -> Result<DefiniteData, DefiniteError> {
    let f = a.curvature()?;
    data_from_curvature(&f, seed)
}

/// Same as [`metric_from_connection`] but starting from the curvature triple.
pub fn data_from_curvature(f: &EValuedForm, seed: u64) -> Result<DefiniteData, DefiniteError> {
    let chart = f.chart().clone();

    // Step 1: orientation. μ positively oriented iff Q(μ) ≻ 0.
    let verdict = is_definite(f, seed)?;
    let orient: i8 = match verdict {
        Definiteness::PositiveSpan => 1,
        Definiteness::NegativeSpan => -1,
        Definiteness::NotDefinite => {
            let mu_ref = coordinate_volume(&chart);
            let q = q_matrix(f, &mu_ref)?;
            let p = chart.samples(1, seed)?[0];
            let m = eval_matrix3(&q, &chart, &p)?;
            let e = m.symmetric_eigen().eigenvalues;
            return Err(DefiniteError::NotDefinite {
                point: p,
                eigs: [e[0], e[1], e[2]],
            });
        }
    };
    let mut mu_ref = coordinate_volume(&chart);
    mu_ref.comps[0] = Expr::int(orient as i64);

    // Step 3 (volume): tr √Q(μ_A) = 3.
    let mu = canonical_volume(f, &mu_ref, seed)?;
    let q = q_matrix(f, &mu)?;
    let sqrt_q = sqrt_diag(&q, &chart, seed)?.ok_or(DefiniteError::NonDiagonalQ)?;

    // Step 2 (conformal structure): Urbantke contraction, then scale so the
    // volume form of g_A equals μ_A.
    let t = urbantke(f, &mu_ref)?;
    // Fix the overall sign so t is positive definite.
    let p0 = chart.samples(1, seed + 1)?[0];
    let mut tm = Matrix4::zeros();
    for i in 0..4 {
        for j in 0..4 {
            tm[(i, j)] = chart.eval(&t[i][j], &p0)?;
        }
    }
    let eigs = tm.symmetric_eigen().eigenvalues;
    let t_sign: i64 = if eigs.iter().all(|&e| e > 0.0) {
        1
    } else if eigs.iter().all(|&e| e < 0.0) {
        -1
    } else {
        return Err(DefiniteError::NotDefinite {
            point: p0,
            eigs: [eigs[0], eigs[1], eigs[2]],
        });
    };
    let t_pos: [[Expr; 4]; 4] = {
        let mut out: [[Expr; 4]; 4] = Default::default();
        for i in 0..4 {
            for j in 0..4 {
                out[i][j] = symcalc::mul([Expr::int(t_sign), t[i][j].clone()]);
            }
        }
        out
    };
    // conformal factor c = sqrt(μ_A / vol(t))
    let t_metric = Metric::new(chart.clone(), t_pos.clone(), orient)?;
    let vol_t = t_metric.volume_form();
    let c = sqrt_assuming_positive(&symcalc::simplify(&symcalc::mul([
        mu.comps[0].clone(),
        symcalc::pow(vol_t.comps[0].clone(), -1),
    ])));
    let mut g_entries: [[Expr; 4]; 4] = Default::default();
    for i in 0..4 {
        for j in 0..4 {
            g_entries[i][j] = symcalc::simplify(&symcalc::mul([c.clone(), t_pos[i][j].clone()]));
        }
    }
    let g = Metric::new(chart.clone(), g_entries, orient)?;

    // Σ with candidate sign +1: Σ̂_i = (Q_A^{-1/2})_ij F_j.
    let inv_sqrt_q: [[Expr; 3]; 3] = {
        let mut out: [[Expr; 3]; 3] = Default::default();
        for (i, row) in out.iter_mut().enumerate() {
            row[i] = symcalc::simplify(&symcalc::pow(sqrt_q[i][i].clone(), -1));
        }
        out
    };
    let sigma_plus = f.matrix_apply(&inv_sqrt_q).map(|fm| fm.simplified());

    // Sign: J₁J₂J₃ = -Id picks it.
    let j_plus = almost_complex(&g, &sigma_plus)?;
    let res_minus = j_product_residual(&j_plus, &chart, -1.0, seed + 2)?;
    let res_plus = j_product_residual(&j_plus, &chart, 1.0, seed + 2)?;
    let sign: i8 = if res_minus < 1e-7 && res_plus > 1e-3 {
        1
    } else if res_plus < 1e-7 && res_minus > 1e-3 {
        // J(+Σ̂) product = +Id means the minus sign is the convention fit.
        -1
    } else {
        return Err(DefiniteError::SignUnresolved {
            plus: res_plus,
            minus: res_minus,
        });
    };
    let sigma = sigma_plus.scale(&Expr::int(sign as i64));

    // Ψ = δ - √Q_A and P = (Ψ-δ)^{-1} = -Q_A^{-1/2}.
    let mut psi: [[Expr; 3]; 3] = Default::default();
    let mut p_mat: [[Expr; 3]; 3] = Default::default();
    for i in 0..3 {
        for j in 0..3 {
            let delta = if i == j { Expr::one() } else { Expr::zero() };
            psi[i][j] = symcalc::simplify(&symcalc::sub(delta, sqrt_q[i][j].clone()));
            p_mat[i][j] = symcalc::neg(inv_sqrt_q[i][j].clone());
        }
    }

    Ok(DefiniteData {
        chart,
        q,
        sign,
        mu,
        g,
        sigma,
        psi,
        p_mat,
    })
}

/// Connection sign alone (±1 per the J₁J₂J₃ = -Id convention).
pub fn connection_sign(a: &So3Connection, seed: u64) -> Result<i8, DefiniteError> {
    Ok(metric_from_connection(a, seed)?.sign)
}

// ---------------------------------------------------------------------------
// Pointwise numeric path: everything above is pointwise algebra in F and μ,
// so it can be evaluated at a single point from numeric 2-form components.
// Used by the linearised theory (directional derivatives of Ψ, Σ fields).
// ---------------------------------------------------------------------------

/// `(a ∧ b) / dx^{0123}` for numeric 2-form components in the increasing
/// pair basis (01, 02, 03, 12, 13, 23).
pub fn wedge22_vol(a: &[f64; 6], b: &[f64; 6]) -> f64 {
    a[0] * b[5] + a[5] * b[0] - a[1] * b[4] - a[4] * b[1] + a[2] * b[3] + a[3] * b[2]
}

/// Numeric `Q(μ)` from pointwise curvature components.
pub fn q_at(f: &[[f64; 6]; 3], mu: f64) -> Matrix3<f64> {
    Matrix3::from_fn(|i, j| wedge22_vol(&f[i], &f[j]) / (2.0 * mu))
}

/// Pointwise (Ψ, √Q_A, tr√Q(μ_ref)) from curvature values and an oriented
/// reference volume. Degenerate Q (eigenvalue below 1e-10) is a hard error.
pub fn psi_at(
    f: &[[f64; 6]; 3],
    mu_oriented: f64,
    point: [f64; 4],
) -> Result<(Matrix3<f64>, Matrix3<f64>, f64), DefiniteError> {
    let q = q_at(f, mu_oriented);
    let se = q.symmetric_eigen();
    let mut sqrt_q = Matrix3::zeros();
    for k in 0..3 {
        let ev = se.eigenvalues[k];
        if ev < 1e-10 {
            return Err(DefiniteError::DegenerateQ { point, eig: ev });
        }
        let v = se.eigenvectors.column(k);
        sqrt_q += ev.sqrt() * v * v.transpose();
    }
    let tr = sqrt_q.trace();
    // Q_A = Q(μ_ref) (3/tr)², so √Q_A = √Q(μ_ref) · 3/tr.
    let sqrt_qa = sqrt_q * (3.0 / tr);
    let psi = Matrix3::identity() - sqrt_qa;
    Ok((psi, sqrt_qa, tr))
}

/// Pointwise Σ components (increasing pair basis) for a given sign.
pub fn sigma_at(
    f: &[[f64; 6]; 3],
    mu_oriented: f64,
    sign: i8,
    point: [f64; 4],
) -> Result<[[f64; 6]; 3], DefiniteError> {
    let (_, sqrt_qa, _) = psi_at(f, mu_oriented, point)?;
    let inv = sqrt_qa
        .try_inverse()
        .ok_or(DefiniteError::DegenerateQ { point, eig: 0.0 })?;
    let mut out = [[0.0; 6]; 3];
    for i in 0..3 {
        for c in 0..6 {
            let mut s = 0.0;
            for j in 0..3 {
                s += inv[(i, j)] * f[j][c];
            }
            out[i][c] = sign as f64 * s;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::so3conn::levi_civita_plus;
    use crate::symcalc::{mul, pow, sub};

    fn assert_zero(e: &Expr, chart: &Chart, seed: u64) {
        let r = is_identically_zero(e, chart, seed).unwrap();
        assert!(r.is_zero, "not zero: {}", e);
    }

    #[test]
    fn hyperbolic_q_is_identity_for_hyperbolic_volume() {
        let g = Metric::hyperbolic_half_space();
        let a = levi_civita_plus(&g).unwrap();
        let f = a.curvature().unwrap();
        let q = q_matrix(&f, &g.volume_form()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { Expr::one() } else { Expr::zero() };
                assert_zero(&sub(q[i][j].clone(), expect), &g.chart, 3);
            }
        }
    }

    #[test]
    fn q_scaling_law() {
        // Q(λμ) = Q(μ)/λ
        let g = Metric::hyperbolic_half_space();
        let f = levi_civita_plus(&g).unwrap().curvature().unwrap();
        let mu = g.volume_form();
        let lam = Expr::int(4);
        let q1 = q_matrix(&f, &mu.scale(&lam)).unwrap();
        let q0 = q_matrix(&f, &mu).unwrap();
        for i in 0..3 {
            let resid = sub(
                mul([Expr::int(4), q1[i][i].clone()]),
                q0[i][i].clone(),
            );
            assert_zero(&resid, &g.chart, 5);
        }
    }

    #[test]
    fn flat_triple_not_definite_and_zero_connection() {
        let ch = Chart::flat();
        let a = So3Connection::zero(&ch);
        let f = a.curvature().unwrap();
        assert_eq!(is_definite(&f, 2).unwrap(), Definiteness::NotDefinite);
    }

    #[test]
    fn mixed_duality_triple_not_definite() {
        // F1 self-dual, F2 anti-self-dual, F3 self-dual on the flat chart:
        // Q has mixed signs.
        let ch = Chart::flat();
        let mk = |pairs: [(usize, i64); 2]| {
            let mut f = Form::zero(&ch, 2);
            for (idx, s) in pairs {
                f.comps[idx] = Expr::int(s);
            }
            f
        };
        let f = EValuedForm {
            c: [
                mk([(0, 1), (5, 1)]),  // dx01 + dx23, self-dual
                mk([(0, 1), (5, -1)]), // dx01 - dx23, anti-self-dual
                mk([(2, 1), (3, 1)]),  // dx03 + dx12, self-dual
            ],
        };
        assert_eq!(is_definite(&f, 4).unwrap(), Definiteness::NotDefinite);
    }

    #[test]
    fn hyperbolic_full_package() {
        let g0 = Metric::hyperbolic_half_space();
        let a = levi_civita_plus(&g0).unwrap();
        let data = metric_from_connection(&a, 11).unwrap();
        // sign is negative
        assert_eq!(data.sign, -1);
        // g_A equals the hyperbolic metric symbolically
        for i in 0..4 {
            for j in 0..4 {
                assert_zero(
                    &sub(data.g.g[i][j].clone(), g0.g[i][j].clone()),
                    &g0.chart,
                    21,
                );
            }
        }
        // μ_A is the hyperbolic volume
        assert_zero(
            &sub(data.mu.comps[0].clone(), g0.volume_form().comps[0].clone()),
            &g0.chart,
            22,
        );
        // Ψ = 0 and F_i = -Σ_i
        let f = a.curvature().unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_zero(&data.psi[i][j], &g0.chart, 23);
            }
            let resid = f.c[i].add(&data.sigma.c[i]);
            for c in &resid.comps {
                assert_zero(c, &g0.chart, 24);
            }
        }
        // tr √Q(μ_A) = 3 exactly: Q = Id here
        for i in 0..3 {
            assert_zero(&sub(data.q[i][i].clone(), Expr::one()), &g0.chart, 25);
        }
    }

    #[test]
    fn sphere_package_positive_sign() {
        let g0 = Metric::round_sphere();
        let a = levi_civita_plus(&g0).unwrap();
        let data = metric_from_connection(&a, 13).unwrap();
        assert_eq!(data.sign, 1);
        for i in 0..4 {
            for j in 0..4 {
                assert_zero(
                    &sub(data.g.g[i][j].clone(), g0.g[i][j].clone()),
                    &g0.chart,
                    31,
                );
            }
        }
    }

    #[test]
    fn sigma_wedge_orthonormality() {
        let g0 = Metric::hyperbolic_half_space();
        let a = levi_civita_plus(&g0).unwrap();
        let data = metric_from_connection(&a, 15).unwrap();
        // Σ_i ∧ Σ_j = 2 δ_ij μ_A (norm √2 convention)
        for i in 0..3 {
            for j in 0..3 {
                let w = data.sigma.c[i].wedge(&data.sigma.c[j]).unwrap();
                let expect = if i == j {
                    mul([Expr::int(2), data.mu.comps[0].clone()])
                } else {
                    Expr::zero()
                };
                assert_zero(&sub(w.comps[0].clone(), expect), &g0.chart, 33);
            }
        }
        // and |Σ_i|_{g_A} = √2: <Σ_i, Σ_i> = 2
        for i in 0..3 {
            let n2 = data.g.inner(&data.sigma.c[i], &data.sigma.c[i]).unwrap();
            assert_zero(&sub(n2, Expr::int(2)), &g0.chart, 34);
        }
    }

    #[test]
    fn scaled_flat_triple_metric_scaling() {
        // Constant-rescaled flat self-dual triple: F_i = c * ω_i gives back
        // the flat metric rescaled per the tr√Q = 3 rule: Q(μ) = c²/λ for
        // μ = λ dx⁰¹²³, so μ_A = c² vol and g_A = c · δ.
        let ch = Chart::flat();
        let c = 4i64;
        let mk = |p1: usize, p2: usize, s: i64| {
            let mut f = Form::zero(&ch, 2);
            f.comps[p1] = Expr::int(c);
            f.comps[p2] = Expr::int(s * c);
            f
        };
        let f = EValuedForm {
            c: [mk(0, 5, 1), mk(1, 4, -1), mk(2, 3, 1)],
        };
        let data = data_from_curvature(&f, 17).unwrap();
        for i in 0..4 {
            let resid = sub(data.g.g[i][i].clone(), Expr::int(c));
            assert_zero(&resid, &ch, 35);
        }
        assert_eq!(data.sign, 1);
    }

    #[test]
    fn canonical_volume_rescaling_examples() {
        // Q(μ_ref) = Id → μ_A = μ_ref; Q(μ_ref) = 4 Id → μ_A = 4 μ_ref.
        let ch = Chart::flat();
        let mk = |p1: usize, p2: usize, s: i64, c: i64| {
            let mut f = Form::zero(&ch, 2);
            f.comps[p1] = Expr::int(c);
            f.comps[p2] = Expr::int(s * c);
            f
        };
        let f1 = EValuedForm {
            c: [mk(0, 5, 1, 1), mk(1, 4, -1, 1), mk(2, 3, 1, 1)],
        };
        let mu = coordinate_volume(&ch);
        let mu_a = canonical_volume(&f1, &mu, 1).unwrap();
        assert_zero(&sub(mu_a.comps[0].clone(), Expr::one()), &ch, 36);
        let f2 = EValuedForm {
            c: [mk(0, 5, 1, 2), mk(1, 4, -1, 2), mk(2, 3, 1, 2)],
        };
        let mu_a2 = canonical_volume(&f2, &mu, 1).unwrap();
        assert_zero(&sub(mu_a2.comps[0].clone(), Expr::int(4)), &ch, 37);
    }

    #[test]
    fn sign_invariant_under_frame_changes() {
        let g0 = Metric::hyperbolic_half_space();
        let a = levi_civita_plus(&g0).unwrap();
        // SO(3) rotation (3-4-5 exact) and an orientation-reversing O(3)
        // change; components transform as a pseudovector, det(R) · R.
        let c = Expr::rational(3, 5);
        let s = Expr::rational(4, 5);
        let rot = [
            [c.clone(), s.clone(), Expr::zero()],
            [symcalc::neg(s), c, Expr::zero()],
            [Expr::zero(), Expr::zero(), Expr::one()],
        ];
        let a_rot = a.rotate_frame(&rot);
        assert_eq!(connection_sign(&a_rot, 41).unwrap(), -1);
        // reflection diag(1, 1, -1), det = -1: A' = det(R) R A
        let refl = [
            [Expr::int(-1), Expr::zero(), Expr::zero()],
            [Expr::zero(), Expr::int(-1), Expr::zero()],
            [Expr::zero(), Expr::zero(), Expr::one()],
        ];
        let a_ref = a.rotate_frame(&refl);
        assert_eq!(connection_sign(&a_ref, 43).unwrap(), -1);
    }
}

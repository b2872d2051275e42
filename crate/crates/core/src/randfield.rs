//! Seeded random symbolic test data: polynomial scalars, forms, triples,
//! vector fields and matrices. Used by the unit batteries and by the
//! verification suites, so runs are reproducible from a seed.

use nalgebra::Matrix3;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::quad::bump_window;
use crate::riemann4::{Form, SymTensor2};
use crate::so3conn::EValuedForm;
use crate::symcalc::{self, Chart, Expr};

/// Random small-coefficient polynomial of degree ≤ 2 in the coordinates.
pub fn random_poly(chart: &Chart, rng: &mut ChaCha8Rng) -> Expr {
    let mut terms = Vec::new();
    let n_terms = rng.gen_range(1..=3);
    for _ in 0..n_terms {
        let c = Expr::rational(rng.gen_range(-3i64..=3), rng.gen_range(1i64..=2));
        let v = rng.gen_range(0usize..4);
        let p = rng.gen_range(0i64..=2);
        let v2 = rng.gen_range(0usize..4);
        let p2 = rng.gen_range(0i64..=1);
        terms.push(symcalc::mul([
            c,
            symcalc::pow(chart.sym(v), p),
            symcalc::pow(chart.sym(v2), p2),
        ]));
    }
    symcalc::add(terms)
}

/// Random windowed scalar (compact support on the chart box).
pub fn random_windowed_scalar(chart: &Chart, rng: &mut ChaCha8Rng) -> Expr {
    symcalc::mul([bump_window(chart), random_poly(chart, rng)])
}

pub fn random_one_form(chart: &Chart, rng: &mut ChaCha8Rng, windowed: bool) -> Form {
    let mut f = Form::zero(chart, 1);
    for c in 0..4 {
        f.comps[c] = if windowed {
            random_windowed_scalar(chart, rng)
        } else {
            random_poly(chart, rng)
        };
    }
    f
}

/// Random E-valued k-form with polynomial (optionally windowed) components.
pub fn random_evform(
    chart: &Chart,
    degree: usize,
    rng: &mut ChaCha8Rng,
    windowed: bool,
) -> EValuedForm {
    let mut out = EValuedForm::zero(chart, degree);
    for i in 0..3 {
        for c in 0..out.c[i].comps.len() {
            out.c[i].comps[c] = if windowed {
                random_windowed_scalar(chart, rng)
            } else {
                random_poly(chart, rng)
            };
        }
    }
    out
}

/// Random vector field (coordinate components).
pub fn random_vector_field(
    chart: &Chart,
    rng: &mut ChaCha8Rng,
    windowed: bool,
) -> [Expr; 4] {
    let mut v: [Expr; 4] = Default::default();
    for c in &mut v {
        *c = if windowed {
            random_windowed_scalar(chart, rng)
        } else {
            random_poly(chart, rng)
        };
    }
    v
}

/// Random symmetric 2-tensor field.
pub fn random_sym_tensor(chart: &Chart, rng: &mut ChaCha8Rng, windowed: bool) -> SymTensor2 {
    let mut entries: Vec<Expr> = Vec::new();
    for _ in 0..10 {
        entries.push(if windowed {
            random_windowed_scalar(chart, rng)
        } else {
            random_poly(chart, rng)
        });
    }
    let mut k = 0;
    let mut m: [[Expr; 4]; 4] = Default::default();
    for i in 0..4 {
        for j in i..4 {
            m[i][j] = entries[k].clone();
            m[j][i] = entries[k].clone();
            k += 1;
        }
    }
    SymTensor2 {
        chart: chart.clone(),
        m,
    }
}

/// Random negative definite symmetric 3×3 matrix, `-(A Aᵀ + εI)`.
pub fn random_negative_definite(rng: &mut ChaCha8Rng) -> Matrix3<f64> {
    let a = Matrix3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    -(a * a.transpose() + Matrix3::identity() * rng.gen_range(0.05..1.0))
}

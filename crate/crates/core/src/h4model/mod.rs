//! The hyperbolic half-space model of the gauge-fixing operator and the
//! 0-calculus diagnostics: frames, J tables, Π_C, the normal-operator
//! identity, indicial polynomials and roots, 0-symbols, and grid numerics
//! for the curl-coupling bound and the coercivity probe.

pub mod frames;
pub mod grid;
pub mod zeroop;

pub use frames::{
    alpha, dc_op, j_apply, laplacian_plus_r_op, model_codifferential, model_connection,
    model_op, model_projector, model_so3, normal_operator, normal_operator_sides, pi_c_op,
    pi_dc_op, r_op_apply, scalar_laplacian, scalar_laplacian_op, sd_frame, TripleSection,
    J_TABLE,
};
pub use grid::{
    coercivity_probe, r_bound_check, CoercivityReport, GridConfig, GridSection, ProbeOperator,
    RBoundReport,
};
pub use zeroop::{poly_real_roots, IndicialFamily, NcPoly, ZeroOp};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Indicial data of a 0-operator: the polynomial family det I(λ) and its
/// roots with multiplicities.
pub struct IndicialData {
    pub det_coeffs: Vec<crate::symcalc::Q>,
    pub roots: Vec<(f64, usize)>,
}

/// Indicial roots of a square 0-operator.
pub fn indicial_roots(op: &ZeroOp) -> IndicialData {
    let fam = op.indicial_family();
    let det = fam.det_poly();
    let roots = poly_real_roots(&det);
    IndicialData {
        det_coeffs: det,
        roots,
    }
}

/// Indicial roots of a possibly non-square operator: λ where I(λ) loses
/// injectivity, located by a fine scan of the smallest singular value.
pub fn indicial_kernel_roots(op: &ZeroOp, lo: f64, hi: f64) -> Vec<f64> {
    let fam = op.indicial_family();
    let mut out = Vec::new();
    let steps = ((hi - lo) * 10.0).round() as i64;
    for k in 0..=steps {
        let lam = lo + k as f64 / 10.0;
        let m = fam.eval(lam);
        let svd = m.svd(false, false);
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        if smin < 1e-9 {
            out.push(lam);
        }
    }
    out
}

/// Sampled 0-ellipticity verdict: the principal 0-symbol must be injective
/// on the unit sphere of (ξ, η) directions.
pub fn is_zero_elliptic(op: &ZeroOp, directions: usize, seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut dirs: Vec<[f64; 4]> = Vec::with_capacity(directions + 8);
    // the coordinate axes first: degeneracies concentrate there
    for k in 0..4 {
        for s in [-1.0, 1.0] {
            let mut v = [0.0; 4];
            v[k] = s;
            dirs.push(v);
        }
    }
    while dirs.len() < directions + 8 {
        let mut v = [0.0f64; 4];
        let mut n2 = 0.0;
        for x in &mut v {
            *x = rng.gen_range(-1.0..1.0);
            n2 += *x * *x;
        }
        if n2 < 1e-4 {
            continue;
        }
        let n = n2.sqrt();
        for x in &mut v {
            *x /= n;
        }
        dirs.push(v);
    }
    for v in dirs {
        let m = op.symbol_matrix(v[0], [v[1], v[2], v[3]]);
        let svd = m.svd(false, false);
        let smin = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::MAX, f64::min);
        if smin < 1e-8 {
            return false;
        }
    }
    true
}

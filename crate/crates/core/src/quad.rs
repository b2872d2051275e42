//! Tensor-product quadrature over a chart box, with two-grid error
//! estimates, and the polynomial window used to compactly support test data.
//!
//! The window `Π_i (1 - t_i²)⁴` vanishes to fourth order on the box
//! boundary, so integration-by-parts identities hold on the box without
//! boundary terms; quadrature error is tracked by comparing two grids.

use crate::par;
use crate::symcalc::{self, Chart, Compiled, EvalError, Expr};

/// Composite Simpson nodes/weights on [lo, hi] with n odd nodes.
fn simpson_axis(lo: f64, hi: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 3 && n % 2 == 1, "Simpson needs an odd node count >= 3");
    let h = (hi - lo) / (n - 1) as f64;
    let nodes: Vec<f64> = (0..n).map(|i| lo + i as f64 * h).collect();
    let weights: Vec<f64> = (0..n)
        .map(|i| {
            let w = if i == 0 || i == n - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect();
    (nodes, weights)
}

/// 4D tensor-product Simpson quadrature over the chart sampling box.
pub struct BoxQuadrature {
    nodes: [Vec<f64>; 4],
    weights: [Vec<f64>; 4],
    n: usize,
}

impl BoxQuadrature {
    pub fn new(chart: &Chart, n: usize) -> BoxQuadrature {
        let boxes = chart.boxes();
        let mut nodes: [Vec<f64>; 4] = Default::default();
        let mut weights: [Vec<f64>; 4] = Default::default();
        for i in 0..4 {
            let (xs, ws) = simpson_axis(boxes[i].0, boxes[i].1, n);
            nodes[i] = xs;
            weights[i] = ws;
        }
        BoxQuadrature { nodes, weights, n }
    }

    /// Integrate a compiled scalar over the box.
    pub fn integrate(&self, f: &Compiled) -> Result<f64, EvalError> {
        let n = self.n;
        let total = n * n * n * n;
        par::try_map_sum(total, |lin| {
            let i0 = lin / (n * n * n);
            let i1 = (lin / (n * n)) % n;
            let i2 = (lin / n) % n;
            let i3 = lin % n;
            let p = [
                self.nodes[0][i0],
                self.nodes[1][i1],
                self.nodes[2][i2],
                self.nodes[3][i3],
            ];
            let mut scratch = Vec::new();
            let v = f.eval(&p, &mut scratch)?;
            Ok(v * self.weights[0][i0]
                * self.weights[1][i1]
                * self.weights[2][i2]
                * self.weights[3][i3])
        })
    }

    pub fn integrate_expr(&self, chart: &Chart, e: &Expr) -> Result<f64, EvalError> {
        let coords = chart.coords();
        let f = Compiled::new(e, &coords)?;
        self.integrate(&f)
    }
}

/// Integral with a two-grid error estimate: (value on the fine grid,
/// |fine - coarse|).
pub fn integrate_two_grid(
    chart: &Chart,
    e: &Expr,
    n_coarse: usize,
) -> Result<(f64, f64), EvalError> {
    let coarse = BoxQuadrature::new(chart, n_coarse).integrate_expr(chart, e)?;
    let fine = BoxQuadrature::new(chart, 2 * n_coarse - 1).integrate_expr(chart, e)?;
    Ok((fine, (fine - coarse).abs()))
}

/// Smooth polynomial window supported on the chart box: `Π_i (1 - t_i²)⁴`
/// with t_i the box-normalised coordinate. The two shape radii per axis are
/// the half-width (support) and the half-maximum radius ≈ 0.39 half-widths.
pub fn bump_window(chart: &Chart) -> Expr {
    let boxes = chart.boxes();
    let mut factors = Vec::new();
    for i in 0..4 {
        let (lo, hi) = boxes[i];
        let mid = Expr::rational(((lo + hi) * 500.0).round() as i64, 1000);
        let half = Expr::rational(((hi - lo) * 500.0).round() as i64, 1000);
        let t = symcalc::mul([
            symcalc::sub(chart.sym(i), mid),
            symcalc::pow(half, -1),
        ]);
        let w = symcalc::pow(
            symcalc::sub(Expr::one(), symcalc::pow(t, 2)),
            4,
        );
        factors.push(w);
    }
    symcalc::mul(factors)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simpson_is_exact_on_cubics() {
        let chart = Chart::flat();
        let q = BoxQuadrature::new(&chart, 5);
        // ∫ over [-1,1]^4 of x1^2 * x2^0 ... = (2/3) * 2^3
        let e = symcalc::pow(chart.sym(0), 2);
        let v = q.integrate_expr(&chart, &e).unwrap();
        assert!((v - 16.0 / 3.0).abs() < 1e-12, "got {}", v);
    }

    #[test]
    fn window_vanishes_on_boundary() {
        let chart = Chart::flat();
        let w = bump_window(&chart);
        let on_face = chart.eval(&w, &[1.0, 0.3, -0.2, 0.5]).unwrap();
        assert!(on_face.abs() < 1e-14);
        let inside = chart.eval(&w, &[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((inside - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_grid_estimate_shrinks() {
        let chart = Chart::flat();
        let e = symcalc::mul([
            bump_window(&chart),
            symcalc::sin(chart.sym(1)),
            symcalc::exp(chart.sym(0)),
        ]);
        let (_, err1) = integrate_two_grid(&chart, &e, 5).unwrap();
        let (_, err2) = integrate_two_grid(&chart, &e, 9).unwrap();
        assert!(err2 < err1);
    }
}

//! Charts: named coordinates, sampling boxes and the zero-testing policy.

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::expr::{Expr, EvalError};
use super::parse::{parse_with, ParseError};
use super::poly::symbolic_zero;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum ChartError {
    #[error("coordinate names must be distinct")]
    DuplicateCoordinates,
    #[error("boundary coordinate `{0}` is not a chart coordinate")]
    UnknownBoundary(String),
    #[error("sampler could not find a regular point after {0} retries")]
    SamplerExhausted(usize),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

struct ChartInner {
    coords: [String; 4],
    boundary: Option<usize>,
    boxes: [(f64, f64); 4],
    /// Expressions required to stay positive on the domain (ball charts etc).
    positives: Vec<Expr>,
}

/// A 4-dimensional coordinate chart with a sampling box for numeric checks.
#[derive(Clone)]
pub struct Chart {
    inner: Arc<ChartInner>,
}

impl Chart {
    pub fn new(
        coords: [&str; 4],
        boundary: Option<&str>,
        boxes: [(f64, f64); 4],
    ) -> Result<Chart, ChartError> {
        for i in 0..4 {
            for j in (i + 1)..4 {
                if coords[i] == coords[j] {
                    return Err(ChartError::DuplicateCoordinates);
                }
            }
        }
        let boundary = match boundary {
            None => None,
            Some(b) => Some(
                coords
                    .iter()
                    .position(|c| *c == b)
                    .ok_or_else(|| ChartError::UnknownBoundary(b.to_string()))?,
            ),
        };
        Ok(Chart {
            inner: Arc::new(ChartInner {
                coords: coords.map(|s| s.to_string()),
                boundary,
                boxes,
                positives: Vec::new(),
            }),
        })
    }

    /// Add a domain-positivity constraint (e.g. the ball chart's 1-|x|^2).
    pub fn with_positive(self, e: Expr) -> Chart {
        let mut inner = ChartInner {
            coords: self.inner.coords.clone(),
            boundary: self.inner.boundary,
            boxes: self.inner.boxes,
            positives: self.inner.positives.clone(),
        };
        inner.positives.push(e);
        Chart {
            inner: Arc::new(inner),
        }
    }

    /// Half-space chart (rho, y1, y2, y3) with boundary rho, the model
    /// domain for all hyperbolic computations.
    pub fn half_space() -> Chart {
        Chart::new(
            ["rho", "y1", "y2", "y3"],
            Some("rho"),
            [(0.2, 2.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap()
    }

    /// Unit-ball chart (x1..x4) sampled away from the boundary sphere.
    pub fn ball() -> Chart {
        let r = 0.4;
        let chart = Chart::new(
            ["x1", "x2", "x3", "x4"],
            None,
            [(-r, r), (-r, r), (-r, r), (-r, r)],
        )
        .unwrap();
        let bdf = chart.parse("(1 - x1^2 - x2^2 - x3^2 - x4^2)/2").unwrap();
        chart.with_positive(bdf)
    }

    /// Flat chart (x1..x4) on a centred box.
    pub fn flat() -> Chart {
        Chart::new(
            ["x1", "x2", "x3", "x4"],
            None,
            [(-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0), (-1.0, 1.0)],
        )
        .unwrap()
    }

    pub fn coords(&self) -> [&str; 4] {
        [
            &self.inner.coords[0],
            &self.inner.coords[1],
            &self.inner.coords[2],
            &self.inner.coords[3],
        ]
    }
    pub fn coord(&self, i: usize) -> &str {
        &self.inner.coords[i]
    }
    pub fn coord_index(&self, name: &str) -> Option<usize> {
        self.inner.coords.iter().position(|c| c == name)
    }
    pub fn boundary_index(&self) -> Option<usize> {
        self.inner.boundary
    }
    pub fn boxes(&self) -> [(f64, f64); 4] {
        self.inner.boxes
    }

    pub fn sym(&self, i: usize) -> Expr {
        Expr::sym(&self.inner.coords[i])
    }

    /// Parse a DSL expression whose symbols must be chart coordinates.
    pub fn parse(&self, text: &str) -> Result<Expr, ParseError> {
        let ok = |s: &str| self.inner.coords.iter().any(|c| c == s);
        parse_with(text, &ok)
    }

    /// Parse allowing extra named parameters besides the coordinates.
    pub fn parse_with_params(&self, text: &str, params: &[&str]) -> Result<Expr, ParseError> {
        let ok = |s: &str| {
            self.inner.coords.iter().any(|c| c == s) || params.contains(&s)
        };
        parse_with(text, &ok)
    }

    pub fn lookup<'p>(&self, p: &'p [f64; 4]) -> impl Fn(&str) -> Option<f64> + 'p {
        let coords = self.inner.coords.clone();
        move |s: &str| coords.iter().position(|c| c == s).map(|i| p[i])
    }

    pub fn eval(&self, e: &Expr, p: &[f64; 4]) -> Result<f64, EvalError> {
        e.eval_with(&self.lookup(p))
    }

    /// Draw a sample point in the box, redrawing away from singular loci.
    pub fn sample(&self, rng: &mut ChaCha8Rng) -> Result<[f64; 4], ChartError> {
        const MAX_RETRIES: usize = 200;
        'outer: for _ in 0..MAX_RETRIES {
            let mut p = [0.0; 4];
            for i in 0..4 {
                let (lo, hi) = self.inner.boxes[i];
                p[i] = rng.gen_range(lo..hi);
            }
            for pos in &self.inner.positives {
                match self.eval(pos, &p) {
                    Ok(v) if v > 1e-6 => {}
                    _ => continue 'outer,
                }
            }
            return Ok(p);
        }
        Err(ChartError::SamplerExhausted(MAX_RETRIES))
    }

    /// Deterministic sample set for a seed.
    pub fn samples(&self, n: usize, seed: u64) -> Result<Vec<[f64; 4]>, ChartError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| self.sample(&mut rng)).collect()
    }
}

impl std::fmt::Debug for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Chart{:?}", self.inner.coords)
    }
}

/// How a zero verdict was reached.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroMethod {
    Symbolic,
    Sampled,
}

#[derive(Debug, Clone)]
pub struct ZeroReport {
    pub is_zero: bool,
    pub method: ZeroMethod,
    /// Set when the verdict rests on sampling because symbolic proof failed.
    pub warning: Option<String>,
    /// Worst relative residual seen while sampling (0 for symbolic proofs).
    pub max_rel: f64,
}

pub const ZERO_SAMPLES: usize = 64;
pub const ZERO_REL_TOL: f64 = 1e-10;

/// Zero test: exact rational-function cancellation first, then a seeded
/// 64-point sampling fallback with relative tolerance 1e-10.
pub fn is_identically_zero(e: &Expr, chart: &Chart, seed: u64) -> Result<ZeroReport, ChartError> {
    match symbolic_zero(e) {
        Some(true) => {
            return Ok(ZeroReport {
                is_zero: true,
                method: ZeroMethod::Symbolic,
                warning: None,
                max_rel: 0.0,
            })
        }
        Some(false) | None => {}
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut max_rel = 0.0f64;
    let mut taken = 0usize;
    let mut retries = 0usize;
    while taken < ZERO_SAMPLES {
        let p = chart.sample(&mut rng)?;
        let lookup = chart.lookup(&p);
        match e.eval_mag(&lookup) {
            Ok((v, mag)) => {
                let rel = v.abs() / (1.0 + mag.abs());
                max_rel = max_rel.max(rel);
                taken += 1;
                if rel > ZERO_REL_TOL {
                    return Ok(ZeroReport {
                        is_zero: false,
                        method: ZeroMethod::Sampled,
                        warning: None,
                        max_rel,
                    });
                }
            }
            Err(_) => {
                // Singular point: redraw, bounded.
                retries += 1;
                if retries > 50 * ZERO_SAMPLES {
                    return Err(ChartError::SamplerExhausted(retries));
                }
            }
        }
    }
    Ok(ZeroReport {
        is_zero: true,
        method: ZeroMethod::Sampled,
        warning: Some(
            "symbolic proof failed; zero verdict rests on 64-point sampling at 1e-10".to_string(),
        ),
        max_rel,
    })
}

/// Convenience map-based evaluation used by tests.
pub fn eval_at(e: &Expr, binds: &BTreeMap<String, f64>) -> Result<f64, EvalError> {
    e.eval_with(&|s| binds.get(s).copied())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symcalc::expr::{add, mul, pow, sin, cos, sub, Expr};

    #[test]
    fn trig_identity_zero_by_sampling() {
        let chart = Chart::flat();
        let x = Expr::sym("x1");
        let e = sub(
            add([pow(sin(x.clone()), 2), pow(cos(x.clone()), 2)]),
            Expr::one(),
        );
        let r = is_identically_zero(&e, &chart, 7).unwrap();
        assert!(r.is_zero);
        assert_eq!(r.method, ZeroMethod::Sampled);
        assert!(r.warning.is_some());
    }

    #[test]
    fn structural_cancellation_is_symbolic() {
        let chart = Chart::half_space();
        let rho = Expr::sym("rho");
        let e = sub(rho.clone(), rho.clone());
        let r = is_identically_zero(&e, &chart, 7).unwrap();
        assert!(r.is_zero);
        assert_eq!(r.method, ZeroMethod::Symbolic);
    }

    #[test]
    fn tiny_scaled_coordinate_passes_with_warning() {
        let chart = Chart::half_space();
        let e = mul([
            Expr::rational(1, 1_000_000_000_000_00),
            mul([Expr::rational(1, 10), Expr::sym("rho")]),
        ]);
        // 1e-14 * (rho/10): nonzero symbolically, but below tolerance.
        let r = is_identically_zero(&e, &chart, 3).unwrap();
        assert!(r.is_zero);
        assert_eq!(r.method, ZeroMethod::Sampled);
        assert!(r.warning.is_some());
    }

    #[test]
    fn ball_sampler_respects_domain() {
        let chart = Chart::ball();
        for p in chart.samples(32, 5).unwrap() {
            let norm2: f64 = p.iter().map(|x| x * x).sum();
            assert!(norm2 < 1.0);
        }
    }

    #[test]
    fn genuine_nonzero_detected() {
        let chart = Chart::half_space();
        let e = add([Expr::sym("rho"), Expr::one()]);
        let r = is_identically_zero(&e, &chart, 11).unwrap();
        assert!(!r.is_zero);
    }
}
